//! Uniformize the filling of an interval and check the codimension relation
//! `mu_beta(B(z, r)) ~ r^(beta/eps) nu(B(z, r))`.

use besovcap::filling::{FillingConfig, FillingGraph};
use besovcap::space::gen_interval;
use besovcap::uniformize::{codim_exponent_fit, depth_with_tail, uniformize, CodimConfig, UniformParams};

fn main() -> besovcap::Result<()> {
    let cloud = gen_interval(8)?;
    let (alpha, p) = (2.0, 4.0);
    for ratio in [0.5, 1.0, 2.0] {
        let params = UniformParams::from_beta(alpha, p, ratio * f64::ln(alpha))?;
        let depth = depth_with_tail(&cloud, alpha, params.beta, 1e-6)?;
        let (_, graph) = FillingGraph::from_cloud(&cloud, &FillingConfig { depth: Some(depth), ..Default::default() })?;
        let ug = uniformize(graph, params, &cloud)?;
        let fit = codim_exponent_fit(&ug, &cloud, &CodimConfig::default())?;
        println!(
            "beta/eps = {ratio}: theta = {:.4}, depth {depth}, mu_beta total {:.4}, fitted slope {:.4}",
            params.theta,
            ug.level_masses().iter().sum::<f64>(),
            fit.slope.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
