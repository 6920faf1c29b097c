//! Capacities of opposite quarter segments against the content lower bound.

use besovcap::caplab::{loewner_experiment, quarter_segments, ExperimentParams};
use besovcap::energy::SolverConfig;
use besovcap::space::gen_interval;

fn main() -> besovcap::Result<()> {
    let cloud = gen_interval(9)?;
    let pairs = [0.8, 0.4, 0.2, 0.1]
        .iter()
        .map(|&r| quarter_segments(&cloud, 0.45 - r / 2.0, r))
        .collect::<besovcap::Result<Vec<_>>>()?;
    let params = ExperimentParams { p: 2.0, theta: 0.5, q: 1.0, solver: SolverConfig::default() };
    let report = loewner_experiment(&cloud, &pairs, 0.5, &params)?;
    for row in &report.rows {
        println!(
            "R = {:.3}: cap {:.4}, content E {:.4}, F {:.4}, bound {:.4}, ratio {:.3}",
            row.big_r, row.capacity, row.content_e, row.content_f, row.lower_bound, row.ratio
        );
    }
    println!("c in [{:.3}, {:.3}], spread {:.3}", report.c_min.unwrap_or(0.0), report.c_max.unwrap_or(0.0), report.spread.unwrap_or(f64::NAN));
    Ok(())
}
