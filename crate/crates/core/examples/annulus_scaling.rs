//! Annulus capacities in the three regimes of `p theta` against `Q` on the interval.

use besovcap::caplab::{annulus_experiment, case_tag, ExperimentParams};
use besovcap::cli::{center_point, default_annulus_grid};
use besovcap::energy::SolverConfig;
use besovcap::space::gen_interval;

fn main() -> besovcap::Result<()> {
    let cloud = gen_interval(10)?;
    let x0 = center_point(&cloud);
    for theta in [0.75, 0.5, 0.25] {
        let params = ExperimentParams { p: 2.0, theta, q: 1.0, solver: SolverConfig::default() };
        let tag = case_tag(params.p, theta, params.q)?;
        let report = annulus_experiment(&cloud, x0, &default_annulus_grid(&cloud, tag), &params)?;
        println!("theta = {theta}: case {}, regressor {}", tag as u8, report.regressor);
        for row in &report.rows {
            println!(
                "  r = {:.5}  R = {:.5}  cap = {:.5}  bound = {:.5}  test energy = {:.5}",
                row.r, row.big_r, row.capacity, row.predicted, row.testfn_energy
            );
        }
        println!(
            "  slope {:.3} vs {:.3}{}",
            report.fitted_exponent.unwrap_or(f64::NAN),
            report.target_exponent,
            report.alternative_exponent.map(|a| format!(" (or {a:.3})")).unwrap_or_default()
        );
    }
    Ok(())
}
