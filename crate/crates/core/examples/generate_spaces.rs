//! Generate the bundled spaces and estimate their Ahlfors exponents.

use besovcap::space::{estimate_ahlfors_q, regularity_constant, AhlforsConfig, Space};

fn main() -> besovcap::Result<()> {
    let spaces = [
        (Space::Interval, 8),
        (Space::Cantor, 8),
        (Space::Carpet, 3),
        (Space::Gasket, 6),
        (Space::Snowflake { gamma: 0.5 }, 8),
    ];
    println!("{:<10} {:>6} {:>8} {:>8} {:>8} {:>6}", "space", "points", "min_gap", "Q_hat", "Q", "C");
    for (space, level) in spaces {
        let cloud = space.build(level)?;
        let fit = estimate_ahlfors_q(&cloud, &AhlforsConfig::default())?;
        let q = space.analytic_dimension();
        println!(
            "{:<10} {:>6} {:>8.5} {:>8.4} {:>8.4} {:>6.2}{}",
            space.name(),
            cloud.len(),
            cloud.min_gap(),
            fit.q_hat,
            q,
            regularity_constant(&cloud, q),
            fit.flag.map(|f| format!("  ({f:?})")).unwrap_or_default()
        );
    }
    Ok(())
}
