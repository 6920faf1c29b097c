//! Besov capacity on the boundary against Newton capacity on the filling for
//! the same pair of plates.

use besovcap::energy::{besov_capacity, newton_capacity, Arena, Condenser, SolverConfig};
use besovcap::filling::{FillingConfig, FillingGraph};
use besovcap::space::gen_interval;
use besovcap::uniformize::{uniformize, UniformParams};

fn main() -> besovcap::Result<()> {
    let cloud = gen_interval(6)?;
    let (theta, p) = (0.5, 2.0);
    let (_, graph) = FillingGraph::from_cloud(&cloud, &FillingConfig::default())?;
    let ug = uniformize(graph, UniformParams::from_theta(2.0, p, theta)?, &cloud)?;
    let solver = SolverConfig::default();
    for (e, f) in [(0..8, 56..65), (0..16, 48..65), (20..28, 36..44)] {
        let (e, f): (Vec<usize>, Vec<usize>) = (e.collect(), f.collect());
        let besov = besov_capacity(&cloud, &Condenser::new(e.clone(), f.clone(), Arena::Cloud)?, theta, p, &solver)?;
        let lift = |s: &[usize]| s.iter().map(|&i| ug.boundary_reps[i]).collect::<Vec<_>>();
        let newton = newton_capacity(&ug, &Condenser::new(lift(&e), lift(&f), Arena::Graph)?, p, &solver)?;
        println!(
            "E = {:?}..{:?}, F = {:?}..{:?}: Besov {:.5} ({} its), Newton {:.5}, ratio {:.3}",
            e[0],
            e[e.len() - 1],
            f[0],
            f[f.len() - 1],
            besov.value,
            besov.iterations,
            newton.value,
            besov.value / newton.value
        );
    }
    Ok(())
}
