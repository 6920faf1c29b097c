//! Build the hyperbolic filling of a Cantor sample and print its level structure.

use besovcap::filling::{FillingConfig, FillingGraph};
use besovcap::space::gen_cantor;

fn main() -> besovcap::Result<()> {
    let cloud = gen_cantor(6)?;
    let cfg = FillingConfig::default();
    let (nets, graph) = FillingGraph::from_cloud(&cloud, &cfg)?;
    println!("alpha = {}, tau = {}, depth = {}", cfg.alpha, cfg.tau, graph.depth());
    println!("{:>5} {:>6} {:>12}", "level", "|A_n|", "separation");
    for (n, level) in nets.levels.iter().enumerate() {
        println!("{:>5} {:>6} {:>12.6}", n, level.len(), nets.separation(n));
    }
    let max_degree = (0..graph.num_vertices()).map(|v| graph.degree(v)).max().unwrap_or(0);
    println!("{} vertices, {} edges, max degree {}", graph.num_vertices(), graph.num_edges(), max_degree);
    Ok(())
}
