//! Weak quasisymmetry constants across refinement levels for a snowflake
//! identity and a kinked map, with the trend verdicts.

use besovcap::qs::{kink_map, qs_verdict, snowflake_identity, weak_qs_constant, LevelResult, SampledMap, TripleScan};

fn scan(name: &str, maps: impl Iterator<Item = (u32, SampledMap)>) -> besovcap::Result<()> {
    let mut levels = Vec::new();
    for (k, map) in maps {
        let est = weak_qs_constant(&map, &TripleScan::default())?;
        println!("{name} k = {k}: H = {:.4} at {:?}", est.h_hat, est.worst);
        levels.push(LevelResult { level: k, h_hat: est.h_hat, morphism_sup: None, detector: None });
    }
    println!("{name}: {:?}\n", qs_verdict(&levels).verdict);
    Ok(())
}

fn main() -> besovcap::Result<()> {
    scan("snowflake identity", (4..=7).map(|k| (k, snowflake_identity(k, 0.5).unwrap())))?;
    scan("kink", (4..=7).map(|k| (k, kink_map(k).unwrap())))?;
    scan("kink inverse", (4..=8).map(|k| (k, kink_map(k).unwrap().inverse())))?;
    Ok(())
}
