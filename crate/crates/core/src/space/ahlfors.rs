//! Empirical Ahlfors-regularity exponent by log-log regression of ball masses.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::error::{invalid, Result};
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AhlforsConfig {
    pub n_centers: usize,
    pub min_radii: usize,
    pub seed: u64,
}

impl Default for AhlforsConfig {
    fn default() -> Self {
        AhlforsConfig { n_centers: 32, min_radii: 8, seed: 0 }
    }
}

/// Why a fit should not be trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    TooFewPoints,
    /// Fewer than three octaves between the sample resolution and diam/2.
    InsufficientScales,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AhlforsFit {
    pub q_hat: f64,
    pub residual: f64,
    pub radii: Vec<f64>,
    pub n_centers: usize,
    pub flag: Option<FitFlag>,
}

/// Least-squares slope of `log nu(B(x, r))` against `log r`, pooled over
/// seeded random centers and geometrically spaced radii between twice the
/// sample resolution and half the diameter.
pub fn estimate_ahlfors_q(cloud: &PointCloud, cfg: &AhlforsConfig) -> Result<AhlforsFit> {
    let n = cloud.len();
    if n < 2 || cloud.diam() <= 0.0 {
        return invalid("Ahlfors estimate needs at least two distinct points");
    }
    let mut flag = if n < 16 { Some(FitFlag::TooFewPoints) } else { None };

    let lo = 2.0 * cloud.resolution();
    let hi = 0.5 * cloud.diam();
    let m = cfg.min_radii.max(2);
    let radii: Vec<f64> = if hi / lo >= 8.0 {
        let octaves = (hi / lo).log2();
        let count = m.max(octaves.ceil() as usize + 1);
        (0..count)
            .map(|j| hi * (lo / hi).powf(j as f64 / (count - 1) as f64))
            .collect()
    } else {
        // too few octaves above 2 res: widen down to the resolution and flag
        flag = flag.or(Some(FitFlag::InsufficientScales));
        let lo = cloud.resolution().min(hi / 2.0);
        (0..m).map(|j| hi * (lo / hi).powf(j as f64 / (m - 1) as f64)).collect()
    };

    let centers: Vec<usize> = if n <= cfg.n_centers {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut c = sample(&mut rng, n, cfg.n_centers).into_vec();
        c.sort_unstable();
        c
    };

    let mut xs = Vec::with_capacity(centers.len() * radii.len());
    let mut ys = Vec::with_capacity(xs.capacity());
    let mut by_dist: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &c in &centers {
        by_dist.clear();
        by_dist.extend((0..n).map(|j| (cloud.dist(c, j), cloud.weight(j))));
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &r in &radii {
            // closed ball: all entries with distance <= r
            let k = by_dist.partition_point(|&(d, _)| d <= r);
            let mass: f64 = by_dist[..k].iter().map(|&(_, w)| w).sum();
            xs.push(r.ln());
            ys.push(mass.ln());
        }
    }
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| crate::error::Error::InvalidArgument("degenerate radius grid".into()))?;
    Ok(AhlforsFit {
        q_hat: fit.slope,
        residual: fit.residual,
        radii,
        n_centers: centers.len(),
        flag,
    })
}

/// Smallest `C` with `1/C <= nu(B(x, r)) / r^q <= C` over every center and
/// the dyadic radii `diam 2^-j` down to the smallest gap.
pub fn regularity_constant(cloud: &PointCloud, q: f64) -> f64 {
    let n = cloud.len();
    let gap = cloud.min_gap();
    let radii: Vec<f64> = (0..)
        .map(|j| cloud.diam() * 0.5f64.powi(j))
        .take_while(|&r| r >= gap && r > 0.0)
        .collect();
    let mut c: f64 = 1.0;
    let mut dists: Vec<(f64, f64)> = Vec::with_capacity(n);
    for x in 0..n {
        dists.clear();
        dists.extend((0..n).map(|j| (cloud.dist(x, j), cloud.weight(j))));
        dists.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &r in &radii {
            let k = dists.partition_point(|&(d, _)| d <= r * (1.0 + super::RADIUS_SLACK));
            let ratio = dists[..k].iter().map(|&(_, w)| w).sum::<f64>() / r.powf(q);
            c = c.max(ratio).max(1.0 / ratio);
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_cantor, gen_interval};

    #[test]
    fn interval_is_one_dimensional() {
        let fit = estimate_ahlfors_q(&gen_interval(8).unwrap(), &AhlforsConfig::default()).unwrap();
        assert!(fit.flag.is_none());
        assert!(fit.radii.len() >= 8);
        assert!((fit.q_hat - 1.0).abs() < 0.1, "q_hat = {}", fit.q_hat);
    }

    #[test]
    fn cantor_dimension() {
        let fit = estimate_ahlfors_q(&gen_cantor(8).unwrap(), &AhlforsConfig::default()).unwrap();
        let q = 2f64.ln() / 3f64.ln();
        assert!((fit.q_hat - q).abs() < 0.1, "q_hat = {}", fit.q_hat);
    }

    #[test]
    fn single_scale_cloud_is_flagged() {
        let fit = estimate_ahlfors_q(&gen_interval(1).unwrap(), &AhlforsConfig::default()).unwrap();
        assert!(fit.flag.is_some());
    }

    #[test]
    fn seeded_runs_repeat() {
        let c = gen_cantor(7).unwrap();
        let a = estimate_ahlfors_q(&c, &AhlforsConfig { seed: 9, ..Default::default() }).unwrap();
        let b = estimate_ahlfors_q(&c, &AhlforsConfig { seed: 9, ..Default::default() }).unwrap();
        assert_eq!(a.q_hat.to_bits(), b.q_hat.to_bits());
    }
}
