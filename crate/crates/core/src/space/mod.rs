//! Finitely sampled compact metric measure spaces.
//!
//! A [`PointCloud`] carries the sample points, a distance oracle, per-point
//! masses and the diameter. Every bundled generator rescales its sample to
//! diameter [`TARGET_DIAM`], so all clouds satisfy `0 < diam < 1`.

mod ahlfors;
mod generators;
mod io;

pub use ahlfors::{estimate_ahlfors_q, regularity_constant, AhlforsConfig, AhlforsFit, FitFlag};
pub use generators::{
    gen_cantor, gen_interval, gen_sierpinski_carpet, gen_sierpinski_gasket,
    gen_snowflake_interval, Space, MAX_POINTS,
};
pub use io::CloudFile;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Diameter every generator normalizes to.
pub const TARGET_DIAM: f64 = 0.9;

/// How distances between sample points are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    /// `d(x, y) = |x - y|^gamma` with `0 < gamma <= 1`.
    Snowflake,
    /// Full row-major distance matrix.
    ExplicitMatrix,
}

/// A sample point as stored on disk: coordinates, or a label for matrix clouds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Coords(Vec<f64>),
    Symbol(String),
}

#[derive(Clone, Debug)]
enum Geometry {
    Coords {
        dim: usize,
        coords: Vec<f64>,
        gamma: f64,
    },
    Matrix {
        labels: Vec<String>,
        dist: Vec<f64>,
    },
}

/// Finite sample of a compact metric measure space `(Z, d, nu)`.
///
/// Immutable after construction; all queries take `&self`.
#[derive(Debug)]
pub struct PointCloud {
    kind: MetricKind,
    geometry: Geometry,
    weights: Vec<f64>,
    diam: f64,
    min_gap: OnceLock<f64>,
    resolution: OnceLock<f64>,
}

impl Clone for PointCloud {
    fn clone(&self) -> Self {
        PointCloud {
            kind: self.kind,
            geometry: self.geometry.clone(),
            weights: self.weights.clone(),
            diam: self.diam,
            min_gap: self.min_gap.clone(),
            resolution: self.resolution.clone(),
        }
    }
}

/// Above this size a supplied diameter is trusted rather than recomputed.
const EXACT_DIAM_POINTS: usize = 8192;

/// Relative tolerance used when comparing a distance with a ball radius.
pub const RADIUS_SLACK: f64 = 1e-12;

/// Ball `B(center, radius)` in a cloud, open or closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallQuery {
    pub center: usize,
    pub radius: f64,
    pub closed: bool,
}

impl BallQuery {
    pub fn closed(center: usize, radius: f64) -> Self {
        BallQuery { center, radius, closed: true }
    }

    pub fn open(center: usize, radius: f64) -> Self {
        BallQuery { center, radius, closed: false }
    }

    /// Membership with a relative slack of [`RADIUS_SLACK`], so that sample
    /// points sitting exactly on the sphere are not lost to rounding.
    #[inline]
    fn contains(&self, d: f64) -> bool {
        if self.closed {
            d <= self.radius * (1.0 + RADIUS_SLACK)
        } else {
            d < self.radius * (1.0 - RADIUS_SLACK)
        }
    }
}

impl PointCloud {
    /// Euclidean (`gamma = 1`) or snowflaked coordinate cloud.
    ///
    /// `coords` is row-major with `dim` entries per point. The diameter is
    /// computed exactly from all pairs.
    pub fn from_coords(dim: usize, coords: Vec<f64>, gamma: f64, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return invalid("coordinate buffer length must be a multiple of dim");
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return invalid(format!("snowflake exponent gamma = {gamma} must lie in (0, 1]"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("coordinates must be finite");
        }
        let n = coords.len() / dim;
        let kind = if gamma == 1.0 { MetricKind::Euclidean } else { MetricKind::Snowflake };
        let geometry = Geometry::Coords { dim, coords, gamma };
        Self::assemble(kind, geometry, n, weights, None)
    }

    /// Same as [`from_coords`](Self::from_coords) but with a diameter known
    /// in closed form, skipping the quadratic scan.
    pub(crate) fn from_coords_with_diam(
        dim: usize,
        coords: Vec<f64>,
        gamma: f64,
        weights: Vec<f64>,
        diam: f64,
    ) -> Result<Self> {
        let n = coords.len() / dim;
        let kind = if gamma == 1.0 { MetricKind::Euclidean } else { MetricKind::Snowflake };
        let geometry = Geometry::Coords { dim, coords, gamma };
        Self::assemble(kind, geometry, n, weights, Some(diam))
    }

    /// Cloud given by an explicit `n x n` row-major distance matrix.
    pub fn from_matrix(labels: Vec<String>, dist: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n * n {
            return invalid(format!("distance matrix has {} entries, expected {}", dist.len(), n * n));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return invalid(format!("distance matrix diagonal entry {i} is nonzero"));
            }
            for j in (i + 1)..n {
                let (a, b) = (dist[i * n + j], dist[j * n + i]);
                if !(a.is_finite() && a > 0.0) {
                    return invalid(format!("distance ({i}, {j}) must be positive and finite"));
                }
                if (a - b).abs() > 1e-12 * a.max(b) {
                    return invalid(format!("distance matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        let geometry = Geometry::Matrix { labels, dist };
        Self::assemble(MetricKind::ExplicitMatrix, geometry, n, weights, None)
    }

    fn assemble(
        kind: MetricKind,
        geometry: Geometry,
        n: usize,
        weights: Vec<f64>,
        diam: Option<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return invalid("a cloud needs at least one point");
        }
        if weights.len() != n {
            return invalid(format!("{} weights for {} points", weights.len(), n));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("weights must be strictly positive and finite");
        }
        let mut cloud = PointCloud {
            kind,
            geometry,
            weights,
            diam: 0.0,
            min_gap: OnceLock::new(),
            resolution: OnceLock::new(),
        };
        // a supplied diameter is the analytic value; rounded distances may
        // exceed it, so measure exactly where affordable
        cloud.diam = match diam {
            Some(d) if n > EXACT_DIAM_POINTS => d.max(cloud.double_sweep()),
            _ => cloud.max_pairwise_distance(),
        };
        if n > 1 && !(cloud.diam > 0.0) {
            return invalid("all points coincide");
        }
        if cloud.diam >= 1.0 {
            return invalid(format!("diameter {} must be < 1", cloud.diam));
        }
        Ok(cloud)
    }

    /// Farthest point from the farthest point of index 0.
    fn double_sweep(&self) -> f64 {
        let far = |i: usize| (0..self.len()).map(|j| (j, self.dist(i, j))).fold((i, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        far(far(0).0).1
    }

    fn max_pairwise_distance(&self) -> f64 {
        let n = self.len();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.max(self.dist(i, j));
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn metric_kind(&self) -> MetricKind {
        self.kind
    }

    /// Snowflake exponent; `1.0` for Euclidean and matrix clouds.
    pub fn gamma(&self) -> f64 {
        match &self.geometry {
            Geometry::Coords { gamma, .. } => *gamma,
            Geometry::Matrix { .. } => 1.0,
        }
    }

    /// Coordinate dimension, `None` for matrix clouds.
    pub fn dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Coords { dim, .. } => Some(*dim),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn point(&self, i: usize) -> Point {
        match &self.geometry {
            Geometry::Coords { dim, coords, .. } => Point::Coords(coords[i * dim..(i + 1) * dim].to_vec()),
            Geometry::Matrix { labels, .. } => Point::Symbol(labels[i].clone()),
        }
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Coords { dim, coords, .. } => Some(&coords[i * dim..(i + 1) * dim]),
            Geometry::Matrix { .. } => None,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Distance between sample points `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.geometry {
            Geometry::Coords { dim, coords, gamma } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                let e = if *dim == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                };
                if *gamma == 1.0 {
                    e
                } else {
                    e.powf(*gamma)
                }
            }
            Geometry::Matrix { dist, .. } => dist[i * self.weights.len() + j],
        }
    }

    /// Smallest distance between two distinct sample points (`0` for a singleton).
    pub fn min_gap(&self) -> f64 {
        *self.min_gap.get_or_init(|| {
            let n = self.len();
            let mut m = f64::INFINITY;
            for i in 0..n {
                for j in (i + 1)..n {
                    m = m.min(self.dist(i, j));
                }
            }
            if m.is_finite() {
                m
            } else {
                0.0
            }
        })
    }

    /// Largest nearest-neighbour distance: the finest scale at which the
    /// sample still looks connected.
    pub fn resolution(&self) -> f64 {
        *self.resolution.get_or_init(|| {
            let n = self.len();
            let mut worst = 0.0f64;
            for i in 0..n {
                let mut best = f64::INFINITY;
                for j in 0..n {
                    if j != i {
                        best = best.min(self.dist(i, j));
                    }
                }
                if best.is_finite() {
                    worst = worst.max(best);
                }
            }
            worst
        })
    }

    /// Indices in the ball, ascending. Always contains the center.
    pub fn ball_members(&self, q: &BallQuery) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| i == q.center || q.contains(self.dist(q.center, i)))
            .collect()
    }

    /// `nu(B(center, radius))`.
    pub fn ball_measure(&self, q: &BallQuery) -> f64 {
        (0..self.len())
            .filter(|&i| i == q.center || q.contains(self.dist(q.center, i)))
            .map(|i| self.weights[i])
            .sum()
    }

    /// Distance from point `i` to the nearest member of `set` (`inf` if empty).
    pub fn dist_to_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&j| self.dist(i, j)).fold(f64::INFINITY, f64::min)
    }

    /// Diameter of a subset of sample indices.
    pub fn subset_diam(&self, set: &[usize]) -> f64 {
        let mut m = 0.0f64;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                m = m.max(self.dist(i, j));
            }
        }
        m
    }

    /// Copy of this cloud with every distance multiplied by `lambda`.
    ///
    /// Fails if the scaled diameter would reach 1.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid("scale factor must be positive");
        }
        let geometry = match &self.geometry {
            Geometry::Coords { dim, coords, gamma } => {
                let f = lambda.powf(1.0 / gamma);
                Geometry::Coords {
                    dim: *dim,
                    coords: coords.iter().map(|c| c * f).collect(),
                    gamma: *gamma,
                }
            }
            Geometry::Matrix { labels, dist } => Geometry::Matrix {
                labels: labels.clone(),
                dist: dist.iter().map(|d| d * lambda).collect(),
            },
        };
        let n = self.len();
        Self::assemble(self.kind, geometry, n, self.weights.clone(), Some(self.diam * lambda))
    }

    /// Sub-cloud on the given indices, weights kept as is.
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i >= self.len()) {
            return Err(Error::InvalidArgument("restriction index out of range".into()));
        }
        let weights = idx.iter().map(|&i| self.weights[i]).collect();
        match &self.geometry {
            Geometry::Coords { dim, coords, gamma } => {
                let mut c = Vec::with_capacity(idx.len() * dim);
                for &i in idx {
                    c.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                }
                Self::from_coords(*dim, c, *gamma, weights)
            }
            Geometry::Matrix { labels, dist } => {
                let n = self.len();
                let l = idx.iter().map(|&i| labels[i].clone()).collect();
                let mut d = Vec::with_capacity(idx.len() * idx.len());
                for &i in idx {
                    for &j in idx {
                        d.push(dist[i * n + j]);
                    }
                }
                Self::from_matrix(l, d, weights)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_queries_on_interval() {
        let c = gen_interval(2).unwrap();
        // radius above the diameter catches everything
        assert_eq!(c.ball_members(&BallQuery::open(0, 1.5)), vec![0, 1, 2, 3, 4]);
        // below the smallest gap an open ball is a singleton
        assert_eq!(c.ball_members(&BallQuery::open(3, 0.1)), vec![3]);
        // hand count: points 0.225, 0.45, 0.675 around the middle
        assert_eq!(c.ball_members(&BallQuery::closed(2, 0.225)), vec![1, 2, 3]);
        assert!((c.ball_measure(&BallQuery::closed(1, 2.0)) - c.total_mass()).abs() < 1e-15);
        assert_eq!(c.ball_measure(&BallQuery::open(4, 1e-3)), c.weight(4));
    }

    #[test]
    fn cantor_left_half_measure() {
        let c = gen_cantor(3).unwrap();
        let m = c.ball_measure(&BallQuery::closed(0, 0.9 / 3.0));
        assert!((m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matrix_cloud_validation() {
        let labels = vec!["a".to_string(), "b".to_string()];
        assert!(PointCloud::from_matrix(labels.clone(), vec![0.0, 0.5, 0.4, 0.0], vec![1.0, 1.0]).is_err());
        assert!(PointCloud::from_matrix(labels.clone(), vec![0.0, 1.5, 1.5, 0.0], vec![1.0, 1.0]).is_err());
        let c = PointCloud::from_matrix(labels, vec![0.0, 0.5, 0.5, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(c.dist(0, 1), 0.5);
        assert_eq!(c.metric_kind(), MetricKind::ExplicitMatrix);
    }

    #[test]
    fn rejects_bad_weights_and_large_diameter() {
        assert!(PointCloud::from_coords(1, vec![0.0, 0.5], 1.0, vec![1.0, 0.0]).is_err());
        assert!(PointCloud::from_coords(1, vec![0.0, 1.0], 1.0, vec![1.0, 1.0]).is_err());
        assert!(PointCloud::from_coords(1, vec![0.0, 0.5], 1.2, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn snowflake_distance() {
        let c = PointCloud::from_coords(1, vec![0.0, 0.04], 0.5, vec![1.0, 1.0]).unwrap();
        assert!((c.dist(0, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn scaling_multiplies_distances() {
        let c = gen_snowflake_interval(3, 0.5).unwrap();
        let s = c.scaled(0.5).unwrap();
        for (i, j) in [(0, 1), (2, 7), (3, 5)] {
            assert!((s.dist(i, j) - 0.5 * c.dist(i, j)).abs() < 1e-12);
        }
    }
}
