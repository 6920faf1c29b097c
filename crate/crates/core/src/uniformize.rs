//! Uniformized metric and lifted measures on the filling graph.
//!
//! Edges get the length of the unit interval under the density
//! `exp(-eps * dist_to_root)`, with `eps = ln(alpha)`. Vertex `(n, x)` carries
//! `mu_plus = nu(B(x, alpha^-n))` and `mu_beta = exp(-beta n) mu_plus`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::filling::FillingGraph;
use crate::space::{BallQuery, FitFlag, PointCloud};
use crate::stats::linear_fit;

/// `(eps, beta, p, theta)` tied by `theta = 1 - beta / (eps p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformParams {
    pub epsilon: f64,
    pub beta: f64,
    pub p: f64,
    pub theta: f64,
}

impl UniformParams {
    /// Derives `beta = eps p (1 - theta)` from the smoothness `theta`.
    pub fn from_theta(alpha: f64, p: f64, theta: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return invalid(format!("alpha = {alpha} must exceed 1"));
        }
        if !(p > 1.0 && p.is_finite()) {
            return invalid(format!("p = {p} must exceed 1"));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return invalid(format!("theta = {theta} must lie in (0, 1)"));
        }
        let epsilon = alpha.ln();
        Ok(UniformParams { epsilon, beta: epsilon * p * (1.0 - theta), p, theta })
    }

    /// Derives `theta` from the damping exponent `beta`.
    pub fn from_beta(alpha: f64, p: f64, beta: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return invalid(format!("alpha = {alpha} must exceed 1"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return invalid(format!("beta = {beta} must be positive"));
        }
        if !(p > 1.0 && p.is_finite()) {
            return invalid(format!("p = {p} must exceed 1"));
        }
        let epsilon = alpha.ln();
        let theta = 1.0 - beta / (epsilon * p);
        if !(theta > 0.0 && theta < 1.0) {
            return invalid(format!("beta = {beta} gives theta = {theta} outside (0, 1)"));
        }
        Ok(UniformParams { epsilon, beta, p, theta })
    }

    /// `|theta - (1 - beta / (eps p))|`.
    pub fn theta_residual(&self) -> f64 {
        (self.theta - (1.0 - self.beta / (self.epsilon * self.p))).abs()
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return invalid(format!("beta = {} must be positive", self.beta));
        }
        if !(self.p > 1.0) {
            return invalid(format!("p = {} must exceed 1", self.p));
        }
        if !(self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if self.theta_residual() > 1e-12 {
            return invalid("theta does not match 1 - beta / (eps p)");
        }
        Ok(())
    }
}

/// Length of a vertical edge leaving level `n`: `e^{-eps n} (1 - e^{-eps}) / eps`.
pub fn vertical_edge_length(epsilon: f64, n: usize) -> f64 {
    (-epsilon * n as f64).exp() * (1.0 - (-epsilon).exp()) / epsilon
}

/// Length of a horizontal edge on level `n` (tent profile `n + min(t, 1 - t)`):
/// `2 e^{-eps n} (1 - e^{-eps/2}) / eps`.
pub fn horizontal_edge_length(epsilon: f64, n: usize) -> f64 {
    2.0 * (-epsilon * n as f64).exp() * (1.0 - (-0.5 * epsilon).exp()) / epsilon
}

/// Which ball construction [`UniformizedGraph::boundary_ball_with`] uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryBallMode {
    /// `max(alpha^-n, d_Z(x, z)) < r`.
    #[default]
    Surrogate,
    /// `d_eps(v, rep(z)) < r` by shortest paths; slow, for cross-checks.
    ExactGraph,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformizedGraph {
    pub base: FillingGraph,
    pub params: UniformParams,
    /// Per edge, aligned with `base.edges()`.
    pub edge_lengths: Vec<f64>,
    pub mu_plus: Vec<f64>,
    pub mu_beta: Vec<f64>,
    /// Cloud index to nearest deepest-level vertex.
    pub boundary_reps: Vec<usize>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// Equips `graph` with edge lengths, lifted measures and boundary representatives.
pub fn uniformize(graph: FillingGraph, params: UniformParams, cloud: &PointCloud) -> Result<UniformizedGraph> {
    params.validate()?;
    let eps = params.epsilon;
    if ((graph.alpha.ln() - eps) / eps).abs() > 1e-12 {
        return invalid("epsilon must equal ln(alpha) of the filling");
    }
    let edge_lengths: Vec<f64> = graph
        .edges()
        .iter()
        .map(|&(v, w)| {
            let (a, b) = (graph.vertex_level(v), graph.vertex_level(w));
            if a == b {
                horizontal_edge_length(eps, a)
            } else {
                vertical_edge_length(eps, a.min(b))
            }
        })
        .collect();
    let alpha = graph.alpha;
    let mu_plus: Vec<f64> = graph
        .vertices()
        .iter()
        .map(|v| cloud.ball_measure(&BallQuery::closed(v.point, alpha.powi(-(v.level as i32)))))
        .collect();
    let mu_beta = graph
        .vertices()
        .iter()
        .zip(&mu_plus)
        .map(|(v, m)| (-params.beta * v.level as f64).exp() * m)
        .collect();
    let deepest = graph.level_range(graph.depth());
    let boundary_reps = (0..cloud.len())
        .map(|z| {
            let mut best = deepest.start;
            let mut best_d = f64::INFINITY;
            for v in deepest.clone() {
                let d = cloud.dist(z, graph.vertex(v).point);
                if d < best_d {
                    best_d = d;
                    best = v;
                }
            }
            best
        })
        .collect();
    let mut ug = UniformizedGraph {
        base: graph,
        params,
        edge_lengths,
        mu_plus,
        mu_beta,
        boundary_reps,
        adjacency: Vec::new(),
    };
    ug.index();
    Ok(ug)
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl UniformizedGraph {
    fn index(&mut self) {
        let mut adj = vec![Vec::new(); self.base.num_vertices()];
        for (&(v, w), &l) in self.base.edges().iter().zip(&self.edge_lengths) {
            adj[v].push((w, l));
            adj[w].push((v, l));
        }
        self.adjacency = adj;
    }

    pub fn num_vertices(&self) -> usize {
        self.base.num_vertices()
    }

    pub fn alpha(&self) -> f64 {
        self.base.alpha
    }

    /// Radius `alpha^-n` attached to vertex `v = (n, x)`.
    pub fn vertex_radius(&self, v: usize) -> f64 {
        self.base.alpha.powi(-(self.base.vertex_level(v) as i32))
    }

    /// Weighted shortest-path distances from `source` to every vertex.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let n = self.num_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse((Dist(0.0), source)));
        while let Some(Reverse((Dist(d), v))) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(w, l) in &self.adjacency[v] {
                let nd = d + l;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Reverse((Dist(nd), w)));
                }
            }
        }
        dist
    }

    /// Uniformized distance `d_eps(v, w)`.
    pub fn d_eps(&self, v: usize, w: usize) -> f64 {
        if v == w {
            return 0.0;
        }
        self.distances_from(v)[w]
    }

    /// Finite-depth stand-in for the ball `B_eps(z, r)` around a boundary point.
    pub fn boundary_ball(&self, cloud: &PointCloud, z: usize, r: f64) -> Result<Vec<usize>> {
        self.boundary_ball_with(cloud, z, r, BoundaryBallMode::Surrogate)
    }

    pub fn boundary_ball_with(
        &self,
        cloud: &PointCloud,
        z: usize,
        r: f64,
        mode: BoundaryBallMode,
    ) -> Result<Vec<usize>> {
        if !(r > 0.0 && r <= cloud.diam() * (1.0 + 1e-12)) {
            return invalid(format!("boundary ball radius {r} must lie in (0, diam]"));
        }
        Ok(match mode {
            BoundaryBallMode::Surrogate => (0..self.num_vertices())
                .filter(|&v| {
                    let x = self.base.vertex(v).point;
                    self.vertex_radius(v).max(cloud.dist(x, z)) < r
                })
                .collect(),
            BoundaryBallMode::ExactGraph => {
                let d = self.distances_from(self.boundary_reps[z]);
                (0..self.num_vertices()).filter(|&v| d[v] < r).collect()
            }
        })
    }

    pub fn mu_beta_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&v| self.mu_beta[v]).sum()
    }

    /// Per-level totals of `mu_beta`.
    pub fn level_masses(&self) -> Vec<f64> {
        (0..=self.base.depth())
            .map(|n| self.base.level_range(n).map(|v| self.mu_beta[v]).sum())
            .collect()
    }

    /// Vertex CSV `v_id, level, point_index, mu_plus, mu_beta`.
    pub fn write_vertices_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["v_id", "level", "point_index", "mu_plus", "mu_beta"])?;
        for (i, v) in self.base.vertices().iter().enumerate() {
            out.write_record([
                i.to_string(),
                v.level.to_string(),
                v.point.to_string(),
                self.mu_plus[i].to_string(),
                self.mu_beta[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Edge CSV `v_id, w_id, ell_eps`.
    pub fn write_edges_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["v_id", "w_id", "ell_eps"])?;
        for (&(v, u), l) in self.base.edges().iter().zip(&self.edge_lengths) {
            out.write_record([v.to_string(), u.to_string(), l.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodimConfig {
    pub n_centers: usize,
    pub seed: u64,
    /// Explicit radii; `None` uses the dyadic radii `diam 2^-j` that are at
    /// most `diam / 2` and at least `min_radius_factor` times the sample
    /// resolution.
    pub radii: Option<Vec<f64>>,
    pub min_radius_factor: f64,
}

impl Default for CodimConfig {
    fn default() -> Self {
        CodimConfig { n_centers: 32, seed: 0, radii: None, min_radius_factor: 2.0 }
    }
}

/// Filling depth that resolves every sample point and then repeats the full
/// sample until the neglected mass tail `exp(-beta * extra)` is below `tail_tol`.
///
/// Below the sample spacing every net is the whole sample, so these copy levels
/// are exactly the deeper levels of the filling of the sampled space.
pub fn depth_with_tail(cloud: &PointCloud, alpha: f64, beta: f64, tail_tol: f64) -> Result<usize> {
    if !(beta > 0.0) || !(tail_tol > 0.0 && tail_tol < 1.0) {
        return invalid("depth_with_tail needs beta > 0 and tail_tol in (0, 1)");
    }
    let extra = ((1.0 / tail_tol).ln() / beta).ceil() as usize;
    Ok(crate::filling::default_depth(cloud, alpha) + extra)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodimFit {
    /// `None` when the fit was refused.
    pub slope: Option<f64>,
    pub residual: Option<f64>,
    pub n_samples: usize,
    pub radii: Vec<f64>,
    pub flag: Option<FitFlag>,
}

/// Regresses `log(mu_beta(B_eps(z, r)) / nu(B(z, r)))` on `log r` over random
/// boundary centers. The slope should approach `beta / eps`.
pub fn codim_exponent_fit(ug: &UniformizedGraph, cloud: &PointCloud, cfg: &CodimConfig) -> Result<CodimFit> {
    let floor = cfg.min_radius_factor * cloud.resolution();
    let radii: Vec<f64> = match &cfg.radii {
        Some(r) => r.clone(),
        None => (1..64).map(|j| cloud.diam() * 0.5f64.powi(j)).take_while(|&r| r >= floor).collect(),
    };
    if radii.len() < 4 {
        return Ok(CodimFit {
            slope: None,
            residual: None,
            n_samples: 0,
            radii,
            flag: Some(FitFlag::InsufficientScales),
        });
    }
    let n = cloud.len();
    let centers: Vec<usize> = if n <= cfg.n_centers {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut c = sample(&mut rng, n, cfg.n_centers).into_vec();
        c.sort_unstable();
        c
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &z in &centers {
        for &r in &radii {
            let ball = ug.boundary_ball(cloud, z, r)?;
            let lifted = ug.mu_beta_of(&ball);
            let base = cloud.ball_measure(&BallQuery::open(z, r));
            if lifted > 0.0 && base > 0.0 {
                xs.push(r.ln());
                ys.push((lifted / base).ln());
            }
        }
    }
    let fit = linear_fit(&xs, &ys);
    Ok(CodimFit {
        slope: fit.map(|f| f.slope),
        residual: fit.map(|f| f.residual),
        n_samples: xs.len(),
        radii,
        flag: fit.is_none().then_some(FitFlag::InsufficientScales),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::FillingConfig;
    use crate::space::gen_interval;

    fn small() -> (PointCloud, UniformizedGraph) {
        let c = gen_interval(3).unwrap();
        let (_, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        let params = UniformParams::from_theta(2.0, 2.0, 0.5).unwrap();
        let ug = uniformize(g, params, &c).unwrap();
        (c, ug)
    }

    #[test]
    fn closed_form_edge_lengths() {
        let eps = 2f64.ln();
        assert!((vertical_edge_length(eps, 1) - 0.25 / eps).abs() < 1e-15);
        assert!((vertical_edge_length(eps, 1) - 0.360_674).abs() < 1e-6);
        // quadrature of exp(-eps (n + min(t, 1 - t))) over [0, 1]
        let n = 2;
        let m = 200_000;
        let quad: f64 = (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) / m as f64;
                (-eps * (n as f64 + t.min(1.0 - t))).exp()
            })
            .sum::<f64>()
            / m as f64;
        assert!((horizontal_edge_length(eps, n) - quad).abs() < 1e-9);
    }

    #[test]
    fn params_relation() {
        let p = UniformParams::from_theta(2.0, 2.0, 0.5).unwrap();
        assert!((p.beta - 2f64.ln()).abs() < 1e-15);
        assert!(p.theta_residual() < 1e-15);
        assert!(UniformParams::from_beta(2.0, 2.0, -1.0).is_err());
        assert!(UniformParams::from_theta(2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn root_masses() {
        let (c, ug) = small();
        assert!((ug.mu_plus[0] - c.total_mass()).abs() < 1e-15);
        assert_eq!(ug.mu_beta[0], ug.mu_plus[0]);
        assert!(ug.edge_lengths.iter().all(|&l| l > 0.0 && l <= 1.0));
    }

    #[test]
    fn nonpositive_beta_rejected() {
        let (c, ug) = small();
        let mut params = ug.params;
        params.beta = 0.0;
        assert!(uniformize(ug.base.clone(), params, &c).is_err());
    }

    /// Exhaustive simple-path search on a tiny graph.
    fn brute_force_distance(ug: &UniformizedGraph, s: usize, t: usize) -> f64 {
        fn walk(ug: &UniformizedGraph, v: usize, t: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if acc >= *best {
                return;
            }
            if v == t {
                *best = acc;
                return;
            }
            for &(w, l) in &ug.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    walk(ug, w, t, seen, acc + l, best);
                    seen[w] = false;
                }
            }
        }
        let mut seen = vec![false; ug.num_vertices()];
        seen[s] = true;
        let mut best = f64::INFINITY;
        walk(ug, s, t, &mut seen, 0.0, &mut best);
        best
    }

    #[test]
    fn shortest_paths_match_exhaustive_search() {
        let c = gen_interval(2).unwrap();
        let (_, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        let ug = uniformize(g, UniformParams::from_theta(2.0, 2.0, 0.5).unwrap(), &c).unwrap();
        for s in 0..ug.num_vertices() {
            let d = ug.distances_from(s);
            for t in 0..ug.num_vertices() {
                assert!((d[t] - brute_force_distance(&ug, s, t)).abs() < 1e-12);
            }
        }
        // root to a level-2 vertex straight down: two vertical edges
        let eps = 2f64.ln();
        let v = ug.base.level_range(2).start;
        let chain = vertical_edge_length(eps, 0) + vertical_edge_length(eps, 1);
        assert!(ug.d_eps(0, v) <= chain + 1e-12);
        assert!((chain - 1.082_021).abs() < 1e-6);
    }

    #[test]
    fn d_eps_is_a_metric() {
        let (_, ug) = small();
        let n = ug.num_vertices();
        let all: Vec<Vec<f64>> = (0..n).map(|v| ug.distances_from(v)).collect();
        for a in 0..n {
            assert_eq!(all[a][a], 0.0);
            for b in 0..n {
                assert!((all[a][b] - all[b][a]).abs() < 1e-12);
                if a != b {
                    assert!(all[a][b] > 0.0);
                }
                for c in 0..n {
                    assert!(all[a][c] <= all[a][b] + all[b][c] + 1e-12);
                }
            }
        }
        for (&(v, w), &l) in ug.base.edges().iter().zip(&ug.edge_lengths) {
            assert!(all[v][w] <= l + 1e-15);
        }
    }

    #[test]
    fn boundary_ball_edge_cases() {
        let (c, ug) = small();
        let all = ug.boundary_ball(&c, 4, 0.9).unwrap();
        assert!(!all.contains(&0));
        assert!(all.iter().all(|&v| ug.base.vertex_level(v) >= 1));
        let finest = 2f64.powi(-(ug.base.depth() as i32));
        assert!(ug.boundary_ball(&c, 4, finest * 0.99).unwrap().is_empty());
        let tiny = ug.boundary_ball(&c, 4, finest * 1.01).unwrap();
        assert!(tiny.contains(&ug.boundary_reps[4]));
        assert!(ug.boundary_ball(&c, 4, 0.0).is_err());
    }

    #[test]
    fn boundary_distance_tracks_level() {
        let c = gen_interval(5).unwrap();
        let (_, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        let ug = uniformize(g, UniformParams::from_theta(2.0, 2.0, 0.5).unwrap(), &c).unwrap();
        let eps = ug.params.epsilon;
        let finest = 2f64.powi(-(ug.base.depth() as i32));
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for v in 0..ug.num_vertices() {
            let vx = ug.base.vertex(v);
            let rep = ug.boundary_reps[vx.point];
            let ratio = (ug.d_eps(v, rep) + finest) / (-eps * vx.level as f64).exp();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        assert!(lo > 0.0 && hi / lo < 8.0, "band [{lo}, {hi}]");
    }

    #[test]
    fn level_masses_decay_geometrically() {
        let (_, ug) = small();
        let masses = ug.level_masses();
        let beta = ug.params.beta;
        for (n, m) in masses.iter().enumerate() {
            let undamped = m * (beta * n as f64).exp();
            // overlap of the balls B(x, alpha^-n) over a net is bounded
            assert!((1.0 - 1e-12..=4.0).contains(&undamped), "level {n}: {undamped}");
        }
        assert!(masses.iter().sum::<f64>().is_finite());
    }

    #[test]
    fn exact_and_surrogate_balls_nest() {
        let (c, ug) = small();
        let z = 3;
        for r in [0.1, 0.2, 0.4] {
            let exact = ug.boundary_ball_with(&c, z, r, BoundaryBallMode::ExactGraph).unwrap();
            let big = ug.boundary_ball(&c, z, (8.0 * r).min(c.diam())).unwrap();
            assert!(exact.iter().all(|v| big.contains(v)), "r = {r}");
        }
    }

    #[test]
    fn codim_fit_on_interval() {
        let c = gen_interval(8).unwrap();
        let eps = 2f64.ln();
        let depth = depth_with_tail(&c, 2.0, eps, 1e-6).unwrap();
        let cfg = FillingConfig { depth: Some(depth), ..Default::default() };
        let (_, g) = FillingGraph::from_cloud(&c, &cfg).unwrap();
        for ratio in [1.0, 2.0] {
            let params = UniformParams::from_beta(2.0, 4.0, ratio * eps).unwrap();
            let ug = uniformize(g.clone(), params, &c).unwrap();
            let fit = codim_exponent_fit(&ug, &c, &CodimConfig::default()).unwrap();
            let slope = fit.slope.unwrap();
            assert!((slope - ratio).abs() <= 0.15 * ratio, "ratio {ratio}: slope {slope}");
        }
        let ug = uniformize(g, UniformParams::from_beta(2.0, 4.0, eps).unwrap(), &c).unwrap();
        let single = CodimConfig { radii: Some(vec![0.1]), ..Default::default() };
        let fit = codim_exponent_fit(&ug, &c, &single).unwrap();
        assert!(fit.slope.is_none() && fit.flag == Some(FitFlag::InsufficientScales));
    }
}
