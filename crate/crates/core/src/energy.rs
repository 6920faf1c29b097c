//! Besov and graph Newton p-energies, condenser capacities, and the
//! extension/trace pair between a cloud and its uniformized filling.
//!
//! Both energies are sums `sum_{pairs} c_ij |u_i - u_j|^p` over a symmetric
//! set of pair weights. [`PairForm`] holds either a dense weight matrix (the
//! nonlocal Besov form) or a sparse edge list (the Newton form), and the two
//! capacity solvers work on either.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::space::{BallQuery, PointCloud, RADIUS_SLACK};
use crate::uniformize::UniformizedGraph;

/// Largest cloud for which the dense Besov form is assembled.
pub const MAX_DENSE_POINTS: usize = 5000;

/// A function on cloud points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub values: Vec<f64>,
}

/// A function on filling vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    pub values: Vec<f64>,
}

impl BoundaryFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("boundary function has non-finite values");
        }
        Ok(BoundaryFunction { values })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        BoundaryFunction { values: vec![c; n] }
    }
}

impl GraphFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("graph function has non-finite values");
        }
        Ok(GraphFunction { values })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        GraphFunction { values: vec![c; n] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arena {
    Cloud,
    Graph,
}

/// Plates `E` (value 1) and `F` (value 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condenser {
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    #[serde(rename = "F")]
    pub f: Vec<usize>,
    pub arena: Arena,
}

impl Condenser {
    /// Sorts and dedups both plates; fails when they meet or one is empty.
    pub fn new(mut e: Vec<usize>, mut f: Vec<usize>, arena: Arena) -> Result<Self> {
        e.sort_unstable();
        e.dedup();
        f.sort_unstable();
        f.dedup();
        if e.is_empty() || f.is_empty() {
            return invalid("condenser plates must be nonempty");
        }
        let (mut i, mut j) = (0, 0);
        while i < e.len() && j < f.len() {
            match e[i].cmp(&f[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    return invalid(format!("plates E and F share index {}", e[i]));
                }
            }
        }
        Ok(Condenser { e, f, arena })
    }

    fn check(&self, arena: Arena, n: usize) -> Result<()> {
        if self.arena != arena {
            return invalid(format!("condenser arena is {:?}, expected {:?}", self.arena, arena));
        }
        let c = Condenser::new(self.e.clone(), self.f.clone(), arena)?;
        if c.e.last().copied().max(c.f.last().copied()).unwrap_or(0) >= n {
            return invalid("condenser index out of range");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Linear system for `p = 2`, projected descent otherwise.
    #[default]
    Auto,
    LinearSystem,
    Descent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual (linear system) or relative energy change (descent).
    /// `None` picks `1e-8` or `1e-6` respectively.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub method: SolveMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: None, max_iter: 100_000, method: SolveMethod::Auto }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig { tol: Some(tol), ..Default::default() }
    }
}

/// Outcome of a capacity solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub value: f64,
    pub iterations: usize,
    #[serde(rename = "optimality")]
    pub final_optimality: f64,
    pub p: f64,
    pub theta: Option<f64>,
    pub arena: Arena,
    #[serde(rename = "E_size")]
    pub e_size: usize,
    #[serde(rename = "F_size")]
    pub f_size: usize,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub minimizer: Vec<f64>,
}

impl SolveReport {
    /// Minimizer as CSV `id, value`.
    pub fn write_minimizer_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["id", "value"])?;
        for (i, v) in self.minimizer.iter().enumerate() {
            out.write_record([i.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Weights {
    /// Row-major `n x n`, symmetric, zero diagonal.
    Dense(Vec<f64>),
    /// `(i, j, c)` with `i < j`, plus per-vertex incidence lists.
    Sparse { edges: Vec<(usize, usize, f64)>, adj: Vec<Vec<(usize, f64)>> },
}

/// `E(u) = sum over unordered pairs of c_ij |u_i - u_j|^p`.
#[derive(Clone, Debug)]
pub struct PairForm {
    n: usize,
    p: f64,
    weights: Weights,
}

impl PairForm {
    /// Nonlocal Besov form of a cloud: pair weight `K(x,z) + K(z,x)` with
    /// `K(x,z) = w(x) w(z) / (d^{theta p} nu(closed B(x, d)))`.
    pub fn besov(cloud: &PointCloud, theta: f64, p: f64) -> Result<Self> {
        check_exponents(theta, p)?;
        let n = cloud.len();
        if n > MAX_DENSE_POINTS {
            return Err(Error::Resource(format!(
                "dense Besov form limited to {MAX_DENSE_POINTS} points, got {n}"
            )));
        }
        let tp = theta * p;
        let w = cloud.weights();
        // K row by row: sort distances from x and accumulate closed-ball mass.
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|x| {
                let mut order: Vec<(f64, usize)> = (0..n).map(|z| (cloud.dist(x, z), z)).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut row = vec![0.0; n];
                // `end` runs ahead to the edge of the closed ball B(x, d)
                let mut end = 0;
                let mut mass = 0.0;
                for &(d, z) in &order {
                    while end < n && order[end].0 <= d * (1.0 + RADIUS_SLACK) {
                        mass += w[order[end].1];
                        end += 1;
                    }
                    if d > 0.0 {
                        row[z] = w[x] * w[z] / (d.powf(tp) * mass);
                    }
                }
                row
            })
            .collect();
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    dense[i * n + j] = rows[i][j] + rows[j][i];
                }
            }
        }
        Ok(PairForm { n, p, weights: Weights::Dense(dense) })
    }

    /// Newton form of a uniformized filling: conductance
    /// `[mu_beta(v)/deg(v) + mu_beta(w)/deg(w)] / ell(e)^p` per edge.
    pub fn newton(ug: &UniformizedGraph, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return invalid(format!("p = {p} must exceed 1"));
        }
        let g = &ug.base;
        let edges = g
            .edges()
            .iter()
            .zip(&ug.edge_lengths)
            .map(|(&(v, w), &l)| {
                let c = (ug.mu_beta[v] / g.degree(v) as f64 + ug.mu_beta[w] / g.degree(w) as f64) / l.powf(p);
                (v, w, c)
            })
            .collect();
        Ok(PairForm::from_edges(g.num_vertices(), p, edges))
    }

    /// Form with explicit conductances on an edge list.
    pub fn from_edges(n: usize, p: f64, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        let edges: Vec<_> = edges.into_iter().map(|(a, b, c)| (a.min(b), a.max(b), c)).collect();
        for &(a, b, c) in &edges {
            adj[a].push((b, c));
            adj[b].push((a, c));
        }
        PairForm { n, p, weights: Weights::Sparse { edges, adj } }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Weight between `i` and `j` (dense forms only; sparse scans the row).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match &self.weights {
            Weights::Dense(m) => m[i * self.n + j],
            Weights::Sparse { adj, .. } => adj[i].iter().filter(|e| e.0 == j).map(|e| e.1).sum(),
        }
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.n, "function length does not match the form");
        let p = self.p;
        let pow = |d: f64| if p == 2.0 { d * d } else { d.abs().powf(p) };
        match &self.weights {
            Weights::Dense(m) => {
                let n = self.n;
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let row = &m[i * n..(i + 1) * n];
                        let ui = u[i];
                        let mut s = 0.0;
                        for j in (i + 1)..n {
                            s += row[j] * pow(ui - u[j]);
                        }
                        s
                    })
                    .collect::<Vec<_>>()
                    .iter()
                    .sum()
            }
            Weights::Sparse { edges, .. } => edges.iter().map(|&(a, b, c)| c * pow(u[a] - u[b])).sum(),
        }
    }

    /// Gradient of the energy, written into `g`.
    fn gradient(&self, u: &[f64], g: &mut [f64]) {
        let p = self.p;
        let dpow = |d: f64| if p == 2.0 { 2.0 * d } else { p * d.abs().powf(p - 1.0) * d.signum() };
        match &self.weights {
            Weights::Dense(m) => {
                let n = self.n;
                g.par_iter_mut().enumerate().for_each(|(i, gi)| {
                    let row = &m[i * n..(i + 1) * n];
                    let ui = u[i];
                    let mut s = 0.0;
                    for j in 0..n {
                        s += row[j] * dpow(ui - u[j]);
                    }
                    *gi = s;
                });
            }
            Weights::Sparse { adj, .. } => {
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = adj[i].iter().map(|&(j, c)| c * dpow(u[i] - u[j])).sum();
                }
            }
        }
    }

    /// Weighted Laplacian `(L x)_i = sum_j c_ij (x_i - x_j)`.
    fn laplacian(&self, x: &[f64], out: &mut [f64]) {
        match &self.weights {
            Weights::Dense(m) => {
                let n = self.n;
                out.par_iter_mut().enumerate().for_each(|(i, o)| {
                    let row = &m[i * n..(i + 1) * n];
                    let xi = x[i];
                    let mut s = 0.0;
                    for j in 0..n {
                        s += row[j] * (xi - x[j]);
                    }
                    *o = s;
                });
            }
            Weights::Sparse { adj, .. } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = adj[i].iter().map(|&(j, c)| c * (x[i] - x[j])).sum();
                }
            }
        }
    }

    fn degree(&self, i: usize) -> f64 {
        match &self.weights {
            Weights::Dense(m) => m[i * self.n..(i + 1) * self.n].iter().sum(),
            Weights::Sparse { adj, .. } => adj[i].iter().map(|e| e.1).sum(),
        }
    }

    /// Minimizes the energy with `u = 1` on `e` and `u = 0` on `f`.
    pub fn capacity(&self, e: &[usize], f: &[usize], cfg: &SolverConfig) -> Result<Solution> {
        let n = self.n;
        let mut fixed = vec![false; n];
        let mut u = vec![0.5; n];
        for &i in f {
            fixed[i] = true;
            u[i] = 0.0;
        }
        for &i in e {
            if fixed[i] {
                return invalid(format!("plates E and F share index {i}"));
            }
            fixed[i] = true;
            u[i] = 1.0;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        if free.is_empty() {
            return Ok(Solution { value: self.energy(&u), u, iterations: 0, optimality: 0.0, converged: true });
        }
        let linear = match cfg.method {
            SolveMethod::Auto => self.p == 2.0,
            SolveMethod::LinearSystem => {
                if self.p != 2.0 {
                    return invalid("the linear-system solver needs p = 2");
                }
                true
            }
            SolveMethod::Descent => false,
        };
        if linear {
            self.solve_cg(u, &fixed, &free, cfg.tol.unwrap_or(1e-8), cfg.max_iter)
        } else {
            self.solve_descent(u, &fixed, &free, cfg.tol.unwrap_or(1e-6), cfg.max_iter)
        }
    }

    /// Jacobi-preconditioned conjugate gradients on `L_ff u_f = -L_fb u_b`.
    fn solve_cg(&self, mut u: Vec<f64>, fixed: &[bool], free: &[usize], tol: f64, max_iter: usize) -> Result<Solution> {
        let n = self.n;
        let mut boundary = u.clone();
        for &i in free {
            boundary[i] = 0.0;
        }
        let mut lb = vec![0.0; n];
        self.laplacian(&boundary, &mut lb);
        let mut b = vec![0.0; n];
        for &i in free {
            b[i] = -lb[i];
        }
        let diag: Vec<f64> = (0..n).map(|i| if fixed[i] { 0.0 } else { self.degree(i) }).collect();
        let bnorm = norm(&b);
        // x holds the free part only; fixed entries stay zero
        let mut x = vec![0.0; n];
        for &i in free {
            x[i] = u[i];
        }
        let mut ax = vec![0.0; n];
        self.laplacian(&x, &mut ax);
        let mut r = vec![0.0; n];
        for &i in free {
            r[i] = b[i] - ax[i];
        }
        let precond = |r: &[f64], z: &mut [f64]| {
            for &i in free {
                z[i] = if diag[i] > 0.0 { r[i] / diag[i] } else { r[i] };
            }
        };
        let mut z = vec![0.0; n];
        precond(&r, &mut z);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        let mut ad = vec![0.0; n];
        let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
        let mut rel = norm(&r) / scale;
        let mut it = 0;
        while rel > tol && it < max_iter {
            self.laplacian(&d, &mut ad);
            for i in 0..n {
                if fixed[i] {
                    ad[i] = 0.0;
                }
            }
            let dad = dot(&d, &ad);
            if !(dad > 0.0) {
                break;
            }
            let step = rz / dad;
            for &i in free {
                x[i] += step * d[i];
                r[i] -= step * ad[i];
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let ratio = rz_new / rz;
            rz = rz_new;
            for &i in free {
                d[i] = z[i] + ratio * d[i];
            }
            it += 1;
            // refresh the residual now and then to stop drift
            if it % 50 == 0 {
                self.laplacian(&x, &mut ax);
                for &i in free {
                    r[i] = b[i] - ax[i];
                }
            }
            rel = norm(&r) / scale;
        }
        // final residual from scratch
        self.laplacian(&x, &mut ax);
        let rel_true = free.iter().map(|&i| (b[i] - ax[i]).powi(2)).sum::<f64>().sqrt() / scale;
        for &i in free {
            u[i] = x[i];
        }
        let sol = Solution { value: self.energy(&u), u, iterations: it, optimality: rel_true, converged: rel_true <= tol };
        Ok(sol)
    }

    /// Projected gradient onto `[0, 1]` with Armijo backtracking and
    /// restarted Nesterov momentum.
    fn solve_descent(&self, mut u: Vec<f64>, fixed: &[bool], free: &[usize], tol: f64, max_iter: usize) -> Result<Solution> {
        let n = self.n;
        let mut g = vec![0.0; n];
        let mut energy = self.energy(&u);
        let mut y = u.clone();
        let mut e_y = energy;
        let mut t_mom = 1.0f64;
        let mut step = {
            let dmax = free.iter().map(|&i| self.degree(i)).fold(0.0f64, f64::max);
            if dmax > 0.0 {
                1.0 / (self.p * dmax)
            } else {
                1.0
            }
        };
        let mut cand = vec![0.0; n];
        let mut it = 0;
        let mut change = f64::INFINITY;
        while it < max_iter {
            self.gradient(&y, &mut g);
            for i in 0..n {
                if fixed[i] {
                    g[i] = 0.0;
                }
            }
            // backtracking on the projected step from y
            let mut e_c;
            loop {
                for i in 0..n {
                    cand[i] = if fixed[i] { y[i] } else { (y[i] - step * g[i]).clamp(0.0, 1.0) };
                }
                e_c = self.energy(&cand);
                let mut lin = 0.0;
                let mut sq = 0.0;
                for &i in free {
                    let s = cand[i] - y[i];
                    lin += g[i] * s;
                    sq += s * s;
                }
                if e_c <= e_y + lin + sq / (2.0 * step) + 1e-15 * e_y.abs() || step < 1e-300 {
                    break;
                }
                step *= 0.5;
            }
            it += 1;
            if e_c > energy {
                // momentum overshot: restart from the last accepted iterate
                if t_mom > 1.0 {
                    t_mom = 1.0;
                    y.copy_from_slice(&u);
                    e_y = energy;
                    continue;
                }
            }
            change = (energy - e_c).abs() / energy.abs().max(f64::MIN_POSITIVE);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_mom * t_mom).sqrt());
            let beta = (t_mom - 1.0) / t_next;
            for i in 0..n {
                y[i] = if fixed[i] { cand[i] } else { (cand[i] + beta * (cand[i] - u[i])).clamp(0.0, 1.0) };
            }
            t_mom = t_next;
            u.copy_from_slice(&cand);
            energy = e_c;
            e_y = self.energy(&y);
            step *= 2.0;
            if change <= tol || energy == 0.0 {
                change = change.min(tol);
                break;
            }
        }
        Ok(Solution { value: energy, u, iterations: it, optimality: change, converged: change <= tol })
    }
}

/// Raw solver output before it is wrapped into a [`SolveReport`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub value: f64,
    pub u: Vec<f64>,
    pub iterations: usize,
    pub optimality: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_exponents(theta: f64, p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("p = {p} must exceed 1"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return invalid(format!("theta = {theta} must lie in (0, 1)"));
    }
    Ok(())
}

fn check_len(len: usize, n: usize, what: &str) -> Result<()> {
    if len != n {
        return invalid(format!("{what} has {len} values, expected {n}"));
    }
    Ok(())
}

/// Besov energy `sum_{x != z} |u(x)-u(z)|^p w(x) w(z) / (d^{theta p} nu(closed B(x,d)))`.
pub fn besov_energy(cloud: &PointCloud, u: &BoundaryFunction, theta: f64, p: f64) -> Result<f64> {
    check_len(u.values.len(), cloud.len(), "boundary function")?;
    Ok(PairForm::besov(cloud, theta, p)?.energy(&u.values))
}

/// Graph Newton p-energy on the uniformized filling.
pub fn newton_energy(ug: &UniformizedGraph, u: &GraphFunction, p: f64) -> Result<f64> {
    check_len(u.values.len(), ug.num_vertices(), "graph function")?;
    Ok(PairForm::newton(ug, p)?.energy(&u.values))
}

/// Wraps a [`Solution`] into a report, or a `NotConverged` error carrying it.
pub fn finish(sol: Solution, form: &PairForm, theta: Option<f64>, cond: &Condenser, seed: Option<u64>) -> Result<SolveReport> {
    let report = SolveReport {
        value: sol.value,
        iterations: sol.iterations,
        final_optimality: sol.optimality,
        p: form.p,
        theta,
        arena: cond.arena,
        e_size: cond.e.len(),
        f_size: cond.f.len(),
        seed,
        minimizer: sol.u,
    };
    if sol.converged {
        Ok(report)
    } else {
        Err(Error::NotConverged(Box::new(report)))
    }
}

/// Besov capacity of a cloud condenser for a prebuilt form.
pub fn besov_capacity_with(form: &PairForm, theta: f64, cond: &Condenser, cfg: &SolverConfig) -> Result<SolveReport> {
    cond.check(Arena::Cloud, form.len())?;
    let sol = form.capacity(&cond.e, &cond.f, cfg)?;
    finish(sol, form, Some(theta), cond, None)
}

pub fn besov_capacity(cloud: &PointCloud, cond: &Condenser, theta: f64, p: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    let form = PairForm::besov(cloud, theta, p)?;
    besov_capacity_with(&form, theta, cond, cfg)
}

/// Newton capacity of a graph condenser for a prebuilt form.
pub fn newton_capacity_with(form: &PairForm, cond: &Condenser, cfg: &SolverConfig) -> Result<SolveReport> {
    cond.check(Arena::Graph, form.len())?;
    let sol = form.capacity(&cond.e, &cond.f, cfg)?;
    finish(sol, form, None, cond, None)
}

pub fn newton_capacity(ug: &UniformizedGraph, cond: &Condenser, p: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    let form = PairForm::newton(ug, p)?;
    newton_capacity_with(&form, cond, cfg)
}

/// Ball-average extension: vertex `(n, x)` gets the `nu`-average of `u`
/// over the closed ball `B(x, alpha^-n)`.
pub fn extend(cloud: &PointCloud, ug: &UniformizedGraph, u: &BoundaryFunction) -> Result<GraphFunction> {
    check_len(u.values.len(), cloud.len(), "boundary function")?;
    let w = cloud.weights();
    let values = ug
        .base
        .vertices()
        .par_iter()
        .map(|v| {
            let r = ug.base.alpha.powi(-(v.level as i32));
            let members = cloud.ball_members(&BallQuery::closed(v.point, r));
            let (mut num, mut den) = (0.0, 0.0);
            for i in members {
                num += w[i] * u.values[i];
                den += w[i];
            }
            num / den
        })
        .collect();
    Ok(GraphFunction { values })
}

/// Reads a graph function off at each point's boundary representative.
pub fn trace(cloud: &PointCloud, ug: &UniformizedGraph, u: &GraphFunction) -> Result<BoundaryFunction> {
    check_len(u.values.len(), ug.num_vertices(), "graph function")?;
    check_len(ug.boundary_reps.len(), cloud.len(), "boundary representatives")?;
    Ok(BoundaryFunction { values: ug.boundary_reps.iter().map(|&v| u.values[v]).collect() })
}

/// `newton_energy(extend(u)) / besov_energy(u)`, and `0` for zero Besov energy.
pub fn extension_energy_ratio(
    cloud: &PointCloud,
    ug: &UniformizedGraph,
    u: &BoundaryFunction,
    theta: f64,
    p: f64,
) -> Result<f64> {
    let besov = PairForm::besov(cloud, theta, p)?;
    let newton = PairForm::newton(ug, p)?;
    extension_energy_ratio_with(&besov, &newton, cloud, ug, u)
}

/// As [`extension_energy_ratio`] with prebuilt forms.
pub fn extension_energy_ratio_with(
    besov: &PairForm,
    newton: &PairForm,
    cloud: &PointCloud,
    ug: &UniformizedGraph,
    u: &BoundaryFunction,
) -> Result<f64> {
    check_len(u.values.len(), cloud.len(), "boundary function")?;
    let b = besov.energy(&u.values);
    if b == 0.0 {
        return Ok(0.0);
    }
    let eu = extend(cloud, ug, u)?;
    Ok(newton.energy(&eu.values) / b)
}
