//! Capacity experiments: annulus scaling against the three-case bound,
//! Hausdorff content covers, and Loewner-type lower bounds for continua.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{besov_capacity_with, BoundaryFunction, Condenser, GraphFunction, PairForm, SolverConfig, Arena};
use crate::error::{invalid, Error, Result};
use crate::space::{BallQuery, PointCloud};
use crate::stats::linear_fit;
use crate::uniformize::UniformizedGraph;

/// Which regime of the annulus bound applies, by the sign of `p theta - Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CaseTag {
    /// `p theta > Q`: bound `R^{Q - theta p}`.
    Large = 1,
    /// `p theta = Q`: bound `log(R/r)^{1-p}`.
    Critical = 2,
    /// `p theta < Q`: bound `r^{Q - theta p}`.
    Small = 3,
}

impl From<CaseTag> for u8 {
    fn from(c: CaseTag) -> u8 {
        c as u8
    }
}

impl TryFrom<u8> for CaseTag {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(CaseTag::Large),
            2 => Ok(CaseTag::Critical),
            3 => Ok(CaseTag::Small),
            _ => Err(format!("case tag {v} is not 1, 2 or 3")),
        }
    }
}

/// Tolerance on `|p theta - Q|` below which the critical case is used.
pub const CRITICAL_TOL: f64 = 1e-9;

pub fn case_tag(p: f64, theta: f64, q: f64) -> Result<CaseTag> {
    if !(p * theta > 0.0) || !(q > 0.0) {
        return invalid(format!("p theta = {} and Q = {q} must be positive", p * theta));
    }
    let gap = p * theta - q;
    Ok(if gap.abs() < CRITICAL_TOL {
        CaseTag::Critical
    } else if gap > 0.0 {
        CaseTag::Large
    } else {
        CaseTag::Small
    })
}

/// Annulus bound up to constants, with its case.
pub fn predicted_annulus_bound(r: f64, big_r: f64, p: f64, theta: f64, q: f64) -> Result<(f64, CaseTag)> {
    if !(r > 0.0 && r < big_r) {
        return invalid(format!("annulus radii need 0 < r < R, got r = {r}, R = {big_r}"));
    }
    let tag = case_tag(p, theta, q)?;
    let e = q - theta * p;
    let v = match tag {
        CaseTag::Large => big_r.powf(e),
        CaseTag::Critical => (big_r / r).ln().powf(1.0 - p),
        CaseTag::Small => r.powf(e),
    };
    Ok((v, tag))
}

/// Condenser geometry `(closed B(x0, r), Z \ B(x0, R))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub x0: usize,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl AnnulusSpec {
    /// Checks `0 < r < R/2 <= diam`.
    pub fn new(cloud: &PointCloud, x0: usize, r: f64, big_r: f64) -> Result<Self> {
        if x0 >= cloud.len() {
            return invalid(format!("center {x0} out of range"));
        }
        if !(r > 0.0 && r < big_r / 2.0 && big_r / 2.0 <= cloud.diam()) {
            return invalid(format!("annulus needs 0 < r < R/2 <= diam, got r = {r}, R = {big_r}"));
        }
        Ok(AnnulusSpec { x0, r, big_r })
    }

    /// Plates `E = {d <= r}` and `F = {d >= R}`.
    pub fn condenser(&self, cloud: &PointCloud) -> Result<Condenser> {
        let mut e = Vec::new();
        let mut f = Vec::new();
        for i in 0..cloud.len() {
            let d = cloud.dist(self.x0, i);
            if d <= self.r {
                e.push(i);
            } else if d >= self.big_r {
                f.push(i);
            }
        }
        if f.is_empty() {
            return invalid(format!("no sample point at distance >= R = {} from the center", self.big_r));
        }
        Condenser::new(e, f, Arena::Cloud)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffVariant {
    /// `(1 - 2 dist(x, B(x0, R/2)) / R)_+`.
    CaseR,
    /// `(1 - dist(x, B(x0, r)) / r)_+`.
    Caser,
}

/// Lipschitz cutoff around `x0`; the inner ball is closed.
pub fn lipschitz_cutoff(cloud: &PointCloud, spec: &AnnulusSpec, variant: CutoffVariant) -> BoundaryFunction {
    let (inner, width) = match variant {
        CutoffVariant::CaseR => (spec.big_r / 2.0, spec.big_r / 2.0),
        CutoffVariant::Caser => (spec.r, spec.r),
    };
    let ball = cloud.ball_members(&BallQuery::closed(spec.x0, inner));
    let values = (0..cloud.len())
        .map(|i| (1.0 - cloud.dist_to_set(i, &ball) / width).max(0.0))
        .collect();
    BoundaryFunction { values }
}

/// `min{(log(R/d(x,x0)) / log(R/r))_+, 1}`, equal to 1 at `x0`.
pub fn log_cutoff(cloud: &PointCloud, spec: &AnnulusSpec) -> BoundaryFunction {
    let l = (spec.big_r / spec.r).ln();
    let values = (0..cloud.len())
        .map(|i| {
            let d = cloud.dist(spec.x0, i);
            if d <= 0.0 {
                1.0
            } else {
                ((spec.big_r / d).ln() / l).clamp(0.0, 1.0)
            }
        })
        .collect();
    BoundaryFunction { values }
}

/// Upper gradient bound `1 / (log(R/r) d(x, x0))` on `r <= d < R`, zero elsewhere,
/// at each vertex center.
pub fn log_cutoff_gradient_bound(cloud: &PointCloud, ug: &UniformizedGraph, spec: &AnnulusSpec) -> GraphFunction {
    let l = (spec.big_r / spec.r).ln();
    let values = ug
        .base
        .vertices()
        .iter()
        .map(|v| {
            let d = cloud.dist(spec.x0, v.point);
            if d >= spec.r && d < spec.big_r {
                1.0 / (l * d)
            } else {
                0.0
            }
        })
        .collect();
    GraphFunction { values }
}

/// The explicit test function used for each case.
pub fn case_test_function(cloud: &PointCloud, spec: &AnnulusSpec, tag: CaseTag) -> BoundaryFunction {
    match tag {
        CaseTag::Large => lipschitz_cutoff(cloud, spec, CutoffVariant::CaseR),
        CaseTag::Critical => log_cutoff(cloud, spec),
        CaseTag::Small => lipschitz_cutoff(cloud, spec, CutoffVariant::Caser),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub case: CaseTag,
    pub capacity: f64,
    pub predicted: f64,
    pub testfn_energy: f64,
    /// `ok`, `not_converged` or `failed: ...`.
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub case: CaseTag,
    /// Regressed variable: `log R`, `log r`, or `log log(R/r)`.
    pub regressor: String,
    pub fitted_exponent: Option<f64>,
    pub target_exponent: f64,
    /// Second candidate for the critical case (`-p`); the first is `1 - p`.
    pub alternative_exponent: Option<f64>,
    /// Which candidate the fit lies closer to.
    pub closer_to: Option<f64>,
    pub residual: Option<f64>,
    /// Why no exponent was fitted, if so.
    pub fit_note: Option<String>,
}

impl ScalingReport {
    /// CSV with columns `r, R, case, capacity, predicted, testfn_energy, status`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "R", "case", "capacity", "predicted", "testfn_energy", "status"])?;
        for row in &self.rows {
            out.write_record([
                row.r.to_string(),
                row.big_r.to_string(),
                (row.case as u8).to_string(),
                row.capacity.to_string(),
                row.predicted.to_string(),
                row.testfn_energy.to_string(),
                row.status.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Setup shared by the annulus and Loewner experiments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub p: f64,
    pub theta: f64,
    /// Dimension of the space, usually the analytic or estimated Ahlfors exponent.
    pub q: f64,
    pub solver: SolverConfig,
}

/// Besov capacities of the annuli `(x0, r, R)` against the predicted bound
/// and the case test function.
///
/// Exponent fits need at least 4 converged rows whose regressed radius ratio
/// spans a factor of 8 or more (`R/r` in the critical case).
pub fn annulus_experiment(
    cloud: &PointCloud,
    x0: usize,
    grid: &[(f64, f64)],
    params: &ExperimentParams,
) -> Result<ScalingReport> {
    let form = PairForm::besov(cloud, params.theta, params.p)?;
    annulus_experiment_with(&form, cloud, x0, grid, params)
}

/// As [`annulus_experiment`] with a prebuilt Besov form.
pub fn annulus_experiment_with(
    form: &PairForm,
    cloud: &PointCloud,
    x0: usize,
    grid: &[(f64, f64)],
    params: &ExperimentParams,
) -> Result<ScalingReport> {
    let tag = case_tag(params.p, params.theta, params.q)?;
    let specs = grid
        .iter()
        .map(|&(r, big_r)| AnnulusSpec::new(cloud, x0, r, big_r))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ScalingRow> = specs
        .par_iter()
        .map(|spec| {
            let predicted = predicted_annulus_bound(spec.r, spec.big_r, params.p, params.theta, params.q)
                .map(|v| v.0)
                .unwrap_or(f64::NAN);
            let test = case_test_function(cloud, spec, tag);
            let testfn_energy = form.energy(&test.values);
            let (capacity, status) = match spec
                .condenser(cloud)
                .and_then(|c| besov_capacity_with(form, params.theta, &c, &params.solver))
            {
                Ok(rep) => (rep.value, "ok".to_string()),
                Err(Error::NotConverged(rep)) => (rep.value, "not_converged".to_string()),
                Err(e) => (f64::NAN, format!("failed: {e}")),
            };
            ScalingRow { r: spec.r, big_r: spec.big_r, case: tag, capacity, predicted, testfn_energy, status }
        })
        .collect();

    let target = match tag {
        CaseTag::Critical => 1.0 - params.p,
        _ => params.q - params.theta * params.p,
    };
    let alternative = (tag == CaseTag::Critical).then_some(-params.p);
    let regressor = match tag {
        CaseTag::Large => "log R",
        CaseTag::Critical => "log log(R/r)",
        CaseTag::Small => "log r",
    };
    let ok: Vec<&ScalingRow> = rows.iter().filter(|r| r.status == "ok" && r.capacity > 0.0).collect();
    let span_of = |row: &ScalingRow| match tag {
        CaseTag::Large => row.big_r,
        CaseTag::Critical => row.big_r / row.r,
        CaseTag::Small => row.r,
    };
    let (lo, hi) = ok.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(span_of(r)), hi.max(span_of(r))));
    let mut report = ScalingReport {
        rows: rows.clone(),
        case: tag,
        regressor: regressor.to_string(),
        fitted_exponent: None,
        target_exponent: target,
        alternative_exponent: alternative,
        closer_to: None,
        residual: None,
        fit_note: None,
    };
    if ok.len() < 4 {
        report.fit_note = Some(format!("only {} usable grid points, need 4", ok.len()));
        return Ok(report);
    }
    if hi / lo < 8.0 * (1.0 - 1e-12) {
        report.fit_note = Some(format!("regressed radii span a factor {:.3}, need 8", hi / lo));
        return Ok(report);
    }
    let xs: Vec<f64> = ok
        .iter()
        .map(|r| match tag {
            CaseTag::Large => r.big_r.ln(),
            CaseTag::Critical => (r.big_r / r.r).ln().ln(),
            CaseTag::Small => r.r.ln(),
        })
        .collect();
    let ys: Vec<f64> = ok.iter().map(|r| r.capacity.ln()).collect();
    if let Some(fit) = linear_fit(&xs, &ys) {
        report.fitted_exponent = Some(fit.slope);
        report.residual = Some(fit.residual);
        report.closer_to = Some(match alternative {
            Some(alt) if (fit.slope - alt).abs() < (fit.slope - target).abs() => alt,
            _ => target,
        });
    } else {
        report.fit_note = Some("degenerate regression".to_string());
    }
    Ok(report)
}

/// One ball of a content cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverBall {
    pub center: usize,
    pub radius: f64,
    /// Diameter of the covered piece, which is what the cover is charged.
    pub diam: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub s: f64,
    pub value: f64,
    pub cover: Vec<CoverBall>,
    /// Diameter of the whole set, the natural comparison for continua at `s = 1`.
    pub set_diam: f64,
}

impl ContentEstimate {
    /// Both covers together: a cover of `E ∪ F` of value `value_E + value_F`,
    /// which is what makes the content subadditive.
    pub fn union_cover(&self, other: &ContentEstimate) -> Vec<CoverBall> {
        self.cover.iter().chain(&other.cover).cloned().collect()
    }
}

/// Greedy upper bound for the Hausdorff content `H^s_tau(E)`.
///
/// `E` is split into single-linkage clusters at the sample scale. Each cluster
/// is cut in two along its longest axis while that is cheaper (or while it is
/// too wide for `tau`), and then pieces are merged pairwise whenever the union
/// costs no more than the two parts. Each piece is charged `diam^s` and covered
/// by the ball around its most central member.
pub fn hausdorff_content(cloud: &PointCloud, set: &[usize], s: f64, tau: f64) -> Result<ContentEstimate> {
    if !(s > 0.0) {
        return invalid(format!("content exponent s = {s} must be positive"));
    }
    if !(tau > 0.0) {
        return invalid(format!("scale tau = {tau} must be positive"));
    }
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        return Ok(ContentEstimate { s, value: 0.0, cover: Vec::new(), set_diam: 0.0 });
    }
    let set_diam = cloud.subset_diam(&set);
    // link at the sample scale of the whole cloud, so subsets inherit its links
    let link = 1.5 * cloud.resolution();
    let cost = |piece: &[usize]| {
        let d = cloud.subset_diam(piece);
        if d > 0.0 {
            d.powf(s)
        } else {
            0.0
        }
    };

    let mut pieces: Vec<Vec<usize>> = Vec::new();
    for cluster in single_linkage(cloud, &set, link) {
        split_piece(cloud, cluster, s, tau, link, &cost, &mut pieces);
    }

    // pairwise merging while some union is no more expensive than its parts
    let mut costs: Vec<f64> = pieces.iter().map(|p| cost(p)).collect();
    loop {
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for a in 0..pieces.len() {
            for b in (a + 1)..pieces.len() {
                let d = union_diam(cloud, &pieces[a], &pieces[b]);
                if d >= tau {
                    continue;
                }
                let merged = if d > 0.0 { d.powf(s) } else { 0.0 };
                let gain = costs[a] + costs[b] - merged;
                if gain >= 0.0 && best.is_none_or(|(g, ..)| gain > g) {
                    best = Some((gain, a, b, merged));
                }
            }
        }
        let Some((_, a, b, merged)) = best else { break };
        let moved = pieces.swap_remove(b);
        costs.swap_remove(b);
        pieces[a].extend(moved);
        pieces[a].sort_unstable();
        costs[a] = merged;
    }

    let mut cover: Vec<CoverBall> = pieces
        .iter()
        .map(|piece| {
            let (center, radius) = one_center(cloud, piece);
            CoverBall { center, radius, diam: cloud.subset_diam(piece) }
        })
        .collect();
    cover.sort_by_key(|b| b.center);
    let value = cover.iter().map(|b| if b.diam > 0.0 { b.diam.powf(s) } else { 0.0 }).sum();
    Ok(ContentEstimate { s, value, cover, set_diam })
}

fn union_diam(cloud: &PointCloud, a: &[usize], b: &[usize]) -> f64 {
    let mut d = cloud.subset_diam(a).max(cloud.subset_diam(b));
    for &i in a {
        for &j in b {
            d = d.max(cloud.dist(i, j));
        }
    }
    d
}

fn single_linkage(cloud: &PointCloud, set: &[usize], link: f64) -> Vec<Vec<usize>> {
    let n = set.len();
    let mut seen = vec![false; n];
    let mut clusters = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(a) = stack.pop() {
            members.push(set[a]);
            for b in 0..n {
                if !seen[b] && cloud.dist(set[a], set[b]) <= link {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

/// Farthest pair of a piece (first found on ties).
fn farthest_pair(cloud: &PointCloud, piece: &[usize]) -> (usize, usize, f64) {
    let mut best = (piece[0], piece[0], 0.0);
    for (k, &i) in piece.iter().enumerate() {
        for &j in &piece[k + 1..] {
            let d = cloud.dist(i, j);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    best
}

fn split_piece(
    cloud: &PointCloud,
    piece: Vec<usize>,
    s: f64,
    tau: f64,
    link: f64,
    cost: &dyn Fn(&[usize]) -> f64,
    out: &mut Vec<Vec<usize>>,
) {
    let (a, b, d) = farthest_pair(cloud, &piece);
    if piece.len() < 2 || (d <= link && d < tau) {
        out.push(piece);
        return;
    }
    let (left, right): (Vec<usize>, Vec<usize>) =
        piece.iter().partition(|&&i| cloud.dist(i, a) <= cloud.dist(i, b));
    if d >= tau {
        split_piece(cloud, left, s, tau, link, cost, out);
        split_piece(cloud, right, s, tau, link, cost, out);
        return;
    }
    if s <= 1.0 {
        // for s <= 1 a connected piece is never cheaper in two halves
        out.push(piece);
        return;
    }
    let mut halves = Vec::new();
    split_piece(cloud, left, s, tau, link, cost, &mut halves);
    split_piece(cloud, right, s, tau, link, cost, &mut halves);
    let split_cost: f64 = halves.iter().map(|h| cost(h)).sum();
    if split_cost < cost(&piece) {
        out.extend(halves);
    } else {
        out.push(piece);
    }
}

/// Member minimizing the largest distance to the rest of the piece.
fn one_center(cloud: &PointCloud, piece: &[usize]) -> (usize, f64) {
    let mut best = (piece[0], f64::INFINITY);
    for &i in piece {
        let r = piece.iter().map(|&j| cloud.dist(i, j)).fold(0.0, f64::max);
        if r < best.1 {
            best = (i, r);
        }
    }
    best
}

/// `min(content_E, content_F) / R^{s - Q + theta p}`, under the hypotheses
/// `0 < s < Q`, `p > max(1, Q - s)` and `(Q - s)/p < theta < 1`.
pub fn loewner_lower_bound(content_e: f64, content_f: f64, big_r: f64, s: f64, theta: f64, p: f64, q: f64) -> Result<f64> {
    if !(s > 0.0 && s < q) {
        return invalid(format!("need 0 < s < Q, got s = {s}, Q = {q}"));
    }
    if !(p > 1.0 && p > q - s) {
        return invalid(format!("need p > max(1, Q - s), got p = {p}, Q - s = {}", q - s));
    }
    if !((q - s) / p < theta && theta < 1.0) {
        return invalid(format!("need (Q - s)/p < theta < 1, got theta = {theta}, (Q - s)/p = {}", (q - s) / p));
    }
    if !(big_r > 0.0) || content_e < 0.0 || content_f < 0.0 {
        return invalid("contents must be nonnegative and R positive");
    }
    Ok(content_e.min(content_f) / big_r.powf(s - q + theta * p))
}

/// A pair of disjoint continua inside a ball of radius `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuaPair {
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    #[serde(rename = "F")]
    pub f: Vec<usize>,
    #[serde(rename = "R")]
    pub big_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoewnerRow {
    #[serde(rename = "R")]
    pub big_r: f64,
    pub capacity: f64,
    pub content_e: f64,
    pub content_f: f64,
    pub diam_e: f64,
    pub diam_f: f64,
    pub lower_bound: f64,
    /// `capacity / lower_bound` (infinite when the bound is 0).
    pub ratio: f64,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoewnerReport {
    pub s: f64,
    pub rows: Vec<LoewnerRow>,
    /// Smallest finite ratio, the empirical constant `c`.
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    /// `c_max / c_min`.
    pub spread: Option<f64>,
}

/// Capacity of each pair against the content lower bound (`tau = inf`).
pub fn loewner_experiment(
    cloud: &PointCloud,
    pairs: &[ContinuaPair],
    s: f64,
    params: &ExperimentParams,
) -> Result<LoewnerReport> {
    let form = PairForm::besov(cloud, params.theta, params.p)?;
    // validate hypotheses once, before any solve
    loewner_lower_bound(1.0, 1.0, 1.0, s, params.theta, params.p, params.q)?;
    let rows = pairs
        .par_iter()
        .map(|pair| {
            let ce = hausdorff_content(cloud, &pair.e, s, f64::INFINITY)?;
            let cf = hausdorff_content(cloud, &pair.f, s, f64::INFINITY)?;
            let bound = loewner_lower_bound(ce.value, cf.value, pair.big_r, s, params.theta, params.p, params.q)?;
            let cond = Condenser::new(pair.e.clone(), pair.f.clone(), Arena::Cloud)?;
            let (capacity, status) = match besov_capacity_with(&form, params.theta, &cond, &params.solver) {
                Ok(rep) => (rep.value, "ok".to_string()),
                Err(Error::NotConverged(rep)) => (rep.value, "not_converged".to_string()),
                Err(e) => (f64::NAN, format!("failed: {e}")),
            };
            let ratio = if bound > 0.0 { capacity / bound } else { f64::INFINITY };
            Ok(LoewnerRow {
                big_r: pair.big_r,
                capacity,
                content_e: ce.value,
                content_f: cf.value,
                diam_e: ce.set_diam,
                diam_f: cf.set_diam,
                lower_bound: bound,
                ratio,
                status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let finite: Vec<f64> = rows.iter().filter(|r| r.status == "ok" && r.ratio.is_finite()).map(|r| r.ratio).collect();
    let c_min = finite.iter().copied().reduce(f64::min);
    let c_max = finite.iter().copied().reduce(f64::max);
    let spread = c_min.zip(c_max).map(|(a, b)| b / a);
    Ok(LoewnerReport { s, rows, c_min, c_max, spread })
}

/// Opposite quarter segments `[a, a + R/4]` and `[a + 3R/4, a + R]` of a
/// one-dimensional cloud, for the interval window starting at coordinate `a`.
pub fn quarter_segments(cloud: &PointCloud, a: f64, big_r: f64) -> Result<ContinuaPair> {
    if cloud.dim() != Some(1) {
        return invalid("quarter segments need a one-dimensional coordinate cloud");
    }
    let mut e = Vec::new();
    let mut f = Vec::new();
    let slack = 1e-12 * big_r;
    for i in 0..cloud.len() {
        let x = cloud.coords(i).map(|c| c[0]).unwrap_or(f64::NAN);
        if x >= a - slack && x <= a + big_r / 4.0 + slack {
            e.push(i);
        } else if x >= a + 0.75 * big_r - slack && x <= a + big_r + slack {
            f.push(i);
        }
    }
    if e.is_empty() || f.is_empty() {
        return invalid("window holds no sample points for one of the segments");
    }
    Ok(ContinuaPair { e, f, big_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filling::{FillingConfig, FillingGraph};
    use crate::space::gen_interval;
    use crate::uniformize::{uniformize, UniformParams};

    #[test]
    fn bound_cases() {
        let (v, t) = predicted_annulus_bound(0.1, 0.1 * 2f64.exp(), 2.0, 0.5, 1.0).unwrap();
        assert_eq!(t, CaseTag::Critical);
        assert!((v - 0.5).abs() < 1e-12);
        let (v, t) = predicted_annulus_bound(0.01, 0.5, 2.0, 0.25, 1.0).unwrap();
        assert_eq!(t, CaseTag::Small);
        assert!((v - 0.1).abs() < 1e-12);
        let (v, t) = predicted_annulus_bound(0.01, 0.25, 2.0, 0.75, 1.0).unwrap();
        assert_eq!(t, CaseTag::Large);
        assert!((v - 2.0).abs() < 1e-12);
        assert!(predicted_annulus_bound(0.1, 0.5, 2.0, 0.5, 0.0).is_err());
        assert_eq!(serde_json::to_string(&CaseTag::Critical).unwrap(), "2");
    }

    #[test]
    fn cutoff_values() {
        let c = gen_interval(6).unwrap();
        let h = c.diam() / 64.0;
        let spec = AnnulusSpec::new(&c, 32, 4.0 * h, 16.0 * h).unwrap();
        let ur = lipschitz_cutoff(&c, &spec, CutoffVariant::CaseR);
        assert_eq!(ur.values[32 + 8], 1.0);
        assert_eq!(ur.values[32 + 16], 0.0);
        assert_eq!(ur.values[0], 0.0);
        let us = lipschitz_cutoff(&c, &spec, CutoffVariant::Caser);
        assert!((us.values[32 + 6] - 0.5).abs() < 1e-12);
        let ul = log_cutoff(&c, &spec);
        assert_eq!(ul.values[32], 1.0);
        assert_eq!(ul.values[32 + 3], 1.0);
        assert_eq!(ul.values[32 + 16], 0.0);
        assert!((ul.values[32 + 8] - 0.5).abs() < 1e-12);
        assert!(AnnulusSpec::new(&c, 32, 0.3, 0.5).is_err());
    }

    #[test]
    fn gradient_bound_profile() {
        let c = gen_interval(5).unwrap();
        let (_, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        let ug = uniformize(g, UniformParams::from_theta(2.0, 2.0, 0.5).unwrap(), &c).unwrap();
        let h = c.diam() / 32.0;
        let r = 2.0 * h;
        let spec = AnnulusSpec { x0: 0, r, big_r: r * std::f64::consts::E };
        let b = log_cutoff_gradient_bound(&c, &ug, &spec);
        let mut profile = Vec::new();
        for (v, vx) in ug.base.vertices().iter().enumerate() {
            let d = c.dist(0, vx.point);
            if d >= spec.big_r {
                assert_eq!(b.values[v], 0.0);
            }
            if vx.point == 2 {
                assert!((b.values[v] - 1.0 / r).abs() < 1e-9);
            }
            if d >= r && d < spec.big_r {
                profile.push((d, b.values[v]));
            }
        }
        profile.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(profile.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn content_basics() {
        let c = gen_interval(6).unwrap();
        let single = hausdorff_content(&c, &[5], 1.0, f64::INFINITY).unwrap();
        assert_eq!(single.value, 0.0);
        let empty = hausdorff_content(&c, &[], 1.0, f64::INFINITY).unwrap();
        assert!(empty.cover.is_empty() && empty.value == 0.0);
        let all: Vec<usize> = (0..c.len()).collect();
        let full = hausdorff_content(&c, &all, 1.0, f64::INFINITY).unwrap();
        let mesh = c.diam() / 64.0;
        assert!(full.value <= 0.9 + 1e-12 && full.value >= 0.9 - 2.0 * mesh);
        // every point lies in some reported ball
        for i in all {
            assert!(full.cover.iter().any(|b| c.dist(i, b.center) <= b.radius));
        }
        let sum: f64 = full.cover.iter().map(|b| b.diam.powf(1.0)).sum();
        assert!((sum - full.value).abs() < 1e-12);
    }

    #[test]
    fn content_with_small_tau_and_large_s() {
        let c = gen_interval(6).unwrap();
        let all: Vec<usize> = (0..c.len()).collect();
        let tau = 0.1;
        let est = hausdorff_content(&c, &all, 1.0, tau).unwrap();
        assert!(est.cover.iter().all(|b| b.diam < tau));
        assert!(est.value <= est.cover.len() as f64 * (2.0 * tau));
        // for s = 2 splitting pays off: far below diam^2
        let est2 = hausdorff_content(&c, &all, 2.0, f64::INFINITY).unwrap();
        assert!(est2.value < 0.1 * 0.81);
        for i in 0..c.len() {
            assert!(est2.cover.iter().any(|b| c.dist(i, b.center) <= b.radius));
        }
    }

    #[test]
    fn content_monotone_and_subadditive_on_segments() {
        let c = gen_interval(6).unwrap();
        let a: Vec<usize> = (0..20).collect();
        let b: Vec<usize> = (0..40).collect();
        let far: Vec<usize> = (50..60).collect();
        for s in [0.5, 1.0] {
            let va = hausdorff_content(&c, &a, s, f64::INFINITY).unwrap().value;
            let vb = hausdorff_content(&c, &b, s, f64::INFINITY).unwrap().value;
            assert!(va <= vb + 1e-12);
            let vf = hausdorff_content(&c, &far, s, f64::INFINITY).unwrap().value;
            let union: Vec<usize> = a.iter().chain(&far).copied().collect();
            let vu = hausdorff_content(&c, &union, s, f64::INFINITY).unwrap().value;
            assert!(vu <= va + vf + 1e-12);
        }
    }

    #[test]
    fn loewner_bound_arithmetic() {
        let (r, s, theta, p, q) = (0.3f64, 0.5, 0.5, 2.0, 1.0);
        let v = loewner_lower_bound(r.powf(s), r.powf(s), r, s, theta, p, q).unwrap();
        assert!((v - r.powf(q - theta * p)).abs() < 1e-12);
        assert_eq!(loewner_lower_bound(0.0, 1.0, r, s, theta, p, q).unwrap(), 0.0);
        let one = loewner_lower_bound(0.2, 0.3, r, s, theta, p, q).unwrap();
        let two = loewner_lower_bound(0.4, 0.6, r, s, theta, p, q).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12);
        let err = loewner_lower_bound(1.0, 1.0, r, s, 0.2, p, q).unwrap_err().to_string();
        assert!(err.contains("(Q - s)/p < theta"), "{err}");
        assert!(loewner_lower_bound(1.0, 1.0, r, 1.5, theta, p, q).is_err());
    }

    #[test]
    fn singleton_plate_gives_zero_bound() {
        let c = gen_interval(5).unwrap();
        let pair = ContinuaPair { e: (0..8).collect(), f: vec![30], big_r: 0.9 };
        let params = ExperimentParams { p: 2.0, theta: 0.5, q: 1.0, solver: SolverConfig::default() };
        let rep = loewner_experiment(&c, &[pair], 0.5, &params).unwrap();
        assert_eq!(rep.rows[0].lower_bound, 0.0);
        assert!(rep.rows[0].capacity > 0.0);
    }

    #[test]
    fn annulus_sandwich_and_refusal() {
        let c = gen_interval(7).unwrap();
        let h = c.diam() / 128.0;
        let params = ExperimentParams { p: 2.0, theta: 0.5, q: 1.0, solver: SolverConfig::default() };
        let grid: Vec<(f64, f64)> = [4.0, 8.0, 16.0].iter().map(|&k| (2.0 * h, 2.0 * h * k)).collect();
        let rep = annulus_experiment(&c, 64, &grid, &params).unwrap();
        assert_eq!(rep.case, CaseTag::Critical);
        assert!(rep.fitted_exponent.is_none() && rep.fit_note.is_some());
        for row in &rep.rows {
            assert_eq!(row.status, "ok");
            assert!(row.capacity <= row.testfn_energy * (1.0 + 1e-9));
        }
        // nonincreasing in R/r at fixed r
        assert!(rep.rows.windows(2).all(|w| w[1].capacity <= w[0].capacity * (1.0 + 1e-9)));
    }
}
