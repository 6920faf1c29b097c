//! Quasisymmetry checks for sampled homeomorphisms: weak-QS triple scans,
//! gauge promotion, Besov pullback ratios and a capacity-based distortion
//! detector.

use std::collections::VecDeque;
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{besov_capacity_with, Arena, Condenser, PairForm, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::space::PointCloud;

/// A bijection between two equally sized clouds: `pairing[i]` is the image
/// of domain point `i`.
#[derive(Clone, Debug)]
pub struct SampledMap {
    pub domain: PointCloud,
    pub codomain: PointCloud,
    pub pairing: Vec<usize>,
}

impl SampledMap {
    pub fn new(domain: PointCloud, codomain: PointCloud, pairing: Vec<usize>) -> Result<Self> {
        let n = domain.len();
        if n == 0 || codomain.len() != n || pairing.len() != n {
            return invalid(format!(
                "map needs nonempty clouds of equal size and a full pairing, got {}, {} and {}",
                n,
                codomain.len(),
                pairing.len()
            ));
        }
        let mut hit = vec![false; n];
        for &w in &pairing {
            if w >= n || hit[w] {
                return invalid(format!("pairing is not a bijection (image {w})"));
            }
            hit[w] = true;
        }
        Ok(SampledMap { domain, codomain, pairing })
    }

    /// Identity of a cloud onto itself.
    pub fn identity(cloud: PointCloud) -> Self {
        let pairing = (0..cloud.len()).collect();
        SampledMap { codomain: cloud.clone(), domain: cloud, pairing }
    }

    /// Reads a CSV with header `z_index, w_index`.
    pub fn from_pairing_csv<R: Read>(domain: PointCloud, codomain: PointCloud, reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            z_index: usize,
            w_index: usize,
        }
        let n = domain.len();
        let mut pairing = vec![usize::MAX; n];
        for row in csv::Reader::from_reader(reader).deserialize() {
            let Row { z_index, w_index } = row?;
            if z_index >= n || pairing[z_index] != usize::MAX {
                return invalid(format!("pairing row for z_index {z_index} is out of range or repeated"));
            }
            pairing[z_index] = w_index;
        }
        if pairing.contains(&usize::MAX) {
            return invalid("pairing does not cover every domain point");
        }
        SampledMap::new(domain, codomain, pairing)
    }

    pub fn len(&self) -> usize {
        self.pairing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairing.is_empty()
    }

    /// The inverse map, with domain and codomain swapped.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (z, &w) in self.pairing.iter().enumerate() {
            inv[w] = z;
        }
        SampledMap { domain: self.codomain.clone(), codomain: self.domain.clone(), pairing: inv }
    }

    fn image_dist(&self, i: usize, j: usize) -> f64 {
        self.codomain.dist(self.pairing[i], self.pairing[j])
    }
}

/// Kink map on `2^k + 1` equally spaced points: identity on `[0, 1/2]` and
/// `1/2 + (x - 1/2)^2` beyond, with both sides rescaled to diameter 0.9.
pub fn kink_map(k: u32) -> Result<SampledMap> {
    if !(1..=20).contains(&k) {
        return invalid("kink map level must lie in 1..=20");
    }
    let m = 1usize << k;
    let t: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let phi = |x: f64| if x <= 0.5 { x } else { 0.5 + (x - 0.5) * (x - 0.5) };
    let w = vec![1.0 / (m + 1) as f64; m + 1];
    let z = PointCloud::from_coords(1, t.iter().map(|x| 0.9 * x).collect(), 1.0, w.clone())?;
    let img = PointCloud::from_coords(1, t.iter().map(|&x| 0.9 * phi(x) / 0.75).collect(), 1.0, w)?;
    SampledMap::new(z, img, (0..=m).collect())
}

/// Identity from `2^k + 1` equally spaced points with `|x - y|` onto the same
/// points with `|x - y|^gamma`.
pub fn snowflake_identity(k: u32, gamma: f64) -> Result<SampledMap> {
    if !(1..=20).contains(&k) {
        return invalid("snowflake map level must lie in 1..=20");
    }
    let m = 1usize << k;
    let coords: Vec<f64> = (0..=m).map(|i| 0.9 * i as f64 / m as f64).collect();
    let w = vec![1.0 / (m + 1) as f64; m + 1];
    let z = PointCloud::from_coords(1, coords.clone(), 1.0, w.clone())?;
    let snow = PointCloud::from_coords(1, coords, gamma, w)?;
    SampledMap::new(z, snow, (0..=m).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Exhaustive up to 200 points or when the budget covers every triple.
    #[default]
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleScan {
    pub budget: u64,
    /// Only triples with `diam{x, y, z} <= rho` count.
    pub locality: Option<f64>,
    pub seed: u64,
    pub mode: ScanMode,
}

impl Default for TripleScan {
    fn default() -> Self {
        TripleScan { budget: 1_000_000, locality: None, seed: 0, mode: ScanMode::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakQsEstimate {
    /// Largest image ratio over admissible triples (0 if none).
    pub h_hat: f64,
    /// Triple `(x, y, z)` attaining it.
    pub worst: Option<(usize, usize, usize)>,
    pub admissible: u64,
    pub exhaustive: bool,
}

/// Maximum of `d_W(fx, fz) / d_W(fx, fy)` over distinct triples with
/// `d_Z(x, z) <= d_Z(x, y)`.
pub fn weak_qs_constant(map: &SampledMap, scan: &TripleScan) -> Result<WeakQsEstimate> {
    if scan.budget == 0 {
        return invalid("triple budget must be at least 1");
    }
    let n = map.len();
    let total = (n as u64).saturating_mul(n.saturating_sub(1) as u64).saturating_mul(n.saturating_sub(2) as u64);
    let exhaustive = match scan.mode {
        ScanMode::Exhaustive => true,
        ScanMode::Sampled => scan.budget >= total,
        ScanMode::Auto => n <= 200 || scan.budget >= total,
    };
    let z = &map.domain;
    let rho = scan.locality.unwrap_or(f64::INFINITY);
    let consider = |x: usize, y: usize, zz: usize| -> Option<f64> {
        let dxy = z.dist(x, y);
        let dxz = z.dist(x, zz);
        if dxz > dxy || dxy > rho || dxz > rho || z.dist(y, zz) > rho {
            return None;
        }
        Some(map.image_dist(x, zz) / map.image_dist(x, y))
    };
    type Best = (f64, Option<(usize, usize, usize)>, u64);
    let merge = |a: Best, b: Best| -> Best {
        let count = a.2 + b.2;
        // ties resolve to the lexicographically first triple
        if b.0 > a.0 || (b.0 == a.0 && b.1.is_some() && (a.1.is_none() || b.1 < a.1)) {
            (b.0, b.1, count)
        } else {
            (a.0, a.1, count)
        }
    };
    let (h, worst, count) = if exhaustive {
        (0..n)
            .into_par_iter()
            .map(|x| {
                let mut best: Best = (0.0, None, 0);
                for y in 0..n {
                    if y == x {
                        continue;
                    }
                    for zz in 0..n {
                        if zz == x || zz == y {
                            continue;
                        }
                        if let Some(r) = consider(x, y, zz) {
                            best.2 += 1;
                            if r > best.0 || best.1.is_none() {
                                best.0 = r;
                                best.1 = Some((x, y, zz));
                            }
                        }
                    }
                }
                best
            })
            .reduce(|| (0.0, None, 0), merge)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(scan.seed);
        let mut best: Best = (0.0, None, 0);
        for _ in 0..scan.budget {
            let x = rng.gen_range(0..n);
            let y = rng.gen_range(0..n);
            let zz = rng.gen_range(0..n);
            if x == y || x == zz || y == zz {
                continue;
            }
            if let Some(r) = consider(x, y, zz) {
                best = merge(best, (r, Some((x, y, zz)), 1));
            }
        }
        best
    };
    Ok(WeakQsEstimate { h_hat: h, worst, admissible: count, exhaustive })
}

/// Monotone gauge `eta` with `eta(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eta {
    /// `c t^a`.
    PowerLaw { c: f64, a: f64 },
    /// Piecewise linear through `(t, value)` knots starting at `(0, 0)`,
    /// extended past the last knot with the last slope.
    Tabulated { t: Vec<f64>, value: Vec<f64> },
}

impl Eta {
    pub fn validate(&self) -> Result<()> {
        match self {
            Eta::PowerLaw { c, a } => {
                if !(*c > 0.0 && *a > 0.0) {
                    return invalid(format!("power-law gauge needs c > 0 and a > 0, got c = {c}, a = {a}"));
                }
            }
            Eta::Tabulated { t, value } => {
                if t.len() != value.len() || t.len() < 2 {
                    return invalid("tabulated gauge needs at least two knots of matching length");
                }
                if t[0] != 0.0 || value[0] != 0.0 {
                    return invalid("tabulated gauge must start at (0, 0)");
                }
                for i in 1..t.len() {
                    if !(t[i] > t[i - 1]) {
                        return invalid("tabulated gauge knots must increase");
                    }
                    if !(value[i] >= value[i - 1]) || !(value[i] > 0.0) {
                        return invalid(format!("tabulated gauge is not monotone and positive at knot {i}"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Eta::PowerLaw { c, a } => c * s.powf(*a),
            Eta::Tabulated { t, value } => {
                let k = t.partition_point(|&x| x < s).clamp(1, t.len() - 1);
                let slope = (value[k] - value[k - 1]) / (t[k] - t[k - 1]);
                value[k - 1] + slope * (s - t[k - 1])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub eta: Eta,
    pub kappa: f64,
    pub r0: f64,
    pub diam_z: f64,
    pub diam_w: f64,
    pub c_l: f64,
}

/// Global gauge built from a local one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromotedGauge {
    pub params: GaugeParams,
}

impl PromotedGauge {
    /// The four branches at `t`.
    pub fn branches(&self, t: f64) -> [f64; 4] {
        let p = &self.params;
        let eta = |s: f64| p.eta.eval(s);
        let q = p.diam_w / p.kappa;
        [
            eta(t),
            q * eta(t),
            q * eta(2.0 * p.diam_z / p.r0 * t),
            p.diam_w / (p.kappa * eta(p.r0 / (2.0 * p.diam_z))) * eta(t),
        ]
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.branches(t).into_iter().fold(0.0, f64::max)
    }
}

pub fn promote_gauge(params: GaugeParams) -> Result<PromotedGauge> {
    params.eta.validate()?;
    for (name, v) in [("kappa", params.kappa), ("r0", params.r0), ("diam_z", params.diam_z), ("diam_w", params.diam_w)] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} = {v} must be positive"));
        }
    }
    if !(params.c_l > 1.0) {
        return invalid(format!("C_L = {} must exceed 1", params.c_l));
    }
    Ok(PromotedGauge { params })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphismReport {
    /// Per test function; `None` where the function has zero energy on `W`.
    pub ratios: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
    pub sup: Option<f64>,
}

/// Energy ratios `E_Z(f o phi) / E_W(f)` over test functions on `W`.
pub fn besov_morphism_norm(map: &SampledMap, family: &[Vec<f64>], theta_z: f64, theta_w: f64, p: f64) -> Result<MorphismReport> {
    if family.is_empty() {
        return invalid("test family is empty");
    }
    let fz = PairForm::besov(&map.domain, theta_z, p)?;
    let fw = PairForm::besov(&map.codomain, theta_w, p)?;
    let mut ratios = Vec::with_capacity(family.len());
    let mut excluded = Vec::new();
    for (k, f) in family.iter().enumerate() {
        if f.len() != map.len() {
            return invalid(format!("test function {k} has {} values, expected {}", f.len(), map.len()));
        }
        let ew = fw.energy(f);
        if ew == 0.0 {
            excluded.push(k);
            ratios.push(None);
            continue;
        }
        let pulled: Vec<f64> = map.pairing.iter().map(|&w| f[w]).collect();
        ratios.push(Some(fz.energy(&pulled) / ew));
    }
    let sup = ratios.iter().flatten().copied().reduce(f64::max);
    Ok(MorphismReport { ratios, excluded, sup })
}

/// Configurations scanned by the detector: every center paired with every
/// `(r, R)` of the grid, in domain distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorGrid {
    pub centers: Vec<usize>,
    pub radii: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub theta_z: f64,
    pub theta_w: f64,
    pub p: f64,
    pub c_l: f64,
    /// Dimension of the domain; the sharp regime needs `theta_z p = Q_Z`.
    pub q_z: f64,
    /// Morphism constant used to move capacities across the map.
    pub c_phi: f64,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorRow {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `d_W(phi x, phi y)`.
    #[serde(rename = "L")]
    pub big_l: f64,
    /// `d_W(phi x, phi z)`.
    pub l: f64,
    pub observed: f64,
    /// `L <= 4 C_L^2 l`: the distortion is bounded outright.
    pub bounded: bool,
    pub cap_w: Option<f64>,
    pub cap_z: Option<f64>,
    /// Implied bound on `L / l` for the exponent readings `1 - p` and `-p`.
    pub implied_bound_1mp: f64,
    pub implied_bound_mp: f64,
    /// Observed distortion above both implied bounds.
    pub exceeds_implied: bool,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub rows: Vec<DetectorRow>,
    pub max_observed: f64,
    pub max_implied_1mp: f64,
    pub max_implied_mp: f64,
    /// Whether `theta_z p` matched `Q_Z` within 1e-9.
    pub sharp_regime: bool,
}

/// Point of `set` (ascending) whose distance from `x` is closest to `target`.
fn nearest_at_distance(cloud: &PointCloud, x: usize, target: f64, skip: &[usize]) -> Option<usize> {
    (0..cloud.len())
        .filter(|i| !skip.contains(i))
        .min_by(|&a, &b| {
            (cloud.dist(x, a) - target).abs().total_cmp(&(cloud.dist(x, b) - target).abs()).then(a.cmp(&b))
        })
}

/// Hop-shortest chain from `from` to `to` through points allowed by `keep`,
/// linking points closer than `link`.
fn chain(cloud: &PointCloud, from: usize, to: usize, link: f64, keep: &dyn Fn(usize) -> bool) -> Option<Vec<usize>> {
    let n = cloud.len();
    let mut prev = vec![usize::MAX; n];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(a) = queue.pop_front() {
        if a == to {
            let mut path = vec![to];
            let mut c = to;
            while c != from {
                c = prev[c];
                path.push(c);
            }
            path.reverse();
            return Some(path);
        }
        for b in 0..n {
            if prev[b] == usize::MAX && keep(b) && cloud.dist(a, b) <= link {
                prev[b] = a;
                queue.push_back(b);
            }
        }
    }
    None
}

/// Reach of the sample-adjacency graph used for plate chains.
fn mesh_link(cloud: &PointCloud) -> f64 {
    1.5 * cloud.resolution()
}

/// Per configuration `(x, y, z)` with `d(x, y) ~ r <= d(x, z) ~ R`: observed
/// image distortion `L / l`, plate capacities on both sides, and the distortion
/// bound they imply, `C_L^2 exp((cap_Z / C_phi)^(1 / beta))`.
pub fn qs_capacity_detector(map: &SampledMap, grid: &DetectorGrid, params: &DetectorParams) -> Result<DetectorReport> {
    if !(params.c_l > 1.0) {
        return invalid("C_L must exceed 1");
    }
    if !(params.c_phi > 0.0) {
        return invalid("morphism constant must be positive");
    }
    let fz = PairForm::besov(&map.domain, params.theta_z, params.p)?;
    let fw = PairForm::besov(&map.codomain, params.theta_w, params.p)?;
    let mut inverse = vec![0; map.len()];
    for (z, &w) in map.pairing.iter().enumerate() {
        inverse[w] = z;
    }
    let w = &map.codomain;
    let link = mesh_link(w);
    let cl2 = params.c_l * params.c_l;
    let configs: Vec<(usize, f64, f64)> = grid
        .centers
        .iter()
        .flat_map(|&x| grid.radii.iter().map(move |&(r, big_r)| (x, r, big_r)))
        .collect();
    for &(x, r, big_r) in &configs {
        if x >= map.len() || !(r > 0.0 && r <= big_r) {
            return invalid(format!("bad detector configuration ({x}, {r}, {big_r})"));
        }
    }
    let rows: Vec<DetectorRow> = configs
        .par_iter()
        .map(|&(x, r, big_r)| {
            let z_dom = &map.domain;
            let y = nearest_at_distance(z_dom, x, r, &[x]).unwrap_or(x);
            let z = nearest_at_distance(z_dom, x, big_r, &[x, y]).unwrap_or(x);
            let (px, py, pz) = (map.pairing[x], map.pairing[y], map.pairing[z]);
            let big_l = w.dist(px, py);
            let l = w.dist(px, pz);
            let observed = big_l / l;
            let mut row = DetectorRow {
                x,
                y,
                z,
                r,
                big_r,
                big_l,
                l,
                observed,
                bounded: big_l <= 4.0 * cl2 * l,
                cap_w: None,
                cap_z: None,
                implied_bound_1mp: 4.0 * cl2,
                implied_bound_mp: 4.0 * cl2,
                exceeds_implied: false,
                status: "ok".to_string(),
            };
            if row.bounded {
                return row;
            }
            // F joins phi x to phi z inside B(phi x, l); E joins phi y to the
            // farthest reachable point outside that ball.
            let f_plate = chain(w, px, pz, link, &|b| w.dist(px, b) <= l);
            let outside = |b: usize| w.dist(px, b) > l;
            let far = (0..w.len())
                .filter(|&b| outside(b))
                .max_by(|&a, &b| w.dist(px, a).total_cmp(&w.dist(px, b)).then(b.cmp(&a)));
            let e_plate = far.and_then(|target| chain(w, py, target, link, &outside));
            let (Some(e_plate), Some(f_plate)) = (e_plate, f_plate) else {
                row.status = "no_plates".to_string();
                return row;
            };
            let solve = |form: &PairForm, theta: f64, e: Vec<usize>, f: Vec<usize>| -> Result<f64> {
                let cond = Condenser::new(e, f, Arena::Cloud)?;
                match besov_capacity_with(form, theta, &cond, &params.solver) {
                    Ok(rep) => Ok(rep.value),
                    Err(Error::NotConverged(rep)) => Err(Error::NotConverged(rep)),
                    Err(e) => Err(e),
                }
            };
            let cap_w = solve(&fw, params.theta_w, e_plate.clone(), f_plate.clone());
            let cap_z = solve(
                &fz,
                params.theta_z,
                e_plate.iter().map(|&b| inverse[b]).collect(),
                f_plate.iter().map(|&b| inverse[b]).collect(),
            );
            match (cap_w, cap_z) {
                (Ok(cw), Ok(cz)) => {
                    row.cap_w = Some(cw);
                    row.cap_z = Some(cz);
                    let moved = cz / params.c_phi;
                    let bound = |beta: f64| cl2 * moved.powf(1.0 / beta).exp();
                    row.implied_bound_1mp = bound(1.0 - params.p).max(4.0 * cl2);
                    row.implied_bound_mp = bound(-params.p).max(4.0 * cl2);
                    row.exceeds_implied = observed > row.implied_bound_1mp.max(row.implied_bound_mp);
                }
                (Err(e), _) | (_, Err(e)) => row.status = format!("failed: {e}"),
            }
            row
        })
        .collect();
    let max_observed = rows.iter().map(|r| r.observed).fold(0.0, f64::max);
    let ok = rows.iter().filter(|r| r.status == "ok");
    let max_implied_1mp = ok.clone().map(|r| r.implied_bound_1mp).fold(0.0, f64::max);
    let max_implied_mp = ok.map(|r| r.implied_bound_mp).fold(0.0, f64::max);
    Ok(DetectorReport {
        rows,
        max_observed,
        max_implied_1mp,
        max_implied_mp,
        sharp_regime: (params.theta_z * params.p - params.q_z).abs() < 1e-9,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "consistent-with-QS")]
    ConsistentWithQs,
    #[serde(rename = "non-QS-trend")]
    NonQsTrend,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

/// One refinement level of a map family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: u32,
    pub h_hat: f64,
    pub morphism_sup: Option<f64>,
    pub detector: Option<DetectorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    #[serde(rename = "H_hat")]
    pub h_hat: Vec<(u32, f64)>,
    pub morphism_sup: Option<f64>,
    pub distortion_rows: Vec<DetectorRow>,
    pub verdict: Verdict,
}

/// Growth factor across levels above which a strictly increasing `H_hat`
/// counts as divergent.
pub const DIVERGENCE_FACTOR: f64 = 2.0;
/// Spread of `H_hat` across levels still read as bounded.
pub const STABLE_BAND: f64 = 1.25;

/// Trend verdict over at least two levels: strictly increasing `H_hat` that
/// grows by [`DIVERGENCE_FACTOR`] is flagged, a spread within [`STABLE_BAND`]
/// is consistent with quasisymmetry, anything else is inconclusive.
pub fn qs_verdict(levels: &[LevelResult]) -> VerdictReport {
    let mut sorted = levels.to_vec();
    sorted.sort_by_key(|l| l.level);
    let hs: Vec<f64> = sorted.iter().map(|l| l.h_hat).collect();
    let verdict = if hs.len() < 2 || hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        Verdict::Inconclusive
    } else {
        let increasing = hs.windows(2).all(|w| w[1] > w[0]);
        let lo = hs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = hs.iter().copied().fold(0.0, f64::max);
        if increasing && hs[hs.len() - 1] / hs[0] >= DIVERGENCE_FACTOR {
            Verdict::NonQsTrend
        } else if hi / lo <= STABLE_BAND {
            Verdict::ConsistentWithQs
        } else {
            Verdict::Inconclusive
        }
    };
    VerdictReport {
        h_hat: sorted.iter().map(|l| (l.level, l.h_hat)).collect(),
        morphism_sup: sorted.iter().filter_map(|l| l.morphism_sup).reduce(f64::max),
        distortion_rows: sorted.iter().flat_map(|l| l.detector.iter().flat_map(|d| d.rows.clone())).collect(),
        verdict,
    }
}
