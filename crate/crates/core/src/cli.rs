//! Command-line front end: argument parsing, config resolution and the
//! `gen`, `fill`, `cap`, `scaling`, `loewner` and `qs` commands.
//!
//! Values resolve as explicit flag, then `BESOVCAP_*` environment variable,
//! then the `--config` TOML file, then the built-in default.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::caplab::{
    annulus_experiment, case_tag, loewner_experiment, quarter_segments, CaseTag, ExperimentParams, ScalingReport,
};
use crate::energy::{
    besov_capacity_with, newton_capacity_with, Arena, Condenser, PairForm, SolveReport, SolverConfig,
};
use crate::error::{Error, Result};
use crate::filling::{FillingConfig, FillingGraph};
use crate::qs::{
    besov_morphism_norm, kink_map, qs_capacity_detector, qs_verdict, snowflake_identity, weak_qs_constant,
    DetectorGrid, DetectorParams, LevelResult, SampledMap, TripleScan,
};
use crate::space::{estimate_ahlfors_q, AhlforsConfig, CloudFile, PointCloud, Space};
use crate::uniformize::{uniformize, UniformParams, UniformizedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Generate a sample space and estimate its Ahlfors exponent.
    Gen,
    /// Build and uniformize the hyperbolic filling.
    Fill,
    /// Capacity of one condenser, or a Besov/Newton comparison over random condensers.
    Cap,
    /// Annulus capacities against the predicted scaling.
    Scaling,
    /// Quarter-segment capacities against the content lower bound.
    Loewner,
    /// Quasisymmetry checks across refinement levels.
    Qs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpaceName {
    Interval,
    Cantor,
    Carpet,
    Gasket,
    Snowflake,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CapKind {
    #[default]
    Besov,
    Newton,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CaseChoice {
    #[default]
    Auto,
    #[value(name = "1")]
    #[serde(rename = "1")]
    Large,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Critical,
    #[value(name = "3")]
    #[serde(rename = "3")]
    Small,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MapName {
    Identity,
    Snowflake,
    Kink,
    #[default]
    KinkInverse,
}

/// Every setting, each optional so that flag, environment and file layers
/// can be merged.
#[derive(Clone, Debug, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[arg(long, global = true, env = "BESOVCAP_SPACE")]
    pub space: Option<SpaceName>,
    /// Generator level.
    #[arg(long, global = true, env = "BESOVCAP_LEVEL")]
    pub level: Option<u32>,
    /// Snowflake exponent in (0, 1].
    #[arg(long, global = true, env = "BESOVCAP_GAMMA")]
    pub gamma: Option<f64>,
    #[arg(long, global = true, env = "BESOVCAP_ALPHA")]
    pub alpha: Option<f64>,
    #[arg(long, global = true, env = "BESOVCAP_TAU")]
    pub tau: Option<f64>,
    /// Deepest filling level; defaults to the sample resolution.
    #[arg(long, global = true, env = "BESOVCAP_DEPTH")]
    pub depth: Option<usize>,
    #[arg(long, global = true, env = "BESOVCAP_P")]
    pub p: Option<f64>,
    /// Smoothness in (0, 1); beta is derived from it.
    #[arg(long, global = true, env = "BESOVCAP_THETA")]
    pub theta: Option<f64>,
    #[arg(long, global = true, env = "BESOVCAP_SEED")]
    pub seed: Option<u64>,
    /// Solver tolerance.
    #[arg(long, global = true, env = "BESOVCAP_TOL")]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, env = "BESOVCAP_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "BESOVCAP_WORKERS")]
    pub workers: Option<usize>,
    /// Cloud JSON to use instead of a generated space.
    #[arg(long, global = true, env = "BESOVCAP_CLOUD")]
    pub cloud: Option<PathBuf>,
    /// Plate E as cloud indices, e.g. `0,3,10-12`.
    #[arg(long = "E", global = true, env = "BESOVCAP_E")]
    #[serde(rename = "E")]
    pub e: Option<String>,
    /// Plate F as cloud indices.
    #[arg(long = "F", global = true, env = "BESOVCAP_F")]
    #[serde(rename = "F")]
    pub f: Option<String>,
    /// Capacity kind for `cap`; Newton plates are the boundary representatives.
    #[arg(long, global = true, env = "BESOVCAP_KIND")]
    pub kind: Option<CapKind>,
    /// Compare Besov and Newton capacities over this many random condensers.
    #[arg(long, global = true, env = "BESOVCAP_COMPARE")]
    pub compare: Option<usize>,
    #[arg(long, global = true, env = "BESOVCAP_CASE")]
    pub case: Option<CaseChoice>,
    /// Content exponent for `loewner`.
    #[arg(long, global = true, env = "BESOVCAP_S")]
    pub s: Option<f64>,
    #[arg(long, global = true, env = "BESOVCAP_MAP")]
    pub map: Option<MapName>,
    /// Refinement levels for `qs`, e.g. `4,5,6`.
    #[arg(long, global = true, env = "BESOVCAP_LEVELS")]
    pub levels: Option<String>,
    /// Local-to-global constant of the distortion detector.
    #[arg(long = "cl", global = true, env = "BESOVCAP_CL")]
    pub c_l: Option<f64>,
}

impl Overrides {
    /// Fills every unset field from `other`.
    fn or(self, other: Overrides) -> Overrides {
        macro_rules! merge {
            ($($f:ident),*) => { Overrides { $($f: self.$f.or(other.$f)),* } };
        }
        merge!(space, level, gamma, alpha, tau, depth, p, theta, seed, tol, out, workers, cloud, e, f, kind, compare, case, s, map, levels, c_l)
    }
}

#[derive(Debug, Parser)]
#[command(name = "besovcap", version, about = "Besov capacities on sampled metric spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with any of the flag names as keys.
    #[arg(long, global = true, env = "BESOVCAP_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub space: SpaceName,
    pub level: u32,
    pub gamma: f64,
    pub alpha: f64,
    pub tau: f64,
    pub depth: Option<usize>,
    pub p: f64,
    pub theta: f64,
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub cloud: Option<PathBuf>,
    #[serde(rename = "E")]
    pub e: Option<Vec<usize>>,
    #[serde(rename = "F")]
    pub f: Option<Vec<usize>>,
    pub kind: CapKind,
    pub compare: Option<usize>,
    pub case: CaseChoice,
    pub s: f64,
    pub map: MapName,
    pub levels: Vec<u32>,
    pub c_l: f64,
}

fn constraint<T>(msg: String) -> Result<T> {
    Err(Error::InvalidArgument(format!("constraint violated: {msg}")))
}

/// Parses `0,3,10-12` into sorted indices.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::InvalidArgument(format!("cannot parse index list entry {part:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

impl RunConfig {
    /// Merges flags over the TOML file (if any) over defaults and validates.
    pub fn resolve(command: Command, flags: Overrides, config: Option<&Path>) -> Result<RunConfig> {
        let file = match config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                toml::from_str::<Overrides>(&text)
                    .map_err(|e| Error::InvalidArgument(format!("config file {}: {e}", path.display())))?
            }
            None => Overrides::default(),
        };
        let o = flags.or(file);
        let levels = match &o.levels {
            Some(s) => parse_index_list(s)?.into_iter().map(|l| l as u32).collect(),
            None => vec![4, 5, 6],
        };
        let cfg = RunConfig {
            command,
            space: o.space.unwrap_or(SpaceName::Interval),
            level: o.level.unwrap_or(6),
            gamma: o.gamma.unwrap_or(0.5),
            alpha: o.alpha.unwrap_or(2.0),
            tau: o.tau.unwrap_or(1.5),
            depth: o.depth,
            p: o.p.unwrap_or(2.0),
            theta: o.theta.unwrap_or(0.5),
            seed: o.seed.unwrap_or(0),
            tol: o.tol,
            out: o.out.unwrap_or_else(|| PathBuf::from("out")),
            workers: o.workers,
            cloud: o.cloud,
            e: o.e.as_deref().map(parse_index_list).transpose()?,
            f: o.f.as_deref().map(parse_index_list).transpose()?,
            kind: o.kind.unwrap_or_default(),
            compare: o.compare,
            case: o.case.unwrap_or_default(),
            s: o.s.unwrap_or(0.5),
            map: o.map.unwrap_or_default(),
            levels,
            c_l: o.c_l.unwrap_or(2.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return constraint(format!("theta in (0,1), got {}", self.theta));
        }
        if !(self.alpha > 1.0) {
            return constraint(format!("alpha > 1, got {}", self.alpha));
        }
        if !(self.tau > 1.0) {
            return constraint(format!("tau > 1, got {}", self.tau));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return constraint(format!("p > 1, got {}", self.p));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return constraint(format!("gamma in (0,1], got {}", self.gamma));
        }
        if self.level == 0 {
            return constraint("level >= 1".to_string());
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return constraint(format!("tol > 0, got {t}"));
            }
        }
        if self.workers == Some(0) {
            return constraint("workers >= 1".to_string());
        }
        if !(self.c_l > 1.0) {
            return constraint(format!("cl > 1, got {}", self.c_l));
        }
        if !(self.s > 0.0) {
            return constraint(format!("s > 0, got {}", self.s));
        }
        if self.levels.is_empty() {
            return constraint("at least one qs level".to_string());
        }
        let beta = self.uniform_params()?.beta;
        if !(beta > 0.0) {
            return constraint(format!("derived beta > 0, got {beta}"));
        }
        Ok(())
    }

    pub fn uniform_params(&self) -> Result<UniformParams> {
        UniformParams::from_theta(self.alpha, self.p, self.theta)
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig { tol: self.tol, ..Default::default() }
    }

    fn space(&self) -> Space {
        match self.space {
            SpaceName::Interval => Space::Interval,
            SpaceName::Cantor => Space::Cantor,
            SpaceName::Carpet => Space::Carpet,
            SpaceName::Gasket => Space::Gasket,
            SpaceName::Snowflake => Space::Snowflake { gamma: self.gamma },
        }
    }

    fn load_cloud(&self) -> Result<PointCloud> {
        match &self.cloud {
            Some(path) => PointCloud::read_json(path),
            None => self.space().build(self.level),
        }
    }

    /// Dimension used for case tags and bounds: analytic for generated spaces,
    /// estimated for loaded clouds.
    fn dimension(&self, cloud: &PointCloud) -> Result<f64> {
        if self.cloud.is_some() {
            Ok(estimate_ahlfors_q(cloud, &AhlforsConfig { seed: self.seed, ..Default::default() })?.q_hat)
        } else {
            Ok(self.space().analytic_dimension())
        }
    }

    fn uniformized(&self, cloud: &PointCloud) -> Result<UniformizedGraph> {
        let fcfg = FillingConfig { alpha: self.alpha, tau: self.tau, depth: self.depth, ..Default::default() };
        let (_, graph) = FillingGraph::from_cloud(cloud, &fcfg)?;
        uniformize(graph, self.uniform_params()?, cloud)
    }
}

/// What a run wrote and whether every solve succeeded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutcome {
    pub artifacts: Vec<String>,
    pub summary: Value,
    /// `false` when some solve failed; artifacts carry the per-row status.
    pub complete: bool,
}

struct Sink<'a> {
    dir: &'a Path,
    artifacts: Vec<String>,
}

impl Sink<'_> {
    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.artifacts.push(name.to_string());
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

/// Runs one command, writing artifacts and `manifest.json` under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let mut sink = Sink { dir: &cfg.out, artifacts: Vec::new() };
    let result = pool.install(|| match cfg.command {
        Command::Gen => run_gen(cfg, &mut sink),
        Command::Fill => run_fill(cfg, &mut sink),
        Command::Cap => run_cap(cfg, &mut sink),
        Command::Scaling => run_scaling(cfg, &mut sink),
        Command::Loewner => run_loewner(cfg, &mut sink),
        Command::Qs => run_qs(cfg, &mut sink),
    });
    let (summary, complete, error) = match result {
        Ok((summary, complete)) => (summary, complete, None),
        Err(e) => (Value::Null, false, Some(e)),
    };
    let params = cfg.uniform_params()?;
    let manifest = json!({
        "command": cfg.command,
        "config": cfg,
        "derived": {
            "epsilon": params.epsilon,
            "beta": params.beta,
            "theta_residual": params.theta_residual(),
        },
        "status": match (&error, complete) {
            (Some(e), _) => format!("error: {e}"),
            (None, true) => "ok".to_string(),
            (None, false) => "incomplete".to_string(),
        },
        "artifacts": sink.artifacts,
        "summary": summary,
    });
    let artifacts = sink.artifacts.clone();
    sink.json("manifest.json", &manifest)?;
    match error {
        Some(e) => Err(e),
        None => Ok(RunOutcome { artifacts, summary: manifest["summary"].clone(), complete }),
    }
}

type Step = Result<(Value, bool)>;

fn run_gen(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let cloud = cfg.load_cloud()?;
    sink.json("cloud.json", &CloudFile::from(&cloud))?;
    cloud.write_csv(sink.file("cloud.csv")?)?;
    let fit = estimate_ahlfors_q(&cloud, &AhlforsConfig { seed: cfg.seed, ..Default::default() })?;
    sink.json("ahlfors.json", &fit)?;
    Ok((json!({ "points": cloud.len(), "diam": cloud.diam(), "ahlfors_q": fit.q_hat }), true))
}

fn run_fill(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let cloud = cfg.load_cloud()?;
    let ug = cfg.uniformized(&cloud)?;
    fs::write(cfg.out.join("filling.json"), ug.base.to_json()?)?;
    sink.artifacts.push("filling.json".to_string());
    ug.write_vertices_csv(sink.file("vertices.csv")?)?;
    ug.write_edges_csv(sink.file("edges.csv")?)?;
    Ok((
        json!({
            "vertices": ug.num_vertices(),
            "edges": ug.base.num_edges(),
            "depth": ug.base.depth(),
            "level_masses": ug.level_masses(),
        }),
        true,
    ))
}

fn solve_status(res: Result<SolveReport>) -> Result<(SolveReport, bool)> {
    match res {
        Ok(rep) => Ok((rep, true)),
        Err(Error::NotConverged(rep)) => Ok((*rep, false)),
        Err(e) => Err(e),
    }
}

fn newton_condenser(ug: &UniformizedGraph, e: &[usize], f: &[usize]) -> Result<Condenser> {
    let lift = |s: &[usize]| s.iter().map(|&i| ug.boundary_reps[i]).collect::<Vec<_>>();
    Condenser::new(lift(e), lift(f), Arena::Graph)
}

fn run_cap(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let cloud = cfg.load_cloud()?;
    if let Some(trials) = cfg.compare {
        return run_compare(cfg, &cloud, trials, sink);
    }
    let (Some(e), Some(f)) = (&cfg.e, &cfg.f) else {
        return constraint("cap needs --E and --F (or --compare)".to_string());
    };
    if let Some(&bad) = e.iter().chain(f).find(|&&i| i >= cloud.len()) {
        return constraint(format!("plate index {bad} < {} points", cloud.len()));
    }
    let solver = cfg.solver();
    let res = match cfg.kind {
        CapKind::Besov => {
            let form = PairForm::besov(&cloud, cfg.theta, cfg.p)?;
            besov_capacity_with(&form, cfg.theta, &Condenser::new(e.clone(), f.clone(), Arena::Cloud)?, &solver)
        }
        CapKind::Newton => {
            let ug = cfg.uniformized(&cloud)?;
            let form = PairForm::newton(&ug, cfg.p)?;
            newton_capacity_with(&form, &newton_condenser(&ug, e, f)?, &solver)
        }
    };
    let (mut rep, ok) = solve_status(res)?;
    rep.seed = Some(cfg.seed);
    let mut value = serde_json::to_value(&rep)?;
    value["status"] = json!(if ok { "ok" } else { "not_converged" });
    sink.json("cap.json", &value)?;
    rep.write_minimizer_csv(sink.file("minimizer.csv")?)?;
    Ok((json!({ "capacity": rep.value, "status": value["status"] }), ok))
}

/// Random plate pair: two disjoint closed balls with seeded centers and radii.
fn random_plates(cloud: &PointCloud, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let n = cloud.len();
    let lo = cloud.resolution();
    let hi = cloud.diam() / 4.0;
    loop {
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (rx, ry) = (rng.gen_range(0.0..hi.max(lo)), rng.gen_range(0.0..hi.max(lo)));
        let e: Vec<usize> = (0..n).filter(|&i| cloud.dist(x, i) <= rx).collect();
        let f: Vec<usize> = (0..n).filter(|&i| cloud.dist(y, i) <= ry).collect();
        if e.iter().all(|i| f.binary_search(i).is_err()) && e.len() + f.len() < n {
            return (e, f);
        }
    }
}

fn run_compare(cfg: &RunConfig, cloud: &PointCloud, trials: usize, sink: &mut Sink) -> Step {
    if trials == 0 {
        return constraint("compare >= 1".to_string());
    }
    let ug = cfg.uniformized(cloud)?;
    let besov = PairForm::besov(cloud, cfg.theta, cfg.p)?;
    let newton = PairForm::newton(&ug, cfg.p)?;
    let solver = cfg.solver();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(trials);
    let mut all_ok = true;
    for _ in 0..trials {
        let (e, f) = random_plates(cloud, &mut rng);
        let cond = Condenser::new(e.clone(), f.clone(), Arena::Cloud)?;
        let (b, ok_b) = solve_status(besov_capacity_with(&besov, cfg.theta, &cond, &solver))?;
        let (nw, ok_n) = solve_status(newton_capacity_with(&newton, &newton_condenser(&ug, &e, &f)?, &solver))?;
        all_ok &= ok_b && ok_n;
        rows.push(json!({
            "E": e,
            "F": f,
            "besov": b.value,
            "newton": nw.value,
            "ratio": b.value / nw.value,
            "status": if ok_b && ok_n { "ok" } else { "not_converged" },
        }));
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r["ratio"].as_f64()).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    sink.json("compare.json", &rows)?;
    Ok((json!({ "ratio_min": lo, "ratio_max": hi, "band": hi / lo }), all_ok))
}

/// Annulus grid for a case, inside `[2 res, diam/4]`.
pub fn default_annulus_grid(cloud: &PointCloud, tag: CaseTag) -> Vec<(f64, f64)> {
    let r_min = 2.0 * cloud.resolution();
    let r_max = cloud.diam() / 4.0;
    match tag {
        CaseTag::Critical => {
            let r = r_min.max(r_max / 64.0);
            [8.0, 16.0, 32.0, 64.0].iter().map(|k| (r, k * r)).filter(|&(_, big)| big <= r_max * (1.0 + 1e-12)).collect()
        }
        CaseTag::Small => (0..5).map(|j| (r_max / 8.0 / 2f64.powi(j), r_max)).filter(|&(r, _)| r >= r_min * (1.0 - 1e-12)).collect(),
        CaseTag::Large => {
            let r = 2.0 * r_min;
            (0..5).map(|j| (r, r_max / 2f64.powi(4 - j))).filter(|&(r, big)| big > 2.0 * r).collect()
        }
    }
}

/// Point whose farthest neighbour is nearest.
pub fn center_point(cloud: &PointCloud) -> usize {
    (0..cloud.len())
        .map(|i| (i, (0..cloud.len()).map(|j| cloud.dist(i, j)).fold(0.0, f64::max)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn run_scaling(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let cloud = cfg.load_cloud()?;
    let q = cfg.dimension(&cloud)?;
    let tag = case_tag(cfg.p, cfg.theta, q)?;
    let wanted = match cfg.case {
        CaseChoice::Auto => tag,
        CaseChoice::Large => CaseTag::Large,
        CaseChoice::Critical => CaseTag::Critical,
        CaseChoice::Small => CaseTag::Small,
    };
    if wanted != tag {
        return constraint(format!(
            "case {} requested but p*theta = {} against Q = {q} gives case {}",
            wanted as u8,
            cfg.p * cfg.theta,
            tag as u8
        ));
    }
    let grid = default_annulus_grid(&cloud, tag);
    if grid.is_empty() {
        return constraint("annulus grid is empty at this level; raise --level".to_string());
    }
    let params = ExperimentParams { p: cfg.p, theta: cfg.theta, q, solver: cfg.solver() };
    let report: ScalingReport = annulus_experiment(&cloud, center_point(&cloud), &grid, &params)?;
    sink.json("scaling.json", &report)?;
    report.write_csv(sink.file("scaling.csv")?)?;
    let ok = report.rows.iter().all(|r| r.status == "ok");
    Ok((
        json!({
            "case_tag": report.case,
            "fitted_exponent": report.fitted_exponent,
            "target_exponent": report.target_exponent,
            "alternative_exponent": report.alternative_exponent,
        }),
        ok,
    ))
}

fn run_loewner(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let cloud = cfg.load_cloud()?;
    let q = cfg.dimension(&cloud)?;
    let diam = cloud.diam();
    let pairs = (0..3)
        .map(|j| {
            let big_r = diam * 8.0 / 9.0 / 2f64.powi(j);
            quarter_segments(&cloud, (diam - big_r) / 2.0, big_r)
        })
        .collect::<Result<Vec<_>>>()?;
    let params = ExperimentParams { p: cfg.p, theta: cfg.theta, q, solver: cfg.solver() };
    let report = loewner_experiment(&cloud, &pairs, cfg.s, &params)?;
    sink.json("loewner.json", &report)?;
    let ok = report.rows.iter().all(|r| r.status == "ok");
    Ok((json!({ "c_min": report.c_min, "c_max": report.c_max, "spread": report.spread }), ok))
}

fn qs_map(cfg: &RunConfig, level: u32) -> Result<SampledMap> {
    match cfg.map {
        MapName::Identity => Ok(SampledMap::identity(cfg.space().build(level)?)),
        MapName::Snowflake => snowflake_identity(level, cfg.gamma),
        MapName::Kink => kink_map(level),
        MapName::KinkInverse => Ok(kink_map(level)?.inverse()),
    }
}

fn run_qs(cfg: &RunConfig, sink: &mut Sink) -> Step {
    let mut levels = Vec::new();
    for &level in &cfg.levels {
        let map = qs_map(cfg, level)?;
        let n = map.len();
        let est = weak_qs_constant(&map, &TripleScan { seed: cfg.seed, ..Default::default() })?;
        // distance functions on the target are Lipschitz there
        let anchors = [0, n / 4, n / 2, 3 * n / 4, n - 1];
        let family: Vec<Vec<f64>> =
            anchors.iter().map(|&a| (0..n).map(|w| map.codomain.dist(a, w)).collect()).collect();
        let morph = besov_morphism_norm(&map, &family, cfg.theta, cfg.theta, cfg.p)?;
        let h = map.domain.min_gap();
        let grid = DetectorGrid {
            centers: vec![n / 4, n / 2, 3 * n / 4],
            radii: vec![(h, h), (2.0 * h, 2.0 * h), (h, 2.0 * h), (2.0 * h, 4.0 * h)],
        };
        let params = DetectorParams {
            theta_z: cfg.theta,
            theta_w: cfg.theta,
            p: cfg.p,
            c_l: cfg.c_l,
            q_z: cfg.space().analytic_dimension(),
            c_phi: morph.sup.unwrap_or(1.0),
            solver: cfg.solver(),
        };
        let detector = qs_capacity_detector(&map, &grid, &params)?;
        levels.push(LevelResult { level, h_hat: est.h_hat, morphism_sup: morph.sup, detector: Some(detector) });
    }
    let report = qs_verdict(&levels);
    sink.json("qs.json", &report)?;
    let ok = report.distortion_rows.iter().all(|r| r.status == "ok");
    Ok((json!({ "verdict": report.verdict, "H_hat": report.h_hat }), ok))
}

/// Exit codes: 0 success, 2 invalid configuration, 3 solver failure, 1 other.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match RunConfig::resolve(cli.command, cli.overrides, cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("besovcap: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(out) if out.complete => 0,
        Ok(_) => {
            eprintln!("besovcap: some solves did not converge; see the status columns");
            3
        }
        Err(e @ Error::InvalidArgument(_)) => {
            eprintln!("besovcap: {e}");
            2
        }
        Err(e @ Error::NotConverged(_)) => {
            eprintln!("besovcap: {e}");
            3
        }
        Err(e) => {
            eprintln!("besovcap: {e}");
            1
        }
    }
}
