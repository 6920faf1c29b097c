//! Nested maximal separated nets and the hyperbolic filling graph built on them.
//!
//! Level `n` holds a maximal `alpha^-n`-separated subset `A_n` of the sample,
//! with `A_n` contained in `A_{n+1}` and `A_0` a single point. Vertices are
//! pairs `(n, x)` with `x` in `A_n`; two distinct vertices on the same or
//! adjacent levels are joined when the associated balls meet.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::space::PointCloud;

/// Whether balls in the edge rule are open (`d < r1 + r2`) or closed (`d <= r1 + r2`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallKind {
    #[default]
    Open,
    Closed,
}

impl BallKind {
    #[inline]
    fn meets(self, d: f64, reach: f64) -> bool {
        match self {
            BallKind::Open => d < reach,
            BallKind::Closed => d <= reach,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FillingConfig {
    pub alpha: f64,
    pub tau: f64,
    /// Deepest level; `None` picks the smallest depth that resolves the sample.
    pub depth: Option<usize>,
    pub balls: BallKind,
}

impl Default for FillingConfig {
    fn default() -> Self {
        FillingConfig { alpha: 2.0, tau: 1.5, depth: None, balls: BallKind::Open }
    }
}

/// Smallest `N` with `alpha^-N <= min_gap`, so the deepest net holds every point.
pub fn default_depth(cloud: &PointCloud, alpha: f64) -> usize {
    let gap = cloud.min_gap();
    if gap <= 0.0 {
        return 1;
    }
    ((1.0 / gap).ln() / alpha.ln()).ceil().max(1.0) as usize
}

/// The nets `A_0 ⊂ A_1 ⊂ ... ⊂ A_N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetHierarchy {
    pub alpha: f64,
    /// `levels[n]` lists the members of `A_n` in insertion order.
    pub levels: Vec<Vec<usize>>,
    /// First level whose separation is below half the smallest sample gap.
    /// Nets from there on are copies of the whole sample.
    pub oversampled_from: Option<usize>,
}

impl NetHierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn separation(&self, n: usize) -> f64 {
        self.alpha.powi(-(n as i32))
    }
}

/// Greedy nested maximal separated sets.
///
/// Each level starts from the previous level's members and then scans the
/// remaining points in ascending index order, keeping every point at
/// distance `>= alpha^-n` from all current members.
pub fn build_nets(cloud: &PointCloud, alpha: f64, depth: usize) -> Result<NetHierarchy> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return invalid(format!("alpha = {alpha} must exceed 1"));
    }
    if depth < 1 {
        return invalid("net depth must be >= 1");
    }
    if cloud.diam() >= 1.0 {
        return invalid("cloud diameter must be < 1");
    }
    let n = cloud.len();
    let mut in_net = vec![false; n];
    let mut members: Vec<usize> = vec![0];
    in_net[0] = true;
    let mut levels = vec![members.clone()];
    let mut oversampled_from = None;
    let half_gap = 0.5 * cloud.min_gap();
    for level in 1..=depth {
        let sep = alpha.powi(-(level as i32));
        if oversampled_from.is_none() && n > 1 && sep < half_gap {
            oversampled_from = Some(level);
        }
        for i in 0..n {
            if in_net[i] {
                continue;
            }
            if members.iter().all(|&m| cloud.dist(i, m) >= sep) {
                in_net[i] = true;
                members.push(i);
            }
        }
        levels.push(members.clone());
    }
    Ok(NetHierarchy { alpha, levels, oversampled_from })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub level: usize,
    /// Index of the net point in the cloud.
    pub point: usize,
}

/// The hyperbolic filling graph. Vertex `0` is the root `p0`; vertices are
/// stored level by level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FillingGraph {
    pub alpha: f64,
    pub tau: f64,
    pub balls: BallKind,
    vertices: Vec<Vertex>,
    level_offsets: Vec<usize>,
    /// Unordered edges `(v, w)` with `v < w`, sorted.
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
    #[serde(skip)]
    root_distance: Vec<usize>,
}

/// Builds the filling graph over `nets` with the two edge rules: same-level
/// vertices need `B(x, alpha^-n)` and `B(y, alpha^-n)` to meet; vertices on
/// levels `n` and `n + 1` need `B(x, tau alpha^-n)` and `B(y, tau alpha^-(n+1))` to meet.
pub fn build_graph(cloud: &PointCloud, nets: &NetHierarchy, tau: f64, balls: BallKind) -> Result<FillingGraph> {
    if !(tau > 1.0 && tau.is_finite()) {
        return invalid(format!("tau = {tau} must exceed 1"));
    }
    if nets.levels.first().map(Vec::len) != Some(1) {
        return Err(Error::Invariant("A_0 must be a single point".into()));
    }
    let alpha = nets.alpha;
    let mut vertices = Vec::new();
    let mut level_offsets = Vec::with_capacity(nets.levels.len() + 1);
    for (level, members) in nets.levels.iter().enumerate() {
        level_offsets.push(vertices.len());
        vertices.extend(members.iter().map(|&point| Vertex { level, point }));
    }
    level_offsets.push(vertices.len());

    let depth = nets.depth();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for level in 0..=depth {
        let (lo, hi) = (level_offsets[level], level_offsets[level + 1]);
        let r = alpha.powi(-(level as i32));
        let next = (level < depth).then(|| (level_offsets[level + 1], level_offsets[level + 2]));
        let vr = tau * (r + r / alpha);
        let chunk: Vec<Vec<(usize, usize)>> = (lo..hi)
            .into_par_iter()
            .map(|v| {
                let x = vertices[v].point;
                let mut out = Vec::new();
                for w in (v + 1)..hi {
                    if balls.meets(cloud.dist(x, vertices[w].point), 2.0 * r) {
                        out.push((v, w));
                    }
                }
                if let Some((nlo, nhi)) = next {
                    for w in nlo..nhi {
                        if balls.meets(cloud.dist(x, vertices[w].point), vr) {
                            out.push((v, w));
                        }
                    }
                }
                out
            })
            .collect();
        edges.extend(chunk.into_iter().flatten());
    }
    edges.sort_unstable();

    let mut graph = FillingGraph {
        alpha,
        tau,
        balls,
        vertices,
        level_offsets,
        edges,
        adjacency: Vec::new(),
        root_distance: Vec::new(),
    };
    graph.index()?;
    Ok(graph)
}

impl FillingGraph {
    /// Nets plus graph in one call, using the configured or default depth.
    pub fn from_cloud(cloud: &PointCloud, cfg: &FillingConfig) -> Result<(NetHierarchy, FillingGraph)> {
        let depth = cfg.depth.unwrap_or_else(|| default_depth(cloud, cfg.alpha));
        let nets = build_nets(cloud, cfg.alpha, depth)?;
        let graph = build_graph(cloud, &nets, cfg.tau, cfg.balls)?;
        Ok((nets, graph))
    }

    fn index(&mut self) -> Result<()> {
        let mut adjacency = vec![Vec::new(); self.vertices.len()];
        for &(v, w) in &self.edges {
            adjacency[v].push(w);
            adjacency[w].push(v);
        }
        self.adjacency = adjacency;
        let dist = self.bfs(0);
        if let Some(v) = dist.iter().position(|&d| d == usize::MAX) {
            return Err(Error::Invariant(format!("filling graph is disconnected at vertex {v}")));
        }
        if let Some(v) = (0..self.vertices.len()).find(|&v| dist[v] != self.vertices[v].level) {
            return Err(Error::Invariant(format!(
                "vertex {v} at level {} has root distance {}",
                self.vertices[v].level, dist[v]
            )));
        }
        self.root_distance = dist;
        Ok(())
    }

    fn bfs(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertices.len()];
        let mut queue = VecDeque::from([from]);
        dist[from] = 0;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vertex {
        self.vertices[v]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn depth(&self) -> usize {
        self.level_offsets.len() - 2
    }

    /// Vertex ids on level `n`.
    pub fn level_range(&self, n: usize) -> std::ops::Range<usize> {
        self.level_offsets[n]..self.level_offsets[n + 1]
    }

    pub fn vertex_level(&self, v: usize) -> usize {
        self.vertices[v].level
    }

    /// Unit-edge graph distance from `v` to the root.
    pub fn graph_distance_to_root(&self, v: usize) -> usize {
        self.root_distance[v]
    }

    /// Edge-list CSV `v_id, w_id`.
    pub fn write_edges_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["v_id", "w_id"])?;
        for &(v, u) in &self.edges {
            out.write_record([v.to_string(), u.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Vertex table CSV `v_id, level, point_index`.
    pub fn write_vertices_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["v_id", "level", "point_index"])?;
        for (i, v) in self.vertices.iter().enumerate() {
            out.write_record([i.to_string(), v.level.to_string(), v.point.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// JSON bundle with both tables.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut g: FillingGraph = serde_json::from_str(s)?;
        g.index()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_cantor, gen_interval, gen_sierpinski_carpet};

    fn three_points() -> PointCloud {
        PointCloud::from_coords(1, vec![0.0, 0.4, 0.8], 1.0, vec![1.0; 3]).unwrap()
    }

    #[test]
    fn hand_run_greedy_nets() {
        let nets = build_nets(&three_points(), 2.0, 2).unwrap();
        assert_eq!(nets.levels[0], vec![0]);
        assert_eq!(nets.levels[1], vec![0, 2]);
        assert_eq!(nets.levels[2], vec![0, 2, 1]);
        assert!(nets.oversampled_from.is_none());
    }

    #[test]
    fn deep_nets_warn() {
        let nets = build_nets(&three_points(), 2.0, 5).unwrap();
        // 2^-4 = 0.0625 < 0.2 = half the smallest gap
        assert_eq!(nets.oversampled_from, Some(3));
        assert_eq!(nets.levels[5], vec![0, 2, 1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_nets(&three_points(), 1.0, 2).is_err());
        let nets = build_nets(&three_points(), 2.0, 2).unwrap();
        assert!(build_graph(&three_points(), &nets, 1.0, BallKind::Open).is_err());
    }

    #[test]
    fn vertical_rule_hand_check() {
        // (1, x) and (2, y) with d = 0.4: 0.4 < 1.5 * (0.5 + 0.25)
        let c = PointCloud::from_coords(1, vec![0.0, 0.4], 1.0, vec![1.0; 2]).unwrap();
        let nets = NetHierarchy {
            alpha: 2.0,
            levels: vec![vec![0], vec![0], vec![0, 1]],
            oversampled_from: None,
        };
        let g = build_graph(&c, &nets, 1.5, BallKind::Open).unwrap();
        // vertices: 0 = (0,0), 1 = (1,0), 2 = (2,0), 3 = (2,1)
        assert!(g.edges().contains(&(1, 3)));
    }

    #[test]
    fn root_links_every_level_one_vertex() {
        let c = gen_interval(4).unwrap();
        let (nets, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        let level1 = g.level_range(1);
        let root_vertical = g.neighbors(0).iter().filter(|w| level1.contains(w)).count();
        assert_eq!(root_vertical, nets.levels[1].len());
        assert_eq!(g.degree(0), nets.levels[1].len());
    }

    #[test]
    fn levels_equal_root_distance() {
        let c = gen_interval(4).unwrap();
        let (_, g) = FillingGraph::from_cloud(&c, &FillingConfig { depth: Some(4), ..Default::default() }).unwrap();
        assert_eq!((g.vertex_level(0), g.graph_distance_to_root(0)), (0, 0));
        for v in g.level_range(1) {
            assert_eq!((g.vertex_level(v), g.graph_distance_to_root(v)), (1, 1));
        }
        let deepest = g.num_vertices() - 1;
        assert_eq!((g.vertex_level(deepest), g.graph_distance_to_root(deepest)), (4, 4));
    }

    fn check_net_invariants(c: &PointCloud, nets: &NetHierarchy) {
        for (n, members) in nets.levels.iter().enumerate() {
            let sep = nets.separation(n);
            for (a, &x) in members.iter().enumerate() {
                for &y in &members[a + 1..] {
                    assert!(c.dist(x, y) >= sep, "separation fails on level {n}");
                }
            }
            for i in 0..c.len() {
                assert!(members.iter().any(|&m| c.dist(i, m) < sep || m == i), "covering fails on level {n}");
            }
            if n > 0 {
                assert!(nets.levels[n - 1].iter().all(|x| members.contains(x)));
            }
        }
        assert_eq!(nets.levels[0].len(), 1);
    }

    #[test]
    fn horizontal_edges_are_short() {
        let c = gen_sierpinski_carpet(2).unwrap();
        let (_, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        for &(v, w) in g.edges() {
            let (a, b) = (g.vertex(v), g.vertex(w));
            assert!(a.level.abs_diff(b.level) <= 1);
            if a.level == b.level {
                assert!(c.dist(a.point, b.point) < 2.0 * 2f64.powi(-(a.level as i32)));
            }
        }
    }

    #[test]
    fn invariants_on_bundled_spaces() {
        for c in [gen_interval(5).unwrap(), gen_cantor(5).unwrap(), gen_sierpinski_carpet(2).unwrap()] {
            let (nets, g) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
            check_net_invariants(&c, &nets);
            assert_eq!(nets.levels.last().unwrap().len(), c.len());
            for v in 1..g.num_vertices() {
                let lv = g.vertex_level(v);
                assert!(g.neighbors(v).iter().any(|&w| g.vertex_level(w) + 1 == lv));
            }
        }
    }

    #[test]
    fn rebuild_is_identical_and_json_round_trips() {
        let c = gen_cantor(5).unwrap();
        let (_, a) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        let (_, b) = FillingGraph::from_cloud(&c, &FillingConfig::default()).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.vertices(), b.vertices());
        let back = FillingGraph::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back.edges(), a.edges());
        assert_eq!(back.graph_distance_to_root(back.num_vertices() - 1), back.depth());
    }

    #[test]
    fn closed_balls_add_tangent_edges() {
        // same-level pair at exactly 2 alpha^-n
        let c = PointCloud::from_coords(1, vec![0.0, 0.5], 1.0, vec![1.0; 2]).unwrap();
        let nets = NetHierarchy { alpha: 2.0, levels: vec![vec![0], vec![0, 1], vec![0, 1]], oversampled_from: None };
        let open = build_graph(&c, &nets, 1.5, BallKind::Open).unwrap();
        let closed = build_graph(&c, &nets, 1.5, BallKind::Closed).unwrap();
        // vertices 3 = (2, 0) and 4 = (2, 1) sit at distance 0.5 = 2 * 2^-2
        assert!(!open.edges().contains(&(3, 4)));
        assert!(closed.edges().contains(&(3, 4)));
    }
}
