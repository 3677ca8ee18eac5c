use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The geometry shipped with the crate.
pub const DEFAULT_GEOMETRY: &str = include_str!("../../geometry/default.toml");

/// Config format version understood by this build.
pub const GEOMETRY_VERSION: u32 = 1;

/// Smallest allowed lattice distance between the two sub-regions.
pub const MIN_SEPARATION: u32 = 2;

pub type Vertex = (i32, i32);

/// An edge of the square lattice: `H(x, y)` joins `(x, y)–(x+1, y)` and
/// `V(x, y)` joins `(x, y)–(x, y+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Edge {
    H(i32, i32),
    V(i32, i32),
}

impl Edge {
    pub fn endpoints(self) -> [Vertex; 2] {
        match self {
            Edge::H(x, y) => [(x, y), (x + 1, y)],
            Edge::V(x, y) => [(x, y), (x, y + 1)],
        }
    }

    /// Edge from `v` one step in `dir`.
    pub fn step(v: Vertex, dir: Direction) -> Edge {
        let (x, y) = v;
        match dir {
            Direction::Left => Edge::H(x - 1, y),
            Direction::Right => Edge::H(x, y),
            Direction::Up => Edge::V(x, y),
            Direction::Down => Edge::V(x, y - 1),
        }
    }

    /// Edge crossed when moving from plaquette `p` one step in `dir`.
    /// Plaquette `(x, y)` has lower-left corner `(x, y)`.
    pub fn dual_step(p: Vertex, dir: Direction) -> Edge {
        let (x, y) = p;
        match dir {
            Direction::Left => Edge::V(x, y),
            Direction::Right => Edge::V(x + 1, y),
            Direction::Up => Edge::H(x, y + 1),
            Direction::Down => Edge::H(x, y),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edge::H(x, y) => write!(f, "H({x},{y})"),
            Edge::V(x, y) => write!(f, "V({x},{y})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
    Up,
    Down,
}

impl Direction {
    pub fn delta(self) -> Vertex {
        match self {
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
            Direction::Up => (0, 1),
            Direction::Down => (0, -1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Opening {
    UpLeft,
    UpRight,
    DownLeft,
    DownRight,
}

impl Opening {
    fn signs(self) -> (i32, i32) {
        match self {
            Opening::UpLeft => (-1, 1),
            Opening::UpRight => (1, 1),
            Opening::DownLeft => (-1, -1),
            Opening::DownRight => (1, -1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Quarter plane around the tip, cut to an L1 ball of radius `n`.
    Wedge,
    /// Rectangle of plaquettes at the tip, growing linearly in `n`.
    Rectangle,
}

/// A path on the lattice (vertices) or on the dual lattice (plaquettes):
/// from `start` through each waypoint, moving horizontally first, then on in
/// `direction` for as long as the path stays inside its sub-region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub start: [i32; 2],
    #[serde(default)]
    pub waypoints: Vec<[i32; 2]>,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    pub tip: [i32; 2],
    pub opening: Opening,
    pub primal: PathConfig,
    pub dual: PathConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub version: u32,
    pub shape: Shape,
    /// Extra rows of vertices around the bounding box of the region.
    #[serde(default)]
    pub margin: u32,
    /// Rectangle size in plaquettes at `n = 1`, `[width, height]`.
    #[serde(default)]
    pub rect_base: [u32; 2],
    /// Rectangle growth per unit of `n`.
    #[serde(default)]
    pub rect_growth: [u32; 2],
    pub cones: Vec<ConeConfig>,
}

impl GeometryConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(format!("geometry config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_geometry() -> Self {
        Self::parse(DEFAULT_GEOMETRY).expect("shipped geometry parses")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("geometry serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.version != GEOMETRY_VERSION {
            return Err(Error::Geometry(format!(
                "config version {} is not supported (expected {GEOMETRY_VERSION})",
                self.version
            )));
        }
        if self.cones.len() != 2 {
            return Err(Error::Geometry(format!("expected two cones, found {}", self.cones.len())));
        }
        if self.shape == Shape::Rectangle && self.rect_base.iter().all(|&s| s == 0) {
            return Err(Error::Geometry("rectangle shape needs a non-empty rect_base".into()));
        }
        Ok(())
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self::default_geometry()
    }
}

/// A box of lattice vertices `[x0, x1] × [y0, y1]` with every edge between
/// them. Edges are numbered horizontal first (row by row), then vertical.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Patch {
    pub x0: i32,
    pub x1: i32,
    pub y0: i32,
    pub y1: i32,
    #[serde(skip)]
    edges: Vec<Edge>,
    #[serde(skip)]
    index: HashMap<Edge, usize>,
}

impl Patch {
    pub fn new(x0: i32, x1: i32, y0: i32, y1: i32) -> Result<Self> {
        if x1 < x0 || y1 < y0 {
            return Err(Error::Geometry(format!("empty patch [{x0},{x1}]×[{y0},{y1}]")));
        }
        let mut edges = Vec::new();
        for y in y0..=y1 {
            for x in x0..x1 {
                edges.push(Edge::H(x, y));
            }
        }
        for x in x0..=x1 {
            for y in y0..y1 {
                edges.push(Edge::V(x, y));
            }
        }
        let index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Ok(Self {
            x0,
            x1,
            y0,
            y1,
            edges,
            index,
        })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, e: Edge) -> Option<usize> {
        self.index.get(&e).copied()
    }

    pub fn contains_vertex(&self, (x, y): Vertex) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| (x, y)))
    }

    /// Patch edges at `v`: a full star inside, truncated on the boundary.
    pub fn star(&self, v: Vertex) -> Vec<usize> {
        [Direction::Left, Direction::Right, Direction::Up, Direction::Down]
            .into_iter()
            .filter_map(|d| self.index_of(Edge::step(v, d)))
            .collect()
    }

    /// Every plaquette with all four edges in the patch, by lower-left corner.
    pub fn plaquettes(&self) -> impl Iterator<Item = Vertex> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }

    pub fn plaquette(&self, (x, y): Vertex) -> Vec<usize> {
        [Edge::H(x, y), Edge::H(x, y + 1), Edge::V(x, y), Edge::V(x + 1, y)]
            .into_iter()
            .filter_map(|e| self.index_of(e))
            .collect()
    }
}

/// The union `Λ` of two disjoint sub-regions inside an ambient patch.
/// Qubit `k` of the region is the `k`-th region edge in patch order.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeRegion {
    pub n: usize,
    pub patch: Patch,
    pub subregions: [Vec<Edge>; 2],
    pub separation: u32,
    #[serde(skip)]
    qubits: Vec<usize>,
}

fn vertex_set(tip: Vertex, opening: Opening, shape: Shape, n: usize, cfg: &GeometryConfig) -> Vec<Vertex> {
    let (sx, sy) = opening.signs();
    let (w, h) = match shape {
        Shape::Wedge => (n as i32, n as i32),
        Shape::Rectangle => (
            (cfg.rect_base[0] + cfg.rect_growth[0] * (n as u32 - 1)) as i32,
            (cfg.rect_base[1] + cfg.rect_growth[1] * (n as u32 - 1)) as i32,
        ),
    };
    let mut out = Vec::new();
    for dy in 0..=h {
        for dx in 0..=w {
            if shape == Shape::Wedge && dx + dy > n as i32 {
                continue;
            }
            out.push((tip.0 + sx * dx, tip.1 + sy * dy));
        }
    }
    out
}

fn edges_within(vertices: &[Vertex]) -> Vec<Edge> {
    let set: BTreeSet<Vertex> = vertices.iter().copied().collect();
    let mut edges = Vec::new();
    for &(x, y) in &set {
        if set.contains(&(x + 1, y)) {
            edges.push(Edge::H(x, y));
        }
        if set.contains(&(x, y + 1)) {
            edges.push(Edge::V(x, y));
        }
    }
    edges
}

fn vertices_of(edges: &[Edge]) -> BTreeSet<Vertex> {
    edges.iter().flat_map(|e| e.endpoints()).collect()
}

impl LatticeRegion {
    /// Region from explicit edge sets, checked for disjointness and
    /// separation. The patch is their bounding box grown by `margin`.
    pub fn from_edges(n: usize, subregions: [Vec<Edge>; 2], margin: u32) -> Result<Self> {
        if subregions.iter().any(|r| r.is_empty()) {
            return Err(Error::Geometry("a sub-region has no edges".into()));
        }
        let va = vertices_of(&subregions[0]);
        let vb = vertices_of(&subregions[1]);
        let all: Vec<Vertex> = va.iter().chain(&vb).copied().collect();
        let m = margin as i32;
        let patch = Patch::new(
            all.iter().map(|v| v.0).min().unwrap() - m,
            all.iter().map(|v| v.0).max().unwrap() + m,
            all.iter().map(|v| v.1).min().unwrap() - m,
            all.iter().map(|v| v.1).max().unwrap() + m,
        )?;
        Self::in_patch(n, patch, subregions)
    }

    /// Region inside a given patch.
    pub fn in_patch(n: usize, patch: Patch, mut subregions: [Vec<Edge>; 2]) -> Result<Self> {
        for r in subregions.iter_mut() {
            for e in r.iter() {
                if patch.index_of(*e).is_none() {
                    return Err(Error::Geometry(format!("edge {e} lies outside the patch")));
                }
            }
            r.sort_by_key(|e| patch.index_of(*e));
            r.dedup();
        }
        if let Some(e) = subregions[0].iter().find(|e| subregions[1].contains(e)) {
            return Err(Error::Geometry(format!("sub-regions share edge {e}")));
        }
        let va = vertices_of(&subregions[0]);
        let vb = vertices_of(&subregions[1]);
        let separation = va
            .iter()
            .flat_map(|a| vb.iter().map(move |b| (a.0 - b.0).unsigned_abs() + (a.1 - b.1).unsigned_abs()))
            .min()
            .unwrap_or(u32::MAX);
        if separation < MIN_SEPARATION {
            return Err(Error::Geometry(format!(
                "sub-regions are at distance {separation}, need at least {MIN_SEPARATION}"
            )));
        }
        let mut qubits: Vec<usize> = subregions
            .iter()
            .flatten()
            .map(|e| patch.index_of(*e).unwrap())
            .collect();
        qubits.sort_unstable();
        Ok(Self {
            n,
            patch,
            subregions,
            separation,
            qubits,
        })
    }

    /// Number of region edges `|Λ|`.
    pub fn num_edges(&self) -> usize {
        self.qubits.len()
    }

    /// Patch indices of the region edges, increasing.
    pub fn patch_qubits(&self) -> &[usize] {
        &self.qubits
    }

    /// Region edges in qubit order.
    pub fn edges(&self) -> Vec<Edge> {
        self.qubits.iter().map(|&q| self.patch.edges()[q]).collect()
    }

    /// Region qubit of an edge, if the edge is in the region.
    pub fn qubit_of(&self, e: Edge) -> Option<usize> {
        let q = self.patch.index_of(e)?;
        self.qubits.binary_search(&q).ok()
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.qubit_of(e).is_some()
    }
}

/// `Λ_n` for the given geometry.
pub fn build_region(n: usize, geometry: &GeometryConfig) -> Result<LatticeRegion> {
    if n == 0 {
        return Err(Error::InvalidInput("region size n must be at least 1".into()));
    }
    geometry.validate()?;
    let subregions: Vec<Vec<Edge>> = geometry
        .cones
        .iter()
        .map(|c| {
            let verts = vertex_set((c.tip[0], c.tip[1]), c.opening, geometry.shape, n, geometry);
            edges_within(&verts)
        })
        .collect();
    let [a, b]: [Vec<Edge>; 2] = subregions.try_into().expect("two cones");
    LatticeRegion::from_edges(n, [a, b], geometry.margin)
}
