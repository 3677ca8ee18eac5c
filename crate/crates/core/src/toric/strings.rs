use serde::Serialize;

use super::geometry::{Direction, Edge, GeometryConfig, LatticeRegion, PathConfig, Vertex};
use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Block signs of the transporter images, block `b = 0..4`.
pub const SIGN_X: [i8; 4] = [1, -1, 1, -1];
pub const SIGN_Z: [i8; 4] = [1, 1, -1, -1];

/// The string operators of both sub-regions, on the region qubits.
#[derive(Clone, Debug, Serialize)]
pub struct TransporterData {
    /// `σ_z` on every primal-path edge.
    pub f_x: PauliString,
    /// `σ_x` on every edge crossed by a dual path.
    pub f_z: PauliString,
    pub primal_paths: [Vec<Edge>; 2],
    pub dual_paths: [Vec<Edge>; 2],
}

impl TransporterData {
    /// One of the strings is the identity.
    pub fn is_degenerate(&self) -> bool {
        self.f_x.is_identity_up_to_phase() || self.f_z.is_identity_up_to_phase()
    }

    /// `F_Y = F_X F_Z`.
    pub fn f_y(&self) -> PauliString {
        self.f_x.multiply(&self.f_z).expect("same register")
    }

    pub fn num_qubits(&self) -> usize {
        self.f_x.num_qubits()
    }
}

/// Unit steps from `from` to `to`, horizontal moves first.
fn manhattan(from: Vertex, to: Vertex) -> Vec<Direction> {
    let mut out = Vec::new();
    let dx = to.0 - from.0;
    let dy = to.1 - from.1;
    let h = if dx < 0 { Direction::Left } else { Direction::Right };
    let v = if dy < 0 { Direction::Down } else { Direction::Up };
    out.extend(std::iter::repeat_n(h, dx.unsigned_abs() as usize));
    out.extend(std::iter::repeat_n(v, dy.unsigned_abs() as usize));
    out
}

/// Edges of a path, truncated at the first edge outside `allowed`. `step`
/// maps a position and a direction to the edge used.
fn trace_path(cfg: &PathConfig, allowed: &[Edge], step: fn(Vertex, Direction) -> Edge) -> Vec<Edge> {
    let mut pos = (cfg.start[0], cfg.start[1]);
    let mut moves = Vec::new();
    let mut cursor = pos;
    for w in &cfg.waypoints {
        let w = (w[0], w[1]);
        moves.extend(manhattan(cursor, w));
        cursor = w;
    }
    let mut edges = Vec::new();
    let mut take = |pos: &mut Vertex, d: Direction| -> bool {
        let e = step(*pos, d);
        if !allowed.contains(&e) || edges.contains(&e) {
            return false;
        }
        edges.push(e);
        let (dx, dy) = d.delta();
        *pos = (pos.0 + dx, pos.1 + dy);
        true
    };
    for d in moves {
        if !take(&mut pos, d) {
            return edges;
        }
    }
    while take(&mut pos, cfg.direction) {}
    edges
}

fn string_on(region: &LatticeRegion, edges: &[Edge], x: bool) -> PauliString {
    let sites: Vec<usize> = edges.iter().map(|&e| region.qubit_of(e).expect("path inside region")).collect();
    if x {
        PauliString::x_on(region.num_edges(), &sites)
    } else {
        PauliString::z_on(region.num_edges(), &sites)
    }
}

/// Builds `F_X` and `F_Z` from the paths in the geometry config. Each path is
/// kept inside its own sub-region. Rejects routings whose strings
/// anticommute.
pub fn build_strings(region: &LatticeRegion, geometry: &GeometryConfig) -> Result<TransporterData> {
    if geometry.cones.len() != 2 {
        return Err(Error::Geometry("expected two cones".into()));
    }
    let mut primal: [Vec<Edge>; 2] = Default::default();
    let mut dual: [Vec<Edge>; 2] = Default::default();
    for (k, cone) in geometry.cones.iter().enumerate() {
        primal[k] = trace_path(&cone.primal, &region.subregions[k], Edge::step);
        dual[k] = trace_path(&cone.dual, &region.subregions[k], Edge::dual_step);
    }
    let all_primal: Vec<Edge> = primal.iter().flatten().copied().collect();
    let all_dual: Vec<Edge> = dual.iter().flatten().copied().collect();
    let f_x = string_on(region, &all_primal, false);
    let f_z = string_on(region, &all_dual, true);
    if !f_x.commutes_unchecked(&f_z) {
        let shared: Vec<String> = all_primal
            .iter()
            .filter(|e| all_dual.contains(e))
            .map(|e| e.to_string())
            .collect();
        return Err(Error::CrossingParity(format!(
            "dual paths cross the primal paths an odd number of times, at {}",
            shared.join(", ")
        )));
    }
    Ok(TransporterData {
        f_x,
        f_z,
        primal_paths: primal,
        dual_paths: dual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::geometry::build_region;

    #[test]
    fn default_strings_at_n1() {
        let g = GeometryConfig::default_geometry();
        let r = build_region(1, &g).unwrap();
        let t = build_strings(&r, &g).unwrap();
        assert_eq!(t.primal_paths, [vec![Edge::H(-1, 0)], vec![Edge::H(2, 0)]]);
        assert_eq!(t.dual_paths, [vec![Edge::V(0, 0)], vec![Edge::V(2, 0)]]);
        assert!(t.f_x.multiply(&t.f_x).unwrap().is_identity_up_to_phase());
        assert_eq!(t.f_x.multiply(&t.f_x).unwrap().phase(), 0);
        assert!(t.f_x.commutes(&t.f_z).unwrap());
        assert!(!t.is_degenerate());
    }

    #[test]
    fn paths_lengthen_with_n() {
        let g = GeometryConfig::default_geometry();
        for n in 1..=3 {
            let r = build_region(n, &g).unwrap();
            let t = build_strings(&r, &g).unwrap();
            assert_eq!(t.primal_paths[0].len(), n);
            assert_eq!(t.dual_paths[0].len(), n);
        }
    }

    #[test]
    fn odd_crossing_is_rejected() {
        let mut g = GeometryConfig::default_geometry();
        g.cones[0].dual = PathConfig {
            start: [-1, -1],
            waypoints: vec![],
            direction: Direction::Up,
        };
        let r = build_region(1, &g).unwrap();
        assert!(matches!(build_strings(&r, &g), Err(Error::CrossingParity(_))));
    }

    #[test]
    fn paths_outside_the_region_are_empty() {
        let mut g = GeometryConfig::default_geometry();
        g.cones[0].primal.start = [10, 10];
        g.cones[1].primal.start = [10, 10];
        let r = build_region(1, &g).unwrap();
        let t = build_strings(&r, &g).unwrap();
        assert!(t.is_degenerate());
    }
}
