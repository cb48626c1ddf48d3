//! Ising models: symmetric ferromagnetic couplings on an arbitrary graph
//! plus per-site fields,
//!
//! `H = −Σ_i h_i s_i − Σ_{edges} J_ij s_i s_j`.
//!
//! Edges are stored once with `i < j`; the double sum over ordered pairs
//! counts each of them twice.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    sites: usize,
    edges: Vec<Edge>,
    fields: Vec<f64>,
    incident: Vec<Vec<usize>>,
}

impl CouplingGraph {
    /// Builds a graph from undirected couplings. Pairs may be given in
    /// either order; zero couplings are dropped, negative ones and
    /// self-couplings rejected, and a repeated pair is an error.
    pub fn new(sites: usize, couplings: &[(usize, usize, f64)], fields: Vec<f64>) -> Result<Self, ModelError> {
        if sites == 0 {
            return Err(invalid("a model needs at least one site"));
        }
        if fields.len() != sites {
            return Err(invalid(format!("{} fields given for {} sites", fields.len(), sites)));
        }
        if let Some(h) = fields.iter().find(|h| !h.is_finite()) {
            return Err(invalid(format!("non-finite field {h}")));
        }
        let mut seen = BTreeMap::new();
        for &(a, b, coupling) in couplings {
            let (i, j) = (a.min(b), a.max(b));
            if j >= sites {
                return Err(invalid(format!("edge ({a}, {b}) out of range for {sites} sites")));
            }
            if i == j {
                return Err(invalid(format!("self-coupling on site {i}")));
            }
            if !coupling.is_finite() || coupling < 0.0 {
                return Err(invalid(format!("coupling {coupling} on ({a}, {b}) must be finite and non-negative")));
            }
            if seen.insert((i, j), coupling).is_some() {
                return Err(invalid(format!("duplicate edge ({i}, {j})")));
            }
        }
        let edges: Vec<Edge> = seen
            .into_iter()
            .filter(|&(_, c)| c > 0.0)
            .map(|((i, j), coupling)| Edge { i, j, coupling })
            .collect();
        let mut incident = vec![Vec::new(); sites];
        for (e, edge) in edges.iter().enumerate() {
            incident[edge.i].push(e);
            incident[edge.j].push(e);
        }
        Ok(Self { sites, edges, fields, incident })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Indices into [`CouplingGraph::edges`] of the edges touching `site`.
    pub fn incident_edges(&self, site: usize) -> &[usize] {
        &self.incident[site]
    }

    pub fn degree(&self, site: usize) -> usize {
        self.incident[site].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_index(a, b).is_some()
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (i, j) = (a.min(b), a.max(b));
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&(i, j))).ok()
    }

    /// `J̄ = (1/2M) Σ_{i≠j} J_ij = (1/M) Σ_edges J`.
    pub fn mean_coupling(&self) -> f64 {
        self.total_coupling() / self.sites as f64
    }

    /// `Σ_edges J = M·J̄`, the constant shift between `H` and the
    /// positive-diffusion form used by the samplers.
    pub fn total_coupling(&self) -> f64 {
        self.edges.iter().map(|e| e.coupling).sum()
    }

    /// Energy of a ±1 spin configuration.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        assert_eq!(spins.len(), self.sites, "configuration length");
        let field: f64 = self.fields.iter().zip(spins).map(|(h, &s)| h * s as f64).sum();
        let bonds: f64 = self
            .edges
            .iter()
            .map(|e| e.coupling * (spins[e.i] * spins[e.j]) as f64)
            .sum();
        -field - bonds
    }

    /// Copy with every coupling and field multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> CouplingGraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.coupling *= factor;
        }
        for h in &mut g.fields {
            *h *= factor;
        }
        g
    }

    pub fn constants(&self, beta: f64) -> ModelConstants {
        let mut gains = vec![0.0; self.sites];
        for e in &self.edges {
            gains[e.i] += beta * e.coupling;
            gains[e.j] += beta * e.coupling;
        }
        ModelConstants {
            beta,
            j_bar: self.mean_coupling(),
            gains,
        }
    }
}

/// Quantities derived from a model at a given inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstants {
    pub beta: f64,
    /// Mean interaction per spin.
    pub j_bar: f64,
    /// `g_i = β Σ_j J_ij`.
    pub gains: Vec<f64>,
}

/// A `width × height` nearest-neighbour lattice with uniform coupling and
/// field. Site `(x, y)` has index `y·width + x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub width: usize,
    pub height: usize,
    pub coupling: f64,
    pub field: f64,
    pub periodic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondClass {
    Horizontal,
    Vertical,
}

impl Lattice {
    pub fn new(width: usize, height: usize, coupling: f64, field: f64, periodic: bool) -> Self {
        Self { width, height, coupling, field, periodic }
    }

    pub fn sites(&self) -> usize {
        self.width * self.height
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Bonds along one row (or column) of length `n`, as `(a, b)` offsets,
    /// before duplicate collapse. A length-2 periodic ring yields the same
    /// pair twice.
    fn ring_bonds(n: usize, periodic: bool) -> Vec<(usize, usize)> {
        let mut bonds: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|x| (x, x + 1)).collect();
        if periodic && n >= 2 {
            bonds.push((n - 1, 0));
        }
        bonds
    }

    /// Bond terms per row of the Hamiltonian, counting collapsed duplicates.
    pub(crate) fn row_bond_terms(&self) -> usize {
        Self::ring_bonds(self.width, self.periodic).len()
    }

    pub(crate) fn column_bond_terms(&self) -> usize {
        Self::ring_bonds(self.height, self.periodic).len()
    }

    /// Couplings keyed by `(i, j)` with `i < j`, wrap duplicates summed.
    fn coupling_map(&self) -> BTreeMap<(usize, usize), (f64, BondClass)> {
        let mut map: BTreeMap<(usize, usize), (f64, BondClass)> = BTreeMap::new();
        let mut add = |a: usize, b: usize, class| {
            let key = (a.min(b), a.max(b));
            map.entry(key).or_insert((0.0, class)).0 += self.coupling;
        };
        for y in 0..self.height {
            for (a, b) in Self::ring_bonds(self.width, self.periodic) {
                add(self.site(a, y), self.site(b, y), BondClass::Horizontal);
            }
        }
        for x in 0..self.width {
            for (a, b) in Self::ring_bonds(self.height, self.periodic) {
                add(self.site(x, a), self.site(x, b), BondClass::Vertical);
            }
        }
        map
    }

    pub fn graph(&self) -> Result<CouplingGraph, ModelError> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid("lattice dimensions must be at least 1"));
        }
        if self.coupling <= 0.0 || !self.coupling.is_finite() {
            return Err(invalid(format!("lattice coupling {} must be positive", self.coupling)));
        }
        let couplings: Vec<(usize, usize, f64)> =
            self.coupling_map().into_iter().map(|((i, j), (c, _))| (i, j, c)).collect();
        CouplingGraph::new(self.sites(), &couplings, vec![self.field; self.sites()])
    }

    /// Which bond class the stored edge `(a, b)` belongs to, if it is one.
    pub fn bond_class(&self, a: usize, b: usize) -> Option<BondClass> {
        self.coupling_map().get(&(a.min(b), a.max(b))).map(|&(_, class)| class)
    }

    /// Number of stored (collapsed) edges in each class.
    pub fn stored_edges(&self) -> (usize, usize) {
        let map = self.coupling_map();
        let h = map.values().filter(|(_, c)| *c == BondClass::Horizontal).count();
        (h, map.len() - h)
    }
}

/// `width × height` nearest-neighbour lattice; see [`Lattice`].
pub fn build_rectangular_lattice(
    width: usize,
    height: usize,
    coupling: f64,
    field: f64,
    periodic: bool,
) -> Result<CouplingGraph, ModelError> {
    Lattice::new(width, height, coupling, field, periodic).graph()
}

impl fmt::Display for CouplingGraph {
    /// Writes the model in the text format read by [`parse_model`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sites {}", self.sites)?;
        for e in &self.edges {
            writeln!(f, "edge {} {} {:?}", e.i, e.j, e.coupling)?;
        }
        for (i, h) in self.fields.iter().enumerate() {
            if *h != 0.0 {
                writeln!(f, "field {i} {h:?}")?;
            }
        }
        Ok(())
    }
}

/// Parses the line-oriented model format:
///
/// ```text
/// # comment
/// sites 4
/// edge 0 1 1.0
/// field * 0.1     # every site
/// field 2 -0.3
/// ```
///
/// `;` separates statements on one line. `sites` must come first; later
/// `field` statements override earlier ones.
pub fn parse_model(text: &str) -> Result<CouplingGraph, ModelError> {
    let mut sites: Option<usize> = None;
    let mut fields: Vec<f64> = Vec::new();
    let mut couplings: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| ModelError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("");
        for stmt in content.split(';') {
            let tokens: Vec<&str> = stmt.split_whitespace().collect();
            let Some((&keyword, args)) = tokens.split_first() else {
                continue;
            };
            match keyword {
                "sites" => {
                    if sites.is_some() {
                        return Err(err("`sites` given twice".into()));
                    }
                    let [count] = args else {
                        return Err(err("expected `sites <count>`".into()));
                    };
                    let m: usize = count.parse().map_err(|_| err(format!("bad site count `{count}`")))?;
                    if m == 0 {
                        return Err(err("site count must be positive".into()));
                    }
                    sites = Some(m);
                    fields = vec![0.0; m];
                }
                "edge" => {
                    let m = sites.ok_or_else(|| err("`edge` before `sites`".into()))?;
                    let [a, b, c] = args else {
                        return Err(err("expected `edge <i> <j> <J>`".into()));
                    };
                    let i = parse_index(a, m).map_err(&err)?;
                    let j = parse_index(b, m).map_err(&err)?;
                    let coupling: f64 = c.parse().map_err(|_| err(format!("bad coupling `{c}`")))?;
                    if i == j {
                        return Err(err(format!("self-coupling on site {i}")));
                    }
                    if !coupling.is_finite() || coupling < 0.0 {
                        return Err(err(format!("coupling {c} must be finite and non-negative")));
                    }
                    let key = (i.min(j), i.max(j));
                    if let Some(first) = seen.insert(key, line) {
                        return Err(err(format!("duplicate edge ({}, {}), first given on line {first}", key.0, key.1)));
                    }
                    couplings.push((i, j, coupling));
                }
                "field" => {
                    let m = sites.ok_or_else(|| err("`field` before `sites`".into()))?;
                    let [target, value] = args else {
                        return Err(err("expected `field <i|*> <h>`".into()));
                    };
                    let h: f64 = value.parse().map_err(|_| err(format!("bad field `{value}`")))?;
                    if !h.is_finite() {
                        return Err(err(format!("non-finite field `{value}`")));
                    }
                    if *target == "*" {
                        fields.iter_mut().for_each(|f| *f = h);
                    } else {
                        fields[parse_index(target, m).map_err(&err)?] = h;
                    }
                }
                other => return Err(err(format!("unknown statement `{other}`"))),
            }
        }
    }
    let sites = sites.ok_or(ModelError::Parse { line: 0, message: "missing `sites` statement".into() })?;
    CouplingGraph::new(sites, &couplings, fields)
}

fn parse_index(token: &str, sites: usize) -> Result<usize, String> {
    let i: usize = token.parse().map_err(|_| format!("bad site index `{token}`"))?;
    if i >= sites {
        return Err(format!("site index {i} out of range for {sites} sites"));
    }
    Ok(i)
}

pub fn parse_model_file(path: impl AsRef<Path>) -> Result<CouplingGraph, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_site(j: f64, h: f64) -> CouplingGraph {
        CouplingGraph::new(2, &[(0, 1, j)], vec![h, h]).unwrap()
    }

    #[test]
    fn open_two_by_one() {
        let g = build_rectangular_lattice(2, 1, 1.0, 0.0, false).unwrap();
        assert_eq!(g.edges(), &[Edge { i: 0, j: 1, coupling: 1.0 }]);
    }

    #[test]
    fn ten_by_ten_periodic() {
        let g = build_rectangular_lattice(10, 10, 1.0, 0.0, true).unwrap();
        assert_eq!(g.edges().len(), 200);
        assert!((0..100).all(|s| g.degree(s) == 4));
        assert_relative_eq!(g.mean_coupling(), 2.0);
    }

    #[test]
    fn three_by_three_periodic() {
        let g = build_rectangular_lattice(3, 3, 1.0, 0.0, true).unwrap();
        assert_eq!(g.edges().len(), 18);
        assert!((0..9).all(|s| g.degree(s) == 4));
    }

    #[test]
    fn narrow_periodic_lattices_collapse_wraps() {
        let g = build_rectangular_lattice(2, 1, 1.0, 0.0, true).unwrap();
        assert_eq!(g.edges(), &[Edge { i: 0, j: 1, coupling: 2.0 }]);

        let g = build_rectangular_lattice(2, 2, 0.5, 0.0, true).unwrap();
        assert_eq!(g.edges().len(), 4);
        assert!(g.edges().iter().all(|e| e.coupling == 1.0));

        let g = build_rectangular_lattice(4, 1, 1.0, 0.0, true).unwrap();
        assert_eq!(g.edges().len(), 4);
        assert!((0..4).all(|s| g.degree(s) == 2));

        let g = build_rectangular_lattice(1, 1, 1.0, 0.0, true).unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn collapse_preserves_hamiltonian() {
        // Width-2 torus: both wrap terms sit on the same pair.
        let g = build_rectangular_lattice(2, 3, 1.0, 0.0, true).unwrap();
        let lat = Lattice::new(2, 3, 1.0, 0.0, true);
        let spins = [1i8, -1, 1, 1, -1, 1];
        let mut e = 0.0;
        for y in 0..3 {
            for (a, b) in Lattice::ring_bonds(2, true) {
                e -= (spins[lat.site(a, y)] * spins[lat.site(b, y)]) as f64;
            }
        }
        for x in 0..2 {
            for (a, b) in Lattice::ring_bonds(3, true) {
                e -= (spins[lat.site(x, a)] * spins[lat.site(x, b)]) as f64;
            }
        }
        assert_eq!(g.energy(&spins), e);
    }

    #[test]
    fn mean_coupling_examples() {
        assert_eq!(two_site(1.0, 0.0).mean_coupling(), 0.5);
        let empty = CouplingGraph::new(3, &[], vec![0.0; 3]).unwrap();
        assert_eq!(empty.mean_coupling(), 0.0);
    }

    #[test]
    fn energy_examples() {
        let g = two_site(1.0, 0.0);
        assert_eq!(g.energy(&[1, 1]), -1.0);
        assert_eq!(g.energy(&[1, -1]), 1.0);
        let free = CouplingGraph::new(3, &[], vec![0.0; 3]).unwrap();
        assert_eq!(free.energy(&[1, -1, 1]), 0.0);
    }

    #[test]
    fn gains() {
        let g = build_rectangular_lattice(4, 4, 1.5, 0.0, true).unwrap();
        let c = g.constants(0.2);
        assert!(c.gains.iter().all(|&x| (x - 0.2 * 1.5 * 4.0).abs() < 1e-15));
        assert_relative_eq!(c.j_bar, 3.0);
    }

    #[test]
    fn rejects_bad_couplings() {
        assert!(CouplingGraph::new(2, &[(0, 1, -1.0)], vec![0.0; 2]).is_err());
        assert!(CouplingGraph::new(2, &[(0, 0, 1.0)], vec![0.0; 2]).is_err());
        assert!(CouplingGraph::new(2, &[(0, 1, 1.0), (1, 0, 2.0)], vec![0.0; 2]).is_err());
        assert!(CouplingGraph::new(2, &[(0, 2, 1.0)], vec![0.0; 2]).is_err());
        let g = CouplingGraph::new(2, &[(0, 1, 0.0)], vec![0.0; 2]).unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn parses_two_site_model() {
        let g = parse_model("sites 2; edge 0 1 1.0; field * 0.0").unwrap();
        assert_eq!(g, two_site(1.0, 0.0));
    }

    #[test]
    fn parses_ring_with_comments() {
        let text = "# four-site ring\nsites 4\n\nedge 0 1 1\nedge 1 2 1 # trailing\nedge 2 3 1\nedge 3 0 1\nfield * 0.25\nfield 2 -1\n";
        let g = parse_model(text).unwrap();
        assert!((0..4).all(|s| g.degree(s) == 2));
        assert_eq!(g.fields(), &[0.25, 0.25, -1.0, 0.25]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("sites 2\nedge 0 1 1\nedge 1 0 2\n", 3),
            ("sites 2\nedge 0 2 1\n", 2),
            ("sites 3\nfield 0 0\nedge 0 1 -1\n", 3),
            ("sites 2\nedge 0 1\n", 2),
            ("edge 0 1 1\n", 1),
            ("sites 2\nbond 0 1 1\n", 2),
            ("sites x\n", 1),
        ];
        for (text, expected) in cases {
            match parse_model(text) {
                Err(ModelError::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn display_round_trips() {
        let g = CouplingGraph::new(5, &[(0, 1, 0.3), (1, 4, 1.7), (2, 3, 1e-3)], vec![0.0, 0.1, 0.0, -2.5, 0.0]).unwrap();
        assert_eq!(parse_model(&g.to_string()).unwrap(), g);
    }

    proptest! {
        #[test]
        fn flip_symmetry_without_field(spins in prop::collection::vec(prop::bool::ANY, 9)) {
            let g = build_rectangular_lattice(3, 3, 0.7, 0.0, true).unwrap();
            let s: Vec<i8> = spins.iter().map(|&b| if b { 1 } else { -1 }).collect();
            let flipped: Vec<i8> = s.iter().map(|x| -x).collect();
            prop_assert_eq!(g.energy(&s), g.energy(&flipped));
        }

        #[test]
        fn mean_coupling_is_linear(c in 0.01f64..10.0, w in 1usize..6, h in 1usize..6) {
            let base = build_rectangular_lattice(w, h, 1.0, 0.0, true).unwrap();
            let scaled = build_rectangular_lattice(w, h, c, 0.0, true).unwrap();
            prop_assert!((scaled.mean_coupling() - c * base.mean_coupling()).abs() < 1e-12 * (1.0 + c));
        }

        #[test]
        fn periodic_edge_count(w in 3usize..12, h in 3usize..12) {
            let g = build_rectangular_lattice(w, h, 1.0, 0.0, true).unwrap();
            prop_assert_eq!(g.edges().len(), 2 * w * h);
        }
    }
}
