//! Two-dimensional P1 triangulations with a Dirichlet/Neumann boundary split.
//!
//! Mesh file format (ASCII, whitespace separated, `#` starts a comment,
//! all indices 1-based):
//!
//! ```text
//! $Nodes <N>
//! <id> <x> <y>
//! $Triangles <M>
//! <id> <n1> <n2> <n3>
//! $BoundaryEdges <K>
//! <id> <n1> <n2> <D|N>
//! $End
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid mesh: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    fn letter(self) -> char {
        match self {
            BoundaryTag::Dirichlet => 'D',
            BoundaryTag::Neumann => 'N',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn parse(s: &str) -> Option<Side> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "bottom" => Some(Side::Bottom),
            "top" => Some(Side::Top),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

/// Validated triangulation. Immutable once built.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    // derived
    edge_normals: Vec<[f64; 2]>,
    edge_lengths: Vec<f64>,
    edge_triangle: Vec<usize>,
    areas: Vec<f64>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.triangles == other.triangles
            && self.boundary_edges == other.boundary_edges
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds and validates a mesh from 0-based connectivity.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        let invalid = |m: String| Err(MeshError::Validation(m));
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return invalid("non-finite node coordinate".into());
        }
        if triangles.is_empty() {
            return invalid("no triangles".into());
        }
        let n = nodes.len();
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return invalid(format!("triangle {} references a missing node", t + 1));
            }
            let a = signed_area(&nodes[tri[0]], &nodes[tri[1]], &nodes[tri[2]]);
            if a <= 0.0 {
                return invalid(format!("negative area in triangle {}", t + 1));
            }
            areas.push(a);
        }

        let mut edge_owner: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                edge_owner.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        if let Some((e, _)) = edge_owner.iter().find(|(_, ts)| ts.len() > 2) {
            return invalid(format!("edge ({}, {}) shared by more than two triangles", e.0 + 1, e.1 + 1));
        }
        let topo: BTreeSet<(usize, usize)> = edge_owner
            .iter()
            .filter(|(_, ts)| ts.len() == 1)
            .map(|(e, _)| *e)
            .collect();

        let mut seen: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for be in &boundary_edges {
            if be.nodes.iter().any(|&i| i >= n) {
                return invalid("boundary edge references a missing node".into());
            }
            let key = edge_key(be.nodes[0], be.nodes[1]);
            if !topo.contains(&key) {
                return invalid(format!(
                    "edge ({}, {}) is not on the boundary",
                    key.0 + 1,
                    key.1 + 1
                ));
            }
            if let Some(prev) = seen.insert(key, be.tag) {
                let what = if prev == be.tag { "listed twice" } else { "tagged both D and N" };
                return invalid(format!("boundary edge ({}, {}) {}", key.0 + 1, key.1 + 1, what));
            }
        }
        if seen.len() != topo.len() {
            return invalid("boundary not covered".into());
        }
        if !boundary_edges.iter().any(|e| e.tag == BoundaryTag::Dirichlet) {
            return invalid("no Dirichlet edge".into());
        }
        if !boundary_edges.iter().any(|e| e.tag == BoundaryTag::Neumann) {
            return invalid("no Neumann edge".into());
        }

        let mut edge_normals = Vec::with_capacity(boundary_edges.len());
        let mut edge_lengths = Vec::with_capacity(boundary_edges.len());
        let mut edge_triangle = Vec::with_capacity(boundary_edges.len());
        for be in &boundary_edges {
            let [a, b] = be.nodes;
            let t = edge_owner[&edge_key(a, b)][0];
            let opposite = triangles[t].iter().copied().find(|&i| i != a && i != b).unwrap();
            let (pa, pb) = (nodes[a], nodes[b]);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let len = d[0].hypot(d[1]);
            if len == 0.0 {
                return invalid("zero-length boundary edge".into());
            }
            let mut nrm = [d[1] / len, -d[0] / len];
            let po = nodes[opposite];
            if nrm[0] * (pa[0] - po[0]) + nrm[1] * (pa[1] - po[1]) < 0.0 {
                nrm = [-nrm[0], -nrm[1]];
            }
            edge_normals.push(nrm);
            edge_lengths.push(len);
            edge_triangle.push(t);
        }

        Ok(Self {
            nodes,
            triangles,
            boundary_edges,
            edge_normals,
            edge_lengths,
            edge_triangle,
            areas,
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, triangle: usize) -> f64 {
        self.areas[triangle]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Outward unit normal of boundary edge `edge_index`, recomputed from
    /// the adjacent triangle (input edge orientation is not trusted).
    pub fn edge_normal(&self, edge_index: usize) -> [f64; 2] {
        self.edge_normals[edge_index]
    }

    pub fn edge_length(&self, edge_index: usize) -> f64 {
        self.edge_lengths[edge_index]
    }

    /// Triangle adjacent to boundary edge `edge_index`.
    pub fn edge_triangle(&self, edge_index: usize) -> usize {
        self.edge_triangle[edge_index]
    }

    /// Indices of boundary edges with the given tag.
    pub fn edges_tagged(&self, tag: BoundaryTag) -> impl Iterator<Item = usize> + '_ {
        self.boundary_edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.tag == tag)
            .map(|(i, _)| i)
    }

    /// `|Γ_N|`.
    pub fn neumann_length(&self) -> f64 {
        self.edges_tagged(BoundaryTag::Neumann).map(|e| self.edge_lengths[e]).sum()
    }

    /// Gradients of the three barycentric hat functions on `triangle`.
    pub fn shape_gradients(&self, triangle: usize) -> [[f64; 2]; 3] {
        let [i, j, k] = self.triangles[triangle];
        let (p, q, r) = (self.nodes[i], self.nodes[j], self.nodes[k]);
        let two_a = 2.0 * self.areas[triangle];
        [
            [(q[1] - r[1]) / two_a, (r[0] - q[0]) / two_a],
            [(r[1] - p[1]) / two_a, (p[0] - r[0]) / two_a],
            [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a],
        ]
    }

    /// Node indices touched by Dirichlet edges, sorted.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::Dirichlet)
            .flat_map(|e| e.nodes)
            .collect();
        set.into_iter().collect()
    }

    /// Copy with every interior node moved by a uniform random offset of at
    /// most `amplitude` per coordinate. Boundary nodes stay put, so the
    /// domain and its tags are unchanged.
    pub fn jittered(&self, amplitude: f64, seed: u64) -> Result<Self, MeshError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut on_boundary = vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            on_boundary[e.nodes[0]] = true;
            on_boundary[e.nodes[1]] = true;
        }
        let nodes = self
            .nodes
            .iter()
            .zip(&on_boundary)
            .map(|(p, &b)| {
                if b || amplitude == 0.0 {
                    *p
                } else {
                    [p[0] + rng.gen_range(-amplitude..amplitude), p[1] + rng.gen_range(-amplitude..amplitude)]
                }
            })
            .collect();
        Self::new(nodes, self.triangles.clone(), self.boundary_edges.clone())
    }

    /// Triangulated unit square `[0,1]²` with `2 nx ny` triangles. Sides in
    /// `dirichlet_sides` are tagged D, the rest N.
    pub fn structured_square(
        nx: usize,
        ny: usize,
        dirichlet_sides: &[Side],
    ) -> Result<Self, MeshError> {
        if nx == 0 || ny == 0 {
            return Err(MeshError::InvalidArgument("nx and ny must be >= 1".into()));
        }
        let sides: BTreeSet<Side> = dirichlet_sides.iter().copied().collect();
        if sides.is_empty() {
            return Err(MeshError::InvalidArgument("at least one Dirichlet side is required".into()));
        }
        if sides.len() == 4 {
            return Err(MeshError::InvalidArgument("at least one side must stay Neumann".into()));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([i as f64 / nx as f64, j as f64 / ny as f64]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let tag = |s: Side| {
            if sides.contains(&s) {
                BoundaryTag::Dirichlet
            } else {
                BoundaryTag::Neumann
            }
        };
        let mut edges = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: tag(Side::Bottom) });
        }
        for j in 0..ny {
            edges.push(BoundaryEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: tag(Side::Right) });
        }
        for i in (0..nx).rev() {
            edges.push(BoundaryEdge { nodes: [id(i + 1, ny), id(i, ny)], tag: tag(Side::Top) });
        }
        for j in (0..ny).rev() {
            edges.push(BoundaryEdge { nodes: [id(0, j + 1), id(0, j)], tag: tag(Side::Left) });
        }
        Self::new(nodes, triangles, edges)
    }

    /// Unit square with the square hole `[lo, hi]²` removed, `n × n` grid
    /// cells. The hole boundary is D and the outer boundary N, so the two
    /// never meet. `lo n` and `hi n` must be integers.
    pub fn structured_frame(n: usize, lo: f64, hi: f64) -> Result<Self, MeshError> {
        let (a, b) = (lo * n as f64, hi * n as f64);
        if n == 0 || !(0.0 < lo && lo < hi && hi < 1.0) || a.fract() != 0.0 || b.fract() != 0.0 || a < 1.0 {
            return Err(MeshError::InvalidArgument(format!("hole [{lo}, {hi}] does not fit a {n}×{n} grid")));
        }
        let (h0, h1) = (a as usize, b as usize);
        if h1 + 1 > n {
            return Err(MeshError::InvalidArgument("hole must leave a ring of cells".into()));
        }
        let in_hole = |i: usize, j: usize| (h0..h1).contains(&i) && (h0..h1).contains(&j);
        let interior = |i: usize, j: usize| i > h0 && i < h1 && j > h0 && j < h1;
        let mut id = vec![usize::MAX; (n + 1) * (n + 1)];
        let mut nodes = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                if !interior(i, j) {
                    id[j * (n + 1) + i] = nodes.len();
                    nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
                }
            }
        }
        let at = |i: usize, j: usize| id[j * (n + 1) + i];
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if !in_hole(i, j) {
                    let (p, q, r, s) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
                    triangles.push([p, q, r]);
                    triangles.push([p, r, s]);
                }
            }
        }
        let mut edges = Vec::new();
        let ring = |k0: usize, k1: usize, tag: BoundaryTag, edges: &mut Vec<BoundaryEdge>| {
            for i in k0..k1 {
                edges.push(BoundaryEdge { nodes: [at(i, k0), at(i + 1, k0)], tag });
                edges.push(BoundaryEdge { nodes: [at(k1, i), at(k1, i + 1)], tag });
                edges.push(BoundaryEdge { nodes: [at(i + 1, k1), at(i, k1)], tag });
                edges.push(BoundaryEdge { nodes: [at(k0, i + 1), at(k0, i)], tag });
            }
        };
        ring(0, n, BoundaryTag::Neumann, &mut edges);
        ring(h0, h1, BoundaryTag::Dirichlet, &mut edges);
        Self::new(nodes, triangles, edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "$Nodes {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{} {:?} {:?}", i + 1, p[0], p[1]);
        }
        let _ = writeln!(s, "$Triangles {}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1);
        }
        let _ = writeln!(s, "$BoundaryEdges {}", self.boundary_edges.len());
        for (i, e) in self.boundary_edges.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} {}", i + 1, e.nodes[0] + 1, e.nodes[1] + 1, e.tag.letter());
        }
        s.push_str("$End\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut last_line = 0;

        let mut nodes: Option<Vec<[f64; 2]>> = None;
        let mut triangles: Option<Vec<[usize; 3]>> = None;
        let mut edges: Option<Vec<BoundaryEdge>> = None;
        let mut ended = false;

        while let Some((ln, line)) = lines.next() {
            last_line = ln;
            let err = |reason: String| MeshError::Parse { line: ln, reason };
            if ended {
                return Err(err("content after $End".into()));
            }
            let mut tok = line.split_whitespace();
            let head = tok.next().unwrap();
            if head == "$End" {
                ended = true;
                continue;
            }
            let count = |tok: &mut std::str::SplitWhitespace| -> Result<usize, MeshError> {
                tok.next()
                    .ok_or_else(|| err(format!("{head} needs a count")))?
                    .parse::<usize>()
                    .map_err(|e| err(format!("bad count: {e}")))
            };
            match head {
                "$Nodes" | "$Triangles" | "$BoundaryEdges" => {
                    let n = count(&mut tok)?;
                    if tok.next().is_some() {
                        return Err(err("trailing tokens after section header".into()));
                    }
                    let mut rows = Vec::with_capacity(n);
                    for k in 0..n {
                        let (rl, row) = lines.next().ok_or(MeshError::Parse {
                            line: ln,
                            reason: format!("{head}: expected {n} rows, found {k}"),
                        })?;
                        last_line = rl;
                        rows.push((rl, row.split_whitespace().collect::<Vec<_>>()));
                    }
                    match head {
                        "$Nodes" => {
                            if nodes.is_some() {
                                return Err(err("duplicate $Nodes section".into()));
                            }
                            nodes = Some(parse_rows(&rows, 3, |f, rl| {
                                Ok([parse_f64(f[1], rl)?, parse_f64(f[2], rl)?])
                            })?);
                        }
                        "$Triangles" => {
                            if triangles.is_some() {
                                return Err(err("duplicate $Triangles section".into()));
                            }
                            triangles = Some(parse_rows(&rows, 4, |f, rl| {
                                Ok([parse_index(f[1], rl)?, parse_index(f[2], rl)?, parse_index(f[3], rl)?])
                            })?);
                        }
                        _ => {
                            if edges.is_some() {
                                return Err(err("duplicate $BoundaryEdges section".into()));
                            }
                            edges = Some(parse_rows(&rows, 4, |f, rl| {
                                let tag = match f[3] {
                                    "D" => BoundaryTag::Dirichlet,
                                    "N" => BoundaryTag::Neumann,
                                    other => {
                                        return Err(MeshError::Parse {
                                            line: rl,
                                            reason: format!("unknown boundary tag '{other}'"),
                                        })
                                    }
                                };
                                Ok(BoundaryEdge { nodes: [parse_index(f[1], rl)?, parse_index(f[2], rl)?], tag })
                            })?);
                        }
                    }
                }
                other => return Err(err(format!("unknown section '{other}'"))),
            }
        }
        let missing = |what: &str| MeshError::Parse { line: last_line, reason: format!("missing {what}") };
        if !ended {
            return Err(missing("$End"));
        }
        Self::new(
            nodes.ok_or_else(|| missing("$Nodes section"))?,
            triangles.ok_or_else(|| missing("$Triangles section"))?,
            edges.ok_or_else(|| missing("$BoundaryEdges section"))?,
        )
    }
}

fn parse_rows<T>(
    rows: &[(usize, Vec<&str>)],
    width: usize,
    f: impl Fn(&[&str], usize) -> Result<T, MeshError>,
) -> Result<Vec<T>, MeshError> {
    rows.iter()
        .enumerate()
        .map(|(k, (rl, fields))| {
            if fields.len() != width {
                return Err(MeshError::Parse {
                    line: *rl,
                    reason: format!("expected {width} fields, found {}", fields.len()),
                });
            }
            let id: usize = fields[0].parse().map_err(|_| MeshError::Parse {
                line: *rl,
                reason: format!("bad id '{}'", fields[0]),
            })?;
            if id != k + 1 {
                return Err(MeshError::Parse { line: *rl, reason: format!("expected id {}, found {id}", k + 1) });
            }
            f(fields, *rl)
        })
        .collect()
}

fn parse_f64(s: &str, line: usize) -> Result<f64, MeshError> {
    s.parse::<f64>()
        .map_err(|_| MeshError::Parse { line, reason: format!("bad number '{s}'") })
}

fn parse_index(s: &str, line: usize) -> Result<usize, MeshError> {
    match s.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i - 1),
        _ => Err(MeshError::Parse { line, reason: format!("bad 1-based index '{s}'") }),
    }
}

pub(crate) fn signed_area(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}
