//! Tree graphs carrying physical dimensions on vertices and bond dimensions on
//! edges.
//!
//! A [`TreeTopology`] is always a valid tree once constructed. Edges are stored
//! undirected; an orientation is derived on demand with [`TreeTopology::root_at`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Saturation cap for admissibility products.
pub const PRODUCT_CAP: u64 = i64::MAX as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for VertexId {
    fn from(id: u32) -> Self {
        VertexId(id)
    }
}

/// An undirected edge, stored with its endpoints in ascending order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(VertexId, VertexId)", into = "(VertexId, VertexId)")]
pub struct Edge {
    lo: VertexId,
    hi: VertexId,
}

impl Edge {
    /// Panics if `a == b`; use `Edge::try_from` for untrusted input.
    pub fn new(a: impl Into<VertexId>, b: impl Into<VertexId>) -> Self {
        Self::try_from((a.into(), b.into())).expect("an edge needs two distinct endpoints")
    }

    pub fn lo(&self) -> VertexId {
        self.lo
    }

    pub fn hi(&self) -> VertexId {
        self.hi
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.lo == v || self.hi == v
    }

    /// The endpoint that is not `v`, if `v` is an endpoint.
    pub fn other(&self, v: VertexId) -> Option<VertexId> {
        if v == self.lo {
            Some(self.hi)
        } else if v == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl TryFrom<(VertexId, VertexId)> for Edge {
    type Error = String;

    fn try_from((a, b): (VertexId, VertexId)) -> std::result::Result<Self, String> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Ok(Edge { lo: b, hi: a }),
            std::cmp::Ordering::Equal => Err(format!("self-loop at vertex {a}")),
        }
    }
}

impl From<Edge> for (VertexId, VertexId) {
    fn from(e: Edge) -> Self {
        (e.lo, e.hi)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.lo, self.hi)
    }
}

/// Checks raw vertex and edge lists against the tree invariants.
///
/// Vertices are `(id, physical dimension)`, edges are `(u, v, bond dimension)`.
/// Errors name the first offending vertex or edge found.
pub fn validate(vertices: &[(VertexId, usize)], edges: &[(VertexId, VertexId, usize)]) -> Result<()> {
    if vertices.is_empty() {
        return Err(Error::EmptyTopology);
    }
    let mut index = BTreeMap::new();
    for (pos, &(v, dim)) in vertices.iter().enumerate() {
        if index.insert(v, pos).is_some() {
            return Err(Error::DuplicateVertex(v));
        }
        if dim == 0 {
            return Err(Error::NonPositiveDimension(format!("physical space of vertex {v}")));
        }
    }

    let mut seen = BTreeSet::new();
    for &(a, b, bond) in edges {
        let edge = Edge::try_from((a, b)).map_err(|_| Error::SelfLoop(a))?;
        for end in [a, b] {
            if !index.contains_key(&end) {
                return Err(Error::UnknownVertex(end));
            }
        }
        if !seen.insert(edge) {
            return Err(Error::DuplicateEdge(edge));
        }
        if bond == 0 {
            return Err(Error::NonPositiveDimension(format!("bond of edge {edge}")));
        }
    }

    // union-find over vertex positions
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b, _) in edges {
        let (ra, rb) = (find(&mut parent, index[&a]), find(&mut parent, index[&b]));
        if ra == rb {
            return Err(Error::CycleDetected(Edge::new(a, b)));
        }
        parent[ra] = rb;
    }

    let (&first, &first_pos) = index.iter().next().expect("non-empty");
    let root = find(&mut parent, first_pos);
    let unreachable: Vec<VertexId> = index
        .iter()
        .filter(|&(_, &pos)| find(&mut parent, pos) != root)
        .map(|(&v, _)| v)
        .collect();
    if !unreachable.is_empty() {
        return Err(Error::Disconnected {
            from: first,
            unreachable,
        });
    }
    Ok(())
}

/// A validated tree with physical and bond dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeTopology {
    phys_dims: BTreeMap<VertexId, usize>,
    bond_dims: BTreeMap<Edge, usize>,
    adjacency: BTreeMap<VertexId, Vec<VertexId>>,
}

impl TreeTopology {
    pub fn new(vertices: &[(VertexId, usize)], edges: &[(VertexId, VertexId, usize)]) -> Result<Self> {
        validate(vertices, edges)?;
        let phys_dims: BTreeMap<_, _> = vertices.iter().copied().collect();
        let mut adjacency: BTreeMap<VertexId, Vec<VertexId>> =
            phys_dims.keys().map(|&v| (v, Vec::new())).collect();
        let mut bond_dims = BTreeMap::new();
        for &(a, b, bond) in edges {
            bond_dims.insert(Edge::new(a, b), bond);
            adjacency.get_mut(&a).expect("validated").push(b);
            adjacency.get_mut(&b).expect("validated").push(a);
        }
        for nbrs in adjacency.values_mut() {
            nbrs.sort_unstable();
        }
        Ok(Self {
            phys_dims,
            bond_dims,
            adjacency,
        })
    }

    /// Path `ids[0] – ids[1] – …` with the given physical dims and bonds.
    pub fn path(phys_dims: &[usize], bonds: &[usize]) -> Result<Self> {
        if bonds.len() + 1 != phys_dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "a path on {} vertices needs {} bonds, got {}",
                phys_dims.len(),
                phys_dims.len().saturating_sub(1),
                bonds.len()
            )));
        }
        let vertices: Vec<_> = (1..).map(VertexId).zip(phys_dims.iter().copied()).collect();
        let edges: Vec<_> = bonds
            .iter()
            .enumerate()
            .map(|(k, &r)| (VertexId(k as u32 + 1), VertexId(k as u32 + 2), r))
            .collect();
        Self::new(&vertices, &edges)
    }

    /// Star with center vertex 0 and leaves `1..=leaf_dims.len()`.
    pub fn star(center_dim: usize, leaf_dims: &[usize], bonds: &[usize]) -> Result<Self> {
        if bonds.len() != leaf_dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "a star with {} leaves needs {} bonds, got {}",
                leaf_dims.len(),
                leaf_dims.len(),
                bonds.len()
            )));
        }
        let mut vertices = vec![(VertexId(0), center_dim)];
        vertices.extend((1..).map(VertexId).zip(leaf_dims.iter().copied()));
        let edges: Vec<_> = bonds
            .iter()
            .enumerate()
            .map(|(k, &r)| (VertexId(0), VertexId(k as u32 + 1), r))
            .collect();
        Self::new(&vertices, &edges)
    }

    /// Vertices in ascending order.
    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        self.phys_dims.keys().copied()
    }

    pub fn num_vertices(&self) -> usize {
        self.phys_dims.len()
    }

    /// Edges in ascending order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = Edge> + '_ {
        self.bond_dims.keys().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.bond_dims.len()
    }

    pub fn phys_dims(&self) -> &BTreeMap<VertexId, usize> {
        &self.phys_dims
    }

    pub fn bond_dims(&self) -> &BTreeMap<Edge, usize> {
        &self.bond_dims
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.phys_dims.contains_key(&v)
    }

    pub fn phys_dim(&self, v: VertexId) -> Result<usize> {
        self.phys_dims.get(&v).copied().ok_or(Error::UnknownVertex(v))
    }

    pub fn bond(&self, edge: Edge) -> Result<usize> {
        self.bond_dims.get(&edge).copied().ok_or(Error::UnknownEdge(edge))
    }

    /// Neighbours of `v` in ascending order.
    pub fn neighbors(&self, v: VertexId) -> Result<&[VertexId]> {
        self.adjacency
            .get(&v)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownVertex(v))
    }

    /// Smallest vertex id; the orientation used when none is requested.
    pub fn default_root(&self) -> VertexId {
        *self.phys_dims.keys().next().expect("a topology has at least one vertex")
    }

    /// A copy with the bond on `edge` replaced.
    pub fn with_bond(&self, edge: Edge, bond: usize) -> Result<Self> {
        if bond == 0 {
            return Err(Error::NonPositiveDimension(format!("bond of edge {edge}")));
        }
        let mut out = self.clone();
        match out.bond_dims.get_mut(&edge) {
            Some(slot) => *slot = bond,
            None => return Err(Error::UnknownEdge(edge)),
        }
        Ok(out)
    }

    /// A copy with all bonds replaced; `bonds` must cover exactly the same edges.
    pub fn with_bonds(&self, bonds: &BTreeMap<Edge, usize>) -> Result<Self> {
        let mut out = self.clone();
        for (&edge, &bond) in bonds {
            out = out.with_bond(edge, bond)?;
        }
        if bonds.len() != self.bond_dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} bonds, got {}",
                self.bond_dims.len(),
                bonds.len()
            )));
        }
        Ok(out)
    }

    /// Vertices on `start`'s side once `edge` is removed, ascending.
    pub fn side_of(&self, edge: Edge, start: VertexId) -> Result<Vec<VertexId>> {
        if !self.bond_dims.contains_key(&edge) {
            return Err(Error::UnknownEdge(edge));
        }
        if !edge.contains(start) {
            return Err(Error::UnknownVertex(start));
        }
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[&v] {
                if Edge::new(v, w) != edge && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    pub fn root_at(&self, root: VertexId) -> Result<RootedView> {
        RootedView::new(self, root)
    }

    pub fn default_rooted(&self) -> RootedView {
        RootedView::new(self, self.default_root()).expect("default root exists")
    }

    /// Evaluates `r_ij ≤ dim V_i · Π_{k ∈ nb(i) \ j} r_ik` at every vertex and incident edge.
    pub fn is_admissible(&self) -> AdmissibilityVerdict {
        let mut violations = Vec::new();
        for (&v, nbrs) in &self.adjacency {
            for &j in nbrs {
                let bond = self.bond_dims[&Edge::new(v, j)] as u64;
                let bound = nbrs
                    .iter()
                    .filter(|&&k| k != j)
                    .map(|&k| self.bond_dims[&Edge::new(v, k)] as u64)
                    .fold(self.phys_dims[&v] as u64, saturating_product);
                if bond > bound {
                    violations.push(Violation {
                        vertex: v,
                        neighbor: j,
                        bond: bond as usize,
                        bound,
                    });
                }
            }
        }
        AdmissibilityVerdict {
            admissible: violations.is_empty(),
            violations,
        }
    }
}

fn saturating_product(acc: u64, x: u64) -> u64 {
    acc.saturating_mul(x).min(PRODUCT_CAP)
}

/// A failure of the admissibility inequality at `vertex` toward `neighbor`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub vertex: VertexId,
    pub neighbor: VertexId,
    pub bond: usize,
    /// `dim V_vertex` times the other incident bonds, saturated at [`PRODUCT_CAP`].
    pub bound: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    pub violations: Vec<Violation>,
}

/// An orientation of a tree toward `root`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedView {
    root: VertexId,
    parent: BTreeMap<VertexId, Option<VertexId>>,
    children: BTreeMap<VertexId, Vec<VertexId>>,
    traversal: Vec<VertexId>,
}

impl RootedView {
    fn new(topology: &TreeTopology, root: VertexId) -> Result<Self> {
        if !topology.contains(root) {
            return Err(Error::UnknownVertex(root));
        }
        let mut parent = BTreeMap::from([(root, None)]);
        let mut children = BTreeMap::new();
        let mut traversal = Vec::with_capacity(topology.num_vertices());

        // iterative post-order; children visited in ascending id order
        let mut stack = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                traversal.push(v);
                continue;
            }
            let kids: Vec<VertexId> = topology.adjacency[&v]
                .iter()
                .copied()
                .filter(|&w| parent[&v] != Some(w))
                .collect();
            for &c in &kids {
                parent.insert(c, Some(v));
            }
            stack.push((v, true));
            stack.extend(kids.iter().rev().map(|&c| (c, false)));
            children.insert(v, kids);
        }

        Ok(Self {
            root,
            parent,
            children,
            traversal,
        })
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent.get(&v).copied().flatten()
    }

    /// Children of `v` in ascending order; empty for leaves and unknown vertices.
    pub fn children(&self, v: VertexId) -> &[VertexId] {
        self.children.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Leaves-to-root order: every vertex appears after all of its children.
    pub fn traversal(&self) -> &[VertexId] {
        &self.traversal
    }

    /// Vertices of the subtree hanging from `v`, in traversal order.
    pub fn subtree(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children(u).iter().copied());
        }
        out.sort_unstable();
        out
    }
}

/// On-disk form of a topology.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexEntry {
    pub id: VertexId,
    pub phys_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub u: VertexId,
    pub v: VertexId,
    pub bond: usize,
}

impl TryFrom<TopologyFile> for TreeTopology {
    type Error = Error;

    fn try_from(file: TopologyFile) -> Result<Self> {
        let vertices: Vec<_> = file.vertices.iter().map(|e| (e.id, e.phys_dim)).collect();
        let edges: Vec<_> = file.edges.iter().map(|e| (e.u, e.v, e.bond)).collect();
        TreeTopology::new(&vertices, &edges)
    }
}

impl From<&TreeTopology> for TopologyFile {
    fn from(t: &TreeTopology) -> Self {
        TopologyFile {
            vertices: t
                .phys_dims
                .iter()
                .map(|(&id, &phys_dim)| VertexEntry { id, phys_dim })
                .collect(),
            edges: t
                .bond_dims
                .iter()
                .map(|(e, &bond)| EdgeEntry {
                    u: e.lo,
                    v: e.hi,
                    bond,
                })
                .collect(),
        }
    }
}
