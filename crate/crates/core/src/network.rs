//! Tree tensor networks: local tensors on a [`TreeTopology`], the contraction
//! map, local (effective) and global (edge-cut) ranks, and the minimality
//! certificate.
//!
//! Minimality is decided locally: the declared bonds are minimal for the
//! represented tensor exactly when every local tensor, flattened with one
//! incident bond as rows, has rank equal to that bond. [`TreeNetwork::check_minimality`]
//! never contracts the network. [`TreeNetwork::cross_validate`] does, and
//! compares the local verdict with the ranks of the global flattenings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{
    contract_pair, flatten, mode_multiply, numerical_rank, AxisLabel, DenseTensor, FlatteningSpec, Matrix,
    RankInfo,
};
use crate::topology::{Edge, RootedView, TreeTopology, VertexId};

/// Largest intermediate tensor (in scalars) a contraction may build by default.
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 28;

/// Canonical axis layout of the local tensor at `v`: the physical axis, then
/// one bond axis per neighbour in ascending order.
pub fn local_axes(topology: &TreeTopology, v: VertexId) -> Result<Vec<(AxisLabel, usize)>> {
    let mut axes = vec![(AxisLabel::Physical(v), topology.phys_dim(v)?)];
    for &w in topology.neighbors(v)? {
        let e = Edge::new(v, w);
        axes.push((AxisLabel::Bond(e), topology.bond(e)?));
    }
    Ok(axes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNetwork {
    topology: TreeTopology,
    tensors: BTreeMap<VertexId, DenseTensor>,
}

impl TreeNetwork {
    pub fn new(topology: TreeTopology, tensors: BTreeMap<VertexId, DenseTensor>) -> Result<Self> {
        for v in topology.vertices() {
            let t = tensors.get(&v).ok_or_else(|| Error::LocalTensorMismatch {
                vertex: v,
                reason: "missing local tensor".into(),
            })?;
            let expected = local_axes(&topology, v)?;
            if t.order() != expected.len() {
                return Err(Error::LocalTensorMismatch {
                    vertex: v,
                    reason: format!("expected {} axes, found {}", expected.len(), t.order()),
                });
            }
            for (label, len) in expected {
                match t.axis_len(label) {
                    Some(found) if found == len => {}
                    Some(found) => {
                        return Err(Error::LocalTensorMismatch {
                            vertex: v,
                            reason: format!("axis {label} has length {found}, expected {len}"),
                        })
                    }
                    None => {
                        return Err(Error::LocalTensorMismatch {
                            vertex: v,
                            reason: format!("missing axis {label}"),
                        })
                    }
                }
            }
            if t.data().iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteEntries);
            }
        }
        if let Some(&extra) = tensors.keys().find(|&&v| !topology.contains(v)) {
            return Err(Error::UnknownVertex(extra));
        }
        Ok(Self { topology, tensors })
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    pub fn tensors(&self) -> &BTreeMap<VertexId, DenseTensor> {
        &self.tensors
    }

    pub fn tensor(&self, v: VertexId) -> Result<&DenseTensor> {
        self.tensors.get(&v).ok_or(Error::UnknownVertex(v))
    }

    pub fn into_parts(self) -> (TreeTopology, BTreeMap<VertexId, DenseTensor>) {
        (self.topology, self.tensors)
    }

    /// Replaces the local tensor at `v` (same shape contract).
    pub fn with_tensor(&self, v: VertexId, tensor: DenseTensor) -> Result<Self> {
        let mut tensors = self.tensors.clone();
        tensors.insert(v, tensor);
        Self::new(self.topology.clone(), tensors)
    }

    /// Mode-multiplies the bond axis of `edge` at its low endpoint by
    /// `lo_map` and at its high endpoint by `hi_map`. Both maps must have the
    /// same row count, which becomes the new bond dimension. With
    /// `hi_map = lo_map⁻ᵀ` this is a gauge transformation.
    pub fn transform_edge(&self, edge: Edge, lo_map: &Matrix, hi_map: &Matrix) -> Result<Self> {
        if lo_map.nrows() != hi_map.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "edge maps produce bonds {} and {}",
                lo_map.nrows(),
                hi_map.nrows()
            )));
        }
        let label = AxisLabel::Bond(edge);
        let lo = mode_multiply(self.tensor(edge.lo())?, lo_map, label)?;
        let hi = mode_multiply(self.tensor(edge.hi())?, hi_map, label)?;
        let mut tensors = self.tensors.clone();
        tensors.insert(edge.lo(), lo);
        tensors.insert(edge.hi(), hi);
        Self::new(self.topology.with_bond(edge, lo_map.nrows())?, tensors)
    }

    /// Contracts every bond over the default root.
    pub fn contract(&self, budget: usize) -> Result<DenseTensor> {
        self.contract_from(self.topology.default_root(), budget)
    }

    /// Contracts leaves-to-root over the orientation toward `root`. The
    /// output has one physical axis per vertex, ascending by id.
    pub fn contract_from(&self, root: VertexId, budget: usize) -> Result<DenseTensor> {
        let view = self.topology.root_at(root)?;
        let full = self.absorb_subtree(&view, root, None, budget)?;
        let order: Vec<AxisLabel> = self.topology.vertices().map(AxisLabel::Physical).collect();
        full.permuted(&order)
    }

    fn absorb_subtree(
        &self,
        view: &RootedView,
        v: VertexId,
        skip: Option<VertexId>,
        budget: usize,
    ) -> Result<DenseTensor> {
        let children: Vec<VertexId> = view
            .children(v)
            .iter()
            .copied()
            .filter(|&c| Some(c) != skip)
            .collect();
        let parts = par::try_map(&children, |&c| self.absorb_subtree(view, c, None, budget))?;
        let mut acc = self.tensors[&v].clone();
        check_budget(acc.len(), budget)?;
        for (c, part) in children.into_iter().zip(parts) {
            let bond = self.topology.bond(Edge::new(v, c))?;
            check_budget(acc.len() / bond * (part.len() / bond), budget)?;
            acc = contract_pair(&acc, &part)?;
        }
        Ok(acc)
    }

    /// The matrix of the subtree on `a`'s side of edge `{a, p}` with all
    /// internal bonds contracted: rows run over the physical axes of that
    /// side (ascending ids), columns over the bond `{a, p}`.
    pub fn subtree_matrix(&self, a: VertexId, p: VertexId, budget: usize) -> Result<Matrix> {
        let edge = Edge::try_from((a, p)).map_err(|_| Error::UnknownVertex(a))?;
        self.topology.bond(edge)?;
        let view = self.topology.root_at(a)?;
        let part = self.absorb_subtree(&view, a, Some(p), budget)?;
        let rows: Vec<AxisLabel> = self
            .topology
            .side_of(edge, a)?
            .into_iter()
            .map(AxisLabel::Physical)
            .collect();
        flatten(&part, &FlatteningSpec::new(rows, vec![AxisLabel::Bond(edge)]))
    }

    /// Rank of `T_v` flattened with the bond toward each neighbour as rows.
    pub fn effective_multilinear_rank(&self, v: VertexId, tol_rel: f64) -> Result<BTreeMap<VertexId, RankInfo>> {
        let t = self.tensor(v)?;
        self.topology
            .neighbors(v)?
            .iter()
            .map(|&j| {
                let spec = FlatteningSpec::split(t.labels(), &[AxisLabel::Bond(Edge::new(v, j))]);
                Ok((j, numerical_rank(&flatten(t, &spec)?, tol_rel)?))
            })
            .collect()
    }

    /// Rank of the global flattening induced by cutting `edge`.
    pub fn edge_cut_rank(&self, edge: Edge, tol_rel: f64, budget: usize) -> Result<RankInfo> {
        self.topology.bond(edge)?;
        let t = self.contract(budget)?;
        edge_cut_rank_of(&t, &self.topology, edge, tol_rel)
    }

    pub fn check_minimality(&self, tol_rel: f64) -> MinimalityCertificate {
        let vertices: Vec<VertexId> = self.topology.vertices().collect();
        let per_vertex = par::map(&vertices, |&v| {
            self.effective_multilinear_rank(v, tol_rel)
                .expect("local tensors are validated at construction")
        });

        let mut effective_ranks = Vec::new();
        let mut failures = Vec::new();
        for (&v, ranks) in vertices.iter().zip(per_vertex) {
            for (j, info) in ranks {
                let bond = self.topology.bond_dims()[&Edge::new(v, j)];
                if info.rank < bond {
                    failures.push(Shortfall {
                        vertex: v,
                        neighbor: j,
                        rank: info.rank,
                        bond,
                    });
                }
                effective_ranks.push(LocalRank {
                    vertex: v,
                    neighbor: j,
                    rank: info.rank,
                    bond,
                    margin: info.ratio(bond),
                    tail: info.tail(),
                });
            }
        }
        MinimalityCertificate {
            minimal: failures.is_empty(),
            failures,
            report: RankReport {
                tol_rel,
                bond_dims: bond_entries(&self.topology),
                effective_ranks,
                edge_cut_ranks: None,
            },
        }
    }

    /// Runs the local certificate and the global edge-cut ranks and checks
    /// that they tell the same story. Fails with
    /// [`Error::InconsistencyDetected`] (carrying the full report) otherwise.
    pub fn cross_validate(&self, tol_rel: f64, budget: usize) -> Result<RankReport> {
        let cert = self.check_minimality(tol_rel);
        let t = self.contract(budget)?;
        let cuts = edge_cut_ranks(&t, &self.topology, tol_rel)?;
        let bad = reconcile(&cert, &cuts.iter().map(|(&e, info)| (e, info.rank)).collect());
        let mut report = cert.report;
        report.edge_cut_ranks = Some(
            cuts.into_iter()
                .map(|(edge, info)| EdgeCutRank {
                    edge,
                    rank: info.rank,
                    bond: self.topology.bond_dims()[&edge],
                    tail: info.tail(),
                })
                .collect(),
        );
        if bad.is_empty() {
            Ok(report)
        } else {
            Err(Error::InconsistencyDetected {
                edges: bad,
                report: Box::new(report),
            })
        }
    }
}

fn check_budget(required: usize, budget: usize) -> Result<()> {
    if required > budget {
        Err(Error::MemoryBudgetExceeded { required, budget })
    } else {
        Ok(())
    }
}

fn bond_entries(topology: &TreeTopology) -> Vec<BondEntry> {
    topology
        .bond_dims()
        .iter()
        .map(|(&edge, &bond)| BondEntry { edge, bond })
        .collect()
}

/// Edges on which a local certificate and measured edge-cut ranks disagree.
///
/// Each edge is checked three ways: an edge-cut rank may never exceed the
/// declared bond; a minimal certificate forces every edge-cut rank to equal
/// its bond; a local shortfall on an edge forces the edge-cut rank below the
/// bond.
pub fn reconcile(cert: &MinimalityCertificate, edge_cut_ranks: &BTreeMap<Edge, usize>) -> Vec<Edge> {
    let mut bad = Vec::new();
    for entry in &cert.report.bond_dims {
        let Some(&global) = edge_cut_ranks.get(&entry.edge) else {
            continue;
        };
        let local_full = cert
            .report
            .effective_ranks
            .iter()
            .filter(|r| Edge::new(r.vertex, r.neighbor) == entry.edge)
            .all(|r| r.rank == entry.bond);
        let consistent = global <= entry.bond
            && (!cert.minimal || global == entry.bond)
            && (local_full || global < entry.bond);
        if !consistent {
            bad.push(entry.edge);
        }
    }
    bad
}

/// Rank of the flattening of `t` (physical axes only) across `edge`, with
/// the low endpoint's side as rows.
pub fn edge_cut_rank_of(t: &DenseTensor, topology: &TreeTopology, edge: Edge, tol_rel: f64) -> Result<RankInfo> {
    let rows: Vec<AxisLabel> = topology
        .side_of(edge, edge.lo())?
        .into_iter()
        .map(AxisLabel::Physical)
        .collect();
    let spec = FlatteningSpec::split(t.labels(), &rows);
    check_physical_axes(t, topology)?;
    numerical_rank(&flatten(t, &spec)?, tol_rel)
}

/// Edge-cut ranks of `t` for every edge of `topology`.
pub fn edge_cut_ranks(t: &DenseTensor, topology: &TreeTopology, tol_rel: f64) -> Result<BTreeMap<Edge, RankInfo>> {
    check_physical_axes(t, topology)?;
    let edges: Vec<Edge> = topology.edges().collect();
    let ranks = par::try_map(&edges, |&e| edge_cut_rank_of(t, topology, e, tol_rel))?;
    Ok(edges.into_iter().zip(ranks).collect())
}

fn check_physical_axes(t: &DenseTensor, topology: &TreeTopology) -> Result<()> {
    if t.order() != topology.num_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "tensor has {} axes, tree has {} vertices",
            t.order(),
            topology.num_vertices()
        )));
    }
    for (&v, &dim) in topology.phys_dims() {
        match t.axis_len(AxisLabel::Physical(v)) {
            Some(len) if len == dim => {}
            found => {
                return Err(Error::ShapeMismatch(format!(
                    "physical axis of vertex {v}: expected length {dim}, found {found:?}"
                )))
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondEntry {
    pub edge: Edge,
    pub bond: usize,
}

/// Measured rank of `T_vertex` flattened along the bond toward `neighbor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalRank {
    pub vertex: VertexId,
    pub neighbor: VertexId,
    pub rank: usize,
    pub bond: usize,
    /// `σ_bond / σ_1`; zero when the flattening cannot reach the bond.
    pub margin: f64,
    /// `(σ_rank / σ_1, σ_{rank+1} / σ_1)`.
    pub tail: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCutRank {
    pub edge: Edge,
    pub rank: usize,
    pub bond: usize,
    pub tail: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub tol_rel: f64,
    pub bond_dims: Vec<BondEntry>,
    pub effective_ranks: Vec<LocalRank>,
    /// Present only when the full contraction was computed.
    pub edge_cut_ranks: Option<Vec<EdgeCutRank>>,
}

impl RankReport {
    /// Smallest `σ_bond / σ_1` over all local flattenings (1 for an edgeless tree).
    pub fn min_margin(&self) -> f64 {
        self.effective_ranks
            .iter()
            .map(|r| r.margin)
            .fold(1.0, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub vertex: VertexId,
    pub neighbor: VertexId,
    pub rank: usize,
    pub bond: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityCertificate {
    pub minimal: bool,
    pub failures: Vec<Shortfall>,
    pub report: RankReport,
}
