//! Exact reduction of a tree network to minimal bond dimensions.
//!
//! Each step takes one local tensor, flattens it along one incident bond,
//! keeps the numerically nonzero part of its SVD as the new core and pushes
//! the orthonormal factor across the bond into the neighbour. A
//! leaves-to-root sweep makes every subtree map injective; a root-to-leaves
//! sweep then truncates each edge to the rank of the global flattening.
//! Nothing above `tol_rel · σ_1` is ever discarded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::{edge_cut_ranks, TreeNetwork};
use crate::tensor::{flatten, mode_multiply, rank_from_spectrum, thin_svd, unflatten, AxisLabel, DenseTensor, FlatteningSpec, Matrix};
use crate::topology::{Edge, TreeTopology, VertexId};

/// One refactoring of the bond between `vertex` and `neighbor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub vertex: VertexId,
    pub neighbor: VertexId,
    pub old: usize,
    pub new: usize,
    /// Largest singular value dropped by the truncation (0 when nothing was).
    pub discarded: f64,
}

impl ReductionStep {
    pub fn truncated(&self) -> bool {
        self.new < self.old
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    pub before: BTreeMap<String, usize>,
    pub after: BTreeMap<String, usize>,
    /// Relative Frobenius distance between the contracted networks, when
    /// both contractions fit the memory budget.
    pub reconstruction_error: Option<f64>,
}

impl ReductionTrace {
    pub fn truncations(&self) -> usize {
        self.steps.iter().filter(|s| s.truncated()).count()
    }
}

fn bond_map(topology: &TreeTopology) -> BTreeMap<String, usize> {
    topology
        .bond_dims()
        .iter()
        .map(|(e, &r)| (format!("{}-{}", e.lo(), e.hi()), r))
        .collect()
}

/// Truncates the bond `{vertex, neighbor}` to the numerical rank `μ` of
/// `T_vertex` flattened along it. The core `diag(σ)·Vᵀ` stays at `vertex`;
/// `Uᵀ` is absorbed into `neighbor`. The new bond is `max(μ, 1)`; a zero
/// flattening leaves a zero core on a bond of one.
///
/// When `μ` already equals the bond the network is returned unchanged.
pub fn local_tucker_refactor(
    net: &TreeNetwork,
    vertex: VertexId,
    neighbor: VertexId,
    tol_rel: f64,
) -> Result<(TreeNetwork, ReductionStep)> {
    let edge = Edge::try_from((vertex, neighbor)).map_err(|_| crate::Error::UnknownVertex(vertex))?;
    let old = net.topology().bond(edge)?;
    let label = AxisLabel::Bond(edge);
    let t = net.tensor(vertex)?;
    let spec = FlatteningSpec::split(t.labels(), &[label]);
    let svd = thin_svd(&flatten(t, &spec)?)?;
    let rank = rank_from_spectrum(&svd.s, tol_rel);
    let new = rank.max(1);

    if new >= old {
        let step = ReductionStep {
            vertex,
            neighbor,
            old,
            new: old,
            discarded: 0.0,
        };
        return Ok((net.clone(), step));
    }

    let cols = svd.vt.ncols();
    let (factor, core) = if rank == 0 {
        let mut e1 = Matrix::zeros(old, 1);
        e1[(0, 0)] = 1.0;
        (e1, Matrix::zeros(1, cols))
    } else {
        let mut core = svd.vt.rows(0, new).into_owned();
        for (k, mut row) in core.row_iter_mut().enumerate() {
            row *= svd.s[k];
        }
        (svd.u.columns(0, new).into_owned(), core)
    };
    let discarded = if rank == 0 { 0.0 } else { svd.s.get(new).copied().unwrap_or(0.0) };

    let axes: Vec<(AxisLabel, usize)> = t
        .labels()
        .iter()
        .zip(t.dims())
        .map(|(&l, &d)| (l, if l == label { new } else { d }))
        .collect();
    let new_core: DenseTensor = unflatten(&core, &spec, &axes)?;
    let absorbed = mode_multiply(net.tensor(neighbor)?, &factor.transpose(), label)?;

    let (topology, mut tensors) = net.clone().into_parts();
    tensors.insert(vertex, new_core);
    tensors.insert(neighbor, absorbed);
    let reduced = TreeNetwork::new(topology.with_bond(edge, new)?, tensors)?;
    Ok((
        reduced,
        ReductionStep {
            vertex,
            neighbor,
            old,
            new,
            discarded,
        },
    ))
}

/// Two sweeps over the default rooting: leaves-to-root on each edge toward
/// the parent, then root-to-leaves on each edge toward each child.
pub fn reduce_to_minimal(net: &TreeNetwork, tol_rel: f64, budget: usize) -> Result<(TreeNetwork, ReductionTrace)> {
    let view = net.topology().default_rooted();
    let mut current = net.clone();
    let mut steps = Vec::new();

    for &v in view.traversal() {
        if let Some(p) = view.parent(v) {
            let (next, step) = local_tucker_refactor(&current, v, p, tol_rel)?;
            current = next;
            steps.push(step);
        }
    }
    for &v in view.traversal().iter().rev() {
        for &c in view.children(v) {
            let (next, step) = local_tucker_refactor(&current, v, c, tol_rel)?;
            current = next;
            steps.push(step);
        }
    }

    let reconstruction_error = match (net.contract(budget), current.contract(budget)) {
        (Ok(before), Ok(after)) => Some(before.relative_distance(&after)?),
        _ => None,
    };
    let trace = ReductionTrace {
        steps,
        before: bond_map(net.topology()),
        after: bond_map(current.topology()),
        reconstruction_error,
    };
    Ok((current, trace))
}

/// Ranks of the global flattenings of `t` across each edge of `topology`,
/// clamped to at least one: the smallest bonds with which `t` can be written
/// on this tree.
pub fn minimal_bonds_oracle(t: &DenseTensor, topology: &TreeTopology, tol_rel: f64) -> Result<BTreeMap<Edge, usize>> {
    Ok(edge_cut_ranks(t, topology, tol_rel)?
        .into_iter()
        .map(|(e, info)| (e, info.rank.max(1)))
        .collect())
}
