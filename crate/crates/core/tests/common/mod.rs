//! Shared test helpers and independent oracles. Nothing here goes through
//! the library's flatten/contract path.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ttn_core::network::local_axes;
use ttn_core::{AxisLabel, DenseTensor, Edge, Matrix, TreeNetwork, TreeTopology, VertexId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn v(id: u32) -> VertexId {
    VertexId(id)
}

/// Random labelled tree on vertices `1..=n`: vertex `k` hangs off a uniformly
/// chosen earlier vertex.
pub fn random_tree(rng: &mut impl Rng, n: usize, phys: (usize, usize), bond: (usize, usize)) -> TreeTopology {
    let vertices: Vec<_> = (1..=n as u32).map(|k| (v(k), rng.random_range(phys.0..=phys.1))).collect();
    let edges: Vec<_> = (2..=n as u32)
        .map(|k| (v(rng.random_range(1..k)), v(k), rng.random_range(bond.0..=bond.1)))
        .collect();
    TreeTopology::new(&vertices, &edges).unwrap()
}

pub fn random_admissible_tree(rng: &mut impl Rng, n: usize, phys: (usize, usize), bond: (usize, usize)) -> TreeTopology {
    loop {
        let t = random_tree(rng, n, phys, bond);
        if t.is_admissible().admissible {
            return t;
        }
    }
}

/// Direct evaluation of the contraction map: for each physical multi-index,
/// sum over every joint assignment of bond indices of the product of local
/// entries.
pub fn brute_force_contract(net: &TreeNetwork) -> DenseTensor {
    let topo = net.topology();
    let vertices: Vec<VertexId> = topo.vertices().collect();
    let edges: Vec<Edge> = topo.edges().collect();
    let phys: Vec<usize> = vertices.iter().map(|&x| topo.phys_dim(x).unwrap()).collect();
    let bonds: Vec<usize> = edges.iter().map(|&e| topo.bond(e).unwrap()).collect();

    let total: usize = phys.iter().product();
    let mut data = Vec::with_capacity(total);
    for_each_index(&phys, |pi| {
        let mut sum = 0.0;
        for_each_index(&bonds, |bi| {
            let mut prod = 1.0;
            for (k, &vx) in vertices.iter().enumerate() {
                let t = net.tensor(vx).unwrap();
                let idx: Vec<usize> = t
                    .labels()
                    .iter()
                    .map(|l| match l {
                        AxisLabel::Physical(_) => pi[k],
                        AxisLabel::Bond(e) => bi[edges.iter().position(|x| x == e).unwrap()],
                    })
                    .collect();
                prod *= t.get(&idx);
            }
            sum += prod;
        });
        data.push(sum);
    });
    DenseTensor::new(phys, vertices.into_iter().map(AxisLabel::Physical).collect(), data).unwrap()
}

/// Calls `f` with every multi-index of `dims`, row-major.
pub fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        let mut ax = dims.len();
        loop {
            if ax == 0 {
                return;
            }
            ax -= 1;
            idx[ax] += 1;
            if idx[ax] < dims[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
}

/// Matrix whose rows run over the axes `rows` (row-major in that order) and
/// columns over the remaining axes in tensor order, by explicit indexing.
pub fn loop_unfold(t: &DenseTensor, rows: &[AxisLabel]) -> Matrix {
    let row_ax: Vec<usize> = rows.iter().map(|l| t.axis_of(*l).unwrap()).collect();
    let col_ax: Vec<usize> = (0..t.order()).filter(|k| !row_ax.contains(k)).collect();
    let rd: Vec<usize> = row_ax.iter().map(|&k| t.dims()[k]).collect();
    let cd: Vec<usize> = col_ax.iter().map(|&k| t.dims()[k]).collect();
    let nr: usize = rd.iter().product();
    let nc: usize = cd.iter().product();
    let mut m = Matrix::zeros(nr, nc);
    let mut r = 0;
    for_each_index(&rd, |ri| {
        let mut c = 0;
        for_each_index(&cd, |ci| {
            let mut full = vec![0; t.order()];
            for (k, &ax) in row_ax.iter().enumerate() {
                full[ax] = ri[k];
            }
            for (k, &ax) in col_ax.iter().enumerate() {
                full[ax] = ci[k];
            }
            m[(r, c)] = t.get(&full);
            c += 1;
        });
        r += 1;
    });
    m
}

/// Relative Frobenius distance after aligning axis order.
pub fn rel_err(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.relative_distance(b).unwrap()
}

/// Carlini–Kleppe: a Tucker star (trivial center) admits tensors of exact
/// multilinear rank `bonds` iff each bond is at most the product of the
/// others and at most its leaf dimension.
pub fn carlini_kleppe(leaf_dims: &[usize], bonds: &[usize]) -> bool {
    (0..bonds.len()).all(|i| {
        let others: u128 = bonds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &r)| r as u128)
            .product();
        bonds[i] as u128 <= others && bonds[i] <= leaf_dims[i]
    })
}

/// Raises the bond on `edge` from `r` to `r + extra` without changing the
/// represented tensor: the low end is multiplied by a generic `P` and the
/// high end by `P (PᵀP)⁻¹`, so that the inserted factor has rank `r`.
pub fn inflate_edge(net: &TreeNetwork, edge: Edge, extra: usize, rng: &mut impl Rng) -> TreeNetwork {
    let r = net.topology().bond(edge).unwrap();
    let p = gaussian_matrix(rng, r + extra, r);
    let gram = p.transpose() * &p;
    let q = &p * gram.try_inverse().unwrap();
    net.transform_edge(edge, &p, &q).unwrap()
}

/// Projects the bond on `edge` at its low end onto a random rank-`keep`
/// subspace, keeping the bond dimension.
pub fn project_edge(net: &TreeNetwork, edge: Edge, keep: usize, rng: &mut impl Rng) -> TreeNetwork {
    let r = net.topology().bond(edge).unwrap();
    let a = gaussian_matrix(rng, r, keep);
    let b = gaussian_matrix(rng, keep, r);
    net.transform_edge(edge, &(a * b), &Matrix::identity(r, r)).unwrap()
}

/// Network on `topology` whose local tensors come from `fill`.
pub fn network_from(topology: &TreeTopology, mut fill: impl FnMut(VertexId, &[(AxisLabel, usize)]) -> Vec<f64>) -> TreeNetwork {
    let tensors: BTreeMap<_, _> = topology
        .vertices()
        .map(|x| {
            let axes = local_axes(topology, x).unwrap();
            let data = fill(x, &axes);
            let t = DenseTensor::new(axes.iter().map(|a| a.1).collect(), axes.iter().map(|a| a.0).collect(), data).unwrap();
            (x, t)
        })
        .collect();
    TreeNetwork::new(topology.clone(), tensors).unwrap()
}

/// Matrix `m` as a tensor with the given row and column labels.
pub fn matrix_tensor(m: &Matrix, row: AxisLabel, col: AxisLabel) -> DenseTensor {
    DenseTensor::new(vec![m.nrows(), m.ncols()], vec![row, col], m.transpose().as_slice().to_vec()).unwrap()
}

/// Canonical small tree shapes on up to five vertices (one per isomorphism
/// class), as edge lists over `1..=n`.
pub fn tree_shapes() -> Vec<(usize, Vec<(u32, u32)>)> {
    vec![
        (1, vec![]),
        (2, vec![(1, 2)]),
        (3, vec![(1, 2), (2, 3)]),
        (4, vec![(1, 2), (2, 3), (3, 4)]),
        (4, vec![(1, 2), (1, 3), (1, 4)]),
        (5, vec![(1, 2), (2, 3), (3, 4), (4, 5)]),
        (5, vec![(1, 2), (1, 3), (1, 4), (1, 5)]),
        (5, vec![(1, 2), (2, 3), (3, 4), (3, 5)]),
    ]
}

pub fn topology_of(phys: &[usize], edges: &[(u32, u32)], bonds: &[usize]) -> TreeTopology {
    let vertices: Vec<_> = phys.iter().enumerate().map(|(k, &d)| (v(k as u32 + 1), d)).collect();
    let edges: Vec<_> = edges.iter().zip(bonds).map(|(&(a, b), &r)| (v(a), v(b), r)).collect();
    TreeTopology::new(&vertices, &edges).unwrap()
}
