//! Dense labelled tensors and the numeric kernel: flattenings, mode products,
//! pairwise contraction and SVD-based numerical rank.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Edge, VertexId};

pub type Matrix = DMatrix<f64>;

/// Relative tolerance used wherever none is given.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Identifies an axis either as the physical space of a vertex or as the
/// bond space of an edge. Both ends of an edge share one label; over the
/// reals with fixed bases the dual pairing is the plain dot product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisLabel {
    Physical(VertexId),
    Bond(Edge),
}

impl std::fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisLabel::Physical(v) => write!(f, "physical({v})"),
            AxisLabel::Bond(e) => write!(f, "bond{e}"),
        }
    }
}

/// Row-major dense tensor, last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    labels: Vec<AxisLabel>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, labels: Vec<AxisLabel>, data: Vec<f64>) -> Result<Self> {
        if dims.len() != labels.len() {
            return Err(Error::AxisMismatch(format!(
                "{} dims but {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if let Some(k) = dims.iter().position(|&d| d == 0) {
            return Err(Error::NonPositiveDimension(format!("axis {k}")));
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::AxisMismatch(format!("label {l} appears twice")));
            }
        }
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, labels, data })
    }

    /// Axes labelled `Physical(0)`, `Physical(1)`, … in order.
    pub fn from_shape(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let labels = (0..dims.len() as u32).map(|k| AxisLabel::Physical(VertexId(k))).collect();
        Self::new(dims, labels, data)
    }

    pub fn zeros(dims: Vec<usize>, labels: Vec<AxisLabel>) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, labels, vec![0.0; len])
    }

    /// Outer product of vectors, one axis per factor.
    pub fn outer(factors: &[(AxisLabel, Vec<f64>)]) -> Result<Self> {
        let mut data = vec![1.0];
        for (_, f) in factors {
            data = data.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
        }
        Self::new(
            factors.iter().map(|(_, f)| f.len()).collect(),
            factors.iter().map(|(l, _)| *l).collect(),
            data,
        )
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[AxisLabel] {
        &self.labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis_of(&self, label: AxisLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn axis_len(&self, label: AxisLabel) -> Option<usize> {
        self.axis_of(label).map(|k| self.dims[k])
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.dims.len());
        let flat = index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i);
        self.data[flat]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    pub fn relabeled(&self, labels: Vec<AxisLabel>) -> Result<Self> {
        Self::new(self.dims.clone(), labels, self.data.clone())
    }

    /// `‖self − other‖_F / ‖self‖_F`, after aligning `other`'s axes to ours.
    /// Falls back to the absolute distance when `self` is zero.
    pub fn relative_distance(&self, other: &DenseTensor) -> Result<f64> {
        let other = other.permuted(&self.labels)?;
        if other.dims != self.dims {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        let diff = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm = self.frobenius_norm();
        Ok(if norm > 0.0 { diff / norm } else { diff })
    }

    /// Reorders the axes so that the labels appear in `order`.
    pub fn permuted(&self, order: &[AxisLabel]) -> Result<Self> {
        if order.len() != self.order() {
            return Err(Error::AxisMismatch(format!(
                "permutation lists {} axes, tensor has {}",
                order.len(),
                self.order()
            )));
        }
        let perm = order
            .iter()
            .map(|&l| {
                self.axis_of(l)
                    .ok_or_else(|| Error::AxisMismatch(format!("tensor has no axis {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != perm.len() {
            return Err(Error::AxisMismatch("permutation repeats an axis".into()));
        }
        Ok(self.permute_axes(&perm))
    }

    /// Output axis `k` is input axis `perm[k]`.
    fn permute_axes(&self, perm: &[usize]) -> Self {
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let labels: Vec<AxisLabel> = perm.iter().map(|&p| self.labels[p]).collect();
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Self {
                dims,
                labels,
                data: self.data.clone(),
            };
        }
        let strides = row_major_strides(&self.dims);
        let src_strides: Vec<usize> = perm.iter().map(|&p| strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut index = vec![0usize; dims.len()];
        let mut offset = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[offset]);
            // odometer increment over the output index
            for ax in (0..dims.len()).rev() {
                index[ax] += 1;
                offset += src_strides[ax];
                if index[ax] < dims[ax] {
                    break;
                }
                offset -= src_strides[ax] * dims[ax];
                index[ax] = 0;
            }
        }
        Self { dims, labels, data }
    }
}

pub(crate) fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

/// A bipartition of a tensor's axes into row and column groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatteningSpec {
    pub row_axes: Vec<AxisLabel>,
    pub col_axes: Vec<AxisLabel>,
}

impl FlatteningSpec {
    pub fn new(row_axes: Vec<AxisLabel>, col_axes: Vec<AxisLabel>) -> Self {
        Self { row_axes, col_axes }
    }

    /// Rows are `rows` in the given order; columns are the remaining axes of
    /// `labels` in their original order.
    pub fn split(labels: &[AxisLabel], rows: &[AxisLabel]) -> Self {
        Self {
            row_axes: rows.to_vec(),
            col_axes: labels.iter().copied().filter(|l| !rows.contains(l)).collect(),
        }
    }

    pub fn transposed(&self) -> Self {
        Self {
            row_axes: self.col_axes.clone(),
            col_axes: self.row_axes.clone(),
        }
    }

    fn check_against(&self, labels: &[AxisLabel]) -> Result<()> {
        let all: Vec<_> = self.row_axes.iter().chain(&self.col_axes).collect();
        let complete = all.len() == labels.len() && labels.iter().all(|l| all.contains(&l));
        if !complete {
            return Err(Error::AxisMismatch(format!(
                "rows {:?} and columns {:?} do not partition {:?}",
                self.row_axes, self.col_axes, labels
            )));
        }
        Ok(())
    }
}

/// Matricizes `t`: row multi-indices run over `spec.row_axes`, column
/// multi-indices over `spec.col_axes`, both row-major in the listed order.
pub fn flatten(t: &DenseTensor, spec: &FlatteningSpec) -> Result<Matrix> {
    spec.check_against(&t.labels)?;
    let order: Vec<AxisLabel> = spec.row_axes.iter().chain(&spec.col_axes).copied().collect();
    let p = t.permuted(&order)?;
    let rows: usize = p.dims[..spec.row_axes.len()].iter().product();
    let cols: usize = p.dims[spec.row_axes.len()..].iter().product();
    Ok(Matrix::from_row_slice(rows, cols, &p.data))
}

/// Inverse of [`flatten`]. `axes` lists the output tensor's labels and
/// lengths in the desired axis order.
pub fn unflatten(m: &Matrix, spec: &FlatteningSpec, axes: &[(AxisLabel, usize)]) -> Result<DenseTensor> {
    let labels: Vec<AxisLabel> = axes.iter().map(|a| a.0).collect();
    spec.check_against(&labels)?;
    let len_of = |l: &AxisLabel| axes.iter().find(|a| a.0 == *l).map(|a| a.1).unwrap_or(0);
    let row_dims: Vec<usize> = spec.row_axes.iter().map(len_of).collect();
    let col_dims: Vec<usize> = spec.col_axes.iter().map(len_of).collect();
    let (rows, cols) = (row_dims.iter().product::<usize>(), col_dims.iter().product::<usize>());
    if m.shape() != (rows, cols) {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {}x{}, flattening expects {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    let data: Vec<f64> = m.transpose().as_slice().to_vec();
    let grouped = DenseTensor::new(
        row_dims.into_iter().chain(col_dims).collect(),
        spec.row_axes.iter().chain(&spec.col_axes).copied().collect(),
        data,
    )?;
    grouped.permuted(&labels)
}

/// Thin SVD `m = u · diag(s) · vt` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (k, mut col) in us.column_iter_mut().enumerate() {
            col *= self.s[k];
        }
        us * &self.vt
    }
}

fn check_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteEntries)
    }
}

fn to_faer(m: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD with singular values in descending order. Backed by faer: the
/// nalgebra routine returns wrong factors for some rank-deficient inputs.
pub fn thin_svd(m: &Matrix) -> Result<Svd> {
    check_finite(m)?;
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(Svd {
            u: Matrix::zeros(m.nrows(), 0),
            s: Vec::new(),
            vt: Matrix::zeros(0, m.ncols()),
        });
    }
    let svd = to_faer(m).thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    Ok(Svd {
        u: Matrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]),
        s: (0..k).map(|i| s[i]).collect(),
        vt: Matrix::from_fn(k, m.ncols(), |i, j| v[(j, i)]),
    })
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(m).singular_values().map_err(|_| Error::SvdNoConvergence)
}

/// Numerical rank together with the spectrum it was read from.
#[derive(Clone, Debug, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

impl RankInfo {
    pub fn from_singular_values(singular_values: Vec<f64>, tol_rel: f64) -> Self {
        Self {
            rank: rank_from_spectrum(&singular_values, tol_rel),
            singular_values,
        }
    }

    /// `σ_k / σ_1` (1-based `k`), or 0 when `σ_k` does not exist or `σ_1 = 0`.
    pub fn ratio(&self, k: usize) -> f64 {
        match (self.singular_values.first(), k.checked_sub(1).and_then(|i| self.singular_values.get(i))) {
            (Some(&s1), Some(&sk)) if s1 > 0.0 => sk / s1,
            _ => 0.0,
        }
    }

    /// `(σ_rank / σ_1, σ_{rank+1} / σ_1)`.
    pub fn tail(&self) -> (f64, f64) {
        (self.ratio(self.rank), self.ratio(self.rank + 1))
    }
}

/// `#{ i : σ_i > tol_rel · σ_1 }` for a descending spectrum.
pub fn rank_from_spectrum(singular_values: &[f64], tol_rel: f64) -> usize {
    match singular_values.first() {
        Some(&s1) if s1 > 0.0 => singular_values.iter().filter(|&&s| s > tol_rel * s1).count(),
        _ => 0,
    }
}

pub fn numerical_rank(m: &Matrix, tol_rel: f64) -> Result<RankInfo> {
    Ok(RankInfo::from_singular_values(singular_values(m)?, tol_rel))
}

/// Contracts `m` (`k × n`) with the axis `axis` (length `n`): the axis keeps
/// its label and takes length `k`.
pub fn mode_multiply(t: &DenseTensor, m: &Matrix, axis: AxisLabel) -> Result<DenseTensor> {
    let len = t
        .axis_len(axis)
        .ok_or_else(|| Error::AxisMismatch(format!("tensor has no axis {axis}")))?;
    if m.ncols() != len {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, axis {axis} has length {len}",
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::NonPositiveDimension("mode product with an empty matrix".into()));
    }
    let spec = FlatteningSpec::split(&t.labels, &[axis]);
    let product = m * flatten(t, &spec)?;
    let axes: Vec<(AxisLabel, usize)> = t
        .labels
        .iter()
        .zip(&t.dims)
        .map(|(&l, &d)| (l, if l == axis { m.nrows() } else { d }))
        .collect();
    unflatten(&product, &spec, &axes)
}

/// Ranks of every single-axis unfolding, in axis order.
pub fn multilinear_rank(t: &DenseTensor, tol_rel: f64) -> Result<Vec<usize>> {
    t.labels
        .iter()
        .map(|&l| {
            let spec = FlatteningSpec::split(&t.labels, &[l]);
            Ok(numerical_rank(&flatten(t, &spec)?, tol_rel)?.rank)
        })
        .collect()
}

/// Sums over every label shared by `a` and `b`. Output axes are `a`'s free
/// axes followed by `b`'s free axes, each in original order.
pub fn contract_pair(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let shared: Vec<AxisLabel> = a.labels.iter().copied().filter(|l| b.axis_of(*l).is_some()).collect();
    for &l in &shared {
        if a.axis_len(l) != b.axis_len(l) {
            return Err(Error::ShapeMismatch(format!(
                "axis {l} has length {:?} vs {:?}",
                a.axis_len(l),
                b.axis_len(l)
            )));
        }
    }
    let a_spec = FlatteningSpec::new(
        a.labels.iter().copied().filter(|l| !shared.contains(l)).collect(),
        shared.clone(),
    );
    let b_spec = FlatteningSpec::new(
        shared,
        b.labels.iter().copied().filter(|l| a.axis_of(*l).is_none()).collect(),
    );
    let product = flatten(a, &a_spec)? * flatten(b, &b_spec)?;
    let axes: Vec<(AxisLabel, usize)> = a_spec
        .row_axes
        .iter()
        .map(|&l| (l, a.axis_len(l).expect("own axis")))
        .chain(b_spec.col_axes.iter().map(|&l| (l, b.axis_len(l).expect("own axis"))))
        .collect();
    if axes.is_empty() {
        return DenseTensor::new(Vec::new(), Vec::new(), vec![product[(0, 0)]]);
    }
    let spec = FlatteningSpec::new(a_spec.row_axes, b_spec.col_axes);
    unflatten(&product, &spec, &axes)
}
