//! Matrix containers, the mixing-model taxonomy and extended source matrices.
//!
//! `Π_q(W)` holds the columns of `W` followed by their Hadamard products up to
//! order `q`. Column order is fixed: primaries in index order, then products
//! grouped by degree and, within a degree, in lexicographic order of the sorted
//! index multiset. For `q = 2` and the LQ model this gives
//! `[w₁, …, w_r, w₁⊙w₁, w₁⊙w₂, …, w₁⊙w_r, w₂⊙w₂, …, w_r⊙w_r]`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which product terms a mixture may contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingModel {
    /// No products: `r̃ = r`.
    Linear,
    /// Cross products `w_i ⊙ w_j` with `i < j`: `r̃ = r(r+1)/2`.
    Bilinear,
    /// Cross products and squares `w_i ⊙ w_j` with `i ≤ j`: `r̃ = r(r+3)/2`.
    #[serde(alias = "linear-quadratic")]
    Lq,
}

impl MixingModel {
    /// Number of columns of `Π₂(W)` for `r` primary sources.
    pub fn extended_rank(self, r: usize) -> usize {
        match self {
            MixingModel::Linear => r,
            MixingModel::Bilinear => r * (r + 1) / 2,
            MixingModel::Lq => r * (r + 3) / 2,
        }
    }

    pub fn includes_squares(self) -> bool {
        matches!(self, MixingModel::Lq)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MixingModel::Linear => "linear",
            MixingModel::Bilinear => "bilinear",
            MixingModel::Lq => "lq",
        }
    }
}

impl fmt::Display for MixingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MixingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(MixingModel::Linear),
            "bilinear" => Ok(MixingModel::Bilinear),
            "lq" | "linear-quadratic" => Ok(MixingModel::Lq),
            other => Err(Error::InvalidArgument(format!("unknown mixing model `{other}`"))),
        }
    }
}

/// Provenance of a column of an extended matrix. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnTag {
    Primary(usize),
    /// Sorted multiset of primary indices, of size 2 to 4.
    Product(Vec<usize>),
}

impl ColumnTag {
    /// Whether the column involves primary source `i` at all.
    pub fn involves(&self, i: usize) -> bool {
        match self {
            ColumnTag::Primary(j) => *j == i,
            ColumnTag::Product(set) => set.contains(&i),
        }
    }

    pub fn is_primary(&self) -> bool {
        matches!(self, ColumnTag::Primary(_))
    }
}

impl fmt::Display for ColumnTag {
    /// 1-based, e.g. `P2` or `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnTag::Primary(i) => write!(f, "P{}", i + 1),
            ColumnTag::Product(set) => {
                let parts: Vec<String> = set.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn check_nonempty(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Empty(format!("{what} has shape {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Nonnegative `m × n` data matrix, one sample per column.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_nonempty(&matrix, "data matrix")?;
        check_finite(&matrix, "data matrix")?;
        if let Some(v) = matrix.iter().find(|v| **v < 0.0) {
            return Err(Error::OutOfRange(format!("data entry {v} is negative")));
        }
        Ok(Self(matrix))
    }

    /// Submatrix formed by the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> DMatrix<f64> {
        self.0.select_columns(indices)
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl Deref for DataMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `m × r` matrix of primary sources with entries in `[0, 1]` and no
/// duplicated columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceMatrix(DMatrix<f64>);

impl SourceMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_nonempty(&matrix, "source matrix")?;
        check_finite(&matrix, "source matrix")?;
        if let Some(v) = matrix.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange(format!("source entry {v} outside [0, 1]")));
        }
        for j in 1..matrix.ncols() {
            for i in 0..j {
                if matrix.column(i) == matrix.column(j) {
                    return Err(Error::DuplicateColumn(j));
                }
            }
        }
        Ok(Self(matrix))
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl Deref for SourceMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `r̃ × n` mixing coefficients; every column lies in `Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix(DMatrix<f64>);

impl CoefficientMatrix {
    /// Slack allowed on the column sums.
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_finite(&matrix, "coefficient matrix")?;
        if let Some(v) = matrix.iter().find(|v| **v < 0.0) {
            return Err(Error::OutOfRange(format!("coefficient {v} is negative")));
        }
        for (j, col) in matrix.column_iter().enumerate() {
            let s = col.sum();
            if s > 1.0 + Self::SUM_TOLERANCE {
                return Err(Error::OutOfRange(format!("coefficient column {j} sums to {s} > 1")));
            }
        }
        Ok(Self(matrix))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl Deref for CoefficientMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `Π_q(W)` together with the provenance of each column.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedMatrix {
    matrix: DMatrix<f64>,
    tags: Vec<ColumnTag>,
    order: usize,
    model: MixingModel,
}

impl ExtendedMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn tags(&self) -> &[ColumnTag] {
        &self.tags
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn model(&self) -> MixingModel {
        self.model
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Columns whose tag satisfies `keep`.
    pub fn filter_columns(&self, keep: impl Fn(&ColumnTag) -> bool) -> DMatrix<f64> {
        let idx: Vec<usize> = self.tags.iter().enumerate().filter(|(_, t)| keep(t)).map(|(i, _)| i).collect();
        self.matrix.select_columns(&idx)
    }

    /// The dictionary with the listed primary columns removed; products that
    /// involve them are kept.
    pub fn without_primaries(&self, excluded: &[usize]) -> DMatrix<f64> {
        self.filter_columns(|t| !matches!(t, ColumnTag::Primary(j) if excluded.contains(j)))
    }
}

/// Index multisets of sizes `2..=order` over `0..r`, grouped by size and in
/// lexicographic order within a size. `with_repeats = false` keeps only sets of
/// distinct indices.
pub fn product_multisets(r: usize, order: usize, with_repeats: bool) -> Vec<Vec<usize>> {
    fn rec(r: usize, size: usize, start: usize, with_repeats: bool, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..r {
            cur.push(i);
            let next = if with_repeats { i } else { i + 1 };
            rec(r, size, next, with_repeats, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 2..=order {
        rec(r, size, 0, with_repeats, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// Elementwise product of the listed columns of `w`.
pub fn hadamard_column(w: &DMatrix<f64>, indices: &[usize]) -> DVector<f64> {
    let mut col = DVector::from_element(w.nrows(), 1.0);
    for &i in indices {
        col.component_mul_assign(&w.column(i));
    }
    col
}

/// Builds `Π_q(W)` for the given model. `order` must be 2 or 4; the linear
/// model returns `W` itself with primary tags whatever the order.
pub fn extend(w: &DMatrix<f64>, model: MixingModel, order: usize) -> Result<ExtendedMatrix> {
    if order != 2 && order != 4 {
        return Err(Error::InvalidArgument(format!("extension order must be 2 or 4, got {order}")));
    }
    let r = w.ncols();
    if r == 0 {
        return Err(Error::Empty("cannot extend a matrix with no columns".into()));
    }
    Ok(extend_unchecked(w, model, order))
}

/// Same as [`extend`] but accepts zero columns (yielding an empty dictionary).
pub(crate) fn extend_unchecked(w: &DMatrix<f64>, model: MixingModel, order: usize) -> ExtendedMatrix {
    let r = w.ncols();
    let m = w.nrows();
    let mut tags: Vec<ColumnTag> = (0..r).map(ColumnTag::Primary).collect();
    let products = match model {
        MixingModel::Linear => Vec::new(),
        MixingModel::Bilinear => product_multisets(r, order, false),
        MixingModel::Lq => product_multisets(r, order, true),
    };
    let mut matrix = DMatrix::zeros(m, r + products.len());
    matrix.columns_mut(0, r).copy_from(w);
    for (k, set) in products.into_iter().enumerate() {
        matrix.set_column(r + k, &hadamard_column(w, &set));
        tags.push(ColumnTag::Product(set));
    }
    ExtendedMatrix { matrix, tags, order, model }
}

/// `K(A)`: the largest column ℓ₂ norm.
pub fn max_col_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::Empty("max_col_norm of an empty matrix".into()));
    }
    Ok(a.column_iter().map(|c| c.norm()).fold(0.0, f64::max))
}
