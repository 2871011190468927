//! Log-domain matrix arithmetic.
//!
//! Entries are natural logarithms of nonnegative numbers. An exact zero in the
//! linear domain is stored as `f64::NEG_INFINITY` and is absorbing under
//! [`add`]: `NEG_INF + x = NEG_INF` for every `x`. `+∞` and `NaN` are never
//! valid entries.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};

pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// Below this, `exp` rounds to exactly zero, so the term can be skipped.
const EXP_UNDERFLOW: f64 = -746.0;

/// Log-domain product of two scalars with `NEG_INF` absorbing.
#[inline]
pub fn log_mul(a: f64, b: f64) -> f64 {
    if a == NEG_INF || b == NEG_INF {
        NEG_INF
    } else {
        a + b
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln Σ exp(v_i)`, pivoting on the largest element `a_0`:
/// `ln a_0 + ln(1 + Σ_{i≠0} exp(ln a_i − ln a_0))`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(lse_slice(values))
}

#[inline]
pub(crate) fn lse_slice(values: &[f64]) -> f64 {
    let mut pivot = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[pivot] {
            pivot = i;
        }
    }
    let top = values[pivot];
    if top == NEG_INF {
        return NEG_INF;
    }
    let mut acc = CompensatedSum::default();
    for (i, &v) in values.iter().enumerate() {
        let d = v - top;
        if i != pivot && d > EXP_UNDERFLOW {
            acc.add(d.exp());
        }
    }
    top + acc.value().ln_1p()
}

/// A matrix held as natural logarithms of its (nonnegative) entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMatrix(Array2<f64>);

impl LogMatrix {
    /// Wraps log values, rejecting `+∞` and `NaN`.
    pub fn from_log(values: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), &value)) = values
            .indexed_iter()
            .find(|(_, v)| v.is_nan() || **v == f64::INFINITY)
        {
            return Err(Error::InvalidLogEntry { row, col, value });
        }
        Ok(LogMatrix(values))
    }

    /// Log of a nonnegative finite matrix; zeros become `NEG_INF`.
    pub fn from_linear(values: ArrayView2<f64>) -> Result<Self> {
        if let Some(((row, col), &value)) = values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidLogEntry { row, col, value });
        }
        Ok(LogMatrix(values.mapv(f64::ln)))
    }

    /// Log of the all-ones matrix.
    pub fn zeros(shape: (usize, usize)) -> Self {
        LogMatrix(Array2::zeros(shape))
    }

    /// Log of the all-zeros matrix.
    pub fn neg_inf(shape: (usize, usize)) -> Self {
        LogMatrix(Array2::from_elem(shape, NEG_INF))
    }

    pub fn to_linear(&self) -> Array2<f64> {
        self.0.mapv(f64::exp)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub(crate) fn as_array_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

/// Per-row `log_sum_exp`.
pub fn log_row_sums(m: &LogMatrix) -> Array1<f64> {
    row_lse(m.as_array().view())
}

/// Per-column `log_sum_exp`.
pub fn log_col_sums(m: &LogMatrix) -> Array1<f64> {
    col_lse(m.as_array().view())
}

pub(crate) fn row_lse(m: ArrayView2<f64>) -> Array1<f64> {
    m.axis_iter(Axis(0))
        .map(|row| match row.as_slice() {
            Some(s) => lse_slice(s),
            None => lse_slice(&row.to_vec()),
        })
        .collect()
}

pub(crate) fn col_lse(m: ArrayView2<f64>) -> Array1<f64> {
    let cols = m.ncols();
    let mut pivot = vec![0usize; cols];
    let mut top = vec![NEG_INF; cols];
    for (i, row) in m.rows().into_iter().enumerate() {
        for ((&v, t), p) in row.iter().zip(top.iter_mut()).zip(pivot.iter_mut()) {
            if v > *t {
                *t = v;
                *p = i;
            }
        }
    }
    let mut acc = vec![CompensatedSum::default(); cols];
    for (i, row) in m.rows().into_iter().enumerate() {
        for (((&v, &t), &p), a) in row.iter().zip(&top).zip(&pivot).zip(acc.iter_mut()) {
            let d = v - t;
            if i != p && d > EXP_UNDERFLOW {
                a.add(d.exp());
            }
        }
    }
    top.iter()
        .zip(&acc)
        .map(|(&t, a)| if t == NEG_INF { NEG_INF } else { t + a.value().ln_1p() })
        .collect()
}

/// Entrywise log-domain product.
pub fn add(a: &LogMatrix, b: &LogMatrix) -> Result<LogMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(a.dim(), b.dim()));
    }
    let out = match (a.0.as_slice(), b.0.as_slice()) {
        (Some(x), Some(y)) => {
            let v = x.iter().zip(y).map(|(&x, &y)| log_mul(x, y)).collect();
            Array2::from_shape_vec(a.dim(), v).expect("same shape")
        }
        _ => Zip::from(&a.0).and(&b.0).map_collect(|&x, &y| log_mul(x, y)),
    };
    Ok(LogMatrix(out))
}

/// Adds `v[j]` to every entry of column `j` (scales columns in the linear domain).
pub fn broadcast_add_row(m: &LogMatrix, v: &[f64]) -> Result<LogMatrix> {
    if v.len() != m.ncols() {
        return Err(Error::LengthMismatch(v.len(), m.ncols()));
    }
    let mut out = m.0.clone();
    for mut row in out.rows_mut() {
        for (x, &s) in row.iter_mut().zip(v) {
            *x = log_mul(*x, s);
        }
    }
    LogMatrix::from_log(out)
}

/// Adds `v[i]` to every entry of row `i` (scales rows in the linear domain).
pub fn broadcast_add_col(m: &LogMatrix, v: &[f64]) -> Result<LogMatrix> {
    if v.len() != m.nrows() {
        return Err(Error::LengthMismatch(v.len(), m.nrows()));
    }
    let mut out = m.0.clone();
    for (mut row, &s) in out.rows_mut().into_iter().zip(v) {
        row.mapv_inplace(|x| log_mul(x, s));
    }
    LogMatrix::from_log(out)
}

/// Entrywise minimum.
pub fn elementwise_min(a: &LogMatrix, b: &LogMatrix) -> Result<LogMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(a.dim(), b.dim()));
    }
    Ok(LogMatrix(
        Zip::from(&a.0).and(&b.0).map_collect(|&x, &y| x.min(y)),
    ))
}
