//! Dense complex matrices and the handful of operations the rest of the crate
//! is written against.
//!
//! Entries are stored row-major. Tensor products put the left operand's
//! indices outermost, so for a [`DimensionLayout`] `[d0, d1, ..]` the flat
//! index of `|i0, i1, ..>` is `i0 * (d1 * d2 * ..) + i1 * (d2 * ..) + ..`.
//! The object factor always comes first.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::ToleranceConfig;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix; also used for column vectors (`cols == 1`).
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Layout(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "ComplexMatrix::new",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diag(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let values: Vec<_> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::diag(&values)
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Column vector.
    pub fn ket(amplitudes: &[Complex64]) -> Self {
        Self {
            rows: amplitudes.len(),
            cols: 1,
            data: amplitudes.to_vec(),
        }
    }

    /// Computational basis vector `|index>` in dimension `dim`.
    pub fn basis_ket(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut k = Self::zeros(dim, 1);
        k.data[index] = ONE;
        k
    }

    /// `|a><b|` for column vectors `a`, `b`.
    pub fn ket_bra(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        assert!(a.cols == 1 && b.cols == 1, "ket_bra expects column vectors");
        let mut m = Self::zeros(a.rows, b.rows);
        for i in 0..a.rows {
            for j in 0..b.rows {
                m[(i, j)] = a.data[i] * b.data[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row count; the dimension of a square matrix.
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.cols).map(<[_]>::to_vec).collect()
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Largest entrywise |m - m^dagger|; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dagger();
        let mut out = self + &d;
        out.data.iter_mut().for_each(|z| *z *= 0.5);
        out
    }

    /// `||m m^dagger - I||_F`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self * &self.dagger();
        (&prod - &Self::identity(self.rows)).frobenius_norm()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    fn zip_with(&self, other: &ComplexMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "elementwise operation on mismatched shapes"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on inner-dimension mismatch; see [`mat_mul`] for the checked form.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, a) in row.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

pub fn mat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "mat_mul",
            expected: a.cols,
            actual: b.rows,
        });
    }
    Ok(a * b)
}

pub fn trace(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    Ok(m.trace())
}

pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::DimensionMismatch {
            op: "frobenius_distance",
            expected: a.rows * a.cols,
            actual: b.rows * b.cols,
        });
    }
    Ok((a - b).frobenius_norm())
}

/// Kronecker product, `a`'s indices outermost.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Tensor product of a non-empty sequence, leftmost factor outermost.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    let mut it = factors.into_iter();
    let first = it.next().expect("tensor_all of an empty sequence").clone();
    it.fold(first, |acc, m| tensor(&acc, m))
}

/// Dimensions of the tensor factors of a composite space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimensionLayout {
    factor_dims: Vec<usize>,
}

impl DimensionLayout {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::Layout("layout has no factors".into()));
        }
        if factor_dims.contains(&0) {
            return Err(Error::Layout(format!("zero-dimensional factor in {factor_dims:?}")));
        }
        Ok(Self { factor_dims })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    /// Product of the dimensions of `factors`.
    pub fn sub_dim(&self, factors: &[usize]) -> usize {
        factors.iter().map(|&f| self.factor_dims[f]).product()
    }

    /// Appends factors on the right.
    pub fn extended(&self, extra: &[usize]) -> Result<Self> {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(extra);
        Self::new(dims)
    }

    fn check_operator(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        if m.rows != self.total_dim() {
            return Err(Error::Layout(format!(
                "operator dimension {} does not match layout {:?} (product {})",
                m.rows,
                self.factor_dims,
                self.total_dim()
            )));
        }
        Ok(())
    }

    fn check_factors(&self, factors: &[usize]) -> Result<()> {
        for (i, &f) in factors.iter().enumerate() {
            if f >= self.factor_dims.len() {
                return Err(Error::Layout(format!(
                    "factor index {f} out of range for {} factors",
                    self.factor_dims.len()
                )));
            }
            if factors[..i].contains(&f) {
                return Err(Error::Layout(format!("factor index {f} repeated")));
            }
        }
        Ok(())
    }

    /// Splits a flat index into per-factor digits.
    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.factor_dims).rev() {
            *slot = index % d;
            index /= d;
        }
    }
}

/// Combines the digits of the listed factors into one index, first factor outermost.
fn sub_index(digits: &[usize], dims: &[usize], factors: &[usize]) -> usize {
    factors.iter().fold(0, |acc, &f| acc * dims[f] + digits[f])
}

/// Traces out every factor not in `keep`. The kept factors appear in
/// ascending factor order in the result.
pub fn partial_trace(m: &ComplexMatrix, layout: &DimensionLayout, keep: &[usize]) -> Result<ComplexMatrix> {
    layout.check_operator(m)?;
    layout.check_factors(keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..layout.num_factors()).filter(|f| !keep.contains(f)).collect();

    let dims = layout.factor_dims();
    let total = layout.total_dim();
    let kept_dim = layout.sub_dim(&keep);
    let mut digits = vec![0; dims.len()];
    let split: Vec<(usize, usize)> = (0..total)
        .map(|i| {
            layout.digits(i, &mut digits);
            (sub_index(&digits, dims, &keep), sub_index(&digits, dims, &traced))
        })
        .collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for (r, &(rk, rt)) in split.iter().enumerate() {
        for (c, &(ck, ct)) in split.iter().enumerate() {
            if rt == ct {
                out[(rk, ck)] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Builds the operator on the full space that acts as `ops[k].0` on the
/// factors `ops[k].1` (in the listed order) and as the identity elsewhere.
/// The factor lists must be disjoint.
pub fn embed(ops: &[(&ComplexMatrix, &[usize])], layout: &DimensionLayout) -> Result<ComplexMatrix> {
    let all: Vec<usize> = ops.iter().flat_map(|(_, f)| f.iter().copied()).collect();
    layout.check_factors(&all)?;
    for (op, factors) in ops {
        let want = layout.sub_dim(factors);
        if !op.is_square() || op.rows != want {
            return Err(Error::DimensionMismatch {
                op: "embed",
                expected: want,
                actual: op.rows,
            });
        }
    }
    let rest: Vec<usize> = (0..layout.num_factors()).filter(|f| !all.contains(f)).collect();
    let dims = layout.factor_dims();
    let total = layout.total_dim();
    let mut digits = vec![0; dims.len()];
    let split: Vec<(Vec<usize>, usize)> = (0..total)
        .map(|i| {
            layout.digits(i, &mut digits);
            let locals = ops.iter().map(|(_, f)| sub_index(&digits, dims, f)).collect();
            (locals, sub_index(&digits, dims, &rest))
        })
        .collect();

    let mut out = ComplexMatrix::zeros(total, total);
    for (r, (rl, rr)) in split.iter().enumerate() {
        for (c, (cl, cr)) in split.iter().enumerate() {
            if rr != cr {
                continue;
            }
            let mut v = ONE;
            for (k, (op, _)) in ops.iter().enumerate() {
                v *= op[(rl[k], cl[k])];
                if v == ZERO {
                    break;
                }
            }
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn column(&self, k: usize) -> ComplexMatrix {
        let n = self.vectors.rows;
        ComplexMatrix::ket(&(0..n).map(|i| self.vectors[(i, k)]).collect::<Vec<_>>())
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.rows;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| l)
    }
}

pub fn hermitian_eig(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let residual = m.hermitian_deviation();
    if residual > tol.herm {
        return Err(Error::NotHermitian { residual });
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..m.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(m.rows, m.rows);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..m.rows {
            vectors[(i, dst)] = eig.eigenvectors[(i, src)];
        }
    }
    Ok(HermitianEig { values, vectors })
}

/// Principal square root of a positive semidefinite matrix; negative
/// eigenvalues from rounding are clipped to zero.
pub fn psd_sqrt(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(m, tol)?.map_spectrum(|l| l.max(0.0).sqrt()))
}

/// Rotates a vector's global phase so its largest-magnitude entry is real
/// and positive. Ties resolve to the lowest index.
pub fn canonical_phase(v: &ComplexMatrix) -> ComplexMatrix {
    let mut best = 0;
    for (i, z) in v.data.iter().enumerate() {
        if z.norm() > v.data[best].norm() + 1e-12 {
            best = i;
        }
    }
    let pivot = v.data[best];
    if pivot.norm() == 0.0 {
        return v.clone();
    }
    v.scale(pivot.conj() / pivot.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(
            tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)),
            ComplexMatrix::identity(4)
        );
        let k = tensor(&ComplexMatrix::basis_ket(2, 0), &ComplexMatrix::basis_ket(2, 0));
        assert_eq!(k, ComplexMatrix::basis_ket(4, 0));
        let d = tensor(
            &ComplexMatrix::real_diag(&[1.0, 2.0]),
            &ComplexMatrix::real_diag(&[3.0, 4.0]),
        );
        assert_eq!(d, ComplexMatrix::real_diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn tensor_of_non_square() {
        let row = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0]]);
        let t = tensor(&row, &ComplexMatrix::basis_ket(2, 1));
        assert_eq!((t.rows(), t.cols()), (2, 2));
        assert_eq!(t[(1, 0)], c(1.0, 0.0));
        assert_eq!(t[(1, 1)], c(2.0, 0.0));
        assert_eq!(t[(0, 0)], ZERO);
    }

    #[test]
    fn partial_trace_examples() {
        let layout = DimensionLayout::new(vec![2, 2]).unwrap();
        let k00 = ComplexMatrix::basis_ket(4, 0);
        let rho = ComplexMatrix::ket_bra(&k00, &k00);
        let k0 = ComplexMatrix::basis_ket(2, 0);
        assert_eq!(partial_trace(&rho, &layout, &[0]).unwrap(), ComplexMatrix::ket_bra(&k0, &k0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexMatrix::ket(&[c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let bell = ComplexMatrix::ket_bra(&phi, &phi);
        let reduced = partial_trace(&bell, &layout, &[1]).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::real_diag(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_keeps_scaled_factor() {
        let x = ComplexMatrix::from_rows(&[vec![c(0.3, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.7, 0.0)]]);
        let y = ComplexMatrix::real_diag(&[1.0, 2.0, 3.0]);
        let layout = DimensionLayout::new(vec![2, 3]).unwrap();
        let r = partial_trace(&tensor(&x, &y), &layout, &[0]).unwrap();
        assert!(r.max_abs_diff(&x.scale_real(6.0)) < 1e-14);
        let r = partial_trace(&tensor(&x, &y), &layout, &[1]).unwrap();
        assert!(r.max_abs_diff(&y) < 1e-14);
    }

    #[test]
    fn partial_trace_rejects_bad_layout() {
        let layout = DimensionLayout::new(vec![2, 3]).unwrap();
        assert!(matches!(
            partial_trace(&ComplexMatrix::identity(4), &layout, &[0]),
            Err(Error::Layout(_))
        ));
        let layout = DimensionLayout::new(vec![2, 2]).unwrap();
        assert!(partial_trace(&ComplexMatrix::identity(4), &layout, &[2]).is_err());
        assert!(DimensionLayout::new(vec![]).is_err());
        assert!(DimensionLayout::new(vec![2, 0]).is_err());
    }

    #[test]
    fn embed_matches_tensor_with_identity() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 2.0)], vec![c(3.0, 0.0), c(4.0, -1.0)]]);
        let b = ComplexMatrix::real_diag(&[5.0, 6.0, 7.0]);
        let layout = DimensionLayout::new(vec![2, 2, 3]).unwrap();
        let full = embed(&[(&a, &[0]), (&b, &[2])], &layout).unwrap();
        let expected = tensor_all([&a, &ComplexMatrix::identity(2), &b]);
        assert!(full.max_abs_diff(&expected) < 1e-15);

        // a joint operator on non-adjacent factors
        let ab = tensor(&a, &b);
        let via_pair = embed(&[(&ab, &[0, 2])], &layout).unwrap();
        assert!(via_pair.max_abs_diff(&expected) < 1e-15);

        let empty = embed(&[], &layout).unwrap();
        assert_eq!(empty, ComplexMatrix::identity(12));
        assert!(embed(&[(&a, &[0]), (&a, &[0])], &layout).is_err());
        assert!(embed(&[(&b, &[0])], &layout).is_err());
    }

    #[test]
    fn eig_examples() {
        let tol = ToleranceConfig::default();
        let e = hermitian_eig(&ComplexMatrix::identity(2), &tol).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let e = hermitian_eig(&ComplexMatrix::real_diag(&[1.0, 3.0]), &tol).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);

        let e = hermitian_eig(&sigma_x(), &tol).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = canonical_phase(&e.column(0));
        assert!(plus.max_abs_diff(&ComplexMatrix::ket(&[c(s, 0.0), c(s, 0.0)])) < 1e-12);
        let minus = e.column(1);
        // (|0> - |1>)/sqrt2 up to global phase
        let overlap = (minus[(0, 0)].conj() * c(s, 0.0) - minus[(1, 0)].conj() * c(s, 0.0)).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(
            hermitian_eig(&m, &ToleranceConfig::default()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn plumbing_examples() {
        assert_eq!(trace(&ComplexMatrix::identity(3)).unwrap(), c(3.0, 0.0));
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(3.0, -1.0)], vec![c(0.5, 0.0), c(0.0, 1.0)]]);
        assert_eq!(dagger(&dagger(&m)), m);
        assert_eq!(frobenius_distance(&m, &m).unwrap(), 0.0);
        assert!(mat_mul(&m, &ComplexMatrix::identity(3)).is_err());
        assert!(frobenius_distance(&m, &ComplexMatrix::identity(3)).is_err());
        assert!(trace(&ComplexMatrix::basis_ket(2, 0)).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let tol = ToleranceConfig::default();
        let m = ComplexMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.2, 0.1)], vec![c(0.2, -0.1), c(0.5, 0.0)]]);
        let r = psd_sqrt(&m, &tol).unwrap();
        assert!((&r * &r).max_abs_diff(&m) < 1e-13);
    }
}
