//! States, effects and the probability pairing `(A, X) = Tr[A X]`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{canonical_phase, hermitian_eig, ComplexMatrix};
use crate::random;
use crate::tolerance::ToleranceConfig;

/// Density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

/// Effect (observable in the restricted sense): Hermitian with `0 <= A <= I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    matrix: ComplexMatrix,
}

fn check_square_hermitian(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let residual = m.hermitian_deviation();
    if residual > tol.herm {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

fn normalized(ket: &ComplexMatrix) -> Result<ComplexMatrix> {
    if ket.cols() != 1 {
        return Err(Error::Layout(format!("expected a column vector, got {}x{}", ket.rows(), ket.cols())));
    }
    let n = ket.frobenius_norm();
    if n == 0.0 {
        return Err(Error::InvalidState("zero vector".into()));
    }
    Ok(ket.scale_real(1.0 / n))
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        check_square_hermitian(&matrix, tol).map_err(|e| Error::InvalidState(e.to_string()))?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let eig = hermitian_eig(&matrix, tol)?;
        let smallest = *eig.values.last().expect("non-empty");
        if smallest < -tol.psd {
            return Err(Error::InvalidState(format!("negative eigenvalue {smallest:e}")));
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Skips validation. For operators that are states by construction, or
    /// deliberately invalid inputs in negative controls.
    pub fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// `|v><v|` for the normalisation of `ket`.
    pub fn pure(ket: &ComplexMatrix) -> Result<Self> {
        let v = normalized(ket)?;
        Ok(Self {
            matrix: ComplexMatrix::ket_bra(&v, &v),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let k = ComplexMatrix::basis_ket(dim, index);
        Self {
            matrix: ComplexMatrix::ket_bra(&k, &k),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Normalised Ginibre state.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            matrix: random::density_matrix(dim, rng),
        }
    }

    pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let v = random::unit_vector(dim, rng);
        Self {
            matrix: ComplexMatrix::ket_bra(&v, &v),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// The state vector of a rank-1 state, phase-fixed so that its
    /// largest-magnitude amplitude is real and positive.
    pub fn pure_vector(&self, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
        let eig = hermitian_eig(&self.matrix, tol)?;
        let second = eig.values.get(1).copied().unwrap_or(0.0);
        if second > tol.rank {
            return Err(Error::NotPure {
                second_eigenvalue: second,
            });
        }
        Ok(canonical_phase(&eig.column(0)))
    }
}

impl Effect {
    pub fn new(matrix: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        check_square_hermitian(&matrix, tol).map_err(|e| Error::InvalidEffect(e.to_string()))?;
        let eig = hermitian_eig(&matrix, tol)?;
        let (hi, lo) = (eig.values[0], *eig.values.last().expect("non-empty"));
        if lo < -tol.psd || hi > 1.0 + tol.psd {
            return Err(Error::InvalidEffect(format!("spectrum [{lo:e}, {hi:e}] outside [0, 1]")));
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// Rank-1 projector onto the normalisation of `ket`.
    pub fn projector(ket: &ComplexMatrix) -> Result<Self> {
        let v = normalized(ket).map_err(|e| Error::InvalidEffect(e.to_string()))?;
        Ok(Self {
            matrix: ComplexMatrix::ket_bra(&v, &v),
        })
    }

    pub fn basis_projector(dim: usize, index: usize) -> Self {
        let k = ComplexMatrix::basis_ket(dim, index);
        Self {
            matrix: ComplexMatrix::ket_bra(&k, &k),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    /// Random Hermitian with spectrum rescaled into a random sub-interval of `[0, 1]`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            matrix: random::effect_matrix(dim, rng),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `t * self + (1 - t) * other`; stays in `[0, I]` for `t` in `[0, 1]`.
    pub fn convex(&self, t: f64, other: &Effect) -> Effect {
        Effect {
            matrix: &self.matrix.scale_real(t) + &other.matrix.scale_real(1.0 - t),
        }
    }
}

/// Relative weights `|c1|^2`, `|c2|^2` of a two-component superposition,
/// plus the phase of `c1* c2` used when building coherent states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub c1_sq: f64,
    pub c2_sq: f64,
    pub relative_phase: f64,
}

impl Weights {
    pub fn new(c1_sq: f64, c2_sq: f64, tol: &ToleranceConfig) -> Result<Self> {
        for (name, v) in [("c1_sq", c1_sq), ("c2_sq", c2_sq)] {
            if !(v >= -tol.trace && v <= 1.0 + tol.trace) {
                return Err(Error::InvalidWeights(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if (c1_sq + c2_sq - 1.0).abs() > tol.trace {
            return Err(Error::InvalidWeights(format!("{c1_sq} + {c2_sq} != 1")));
        }
        Ok(Self {
            c1_sq: c1_sq.clamp(0.0, 1.0),
            c2_sq: c2_sq.clamp(0.0, 1.0),
            relative_phase: 0.0,
        })
    }

    pub fn with_phase(self, relative_phase: f64) -> Self {
        Self { relative_phase, ..self }
    }

    pub fn c1(&self) -> Complex64 {
        Complex64::new(self.c1_sq.sqrt(), 0.0)
    }

    pub fn c2(&self) -> Complex64 {
        Complex64::from_polar(self.c2_sq.sqrt(), self.relative_phase)
    }
}

fn check_dims(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            op,
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

/// `Tr[A X]`, real part.
pub fn probability(a: &Effect, x: &DensityOperator) -> Result<f64> {
    check_dims("probability", a.dim(), x.dim())?;
    Ok(trace_product(a.matrix(), x.matrix()))
}

/// `Re Tr[a b]` without forming the product.
pub(crate) fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.cols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// `I - A`.
pub fn complement(a: &Effect) -> Effect {
    Effect {
        matrix: &ComplexMatrix::identity(a.dim()) - a.matrix(),
    }
}

/// `|c1|^2 x1 + |c2|^2 x2`.
pub fn mix(w: &Weights, x1: &DensityOperator, x2: &DensityOperator) -> Result<DensityOperator> {
    check_dims("mix", x1.dim(), x2.dim())?;
    Ok(DensityOperator {
        matrix: &x1.matrix.scale_real(w.c1_sq) + &x2.matrix.scale_real(w.c2_sq),
    })
}

/// `Tr[x1 x2]`; zero exactly when the ranges are orthogonal.
pub fn overlap(x1: &DensityOperator, x2: &DensityOperator) -> Result<f64> {
    check_dims("overlap", x1.dim(), x2.dim())?;
    Ok(trace_product(x1.matrix(), x2.matrix()))
}

pub fn are_orthogonal(x1: &DensityOperator, x2: &DensityOperator, tol: &ToleranceConfig) -> Result<bool> {
    Ok(overlap(x1, x2)? <= tol.orth)
}

/// Projector onto the eigenspaces of a PSD matrix with eigenvalue above `tol.rank`.
pub fn support_projector_of(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m, tol)?;
    Ok(eig.map_spectrum(|l| if l > tol.rank { 1.0 } else { 0.0 }))
}

/// Support projector of `x`; discriminates `x` from every state orthogonal to it.
pub fn support_projector(x: &DensityOperator, tol: &ToleranceConfig) -> Result<Effect> {
    Ok(Effect {
        matrix: support_projector_of(x.matrix(), tol)?,
    })
}
