//! Superpositions of two orthogonal states defined through probabilities,
//! the projector test for membership, coherent superpositions, and
//! interference sensitivity.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::quantum::{
    are_orthogonal, mix, overlap, probability, support_projector, support_projector_of, DensityOperator, Effect,
    Weights,
};
use crate::random::{self, substream};
use crate::tolerance::ToleranceConfig;

/// `n` equally spaced phases in `[0, 2 pi)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

pub const DEFAULT_PHASES: usize = 8;

/// Two orthogonal states and the weights of a superposition between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionFamily {
    x1: DensityOperator,
    x2: DensityOperator,
    w: Weights,
}

impl SuperpositionFamily {
    pub fn new(x1: DensityOperator, x2: DensityOperator, w: Weights, tol: &ToleranceConfig) -> Result<Self> {
        let ov = overlap(&x1, &x2)?;
        if !are_orthogonal(&x1, &x2, tol)? {
            return Err(Error::NotOrthogonal { overlap: ov });
        }
        Ok(Self { x1, x2, w })
    }

    pub fn x1(&self) -> &DensityOperator {
        &self.x1
    }

    pub fn x2(&self) -> &DensityOperator {
        &self.x2
    }

    pub fn weights(&self) -> &Weights {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.x1.dim()
    }

    pub fn with_weights(&self, w: Weights) -> Self {
        Self { w, ..self.clone() }
    }

    pub fn with_phase(&self, phase: f64) -> Self {
        self.with_weights(self.w.with_phase(phase))
    }

    /// The incoherent mixture `|c1|^2 x1 + |c2|^2 x2`.
    pub fn mixture(&self) -> DensityOperator {
        mix(&self.w, &self.x1, &self.x2).expect("dimensions checked at construction")
    }

    pub fn is_pure(&self, tol: &ToleranceConfig) -> bool {
        self.x1.pure_vector(tol).is_ok() && self.x2.pure_vector(tol).is_ok()
    }
}

/// Projectors `P1`, `P2 = I - P1` with `P_i X P_i = |c_i|^2 X_i`.
#[derive(Debug, Clone)]
pub struct SuperpositionWitness {
    pub p1: Effect,
    pub p2: Effect,
}

#[derive(Debug, Clone)]
pub struct MembershipCheck {
    pub is_member: bool,
    pub witness: Option<SuperpositionWitness>,
    /// `||P1 X P1 - |c1|^2 X1||_F`
    pub residual1: f64,
    /// `||P2 X P2 - |c2|^2 X2||_F`
    pub residual2: f64,
    /// `Tr[P1 X2]`: how much of `X2` lies outside `P2`.
    pub leakage: f64,
}

/// `c1 |phi1> + c2 |phi2>` as a density operator, with the phase of `c1* c2`
/// taken from the family's weights.
pub fn coherent(fam: &SuperpositionFamily, tol: &ToleranceConfig) -> Result<DensityOperator> {
    let v1 = fam.x1.pure_vector(tol)?;
    let v2 = fam.x2.pure_vector(tol)?;
    let phi = &v1.scale(fam.w.c1()) + &v2.scale(fam.w.c2());
    DensityOperator::pure(&phi)
}

/// Membership through the projector characterisation, with `P1` fixed to the
/// support projector of `X1`.
pub fn is_member(x: &DensityOperator, fam: &SuperpositionFamily, tol: &ToleranceConfig) -> Result<MembershipCheck> {
    if x.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            op: "is_member",
            expected: fam.dim(),
            actual: x.dim(),
        });
    }
    let p1 = support_projector(&fam.x1, tol)?;
    let p2 = crate::quantum::complement(&p1);
    let compress = |p: &Effect| &(p.matrix() * x.matrix()) * p.matrix();
    let residual1 = (&compress(&p1) - &fam.x1.matrix().scale_real(fam.w.c1_sq)).frobenius_norm();
    let residual2 = (&compress(&p2) - &fam.x2.matrix().scale_real(fam.w.c2_sq)).frobenius_norm();
    let leakage = probability(&p1, &fam.x2)?;
    let is_member = residual1 <= tol.member && residual2 <= tol.member && leakage <= tol.orth;
    Ok(MembershipCheck {
        is_member,
        witness: is_member.then_some(SuperpositionWitness { p1, p2 }),
        residual1,
        residual2,
        leakage,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub trials: usize,
    /// Max `|(A1, X) - |c2|^2 (A1, X2)|` over sampled `A1` with `(A1, X1) = 0`.
    pub max_residual_first: f64,
    /// Max `|(A2, X) - |c1|^2 (A2, X1)|` over sampled `A2` with `(A2, X2) = 0`.
    pub max_residual_second: f64,
    pub worst_trial: Option<usize>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.max_residual_first.max(self.max_residual_second)
    }
}

/// Random effect supported inside `q`: `q B q` for random effect `B`,
/// stretched so its largest eigenvalue is 1.
fn compressed_effect(q: &ComplexMatrix, rng: &mut random::StreamRng, tol: &ToleranceConfig) -> Result<Effect> {
    let b = Effect::random(q.dim(), rng);
    let m = (&(q * b.matrix()) * q).hermitian_part();
    let top = hermitian_eig(&m, tol)?.values[0];
    let m = if top > tol.rank { m.scale_real(1.0 / top) } else { m };
    Ok(Effect::new_unchecked(m))
}

/// Samples effects that vanish on one component and measures how far `x`
/// departs from the defining probability identities of the family.
pub fn check_defining_identities(
    x: &DensityOperator,
    fam: &SuperpositionFamily,
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<IdentityReport> {
    let id = ComplexMatrix::identity(fam.dim());
    let q1 = &id - &support_projector_of(fam.x1.matrix(), tol)?;
    let q2 = &id - &support_projector_of(fam.x2.matrix(), tol)?;
    let per_trial = exec::map_indexed(trials, |i| -> Result<(f64, f64)> {
        let mut rng = substream(seed, i as u64);
        let a1 = compressed_effect(&q1, &mut rng, tol)?;
        let r1 = (probability(&a1, x)? - fam.w.c2_sq * probability(&a1, &fam.x2)?).abs();
        let a2 = compressed_effect(&q2, &mut rng, tol)?;
        let r2 = (probability(&a2, x)? - fam.w.c1_sq * probability(&a2, &fam.x1)?).abs();
        Ok((r1, r2))
    });
    let mut report = IdentityReport {
        trials,
        max_residual_first: 0.0,
        max_residual_second: 0.0,
        worst_trial: None,
    };
    let mut worst = -1.0;
    for (i, r) in per_trial.into_iter().enumerate() {
        let (r1, r2) = r?;
        report.max_residual_first = report.max_residual_first.max(r1);
        report.max_residual_second = report.max_residual_second.max(r2);
        if r1.max(r2) > worst {
            worst = r1.max(r2);
            report.worst_trial = Some(i);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsensitivityCheck {
    pub insensitive: bool,
    /// Max over the phase grid of `|(A, coherent) - (A, mixture)|`; only for pure families.
    pub phase_deviation: Option<f64>,
    /// `||Pi1 A Pi2||_F` for the support projectors; `|<phi1|A|phi2>|` for pure families.
    pub off_diagonal: f64,
    /// Phase sweep and off-diagonal criterion give the same verdict.
    /// Always true when a weight vanishes, since then no phase dependence can show.
    pub criteria_agree: bool,
}

/// Whether `(A, X)` is independent of the relative phase inside the family.
pub fn is_insensitive(
    a: &Effect,
    fam: &SuperpositionFamily,
    phases: &[f64],
    tol: &ToleranceConfig,
) -> Result<InsensitivityCheck> {
    let pi1 = support_projector_of(fam.x1.matrix(), tol)?;
    let pi2 = support_projector_of(fam.x2.matrix(), tol)?;
    let off_diagonal = (&(&pi1 * a.matrix()) * &pi2).frobenius_norm();
    let algebraic = off_diagonal <= tol.orth;

    if !fam.is_pure(tol) {
        return Ok(InsensitivityCheck {
            insensitive: algebraic,
            phase_deviation: None,
            off_diagonal,
            criteria_agree: true,
        });
    }
    let reference = probability(a, &fam.mixture())?;
    let mut deviation = 0.0_f64;
    for &phase in phases {
        let x = coherent(&fam.with_phase(phase), tol)?;
        deviation = deviation.max((probability(a, &x)? - reference).abs());
    }
    let swept = deviation <= tol.prob;
    let degenerate = fam.w.c1_sq <= tol.trace || fam.w.c2_sq <= tol.trace;
    Ok(InsensitivityCheck {
        insensitive: swept,
        phase_deviation: Some(deviation),
        off_diagonal,
        criteria_agree: degenerate || swept == algebraic,
    })
}
