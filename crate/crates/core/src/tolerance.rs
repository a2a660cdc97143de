use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every check in the crate.
///
/// A single instance is threaded through explicitly; nothing reads a global.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Max entrywise |m - m^dagger| accepted as Hermitian.
    pub herm: f64,
    /// Frobenius error allowed in reconstructions, idempotence and unitarity.
    pub recon: f64,
    /// Allowed negative (or above-one) eigenvalue slack.
    pub psd: f64,
    /// Allowed |Tr - 1| for states and weight sums.
    pub trace: f64,
    /// Probability-level residuals.
    pub prob: f64,
    /// Eigenvalues above this count toward the support.
    pub rank: f64,
    /// Tr[x1 x2] below this means orthogonal.
    pub orth: f64,
    /// Frobenius residual for superposition membership.
    pub member: f64,
    /// Minimum selection probability for conditional output states.
    pub sel: f64,
    /// Premise residual for discriminating readings.
    pub disc: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            recon: 1e-8,
            psd: 1e-9,
            trace: 1e-9,
            prob: 1e-8,
            rank: 1e-9,
            orth: 1e-9,
            member: 1e-8,
            sel: 1e-12,
            disc: 1e-9,
        }
    }
}

impl ToleranceConfig {
    /// Multiplies every threshold by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            herm: self.herm * factor,
            recon: self.recon * factor,
            psd: self.psd * factor,
            trace: self.trace * factor,
            prob: self.prob * factor,
            rank: self.rank * factor,
            orth: self.orth * factor,
            member: self.member * factor,
            sel: self.sel * factor,
            disc: self.disc * factor,
        }
    }
}
