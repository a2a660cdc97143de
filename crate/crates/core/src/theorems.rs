//! Discriminating measurements and what follows from them: the probability
//! rule, restricted state reduction, agreement between discriminating
//! channels, the per-trial objective-event sampler, the consistency analysis
//! for interference-sensitive observations, and multiway filtering.
//!
//! Every premise here is a statement about single channels on the two
//! component states `X1` and `X2`. Statements about superpositions and
//! cross-channel correlations are measured, never assumed.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{embed, partial_trace, ComplexMatrix};
use crate::measurement::{
    coincidence_distribution, induced_effect, m_coincidence, output_state, CoincidenceDistribution,
    MeasurementModel, ReadingSet,
};
use crate::quantum::{complement, probability, support_projector_of, trace_product, DensityOperator, Effect, Weights};
use crate::random::{self, substream};
use crate::superposition::{coherent, SuperpositionFamily};
use crate::tolerance::ToleranceConfig;

/// Weight pairs used by the theorem sweeps: both endpoints, the symmetric
/// point, and the 3-4-5 example.
pub const DEFAULT_WEIGHT_GRID: [(f64, f64); 5] = [(1.0, 0.0), (0.75, 0.25), (0.5, 0.5), (0.36, 0.64), (0.0, 1.0)];

pub fn default_weight_grid(tol: &ToleranceConfig) -> Vec<Weights> {
    DEFAULT_WEIGHT_GRID
        .iter()
        .map(|&(a, b)| Weights::new(a, b, tol).expect("valid grid"))
        .collect()
}

/// Residuals of `m(A; X_i) = delta_{i1}` for one reading.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationCheck {
    pub channel: String,
    pub discriminates: bool,
    /// `|m(A; X1) - 1|`
    pub r1: f64,
    /// `m(A; X2)`
    pub r2: f64,
}

impl DiscriminationCheck {
    pub fn max_residual(&self) -> f64 {
        self.r1.max(self.r2)
    }
}

/// Whether reading `a` on `channel` discriminates `X1` against `X2`. When it
/// does, the complement discriminates `X2` against `X1`.
pub fn check_discrimination(
    model: &MeasurementModel,
    fam: &SuperpositionFamily,
    channel: &str,
    a: &Effect,
    tol: &ToleranceConfig,
) -> Result<DiscriminationCheck> {
    let reading = ReadingSet::new().with(channel, a.clone());
    let r1 = (m_coincidence(model, &reading, fam.x1())? - 1.0).abs();
    let r2 = m_coincidence(model, &reading, fam.x2())?.abs();
    Ok(DiscriminationCheck {
        channel: channel.to_string(),
        discriminates: r1 <= tol.disc && r2 <= tol.disc,
        r1,
        r2,
    })
}

/// A model, a pair of orthogonal object states, and readings claimed to
/// discriminate the first against the second.
#[derive(Debug, Clone)]
pub struct DiscriminationScenario {
    model: MeasurementModel,
    fam: SuperpositionFamily,
    discriminating: ReadingSet,
}

impl DiscriminationScenario {
    /// Rejects any reading that fails [`check_discrimination`].
    pub fn new(
        model: MeasurementModel,
        fam: SuperpositionFamily,
        discriminating: ReadingSet,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let scenario = Self::new_unchecked(model, fam, discriminating)?;
        for check in scenario.premise_checks(tol)? {
            if !check.discriminates {
                return Err(Error::Premise(format!(
                    "reading on `{}` does not discriminate (r1 = {:e}, r2 = {:e})",
                    check.channel, check.r1, check.r2
                )));
            }
        }
        Ok(scenario)
    }

    /// Dimension checks only. Negative controls use this to carry a reading
    /// that breaks the premise.
    pub fn new_unchecked(model: MeasurementModel, fam: SuperpositionFamily, discriminating: ReadingSet) -> Result<Self> {
        if fam.dim() != model.object_dim() {
            return Err(Error::DimensionMismatch {
                op: "DiscriminationScenario",
                expected: model.object_dim(),
                actual: fam.dim(),
            });
        }
        // surfaces unknown channels and dimension errors
        model.reading_operator(&discriminating)?;
        Ok(Self {
            model,
            fam,
            discriminating,
        })
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    pub fn family(&self) -> &SuperpositionFamily {
        &self.fam
    }

    pub fn discriminating(&self) -> &ReadingSet {
        &self.discriminating
    }

    pub fn with_family(&self, fam: SuperpositionFamily) -> Self {
        Self { fam, ..self.clone() }
    }

    pub fn premise_checks(&self, tol: &ToleranceConfig) -> Result<Vec<DiscriminationCheck>> {
        self.discriminating
            .iter()
            .map(|(ch, a)| check_discrimination(&self.model, &self.fam, ch, a, tol))
            .collect()
    }
}

/// A member of a superposition family visited by a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub c1_sq: f64,
    pub c2_sq: f64,
    /// `None` for the incoherent mixture.
    pub phase: Option<f64>,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            Some(p) => write!(f, "w=({}, {}) coherent phase={p:.4}", self.c1_sq, self.c2_sq),
            None => write!(f, "w=({}, {}) mixture", self.c1_sq, self.c2_sq),
        }
    }
}

/// Mixture plus, for pure components, one coherent state per phase, for each weight pair.
pub fn family_members(
    fam: &SuperpositionFamily,
    weights: &[Weights],
    phases: &[f64],
    tol: &ToleranceConfig,
) -> Result<Vec<(GridPoint, SuperpositionFamily, DensityOperator)>> {
    let pure = fam.is_pure(tol);
    let mut out = Vec::new();
    for w in weights {
        let f = fam.with_weights(*w);
        let point = GridPoint {
            c1_sq: w.c1_sq,
            c2_sq: w.c2_sq,
            phase: None,
        };
        out.push((point, f.clone(), f.mixture()));
        if pure {
            for &phase in phases {
                let fp = f.with_phase(phase);
                let x = coherent(&fp, tol)?;
                out.push((GridPoint { phase: Some(phase), ..point }, fp, x));
            }
        }
    }
    Ok(out)
}

/// Worst residual of a sweep together with where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub max_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub worst: Option<String>,
}

impl SweepResult {
    pub fn new(tolerance: f64) -> Self {
        Self {
            max_residual: 0.0,
            tolerance,
            samples: 0,
            worst: None,
        }
    }

    pub fn record(&mut self, residual: f64, witness: impl FnOnce() -> String) {
        self.samples += 1;
        if self.worst.is_none() || residual > self.max_residual {
            self.max_residual = residual;
            self.worst = Some(witness());
        }
    }

    pub fn passed(&self) -> bool {
        self.max_residual.is_finite() && self.max_residual <= self.tolerance
    }
}

/// One evaluation of a discriminating reading on a family member.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleEvaluation {
    pub point: GridPoint,
    pub channel: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRuleReport {
    /// Max `|m(A^mu; X) - |c1|^2|`.
    pub sweep: SweepResult,
    pub evaluations: Vec<RuleEvaluation>,
}

/// Checks that each discriminating reading fires with probability `|c1|^2`
/// on every member of the family.
pub fn verify_probability_rule(
    scenario: &DiscriminationScenario,
    weights: &[Weights],
    phases: &[f64],
    tol: &ToleranceConfig,
) -> Result<ProbabilityRuleReport> {
    let members = family_members(&scenario.fam, weights, phases, tol)?;
    let rows = exec::map_slice(&members, |(point, _, x)| -> Result<Vec<RuleEvaluation>> {
        let rho = scenario.model.final_state(x)?;
        scenario
            .discriminating
            .iter()
            .map(|(ch, a)| {
                Ok(RuleEvaluation {
                    point: *point,
                    channel: ch.to_string(),
                    value: scenario.model.coincidence_in(&ReadingSet::new().with(ch, a.clone()), &rho)?,
                })
            })
            .collect()
    });
    let mut sweep = SweepResult::new(tol.prob);
    let mut evaluations = Vec::new();
    for row in rows {
        for ev in row? {
            sweep.record((ev.value - ev.point.c1_sq).abs(), || format!("{} channel {}", ev.point, ev.channel));
            evaluations.push(ev);
        }
    }
    Ok(ProbabilityRuleReport { sweep, evaluations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateReductionReport {
    /// `|m(A^nu, A^mu; X) - m(A^nu, A^mu; mixture)|`
    pub coincidence: SweepResult,
    /// `|m(A^nu; X) - |c1|^2 m(A^nu; X1) - |c2|^2 m(A^nu; X2)|`
    pub marginal: SweepResult,
}

impl StateReductionReport {
    pub fn passed(&self) -> bool {
        self.coincidence.passed() && self.marginal.passed()
    }
}

/// For readings on channels that leave out a discriminating channel `mu`,
/// checks that neither their marginal nor their coincidence with `A^mu`
/// depends on interference between the components. Reading sets that cover
/// every discriminating channel are skipped for lack of an excluded `mu`.
pub fn verify_state_reduction(
    scenario: &DiscriminationScenario,
    other_readings: &[ReadingSet],
    weights: &[Weights],
    phases: &[f64],
    tol: &ToleranceConfig,
) -> Result<StateReductionReport> {
    let model = &scenario.model;
    let members = family_members(&scenario.fam, weights, phases, tol)?;
    let rho1 = model.final_state(scenario.fam.x1())?;
    let rho2 = model.final_state(scenario.fam.x2())?;

    let per_reading = exec::map_indexed(other_readings.len(), |k| -> Result<Vec<(f64, f64, String)>> {
        let nu = &other_readings[k];
        let on_x1 = model.coincidence_in(nu, &rho1)?;
        let on_x2 = model.coincidence_in(nu, &rho2)?;
        let mut rows = Vec::new();
        for (point, fam, x) in &members {
            let rho = model.final_state(x)?;
            let rho_mix = model.final_state(&fam.mixture())?;
            let marginal = model.coincidence_in(nu, &rho)?;
            let affine = fam.weights().c1_sq * on_x1 + fam.weights().c2_sq * on_x2;
            for (mu, a_mu) in scenario.discriminating.iter() {
                if nu.contains(mu) {
                    continue;
                }
                let joint = nu.clone().with(mu, a_mu.clone());
                let r81 = (model.coincidence_in(&joint, &rho)? - model.coincidence_in(&joint, &rho_mix)?).abs();
                let r82 = (marginal - affine).abs();
                rows.push((r81, r82, format!("reading set {k} excluding {mu}, {point}")));
            }
        }
        Ok(rows)
    });
    let mut coincidence = SweepResult::new(tol.prob);
    let mut marginal = SweepResult::new(tol.prob);
    for rows in per_reading {
        for (r81, r82, label) in rows? {
            coincidence.record(r81, || label.clone());
            marginal.record(r82, || label);
        }
    }
    Ok(StateReductionReport { coincidence, marginal })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectivityReport {
    /// Max of `m(A^mu, I - A^nu; X)` and `m(I - A^mu, A^nu; X)`.
    pub disagreement: SweepResult,
    /// Max spread of `m(A^mu, A^nu; X)`, `m(A^mu; X)`, `m(A^nu; X)`.
    pub agreement_spread: SweepResult,
}

impl ObjectivityReport {
    pub fn passed(&self) -> bool {
        self.disagreement.passed() && self.agreement_spread.passed()
    }
}

/// For every ordered pair of discriminating channels and every family
/// member, measures the probability that the two readings disagree.
pub fn verify_objectivity(
    scenario: &DiscriminationScenario,
    weights: &[Weights],
    phases: &[f64],
    tol: &ToleranceConfig,
) -> Result<ObjectivityReport> {
    let names = scenario.discriminating.channels();
    if names.len() < 2 {
        return Err(Error::Premise("objectivity needs at least two discriminating channels".into()));
    }
    let members = family_members(&scenario.fam, weights, phases, tol)?;
    let model = &scenario.model;
    let rows = exec::map_slice(&members, |(point, _, x)| -> Result<Vec<(f64, f64, String)>> {
        let rho = model.final_state(x)?;
        let mut rows = Vec::new();
        for &mu in &names {
            for &nu in &names {
                if mu == nu {
                    continue;
                }
                let a_mu = scenario.discriminating.get(mu).expect("listed");
                let a_nu = scenario.discriminating.get(nu).expect("listed");
                let m = |r: ReadingSet| model.coincidence_in(&r, &rho);
                let d1 = m(ReadingSet::new().with(mu, a_mu.clone()).with(nu, complement(a_nu)))?;
                let d2 = m(ReadingSet::new().with(mu, complement(a_mu)).with(nu, a_nu.clone()))?;
                let both = m(ReadingSet::new().with(mu, a_mu.clone()).with(nu, a_nu.clone()))?;
                let only_mu = m(ReadingSet::new().with(mu, a_mu.clone()))?;
                let only_nu = m(ReadingSet::new().with(nu, a_nu.clone()))?;
                let hi = both.max(only_mu).max(only_nu);
                let lo = both.min(only_mu).min(only_nu);
                rows.push((d1.abs().max(d2.abs()), hi - lo, format!("({mu}, {nu}) {point}")));
            }
        }
        Ok(rows)
    });
    let mut disagreement = SweepResult::new(tol.prob);
    let mut agreement_spread = SweepResult::new(3.0 * tol.prob);
    for r in rows {
        for (d, spread, label) in r? {
            disagreement.record(d, || label.clone());
            agreement_spread.record(spread, || label);
        }
    }
    Ok(ObjectivityReport {
        disagreement,
        agreement_spread,
    })
}

/// Outcome of one simulated trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_index: usize,
    /// One bit per channel, in [`TrialRun::channels`] order.
    pub outcomes: Vec<u8>,
    /// All discriminating channels read the same value.
    pub agreed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trials: usize,
    pub disagreements: usize,
    /// Per channel, fraction of trials reading 1.
    pub frequency_one: Vec<f64>,
    /// Exact probability of each channel reading 1.
    pub predicted_one: Vec<f64>,
    /// Exact disagreement mass of the joint distribution.
    pub predicted_disagreement: f64,
}

impl TrialSummary {
    pub fn disagreement_frequency(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.disagreements as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub channels: Vec<String>,
    pub records: Vec<TrialRecord>,
    pub summary: TrialSummary,
}

/// Trials per random substream; part of the reproducibility contract.
pub const TRIAL_CHUNK: usize = 4096;

/// Draws `n` indices from a finite distribution by inverse CDF; chunk `c`
/// of [`TRIAL_CHUNK`] trials uses substream `c` of `seed`.
fn draw_indices(weights: &[f64], n: usize, seed: u64) -> Vec<usize> {
    let clipped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let mut cdf = Vec::with_capacity(clipped.len());
    let mut acc = 0.0;
    for w in &clipped {
        acc += w / total;
        cdf.push(acc);
    }
    let last_nonzero = clipped.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    let chunks = n.div_ceil(TRIAL_CHUNK);
    exec::map_indexed(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let len = TRIAL_CHUNK.min(n - c * TRIAL_CHUNK);
        (0..len)
            .map(|_| {
                let u: f64 = rng.random();
                cdf.iter().position(|&p| u < p).unwrap_or(last_nonzero).min(last_nonzero)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Simulates `n_trials` readings of every discriminating channel on `x`,
/// drawing each trial's outcome tuple from the exact joint distribution.
pub fn sample_trials(scenario: &DiscriminationScenario, x: &DensityOperator, n_trials: usize, seed: u64) -> Result<TrialRun> {
    let dist: CoincidenceDistribution = coincidence_distribution(&scenario.model, &scenario.discriminating, x)?;
    let outcomes: Vec<Vec<u8>> = dist.probabilities.keys().cloned().collect();
    let weights: Vec<f64> = dist.probabilities.values().copied().collect();
    let k = dist.channels.len();

    let draws = draw_indices(&weights, n_trials, seed);
    let mut ones = vec![0usize; k];
    let mut disagreements = 0;
    let records: Vec<TrialRecord> = draws
        .into_iter()
        .enumerate()
        .map(|(trial_index, idx)| {
            let bits = outcomes[idx].clone();
            let agreed = bits.iter().all(|&b| b == bits[0]);
            if !agreed {
                disagreements += 1;
            }
            for (o, &b) in ones.iter_mut().zip(&bits) {
                *o += b as usize;
            }
            TrialRecord {
                trial_index,
                outcomes: bits,
                agreed,
            }
        })
        .collect();
    let n = n_trials.max(1) as f64;
    let summary = TrialSummary {
        trials: n_trials,
        disagreements,
        frequency_one: ones.iter().map(|&o| o as f64 / n).collect(),
        predicted_one: (0..k).map(|j| dist.marginal_one(j)).collect(),
        predicted_disagreement: dist.disagreement(),
    };
    Ok(TrialRun {
        channels: dist.channels,
        records,
        summary,
    })
}

/// Binomial standard error `sqrt(p (1 - p) / n)`.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Range of `m(A_tot; X)` over the phase sweep exceeds `tol.prob`.
    pub sensitive: bool,
    pub phase_min: f64,
    pub phase_max: f64,
    /// Per discriminating channel, `||Pi1 A Pi2||_F` between the supports of
    /// the channel states prepared from `X1` and `X2`.
    pub off_diagonals: BTreeMap<String, f64>,
    /// Sensitivity implies every off-diagonal is nonzero.
    pub consistent: bool,
}

/// Splits `a_total` into per-channel factors (unobserved factors form one
/// extra group). Fails with [`Error::NotProduct`] when no such split exists.
pub fn factorize_over_channels(
    model: &MeasurementModel,
    a_total: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<BTreeMap<String, ComplexMatrix>> {
    let layout = model.channels().layout();
    let mut groups: Vec<(String, Vec<usize>)> = model
        .channels()
        .channels()
        .iter()
        .map(|c| (c.name.clone(), c.factors.clone()))
        .collect();
    if !model.channels().unobserved().is_empty() {
        groups.push((String::new(), model.channels().unobserved().to_vec()));
    }
    if a_total.frobenius_norm() <= tol.recon {
        return Ok(groups
            .into_iter()
            .map(|(n, f)| {
                let d = layout.sub_dim(&f);
                (n, ComplexMatrix::zeros(d, d))
            })
            .collect());
    }
    let t = a_total.trace().re;
    if t <= tol.recon {
        return Err(Error::NotProduct { residual: a_total.frobenius_norm() });
    }
    let k = groups.len() as f64;
    let scale = t.powf(1.0 / k - 1.0);
    let mut factors = Vec::new();
    for (name, f) in &groups {
        factors.push((name.clone(), partial_trace(a_total, layout, f)?.scale_real(scale), f.clone()));
    }
    let ops: Vec<(&ComplexMatrix, &[usize])> = factors.iter().map(|(_, m, f)| (m, f.as_slice())).collect();
    let rebuilt = embed(&ops, layout)?;
    let residual = (&rebuilt - a_total).frobenius_norm();
    if residual > tol.recon {
        return Err(Error::NotProduct { residual });
    }
    Ok(factors.into_iter().map(|(n, m, _)| (n, m)).collect())
}

/// Tests an observation on the whole final space for interference
/// sensitivity and checks that it can only be sensitive when its factor on
/// every discriminating channel couples the two discriminated channel states.
pub fn consistency_analysis(
    scenario: &DiscriminationScenario,
    a_total: &Effect,
    phases: &[f64],
    tol: &ToleranceConfig,
) -> Result<ConsistencyReport> {
    let model = &scenario.model;
    let factors = factorize_over_channels(model, a_total.matrix(), tol)?;
    let mut off_diagonals = BTreeMap::new();
    for (ch, _) in scenario.discriminating.iter() {
        let s1 = output_state(model, ch, scenario.fam.x1())?;
        let s2 = output_state(model, ch, scenario.fam.x2())?;
        let pi1 = support_projector_of(s1.matrix(), tol)?;
        let pi2 = support_projector_of(s2.matrix(), tol)?;
        let factor = &factors[ch];
        off_diagonals.insert(ch.to_string(), (&(&pi1 * factor) * &pi2).frobenius_norm());
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &phase in phases {
        let x = coherent(&scenario.fam.with_phase(phase), tol)?;
        let p = trace_product(a_total.matrix(), model.final_state(&x)?.matrix());
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let sensitive = hi - lo > tol.prob;
    let consistent = !sensitive || off_diagonals.values().all(|&o| o > tol.orth);
    Ok(ConsistencyReport {
        sensitive,
        phase_min: lo,
        phase_max: hi,
        off_diagonals,
        consistent,
    })
}

/// [`consistency_analysis`] for a product of channel readings (identity on
/// unread channels).
pub fn consistency_analysis_product(
    scenario: &DiscriminationScenario,
    readings: &ReadingSet,
    phases: &[f64],
    tol: &ToleranceConfig,
) -> Result<ConsistencyReport> {
    let a_total = Effect::new_unchecked(scenario.model.reading_operator(readings)?);
    consistency_analysis(scenario, &a_total, phases, tol)
}

/// Twelve qubit effects: identity, zero, the six Pauli eigenprojectors, the
/// half identity, two convex blends, and one seeded random effect.
pub fn qubit_effect_dictionary(seed: u64) -> Vec<Effect> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| num_complex::Complex64::new(re, im);
    let proj = |a: [num_complex::Complex64; 2]| Effect::projector(&ComplexMatrix::ket(&a)).expect("nonzero");
    let plus = proj([c(s, 0.0), c(s, 0.0)]);
    let minus = proj([c(s, 0.0), c(-s, 0.0)]);
    let plus_i = proj([c(s, 0.0), c(0.0, s)]);
    let minus_i = proj([c(s, 0.0), c(0.0, -s)]);
    let p0 = Effect::basis_projector(2, 0);
    let p1 = Effect::basis_projector(2, 1);
    let half = Effect::new_unchecked(ComplexMatrix::identity(2).scale_real(0.5));
    let blend1 = p0.convex(0.3, &plus);
    let blend2 = plus_i.convex(0.5, &half);
    let mut rng = substream(seed, 0);
    let rand_eff = Effect::random(2, &mut rng);
    vec![
        Effect::identity(2),
        Effect::zero(2),
        p0,
        p1,
        plus,
        minus,
        plus_i,
        minus_i,
        half,
        blend1,
        blend2,
        rand_eff,
    ]
}

/// Dictionary of `size` effects for dimension `dim`: identity, zero, basis
/// projectors, then seeded random projectors and effects. Dimension 2 with
/// size 12 returns [`qubit_effect_dictionary`].
pub fn effect_dictionary(dim: usize, size: usize, seed: u64) -> Vec<Effect> {
    if dim == 2 && size == 12 {
        return qubit_effect_dictionary(seed);
    }
    let mut out = vec![Effect::identity(dim), Effect::zero(dim)];
    out.extend((0..dim).map(|i| Effect::basis_projector(dim, i)));
    let mut rng = substream(seed, 1);
    let mut k = 0;
    while out.len() < size {
        if k % 2 == 0 {
            out.push(Effect::projector(&random::unit_vector(dim, &mut rng)).expect("nonzero"));
        } else {
            out.push(Effect::random(dim, &mut rng));
        }
        k += 1;
    }
    out.truncate(size);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencySweep {
    pub products: usize,
    pub sensitive: usize,
    pub counterexamples: Vec<String>,
}

/// Runs [`consistency_analysis_product`] on every product of dictionary
/// effects over the discriminating channels.
pub fn consistency_sweep(
    scenario: &DiscriminationScenario,
    dictionary_size: usize,
    phases: &[f64],
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ConsistencySweep> {
    let channels = scenario.discriminating.channels();
    let mut dicts = Vec::new();
    for ch in &channels {
        let d = scenario.model.channels().channel_dim(ch)?;
        dicts.push(effect_dictionary(d, dictionary_size, seed));
    }
    let total: usize = dicts.iter().map(Vec::len).product();
    let results = exec::map_indexed(total, |mut idx| -> Result<(bool, Option<String>)> {
        let mut readings = ReadingSet::new();
        let mut label = Vec::new();
        for (ch, dict) in channels.iter().zip(&dicts).rev() {
            let i = idx % dict.len();
            idx /= dict.len();
            readings.insert(ch, dict[i].clone());
            label.push(format!("{ch}[{i}]"));
        }
        let r = consistency_analysis_product(scenario, &readings, phases, tol)?;
        Ok((r.sensitive, (!r.consistent).then(|| label.join(" "))))
    });
    let mut sweep = ConsistencySweep {
        products: total,
        sensitive: 0,
        counterexamples: Vec::new(),
    };
    for r in results {
        let (sensitive, counter) = r?;
        sweep.sensitive += usize::from(sensitive);
        sweep.counterexamples.extend(counter);
    }
    Ok(sweep)
}

/// A model whose channels each carry one reading per member of a family of
/// mutually orthogonal object states, reading `i` firing exactly on state `i`.
#[derive(Debug, Clone)]
pub struct MultiwayScenario {
    model: MeasurementModel,
    family: Vec<DensityOperator>,
    readings: BTreeMap<String, Vec<Effect>>,
}

impl MultiwayScenario {
    /// Checks `m(A^mu_i; X_j) = delta_ij` within `tol.disc` and that each
    /// channel's readings sum to the identity.
    pub fn new(
        model: MeasurementModel,
        family: Vec<DensityOperator>,
        readings: BTreeMap<String, Vec<Effect>>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if family.len() < 2 {
            return Err(Error::Premise("multiway filtering needs at least two states".into()));
        }
        if readings.is_empty() {
            return Err(Error::Premise("multiway filtering needs at least one channel".into()));
        }
        for (ch, list) in &readings {
            if list.len() != family.len() {
                return Err(Error::Premise(format!(
                    "channel `{ch}` has {} readings for {} states",
                    list.len(),
                    family.len()
                )));
            }
            let dim = model.channels().channel_dim(ch)?;
            let mut sum = ComplexMatrix::zeros(dim, dim);
            for (i, a) in list.iter().enumerate() {
                sum = &sum + a.matrix();
                for (j, x) in family.iter().enumerate() {
                    let m = m_coincidence(&model, &ReadingSet::new().with(ch, a.clone()), x)?;
                    let want = if i == j { 1.0 } else { 0.0 };
                    if (m - want).abs() > tol.disc {
                        return Err(Error::Premise(format!(
                            "reading {i} on `{ch}` gives {m} on state {j}, expected {want}"
                        )));
                    }
                }
            }
            let residual = (&sum - &ComplexMatrix::identity(dim)).frobenius_norm();
            if residual > tol.recon {
                return Err(Error::Premise(format!(
                    "readings on `{ch}` do not sum to the identity (residual {residual:e})"
                )));
            }
        }
        Ok(Self {
            model,
            family,
            readings,
        })
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    pub fn family(&self) -> &[DensityOperator] {
        &self.family
    }

    pub fn readings(&self) -> &BTreeMap<String, Vec<Effect>> {
        &self.readings
    }

    /// `(F_i, x)` for the induced effect of reading `i` on the first channel.
    pub fn predicted(&self, x: &DensityOperator, tol: &ToleranceConfig) -> Result<Vec<f64>> {
        let (ch, list) = self.readings.iter().next().expect("non-empty");
        list.iter()
            .map(|a| probability(&induced_effect(&self.model, &ReadingSet::new().with(ch, a.clone()), tol)?, x))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiwayRun {
    pub identified: Vec<usize>,
    pub counts: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl MultiwayRun {
    /// Max over indices of `|freq - p| / sigma`. Sigma is floored at `1/n`
    /// so indices with (near) zero variance give a finite score.
    pub fn max_z_score(&self) -> f64 {
        let n = self.identified.len().max(1);
        self.frequencies
            .iter()
            .zip(&self.predicted)
            .map(|(&f, &p)| {
                let sigma = binomial_sigma(p.clamp(0.0, 1.0), n).max(1.0 / n as f64);
                (f - p).abs() / sigma
            })
            .fold(0.0, f64::max)
    }
}

/// Per trial, draws one reading index per channel from the exact joint
/// distribution and returns the index all channels agree on. A trial where
/// channels disagree is an error.
pub fn multiway_filter(
    scenario: &MultiwayScenario,
    x: &DensityOperator,
    n_trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<MultiwayRun> {
    let model = &scenario.model;
    let rho = model.final_state(x)?;
    let channels: Vec<&String> = scenario.readings.keys().collect();
    let n_states = scenario.family.len();
    let k = channels.len();
    let tuples = n_states.pow(k as u32);
    let mut joint = Vec::with_capacity(tuples);
    let mut labels = Vec::with_capacity(tuples);
    for t in 0..tuples {
        let mut rem = t;
        let mut idx = vec![0; k];
        for slot in idx.iter_mut().rev() {
            *slot = rem % n_states;
            rem /= n_states;
        }
        let set: ReadingSet = channels
            .iter()
            .zip(&idx)
            .map(|(ch, &i)| ((*ch).clone(), scenario.readings[*ch][i].clone()))
            .collect();
        joint.push(model.coincidence_in(&set, &rho)?);
        labels.push(idx);
    }
    let draws = draw_indices(&joint, n_trials, seed);
    let mut identified = Vec::with_capacity(n_trials);
    let mut counts = vec![0; n_states];
    for (trial, t) in draws.into_iter().enumerate() {
        let idx = &labels[t];
        if idx.iter().any(|&i| i != idx[0]) {
            return Err(Error::InconsistentIdentification {
                trial,
                indices: idx.clone(),
            });
        }
        identified.push(idx[0]);
        counts[idx[0]] += 1;
    }
    let n = n_trials.max(1) as f64;
    Ok(MultiwayRun {
        frequencies: counts.iter().map(|&c| c as f64 / n).collect(),
        predicted: scenario.predicted(x, tol)?,
        identified,
        counts,
    })
}
