//! Suite orchestration and report rendering.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::measurement::{conditional_output_state, induced_operator, m_coincidence, output_state, verify_axioms, ReadingSet};
use crate::quantum::{complement, trace_product, DensityOperator, Effect};
use crate::random::{derive_seed, substream};
use crate::superposition::{check_defining_identities, coherent, is_member, SuperpositionFamily};
use crate::theorems::{
    binomial_sigma, consistency_sweep, family_members, multiway_filter, sample_trials, verify_objectivity,
    verify_probability_rule, verify_state_reduction, DiscriminationScenario, MultiwayScenario, SweepResult, TrialRun,
};
use crate::tolerance::ToleranceConfig;

use super::scenario::{Scenario, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Premises for the suite are absent from the scenario.
    Skipped,
    /// The suite could not be evaluated.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64, samples: usize, worst: Option<String>) -> Self {
        Self {
            name: name.into(),
            passed: residual.is_finite() && residual <= tolerance,
            residual,
            tolerance,
            samples,
            worst,
        }
    }

    fn from_sweep(name: &str, s: &SweepResult) -> Self {
        Self::new(name, s.max_residual, s.tolerance, s.samples, s.worst.clone())
    }

    /// Residual relative to tolerance; used to pick the worst check.
    fn severity(&self) -> f64 {
        if self.tolerance > 0.0 {
            self.residual / self.tolerance
        } else if self.residual > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: Suite,
    pub status: Status,
    /// Residual and tolerance of the worst check.
    pub max_residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    fn from_checks(name: Suite, checks: Vec<CheckReport>, notice: Option<String>) -> Self {
        let worst = checks
            .iter()
            .max_by(|a, b| a.severity().total_cmp(&b.severity()))
            .cloned();
        let passed = checks.iter().all(|c| c.passed);
        Self {
            name,
            status: if passed { Status::Pass } else { Status::Fail },
            max_residual: worst.as_ref().map(|c| c.residual),
            tolerance: worst.as_ref().map(|c| c.tolerance),
            samples: checks.iter().map(|c| c.samples).sum(),
            worst: worst.and_then(|c| c.worst.map(|w| format!("{}: {w}", c.name))),
            notice,
            checks,
        }
    }

    fn bare(name: Suite, status: Status, notice: String) -> Self {
        Self {
            name,
            status,
            max_residual: None,
            tolerance: None,
            samples: 0,
            worst: None,
            notice: Some(notice),
            checks: Vec::new(),
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, Status::Fail | Status::Error)
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub seed: u64,
    pub tolerances: ToleranceConfig,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
    /// Only present when timing was requested; reports are otherwise
    /// byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl VerificationReport {
    pub fn suite(&self, name: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn failing(&self) -> Vec<Suite> {
        self.suites.iter().filter(|s| s.failed()).map(|s| s.name).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}  seed {}", self.scenario, self.seed);
        let _ = writeln!(out, "{:<18} {:<8} {:>12} {:>10} {:>9}", "suite", "status", "residual", "tolerance", "samples");
        for s in &self.suites {
            let status = match s.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skip",
                Status::Error => "ERROR",
            };
            let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"));
            let _ = writeln!(
                out,
                "{:<18} {:<8} {:>12} {:>10} {:>9}",
                s.name.name(),
                status,
                fmt(s.max_residual),
                fmt(s.tolerance),
                s.samples
            );
            if s.failed() {
                if let Some(w) = &s.worst {
                    let _ = writeln!(out, "    worst: {w}");
                }
            }
            if let Some(n) = &s.notice {
                let _ = writeln!(out, "    note: {n}");
            }
        }
        if let Some(ms) = self.wall_time_ms {
            let _ = writeln!(out, "wall time {ms:.1} ms");
        }
        let _ = writeln!(out, "{}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

/// Runs every suite the scenario asks for, in its listed order.
pub fn run(scenario: &Scenario, timing: bool) -> VerificationReport {
    let start = Instant::now();
    let suites: Vec<SuiteReport> = scenario.suites.iter().map(|&s| run_suite(scenario, s)).collect();
    VerificationReport {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        tolerances: scenario.tol,
        passed: suites.iter().all(|s| !s.failed()),
        suites,
        wall_time_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    }
}

fn suite_seed(scenario: &Scenario, suite: Suite) -> u64 {
    derive_seed(scenario.seed, suite as u64 + 1)
}

pub fn run_suite(scenario: &Scenario, suite: Suite) -> SuiteReport {
    let seed = suite_seed(scenario, suite);
    let outcome = match suite {
        Suite::Axioms => axioms(scenario, seed),
        Suite::Multiway => multiway(scenario, seed),
        Suite::InducedEffect => induced(scenario, seed),
        _ => match &scenario.discrimination {
            None => Ok(Outcome::Skipped(
                "no superposition family and discriminating readings in the scenario".into(),
            )),
            Some(d) if d.discriminating().is_empty() && suite != Suite::Membership => {
                Ok(Outcome::Skipped("no discriminating readings in the scenario".into()))
            }
            Some(d) => match suite {
                Suite::Discrimination => discrimination(scenario, d),
                Suite::ProbabilityRule => probability_rule(scenario, d),
                Suite::StateReduction => state_reduction(scenario, d, seed),
                Suite::Objectivity => objectivity(scenario, d),
                Suite::Sampler => sampler(scenario, d, seed),
                Suite::OutputStates => output_states(scenario, d),
                Suite::Consistency => consistency(scenario, d, seed),
                Suite::Membership => membership(scenario, d.family(), seed),
                Suite::Axioms | Suite::Multiway | Suite::InducedEffect => unreachable!(),
            },
        },
    };
    match outcome {
        Ok(Outcome::Checks(checks, notice)) => SuiteReport::from_checks(suite, checks, notice),
        Ok(Outcome::Skipped(why)) => SuiteReport::bare(suite, Status::Skipped, why),
        Err(Error::Premise(why)) => SuiteReport::bare(suite, Status::Fail, why),
        Err(e) => SuiteReport::bare(suite, Status::Error, e.to_string()),
    }
}

enum Outcome {
    Checks(Vec<CheckReport>, Option<String>),
    Skipped(String),
}

type SuiteResult = crate::Result<Outcome>;

fn axioms(s: &Scenario, seed: u64) -> SuiteResult {
    let report = verify_axioms(&s.model, s.samples.axioms, seed, &s.tol)?;
    let checks = report
        .checks
        .iter()
        .map(|c| CheckReport::new(c.name, c.max_residual, c.tolerance, c.samples, c.worst_sample.map(|i| format!("sample {i}"))))
        .collect();
    let notice = (s.model.channels().channels().len() < 2)
        .then(|| "single channel: pairwise properties not evaluated".to_string());
    Ok(Outcome::Checks(checks, notice))
}

fn discrimination(s: &Scenario, d: &DiscriminationScenario) -> SuiteResult {
    let checks = d
        .premise_checks(&s.tol)?
        .into_iter()
        .map(|c| {
            let worst = format!("r1 = {:e}, r2 = {:e}", c.r1, c.r2);
            CheckReport::new(c.channel.clone(), c.max_residual(), s.tol.disc, 2, Some(worst))
        })
        .collect();
    Ok(Outcome::Checks(checks, None))
}

fn probability_rule(s: &Scenario, d: &DiscriminationScenario) -> SuiteResult {
    let r = verify_probability_rule(d, &s.weight_grid, &s.phases, &s.tol)?;
    Ok(Outcome::Checks(vec![CheckReport::from_sweep("firing-probability", &r.sweep)], None))
}

/// Random readings on nonempty subsets of the channels other than one
/// discriminating channel, cycling through the discriminating channels.
pub fn excluding_readings(s: &Scenario, d: &DiscriminationScenario, n: usize, seed: u64) -> crate::Result<Vec<ReadingSet>> {
    let disc = d.discriminating().channels();
    let names = s.model.channels().names();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mu = disc[k % disc.len()];
        let others: Vec<&str> = names.iter().copied().filter(|&c| c != mu).collect();
        if others.is_empty() {
            continue;
        }
        let mut rng = substream(seed, k as u64);
        let mask = rng.random_range(1..(1u64 << others.len()));
        let mut set = ReadingSet::new();
        for (j, ch) in others.iter().enumerate() {
            if mask >> j & 1 == 1 {
                set.insert(ch, Effect::random(s.model.channels().channel_dim(ch)?, &mut rng));
            }
        }
        out.push(set);
    }
    Ok(out)
}

fn state_reduction(s: &Scenario, d: &DiscriminationScenario, seed: u64) -> SuiteResult {
    let readings = excluding_readings(s, d, s.samples.reading_sets, seed)?;
    if readings.is_empty() {
        return Ok(Outcome::Skipped("no channel besides the discriminating one".into()));
    }
    let r = verify_state_reduction(d, &readings, &s.weight_grid, &s.phases, &s.tol)?;
    Ok(Outcome::Checks(
        vec![
            CheckReport::from_sweep("coincidence", &r.coincidence),
            CheckReport::from_sweep("marginal", &r.marginal),
        ],
        None,
    ))
}

fn objectivity(s: &Scenario, d: &DiscriminationScenario) -> SuiteResult {
    if d.discriminating().len() < 2 {
        return Ok(Outcome::Skipped("fewer than two discriminating channels".into()));
    }
    let r = verify_objectivity(d, &s.weight_grid, &s.phases, &s.tol)?;
    Ok(Outcome::Checks(
        vec![
            CheckReport::from_sweep("disagreement", &r.disagreement),
            CheckReport::from_sweep("agreement-spread", &r.agreement_spread),
        ],
        None,
    ))
}

/// The state the sampler draws from: coherent if the components are pure,
/// the mixture otherwise.
pub fn sampling_state(fam: &SuperpositionFamily, tol: &ToleranceConfig) -> crate::Result<DensityOperator> {
    if fam.is_pure(tol) {
        coherent(fam, tol)
    } else {
        Ok(fam.mixture())
    }
}

/// Disagreement count must be zero; each channel's frequency of reading 1
/// must lie within three binomial standard errors of `|c1|^2`.
pub fn sampler_checks(run: &TrialRun, c1_sq: f64) -> Vec<CheckReport> {
    let n = run.summary.trials;
    let first = run.records.iter().find(|r| !r.agreed).map(|r| format!("trial {} read {:?}", r.trial_index, r.outcomes));
    let mut checks = vec![CheckReport::new("disagreements", run.summary.disagreements as f64, 0.0, n, first)];
    let band = 3.0 * binomial_sigma(c1_sq, n.max(1));
    for (ch, f) in run.channels.iter().zip(&run.summary.frequency_one) {
        checks.push(CheckReport::new(
            format!("frequency {ch}"),
            (f - c1_sq).abs(),
            band,
            n,
            Some(format!("observed {f}, expected {c1_sq}")),
        ));
    }
    checks
}

fn sampler(s: &Scenario, d: &DiscriminationScenario, seed: u64) -> SuiteResult {
    if s.trials == 0 {
        return Ok(Outcome::Skipped("trial count is zero".into()));
    }
    let x = sampling_state(d.family(), &s.tol)?;
    let run = sample_trials(d, &x, s.trials, seed)?;
    Ok(Outcome::Checks(sampler_checks(&run, d.family().weights().c1_sq), None))
}

fn random_readings(s: &Scenario, rng: &mut impl Rng) -> crate::Result<ReadingSet> {
    let names = s.model.channels().names();
    let mask = rng.random_range(1..(1u64 << names.len()));
    let mut set = ReadingSet::new();
    for (j, ch) in names.iter().enumerate() {
        if mask >> j & 1 == 1 {
            set.insert(ch, Effect::random(s.model.channels().channel_dim(ch)?, rng));
        }
    }
    Ok(set)
}

/// `|min(0, lambda_min)|` and `max(0, lambda_max - 1)` of the Hermitian part,
/// plus its Hermitian deviation.
fn effect_violation(m: &crate::linalg::ComplexMatrix, tol: &ToleranceConfig) -> crate::Result<f64> {
    let eig = crate::linalg::hermitian_eig(&m.hermitian_part(), tol)?;
    let hi = eig.values.first().copied().unwrap_or(0.0);
    let lo = eig.values.last().copied().unwrap_or(0.0);
    Ok((-lo).max(hi - 1.0).max(0.0).max(m.hermitian_deviation()))
}

fn induced(s: &Scenario, seed: u64) -> SuiteResult {
    let d = s.model.object_dim();
    let n = s.samples.reading_sets;
    let per = crate::exec::map_indexed(n, |k| -> crate::Result<(f64, f64)> {
        let mut rng = substream(seed, k as u64);
        let readings = random_readings(s, &mut rng)?;
        let f = induced_operator(&s.model, &readings)?;
        let validity = effect_violation(&f, &s.tol)?;
        let mut worst = 0.0_f64;
        for j in 0..s.samples.states {
            let x = if j % 2 == 0 {
                DensityOperator::random(d, &mut rng)
            } else {
                DensityOperator::random_pure(d, &mut rng)
            };
            let via_f = trace_product(&f, x.matrix());
            worst = worst.max((via_f - m_coincidence(&s.model, &readings, &x)?).abs());
        }
        Ok((validity, worst))
    });
    let mut validity = SweepResult::new(s.tol.psd);
    let mut agreement = SweepResult::new(s.tol.prob);
    for (k, r) in per.into_iter().enumerate() {
        let (v, a) = r?;
        validity.record(v, || format!("reading set {k}"));
        agreement.record(a, || format!("reading set {k}"));
    }
    agreement.samples *= s.samples.states;
    Ok(Outcome::Checks(
        vec![
            CheckReport::from_sweep("effect-bounds", &validity),
            CheckReport::from_sweep("probability", &agreement),
        ],
        None,
    ))
}

fn output_states(s: &Scenario, d: &DiscriminationScenario) -> SuiteResult {
    let model = d.model();
    let fam = d.family();
    let names = model.channels().names();
    let members = family_members(fam, &s.weight_grid, &s.phases, &s.tol)?;
    let mut uncond = SweepResult::new(s.tol.trace);
    let mut cond = SweepResult::new(s.tol.trace);
    for (mu, a_mu) in d.discriminating().iter() {
        for &nu in names.iter().filter(|&&n| n != mu) {
            let o1 = output_state(model, nu, fam.x1())?;
            let o2 = output_state(model, nu, fam.x2())?;
            for (point, f, x) in &members {
                let w = f.weights();
                let expect = &o1.matrix().scale_real(w.c1_sq) + &o2.matrix().scale_real(w.c2_sq);
                let got = output_state(model, nu, x)?;
                let r = (got.matrix() - &expect).frobenius_norm();
                uncond.record(r, || format!("{nu} given nothing on {mu}, {point}"));
                for (a, target, weight, label) in [(a_mu.clone(), &o1, w.c1_sq, "fired"), (complement(a_mu), &o2, w.c2_sq, "not fired")] {
                    if weight <= s.tol.trace {
                        continue;
                    }
                    let got = conditional_output_state(model, nu, mu, &a, x, &s.tol)?;
                    let r = (got.matrix() - target.matrix()).frobenius_norm();
                    cond.record(r, || format!("{nu} given {mu} {label}, {point}"));
                }
            }
        }
    }
    if uncond.samples == 0 {
        return Ok(Outcome::Skipped("no channel besides the discriminating one".into()));
    }
    Ok(Outcome::Checks(
        vec![
            CheckReport::from_sweep("unconditional", &uncond),
            CheckReport::from_sweep("conditional", &cond),
        ],
        None,
    ))
}

fn consistency(s: &Scenario, d: &DiscriminationScenario, seed: u64) -> SuiteResult {
    if !d.family().is_pure(&s.tol) {
        return Ok(Outcome::Skipped("family components are not pure; no phase to sweep".into()));
    }
    let sweep = consistency_sweep(d, s.samples.dictionary, &s.phases, seed, &s.tol)?;
    let check = CheckReport::new(
        "counterexamples",
        sweep.counterexamples.len() as f64,
        0.0,
        sweep.products,
        sweep.counterexamples.first().cloned(),
    );
    let notice = format!("{} of {} product readings are interference-sensitive", sweep.sensitive, sweep.products);
    Ok(Outcome::Checks(vec![check], Some(notice)))
}

fn membership(s: &Scenario, fam: &SuperpositionFamily, seed: u64) -> SuiteResult {
    let members = family_members(fam, &s.weight_grid, &s.phases, &s.tol)?;
    let per = crate::exec::map_indexed(members.len(), |k| -> crate::Result<(f64, f64, f64)> {
        let (_, f, x) = &members[k];
        let m = is_member(x, f, &s.tol)?;
        let ids = check_defining_identities(x, f, s.samples.identity_effects, derive_seed(seed, k as u64), &s.tol)?;
        Ok((m.residual1.max(m.residual2), m.leakage, ids.max_residual()))
    });
    let mut compression = SweepResult::new(s.tol.member);
    let mut leakage = SweepResult::new(s.tol.orth);
    let mut identities = SweepResult::new(s.tol.prob);
    for (k, r) in per.into_iter().enumerate() {
        let (c, l, i) = r?;
        let label = || members[k].0.to_string();
        compression.record(c, label);
        leakage.record(l, label);
        identities.record(i, label);
    }
    identities.samples *= s.samples.identity_effects;
    Ok(Outcome::Checks(
        vec![
            CheckReport::from_sweep("compression", &compression),
            CheckReport::from_sweep("leakage", &leakage),
            CheckReport::from_sweep("defining-identities", &identities),
        ],
        None,
    ))
}

fn multiway(s: &Scenario, seed: u64) -> SuiteResult {
    let Some(parts) = &s.multiway else {
        return Ok(Outcome::Skipped("no multiway section in the scenario".into()));
    };
    if s.trials == 0 {
        return Ok(Outcome::Skipped("trial count is zero".into()));
    }
    let mw = MultiwayScenario::new(s.model.clone(), parts.states.clone(), parts.readings.clone(), &s.tol)?;
    let run = match multiway_filter(&mw, &parts.input, s.trials, seed, &s.tol) {
        Ok(r) => r,
        Err(Error::InconsistentIdentification { trial, indices }) => {
            return Ok(Outcome::Checks(
                vec![CheckReport::new(
                    "inconsistent-trials",
                    1.0,
                    0.0,
                    trial + 1,
                    Some(format!("trial {trial} identified {indices:?}")),
                )],
                None,
            ))
        }
        Err(e) => return Err(e),
    };
    let n = run.identified.len();
    let worst = run
        .frequencies
        .iter()
        .zip(&run.predicted)
        .enumerate()
        .map(|(i, (f, p))| format!("index {i}: observed {f}, expected {p}"))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome::Checks(
        vec![
            CheckReport::new("inconsistent-trials", 0.0, 0.0, n, None),
            CheckReport::new("frequency-z-score", run.max_z_score(), 3.0, n, Some(worst)),
        ],
        None,
    ))
}

/// Output of the `sample` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub scenario: String,
    pub seed: u64,
    pub trials: usize,
    pub channels: Vec<String>,
    pub disagreements: usize,
    pub disagreement_frequency: f64,
    pub predicted_disagreement: f64,
    pub frequency_one: Vec<f64>,
    pub predicted_one: Vec<f64>,
    /// `|c1|^2` of the sampled state.
    pub reference_probability: f64,
    pub sigma: f64,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<TrialRecordOut>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecordOut {
    pub trial: usize,
    pub outcomes: Vec<u8>,
    pub agreed: bool,
}

pub fn sample(scenario: &Scenario, trials: usize, seed: u64, with_records: bool) -> crate::Result<SampleReport> {
    let d = scenario
        .discrimination
        .as_ref()
        .filter(|d| !d.discriminating().is_empty())
        .ok_or_else(|| Error::Premise("sampling needs a family and discriminating readings".into()))?;
    let x = sampling_state(d.family(), &scenario.tol)?;
    let run = sample_trials(d, &x, trials, seed)?;
    let c1_sq = d.family().weights().c1_sq;
    let checks = sampler_checks(&run, c1_sq);
    Ok(SampleReport {
        scenario: scenario.name.clone(),
        seed,
        trials,
        channels: run.channels.clone(),
        disagreements: run.summary.disagreements,
        disagreement_frequency: run.summary.disagreement_frequency(),
        predicted_disagreement: run.summary.predicted_disagreement,
        frequency_one: run.summary.frequency_one.clone(),
        predicted_one: run.summary.predicted_one.clone(),
        reference_probability: c1_sq,
        sigma: binomial_sigma(c1_sq, trials.max(1)),
        passed: checks.iter().all(|c| c.passed),
        checks,
        records: with_records.then(|| {
            run.records
                .iter()
                .map(|r| TrialRecordOut {
                    trial: r.trial_index,
                    outcomes: r.outcomes.clone(),
                    agreed: r.agreed,
                })
                .collect()
        }),
    })
}

impl SampleReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}  seed {}  trials {}", self.scenario, self.seed, self.trials);
        let _ = writeln!(
            out,
            "disagreements {} (frequency {:.5}, predicted {:.5})",
            self.disagreements, self.disagreement_frequency, self.predicted_disagreement
        );
        for ((ch, f), p) in self.channels.iter().zip(&self.frequency_one).zip(&self.predicted_one) {
            let _ = writeln!(out, "{ch:<8} P(e=1) observed {f:.5}  predicted {p:.5}");
        }
        let _ = writeln!(out, "reference |c1|^2 = {}  sigma = {:.5}", self.reference_probability, self.sigma);
        let _ = writeln!(out, "{}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}
