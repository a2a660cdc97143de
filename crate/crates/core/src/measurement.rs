//! Measurements as unitary dilations: an object state `X` is coupled to a
//! probe in state `X_m` by a unitary `S`, and the final space is split into
//! separately readable channels.
//!
//! The coincidence functional `m({A^mu}; X)` is the probability that every
//! listed channel reading fires:
//! `Tr[(A^1 (x) A^2 (x) .. (x) I_rest) S (X (x) X_m) S^dagger]`.
//! Nothing about separability or linearity is assumed; [`verify_axioms`]
//! measures how well a given model satisfies each defining property.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{embed, partial_trace, psd_sqrt, tensor, ComplexMatrix, DimensionLayout};
use crate::quantum::{complement, trace_product, DensityOperator, Effect};
use crate::random::substream;
use crate::tolerance::ToleranceConfig;

/// A named group of tensor factors that can be read on its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub name: String,
    /// Strictly ascending factor indices.
    pub factors: Vec<usize>,
}

/// How the final space splits into channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelLayout {
    layout: DimensionLayout,
    channels: Vec<Channel>,
    unobserved: Vec<usize>,
}

impl ChannelLayout {
    /// Every factor must belong to exactly one channel or to `unobserved`.
    pub fn new(layout: DimensionLayout, channels: Vec<Channel>, mut unobserved: Vec<usize>) -> Result<Self> {
        let n = layout.num_factors();
        let mut owner: Vec<Option<String>> = vec![None; n];
        for ch in &channels {
            if ch.name.is_empty() {
                return Err(Error::Layout("channel with empty name".into()));
            }
            if channels.iter().filter(|c| c.name == ch.name).count() > 1 {
                return Err(Error::Layout(format!("duplicate channel name `{}`", ch.name)));
            }
            if ch.factors.is_empty() {
                return Err(Error::Layout(format!("channel `{}` has no factors", ch.name)));
            }
            if ch.factors.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Layout(format!(
                    "channel `{}` factors {:?} are not strictly ascending",
                    ch.name, ch.factors
                )));
            }
            for &f in &ch.factors {
                if f >= n {
                    return Err(Error::Layout(format!("channel `{}` names factor {f} of {n}", ch.name)));
                }
                if let Some(other) = &owner[f] {
                    return Err(Error::Layout(format!("factor {f} claimed by `{other}` and `{}`", ch.name)));
                }
                owner[f] = Some(ch.name.clone());
            }
        }
        unobserved.sort_unstable();
        for &f in &unobserved {
            if f >= n {
                return Err(Error::Layout(format!("unobserved factor {f} of {n}")));
            }
            if owner[f].is_some() {
                return Err(Error::Layout(format!("factor {f} is both unobserved and in a channel")));
            }
            owner[f] = Some(String::new());
        }
        if let Some(f) = owner.iter().position(Option::is_none) {
            return Err(Error::Layout(format!("factor {f} is neither in a channel nor listed unobserved")));
        }
        Ok(Self {
            layout,
            channels,
            unobserved,
        })
    }

    /// One channel per factor, named by `names`.
    pub fn one_per_factor(factor_dims: Vec<usize>, names: &[&str]) -> Result<Self> {
        let layout = DimensionLayout::new(factor_dims)?;
        if names.len() != layout.num_factors() {
            return Err(Error::Layout(format!(
                "{} names for {} factors",
                names.len(),
                layout.num_factors()
            )));
        }
        let channels = names
            .iter()
            .enumerate()
            .map(|(i, n)| Channel {
                name: (*n).to_string(),
                factors: vec![i],
            })
            .collect();
        Self::new(layout, channels, vec![])
    }

    pub fn layout(&self) -> &DimensionLayout {
        &self.layout
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn unobserved(&self) -> &[usize] {
        &self.unobserved
    }

    pub fn names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn channel(&self, name: &str) -> Result<&Channel> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    pub fn channel_dim(&self, name: &str) -> Result<usize> {
        Ok(self.layout.sub_dim(&self.channel(name)?.factors))
    }

    /// Merges `members` into a single channel `name`, placed where the first
    /// member was.
    pub fn group(&self, members: &[&str], name: &str) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Layout("empty channel group".into()));
        }
        let mut factors = Vec::new();
        for m in members {
            factors.extend_from_slice(&self.channel(m)?.factors);
        }
        factors.sort_unstable();
        let mut channels = Vec::new();
        let mut placed = false;
        for ch in &self.channels {
            if members.contains(&ch.name.as_str()) {
                if !placed {
                    channels.push(Channel {
                        name: name.to_string(),
                        factors: factors.clone(),
                    });
                    placed = true;
                }
            } else {
                channels.push(ch.clone());
            }
        }
        Self::new(self.layout.clone(), channels, self.unobserved.clone())
    }

    /// The reading on the merged channel of [`ChannelLayout::group`] that
    /// corresponds to reading each member separately.
    pub fn group_reading(&self, members: &[&str], readings: &ReadingSet) -> Result<Effect> {
        let mut factors = Vec::new();
        for m in members {
            factors.extend_from_slice(&self.channel(m)?.factors);
        }
        factors.sort_unstable();
        let sub = DimensionLayout::new(factors.iter().map(|&f| self.layout.factor_dims()[f]).collect())?;
        let mut local: Vec<(&ComplexMatrix, Vec<usize>)> = Vec::new();
        for m in members {
            let pos = self
                .channel(m)?
                .factors
                .iter()
                .map(|f| factors.iter().position(|g| g == f).expect("collected above"))
                .collect();
            let a = readings.get(m).ok_or_else(|| Error::UnknownChannel((*m).to_string()))?;
            local.push((a.matrix(), pos));
        }
        let ops: Vec<(&ComplexMatrix, &[usize])> = local.iter().map(|(a, p)| (*a, p.as_slice())).collect();
        Ok(Effect::new_unchecked(embed(&ops, &sub)?))
    }
}

/// Readings keyed by channel name; iteration is lexicographic by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadingSet {
    readings: BTreeMap<String, Effect>,
}

impl ReadingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, channel: &str, a: Effect) -> Self {
        self.readings.insert(channel.to_string(), a);
        self
    }

    pub fn insert(&mut self, channel: &str, a: Effect) -> Option<Effect> {
        self.readings.insert(channel.to_string(), a)
    }

    pub fn remove(&mut self, channel: &str) -> Option<Effect> {
        self.readings.remove(channel)
    }

    pub fn get(&self, channel: &str) -> Option<&Effect> {
        self.readings.get(channel)
    }

    pub fn contains(&self, channel: &str) -> bool {
        self.readings.contains_key(channel)
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Effect)> {
        self.readings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn channels(&self) -> Vec<&str> {
        self.readings.keys().map(String::as_str).collect()
    }
}

impl FromIterator<(String, Effect)> for ReadingSet {
    fn from_iter<I: IntoIterator<Item = (String, Effect)>>(iter: I) -> Self {
        Self {
            readings: iter.into_iter().collect(),
        }
    }
}

/// Object dimension, probe state, coupling unitary and channel layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    object_dim: usize,
    probe_state: DensityOperator,
    s: ComplexMatrix,
    channels: ChannelLayout,
}

impl MeasurementModel {
    pub fn new(
        object_dim: usize,
        probe_state: DensityOperator,
        s: ComplexMatrix,
        channels: ChannelLayout,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let model = Self::new_unchecked(object_dim, probe_state, s, channels)?;
        let residual = model.s.unitarity_residual();
        if residual > tol.recon {
            return Err(Error::NotUnitary { residual });
        }
        Ok(model)
    }

    /// Checks dimensions only; `s` may be non-unitary. Used to build
    /// corrupted models for negative controls.
    pub fn new_unchecked(
        object_dim: usize,
        probe_state: DensityOperator,
        s: ComplexMatrix,
        channels: ChannelLayout,
    ) -> Result<Self> {
        if object_dim == 0 {
            return Err(Error::Layout("object dimension must be positive".into()));
        }
        let total = object_dim * probe_state.dim();
        if !s.is_square() || s.dim() != total {
            return Err(Error::DimensionMismatch {
                op: "MeasurementModel",
                expected: total,
                actual: s.dim(),
            });
        }
        if channels.layout().total_dim() != total {
            return Err(Error::DimensionMismatch {
                op: "MeasurementModel channel layout",
                expected: total,
                actual: channels.layout().total_dim(),
            });
        }
        Ok(Self {
            object_dim,
            probe_state,
            s,
            channels,
        })
    }

    /// Controlled-shift copy `|i>|j> -> |i>|j + i mod d>` with the probe in
    /// `|0>`; for `d = 2` this is CNOT. Channels are the object and the probe.
    pub fn copy(dim: usize, object_channel: &str, probe_channel: &str) -> Self {
        let channels = ChannelLayout::one_per_factor(vec![dim, dim], &[object_channel, probe_channel])
            .expect("two distinct names");
        Self {
            object_dim: dim,
            probe_state: DensityOperator::basis(dim, 0),
            s: shift_copy_unitary(dim),
            channels,
        }
    }

    pub fn object_dim(&self) -> usize {
        self.object_dim
    }

    pub fn probe_state(&self) -> &DensityOperator {
        &self.probe_state
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.s
    }

    pub fn channels(&self) -> &ChannelLayout {
        &self.channels
    }

    pub fn total_dim(&self) -> usize {
        self.s.dim()
    }

    pub fn with_channels(&self, channels: ChannelLayout) -> Result<Self> {
        Self::new_unchecked(self.object_dim, self.probe_state.clone(), self.s.clone(), channels)
    }

    /// `S (X (x) X_m) S^dagger`.
    pub fn final_state(&self, x: &DensityOperator) -> Result<DensityOperator> {
        if x.dim() != self.object_dim {
            return Err(Error::DimensionMismatch {
                op: "final_state",
                expected: self.object_dim,
                actual: x.dim(),
            });
        }
        let initial = tensor(x.matrix(), self.probe_state.matrix());
        let rho = &(&self.s * &initial) * &self.s.dagger();
        Ok(DensityOperator::new_unchecked(rho))
    }

    /// `(x) A^mu (x) I` on the final space.
    pub fn reading_operator(&self, readings: &ReadingSet) -> Result<ComplexMatrix> {
        let mut ops = Vec::with_capacity(readings.len());
        for (name, a) in readings.iter() {
            let ch = self.channels.channel(name)?;
            let want = self.channels.layout().sub_dim(&ch.factors);
            if a.dim() != want {
                return Err(Error::DimensionMismatch {
                    op: "reading",
                    expected: want,
                    actual: a.dim(),
                });
            }
            ops.push((a.matrix(), ch.factors.as_slice()));
        }
        embed(&ops, self.channels.layout())
    }

    /// Coincidence probability evaluated on an already computed final state.
    pub fn coincidence_in(&self, readings: &ReadingSet, final_state: &DensityOperator) -> Result<f64> {
        Ok(trace_product(&self.reading_operator(readings)?, final_state.matrix()))
    }

    /// `m(A_tot; X)` for an arbitrary effect on the whole final space.
    pub fn total_probability(&self, a_total: &Effect, x: &DensityOperator) -> Result<f64> {
        if a_total.dim() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                op: "total_probability",
                expected: self.total_dim(),
                actual: a_total.dim(),
            });
        }
        Ok(trace_product(a_total.matrix(), self.final_state(x)?.matrix()))
    }

    /// Applies another model to the single factor of channel `on_channel`.
    ///
    /// `second` must have an object dimension equal to that factor's, and its
    /// final layout must keep the object as factor 0; its remaining factors
    /// are appended as fresh factors. The second model's channels replace
    /// `on_channel`, with its factor 0 mapped onto the shared factor.
    pub fn compose(&self, on_channel: &str, second: &MeasurementModel, tol: &ToleranceConfig) -> Result<Self> {
        let target = self.channels.channel(on_channel)?;
        let [shared] = target.factors[..] else {
            return Err(Error::Layout(format!(
                "composition target `{on_channel}` must consist of one factor"
            )));
        };
        let shared_dim = self.channels.layout().factor_dims()[shared];
        let second_dims = second.channels.layout().factor_dims();
        if shared_dim != second.object_dim || second_dims[0] != second.object_dim {
            return Err(Error::DimensionMismatch {
                op: "compose",
                expected: shared_dim,
                actual: second.object_dim,
            });
        }
        let fresh = &second_dims[1..];
        if fresh.iter().product::<usize>() != second.probe_state.dim() {
            return Err(Error::Layout("second model must keep its object as factor 0".into()));
        }
        let n = self.channels.layout().num_factors();
        let layout = self.channels.layout().extended(fresh)?;
        let remap = |f: usize| if f == 0 { shared } else { n + f - 1 };

        let mut channels: Vec<Channel> = self
            .channels
            .channels()
            .iter()
            .filter(|c| c.name != on_channel)
            .cloned()
            .collect();
        for ch in second.channels.channels() {
            let mut factors: Vec<usize> = ch.factors.iter().map(|&f| remap(f)).collect();
            factors.sort_unstable();
            channels.push(Channel {
                name: ch.name.clone(),
                factors,
            });
        }
        let mut unobserved = self.channels.unobserved.clone();
        unobserved.extend(second.channels.unobserved.iter().map(|&f| remap(f)));
        let channels = ChannelLayout::new(layout.clone(), channels, unobserved)?;

        let fresh_dim = second.probe_state.dim();
        let first = tensor(&self.s, &ComplexMatrix::identity(fresh_dim));
        let second_factors: Vec<usize> = std::iter::once(shared).chain(n..n + fresh.len()).collect();
        let lifted = embed(&[(&second.s, &second_factors)], &layout)?;
        let s = &lifted * &first;
        let probe = DensityOperator::new_unchecked(tensor(self.probe_state.matrix(), second.probe_state.matrix()));
        Self::new(self.object_dim, probe, s, channels, tol)
    }
}

/// Permutation unitary `|i>|j> -> |i>|j + i mod d>`.
pub fn shift_copy_unitary(dim: usize) -> ComplexMatrix {
    let n = dim * dim;
    let mut s = ComplexMatrix::zeros(n, n);
    for i in 0..dim {
        for j in 0..dim {
            s[(i * dim + (j + i) % dim, i * dim + j)] = crate::linalg::ONE;
        }
    }
    s
}

pub fn final_state(model: &MeasurementModel, x: &DensityOperator) -> Result<DensityOperator> {
    model.final_state(x)
}

/// Probability that every reading in `readings` fires; 1 for the empty set.
pub fn m_coincidence(model: &MeasurementModel, readings: &ReadingSet, x: &DensityOperator) -> Result<f64> {
    model.coincidence_in(readings, &model.final_state(x)?)
}

/// Joint distribution of the binary outcomes of a set of channel readings.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceDistribution {
    /// Channel order of the outcome tuples (lexicographic).
    pub channels: Vec<String>,
    /// Outcome tuple (one bit per channel) to probability, in lexicographic tuple order.
    pub probabilities: BTreeMap<Vec<u8>, f64>,
}

impl CoincidenceDistribution {
    pub fn get(&self, outcome: &[u8]) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }

    /// Mass on tuples whose bits are not all equal.
    pub fn disagreement(&self) -> f64 {
        self.probabilities
            .iter()
            .filter(|(k, _)| k.iter().any(|&b| b != k[0]))
            .map(|(_, p)| p)
            .sum()
    }

    /// Marginal probability that channel `index` reads 1.
    pub fn marginal_one(&self, index: usize) -> f64 {
        self.probabilities
            .iter()
            .filter(|(k, _)| k[index] == 1)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Evaluates every outcome tuple, replacing a reading by its complement
/// where the outcome bit is 0.
pub fn coincidence_distribution(
    model: &MeasurementModel,
    readings: &ReadingSet,
    x: &DensityOperator,
) -> Result<CoincidenceDistribution> {
    if readings.is_empty() {
        return Err(Error::Premise("coincidence distribution needs at least one reading".into()));
    }
    let rho = model.final_state(x)?;
    let channels: Vec<String> = readings.channels().into_iter().map(str::to_string).collect();
    let k = channels.len();
    let mut probabilities = BTreeMap::new();
    for t in 0..(1usize << k) {
        let bits: Vec<u8> = (0..k).map(|j| ((t >> (k - 1 - j)) & 1) as u8).collect();
        let set: ReadingSet = readings
            .iter()
            .zip(&bits)
            .map(|((name, a), &b)| (name.to_string(), if b == 1 { a.clone() } else { complement(a) }))
            .collect();
        probabilities.insert(bits, model.coincidence_in(&set, &rho)?);
    }
    Ok(CoincidenceDistribution { channels, probabilities })
}

/// One measured property of the coincidence functional.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    /// Sample index that produced `max_residual`.
    pub worst_sample: Option<usize>,
}

impl AxiomCheck {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AxiomCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }
}

/// `m(;X) = 1`.
pub const AXIOM_NORMALIZATION: &str = "normalization";
/// `0 <= m <= 1` for channel readings and arbitrary final-space effects.
pub const AXIOM_BOUNDS: &str = "bounds";
/// Convex linearity in the object state.
pub const AXIOM_STATE_CONVEXITY: &str = "state-convexity";
/// Linearity over final-space observables, including complements.
pub const AXIOM_OBSERVABLE_LINEARITY: &str = "observable-linearity";
/// `m(A, B) + m(A, I - B) = m(A)` for disjoint channel sets.
pub const AXIOM_SEPARABILITY: &str = "separability";
/// The marginal over channel `nu` does not depend on which reading `nu` used.
pub const AXIOM_MARGINAL_INDEPENDENCE: &str = "marginal-independence";
/// Linearity in each channel reading.
pub const AXIOM_READING_LINEARITY: &str = "reading-linearity";
/// `m(A, B) <= m(A)`.
pub const AXIOM_MONOTONICITY: &str = "monotonicity";

const AXIOM_ORDER: [&str; 8] = [
    AXIOM_NORMALIZATION,
    AXIOM_BOUNDS,
    AXIOM_STATE_CONVEXITY,
    AXIOM_OBSERVABLE_LINEARITY,
    AXIOM_SEPARABILITY,
    AXIOM_MARGINAL_INDEPENDENCE,
    AXIOM_READING_LINEARITY,
    AXIOM_MONOTONICITY,
];

fn random_readings<R: Rng + ?Sized>(model: &MeasurementModel, rng: &mut R) -> ReadingSet {
    let layout = model.channels().layout();
    model
        .channels()
        .channels()
        .iter()
        .map(|c| (c.name.clone(), Effect::random(layout.sub_dim(&c.factors), rng)))
        .collect()
}

fn restrict(readings: &ReadingSet, keep: &[&str]) -> ReadingSet {
    readings
        .iter()
        .filter(|(n, _)| keep.contains(n))
        .map(|(n, a)| (n.to_string(), a.clone()))
        .collect()
}

/// Residuals of one sample, in [`AXIOM_ORDER`]; `None` where the check does
/// not apply (fewer than two channels).
fn axiom_sample(model: &MeasurementModel, seed: u64, index: usize) -> Result<[Option<f64>; 8]> {
    let mut rng = substream(seed, index as u64);
    let d = model.object_dim();
    let x = DensityOperator::random(d, &mut rng);
    let x_alt = DensityOperator::random(d, &mut rng);
    let t: f64 = rng.random();
    let x_mix = DensityOperator::new_unchecked(&x.matrix().scale_real(t) + &x_alt.matrix().scale_real(1.0 - t));

    let rho = model.final_state(&x)?;
    let rho_alt = model.final_state(&x_alt)?;
    let rho_mix = model.final_state(&x_mix)?;
    let m = |r: &ReadingSet, state: &DensityOperator| model.coincidence_in(r, state);
    let bound_violation = |p: f64| (-p).max(p - 1.0).max(0.0);

    let readings = random_readings(model, &mut rng);
    let names = model.channels().names();
    let mut out = [None; 8];

    out[0] = Some((m(&ReadingSet::new(), &rho)? - 1.0).abs());

    let a_tot = Effect::random(model.total_dim(), &mut rng);
    let b_tot = Effect::random(model.total_dim(), &mut rng);
    let p_a = trace_product(a_tot.matrix(), rho.matrix());
    let p_b = trace_product(b_tot.matrix(), rho.matrix());
    let subset: Vec<&str> = names.iter().copied().filter(|_| rng.random::<bool>()).collect();
    let mut bounds = bound_violation(p_a).max(bound_violation(m(&readings, &rho)?));
    bounds = bounds.max(bound_violation(m(&restrict(&readings, &subset), &rho)?));
    out[1] = Some(bounds);

    let convex = m(&readings, &rho_mix)? - t * m(&readings, &rho)? - (1.0 - t) * m(&readings, &rho_alt)?;
    out[2] = Some(convex.abs());

    let s: f64 = rng.random();
    let combo = a_tot.convex(s, &b_tot);
    let lin = trace_product(combo.matrix(), rho.matrix()) - s * p_a - (1.0 - s) * p_b;
    let compl = trace_product(complement(&a_tot).matrix(), rho.matrix()) - (1.0 - p_a);
    out[3] = Some(lin.abs().max(compl.abs()));

    // reading linearity on a random channel with the others read too
    let mu = names[rng.random_range(0..names.len())];
    let dim_mu = model.channels().channel_dim(mu)?;
    let b = Effect::random(dim_mu, &mut rng);
    let c = Effect::random(dim_mu, &mut rng);
    let u: f64 = rng.random();
    let mut with_b = readings.clone();
    with_b.insert(mu, b.clone());
    let mut with_c = readings.clone();
    with_c.insert(mu, c.clone());
    let mut with_combo = readings.clone();
    with_combo.insert(mu, b.convex(u, &c));
    let lin = m(&with_combo, &rho)? - u * m(&with_b, &rho)? - (1.0 - u) * m(&with_c, &rho)?;
    out[6] = Some(lin.abs());

    if names.len() >= 2 {
        let mut order = names.clone();
        order.shuffle(&mut rng);
        let nu = order[0];
        // mu side: one channel plus a random selection of the rest
        let mut side: Vec<&str> = vec![order[1]];
        side.extend(order[2..].iter().copied().filter(|_| rng.random::<bool>()));
        let base = restrict(&readings, &side);
        let a_nu = readings.get(nu).expect("all channels read").clone();
        let b_nu = Effect::random(a_nu.dim(), &mut rng);

        let marginal = m(&base, &rho)?;
        let split = |a: &Effect| -> Result<(f64, f64)> {
            let mut on = base.clone();
            on.insert(nu, a.clone());
            let mut off = base.clone();
            off.insert(nu, complement(a));
            Ok((m(&on, &rho)?, m(&off, &rho)?))
        };
        let (a_on, a_off) = split(&a_nu)?;
        let (b_on, b_off) = split(&b_nu)?;
        out[4] = Some((a_on + a_off - marginal).abs());
        out[5] = Some(((a_on + a_off) - (b_on + b_off)).abs());
        out[7] = Some((a_on - marginal).max(b_on - marginal).max(0.0));
    }
    Ok(out)
}

/// Samples random object states and readings and reports, per defining
/// property of the coincidence functional, the worst residual seen.
pub fn verify_axioms(model: &MeasurementModel, samples: usize, seed: u64, tol: &ToleranceConfig) -> Result<AxiomReport> {
    let per_sample = exec::map_indexed(samples, |i| axiom_sample(model, seed, i));
    let mut checks: Vec<AxiomCheck> = AXIOM_ORDER
        .iter()
        .map(|&name| AxiomCheck {
            name,
            max_residual: 0.0,
            tolerance: if name == AXIOM_MONOTONICITY { tol.psd } else { tol.prob },
            samples: 0,
            worst_sample: None,
        })
        .collect();
    for (i, res) in per_sample.into_iter().enumerate() {
        for (check, r) in checks.iter_mut().zip(res?) {
            if let Some(r) = r {
                check.samples += 1;
                if check.worst_sample.is_none() || r > check.max_residual {
                    check.max_residual = r;
                    check.worst_sample = Some(i);
                }
            }
        }
    }
    Ok(AxiomReport { checks })
}

/// The object-space effect `F` with `(F, X) = m(readings; X)`:
/// `Tr_probe[S^dagger O S (I (x) X_m)]` for the reading operator `O`.
pub fn induced_effect(model: &MeasurementModel, readings: &ReadingSet, tol: &ToleranceConfig) -> Result<Effect> {
    Effect::new(induced_operator(model, readings)?, tol)
}

/// [`induced_effect`] without validating the result.
pub fn induced_operator(model: &MeasurementModel, readings: &ReadingSet) -> Result<ComplexMatrix> {
    let o = model.reading_operator(readings)?;
    let pulled = &(&model.s.dagger() * &o) * &model.s;
    let weighted = &pulled * &tensor(&ComplexMatrix::identity(model.object_dim), model.probe_state.matrix());
    let initial = DimensionLayout::new(vec![model.object_dim, model.probe_state.dim()])?;
    partial_trace(&weighted, &initial, &[0])
}

/// State prepared on channel `nu`: the final state reduced to its factors.
pub fn output_state(model: &MeasurementModel, nu: &str, x: &DensityOperator) -> Result<DensityOperator> {
    let ch = model.channels.channel(nu)?;
    let rho = model.final_state(x)?;
    Ok(DensityOperator::new_unchecked(partial_trace(
        rho.matrix(),
        model.channels.layout(),
        &ch.factors,
    )?))
}

/// State prepared on channel `nu` given that reading `a_mu` fired on the
/// selection channel `mu`: the final state compressed by `sqrt(a_mu)` on
/// `mu`, reduced to `nu` and renormalised.
pub fn conditional_output_state(
    model: &MeasurementModel,
    nu: &str,
    mu: &str,
    a_mu: &Effect,
    x: &DensityOperator,
    tol: &ToleranceConfig,
) -> Result<DensityOperator> {
    if nu == mu {
        return Err(Error::Premise(format!("selection channel `{mu}` must differ from `{nu}`")));
    }
    let target = model.channels.channel(nu)?;
    let root = psd_sqrt(a_mu.matrix(), tol)?;
    let kraus = model.reading_operator(&ReadingSet::new().with(mu, Effect::new_unchecked(root)))?;
    let rho = model.final_state(x)?;
    let selected = &(&kraus * rho.matrix()) * &kraus;
    let probability = selected.trace().re;
    if probability <= tol.sel {
        return Err(Error::DegenerateSelection { probability });
    }
    let reduced = partial_trace(&selected, model.channels.layout(), &target.factors)?;
    Ok(DensityOperator::new_unchecked(reduced.scale_real(1.0 / probability)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::probability;
    use num_complex::Complex64;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn cnot() -> MeasurementModel {
        MeasurementModel::copy(2, "ch1", "ch2")
    }

    /// 0.6|0> + 0.8|1>
    fn phi() -> DensityOperator {
        DensityOperator::pure(&ComplexMatrix::from_real_rows(&[vec![0.6], vec![0.8]])).unwrap()
    }

    fn plus() -> Effect {
        Effect::projector(&ComplexMatrix::from_real_rows(&[vec![1.0], vec![1.0]])).unwrap()
    }

    fn p(i: usize) -> Effect {
        Effect::basis_projector(2, i)
    }

    #[test]
    fn channel_layout_validation() {
        let layout = DimensionLayout::new(vec![2, 2, 3]).unwrap();
        let ch = |n: &str, f: Vec<usize>| Channel {
            name: n.into(),
            factors: f,
        };
        assert!(ChannelLayout::new(layout.clone(), vec![ch("a", vec![0]), ch("b", vec![1])], vec![2]).is_ok());
        // overlap
        assert!(ChannelLayout::new(layout.clone(), vec![ch("a", vec![0, 1]), ch("b", vec![1, 2])], vec![]).is_err());
        // uncovered factor
        assert!(ChannelLayout::new(layout.clone(), vec![ch("a", vec![0]), ch("b", vec![1])], vec![]).is_err());
        // duplicate name, unsorted, empty
        assert!(ChannelLayout::new(layout.clone(), vec![ch("a", vec![0]), ch("a", vec![1, 2])], vec![]).is_err());
        assert!(ChannelLayout::new(layout.clone(), vec![ch("a", vec![2, 0]), ch("b", vec![1])], vec![]).is_err());
        assert!(ChannelLayout::new(layout, vec![ch("a", vec![]), ch("b", vec![0, 1, 2])], vec![]).is_err());
    }

    #[test]
    fn final_state_examples() {
        let m = cnot();
        let k = |i| ComplexMatrix::basis_ket(4, i);
        let r = m.final_state(&DensityOperator::basis(2, 0)).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::ket_bra(&k(0), &k(0))) < 1e-15);
        let r = m.final_state(&DensityOperator::basis(2, 1)).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::ket_bra(&k(3), &k(3))) < 1e-15);
        let r = m.final_state(&phi()).unwrap();
        let v = ComplexMatrix::from_real_rows(&[vec![0.6], vec![0.0], vec![0.0], vec![0.8]]);
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::ket_bra(&v, &v)) < 1e-15);
        assert!(m.final_state(&DensityOperator::basis(3, 0)).is_err());
    }

    #[test]
    fn coincidence_examples() {
        let m = cnot();
        let x = phi();
        let r = ReadingSet::new().with("ch2", p(0));
        assert!((m_coincidence(&m, &r, &x).unwrap() - 0.36).abs() < 1e-15);
        assert!((m_coincidence(&m, &ReadingSet::new(), &x).unwrap() - 1.0).abs() < 1e-15);
        let r = ReadingSet::new().with("ch1", plus()).with("ch2", plus());
        assert!((m_coincidence(&m, &r, &x).unwrap() - 0.49).abs() < 1e-14);

        let bad = ReadingSet::new().with("ch9", p(0));
        assert!(matches!(m_coincidence(&m, &bad, &x), Err(Error::UnknownChannel(_))));
        let bad = ReadingSet::new().with("ch1", Effect::identity(3));
        assert!(matches!(m_coincidence(&m, &bad, &x), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn distribution_examples() {
        let m = cnot();
        let r = ReadingSet::new().with("ch1", p(0)).with("ch2", p(0));
        let d = coincidence_distribution(&m, &r, &phi()).unwrap();
        assert!((d.get(&[1, 1]) - 0.36).abs() < 1e-15);
        assert!((d.get(&[0, 0]) - 0.64).abs() < 1e-15);
        assert!(d.get(&[1, 0]).abs() < 1e-15 && d.get(&[0, 1]).abs() < 1e-15);

        let d = coincidence_distribution(&m, &ReadingSet::new().with("ch1", Effect::identity(2)), &phi()).unwrap();
        assert_eq!(d.get(&[1]), 1.0);
        assert_eq!(d.get(&[0]), 0.0);

        let d = coincidence_distribution(&m, &r, &DensityOperator::maximally_mixed(2)).unwrap();
        assert!((d.get(&[1, 1]) - 0.5).abs() < 1e-15 && (d.get(&[0, 0]) - 0.5).abs() < 1e-15);
        assert!(d.disagreement().abs() < 1e-15);
        assert!(coincidence_distribution(&m, &ReadingSet::new(), &phi()).is_err());
    }

    #[test]
    fn axioms_hold_for_cnot() {
        let report = verify_axioms(&cnot(), 100, 3, &tol()).unwrap();
        assert!(report.passed(), "{report:?}");
        let mono = report.check(AXIOM_MONOTONICITY).unwrap();
        assert_eq!(mono.samples, 100);
    }

    #[test]
    fn non_unitary_coupling_is_flagged() {
        let mut s = shift_copy_unitary(2);
        for c in 0..4 {
            s[(0, c)] *= 1.1;
        }
        let t = tol();
        let channels = cnot().channels().clone();
        assert!(matches!(
            MeasurementModel::new(2, DensityOperator::basis(2, 0), s.clone(), channels.clone(), &t),
            Err(Error::NotUnitary { .. })
        ));
        let broken = MeasurementModel::new_unchecked(2, DensityOperator::basis(2, 0), s, channels).unwrap();
        let report = verify_axioms(&broken, 50, 3, &t).unwrap();
        assert!(!report.check(AXIOM_NORMALIZATION).unwrap().passed());
        assert!(!report.check(AXIOM_BOUNDS).unwrap().passed() || !report.check(AXIOM_SEPARABILITY).unwrap().passed());
    }

    #[test]
    fn induced_effect_examples() {
        let t = tol();
        let m = cnot();
        let f = induced_effect(&m, &ReadingSet::new(), &t).unwrap();
        assert!(f.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        let f = induced_effect(&m, &ReadingSet::new().with("ch2", p(0)), &t).unwrap();
        assert!(f.matrix().max_abs_diff(p(0).matrix()) < 1e-15);

        let mut rng = substream(9, 0);
        let readings = random_readings(&m, &mut rng);
        let f = induced_effect(&m, &readings, &t).unwrap();
        for _ in 0..20 {
            let x = DensityOperator::random(2, &mut rng);
            let lhs = probability(&f, &x).unwrap();
            assert!((lhs - m_coincidence(&m, &readings, &x).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn output_state_examples() {
        let t = tol();
        let m = cnot();
        let x = phi();
        let out = output_state(&m, "ch1", &x).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::real_diag(&[0.36, 0.64])) < 1e-15);
        let cond = conditional_output_state(&m, "ch1", "ch2", &p(1), &x, &t).unwrap();
        assert!(cond.matrix().max_abs_diff(p(1).matrix()) < 1e-12);
        let cond = conditional_output_state(&m, "ch1", "ch2", &Effect::identity(2), &x, &t).unwrap();
        assert!(cond.matrix().max_abs_diff(out.matrix()) < 1e-12);

        let err = conditional_output_state(&m, "ch1", "ch2", &p(1), &DensityOperator::basis(2, 0), &t);
        assert!(matches!(err, Err(Error::DegenerateSelection { .. })));
        assert!(conditional_output_state(&m, "ch1", "ch1", &p(1), &x, &t).is_err());
    }

    #[test]
    fn conditional_output_reproduces_conditional_probabilities() {
        let t = tol();
        let m = cnot();
        let mut rng = substream(10, 0);
        let x = DensityOperator::random(2, &mut rng);
        let a_mu = Effect::random(2, &mut rng);
        let cond = conditional_output_state(&m, "ch1", "ch2", &a_mu, &x, &t).unwrap();
        let sel = m_coincidence(&m, &ReadingSet::new().with("ch2", a_mu.clone()), &x).unwrap();
        for _ in 0..10 {
            let a_nu = Effect::random(2, &mut rng);
            let joint = m_coincidence(&m, &ReadingSet::new().with("ch1", a_nu.clone()).with("ch2", a_mu.clone()), &x)
                .unwrap();
            assert!((probability(&a_nu, &cond).unwrap() - joint / sel).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_builds_a_copy_chain() {
        let t = tol();
        let chain = cnot().compose("ch2", &MeasurementModel::copy(2, "ch2", "ch3"), &t).unwrap();
        assert_eq!(chain.channels().names(), vec!["ch1", "ch2", "ch3"]);
        assert_eq!(chain.total_dim(), 8);
        let rho = chain.final_state(&phi()).unwrap();
        let mut v = ComplexMatrix::zeros(8, 1);
        v[(0, 0)] = Complex64::new(0.6, 0.0);
        v[(7, 0)] = Complex64::new(0.8, 0.0);
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::ket_bra(&v, &v)) < 1e-15);
        assert!(cnot().compose("ch2", &MeasurementModel::copy(3, "ch2", "ch3"), &t).is_err());
        assert!(cnot().compose("ch2", &MeasurementModel::copy(2, "ch1", "ch3"), &t).is_err());
    }

    #[test]
    fn grouped_channels_read_like_their_members() {
        let t = tol();
        let chain = cnot().compose("ch2", &MeasurementModel::copy(2, "ch2", "ch3"), &t).unwrap();
        let grouped_layout = chain.channels().group(&["ch1", "ch3"], "outer").unwrap();
        assert_eq!(grouped_layout.channel("outer").unwrap().factors, vec![0, 2]);
        let grouped = chain.with_channels(grouped_layout).unwrap();

        let mut rng = substream(12, 0);
        let x = DensityOperator::random(2, &mut rng);
        let readings = random_readings(&chain, &mut rng);
        let outer = chain.channels().group_reading(&["ch1", "ch3"], &readings).unwrap();
        let regrouped = ReadingSet::new()
            .with("outer", outer)
            .with("ch2", readings.get("ch2").unwrap().clone());
        let lhs = m_coincidence(&grouped, &regrouped, &x).unwrap();
        let rhs = m_coincidence(&chain, &readings, &x).unwrap();
        assert!((lhs - rhs).abs() < 1e-13);
    }
}
