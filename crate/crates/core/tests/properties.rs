mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use objev::linalg::{partial_trace, tensor, ComplexMatrix, DimensionLayout};
use objev::measurement::{m_coincidence, ChannelLayout, MeasurementModel, ReadingSet};
use objev::quantum::{DensityOperator, Effect, Weights};
use objev::random::{haar_unitary, substream};
use objev::superposition::{coherent, is_insensitive, is_member, phase_grid, SuperpositionFamily};
use objev::theorems::{
    consistency_analysis_product, sample_trials, verify_objectivity, verify_probability_rule, verify_state_reduction,
    DiscriminationScenario,
};
use objev::ToleranceConfig;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

/// `|i>|j> -> |i>|(i + j) mod p>`
fn controlled_shift(d: usize, p: usize) -> ComplexMatrix {
    let n = d * p;
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..p {
            m[(i * p + (i + j) % p, i * p + j)] = Complex64::new(1.0, 0.0);
        }
    }
    m
}

fn column_projector(u: &ComplexMatrix, k: usize) -> Effect {
    let col: Vec<Complex64> = (0..u.rows()).map(|r| u[(r, k)]).collect();
    Effect::projector(&ComplexMatrix::ket(&col)).unwrap()
}

/// Random model `(V (x) W) C (U^dagger (x) I)` with random object basis `U`,
/// random local rotations `V`, `W` after the copy, and the two discriminated
/// states `U|0>`, `U|1>`. The premise is checked by the constructor, not
/// assumed.
fn random_discriminating(d: usize, p: usize, w1: f64, phase: f64, seed: u64) -> DiscriminationScenario {
    let t = tol();
    let mut rng = substream(seed, 0);
    let u = haar_unitary(d, &mut rng);
    let v = haar_unitary(d, &mut rng);
    let w = haar_unitary(p, &mut rng);
    let s = &(&tensor(&v, &w) * &controlled_shift(d, p)) * &tensor(&u.dagger(), &ComplexMatrix::identity(p));
    let channels = ChannelLayout::one_per_factor(vec![d, p], &["ch1", "ch2"]).unwrap();
    let model = MeasurementModel::new(d, DensityOperator::basis(p, 0), s, channels, &t).unwrap();
    let x1 = DensityOperator::new_unchecked(column_projector(&u, 0).matrix().clone());
    let x2 = DensityOperator::new_unchecked(column_projector(&u, 1).matrix().clone());
    let weights = Weights::new(w1, 1.0 - w1, &t).unwrap().with_phase(phase);
    let fam = SuperpositionFamily::new(x1, x2, weights, &t).unwrap();
    let readings = ReadingSet::new()
        .with("ch1", column_projector(&v, 0))
        .with("ch2", column_projector(&w, 0));
    DiscriminationScenario::new(model, fam, readings, &t).expect("constructed to discriminate")
}

fn weight_grid(w1: f64) -> Vec<Weights> {
    let t = tol();
    vec![
        Weights::new(w1, 1.0 - w1, &t).unwrap(),
        Weights::new(1.0, 0.0, &t).unwrap(),
        Weights::new(0.5, 0.5, &t).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn discriminating_scenarios_satisfy_every_theorem(
        d in 2usize..=3, p in 2usize..=3, w1 in 0.0f64..=1.0, phase in 0.0f64..6.3, seed in any::<u64>()
    ) {
        let t = tol();
        let s = random_discriminating(d, p, w1, phase, seed);
        let phases = phase_grid(4);
        let grid = weight_grid(w1);

        let rule = verify_probability_rule(&s, &grid, &phases, &t).unwrap();
        prop_assert!(rule.sweep.passed(), "{:?}", rule.sweep);

        let mut rng = substream(seed, 1);
        let others = vec![
            ReadingSet::new().with("ch1", Effect::random(d, &mut rng)),
            ReadingSet::new().with("ch2", Effect::random(p, &mut rng)),
        ];
        let reduction = verify_state_reduction(&s, &others, &grid, &phases, &t).unwrap();
        prop_assert!(reduction.passed(), "{:?}", reduction);

        let obj = verify_objectivity(&s, &grid, &phases, &t).unwrap();
        prop_assert!(obj.passed(), "{:?}", obj);

        let x = coherent(s.family(), &t).unwrap();
        let run = sample_trials(&s, &x, 2000, seed).unwrap();
        prop_assert_eq!(run.summary.disagreements, 0);
    }

    #[test]
    fn sensitivity_requires_nonzero_off_diagonals(
        w1 in 0.05f64..0.95, seed in any::<u64>(), pure_mask in 0u8..4
    ) {
        let t = tol();
        let s = random_discriminating(2, 2, w1, 0.0, seed);
        let mut rng = substream(seed, 2);
        let pick = |pure: bool, rng: &mut _| {
            if pure {
                Effect::projector(&objev::random::unit_vector(2, rng)).unwrap()
            } else {
                Effect::random(2, rng)
            }
        };
        let readings = ReadingSet::new()
            .with("ch1", pick(pure_mask & 1 == 1, &mut rng))
            .with("ch2", pick(pure_mask & 2 == 2, &mut rng));
        let r = consistency_analysis_product(&s, &readings, &phase_grid(8), &t).unwrap();
        prop_assert!(r.consistent, "{:?}", r);
    }

    #[test]
    fn coherent_states_and_mixtures_are_members(
        d in 2usize..=4, w1 in 0.0f64..=1.0, phase in 0.0f64..6.3, seed in any::<u64>()
    ) {
        let t = tol();
        let mut rng = substream(seed, 0);
        let u = haar_unitary(d, &mut rng);
        let x1 = DensityOperator::new_unchecked(column_projector(&u, 0).matrix().clone());
        let x2 = DensityOperator::new_unchecked(column_projector(&u, d - 1).matrix().clone());
        let fam = SuperpositionFamily::new(x1, x2, Weights::new(w1, 1.0 - w1, &t).unwrap().with_phase(phase), &t).unwrap();
        let x = coherent(&fam, &t).unwrap();
        prop_assert!(is_member(&x, &fam, &t).unwrap().is_member);
        prop_assert!(is_member(&fam.mixture(), &fam, &t).unwrap().is_member);
    }

    #[test]
    fn phase_sweep_and_off_diagonal_agree(w1 in 0.05f64..0.95, seed in any::<u64>()) {
        let t = tol();
        let fam = SuperpositionFamily::new(
            DensityOperator::basis(2, 0),
            DensityOperator::basis(2, 1),
            Weights::new(w1, 1.0 - w1, &t).unwrap(),
            &t,
        ).unwrap();
        let mut rng = substream(seed, 0);
        let a = Effect::random(2, &mut rng);
        let diag = Effect::new_unchecked(ComplexMatrix::real_diag(&[a.matrix()[(0, 0)].re, a.matrix()[(1, 1)].re]));
        for e in [a, diag] {
            let r = is_insensitive(&e, &fam, &phase_grid(8), &t).unwrap();
            prop_assert!(r.criteria_agree, "{:?}", r);
        }
    }

    #[test]
    fn partial_trace_of_product(da in 1usize..=3, db in 1usize..=3, seed in any::<u64>()) {
        let mut rng = substream(seed, 0);
        let a = DensityOperator::random(da, &mut rng);
        let b = DensityOperator::random(db, &mut rng);
        let ab = tensor(a.matrix(), b.matrix());
        let layout = DimensionLayout::new(vec![da, db]).unwrap();
        let ra = partial_trace(&ab, &layout, &[0]).unwrap();
        let rb = partial_trace(&ab, &layout, &[1]).unwrap();
        prop_assert!(ra.max_abs_diff(a.matrix()) < 1e-12);
        prop_assert!(rb.max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn coincidence_matches_state_vector_oracle(
        w1 in 0.0f64..=1.0, theta in 0.0f64..6.3, seed in any::<u64>(), probes in 1usize..=2
    ) {
        let mut model = MeasurementModel::copy(2, "ch1", "ch2");
        let mut names = vec!["ch1".to_string(), "ch2".to_string()];
        if probes == 2 {
            model = model.compose("ch2", &MeasurementModel::copy(2, "ch2", "ch3"), &tol()).unwrap();
            names.push("ch3".into());
        }
        let amps = common::qubit_amplitudes(w1, 1.0 - w1, theta);
        let x = DensityOperator::pure(&ComplexMatrix::ket(&amps)).unwrap();
        let psi = common::copy_chain_ket(&amps, probes);
        let mut rng = substream(seed, 0);
        let mut readings = ReadingSet::new();
        let mut ops = Vec::new();
        for name in &names {
            if rng.random_bool(0.7) {
                let e = Effect::random(2, &mut rng);
                ops.push(Some(e.matrix().to_rows()));
                readings.insert(name, e);
            } else {
                ops.push(None);
            }
        }
        let refs: Vec<Option<&common::Op>> = ops.iter().map(Option::as_ref).collect();
        let oracle = common::expect_product(&psi, 2, &refs);
        let m = m_coincidence(&model, &readings, &x).unwrap();
        prop_assert!((m - oracle).abs() < 1e-12, "m = {m}, oracle = {oracle}");
    }
}

#[test]
fn frequencies_converge_at_root_n() {
    let t = tol();
    let s = random_discriminating(2, 2, 0.36, 0.7, 11);
    let x = coherent(s.family(), &t).unwrap();
    let mut deviations = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let run = sample_trials(&s, &x, n, 99).unwrap();
        assert_eq!(run.summary.disagreements, 0);
        let sigma = objev::theorems::binomial_sigma(0.36, n);
        for f in &run.summary.frequency_one {
            assert!((f - 0.36).abs() <= 3.0 * sigma, "n = {n}: {f}");
        }
        deviations.push((run.summary.frequency_one[0] - 0.36).abs() / sigma);
    }
    // normalised deviations stay O(1) rather than growing with n
    assert!(deviations.iter().all(|&z| z <= 3.0), "{deviations:?}");
}
