//! Shipped scenarios and seeded random scenarios for fuzzing.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::quantum::DensityOperator;
use crate::random::{haar_unitary, substream};

use super::scenario::{
    BuiltinUnitary, ChannelSpec, FamilySpec, MultiwaySpec, OperatorSpec, SampleCounts, ScenarioFile, Suite, UnitarySpec,
};

pub const BUILTIN_NAMES: [&str; 4] = ["cnot2", "cnot3", "qutrit3", "cnot2-broken"];

fn channels(n: usize) -> Vec<ChannelSpec> {
    (0..n)
        .map(|k| ChannelSpec {
            name: format!("ch{}", k + 1),
            factors: vec![k],
        })
        .collect()
}

fn copy_chain(name: &str, dim: usize, probes: usize, description: &str) -> ScenarioFile {
    ScenarioFile {
        name: name.to_string(),
        description: Some(description.to_string()),
        object_dim: dim,
        probe_dims: vec![dim; probes],
        unitary: UnitarySpec::Builtin {
            name: if dim == 2 { BuiltinUnitary::Cnot } else { BuiltinUnitary::QutritShift },
        },
        probe_state: OperatorSpec::ground(),
        channels: channels(probes + 1),
        unobserved: Vec::new(),
        family: Some(FamilySpec {
            x1: OperatorSpec::Basis { index: 0 },
            x2: OperatorSpec::Basis { index: 1 },
            weights: [0.36, 0.64],
            phase: 0.0,
        }),
        discriminating: (1..=probes + 1)
            .map(|k| (format!("ch{k}"), OperatorSpec::Basis { index: 0 }))
            .collect(),
        multiway: None,
        weight_grid: crate::theorems::DEFAULT_WEIGHT_GRID.iter().map(|&(a, b)| [a, b]).collect(),
        phases: crate::superposition::DEFAULT_PHASES,
        suites: Vec::new(),
        seed: 42,
        trials: 100_000,
        samples: SampleCounts::default(),
        tolerances: None,
    }
}

pub fn builtin(name: &str) -> Option<ScenarioFile> {
    match name {
        "cnot2" => Some(copy_chain(
            "cnot2",
            2,
            1,
            "Qubit object copied onto one probe qubit by a CNOT; both channels read |0><0|.",
        )),
        "cnot3" => Some(copy_chain(
            "cnot3",
            2,
            2,
            "Qubit object copied along a chain of two probe qubits; three discriminating channels.",
        )),
        "qutrit3" => {
            let mut f = copy_chain(
                "qutrit3",
                3,
                2,
                "Qutrit object copied along two probe qutrits by controlled shifts; every channel filters the basis index.",
            );
            let basis: Vec<OperatorSpec> = (0..3).map(|i| OperatorSpec::Basis { index: i }).collect();
            f.multiway = Some(MultiwaySpec {
                states: basis.clone(),
                readings: (1..=3).map(|k| (format!("ch{k}"), basis.clone())).collect::<BTreeMap<_, _>>(),
                input: OperatorSpec::Diagonal {
                    values: vec![0.2, 0.3, 0.5],
                },
            });
            Some(f)
        }
        "cnot2-broken" => {
            let mut f = copy_chain(
                "cnot2-broken",
                2,
                1,
                "Negative control: the ch2 reading is |+><+|, which does not discriminate |0> from |1>.",
            );
            let s = std::f64::consts::FRAC_1_SQRT_2;
            f.discriminating.insert(
                "ch2".into(),
                OperatorSpec::Pure {
                    amplitudes: vec![[s, 0.0], [s, 0.0]],
                },
            );
            Some(f)
        }
        _ => None,
    }
}

/// A scenario with a Haar-random interaction and a random mixed probe
/// state, one channel per factor and no discrimination data. Runs the axiom
/// and induced-effect suites.
pub fn generate_random_scenario(object_dim: usize, probe_dims: &[usize], seed: u64) -> Result<ScenarioFile> {
    if object_dim < 2 {
        return Err(Error::Layout(format!("object_dim must be at least 2, got {object_dim}")));
    }
    if probe_dims.is_empty() || probe_dims.iter().any(|&d| d < 2) {
        return Err(Error::Layout(format!("probe dimensions must be at least 2, got {probe_dims:?}")));
    }
    let total = object_dim * probe_dims.iter().product::<usize>();
    let probe_dim: usize = probe_dims.iter().product();
    let mut rng = substream(seed, 0);
    let s = haar_unitary(total, &mut rng);
    let probe = DensityOperator::random(probe_dim, &mut rng);
    Ok(ScenarioFile {
        name: format!("random-{object_dim}x{}-{seed:016x}", probe_dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x")),
        description: None,
        object_dim,
        probe_dims: probe_dims.to_vec(),
        unitary: UnitarySpec::Matrix {
            entries: s.to_rows().iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
        },
        probe_state: OperatorSpec::from_matrix(probe.matrix()),
        channels: channels(probe_dims.len() + 1),
        unobserved: Vec::new(),
        family: None,
        discriminating: BTreeMap::new(),
        multiway: None,
        weight_grid: crate::theorems::DEFAULT_WEIGHT_GRID.iter().map(|&(a, b)| [a, b]).collect(),
        phases: crate::superposition::DEFAULT_PHASES,
        suites: vec![Suite::Axioms, Suite::InducedEffect],
        seed,
        trials: 0,
        samples: SampleCounts::default(),
        tolerances: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::scenario::{parse_scenario, to_json};

    #[test]
    fn builtins_build() {
        for name in BUILTIN_NAMES {
            let f = builtin(name).unwrap();
            assert_eq!(f.name, name);
            let parsed = parse_scenario(&to_json(&f)).unwrap();
            assert_eq!(parsed, f);
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn cnot3_unitary_is_the_chain() {
        let s = builtin("cnot3").unwrap().build(1.0).unwrap();
        // |100> -> |111>
        let u = s.model.unitary();
        assert!((u[(7, 4)].re - 1.0).abs() < 1e-15);
        assert!((u[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_scenarios() {
        let f = generate_random_scenario(2, &[2], 9).unwrap();
        assert_eq!(parse_scenario(&to_json(&f)).unwrap(), f);
        assert_eq!(generate_random_scenario(2, &[2], 9).unwrap(), f);
        assert_ne!(generate_random_scenario(2, &[2], 10).unwrap(), f);
        assert!(generate_random_scenario(1, &[2], 0).is_err());
        assert!(generate_random_scenario(2, &[], 0).is_err());
        let f = generate_random_scenario(3, &[2, 3], 1).unwrap();
        assert_eq!(f.build(1.0).unwrap().model.total_dim(), 18);
    }
}
