//! Seeded random instances: Ginibre matrices, Haar unitaries, states and
//! effects with full support.
//!
//! Every consumer draws from a [`substream`] keyed by `(seed, index)`, so
//! results do not depend on how work is split across threads.

use nalgebra::QR;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::tolerance::ToleranceConfig;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for work item `index` under `seed`.
///
/// ChaCha is counter based; distinct stream ids give non-overlapping sequences.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes `tag` into `seed` (SplitMix64 finaliser) for nested streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows x cols` matrix of i.i.d. standard complex normals.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::new(rows, cols, data).expect("finite normals")
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// R's diagonal absorbed into Q.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng).to_nalgebra();
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}

/// Random Hermitian matrix (GUE-like).
pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(dim, dim, rng).hermitian_part()
}

/// `G G^dagger / Tr[G G^dagger]` for Ginibre `G`: full rank almost surely.
pub fn density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let gg = &g * &g.dagger();
    let tr = gg.trace().re;
    gg.scale_real(1.0 / tr).hermitian_part()
}

/// Random Hermitian matrix whose spectrum is affinely mapped onto a random
/// sub-interval of `[0, 1]`.
pub fn effect_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let h = hermitian(dim, rng);
    let eig = hermitian_eig(&h, &ToleranceConfig::default()).expect("hermitian by construction");
    let (hi, lo) = (eig.values[0], eig.values[dim - 1]);
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    let (target_lo, target_hi) = (a.min(b), a.max(b));
    let span = hi - lo;
    eig.map_spectrum(|l| {
        let t = if span > 0.0 { (l - lo) / span } else { 0.5 };
        (target_lo + t * (target_hi - target_lo)).clamp(0.0, 1.0)
    })
    .hermitian_part()
}

/// Normalised random pure state vector.
pub fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let v = ginibre(dim, 1, rng);
    let n = v.frobenius_norm();
    v.scale_real(1.0 / n)
}
