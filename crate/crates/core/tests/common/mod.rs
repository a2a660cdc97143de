//! Independent state-vector oracle for copy-chain measurements.
//!
//! Works directly on amplitudes with explicit index loops; shares no code
//! with the crate's tensor, embed or partial-trace routines.

#![allow(dead_code)]

use num_complex::Complex64;

pub type Op = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Final ket of a copy chain with all probes starting in |0>:
/// `sum_i a_i |i>|i>...|i>` on `probes + 1` factors of dimension `a.len()`.
pub fn copy_chain_ket(a: &[Complex64], probes: usize) -> Vec<Complex64> {
    let d = a.len();
    let n = probes + 1;
    let mut psi = vec![c(0.0, 0.0); d.pow(n as u32)];
    for (i, &amp) in a.iter().enumerate() {
        let idx = (0..n).fold(0, |acc, _| acc * d + i);
        psi[idx] = amp;
    }
    psi
}

fn digits(mut x: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = x % d;
        x /= d;
    }
    out
}

/// `<psi| A_0 (x) A_1 (x) ... |psi>` with `None` standing for the identity.
pub fn expect_product(psi: &[Complex64], d: usize, ops: &[Option<&Op>]) -> f64 {
    let n = ops.len();
    let mut total = c(0.0, 0.0);
    for (x, px) in psi.iter().enumerate() {
        if px.norm() == 0.0 {
            continue;
        }
        let dx = digits(x, d, n);
        for (y, py) in psi.iter().enumerate() {
            if py.norm() == 0.0 {
                continue;
            }
            let dy = digits(y, d, n);
            let mut term = px.conj() * py;
            for k in 0..n {
                term *= match ops[k] {
                    Some(a) => a[dx[k]][dy[k]],
                    None => c(f64::from(u8::from(dx[k] == dy[k])), 0.0),
                };
            }
            total += term;
        }
    }
    total.re
}

/// Reduced density matrix of factor `k`.
pub fn reduced(psi: &[Complex64], d: usize, n: usize, k: usize) -> Op {
    let mut rho = vec![vec![c(0.0, 0.0); d]; d];
    for (x, px) in psi.iter().enumerate() {
        let dx = digits(x, d, n);
        for (y, py) in psi.iter().enumerate() {
            let dy = digits(y, d, n);
            if (0..n).all(|j| j == k || dx[j] == dy[j]) {
                rho[dx[k]][dy[k]] += px * py.conj();
            }
        }
    }
    rho
}

pub fn projector(v: &[Complex64]) -> Op {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter()
        .map(|a| v.iter().map(|b| a * b.conj() / (norm * norm)).collect())
        .collect()
}

pub fn plus() -> Op {
    projector(&[c(1.0, 0.0), c(1.0, 0.0)])
}

pub fn basis(d: usize, i: usize) -> Op {
    (0..d)
        .map(|r| (0..d).map(|s| c(f64::from(u8::from(r == i && s == i)), 0.0)).collect())
        .collect()
}

/// Amplitudes `sqrt(w1), sqrt(w2) e^{i theta}`.
pub fn qubit_amplitudes(w1: f64, w2: f64, theta: f64) -> Vec<Complex64> {
    vec![c(w1.sqrt(), 0.0), Complex64::from_polar(w2.sqrt(), theta)]
}

pub fn max_diff(a: &Op, b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}
