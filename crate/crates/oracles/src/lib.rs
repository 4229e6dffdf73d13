//! Reference computations for the test suites.
//!
//! Nothing in here shares code with `dephasing-core`. Every routine works from
//! an explicit list of spins (`+1`/`-1`) per configuration, so the results act
//! as independent ground truth for the transfer-matrix and closed-form paths.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

pub mod dense;
pub mod precise;

/// Spin values of configuration `index` on an `n`-site chain.
///
/// Bit `i` of the index set means site `i` points down.
pub fn spins(index: u64, n: usize) -> Vec<i64> {
    (0..n)
        .map(|i| if (index >> i) & 1 == 1 { -1 } else { 1 })
        .collect()
}

/// Periodic bond sum and magnetization of a spin list.
pub fn bond_and_magnetization(s: &[i64]) -> (i64, i64) {
    let n = s.len();
    let bonds = (0..n).map(|i| s[i] * s[(i + 1) % n]).sum();
    let mag = s.iter().sum();
    (bonds, mag)
}

/// Exact configuration counts keyed by `(bond sum, magnetization)`.
#[derive(Clone, Debug)]
pub struct Histogram {
    pub n: usize,
    pub counts: BTreeMap<(i64, i64), u64>,
}

impl Histogram {
    pub fn enumerate(n: usize) -> Self {
        assert!((1..=24).contains(&n), "enumeration oracle supports 1..=24 sites");
        let mut counts = BTreeMap::new();
        for c in 0..(1u64 << n) {
            let key = bond_and_magnetization(&spins(c, n));
            *counts.entry(key).or_insert(0) += 1;
        }
        Self { n, counts }
    }
}

/// Plain double-precision Boltzmann sum `sum exp(beta*J*B + beta*h*M)`.
pub fn partition_f64(n: usize, j: f64, h: f64, beta: f64) -> f64 {
    (0..(1u64 << n))
        .map(|c| {
            let (b, m) = bond_and_magnetization(&spins(c, n));
            (beta * j * b as f64 + beta * h * m as f64).exp()
        })
        .sum()
}

/// Gibbs probabilities of every configuration, indexed like [`spins`].
pub fn gibbs_f64(n: usize, j: f64, h: f64, beta: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..(1u64 << n))
        .map(|c| {
            let (b, m) = bond_and_magnetization(&spins(c, n));
            (beta * j * b as f64 + beta * h * m as f64).exp()
        })
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// Decoherence function by direct double-precision summation over every
/// configuration. Only trustworthy where `|Gamma|` is not tiny.
pub fn decoherence_f64(n: usize, j: f64, h: f64, beta: f64, alpha: f64, t: f64) -> C64 {
    let p = gibbs_f64(n, j, h, beta);
    (0..(1u64 << n))
        .map(|c| {
            let (_, m) = bond_and_magnetization(&spins(c, n));
            p[c as usize] * C64::from_polar(1.0, -2.0 * alpha * t * m as f64)
        })
        .sum()
}
