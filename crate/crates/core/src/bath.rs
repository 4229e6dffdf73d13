//! The Ising bath: parameters, microstates, Gibbs weights and partition
//! functions.
//!
//! The chain is periodic: `H_B = -J sum_i s_i s_{i+1} - h sum_i s_i` with
//! site `N` identified with site `0`. The source model never states its
//! boundary condition; periodic is the only choice under which the
//! two-eigenvalue power sum `lambda_+^N + lambda_-^N` is the exact partition
//! function, so it is the only boundary offered.
//!
//! Partition functions are evaluated through the 2x2 transfer matrix in
//! *reduced* variables: coupling `K = beta J` and reduced field `eta = beta h`,
//! possibly complex. The decoherence function needs `eta = beta h - 2 i alpha t`,
//! which stays finite at `beta = 0` where the displaced physical field
//! `h - 2 i alpha t / beta` does not.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};

/// Boundary condition of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
}

/// A uniform nearest-neighbour Ising chain at inverse temperature `beta`
/// (`k_B = hbar = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathParams {
    j: f64,
    h: f64,
    beta: f64,
    n: usize,
    boundary: Boundary,
}

impl BathParams {
    pub fn new(j: f64, h: f64, beta: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("bath must contain at least one spin");
        }
        if !j.is_finite() || !h.is_finite() {
            return invalid(format!("J and h must be finite (J = {j}, h = {h})"));
        }
        if !beta.is_finite() || beta < 0.0 {
            return invalid(format!("beta must be finite and non-negative (got {beta})"));
        }
        Ok(Self {
            j,
            h,
            beta,
            n,
            boundary: Boundary::Periodic,
        })
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// `beta J`
    pub fn reduced_coupling(&self) -> f64 {
        self.beta * self.j
    }

    /// `beta h`
    pub fn reduced_field(&self) -> f64 {
        self.beta * self.h
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.j, self.h, beta, self.n)
    }

    pub fn with_field(&self, h: f64) -> Result<Self> {
        Self::new(self.j, h, self.beta, self.n)
    }

    pub fn with_size(&self, n: usize) -> Result<Self> {
        Self::new(self.j, self.h, self.beta, n)
    }
}

/// One bath microstate. Bit `i` clear means `s_i = +1` (state `|0>`), set
/// means `s_i = -1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    bits: u64,
    n: u32,
}

impl SpinConfig {
    pub const MAX_SITES: usize = 64;

    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n == 0 || n > Self::MAX_SITES {
            return invalid(format!("spin configurations hold 1..=64 sites (got {n})"));
        }
        if n < 64 && bits >> n != 0 {
            return invalid(format!("bit pattern {bits:#b} does not fit in {n} sites"));
        }
        Ok(Self { bits, n: n as u32 })
    }

    pub fn all_up(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    /// Builds a configuration from spin values (`+1` / `-1`).
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits |= 1 << i,
                _ => return invalid(format!("spin values must be +1 or -1 (site {i} is {s})")),
            }
        }
        Self::new(bits, spins.len())
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn spin(&self, i: usize) -> i8 {
        if (self.bits >> i) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn down_count(&self) -> u32 {
        self.bits.count_ones()
    }

    /// `m = sum_i s_i = n - 2 (number of down spins)`
    pub fn magnetization(&self) -> i64 {
        self.n as i64 - 2 * self.down_count() as i64
    }

    /// `sum_i s_i s_{i+1}` with periodic closure.
    pub fn bond_sum(&self) -> i64 {
        let n = self.n;
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let rotated = ((self.bits >> 1) | (self.bits << (n - 1))) & mask;
        let walls = (self.bits ^ rotated).count_ones() as i64;
        n as i64 - 2 * walls
    }
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.n())
            .map(|i| if self.spin(i) > 0 { '+' } else { '-' })
            .collect();
        write!(f, "SpinConfig({s})")
    }
}

/// Every configuration of an `n`-site chain, in bit-pattern order.
pub fn configurations(n: usize) -> impl Iterator<Item = SpinConfig> {
    assert!((1..=40).contains(&n), "enumeration over 2^{n} configurations");
    (0..(1u64 << n)).map(move |bits| SpinConfig { bits, n: n as u32 })
}

/// A complex number held as `(ln |z|, arg z)`; partition functions overflow
/// `f64` already at moderate `beta N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    /// Wrapped to `(-pi, pi]`.
    pub phase: f64,
}

impl LogComplex {
    pub const ZERO: Self = Self {
        ln_abs: f64::NEG_INFINITY,
        phase: 0.0,
    };

    pub fn new(ln_abs: f64, phase: f64) -> Self {
        Self {
            ln_abs,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(z: C64) -> Self {
        if z == C64::new(0.0, 0.0) {
            return Self::ZERO;
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn to_complex(&self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(self.ln_abs.exp(), self.phase)
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs.exp()
    }
}

impl std::ops::Div for LogComplex {
    type Output = LogComplex;

    fn div(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex::new(self.ln_abs - rhs.ln_abs, self.phase - rhs.phase)
    }
}

impl std::ops::Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex::new(self.ln_abs + rhs.ln_abs, self.phase + rhs.phase)
    }
}

pub(crate) fn wrap_phase(p: f64) -> f64 {
    if p > -PI && p <= PI {
        return p;
    }
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `T[s, s'] = exp(K s s' + eta (s + s') / 2)` with rows/columns ordered
/// `(+1, -1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix {
    entries: [[C64; 2]; 2],
    coupling: f64,
    field: C64,
}

impl TransferMatrix {
    /// Transfer matrix of `bath` with its field replaced by `field` (complex
    /// fields allowed).
    pub fn new(bath: &BathParams, field: C64) -> Self {
        Self::from_reduced(bath.reduced_coupling(), field * bath.beta())
    }

    /// From reduced coupling `K = beta J` and reduced field `eta = beta h`.
    pub fn from_reduced(coupling: f64, field: C64) -> Self {
        let e = |x: C64| x.exp();
        let k = C64::new(coupling, 0.0);
        Self {
            entries: [[e(k + field), e(-k)], [e(-k), e(k - field)]],
            coupling,
            field,
        }
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.entries
    }

    /// Eigenvalues ordered so that `|lambda_0| >= |lambda_1|`.
    ///
    /// The smaller one is recovered from the determinant
    /// `e^{2K} - e^{-2K}` (independent of the field) rather than by
    /// subtraction.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let [[a, _], [_, d]] = self.entries;
        let det = C64::new(2.0 * (2.0 * self.coupling).sinh(), 0.0);
        let half_trace = (a + d) * 0.5;
        let root = (half_trace * half_trace - det).sqrt();
        let (p, m) = (half_trace + root, half_trace - root);
        let big = if p.norm() >= m.norm() { p } else { m };
        if big == C64::new(0.0, 0.0) {
            return [big, big];
        }
        [big, det / big]
    }

    pub fn reduced_field(&self) -> C64 {
        self.field
    }
}

/// Scale `s` such that every entry of `T e^{-s}` has modulus at most one.
fn transfer_scale(coupling: f64, eta: C64) -> f64 {
    (coupling + eta.re.abs()).max(-coupling)
}

/// Scaled eigenvalues `mu = lambda e^{-s}`, largest first, plus the scale.
pub(crate) fn scaled_eigenvalues(coupling: f64, eta: C64) -> ([C64; 2], f64) {
    let s = transfer_scale(coupling, eta);
    let k = C64::new(coupling - s, 0.0);
    let a = (k + eta).exp();
    let d = (k - eta).exp();
    // det(T) e^{-2s}
    let det = C64::new(
        (2.0 * coupling - 2.0 * s).exp() - (-2.0 * coupling - 2.0 * s).exp(),
        0.0,
    );
    let half_trace = (a + d) * 0.5;
    let root = (half_trace * half_trace - det).sqrt();
    let (p, m) = (half_trace + root, half_trace - root);
    let big = if p.norm() >= m.norm() { p } else { m };
    if big == C64::new(0.0, 0.0) {
        return ([big, big], s);
    }
    ([big, det / big], s)
}

/// `ln Tr T^n` for reduced coupling and (complex) reduced field.
///
/// Returns [`LogComplex::ZERO`] when the two eigenvalue powers cancel to
/// within rounding, i.e. at a Lee-Yang zero.
pub(crate) fn reduced_log_partition(coupling: f64, eta: C64, n: usize) -> LogComplex {
    let ([big, small], s) = scaled_eigenvalues(coupling, eta);
    if big == C64::new(0.0, 0.0) {
        return LogComplex::ZERO;
    }
    let ratio = small / big;
    let tail = C64::new(1.0, 0.0) + powi(ratio, n);
    let cancellation = 8.0 * (n as f64 + 1.0) * f64::EPSILON;
    if ratio.norm() > 0.5 && tail.norm() <= cancellation {
        return LogComplex::ZERO;
    }
    let nf = n as f64;
    let ln_big = big.ln();
    let tail_ln = tail.ln();
    LogComplex::new(nf * s + nf * ln_big.re + tail_ln.re, nf * ln_big.im + tail_ln.im)
}

pub(crate) fn powi(z: C64, n: usize) -> C64 {
    if n <= i32::MAX as usize {
        z.powi(n as i32)
    } else {
        (z.ln() * n as f64).exp()
    }
}

/// `E(chi) = -J sum s_i s_{i+1} - h sum s_i`.
pub fn energy(cfg: &SpinConfig, bath: &BathParams) -> Result<f64> {
    check_size(cfg, bath)?;
    Ok(-bath.j * cfg.bond_sum() as f64 - bath.h * cfg.magnetization() as f64)
}

fn check_size(cfg: &SpinConfig, bath: &BathParams) -> Result<()> {
    if cfg.n() != bath.n {
        return invalid(format!(
            "configuration has {} sites but the bath has {}",
            cfg.n(),
            bath.n
        ));
    }
    Ok(())
}

/// `ln Z_B` for the real field of `bath`.
pub fn partition_function(bath: &BathParams) -> f64 {
    reduced_partition_function(bath, C64::new(bath.reduced_field(), 0.0)).ln_abs
}

/// `Z_B` with the physical field replaced by a complex `field`.
///
/// At `beta = 0` every field gives `2^N`; use
/// [`reduced_partition_function`] to reach complex *reduced* fields there.
pub fn complex_partition_function(bath: &BathParams, field: C64) -> LogComplex {
    reduced_partition_function(bath, field * bath.beta())
}

/// `Tr T^N` as a function of the reduced field `eta = beta * field`.
pub fn reduced_partition_function(bath: &BathParams, reduced_field: C64) -> LogComplex {
    reduced_log_partition(bath.reduced_coupling(), reduced_field, bath.n)
}

/// Gibbs probability `exp(-beta E(chi)) / Z_B`.
pub fn gibbs_weight(cfg: &SpinConfig, bath: &BathParams) -> Result<f64> {
    check_size(cfg, bath)?;
    log_boltzmann(cfg, bath).map(|lw| (lw - partition_function(bath)).exp())
}

/// `-beta E(chi)`; exact integer bond and magnetization sums keep this
/// finite at `beta = 0`.
pub(crate) fn log_boltzmann(cfg: &SpinConfig, bath: &BathParams) -> Result<f64> {
    check_size(cfg, bath)?;
    Ok(bath.reduced_coupling() * cfg.bond_sum() as f64 + bath.reduced_field() * cfg.magnetization() as f64)
}

/// `Tr rho_B^2 = Z(2 beta) / Z(beta)^2`.
pub fn bath_purity(bath: &BathParams) -> f64 {
    let k = bath.reduced_coupling();
    let eta = C64::new(bath.reduced_field(), 0.0);
    let z1 = reduced_log_partition(k, eta, bath.n).ln_abs;
    let z2 = reduced_log_partition(2.0 * k, eta * 2.0, bath.n).ln_abs;
    (z2 - 2.0 * z1).exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bath(j: f64, h: f64, beta: f64, n: usize) -> BathParams {
        BathParams::new(j, h, beta, n).unwrap()
    }

    fn enumerate_ln_z(b: &BathParams) -> f64 {
        configurations(b.n())
            .map(|c| log_boltzmann(&c, b).unwrap().exp())
            .sum::<f64>()
            .ln()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(BathParams::new(1.0, 0.0, 1.0, 0).is_err());
        assert!(BathParams::new(1.0, 0.0, -0.1, 4).is_err());
        assert!(BathParams::new(f64::NAN, 0.0, 1.0, 4).is_err());
        assert!(BathParams::new(1.0, f64::INFINITY, 1.0, 4).is_err());
    }

    #[test]
    fn energies_by_hand() {
        let up = SpinConfig::all_up(4).unwrap();
        assert_eq!(energy(&up, &bath(1.0, 0.0, 1.0, 4)).unwrap(), -4.0);
        assert_eq!(energy(&up, &bath(0.0, 1.0, 1.0, 4)).unwrap(), -4.0);
        let uudd = SpinConfig::from_spins(&[1, 1, -1, -1]).unwrap();
        assert_eq!(uudd.bond_sum(), 0);
        assert_eq!(uudd.magnetization(), 0);
        assert_eq!(energy(&uudd, &bath(1.0, 0.5, 1.0, 4)).unwrap(), 0.0);
    }

    #[test]
    fn energy_size_mismatch() {
        let c = SpinConfig::all_up(3).unwrap();
        assert!(matches!(
            energy(&c, &bath(1.0, 0.0, 1.0, 4)),
            Err(crate::Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_site_closes_on_itself() {
        let c = SpinConfig::from_spins(&[-1]).unwrap();
        assert_eq!(c.bond_sum(), 1);
        let b = bath(0.7, 0.3, 1.1, 1);
        assert!((partition_function(&b) - enumerate_ln_z(&b)).abs() < 1e-14);
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        for n in [1, 5, 40] {
            let b = bath(1.3, -0.4, 0.0, n);
            assert!((partition_function(&b) - n as f64 * 2f64.ln()).abs() < 1e-12);
        }
        let b = bath(1.0, 0.2, 0.0, 6);
        for c in configurations(6) {
            assert!((gibbs_weight(&c, &b).unwrap() - 1.0 / 64.0).abs() < 1e-16);
        }
    }

    #[test]
    fn free_spins_factorize() {
        for n in 1..=12 {
            let b = bath(0.0, 0.37, 1.9, n);
            let expected = n as f64 * (2.0 * (1.9f64 * 0.37).cosh()).ln();
            assert!((partition_function(&b) - expected).abs() < 1e-12 * expected.abs().max(1.0));
            assert!((partition_function(&b) - enumerate_ln_z(&b)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_two_eigenvalues() {
        let b = bath(1.0, 0.0, 1.0, 4);
        let expected = ((2.0 * 1f64.cosh()).powi(4) + (2.0 * 1f64.sinh()).powi(4)).ln();
        assert!((partition_function(&b) - expected).abs() < 1e-14);
        assert!((enumerate_ln_z(&b) - expected).abs() < 1e-14);
    }

    #[test]
    fn complex_field_reduces_to_real() {
        let b = bath(0.8, 0.3, 1.2, 9);
        let z = complex_partition_function(&b, C64::new(0.3, 0.0));
        assert!((z.ln_abs - partition_function(&b)).abs() < 1e-12);
        assert_eq!(z.phase, 0.0);
    }

    #[test]
    fn complex_free_field() {
        let b = bath(0.0, 0.2, 0.9, 7);
        let field = C64::new(0.2, -0.35);
        let got = complex_partition_function(&b, field).to_complex();
        let expected = (2.0 * (field * 0.9).cosh()).powi(7);
        assert!((got - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn transfer_matrix_symmetry_and_eigenvalues() {
        let t = TransferMatrix::from_reduced(0.6, C64::new(0.25, -0.8));
        let e = t.entries();
        assert_eq!(e[0][1], e[1][0]);
        let [l0, l1] = t.eigenvalues();
        assert!(l0.norm() >= l1.norm());
        let tr = e[0][0] + e[1][1];
        let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
        assert!((l0 + l1 - tr).norm() < 1e-13);
        assert!((l0 * l1 - det).norm() < 1e-13);
        let real = TransferMatrix::from_reduced(0.6, C64::new(0.25, 0.0));
        for row in real.entries() {
            for x in row {
                assert!(x.re > 0.0 && x.im == 0.0);
            }
        }
    }

    #[test]
    fn large_beta_does_not_overflow() {
        let b = bath(1.0, 0.5, 2000.0, 100);
        let ln_z = partition_function(&b);
        // ground state energy -N (J + h)
        assert!((ln_z - 2000.0 * 100.0 * 1.5).abs() < 1e-6 * ln_z);
        assert!((bath_purity(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_weights_normalized() {
        let b = bath(0.9, -0.3, 0.7, 10);
        let total: f64 = configurations(10).map(|c| gibbs_weight(&c, &b).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_dominates_at_low_temperature() {
        let b = bath(1.0, 0.5, 60.0, 8);
        let w = gibbs_weight(&SpinConfig::all_up(8).unwrap(), &b).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purity_limits() {
        assert!((bath_purity(&bath(1.0, 0.3, 0.0, 7)) - 2f64.powi(-7)).abs() < 1e-15);
        let b = bath(0.0, 0.4, 1.5, 9);
        let per_site = (1.0 + (1.5f64 * 0.4).tanh().powi(2)) / 2.0;
        assert!((bath_purity(&b) - per_site.powi(9)).abs() < 1e-13);
        assert!((bath_purity(&bath(0.0, 1.0, 50.0, 9)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_complex_roundtrip() {
        let z = C64::new(-0.3, 2.0);
        let lz = LogComplex::from_complex(z);
        assert!((lz.to_complex() - z).norm() < 1e-15);
        assert!(LogComplex::from_complex(C64::new(0.0, 0.0)).is_zero());
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
    }
}
