//! Central-qubit dynamics.
//!
//! The coupling `alpha sigma_z (x) sum_i sigma_z^i` commutes with both the
//! qubit and the bath Hamiltonians, so in the interaction picture every bath
//! configuration `chi` just rotates the qubit by the phase `2 alpha m(chi) t`.
//! Populations never change; the coherence picks up the decoherence function
//!
//! `Gamma(t) = sum_chi p(chi) e^{-2 i alpha t m(chi)} = Z_B(h - 2 i alpha t / beta) / Z_B(h)`.
//!
//! `rho_01(t) = a conj(b) Gamma(t)` for `|psi> = a|0> + b|1>`.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bath::{
    configurations, log_boltzmann, partition_function, reduced_log_partition, BathParams, LogComplex,
};
use crate::error::{invalid, Error, Result};

const STATE_TOL: f64 = 1e-12;

/// Largest bath for which [`kraus_channel`] builds its `2^N` operators.
pub const MAX_KRAUS_SITES: usize = 16;

/// Coupling and initial pure state of the central qubit.
///
/// `omega` is kept for completeness only: in the interaction picture the
/// qubit's own Hamiltonian drops out of the dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    alpha: f64,
    a: C64,
    b: C64,
    omega: f64,
}

impl SystemParams {
    pub fn new(alpha: f64, a: C64, b: C64, omega: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return invalid(format!("alpha must lie in [0, 1] (got {alpha})"));
        }
        if !omega.is_finite() || !a.is_finite() || !b.is_finite() {
            return invalid("amplitudes and omega must be finite");
        }
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > STATE_TOL {
            return invalid(format!("|a|^2 + |b|^2 = {norm}, expected 1"));
        }
        Ok(Self { alpha, a, b, omega })
    }

    /// `(|0> + |1>) / sqrt 2`
    pub fn plus(alpha: f64) -> Result<Self> {
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(alpha, r, r, 0.0)
    }

    /// `(|0> - |1>) / sqrt 2`
    pub fn minus(alpha: f64) -> Result<Self> {
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(alpha, r, -r, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn b(&self) -> C64 {
        self.b
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.a, self.b, self.omega)
    }

    pub fn initial_state(&self) -> QubitDensity {
        QubitDensity::pure(self.a, self.b)
    }
}

/// Validated 2x2 density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitDensity {
    m: Matrix2<C64>,
}

impl QubitDensity {
    /// Checks Hermiticity, unit trace and positivity to `1e-12`.
    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        let herm = (m[(0, 1)] - m[(1, 0)].conj()).norm() + m[(0, 0)].im.abs() + m[(1, 1)].im.abs();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not Hermitian (defect {herm:e})"
            )));
        }
        let tr = (m[(0, 0)] + m[(1, 1)]).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let d = Self { m };
        let [lo, _] = d.eigenvalues();
        if lo < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(d)
    }

    pub fn pure(a: C64, b: C64) -> Self {
        Self {
            m: Matrix2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj()),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Matrix2::new(
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.5, 0.0),
            ),
        }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.m
    }

    pub fn populations(&self) -> [f64; 2] {
        [self.m[(0, 0)].re, self.m[(1, 1)].re]
    }

    /// `<0|rho|1>`
    pub fn coherence(&self) -> C64 {
        self.m[(0, 1)]
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigenvalues(&self.m)
    }

    /// Multiplies the coherences by `gamma` (and its conjugate).
    pub fn dephased(&self, gamma: C64) -> Self {
        let mut m = self.m;
        m[(0, 1)] *= gamma;
        m[(1, 0)] *= gamma.conj();
        Self { m }
    }
}

/// Ascending eigenvalues of a Hermitian 2x2 matrix.
pub(crate) fn hermitian_eigenvalues(m: &Matrix2<C64>) -> [f64; 2] {
    let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let half_gap = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
    let r = half_gap.hypot(m[(0, 1)].norm());
    [mean - r, mean + r]
}

/// Decoherence function in log form; exact zeros come back as
/// [`LogComplex::ZERO`].
pub fn decoherence_log(bath: &BathParams, alpha: f64, t: f64) -> LogComplex {
    if t == 0.0 || alpha == 0.0 {
        return LogComplex::new(0.0, 0.0);
    }
    let theta = 2.0 * alpha * t;
    let n = bath.n();
    if bath.beta() == 0.0 {
        // uniform weights: every site contributes cos(2 alpha t)
        let c = theta.cos();
        if c.abs() <= 8.0 * f64::EPSILON * theta.abs().max(1.0) {
            return LogComplex::ZERO;
        }
        let phase = if c < 0.0 && n % 2 == 1 {
            std::f64::consts::PI
        } else {
            0.0
        };
        return LogComplex::new(n as f64 * c.abs().ln(), phase);
    }
    let k = bath.reduced_coupling();
    let eta_re = bath.reduced_field();
    let num = reduced_log_partition(k, C64::new(eta_re, -theta), n);
    let den = reduced_log_partition(k, C64::new(eta_re, 0.0), n);
    let g = num / den;
    LogComplex::new(g.ln_abs.min(0.0), g.phase)
}

/// `Gamma(t)`; `|Gamma| <= 1`, `Gamma(0) = 1`, `Gamma(-t) = conj Gamma(t)`.
pub fn decoherence_function(bath: &BathParams, alpha: f64, t: f64) -> C64 {
    decoherence_log(bath, alpha, t).to_complex()
}

/// `Gamma` on a time grid, evaluated in parallel.
pub fn decoherence_series(bath: &BathParams, alpha: f64, times: &[f64]) -> Vec<C64> {
    times
        .par_iter()
        .map(|&t| decoherence_function(bath, alpha, t))
        .collect()
}

/// Loschmidt amplitude of the bath; in this model it coincides with the
/// decoherence function.
pub fn loschmidt_amplitude(bath: &BathParams, alpha: f64, t: f64) -> C64 {
    decoherence_function(bath, alpha, t)
}

/// `-ln |Gamma(t)|`; `+inf` where `Gamma` vanishes.
pub fn decoherence_rate(bath: &BathParams, alpha: f64, t: f64) -> f64 {
    let g = decoherence_log(bath, alpha, t);
    if g.is_zero() {
        f64::INFINITY
    } else {
        (-g.ln_abs).max(0.0)
    }
}

/// Reduced qubit state at time `t`.
pub fn evolve_qubit(sys: &SystemParams, bath: &BathParams, t: f64) -> QubitDensity {
    sys.initial_state()
        .dephased(decoherence_function(bath, sys.alpha, t))
}

/// One operator per bath configuration,
/// `K_chi = sqrt(p(chi)) diag(e^{-i alpha m t}, e^{+i alpha m t})`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<Matrix2<C64>>,
}

impl KrausSet {
    pub fn operators(&self) -> &[Matrix2<C64>] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// `max |(sum K^dag K - I)_{ij}|`
    pub fn completeness_defect(&self) -> f64 {
        let sum: Matrix2<C64> = self
            .operators
            .iter()
            .map(|k| k.adjoint() * k)
            .fold(Matrix2::zeros(), |a, b| a + b);
        (sum - Matrix2::identity())
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &QubitDensity) -> Matrix2<C64> {
        self.operators
            .iter()
            .map(|k| k * rho.m * k.adjoint())
            .fold(Matrix2::zeros(), |a, b| a + b)
    }
}

/// Explicit operator-sum form of the channel at time `t`, applied to the
/// initial state of `sys`. Independent of the partition-function route apart
/// from the normalization `Z_B`.
pub fn kraus_channel(sys: &SystemParams, bath: &BathParams, t: f64) -> Result<(KrausSet, QubitDensity)> {
    let n = bath.n();
    if n > MAX_KRAUS_SITES {
        return invalid(format!(
            "the Kraus family has 2^N operators; N <= {MAX_KRAUS_SITES} supported (got {n})"
        ));
    }
    let ln_z = partition_function(bath);
    let operators = configurations(n)
        .map(|cfg| {
            let w = (0.5 * (log_boltzmann(&cfg, bath)? - ln_z)).exp();
            let phase = sys.alpha * cfg.magnetization() as f64 * t;
            Ok(Matrix2::new(
                C64::from_polar(w, -phase),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::from_polar(w, phase),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let set = KrausSet { operators };
    let defect = set.completeness_defect();
    if defect > 1e-10 {
        return Err(Error::InternalConsistency(format!(
            "Kraus completeness violated by {defect:e}"
        )));
    }
    let out = QubitDensity::new(set.apply(&sys.initial_state()))?;
    Ok((set, out))
}
