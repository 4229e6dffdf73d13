//! Non-Markovianity witnesses: the trace-distance (BLP) criterion and the
//! conditional past-future (CPF) correlator.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bath::{configurations, log_boltzmann, partition_function, BathParams};
use crate::dephasing::{decoherence_function, hermitian_eigenvalues, QubitDensity, SystemParams};
use crate::error::{invalid, Error, Result};

/// Largest bath enumerated by [`cpf_oracle`].
pub const MAX_CPF_ORACLE_SITES: usize = 20;

const HERMITIAN_TOL: f64 = 1e-12;

/// `(1/2) ||r1 - r2||_1`
pub fn trace_distance(r1: &QubitDensity, r2: &QubitDensity) -> Result<f64> {
    let d: Matrix2<C64> = r1.matrix() - r2.matrix();
    let defect = (d[(0, 1)] - d[(1, 0)].conj()).norm() + d[(0, 0)].im.abs() + d[(1, 1)].im.abs();
    if defect > HERMITIAN_TOL {
        return invalid(format!("difference is not Hermitian (defect {defect:e})"));
    }
    let [lo, hi] = hermitian_eigenvalues(&d);
    Ok((0.5 * (lo.abs() + hi.abs())).min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSeries {
    pub times: Vec<f64>,
    /// Trace distance `D(t)`.
    pub values: Vec<f64>,
    /// `sigma(t) = dD/dt`: central differences inside, one-sided at the ends.
    pub rates: Vec<f64>,
    /// Accumulated growth `sum max(D_{i+1} - D_i, 0)`.
    pub blp_measure: f64,
}

impl WitnessSeries {
    /// Whether the distance grows anywhere on the grid.
    pub fn has_revival(&self) -> bool {
        self.rates.iter().any(|&r| r > 0.0)
    }
}

/// `n` evenly spaced points on `[t_min, t_max]`, both ends included.
pub fn uniform_grid(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_min];
    }
    let step = (t_max - t_min) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                t_max
            } else {
                t_min + step * i as f64
            }
        })
        .collect()
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return invalid(format!("time grid needs at least 3 points (got {})", times.len()));
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(step > 0.0) || !step.is_finite() {
        return invalid("time grid must be strictly increasing and finite");
    }
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(w[1].abs()) {
            return invalid(format!("time grid is not uniform at index {i}"));
        }
    }
    Ok(step)
}

/// Trace distance between the evolved images of two initial qubit states.
pub fn blp_witness_series(
    pair: (&QubitDensity, &QubitDensity),
    bath: &BathParams,
    alpha: f64,
    times: &[f64],
) -> Result<WitnessSeries> {
    let step = check_uniform(times)?;
    let values = times
        .par_iter()
        .map(|&t| {
            let g = decoherence_function(bath, alpha, t);
            trace_distance(&pair.0.dephased(g), &pair.1.dephased(g))
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len();
    let rates = (0..n)
        .map(|i| match i {
            0 => (values[1] - values[0]) / step,
            i if i + 1 == n => (values[n - 1] - values[n - 2]) / step,
            i => (values[i + 1] - values[i - 1]) / (2.0 * step),
        })
        .collect();
    let blp_measure = values.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum();
    Ok(WitnessSeries {
        times: times.to_vec(),
        values,
        rates,
        blp_measure,
    })
}

/// Outcome of an `x`-basis projective measurement, `|+>` or `|->`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    /// Observable value `+1` / `-1`.
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    fn projector(self) -> Matrix2<C64> {
        let h = C64::new(0.5, 0.0);
        let o = h * self.sign();
        Matrix2::new(h, o, o, h)
    }

    fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpfResult {
    /// Interval between the first and second measurement.
    pub t: f64,
    /// Interval between the second and third measurement.
    pub s: f64,
    pub value_formula: f64,
    pub value_oracle: Option<f64>,
    pub conditioning_outcome: Outcome,
}

/// `C_pf(t, s) = f(t, s) - f(t) f(s)` with `f = Re Gamma` and
/// `f(t, s) = [f(t + s) + f(t - s)] / 2`.
///
/// This is the correlator conditioned on either middle outcome when the
/// state entering the first measurement has `<sigma_x> = 0` (for instance
/// `|0>`); see [`cpf_oracle`].
pub fn cpf_formula(bath: &BathParams, alpha: f64, t: f64, s: f64) -> Result<CpfResult> {
    check_intervals(t, s)?;
    let f = |x: f64| decoherence_function(bath, alpha, x).re;
    let value = if s == 0.0 || t == 0.0 {
        0.0
    } else {
        0.5 * (f(t + s) + f(t - s)) - f(t) * f(s)
    };
    Ok(CpfResult {
        t,
        s,
        value_formula: value,
        value_oracle: None,
        conditioning_outcome: Outcome::Plus,
    })
}

fn check_intervals(t: f64, s: f64) -> Result<()> {
    if !(t >= 0.0 && s >= 0.0) || !t.is_finite() || !s.is_finite() {
        return invalid(format!(
            "intervals must be finite and non-negative (t = {t}, s = {s})"
        ));
    }
    Ok(())
}

/// Gibbs weight of each magnetization sector, indexed by down-spin count.
fn sector_weights(bath: &BathParams) -> Result<Vec<f64>> {
    let n = bath.n();
    if n > MAX_CPF_ORACLE_SITES {
        return invalid(format!(
            "measurement oracle enumerates 2^N configurations; N <= {MAX_CPF_ORACLE_SITES} (got {n})"
        ));
    }
    let ln_z = partition_function(bath);
    let mut w = vec![0.0; n + 1];
    for cfg in configurations(n) {
        w[cfg.down_count() as usize] += (log_boltzmann(&cfg, bath)? - ln_z).exp();
    }
    Ok(w)
}

fn rotation(alpha: f64, m: f64, dt: f64) -> Matrix2<C64> {
    let phi = alpha * m * dt;
    Matrix2::new(
        C64::from_polar(1.0, -phi),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::from_polar(1.0, phi),
    )
}

/// Exact statistics of three `x`-basis measurements on the qubit.
///
/// The bath configuration is a conserved classical variable, so for each
/// magnetization sector the sequence is simulated with explicit projectors
/// and `2x2` propagators, collapsing only the qubit. Sector weights are
/// enumerated once, on construction.
#[derive(Clone, Debug)]
pub struct MeasurementOracle {
    sys: SystemParams,
    n: usize,
    weights: Vec<f64>,
}

impl MeasurementOracle {
    pub fn new(sys: &SystemParams, bath: &BathParams) -> Result<Self> {
        Ok(Self {
            sys: *sys,
            n: bath.n(),
            weights: sector_weights(bath)?,
        })
    }

    /// `P[x][y][z]` for measurements at times `0`, `t` and `t + s`
    /// (index 0 is `+`).
    pub fn distribution(&self, t: f64, s: f64) -> Result<[[[f64; 2]; 2]; 2]> {
        check_intervals(t, s)?;
        let rho0 = *self.sys.initial_state().matrix();
        let alpha = self.sys.alpha();
        let mut p = [[[0.0; 2]; 2]; 2];
        for (d, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let m = self.n as f64 - 2.0 * d as f64;
            let ut = rotation(alpha, m, t);
            let us = rotation(alpha, m, s);
            for x in Outcome::BOTH {
                let px = x.projector();
                let after_x = ut * (px * rho0 * px) * ut.adjoint();
                for y in Outcome::BOTH {
                    let py = y.projector();
                    let after_y = us * (py * after_x * py) * us.adjoint();
                    for z in Outcome::BOTH {
                        let pz = z.projector();
                        let prob = (pz * after_y).trace().re;
                        p[x.index()][y.index()][z.index()] += w * prob;
                    }
                }
            }
        }
        Ok(p)
    }

    /// `<O_z O_x>_y - <O_z>_y <O_x>_y`, conditioned on middle outcome `y`.
    pub fn correlator(&self, t: f64, s: f64, y: Outcome) -> Result<f64> {
        let p = self.distribution(t, s)?;
        let yi = y.index();
        let py: f64 = (0..2)
            .flat_map(|x| (0..2).map(move |z| (x, z)))
            .map(|(x, z)| p[x][yi][z])
            .sum();
        if py < 1e-12 {
            return Err(Error::UndefinedConditional { probability: py });
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let mut ozox = 0.0;
        let mut ox = 0.0;
        let mut oz = 0.0;
        for x in Outcome::BOTH {
            for z in Outcome::BOTH {
                let q = p[x.index()][yi][z.index()] / py;
                ozox += z.sign() * x.sign() * q;
                ox += x.sign() * q;
                oz += z.sign() * q;
            }
        }
        Ok(ozox - oz * ox)
    }
}

/// Joint distribution `P[x][y][z]`; see [`MeasurementOracle`].
pub fn measurement_distribution(
    sys: &SystemParams,
    bath: &BathParams,
    t: f64,
    s: f64,
) -> Result<[[[f64; 2]; 2]; 2]> {
    MeasurementOracle::new(sys, bath)?.distribution(t, s)
}

/// Correlator from the exact measurement statistics, with the formula value
/// attached for comparison.
pub fn cpf_oracle(sys: &SystemParams, bath: &BathParams, t: f64, s: f64, y: Outcome) -> Result<CpfResult> {
    let formula = cpf_formula(bath, sys.alpha(), t, s)?.value_formula;
    let value = MeasurementOracle::new(sys, bath)?.correlator(t, s, y)?;
    Ok(CpfResult {
        t,
        s,
        value_formula: formula,
        value_oracle: Some(value),
        conditioning_outcome: y,
    })
}
