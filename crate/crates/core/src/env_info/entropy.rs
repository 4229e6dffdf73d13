use std::f64::consts::LN_2;

use rayon::prelude::*;

use super::{joint_state, FragmentSpec, JointBlockState};
use crate::bath::BathParams;
use crate::dephasing::{hermitian_eigenvalues, QubitDensity, SystemParams};
use crate::error::{Error, Result};

const CLAMP: f64 = 1e-14;
const NEGATIVE: f64 = -1e-9;

/// `-sum lambda log2 lambda` over `(eigenvalue summed over a group, ln of
/// group size)` pairs, each group holding identical eigenvalues.
fn grouped_entropy(values: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let mut s = 0.0;
    for (lam, ln_mult) in values {
        if lam < NEGATIVE {
            return Err(Error::InvalidState(format!("negative eigenvalue {lam:e}")));
        }
        if lam <= CLAMP {
            continue;
        }
        s -= lam * (lam.ln() - ln_mult);
    }
    Ok(s / LN_2)
}

/// Entropy in bits.
pub fn von_neumann_entropy(rho: &QubitDensity) -> Result<f64> {
    grouped_entropy(rho.eigenvalues().into_iter().map(|l| (l, 0.0)))
}

impl JointBlockState {
    /// `S(rho_SF)` in bits; the spectrum is the union of the block spectra.
    pub fn entropy(&self) -> Result<f64> {
        grouped_entropy(self.groups().iter().flat_map(|g| {
            hermitian_eigenvalues(&g.total)
                .into_iter()
                .map(move |l| (l, g.ln_multiplicity))
        }))
    }

    /// `S(rho_F)` in bits; the fragment marginal is diagonal.
    pub fn fragment_entropy(&self) -> Result<f64> {
        grouped_entropy(self.groups().iter().map(|g| (g.mass(), g.ln_multiplicity)))
    }

    /// `S(rho_S)` in bits.
    pub fn system_entropy(&self) -> Result<f64> {
        grouped_entropy(
            hermitian_eigenvalues(&self.system_matrix())
                .into_iter()
                .map(|l| (l, 0.0)),
        )
    }
}

/// `1 - H2((1 + r) / 2)`: information deficit of a qubit with Bloch
/// length `r`, in bits. Small `r` uses the series
/// `sum_k r^{2k} / (2k (2k - 1)) / ln 2` to avoid cancellation.
pub fn binary_deficit(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    if r < 0.05 {
        let r2 = r * r;
        let mut term = r2;
        let mut s = 0.0;
        for k in 1..=8 {
            let kk = 2.0 * k as f64;
            s += term / (kk * (kk - 1.0));
            term *= r2;
        }
        return s / LN_2;
    }
    let p = 0.5 * (1.0 + r);
    let q = 0.5 * (1.0 - r);
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    1.0 - h(p) - h(q)
}

/// Bloch length of a `2x2` Hermitian block after normalizing by its trace.
fn bloch_length(total: &nalgebra::Matrix2<num_complex::Complex64>) -> f64 {
    let tr = total[(0, 0)].re + total[(1, 1)].re;
    if tr <= 0.0 {
        return 0.0;
    }
    let z = total[(0, 0)].re - total[(1, 1)].re;
    (z.hypot(2.0 * total[(0, 1)].norm()) / tr).min(1.0)
}

/// `I(S:F)` in bits.
///
/// Because each fragment configuration carries a qubit block with the same
/// populations as `rho_S`, `S(rho_F)` cancels exactly against part of
/// `S(rho_SF)`, leaving
/// `I = sum_c w_c D(r_c) - D(r_S)` with `D` the [`binary_deficit`] and `r`
/// Bloch lengths. This keeps full relative precision when `I` is tiny.
pub fn mutual_information_of(state: &JointBlockState) -> f64 {
    if state.fragment().is_empty() {
        return 0.0;
    }
    let sys = binary_deficit(bloch_length(&state.system_matrix()));
    let frag: f64 = state
        .groups()
        .iter()
        .map(|g| g.mass() * binary_deficit(bloch_length(&g.total)))
        .sum();
    (frag - sys).max(0.0)
}

/// `(S(rho_S), S(rho_F), S(rho_SF))` in bits.
pub fn three_entropies(state: &JointBlockState) -> Result<(f64, f64, f64)> {
    Ok((
        state.system_entropy()?,
        state.fragment_entropy()?,
        state.entropy()?,
    ))
}

/// `I(S:F) = S(rho_S) + S(rho_F) - S(rho_SF)` for the fragment at time `t`.
pub fn mutual_information(sys: &SystemParams, bath: &BathParams, frag: &FragmentSpec, t: f64) -> Result<f64> {
    Ok(mutual_information_of(&joint_state(sys, bath, frag, t)?))
}

/// Mutual information against leading fragments of every size.
#[derive(Clone, Debug, PartialEq)]
pub struct PipCurve {
    /// `k / N` for `k = 0..=N`.
    pub fractions: Vec<f64>,
    /// Bits.
    pub informations: Vec<f64>,
    /// `S(rho_S)` in bits.
    pub system_entropy: f64,
}

impl PipCurve {
    /// `max_k |I_k + I_{N-k} - 2 S(rho_S)|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.informations.len() - 1;
        (0..=n)
            .map(|k| (self.informations[k] + self.informations[n - k] - 2.0 * self.system_entropy).abs())
            .fold(0.0, f64::max)
    }

    /// `N / k_min` with `k_min` the smallest fragment holding at least
    /// `(1 - delta) S(rho_S)`; `None` when no fragment does.
    pub fn redundancy(&self, delta: f64) -> Option<f64> {
        let n = self.informations.len() - 1;
        let target = (1.0 - delta) * self.system_entropy;
        self.informations
            .iter()
            .position(|&i| i >= target && i > 0.0)
            .map(|k| n as f64 / k as f64)
    }

    /// A classical plateau: the qubit is not (nearly) pure, and fragments of
    /// at most half the bath already carry 90% of `S(rho_S)`
    /// (redundancy at least 2).
    pub fn has_plateau(&self) -> bool {
        self.system_entropy >= 1e-3 && self.redundancy(0.1).is_some_and(|r| r >= 2.0)
    }
}

/// Partial information plot at time `t`, using fragments `0..k` for
/// `k = 0..=N`.
pub fn pip_curve(sys: &SystemParams, bath: &BathParams, t: f64) -> Result<PipCurve> {
    let n = bath.n();
    let informations = (0..=n)
        .into_par_iter()
        .map(|k| {
            let frag = FragmentSpec::leading(k, n)?;
            Ok(mutual_information_of(&joint_state(sys, bath, &frag, t)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let empty = joint_state(sys, bath, &FragmentSpec::leading(0, n)?, t)?;
    Ok(PipCurve {
        fractions: (0..=n).map(|k| k as f64 / n as f64).collect(),
        informations,
        system_entropy: empty.system_entropy()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;

    fn bath(j: f64, h: f64, beta: f64, n: usize) -> BathParams {
        BathParams::new(j, h, beta, n).unwrap()
    }

    #[test]
    fn qubit_entropy_limits() {
        let pure = SystemParams::plus(0.1).unwrap().initial_state();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-15);
        let mixed = QubitDensity::maximally_mixed();
        assert!((von_neumann_entropy(&mixed).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deficit_series_joins_direct_form() {
        let direct = |r: f64| {
            let p: f64 = 0.5 * (1.0 + r);
            let q = 1.0 - p;
            1.0 + p * p.log2() + q * q.log2()
        };
        for r in [0.05, 0.2, 0.7, 0.999] {
            assert!((binary_deficit(r) - direct(r)).abs() < 1e-14);
        }
        assert!((binary_deficit(0.0499999) - direct(0.0499999)).abs() < 1e-14);
        assert_eq!(binary_deficit(1.0), 1.0);
        assert!((binary_deficit(1e-10) - 1e-20 / (2.0 * LN_2)).abs() < 1e-34);
    }

    #[test]
    fn additive_on_products() {
        let sys = SystemParams::new(0.1, C64::new(0.6, 0.0), C64::new(0.8, 0.0), 0.0).unwrap();
        let b = bath(1.0, 0.4, 0.7, 8);
        let st = joint_state(&sys, &b, &FragmentSpec::leading(3, 8).unwrap(), 0.0).unwrap();
        let (ss, sf, ssf) = three_entropies(&st).unwrap();
        assert!(ss.abs() < 1e-10);
        assert!((ssf - ss - sf).abs() < 1e-10);
    }

    #[test]
    fn two_routes_agree() {
        let sys = SystemParams::plus(0.1).unwrap();
        for j in [0.0, 1.0] {
            let b = bath(j, 0.2, 0.8, 10);
            for k in [0, 3, 5, 10] {
                let st = joint_state(&sys, &b, &FragmentSpec::leading(k, 10).unwrap(), 3.0).unwrap();
                let (ss, sf, ssf) = three_entropies(&st).unwrap();
                assert!((ss + sf - ssf - mutual_information_of(&st)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pip_edges_and_monotonicity() {
        let sys = SystemParams::plus(0.1).unwrap();
        for j in [0.0, 1.0] {
            let b = bath(j, 0.5, 1.0, 10);
            let c = pip_curve(&sys, &b, 3.0).unwrap();
            assert_eq!(c.informations[0], 0.0);
            for w in c.informations.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
            // S(rho_SB) = S(rho_B) for a pure initial qubit, so I(S:B) = S(rho_S)
            assert!((c.informations[10] - c.system_entropy).abs() < 1e-9);
            let c0 = pip_curve(&sys, &b, 0.0).unwrap();
            assert!(c0.informations.iter().all(|&i| i.abs() <= 1e-12));
        }
    }

    #[test]
    fn product_at_recurrence() {
        let sys = SystemParams::plus(0.1).unwrap();
        let c = pip_curve(&sys, &bath(0.0, 0.3, 1.0, 10), PI / 0.2).unwrap();
        for &i in &c.informations[..10] {
            assert!(i.abs() < 1e-12);
        }
    }

    #[test]
    fn plateau_detection() {
        let flat = PipCurve {
            fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            informations: vec![0.0, 0.95, 1.0, 1.0, 2.0],
            system_entropy: 1.0,
        };
        assert_eq!(flat.redundancy(0.1), Some(4.0));
        assert!(flat.has_plateau());
        let ramp = PipCurve {
            fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            informations: vec![0.0, 0.1, 0.3, 1.2, 2.0],
            system_entropy: 1.0,
        };
        assert!(!ramp.has_plateau());
        assert!(ramp.antisymmetry_defect() > 0.0);
    }
}
