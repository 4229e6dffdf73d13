use super::JointBlockState;
use crate::dephasing::SystemParams;

/// Default threshold for both SBS conditions.
pub const SBS_TOL: f64 = 1e-6;

/// Spectrum broadcast structure diagnostics in the `sigma_z` pointer basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SbsReport {
    /// Trace norm of the part of `rho_SF` that is off-diagonal in the
    /// pointer basis.
    pub coherence_trace_norm: f64,
    /// `(|a|^2, |b|^2)`.
    pub pointer_probabilities: [f64; 2],
    /// Uhlmann fidelity between the fragment states conditioned on the two
    /// pointer states; `0` means perfectly distinguishable.
    pub conditional_fidelity: f64,
    /// The same fidelity for each fragment site's marginal, in ascending
    /// site order.
    pub per_site_fidelities: Vec<f64>,
    /// Only one pointer state has weight.
    pub single_pointer: bool,
    pub sbs: bool,
    pub note: Option<String>,
}

impl SbsReport {
    /// Re-judges both conditions at another tolerance.
    pub fn is_sbs(&self, tol: f64) -> bool {
        self.single_pointer || (self.coherence_trace_norm <= tol && self.conditional_fidelity <= tol)
    }
}

fn fidelity_of_marginals(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(x, y)| (x * y).max(0.0).sqrt()).sum();
    (s * s).min(1.0)
}

/// Checks the two SBS conditions: no coherence between pointer sectors, and
/// orthogonal conditional fragment states. The conditional states are
/// diagonal, so the Uhlmann fidelity reduces to the classical Bhattacharyya
/// form.
pub fn sbs_diagnostics(state: &JointBlockState, sys: &SystemParams) -> SbsReport {
    let pops = [sys.a().norm_sqr(), sys.b().norm_sqr()];
    let coherence_trace_norm: f64 = 2.0 * state.groups().iter().map(|g| g.total[(0, 1)].norm()).sum::<f64>();
    if pops[0] < 1e-15 || pops[1] < 1e-15 {
        return SbsReport {
            coherence_trace_norm,
            pointer_probabilities: pops,
            conditional_fidelity: 0.0,
            per_site_fidelities: vec![0.0; state.fragment().len()],
            single_pointer: true,
            sbs: true,
            note: Some(
                "single pointer state: the structure holds trivially and the fidelities are set to 0".into(),
            ),
        };
    }
    let norm = (pops[0] * pops[1]).sqrt();
    let overlap: f64 = state
        .groups()
        .iter()
        .map(|g| {
            let (x, y) = (g.total[(0, 0)].re, g.total[(1, 1)].re);
            (x * y).max(0.0).sqrt()
        })
        .sum::<f64>()
        / norm;
    let conditional_fidelity = (overlap * overlap).min(1.0);
    let per_site_fidelities = (0..state.fragment().len())
        .map(|i| {
            let d0 = state.site_down_mass(i, 0) / pops[0];
            let d1 = state.site_down_mass(i, 1) / pops[1];
            fidelity_of_marginals(&[1.0 - d0, d0], &[1.0 - d1, d1])
        })
        .collect();
    let sbs = coherence_trace_norm <= SBS_TOL && conditional_fidelity <= SBS_TOL;
    SbsReport {
        coherence_trace_norm,
        pointer_probabilities: pops,
        conditional_fidelity,
        per_site_fidelities,
        single_pointer: false,
        sbs,
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathParams;
    use crate::env_info::{joint_state, FragmentSpec};
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;

    #[test]
    fn single_pointer_is_trivial() {
        let sys = SystemParams::new(0.1, C64::new(1.0, 0.0), C64::new(0.0, 0.0), 0.0).unwrap();
        let b = BathParams::new(1.0, 0.2, 1.0, 8).unwrap();
        let st = joint_state(&sys, &b, &FragmentSpec::leading(4, 8).unwrap(), 2.0).unwrap();
        let r = sbs_diagnostics(&st, &sys);
        assert_eq!(r.coherence_trace_norm, 0.0);
        assert!(r.single_pointer && r.sbs && r.note.is_some());
    }

    #[test]
    fn free_bath_never_distinguishes() {
        let sys = SystemParams::plus(0.1).unwrap();
        for (h, beta) in [(0.0, 1.0), (0.5, 4.0), (2.0, 0.1)] {
            let b = BathParams::new(0.0, h, beta, 10).unwrap();
            for t in [0.0, 3.0, PI / 0.4] {
                let st = joint_state(&sys, &b, &FragmentSpec::leading(5, 10).unwrap(), t).unwrap();
                let r = sbs_diagnostics(&st, &sys);
                assert!((r.conditional_fidelity - 1.0).abs() < 1e-12);
                assert!(r.per_site_fidelities.iter().all(|f| (f - 1.0).abs() < 1e-12));
                assert!(!r.sbs);
            }
        }
    }

    #[test]
    fn coherence_vanishes_at_quarter_period_without_field() {
        let sys = SystemParams::plus(0.1).unwrap();
        let b = BathParams::new(0.0, 0.0, 1.0, 10).unwrap();
        let st = joint_state(&sys, &b, &FragmentSpec::leading(5, 10).unwrap(), PI / 0.4).unwrap();
        let r = sbs_diagnostics(&st, &sys);
        assert!(r.coherence_trace_norm <= 1e-8);
        assert!(!r.sbs);
        assert!(!r.is_sbs(1e-3));
    }
}
