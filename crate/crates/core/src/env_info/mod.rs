//! Environment-side analysis: the joint state of the qubit and a bath
//! fragment, its entropies, partial information plots and spectrum
//! broadcast structure diagnostics.
//!
//! Both the coupling and the Gibbs state are diagonal in the bath's
//! computational basis, so `rho_SF` is block diagonal: one `2x2` qubit block
//! per fragment configuration. Diagonal block entries are `|a|^2 w` and
//! `|b|^2 w` with `w` the fragment's marginal Gibbs probability; only the
//! coherence carries time dependence.
//!
//! Sites are numbered `0..N`.

mod entropy;
mod joint;
mod sbs;

pub use entropy::{
    binary_deficit, mutual_information, mutual_information_of, pip_curve, three_entropies,
    von_neumann_entropy, PipCurve,
};
pub use joint::{
    fragment_decoherence_function, joint_state, joint_state_enumerated, joint_state_general,
    joint_state_noninteracting, BlockGroup, FragmentKey, JointBlockState, MAX_ENUMERATION_SITES,
    MAX_FRAGMENT_SITES,
};
pub use sbs::{sbs_diagnostics, SbsReport, SBS_TOL};

use crate::error::{invalid, Result};

/// The bath sites an observer has access to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentSpec {
    /// Sorted, distinct, each `< n`.
    sites: Vec<usize>,
    n: usize,
}

impl FragmentSpec {
    /// Sites `0..k`.
    pub fn leading(k: usize, n: usize) -> Result<Self> {
        if k > n {
            return invalid(format!("fragment of {k} sites in a chain of {n}"));
        }
        Ok(Self {
            sites: (0..k).collect(),
            n,
        })
    }

    /// The leading block closest to `fraction * n` sites.
    pub fn from_fraction(fraction: f64, n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return invalid(format!("fragment fraction must lie in [0, 1] (got {fraction})"));
        }
        Self::leading((fraction * n as f64).round() as usize, n)
    }

    pub fn from_sites(sites: &[usize], n: usize) -> Result<Self> {
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return invalid("fragment sites must be distinct");
        }
        if let Some(&bad) = sorted.iter().find(|&&s| s >= n) {
            return invalid(format!("fragment site {bad} outside a chain of {n}"));
        }
        Ok(Self { sites: sorted, n })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn chain_len(&self) -> usize {
        self.n
    }

    pub fn fraction(&self) -> f64 {
        self.sites.len() as f64 / self.n as f64
    }

    /// First site of the block when the sites form one contiguous run on the
    /// ring (wrapping allowed).
    pub fn cyclic_start(&self) -> Option<usize> {
        let k = self.sites.len();
        if k == 0 || k == self.n {
            return Some(0);
        }
        let start = *self
            .sites
            .iter()
            .find(|&&s| self.sites.binary_search(&((s + self.n - 1) % self.n)).is_err())?;
        (0..k)
            .all(|j| self.sites.binary_search(&((start + j) % self.n)).is_ok())
            .then_some(start)
    }

    /// Complement sites, ascending.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|s| self.sites.binary_search(s).is_err())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fragment_validation() {
        assert!(FragmentSpec::leading(11, 10).is_err());
        assert!(FragmentSpec::from_sites(&[1, 1], 10).is_err());
        assert!(FragmentSpec::from_sites(&[10], 10).is_err());
        assert!(FragmentSpec::from_fraction(1.5, 10).is_err());
        assert_eq!(FragmentSpec::from_fraction(0.5, 10).unwrap().len(), 5);
        assert_eq!(FragmentSpec::leading(0, 10).unwrap().fraction(), 0.0);
    }

    #[test]
    fn contiguity() {
        assert_eq!(FragmentSpec::leading(4, 10).unwrap().cyclic_start(), Some(0));
        assert_eq!(
            FragmentSpec::from_sites(&[9, 0, 1], 10).unwrap().cyclic_start(),
            Some(9)
        );
        assert_eq!(
            FragmentSpec::from_sites(&[3, 4], 10).unwrap().cyclic_start(),
            Some(3)
        );
        assert_eq!(
            FragmentSpec::from_sites(&[1, 3], 10).unwrap().cyclic_start(),
            None
        );
        assert_eq!(
            FragmentSpec::from_sites(&[2, 0], 4).unwrap().complement(),
            vec![1, 3]
        );
    }
}
