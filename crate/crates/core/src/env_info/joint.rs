use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::FragmentSpec;
use crate::bath::{partition_function, powi, BathParams};
use crate::dephasing::{decoherence_function, hermitian_eigenvalues, QubitDensity, SystemParams};
use crate::error::{invalid, Result};

/// Largest chain the brute-force construction will enumerate.
pub const MAX_ENUMERATION_SITES: usize = 24;

/// Largest fragment resolved configuration by configuration.
pub const MAX_FRAGMENT_SITES: usize = 24;

/// Which fragment configurations a block group stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FragmentKey {
    /// A single configuration; bit `i` set means the fragment's `i`-th site
    /// (in ascending site order) points down.
    Pattern(u64),
    /// Every configuration with this many down spins; all share one block.
    DownCount(usize),
}

/// Configurations that share one qubit block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockGroup {
    pub key: FragmentKey,
    /// Natural log of the number of configurations in the group.
    pub ln_multiplicity: f64,
    /// Sum of the qubit blocks of all members.
    pub total: Matrix2<C64>,
}

impl BlockGroup {
    fn new(key: FragmentKey, ln_multiplicity: f64, diag: [f64; 2], off: C64) -> Self {
        Self {
            key,
            ln_multiplicity,
            total: Matrix2::new(C64::new(diag[0], 0.0), off, off.conj(), C64::new(diag[1], 0.0)),
        }
    }

    /// Probability of finding the fragment in any member configuration.
    pub fn mass(&self) -> f64 {
        self.total[(0, 0)].re + self.total[(1, 1)].re
    }

    /// Block of a single member configuration.
    pub fn member_block(&self) -> Matrix2<C64> {
        self.total * C64::new((-self.ln_multiplicity).exp(), 0.0)
    }
}

/// Block-diagonal `rho_SF`. Hermitian by construction: only the upper
/// coherence is computed and the lower one is its conjugate.
#[derive(Clone, Debug, PartialEq)]
pub struct JointBlockState {
    fragment: FragmentSpec,
    groups: Vec<BlockGroup>,
}

impl JointBlockState {
    pub fn fragment(&self) -> &FragmentSpec {
        &self.fragment
    }

    pub fn groups(&self) -> &[BlockGroup] {
        &self.groups
    }

    pub fn trace(&self) -> f64 {
        self.groups.iter().map(BlockGroup::mass).sum()
    }

    /// Fragment traced out.
    pub fn system_matrix(&self) -> Matrix2<C64> {
        self.groups
            .iter()
            .map(|g| g.total)
            .fold(Matrix2::zeros(), |a, b| a + b)
    }

    pub fn system_state(&self) -> Result<QubitDensity> {
        QubitDensity::new(self.system_matrix())
    }

    /// Qubit block of one fragment configuration.
    pub fn block_for_pattern(&self, pattern: u64) -> Option<Matrix2<C64>> {
        let downs = pattern.count_ones() as usize;
        self.groups.iter().find_map(|g| match g.key {
            FragmentKey::Pattern(p) if p == pattern => Some(g.total),
            FragmentKey::DownCount(d) if d == downs => Some(g.member_block()),
            _ => None,
        })
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| hermitian_eigenvalues(&g.member_block())[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Marginal probability that fragment site `i` (in ascending order)
    /// points down, given pointer state `n`, weighted by that pointer's
    /// population (unnormalized).
    pub(crate) fn site_down_mass(&self, i: usize, pointer: usize) -> f64 {
        let k = self.fragment.len() as f64;
        self.groups
            .iter()
            .map(|g| {
                let share = match g.key {
                    FragmentKey::Pattern(p) => ((p >> i) & 1) as f64,
                    FragmentKey::DownCount(d) => d as f64 / k,
                };
                share * g.total[(pointer, pointer)].re
            })
            .sum()
    }
}

fn ln_choose_table(k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for d in 1..=k {
        acc += ((k + 1 - d) as f64).ln() - (d as f64).ln();
        out.push(acc);
    }
    out
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn check_fragment(bath: &BathParams, frag: &FragmentSpec) -> Result<()> {
    if frag.chain_len() != bath.n() {
        return invalid(format!(
            "fragment is defined on {} sites but the bath has {}",
            frag.chain_len(),
            bath.n()
        ));
    }
    Ok(())
}

/// Per-site coherence factor of a traced-out free spin,
/// `cosh(beta h - 2 i alpha t) / cosh(beta h) = cos(2 alpha t) - i tanh(beta h) sin(2 alpha t)`.
fn free_site_factor(bath: &BathParams, alpha: f64, t: f64) -> C64 {
    let (s, c) = (2.0 * alpha * t).sin_cos();
    C64::new(c, -bath.reduced_field().tanh() * s)
}

/// `Gamma_F(t)` for a non-interacting bath: the coherence factor contributed
/// by the `N - fN` sites outside the fragment.
///
/// This is the sign obtained by tracing the joint state; the opposite sign
/// of the imaginary part differs only by complex conjugation, leaving
/// `|Gamma_F|` and its zeros unchanged.
pub fn fragment_decoherence_function(
    bath: &BathParams,
    frag: &FragmentSpec,
    alpha: f64,
    t: f64,
) -> Result<C64> {
    if bath.j() != 0.0 {
        return invalid("fragment decoherence function is defined for J = 0");
    }
    check_fragment(bath, frag)?;
    Ok(powi(free_site_factor(bath, alpha, t), bath.n() - frag.len()))
}

/// Closed-form `rho_SF` for `J = 0`, grouped by fragment magnetization.
///
/// Fragment configurations with `d` down spins carry probability
/// `p_up^{fN-d} p_down^d` and coherence
/// `a conj(b) Gamma_F(t) e^{-2 i alpha t m_F}`; the group multiplicity
/// `C(fN, d)` is kept as a logarithm, so fragments of thousands of sites
/// are cheap.
pub fn joint_state_noninteracting(
    sys: &SystemParams,
    bath: &BathParams,
    frag: &FragmentSpec,
    t: f64,
) -> Result<JointBlockState> {
    let gamma_f = fragment_decoherence_function(bath, frag, sys.alpha(), t)?;
    let k = frag.len();
    let x = 2.0 * bath.reduced_field();
    let ln_up = -softplus(-x);
    let ln_down = -softplus(x);
    let theta = 2.0 * sys.alpha() * t;
    let (a, b) = (sys.a(), sys.b());
    let ln_choose = ln_choose_table(k);
    let groups = (0..=k)
        .into_par_iter()
        .map(|d| {
            let ln_mult = ln_choose[d];
            let mass = (ln_mult + (k - d) as f64 * ln_up + d as f64 * ln_down).exp();
            let m_f = k as f64 - 2.0 * d as f64;
            let off = a * b.conj() * gamma_f * C64::from_polar(mass, -theta * m_f);
            BlockGroup::new(
                FragmentKey::DownCount(d),
                ln_mult,
                [a.norm_sqr() * mass, b.norm_sqr() * mass],
                off,
            )
        })
        .collect();
    Ok(JointBlockState {
        fragment: frag.clone(),
        groups,
    })
}

fn empty_fragment_state(
    sys: &SystemParams,
    bath: &BathParams,
    frag: &FragmentSpec,
    t: f64,
) -> JointBlockState {
    let (a, b) = (sys.a(), sys.b());
    let g = decoherence_function(bath, sys.alpha(), t);
    JointBlockState {
        fragment: frag.clone(),
        groups: vec![BlockGroup::new(
            FragmentKey::Pattern(0),
            0.0,
            [a.norm_sqr(), b.norm_sqr()],
            a * b.conj() * g,
        )],
    }
}

/// Brute-force `rho_SF`: every one of the `2^N` bath configurations is
/// visited, weighted by its Gibbs probability, and accumulated into the
/// block of its fragment configuration.
pub fn joint_state_enumerated(
    sys: &SystemParams,
    bath: &BathParams,
    frag: &FragmentSpec,
    t: f64,
) -> Result<JointBlockState> {
    check_fragment(bath, frag)?;
    let n = bath.n();
    if n > MAX_ENUMERATION_SITES {
        return invalid(format!(
            "enumeration covers N <= {MAX_ENUMERATION_SITES} (got {n}); use a contiguous fragment"
        ));
    }
    let sites = frag.sites().to_vec();
    let comp = frag.complement();
    let k = sites.len();
    let ln_z = partition_function(bath);
    let (kk, eta) = (bath.reduced_coupling(), bath.reduced_field());
    let theta = 2.0 * sys.alpha() * t;
    let (a, b) = (sys.a(), sys.b());
    let deposit = |value: u64, at: &[usize]| -> u64 {
        at.iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| acc | (((value >> i) & 1) << s))
    };
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let groups = (0..(1u64 << k))
        .into_par_iter()
        .map(|p| {
            let base = deposit(p, &sites);
            let mut w_sum = 0.0;
            let mut off = C64::new(0.0, 0.0);
            for c in 0..(1u64 << comp.len()) {
                let bits = base | deposit(c, &comp);
                let rot = ((bits >> 1) | (bits << (n - 1))) & mask;
                let bonds = n as f64 - 2.0 * (bits ^ rot).count_ones() as f64;
                let m = n as f64 - 2.0 * bits.count_ones() as f64;
                let w = (kk * bonds + eta * m - ln_z).exp();
                w_sum += w;
                off += C64::from_polar(w, -theta * m);
            }
            BlockGroup::new(
                FragmentKey::Pattern(p),
                0.0,
                [a.norm_sqr() * w_sum, b.norm_sqr() * w_sum],
                a * b.conj() * off,
            )
        })
        .collect();
    Ok(JointBlockState {
        fragment: frag.clone(),
        groups,
    })
}

type Mat = [[C64; 2]; 2];

fn mat_mul(x: &Mat, y: &Mat) -> Mat {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// Rescales so the largest entry has modulus one; returns the log of the
/// factor removed.
fn normalize(m: &mut Mat) -> f64 {
    let big = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return 0.0;
    }
    for z in m.iter_mut().flatten() {
        *z /= big;
    }
    big.ln()
}

/// `T^p = M e^{ln_scale}` with the entries of `M` bounded by one.
fn scaled_power(coupling: f64, eta: C64, p: usize) -> (Mat, f64) {
    let k = C64::new(coupling, 0.0);
    let mut base = [[(k + eta).exp(), (-k).exp()], [(-k).exp(), (k - eta).exp()]];
    let mut ln_base = normalize(&mut base);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut acc = [[one, zero], [zero, one]];
    let mut ln_acc = 0.0;
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul(&acc, &base);
            ln_acc += ln_base + normalize(&mut acc);
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base);
            ln_base = 2.0 * ln_base + normalize(&mut base);
        }
    }
    (acc, ln_acc)
}

fn spin_index(s: f64) -> usize {
    if s > 0.0 {
        0
    } else {
        1
    }
}

/// `rho_SF` for any coupling.
///
/// For a contiguous fragment (on the ring) that leaves at least one site
/// outside, the sum over the `L = N - fN` outer spins is a chain of
/// `L + 1` transfer matrices between the two boundary spins of the
/// fragment, so the cost is `O(2^{fN} + log L)` for any `N`. Other
/// fragments fall back to [`joint_state_enumerated`].
pub fn joint_state_general(
    sys: &SystemParams,
    bath: &BathParams,
    frag: &FragmentSpec,
    t: f64,
) -> Result<JointBlockState> {
    check_fragment(bath, frag)?;
    let n = bath.n();
    let k = frag.len();
    if k == 0 {
        return Ok(empty_fragment_state(sys, bath, frag, t));
    }
    let start = match frag.cyclic_start() {
        Some(s) if k < n => s,
        _ => return joint_state_enumerated(sys, bath, frag, t),
    };
    if k > MAX_FRAGMENT_SITES {
        return invalid(format!(
            "fragments are resolved configuration by configuration; fN <= {MAX_FRAGMENT_SITES} (got {k})"
        ));
    }
    // position j of the run -> index of that site in ascending order
    let order: Vec<usize> = (0..k)
        .map(|j| frag.sites().binary_search(&((start + j) % n)).unwrap())
        .collect();
    let kk = bath.reduced_coupling();
    let eta = bath.reduced_field();
    let theta = 2.0 * sys.alpha() * t;
    let ln_z = partition_function(bath);
    let (pd, ld) = scaled_power(kk, C64::new(eta, 0.0), n - k + 1);
    let (po, lo) = scaled_power(kk, C64::new(eta, -theta), n - k + 1);
    let (a, b) = (sys.a(), sys.b());
    let groups = (0..(1u64 << k))
        .into_par_iter()
        .map(|q| {
            let spin = |j: usize| if (q >> j) & 1 == 1 { -1.0 } else { 1.0 };
            let bonds: f64 = (0..k - 1).map(|j| spin(j) * spin(j + 1)).sum();
            let m_f = k as f64 - 2.0 * q.count_ones() as f64;
            let (first, last) = (spin(0), spin(k - 1));
            let (i, j) = (spin_index(last), spin_index(first));
            let edge = 0.5 * (first + last);
            let base = kk * bonds + eta * m_f - eta * edge - ln_z;
            let w = pd[i][j].re * (base + ld).exp();
            let off = po[i][j] * C64::from_polar((base + lo).exp(), -theta * m_f + theta * edge);
            let key = (0..k).fold(0u64, |acc, j| acc | (((q >> j) & 1) << order[j]));
            BlockGroup::new(
                FragmentKey::Pattern(key),
                0.0,
                [a.norm_sqr() * w, b.norm_sqr() * w],
                a * b.conj() * off,
            )
        })
        .collect::<Vec<_>>();
    let mut groups = groups;
    groups.sort_by_key(|g| match g.key {
        FragmentKey::Pattern(p) => p,
        FragmentKey::DownCount(d) => d as u64,
    });
    Ok(JointBlockState {
        fragment: frag.clone(),
        groups,
    })
}

/// Closed form for `J = 0`, transfer-matrix path otherwise.
pub fn joint_state(
    sys: &SystemParams,
    bath: &BathParams,
    frag: &FragmentSpec,
    t: f64,
) -> Result<JointBlockState> {
    if bath.j() == 0.0 {
        joint_state_noninteracting(sys, bath, frag, t)
    } else {
        joint_state_general(sys, bath, frag, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::evolve_qubit;
    use std::f64::consts::PI;

    fn bath(j: f64, h: f64, beta: f64, n: usize) -> BathParams {
        BathParams::new(j, h, beta, n).unwrap()
    }

    fn max_diff(x: &JointBlockState, y: &JointBlockState) -> f64 {
        let k = x.fragment().len();
        (0..(1u64 << k))
            .map(|p| (x.block_for_pattern(p).unwrap() - y.block_for_pattern(p).unwrap()).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn initial_state_is_product() {
        let sys = SystemParams::plus(0.1).unwrap();
        let b = bath(0.0, 0.4, 1.0, 8);
        let frag = FragmentSpec::leading(3, 8).unwrap();
        let st = joint_state_noninteracting(&sys, &b, &frag, 0.0).unwrap();
        let p_up = (0.4f64).exp() / (2.0 * (0.4f64).cosh());
        for g in st.groups() {
            let FragmentKey::DownCount(d) = g.key else {
                panic!()
            };
            let w = p_up.powi(3 - d as i32) * (1.0 - p_up).powi(d as i32);
            let blk = g.member_block();
            let rho0 = sys.initial_state();
            assert!((blk - rho0.matrix() * C64::new(w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_fragment_reproduces_qubit() {
        let sys = SystemParams::plus(0.1).unwrap();
        for j in [0.0, 1.0] {
            let b = bath(j, 0.3, 1.0, 10);
            let frag = FragmentSpec::leading(0, 10).unwrap();
            let st = joint_state(&sys, &b, &frag, 3.3).unwrap();
            let q = evolve_qubit(&sys, &b, 3.3);
            assert!((st.system_matrix() - q.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn general_matches_closed_form_at_zero_coupling() {
        let sys = SystemParams::new(0.1, C64::new(0.6, 0.0), C64::new(0.0, 0.8), 0.0).unwrap();
        let b = bath(0.0, 0.3, 1.2, 9);
        let frag = FragmentSpec::leading(4, 9).unwrap();
        for t in [0.0, 2.0, 7.0] {
            let x = joint_state_noninteracting(&sys, &b, &frag, t).unwrap();
            let y = joint_state_general(&sys, &b, &frag, t).unwrap();
            assert!(max_diff(&x, &y) < 1e-12);
        }
    }

    #[test]
    fn fast_path_matches_enumeration() {
        let sys = SystemParams::plus(0.1).unwrap();
        for (j, h, beta) in [(1.0, 0.3, 1.0), (0.7, -0.2, 2.5), (-0.5, 0.1, 0.8)] {
            let b = bath(j, h, beta, 11);
            for sites in [
                vec![0, 1, 2, 3],
                vec![9, 10, 0],
                vec![5],
                vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
            ] {
                let frag = FragmentSpec::from_sites(&sites, 11).unwrap();
                for t in [0.5, 4.0, 13.0] {
                    let x = joint_state_general(&sys, &b, &frag, t).unwrap();
                    let y = joint_state_enumerated(&sys, &b, &frag, t).unwrap();
                    assert!(max_diff(&x, &y) < 1e-13, "{sites:?} t={t}");
                }
            }
        }
    }

    #[test]
    fn normalization_and_marginals() {
        let sys = SystemParams::plus(0.1).unwrap();
        let b = bath(1.0, 0.3, 1.0, 12);
        let frag = FragmentSpec::leading(5, 12).unwrap();
        let st = joint_state_general(&sys, &b, &frag, 4.4).unwrap();
        assert!((st.trace() - 1.0).abs() < 1e-10);
        assert!(st.min_eigenvalue() > -1e-12);
        let q = evolve_qubit(&sys, &b, 4.4);
        assert!((st.system_matrix() - q.matrix()).norm() < 1e-12);
    }

    #[test]
    fn large_free_fragment() {
        let sys = SystemParams::plus(0.1).unwrap();
        let b = bath(0.0, 0.2, 1.0, 4000);
        let frag = FragmentSpec::leading(2000, 4000).unwrap();
        let st = joint_state_noninteracting(&sys, &b, &frag, 1.0).unwrap();
        assert!((st.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fragment_factor() {
        let b = bath(0.0, 0.0, 1.0, 10);
        let half = FragmentSpec::leading(5, 10).unwrap();
        let all = FragmentSpec::leading(10, 10).unwrap();
        assert_eq!(
            fragment_decoherence_function(&b, &half, 0.1, 0.0).unwrap(),
            C64::new(1.0, 0.0)
        );
        assert_eq!(
            fragment_decoherence_function(&b, &all, 0.1, 3.0).unwrap(),
            C64::new(1.0, 0.0)
        );
        assert!(
            fragment_decoherence_function(&b, &half, 0.1, PI / 0.4)
                .unwrap()
                .norm()
                < 1e-12
        );
        assert!(fragment_decoherence_function(&bath(1.0, 0.0, 1.0, 10), &half, 0.1, 1.0).is_err());
    }

    #[test]
    fn scaled_power_matches_repeated_product() {
        let eta = C64::new(0.3, -0.7);
        let (m, l) = scaled_power(0.8, eta, 7);
        let k = C64::new(0.8, 0.0);
        let t = [[(k + eta).exp(), (-k).exp()], [(-k).exp(), (k - eta).exp()]];
        let mut p = t;
        for _ in 1..7 {
            p = mat_mul(&p, &t);
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] * l.exp() - p[i][j]).norm() < 1e-12 * p[i][j].norm().max(1.0));
            }
        }
    }
}
