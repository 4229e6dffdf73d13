//! Lee-Yang zeros of the bath partition function and the critical times of
//! the decoherence function.
//!
//! Writing `z = e^{-2 beta h}`,
//! `Z_B(h) = e^{beta N h} sum_n p_n z^n`, where `p_n` is the zero-field
//! Boltzmann sum over configurations with `n` down spins. For `J > 0` every
//! zero lies on the unit circle, and with `h = 0` a zero `z = e^{i theta}`
//! makes the decoherence function vanish at `t = theta / (4 alpha)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bath::{reduced_log_partition, BathParams};
use crate::error::{invalid, Error, Result};

/// Largest chain for which the fugacity coefficients are enumerated.
pub const MAX_ENUMERATION_SITES: usize = 24;

const DEDUP_TOL: f64 = 1e-10;
const VALIDATION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeeYangZero {
    pub value: C64,
    /// Position in angle-sorted order.
    pub index: usize,
    /// `arg z` in `[0, 2 pi)`.
    pub angle: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalTime {
    pub t: f64,
    pub multiplicity: usize,
}

/// Coefficients `p_0..p_N` of the fugacity polynomial, stored divided by
/// `exp(ln_scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FugacityPolynomial {
    coefficients: Vec<f64>,
    ln_scale: f64,
}

impl FugacityPolynomial {
    /// Enumerates all `2^N` configurations, grouping them by down-spin count
    /// and domain-wall count (exact integer histogram) before any floating
    /// point work.
    pub fn from_enumeration(bath: &BathParams) -> Result<Self> {
        let n = bath.n();
        if n > MAX_ENUMERATION_SITES {
            return invalid(format!(
                "fugacity coefficients are enumerated for N <= {MAX_ENUMERATION_SITES} (got {n})"
            ));
        }
        let hist = wall_histogram(n);
        let k = bath.reduced_coupling();
        let ln_p: Vec<f64> = hist
            .iter()
            .map(|walls| {
                let terms: Vec<f64> = walls
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(w, &c)| (c as f64).ln() + k * (n as f64 - 4.0 * w as f64))
                    .collect();
                log_sum_exp(&terms)
            })
            .collect();
        let ln_scale = ln_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut coefficients: Vec<f64> = ln_p.iter().map(|l| (l - ln_scale).exp()).collect();
        // up-down relabeling symmetry, enforced exactly
        for d in 0..=n / 2 {
            let sym = 0.5 * (coefficients[d] + coefficients[n - d]);
            coefficients[d] = sym;
            coefficients[n - d] = sym;
        }
        Ok(Self {
            coefficients,
            ln_scale,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// The true coefficients are `coefficients() * exp(ln_scale())`.
    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Sum of the stored coefficients.
    pub fn total(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    /// `ln Z_B` at zero field, i.e. `ln P(1)`.
    pub fn ln_zero_field_partition(&self) -> f64 {
        self.total().ln() + self.ln_scale
    }

    /// Stored polynomial at `z` (Horner).
    pub fn eval(&self, z: C64) -> C64 {
        self.eval_derivative(z, 0)
    }

    /// `j`-th derivative of the stored polynomial at `z`.
    pub fn eval_derivative(&self, z: C64, j: usize) -> C64 {
        let n = self.degree();
        if j > n {
            return C64::new(0.0, 0.0);
        }
        let mut acc = C64::new(0.0, 0.0);
        for d in (j..=n).rev() {
            acc = acc * z + self.coefficients[d] * falling(d, j);
        }
        acc
    }

    /// Scale against which `|P^{(j)}(z)|` is judged small on `|z| ~ 1`.
    fn derivative_scale(&self, z: C64, j: usize) -> f64 {
        let r = z.norm().max(1.0);
        (j..=self.degree())
            .map(|d| self.coefficients[d] * falling(d, j) * r.powi((d - j) as i32))
            .sum()
    }
}

fn falling(d: usize, j: usize) -> f64 {
    (0..j).map(|i| (d - i) as f64).product()
}

/// `counts[d][w]`: configurations with `d` down spins and `2w` domain walls.
fn wall_histogram(n: usize) -> Vec<Vec<u64>> {
    let total = 1u64 << n;
    let chunk = 1u64 << n.saturating_sub(6).min(16);
    let blank = || vec![vec![0u64; n / 2 + 1]; n + 1];
    (0..total.div_ceil(chunk))
        .into_par_iter()
        .fold(blank, |mut acc, c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            for bits in lo..hi {
                let rot = ((bits >> 1) | (bits << (n - 1))) & mask;
                let walls = (bits ^ rot).count_ones() as usize;
                acc[bits.count_ones() as usize][walls / 2] += 1;
            }
            acc
        })
        .reduce(blank, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        })
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn angle_of(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        (a + 2.0 * PI).min(2.0 * PI - f64::EPSILON * 4.0)
    } else {
        a
    }
}

fn finish(mut zeros: Vec<(C64, usize)>) -> Vec<LeeYangZero> {
    zeros.sort_by(|a, b| angle_of(a.0).total_cmp(&angle_of(b.0)));
    zeros
        .into_iter()
        .enumerate()
        .map(|(index, (value, multiplicity))| LeeYangZero {
            value,
            index,
            angle: angle_of(value),
            multiplicity,
        })
        .collect()
}

/// Closed-form zeros for a ferromagnetic chain.
///
/// With `u = e^{-4 beta J}` and `k_n = pi (2n - 1) / N`,
/// `z_n = -u + (1 - u) cos k_n +- sqrt((u - 1)[sin^2 k_n + u (1 + cos k_n)^2])`.
/// The radicand is never positive for `beta J > 0`; taking its square root as
/// `i sqrt(|.|)` puts every candidate on the unit circle. All `2N`
/// candidates are generated, merged within `1e-10`, and every distinct zero
/// is checked against the polynomial.
pub fn zeros_interacting(bath: &BathParams) -> Result<Vec<LeeYangZero>> {
    if bath.j() <= 0.0 || bath.beta() <= 0.0 {
        return invalid(format!(
            "closed-form zeros need J > 0 and beta > 0 (J = {}, beta = {})",
            bath.j(),
            bath.beta()
        ));
    }
    let n = bath.n();
    let k = bath.reduced_coupling();
    let u = (-4.0 * k).exp();
    let one_minus_u = -(-4.0 * k).exp_m1();
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for idx in 1..=n {
        let kn = PI * (2 * idx - 1) as f64 / n as f64;
        let (s, c) = kn.sin_cos();
        let w = -u + one_minus_u * c;
        let radicand = -one_minus_u * (s * s + u * (1.0 + c) * (1.0 + c));
        let root = C64::new(radicand, 0.0).sqrt();
        for z in [C64::new(w, 0.0) + root, C64::new(w, 0.0) - root] {
            match clusters.iter_mut().find(|(v, _)| (*v - z).norm() <= DEDUP_TOL) {
                Some(entry) => entry.1 += 1,
                None => clusters.push((z, 1)),
            }
        }
    }
    let zeros: Vec<(C64, usize)> = clusters.into_iter().map(|(z, c)| (z, c / 2)).collect();
    let counted: usize = zeros.iter().map(|z| z.1).sum();
    if counted != n {
        return Err(Error::InternalConsistency(format!(
            "closed form produced {counted} zeros (with multiplicity) for N = {n}"
        )));
    }
    let poly = if n <= MAX_ENUMERATION_SITES {
        Some(FugacityPolynomial::from_enumeration(bath)?)
    } else {
        None
    };
    let ln_z0 = reduced_log_partition(k, C64::new(0.0, 0.0), n).ln_abs;
    for &(z, _) in &zeros {
        let residual = match &poly {
            Some(p) => p.eval(z).norm() / p.total(),
            None => {
                // Z(eta) = e^{N eta} P(e^{-2 eta}), and |e^{N eta}| = 1 on the circle
                let eta = -0.5 * z.ln();
                let lz = reduced_log_partition(k, eta, n);
                (lz.ln_abs - n as f64 * eta.re - ln_z0).exp()
            }
        };
        if !(residual <= VALIDATION_TOL) {
            return Err(Error::InternalConsistency(format!(
                "closed-form zero {z} fails the polynomial check (relative residual {residual:e})"
            )));
        }
    }
    Ok(finish(zeros))
}

/// Zeros from the eigenvalues of the companion matrix of the enumerated
/// fugacity polynomial, Newton-polished, with multiple roots identified by
/// derivative tests.
pub fn zeros_numeric(bath: &BathParams) -> Result<Vec<LeeYangZero>> {
    let poly = FugacityPolynomial::from_enumeration(bath)?;
    let roots = polynomial_roots(&poly)?;
    Ok(finish(group_multiple_roots(&poly, roots)))
}

fn polynomial_roots(poly: &FugacityPolynomial) -> Result<Vec<C64>> {
    let n = poly.degree();
    let p = poly.coefficients();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p[n];
    if !(lead > 0.0) {
        return Err(Error::Numeric(format!(
            "leading coefficient {lead:e} is not positive"
        )));
    }
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -p[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numeric(format!(
            "companion-matrix eigen-solver did not converge (degree {n}, coefficients {p:?})"
        ))
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|&z| newton_polish(poly, z, 0))
        .collect())
}

/// Newton iterations on `P^{(j)}`, keeping only steps that reduce the residual.
fn newton_polish(poly: &FugacityPolynomial, mut z: C64, j: usize) -> C64 {
    let mut best = poly.eval_derivative(z, j).norm();
    for _ in 0..50 {
        let d = poly.eval_derivative(z, j + 1);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - poly.eval_derivative(z, j) / d;
        let r = poly.eval_derivative(next, j).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = next;
    }
    z
}

/// Roots of multiplicity `k` scatter over a radius of order `eps^{1/k}` in
/// floating point. A candidate group of the `k` roots nearest to a seed is
/// accepted as one `k`-fold root when its centroid annihilates
/// `P, P', ..., P^{(k-1)}` (relative to their natural scale); the largest
/// such group wins.
fn group_multiple_roots(poly: &FugacityPolynomial, roots: Vec<C64>) -> Vec<(C64, usize)> {
    let mut remaining = roots;
    let mut out = Vec::new();
    while let Some(&seed) = remaining.first() {
        let mut order: Vec<usize> = (0..remaining.len()).collect();
        order.sort_by(|&a, &b| {
            (remaining[a] - seed)
                .norm()
                .total_cmp(&(remaining[b] - seed).norm())
        });
        let mut chosen = (seed, 1usize);
        for size in (2..=remaining.len()).rev() {
            let centroid: C64 = order[..size].iter().map(|&i| remaining[i]).sum::<C64>() / size as f64;
            let c = newton_polish(poly, centroid, size - 1);
            let vanishes = (0..size)
                .all(|j| poly.eval_derivative(c, j).norm() <= VALIDATION_TOL * poly.derivative_scale(c, j));
            if vanishes {
                chosen = (c, size);
                break;
            }
        }
        let taken: Vec<usize> = order[..chosen.1].to_vec();
        remaining = remaining
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !taken.contains(i))
            .map(|(_, z)| z)
            .collect();
        out.push(chosen);
    }
    out
}

/// Real times in `[0, T_rec)`, `T_rec = pi / (2 alpha)`, at which the
/// decoherence function vanishes.
///
/// Real critical times exist only at `h = 0` (zeros on the unit circle) or
/// `beta = 0` (where `Gamma = cos^N(2 alpha t)`).
pub fn critical_times(bath: &BathParams, alpha: f64) -> Result<Vec<CriticalTime>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return invalid(format!("critical times need alpha > 0 (got {alpha})"));
    }
    let n = bath.n();
    let quarter = CriticalTime {
        t: PI / (4.0 * alpha),
        multiplicity: n,
    };
    if bath.beta() == 0.0 {
        return Ok(vec![quarter]);
    }
    if bath.h() != 0.0 {
        return Ok(Vec::new());
    }
    if bath.j() == 0.0 {
        return Ok(vec![quarter]);
    }
    if bath.j() < 0.0 {
        return invalid("critical times are only defined for ferromagnetic coupling (J >= 0)");
    }
    let mut times: Vec<CriticalTime> = zeros_interacting(bath)?
        .into_iter()
        .map(|z| CriticalTime {
            t: z.angle / (4.0 * alpha),
            multiplicity: z.multiplicity,
        })
        .collect();
    times.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::decoherence_function;

    fn bath(j: f64, h: f64, beta: f64, n: usize) -> BathParams {
        BathParams::new(j, h, beta, n).unwrap()
    }

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn free_chain_coefficients_are_binomial() {
        let p = FugacityPolynomial::from_enumeration(&bath(0.0, 0.0, 1.0, 10)).unwrap();
        let scale = p.ln_scale().exp();
        for (d, c) in p.coefficients().iter().enumerate() {
            assert!((c * scale - binomial(10, d)).abs() < 1e-9);
        }
    }

    #[test]
    fn coefficients_symmetric_and_sum_to_zero_field_partition() {
        let b = bath(0.7, 0.4, 1.3, 11);
        let p = FugacityPolynomial::from_enumeration(&b).unwrap();
        let c = p.coefficients();
        for d in 0..=11 {
            assert_eq!(c[d], c[11 - d]);
            assert!(c[d] > 0.0);
        }
        let z0 = crate::bath::partition_function(&b.with_field(0.0).unwrap());
        assert!((p.ln_zero_field_partition() - z0).abs() < 1e-12);
    }

    #[test]
    fn zeros_on_unit_circle() {
        for n in [3, 6, 9, 30] {
            for k in [0.1, 1.0, 2.0] {
                let z = zeros_interacting(&bath(1.0, 0.0, k, n)).unwrap();
                assert_eq!(z.iter().map(|z| z.multiplicity).sum::<usize>(), n);
                for zero in z {
                    assert!((zero.value.norm() - 1.0).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn high_temperature_zeros_collapse_to_minus_one() {
        for zero in zeros_interacting(&bath(1.0, 0.0, 1e-9, 6)).unwrap() {
            assert!((zero.value + 1.0).norm() < 1e-3);
        }
    }

    #[test]
    fn closed_form_requires_ferromagnet() {
        assert!(zeros_interacting(&bath(-1.0, 0.0, 1.0, 6)).is_err());
        assert!(zeros_interacting(&bath(1.0, 0.0, 0.0, 6)).is_err());
    }

    #[test]
    fn numeric_matches_closed_form() {
        for n in [4, 6, 7, 12] {
            for k in [0.1, 0.5, 1.0, 2.0] {
                let b = bath(1.0, 0.0, k, n);
                let a = zeros_interacting(&b).unwrap();
                let m = zeros_numeric(&b).unwrap();
                assert_eq!(a.len(), m.len(), "N={n} K={k}");
                for (x, y) in a.iter().zip(&m) {
                    assert!((x.value - y.value).norm() < 1e-8, "N={n} K={k}: {x:?} {y:?}");
                    assert_eq!(x.multiplicity, y.multiplicity);
                }
            }
        }
    }

    #[test]
    fn free_chain_has_one_multiple_zero() {
        for n in [1, 2, 5, 12, 24] {
            let z = zeros_numeric(&bath(0.0, 0.0, 1.0, n)).unwrap();
            assert_eq!(z.len(), 1, "N={n}: {z:?}");
            assert_eq!(z[0].multiplicity, n);
            assert!((z[0].value + 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn critical_times_are_zeros_of_gamma() {
        let b = bath(1.0, 0.0, 1.0, 6);
        let times = critical_times(&b, 0.1).unwrap();
        assert_eq!(times.len(), 6);
        for ct in times {
            assert!(decoherence_function(&b, 0.1, ct.t).norm() <= 1e-8);
        }
    }

    #[test]
    fn critical_times_special_cases() {
        assert!(critical_times(&bath(1.0, 0.5, 1.0, 6), 0.1).unwrap().is_empty());
        let hot = critical_times(&bath(1.0, 0.5, 0.0, 6), 0.1).unwrap();
        assert_eq!(hot.len(), 1);
        assert!((hot[0].t - PI / 0.4).abs() < 1e-12);
        assert_eq!(hot[0].multiplicity, 6);
        assert!(critical_times(&bath(1.0, 0.0, 1.0, 6), 0.0).is_err());
    }
}
