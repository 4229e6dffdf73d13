//! Full system+bath simulation on the `2^(N+1)`-dimensional Hilbert space.
//!
//! Operators are assembled from Kronecker products of single-site Pauli
//! matrices, the initial state is `rho_S (x) exp(-beta H_B) / Z`, and reduced
//! states come from an explicit partial trace over basis indices. Kronecker
//! order is `system (x) site_0 (x) ... (x) site_{N-1}`, so site 0 is the
//! most significant bath bit.
//!
//! Every operator involved is diagonal in the product basis, so operators are
//! stored as their diagonals (Kronecker products of Pauli diagonals) and the
//! density matrix as its list of nonzero entries. That keeps `N = 12`
//! (dimension 8192) cheap without assuming anything about the structure of
//! the result.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

/// `diag(sigma_z)`
const Z: [f64; 2] = [1.0, -1.0];
const ID: [f64; 2] = [1.0, 1.0];

/// Diagonal of a tensor product of diagonal single-factor operators.
fn kron_diag(factors: &[&[f64; 2]]) -> Vec<f64> {
    let mut out = vec![1.0];
    for f in factors {
        out = out.iter().flat_map(|x| f.iter().map(move |y| x * y)).collect();
    }
    out
}

/// `sigma_z` on the listed factors of an `n_factors`-fold product.
fn z_string(n_factors: usize, on: &[usize]) -> Vec<f64> {
    let factors: Vec<&[f64; 2]> = (0..n_factors)
        .map(|f| if on.contains(&f) { &Z } else { &ID })
        .collect();
    kron_diag(&factors)
}

fn add_scaled(acc: &mut [f64], d: &[f64], s: f64) {
    for (x, y) in acc.iter_mut().zip(d) {
        *x += s * y;
    }
}

/// Parameters of one simulation.
#[derive(Clone, Copy, Debug)]
pub struct DenseModel {
    pub n: usize,
    pub j: f64,
    pub h: f64,
    pub beta: f64,
    pub alpha: f64,
    pub a: C64,
    pub b: C64,
}

/// Nonzero entries `(row, column, value)` of a density matrix.
pub type SparseDensity = Vec<(usize, usize, C64)>;

impl DenseModel {
    /// Diagonal of `H_B` on the bath factors.
    fn bath_hamiltonian(&self) -> Vec<f64> {
        let n = self.n;
        let mut h = vec![0.0; 1 << n];
        for i in 0..n {
            let bond = if n == 1 {
                vec![1.0; 2]
            } else {
                z_string(n, &[i, (i + 1) % n])
            };
            add_scaled(&mut h, &bond, -self.j);
            add_scaled(&mut h, &z_string(n, &[i]), -self.h);
        }
        h
    }

    /// Diagonal of `alpha sigma_z (x) sum_i sigma_z^i` on the full space.
    fn coupling(&self) -> Vec<f64> {
        let n = self.n;
        let mut h = vec![0.0; 1 << (n + 1)];
        for i in 0..n {
            add_scaled(&mut h, &z_string(n + 1, &[0, i + 1]), self.alpha);
        }
        h
    }

    /// `U(t) (rho_S (x) rho_B) U(t)^dag`, nonzero entries only.
    pub fn joint_state_sparse(&self, t: f64) -> SparseDensity {
        assert!(self.n <= 16, "full simulation limited to 16 bath sites");
        let hb = self.bath_hamiltonian();
        let emin = hb.iter().cloned().fold(f64::INFINITY, f64::min);
        let boltz: Vec<f64> = hb.iter().map(|e| (-self.beta * (e - emin)).exp()).collect();
        let z: f64 = boltz.iter().sum();
        let (a, b) = (self.a, self.b);
        let rho_s = [[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]];
        let u: Vec<C64> = self
            .coupling()
            .into_iter()
            .map(|e| C64::new(0.0, -e * t).exp())
            .collect();
        let nb = boltz.len();
        let mut out = Vec::with_capacity(4 * nb);
        for (s, row) in rho_s.iter().enumerate() {
            for (s2, &amp) in row.iter().enumerate() {
                for (c, &w) in boltz.iter().enumerate() {
                    let (i, j) = (s * nb + c, s2 * nb + c);
                    out.push((i, j, u[i] * amp * (w / z) * u[j].conj()));
                }
            }
        }
        out
    }

    /// Full dense joint state, for small baths.
    pub fn joint_state(&self, t: f64) -> Vec<Vec<C64>> {
        assert!(self.n <= 9, "dense matrix limited to 9 bath sites");
        let d = 1 << (self.n + 1);
        let mut m = vec![vec![C64::new(0.0, 0.0); d]; d];
        for (i, j, v) in self.joint_state_sparse(t) {
            m[i][j] += v;
        }
        m
    }

    /// Reduced state of the system and the bath sites `sites`, as 2x2 system
    /// blocks keyed by fragment pattern (bit `i` set means `sites[i]` is
    /// down). The largest fragment-off-diagonal element is returned
    /// separately so callers can check it vanishes.
    pub fn reduced_blocks_at(&self, t: f64, sites: &[usize]) -> (Vec<[[C64; 2]; 2]>, f64) {
        let n = self.n;
        let nb = 1usize << n;
        let bit_of = |idx: usize, site: usize| (idx >> (n - 1 - site)) & 1;
        let rest: Vec<usize> = (0..n).filter(|s| !sites.contains(s)).collect();
        let split = |idx: usize| -> (usize, usize, usize) {
            let (s, c) = (idx / nb, idx % nb);
            let p = sites
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &site)| acc | (bit_of(c, site) << i));
            let q = rest
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &site)| acc | (bit_of(c, site) << i));
            (s, p, q)
        };
        let mut reduced: HashMap<(usize, usize, usize, usize), C64> = HashMap::new();
        for (i, j, v) in self.joint_state_sparse(t) {
            let (s, p, ci) = split(i);
            let (s2, p2, cj) = split(j);
            if ci == cj {
                *reduced.entry((s, p, s2, p2)).or_insert(C64::new(0.0, 0.0)) += v;
            }
        }
        let mut blocks = vec![[[C64::new(0.0, 0.0); 2]; 2]; 1 << sites.len()];
        let mut off_fragment = 0.0f64;
        for ((s, p, s2, p2), v) in reduced {
            if p == p2 {
                blocks[p][s][s2] = v;
            } else {
                off_fragment = off_fragment.max(v.norm());
            }
        }
        (blocks, off_fragment)
    }

    /// [`DenseModel::reduced_blocks_at`] for the leading `k` sites.
    pub fn reduced_blocks(&self, t: f64, k: usize) -> (Vec<[[C64; 2]; 2]>, f64) {
        let sites: Vec<usize> = (0..k).collect();
        self.reduced_blocks_at(t, &sites)
    }
}
