//! Dense complex-matrix kernel: Kronecker products, embeddings, Hermitian
//! eigendecomposition, and Heisenberg-picture time evolution.
//!
//! Everything downstream funnels through this module, so the conventions are
//! fixed here once:
//!
//! * Qubit registers are indexed by **sites 1..=n**, and site 1 is the
//!   *leftmost* Kronecker factor. Equivalently, site `s` owns bit `n - s` of
//!   a computational-basis index, so site 1 is the most significant bit.
//! * Spectra returned by [`hermitian_eig`] are sorted ascending.
//! * Dense allocations are guarded by a process-wide dimension cap
//!   ([`max_dim`], default 4096 = 2^12) so a malformed request fails fast
//!   instead of exhausting memory.

use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Dense column-major complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Default value of the process-wide dense dimension cap.
pub const DEFAULT_MAX_DIM: usize = 1 << 12;

/// Frobenius-norm tolerance for dense consistency checks.
pub const DENSE_TOL: f64 = 1e-10;

/// Elementwise tolerance below which a matrix counts as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

static MAX_DIM: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_DIM);

/// Current process-wide cap on dense matrix dimension.
pub fn max_dim() -> usize {
    MAX_DIM.load(Ordering::Relaxed)
}

/// Replace the process-wide dimension cap (values below 1 are clamped to 1).
///
/// The cap is global state; set it once at startup. Code that needs a local
/// override (for example concurrent tests) should use the `*_with_cap`
/// variants instead.
pub fn set_max_dim(dim: usize) {
    MAX_DIM.store(dim.max(1), Ordering::Relaxed);
}

pub(crate) fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        Err(Error::Capacity { dim, max: cap })
    } else {
        Ok(())
    }
}

/// Shorthand complex constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Identity matrix of the given dimension.
pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Kronecker product `a ⊗ b`, guarded by the process-wide dimension cap.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    kron_with_cap(a, b, max_dim())
}

/// [`kron`] with an explicit cap instead of the global one.
pub fn kron_with_cap(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a
        .nrows()
        .checked_mul(b.nrows())
        .ok_or(Error::Capacity { dim: usize::MAX, max: cap })?;
    check_cap(rows, cap)?;
    let cols = a
        .ncols()
        .checked_mul(b.ncols())
        .ok_or(Error::Capacity { dim: usize::MAX, max: cap })?;
    check_cap(cols, cap)?;
    Ok(a.kronecker(b))
}

/// Commutator `[a, b] = ab - ba` of two square matrices of equal dimension.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !b.is_square() || a.nrows() != b.nrows() {
        return Err(Error::shape(format!(
            "commutator needs equal square matrices, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b - b * a)
}

/// Largest elementwise modulus of a matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// Largest elementwise modulus of `m - m†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Whether `m` is Hermitian to within an elementwise tolerance.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_deviation(m) <= tol
}

/// Eigendecomposition of a Hermitian matrix: real spectrum sorted ascending
/// and a unitary matrix whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub vectors: CMatrix,
}

/// Decompose a Hermitian matrix, rejecting input whose deviation from
/// Hermiticity exceeds [`HERMITIAN_TOL`].
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    hermitian_eig_with_tol(m, HERMITIAN_TOL)
}

/// [`hermitian_eig`] with a caller-chosen Hermiticity tolerance.
pub fn hermitian_eig_with_tol(m: &CMatrix, tol: f64) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let dev = hermiticity_deviation(m);
    if dev > tol {
        return Err(Error::NotHermitian { deviation: dev });
    }
    // Symmetrize before decomposing so round-off in the input cannot leak
    // imaginary parts into the spectrum.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        vectors.set_column(new_col, &eig.eigenvectors.column(old_col));
    }
    Ok(HermitianEig { eigenvalues, vectors })
}

impl HermitianEig {
    /// Dimension of the decomposed matrix.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Apply a scalar function to the spectrum: `V f(Λ) V†`.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let fz = f(lambda);
            for v in scaled.column_mut(j).iter_mut() {
                *v *= fz;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Unitary propagator `exp(-i H t)` of the decomposed Hamiltonian.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.apply_spectral(|lambda| (c64(0.0, -1.0) * lambda * t).exp())
    }

    /// Heisenberg-picture evolution `U†(t) · op · U(t)`.
    pub fn heisenberg(&self, op: &CMatrix, t: f64) -> Result<CMatrix> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::shape(format!(
                "operator is {}x{} but the Hamiltonian dimension is {}",
                op.nrows(),
                op.ncols(),
                self.dim()
            )));
        }
        let u = self.propagator(t);
        Ok(u.adjoint() * op * u)
    }
}

/// Unitary propagator `exp(-i h t)` for a Hermitian matrix `h`.
pub fn evolve(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(hermitian_eig(h)?.propagator(t))
}

/// Embed an operator acting on the given sites into the full `n`-site
/// register, tensoring identity everywhere else.
///
/// `sites` are 1-based and, read in ascending order, correspond to the
/// Kronecker factors of `local` from left to right. `local` must be square
/// with dimension `2^{|sites|}`.
pub fn embed_on_sites(local: &CMatrix, sites: &BTreeSet<usize>, n: usize) -> Result<CMatrix> {
    embed_on_sites_with_cap(local, sites, n, max_dim())
}

/// [`embed_on_sites`] with an explicit cap instead of the global one.
pub fn embed_on_sites_with_cap(
    local: &CMatrix,
    sites: &BTreeSet<usize>,
    n: usize,
    cap: usize,
) -> Result<CMatrix> {
    if n == 0 || n >= usize::BITS as usize {
        return Err(Error::shape(format!("unsupported site count {n}")));
    }
    if let Some(&bad) = sites.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::shape(format!(
            "site {bad} outside the register 1..={n}"
        )));
    }
    let k = sites.len();
    let ldim = 1usize << k;
    if local.nrows() != ldim || local.ncols() != ldim {
        return Err(Error::shape(format!(
            "operator on {k} site(s) must be {ldim}x{ldim}, got {}x{}",
            local.nrows(),
            local.ncols()
        )));
    }
    let dim = 1usize << n;
    check_cap(dim, cap)?;

    // Bit position of each chosen site (ascending sites -> descending bits).
    let site_bits: Vec<usize> = sites.iter().map(|&s| n - s).collect();
    let rest_bits: Vec<usize> = (0..n).rev().filter(|b| !site_bits.contains(b)).collect();
    let rest_n = rest_bits.len();

    // Expand every index of the identity factor into its scattered bit mask.
    let rest_masks: Vec<usize> = (0..1usize << rest_n)
        .map(|idx| {
            let mut mask = 0usize;
            for (m, &bit) in rest_bits.iter().enumerate() {
                if (idx >> (rest_n - 1 - m)) & 1 == 1 {
                    mask |= 1 << bit;
                }
            }
            mask
        })
        .collect();

    let scatter_local = |idx: usize| -> usize {
        let mut mask = 0usize;
        for (j, &bit) in site_bits.iter().enumerate() {
            if (idx >> (k - 1 - j)) & 1 == 1 {
                mask |= 1 << bit;
            }
        }
        mask
    };

    let mut out = CMatrix::zeros(dim, dim);
    for rl in 0..ldim {
        let base_r = scatter_local(rl);
        for cl in 0..ldim {
            let v = local[(rl, cl)];
            if v == Complex64::ZERO {
                continue;
            }
            let base_c = scatter_local(cl);
            for &extra in &rest_masks {
                out[(base_r | extra, base_c | extra)] = v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
    }

    fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
    }

    fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)])
    }

    fn random_hermitian(dim: usize, rng: &mut StdRng) -> CMatrix {
        let raw = CMatrix::from_fn(dim, dim, |_, _| c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        (&raw + raw.adjoint()).scale(0.5)
    }

    #[test]
    fn kron_matches_block_layout() {
        let m = kron(&sigma_z(), &sigma_x()).unwrap();
        // sigma_z ⊗ sigma_x = [[sigma_x, 0], [0, -sigma_x]]
        assert_eq!(m[(0, 1)], c64(1.0, 0.0));
        assert_eq!(m[(1, 0)], c64(1.0, 0.0));
        assert_eq!(m[(2, 3)], c64(-1.0, 0.0));
        assert_eq!(m[(3, 2)], c64(-1.0, 0.0));
        assert_eq!(m[(0, 0)], c64(0.0, 0.0));
        assert_eq!(m[(0, 3)], c64(0.0, 0.0));
    }

    #[test]
    fn kron_respects_cap() {
        let id = identity(64);
        let err = kron_with_cap(&id, &id, 1 << 10).unwrap_err();
        match err {
            Error::Capacity { dim, max } => {
                assert_eq!(dim, 4096);
                assert_eq!(max, 1024);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn pauli_commutator_identity() {
        // [sigma_x, sigma_y] = 2i sigma_z
        let c = commutator(&sigma_x(), &sigma_y()).unwrap();
        let expect = sigma_z().scale(2.0).map(|z| z * c64(0.0, 1.0));
        assert!(max_abs(&(c - expect)) < 1e-15);
    }

    #[test]
    fn eig_reconstructs_and_sorts() {
        let mut rng = StdRng::seed_from_u64(7);
        for dim in [2usize, 5, 8] {
            let h = random_hermitian(dim, &mut rng);
            let eig = hermitian_eig(&h).unwrap();
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] <= w[1]);
            }
            let rebuilt = eig.apply_spectral(|l| c64(l, 0.0));
            assert!(max_abs(&(rebuilt - &h)) < 1e-12);
            // Columns form a unitary.
            let gram = eig.vectors.adjoint() * &eig.vectors;
            assert!(max_abs(&(gram - identity(dim))) < 1e-12);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn propagator_of_sigma_z() {
        // exp(-i sigma_z t) = diag(e^{-it}, e^{it})
        let t = std::f64::consts::FRAC_PI_2;
        let u = evolve(&sigma_z(), t).unwrap();
        assert!(max_abs(&(&u - CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(0.0, -1.0),
            c64(0.0, 1.0)
        ])))) < 1e-12);
    }

    #[test]
    fn propagator_is_unitary_and_heisenberg_preserves_spectrum() {
        let mut rng = StdRng::seed_from_u64(11);
        let h = random_hermitian(8, &mut rng);
        let eig = hermitian_eig(&h).unwrap();
        let u = eig.propagator(0.73);
        assert!(max_abs(&(&u * u.adjoint() - identity(8))) < 1e-12);

        let op = random_hermitian(8, &mut rng);
        let moved = eig.heisenberg(&op, 0.73).unwrap();
        // Unitary conjugation preserves trace and Frobenius norm.
        assert!((moved.trace() - op.trace()).norm() < 1e-12);
        assert!((frobenius(&moved) - frobenius(&op)).abs() < 1e-12);
        // t = 0 is the identity map.
        let still = eig.heisenberg(&op, 0.0).unwrap();
        assert!(max_abs(&(still - &op)) < 1e-12);
    }

    #[test]
    fn embed_matches_kron_chain() {
        // Operator on sites {2,3} of a 3-site register is I ⊗ local.
        let local = kron(&sigma_x(), &sigma_y()).unwrap();
        let sites: BTreeSet<usize> = [2, 3].into_iter().collect();
        let embedded = embed_on_sites(&local, &sites, 3).unwrap();
        let expect = kron(&identity(2), &local).unwrap();
        assert!(max_abs(&(embedded - expect)) < 1e-15);

        // Non-contiguous sites {1,3}: X on site 1, Y on site 3.
        let sites: BTreeSet<usize> = [1, 3].into_iter().collect();
        let embedded = embed_on_sites(&local, &sites, 3).unwrap();
        let expect = kron(&kron(&sigma_x(), &identity(2)).unwrap(), &sigma_y()).unwrap();
        assert!(max_abs(&(embedded - expect)) < 1e-15);
    }

    #[test]
    fn embed_site_one_is_leftmost_factor() {
        let sites: BTreeSet<usize> = [1].into_iter().collect();
        let embedded = embed_on_sites(&sigma_z(), &sites, 2).unwrap();
        let expect = kron(&sigma_z(), &identity(2)).unwrap();
        assert!(max_abs(&(embedded - expect)) < 1e-15);
    }

    #[test]
    fn embed_rejects_bad_input() {
        let sites: BTreeSet<usize> = [4].into_iter().collect();
        assert!(embed_on_sites(&sigma_z(), &sites, 3).is_err());
        let sites: BTreeSet<usize> = [1, 2].into_iter().collect();
        assert!(embed_on_sites(&sigma_z(), &sites, 3).is_err()); // wrong local dim
    }
}
