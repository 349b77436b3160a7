//! Exact symbolic algebra of Pauli strings and real-linear combinations of
//! them.
//!
//! A [`PauliString`] is one letter from `{I, X, Y, Z}` per site; a
//! [`PauliSum`] maps strings to complex coefficients. Products and
//! commutators are evaluated letterwise with integer phase bookkeeping
//! (powers of `i`), so the only floating-point error that can enter is the
//! arithmetic on coefficients themselves. Distinct strings are orthogonal
//! under the normalized Hilbert–Schmidt pairing `tr(A†B)/2^n`, which makes
//! inner products and norms exact sums over coefficients.

use crate::densemat::{self, CMatrix};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Relative coefficient threshold used when pruning sums after arithmetic.
pub const PRUNE_REL_TOL: f64 = 1e-12;

/// One single-site Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

/// `i^k` for an integer phase exponent, evaluated exactly.
pub(crate) fn phase_value(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl PauliOp {
    /// Single-letter product. Returns the phase exponent `k` and the
    /// resulting letter, so that `self * rhs = i^k * result`.
    pub fn product(self, rhs: PauliOp) -> (u8, PauliOp) {
        use PauliOp::*;
        match (self, rhs) {
            (I, p) => (0, p),
            (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    pub fn label(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    /// Dense 2x2 matrix of this letter.
    pub fn matrix(self) -> CMatrix {
        let z = Complex64::ZERO;
        let one = Complex64::ONE;
        let i = Complex64::I;
        match self {
            PauliOp::I => CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
            PauliOp::X => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
            PauliOp::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            PauliOp::Z => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        }
    }
}

/// A tensor product of Pauli letters, one per site. Site 1 is the leftmost
/// letter (the most significant factor, matching
/// [`densemat::embed_on_sites`]).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    letters: Vec<PauliOp>,
}

impl PauliString {
    /// The all-identity string on `n` sites.
    pub fn identity(n: usize) -> Self {
        PauliString { letters: vec![PauliOp::I; n] }
    }

    pub fn from_letters(letters: Vec<PauliOp>) -> Self {
        PauliString { letters }
    }

    /// Build a string on `n` sites from `(site, letter)` pairs (1-based
    /// sites). Rejects out-of-range or duplicate sites.
    pub fn from_pairs(n: usize, pairs: &[(usize, PauliOp)]) -> Result<Self> {
        let mut letters = vec![PauliOp::I; n];
        let mut seen = BTreeSet::new();
        for &(site, op) in pairs {
            if site == 0 || site > n {
                return Err(Error::validation(format!(
                    "site {site} outside the register 1..={n}"
                )));
            }
            if !seen.insert(site) {
                return Err(Error::validation(format!("site {site} listed twice")));
            }
            letters[site - 1] = op;
        }
        Ok(PauliString { letters })
    }

    pub fn n_sites(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[PauliOp] {
        &self.letters
    }

    /// Letter at a 1-based site.
    ///
    /// # Panics
    /// If the site is outside `1..=n_sites`.
    pub fn letter(&self, site: usize) -> PauliOp {
        assert!(site >= 1 && site <= self.letters.len(), "site {site} out of range");
        self.letters[site - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == PauliOp::I)
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != PauliOp::I).count()
    }

    /// Sites (1-based) carrying a non-identity letter.
    pub fn support(&self) -> BTreeSet<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != PauliOp::I)
            .map(|(idx, _)| idx + 1)
            .collect()
    }

    /// Product `self * rhs = i^k * string`.
    ///
    /// # Panics
    /// If the strings have different lengths.
    pub fn product(&self, rhs: &PauliString) -> (u8, PauliString) {
        assert_eq!(self.letters.len(), rhs.letters.len(), "string length mismatch");
        let mut phase = 0u8;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (k, p) = a.product(b);
                phase = (phase + k) % 4;
                p
            })
            .collect();
        (phase, PauliString { letters })
    }

    /// Two strings commute exactly when an even number of sites carry
    /// differing non-identity letters.
    ///
    /// # Panics
    /// If the strings have different lengths.
    pub fn commutes_with(&self, rhs: &PauliString) -> bool {
        assert_eq!(self.letters.len(), rhs.letters.len(), "string length mismatch");
        let anticommuting = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .filter(|(&a, &b)| a != PauliOp::I && b != PauliOp::I && a != b)
            .count();
        anticommuting % 2 == 0
    }

    /// Letters on the given sites, in ascending site order, as a short
    /// string of length `|sites|`.
    pub fn restrict(&self, sites: &BTreeSet<usize>) -> PauliString {
        PauliString {
            letters: sites.iter().map(|&s| self.letter(s)).collect(),
        }
    }

    /// Full-width copy keeping letters only on the given sites (identity
    /// elsewhere).
    pub fn masked(&self, sites: &BTreeSet<usize>) -> PauliString {
        PauliString {
            letters: self
                .letters
                .iter()
                .enumerate()
                .map(|(idx, &p)| if sites.contains(&(idx + 1)) { p } else { PauliOp::I })
                .collect(),
        }
    }
}

impl fmt::Display for PauliString {
    /// Renders as space-separated letter-site factors, e.g. `X1 Z3`; the
    /// identity renders as `I`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (idx, &p) in self.letters.iter().enumerate() {
            if p == PauliOp::I {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}{}", p.label(), idx + 1)?;
            first = false;
        }
        Ok(())
    }
}

/// A complex-linear combination of Pauli strings on a fixed register.
///
/// Terms are held in a sorted map, so iteration order (and everything
/// derived from it: display, serialization, bucketing) is deterministic.
/// Arithmetic constructors prune coefficients below [`PRUNE_REL_TOL`]
/// relative to the largest coefficient of the result.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_sites: usize) -> Self {
        PauliSum { n_sites, terms: BTreeMap::new() }
    }

    /// The identity operator (coefficient 1 on the all-identity string).
    pub fn identity(n_sites: usize) -> Self {
        Self::single(Complex64::ONE, PauliString::identity(n_sites))
    }

    /// Single-term sum; a zero coefficient yields the zero sum.
    pub fn single(coeff: Complex64, string: PauliString) -> Self {
        let n_sites = string.n_sites();
        let mut terms = BTreeMap::new();
        if coeff != Complex64::ZERO {
            terms.insert(string, coeff);
        }
        PauliSum { n_sites, terms }
    }

    /// Accumulate `(coefficient, string)` pairs into a sum on `n_sites`
    /// sites. Strings of the wrong length are rejected.
    pub fn from_terms(
        n_sites: usize,
        terms: impl IntoIterator<Item = (Complex64, PauliString)>,
    ) -> Result<Self> {
        let mut sum = PauliSum::zero(n_sites);
        for (coeff, string) in terms {
            if string.n_sites() != n_sites {
                return Err(Error::shape(format!(
                    "string {string} has {} site(s), expected {n_sites}",
                    string.n_sites()
                )));
            }
            sum.accumulate(coeff, string);
        }
        sum.prune(PRUNE_REL_TOL);
        Ok(sum)
    }

    pub(crate) fn accumulate(&mut self, coeff: Complex64, string: PauliString) {
        let entry = self.terms.entry(string).or_insert(Complex64::ZERO);
        *entry += coeff;
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate terms in canonical (sorted-string) order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, Complex64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    /// Coefficient of a string (zero if absent).
    pub fn coeff(&self, string: &PauliString) -> Complex64 {
        self.terms.get(string).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.norm()))
    }

    /// Norm under the normalized Hilbert–Schmidt pairing: since distinct
    /// strings are orthonormal this is just the l2 norm of the coefficients.
    pub fn hs_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Normalized Hilbert–Schmidt inner product `tr(a† b) / 2^n`.
    ///
    /// # Panics
    /// If the register sizes differ.
    pub fn hs_inner(a: &PauliSum, b: &PauliSum) -> Complex64 {
        assert_eq!(a.n_sites, b.n_sites, "register size mismatch");
        // Walk the smaller map.
        let small = if a.len() <= b.len() { a } else { b };
        let mut acc = Complex64::ZERO;
        for (s, _) in small.terms() {
            acc += a.coeff(s).conj() * b.coeff(s);
        }
        acc
    }

    /// Union of the supports of all terms.
    pub fn support(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for (s, _) in self.terms() {
            out.extend(s.support());
        }
        out
    }

    /// Hermitian within `tol` relative to the largest coefficient, i.e. all
    /// coefficients are real up to that tolerance (Pauli strings are
    /// self-adjoint).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs_coeff();
        self.terms.values().all(|c| c.im.abs() <= tol * scale)
    }

    pub fn adjoint(&self) -> Self {
        PauliSum {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c.conj())).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = PauliSum {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|(s, c)| (s.clone(), c * factor)).collect(),
        };
        out.prune(PRUNE_REL_TOL);
        out
    }

    /// `self / hs_norm`, or `None` for the zero sum.
    pub fn normalized(&self) -> Option<Self> {
        let norm = self.hs_norm();
        if norm == 0.0 {
            None
        } else {
            Some(self.scale(Complex64::new(1.0 / norm, 0.0)))
        }
    }

    /// In-place `self += factor * other`, without pruning.
    ///
    /// # Panics
    /// If the register sizes differ.
    pub fn add_scaled_assign(&mut self, factor: Complex64, other: &PauliSum) {
        assert_eq!(self.n_sites, other.n_sites, "register size mismatch");
        for (s, c) in other.terms() {
            self.accumulate(factor * c, s.clone());
        }
    }

    pub fn add(a: &PauliSum, b: &PauliSum) -> Result<Self> {
        if a.n_sites != b.n_sites {
            return Err(Error::shape(format!(
                "cannot add sums on {} and {} sites",
                a.n_sites, b.n_sites
            )));
        }
        let mut out = a.clone();
        out.add_scaled_assign(Complex64::ONE, b);
        out.prune(PRUNE_REL_TOL);
        Ok(out)
    }

    pub fn sub(a: &PauliSum, b: &PauliSum) -> Result<Self> {
        if a.n_sites != b.n_sites {
            return Err(Error::shape(format!(
                "cannot subtract sums on {} and {} sites",
                a.n_sites, b.n_sites
            )));
        }
        let mut out = a.clone();
        out.add_scaled_assign(-Complex64::ONE, b);
        out.prune(PRUNE_REL_TOL);
        Ok(out)
    }

    /// Full operator product.
    pub fn product(a: &PauliSum, b: &PauliSum) -> Result<Self> {
        if a.n_sites != b.n_sites {
            return Err(Error::shape(format!(
                "cannot multiply sums on {} and {} sites",
                a.n_sites, b.n_sites
            )));
        }
        let mut out = PauliSum::zero(a.n_sites);
        for (sa, ca) in a.terms() {
            for (sb, cb) in b.terms() {
                let (k, s) = sa.product(sb);
                out.accumulate(phase_value(k) * ca * cb, s);
            }
        }
        out.prune(PRUNE_REL_TOL);
        Ok(out)
    }

    /// Commutator `[a, b] = ab - ba`, evaluated termwise: commuting string
    /// pairs contribute nothing, anticommuting pairs contribute
    /// `2 i^k c_a c_b` on the product string.
    pub fn commutator(a: &PauliSum, b: &PauliSum) -> Result<Self> {
        if a.n_sites != b.n_sites {
            return Err(Error::shape(format!(
                "cannot commute sums on {} and {} sites",
                a.n_sites, b.n_sites
            )));
        }
        let mut out = PauliSum::zero(a.n_sites);
        for (sa, ca) in a.terms() {
            for (sb, cb) in b.terms() {
                if sa.commutes_with(sb) {
                    continue;
                }
                let (k, s) = sa.product(sb);
                out.accumulate(phase_value(k) * ca * cb * 2.0, s);
            }
        }
        out.prune(PRUNE_REL_TOL);
        Ok(out)
    }

    /// Drop coefficients whose modulus is at most `rel_tol` times the
    /// largest coefficient modulus (exact zeros always drop).
    pub fn prune(&mut self, rel_tol: f64) {
        let scale = self.max_abs_coeff();
        let threshold = rel_tol * scale;
        self.terms.retain(|_, c| c.norm() > threshold);
    }

    /// Dense matrix of the sum, guarded by the process-wide dimension cap.
    pub fn to_dense(&self) -> Result<CMatrix> {
        self.to_dense_with_cap(densemat::max_dim())
    }

    /// [`PauliSum::to_dense`] with an explicit cap.
    pub fn to_dense_with_cap(&self, cap: usize) -> Result<CMatrix> {
        let n = self.n_sites;
        if n >= usize::BITS as usize {
            return Err(Error::Capacity { dim: usize::MAX, max: cap });
        }
        let dim = 1usize << n;
        densemat::check_cap(dim, cap)?;
        let mut out = CMatrix::zeros(dim, dim);
        for (string, coeff) in self.terms() {
            scatter_string(&mut out, string.letters(), coeff, n);
        }
        Ok(out)
    }
}

/// Add `coeff * string` into a dense accumulator. Each Pauli string has
/// exactly one nonzero entry per row: the column differs from the row by a
/// bit flip on X/Y sites, and the value is a product of exact unit factors.
fn scatter_string(out: &mut CMatrix, letters: &[PauliOp], coeff: Complex64, n: usize) {
    let dim = 1usize << n;
    let mut flip = 0usize;
    for (j, &p) in letters.iter().enumerate() {
        if matches!(p, PauliOp::X | PauliOp::Y) {
            flip |= 1 << (n - 1 - j);
        }
    }
    for row in 0..dim {
        let col = row ^ flip;
        let mut val = coeff;
        for (j, &p) in letters.iter().enumerate() {
            let bit = (row >> (n - 1 - j)) & 1;
            val *= match p {
                PauliOp::I | PauliOp::X => Complex64::ONE,
                PauliOp::Y => {
                    if bit == 0 {
                        -Complex64::I
                    } else {
                        Complex64::I
                    }
                }
                PauliOp::Z => {
                    if bit == 0 {
                        Complex64::ONE
                    } else {
                        -Complex64::ONE
                    }
                }
            };
        }
        out[(row, col)] += val;
    }
}

impl fmt::Display for PauliSum {
    /// Canonical text form in the model grammar: terms in sorted-string
    /// order joined by `+`/`-`, coefficients of modulus one omitted,
    /// identity terms rendered as bare numbers. Sums with genuinely complex
    /// coefficients (which the grammar cannot express) mark the imaginary
    /// part with a trailing `i`; such output is diagnostic-only and will not
    /// re-parse.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let scale = self.max_abs_coeff();
        let mut first = true;
        for (string, coeff) in self.terms() {
            let real = coeff.im.abs() <= PRUNE_REL_TOL * scale;
            let (negative, magnitude) = if real {
                (coeff.re < 0.0, coeff.re.abs())
            } else {
                (false, 0.0)
            };
            if first {
                if negative {
                    write!(f, "-")?;
                }
                first = false;
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if !real {
                write!(f, "({}{}{}i)", coeff.re, if coeff.im < 0.0 { "" } else { "+" }, coeff.im)?;
                if !string.is_identity() {
                    write!(f, "*{string}")?;
                }
                continue;
            }
            if string.is_identity() {
                write!(f, "{magnitude}")?;
            } else if magnitude == 1.0 {
                write!(f, "{string}")?;
            } else {
                write!(f, "{magnitude}*{string}")?;
            }
        }
        Ok(())
    }
}
