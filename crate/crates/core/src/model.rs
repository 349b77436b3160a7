//! Model definitions: the Hamiltonian text grammar, site partitions, the
//! structural classification of terms, and interaction decompositions.
//!
//! # Hamiltonian grammar
//!
//! A Hamiltonian is a sum of terms joined by `+` or `-`. Each term is an
//! optional real coefficient (decimal or scientific notation, `*` optionally
//! separating it from what follows) times a product of single-site factors
//! `X<site>`, `Y<site>`, `Z<site>` with 1-based site indices:
//!
//! ```text
//! 1.5*Z1 Z3 + 0.7*X2 - 0.25*Y1 Y2 Y4
//! ```
//!
//! Whitespace is insignificant. An omitted coefficient means 1; a bare
//! number with no factors is a multiple of the identity. Repeated letters on
//! one site multiply out symbolically (`X1 X1` is the identity), and the
//! final sum must be Hermitian: a term that folds to an imaginary
//! coefficient (for example a lone `X1 Y1`, which is `i Z1`) is rejected
//! with its source position.
//!
//! # Partitions
//!
//! A [`Partition`] names disjoint blocks of sites that individual observers
//! can access; every site in no named block belongs to the shared remainder.
//! JSON form: `{"n_sites": 4, "blocks": {"A": [1], "B": [2]}}` (sites 3 and
//! 4 form the remainder).

use crate::pauli::{phase_value, PauliOp, PauliString, PauliSum};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

// ---------------------------------------------------------------------------
// Lexing and parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum TokKind {
    Plus,
    Minus,
    Star,
    Number(f64),
    Letter(PauliOp),
}

#[derive(Debug, Clone, Copy)]
struct Token {
    kind: TokKind,
    line: usize,
    col: usize,
}

fn parse_err(line: usize, col: usize, message: impl fmt::Display) -> Error {
    Error::Parse { line, column: col, message: message.to_string() }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<(char, usize, usize)> = {
        let mut out = Vec::with_capacity(text.len());
        let (mut line, mut col) = (1usize, 1usize);
        for ch in text.chars() {
            out.push((ch, line, col));
            if ch == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        out
    };

    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (ch, line, col) = chars[i];
        match ch {
            c if c.is_whitespace() => i += 1,
            '+' => {
                toks.push(Token { kind: TokKind::Plus, line, col });
                i += 1;
            }
            '-' => {
                toks.push(Token { kind: TokKind::Minus, line, col });
                i += 1;
            }
            '*' => {
                toks.push(Token { kind: TokKind::Star, line, col });
                i += 1;
            }
            'X' | 'Y' | 'Z' => {
                toks.push(Token {
                    kind: TokKind::Letter(PauliOp::from_char(ch).unwrap()),
                    line,
                    col,
                });
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                let mut saw_digit = false;
                while i < chars.len() && chars[i].0.is_ascii_digit() {
                    saw_digit = true;
                    i += 1;
                }
                if i < chars.len() && chars[i].0 == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].0.is_ascii_digit() {
                        saw_digit = true;
                        i += 1;
                    }
                }
                if saw_digit && i < chars.len() && matches!(chars[i].0, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].0, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].0.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].0.is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        let (_, el, ec) = chars[i];
                        return Err(parse_err(el, ec, "malformed exponent in number"));
                    }
                }
                if !saw_digit {
                    return Err(parse_err(line, col, "expected digits in number"));
                }
                let literal: String = chars[start..i].iter().map(|&(c, _, _)| c).collect();
                let value: f64 = literal
                    .parse()
                    .map_err(|_| parse_err(line, col, format!("malformed number '{literal}'")))?;
                toks.push(Token { kind: TokKind::Number(value), line, col });
            }
            other => {
                return Err(parse_err(line, col, format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(toks)
}

/// Parse Hamiltonian text in the model grammar into a canonical Hermitian
/// [`PauliSum`] on `n_sites` sites.
///
/// Errors carry the 1-based line and column of the offending token, for
/// syntax problems, out-of-range site indices, and terms whose folded
/// coefficient comes out imaginary (which would make the sum non-Hermitian).
pub fn parse_hamiltonian(text: &str, n_sites: usize) -> Result<PauliSum> {
    if n_sites == 0 {
        return Err(Error::validation("n_sites must be positive"));
    }
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(parse_err(1, 1, "empty Hamiltonian text"));
    }

    let end_pos = {
        let last = toks[toks.len() - 1];
        (last.line, last.col + 1)
    };
    let peek = |i: usize| toks.get(i).map(|t| t.kind);
    let pos = |i: usize| toks.get(i).map(|t| (t.line, t.col)).unwrap_or(end_pos);

    // string -> (coefficient, source position of the first term building it)
    let mut acc: BTreeMap<PauliString, (Complex64, usize, usize)> = BTreeMap::new();
    let mut i = 0;
    let mut sign = 1.0;
    if let Some(TokKind::Minus) = peek(i) {
        sign = -1.0;
        i += 1;
    } else if let Some(TokKind::Plus) = peek(i) {
        i += 1;
    }

    loop {
        let (term_line, term_col) = pos(i);

        let mut coeff: Option<f64> = None;
        if let Some(TokKind::Number(v)) = peek(i) {
            coeff = Some(v);
            i += 1;
            if let Some(TokKind::Star) = peek(i) {
                i += 1;
            }
        }

        let mut letters = PauliString::identity(n_sites);
        let mut phase = 0u8;
        let mut saw_factor = false;
        while let Some(TokKind::Letter(op)) = peek(i) {
            let (l_line, l_col) = pos(i);
            i += 1;
            let site = match peek(i) {
                Some(TokKind::Number(v)) => {
                    let (s_line, s_col) = pos(i);
                    if v.fract() != 0.0 || v < 1.0 {
                        return Err(parse_err(
                            s_line,
                            s_col,
                            format!("site index must be a positive integer, got {v}"),
                        ));
                    }
                    let site = v as usize;
                    if site > n_sites {
                        return Err(parse_err(
                            s_line,
                            s_col,
                            format!("site index {site} outside the register 1..={n_sites}"),
                        ));
                    }
                    i += 1;
                    site
                }
                _ => {
                    return Err(parse_err(
                        l_line,
                        l_col,
                        format!("factor '{}' needs a site index", op.label()),
                    ));
                }
            };
            // Fold repeated letters on one site into the running product.
            let mut folded = letters.letters().to_vec();
            let (k, p) = folded[site - 1].product(op);
            phase = (phase + k) % 4;
            folded[site - 1] = p;
            letters = PauliString::from_letters(folded);
            saw_factor = true;
        }

        if coeff.is_none() && !saw_factor {
            let (l, c) = pos(i);
            return Err(parse_err(l, c, "expected a term (coefficient or Pauli factor)"));
        }

        let value = phase_value(phase) * (sign * coeff.unwrap_or(1.0));
        let entry = acc
            .entry(letters)
            .or_insert((Complex64::ZERO, term_line, term_col));
        entry.0 += value;

        match peek(i) {
            None => break,
            Some(TokKind::Plus) => {
                sign = 1.0;
                i += 1;
            }
            Some(TokKind::Minus) => {
                sign = -1.0;
                i += 1;
            }
            Some(_) => {
                let (l, c) = pos(i);
                return Err(parse_err(l, c, "expected '+' or '-' between terms"));
            }
        }
    }

    let sum = PauliSum::from_terms(n_sites, acc.iter().map(|(s, &(c, _, _))| (c, s.clone())))?;
    let scale = sum.max_abs_coeff();
    for (string, coeff) in sum.terms() {
        if coeff.im.abs() > crate::pauli::PRUNE_REL_TOL * scale {
            let &(_, line, col) = acc
                .get(string)
                .map(|(_, l, c)| (Complex64::ZERO, *l, *c))
                .as_ref()
                .unwrap_or(&(Complex64::ZERO, 1, 1));
            return Err(parse_err(
                line,
                col,
                format!(
                    "term '{string}' folds to an imaginary coefficient ({:+.3e}i); \
                     the sum must be Hermitian",
                    coeff.im
                ),
            ));
        }
    }
    Ok(sum)
}

/// Canonical text form of a sum in the model grammar.
///
/// For Hermitian sums (the grammar's range) this round-trips:
/// `parse_hamiltonian(format_pauli_sum(&h), n) == h` exactly, because `f64`
/// display is shortest-round-trip.
pub fn format_pauli_sum(sum: &PauliSum) -> String {
    sum.to_string()
}

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawPartition {
    n_sites: usize,
    blocks: BTreeMap<String, Vec<usize>>,
}

/// Disjoint named blocks of sites accessible to individual observers; sites
/// in no named block form the shared remainder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct Partition {
    n_sites: usize,
    blocks: BTreeMap<String, BTreeSet<usize>>,
    remainder_label: String,
}

impl Partition {
    /// Validate and build a partition. All problems found are reported
    /// together in one [`Error::Validation`].
    pub fn new(n_sites: usize, blocks: BTreeMap<String, BTreeSet<usize>>) -> Result<Self> {
        let mut problems = Vec::new();
        if n_sites == 0 {
            problems.push("n_sites must be positive".to_string());
        }
        if blocks.is_empty() {
            problems.push("at least one named block is required".to_string());
        }
        for (name, sites) in &blocks {
            if name.is_empty() {
                problems.push("block names must be non-empty".to_string());
            }
            if sites.is_empty() {
                problems.push(format!("block '{name}' has no sites"));
            }
            for &s in sites {
                if s == 0 || s > n_sites {
                    problems.push(format!(
                        "block '{name}' lists site {s} outside 1..={n_sites}"
                    ));
                }
            }
        }
        let mut owner: BTreeMap<usize, &str> = BTreeMap::new();
        for (name, sites) in &blocks {
            for &s in sites {
                if let Some(first) = owner.insert(s, name) {
                    problems.push(format!(
                        "site {s} belongs to both block '{first}' and block '{name}'"
                    ));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let mut remainder_label = String::from("C");
        while blocks.contains_key(&remainder_label) {
            remainder_label.push('_');
        }
        Ok(Partition { n_sites, blocks, remainder_label })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Named blocks in sorted-name order.
    pub fn blocks(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.blocks
    }

    pub fn block_names(&self) -> impl Iterator<Item = &str> {
        self.blocks.keys().map(String::as_str)
    }

    pub fn sites_of(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.blocks.get(name)
    }

    /// Hilbert dimension `2^{|sites|}` of a named block.
    pub fn block_dim(&self, name: &str) -> Option<usize> {
        self.blocks.get(name).map(|s| 1usize << s.len())
    }

    /// Sites belonging to no named block.
    pub fn remainder(&self) -> BTreeSet<usize> {
        let named: BTreeSet<usize> = self.blocks.values().flatten().copied().collect();
        (1..=self.n_sites).filter(|s| !named.contains(s)).collect()
    }

    /// Display label for the remainder: `C`, with underscores appended if a
    /// named block already claims that name.
    pub fn remainder_label(&self) -> &str {
        &self.remainder_label
    }

    pub fn block_of_site(&self, site: usize) -> Option<&str> {
        self.blocks
            .iter()
            .find(|(_, sites)| sites.contains(&site))
            .map(|(name, _)| name.as_str())
    }
}

impl TryFrom<RawPartition> for Partition {
    type Error = Error;
    fn try_from(raw: RawPartition) -> Result<Self> {
        let mut blocks = BTreeMap::new();
        let mut problems = Vec::new();
        for (name, sites) in raw.blocks {
            let set: BTreeSet<usize> = sites.iter().copied().collect();
            if set.len() != sites.len() {
                problems.push(format!("block '{name}' lists a site more than once"));
            }
            blocks.insert(name, set);
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Partition::new(raw.n_sites, blocks)
    }
}

impl From<Partition> for RawPartition {
    fn from(p: Partition) -> Self {
        RawPartition {
            n_sites: p.n_sites,
            blocks: p
                .blocks
                .into_iter()
                .map(|(name, sites)| (name, sites.into_iter().collect()))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Structural classification
// ---------------------------------------------------------------------------

/// Which named blocks a term's support intersects, plus whether it touches
/// the remainder. Terms touching at most one named block are allowed by the
/// interaction structure; terms touching two or more are not.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SupportClass {
    pub blocks: BTreeSet<String>,
    pub remainder: bool,
}

impl SupportClass {
    pub fn local(name: &str) -> Self {
        SupportClass { blocks: [name.to_string()].into(), remainder: false }
    }

    pub fn interaction(name: &str) -> Self {
        SupportClass { blocks: [name.to_string()].into(), remainder: true }
    }

    pub fn remainder_only() -> Self {
        SupportClass { blocks: BTreeSet::new(), remainder: true }
    }

    pub fn scalar() -> Self {
        SupportClass { blocks: BTreeSet::new(), remainder: false }
    }

    /// Allowed by the interaction structure: at most one named block.
    pub fn is_allowed(&self) -> bool {
        self.blocks.len() <= 1
    }

    /// Human-readable label, e.g. `A`, `A,C`, `C`, or `scalar`.
    pub fn label(&self, partition: &Partition) -> String {
        if self.blocks.is_empty() && !self.remainder {
            return "scalar".to_string();
        }
        let mut parts: Vec<&str> = self.blocks.iter().map(String::as_str).collect();
        if self.remainder {
            parts.push(partition.remainder_label());
        }
        parts.join(",")
    }
}

/// A term whose support touches two or more named blocks.
#[derive(Debug, Clone)]
pub struct OffendingTerm {
    pub string: PauliString,
    pub coefficient: Complex64,
    pub blocks: BTreeSet<String>,
}

/// Result of classifying a Hamiltonian's terms against a partition.
#[derive(Debug, Clone)]
pub struct StructureReport {
    hamiltonian: PauliSum,
    partition: Partition,
    buckets: BTreeMap<SupportClass, PauliSum>,
    hform_ok: bool,
    offending: Vec<OffendingTerm>,
}

/// Bucket every term of `h` by which named blocks its support intersects.
/// Remainder membership is tracked but never forbidden; the structure flag
/// `hform_ok` is false exactly when some term touches two or more named
/// blocks.
pub fn classify(h: &PauliSum, p: &Partition) -> Result<StructureReport> {
    if h.n_sites() != p.n_sites() {
        return Err(Error::shape(format!(
            "Hamiltonian acts on {} site(s) but the partition declares {}",
            h.n_sites(),
            p.n_sites()
        )));
    }
    let remainder = p.remainder();
    let mut buckets: BTreeMap<SupportClass, PauliSum> = BTreeMap::new();
    let mut offending = Vec::new();
    for (string, coeff) in h.terms() {
        let support = string.support();
        let blocks: BTreeSet<String> = p
            .blocks()
            .iter()
            .filter(|(_, sites)| !sites.is_disjoint(&support))
            .map(|(name, _)| name.clone())
            .collect();
        let touches_remainder = !remainder.is_disjoint(&support);
        let class = SupportClass { blocks, remainder: touches_remainder };
        if !class.is_allowed() {
            offending.push(OffendingTerm {
                string: string.clone(),
                coefficient: coeff,
                blocks: class.blocks.clone(),
            });
        }
        buckets
            .entry(class)
            .or_insert_with(|| PauliSum::zero(h.n_sites()))
            .accumulate(coeff, string.clone());
    }
    Ok(StructureReport {
        hamiltonian: h.clone(),
        partition: p.clone(),
        buckets,
        hform_ok: offending.is_empty(),
        offending,
    })
}

impl StructureReport {
    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn hform_ok(&self) -> bool {
        self.hform_ok
    }

    pub fn offending_terms(&self) -> &[OffendingTerm] {
        &self.offending
    }

    /// All buckets in canonical (sorted support-class) order.
    pub fn buckets(&self) -> impl Iterator<Item = (&SupportClass, &PauliSum)> {
        self.buckets.iter()
    }

    pub fn bucket(&self, class: &SupportClass) -> Option<&PauliSum> {
        self.buckets.get(class)
    }

    /// Terms supported entirely inside a named block.
    pub fn local_bucket(&self, name: &str) -> Option<&PauliSum> {
        self.bucket(&SupportClass::local(name))
    }

    /// Terms coupling a named block to the remainder.
    pub fn interaction_bucket(&self, name: &str) -> Option<&PauliSum> {
        self.bucket(&SupportClass::interaction(name))
    }

    /// Terms supported entirely inside the remainder (the self-Hamiltonian
    /// of the inaccessible component), zero if absent.
    pub fn remainder_hamiltonian(&self) -> PauliSum {
        self.bucket(&SupportClass::remainder_only())
            .cloned()
            .unwrap_or_else(|| PauliSum::zero(self.hamiltonian.n_sites()))
    }

    /// Exact sum of all buckets; always reconstructs the input.
    pub fn reconstruct(&self) -> PauliSum {
        let mut out = PauliSum::zero(self.hamiltonian.n_sites());
        for sum in self.buckets.values() {
            out.add_scaled_assign(Complex64::ONE, sum);
        }
        out
    }

    /// JSON value for CLI output.
    pub fn to_json_value(&self) -> serde_json::Value {
        let buckets: Vec<serde_json::Value> = self
            .buckets()
            .map(|(class, sum)| {
                serde_json::json!({
                    "blocks": class.blocks,
                    "remainder": class.remainder,
                    "label": class.label(&self.partition),
                    "allowed": class.is_allowed(),
                    "hamiltonian": format_pauli_sum(sum),
                })
            })
            .collect();
        let offending: Vec<serde_json::Value> = self
            .offending
            .iter()
            .map(|t| {
                serde_json::json!({
                    "term": t.string.to_string(),
                    "coefficient": [t.coefficient.re, t.coefficient.im],
                    "blocks": t.blocks,
                })
            })
            .collect();
        serde_json::json!({
            "n_sites": self.partition.n_sites(),
            "blocks": self.partition.blocks().iter()
                .map(|(name, sites)| (name.clone(), sites.iter().copied().collect::<Vec<_>>()))
                .collect::<BTreeMap<String, Vec<usize>>>(),
            "remainder_label": self.partition.remainder_label(),
            "remainder_sites": self.partition.remainder().iter().copied().collect::<Vec<_>>(),
            "hform_ok": self.hform_ok,
            "buckets": buckets,
            "offending_terms": offending,
        })
    }
}

// ---------------------------------------------------------------------------
// Interaction decomposition
// ---------------------------------------------------------------------------

/// One `V ⊗ S` pair of an interaction bucket: `v` is a single Pauli string
/// supported on the accessible block (unit coefficient), `s` collects the
/// matching remainder factors with the original coefficients.
#[derive(Debug, Clone)]
pub struct InteractionPair {
    pub v: PauliSum,
    pub s: PauliSum,
}

/// Decomposition `H^XC = Σ_a V_a ⊗ S_a` of one block's interaction bucket.
#[derive(Debug, Clone)]
pub struct InteractionDecomposition {
    pub subsystem: String,
    pub pairs: Vec<InteractionPair>,
}

/// Split a block's interaction bucket into pairwise-orthogonal `V ⊗ S`
/// pairs by grouping terms with the same Pauli restriction to the block.
/// Distinct restrictions are distinct Pauli strings, hence automatically
/// orthogonal under the Hilbert–Schmidt pairing. Purely local terms are not
/// part of any pair. Requires a structure with `hform_ok`.
pub fn interaction_decomposition(
    report: &StructureReport,
    subsystem: &str,
) -> Result<InteractionDecomposition> {
    let partition = report.partition();
    let block_sites = partition
        .sites_of(subsystem)
        .ok_or_else(|| Error::validation(format!("no block named '{subsystem}'")))?
        .clone();
    if !report.hform_ok() {
        return Err(Error::validation(
            "interaction decomposition requires the structured form; \
             this Hamiltonian couples two named blocks directly",
        ));
    }
    let n = report.hamiltonian().n_sites();
    let remainder = partition.remainder();
    let mut groups: BTreeMap<PauliString, PauliSum> = BTreeMap::new();
    if let Some(bucket) = report.interaction_bucket(subsystem) {
        for (string, coeff) in bucket.terms() {
            let v_key = string.masked(&block_sites);
            let s_part = string.masked(&remainder);
            groups
                .entry(v_key)
                .or_insert_with(|| PauliSum::zero(n))
                .accumulate(coeff, s_part);
        }
    }
    let pairs = groups
        .into_iter()
        .map(|(v, s)| InteractionPair { v: PauliSum::single(Complex64::ONE, v), s })
        .collect();
    Ok(InteractionDecomposition { subsystem: subsystem.to_string(), pairs })
}

impl InteractionDecomposition {
    /// Exact sum `Σ_a V_a · S_a` (the factors commute, having disjoint
    /// support), reconstructing the interaction bucket.
    pub fn reconstruct(&self, n_sites: usize) -> PauliSum {
        let mut out = PauliSum::zero(n_sites);
        for pair in &self.pairs {
            if let Ok(product) = PauliSum::product(&pair.v, &pair.s) {
                out.add_scaled_assign(Complex64::ONE, &product);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ModelFile {
    pub(crate) hamiltonian: String,
    pub(crate) partition: Partition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) description: Option<String>,
}

/// A Hamiltonian together with the partition it is analysed against.
#[derive(Debug, Clone)]
pub struct Model {
    pub hamiltonian: PauliSum,
    pub partition: Partition,
    pub name: Option<String>,
    pub description: Option<String>,
}

impl Model {
    pub fn new(hamiltonian: PauliSum, partition: Partition) -> Result<Self> {
        if hamiltonian.n_sites() != partition.n_sites() {
            return Err(Error::shape(format!(
                "Hamiltonian acts on {} site(s) but the partition declares {}",
                hamiltonian.n_sites(),
                partition.n_sites()
            )));
        }
        Ok(Model { hamiltonian, partition, name: None, description: None })
    }

    /// Parse grammar text against a partition.
    pub fn from_text(hamiltonian: &str, partition: Partition) -> Result<Self> {
        let h = parse_hamiltonian(hamiltonian, partition.n_sites())?;
        Model::new(h, partition)
    }

    /// Load from the JSON model format:
    /// `{"hamiltonian": "...", "partition": {...}, "name": ..., "description": ...}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let hamiltonian = parse_hamiltonian(&file.hamiltonian, file.partition.n_sites())?;
        Ok(Model {
            hamiltonian,
            partition: file.partition,
            name: file.name,
            description: file.description,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Model::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_dto())
            .expect("model serialization cannot fail")
    }

    pub(crate) fn to_file_dto(&self) -> ModelFile {
        ModelFile {
            hamiltonian: format_pauli_sum(&self.hamiltonian),
            partition: self.partition.clone(),
            name: self.name.clone(),
            description: self.description.clone(),
        }
    }

    /// Classify this model's Hamiltonian against its partition.
    pub fn structure(&self) -> StructureReport {
        classify(&self.hamiltonian, &self.partition)
            .expect("model invariant: sites match by construction")
    }
}
