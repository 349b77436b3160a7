//! Classical-compatibility decision procedures.
//!
//! For a structured Hamiltonian (every term touching at most one named
//! block), measurements by different observers stay classically compatible
//! exactly when an infinite hierarchy of nested commutator constraints
//! vanishes: for observers `X != Y`,
//!
//! ```text
//! [S^X_a, (C_mu(k) ... C_mu(1)) S^Y_b] = 0
//! ```
//!
//! where each superoperator tag is either `C_0 = [H_C, .]` (the remainder
//! Hamiltonian) or `C_(Z,i) = [S^Z_i, .]` for any observer `Z`, and the
//! product grows to the left (the first sequence element acts first). The
//! empty sequence encodes the bare constraint `[S^X_a, S^Y_b] = 0`; the
//! non-trivial longer constraints are those whose last-applied tag is the
//! remainder Hamiltonian.
//!
//! Two independent deciders are provided:
//!
//! * [`check_enumerated`] walks the constraint tree directly to a depth
//!   bound, pruning subtrees that evaluate to zero, and reports the first
//!   violated constraint. Complete only to its depth, but its witnesses are
//!   direct evaluations.
//! * [`check_closure`] computes, per observer `Y`, the smallest subspace of
//!   remainder operators containing `{S^Y_b}` and closed under every
//!   superoperator tag. The operator space on the remainder is finite
//!   dimensional, so this fixed point decides all infinitely many
//!   constraints at once: compatibility holds iff every `S^X_a` (`X != Y`)
//!   commutes with the whole closure.
//!
//! [`bch_partial`] evaluates the truncated Heisenberg series
//! `sum_{n<=N} (i tau)^n / n! ad_H^n(op)`, whose truncation error scales as
//! `O(tau^{N+1})`; it ties the commutator hierarchy back to what evolved
//! projectors actually do at short times.

use crate::densemat::CMatrix;
use crate::model::StructureReport;
use crate::pauli::PauliSum;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

/// Relative tolerance for accepting a new closure basis direction.
pub const CLOSURE_REL_TOL: f64 = 1e-10;

/// Relative tolerance above which a constraint commutator counts as violated.
pub const WITNESS_REL_TOL: f64 = 1e-12;

/// Default work budget (commutator evaluations) for [`check_enumerated`].
pub const DEFAULT_ENUM_BUDGET: u64 = 1_000_000;

/// Default cap on the closure dimension for [`check_closure`].
pub const DEFAULT_CLOSURE_CAP: usize = 4096;

/// Hard ceiling on [`bch_partial`] orders (factorial conditioning).
pub const MAX_BCH_ORDER: usize = 20;

/// One superoperator tag of a constraint sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tag {
    /// Commutator with the remainder Hamiltonian `H_C`.
    Hc,
    /// Commutator with the interaction factor `S^block_index`.
    S { block: String, index: usize },
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Hc => write!(f, "HC"),
            Tag::S { block, index } => write!(f, "S({block},{index})"),
        }
    }
}

/// A finite sequence of superoperator tags; element 0 is applied first.
/// The empty sequence denotes the bare two-operator commutator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sequence(pub Vec<Tag>);

impl Sequence {
    pub fn empty() -> Self {
        Sequence(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn extended(&self, tag: Tag) -> Self {
        let mut out = self.0.clone();
        out.push(tag);
        Sequence(out)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, tag) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{tag}")?;
        }
        write!(f, "]")
    }
}

/// The generator data the hierarchy runs on: the remainder Hamiltonian and
/// every block's interaction factors `S^X_i`, extracted from a structure
/// report.
#[derive(Debug, Clone)]
pub struct Generators {
    n_sites: usize,
    h_c: PauliSum,
    s_ops: BTreeMap<String, Vec<PauliSum>>,
}

impl Generators {
    /// Extract generators from a classified structure. Fails if the
    /// structure couples two named blocks directly (the hierarchy is only
    /// defined for the structured form).
    pub fn from_report(report: &StructureReport) -> Result<Self> {
        if !report.hform_ok() {
            return Err(Error::validation(
                "constraint generators require the structured form; \
                 this Hamiltonian couples two named blocks directly",
            ));
        }
        let n_sites = report.hamiltonian().n_sites();
        let mut s_ops = BTreeMap::new();
        for name in report.partition().block_names() {
            let decomp = crate::model::interaction_decomposition(report, name)?;
            s_ops.insert(
                name.to_string(),
                decomp.pairs.into_iter().map(|p| p.s).collect::<Vec<_>>(),
            );
        }
        Ok(Generators { n_sites, h_c: report.remainder_hamiltonian(), s_ops })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn h_c(&self) -> &PauliSum {
        &self.h_c
    }

    /// Interaction factors of one block (empty if it has none).
    pub fn s_ops(&self, block: &str) -> &[PauliSum] {
        self.s_ops.get(block).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn blocks(&self) -> impl Iterator<Item = &str> {
        self.s_ops.keys().map(String::as_str)
    }

    fn resolve(&self, tag: &Tag) -> Result<&PauliSum> {
        match tag {
            Tag::Hc => Ok(&self.h_c),
            Tag::S { block, index } => self
                .s_ops
                .get(block)
                .and_then(|ops| ops.get(*index))
                .ok_or_else(|| Error::validation(format!("unknown generator tag {tag}"))),
        }
    }

    /// Every tag, in the deterministic order used by both deciders: the
    /// remainder Hamiltonian first, then `S` tags by block name and index.
    pub fn all_tags(&self) -> Vec<Tag> {
        let mut tags = vec![Tag::Hc];
        for (block, ops) in &self.s_ops {
            for index in 0..ops.len() {
                tags.push(Tag::S { block: block.clone(), index });
            }
        }
        tags
    }
}

/// Apply a tag sequence to a starting operator: element 0 first, so the
/// result is `[g_{mu(k)}, [..., [g_{mu(1)}, start]...]]`.
pub fn nested_commutator(
    mu: &Sequence,
    start: &PauliSum,
    generators: &Generators,
) -> Result<PauliSum> {
    let mut acc = start.clone();
    for tag in &mu.0 {
        let g = generators.resolve(tag)?;
        acc = PauliSum::commutator(g, &acc)?;
        if acc.is_zero() {
            return Ok(acc);
        }
    }
    Ok(acc)
}

/// Which decision procedure produced a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CheckMethod {
    Enumeration { depth: usize },
    Closure,
}

/// Evidence for an incompatibility verdict.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompatWitness {
    /// The Hamiltonian couples two named blocks directly; the hierarchy
    /// never ran.
    Structure {
        term: String,
        coefficient: [f64; 2],
        blocks: Vec<String>,
    },
    /// A violated constraint: `[S^outer_block_outer_index, C_sequence
    /// S^start_block_start_index]` has the given Hilbert-Schmidt norm.
    Commutator {
        outer_block: String,
        outer_index: usize,
        sequence: Sequence,
        start_block: String,
        start_index: usize,
        violation_norm: f64,
    },
}

/// Verdict of a compatibility check.
#[derive(Debug, Clone, Serialize)]
pub struct CompatReport {
    pub compatible: bool,
    pub method: CheckMethod,
    pub witness: Option<CompatWitness>,
    /// Largest per-observer closure dimension (closure method only).
    pub closure_dimension: Option<usize>,
    /// Commutator evaluations performed.
    pub sequences_checked: u64,
}

fn structure_gate_report(report: &StructureReport, method: CheckMethod) -> Option<CompatReport> {
    if report.hform_ok() {
        return None;
    }
    let term = &report.offending_terms()[0];
    Some(CompatReport {
        compatible: false,
        method,
        witness: Some(CompatWitness::Structure {
            term: term.string.to_string(),
            coefficient: [term.coefficient.re, term.coefficient.im],
            blocks: term.blocks.iter().cloned().collect(),
        }),
        closure_dimension: None,
        sequences_checked: 0,
    })
}

struct Budget {
    left: u64,
    used: u64,
}

impl Budget {
    fn new(limit: u64) -> Self {
        Budget { left: limit, used: 0 }
    }

    fn spend(&mut self, what: &str) -> Result<()> {
        if self.left == 0 {
            return Err(Error::Resource { what: what.to_string(), partial: None });
        }
        self.left -= 1;
        self.used += 1;
        Ok(())
    }
}

/// Evaluate the hierarchy by direct enumeration: the bare constraint plus
/// every sequence of length `<= depth` whose last-applied tag is the
/// remainder Hamiltonian, over all ordered pairs of distinct observers.
/// Subtrees whose operator is already zero are pruned; the first violated
/// constraint becomes the witness. A Hamiltonian that is not in the
/// structured form short-circuits to an incompatible verdict with the
/// offending term as witness.
pub fn check_enumerated(report: &StructureReport, depth: usize) -> Result<CompatReport> {
    check_enumerated_with_budget(report, depth, DEFAULT_ENUM_BUDGET)
}

/// [`check_enumerated`] with an explicit work budget (counted in commutator
/// evaluations). On exhaustion the resource error carries the partial
/// report: no violation was found among the constraints checked so far.
pub fn check_enumerated_with_budget(
    report: &StructureReport,
    depth: usize,
    budget: u64,
) -> Result<CompatReport> {
    let method = CheckMethod::Enumeration { depth };
    if let Some(gate) = structure_gate_report(report, method.clone()) {
        return Ok(gate);
    }
    let gens = Generators::from_report(report)?;
    let tags = gens.all_tags();
    let names: Vec<String> = gens.blocks().map(str::to_string).collect();
    let mut budget = Budget::new(budget);
    let mut witness: Option<CompatWitness> = None;

    'pairs: for outer in &names {
        let outer_ops = gens.s_ops(outer);
        if outer_ops.is_empty() {
            continue;
        }
        for start_block in &names {
            if start_block == outer {
                continue;
            }
            for (b, start) in gens.s_ops(start_block).iter().enumerate() {
                let found = enumerate_from(
                    start,
                    &Sequence::empty(),
                    depth,
                    &gens,
                    &tags,
                    outer,
                    outer_ops,
                    start_block,
                    b,
                    &mut budget,
                )
                .map_err(|e| attach_partial(e, report, &method, budget.used))?;
                if found.is_some() {
                    witness = found;
                    break 'pairs;
                }
            }
        }
    }

    Ok(CompatReport {
        compatible: witness.is_none(),
        method,
        witness,
        closure_dimension: None,
        sequences_checked: budget.used,
    })
}

fn attach_partial(err: Error, report: &StructureReport, method: &CheckMethod, used: u64) -> Error {
    match err {
        Error::Resource { what, partial: None } => Error::Resource {
            what,
            partial: Some(Box::new(CompatReport {
                compatible: true,
                method: method.clone(),
                witness: None,
                closure_dimension: None,
                sequences_checked: used,
            })),
        },
        other => {
            let _ = report;
            other
        }
    }
}

/// Depth-first walk from one starting operator. At the root the bare
/// constraints are tested; every child reached through the remainder
/// Hamiltonian is a candidate constraint. Pre-order recursion, tags in
/// [`Generators::all_tags`] order, makes witness selection deterministic.
#[allow(clippy::too_many_arguments)]
fn enumerate_from(
    current: &PauliSum,
    seq: &Sequence,
    depth: usize,
    gens: &Generators,
    tags: &[Tag],
    outer: &str,
    outer_ops: &[PauliSum],
    start_block: &str,
    start_index: usize,
    budget: &mut Budget,
) -> Result<Option<CompatWitness>> {
    if seq.is_empty() {
        if let Some(w) = test_constraint(
            current,
            seq,
            outer,
            outer_ops,
            start_block,
            start_index,
            budget,
        )? {
            return Ok(Some(w));
        }
    }
    if seq.len() >= depth {
        return Ok(None);
    }
    for tag in tags {
        budget.spend("sequence enumeration budget exhausted")?;
        let g = gens.resolve(tag)?;
        let child = PauliSum::commutator(g, current)?;
        if child.is_zero() {
            continue;
        }
        let child_seq = seq.extended(tag.clone());
        if *tag == Tag::Hc {
            if let Some(w) = test_constraint(
                &child,
                &child_seq,
                outer,
                outer_ops,
                start_block,
                start_index,
                budget,
            )? {
                return Ok(Some(w));
            }
        }
        if let Some(w) = enumerate_from(
            &child,
            &child_seq,
            depth,
            gens,
            tags,
            outer,
            outer_ops,
            start_block,
            start_index,
            budget,
        )? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn test_constraint(
    operand: &PauliSum,
    seq: &Sequence,
    outer: &str,
    outer_ops: &[PauliSum],
    start_block: &str,
    start_index: usize,
    budget: &mut Budget,
) -> Result<Option<CompatWitness>> {
    let operand_norm = operand.hs_norm();
    for (a, s) in outer_ops.iter().enumerate() {
        budget.spend("sequence enumeration budget exhausted")?;
        let comm = PauliSum::commutator(s, operand)?;
        let norm = comm.hs_norm();
        if norm > WITNESS_REL_TOL * (1.0 + s.hs_norm() * operand_norm) {
            return Ok(Some(CompatWitness::Commutator {
                outer_block: outer.to_string(),
                outer_index: a,
                sequence: seq.clone(),
                start_block: start_block.to_string(),
                start_index,
                violation_norm: norm,
            }));
        }
    }
    Ok(None)
}

struct ClosureElem {
    /// Orthonormalized basis direction.
    op: PauliSum,
    /// Raw generating sequence (provenance, not orthogonalized).
    seq: Sequence,
    start_index: usize,
}

/// Decide compatibility completely via the per-observer closure fixed
/// point. For each observer `Y`, the span of `{S^Y_b}` is closed under
/// commutation with the remainder Hamiltonian and with every observer's
/// interaction factors; the model is compatible iff every `S^X_a`
/// (`X != Y`) commutes with the entire closure. The closure lives inside
/// the operator space of the remainder, so it is finite and the procedure
/// terminates; `closure_dimension` reports the largest subspace found.
pub fn check_closure(report: &StructureReport) -> Result<CompatReport> {
    check_closure_with_cap(report, DEFAULT_CLOSURE_CAP)
}

/// [`check_closure`] with an explicit cap on the closure dimension.
pub fn check_closure_with_cap(report: &StructureReport, cap: usize) -> Result<CompatReport> {
    let method = CheckMethod::Closure;
    if let Some(gate) = structure_gate_report(report, method.clone()) {
        return Ok(gate);
    }
    let gens = Generators::from_report(report)?;
    let tags = gens.all_tags();
    let names: Vec<String> = gens.blocks().map(str::to_string).collect();
    let mut max_dim = 0usize;
    let mut checks: u64 = 0;
    let mut witness: Option<CompatWitness> = None;

    'observers: for start_block in &names {
        let starts = gens.s_ops(start_block);
        if starts.is_empty() {
            continue;
        }

        // Breadth-first closure with provenance and twice-repeated modified
        // Gram-Schmidt against the accepted basis.
        let mut basis: Vec<ClosureElem> = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        let accept = |cand: &PauliSum,
                      seq: Sequence,
                      start_index: usize,
                      basis: &mut Vec<ClosureElem>,
                      queue: &mut VecDeque<usize>|
         -> Result<()> {
            let original_norm = cand.hs_norm();
            if original_norm == 0.0 {
                return Ok(());
            }
            let mut residual = cand.clone();
            for _ in 0..2 {
                for elem in basis.iter() {
                    let overlap = PauliSum::hs_inner(&elem.op, &residual);
                    if overlap != Complex64::ZERO {
                        residual.add_scaled_assign(-overlap, &elem.op);
                    }
                }
                residual.prune(crate::pauli::PRUNE_REL_TOL);
            }
            if residual.hs_norm() > CLOSURE_REL_TOL * original_norm {
                if basis.len() >= cap {
                    return Err(Error::Resource {
                        what: format!("closure dimension exceeded the cap of {cap}"),
                        partial: None,
                    });
                }
                let op = residual.normalized().expect("nonzero residual");
                basis.push(ClosureElem { op, seq, start_index });
                queue.push_back(basis.len() - 1);
            }
            Ok(())
        };

        for (b, s) in starts.iter().enumerate() {
            accept(s, Sequence::empty(), b, &mut basis, &mut queue)?;
        }
        while let Some(i) = queue.pop_front() {
            for tag in &tags {
                let g = gens.resolve(tag)?;
                let cand = PauliSum::commutator(g, &basis[i].op)?;
                checks += 1;
                if cand.is_zero() {
                    continue;
                }
                let seq = basis[i].seq.extended(tag.clone());
                let start_index = basis[i].start_index;
                accept(&cand, seq, start_index, &mut basis, &mut queue)?;
            }
        }
        max_dim = max_dim.max(basis.len());

        // Cross-observer commutation against the whole closure, in basis
        // insertion order.
        for elem in &basis {
            for outer in &names {
                if outer == start_block {
                    continue;
                }
                for (a, s) in gens.s_ops(outer).iter().enumerate() {
                    let comm = PauliSum::commutator(s, &elem.op)?;
                    checks += 1;
                    if comm.hs_norm() > WITNESS_REL_TOL * (1.0 + s.hs_norm()) {
                        witness = Some(reconstruct_witness(
                            &gens,
                            &basis,
                            elem,
                            outer,
                            a,
                            start_block,
                            starts,
                        )?);
                        break 'observers;
                    }
                }
            }
        }
    }

    Ok(CompatReport {
        compatible: witness.is_none(),
        method,
        witness,
        closure_dimension: Some(max_dim),
        sequences_checked: checks,
    })
}

/// Turn a violation against an orthonormalized closure direction into a
/// directly re-evaluable constraint witness. The raw provenance sequence of
/// the violating element almost always works; if cancellation makes it
/// vanish, earlier provenance sequences are tried, and finally a bounded
/// breadth-first sweep over all sequences (the violating direction lies in
/// their span, so one of them must fail).
fn reconstruct_witness(
    gens: &Generators,
    basis: &[ClosureElem],
    violating: &ClosureElem,
    outer: &str,
    outer_index: usize,
    start_block: &str,
    starts: &[PauliSum],
) -> Result<CompatWitness> {
    let s_outer = &gens.s_ops(outer)[outer_index];
    let make = |seq: &Sequence, start_index: usize, norm: f64| CompatWitness::Commutator {
        outer_block: outer.to_string(),
        outer_index,
        sequence: seq.clone(),
        start_block: start_block.to_string(),
        start_index,
        violation_norm: norm,
    };
    let try_seq = |seq: &Sequence, start_index: usize| -> Result<Option<f64>> {
        let raw = nested_commutator(seq, &starts[start_index], gens)?;
        let comm = PauliSum::commutator(s_outer, &raw)?;
        let norm = comm.hs_norm();
        if norm > WITNESS_REL_TOL * (1.0 + s_outer.hs_norm() * raw.hs_norm()) {
            Ok(Some(norm))
        } else {
            Ok(None)
        }
    };

    if let Some(norm) = try_seq(&violating.seq, violating.start_index)? {
        return Ok(make(&violating.seq, violating.start_index, norm));
    }
    for elem in basis {
        if let Some(norm) = try_seq(&elem.seq, elem.start_index)? {
            return Ok(make(&elem.seq, elem.start_index, norm));
        }
    }

    // Bounded sweep: all raw sequences (zero subtrees pruned) up to one
    // more than the deepest provenance sequence. Spanning guarantees a hit.
    let tags = gens.all_tags();
    let max_len = basis.iter().map(|e| e.seq.len()).max().unwrap_or(0) + 1;
    let mut frontier: Vec<(Sequence, usize, PauliSum)> = starts
        .iter()
        .enumerate()
        .map(|(b, s)| (Sequence::empty(), b, s.clone()))
        .collect();
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for (seq, b, op) in &frontier {
            let comm = PauliSum::commutator(s_outer, op)?;
            let norm = comm.hs_norm();
            if norm > WITNESS_REL_TOL * (1.0 + s_outer.hs_norm() * op.hs_norm()) {
                return Ok(make(seq, *b, norm));
            }
            for tag in &tags {
                let g = gens.resolve(tag)?;
                let child = PauliSum::commutator(g, op)?;
                if !child.is_zero() {
                    next.push((seq.extended(tag.clone()), *b, child));
                }
            }
        }
        frontier = next;
    }
    // Unreachable with floating-point-generic coefficients; documented as a
    // verdict without a reconstructed sequence.
    Ok(make(&violating.seq, violating.start_index, 0.0))
}

/// Truncated Heisenberg series `sum_{n=0}^{order} (i tau)^n / n! ad_H^n(op)`
/// as a dense matrix. Matches `U†(tau) op U(tau)` up to `O(tau^{order+1})`.
pub fn bch_partial(h: &PauliSum, proj: &CMatrix, tau: f64, order: usize) -> Result<CMatrix> {
    if order > MAX_BCH_ORDER {
        return Err(Error::validation(format!(
            "series order {order} exceeds the supported maximum {MAX_BCH_ORDER}"
        )));
    }
    let hd = h.to_dense()?;
    if proj.nrows() != hd.nrows() || proj.ncols() != hd.ncols() {
        return Err(Error::shape(format!(
            "operator is {}x{} but the Hamiltonian dimension is {}",
            proj.nrows(),
            proj.ncols(),
            hd.nrows()
        )));
    }
    let mut acc = proj.clone();
    let mut nested = proj.clone();
    let mut factor = Complex64::ONE;
    for n in 1..=order {
        nested = &hd * &nested - &nested * &hd;
        factor *= Complex64::new(0.0, tau) / n as f64;
        acc += nested.map(|z| z * factor);
    }
    Ok(acc)
}
