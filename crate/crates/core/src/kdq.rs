//! Quasiprobability and two-point-measurement distributions for timed
//! projective measurements on disjoint blocks.
//!
//! A [`Scenario`] fixes a model, an initial density matrix, and one
//! measurement per block at its own time. Projectors are given on the
//! block's local dimension, embedded with identities elsewhere, and evolved
//! into the Heisenberg picture at their measurement time. With measurements
//! sorted by time ascending, the joint quasiprobability of an outcome tuple
//! is
//!
//! ```text
//! q_{i1..im} = tr[ P_m(t_m) ... P_1(t_1) rho ]      (latest leftmost)
//! ```
//!
//! which is complex in general, and the sequential-measurement reference is
//! the fully sandwiched
//!
//! ```text
//! tpm_{i1..im} = tr[ P_m ... P_1 rho P_1 ... P_m ].
//! ```
//!
//! Non-classicality is summarized by three [`Measures`]: total negativity
//! `sum|q| - 1`, the largest imaginary part, and the smallest real part.
//! Both distributions sum to one; they coincide (and `q` is classical)
//! whenever the model's interaction structure keeps the measurements
//! compatible.

use crate::densemat::{self, CMatrix, HermitianEig};
use crate::model::Model;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Frobenius tolerance for scenario validation checks.
pub const SCENARIO_TOL: f64 = 1e-10;

/// One observer's measurement: a projective decomposition of the block's
/// local space, performed at a fixed time.
#[derive(Debug, Clone)]
pub struct MeasurementSpec {
    pub block: String,
    pub time: f64,
    /// Projectors on the block's local dimension (`2^{|sites|}`), in
    /// outcome order.
    pub projectors: Vec<CMatrix>,
}

/// A complete measurement scenario: model, initial state, and at least two
/// timed measurements on pairwise distinct blocks.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: Model,
    pub initial_state: CMatrix,
    pub measurements: Vec<MeasurementSpec>,
}

/// Non-classicality summary of a quasiprobability array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    /// `sum |q| - 1`; zero for a genuine probability distribution.
    pub l1_negativity: f64,
    /// Largest `|Im q|` over outcomes.
    pub max_imag: f64,
    /// Smallest `Re q` over outcomes.
    pub min_real: f64,
}

/// Dense array over joint measurement outcomes, row-major in outcome order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeGrid<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Clone + Default> OutcomeGrid<T> {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        OutcomeGrid { shape, data: vec![T::default(); len] }
    }
}

impl<T> OutcomeGrid<T> {
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index rank mismatch");
        let mut flat = 0;
        for (axis, (&i, &extent)) in idx.iter().zip(&self.shape).enumerate() {
            assert!(i < extent, "index {i} out of range on axis {axis}");
            flat = flat * extent + i;
        }
        flat
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let flat = self.flat_index(idx);
        self.data[flat] = value;
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Iterate `(outcome tuple, value)` in row-major order.
    pub fn indexed_values(&self) -> impl Iterator<Item = (Vec<usize>, &T)> {
        let shape = self.shape.clone();
        self.data.iter().enumerate().map(move |(flat, v)| {
            let mut idx = vec![0; shape.len()];
            let mut rest = flat;
            for (axis, &extent) in shape.iter().enumerate().rev() {
                idx[axis] = rest % extent;
                rest /= extent;
            }
            (idx, v)
        })
    }
}

/// Joint quasiprobability and sequential-measurement distributions of one
/// scenario, with the measurement axes in evaluated (time-ascending) order.
#[derive(Debug, Clone)]
pub struct QuasiDistribution {
    /// Block of each axis, time-sorted.
    pub blocks: Vec<String>,
    /// Measurement time of each axis, ascending.
    pub times: Vec<f64>,
    pub q: OutcomeGrid<Complex64>,
    pub tpm: OutcomeGrid<f64>,
    pub measures: Measures,
}

/// Compute the three non-classicality measures of a quasiprobability array.
pub fn measures_of(q: &OutcomeGrid<Complex64>) -> Measures {
    let mut abs_sum = 0.0;
    let mut max_imag: f64 = 0.0;
    let mut min_real = f64::INFINITY;
    for z in q.values() {
        abs_sum += z.norm();
        max_imag = max_imag.max(z.im.abs());
        min_real = min_real.min(z.re);
    }
    if q.is_empty() {
        min_real = 0.0;
    }
    Measures { l1_negativity: abs_sum - 1.0, max_imag, min_real }
}

/// `sum |q - tpm|` over all outcomes; zero iff the quasiprobability already
/// is the sequential-measurement distribution.
pub fn kdq_tpm_residual(d: &QuasiDistribution) -> f64 {
    d.q
        .values()
        .zip(d.tpm.values())
        .map(|(qz, &p)| (qz - Complex64::new(p, 0.0)).norm())
        .sum()
}

impl QuasiDistribution {
    pub fn outcome_shape(&self) -> &[usize] {
        self.q.shape()
    }

    pub fn sum_q(&self) -> Complex64 {
        self.q.values().sum()
    }

    pub fn sum_tpm(&self) -> f64 {
        self.tpm.values().sum()
    }

    /// JSON value for CLI output: `q` as nested arrays of `[re, im]`, `tpm`
    /// as nested real arrays.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "blocks": self.blocks,
            "times": self.times,
            "outcome_shape": self.outcome_shape(),
            "q": nest(&self.q, &|z: &Complex64| serde_json::json!([z.re, z.im])),
            "tpm": nest(&self.tpm, &|p: &f64| serde_json::json!(p)),
            "measures": self.measures,
            "kdq_tpm_residual": kdq_tpm_residual(self),
        })
    }
}

fn nest<T>(grid: &OutcomeGrid<T>, leaf: &dyn Fn(&T) -> serde_json::Value) -> serde_json::Value {
    fn build<T>(
        shape: &[usize],
        data: &[T],
        leaf: &dyn Fn(&T) -> serde_json::Value,
    ) -> serde_json::Value {
        match shape {
            [] => leaf(&data[0]),
            [head, rest @ ..] => {
                let stride: usize = rest.iter().product();
                let items: Vec<serde_json::Value> = (0..*head)
                    .map(|i| build(rest, &data[i * stride..(i + 1) * stride], leaf))
                    .collect();
                serde_json::Value::Array(items)
            }
        }
    }
    build(&grid.shape, &grid.data, leaf)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

impl Scenario {
    /// Check every scenario invariant, reporting all failures together:
    /// known pairwise-distinct blocks, finite times, per-measurement
    /// projector families that are Hermitian, idempotent, mutually
    /// orthogonal, and complete on the block dimension, and an initial
    /// state that is Hermitian, unit-trace, and positive semidefinite
    /// (all within `1e-10`).
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let partition = &self.model.partition;
        let dim = 1usize << partition.n_sites();

        if self.measurements.len() < 2 {
            problems.push(format!(
                "need at least two measurements, got {}",
                self.measurements.len()
            ));
        }
        let mut seen_blocks = std::collections::BTreeSet::new();
        for (i, m) in self.measurements.iter().enumerate() {
            let label = format!("measurement {i} (block '{}')", m.block);
            if !m.time.is_finite() {
                problems.push(format!("{label}: time is not finite"));
            }
            if !seen_blocks.insert(m.block.clone()) {
                problems.push(format!("{label}: block measured more than once"));
            }
            let Some(block_dim) = partition.block_dim(&m.block) else {
                problems.push(format!("{label}: unknown block"));
                continue;
            };
            if m.projectors.is_empty() {
                problems.push(format!("{label}: no projectors"));
                continue;
            }
            let mut complete = CMatrix::zeros(block_dim, block_dim);
            let mut dims_ok = true;
            for (k, p) in m.projectors.iter().enumerate() {
                if p.nrows() != block_dim || p.ncols() != block_dim {
                    problems.push(format!(
                        "{label}: projector {k} is {}x{}, expected {}x{}",
                        p.nrows(),
                        p.ncols(),
                        block_dim,
                        block_dim
                    ));
                    dims_ok = false;
                    continue;
                }
                if densemat::frobenius(&(p - p.adjoint())) > SCENARIO_TOL {
                    problems.push(format!("{label}: projector {k} is not Hermitian"));
                }
                if densemat::frobenius(&(p * p - p)) > SCENARIO_TOL {
                    problems.push(format!("{label}: projector {k} is not idempotent"));
                }
                complete += p;
            }
            if dims_ok {
                for (k, p) in m.projectors.iter().enumerate() {
                    for (l, p2) in m.projectors.iter().enumerate().skip(k + 1) {
                        if densemat::frobenius(&(p * p2)) > SCENARIO_TOL {
                            problems.push(format!(
                                "{label}: projectors {k} and {l} are not orthogonal"
                            ));
                        }
                    }
                }
                if densemat::frobenius(&(complete - densemat::identity(block_dim)))
                    > SCENARIO_TOL
                {
                    problems.push(format!("{label}: projectors do not sum to the identity"));
                }
            }
        }

        let rho = &self.initial_state;
        if rho.nrows() != dim || rho.ncols() != dim {
            problems.push(format!(
                "initial state is {}x{}, expected {dim}x{dim}",
                rho.nrows(),
                rho.ncols()
            ));
        } else {
            if densemat::frobenius(&(rho - rho.adjoint())) > SCENARIO_TOL {
                problems.push("initial state is not Hermitian".to_string());
            } else {
                match densemat::hermitian_eig_with_tol(rho, SCENARIO_TOL) {
                    Ok(eig) => {
                        if eig.min_eigenvalue() < -SCENARIO_TOL {
                            problems.push(format!(
                                "initial state is not positive semidefinite \
                                 (min eigenvalue {:.3e})",
                                eig.min_eigenvalue()
                            ));
                        }
                    }
                    Err(e) => problems.push(format!("initial state: {e}")),
                }
            }
            let trace = rho.trace();
            if (trace - Complex64::ONE).norm() > SCENARIO_TOL {
                problems.push(format!(
                    "initial state trace is {:.12} + {:.3e}i, expected 1",
                    trace.re, trace.im
                ));
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Reusable evaluation context for one model: the dense Hamiltonian's
/// eigendecomposition plus the partition geometry. Building it once and
/// evaluating many scenarios against it amortizes the diagonalization.
pub struct Evaluator {
    model: Model,
    dim: usize,
    eig: HermitianEig,
}

impl Evaluator {
    pub fn new(model: &Model) -> Result<Self> {
        let dense = model.hamiltonian.to_dense()?;
        let eig = densemat::hermitian_eig(&dense)?;
        Ok(Evaluator { model: model.clone(), dim: dense.nrows(), eig })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Embed a measurement's local projectors on its block's sites and
    /// evolve them to the measurement time in the Heisenberg picture.
    pub fn evolved_projectors(&self, spec: &MeasurementSpec) -> Result<Vec<CMatrix>> {
        let sites = self
            .model
            .partition
            .sites_of(&spec.block)
            .ok_or_else(|| Error::validation(format!("unknown block '{}'", spec.block)))?
            .clone();
        let n = self.model.partition.n_sites();
        let u = self.eig.propagator(spec.time);
        let u_dag = u.adjoint();
        spec.projectors
            .iter()
            .map(|p| {
                let full = densemat::embed_on_sites(p, &sites, n)?;
                Ok(&u_dag * full * &u)
            })
            .collect()
    }

    /// Evaluate the distributions of a state against measurements that are
    /// already validated. Measurements are stably sorted by time, so the
    /// returned axes are time-ascending with declaration order breaking
    /// ties.
    pub fn distribution(
        &self,
        state: &CMatrix,
        measurements: &[MeasurementSpec],
    ) -> Result<QuasiDistribution> {
        let mut order: Vec<usize> = (0..measurements.len()).collect();
        order.sort_by(|&a, &b| {
            measurements[a]
                .time
                .partial_cmp(&measurements[b].time)
                .expect("times validated finite")
        });
        let sorted: Vec<&MeasurementSpec> = order.iter().map(|&i| &measurements[i]).collect();

        let evolved: Vec<Vec<CMatrix>> = sorted
            .iter()
            .map(|spec| self.evolved_projectors(spec))
            .collect::<Result<_>>()?;
        let shape: Vec<usize> = evolved.iter().map(Vec::len).collect();
        let mut q = OutcomeGrid::zeros(shape.clone());
        let mut tpm = OutcomeGrid::zeros(shape.clone());

        let mut idx = vec![0usize; evolved.len()];
        self.accumulate(state, &evolved, 0, None, &mut idx, &mut q, &mut tpm);

        let measures = measures_of(&q);
        Ok(QuasiDistribution {
            blocks: sorted.iter().map(|s| s.block.clone()).collect(),
            times: sorted.iter().map(|s| s.time).collect(),
            q,
            tpm,
            measures,
        })
    }

    /// Recursive outcome walk sharing projector-product prefixes. `prefix`
    /// is `P_axis(t) ... P_1(t)` for the outcomes fixed so far (`None` for
    /// the empty product).
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        state: &CMatrix,
        evolved: &[Vec<CMatrix>],
        axis: usize,
        prefix: Option<&CMatrix>,
        idx: &mut Vec<usize>,
        q: &mut OutcomeGrid<Complex64>,
        tpm: &mut OutcomeGrid<f64>,
    ) {
        for (outcome, proj) in evolved[axis].iter().enumerate() {
            idx[axis] = outcome;
            let product = match prefix {
                Some(p) => proj * p,
                None => proj.clone(),
            };
            if axis + 1 == evolved.len() {
                // q = tr(P rho); tpm = tr(P rho P†) with the same P rho.
                let p_rho = &product * state;
                q.set(idx, p_rho.trace());
                let mut sandwich = Complex64::ZERO;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        sandwich += p_rho[(i, j)] * product[(i, j)].conj();
                    }
                }
                tpm.set(idx, sandwich.re);
            } else {
                self.accumulate(state, evolved, axis + 1, Some(&product), idx, q, tpm);
            }
        }
    }
}

/// Validate a scenario and evaluate its joint distributions.
pub fn kdq_distribution(scenario: &Scenario) -> Result<QuasiDistribution> {
    scenario.validate()?;
    let evaluator = Evaluator::new(&scenario.model)?;
    evaluator.distribution(&scenario.initial_state, &scenario.measurements)
}

/// Sum a distribution over every axis not in `keep`. `keep` indexes the
/// distribution's (time-sorted) axes; it must be nonempty, in range, and
/// free of duplicates. Kept axes stay in time order. The marginal `q` of a
/// scenario whose discarded measurements are all later than every kept one
/// equals the quasiprobability of the reduced scenario (completeness
/// telescopes); marginal sums are preserved in all cases.
pub fn marginal(d: &QuasiDistribution, keep: &[usize]) -> Result<QuasiDistribution> {
    let rank = d.q.shape().len();
    if keep.is_empty() {
        return Err(Error::validation("marginal needs a nonempty set of axes to keep"));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::validation("marginal axes must be distinct"));
    }
    if let Some(&bad) = keep_sorted.iter().find(|&&a| a >= rank) {
        return Err(Error::validation(format!(
            "marginal axis {bad} out of range for a rank-{rank} distribution"
        )));
    }

    let out_shape: Vec<usize> = keep_sorted.iter().map(|&a| d.q.shape()[a]).collect();
    let mut q = OutcomeGrid::zeros(out_shape.clone());
    let mut tpm = OutcomeGrid::zeros(out_shape);
    for (idx, &z) in d.q.indexed_values() {
        let out_idx: Vec<usize> = keep_sorted.iter().map(|&a| idx[a]).collect();
        let cur = *q.get(&out_idx);
        q.set(&out_idx, cur + z);
    }
    for (idx, &p) in d.tpm.indexed_values() {
        let out_idx: Vec<usize> = keep_sorted.iter().map(|&a| idx[a]).collect();
        let cur = *tpm.get(&out_idx);
        tpm.set(&out_idx, cur + p);
    }
    let measures = measures_of(&q);
    Ok(QuasiDistribution {
        blocks: keep_sorted.iter().map(|&a| d.blocks[a].clone()).collect(),
        times: keep_sorted.iter().map(|&a| d.times[a]).collect(),
        q,
        tpm,
        measures,
    })
}

/// One branch of the modified-state reduction: the (unnormalized) state
/// after the earliest measurement collapsed to `outcome`, its weight
/// `tr(rho_tilde)`, and the joint quasiprobability of the remaining
/// measurements evaluated from that state.
#[derive(Debug, Clone)]
pub struct ReducedBranch {
    pub outcome: usize,
    pub weight: f64,
    pub state: CMatrix,
    pub q_tilde: OutcomeGrid<Complex64>,
}

/// Collapse the earliest measurement: for each of its outcomes `i`, form
/// the unnormalized `rho_tilde_i = P_i(t_1) rho P_i(t_1)` and evaluate the
/// remaining measurements from it. When the model keeps the measurements
/// compatible, the full distribution factors branch-wise:
/// `q_{i j k ...} = (q_tilde_i)_{j k ...}` entrywise. The branches are
/// returned unconditionally; the caller compares. Requires at least three
/// measurements.
pub fn modified_state_reduction(scenario: &Scenario) -> Result<Vec<ReducedBranch>> {
    scenario.validate()?;
    if scenario.measurements.len() < 3 {
        return Err(Error::validation(format!(
            "modified-state reduction needs at least three measurements, got {}",
            scenario.measurements.len()
        )));
    }
    let evaluator = Evaluator::new(&scenario.model)?;

    let mut order: Vec<usize> = (0..scenario.measurements.len()).collect();
    order.sort_by(|&a, &b| {
        scenario.measurements[a]
            .time
            .partial_cmp(&scenario.measurements[b].time)
            .expect("times validated finite")
    });
    let first = &scenario.measurements[order[0]];
    let rest: Vec<MeasurementSpec> = order[1..]
        .iter()
        .map(|&i| scenario.measurements[i].clone())
        .collect();

    let first_evolved = evaluator.evolved_projectors(first)?;
    let mut branches = Vec::with_capacity(first_evolved.len());
    for (outcome, proj) in first_evolved.iter().enumerate() {
        let state = proj * &scenario.initial_state * proj;
        let weight = state.trace().re;
        let dist = evaluator.distribution(&state, &rest)?;
        branches.push(ReducedBranch { outcome, weight, state, q_tilde: dist.q });
    }
    Ok(branches)
}

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------

type ComplexPair = [f64; 2];

fn matrix_from_rows(rows: &[Vec<ComplexPair>], what: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::validation(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::validation(format!("{what}: ragged rows")));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum StateDto {
    Pure { pure: Vec<ComplexPair> },
    Density { density: Vec<Vec<ComplexPair>> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ProjectorsDto {
    /// `"computational"`: rank-1 projectors onto the block's basis states.
    Named(String),
    /// `{"basis": U}`: rank-1 projectors onto the columns of a unitary.
    Basis { basis: Vec<Vec<ComplexPair>> },
    /// Explicit projector matrices.
    Explicit(Vec<Vec<Vec<ComplexPair>>>),
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementDto {
    block: String,
    time: f64,
    projectors: ProjectorsDto,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    model: crate::model::ModelFile,
    initial_state: StateDto,
    measurements: Vec<MeasurementDto>,
}

fn projectors_from_dto(dto: &ProjectorsDto, block_dim: usize, label: &str) -> Result<Vec<CMatrix>> {
    match dto {
        ProjectorsDto::Named(name) if name == "computational" => Ok((0..block_dim)
            .map(|k| {
                let mut p = CMatrix::zeros(block_dim, block_dim);
                p[(k, k)] = Complex64::ONE;
                p
            })
            .collect()),
        ProjectorsDto::Named(other) => Err(Error::validation(format!(
            "{label}: unknown projector shorthand '{other}' (expected \"computational\")"
        ))),
        ProjectorsDto::Basis { basis } => {
            let u = matrix_from_rows(basis, label)?;
            if u.nrows() != block_dim || u.ncols() != block_dim {
                return Err(Error::validation(format!(
                    "{label}: basis is {}x{}, expected {block_dim}x{block_dim}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            Ok((0..block_dim)
                .map(|k| {
                    let col = u.column(k);
                    let mut p = CMatrix::zeros(block_dim, block_dim);
                    for i in 0..block_dim {
                        for j in 0..block_dim {
                            p[(i, j)] = col[i] * col[j].conj();
                        }
                    }
                    p
                })
                .collect())
        }
        ProjectorsDto::Explicit(mats) => mats
            .iter()
            .enumerate()
            .map(|(k, rows)| matrix_from_rows(rows, &format!("{label} projector {k}")))
            .collect(),
    }
}

impl Scenario {
    /// Parse the scenario JSON format:
    ///
    /// ```json
    /// {
    ///   "model": {"hamiltonian": "...", "partition": {...}},
    ///   "initial_state": {"pure": [[re, im], ...]},
    ///   "measurements": [
    ///     {"block": "A", "time": 0.0, "projectors": "computational"},
    ///     {"block": "B", "time": 1.0, "projectors": {"basis": [[...], ...]}}
    ///   ]
    /// }
    /// ```
    ///
    /// States are `{"pure": vector}` (amplitudes, already normalized) or
    /// `{"density": matrix}`; every complex number is a `[re, im]` pair.
    /// Projectors may be the `"computational"` shorthand, a `{"basis": U}`
    /// whose columns define rank-1 outcomes, or explicit matrices. Parsing
    /// checks shapes only; physical invariants are checked by
    /// [`Scenario::validate`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let model = Model::from_json(&serde_json::to_string(&file.model)?)?;
        let dim = 1usize << model.partition.n_sites();
        let initial_state = match &file.initial_state {
            StateDto::Pure { pure } => {
                if pure.len() != dim {
                    return Err(Error::validation(format!(
                        "pure state has {} amplitudes, expected {dim}",
                        pure.len()
                    )));
                }
                let psi: Vec<Complex64> =
                    pure.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                CMatrix::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj())
            }
            StateDto::Density { density } => {
                let rho = matrix_from_rows(density, "initial_state")?;
                if rho.nrows() != dim || rho.ncols() != dim {
                    return Err(Error::validation(format!(
                        "density matrix is {}x{}, expected {dim}x{dim}",
                        rho.nrows(),
                        rho.ncols()
                    )));
                }
                rho
            }
        };
        let measurements = file
            .measurements
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let block_dim = model.partition.block_dim(&m.block).ok_or_else(|| {
                    Error::validation(format!("measurement {i}: unknown block '{}'", m.block))
                })?;
                Ok(MeasurementSpec {
                    block: m.block.clone(),
                    time: m.time,
                    projectors: projectors_from_dto(
                        &m.projectors,
                        block_dim,
                        &format!("measurement {i}"),
                    )?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario { model, initial_state, measurements })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    /// Serialize in canonical explicit form (density matrix, explicit
    /// projector matrices); the output re-parses to an identical scenario.
    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            model: self.model.to_file_dto(),
            initial_state: StateDto::Density { density: matrix_to_rows(&self.initial_state) },
            measurements: self
                .measurements
                .iter()
                .map(|m| MeasurementDto {
                    block: m.block.clone(),
                    time: m.time,
                    projectors: ProjectorsDto::Explicit(
                        m.projectors.iter().map(matrix_to_rows).collect(),
                    ),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
    }
}
