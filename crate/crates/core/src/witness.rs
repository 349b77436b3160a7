//! Randomized search for measurement scenarios whose quasiprobability
//! distribution is non-classical, and the one-sided screening test built
//! on it.
//!
//! The searcher draws scenarios at random — a subset of at least two
//! observer blocks, Haar-random projector families on each, uniform
//! measurement times, and either a random product pure state or a
//! Haar-random global pure state — evaluates the joint quasiprobability of
//! each, and keeps the scenario with the largest non-classicality score.
//! Any score above a user threshold certifies that sequential measurements
//! on those blocks cannot be described classically, so the model cannot
//! redundantly broadcast classical records of them; no score, however
//! small, certifies the opposite. [`screen_darwinism`] packages exactly
//! that asymmetry: refutation or inconclusiveness, never a positive
//! certificate.
//!
//! Sampling is purely random rather than gradient-driven: scores are kept
//! reproducible by deriving an independent counter-mode stream per sample
//! from the master seed, so identical `(model, budget)` inputs give
//! bitwise-identical reports regardless of thread count.

use crate::densemat::CMatrix;
use crate::kdq::{Evaluator, Measures, MeasurementSpec, Scenario};
use crate::model::Model;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How many projectors a sampled measurement has, via their ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankPolicy {
    /// Always a complete rank-1 family (the finest measurement).
    RankOne,
    /// A random composition of the block dimension into positive ranks;
    /// coarse-grained families (including the trivial identity-only one)
    /// are allowed.
    Random,
}

impl RankPolicy {
    fn draw(&self, dim: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        match self {
            RankPolicy::RankOne => vec![1; dim],
            RankPolicy::Random => {
                let mut ranks = Vec::new();
                let mut left = dim;
                while left > 0 {
                    let r = rng.gen_range(1..=left);
                    ranks.push(r);
                    left -= r;
                }
                ranks
            }
        }
    }
}

/// Sampling budget for [`search`]: how many scenarios, over what time
/// window, with which projector ranks, from which master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub samples: u64,
    pub t_min: f64,
    pub t_max: f64,
    pub rank_policy: RankPolicy,
    pub seed: u64,
}

impl Default for SearchBudget {
    /// 1000 samples, times in `[0, 10]`, rank-1 projectors, seed 0. The
    /// wide time window matters: effective interactions mediated through
    /// the shared remainder may need long evolutions to show up.
    fn default() -> Self {
        SearchBudget {
            samples: 1000,
            t_min: 0.0,
            t_max: 10.0,
            rank_policy: RankPolicy::RankOne,
            seed: 0,
        }
    }
}

impl SearchBudget {
    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.samples == 0 {
            problems.push("budget must allow at least one sample".to_string());
        }
        if !self.t_min.is_finite() || !self.t_max.is_finite() {
            problems.push("time range bounds must be finite".to_string());
        } else if self.t_max < self.t_min {
            problems.push(format!(
                "time range [{}, {}] is empty",
                self.t_min, self.t_max
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// The best scenario a search found, with its measures and score.
#[derive(Debug, Clone)]
pub struct WitnessRecord {
    /// Non-classicality score: the largest of total negativity, maximal
    /// imaginary part, and negative-real excess.
    pub best: f64,
    pub measures: Measures,
    /// Index of the winning sample within the budget (lowest on ties).
    pub sample_index: u64,
    pub samples_tested: u64,
    pub scenario: Scenario,
}

impl WitnessRecord {
    pub fn to_json_value(&self) -> serde_json::Value {
        let scenario: serde_json::Value = serde_json::from_str(&self.scenario.to_json())
            .expect("scenario JSON is well-formed");
        serde_json::json!({
            "best": self.best,
            "measures": self.measures,
            "sample_index": self.sample_index,
            "samples_tested": self.samples_tested,
            "scenario": scenario,
        })
    }
}

/// Outcome of the one-sided screening test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScreenVerdict {
    /// Non-classicality above threshold was witnessed: sequential
    /// measurements on disjoint blocks provably leave the classical
    /// regime, so no redundant classical records of them can exist.
    CannotSupportQd,
    /// Nothing above threshold in the sampled scenarios. Inconclusive by
    /// design — never a certification of classicality.
    NoViolationFound,
}

/// Report of [`screen_darwinism`].
#[derive(Debug, Clone)]
pub struct ScreenReport {
    pub verdict: ScreenVerdict,
    pub threshold: f64,
    pub best: f64,
    pub samples_tested: u64,
    /// Present exactly when the verdict is a refutation.
    pub witness: Option<WitnessRecord>,
}

impl ScreenReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut value = serde_json::json!({
            "verdict": self.verdict,
            "threshold": self.threshold,
            "best": self.best,
            "samples_tested": self.samples_tested,
        });
        if let Some(w) = &self.witness {
            value["witness"] = w.to_json_value();
        }
        value
    }
}

/// Score of a measures triple: the largest way the distribution leaves
/// the classical regime. Non-positive (up to rounding) iff classical.
pub fn nonclassicality_score(m: &Measures) -> f64 {
    m.l1_negativity.max(m.max_imag).max(-m.min_real)
}

// ---------------------------------------------------------------------------
// Random draws
// ---------------------------------------------------------------------------

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the R
/// diagonal's phases pushed back into Q's columns (without the phase fix
/// the QR convention would bias the distribution).
pub fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut u = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::ONE };
        for i in 0..dim {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Complete orthogonal projector family from one Haar unitary, with the
/// requested ranks: projector `k` spans `ranks[k]` consecutive columns.
pub fn random_projectors(
    block_dim: usize,
    ranks: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CMatrix>> {
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(Error::validation("projector ranks must be positive"));
    }
    let total: usize = ranks.iter().sum();
    if total != block_dim {
        return Err(Error::validation(format!(
            "projector ranks sum to {total}, expected the block dimension {block_dim}"
        )));
    }
    let u = haar_unitary(block_dim, rng);
    let mut out = Vec::with_capacity(ranks.len());
    let mut col = 0;
    for &rank in ranks {
        let mut p = CMatrix::zeros(block_dim, block_dim);
        for k in col..col + rank {
            let v = u.column(k);
            for i in 0..block_dim {
                for j in 0..block_dim {
                    p[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        out.push(p);
        col += rank;
    }
    Ok(out)
}

fn normalized(amps: Vec<Complex64>) -> Vec<Complex64> {
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Measure-zero Gaussian corner; fall back to the first basis state.
        let mut out = vec![Complex64::ZERO; amps.len()];
        out[0] = Complex64::ONE;
        return out;
    }
    amps.into_iter().map(|z| z / norm).collect()
}

fn random_product_state(n_sites: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut psi = vec![Complex64::ONE];
    for _ in 0..n_sites {
        let site = normalized(vec![complex_gaussian(rng), complex_gaussian(rng)]);
        psi = psi
            .iter()
            .flat_map(|&a| site.iter().map(move |&s| a * s))
            .collect();
    }
    psi
}

fn random_global_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    normalized((0..dim).map(|_| complex_gaussian(rng)).collect())
}

fn density_of(amps: &[Complex64]) -> CMatrix {
    let dim = amps.len();
    CMatrix::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj())
}

/// Draw sample `index` of a budget. The draw order is fixed — block
/// count, block choice, then per block time/ranks/projectors, then state
/// kind and state — and every sample owns stream `index` of the master
/// seed, so the same `(model, budget, index)` always yields the same
/// scenario, in any thread, in any order.
///
/// Public so that callers can regenerate any sample of a search — not
/// just the winner — or use the generator as a deterministic source of
/// random measurement scenarios in their own experiments.
pub fn draw_scenario(
    model: &Model,
    budget: &SearchBudget,
    index: u64,
) -> (Vec<MeasurementSpec>, CMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    rng.set_stream(index);

    let names: Vec<String> = model.partition.block_names().map(str::to_string).collect();
    let take = rng.gen_range(2..=names.len());
    let mut order: Vec<usize> = (0..names.len()).collect();
    for j in 0..take {
        let k = rng.gen_range(j..order.len());
        order.swap(j, k);
    }

    let mut measurements = Vec::with_capacity(take);
    for &which in &order[..take] {
        let block = names[which].clone();
        let dim = model.partition.block_dim(&block).expect("block exists");
        let time = budget.t_min + (budget.t_max - budget.t_min) * rng.gen::<f64>();
        let ranks = budget.rank_policy.draw(dim, &mut rng);
        let projectors =
            random_projectors(dim, &ranks, &mut rng).expect("drawn ranks are complete");
        measurements.push(MeasurementSpec { block, time, projectors });
    }

    let n = model.partition.n_sites();
    let amps = if rng.gen::<bool>() {
        random_product_state(n, &mut rng)
    } else {
        random_global_state(1usize << n, &mut rng)
    };
    (measurements, density_of(&amps))
}

// ---------------------------------------------------------------------------
// Search and screening
// ---------------------------------------------------------------------------

/// Randomly sample scenarios for a model and return the one with the
/// largest non-classicality score. Deterministic in `(model, budget)`;
/// samples are scored in parallel and ties go to the lowest sample index.
pub fn search(model: &Model, budget: &SearchBudget) -> Result<WitnessRecord> {
    budget.validate()?;
    if model.partition.n_blocks() < 2 {
        return Err(Error::validation(format!(
            "search needs at least two observer blocks, the partition has {}",
            model.partition.n_blocks()
        )));
    }
    let evaluator = Evaluator::new(model)?;

    let scores: Vec<f64> = (0..budget.samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let (measurements, state) = draw_scenario(model, budget, i);
            let d = evaluator.distribution(&state, &measurements)?;
            Ok(nonclassicality_score(&d.measures))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best_index = 0u64;
    let mut best = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if s > best {
            best = s;
            best_index = i as u64;
        }
    }

    let (measurements, state) = draw_scenario(model, budget, best_index);
    let d = evaluator.distribution(&state, &measurements)?;
    Ok(WitnessRecord {
        best,
        measures: d.measures,
        sample_index: best_index,
        samples_tested: budget.samples,
        scenario: Scenario {
            model: model.clone(),
            initial_state: state,
            measurements,
        },
    })
}

/// One-sided screening: search, then compare the best score against a
/// positive threshold. Above it, the model provably cannot broadcast
/// redundant classical records of the measured blocks; otherwise the
/// result is only "nothing found in this budget".
pub fn screen_darwinism(
    model: &Model,
    budget: &SearchBudget,
    threshold: f64,
) -> Result<ScreenReport> {
    if threshold.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::validation(format!(
            "screening threshold must be positive, got {threshold}"
        )));
    }
    let record = search(model, budget)?;
    let best = record.best;
    let violated = best > threshold;
    Ok(ScreenReport {
        verdict: if violated {
            ScreenVerdict::CannotSupportQd
        } else {
            ScreenVerdict::NoViolationFound
        },
        threshold,
        best,
        samples_tested: record.samples_tested,
        witness: violated.then_some(record),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemat::{self, frobenius, identity};
    use crate::kdq::kdq_distribution;
    use crate::model::Partition;

    fn model(text: &str, n: usize, blocks: &[(&str, &[usize])]) -> Model {
        let p = Partition::new(
            n,
            blocks
                .iter()
                .map(|(name, sites)| (name.to_string(), sites.iter().copied().collect()))
                .collect(),
        )
        .unwrap();
        Model::from_text(text, p).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn projector_families_are_complete_and_orthogonal() {
        let mut r = rng(7);
        // Full-rank single projector is the identity.
        let whole = random_projectors(4, &[4], &mut r).unwrap();
        assert_eq!(whole.len(), 1);
        assert!(frobenius(&(&whole[0] - identity(4))) < 1e-12);
        // Rank-1 qubit family: Hermitian, idempotent, orthogonal, complete.
        let pair = random_projectors(2, &[1, 1], &mut r).unwrap();
        assert_eq!(pair.len(), 2);
        let sum = &pair[0] + &pair[1];
        assert!(frobenius(&(sum - identity(2))) < 1e-12);
        for p in &pair {
            assert!(frobenius(&(p - p.adjoint())) < 1e-12);
            assert!(frobenius(&(p * p - p)) < 1e-12);
        }
        assert!(frobenius(&(&pair[0] * &pair[1])) < 1e-12);
        // Mixed ranks partition the dimension.
        let mixed = random_projectors(4, &[1, 2, 1], &mut r).unwrap();
        let total: CMatrix = &mixed[0] + &mixed[1] + &mixed[2];
        assert!(frobenius(&(total - identity(4))) < 1e-12);
        assert!((mixed[1].trace().re - 2.0).abs() < 1e-12);
        // Bad ranks.
        assert!(random_projectors(4, &[1, 1], &mut r).is_err());
        assert!(random_projectors(4, &[], &mut r).is_err());
        assert!(random_projectors(4, &[0, 4], &mut r).is_err());
    }

    #[test]
    fn haar_moment_of_rank_one_projector() {
        // For Haar-random rank-1 P on a qubit and fixed pure rho,
        // tr(P rho) is uniform on [0,1]: mean 1/2, variance 1/12. Check
        // the mean over 10^4 draws within 3 standard errors.
        let mut r = rng(202);
        let rho = {
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 0)] = Complex64::ONE;
            m
        };
        let n = 10_000;
        let mut mean = 0.0;
        for _ in 0..n {
            let p = &random_projectors(2, &[1, 1], &mut r).unwrap()[0];
            mean += (p * &rho).trace().re;
        }
        mean /= n as f64;
        let se = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!(
            (mean - 0.5).abs() < 3.0 * se,
            "mean {mean} deviates from 1/2 by more than {}",
            3.0 * se
        );
    }

    #[test]
    fn unitaries_are_unitary() {
        let mut r = rng(5);
        for dim in [2usize, 4] {
            let u = haar_unitary(dim, &mut r);
            assert!(frobenius(&(&u * u.adjoint() - identity(dim))) < 1e-12);
        }
    }

    #[test]
    fn search_is_deterministic_and_reproducible() {
        let m = model("Z1 X3 + X2 Z3", 3, &[("A", &[1]), ("B", &[2])]);
        let budget = SearchBudget { samples: 40, seed: 11, ..Default::default() };
        let a = search(&m, &budget).unwrap();
        let b = search(&m, &budget).unwrap();
        assert_eq!(
            serde_json::to_string(&a.to_json_value()).unwrap(),
            serde_json::to_string(&b.to_json_value()).unwrap(),
            "identical inputs must give bitwise-identical reports"
        );
        // The stored scenario re-evaluates to the stored measures.
        let d = kdq_distribution(&a.scenario).unwrap();
        assert!((d.measures.l1_negativity - a.measures.l1_negativity).abs() < 1e-10);
        assert!((d.measures.max_imag - a.measures.max_imag).abs() < 1e-10);
        assert!((d.measures.min_real - a.measures.min_real).abs() < 1e-10);
        assert!((nonclassicality_score(&d.measures) - a.best).abs() < 1e-10);
    }

    #[test]
    fn incompatible_model_is_witnessed() {
        // Interaction factors X3 and Z3 fail the bare commutator
        // constraint; random scenarios expose it quickly.
        let m = model("Z1 X3 + X2 Z3", 3, &[("A", &[1]), ("B", &[2])]);
        let budget = SearchBudget { samples: 200, seed: 1, ..Default::default() };
        let record = search(&m, &budget).unwrap();
        assert!(record.best > 1e-3, "best = {}", record.best);
        assert!(record.scenario.validate().is_ok());
        // The remainder-mediated 4-site model violates one level deeper
        // and is likewise witnessed.
        let mediated = model(
            "Z1 Z3 + X2 Z4 + X3 X4",
            4,
            &[("A", &[1]), ("B", &[2])],
        );
        let record = search(&mediated, &budget).unwrap();
        assert!(record.best > 1e-3, "best = {}", record.best);
    }

    #[test]
    fn compatible_model_scores_at_noise_level() {
        let m = model("Z1 Z3 + X2 Z3 + 0.7*Z3", 3, &[("A", &[1]), ("B", &[2])]);
        let budget = SearchBudget { samples: 100, seed: 3, ..Default::default() };
        let record = search(&m, &budget).unwrap();
        assert!(record.best < 1e-9, "best = {}", record.best);
    }

    #[test]
    fn random_rank_policy_draws_valid_scenarios() {
        let m = model("Z1 Z3 + X2 Z3", 3, &[("A", &[1]), ("B", &[2])]);
        let budget = SearchBudget {
            samples: 30,
            seed: 9,
            rank_policy: RankPolicy::Random,
            ..Default::default()
        };
        let record = search(&m, &budget).unwrap();
        record.scenario.validate().unwrap();
        assert!(record.best < 1e-9);
    }

    #[test]
    fn screening_verdicts() {
        let bad = model("Z1 X3 + X2 Z3", 3, &[("A", &[1]), ("B", &[2])]);
        let budget = SearchBudget { samples: 150, seed: 2, ..Default::default() };
        let report = screen_darwinism(&bad, &budget, 1e-3).unwrap();
        assert_eq!(report.verdict, ScreenVerdict::CannotSupportQd);
        let witness = report.witness.as_ref().expect("refutation carries a witness");
        assert!(witness.best > 1e-3);
        let json = report.to_json_value();
        assert_eq!(json["verdict"], "CANNOT_SUPPORT_QD");
        assert!(json["witness"]["scenario"]["measurements"].is_array());

        let good = model("Z1 Z3 + X2 Z3", 3, &[("A", &[1]), ("B", &[2])]);
        let report = screen_darwinism(&good, &budget, 1e-3).unwrap();
        assert_eq!(report.verdict, ScreenVerdict::NoViolationFound);
        assert!(report.witness.is_none());
        assert_eq!(report.to_json_value()["verdict"], "NO_VIOLATION_FOUND");
        assert_eq!(report.samples_tested, 150);
    }

    #[test]
    fn invalid_budgets_are_rejected() {
        let m = model("Z1 Z3 + X2 Z3", 3, &[("A", &[1]), ("B", &[2])]);
        let zero = SearchBudget { samples: 0, ..Default::default() };
        assert!(matches!(search(&m, &zero), Err(Error::Validation(_))));
        let empty = SearchBudget { t_min: 2.0, t_max: 1.0, ..Default::default() };
        assert!(search(&m, &empty).is_err());
        let budget = SearchBudget { samples: 5, ..Default::default() };
        assert!(screen_darwinism(&m, &budget, 0.0).is_err());
        assert!(screen_darwinism(&m, &budget, -1.0).is_err());
        // One observer block only: nothing to pair.
        let single = model("Z1 Z2", 2, &[("A", &[1])]);
        assert!(search(&single, &budget).is_err());
    }

    #[test]
    fn three_observer_sampling_reaches_triples() {
        let m = model(
            "Z1 Z4 + X2 X4 + Y3 Z5 + 0.6*Z4 Z5",
            5,
            &[("A", &[1]), ("B", &[2]), ("D", &[3])],
        );
        let budget = SearchBudget { samples: 60, seed: 4, ..Default::default() };
        let record = search(&m, &budget).unwrap();
        assert!(record.best > 1e-3, "best = {}", record.best);
        // Some sample draws all three observers: regenerate and look.
        let mut saw_triple = false;
        for i in 0..budget.samples {
            let (ms, _) = super::draw_scenario(&m, &budget, i);
            if ms.len() == 3 {
                saw_triple = true;
                break;
            }
        }
        assert!(saw_triple, "triple-block scenarios are never sampled");
        let _ = densemat::max_dim();
    }
}
