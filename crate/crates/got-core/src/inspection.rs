//! Acceptance probability model for path selectors.
//!
//! Two ways to admit a candidate path: threshold scoring (accept any
//! score at or above a threshold) and serial inspection (n independent
//! checks that must all accept). Closed forms live here together with a
//! seeded Monte Carlo harness that confirms them empirically, so the
//! stringency ordering inspection <= scoring is testable without any
//! model in the loop.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Finite discrete score distribution with a selection threshold.
/// Support is ordered ascending; the last entry is the maximum score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub support: Vec<i64>,
    pub probabilities: Vec<f64>,
    pub threshold: i64,
}

const PROB_SUM_TOLERANCE: f64 = 1e-12;

impl ScoreDistribution {
    pub fn new(support: Vec<i64>, probabilities: Vec<f64>, threshold: i64) -> Self {
        let dist = ScoreDistribution {
            support,
            probabilities,
            threshold,
        };
        dist.validate().expect("valid score distribution");
        dist
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.support.is_empty() || self.support.len() != self.probabilities.len() {
            return Err("support and probabilities must be non-empty and equal length".into());
        }
        if self.support.windows(2).any(|w| w[0] >= w[1]) {
            return Err("support must be strictly ascending".into());
        }
        if self.probabilities.iter().any(|p| *p < 0.0) {
            return Err("probabilities must be non-negative".into());
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(format!("probabilities sum to {total}, not 1"));
        }
        if !self.support.contains(&self.threshold) {
            return Err("threshold must be a member of the support".into());
        }
        Ok(())
    }

    pub fn max_score(&self) -> i64 {
        *self.support.last().expect("non-empty support")
    }

    /// P(s_max), the per-call acceptance probability an inspector inherits.
    pub fn p_max(&self) -> f64 {
        *self.probabilities.last().expect("non-empty support")
    }

    /// Default shape used by the simulator CLI: integer scores 1..=10,
    /// P(10) = p_max, the remaining mass uniform over 1..=9.
    pub fn with_top_mass(p_max: f64, threshold: i64) -> Self {
        assert!((0.0..=1.0).contains(&p_max), "p_max out of range");
        let support: Vec<i64> = (1..=10).collect();
        let rest = (1.0 - p_max) / 9.0;
        let mut probabilities = vec![rest; 9];
        probabilities.push(p_max);
        ScoreDistribution::new(support, probabilities, threshold)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        let mut roll: f64 = rng.random();
        for (s, p) in self.support.iter().zip(&self.probabilities) {
            if roll < *p {
                return *s;
            }
            roll -= *p;
        }
        self.max_score()
    }
}

/// Which selector admitted (or refused) a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMechanism {
    Scoring,
    Inspection,
}

/// One selector decision: scoring always costs one call; inspection
/// short-circuits, so it costs at most n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorOutcome {
    pub accepted: bool,
    pub mechanism: SelectorMechanism,
    pub calls_used: u32,
}

/// Probability that threshold scoring accepts: the partial sum of the
/// distribution at and above the threshold.
pub fn p_scoring_accept(dist: &ScoreDistribution) -> f64 {
    dist.support
        .iter()
        .zip(&dist.probabilities)
        .filter(|(s, _)| **s >= dist.threshold)
        .map(|(_, p)| *p)
        .sum()
}

/// Probability that n serial inspections all accept: p_max^n. The empty
/// conjunction (n = 0) accepts with probability 1.
pub fn p_inspection_accept(p_max: f64, n: u32) -> f64 {
    assert!((0.0..=1.0).contains(&p_max), "p_max out of range");
    p_max.powi(n as i32)
}

/// Empirical acceptance rates with binomial confidence bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    pub n: u32,
    pub scoring_closed_form: f64,
    pub scoring_empirical: f64,
    pub inspection_closed_form: f64,
    pub inspection_empirical: f64,
    /// 3-sigma binomial bounds around the inspection closed form.
    pub inspection_ci_low: f64,
    pub inspection_ci_high: f64,
    pub inspection_calls: u64,
}

/// Three-sigma binomial half width around probability `p`.
pub fn three_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt() * 3.0
}

/// Runs both selectors over seeded trials. Trials are partitioned into
/// fixed-size batches, each on its own ChaCha stream, so partitions can be
/// recomputed independently and the merged counts stay order-independent.
pub fn simulate_selectors(
    dist: &ScoreDistribution,
    n: u32,
    trials: u64,
    seed: u64,
) -> SimulationReport {
    assert!(trials >= 1, "trials must be >= 1");
    let p_max = dist.p_max();
    const BATCH: u64 = 4096;
    let mut scoring_hits = 0u64;
    let mut inspection_hits = 0u64;
    let mut inspection_calls = 0u64;
    let batches = trials.div_ceil(BATCH);
    for batch in 0..batches {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch);
        let in_batch = BATCH.min(trials - batch * BATCH);
        for _ in 0..in_batch {
            let score = dist.sample(&mut rng);
            if score >= dist.threshold {
                scoring_hits += 1;
            }
            let mut all_accepted = true;
            for _ in 0..n {
                inspection_calls += 1;
                if !rng.random_bool(p_max) {
                    all_accepted = false;
                    break;
                }
            }
            if all_accepted {
                inspection_hits += 1;
            }
        }
    }
    let inspection_closed_form = p_inspection_accept(p_max, n);
    let width = three_sigma(inspection_closed_form, trials);
    SimulationReport {
        trials,
        seed,
        n,
        scoring_closed_form: p_scoring_accept(dist),
        scoring_empirical: scoring_hits as f64 / trials as f64,
        inspection_closed_form,
        inspection_empirical: inspection_hits as f64 / trials as f64,
        inspection_ci_low: inspection_closed_form - width,
        inspection_ci_high: inspection_closed_form + width,
        inspection_calls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_1_to_10(threshold: i64) -> ScoreDistribution {
        ScoreDistribution::new((1..=10).collect(), vec![0.1; 10], threshold)
    }

    #[test]
    fn scoring_partial_sums() {
        assert!((p_scoring_accept(&uniform_1_to_10(8)) - 0.3).abs() < 1e-12);
        assert!((p_scoring_accept(&uniform_1_to_10(1)) - 1.0).abs() < 1e-12);
        let top = ScoreDistribution::with_top_mass(0.6, 10);
        assert!((p_scoring_accept(&top) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn inspection_power_law() {
        assert!((p_inspection_accept(0.9, 3) - 0.729).abs() < 1e-12);
        assert_eq!(p_inspection_accept(0.37, 0), 1.0);
        // n = 1 with threshold at the max coincides with scoring.
        let dist = ScoreDistribution::with_top_mass(0.6, 10);
        assert!((p_inspection_accept(dist.p_max(), 1) - p_scoring_accept(&dist)).abs() < 1e-12);
    }

    #[test]
    fn stringency_chain_on_closed_forms() {
        // p^n < p < sum_{s>=s_t} P(s) whenever n >= 2, s_t < s_max, 0<p<1.
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(99);
        for _ in 0..50 {
            let p_max = rng.random_range(0.05..0.95);
            let threshold = rng.random_range(1..10);
            let n = rng.random_range(2..8u32);
            let dist = ScoreDistribution::with_top_mass(p_max, threshold);
            let inspection = p_inspection_accept(p_max, n);
            let scoring = p_scoring_accept(&dist);
            assert!(
                inspection < p_max && p_max < scoring,
                "chain broken at p={p_max} n={n} s_t={threshold}: {inspection} vs {p_max} vs {scoring}"
            );
        }
    }

    #[test]
    fn monotone_in_inspectors_and_threshold() {
        for n in 0..6u32 {
            assert!(p_inspection_accept(0.8, n + 1) <= p_inspection_accept(0.8, n));
        }
        for t in 1..10i64 {
            assert!(p_scoring_accept(&uniform_1_to_10(t + 1)) <= p_scoring_accept(&uniform_1_to_10(t)));
        }
    }

    #[test]
    fn simulation_matches_closed_forms_at_increasing_trials() {
        let dist = ScoreDistribution::with_top_mass(0.8, 8);
        for trials in [1_000u64, 10_000, 100_000] {
            let report = simulate_selectors(&dist, 3, trials, 7);
            let width_i = three_sigma(report.inspection_closed_form, trials);
            let width_s = three_sigma(report.scoring_closed_form, trials);
            assert!(
                (report.inspection_empirical - report.inspection_closed_form).abs() <= width_i,
                "inspection off at {trials} trials"
            );
            assert!(
                (report.scoring_empirical - report.scoring_closed_form).abs() <= width_s,
                "scoring off at {trials} trials"
            );
        }
    }

    #[test]
    fn simulated_acceptance_is_non_increasing_in_n() {
        let dist = ScoreDistribution::with_top_mass(0.8, 8);
        let mut last = f64::INFINITY;
        for n in 0..=6 {
            let report = simulate_selectors(&dist, n, 20_000, 11);
            assert!(
                report.inspection_empirical <= last + 0.01,
                "pass rate rose from {last} at n={n}"
            );
            last = report.inspection_empirical;
        }
    }

    #[test]
    fn degenerate_distribution_accepts_everything() {
        let dist = ScoreDistribution::new(vec![9, 10], vec![0.0, 1.0], 10);
        let report = simulate_selectors(&dist, 4, 2_000, 5);
        assert_eq!(report.scoring_empirical, 1.0);
        assert_eq!(report.inspection_empirical, 1.0);
    }

    #[test]
    fn fixed_seed_reproduces_exactly() {
        let dist = ScoreDistribution::with_top_mass(0.8, 8);
        let a = simulate_selectors(&dist, 3, 10_000, 42);
        let b = simulate_selectors(&dist, 3, 10_000, 42);
        assert_eq!(a.inspection_empirical, b.inspection_empirical);
        assert_eq!(a.scoring_empirical, b.scoring_empirical);
        assert_eq!(a.inspection_calls, b.inspection_calls);
    }

    #[test]
    fn acceptance_near_p_cubed_at_ten_thousand_trials() {
        let dist = ScoreDistribution::with_top_mass(0.8, 8);
        let report = simulate_selectors(&dist, 3, 10_000, 1);
        assert!(
            (report.inspection_empirical - 0.512).abs() <= 0.015,
            "empirical {} not within 0.015 of 0.512",
            report.inspection_empirical
        );
    }
}
