//! Phase-I exploration of the stratification variable, strata construction,
//! and per-stratum sample pools with non-overlapping draw bookkeeping.
//!
//! Phase I evaluates the stratification variable for a large number of
//! independent samples; only the scalar values and the master seed are kept,
//! since any sample's phase vector is reconstructable from `(seed, index)`
//! through the excitation stream contract. Strata are half-open intervals
//! `[low, high)` on the SV axis; a value equal to a boundary belongs to the
//! stratum having it as its lower bound. Probabilities are exact ratios of
//! integer counts.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of the Phase-I Monte Carlo sweep over the stratification variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Result {
    /// SV value per sample, indexed by the sample's stream index.
    pub sv_values: Vec<f64>,
    /// Master seed the sample streams derive from.
    pub seed: u64,
    pub n_samples: usize,
}

/// Interior boundary placement rule for [`build_strata`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum BoundaryRule {
    /// Split the non-tail probability mass evenly across the interior strata.
    EqualProbability,
    /// User-supplied interior boundaries (ascending, `n_s - 1` values
    /// including the final-stratum lower bound).
    Explicit { boundaries: Vec<f64> },
}

/// Purpose tag for pool draws; train and eval draws never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawPurpose {
    Train,
    Eval,
}

/// JSON does not represent IEEE infinities; the unbounded final stratum edge
/// round-trips as `null`.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let opts: Vec<Option<f64>> = v
            .iter()
            .map(|&x| if x.is_finite() { Some(x) } else { None })
            .collect();
        opts.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let opts = Vec::<Option<f64>>::deserialize(d)?;
        Ok(opts
            .into_iter()
            .map(|o| o.unwrap_or(f64::INFINITY))
            .collect())
    }
}

/// Strata boundaries, probabilities and sample-pool bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratification {
    /// `n_s + 1` ascending values; first is the domain lower bound, last is
    /// `+inf` (serialized as `null`).
    #[serde(with = "inf_as_null")]
    pub boundaries: Vec<f64>,
    /// Phase-I sample count per stratum.
    pub counts: Vec<usize>,
    /// Phase-I sample indices per stratum.
    pub pools: Vec<Vec<u32>>,
    pub drawn_train: Vec<BTreeSet<u32>>,
    pub drawn_eval: Vec<BTreeSet<u32>>,
    /// Master seed of the Phase-I universe.
    pub seed: u64,
    /// Total Phase-I sample count.
    pub n_mc: usize,
}

impl Stratification {
    pub fn n_strata(&self) -> usize {
        self.counts.len()
    }

    /// Exact strata probabilities `count_k / n_mc`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.n_mc as f64)
            .collect()
    }

    /// Fraction of each pool consumed so far (the nu_k diagnostic).
    pub fn nu(&self) -> Vec<f64> {
        (0..self.n_strata())
            .map(|k| {
                let used = self.drawn_train[k].len() + self.drawn_eval[k].len();
                used as f64 / self.counts[k].max(1) as f64
            })
            .collect()
    }

    /// Stratum index of an SV value.
    pub fn stratum_of(&self, value: f64) -> Option<usize> {
        if value < self.boundaries[0] {
            return None;
        }
        let n_s = self.n_strata();
        let k = self.boundaries[1..n_s].partition_point(|b| value >= *b);
        Some(k)
    }

    /// Remaining undrawn pool size of stratum `k`.
    pub fn available(&self, k: usize) -> usize {
        self.pools[k]
            .iter()
            .filter(|i| !self.drawn_train[k].contains(i) && !self.drawn_eval[k].contains(i))
            .count()
    }
}

/// Evaluate the SV for `n_mc` independent samples.
///
/// `sv_evaluator` maps a sample index to its SV value; it must be pure so the
/// sweep is independent of the parallel schedule. Failures propagate with the
/// first failing index.
pub fn phase1_sample<F>(sv_evaluator: F, n_mc: usize, seed: u64) -> Result<Phase1Result>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if n_mc < 1000 {
        return Err(Error::Config(format!(
            "phase-I needs at least 1000 samples (got {n_mc})"
        )));
    }
    if n_mc > u32::MAX as usize {
        return Err(Error::Config("phase-I sample count exceeds u32 indexing".into()));
    }
    let results: Vec<Result<f64>> = (0..n_mc as u64)
        .into_par_iter()
        .map(&sv_evaluator)
        .collect();
    let mut sv_values = Vec::with_capacity(n_mc);
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) if v.is_finite() => sv_values.push(v),
            Ok(v) => {
                return Err(Error::SvEvaluation {
                    index: index as u64,
                    source: Box::new(Error::Estimator(format!("non-finite SV value {v}"))),
                })
            }
            Err(e) => {
                return Err(Error::SvEvaluation {
                    index: index as u64,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(Phase1Result {
        sv_values,
        seed,
        n_samples: n_mc,
    })
}

/// Partition the Phase-I SV distribution into `n_s` strata.
///
/// The final stratum's lower bound is the empirical `1 - tail_exceedance`
/// quantile; the first boundary is `domain_lower`; interior boundaries follow
/// `rule`. Probabilities come from the actual per-stratum counts.
pub fn build_strata(
    phase1: &Phase1Result,
    n_s: usize,
    tail_exceedance: f64,
    rule: &BoundaryRule,
    domain_lower: f64,
) -> Result<Stratification> {
    let n = phase1.sv_values.len();
    if n_s == 0 {
        return Err(Error::Config("need at least one stratum".into()));
    }
    if phase1.sv_values.iter().any(|v| *v < domain_lower) {
        return Err(Error::Config(
            "SV values below the declared domain lower bound".into(),
        ));
    }

    let mut boundaries = Vec::with_capacity(n_s + 1);
    boundaries.push(domain_lower);
    if n_s > 1 {
        match rule {
            BoundaryRule::EqualProbability => {
                if !(tail_exceedance > 0.0 && tail_exceedance < 1.0) {
                    return Err(Error::Config("tail_exceedance must lie in (0, 1)".into()));
                }
                if tail_exceedance * n as f64 + 1e-9 < 100.0 {
                    return Err(Error::Config(format!(
                        "tail stratum would hold ~{:.0} samples; the 10^(m+2) rule needs \
                         tail_exceedance * N >= 100 for a ~10% COV of its probability",
                        tail_exceedance * n as f64
                    )));
                }
                let mut sorted = phase1.sv_values.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite SV"));
                let tail_count = (tail_exceedance * n as f64).round() as usize;
                let tail_cut = n - tail_count;
                // Interior cuts split the non-tail mass evenly.
                for j in 1..n_s - 1 {
                    let cut = (j as f64 * tail_cut as f64 / (n_s - 1) as f64).round() as usize;
                    boundaries.push(sorted[cut]);
                }
                boundaries.push(sorted[tail_cut]);
            }
            BoundaryRule::Explicit { boundaries: user } => {
                if user.len() != n_s - 1 {
                    return Err(Error::Config(format!(
                        "explicit rule needs {} interior boundaries, got {}",
                        n_s - 1,
                        user.len()
                    )));
                }
                boundaries.extend_from_slice(user);
            }
        }
    }
    boundaries.push(f64::INFINITY);
    for w in boundaries.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Config(format!(
                "strata boundaries must strictly increase (got {} then {})",
                w[0], w[1]
            )));
        }
    }

    let mut pools: Vec<Vec<u32>> = vec![Vec::new(); n_s];
    for (idx, &v) in phase1.sv_values.iter().enumerate() {
        // Largest k with boundaries[k] <= v (half-open [low, high)).
        let k = boundaries[1..n_s].partition_point(|b| v >= *b);
        pools[k].push(idx as u32);
    }
    let counts: Vec<usize> = pools.iter().map(Vec::len).collect();
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyStratum { stratum: k });
    }

    Ok(Stratification {
        boundaries,
        counts,
        pools,
        drawn_train: vec![BTreeSet::new(); n_s],
        drawn_eval: vec![BTreeSet::new(); n_s],
        seed: phase1.seed,
        n_mc: n,
    })
}

/// Draw `n` indices uniformly without replacement from the undrawn part of
/// stratum `k`'s pool and record them under `purpose`.
///
/// Train and eval draws are disjoint by construction: both exclude every
/// previously drawn index, and the invariant is re-checked on every call.
pub fn draw_from_stratum<R: Rng>(
    strat: &mut Stratification,
    k: usize,
    n: usize,
    purpose: DrawPurpose,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if k >= strat.n_strata() {
        return Err(Error::Estimator(format!("stratum {k} out of range")));
    }
    let mut available: Vec<u32> = strat.pools[k]
        .iter()
        .copied()
        .filter(|i| !strat.drawn_train[k].contains(i) && !strat.drawn_eval[k].contains(i))
        .collect();
    if available.len() < n {
        return Err(Error::PoolExhausted {
            stratum: k,
            requested: n,
            available: available.len(),
        });
    }
    // Partial Fisher-Yates.
    let mut drawn = Vec::with_capacity(n);
    for i in 0..n {
        let j = rng.gen_range(i..available.len());
        available.swap(i, j);
        drawn.push(available[i]);
    }
    let target = match purpose {
        DrawPurpose::Train => &mut strat.drawn_train[k],
        DrawPurpose::Eval => &mut strat.drawn_eval[k],
    };
    for &idx in &drawn {
        target.insert(idx);
    }
    debug_assert!(strat.drawn_train[k].is_disjoint(&strat.drawn_eval[k]));
    Ok(drawn)
}
