//! Probability estimators and allocation formulas.
//!
//! Pure estimator algebra: consequence measures, the stratified (GSS)
//! estimator with its simplified large-Phase-I variance, per-stratum
//! multi-fidelity control-variate estimators, optimal coefficient / ratio /
//! budget allocation, equivalence counts, speedup, and the budget
//! convergence loop. Raw estimator values are never destroyed by clamping;
//! clamped or floored companions exist for reporting only.
//!
//! Rounding conventions: LF counts round to nearest, HF counts floor, and
//! equivalence counts are reported rounded with the raw value retained.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, normal_cdf, sample_variance};

/// Consequence measure mapping a quantity of interest to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConsequenceMeasure {
    /// `1` when `Z > z_i`, else `0`.
    Indicator,
    /// Log-transformed kernel smoothing with a standard normal kernel:
    /// `h = 1 - K(ln(z_i / Z) / b)`.
    SmoothKernel { bandwidth: f64 },
}

/// Evaluate the consequence measure of one QoI value against a threshold.
pub fn consequence(z_value: f64, threshold: f64, measure: &ConsequenceMeasure) -> Result<f64> {
    match measure {
        ConsequenceMeasure::Indicator => Ok(if z_value > threshold { 1.0 } else { 0.0 }),
        ConsequenceMeasure::SmoothKernel { bandwidth } => {
            if !(z_value > 0.0) {
                return Err(Error::Estimator(format!(
                    "kernel consequence needs Z > 0 (got {z_value})"
                )));
            }
            if !(*bandwidth > 0.0) {
                return Err(Error::Estimator("kernel bandwidth must be positive".into()));
            }
            Ok(1.0 - normal_cdf((threshold / z_value).ln() / bandwidth))
        }
    }
}

/// Stratified estimate with the large-Phase-I variance form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GssEstimate {
    pub h_hat: f64,
    pub variance: f64,
    /// `sqrt(variance) / h_hat`; undefined when the estimate is zero.
    pub cov: Option<f64>,
    /// Per-stratum conditional means.
    pub stratum_means: Vec<f64>,
}

/// `H = sum_k s_k P_k` with `V = sum_k P_k^2 var(h_k) / N_k`.
///
/// Every stratum needs at least two evaluations so its sample variance is
/// defined.
pub fn gss_estimate(h_per_stratum: &[Vec<f64>], probabilities: &[f64]) -> Result<GssEstimate> {
    if h_per_stratum.len() != probabilities.len() || h_per_stratum.is_empty() {
        return Err(Error::Estimator("stratum count mismatch".into()));
    }
    let mut h_hat = 0.0;
    let mut variance = 0.0;
    let mut stratum_means = Vec::with_capacity(h_per_stratum.len());
    for (h, &p) in h_per_stratum.iter().zip(probabilities) {
        if h.len() < 2 {
            return Err(Error::Estimator(format!(
                "stratum needs >= 2 evaluations for a defined variance (got {})",
                h.len()
            )));
        }
        let s = mean(h);
        stratum_means.push(s);
        h_hat += s * p;
        variance += p * p * sample_variance(h) / h.len() as f64;
    }
    let cov = if h_hat > 0.0 {
        Some(variance.sqrt() / h_hat)
    } else {
        None
    };
    Ok(GssEstimate {
        h_hat,
        variance,
        cov,
        stratum_means,
    })
}

/// Optimal control-variate coefficient `a* = rho sqrt(var_hf / var_lf)`.
///
/// A zero LF variance means the low-fidelity consequence carries no
/// information in this stratum; the coefficient collapses to zero with a
/// warning instead of dividing by zero.
pub fn optimal_a(rho: f64, var_hf: f64, var_lf: f64) -> f64 {
    if var_lf <= 0.0 {
        log::warn!("LF consequence variance is zero; control variate disabled (a = 0)");
        return 0.0;
    }
    rho * (var_hf / var_lf).sqrt()
}

/// Optimal LF/HF sample ratio `r* = sqrt(c_hf rho^2 / (c_lf (1 - rho^2)))`.
pub fn optimal_ratio(c_hf: f64, c_lf: f64, rho: f64) -> Result<f64> {
    if !(c_lf > 0.0) || !(c_hf > 0.0) {
        return Err(Error::Estimator("model costs must be positive".into()));
    }
    let rho2 = rho * rho;
    if rho2 >= 1.0 {
        return Err(Error::UnboundedRatio);
    }
    Ok((c_hf * rho2 / (c_lf * (1.0 - rho2))).sqrt())
}

/// Check the control-variate pairing contract: the first `hf` indices of the
/// LF draw must be exactly the HF draw, in order.
pub fn validate_pairing(hf_indices: &[u32], lf_indices: &[u32]) -> Result<()> {
    if lf_indices.len() < hf_indices.len() || lf_indices[..hf_indices.len()] != *hf_indices {
        return Err(Error::Estimator(
            "pairing violation: LF evaluations do not start with the HF sample set".into(),
        ));
    }
    Ok(())
}

/// Per-stratum multi-fidelity estimate
/// `mean(hf) + a (mean(lf_all) - mean(lf_paired))`, raw (unclamped).
pub fn mfmc_stratum_estimate(
    hf_h: &[f64],
    lf_h_paired: &[f64],
    lf_h_all: &[f64],
    a: f64,
) -> Result<f64> {
    if hf_h.is_empty() {
        return Err(Error::Estimator("empty HF sample set".into()));
    }
    if lf_h_paired.len() != hf_h.len() {
        return Err(Error::Estimator(format!(
            "pairing violation: {} paired LF values for {} HF values",
            lf_h_paired.len(),
            hf_h.len()
        )));
    }
    if lf_h_all.len() < lf_h_paired.len() {
        return Err(Error::Estimator(
            "LF evaluation set smaller than the paired subset".into(),
        ));
    }
    Ok(mean(hf_h) + a * (mean(lf_h_all) - mean(lf_h_paired)))
}

/// Minimized MFMC estimator variance
/// `(var_hf / n_hf) (1 - (1 - 1/r) rho^2)`.
pub fn mfmc_variance(var_hf_h: f64, n_hf: usize, r: f64, rho: f64) -> f64 {
    let reduction = if r > 0.0 {
        1.0 - (1.0 - 1.0 / r) * rho * rho
    } else {
        1.0
    };
    var_hf_h / n_hf as f64 * reduction
}

/// Single-fidelity sample count achieving the same variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentCount {
    pub raw: f64,
    pub rounded: u64,
}

/// `N = n_hf / (1 - (1 - 1/r) rho^2)`, the per-stratum (or global) number of
/// high-fidelity evaluations a single-fidelity estimator would need.
pub fn equivalent_counts(n_hf: usize, r: f64, rho: f64) -> EquivalentCount {
    let reduction = if r > 0.0 {
        1.0 - (1.0 - 1.0 / r) * rho * rho
    } else {
        1.0
    };
    let raw = n_hf as f64 / reduction;
    EquivalentCount {
        raw,
        rounded: raw.round() as u64,
    }
}

/// Aggregated MFSS estimate across strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfssEstimate {
    /// Raw total-probability aggregation (can be negative).
    pub h_raw: f64,
    /// Reporting companion floored at zero.
    pub h_floored: f64,
    pub negative_flagged: bool,
    pub variance: f64,
    pub cov: Option<f64>,
}

/// `H = sum_k H_k P_k`, `V = sum_k P_k^2 V_k`.
pub fn mfss_aggregate(
    stratum_estimates: &[f64],
    stratum_variances: &[f64],
    probabilities: &[f64],
) -> Result<MfssEstimate> {
    let n = probabilities.len();
    if stratum_estimates.len() != n || stratum_variances.len() != n || n == 0 {
        return Err(Error::Estimator("stratum count mismatch".into()));
    }
    let mut h_raw = 0.0;
    let mut variance = 0.0;
    for k in 0..n {
        h_raw += stratum_estimates[k] * probabilities[k];
        variance += probabilities[k] * probabilities[k] * stratum_variances[k];
    }
    let negative_flagged = h_raw < 0.0;
    if negative_flagged {
        log::warn!("aggregated failure probability is negative ({h_raw:.3e}); raw value retained");
    }
    let h_floored = h_raw.max(0.0);
    let cov = if h_raw > 0.0 {
        Some(variance.sqrt() / h_raw)
    } else {
        None
    };
    Ok(MfssEstimate {
        h_raw,
        h_floored,
        negative_flagged,
        variance,
        cov,
    })
}

/// Per-stratum sample counts from a computational budget:
/// `n_hf = floor(c_b / (r c_lf + c_hf))`, `n_lf = round(r n_hf)`,
/// with a minimum of two HF evaluations enforced.
pub fn budget_allocation(c_b: f64, c_hf: f64, c_lf: f64, r: f64) -> Result<(u64, u64)> {
    if !(c_hf > 0.0) || c_lf < 0.0 || r < 0.0 {
        return Err(Error::Estimator("invalid costs or ratio".into()));
    }
    let unit = r * c_lf + c_hf;
    if c_b <= unit {
        return Err(Error::Estimator(format!(
            "budget {c_b} cannot cover even one HF evaluation with its LF share ({unit})"
        )));
    }
    let n_hf = (c_b / unit).floor() as u64;
    if n_hf < 2 {
        return Err(Error::Estimator(format!(
            "budget {c_b} allows only {n_hf} HF evaluation(s) per stratum; at least 2 required"
        )));
    }
    let n_lf = (r * n_hf as f64).round() as u64;
    Ok((n_hf, n_lf))
}

/// Computational speedup over a single-fidelity stratified run of equal
/// variance: `N_gss / (N_hf + N_train + N_lf / (c_hf / c_lf))`.
///
/// All counts are per stratum and must come from the cost ledger.
pub fn speedup(n_gss: f64, n_hf: u64, n_train: u64, n_lf: u64, cost_ratio: f64) -> f64 {
    n_gss / (n_hf as f64 + n_train as f64 + n_lf as f64 / cost_ratio)
}

/// One convergence-loop iteration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceIteration {
    /// HF evaluations per stratum after this iteration.
    pub n_hf: usize,
    /// Per-limit-state raw MFSS estimates.
    pub estimates: Vec<f64>,
    /// Per-limit-state convergence index against the previous iteration;
    /// `None` on the first iteration or when the previous estimate was zero.
    pub betas: Vec<Option<f64>>,
    /// Set when any beta was undefined because of a zero previous estimate.
    pub flagged: bool,
}

/// Budget convergence loop: grow the per-stratum HF sample set by `step`
/// until `max_i |H_i^(n+1) - H_i^(n)| / H_i^(n) <= beta_target`.
///
/// `extend_and_estimate(step)` adds `step` HF samples per stratum (plus the
/// matched LF growth) and returns the HF count per stratum and the
/// per-limit-state raw estimates. Iterations with a zero previous estimate
/// are flagged and the loop continues.
pub fn convergence_loop<F>(
    mut extend_and_estimate: F,
    beta_target: f64,
    step: usize,
    max_iterations: usize,
) -> Result<Vec<ConvergenceIteration>>
where
    F: FnMut(usize) -> Result<(usize, Vec<f64>)>,
{
    if !(beta_target > 0.0) || step == 0 {
        return Err(Error::Estimator("beta_target and step must be positive".into()));
    }
    let mut trajectory: Vec<ConvergenceIteration> = Vec::new();
    for _ in 0..max_iterations {
        let (n_hf, estimates) = extend_and_estimate(step)?;
        let (betas, flagged) = match trajectory.last() {
            None => (vec![None; estimates.len()], false),
            Some(prev) => {
                let mut flagged = false;
                let betas = estimates
                    .iter()
                    .zip(&prev.estimates)
                    .map(|(&cur, &old)| {
                        if old != 0.0 {
                            Some((cur - old).abs() / old.abs())
                        } else {
                            flagged = true;
                            None
                        }
                    })
                    .collect();
                (betas, flagged)
            }
        };
        let converged = !trajectory.is_empty()
            && !flagged
            && betas
                .iter()
                .all(|b| b.map(|v| v <= beta_target).unwrap_or(false));
        trajectory.push(ConvergenceIteration {
            n_hf,
            estimates,
            betas,
            flagged,
        });
        if converged {
            return Ok(trajectory);
        }
    }
    Err(Error::Estimator(format!(
        "convergence loop did not reach beta <= {beta_target} within {max_iterations} iterations"
    )))
}

/// Indices where an exceedance curve increases with the threshold.
///
/// Violations are flagged, never silently repaired.
pub fn exceedance_monotonicity_violations(curve: &[(f64, f64)]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..curve.len() {
        debug_assert!(curve[i].0 >= curve[i - 1].0, "thresholds must be sorted");
        if curve[i].1 > curve[i - 1].1 + 1e-15 {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_basic() {
        let m = ConsequenceMeasure::Indicator;
        assert_eq!(consequence(2.0, 1.0, &m).unwrap(), 1.0);
        assert_eq!(consequence(1.0, 1.0, &m).unwrap(), 0.0);
    }

    #[test]
    fn kernel_at_threshold_is_exactly_half() {
        let m = ConsequenceMeasure::SmoothKernel { bandwidth: 0.1 };
        assert_eq!(consequence(3.0, 3.0, &m).unwrap(), 0.5);
    }

    #[test]
    fn kernel_one_bandwidth_above_threshold() {
        // Z = z e^{0.1}, b = 0.1: h = 1 - K(-1) = 0.8413.
        let m = ConsequenceMeasure::SmoothKernel { bandwidth: 0.1 };
        let h = consequence(2.0 * (0.1f64).exp(), 2.0, &m).unwrap();
        assert!((h - 0.8413447460685429).abs() < 1e-9);
    }

    #[test]
    fn kernel_rejects_nonpositive_z() {
        let m = ConsequenceMeasure::SmoothKernel { bandwidth: 0.1 };
        assert!(consequence(0.0, 1.0, &m).is_err());
        assert!(consequence(-1.0, 1.0, &m).is_err());
    }

    #[test]
    fn kernel_monotone_and_converges_to_indicator() {
        let z_i = 1.0;
        for b in [0.1, 0.01, 0.001] {
            let m = ConsequenceMeasure::SmoothKernel { bandwidth: b };
            let mut prev = 0.0;
            for step in 1..200 {
                let z = 0.5 + step as f64 * 0.005;
                let h = consequence(z, z_i, &m).unwrap();
                assert!(h >= prev - 1e-12, "kernel not monotone at z={z}, b={b}");
                prev = h;
            }
            // Pointwise convergence to the indicator away from the threshold.
            let lo = consequence(0.8, z_i, &m).unwrap();
            let hi = consequence(1.25, z_i, &m).unwrap();
            let gap = 3.0 * b; // |ln(z/z_i)| ~ 0.22 >> b for all tested b
            assert!(lo < gap && hi > 1.0 - gap, "b={b}: lo={lo}, hi={hi}");
        }
    }

    #[test]
    fn gss_single_stratum_is_plain_mc() {
        let h = vec![0.0, 1.0, 1.0, 0.0, 1.0];
        let est = gss_estimate(&[h.clone()], &[1.0]).unwrap();
        assert_eq!(est.h_hat, mean(&h));
        assert_eq!(est.variance, sample_variance(&h) / h.len() as f64);
    }

    #[test]
    fn gss_hand_arithmetic() {
        // P = {0.9, 0.1}, stratum means {0, 0.5} -> H = 0.05.
        let strata = vec![vec![0.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]];
        let est = gss_estimate(&strata, &[0.9, 0.1]).unwrap();
        assert!((est.h_hat - 0.05).abs() < 1e-15);
    }

    #[test]
    fn gss_all_ones_has_zero_variance() {
        let strata = vec![vec![1.0; 4], vec![1.0; 4]];
        let est = gss_estimate(&strata, &[0.7, 0.3]).unwrap();
        assert_eq!(est.h_hat, 1.0);
        assert_eq!(est.variance, 0.0);
        assert_eq!(est.cov, Some(0.0));
    }

    #[test]
    fn gss_zero_estimate_has_undefined_cov() {
        let strata = vec![vec![0.0, 0.0, 0.0]];
        let est = gss_estimate(&strata, &[1.0]).unwrap();
        assert_eq!(est.h_hat, 0.0);
        assert!(est.cov.is_none());
    }

    #[test]
    fn optimal_a_cases() {
        assert_eq!(optimal_a(0.0, 1.0, 1.0), 0.0);
        assert_eq!(optimal_a(0.5, 0.2, 0.2), 0.5);
        assert!((optimal_a(0.96, 0.04, 0.01) - 1.92).abs() < 1e-12);
        assert_eq!(optimal_a(0.9, 1.0, 0.0), 0.0);
    }

    #[test]
    fn optimal_ratio_cases() {
        assert_eq!(optimal_ratio(1.0, 0.01, 0.0).unwrap(), 0.0);
        let r = optimal_ratio(1.0, 1.0e-4, 0.9640).unwrap();
        assert!((r - 362.5).abs() < 0.1, "r = {r}");
        let r2 = optimal_ratio(2.0, 1.0, 0.5f64.sqrt()).unwrap();
        assert!((r2 - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(matches!(optimal_ratio(1.0, 0.01, 1.0), Err(Error::UnboundedRatio)));
    }

    #[test]
    fn mfmc_stratum_hand_arithmetic() {
        // hf = {1, 0}, lf_paired = {1, 1}, lf_all = {1, 1, 0, 0}, a = 0.5
        // -> 0.5 + 0.5 (0.5 - 1.0) = 0.25.
        let est =
            mfmc_stratum_estimate(&[1.0, 0.0], &[1.0, 1.0], &[1.0, 1.0, 0.0, 0.0], 0.5).unwrap();
        assert!((est - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mfmc_stratum_a_zero_is_hf_mean() {
        let est =
            mfmc_stratum_estimate(&[1.0, 0.0, 1.0], &[0.3, 0.9, 0.1], &[0.5; 9], 0.0).unwrap();
        assert_eq!(est, 2.0 / 3.0);
    }

    #[test]
    fn mfmc_stratum_identical_models_equal_counts() {
        let h = [0.2, 0.8, 0.6];
        for a in [-1.0, 0.0, 0.7, 2.0] {
            let est = mfmc_stratum_estimate(&h, &h, &h, a).unwrap();
            assert_eq!(est, mean(&h));
        }
    }

    #[test]
    fn pairing_violation_is_hard_error() {
        assert!(validate_pairing(&[1, 2, 3], &[1, 2, 3, 9]).is_ok());
        assert!(validate_pairing(&[1, 2, 3], &[1, 3, 2, 9]).is_err());
        assert!(validate_pairing(&[1, 2, 3], &[1, 2]).is_err());
        assert!(mfmc_stratum_estimate(&[1.0, 0.0], &[1.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn mfmc_variance_cases() {
        assert_eq!(mfmc_variance(0.2, 10, 5.0, 0.0), 0.02);
        let v = mfmc_variance(0.09, 10, 9.0, 0.9);
        assert!((v - 0.00252).abs() < 1e-15, "v = {v}");
        let v_perfect = mfmc_variance(0.09, 10, 1.0e12, 1.0);
        assert!(v_perfect < 1e-13);
    }

    #[test]
    fn equivalent_counts_cases() {
        assert_eq!(equivalent_counts(7, 3.0, 0.0).rounded, 7);
        // Printed values from the allocation example: N_HF = 11,
        // r = 3998/11, rho = 0.9640 -> 150.
        let n = equivalent_counts(11, 3998.0 / 11.0, 0.9640);
        assert!((n.rounded as i64 - 150).abs() <= 1, "n = {n:?}");
        let frac = equivalent_counts(10, 2.0, 0.5f64.sqrt());
        assert!((frac.raw - 13.333333333333334).abs() < 1e-12);
        assert_eq!(frac.rounded, 13);
    }

    #[test]
    fn mfss_aggregate_cases() {
        let single = mfss_aggregate(&[0.1], &[0.004], &[1.0]).unwrap();
        assert_eq!(single.h_raw, 0.1);
        assert_eq!(single.variance, 0.004);

        let equal = mfss_aggregate(&[0.3, 0.3, 0.3], &[0.0; 3], &[0.2, 0.5, 0.3]).unwrap();
        assert!((equal.h_raw - 0.3).abs() < 1e-15);

        let hand = mfss_aggregate(&[0.0, 0.05], &[0.0, 0.0], &[0.99, 0.01]).unwrap();
        assert!((hand.h_raw - 5.0e-4).abs() < 1e-18);

        let neg = mfss_aggregate(&[-0.01, 0.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(neg.negative_flagged);
        assert!(neg.h_raw < 0.0);
        assert_eq!(neg.h_floored, 0.0);
        assert!(neg.cov.is_none());
    }

    #[test]
    fn budget_allocation_cases() {
        assert_eq!(budget_allocation(20.0, 1.0, 0.01, 100.0).unwrap(), (10, 1000));
        assert_eq!(budget_allocation(20.0, 1.0, 0.01, 0.0).unwrap(), (20, 0));
        let unit = 100.0 * 0.01 + 1.0;
        assert_eq!(budget_allocation(2.0 * unit, 1.0, 0.01, 100.0).unwrap().0, 2);
        assert!(budget_allocation(1.5 * unit, 1.0, 0.01, 100.0).is_err());
    }

    #[test]
    fn speedup_anchor_and_degenerate() {
        // N_GSS = 150, N_HF = 11, N_train = 13, N_LF = 3998, cost ratio 1e4
        // -> 150 / 24.3998 = 6.15.
        let sp = speedup(150.0, 11, 13, 3998, 1.0e4);
        assert!((sp - 6.15).abs() < 0.01, "sp = {sp}");
        assert_eq!(speedup(150.0, 15, 0, 0, 1.0e4), 10.0);
        let sp_free = speedup(150.0, 15, 0, 100_000, f64::INFINITY);
        assert_eq!(sp_free, 10.0);
    }

    #[test]
    fn beta_hand_arithmetic() {
        // 0.001 -> 0.00103 gives beta = 0.03.
        let values = [0.001, 0.00103];
        let mut i = 0;
        let traj = convergence_loop(
            |_| {
                let v = values[i.min(1)];
                i += 1;
                Ok((i, vec![v]))
            },
            0.05,
            1,
            10,
        )
        .unwrap();
        assert_eq!(traj.len(), 2);
        let beta = traj[1].betas[0].unwrap();
        assert!((beta - 0.03).abs() < 1e-12, "beta = {beta}");
    }

    #[test]
    fn identical_estimates_stop_immediately() {
        let mut calls = 0;
        let traj = convergence_loop(
            |_| {
                calls += 1;
                Ok((calls, vec![0.5, 0.25]))
            },
            0.03,
            1,
            10,
        )
        .unwrap();
        assert_eq!(traj.len(), 2); // first iteration has no beta
        assert_eq!(traj[1].betas, vec![Some(0.0), Some(0.0)]);
    }

    #[test]
    fn zero_estimate_flags_and_continues() {
        let seq = [0.0, 0.0, 0.01, 0.0101];
        let mut i = 0;
        let traj = convergence_loop(
            |_| {
                let v = seq[i.min(seq.len() - 1)];
                i += 1;
                Ok((i, vec![v]))
            },
            0.03,
            1,
            10,
        )
        .unwrap();
        assert!(traj[1].flagged);
        assert!(traj[2].flagged);
        assert!(!traj[3].flagged);
        assert_eq!(traj.len(), 4);
    }

    #[test]
    fn loop_exhaustion_is_an_error() {
        let mut n = 0;
        let err = convergence_loop(
            |_| {
                n += 1;
                Ok((n, vec![n as f64])) // never converges
            },
            0.001,
            1,
            5,
        );
        assert!(err.is_err());
    }

    #[test]
    fn monotonicity_check_flags_not_fixes() {
        let curve = [(1.0, 0.5), (2.0, 0.3), (3.0, 0.31), (4.0, 0.1)];
        assert_eq!(exceedance_monotonicity_violations(&curve), vec![2]);
        let ok = [(1.0, 0.5), (2.0, 0.3), (3.0, 0.3)];
        assert!(exceedance_monotonicity_violations(&ok).is_empty());
    }
}
