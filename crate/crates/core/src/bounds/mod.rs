//! Transmit power of superposition coding over the degraded Gaussian
//! broadcast channel, and the memory-power bounds built on it.
//!
//! Level `k` of a superposition codebook carries `ρ_k` bits per channel use to
//! user `k` and everyone stronger. With users ordered weakest first, the rate
//! constraints `ρ_k ≤ ½ log2(1 + P_k / (1/h_k² + Σ_{j>k} P_j))` are tight at
//! the optimum, which gives the backward recursion
//! `S_k = (2^{2ρ_k} - 1)/h_k² + 2^{2ρ_k} S_{k+1}` for the power `S_k` of
//! levels `k..K`.

mod closed_form;
mod optimize;
mod peak;

pub use closed_form::{closed_form_upper, compare_closed_form, ClosedFormComparison, ClosedFormReport};
pub use optimize::{optimize_allocation, Method, OptimizedAllocation, OptimizerSettings};
pub use peak::{peak_power, DemandEnumeration, RateTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DemandVector, LibraryConfig};
use crate::subset::binomial_signed;

/// Which power expression to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Product term `Π_{j<k} 2^{2ρ_j}`, consistent with the rate region.
    #[default]
    Corrected,
    /// Product term `Π_{j<k} 2^{2ρ_j} / h_j²`, the literal closed form.
    AsPrinted,
}

/// Power needed to deliver a rate profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerReport {
    pub total_power: f64,
    pub per_level_power: Vec<f64>,
    pub rho: Vec<f64>,
    pub worst_demand: Option<DemandVector>,
}

fn check_rates(rho: &[f64], inv_gain_sq: &[f64]) -> Result<()> {
    if rho.len() > inv_gain_sq.len() {
        return Err(Error::LengthMismatch {
            rates: rho.len(),
            gains: inv_gain_sq.len(),
        });
    }
    if let Some((k, r)) = rho
        .iter()
        .enumerate()
        .find(|(_, r)| r.is_nan() || **r < 0.0)
    {
        return Err(Error::NegativeRate {
            level: k + 1,
            rate: *r,
        });
    }
    Ok(())
}

/// Minimum superposition power for rate profile `rho` (level `k` at index
/// `k - 1`). `inv_gain_sq` may be longer than `rho`; extra users are ignored.
pub fn min_power(rho: &[f64], inv_gain_sq: &[f64]) -> Result<PowerReport> {
    check_rates(rho, inv_gain_sq)?;
    let levels = rho.len();
    let mut per_level = vec![0.0; levels];
    let mut above = 0.0;
    for k in (0..levels).rev() {
        let growth = (2.0 * rho[k]).exp2();
        per_level[k] = (growth - 1.0) * (inv_gain_sq[k] + above);
        above += per_level[k];
    }
    Ok(PowerReport {
        total_power: above,
        per_level_power: per_level,
        rho: rho.to_vec(),
        worst_demand: None,
    })
}

/// Forward closed form `Σ_k (2^{2ρ_k} - 1)/h_k² Π_{j<k} f_j`, with
/// `f_j = 2^{2ρ_j}` (corrected) or `2^{2ρ_j}/h_j²` (as printed).
pub fn power_closed_form(rho: &[f64], inv_gain_sq: &[f64], variant: Variant) -> Result<f64> {
    check_rates(rho, inv_gain_sq)?;
    let mut total = 0.0;
    let mut product = 1.0;
    for (k, &r) in rho.iter().enumerate() {
        let growth = (2.0 * r).exp2();
        total += (growth - 1.0) * inv_gain_sq[k] * product;
        product *= match variant {
            Variant::Corrected => growth,
            Variant::AsPrinted => growth * inv_gain_sq[k],
        };
    }
    Ok(total)
}

/// Per-level rates of the uncoded-placement lower bound,
/// `ρ̃_k = max{Σ_{i=0}^{N-k} C(N-k, i) R_{i+1} - M, 0}` for `k ≤ min(N, K)`.
pub fn lower_bound_rates(config: &LibraryConfig) -> Vec<f64> {
    let n = config.files();
    let levels = n.min(config.users());
    (1..=levels)
        .map(|k| {
            let need: f64 = (0..=n - k)
                .map(|i| binomial_signed((n - k) as i64, i as i64) as f64 * config.rate(i + 1))
                .sum();
            (need - config.cache()).max(0.0)
        })
        .collect()
}

/// Lower bound on the peak transmit power under uncoded placement.
pub fn lower_bound(config: &LibraryConfig, variant: Variant) -> f64 {
    let rho = lower_bound_rates(config);
    let g = config.inv_gain_sq();
    let value = match variant {
        Variant::Corrected => min_power(&rho, g).map(|r| r.total_power),
        Variant::AsPrinted => power_closed_form(&rho, g, variant),
    };
    value.expect("lower-bound rates are non-negative and fit the channel")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_inv_gain_sq, AlphaProfile};
    use proptest::prelude::*;

    #[test]
    fn single_user_inversion() {
        let p = min_power(&[0.5], &[1.0]).unwrap();
        assert_eq!(p.total_power, 1.0);
    }

    #[test]
    fn zero_rates_need_no_power() {
        let p = min_power(&[0.0; 4], &[2.0, 1.5, 1.0, 1.0]).unwrap();
        assert_eq!(p.total_power, 0.0);
        assert!(p.per_level_power.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_user_recursion() {
        let p = min_power(&[0.5, 0.5], &[2.0, 1.0]).unwrap();
        assert_eq!(p.per_level_power, vec![3.0, 1.0]);
        assert_eq!(p.total_power, 4.0);
        assert_eq!(power_closed_form(&[0.5, 0.5], &[2.0, 1.0], Variant::Corrected).unwrap(), 4.0);
        // literal product is 2^1 / h_1^2 = 4 on the second term: 2 + 4
        assert_eq!(power_closed_form(&[0.5, 0.5], &[2.0, 1.0], Variant::AsPrinted).unwrap(), 6.0);
    }

    #[test]
    fn rate_region_is_tight() {
        let g = [2.0, 1.7, 1.1];
        let rho = [0.3, 0.8, 0.25];
        let p = min_power(&rho, &g).unwrap();
        for k in 0..3 {
            let interference: f64 = p.per_level_power[k + 1..].iter().sum();
            let rate = 0.5 * (1.0 + p.per_level_power[k] / (g[k] + interference)).log2();
            assert!((rate - rho[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(matches!(
            min_power(&[0.1, -0.2], &[1.0, 1.0]),
            Err(Error::NegativeRate { level: 2, .. })
        ));
        assert!(min_power(&[0.1, 0.2], &[1.0]).is_err());
    }

    #[test]
    fn lower_bound_common_only() {
        let alpha = AlphaProfile::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let cfg = LibraryConfig::from_alpha(5, 1.0, &alpha, reference_inv_gain_sq(5), 0.5).unwrap();
        assert_eq!(lower_bound_rates(&cfg), vec![0.5, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(lower_bound(&cfg, Variant::Corrected), 2.0);
        assert_eq!(lower_bound(&cfg, Variant::AsPrinted), 2.0);
    }

    #[test]
    fn lower_bound_vanishes_with_whole_file_cached() {
        let alpha = AlphaProfile::new(vec![0.4, 0.3, 0.3]).unwrap();
        let cfg = LibraryConfig::from_alpha(4, 1.0, &alpha, reference_inv_gain_sq(4), 1.0).unwrap();
        assert_eq!(lower_bound(&cfg, Variant::Corrected), 0.0);
    }

    #[test]
    fn lower_bound_single_user() {
        let cfg = LibraryConfig::new(1, 1, 1.0, vec![1.0], vec![1.5], 0.25).unwrap();
        let want = ((2.0f64 * 0.75).exp2() - 1.0) * 1.5;
        assert!((lower_bound(&cfg, Variant::Corrected) - want).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn closed_form_matches_recursion(
            rho in prop::collection::vec(0.0f64..3.0, 1..8),
            raw in prop::collection::vec(0.05f64..5.0, 8),
        ) {
            let mut g: Vec<f64> = raw[..rho.len()].to_vec();
            g.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let rec = min_power(&rho, &g).unwrap().total_power;
            let closed = power_closed_form(&rho, &g, Variant::Corrected).unwrap();
            prop_assert!((rec - closed).abs() <= 1e-12 * rec.abs().max(1e-300));
        }

        #[test]
        fn power_is_monotone_in_each_rate(
            rho in prop::collection::vec(0.0f64..2.0, 1..6),
            bump in 0.0f64..1.0,
            at in 0usize..6,
        ) {
            let g: Vec<f64> = (0..rho.len()).map(|k| 2.0 - 0.2 * k as f64).collect();
            let at = at % rho.len();
            let mut more = rho.clone();
            more[at] += bump;
            let base = min_power(&rho, &g).unwrap().total_power;
            let bumped = min_power(&more, &g).unwrap().total_power;
            prop_assert!(bumped >= base);
        }
    }
}
