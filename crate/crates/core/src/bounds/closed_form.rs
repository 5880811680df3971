//! Closed-form estimate of the coded scheme's peak power.
//!
//! The per-level rates are
//!
//! ```text
//! ρ̂_k = Σ_ℓ Σ_r C(N-K, ℓ-r) C(min(N,K)-1, r-1) γ_{k,ℓ,r}
//! γ_{k,ℓ,r} = R_ℓ [ (t^B - t) C(K-k, t^A)/C(K, t^A) + (t - t^A) C(K-k, t^B)/C(K, t^B) ]
//! ```
//!
//! for `k ≤ ⌈min(N,K)/r⌉ + 1` and zero otherwise, with `r` running from
//! `max(ℓ-N+K, 1)` to `min(ℓ, K)`. The coefficient on `γ` is the memory-sharing
//! interpolation of the per-level load `C(K-k, s)/C(K, s)` between the integer
//! points `t^A = ⌊t⌋` and `t^B = ⌊t⌋ + 1`; the ratio form
//! `(⌊t⌋-t+1)/(⌊t⌋-t) · λ` it is usually written in is singular at integer
//! `t`, where the interpolation reduces to the single term at `t`. Such
//! sublibraries are listed in [`ClosedFormReport::degenerate`].
//!
//! The estimate is a diagnostic. The constructive peak power from the actual
//! message ledgers is authoritative; [`compare_closed_form`] reports both.

use serde::Serialize;

use super::{peak_power, power_closed_form, DemandEnumeration, Variant};
use crate::error::Result;
use crate::model::LibraryConfig;
use crate::placement::{cache_parameters, CacheAllocation, PartSplit};
use crate::subset::{binomial, binomial_signed};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub value: f64,
    pub rho_hat: Vec<f64>,
    /// Sublibraries whose caching parameter is an integer.
    pub degenerate: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormComparison {
    pub closed_form: ClosedFormReport,
    pub constructive: f64,
    /// `closed_form.value - constructive`.
    pub difference: f64,
}

/// Memory-sharing interpolation of `C(K-k, s) / C(K, s)`.
fn level_load(split: &PartSplit, users: usize, k: usize) -> f64 {
    let ratio = |s: usize| {
        let total = binomial(users, s);
        if total == 0 {
            0.0
        } else {
            binomial_signed(users as i64 - k as i64, s as i64) as f64 / total as f64
        }
    };
    let frac = split.t - split.lower as f64;
    let mut load = (1.0 - frac) * ratio(split.lower);
    if frac > 0.0 {
        load += frac * ratio(split.upper);
    }
    load
}

pub fn closed_form_upper(config: &LibraryConfig, alloc: &CacheAllocation) -> Result<ClosedFormReport> {
    let n = config.files() as i64;
    let users = config.users();
    let k_users = users as i64;
    let levels = config.files().min(users);
    let splits = cache_parameters(config, alloc)?;

    let mut rho_hat = vec![0.0; levels];
    for split in &splits {
        let ell = split.sublibrary as i64;
        let rate = config.rate(split.sublibrary);
        let r_lo = (ell - n + k_users).max(1);
        let r_hi = ell.min(k_users);
        for r in r_lo..=r_hi {
            let groups = binomial_signed(n - k_users, ell - r) as f64
                * binomial_signed(levels as i64 - 1, r - 1) as f64;
            if groups == 0.0 {
                continue;
            }
            let served = (levels as i64 + r - 1) / r + 1;
            for (k, slot) in rho_hat.iter_mut().enumerate() {
                let level = k + 1;
                if level as i64 <= served {
                    *slot += groups * rate * level_load(split, users, level);
                }
            }
        }
    }

    let value = power_closed_form(&rho_hat, config.inv_gain_sq(), Variant::Corrected)?;
    let degenerate = splits
        .iter()
        .filter(|s| s.is_integer())
        .map(|s| s.sublibrary)
        .collect();
    Ok(ClosedFormReport {
        value,
        rho_hat,
        degenerate,
    })
}

/// Closed-form estimate next to the constructive peak power for the same
/// allocation.
pub fn compare_closed_form(
    config: &LibraryConfig,
    alloc: &CacheAllocation,
    enumeration: &DemandEnumeration,
) -> Result<ClosedFormComparison> {
    let closed_form = closed_form_upper(config, alloc)?;
    let constructive = peak_power(config, alloc, enumeration)?.total_power;
    Ok(ClosedFormComparison {
        difference: closed_form.value - constructive,
        closed_form,
        constructive,
    })
}
