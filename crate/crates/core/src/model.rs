//! The correlated library, the broadcast channel and the demand bookkeeping.
//!
//! A library of `N` files is split into subfiles `W_S`, one for every nonempty
//! `S ⊆ [N]`; `W_S` is shared by exactly the files in `S`. Subfiles of the same
//! size `ℓ = |S|` form sublibrary `ℓ` and all have the rate `R_ℓ`. Each file
//! therefore carries `Σ_ℓ C(N-1, ℓ-1) R_ℓ` bits per channel use.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::{binomial, subsets, Subset, MAX_ELEMENT};

/// Relative tolerance for rate identities.
pub const RATE_TOLERANCE: f64 = 1e-12;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Library, channel and cache size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LibraryConfig {
    files: usize,
    users: usize,
    file_rate: f64,
    rates: Vec<f64>,
    inv_gain_sq: Vec<f64>,
    cache: f64,
}

impl LibraryConfig {
    /// Builds a configuration from explicit sublibrary rates `R_1..R_N`.
    pub fn new(
        files: usize,
        users: usize,
        file_rate: f64,
        rates: Vec<f64>,
        inv_gain_sq: Vec<f64>,
        cache: f64,
    ) -> Result<Self> {
        if files == 0 || users == 0 {
            return Err(Error::InvalidConfig(
                "file and user counts must be positive".into(),
            ));
        }
        if files > MAX_ELEMENT || users > MAX_ELEMENT {
            return Err(Error::InvalidConfig(format!(
                "at most {MAX_ELEMENT} files and users are supported"
            )));
        }
        if rates.len() != files {
            return Err(Error::InvalidConfig(format!(
                "expected {files} sublibrary rates, got {}",
                rates.len()
            )));
        }
        if inv_gain_sq.len() != users {
            return Err(Error::InvalidConfig(format!(
                "expected {users} inverse channel gains, got {}",
                inv_gain_sq.len()
            )));
        }
        if !file_rate.is_finite() || file_rate < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "file rate must be finite and non-negative, got {file_rate}"
            )));
        }
        if let Some((l, r)) = rates
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || **r < 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "sublibrary rate R_{} = {r} must be finite and non-negative",
                l + 1
            )));
        }
        let total: f64 = rates
            .iter()
            .enumerate()
            .map(|(l, r)| binomial(files - 1, l) as f64 * r)
            .sum();
        if !close(total, file_rate, RATE_TOLERANCE) {
            return Err(Error::InvalidConfig(format!(
                "sublibrary rates add up to a file rate of {total}, expected {file_rate}"
            )));
        }
        if inv_gain_sq.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(Error::InvalidConfig(
                "inverse channel gains must be finite and positive".into(),
            ));
        }
        if inv_gain_sq.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidConfig(
                "users must be ordered from the weakest to the strongest (1/h_k^2 non-increasing)"
                    .into(),
            ));
        }
        if !cache.is_finite() || cache < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cache capacity must be finite and non-negative, got {cache}"
            )));
        }
        Ok(LibraryConfig {
            files,
            users,
            file_rate,
            rates,
            inv_gain_sq,
            cache,
        })
    }

    /// Builds a configuration from the fractions of each file held in each
    /// sublibrary.
    pub fn from_alpha(
        users: usize,
        file_rate: f64,
        alpha: &AlphaProfile,
        inv_gain_sq: Vec<f64>,
        cache: f64,
    ) -> Result<Self> {
        let files = alpha.len();
        let rates = rates_from_alpha(alpha, file_rate, files)?;
        LibraryConfig::new(files, users, file_rate, rates, inv_gain_sq, cache)
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn file_rate(&self) -> f64 {
        self.file_rate
    }

    /// `R_1..R_N`.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Rate of one subfile of sublibrary `ell` (1-based).
    pub fn rate(&self, ell: usize) -> f64 {
        self.rates[ell - 1]
    }

    /// `1/h_1^2, ..., 1/h_K^2`.
    pub fn inv_gain_sq(&self) -> &[f64] {
        &self.inv_gain_sq
    }

    pub fn cache(&self) -> f64 {
        self.cache
    }

    /// Sublibraries with a positive subfile rate.
    pub fn active_sublibraries(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.files).filter(move |&l| self.rates[l - 1] > 0.0)
    }

    /// Fractions `α_ℓ = C(N-1, ℓ-1) R_ℓ / R`.
    pub fn alpha(&self) -> Vec<f64> {
        self.rates
            .iter()
            .enumerate()
            .map(|(l, r)| {
                if self.file_rate > 0.0 {
                    binomial(self.files - 1, l) as f64 * r / self.file_rate
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Total rate of all distinct subfiles, `Σ_ℓ C(N, ℓ) R_ℓ`.
    pub fn library_rate(&self) -> f64 {
        self.rates
            .iter()
            .enumerate()
            .map(|(l, r)| binomial(self.files, l + 1) as f64 * r)
            .sum()
    }

    pub fn with_cache(&self, cache: f64) -> Result<Self> {
        LibraryConfig::new(
            self.files,
            self.users,
            self.file_rate,
            self.rates.clone(),
            self.inv_gain_sq.clone(),
            cache,
        )
    }

    /// The same files viewed as independent units: every file is one private
    /// subfile of rate `R`.
    pub fn uncorrelated_view(&self) -> Self {
        let mut rates = vec![0.0; self.files];
        rates[0] = self.file_rate;
        LibraryConfig {
            rates,
            ..self.clone()
        }
    }
}

/// Noise-normalised inverse channel gains `1/h_k^2 = 2 - 0.2 (k - 1)` of the
/// reference setup.
pub fn reference_inv_gain_sq(users: usize) -> Vec<f64> {
    (0..users).map(|k| 2.0 - 0.2 * k as f64).collect()
}

/// Index set of a subfile: the files sharing it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubfileId(Subset);

impl SubfileId {
    pub fn new(files: Subset) -> Result<Self> {
        if files.is_empty() {
            return Err(Error::InvalidConfig("a subfile is shared by at least one file".into()));
        }
        Ok(SubfileId(files))
    }

    pub fn from_files<I: IntoIterator<Item = usize>>(files: I) -> Self {
        let s = Subset::from_elements(files);
        assert!(!s.is_empty(), "empty subfile index set");
        SubfileId(s)
    }

    pub fn files(self) -> Subset {
        self.0
    }

    /// Sublibrary index `|S|`.
    pub fn sublibrary(self) -> usize {
        self.0.len()
    }
}

impl fmt::Debug for SubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W{}", self.0)
    }
}

impl fmt::Display for SubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Files requested by users `1..=K`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct DemandVector {
    demands: Vec<usize>,
    #[serde(skip)]
    distinct: Subset,
}

impl DemandVector {
    pub fn new(demands: Vec<usize>, files: usize) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::InvalidDemand("no users".into()));
        }
        if let Some(d) = demands.iter().find(|&&d| d == 0 || d > files) {
            return Err(Error::InvalidDemand(format!(
                "requested file {d} outside 1..={files}"
            )));
        }
        let distinct = demands.iter().copied().collect();
        Ok(DemandVector { demands, distinct })
    }

    pub fn users(&self) -> usize {
        self.demands.len()
    }

    /// File requested by user `k` (1-based).
    pub fn demand(&self, k: usize) -> usize {
        self.demands[k - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.demands
    }

    /// The set of distinct requested files.
    pub fn distinct(&self) -> Subset {
        self.distinct
    }

    /// Users whose requested file lies in `files`.
    pub fn users_requesting(&self, files: Subset) -> impl Iterator<Item = usize> + '_ {
        self.demands
            .iter()
            .enumerate()
            .filter(move |(_, d)| files.contains(**d))
            .map(|(k, _)| k + 1)
    }

    /// Every demand vector in `[N]^K`, lexicographic with user 1 most
    /// significant.
    pub fn enumerate(files: usize, users: usize) -> impl Iterator<Item = DemandVector> {
        let total = (files as u128).pow(users as u32);
        (0..total).map(move |index| DemandVector::from_index(index, files, users))
    }

    /// The demand vector at position `index` of [`DemandVector::enumerate`].
    pub fn from_index(mut index: u128, files: usize, users: usize) -> DemandVector {
        let mut demands = vec![0; users];
        for slot in demands.iter_mut().rev() {
            *slot = (index % files as u128) as usize + 1;
            index /= files as u128;
        }
        let distinct = demands.iter().copied().collect();
        DemandVector { demands, distinct }
    }
}

impl fmt::Debug for DemandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{:?}", self.demands)
    }
}

impl fmt::Display for DemandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.demands.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Fraction of every file that lives in each sublibrary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaProfile(Vec<f64>);

impl AlphaProfile {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidAlpha("empty profile".into()));
        }
        if let Some((l, a)) = alpha
            .iter()
            .enumerate()
            .find(|(_, a)| !a.is_finite() || **a < 0.0)
        {
            return Err(Error::InvalidAlpha(format!("alpha_{} = {a} is negative", l + 1)));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidAlpha(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(AlphaProfile(alpha))
    }

    /// Private part `1 - a` and a fraction `a` in sublibrary `ell`.
    pub fn two_level(files: usize, ell: usize, a: f64) -> Result<Self> {
        if ell == 0 || ell > files {
            return Err(Error::SublibraryOutOfRange { index: ell, files });
        }
        let mut alpha = vec![0.0; files];
        alpha[0] += 1.0 - a;
        alpha[ell - 1] += a;
        AlphaProfile::new(alpha)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Sublibrary rates `R_ℓ = α_ℓ R / C(N-1, ℓ-1)`.
pub fn rates_from_alpha(alpha: &AlphaProfile, file_rate: f64, files: usize) -> Result<Vec<f64>> {
    if alpha.len() != files {
        return Err(Error::InvalidAlpha(format!(
            "profile has {} entries for {files} files",
            alpha.len()
        )));
    }
    // re-check: the profile may have been deserialized without validation
    let alpha = AlphaProfile::new(alpha.0.clone())?;
    Ok(alpha
        .0
        .iter()
        .enumerate()
        .map(|(l, a)| a * file_rate / binomial(files - 1, l) as f64)
        .collect())
}

/// All subfiles of sublibrary `ell`, lexicographic.
pub fn sublibrary_subfiles(files: usize, ell: usize) -> Result<Vec<SubfileId>> {
    if ell == 0 || ell > files {
        return Err(Error::SublibraryOutOfRange { index: ell, files });
    }
    Ok(subsets(files, ell).into_iter().map(SubfileId).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(sets: &[&[usize]]) -> Vec<SubfileId> {
        sets.iter().map(|s| SubfileId::from_files(s.iter().copied())).collect()
    }

    #[test]
    fn rates_from_alpha_examples() {
        let r = rates_from_alpha(&AlphaProfile::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 1.0, 5)
            .unwrap();
        assert_eq!(r, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let r = rates_from_alpha(&AlphaProfile::new(vec![0.5, 0.0, 0.0, 0.0, 0.5]).unwrap(), 1.0, 5)
            .unwrap();
        assert_eq!(r, vec![0.5, 0.0, 0.0, 0.0, 0.5]);
        let r = rates_from_alpha(&AlphaProfile::new(vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap(), 1.0, 5)
            .unwrap();
        assert_eq!(r, vec![0.5, 0.125, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn alpha_rejects_bad_profiles() {
        assert!(matches!(
            AlphaProfile::new(vec![1.2, -0.2]),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            AlphaProfile::new(vec![0.5, 0.4]),
            Err(Error::InvalidAlpha(_))
        ));
        let unchecked: AlphaProfile = serde_json::from_str("[0.7, 0.7]").unwrap();
        assert!(rates_from_alpha(&unchecked, 1.0, 2).is_err());
        assert!(rates_from_alpha(&AlphaProfile::new(vec![1.0]).unwrap(), 1.0, 2).is_err());
    }

    #[test]
    fn sublibrary_listing() {
        assert_eq!(sublibrary_subfiles(3, 3).unwrap(), ids(&[&[1, 2, 3]]));
        assert_eq!(
            sublibrary_subfiles(3, 2).unwrap(),
            ids(&[&[1, 2], &[1, 3], &[2, 3]])
        );
        assert_eq!(sublibrary_subfiles(5, 2).unwrap().len(), 10);
        assert!(matches!(
            sublibrary_subfiles(3, 0),
            Err(Error::SublibraryOutOfRange { .. })
        ));
        assert!(sublibrary_subfiles(3, 4).is_err());
    }

    #[test]
    fn config_validation() {
        let g = reference_inv_gain_sq(3);
        assert!(LibraryConfig::new(3, 3, 1.0, vec![1.0, 0.0, 0.0], g.clone(), 0.5).is_ok());
        // wrong file rate identity
        assert!(LibraryConfig::new(3, 3, 1.0, vec![0.5, 0.0, 0.0], g.clone(), 0.5).is_err());
        // increasing inverse gains means users are not ordered weakest first
        assert!(LibraryConfig::new(3, 3, 1.0, vec![1.0, 0.0, 0.0], vec![1.0, 2.0, 1.0], 0.5).is_err());
        assert!(LibraryConfig::new(3, 3, 1.0, vec![1.0, 0.0, 0.0], g, -1.0).is_err());
    }

    #[test]
    fn reference_channel() {
        let g = reference_inv_gain_sq(5);
        let want = [2.0, 1.8, 1.6, 1.4, 1.2];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn demand_enumeration_order() {
        let all: Vec<_> = DemandVector::enumerate(3, 2).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0].as_slice(), &[1, 1]);
        assert_eq!(all[1].as_slice(), &[1, 2]);
        assert_eq!(all[8].as_slice(), &[3, 3]);
        assert_eq!(all[5].distinct(), Subset::from_elements([2, 3]));
        assert!(DemandVector::new(vec![1, 4], 3).is_err());
        let d = DemandVector::new(vec![2, 1, 2], 3).unwrap();
        let users: Vec<_> = d.users_requesting(Subset::singleton(2)).collect();
        assert_eq!(users, vec![1, 3]);
        assert_eq!(d.to_string(), "2-1-2");
    }

    #[test]
    fn every_file_has_rate_r() {
        let alpha = AlphaProfile::new(vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap();
        let cfg = LibraryConfig::from_alpha(5, 2.0, &alpha, reference_inv_gain_sq(5), 1.0).unwrap();
        for i in 1..=5 {
            let mut total = 0.0;
            for ell in 1..=5 {
                for s in sublibrary_subfiles(5, ell).unwrap() {
                    if s.files().contains(i) {
                        total += cfg.rate(ell);
                    }
                }
            }
            assert!((total - 2.0).abs() <= 1e-12 * 2.0, "file {i}: {total}");
        }
    }
}
