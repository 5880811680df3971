use std::collections::BTreeMap;

use corrcache::bounds::{optimize_allocation, peak_power, DemandEnumeration, OptimizerSettings};
use corrcache::delivery::{requested_subfiles, sublibrary_groups};
use corrcache::model::{reference_inv_gain_sq, AlphaProfile, DemandVector, LibraryConfig, SubfileId};
use corrcache::placement::CacheAllocation;
use corrcache::verifier::verify_all;

/// Every user receives each requested subfile containing its file exactly
/// once over the groups of a sublibrary, and nothing else.
#[test]
fn groups_cover_each_user_request_once() {
    for (files, users) in [(3, 3), (4, 4), (4, 3), (3, 5), (5, 2)] {
        for d in DemandVector::enumerate(files, users) {
            let wanted = d.distinct();
            for ell in 1..=files {
                let groups = sublibrary_groups(files, &d, ell).unwrap();
                for k in 1..=users {
                    let mut got: BTreeMap<SubfileId, usize> = BTreeMap::new();
                    for g in &groups {
                        if let Some(s) = g.get(k) {
                            *got.entry(s).or_default() += 1;
                        }
                    }
                    let mut want: BTreeMap<SubfileId, usize> = BTreeMap::new();
                    for r in 1..=ell {
                        for s in requested_subfiles(files, wanted, ell, r) {
                            if s.files().contains(d.demand(k)) {
                                want.insert(s, 1);
                            }
                        }
                    }
                    assert_eq!(got, want, "N={files} K={users} d={d} l={ell} user {k}");
                }
                // one group per distinct subfile slot: no empty groups
                assert!(groups.iter().all(|g| g.as_slice().iter().any(Option::is_some)));
            }
        }
    }
}

#[test]
fn mixed_profiles_decode_for_every_demand() {
    let enumeration = DemandEnumeration::default();
    for (alpha, cache, pi) in [
        (vec![0.25, 0.25, 0.25, 0.25], 0.3, vec![0.25, 0.25, 0.25, 0.25]),
        (vec![0.1, 0.6, 0.3, 0.0], 0.8, vec![0.2, 0.5, 0.3, 0.0]),
        (vec![0.0, 0.0, 1.0, 0.0], 1.7, vec![0.0, 0.0, 1.0, 0.0]),
        (vec![0.4, 0.3, 0.2, 0.1], 2.2, vec![0.1, 0.2, 0.3, 0.4]),
    ] {
        let alpha = AlphaProfile::new(alpha).unwrap();
        let cfg = LibraryConfig::from_alpha(4, 1.0, &alpha, reference_inv_gain_sq(4), cache).unwrap();
        let alloc = CacheAllocation::new(pi).unwrap();
        let report = verify_all(&cfg, &alloc, &enumeration).unwrap();
        assert_eq!(report.demands, 256);
        assert!(report.passed(), "{}", report.to_text());
    }
}

#[test]
fn more_users_than_files_decode() {
    let alpha = AlphaProfile::new(vec![0.5, 0.5, 0.0]).unwrap();
    let cfg = LibraryConfig::from_alpha(5, 1.0, &alpha, reference_inv_gain_sq(5), 0.6).unwrap();
    let alloc = CacheAllocation::new(vec![0.6, 0.4, 0.0]).unwrap();
    let report = verify_all(&cfg, &alloc, &DemandEnumeration::default()).unwrap();
    assert_eq!(report.demands, 243);
    assert!(report.passed(), "{}", report.to_text());
}

#[test]
fn reference_peak_is_an_all_distinct_demand() {
    let alpha = AlphaProfile::two_level(5, 5, 0.5).unwrap();
    let cfg = LibraryConfig::from_alpha(5, 1.0, &alpha, reference_inv_gain_sq(5), 0.5).unwrap();
    let enumeration = DemandEnumeration::default();
    let opt = optimize_allocation(&cfg, &OptimizerSettings::default(), &enumeration).unwrap();
    let peak = peak_power(&cfg, &opt.allocation, &enumeration).unwrap();
    assert!((peak.total_power - opt.power).abs() <= 1e-12 * opt.power);
    let worst = peak.worst_demand.unwrap();
    assert_eq!(worst.distinct().len(), 5, "worst demand {worst}");
}

#[test]
fn sampled_enumeration_is_reproducible() {
    let alpha = AlphaProfile::two_level(5, 2, 0.5).unwrap();
    let cfg = LibraryConfig::from_alpha(5, 1.0, &alpha, reference_inv_gain_sq(5), 0.5).unwrap();
    let sampled = DemandEnumeration {
        max_demands: 200,
        sample_seed: Some(11),
    };
    let alloc = CacheAllocation::new(vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
    let a = peak_power(&cfg, &alloc, &sampled).unwrap();
    let b = peak_power(&cfg, &alloc, &sampled).unwrap();
    assert_eq!(a, b);
    let full = peak_power(&cfg, &alloc, &DemandEnumeration::default()).unwrap();
    assert!(a.total_power <= full.total_power);
    let report = verify_all(&cfg, &alloc, &sampled).unwrap();
    assert!(!report.exhaustive);
    assert!(report.passed());
}

