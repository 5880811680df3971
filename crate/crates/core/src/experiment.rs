//! Configuration, parameter sweeps and CSV output.
//!
//! A sweep varies one quantity of a base configuration: the common-to-all
//! fraction `α_N` (`fig1`), the common-to-two fraction `α_2` (`fig2`), or the
//! cache size `M` (`memory`). Every grid point gets an optimized allocation,
//! its constructive peak power, the closed-form estimate, the lower bound, the
//! correlation-ignorant baseline and an exhaustive decodability check.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    closed_form_upper, lower_bound, optimize_allocation, peak_power, DemandEnumeration,
    OptimizerSettings, Variant,
};
use crate::error::{Error, Result};
use crate::model::{reference_inv_gain_sq, AlphaProfile, DemandVector, LibraryConfig};
use crate::placement::CacheAllocation;
use crate::verifier::verify_all;

/// Absolute slack for the bound-ordering gates.
pub const GATE_TOLERANCE: f64 = 1e-9;

fn default_files() -> usize {
    5
}
fn default_users() -> usize {
    5
}
fn default_file_rate() -> f64 {
    1.0
}
fn default_cache() -> f64 {
    0.5
}
fn default_max_demands() -> u64 {
    DemandEnumeration::default().max_demands
}

/// Grid of sweep values. `values`, when present, replaces the uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub start: f64,
    #[serde(default = "Grid::default_stop")]
    pub stop: f64,
    #[serde(default = "Grid::default_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Grid {
    fn default_stop() -> f64 {
        1.0
    }

    fn default_steps() -> usize {
        11
    }

    pub fn uniform(start: f64, stop: f64, steps: usize) -> Self {
        Grid {
            start,
            stop,
            steps,
            values: None,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if let Some(values) = &self.values {
            if values.is_empty() {
                return Err(Error::InvalidSweep("empty value list".into()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSweep("non-finite sweep value".into()));
            }
            return Ok(values.clone());
        }
        if self.steps < 2 {
            return Err(Error::InvalidSweep(format!(
                "a grid needs at least 2 steps, got {}",
                self.steps
            )));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidSweep("non-finite grid bound".into()));
        }
        let last = self.steps - 1;
        Ok((0..self.steps)
            .map(|i| {
                if i == last {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last as f64
                }
            })
            .collect())
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::uniform(0.0, 1.0, 11)
    }
}

/// Structured-text experiment configuration. Missing fields take the
/// defaults of the reference setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_files")]
    pub files: usize,
    #[serde(default = "default_users")]
    pub users: usize,
    #[serde(default = "default_file_rate")]
    pub file_rate: f64,
    #[serde(default = "default_cache")]
    pub cache: f64,
    /// `1/h_k^2`; defaults to `2 - 0.2 (k - 1)`.
    #[serde(default)]
    pub inv_gain_sq: Option<Vec<f64>>,
    /// `α_1..α_N`; defaults to an uncorrelated library.
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    /// Fixed `π`; the optimizer is used when absent.
    #[serde(default)]
    pub allocation: Option<Vec<f64>>,
    #[serde(default)]
    pub sweep: Grid,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default = "default_max_demands")]
    pub max_demands: u64,
    #[serde(default)]
    pub sample_seed: Option<u64>,
    #[serde(default)]
    pub variant: Variant,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn alpha_profile(&self) -> Result<AlphaProfile> {
        match &self.alpha {
            Some(a) => AlphaProfile::new(a.clone()),
            None => AlphaProfile::two_level(self.files, 1, 0.0),
        }
    }

    pub fn channel(&self) -> Vec<f64> {
        self.inv_gain_sq
            .clone()
            .unwrap_or_else(|| reference_inv_gain_sq(self.users))
    }

    /// Validated library for the configured profile.
    pub fn library(&self) -> Result<LibraryConfig> {
        self.library_with(&self.alpha_profile()?, self.cache)
    }

    fn library_with(&self, alpha: &AlphaProfile, cache: f64) -> Result<LibraryConfig> {
        if alpha.len() != self.files {
            return Err(Error::InvalidConfig(format!(
                "alpha has {} entries for {} files",
                alpha.len(),
                self.files
            )));
        }
        LibraryConfig::from_alpha(self.users, self.file_rate, alpha, self.channel(), cache)
    }

    pub fn fixed_allocation(&self) -> Result<Option<CacheAllocation>> {
        self.allocation
            .as_ref()
            .map(|pi| {
                if pi.len() != self.files {
                    return Err(Error::InvalidAllocation(format!(
                        "{} entries for {} files",
                        pi.len(),
                        self.files
                    )));
                }
                CacheAllocation::new(pi.clone())
            })
            .transpose()
    }

    pub fn enumeration(&self) -> DemandEnumeration {
        DemandEnumeration {
            max_demands: self.max_demands,
            sample_seed: self.sample_seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Private plus common-to-all subfiles, sweeping `α_N`.
    Fig1,
    /// Private plus common-to-two subfiles, sweeping `α_2`.
    Fig2,
    /// Cache size `M` at the configured profile.
    Memory,
}

impl SweepMode {
    /// Name of the swept variable for a library of `files` files.
    pub fn variable(self, files: usize) -> String {
        match self {
            SweepMode::Fig1 => format!("alpha_{files}"),
            SweepMode::Fig2 => "alpha_2".into(),
            SweepMode::Memory => "M".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub config: ExperimentConfig,
    pub mode: SweepMode,
}

impl SweepSpec {
    pub fn new(config: ExperimentConfig, mode: SweepMode) -> Result<Self> {
        let spec = SweepSpec { config, mode };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let points = self.config.sweep.points()?;
        match self.mode {
            SweepMode::Fig1 | SweepMode::Fig2 => {
                if self.config.files < 2 {
                    return Err(Error::InvalidSweep(
                        "correlation sweeps need at least 2 files".into(),
                    ));
                }
                if points.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::InvalidSweep(
                        "alpha grid must lie within [0, 1]".into(),
                    ));
                }
            }
            SweepMode::Memory => {
                if points.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidSweep("cache sizes must be non-negative".into()));
                }
            }
        }
        if self.config.allocation.is_some() && self.mode != SweepMode::Memory {
            return Err(Error::InvalidSweep(
                "a fixed allocation only applies to memory sweeps".into(),
            ));
        }
        // surface channel and enumeration errors before any work
        let first = self.library_at(points[0])?;
        self.config.enumeration().demands(first.files(), first.users())?;
        self.config.fixed_allocation()?;
        Ok(())
    }

    /// Library at sweep value `value`.
    pub fn library_at(&self, value: f64) -> Result<LibraryConfig> {
        let c = &self.config;
        match self.mode {
            SweepMode::Fig1 => c.library_with(&AlphaProfile::two_level(c.files, c.files, value)?, c.cache),
            SweepMode::Fig2 => c.library_with(&AlphaProfile::two_level(c.files, 2, value)?, c.cache),
            SweepMode::Memory => c.library_with(&c.alpha_profile()?, value),
        }
    }
}

/// Everything computed for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointReport {
    pub allocation: CacheAllocation,
    /// Constructive peak power of the coded scheme.
    pub p_ub: f64,
    pub p_ub_closed: f64,
    /// `p_ub_closed - p_ub`.
    pub closed_gap: f64,
    /// Sublibraries with an integer caching parameter.
    pub degenerate: Vec<usize>,
    pub p_lb: f64,
    pub p_baseline: f64,
    pub worst_demand: DemandVector,
    pub verified: bool,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(flatten)]
    pub point: PointReport,
}

/// Pass/fail of the invariant gates of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gates {
    pub verified: bool,
    /// `P_LB ≤ P_UB`; only checked for the corrected variant.
    pub lower_bound: Option<bool>,
    /// Baseline at least the correlation-aware power where correlation is
    /// present.
    pub baseline: bool,
}

impl Gates {
    pub fn passed(&self) -> bool {
        self.verified && self.lower_bound.unwrap_or(true) && self.baseline
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub sweep_var: String,
    pub variant: Variant,
    pub files: usize,
    pub rows: Vec<SweepRow>,
    pub gates: Gates,
}

/// Peak power of the scheme that treats every file as an independent unit of
/// rate `R`, with the whole cache spent on those private units.
pub fn baseline_ignorant(config: &LibraryConfig, enumeration: &DemandEnumeration) -> Result<f64> {
    let view = config.uncorrelated_view();
    let alloc = CacheAllocation::concentrated(view.files(), 1);
    Ok(peak_power(&view, &alloc, enumeration)?.total_power)
}

/// Optimizes (unless `fixed` is given), evaluates and verifies one
/// configuration.
pub fn evaluate_point(
    config: &LibraryConfig,
    settings: &OptimizerSettings,
    enumeration: &DemandEnumeration,
    variant: Variant,
    fixed: Option<&CacheAllocation>,
) -> Result<PointReport> {
    let allocation = match fixed {
        Some(a) => a.clone(),
        None => optimize_allocation(config, settings, enumeration)?.allocation,
    };
    let peak = peak_power(config, &allocation, enumeration)?;
    let closed = closed_form_upper(config, &allocation)?;
    let verify = verify_all(config, &allocation, enumeration)?;
    Ok(PointReport {
        p_ub: peak.total_power,
        p_ub_closed: closed.value,
        closed_gap: closed.value - peak.total_power,
        degenerate: closed.degenerate,
        p_lb: lower_bound(config, variant),
        p_baseline: baseline_ignorant(config, enumeration)?,
        worst_demand: peak.worst_demand.expect("peak power names its worst demand"),
        verified: verify.passed(),
        failures: verify.failures.len(),
        allocation,
    })
}

fn gates(rows: &[SweepRow], variant: Variant, uncorrelated: &[bool]) -> Gates {
    let slack = |p: f64| GATE_TOLERANCE * p.abs().max(1.0);
    Gates {
        verified: rows.iter().all(|r| r.point.verified),
        lower_bound: (variant == Variant::Corrected).then(|| {
            rows.iter()
                .all(|r| r.point.p_lb <= r.point.p_ub + slack(r.point.p_ub))
        }),
        baseline: rows.iter().zip(uncorrelated).all(|(r, &plain)| {
            plain || r.point.p_baseline + slack(r.point.p_ub) >= r.point.p_ub
        }),
    }
}

/// Evaluates every grid point; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let c = &spec.config;
    let enumeration = c.enumeration();
    let fixed = c.fixed_allocation()?;
    let points = c.sweep.points()?;
    let evaluated: Vec<(SweepRow, bool)> = points
        .par_iter()
        .map(|&value| {
            let library = spec.library_at(value)?;
            let plain = library.alpha()[0] >= 1.0 - crate::model::RATE_TOLERANCE;
            let point = evaluate_point(&library, &c.optimizer, &enumeration, c.variant, fixed.as_ref())?;
            Ok((SweepRow { value, point }, plain))
        })
        .collect::<Result<_>>()?;
    let (rows, uncorrelated): (Vec<SweepRow>, Vec<bool>) = evaluated.into_iter().unzip();
    Ok(SweepResult {
        mode: spec.mode,
        sweep_var: spec.mode.variable(c.files),
        variant: c.variant,
        files: c.files,
        gates: gates(&rows, c.variant, &uncorrelated),
        rows,
    })
}

impl SweepResult {
    pub fn csv_header(&self) -> Vec<String> {
        let mut header: Vec<String> = ["sweep_var", "value", "p_ub", "p_ub_closed", "p_lb", "p_baseline"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=self.files).map(|l| format!("pi_{l}")));
        header.push("worst_demand".into());
        header.push("verified".into());
        header
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for row in &self.rows {
            let p = &row.point;
            let mut record = vec![
                self.sweep_var.clone(),
                row.value.to_string(),
                p.p_ub.to_string(),
                p.p_ub_closed.to_string(),
                p.p_lb.to_string(),
                p.p_baseline.to_string(),
            ];
            record.extend(p.allocation.as_slice().iter().map(f64::to_string));
            record.push(p.worst_demand.to_string());
            record.push(if p.verified { "pass" } else { "fail" }.into());
            w.write_record(record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
