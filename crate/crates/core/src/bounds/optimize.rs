//! Cache allocation search.
//!
//! The peak power is piecewise smooth in `π` with kinks wherever some `t_ℓ`
//! crosses an integer, so the search is derivative free: a uniform lattice on
//! the simplex `{π ≥ 0, Σπ ≤ 1}` over the active sublibraries, optionally
//! refined by a projected Nelder-Mead run from the best lattice point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DemandEnumeration, RateTable};
use crate::error::Result;
use crate::model::LibraryConfig;
use crate::placement::CacheAllocation;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    #[default]
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub method: Method,
    /// Lattice subdivisions per active coordinate.
    pub resolution: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            method: Method::Local,
            resolution: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizedAllocation {
    pub allocation: CacheAllocation,
    pub power: f64,
    pub evaluations: usize,
}

/// Integer points `c ≥ 0` with `Σ c ≤ total` in `dims` coordinates,
/// lexicographic.
fn lattice(dims: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(dims: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dims {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(dims, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dims, total, &mut Vec::with_capacity(dims), &mut out);
    out
}

/// Euclidean projection onto `{x ≥ 0, Σx ≤ 1, x ≤ 1}`.
fn project(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    // projection onto the probability simplex
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    x.iter().map(|v| (v - shift).max(0.0)).collect()
}

struct Objective<'a> {
    config: &'a LibraryConfig,
    table: RateTable,
    active: Vec<usize>,
}

impl Objective<'_> {
    fn allocation(&self, x: &[f64]) -> CacheAllocation {
        let mut pi = vec![0.0; self.config.files()];
        for (&ell, &v) in self.active.iter().zip(x) {
            pi[ell - 1] = v;
        }
        // tiny overshoot from floating point sums
        let sum: f64 = pi.iter().sum();
        if sum > 1.0 {
            pi.iter_mut().for_each(|p| *p /= sum);
        }
        CacheAllocation::new(pi).expect("projected point is feasible")
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.table.peak(self.config, &self.allocation(x))?.0)
    }
}

/// Minimises the constructive peak power over cache allocations.
pub fn optimize_allocation(
    config: &LibraryConfig,
    settings: &OptimizerSettings,
    enumeration: &DemandEnumeration,
) -> Result<OptimizedAllocation> {
    let active: Vec<usize> = config.active_sublibraries().collect();
    let table = RateTable::new(config, enumeration)?;
    let objective = Objective {
        config,
        table,
        active,
    };
    let dims = objective.active.len();
    if dims == 0 {
        let allocation = CacheAllocation::new(vec![0.0; config.files()])?;
        let power = objective.table.peak(config, &allocation)?.0;
        return Ok(OptimizedAllocation {
            allocation,
            power,
            evaluations: 1,
        });
    }

    let resolution = settings.resolution.max(1);
    let points = lattice(dims, resolution);
    let scored: Vec<(f64, usize, usize)> = points
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let x: Vec<f64> = c.iter().map(|&v| v as f64 / resolution as f64).collect();
            let used: usize = c.iter().sum();
            objective.eval(&x).map(|p| (p, used, i))
        })
        .collect::<Result<_>>()?;
    // lowest power; ties prefer the larger total allocation, then lattice order
    let &(grid_power, _, best) = scored
        .iter()
        .min_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(b.1.cmp(&a.1))
                .then(a.2.cmp(&b.2))
        })
        .expect("lattice is never empty");
    let grid_x: Vec<f64> = points[best]
        .iter()
        .map(|&v| v as f64 / resolution as f64)
        .collect();
    let mut evaluations = points.len();

    let (x, power) = match settings.method {
        Method::Grid => (grid_x, grid_power),
        Method::Local => {
            // restarts with a fresh simplex get past kinks where the max over
            // demands switches
            let step = 1.0 / resolution as f64;
            let (mut x, mut p) = (grid_x, grid_power);
            for _ in 0..RESTARTS {
                let (nx, np, n) = nelder_mead(&objective, &x, p, step)?;
                evaluations += n;
                if np >= p * (1.0 - REFINE_GAIN) {
                    break;
                }
                (x, p) = (nx, np);
            }
            (x, p)
        }
    };
    Ok(OptimizedAllocation {
        allocation: objective.allocation(&x),
        power,
        evaluations,
    })
}

const MAX_ITERATIONS_PER_DIM: usize = 150;
/// Relative improvement a refined point needs to replace the current one.
const REFINE_GAIN: f64 = 1e-9;
const RESTARTS: usize = 4;
const SIZE_TOLERANCE: f64 = 1e-9;

/// Projected Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2).
fn nelder_mead(
    objective: &Objective<'_>,
    start: &[f64],
    start_value: f64,
    step: f64,
) -> Result<(Vec<f64>, f64, usize)> {
    let dims = start.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        objective.eval(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.to_vec(), start_value)];
    for i in 0..dims {
        let mut v = start.to_vec();
        v[i] += step;
        let mut v = project(&v);
        if v == start {
            v = start.to_vec();
            v[i] -= step;
            v = project(&v);
        }
        let f = eval(&v)?;
        simplex.push((v, f));
    }

    for _ in 0..MAX_ITERATIONS_PER_DIM * dims {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if size < SIZE_TOLERANCE {
            break;
        }
        let worst = simplex[dims].clone();
        let centroid: Vec<f64> = (0..dims)
            .map(|j| simplex[..dims].iter().map(|(v, _)| v[j]).sum::<f64>() / dims as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            project(
                &centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + coef * (c - w))
                    .collect::<Vec<_>>(),
            )
        };

        let reflected = along(1.0);
        let fr = eval(&reflected)?;
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded)?;
            simplex[dims] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[dims - 1].1 {
            simplex[dims] = (reflected, fr);
            continue;
        }
        let contracted = if fr < worst.1 { along(0.5) } else { along(-0.5) };
        let fc = eval(&contracted)?;
        if fc < worst.1.min(fr) {
            simplex[dims] = (contracted, fc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v: Vec<f64> = vertex
                .0
                .iter()
                .zip(&best)
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            let f = eval(&v)?;
            *vertex = (v, f);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok((x, f, evaluations))
}
