//! Brute-force reference optimizer for fleets of at most three units.
//!
//! Only evaluates total output on grids; it shares nothing with the
//! allocator's first-order machinery, so agreement between the two is a
//! meaningful check.

use crate::allocator::Allocation;
use crate::commitment::{feasible_subsets, Subset};
use crate::curves::{EfficiencyCurve, Fleet};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

pub const MAX_ORACLE_UNITS: usize = 3;
/// Number of step halvings after the initial grid.
pub const REFINEMENT_DEPTH: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub allocation: Allocation,
    pub grid_step: f64,
    pub depth: usize,
}

fn output(curves: &[EfficiencyCurve], loads: &[f64]) -> f64 {
    curves.iter().zip(loads).map(|(c, &p)| c.output_unchecked(p)).sum()
}

/// `true` if `(w, loads)` beats the incumbent: more output, or equal output
/// and a lexicographically smaller load vector.
fn beats(w: f64, loads: &[f64], best: &Option<(f64, Vec<f64>)>) -> bool {
    match best {
        None => true,
        Some((bw, bl)) => w > *bw || (w == *bw && loads.partial_cmp(bl.as_slice()) == Some(std::cmp::Ordering::Less)),
    }
}

/// Completes free coordinates with the remainder for the last unit, if feasible.
fn complete(curves: &[EfficiencyCurve], free: &[f64], p_t: f64) -> Option<Vec<f64>> {
    let last_cap = curves[curves.len() - 1].p_max();
    if free.iter().zip(curves).any(|(&p, c)| p < 0.0 || p > c.p_max()) {
        return None;
    }
    let last = p_t - free.iter().sum::<f64>();
    if last < -1e-12 * p_t.max(1.0) || last > last_cap * (1.0 + 1e-12) {
        return None;
    }
    let mut loads = free.to_vec();
    loads.push(last.clamp(0.0, last_cap));
    Some(loads)
}

fn axis(upper: f64, step: f64) -> Vec<f64> {
    let count = (upper / step).floor() as usize;
    let mut v: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    if *v.last().unwrap() < upper {
        v.push(upper);
    }
    v
}

fn best_on_grid(curves: &[EfficiencyCurve], p_t: f64, step: f64, exec: Execution) -> Option<(f64, Vec<f64>)> {
    let n = curves.len();
    let first = axis(curves[0].p_max().min(p_t), step);
    let rows = map_indexed(exec, first.len(), |r| {
        let mut best = None;
        let mut try_point = |free: &[f64]| {
            if let Some(loads) = complete(curves, free, p_t) {
                let w = output(curves, &loads);
                if beats(w, &loads, &best) {
                    best = Some((w, loads));
                }
            }
        };
        if n == 2 {
            try_point(&[first[r]]);
        } else {
            for &q in &axis(curves[1].p_max().min(p_t - first[r]).max(0.0), step) {
                try_point(&[first[r], q]);
            }
        }
        best
    });
    let mut best = None;
    for (w, loads) in rows.into_iter().flatten() {
        if beats(w, &loads, &best) {
            best = Some((w, loads));
        }
    }
    best
}

/// Exhaustive grid search over the load simplex followed by a shrinking local
/// box search.
pub fn oracle_allocate(curves: &[EfficiencyCurve], p_t: f64, step: f64) -> Result<OracleResult> {
    oracle_allocate_with(curves, p_t, step, Execution::default())
}

pub fn oracle_allocate_with(
    curves: &[EfficiencyCurve],
    p_t: f64,
    step: f64,
    exec: Execution,
) -> Result<OracleResult> {
    let n = curves.len();
    if n == 0 {
        return Err(Error::EmptyFleet);
    }
    if n > MAX_ORACLE_UNITS {
        return Err(Error::OracleUnsupported(n));
    }
    if !p_t.is_finite() {
        return Err(Error::NotFinite);
    }
    if p_t < 0.0 {
        return Err(Error::NegativeInput(p_t));
    }
    let capacity: f64 = curves.iter().map(|c| c.p_max()).sum();
    if p_t > capacity * (1.0 + 1e-12) {
        return Err(Error::Infeasible { requested: p_t, capacity });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep { step, width: p_t });
    }
    let done = |loads: Vec<f64>| OracleResult {
        allocation: Allocation::from_loads(curves, loads),
        grid_step: step,
        depth: REFINEMENT_DEPTH,
    };
    if p_t == 0.0 {
        return Ok(done(vec![0.0; n]));
    }
    if n == 1 {
        return Ok(done(vec![p_t.min(curves[0].p_max())]));
    }

    let (mut best_w, mut best) =
        best_on_grid(curves, p_t, step, exec).ok_or(Error::Infeasible { requested: p_t, capacity })?;
    let mut h = step;
    for _ in 0..REFINEMENT_DEPTH {
        h *= 0.5;
        // re-centre until the centre is the best point of its 5^(n-1) box
        for _ in 0..64 {
            let centre: Vec<f64> = best[..n - 1].to_vec();
            let mut incumbent = Some((best_w, best.clone()));
            let offsets: Vec<Vec<f64>> = if n == 2 {
                (-2..=2).map(|d| vec![d as f64 * h]).collect()
            } else {
                (-2..=2).flat_map(|d1| (-2..=2).map(move |d2| vec![d1 as f64 * h, d2 as f64 * h])).collect()
            };
            for off in offsets {
                let free: Vec<f64> = centre.iter().zip(&off).map(|(c, d)| c + d).collect();
                if let Some(loads) = complete(curves, &free, p_t) {
                    let w = output(curves, &loads);
                    if beats(w, &loads, &incumbent) {
                        incumbent = Some((w, loads));
                    }
                }
            }
            let (w, loads) = incumbent.unwrap();
            if loads == best {
                break;
            }
            best_w = w;
            best = loads;
        }
    }
    Ok(done(best))
}

/// Best subset by brute force over every feasible subset of a fleet of at
/// most three units. Ties within `1e-9` relative go to fewer units.
pub fn oracle_commitment(fleet: &Fleet, p_t: f64, step: f64) -> Result<(Subset, OracleResult)> {
    if fleet.len() > MAX_ORACLE_UNITS {
        return Err(Error::OracleUnsupported(fleet.len()));
    }
    if p_t == 0.0 {
        let r = OracleResult { allocation: Allocation::zero(0), grid_step: step, depth: REFINEMENT_DEPTH };
        return Ok((Subset::empty(), r));
    }
    let capacity = fleet.total_capacity();
    let subsets = feasible_subsets(fleet, p_t);
    if subsets.is_empty() {
        return Err(Error::Infeasible { requested: p_t, capacity });
    }
    let mut results = Vec::with_capacity(subsets.len());
    for s in subsets {
        results.push((s, oracle_allocate(&s.curves(fleet), p_t, step)?));
    }
    let top = results.iter().map(|(_, r)| r.allocation.w_t).fold(f64::NEG_INFINITY, f64::max);
    let pick = results
        .into_iter()
        .find(|(_, r)| r.allocation.w_t >= top - 1e-9 * top.abs().max(1.0))
        .expect("at least one feasible subset");
    Ok(pick)
}
