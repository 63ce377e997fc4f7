//! Unit commitment: which units run for a given total input, and where the
//! best set of running units changes as the total input is swept.
//!
//! Switching points fall where two sets deliver equal output (hence equal
//! overall efficiency) or where a set runs out of capacity.

use std::cmp::Ordering;
use std::fmt;

use crate::allocator::{allocate_best, Allocation};
use crate::curves::{detect_family, EfficiencyCurve, Fleet};
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::par::map_indexed;

/// A set of fleet members, as a bitmask over fleet indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset(u32);

impl Subset {
    pub fn empty() -> Self {
        Subset(0)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Subset(indices.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }

    pub fn curves(self, fleet: &Fleet) -> Vec<EfficiencyCurve> {
        self.members().map(|i| fleet.units()[i].curve).collect()
    }

    pub fn capacity(self, fleet: &Fleet) -> f64 {
        self.members().map(|i| fleet.units()[i].curve.p_max()).sum()
    }

    /// Member ids joined by `+`.
    pub fn label(self, fleet: &Fleet) -> String {
        self.members().map(|i| fleet.units()[i].id.as_str()).collect::<Vec<_>>().join("+")
    }
}

impl Ord for Subset {
    /// Fewer members first, then lexicographic on member indices.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.members().cmp(other.members()))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Non-empty subsets able to carry `p_t`, fewest members first.
pub fn feasible_subsets(fleet: &Fleet, p_t: f64) -> Vec<Subset> {
    let n = fleet.len();
    let mut out: Vec<Subset> = (1u32..(1u32 << n))
        .map(Subset)
        .filter(|s| s.capacity(fleet) * (1.0 + 1e-12) >= p_t)
        .collect();
    out.sort();
    out
}

/// Chosen running set and its load split (loads in member order).
#[derive(Debug, Clone, PartialEq)]
pub struct Commitment {
    pub subset: Subset,
    pub allocation: Allocation,
}

impl Commitment {
    /// Loads expanded to the whole fleet, zero for idle units.
    pub fn fleet_loads(&self, fleet_len: usize) -> Vec<f64> {
        let mut loads = vec![0.0; fleet_len];
        for (i, p) in self.subset.members().zip(&self.allocation.loads) {
            loads[i] = *p;
        }
        loads
    }
}

fn check_total(fleet: &Fleet, p_t: f64) -> Result<()> {
    if !p_t.is_finite() {
        return Err(Error::NotFinite);
    }
    if p_t < 0.0 {
        return Err(Error::NegativeInput(p_t));
    }
    let capacity = fleet.total_capacity();
    if p_t > capacity * (1.0 + 1e-12) {
        return Err(Error::Infeasible { requested: p_t, capacity });
    }
    Ok(())
}

fn evaluate_subsets(fleet: &Fleet, p_t: f64, opts: &SolverOptions) -> Vec<Commitment> {
    let subsets = feasible_subsets(fleet, p_t);
    let allocs = map_indexed(opts.execution, subsets.len(), |k| {
        allocate_best(&subsets[k].curves(fleet), p_t, opts)
    });
    subsets
        .into_iter()
        .zip(allocs)
        .filter_map(|(subset, a)| a.ok().map(|allocation| Commitment { subset, allocation }))
        .collect()
}

/// First commitment (in subset order) within the output tolerance of the best.
fn select(evaluated: Vec<Commitment>, opts: &SolverOptions) -> Option<Commitment> {
    let top = evaluated.iter().map(|c| c.allocation.w_t).fold(f64::NEG_INFINITY, f64::max);
    evaluated.into_iter().find(|c| !opts.better(top, c.allocation.w_t))
}

/// Best running set and load split for total input `p_t`.
///
/// Ties within the relative output tolerance go to fewer units, then to the
/// lexicographically smaller member list. `p_t == 0` yields the empty set.
pub fn best_commitment(fleet: &Fleet, p_t: f64, opts: &SolverOptions) -> Result<Commitment> {
    check_total(fleet, p_t)?;
    if p_t == 0.0 {
        return Ok(Commitment { subset: Subset::empty(), allocation: Allocation::zero(0) });
    }
    let capacity = fleet.total_capacity();
    select(evaluate_subsets(fleet, p_t, opts), opts)
        .ok_or(Error::Infeasible { requested: p_t, capacity })
}

/// How loads are split inside a regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationRule {
    /// Similar family: equal efficiency, loads proportional to the scale factors.
    Proportional,
    /// General curves: equal marginal output over interior units.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub active_set: Subset,
    pub p_lo: f64,
    /// Exclusive except for the last regime of a schedule.
    pub p_hi: f64,
    pub rule: AllocationRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSchedule {
    pub regimes: Vec<Regime>,
    /// `breakpoints[k]` separates `regimes[k]` and `regimes[k + 1]`.
    pub breakpoints: Vec<f64>,
}

fn check_range(fleet: &Fleet, p_min: f64, p_max: f64, step: f64) -> Result<()> {
    let capacity = fleet.total_capacity();
    if !(p_min.is_finite() && p_max.is_finite())
        || p_min < 0.0
        || p_min >= p_max
        || p_max > capacity * (1.0 + 1e-12)
    {
        return Err(Error::InvalidRange { lo: p_min, hi: p_max });
    }
    let width = p_max - p_min;
    if !step.is_finite() || step <= 0.0 || step > width {
        return Err(Error::InvalidStep { step, width });
    }
    Ok(())
}

/// Grid `p_min, p_min + step, ...` up to `p_max`, optionally closing on `p_max`.
fn grid(p_min: f64, p_max: f64, step: f64, close: bool) -> Vec<f64> {
    let count = ((p_max - p_min) / step + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=count).map(|k| p_min + k as f64 * step).collect();
    if close && *pts.last().unwrap() < p_max - 1e-9 * step {
        pts.push(p_max);
    }
    pts
}

fn rule_for(fleet: &Fleet, subset: Subset) -> AllocationRule {
    if detect_family(&subset.curves(fleet)).is_some() {
        AllocationRule::Proportional
    } else {
        AllocationRule::Stationary
    }
}

struct Refiner<'a> {
    fleet: &'a Fleet,
    opts: &'a SolverOptions,
}

impl Refiner<'_> {
    fn output(&self, subset: Subset, p: f64) -> f64 {
        if subset.capacity(self.fleet) * (1.0 + 1e-12) < p {
            return f64::NEG_INFINITY;
        }
        allocate_best(&subset.curves(self.fleet), p, self.opts)
            .map_or(f64::NEG_INFINITY, |a| a.w_t)
    }

    /// Which of `a` and `b` wins at `p`; near-ties follow subset order.
    fn left_wins(&self, a: Subset, b: Subset, p: f64) -> bool {
        let (wa, wb) = (self.output(a, p), self.output(b, p));
        let scale = wa.abs().max(wb.abs()).max(1.0);
        if wa.is_finite() && wb.is_finite() && (wa - wb).abs() <= 1e-12 * scale {
            a <= b
        } else {
            wa > wb
        }
    }

    /// Bisects the switch from `a` (winning at `lo`) to `b` (winning at `hi`).
    /// A third set winning in between splits the interval.
    fn refine(&self, mut lo: f64, a: Subset, mut hi: f64, b: Subset, depth: usize, out: &mut Vec<(f64, Subset)>) {
        while hi - lo > 0.125 * self.opts.breakpoint_tol {
            let mid = 0.5 * (lo + hi);
            if depth < 16 {
                if let Ok(best) = best_commitment(self.fleet, mid, self.opts) {
                    let c = best.subset;
                    if c != a && c != b {
                        let wab = self.output(a, mid).max(self.output(b, mid));
                        if self.opts.better(best.allocation.w_t, wab) {
                            self.refine(lo, a, mid, c, depth + 1, out);
                            self.refine(mid, c, hi, b, depth + 1, out);
                            return;
                        }
                    }
                }
            }
            if self.left_wins(a, b, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push((0.5 * (lo + hi), b));
    }
}

/// Scans the best commitment over `[p_min, p_max]` and refines every change of
/// running set to `breakpoint_tol`.
pub fn switching_schedule(
    fleet: &Fleet,
    p_min: f64,
    p_max: f64,
    scan_step: f64,
    opts: &SolverOptions,
) -> Result<SwitchingSchedule> {
    check_range(fleet, p_min, p_max, scan_step)?;
    let pts = grid(p_min, p_max, scan_step, true);
    let winners: Vec<Result<Subset>> = map_indexed(opts.execution, pts.len(), |k| {
        // the zero total has no running set; borrow the next point's
        let p = if pts[k] == 0.0 { pts[1.min(pts.len() - 1)] } else { pts[k] };
        best_commitment(fleet, p, opts).map(|c| c.subset)
    });
    let winners = winners.into_iter().collect::<Result<Vec<_>>>()?;

    let refiner = Refiner { fleet, opts };
    let mut switches: Vec<(f64, Subset)> = Vec::new();
    for k in 1..pts.len() {
        if winners[k] != winners[k - 1] {
            refiner.refine(pts[k - 1], winners[k - 1], pts[k], winners[k], 0, &mut switches);
        }
    }

    let mut regimes = vec![Regime {
        active_set: winners[0],
        p_lo: p_min,
        p_hi: p_max,
        rule: rule_for(fleet, winners[0]),
    }];
    let mut breakpoints = Vec::new();
    for (p, subset) in switches {
        let current = regimes.last_mut().unwrap();
        if subset == current.active_set || p <= current.p_lo {
            continue;
        }
        current.p_hi = p;
        breakpoints.push(p);
        regimes.push(Regime { active_set: subset, p_lo: p, p_hi: p_max, rule: rule_for(fleet, subset) });
    }
    Ok(SwitchingSchedule { regimes, breakpoints })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchKind {
    /// Both sides run at the same overall efficiency.
    EqualEfficiency,
    /// Some unit sits at its capacity on one side of the switch.
    AtCapacity,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointCheck {
    pub p: f64,
    pub left: Subset,
    pub right: Subset,
    pub eta_left: f64,
    pub eta_right: f64,
    pub kind: SwitchKind,
}

impl BreakpointCheck {
    pub fn passed(&self) -> bool {
        self.kind != SwitchKind::Failed
    }
}

/// Tolerance on equal overall efficiency at a switching point.
pub const EQUAL_EFFICIENCY_TOL: f64 = 1e-4;
/// Distance from capacity that counts as running at capacity.
pub const AT_CAPACITY_TOL: f64 = 1e-6;

/// Checks every switching point: the overall efficiencies of the two adjacent
/// running sets agree, or one of them has a unit at capacity. Sides are
/// evaluated `breakpoint_tol` to the left and right of the point.
pub fn verify_switching_points(
    schedule: &SwitchingSchedule,
    fleet: &Fleet,
    opts: &SolverOptions,
) -> Vec<BreakpointCheck> {
    schedule
        .breakpoints
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let left = schedule.regimes[k].active_set;
            let right = schedule.regimes[k + 1].active_set;
            // each side is evaluated just inside its own regime, where an
            // entering unit already carries load
            let side = |s: Subset, p_side: f64| -> Option<(Allocation, Vec<EfficiencyCurve>)> {
                let curves = s.curves(fleet);
                let p_side = p_side.clamp(0.0, s.capacity(fleet));
                allocate_best(&curves, p_side, opts).ok().map(|a| (a, curves))
            };
            let eps = opts.breakpoint_tol;
            let (l, r) = (side(left, p - eps), side(right, p + eps));
            let at_cap = |x: &Option<(Allocation, Vec<EfficiencyCurve>)>| {
                x.as_ref().is_some_and(|(a, curves)| {
                    a.loads.iter().zip(curves).any(|(&load, c)| load >= c.p_max() - AT_CAPACITY_TOL)
                })
            };
            let eta = |x: &Option<(Allocation, Vec<EfficiencyCurve>)>| x.as_ref().map_or(f64::NAN, |(a, _)| a.eta_t);
            let (eta_left, eta_right) = (eta(&l), eta(&r));
            let kind = if (eta_left - eta_right).abs() <= EQUAL_EFFICIENCY_TOL {
                SwitchKind::EqualEfficiency
            } else if at_cap(&l) || at_cap(&r) {
                SwitchKind::AtCapacity
            } else {
                SwitchKind::Failed
            };
            BreakpointCheck { p, left, right, eta_left, eta_right, kind }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p_t: f64,
    pub subset: Subset,
    /// One load per fleet unit, zero for idle units.
    pub loads: Vec<f64>,
    pub w_t: f64,
    pub eta_t: f64,
}

/// Best commitment at every grid point `p_min + k*step <= p_max`.
pub fn sweep(fleet: &Fleet, p_min: f64, p_max: f64, step: f64, opts: &SolverOptions) -> Result<Vec<SweepRow>> {
    check_range(fleet, p_min, p_max, step)?;
    let pts = grid(p_min, p_max, step, false);
    let rows = map_indexed(opts.execution, pts.len(), |k| {
        best_commitment(fleet, pts[k], opts).map(|c| SweepRow {
            p_t: pts[k],
            subset: c.subset,
            loads: c.fleet_loads(fleet.len()),
            w_t: c.allocation.w_t,
            eta_t: c.allocation.eta_t,
        })
    });
    rows.into_iter().collect()
}

impl fmt::Display for SwitchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwitchKind::EqualEfficiency => "equal efficiency",
            SwitchKind::AtCapacity => "at capacity",
            SwitchKind::Failed => "FAILED",
        })
    }
}
