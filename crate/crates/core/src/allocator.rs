//! Load distribution over a fixed set of running units.
//!
//! Output is maximized for a fixed total input. For similar-efficiency
//! families the optimum keeps every running unit at the same efficiency; for
//! arbitrary quadratic curves the interior optimum equalizes marginal output
//! `g_i(P_i) = 2a_iP_i - 3b_iP_i^2` across running units. Since each `g_i` is
//! non-monotone, the shared value `lambda` is found by a multiplier sweep on
//! per-unit best responses, and boundary and grid candidates are compared
//! against the stationary ones.

use crate::commitment::{best_commitment, Subset};
use crate::curves::{EfficiencyCurve, Fleet, SimilarFamily};
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::par::map_indexed;

const CAPACITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Input per active unit, in the order the units were given.
    pub loads: Vec<f64>,
    pub p_t: f64,
    pub w_t: f64,
    /// Overall efficiency `w_t / p_t`, 0 when `p_t == 0`.
    pub eta_t: f64,
}

impl Allocation {
    pub fn zero(n: usize) -> Self {
        Self { loads: vec![0.0; n], p_t: 0.0, w_t: 0.0, eta_t: 0.0 }
    }

    /// Builds an allocation from loads; `p_t` is their sum.
    pub fn from_loads(curves: &[EfficiencyCurve], loads: Vec<f64>) -> Self {
        let p_t = loads.iter().sum();
        Self::with_total(curves, loads, p_t)
    }

    fn with_total(curves: &[EfficiencyCurve], loads: Vec<f64>, p_t: f64) -> Self {
        let w_t = total_output(curves, &loads);
        let eta_t = if p_t > 0.0 { w_t / p_t } else { 0.0 };
        Self { loads, p_t, w_t, eta_t }
    }

    /// Checks the sum, bound and output invariants against `curves`.
    pub fn is_consistent(&self, curves: &[EfficiencyCurve]) -> bool {
        if self.loads.len() != curves.len() {
            return false;
        }
        let sum: f64 = self.loads.iter().sum();
        let bounds = self
            .loads
            .iter()
            .zip(curves)
            .all(|(&p, c)| p >= 0.0 && p <= c.p_max() * (1.0 + CAPACITY_SLACK));
        let w = total_output(curves, &self.loads);
        let eta_ok = if self.p_t > 0.0 {
            (self.eta_t - self.w_t / self.p_t).abs() <= 1e-12 * self.eta_t.abs().max(1.0)
        } else {
            self.eta_t == 0.0
        };
        (sum - self.p_t).abs() <= 1e-9
            && bounds
            && (w - self.w_t).abs() <= 1e-9 * w.abs().max(1.0)
            && eta_ok
    }
}

fn total_output(curves: &[EfficiencyCurve], loads: &[f64]) -> f64 {
    curves.iter().zip(loads).map(|(c, &p)| c.output_unchecked(p)).sum()
}

/// Position of a unit's load relative to its bounds and marginal-output peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadBranch {
    /// Interior, marginal output still rising (`P < a/(3b)`).
    Rising,
    /// Interior, marginal output falling.
    Falling,
    AtZero,
    AtCap,
}

/// An allocation satisfying the first-order conditions with shared marginal
/// output `multiplier` over its interior units.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryCandidate {
    pub allocation: Allocation,
    pub multiplier: f64,
    pub branches: Vec<LoadBranch>,
}

fn branch_of(c: &EfficiencyCurve, p: f64, tol: f64) -> LoadBranch {
    if p <= tol {
        LoadBranch::AtZero
    } else if p >= c.p_max() - tol {
        LoadBranch::AtCap
    } else if p < c.inflection() {
        LoadBranch::Rising
    } else {
        LoadBranch::Falling
    }
}

/// Shared marginal output of the interior units, if there are any.
pub fn marginal_value(curves: &[EfficiencyCurve], allocation: &Allocation, tol: f64) -> Option<f64> {
    let interior: Vec<f64> = curves
        .iter()
        .zip(&allocation.loads)
        .filter(|(c, &p)| p > tol && p < c.p_max() - tol)
        .map(|(c, &p)| c.marginal_unchecked(p))
        .collect();
    (!interior.is_empty()).then(|| interior.iter().sum::<f64>() / interior.len() as f64)
}

fn check_total(curves: &[EfficiencyCurve], p_t: f64) -> Result<()> {
    if !p_t.is_finite() {
        return Err(Error::NotFinite);
    }
    if p_t < 0.0 {
        return Err(Error::NegativeInput(p_t));
    }
    let capacity: f64 = curves.iter().map(|c| c.p_max()).sum();
    if p_t > capacity * (1.0 + CAPACITY_SLACK) {
        return Err(Error::Infeasible { requested: p_t, capacity });
    }
    Ok(())
}

/// Equal-efficiency split for a similar family: every uncapped unit runs at
/// the same normalized load `P_i / beta_i`, capped units are pinned and the
/// rest re-solved.
pub fn allocate_similar(family: &SimilarFamily, caps: &[f64], p_t: f64) -> Result<Allocation> {
    assert_eq!(family.betas.len(), caps.len(), "one cap per family member");
    if !p_t.is_finite() {
        return Err(Error::NotFinite);
    }
    if p_t <= 0.0 {
        return Err(Error::NegativeInput(p_t));
    }
    let capacity: f64 = caps.iter().sum();
    if p_t > capacity * (1.0 + CAPACITY_SLACK) {
        return Err(Error::Infeasible { requested: p_t, capacity });
    }
    let n = caps.len();
    let mut loads = vec![0.0; n];
    let mut pinned = vec![false; n];
    loop {
        let fixed: f64 = (0..n).filter(|&i| pinned[i]).map(|i| caps[i]).sum();
        let remaining = (p_t - fixed).max(0.0);
        let beta_sum: f64 = (0..n).filter(|&i| !pinned[i]).map(|i| family.betas[i]).sum();
        let mut newly_pinned = false;
        for i in 0..n {
            if pinned[i] {
                loads[i] = caps[i];
                continue;
            }
            let p = family.betas[i] * remaining / beta_sum;
            if p > caps[i] {
                pinned[i] = true;
                newly_pinned = true;
            }
            loads[i] = p;
        }
        if !newly_pinned || pinned.iter().all(|&x| x) {
            if pinned.iter().all(|&x| x) {
                loads.copy_from_slice(caps);
            }
            break;
        }
    }
    // member output is P * eta_ref(P / beta)
    let w_t: f64 = loads
        .iter()
        .zip(&family.betas)
        .map(|(&p, &beta)| p * family.reference.efficiency_unchecked(p / beta))
        .sum();
    Ok(Allocation { loads, p_t, w_t, eta_t: w_t / p_t })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Free,
    Off,
    /// Restricted to the concave part of the output curve, `[a/(3b), p_max]`.
    OnConcave,
}

/// Maximizer of `W(P) - lambda*P` over the unit's mode domain. Ties go to the
/// larger score, then the smaller load, which keeps the total monotone in lambda.
fn best_response(c: &EfficiencyCurve, mode: Mode, lambda: f64) -> f64 {
    let cap = c.p_max();
    match mode {
        Mode::Off => 0.0,
        Mode::OnConcave => {
            let lo = c.inflection().min(cap);
            if lambda >= c.marginal_unchecked(lo) {
                lo
            } else if lambda <= c.marginal_unchecked(cap) {
                cap
            } else {
                c.marginal_roots(lambda).map_or(lo, |(_, hi)| hi.clamp(lo, cap))
            }
        }
        Mode::Free => {
            let score = |p: f64| c.output_unchecked(p) - lambda * p;
            let mut best = 0.0;
            let mut best_score = 0.0;
            let mut consider = |p: f64| {
                let s = score(p);
                if s > best_score {
                    best = p;
                    best_score = s;
                }
            };
            if let Some((_, hi)) = c.marginal_roots(lambda) {
                if hi > 0.0 && hi < cap {
                    consider(hi);
                }
            }
            consider(cap);
            best
        }
    }
}

fn responses(curves: &[EfficiencyCurve], modes: &[Mode], lambda: f64) -> Vec<f64> {
    curves.iter().zip(modes).map(|(c, &m)| best_response(c, m, lambda)).collect()
}

/// Spreads `residual` over the interior units proportionally to `dP/dlambda`,
/// then over any unit with slack.
fn absorb_residual(curves: &[EfficiencyCurve], loads: &mut [f64], mut residual: f64, tol: f64) {
    let weights: Vec<f64> = curves
        .iter()
        .zip(loads.iter())
        .map(|(c, &p)| {
            if p > tol && p < c.p_max() - tol {
                1.0 / c.marginal_slope(p).abs().max(1e-12)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for ((p, c), w) in loads.iter_mut().zip(curves).zip(&weights) {
            let target = (*p + residual * w / total).clamp(0.0, c.p_max());
            let moved = target - *p;
            *p = target;
            residual -= moved;
        }
    }
    // leftovers go to running units first so idle units stay at exactly zero
    for running in [true, false] {
        for (p, c) in loads.iter_mut().zip(curves) {
            if residual == 0.0 {
                return;
            }
            if (*p > 0.0) != running {
                continue;
            }
            let target = (*p + residual).clamp(0.0, c.p_max());
            residual -= target - *p;
            *p = target;
        }
    }
}

struct SweepHit {
    loads: Vec<f64>,
    multiplier: f64,
}

/// Multiplier sweep for fixed modes. When the summed best response jumps
/// across `p_t`, the jumping units are branched into "off" and "on the concave
/// part" and each branch is swept again.
fn sweep_modes(curves: &[EfficiencyCurve], modes: &[Mode], p_t: f64, tol: f64, out: &mut Vec<SweepHit>) {
    let hi_start = curves.iter().map(|c| c.max_marginal()).fold(0.0, f64::max) + 1.0;
    let lo_start = curves
        .iter()
        .map(|c| c.marginal_unchecked(c.p_max()))
        .fold(0.0, f64::min)
        - 1.0;
    let total = |l: f64| responses(curves, modes, l).iter().sum::<f64>();
    let s_min = total(hi_start);
    let s_max = total(lo_start);
    if p_t < s_min - tol || p_t > s_max + tol {
        return;
    }
    let (mut lo, mut hi) = (lo_start, hi_start);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) >= p_t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r_lo = responses(curves, modes, lo);
    let r_hi = responses(curves, modes, hi);
    let jumps: Vec<usize> = (0..curves.len())
        .filter(|&i| {
            let scale = curves[i].inflection().min(curves[i].p_max());
            (r_lo[i] - r_hi[i]).abs() > 1e-3 * scale
        })
        .collect();
    if jumps.is_empty() {
        let mut loads = r_lo;
        let residual = p_t - loads.iter().sum::<f64>();
        absorb_residual(curves, &mut loads, residual, tol);
        out.push(SweepHit { loads, multiplier: 0.5 * (lo + hi) });
        return;
    }
    for replacement in [Mode::Off, Mode::OnConcave] {
        let mut next = modes.to_vec();
        for &j in &jumps {
            next[j] = replacement;
        }
        sweep_modes(curves, &next, p_t, tol, out);
    }
}

/// Stationary points with exactly one unit on the rising part of its marginal
/// curve; the multiplier sweep never produces these.
fn rising_hits(curves: &[EfficiencyCurve], p_t: f64, tol: f64, out: &mut Vec<SweepHit>) {
    const SCAN: usize = 128;
    let n = curves.len();
    for k in 0..n {
        let ck = curves[k];
        let t_hi = ck.inflection().min(ck.p_max()).min(p_t);
        if t_hi <= 0.0 {
            continue;
        }
        let others = |t: f64| -> Vec<f64> {
            let lambda = ck.marginal_unchecked(t);
            (0..n)
                .map(|i| if i == k { t } else { best_response(&curves[i], Mode::Free, lambda) })
                .collect()
        };
        let residual = |t: f64| others(t).iter().sum::<f64>() - p_t;
        let mut prev_t = 0.0;
        let mut prev_r = residual(0.0);
        for j in 1..=SCAN {
            let t = t_hi * j as f64 / SCAN as f64;
            let r = residual(t);
            if prev_r == 0.0 || prev_r.signum() != r.signum() {
                let (mut a, mut b, mut ra) = (prev_t, t, prev_r);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let rm = residual(m);
                    if rm.signum() == ra.signum() && rm != 0.0 {
                        a = m;
                        ra = rm;
                    } else {
                        b = m;
                    }
                }
                let t_root = 0.5 * (a + b);
                let mut loads = others(t_root);
                let fixed: f64 = (0..n).filter(|&i| i != k).map(|i| loads[i]).sum();
                let pk = p_t - fixed;
                // A sign change across a jump in the other units' responses is not a root.
                if (pk - t_root).abs() <= 1e-6 * t_hi.max(1.0) && pk > 0.0 && pk <= ck.p_max() {
                    loads[k] = pk;
                    out.push(SweepHit { loads, multiplier: ck.marginal_unchecked(pk) });
                }
            }
            prev_t = t;
            prev_r = r;
        }
        let _ = tol;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Zero,
    Cap,
    Falling,
    Rising,
}

fn status_load(c: &EfficiencyCurve, status: Status, lambda: f64) -> f64 {
    match status {
        Status::Zero => 0.0,
        Status::Cap => c.p_max(),
        Status::Falling => c.marginal_roots(lambda).map_or(c.inflection(), |(_, hi)| hi),
        Status::Rising => c.marginal_roots(lambda).map_or(c.inflection(), |(lo, _)| lo),
    }
}

/// Multiplier range on which `status` is a consistent first-order assignment.
fn status_range(c: &EfficiencyCurve, status: Status) -> Option<(f64, f64)> {
    let cap = c.p_max();
    let u = c.inflection();
    match status {
        Status::Zero => Some((0.0, f64::INFINITY)),
        Status::Cap => Some((f64::NEG_INFINITY, c.marginal_unchecked(cap))),
        Status::Falling => (cap > u).then(|| (c.marginal_unchecked(cap), c.max_marginal())),
        Status::Rising => Some((0.0, c.marginal_unchecked(u.min(cap)))),
    }
}

/// Every first-order point: each unit at zero, at capacity, or on one of the
/// two roots of `g_i(P) = lambda`, with at most one unit on the rising root.
/// Unlike the sweep this also finds points where a unit sits at a local but
/// not global maximum of its Lagrangian term.
fn status_hits(curves: &[EfficiencyCurve], p_t: f64, out: &mut Vec<SweepHit>) {
    const SCAN: usize = 96;
    let n = curves.len();
    let choices = [Status::Zero, Status::Cap, Status::Falling, Status::Rising];
    let combos = 4usize.pow(n as u32);
    for code in 0..combos {
        let mut statuses = Vec::with_capacity(n);
        let mut rest = code;
        for _ in 0..n {
            statuses.push(choices[rest % 4]);
            rest /= 4;
        }
        let rising = statuses.iter().filter(|&&s| s == Status::Rising).count();
        let interior = statuses.iter().filter(|&&s| matches!(s, Status::Falling | Status::Rising)).count();
        if rising > 1 || interior == 0 {
            continue;
        }
        let mut range = (f64::NEG_INFINITY, f64::INFINITY);
        let mut ok = true;
        for (c, &s) in curves.iter().zip(&statuses) {
            match status_range(c, s) {
                Some((lo, hi)) => {
                    range.0 = range.0.max(lo);
                    range.1 = range.1.min(hi);
                }
                None => ok = false,
            }
        }
        if !ok || range.0.partial_cmp(&range.1).is_none_or(|o| o.is_gt()) || !range.0.is_finite() || !range.1.is_finite() {
            continue;
        }
        let loads = |l: f64| -> Vec<f64> {
            curves.iter().zip(&statuses).map(|(c, &s)| status_load(c, s, l)).collect()
        };
        let residual = |l: f64| loads(l).iter().sum::<f64>() - p_t;
        let (lo, hi) = range;
        let mut prev_l = lo;
        let mut prev_r = residual(lo);
        for j in 1..=SCAN {
            let l = lo + (hi - lo) * j as f64 / SCAN as f64;
            let r = residual(l);
            if prev_r == 0.0 || (r != 0.0 && prev_r.signum() != r.signum()) || (j == SCAN && r == 0.0) {
                let (mut a, mut b, mut ra) = (prev_l, l, prev_r);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let rm = residual(m);
                    if rm != 0.0 && rm.signum() == ra.signum() {
                        a = m;
                        ra = rm;
                    } else {
                        b = m;
                    }
                }
                let l_root = if ra == 0.0 { a } else { 0.5 * (a + b) };
                let mut hit = loads(l_root);
                let residual = p_t - hit.iter().sum::<f64>();
                if residual.abs() <= 1e-6 * p_t.max(1.0) {
                    absorb_residual(curves, &mut hit, residual, 0.0);
                    out.push(SweepHit { loads: hit, multiplier: l_root });
                }
            }
            prev_l = l;
            prev_r = r;
        }
    }
}

fn to_candidate(curves: &[EfficiencyCurve], hit: SweepHit, p_t: f64, tol: f64) -> Option<StationaryCandidate> {
    let branches: Vec<LoadBranch> =
        curves.iter().zip(&hit.loads).map(|(c, &p)| branch_of(c, p, tol)).collect();
    let interior: Vec<f64> = curves
        .iter()
        .zip(&hit.loads)
        .zip(&branches)
        .filter(|(_, b)| matches!(b, LoadBranch::Rising | LoadBranch::Falling))
        .map(|((c, &p), _)| c.marginal_unchecked(p))
        .collect();
    let multiplier = if interior.is_empty() {
        hit.multiplier
    } else {
        interior.iter().sum::<f64>() / interior.len() as f64
    };
    let scale = multiplier.abs().max(1.0);
    if interior.iter().any(|g| (g - multiplier).abs() > 1e-9 * scale) {
        return None;
    }
    // Bound units must not want to move inward.
    let kkt = curves.iter().zip(&hit.loads).zip(&branches).all(|((c, &p), b)| match b {
        LoadBranch::AtZero => c.marginal_unchecked(p) <= multiplier + 1e-9 * scale,
        LoadBranch::AtCap => c.marginal_unchecked(p) >= multiplier - 1e-9 * scale,
        _ => true,
    });
    if !kkt {
        return None;
    }
    let allocation = Allocation::with_total(curves, hit.loads, p_t);
    Some(StationaryCandidate { allocation, multiplier, branches })
}

fn same_loads(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-7 * a.abs().max(b.abs()).max(1.0))
}

/// Every allocation satisfying the first-order conditions for the given units.
pub fn stationary_candidates(
    curves: &[EfficiencyCurve],
    p_t: f64,
    opts: &SolverOptions,
) -> Result<Vec<StationaryCandidate>> {
    if curves.is_empty() {
        return Err(Error::EmptyFleet);
    }
    check_total(curves, p_t)?;
    if p_t <= 0.0 {
        return Err(Error::NegativeInput(p_t));
    }
    Ok(candidates_unchecked(curves, p_t, opts))
}

fn candidates_unchecked(curves: &[EfficiencyCurve], p_t: f64, opts: &SolverOptions) -> Vec<StationaryCandidate> {
    let tol = opts.root_tol;
    let p_t = p_t.min(curves.iter().map(|c| c.p_max()).sum());
    let mut hits = Vec::new();
    if curves.len() == 1 {
        hits.push(SweepHit { loads: vec![p_t], multiplier: curves[0].marginal_unchecked(p_t) });
    } else {
        sweep_modes(curves, &vec![Mode::Free; curves.len()], p_t, tol, &mut hits);
        rising_hits(curves, p_t, tol, &mut hits);
        if curves.len() <= opts.max_pinned_units {
            status_hits(curves, p_t, &mut hits);
        }
    }
    let mut out: Vec<StationaryCandidate> = Vec::new();
    for hit in hits {
        if let Some(c) = to_candidate(curves, hit, p_t, tol) {
            if !out.iter().any(|o| same_loads(&o.allocation.loads, &c.allocation.loads)) {
                out.push(c);
            }
        }
    }
    out
}

/// Candidates with some units pinned at 0 or at capacity and the rest re-solved.
fn pinned_candidates(curves: &[EfficiencyCurve], p_t: f64, opts: &SolverOptions) -> Vec<Vec<f64>> {
    let n = curves.len();
    let combos = 3usize.pow(n as u32);
    let per_combo = map_indexed(opts.execution, combos, |code| {
        // digit 0 = free, 1 = zero, 2 = cap
        let mut digits = vec![0u8; n];
        let mut rest = code;
        for d in digits.iter_mut() {
            *d = (rest % 3) as u8;
            rest /= 3;
        }
        if digits.iter().all(|&d| d == 0) {
            return Vec::new();
        }
        let fixed: f64 = (0..n).filter(|&i| digits[i] == 2).map(|i| curves[i].p_max()).sum();
        let remaining = p_t - fixed;
        let free: Vec<usize> = (0..n).filter(|&i| digits[i] == 0).collect();
        let free_cap: f64 = free.iter().map(|&i| curves[i].p_max()).sum();
        let base: Vec<f64> =
            (0..n).map(|i| if digits[i] == 2 { curves[i].p_max() } else { 0.0 }).collect();
        if free.is_empty() {
            return if remaining.abs() <= opts.root_tol { vec![base] } else { Vec::new() };
        }
        if remaining <= 0.0 || remaining > free_cap * (1.0 + CAPACITY_SLACK) {
            return Vec::new();
        }
        let sub: Vec<EfficiencyCurve> = free.iter().map(|&i| curves[i]).collect();
        candidates_unchecked(&sub, remaining, opts)
            .into_iter()
            .map(|c| {
                let mut loads = base.clone();
                for (k, &i) in free.iter().enumerate() {
                    loads[i] = c.allocation.loads[k];
                }
                loads
            })
            .collect()
    });
    per_combo.into_iter().flatten().collect()
}

/// Recursive enumeration of grid points over the first `n-1` units; the last
/// unit takes the remainder.
fn grid_scan(
    curves: &[EfficiencyCurve],
    p_t: f64,
    step: f64,
    prefix: &mut Vec<f64>,
    used: f64,
    best: &mut Option<(f64, Vec<f64>)>,
) {
    let depth = prefix.len();
    let n = curves.len();
    if depth == n - 1 {
        let last = p_t - used;
        if last < -1e-12 || last > curves[n - 1].p_max() * (1.0 + CAPACITY_SLACK) {
            return;
        }
        prefix.push(last.clamp(0.0, curves[n - 1].p_max()));
        let w = total_output(curves, prefix);
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            *best = Some((w, prefix.clone()));
        }
        prefix.pop();
        return;
    }
    let cap_after: f64 = curves[depth + 1..].iter().map(|c| c.p_max()).sum();
    let lo = (p_t - used - cap_after).max(0.0);
    let hi = curves[depth].p_max().min(p_t - used);
    if hi < lo {
        return;
    }
    let mut values: Vec<f64> = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    loop {
        let v = k as f64 * step;
        if v > hi {
            break;
        }
        values.push(v);
        k += 1;
    }
    values.insert(0, lo);
    values.push(hi);
    for v in values {
        prefix.push(v);
        grid_scan(curves, p_t, step, prefix, used + v, best);
        prefix.pop();
    }
}

fn grid_best(curves: &[EfficiencyCurve], p_t: f64, opts: &SolverOptions) -> Option<Vec<f64>> {
    let step = p_t / opts.grid_divisions as f64;
    let n = curves.len();
    let cap_after: f64 = curves[1..].iter().map(|c| c.p_max()).sum();
    let lo = (p_t - cap_after).max(0.0);
    let hi = curves[0].p_max().min(p_t);
    if hi < lo {
        return None;
    }
    let rows = ((hi - lo) / step).ceil() as usize + 1;
    let per_row = map_indexed(opts.execution, rows + 1, |r| {
        let v = if r == rows { hi } else { (lo + r as f64 * step).min(hi) };
        let mut best = None;
        let mut prefix = vec![v];
        if n == 1 {
            return None;
        }
        grid_scan(curves, p_t, step, &mut prefix, v, &mut best);
        best
    });
    per_row
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(f64, Vec<f64>)>, cur| match acc {
            Some(a) if a.0 >= cur.0 => Some(a),
            _ => Some(cur),
        })
        .map(|(_, loads)| loads)
}

/// Pairwise coordinate ascent: move `delta` of load between two units while
/// output improves, halving `delta` down to `min_step`.
fn polish(curves: &[EfficiencyCurve], loads: &mut [f64], start: f64, min_step: f64) {
    let n = curves.len();
    if n < 2 {
        return;
    }
    let mut delta = start;
    let mut w = total_output(curves, loads);
    while delta >= min_step {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = delta.min(loads[j]).min(curves[i].p_max() - loads[i]);
                if d <= 0.0 {
                    continue;
                }
                let (pi, pj) = (loads[i], loads[j]);
                let gain = curves[i].output_unchecked(pi + d) - curves[i].output_unchecked(pi)
                    + curves[j].output_unchecked(pj - d)
                    - curves[j].output_unchecked(pj);
                if gain > 0.0 {
                    loads[i] = pi + d;
                    loads[j] = pj - d;
                    w += gain;
                    improved = true;
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    let _ = w;
}

/// Output-maximizing split of `p_t` over the given units.
///
/// Compares the stationary candidates, the similar-family split when the
/// curves form a family, single-unit and pinned-bound allocations, and a
/// coarse grid search with local polish for small unit counts.
pub fn allocate_best(curves: &[EfficiencyCurve], p_t: f64, opts: &SolverOptions) -> Result<Allocation> {
    if curves.is_empty() {
        return Err(Error::EmptyFleet);
    }
    check_total(curves, p_t)?;
    let n = curves.len();
    if p_t == 0.0 {
        return Ok(Allocation::zero(n));
    }
    let capacity: f64 = curves.iter().map(|c| c.p_max()).sum();
    let p_t = p_t.min(capacity);

    let mut pool: Vec<Vec<f64>> = Vec::new();
    if let Some(family) = crate::curves::detect_family(curves) {
        let caps: Vec<f64> = curves.iter().map(|c| c.p_max()).collect();
        if let Ok(a) = allocate_similar(&family, &caps, p_t) {
            pool.push(a.loads);
        }
    }
    pool.extend(candidates_unchecked(curves, p_t, opts).into_iter().map(|c| c.allocation.loads));
    for (k, c) in curves.iter().enumerate() {
        if p_t <= c.p_max() {
            let mut loads = vec![0.0; n];
            loads[k] = p_t;
            pool.push(loads);
        }
    }
    if n <= opts.max_pinned_units {
        pool.extend(pinned_candidates(curves, p_t, opts));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for loads in pool {
        let w = total_output(curves, &loads);
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            best = Some((w, loads));
        }
    }

    if n >= 2 {
        let mut alt = if n <= opts.max_grid_units {
            grid_best(curves, p_t, opts)
        } else {
            best.as_ref().map(|(_, l)| l.clone())
        };
        if let Some(loads) = alt.as_mut() {
            polish(curves, loads, p_t / opts.grid_divisions as f64, opts.polish_min_step);
            let w = total_output(curves, loads);
            let replace = best.as_ref().is_none_or(|(bw, _)| opts.better(w, *bw));
            if replace {
                best = Some((w, loads.clone()));
            }
        }
    }

    let (_, mut loads) = best.expect("single-unit or grid candidates always exist");
    for (p, c) in loads.iter_mut().zip(curves) {
        *p = p.clamp(0.0, c.p_max());
    }
    let residual = p_t - loads.iter().sum::<f64>();
    if residual != 0.0 {
        absorb_residual(curves, &mut loads, residual, opts.root_tol);
    }
    Ok(Allocation::with_total(curves, loads, p_t))
}

/// Result of the minimum-input problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MinInput {
    pub p_t: f64,
    pub subset: Subset,
    pub allocation: Allocation,
}

/// Total input at which the envelope of best outputs peaks. The envelope is
/// non-decreasing below it and non-increasing above it.
pub fn envelope_peak_input(fleet: &Fleet) -> f64 {
    fleet.units().iter().map(|u| u.curve.peak_output_point()).sum()
}

/// Smallest total input whose best commitment delivers at least `w_target`.
pub fn min_input_for_output(fleet: &Fleet, w_target: f64, opts: &SolverOptions) -> Result<MinInput> {
    if !w_target.is_finite() {
        return Err(Error::NotFinite);
    }
    if w_target < 0.0 {
        return Err(Error::NegativeInput(w_target));
    }
    if w_target == 0.0 {
        let c = best_commitment(fleet, 0.0, opts)?;
        return Ok(MinInput { p_t: 0.0, subset: c.subset, allocation: c.allocation });
    }
    let p_peak = envelope_peak_input(fleet);
    let at_peak = best_commitment(fleet, p_peak, opts)?;
    let maximum = at_peak.allocation.w_t;
    if w_target > maximum * (1.0 + opts.w_rel_tol) {
        return Err(Error::OutputUnreachable { requested: w_target, maximum });
    }
    if w_target >= maximum {
        return Ok(MinInput { p_t: p_peak, subset: at_peak.subset, allocation: at_peak.allocation });
    }
    let (mut lo, mut hi) = (0.0, p_peak);
    let mut hi_result = at_peak;
    while hi - lo > 1e-9 * hi * 0.5 {
        let mid = 0.5 * (lo + hi);
        let c = best_commitment(fleet, mid, opts)?;
        if c.allocation.w_t >= w_target {
            hi = mid;
            hi_result = c;
        } else {
            lo = mid;
        }
    }
    Ok(MinInput { p_t: hi, subset: hi_result.subset, allocation: hi_result.allocation })
}
