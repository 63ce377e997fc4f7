mod common;

use multiunit_core::{
    allocate_best, best_commitment, envelope_peak_input, feasible_subsets, oracle_allocate, oracle_commitment, sweep,
    switching_schedule, verify_switching_points, EfficiencyCurve, Error, Fleet, SolverOptions, Subset, SwitchKind,
};
use proptest::prelude::*;

fn fleet_and_total(max_units: usize) -> impl Strategy<Value = (Fleet, f64)> {
    (common::curves(1, max_units), 0.01f64..=1.0).prop_map(|(c, frac)| {
        let p_t = frac * common::capacity(&c);
        (common::fleet_of(&c), p_t)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn envelope_rises_up_to_its_peak(curves in common::curves(1, 4)) {
        let fleet = common::fleet_of(&curves);
        let opts = SolverOptions::default();
        let peak = envelope_peak_input(&fleet);
        let mut last: f64 = 0.0;
        for k in 1..=60 {
            let p = peak * k as f64 / 60.0;
            let w = best_commitment(&fleet, p, &opts).unwrap().allocation.w_t;
            prop_assert!(w >= last - 1e-9 * last.max(1.0), "output fell from {last} to {w} at {p}");
            last = w;
        }
        // beyond the peak the envelope does not rise again
        let cap = fleet.total_capacity();
        for k in 1..=10 {
            let p = peak + (cap - peak) * k as f64 / 10.0;
            let w = best_commitment(&fleet, p, &opts).unwrap().allocation.w_t;
            prop_assert!(w <= last + 1e-9 * last.max(1.0));
            last = w;
        }
    }

    #[test]
    fn best_commitment_dominates_every_subset((fleet, p_t) in fleet_and_total(3)) {
        let opts = SolverOptions::default();
        let best = best_commitment(&fleet, p_t, &opts).unwrap();
        prop_assert!(best.subset.capacity(&fleet) >= p_t * (1.0 - 1e-12));
        for s in feasible_subsets(&fleet, p_t) {
            let w = allocate_best(&s.curves(&fleet), p_t, &opts).unwrap().w_t;
            prop_assert!(best.allocation.w_t >= w - 1e-9 * w.max(1.0), "subset {} beats the choice", s.label(&fleet));
        }
        // ties go to fewer units, so every chosen unit carries load
        prop_assert!(best.allocation.loads.iter().all(|&p| p > 0.0));
        let loads = best.fleet_loads(fleet.len());
        prop_assert_eq!(loads.len(), fleet.len());
    }

    #[test]
    fn breakpoints_separate_equal_outputs(curves in common::curves(2, 3)) {
        let fleet = common::fleet_of(&curves);
        let opts = SolverOptions::default();
        let cap = fleet.total_capacity();
        let sched = switching_schedule(&fleet, 0.01 * cap, cap, cap / 150.0, &opts).unwrap();
        prop_assert_eq!(sched.regimes.len(), sched.breakpoints.len() + 1);
        for (k, &p) in sched.breakpoints.iter().enumerate() {
            let (a, b) = (sched.regimes[k].active_set, sched.regimes[k + 1].active_set);
            prop_assert!(a != b);
            prop_assert_eq!(sched.regimes[k].p_hi, p);
            prop_assert_eq!(sched.regimes[k + 1].p_lo, p);
            let w = |s: Subset| allocate_best(&s.curves(&fleet), p.min(s.capacity(&fleet)), &opts).unwrap().w_t;
            let (wa, wb) = (w(a), w(b));
            if a.capacity(&fleet) >= p && b.capacity(&fleet) >= p {
                prop_assert!((wa - wb).abs() <= 1e-6 * wa.max(1.0), "at {p}: {wa} vs {wb}");
            }
        }
        for check in verify_switching_points(&sched, &fleet, &opts) {
            prop_assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn sweep_is_ordered_and_execution_independent(curves in common::curves(1, 3)) {
        let fleet = common::fleet_of(&curves);
        let cap = fleet.total_capacity();
        let par = sweep(&fleet, 0.0, cap, cap / 40.0, &SolverOptions::default()).unwrap();
        let seq = sweep(&fleet, 0.0, cap, cap / 40.0, &SolverOptions::sequential()).unwrap();
        prop_assert_eq!(&par, &seq);
        prop_assert!(par.windows(2).all(|w| w[0].p_t < w[1].p_t));
        prop_assert!(par[0].subset.is_empty() && par[0].w_t == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn matches_oracle_choice_when_clear((fleet, p_t) in fleet_and_total(3)) {
        let opts = SolverOptions::default();
        let step = p_t / 300.0;
        let mut outputs: Vec<(Subset, f64)> = feasible_subsets(&fleet, p_t)
            .into_iter()
            .map(|s| (s, oracle_allocate(&s.curves(&fleet), p_t, step).unwrap().allocation.w_t))
            .collect();
        outputs.sort_by(|x, y| y.1.total_cmp(&x.1));
        let (o_subset, o_result) = oracle_commitment(&fleet, p_t, step).unwrap();
        let solver = best_commitment(&fleet, p_t, &opts).unwrap();
        prop_assert!((solver.allocation.w_t - o_result.allocation.w_t).abs() <= 1e-4 * o_result.allocation.w_t);
        let clear = outputs.len() < 2 || outputs[0].1 - outputs[1].1 > 1e-3 * outputs[0].1;
        if clear {
            prop_assert_eq!(solver.subset, o_subset);
        }
    }
}

#[test]
fn switch_forced_by_capacity() {
    // a small, very efficient unit carries everything until it is full
    let small = EfficiencyCurve::new(0.03, 0.00025, 40.0).unwrap();
    let fleet = common::fleet_of(&[small, common::unit1()]);
    let opts = SolverOptions::default();
    let sched = switching_schedule(&fleet, 1.0, 150.0, 0.5, &opts).unwrap();
    assert_eq!(sched.regimes[0].active_set, Subset::from_indices([0]));
    let at = sched.breakpoints[0];
    assert!((at - 40.0).abs() < 1e-6, "{at}");
    let check = &verify_switching_points(&sched, &fleet, &opts)[0];
    assert!(check.passed());
    assert_ne!(check.kind, SwitchKind::Failed);
}

#[test]
fn range_errors() {
    let fleet = common::fleet_of(&[common::unit1()]);
    let opts = SolverOptions::default();
    assert!(matches!(switching_schedule(&fleet, 10.0, 5.0, 1.0, &opts), Err(Error::InvalidRange { .. })));
    assert!(matches!(sweep(&fleet, 0.0, 200.0, 1.0, &opts), Err(Error::InvalidRange { .. })));
    assert!(matches!(sweep(&fleet, 0.0, 10.0, 20.0, &opts), Err(Error::InvalidStep { .. })));
    assert!(matches!(best_commitment(&fleet, 161.0, &opts), Err(Error::Infeasible { .. })));
}
