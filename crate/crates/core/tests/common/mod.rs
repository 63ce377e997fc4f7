#![allow(dead_code)]

use multiunit_core::{EfficiencyCurve, Fleet, Unit};
use proptest::prelude::*;

/// Peak efficiency in [0.5, 0.95] at a load in [20, 200]; the cap is a random
/// fraction of `a/b` that keeps the peak inside the domain.
pub fn curve() -> impl Strategy<Value = EfficiencyCurve> {
    (0.5f64..0.95, 20.0f64..200.0, 0.6f64..=1.0).prop_map(|(eta_e, p_e, frac)| {
        let (a, b) = (2.0 * eta_e / p_e, eta_e / (p_e * p_e));
        EfficiencyCurve::new(a, b, frac * a / b).unwrap()
    })
}

pub fn curves(min: usize, max: usize) -> impl Strategy<Value = Vec<EfficiencyCurve>> {
    prop::collection::vec(curve(), min..=max)
}

pub fn fleet_of(curves: &[EfficiencyCurve]) -> Fleet {
    Fleet::new(curves.iter().enumerate().map(|(i, c)| Unit::new(format!("u{i}"), *c)).collect()).unwrap()
}

pub fn capacity(curves: &[EfficiencyCurve]) -> f64 {
    curves.iter().map(|c| c.p_max()).sum()
}

/// Reference curve of the case studies: peak 0.88 at 80.
pub fn unit1() -> EfficiencyCurve {
    EfficiencyCurve::with_default_cap(0.022, 0.0001375).unwrap()
}
