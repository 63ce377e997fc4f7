//! Device efficiency curves.
//!
//! Every curve has the quadratic form `eta(P) = a*P - b*P^2` on `[0, p_max]`,
//! which gives `eta(0) = 0`, a single interior peak at `a/(2b)` and
//! `eta''(P) = -2b < 0`. The output of a device is `W(P) = P*eta(P)`, a cubic,
//! and its derivative `g(P) = 2aP - 3bP^2` is the marginal output that load
//! distribution equalizes across running units.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest fleet the exhaustive subset search accepts.
pub const MAX_FLEET_SIZE: usize = 16;

/// Relative slack granted to domain checks so that loads computed as
/// `p_max` by floating arithmetic are not rejected.
const DOMAIN_SLACK: f64 = 1e-12;

/// Relative tolerance for the similar-efficiency test on coefficients.
pub const SIMILARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyCurve {
    a: f64,
    b: f64,
    p_max: f64,
}

/// Which root of `eta(P) = level` to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Left of the efficiency peak.
    Rising,
    /// Right of the efficiency peak.
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveViolation {
    NotFinite,
    NonPositiveLinear { a: f64 },
    NonPositiveCurvature { b: f64 },
    NonPositiveCapacity { p_max: f64 },
    /// `p_max` lies past the second zero of the curve, where efficiency turns negative.
    CapacityBeyondZero { p_max: f64, zero: f64 },
    /// Peak efficiency `a^2/(4b)` above 1.
    PeakAboveOne { peak: f64 },
}

impl fmt::Display for CurveViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CurveViolation::NotFinite => write!(f, "coefficients must be finite"),
            CurveViolation::NonPositiveLinear { a } => write!(f, "a = {a} must be > 0"),
            CurveViolation::NonPositiveCurvature { b } => write!(f, "b = {b} must be > 0"),
            CurveViolation::NonPositiveCapacity { p_max } => {
                write!(f, "p_max = {p_max} must be > 0")
            }
            CurveViolation::CapacityBeyondZero { p_max, zero } => {
                write!(f, "p_max = {p_max} exceeds a/b = {zero} (efficiency would be negative)")
            }
            CurveViolation::PeakAboveOne { peak } => {
                write!(f, "peak efficiency a^2/(4b) = {peak} exceeds 1")
            }
        }
    }
}

/// All invariant violations found for a set of curve coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<CurveViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the coefficients of `eta(P) = a*P - b*P^2` capped at `p_max`.
pub fn validate(a: f64, b: f64, p_max: f64) -> ValidationReport {
    let mut violations = Vec::new();
    if !(a.is_finite() && b.is_finite() && p_max.is_finite()) {
        violations.push(CurveViolation::NotFinite);
        return ValidationReport { violations };
    }
    if a <= 0.0 {
        violations.push(CurveViolation::NonPositiveLinear { a });
    }
    if b <= 0.0 {
        violations.push(CurveViolation::NonPositiveCurvature { b });
    }
    if p_max <= 0.0 {
        violations.push(CurveViolation::NonPositiveCapacity { p_max });
    }
    if a > 0.0 && b > 0.0 {
        let zero = a / b;
        if p_max > zero * (1.0 + DOMAIN_SLACK) {
            violations.push(CurveViolation::CapacityBeyondZero { p_max, zero });
        }
        let peak = a * a / (4.0 * b);
        if peak > 1.0 + DOMAIN_SLACK {
            violations.push(CurveViolation::PeakAboveOne { peak });
        }
    }
    ValidationReport { violations }
}

impl EfficiencyCurve {
    pub fn new(a: f64, b: f64, p_max: f64) -> Result<Self> {
        let report = validate(a, b, p_max);
        if !report.is_valid() {
            return Err(Error::InvalidCurve(report));
        }
        // The slack in `validate` may admit p_max a hair above a/b.
        let p_max = p_max.min(a / b);
        Ok(Self { a, b, p_max })
    }

    /// Curve capped at its second zero `a/b`.
    pub fn with_default_cap(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, a / b)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    fn check_domain(&self, p: f64) -> Result<f64> {
        if !p.is_finite() {
            return Err(Error::NotFinite);
        }
        if p < 0.0 {
            return Err(Error::BelowZero { value: p });
        }
        if p > self.p_max * (1.0 + DOMAIN_SLACK) {
            return Err(Error::AboveCapacity { value: p, p_max: self.p_max });
        }
        Ok(p.min(self.p_max))
    }

    pub fn efficiency(&self, p: f64) -> Result<f64> {
        self.check_domain(p).map(|p| self.efficiency_unchecked(p))
    }

    pub fn output(&self, p: f64) -> Result<f64> {
        self.check_domain(p).map(|p| self.output_unchecked(p))
    }

    /// Marginal output `d(P*eta)/dP = eta(P) + P*eta'(P)`.
    pub fn marginal_output(&self, p: f64) -> Result<f64> {
        self.check_domain(p).map(|p| self.marginal_unchecked(p))
    }

    #[inline]
    pub fn efficiency_unchecked(&self, p: f64) -> f64 {
        (self.a * p - self.b * p * p).max(0.0)
    }

    #[inline]
    pub fn output_unchecked(&self, p: f64) -> f64 {
        p * self.efficiency_unchecked(p)
    }

    #[inline]
    pub fn marginal_unchecked(&self, p: f64) -> f64 {
        2.0 * self.a * p - 3.0 * self.b * p * p
    }

    /// Slope of the marginal output, `2a - 6bP`.
    #[inline]
    pub fn marginal_slope(&self, p: f64) -> f64 {
        2.0 * self.a - 6.0 * self.b * p
    }

    /// Peak efficiency point `(P_e, eta_e)`, clamped to the capacity.
    pub fn peak_point(&self) -> (f64, f64) {
        let p_e = (self.a / (2.0 * self.b)).clamp(0.0, self.p_max);
        (p_e, self.efficiency_unchecked(p_e))
    }

    /// Load where the marginal output peaks (`a/(3b)`); output is convex below it
    /// and concave above it.
    pub fn inflection(&self) -> f64 {
        self.a / (3.0 * self.b)
    }

    /// Largest marginal output over the unrestricted curve, `a^2/(3b)`.
    pub fn max_marginal(&self) -> f64 {
        self.a * self.a / (3.0 * self.b)
    }

    /// Load that maximizes the unit's output, `2a/(3b)` clamped to the capacity.
    pub fn peak_output_point(&self) -> f64 {
        (2.0 * self.a / (3.0 * self.b)).min(self.p_max)
    }

    /// Largest output the unit can deliver on its domain.
    pub fn w_max(&self) -> f64 {
        self.output_unchecked(self.peak_output_point())
    }

    /// Both roots of `g(P) = level`, smaller first, or `None` when the level
    /// exceeds the peak marginal output. Roots are not clipped to the domain.
    pub fn marginal_roots(&self, level: f64) -> Option<(f64, f64)> {
        let disc = self.a * self.a - 3.0 * self.b * level;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        let upper = (self.a + s) / (3.0 * self.b);
        // product of the roots is level / (3b)
        let lower = level / (self.a + s);
        Some((lower, upper))
    }

    /// Solves `eta(P) = level` on the requested side of the peak.
    pub fn inverse_efficiency(&self, level: f64, branch: Branch) -> Result<f64> {
        if !level.is_finite() {
            return Err(Error::NotFinite);
        }
        if level <= 0.0 {
            return Err(Error::LevelNotPositive(level));
        }
        let peak = self.a * self.a / (4.0 * self.b);
        if level > peak * (1.0 + DOMAIN_SLACK) {
            return Err(Error::LevelAbovePeak { level, peak });
        }
        let s = (self.a * self.a - 4.0 * self.b * level).max(0.0).sqrt();
        let root = match branch {
            Branch::Falling => (self.a + s) / (2.0 * self.b),
            Branch::Rising => 2.0 * level / (self.a + s),
        };
        if root > self.p_max * (1.0 + DOMAIN_SLACK) {
            return Err(Error::RootAboveCapacity { root, p_max: self.p_max });
        }
        Ok(root.min(self.p_max))
    }

    /// The curve stretched horizontally by `beta`: `eta'(P) = eta(P/beta)`.
    pub fn scaled(&self, beta: f64) -> Result<Self> {
        Self::new(self.a / beta, self.b / (beta * beta), self.p_max * beta)
    }
}

/// Returns `beta` with `eta_other(P) = eta_reference(P / beta)` if the two
/// curves are horizontal scalings of each other.
pub fn similarity_factor(reference: &EfficiencyCurve, other: &EfficiencyCurve) -> Option<f64> {
    let beta = reference.a / other.a;
    let beta_sq = reference.b / other.b;
    let rel = (beta * beta - beta_sq).abs() / beta_sq;
    (beta.is_finite() && beta > 0.0 && rel <= 2.0 * SIMILARITY_TOL).then_some(beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub id: String,
    pub curve: EfficiencyCurve,
}

impl Unit {
    pub fn new(id: impl Into<String>, curve: EfficiencyCurve) -> Self {
        Self { id: id.into(), curve }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    units: Vec<Unit>,
}

impl Fleet {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::EmptyFleet);
        }
        if units.len() > MAX_FLEET_SIZE {
            return Err(Error::FleetTooLarge(units.len()));
        }
        let mut seen = HashSet::new();
        for u in &units {
            if u.id.trim().is_empty() {
                return Err(Error::EmptyUnitId);
            }
            if !seen.insert(u.id.as_str()) {
                return Err(Error::DuplicateUnitId(u.id.clone()));
            }
        }
        Ok(Self { units })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn curves(&self) -> Vec<EfficiencyCurve> {
        self.units.iter().map(|u| u.curve).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.units.iter().position(|u| u.id == id)
    }

    pub fn total_capacity(&self) -> f64 {
        self.units.iter().map(|u| u.curve.p_max).sum()
    }
}

/// Units whose curves are all horizontal scalings of the first unit's curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarFamily {
    pub reference: EfficiencyCurve,
    /// Per-unit scale factors, `betas[0] == 1`.
    pub betas: Vec<f64>,
}

/// Detects a similar-efficiency family among `curves`, relative to the first.
pub fn detect_family(curves: &[EfficiencyCurve]) -> Option<SimilarFamily> {
    let reference = *curves.first()?;
    let betas = curves
        .iter()
        .map(|c| similarity_factor(&reference, c))
        .collect::<Option<Vec<_>>>()?;
    Some(SimilarFamily { reference, betas })
}

impl Fleet {
    pub fn detect_family(&self) -> Option<SimilarFamily> {
        detect_family(&self.curves())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit1() -> EfficiencyCurve {
        EfficiencyCurve::with_default_cap(0.022, 0.0001375).unwrap()
    }

    #[test]
    fn efficiency_values() {
        let c = unit1();
        assert_eq!(c.efficiency(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(c.efficiency(66.45).unwrap(), 0.8547, epsilon = 5e-4);
        assert_abs_diff_eq!(c.efficiency(80.0).unwrap(), 0.88, epsilon = 1e-12);
    }

    #[test]
    fn output_values() {
        let c = unit1();
        assert_eq!(c.output(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(c.output(80.0).unwrap(), 70.4, epsilon = 1e-10);
        assert_abs_diff_eq!(c.output(60.0).unwrap(), 49.5, epsilon = 1e-10);
    }

    #[test]
    fn marginal_values() {
        let c = unit1();
        assert_eq!(c.marginal_output(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(c.marginal_output(66.45).unwrap(), 1.1024, epsilon = 1e-3);
    }

    #[test]
    fn domain_errors_name_the_bound() {
        let c = unit1();
        assert_eq!(c.efficiency(-1.0), Err(Error::BelowZero { value: -1.0 }));
        match c.output(170.0) {
            Err(Error::AboveCapacity { value, p_max }) => {
                assert_eq!(value, 170.0);
                assert_abs_diff_eq!(p_max, 160.0, epsilon = 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(c.efficiency(170.0).unwrap_err().to_string().contains("p_max"));
        assert_eq!(c.marginal_output(f64::NAN), Err(Error::NotFinite));
    }

    #[test]
    fn peak_points() {
        let (p, e) = unit1().peak_point();
        assert_abs_diff_eq!(p, 80.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e, 0.88, epsilon = 1e-12);

        let c2 = EfficiencyCurve::with_default_cap(0.0146667, 0.0000611).unwrap();
        let (p, e) = c2.peak_point();
        assert_abs_diff_eq!(p, 120.0, epsilon = 0.1);
        assert_abs_diff_eq!(e, 0.88, epsilon = 1e-3);

        let capped = EfficiencyCurve::new(0.022, 0.0001375, 50.0).unwrap();
        let (p, e) = capped.peak_point();
        assert_eq!(p, 50.0);
        assert_abs_diff_eq!(e, capped.efficiency(50.0).unwrap(), epsilon = 0.0);
    }

    #[test]
    fn validation_reports() {
        assert!(validate(0.022, 0.0001375, 160.0).is_valid());

        let r = validate(0.03, 0.0001, 100.0);
        assert_eq!(r.violations.len(), 1);
        match r.violations[0] {
            CurveViolation::PeakAboveOne { peak } => assert_abs_diff_eq!(peak, 2.25, epsilon = 1e-12),
            ref v => panic!("unexpected {v:?}"),
        }

        let r = validate(0.022, 0.0001375, 200.0);
        assert_eq!(r.violations.len(), 1);
        match r.violations[0] {
            CurveViolation::CapacityBeyondZero { zero, .. } => {
                assert_abs_diff_eq!(zero, 160.0, epsilon = 1e-9)
            }
            ref v => panic!("unexpected {v:?}"),
        }

        let r = validate(-1.0, 0.0, -3.0);
        assert_eq!(r.violations.len(), 3);
        assert!(!validate(f64::NAN, 1.0, 1.0).is_valid());
        assert!(EfficiencyCurve::new(0.03, 0.0001, 100.0).is_err());
    }

    #[test]
    fn similarity() {
        let c = unit1();
        assert_eq!(similarity_factor(&c, &c), Some(1.0));
        let scaled = EfficiencyCurve::with_default_cap(0.022 / 1.5, 0.0001375 / 2.25).unwrap();
        assert_abs_diff_eq!(similarity_factor(&c, &scaled).unwrap(), 1.5, epsilon = 1e-12);
        let other = EfficiencyCurve::with_default_cap(0.0287, 0.000233333).unwrap();
        assert_eq!(similarity_factor(&c, &other), None);
    }

    #[test]
    fn inverse_efficiency_roots() {
        let c = unit1();
        assert_abs_diff_eq!(c.inverse_efficiency(0.88, Branch::Rising).unwrap(), 80.0, epsilon = 1e-6);
        assert_abs_diff_eq!(c.inverse_efficiency(0.88, Branch::Falling).unwrap(), 80.0, epsilon = 1e-6);
        assert_abs_diff_eq!(c.inverse_efficiency(0.805, Branch::Falling).unwrap(), 103.36, epsilon = 0.05);
        assert_abs_diff_eq!(c.inverse_efficiency(0.805, Branch::Rising).unwrap(), 56.64, epsilon = 0.05);

        assert!(matches!(
            c.inverse_efficiency(0.9, Branch::Rising),
            Err(Error::LevelAbovePeak { .. })
        ));
        assert!(matches!(c.inverse_efficiency(0.0, Branch::Rising), Err(Error::LevelNotPositive(_))));
        let capped = EfficiencyCurve::new(0.022, 0.0001375, 90.0).unwrap();
        assert!(matches!(
            capped.inverse_efficiency(0.805, Branch::Falling),
            Err(Error::RootAboveCapacity { .. })
        ));
    }

    #[test]
    fn marginal_roots_bracket_inflection() {
        let c = unit1();
        let (lo, hi) = c.marginal_roots(1.0).unwrap();
        assert!(lo < c.inflection() && hi > c.inflection());
        assert_abs_diff_eq!(c.marginal_unchecked(lo), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.marginal_unchecked(hi), 1.0, epsilon = 1e-12);
        assert!(c.marginal_roots(c.max_marginal() * 1.01).is_none());
    }

    #[test]
    fn family_detection() {
        let c1 = unit1();
        let c2 = c1.scaled(1.5).unwrap();
        let fam = detect_family(&[c1, c2]).unwrap();
        assert_abs_diff_eq!(fam.betas[0], 1.0);
        assert_abs_diff_eq!(fam.betas[1], 1.5, epsilon = 1e-12);

        let case2 = EfficiencyCurve::with_default_cap(0.0287, 0.000233333).unwrap();
        assert!(detect_family(&[c1, case2]).is_none());
        assert_eq!(detect_family(&[c1]).unwrap().betas, vec![1.0]);
    }

    #[test]
    fn fleet_invariants() {
        let c = unit1();
        assert_eq!(Fleet::new(vec![]), Err(Error::EmptyFleet));
        assert_eq!(
            Fleet::new(vec![Unit::new("x", c), Unit::new("x", c)]),
            Err(Error::DuplicateUnitId("x".into()))
        );
        assert_eq!(Fleet::new(vec![Unit::new(" ", c)]), Err(Error::EmptyUnitId));
        let many = (0..17).map(|i| Unit::new(i.to_string(), c)).collect();
        assert_eq!(Fleet::new(many), Err(Error::FleetTooLarge(17)));
        let f = Fleet::new(vec![Unit::new("1", c), Unit::new("2", c)]).unwrap();
        assert_eq!(f.index_of("2"), Some(1));
        assert_abs_diff_eq!(f.total_capacity(), 320.0, epsilon = 1e-9);
    }
}
