//! Fleet description files.
//!
//! A fleet file is TOML with a `units` array of tables, each carrying `id`,
//! `a`, `b` and an optional `p_max` (defaults to `a/b`). Two optional keys
//! hold published reference values that reports compare against:
//! `reference_breakpoints` (list of totals) and `[[reference_split]]` tables
//! with `pt` and `loads`.

use std::path::Path;

use multiunit_core::{validate, EfficiencyCurve, Fleet, Unit, ValidationReport};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitEntry {
    pub id: String,
    pub a: f64,
    pub b: f64,
    pub p_max: Option<f64>,
}

impl UnitEntry {
    pub fn cap(&self) -> f64 {
        self.p_max.unwrap_or(self.a / self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSplit {
    pub pt: f64,
    pub loads: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetFile {
    pub units: Vec<UnitEntry>,
    #[serde(default)]
    pub reference_breakpoints: Vec<f64>,
    #[serde(default, rename = "reference_split")]
    pub reference_splits: Vec<ReferenceSplit>,
}

impl FleetFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Per-unit validation, in file order.
    pub fn validation(&self) -> Vec<(&str, ValidationReport)> {
        self.units.iter().map(|u| (u.id.as_str(), validate(u.a, u.b, u.cap()))).collect()
    }

    /// Builds the fleet. Invalid curves are verification failures; structural
    /// problems (ids, size) are usage errors.
    pub fn to_fleet(&self) -> Result<Fleet, CliError> {
        let mut units = Vec::with_capacity(self.units.len());
        for u in &self.units {
            let curve = EfficiencyCurve::new(u.a, u.b, u.cap()).map_err(|e| {
                CliError::Infeasible(format!("unit {}: {e}", u.id))
            })?;
            units.push(Unit::new(u.id.clone(), curve));
        }
        Fleet::new(units).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_units_with_default_cap() {
        let f = FleetFile::parse(
            "# two units\n[[units]]\nid = \"1\"\na = 0.022\nb = 0.0001375\n\n[[units]]\nid = \"2\"\na = 0.03\nb = 0.0003\np_max = 50.0\n",
        )
        .unwrap();
        assert_eq!(f.units.len(), 2);
        assert!((f.units[0].cap() - 160.0).abs() < 1e-9);
        assert_eq!(f.units[1].cap(), 50.0);
        assert!(f.reference_breakpoints.is_empty());
        assert_eq!(f.to_fleet().unwrap().len(), 2);
    }

    #[test]
    fn unknown_keys_report_position() {
        let err = FleetFile::parse("[[units]]\nid = \"1\"\na = 0.022\nb = 0.0001\ncolour = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 5"), "{msg}");
        assert!(msg.contains("colour"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invalid_curve_is_exit_one_and_names_unit() {
        let f = FleetFile::parse("[[units]]\nid = \"hot\"\na = 0.03\nb = 0.0001\np_max = 100.0\n").unwrap();
        let err = f.to_fleet().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("hot"));
        assert!(!f.validation()[0].1.is_valid());
    }

    #[test]
    fn duplicate_ids_are_usage_errors() {
        let f = FleetFile::parse(
            "[[units]]\nid = \"x\"\na = 0.022\nb = 0.0001375\n[[units]]\nid = \"x\"\na = 0.022\nb = 0.0001375\n",
        )
        .unwrap();
        assert_eq!(f.to_fleet().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn reference_values() {
        let f = FleetFile::parse(
            "reference_breakpoints = [62.61, 103.36]\n[[reference_split]]\npt = 103.36\nloads = [66.45, 36.91]\n[[units]]\nid = \"1\"\na = 0.022\nb = 0.0001375\n",
        )
        .unwrap();
        assert_eq!(f.reference_breakpoints, vec![62.61, 103.36]);
        assert_eq!(f.reference_splits[0].loads, vec![66.45, 36.91]);
    }
}
