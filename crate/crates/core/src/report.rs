//! Structured residual reports: named check families with worst residuals
//! and pass flags, shared by every verification entry point.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chart::ZeroCheck;

/// How the number attached to a family is to be read: a residual that
/// must stay small, or a margin/informational value (nondegeneracy
/// minima, ranks) that is not a residual at all.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    #[default]
    Residual,
    Margin,
}

/// One family of checks, e.g. "antisymmetry" or "helmholtz/gamma".
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckFamily {
    pub name: String,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<BTreeMap<String, f64>>,
    pub pass: bool,
    #[serde(default)]
    pub kind: FamilyKind,
}

impl CheckFamily {
    pub fn from_zero_check(name: &str, check: ZeroCheck) -> CheckFamily {
        CheckFamily {
            name: name.to_string(),
            max_residual: check.max_abs,
            worst_point: check.worst_point,
            pass: check.pass,
            kind: FamilyKind::Residual,
        }
    }

    pub fn value(name: &str, value: f64, pass: bool) -> CheckFamily {
        CheckFamily {
            name: name.to_string(),
            max_residual: value,
            worst_point: None,
            pass,
            kind: FamilyKind::Margin,
        }
    }

    pub fn margin(name: &str, value: f64, worst: Option<BTreeMap<String, f64>>, pass: bool) -> CheckFamily {
        CheckFamily {
            name: name.to_string(),
            max_residual: value,
            worst_point: worst,
            pass,
            kind: FamilyKind::Margin,
        }
    }
}

/// A list of check families; passes when every family passes.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub families: Vec<CheckFamily>,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn push(&mut self, family: CheckFamily) {
        self.families.push(family);
    }

    pub fn push_zero_check(&mut self, name: &str, check: ZeroCheck) {
        self.push(CheckFamily::from_zero_check(name, check));
    }

    /// Merge a ZeroCheck into an existing family, keeping the worst
    /// residual; creates the family when absent.
    pub fn absorb(&mut self, name: &str, check: ZeroCheck) {
        if let Some(f) = self.families.iter_mut().find(|f| f.name == name) {
            f.pass &= check.pass;
            if check.max_abs > f.max_residual {
                f.max_residual = check.max_abs;
                f.worst_point = check.worst_point;
            }
        } else {
            self.push_zero_check(name, check);
        }
    }

    pub fn extend_prefixed(&mut self, prefix: &str, other: Report) {
        for mut f in other.families {
            f.name = format!("{prefix}/{}", f.name);
            self.families.push(f);
        }
    }

    pub fn pass(&self) -> bool {
        self.families.iter().all(|f| f.pass)
    }

    pub fn family(&self, name: &str) -> Option<&CheckFamily> {
        self.families.iter().find(|f| f.name == name)
    }

    /// Largest residual across residual families; margin families are
    /// not residuals and are skipped.
    pub fn max_residual(&self) -> f64 {
        self.families
            .iter()
            .filter(|f| f.kind == FamilyKind::Residual)
            .map(|f| f.max_residual)
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .families
            .iter()
            .map(|fam| fam.name.len())
            .max()
            .unwrap_or(8)
            .max(8);
        writeln!(f, "  {:<width$}  {:>13}  pass", "check", "max residual")?;
        for fam in &self.families {
            writeln!(
                f,
                "  {:<width$}  {:>13.6e}  {}",
                fam.name,
                fam.max_residual,
                if fam.pass { "yes" } else { "NO" }
            )?;
        }
        Ok(())
    }
}
