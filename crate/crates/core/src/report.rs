//! Verification records: one inequality instantiated with numbers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Relative slack granted to a `VERIFIED` verdict.
pub const VERIFY_RELTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    HeatKernel,
    Kato,
    BKato,
    KatoRelationLower,
    KatoRelationUpper,
    Positivity,
    FormBound,
    Vanishing,
    VanishingAutoDelta,
    VanishingConclusion,
    VanishingContrapositive,
    L1L1,
    L1L1Full,
    L1L1Domination,
    Ultracontractivity,
    UltraInterpolation,
    Domination,
    TraceComparison,
    BettiBound,
    BettiBoundLp,
}

impl BoundName {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::HeatKernel => "heat_kernel",
            BoundName::Kato => "kato",
            BoundName::BKato => "b_kato",
            BoundName::KatoRelationLower => "kato_relation_lower",
            BoundName::KatoRelationUpper => "kato_relation_upper",
            BoundName::Positivity => "positivity",
            BoundName::FormBound => "form_bound",
            BoundName::Vanishing => "vanishing",
            BoundName::VanishingAutoDelta => "vanishing_auto_delta",
            BoundName::VanishingConclusion => "vanishing_conclusion",
            BoundName::VanishingContrapositive => "vanishing_contrapositive",
            BoundName::L1L1 => "l1_l1",
            BoundName::L1L1Full => "l1_l1_full",
            BoundName::L1L1Domination => "l1_l1_domination",
            BoundName::Ultracontractivity => "ultracontractivity",
            BoundName::UltraInterpolation => "ultra_interpolation",
            BoundName::Domination => "domination",
            BoundName::TraceComparison => "trace_comparison",
            BoundName::BettiBound => "betti_bound",
            BoundName::BettiBoundLp => "betti_bound_lp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Violated,
    Skipped(String),
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated)
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, Verdict::Skipped(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Verified => "VERIFIED",
            Verdict::Violated => "VIOLATED",
            Verdict::Skipped(_) => "SKIPPED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs ≤ rhs·(1 + rel) + abs`
    LessEq,
    /// `lhs < rhs`
    Less,
}

/// Whether the left-hand side is the exact discrete quantity or only a
/// lower bound for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: BoundName,
    pub hypothesis_ok: bool,
    pub numeric_lhs: f64,
    pub paper_rhs: f64,
    pub margin: f64,
    pub relation: Relation,
    pub abs_slack: f64,
    pub evidence: Evidence,
    pub verdict: Verdict,
    /// Parameters the instance was evaluated at (`alpha`, `t`, `kprime`, ...).
    pub provenance: BTreeMap<String, f64>,
    /// Auxiliary numbers worth keeping next to the comparison.
    pub extras: BTreeMap<String, f64>,
    pub label: String,
}

impl BoundReport {
    /// Compares `lhs ≤ rhs·(1 + VERIFY_RELTOL)` (or `lhs < rhs` for
    /// [`Relation::Less`]).
    pub fn compare(name: BoundName, lhs: f64, rhs: f64, relation: Relation) -> Self {
        BoundReport::compare_with_slack(name, lhs, rhs, relation, 0.0)
    }

    pub fn compare_with_slack(name: BoundName, lhs: f64, rhs: f64, relation: Relation, abs_slack: f64) -> Self {
        BoundReport::compare_tol(name, lhs, rhs, relation, VERIFY_RELTOL, abs_slack)
    }

    /// `lhs ≤ rhs + rel·|rhs| + abs`.
    pub fn compare_tol(name: BoundName, lhs: f64, rhs: f64, relation: Relation, rel: f64, abs_slack: f64) -> Self {
        let holds = match relation {
            Relation::LessEq => lhs <= rhs + rel * rhs.abs() + abs_slack,
            Relation::Less => lhs < rhs,
        };
        BoundReport {
            name,
            hypothesis_ok: true,
            numeric_lhs: lhs,
            paper_rhs: rhs,
            margin: rhs - lhs,
            relation,
            abs_slack,
            evidence: Evidence::Exact,
            verdict: if holds { Verdict::Verified } else { Verdict::Violated },
            provenance: BTreeMap::new(),
            extras: BTreeMap::new(),
            label: String::new(),
        }
    }

    /// A failed hypothesis: both sides kept for inspection, never a failure.
    pub fn skipped(name: BoundName, reason: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        BoundReport {
            name,
            hypothesis_ok: false,
            numeric_lhs: lhs,
            paper_rhs: rhs,
            margin: rhs - lhs,
            relation: Relation::LessEq,
            abs_slack: 0.0,
            evidence: Evidence::Exact,
            verdict: Verdict::Skipped(reason.into()),
            provenance: BTreeMap::new(),
            extras: BTreeMap::new(),
            label: String::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.provenance.insert(key.to_string(), value);
        self
    }

    pub fn with_all(mut self, provenance: &BTreeMap<String, f64>) -> Self {
        for (k, v) in provenance {
            self.provenance.insert(k.clone(), *v);
        }
        self
    }

    pub fn extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn lower_bound_evidence(mut self) -> Self {
        self.evidence = Evidence::LowerBound;
        self
    }

    /// Canonical ordering key: name, label, then provenance.
    pub fn sort_key(&self) -> String {
        let mut key = format!("{}|{}", self.name.as_str(), self.label);
        for (k, v) in &self.provenance {
            key.push_str(&format!("|{k}={v:+.16e}"));
        }
        key
    }
}

/// Sorts reports by [`BoundReport::sort_key`].
pub fn sort_reports(reports: &mut [BoundReport]) {
    reports.sort_by_cached_key(|r| r.sort_key());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityMode {
    /// `⫶ρ₋⫶_{δ/2}` against the λ-free threshold.
    Weak,
    /// The curvature condition at a level `λ`.
    Gallot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub which: AdmissibilityMode,
    pub delta: f64,
    pub diameter: f64,
    pub d: usize,
    pub lambda: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub admitted: bool,
}
