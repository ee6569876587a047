use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed set of check tags a report may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckTag {
    MoiDerivative,
    Cyclicity,
    MoiNormBound,
    RemainderTrace,
    RemainderBound,
    FirstOrderTraceFormula,
    FirstOrderIntegrality,
    SsfL1Bound,
    SsfTraceFormula,
    SsfHeldOut,
    SsfGauge,
    SsfUniqueness,
    GrowthEnvelope,
    DividedDifferenceExpansion,
    ResolventExpansion,
    FirstOrderResolventIdentity,
    FirstOrderResolventBound,
    BumpPlateau,
    BumpRange,
    BumpSupport,
    BumpSup,
    BumpTraceNorm,
    EmpiricalConstant,
    WindowConstant,
}

impl CheckTag {
    pub const ALL: [CheckTag; 24] = [
        CheckTag::MoiDerivative,
        CheckTag::Cyclicity,
        CheckTag::MoiNormBound,
        CheckTag::RemainderTrace,
        CheckTag::RemainderBound,
        CheckTag::FirstOrderTraceFormula,
        CheckTag::FirstOrderIntegrality,
        CheckTag::SsfL1Bound,
        CheckTag::SsfTraceFormula,
        CheckTag::SsfHeldOut,
        CheckTag::SsfGauge,
        CheckTag::SsfUniqueness,
        CheckTag::GrowthEnvelope,
        CheckTag::DividedDifferenceExpansion,
        CheckTag::ResolventExpansion,
        CheckTag::FirstOrderResolventIdentity,
        CheckTag::FirstOrderResolventBound,
        CheckTag::BumpPlateau,
        CheckTag::BumpRange,
        CheckTag::BumpSupport,
        CheckTag::BumpSup,
        CheckTag::BumpTraceNorm,
        CheckTag::EmpiricalConstant,
        CheckTag::WindowConstant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckTag::MoiDerivative => "moi-derivative",
            CheckTag::Cyclicity => "cyclicity",
            CheckTag::MoiNormBound => "moi-norm-bound",
            CheckTag::RemainderTrace => "remainder-trace",
            CheckTag::RemainderBound => "remainder-bound",
            CheckTag::FirstOrderTraceFormula => "first-order-trace-formula",
            CheckTag::FirstOrderIntegrality => "first-order-integrality",
            CheckTag::SsfL1Bound => "ssf-l1-bound",
            CheckTag::SsfTraceFormula => "ssf-trace-formula",
            CheckTag::SsfHeldOut => "ssf-held-out",
            CheckTag::SsfGauge => "ssf-gauge",
            CheckTag::SsfUniqueness => "ssf-uniqueness",
            CheckTag::GrowthEnvelope => "growth-envelope",
            CheckTag::DividedDifferenceExpansion => "divided-difference-expansion",
            CheckTag::ResolventExpansion => "resolvent-expansion",
            CheckTag::FirstOrderResolventIdentity => "first-order-resolvent-identity",
            CheckTag::FirstOrderResolventBound => "first-order-resolvent-bound",
            CheckTag::BumpPlateau => "bump-plateau",
            CheckTag::BumpRange => "bump-range",
            CheckTag::BumpSupport => "bump-support",
            CheckTag::BumpSup => "bump-sup",
            CheckTag::BumpTraceNorm => "bump-trace-norm",
            CheckTag::EmpiricalConstant => "empirical-constant",
            CheckTag::WindowConstant => "window-constant",
        }
    }
}

impl fmt::Display for CheckTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        CheckTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown check tag `{s}`"))
    }
}
