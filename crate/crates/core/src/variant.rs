use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::obs::{ObsLayout, WarehouseView};

/// Which reward signal an agent trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    Shared,
    Local,
}

/// The closed set of experiment configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    /// Enhanced warehouse, shared reward.
    Cmarl,
    EnWhLocRwd,
    LimWhShRwd,
    LimWhLocRwd,
    /// Cmarl whose stores see demand one lead time ahead.
    OracleCmarl,
    /// Cmarl with one parameter set per agent reused across products.
    ShPol,
    /// One centralized agent over the concatenated spaces.
    Sarl,
    /// Tuned base-stock policy.
    Bsp,
    Random,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Cmarl,
        Variant::EnWhLocRwd,
        Variant::LimWhShRwd,
        Variant::LimWhLocRwd,
        Variant::OracleCmarl,
        Variant::ShPol,
        Variant::Sarl,
        Variant::Bsp,
        Variant::Random,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::Cmarl => "CMARL",
            Variant::EnWhLocRwd => "EnWh-LocRwd",
            Variant::LimWhShRwd => "LimWh-ShRwd",
            Variant::LimWhLocRwd => "LimWh-LocRwd",
            Variant::OracleCmarl => "O-CMARL",
            Variant::ShPol => "ShPol",
            Variant::Sarl => "SARL",
            Variant::Bsp => "BSP",
            Variant::Random => "RANDOM",
        }
    }

    pub fn is_learned(self) -> bool {
        !matches!(self, Variant::Bsp | Variant::Random)
    }

    pub fn reward_mode(self) -> RewardMode {
        match self {
            Variant::EnWhLocRwd | Variant::LimWhLocRwd => RewardMode::Local,
            _ => RewardMode::Shared,
        }
    }

    pub fn obs_layout(self) -> ObsLayout {
        let warehouse = match self {
            Variant::LimWhShRwd | Variant::LimWhLocRwd | Variant::Sarl => WarehouseView::Limited,
            _ => WarehouseView::Enhanced,
        };
        ObsLayout {
            warehouse,
            oracle_demand: self == Variant::OracleCmarl,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown variant `{0}` (expected one of CMARL, EnWh-LocRwd, LimWh-ShRwd, LimWh-LocRwd, O-CMARL, ShPol, SARL, BSP, RANDOM)")]
pub struct UnknownVariant(pub String);

impl FromStr for Variant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let found = match s {
            "EnWh-ShRwd" => Some(Variant::Cmarl),
            "ShPol-CMARL" => Some(Variant::ShPol),
            _ => Variant::ALL.into_iter().find(|v| v.tag().eq_ignore_ascii_case(s)),
        };
        found.ok_or_else(|| UnknownVariant(s.to_string()))
    }
}

impl TryFrom<String> for Variant {
    type Error = UnknownVariant;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> Self {
        v.tag().to_string()
    }
}
