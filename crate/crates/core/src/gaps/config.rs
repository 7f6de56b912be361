//! Gap toggles and their remediations as they appear in scenario files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::GapId;
use crate::cluster::ProbeConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggle<P> {
    #[serde(default)]
    pub active: bool,
    #[serde(default)]
    pub params: P,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fix<P> {
    #[serde(default)]
    pub applied: bool,
    #[serde(default)]
    pub params: P,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct G1Params {
    /// Override the warm-up CPU demand of every booting service.
    pub boot_cpu_mcores: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct G5Params {
    /// Replaces every authored liveness probe.
    pub liveness: ProbeConfig,
}

impl Default for G5Params {
    fn default() -> Self {
        Self {
            liveness: ProbeConfig {
                initial_delay_ms: 30_000,
                period_ms: 10_000,
                timeout_ms: 1_000,
                failure_threshold: 3,
                success_threshold: 1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    #[serde(default)]
    pub g1: Toggle<G1Params>,
    #[serde(default)]
    pub g2: Toggle<NoParams>,
    #[serde(default)]
    pub g3: Toggle<NoParams>,
    #[serde(default)]
    pub g4: Toggle<NoParams>,
    #[serde(default)]
    pub g5: Toggle<G5Params>,
    #[serde(default)]
    pub g6: Toggle<NoParams>,
    #[serde(default)]
    pub g7: Toggle<NoParams>,
    #[serde(default)]
    pub g8: Toggle<NoParams>,
    #[serde(default)]
    pub g9: Toggle<NoParams>,
    #[serde(default)]
    pub g10: Toggle<NoParams>,
}

impl GapConfig {
    pub fn is_active(&self, g: GapId) -> bool {
        match g {
            GapId::G1 => self.g1.active,
            GapId::G2 => self.g2.active,
            GapId::G3 => self.g3.active,
            GapId::G4 => self.g4.active,
            GapId::G5 => self.g5.active,
            GapId::G6 => self.g6.active,
            GapId::G7 => self.g7.active,
            GapId::G8 => self.g8.active,
            GapId::G9 => self.g9.active,
            GapId::G10 => self.g10.active,
        }
    }

    pub fn set_active(&mut self, g: GapId, on: bool) {
        match g {
            GapId::G1 => self.g1.active = on,
            GapId::G2 => self.g2.active = on,
            GapId::G3 => self.g3.active = on,
            GapId::G4 => self.g4.active = on,
            GapId::G5 => self.g5.active = on,
            GapId::G6 => self.g6.active = on,
            GapId::G7 => self.g7.active = on,
            GapId::G8 => self.g8.active = on,
            GapId::G9 => self.g9.active = on,
            GapId::G10 => self.g10.active = on,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct R1Params {
    /// Run warm-up in an isolated init step with this temporary allowance.
    pub burst_limit_mcores: f64,
}

impl Default for R1Params {
    fn default() -> Self {
        Self {
            burst_limit_mcores: 1_200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct R2Params {
    pub replica_caps: BTreeMap<String, u32>,
    pub scale_up_limit: Option<u32>,
}

impl Default for R2Params {
    fn default() -> Self {
        Self {
            replica_caps: BTreeMap::from([("carts".to_string(), 5)]),
            scale_up_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct R5Params {
    /// Floor for the tuned liveness initial delay.
    pub min_initial_delay_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct R8Params {
    /// Give policies the static call graph instead of the traced one.
    pub hard_coded_graph: bool,
}

impl Default for R8Params {
    fn default() -> Self {
        Self {
            hard_coded_graph: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct R10Params {
    pub cpu_request_cap_mcores: f64,
}

impl Default for R10Params {
    fn default() -> Self {
        Self {
            cpu_request_cap_mcores: 24_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemediationSet {
    #[serde(default)]
    pub g1: Fix<R1Params>,
    #[serde(default)]
    pub g2: Fix<R2Params>,
    #[serde(default)]
    pub g3: Fix<NoParams>,
    #[serde(default)]
    pub g4: Fix<NoParams>,
    #[serde(default)]
    pub g5: Fix<R5Params>,
    #[serde(default)]
    pub g6: Fix<NoParams>,
    #[serde(default)]
    pub g7: Fix<NoParams>,
    #[serde(default)]
    pub g8: Fix<R8Params>,
    #[serde(default)]
    pub g9: Fix<NoParams>,
    #[serde(default)]
    pub g10: Fix<R10Params>,
}

impl RemediationSet {
    pub fn is_applied(&self, g: GapId) -> bool {
        match g {
            GapId::G1 => self.g1.applied,
            GapId::G2 => self.g2.applied,
            GapId::G3 => self.g3.applied,
            GapId::G4 => self.g4.applied,
            GapId::G5 => self.g5.applied,
            GapId::G6 => self.g6.applied,
            GapId::G7 => self.g7.applied,
            GapId::G8 => self.g8.applied,
            GapId::G9 => self.g9.applied,
            GapId::G10 => self.g10.applied,
        }
    }

    pub fn set_applied(&mut self, g: GapId, on: bool) {
        match g {
            GapId::G1 => self.g1.applied = on,
            GapId::G2 => self.g2.applied = on,
            GapId::G3 => self.g3.applied = on,
            GapId::G4 => self.g4.applied = on,
            GapId::G5 => self.g5.applied = on,
            GapId::G6 => self.g6.applied = on,
            GapId::G7 => self.g7.applied = on,
            GapId::G8 => self.g8.applied = on,
            GapId::G9 => self.g9.applied = on,
            GapId::G10 => self.g10.applied = on,
        }
    }
}
