use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GapId {
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
    G7,
    G8,
    G9,
    G10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Architecture,
    Implementation,
    Deployment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Challenge {
    Scalability,
    Observability,
    Security,
}

/// Column of the per-benchmark issue matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IssueType {
    HeavyServices,
    Monitoring,
    Readiness,
    FailureVisibility,
    Dependencies,
    ResourceGovernance,
}

impl IssueType {
    pub const ALL: [IssueType; 6] = [
        IssueType::HeavyServices,
        IssueType::Monitoring,
        IssueType::Readiness,
        IssueType::FailureVisibility,
        IssueType::Dependencies,
        IssueType::ResourceGovernance,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            IssueType::HeavyServices => "Heavy Services",
            IssueType::Monitoring => "Monitoring",
            IssueType::Readiness => "Readiness",
            IssueType::FailureVisibility => "Failure Visibility",
            IssueType::Dependencies => "Dependencies",
            IssueType::ResourceGovernance => "Resource Governance",
        }
    }
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Architecture => "Architecture",
            Phase::Implementation => "Implementation",
            Phase::Deployment => "Deployment",
        }
    }
}

impl Challenge {
    pub fn as_str(&self) -> &'static str {
        match self {
            Challenge::Scalability => "Scalability",
            Challenge::Observability => "Observability",
            Challenge::Security => "Security",
        }
    }
}

impl GapId {
    pub const ALL: [GapId; 10] = [
        GapId::G1,
        GapId::G2,
        GapId::G3,
        GapId::G4,
        GapId::G5,
        GapId::G6,
        GapId::G7,
        GapId::G8,
        GapId::G9,
        GapId::G10,
    ];

    pub fn number(&self) -> usize {
        *self as usize + 1
    }

    pub fn code(&self) -> String {
        format!("G{}", self.number())
    }

    pub fn name(&self) -> &'static str {
        match self {
            GapId::G1 => "Service Initialization Overhead",
            GapId::G2 => "Scale-Out Resource Contention",
            GapId::G3 => "Missing Application-Level Metrics",
            GapId::G4 => "Missing Readiness/Liveness configuration",
            GapId::G5 => "Misconfigured Readiness/Liveness Probes",
            GapId::G6 => "Error Masking in Service Chains",
            GapId::G7 => "Lack of Downstream Error Metrics",
            GapId::G8 => "Incomplete or Misleading Call Graphs",
            GapId::G9 => "Unbounded Resource Requests",
            GapId::G10 => "Lack of Namespace-Level Safeguards",
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            GapId::G8 => Phase::Architecture,
            GapId::G1 | GapId::G2 | GapId::G3 | GapId::G6 | GapId::G7 => Phase::Implementation,
            GapId::G4 | GapId::G5 | GapId::G9 | GapId::G10 => Phase::Deployment,
        }
    }

    pub fn issue(&self) -> IssueType {
        match self {
            GapId::G1 | GapId::G2 => IssueType::HeavyServices,
            GapId::G3 => IssueType::Monitoring,
            GapId::G4 | GapId::G5 => IssueType::Readiness,
            GapId::G6 | GapId::G7 => IssueType::FailureVisibility,
            GapId::G8 => IssueType::Dependencies,
            GapId::G9 | GapId::G10 => IssueType::ResourceGovernance,
        }
    }

    pub fn challenge(&self) -> Challenge {
        match self.issue() {
            IssueType::HeavyServices => Challenge::Scalability,
            IssueType::ResourceGovernance => Challenge::Security,
            _ => Challenge::Observability,
        }
    }

    /// Subtree of the assembled configuration this gap controls.
    pub fn mechanism(&self) -> &'static str {
        match self {
            GapId::G1 => "startup",
            GapId::G2 => "scale_limits",
            GapId::G3 => "app_metrics",
            GapId::G4 | GapId::G5 => "probes",
            GapId::G6 => "error_handling",
            GapId::G7 => "error_metrics",
            GapId::G8 => "call_graph",
            GapId::G9 => "limits",
            GapId::G10 => "quotas",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle_mapping() {
        let by_phase = |p: Phase| -> Vec<usize> {
            GapId::ALL
                .iter()
                .filter(|g| g.phase() == p)
                .map(|g| g.number())
                .collect()
        };
        assert_eq!(by_phase(Phase::Architecture), vec![8]);
        assert_eq!(by_phase(Phase::Implementation), vec![1, 2, 3, 6, 7]);
        assert_eq!(by_phase(Phase::Deployment), vec![4, 5, 9, 10]);
    }

    #[test]
    fn names_and_codes() {
        assert_eq!(GapId::G1.name(), "Service Initialization Overhead");
        assert_eq!(GapId::G6.name(), "Error Masking in Service Chains");
        assert_eq!(GapId::G10.name(), "Lack of Namespace-Level Safeguards");
        assert_eq!(GapId::G10.code(), "G10");
    }
}
