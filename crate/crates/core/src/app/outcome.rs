use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Timeout,
    DependencyUnavailable,
    /// Reserved: retries are not modeled.
    RetryFailure,
    DownstreamError,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 4] = [
        ErrorKind::Timeout,
        ErrorKind::DependencyUnavailable,
        ErrorKind::RetryFailure,
        ErrorKind::DownstreamError,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorKind::Timeout => "timeout",
            ErrorKind::DependencyUnavailable => "dependency_unavailable",
            ErrorKind::RetryFailure => "retry_failure",
            ErrorKind::DownstreamError => "downstream_error",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    /// A downstream call failed but the caller answered as if it had not.
    MaskedSuccess,
    Error(ErrorKind),
}

impl Outcome {
    pub fn is_error(&self) -> bool {
        matches!(self, Outcome::Error(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanRecord {
    pub service: usize,
    pub start_ms: f64,
    pub end_ms: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub id: u64,
    pub arrival_ms: f64,
    pub completion_ms: Option<f64>,
    pub outcome: Option<Outcome>,
    pub spans: Vec<SpanRecord>,
}

impl RequestRecord {
    pub fn latency_ms(&self) -> Option<f64> {
        self.completion_ms.map(|c| c - self.arrival_ms)
    }
}
