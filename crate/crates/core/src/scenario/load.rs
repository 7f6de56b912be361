use std::path::Path;

use super::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::workload::WorkloadSpec;

/// Parse scenario JSON. Errors carry the line, column, and field path.
pub fn parse_str(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let mut message = inner.to_string();
        if let Some(cut) = message.rfind(" at line ") {
            message.truncate(cut);
        }
        Error::ScenarioParse {
            line: inner.line(),
            column: inner.column(),
            field,
            message,
        }
    })
}

/// Read a scenario file; relative trace paths resolve against its directory.
pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut sc = parse_str(&text)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    sc.base_dir = Some(dir);
    resolve_paths(&mut sc);
    Ok(sc)
}

pub fn resolve_paths(sc: &mut ScenarioConfig) {
    let Some(dir) = sc.base_dir.clone() else {
        return;
    };
    if let WorkloadSpec::Trace { path, .. } = &mut sc.workload {
        if path.is_relative() {
            *path = dir.join(&*path);
        }
    }
}
