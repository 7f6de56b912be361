//! Readiness table: which gaps a scenario exhibits, grouped by challenge
//! and lifecycle phase.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::assemble::GapStatus;
use super::catalog::{GapId, IssueType};

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub id: GapId,
    pub status: GapStatus,
}

pub fn rows(status: &BTreeMap<GapId, GapStatus>) -> Vec<GapRow> {
    let mut v: Vec<GapRow> = GapId::ALL
        .iter()
        .map(|&id| GapRow {
            id,
            status: status.get(&id).copied().unwrap_or(GapStatus::Inactive),
        })
        .collect();
    v.sort_by_key(|r| (r.id.challenge(), r.id.phase(), r.id));
    v
}

/// Issue matrix cell: "✓" if any gap of the type is active, "R" if all its
/// present gaps are remediated, "✗" otherwise.
pub fn issue_matrix(status: &BTreeMap<GapId, GapStatus>) -> Vec<(IssueType, &'static str)> {
    IssueType::ALL
        .iter()
        .map(|&t| {
            let of_type = GapId::ALL.iter().filter(|g| g.issue() == t);
            let st: Vec<GapStatus> = of_type
                .map(|g| status.get(g).copied().unwrap_or(GapStatus::Inactive))
                .collect();
            let cell = if st.contains(&GapStatus::Active) {
                "✓"
            } else if st.contains(&GapStatus::Remediated) {
                "R"
            } else {
                "✗"
            };
            (t, cell)
        })
        .collect()
}

pub fn render_text(scenario: &str, status: &BTreeMap<GapId, GapStatus>) -> String {
    let rows = rows(status);
    let name_w = rows.iter().map(|r| r.id.name().len()).max().unwrap_or(4);
    let mut out = String::new();
    let _ = writeln!(out, "gap report: {scenario}");
    let _ = writeln!(
        out,
        "{:<4}  {:<name_w$}  {:<13}  {:<19}  {:<14}  {}",
        "id", "name", "challenge", "type", "phase", "status"
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{:<4}  {:<name_w$}  {:<13}  {:<19}  {:<14}  {}",
            r.id.code(),
            r.id.name(),
            r.id.challenge().as_str(),
            r.id.issue().label(),
            r.id.phase().as_str(),
            r.status.as_str()
        );
    }
    out.push('\n');
    let m = issue_matrix(status);
    let header: Vec<&str> = m.iter().map(|(t, _)| t.label()).collect();
    let _ = writeln!(out, "{}", header.join(" | "));
    let cells: Vec<String> = m
        .iter()
        .map(|(t, c)| format!("{c:^w$}", w = t.label().chars().count()))
        .collect();
    let _ = writeln!(out, "{}", cells.join(" | "));
    out
}

pub fn render_csv(status: &BTreeMap<GapId, GapStatus>) -> String {
    let mut out = String::from("id,name,challenge,type,phase,status\n");
    for r in rows(status) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.id.code(),
            r.id.name(),
            r.id.challenge().as_str(),
            r.id.issue().label(),
            r.id.phase().as_str(),
            r.status.as_str()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gap_set_is_all_inactive() {
        let m = BTreeMap::new();
        assert!(rows(&m).iter().all(|r| r.status == GapStatus::Inactive));
        assert!(issue_matrix(&m).iter().all(|(_, c)| *c == "✗"));
    }

    #[test]
    fn csv_has_ten_rows() {
        let csv = render_csv(&BTreeMap::new());
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.contains("G8,Incomplete or Misleading Call Graphs,Observability,Dependencies,Architecture,inactive"));
    }
}
