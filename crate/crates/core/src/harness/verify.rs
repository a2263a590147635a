//! Re-checks a stored report against freshly rebuilt sessions.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::payoff;
use crate::oracle::{Oracle, OracleSession};

use super::baseline::full_info_baseline;
use super::experiment::{summarize, truthful_value, ExperimentReport, InstanceRecord, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyFailure {
    /// `None` for report-level problems.
    pub id: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifySummary {
    pub checked: usize,
    pub failures: Vec<VerifyFailure>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_instance(report: &ExperimentReport, rec: &InstanceRecord) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let game = &rec.game;
    game.validate()?;
    let (_, _, expected) = report.config.instance(rec.id);
    if expected != *game {
        bad.push("game differs from the configured seed".to_string());
    }
    if truthful_value(game)? != rec.truthful_value {
        bad.push("truthful value".to_string());
    }
    if full_info_baseline(game)?.value != rec.baseline_value {
        bad.push("baseline value".to_string());
    }
    match &rec.outcome {
        Outcome::Failed { error } => bad.push(format!("run failed: {error}")),
        Outcome::Planned(p) => {
            if p.exact_match != (p.value == rec.baseline_value) {
                bad.push("match flag".to_string());
            }
            if !p.exact_match {
                bad.push("plan value differs from baseline".to_string());
            }
            p.profile.check(game.m, game.n)?;
            if payoff(&game.follower, p.profile.x(), p.profile.response) != p.value {
                bad.push("plan value is not the follower payoff of its profile".to_string());
            }
            let mut session = OracleSession::new(game.clone(), report.config.mode)?;
            if !p.confirmed || !session.query_sse("verify", &p.fake, &p.profile)? {
                bad.push("final matrix does not induce the planned profile".to_string());
            }
        }
    }
    Ok(bad)
}

/// Checks a parsed report: per-instance replay plus summary consistency.
pub fn verify(report: &ExperimentReport) -> VerifySummary {
    let mut failures = Vec::new();
    for rec in &report.instances {
        match check_instance(report, rec) {
            Ok(reasons) => failures.extend(reasons.into_iter().map(|reason| VerifyFailure {
                id: Some(rec.id),
                reason,
            })),
            Err(e) => failures.push(VerifyFailure {
                id: Some(rec.id),
                reason: e.to_string(),
            }),
        }
    }
    if summarize(&report.instances) != report.summary {
        failures.push(VerifyFailure {
            id: None,
            reason: "summary does not match the instances".to_string(),
        });
    }
    VerifySummary {
        checked: report.instances.len(),
        failures,
    }
}

/// Loads and verifies a report file, including an exact JSON round trip of every value.
pub fn verify_report(path: &Path) -> Result<VerifySummary> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::MalformedInput(e.to_string()))?;
    let report: ExperimentReport =
        serde_json::from_value(raw.clone()).map_err(|e| Error::MalformedInput(e.to_string()))?;
    let mut summary = verify(&report);
    let again = serde_json::to_value(&report).map_err(|e| Error::MalformedInput(e.to_string()))?;
    if again != raw {
        summary.failures.push(VerifyFailure {
            id: None,
            reason: "report does not round-trip exactly (non-canonical rationals?)".to_string(),
        });
    }
    Ok(summary)
}
