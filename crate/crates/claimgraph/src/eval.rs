//! Labelled-dataset evaluation and its report.
//!
//! The report is JSON lines: one `"kind": "claim"` object per dataset line in
//! input order, then one `"kind": "summary"` object with the metrics and the
//! rows of the summary table.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use claimgraph_core::{
    map_label, score_dataset, EvalStatus, FeverLabel, GraphStore, LabelThresholds, LabeledClaim,
    Metrics, NliVerdict, Origin, SectionId,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::Engine;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("claim {index}: {reason}")]
    Claim { index: usize, reason: String },
}

/// Reads a JSON-lines dataset. Blank lines are skipped; any other bad line
/// is an error, since silently dropping gold labels would skew metrics.
pub fn read_dataset(reader: impl BufRead) -> Result<Vec<LabeledClaim>, EvalError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| EvalError::Io {
            path: format!("line {line_no}"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let claim: LabeledClaim =
            serde_json::from_str(&line).map_err(|e| EvalError::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
        if claim.claim.trim().is_empty() {
            return Err(EvalError::MalformedRecord {
                line: line_no,
                reason: "empty claim".into(),
            });
        }
        out.push(claim);
    }
    Ok(out)
}

pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<Vec<LabeledClaim>, EvalError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset(BufReader::new(file))
}

/// Why a claim ended up as NOT ENOUGH INFO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NeiReason {
    /// The linker found no entity in the claim.
    NoEntities,
    /// Entities were found but no section mentions any of them.
    NoEvidence,
    /// Evidence was scored and the verdict was neutral or under threshold.
    NeutralVerdict,
    LinkerUnavailable,
    ProviderUnavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimReport {
    pub kind: &'static str,
    pub index: usize,
    pub claim: String,
    pub gold: FeverLabel,
    pub predicted: FeverLabel,
    pub status: EvalStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nei_reason: Option<NeiReason>,
    pub entities: Vec<String>,
    pub best_sections: Vec<SectionId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_origin: Option<Origin>,
    pub sts: Option<f64>,
    pub verdict: Option<NliVerdict>,
    pub degraded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub kind: &'static str,
    pub rows: Vec<TableRow>,
    pub accuracy: f64,
    pub metrics: Metrics,
    pub nei_reasons: Vec<(NeiReason, usize)>,
    pub degraded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub claims: Vec<ClaimReport>,
    pub summary: Summary,
}

fn nei_reason(status: EvalStatus) -> NeiReason {
    match status {
        EvalStatus::Ok => NeiReason::NeutralVerdict,
        EvalStatus::NoEntities => NeiReason::NoEntities,
        EvalStatus::NoEvidence => NeiReason::NoEvidence,
        EvalStatus::LinkerUnavailable => NeiReason::LinkerUnavailable,
        EvalStatus::ProviderUnavailable => NeiReason::ProviderUnavailable,
    }
}

/// Evaluates every claim in parallel against a shared read-only store.
/// Output order follows the dataset regardless of scheduling.
pub fn run_eval(
    dataset: &[LabeledClaim],
    store: &GraphStore,
    engine: &Engine,
    thresholds: &LabelThresholds,
) -> Result<EvalReport, EvalError> {
    let claims = dataset
        .par_iter()
        .enumerate()
        .map(|(index, item)| {
            let out = engine
                .evaluate(&item.claim, store)
                .map_err(|e| EvalError::Claim {
                    index,
                    reason: e.to_string(),
                })?;
            let eval = out.evaluation;
            let predicted = map_label(&eval, thresholds);
            Ok(ClaimReport {
                kind: "claim",
                index,
                claim: item.claim.clone(),
                gold: item.gold,
                predicted,
                status: eval.status,
                nei_reason: (predicted == FeverLabel::NotEnoughInfo)
                    .then(|| nei_reason(eval.status)),
                entities: eval.entities.iter().map(|e| e.entity_id.clone()).collect(),
                best_sections: eval
                    .best
                    .as_ref()
                    .map(|b| b.sections.clone())
                    .unwrap_or_default(),
                best_origin: eval.best.as_ref().map(|b| b.origin),
                sts: eval.sts.map(|s| s.value()),
                verdict: eval.verdict,
                degraded: out.degraded,
                error: eval.error,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let predicted: Vec<FeverLabel> = claims.iter().map(|c| c.predicted).collect();
    let metrics = score_dataset(dataset, &predicted).expect("one prediction per claim");
    let mut reasons: Vec<(NeiReason, usize)> = Vec::new();
    for r in claims.iter().filter_map(|c| c.nei_reason) {
        match reasons.iter_mut().find(|(k, _)| *k == r) {
            Some((_, n)) => *n += 1,
            None => reasons.push((r, 1)),
        }
    }
    reasons.sort_by_key(|(k, _)| *k as u8);
    let summary = Summary {
        kind: "summary",
        rows: table_rows(&metrics),
        accuracy: metrics.accuracy,
        nei_reasons: reasons,
        degraded: claims.iter().filter(|c| c.degraded).count(),
        metrics,
    };
    Ok(EvalReport { claims, summary })
}

/// Per-label rows followed by the weighted average.
pub fn table_rows(m: &Metrics) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = [
        FeverLabel::NotEnoughInfo,
        FeverLabel::Refutes,
        FeverLabel::Supports,
    ]
    .into_iter()
    .map(|l| {
        let lm = m.label(l);
        TableRow {
            label: l.as_str().into(),
            precision: lm.precision,
            recall: lm.recall,
            f1: lm.f1,
        }
    })
    .collect();
    rows.push(TableRow {
        label: "Weighted Average".into(),
        precision: m.weighted.precision,
        recall: m.weighted.recall,
        f1: m.weighted.f1,
    });
    rows
}

pub fn write_report(report: &EvalReport, mut out: impl Write) -> std::io::Result<()> {
    for c in &report.claims {
        serde_json::to_writer(&mut out, c)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut out, &report.summary)?;
    out.write_all(b"\n")
}

pub fn render_table(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<26} {:>9} {:>9} {:>9}",
        "label", "precision", "recall", "f1"
    );
    for r in &summary.rows {
        let _ = writeln!(
            s,
            "{:<26} {:>9.3} {:>9.3} {:>9.3}",
            r.label, r.precision, r.recall, r.f1
        );
    }
    let _ = writeln!(
        s,
        "{:<26} {:>9.3}",
        "label accuracy (overall)", summary.accuracy
    );
    let _ = writeln!(s, "claims: {}", summary.metrics.total);
    for (reason, n) in &summary.nei_reasons {
        let name = serde_json::to_value(reason)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let _ = writeln!(s, "nei {name}: {n}");
    }
    if summary.degraded > 0 {
        let _ = writeln!(s, "degraded evaluations: {}", summary.degraded);
    }
    for w in &summary.metrics.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use claimgraph_core::{
        annotate_store, ArticleRecord, CosineSts, Gazetteer, LinkerConfig, PipelineLimits,
        ReferenceEmbedder, ReferenceNli,
    };

    fn engine() -> Engine {
        let g = Gazetteer::from_tsv(
            "Denmark\tQ35\tDenmark\nAustria\tQ40\tAustria\nNorway\tQ20\tNorway\n",
        )
        .unwrap();
        Engine::from_parts(
            Box::new(g),
            LinkerConfig::default(),
            Box::new(CosineSts(ReferenceEmbedder::default())),
            Box::new(ReferenceNli),
            PipelineLimits::default(),
        )
    }

    fn store(engine: &Engine) -> GraphStore {
        let mut g = GraphStore::new();
        let text = "Denmark borders Austria in this story";
        g.upsert_article(ArticleRecord::new("u1", "", text), vec![text.into()])
            .unwrap();
        annotate_store(&mut g, engine.linker(), engine.linker_config()).unwrap();
        g
    }

    #[test]
    fn dataset_lines_are_validated() {
        let ok = "{\"claim\":\"a\",\"gold\":\"SUPPORTS\"}\n\n{\"claim\":\"b\",\"gold\":\"NOT ENOUGH INFO\"}\n";
        assert_eq!(read_dataset(ok.as_bytes()).unwrap().len(), 2);
        let bad = "{\"claim\":\"a\",\"gold\":\"SUPPORTS\"}\n{\"claim\":\"b\",\"gold\":\"MAYBE\"}\n";
        assert!(matches!(
            read_dataset(bad.as_bytes()),
            Err(EvalError::MalformedRecord { line: 2, .. })
        ));
        let empty = "{\"claim\":\"  \",\"gold\":\"SUPPORTS\"}\n";
        assert!(matches!(
            read_dataset(empty.as_bytes()),
            Err(EvalError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn labels_and_nei_causes() {
        let engine = engine();
        let store = store(&engine);
        let data = read_dataset(
            concat!(
                "{\"claim\":\"Denmark borders Austria\",\"gold\":\"SUPPORTS\"}\n",
                "{\"claim\":\"Denmark never borders Austria\",\"gold\":\"REFUTES\"}\n",
                "{\"claim\":\"Nothing known here\",\"gold\":\"NOT ENOUGH INFO\"}\n",
                "{\"claim\":\"Norway is cold\",\"gold\":\"NOT ENOUGH INFO\"}\n",
            )
            .as_bytes(),
        )
        .unwrap();
        let report = run_eval(&data, &store, &engine, &LabelThresholds::default()).unwrap();
        let predicted: Vec<_> = report.claims.iter().map(|c| c.predicted).collect();
        assert_eq!(
            predicted,
            [
                FeverLabel::Supports,
                FeverLabel::Refutes,
                FeverLabel::NotEnoughInfo,
                FeverLabel::NotEnoughInfo
            ]
        );
        assert_eq!(report.claims[2].nei_reason, Some(NeiReason::NoEntities));
        assert_eq!(report.claims[3].nei_reason, Some(NeiReason::NoEvidence));
        assert_eq!(report.summary.accuracy, 1.0);
        assert_eq!(report.summary.rows.len(), 4);

        let mut buf = Vec::new();
        write_report(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text
            .lines()
            .last()
            .unwrap()
            .contains("\"kind\":\"summary\""));
        assert!(render_table(&report.summary).contains("Weighted Average"));
    }
}
