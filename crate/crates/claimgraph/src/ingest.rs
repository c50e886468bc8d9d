//! Line-delimited article ingestion.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use claimgraph_core::{segment, ArticleRecord, GraphStore, SectionId, SegmentationConfig, Upsert};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Segmentation(#[from] claimgraph_core::SegmentError),
}

/// A line that could not be ingested. The line is skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("malformed record at line {line}: {reason}")]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

/// Graph deltas produced by one ingestion run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    /// Articles new to the store.
    pub articles: usize,
    /// Articles whose url was known and whose content changed.
    pub replaced: usize,
    /// Articles whose url was known with identical content.
    pub unchanged: usize,
    /// Sections inserted.
    pub sections: usize,
    /// Sections removed by replacements.
    pub sections_removed: usize,
    /// Malformed lines.
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub stats: IngestStats,
    pub malformed: Vec<MalformedRecord>,
    /// Sections inserted by this run, for incremental annotation.
    pub new_sections: Vec<SectionId>,
}

fn ingest_line(
    store: &mut GraphStore,
    raw: &str,
    cfg: &SegmentationConfig,
    report: &mut IngestReport,
) -> Result<(), String> {
    let record: ArticleRecord = serde_json::from_str(raw).map_err(|e| e.to_string())?;
    record.validate().map_err(|e| e.to_string())?;
    let sections = segment(&record, cfg).map_err(|e| e.to_string())?;
    let stats = &mut report.stats;
    match store
        .upsert_article(record, sections)
        .map_err(|e| e.to_string())?
    {
        Upsert::Inserted { id, sections } => {
            stats.articles += 1;
            stats.sections += sections;
            report
                .new_sections
                .extend_from_slice(store.article_sections(id));
        }
        Upsert::Replaced {
            id,
            sections,
            removed_sections,
        } => {
            stats.replaced += 1;
            stats.sections += sections;
            stats.sections_removed += removed_sections;
            report
                .new_sections
                .extend_from_slice(store.article_sections(id));
        }
        Upsert::Unchanged { .. } => stats.unchanged += 1,
    }
    Ok(())
}

/// Ingests one JSON record per line. Blank lines are ignored; malformed
/// lines are reported and skipped.
pub fn ingest_reader(
    store: &mut GraphStore,
    reader: impl BufRead,
    cfg: &SegmentationConfig,
) -> Result<IngestReport, IngestError> {
    cfg.validate()?;
    let mut report = IngestReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let raw = line.map_err(|source| IngestError::Io {
            path: format!("line {line_no}"),
            source,
        })?;
        if raw.trim().is_empty() {
            continue;
        }
        if let Err(reason) = ingest_line(store, &raw, cfg, &mut report) {
            tracing::warn!(line = line_no, %reason, "skipping malformed record");
            report.stats.skipped += 1;
            report.malformed.push(MalformedRecord {
                line: line_no,
                reason,
            });
        }
    }
    Ok(report)
}

pub fn ingest_str(
    store: &mut GraphStore,
    text: &str,
    cfg: &SegmentationConfig,
) -> Result<IngestReport, IngestError> {
    ingest_reader(store, text.as_bytes(), cfg)
}

pub fn ingest_file(
    store: &mut GraphStore,
    path: impl AsRef<Path>,
    cfg: &SegmentationConfig,
) -> Result<IngestReport, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(store, BufReader::new(file), cfg)
}
