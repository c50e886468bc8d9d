//! Client for out-of-process scorers.
//!
//! Wire protocol, UTF-8 JSON over HTTP:
//! - `GET /info` returns `{"dim": D, "model": str}` and optionally
//!   `"labels"`, the class order of `/nli` rows (default contradiction,
//!   entailment, neutral).
//! - `POST /embed` takes `{"texts": [...]}` and returns `{"vectors": [[...]]}`,
//!   one unit-norm row of length D per text.
//! - `POST /nli` takes `{"pairs": [[premise, hypothesis], ...]}` and returns
//!   `{"probs": [[...]]}`, rows summing to 1.
//!
//! Transport failures and 5xx statuses map to `ProviderUnavailable`. A 413
//! reply splits the batch in half and retries each half.

use std::time::Duration;

use claimgraph_core::scoring::{
    Embedding, EmbeddingProvider, NliProvider, NliVerdict, ScoringError, REMOTE_NORM_TOLERANCE,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::http::{agent, join_url, InFlight, DEFAULT_IN_FLIGHT, DEFAULT_TIMEOUT};

/// Tolerance on the sum of an `/nli` row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerInfo {
    pub dim: usize,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: &'a [&'a str],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct NliRequest<'a> {
    pub pairs: Vec<[&'a str; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NliResponse {
    pub probs: Vec<Vec<f64>>,
}

/// Position of contradiction, entailment and neutral within a wire row.
fn class_positions(labels: Option<&[String]>) -> Result<[usize; 3], ScoringError> {
    let Some(labels) = labels else {
        return Ok([0, 1, 2]);
    };
    let bad = || ScoringError::MalformedResponse(format!("unrecognised label order {labels:?}"));
    if labels.len() != 3 {
        return Err(bad());
    }
    let find = |name: &str| {
        labels
            .iter()
            .position(|l| {
                let l = l.trim().to_lowercase();
                l == name || l == name[..1]
            })
            .ok_or_else(bad)
    };
    let pos = [
        find("contradiction")?,
        find("entailment")?,
        find("neutral")?,
    ];
    if pos[0] == pos[1] || pos[1] == pos[2] || pos[0] == pos[2] {
        return Err(bad());
    }
    Ok(pos)
}

/// Validates an `/embed` body against the advertised dimension.
pub fn parse_vectors(
    resp: EmbedResponse,
    expected: usize,
    dim: usize,
) -> Result<Vec<Embedding>, ScoringError> {
    if resp.vectors.len() != expected {
        return Err(ScoringError::MalformedResponse(format!(
            "expected {expected} vectors, got {}",
            resp.vectors.len()
        )));
    }
    resp.vectors
        .into_iter()
        .map(|v| {
            if v.len() != dim {
                return Err(ScoringError::DimensionMismatch(dim, v.len()));
            }
            Embedding::with_tolerance(v, REMOTE_NORM_TOLERANCE)
        })
        .collect()
}

/// Validates an `/nli` body and reorders rows to contradiction,
/// entailment, neutral.
pub fn parse_probs(
    resp: NliResponse,
    expected: usize,
    order: [usize; 3],
) -> Result<Vec<NliVerdict>, ScoringError> {
    if resp.probs.len() != expected {
        return Err(ScoringError::MalformedResponse(format!(
            "expected {expected} rows, got {}",
            resp.probs.len()
        )));
    }
    resp.probs
        .into_iter()
        .map(|row| {
            let row: [f64; 3] = row.try_into().map_err(|r: Vec<f64>| {
                ScoringError::MalformedResponse(format!("row of {} values", r.len()))
            })?;
            NliVerdict::from_probs(order.map(|i| row[i]), ROW_SUM_TOLERANCE)
        })
        .collect()
}

#[derive(Debug)]
pub struct RemoteScorer {
    base: String,
    agent: ureq::Agent,
    gate: InFlight,
    info: ScorerInfo,
    order: [usize; 3],
    max_batch: usize,
}

impl RemoteScorer {
    /// Connects and reads `/info`.
    pub fn connect(base: impl Into<String>) -> Result<Self, ScoringError> {
        Self::connect_with(base, DEFAULT_TIMEOUT, DEFAULT_IN_FLIGHT, DEFAULT_MAX_BATCH)
    }

    pub fn connect_with(
        base: impl Into<String>,
        timeout: Duration,
        in_flight: usize,
        max_batch: usize,
    ) -> Result<Self, ScoringError> {
        let base = base.into();
        let agent = agent(timeout);
        let gate = InFlight::new(in_flight);
        let info: ScorerInfo = {
            let _permit = gate.acquire();
            let resp = agent
                .get(join_url(&base, "info"))
                .call()
                .map_err(|e| ScoringError::ProviderUnavailable(e.to_string()))?;
            read_json(resp)?
        };
        if info.dim == 0 {
            return Err(ScoringError::MalformedResponse(
                "dim must be positive".into(),
            ));
        }
        let order = class_positions(info.labels.as_deref())?;
        Ok(Self {
            base,
            agent,
            gate,
            info,
            order,
            max_batch: max_batch.max(1),
        })
    }

    pub fn info(&self) -> &ScorerInfo {
        &self.info
    }

    /// Re-reads `/info`; used as a health probe.
    pub fn ping(&self) -> Result<ScorerInfo, ScoringError> {
        let _permit = self.gate.acquire();
        let resp = self
            .agent
            .get(join_url(&self.base, "info"))
            .call()
            .map_err(|e| ScoringError::ProviderUnavailable(e.to_string()))?;
        read_json(resp)
    }

    /// Posts a batch. `Ok(None)` means the server rejected it as too large.
    fn post<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<Option<R>, ScoringError> {
        let _permit = self.gate.acquire();
        let resp = self
            .agent
            .post(join_url(&self.base, path))
            .send_json(body)
            .map_err(|e| ScoringError::ProviderUnavailable(e.to_string()))?;
        if resp.status().as_u16() == 413 {
            return Ok(None);
        }
        read_json(resp).map(Some)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, ScoringError> {
        match self.post::<_, EmbedResponse>("embed", &EmbedRequest { texts })? {
            Some(resp) => parse_vectors(resp, texts.len(), self.info.dim),
            None if texts.len() > 1 => {
                let (a, b) = texts.split_at(texts.len() / 2);
                let mut out = self.embed_batch(a)?;
                out.extend(self.embed_batch(b)?);
                Ok(out)
            }
            None => Err(ScoringError::MalformedResponse(
                "single text rejected as too large".into(),
            )),
        }
    }

    fn classify_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError> {
        let req = NliRequest {
            pairs: pairs.iter().map(|(p, h)| [*p, *h]).collect(),
        };
        match self.post::<_, NliResponse>("nli", &req)? {
            Some(resp) => parse_probs(resp, pairs.len(), self.order),
            None if pairs.len() > 1 => {
                let (a, b) = pairs.split_at(pairs.len() / 2);
                let mut out = self.classify_batch(a)?;
                out.extend(self.classify_batch(b)?);
                Ok(out)
            }
            None => Err(ScoringError::MalformedResponse(
                "single pair rejected as too large".into(),
            )),
        }
    }
}

fn read_json<R: DeserializeOwned>(
    mut resp: ureq::http::Response<ureq::Body>,
) -> Result<R, ScoringError> {
    let status = resp.status().as_u16();
    if status >= 500 {
        return Err(ScoringError::ProviderUnavailable(format!(
            "status {status}"
        )));
    }
    if !(200..300).contains(&status) {
        return Err(ScoringError::MalformedResponse(format!("status {status}")));
    }
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| ScoringError::ProviderUnavailable(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| ScoringError::MalformedResponse(e.to_string()))
}

impl EmbeddingProvider for RemoteScorer {
    fn dim(&self) -> usize {
        self.info.dim
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>, ScoringError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(ScoringError::EmptyText);
        }
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.max_batch) {
            out.extend(self.embed_batch(chunk)?);
        }
        Ok(out)
    }
}

impl NliProvider for RemoteScorer {
    fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError> {
        if pairs
            .iter()
            .any(|(p, h)| p.trim().is_empty() || h.trim().is_empty())
        {
            return Err(ScoringError::EmptyText);
        }
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.max_batch) {
            out.extend(self.classify_batch(chunk)?);
        }
        Ok(out)
    }
}

/// Outcome of one protocol conformance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Exercises a scorer server against the wire contract: `/info` metadata,
/// `/embed` row count, dimension and unit norm (1 ± 1e-6), identical texts
/// giving identical rows, and `/nli` rows that are distributions summing to
/// 1 ± 1e-6.
pub fn conformance(base: &str) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut record = |name, result: Result<(), String>| {
        checks.push(Check {
            name,
            passed: result.is_ok(),
            detail: result.err().unwrap_or_default(),
        })
    };
    let agent = agent(DEFAULT_TIMEOUT);
    let get_info = || -> Result<ScorerInfo, String> {
        let resp = agent
            .get(join_url(base, "info"))
            .call()
            .map_err(|e| e.to_string())?;
        let info: ScorerInfo = read_json(resp).map_err(|e| e.to_string())?;
        if info.dim == 0 {
            return Err("dim must be positive".into());
        }
        class_positions(info.labels.as_deref()).map_err(|e| e.to_string())?;
        Ok(info)
    };
    let info = match get_info() {
        Ok(info) => {
            record("info", Ok(()));
            info
        }
        Err(e) => {
            record("info", Err(e));
            return checks;
        }
    };
    let post = |path: &str, body: serde_json::Value| -> Result<serde_json::Value, String> {
        let resp = agent
            .post(join_url(base, path))
            .send_json(body)
            .map_err(|e| e.to_string())?;
        read_json(resp).map_err(|e| e.to_string())
    };

    let texts = [
        "Denmark is in the European Union.",
        "Denmark is in the European Union.",
        "Το Ιράν δεν απειλεί τις ΗΠΑ.",
    ];
    record(
        "embed",
        post("embed", serde_json::json!({ "texts": texts })).and_then(|v| {
            let resp: EmbedResponse = serde_json::from_value(v).map_err(|e| e.to_string())?;
            if resp.vectors.len() != texts.len() {
                return Err(format!(
                    "expected {} rows, got {}",
                    texts.len(),
                    resp.vectors.len()
                ));
            }
            for (i, row) in resp.vectors.iter().enumerate() {
                if row.len() != info.dim {
                    return Err(format!(
                        "row {i} has length {}, /info says {}",
                        row.len(),
                        info.dim
                    ));
                }
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(format!("row {i} has norm {norm}"));
                }
            }
            if resp.vectors[0] != resp.vectors[1] {
                return Err("identical texts gave different rows".into());
            }
            Ok(())
        }),
    );

    let pairs = [
        [
            "Denmark is in the European Union.",
            "Denmark is in the European Union.",
        ],
        ["Iran threatens the US.", "Iran does not threaten the US."],
    ];
    record(
        "nli",
        post("nli", serde_json::json!({ "pairs": pairs })).and_then(|v| {
            let resp: NliResponse = serde_json::from_value(v).map_err(|e| e.to_string())?;
            if resp.probs.len() != pairs.len() {
                return Err(format!(
                    "expected {} rows, got {}",
                    pairs.len(),
                    resp.probs.len()
                ));
            }
            for (i, row) in resp.probs.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != 3
                    || row.iter().any(|p| !(0.0..=1.0).contains(p))
                    || (sum - 1.0).abs() > ROW_SUM_TOLERANCE
                {
                    return Err(format!("row {i} {row:?} is not a distribution"));
                }
            }
            Ok(())
        }),
    );
    checks
}
