//! Client for an external wikification service speaking the JSI Wikifier
//! `annotate-article` protocol.
//!
//! Raw per-annotation pageRank values are divided by the largest pageRank in
//! the response, giving confidences in [0, 1] on which the shared linker
//! threshold applies. Server-side pruning is switched off so that the local
//! threshold is the only cut.

use std::time::Duration;

use claimgraph_core::linking::finalize_mentions;
use claimgraph_core::text::char_slice;
use claimgraph_core::{EntityLinker, EntityMention, EntityRef, LinkError, LinkerConfig};
use serde::Deserialize;

use crate::http::{agent, InFlight, DEFAULT_IN_FLIGHT, DEFAULT_TIMEOUT};

pub const DEFAULT_ENDPOINT: &str = "http://www.wikifier.org/annotate-article";
pub const USER_KEY_ENV: &str = "WIKIFIER_USER_KEY";

#[derive(Debug, Deserialize)]
struct Response {
    #[serde(default)]
    annotations: Vec<Annotation>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Annotation {
    #[serde(default)]
    title: String,
    #[serde(default)]
    page_rank: f64,
    #[serde(default)]
    wiki_data_item_id: Option<String>,
    #[serde(default)]
    wiki_data_classes: Vec<WikiDataClass>,
    #[serde(default)]
    support: Vec<Support>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WikiDataClass {
    #[serde(default)]
    en_label: String,
}

/// Character span, both ends inclusive.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Support {
    ch_from: usize,
    ch_to: usize,
}

/// Turns a service response for `text` into thresholded mentions.
/// Annotations without a knowledge-base id are ignored.
pub fn parse_response(
    text: &str,
    body: &str,
    cfg: &LinkerConfig,
) -> Result<Vec<EntityMention>, LinkError> {
    cfg.validate()?;
    let resp: Response =
        serde_json::from_str(body).map_err(|e| LinkError::MalformedResponse(e.to_string()))?;
    if let Some(bad) = resp
        .annotations
        .iter()
        .find(|a| !a.page_rank.is_finite() || a.page_rank < 0.0)
    {
        return Err(LinkError::MalformedResponse(format!(
            "invalid pageRank {} for {}",
            bad.page_rank, bad.title
        )));
    }
    let max = resp
        .annotations
        .iter()
        .map(|a| a.page_rank)
        .fold(0.0, f64::max);
    let len = text.chars().count();
    let mut candidates = Vec::new();
    for a in &resp.annotations {
        let Some(id) = a.wiki_data_item_id.as_deref().filter(|id| !id.is_empty()) else {
            continue;
        };
        let score = if max > 0.0 { a.page_rank / max } else { 0.0 };
        let mut entity = EntityRef::new(id, a.title.clone());
        entity.types = a
            .wiki_data_classes
            .iter()
            .map(|c| c.en_label.clone())
            .filter(|l| !l.is_empty())
            .collect();
        for s in &a.support {
            let end = s.ch_to + 1;
            if s.ch_from >= end || end > len {
                return Err(LinkError::MalformedResponse(format!(
                    "support span {}..={} outside text of {len} chars",
                    s.ch_from, s.ch_to
                )));
            }
            candidates.push(EntityMention {
                entity: entity.clone(),
                surface: char_slice(text, s.ch_from, end).into(),
                start: s.ch_from,
                end,
                score,
            });
        }
    }
    Ok(finalize_mentions(text, candidates, cfg))
}

#[derive(Debug)]
pub struct WikifierClient {
    endpoint: String,
    user_key: String,
    agent: ureq::Agent,
    gate: InFlight,
}

impl WikifierClient {
    pub fn new(endpoint: impl Into<String>, user_key: impl Into<String>) -> Self {
        Self::with_limits(endpoint, user_key, DEFAULT_TIMEOUT, DEFAULT_IN_FLIGHT)
    }

    pub fn with_limits(
        endpoint: impl Into<String>,
        user_key: impl Into<String>,
        timeout: Duration,
        in_flight: usize,
    ) -> Self {
        Self {
            endpoint: endpoint.into(),
            user_key: user_key.into(),
            agent: agent(timeout),
            gate: InFlight::new(in_flight),
        }
    }

    /// Reads the user key from the environment.
    pub fn from_env(endpoint: impl Into<String>) -> Result<Self, LinkError> {
        let key = std::env::var(USER_KEY_ENV)
            .map_err(|_| LinkError::LinkerUnavailable(format!("{USER_KEY_ENV} is not set")))?;
        Ok(Self::new(endpoint, key))
    }
}

impl EntityLinker for WikifierClient {
    fn annotate(&self, text: &str, cfg: &LinkerConfig) -> Result<Vec<EntityMention>, LinkError> {
        cfg.validate()?;
        let _permit = self.gate.acquire();
        let form = [
            ("text", text),
            ("lang", cfg.language.as_str()),
            ("userKey", self.user_key.as_str()),
            ("applyPageRankSqThreshold", "false"),
            ("pageRankSqThreshold", "-1"),
            ("wikiDataClasses", "true"),
            ("wikiDataClassIds", "false"),
            ("support", "true"),
            ("ranges", "false"),
            ("includeCosines", "false"),
            ("nTopDfValuesToIgnore", "200"),
            ("nWordsToIgnoreFromList", "200"),
        ];
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_form(form)
            .map_err(|e| LinkError::LinkerUnavailable(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(LinkError::LinkerUnavailable(format!(
                "wikifier returned status {status}"
            )));
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LinkError::LinkerUnavailable(e.to_string()))?;
        parse_response(text, &body, cfg)
    }
}
