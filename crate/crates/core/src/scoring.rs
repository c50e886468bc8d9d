//! Semantic similarity and inference scoring.
//!
//! Engines consume vectors and probability triples only; where they come
//! from is behind [`EmbeddingProvider`], [`StsScorer`] and [`NliProvider`].
//! The reference providers here are deterministic, model-free stand-ins
//! meant for tests and offline runs.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::evidence::CandidateEvidence;
use crate::text::{fold, letter_tokens};

/// Norm tolerance for embeddings produced in-process.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;
/// Norm tolerance accepted from out-of-process providers.
pub const REMOTE_NORM_TOLERANCE: f64 = 1e-3;
/// Probability-sum tolerance of a verdict.
pub const VERDICT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("scoring provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding norm {0} is not 1")]
    NotUnitNorm(f64),
    #[error("non-finite logit")]
    NonFiniteLogit,
    #[error("probabilities {0:?} are not a distribution")]
    InvalidProbabilities([f64; 3]),
    #[error("empty text cannot be scored")]
    EmptyText,
    #[error("no candidates to rank")]
    EmptyCandidates,
}

/// A unit-norm sentence vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, ScoringError> {
        Self::with_tolerance(values, UNIT_NORM_TOLERANCE)
    }

    /// Accepts `values` if its L2 norm is within `tol` of 1. Values are
    /// kept as given, never renormalized.
    pub fn with_tolerance(values: Vec<f64>, tol: f64) -> Result<Self, ScoringError> {
        let norm = libm::sqrt(values.iter().fold(0.0, |acc, v| acc + v * v));
        if norm.is_finite() && (norm - 1.0).abs() <= tol {
            Ok(Self { values })
        } else {
            Err(ScoringError::NotUnitNorm(norm))
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StsScore(pub f64);

impl StsScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Cosine similarity of two unit vectors, clamped to `[-1, 1]`.
pub fn cosine(u: &Embedding, v: &Embedding) -> Result<StsScore, ScoringError> {
    if u.dim() != v.dim() {
        return Err(ScoringError::DimensionMismatch(u.dim(), v.dim()));
    }
    let dot = u
        .values
        .iter()
        .zip(&v.values)
        .fold(0.0, |acc, (a, b)| acc + a * b);
    Ok(StsScore(dot.clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Contradiction,
    Entailment,
    Neutral,
}

/// Probabilities for contradiction, entailment and neutral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliVerdict {
    pub contradiction: f64,
    pub entailment: f64,
    pub neutral: f64,
}

impl NliVerdict {
    /// Builds a verdict from a `[c, e, n]` row whose sum is within `tol` of
    /// 1. The row is divided by its sum so the verdict itself sums to 1.
    pub fn from_probs(p: [f64; 3], tol: f64) -> Result<Self, ScoringError> {
        let sum = p[0] + p[1] + p[2];
        let in_range = p
            .iter()
            .all(|x| x.is_finite() && (0.0..=1.0 + tol).contains(x));
        if !in_range || (sum - 1.0).abs() > tol {
            return Err(ScoringError::InvalidProbabilities(p));
        }
        Ok(Self {
            contradiction: (p[0] / sum).min(1.0),
            entailment: (p[1] / sum).min(1.0),
            neutral: (p[2] / sum).min(1.0),
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.contradiction, self.entailment, self.neutral]
    }

    /// Most probable class; any tie for the maximum resolves to neutral.
    pub fn argmax(&self) -> NliLabel {
        let [c, e, n] = self.as_array();
        if c > e && c > n {
            NliLabel::Contradiction
        } else if e > c && e > n {
            NliLabel::Entailment
        } else {
            NliLabel::Neutral
        }
    }
}

/// Numerically stable softmax over `[c, e, n]` logits.
pub fn softmax(logits: [f64; 3]) -> Result<NliVerdict, ScoringError> {
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(ScoringError::NonFiniteLogit);
    }
    let max = logits[0].max(logits[1]).max(logits[2]);
    let ex = logits.map(|l| libm::exp(l - max));
    let sum = ex[0] + ex[1] + ex[2];
    Ok(NliVerdict {
        contradiction: ex[0] / sum,
        entailment: ex[1] / sum,
        neutral: ex[2] / sum,
    })
}

pub trait EmbeddingProvider {
    fn dim(&self) -> usize;
    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>, ScoringError>;
}

/// Scores candidate texts against a claim.
pub trait StsScorer {
    fn similarities(&self, claim: &str, candidates: &[&str])
        -> Result<Vec<StsScore>, ScoringError>;
}

/// Classifies `(premise, hypothesis)` pairs.
pub trait NliProvider {
    fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError>;
}

impl<T: StsScorer + ?Sized> StsScorer for &T {
    fn similarities(
        &self,
        claim: &str,
        candidates: &[&str],
    ) -> Result<Vec<StsScore>, ScoringError> {
        (**self).similarities(claim, candidates)
    }
}

impl<T: NliProvider + ?Sized> NliProvider for &T {
    fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError> {
        (**self).classify(pairs)
    }
}

impl<T: StsScorer + ?Sized> StsScorer for Box<T> {
    fn similarities(
        &self,
        claim: &str,
        candidates: &[&str],
    ) -> Result<Vec<StsScore>, ScoringError> {
        (**self).similarities(claim, candidates)
    }
}

impl<T: NliProvider + ?Sized> NliProvider for Box<T> {
    fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError> {
        (**self).classify(pairs)
    }
}

/// STS as cosine similarity between provider embeddings.
#[derive(Debug, Clone)]
pub struct CosineSts<P>(pub P);

impl<P: EmbeddingProvider> StsScorer for CosineSts<P> {
    fn similarities(
        &self,
        claim: &str,
        candidates: &[&str],
    ) -> Result<Vec<StsScore>, ScoringError> {
        let mut texts = Vec::with_capacity(candidates.len() + 1);
        texts.push(claim);
        texts.extend_from_slice(candidates);
        let vectors = self.0.embed(&texts)?;
        if vectors.len() != texts.len() {
            return Err(ScoringError::MalformedResponse(alloc::format!(
                "expected {} vectors, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        let (head, rest) = vectors.split_first().expect("non-empty");
        rest.iter().map(|v| cosine(head, v)).collect()
    }
}

/// Scores every candidate against the claim and sorts best first: by score
/// descending, then fewer sections, then section-id sequence.
pub fn rank<S: StsScorer + ?Sized>(
    claim: &str,
    candidates: Vec<CandidateEvidence>,
    scorer: &S,
) -> Result<Vec<(CandidateEvidence, StsScore)>, ScoringError> {
    if candidates.is_empty() {
        return Err(ScoringError::EmptyCandidates);
    }
    let texts: Vec<&str> = candidates.iter().map(|c| c.text.as_str()).collect();
    let scores = scorer.similarities(claim, &texts)?;
    if scores.len() != candidates.len() {
        return Err(ScoringError::MalformedResponse(alloc::format!(
            "expected {} scores, got {}",
            candidates.len(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.0.is_finite()) {
        return Err(ScoringError::MalformedResponse(alloc::format!(
            "non-finite score {}",
            bad.0
        )));
    }
    let mut ranked: Vec<_> = candidates.into_iter().zip(scores).collect();
    ranked.sort_by(|(ca, sa), (cb, sb)| {
        sb.0.total_cmp(&sa.0)
            .then(ca.sections.len().cmp(&cb.sections.len()))
            .then_with(|| ca.sections.cmp(&cb.sections))
    });
    Ok(ranked)
}

/// Verdict for one premise–hypothesis pair.
pub fn nli<P: NliProvider + ?Sized>(
    premise: &str,
    hypothesis: &str,
    provider: &P,
) -> Result<NliVerdict, ScoringError> {
    if premise.trim().is_empty() || hypothesis.trim().is_empty() {
        return Err(ScoringError::EmptyText);
    }
    provider
        .classify(&[(premise, hypothesis)])?
        .into_iter()
        .next()
        .ok_or_else(|| ScoringError::MalformedResponse("no verdict returned".into()))
}

pub const REFERENCE_DIM: usize = 4096;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hashed bag of folded letter tokens, L2-normalized. Tokens hash into
/// `dim` coordinates with count semantics. Not a semantic model.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceEmbedder {
    dim: usize,
}

impl Default for ReferenceEmbedder {
    fn default() -> Self {
        Self { dim: REFERENCE_DIM }
    }
}

impl ReferenceEmbedder {
    pub fn with_dim(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.dim as u64) as usize
    }

    fn embed_one(&self, text: &str) -> Result<Embedding, ScoringError> {
        let mut tokens = letter_tokens(text);
        if tokens.is_empty() {
            let folded = fold(text.trim());
            if folded.is_empty() {
                return Err(ScoringError::EmptyText);
            }
            tokens.push(folded);
        }
        let mut counts = vec![0u32; self.dim];
        for t in &tokens {
            counts[self.bucket(t)] += 1;
        }
        let sq: u64 = counts.iter().map(|&c| u64::from(c) * u64::from(c)).sum();
        let norm = libm::sqrt(sq as f64);
        Embedding::new(counts.into_iter().map(|c| f64::from(c) / norm).collect())
    }
}

impl EmbeddingProvider for ReferenceEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>, ScoringError> {
        if texts.is_empty() {
            return Err(ScoringError::EmptyText);
        }
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}

/// Folded negation markers recognised by [`ReferenceNli`].
pub const NEGATION_MARKERS: [&str; 6] = ["δεν", "μην", "οχι", "not", "no", "never"];

/// Rule-based inference:
///
/// * containment: every non-negation hypothesis token occurs in the premise
/// * mismatch: premise and hypothesis differ in negation-marker parity
///
/// Logits are `c = 4·containment·mismatch`, `e = 4·containment·(1−mismatch)`
/// and `n = 2·(1−containment)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceNli;

impl ReferenceNli {
    pub fn logits(&self, premise: &str, hypothesis: &str) -> [f64; 3] {
        let is_neg = |t: &String| NEGATION_MARKERS.contains(&t.as_str());
        let p = letter_tokens(premise);
        let h = letter_tokens(hypothesis);
        let premise_set: BTreeSet<&String> = p.iter().filter(|t| !is_neg(t)).collect();
        let content: Vec<&String> = h.iter().filter(|t| !is_neg(t)).collect();
        let contained = !content.is_empty() && content.iter().all(|t| premise_set.contains(t));
        let parity = |ts: &[String]| ts.iter().filter(|t| is_neg(t)).count() % 2;
        let mismatch = parity(&p) != parity(&h);
        let (cont, mis) = (
            f64::from(u8::from(contained)),
            f64::from(u8::from(mismatch)),
        );
        [
            4.0 * cont * mis,
            4.0 * cont * (1.0 - mis),
            2.0 * (1.0 - cont),
        ]
    }
}

impl NliProvider for ReferenceNli {
    fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError> {
        pairs
            .iter()
            .map(|(p, h)| softmax(self.logits(p, h)))
            .collect()
    }
}
