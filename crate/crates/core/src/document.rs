//! JSON wire formats: quiver documents, predicates, limits and reports.
//!
//! A quiver document lists vertices in construction order and one record per
//! adjacent pair, ordered by source and then target. Weights are decimal strings so multiplicities of any size
//! survive the trip through JSON.
//!
//! ```json
//! {
//!   "vertices": [
//!     { "id": "A", "frozen": true },
//!     { "id": "C1", "frozen": false }
//!   ],
//!   "arrows": [
//!     { "from": "C1", "to": "A", "weight": "3" }
//!   ]
//! }
//! ```

use std::collections::BTreeSet;
use std::time::Duration;

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::{Dedup, ExplorationReport, Predicate, SearchLimits};
use crate::quiver::{Arrow, Quiver, QuiverError, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: String,
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowRecord {
    pub from: String,
    pub to: String,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuiverDocument {
    pub vertices: Vec<VertexRecord>,
    pub arrows: Vec<ArrowRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{location}: {message}")]
    Field { location: String, message: String },
    #[error("{location}: {source}")]
    Invalid {
        location: String,
        #[source]
        source: QuiverError,
    },
}

impl DocumentError {
    pub fn code(&self) -> &'static str {
        match self {
            DocumentError::Syntax { .. } | DocumentError::Field { .. } => "ParseError",
            DocumentError::Invalid { source, .. } => source.code(),
        }
    }
}

fn invalid(location: String, source: QuiverError) -> DocumentError {
    DocumentError::Invalid { location, source }
}

impl QuiverDocument {
    pub fn from_quiver(q: &Quiver) -> Self {
        let ids = q.vertices();
        QuiverDocument {
            vertices: ids
                .iter()
                .zip(q.frozen_flags())
                .map(|(id, &frozen)| VertexRecord { id: id.to_string(), frozen })
                .collect(),
            arrows: arrows_by_source(q)
                .into_iter()
                .map(|(i, j, w)| ArrowRecord {
                    from: ids[i].to_string(),
                    to: ids[j].to_string(),
                    weight: w.to_string(),
                })
                .collect(),
        }
    }

    /// Validates the document, reporting the offending field.
    pub fn to_quiver(&self) -> Result<Quiver, DocumentError> {
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            let id = VertexId::new(v.id.as_str()).map_err(|e| invalid(format!("vertices[{i}].id"), e))?;
            if vertices.iter().any(|(seen, _): &(VertexId, bool)| *seen == id) {
                return Err(invalid(format!("vertices[{i}].id"), QuiverError::DuplicateVertex(v.id.clone())));
            }
            vertices.push((id, v.frozen));
        }
        if vertices.is_empty() {
            return Err(invalid("vertices".into(), QuiverError::NoVertices));
        }
        let known = |name: &str, location: String| {
            vertices
                .iter()
                .find(|(id, _)| id.as_str() == name)
                .map(|(id, _)| id.clone())
                .ok_or_else(|| invalid(location, QuiverError::UnknownVertex(name.to_string())))
        };
        let mut arrows = Vec::with_capacity(self.arrows.len());
        let mut pairs = std::collections::HashMap::new();
        for (i, a) in self.arrows.iter().enumerate() {
            let from = known(&a.from, format!("arrows[{i}].from"))?;
            let to = known(&a.to, format!("arrows[{i}].to"))?;
            if from == to {
                return Err(invalid(format!("arrows[{i}].to"), QuiverError::SelfLoop(a.from.clone())));
            }
            let weight: BigInt = a.weight.trim().parse().map_err(|_| DocumentError::Field {
                location: format!("arrows[{i}].weight"),
                message: format!("{:?} is not a decimal integer", a.weight),
            })?;
            if weight <= BigInt::ZERO {
                return Err(invalid(
                    format!("arrows[{i}].weight"),
                    QuiverError::NonpositiveWeight { from: a.from.clone(), to: a.to.clone() },
                ));
            }
            let key = if from < to { (from.clone(), to.clone()) } else { (to.clone(), from.clone()) };
            if let Some(&(prev_index, prev_forward)) = pairs.get(&key) {
                let err = if prev_forward == (from < to) {
                    QuiverError::DuplicateArrow(a.from.clone(), a.to.clone())
                } else {
                    QuiverError::TwoCycleInInput(a.from.clone(), a.to.clone())
                };
                let _: usize = prev_index;
                return Err(invalid(format!("arrows[{i}]"), err));
            }
            pairs.insert(key, (i, from < to));
            arrows.push(Arrow::new(from, to, weight));
        }
        Quiver::new(vertices, arrows).map_err(|e| invalid("document".into(), e))
    }
}

/// Arrows ordered by source, then target, in vertex order.
fn arrows_by_source(q: &Quiver) -> Vec<(usize, usize, BigUint)> {
    let mut arrows = q.arrow_list();
    arrows.sort_by_key(|&(i, j, _)| (i, j));
    arrows
}

/// Parses a quiver document.
pub fn parse_quiver(bytes: &[u8]) -> Result<Quiver, DocumentError> {
    let doc: QuiverDocument = serde_json::from_slice(bytes).map_err(|e| DocumentError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_quiver()
}

/// Serializes a quiver document with two-space indentation and a trailing
/// newline.
pub fn serialize_quiver(q: &Quiver) -> Vec<u8> {
    serialize_document(&QuiverDocument::from_quiver(q))
}

pub fn serialize_document(doc: &QuiverDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("documents always serialize");
    out.push(b'\n');
    out
}

/// `{"kind":"pair-exactly","k":"8"}`, `{"kind":"no-icebound"}` or
/// `{"kind":"collect","u":"A","v":"B"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PredicateDocument {
    PairExactly { k: String },
    NoIcebound,
    Collect { u: String, v: String },
}

impl PredicateDocument {
    pub fn to_predicate(&self) -> Result<Predicate, DocumentError> {
        match self {
            PredicateDocument::PairExactly { k } => {
                let k: BigUint = k.trim().parse().map_err(|_| DocumentError::Field {
                    location: "predicate.k".into(),
                    message: format!("{k:?} is not a nonnegative decimal integer"),
                })?;
                Ok(Predicate::PairExactlyK(k))
            }
            PredicateDocument::NoIcebound => Ok(Predicate::NoIcebound),
            PredicateDocument::Collect { u, v } => Ok(Predicate::CollectPairMultiplicities(
                VertexId::new(u.as_str()).map_err(|e| invalid("predicate.u".into(), e))?,
                VertexId::new(v.as_str()).map_err(|e| invalid("predicate.v".into(), e))?,
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_states: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<u32>,
    /// Decimal string, or `"unlimited"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_multiplicity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget_ms: Option<u64>,
}

impl LimitsDocument {
    /// Missing fields take the defaults of [`SearchLimits`].
    pub fn to_limits(&self) -> Result<SearchLimits, DocumentError> {
        let mut limits = SearchLimits::default();
        if let Some(m) = self.max_states {
            limits.max_states = m;
        }
        limits.max_depth = self.max_depth;
        if let Some(m) = &self.max_multiplicity {
            limits.max_multiplicity = if m == "unlimited" {
                None
            } else {
                Some(m.trim().parse().map_err(|_| DocumentError::Field {
                    location: "limits.max_multiplicity".into(),
                    message: format!("{m:?} is not a decimal integer"),
                })?)
            };
        }
        limits.time_budget = self.time_budget_ms.map(Duration::from_millis);
        limits.validate().map_err(|e| DocumentError::Field { location: "limits".into(), message: e.to_string() })?;
        Ok(limits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DedupDocument {
    Labeled,
    #[serde(alias = "iso")]
    Isomorphism,
}

impl From<DedupDocument> for Dedup {
    fn from(d: DedupDocument) -> Self {
        match d {
            DedupDocument::Labeled => Dedup::Labeled,
            DedupDocument::Isomorphism => Dedup::Isomorphism,
        }
    }
}

impl From<Dedup> for DedupDocument {
    fn from(d: Dedup) -> Self {
        match d {
            Dedup::Labeled => DedupDocument::Labeled,
            Dedup::Isomorphism => DedupDocument::Isomorphism,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub visited: u64,
    pub dedup_mode: DedupDocument,
    pub exhausted: bool,
    pub witness: Option<Vec<String>>,
    pub truncated_by: Vec<String>,
    pub collected: Option<Vec<String>>,
}

impl From<&ExplorationReport> for ReportDocument {
    fn from(r: &ExplorationReport) -> Self {
        ReportDocument {
            visited: r.visited,
            dedup_mode: r.dedup_mode.into(),
            exhausted: r.exhausted,
            witness: r.witness.as_ref().map(|w| w.steps().iter().map(ToString::to_string).collect()),
            truncated_by: r.truncated_by.iter().map(|l| l.name().to_string()).collect(),
            collected: r
                .collected
                .as_ref()
                .map(|c: &BTreeSet<BigUint>| c.iter().map(ToString::to_string).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::QuiverBuilder;

    fn five_vertex() -> Quiver {
        QuiverBuilder::new()
            .mutable("A")
            .mutable("B")
            .mutable("C")
            .mutable("D")
            .mutable("E")
            .arrow("A", "B", 2)
            .arrow("B", "E", 3)
            .arrow("C", "B", 1)
            .arrow("E", "A", 1)
            .arrow("E", "D", 1)
            .build()
            .unwrap()
    }

    #[test]
    fn five_vertex_document() {
        let doc = QuiverDocument::from_quiver(&five_vertex());
        assert_eq!(doc.vertices.len(), 5);
        let weights: Vec<&str> = doc.arrows.iter().map(|a| a.weight.as_str()).collect();
        assert_eq!(weights, vec!["2", "3", "1", "1", "1"]);
        let bytes = serialize_quiver(&five_vertex());
        assert_eq!(parse_quiver(&bytes).unwrap(), five_vertex());
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("{\n  \"vertices\": [\n    {\n      \"id\": \"A\",\n      \"frozen\": false\n"));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn zero_weight_is_rejected_with_location() {
        let text = r#"{"vertices":[{"id":"A","frozen":false},{"id":"B","frozen":true}],
            "arrows":[{"from":"A","to":"B","weight":"0"}]}"#;
        let err = parse_quiver(text.as_bytes()).unwrap_err();
        assert_eq!(err.code(), "NonpositiveWeight");
        assert!(err.to_string().starts_with("arrows[0].weight"));
    }

    #[test]
    fn malformed_documents() {
        let err = parse_quiver(b"{\"vertices\": [}").unwrap_err();
        assert!(matches!(err, DocumentError::Syntax { line: 1, .. }));
        let text = r#"{"vertices":[{"id":"A","frozen":false}],"arrows":[{"from":"A","to":"Z","weight":"1"}]}"#;
        let err = parse_quiver(text.as_bytes()).unwrap_err();
        assert_eq!(err.code(), "UnknownVertex");
        assert!(err.to_string().starts_with("arrows[0].to"));
        let text = r#"{"vertices":[{"id":"A","frozen":false},{"id":"B","frozen":false}],
            "arrows":[{"from":"A","to":"B","weight":"1"},{"from":"B","to":"A","weight":"1"}]}"#;
        assert_eq!(parse_quiver(text.as_bytes()).unwrap_err().code(), "TwoCycleInInput");
        let text = r#"{"vertices":[{"id":"A","frozen":false},{"id":"B","frozen":false}],
            "arrows":[{"from":"A","to":"B","weight":"x"}]}"#;
        assert_eq!(parse_quiver(text.as_bytes()).unwrap_err().code(), "ParseError");
        let text = r#"{"vertices":[{"id":"A","frozen":false},{"id":"A","frozen":false}],"arrows":[]}"#;
        assert_eq!(parse_quiver(text.as_bytes()).unwrap_err().code(), "DuplicateVertex");
        let text = r#"{"vertices":[],"arrows":[]}"#;
        assert_eq!(parse_quiver(text.as_bytes()).unwrap_err().code(), "NoVertices");
    }

    #[test]
    fn forty_digit_multiplicity_round_trips() {
        let w: BigInt = "1234567890123456789012345678901234567890".parse().unwrap();
        let q = QuiverBuilder::new().frozen("A").mutable("B").arrow("B", "A", w).build().unwrap();
        assert_eq!(parse_quiver(&serialize_quiver(&q)).unwrap(), q);
    }

    #[test]
    fn predicate_wire_encoding() {
        let p: PredicateDocument = serde_json::from_str(r#"{"kind":"pair-exactly","k":"8"}"#).unwrap();
        assert_eq!(p.to_predicate().unwrap(), Predicate::PairExactlyK(BigUint::from(8u32)));
        let p: PredicateDocument = serde_json::from_str(r#"{"kind":"no-icebound"}"#).unwrap();
        assert_eq!(p.to_predicate().unwrap(), Predicate::NoIcebound);
        let p: PredicateDocument = serde_json::from_str(r#"{"kind":"collect","u":"A","v":"B"}"#).unwrap();
        assert!(matches!(p.to_predicate().unwrap(), Predicate::CollectPairMultiplicities(..)));
        assert_eq!(serde_json::to_string(&PredicateDocument::NoIcebound).unwrap(), r#"{"kind":"no-icebound"}"#);
    }

    #[test]
    fn limits_wire_encoding() {
        let l: LimitsDocument = serde_json::from_str(r#"{"max_states":10,"max_multiplicity":"unlimited"}"#).unwrap();
        let limits = l.to_limits().unwrap();
        assert_eq!(limits.max_states, 10);
        assert_eq!(limits.max_multiplicity, None);
        assert_eq!(LimitsDocument::default().to_limits().unwrap(), SearchLimits::default());
        let l: LimitsDocument = serde_json::from_str(r#"{"max_states":0}"#).unwrap();
        assert!(l.to_limits().is_err());
    }
}
