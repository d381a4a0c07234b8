//! JSON file formats read and written by the command-line tool.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apparatus::Transcript;
use crate::function_specs::{FunctionSpec, SpecError, TruthTable};
use crate::protocol::{ExecutionTrace, ProtocolKind, ProtocolPlan, ResourceCount, View, Weighing};
use crate::verification::VerificationReport;

/// Plans are stored exactly as compiled.
pub type PlanDocument = ProtocolPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecType {
    And,
    Threshold,
    Symmetric,
    TruthTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    #[serde(rename = "type")]
    pub kind: SpecType,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ones: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("spec of type {kind:?} requires field `{field}`")]
    MissingField { kind: SpecType, field: &'static str },
    #[error("spec of type {kind:?} must not have field `{field}`")]
    UnexpectedField { kind: SpecType, field: &'static str },
    #[error("duplicate entry {0:?} in spec")]
    Duplicate(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

impl SpecDocument {
    pub fn to_spec(&self) -> Result<FunctionSpec, DocumentError> {
        let kind = self.kind;
        let required: &[&'static str] = match kind {
            SpecType::And => &[],
            SpecType::Threshold => &["k"],
            SpecType::Symmetric => &["x_set"],
            SpecType::TruthTable => &["ones"],
        };
        for (field, present) in [
            ("k", self.k.is_some()),
            ("x_set", self.x_set.is_some()),
            ("ones", self.ones.is_some()),
        ] {
            match (required.contains(&field), present) {
                (true, false) => return Err(DocumentError::MissingField { kind, field }),
                (false, true) => return Err(DocumentError::UnexpectedField { kind, field }),
                _ => {}
            }
        }
        let spec = match kind {
            SpecType::And => FunctionSpec::and(self.n)?,
            SpecType::Threshold => FunctionSpec::threshold(self.n, self.k.unwrap_or_default())?,
            SpecType::Symmetric => {
                let set = self.x_set.as_deref().unwrap_or_default();
                if let Some(d) = first_duplicate(set.iter().map(|s| s.to_string())) {
                    return Err(DocumentError::Duplicate(d));
                }
                FunctionSpec::symmetric(self.n, set.iter().copied())?
            }
            SpecType::TruthTable => {
                let rows = self.ones.as_deref().unwrap_or_default();
                if let Some(d) = first_duplicate(rows.iter().cloned()) {
                    return Err(DocumentError::Duplicate(d));
                }
                FunctionSpec::TruthTable(TruthTable::from_bitstrings(self.n, rows)?)
            }
        };
        Ok(spec)
    }

    pub fn from_spec(spec: &FunctionSpec) -> Self {
        let n = spec.n();
        let blank = SpecDocument {
            kind: SpecType::And,
            n,
            k: None,
            x_set: None,
            ones: None,
        };
        match spec {
            FunctionSpec::And { .. } => blank,
            FunctionSpec::Threshold { k, .. } => SpecDocument {
                kind: SpecType::Threshold,
                k: Some(*k),
                ..blank
            },
            FunctionSpec::Symmetric { sums, .. } => SpecDocument {
                kind: SpecType::Symmetric,
                x_set: Some(sums.iter().copied().collect()),
                ..blank
            },
            FunctionSpec::TruthTable(t) => SpecDocument {
                kind: SpecType::TruthTable,
                ones: Some(t.ones().iter().map(|a| a.to_bitstring(n)).collect()),
                ..blank
            },
        }
    }
}

fn first_duplicate(items: impl Iterator<Item = String>) -> Option<String> {
    let mut seen = std::collections::BTreeSet::new();
    items.into_iter().find(|i| !seen.insert(i.clone()))
}

/// Parts of a run that are not publicly observable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenTrace {
    pub inputs: String,
    pub seed: u64,
    pub transcript: Transcript,
    pub events: Vec<Weighing>,
    pub raw_output: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub view: View,
    pub output: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<HiddenTrace>,
}

impl TraceDocument {
    pub fn new(plan: &ProtocolPlan, trace: &ExecutionTrace, reveal: Option<(&str, u64)>) -> Self {
        TraceDocument {
            protocol: plan.kind,
            n: plan.n,
            view: trace.view.clone(),
            output: u8::from(trace.output),
            hidden: reveal.map(|(inputs, seed)| HiddenTrace {
                inputs: inputs.to_owned(),
                seed,
                transcript: trace.transcript.clone(),
                events: trace.events.clone(),
                raw_output: trace.raw_output,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub spec: SpecDocument,
    pub protocol: ProtocolKind,
    pub resources: ResourceCount,
    pub passed: bool,
    pub reports: Vec<VerificationReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::compile;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<FunctionSpec, String> {
        let doc: SpecDocument = serde_json::from_str(text).map_err(|e| e.to_string())?;
        doc.to_spec().map_err(|e| e.to_string())
    }

    #[test]
    fn parses_each_type() {
        assert_eq!(
            parse(r#"{"type":"and","n":3}"#),
            Ok(FunctionSpec::And { n: 3 })
        );
        assert_eq!(
            parse(r#"{"type":"threshold","n":3,"k":2}"#),
            Ok(FunctionSpec::Threshold { n: 3, k: 2 })
        );
        assert_eq!(
            parse(r#"{"type":"symmetric","n":3,"x_set":[3,1]}"#),
            FunctionSpec::symmetric(3, [1, 3]).map_err(|e| e.to_string())
        );
        let t = parse(r#"{"type":"truth_table","n":2,"ones":["10","11"]}"#).unwrap();
        assert_eq!(
            t,
            FunctionSpec::TruthTable(TruthTable::from_bitstrings(2, ["10", "11"]).unwrap())
        );
    }

    #[test]
    fn rejects_invalid_documents() {
        for (text, needle) in [
            (r#"{"type":"threshold","n":3}"#, "requires field `k`"),
            (r#"{"type":"and","n":3,"k":1}"#, "must not have field `k`"),
            (r#"{"type":"threshold","n":3,"k":4}"#, "1 <= k <= n"),
            (r#"{"type":"and","n":0}"#, "at least 1"),
            (r#"{"type":"symmetric","n":2,"x_set":[3]}"#, "outside 0..=2"),
            (r#"{"type":"symmetric","n":2,"x_set":[1,1]}"#, "duplicate"),
            (
                r#"{"type":"truth_table","n":2,"ones":["1"]}"#,
                "exactly 2 characters",
            ),
            (
                r#"{"type":"truth_table","n":2,"ones":["1a"]}"#,
                "'0' and '1'",
            ),
            (r#"{"type":"and","n":2,"extra":1}"#, "unknown field"),
            (r#"{"type":"xor","n":2}"#, "unknown variant"),
        ] {
            let err = parse(text).unwrap_err();
            assert!(err.contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn plan_document_round_trips() {
        for spec in [
            FunctionSpec::and(3).unwrap(),
            FunctionSpec::threshold(4, 2).unwrap(),
            FunctionSpec::symmetric(4, [0, 1, 3, 4]).unwrap(),
            FunctionSpec::TruthTable(TruthTable::from_bitstrings(2, ["10", "11"]).unwrap()),
        ] {
            let plan = compile(&spec).unwrap();
            let text = serde_json::to_string(&plan).unwrap();
            let back: PlanDocument = serde_json::from_str(&text).unwrap();
            assert_eq!(back, plan);
        }
    }

    proptest! {
        #[test]
        fn spec_document_round_trips(n in 1usize..6, mask in any::<u32>(), k in 1usize..6, pick in 0u8..4) {
            let spec = match pick {
                0 => FunctionSpec::and(n).unwrap(),
                1 => FunctionSpec::threshold(n, k.min(n)).unwrap(),
                2 => FunctionSpec::symmetric(n, (0..=n).filter(|s| mask >> s & 1 == 1)).unwrap(),
                _ => FunctionSpec::TruthTable(TruthTable::new(
                    n,
                    crate::function_specs::Assignment::all(n).filter(|a| mask >> a.0 & 1 == 1),
                ).unwrap()),
            };
            let doc = SpecDocument::from_spec(&spec);
            let text = serde_json::to_string(&doc).unwrap();
            let back: SpecDocument = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&back, &doc);
            prop_assert_eq!(back.to_spec().unwrap(), spec);
        }
    }
}
