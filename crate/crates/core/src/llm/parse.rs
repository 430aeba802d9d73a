//! Tolerant extraction of judgment JSON from raw model output.
//!
//! Models wrap JSON in prose and code fences; the parser takes the first
//! balanced top-level object that parses, coerces numeric fields from
//! numbers or numeric strings, and range-checks everything against the
//! declared schema.

use super::LlmError;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedField {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub required: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectedSchema {
    pub fields: Vec<ExpectedField>,
}

impl ExpectedSchema {
    pub fn field(mut self, name: &str, min: f64, max: f64, required: bool) -> Self {
        self.fields.push(ExpectedField {
            name: name.to_string(),
            min,
            max,
            required,
        });
        self
    }
}

/// Extracted numeric fields plus the rationale text, which is kept for
/// audit and never featurized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedJudgment {
    pub values: BTreeMap<String, f64>,
    pub rationale: Option<String>,
}

/// Yield the byte ranges of balanced top-level `{...}` objects.
fn balanced_objects(raw: &str) -> Vec<&str> {
    let bytes = raw.as_bytes();
    let mut candidates = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' if depth > 0 => in_string = true,
            b'{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            b'}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    candidates.push(&raw[start..=i]);
                }
            }
            _ => {}
        }
    }
    candidates
}

fn coerce_number(value: &serde_json::Value) -> Option<f64> {
    match value {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    }
}

fn lookup<'a>(
    object: &'a serde_json::Map<String, serde_json::Value>,
    name: &str,
) -> Option<&'a serde_json::Value> {
    object.get(name).or_else(|| {
        object
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
    })
}

/// Parse raw model output against the expected field schema.
pub fn parse_judgment_json(
    raw: &str,
    expected: &ExpectedSchema,
) -> Result<ParsedJudgment, LlmError> {
    let object = balanced_objects(raw)
        .into_iter()
        .find_map(|candidate| {
            serde_json::from_str::<serde_json::Value>(candidate)
                .ok()
                .and_then(|v| match v {
                    serde_json::Value::Object(map) => Some(map),
                    _ => None,
                })
        })
        .ok_or(LlmError::NoJsonObject)?;
    let mut parsed = ParsedJudgment::default();
    for field in &expected.fields {
        match lookup(&object, &field.name) {
            Some(value) => {
                let number = coerce_number(value).ok_or_else(|| LlmError::MissingField {
                    field: field.name.clone(),
                })?;
                if number < field.min || number > field.max {
                    return Err(LlmError::OutOfRange {
                        field: field.name.clone(),
                        value: number,
                        min: field.min,
                        max: field.max,
                    });
                }
                parsed.values.insert(field.name.clone(), number);
            }
            None if field.required => {
                return Err(LlmError::MissingField {
                    field: field.name.clone(),
                })
            }
            None => {}
        }
    }
    if let Some(serde_json::Value::String(text)) = lookup(&object, "Rationale") {
        parsed.rationale = Some(text.clone());
    }
    Ok(parsed)
}
