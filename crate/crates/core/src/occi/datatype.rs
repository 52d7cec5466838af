use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use regex_automata::meta::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

/// Numeric flavour of a [`DataType::NumericType`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericKind {
    Integer,
    Float,
    Short,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordField {
    pub name: String,
    pub datatype: String,
}

/// Exact type of an attribute value. Composite variants refer to other
/// datatypes by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all_fields = "camelCase")]
pub enum DataType {
    StringType {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_length: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_length: Option<u64>,
    },
    NumericType {
        numeric_kind: NumericKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_inclusive: Option<Number>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_inclusive: Option<Number>,
    },
    BooleanType,
    EnumerationType {
        literals: Vec<String>,
    },
    ArrayType {
        element_type: String,
    },
    MapType {
        value_type: String,
    },
    RecordType {
        record_fields: Vec<RecordField>,
    },
}

impl DataType {
    pub fn plain_string() -> Self {
        DataType::StringType { pattern: None, min_length: None, max_length: None }
    }

    pub fn numeric(kind: NumericKind) -> Self {
        DataType::NumericType { numeric_kind: kind, min_inclusive: None, max_inclusive: None }
    }

    /// Names of the datatypes this one refers to.
    pub fn references(&self) -> Vec<&str> {
        match self {
            DataType::ArrayType { element_type } => alloc::vec![element_type.as_str()],
            DataType::MapType { value_type } => alloc::vec![value_type.as_str()],
            DataType::RecordType { record_fields } => record_fields.iter().map(|f| f.datatype.as_str()).collect(),
            _ => Vec::new(),
        }
    }

    /// Checks the definition-level invariants, returning a description of the
    /// first problem found.
    pub fn check_definition(&self) -> Result<(), String> {
        match self {
            DataType::StringType { pattern: Some(p), min_length, max_length } => {
                if let (Some(lo), Some(hi)) = (min_length, max_length) {
                    if lo > hi {
                        return Err(format!("minLength {lo} exceeds maxLength {hi}"));
                    }
                }
                compile_anchored(p).map(|_| ()).ok_or_else(|| format!("invalid pattern {p:?}"))
            }
            DataType::StringType { pattern: None, min_length: Some(lo), max_length: Some(hi) } if lo > hi => {
                Err(format!("minLength {lo} exceeds maxLength {hi}"))
            }
            DataType::NumericType { min_inclusive: Some(lo), max_inclusive: Some(hi), .. } => {
                match (lo.as_f64(), hi.as_f64()) {
                    (Some(l), Some(h)) if l > h => Err(format!("minInclusive {lo} exceeds maxInclusive {hi}")),
                    _ => Ok(()),
                }
            }
            DataType::EnumerationType { literals } => {
                if literals.is_empty() {
                    return Err("enumeration has no literals".into());
                }
                let distinct: BTreeSet<&String> = literals.iter().collect();
                if distinct.len() != literals.len() {
                    return Err("enumeration literals are not distinct".into());
                }
                Ok(())
            }
            DataType::RecordType { record_fields } => {
                if record_fields.is_empty() {
                    return Err("record type has no fields".into());
                }
                let distinct: BTreeSet<&String> = record_fields.iter().map(|f| &f.name).collect();
                if distinct.len() != record_fields.len() {
                    return Err("record field names are not distinct".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A datatype declared by an extension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedDataType {
    pub name: String,
    #[serde(flatten)]
    pub datatype: DataType,
}

/// Resolves datatype names, e.g. against an extension set or a mapping pool.
pub trait DataTypeLookup {
    fn datatype(&self, name: &str) -> Option<&DataType>;
}

impl DataTypeLookup for [NamedDataType] {
    fn datatype(&self, name: &str) -> Option<&DataType> {
        self.iter().find(|d| d.name == name).map(|d| &d.datatype)
    }
}

impl DataTypeLookup for Vec<NamedDataType> {
    fn datatype(&self, name: &str) -> Option<&DataType> {
        self.as_slice().datatype(name)
    }
}

pub(crate) fn compile_anchored(pattern: &str) -> Option<Regex> {
    Regex::new(&format!("^(?:{pattern})$")).ok()
}

fn literal_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(format!("{n}")),
        Value::Bool(b) => Some(format!("{b}")),
        _ => None,
    }
}

fn integral(n: &Number) -> Option<i64> {
    if let Some(i) = n.as_i64() {
        return Some(i);
    }
    let f = n.as_f64()?;
    if f >= i64::MIN as f64 && f <= i64::MAX as f64 && (f as i64) as f64 == f {
        Some(f as i64)
    } else {
        None
    }
}

/// Returns true iff `value` conforms to `datatype`. Named references inside
/// composite types are resolved through `lookup`; an unresolvable reference
/// never conforms.
pub fn check_datatype(value: &Value, datatype: &DataType, lookup: &(impl DataTypeLookup + ?Sized)) -> bool {
    match datatype {
        DataType::StringType { pattern, min_length, max_length } => {
            let Value::String(s) = value else { return false };
            let len = s.chars().count() as u64;
            if min_length.is_some_and(|lo| len < lo) || max_length.is_some_and(|hi| len > hi) {
                return false;
            }
            match pattern {
                Some(p) => compile_anchored(p).is_some_and(|re| re.is_match(s.as_str())),
                None => true,
            }
        }
        DataType::NumericType { numeric_kind, min_inclusive, max_inclusive } => {
            let Value::Number(n) = value else { return false };
            let in_kind = match numeric_kind {
                NumericKind::Float => true,
                NumericKind::Integer => integral(n).is_some(),
                NumericKind::Short => integral(n).is_some_and(|i| i16::try_from(i).is_ok()),
            };
            let Some(x) = n.as_f64() else { return false };
            in_kind
                && min_inclusive.as_ref().and_then(Number::as_f64).is_none_or(|lo| x >= lo)
                && max_inclusive.as_ref().and_then(Number::as_f64).is_none_or(|hi| x <= hi)
        }
        DataType::BooleanType => value.is_boolean(),
        DataType::EnumerationType { literals } => literal_text(value).is_some_and(|text| literals.contains(&text)),
        DataType::ArrayType { element_type } => {
            let Value::Array(items) = value else { return false };
            let Some(element) = lookup.datatype(element_type) else { return false };
            items.iter().all(|item| check_datatype(item, element, lookup))
        }
        DataType::MapType { value_type } => {
            let Value::Object(entries) = value else { return false };
            let Some(inner) = lookup.datatype(value_type) else { return false };
            entries.values().all(|v| check_datatype(v, inner, lookup))
        }
        DataType::RecordType { record_fields } => {
            let Value::Object(entries) = value else { return false };
            entries.iter().all(|(key, v)| {
                record_fields
                    .iter()
                    .find(|f| f.name == *key)
                    .and_then(|f| lookup.datatype(&f.datatype))
                    .is_some_and(|dt| check_datatype(v, dt, lookup))
            })
        }
    }
}
