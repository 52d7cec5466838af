use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Number, Value};

use super::MappingError;
use crate::occi::{AttributeDef, DataType, DataTypeLookup, ExtensionSet, NamedDataType, NumericKind};
use crate::tosca::{scalar, ToscaConstraint, ToscaPropertyDef};

/// Datatypes created while mapping, interned by structure. Lookups fall back
/// to the base extension set so existing datatypes are reused.
#[derive(Clone, Debug)]
pub struct DataTypePool<'a> {
    base: Option<&'a ExtensionSet>,
    entries: Vec<NamedDataType>,
    /// TOSCA datatype name to OCCI datatype name, for mapped named datatypes.
    named: BTreeMap<String, String>,
}

impl DataTypeLookup for DataTypePool<'_> {
    fn datatype(&self, name: &str) -> Option<&DataType> {
        self.entries.datatype(name).or_else(|| self.base.and_then(|b| b.datatype(name)))
    }
}

impl<'a> DataTypePool<'a> {
    pub fn new(base: &'a ExtensionSet) -> Self {
        DataTypePool { base: Some(base), entries: Vec::new(), named: BTreeMap::new() }
    }

    /// A pool without base datatypes; primitives are created on demand.
    pub fn standalone() -> Self {
        DataTypePool { base: None, entries: Vec::new(), named: BTreeMap::new() }
    }

    pub fn entries(&self) -> &[NamedDataType] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<NamedDataType> {
        self.entries
    }

    pub fn named(&self, tosca_name: &str) -> Option<&str> {
        self.named.get(tosca_name).map(String::as_str)
    }

    pub fn bind_named(&mut self, tosca_name: &str, datatype: &str) {
        self.named.insert(tosca_name.to_string(), datatype.to_string());
    }

    fn base_entries(&self) -> impl Iterator<Item = &NamedDataType> {
        self.base.into_iter().flat_map(|b| b.extensions().iter().flat_map(|e| e.datatypes.iter()))
    }

    /// Returns the name of a datatype equal to `dt`, adding it under
    /// `preferred` (or `preferred_N` on a clash) when none exists. Base
    /// datatypes are matched by structure alone; generated ones must also
    /// carry the preferred name, so a size and a plain integer with the same
    /// bounds stay apart.
    pub fn intern(&mut self, preferred: &str, dt: DataType) -> String {
        let same_stem = |name: &str| {
            name == preferred
                || name
                    .strip_prefix(preferred)
                    .and_then(|s| s.strip_prefix('_'))
                    .is_some_and(|n| n.bytes().all(|b| b.is_ascii_digit()))
        };
        if let Some(existing) = self.base_entries().find(|d| d.datatype == dt) {
            return existing.name.clone();
        }
        if let Some(existing) = self.entries.iter().find(|d| d.datatype == dt && same_stem(&d.name)) {
            return existing.name.clone();
        }
        let mut name = preferred.to_string();
        let mut n = 2;
        while self.datatype(&name).is_some() {
            name = format!("{preferred}_{n}");
            n += 1;
        }
        self.entries.push(NamedDataType { name: name.clone(), datatype: dt });
        name
    }

    /// Adds `dt` under exactly `name`, unless that name is already taken by
    /// an equal datatype.
    pub fn insert_exact(&mut self, name: &str, dt: DataType) -> Result<(), MappingError> {
        match self.datatype(name) {
            Some(existing) if *existing == dt => Ok(()),
            Some(_) => Err(MappingError::TypeMapping {
                ty: name.to_string(),
                reason: "datatype name is already taken by a different datatype".into(),
            }),
            None => {
                self.entries.push(NamedDataType { name: name.to_string(), datatype: dt });
                Ok(())
            }
        }
    }
}

/// How a TOSCA value type is represented before constraints are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Base {
    String,
    Integer,
    Float,
    Boolean,
    Size,
    Frequency,
}

fn base_of(tosca_type: &str) -> Option<Base> {
    Some(match tosca_type {
        "string" | "version" | "timestamp" => Base::String,
        "integer" => Base::Integer,
        "float" => Base::Float,
        "boolean" => Base::Boolean,
        "scalar-unit.size" => Base::Size,
        "scalar-unit.frequency" => Base::Frequency,
        _ => return None,
    })
}

/// Reference to a named TOSCA datatype that is resolved once every named
/// datatype is mapped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Deferred {
    Named(String),
    ListOf(String),
    MapOf(String),
}

impl Deferred {
    pub fn tosca_name(&self) -> &str {
        match self {
            Deferred::Named(n) | Deferred::ListOf(n) | Deferred::MapOf(n) => n,
        }
    }

    /// Resolves against the named datatypes bound in `pool`.
    pub fn resolve(&self, pool: &mut DataTypePool<'_>) -> Option<String> {
        let inner = pool.named(self.tosca_name())?.to_string();
        Some(match self {
            Deferred::Named(_) => inner,
            Deferred::ListOf(_) => {
                pool.intern(&format!("{inner}Array"), DataType::ArrayType { element_type: inner.clone() })
            }
            Deferred::MapOf(_) => pool.intern(&format!("{inner}Map"), DataType::MapType { value_type: inner.clone() }),
        })
    }
}

/// Datatype name for a property, or the deferred reference to resolve later.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeRef {
    Ready(String),
    Deferred(Deferred),
}

fn number_tag(n: &Number) -> String {
    format!("{n}").replace('-', "Neg").replace('.', "_")
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

fn type_error(prop: &ToscaPropertyDef, reason: impl Into<String>) -> MappingError {
    MappingError::TypeMapping { ty: prop.name.clone(), reason: reason.into() }
}

fn scalar_operand(base: Base, value: &Value) -> Option<Number> {
    match base {
        Base::Integer => value.as_i64().map(Number::from),
        Base::Float => value.as_f64().and_then(Number::from_f64),
        Base::Size => scalar::size_to_mb(value).map(Number::from),
        Base::Frequency => scalar::frequency_to_mhz(value),
        Base::String | Base::Boolean => None,
    }
}

fn literal_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(_) | Value::Bool(_) => Some(value.to_string()),
        _ => None,
    }
}

/// Maps the value type of `prop`, folding its constraints into a datatype.
/// `is_named` tells whether a type name refers to a TOSCA datatype.
pub fn map_property_type(
    prop: &ToscaPropertyDef,
    pool: &mut DataTypePool<'_>,
    is_named: &dyn Fn(&str) -> bool,
) -> Result<TypeRef, MappingError> {
    let container = match prop.tosca_type.as_str() {
        "list" => Some(true),
        "map" => Some(false),
        _ => None,
    };
    if let Some(is_list) = container {
        if !prop.constraints.is_empty() {
            return Err(type_error(prop, "constraints on list and map properties are not supported"));
        }
        let entry = prop.entry_schema.as_deref().unwrap_or("string");
        let element = if let Some(base) = base_of(entry) {
            plain(base, pool)
        } else if is_named(entry) {
            let inner = match pool.named(entry) {
                Some(n) => n.to_string(),
                None => {
                    let n = entry.to_string();
                    return Ok(TypeRef::Deferred(if is_list { Deferred::ListOf(n) } else { Deferred::MapOf(n) }));
                }
            };
            inner
        } else {
            return Err(type_error(prop, format!("unknown entry type {entry:?}")));
        };
        let name = if is_list {
            pool.intern(&format!("{element}Array"), DataType::ArrayType { element_type: element.clone() })
        } else {
            pool.intern(&format!("{element}Map"), DataType::MapType { value_type: element.clone() })
        };
        return Ok(TypeRef::Ready(name));
    }

    let Some(base) = base_of(&prop.tosca_type) else {
        if !is_named(&prop.tosca_type) {
            return Err(type_error(prop, format!("unknown type {:?}", prop.tosca_type)));
        }
        if !prop.constraints.is_empty() {
            return Err(type_error(prop, "constraints on datatype-typed properties are not supported"));
        }
        return Ok(match pool.named(&prop.tosca_type) {
            Some(n) => TypeRef::Ready(n.to_string()),
            None => TypeRef::Deferred(Deferred::Named(prop.tosca_type.clone())),
        });
    };

    if prop.constraints.is_empty() {
        return Ok(TypeRef::Ready(plain(base, pool)));
    }

    if let Some(ToscaConstraint::ValidValues(values)) =
        prop.constraints.iter().find(|c| matches!(c, ToscaConstraint::ValidValues(_)))
    {
        let mut literals = Vec::new();
        for v in values {
            let v = match base {
                Base::Size => scalar::size_to_mb(v).map(Value::from),
                Base::Frequency => scalar::frequency_to_mhz(v).map(Value::Number),
                _ => Some(v.clone()),
            };
            let text =
                v.as_ref().and_then(literal_text).ok_or_else(|| type_error(prop, "invalid valid_values entry"))?;
            if !literals.contains(&text) {
                literals.push(text);
            }
        }
        let dt = DataType::EnumerationType { literals };
        dt.check_definition().map_err(|r| type_error(prop, r))?;
        return Ok(TypeRef::Ready(pool.intern(&format!("{}Enum", sanitize(&prop.name)), dt)));
    }

    let numeric = matches!(base, Base::Integer | Base::Float | Base::Size | Base::Frequency);
    let (mut min, mut max) = (None, None);
    let (mut pattern, mut min_len, mut max_len) = (None, None, None);
    for c in &prop.constraints {
        let bad = || type_error(prop, format!("{} is incompatible with type {}", c.operator(), prop.tosca_type));
        match c {
            ToscaConstraint::ValidValues(_) => {}
            ToscaConstraint::GreaterOrEqual(v) if numeric => min = Some(scalar_operand(base, v).ok_or_else(bad)?),
            ToscaConstraint::LessOrEqual(v) if numeric => max = Some(scalar_operand(base, v).ok_or_else(bad)?),
            ToscaConstraint::InRange(lo, hi) if numeric => {
                min = Some(scalar_operand(base, lo).ok_or_else(bad)?);
                max = Some(scalar_operand(base, hi).ok_or_else(bad)?);
            }
            ToscaConstraint::MinLength(n) if base == Base::String => min_len = Some(*n),
            ToscaConstraint::MaxLength(n) if base == Base::String => max_len = Some(*n),
            ToscaConstraint::Pattern(p) if base == Base::String => pattern = Some(p.clone()),
            _ => return Err(bad()),
        }
    }

    let (dt, name) = if numeric {
        let (kind, stem, unit) = match base {
            Base::Integer => (NumericKind::Integer, "integer", ""),
            Base::Float => (NumericKind::Float, "float", ""),
            Base::Size => (NumericKind::Integer, "scalarSize", "MB"),
            _ => (NumericKind::Float, "scalarFrequency", "MHz"),
        };
        let mut name = String::from(stem);
        if let Some(n) = &min {
            name.push_str(&format!("Min{}{unit}", number_tag(n)));
        }
        if let Some(n) = &max {
            name.push_str(&format!("Max{}{unit}", number_tag(n)));
        }
        (DataType::NumericType { numeric_kind: kind, min_inclusive: min, max_inclusive: max }, name)
    } else {
        let mut name = match &pattern {
            Some(_) => format!("{}Pattern", sanitize(&prop.name)),
            None => String::from("string"),
        };
        if let Some(n) = min_len {
            name.push_str(&format!("MinLength{n}"));
        }
        if let Some(n) = max_len {
            name.push_str(&format!("MaxLength{n}"));
        }
        (DataType::StringType { pattern, min_length: min_len, max_length: max_len }, name)
    };
    dt.check_definition().map_err(|r| type_error(prop, r))?;
    Ok(TypeRef::Ready(pool.intern(&name, dt)))
}

fn plain(base: Base, pool: &mut DataTypePool<'_>) -> String {
    let (name, dt) = match base {
        Base::String => ("string", DataType::plain_string()),
        Base::Integer | Base::Size => ("integer", DataType::numeric(NumericKind::Integer)),
        Base::Float | Base::Frequency => ("float", DataType::numeric(NumericKind::Float)),
        Base::Boolean => ("boolean", DataType::BooleanType),
    };
    pool.intern(name, dt)
}

/// Normalizes a value of a TOSCA type: sizes become megabytes, frequencies
/// megahertz, list and map entries are normalized by their entry schema.
pub fn normalize_value(tosca_type: &str, entry_schema: Option<&str>, value: &Value) -> Value {
    match (tosca_type, value) {
        ("scalar-unit.size", v) => scalar::size_to_mb(v).map(Value::from).unwrap_or_else(|| v.clone()),
        ("scalar-unit.frequency", v) => scalar::frequency_to_mhz(v).map(Value::Number).unwrap_or_else(|| v.clone()),
        ("list", Value::Array(items)) => {
            let entry = entry_schema.unwrap_or("string");
            Value::Array(items.iter().map(|i| normalize_value(entry, None, i)).collect())
        }
        ("map", Value::Object(entries)) => {
            let entry = entry_schema.unwrap_or("string");
            Value::Object(entries.iter().map(|(k, v)| (k.clone(), normalize_value(entry, None, v))).collect())
        }
        _ => value.clone(),
    }
}

/// Maps a property definition with a ready datatype into an attribute.
/// Deferred references must be resolved first; see [`map_property_type`].
pub fn map_property(
    prop: &ToscaPropertyDef,
    pool: &mut DataTypePool<'_>,
    is_named: &dyn Fn(&str) -> bool,
) -> Result<(AttributeDef, Option<Deferred>), MappingError> {
    let (datatype, deferred) = match map_property_type(prop, pool, is_named)? {
        TypeRef::Ready(name) => (name, None),
        TypeRef::Deferred(d) => (d.tosca_name().to_string(), Some(d)),
    };
    let attr = AttributeDef {
        name: prop.name.clone(),
        datatype,
        required: prop.required,
        mutable: true,
        default: prop.default.as_ref().map(|d| normalize_value(&prop.tosca_type, prop.entry_schema.as_deref(), d)),
        description: prop.description.clone(),
    };
    Ok((attr, deferred))
}
