//! Feature views for ablation: which attribute slots get the global vector
//! in place of their own features.

use crate::datasets::FeatureRecord;
use crate::error::{F2sError, Result};
use crate::model::{ModelConfig, GLOBAL_FEATURE};

pub trait FeatureView: Send + Sync {
    /// Variant label as written on the command line.
    fn name(&self) -> String;

    /// Whether attribute `attr` is replaced by the global features.
    fn replaces(&self, attr: &str) -> bool;
}

pub struct Complete;

impl FeatureView for Complete {
    fn name(&self) -> String {
        "complete".into()
    }

    fn replaces(&self, _attr: &str) -> bool {
        false
    }
}

pub struct NoAttributes;

impl FeatureView for NoAttributes {
    fn name(&self) -> String {
        "none".into()
    }

    fn replaces(&self, _attr: &str) -> bool {
        true
    }
}

pub struct WithoutAttribute(pub String);

impl FeatureView for WithoutAttribute {
    fn name(&self) -> String {
        format!("attr:{}", self.0)
    }

    fn replaces(&self, attr: &str) -> bool {
        attr == self.0
    }
}

/// Parses `complete`, `none` or `attr:<name>`; the name must be one of
/// `attributes`.
pub fn parse_view(variant: &str, attributes: &[String]) -> Result<Box<dyn FeatureView>> {
    match variant {
        "complete" => Ok(Box::new(Complete)),
        "none" => Ok(Box::new(NoAttributes)),
        _ => match variant.strip_prefix("attr:") {
            Some(name) if attributes.iter().any(|a| a == name) => Ok(Box::new(WithoutAttribute(name.into()))),
            Some(name) => Err(F2sError::config(format!(
                "unknown attribute {name:?}; known: {}",
                attributes.join(", ")
            ))),
            None => Err(F2sError::config(format!(
                "unknown variant {variant:?}; expected complete, none or attr:<name>"
            ))),
        },
    }
}

/// The model config with replaced attributes re-dimensioned to the global
/// feature size.
pub fn view_config(view: &dyn FeatureView, config: &ModelConfig) -> ModelConfig {
    let mut out = config.clone();
    for (name, dim) in config.attribute_names.iter().zip(out.attribute_dims.iter_mut()) {
        if view.replaces(name) {
            *dim = config.global_dim;
        }
    }
    out
}

pub fn view_record(view: &dyn FeatureView, record: &FeatureRecord, attributes: &[String]) -> Result<FeatureRecord> {
    let mut out = record.clone();
    let global = record.global()?.clone();
    for name in attributes.iter().filter(|n| view.replaces(n)) {
        out.features.insert(name.clone(), global.clone());
    }
    debug_assert!(out.features.contains_key(GLOBAL_FEATURE));
    Ok(out)
}

pub fn view_records(view: &dyn FeatureView, records: &[FeatureRecord], attributes: &[String]) -> Result<Vec<FeatureRecord>> {
    records.iter().map(|r| view_record(view, r, attributes)).collect()
}
