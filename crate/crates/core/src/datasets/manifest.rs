//! JSON-Lines manifests.
//!
//! The first line is a header object:
//!
//! ```json
//! {"attribute_order": ["color", "light"], "label_scale": 0.1, "label_offset": 0.0}
//! ```
//!
//! Every following line is one record. Feature paths are relative to the
//! manifest's directory:
//!
//! ```json
//! {"id": "img1", "overall": 5.5, "attributes": {"color": 6.0},
//!  "features": {"global": "f/img1_global.f2sf", "color": "f/img1_color.f2sf", "light": "f/img1_light.f2sf"}}
//! ```
//!
//! `overall` (and any attribute labels) are raw dataset values; loading maps
//! them into model score units with `value * scale + offset`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::feature_file::read_feature_file;
use super::record::FeatureRecord;
use crate::error::{F2sError, Result};
use crate::model::{BucketGrid, ModelConfig, GLOBAL_FEATURE};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub attribute_order: Vec<String>,
    #[serde(default = "one")]
    pub label_scale: f64,
    #[serde(default)]
    pub label_offset: f64,
    /// Affine for attribute labels; falls back to the overall-label affine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_offset: Option<f64>,
}

impl ManifestHeader {
    pub fn new(attribute_order: Vec<String>) -> Self {
        ManifestHeader {
            attribute_order,
            label_scale: 1.0,
            label_offset: 0.0,
            attribute_scale: None,
            attribute_offset: None,
        }
    }

    pub fn map_overall(&self, raw: f64) -> f64 {
        raw * self.label_scale + self.label_offset
    }

    pub fn map_attribute(&self, raw: f64) -> f64 {
        raw * self.attribute_scale.unwrap_or(self.label_scale)
            + self.attribute_offset.unwrap_or(self.label_offset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub overall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<BTreeMap<String, f64>>,
    pub features: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
    /// Directory feature paths are resolved against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| F2sError::io(path, e))?;
        let json_err = |line: usize, e: serde_json::Error| {
            F2sError::data(format!("{}: line {line}: {e}", path.display()))
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, htext) = lines
            .next()
            .ok_or_else(|| F2sError::data(format!("{}: empty manifest", path.display())))?;
        let header: ManifestHeader = serde_json::from_str(htext).map_err(|e| json_err(hline + 1, e))?;
        if !(header.label_scale.is_finite() && header.label_offset.is_finite()) {
            return Err(F2sError::data("label affine must be finite"));
        }
        let entries = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| json_err(i + 1, e)))
            .collect::<Result<Vec<ManifestEntry>>>()?;
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(F2sError::data(format!("duplicate record id {}", e.id)));
            }
        }
        Ok(Manifest {
            header,
            entries,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        writeln!(buf, "{}", to_line(&self.header)).unwrap();
        for e in &self.entries {
            writeln!(buf, "{}", to_line(e)).unwrap();
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| F2sError::io(parent, e))?;
        }
        fs::write(path, buf).map_err(|e| F2sError::io(path, e))
    }

    /// Reads every feature file and maps labels into model units. Records
    /// come back in manifest order.
    pub fn load(&self, grid: &BucketGrid) -> Result<Dataset> {
        let header = &self.header;
        let records = self
            .entries
            .par_iter()
            .map(|entry| self.load_entry(entry))
            .collect::<Result<Vec<_>>>()?;
        let dataset = Dataset {
            attribute_order: header.attribute_order.clone(),
            records,
        };
        dataset.check_consistent(grid)?;
        Ok(dataset)
    }

    fn load_entry(&self, entry: &ManifestEntry) -> Result<FeatureRecord> {
        let header = &self.header;
        let mut features = BTreeMap::new();
        let required = std::iter::once(GLOBAL_FEATURE).chain(header.attribute_order.iter().map(String::as_str));
        for name in required {
            let rel = entry.features.get(name).ok_or_else(|| {
                F2sError::data(format!("record {}: no feature file for {name}", entry.id))
            })?;
            let v = read_feature_file(self.base_dir.join(rel)).map_err(|e| {
                F2sError::data(format!("record {}: feature {name}: {e}", entry.id))
            })?;
            features.insert(name.to_string(), v);
        }
        let attr_labels = entry
            .attributes
            .iter()
            .flatten()
            .map(|(k, v)| (k.clone(), header.map_attribute(*v)))
            .collect();
        Ok(FeatureRecord {
            id: entry.id.clone(),
            overall: header.map_overall(entry.overall),
            attr_labels,
            features,
        })
    }
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("manifest types always serialize")
}

/// Loaded records plus their declared attribute order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub attribute_order: Vec<String>,
    pub records: Vec<FeatureRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn global_dim(&self) -> Option<usize> {
        self.records.first().and_then(|r| r.global().ok()).map(|g| g.len())
    }

    pub fn attribute_dims(&self) -> Option<Vec<usize>> {
        let first = self.records.first()?;
        self.attribute_order
            .iter()
            .map(|n| first.feature(n).ok().map(|f| f.len()))
            .collect()
    }

    /// Every record has the same dims as the first, and every overall label
    /// is inside the grid's score range.
    pub fn check_consistent(&self, grid: &BucketGrid) -> Result<()> {
        let (Some(g), Some(dims)) = (self.global_dim(), self.attribute_dims()) else {
            return Ok(());
        };
        for r in &self.records {
            let gl = r.global()?.len();
            if gl != g {
                return Err(F2sError::data(format!(
                    "record {}: global feature has dim {gl}, expected {g}",
                    r.id
                )));
            }
            for (name, &d) in self.attribute_order.iter().zip(&dims) {
                let l = r.feature(name)?.len();
                if l != d {
                    return Err(F2sError::data(format!(
                        "record {}: attribute {name} has dim {l}, expected {d}",
                        r.id
                    )));
                }
            }
            if !r.overall.is_finite() || !grid.contains_score(r.overall) {
                return Err(F2sError::data(format!(
                    "record {}: mapped overall {} outside score range [{}, {}]",
                    r.id,
                    r.overall,
                    grid.min_score(),
                    grid.max_score()
                )));
            }
        }
        Ok(())
    }

    /// Checks attribute order and every record against `config`.
    pub fn check_against(&self, config: &ModelConfig) -> Result<()> {
        if self.attribute_order != config.attribute_names {
            return Err(F2sError::data(format!(
                "attribute order {:?} does not match model order {:?}",
                self.attribute_order, config.attribute_names
            )));
        }
        self.records.iter().try_for_each(|r| r.validate(config))
    }
}

/// Loads a manifest and validates it against `config`.
pub fn load_manifest(path: impl AsRef<Path>, config: &ModelConfig) -> Result<Vec<FeatureRecord>> {
    let dataset = Manifest::read(path)?.load(&config.grid)?;
    dataset.check_against(config)?;
    Ok(dataset.records)
}
