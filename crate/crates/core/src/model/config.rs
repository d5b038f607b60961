use serde::{Deserialize, Serialize};

use crate::error::{F2sError, Result};

/// Name of the head that stands in for every attribute not modelled explicitly.
pub const EXTRA_HEAD: &str = "extra";
/// Reserved feature name for the global feature vector.
pub const GLOBAL_FEATURE: &str = "global";

/// Ascending bucket scores `s_1 < … < s_Nb`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BucketGrid {
    values: Vec<f64>,
}

impl BucketGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(F2sError::config("bucket grid needs at least two buckets"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(F2sError::config("bucket grid values must be finite"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(F2sError::config("bucket grid must be strictly ascending"));
        }
        Ok(BucketGrid { values })
    }

    /// Integer buckets `lo..=hi`.
    pub fn integer_range(lo: i32, hi: i32) -> Result<Self> {
        BucketGrid::new((lo..=hi).map(f64::from).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lowest attainable score, `s_1 / Nb`.
    pub fn min_score(&self) -> f64 {
        self.values[0] / self.len() as f64
    }

    /// Highest attainable score, `s_Nb / Nb`.
    pub fn max_score(&self) -> f64 {
        self.values[self.len() - 1] / self.len() as f64
    }

    pub fn contains_score(&self, s: f64) -> bool {
        s >= self.min_score() && s <= self.max_score()
    }
}

impl Default for BucketGrid {
    fn default() -> Self {
        BucketGrid::integer_range(1, 10).expect("1..10 is a valid grid")
    }
}

impl TryFrom<Vec<f64>> for BucketGrid {
    type Error = F2sError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        BucketGrid::new(v)
    }
}

impl From<BucketGrid> for Vec<f64> {
    fn from(g: BucketGrid) -> Vec<f64> {
        g.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub attribute_names: Vec<String>,
    pub include_extra: bool,
    pub global_dim: usize,
    pub attribute_dims: Vec<usize>,
    pub hidden: usize,
    pub grid: BucketGrid,
    /// Offset inside the prior weights, `softmax(sigmoid(x) + sigma)`.
    pub sigma: f64,
}

impl ModelConfig {
    /// Config with the default head width, the 1..10 grid and sigma = 1.
    pub fn new(
        attribute_names: Vec<String>,
        global_dim: usize,
        attribute_dims: Vec<usize>,
    ) -> Result<Self> {
        let cfg = ModelConfig {
            attribute_names,
            include_extra: true,
            global_dim,
            attribute_dims,
            hidden: 128,
            grid: BucketGrid::default(),
            sigma: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attribute_names.len() != self.attribute_dims.len() {
            return Err(F2sError::config(format!(
                "{} attribute names but {} attribute dims",
                self.attribute_names.len(),
                self.attribute_dims.len()
            )));
        }
        if self.num_heads() == 0 {
            return Err(F2sError::config("model needs at least one head"));
        }
        if self.global_dim == 0 || self.hidden == 0 || self.attribute_dims.contains(&0) {
            return Err(F2sError::config("feature dims and hidden width must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(F2sError::config("sigma must be positive"));
        }
        for (i, name) in self.attribute_names.iter().enumerate() {
            if name.is_empty() || name == EXTRA_HEAD || name == GLOBAL_FEATURE {
                return Err(F2sError::config(format!("invalid attribute name {name:?}")));
            }
            if self.attribute_names[..i].contains(name) {
                return Err(F2sError::config(format!("duplicate attribute name {name}")));
            }
        }
        Ok(())
    }

    pub fn num_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    /// `A` plus one when the extra head is enabled.
    pub fn num_heads(&self) -> usize {
        self.attribute_names.len() + usize::from(self.include_extra)
    }

    pub fn head_names(&self) -> Vec<String> {
        let mut names = self.attribute_names.clone();
        if self.include_extra {
            names.push(EXTRA_HEAD.to_string());
        }
        names
    }

    pub fn mixed_dim(&self) -> usize {
        self.global_dim + self.attribute_dims.iter().sum::<usize>()
    }

    /// Input width of head `i`: attribute heads see `[mixed ‖ attr_i]`, the
    /// extra head sees `[global ‖ mixed]`.
    pub fn head_input_dim(&self, i: usize) -> usize {
        if i < self.num_attributes() {
            self.mixed_dim() + self.attribute_dims[i]
        } else {
            self.global_dim + self.mixed_dim()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(BucketGrid::new(vec![1.0]).is_err());
        assert!(BucketGrid::new(vec![1.0, 1.0]).is_err());
        assert!(BucketGrid::new(vec![2.0, 1.0]).is_err());
        let g = BucketGrid::integer_range(0, 10).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.min_score(), 0.0);
        assert!((g.max_score() - 10.0 / 11.0).abs() < 1e-15);
        let d = BucketGrid::default();
        assert!((d.min_score() - 0.1).abs() < 1e-15);
        assert_eq!(d.max_score(), 1.0);
    }

    #[test]
    fn head_count_follows_extra_flag() {
        let mut cfg = ModelConfig::new(vec!["a".into(), "b".into()], 4, vec![2, 3]).unwrap();
        assert_eq!(cfg.num_heads(), 3);
        assert_eq!(cfg.head_input_dim(0), 9 + 2);
        assert_eq!(cfg.head_input_dim(2), 4 + 9);
        cfg.include_extra = false;
        assert_eq!(cfg.num_heads(), 2);
        assert_eq!(cfg.head_names(), vec!["a", "b"]);
    }

    #[test]
    fn rejects_reserved_and_duplicate_names() {
        assert!(ModelConfig::new(vec!["extra".into()], 4, vec![2]).is_err());
        assert!(ModelConfig::new(vec!["global".into()], 4, vec![2]).is_err());
        assert!(ModelConfig::new(vec!["a".into(), "a".into()], 4, vec![2, 2]).is_err());
        assert!(ModelConfig::new(vec!["a".into()], 4, vec![2, 2]).is_err());
    }
}
