//! Feature records, feature files, manifests, image statistics and the
//! synthetic benchmark.

mod extract;
mod feature_file;
mod manifest;
mod normalize;
mod raster;
mod record;
mod synthetic;

pub use extract::{hsv_grid_stats, laplacian, rgb_to_hsv, sharpness_grid_stats, ChannelSet};
pub use feature_file::{decode_features, encode_features, read_feature_file, write_feature_file};
pub use manifest::{load_manifest, Dataset, Manifest, ManifestEntry, ManifestHeader};
pub use normalize::{FeatureStats, Normalizer};
pub use raster::{decode_p6, encode_p6, read_p6, write_p6, RasterImage};
pub use record::FeatureRecord;
pub use synthetic::{generate_synthetic, strip_labels, synthesize, write_synthetic, SyntheticConfig, SyntheticData};
