//! Observation pipeline: range scan, frontier region, semantic patch
//! similarity, detection box summary, and their assembly into the flat
//! feature bundle that policies consume.

mod bundle;
mod roi;
mod scan;
mod semantic;

pub use bundle::{bbox_feature, bundle_dim, BBoxFeature, FeatureBundle};
pub use roi::{roi_component, roi_feature, RoiConfig, RoiFeature};
pub use scan::{depth_to_scan, polar_scan, ScanConfig};
pub use semantic::{
    cosine, semantic_map, EmbeddingProvider, SemanticConfig, SyntheticEmbedding,
};
