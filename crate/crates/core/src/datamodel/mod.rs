//! Domain types and on-disk formats: manifest, EGSF feature files, ANP
//! catalog and model files.

mod catalog;
mod egsf;
mod manifest;
mod model;
mod types;

pub use catalog::{
    load_anp_catalog, load_anp_catalog_sized, parse_anp_catalog, write_anp_catalog, AnpCatalog,
    AnpEntry,
};
pub use egsf::{
    load_feature_file, sha256_file, sha256_hex, verify_sha256, write_feature_file, FeatureMatrix,
    EGSF_MAGIC, EGSF_VERSION,
};
pub use manifest::{
    filter_short_events, load_manifest, resolve_ref, save_manifest, DatasetManifest, FeatureRefs,
    FileRef, FilterReport, ImageEntry, Stream, DEFAULT_MIN_EVENT_SIZE, MANIFEST_VERSION,
};
pub use model::{
    load_model, save_model, Hyperparams, ModelWarning, SolverDiagnostics, SvmModel, MODEL_VERSION,
};
pub use types::{Event, FeatureLayout, ImageRecord, SentimentLabel, ANP_DIM, CNN_DIM, FUSED_DIM};
