//! Glue for loading a dataset from disk and running it through feature fusion.

use std::path::{Path, PathBuf};

use crate::datamodel::{
    load_anp_catalog_sized, load_feature_file, load_manifest, resolve_ref, verify_sha256,
    AnpCatalog, DatasetManifest, FeatureMatrix, FileRef,
};
use crate::error::Result;
use crate::features::{fuse_matrices, FusedVector, NormalizationConfig};

/// Optional replacements for the paths a manifest pins.
#[derive(Debug, Clone, Default)]
pub struct PathOverrides {
    pub cnn: Option<PathBuf>,
    pub anp: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
}

/// Path to read and the sha256 it must match. Pins describe the manifest's
/// own files, so an override carries none.
fn pinned<'a>(
    manifest_path: &Path,
    over: &Option<PathBuf>,
    file: &'a FileRef,
) -> (PathBuf, &'a str) {
    match over {
        Some(path) => (path.clone(), ""),
        None => (resolve_ref(manifest_path, file), file.sha256.as_str()),
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub cnn: FeatureMatrix,
    pub anp: FeatureMatrix,
    pub catalog: AnpCatalog,
}

impl Dataset {
    /// Load the manifest and everything it references. Files the manifest
    /// points to are checked against its pinned sha256 values; overridden
    /// paths are taken as given.
    pub fn load(manifest_path: impl AsRef<Path>, overrides: &PathOverrides) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let manifest = load_manifest(manifest_path)?;
        let n = manifest.image_count();
        let dims = manifest.feature_dims;

        let (cnn_path, cnn_pin) = pinned(manifest_path, &overrides.cnn, &manifest.features.cnn);
        let (anp_path, anp_pin) = pinned(manifest_path, &overrides.anp, &manifest.features.anp);
        let (catalog_path, catalog_pin) =
            pinned(manifest_path, &overrides.catalog, &manifest.anp_catalog);

        let cnn = load_feature_file(&cnn_path, dims.cnn, n)?;
        verify_sha256(&cnn_path, cnn_pin)?;
        let anp = load_feature_file(&anp_path, dims.anp, n)?;
        verify_sha256(&anp_path, anp_pin)?;
        let catalog = load_anp_catalog_sized(&catalog_path, dims.anp)?;
        verify_sha256(&catalog_path, catalog_pin)?;
        log::info!(
            "loaded {n} images, {} events from {}",
            manifest.events.len(),
            manifest_path.display()
        );
        Ok(Dataset {
            manifest,
            cnn,
            anp,
            catalog,
        })
    }

    /// Fused vectors for every image, in manifest order.
    pub fn fuse(&self, config: &NormalizationConfig) -> Result<Vec<FusedVector>> {
        fuse_matrices(
            &self.cnn,
            &self.anp,
            self.manifest.feature_dims,
            &self.catalog,
            config,
        )
    }
}
