//! Per-image feature fusion.
//!
//! The CNN block goes through signed root normalization and l2
//! normalization; the ANP likelihoods are weighted by their catalog
//! sentiment values and l2 normalized. The two blocks are concatenated
//! CNN first.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{AnpCatalog, FeatureLayout, FeatureMatrix, ImageRecord};
use crate::error::{Error, Result};

/// Norms at or below this are treated as zero by [`l2_normalize`].
pub const L2_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFlags {
    pub cnn: bool,
    pub anp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub srn_exponent: f64,
    /// Per-block l2 normalization before concatenation.
    pub normalize_blocks: BlockFlags,
    /// Also apply SRN to the weighted ANP block.
    #[serde(default)]
    pub srn_anp: bool,
    /// l2 normalize the whole fused vector after concatenation.
    #[serde(default)]
    pub l2_fused: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            srn_exponent: 0.5,
            normalize_blocks: BlockFlags {
                cnn: true,
                anp: true,
            },
            srn_anp: false,
            l2_fused: false,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.srn_exponent)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "SRN exponent must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Fused classifier input: CNN block in `[0, cnn_dim)`, ANP block after.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector {
    values: Vec<f64>,
    cnn_dim: usize,
}

impl FusedVector {
    pub fn new(values: Vec<f64>, cnn_dim: usize) -> Result<Self> {
        if cnn_dim > values.len() {
            return Err(Error::LengthMismatch {
                expected: cnn_dim,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(FusedVector { values, cnn_dim })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cnn_block(&self) -> &[f64] {
        &self.values[..self.cnn_dim]
    }

    pub fn anp_block(&self) -> &[f64] {
        &self.values[self.cnn_dim..]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for FusedVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Multiply each ANP likelihood by its catalog sentiment value.
pub fn weight_anp(likelihoods: &[f64], catalog: &AnpCatalog) -> Result<Vec<f64>> {
    if likelihoods.len() != catalog.len() {
        return Err(Error::LengthMismatch {
            expected: catalog.len(),
            found: likelihoods.len(),
        });
    }
    likelihoods
        .iter()
        .zip(catalog.sentiment_values())
        .enumerate()
        .map(|(index, (&p, s))| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::LikelihoodOutOfRange { index, value: p });
            }
            Ok(p * s)
        })
        .collect()
}

/// Signed root normalization: `sign(x) * |x|^alpha` elementwise.
pub fn srn(v: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            if !x.is_finite() {
                return Err(Error::NonFinite(i));
            }
            Ok(if alpha == 1.0 {
                x
            } else {
                x.signum() * x.abs().powf(alpha)
            })
        })
        .collect()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scale to unit l2 norm; vectors with norm at most [`L2_EPSILON`] are
/// returned unchanged.
pub fn l2_normalize(v: &[f64]) -> Vec<f64> {
    let norm = l2_norm(v);
    if norm > L2_EPSILON {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

/// Fuse raw blocks given as slices.
pub fn fuse_blocks(
    cnn: &[f64],
    anp_likelihoods: &[f64],
    catalog: &AnpCatalog,
    config: &NormalizationConfig,
) -> Result<FusedVector> {
    let mut cnn_block = srn(cnn, config.srn_exponent)?;
    if config.normalize_blocks.cnn {
        cnn_block = l2_normalize(&cnn_block);
    }
    let mut anp_block = weight_anp(anp_likelihoods, catalog)?;
    if config.srn_anp {
        anp_block = srn(&anp_block, config.srn_exponent)?;
    }
    if config.normalize_blocks.anp {
        anp_block = l2_normalize(&anp_block);
    }
    let cnn_dim = cnn_block.len();
    cnn_block.extend_from_slice(&anp_block);
    if config.l2_fused {
        cnn_block = l2_normalize(&cnn_block);
    }
    FusedVector::new(cnn_block, cnn_dim)
}

/// Build the fused classifier input for one image.
pub fn process_image(
    record: &ImageRecord,
    catalog: &AnpCatalog,
    config: &NormalizationConfig,
) -> Result<FusedVector> {
    fuse_blocks(
        &record.cnn_features,
        &record.anp_likelihoods,
        catalog,
        config,
    )
}

/// Fuse every row of the two feature matrices (rows in manifest order).
pub fn fuse_matrices(
    cnn: &FeatureMatrix,
    anp: &FeatureMatrix,
    layout: FeatureLayout,
    catalog: &AnpCatalog,
    config: &NormalizationConfig,
) -> Result<Vec<FusedVector>> {
    config.validate()?;
    if cnn.dim() != layout.cnn {
        return Err(Error::DimMismatch {
            expected: layout.cnn,
            found: cnn.dim(),
        });
    }
    if anp.dim() != layout.anp {
        return Err(Error::DimMismatch {
            expected: layout.anp,
            found: anp.dim(),
        });
    }
    if cnn.rows() != anp.rows() {
        return Err(Error::CountMismatch {
            expected: cnn.rows(),
            found: anp.rows(),
        });
    }
    (0..cnn.rows())
        .into_par_iter()
        .map(|i| {
            let c: Vec<f64> = cnn.row(i).iter().map(|&x| x as f64).collect();
            let a: Vec<f64> = anp.row(i).iter().map(|&x| x as f64).collect();
            fuse_blocks(&c, &a, catalog, config)
        })
        .collect()
}
