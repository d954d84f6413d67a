//! On-disk datasets and estimates.
//!
//! A dataset directory holds a [`manifest`], per-view PFM images and normals,
//! PGM masks and a binary correspondence table; see [`dataset::Dataset`].
//! Everything per-pixel is stored as `f32`.

pub mod corr;
pub mod dataset;
pub mod estimate;
pub mod lighting;
pub mod manifest;
pub mod pfm;
pub mod pgm;

use std::path::Path;

pub use dataset::{Dataset, Reconstruction};
pub use pfm::PfmImage;

use crate::domain::{NormalField, PixelDomain, ScalarField};
use crate::error::{Error, Result};

/// Packs same-domain fields as the channels of one PFM.
pub fn fields_to_pfm(fields: &[ScalarField]) -> Result<PfmImage> {
    let Some(first) = fields.first() else {
        return Err(Error::InvalidArgument("no field to store".into()));
    };
    let d = first.domain();
    if fields.iter().any(|f| f.domain() != d) {
        return Err(Error::DimensionMismatch("fields of one PFM must share a domain".into()));
    }
    let c = fields.len();
    let mut data = vec![0.0f32; d.len() * c];
    for (k, f) in fields.iter().enumerate() {
        for (i, &v) in f.values().iter().enumerate() {
            data[i * c + k] = v as f32;
        }
    }
    PfmImage::new(d.width(), d.height(), c, data)
}

/// Splits a PFM into one field per channel over `domain`.
pub fn pfm_to_fields(img: &PfmImage, domain: &PixelDomain, what: &Path) -> Result<Vec<ScalarField>> {
    check_size(img, domain, what)?;
    (0..img.channels)
        .map(|c| {
            let values = (0..domain.len()).map(|i| img.get(i, c) as f64).collect();
            ScalarField::new(domain.clone(), values)
        })
        .collect()
}

pub fn normals_to_pfm(normals: &NormalField) -> Result<PfmImage> {
    let d = normals.domain();
    let data = normals.normals().iter().flat_map(|n| n.map(|v| v as f32)).collect();
    PfmImage::new(d.width(), d.height(), 3, data)
}

pub fn pfm_to_normals(img: &PfmImage, domain: &PixelDomain, what: &Path) -> Result<NormalField> {
    check_size(img, domain, what)?;
    if img.channels != 3 {
        return Err(Error::format(what, "normal maps need 3 channels"));
    }
    let normals = (0..domain.len())
        .map(|i| [0, 1, 2].map(|c| img.get(i, c) as f64))
        .collect();
    NormalField::new(domain.clone(), normals)
}

fn check_size(img: &PfmImage, domain: &PixelDomain, what: &Path) -> Result<()> {
    if (img.width, img.height) != (domain.width(), domain.height()) {
        return Err(Error::format(
            what,
            format!(
                "{}x{} map for a {}x{} mask",
                img.width,
                img.height,
                domain.width(),
                domain.height()
            ),
        ));
    }
    Ok(())
}
