//! Estimate directories: `view{v}_reflectance.pfm` and `view{v}_lighting.txt`
//! per view, plus `lighting.txt` with every view's vectors, view-major.

use std::path::{Path, PathBuf};

use crate::domain::{LightingVector, PixelDomain};
use crate::error::{Error, Result};

use super::dataset::Reconstruction;
use super::{fields_to_pfm, lighting, pfm_to_fields, PfmImage};

pub fn reflectance_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view{view}_reflectance.pfm"))
}

pub fn lighting_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view{view}_lighting.txt"))
}

pub fn store(dir: &Path, rec: &Reconstruction) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for v in 0..rec.view_count() {
        fields_to_pfm(&rec.reflectance[v])?.write(&reflectance_path(dir, v))?;
        lighting::write(&lighting_path(dir, v), &rec.lighting[v])?;
    }
    let all: Vec<LightingVector> = rec.lighting.concat();
    lighting::write(&dir.join("lighting.txt"), &all)
}

/// Reads reflectance maps only, for views with the given domains.
pub fn load_reflectance(dir: &Path, domains: &[PixelDomain], channels: usize) -> Result<Vec<Vec<crate::ScalarField>>> {
    domains
        .iter()
        .enumerate()
        .map(|(v, d)| {
            let path = reflectance_path(dir, v);
            let img = PfmImage::read(&path)?;
            if img.channels != channels {
                return Err(Error::format(&path, format!("{} channel(s), expected {channels}", img.channels)));
            }
            pfm_to_fields(&img, d, &path)
        })
        .collect()
}

pub fn load(dir: &Path, domains: &[PixelDomain], channels: usize) -> Result<Reconstruction> {
    let reflectance = load_reflectance(dir, domains, channels)?;
    let lighting = (0..domains.len())
        .map(|v| {
            let path = lighting_path(dir, v);
            let l = lighting::read(&path)?;
            if l.len() != channels {
                return Err(Error::format(&path, format!("{} vector(s), expected {channels}", l.len())));
            }
            Ok(l)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Reconstruction { reflectance, lighting })
}
