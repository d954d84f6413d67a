//! Dataset directories: a manifest plus the files it names.

use std::path::{Path, PathBuf};

use crate::domain::{LightingVector, MultiViewProblem, NormalField, ScalarField, View};
use crate::error::{Error, Result};
use crate::shading::lift_field;
use crate::solver::Solution;
use crate::synth::GroundTruth;

use super::manifest::{Manifest, ViewEntry, FILE_NAME, FORMAT_VERSION};
use super::{corr, fields_to_pfm, lighting, normals_to_pfm, pfm_to_fields, pfm_to_normals, pgm, PfmImage};

/// Reflectance maps and lighting vectors, both indexed `[view][channel]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub reflectance: Vec<Vec<ScalarField>>,
    pub lighting: Vec<Vec<LightingVector>>,
}

impl Reconstruction {
    pub fn from_solution(solution: &Solution) -> Reconstruction {
        let views = solution.channels.first().map_or(0, |c| c.reflectance.len());
        let channels = 0..solution.channels.len();
        Reconstruction {
            reflectance: (0..views)
                .map(|v| channels.clone().map(|c| solution.reflectance(v, c).clone()).collect())
                .collect(),
            lighting: (0..views)
                .map(|v| channels.clone().map(|c| *solution.lighting(v, c)).collect())
                .collect(),
        }
    }

    /// Reflectance maps of one channel, one per view.
    pub fn channel(&self, channel: usize) -> Vec<ScalarField> {
        self.reflectance.iter().map(|r| r[channel].clone()).collect()
    }

    pub fn view_count(&self) -> usize {
        self.reflectance.len()
    }

    /// Rounds every reflectance value to `f32`, as storing does.
    pub fn quantized(&self) -> Reconstruction {
        Reconstruction {
            reflectance: self
                .reflectance
                .iter()
                .map(|r| r.iter().map(quantize).collect())
                .collect(),
            lighting: self.lighting.clone(),
        }
    }
}

/// A problem as stored on disk, with its normals and optional ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub problem: MultiViewProblem,
    /// Normals whose lifting is the problem's geometry.
    pub normals: Vec<NormalField>,
    pub truth: Option<Reconstruction>,
}

pub(crate) fn quantize(f: &ScalarField) -> ScalarField {
    f.map(|v| v as f32 as f64)
}

fn quantize_normals(n: &NormalField) -> Result<NormalField> {
    let q = n.normals().iter().map(|v| v.map(|x| x as f32 as f64)).collect();
    NormalField::new(n.domain().clone(), q)
}

impl Dataset {
    /// The dataset that storing `truth` produces: images, normals and
    /// reflectance rounded to `f32`, geometry re-lifted from the rounded
    /// normals. Lighting is kept exactly.
    pub fn from_ground_truth(truth: &GroundTruth) -> Result<Dataset> {
        let p = &truth.problem;
        let normals = truth.normals.iter().map(quantize_normals).collect::<Result<Vec<_>>>()?;
        let views = (0..p.view_count())
            .map(|v| {
                let images = (0..p.channels()).map(|c| quantize(p.image(v, c))).collect();
                Ok(View::new(images, lift_field(&normals[v])?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            problem: MultiViewProblem::new(p.channels(), views, p.correspondences().clone())?,
            normals,
            truth: Some(
                Reconstruction {
                    reflectance: truth.reflectance.clone(),
                    lighting: truth.lighting.clone(),
                }
                .quantized(),
            ),
        })
    }

    /// Writes the dataset into `dir`, creating it if needed.
    pub fn store(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = &self.problem;
        let mut views = Vec::with_capacity(p.view_count());
        for v in 0..p.view_count() {
            let name = |what: &str| PathBuf::from(format!("view{v}_{what}"));
            let entry = ViewEntry {
                image: name("image.pfm"),
                normals: name("normals.pfm"),
                mask: name("mask.pgm"),
                gt_reflectance: self.truth.as_ref().map(|_| name("gt_reflectance.pfm")),
                gt_lighting: self.truth.as_ref().map(|_| name("gt_lighting.txt")),
            };
            fields_to_pfm(&p.views()[v].images)?.write(&dir.join(&entry.image))?;
            normals_to_pfm(&self.normals[v])?.write(&dir.join(&entry.normals))?;
            pgm::write_mask(&dir.join(&entry.mask), p.domain(v))?;
            if let (Some(t), Some(r), Some(l)) = (&self.truth, &entry.gt_reflectance, &entry.gt_lighting) {
                fields_to_pfm(&t.reflectance[v])?.write(&dir.join(r))?;
                lighting::write(&dir.join(l), &t.lighting[v])?;
            }
            views.push(entry);
        }
        if let Some(t) = &self.truth {
            let all: Vec<LightingVector> = t.lighting.concat();
            lighting::write(&dir.join("gt_lighting.txt"), &all)?;
        }
        let manifest = Manifest {
            version: FORMAT_VERSION.into(),
            channels: p.channels(),
            correspondences: "correspondences.bin".into(),
            views,
        };
        corr::write(&dir.join(&manifest.correspondences), p.correspondences())?;
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, manifest.render()).map_err(|e| Error::io(&path, e))
    }

    /// Reads a dataset from its directory or its manifest file.
    pub fn load(path: &Path) -> Result<Dataset> {
        let manifest_path = if path.is_dir() { path.join(FILE_NAME) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest = Manifest::parse(&text, &manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let channels = manifest.channels;

        let mut views = Vec::new();
        let mut normals = Vec::new();
        let mut truth = manifest.has_ground_truth().then(|| Reconstruction {
            reflectance: Vec::new(),
            lighting: Vec::new(),
        });
        for entry in &manifest.views {
            let domain = pgm::read_mask(&base.join(&entry.mask))?;
            let image_path = base.join(&entry.image);
            let images = read_channels(&image_path, &domain, channels)?;
            let normals_path = base.join(&entry.normals);
            let n = pfm_to_normals(&PfmImage::read(&normals_path)?, &domain, &normals_path)?;
            let geometry = lift_field(&n).map_err(|e| Error::format(&normals_path, e.to_string()))?;
            views.push(View::new(images, geometry));
            normals.push(n);
            if let (Some(t), Some(r), Some(l)) = (&mut truth, &entry.gt_reflectance, &entry.gt_lighting) {
                t.reflectance.push(read_channels(&base.join(r), &domain, channels)?);
                let l_path = base.join(l);
                let l = lighting::read(&l_path)?;
                if l.len() != channels {
                    return Err(Error::format(
                        &l_path,
                        format!("{} lighting vector(s) for {channels} channel(s)", l.len()),
                    ));
                }
                t.lighting.push(l);
            }
        }
        let correspondences = corr::read(&base.join(&manifest.correspondences))?;
        Ok(Dataset {
            problem: MultiViewProblem::new(channels, views, correspondences)?,
            normals,
            truth,
        })
    }
}

fn read_channels(path: &Path, domain: &crate::domain::PixelDomain, channels: usize) -> Result<Vec<ScalarField>> {
    let img = PfmImage::read(path)?;
    if img.channels != channels {
        return Err(Error::format(
            path,
            format!("{} channel(s), dataset has {channels}", img.channels),
        ));
    }
    pfm_to_fields(&img, domain, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SceneSpec};

    fn scene(channels: usize) -> SceneSpec {
        let rep = |t: &str| vec![t; channels].join(", ");
        SceneSpec::from_toml(&format!(
            r#"
            image_size = [12, 12]
            channels = {channels}
            noise_sigma = 0.01
            views = [{{ yaw_deg = 0.0 }}, {{ yaw_deg = 25.0 }}]
            [surface]
            kind = "sphere"
            radius = 1.0
            [albedo]
            kind = "piecewise_constant"
            regions = {{ map = "halves", axis = "x" }}
            values = [[{}], [{}]]
            [lighting]
            kind = "per_view"
            sigma = [[{}], [{}]]
            "#,
            rep("0.8"),
            rep("0.3"),
            rep("[0.3, 0.2, 0.5, 0.7, 0, 0, 0, 0, 0.1]"),
            rep("[0.1, -0.2, 0.6, 0.8, 0.01, 0, 0, 0, 0.02]"),
        ))
        .unwrap()
    }

    #[test]
    fn store_then_load_is_exact() {
        for channels in [1, 3] {
            let truth = generate(&scene(channels), 3).unwrap();
            let ds = Dataset::from_ground_truth(&truth).unwrap();
            let dir = tempfile::tempdir().unwrap();
            ds.store(dir.path()).unwrap();
            assert_eq!(Dataset::load(dir.path()).unwrap(), ds);
            assert_eq!(Dataset::load(&dir.path().join(FILE_NAME)).unwrap(), ds);
        }
    }

    #[test]
    fn quantization_stays_close() {
        let truth = generate(&scene(1), 5).unwrap();
        let ds = Dataset::from_ground_truth(&truth).unwrap();
        for v in 0..2 {
            let (a, b) = (ds.problem.geometry(v).nu(), truth.problem.geometry(v).nu());
            for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
        assert_eq!(ds.truth.unwrap().lighting, truth.lighting);
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let ds = Dataset::from_ground_truth(&generate(&scene(1), 1).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.store(dir.path()).unwrap();
        let m = dir.path().join(FILE_NAME);
        let text = std::fs::read_to_string(&m).unwrap().replace("channels = 1", "channels = 3");
        std::fs::write(&m, text).unwrap();
        assert!(matches!(Dataset::load(dir.path()), Err(Error::Format { .. })));
    }
}
