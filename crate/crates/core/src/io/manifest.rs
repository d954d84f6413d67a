//! Dataset manifests: `key = value` lines, one `[view]` stanza per view.
//!
//! ```text
//! version = 1
//! channels = 1
//! correspondences = correspondences.bin
//!
//! [view]
//! image = view0_image.pfm
//! normals = view0_normals.pfm
//! mask = view0_mask.pgm
//! gt_reflectance = view0_gt_reflectance.pfm
//! gt_lighting = view0_gt_lighting.txt
//! ```
//!
//! Paths are relative to the manifest's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "1";
pub const FILE_NAME: &str = "manifest.txt";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewEntry {
    pub image: PathBuf,
    pub normals: PathBuf,
    pub mask: PathBuf,
    pub gt_reflectance: Option<PathBuf>,
    pub gt_lighting: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub version: String,
    pub channels: usize,
    pub correspondences: PathBuf,
    pub views: Vec<ViewEntry>,
}

#[derive(Default)]
struct PartialView {
    image: Option<PathBuf>,
    normals: Option<PathBuf>,
    mask: Option<PathBuf>,
    gt_reflectance: Option<PathBuf>,
    gt_lighting: Option<PathBuf>,
    line: usize,
}

impl PartialView {
    fn finish(self, what: &Path) -> Result<ViewEntry> {
        let need = |v: Option<PathBuf>, key: &str| {
            v.ok_or_else(|| Error::format(what, format!("view stanza at line {} lacks `{key}`", self.line)))
        };
        Ok(ViewEntry {
            image: need(self.image, "image")?,
            normals: need(self.normals, "normals")?,
            mask: need(self.mask, "mask")?,
            gt_reflectance: self.gt_reflectance,
            gt_lighting: self.gt_lighting,
        })
    }
}

impl Manifest {
    pub fn parse(text: &str, what: &Path) -> Result<Manifest> {
        let bad = |line: usize, m: String| Error::format(what, format!("line {line}: {m}"));
        let (mut version, mut channels, mut correspondences) = (None, None, None);
        let mut views = Vec::new();
        let mut current: Option<PartialView> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line == "[view]" {
                if let Some(v) = current.take() {
                    views.push(v.finish(what)?);
                }
                current = Some(PartialView {
                    line: line_no,
                    ..Default::default()
                });
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(bad(line_no, format!("expected `key = value`, found {line:?}")));
            };
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(bad(line_no, format!("empty value for `{key}`")));
            }
            let slot = match (&mut current, key) {
                (None, "version") => {
                    version = Some(value.to_string());
                    continue;
                }
                (None, "channels") => {
                    channels = Some(value.parse::<usize>().map_err(|e| bad(line_no, e.to_string()))?);
                    continue;
                }
                (None, "correspondences") => &mut correspondences,
                (Some(v), "image") => &mut v.image,
                (Some(v), "normals") => &mut v.normals,
                (Some(v), "mask") => &mut v.mask,
                (Some(v), "gt_reflectance") => &mut v.gt_reflectance,
                (Some(v), "gt_lighting") => &mut v.gt_lighting,
                (scope, _) => {
                    let place = if scope.is_some() { "in a view stanza" } else { "at top level" };
                    return Err(bad(line_no, format!("unknown key `{key}` {place}")));
                }
            };
            if slot.replace(PathBuf::from(value)).is_some() {
                return Err(bad(line_no, format!("`{key}` given twice")));
            }
        }
        if let Some(v) = current.take() {
            views.push(v.finish(what)?);
        }
        let version = version.ok_or_else(|| Error::format(what, "missing `version`"))?;
        if version != FORMAT_VERSION {
            return Err(Error::format(what, format!("unsupported format version {version:?}")));
        }
        let channels = channels.ok_or_else(|| Error::format(what, "missing `channels`"))?;
        if channels != 1 && channels != 3 {
            return Err(Error::format(what, format!("channels must be 1 or 3, got {channels}")));
        }
        if views.is_empty() {
            return Err(Error::format(what, "no [view] stanza"));
        }
        let gt = views.iter().filter(|v| v.gt_reflectance.is_some() && v.gt_lighting.is_some()).count();
        let any_gt = views.iter().any(|v| v.gt_reflectance.is_some() || v.gt_lighting.is_some());
        if any_gt && gt != views.len() {
            return Err(Error::format(what, "ground truth must be given for every view or none"));
        }
        Ok(Manifest {
            version,
            channels,
            correspondences: correspondences.ok_or_else(|| Error::format(what, "missing `correspondences`"))?,
            views,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let p = |p: &Path| p.display().to_string();
        writeln!(out, "version = {}", self.version).unwrap();
        writeln!(out, "channels = {}", self.channels).unwrap();
        writeln!(out, "correspondences = {}", p(&self.correspondences)).unwrap();
        for v in &self.views {
            writeln!(out, "\n[view]").unwrap();
            writeln!(out, "image = {}", p(&v.image)).unwrap();
            writeln!(out, "normals = {}", p(&v.normals)).unwrap();
            writeln!(out, "mask = {}", p(&v.mask)).unwrap();
            if let Some(r) = &v.gt_reflectance {
                writeln!(out, "gt_reflectance = {}", p(r)).unwrap();
            }
            if let Some(l) = &v.gt_lighting {
                writeln!(out, "gt_lighting = {}", p(l)).unwrap();
            }
        }
        out
    }

    pub fn has_ground_truth(&self) -> bool {
        self.views.iter().all(|v| v.gt_reflectance.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(gt: bool) -> Manifest {
        Manifest {
            version: FORMAT_VERSION.into(),
            channels: 3,
            correspondences: "c.bin".into(),
            views: (0..2)
                .map(|v| ViewEntry {
                    image: format!("v{v}.pfm").into(),
                    normals: format!("n{v}.pfm").into(),
                    mask: format!("m{v}.pgm").into(),
                    gt_reflectance: gt.then(|| format!("r{v}.pfm").into()),
                    gt_lighting: gt.then(|| format!("l{v}.txt").into()),
                })
                .collect(),
        }
    }

    #[test]
    fn render_parse_round_trip() {
        for gt in [false, true] {
            let m = sample(gt);
            assert_eq!(Manifest::parse(&m.render(), Path::new("m")).unwrap(), m);
            assert_eq!(m.has_ground_truth(), gt);
        }
    }

    #[test]
    fn unknown_keys_and_missing_fields_are_errors() {
        let base = sample(false).render();
        let cases = [
            base.replace("channels = 3", "channels = 2"),
            base.replace("version = 1", "version = 7"),
            base.replacen("mask = m0.pgm\n", "", 1),
            base.replacen("image = v1.pfm", "image = v1.pfm\nshade = x", 1),
            base.replacen("image = v1.pfm", "image = v1.pfm\nimage = y", 1),
            base.replacen("[view]", "[view]\nimage", 1),
            base.replacen("mask = m1.pgm", "mask = m1.pgm\ngt_lighting = l.txt", 1),
        ];
        for text in cases {
            assert!(Manifest::parse(&text, Path::new("m")).is_err(), "{text}");
        }
    }
}
