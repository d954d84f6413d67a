//! Synthetic multi-view scenes with exact ground truth.
//!
//! Each masked-in pixel carries one surface sample point. Points already seen
//! in an earlier view are re-used when they project within one pixel of a
//! pixel centre, so corresponding pixels share the exact same point, normal
//! and albedo. Remaining pixels sample the surface at their own centre.

mod geometry;
mod spec;

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use geometry::{Camera, Surface, Vec3};
pub use spec::{
    AlbedoSpec, Axis, HeightFunction, LightingSpec, RegionMap, SceneSpec, SurfaceSpec, TexturePattern,
    ViewSpec,
};

use crate::domain::{
    Correspondence, CorrespondenceSet, Estimate, LightingVector, MultiViewProblem, NormalField, Pixel,
    PixelDomain, ScalarField, View,
};
use crate::error::{Error, Result};
use crate::shading::{lift_field, lift_normal, render_pixel};

/// Two back-projected points closer than this are the same surface point.
pub const POINT_TOLERANCE: f64 = 1e-9;

/// A rendered scene and everything used to render it.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// `reflectance[view][channel]`.
    pub reflectance: Vec<Vec<ScalarField>>,
    /// `lighting[view][channel]`.
    pub lighting: Vec<Vec<LightingVector>>,
    /// Normals whose lifting forms the problem's geometry.
    pub normals: Vec<NormalField>,
    /// Analytic normals at the sample points.
    pub exact_normals: Vec<NormalField>,
    /// Surface point sampled by every pixel (masked-out: zero).
    pub points: Vec<Vec<Vec3>>,
    /// Images before noise and outliers, `[view][channel]`.
    pub clean_images: Vec<Vec<ScalarField>>,
    pub problem: MultiViewProblem,
}

impl GroundTruth {
    /// Reflectance maps of one channel, one per view.
    pub fn reflectance_channel(&self, channel: usize) -> Vec<ScalarField> {
        self.reflectance.iter().map(|r| r[channel].clone()).collect()
    }

    /// Ground-truth state of one channel.
    pub fn estimate(&self, channel: usize) -> Estimate {
        Estimate {
            reflectance: self.reflectance_channel(channel),
            lighting: self.lighting.iter().map(|l| l[channel]).collect(),
        }
    }
}

struct Sample {
    point: Vec3,
    group: usize,
}

/// Renders `spec` with randomness drawn from `seed`.
pub fn generate(spec: &SceneSpec, seed: u64) -> Result<GroundTruth> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let surface = Surface::from_spec(&spec.surface);
    let [w, h] = spec.image_size;
    let extent = spec.extent.unwrap_or(1.1 * surface.bounding_radius());
    let cameras: Vec<Camera> = spec.views.iter().map(|v| Camera::new(v, w, h, extent)).collect();
    let channels = spec.channels;
    let lighting = scene_lighting(spec, &mut rng);

    // Sample points and correspondence groups.
    let mut samples: Vec<Vec<Option<Sample>>> = Vec::with_capacity(cameras.len());
    let mut group_views: Vec<Vec<(usize, usize)>> = Vec::new();
    for (j, cam) in cameras.iter().enumerate() {
        let own: Vec<Option<Vec3>> = (0..w * h)
            .map(|i| {
                let (u, v) = cam.pixel_center(i / w, i % w);
                surface
                    .intersect(cam.ray_origin(u, v), cam.direction())
                    .filter(|x| cam.sees(&surface, *x, POINT_TOLERANCE))
            })
            .collect();
        let mut slots: Vec<Option<Sample>> = (0..w * h).map(|_| None).collect();

        // (distance, view, index) candidates from earlier views
        let mut candidates: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (k, prev) in samples.iter().enumerate() {
            for (q, s) in prev.iter().enumerate() {
                let Some(s) = s else { continue };
                if !cam.sees(&surface, s.point, POINT_TOLERANCE) {
                    continue;
                }
                let (r, c) = cam.project(s.point);
                let (r0, c0) = (r.round() as i64, c.round() as i64);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (pr, pc) = (r0 + dr, c0 + dc);
                        if pr < 0 || pc < 0 || pr >= h as i64 || pc >= w as i64 {
                            continue;
                        }
                        let dist = ((r - pr as f64).powi(2) + (c - pc as f64).powi(2)).sqrt();
                        let p = pr as usize * w + pc as usize;
                        if dist <= 1.0 && own[p].is_some() {
                            candidates.push((dist, k, q, p));
                        }
                    }
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
        let mut group_in_view: HashSet<usize> = HashSet::new();
        for (_, k, q, p) in candidates {
            let s = samples[k][q].as_ref().expect("candidate has a sample");
            if slots[p].is_some() || group_in_view.contains(&s.group) {
                continue;
            }
            group_in_view.insert(s.group);
            group_views[s.group].push((j, p));
            slots[p] = Some(Sample {
                point: s.point,
                group: s.group,
            });
        }
        for p in 0..w * h {
            if slots[p].is_none() {
                if let Some(x) = own[p] {
                    group_views.push(vec![(j, p)]);
                    slots[p] = Some(Sample {
                        point: x,
                        group: group_views.len() - 1,
                    });
                }
            }
        }
        samples.push(slots);
    }

    let mut entries = Vec::new();
    for members in &group_views {
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let (va, pa) = members[a];
                let (vb, pb) = members[b];
                entries.push(Correspondence::canonical(
                    va,
                    Pixel::new(pa / w, pa % w),
                    vb,
                    Pixel::new(pb / w, pb % w),
                ));
            }
        }
    }
    entries.sort();

    // Fields per view.
    let mut domains = Vec::new();
    let mut normals = Vec::new();
    let mut points = Vec::new();
    let mut reflectance = Vec::new();
    for (j, slots) in samples.iter().enumerate() {
        let mask: Vec<bool> = slots.iter().map(Option::is_some).collect();
        let d = PixelDomain::new(w, h, mask)
            .map_err(|_| Error::InvalidSpec(format!("view {j} does not see the surface")))?;
        let pts: Vec<Vec3> = slots.iter().map(|s| s.as_ref().map_or([0.0; 3], |s| s.point)).collect();
        let ns: Vec<Vec3> = slots
            .iter()
            .map(|s| s.as_ref().map_or([0.0; 3], |s| surface.normal(s.point)))
            .collect();
        let refl: Vec<ScalarField> = (0..channels)
            .map(|c| {
                let vals = pts.iter().map(|x| albedo(&spec.albedo, &surface, *x, c)).collect();
                ScalarField::new(d.clone(), vals)
            })
            .collect::<Result<_>>()?;
        normals.push(NormalField::new(d.clone(), ns)?);
        points.push(pts);
        reflectance.push(refl);
        domains.push(d);
    }

    let correspondences = CorrespondenceSet::new(entries)?;
    for e in correspondences.entries() {
        let a = points[e.view_i][domains[e.view_i].index(e.pixel_i)];
        let b = points[e.view_j][domains[e.view_j].index(e.pixel_j)];
        assert!(
            geometry::distance(a, b) <= POINT_TOLERANCE,
            "corresponding samples {e} do not coincide"
        );
    }

    let geometry: Vec<_> = normals.iter().map(lift_field).collect::<Result<_>>()?;
    check_shading(&geometry, &lighting)?;

    // Exact rendering, checked bit for bit.
    let mut clean: Vec<Vec<ScalarField>> = Vec::new();
    for (j, g) in geometry.iter().enumerate() {
        let mut per_channel = Vec::new();
        for c in 0..channels {
            let rho = &reflectance[j][c];
            let sigma = &lighting[j][c];
            let img = ScalarField::from_fn(domains[j].clone(), |p| {
                let i = domains[j].index(p);
                render_pixel(rho.at(i), sigma, g.at(i))
            });
            for i in domains[j].masked_indices() {
                assert_eq!(img.at(i), rho.at(i) * sigma.shade(g.at(i)), "render mismatch");
            }
            per_channel.push(img);
        }
        clean.push(per_channel);
    }

    let images = corrupt(spec, &clean, &mut rng)?;
    let views = images
        .into_iter()
        .zip(geometry)
        .map(|(imgs, g)| View::new(imgs, g))
        .collect();
    let problem = MultiViewProblem::new(channels, views, correspondences)?;
    let truth = GroundTruth {
        reflectance,
        lighting,
        normals: normals.clone(),
        exact_normals: normals,
        points,
        clean_images: clean,
        problem,
    };
    if spec.normal_smoothing > 0 {
        smooth_normals(&truth, spec.normal_smoothing)
    } else {
        Ok(truth)
    }
}

fn scene_lighting(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<LightingVector>> {
    let m = spec.views.len();
    match &spec.lighting {
        LightingSpec::Shared { sigma } => vec![sigma.iter().map(|s| LightingVector(*s)).collect(); m],
        LightingSpec::PerView { sigma } => sigma
            .iter()
            .map(|v| v.iter().map(|s| LightingVector(*s)).collect())
            .collect(),
        LightingSpec::Skydome => {
            let per_channel: Vec<LightingVector> = (0..spec.channels)
                .map(|_| {
                    let mut s = LightingVector::DIFFUSE;
                    for k in 0..3 {
                        s.0[k] = 0.1 * rng.random_range(-1.0..=1.0);
                    }
                    s
                })
                .collect();
            vec![per_channel; m]
        }
    }
}

fn albedo(spec: &AlbedoSpec, surface: &Surface, x: Vec3, channel: usize) -> f64 {
    let u = surface.normalized(x);
    match spec {
        AlbedoSpec::PiecewiseConstant { regions, values } => values[regions.region(u)][channel],
        AlbedoSpec::Texture {
            pattern,
            base,
            amplitude,
            frequency,
        } => {
            let tau = std::f64::consts::TAU;
            let m = match pattern {
                TexturePattern::Sinusoid => (tau * frequency * u[0]).sin() * (tau * frequency * u[1]).sin(),
                TexturePattern::Rings => (tau * frequency * (u[0] * u[0] + u[1] * u[1]).sqrt()).sin(),
            };
            base[channel] + amplitude * m
        }
    }
}

/// Rejects lighting that shades some rendered pixel non-positively, naming
/// the darkest one.
fn check_shading(geometry: &[crate::domain::GeometricField], lighting: &[Vec<LightingVector>]) -> Result<()> {
    let mut worst: Option<(f64, usize, usize, Pixel)> = None;
    for (j, g) in geometry.iter().enumerate() {
        for (c, sigma) in lighting[j].iter().enumerate() {
            for i in g.domain().masked_indices() {
                let s = sigma.shade(g.at(i));
                if s <= 0.0 && worst.is_none_or(|w| s < w.0) {
                    worst = Some((s, j, c, g.domain().pixel(i)));
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((s, j, c, p)) => Err(Error::InvalidSpec(format!(
            "lighting produces non-positive shading; worst pixel {p} of view {j}, channel {c}: {s}"
        ))),
    }
}

fn corrupt(spec: &SceneSpec, clean: &[Vec<ScalarField>], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<ScalarField>>> {
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut out = Vec::with_capacity(clean.len());
    for view in clean {
        let d = view[0].domain().clone();
        let masked: Vec<usize> = d.masked_indices().collect();
        let mut values: Vec<Vec<f64>> = view.iter().map(|f| f.values().to_vec()).collect();
        if spec.noise_sigma > 0.0 {
            for ch in values.iter_mut() {
                for &i in &masked {
                    ch[i] += noise.sample(rng);
                }
            }
        }
        let count = (spec.specular_fraction * masked.len() as f64).round() as usize;
        if count > 0 {
            let peaks: Vec<f64> = view.iter().map(ScalarField::max_masked).collect();
            let mut chosen = sample(rng, masked.len(), count).into_vec();
            chosen.sort_unstable();
            for k in chosen {
                let t: f64 = rng.random_range(0.5..=1.0);
                for (ch, peak) in values.iter_mut().zip(&peaks) {
                    ch[masked[k]] += t * peak;
                }
            }
        }
        out.push(
            values
                .into_iter()
                .map(|v| ScalarField::new(d.clone(), v))
                .collect::<Result<_>>()?,
        );
    }
    Ok(out)
}

/// Replaces the problem geometry by box-averaged, renormalized normals.
/// Images, reflectance and lighting are untouched, so the degraded problem
/// no longer matches its images exactly.
pub fn smooth_normals(truth: &GroundTruth, radius: usize) -> Result<GroundTruth> {
    if radius == 0 {
        return Ok(truth.clone());
    }
    let r = radius as i64;
    let mut normals = Vec::with_capacity(truth.exact_normals.len());
    for nf in &truth.exact_normals {
        let d = nf.domain();
        let (w, h) = (d.width() as i64, d.height() as i64);
        let mut out = vec![[0.0; 3]; d.len()];
        for i in d.masked_indices() {
            let p = d.pixel(i);
            let mut acc = [0.0; 3];
            for dr in -r..=r {
                for dc in -r..=r {
                    let (row, col) = (p.row as i64 + dr, p.col as i64 + dc);
                    if row < 0 || col < 0 || row >= h || col >= w {
                        continue;
                    }
                    if let Some(n) = nf.get(Pixel::new(row as usize, col as usize)) {
                        for k in 0..3 {
                            acc[k] += n[k];
                        }
                    }
                }
            }
            let len = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
            out[i] = if len > 0.0 {
                let n = [acc[0] / len, acc[1] / len, acc[2] / len];
                // guard against renormalization landing just outside tolerance
                lift_normal(n).map_or(nf.normals()[i], |_| n)
            } else {
                nf.normals()[i]
            };
        }
        normals.push(NormalField::new(d.clone(), out)?);
    }
    let geometry = normals.iter().map(lift_field).collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth {
        problem: truth.problem.with_geometry(geometry)?,
        normals,
        ..truth.clone()
    })
}
