//! Scene descriptions, read from TOML.
//!
//! ```toml
//! image_size = [64, 64]
//! channels = 1
//! views = [{ yaw_deg = 0.0 }, { yaw_deg = 30.0, pitch_deg = 10.0 }]
//!
//! [surface]
//! kind = "sphere"
//! radius = 1.0
//!
//! [albedo]
//! kind = "piecewise_constant"
//! regions = { map = "halves", axis = "x" }
//! values = [[0.8], [0.3]]
//!
//! [lighting]
//! kind = "per_view"
//! sigma = [[[0.3, 0.0, 0.6, 0.8, 0, 0, 0, 0, 0]], [[-0.3, 0.2, 0.6, 0.8, 0, 0, 0, 0, 0]]]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub surface: SurfaceSpec,
    pub albedo: AlbedoSpec,
    pub lighting: LightingSpec,
    pub views: Vec<ViewSpec>,
    /// `[width, height]` in pixels.
    pub image_size: [usize; 2],
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Fraction of masked-in pixels per view receiving a positive outlier.
    #[serde(default)]
    pub specular_fraction: f64,
    /// Box radius, in pixels, of the normal smoothing applied to the
    /// geometry handed to the solver. 0 keeps exact normals.
    #[serde(default)]
    pub normal_smoothing: usize,
    /// Half-width of the square imaged region in world units; defaults to
    /// 1.1 times the bounding radius of the surface.
    #[serde(default)]
    pub extent: Option<f64>,
}

fn default_channels() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    /// Sphere centred at the origin.
    Sphere { radius: f64 },
    /// `z = h(x, y)` over the square `[-1, 1]²`.
    HeightField {
        function: HeightFunction,
        amplitude: f64,
        scale: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightFunction {
    /// `a · exp(−(x² + y²) / (2 s²))`
    GaussianBump,
    /// `a · cos(π x / s) · cos(π y / s)`
    Ripple,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Partition of the surface into albedo regions, in normalized coordinates
/// (each in about `[-1, 1]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionMap {
    Uniform,
    /// Region 0 where the coordinate is negative, 1 elsewhere.
    Halves { axis: Axis },
    Bands { axis: Axis, count: usize },
    /// 3D checkerboard with `cells` cells per axis; two regions.
    Checker { cells: usize },
}

impl RegionMap {
    pub fn region_count(&self) -> usize {
        match self {
            RegionMap::Uniform => 1,
            RegionMap::Halves { .. } | RegionMap::Checker { .. } => 2,
            RegionMap::Bands { count, .. } => *count,
        }
    }

    pub fn region(&self, u: [f64; 3]) -> usize {
        let cell = |x: f64, n: usize| (((x + 1.0) / 2.0 * n as f64).floor().max(0.0) as usize).min(n - 1);
        match self {
            RegionMap::Uniform => 0,
            RegionMap::Halves { axis } => (u[axis.index()] >= 0.0) as usize,
            RegionMap::Bands { axis, count } => cell(u[axis.index()], *count),
            RegionMap::Checker { cells } => (cell(u[0], *cells) + cell(u[1], *cells) + cell(u[2], *cells)) % 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TexturePattern {
    /// `base + amplitude · sin(2π f x) · sin(2π f y)`
    Sinusoid,
    /// `base + amplitude · sin(2π f √(x² + y²))`
    Rings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlbedoSpec {
    /// `values[region][channel]`.
    PiecewiseConstant { regions: RegionMap, values: Vec<Vec<f64>> },
    /// `base[channel]` modulated by a procedural pattern.
    Texture {
        pattern: TexturePattern,
        base: Vec<f64>,
        amplitude: f64,
        frequency: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LightingSpec {
    /// One vector per channel, identical in every view.
    Shared { sigma: Vec<[f64; 9]> },
    /// `sigma[view][channel]`.
    PerView { sigma: Vec<Vec<[f64; 9]>> },
    /// Near-ambient lighting `[0.1 s1, 0.1 s2, 0.1 s3, 1, 0, …]` with `s`
    /// drawn uniformly in `[-1, 1]³` per channel from the seed, shared by
    /// all views.
    Skydome,
}

/// Orthographic camera orientation. The world-to-camera rotation is
/// `Rx(pitch) · Ry(yaw)`; the camera looks along its −z axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<SceneSpec> {
        let spec: SceneSpec = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<SceneSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidSpec(m) => Error::InvalidSpec(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene specs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let c = self.channels;
        if c != 1 && c != 3 {
            return bad(format!("channels must be 1 or 3, got {c}"));
        }
        if self.views.is_empty() {
            return bad("at least one view is required".into());
        }
        if self.image_size[0] == 0 || self.image_size[1] == 0 {
            return bad(format!("image size {:?} is empty", self.image_size));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma));
        }
        if !(0.0..=1.0).contains(&self.specular_fraction) {
            return bad(format!("specular_fraction must lie in [0, 1], got {}", self.specular_fraction));
        }
        if let Some(e) = self.extent {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("extent must be positive, got {e}"));
            }
        }
        for (i, v) in self.views.iter().enumerate() {
            if !(v.yaw_deg.is_finite() && v.pitch_deg.is_finite()) {
                return bad(format!("view {i} has a non-finite angle"));
            }
        }
        match &self.surface {
            SurfaceSpec::Sphere { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad(format!("sphere radius must be positive, got {radius}"));
                }
            }
            SurfaceSpec::HeightField { amplitude, scale, .. } => {
                if !(amplitude.is_finite() && *scale > 0.0 && scale.is_finite()) {
                    return bad("height field needs a finite amplitude and a positive scale".into());
                }
            }
        }
        let check_albedo = |v: f64| v >= 0.0 && v.is_finite();
        match &self.albedo {
            AlbedoSpec::PiecewiseConstant { regions, values } => {
                if let RegionMap::Bands { count: 0, .. } | RegionMap::Checker { cells: 0 } = regions {
                    return bad("region maps need at least one band or cell".into());
                }
                if values.len() != regions.region_count() {
                    return bad(format!(
                        "region map has {} region(s) but {} value row(s) are given",
                        regions.region_count(),
                        values.len()
                    ));
                }
                for row in values {
                    if row.len() != c || !row.iter().all(|&v| check_albedo(v)) {
                        return bad(format!("albedo rows need {c} finite nonnegative value(s), got {row:?}"));
                    }
                }
            }
            AlbedoSpec::Texture {
                base,
                amplitude,
                frequency,
                ..
            } => {
                if base.len() != c {
                    return bad(format!("texture base needs {c} value(s), got {}", base.len()));
                }
                if !(amplitude.is_finite() && frequency.is_finite()) {
                    return bad("texture amplitude and frequency must be finite".into());
                }
                if base.iter().any(|&b| !(b - amplitude.abs() >= 0.0)) {
                    return bad("texture base must exceed its amplitude so albedo stays nonnegative".into());
                }
            }
        }
        let finite = |s: &[f64; 9]| s.iter().all(|v| v.is_finite());
        match &self.lighting {
            LightingSpec::Shared { sigma } => {
                if sigma.len() != c || !sigma.iter().all(finite) {
                    return bad(format!("shared lighting needs {c} finite vector(s)"));
                }
            }
            LightingSpec::PerView { sigma } => {
                if sigma.len() != self.views.len() {
                    return bad(format!(
                        "per-view lighting lists {} view(s) for {} camera(s)",
                        sigma.len(),
                        self.views.len()
                    ));
                }
                for (i, s) in sigma.iter().enumerate() {
                    if s.len() != c || !s.iter().all(finite) {
                        return bad(format!("view {i}: lighting needs {c} finite vector(s)"));
                    }
                }
            }
            LightingSpec::Skydome => {}
        }
        Ok(())
    }
}
