//! Pixel grids, per-pixel fields and the multi-view problem container.
//!
//! All grids are row-major with 0-based `(row, col)` coordinates. Values at
//! masked-out pixels are never read; constructors store them as `0.0` so that
//! structural equality of two fields only depends on masked-in content.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A pixel location, `(row, col)`, 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub const fn new(row: usize, col: usize) -> Self {
        Pixel { row, col }
    }
}

impl fmt::Display for Pixel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Image extent plus the mask of pixels covered by the observed surface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelDomain {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl PixelDomain {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "pixel domain must be at least 1x1, got {width}x{height}"
            )));
        }
        if mask.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries for a {width}x{height} domain",
                mask.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidArgument(
                "pixel domain has no masked-in pixel".into(),
            ));
        }
        Ok(PixelDomain {
            width,
            height,
            mask,
        })
    }

    /// Every pixel masked in.
    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn index(&self, p: Pixel) -> usize {
        p.row * self.width + p.col
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> Pixel {
        Pixel::new(index / self.width, index % self.width)
    }

    #[inline]
    pub fn in_bounds(&self, p: Pixel) -> bool {
        p.row < self.height && p.col < self.width
    }

    /// In bounds and masked in.
    #[inline]
    pub fn contains(&self, p: Pixel) -> bool {
        self.in_bounds(p) && self.mask[self.index(p)]
    }

    #[inline]
    pub fn is_masked_in(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Linear indices of masked-in pixels in row-major order.
    pub fn masked_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    /// Linear index of the right neighbour when it exists and is masked in.
    #[inline]
    pub fn right_of(&self, index: usize) -> Option<usize> {
        let col = index % self.width;
        (col + 1 < self.width && self.mask[index + 1]).then_some(index + 1)
    }

    /// Linear index of the neighbour below when it exists and is masked in.
    #[inline]
    pub fn below(&self, index: usize) -> Option<usize> {
        let next = index + self.width;
        (next < self.mask.len() && self.mask[next]).then_some(next)
    }
}

/// A real-valued field over a [`PixelDomain`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    domain: PixelDomain,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: PixelDomain, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}x{} domain",
                values.len(),
                domain.width(),
                domain.height()
            )));
        }
        for (v, &m) in values.iter_mut().zip(domain.mask()) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(ScalarField { domain, values })
    }

    pub fn constant(domain: PixelDomain, value: f64) -> Self {
        let values = domain
            .mask()
            .iter()
            .map(|&m| if m { value } else { 0.0 })
            .collect();
        ScalarField { domain, values }
    }

    /// Field with `f(pixel)` at every masked-in pixel.
    pub fn from_fn(domain: PixelDomain, mut f: impl FnMut(Pixel) -> f64) -> Self {
        let values = (0..domain.len())
            .map(|i| {
                if domain.is_masked_in(i) {
                    f(domain.pixel(i))
                } else {
                    0.0
                }
            })
            .collect();
        ScalarField { domain, values }
    }

    pub fn domain(&self) -> &PixelDomain {
        &self.domain
    }

    /// Raw row-major storage; masked-out entries are `0.0`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a masked-in pixel, `None` otherwise.
    pub fn get(&self, p: Pixel) -> Option<f64> {
        self.domain
            .contains(p)
            .then(|| self.values[self.domain.index(p)])
    }

    #[inline]
    pub fn at(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn masked_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.domain.masked_indices().map(|i| self.values[i])
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(self.domain.mask())
            .map(|(&v, &m)| if m { f(v) } else { 0.0 })
            .collect();
        ScalarField {
            domain: self.domain.clone(),
            values,
        }
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        self.map(|v| v * factor)
    }

    pub fn max_masked(&self) -> f64 {
        self.masked_values().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-pixel unit normals. Only the geometric field derived from them is
/// consumed by the solver; raw normals are kept for generation and I/O.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalField {
    domain: PixelDomain,
    normals: Vec<[f64; 3]>,
}

impl NormalField {
    pub fn new(domain: PixelDomain, mut normals: Vec<[f64; 3]>) -> Result<Self> {
        if normals.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} normals for a {}x{} domain",
                normals.len(),
                domain.width(),
                domain.height()
            )));
        }
        for (n, &m) in normals.iter_mut().zip(domain.mask()) {
            if !m {
                *n = [0.0; 3];
            }
        }
        Ok(NormalField { domain, normals })
    }

    pub fn domain(&self) -> &PixelDomain {
        &self.domain
    }

    pub fn normals(&self) -> &[[f64; 3]] {
        &self.normals
    }

    pub fn get(&self, p: Pixel) -> Option<[f64; 3]> {
        self.domain
            .contains(p)
            .then(|| self.normals[self.domain.index(p)])
    }
}

/// Per-pixel 9-vectors lifted from normals, see [`crate::shading::lift_normal`].
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricField {
    domain: PixelDomain,
    nu: Vec<[f64; 9]>,
}

impl GeometricField {
    /// Builds a field from raw 9-vectors without checking the lifting
    /// identities; [`crate::validate::validate_problem`] reports violations.
    pub fn from_raw(domain: PixelDomain, mut nu: Vec<[f64; 9]>) -> Result<Self> {
        if nu.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} geometric vectors for a {}x{} domain",
                nu.len(),
                domain.width(),
                domain.height()
            )));
        }
        for (v, &m) in nu.iter_mut().zip(domain.mask()) {
            if !m {
                *v = [0.0; 9];
            }
        }
        Ok(GeometricField { domain, nu })
    }

    pub fn domain(&self) -> &PixelDomain {
        &self.domain
    }

    pub fn nu(&self) -> &[[f64; 9]] {
        &self.nu
    }

    #[inline]
    pub fn at(&self, index: usize) -> &[f64; 9] {
        &self.nu[index]
    }

    pub fn get(&self, p: Pixel) -> Option<&[f64; 9]> {
        self.domain
            .contains(p)
            .then(|| &self.nu[self.domain.index(p)])
    }
}

/// Second-order spherical-harmonics lighting coefficients of one view and
/// channel, with the camera gain and `1/π` folded in. Ordered like the
/// components of the geometric vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightingVector(pub [f64; 9]);

impl LightingVector {
    /// Purely ambient lighting: only the constant component is set.
    pub const DIFFUSE: LightingVector = LightingVector([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

    /// Shading `σ·ν`, summed in component order.
    #[inline]
    pub fn shade(&self, nu: &[f64; 9]) -> f64 {
        let mut s = 0.0;
        for k in 0..9 {
            s += self.0[k] * nu[k];
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> LightingVector {
        LightingVector(self.0.map(|v| v * factor))
    }

    /// First-order (directional) part.
    pub fn direction(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }
}

/// Two pixels, in views `view_i < view_j`, imaging the same surface point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Correspondence {
    pub view_i: usize,
    pub pixel_i: Pixel,
    pub view_j: usize,
    pub pixel_j: Pixel,
}

impl Correspondence {
    /// Orders the pair so that `view_i < view_j`.
    pub fn canonical(view_a: usize, pixel_a: Pixel, view_b: usize, pixel_b: Pixel) -> Self {
        if view_a <= view_b {
            Correspondence {
                view_i: view_a,
                pixel_i: pixel_a,
                view_j: view_b,
                pixel_j: pixel_b,
            }
        } else {
            Correspondence {
                view_i: view_b,
                pixel_i: pixel_b,
                view_j: view_a,
                pixel_j: pixel_a,
            }
        }
    }
}

impl fmt::Display for Correspondence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "view {} {} <-> view {} {}",
            self.view_i, self.pixel_i, self.view_j, self.pixel_j
        )
    }
}

/// Cross-view pixel pairs in canonical `view_i < view_j` order, without
/// duplicates. Entry order is preserved and fixes the summation order of the
/// consistency term.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorrespondenceSet {
    entries: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new(entries: Vec<Correspondence>) -> Result<Self> {
        for e in &entries {
            if e.view_i >= e.view_j {
                return Err(Error::InvalidArgument(format!(
                    "correspondence {e} is not in canonical view_i < view_j order"
                )));
            }
        }
        let mut sorted = entries.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "duplicate correspondence {}",
                w[0]
            )));
        }
        Ok(CorrespondenceSet { entries })
    }

    pub fn empty() -> Self {
        CorrespondenceSet::default()
    }

    pub fn entries(&self) -> &[Correspondence] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One input view: an image per channel sharing a single geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub images: Vec<ScalarField>,
    pub geometry: Arc<GeometricField>,
}

impl View {
    pub fn new(images: Vec<ScalarField>, geometry: GeometricField) -> Self {
        View {
            images,
            geometry: Arc::new(geometry),
        }
    }

    pub fn domain(&self) -> &PixelDomain {
        self.geometry.domain()
    }
}

/// Images, geometry and correspondences of a multi-view scene. RGB inputs are
/// three independent graylevel problems sharing geometry and correspondences.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewProblem {
    channels: usize,
    views: Vec<View>,
    correspondences: Arc<CorrespondenceSet>,
}

impl MultiViewProblem {
    pub fn new(channels: usize, views: Vec<View>, correspondences: CorrespondenceSet) -> Result<Self> {
        Self::with_shared(channels, views, Arc::new(correspondences))
    }

    fn with_shared(
        channels: usize,
        views: Vec<View>,
        correspondences: Arc<CorrespondenceSet>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if views.is_empty() {
            return Err(Error::InvalidArgument("problem has no view".into()));
        }
        for (i, v) in views.iter().enumerate() {
            if v.images.len() != channels {
                return Err(Error::DimensionMismatch(format!(
                    "view {i} has {} image(s) for {channels} channel(s)",
                    v.images.len()
                )));
            }
        }
        Ok(MultiViewProblem {
            channels,
            views,
            correspondences,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn correspondences(&self) -> &CorrespondenceSet {
        &self.correspondences
    }

    pub fn image(&self, view: usize, channel: usize) -> &ScalarField {
        &self.views[view].images[channel]
    }

    pub fn geometry(&self, view: usize) -> &GeometricField {
        &self.views[view].geometry
    }

    pub fn domain(&self, view: usize) -> &PixelDomain {
        self.views[view].domain()
    }

    /// The graylevel sub-problem of one channel. Geometry and correspondences
    /// are shared, not copied.
    pub fn channel(&self, channel: usize) -> Result<MultiViewProblem> {
        if channel >= self.channels {
            return Err(Error::InvalidArgument(format!(
                "channel {channel} out of range for {} channel(s)",
                self.channels
            )));
        }
        let views = self
            .views
            .iter()
            .map(|v| View {
                images: vec![v.images[channel].clone()],
                geometry: Arc::clone(&v.geometry),
            })
            .collect();
        Self::with_shared(1, views, Arc::clone(&self.correspondences))
    }

    /// Same problem with every view's geometry replaced.
    pub fn with_geometry(&self, geometry: Vec<GeometricField>) -> Result<MultiViewProblem> {
        if geometry.len() != self.views.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} geometric fields for {} views",
                geometry.len(),
                self.views.len()
            )));
        }
        let views = self
            .views
            .iter()
            .zip(geometry)
            .map(|(v, g)| View {
                images: v.images.clone(),
                geometry: Arc::new(g),
            })
            .collect();
        Self::with_shared(self.channels, views, Arc::clone(&self.correspondences))
    }

    pub(crate) fn require_graylevel(&self) -> Result<()> {
        if self.channels != 1 {
            return Err(Error::InvalidArgument(format!(
                "operation expects a graylevel problem, got {} channels; use MultiViewProblem::channel",
                self.channels
            )));
        }
        Ok(())
    }
}

/// Reflectance maps and lighting vectors of a graylevel problem, one of each
/// per view.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub reflectance: Vec<ScalarField>,
    pub lighting: Vec<LightingVector>,
}

impl Estimate {
    pub(crate) fn check_against(&self, problem: &MultiViewProblem) -> Result<()> {
        check_maps(&self.reflectance, problem, "reflectance")?;
        check_lighting(&self.lighting, problem)
    }
}

pub(crate) fn check_maps(maps: &[ScalarField], problem: &MultiViewProblem, what: &str) -> Result<()> {
    if maps.len() != problem.view_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} {what} map(s) for {} view(s)",
            maps.len(),
            problem.view_count()
        )));
    }
    for (i, m) in maps.iter().enumerate() {
        if m.domain() != problem.domain(i) {
            return Err(Error::DimensionMismatch(format!(
                "{what} map of view {i} does not share the view's pixel domain"
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_lighting(lighting: &[LightingVector], problem: &MultiViewProblem) -> Result<()> {
    if lighting.len() != problem.view_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} lighting vector(s) for {} view(s)",
            lighting.len(),
            problem.view_count()
        )));
    }
    Ok(())
}
