//! Scale alignment and RMSE of reflectance estimates against ground truth.
//!
//! Reflectance is only recovered up to one positive factor per channel, so
//! estimates are compared after least-squares alignment. The ground truth is
//! first divided by its maximum so that errors are on a `[0, 1]` scale.

use crate::domain::{LightingVector, ScalarField};
use crate::error::{Error, Result};

fn check_pairs(a: &[ScalarField], b: &[ScalarField]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimated map(s) against {} reference map(s)",
            a.len(),
            b.len()
        )));
    }
    for (v, (x, y)) in a.iter().zip(b).enumerate() {
        if x.domain() != y.domain() {
            return Err(Error::DimensionMismatch(format!(
                "view {v}: estimated and reference maps have different pixel domains"
            )));
        }
    }
    Ok(())
}

/// Least-squares factor `κ = ⟨est, ref⟩ / ⟨est, est⟩`, shared by all views,
/// and the rescaled estimate.
pub fn align_scale(estimated: &[ScalarField], reference: &[ScalarField]) -> Result<(Vec<ScalarField>, f64)> {
    check_pairs(estimated, reference)?;
    let (mut er, mut ee) = (0.0, 0.0);
    for (e, r) in estimated.iter().zip(reference) {
        for i in e.domain().masked_indices() {
            er += e.at(i) * r.at(i);
            ee += e.at(i) * e.at(i);
        }
    }
    if ee == 0.0 {
        return Err(Error::Degenerate(
            "estimated reflectance is identically zero; no scale can align it".into(),
        ));
    }
    let kappa = er / ee;
    Ok((estimated.iter().map(|e| e.scaled(kappa)).collect(), kappa))
}

/// Root mean square difference over all masked-in pixels of all views.
pub fn rmse(a: &[ScalarField], b: &[ScalarField]) -> Result<f64> {
    check_pairs(a, b)?;
    let (mut s, mut n) = (0.0, 0usize);
    for (x, y) in a.iter().zip(b) {
        for i in x.domain().masked_indices() {
            let d = x.at(i) - y.at(i);
            s += d * d;
            n += 1;
        }
    }
    Ok((s / n as f64).sqrt())
}

/// Errors of one channel after normalization and alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelReport {
    pub kappa: f64,
    pub rmse: f64,
    pub per_view_rmse: Vec<f64>,
}

/// Normalizes `truth` to a maximum of 1, aligns `estimated` to it and
/// measures the RMSE, overall and per view.
pub fn evaluate_channel(estimated: &[ScalarField], truth: &[ScalarField]) -> Result<ChannelReport> {
    check_pairs(estimated, truth)?;
    let m = truth
        .iter()
        .map(ScalarField::max_masked)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Degenerate(
            "ground-truth reflectance has no positive value".into(),
        ));
    }
    let truth: Vec<ScalarField> = truth.iter().map(|t| t.scaled(1.0 / m)).collect();
    let (aligned, kappa) = align_scale(estimated, &truth)?;
    let per_view_rmse = aligned
        .iter()
        .zip(&truth)
        .map(|(a, t)| rmse(std::slice::from_ref(a), std::slice::from_ref(t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelReport {
        kappa,
        rmse: rmse(&aligned, &truth)?,
        per_view_rmse,
    })
}

/// Angle in degrees between the first-order (directional) parts of two
/// lighting vectors; NaN if either part is zero.
pub fn lighting_angle_deg(a: &LightingVector, b: &LightingVector) -> f64 {
    let (x, y) = (a.direction(), b.direction());
    let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    let norm = |v: &[f64; 3]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let (nx, ny) = (norm(&x), norm(&y));
    if nx == 0.0 || ny == 0.0 {
        return f64::NAN;
    }
    (dot / (nx * ny)).clamp(-1.0, 1.0).acos().to_degrees()
}
