//! Lambertian shading under second-order spherical-harmonics lighting.
//!
//! A unit normal `n` is lifted to the 9-vector
//! `[n1, n2, n3, 1, n1 n2, n1 n3, n2 n3, n1² − n2², 3 n3² − 1]`, and the
//! graylevel of a pixel with albedo `ρ` under lighting `σ` is `ρ σ·ν`.

use crate::domain::{GeometricField, LightingVector, NormalField};
use crate::error::{Error, Result};

/// Maximum deviation of `‖n‖` from 1 accepted for a unit normal.
pub const UNIT_TOLERANCE: f64 = 1e-6;

fn norm3(n: &[f64; 3]) -> f64 {
    (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

/// Polynomial part of the lifting, without the unit-norm check.
#[inline]
pub(crate) fn lift_unchecked(n: &[f64; 3]) -> [f64; 9] {
    let [x, y, z] = *n;
    [x, y, z, 1.0, x * y, x * z, y * z, x * x - y * y, 3.0 * z * z - 1.0]
}

/// Lifts a unit normal to its geometric 9-vector.
pub fn lift_normal(n: [f64; 3]) -> Result<[f64; 9]> {
    let norm = norm3(&n);
    if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
        return Err(Error::InvalidNormal {
            norm,
            location: format!("normal {n:?}"),
        });
    }
    Ok(lift_unchecked(&n))
}

/// Lifts every masked-in normal of a field.
pub fn lift_field(normals: &NormalField) -> Result<GeometricField> {
    let domain = normals.domain();
    let mut nu = vec![[0.0; 9]; domain.len()];
    for i in domain.masked_indices() {
        let n = normals.normals()[i];
        nu[i] = lift_normal(n).map_err(|e| match e {
            Error::InvalidNormal { norm, .. } => Error::InvalidNormal {
                norm,
                location: format!("pixel {}", domain.pixel(i)),
            },
            other => other,
        })?;
    }
    GeometricField::from_raw(domain.clone(), nu)
}

/// Residual-free graylevel `ρ σ·ν`.
#[inline]
pub fn render_pixel(albedo: f64, lighting: &LightingVector, nu: &[f64; 9]) -> f64 {
    albedo * lighting.shade(nu)
}

/// Checks the lifting identities of one 9-vector. Returns a description of
/// the first violated identity.
pub(crate) fn check_lifted(nu: &[f64; 9]) -> Option<String> {
    let n = [nu[0], nu[1], nu[2]];
    let norm = norm3(&n);
    if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
        return Some(format!("normal part has norm {norm}"));
    }
    if nu[3] != 1.0 {
        return Some(format!("constant component is {}, expected 1", nu[3]));
    }
    let expect = lift_unchecked(&n);
    for k in 4..9 {
        if !((nu[k] - expect[k]).abs() <= UNIT_TOLERANCE) {
            return Some(format!(
                "component {} is {}, expected {}",
                k + 1,
                nu[k],
                expect[k]
            ));
        }
    }
    None
}
