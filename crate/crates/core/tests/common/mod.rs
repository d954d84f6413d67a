//! Shared helpers for integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refmaps::{
    lift_normal, Correspondence, CorrespondenceSet, GeometricField, LightingVector, MultiViewProblem, PixelDomain,
    ScalarField, View,
};

pub fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

pub fn random_normal(rng: &mut impl Rng) -> [f64; 3] {
    unit([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.2..1.0)])
}

/// Random graylevel problem with positive images, about 85% masked-in
/// pixels and sparse random correspondences between consecutive views.
pub fn random_problem(seed: u64, views: usize, width: usize, height: usize) -> MultiViewProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let mut out = Vec::new();
    for _ in 0..views {
        let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.85)).collect();
        mask[0] = true;
        let d = PixelDomain::new(width, height, mask).unwrap();
        let nu = (0..n).map(|_| lift_normal(random_normal(&mut rng)).unwrap()).collect();
        let light = LightingVector([
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.2..0.5),
            1.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ]);
        let geometry = GeometricField::from_raw(d.clone(), nu).unwrap();
        let img: Vec<f64> = (0..n)
            .map(|i| rng.random_range(0.2..1.0) * light.shade(geometry.at(i)).max(0.05) + rng.random_range(0.0..0.02))
            .collect();
        out.push(View::new(vec![ScalarField::new(d, img).unwrap()], geometry));
    }
    let mut entries = Vec::new();
    for v in 0..views.saturating_sub(1) {
        let (a, b) = (out[v].domain().clone(), out[v + 1].domain().clone());
        for i in a.masked_indices() {
            if rng.random_bool(0.3) {
                let j = rng.random_range(0..b.len());
                if b.is_masked_in(j) {
                    entries.push(Correspondence::canonical(v, a.pixel(i), v + 1, b.pixel(j)));
                }
            }
        }
    }
    entries.sort();
    entries.dedup();
    MultiViewProblem::new(1, out, CorrespondenceSet::new(entries).unwrap()).unwrap()
}
