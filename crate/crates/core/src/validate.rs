//! Structural and numerical checks on a [`MultiViewProblem`].
//!
//! Violations are reported as data; callers decide whether to abort.

use std::fmt;

use crate::domain::{MultiViewProblem, Pixel};
use crate::shading::check_lifted;

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Image and geometry of a view do not share one pixel domain.
    DomainMismatch { view: usize, channel: usize },
    /// Non-finite image value at a masked-in pixel.
    NonFiniteImage { view: usize, channel: usize, pixel: Pixel },
    /// Geometric vector whose normal part is not unit length or which breaks
    /// the lifting identities.
    InvalidNormal { view: usize, pixel: Pixel, detail: String },
    /// Correspondence naming a view that does not exist.
    CorrespondenceView { entry: usize, view: usize },
    /// Correspondence naming a pixel outside its view's mask.
    CorrespondencePixel { entry: usize, view: usize, pixel: Pixel },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DomainMismatch { view, channel } => write!(
                f,
                "view {view}: image of channel {channel} and geometry have different pixel domains"
            ),
            Violation::NonFiniteImage {
                view,
                channel,
                pixel,
            } => write!(
                f,
                "view {view}, channel {channel}: non-finite image value at {pixel}"
            ),
            Violation::InvalidNormal {
                view,
                pixel,
                detail,
            } => write!(f, "view {view}: invalid normal at {pixel}: {detail}"),
            Violation::CorrespondenceView { entry, view } => {
                write!(f, "correspondence #{entry}: view {view} does not exist")
            }
            Violation::CorrespondencePixel { entry, view, pixel } => write!(
                f,
                "correspondence #{entry}: pixel {pixel} is not masked in in view {view}"
            ),
        }
    }
}

/// Lists every invariant violation of `problem`; empty means well-formed.
pub fn validate_problem(problem: &MultiViewProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    for (v, view) in problem.views().iter().enumerate() {
        let domain = view.domain();
        for (c, image) in view.images.iter().enumerate() {
            if image.domain() != domain {
                out.push(Violation::DomainMismatch {
                    view: v,
                    channel: c,
                });
                continue;
            }
            for i in domain.masked_indices() {
                if !image.at(i).is_finite() {
                    out.push(Violation::NonFiniteImage {
                        view: v,
                        channel: c,
                        pixel: domain.pixel(i),
                    });
                }
            }
        }
        for i in domain.masked_indices() {
            if let Some(detail) = check_lifted(view.geometry.at(i)) {
                out.push(Violation::InvalidNormal {
                    view: v,
                    pixel: domain.pixel(i),
                    detail,
                });
            }
        }
    }

    let views = problem.view_count();
    for (k, e) in problem.correspondences().entries().iter().enumerate() {
        for (view, pixel) in [(e.view_i, e.pixel_i), (e.view_j, e.pixel_j)] {
            if view >= views {
                out.push(Violation::CorrespondenceView { entry: k, view });
            } else if !problem.domain(view).contains(pixel) {
                out.push(Violation::CorrespondencePixel {
                    entry: k,
                    view,
                    pixel,
                });
            }
        }
    }
    out
}
