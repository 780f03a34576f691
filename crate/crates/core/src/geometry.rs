//! Axis-aligned boxes and the overlap measures built on them.
//!
//! Boxes are stored in center format `(x, y, w, h)`. Corner coordinates are
//! derived on demand. All overlap functions are symmetric in their arguments.

use crate::error::GeometryError;

/// Axis-aligned rectangle in center format.
///
/// Width and height are strictly positive and every field is finite; both
/// are checked by the constructors, so every `BBox` in circulation is valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BBox {
    /// Builds a box from its center and extent.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(GeometryError::NonPositiveExtent { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    /// Builds a box from its upper-left corner and extent (COCO layout).
    pub fn from_corner(x_min: f64, y_min: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(x_min + w / 2.0, y_min + h / 2.0, w, h)
    }

    /// Builds a box from two opposite corners `(x0, y0)` and `(x1, y1)`.
    pub fn from_extents(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x_min(&self) -> f64 {
        self.x - self.w / 2.0
    }

    pub fn x_max(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn y_min(&self) -> f64 {
        self.y - self.h / 2.0
    }

    pub fn y_max(&self) -> f64 {
        self.y + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Same extent, new center.
    pub fn with_center(&self, x: f64, y: f64) -> Result<Self, GeometryError> {
        Self::new(x, y, self.w, self.h)
    }

    /// Same center, new extent.
    pub fn with_size(&self, w: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(self.x, self.y, w, h)
    }

    /// Shifts the center by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self, GeometryError> {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

/// Overlap of two centered intervals; zero when they are disjoint or touch.
///
/// Written in terms of centers and lengths so that identical intervals give
/// their exact length back, which the corner difference does not guarantee.
fn overlap(a_center: f64, a_len: f64, b_center: f64, b_len: f64) -> f64 {
    let reach = (a_len + b_len) / 2.0 - (a_center - b_center).abs();
    reach.min(a_len).min(b_len).max(0.0)
}

/// Length of the smallest interval covering both.
fn span(a_center: f64, a_len: f64, b_center: f64, b_len: f64) -> f64 {
    let reach = (a_len + b_len) / 2.0 + (a_center - b_center).abs();
    reach.max(a_len).max(b_len)
}

fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    overlap(a.x, a.w, b.x, b.w) * overlap(a.y, a.h, b.y, b.h)
}

/// Intersection over union. Disjoint or edge-touching boxes give 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    inter / union
}

/// IoU after moving both boxes onto a common center, so only width and
/// height matter. Always strictly positive.
pub fn ciou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.w.min(b.w) * a.h.min(b.h);
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Generalized IoU: IoU minus the fraction of the enclosing box not covered
/// by the union. Lies in `(-1, 1]`.
pub fn giou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    let hull = span(a.x, a.w, b.x, b.w) * span(a.y, a.h, b.y, b.h);
    inter / union - (hull - union).max(0.0) / hull
}

/// Negated Hausdorff distance between the two boxes placed on a common
/// center. Zero for identical extents, unbounded below.
///
/// Only used to contrast the shape term with a linear alternative.
pub fn hausdorff_similarity(a: &BBox, b: &BBox) -> f64 {
    // For co-centered filled rectangles the farthest point of one set from
    // the other is a corner; distance per axis is the half-extent excess.
    let dx = (a.w - b.w).abs() / 2.0;
    let dy = (a.h - b.h).abs() / 2.0;
    let a_to_b = libm::hypot(if a.w > b.w { dx } else { 0.0 }, if a.h > b.h { dy } else { 0.0 });
    let b_to_a = libm::hypot(if b.w > a.w { dx } else { 0.0 }, if b.h > a.h { dy } else { 0.0 });
    -a_to_b.max(b_to_a)
}
