//! Planar points and axis-aligned boxes, generic over the scalar type.

use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Float> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned box with `x0 < x1` and `y0 < y1` once validated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Float> BBox<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Self { x0, y0, x1, y1 }
    }

    /// Non-degenerate: finite corners with strictly positive extent on both axes.
    pub fn is_valid(&self) -> bool {
        self.x0.is_finite()
            && self.y0.is_finite()
            && self.x1.is_finite()
            && self.y1.is_finite()
            && self.x0 < self.x1
            && self.y0 < self.y1
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn center(&self) -> Point2<T> {
        let two = T::one() + T::one();
        Point2::new((self.x0 + self.x1) / two, (self.y0 + self.y1) / two)
    }

    /// Closed-interval containment with the box grown by `margin` on every side.
    pub fn contains_closed(&self, p: Point2<T>, margin: T) -> bool {
        p.x >= self.x0 - margin
            && p.x <= self.x1 + margin
            && p.y >= self.y0 - margin
            && p.y <= self.y1 + margin
    }

    /// Half-open containment `[x0, x1) x [y0, y1)`, the pixel-cell convention
    /// used when a box is rendered into a raster.
    pub fn contains_half_open(&self, p: Point2<T>) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    /// Clamp to `[0, width] x [0, height]`. The result may be degenerate if the
    /// box lies entirely outside the frame.
    pub fn clamp_to(&self, width: T, height: T) -> Self {
        let z = T::zero();
        Self {
            x0: self.x0.max(z).min(width),
            y0: self.y0.max(z).min(height),
            x1: self.x1.max(z).min(width),
            y1: self.y1.max(z).min(height),
        }
    }

    pub fn expand(&self, margin: T) -> Self {
        Self {
            x0: self.x0 - margin,
            y0: self.y0 - margin,
            x1: self.x1 + margin,
            y1: self.y1 + margin,
        }
    }
}
