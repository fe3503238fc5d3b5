//! Deployment regions, uniform point sampling and fixed anchor layouts.
//!
//! Lengths are expressed in units of the effective communication range of
//! the connection model in use.

use alloc::vec::Vec;
use core::ops::{Add, Sub};

use rand::Rng;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, factor: f64) -> Point {
        Point::new(self.x * factor, self.y * factor)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Deployment region, anchored at the origin.
///
/// The C-shape is the square `[0, s]²` with the open rectangle
/// `(w, s) × (w, s − w)` removed, which leaves three arms of width `w`
/// opening towards `+x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Square { side: f64 },
    CShape { outer_side: f64, arm_width: f64 },
}

impl Region {
    pub fn square(side: f64) -> Result<Self> {
        let region = Region::Square { side };
        region.validate()?;
        Ok(region)
    }

    pub fn c_shape(outer_side: f64, arm_width: f64) -> Result<Self> {
        let region = Region::CShape {
            outer_side,
            arm_width,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Region::Square { side } => {
                if !(side.is_finite() && side > 0.0) {
                    return Err(invalid("square side must be positive and finite"));
                }
            }
            Region::CShape {
                outer_side,
                arm_width,
            } => {
                if !(outer_side.is_finite() && outer_side > 0.0) {
                    return Err(invalid("C-shape outer side must be positive and finite"));
                }
                if !(arm_width > 0.0 && arm_width < outer_side / 2.0) {
                    return Err(invalid(
                        "C-shape arm width must lie in (0, outer_side / 2)",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Exact analytic area.
    pub fn area(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Region::Square { side } => side * side,
            Region::CShape {
                outer_side: s,
                arm_width: w,
            } => s * s - (s - w) * (s - 2.0 * w),
        })
    }

    /// Side of the axis-aligned bounding square `[0, side]²`.
    pub fn bounding_side(&self) -> f64 {
        match *self {
            Region::Square { side } => side,
            Region::CShape { outer_side, .. } => outer_side,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let s = self.bounding_side();
        let in_box = p.x >= 0.0 && p.x <= s && p.y >= 0.0 && p.y <= s;
        match *self {
            Region::Square { .. } => in_box,
            Region::CShape { arm_width: w, .. } => {
                let in_cut = p.x > w && p.x < s && p.y > w && p.y < s - w;
                in_box && !in_cut
            }
        }
    }

    /// Disjoint axis-aligned rectangles `[x0, x1, y0, y1]` whose union is
    /// the region.
    pub fn rectangles(&self) -> Vec<[f64; 4]> {
        match *self {
            Region::Square { side } => alloc::vec![[0.0, side, 0.0, side]],
            Region::CShape {
                outer_side: s,
                arm_width: w,
            } => alloc::vec![
                [0.0, w, 0.0, s],
                [w, s, 0.0, w],
                [w, s, s - w, s],
            ],
        }
    }

    /// `n` points i.i.d. uniform on the region, by rejection from the
    /// bounding square.
    pub fn sample_points<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        let s = self.bounding_side();
        let mut points = Vec::with_capacity(n);
        while points.len() < n {
            let p = Point::new(rng.random::<f64>() * s, rng.random::<f64>() * s);
            if self.contains(p) {
                points.push(p);
            }
        }
        points
    }
}

/// Reference layout on the 10 × 10 square: four corners and four edge
/// midpoints inset by 1, four points at (±2.5, ±2.5) from the centre, and
/// the centre itself.
const SQUARE_ANCHORS: [(f64, f64); 13] = [
    (1.0, 1.0),
    (9.0, 1.0),
    (9.0, 9.0),
    (1.0, 9.0),
    (5.0, 1.0),
    (9.0, 5.0),
    (5.0, 9.0),
    (1.0, 5.0),
    (2.5, 2.5),
    (7.5, 2.5),
    (7.5, 7.5),
    (2.5, 7.5),
    (5.0, 5.0),
];

/// Number of anchors placed along the C-shape centreline.
const C_SHAPE_ANCHORS: usize = 14;

/// Deterministic anchor layout for the reference regions.
///
/// Squares of any side get the 13-anchor reference layout scaled by
/// `side / 10`. C-shapes must have the reference proportions
/// (`arm_width = outer_side / 5`); they get 14 anchors spaced evenly by
/// arc length along the arm centreline, running from the top arm tip
/// `(9, 9)` through the corners `(1, 9)` and `(1, 1)` to the bottom arm
/// tip `(9, 1)` (coordinates for the 10/2 reference, scaled otherwise).
pub fn fixed_anchor_layout(region: &Region) -> Result<Vec<Point>> {
    region.validate()?;
    match *region {
        Region::Square { side } => {
            let scale = side / 10.0;
            Ok(SQUARE_ANCHORS
                .iter()
                .map(|&(x, y)| Point::new(x, y).scale(scale))
                .collect())
        }
        Region::CShape {
            outer_side,
            arm_width,
        } => {
            if libm::fabs(arm_width * 5.0 - outer_side) > 1e-9 * outer_side {
                return Err(invalid(
                    "fixed anchor layout requires a C-shape with arm_width = outer_side / 5",
                ));
            }
            let scale = outer_side / 10.0;
            let path = [
                Point::new(9.0, 9.0),
                Point::new(1.0, 9.0),
                Point::new(1.0, 1.0),
                Point::new(9.0, 1.0),
            ];
            let total: f64 = path.windows(2).map(|w| w[0].distance(w[1])).sum();
            let step = total / (C_SHAPE_ANCHORS - 1) as f64;
            let anchors = (0..C_SHAPE_ANCHORS)
                .map(|i| point_along(&path, step * i as f64).scale(scale))
                .collect();
            Ok(anchors)
        }
    }
}

fn point_along(path: &[Point], mut arc: f64) -> Point {
    for w in path.windows(2) {
        let len = w[0].distance(w[1]);
        if arc <= len {
            let t = arc / len;
            return w[0] + (w[1] - w[0]).scale(t);
        }
        arc -= len;
    }
    path[path.len() - 1]
}
