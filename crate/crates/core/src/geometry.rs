//! Road geometry on an integer grid.
//!
//! One grid unit is roughly one car-length slot; lanes are rows of the grid.
//! Everything here is exact integer arithmetic so that range tests are
//! reproducible and states hash identically across runs.

use std::fmt;
use std::ops::{Add, Mul};

use num_traits::{PrimInt, Signed};
use serde::{Deserialize, Serialize};

/// Largest absolute coordinate accepted by scenario validation.
///
/// With `|x|, |y| <= 2^20` every squared distance is below `2^43`, which fits
/// in an `i64` with room to spare.
pub const COORD_LIMIT: i64 = 1 << 20;

/// A point (or step vector) on the grid.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: PrimInt + Signed> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Point { x, y }
    }

    /// Exact squared Euclidean distance.
    pub fn squared_distance(self, other: Self) -> S {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Like [`Point::squared_distance`] but returns `None` instead of
    /// overflowing the scalar type.
    pub fn checked_squared_distance(self, other: Self) -> Option<S> {
        let dx = self.x.checked_sub(&other.x)?;
        let dy = self.y.checked_sub(&other.y)?;
        dx.checked_mul(&dx)?.checked_add(&dy.checked_mul(&dy)?)
    }

    /// Whether `other` is within `range` of `self`, using the strict
    /// `distance < range` comparison on squared values.
    pub fn within(self, other: Self, range: S) -> bool {
        self.squared_distance(other) < range * range
    }
}

impl<S: PrimInt + Signed> Add for Point<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<S: PrimInt + Signed> Mul<S> for Point<S> {
    type Output = Self;
    fn mul(self, k: S) -> Self {
        Point::new(self.x * k, self.y * k)
    }
}

impl<S: fmt::Display> fmt::Display for Point<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Transmission range of every radio in a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadioConfig {
    pub range: i64,
}

impl RadioConfig {
    /// Returns `None` unless `range > 0`.
    pub fn new(range: i64) -> Option<Self> {
        (range > 0).then_some(RadioConfig { range })
    }

    /// Squared range; a receiver at squared distance `d` hears iff `d < range_sq`.
    pub fn range_sq(self) -> i64 {
        self.range * self.range
    }
}

/// Per-vehicle motion settings. Only consulted when movement is enabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Kinematics {
    /// Unit step with integer components, e.g. `(1, 0)`.
    pub direction: Point<i64>,
    /// Grid units travelled per move period.
    pub speed: i64,
    /// Move period in time units; at least 1.
    pub latency: u64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Kinematics {
            direction: Point::new(1, 0),
            speed: 0,
            latency: 1,
        }
    }
}
