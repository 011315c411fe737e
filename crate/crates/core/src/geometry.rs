//! Physical scenario, antenna placement and user drops.
//!
//! Coordinates are meters. The waveguide runs along `y = 0` at height
//! `waveguide_height`, covering `x ∈ [0, waveguide_length]`. Users sit on the
//! ground plane `z = 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Point3, b: Point3) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// How the user region sits relative to the waveguide line `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionPlacement {
    /// `y ∈ [−D_y/2, D_y/2]`.
    #[default]
    Straddle,
    /// `y ∈ [0, D_y]`.
    OneSided,
}

/// Immutable physical configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub region_x: f64,
    pub region_y: f64,
    pub waveguide_height: f64,
    pub waveguide_length: f64,
    pub carrier_frequency: f64,
    pub effective_refractive_index: f64,
    pub noise_power_dbm: f64,
    pub feed_point_x: f64,
    pub placement: RegionPlacement,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            region_x: 10.0,
            region_y: 6.0,
            waveguide_height: 3.0,
            waveguide_length: 10.0,
            carrier_frequency: 28e9,
            effective_refractive_index: 1.4,
            noise_power_dbm: -90.0,
            feed_point_x: 0.0,
            placement: RegionPlacement::Straddle,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("region_x", self.region_x),
            ("region_y", self.region_y),
            ("waveguide_height", self.waveguide_height),
            ("carrier_frequency", self.carrier_frequency),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.waveguide_length >= 0.0 && self.waveguide_length.is_finite()) {
            return Err(Error::invalid(format!(
                "waveguide_length must be nonnegative, got {}",
                self.waveguide_length
            )));
        }
        if !(self.effective_refractive_index >= 1.0 && self.effective_refractive_index.is_finite()) {
            return Err(Error::invalid(format!(
                "effective_refractive_index must be >= 1, got {}",
                self.effective_refractive_index
            )));
        }
        if !self.noise_power_dbm.is_finite() {
            return Err(Error::invalid("noise_power_dbm must be finite"));
        }
        if !(0.0..=self.waveguide_length).contains(&self.feed_point_x) {
            return Err(Error::invalid(format!(
                "feed_point_x {} outside [0, {}]",
                self.feed_point_x, self.waveguide_length
            )));
        }
        Ok(())
    }

    /// Feed point of the waveguide.
    pub fn feed_point(&self) -> Point3 {
        Point3::new(self.feed_point_x, 0.0, self.waveguide_height)
    }

    /// Inclusive `y` bounds of the user region.
    pub fn y_bounds(&self) -> (f64, f64) {
        match self.placement {
            RegionPlacement::Straddle => (-self.region_y / 2.0, self.region_y / 2.0),
            RegionPlacement::OneSided => (0.0, self.region_y),
        }
    }

    pub fn contains(&self, p: Point3) -> bool {
        let (lo, hi) = self.y_bounds();
        p.z == 0.0 && (0.0..=self.region_x).contains(&p.x) && (lo..=hi).contains(&p.y)
    }
}

/// Ordered `x` positions of the pre-installed antennas on the waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaLayout {
    positions_x: Vec<f64>,
    height: f64,
}

impl AntennaLayout {
    /// Builds a layout from explicit positions, which must be strictly
    /// increasing and lie on the waveguide.
    pub fn new(scenario: &Scenario, positions_x: Vec<f64>) -> Result<Self> {
        if positions_x.is_empty() {
            return Err(Error::invalid("layout needs at least one antenna"));
        }
        if positions_x.len() > 64 {
            return Err(Error::Capacity {
                what: "antenna layout",
                size: positions_x.len(),
                cap: 64,
            });
        }
        for (i, &x) in positions_x.iter().enumerate() {
            if !(0.0..=scenario.waveguide_length).contains(&x) {
                return Err(Error::invalid(format!(
                    "antenna {i} at x = {x} is off the waveguide [0, {}]",
                    scenario.waveguide_length
                )));
            }
        }
        if positions_x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("antenna positions must be strictly increasing"));
        }
        Ok(AntennaLayout {
            positions_x,
            height: scenario.waveguide_height,
        })
    }

    pub fn len(&self) -> usize {
        self.positions_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_x.is_empty()
    }

    pub fn positions_x(&self) -> &[f64] {
        &self.positions_x
    }

    pub fn position(&self, n: usize) -> Result<Point3> {
        self.positions_x
            .get(n)
            .map(|&x| Point3::new(x, 0.0, self.height))
            .ok_or(Error::IndexOutOfRange {
                index: n,
                len: self.len(),
            })
    }

    pub fn positions(&self) -> impl Iterator<Item = Point3> + '_ {
        self.positions_x.iter().map(move |&x| Point3::new(x, 0.0, self.height))
    }

    /// Index of the antenna nearest to `p`; ties go to the smaller index.
    pub fn closest_to(&self, p: Point3) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, q) in self.positions().enumerate() {
            let d = distance(p, q);
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

/// `n` antennas equally spaced over the waveguide, endpoints included.
/// A single antenna sits at the midpoint.
pub fn uniform_layout(scenario: &Scenario, n: usize) -> Result<AntennaLayout> {
    let length = scenario.waveguide_length;
    let positions = match n {
        0 => return Err(Error::invalid("uniform layout needs n >= 1")),
        1 => vec![length / 2.0],
        _ => {
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { length } else { length * i as f64 / last })
                .collect()
        }
    };
    AntennaLayout::new(scenario, positions)
}

/// One placement of Bob and Eve on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserDrop {
    pub bob: Point3,
    pub eve: Point3,
}

/// Draws Bob then Eve independently and uniformly over the region.
pub fn sample_drop<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> UserDrop {
    let (y_lo, y_hi) = scenario.y_bounds();
    let point = |rng: &mut R| {
        let x = rng.random_range(0.0..=scenario.region_x);
        let y = rng.random_range(y_lo..=y_hi);
        Point3::new(x, y, 0.0)
    };
    let bob = point(rng);
    let eve = point(rng);
    UserDrop { bob, eve }
}
