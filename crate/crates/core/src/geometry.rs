//! Disk-region geometry seen from an off-center receiver, and the LOS/NLOS
//! intensity measures of the part of the disk within a given range.
//!
//! Polar angles are measured at the receiver from the direction of the disk
//! center, so the boundary is farthest at θ = 0.

use std::f64::consts::PI;

use crate::channel::Tier;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, IntegrationSpec};

/// Disk of radius `radius` whose center lies `offset` from the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskGeometry {
    pub radius: f64,
    pub offset: f64,
}

/// Distances closer than this to a breakpoint are snapped onto it.
const SNAP: f64 = 1e-12;

impl DiskGeometry {
    pub fn new(radius: f64, offset: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain("DiskGeometry", format!("radius {radius} must be positive")));
        }
        if !(offset >= 0.0 && offset <= radius) {
            return Err(Error::domain("DiskGeometry", format!("offset {offset} outside [0, {radius}]")));
        }
        Ok(Self { radius, offset })
    }

    /// Radius below which the whole circle lies inside the disk.
    pub fn inner(&self) -> f64 {
        self.radius - self.offset
    }

    /// Largest distance from the receiver to a point of the disk.
    pub fn outer(&self) -> f64 {
        self.radius + self.offset
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn is_centered(&self) -> bool {
        self.offset == 0.0
    }

    fn snap(&self, r: f64) -> f64 {
        for b in [self.inner(), self.outer()] {
            if (r - b).abs() <= SNAP * (1.0 + b) {
                return b;
            }
        }
        r
    }

    /// Half-angle of the arc of the circle of radius `r` that lies inside the disk.
    pub fn varphi(&self, r: f64) -> Result<f64> {
        if self.offset == 0.0 {
            return Err(Error::DegenerateCenter);
        }
        let r = self.snap(r);
        if !(r >= self.inner() && r <= self.outer()) {
            return Err(Error::domain(
                "varphi",
                format!("r = {r} outside [{}, {}]", self.inner(), self.outer()),
            ));
        }
        Ok(self.arc_half_angle(r))
    }

    /// Half-angle of the in-disk arc for any `r`: π inside, 0 outside.
    pub fn arc_half_angle(&self, r: f64) -> f64 {
        let r = self.snap(r);
        if r <= self.inner() {
            return PI;
        }
        if r >= self.outer() {
            return 0.0;
        }
        let d = self.offset;
        let c = (r * r + d * d - self.radius * self.radius) / (2.0 * d * r);
        c.clamp(-1.0, 1.0).acos()
    }

    /// Distance from the receiver to the boundary along direction θ.
    pub fn boundary_radius(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let d = self.offset;
        (self.radius * self.radius - d * d * s * s).max(0.0).sqrt() + d * c
    }

    /// Area of the part of the disk within distance `r` of the receiver.
    pub fn lens_area(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r <= self.inner() {
            return PI * r * r;
        }
        if r >= self.outer() {
            return self.area();
        }
        let (d, big) = (self.offset, self.radius);
        let a1 = ((d * d + r * r - big * big) / (2.0 * d * r)).clamp(-1.0, 1.0).acos();
        let a2 = ((d * d + big * big - r * r) / (2.0 * d * big)).clamp(-1.0, 1.0).acos();
        let k = (-d + r + big) * (d + r - big) * (d - r + big) * (d + r + big);
        r * r * a1 + big * big * a2 - 0.5 * k.max(0.0).sqrt()
    }
}

/// Probability that a link of given length is LOS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockageModel {
    /// `p_L(r) = exp(-mu r)`.
    Exponential { mu: f64 },
    /// Distance-independent LOS probability.
    Constant { p: f64 },
}

impl BlockageModel {
    pub fn exponential(mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::domain(
                "BlockageModel",
                format!("blockage exponent {mu} must be nonnegative"),
            ));
        }
        Ok(BlockageModel::Exponential { mu })
    }

    pub fn constant(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("BlockageModel", format!("LOS probability {p} outside [0, 1]")));
        }
        Ok(BlockageModel::Constant { p })
    }

    pub fn p_los(&self, r: f64) -> f64 {
        match *self {
            BlockageModel::Exponential { mu } => (-mu * r).exp(),
            BlockageModel::Constant { p } => p,
        }
    }

    pub fn probability(&self, tier: Tier, r: f64) -> f64 {
        match tier {
            Tier::Los => self.p_los(r),
            Tier::Nlos => 1.0 - self.p_los(r),
        }
    }

    /// `∫₀ʳ x p(x) dx` for the tier's link probability `p`.
    pub fn radial_primitive(&self, tier: Tier, r: f64) -> f64 {
        match *self {
            BlockageModel::Constant { p } => {
                let q = match tier {
                    Tier::Los => p,
                    Tier::Nlos => 1.0 - p,
                };
                0.5 * q * r * r
            }
            BlockageModel::Exponential { mu } => {
                if mu == 0.0 {
                    return match tier {
                        Tier::Los => 0.5 * r * r,
                        Tier::Nlos => 0.0,
                    };
                }
                let x = mu * r;
                let scaled = match tier {
                    Tier::Los => los_moment(x),
                    Tier::Nlos => nlos_moment(x),
                };
                scaled / (mu * mu)
            }
        }
    }
}

/// `∫₀ˣ t e^{-t} dt` without cancellation at small x.
fn los_moment(x: f64) -> f64 {
    if x < 0.5 {
        // Σ (-1)^n x^{n+2} / (n! (n+2))
        let mut term = x * x;
        let mut sum = 0.0;
        for n in 0..30 {
            sum += term / (n as f64 + 2.0);
            term *= -x / (n as f64 + 1.0);
        }
        sum
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

/// `∫₀ˣ t (1 - e^{-t}) dt` without cancellation at small x.
fn nlos_moment(x: f64) -> f64 {
    if x < 2.0 {
        // Σ_{n≥1} (-1)^{n+1} x^{n+2} / (n! (n+2))
        let mut term = x * x * x;
        let mut sum = 0.0;
        for n in 1..60 {
            sum += term / (n as f64 + 2.0);
            term *= -x / (n as f64 + 1.0);
        }
        sum
    } else {
        0.5 * x * x - los_moment(x)
    }
}

/// The receiver-centric measures of one tier over a disk.
///
/// `measure(r)` is the intensity measure (per unit transmitter density) of
/// the tier's points within distance `r` of the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierMeasure {
    pub geom: DiskGeometry,
    pub blockage: BlockageModel,
    pub tier: Tier,
}

impl TierMeasure {
    pub fn new(geom: DiskGeometry, blockage: BlockageModel, tier: Tier) -> Self {
        Self { geom, blockage, tier }
    }

    fn primitive(&self, r: f64) -> f64 {
        self.blockage.radial_primitive(self.tier, r)
    }

    /// Measure of the tier within distance `r` (saturating beyond the disk).
    pub fn measure(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::domain("measure", format!("r = {r} must be nonnegative")));
        }
        let g = &self.geom;
        let r = g.snap(r).min(g.outer());
        if r <= g.inner() {
            return Ok(2.0 * PI * self.primitive(r));
        }
        // Full circles up to φ(r), then the boundary-limited remainder; the
        // integrand is symmetric in θ so only [φ, π] is integrated.
        let phi = g.arc_half_angle(r);
        let arc = if phi < PI {
            let spec = IntegrationSpec::new(phi, PI).with_tolerances(1e-12, 1e-15);
            integrate_1d(|t| self.primitive(g.boundary_radius(t)), &spec)?
        } else {
            0.0
        };
        Ok(2.0 * phi * self.primitive(r) + 2.0 * arc)
    }

    /// Measure of the whole disk.
    pub fn total(&self) -> Result<f64> {
        self.measure(self.geom.outer())
    }

    /// `∂measure/∂r` from the growing in-disk arc: `2φ(r) r p(r)`.
    pub fn derivative(&self, r: f64) -> Result<f64> {
        let g = &self.geom;
        if !(r > 0.0 && r < g.outer()) {
            return Err(Error::domain("measure_derivative", format!("r = {r} outside (0, {})", g.outer())));
        }
        Ok(self.density(r))
    }

    /// Like [`derivative`](Self::derivative) but zero outside the support.
    pub fn density(&self, r: f64) -> f64 {
        if !(r > 0.0) || r >= self.geom.outer() {
            return 0.0;
        }
        2.0 * self.geom.arc_half_angle(r) * r * self.blockage.probability(self.tier, r)
    }
}

/// Half-angle of the arc of radius `r` inside the disk.
pub fn varphi(r: f64, geom: &DiskGeometry) -> Result<f64> {
    geom.varphi(r)
}

/// Distance from the receiver to the disk boundary along θ.
pub fn boundary_radius(theta: f64, geom: &DiskGeometry) -> f64 {
    geom.boundary_radius(theta)
}

pub fn los_measure(r: f64, geom: &DiskGeometry, blockage: &BlockageModel) -> Result<f64> {
    TierMeasure::new(*geom, *blockage, Tier::Los).measure(r)
}

pub fn nlos_measure(r: f64, geom: &DiskGeometry, blockage: &BlockageModel) -> Result<f64> {
    TierMeasure::new(*geom, *blockage, Tier::Nlos).measure(r)
}

pub fn los_measure_derivative(r: f64, geom: &DiskGeometry, blockage: &BlockageModel) -> Result<f64> {
    TierMeasure::new(*geom, *blockage, Tier::Los).derivative(r)
}

pub fn nlos_measure_derivative(r: f64, geom: &DiskGeometry, blockage: &BlockageModel) -> Result<f64> {
    TierMeasure::new(*geom, *blockage, Tier::Nlos).derivative(r)
}
