//! Physical parameters of the network.

use std::f64::consts::PI;

use crate::channel::{pattern_from_beamwidth, AntennaPattern, FadingModel, GainLevels, PathlossModel, Tier};
use crate::error::{Error, Result};
use crate::geometry::{BlockageModel, DiskGeometry};

/// Everything that defines the network apart from the receiver's position.
///
/// Beamwidths are in radians and the noise power is linear, relative to a
/// unit transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub lambda_t: f64,
    pub lambda_r: f64,
    pub radius: f64,
    pub blockage: BlockageModel,
    pub theta_t: f64,
    pub theta_r: f64,
    pub pathloss: PathlossModel,
    pub fading: FadingModel,
    pub noise: f64,
    pub bandwidth: f64,
}

impl NetworkConfig {
    /// Reference scenario: 50 m disk, λ_T = 0.004 m⁻², λ_R = 0.04 m⁻²,
    /// μ = 1/15 m⁻¹, 36° beams, exponents (2, 4), orders (3, 2), σ² = −30 dB,
    /// 200 MHz bandwidth.
    pub fn table_one() -> Self {
        Self {
            lambda_t: 0.004,
            lambda_r: 0.04,
            radius: 50.0,
            blockage: BlockageModel::Exponential { mu: 1.0 / 15.0 },
            theta_t: 36f64.to_radians(),
            theta_r: 36f64.to_radians(),
            pathloss: PathlossModel {
                alpha_los: 2.0,
                alpha_nlos: 4.0,
            },
            fading: FadingModel { v_los: 3, v_nlos: 2 },
            noise: 1e-3,
            bandwidth: 200e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda_t >= 0.0 && self.lambda_t.is_finite()) {
            return bad(format!("lambda_t = {} must be nonnegative", self.lambda_t));
        }
        if !(self.lambda_r > 0.0 && self.lambda_r.is_finite()) {
            return bad(format!("lambda_r = {} must be positive", self.lambda_r));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius = {} must be positive", self.radius));
        }
        for (name, t) in [("theta_t", self.theta_t), ("theta_r", self.theta_r)] {
            if !(t > 0.0 && t < 2.0 * PI) {
                return bad(format!("{name} = {t} rad outside (0, 2π)"));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise = {} must be nonnegative", self.noise));
        }
        if !(self.bandwidth >= 0.0 && self.bandwidth.is_finite()) {
            return bad(format!("bandwidth = {} must be nonnegative", self.bandwidth));
        }
        PathlossModel::new(self.pathloss.alpha_los, self.pathloss.alpha_nlos).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        FadingModel::new(self.fading.v_los, self.fading.v_nlos).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        match self.blockage {
            BlockageModel::Exponential { mu } => BlockageModel::exponential(mu),
            BlockageModel::Constant { p } => BlockageModel::constant(p),
        }
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    pub fn geometry(&self, offset: f64) -> Result<DiskGeometry> {
        DiskGeometry::new(self.radius, offset)
    }

    pub fn tx_pattern(&self) -> Result<AntennaPattern> {
        pattern_from_beamwidth(self.theta_t)
    }

    pub fn rx_pattern(&self) -> Result<AntennaPattern> {
        pattern_from_beamwidth(self.theta_r)
    }

    pub fn gain_levels(&self) -> Result<GainLevels> {
        Ok(GainLevels::new(&self.tx_pattern()?, &self.rx_pattern()?))
    }

    /// Mean number of transmitters in the disk.
    pub fn mean_transmitters(&self) -> f64 {
        self.lambda_t * PI * self.radius * self.radius
    }

    pub fn alpha(&self, tier: Tier) -> f64 {
        self.pathloss.exponent(tier)
    }

    pub fn with_blockage_exponent(mut self, mu: f64) -> Self {
        self.blockage = BlockageModel::Exponential { mu };
        self
    }

    pub fn with_beamwidths(mut self, theta_t: f64, theta_r: f64) -> Self {
        self.theta_t = theta_t;
        self.theta_r = theta_r;
        self
    }
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::table_one()
    }
}

/// Convert decibels to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
