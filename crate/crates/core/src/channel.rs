//! Antenna patterns, pathloss, and Nakagami fading.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

/// Link state between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    Los,
    Nlos,
}

impl Tier {
    pub const BOTH: [Tier; 2] = [Tier::Los, Tier::Nlos];

    pub fn other(self) -> Tier {
        match self {
            Tier::Los => Tier::Nlos,
            Tier::Nlos => Tier::Los,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Los => "LOS",
            Tier::Nlos => "NLOS",
        })
    }
}

/// Sectored antenna: gain `main_gain` inside a sector of width `beamwidth`
/// centered on the boresight, `side_gain` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    pub beamwidth: f64,
    pub main_gain: f64,
    pub side_gain: f64,
}

impl AntennaPattern {
    /// Build a pattern with explicit gains.
    pub fn new(beamwidth: f64, main_gain: f64, side_gain: f64) -> Result<Self> {
        if !(beamwidth > 0.0 && beamwidth <= 2.0 * PI) {
            return Err(Error::domain("AntennaPattern", format!("beamwidth {beamwidth} outside (0, 2π]")));
        }
        if !(main_gain > 0.0 && side_gain > 0.0 && main_gain.is_finite() && side_gain.is_finite()) {
            return Err(Error::domain("AntennaPattern", "gains must be positive and finite"));
        }
        Ok(Self {
            beamwidth,
            main_gain,
            side_gain,
        })
    }

    /// Gain toward a direction `offset` radians away from boresight.
    pub fn gain(&self, offset: f64) -> f64 {
        if angular_distance(offset, 0.0) <= 0.5 * self.beamwidth {
            self.main_gain
        } else {
            self.side_gain
        }
    }

    /// Probability that a uniformly random boresight covers a fixed direction.
    pub fn sector_fraction(&self) -> f64 {
        self.beamwidth / (2.0 * PI)
    }
}

/// Uniform planar square array approximated as a sectored pattern:
/// `M = 3/θ²`, with the side-lobe gain from the array's sidelobe-to-main ratio.
pub fn pattern_from_beamwidth(theta: f64) -> Result<AntennaPattern> {
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::domain(
            "pattern_from_beamwidth",
            format!("beamwidth {theta} outside (0, 2π)"),
        ));
    }
    let s3 = 3f64.sqrt();
    let sin_half = (0.5 * theta).sin();
    let main = 3.0 / (theta * theta);
    let side = (s3 * theta - 3.0 * s3 / (2.0 * PI) * sin_half) / (s3 * theta - s3 / (2.0 * PI) * theta * theta * sin_half);
    AntennaPattern::new(theta, main, side)
}

/// Smallest absolute angle between two directions, in [0, π].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let t = (a - b).rem_euclid(2.0 * PI);
    t.min(2.0 * PI - t)
}

/// Pathloss exponents of the two tiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossModel {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
}

impl PathlossModel {
    pub fn new(alpha_los: f64, alpha_nlos: f64) -> Result<Self> {
        if !(alpha_los > 0.0 && alpha_nlos > alpha_los && alpha_nlos.is_finite()) {
            return Err(Error::domain(
                "PathlossModel",
                format!("need 0 < alpha_los < alpha_nlos, got ({alpha_los}, {alpha_nlos})"),
            ));
        }
        Ok(Self { alpha_los, alpha_nlos })
    }

    pub fn exponent(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Los => self.alpha_los,
            Tier::Nlos => self.alpha_nlos,
        }
    }

    /// Distance in tier `to` whose average power equals that at distance `r` in tier `from`.
    pub fn equivalent_distance(&self, r: f64, from: Tier, to: Tier) -> f64 {
        if from == to {
            r
        } else {
            r.powf(self.exponent(from) / self.exponent(to))
        }
    }
}

/// Integer Nakagami orders of the two tiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FadingModel {
    pub v_los: u32,
    pub v_nlos: u32,
}

impl FadingModel {
    /// Largest order the analytical engine supports.
    pub const MAX_ORDER: u32 = 8;

    pub fn new(v_los: u32, v_nlos: u32) -> Result<Self> {
        for v in [v_los, v_nlos] {
            if v == 0 || v > Self::MAX_ORDER {
                return Err(Error::domain(
                    "FadingModel",
                    format!("fading order {v} outside 1..={}", Self::MAX_ORDER),
                ));
            }
        }
        Ok(Self { v_los, v_nlos })
    }

    pub fn order(&self, tier: Tier) -> u32 {
        match tier {
            Tier::Los => self.v_los,
            Tier::Nlos => self.v_nlos,
        }
    }
}

/// Draw a unit-mean Gamma(v, 1/v) fading power.
pub fn sample_fading<R: Rng + ?Sized>(tier: Tier, fading: &FadingModel, rng: &mut R) -> f64 {
    sample_gamma_unit_mean(fading.order(tier), rng)
}

pub(crate) fn sample_gamma_unit_mean<R: Rng + ?Sized>(v: u32, rng: &mut R) -> f64 {
    let mut sum = 0.0;
    for _ in 0..v {
        let e: f64 = rng.sample(Exp1);
        sum += e;
    }
    sum / v as f64
}

/// Average-power-times-fading received from a transmitter at `distance`.
pub fn received_power(gain: f64, fading: f64, distance: f64, tier: Tier, pathloss: &PathlossModel) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::domain("received_power", format!("distance {distance} must be positive")));
    }
    Ok(gain * fading * distance.powf(-pathloss.exponent(tier)))
}

/// The four products of transmit and receive gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLevels {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl GainLevels {
    pub fn new(tx: &AntennaPattern, rx: &AntennaPattern) -> Self {
        Self {
            a1: tx.main_gain * rx.main_gain,
            a2: tx.main_gain * rx.side_gain,
            a3: tx.side_gain * rx.main_gain,
            a4: tx.side_gain * rx.side_gain,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Gamma};

    #[test]
    fn planar_array_gains_at_36_degrees() {
        let p = pattern_from_beamwidth(36f64.to_radians()).unwrap();
        assert!((p.main_gain - 7.599).abs() < 5e-4, "{}", p.main_gain);
        assert!((p.side_gain - 0.7896).abs() < 5e-4, "{}", p.side_gain);
    }

    #[test]
    fn planar_array_main_gain_at_6_degrees() {
        let p = pattern_from_beamwidth(6f64.to_radians()).unwrap();
        assert!((p.main_gain - 273.57).abs() < 0.01);
    }

    #[test]
    fn main_lobe_dominates_for_practical_beamwidths() {
        // The planar-array side-lobe expression exceeds 3/θ² once θ passes
        // roughly 99°; the ordering only holds below that.
        for i in 1..=170 {
            let theta = 0.01 * i as f64;
            let p = pattern_from_beamwidth(theta).unwrap();
            assert!(p.main_gain > p.side_gain, "θ = {theta}");
        }
        let wide = pattern_from_beamwidth(200f64.to_radians()).unwrap();
        assert!(wide.main_gain < wide.side_gain);
    }

    #[test]
    fn gains_stay_positive_over_the_whole_domain() {
        let n = 1000;
        for i in 0..n {
            let theta = 0.01 + (2.0 * PI - 0.02) * i as f64 / (n - 1) as f64;
            let p = pattern_from_beamwidth(theta).unwrap();
            assert!(p.main_gain > 0.0 && p.side_gain > 0.0, "θ = {theta}");
        }
    }

    #[test]
    fn beamwidth_domain_is_checked() {
        assert!(pattern_from_beamwidth(0.0).is_err());
        assert!(pattern_from_beamwidth(2.0 * PI).is_err());
    }

    #[test]
    fn gain_levels_are_ordered_when_main_exceeds_side() {
        let tx = pattern_from_beamwidth(0.3).unwrap();
        let rx = pattern_from_beamwidth(1.1).unwrap();
        let g = GainLevels::new(&tx, &rx);
        assert!(g.a1 >= g.a2 && g.a1 >= g.a3 && g.a4 <= g.a2 && g.a4 <= g.a3);
    }

    #[test]
    fn sector_gain_uses_wrapped_angles() {
        let p = AntennaPattern::new(0.5, 10.0, 0.1).unwrap();
        assert_eq!(p.gain(0.2), 10.0);
        assert_eq!(p.gain(2.0 * PI - 0.2), 10.0);
        assert_eq!(p.gain(0.3), 0.1);
    }

    #[test]
    fn received_power_follows_the_pathloss_law() {
        let pl = PathlossModel::new(2.0, 4.0).unwrap();
        assert_eq!(received_power(1.0, 1.0, 1.0, Tier::Los, &pl).unwrap(), 1.0);
        let near = received_power(1.0, 1.0, 1.0, Tier::Los, &pl).unwrap();
        let far = received_power(1.0, 1.0, 2.0, Tier::Los, &pl).unwrap();
        assert!((far / near - 0.25).abs() < 1e-15);
        let los = received_power(1.0, 1.0, 10.0, Tier::Los, &pl).unwrap();
        let nlos = received_power(1.0, 1.0, 10.0, Tier::Nlos, &pl).unwrap();
        assert!((los / nlos - 100.0).abs() < 1e-9);
        assert!(received_power(1.0, 1.0, 0.0, Tier::Los, &pl).is_err());
    }

    #[test]
    fn pathloss_requires_ordered_exponents() {
        assert!(PathlossModel::new(4.0, 2.0).is_err());
        assert!(PathlossModel::new(2.0, 2.0).is_err());
    }

    fn draws(v: u32, n: usize, seed: u64) -> Vec<f64> {
        let fading = FadingModel::new(v, v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sample_fading(Tier::Los, &fading, &mut rng)).collect()
    }

    #[test]
    fn exponential_fading_has_unit_mean() {
        let x = draws(1, 1_000_000, 1);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((mean - 1.0).abs() < 0.005, "{mean}");
    }

    #[test]
    fn order_three_fading_has_variance_one_third() {
        let x = draws(3, 1_000_000, 2);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0 / 3.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn fading_matches_gamma_cdf_in_ks_distance() {
        for v in [1u32, 2, 3, 5] {
            let mut x = draws(v, 100_000, 10 + v as u64);
            x.sort_by(f64::total_cmp);
            let law = Gamma::new(v as f64, v as f64).unwrap();
            let n = x.len() as f64;
            let ks = x
                .iter()
                .enumerate()
                .map(|(i, &xi)| {
                    let f = law.cdf(xi);
                    (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "v = {v}: KS = {ks}");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn received_power_is_monotone(g in 0.01..100.0f64, h in 0.01..10.0f64, r in 0.5..80.0f64, k in 1.01..3.0f64) {
                let pl = PathlossModel::new(2.0, 4.0).unwrap();
                for tier in Tier::BOTH {
                    let base = received_power(g, h, r, tier, &pl).unwrap();
                    prop_assert!(received_power(g, h, r * k, tier, &pl).unwrap() < base);
                    prop_assert!(received_power(g * k, h, r, tier, &pl).unwrap() > base);
                    prop_assert!(received_power(g, h * k, r, tier, &pl).unwrap() > base);
                }
            }

            #[test]
            fn gain_levels_ordered_below_the_crossover(t in 0.01..1.7f64, r in 0.01..1.7f64) {
                let g = GainLevels::new(&pattern_from_beamwidth(t).unwrap(), &pattern_from_beamwidth(r).unwrap());
                prop_assert!(g.a1 >= g.a2 && g.a1 >= g.a3 && g.a4 <= g.a2 && g.a4 <= g.a3);
            }
        }
    }
}
