//! Distance laws of the closest LOS/NLOS transmitters, association
//! probabilities, and serving-distance densities under
//! max-average-received-power selection.
//!
//! The receiver is served by tier `q` at distance `r` when the closest tier-`q`
//! transmitter is at `r` and no transmitter of the other tier is within the
//! power-equivalent distance. With `H`/`G` the LOS/NLOS measures, the LOS joint
//! density is `λ H'(r) exp(−λ (H(r) + G(r^{α_L/α_N})))` and symmetrically for
//! NLOS. Ties go to LOS; they have probability zero.

use crate::channel::{PathlossModel, Tier};
use crate::error::{Error, Result};
use crate::geometry::{BlockageModel, DiskGeometry, TierMeasure};
use crate::quadrature::{integrate_adaptive, IntegrationSpec};

/// Ordering of the breakpoints of the piecewise association laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeCase {
    /// `(D−d)^{α_N/α_L} > D+d`: the NLOS tier never shadows a LOS candidate
    /// beyond the fully-inside range.
    Case1,
    Case2,
}

pub fn regime(geom: &DiskGeometry, pathloss: &PathlossModel) -> RegimeCase {
    if geom.inner().powf(pathloss.alpha_nlos / pathloss.alpha_los) > geom.outer() {
        RegimeCase::Case1
    } else {
        RegimeCase::Case2
    }
}

/// Association probabilities below this are treated as zero.
const ZERO_ASSOCIATION: f64 = 1e-300;

const ASSOC_REL_TOL: f64 = 1e-11;
const ASSOC_ABS_TOL: f64 = 1e-15;

/// Transmitter process seen from one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationModel {
    pub lambda: f64,
    pub geom: DiskGeometry,
    pub blockage: BlockageModel,
    pub pathloss: PathlossModel,
}

impl AssociationModel {
    pub fn new(lambda: f64, geom: DiskGeometry, blockage: BlockageModel, pathloss: PathlossModel) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain("AssociationModel", format!("intensity {lambda} must be nonnegative")));
        }
        Ok(Self {
            lambda,
            geom,
            blockage,
            pathloss,
        })
    }

    pub fn measure(&self, tier: Tier) -> TierMeasure {
        TierMeasure::new(self.geom, self.blockage, tier)
    }

    pub fn regime(&self) -> RegimeCase {
        regime(&self.geom, &self.pathloss)
    }

    /// Upper end of every distance support.
    pub fn support(&self) -> f64 {
        self.geom.outer()
    }

    /// Points where the serving laws change analytic form.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (inner, outer) = (self.geom.inner(), self.geom.outer());
        let up = self.pathloss.alpha_nlos / self.pathloss.alpha_los;
        let mut pts = vec![
            inner,
            outer,
            inner.powf(up),
            outer.powf(up),
            inner.powf(1.0 / up),
            outer.powf(1.0 / up),
        ];
        pts.retain(|&p| p > 0.0 && p < outer);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Density of the event "served by `tier` at distance `r`".
    pub fn joint_density(&self, tier: Tier, r: f64) -> Result<f64> {
        if !(r > 0.0) || r >= self.support() || self.lambda == 0.0 {
            return Ok(0.0);
        }
        let own = self.measure(tier);
        let rate = own.density(r);
        if rate == 0.0 {
            return Ok(0.0);
        }
        let rival_range = self.pathloss.equivalent_distance(r, tier, tier.other());
        let exponent = own.measure(r)? + self.measure(tier.other()).measure(rival_range)?;
        Ok(self.lambda * rate * (-self.lambda * exponent).exp())
    }

    /// Probability of being served by `tier` from farther than `r`.
    pub fn joint_survival(&self, tier: Tier, r: f64) -> Result<f64> {
        let top = self.support();
        let lo = r.max(0.0);
        if lo >= top {
            return Ok(0.0);
        }
        let spec = IntegrationSpec::new(lo, top).with_tolerances(ASSOC_REL_TOL, ASSOC_ABS_TOL);
        let failure = std::cell::Cell::new(None);
        let est = integrate_adaptive(
            |x| match self.joint_density(tier, x) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            },
            &spec,
            &self.breakpoints(),
        )?;
        match failure.take() {
            Some(e) => Err(e),
            None => Ok(est.value),
        }
    }

    /// Probability that the receiver is served by `tier`.
    pub fn association(&self, tier: Tier) -> Result<f64> {
        self.joint_survival(tier, 0.0)
    }

    /// CDF of the distance to the closest `tier` transmitter, given one exists.
    pub fn closest_cdf(&self, tier: Tier, r: f64) -> Result<f64> {
        let m = self.measure(tier);
        let total = self.tier_mass(tier, &m)?;
        if r >= self.support() {
            return Ok(1.0);
        }
        if r <= 0.0 {
            return Ok(0.0);
        }
        Ok(-(-self.lambda * m.measure(r)?).exp_m1() / total)
    }

    /// Density of the distance to the closest `tier` transmitter, given one exists.
    pub fn closest_pdf(&self, tier: Tier, r: f64) -> Result<f64> {
        let m = self.measure(tier);
        let total = self.tier_mass(tier, &m)?;
        if !(r > 0.0) || r >= self.support() {
            return Ok(0.0);
        }
        Ok(self.lambda * m.density(r) * (-self.lambda * m.measure(r)?).exp() / total)
    }

    /// Probability that the tier has at least one transmitter.
    fn tier_mass(&self, tier: Tier, m: &TierMeasure) -> Result<f64> {
        let total = -(-self.lambda * m.total()?).exp_m1();
        if !(total > 0.0) {
            return Err(Error::domain(
                "closest-point law",
                format!("the {tier} tier is empty for this configuration"),
            ));
        }
        Ok(total)
    }
}

/// Association probabilities and serving-distance densities of one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServingDistribution {
    pub model: AssociationModel,
    pub regime: RegimeCase,
    pub assoc_los: f64,
    pub assoc_nlos: f64,
}

impl ServingDistribution {
    pub fn new(model: AssociationModel) -> Result<Self> {
        Ok(Self {
            model,
            regime: model.regime(),
            assoc_los: model.association(Tier::Los)?,
            assoc_nlos: model.association(Tier::Nlos)?,
        })
    }

    pub fn association(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Los => self.assoc_los,
            Tier::Nlos => self.assoc_nlos,
        }
    }

    /// Probability that no transmitter exists, in which case nobody serves.
    pub fn outage(&self) -> f64 {
        (1.0 - self.assoc_los - self.assoc_nlos).max(0.0)
    }

    /// Serving distance density given that `tier` serves.
    pub fn pdf(&self, tier: Tier, r: f64) -> Result<f64> {
        let a = self.association(tier);
        if !(a > ZERO_ASSOCIATION) {
            return Err(Error::ZeroAssociation(tier));
        }
        Ok(self.model.joint_density(tier, r)? / a)
    }

    /// Serving distance CCDF given that `tier` serves.
    pub fn survival(&self, tier: Tier, r: f64) -> Result<f64> {
        let a = self.association(tier);
        if !(a > ZERO_ASSOCIATION) {
            return Err(Error::ZeroAssociation(tier));
        }
        Ok(self.model.joint_survival(tier, r)? / a)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.model.breakpoints()
    }

    pub fn support(&self) -> f64 {
        self.model.support()
    }
}

pub fn closest_cdf(tier: Tier, r: f64, lambda: f64, geom: &DiskGeometry, blockage: &BlockageModel) -> Result<f64> {
    // the pathloss model does not enter the closest-point laws
    let pl = PathlossModel {
        alpha_los: 2.0,
        alpha_nlos: 4.0,
    };
    AssociationModel::new(lambda, *geom, *blockage, pl)?.closest_cdf(tier, r)
}

pub fn closest_pdf(tier: Tier, r: f64, lambda: f64, geom: &DiskGeometry, blockage: &BlockageModel) -> Result<f64> {
    let pl = PathlossModel {
        alpha_los: 2.0,
        alpha_nlos: 4.0,
    };
    AssociationModel::new(lambda, *geom, *blockage, pl)?.closest_pdf(tier, r)
}

/// `(A_L, A_N, regime)` for a receiver at the geometry's offset.
pub fn association_probabilities(
    lambda: f64,
    geom: &DiskGeometry,
    blockage: &BlockageModel,
    pathloss: &PathlossModel,
) -> Result<(f64, f64, RegimeCase)> {
    let s = ServingDistribution::new(AssociationModel::new(lambda, *geom, *blockage, *pathloss)?)?;
    Ok((s.assoc_los, s.assoc_nlos, s.regime))
}

/// Serving distance density for one `r`. Recomputes the association
/// probability; build a [`ServingDistribution`] to evaluate many points.
pub fn serving_pdf(
    tier: Tier,
    r: f64,
    lambda: f64,
    geom: &DiskGeometry,
    blockage: &BlockageModel,
    pathloss: &PathlossModel,
) -> Result<f64> {
    let model = AssociationModel::new(lambda, *geom, *blockage, *pathloss)?;
    let a = model.association(tier)?;
    if !(a > ZERO_ASSOCIATION) {
        return Err(Error::ZeroAssociation(tier));
    }
    Ok(model.joint_density(tier, r)? / a)
}
