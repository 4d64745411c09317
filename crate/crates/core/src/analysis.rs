//! Coverage probability, its bounds, and the ergodic rate.
//!
//! Conditioned on tier `q` serving at distance `r`, the normalized Gamma CCDF
//! of the serving fade is replaced by the alternating binomial sum
//! `Σ_{n=1}^{v} (−1)^{n+1} C(v, n) exp(−n η x)`, `η = v (v!)^{−1/v}`, which
//! turns coverage into a sum of noise factors times the Laplace transforms of
//! both interference tiers at `s_n = η n β r^{α_q} / a₁`.

use std::f64::consts::LN_2;

use crate::channel::Tier;
use crate::config::NetworkConfig;
use crate::distributions::{AssociationModel, RegimeCase, ServingDistribution};
use crate::error::{Error, Result};
use crate::geometry::DiskGeometry;
use crate::interference::{InterferenceField, TableResolution, LANES};
use crate::par::Parallelism;
use crate::quadrature::{cosine_coordinate, cosine_node, integrate_adaptive, lagrange4, IntegrationSpec, Lanes};

pub use crate::interference::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageQuery {
    /// Linear SINR threshold.
    pub beta: f64,
    /// Receiver offset from the disk center, meters.
    pub d: f64,
    pub mode: Mode,
}

impl CoverageQuery {
    pub fn new(beta: f64, d: f64, mode: Mode) -> Self {
        Self { beta, d, mode }
    }

    fn validate(&self, config: &NetworkConfig) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain("CoverageQuery", format!("beta = {} must be positive", self.beta)));
        }
        if !(self.d >= 0.0 && self.d < config.radius) {
            return Err(Error::domain(
                "CoverageQuery",
                format!("d = {} outside [0, {})", self.d, config.radius),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageResult {
    pub p_cover: f64,
    pub p_cover_los: f64,
    pub p_cover_nlos: f64,
    /// (LOS, NLOS) association probabilities.
    pub assoc: (f64, f64),
    pub regime: RegimeCase,
}

/// Relative tolerances of the analytic path. Absolute tolerances are a
/// thousandth of the relative ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Exponent of each Laplace transform.
    pub transform: f64,
    /// Serving-distance integral of a conditional coverage.
    pub coverage: f64,
    /// Threshold integral of the ergodic rate.
    pub rate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            transform: crate::interference::TRANSFORM_REL_TOL,
            coverage: 1e-6,
            rate: 1e-4,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("transform", self.transform), ("coverage", self.coverage), ("rate", self.rate)] {
            if !(v > 0.0 && v < 0.1) {
                return Err(Error::domain("Tolerances", format!("{name} tolerance {v} outside (0, 0.1)")));
            }
        }
        Ok(())
    }
}
/// Coverage below this ends the rate integral.
const RATE_FLOOR: f64 = 1e-6;

/// Alzer constant η = v (v!)^{−1/v}.
pub fn alzer_eta(v: u32) -> f64 {
    let log_fact: f64 = (1..=v).map(|k| (k as f64).ln()).sum();
    v as f64 * (-log_fact / v as f64).exp()
}

fn binomial(v: u32, n: u32) -> f64 {
    (1..=n).fold(1.0, |c, k| c * (v - n + k) as f64 / k as f64)
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let next = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - next) + t } else { (t - next) + sum };
        sum = next;
    }
    sum + comp
}

/// A network with its interference tables, ready for coverage queries.
#[derive(Debug, Clone)]
pub struct CoverageModel {
    pub config: NetworkConfig,
    field: InterferenceField,
    par: Parallelism,
    tol: Tolerances,
}

impl CoverageModel {
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        Self::build(config, TableResolution::default(), Parallelism::default())
    }

    pub fn build(config: &NetworkConfig, res: TableResolution, par: Parallelism) -> Result<Self> {
        Ok(Self {
            config: *config,
            field: InterferenceField::build(config, res, par)?,
            par,
            tol: Tolerances::default(),
        })
    }

    /// Same tables with other integration tolerances.
    pub fn with_tolerances(mut self, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        self.field = self.field.with_transform_tolerance(tol.transform)?;
        self.tol = tol;
        Ok(self)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn field(&self) -> &InterferenceField {
        &self.field
    }

    /// Association and serving-distance laws at offset `d`.
    pub fn serving(&self, d: f64) -> Result<ServingDistribution> {
        let c = &self.config;
        ServingDistribution::new(AssociationModel::new(c.lambda_t, c.geometry(d)?, c.blockage, c.pathloss)?)
    }

    /// `P_{C,q}(d, β)`: coverage given that `tier` serves.
    pub fn conditional_coverage(&self, tier: Tier, query: &CoverageQuery) -> Result<f64> {
        query.validate(&self.config)?;
        let serving = self.serving(query.d)?;
        if !(serving.association(tier) > 0.0) {
            return Err(Error::ZeroAssociation(tier));
        }
        self.conditional_with(tier, query.beta, query.mode, &serving)
    }

    fn conditional_with(&self, tier: Tier, beta: f64, mode: Mode, serving: &ServingDistribution) -> Result<f64> {
        let c = &self.config;
        let geom: DiskGeometry = serving.model.geom;
        let v = c.fading.order(tier);
        let eta = alzer_eta(v);
        let alpha = c.alpha(tier);
        let a1 = self.field.levels.a1;
        let noise = c.noise;
        let failure = std::cell::Cell::new(None);
        let integrand = |r: f64| -> Lanes<LANES> {
            let mut out = [0.0; LANES];
            let pdf = match serving.pdf(tier, r) {
                Ok(p) => p,
                Err(e) => {
                    failure.set(Some(e));
                    return Lanes(out);
                }
            };
            if pdf == 0.0 {
                return Lanes(out);
            }
            let base = eta * beta * r.powf(alpha) / a1;
            let s: Vec<f64> = (1..=v).map(|n| base * n as f64).collect();
            let mut exponent = [0.0; LANES];
            for k in Tier::BOTH {
                match self.field.log_transform_lanes(&geom, tier, k, r, &s, mode) {
                    Ok(e) => exponent.iter_mut().zip(e).for_each(|(x, y)| *x += y),
                    Err(e) => {
                        failure.set(Some(e.nested(1)));
                        return Lanes(out);
                    }
                }
            }
            for (i, &sn) in s.iter().enumerate() {
                out[i] = (-sn * noise - exponent[i]).exp() * pdf;
            }
            Lanes(out)
        };
        let spec = IntegrationSpec::new(0.0, serving.support()).with_tolerances(self.tol.coverage, 1e-3 * self.tol.coverage);
        let est = integrate_adaptive(integrand, &spec, &serving.breakpoints())?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let p = compensated_sum((1..=v).map(|n| {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sign * binomial(v, n) * est.value.0[n as usize - 1]
        }));
        Ok(p.clamp(0.0, 1.0))
    }

    fn coverage_with(&self, beta: f64, mode: Mode, serving: &ServingDistribution) -> Result<CoverageResult> {
        let mut per_tier = [0.0; 2];
        for (slot, tier) in per_tier.iter_mut().zip(Tier::BOTH) {
            if serving.association(tier) > 0.0 {
                *slot = self.conditional_with(tier, beta, mode, serving)?;
            }
        }
        let assoc = (serving.assoc_los, serving.assoc_nlos);
        Ok(CoverageResult {
            p_cover: assoc.0 * per_tier[0] + assoc.1 * per_tier[1],
            p_cover_los: per_tier[0],
            p_cover_nlos: per_tier[1],
            assoc,
            regime: serving.regime,
        })
    }

    /// Total coverage `𝓐_L P_{C,L} + 𝓐_N P_{C,N}`. It is zero without transmitters.
    pub fn coverage(&self, query: &CoverageQuery) -> Result<CoverageResult> {
        query.validate(&self.config)?;
        let serving = self.serving(query.d)?;
        self.coverage_with(query.beta, query.mode, &serving)
    }

    /// Coverage at every threshold, sharing the serving-distance laws and
    /// one interference profile.
    pub fn coverage_curve(&self, betas: &[f64], d: f64, mode: Mode) -> Result<Vec<CoverageResult>> {
        for &beta in betas {
            CoverageQuery::new(beta, d, mode).validate(&self.config)?;
        }
        let profile = self.profile(d, mode)?;
        self.par.map_slice(betas, |&beta| profile.coverage(beta)).into_iter().collect()
    }

    /// Interference exponents at offset `d` tabulated for fast threshold sweeps.
    pub fn profile(&self, d: f64, mode: Mode) -> Result<CoverageProfile> {
        CoverageQuery::new(1.0, d, mode).validate(&self.config)?;
        CoverageProfile::build(self, self.serving(d)?, mode)
    }

    /// Ergodic rate `W E[log₂(1 + SINR)]` in bit/s.
    pub fn ergodic_rate(&self, d: f64, mode: Mode) -> Result<f64> {
        self.profile(d, mode)?.ergodic_rate()
    }
}

/// Nodes per knot segment of the exponent tables, and grid density in s.
const PROFILE_NODES: usize = 16;
const S_PER_DECADE: f64 = 4.0;

/// `−ln ℒ(s)` of one serving distance on a uniform grid in ln s, kept as
/// ln of the exponent. Empty when no interferer can exist.
#[derive(Debug, Clone)]
struct ExponentCurve {
    ln_s0: f64,
    step: f64,
    ln_e: Vec<f64>,
}

impl ExponentCurve {
    fn eval(&self, ln_s: f64) -> f64 {
        let m = self.ln_e.len();
        if m == 0 {
            return 0.0;
        }
        let x = (ln_s - self.ln_s0) / self.step;
        let ln_e = if x <= 0.0 {
            // power-law continuation below the grid
            self.ln_e[0] + x * (self.ln_e[1] - self.ln_e[0])
        } else if x >= (m - 1) as f64 {
            // saturated above the grid
            self.ln_e[m - 1]
        } else {
            let i = (x.floor() as usize).clamp(1, m - 3) - 1;
            let w = lagrange4(x - i as f64);
            (0..4).map(|j| w[j] * self.ln_e[i + j]).sum()
        };
        ln_e.exp()
    }
}

/// Exponent curves on knot-aligned serving distances.
#[derive(Debug, Clone)]
struct ExponentTable {
    knots: Vec<f64>,
    curves: Vec<ExponentCurve>,
}

impl ExponentTable {
    fn build(model: &CoverageModel, geom: &DiskGeometry, serving: Tier, interferer: Tier, mode: Mode, knots: Vec<f64>) -> Result<Self> {
        let c = &model.config;
        let field = &model.field;
        let n = PROFILE_NODES;
        let mut radii = Vec::with_capacity((knots.len() - 1) * n);
        for w in knots.windows(2) {
            radii.extend((0..n).map(|i| w[0] + (w[1] - w[0]) * cosine_node(i as f64 / (n - 1) as f64)));
        }
        let alpha = c.alpha(interferer);
        let v = c.fading.order(interferer) as f64;
        let levels = field.levels.as_array();
        let a_max = levels.iter().cloned().fold(0.0, f64::max);
        let a_min = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let outer = geom.outer();
        let curves = model.par.map_slice(&radii, |&r| -> Result<ExponentCurve> {
            let rho = c.pathloss.equivalent_distance(r, serving, interferer);
            let empty = ExponentCurve {
                ln_s0: 0.0,
                step: 1.0,
                ln_e: Vec::new(),
            };
            if rho >= outer || c.lambda_t == 0.0 {
                return Ok(empty);
            }
            // below s_lo every interferer is in the linear regime of the kernel,
            // above s_hi every one is saturated
            let s_hi = 1e4 * v * outer.powf(alpha) / a_min;
            let s_lo = (1e-3 * v * rho.max(1e-3).powf(alpha) / a_max).max(s_hi * 1e-30);
            let step = std::f64::consts::LN_10 / S_PER_DECADE;
            let m = ((s_hi / s_lo).ln() / step).ceil() as usize + 1;
            let s: Vec<f64> = (0..m).map(|i| (s_lo.ln() + step * i as f64).exp()).collect();
            let mut ln_e = Vec::with_capacity(m);
            for chunk in s.chunks(LANES) {
                let e = field.log_transform_lanes(geom, serving, interferer, r, chunk, mode)?;
                ln_e.extend(e.iter().take(chunk.len()).map(|x| x.max(1e-300).ln()));
            }
            Ok(ExponentCurve {
                ln_s0: s_lo.ln(),
                step,
                ln_e,
            })
        });
        Ok(Self {
            knots,
            curves: curves.into_iter().collect::<Result<Vec<_>>>()?,
        })
    }

    fn eval(&self, r: f64, ln_s: f64) -> f64 {
        let n = PROFILE_NODES;
        let mut seg = self.knots.len() - 2;
        let mut t = 1.0;
        for (i, w) in self.knots.windows(2).enumerate() {
            if r <= w[1] && w[1] > w[0] {
                seg = i;
                t = cosine_coordinate((r - w[0]) / (w[1] - w[0]));
                break;
            }
        }
        let pos = t * (n - 1) as f64;
        let i = (pos.floor() as usize).clamp(1, n - 3) - 1;
        let w = lagrange4(pos - i as f64);
        let base = seg * n + i;
        (0..4).map(|j| w[j] * self.curves[base + j].eval(ln_s)).sum::<f64>().max(0.0)
    }
}

/// Coverage machinery of one receiver offset and gain mode, with the
/// interference exponents tabulated so that any threshold is cheap.
#[derive(Debug, Clone)]
pub struct CoverageProfile {
    config: NetworkConfig,
    serving: ServingDistribution,
    a1: f64,
    // [serving tier][interferer tier]
    tables: [Option<[ExponentTable; 2]>; 2],
    tol: Tolerances,
}

impl CoverageProfile {
    fn build(model: &CoverageModel, serving: ServingDistribution, mode: Mode) -> Result<Self> {
        let geom = serving.model.geom;
        let mut knots = serving.breakpoints();
        knots.push(0.0);
        knots.push(serving.support());
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut tables = [None, None];
        for (slot, q) in tables.iter_mut().zip(Tier::BOTH) {
            if serving.association(q) > 0.0 {
                *slot = Some([
                    ExponentTable::build(model, &geom, q, Tier::Los, mode, knots.clone())?,
                    ExponentTable::build(model, &geom, q, Tier::Nlos, mode, knots.clone())?,
                ]);
            }
        }
        Ok(Self {
            config: model.config,
            serving,
            a1: model.field.levels.a1,
            tables,
            tol: model.tol,
        })
    }

    pub fn serving(&self) -> &ServingDistribution {
        &self.serving
    }

    /// `P_{C,q}` at threshold `beta`; zero for a tier that never serves.
    pub fn conditional_coverage(&self, tier: Tier, beta: f64) -> Result<f64> {
        let tables = match &self.tables[tier as usize] {
            Some(t) => t,
            None => return Ok(0.0),
        };
        let c = &self.config;
        let v = c.fading.order(tier);
        let eta = alzer_eta(v);
        let alpha = c.alpha(tier);
        let failure = std::cell::Cell::new(None);
        let integrand = |r: f64| -> Lanes<LANES> {
            let mut out = [0.0; LANES];
            let pdf = match self.serving.pdf(tier, r) {
                Ok(p) => p,
                Err(e) => {
                    failure.set(Some(e));
                    return Lanes(out);
                }
            };
            if pdf == 0.0 {
                return Lanes(out);
            }
            let base = eta * beta * r.powf(alpha) / self.a1;
            for (n, o) in out.iter_mut().enumerate().take(v as usize) {
                let s = base * (n + 1) as f64;
                let ln_s = s.ln();
                let e = tables[0].eval(r, ln_s) + tables[1].eval(r, ln_s);
                *o = (-s * c.noise - e).exp() * pdf;
            }
            Lanes(out)
        };
        let spec = IntegrationSpec::new(0.0, self.serving.support()).with_tolerances(self.tol.coverage, 1e-3 * self.tol.coverage);
        let est = integrate_adaptive(integrand, &spec, &tables[0].knots)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let p = compensated_sum((1..=v).map(|n| {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sign * binomial(v, n) * est.value.0[n as usize - 1]
        }));
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn coverage(&self, beta: f64) -> Result<CoverageResult> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain("CoverageQuery", format!("beta = {beta} must be positive")));
        }
        let p_los = self.conditional_coverage(Tier::Los, beta)?;
        let p_nlos = self.conditional_coverage(Tier::Nlos, beta)?;
        let assoc = (self.serving.assoc_los, self.serving.assoc_nlos);
        Ok(CoverageResult {
            p_cover: assoc.0 * p_los + assoc.1 * p_nlos,
            p_cover_los: p_los,
            p_cover_nlos: p_nlos,
            assoc,
            regime: self.serving.regime,
        })
    }

    /// `(W / ln 2) ∫₀^∞ P_C(e^u − 1) du`, the rate integral over `u = ln(1 + t)`.
    pub fn ergodic_rate(&self) -> Result<f64> {
        let total_assoc = self.serving.assoc_los + self.serving.assoc_nlos;
        if !(total_assoc > 0.0) || self.config.bandwidth == 0.0 {
            return Ok(0.0);
        }
        let failure = std::cell::Cell::new(None);
        let pc = |u: f64| -> f64 {
            if u <= 0.0 {
                return total_assoc;
            }
            match self.coverage(u.exp_m1()) {
                Ok(r) => r.p_cover,
                Err(e) => {
                    failure.set(Some(e.nested(1)));
                    0.0
                }
            }
        };
        let spec = IntegrationSpec::new(0.0, 1.0).with_tolerances(self.tol.rate, 1e-7);
        let (mut lo, mut hi) = (0.0, 2.0);
        let mut total = 0.0;
        loop {
            let chunk = integrate_adaptive(pc, &spec.over(lo, hi), &[])?.value;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            total += chunk;
            if chunk.abs() <= self.tol.rate * total.abs() || pc(hi) < RATE_FLOOR {
                break;
            }
            if hi > 200.0 {
                return Err(Error::NonConvergence {
                    level: 0,
                    estimate: total,
                    tolerance: self.tol.rate,
                    subdivisions: 0,
                });
            }
            (lo, hi) = (hi, 2.0 * hi);
        }
        Ok(self.config.bandwidth / LN_2 * total)
    }
}

/// `P_{C,q}(d, β)` for a single query. Builds the interference tables; use
/// [`CoverageModel`] to amortize them across queries.
pub fn conditional_coverage(tier: Tier, query: &CoverageQuery, config: &NetworkConfig) -> Result<f64> {
    CoverageModel::new(config)?.conditional_coverage(tier, query)
}

pub fn coverage(query: &CoverageQuery, config: &NetworkConfig) -> Result<CoverageResult> {
    CoverageModel::new(config)?.coverage(query)
}

pub fn ergodic_rate(d: f64, config: &NetworkConfig, mode: Mode) -> Result<f64> {
    CoverageModel::new(config)?.ergodic_rate(d, mode)
}

/// Coverage over a grid of blockage exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockageCurve {
    pub mu: Vec<f64>,
    pub coverage: Vec<f64>,
}

impl BlockageCurve {
    /// Grid point with the largest coverage.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (i, c) in self.coverage.iter().enumerate() {
            if *c > self.coverage[best] {
                best = i;
            }
        }
        self.mu[best]
    }
}

/// Coverage for each blockage exponent in `mu`, all else as in `config`.
pub fn blockage_sweep(mu: &[f64], query: &CoverageQuery, config: &NetworkConfig, par: Parallelism) -> Result<BlockageCurve> {
    let coverage = par
        .map_slice(mu, |&m| -> Result<f64> {
            let cfg = config.with_blockage_exponent(m);
            let model = CoverageModel::build(&cfg, TableResolution::default(), Parallelism::Sequential)?;
            Ok(model.coverage(query)?.p_cover)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(BlockageCurve { mu: mu.to_vec(), coverage })
}
