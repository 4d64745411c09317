//! Antenna-gain mixture of interferers, the served-receiver distance law, and
//! the conditional Laplace transforms of the aggregate interference.
//!
//! An interferer at `y` (distance `x`, angle θ from the center direction) lies
//! `d̂` from the disk center and serves a receiver at distance `R`. Its main
//! lobe points at that receiver, whose bearing is uniform over the arc of the
//! circle b(y, R) inside the disk; the reference receiver's main lobe points at
//! its own server, uniform over the in-disk arc of b(o, r). The gain is
//! `a_k` with probabilities `b_k`, bilinear in the two hit probabilities `c`
//! (origin inside the interferer's main lobe) and `p` (interferer inside the
//! reference main lobe). Only `c` depends on `R`, so averaging over `R` reduces
//! to a table of `c̄(d̂, φ̂_T) = E[c]`.

use std::f64::consts::PI;

use crate::channel::{angular_distance, AntennaPattern, GainLevels, Tier};
use crate::config::NetworkConfig;
use crate::distributions::AssociationModel;
use crate::error::{Error, Result};
use crate::geometry::DiskGeometry;
use crate::par::Parallelism;
use crate::quadrature::{
    cosine_coordinate as from_segment, cosine_node as to_segment, integrate_adaptive, kronrod_rule, lagrange4, linspace, IntegrationSpec,
    Interpolation, Lanes, NestedIntegral, Tabulation,
};

/// Which gain law the transform uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Gain mixture from the beam geometry.
    #[default]
    Exact,
    /// Every interferer transmits with its stronger lobe toward the receiver.
    LowerBound,
    /// Every interferer transmits with its weaker lobe toward the receiver.
    UpperBound,
}

/// Position of one interferer relative to the reference receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererGeometry {
    pub x: f64,
    pub theta: f64,
    pub d_hat: f64,
    pub serving_r: f64,
}

impl InterfererGeometry {
    /// `theta` is measured at the receiver from the direction of the disk center.
    pub fn new(x: f64, theta: f64, geom: &DiskGeometry, serving_r: f64) -> Self {
        Self {
            x,
            theta,
            d_hat: center_distance(x, theta, geom.offset),
            serving_r,
        }
    }

    /// Bearing at the receiver between the interferer and the disk center, in [0, π].
    pub fn rx_bearing(&self) -> f64 {
        angular_distance(self.theta, 0.0)
    }

    /// Angle at the interferer between the receiver and the disk center, in [0, π].
    pub fn tx_bearing(&self, geom: &DiskGeometry) -> Result<f64> {
        tx_bearing(self.x, self.d_hat, geom.offset)
    }
}

fn center_distance(x: f64, theta: f64, d: f64) -> f64 {
    (x * x + d * d - 2.0 * x * d * theta.cos()).max(0.0).sqrt()
}

fn tx_bearing(x: f64, d_hat: f64, d: f64) -> Result<f64> {
    if x * d_hat == 0.0 {
        return Ok(0.0);
    }
    let c = (d_hat * d_hat + x * x - d * d) / (2.0 * d_hat * x);
    if !(c.abs() <= 1.0 + 1e-9) {
        return Err(Error::domain("beam_angles", format!("bearing cosine {c} outside [-1, 1]")));
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Fraction of the arc `[-half, half]` covered by the circular window of
/// width `width` centered at `center`.
pub fn window_fraction(center: f64, width: f64, half: f64) -> f64 {
    if half >= PI {
        return (width / (2.0 * PI)).min(1.0);
    }
    if half <= 0.0 {
        return if angular_distance(center, 0.0) <= 0.5 * width { 1.0 } else { 0.0 };
    }
    let (lo, hi) = (center - 0.5 * width, center + 0.5 * width);
    let mut covered = 0.0;
    for k in [-1.0, 0.0, 1.0] {
        let shift = 2.0 * PI * k;
        covered += ((hi + shift).min(half) - (lo + shift).max(-half)).max(0.0);
    }
    (covered / (2.0 * half)).clamp(0.0, 1.0)
}

/// Probabilities `(c, dcoef)` that the origin lies in the interferer's main
/// lobe and that the interferer lies in the reference receiver's main lobe,
/// when the interferer serves a receiver at distance `y_r`.
pub fn beam_angles(
    ig: &InterfererGeometry,
    y_r: f64,
    geom: &DiskGeometry,
    pattern_t: &AntennaPattern,
    pattern_r: &AntennaPattern,
) -> Result<(f64, f64)> {
    let reach = geom.radius + ig.d_hat;
    if !(y_r > 0.0 && y_r < reach) {
        return Err(Error::domain("beam_angles", format!("served distance {y_r} outside (0, {reach})")));
    }
    let c = tx_hit_probability(ig.d_hat, ig.tx_bearing(geom)?, y_r, geom.radius, pattern_t.beamwidth);
    let p = rx_hit_probability(ig.rx_bearing(), ig.serving_r, geom, pattern_r.beamwidth);
    Ok((c, p))
}

fn tx_hit_probability(d_hat: f64, bearing: f64, y: f64, radius: f64, width: f64) -> f64 {
    let half = if d_hat <= 1e-12 * radius {
        PI
    } else {
        DiskGeometry {
            radius,
            offset: d_hat.min(radius),
        }
        .arc_half_angle(y)
    };
    window_fraction(bearing, width, half)
}

fn rx_hit_probability(bearing: f64, serving_r: f64, geom: &DiskGeometry, width: f64) -> f64 {
    window_fraction(bearing, width, geom.arc_half_angle(serving_r))
}

/// Four-point law of the product of transmit and receive gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMixture {
    pub probs: [f64; 4],
    pub levels: GainLevels,
}

impl GainMixture {
    pub fn from_hit_probabilities(c: f64, p: f64, levels: GainLevels) -> Self {
        Self {
            probs: [c * p, c * (1.0 - p), (1.0 - c) * p, (1.0 - c) * (1.0 - p)],
            levels,
        }
    }

    /// `E[g(G)]` under the mixture.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.probs.iter().zip(self.levels.as_array()).map(|(b, a)| b * g(a)).sum()
    }
}

pub fn gain_mixture(
    ig: &InterfererGeometry,
    y_r: f64,
    geom: &DiskGeometry,
    pattern_t: &AntennaPattern,
    pattern_r: &AntennaPattern,
) -> Result<GainMixture> {
    let (c, p) = beam_angles(ig, y_r, geom, pattern_t, pattern_r)?;
    Ok(GainMixture::from_hit_probabilities(c, p, GainLevels::new(pattern_t, pattern_r)))
}

/// Density of the distance from a transmitter `d_hat` from the center to the
/// receiver it serves, evaluated directly.
///
/// Active receivers form a process of intensity λ_T and attach by the same
/// max-average-power rule; the mixture over their LOS/NLOS association is
/// conditioned on the transmitter having a receiver at all.
pub fn served_distance_pdf(d_hat: f64, y: f64, config: &NetworkConfig) -> Result<f64> {
    let model = AssociationModel::new(
        config.lambda_t,
        DiskGeometry::new(config.radius, d_hat)?,
        config.blockage,
        config.pathloss,
    )?;
    let active = -(-config.mean_transmitters()).exp_m1();
    if !(active > 0.0) {
        return Err(Error::ZeroAssociation(Tier::Los));
    }
    Ok((model.joint_density(Tier::Los, y)? + model.joint_density(Tier::Nlos, y)?) / active)
}

/// Grid sizes of the cached tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableResolution {
    pub center_offsets: usize,
    /// Nodes on each of the six segments of a served-distance row.
    pub served_distances: usize,
    pub bearings: usize,
}

impl Default for TableResolution {
    fn default() -> Self {
        Self {
            center_offsets: 64,
            served_distances: 48,
            bearings: 64,
        }
    }
}

/// Breakpoints of the served-distance density at center offset `d_hat`:
/// `0`, then `D ± d̂` and their images under both pathloss-equivalence maps,
/// clamped to the support and sorted. Always the same count, so rows at
/// different offsets line up segment by segment.
fn served_knots(radius: f64, d_hat: f64, ratio: f64) -> [f64; 7] {
    let reach = radius + d_hat;
    let (a, b) = (radius - d_hat, reach);
    let mut k = [0.0, a, b, a.powf(ratio), b.powf(ratio), a.powf(1.0 / ratio), b.powf(1.0 / ratio)];
    for v in &mut k[1..] {
        *v = v.clamp(0.0, reach);
    }
    k.sort_by(f64::total_cmp);
    k
}

/// Density values on one row, sampled separately on each segment between knots.
#[derive(Debug, Clone)]
struct ServedRow {
    segments: Vec<Vec<f64>>,
}

impl ServedRow {
    fn eval_segment(&self, seg: usize, t: f64) -> f64 {
        let v = &self.segments[seg];
        let n = v.len();
        let pos = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (pos.floor() as usize).clamp(1, n - 3) - 1;
        let w = lagrange4(pos - i as f64);
        (0..4).map(|j| w[j] * v[i + j]).sum()
    }
}

/// Locate `y` in the knot sequence: segment index and fraction within it.
fn locate(knots: &[f64; 7], y: f64) -> (usize, f64) {
    for seg in 0..6 {
        let (lo, hi) = (knots[seg], knots[seg + 1]);
        if y <= hi && hi > lo {
            return (seg, from_segment((y - lo) / (hi - lo)));
        }
    }
    (5, 1.0)
}

/// Served-receiver distance density tabulated over center offsets.
///
/// The density has kinks at offset-dependent distances, so each row is
/// sampled on its own knot-aligned grid and rows are blended in the
/// coordinate (segment, fraction) that keeps the kinks on grid lines.
#[derive(Debug, Clone)]
pub struct ServedDistanceTable {
    radius: f64,
    ratio: f64,
    step: f64,
    rows: Vec<ServedRow>,
    peak: f64,
}

impl ServedDistanceTable {
    pub fn build(config: &NetworkConfig, res: TableResolution, par: Parallelism) -> Result<Self> {
        let radius = config.radius;
        let ratio = config.pathloss.alpha_nlos / config.pathloss.alpha_los;
        let n_rows = res.center_offsets.max(4);
        let offsets = linspace(0.0, radius, n_rows);
        let n = res.served_distances.max(4);
        let rows = par.map_slice(&offsets, |&d_hat| -> Result<ServedRow> {
            let knots = served_knots(radius, d_hat, ratio);
            let mut segments = Vec::with_capacity(6);
            for seg in 0..6 {
                let (lo, len) = (knots[seg], knots[seg + 1] - knots[seg]);
                let values = (0..n)
                    .map(|i| served_distance_pdf(d_hat, lo + len * to_segment(i as f64 / (n - 1) as f64), config))
                    .collect::<Result<Vec<f64>>>()?;
                segments.push(values);
            }
            Ok(ServedRow { segments })
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let peak = rows.iter().flat_map(|r| r.segments.iter().flatten()).fold(0.0f64, |m, &v| m.max(v));
        Ok(Self {
            radius,
            ratio,
            step: radius / (n_rows - 1) as f64,
            rows,
            peak,
        })
    }

    /// Interpolated density, zero outside `[0, D + d̂]`.
    pub fn pdf(&self, d_hat: f64, y: f64) -> f64 {
        let d_hat = d_hat.clamp(0.0, self.radius);
        let reach = self.radius + d_hat;
        if !(y >= 0.0 && y <= reach) {
            return 0.0;
        }
        let (seg, t) = locate(&served_knots(self.radius, d_hat, self.ratio), y);
        let pos = d_hat / self.step;
        let n = self.rows.len();
        let i = (pos.floor() as usize).clamp(1, n - 3) - 1;
        let w = lagrange4(pos - i as f64);
        let v: f64 = (0..4).map(|j| w[j] * self.rows[i + j].eval_segment(seg, t)).sum();
        v.max(0.0)
    }

    /// Largest tabulated density value.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    fn knots(&self, d_hat: f64) -> [f64; 7] {
        served_knots(self.radius, d_hat, self.ratio)
    }

    /// Distances where the interpolant at `d_hat` switches cubic pieces.
    pub fn cell_edges(&self, d_hat: f64) -> Vec<f64> {
        let knots = self.knots(d_hat.clamp(0.0, self.radius));
        let n = self.rows[0].segments[0].len();
        let mut edges = vec![0.0];
        for seg in 0..6 {
            let (lo, len) = (knots[seg], knots[seg + 1] - knots[seg]);
            if len > 0.0 {
                edges.extend((1..n).map(|i| lo + len * to_segment(i as f64 / (n - 1) as f64)));
            }
        }
        edges
    }
}

/// Served-distance density of one offset at the Kronrod nodes of every
/// interpolation cell, reused across bearings.
struct RowQuadrature {
    cells: Vec<(f64, f64)>,
    // (node, weight × density)
    nodes: Vec<[(f64, f64); 21]>,
    mass: f64,
}

impl RowQuadrature {
    fn new(served: &ServedDistanceTable, d_hat: f64) -> Self {
        let mut edges = served.cell_edges(d_hat);
        edges.push(served.radius + d_hat);
        edges.dedup();
        let cells: Vec<(f64, f64)> = edges.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect();
        let nodes: Vec<[(f64, f64); 21]> = cells
            .iter()
            .map(|&(a, b)| kronrod_rule(a, b).map(|(y, w)| (y, w * served.pdf(d_hat, y))))
            .collect();
        let mass = nodes.iter().flatten().map(|(_, wf)| wf).sum();
        Self { cells, nodes, mass }
    }
}

fn tx_hit_kinks(d_hat: f64, bearing: f64, width: f64, radius: f64) -> Vec<f64> {
    let geom = DiskGeometry {
        radius,
        offset: d_hat.min(radius),
    };
    // where the arc edge crosses a window edge
    [bearing - 0.5 * width, bearing + 0.5 * width, 2.0 * PI - bearing - 0.5 * width]
        .into_iter()
        .map(f64::abs)
        .filter(|t| *t <= PI)
        .map(|t| geom.boundary_radius(t))
        .collect()
}

/// Expected transmit-lobe hit probability `c̄(d̂, φ̂_T)` over the served distance.
fn mean_tx_hit(served: &ServedDistanceTable, row: &RowQuadrature, d_hat: f64, bearing: f64, width: f64) -> f64 {
    if !(row.mass > 0.0) {
        return (width / (2.0 * PI)).min(1.0);
    }
    let radius = served.radius;
    let c = |y: f64| tx_hit_probability(d_hat, bearing, y, radius, width);
    let mut kinks = tx_hit_kinks(d_hat, bearing, width, radius);
    kinks.sort_by(f64::total_cmp);
    let mut hit = 0.0;
    for (&(a, b), nodes) in row.cells.iter().zip(&row.nodes) {
        let inside: Vec<f64> = kinks.iter().copied().filter(|&k| k > a && k < b).collect();
        if inside.is_empty() {
            hit += nodes.iter().map(|&(y, wf)| wf * c(y)).sum::<f64>();
            continue;
        }
        let mut lo = a;
        for hi in inside.into_iter().chain([b]) {
            hit += kronrod_rule(lo, hi)
                .iter()
                .map(|&(y, w)| w * c(y) * served.pdf(d_hat, y))
                .sum::<f64>();
            lo = hi;
        }
    }
    (hit / row.mass).clamp(0.0, 1.0)
}

/// Tables shared by every Laplace-transform evaluation of one network.
///
/// They depend on the transmitter process, blockage, pathloss, and transmit
/// beamwidth, but not on the reference receiver's offset or beamwidth.
#[derive(Debug, Clone)]
pub struct InterferenceField {
    pub config: NetworkConfig,
    pub levels: GainLevels,
    pub tx: AntennaPattern,
    pub rx: AntennaPattern,
    served: Option<ServedDistanceTable>,
    mean_hit: Option<Tabulation>,
    transform_tol: f64,
}

/// Fading orders up to [`FadingModel::MAX_ORDER`](crate::channel::FadingModel::MAX_ORDER) fit in one vector integrand.
pub const LANES: usize = 8;

/// Default relative tolerance of a transform's exponent `−ln ℒ`. The
/// absolute tolerance is a thousandth of it.
pub const TRANSFORM_REL_TOL: f64 = 1e-5;

impl InterferenceField {
    pub fn build(config: &NetworkConfig, res: TableResolution, par: Parallelism) -> Result<Self> {
        config.validate()?;
        let tx = config.tx_pattern()?;
        let rx = config.rx_pattern()?;
        let (served, mean_hit) = if config.lambda_t > 0.0 {
            let served = ServedDistanceTable::build(config, res, par)?;
            let offsets = linspace(0.0, config.radius, res.center_offsets);
            let bearings = linspace(0.0, PI, res.bearings);
            let rows = par.map_slice(&offsets, |&d_hat| -> Result<Vec<f64>> {
                let row = RowQuadrature::new(&served, d_hat);
                Ok(bearings
                    .iter()
                    .map(|&b| mean_tx_hit(&served, &row, d_hat, b, config.theta_t))
                    .collect())
            });
            let mut values = Vec::with_capacity(offsets.len() * bearings.len());
            for row in rows {
                values.extend(row?);
            }
            let table = Tabulation::new(vec![offsets, bearings], values, Interpolation::Cubic)?;
            (Some(served), Some(table))
        } else {
            (None, None)
        };
        Ok(Self {
            config: *config,
            levels: GainLevels::new(&tx, &rx),
            tx,
            rx,
            served,
            mean_hit,
            transform_tol: TRANSFORM_REL_TOL,
        })
    }

    /// Same tables with another relative tolerance for the transforms.
    pub fn with_transform_tolerance(mut self, rel: f64) -> Result<Self> {
        if !(rel > 0.0 && rel < 0.1) {
            return Err(Error::domain(
                "InterferenceField",
                format!("transform tolerance {rel} outside (0, 0.1)"),
            ));
        }
        self.transform_tol = rel;
        Ok(self)
    }

    pub fn transform_tolerance(&self) -> f64 {
        self.transform_tol
    }

    pub fn new(config: &NetworkConfig) -> Result<Self> {
        Self::build(config, TableResolution::default(), Parallelism::default())
    }

    pub fn served_distances(&self) -> Option<&ServedDistanceTable> {
        self.served.as_ref()
    }

    /// `c̄(d̂, φ̂_T)` from the cached table.
    pub fn mean_tx_hit(&self, d_hat: f64, bearing: f64) -> f64 {
        match &self.mean_hit {
            Some(t) => t.eval(&[d_hat, bearing]).clamp(0.0, 1.0),
            None => self.tx.sector_fraction().min(1.0),
        }
    }

    /// `c̄(d̂, φ̂_T)` integrated directly against the served-distance table.
    pub fn mean_tx_hit_direct(&self, d_hat: f64, bearing: f64) -> Result<f64> {
        match &self.served {
            Some(s) => Ok(mean_tx_hit(s, &RowQuadrature::new(s, d_hat), d_hat, bearing, self.tx.beamwidth)),
            None => Ok(self.tx.sector_fraction().min(1.0)),
        }
    }

    /// Transmit-lobe hit probability the chosen mode assigns.
    fn tx_hit(&self, mode: Mode, d_hat: f64, bearing: f64) -> f64 {
        let main_stronger = self.tx.main_gain >= self.tx.side_gain;
        match mode {
            Mode::Exact => self.mean_tx_hit(d_hat, bearing),
            Mode::LowerBound => f64::from(u8::from(main_stronger)),
            Mode::UpperBound => f64::from(u8::from(!main_stronger)),
        }
    }

    /// `−ln ℒ` of the interference from `interferer` tiers, given service by
    /// `serving` at distance `r`, for up to [`LANES`] values of `s` at once.
    pub fn log_transform_lanes(
        &self,
        geom: &DiskGeometry,
        serving: Tier,
        interferer: Tier,
        r: f64,
        s: &[f64],
        mode: Mode,
    ) -> Result<[f64; LANES]> {
        let n = s.len();
        if n > LANES {
            return Err(Error::domain("laplace_transform", format!("{n} arguments exceed {LANES} lanes")));
        }
        if s.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::domain("laplace_transform", "s must be finite and nonnegative"));
        }
        let mut out = [0.0; LANES];
        let lambda = self.config.lambda_t;
        if lambda == 0.0 || s.iter().all(|&v| v == 0.0) {
            return Ok(out);
        }
        let rho = self.config.pathloss.equivalent_distance(r, serving, interferer);
        if rho >= geom.outer() {
            return Ok(out);
        }
        let alpha = self.config.alpha(interferer);
        let v = self.config.fading.order(interferer);
        let binom = binomials(v);
        let levels = self.levels.as_array();
        let rx_width = self.rx.beamwidth;
        let rx_half = geom.arc_half_angle(r);
        let blockage = self.config.blockage;

        let theta_max = geom.arc_half_angle(rho);
        let mut theta_cuts = vec![0.5 * rx_width, PI - 0.5 * rx_width];
        if rx_half < PI {
            theta_cuts.extend([
                rx_half - 0.5 * rx_width,
                rx_half + 0.5 * rx_width,
                2.0 * PI - rx_half - 0.5 * rx_width,
            ]);
        }
        // the integral is scaled by 2λ afterwards
        let outer_spec =
            IntegrationSpec::new(0.0, theta_max).with_tolerances(self.transform_tol, 1e-3 * self.transform_tol / (2.0 * lambda));
        let inner_tol = outer_spec.tightened(10.0 * PI);

        let failure = std::cell::Cell::new(None);
        let radial = |theta: f64| -> Lanes<LANES> {
            let top = geom.boundary_radius(theta);
            if top <= rho {
                return Lanes([0.0; LANES]);
            }
            let p = window_fraction(theta, rx_width, rx_half);
            let spec = inner_tol.over(rho, top);
            let integrand = |x: f64| -> Lanes<LANES> {
                let mut k = [0.0; LANES];
                let weight = blockage.probability(interferer, x) * x;
                if weight == 0.0 {
                    return Lanes(k);
                }
                let d_hat = center_distance(x, theta, geom.offset);
                let c = match tx_bearing(x, d_hat, geom.offset) {
                    Ok(b) => self.tx_hit(mode, d_hat, b),
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                };
                let probs = [c * p, c * (1.0 - p), (1.0 - c) * p, (1.0 - c) * (1.0 - p)];
                let path = x.powf(-alpha) / v as f64;
                for (lane, &sv) in k.iter_mut().zip(s) {
                    let mut acc = 0.0;
                    for (b, a) in probs.iter().zip(levels) {
                        if *b > 0.0 {
                            acc += b * one_minus_mgf(sv * a * path, v, &binom);
                        }
                    }
                    *lane = weight * acc;
                }
                Lanes(k)
            };
            match integrate_adaptive(integrand, &spec, &[]) {
                Ok(e) => e.value,
                Err(e) => {
                    failure.set(Some(e.nested(1)));
                    Lanes([0.0; LANES])
                }
            }
        };
        let est = integrate_adaptive(radial, &outer_spec, &theta_cuts)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        for (o, v) in out.iter_mut().zip(est.value.0).take(n) {
            *o = 2.0 * lambda * v;
        }
        Ok(out)
    }

    /// ℒ_{interferer | serving}(s | r) for a receiver in `geom`.
    pub fn laplace_transform(&self, geom: &DiskGeometry, serving: Tier, interferer: Tier, s: f64, r: f64, mode: Mode) -> Result<f64> {
        let e = self.log_transform_lanes(geom, serving, interferer, r, &[s], mode)?;
        Ok((-e[0]).exp())
    }

    /// The same transform as a literal triple integral over (θ, x, y), with the
    /// served distance `y` integrated inside rather than through `c̄`.
    pub fn laplace_transform_triple(&self, geom: &DiskGeometry, serving: Tier, interferer: Tier, s: f64, r: f64) -> Result<f64> {
        let lambda = self.config.lambda_t;
        let rho = self.config.pathloss.equivalent_distance(r, serving, interferer);
        let served = match &self.served {
            Some(t) if s > 0.0 && rho < geom.outer() => t,
            _ => return Ok(1.0),
        };
        let alpha = self.config.alpha(interferer);
        let v = self.config.fading.order(interferer);
        let binom = binomials(v);
        let levels = self.levels;
        let rx_half = geom.arc_half_angle(r);
        let (tx_w, rx_w, radius) = (self.tx.beamwidth, self.rx.beamwidth, geom.radius);
        let blockage = self.config.blockage;
        let g = *geom;
        let spec = IntegrationSpec::new(0.0, 1.0)
            .with_tolerances(1e-4, 1e-8)
            .with_max_subdivisions(1000);
        let integral = NestedIntegral::new()
            .fixed(spec.over(0.0, geom.arc_half_angle(rho)))
            .dependent(spec, move |o| (rho, g.boundary_radius(o[0]).max(rho)))
            .dependent(spec, move |o| (0.0, radius + center_distance(o[1], o[0], g.offset)))
            .with_breakpoints(move |o| {
                let d_hat = center_distance(o[1], o[0], g.offset);
                let bearing = tx_bearing(o[1], d_hat, g.offset).unwrap_or(0.0);
                let mut cuts = served.knots(d_hat).to_vec();
                cuts.extend(tx_hit_kinks(d_hat, bearing, tx_w, radius));
                cuts
            });
        let value = integral.integrate(|v3| {
            let (theta, x, y) = (v3[0], v3[1], v3[2]);
            let d_hat = center_distance(x, theta, g.offset);
            let bearing = tx_bearing(x, d_hat, g.offset).unwrap_or(0.0);
            let c = tx_hit_probability(d_hat, bearing, y, radius, tx_w);
            let p = window_fraction(theta, rx_w, rx_half);
            let mix = GainMixture::from_hit_probabilities(c, p, levels);
            let path = x.powf(-alpha) / v as f64;
            let kernel = mix.expectation(|a| one_minus_mgf(s * a * path, v, &binom));
            kernel * served.pdf(d_hat, y) * blockage.probability(interferer, x) * x
        })?;
        Ok((-2.0 * lambda * value).exp())
    }
}

/// Binomial coefficients C(v, k) for k = 0..=v.
fn binomials(v: u32) -> [f64; LANES + 1] {
    let mut c = [0.0; LANES + 1];
    c[0] = 1.0;
    for k in 1..=v as usize {
        c[k] = c[k - 1] * (v as f64 - k as f64 + 1.0) / k as f64;
    }
    c
}

/// `1 − (1 + z)^{−v}` without cancellation for small `z`.
#[inline]
fn one_minus_mgf(z: f64, v: u32, binom: &[f64; LANES + 1]) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if z > 1e8 {
        return 1.0 - (1.0 + z).powi(-(v as i32));
    }
    // (1 + z)^v − 1 = z Σ_{k=1}^{v} C(v, k) z^{k−1}
    let mut acc = 0.0;
    for k in (1..=v as usize).rev() {
        acc = acc * z + binom[k];
    }
    z * acc / (1.0 + z).powi(v as i32)
}

/// ℒ_{interferer | serving}(s | r) at a receiver `d` from the center.
pub fn laplace_transform(serving_tier: Tier, interferer_tier: Tier, s: f64, r: f64, d: f64, field: &InterferenceField) -> Result<f64> {
    let geom = field.config.geometry(d)?;
    field.laplace_transform(&geom, serving_tier, interferer_tier, s, r, Mode::Exact)
}

/// Bounding transform: `Mode::LowerBound` or `Mode::UpperBound`.
pub fn laplace_transform_bound(
    kind: Mode,
    serving_tier: Tier,
    interferer_tier: Tier,
    s: f64,
    r: f64,
    d: f64,
    field: &InterferenceField,
) -> Result<f64> {
    if kind == Mode::Exact {
        return Err(Error::domain("laplace_transform_bound", "kind must be a bound"));
    }
    let geom = field.config.geometry(d)?;
    field.laplace_transform(&geom, serving_tier, interferer_tier, s, r, kind)
}
