//! Experiment configuration: a flat `key = value` file.
//!
//! Values are kept in presentation units (dB, degrees, Hz) and converted once
//! when the network is built, so parse → serialize → parse is exact.
//! Precedence, lowest first: built-in defaults, the file, `MMCOV_<KEY>`
//! environment variables, command-line flags.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use mmcov_core::analysis::Tolerances;
use mmcov_core::config::db_to_linear;
use mmcov_core::geometry::BlockageModel;
use mmcov_core::interference::Mode;
use mmcov_core::montecarlo::IdlePolicy;
use mmcov_core::NetworkConfig;

use crate::CliError;

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    BetaDb,
    Delta,
    /// Both beamwidths at once.
    ThetaDeg,
    Mu,
    AlphaLos,
}

/// How a row's value is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Analytic,
    Mc,
    Lower,
    Upper,
}

impl RunMode {
    /// Analytic evaluation mode, `None` for the simulator.
    pub fn analytic(self) -> Option<Mode> {
        match self {
            RunMode::Analytic => Some(Mode::Exact),
            RunMode::Lower => Some(Mode::LowerBound),
            RunMode::Upper => Some(Mode::UpperBound),
            RunMode::Mc => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Coverage,
    Rate,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),* }
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok($ty::$variant),)*
                    _ => Err(format!(
                        "unknown {} `{s}` (expected one of: {})",
                        stringify!($ty).to_lowercase(),
                        [$($name),*].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

keyword_enum!(Axis { BetaDb => "beta_db", Delta => "delta", ThetaDeg => "theta_deg", Mu => "mu", AlphaLos => "alpha_los" });
keyword_enum!(RunMode { Analytic => "analytic", Mc => "mc", Lower => "lower", Upper => "upper" });
keyword_enum!(Metric { Coverage => "coverage", Rate => "rate" });

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub lambda_t: f64,
    pub lambda_r: f64,
    pub radius: f64,
    pub mu: f64,
    pub theta_t_deg: f64,
    pub theta_r_deg: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub v_los: u32,
    pub v_nlos: u32,
    pub noise_db: f64,
    pub bandwidth_hz: f64,
    /// Receiver offset as a fraction of the radius.
    pub delta: f64,
    pub beta_db: f64,
    pub metric: Metric,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub modes: Vec<RunMode>,
    pub trials: u64,
    pub seed: u64,
    pub idle: IdlePolicy,
    pub output: Option<String>,
    pub tol_transform: f64,
    pub tol_coverage: f64,
    pub tol_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = NetworkConfig::table_one();
        let tol = Tolerances::default();
        let mu = match t.blockage {
            BlockageModel::Exponential { mu } => mu,
            BlockageModel::Constant { .. } => unreachable!("reference blockage is exponential"),
        };
        Self {
            lambda_t: t.lambda_t,
            lambda_r: t.lambda_r,
            radius: t.radius,
            mu,
            theta_t_deg: 36.0,
            theta_r_deg: 36.0,
            alpha_los: t.pathloss.alpha_los,
            alpha_nlos: t.pathloss.alpha_nlos,
            v_los: t.fading.v_los,
            v_nlos: t.fading.v_nlos,
            noise_db: -30.0,
            bandwidth_hz: t.bandwidth,
            delta: 0.2,
            beta_db: 10.0,
            metric: Metric::Coverage,
            axis: Axis::BetaDb,
            grid: (0..21).map(|i| -10.0 + 2.0 * i as f64).collect(),
            modes: vec![RunMode::Analytic],
            trials: 100_000,
            seed: 1,
            idle: IdlePolicy::Silent,
            output: None,
            tol_transform: tol.transform,
            tol_coverage: tol.coverage,
            tol_rate: tol.rate,
        }
    }
}

/// Every recognised key, in file order.
pub const KEYS: &[&str] = &[
    "lambda_t",
    "lambda_r",
    "radius",
    "mu",
    "theta_t_deg",
    "theta_r_deg",
    "alpha_los",
    "alpha_nlos",
    "v_los",
    "v_nlos",
    "noise_db",
    "bandwidth_hz",
    "delta",
    "beta_db",
    "metric",
    "axis",
    "grid",
    "modes",
    "trials",
    "seed",
    "idle",
    "output",
    "tol_transform",
    "tol_coverage",
    "tol_rate",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("{key}: cannot parse `{value}`: {e}"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn idle_name(idle: IdlePolicy) -> &'static str {
    match idle {
        IdlePolicy::Silent => "silent",
        IdlePolicy::RandomBeam => "random_beam",
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let r: Result<(), String> = (|| {
            match key {
                "lambda_t" => self.lambda_t = parse_num(key, value)?,
                "lambda_r" => self.lambda_r = parse_num(key, value)?,
                "radius" => self.radius = parse_num(key, value)?,
                "mu" => self.mu = parse_num(key, value)?,
                "theta_t_deg" => self.theta_t_deg = parse_num(key, value)?,
                "theta_r_deg" => self.theta_r_deg = parse_num(key, value)?,
                "alpha_los" => self.alpha_los = parse_num(key, value)?,
                "alpha_nlos" => self.alpha_nlos = parse_num(key, value)?,
                "v_los" => self.v_los = parse_num(key, value)?,
                "v_nlos" => self.v_nlos = parse_num(key, value)?,
                "noise_db" => self.noise_db = parse_num(key, value)?,
                "bandwidth_hz" => self.bandwidth_hz = parse_num(key, value)?,
                "delta" => self.delta = parse_num(key, value)?,
                "beta_db" => self.beta_db = parse_num(key, value)?,
                "metric" => self.metric = value.parse()?,
                "axis" => self.axis = value.parse()?,
                "grid" => self.grid = parse_list(key, value)?,
                "modes" => self.modes = parse_list(key, value)?,
                "trials" => self.trials = parse_num(key, value)?,
                "seed" => self.seed = parse_num(key, value)?,
                "idle" => {
                    self.idle = match value {
                        "silent" => IdlePolicy::Silent,
                        "random_beam" => IdlePolicy::RandomBeam,
                        _ => return Err(format!("idle: unknown policy `{value}` (expected silent or random_beam)")),
                    }
                }
                "output" => self.output = (!value.is_empty()).then(|| value.to_string()),
                "tol_transform" => self.tol_transform = parse_num(key, value)?,
                "tol_coverage" => self.tol_coverage = parse_num(key, value)?,
                "tol_rate" => self.tol_rate = parse_num(key, value)?,
                _ => return Err(format!("unknown key `{key}`")),
            }
            Ok(())
        })();
        r.map_err(CliError::Config)
    }

    /// Apply a config file's text on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Config(format!("{origin}:{}: {msg}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(at(format!("duplicate key `{key}`")));
            }
            self.set(key, value).map_err(|e| at(e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text, "<config>")?;
        Ok(cfg)
    }

    /// Apply `MMCOV_<KEY>` overrides from `vars`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), CliError> {
        let mut vars: Vec<_> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix("MMCOV_").map(|k| (k.to_ascii_lowercase(), v)))
            .collect();
        vars.sort();
        for (key, value) in vars {
            if key == "log" {
                continue;
            }
            self.set(&key, &value)
                .map_err(|e| CliError::Config(format!("environment MMCOV_{}: {e}", key.to_ascii_uppercase())))?;
        }
        Ok(())
    }

    /// Text that [`parse`](Self::parse) maps back to `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("lambda_t", self.lambda_t.to_string());
        put("lambda_r", self.lambda_r.to_string());
        put("radius", self.radius.to_string());
        put("mu", self.mu.to_string());
        put("theta_t_deg", self.theta_t_deg.to_string());
        put("theta_r_deg", self.theta_r_deg.to_string());
        put("alpha_los", self.alpha_los.to_string());
        put("alpha_nlos", self.alpha_nlos.to_string());
        put("v_los", self.v_los.to_string());
        put("v_nlos", self.v_nlos.to_string());
        put("noise_db", self.noise_db.to_string());
        put("bandwidth_hz", self.bandwidth_hz.to_string());
        put("delta", self.delta.to_string());
        put("beta_db", self.beta_db.to_string());
        put("metric", self.metric.to_string());
        put("axis", self.axis.to_string());
        put("grid", join(&self.grid));
        put("modes", join(&self.modes));
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("idle", idle_name(self.idle).to_string());
        put("output", self.output.clone().unwrap_or_default());
        put("tol_transform", self.tol_transform.to_string());
        put("tol_coverage", self.tol_coverage.to_string());
        put("tol_rate", self.tol_rate.to_string());
        s
    }

    /// The network in internal units.
    pub fn network(&self) -> Result<NetworkConfig, CliError> {
        let cfg = NetworkConfig {
            lambda_t: self.lambda_t,
            lambda_r: self.lambda_r,
            radius: self.radius,
            blockage: BlockageModel::exponential(self.mu)?,
            theta_t: self.theta_t_deg.to_radians(),
            theta_r: self.theta_r_deg.to_radians(),
            pathloss: mmcov_core::channel::PathlossModel::new(self.alpha_los, self.alpha_nlos)?,
            fading: mmcov_core::channel::FadingModel::new(self.v_los, self.v_nlos)?,
            noise: db_to_linear(self.noise_db),
            bandwidth: self.bandwidth_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            transform: self.tol_transform,
            coverage: self.tol_coverage,
            rate: self.tol_rate,
        }
    }

    /// The same experiment with the sweep axis set to `value`.
    pub fn at(&self, axis: Axis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            Axis::BetaDb => c.beta_db = value,
            Axis::Delta => c.delta = value,
            Axis::ThetaDeg => {
                c.theta_t_deg = value;
                c.theta_r_deg = value;
            }
            Axis::Mu => c.mu = value,
            Axis::AlphaLos => c.alpha_los = value,
        }
        c
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        let up = self.grid.windows(2).all(|w| w[0] < w[1]);
        let down = self.grid.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return bad("grid must be strictly monotone".into());
        }
        if self.modes.is_empty() {
            return bad("no modes requested".into());
        }
        if self.modes.contains(&RunMode::Mc) && self.trials == 0 {
            return bad("trials must be positive when mc is requested".into());
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return bad(format!("delta = {} outside [0, 1]", self.delta));
        }
        if self.metric == Metric::Rate && self.axis == Axis::BetaDb {
            return bad("the rate does not depend on beta_db; sweep another axis".into());
        }
        self.tolerances().validate()?;
        // every grid point must give a valid network
        for &v in &self.grid {
            let c = self.at(self.axis, v);
            if !(0.0..=1.0).contains(&c.delta) {
                return bad(format!("delta = {} outside [0, 1]", c.delta));
            }
            c.network()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_network() {
        let cfg = ExperimentConfig::default();
        let net = cfg.network().unwrap();
        let t = NetworkConfig::table_one();
        assert_eq!(net.lambda_t, t.lambda_t);
        assert!((net.noise - t.noise).abs() < 1e-18);
        assert!((net.theta_t - t.theta_t).abs() < 1e-15);
        assert_eq!(cfg.grid.len(), 21);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_comments_units_and_lists() {
        let text = "# reference run\nnoise_db = -20   # dB\ntheta_t_deg=90\n\n  grid = 1, 2,3\nmodes = analytic, mc\naxis = mu\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.noise_db, -20.0);
        assert!((cfg.network().unwrap().noise - 0.01).abs() < 1e-15);
        assert!((cfg.network().unwrap().theta_t - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(cfg.grid, vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.modes, vec![RunMode::Analytic, RunMode::Mc]);
        assert_eq!(cfg.axis, Axis::Mu);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_errors() {
        let e = ExperimentConfig::parse("lamda_t = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("unknown key `lamda_t`"), "{e}");
        assert!(e.to_string().contains(":1:"), "{e}");
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(ExperimentConfig::parse("seed\n").is_err());
        assert!(ExperimentConfig::parse("seed = x\n").is_err());
        assert!(ExperimentConfig::parse("modes = analytic, bogus\n").is_err());
    }

    #[test]
    fn every_key_round_trips() {
        let cfg = ExperimentConfig::default();
        let text = cfg.serialize();
        let keys: Vec<&str> = text.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        assert_eq!(keys, KEYS);
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn environment_overrides_file_values() {
        let mut cfg = ExperimentConfig::parse("seed = 3\n").unwrap();
        cfg.apply_env([("MMCOV_SEED".to_string(), "9".to_string()), ("HOME".to_string(), "/".to_string())])
            .unwrap();
        assert_eq!(cfg.seed, 9);
        let e = cfg.apply_env([("MMCOV_NOPE".to_string(), "1".to_string())]).unwrap_err();
        assert!(e.to_string().contains("MMCOV_NOPE"));
    }

    #[test]
    fn invalid_experiments_are_rejected() {
        let base = ExperimentConfig::default();
        let cases = [
            ExperimentConfig {
                grid: vec![],
                ..base.clone()
            },
            ExperimentConfig {
                grid: vec![1.0, 1.0],
                ..base.clone()
            },
            ExperimentConfig {
                grid: vec![1.0, 3.0, 2.0],
                ..base.clone()
            },
            ExperimentConfig {
                modes: vec![RunMode::Mc],
                trials: 0,
                ..base.clone()
            },
            ExperimentConfig {
                delta: 1.5,
                ..base.clone()
            },
            ExperimentConfig {
                metric: Metric::Rate,
                ..base.clone()
            },
            ExperimentConfig {
                alpha_los: 5.0,
                ..base.clone()
            },
            ExperimentConfig {
                axis: Axis::ThetaDeg,
                grid: vec![10.0, 400.0],
                ..base.clone()
            },
            ExperimentConfig {
                tol_rate: 0.0,
                ..base.clone()
            },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(CliError::Config(_)) | Err(CliError::Core(_))), "{c:?}");
        }
        let down = ExperimentConfig {
            grid: vec![3.0, 2.0, 1.0],
            ..base
        };
        down.validate().unwrap();
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn finite() -> impl Strategy<Value = f64> {
            prop_oneof![-1e6..1e6f64, 1e-12..1e-3f64, Just(0.0)]
        }

        proptest! {
            #[test]
            fn parse_serialize_parse_is_identity(
                lambda_t in finite(), mu in finite(), noise_db in finite(),
                grid in proptest::collection::vec(finite(), 1..6),
                modes in proptest::sample::subsequence(RunMode::ALL.to_vec(), 1..4),
                axis in proptest::sample::select(Axis::ALL.to_vec()),
                seed in any::<u64>(), trials in any::<u64>(),
                output in proptest::option::of("[a-z0-9_./]{1,12}"),
            ) {
                let cfg = ExperimentConfig {
                    lambda_t, mu, noise_db, grid, modes, axis, seed, trials, output,
                    ..ExperimentConfig::default()
                };
                let once = ExperimentConfig::parse(&cfg.serialize()).unwrap();
                prop_assert_eq!(&once, &cfg);
                prop_assert_eq!(once.serialize(), cfg.serialize());
            }
        }
    }
}
