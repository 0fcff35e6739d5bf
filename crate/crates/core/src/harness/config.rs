//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated. Complex points are written `re:im`. Unknown
//! and repeated keys are rejected. See [`SCHEMA`] for the accepted keys.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cdma::{DenseScale, MAX_USERS};
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::sk::MAX_SPINS;

/// `(key, type, meaning)` for every accepted key.
pub const SCHEMA: &[(&str, &str, &str)] = &[
    ("experiment", "id", "cdma.universality | cdma.sparse-dense | sk.universality | sk.sparse-dense | lasso.universality | spectra.sparse-dense"),
    ("ensemble_a", "ensemble", "first ensemble (gaussian, rademacher, uniform, bernoulli:p=P)"),
    ("ensemble_b", "ensemble", "second ensemble of a universality comparison"),
    ("n", "integer", "dimension"),
    ("gammas", "float list", "sparsity levels of a sparse-dense sweep"),
    ("alpha", "float", "aspect ratio m/n"),
    ("sigma", "float", "noise level"),
    ("beta", "float", "inverse temperature"),
    ("reg_weight", "float", "l1 weight of the LASSO"),
    ("rho", "float", "fraction of nonzero signal entries"),
    ("x_max", "float", "box constraint of the LASSO"),
    ("dense_scale", "n | m", "divisor convention of the dense side of a CDMA sparse-dense sweep"),
    ("z", "complex list", "Stieltjes evaluation points, re:im"),
    ("trials", "integer", "paired trials (matrices)"),
    ("noise_trials", "integer", "noise draws per CDMA matrix"),
    ("seed", "integer", "master seed"),
    ("workers", "integer", "worker threads; omitted means all cores"),
    ("out_dir", "path", "directory receiving trials.csv and summary.json"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CdmaUniversality,
    CdmaSparseDense,
    SkUniversality,
    SkSparseDense,
    LassoUniversality,
    SpectraSparseDense,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::CdmaUniversality => "cdma.universality",
            ExperimentKind::CdmaSparseDense => "cdma.sparse-dense",
            ExperimentKind::SkUniversality => "sk.universality",
            ExperimentKind::SkSparseDense => "sk.sparse-dense",
            ExperimentKind::LassoUniversality => "lasso.universality",
            ExperimentKind::SpectraSparseDense => "spectra.sparse-dense",
        }
    }

    fn is_sweep(self) -> bool {
        matches!(
            self,
            ExperimentKind::CdmaSparseDense | ExperimentKind::SkSparseDense | ExperimentKind::SpectraSparseDense
        )
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            ExperimentKind::CdmaUniversality,
            ExperimentKind::CdmaSparseDense,
            ExperimentKind::SkUniversality,
            ExperimentKind::SkSparseDense,
            ExperimentKind::LassoUniversality,
            ExperimentKind::SpectraSparseDense,
        ]
        .into_iter()
        .find(|k| k.id() == s.trim())
        .ok_or_else(|| Error::param("experiment", format!("unknown experiment `{}`", s.trim())))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ensemble_a: EnsembleSpec,
    pub ensemble_b: EnsembleSpec,
    pub n: usize,
    pub gammas: Vec<f64>,
    pub alpha: f64,
    pub sigma: f64,
    pub beta: f64,
    pub reg_weight: f64,
    pub rho: f64,
    pub x_max: f64,
    pub dense_scale: DenseScale,
    pub z: Vec<Complex64>,
    pub trials: usize,
    pub noise_trials: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for `kind`; every other key keeps a neutral value.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (n, alpha, trials) = match kind {
            ExperimentKind::CdmaUniversality => (10, 1.5, 100),
            ExperimentKind::CdmaSparseDense => (12, 1.0, 100),
            ExperimentKind::SkUniversality | ExperimentKind::SkSparseDense => (12, 1.0, 500),
            ExperimentKind::LassoUniversality => (200, 0.5, 200),
            ExperimentKind::SpectraSparseDense => (300, 2.0, 20),
        };
        let gammas = match kind {
            ExperimentKind::SpectraSparseDense => vec![10.0, 40.0, 160.0],
            _ => vec![2.0, 4.0, 8.0],
        };
        Self {
            experiment: kind,
            ensemble_a: EnsembleSpec::gaussian(),
            ensemble_b: EnsembleSpec::rademacher(),
            n,
            gammas,
            alpha,
            sigma: 1.0,
            beta: 1.0,
            reg_weight: 0.5,
            rho: 0.2,
            x_max: 2.0,
            dense_scale: DenseScale::SqrtCols,
            z: vec![Complex64::new(1.0, 1.0)],
            trials,
            noise_trials: 200,
            seed: 1,
            workers: None,
            out_dir: None,
        }
    }

    /// Parses and validates a configuration file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: k + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if !SCHEMA.iter().any(|(s, _, _)| *s == key) {
                return Err(Error::Parse { line: k + 1, message: format!("unknown key `{key}`") });
            }
            if pairs.iter().any(|(_, existing, _)| *existing == key) {
                return Err(Error::Parse { line: k + 1, message: format!("repeated key `{key}`") });
            }
            pairs.push((k + 1, key, value.trim().to_string()));
        }
        let (_, _, kind) = pairs
            .iter()
            .find(|(_, key, _)| key == "experiment")
            .ok_or(Error::Parse { line: 0, message: "missing `experiment`".into() })?;
        let mut cfg = Self::defaults(kind.parse()?);
        for (line, key, value) in &pairs {
            cfg.set(key, value).map_err(|e| Error::Parse { line: *line, message: e.to_string() })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value; used by the parser and for
    /// command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &'static str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::param(key, format!("cannot parse `{v}`")))
        }
        fn list<T: FromStr>(key: &'static str, v: &str) -> Result<Vec<T>> {
            v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s.trim())).collect()
        }
        match key {
            "experiment" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.experiment {
                    return Err(Error::param("experiment", "cannot change the experiment after parsing"));
                }
            }
            "ensemble_a" => self.ensemble_a = value.parse()?,
            "ensemble_b" => self.ensemble_b = value.parse()?,
            "n" => self.n = num("n", value)?,
            "gammas" => self.gammas = list("gammas", value)?,
            "alpha" => self.alpha = num("alpha", value)?,
            "sigma" => self.sigma = num("sigma", value)?,
            "beta" => self.beta = num("beta", value)?,
            "reg_weight" => self.reg_weight = num("reg_weight", value)?,
            "rho" => self.rho = num("rho", value)?,
            "x_max" => self.x_max = num("x_max", value)?,
            "dense_scale" => self.dense_scale = value.parse()?,
            "z" => {
                self.z = value
                    .split(',')
                    .map(|p| {
                        let (re, im) = p.trim().split_once(':').ok_or_else(|| Error::param("z", format!("`{p}` is not re:im")))?;
                        Ok(Complex64::new(num("z", re.trim())?, num("z", im.trim())?))
                    })
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = num("trials", value)?,
            "noise_trials" => self.noise_trials = num("noise_trials", value)?,
            "seed" => self.seed = num("seed", value)?,
            "workers" => self.workers = Some(num("workers", value)?),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            other => return Err(Error::Parse { line: 0, message: format!("unknown key `{other}`") }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} must be positive")))
            }
        };
        if self.n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::param("trials", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers", "must be positive"));
        }
        positive("alpha", self.alpha)?;
        positive("sigma", self.sigma)?;
        if self.experiment.is_sweep() {
            if self.gammas.is_empty() {
                return Err(Error::param("gammas", "at least one value is required"));
            }
            if let Some(g) = self.gammas.iter().find(|&&g| !(g > 0.0) || g > self.n as f64) {
                return Err(Error::param("gammas", format!("{g} is outside (0, n = {}]", self.n)));
            }
        }
        match self.experiment {
            ExperimentKind::CdmaUniversality | ExperimentKind::CdmaSparseDense => {
                if self.n > MAX_USERS {
                    return Err(Error::param("n", format!("{} exceeds the enumeration cap {MAX_USERS}", self.n)));
                }
                if self.noise_trials == 0 {
                    return Err(Error::param("noise_trials", "must be positive"));
                }
            }
            ExperimentKind::SkUniversality | ExperimentKind::SkSparseDense => {
                if self.n > MAX_SPINS {
                    return Err(Error::param("n", format!("{} exceeds the enumeration cap {MAX_SPINS}", self.n)));
                }
                if !(self.beta >= 0.0) {
                    return Err(Error::param("beta", "must be nonnegative"));
                }
            }
            ExperimentKind::LassoUniversality => {
                positive("x_max", self.x_max)?;
                if !(self.reg_weight >= 0.0) || !(0.0..=1.0).contains(&self.rho) {
                    return Err(Error::param("rho", "need reg_weight ≥ 0 and rho in [0, 1]"));
                }
            }
            ExperimentKind::SpectraSparseDense => {
                if self.z.is_empty() || self.z.iter().any(|z| z.im == 0.0) {
                    return Err(Error::param("z", "need at least one point off the real axis"));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "ensemble_a = {}", self.ensemble_a);
        let _ = writeln!(s, "ensemble_b = {}", self.ensemble_b);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "gammas = {}", join(&self.gammas));
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "reg_weight = {}", self.reg_weight);
        let _ = writeln!(s, "rho = {}", self.rho);
        let _ = writeln!(s, "x_max = {}", self.x_max);
        let scale = match self.dense_scale {
            DenseScale::SqrtRows => "m",
            DenseScale::SqrtCols => "n",
        };
        let _ = writeln!(s, "dense_scale = {scale}");
        let z: Vec<String> = self.z.iter().map(|z| format!("{}:{}", z.re, z.im)).collect();
        let _ = writeln!(s, "z = {}", z.join(","));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "noise_trials = {}", self.noise_trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(w) = self.workers {
            let _ = writeln!(s, "workers = {w}");
        }
        if let Some(d) = &self.out_dir {
            let _ = writeln!(s, "out_dir = {}", d.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# paired CDMA comparison
experiment = cdma.universality
ensemble_a = gaussian
ensemble_b = rademacher   # trailing comment
n = 6
trials = 4
noise_trials = 10
seed = 9
";

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.experiment, ExperimentKind::CdmaUniversality);
        assert_eq!((c.n, c.trials, c.noise_trials, c.seed), (6, 4, 10, 9));
        assert_eq!(c.alpha, 1.5);
    }

    #[test]
    fn round_trips_through_text() {
        let mut c = ExperimentConfig::parse(SAMPLE).unwrap();
        c.set("workers", "2").unwrap();
        c.set("z", "1:1, 0.5:-2").unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_repeated_and_missing() {
        let unknown = format!("{SAMPLE}colour = red\n");
        assert!(matches!(ExperimentConfig::parse(&unknown), Err(Error::Parse { line: 9, .. })));
        let repeated = format!("{SAMPLE}n = 7\n");
        assert!(matches!(ExperimentConfig::parse(&repeated), Err(Error::Parse { .. })));
        assert!(ExperimentConfig::parse("n = 3\n").is_err());
        assert!(ExperimentConfig::parse("experiment = cdma.magic\n").is_err());
        assert!(ExperimentConfig::parse("experiment = sk.universality\nn\n").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        assert!(ExperimentConfig::parse("experiment = cdma.universality\nn = 21\n").is_err());
        assert!(ExperimentConfig::parse("experiment = sk.sparse-dense\nn = 12\ngammas = 4,16\n").is_err());
        assert!(ExperimentConfig::parse("experiment = spectra.sparse-dense\nz = 1:0\n").is_err());
        assert!(ExperimentConfig::parse("experiment = lasso.universality\ntrials = 0\n").is_err());
        assert!(ExperimentConfig::parse("experiment = lasso.universality\nsigma = abc\n").is_err());
    }

    #[test]
    fn schema_covers_every_key() {
        let c = ExperimentConfig::defaults(ExperimentKind::SkSparseDense);
        for (key, _, _) in SCHEMA {
            let sample = match *key {
                "experiment" => "sk.sparse-dense",
                "ensemble_a" | "ensemble_b" => "uniform",
                "gammas" => "1,2",
                "dense_scale" => "m",
                "z" => "0:1",
                "out_dir" => "out",
                _ => "3",
            };
            c.clone().set(key, sample).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}

#[cfg(test)]
mod proptests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn text_round_trips(n in 2usize..15, trials in 1usize..1000, seed in any::<u64>(), alpha in 0.25f64..3.0) {
            let mut cfg = ExperimentConfig::defaults(ExperimentKind::CdmaUniversality);
            cfg.n = n;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.alpha = alpha;
            let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
