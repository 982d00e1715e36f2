//! Experiment configuration (key = value text), dispatch and persistence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::boardgame::boardgame_demo;
use crate::duhamel::{duhamel_term, SimplexScheme};
use crate::ensemble::{random_mode_function, Profile};
use crate::error::{Error, Result};
use crate::experiments::*;
use crate::lattice::{Freq, LatticeBox, C64};
use crate::nls::{residual_study, single_mode_phase_rate};
use crate::nonresonant::{bound_sweep, BoundSweep};
use crate::omega::OmegaAverageMethod;
use crate::randomization::{Randomization, SignField, SignMode};
use crate::report::ExperimentReport;

pub const EXPERIMENTS: [&str; 7] = [
    "thm1-ratio",
    "cor2-tail",
    "duhamel-decay",
    "nonresonant-bound",
    "nls-residual",
    "boardgame-demo",
    "pairing-oracle",
];

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RANDGP_OUT";

pub const REVISION: &str = env!("RANDGP_REVISION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleChoice {
    Mixed,
    Diagonal,
    Sparse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub d: usize,
    /// None: per-experiment default.
    pub cutoffs: Option<Vec<u32>>,
    pub alpha: Option<Vec<f64>>,
    pub k: usize,
    pub j: usize,
    pub n_max: usize,
    pub ell_max: usize,
    /// None: calibrated (decay) or per-experiment default.
    pub t: Option<f64>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub mode: SignMode,
    pub method: OmegaAverageMethod,
    pub scheme: SimplexScheme,
    pub ensemble: EnsembleChoice,
    /// None: 4α.
    pub beta: Option<f64>,
    pub out: PathBuf,
    pub dump_term: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "thm1-ratio".into(),
            d: 1,
            cutoffs: None,
            alpha: None,
            k: 1,
            j: 1,
            n_max: 4,
            ell_max: 3,
            t: None,
            samples: None,
            seed: 7,
            mode: SignMode::Independent,
            method: OmegaAverageMethod::Exact,
            scheme: SimplexScheme::ProductGauss { q: 6 },
            ensemble: EnsembleChoice::Mixed,
            beta: None,
            out: std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
            dump_term: None,
        }
    }
}

/// Decimal or 0x-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64> {
    let s = s.trim();
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|_| Error::Usage(format!("bad seed {s:?}")))
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Usage(format!("bad value {v:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Result<Vec<T>> = v.split(',').map(|x| parse_num(key, x)).collect();
    let items = items?;
    if items.is_empty() {
        return Err(Error::Usage(format!("empty sweep for {key}")));
    }
    Ok(items)
}

fn auto<T>(v: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if v.trim() == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

pub fn parse_mode(v: &str) -> Result<SignMode> {
    match v.trim() {
        "independent" => Ok(SignMode::Independent),
        "dependent" | "shared" => Ok(SignMode::Shared),
        "deterministic" => Ok(SignMode::Deterministic),
        other => Err(Error::Usage(format!("unknown mode {other:?}"))),
    }
}

fn mode_name(m: SignMode) -> &'static str {
    match m {
        SignMode::Independent => "independent",
        SignMode::Shared => "dependent",
        SignMode::Deterministic => "deterministic",
    }
}

pub fn parse_method(v: &str) -> Result<OmegaAverageMethod> {
    let v = v.trim();
    match v {
        "exact" => Ok(OmegaAverageMethod::Exact),
        "enumerate" => Ok(OmegaAverageMethod::Enumerate),
        _ => match v.strip_prefix("montecarlo:") {
            Some(rest) => {
                let (n, seed) = rest.split_once(':').unwrap_or((rest, "0"));
                Ok(OmegaAverageMethod::MonteCarlo { samples: parse_num("method", n)?, seed: parse_seed(seed)? })
            }
            None => Err(Error::Usage(format!("unknown method {v:?}"))),
        },
    }
}

fn method_name(m: OmegaAverageMethod) -> String {
    match m {
        OmegaAverageMethod::Exact => "exact".into(),
        OmegaAverageMethod::Enumerate => "enumerate".into(),
        OmegaAverageMethod::MonteCarlo { samples, seed } => format!("montecarlo:{samples}:{seed}"),
    }
}

pub fn parse_scheme(v: &str) -> Result<SimplexScheme> {
    let v = v.trim();
    if let Some(q) = v.strip_prefix("gauss:") {
        let q: usize = parse_num("scheme", q)?;
        if q == 0 {
            return Err(Error::Usage("gauss order must be positive".into()));
        }
        return Ok(SimplexScheme::ProductGauss { q });
    }
    if let Some(rest) = v.strip_prefix("montecarlo:") {
        let (n, seed) = rest.split_once(':').unwrap_or((rest, "0"));
        return Ok(SimplexScheme::MonteCarlo { samples: parse_num("scheme", n)?, seed: parse_seed(seed)? });
    }
    Err(Error::Usage(format!("unknown scheme {v:?}")))
}

fn scheme_name(s: SimplexScheme) -> String {
    match s {
        SimplexScheme::ProductGauss { q } => format!("gauss:{q}"),
        SimplexScheme::MonteCarlo { samples, seed } => format!("montecarlo:{samples}:{seed}"),
    }
}

fn parse_ensemble(v: &str) -> Result<EnsembleChoice> {
    match v.trim() {
        "mixed" => Ok(EnsembleChoice::Mixed),
        "diagonal" => Ok(EnsembleChoice::Diagonal),
        "sparse" => Ok(EnsembleChoice::Sparse),
        other => Err(Error::Usage(format!("unknown ensemble {other:?}"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt<T>(v: &Option<T>, f: impl FnOnce(&T) -> String) -> String {
    v.as_ref().map(f).unwrap_or_else(|| "auto".into())
}

impl ExperimentConfig {
    /// Set one key from its text form; the same keys `to_text` writes.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment" => {
                let v = v.trim();
                if !EXPERIMENTS.contains(&v) {
                    return Err(Error::Usage(format!("unknown experiment {v:?}; known: {}", EXPERIMENTS.join(", "))));
                }
                self.experiment = v.into();
            }
            "d" => self.d = parse_num(key, v)?,
            "cutoffs" => self.cutoffs = auto(v, |s| parse_list(key, s))?,
            "alpha" => self.alpha = auto(v, |s| parse_list(key, s))?,
            "k" => self.k = parse_num(key, v)?,
            "j" => self.j = parse_num(key, v)?,
            "n_max" => self.n_max = parse_num(key, v)?,
            "ell_max" => self.ell_max = parse_num(key, v)?,
            "T" => self.t = auto(v, |s| parse_num(key, s))?,
            "samples" => self.samples = auto(v, |s| parse_num(key, s))?,
            "seed" => self.seed = parse_seed(v)?,
            "mode" => self.mode = parse_mode(v)?,
            "method" => self.method = parse_method(v)?,
            "scheme" => self.scheme = parse_scheme(v)?,
            "ensemble" => self.ensemble = parse_ensemble(v)?,
            "beta" => self.beta = auto(v, |s| parse_num(key, s))?,
            "out" => self.out = PathBuf::from(v.trim()),
            "dump_term" => self.dump_term = auto(v, |s| Ok(PathBuf::from(s.trim())))?,
            other => return Err(Error::Usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Overlay a `key = value` text (blank lines and `#` comments allowed).
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse { line: i + 1, msg: "expected key = value".into() })?;
            self.set(k.trim(), v).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", self.experiment.clone()),
            ("d", self.d.to_string()),
            ("cutoffs", opt(&self.cutoffs, |v| join(v))),
            ("alpha", opt(&self.alpha, |v| join(v))),
            ("k", self.k.to_string()),
            ("j", self.j.to_string()),
            ("n_max", self.n_max.to_string()),
            ("ell_max", self.ell_max.to_string()),
            ("T", opt(&self.t, |v| v.to_string())),
            ("samples", opt(&self.samples, |v| v.to_string())),
            ("seed", self.seed.to_string()),
            ("mode", mode_name(self.mode).into()),
            ("method", method_name(self.method)),
            ("scheme", scheme_name(self.scheme)),
            ("ensemble", format!("{:?}", self.ensemble).to_lowercase()),
            ("beta", opt(&self.beta, |v| v.to_string())),
            ("out", self.out.display().to_string()),
            ("dump_term", opt(&self.dump_term, |v| v.display().to_string())),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            writeln!(s, "{k} = {v}").expect("string write");
        }
        s
    }

    fn cutoffs_or(&self, default: Vec<u32>) -> Vec<u32> {
        self.cutoffs.clone().unwrap_or(default)
    }

    fn cutoff_or(&self, default: u32) -> u32 {
        self.cutoffs.as_ref().map(|v| v[0]).unwrap_or(default)
    }

    fn alphas_or(&self, default: Vec<f64>) -> Vec<f64> {
        self.alpha.clone().unwrap_or(default)
    }

    fn alpha_or(&self, default: f64) -> f64 {
        self.alpha.as_ref().map(|v| v[0]).unwrap_or(default)
    }
}

/// Reports of one run plus the outcome of its acceptance check.
#[derive(Debug)]
pub struct RunOutput {
    pub reports: Vec<ExperimentReport>,
    pub passed: bool,
    pub check: String,
}

fn stamp(rep: &mut ExperimentReport, cfg: &ExperimentConfig) {
    for (k, v) in cfg.entries() {
        rep.header.insert(format!("config.{k}"), v);
    }
    rep.meta("code_version", crate::report::CODE_VERSION);
    rep.meta("revision", REVISION);
    rep.meta("master_seed", cfg.seed);
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    rep.meta("timestamp_unix", ts);
}

fn sf(rep: &ExperimentReport, key: &str) -> f64 {
    rep.summary_f64(key).unwrap_or(f64::NAN)
}

/// Run the configured experiment; nothing is written to disk.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut out = match cfg.experiment.as_str() {
        "thm1-ratio" => {
            let mut reports = Vec::new();
            let mut passed = true;
            let alphas = cfg.alphas_or(vec![0.5]);
            for &alpha in &alphas {
                let beta = cfg.beta.unwrap_or(4.0 * alpha);
                let ensemble = match cfg.ensemble {
                    EnsembleChoice::Mixed => Thm1Ensemble::Mixed { beta },
                    EnsembleChoice::Diagonal => Thm1Ensemble::Diagonal { beta },
                    EnsembleChoice::Sparse => Thm1Ensemble::Sparse { keys: 16, beta },
                };
                let mut rep = thm1_ratio_experiment(&Thm1Config {
                    d: cfg.d,
                    k: cfg.k,
                    j: cfg.j,
                    alpha,
                    cutoffs: cfg.cutoffs_or(vec![4, 8, 16]),
                    samples: cfg.samples.unwrap_or(200),
                    seed: cfg.seed,
                    ensemble,
                })?;
                if alphas.len() > 1 {
                    rep.name = format!("thm1-ratio-alpha{alpha}");
                }
                // Above d/4 the ratio should stay bounded; at or below, grow.
                let g = sf(&rep, "growth");
                passed &= if alpha > cfg.d as f64 / 4.0 { g < 0.10 } else { g >= 0.25 };
                reports.push(rep);
            }
            RunOutput { reports, passed, check: "growth < 10% for α > d/4, ≥ 25% otherwise".into() }
        }
        "cor2-tail" => {
            let rep = cor2_tail(&Cor2Config {
                d: cfg.d,
                cutoff: cfg.cutoff_or(4),
                k: cfg.k,
                j: cfg.j,
                alpha: cfg.alpha_or(0.5),
                t_max: cfg.t.unwrap_or(1.0),
                samples: cfg.samples.unwrap_or(500),
                seed: cfg.seed,
                grid: 16,
            })?;
            let passed = rep.summary.get("bound_holds").and_then(|v| v.as_bool()) == Some(true);
            RunOutput { reports: vec![rep], passed, check: "empirical tail ≤ Markov bound at every λ".into() }
        }
        "duhamel-decay" => {
            let (source, cutoff, alpha) = match cfg.mode {
                SignMode::Shared => (DecaySource::NonResonant, 2 * (cfg.k + cfg.n_max) as u32 - 1, 0.0),
                _ => (DecaySource::Random { keys: 8 }, 2, 0.5),
            };
            let method = match (cfg.method, cfg.samples) {
                (OmegaAverageMethod::MonteCarlo { seed, .. }, Some(n)) => OmegaAverageMethod::MonteCarlo { samples: n, seed },
                (m, _) => m,
            };
            let dc = CalibratedDecay {
                d: cfg.d,
                cutoff: cfg.cutoff_or(cutoff),
                k: cfg.k,
                n_max: cfg.n_max,
                alpha: cfg.alpha_or(alpha),
                mode: cfg.mode,
                source,
                c1: 1.0,
                t_max: cfg.t,
                time_samples: 4,
                scheme: cfg.scheme,
                method,
                seed: cfg.seed,
            };
            let (rep, seq) = calibrated_decay(&dc)?;
            if let Some(path) = &cfg.dump_term {
                let t: f64 = rep.header.get("T").and_then(|s| s.parse().ok()).unwrap_or(0.0);
                let r = Randomization::sample(cfg.mode, cfg.seed, 0);
                let term = duhamel_term(cfg.k, cfg.n_max, &r, &seq, t, cfg.scheme)?;
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir).ok();
                }
                std::fs::write(path, crate::textfmt::to_text(&term))?;
            }
            let passed = decay_holds(&rep, 0.9);
            RunOutput {
                reports: vec![rep],
                passed,
                check: "norms decrease in n and successive ratios < 0.9".into(),
            }
        }
        "nonresonant-bound" => {
            let rep = bound_sweep(&BoundSweep {
                n: cfg.k,
                ells: (1..=cfg.ell_max).collect(),
                alphas: cfg.alphas_or(vec![0.0, 0.5]),
                samples: cfg.samples.unwrap_or(50),
                lattice: LatticeBox::new(1, cfg.cutoff_or(2 * (cfg.k + cfg.ell_max) as u32 - 1))?,
                c1: 1.0,
                seed: cfg.seed,
            })?;
            let passed = rep
                .summary
                .iter()
                .filter(|(k, _)| k.starts_with("spread"))
                .all(|(_, v)| v.as_f64().is_some_and(|x| x < 0.2));
            RunOutput { reports: vec![rep], passed, check: "per-level constant varies < 20% across ℓ".into() }
        }
        "nls-residual" => {
            let lat = LatticeBox::new(cfg.d, cfg.cutoff_or(2))?;
            let phi0 = random_mode_function(lat, cfg.seed, Profile::Flat, 0.3);
            let field = SignField::hashed(crate::numerics::split_seed(cfg.seed, 1));
            let mut rep = residual_study(&phi0, &field, cfg.t.unwrap_or(0.32), &[1e-2, 5e-3, 2.5e-3])?;
            let (n, c) = (Freq::new(&vec![2; cfg.d]), C64::new(0.6, -0.2));
            let exact = n.norm_sq() as f64 + c.norm_sqr();
            let rate = single_mode_phase_rate(LatticeBox::new(cfg.d, 3)?, n, c, 1.0, 1e-4)?;
            rep.set("phase_rate", rate);
            rep.set("phase_rate_rel_err", ((rate - exact) / exact).abs());
            let slopes_ok = ["slope_hier_k1", "slope_hier_k2", "slope_rand_nls", "slope_rand_hier_k1"]
                .iter()
                .all(|k| sf(&rep, k) >= 1.9);
            let passed = slopes_ok && sf(&rep, "phase_rate_rel_err") < 1e-6;
            RunOutput { reports: vec![rep], passed, check: "residual slopes ≥ 1.9 and phase rate within 1e-6".into() }
        }
        "boardgame-demo" => {
            let rep = boardgame_demo(cfg.seed, cfg.scheme)?;
            let passed = sf(&rep, "shared_max_diff") <= 1e-8 && sf(&rep, "independent_max_diff") > 1e-4;
            RunOutput { reports: vec![rep], passed, check: "shared ≤ 1e-8 on all seeds, independent > 1e-4 on one".into() }
        }
        "pairing-oracle" => {
            let rep = pairing_oracle(&PairingConfig {
                cutoff: cfg.cutoff_or(5),
                alpha: cfg.alpha_or(0.5),
                max_ell: cfg.ell_max.min(2),
                samples: cfg.samples.unwrap_or(50),
                seed: cfg.seed,
            })?;
            let passed = sf(&rep, "max_rel_err") <= 1e-10;
            RunOutput { reports: vec![rep], passed, check: "exact = enumeration = diagonal sum within 1e-10".into() }
        }
        other => return Err(Error::Usage(format!("unknown experiment {other:?}"))),
    };
    for rep in &mut out.reports {
        stamp(rep, cfg);
        rep.set("assert_pass", out.passed);
    }
    Ok(out)
}

pub fn write_reports(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for rep in &out.reports {
        let (c, j) = rep.write(dir)?;
        paths.push(c);
        paths.push(j);
    }
    Ok(paths)
}
