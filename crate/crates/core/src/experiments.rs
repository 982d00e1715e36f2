//! Desk-scale experiments behind the acceptance suite and the CLI.

use rand::Rng;
use rayon::prelude::*;

use crate::duhamel::{calibrate_c0, decay_experiment, DecayConfig, SimplexScheme, TimeFrozen};
use crate::ensemble::{diagonal_pairing_ensemble, random_ensemble_with, rng, Profile, Support};
use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, LatticeBox, C64};
use crate::nonresonant::{chain_average, diagonal_sum, random_word, sample_n};
use crate::numerics::{gauss_legendre_on, split_seed, CompensatedSum};
use crate::omega::{omega_averaged_sq_norm, CollisionBuilder, OmegaAverageMethod, RandomBuilder};
use crate::operators::free_evolve;
use crate::randomization::{Randomization, SignMode};
use crate::report::{Cell, ExperimentReport};

/// How the order-(k+1) inputs of the single-collision ratio are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Thm1Ensemble {
    /// Even samples: diagonal pairing with magnitudes ⟨η⟩^{-β}; odd samples:
    /// 16 random keys with the decaying profile of the same β.
    Mixed { beta: f64 },
    /// Every sample from the diagonal pairing ensemble.
    Diagonal { beta: f64 },
    /// Random keys only.
    Sparse { keys: usize, beta: f64 },
}

impl Thm1Ensemble {
    pub fn draw(&self, order: usize, j: usize, lattice: LatticeBox, seed: u64, index: usize) -> DensityMatrix {
        match *self {
            Thm1Ensemble::Diagonal { beta } => diagonal_pairing_ensemble(order, j, lattice, seed, beta),
            Thm1Ensemble::Mixed { beta } if index.is_multiple_of(2) => diagonal_pairing_ensemble(order, j, lattice, seed, beta),
            Thm1Ensemble::Mixed { beta } => {
                random_ensemble_with(order, lattice, seed, Profile::Decaying(beta), Support::Sparse(16))
            }
            Thm1Ensemble::Sparse { keys, beta } => {
                random_ensemble_with(order, lattice, seed, Profile::Decaying(beta), Support::Sparse(keys))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Thm1Config {
    pub d: usize,
    pub k: usize,
    pub j: usize,
    pub alpha: f64,
    pub cutoffs: Vec<u32>,
    pub samples: usize,
    pub seed: u64,
    pub ensemble: Thm1Ensemble,
}

/// √E‖S^(k,α)[B_{j,k+1}]^ω γ‖² / ‖S^(k+1,α)γ‖, or None for γ = 0.
pub fn thm1_ratio(gamma: &DensityMatrix, j: usize, alpha: f64) -> Result<Option<f64>> {
    let den = gamma.weighted_norm(alpha);
    if den == 0.0 {
        return Ok(None);
    }
    let b = CollisionBuilder::pair(gamma.clone(), j);
    Ok(Some(omega_averaged_sq_norm(&b, alpha, OmegaAverageMethod::Exact)?.sqrt() / den))
}

/// Rows (K, sample, ratio); summary `max[K=..]`, `mean[K=..]` and `growth`, the
/// relative increase of the max ratio from the first to the last cutoff.
pub fn thm1_ratio_experiment(cfg: &Thm1Config) -> Result<ExperimentReport> {
    if cfg.j == 0 || cfg.j > cfg.k {
        return Err(Error::Usage(format!("need 1 ≤ j ≤ k, got j={}, k={}", cfg.j, cfg.k)));
    }
    let mut rep = ExperimentReport::new("thm1-ratio", &["K", "sample", "ratio"]);
    let mut maxima = Vec::new();
    for &cut in &cfg.cutoffs {
        let lat = LatticeBox::new(cfg.d, cut)?;
        let ratios: Result<Vec<Option<f64>>> = (0..cfg.samples)
            .into_par_iter()
            .map(|s| {
                let seed = split_seed(cfg.seed ^ ((cut as u64) << 40), s as u64);
                let g = cfg.ensemble.draw(cfg.k + 1, cfg.j, lat, seed, s);
                thm1_ratio(&g, cfg.j, cfg.alpha)
            })
            .collect();
        let ratios = ratios?;
        let defined: Vec<f64> = ratios.iter().flatten().copied().collect();
        for (s, r) in ratios.iter().enumerate() {
            rep.push(vec![cut.into(), s.into(), r.map(Cell::Float).unwrap_or(Cell::Skipped)]);
        }
        let max = defined.iter().copied().fold(0.0, f64::max);
        let mean = if defined.is_empty() { 0.0 } else { defined.iter().copied().collect::<CompensatedSum>().value() / defined.len() as f64 };
        rep.set(&format!("max[K={cut}]"), max);
        rep.set(&format!("mean[K={cut}]"), mean);
        maxima.push(max);
    }
    if let (Some(first), Some(last)) = (maxima.first(), maxima.last()) {
        if *first > 0.0 {
            rep.set("growth", last / first - 1.0);
        }
    }
    rep.meta("d", cfg.d);
    rep.meta("k", cfg.k);
    rep.meta("j", cfg.j);
    rep.meta("alpha", cfg.alpha);
    rep.meta("samples", cfg.samples);
    rep.meta("seed", cfg.seed);
    rep.meta("ensemble", format!("{:?}", cfg.ensemble));
    Ok(rep)
}

#[derive(Clone, Debug)]
pub struct Cor2Config {
    pub d: usize,
    pub cutoff: u32,
    pub k: usize,
    pub j: usize,
    pub alpha: f64,
    pub t_max: f64,
    pub samples: usize,
    pub seed: u64,
    /// Number of λ grid points (geometric between half the smallest and twice
    /// the largest sampled norm).
    pub grid: usize,
}

/// Composite Gauss-Legendre nodes on [0, T].
fn time_nodes(t_max: f64, panels: usize, q: usize) -> Vec<(f64, f64)> {
    let h = t_max / panels as f64;
    (0..panels)
        .flat_map(|p| gauss_legendre_on(q, p as f64 * h, (p + 1) as f64 * h))
        .collect()
}

/// Tail of X(ω) = ‖S^(k,α)[B_{j,k+1}]^ω U(t)γ₀‖_{L²([0,T]×…)} against the
/// Markov bound Ĉ₀² T ‖S^(k+1,α)γ₀‖² / λ², where Ĉ₀ is the largest exact
/// ratio over the time nodes.
pub fn cor2_tail(cfg: &Cor2Config) -> Result<ExperimentReport> {
    let lat = LatticeBox::new(cfg.d, cfg.cutoff)?;
    let g0 = random_ensemble_with(cfg.k + 1, lat, cfg.seed, Profile::Decaying(2.0 * cfg.alpha), Support::Sparse(24));
    let nodes = time_nodes(cfg.t_max, 12, 6);
    let evolved: Vec<(f64, DensityMatrix)> = nodes.iter().map(|&(t, w)| (w, free_evolve(&g0, t))).collect();
    let den = g0.weighted_norm(cfg.alpha);
    let mut c0: f64 = 0.0;
    for (_, g) in &evolved {
        if let Some(r) = thm1_ratio(g, cfg.j, cfg.alpha)? {
            c0 = c0.max(r);
        }
    }
    let x: Result<Vec<f64>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|s| {
            let r = Randomization::sample(SignMode::Shared, split_seed(cfg.seed, u64::MAX), s);
            let mut acc = CompensatedSum::new();
            for (w, g) in &evolved {
                let b = CollisionBuilder::pair(g.clone(), cfg.j);
                acc.add(w * b.realize(&r)?.weighted_norm_sq(cfg.alpha));
            }
            Ok(acc.value().sqrt())
        })
        .collect();
    let x = x?;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min).max(1e-300);
    let hi = x.iter().copied().fold(0.0, f64::max).max(lo);
    let (a, b) = (0.5 * lo, 2.0 * hi);
    let numer = c0 * c0 * cfg.t_max * den * den;
    let mut rep = ExperimentReport::new("cor2-tail", &["lambda", "empirical", "bound"]);
    let mut holds = true;
    let grid = cfg.grid.max(2);
    for i in 0..grid {
        let lambda = a * (b / a).powf(i as f64 / (grid - 1) as f64);
        let emp = x.iter().filter(|&&v| v >= lambda).count() as f64 / x.len() as f64;
        let bound = numer / (lambda * lambda);
        holds &= emp <= bound;
        rep.push(vec![lambda.into(), emp.into(), bound.into()]);
    }
    rep.set("c0_hat", c0);
    rep.set("mean_sq", x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64);
    rep.set("markov_numerator", numer);
    rep.set("bound_holds", holds);
    rep.meta("d", cfg.d);
    rep.meta("K", cfg.cutoff);
    rep.meta("k", cfg.k);
    rep.meta("j", cfg.j);
    rep.meta("alpha", cfg.alpha);
    rep.meta("T", cfg.t_max);
    rep.meta("samples", cfg.samples);
    rep.meta("seed", cfg.seed);
    Ok(rep)
}

/// Time-frozen sequence for the decay runs, with ‖S^(m,α)γ^(m)‖ = C₁^m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecaySource {
    /// Random keys on the whole box (general data).
    Random { keys: usize },
    /// Non-resonant class members.
    NonResonant,
}

pub fn frozen_sequence(src: DecaySource, lattice: LatticeBox, orders: std::ops::RangeInclusive<usize>, alpha: f64, c1: f64, seed: u64) -> Result<TimeFrozen> {
    let mats: Result<Vec<DensityMatrix>> = orders
        .map(|m| {
            let s = split_seed(seed, m as u64);
            match src {
                DecaySource::Random { keys } => {
                    let g = random_ensemble_with(m, lattice, s, Profile::Flat, Support::Sparse(keys));
                    let n = g.weighted_norm(alpha);
                    Ok(g.scale(C64::new(c1.powi(m as i32) / n, 0.0)))
                }
                DecaySource::NonResonant => sample_n(m, lattice, alpha, c1, s),
            }
        })
        .collect();
    Ok(TimeFrozen::new(mats?))
}

#[derive(Clone, Debug)]
pub struct CalibratedDecay {
    pub d: usize,
    pub cutoff: u32,
    pub k: usize,
    pub n_max: usize,
    pub alpha: f64,
    pub mode: SignMode,
    pub source: DecaySource,
    pub c1: f64,
    /// None: T = 1/(4 M̂) with M̂ = Ĉ₀ C₁.
    pub t_max: Option<f64>,
    pub time_samples: usize,
    pub scheme: SimplexScheme,
    pub method: OmegaAverageMethod,
    pub seed: u64,
}

/// Decay series with the calibration recorded in the summary.
pub fn calibrated_decay(cfg: &CalibratedDecay) -> Result<(ExperimentReport, TimeFrozen)> {
    let lat = LatticeBox::new(cfg.d, cfg.cutoff)?;
    let top = cfg.k + cfg.n_max;
    let seq = frozen_sequence(cfg.source, lat, cfg.k..=top, cfg.alpha, cfg.c1, cfg.seed)?;
    let c0 = calibrate_c0(&seq, (cfg.k + 1)..=top, cfg.alpha, cfg.mode)?;
    let m_hat = c0 * cfg.c1;
    let t = cfg.t_max.unwrap_or(1.0 / (4.0 * m_hat));
    let dc = DecayConfig {
        k: cfg.k,
        n_max: cfg.n_max,
        alpha: cfg.alpha,
        t_max: t,
        time_samples: cfg.time_samples,
        mode: cfg.mode,
        scheme: cfg.scheme,
        method: cfg.method,
    };
    let mut rep = decay_experiment(&dc, &seq)?;
    rep.set("c0_hat", c0);
    rep.set("m_hat", m_hat);
    rep.set("per_step_factor", 2.0 * m_hat * t);
    rep.meta("d", cfg.d);
    rep.meta("K", cfg.cutoff);
    rep.meta("C1", cfg.c1);
    rep.meta("source", format!("{:?}", cfg.source));
    rep.meta("seed", cfg.seed);
    Ok((rep, seq))
}

/// Norms strictly decreasing and every ratio after the first below `bound`.
pub fn decay_holds(rep: &ExperimentReport, bound: f64) -> bool {
    let norms = rep.values("sup_norm");
    let ratios = rep.values("ratio");
    norms.windows(2).all(|w| w[1] < w[0]) && ratios.iter().skip(1).all(|r| *r < bound)
}

#[derive(Clone, Debug)]
pub struct PairingConfig {
    pub cutoff: u32,
    pub alpha: f64,
    pub max_ell: usize,
    pub samples: usize,
    pub seed: u64,
}

/// Exact, enumerated and diagonal averages of random chains on class members.
pub fn pairing_oracle(cfg: &PairingConfig) -> Result<ExperimentReport> {
    let lat = LatticeBox::new(1, cfg.cutoff)?;
    let mut rep = ExperimentReport::new("pairing-oracle", &["sample", "word", "exact", "enumerate", "diagonal", "rel_err"]);
    let rows: Result<Vec<Vec<Cell>>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|s| {
            let sub = split_seed(cfg.seed, s);
            let mut r = rng(sub);
            let ell = 1 + (s as usize % cfg.max_ell.max(1));
            let word = random_word(&mut r, 1, ell);
            let times: Vec<f64> = (0..=ell).map(|_| r.random_range(0.0..1.0)).collect();
            let top = sample_n(1 + ell, lat, cfg.alpha, 1.0, sub ^ 1)?;
            let diag = diagonal_sum(&word, &times, &top, cfg.alpha)?;
            let ex = chain_average(&word, &times, &top, cfg.alpha, OmegaAverageMethod::Exact)?;
            let en = chain_average(&word, &times, &top, cfg.alpha, OmegaAverageMethod::Enumerate)?;
            let err = if diag > 0.0 { ((ex - diag).abs().max((en - diag).abs())) / diag } else { (ex.abs()).max(en.abs()) };
            Ok(vec![(s as usize).into(), word.to_string().into(), ex.into(), en.into(), diag.into(), err.into()])
        })
        .collect();
    let mut worst: f64 = 0.0;
    for row in rows? {
        worst = worst.max(row[5].as_f64().unwrap_or(f64::INFINITY));
        rep.push(row);
    }
    rep.set("max_rel_err", worst);
    rep.meta("K", cfg.cutoff);
    rep.meta("alpha", cfg.alpha);
    rep.meta("seed", cfg.seed);
    Ok(rep)
}
