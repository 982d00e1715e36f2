//! The class of non-resonant matrices: coefficients vanish unless
//! |ξ_1| > … > |ξ_m| > |ξ'_1| > … > |ξ'_m|.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use crate::duhamel::{duhamel_integrand, mode_marker, DuhamelWord};
use crate::ensemble::{complex_gaussian, rng};
use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, Freq, Key, LatticeBox, C64};
use crate::omega::{omega_averaged_sq_norm, FnBuilder, OmegaAverageMethod};
use crate::operators::CollisionIndex;
use crate::randomization::{Randomization, SignMode};
use crate::report::{Cell, ExperimentReport};
use crate::signed::SignedMatrix;

/// Strict modulus chain over all 2m slots.
pub fn is_nonresonant(key: &Key) -> bool {
    key.freqs().windows(2).all(|w| w[0].norm_sq() > w[1].norm_sq())
}

pub fn project_n(g: &DensityMatrix) -> DensityMatrix {
    let mut out = DensityMatrix::zero(g.order(), g.lattice());
    for (k, &v) in g.iter() {
        if is_nonresonant(k) {
            out.insert(k.clone(), v).expect("same box");
        }
    }
    out
}

/// Box frequencies grouped by |ξ|², largest modulus first.
fn shells(lattice: LatticeBox) -> Vec<Vec<Freq>> {
    let mut by: BTreeMap<i64, Vec<Freq>> = BTreeMap::new();
    for f in lattice.freqs() {
        by.entry(f.norm_sq()).or_default().push(f);
    }
    by.into_values().rev().collect()
}

/// Number of distinct moduli in the box; class membership at order m needs 2m.
pub fn distinct_moduli(lattice: LatticeBox) -> usize {
    shells(lattice).len()
}

pub const SAMPLE_KEYS: usize = 8;

/// Random admissible matrix of order m with ‖S^(m,α)γ‖ = C₁^m exactly.
///
/// Each of the `SAMPLE_KEYS` draws picks 2m distinct moduli uniformly, then a
/// uniform frequency on each shell, then a complex Gaussian coefficient.
pub fn sample_n(m: usize, lattice: LatticeBox, alpha: f64, c1: f64, seed: u64) -> Result<DensityMatrix> {
    let sh = shells(lattice);
    if m == 0 || sh.len() < 2 * m {
        return Err(Error::NoAdmissibleKey { order: m });
    }
    let mut r = rng(seed);
    let mut g = DensityMatrix::zero(m, lattice);
    while g.is_empty() {
        for _ in 0..SAMPLE_KEYS {
            let mut idx = sample(&mut r, sh.len(), 2 * m).into_vec();
            idx.sort_unstable();
            let v: Vec<Freq> = idx.iter().map(|&i| sh[i][r.random_range(0..sh[i].len())]).collect();
            g.add_at(Key::from_vec(v), complex_gaussian(&mut r))?;
        }
    }
    let norm = g.weighted_norm(alpha);
    Ok(g.scale(C64::new(c1.powi(m as i32) / norm, 0.0)))
}

/// Dependent-mode chain value at fixed times, realized or symbolic.
pub fn chain_symbolic(word: &DuhamelWord, times: &[f64], top: &DensityMatrix) -> Result<SignedMatrix> {
    duhamel_integrand(word, times, &SignedMatrix::from_matrix(top), &mode_marker(SignMode::Shared))
}

/// Σ_keys ‖S chain(single key)‖²: the exact average when no two summands pair.
pub fn diagonal_sum(word: &DuhamelWord, times: &[f64], top: &DensityMatrix, alpha: f64) -> Result<f64> {
    let mut acc = crate::numerics::CompensatedSum::default();
    for (k, &v) in top.sorted() {
        let mut single = DensityMatrix::zero(top.order(), top.lattice());
        single.insert(k.clone(), v)?;
        let out: DensityMatrix = duhamel_integrand(word, times, &single, &Randomization::Deterministic)?;
        acc.add(out.weighted_norm_sq(alpha));
    }
    Ok(acc.value())
}

/// E‖S^(n,α) U[B]^ω ⋯ [B]^ω γ_top‖² (dependent mode).
pub fn chain_average(word: &DuhamelWord, times: &[f64], top: &DensityMatrix, alpha: f64, method: OmegaAverageMethod) -> Result<f64> {
    let b = FnBuilder {
        mode: SignMode::Shared,
        realize: |r: &Randomization| duhamel_integrand(word, times, top, r),
        symbolic: || chain_symbolic(word, times, top),
        domain: None,
    };
    omega_averaged_sq_norm(&b, alpha, method)
}

pub struct BoundCheck {
    /// √E‖S^(n,α) chain‖².
    pub lhs: f64,
    /// ‖S^(n+ℓ,α) γ_top‖.
    pub rhs: f64,
    pub ratio: Option<f64>,
    /// ratio^{1/(n+ℓ)}.
    pub per_level: Option<f64>,
}

pub fn bound_check(word: &DuhamelWord, times: &[f64], top: &DensityMatrix, alpha: f64, method: OmegaAverageMethod) -> Result<BoundCheck> {
    let lhs = chain_average(word, times, top, alpha, method)?.sqrt();
    let rhs = top.weighted_norm(alpha);
    let (ratio, per_level) = if rhs > 0.0 {
        let q = lhs / rhs;
        (Some(q), Some(q.powf(1.0 / word.top_order() as f64)))
    } else {
        (None, None)
    };
    Ok(BoundCheck { lhs, rhs, ratio, per_level })
}

fn opt(x: Option<f64>) -> Cell {
    x.map(Cell::Float).unwrap_or(Cell::Skipped)
}

/// One report row for a single word and top matrix.
pub fn nonresonant_bound_check(word: &DuhamelWord, times: &[f64], top: &DensityMatrix, alpha: f64, method: OmegaAverageMethod) -> Result<ExperimentReport> {
    let mut rep = bound_report();
    push_row(&mut rep, word, alpha, 0, &bound_check(word, times, top, alpha, method)?);
    Ok(rep)
}

fn bound_report() -> ExperimentReport {
    ExperimentReport::new("nonresonant-bound", &["word", "n", "ell", "alpha", "sample", "lhs", "rhs", "ratio", "per_level"])
}

fn push_row(rep: &mut ExperimentReport, word: &DuhamelWord, alpha: f64, sample: usize, c: &BoundCheck) {
    rep.push(vec![
        word.to_string().into(),
        word.base_order().into(),
        word.len().into(),
        alpha.into(),
        sample.into(),
        c.lhs.into(),
        c.rhs.into(),
        opt(c.ratio),
        opt(c.per_level),
    ]);
}

/// Uniform random word of length ℓ on base order n.
pub fn random_word<R: Rng>(r: &mut R, n: usize, ell: usize) -> DuhamelWord {
    let steps = (0..ell)
        .map(|i| {
            let order = n + i + 1;
            let k = r.random_range(2..=order);
            let j = r.random_range(1..k);
            if r.random_bool(0.5) {
                CollisionIndex::plus(j, k)
            } else {
                CollisionIndex::minus(j, k)
            }
        })
        .collect();
    DuhamelWord::new(n, steps).expect("valid by construction")
}

#[derive(Clone, Debug)]
pub struct BoundSweep {
    pub n: usize,
    pub ells: Vec<usize>,
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub lattice: LatticeBox,
    pub c1: f64,
    pub seed: u64,
}

/// Per-level constants for random words and random class members.
///
/// Summary keys `max_per_level[alpha=a][ell=l]` hold the largest constant seen
/// and `spread[alpha=a]` the max/min − 1 of those across ℓ.
pub fn bound_sweep(cfg: &BoundSweep) -> Result<ExperimentReport> {
    let mut rep = bound_report();
    for &alpha in &cfg.alphas {
        let mut maxima = Vec::new();
        for &ell in &cfg.ells {
            let mut best: f64 = 0.0;
            for s in 0..cfg.samples {
                let sub = crate::numerics::split_seed(cfg.seed, (ell * 100_003 + s) as u64);
                let mut r = rng(sub);
                let word = random_word(&mut r, cfg.n, ell);
                let times: Vec<f64> = (0..=ell).map(|_| r.random_range(0.0..1.0)).collect();
                let top = sample_n(cfg.n + ell, cfg.lattice, alpha, cfg.c1, sub ^ 0x9e37)?;
                let c = bound_check(&word, &times, &top, alpha, OmegaAverageMethod::Exact)?;
                if let Some(p) = c.per_level {
                    best = best.max(p);
                }
                push_row(&mut rep, &word, alpha, s, &c);
            }
            rep.set(&format!("max_per_level[alpha={alpha}][ell={ell}]"), best);
            maxima.push(best);
        }
        let hi = maxima.iter().cloned().fold(f64::MIN, f64::max);
        let lo = maxima.iter().cloned().fold(f64::MAX, f64::min);
        rep.set(&format!("spread[alpha={alpha}]"), if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY });
    }
    rep.meta("d", cfg.lattice.dim());
    rep.meta("K", cfg.lattice.cutoff());
    rep.meta("n", cfg.n);
    rep.meta("samples", cfg.samples);
    rep.meta("seed", cfg.seed);
    Ok(rep)
}
