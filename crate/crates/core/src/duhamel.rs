//! Iterated Duhamel terms and their time-simplex integrals.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::rng;
use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, LatticeBox, C64};
use crate::numerics::{factorial, gauss_legendre_on, split_seed};
use crate::omega::{monte_carlo_sq_norm, omega_averaged_sq_norm, FnBuilder, OmegaAverageMethod};
use crate::operators::CollisionIndex;
use crate::randomization::{Randomization, SignField, SignMode};
use crate::report::{Cell, ExperimentReport};
use crate::signed::SignedMatrix;

/// Values that can be summed with real weights.
pub trait Accumulate: Sized + Send {
    fn scaled(&self, w: f64) -> Self;
    fn add_scaled(&mut self, w: f64, other: &Self);
}

impl Accumulate for f64 {
    fn scaled(&self, w: f64) -> f64 {
        self * w
    }
    fn add_scaled(&mut self, w: f64, other: &f64) {
        *self += w * other;
    }
}

impl Accumulate for C64 {
    fn scaled(&self, w: f64) -> C64 {
        self * w
    }
    fn add_scaled(&mut self, w: f64, other: &C64) {
        *self += other * w;
    }
}

impl Accumulate for DensityMatrix {
    fn scaled(&self, w: f64) -> DensityMatrix {
        self.scale(C64::new(w, 0.0))
    }
    fn add_scaled(&mut self, w: f64, other: &DensityMatrix) {
        self.axpy(C64::new(w, 0.0), other).expect("summands of one order");
    }
}

impl Accumulate for SignedMatrix {
    fn scaled(&self, w: f64) -> SignedMatrix {
        self.scale(C64::new(w, 0.0))
    }
    fn add_scaled(&mut self, w: f64, other: &SignedMatrix) {
        self.axpy(C64::new(w, 0.0), other).expect("summands of one order");
    }
}

fn fold<V: Accumulate>(parts: Vec<(f64, V)>) -> Option<V> {
    let mut acc: Option<V> = None;
    for (w, v) in parts {
        match &mut acc {
            None => acc = Some(v.scaled(w)),
            Some(a) => a.add_scaled(w, &v),
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimplexScheme {
    /// Iterated Gauss-Legendre with `q` nodes per time variable.
    ProductGauss { q: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for SimplexScheme {
    fn default() -> Self {
        SimplexScheme::ProductGauss { q: 6 }
    }
}

/// ∫ f over {t ≥ s_1 ≥ … ≥ s_n ≥ 0}; `f` receives (s_1, …, s_n).
pub fn simplex_integrate<V, F>(f: F, t: f64, n: usize, scheme: SimplexScheme) -> V
where
    V: Accumulate,
    F: Fn(&[f64]) -> V + Sync,
{
    if n == 0 {
        return f(&[]);
    }
    match scheme {
        SimplexScheme::ProductGauss { q } => {
            let rule = gauss_legendre_on(q, 0.0, 1.0);
            let parts: Vec<(f64, V)> = rule
                .par_iter()
                .map(|&(x, w)| {
                    let mut times = vec![t * x];
                    let v = gauss_rec(&f, &rule, n, &mut times, 1.0).expect("nonempty rule");
                    (w * t, v)
                })
                .collect();
            fold(parts).expect("nonempty rule")
        }
        SimplexScheme::MonteCarlo { samples, seed } => {
            assert!(samples > 0, "montecarlo needs samples");
            let vol = t.powi(n as i32) / factorial(n);
            let parts: Vec<(f64, V)> = (0..samples as u64)
                .into_par_iter()
                .map(|s| {
                    let mut r = rng(split_seed(seed, s));
                    let mut times: Vec<f64> = (0..n).map(|_| r.random_range(0.0..=t)).collect();
                    times.sort_by(|a, b| b.partial_cmp(a).expect("finite times"));
                    (vol / samples as f64, f(&times))
                })
                .collect();
            fold(parts).expect("nonempty sample")
        }
    }
}

fn gauss_rec<V, F>(f: &F, rule: &[(f64, f64)], n: usize, times: &mut Vec<f64>, w: f64) -> Option<V>
where
    V: Accumulate,
    F: Fn(&[f64]) -> V,
{
    if times.len() == n {
        return Some(f(times).scaled(w));
    }
    let upper = *times.last().expect("at least one time");
    let mut acc: Option<V> = None;
    for &(x, wx) in rule {
        times.push(upper * x);
        if let Some(v) = gauss_rec(f, rule, n, times, w * wx * upper) {
            match &mut acc {
                None => acc = Some(v),
                Some(a) => a.add_scaled(1.0, &v),
            }
        }
        times.pop();
    }
    acc
}

/// Anything the hierarchy operators act on: realized or symbolic matrices.
pub trait HierarchyRep: Accumulate + Clone + Sync {
    fn lift(m: &DensityMatrix) -> Self;
    fn zero(order: usize, lattice: LatticeBox) -> Self;
    fn order(&self) -> usize;
    fn evolve(&self, t: f64) -> Self;
    fn full_collide(&self, r: &Randomization) -> Result<Self>;
    fn collide_one(&self, c: CollisionIndex, r: &Randomization) -> Result<Self>;
    fn times(&self, c: C64) -> Self;
}

impl HierarchyRep for DensityMatrix {
    fn lift(m: &DensityMatrix) -> Self {
        m.clone()
    }
    fn zero(order: usize, lattice: LatticeBox) -> Self {
        DensityMatrix::zero(order, lattice)
    }
    fn order(&self) -> usize {
        DensityMatrix::order(self)
    }
    fn evolve(&self, t: f64) -> Self {
        crate::operators::free_evolve(self, t)
    }
    fn full_collide(&self, r: &Randomization) -> Result<Self> {
        r.full_collision(self)
    }
    fn collide_one(&self, c: CollisionIndex, r: &Randomization) -> Result<Self> {
        r.collide(self, c)
    }
    fn times(&self, c: C64) -> Self {
        self.scale(c)
    }
}

impl HierarchyRep for SignedMatrix {
    fn lift(m: &DensityMatrix) -> Self {
        SignedMatrix::from_matrix(m)
    }
    fn zero(order: usize, lattice: LatticeBox) -> Self {
        SignedMatrix::zero(order, lattice)
    }
    fn order(&self) -> usize {
        SignedMatrix::order(self)
    }
    fn evolve(&self, t: f64) -> Self {
        self.free_evolve(t)
    }
    fn full_collide(&self, r: &Randomization) -> Result<Self> {
        self.full_collision(r.mode())
    }
    fn collide_one(&self, c: CollisionIndex, r: &Randomization) -> Result<Self> {
        self.collide(c, r.mode())
    }
    fn times(&self, c: C64) -> Self {
        self.scale(c)
    }
}

/// The a priori data (order, time) ↦ γ^(order)(time).
pub trait GammaSequence: Sync {
    fn gamma(&self, order: usize, t: f64) -> Result<DensityMatrix>;
}

/// Matrices that do not depend on time.
#[derive(Clone, Debug, Default)]
pub struct TimeFrozen {
    pub mats: BTreeMap<usize, DensityMatrix>,
}

impl TimeFrozen {
    pub fn new(mats: impl IntoIterator<Item = DensityMatrix>) -> TimeFrozen {
        TimeFrozen {
            mats: mats.into_iter().map(|m| (m.order(), m)).collect(),
        }
    }
}

impl GammaSequence for TimeFrozen {
    fn gamma(&self, order: usize, _t: f64) -> Result<DensityMatrix> {
        self.mats.get(&order).cloned().ok_or(Error::MissingOrder { order })
    }
}

/// γ ≡ 0 at every order.
pub struct ZeroSequence(pub LatticeBox);

impl GammaSequence for ZeroSequence {
    fn gamma(&self, order: usize, _t: f64) -> Result<DensityMatrix> {
        Ok(DensityMatrix::zero(order, self.0))
    }
}

/// Sequence from a closure.
pub struct FnSequence<F>(pub F);

impl<F> GammaSequence for FnSequence<F>
where
    F: Fn(usize, f64) -> Result<DensityMatrix> + Sync,
{
    fn gamma(&self, order: usize, t: f64) -> Result<DensityMatrix> {
        (self.0)(order, t)
    }
}

fn minus_i_pow(n: usize) -> C64 {
    [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)][n % 4]
}

/// σ^(k)_n(t) = (−i)^n ∫_{simplex} U^(k)(t−t_{k+1}) B^(k+1) ⋯ U^(n+k−1)(t_{n+k−1}−t_{n+k}) B^(n+k) γ^(n+k)(t_{n+k}).
pub fn duhamel_term_rep<R: HierarchyRep>(
    k: usize,
    n: usize,
    r: &Randomization,
    seq: &dyn GammaSequence,
    t: f64,
    scheme: SimplexScheme,
) -> Result<R> {
    if k == 0 {
        return Err(Error::Usage("duhamel term needs k ≥ 1".into()));
    }
    let top = seq.gamma(n + k, 0.0)?;
    let lattice = top.lattice();
    if n == 0 {
        return Ok(R::lift(&seq.gamma(k, t)?));
    }
    let v = match scheme {
        SimplexScheme::ProductGauss { q } => {
            let rule = gauss_legendre_on(q, 0.0, 1.0);
            nested(k, k + n, t, r, seq, &rule, lattice)?
        }
        SimplexScheme::MonteCarlo { .. } => {
            let chain = |times: &[f64]| -> Result<R> {
                let mut v = R::lift(&seq.gamma(n + k, times[n - 1])?);
                for i in (0..n).rev() {
                    v = v.full_collide(r)?;
                    let upper = if i == 0 { t } else { times[i - 1] };
                    v = v.evolve(upper - times[i]);
                }
                Ok(v)
            };
            let out: ResultAcc<R> = simplex_integrate(|ts| ResultAcc(chain(ts)), t, n, scheme);
            out.0?
        }
    };
    Ok(v.times(minus_i_pow(n)))
}

/// Result wrapper so fallible integrands can be accumulated.
struct ResultAcc<V>(Result<V>);

impl<V: Accumulate> Accumulate for ResultAcc<V> {
    fn scaled(&self, w: f64) -> Self {
        ResultAcc(match &self.0 {
            Ok(v) => Ok(v.scaled(w)),
            Err(e) => Err(e.clone()),
        })
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        match (&mut self.0, &other.0) {
            (Ok(a), Ok(b)) => a.add_scaled(w, b),
            (Ok(_), Err(e)) => self.0 = Err(e.clone()),
            _ => {}
        }
    }
}

/// V_m(s) = ∫_0^s U(s−u) B^(m+1) V_{m+1}(u) du, V_top(u) = γ^(top)(u).
fn nested<R: HierarchyRep>(
    m: usize,
    top: usize,
    s: f64,
    r: &Randomization,
    seq: &dyn GammaSequence,
    rule: &[(f64, f64)],
    lattice: LatticeBox,
) -> Result<R> {
    if m == top {
        return Ok(R::lift(&seq.gamma(top, s)?));
    }
    if s == 0.0 {
        return Ok(R::zero(m, lattice));
    }
    let node = |&(x, w): &(f64, f64)| -> Result<(f64, R)> {
        let u = s * x;
        let inner: R = nested(m + 1, top, u, r, seq, rule, lattice)?;
        Ok((w * s, inner.full_collide(r)?.evolve(s - u)))
    };
    let parts: Result<Vec<(f64, R)>> = if top - m >= 2 {
        rule.par_iter().map(node).collect()
    } else {
        rule.iter().map(node).collect()
    };
    Ok(fold(parts?).unwrap_or_else(|| R::zero(m, lattice)))
}

pub fn duhamel_term(
    k: usize,
    n: usize,
    r: &Randomization,
    seq: &dyn GammaSequence,
    t: f64,
    scheme: SimplexScheme,
) -> Result<DensityMatrix> {
    duhamel_term_rep(k, n, r, seq, t, scheme)
}

/// The same term with the signs kept symbolic.
pub fn duhamel_term_symbolic(
    k: usize,
    n: usize,
    mode: SignMode,
    seq: &dyn GammaSequence,
    t: f64,
    scheme: SimplexScheme,
) -> Result<SignedMatrix> {
    duhamel_term_rep(k, n, &mode_marker(mode), seq, t, scheme)
}

/// A randomization carrying only the mode, for symbolic evaluation.
pub fn mode_marker(mode: SignMode) -> Randomization {
    match mode {
        SignMode::Deterministic => Randomization::Deterministic,
        SignMode::Shared => Randomization::Shared(SignField::plus()),
        SignMode::Independent => Randomization::Independent(crate::randomization::LevelFields::explicit_only()),
    }
}

/// An ordered product of collision operators, outermost first.
#[derive(Clone, Debug, PartialEq)]
pub struct DuhamelWord {
    n: usize,
    steps: Vec<CollisionIndex>,
}

impl DuhamelWord {
    /// Step i (0-based) acts on order n+i+1.
    pub fn new(n: usize, steps: Vec<CollisionIndex>) -> Result<DuhamelWord> {
        if n == 0 {
            return Err(Error::Usage("word base order must be ≥ 1".into()));
        }
        for (i, c) in steps.iter().enumerate() {
            c.validate(n + i + 1).map_err(|_| Error::OrderMismatch {
                context: format!("word step {} ({c})", i + 1),
                expected: n + i + 1,
                got: c.k,
            })?;
        }
        Ok(DuhamelWord { n, steps })
    }

    pub fn base_order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn top_order(&self) -> usize {
        self.n + self.steps.len()
    }

    pub fn steps(&self) -> &[CollisionIndex] {
        &self.steps
    }
}

impl fmt::Display for DuhamelWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.steps.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", s.join(" "))
    }
}

/// U^(n)(t_1−t_2) B_1 U^(n+1)(t_2−t_3) B_2 ⋯ U^(n+ℓ−1)(t_ℓ−t_{ℓ+1}) B_ℓ γ_top.
pub fn duhamel_integrand<R: HierarchyRep>(
    word: &DuhamelWord,
    times: &[f64],
    top: &R,
    r: &Randomization,
) -> Result<R> {
    let l = word.len();
    if times.len() != l + 1 {
        return Err(Error::Usage(format!("word of length {l} needs {} times", l + 1)));
    }
    if top.order() != word.top_order() {
        return Err(Error::OrderMismatch {
            context: "top matrix of word".into(),
            expected: word.top_order(),
            got: top.order(),
        });
    }
    let mut v = top.clone();
    for i in (0..l).rev() {
        let c = word.steps[i];
        if v.order() != word.n + i + 1 {
            return Err(Error::OrderMismatch {
                context: format!("word step {} ({c})", i + 1),
                expected: word.n + i + 1,
                got: v.order(),
            });
        }
        v = v.collide_one(c, r)?.evolve(times[i] - times[i + 1]);
    }
    Ok(v)
}

/// Settings of one decay run.
#[derive(Clone, Debug)]
pub struct DecayConfig {
    pub k: usize,
    pub n_max: usize,
    pub alpha: f64,
    pub t_max: f64,
    pub time_samples: usize,
    pub mode: SignMode,
    pub scheme: SimplexScheme,
    pub method: OmegaAverageMethod,
}

/// √E‖S^(k,α) σ^(k)_n(t)‖² by the requested averaging method.
pub fn averaged_term_norm(cfg: &DecayConfig, n: usize, seq: &dyn GammaSequence, t: f64) -> Result<f64> {
    if n == 0 {
        return Ok(seq.gamma(cfg.k, t)?.weighted_norm(cfg.alpha));
    }
    let sym = || duhamel_term_symbolic(cfg.k, n, cfg.mode, seq, t, cfg.scheme);
    let v = match cfg.method {
        OmegaAverageMethod::Exact => sym()?.expected_sq_norm(cfg.alpha),
        OmegaAverageMethod::Enumerate => {
            let b = FnBuilder {
                mode: cfg.mode,
                realize: |r: &Randomization| duhamel_term(cfg.k, n, r, seq, t, cfg.scheme),
                symbolic: sym,
                domain: None,
            };
            omega_averaged_sq_norm(&b, cfg.alpha, OmegaAverageMethod::Enumerate)?
        }
        OmegaAverageMethod::MonteCarlo { samples, seed } => {
            let b = FnBuilder {
                mode: cfg.mode,
                realize: |r: &Randomization| duhamel_term(cfg.k, n, r, seq, t, cfg.scheme),
                symbolic: sym,
                domain: None,
            };
            monte_carlo_sq_norm(&b, cfg.alpha, samples, seed)?.0
        }
    };
    Ok(v.sqrt())
}

/// Series n ↦ sup_t √E‖S^(k,α) σ^(k)_n(t)‖² over t ∈ {T i/m : i = 1..m}, one
/// row per n = 1..n_max; the n = 0 norm goes to the summary.
pub fn decay_experiment(cfg: &DecayConfig, seq: &dyn GammaSequence) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("duhamel-decay", &["n", "sup_norm", "ratio"]);
    let m = cfg.time_samples.max(1);
    let times: Vec<f64> = (1..=m).map(|i| cfg.t_max * i as f64 / m as f64).collect();
    let mut wall = Vec::new();
    let mut prev: f64 = 0.0;
    for n in 0..=cfg.n_max {
        let start = Instant::now();
        let mut sup: f64 = 0.0;
        for &t in &times {
            sup = sup.max(averaged_term_norm(cfg, n, seq, t)?);
        }
        wall.push(start.elapsed().as_secs_f64());
        if n == 0 {
            rep.set("norm_n0", sup);
        } else {
            let ratio = if prev > 0.0 { Cell::Float(sup / prev) } else { Cell::Skipped };
            rep.push(vec![n.into(), sup.into(), ratio]);
        }
        prev = sup;
    }
    rep.set("wall_time_s", wall);
    rep.meta("k", cfg.k);
    rep.meta("n_max", cfg.n_max);
    rep.meta("alpha", cfg.alpha);
    rep.meta("T", cfg.t_max);
    rep.meta("mode", format!("{:?}", cfg.mode).to_lowercase());
    Ok(rep)
}

/// Empirical per-step constant: Ĉ₀ = max(1, max_m E‖S[B^(m)]γ^(m)‖ / ((m−1)‖Sγ^(m)‖)).
pub fn calibrate_c0(seq: &dyn GammaSequence, orders: std::ops::RangeInclusive<usize>, alpha: f64, mode: SignMode) -> Result<f64> {
    let mut c0: f64 = 1.0;
    for m in orders {
        if m < 2 {
            continue;
        }
        let g = seq.gamma(m, 0.0)?;
        let denom = (m - 1) as f64 * g.weighted_norm(alpha);
        if denom == 0.0 {
            continue;
        }
        let num = SignedMatrix::from_matrix(&g).full_collision(mode)?.expected_sq_norm(alpha).sqrt();
        c0 = c0.max(num / denom);
    }
    Ok(c0)
}
