//! Two Duhamel integrals that the boardgame argument would identify, computed
//! under shared and independent randomization.

use crate::duhamel::{simplex_integrate, SimplexScheme};
use crate::ensemble::{random_ensemble_with, Profile, Support};
use crate::error::Result;
use crate::lattice::{DensityMatrix, Key, LatticeBox, C64};
use crate::numerics::split_seed;
use crate::operators::CollisionIndex;
use crate::randomization::{LevelFields, Randomization, SignField};
use crate::report::ExperimentReport;

/// All permutations of 0..n.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Average of γ(σu; σp) over σ ∈ S_m.
pub fn symmetrize(g: &DensityMatrix) -> DensityMatrix {
    let m = g.order();
    let perms = permutations(m);
    let w = C64::new(1.0 / perms.len() as f64, 0.0);
    let mut out = DensityMatrix::zero(m, g.lattice());
    for (key, &v) in g.iter() {
        let (u, p) = (key.unprimed(), key.primed());
        for s in &perms {
            let nu: Vec<_> = s.iter().map(|&i| u[i]).collect();
            let np: Vec<_> = s.iter().map(|&i| p[i]).collect();
            out.add_at(Key::new(&nu, &np), v * w).expect("permuted key stays in box");
        }
    }
    out
}

/// [B^+_{j,k}]^ω − [B^-_{j,k}]^ω.
fn pair(g: &DensityMatrix, j: usize, k: usize, r: &Randomization) -> Result<DensityMatrix> {
    let p = r.collide(g, CollisionIndex::plus(j, k))?;
    let m = r.collide(g, CollisionIndex::minus(j, k))?;
    p.sub(&m)
}

/// One boardgame integrand: pairs (j, k) outermost first acting on orders
/// 2..=5, `order[i]` is which simplex variable plays t_{i+2}.
struct Integral {
    pairs: [(usize, usize); 4],
    time_of: [usize; 4],
}

const I1: Integral = Integral { pairs: [(1, 2), (2, 3), (1, 4), (4, 5)], time_of: [0, 3, 2, 1] };
const I2: Integral = Integral { pairs: [(1, 2), (1, 3), (2, 4), (3, 5)], time_of: [0, 2, 3, 1] };
const I2_LITERAL: Integral = Integral { pairs: [(1, 2), (1, 3), (3, 4), (3, 5)], time_of: [0, 2, 3, 1] };

fn integrate(which: &Integral, g: &DensityMatrix, r: &Randomization, t1: f64, scheme: SimplexScheme) -> Result<DensityMatrix> {
    let f = |s: &[f64]| -> Option<DensityMatrix> {
        let mut t = [t1; 5];
        for i in 0..4 {
            t[i + 1] = s[which.time_of[i]];
        }
        let mut v = g.clone();
        for i in (0..4).rev() {
            let (j, k) = which.pairs[i];
            v = pair(&v, j, k, r).ok()?;
            v = crate::operators::free_evolve(&v, t[i] - t[i + 1]);
        }
        Some(v)
    };
    let out: OptMat = simplex_integrate(|s| OptMat(f(s)), t1, 4, scheme);
    out.0.ok_or_else(|| crate::Error::Usage("boardgame integrand failed".into()))
}

struct OptMat(Option<DensityMatrix>);

impl crate::duhamel::Accumulate for OptMat {
    fn scaled(&self, w: f64) -> Self {
        OptMat(self.0.as_ref().map(|m| m.scale(C64::new(w, 0.0))))
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        match (&mut self.0, &other.0) {
            (Some(a), Some(b)) => a.axpy(C64::new(w, 0.0), b).expect("same order"),
            _ => self.0 = None,
        }
    }
}

/// ‖I₁ − I₂‖ in L² for one randomization.
pub fn boardgame_difference(g: &DensityMatrix, r: &Randomization, t1: f64, scheme: SimplexScheme) -> Result<(f64, f64, f64)> {
    let a = integrate(&I1, g, r, t1, scheme)?;
    let b = integrate(&I2, g, r, t1, scheme)?;
    let c = integrate(&I2_LITERAL, g, r, t1, scheme)?;
    Ok((a.sub(&b)?.weighted_norm(0.0), a.weighted_norm(0.0), a.sub(&c)?.weighted_norm(0.0)))
}

/// Permutation-symmetric γ^(5) on d = 1, K = 1.
pub fn symmetric_top(seed: u64) -> DensityMatrix {
    let lat = LatticeBox::new(1, 1).expect("valid box");
    symmetrize(&random_ensemble_with(5, lat, seed, Profile::Flat, Support::Sparse(6)))
}

pub const BOARDGAME_SEEDS: u64 = 8;

/// Rows: one deterministic run, then shared and independent fields for 8 seeds each.
pub fn boardgame_demo(seed: u64, scheme: SimplexScheme) -> Result<ExperimentReport> {
    let g = symmetric_top(seed);
    let t1 = 1.0;
    let mut rep = ExperimentReport::new("boardgame-demo", &["sample", "fields", "diff", "norm_i1", "diff_literal"]);
    let (d, n, l) = boardgame_difference(&g, &Randomization::Deterministic, t1, scheme)?;
    rep.push(vec![0usize.into(), "plus".into(), d.into(), n.into(), l.into()]);
    let mut shared_max: f64 = d;
    let mut indep_max: f64 = 0.0;
    for s in 0..BOARDGAME_SEEDS {
        let sub = split_seed(seed, s + 1);
        let r = Randomization::Shared(SignField::hashed(sub));
        let (d, n, l) = boardgame_difference(&g, &r, t1, scheme)?;
        shared_max = shared_max.max(d);
        rep.push(vec![((s + 1) as usize).into(), "shared".into(), d.into(), n.into(), l.into()]);
    }
    for s in 0..BOARDGAME_SEEDS {
        let sub = split_seed(seed, s + 1);
        let r = Randomization::Independent(LevelFields::from_seed(sub));
        let (d, n, l) = boardgame_difference(&g, &r, t1, scheme)?;
        indep_max = indep_max.max(d);
        rep.push(vec![((s + 1) as usize).into(), "independent".into(), d.into(), n.into(), l.into()]);
    }
    rep.set("shared_max_diff", shared_max);
    rep.set("independent_max_diff", indep_max);
    rep.set("nnz_gamma5", g.len());
    rep.meta("seed", seed);
    rep.meta("d", 1);
    rep.meta("K", 1);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(5).len(), 120);
        let mut p = permutations(3);
        p.sort();
        p.dedup();
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn symmetrized_is_symmetric() {
        let g = symmetric_top(3);
        for (key, &v) in g.iter() {
            let (u, p) = (key.unprimed(), key.primed());
            let k = Key::new(&[u[2], u[0], u[1], u[4], u[3]], &[p[2], p[0], p[1], p[4], p[3]]);
            assert!((g.get(&k) - v).norm() < 1e-15);
        }
    }

    #[test]
    fn shared_fields_agree_pointwise() {
        let g = symmetric_top(11);
        let scheme = SimplexScheme::ProductGauss { q: 2 };
        for r in [Randomization::Deterministic, Randomization::Shared(SignField::hashed(5))] {
            let (d, n, _) = boardgame_difference(&g, &r, 1.0, scheme).unwrap();
            assert!(n > 0.0);
            assert!(d <= 1e-12 * n.max(1.0), "diff {d} norm {n}");
        }
    }
}
