//! Averages over the sign randomization ω.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, C64};
use crate::numerics::CompensatedSum;
use crate::operators::CollisionIndex;
use crate::randomization::{LevelFields, Randomization, SignField, SignMode};
use crate::signed::{SignKey, SignedMatrix};

/// Largest number of sign variables the enumeration oracle accepts.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaAverageMethod {
    /// Signature algebra: distinct reduced sign monomials are orthogonal.
    Exact,
    /// All 2^M sign assignments of the variables that occur.
    Enumerate,
    MonteCarlo { samples: usize, seed: u64 },
}

/// A random density matrix given both pointwise in ω and symbolically.
pub trait RandomBuilder: Sync {
    fn mode(&self) -> SignMode;

    fn realize(&self, r: &Randomization) -> Result<DensityMatrix>;

    fn symbolic(&self) -> Result<SignedMatrix>;

    /// Variables to enumerate; by default those present in the expansion.
    fn sign_domain(&self) -> Result<Vec<SignKey>> {
        Ok(self.symbolic()?.sign_keys().into_iter().collect())
    }
}

/// Randomized collision (a single B^±_{j,k} or the full B^(m)) of a fixed matrix.
pub struct CollisionBuilder {
    pub gamma: DensityMatrix,
    pub index: Option<CollisionIndex>,
    pub signed: bool,
}

impl CollisionBuilder {
    /// [B_{j,m}]^ω = [B^+_{j,m}]^ω − [B^-_{j,m}]^ω with m the order of γ.
    pub fn pair(gamma: DensityMatrix, j: usize) -> PairBuilder {
        PairBuilder { gamma, j }
    }
}

impl RandomBuilder for CollisionBuilder {
    fn mode(&self) -> SignMode {
        if self.signed {
            SignMode::Shared
        } else {
            SignMode::Deterministic
        }
    }

    fn realize(&self, r: &Randomization) -> Result<DensityMatrix> {
        match self.index {
            Some(c) => r.collide(&self.gamma, c),
            None => r.full_collision(&self.gamma),
        }
    }

    fn symbolic(&self) -> Result<SignedMatrix> {
        let s = SignedMatrix::from_matrix(&self.gamma);
        match self.index {
            Some(c) => s.collide(c, self.mode()),
            None => s.full_collision(self.mode()),
        }
    }
}

/// [B_{j,m}]^ω γ for one j, the operator of the single-collision estimate.
pub struct PairBuilder {
    pub gamma: DensityMatrix,
    pub j: usize,
}

impl RandomBuilder for PairBuilder {
    fn mode(&self) -> SignMode {
        SignMode::Shared
    }

    fn realize(&self, r: &Randomization) -> Result<DensityMatrix> {
        let m = self.gamma.order();
        let p = r.collide(&self.gamma, CollisionIndex::plus(self.j, m))?;
        let q = r.collide(&self.gamma, CollisionIndex::minus(self.j, m))?;
        p.sub(&q)
    }

    fn symbolic(&self) -> Result<SignedMatrix> {
        let m = self.gamma.order();
        let s = SignedMatrix::from_matrix(&self.gamma);
        let mut p = s.collide(CollisionIndex::plus(self.j, m), SignMode::Shared)?;
        let q = s.collide(CollisionIndex::minus(self.j, m), SignMode::Shared)?;
        p.axpy(C64::new(-1.0, 0.0), &q)?;
        Ok(p)
    }
}

/// Builder from a pair of closures.
pub struct FnBuilder<R, S> {
    pub mode: SignMode,
    pub realize: R,
    pub symbolic: S,
    pub domain: Option<Vec<SignKey>>,
}

impl<R, S> RandomBuilder for FnBuilder<R, S>
where
    R: Fn(&Randomization) -> Result<DensityMatrix> + Sync,
    S: Fn() -> Result<SignedMatrix> + Sync,
{
    fn mode(&self) -> SignMode {
        self.mode
    }

    fn realize(&self, r: &Randomization) -> Result<DensityMatrix> {
        (self.realize)(r)
    }

    fn symbolic(&self) -> Result<SignedMatrix> {
        (self.symbolic)()
    }

    fn sign_domain(&self) -> Result<Vec<SignKey>> {
        match &self.domain {
            Some(d) => Ok(d.clone()),
            None => Ok(self.symbolic()?.sign_keys().into_iter().collect()),
        }
    }
}

/// The fields realizing one assignment of the enumerated variables.
pub fn assignment(mode: SignMode, domain: &[SignKey], mask: u64) -> Randomization {
    let mut tables: BTreeMap<u32, FxHashMap<crate::lattice::Freq, i8>> = BTreeMap::new();
    for (i, key) in domain.iter().enumerate() {
        let s = if mask >> i & 1 == 1 { -1 } else { 1 };
        tables.entry(key.level).or_default().insert(key.freq, s);
    }
    let table = |values| SignField::Table { values, default: 1 };
    match mode {
        SignMode::Deterministic => Randomization::Deterministic,
        SignMode::Shared => Randomization::Shared(table(tables.remove(&0).unwrap_or_default())),
        SignMode::Independent => {
            let mut lf = LevelFields::explicit_only();
            for (l, v) in tables {
                lf = lf.with(l, table(v));
            }
            Randomization::Independent(lf)
        }
    }
}

fn ordered_sum(v: Vec<f64>) -> f64 {
    v.into_iter().collect::<CompensatedSum>().value()
}

/// E_ω ‖S^(k,α) builder(ω)‖².
pub fn omega_averaged_sq_norm(b: &dyn RandomBuilder, alpha: f64, method: OmegaAverageMethod) -> Result<f64> {
    match method {
        OmegaAverageMethod::Exact => Ok(b.symbolic()?.expected_sq_norm(alpha)),
        OmegaAverageMethod::Enumerate => {
            let mode = b.mode();
            if mode == SignMode::Deterministic {
                return Ok(b.realize(&Randomization::Deterministic)?.weighted_norm_sq(alpha));
            }
            let domain = b.sign_domain()?;
            if domain.len() > ENUMERATION_LIMIT {
                return Err(Error::Capacity {
                    distinct: domain.len(),
                    limit: ENUMERATION_LIMIT,
                });
            }
            let n = 1u64 << domain.len();
            let vals: Result<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|mask| Ok(b.realize(&assignment(mode, &domain, mask))?.weighted_norm_sq(alpha)))
                .collect();
            Ok(ordered_sum(vals?) / n as f64)
        }
        OmegaAverageMethod::MonteCarlo { samples, seed } => {
            let (mean, _) = monte_carlo_sq_norm(b, alpha, samples, seed)?;
            Ok(mean)
        }
    }
}

/// Sample mean and standard error of ‖S^(k,α) builder(ω)‖².
pub fn monte_carlo_sq_norm(b: &dyn RandomBuilder, alpha: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::Usage("montecarlo needs at least one sample".into()));
    }
    let mode = b.mode();
    let vals: Result<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|s| Ok(b.realize(&Randomization::sample(mode, seed, s))?.weighted_norm_sq(alpha)))
        .collect();
    let vals = vals?;
    let n = vals.len() as f64;
    let mean = ordered_sum(vals.clone()) / n;
    let var = ordered_sum(vals.iter().map(|v| (v - mean).powi(2)).collect()) / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{random_ensemble_with, Profile, Support};
    use crate::lattice::{Freq, Key, LatticeBox};

    fn b1(k: u32) -> LatticeBox {
        LatticeBox::new(1, k).unwrap()
    }

    fn delta2(lat: LatticeBox, u: [i32; 2], p: [i32; 2]) -> DensityMatrix {
        DensityMatrix::delta(
            lat,
            &[Freq::d1(u[0]), Freq::d1(u[1])],
            &[Freq::d1(p[0]), Freq::d1(p[1])],
            C64::new(1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn single_mode_average_is_one() {
        let lat = b1(3);
        let b = CollisionBuilder {
            gamma: delta2(lat, [2, 1], [0, 3]),
            index: Some(CollisionIndex::plus(1, 2)),
            signed: true,
        };
        for alpha in [0.0, 0.5, 2.0] {
            for m in [OmegaAverageMethod::Exact, OmegaAverageMethod::Enumerate] {
                let v = omega_averaged_sq_norm(&b, alpha, m).unwrap();
                assert!((v - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_builder_gives_plain_norm() {
        let lat = b1(2);
        let g = random_ensemble_with(2, lat, 1, Profile::Flat, Support::Sparse(8));
        let b = CollisionBuilder {
            gamma: g.clone(),
            index: None,
            signed: false,
        };
        let want = crate::operators::full_collision(&g).unwrap().weighted_norm_sq(0.5);
        for m in [
            OmegaAverageMethod::Exact,
            OmegaAverageMethod::Enumerate,
            OmegaAverageMethod::MonteCarlo { samples: 5, seed: 1 },
        ] {
            assert!((omega_averaged_sq_norm(&b, 0.5, m).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn two_mode_exact_matches_enumeration() {
        let lat = b1(2);
        let mut g = delta2(lat, [1, 0], [-1, 1]);
        g.add_at(Key::d1(&[-1, 2], &[0, 1]), C64::new(0.5, 2.0)).unwrap();
        let b = CollisionBuilder {
            gamma: g,
            index: Some(CollisionIndex::plus(1, 2)),
            signed: true,
        };
        let e = omega_averaged_sq_norm(&b, 1.0, OmegaAverageMethod::Exact).unwrap();
        let n = omega_averaged_sq_norm(&b, 1.0, OmegaAverageMethod::Enumerate).unwrap();
        assert!((e - n).abs() <= 1e-10 * e);
    }

    #[test]
    fn enumeration_over_full_box_domain() {
        // Enumerating every frequency of the box, not only those the
        // expansion reports, gives the same value.
        let lat = b1(2);
        let g = random_ensemble_with(2, lat, 12, Profile::Flat, Support::Sparse(4));
        let gg = g.clone();
        let b = FnBuilder {
            mode: SignMode::Shared,
            realize: move |r: &Randomization| r.full_collision(&gg),
            symbolic: {
                let g = g.clone();
                move || SignedMatrix::from_matrix(&g).full_collision(SignMode::Shared)
            },
            domain: Some(lat.freqs().into_iter().map(|freq| SignKey { level: 0, freq }).collect()),
        };
        let e = omega_averaged_sq_norm(&b, 0.3, OmegaAverageMethod::Exact).unwrap();
        let n = omega_averaged_sq_norm(&b, 0.3, OmegaAverageMethod::Enumerate).unwrap();
        assert!((e - n).abs() <= 1e-10 * e.max(1e-300));
    }

    #[test]
    fn capacity_error_above_limit() {
        let lat = b1(20);
        let g = random_ensemble_with(2, lat, 3, Profile::Flat, Support::Sparse(40));
        let b = CollisionBuilder {
            gamma: g,
            index: None,
            signed: true,
        };
        if b.sign_domain().unwrap().len() > ENUMERATION_LIMIT {
            assert!(matches!(
                omega_averaged_sq_norm(&b, 0.0, OmegaAverageMethod::Enumerate),
                Err(Error::Capacity { .. })
            ));
        }
        assert!(omega_averaged_sq_norm(&b, 0.0, OmegaAverageMethod::Exact).is_ok());
    }

    #[test]
    fn monte_carlo_converges_at_root_n() {
        let lat = b1(2);
        let g = random_ensemble_with(2, lat, 21, Profile::Flat, Support::Sparse(10));
        let b = CollisionBuilder {
            gamma: g,
            index: None,
            signed: true,
        };
        let exact = omega_averaged_sq_norm(&b, 0.5, OmegaAverageMethod::Exact).unwrap();
        let rms = |n: usize| {
            let reps = 40;
            let mut s = 0.0;
            for r in 0..reps {
                let (m, _) = monte_carlo_sq_norm(&b, 0.5, n, 1000 + r).unwrap();
                s += (m - exact).powi(2);
            }
            (s / reps as f64).sqrt()
        };
        let e1 = rms(25);
        let e2 = rms(400);
        // 16x the samples: error should drop by about 4
        let ratio = e1 / e2;
        assert!(ratio > 2.5 && ratio < 6.5, "ratio {ratio}");
    }

    #[test]
    fn no_cross_terms_for_unpaired_modes() {
        let lat = b1(5);
        let a = delta2(lat, [1, 2], [0, -1]);
        let bm = delta2(lat, [-2, 3], [1, 2]).scale(C64::new(0.0, 1.5));
        let sum = a.add(&bm).unwrap();
        let avg = |g: DensityMatrix| {
            omega_averaged_sq_norm(
                &CollisionBuilder {
                    gamma: g,
                    index: Some(CollisionIndex::plus(1, 2)),
                    signed: true,
                },
                0.5,
                OmegaAverageMethod::Exact,
            )
            .unwrap()
        };
        let total = avg(sum);
        let parts = avg(a) + avg(bm);
        assert!((total - parts).abs() < 1e-12);
    }
}
