//! Deterministic operators on density matrices: S^(k,α), U^(k)(t) and the
//! collision operators B^±_{j,k}.

use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, Freq, Key, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// B^±_{j,k}: contracts slot k into slot j. Indices are 1-based, j < k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CollisionIndex {
    pub j: usize,
    pub k: usize,
    pub sign: Sign,
}

impl CollisionIndex {
    pub fn new(j: usize, k: usize, sign: Sign) -> CollisionIndex {
        CollisionIndex { j, k, sign }
    }

    pub fn plus(j: usize, k: usize) -> CollisionIndex {
        CollisionIndex::new(j, k, Sign::Plus)
    }

    pub fn minus(j: usize, k: usize) -> CollisionIndex {
        CollisionIndex::new(j, k, Sign::Minus)
    }

    pub fn validate(&self, order: usize) -> Result<()> {
        if self.j == 0 || self.j >= self.k || self.k > order {
            return Err(Error::BadCollision {
                j: self.j,
                k: self.k,
                order,
            });
        }
        Ok(())
    }
}

impl fmt::Display for CollisionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "B{s}_{}{}", self.j, self.k)
    }
}

/// Where one input coefficient lands under a collision, together with the four
/// frequencies whose signs multiply the summand once randomized.
///
/// Plus: output slot j carries ξ_j = ζ + η − η' where ζ is input slot j and
/// (η, η') the contracted pair. Minus: output primed slot j carries
/// ξ'_j = ζ' − η + η'. Slots above k shift down by one.
pub fn collision_target(key: &Key, c: &CollisionIndex) -> (Key, [Freq; 4]) {
    let m = key.order();
    let (j, k) = (c.j - 1, c.k - 1);
    let u = key.unprimed();
    let p = key.primed();
    let eta = u[k];
    let etap = p[k];
    let mut out = Vec::with_capacity(2 * (m - 1));
    let signs;
    match c.sign {
        Sign::Plus => {
            let zeta = u[j];
            let xi = zeta + eta - etap;
            for (i, &f) in u.iter().enumerate() {
                if i == j {
                    out.push(xi);
                } else if i != k {
                    out.push(f);
                }
            }
            for (i, &f) in p.iter().enumerate() {
                if i != k {
                    out.push(f);
                }
            }
            signs = [xi, zeta, eta, etap];
        }
        Sign::Minus => {
            let zeta = p[j];
            let xi = zeta - eta + etap;
            for (i, &f) in u.iter().enumerate() {
                if i != k {
                    out.push(f);
                }
            }
            for (i, &f) in p.iter().enumerate() {
                if i == j {
                    out.push(xi);
                } else if i != k {
                    out.push(f);
                }
            }
            signs = [xi, zeta, eta, etap];
        }
    }
    (Key::from_vec(out), signs)
}

/// Shared collision kernel; `weight` turns the four sign frequencies into a
/// scalar factor (1 for the deterministic operator).
pub(crate) fn collide_weighted(
    gamma: &DensityMatrix,
    c: &CollisionIndex,
    factor: f64,
    out: &mut DensityMatrix,
    weight: &impl Fn(&[Freq; 4]) -> f64,
) {
    let lat = gamma.lattice();
    let slot = if c.sign == Sign::Plus {
        c.j - 1
    } else {
        out.order() + c.j - 1
    };
    for (key, &v) in gamma.iter() {
        let (target, signs) = collision_target(key, c);
        if !lat.contains(&target.freqs()[slot]) {
            continue;
        }
        let w = factor * weight(&signs);
        out.accumulate(target, v * w);
    }
}

fn check_order(gamma: &DensityMatrix, c: &CollisionIndex) -> Result<()> {
    c.validate(gamma.order()).map_err(|_| Error::OrderMismatch {
        context: format!("{c}"),
        expected: c.k,
        got: gamma.order(),
    })?;
    Ok(())
}

pub fn collide(gamma: &DensityMatrix, c: CollisionIndex) -> Result<DensityMatrix> {
    check_order(gamma, &c)?;
    let mut out = DensityMatrix::zero(gamma.order() - 1, gamma.lattice());
    collide_weighted(gamma, &c, 1.0, &mut out, &|_| 1.0);
    Ok(out)
}

pub(crate) fn full_collision_weighted(
    gamma: &DensityMatrix,
    weight: &impl Fn(&[Freq; 4]) -> f64,
) -> Result<DensityMatrix> {
    let m = gamma.order();
    if m < 2 {
        return Err(Error::OrderMismatch {
            context: "full collision".into(),
            expected: 2,
            got: m,
        });
    }
    let mut out = DensityMatrix::zero(m - 1, gamma.lattice());
    for j in 1..m {
        collide_weighted(gamma, &CollisionIndex::plus(j, m), 1.0, &mut out, weight);
        collide_weighted(gamma, &CollisionIndex::minus(j, m), -1.0, &mut out, weight);
    }
    Ok(out)
}

/// B^(m) = Σ_{j<m} (B^+_{j,m} − B^-_{j,m}) on an order-m matrix.
pub fn full_collision(gamma: &DensityMatrix) -> Result<DensityMatrix> {
    full_collision_weighted(gamma, &|_| 1.0)
}

/// S^(k,α).
pub fn apply_fractional_derivative(gamma: &DensityMatrix, alpha: f64) -> DensityMatrix {
    if alpha == 0.0 {
        return gamma.clone();
    }
    gamma.map(|k, v| v * k.bracket_product().powf(0.5 * alpha))
}

/// U^(k)(t): coefficient × exp(−it(Σ|ξ|² − Σ|ξ'|²)).
pub fn free_evolve(gamma: &DensityMatrix, t: f64) -> DensityMatrix {
    if t == 0.0 {
        return gamma.clone();
    }
    gamma.map(|k, v| v * phase(k, t))
}

pub fn phase(key: &Key, t: f64) -> C64 {
    C64::from_polar(1.0, -t * key.energy() as f64)
}

/// (Δ − Δ')γ on the Fourier side: coefficient × (−Σ|ξ|² + Σ|ξ'|²).
pub fn laplacian_difference(gamma: &DensityMatrix) -> DensityMatrix {
    gamma.map(|k, v| v * (-(k.energy() as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{random_ensemble, random_ensemble_with, random_mode_function, Profile, Support};
    use crate::lattice::{LatticeBox, ModeFunction};
    use proptest::prelude::*;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    fn b1(k: u32) -> LatticeBox {
        LatticeBox::new(1, k).unwrap()
    }

    /// Direct sum over (η, η') in the box, written from the operator formula.
    fn collide_oracle(g: &DensityMatrix, c: CollisionIndex) -> DensityMatrix {
        let lat = g.lattice();
        let m = g.order();
        let mut out = DensityMatrix::zero(m - 1, lat);
        let (j, k) = (c.j - 1, c.k - 1);
        for okey in lat.keys(m - 1) {
            let u = okey.unprimed();
            let p = okey.primed();
            let mut acc = C64::new(0.0, 0.0);
            for eta in lat.freqs() {
                for etap in lat.freqs() {
                    let mut iu: Vec<Freq> = u.to_vec();
                    let mut ip: Vec<Freq> = p.to_vec();
                    match c.sign {
                        Sign::Plus => iu[j] = u[j] - eta + etap,
                        Sign::Minus => ip[j] = p[j] - etap + eta,
                    }
                    iu.insert(k, eta);
                    ip.insert(k, etap);
                    acc += g.get(&Key::new(&iu, &ip));
                }
            }
            if acc != C64::new(0.0, 0.0) {
                out.insert(okey, acc).unwrap();
            }
        }
        out
    }

    #[test]
    fn fractional_derivative_examples() {
        let lat = b1(2);
        let z = DensityMatrix::delta(lat, &[Freq::d1(0); 2], &[Freq::d1(0); 2], one()).unwrap();
        assert_eq!(apply_fractional_derivative(&z, 1.3), z);
        let m = DensityMatrix::delta(lat, &[Freq::d1(2)], &[Freq::d1(1)], one()).unwrap();
        let s = apply_fractional_derivative(&m, 1.0);
        let want = 5f64.sqrt() * 2f64.sqrt();
        assert!((s.get(&Key::d1(&[2], &[1])).re - want).abs() < 1e-14);
        let r = random_ensemble(1, lat, 3, Profile::Flat);
        assert_eq!(apply_fractional_derivative(&r, 0.0), r);
    }

    #[test]
    fn free_evolve_examples() {
        let lat = b1(2);
        let r = random_ensemble(1, lat, 4, Profile::Flat);
        assert_eq!(free_evolve(&r, 0.0), r);
        let d = DensityMatrix::delta(lat, &[Freq::d1(2)], &[Freq::d1(2)], C64::new(0.3, 0.4)).unwrap();
        assert_eq!(free_evolve(&d, 1.7), d);
        let m = DensityMatrix::delta(lat, &[Freq::d1(1)], &[Freq::d1(0)], C64::new(2.0, 1.0)).unwrap();
        let e = free_evolve(&m, std::f64::consts::PI);
        assert!((e.get(&Key::d1(&[1], &[0])) - C64::new(-2.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn single_mode_collisions() {
        let lat = b1(3);
        let g = DensityMatrix::delta(
            lat,
            &[Freq::d1(2), Freq::d1(1)],
            &[Freq::d1(0), Freq::d1(3)],
            one(),
        )
        .unwrap();
        let out = collide(&g, CollisionIndex::plus(1, 2)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.get(&Key::d1(&[0], &[0])), one());

        let lat = b1(5);
        let g = DensityMatrix::delta(
            lat,
            &[Freq::d1(1), Freq::d1(5)],
            &[Freq::d1(2), Freq::d1(3)],
            one(),
        )
        .unwrap();
        let out = collide(&g, CollisionIndex::minus(1, 2)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.get(&Key::d1(&[1], &[0])), one());
    }

    #[test]
    fn two_mode_collision_matches_brute_force() {
        let lat = b1(2);
        let mut g = DensityMatrix::zero(2, lat);
        g.insert(Key::d1(&[1, 0], &[-1, 1]), C64::new(0.5, -1.0)).unwrap();
        g.insert(Key::d1(&[-1, 2], &[0, 1]), C64::new(2.0, 0.25)).unwrap();
        for c in [CollisionIndex::plus(1, 2), CollisionIndex::minus(1, 2)] {
            let fast = collide(&g, c).unwrap();
            let slow = collide_oracle(&g, c);
            assert!(fast.max_abs_diff(&slow) < 1e-15, "{c}");
        }
        // plus: (1+0-1; -1) and (-1+2-1; 0); minus: (1; -1-0+1) and (-1; 0-2+1)
        let plus = collide(&g, CollisionIndex::plus(1, 2)).unwrap();
        assert_eq!(plus.get(&Key::d1(&[0], &[-1])), C64::new(0.5, -1.0));
        assert_eq!(plus.get(&Key::d1(&[0], &[0])), C64::new(2.0, 0.25));
        let minus = collide(&g, CollisionIndex::minus(1, 2)).unwrap();
        assert_eq!(minus.get(&Key::d1(&[1], &[0])), C64::new(0.5, -1.0));
        assert_eq!(minus.get(&Key::d1(&[-1], &[-1])), C64::new(2.0, 0.25));
    }

    #[test]
    fn general_slots_match_brute_force() {
        let lat = b1(1);
        let g = random_ensemble_with(3, lat, 17, Profile::Flat, Support::Sparse(40));
        for (j, k) in [(1, 2), (1, 3), (2, 3)] {
            for c in [CollisionIndex::plus(j, k), CollisionIndex::minus(j, k)] {
                let fast = collide(&g, c).unwrap();
                let slow = collide_oracle(&g, c);
                assert!(fast.max_abs_diff(&slow) < 1e-13, "{c}");
            }
        }
    }

    #[test]
    fn order_errors() {
        let lat = b1(1);
        let g = random_ensemble(2, lat, 1, Profile::Flat);
        assert!(matches!(
            collide(&g, CollisionIndex::plus(1, 3)),
            Err(Error::OrderMismatch { .. })
        ));
        assert!(collide(&g, CollisionIndex::plus(2, 2)).is_err());
        let g1 = random_ensemble(1, lat, 1, Profile::Flat);
        assert!(full_collision(&g1).is_err());
    }

    #[test]
    fn full_collision_k1_is_single_difference() {
        let lat = b1(2);
        let g = random_ensemble(2, lat, 8, Profile::Flat);
        let f = full_collision(&g).unwrap();
        let p = collide(&g, CollisionIndex::plus(1, 2)).unwrap();
        let m = collide(&g, CollisionIndex::minus(1, 2)).unwrap();
        assert!(f.max_abs_diff(&p.sub(&m).unwrap()) < 1e-13);
    }

    #[test]
    fn diagonal_single_mode_cancels() {
        let lat = b1(2);
        for n in -2..=2 {
            let g = DensityMatrix::delta(lat, &[Freq::d1(n); 2], &[Freq::d1(n); 2], C64::new(0.7, 0.2))
                .unwrap();
            assert!(full_collision(&g).unwrap().is_empty());
        }
    }

    #[test]
    fn factorized_solution_of_free_flow() {
        let lat = b1(2);
        let phi = random_mode_function(lat, 3, Profile::Flat, 1.0);
        for k in 1..=2 {
            let g0 = DensityMatrix::factorized(&phi, k);
            let a = free_evolve(&g0, 0.37);
            let b = DensityMatrix::factorized(&phi.free_evolve(0.37), k);
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn factorized_collision_is_cubic_term() {
        // B^(2) of |φ⟩⟨φ|^{⊗2} equals |φ|²φ ⊗ conj(φ) − φ ⊗ conj(|φ|²φ).
        let lat = b1(3);
        let small = b1(1);
        let mut phi = ModeFunction::zero(lat);
        for (f, v) in random_mode_function(small, 9, Profile::Flat, 1.0).sorted() {
            phi.insert(f, v).unwrap();
        }
        let g2 = DensityMatrix::factorized(&phi, 2);
        let b = full_collision(&g2).unwrap();
        let modes = phi.sorted();
        let mut cubic = ModeFunction::zero(lat);
        for &(a, ca) in &modes {
            for &(bb, cb) in &modes {
                for &(c, cc) in &modes {
                    let f = a - bb + c;
                    if lat.contains(&f) {
                        cubic.add_at(f, ca * cb.conj() * cc).unwrap();
                    }
                }
            }
        }
        let mut want = DensityMatrix::zero(1, lat);
        for f in lat.freqs() {
            for g in lat.freqs() {
                let v = cubic.get(&f) * phi.get(&g).conj() - phi.get(&f) * cubic.get(&g).conj();
                want.add_at(Key::new(&[f], &[g]), v).unwrap();
            }
        }
        assert!(b.max_abs_diff(&want) < 1e-12);
    }

    fn arb_order5() -> impl Strategy<Value = DensityMatrix> {
        any::<u64>().prop_map(|s| random_ensemble_with(5, b1(1), s, Profile::Flat, Support::Sparse(60)))
    }

    fn shift(x: usize, removed: usize) -> usize {
        if x > removed {
            x - 1
        } else {
            x
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn unitarity(s in any::<u64>(), t in -10.0f64..10.0, alpha in 0.0f64..2.0) {
            let g = random_ensemble(2, b1(2), s, Profile::Flat);
            let a = g.weighted_norm(alpha);
            let b = free_evolve(&g, t).weighted_norm(alpha);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn group_law(s in any::<u64>(), t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
            let g = random_ensemble(1, b1(3), s, Profile::Flat);
            let a = free_evolve(&free_evolve(&g, t1), t2);
            let b = free_evolve(&g, t1 + t2);
            prop_assert!(a.max_abs_diff(&b) <= 1e-12);
        }

        #[test]
        fn derivative_commutes_with_evolution(s in any::<u64>(), t in -5.0f64..5.0, alpha in 0.0f64..2.0) {
            let g = random_ensemble(2, b1(1), s, Profile::Flat);
            let a = apply_fractional_derivative(&free_evolve(&g, t), alpha);
            let b = free_evolve(&apply_fractional_derivative(&g, alpha), t);
            prop_assert!(a.max_abs_diff(&b) <= 1e-12);
        }

        #[test]
        fn full_collision_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let lat = b1(1);
            let g1 = random_ensemble(3, lat, s1, Profile::Flat);
            let g2 = random_ensemble(3, lat, s2, Profile::Flat);
            let (ca, cb) = (C64::new(a, 0.5), C64::new(b, -0.25));
            let mut mix = g1.scale(ca);
            mix.axpy(cb, &g2).unwrap();
            let lhs = full_collision(&mix).unwrap();
            let mut rhs = full_collision(&g1).unwrap().scale(ca);
            rhs.axpy(cb, &full_collision(&g2).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-11);
        }

        #[test]
        fn disjoint_collisions_commute(
            g in arb_order5(),
            pick in 0usize..6,
            s1 in any::<bool>(),
            s2 in any::<bool>(),
        ) {
            let pairs = [((1, 2), (3, 4)), ((1, 3), (2, 5)), ((1, 5), (2, 4)), ((2, 3), (4, 5)), ((1, 4), (3, 5)), ((3, 4), (1, 5))];
            let ((j1, k1), (j2, k2)) = pairs[pick];
            let sg = |b: bool| if b { Sign::Plus } else { Sign::Minus };
            let c1 = CollisionIndex::new(j1, k1, sg(s1));
            let c2 = CollisionIndex::new(j2, k2, sg(s2));
            let c2p = CollisionIndex::new(shift(j2, k1), shift(k2, k1), c2.sign);
            let c1p = CollisionIndex::new(shift(j1, k2), shift(k1, k2), c1.sign);
            let a = collide(&collide(&g, c1).unwrap(), c2p).unwrap();
            let b = collide(&collide(&g, c2).unwrap(), c1p).unwrap();
            prop_assert!(a.max_abs_diff(&b) <= 1e-12);
        }
    }
}
