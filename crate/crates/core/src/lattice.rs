//! Frequency lattice, sparse density matrices and mode functions.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

pub type C64 = Complex64;

pub const MAX_DIM: usize = 3;

/// A lattice point of Z^d, d ≤ 3. Unused coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Freq {
    d: u8,
    c: [i32; MAX_DIM],
}

impl Freq {
    /// Panics if `coords` is empty or longer than three.
    pub fn new(coords: &[i32]) -> Freq {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "frequency dimension must be 1..=3"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Freq {
            d: coords.len() as u8,
            c,
        }
    }

    pub fn d1(x: i32) -> Freq {
        Freq::new(&[x])
    }

    pub fn zero(d: usize) -> Freq {
        Freq::new(&[0, 0, 0][..d])
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.c[..self.d as usize]
    }

    /// |ξ|².
    pub fn norm_sq(&self) -> i64 {
        self.coords().iter().map(|&x| (x as i64) * (x as i64)).sum()
    }

    /// ⟨ξ⟩² = 1 + |ξ|².
    pub fn bracket_sq(&self) -> f64 {
        1.0 + self.norm_sq() as f64
    }

    pub fn max_abs(&self) -> i64 {
        self.coords()
            .iter()
            .map(|&x| (x as i64).abs())
            .max()
            .unwrap_or(0)
    }

    fn zip(self, o: Freq, f: impl Fn(i32, i32) -> i32) -> Freq {
        debug_assert_eq!(self.d, o.d);
        let mut c = [0; MAX_DIM];
        for (i, ci) in c.iter_mut().enumerate().take(self.d as usize) {
            *ci = f(self.c[i], o.c[i]);
        }
        Freq { d: self.d, c }
    }
}

impl Add for Freq {
    type Output = Freq;
    fn add(self, o: Freq) -> Freq {
        self.zip(o, |a, b| a + b)
    }
}

impl Sub for Freq {
    type Output = Freq;
    fn sub(self, o: Freq) -> Freq {
        self.zip(o, |a, b| a - b)
    }
}

impl Neg for Freq {
    type Output = Freq;
    fn neg(self) -> Freq {
        self.zip(self, |a, _| -a)
    }
}

impl fmt::Debug for Freq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Freq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords().iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// The truncated lattice [-K, K]^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    d: usize,
    cutoff: u32,
}

impl LatticeBox {
    pub fn new(d: usize, cutoff: u32) -> Result<LatticeBox> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::Dimension {
                expected: MAX_DIM,
                got: d,
            });
        }
        Ok(LatticeBox { d, cutoff })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn size(&self) -> usize {
        (2 * self.cutoff as usize + 1).pow(self.d as u32)
    }

    pub fn contains(&self, f: &Freq) -> bool {
        f.dim() == self.d && f.max_abs() <= self.cutoff as i64
    }

    pub fn check(&self, f: &Freq) -> Result<()> {
        if f.dim() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: f.dim(),
            });
        }
        match f.coords().iter().find(|c| c.unsigned_abs() > self.cutoff) {
            Some(&c) => Err(Error::OutOfBox {
                coord: c as i64,
                cutoff: self.cutoff,
            }),
            None => Ok(()),
        }
    }

    /// All frequencies of the box in lexicographic order.
    pub fn freqs(&self) -> Vec<Freq> {
        let k = self.cutoff as i32;
        let mut out = Vec::with_capacity(self.size());
        let mut cur = vec![-k; self.d];
        loop {
            out.push(Freq::new(&cur));
            let mut i = self.d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < k {
                    cur[i] += 1;
                    break;
                }
                cur[i] = -k;
            }
        }
    }

    /// Every key of the given order, lexicographic in the concatenated tuple.
    pub fn keys(&self, order: usize) -> Vec<Key> {
        let fs = self.freqs();
        let n = 2 * order;
        let mut idx = vec![0usize; n];
        let mut out = Vec::new();
        loop {
            out.push(Key::from_vec(idx.iter().map(|&i| fs[i]).collect()));
            let mut p = n;
            loop {
                if p == 0 {
                    return out;
                }
                p -= 1;
                if idx[p] + 1 < fs.len() {
                    idx[p] += 1;
                    break;
                }
                idx[p] = 0;
            }
        }
    }
}

/// A coefficient index (ξ_1..ξ_k ; ξ'_1..ξ'_k) stored as one flat tuple.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key(Vec<Freq>);

impl Key {
    pub fn new(unprimed: &[Freq], primed: &[Freq]) -> Key {
        assert_eq!(unprimed.len(), primed.len(), "unbalanced key");
        let mut v = Vec::with_capacity(2 * unprimed.len());
        v.extend_from_slice(unprimed);
        v.extend_from_slice(primed);
        Key(v)
    }

    pub fn from_vec(v: Vec<Freq>) -> Key {
        assert!(v.len().is_multiple_of(2), "unbalanced key");
        Key(v)
    }

    /// One-dimensional shorthand.
    pub fn d1(unprimed: &[i32], primed: &[i32]) -> Key {
        let u: Vec<Freq> = unprimed.iter().map(|&x| Freq::d1(x)).collect();
        let p: Vec<Freq> = primed.iter().map(|&x| Freq::d1(x)).collect();
        Key::new(&u, &p)
    }

    pub fn order(&self) -> usize {
        self.0.len() / 2
    }

    pub fn unprimed(&self) -> &[Freq] {
        &self.0[..self.order()]
    }

    pub fn primed(&self) -> &[Freq] {
        &self.0[self.order()..]
    }

    pub fn freqs(&self) -> &[Freq] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Freq> {
        self.0
    }

    /// Π ⟨ξ_j⟩²⟨ξ'_j⟩².
    pub fn bracket_product(&self) -> f64 {
        self.0.iter().map(|f| f.bracket_sq()).product()
    }

    /// Π ⟨ξ_j⟩^{2α}⟨ξ'_j⟩^{2α}.
    pub fn weight_sq(&self, alpha: f64) -> f64 {
        if alpha == 0.0 {
            1.0
        } else {
            self.bracket_product().powf(alpha)
        }
    }

    /// Σ|ξ_j|² − Σ|ξ'_j|².
    pub fn energy(&self) -> i64 {
        let u: i64 = self.unprimed().iter().map(|f| f.norm_sq()).sum();
        let p: i64 = self.primed().iter().map(|f| f.norm_sq()).sum();
        u - p
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u: Vec<String> = self.unprimed().iter().map(|x| x.to_string()).collect();
        let p: Vec<String> = self.primed().iter().map(|x| x.to_string()).collect();
        write!(f, "({};{})", u.join(" "), p.join(" "))
    }
}

fn sparse_add<K: std::hash::Hash + Eq>(map: &mut FxHashMap<K, C64>, key: K, v: C64) {
    use std::collections::hash_map::Entry;
    if v == C64::new(0.0, 0.0) {
        return;
    }
    match map.entry(key) {
        Entry::Occupied(mut e) => {
            let s = *e.get() + v;
            if s == C64::new(0.0, 0.0) {
                e.remove();
            } else {
                *e.get_mut() = s;
            }
        }
        Entry::Vacant(e) => {
            e.insert(v);
        }
    }
}

/// Fourier coefficients of a density matrix of order k on a truncated box.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    order: usize,
    lattice: LatticeBox,
    coeffs: FxHashMap<Key, C64>,
}

impl DensityMatrix {
    pub fn zero(order: usize, lattice: LatticeBox) -> DensityMatrix {
        DensityMatrix {
            order,
            lattice,
            coeffs: FxHashMap::default(),
        }
    }

    pub fn delta(
        lattice: LatticeBox,
        unprimed: &[Freq],
        primed: &[Freq],
        value: C64,
    ) -> Result<DensityMatrix> {
        if unprimed.len() != primed.len() || unprimed.is_empty() {
            return Err(Error::OrderMismatch {
                context: "delta".into(),
                expected: unprimed.len(),
                got: primed.len(),
            });
        }
        let mut m = DensityMatrix::zero(unprimed.len(), lattice);
        m.insert(Key::new(unprimed, primed), value)?;
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lattice(&self) -> LatticeBox {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, key: &Key) -> C64 {
        self.coeffs.get(key).copied().unwrap_or_default()
    }

    fn check_key(&self, key: &Key) -> Result<()> {
        if key.order() != self.order {
            return Err(Error::OrderMismatch {
                context: "key".into(),
                expected: self.order,
                got: key.order(),
            });
        }
        for f in key.freqs() {
            self.lattice.check(f)?;
        }
        Ok(())
    }

    /// Overwrites one coefficient; zero removes it.
    pub fn insert(&mut self, key: Key, value: C64) -> Result<()> {
        self.check_key(&key)?;
        if value == C64::new(0.0, 0.0) {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, value);
        }
        Ok(())
    }

    /// Adds to one coefficient, checking the key.
    pub fn add_at(&mut self, key: Key, value: C64) -> Result<()> {
        self.check_key(&key)?;
        sparse_add(&mut self.coeffs, key, value);
        Ok(())
    }

    /// Adds without validation; callers guarantee the key lies in the box.
    pub(crate) fn accumulate(&mut self, key: Key, value: C64) {
        debug_assert!(self.check_key(&key).is_ok());
        sparse_add(&mut self.coeffs, key, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &C64)> {
        self.coeffs.iter()
    }

    /// Entries in ascending key order.
    pub fn sorted(&self) -> Vec<(&Key, &C64)> {
        let mut v: Vec<_> = self.coeffs.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn weighted_norm_sq(&self, alpha: f64) -> f64 {
        self.sorted()
            .into_iter()
            .map(|(k, c)| k.weight_sq(alpha) * c.norm_sqr())
            .collect::<CompensatedSum>()
            .value()
    }

    /// ‖S^(k,α) γ‖ in ℓ².
    pub fn weighted_norm(&self, alpha: f64) -> f64 {
        self.weighted_norm_sq(alpha).sqrt()
    }

    pub fn map(&self, f: impl Fn(&Key, C64) -> C64) -> DensityMatrix {
        let mut out = DensityMatrix::zero(self.order, self.lattice);
        for (k, &c) in &self.coeffs {
            let v = f(k, c);
            if v != C64::new(0.0, 0.0) {
                out.coeffs.insert(k.clone(), v);
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> DensityMatrix {
        self.map(|_, v| v * c)
    }

    fn compatible(&self, other: &DensityMatrix) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                context: "sum".into(),
                expected: self.order,
                got: other.order,
            });
        }
        if self.lattice != other.lattice {
            return Err(Error::Usage("matrices live on different boxes".into()));
        }
        Ok(())
    }

    /// self += c·other.
    pub fn axpy(&mut self, c: C64, other: &DensityMatrix) -> Result<()> {
        self.compatible(other)?;
        let mut entries: Vec<_> = other.coeffs.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        for (k, &v) in entries {
            sparse_add(&mut self.coeffs, k.clone(), c * v);
        }
        Ok(())
    }

    pub fn add(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Largest coefficient-wise modulus of the difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let mut m: f64 = 0.0;
        for (k, v) in &self.coeffs {
            m = m.max((v - other.get(k)).norm());
        }
        for (k, v) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                m = m.max(v.norm());
            }
        }
        m
    }

    /// Tensor power |φ⟩⟨φ|^{⊗k} on the Fourier side.
    pub fn factorized(phi: &ModeFunction, k: usize) -> DensityMatrix {
        assert!(k >= 1, "factorized order must be positive");
        let modes = phi.sorted();
        let mut out = DensityMatrix::zero(k, phi.lattice());
        let n = modes.len();
        if n == 0 {
            return out;
        }
        let mut idx = vec![0usize; 2 * k];
        loop {
            let mut v = C64::new(1.0, 0.0);
            let mut fs = Vec::with_capacity(2 * k);
            for (s, &i) in idx.iter().enumerate() {
                let (f, c) = modes[i];
                fs.push(f);
                v *= if s < k { c } else { c.conj() };
            }
            if v != C64::new(0.0, 0.0) {
                out.coeffs.insert(Key(fs), v);
            }
            let mut p = 2 * k;
            loop {
                if p == 0 {
                    return out;
                }
                p -= 1;
                if idx[p] + 1 < n {
                    idx[p] += 1;
                    break;
                }
                idx[p] = 0;
            }
        }
    }
}

/// Fourier coefficients of a single-particle function.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeFunction {
    lattice: LatticeBox,
    coeffs: FxHashMap<Freq, C64>,
}

impl ModeFunction {
    pub fn zero(lattice: LatticeBox) -> ModeFunction {
        ModeFunction {
            lattice,
            coeffs: FxHashMap::default(),
        }
    }

    pub fn from_pairs(
        lattice: LatticeBox,
        pairs: impl IntoIterator<Item = (Freq, C64)>,
    ) -> Result<ModeFunction> {
        let mut m = ModeFunction::zero(lattice);
        for (f, c) in pairs {
            m.add_at(f, c)?;
        }
        Ok(m)
    }

    pub fn lattice(&self) -> LatticeBox {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, f: &Freq) -> C64 {
        self.coeffs.get(f).copied().unwrap_or_default()
    }

    pub fn insert(&mut self, f: Freq, c: C64) -> Result<()> {
        self.lattice.check(&f)?;
        if c == C64::new(0.0, 0.0) {
            self.coeffs.remove(&f);
        } else {
            self.coeffs.insert(f, c);
        }
        Ok(())
    }

    pub fn add_at(&mut self, f: Freq, c: C64) -> Result<()> {
        self.lattice.check(&f)?;
        sparse_add(&mut self.coeffs, f, c);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Freq, &C64)> {
        self.coeffs.iter()
    }

    pub fn sorted(&self) -> Vec<(Freq, C64)> {
        let mut v: Vec<_> = self.coeffs.iter().map(|(f, c)| (*f, *c)).collect();
        v.sort_by_key(|a| a.0);
        v
    }

    pub fn map(&self, f: impl Fn(&Freq, C64) -> C64) -> ModeFunction {
        let mut out = ModeFunction::zero(self.lattice);
        for (k, &c) in &self.coeffs {
            let v = f(k, c);
            if v != C64::new(0.0, 0.0) {
                out.coeffs.insert(*k, v);
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> ModeFunction {
        self.map(|_, v| v * c)
    }

    pub fn weighted_norm(&self, alpha: f64) -> f64 {
        self.sorted()
            .into_iter()
            .map(|(f, c)| f.bracket_sq().powf(alpha) * c.norm_sqr())
            .collect::<CompensatedSum>()
            .value()
            .sqrt()
    }

    /// Σ|φ̂|².
    pub fn mass(&self) -> f64 {
        self.weighted_norm(0.0).powi(2)
    }

    /// exp(−it|ξ|²) on every mode.
    pub fn free_evolve(&self, t: f64) -> ModeFunction {
        self.map(|f, c| c * C64::from_polar(1.0, -t * f.norm_sq() as f64))
    }

    pub fn max_abs_diff(&self, other: &ModeFunction) -> f64 {
        let mut m: f64 = 0.0;
        for (k, v) in &self.coeffs {
            m = m.max((v - other.get(k)).norm());
        }
        for (k, v) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                m = m.max(v.norm());
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b1(k: u32) -> LatticeBox {
        LatticeBox::new(1, k).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn box_enumerates_all_points() {
        for d in 1..=3 {
            for k in 0..3 {
                let b = LatticeBox::new(d, k).unwrap();
                let fs = b.freqs();
                assert_eq!(fs.len(), (2 * k as usize + 1).pow(d as u32));
                let mut sorted = fs.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), fs.len());
                assert!(fs.iter().all(|f| b.contains(f)));
            }
        }
        assert!(LatticeBox::new(0, 1).is_err());
        assert!(LatticeBox::new(4, 1).is_err());
    }

    #[test]
    fn delta_constructors() {
        let m = DensityMatrix::delta(b1(2), &[Freq::d1(2)], &[Freq::d1(1)], c(1.0, 0.0)).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.get(&Key::d1(&[2], &[1])), c(1.0, 0.0));

        let m = DensityMatrix::delta(
            b1(3),
            &[Freq::d1(2), Freq::d1(1)],
            &[Freq::d1(0), Freq::d1(3)],
            c(1.0, 0.0),
        )
        .unwrap();
        assert_eq!(m.order(), 2);
        assert_eq!(m.get(&Key::d1(&[2, 1], &[0, 3])), c(1.0, 0.0));

        let z = DensityMatrix::delta(b1(2), &[Freq::d1(2)], &[Freq::d1(1)], c(0.0, 0.0)).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn delta_rejects_out_of_box_coordinate() {
        let e = DensityMatrix::delta(b1(2), &[Freq::d1(3)], &[Freq::d1(1)], c(1.0, 0.0));
        assert_eq!(e, Err(Error::OutOfBox { coord: 3, cutoff: 2 }));
    }

    #[test]
    fn weighted_norm_examples() {
        let m = DensityMatrix::delta(b1(2), &[Freq::d1(2)], &[Freq::d1(1)], c(1.0, 0.0)).unwrap();
        assert!((m.weighted_norm(1.0) - 10f64.sqrt()).abs() < 1e-15);

        let mut m = DensityMatrix::zero(1, b1(1));
        m.insert(Key::d1(&[0], &[0]), c(1.0, 0.0)).unwrap();
        m.insert(Key::d1(&[1], &[0]), c(1.0, 0.0)).unwrap();
        assert!((m.weighted_norm(1.0) - 3f64.sqrt()).abs() < 1e-15);
        assert!((m.weighted_norm(0.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn factorized_examples() {
        let lat = b1(2);
        let cc = c(0.3, -1.2);
        let phi = ModeFunction::from_pairs(lat, [(Freq::d1(0), cc)]).unwrap();
        let g = DensityMatrix::factorized(&phi, 1);
        assert_eq!(g.len(), 1);
        assert!((g.get(&Key::d1(&[0], &[0])) - c(cc.norm_sqr(), 0.0)).norm() < 1e-15);

        let phi = ModeFunction::from_pairs(lat, [(Freq::d1(2), c(1.0, 0.0))]).unwrap();
        let g = DensityMatrix::factorized(&phi, 2);
        assert_eq!(g.len(), 1);
        assert_eq!(g.get(&Key::d1(&[2, 2], &[2, 2])), c(1.0, 0.0));

        let a = c(1.0, 2.0);
        let b = c(-0.5, 0.25);
        let phi = ModeFunction::from_pairs(lat, [(Freq::d1(0), a), (Freq::d1(1), b)]).unwrap();
        let g = DensityMatrix::factorized(&phi, 1);
        assert_eq!(g.len(), 4);
        assert_eq!(g.get(&Key::d1(&[0], &[0])), a * a.conj());
        assert_eq!(g.get(&Key::d1(&[0], &[1])), a * b.conj());
        assert_eq!(g.get(&Key::d1(&[1], &[0])), b * a.conj());
        assert_eq!(g.get(&Key::d1(&[1], &[1])), b * b.conj());
    }

    #[test]
    fn negation_cancels_to_empty() {
        let lat = b1(1);
        let mut m = DensityMatrix::zero(1, lat);
        m.insert(Key::d1(&[1], &[0]), c(0.1, 0.7)).unwrap();
        m.insert(Key::d1(&[-1], &[1]), c(-2.0, 0.0)).unwrap();
        let s = m.sub(&m).unwrap();
        assert!(s.is_empty());
        let s = m.add(&m.scale(c(-1.0, 0.0))).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn keys_enumerate_full_product() {
        let lat = b1(1);
        assert_eq!(lat.keys(1).len(), 9);
        assert_eq!(lat.keys(2).len(), 81);
        let lat = LatticeBox::new(2, 1).unwrap();
        assert_eq!(lat.keys(1).len(), 81);
    }

    fn arb_matrix() -> impl Strategy<Value = DensityMatrix> {
        proptest::collection::vec(((-2i32..=2), (-2i32..=2), (-3.0f64..3.0), (-3.0f64..3.0)), 0..12)
            .prop_map(|v| {
                let mut m = DensityMatrix::zero(1, b1(2));
                for (a, b, re, im) in v {
                    m.add_at(Key::d1(&[a], &[b]), c(re, im)).unwrap();
                }
                m
            })
    }

    fn arb_phi() -> impl Strategy<Value = ModeFunction> {
        proptest::collection::vec(((-2i32..=2), (-2.0f64..2.0), (-2.0f64..2.0)), 0..5).prop_map(|v| {
            ModeFunction::from_pairs(b1(2), v.into_iter().map(|(f, re, im)| (Freq::d1(f), c(re, im))))
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn plancherel_at_zero_exponent(m in arb_matrix()) {
            let direct: f64 = m.iter().map(|(_, v)| v.norm_sqr()).sum();
            prop_assert!((m.weighted_norm(0.0).powi(2) - direct).abs() <= 1e-12 * (1.0 + direct));
        }

        #[test]
        fn norm_is_absolutely_homogeneous(m in arb_matrix(), re in -3.0f64..3.0, im in -3.0f64..3.0, alpha in 0.0f64..2.0) {
            let s = c(re, im);
            let lhs = m.scale(s).weighted_norm(alpha);
            let rhs = s.norm() * m.weighted_norm(alpha);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn factorized_norm_is_power(phi in arb_phi(), k in 1usize..=3, alpha in 0.0f64..1.5) {
            let g = DensityMatrix::factorized(&phi, k);
            let lhs = g.weighted_norm(alpha);
            let rhs = phi.weighted_norm(alpha).powi(2 * k as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
        }

        #[test]
        fn no_stored_zeros(m in arb_matrix()) {
            prop_assert!(m.iter().all(|(_, v)| *v != C64::new(0.0, 0.0)));
            let z = m.add(&m.scale(c(-1.0, 0.0))).unwrap();
            prop_assert!(z.is_empty());
        }
    }
}
