//! Random density matrices kept symbolic in the signs.
//!
//! A coefficient of a randomized expression is a sum of terms c·Π h, where
//! the product runs over a multiset of (level, frequency) labels. Since
//! h² = 1 only the labels of odd multiplicity matter, so each term is stored
//! under its reduced label set (its signature). Distinct signatures are
//! orthogonal in L²(Ω), which makes E‖·‖² a plain sum of squares.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, Freq, Key, LatticeBox, C64};
use crate::numerics::CompensatedSum;
use crate::operators::{collision_target, CollisionIndex, Sign};
use crate::randomization::{Randomization, SignMode};

/// Label of one sign variable: the level selects the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignKey {
    pub level: u32,
    pub freq: Freq,
}

/// Sorted set of labels with odd multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(Vec<SignKey>);

impl Signature {
    pub fn empty() -> Signature {
        Signature(Vec::new())
    }

    /// Reduces a multiset modulo squares.
    pub fn from_multiset(items: impl IntoIterator<Item = SignKey>) -> Signature {
        let mut v: Vec<SignKey> = items.into_iter().collect();
        v.sort();
        let mut out = Vec::with_capacity(v.len());
        let mut i = 0;
        while i < v.len() {
            let mut j = i;
            while j < v.len() && v[j] == v[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                out.push(v[i]);
            }
            i = j;
        }
        Signature(out)
    }

    pub fn keys(&self) -> &[SignKey] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Symmetric difference (the product of the two sign monomials).
    pub fn mul(&self, other: &Signature) -> Signature {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Signature(out)
    }

    pub fn eval(&self, r: &Randomization) -> f64 {
        self.0.iter().map(|s| r.sign(s.level, &s.freq)).product()
    }
}

/// Density matrix whose coefficients are polynomials in the signs.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMatrix {
    order: usize,
    lattice: LatticeBox,
    terms: FxHashMap<(Key, Signature), C64>,
}

fn sparse_add(map: &mut FxHashMap<(Key, Signature), C64>, k: (Key, Signature), v: C64) {
    use std::collections::hash_map::Entry;
    if v == C64::new(0.0, 0.0) {
        return;
    }
    match map.entry(k) {
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

impl SignedMatrix {
    pub fn zero(order: usize, lattice: LatticeBox) -> SignedMatrix {
        SignedMatrix {
            order,
            lattice,
            terms: FxHashMap::default(),
        }
    }

    /// A deterministic matrix, every term with the empty signature.
    pub fn from_matrix(m: &DensityMatrix) -> SignedMatrix {
        let mut out = SignedMatrix::zero(m.order(), m.lattice());
        for (k, &v) in m.iter() {
            out.terms.insert((k.clone(), Signature::empty()), v);
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lattice(&self) -> LatticeBox {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Key, Signature), &C64)> {
        self.terms.iter()
    }

    pub fn map(&self, f: impl Fn(&Key, C64) -> C64) -> SignedMatrix {
        let mut out = SignedMatrix::zero(self.order, self.lattice);
        for (ks, &v) in &self.terms {
            let w = f(&ks.0, v);
            if w != C64::new(0.0, 0.0) {
                out.terms.insert(ks.clone(), w);
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> SignedMatrix {
        self.map(|_, v| v * c)
    }

    pub fn free_evolve(&self, t: f64) -> SignedMatrix {
        if t == 0.0 {
            return self.clone();
        }
        self.map(|k, v| v * crate::operators::phase(k, t))
    }

    pub fn fractional_derivative(&self, alpha: f64) -> SignedMatrix {
        self.map(|k, v| v * k.bracket_product().powf(0.5 * alpha))
    }

    pub fn axpy(&mut self, c: C64, other: &SignedMatrix) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                context: "signed sum".into(),
                expected: self.order,
                got: other.order,
            });
        }
        for (ks, &v) in &other.terms {
            sparse_add(&mut self.terms, ks.clone(), c * v);
        }
        Ok(())
    }

    fn collide_into(&self, c: &CollisionIndex, factor: f64, level: Option<u32>, out: &mut SignedMatrix) {
        let slot = if c.sign == Sign::Plus {
            c.j - 1
        } else {
            out.order + c.j - 1
        };
        for ((key, sig), &v) in &self.terms {
            let (target, fs) = collision_target(key, c);
            if !self.lattice.contains(&target.freqs()[slot]) {
                continue;
            }
            let sig = match level {
                None => sig.clone(),
                Some(l) => sig.mul(&Signature::from_multiset(fs.iter().map(|&freq| SignKey { level: l, freq }))),
            };
            sparse_add(&mut out.terms, (target, sig), v * factor);
        }
    }

    fn check(&self, c: &CollisionIndex) -> Result<()> {
        c.validate(self.order).map_err(|_| Error::OrderMismatch {
            context: format!("{c}"),
            expected: c.k,
            got: self.order,
        })
    }

    /// One collision; `mode` decides whether and at which level signs attach.
    pub fn collide(&self, c: CollisionIndex, mode: SignMode) -> Result<SignedMatrix> {
        self.check(&c)?;
        let mut out = SignedMatrix::zero(self.order - 1, self.lattice);
        let level = label(mode, self.order);
        self.collide_into(&c, 1.0, level, &mut out);
        Ok(out)
    }

    /// Full collision B^(m) with signs per `mode`.
    pub fn full_collision(&self, mode: SignMode) -> Result<SignedMatrix> {
        let m = self.order;
        if m < 2 {
            return Err(Error::OrderMismatch {
                context: "full collision".into(),
                expected: 2,
                got: m,
            });
        }
        let level = label(mode, m);
        let mut out = SignedMatrix::zero(m - 1, self.lattice);
        for j in 1..m {
            self.collide_into(&CollisionIndex::plus(j, m), 1.0, level, &mut out);
            self.collide_into(&CollisionIndex::minus(j, m), -1.0, level, &mut out);
        }
        Ok(out)
    }

    /// The realized matrix at fixed fields.
    pub fn realize(&self, r: &Randomization) -> DensityMatrix {
        let mut out = DensityMatrix::zero(self.order, self.lattice);
        let mut entries: Vec<_> = self.terms.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        for ((k, sig), &v) in entries {
            out.accumulate(k.clone(), v * sig.eval(r));
        }
        out
    }

    /// E_ω of the matrix: the terms without signs.
    pub fn mean(&self) -> DensityMatrix {
        let mut out = DensityMatrix::zero(self.order, self.lattice);
        for ((k, sig), &v) in &self.terms {
            if sig.is_empty() {
                out.accumulate(k.clone(), v);
            }
        }
        out
    }

    /// E_ω ‖S^(k,α)·‖², exact.
    pub fn expected_sq_norm(&self, alpha: f64) -> f64 {
        let mut entries: Vec<_> = self.terms.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries
            .into_iter()
            .map(|((k, _), v)| k.weight_sq(alpha) * v.norm_sqr())
            .collect::<CompensatedSum>()
            .value()
    }

    /// Same expectation evaluated pairwise: Σ_key w Σ_{a,b} c_a conj(c_b) E[h^a h^b].
    pub fn expected_sq_norm_pairwise(&self, alpha: f64) -> f64 {
        let mut by_key: FxHashMap<&Key, Vec<(&Signature, C64)>> = FxHashMap::default();
        for ((k, s), &v) in &self.terms {
            by_key.entry(k).or_default().push((s, v));
        }
        let mut keys: Vec<_> = by_key.into_iter().collect();
        keys.sort_by(|a, b| a.0.cmp(b.0));
        let mut acc = CompensatedSum::new();
        for (k, list) in keys {
            let w = k.weight_sq(alpha);
            for (sa, ca) in &list {
                for (sb, cb) in &list {
                    let e = crate::randomization::sign_product_expectation(
                        sa.keys().iter().chain(sb.keys().iter()).copied(),
                    );
                    if e == 1 {
                        acc.add(w * (ca * cb.conj()).re);
                    }
                }
            }
        }
        acc.value()
    }

    /// Every sign label that appears in some term.
    pub fn sign_keys(&self) -> BTreeSet<SignKey> {
        self.terms.keys().flat_map(|(_, s)| s.keys().iter().copied()).collect()
    }
}

fn label(mode: SignMode, order: usize) -> Option<u32> {
    match mode {
        SignMode::Deterministic => None,
        m => Some(Randomization::level_of(m, order)),
    }
}
