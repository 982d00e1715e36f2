//! Which outer frequencies a word of collisions splits, and into what.

use std::fmt;

use crate::duhamel::DuhamelWord;
use crate::operators::Sign;

/// One of ξ_1..ξ_n (unprimed) or ξ'_1..ξ'_n (primed) of the output matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outer {
    pub primed: bool,
    pub index: usize,
}

impl fmt::Display for Outer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.primed {
            write!(f, "ξ'{}", self.index)
        } else {
            write!(f, "ξ{}", self.index)
        }
    }
}

/// A slot of the top-order matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub primed: bool,
    /// 1-based.
    pub index: usize,
}

/// ξ = Σ sign · (top slot); terms ordered unprimed slots first, then primed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub outer: Outer,
    pub terms: Vec<(i8, Slot)>,
}

impl Decomposition {
    pub fn signs(&self) -> Vec<i8> {
        self.terms.iter().map(|t| t.0).collect()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = ", self.outer)?;
        for (i, (s, _)) in self.terms.iter().enumerate() {
            let sign = if *s > 0 { "+" } else { "-" };
            if i == 0 && *s > 0 {
                write!(f, "η{}", i + 1)?;
            } else {
                write!(f, "{sign}η{}", i + 1)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionBookkeeping {
    pub n: usize,
    pub top_order: usize,
    /// Unprimed outer frequencies split by at least one collision.
    pub a: Vec<Outer>,
    /// Primed outer frequencies split by at least one collision.
    pub b: Vec<Outer>,
    /// N_1..N_n.
    pub n_counts: Vec<usize>,
    /// M_1..M_n.
    pub m_counts: Vec<usize>,
    /// One entry per outer frequency: ξ_1..ξ_n, then ξ'_1..ξ'_n.
    pub decompositions: Vec<Decomposition>,
}

impl ExpansionBookkeeping {
    pub fn decomposition(&self, outer: Outer) -> &Decomposition {
        let i = if outer.primed { self.n + outer.index - 1 } else { outer.index - 1 };
        &self.decompositions[i]
    }

    /// Integer matrix: row per outer frequency, column per top slot (unprimed then primed).
    pub fn coefficient_matrix(&self) -> Vec<Vec<i32>> {
        let m = self.top_order;
        self.decompositions
            .iter()
            .map(|d| {
                let mut row = vec![0; 2 * m];
                for (s, slot) in &d.terms {
                    let c = if slot.primed { m + slot.index - 1 } else { slot.index - 1 };
                    row[c] += *s as i32;
                }
                row
            })
            .collect()
    }
}

#[derive(Clone, Copy)]
struct Tag {
    owner: Outer,
    sign: i8,
}

/// Track, slot by slot, which outer frequency each top-order variable feeds.
///
/// Going outward-in, B^+_{j,k} replaces the unprimed slot j carrying (o, s) by
/// the input slot j, a new unprimed slot k with (o, s) and a new primed slot k
/// with (o, −s); B^-_{j,k} does the mirror image on the primed side.
pub fn expansion_bookkeeping(word: &DuhamelWord) -> ExpansionBookkeeping {
    let n = word.base_order();
    let mut u: Vec<Tag> = (1..=n)
        .map(|i| Tag { owner: Outer { primed: false, index: i }, sign: 1 })
        .collect();
    let mut p: Vec<Tag> = (1..=n)
        .map(|i| Tag { owner: Outer { primed: true, index: i }, sign: 1 })
        .collect();
    for c in word.steps() {
        let (j, k) = (c.j - 1, c.k - 1);
        match c.sign {
            Sign::Plus => {
                let t = u[j];
                u.insert(k, t);
                p.insert(k, Tag { owner: t.owner, sign: -t.sign });
            }
            Sign::Minus => {
                let t = p[j];
                u.insert(k, Tag { owner: t.owner, sign: -t.sign });
                p.insert(k, t);
            }
        }
    }
    let top = word.top_order();
    let outers: Vec<Outer> = (1..=n)
        .map(|i| Outer { primed: false, index: i })
        .chain((1..=n).map(|i| Outer { primed: true, index: i }))
        .collect();
    let decompositions: Vec<Decomposition> = outers
        .iter()
        .map(|&o| {
            let mut terms = Vec::new();
            for (i, t) in u.iter().enumerate() {
                if t.owner == o {
                    terms.push((t.sign, Slot { primed: false, index: i + 1 }));
                }
            }
            for (i, t) in p.iter().enumerate() {
                if t.owner == o {
                    terms.push((t.sign, Slot { primed: true, index: i + 1 }));
                }
            }
            Decomposition { outer: o, terms }
        })
        .collect();
    let n_counts: Vec<usize> = decompositions[..n].iter().map(|d| d.len()).collect();
    let m_counts: Vec<usize> = decompositions[n..].iter().map(|d| d.len()).collect();
    let a = decompositions[..n].iter().filter(|d| d.len() > 1).map(|d| d.outer).collect();
    let b = decompositions[n..].iter().filter(|d| d.len() > 1).map(|d| d.outer).collect();
    ExpansionBookkeeping {
        n,
        top_order: top,
        a,
        b,
        n_counts,
        m_counts,
        decompositions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duhamel::duhamel_integrand;
    use crate::lattice::{DensityMatrix, Freq, LatticeBox, C64};
    use crate::operators::CollisionIndex;
    use crate::randomization::Randomization;
    use proptest::prelude::*;

    fn worked_example() -> DuhamelWord {
        DuhamelWord::new(
            2,
            vec![CollisionIndex::plus(1, 2), CollisionIndex::minus(2, 3), CollisionIndex::minus(4, 5)],
        )
        .unwrap()
    }

    #[test]
    fn worked_example_sets_and_counts() {
        let b = expansion_bookkeeping(&worked_example());
        assert_eq!(b.a, vec![Outer { primed: false, index: 1 }]);
        assert_eq!(b.b, vec![Outer { primed: true, index: 2 }]);
        assert_eq!(b.n_counts, vec![5, 1]);
        assert_eq!(b.m_counts, vec![1, 3]);
        let x1 = b.decomposition(Outer { primed: false, index: 1 });
        assert_eq!(x1.signs(), vec![1, 1, 1, -1, -1]);
        assert_eq!(x1.to_string(), "ξ1 = η1+η2+η3-η4-η5");
        let x2 = b.decomposition(Outer { primed: true, index: 2 });
        assert_eq!(x2.signs(), vec![-1, 1, 1]);
        assert_eq!(x2.to_string(), "ξ'2 = -η1+η2+η3");
    }

    #[test]
    fn single_step_and_empty_word() {
        let w = DuhamelWord::new(1, vec![CollisionIndex::plus(1, 2)]).unwrap();
        let b = expansion_bookkeeping(&w);
        assert_eq!(b.a, vec![Outer { primed: false, index: 1 }]);
        assert!(b.b.is_empty());
        assert_eq!(b.n_counts, vec![3]);
        let e = expansion_bookkeeping(&DuhamelWord::new(2, vec![]).unwrap());
        assert!(e.a.is_empty() && e.b.is_empty());
        assert_eq!(e.n_counts, vec![1, 1]);
    }

    /// Push the unit vector of each top slot through the actual collision chain
    /// and read off the output frequencies: that is the coefficient matrix.
    fn chain_matrix(word: &DuhamelWord) -> Vec<Vec<i32>> {
        let m = word.top_order();
        let n = word.base_order();
        let lat = LatticeBox::new(1, 4 * m as u32).unwrap();
        let mut cols = Vec::new();
        for s in 0..2 * m {
            let v: Vec<Freq> = (0..2 * m).map(|i| Freq::d1(if i == s { 1 } else { 0 })).collect();
            let g = DensityMatrix::delta(lat, &v[..m], &v[m..], C64::new(1.0, 0.0)).unwrap();
            let times = vec![0.0; word.len() + 1];
            let out: DensityMatrix = duhamel_integrand(word, &times, &g, &Randomization::Deterministic).unwrap();
            assert_eq!(out.len(), 1);
            let (key, _) = out.iter().next().unwrap();
            cols.push(key.freqs().iter().map(|f| f.coords()[0]).collect::<Vec<i32>>());
        }
        (0..2 * n).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
    }

    #[test]
    fn worked_example_matches_chain() {
        let w = worked_example();
        assert_eq!(expansion_bookkeeping(&w).coefficient_matrix(), chain_matrix(&w));
    }

    fn arb_word() -> impl Strategy<Value = DuhamelWord> {
        (1usize..=3, proptest::collection::vec((any::<u32>(), any::<u32>(), any::<bool>()), 0..=3)).prop_map(
            |(n, raw)| {
                let steps = raw
                    .iter()
                    .enumerate()
                    .map(|(i, &(a, b, plus))| {
                        let order = n + i + 1;
                        let k = 2 + (a as usize) % (order - 1);
                        let j = 1 + (b as usize) % (k - 1);
                        if plus {
                            CollisionIndex::plus(j, k)
                        } else {
                            CollisionIndex::minus(j, k)
                        }
                    })
                    .collect();
                DuhamelWord::new(n, steps).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn bookkeeping_matches_chain(w in arb_word()) {
            let b = expansion_bookkeeping(&w);
            prop_assert_eq!(b.coefficient_matrix(), chain_matrix(&w));
            let total: usize = b.n_counts.iter().chain(&b.m_counts).sum();
            prop_assert_eq!(total, 2 * w.top_order());
        }
    }
}
