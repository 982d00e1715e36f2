//! Bernoulli sign fields and the randomized operators built from them.

use std::collections::BTreeMap;
use std::hash::Hash;

use rustc_hash::FxHashMap;

use crate::error::Result;
use crate::lattice::{DensityMatrix, Freq, ModeFunction};
use crate::numerics::{split_seed, splitmix64};
use crate::operators::{collide_weighted, full_collision_weighted, CollisionIndex};

/// One realization ω ↦ (h_ξ(ω))_ξ of i.i.d. ±1 signs.
#[derive(Clone, Debug, PartialEq)]
pub enum SignField {
    /// Counter-based hash of (seed, d, coordinates).
    Hashed { seed: u64 },
    /// Every sign equal to the given value (±1).
    Constant(i8),
    /// Explicit signs, `default` elsewhere.
    Table {
        values: FxHashMap<Freq, i8>,
        default: i8,
    },
}

impl SignField {
    pub fn hashed(seed: u64) -> SignField {
        SignField::Hashed { seed }
    }

    pub fn plus() -> SignField {
        SignField::Constant(1)
    }

    pub fn minus() -> SignField {
        SignField::Constant(-1)
    }

    /// Table field with `-1` at the listed frequencies and `+1` elsewhere.
    pub fn flipped(freqs: impl IntoIterator<Item = Freq>) -> SignField {
        SignField::Table {
            values: freqs.into_iter().map(|f| (f, -1)).collect(),
            default: 1,
        }
    }

    pub fn sign(&self, f: &Freq) -> f64 {
        match self {
            SignField::Hashed { seed } => {
                let mut h = splitmix64(*seed ^ 0xA076_1D64_78BD_642F);
                h = splitmix64(h ^ f.dim() as u64);
                for &c in f.coords() {
                    h = splitmix64(h ^ (c as i64 as u64));
                }
                if h >> 63 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            SignField::Constant(s) => *s as f64,
            SignField::Table { values, default } => *values.get(f).unwrap_or(default) as f64,
        }
    }

    pub fn product(&self, fs: &[Freq]) -> f64 {
        fs.iter().map(|f| self.sign(f)).product()
    }
}

/// Fields indexed by hierarchy level, seeded fields for levels not listed.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFields {
    master: Option<u64>,
    explicit: BTreeMap<u32, SignField>,
}

impl LevelFields {
    pub fn from_seed(master: u64) -> LevelFields {
        LevelFields {
            master: Some(master),
            explicit: BTreeMap::new(),
        }
    }

    /// Only explicit fields; unlisted levels have every sign +1.
    pub fn explicit_only() -> LevelFields {
        LevelFields {
            master: None,
            explicit: BTreeMap::new(),
        }
    }

    pub fn with(mut self, level: u32, field: SignField) -> LevelFields {
        self.explicit.insert(level, field);
        self
    }

    pub fn field(&self, level: u32) -> SignField {
        match (self.explicit.get(&level), self.master) {
            (Some(f), _) => f.clone(),
            (None, Some(m)) => SignField::hashed(split_seed(m, level as u64)),
            (None, None) => SignField::plus(),
        }
    }

    fn sign(&self, level: u32, f: &Freq) -> f64 {
        match (self.explicit.get(&level), self.master) {
            (Some(field), _) => field.sign(f),
            (None, Some(m)) => SignField::hashed(split_seed(m, level as u64)).sign(f),
            (None, None) => 1.0,
        }
    }
}

/// How the collisions of a hierarchy are randomized.
#[derive(Clone, Debug, PartialEq)]
pub enum Randomization {
    Deterministic,
    /// One field for every level.
    Shared(SignField),
    /// A field per level; the level of a collision is the order it acts on.
    Independent(LevelFields),
}

/// Kind of randomization without the fields themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignMode {
    Deterministic,
    Shared,
    Independent,
}

impl Randomization {
    pub fn mode(&self) -> SignMode {
        match self {
            Randomization::Deterministic => SignMode::Deterministic,
            Randomization::Shared(_) => SignMode::Shared,
            Randomization::Independent(_) => SignMode::Independent,
        }
    }

    /// Seeded realization number `sample` of the given mode.
    pub fn sample(mode: SignMode, master: u64, sample: u64) -> Randomization {
        let s = split_seed(master, sample);
        match mode {
            SignMode::Deterministic => Randomization::Deterministic,
            SignMode::Shared => Randomization::Shared(SignField::hashed(s)),
            SignMode::Independent => Randomization::Independent(LevelFields::from_seed(s)),
        }
    }

    /// Sign label of a collision acting on order `order`.
    pub fn level_of(mode: SignMode, order: usize) -> u32 {
        match mode {
            SignMode::Independent => order as u32,
            _ => 0,
        }
    }

    pub fn sign(&self, level: u32, f: &Freq) -> f64 {
        match self {
            Randomization::Deterministic => 1.0,
            Randomization::Shared(field) => field.sign(f),
            Randomization::Independent(fields) => fields.sign(level, f),
        }
    }

    /// Four-sign factor of one summand of a collision on order `order`.
    pub fn collision_factor(&self, order: usize, fs: &[Freq; 4]) -> f64 {
        match self {
            Randomization::Deterministic => 1.0,
            Randomization::Shared(field) => field.product(fs),
            Randomization::Independent(fields) => fs.iter().map(|f| fields.sign(order as u32, f)).product(),
        }
    }

    /// [B^(m)]^ω on an order-m matrix, with the field of level m.
    pub fn full_collision(&self, gamma: &DensityMatrix) -> Result<DensityMatrix> {
        match self {
            Randomization::Deterministic => full_collision_weighted(gamma, &|_| 1.0),
            Randomization::Shared(field) => full_randomized_collision(gamma, field),
            Randomization::Independent(fields) => {
                full_randomized_collision(gamma, &fields.field(gamma.order() as u32))
            }
        }
    }

    pub fn collide(&self, gamma: &DensityMatrix, c: CollisionIndex) -> Result<DensityMatrix> {
        match self {
            Randomization::Deterministic => crate::operators::collide(gamma, c),
            Randomization::Shared(field) => randomized_collide(gamma, c, field),
            Randomization::Independent(fields) => {
                randomized_collide(gamma, c, &fields.field(gamma.order() as u32))
            }
        }
    }
}

/// [B^±_{j,k}]^ω: every summand carries h_ξ·h_ζ·h_η·h_η'.
pub fn randomized_collide(gamma: &DensityMatrix, c: CollisionIndex, field: &SignField) -> Result<DensityMatrix> {
    c.validate(gamma.order())
        .map_err(|_| crate::error::Error::OrderMismatch {
            context: format!("{c}"),
            expected: c.k,
            got: gamma.order(),
        })?;
    let mut out = DensityMatrix::zero(gamma.order() - 1, gamma.lattice());
    collide_weighted(gamma, &c, 1.0, &mut out, &|fs| field.product(fs));
    Ok(out)
}

/// [B^(k+1)]^ω = Σ_j ([B^+_{j,k+1}]^ω − [B^-_{j,k+1}]^ω).
pub fn full_randomized_collision(gamma: &DensityMatrix, field: &SignField) -> Result<DensityMatrix> {
    full_collision_weighted(gamma, &|fs| field.product(fs))
}

/// T^ω: f̂(ξ) ↦ h_ξ f̂(ξ).
pub fn randomize_function(f: &ModeFunction, field: &SignField) -> ModeFunction {
    f.map(|xi, v| v * field.sign(xi))
}

/// Coefficient × Π_r h_{ξ_r} Π_r h_{ξ'_r}.
pub fn randomize_density(gamma: &DensityMatrix, field: &SignField) -> DensityMatrix {
    gamma.map(|k, v| v * field.product(k.freqs()))
}

/// E[Π h] for i.i.d. ±1 signs: 1 iff every value occurs an even number of times.
pub fn sign_product_expectation<T: Hash + Eq>(items: impl IntoIterator<Item = T>) -> u8 {
    let mut counts: FxHashMap<T, usize> = FxHashMap::default();
    for x in items {
        *counts.entry(x).or_default() += 1;
    }
    counts.values().all(|c| c % 2 == 0) as u8
}
