//! Seeded random test ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lattice::{DensityMatrix, Freq, Key, LatticeBox, ModeFunction, C64};

/// Coefficient magnitude as a function of frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Flat,
    /// Weight ⟨max_i |ξ_i|⟩^{-β} over all 2k key frequencies.
    Decaying(f64),
}

impl Profile {
    pub fn weight(&self, key: &Key) -> f64 {
        match *self {
            Profile::Flat => 1.0,
            Profile::Decaying(beta) => {
                let m = key.freqs().iter().map(|f| f.norm_sq()).max().unwrap_or(0);
                (1.0 + m as f64).powf(-0.5 * beta)
            }
        }
    }
}

/// Which keys receive a coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Full,
    /// `n` keys drawn uniformly from the box, duplicates merged.
    Sparse(usize),
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian with E|z|² = 1.
pub fn complex_gaussian<R: Rng>(r: &mut R) -> C64 {
    let a: f64 = r.sample(StandardNormal);
    let b: f64 = r.sample(StandardNormal);
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_freq<R: Rng>(r: &mut R, lattice: LatticeBox) -> Freq {
    let k = lattice.cutoff() as i32;
    let c: Vec<i32> = (0..lattice.dim()).map(|_| r.random_range(-k..=k)).collect();
    Freq::new(&c)
}

pub fn random_key<R: Rng>(r: &mut R, lattice: LatticeBox, order: usize) -> Key {
    Key::from_vec((0..2 * order).map(|_| random_freq(r, lattice)).collect())
}

/// Full-support random matrix.
pub fn random_ensemble(order: usize, lattice: LatticeBox, seed: u64, profile: Profile) -> DensityMatrix {
    random_ensemble_with(order, lattice, seed, profile, Support::Full)
}

pub fn random_ensemble_with(
    order: usize,
    lattice: LatticeBox,
    seed: u64,
    profile: Profile,
    support: Support,
) -> DensityMatrix {
    let mut r = rng(seed);
    let mut m = DensityMatrix::zero(order, lattice);
    match support {
        Support::Full => {
            for key in lattice.keys(order) {
                let v = complex_gaussian(&mut r) * profile.weight(&key);
                m.accumulate(key, v);
            }
        }
        Support::Sparse(n) => {
            for _ in 0..n {
                let key = random_key(&mut r, lattice, order);
                let v = complex_gaussian(&mut r) * profile.weight(&key);
                m.accumulate(key, v);
            }
        }
    }
    m
}

/// Adversarial order-(k+1) matrix whose collision at (j, k+1) adds coherently.
///
/// A random base key is fixed; slot j on the unprimed side and slot k+1 on
/// the primed side both run over the whole box with the same frequency η, so
/// every plus summand lands on one output key with sign product +1. Magnitudes
/// are ⟨η⟩^{-β} times a random factor in [0.5, 1.5) with one shared phase.
pub fn diagonal_pairing_ensemble(
    order: usize,
    j: usize,
    lattice: LatticeBox,
    seed: u64,
    beta: f64,
) -> DensityMatrix {
    assert!(order >= 2 && j >= 1 && j < order, "need 1 ≤ j < order");
    let mut r = rng(seed);
    let base = random_key(&mut r, lattice, order).into_vec();
    let phase = C64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU));
    let mut m = DensityMatrix::zero(order, lattice);
    for eta in lattice.freqs() {
        let mut v = base.clone();
        v[j - 1] = eta;
        v[2 * order - 1] = eta;
        let mag = eta.bracket_sq().powf(-0.5 * beta) * r.random_range(0.5..1.5);
        m.accumulate(Key::from_vec(v), phase * mag);
    }
    m
}

/// Random single-particle function on the whole box.
pub fn random_mode_function(lattice: LatticeBox, seed: u64, profile: Profile, scale: f64) -> ModeFunction {
    let mut r = rng(seed);
    let mut m = ModeFunction::zero(lattice);
    for f in lattice.freqs() {
        let w = match profile {
            Profile::Flat => 1.0,
            Profile::Decaying(beta) => f.bracket_sq().powf(-0.5 * beta),
        };
        let v = complex_gaussian(&mut r) * (w * scale);
        m.insert(f, v).expect("frequency from box");
    }
    m
}
