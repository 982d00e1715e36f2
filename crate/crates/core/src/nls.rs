//! Truncated cubic NLS i∂φ + Δφ = |φ|²φ on the box, and residual checks
//! against the hierarchy it generates through factorized matrices.

use rayon::prelude::*;

use crate::duhamel::GammaSequence;
use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, Freq, LatticeBox, ModeFunction, C64};
use crate::operators::laplacian_difference;
use crate::randomization::{randomize_function, Randomization, SignField};
use crate::report::ExperimentReport;

fn flat(c: &[i32], cut: i32) -> usize {
    let w = (2 * cut + 1) as usize;
    c.iter().fold(0, |acc, &x| acc * w + (x + cut) as usize)
}

/// Dense indexing of the box, with |ξ|² per slot.
struct Grid {
    lattice: LatticeBox,
    freqs: Vec<Freq>,
    index: Vec<usize>,
    omega: Vec<f64>,
}

impl Grid {
    fn new(lattice: LatticeBox) -> Grid {
        let cut = lattice.cutoff() as i32;
        let freqs = lattice.freqs();
        let index = freqs.iter().map(|f| flat(f.coords(), cut)).collect();
        let omega = freqs.iter().map(|f| f.norm_sq() as f64).collect();
        Grid { lattice, freqs, index, omega }
    }

    fn size(&self) -> usize {
        self.freqs.len()
    }

    fn dense(&self, phi: &ModeFunction) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.size()];
        for (f, &c) in phi.iter() {
            v[flat(f.coords(), self.lattice.cutoff() as i32)] = c;
        }
        v
    }

    fn sparse(&self, v: &[C64]) -> ModeFunction {
        let mut m = ModeFunction::zero(self.lattice);
        for (f, &i) in self.freqs.iter().zip(&self.index) {
            m.insert(*f, v[i]).expect("grid frequency");
        }
        m
    }

    /// Σ_{a−b+c=ξ} v_a conj(v_b) v_c restricted to the box.
    fn cubic(&self, v: &[C64]) -> Vec<C64> {
        let cut = self.lattice.cutoff() as i32;
        let d = self.lattice.dim();
        let wide = (4 * cut + 1) as usize;
        let mut rho = vec![C64::new(0.0, 0.0); wide.pow(d as u32)];
        let live: Vec<(usize, &Freq, C64)> = self
            .freqs
            .iter()
            .zip(&self.index)
            .filter(|(_, &i)| v[i] != C64::new(0.0, 0.0))
            .map(|(f, &i)| (i, f, v[i]))
            .collect();
        for &(_, a, va) in &live {
            for &(_, b, vb) in &live {
                let m = *a - *b;
                rho[flat(m.coords(), 2 * cut)] += va * vb.conj();
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); self.size()];
        for (xi, &ix) in self.freqs.iter().zip(&self.index) {
            let mut acc = C64::new(0.0, 0.0);
            for &(_, c, vc) in &live {
                let m = *xi - *c;
                acc += rho[flat(m.coords(), 2 * cut)] * vc;
            }
            out[ix] = acc;
        }
        out
    }

    fn phase(&self, v: &[C64], tau: f64) -> Vec<C64> {
        let mut out = v.to_vec();
        for (&i, &w) in self.index.iter().zip(&self.omega) {
            out[i] *= C64::from_polar(1.0, -w * tau);
        }
        out
    }

    /// φ' = −iωφ − i·cubic(φ); Lawson RK4 in the interaction picture.
    fn step(&self, v: &[C64], h: f64, nonlinear: bool) -> Vec<C64> {
        if !nonlinear {
            return self.phase(v, h);
        }
        let mi = C64::new(0.0, -1.0);
        let f = |x: &[C64]| -> Vec<C64> { self.cubic(x).into_iter().map(|c| c * mi).collect() };
        let lin = |a: &[C64], b: &[C64], s: f64| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
        let k1 = f(v);
        let k2 = f(&self.phase(&lin(v, &k1, h / 2.0), h / 2.0));
        let half = self.phase(v, h / 2.0);
        let k3 = f(&lin(&half, &k2, h / 2.0));
        let k4 = f(&lin(&self.phase(v, h), &self.phase(&k3, h / 2.0), h));
        let full = self.phase(v, h);
        let e1 = self.phase(&k1, h);
        let e23 = self.phase(&lin(&k2, &k3, 1.0), h / 2.0);
        (0..v.len())
            .map(|i| full[i] + (e1[i] + e23[i] * 2.0 + k4[i]) * (h / 6.0))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NlsState {
    pub phi: ModeFunction,
    pub t: f64,
}

/// |φ|²φ truncated to the box of φ.
pub fn cubic_term(phi: &ModeFunction) -> ModeFunction {
    let g = Grid::new(phi.lattice());
    g.sparse(&g.cubic(&g.dense(phi)))
}

fn steps_for(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || t_end < 0.0 {
        return Err(Error::Usage(format!("need dt > 0 and t_end ≥ 0, got dt={dt}, t_end={t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

/// States at t = 0, dt, …, N·dt with N = round(t_end/dt).
pub fn nls_trajectory(phi0: &ModeFunction, t_end: f64, dt: f64, nonlinear: bool) -> Result<Vec<NlsState>> {
    let n = steps_for(t_end, dt)?;
    let g = Grid::new(phi0.lattice());
    let mut v = g.dense(phi0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(NlsState { phi: phi0.clone(), t: 0.0 });
    for i in 1..=n {
        v = g.step(&v, dt, nonlinear);
        out.push(NlsState { phi: g.sparse(&v), t: i as f64 * dt });
    }
    Ok(out)
}

pub fn nls_evolve(phi0: &ModeFunction, t_end: f64, dt: f64) -> Result<NlsState> {
    let n = steps_for(t_end, dt)?;
    let g = Grid::new(phi0.lattice());
    let mut v = g.dense(phi0);
    for _ in 0..n {
        v = g.step(&v, dt, true);
    }
    Ok(NlsState { phi: g.sparse(&v), t: n as f64 * dt })
}

/// Interior grid indices where residuals are sampled: every `stride`-th with
/// at most 16 samples, so refinements that halve dt hit the same times.
fn sample_indices(len: usize) -> Vec<usize> {
    if len < 3 {
        return Vec::new();
    }
    let stride = ((len - 1) / 16).max(1);
    (1..len - 1).filter(|i| i % stride == 0).collect()
}

/// max_t ‖i∂γ^(k) + (Δ−Δ')γ^(k) − [B^(k+1)]γ^(k+1)‖ with γ^(m) = factorized(φ(t), m)
/// and a central difference in t.
pub fn hierarchy_residual_with(states: &[NlsState], k: usize, dt: f64, r: &Randomization) -> Result<f64> {
    let idx = sample_indices(states.len());
    let vals: Result<Vec<f64>> = idx
        .par_iter()
        .map(|&i| {
            let prev = DensityMatrix::factorized(&states[i - 1].phi, k);
            let next = DensityMatrix::factorized(&states[i + 1].phi, k);
            let here = DensityMatrix::factorized(&states[i].phi, k);
            let up = DensityMatrix::factorized(&states[i].phi, k + 1);
            let d = next.sub(&prev)?.scale(C64::new(0.0, 1.0 / (2.0 * dt)));
            let lhs = d.add(&laplacian_difference(&here))?;
            Ok(lhs.sub(&r.full_collision(&up)?)?.weighted_norm(0.0))
        })
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

pub fn hierarchy_residual(states: &[NlsState], k: usize, dt: f64) -> Result<f64> {
    hierarchy_residual_with(states, k, dt, &Randomization::Deterministic)
}

/// Residual of i∂ψ + Δψ = T^ω(|T^ωψ|² T^ωψ) along a trajectory of ψ.
pub fn randomized_nls_equation_residual(psi: &[NlsState], field: &SignField, dt: f64) -> f64 {
    let idx = sample_indices(psi.len());
    idx.par_iter()
        .map(|&i| {
            let here = &psi[i].phi;
            let d = psi[i + 1].phi.scale(C64::new(0.0, 1.0 / (2.0 * dt)));
            let d0 = psi[i - 1].phi.scale(C64::new(0.0, -1.0 / (2.0 * dt)));
            let rhs = randomize_function(&cubic_term(&randomize_function(here, field)), field);
            let lat = here.lattice();
            let mut res = ModeFunction::zero(lat);
            for f in lat.freqs() {
                let v = d.get(&f) + d0.get(&f) - here.get(&f) * f.norm_sq() as f64 - rhs.get(&f);
                res.insert(f, v).expect("box frequency");
            }
            res.weighted_norm(0.0)
        })
        .reduce(|| 0.0, f64::max)
}

/// (NLS-type residual of ψ = T^ωφ, randomized-hierarchy residual of factorized(ψ) at k = 1).
pub fn randomized_nls_residual(phi0: &ModeFunction, field: &SignField, t_end: f64, dt: f64) -> Result<(f64, f64)> {
    let traj = nls_trajectory(phi0, t_end, dt, true)?;
    let psi: Vec<NlsState> = traj
        .iter()
        .map(|s| NlsState { phi: randomize_function(&s.phi, field), t: s.t })
        .collect();
    let a = randomized_nls_equation_residual(&psi, field, dt);
    let b = hierarchy_residual_with(&psi, 1, dt, &Randomization::Shared(field.clone()))?;
    Ok((a, b))
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Phase velocity at mode n of the single-mode solution, from summed
/// step-to-step phase increments.
pub fn single_mode_phase_rate(lattice: LatticeBox, n: Freq, c: C64, t_end: f64, dt: f64) -> Result<f64> {
    let phi0 = ModeFunction::from_pairs(lattice, [(n, c)])?;
    let steps = steps_for(t_end, dt)?;
    let g = Grid::new(lattice);
    let mut v = g.dense(&phi0);
    let i = flat(n.coords(), lattice.cutoff() as i32);
    let mut angle = 0.0;
    for _ in 0..steps {
        let w = g.step(&v, dt, true);
        angle += (w[i] / v[i]).arg();
        v = w;
    }
    Ok(-angle / (steps as f64 * dt))
}

/// Residual table (dt, residual) for k = 1, 2 and the randomized pair.
pub fn residual_study(phi0: &ModeFunction, field: &SignField, t_end: f64, dts: &[f64]) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("nls-residual", &["dt", "hier_k1", "hier_k2", "rand_nls", "rand_hier_k1"]);
    let rows: Result<Vec<[f64; 5]>> = dts
        .par_iter()
        .map(|&dt| {
            let traj = nls_trajectory(phi0, t_end, dt, true)?;
            let h1 = hierarchy_residual(&traj, 1, dt)?;
            let h2 = hierarchy_residual(&traj, 2, dt)?;
            let (a, b) = randomized_nls_residual(phi0, field, t_end, dt)?;
            Ok([dt, h1, h2, a, b])
        })
        .collect();
    let rows = rows?;
    for r in &rows {
        rep.push(r.iter().map(|&x| x.into()).collect());
    }
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    for (i, name) in [(1, "hier_k1"), (2, "hier_k2"), (3, "rand_nls"), (4, "rand_hier_k1")] {
        rep.set(&format!("slope_{name}"), loglog_slope(&col(0), &col(i)));
    }
    rep.meta("t_end", t_end);
    rep.meta("K", phi0.lattice().cutoff());
    rep.meta("d", phi0.lattice().dim());
    Ok(rep)
}

/// γ^(m)(t) = |φ(t)⟩⟨φ(t)|^{⊗m} along the NLS flow, stepping with at most `dt`.
pub struct FactorizedNls {
    pub phi0: ModeFunction,
    pub dt: f64,
}

impl GammaSequence for FactorizedNls {
    fn gamma(&self, order: usize, t: f64) -> Result<DensityMatrix> {
        let steps = (t / self.dt).ceil().max(1.0);
        let s = nls_evolve(&self.phi0, t, t / steps)?;
        Ok(DensityMatrix::factorized(&s.phi, order))
    }
}
