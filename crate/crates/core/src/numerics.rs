//! Small numeric helpers: compensated summation and Gauss-Legendre rules.

use std::f64::consts::PI;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], found by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let m = q.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for n in 2..=q {
        let nf = n as f64;
        let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(q: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(q);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Splitmix64 finalizer, used to derive child seeds and hashed signs.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `master`.
pub fn split_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn gauss_legendre_exact_for_degree_2q_minus_1() {
        for q in 1..=10 {
            let rule = gauss_legendre_on(q, 0.0, 1.0);
            for deg in 0..(2 * q) {
                let v: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((v - exact).abs() < 1e-13, "q={q} deg={deg} {v} {exact}");
            }
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let rule = gauss_legendre_on(7, -2.0, 3.0);
        let s: f64 = rule.iter().map(|r| r.1).sum();
        assert!((s - 5.0).abs() < 1e-13);
    }

    #[test]
    fn split_seeds_differ() {
        let a = split_seed(7, 0);
        let b = split_seed(7, 1);
        let c = split_seed(8, 0);
        assert!(a != b && a != c && b != c);
    }
}
