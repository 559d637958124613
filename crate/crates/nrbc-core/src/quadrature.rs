//! Gauss-Legendre, Legendre-Gauss-Lobatto and adaptive Gauss-Kronrod rules.

use crate::error::{Error, Result};

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^{n+1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// A quadrature rule: nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// The rule mapped affinely from [-1, 1] to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        Rule {
            nodes: self.nodes.iter().map(|&x| m + h * x).collect(),
            weights: self.weights.iter().map(|&w| h * w).collect(),
        }
    }
}

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Legendre-Gauss-Lobatto rule with `n + 1` points (degree `n`), ascending.
pub fn gauss_lobatto(n: usize) -> Rule {
    assert!(n >= 1, "Lobatto rule needs degree >= 1");
    let nf = n as f64;
    let mut nodes = vec![0.0; n + 1];
    for (j, x) in nodes.iter_mut().enumerate() {
        *x = -(std::f64::consts::PI * j as f64 / nf).cos();
    }
    for x in nodes.iter_mut().take(n).skip(1) {
        for _ in 0..100 {
            // roots of (1 - x^2) P_n'(x): Newton on P_n'
            let (p, dp) = legendre(n, *x);
            let d2p = (2.0 * *x * dp - nf * (nf + 1.0) * p) / (1.0 - *x * *x);
            let dx = dp / d2p;
            *x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Rule { nodes, weights }
}

/// Composite Gauss-Legendre rule over consecutive panels given by `breaks`.
pub fn composite(breaks: &[f64], per_panel: usize) -> Rule {
    let base = gauss_legendre(per_panel);
    let mut nodes = Vec::with_capacity(per_panel * breaks.len());
    let mut weights = Vec::with_capacity(per_panel * breaks.len());
    for w in breaks.windows(2) {
        let r = base.mapped(w[0], w[1]);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    Rule { nodes, weights }
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let fc = f(m);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let s = f(m - h * GK_X[i]) + f(m + h * GK_X[i]);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over [a, b].
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, 0usize)];
    let (total, _) = gk15(&f, a, b);
    let mut sum = 0.0;
    let mut evals = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(&f, lo, hi);
        evals += 1;
        let tol = (abs_tol.max(rel_tol * total.abs()) * (hi - lo) / (b - a)).max(1e-300);
        if err <= tol || depth >= 50 {
            if depth >= 50 && err > tol {
                return Err(Error::accuracy("quadrature::adaptive", "maximum subdivision depth reached"));
            }
            sum += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
        if evals > 2_000_000 {
            return Err(Error::accuracy("quadrature::adaptive", "evaluation budget exhausted"));
        }
    }
    Ok(sum)
}
