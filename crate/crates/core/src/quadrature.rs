//! Quadrature rules: fixed Gauss–Legendre panels for matrix assembly and an
//! adaptive Gauss–Kronrod integrator used as an independent reference.

use num_complex::Complex64 as C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre rule: `order` nodes on each interval between
/// consecutive `breaks`.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(breaks: &[f64], order: usize) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    /// `panels` equal panels on `[a, b]`, with extra breakpoints inserted at
    /// each of `cuts` that falls strictly inside.
    pub fn uniform_with_cuts(a: f64, b: f64, panels: usize, cuts: &[f64], order: usize) -> Self {
        let mut breaks: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        breaks.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
        breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
        breaks.dedup_by(|p, q| (*p - *q).abs() < 1e-14 * (b - a));
        Self::new(&breaks, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

// Tabulated Gauss–Kronrod 7/15 nodes and weights, as published.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod_15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kron * half, ((kron - gauss) * half).norm())
}

/// Adaptive Gauss–Kronrod (7/15) integration of a complex integrand on a
/// finite interval, bisecting until `|err| <= max(abs_tol, rel_tol |I|)`.
pub fn adaptive_complex<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> C64 {
    // Start from a few panels so narrow features between the first nodes are seen.
    const START: usize = 16;
    let mut stack = Vec::with_capacity(64);
    let mut whole = C64::new(0.0, 0.0);
    for i in 0..START {
        let lo = a + (b - a) * i as f64 / START as f64;
        let hi = a + (b - a) * (i + 1) as f64 / START as f64;
        let (v, e) = kronrod_15(&mut f, lo, hi);
        whole += v;
        stack.push((lo, hi, v, e));
    }
    let mut total = C64::new(0.0, 0.0);
    let mut evaluations = 0usize;
    while let Some((lo, hi, val, err)) = stack.pop() {
        let scale = (total + val).norm().max(whole.norm());
        let budget = abs_tol.max(rel_tol * scale) * (hi - lo) / (b - a);
        if err <= budget || hi - lo < 1e-12 * (b - a).abs() || evaluations > 200_000 {
            total += val;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (left, el) = kronrod_15(&mut f, lo, mid);
        let (right, er) = kronrod_15(&mut f, mid, hi);
        evaluations += 30;
        stack.push((lo, mid, left, el));
        stack.push((mid, hi, right, er));
    }
    total
}

/// Real-valued convenience wrapper around [`adaptive_complex`].
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    adaptive_complex(|x| C64::new(f(x), 0.0), a, b, abs_tol, rel_tol).re
}
