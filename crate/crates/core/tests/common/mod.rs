//! Independent oracles shared by the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64 as C64;
use rand::Rng;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Dense row-major complex matrix with entries uniform in the unit square.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, symmetric: bool) -> Vec<Vec<C64>> {
    let mut a = vec![vec![zero(); n]; n];
    for r in 0..n {
        for c in 0..n {
            if symmetric && c < r {
                a[r][c] = a[c][r];
            } else {
                a[r][c] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    a
}

pub fn to_faer(a: &[Vec<C64>]) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.len(), a.len(), |r, c| a[r][c])
}

/// LU factorisation with partial pivoting, in place. Returns the row sign,
/// or `None` for an exactly singular matrix.
fn lu(a: &mut [Vec<C64>], perm: &mut [usize]) -> Option<f64> {
    let n = a.len();
    let mut sign = 1.0;
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))?;
        if a[piv][k].norm() == 0.0 {
            return None;
        }
        if piv != k {
            a.swap(piv, k);
            perm.swap(piv, k);
            sign = -sign;
        }
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            a[i][k] = l;
            for j in k + 1..n {
                let u = a[k][j];
                a[i][j] -= l * u;
            }
        }
    }
    Some(sign)
}

/// `det(z I - A)`.
pub fn char_poly_at(a: &[Vec<C64>], z: C64) -> C64 {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| if r == c { z - a[r][c] } else { -a[r][c] })
                .collect()
        })
        .collect();
    let mut perm = vec![0; n];
    match lu(&mut m, &mut perm) {
        Some(sign) => (0..n).fold(C64::new(sign, 0.0), |acc, i| acc * m[i][i]),
        None => zero(),
    }
}

/// `tr (z I - A)^{-1} = p'(z) / p(z)`, by solving against each unit vector.
pub fn resolvent_trace(a: &[Vec<C64>], z: C64) -> C64 {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| if r == c { z - a[r][c] } else { -a[r][c] })
                .collect()
        })
        .collect();
    let mut perm = vec![0; n];
    if lu(&mut m, &mut perm).is_none() {
        return C64::new(f64::INFINITY, 0.0);
    }
    let mut tr = zero();
    for col in 0..n {
        // Solve L U x = P e_col.
        let mut x: Vec<C64> = perm
            .iter()
            .map(|&p| if p == col { C64::new(1.0, 0.0) } else { zero() })
            .collect();
        for i in 0..n {
            for j in 0..i {
                let l = m[i][j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = m[i][j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= m[i][i];
        }
        tr += x[col];
    }
    tr
}

/// Coefficients `c_0..c_n` of `det(z I - A)` from samples on the circle of
/// radius `radius`, by an inverse discrete Fourier transform.
pub fn char_poly_coefficients(a: &[Vec<C64>], radius: f64) -> Vec<C64> {
    let n = a.len();
    let m = n + 1;
    let samples: Vec<C64> = (0..m)
        .map(|k| {
            let w = C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            char_poly_at(a, w)
        })
        .collect();
    (0..m)
        .map(|j| {
            let s: C64 = samples
                .iter()
                .enumerate()
                .map(|(k, &p)| {
                    p * C64::from_polar(
                        1.0,
                        -2.0 * std::f64::consts::PI * (j * k) as f64 / m as f64,
                    )
                })
                .sum();
            s / (m as f64 * radius.powi(j as i32))
        })
        .collect()
}

fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(zero(), |acc, &k| acc * z + k)
}

/// Roots of `sum c_k z^k` by Durand–Kerner iteration.
pub fn durand_kerner(c: &[C64], radius: f64) -> Vec<C64> {
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|&k| k / lead).collect();
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(C64::new(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
            let step = horner(&monic, z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    z
}

/// Eigenvalues of `a` from its characteristic polynomial only: sampled
/// determinants, Durand–Kerner roots, then Newton steps `z -= p / p'`.
pub fn char_poly_eigenvalues(a: &[Vec<C64>]) -> Vec<C64> {
    let n = a.len();
    let frob = a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let radius = (frob / (n as f64).sqrt()).max(0.5);
    let c = char_poly_coefficients(a, radius);
    let mut roots = durand_kerner(&c, radius);
    for z in roots.iter_mut() {
        for _ in 0..8 {
            let t = resolvent_trace(a, *z);
            if !t.is_finite() || t.norm() == 0.0 {
                break;
            }
            *z -= 1.0 / t;
        }
    }
    roots
}

/// Largest distance between `a` and `b` under greedy nearest matching.
pub fn match_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Orthonormal Hermite functions `h_0..h_{n-1}` at `t`, by the three-term
/// recurrence.
pub fn hermite(n: usize, t: f64) -> Vec<f64> {
    let mut h = vec![0.0; n.max(2)];
    h[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    h[1] = std::f64::consts::SQRT_2 * t * h[0];
    for k in 1..n.saturating_sub(1) {
        h[k + 1] = (2.0 / (k as f64 + 1.0)).sqrt() * t * h[k]
            - (k as f64 / (k as f64 + 1.0)).sqrt() * h[k - 1];
    }
    h.truncate(n);
    h
}

/// `i^k`.
pub fn i_pow(k: i64) -> C64 {
    [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ][k.rem_euclid(4) as usize]
}
