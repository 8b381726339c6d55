//! Truncated tensor Hermite basis and dense assembly of `H_L`, `H(F, ib)` and
//! `H_2(F, ib)`.
//!
//! Basis functions are `phi_m(x) * i^n psi_n(y)`, with `phi`, `psi` the
//! normalised Hermite functions of lengths `lx`, `ly`. The `i^n` phase makes
//! the antiunitary symmetry (complex conjugation composed with `y -> -y`) act
//! as plain conjugation, so every translated Hamiltonian assembles to a complex
//! symmetric matrix and the untranslated ones to real symmetric matrices.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    chi_a, local_field_x, DerivedGeometry, FieldParams, PotentialModel, ScheduleParams,
};
use crate::quadrature::PanelRule;

/// Gauss–Legendre nodes per quadrature panel.
pub const PANEL_ORDER: usize = 16;

/// Extra half-span, in basis lengths, beyond the outermost turning point.
const SPAN_MARGIN: f64 = 10.0;

const QUADRATURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSpec {
    pub nx: usize,
    pub ny: usize,
    /// Oscillator lengths; `None` selects the magnetic length `1/sqrt(B)`.
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    /// Gauss–Legendre panel counts for the `x` and `y` quadratures.
    pub qx: usize,
    pub qy: usize,
    /// Largest admissible `nx * ny`.
    pub cap: usize,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self::square(30)
    }
}

impl BasisSpec {
    pub fn square(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            lx: None,
            ly: None,
            qx: 2 * n,
            qy: 2 * n,
            cap: 2500,
        }
    }

    pub fn with_lengths(mut self, lx: f64, ly: f64) -> Self {
        self.lx = Some(lx);
        self.ly = Some(ly);
        self
    }

    /// Same basis with both truncation sizes raised by `extra`.
    pub fn bumped(&self, extra: usize) -> Self {
        Self {
            nx: self.nx + extra,
            ny: self.ny + extra,
            qx: self.qx.max(2 * (self.nx + extra)),
            qy: self.qy.max(2 * (self.ny + extra)),
            ..*self
        }
    }

    pub fn dim(&self) -> usize {
        self.nx * self.ny
    }

    pub fn lengths(&self, magnetic: f64) -> (f64, f64) {
        let l = 1.0 / magnetic.sqrt();
        (self.lx.unwrap_or(l), self.ly.unwrap_or(l))
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.nx < 2 || self.ny < 2 {
            errs.push(format!(
                "basis sizes Nx = {}, Ny = {} must be >= 2",
                self.nx, self.ny
            ));
        }
        if self.dim() > self.cap {
            errs.push(format!(
                "basis dimension Nx*Ny = {} exceeds the dense cap {}",
                self.dim(),
                self.cap
            ));
        }
        if self.qx < 2 * self.nx {
            errs.push(format!(
                "Qx = {} must be >= 2 Nx = {}",
                self.qx,
                2 * self.nx
            ));
        }
        if self.qy < 2 * self.ny {
            errs.push(format!(
                "Qy = {} must be >= 2 Ny = {}",
                self.qy,
                2 * self.ny
            ));
        }
        for (name, l) in [("lx", self.lx), ("ly", self.ly)] {
            if let Some(l) = l {
                if !(l > 0.0 && l.is_finite()) {
                    errs.push(format!("basis.{name} = {l} must be positive"));
                }
            }
        }
        errs
    }

    fn check(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSize(errs.join("; ")))
        }
    }
}

/// Normalised Hermite functions `h_0(t) .. h_{n-1}(t)` (unit length scale).
pub fn hermite_functions(n: usize, t: f64) -> Vec<f64> {
    let mut h = vec![0.0; n];
    if n == 0 {
        return h;
    }
    h[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    if n > 1 {
        h[1] = std::f64::consts::SQRT_2 * t * h[0];
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        h[k + 1] = (2.0 / (kf + 1.0)).sqrt() * t * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
    }
    h
}

/// One-dimensional oscillator matrices in the standard real Hermite basis.
///
/// `p = -i d/dx` is purely imaginary and is stored through its imaginary part:
/// `P = i * p_imag` with `p_imag` real antisymmetric. `x2` and `p2` are the
/// exact projections of `x^2` and `p^2`, not products of truncated factors.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub x: Mat<f64>,
    pub p_imag: Mat<f64>,
    pub x2: Mat<f64>,
    pub p2: Mat<f64>,
}

pub fn ladder_matrices(n: usize, l: f64) -> Result<Ladder> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("ladder size {n} < 2")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "oscillator length {l} must be positive"
        )));
    }
    let mut x = Mat::<f64>::zeros(n, n);
    let mut p = Mat::<f64>::zeros(n, n);
    let mut x2 = Mat::<f64>::zeros(n, n);
    let mut p2 = Mat::<f64>::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..n {
        let kf = k as f64;
        x2[(k, k)] = l * l * (kf + 0.5);
        p2[(k, k)] = (kf + 0.5) / (l * l);
        if k + 1 < n {
            let up = (kf + 1.0).sqrt();
            x[(k + 1, k)] = l * s * up;
            x[(k, k + 1)] = l * s * up;
            p[(k + 1, k)] = s * up / l;
            p[(k, k + 1)] = -s * up / l;
        }
        if k + 2 < n {
            let two = ((kf + 1.0) * (kf + 2.0)).sqrt() / 2.0;
            x2[(k + 2, k)] = l * l * two;
            x2[(k, k + 2)] = l * l * two;
            p2[(k + 2, k)] = -two / (l * l);
            p2[(k, k + 2)] = -two / (l * l);
        }
    }
    Ok(Ladder {
        x,
        p_imag: p,
        x2,
        p2,
    })
}

/// `i^k` for any integer `k`.
fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Re-expresses a `y` matrix in the phased basis `i^n psi_n`.
fn phase_y(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| {
        i_pow(c as i64 - r as i64) * m[(r, c)]
    })
}

fn to_complex(m: &Mat<f64>, scale: C64) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| scale * m[(r, c)])
}

/// Kronecker product `a (x) b` with `x` as the slow index.
pub fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    let mut out = Mat::<C64>::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// What an assembled matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Landau,
    Translated,
    Reference,
    PotentialBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub kind: OperatorKind,
    pub fields: FieldParams,
    pub potential_hash: u64,
    pub basis: BasisSpec,
    /// Largest entry change observed when the quadrature panels were doubled.
    pub quadrature_delta: f64,
}

/// Dense Hamiltonian in the truncated basis.
#[derive(Debug, Clone)]
pub struct ComplexOperator {
    pub matrix: Mat<C64>,
    pub meta: OperatorMeta,
}

impl ComplexOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// `max |M - M^T|`.
    pub fn transpose_defect(&self) -> f64 {
        let m = &self.matrix;
        let n = m.nrows();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r + 1..n {
                worst = worst.max((m[(r, c)] - m[(c, r)]).norm());
            }
        }
        worst
    }

    /// `max |M - M^dagger|`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = &self.matrix;
        let n = m.nrows();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Writes the binary debug dump: `dim` and `flags` as little-endian `u64`,
    /// then row-major entries as interleaved little-endian `f64` re/im pairs.
    /// Flag bit 0 marks a complex symmetric matrix, bit 1 a Hermitian one.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let tol = 1e-12 * self.max_abs().max(f64::MIN_POSITIVE);
        let mut flags = 0u64;
        if self.transpose_defect() <= tol {
            flags |= 1;
        }
        if self.hermitian_defect() <= tol {
            flags |= 2;
        }
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        w.write_all(&flags.to_le_bytes())?;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let z = self.matrix[(r, c)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Reads a dump written by [`ComplexOperator::write_dump`]; returns the matrix
/// and the flag word.
pub fn read_dump<R: Read>(mut r: R) -> Result<(Mat<C64>, u64)> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let dim = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let flags = u64::from_le_bytes(word);
    let mut m = Mat::<C64>::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            m[(row, col)] = C64::new(re, im);
        }
    }
    Ok((m, flags))
}

pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            worst = worst.max(m[(r, c)].norm());
        }
    }
    worst
}

pub fn potential_hash(model: &PotentialModel) -> u64 {
    let mut h = DefaultHasher::new();
    serde_json::to_string(model)
        .unwrap_or_default()
        .hash(&mut h);
    h.finish()
}

/// A potential of the form `U(x + ib, y) = u(x + ib) g(y)`.
pub trait SeparableProfile {
    fn factor_x(&self, x: f64, b: f64) -> Result<C64>;
    fn factor_y(&self, y: f64) -> f64;
    /// Points where the `x` factor changes rapidly; used as panel breaks.
    fn x_cuts(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Interval outside which `g` vanishes, if compact.
    fn y_support(&self) -> Option<(f64, f64)> {
        None
    }
    /// Jumps of `g`; integrated exactly by splitting panels.
    fn y_cuts(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl SeparableProfile for PotentialModel {
    fn factor_x(&self, x: f64, b: f64) -> Result<C64> {
        if b >= self.strip() {
            return Err(Error::Domain(format!(
                "translation b = {b} outside the analyticity strip beta = {}",
                self.strip()
            )));
        }
        Ok(PotentialModel::factor_x(self, x, b))
    }

    fn factor_y(&self, y: f64) -> f64 {
        self.profile_y(y)
    }

    fn y_support(&self) -> Option<(f64, f64)> {
        self.support_y()
    }
}

/// The local field `W_F = -F x h_F(x) chi_A(y)`.
#[derive(Debug, Clone, Copy)]
pub struct LocalField {
    pub electric: f64,
    pub geom: DerivedGeometry,
}

impl SeparableProfile for LocalField {
    fn factor_x(&self, x: f64, b: f64) -> Result<C64> {
        local_field_x(x, b, self.electric, &self.geom)
    }

    fn factor_y(&self, y: f64) -> f64 {
        chi_a(y, &self.geom)
    }

    fn x_cuts(&self) -> Vec<f64> {
        vec![-self.geom.xbar, self.geom.xbar]
    }

    fn y_cuts(&self) -> Vec<f64> {
        vec![-self.geom.ybar, self.geom.ybar]
    }
}

/// Ad-hoc separable profile from two closures.
pub struct Separable<FX, FY> {
    pub fx: FX,
    pub fy: FY,
}

impl<FX, FY> SeparableProfile for Separable<FX, FY>
where
    FX: Fn(f64, f64) -> C64,
    FY: Fn(f64) -> f64,
{
    fn factor_x(&self, x: f64, b: f64) -> Result<C64> {
        Ok((self.fx)(x, b))
    }

    fn factor_y(&self, y: f64) -> f64 {
        (self.fy)(y)
    }
}

/// Half-width of the interval on which `n` Hermite functions of length `l`
/// are numerically supported.
fn half_span(n: usize, l: f64) -> f64 {
    l * ((2.0 * n as f64 + 1.0).sqrt() + SPAN_MARGIN)
}

/// `M[m][m'] = sum_q w_q phi_m(t_q) phi_m'(t_q) f_q`, symmetrised.
fn project_1d(n: usize, l: f64, rule: &PanelRule, values: &[C64]) -> Mat<C64> {
    let mut m = Mat::<C64>::zeros(n, n);
    let norm = 1.0 / l;
    for ((&t, &w), &f) in rule.nodes.iter().zip(&rule.weights).zip(values) {
        if f == C64::new(0.0, 0.0) {
            continue;
        }
        let h = hermite_functions(n, t / l);
        let wf = f * (w * norm);
        for r in 0..n {
            if h[r] == 0.0 {
                continue;
            }
            let a = wf * h[r];
            for c in r..n {
                m[(r, c)] += a * h[c];
            }
        }
    }
    for r in 0..n {
        for c in 0..r {
            m[(r, c)] = m[(c, r)];
        }
    }
    m
}

fn x_block<P: SeparableProfile + ?Sized>(
    profile: &P,
    b: f64,
    n: usize,
    l: f64,
    panels: usize,
) -> Result<Mat<C64>> {
    let s = half_span(n, l);
    let rule = PanelRule::uniform_with_cuts(-s, s, panels, &profile.x_cuts(), PANEL_ORDER);
    let values = rule
        .nodes
        .iter()
        .map(|&x| profile.factor_x(x, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(project_1d(n, l, &rule, &values))
}

fn y_block<P: SeparableProfile + ?Sized>(profile: &P, n: usize, l: f64, panels: usize) -> Mat<C64> {
    let s = half_span(n, l);
    let (lo, hi) = match profile.y_support() {
        Some((a, b)) => (a.max(-s), b.min(s)),
        None => (-s, s),
    };
    if hi <= lo {
        return Mat::zeros(n, n);
    }
    let rule = PanelRule::uniform_with_cuts(lo, hi, panels, &profile.y_cuts(), PANEL_ORDER);
    let values: Vec<C64> = rule
        .nodes
        .iter()
        .map(|&y| C64::new(profile.factor_y(y), 0.0))
        .collect();
    phase_y(&project_1d(n, l, &rule, &values))
}

fn max_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
        }
    }
    worst
}

/// One-dimensional factors of a separable potential block, plus the largest
/// change seen when both panel counts are doubled.
pub struct BlockFactors {
    pub x: Mat<C64>,
    pub y: Mat<C64>,
    pub quadrature_delta: f64,
}

pub fn block_factors<P: SeparableProfile + ?Sized>(
    profile: &P,
    b: f64,
    basis: &BasisSpec,
    magnetic: f64,
) -> Result<BlockFactors> {
    basis.check()?;
    let (lx, ly) = basis.lengths(magnetic);
    let x = x_block(profile, b, basis.nx, lx, basis.qx)?;
    let y = y_block(profile, basis.ny, ly, basis.qy);
    let x2 = x_block(profile, b, basis.nx, lx, 2 * basis.qx)?;
    let y2 = y_block(profile, basis.ny, ly, 2 * basis.qy);
    let dx = max_diff(&x, &x2);
    let dy = max_diff(&y, &y2);
    let scale_x = max_abs(&x).max(1.0);
    let scale_y = max_abs(&y).max(1.0);
    let delta = dx * scale_y + dy * scale_x;
    if delta > QUADRATURE_TOL {
        log::warn!(
            "quadrature not converged: doubling panels moved potential entries by {delta:.3e}"
        );
    }
    Ok(BlockFactors {
        x,
        y,
        quadrature_delta: delta,
    })
}

/// Matrix of `U(x + ib, y)` for a separable profile:
/// `M[(m,n),(m',n')] = int int phi_m psi_n U phi_m' psi_n'` in the phased basis.
pub fn potential_block<P: SeparableProfile + ?Sized>(
    profile: &P,
    b: f64,
    basis: &BasisSpec,
    magnetic: f64,
) -> Result<ComplexOperator> {
    let f = block_factors(profile, b, basis, magnetic)?;
    Ok(ComplexOperator {
        matrix: kron(&f.x, &f.y),
        meta: OperatorMeta {
            kind: OperatorKind::PotentialBlock,
            fields: FieldParams::new(magnetic, 0.0, b),
            potential_hash: 0,
            basis: *basis,
            quadrature_delta: f.quadrature_delta,
        },
    })
}

/// Landau Hamiltonian `(p_x + B y)^2 + p_y^2`.
pub fn assemble_hl(basis: &BasisSpec, magnetic: f64) -> Result<ComplexOperator> {
    basis.check()?;
    if !(magnetic > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "B = {magnetic} must be positive"
        )));
    }
    Ok(ComplexOperator {
        matrix: landau_matrix(basis, magnetic)?,
        meta: OperatorMeta {
            kind: OperatorKind::Landau,
            fields: FieldParams::new(magnetic, 0.0, 0.0),
            potential_hash: 0,
            basis: *basis,
            quadrature_delta: 0.0,
        },
    })
}

fn landau_matrix(basis: &BasisSpec, magnetic: f64) -> Result<Mat<C64>> {
    let (lx, ly) = basis.lengths(magnetic);
    let lad_x = ladder_matrices(basis.nx, lx)?;
    let lad_y = ladder_matrices(basis.ny, ly)?;
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let ix = identity(basis.nx);
    let iy = identity(basis.ny);
    let px = to_complex(&lad_x.p_imag, i);
    let p2x = to_complex(&lad_x.p2, one);
    let y = phase_y(&to_complex(&lad_y.x, one));
    let y2 = phase_y(&to_complex(&lad_y.x2, one));
    let p2y = phase_y(&to_complex(&lad_y.p2, one));

    let mut h = kron(&p2x, &iy);
    let cross = kron(&px, &y);
    let yy = kron(&ix, &y2);
    let kin_y = kron(&ix, &p2y);
    let b = magnetic;
    let n = h.nrows();
    for c in 0..n {
        for r in 0..n {
            let v = h[(r, c)] + 2.0 * b * cross[(r, c)] + b * b * yy[(r, c)] + kin_y[(r, c)];
            // Real in the phased basis; drop rounding-level imaginary parts.
            h[(r, c)] = C64::new(v.re, 0.0);
        }
    }
    Ok(h)
}

/// `x (x) I` in the phased basis.
fn position_x(basis: &BasisSpec, magnetic: f64) -> Result<Mat<C64>> {
    let (lx, _) = basis.lengths(magnetic);
    let lad = ladder_matrices(basis.nx, lx)?;
    Ok(kron(
        &to_complex(&lad.x, C64::new(1.0, 0.0)),
        &identity(basis.ny),
    ))
}

fn add_scaled(target: &mut Mat<C64>, other: &Mat<C64>, s: C64) {
    for c in 0..target.ncols() {
        for r in 0..target.nrows() {
            target[(r, c)] += s * other[(r, c)];
        }
    }
}

/// `H(F, ib) = H_L - F x - i F b + V(x + ib, y)`.
pub fn assemble_h(
    fields: &FieldParams,
    model: &PotentialModel,
    basis: &BasisSpec,
) -> Result<ComplexOperator> {
    fields.validate(model).map_err(|e| match e {
        Error::Validation(v) if fields.translation >= model.strip() => Error::Domain(v.join("; ")),
        other => other,
    })?;
    basis.check()?;
    let b_mag = fields.magnetic;
    let mut h = landau_matrix(basis, b_mag)?;
    let f = fields.electric;
    let b = fields.translation;
    if f != 0.0 {
        add_scaled(&mut h, &position_x(basis, b_mag)?, C64::new(-f, 0.0));
    }
    let shift = C64::new(0.0, -f * b);
    for d in 0..h.nrows() {
        h[(d, d)] += shift;
    }
    let mut delta = 0.0;
    if model.v0 != 0.0 {
        let v = block_factors(model, b, basis, b_mag)?;
        delta = v.quadrature_delta;
        add_scaled(&mut h, &kron(&v.x, &v.y), C64::new(1.0, 0.0));
    }
    Ok(ComplexOperator {
        matrix: h,
        meta: OperatorMeta {
            kind: OperatorKind::Translated,
            fields: *fields,
            potential_hash: potential_hash(model),
            basis: *basis,
            quadrature_delta: delta,
        },
    })
}

/// `H_2(F, ib) = H_L + V(x + ib, y) - F (x + ib) h_F(x + ib) chi_A(y)` with the
/// geometry derived from `schedule`.
pub fn assemble_h2(
    fields: &FieldParams,
    model: &PotentialModel,
    schedule: &ScheduleParams,
    basis: &BasisSpec,
) -> Result<ComplexOperator> {
    let geom = if fields.electric > 0.0 {
        Some(DerivedGeometry::new(schedule, fields.electric, model.a1)?)
    } else {
        None
    };
    assemble_h2_with_geometry(fields, model, geom.as_ref(), basis)
}

/// As [`assemble_h2`] with an explicit (possibly overridden) geometry; `None`
/// is only valid at `F = 0`.
pub fn assemble_h2_with_geometry(
    fields: &FieldParams,
    model: &PotentialModel,
    geom: Option<&DerivedGeometry>,
    basis: &BasisSpec,
) -> Result<ComplexOperator> {
    fields.validate(model).map_err(|e| match e {
        Error::Validation(v) if fields.translation >= model.strip() => Error::Domain(v.join("; ")),
        other => other,
    })?;
    basis.check()?;
    let b_mag = fields.magnetic;
    let b = fields.translation;
    let mut h = landau_matrix(basis, b_mag)?;
    let mut delta = 0.0f64;
    if model.v0 != 0.0 {
        let v = block_factors(model, b, basis, b_mag)?;
        delta = v.quadrature_delta;
        add_scaled(&mut h, &kron(&v.x, &v.y), C64::new(1.0, 0.0));
    }
    if fields.electric != 0.0 {
        let geom = geom.ok_or_else(|| {
            Error::InvalidParameter("reference Hamiltonian at F > 0 needs a geometry".into())
        })?;
        geom.check_translation(b)?;
        let w = LocalField {
            electric: fields.electric,
            geom: *geom,
        };
        let wf = block_factors(&w, b, basis, b_mag)?;
        delta = delta.max(wf.quadrature_delta);
        add_scaled(&mut h, &kron(&wf.x, &wf.y), C64::new(1.0, 0.0));
    }
    Ok(ComplexOperator {
        matrix: h,
        meta: OperatorMeta {
            kind: OperatorKind::Reference,
            fields: *fields,
            potential_hash: potential_hash(model),
            basis: *basis,
            quadrature_delta: delta,
        },
    })
}
