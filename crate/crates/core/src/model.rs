//! Pointwise evaluation of the physical model: the impurity potential and its
//! continuation `x -> x + ib`, the field cutoff `h_F`, and the local potentials
//! of the translated Hamiltonians `H(F, ib)` and `H_2(F, ib)`.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnetic field `B`, electric field `F` and imaginary translation `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    pub magnetic: f64,
    pub electric: f64,
    pub translation: f64,
}

impl FieldParams {
    pub fn new(magnetic: f64, electric: f64, translation: f64) -> Self {
        Self {
            magnetic,
            electric,
            translation,
        }
    }

    /// Checks the field invariants against the analyticity strip of `model`.
    pub fn validate(&self, model: &PotentialModel) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.magnetic > 0.0 && self.magnetic.is_finite()) {
            errs.push(format!("B = {} must be positive", self.magnetic));
        }
        if !(self.electric >= 0.0 && self.electric.is_finite()) {
            errs.push(format!("F = {} must be non-negative", self.electric));
        }
        if !(self.translation >= 0.0 && self.translation.is_finite()) {
            errs.push(format!("b = {} must be non-negative", self.translation));
        }
        if self.translation >= model.strip() {
            errs.push(format!(
                "b = {} must lie below the analyticity strip beta = {}",
                self.translation,
                model.strip()
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

impl Default for FieldParams {
    fn default() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `-V0 exp(-nu x^2) g(y)` with the compactly supported bump
    /// `g(y) = exp(1 - a1^2 / (a1^2 - y^2))` on `|y| < a1`.
    GaussianBump,
    /// `-V0 exp(-nu x^2) exp(-y^2 / a1^2)`.
    GaussianGaussian,
}

/// Attractive impurity potential. Both families are separable,
/// `V(x, y) = u(x) g(y)`, and entire in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    pub v0: f64,
    pub nu: f64,
    /// Nominal plateau half-width in `x` for the envelope bound.
    pub a0: f64,
    /// Support half-width in `y` (bump) or Gaussian length (gaussian-gaussian).
    pub a1: f64,
    /// Analyticity strip half-width; `None` means the continuation is entire.
    pub beta: Option<f64>,
}

impl Default for PotentialModel {
    fn default() -> Self {
        Self {
            kind: PotentialKind::GaussianGaussian,
            v0: 2.4,
            nu: 0.5,
            a0: 1.0,
            a1: 1.0,
            beta: None,
        }
    }
}

impl PotentialModel {
    pub fn strip(&self) -> f64 {
        self.beta.unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            errs.push(format!("potential.v0 = {} must be non-negative", self.v0));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            errs.push(format!("potential.nu = {} must be positive", self.nu));
        }
        if !(self.a0 > 0.0) {
            errs.push(format!("potential.a0 = {} must be positive", self.a0));
        }
        if !(self.a1 > 0.0 && self.a1.is_finite()) {
            errs.push(format!("potential.a1 = {} must be positive", self.a1));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0) {
                errs.push(format!("potential.beta = {beta} must be positive"));
            }
        }
        errs
    }

    /// The `y` profile `g(y)`, normalised to `g(0) = 1`.
    pub fn profile_y(&self, y: f64) -> f64 {
        match self.kind {
            PotentialKind::GaussianBump => bump(y, self.a1),
            PotentialKind::GaussianGaussian => (-(y / self.a1).powi(2)).exp(),
        }
    }

    /// `y` interval outside of which `g` vanishes identically, if any.
    pub fn support_y(&self) -> Option<(f64, f64)> {
        match self.kind {
            PotentialKind::GaussianBump => Some((-self.a1, self.a1)),
            PotentialKind::GaussianGaussian => None,
        }
    }

    /// The continued `x` factor `u(x + ib) = -V0 exp(-nu (x + ib)^2)`.
    ///
    /// Expanded as `-V0 e^{nu b^2} e^{-nu x^2} e^{-2i nu b x}` so that the modulus
    /// never overflows before the phase is applied.
    pub fn factor_x(&self, x: f64, b: f64) -> C64 {
        let modulus = -self.v0 * (self.nu * (b * b - x * x)).exp();
        C64::from_polar(1.0, -2.0 * self.nu * b * x) * modulus
    }
}

/// C-infinity bump `exp(1 - a^2 / (a^2 - y^2))` on `|y| < a`, zero outside.
pub fn bump(y: f64, a: f64) -> f64 {
    let d = a * a - y * y;
    if d <= 0.0 {
        0.0
    } else {
        (1.0 - a * a / d).exp()
    }
}

/// `V(x + ib, y)`.
pub fn eval_potential(x: f64, y: f64, b: f64, model: &PotentialModel) -> Result<C64> {
    if b >= model.strip() {
        return Err(Error::Domain(format!(
            "translation b = {b} outside the analyticity strip beta = {}",
            model.strip()
        )));
    }
    let g = model.profile_y(y);
    if g == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(model.factor_x(x, b) * g)
}

/// Cut-point geometry of the reference Hamiltonian and the decoupling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleParams {
    pub eps: f64,
    pub gamma0: f64,
    pub cbar: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub tau: f64,
    pub alpha: f64,
    pub b0: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            eps: 0.2,
            gamma0: 1.0,
            cbar: 2.0,
            c0: 0.75,
            c1: 1.0,
            c2: 0.5,
            tau: 5.0,
            alpha: 2.5,
            b0: 1.0,
        }
    }
}

impl ScheduleParams {
    /// Structural constraints that do not depend on `F`.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.eps > 0.0 && self.eps < 1.0) {
            errs.push(format!("schedule.eps = {} must lie in (0, 1)", self.eps));
        }
        if !(self.gamma0 > 0.0) {
            errs.push(format!(
                "schedule.gamma0 = {} must be positive",
                self.gamma0
            ));
        }
        if !(self.b0 > 0.0) {
            errs.push(format!("schedule.b0 = {} must be positive", self.b0));
        }
        if !(self.c2 > 0.0) {
            errs.push(format!("schedule.c2 = {} must be positive", self.c2));
        }
        if !(self.c2 < self.c0) {
            errs.push(format!(
                "C2 >= C0 violates x2 < x0 ordering (C2 = {}, C0 = {})",
                self.c2, self.c0
            ));
        }
        if !(self.c0 < self.c1) {
            errs.push(format!(
                "C0 >= C1 violates x0 < x1 ordering (C0 = {}, C1 = {})",
                self.c0, self.c1
            ));
        }
        if !(self.c1 < self.cbar) {
            errs.push(format!(
                "C1 >= Cbar violates x1 < xbar ordering (C1 = {}, Cbar = {})",
                self.c1, self.cbar
            ));
        }
        if !(self.alpha > 2.0) {
            errs.push(format!("schedule.alpha = {} must exceed 2", self.alpha));
        }
        if !(self.tau > self.alpha + 2.0) {
            errs.push(format!(
                "schedule.tau = {} must exceed alpha + 2 = {}",
                self.tau,
                self.alpha + 2.0
            ));
        }
        errs
    }

    /// The translation `b = b0 F^alpha`.
    pub fn translation(&self, f: f64) -> f64 {
        self.b0 * f.powf(self.alpha)
    }

    /// Transition rate `gamma_F = gamma0 / F^(1 - eps)`.
    pub fn gamma(&self, f: f64) -> f64 {
        self.gamma0 / f.powf(1.0 - self.eps)
    }

    /// Checks `gamma_F b < pi/4` for the schedule translation at `f`.
    pub fn check_translation(&self, f: f64) -> Result<()> {
        let gb = self.gamma(f) * self.translation(f);
        if gb < FRAC_PI_4 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "gamma_F * b = {gb} >= pi/4 at F = {f}"
            )))
        }
    }
}

/// All `F`-dependent lengths of the cutoff scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGeometry {
    pub electric: f64,
    pub gamma: f64,
    pub xbar: f64,
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub y0: f64,
    pub y1: f64,
    pub y2: f64,
    pub ybar: f64,
    /// The `y` margin `F^-tau`.
    pub margin: f64,
}

impl DerivedGeometry {
    pub fn new(schedule: &ScheduleParams, f: f64, a1: f64) -> Result<Self> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "geometry needs F > 0, got {f}"
            )));
        }
        let scale = f.powf(1.0 - schedule.eps);
        let margin = f.powf(-schedule.tau);
        let y2 = a1 + 1.0;
        let y0 = y2 + margin + 1.0;
        let y1 = y0 + margin + 1.0;
        Ok(Self {
            electric: f,
            gamma: schedule.gamma0 / scale,
            xbar: schedule.cbar / scale,
            x0: schedule.c0 / scale,
            x1: schedule.c1 / scale,
            x2: schedule.c2 / scale,
            y0,
            y1,
            y2,
            ybar: y1 + margin,
            margin,
        })
    }

    /// Whether `b` lies in the strip `gamma_F b < pi/4`.
    pub fn check_translation(&self, b: f64) -> Result<()> {
        if self.gamma * b.abs() < FRAC_PI_4 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "gamma_F * b = {} >= pi/4; continuation leaves the strip",
                self.gamma * b.abs()
            )))
        }
    }
}

/// `1 / (1 + e^{-2w}) = (1 + tanh w) / 2`, without overflow for large `|Re w|`.
pub fn logistic(w: C64) -> C64 {
    if w.re >= 0.0 {
        (C64::new(1.0, 0.0) + (-2.0 * w).exp()).inv()
    } else {
        let e = (2.0 * w).exp();
        e / (C64::new(1.0, 0.0) + e)
    }
}

/// Scaled terms of `cosh(2 gamma w) + cosh(2 gamma z)` for `z = x + ib`, all
/// multiplied by `e^{-M}` with `M = 2 gamma max(w, |x|)`.
struct PlateauTerms {
    /// `e^{2 gamma w - M}`.
    up: f64,
    /// `e^{-2 gamma w - M}`.
    down: f64,
    /// `(e^{2 gamma z} + e^{-2 gamma z}) e^{-M}`.
    z_sum: C64,
}

fn plateau_terms(x: f64, b: f64, half_width: f64, gamma: f64) -> PlateauTerms {
    let a = 2.0 * gamma * half_width;
    let s = 2.0 * gamma * x;
    let m = a.max(s.abs());
    let phase = 2.0 * gamma * b;
    PlateauTerms {
        up: (a - m).exp(),
        down: (-a - m).exp(),
        z_sum: C64::from_polar((s - m).exp(), phase) + C64::from_polar((-s - m).exp(), -phase),
    }
}

/// `(tanh(gamma (z + w)) - tanh(gamma (z - w))) / 2` at `z = x + ib`.
///
/// Evaluated as `sinh(2 gamma w) / (cosh(2 gamma w) + cosh(2 gamma z))` with
/// every exponential rescaled by the largest one.
pub fn plateau(x: f64, b: f64, half_width: f64, gamma: f64) -> C64 {
    if half_width.is_infinite() {
        return C64::new(1.0, 0.0);
    }
    let t = plateau_terms(x, b, half_width, gamma);
    let num = t.up - t.down;
    C64::new(num, 0.0) / (t.z_sum + (t.up + t.down))
}

/// `1 - plateau(x, b, w, gamma)`, without cancellation inside the plateau.
pub fn one_minus_plateau(x: f64, b: f64, half_width: f64, gamma: f64) -> C64 {
    if half_width.is_infinite() {
        return C64::new(0.0, 0.0);
    }
    let t = plateau_terms(x, b, half_width, gamma);
    (t.z_sum + 2.0 * t.down) / (t.z_sum + (t.up + t.down))
}

/// `h_F(x + ib)`.
pub fn eval_hf(x: f64, b: f64, geom: &DerivedGeometry) -> Result<C64> {
    geom.check_translation(b)?;
    Ok(plateau(x, b, geom.xbar, geom.gamma))
}

/// Sharp indicator of `A = [-ybar, ybar]`.
pub fn chi_a(y: f64, geom: &DerivedGeometry) -> f64 {
    if y.abs() <= geom.ybar {
        1.0
    } else {
        0.0
    }
}

/// The continued `x` factor of the local field, `-F (x + ib) h_F(x + ib)`.
pub fn local_field_x(x: f64, b: f64, f: f64, geom: &DerivedGeometry) -> Result<C64> {
    let h = eval_hf(x, b, geom)?;
    Ok(-f * C64::new(x, b) * h)
}

/// `W_F(x + ib, y) = -F (x + ib) h_F(x + ib) chi_A(y)`.
pub fn eval_local_field(x: f64, y: f64, b: f64, f: f64, geom: &DerivedGeometry) -> Result<C64> {
    let fx = local_field_x(x, b, f, geom)?;
    Ok(fx * chi_a(y, geom))
}
