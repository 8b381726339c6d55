//! Decoupling functions of the geometric resolvent scheme and grid checks of
//! the closed-form sup-norm bounds built from them.
//!
//! A failed pointwise bound is reported as data (`pass = false`), never as an
//! error; errors are reserved for evaluations outside the analyticity strip.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{logistic, one_minus_plateau, plateau, DerivedGeometry, ScheduleParams};

/// Uniform grid points per check, before refinement.
pub const GRID_POINTS: usize = 4096;
/// Extra points placed geometrically on each side of every cut point.
const REFINE_POINTS: usize = 48;
/// Relative slack granted to pointwise bounds for rounding.
const BOUND_SLACK: f64 = 1e-12;
/// Values this small are indistinguishable from an underflowed bound.
const UNDERFLOW_FLOOR: f64 = 1e-290;

/// One of the twelve decoupling functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JFunction {
    /// `(1 + tanh(gamma (x - x2))) / 2`
    Minus,
    /// `(1 + tanh(gamma (x - x0))) / 2`
    MinusTilde,
    /// `(tanh(gamma (x + x1)) - tanh(gamma (x - x1))) / 2`
    Zero,
    /// `(tanh(gamma (x + x0)) - tanh(gamma (x - x0))) / 2`
    ZeroTilde,
    /// `(1 - tanh(gamma (x + x2))) / 2`
    Plus,
    /// `(1 - tanh(gamma (x + x0))) / 2`
    PlusTilde,
    /// Smooth, 1 for `y <= -y0 + F^-tau`, 0 for `y >= -y2`.
    Lower,
    /// Smooth, 1 for `|y| <= y0 + F^-tau`, 0 for `|y| >= y1`.
    Centre,
    /// Smooth, 1 for `y >= y0 - F^-tau`, 0 for `y <= y2`.
    Upper,
    /// Indicator of `(-inf, -y0)`.
    LowerTilde,
    /// Indicator of `[-y0, y0]`.
    CentreTilde,
    /// Indicator of `(y0, inf)`.
    UpperTilde,
}

impl JFunction {
    pub const ALL: [JFunction; 12] = [
        JFunction::Minus,
        JFunction::MinusTilde,
        JFunction::Zero,
        JFunction::ZeroTilde,
        JFunction::Plus,
        JFunction::PlusTilde,
        JFunction::Lower,
        JFunction::Centre,
        JFunction::Upper,
        JFunction::LowerTilde,
        JFunction::CentreTilde,
        JFunction::UpperTilde,
    ];

    /// Whether the function acts on `x` (and so admits a complex translation).
    pub fn is_x(self) -> bool {
        matches!(
            self,
            JFunction::Minus
                | JFunction::MinusTilde
                | JFunction::Zero
                | JFunction::ZeroTilde
                | JFunction::Plus
                | JFunction::PlusTilde
        )
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    let a = f(t);
    a / (a + f(1.0 - t))
}

/// The twelve decoupling functions bound to one geometry.
#[derive(Debug, Clone, Copy)]
pub struct DecouplingSet {
    pub geom: DerivedGeometry,
}

impl DecouplingSet {
    pub fn new(geom: DerivedGeometry) -> Self {
        Self { geom }
    }

    /// Evaluates `which` at `coord` (`x` for the x-family, `y` otherwise);
    /// `b` translates the x-family to `x + ib` and is ignored for `y`.
    pub fn eval(&self, which: JFunction, coord: f64, b: f64) -> Result<C64> {
        let g = &self.geom;
        if which.is_x() {
            g.check_translation(b)?;
            let z = C64::new(coord, b);
            let gam = g.gamma;
            return Ok(match which {
                JFunction::Minus => logistic(gam * (z - g.x2)),
                JFunction::MinusTilde => logistic(gam * (z - g.x0)),
                JFunction::Zero => plateau(coord, b, g.x1, gam),
                JFunction::ZeroTilde => plateau(coord, b, g.x0, gam),
                JFunction::Plus => logistic(-gam * (z + g.x2)),
                JFunction::PlusTilde => logistic(-gam * (z + g.x0)),
                _ => unreachable!(),
            });
        }
        let y = coord;
        let v = match which {
            JFunction::Lower => smooth_step(-g.y2 - y),
            JFunction::Centre => smooth_step(g.y1 - y.abs()),
            JFunction::Upper => smooth_step(y - g.y2),
            JFunction::LowerTilde => indicator(y < -g.y0),
            JFunction::CentreTilde => indicator(y.abs() <= g.y0),
            JFunction::UpperTilde => indicator(y > g.y0),
            _ => unreachable!(),
        };
        Ok(C64::new(v, 0.0))
    }

    /// `sum_{a in {-, 0, +}} J_a(x + ib) J~_a(x + ib) - 1`.
    pub fn partition_residual(&self, x: f64, b: f64) -> Result<C64> {
        let e = |w| self.eval(w, x, b);
        Ok(e(JFunction::Minus)? * e(JFunction::MinusTilde)?
            + e(JFunction::Zero)? * e(JFunction::ZeroTilde)?
            + e(JFunction::Plus)? * e(JFunction::PlusTilde)?
            - 1.0)
    }
}

fn indicator(c: bool) -> f64 {
    if c {
        1.0
    } else {
        0.0
    }
}

/// Evaluation grid: uniform points on `[-span, span]` plus geometric
/// refinement on both sides of each cut point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub span: f64,
    pub uniform: usize,
    pub cuts: Vec<f64>,
    /// Refinement runs from `min_offset` to `max_offset` away from each cut.
    pub min_offset: f64,
    pub max_offset: f64,
    pub refine_per_side: usize,
}

impl GridSpec {
    pub fn around_cuts(span: f64, cuts: &[f64], gamma: f64) -> Self {
        Self {
            span,
            uniform: GRID_POINTS,
            cuts: cuts.to_vec(),
            min_offset: 1e-6 / gamma,
            max_offset: 20.0 / gamma,
            refine_per_side: REFINE_POINTS,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..self.uniform)
            .map(|i| -self.span + 2.0 * self.span * i as f64 / (self.uniform - 1) as f64)
            .collect();
        let ratio = (self.max_offset / self.min_offset).ln();
        for &c in &self.cuts {
            pts.push(c);
            for k in 0..self.refine_per_side {
                let d =
                    self.min_offset * (ratio * k as f64 / (self.refine_per_side - 1) as f64).exp();
                pts.push(c - d);
                pts.push(c + d);
            }
        }
        pts.retain(|p| p.abs() <= self.span);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Outcome of a pointwise bound `value(x) <= bound(x)` on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub check: String,
    pub electric: f64,
    pub translation: f64,
    pub gamma_b: f64,
    pub pass: bool,
    /// `min (bound - value) / bound` over the grid; negative on failure.
    pub worst_slack: f64,
    pub worst_at: f64,
    pub violations: usize,
    pub grid: GridSpec,
}

fn check_pointwise<F>(
    name: &str,
    geom: &DerivedGeometry,
    b: f64,
    grid: GridSpec,
    mut f: F,
) -> Result<BoundReport>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    geom.check_translation(b)?;
    let mut worst = f64::INFINITY;
    let mut worst_at = 0.0;
    let mut violations = 0;
    for x in grid.points() {
        let (value, bound) = f(x)?;
        let slack = if value <= UNDERFLOW_FLOOR {
            0.0f64.max((bound - value) / bound.max(UNDERFLOW_FLOOR))
        } else {
            (bound - value) / bound
        };
        if value > bound * (1.0 + BOUND_SLACK) && value > UNDERFLOW_FLOOR {
            violations += 1;
        }
        if slack < worst {
            worst = slack;
            worst_at = x;
        }
    }
    Ok(BoundReport {
        check: name.to_string(),
        electric: geom.electric,
        translation: b,
        gamma_b: geom.gamma * b,
        pass: violations == 0,
        worst_slack: worst,
        worst_at,
        violations,
        grid,
    })
}

/// `|J_0(x + ib)| <= e^{-2 gamma (|x| - x1)} / cos(2 gamma b)` on `[-4 x1, 4 x1]`.
pub fn check_j0_bound(geom: &DerivedGeometry, b: f64) -> Result<BoundReport> {
    let g = *geom;
    let grid = GridSpec::around_cuts(4.0 * g.x1, &[-g.x1, 0.0, g.x1], g.gamma);
    check_pointwise("j0-envelope", geom, b, grid, |x| {
        let v = plateau(x, b, g.x1, g.gamma).norm();
        let bound = (-2.0 * g.gamma * (x.abs() - g.x1)).exp() / (2.0 * g.gamma * b).cos();
        Ok((v, bound))
    })
}

/// The two pointwise bounds on the field cutoff over `[-3 xbar, 3 xbar]`:
/// the modulus envelope of `h_F(x + ib)` and the two-term envelope
/// `|1 - h_F(x + ib)| <= (e^{-4 gamma (x - xbar)} + 1)^{-1/2} + (e^{4 gamma (x + xbar)} + 1)^{-1/2}`.
pub fn check_hf_bounds(geom: &DerivedGeometry, b: f64) -> Result<[BoundReport; 2]> {
    let g = *geom;
    let cuts = [-g.xbar, 0.0, g.xbar];
    let grid = GridSpec::around_cuts(3.0 * g.xbar, &cuts, g.gamma);
    let two_g = 2.0 * g.gamma;
    let envelope = check_pointwise("hF-envelope", geom, b, grid.clone(), |x| {
        let v = plateau(x, b, g.xbar, g.gamma).norm();
        // Numerator and denominator divided by e^{2 gamma xbar}.
        let bound = 1.0
            / (((two_g * (x - g.xbar)).exp() + (-two_g * (x + g.xbar)).exp()) * (two_g * b).cos()
                + 1.0
                + (-2.0 * two_g * g.xbar).exp());
        Ok((v, bound))
    })?;
    let complement = check_pointwise("one-minus-hF", geom, b, grid, |x| {
        let v = one_minus_plateau(x, b, g.xbar, g.gamma).norm();
        let h1 = inv_sqrt_one_plus_exp(-4.0 * g.gamma * (x - g.xbar));
        let h2 = inv_sqrt_one_plus_exp(4.0 * g.gamma * (x + g.xbar));
        Ok((v, h1 + h2))
    })?;
    Ok([envelope, complement])
}

/// `(e^a + 1)^{-1/2}` without overflow for large `a`.
fn inv_sqrt_one_plus_exp(a: f64) -> f64 {
    if a > 0.0 {
        (-0.5 * a).exp() / (1.0 + (-a).exp()).sqrt()
    } else {
        1.0 / (1.0 + a.exp()).sqrt()
    }
}

/// `sup |sum_a J_a J~_a - 1|` over `[-3 xbar, 3 xbar]`.
pub fn partition_defect(geom: &DerivedGeometry, b: f64) -> Result<(f64, f64)> {
    let set = DecouplingSet::new(*geom);
    let g = geom;
    let cuts = [-g.x1, -g.x0, -g.x2, g.x2, g.x0, g.x1];
    let grid = GridSpec::around_cuts(3.0 * g.xbar, &cuts, g.gamma);
    sup_on(&grid, |x| Ok(set.partition_residual(x, b)?.norm()))
}

/// `sup F |x| |1 - h_F(x + ib)| |J_0(x + ib)|` over `[-3 xbar, 3 xbar]`,
/// with its location.
pub fn a2_product(geom: &DerivedGeometry, b: f64) -> Result<(f64, f64)> {
    geom.check_translation(b)?;
    let g = geom;
    let cuts = [-g.xbar, -g.x1, g.x1, g.xbar];
    let grid = GridSpec::around_cuts(3.0 * g.xbar, &cuts, g.gamma);
    sup_on(&grid, |x| {
        let c = one_minus_plateau(x, b, g.xbar, g.gamma).norm();
        let j0 = plateau(x, b, g.x1, g.gamma).norm();
        Ok(g.electric * x.abs() * c * j0)
    })
}

fn sup_on<F: FnMut(f64) -> Result<f64>>(grid: &GridSpec, mut f: F) -> Result<(f64, f64)> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for x in grid.points() {
        let v = f(x)?;
        if v > best.0 {
            best = (v, x);
        }
    }
    Ok(best)
}

/// `s(F) = sup_x |F x h_F(x)|` on the real axis.
pub fn local_field_sup(schedule: &ScheduleParams, f: f64) -> Result<f64> {
    let g = DerivedGeometry::new(schedule, f, 1.0)?;
    let grid = GridSpec::around_cuts(3.0 * g.xbar, &[g.xbar], g.gamma);
    Ok(sup_on(&grid, |x| {
        Ok(f * x.abs() * plateau(x, 0.0, g.xbar, g.gamma).re)
    })?
    .0)
}

/// Least-squares line through `(x, y)`: slope, intercept and correlation.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let corr = if sxx > 0.0 && syy > 0.0 {
        sxy / (sxx * syy).sqrt()
    } else {
        0.0
    };
    (slope, my - slope * mx, corr)
}

/// A smallness claim checked as a trend across `F`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendReport {
    pub check: String,
    pub pass: bool,
    pub electric: Vec<f64>,
    pub values: Vec<f64>,
    /// Regression of `ln value` on `F^{-2(1-eps)}` (or of `ln s` on `ln F`
    /// for the local-field norm).
    pub slope: f64,
    pub correlation: f64,
    pub note: String,
}

/// Correlation threshold for the exponential-smallness trends.
pub const TREND_CORRELATION: f64 = -0.98;

fn exponential_trend(
    name: &str,
    schedule: &ScheduleParams,
    fs: &[f64],
    values: Vec<f64>,
) -> TrendReport {
    let xs: Vec<f64> = fs
        .iter()
        .map(|f| f.powf(-2.0 * (1.0 - schedule.eps)))
        .collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, _, corr) = linear_fit(&xs, &ys);
    TrendReport {
        check: name.to_string(),
        pass: slope < 0.0 && corr <= TREND_CORRELATION,
        electric: fs.to_vec(),
        values,
        slope,
        correlation: corr,
        note: "ln sup regressed on F^(-2(1-eps))".into(),
    }
}

/// Spread allowed for `s(F) / F^eps` across the F list.
pub const LOCAL_FIELD_SPREAD: f64 = 1.5;
/// Minimal log-log decay exponent of `s(F)` between `F_min / 1000` and `F_min`.
pub const LOCAL_FIELD_DECAY: f64 = 0.05;

/// PASS iff `s(F)/F^eps` varies by at most [`LOCAL_FIELD_SPREAD`] over `fs`
/// and `s` decays towards zero: the log-log slope measured between
/// `F_min / 1000` and `F_min` is at least [`LOCAL_FIELD_DECAY`].
pub fn check_localfield_norm(schedule: &ScheduleParams, fs: &[f64]) -> Result<TrendReport> {
    if fs.is_empty() {
        return Err(Error::InsufficientData(
            "local-field check needs at least one F".into(),
        ));
    }
    let mut values = Vec::with_capacity(fs.len());
    for &f in fs {
        values.push(local_field_sup(schedule, f)?);
    }
    let ratios: Vec<f64> = fs
        .iter()
        .zip(&values)
        .map(|(f, s)| s / f.powf(schedule.eps))
        .collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let f_min = fs.iter().cloned().fold(f64::MAX, f64::min);
    let s_min = local_field_sup(schedule, f_min)?;
    let s_probe = local_field_sup(schedule, f_min * 1e-3)?;
    let decay = (s_min / s_probe).ln() / 1e3f64.ln();
    let (_, _, corr) = linear_fit(
        &fs.iter().map(|f| f.ln()).collect::<Vec<_>>(),
        &values.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    );
    Ok(TrendReport {
        check: "local-field-norm".into(),
        pass: hi / lo <= LOCAL_FIELD_SPREAD && decay >= LOCAL_FIELD_DECAY,
        electric: fs.to_vec(),
        values,
        slope: decay,
        correlation: corr,
        note: format!(
            "s/F^eps in [{lo:.4}, {hi:.4}]; decay exponent {decay:.4} from F = {:.3e} to {f_min}",
            f_min * 1e-3
        ),
    })
}

/// `max(max row l1 sum, max column l1 sum)`, an upper bound on the spectral norm.
pub fn schur_norm_bound(m: &Mat<C64>) -> f64 {
    let mut rows = vec![0.0f64; m.nrows()];
    let mut best_col = 0.0f64;
    for c in 0..m.ncols() {
        let mut col = 0.0;
        for (r, acc) in rows.iter_mut().enumerate() {
            let a = m[(r, c)].norm();
            col += a;
            *acc += a;
        }
        best_col = best_col.max(col);
    }
    rows.into_iter().fold(best_col, f64::max)
}

/// Full verification run over a list of fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub schedule: ScheduleParams,
    pub pointwise: Vec<BoundReport>,
    pub trends: Vec<TrendReport>,
}

/// Runs every check at the schedule translation `b = b0 F^alpha`.
pub fn verify_bounds(schedule: &ScheduleParams, a1: f64, fs: &[f64]) -> Result<VerificationReport> {
    let errs = schedule.validate();
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    if fs.len() < 2 {
        return Err(Error::InsufficientData(
            "trend checks need at least two F values".into(),
        ));
    }
    let mut pointwise = Vec::new();
    let mut defects = Vec::new();
    let mut products = Vec::new();
    for &f in fs {
        let geom = DerivedGeometry::new(schedule, f, a1)?;
        let b = schedule.translation(f);
        pointwise.push(check_j0_bound(&geom, b)?);
        pointwise.extend(check_hf_bounds(&geom, b)?);
        defects.push(partition_defect(&geom, b)?.0);
        products.push(a2_product(&geom, b)?.0);
    }
    let trends = vec![
        exponential_trend("partition-defect", schedule, fs, defects),
        exponential_trend("a2-product", schedule, fs, products),
        check_localfield_norm(schedule, fs)?,
    ];
    let pass = pointwise.iter().all(|r| r.pass) && trends.iter().all(|t| t.pass);
    Ok(VerificationReport {
        pass,
        schedule: *schedule,
        pointwise,
        trends,
    })
}
