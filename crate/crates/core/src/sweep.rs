//! F- and B-sweeps of the resonance pipeline and the width-law fits
//! `ln Gamma = ln C - R / F^p`.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::bounds::linear_fit;
use crate::error::{Error, Result};
use crate::model::{FieldParams, PotentialModel, ScheduleParams};
use crate::resonance::{estimate, unperturbed_levels, ResonanceParams, TranslationPolicy};

/// Default electric-field grid of a width sweep.
pub const DEFAULT_F_GRID: [f64; 6] = [0.28, 0.32, 0.36, 0.40, 0.45, 0.50];
/// Search interval of the fitted exponent.
pub const P_RANGE: (f64, f64) = (1.2, 2.8);
/// Minimum number of usable rows for a fit.
pub const MIN_FIT_ROWS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    Unresolved,
    NotFound,
}

/// One `(F, B)` point of a sweep. Field names follow the CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "F")]
    pub electric: f64,
    #[serde(rename = "B")]
    pub magnetic: f64,
    #[serde(rename = "b")]
    pub translation: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
    pub e_alpha: f64,
    #[serde(rename = "re_E")]
    pub re_e: f64,
    #[serde(rename = "im_E")]
    pub im_e: f64,
    pub gamma: f64,
    pub tau: f64,
    pub delta_b: f64,
    #[serde(rename = "delta_N")]
    pub delta_n: f64,
    pub continuum_gap: f64,
    pub status: RowStatus,
}

/// Everything a sweep depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub f_list: Vec<f64>,
    pub b_list: Vec<f64>,
    pub model: PotentialModel,
    pub schedule: ScheduleParams,
    pub basis: BasisSpec,
    pub params: ResonanceParams,
    pub policy: TranslationPolicy,
    /// Index of the impurity level to follow, lowest first.
    pub level: usize,
}

fn empty_row(
    f: f64,
    magnetic: f64,
    b: f64,
    basis: &BasisSpec,
    e_alpha: f64,
    status: RowStatus,
) -> SweepRow {
    SweepRow {
        electric: f,
        magnetic,
        translation: b,
        nx: basis.nx,
        ny: basis.ny,
        e_alpha,
        re_e: f64::NAN,
        im_e: f64::NAN,
        gamma: f64::NAN,
        tau: f64::NAN,
        delta_b: f64::NAN,
        delta_n: f64::NAN,
        continuum_gap: f64::NAN,
        status,
    }
}

/// One row per `(F, B)`, B-major in the order given. Rows are computed in
/// parallel on the current rayon pool; output does not depend on scheduling.
///
/// Only configuration errors abort; numerical failures become row statuses.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(spec.f_list.len() * spec.b_list.len());
    for &magnetic in &spec.b_list {
        let levels = unperturbed_levels(magnetic, &spec.model, &spec.basis, &spec.params)?;
        let seed = levels.get(spec.level).copied();
        if seed.is_none() {
            warn!(
                "B = {magnetic}: no impurity level with index {}",
                spec.level
            );
        }
        let mut block: Vec<SweepRow> = spec
            .f_list
            .par_iter()
            .map(|&f| {
                let b = spec.policy.translation(f, &spec.schedule, &spec.params);
                let Some(seed) = seed else {
                    return Ok(empty_row(
                        f,
                        magnetic,
                        b,
                        &spec.basis,
                        f64::NAN,
                        RowStatus::NotFound,
                    ));
                };
                let fields = FieldParams::new(magnetic, f, b);
                match estimate(
                    &fields,
                    &spec.model,
                    &spec.basis,
                    &seed,
                    spec.schedule.eps,
                    &spec.params,
                ) {
                    Ok(est) => {
                        let e = &est[0];
                        let status = if e.accepted() {
                            RowStatus::Ok
                        } else {
                            info!("F = {f}, B = {magnetic}: flagged {:?}", e.flags);
                            RowStatus::Unresolved
                        };
                        Ok(SweepRow {
                            re_e: e.e.re,
                            im_e: e.e.im,
                            gamma: e.gamma,
                            tau: e.tau,
                            delta_b: e.delta_b,
                            delta_n: e.delta_n,
                            continuum_gap: e.continuum_gap,
                            status,
                            ..empty_row(f, magnetic, b, &spec.basis, seed.e_alpha, status)
                        })
                    }
                    Err(Error::NotFound(msg)) => {
                        info!("F = {f}, B = {magnetic}: {msg}");
                        Ok(empty_row(
                            f,
                            magnetic,
                            b,
                            &spec.basis,
                            seed.e_alpha,
                            RowStatus::NotFound,
                        ))
                    }
                    Err(Error::NoConvergence { unconverged }) => {
                        warn!(
                            "F = {f}, B = {magnetic}: {} eigenpairs not certified",
                            unconverged.len()
                        );
                        Ok(empty_row(
                            f,
                            magnetic,
                            b,
                            &spec.basis,
                            seed.e_alpha,
                            RowStatus::Unresolved,
                        ))
                    }
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        flag_non_monotone(&mut block);
        rows.extend(block);
    }
    Ok(rows)
}

/// Demotes accepted rows whose width does not exceed that of an accepted row
/// at smaller `F` (widths must decrease as `F` decreases).
pub fn flag_non_monotone(rows: &mut [SweepRow]) {
    let mut order: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].status == RowStatus::Ok)
        .collect();
    order.sort_by(|&a, &b| rows[a].electric.total_cmp(&rows[b].electric));
    let mut best = f64::NEG_INFINITY;
    let mut prev_f = f64::NEG_INFINITY;
    for i in order {
        let r = &mut rows[i];
        if r.electric > prev_f && r.gamma <= best {
            warn!(
                "F = {}, B = {}: width not increasing in F, row flagged",
                r.electric, r.magnetic
            );
            r.status = RowStatus::Unresolved;
            continue;
        }
        best = best.max(r.gamma);
        prev_f = r.electric;
    }
}

/// Least-squares fit of `ln Gamma = ln C - R / F^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub ln_c: f64,
    pub r: f64,
    pub p: f64,
    pub p_fixed: bool,
    pub residual_rms: f64,
    pub n_points: usize,
}

/// Linear least squares at fixed `p`: returns `(ln C, R, rms)`.
fn fit_at(p: f64, fs: &[f64], ln_g: &[f64]) -> (f64, f64, f64) {
    let xs: Vec<f64> = fs.iter().map(|f| f.powf(-p)).collect();
    let (slope, intercept, _) = linear_fit(&xs, ln_g);
    let ss: f64 = xs
        .iter()
        .zip(ln_g)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (intercept, -slope, (ss / xs.len() as f64).sqrt())
}

/// Golden-section minimisation of `g` on `[a, b]`.
fn golden_min<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > tol {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Fits the width law to the `ok` rows. With `fix_p = None` the exponent is
/// located on [`P_RANGE`] by a coarse scan followed by golden-section search.
pub fn fit_width_law(rows: &[SweepRow], fix_p: Option<f64>) -> Result<FitResult> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok && r.gamma > 0.0)
        .map(|r| (r.electric, r.gamma.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < MIN_FIT_ROWS {
        return Err(Error::InsufficientData(format!(
            "width fit needs {MIN_FIT_ROWS} ok rows with distinct F, got {}",
            pts.len()
        )));
    }
    let (fs, ln_g): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let p = match fix_p {
        Some(p) => p,
        None => {
            let (lo, hi) = P_RANGE;
            let steps = 32;
            let grid = |i: usize| lo + (hi - lo) * i as f64 / steps as f64;
            let best = (0..=steps)
                .min_by(|&i, &j| {
                    fit_at(grid(i), &fs, &ln_g)
                        .2
                        .total_cmp(&fit_at(grid(j), &fs, &ln_g).2)
                })
                .unwrap_or(0);
            let a = grid(best.saturating_sub(1));
            let b = grid((best + 1).min(steps));
            golden_min(|p| fit_at(p, &fs, &ln_g).2, a, b, 1e-12)
        }
    };
    let (ln_c, r, rms) = fit_at(p, &fs, &ln_g);
    Ok(FitResult {
        ln_c,
        r,
        p,
        p_fixed: fix_p.is_some(),
        residual_rms: rms,
        n_points: fs.len(),
    })
}

/// `R(B) = m B + q` across fits at a common fixed `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub m: f64,
    pub q: f64,
    pub correlation: f64,
    pub b_min: f64,
    pub pass: bool,
}

pub const LINEARITY_CORRELATION: f64 = 0.95;
pub const LINEARITY_OFFSET: f64 = 0.3;

/// PASS iff the correlation is at least 0.95 and `|q| <= 0.3 m B_min`.
pub fn b_linearity(fits: &[(f64, FitResult)]) -> Result<LinearityReport> {
    if fits.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "B-linearity needs 3 fits, got {}",
            fits.len()
        )));
    }
    let p = fits[0].1.p;
    if fits.iter().any(|(_, f)| f.p != p) {
        return Err(Error::InvalidParameter(
            "B-linearity needs fits at a common p".into(),
        ));
    }
    let bs: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let rs: Vec<f64> = fits.iter().map(|f| f.1.r).collect();
    let (m, q, correlation) = linear_fit(&bs, &rs);
    let b_min = bs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LinearityReport {
        m,
        q,
        correlation,
        b_min,
        pass: correlation >= LINEARITY_CORRELATION && q.abs() <= LINEARITY_OFFSET * m * b_min,
    })
}
