//! Impurity levels of `H(0)`, identification of the resonance that continues a
//! level in the spectrum of `H(F, ib)`, widths, lifetimes and stability under
//! changes of `b` and of the basis.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{assemble_h, assemble_h2, BasisSpec};
use crate::eigen::{eig_dense, eig_hermitian, eigenvalues, eigenvalues_hermitian, EigenPair};
use crate::error::{Error, Result};
use crate::model::{FieldParams, PotentialModel, ScheduleParams};

/// Widths below `NOISE_FLOOR * ||H||_max` are not resolvable in double precision.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Reality tolerance for the reference Hamiltonian, relative to `||H_2||_max`.
pub const REALITY_TOL: f64 = 1e-10;
/// `|E(b) - E(b')| <= max(STABILITY_REL * Gamma, STABILITY_ABS)`; the same
/// rule is applied to the basis bump.
pub const STABILITY_REL: f64 = 0.1;
pub const STABILITY_ABS: f64 = 1e-10;
/// Accepted estimates keep `Im E + bF >= CONTINUUM_MARGIN * bF`.
pub const CONTINUUM_MARGIN: f64 = 0.4;

/// Tunables of level search and resonance selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceParams {
    /// Levels closer than this to a Landau level are discarded.
    pub min_gap: f64,
    /// `c` in the selection half-width `c F^{eps/2}`.
    pub window_c: f64,
    /// Extra basis functions per axis for the basis-bump rerun.
    pub basis_bump: usize,
    /// Translation used by [`TranslationPolicy::Auto`].
    pub auto_translation: f64,
    /// Eigenvalues of `H(0)` closer than this are counted as one level.
    pub degeneracy_tol: f64,
}

impl Default for ResonanceParams {
    fn default() -> Self {
        Self {
            min_gap: 0.1,
            window_c: 1.0,
            basis_bump: 4,
            auto_translation: 0.5,
            degeneracy_tol: 1e-7,
        }
    }
}

impl ResonanceParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.min_gap > 0.0) {
            errs.push(format!(
                "resonance.min_gap = {} must be positive",
                self.min_gap
            ));
        }
        if !(self.window_c > 0.0) {
            errs.push(format!(
                "resonance.window_c = {} must be positive",
                self.window_c
            ));
        }
        if !(self.auto_translation > 0.0 && self.auto_translation.is_finite()) {
            errs.push(format!(
                "resonance.auto_translation = {} must be positive",
                self.auto_translation
            ));
        }
        if !(self.degeneracy_tol >= 0.0) {
            errs.push(format!(
                "resonance.degeneracy_tol = {} must be non-negative",
                self.degeneracy_tol
            ));
        }
        errs
    }
}

/// How `b` is chosen for a given `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranslationPolicy {
    /// `b = b0 F^alpha`, the proof-oriented choice.
    Schedule,
    /// A fixed `b` large enough to uncover widths across the sweep range.
    #[default]
    Auto,
}

impl TranslationPolicy {
    pub fn translation(self, f: f64, schedule: &ScheduleParams, params: &ResonanceParams) -> f64 {
        match self {
            TranslationPolicy::Schedule => schedule.translation(f),
            TranslationPolicy::Auto => params.auto_translation,
        }
    }
}

/// Discrete eigenvalue of `H(0)` isolated from the Landau levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpurityLevel {
    pub e_alpha: f64,
    pub multiplicity: usize,
    pub gap_to_landau: f64,
}

/// Distance from `e` to the nearest Landau level `(2n + 1) B`.
pub fn landau_gap(e: f64, magnetic: f64) -> f64 {
    let n = ((e / magnetic - 1.0) / 2.0).round().max(0.0);
    (e - (2.0 * n + 1.0) * magnetic).abs()
}

/// Impurity levels below the lowest Landau level.
///
/// Between Landau levels the truncated tensor basis produces spurious
/// eigenvalues even without a potential, so only the gap below `B` is searched.
pub fn unperturbed_levels(
    magnetic: f64,
    model: &PotentialModel,
    basis: &BasisSpec,
    params: &ResonanceParams,
) -> Result<Vec<ImpurityLevel>> {
    let h0 = assemble_h(&FieldParams::new(magnetic, 0.0, 0.0), model, basis)?;
    let ev = eigenvalues_hermitian(&h0.matrix)?;
    Ok(group_levels(&ev, magnetic, params))
}

fn group_levels(ev: &[f64], magnetic: f64, params: &ResonanceParams) -> Vec<ImpurityLevel> {
    let mut levels: Vec<ImpurityLevel> = Vec::new();
    for &e in ev.iter().filter(|&&e| e < magnetic - params.min_gap) {
        match levels.last_mut() {
            Some(l)
                if (e - l.e_alpha).abs() <= params.degeneracy_tol * l.e_alpha.abs().max(1.0) =>
            {
                // Running mean keeps the seed centred on the cluster.
                l.e_alpha += (e - l.e_alpha) / (l.multiplicity + 1) as f64;
                l.multiplicity += 1;
            }
            _ => levels.push(ImpurityLevel {
                e_alpha: e,
                multiplicity: 1,
                gap_to_landau: 0.0,
            }),
        }
    }
    for l in &mut levels {
        l.gap_to_landau = landau_gap(l.e_alpha, magnetic);
    }
    levels
}

/// Region of the complex plane where the continuation of a level is sought:
/// `|Re z - e_alpha| <= c F^{eps/2}` and `-bF/2 < Im z <= 0`, both edges
/// widened by the noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub center: f64,
    pub half_width: f64,
    pub im_floor: f64,
    pub noise: f64,
}

impl SearchWindow {
    pub fn new(
        seed: &ImpurityLevel,
        fields: &FieldParams,
        eps: f64,
        params: &ResonanceParams,
        noise: f64,
    ) -> Self {
        let f = fields.electric;
        Self {
            center: seed.e_alpha,
            half_width: params.window_c * f.powf(eps / 2.0),
            im_floor: -0.5 * fields.translation * f,
            noise,
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        (z.re - self.center).abs() <= self.half_width.max(self.noise)
            && z.im > self.im_floor - self.noise
            && z.im <= self.noise
    }
}

/// Eigenvalues in `window` closest in real part to the seed, one per unit of
/// multiplicity, nearest first.
pub fn locate_resonance(
    eigs: &[C64],
    seed: &ImpurityLevel,
    window: &SearchWindow,
) -> Result<Vec<C64>> {
    let mut hits: Vec<C64> = eigs
        .iter()
        .copied()
        .filter(|&z| window.contains(z))
        .collect();
    if hits.is_empty() {
        return Err(Error::NotFound(format!(
            "no eigenvalue with |Re z - {:.6}| <= {:.3e} and Im z > {:.3e}",
            window.center, window.half_width, window.im_floor
        )));
    }
    hits.sort_by(|a, b| {
        (a.re - window.center)
            .abs()
            .total_cmp(&(b.re - window.center).abs())
    });
    hits.truncate(seed.multiplicity.max(1));
    Ok(hits)
}

/// Reasons an estimate is not accepted as a resolved width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFlag {
    /// `Im E` outside `(-bF, 0]` beyond the noise floor.
    StripViolation,
    /// `Im E + bF < 0.4 bF`.
    ContinuumClose,
    /// `|E(b) - E(2b)|` above the stability tolerance.
    TranslationUnstable,
    /// `|E(N) - E(N + bump)|` above the stability tolerance.
    BasisUnstable,
    /// A rerun did not locate the resonance.
    RerunMissing,
    /// `Gamma` below the noise floor.
    BelowNoiseFloor,
}

/// Resonance `E` continuing an impurity level, with stability diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEstimate {
    pub e: C64,
    pub gamma: f64,
    pub tau: f64,
    pub e_alpha_seed: f64,
    pub delta_b: f64,
    pub delta_n: f64,
    pub continuum_gap: f64,
    pub fields: FieldParams,
    pub noise_floor: f64,
    pub flags: Vec<EstimateFlag>,
}

impl ResonanceEstimate {
    /// No flags raised: every resonance invariant held.
    pub fn accepted(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn unresolved(&self) -> bool {
        self.flags.contains(&EstimateFlag::BelowNoiseFloor)
    }
}

/// `Gamma = -2 Im E` (clipped at 0) and `tau = 1 / Gamma`; `tau` is `+inf`
/// when `Gamma` does not exceed the noise floor.
pub fn width_and_lifetime(e: C64, noise_floor: f64) -> (f64, f64) {
    let gamma = (-2.0 * e.im).max(0.0);
    let tau = if gamma > noise_floor {
        1.0 / gamma
    } else {
        f64::INFINITY
    };
    (gamma, tau)
}

fn nearest(eigs: &[C64], target: C64, window: &SearchWindow) -> Option<C64> {
    eigs.iter()
        .copied()
        .filter(|&z| window.contains(z))
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
}

/// Rerun at another `b` or basis and return the window eigenvalues.
fn rerun(
    fields: &FieldParams,
    model: &PotentialModel,
    basis: &BasisSpec,
    seed: &ImpurityLevel,
    eps: f64,
    params: &ResonanceParams,
) -> Result<(Vec<C64>, SearchWindow)> {
    let h = assemble_h(fields, model, basis)?;
    let noise = NOISE_FLOOR * h.max_abs();
    let window = SearchWindow::new(seed, fields, eps, params, noise);
    Ok((eigenvalues(&h.matrix)?, window))
}

/// Locates the resonance(s) continuing `seed` in `H(F, ib)` and reruns at
/// `2b` and at a bumped basis to populate the stability fields.
pub fn estimate(
    fields: &FieldParams,
    model: &PotentialModel,
    basis: &BasisSpec,
    seed: &ImpurityLevel,
    eps: f64,
    params: &ResonanceParams,
) -> Result<Vec<ResonanceEstimate>> {
    let h = assemble_h(fields, model, basis)?;
    let noise = NOISE_FLOOR * h.max_abs();
    let window = SearchWindow::new(seed, fields, eps, params, noise);
    let pairs = eig_dense(&h.matrix)?;
    let eigs: Vec<C64> = pairs.iter().map(|p| p.lambda).collect();
    let found = locate_resonance(&eigs, seed, &window)?;

    let b = fields.translation;
    let doubled = FieldParams {
        translation: 2.0 * b,
        ..*fields
    };
    let b_run = if 2.0 * b < model.strip() {
        Some(rerun(&doubled, model, basis, seed, eps, params)?)
    } else {
        None
    };
    let n_run = rerun(
        fields,
        model,
        &basis.bumped(params.basis_bump),
        seed,
        eps,
        params,
    )?;

    let bf = b * fields.electric;
    Ok(found
        .into_iter()
        .map(|e| {
            let (gamma, tau) = width_and_lifetime(e, noise);
            let delta_b = b_run
                .as_ref()
                .and_then(|(ev, w)| nearest(ev, e, w))
                .map_or(f64::NAN, |z| (z - e).norm());
            let delta_n = nearest(&n_run.0, e, &n_run.1).map_or(f64::NAN, |z| (z - e).norm());
            let continuum_gap = e.im + bf;
            let mut flags = Vec::new();
            if e.im > noise || e.im <= -bf - noise {
                flags.push(EstimateFlag::StripViolation);
            }
            if continuum_gap < CONTINUUM_MARGIN * bf {
                flags.push(EstimateFlag::ContinuumClose);
            }
            let tol = (STABILITY_REL * gamma).max(STABILITY_ABS);
            if delta_b.is_nan() || delta_n.is_nan() {
                flags.push(EstimateFlag::RerunMissing);
            }
            if delta_b > tol {
                flags.push(EstimateFlag::TranslationUnstable);
            }
            if delta_n > tol {
                flags.push(EstimateFlag::BasisUnstable);
            }
            if gamma <= noise {
                flags.push(EstimateFlag::BelowNoiseFloor);
            }
            ResonanceEstimate {
                e,
                gamma,
                tau,
                e_alpha_seed: seed.e_alpha,
                delta_b,
                delta_n,
                continuum_gap,
                fields: *fields,
                noise_floor: noise,
                flags,
            }
        })
        .collect())
}

/// Comparison of the reference Hamiltonian `H_2(F, ib)` with `H(F, ib)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Report {
    pub fields: FieldParams,
    pub e_alpha: f64,
    /// Eigenvalues of `H_2(F, ib)` assigned to the level.
    pub lambda: Vec<C64>,
    /// Their counterparts in `H_2(F, 0)`.
    pub lambda_real: Vec<f64>,
    /// Weight of each assigned eigenvector in the unperturbed eigenspace.
    pub weight: Vec<f64>,
    /// `max |Im lambda|` over the assigned eigenvalues.
    pub max_im: f64,
    /// `REALITY_TOL * ||H_2||_max`.
    pub im_tolerance: f64,
    /// `max |lambda - lambda_real|`.
    pub real_mismatch: f64,
    /// `|lambda_alpha - e_alpha|` and its ratio to `F^eps`.
    pub shift: f64,
    pub shift_over_f_eps: f64,
    /// `|<v_2, v>|` for the unit eigenvectors of `H_2(F, ib)` and of the
    /// resonance of `H(F, ib)`; `None` when the window is empty.
    pub overlap: Option<f64>,
    pub pass: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Weight of `v` in the span of the orthonormal `basis`.
fn projected_weight(basis: &[Vec<C64>], v: &[C64]) -> f64 {
    basis.iter().map(|u| dot(u, v).norm_sqr()).sum()
}

/// Indices of the `k` vectors with the largest weight in `span`.
fn heaviest<'a, I>(span: &[Vec<C64>], vectors: I, k: usize) -> Vec<(usize, f64)>
where
    I: Iterator<Item = &'a [C64]>,
{
    let mut w: Vec<(usize, f64)> = vectors
        .enumerate()
        .map(|(i, v)| (i, projected_weight(span, v)))
        .collect();
    w.sort_by(|a, b| b.1.total_cmp(&a.1));
    w.truncate(k);
    w
}

/// Reality of the `H_2` eigenvalues continuing `e_alpha`, their distance to
/// `e_alpha`, and the eigenvector overlap with the resonance of `H(F, ib)`.
///
/// Eigenvalues are assigned to the level by the weight of their eigenvectors
/// in the eigenspace of `e_alpha` of `H(0)`, not by proximity: the local field
/// of `H_2` binds further states near `e_alpha` at the edge of the basis.
pub fn h2_crosscheck(
    fields: &FieldParams,
    model: &PotentialModel,
    schedule: &ScheduleParams,
    basis: &BasisSpec,
    seed: &ImpurityLevel,
    params: &ResonanceParams,
) -> Result<H2Report> {
    let k = seed.multiplicity.max(1);
    let h0 = assemble_h(&FieldParams::new(fields.magnetic, 0.0, 0.0), model, basis)?;
    let mut unperturbed = eig_hermitian(&h0.matrix)?;
    unperturbed.sort_by(|a, b| {
        (a.0 - seed.e_alpha)
            .abs()
            .total_cmp(&(b.0 - seed.e_alpha).abs())
    });
    let span: Vec<Vec<C64>> = unperturbed.into_iter().take(k).map(|p| p.1).collect();

    let h2 = assemble_h2(fields, model, schedule, basis)?;
    let pairs = eig_dense(&h2.matrix)?;
    let assigned = heaviest(&span, pairs.iter().map(|p| p.vector.as_slice()), k);
    let real_fields = FieldParams {
        translation: 0.0,
        ..*fields
    };
    let h2_real = assemble_h2(&real_fields, model, schedule, basis)?;
    let real_pairs = eig_hermitian(&h2_real.matrix)?;
    let assigned_real = heaviest(&span, real_pairs.iter().map(|p| p.1.as_slice()), k);

    let mut lambda: Vec<C64> = assigned.iter().map(|&(i, _)| pairs[i].lambda).collect();
    let weight = assigned.iter().map(|&(_, w)| w).collect();
    let mut lambda_real: Vec<f64> = assigned_real
        .iter()
        .map(|&(i, _)| real_pairs[i].0)
        .collect();
    let by_re = |a: &C64, b: &C64| a.re.total_cmp(&b.re);
    lambda.sort_by(by_re);
    lambda_real.sort_by(f64::total_cmp);
    let real_mismatch = lambda
        .iter()
        .zip(&lambda_real)
        .map(|(z, r)| (z - r).norm())
        .fold(0.0, f64::max);
    let max_im = lambda.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let im_tolerance = REALITY_TOL * h2.max_abs();
    let lead = pairs[assigned[0].0].lambda;
    let shift = (lead - seed.e_alpha).norm();
    let f_eps = fields.electric.powf(schedule.eps);
    let shift_over_f_eps = if f_eps > 0.0 { shift / f_eps } else { 0.0 };

    let h = assemble_h(fields, model, basis)?;
    let window = SearchWindow::new(
        seed,
        fields,
        schedule.eps,
        params,
        NOISE_FLOOR * h.max_abs(),
    );
    let full = eig_dense(&h.matrix)?;
    let in_window: Vec<&EigenPair> = full.iter().filter(|p| window.contains(p.lambda)).collect();
    let overlap = heaviest(&span, in_window.iter().map(|p| p.vector.as_slice()), 1)
        .first()
        .map(|&(i, _)| dot(&pairs[assigned[0].0].vector, &in_window[i].vector).norm());
    Ok(H2Report {
        fields: *fields,
        e_alpha: seed.e_alpha,
        pass: max_im <= im_tolerance && real_mismatch <= 1e-8,
        lambda,
        lambda_real,
        weight,
        max_im,
        im_tolerance,
        real_mismatch,
        shift,
        shift_over_f_eps,
        overlap,
    })
}

/// Envelope `|lambda_alpha(F) - e_alpha| <= c F^eps` across a list of fields:
/// returns the smallest admissible `c` and whether the shift decreases with `F`.
pub fn convergence_envelope(shifts: &[(f64, f64)], eps: f64) -> (f64, bool) {
    let c = shifts
        .iter()
        .map(|&(f, s)| s / f.powf(eps))
        .fold(0.0, f64::max);
    let mut sorted = shifts.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[0].1 < w[1].1);
    (c, monotone)
}
