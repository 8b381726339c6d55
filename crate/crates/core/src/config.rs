//! Run configuration: strict JSON schema, defaults and aggregated validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::bounds::VerificationReport;
use crate::error::{Error, Result};
use crate::model::{FieldParams, PotentialModel, ScheduleParams};
use crate::resonance::{ResonanceParams, TranslationPolicy};
use crate::sweep::{SweepSpec, DEFAULT_F_GRID};

/// Largest electric field accepted anywhere in a configuration.
pub const F_MAX: f64 = 0.6;
/// Default electric fields of the bound verification.
pub const DEFAULT_BOUNDS_F: [f64; 5] = [0.2, 0.25, 0.3, 0.4, 0.5];

/// Single-point field settings used by `levels`, `solve` and `h2-compare`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub magnetic: f64,
    pub electric: f64,
    /// Explicit translation; `None` applies the b-policy.
    pub translation: Option<f64>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            magnetic: 1.0,
            electric: 0.4,
            translation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub sweep_csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Which bound checks `verify-bounds` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSelection {
    pub j0: bool,
    pub hf: bool,
    pub partition: bool,
    pub a2: bool,
    pub localfield: bool,
}

impl Default for CheckSelection {
    fn default() -> Self {
        Self {
            j0: true,
            hf: true,
            partition: true,
            a2: true,
            localfield: true,
        }
    }
}

impl CheckSelection {
    /// Whether the check with report name `name` is selected.
    pub fn allows(&self, name: &str) -> bool {
        match name {
            "j0-envelope" => self.j0,
            "hF-envelope" | "one-minus-hF" => self.hf,
            "partition-defect" => self.partition,
            "a2-product" => self.a2,
            "local-field-norm" => self.localfield,
            _ => true,
        }
    }

    /// Drops unselected checks and recomputes the overall verdict.
    pub fn apply(&self, mut report: VerificationReport) -> VerificationReport {
        report.pointwise.retain(|r| self.allows(&r.check));
        report.trends.retain(|t| self.allows(&t.check));
        report.pass =
            report.pointwise.iter().all(|r| r.pass) && report.trends.iter().all(|t| t.pass);
        report
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub field: FieldConfig,
    pub potential: PotentialModel,
    pub schedule: ScheduleParams,
    pub basis: BasisSpec,
    pub resonance: ResonanceParams,
    pub b_policy: TranslationPolicy,
    /// Electric fields of a sweep.
    pub f_list: Vec<f64>,
    /// Magnetic fields of a sweep.
    pub b_list: Vec<f64>,
    /// Impurity level followed, lowest first.
    pub level: usize,
    /// Fixed exponent for `fit`; `None` fits `p`.
    pub fix_p: Option<f64>,
    pub bounds_f_list: Vec<f64>,
    pub checks: CheckSelection,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            field: FieldConfig::default(),
            potential: PotentialModel::default(),
            schedule: ScheduleParams::default(),
            basis: BasisSpec::default(),
            resonance: ResonanceParams::default(),
            b_policy: TranslationPolicy::default(),
            f_list: DEFAULT_F_GRID.to_vec(),
            b_list: vec![1.0],
            level: 0,
            fix_p: None,
            bounds_f_list: DEFAULT_BOUNDS_F.to_vec(),
            checks: CheckSelection::default(),
            output: OutputPaths::default(),
        }
    }
}

fn check_list(name: &str, xs: &[f64], lo: f64, hi: f64, errs: &mut Vec<String>) {
    if xs.is_empty() {
        errs.push(format!("{name} must not be empty"));
    }
    for &x in xs {
        if !(x > lo && x <= hi) {
            errs.push(format!("{name} entry {x} outside ({lo}, {hi}]"));
        }
    }
}

impl RunConfig {
    /// Translation for field `f` under the configured policy, unless overridden.
    pub fn translation(&self, f: f64) -> f64 {
        self.field.translation.unwrap_or_else(|| {
            self.b_policy
                .translation(f, &self.schedule, &self.resonance)
        })
    }

    /// Fields of the single-point commands.
    pub fn fields(&self) -> FieldParams {
        FieldParams::new(
            self.field.magnetic,
            self.field.electric,
            self.translation(self.field.electric),
        )
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            f_list: self.f_list.clone(),
            b_list: self.b_list.clone(),
            model: self.potential,
            schedule: self.schedule,
            basis: self.basis,
            params: self.resonance,
            policy: self.b_policy,
            level: self.level,
        }
    }

    /// Every violated constraint, one message each.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        errs.extend(self.potential.validate());
        errs.extend(self.schedule.validate());
        errs.extend(self.basis.validate());
        errs.extend(self.resonance.validate());
        let f = &self.field;
        if !(f.magnetic > 0.0 && f.magnetic.is_finite()) {
            errs.push(format!("field.magnetic = {} must be positive", f.magnetic));
        }
        if !(f.electric >= 0.0 && f.electric <= F_MAX) {
            errs.push(format!(
                "field.electric = {} outside [0, {F_MAX}]",
                f.electric
            ));
        }
        if let Some(b) = f.translation {
            if !(b >= 0.0 && b.is_finite()) {
                errs.push(format!("field.translation = {b} must be non-negative"));
            }
        }
        check_list("f_list", &self.f_list, 0.0, F_MAX, &mut errs);
        check_list("b_list", &self.b_list, 0.0, f64::MAX, &mut errs);
        check_list("bounds_f_list", &self.bounds_f_list, 0.0, F_MAX, &mut errs);
        if let Some(p) = self.fix_p {
            if !(p > 0.0 && p.is_finite()) {
                errs.push(format!("fix_p = {p} must be positive"));
            }
        }
        // Translation domain: the potential strip for every run, and the
        // cutoff strip gamma_F b < pi/4 wherever H_2 or the bounds are built.
        let strip = self.potential.strip();
        let mut fs: Vec<f64> = self.f_list.clone();
        fs.push(f.electric);
        for &ff in fs.iter().filter(|&&ff| ff > 0.0) {
            let b = self.translation(ff);
            if b >= strip {
                errs.push(format!(
                    "translation b = {b} at F = {ff} is not below the potential strip {strip}"
                ));
            }
        }
        if self.schedule.validate().is_empty() {
            for &ff in self
                .bounds_f_list
                .iter()
                .filter(|&&ff| ff > 0.0 && ff <= F_MAX)
            {
                if let Err(e) = self.schedule.check_translation(ff) {
                    errs.push(e.to_string());
                }
            }
            if f.electric > 0.0 {
                let b = self.translation(f.electric);
                let gb = self.schedule.gamma(f.electric) * b;
                if self.b_policy == TranslationPolicy::Schedule && gb >= std::f64::consts::FRAC_PI_4
                {
                    errs.push(format!(
                        "gamma_F b = {gb} at F = {} leaves the cutoff strip pi/4",
                        f.electric
                    ));
                }
            }
        }
        errs
    }
}

/// Parses and validates a JSON configuration. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(errs))
    }
}
