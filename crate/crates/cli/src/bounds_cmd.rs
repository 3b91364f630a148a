//! `bounds`: expand the plan and evaluate every bound without training.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use qhm_core::bounds::corollary2_case;
use qhm_core::BoundReport;

use crate::config::RunConfig;
use crate::output::write_json;
use crate::run::bound_report;
use crate::CliError;

pub const BOUNDS_JSON: &str = "bounds.json";

#[derive(Debug, Clone, Serialize)]
pub struct BoundsOutput {
    pub config_hash: String,
    pub report: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Reasons for a non-zero exit, empty when every applicable check holds.
    pub failures: Vec<String>,
}

impl BoundsOutput {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn execute_bounds(cfg: &RunConfig) -> Result<(BoundsOutput, PathBuf), CliError> {
    let v = cfg.validate()?;
    let problem = cfg.problem.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let (report, note) = bound_report(cfg, &v.set, &v.plan, problem.as_ref())?;
    let mut failures = Vec::new();
    if let Some(r) = &report {
        for (name, entry) in [("corollary 1", &r.thm1.corollary), ("corollary 2", &r.thm2.corollary)] {
            if entry.dominated == Some(false) {
                failures.push(format!("{name}: an exact sum exceeds its closed-form bound"));
            }
        }
        // the step condition only binds for schedules the second theorem targets
        if let (Some(k), Ok(_)) = (r.thm2.first_violation, corollary2_case(&v.set)) {
            failures.push(format!(
                "beta_k (alpha_k / 2 + 1) <= 1 fails first at step {k} (alpha = {}, beta = {})",
                v.plan.alpha[k], v.plan.beta[k]
            ));
        }
    }
    let out = BoundsOutput { config_hash: cfg.hash_hex(), report, note, failures };
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join(BOUNDS_JSON);
    write_json(&path, &out)?;
    Ok((out, path))
}
