//! `convert`: SHB <-> NSHB hyperparameters at constant `(alpha, beta)`.

use clap::ValueEnum;
use serde::Serialize;

use qhm_core::optim::{nshb_from_shb, nshb_from_shb_coefficient_rule, shb_from_nshb, shb_from_nshb_coefficient_rule};

use crate::config::{ConfigError, FieldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shb,
    Nshb,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Hyper {
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Conversion {
    pub from: Hyper,
    /// Produces the same iterates as `from` on a shared gradient stream.
    pub to: Hyper,
    /// `beta_hat = beta / (1 - beta)` matching, which does not reproduce the
    /// iterates; shown so the two can be compared.
    pub coefficient_rule: Hyper,
}

fn invalid(field: &str, reason: String) -> ConfigError {
    ConfigError::Invalid(vec![FieldError { field: field.into(), reason }])
}

pub fn convert(from: Method, alpha: f64, beta: f64) -> Result<Conversion, ConfigError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", format!("must be finite and positive, got {alpha}")));
    }
    let (to, exact, rule) = match from {
        Method::Nshb => (Method::Shb, shb_from_nshb(alpha, beta), shb_from_nshb_coefficient_rule(alpha, beta)),
        Method::Shb => (Method::Nshb, nshb_from_shb(alpha, beta), nshb_from_shb_coefficient_rule(alpha, beta)),
    };
    let (a, b) = exact.map_err(|e| invalid("beta", e.to_string()))?;
    let (ra, rb) = rule.map_err(|e| invalid("beta", e.to_string()))?;
    Ok(Conversion {
        from: Hyper { method: from, alpha, beta },
        to: Hyper { method: to, alpha: a, beta: b },
        coefficient_rule: Hyper { method: to, alpha: ra, beta: rb },
    })
}
