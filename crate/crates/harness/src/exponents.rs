//! Closed-form regret-rate exponents for the settings this library covers,
//! alongside previously known rates, for plotting and sanity checks.
//!
//! Every rate has the shape `d^a · (log n)^b · T^c` (with `a = b = 0` where a
//! factor does not appear); Matérn rates fold the smoothness ν and dimension
//! d into the T-exponent.

use serde::Serialize;

use crate::error::{HarnessError, Result};

/// One regret rate: `d^{d_exponent} · (log n)^{log_n_exponent} ·
/// T^{t_exponent}`, up to polylogarithmic factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEntry {
    /// Which problem class the rate applies to: "general", "finite-arms",
    /// "matern", or "mab".
    pub setting: String,
    /// "ours" for rates this library's algorithm targets, "known" for
    /// previously established comparison rates.
    pub source: String,
    /// "upper" or "lower".
    pub bound: String,
    pub d_exponent: f64,
    pub log_n_exponent: f64,
    pub t_exponent: f64,
}

impl ExponentEntry {
    /// Numeric value of the rate at a concrete (d, n, T), for curve plotting.
    pub fn evaluate(&self, d: usize, n: Option<usize>, t: f64) -> f64 {
        let log_n = n.map_or(1.0, |n| (n as f64).ln().max(1.0));
        (d as f64).powf(self.d_exponent)
            * log_n.powf(self.log_n_exponent)
            * t.powf(self.t_exponent)
    }
}

/// All rates for one (ε, d) pair, plus optional finite-arm and Matérn rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub epsilon: f64,
    pub d: usize,
    pub nu: Option<f64>,
    pub n: Option<usize>,
    pub entries: Vec<ExponentEntry>,
}

impl ExponentReport {
    pub fn find(&self, setting: &str, source: &str, bound: &str) -> Option<&ExponentEntry> {
        self.entries
            .iter()
            .find(|e| e.setting == setting && e.source == source && e.bound == bound)
    }
}

/// Computes the rate table. `nu` adds the Matérn rows (they need both ν and
/// d); `n` adds the finite-arm rows.
pub fn theory_exponents(
    epsilon: f64,
    d: usize,
    nu: Option<f64>,
    n: Option<usize>,
) -> Result<ExponentReport> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(HarnessError::config(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if d == 0 {
        return Err(HarnessError::config("d must be positive"));
    }
    if let Some(nu) = nu {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(HarnessError::config(format!(
                "nu must be finite and positive, got {nu}"
            )));
        }
    }
    if let Some(n) = n {
        if n < 2 {
            return Err(HarnessError::config("n must be at least 2"));
        }
    }

    let q = 1.0 + epsilon;
    let t_exp = 1.0 / q; // shared by every non-Matérn rate
    let entry = |setting: &str, source: &str, bound: &str, de: f64, le: f64, te: f64| {
        ExponentEntry {
            setting: setting.into(),
            source: source.into(),
            bound: bound.into(),
            d_exponent: de,
            log_n_exponent: le,
            t_exponent: te,
        }
    };

    let mut entries = vec![
        entry("general", "ours", "upper", (1.0 + 3.0 * epsilon) / (2.0 * q), 0.0, t_exp),
        entry("general", "ours", "lower", 2.0 * epsilon / q, 0.0, t_exp),
        entry("general", "known", "upper", 1.0, 0.0, t_exp),
        entry("general", "known", "lower", epsilon / q, 0.0, t_exp),
        entry("mab", "ours", "upper", epsilon / q, 0.0, t_exp),
        entry("mab", "known", "lower", epsilon / q, 0.0, t_exp),
    ];

    if n.is_some() {
        entries.push(entry("finite-arms", "ours", "upper", 0.5, epsilon / q, t_exp));
        entries.push(entry("finite-arms", "ours", "lower", epsilon / q, epsilon / q, t_exp));
        entries.push(entry("finite-arms", "known", "upper", 0.5, 0.5, t_exp));
    }

    if let Some(nu) = nu {
        let df = d as f64;
        let smoothing = 2.0 * nu / (2.0 * nu + df);
        entries.push(entry(
            "matern",
            "ours",
            "upper",
            0.0,
            0.0,
            1.0 - (epsilon / q) * smoothing,
        ));
        entries.push(entry(
            "matern",
            "known",
            "upper",
            0.0,
            0.0,
            (2.0 + epsilon) / (2.0 * q) + df / (2.0 * nu + df),
        ));
        entries.push(entry(
            "matern",
            "known",
            "lower",
            0.0,
            0.0,
            (nu + df * epsilon) / (nu * q + df * epsilon),
        ));
    }

    Ok(ExponentReport { epsilon, d, nu, n, entries })
}
