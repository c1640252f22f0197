//! McNemar's test for two classifiers on the same documents.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::preprocess::Label;

/// At or above this many discordant pairs the χ² approximation is used;
/// below it, the exact binomial test.
pub const EXACT_THRESHOLD: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// A right, B wrong.
    pub b: usize,
    /// A wrong, B right.
    pub c: usize,
    /// Continuity-corrected `(|b − c| − 1)² / (b + c)`.
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided exact binomial p-value for `k` successes out of `n` at 1/2.
pub fn exact_binomial_p(k: usize, n: usize) -> f64 {
    let lo = k.min(n - k);
    // C(n, i) / 2^n accumulated in f64; n stays below the threshold here
    // but the recurrence is exact enough far beyond it.
    let mut term = 0.5f64.powi(n as i32);
    let mut tail = 0.0;
    for i in 0..=lo {
        tail += term;
        term *= (n - i) as f64 / (i + 1) as f64;
    }
    (2.0 * tail).min(1.0)
}

pub fn mcnemar_counts(b: usize, c: usize) -> McNemar {
    let n = b + c;
    if n == 0 {
        return McNemar {
            b,
            c,
            statistic: 0.0,
            p_value: 1.0,
            exact: false,
        };
    }
    let d = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    let statistic = d * d / n as f64;
    let exact = n < EXACT_THRESHOLD;
    let p_value = if exact {
        exact_binomial_p(b, n)
    } else {
        ChiSquared::new(1.0).expect("one degree of freedom").sf(statistic)
    };
    McNemar {
        b,
        c,
        statistic,
        p_value,
        exact,
    }
}

/// Compares systems `a` and `b` against `gold`.
pub fn mcnemar(gold: &[Label], a: &[Label], b: &[Label]) -> Result<McNemar> {
    if gold.len() != a.len() || gold.len() != b.len() {
        return Err(Error::invalid(format!(
            "prediction lengths differ: gold {}, a {}, b {}",
            gold.len(),
            a.len(),
            b.len()
        )));
    }
    let (mut nb, mut nc) = (0, 0);
    for ((g, x), y) in gold.iter().zip(a).zip(b) {
        match (x == g, y == g) {
            (true, false) => nb += 1,
            (false, true) => nc += 1,
            _ => {}
        }
    }
    Ok(mcnemar_counts(nb, nc))
}
