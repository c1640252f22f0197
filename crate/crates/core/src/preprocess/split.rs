//! Stratified train/validation/test partitioning.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::preprocess::{Document, Label};
use crate::rng::seeded;

/// 70:30 train/test, then 80:20 train/validation.
pub const DEFAULT_RATIOS: [f64; 3] = [0.56, 0.14, 0.30];

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<Document>,
    pub val: Vec<Document>,
    pub test: Vec<Document>,
}

/// Splits `n` items by `ratios`: floors first, then the remaining items go
/// to the largest fractional parts (earlier split on ties).
pub fn allocate(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let total: f64 = ratios.iter().sum();
    let quotas: Vec<f64> = ratios.iter().map(|r| n as f64 * r / total).collect();
    let mut counts: [usize; 3] = [0; 3];
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = (q + 1e-9).floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    let frac = |i: usize| quotas[i] - counts[i] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Per-class proportional split, deterministic in `seed`. Each output keeps
/// the input order.
pub fn stratified_split(docs: &[Document], ratios: [f64; 3], seed: u64) -> Result<Splits> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || ratios.iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid(format!("bad split ratios {ratios:?}")));
    }
    let mut rng = seeded(seed);
    let mut assignment = vec![0usize; docs.len()];
    for class in Label::ALL {
        let mut members: Vec<usize> = (0..docs.len()).filter(|&i| docs[i].label == class).collect();
        if members.len() < 3 {
            return Err(Error::invalid(format!(
                "class {class} has {} documents; at least 3 are needed to split",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let counts = allocate(members.len(), &ratios);
        let mut it = members.into_iter();
        for (split, &c) in counts.iter().enumerate() {
            for i in it.by_ref().take(c) {
                assignment[i] = split;
            }
        }
    }
    let pick = |s: usize| -> Vec<Document> {
        docs.iter()
            .zip(&assignment)
            .filter(|(_, &a)| a == s)
            .map(|(d, _)| d.clone())
            .collect()
    };
    Ok(Splits {
        train: pick(0),
        val: pick(1),
        test: pick(2),
    })
}
