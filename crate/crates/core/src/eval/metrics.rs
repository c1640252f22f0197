//! Confusion counts, F1, macro F1 and ROC AUC. The offensive class is the
//! positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::parallel::Exec;
use crate::preprocess::{Document, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn n(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts seen from `class` as the positive class.
    fn oriented(&self, class: Label) -> (usize, usize, usize) {
        match class {
            Label::Offensive => (self.tp, self.fp, self.fn_),
            Label::Neutral => (self.tn, self.fn_, self.fp),
        }
    }
}

pub fn confusion(gold: &[Label], pred: &[Label]) -> Result<Confusion> {
    if gold.len() != pred.len() {
        return Err(Error::invalid(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let mut c = Confusion::default();
    for (g, p) in gold.iter().zip(pred) {
        match (g, p) {
            (Label::Offensive, Label::Offensive) => c.tp += 1,
            (Label::Neutral, Label::Offensive) => c.fp += 1,
            (Label::Offensive, Label::Neutral) => c.fn_ += 1,
            (Label::Neutral, Label::Neutral) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision(c: &Confusion, class: Label) -> f64 {
    let (tp, fp, _) = c.oriented(class);
    ratio(tp, tp + fp)
}

pub fn recall(c: &Confusion, class: Label) -> f64 {
    let (tp, _, fn_) = c.oriented(class);
    ratio(tp, tp + fn_)
}

/// `2PR / (P + R)`; zero whenever a denominator is zero.
pub fn f1(c: &Confusion, class: Label) -> f64 {
    let (p, r) = (precision(c, class), recall(c, class));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn macro_f1(c: &Confusion) -> f64 {
    (f1(c, Label::Neutral) + f1(c, Label::Offensive)) / 2.0
}

/// Probability that a random offensive document outscores a random neutral
/// one, ties counting one half; computed from mid-ranks.
pub fn roc_auc(scores: &[f64], gold: &[Label]) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::invalid(format!("{} scores for {} labels", scores.len(), gold.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = gold.iter().filter(|&&g| g == Label::Offensive).count();
    let neg = gold.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("AUC needs both classes in the gold labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block shares the mean rank
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * order[i..=j].iter().filter(|&&k| gold[k] == Label::Offensive).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassScores {
    fn of(c: &Confusion, class: Label) -> Self {
        Self {
            precision: precision(c, class),
            recall: recall(c, class),
            f1: f1(c, class),
        }
    }
}

/// Field order follows the usual results table: offensive F1 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1: f64,
    pub macro_f1: f64,
    /// `None` when the gold labels hold a single class.
    pub auc: Option<f64>,
    pub n: usize,
    pub confusion: Confusion,
    pub offensive: ClassScores,
    pub neutral: ClassScores,
}

impl MetricsReport {
    pub fn new(gold: &[Label], pred: &[Label], scores: &[f64]) -> Result<Self> {
        if gold.is_empty() {
            return Err(Error::Empty("no documents to evaluate"));
        }
        let c = confusion(gold, pred)?;
        let both = gold.contains(&Label::Offensive) && gold.contains(&Label::Neutral);
        Ok(Self {
            f1: f1(&c, Label::Offensive),
            macro_f1: macro_f1(&c),
            auc: if both { Some(roc_auc(scores, gold)?) } else { None },
            n: c.n(),
            confusion: c,
            offensive: ClassScores::of(&c, Label::Offensive),
            neutral: ClassScores::of(&c, Label::Neutral),
        })
    }
}

pub fn evaluate(model: &Model, docs: &[Document], exec: Exec) -> Result<MetricsReport> {
    if docs.is_empty() {
        return Err(Error::Empty("no documents to evaluate"));
    }
    let p = model.predict(docs, exec)?;
    let gold: Vec<Label> = docs.iter().map(|d| d.label).collect();
    MetricsReport::new(&gold, &p.labels, &p.scores)
}
