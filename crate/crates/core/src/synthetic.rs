//! Generated corpora with planted lexical and emotional signal, plus
//! matching word vectors, for end-to-end tests and benchmarks.
//!
//! Two tasks:
//!
//! * [`keyword_corpus`]: offensive iff the post contains an insult **and**
//!   carries an angry emotion vector. Insults with a happy vector (banter)
//!   and angry posts without insults are neutral.
//! * [`ambiguous_corpus`]: every post contains one insult and one praise
//!   word; only the emotion vector tells the classes apart.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::layers::EMOJI_DIM;
use crate::preprocess::vocab::oov_row;
use crate::preprocess::{Document, Glove, Label};
use crate::rng::{seeded, SeededRng};

pub const INSULTS: [&str; 8] = ["vile", "scum", "moron", "idiot", "loser", "creep", "trash", "clown"];
pub const PRAISE: [&str; 8] = ["lovely", "brilliant", "kind", "sweet", "great", "amazing", "gentle", "wonderful"];
pub const ANGRY_EMOJIS: [usize; 8] = [32, 33, 37, 39, 43, 44, 55, 58];
pub const HAPPY_EMOJIS: [usize; 8] = [0, 8, 10, 16, 17, 21, 25, 28];
pub const CALM_EMOJIS: [usize; 8] = [2, 5, 12, 30, 47, 50, 61, 62];
pub const FILLER_WORDS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mood {
    Angry,
    Happy,
    Calm,
}

impl Mood {
    fn group(self) -> &'static [usize; 8] {
        match self {
            Mood::Angry => &ANGRY_EMOJIS,
            Mood::Happy => &HAPPY_EMOJIS,
            Mood::Calm => &CALM_EMOJIS,
        }
    }
}

pub fn filler(i: usize) -> String {
    format!("w{i}")
}

/// Every word the generators can emit.
pub fn lexicon() -> Vec<String> {
    (0..FILLER_WORDS)
        .map(filler)
        .chain(INSULTS.iter().chain(&PRAISE).map(|w| w.to_string()))
        .collect()
}

/// Vectors for the whole lexicon in `[-0.5, 0.5]`, deterministic in `seed`.
/// Like pre-trained vectors, words of one class cluster: insults and praise
/// words are their class centroid plus an equal-weight private component,
/// filler words are private components only.
pub fn synthetic_glove(dim: usize, seed: u64) -> Glove {
    let noise = |w: &str| -> Vec<f64> { oov_row(seed, w, dim).into_iter().map(|x| x * 10.0).collect() };
    let mut g = Glove::new(dim);
    for (class, words) in [("<insult>", &INSULTS), ("<praise>", &PRAISE)] {
        let centroid = noise(class);
        for w in words.iter() {
            let v = centroid.iter().zip(noise(w)).map(|(c, x)| 0.5 * (c + x)).collect();
            g.vectors.insert(w.to_string(), v);
        }
    }
    for w in (0..FILLER_WORDS).map(filler) {
        let v = noise(&w);
        g.vectors.insert(w, v);
    }
    g
}

/// A probability vector whose top five entries are drawn from the mood's
/// emoji group.
pub fn emotion_vector(mood: Mood, rng: &mut SeededRng) -> Vec<f64> {
    let mut p: Vec<f64> = (0..EMOJI_DIM).map(|_| rng.random_range(0.0..0.004)).collect();
    let mut group = mood.group().to_vec();
    group.shuffle(rng);
    for &i in &group[..5] {
        p[i] += rng.random_range(0.08..0.2);
    }
    let total: f64 = p.iter().sum();
    p.into_iter().map(|x| x / total).collect()
}

fn filler_words(len: usize, rng: &mut SeededRng) -> Vec<String> {
    (0..len).map(|_| filler(rng.random_range(0..FILLER_WORDS))).collect()
}

fn plant(words: &mut [String], word: &str, rng: &mut SeededRng) -> usize {
    let at = rng.random_range(0..words.len());
    words[at] = word.to_string();
    at
}

fn make_doc(i: usize, words: Vec<String>, label: Label, mood: Mood, rng: &mut SeededRng) -> Document {
    Document::new(format!("syn{i:05}"), words.join(" "), label)
        .with_emoji(emotion_vector(mood, rng))
        .expect("valid emotion vector")
}

/// Post lengths are uniform in `lengths`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSpec {
    pub n_docs: usize,
    pub offensive_ratio: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_docs: 2000,
            offensive_ratio: 0.157,
            min_len: 8,
            max_len: 16,
            seed: 0,
        }
    }
}

pub fn keyword_corpus(spec: &CorpusSpec) -> Vec<Document> {
    let mut rng = seeded(spec.seed);
    let n_off = (spec.n_docs as f64 * spec.offensive_ratio).round() as usize;
    let mut docs = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        let len = rng.random_range(spec.min_len..=spec.max_len);
        let mut words = filler_words(len, &mut rng);
        let (label, mood) = if i < n_off {
            plant(&mut words, INSULTS.choose(&mut rng).expect("non-empty"), &mut rng);
            (Label::Offensive, Mood::Angry)
        } else {
            match i % 4 {
                // banter: insult word, happy emotion
                0 => {
                    plant(&mut words, INSULTS.choose(&mut rng).expect("non-empty"), &mut rng);
                    (Label::Neutral, Mood::Happy)
                }
                // angry without an insult
                1 => (Label::Neutral, Mood::Angry),
                2 => (Label::Neutral, Mood::Happy),
                _ => (Label::Neutral, Mood::Calm),
            }
        };
        docs.push(make_doc(i, words, label, mood, &mut rng));
    }
    docs.shuffle(&mut rng);
    docs
}

/// Balanced corpus where every post holds one insult and one praise word at
/// distinct positions; offensive posts are angry, neutral ones happy.
pub fn ambiguous_corpus(spec: &CorpusSpec) -> Vec<Document> {
    let mut rng = seeded(spec.seed);
    let mut docs = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        let len = rng.random_range(spec.min_len.max(2)..=spec.max_len.max(2));
        let mut words = filler_words(len, &mut rng);
        let a = plant(&mut words, INSULTS.choose(&mut rng).expect("non-empty"), &mut rng);
        let mut b = rng.random_range(0..len - 1);
        if b >= a {
            b += 1;
        }
        words[b] = PRAISE.choose(&mut rng).expect("non-empty").to_string();
        let (label, mood) = if i % 2 == 0 {
            (Label::Offensive, Mood::Angry)
        } else {
            (Label::Neutral, Mood::Happy)
        };
        docs.push(make_doc(i, words, label, mood, &mut rng));
    }
    docs.shuffle(&mut rng);
    docs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::corpus_stats;
    use crate::preprocess::emotion::top5_indices;

    #[test]
    fn keyword_corpus_shape() {
        let docs = keyword_corpus(&CorpusSpec::default());
        assert_eq!(docs.len(), 2000);
        assert_eq!(corpus_stats(&docs).negativity_percent(), "15.70%");
        for d in &docs {
            let insult = d.tokens.iter().any(|t| INSULTS.contains(&t.as_str()));
            let top = top5_indices(d.emoji_probs.as_ref().unwrap());
            let angry = top.iter().all(|i| ANGRY_EMOJIS.contains(i));
            assert_eq!(d.label == Label::Offensive, insult && angry, "{}", d.text);
        }
        assert_eq!(docs, keyword_corpus(&CorpusSpec::default()));
    }

    #[test]
    fn ambiguous_corpus_hides_label_in_emotion() {
        let docs = ambiguous_corpus(&CorpusSpec {
            n_docs: 200,
            ..CorpusSpec::default()
        });
        assert_eq!(corpus_stats(&docs).offensive, 100);
        for d in &docs {
            assert_eq!(d.tokens.iter().filter(|t| INSULTS.contains(&t.as_str())).count(), 1);
            assert_eq!(d.tokens.iter().filter(|t| PRAISE.contains(&t.as_str())).count(), 1);
        }
    }

    #[test]
    fn glove_covers_lexicon() {
        let g = synthetic_glove(8, 1);
        assert_eq!(g.vectors.len(), FILLER_WORDS + 16);
        assert!(g.vectors.values().flatten().all(|x| x.abs() <= 0.5));
        let dot = |a: &str, b: &str| -> f64 { g.vectors[a].iter().zip(&g.vectors[b]).map(|(x, y)| x * y).sum() };
        let within: f64 = INSULTS[1..].iter().map(|w| dot("vile", w)).sum::<f64>() / 7.0;
        let across: f64 = PRAISE.iter().map(|w| dot("vile", w)).sum::<f64>() / 8.0;
        assert!(within > across, "{within} vs {across}");
    }
}
