//! Synthetic grounded-translation corpus.
//!
//! Source sentences are built from a closed token set and translate
//! token-for-token, except for a configurable set of ambiguous source
//! tokens: their target realization (one of `senses` variants) is decided
//! by a coin flip per sentence and is encoded *only* in a dedicated block
//! of the sentence's feature vector (plus Gaussian noise). A text-only
//! model can never beat chance on those positions; a model that reads the
//! features can solve them exactly.

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct SynthConfig {
    /// Number of sentence pairs to generate.
    pub sentences: usize,
    /// Count of unambiguous source token types.
    pub regular_tokens: usize,
    /// Count of ambiguous source token types (A).
    pub ambiguous_tokens: usize,
    /// Target realizations per ambiguous token.
    pub senses: usize,
    /// Inclusive sentence length range.
    pub len_range: (usize, usize),
    /// Chance that a sentence position draws an ambiguous token.
    pub ambiguous_prob: f64,
    /// Feature vector dimension.
    pub feat_dim: usize,
    /// Standard deviation of the Gaussian noise on the sense encoding.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sentences: 1000,
            regular_tokens: 20,
            ambiguous_tokens: 4,
            senses: 2,
            len_range: (4, 8),
            ambiguous_prob: 0.3,
            feat_dim: 64,
            noise: 0.1,
            seed: 1,
        }
    }
}

pub struct SynthOutput {
    pub src: Vec<Vec<String>>,
    pub tgt: Vec<Vec<String>>,
    /// Raw n×feat_dim feature rows (row-major), ready for `save_raw`.
    pub features: Vec<f32>,
    /// Target positions of ambiguous tokens, per sentence.
    pub annotations: Vec<Vec<usize>>,
    /// Ambiguous source token → its target sense realizations.
    pub lexicon: Vec<(String, Vec<String>)>,
}

pub fn src_regular(i: usize) -> String {
    format!("s{i}")
}

pub fn tgt_regular(i: usize) -> String {
    format!("t{i}")
}

pub fn src_ambiguous(a: usize) -> String {
    format!("amb{a}")
}

pub fn tgt_sense(a: usize, j: usize) -> String {
    format!("sns{a}_{j}")
}

/// Deterministically generate a corpus, its features and annotations.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    if cfg.sentences == 0 {
        return Err(Error::Config("synth: sentences must be positive".into()));
    }
    if cfg.regular_tokens == 0 {
        return Err(Error::Config("synth: need at least one regular token".into()));
    }
    if cfg.senses < 2 && cfg.ambiguous_tokens > 0 {
        return Err(Error::Config("synth: ambiguous tokens need ≥ 2 senses".into()));
    }
    if cfg.ambiguous_tokens * cfg.senses > cfg.feat_dim {
        return Err(Error::Config(format!(
            "synth: {} ambiguous tokens × {} senses exceed the {}-dim feature subspace",
            cfg.ambiguous_tokens, cfg.senses, cfg.feat_dim
        )));
    }
    if cfg.len_range.0 == 0 || cfg.len_range.0 > cfg.len_range.1 {
        return Err(Error::Config(format!(
            "synth: bad length range {:?}",
            cfg.len_range
        )));
    }
    if !(0.0..=1.0).contains(&cfg.ambiguous_prob) {
        return Err(Error::Config("synth: ambiguous_prob outside [0,1]".into()));
    }

    let mut rng = Rng::seed_from(cfg.seed);
    let n = cfg.sentences;
    let a_count = cfg.ambiguous_tokens;

    // balanced sense assignment: per ambiguous type, exactly half the
    // sentences (up to rounding) get each sense, in shuffled order, fully
    // independent of the sentence text
    let mut senses_per_type: Vec<Vec<u8>> = Vec::with_capacity(a_count);
    for _ in 0..a_count {
        let mut bits: Vec<u8> = (0..n).map(|i| (i % cfg.senses) as u8).collect();
        rng.shuffle(&mut bits);
        senses_per_type.push(bits);
    }

    let mut src = Vec::with_capacity(n);
    let mut tgt = Vec::with_capacity(n);
    let mut annotations = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * cfg.feat_dim);

    for s_idx in 0..n {
        let len = cfg.len_range.0 + rng.below(cfg.len_range.1 - cfg.len_range.0 + 1);
        let mut s_sent = Vec::with_capacity(len);
        let mut t_sent = Vec::with_capacity(len);
        let mut ann = Vec::new();
        for pos in 0..len {
            let ambiguous = a_count > 0 && rng.bernoulli(cfg.ambiguous_prob);
            if ambiguous {
                let a = rng.below(a_count);
                let sense = senses_per_type[a][s_idx] as usize;
                s_sent.push(src_ambiguous(a));
                t_sent.push(tgt_sense(a, sense));
                ann.push(pos);
            } else {
                let r = rng.below(cfg.regular_tokens);
                s_sent.push(src_regular(r));
                t_sent.push(tgt_regular(r));
            }
        }
        src.push(s_sent);
        tgt.push(t_sent);
        annotations.push(ann);

        // feature row: one block of `senses` dims per ambiguous type holds
        // a noisy one-hot of the sentence's sense; the rest is distractor
        let mut row = vec![0.0f32; cfg.feat_dim];
        for (a, bits) in senses_per_type.iter().enumerate() {
            let sense = bits[s_idx] as usize;
            for j in 0..cfg.senses {
                let base = if j == sense { 0.8 } else { 0.2 };
                row[a * cfg.senses + j] = (base + cfg.noise * rng.normal()) as f32;
            }
        }
        for slot in row.iter_mut().skip(a_count * cfg.senses) {
            *slot = rng.uniform() as f32;
        }
        features.extend_from_slice(&row);
    }

    let lexicon = (0..a_count)
        .map(|a| {
            (
                src_ambiguous(a),
                (0..cfg.senses).map(|j| tgt_sense(a, j)).collect(),
            )
        })
        .collect();

    Ok(SynthOutput {
        src,
        tgt,
        features,
        annotations,
        lexicon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn fixed_seed_is_byte_identical() {
        let cfg = SynthConfig::default();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.src, b.src);
        assert_eq!(a.tgt, b.tgt);
        assert_eq!(a.annotations, b.annotations);
        let ab: Vec<u8> = a.features.iter().flat_map(|f| f.to_le_bytes()).collect();
        let bb: Vec<u8> = b.features.iter().flat_map(|f| f.to_le_bytes()).collect();
        assert_eq!(ab, bb);
    }

    #[test]
    fn no_ambiguity_is_a_pure_substitution_cipher() {
        let cfg = SynthConfig {
            ambiguous_tokens: 0,
            ..SynthConfig::default()
        };
        let out = generate(&cfg).unwrap();
        for (s, t) in out.src.iter().zip(&out.tgt) {
            assert_eq!(s.len(), t.len());
            for (sw, tw) in s.iter().zip(t) {
                let i: usize = sw[1..].parse().unwrap();
                assert_eq!(*tw, tgt_regular(i));
            }
        }
        assert!(out.annotations.iter().all(|a| a.is_empty()));
    }

    #[test]
    fn noiseless_features_decide_senses_exactly() {
        // a trivial linear classifier on the sense block must reach 1.0
        let cfg = SynthConfig {
            sentences: 400,
            ambiguous_tokens: 1,
            noise: 0.0,
            ..SynthConfig::default()
        };
        let out = generate(&cfg).unwrap();
        let d = cfg.feat_dim;
        let mut checked = 0;
        for (i, (tgt, ann)) in out.tgt.iter().zip(&out.annotations).enumerate() {
            let row = &out.features[i * d..(i + 1) * d];
            // argmax over the block of type 0 = predicted sense
            let predicted = if row[0] > row[1] { 0 } else { 1 };
            for &pos in ann {
                assert_eq!(tgt[pos], tgt_sense(0, predicted));
                checked += 1;
            }
        }
        assert!(checked > 100, "too few ambiguous occurrences: {checked}");
    }

    #[test]
    fn oversized_sense_space_is_a_config_error() {
        let cfg = SynthConfig {
            ambiguous_tokens: 40,
            senses: 2,
            feat_dim: 64,
            ..SynthConfig::default()
        };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn senses_are_balanced_per_type() {
        let cfg = SynthConfig {
            sentences: 1000,
            ambiguous_tokens: 3,
            ..SynthConfig::default()
        };
        let out = generate(&cfg).unwrap();
        // reconstruct the sense of each type from feature blocks
        for a in 0..3 {
            let mut count1 = 0;
            for i in 0..cfg.sentences {
                let row = &out.features[i * cfg.feat_dim..(i + 1) * cfg.feat_dim];
                if row[a * 2 + 1] > row[a * 2] {
                    count1 += 1;
                }
            }
            // noise 0.1 against a 0.6 gap flips essentially nothing
            assert!((count1 as i64 - 500).abs() <= 20, "type {a}: {count1}");
        }
    }

    /// Discrete mutual-information estimate between the previous source
    /// token and the realized sense, in nats.
    fn mutual_information(samples: &[(String, u8)]) -> f64 {
        let n = samples.len() as f64;
        let mut joint: HashMap<(&str, u8), f64> = HashMap::new();
        let mut px: HashMap<&str, f64> = HashMap::new();
        let mut py: HashMap<u8, f64> = HashMap::new();
        for (x, y) in samples {
            *joint.entry((x.as_str(), *y)).or_insert(0.0) += 1.0;
            *px.entry(x.as_str()).or_insert(0.0) += 1.0;
            *py.entry(*y).or_insert(0.0) += 1.0;
        }
        joint
            .iter()
            .map(|(&(x, y), &c)| {
                let pxy = c / n;
                pxy * (pxy / (px[x] / n * py[&y] / n)).ln()
            })
            .sum()
    }

    #[test]
    fn sense_is_independent_of_source_context() {
        let cfg = SynthConfig {
            sentences: 8000,
            ambiguous_tokens: 1,
            regular_tokens: 12,
            ambiguous_prob: 0.35,
            ..SynthConfig::default()
        };
        let out = generate(&cfg).unwrap();
        let mut samples: Vec<(String, u8)> = Vec::new();
        for (i, (src, ann)) in out.src.iter().zip(&out.annotations).enumerate() {
            let row = &out.features[i * cfg.feat_dim..(i + 1) * cfg.feat_dim];
            let sense = if row[1] > row[0] { 1u8 } else { 0u8 };
            for &pos in ann {
                let prev = if pos == 0 { "^" } else { src[pos - 1].as_str() };
                samples.push((prev.to_string(), sense));
            }
        }
        assert!(samples.len() >= 10_000, "only {} samples", samples.len());
        let mi = mutual_information(&samples);
        assert!(mi < 0.01, "mutual information {mi:.4} nats");
    }

    #[test]
    fn annotations_point_at_sense_tokens() {
        let out = generate(&SynthConfig::default()).unwrap();
        for (t, ann) in out.tgt.iter().zip(&out.annotations) {
            for &pos in ann {
                assert!(t[pos].starts_with("sns"), "{}", t[pos]);
            }
        }
    }
}
