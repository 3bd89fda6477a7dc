//! Byte-pair encoding over whitespace-tokenized text.
//!
//! Training counts adjacent symbol pairs inside words (characters to begin
//! with) and greedily merges the most frequent pair; ties break
//! lexicographically. Encoding replays the merge list until fixpoint and
//! then suffixes an end-of-word marker onto each word-final subword so that
//! decoding can rebuild word boundaries exactly.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Marker appended to the last subword of every word.
pub const EOW: &str = "</w>";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
}

impl BpeModel {
    pub fn empty() -> BpeModel {
        BpeModel { merges: Vec::new() }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Learn up to `max_merges` merges from a tokenized corpus. Stops early
    /// when no pair occurs at least twice.
    pub fn train(corpus: &[Vec<String>], max_merges: usize) -> Result<BpeModel> {
        if corpus.is_empty() || corpus.iter().all(|s| s.is_empty()) {
            return Err(Error::Data("bpe_train: empty corpus".into()));
        }
        // word frequency table
        let mut word_freq: HashMap<&str, u64> = HashMap::new();
        for sent in corpus {
            for tok in sent {
                *word_freq.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        // each distinct word as a symbol sequence
        let mut words: Vec<(Vec<String>, u64)> = {
            let mut v: Vec<(&str, u64)> = word_freq.into_iter().collect();
            v.sort_unstable_by(|a, b| a.0.cmp(b.0)); // deterministic order
            v.into_iter()
                .map(|(w, f)| (w.chars().map(String::from).collect(), f))
                .collect()
        };

        let mut merges = Vec::new();
        for _ in 0..max_merges {
            let mut pair_counts: HashMap<(&str, &str), u64> = HashMap::new();
            for (syms, freq) in &words {
                for win in syms.windows(2) {
                    *pair_counts
                        .entry((win[0].as_str(), win[1].as_str()))
                        .or_insert(0) += freq;
                }
            }
            let best = pair_counts
                .into_iter()
                .filter(|&(_, c)| c >= 2)
                .map(|((a, b), c)| (c, (a.to_string(), b.to_string())))
                .max_by(|(ca, pa), (cb, pb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
            let Some((_, pair)) = best else { break };
            for (syms, _) in &mut words {
                merge_in_place(syms, &pair);
            }
            merges.push(pair);
        }
        Ok(BpeModel { merges })
    }

    /// Segment one word into subwords; the final subword carries the
    /// end-of-word marker.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut syms: Vec<String> = word.chars().map(String::from).collect();
        if syms.is_empty() {
            return vec![];
        }
        loop {
            let mut changed = false;
            for pair in &self.merges {
                changed |= merge_in_place(&mut syms, pair);
            }
            if !changed {
                break;
            }
        }
        let last = syms.len() - 1;
        syms[last].push_str(EOW);
        syms
    }

    /// Whitespace tokens to a flat subword sequence.
    pub fn encode(&self, sentence: &[String]) -> Vec<String> {
        sentence.iter().flat_map(|w| self.encode_word(w)).collect()
    }

    /// Rebuild the whitespace tokens from a subword sequence.
    pub fn decode(subwords: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        let mut current = String::new();
        for sw in subwords {
            if let Some(stem) = sw.strip_suffix(EOW) {
                current.push_str(stem);
                out.push(std::mem::take(&mut current));
            } else {
                current.push_str(sw);
            }
        }
        if !current.is_empty() {
            out.push(current); // unterminated tail: keep it rather than lose it
        }
        out
    }

    /// One merge per line, the two subwords space-separated.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (a, b) in &self.merges {
            out.push_str(a);
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<BpeModel> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let mut merges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(' ');
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => merges.push((a.to_string(), b.to_string())),
                _ => {
                    return Err(Error::Format {
                        msg: format!("bpe model line {} is not `left right`", i + 1),
                        offset: None,
                    })
                }
            }
        }
        Ok(BpeModel { merges })
    }
}

/// Replace every adjacent (a, b) occurrence with the fused symbol,
/// scanning left to right. Returns whether anything changed.
fn merge_in_place(syms: &mut Vec<String>, pair: &(String, String)) -> bool {
    let mut changed = false;
    let mut i = 0;
    while i + 1 < syms.len() {
        if syms[i] == pair.0 && syms[i + 1] == pair.1 {
            let mut fused = std::mem::take(&mut syms[i]);
            fused.push_str(&syms[i + 1]);
            syms[i] = fused;
            syms.remove(i + 1);
            changed = true;
        }
        i += 1;
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn sents(ss: &[&str]) -> Vec<Vec<String>> {
        ss.iter()
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    /// Brute-force oracle: count adjacent character pairs of a corpus of
    /// raw words, entirely independent of the trainer.
    fn brute_force_top_pair(words: &[&str]) -> Option<((String, String), u64)> {
        let mut counts: HashMap<(String, String), u64> = HashMap::new();
        for w in words {
            let chars: Vec<String> = w.chars().map(String::from).collect();
            for win in chars.windows(2) {
                *counts.entry((win[0].clone(), win[1].clone())).or_insert(0) += 1;
            }
        }
        counts
            .into_iter()
            .filter(|&(_, c)| c >= 2)
            .map(|(p, c)| (c, p))
            .max_by(|(ca, pa), (cb, pb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
            .map(|(c, p)| (p, c))
    }

    #[test]
    fn one_merge_on_abab_matches_brute_force() {
        let corpus = sents(&["abab"]);
        let model = BpeModel::train(&corpus, 1).unwrap();
        let (oracle_pair, oracle_count) = brute_force_top_pair(&["abab"]).unwrap();
        assert_eq!(oracle_count, 2);
        assert_eq!(oracle_pair, ("a".to_string(), "b".to_string()));
        assert_eq!(model.merges(), &[oracle_pair]);
    }

    #[test]
    fn zero_merges_gives_character_segmentation() {
        let corpus = sents(&["abab"]);
        let model = BpeModel::train(&corpus, 0).unwrap();
        assert!(model.merges().is_empty());
        assert_eq!(
            model.encode_word("ab"),
            vec!["a".to_string(), format!("b{EOW}")]
        );
    }

    #[test]
    fn single_character_words_admit_no_merges() {
        let corpus = sents(&["a a a"]);
        let model = BpeModel::train(&corpus, 5).unwrap();
        assert!(model.merges().is_empty());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(BpeModel::train(&[], 10).is_err());
        assert!(BpeModel::train(&sents(&["", ""]), 10).is_err());
    }

    #[test]
    fn encode_applies_merges_in_order() {
        let model = BpeModel {
            merges: vec![("a".into(), "b".into())],
        };
        assert_eq!(
            model.encode_word("abab"),
            vec!["ab".to_string(), format!("ab{EOW}")]
        );
    }

    #[test]
    fn empty_model_falls_back_to_characters() {
        let model = BpeModel::empty();
        assert_eq!(
            model.encode(&["hi".to_string()]),
            vec!["h".to_string(), format!("i{EOW}")]
        );
    }

    #[test]
    fn unknown_characters_pass_through() {
        let model = BpeModel {
            merges: vec![("a".into(), "b".into())],
        };
        let enc = model.encode_word("日本語");
        assert_eq!(enc.len(), 3);
        assert_eq!(BpeModel::decode(&enc), vec!["日本語".to_string()]);
    }

    #[test]
    fn ties_break_lexicographically() {
        // every adjacent pair occurs exactly twice: lexicographic order wins
        let corpus = sents(&["xy xy", "yz yz"]);
        let model = BpeModel::train(&corpus, 1).unwrap();
        assert_eq!(model.merges(), &[("x".to_string(), "y".to_string())]);
    }

    #[test]
    fn round_trip_on_random_corpora() {
        let mut rng = Rng::seed_from(404);
        let alphabet: Vec<char> = "abcdefgh".chars().collect();
        for _ in 0..1000 {
            let n_words = 1 + rng.below(6);
            let sentence: Vec<String> = (0..n_words)
                .map(|_| {
                    let len = 1 + rng.below(8);
                    (0..len).map(|_| alphabet[rng.below(alphabet.len())]).collect()
                })
                .collect();
            let corpus = vec![sentence.clone()];
            let model = BpeModel::train(&corpus, 12).unwrap();
            let enc = model.encode(&sentence);
            assert_eq!(BpeModel::decode(&enc), sentence, "enc {enc:?}");
        }
    }

    #[test]
    fn save_load_round_trip() {
        let corpus = sents(&["the the then then there"]);
        let model = BpeModel::train(&corpus, 6).unwrap();
        let dir = std::env::temp_dir().join("mmt_bpe_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.bpe");
        model.save(&path).unwrap();
        let back = BpeModel::load(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn training_compresses_repeated_words() {
        let corpus = sents(&["low low low lower lower newest newest"]);
        let model = BpeModel::train(&corpus, 30).unwrap();
        // "low" should end up as a single (marked) subword
        let enc = model.encode_word("low");
        assert_eq!(enc.len(), 1);
        assert_eq!(BpeModel::decode(&enc), vec!["low".to_string()]);
    }
}
