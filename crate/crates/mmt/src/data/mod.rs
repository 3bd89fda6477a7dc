//! Corpus ingestion, subword preprocessing, feature files and batching.

mod batch;
mod bpe;
mod features;
mod synth;
mod vocab;

pub use batch::{make_batches, Batch};
pub use bpe::BpeModel;
pub use features::FeatureStore;
pub use synth::{generate as synth_generate, SynthConfig, SynthOutput};
pub use vocab::{Vocabulary, BOS, EOS, PAD, UNK};

use crate::error::{Error, Result};
use std::fs;
use std::path::Path;

/// One sentence per line, whitespace-tokenized.
pub fn load_sentences(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

/// Parallel corpus: source/target files with equal line counts.
pub fn load_parallel(
    src_path: &Path,
    tgt_path: &Path,
) -> Result<(Vec<Vec<String>>, Vec<Vec<String>>)> {
    let src = load_sentences(src_path)?;
    let tgt = load_sentences(tgt_path)?;
    if src.len() != tgt.len() {
        return Err(Error::Data(format!(
            "parallel corpus line counts differ: {} ({}) vs {} ({})",
            src.len(),
            src_path.display(),
            tgt.len(),
            tgt_path.display()
        )));
    }
    Ok((src, tgt))
}

pub fn write_sentences(path: &Path, sentences: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Annotation file: per sentence, space-separated target positions of
/// ambiguous tokens; empty line when none.
pub fn write_annotations(path: &Path, annotations: &[Vec<usize>]) -> Result<()> {
    let mut out = String::new();
    for a in annotations {
        let line: Vec<String> = a.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_annotations(path: &Path) -> Result<Vec<Vec<usize>>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(|l| {
            l.split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| Error::Data(format!("bad annotation position `{tok}`")))
                })
                .collect()
        })
        .collect()
}

/// Sense lexicon: `<source_token> <sense_0> <sense_1> ...` per line.
pub fn write_lexicon(path: &Path, lexicon: &[(String, Vec<String>)]) -> Result<()> {
    let mut out = String::new();
    for (src, senses) in lexicon {
        out.push_str(src);
        for s in senses {
            out.push(' ');
            out.push_str(s);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_lexicon(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace().map(str::to_string);
        let Some(src) = it.next() else { continue };
        let senses: Vec<String> = it.collect();
        if senses.is_empty() {
            return Err(Error::Data(format!("lexicon entry `{src}` has no senses")));
        }
        out.push((src, senses));
    }
    Ok(out)
}

/// FNV-1a 64-bit hash, used for data fingerprints in checkpoints/manifests.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn file_hash(path: &Path) -> Result<u64> {
    Ok(fnv1a(&fs::read(path)?))
}
