//! Length-bucketed minibatching.

use crate::autodiff::Tensor;
use crate::data::{FeatureStore, PAD};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Padded id matrices for one minibatch plus the aligned feature rows.
#[derive(Clone, Debug)]
pub struct Batch {
    /// B×T_src source ids, PAD-filled.
    pub src: Vec<u32>,
    /// B×T_src, 1.0 exactly on non-PAD positions.
    pub src_mask: Vec<f64>,
    /// B×T_tgt target ids (no control tokens), PAD-filled.
    pub tgt: Vec<u32>,
    /// B×T_tgt, 1.0 exactly on non-PAD positions.
    pub tgt_mask: Vec<f64>,
    /// B×d feature rows.
    pub features: Tensor,
    /// Corpus indices of the examples, in batch row order.
    pub indices: Vec<usize>,
    pub size: usize,
    pub t_src: usize,
    pub t_tgt: usize,
}

impl Batch {
    pub fn src_len(&self, row: usize) -> usize {
        self.src_mask[row * self.t_src..(row + 1) * self.t_src]
            .iter()
            .map(|&m| m as usize)
            .sum()
    }

    pub fn tgt_len(&self, row: usize) -> usize {
        self.tgt_mask[row * self.t_tgt..(row + 1) * self.t_tgt]
            .iter()
            .map(|&m| m as usize)
            .sum()
    }
}

fn build_batch(
    pairs: &[(Vec<u32>, Vec<u32>)],
    features: &FeatureStore,
    members: &[usize],
) -> Result<Batch> {
    let b = members.len();
    let t_src = members.iter().map(|&i| pairs[i].0.len()).max().unwrap_or(0);
    let t_tgt = members.iter().map(|&i| pairs[i].1.len()).max().unwrap_or(0);
    let mut src = vec![PAD; b * t_src];
    let mut src_mask = vec![0.0; b * t_src];
    let mut tgt = vec![PAD; b * t_tgt];
    let mut tgt_mask = vec![0.0; b * t_tgt];
    for (row, &idx) in members.iter().enumerate() {
        let (s, t) = &pairs[idx];
        for (j, &id) in s.iter().enumerate() {
            src[row * t_src + j] = id;
            src_mask[row * t_src + j] = 1.0;
        }
        for (j, &id) in t.iter().enumerate() {
            tgt[row * t_tgt + j] = id;
            tgt_mask[row * t_tgt + j] = 1.0;
        }
    }
    let features = features.gather(members)?;
    Ok(Batch {
        src,
        src_mask,
        tgt,
        tgt_mask,
        features,
        indices: members.to_vec(),
        size: b,
        t_src,
        t_tgt,
    })
}

/// Split a corpus into batches bucketed by source length.
///
/// Every example appears exactly once. Examples are shuffled, stably sorted
/// by source length (so padding stays low), chunked, and the chunk order is
/// shuffled again; the whole schedule is a pure function of the seed.
pub fn make_batches(
    pairs: &[(Vec<u32>, Vec<u32>)],
    features: &FeatureStore,
    batch_size: usize,
    shuffle_seed: u64,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Contract("batch_size must be positive".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Data("make_batches: empty corpus".into()));
    }
    let mut rng = Rng::seed_from(shuffle_seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    rng.shuffle(&mut order);
    order.sort_by_key(|&i| pairs[i].0.len()); // stable: keeps shuffled order within a length

    let mut chunks: Vec<&[usize]> = order.chunks(batch_size).collect();
    rng.shuffle(&mut chunks);
    chunks
        .into_iter()
        .map(|members| build_batch(pairs, features, members))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_corpus(n: usize) -> (Vec<(Vec<u32>, Vec<u32>)>, FeatureStore) {
        let pairs: Vec<(Vec<u32>, Vec<u32>)> = (0..n)
            .map(|i| {
                let len = 1 + i % 4;
                (
                    vec![4 + i as u32; len],
                    vec![4 + i as u32; len],
                )
            })
            .collect();
        let d = 3;
        let feats =
            FeatureStore::from_rows(n, d, (0..n * d).map(|x| x as f64).collect()).unwrap();
        (pairs, feats)
    }

    #[test]
    fn five_examples_batch_two_gives_sizes_2_2_1() {
        let (pairs, feats) = toy_corpus(5);
        let batches = make_batches(&pairs, &feats, 2, 7).unwrap();
        let mut sizes: Vec<usize> = batches.iter().map(|b| b.size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 2, 2]);
    }

    #[test]
    fn same_seed_gives_identical_schedule() {
        let (pairs, feats) = toy_corpus(13);
        let a = make_batches(&pairs, &feats, 4, 99).unwrap();
        let b = make_batches(&pairs, &feats, 4, 99).unwrap();
        let ia: Vec<Vec<usize>> = a.iter().map(|x| x.indices.clone()).collect();
        let ib: Vec<Vec<usize>> = b.iter().map(|x| x.indices.clone()).collect();
        assert_eq!(ia, ib);
    }

    #[test]
    fn different_seed_changes_schedule() {
        let (pairs, feats) = toy_corpus(32);
        let a = make_batches(&pairs, &feats, 4, 1).unwrap();
        let b = make_batches(&pairs, &feats, 4, 2).unwrap();
        let ia: Vec<Vec<usize>> = a.iter().map(|x| x.indices.clone()).collect();
        let ib: Vec<Vec<usize>> = b.iter().map(|x| x.indices.clone()).collect();
        assert_ne!(ia, ib);
    }

    #[test]
    fn every_example_appears_exactly_once() {
        let (pairs, feats) = toy_corpus(23);
        let batches = make_batches(&pairs, &feats, 5, 3).unwrap();
        let mut seen: Vec<usize> = batches.iter().flat_map(|b| b.indices.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn masks_mark_real_positions() {
        let pairs = vec![
            (vec![4, 5, 6], vec![7, 8, 9]),
            (vec![4], vec![7]),
        ];
        let feats = FeatureStore::from_rows(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let batches = make_batches(&pairs, &feats, 2, 0).unwrap();
        assert_eq!(batches.len(), 1);
        let b = &batches[0];
        assert_eq!(b.t_src, 3);
        // rows are sorted by length: row 0 is the short example
        let (short, long) = if b.indices[0] == 1 { (0, 1) } else { (1, 0) };
        assert_eq!(
            &b.src_mask[long * 3..long * 3 + 3],
            &[1.0, 1.0, 1.0]
        );
        assert_eq!(
            &b.src_mask[short * 3..short * 3 + 3],
            &[1.0, 0.0, 0.0]
        );
        assert_eq!(b.src_len(short), 1);
        assert_eq!(b.tgt_len(long), 3);
    }

    #[test]
    fn feature_misalignment_is_an_error() {
        let pairs = vec![(vec![4u32], vec![4u32]); 4];
        let feats = FeatureStore::from_rows(2, 2, vec![0.0; 4]).unwrap();
        assert!(make_batches(&pairs, &feats, 2, 0).is_err());
    }

    #[test]
    fn bucketing_limits_padding() {
        // 8 short + 8 long sentences, batch 8: buckets should separate them
        let mut pairs = Vec::new();
        for i in 0..8 {
            pairs.push((vec![4 + i; 2], vec![4u32; 2]));
        }
        for i in 0..8 {
            pairs.push((vec![4 + i; 9], vec![4u32; 9]));
        }
        let feats = FeatureStore::from_rows(16, 1, (0..16).map(|x| x as f64).collect()).unwrap();
        let batches = make_batches(&pairs, &feats, 8, 11).unwrap();
        for b in &batches {
            assert!(b.t_src == 2 || b.t_src == 9, "mixed bucket: {}", b.t_src);
        }
    }
}
