use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub dev_ratio: f64,
    pub test_ratio: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_ratio: 0.75,
            dev_ratio: 0.05,
            test_ratio: 0.20,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let ratios = [self.train_ratio, self.dev_ratio, self.test_ratio];
        let in_range = ratios.iter().all(|r| (0.0..=1.0).contains(r));
        if !in_range || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(CorpusError::InvalidRatios {
                train: self.train_ratio,
                dev: self.dev_ratio,
                test: self.test_ratio,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

fn pick<T: Clone>(items: &[T], mut indices: Vec<usize>) -> Vec<T> {
    indices.sort_unstable();
    indices.into_iter().map(|i| items[i].clone()).collect()
}

/// Document-level partition after a seeded shuffle. Train and dev sizes are
/// the rounded ratio shares; test receives the remainder. Each part keeps the
/// input order of its documents.
pub fn split_corpus<T: Clone>(corpus: &[T], spec: &SplitSpec) -> Result<CorpusSplit<T>, CorpusError> {
    spec.validate()?;
    let n = corpus.len();
    let n_train = ((n as f64) * spec.train_ratio).round() as usize;
    let n_train = n_train.min(n);
    let n_dev = (((n as f64) * spec.dev_ratio).round() as usize).min(n - n_train);
    let perm = permutation(n, spec.seed);
    Ok(CorpusSplit {
        train: pick(corpus, perm[..n_train].to_vec()),
        dev: pick(corpus, perm[n_train..n_train + n_dev].to_vec()),
        test: pick(corpus, perm[n_train + n_dev..].to_vec()),
    })
}

/// Seeded sample of `n` documents without replacement. For a fixed seed the
/// samples are nested: a smaller `n` always yields a subset of a larger one.
pub fn subset<T: Clone>(corpus: &[T], n: usize, seed: u64) -> Result<Vec<T>, CorpusError> {
    if n > corpus.len() {
        return Err(CorpusError::TooFewDocuments {
            requested: n,
            available: corpus.len(),
        });
    }
    let perm = permutation(corpus.len(), seed);
    Ok(pick(corpus, perm[..n].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn invalid_ratios() {
        let docs: Vec<u32> = (0..100).collect();
        let spec = SplitSpec { train_ratio: 0.75, dev_ratio: 0.05, test_ratio: 0.25, seed: 7 };
        assert!(matches!(split_corpus(&docs, &spec), Err(CorpusError::InvalidRatios { .. })));
        let spec = SplitSpec { train_ratio: 1.2, dev_ratio: -0.1, test_ratio: -0.1, seed: 7 };
        assert!(split_corpus(&docs, &spec).is_err());
    }

    #[test]
    fn sizes_partition_and_determinism() {
        let docs: Vec<u32> = (0..100).collect();
        let spec = SplitSpec { train_ratio: 0.75, dev_ratio: 0.05, test_ratio: 0.20, seed: 7 };
        let s = split_corpus(&docs, &spec).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (75, 5, 20));
        let all: HashSet<u32> = s.train.iter().chain(&s.dev).chain(&s.test).copied().collect();
        assert_eq!(all.len(), 100);
        assert_eq!(split_corpus(&docs, &spec).unwrap(), s);
        let other = split_corpus(&docs, &SplitSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(other.train, s.train);
    }

    #[test]
    fn empty_corpus_splits_to_nothing() {
        let s = split_corpus::<u8>(&[], &SplitSpec::default()).unwrap();
        assert!(s.train.is_empty() && s.dev.is_empty() && s.test.is_empty());
    }

    #[test]
    fn subset_edges_and_nesting() {
        let docs: Vec<u32> = (0..10).collect();
        assert!(subset(&docs, 0, 1).unwrap().is_empty());
        let mut whole = subset(&docs, 10, 1).unwrap();
        whole.sort();
        assert_eq!(whole, docs);
        let small: HashSet<_> = subset(&docs, 3, 1).unwrap().into_iter().collect();
        let large: HashSet<_> = subset(&docs, 5, 1).unwrap().into_iter().collect();
        assert!(small.is_subset(&large));
        assert!(matches!(subset(&docs, 11, 1), Err(CorpusError::TooFewDocuments { .. })));
    }
}
