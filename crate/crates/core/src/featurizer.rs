//! Signed feature hashing of whitespace-tokenized n-grams.
//!
//! Each n-gram is hashed with a seeded FNV-1a pass followed by the
//! SplitMix64 finalizer. The low bits (mod `dim`) choose the bucket and
//! the top bit chooses the sign.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturizerConfig {
    pub dim: usize,
    pub ngram_orders: Vec<usize>,
    pub hash_seed: u64,
    pub lowercase: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            ngram_orders: vec![1, 2],
            hash_seed: 0x5eed_cafe,
            lowercase: true,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 8 {
            return Err(Error::Config(format!("featurizer dim {} < 8", self.dim)));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.contains(&0) {
            return Err(Error::Config(format!(
                "ngram orders must be non-empty and >= 1, got {:?}",
                self.ngram_orders
            )));
        }
        Ok(())
    }
}

/// Seeded 64-bit hash of `bytes`.
pub fn hash_bytes(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Lowercases (optionally), splits on whitespace and trims ASCII
/// punctuation from both ends of each token. Empty tokens are dropped.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let text = if lowercase {
        text.to_lowercase()
    } else {
        String::from(text)
    };
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

fn add_feature(v: &mut [f64], seed: u64, key: &str) -> bool {
    let h = hash_bytes(seed, key.as_bytes());
    let bucket = (h % v.len() as u64) as usize;
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    v[bucket] += sign;
    true
}

fn normalize(v: &mut [f64]) {
    let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

fn sentence_counts(tokens: &[String], config: &FeaturizerConfig) -> Vec<f64> {
    let mut v = vec![0.0; config.dim];
    for &order in &config.ngram_orders {
        if tokens.len() < order {
            continue;
        }
        for w in tokens.windows(order) {
            let key = format!("s{}:{}", order, w.join(" "));
            add_feature(&mut v, config.hash_seed, &key);
        }
    }
    v
}

/// Hashed n-gram vector of a single sentence, L2-normalized (zero when no
/// n-gram fires or the signed counts cancel).
pub fn featurize_sentence(text: &str, config: &FeaturizerConfig) -> Vec<f64> {
    let tokens = tokenize(text, config.lowercase);
    let mut v = sentence_counts(&tokens, config);
    normalize(&mut v);
    v
}

/// The two parts of [`featurize_pair`] before the final normalization:
/// the sum of both sentence vectors, and the normalized vector of ordered
/// (evidence token, claim token) cross features.
pub fn pair_components(
    evidence: &str,
    claim: &str,
    config: &FeaturizerConfig,
) -> (Vec<f64>, Vec<f64>) {
    let ev = featurize_sentence(evidence, config);
    let cl = featurize_sentence(claim, config);
    let sentence_sum: Vec<f64> = ev.iter().zip(&cl).map(|(a, b)| a + b).collect();

    let et = tokenize(evidence, config.lowercase);
    let ct = tokenize(claim, config.lowercase);
    let mut cross = vec![0.0; config.dim];
    for e in &et {
        for c in &ct {
            add_feature(&mut cross, config.hash_seed, &format!("x:{e}|{c}"));
        }
    }
    normalize(&mut cross);
    (sentence_sum, cross)
}

/// Claim-conditioned evidence vector: the normalized sum of both sentence
/// vectors and the cross features. Order matters.
pub fn featurize_pair(evidence: &str, claim: &str, config: &FeaturizerConfig) -> Vec<f64> {
    let (s, c) = pair_components(evidence, claim, config);
    let mut v: Vec<f64> = s.iter().zip(&c).map(|(a, b)| a + b).collect();
    normalize(&mut v);
    v
}
