//! Evaluation metrics: bit accuracy, capacity, a 3-gram naturalness model,
//! and a cheap variable-similarity proxy. The benchmark harness that ties
//! them to the embed/extract pipeline lives in `bench`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::lang::FunctionUnit;
use crate::lang::subtokenize;

/// Fraction of positions where the bit strings agree.
pub fn bit_accuracy(truth: &[u8], got: &[u8]) -> Result<f64> {
    if truth.len() != got.len() {
        return Err(Error::LengthMismatch(truth.len(), got.len()));
    }
    if truth.is_empty() {
        return Ok(1.0);
    }
    let matches = truth.iter().zip(got).filter(|(a, b)| a == b).count();
    Ok(matches as f64 / truth.len() as f64)
}

/// Capacity of one function: embedded bits over significant tokens.
pub fn bits_per_token(l_bits: usize, vars_used: usize, tokens: usize) -> f64 {
    assert!(tokens > 0, "bits_per_token needs a nonempty function");
    (l_bits * vars_used) as f64 / tokens as f64
}

/// Token-level 3-gram model with add-one smoothing; entropy is the mean
/// negative log2 probability of each token given its two predecessors.
/// Tokens are the lexer's significant tokens, lowercased, identifiers kept
/// whole.
#[derive(Debug, Clone, Default)]
pub struct NgramModel {
    context: HashMap<(String, String), HashMap<String, u64>>,
    vocab: BTreeSet<String>,
}

const SEQ_START: &str = "<s>";

fn token_stream(f: &FunctionUnit) -> Vec<String> {
    f.tokens
        .iter()
        .filter(|t| !t.kind.is_trivia())
        .map(|t| t.text.to_lowercase())
        .collect()
}

impl NgramModel {
    pub fn train(units: &[FunctionUnit]) -> Result<NgramModel> {
        if units.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut m = NgramModel::default();
        m.vocab.insert("<unk>".to_string());
        for f in units {
            let toks = token_stream(f);
            let mut prev = (SEQ_START.to_string(), SEQ_START.to_string());
            for t in toks {
                m.vocab.insert(t.clone());
                *m.context.entry(prev.clone()).or_default().entry(t.clone()).or_insert(0) += 1;
                prev = (prev.1, t);
            }
        }
        Ok(m)
    }

    fn known(&self, tok: &str) -> String {
        if self.vocab.contains(tok) {
            tok.to_string()
        } else {
            "<unk>".to_string()
        }
    }

    /// Mean -log2 P(token | two predecessors), add-one smoothed.
    pub fn entropy(&self, f: &FunctionUnit) -> Result<f64> {
        if self.context.is_empty() {
            return Err(Error::UntrainedModel);
        }
        let toks = token_stream(f);
        if toks.is_empty() {
            return Ok(0.0);
        }
        let v = self.vocab.len() as f64;
        let mut prev = (SEQ_START.to_string(), SEQ_START.to_string());
        let mut total = 0.0;
        for t in &toks {
            let t = self.known(t);
            let counts = self.context.get(&prev);
            let ctx_total: u64 = counts.map(|c| c.values().sum()).unwrap_or(0);
            let c = counts.and_then(|m| m.get(&t)).copied().unwrap_or(0);
            let p = (c as f64 + 1.0) / (ctx_total as f64 + v);
            total -= p.log2();
            prev = (prev.1, t);
        }
        Ok(total / toks.len() as f64)
    }
}

fn char_trigrams(name: &str) -> BTreeMap<String, f64> {
    let cleaned: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect();
    let chars: Vec<char> = cleaned.chars().collect();
    let mut grams = BTreeMap::new();
    if chars.len() < 3 {
        if !chars.is_empty() {
            *grams.entry(cleaned).or_insert(0.0) += 1.0;
        }
        return grams;
    }
    for w in chars.windows(3) {
        *grams.entry(w.iter().collect::<String>()).or_insert(0.0) += 1.0;
    }
    grams
}

fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, va)| b.get(k).map(|vb| va * vb)).sum();
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Similarity of two identifiers in [0,1]: character-trigram cosine blended
/// 50/50 with subtoken Jaccard. Style conversions of the same subtokens
/// score 1.
pub fn var_sim_proxy(orig: &str, new: &str) -> f64 {
    let tri = cosine(&char_trigrams(orig), &char_trigrams(new));
    let sa: BTreeSet<String> = subtokenize(orig).into_iter().collect();
    let sb: BTreeSet<String> = subtokenize(new).into_iter().collect();
    let inter = sa.intersection(&sb).count() as f64;
    let union = sa.union(&sb).count() as f64;
    let jaccard = if union == 0.0 { 0.0 } else { inter / union };
    0.5 * tri + 0.5 * jaccard
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_function;

    #[test]
    fn bit_accuracy_identity_complement_and_mismatch() {
        assert_eq!(bit_accuracy(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 1.0);
        assert_eq!(bit_accuracy(&[0, 1, 1, 0], &[1, 0, 0, 1]).unwrap(), 0.0);
        assert_eq!(bit_accuracy(&[0, 1, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.75);
        assert!(matches!(
            bit_accuracy(&[0, 1], &[0]),
            Err(Error::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn bits_per_token_identity() {
        assert_eq!(bits_per_token(2, 2, 100), 0.04);
        assert_eq!(bits_per_token(2, 3, 50), 0.12);
    }

    #[test]
    fn repeated_training_sequence_drives_entropy_down() {
        let f = parse_function("int f() { int abc = 1; return abc; }", "java").unwrap();
        let copies: Vec<FunctionUnit> = (0..200).map(|_| f.clone()).collect();
        let m = NgramModel::train(&copies).unwrap();
        let h = m.entropy(&f).unwrap();
        assert!(h < 0.5, "entropy {h} should be near 0");
    }

    #[test]
    fn unseen_tokens_hit_the_uniform_floor() {
        let train = parse_function("int f() { int abc = 1; return abc; }", "java").unwrap();
        let m = NgramModel::train(std::slice::from_ref(&train)).unwrap();
        let novel =
            parse_function("double zq(double qq) { double ww = qq; return ww; }", "java").unwrap();
        let h = m.entropy(&novel).unwrap();
        let v = m.vocab.len() as f64;
        // only partially unseen: novel identifiers map to <unk>, but the
        // shared punctuation is known; entropy still sits near log2 V
        assert!(h > v.log2() - 2.0, "entropy {h} vs log2 V = {}", v.log2());

        let all_unseen = parse_function("int g() { zz9 qq8 ww7 }", "java");
        if let Ok(f) = all_unseen {
            let h = m.entropy(&f).unwrap();
            assert!(h <= v.log2() + 1e-9);
        }
    }

    #[test]
    fn untrained_model_is_an_error() {
        let m = NgramModel::default();
        let f = parse_function("int f() { return 1; }", "java").unwrap();
        assert!(matches!(m.entropy(&f), Err(Error::UntrainedModel)));
    }

    #[test]
    fn var_sim_extremes_and_ordering() {
        assert!((var_sim_proxy("total", "total") - 1.0).abs() < 1e-12);
        assert_eq!(var_sim_proxy("batch", "token"), 0.0);
        assert!(var_sim_proxy("doc", "document") > var_sim_proxy("batch", "token"));
        assert!(var_sim_proxy("userDetails", "user_details") > 1.0 - 1e-12);
        assert!(var_sim_proxy("rowCount", "rowTotal") > 0.2);
        assert!(var_sim_proxy("rowCount", "rowTotal") < 0.8);
    }
}
