//! Shared subtoken vocabulary. One table serves the node featurizer, the
//! teacher, and the name decoder; entries harvested from identifier
//! subtokens are flagged name-eligible, everything else is context-only.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::lang::ast::TokenKind;
use crate::lang::{subtokenize, FunctionUnit};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const MASK: u32 = 2;
pub const BOS: u32 = 3;
pub const END: u32 = 4;

pub const SPECIALS: [&str; 5] = ["<pad>", "<unk>", "<mask>", "<bos>", "<end>"];

pub const NUM_LIT: &str = "<num>";
pub const STR_LIT: &str = "<str>";
pub const CHAR_LIT: &str = "<char>";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    /// Parallel to `tokens`: may the decoder emit this as a name subtoken?
    name_ok: Vec<bool>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Harvest a vocabulary from parsed functions: identifier subtokens
    /// (name-eligible) plus keyword/operator/punct texts and literal-class
    /// placeholders (context-only). Deterministic for a given corpus.
    pub fn build(units: &[FunctionUnit]) -> Vocabulary {
        // BTreeMap keeps the harvest order-independent
        let mut name_subs: BTreeMap<String, u64> = BTreeMap::new();
        let mut context: BTreeMap<String, u64> = BTreeMap::new();
        for f in units {
            for tok in &f.tokens {
                match tok.kind {
                    TokenKind::Identifier => {
                        for s in subtokenize(&tok.text) {
                            *name_subs.entry(s).or_insert(0) += 1;
                        }
                    }
                    TokenKind::Keyword | TokenKind::Operator | TokenKind::Punct => {
                        *context.entry(tok.text.clone()).or_insert(0) += 1;
                    }
                    TokenKind::Number => *context.entry(NUM_LIT.into()).or_insert(0) += 1,
                    TokenKind::Str => *context.entry(STR_LIT.into()).or_insert(0) += 1,
                    TokenKind::Char => *context.entry(CHAR_LIT.into()).or_insert(0) += 1,
                    TokenKind::Comment | TokenKind::Error => {}
                }
            }
        }
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut name_ok = vec![false; tokens.len()];
        for s in name_subs.keys() {
            tokens.push(s.clone());
            name_ok.push(true);
        }
        for s in context.keys() {
            if !name_subs.contains_key(s) {
                tokens.push(s.clone());
                name_ok.push(false);
            }
        }
        Self::from_parts(tokens, name_ok)
    }

    pub fn from_parts(tokens: Vec<String>, name_ok: Vec<bool>) -> Vocabulary {
        assert_eq!(tokens.len(), name_ok.len());
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, name_ok, index }
    }

    /// Rebuild the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn name_eligible(&self, id: u32) -> bool {
        self.name_ok[id as usize]
    }

    pub fn name_flags(&self) -> &[bool] {
        &self.name_ok
    }

    /// Vocabulary ids of a leaf token's text for feature averaging:
    /// identifiers split into subtokens, literals map to class placeholders,
    /// everything else is a single raw symbol.
    pub fn leaf_ids(&self, kind: TokenKind, text: &str) -> Vec<u32> {
        match kind {
            TokenKind::Identifier => subtokenize(text).iter().map(|s| self.id(s)).collect(),
            TokenKind::Number => vec![self.id(NUM_LIT)],
            TokenKind::Str => vec![self.id(STR_LIT)],
            TokenKind::Char => vec![self.id(CHAR_LIT)],
            _ => vec![self.id(text)],
        }
    }

    /// FNV-1a over the token list; checkpoint integrity echo.
    pub fn hash64(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for (t, &ok) in self.tokens.iter().zip(&self.name_ok) {
            eat(t.as_bytes());
            eat(&[0xff, ok as u8]);
        }
        h
    }
}
