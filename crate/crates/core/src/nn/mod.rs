//! Differentiable building blocks: autodiff tape, relational graph
//! attention, LSTM name decoder, watermark classifier, Gumbel-softmax.

pub mod classifier;
pub mod gat;
pub mod gumbel;
pub mod lstm;
pub mod tape;

use serde::{Deserialize, Serialize};

pub use classifier::{classify_watermark, ClassifierParams, ClassifierVars};
pub use gat::{gat_forward, gat_layer, select_head, GatLayerParams, GatLayerVars, RelationMasks};
pub use gumbel::gumbel_softmax;
pub use lstm::{
    decode_gumbel_tape, decode_name, eligibility_mask, DecodeMode, Decoded, DecoderParams,
    DecoderVars, GumbelDecode,
};
pub use tape::{Grads, Tape, Var};

/// L watermark bits carried by one variable, with their class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatermarkChunk {
    /// Big-endian: bits[0] is the most significant.
    pub bits: Vec<u8>,
    pub class_index: usize,
}

impl WatermarkChunk {
    pub fn from_bits(bits: &[u8]) -> WatermarkChunk {
        assert!(!bits.is_empty());
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        let class_index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        WatermarkChunk { bits: bits.to_vec(), class_index }
    }

    pub fn from_class(class_index: usize, l: usize) -> WatermarkChunk {
        assert!(l >= 1);
        assert!(class_index < (1 << l));
        let bits = (0..l)
            .rev()
            .map(|i| ((class_index >> i) & 1) as u8)
            .collect();
        WatermarkChunk { bits, class_index }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}
