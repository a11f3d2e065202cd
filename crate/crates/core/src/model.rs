//! The full model bundle: embedding-side encoder plus name decoder,
//! extraction-side encoder plus watermark classifier, and a binary
//! checkpoint format that reloads bit-exactly.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    featurize, featurize_override, EmbeddingTables, VariableContextGraph,
};
use crate::nn::{
    classify_watermark, decode_name, gat_forward, select_head, ClassifierParams, DecodeMode,
    Decoded, DecoderParams, GatLayerParams,
};
use crate::vocab::Vocabulary;

/// Layer widths. `gat1_out` and `gat2_out` are per-head; layer 1 feeds
/// layer 2 with the K-head concatenation, and the classifier reads the
/// layer-2 concatenation of the target node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub feat: usize,
    pub gat1_out: usize,
    pub gat2_out: usize,
    pub dec_hidden: usize,
    pub cls_hidden: usize,
    pub max_name_len: usize,
}

impl ModelDims {
    /// Desk-scale defaults (128-wide features).
    pub fn desk() -> ModelDims {
        ModelDims {
            feat: 128,
            gat1_out: 32,
            gat2_out: 32,
            dec_hidden: 128,
            cls_hidden: 64,
            max_name_len: 5,
        }
    }

    /// Small dims for fast tests.
    pub fn tiny() -> ModelDims {
        ModelDims {
            feat: 16,
            gat1_out: 8,
            gat2_out: 8,
            dec_hidden: 16,
            cls_hidden: 12,
            max_name_len: 5,
        }
    }
}

/// One side's encoder: embedding tables plus two graph-attention layers.
#[derive(Debug, Clone)]
pub struct EncoderParams {
    pub tables: EmbeddingTables,
    pub gat1: GatLayerParams,
    pub gat2: GatLayerParams,
}

impl EncoderParams {
    fn init<R: Rng>(vocab_len: usize, heads: usize, dims: &ModelDims, rng: &mut R) -> Self {
        EncoderParams {
            tables: EmbeddingTables::init(vocab_len, dims.feat, rng),
            gat1: GatLayerParams::init(heads, dims.feat, dims.gat1_out, rng),
            gat2: GatLayerParams::init(heads, heads * dims.gat1_out, dims.gat2_out, rng),
        }
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Array2<f64>)) {
        self.tables.visit(&format!("{prefix}.tables"), f);
        self.gat1.visit(&format!("{prefix}.gat1"), f);
        self.gat2.visit(&format!("{prefix}.gat2"), f);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Array2<f64>)) {
        self.tables.visit_mut(&format!("{prefix}.tables"), f);
        self.gat1.visit_mut(&format!("{prefix}.gat1"), f);
        self.gat2.visit_mut(&format!("{prefix}.gat2"), f);
    }
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub vocab: Vocabulary,
    pub l_bits: usize,
    pub dims: ModelDims,
    pub embed: EncoderParams,
    pub decoder: DecoderParams,
    pub extract: EncoderParams,
    pub classifier: ClassifierParams,
}

impl ModelBundle {
    pub fn heads(&self) -> usize {
        1usize << self.l_bits
    }

    pub fn init(vocab: Vocabulary, l_bits: usize, dims: ModelDims, seed: u64) -> ModelBundle {
        let heads = 1usize << l_bits;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let embed = EncoderParams::init(vocab.len(), heads, &dims, &mut rng);
        let decoder = DecoderParams::init(
            dims.gat2_out,
            dims.feat,
            dims.dec_hidden,
            vocab.len(),
            dims.max_name_len,
            &mut rng,
        );
        let extract = EncoderParams::init(vocab.len(), heads, &dims, &mut rng);
        let classifier =
            ClassifierParams::init(heads * dims.gat2_out, dims.cls_hidden, heads, &mut rng);
        ModelBundle { vocab, l_bits, dims, embed, decoder, extract, classifier }
    }

    pub fn visit(&self, f: &mut dyn FnMut(String, &Array2<f64>)) {
        self.embed.visit("embed", f);
        self.decoder.visit("decoder", f);
        self.extract.visit("extract", f);
        self.classifier.visit("classifier", f);
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(String, &mut Array2<f64>)) {
        self.embed.visit_mut("embed", f);
        self.decoder.visit_mut("decoder", f);
        self.extract.visit_mut("extract", f);
        self.classifier.visit_mut("classifier", f);
    }

    /// All tensors in visit order with their stable dotted names.
    pub fn named_tensors(&self) -> Vec<(String, Array2<f64>)> {
        let mut out = Vec::new();
        self.visit(&mut |name, tensor| out.push((name, tensor.clone())));
        out
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, t| n += t.len());
        n
    }

    /// Embedding-side node representations (target text masked), N x K*F2.
    pub fn encode_embed_nodes(&self, g: &VariableContextGraph) -> Result<Array2<f64>> {
        let x = featurize(g, &self.vocab, &self.embed.tables, true)?;
        let h1 = gat_forward(&x, g, &self.embed.gat1)?;
        gat_forward(&h1, g, &self.embed.gat2)
    }

    /// Chunk-conditioned target representation, 1 x F2.
    pub fn embed_repr(&self, g: &VariableContextGraph, chunk_class: usize) -> Result<Array2<f64>> {
        let h = self.encode_embed_nodes(g)?;
        let target = h.row(g.target).to_owned().insert_axis(Axis(0));
        select_head(&target, chunk_class, self.heads())
    }

    /// Decode candidate names for a variable conditioned on a chunk class.
    pub fn decode_names(
        &self,
        g: &VariableContextGraph,
        chunk_class: usize,
        mode: DecodeMode,
    ) -> Result<Vec<Decoded>> {
        let z = self.embed_repr(g, chunk_class)?;
        decode_name(&z, &self.decoder, &self.embed.tables.sub, &self.vocab, mode)
    }

    fn extract_from_features(
        &self,
        x: &Array2<f64>,
        g: &VariableContextGraph,
    ) -> Result<Array2<f64>> {
        let h1 = gat_forward(x, g, &self.extract.gat1)?;
        let h2 = gat_forward(&h1, g, &self.extract.gat2)?;
        let target = h2.row(g.target).to_owned().insert_axis(Axis(0));
        classify_watermark(&target, &self.classifier)
    }

    /// Chunk-class distribution read from a graph whose target carries its
    /// real (possibly watermarked) name, 1 x 2^L.
    pub fn extract_probs(&self, g: &VariableContextGraph) -> Result<Array2<f64>> {
        let x = featurize(g, &self.vocab, &self.extract.tables, false)?;
        self.extract_from_features(&x, g)
    }

    /// Same, with the target's subtokens supplied directly (used when the
    /// decoded name has not been written back into source).
    pub fn extract_probs_override(
        &self,
        g: &VariableContextGraph,
        target_ids: &[u32],
    ) -> Result<Array2<f64>> {
        let x = featurize_override(g, &self.vocab, &self.extract.tables, target_ids)?;
        self.extract_from_features(&x, g)
    }
}

const MAGIC: &[u8; 4] = b"CWMB";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    l_bits: usize,
    heads: usize,
    dims: ModelDims,
    vocab_hash: String,
    tokens: Vec<String>,
    name_ok: Vec<bool>,
    tensors: Vec<TensorMeta>,
}

impl ModelBundle {
    /// Serialize to `path`. Tensors are stored row-major as little-endian
    /// 32-bit floats in visit order; the JSON header echoes the
    /// configuration and the vocabulary.
    pub fn save(&self, path: &Path) -> Result<()> {
        let named = self.named_tensors();
        let header = Header {
            l_bits: self.l_bits,
            heads: self.heads(),
            dims: self.dims.clone(),
            vocab_hash: format!("{:016x}", self.vocab.hash64()),
            tokens: self.vocab.tokens().to_vec(),
            name_ok: self.vocab.name_flags().to_vec(),
            tensors: named
                .iter()
                .map(|(name, t)| TensorMeta {
                    name: name.clone(),
                    rows: t.nrows(),
                    cols: t.ncols(),
                })
                .collect(),
        };
        let hj = serde_json::to_vec(&header)?;
        let mut buf =
            Vec::with_capacity(16 + hj.len() + 4 * named.iter().map(|(_, t)| t.len()).sum::<usize>());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(hj.len() as u64).to_le_bytes());
        buf.extend_from_slice(&hj);
        for (_, tensor) in &named {
            for &v in tensor.iter() {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelBundle> {
        let data = std::fs::read(path)?;
        Self::from_bytes(&data)
    }

    pub fn from_bytes(data: &[u8]) -> Result<ModelBundle> {
        let bad = |msg: &str| Error::BadCheckpoint(msg.to_string());
        if data.len() < 16 {
            return Err(bad("file shorter than fixed prelude"));
        }
        if &data[0..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::BadCheckpoint(format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(data[8..16].try_into().unwrap()) as usize;
        if data.len() < 16 + hlen {
            return Err(bad("header runs past end of file"));
        }
        let header: Header = serde_json::from_slice(&data[16..16 + hlen])
            .map_err(|e| Error::BadCheckpoint(format!("header: {e}")))?;
        if header.heads != 1usize << header.l_bits {
            return Err(bad("heads does not match 2^l_bits"));
        }
        if header.tokens.len() != header.name_ok.len() {
            return Err(bad("token and flag lists differ in length"));
        }
        let vocab = Vocabulary::from_parts(header.tokens, header.name_ok);
        if format!("{:016x}", vocab.hash64()) != header.vocab_hash {
            return Err(bad("vocabulary hash mismatch"));
        }

        let expected: usize = header.tensors.iter().map(|m| m.rows * m.cols).sum();
        let payload = &data[16 + hlen..];
        if payload.len() != expected * 4 {
            return Err(Error::BadCheckpoint(format!(
                "payload holds {} bytes, tensor index needs {}",
                payload.len(),
                expected * 4
            )));
        }
        let mut tensors: HashMap<String, Array2<f64>> = HashMap::new();
        let mut off = 0usize;
        for meta in &header.tensors {
            let n = meta.rows * meta.cols;
            let mut flat = Vec::with_capacity(n);
            for i in 0..n {
                let b = &payload[off + 4 * i..off + 4 * i + 4];
                flat.push(f32::from_le_bytes(b.try_into().unwrap()) as f64);
            }
            off += 4 * n;
            let arr = Array2::from_shape_vec((meta.rows, meta.cols), flat)
                .map_err(|e| Error::BadCheckpoint(format!("tensor {}: {e}", meta.name)))?;
            if tensors.insert(meta.name.clone(), arr).is_some() {
                return Err(Error::BadCheckpoint(format!("duplicate tensor {}", meta.name)));
            }
        }

        let mut model = ModelBundle::init(vocab, header.l_bits, header.dims, 0);
        let mut problem: Option<String> = None;
        model.visit_mut(&mut |name, slot| {
            if problem.is_some() {
                return;
            }
            match tensors.remove(&name) {
                None => problem = Some(format!("missing tensor {name}")),
                Some(t) if t.dim() != slot.dim() => {
                    problem = Some(format!(
                        "tensor {name} has shape {:?}, expected {:?}",
                        t.dim(),
                        slot.dim()
                    ))
                }
                Some(t) => *slot = t,
            }
        });
        if let Some(msg) = problem {
            return Err(Error::BadCheckpoint(msg));
        }
        if let Some(name) = tensors.keys().next() {
            return Err(Error::BadCheckpoint(format!("unknown tensor {name}")));
        }
        Ok(model)
    }
}
