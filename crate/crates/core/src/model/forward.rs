use std::hash::{Hash, Hasher};

use ndarray::{s, Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Batch, EncoderConfig, ModelError, ModelParams, NUM_CASING, NUM_PUNCT, PAD_ID};

pub(crate) const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

pub(crate) struct NormCache {
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
}

pub(crate) fn layer_norm(x: &Array2<f64>, gamma: &Array1<f64>, beta: &Array1<f64>) -> (Array2<f64>, NormCache) {
    let (n, d) = x.dim();
    let mut xhat = Array2::zeros((n, d));
    let mut inv_std = Array1::zeros(n);
    for (i, row) in x.outer_iter().enumerate() {
        let mean = row.sum() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_std[i] = inv;
        for (o, v) in xhat.row_mut(i).iter_mut().zip(row.iter()) {
            *o = (v - mean) * inv;
        }
    }
    let y = &xhat * gamma + beta;
    (y, NormCache { xhat, inv_std })
}

pub(crate) struct LayerCache {
    pub x_in: Array2<f64>,
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// Attention probabilities per (sequence, head), each `[T, T]`.
    pub probs: Vec<Array2<f64>>,
    pub ctx: Array2<f64>,
    pub norm1: NormCache,
    pub h1: Array2<f64>,
    pub ffn_pre: Array2<f64>,
    pub ffn_act: Array2<f64>,
    pub norm2: NormCache,
}

/// Intermediate values needed by [`super::backward`].
pub struct ActivationCache {
    pub(crate) batch_size: usize,
    pub(crate) seq_len: usize,
    pub(crate) token_ids: Vec<u32>,
    pub(crate) layers: Vec<LayerCache>,
    pub(crate) casing_mask: Option<Array2<f64>>,
    pub(crate) punct_mask: Option<Array2<f64>>,
    pub(crate) casing_in: Array2<f64>,
    pub(crate) punct_in: Array2<f64>,
    pub(crate) params_fingerprint: u64,
    pub(crate) batch_fingerprint: u64,
}

pub struct ForwardOutput {
    /// `[batch, padded length, 3]`
    pub casing_logits: Array3<f64>,
    /// `[batch, padded length, 8]`
    pub punct_logits: Array3<f64>,
    pub cache: ActivationCache,
}

pub(crate) fn batch_fingerprint(batch: &Batch) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for (enc, doc) in batch.sequences.iter().zip(&batch.document) {
        enc.token_ids.hash(&mut h);
        doc.hash(&mut h);
    }
    h.finish()
}

/// Inverted-dropout mask: kept entries are scaled by `1 / (1 - p)`.
fn dropout_mask(rng: &mut impl Rng, shape: (usize, usize), p: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < p { 0.0 } else { keep })
}

/// Masked softmax over each row of `scores`; rows with no valid key are all
/// zero.
pub(crate) fn masked_softmax(scores: &mut Array2<f64>, valid: &[bool]) {
    for mut row in scores.outer_iter_mut() {
        let max = row
            .iter()
            .zip(valid)
            .filter(|(_, &ok)| ok)
            .map(|(&x, _)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            row.fill(0.0);
            continue;
        }
        let mut sum = 0.0;
        for (x, &ok) in row.iter_mut().zip(valid) {
            *x = if ok { (*x - max).exp() } else { 0.0 };
            sum += *x;
        }
        row.mapv_inplace(|x| x / sum);
    }
}

/// Runs the encoder and both heads over a padded batch. In `train_mode` the
/// head inputs go through dropout driven by `seed`; otherwise the pass is
/// deterministic and independent of `seed`.
pub fn forward(
    params: &ModelParams,
    config: &EncoderConfig,
    batch: &Batch,
    train_mode: bool,
    seed: u64,
) -> Result<ForwardOutput, ModelError> {
    config.validate()?;
    params.check_shapes(config)?;
    if batch.document.len() != batch.sequences.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} sequences but {} document indices",
            batch.sequences.len(),
            batch.document.len()
        )));
    }
    let b = batch.len();
    let t = batch.max_len();
    if t > config.max_positions {
        return Err(ModelError::PositionOverflow {
            len: t,
            max: config.max_positions,
        });
    }
    let d = config.model_dim;
    let heads = config.num_heads;
    let dh = config.head_dim();
    let n = b * t;

    let mut token_ids = vec![PAD_ID; n];
    for (bi, enc) in batch.sequences.iter().enumerate() {
        if enc.word_index.len() != enc.len() || enc.first_subword_mask.len() != enc.len() {
            return Err(ModelError::ShapeMismatch(format!("sequence {bi} has ragged metadata")));
        }
        for (ti, &id) in enc.token_ids.iter().enumerate() {
            if id as usize >= config.vocab_size {
                return Err(ModelError::ShapeMismatch(format!(
                    "token id {id} outside vocabulary of {}",
                    config.vocab_size
                )));
            }
            token_ids[bi * t + ti] = id;
        }
    }
    let key_valid: Vec<bool> = token_ids.iter().map(|&id| id != PAD_ID).collect();

    let mut x = Array2::zeros((n, d));
    for (row, &id) in token_ids.iter().enumerate() {
        let pos = row % t;
        let mut xr = x.row_mut(row);
        xr.assign(&params.token_embedding.row(id as usize));
        xr += &params.position_embedding.row(pos);
    }

    let scale = 1.0 / (dh as f64).sqrt();
    let mut layers = Vec::with_capacity(params.layers.len());
    for lp in &params.layers {
        let q = x.dot(&lp.wq) + &lp.bq;
        let k = x.dot(&lp.wk) + &lp.bk;
        let v = x.dot(&lp.wv) + &lp.bv;
        let mut ctx = Array2::zeros((n, d));
        let mut probs = Vec::with_capacity(b * heads);
        for bi in 0..b {
            let rows = bi * t..(bi + 1) * t;
            let valid = &key_valid[rows.clone()];
            for h in 0..heads {
                let cols = h * dh..(h + 1) * dh;
                let qs = q.slice(s![rows.clone(), cols.clone()]);
                let ks = k.slice(s![rows.clone(), cols.clone()]);
                let vs = v.slice(s![rows.clone(), cols.clone()]);
                let mut p = qs.dot(&ks.t()) * scale;
                masked_softmax(&mut p, valid);
                ctx.slice_mut(s![rows.clone(), cols]).assign(&p.dot(&vs));
                probs.push(p);
            }
        }
        let attn = ctx.dot(&lp.wo) + &lp.bo;
        let (h1, norm1) = layer_norm(&(&x + &attn), &lp.ln1_gamma, &lp.ln1_beta);
        let ffn_pre = h1.dot(&lp.w1) + &lp.b1;
        let ffn_act = ffn_pre.mapv(gelu);
        let ffn_out = ffn_act.dot(&lp.w2) + &lp.b2;
        let (out, norm2) = layer_norm(&(&h1 + &ffn_out), &lp.ln2_gamma, &lp.ln2_beta);
        layers.push(LayerCache {
            x_in: std::mem::replace(&mut x, out),
            q,
            k,
            v,
            probs,
            ctx,
            norm1,
            h1,
            ffn_pre,
            ffn_act,
            norm2,
        });
    }

    let (casing_mask, punct_mask) = if train_mode && config.head_dropout > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = dropout_mask(&mut rng, (n, d), config.head_dropout);
        let p = dropout_mask(&mut rng, (n, d), config.head_dropout);
        (Some(c), Some(p))
    } else {
        (None, None)
    };
    let casing_in = match &casing_mask {
        Some(m) => &x * m,
        None => x.clone(),
    };
    let punct_in = match &punct_mask {
        Some(m) => &x * m,
        None => x,
    };
    let casing_logits = casing_in.dot(&params.casing_head.weight) + &params.casing_head.bias;
    let punct_logits = punct_in.dot(&params.punct_head.weight) + &params.punct_head.bias;

    let to3 = |a: Array2<f64>, c: usize| {
        a.into_shape_with_order((b, t, c))
            .expect("row-major logits reshape")
    };
    Ok(ForwardOutput {
        casing_logits: to3(casing_logits, NUM_CASING),
        punct_logits: to3(punct_logits, NUM_PUNCT),
        cache: ActivationCache {
            batch_size: b,
            seq_len: t,
            token_ids,
            layers,
            casing_mask,
            punct_mask,
            casing_in,
            punct_in,
            params_fingerprint: params.fingerprint(),
            batch_fingerprint: batch_fingerprint(batch),
        },
    })
}

impl ActivationCache {
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }
}

/// Row-wise softmax of a `[.., C]` logit slice.
pub(crate) fn softmax_row(logits: ndarray::ArrayView1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let e = logits.mapv(|x| (x - max).exp());
    let sum = e.sum();
    e / sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::Encoding;

    fn config() -> EncoderConfig {
        EncoderConfig {
            num_layers: 1,
            model_dim: 8,
            num_heads: 2,
            ffn_dim: 16,
            max_positions: 8,
            head_dropout: 0.1,
            vocab_size: 12,
        }
    }

    fn seq(ids: &[u32]) -> Encoding {
        Encoding {
            token_ids: ids.to_vec(),
            word_index: (0..ids.len()).map(|i| if i == 0 { None } else { Some(i - 1) }).collect(),
            first_subword_mask: (0..ids.len()).map(|i| i > 0).collect(),
        }
    }

    #[test]
    fn gelu_derivative_matches_difference_quotient() {
        for &x in &[-3.0, -1.0, -0.1, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn zero_heads_emit_bias() {
        let cfg = config();
        let mut p = ModelParams::init(&cfg, 1).unwrap();
        p.casing_head.weight.fill(0.0);
        p.punct_head.weight.fill(0.0);
        p.casing_head.bias = Array1::from(vec![0.1, -0.2, 0.3]);
        p.punct_head.bias = Array1::from_iter((0..8).map(|i| i as f64));
        let out = forward(&p, &cfg, &Batch::from_sequences(vec![seq(&[2, 5])]), false, 0).unwrap();
        for pos in 0..2 {
            assert_eq!(out.casing_logits.slice(s![0, pos, ..]).to_vec(), vec![0.1, -0.2, 0.3]);
            assert_eq!(out.punct_logits[[0, pos, 7]], 7.0);
        }
    }

    #[test]
    fn batch_permutation_permutes_logits() {
        let cfg = config();
        let p = ModelParams::init(&cfg, 2).unwrap();
        let a = seq(&[2, 5, 6, 7]);
        let b = seq(&[2, 9]);
        let ab = forward(&p, &cfg, &Batch::from_sequences(vec![a.clone(), b.clone()]), false, 0).unwrap();
        let ba = forward(&p, &cfg, &Batch::from_sequences(vec![b, a]), false, 0).unwrap();
        assert_eq!(ab.casing_logits.slice(s![0, .., ..]), ba.casing_logits.slice(s![1, .., ..]));
        assert_eq!(ab.punct_logits.slice(s![1, ..2, ..]), ba.punct_logits.slice(s![0, ..2, ..]));
        // padding does not leak into real positions
        let alone = forward(&p, &cfg, &Batch::from_sequences(vec![seq(&[2, 9])]), false, 0).unwrap();
        assert_eq!(alone.casing_logits.slice(s![0, .., ..]), ab.casing_logits.slice(s![1, ..2, ..]));
    }

    #[test]
    fn all_pad_sequence_has_finite_logits() {
        let cfg = config();
        let p = ModelParams::init(&cfg, 2).unwrap();
        let out = forward(&p, &cfg, &Batch::from_sequences(vec![seq(&[0, 0, 0])]), false, 0).unwrap();
        assert!(out.casing_logits.iter().all(|x| x.is_finite()));
        assert!(out.punct_logits.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn errors() {
        let cfg = config();
        let p = ModelParams::init(&cfg, 2).unwrap();
        let long = seq(&[2; 9]);
        assert!(matches!(
            forward(&p, &cfg, &Batch::from_sequences(vec![long]), false, 0),
            Err(ModelError::PositionOverflow { len: 9, max: 8 })
        ));
        assert!(matches!(
            forward(&p, &cfg, &Batch::from_sequences(vec![seq(&[2, 12])]), false, 0),
            Err(ModelError::ShapeMismatch(_))
        ));
        let other = EncoderConfig { vocab_size: 13, ..cfg };
        assert!(matches!(
            forward(&p, &other, &Batch::from_sequences(vec![seq(&[2])]), false, 0),
            Err(ModelError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn dropout_only_in_train_mode_and_seeded() {
        let cfg = config();
        let p = ModelParams::init(&cfg, 2).unwrap();
        let batch = Batch::from_sequences(vec![seq(&[2, 3, 4, 5])]);
        let e1 = forward(&p, &cfg, &batch, false, 1).unwrap();
        let e2 = forward(&p, &cfg, &batch, false, 2).unwrap();
        assert_eq!(e1.casing_logits, e2.casing_logits);
        let t1 = forward(&p, &cfg, &batch, true, 1).unwrap();
        let t1b = forward(&p, &cfg, &batch, true, 1).unwrap();
        let t2 = forward(&p, &cfg, &batch, true, 2).unwrap();
        assert_eq!(t1.casing_logits, t1b.casing_logits);
        assert_ne!(t1.casing_logits, t2.casing_logits);
        assert_ne!(t1.casing_logits, e1.casing_logits);
    }

    #[test]
    fn masked_softmax_rows() {
        let mut s = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, 0.5, -1.0, 9.0]).unwrap();
        masked_softmax(&mut s, &[true, true, false]);
        for row in s.outer_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert_eq!(row[2], 0.0);
        }
        let mut z = Array2::ones((1, 2));
        masked_softmax(&mut z, &[false, false]);
        assert_eq!(z.sum(), 0.0);
    }
}
