use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::hash::{Hash, Hasher};

use super::{EncoderConfig, ModelError, NUM_CASING, NUM_PUNCT};

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln1_gamma: Array1<f64>,
    pub ln1_beta: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub ln2_gamma: Array1<f64>,
    pub ln2_beta: Array1<f64>,
}

/// Task head: dropout (no parameters) followed by an affine projection.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Every learnable tensor of the encoder and both heads. Gradients use the
/// same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub token_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub casing_head: HeadParams,
    pub punct_head: HeadParams,
}

/// Normal(0, std) truncated to two standard deviations.
fn truncated_normal(rng: &mut impl Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 2.0 {
            return z * INIT_STD;
        }
    })
}

impl LayerParams {
    fn init(rng: &mut impl Rng, d: usize, f: usize) -> Self {
        Self {
            wq: truncated_normal(rng, (d, d)),
            bq: Array1::zeros(d),
            wk: truncated_normal(rng, (d, d)),
            bk: Array1::zeros(d),
            wv: truncated_normal(rng, (d, d)),
            bv: Array1::zeros(d),
            wo: truncated_normal(rng, (d, d)),
            bo: Array1::zeros(d),
            ln1_gamma: Array1::ones(d),
            ln1_beta: Array1::zeros(d),
            w1: truncated_normal(rng, (d, f)),
            b1: Array1::zeros(f),
            w2: truncated_normal(rng, (f, d)),
            b2: Array1::zeros(d),
            ln2_gamma: Array1::ones(d),
            ln2_beta: Array1::zeros(d),
        }
    }
}

impl ModelParams {
    /// Truncated-normal weights, zero biases, identity layer norms.
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.model_dim;
        let token_embedding = truncated_normal(&mut rng, (config.vocab_size, d));
        let position_embedding = truncated_normal(&mut rng, (config.max_positions, d));
        let layers = (0..config.num_layers)
            .map(|_| LayerParams::init(&mut rng, d, config.ffn_dim))
            .collect();
        let casing_head = HeadParams {
            weight: truncated_normal(&mut rng, (d, NUM_CASING)),
            bias: Array1::zeros(NUM_CASING),
        };
        let punct_head = HeadParams {
            weight: truncated_normal(&mut rng, (d, NUM_PUNCT)),
            bias: Array1::zeros(NUM_PUNCT),
        };
        Ok(Self {
            token_embedding,
            position_embedding,
            layers,
            casing_head,
            punct_head,
        })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }

    /// Tensor names and shapes in a fixed canonical order, shared by
    /// [`Self::slices`], [`Self::slices_mut`] and checkpoint files.
    pub fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        self.visit(&mut |name, shape, _| out.push((name.to_string(), shape.to_vec())));
        out
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        self.visit(&mut |_, _, s| out.push(s));
        out
    }

    fn visit<'a>(&'a self, f: &mut dyn FnMut(&str, &[usize], &'a [f64])) {
        fn m<'a>(f: &mut dyn FnMut(&str, &[usize], &'a [f64]), name: &str, a: &'a Array2<f64>) {
            f(name, a.shape(), a.as_slice().expect("standard layout"));
        }
        fn v<'a>(f: &mut dyn FnMut(&str, &[usize], &'a [f64]), name: &str, a: &'a Array1<f64>) {
            f(name, a.shape(), a.as_slice().expect("standard layout"));
        }
        m(f, "embeddings.token", &self.token_embedding);
        m(f, "embeddings.position", &self.position_embedding);
        for (i, l) in self.layers.iter().enumerate() {
            let p = format!("layers.{i}");
            m(f, &format!("{p}.attention.query.weight"), &l.wq);
            v(f, &format!("{p}.attention.query.bias"), &l.bq);
            m(f, &format!("{p}.attention.key.weight"), &l.wk);
            v(f, &format!("{p}.attention.key.bias"), &l.bk);
            m(f, &format!("{p}.attention.value.weight"), &l.wv);
            v(f, &format!("{p}.attention.value.bias"), &l.bv);
            m(f, &format!("{p}.attention.output.weight"), &l.wo);
            v(f, &format!("{p}.attention.output.bias"), &l.bo);
            v(f, &format!("{p}.attention_norm.gamma"), &l.ln1_gamma);
            v(f, &format!("{p}.attention_norm.beta"), &l.ln1_beta);
            m(f, &format!("{p}.ffn.inner.weight"), &l.w1);
            v(f, &format!("{p}.ffn.inner.bias"), &l.b1);
            m(f, &format!("{p}.ffn.outer.weight"), &l.w2);
            v(f, &format!("{p}.ffn.outer.bias"), &l.b2);
            v(f, &format!("{p}.ffn_norm.gamma"), &l.ln2_gamma);
            v(f, &format!("{p}.ffn_norm.beta"), &l.ln2_beta);
        }
        m(f, "heads.casing.weight", &self.casing_head.weight);
        v(f, "heads.casing.bias", &self.casing_head.bias);
        m(f, "heads.punct.weight", &self.punct_head.weight);
        v(f, "heads.punct.bias", &self.punct_head.bias);
    }

    /// Mutable views in the same order as [`Self::slices`].
    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        fn s<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        let mut out: Vec<&mut [f64]> = vec![s(&mut self.token_embedding), s(&mut self.position_embedding)];
        for l in self.layers.iter_mut() {
            out.push(s(&mut l.wq));
            out.push(s(&mut l.bq));
            out.push(s(&mut l.wk));
            out.push(s(&mut l.bk));
            out.push(s(&mut l.wv));
            out.push(s(&mut l.bv));
            out.push(s(&mut l.wo));
            out.push(s(&mut l.bo));
            out.push(s(&mut l.ln1_gamma));
            out.push(s(&mut l.ln1_beta));
            out.push(s(&mut l.w1));
            out.push(s(&mut l.b1));
            out.push(s(&mut l.w2));
            out.push(s(&mut l.b2));
            out.push(s(&mut l.ln2_gamma));
            out.push(s(&mut l.ln2_beta));
        }
        out.push(s(&mut self.casing_head.weight));
        out.push(s(&mut self.casing_head.bias));
        out.push(s(&mut self.punct_head.weight));
        out.push(s(&mut self.punct_head.bias));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// Checks every tensor shape against `config`.
    pub fn check_shapes(&self, config: &EncoderConfig) -> Result<(), ModelError> {
        let expected = ModelParams::expected_layout(config);
        let actual = self.layout();
        if expected != actual {
            return Err(ModelError::ShapeMismatch(
                "parameter shapes do not match the encoder configuration".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn expected_layout(config: &EncoderConfig) -> Vec<(String, Vec<usize>)> {
        let (d, f) = (config.model_dim, config.ffn_dim);
        let mut out = vec![
            ("embeddings.token".to_string(), vec![config.vocab_size, d]),
            ("embeddings.position".to_string(), vec![config.max_positions, d]),
        ];
        for i in 0..config.num_layers {
            let p = format!("layers.{i}");
            for (name, shape) in [
                ("attention.query.weight", vec![d, d]),
                ("attention.query.bias", vec![d]),
                ("attention.key.weight", vec![d, d]),
                ("attention.key.bias", vec![d]),
                ("attention.value.weight", vec![d, d]),
                ("attention.value.bias", vec![d]),
                ("attention.output.weight", vec![d, d]),
                ("attention.output.bias", vec![d]),
                ("attention_norm.gamma", vec![d]),
                ("attention_norm.beta", vec![d]),
                ("ffn.inner.weight", vec![d, f]),
                ("ffn.inner.bias", vec![f]),
                ("ffn.outer.weight", vec![f, d]),
                ("ffn.outer.bias", vec![d]),
                ("ffn_norm.gamma", vec![d]),
                ("ffn_norm.beta", vec![d]),
            ] {
                out.push((format!("{p}.{name}"), shape));
            }
        }
        out.push(("heads.casing.weight".into(), vec![d, NUM_CASING]));
        out.push(("heads.casing.bias".into(), vec![NUM_CASING]));
        out.push(("heads.punct.weight".into(), vec![d, NUM_PUNCT]));
        out.push(("heads.punct.bias".into(), vec![NUM_PUNCT]));
        out
    }

    /// Builds parameters from flat tensors laid out as [`Self::expected_layout`].
    pub(crate) fn from_flat(config: &EncoderConfig, tensors: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let mut params = ModelParams::init(config, 0)?;
        let slices = params.slices_mut();
        if slices.len() != tensors.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "expected {} tensors, found {}",
                slices.len(),
                tensors.len()
            )));
        }
        for (dst, src) in slices.into_iter().zip(tensors) {
            if dst.len() != src.len() {
                return Err(ModelError::ShapeMismatch("tensor length mismatch".into()));
            }
            dst.copy_from_slice(&src);
        }
        Ok(params)
    }

    /// Hash of the exact bit patterns of every parameter.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for s in self.slices() {
            s.len().hash(&mut h);
            for x in s {
                x.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}
