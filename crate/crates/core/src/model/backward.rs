use ndarray::{s, Array1, Array2, Axis};

use crate::tokenizer::AlignedLabels;

use super::forward::{batch_fingerprint, gelu_grad, ActivationCache, NormCache};
use super::loss::{both_task_losses, check_lambda};
use super::{Batch, EncoderConfig, JointLoss, ModelError, ModelParams, NUM_CASING, NUM_PUNCT};

fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &NormCache,
    gamma: &Array1<f64>,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let dgamma = (dy * &cache.xhat).sum_axis(Axis(0));
    let dbeta = dy.sum_axis(Axis(0));
    let dxhat = dy * gamma;
    let d = dy.ncols() as f64;
    let mut dx = Array2::zeros(dy.raw_dim());
    for (i, (gr, xr)) in dxhat.outer_iter().zip(cache.xhat.outer_iter()).enumerate() {
        let mean_g = gr.sum() / d;
        let mean_gx = gr.iter().zip(xr.iter()).map(|(g, x)| g * x).sum::<f64>() / d;
        let inv = cache.inv_std[i];
        for ((o, g), x) in dx.row_mut(i).iter_mut().zip(gr.iter()).zip(xr.iter()) {
            *o = inv * (g - mean_g - x * mean_gx);
        }
    }
    (dx, dgamma, dbeta)
}

/// Exact gradients of the joint loss with respect to every parameter, given
/// the activations of a matching [`super::forward`] call. Returns the loss
/// alongside the gradients.
pub fn backward(
    params: &ModelParams,
    config: &EncoderConfig,
    batch: &Batch,
    labels: &[AlignedLabels],
    lambda: f64,
    cache: &ActivationCache,
) -> Result<(JointLoss, ModelParams), ModelError> {
    check_lambda(lambda)?;
    if cache.params_fingerprint != params.fingerprint()
        || cache.batch_fingerprint != batch_fingerprint(batch)
        || cache.layers.len() != params.layers.len()
    {
        return Err(ModelError::StaleActivations);
    }
    let (b, t) = (cache.batch_size, cache.seq_len);
    let n = b * t;
    let d = config.model_dim;
    let heads = config.num_heads;
    let dh = config.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();

    let casing_logits = (cache.casing_in.dot(&params.casing_head.weight) + &params.casing_head.bias)
        .into_shape_with_order((b, t, NUM_CASING))
        .expect("logit reshape");
    let punct_logits = (cache.punct_in.dot(&params.punct_head.weight) + &params.punct_head.bias)
        .into_shape_with_order((b, t, NUM_PUNCT))
        .expect("logit reshape");
    let (casing, punct) = both_task_losses(&casing_logits, &punct_logits, batch, labels)?;
    let loss = JointLoss::combine(casing.ce, punct.ce, lambda);

    let d_casing = (casing.grad * lambda)
        .into_shape_with_order((n, NUM_CASING))
        .expect("grad reshape");
    let d_punct = (punct.grad * (1.0 - lambda))
        .into_shape_with_order((n, NUM_PUNCT))
        .expect("grad reshape");

    let mut grads = params.zeros_like();
    grads.casing_head.weight = cache.casing_in.t().dot(&d_casing);
    grads.casing_head.bias = d_casing.sum_axis(Axis(0));
    grads.punct_head.weight = cache.punct_in.t().dot(&d_punct);
    grads.punct_head.bias = d_punct.sum_axis(Axis(0));

    let mut dz_c = d_casing.dot(&params.casing_head.weight.t());
    if let Some(m) = &cache.casing_mask {
        dz_c *= m;
    }
    let mut dz_p = d_punct.dot(&params.punct_head.weight.t());
    if let Some(m) = &cache.punct_mask {
        dz_p *= m;
    }
    let mut dx = dz_c + dz_p;

    for (li, (lp, lc)) in params.layers.iter().zip(&cache.layers).enumerate().rev() {
        let g = &mut grads.layers[li];

        // out = LN2(h1 + ffn(h1))
        let (dr2, dgamma2, dbeta2) = layer_norm_backward(&dx, &lc.norm2, &lp.ln2_gamma);
        g.ln2_gamma = dgamma2;
        g.ln2_beta = dbeta2;
        g.w2 = lc.ffn_act.t().dot(&dr2);
        g.b2 = dr2.sum_axis(Axis(0));
        let mut dpre = dr2.dot(&lp.w2.t());
        ndarray::Zip::from(&mut dpre)
            .and(&lc.ffn_pre)
            .for_each(|g, &x| *g *= gelu_grad(x));
        g.w1 = lc.h1.t().dot(&dpre);
        g.b1 = dpre.sum_axis(Axis(0));
        let dh1 = dr2 + dpre.dot(&lp.w1.t());

        // h1 = LN1(x + attn(x))
        let (dr1, dgamma1, dbeta1) = layer_norm_backward(&dh1, &lc.norm1, &lp.ln1_gamma);
        g.ln1_gamma = dgamma1;
        g.ln1_beta = dbeta1;
        g.wo = lc.ctx.t().dot(&dr1);
        g.bo = dr1.sum_axis(Axis(0));
        let dctx = dr1.dot(&lp.wo.t());

        let mut dq = Array2::zeros((n, d));
        let mut dk = Array2::zeros((n, d));
        let mut dv = Array2::zeros((n, d));
        for bi in 0..b {
            let rows = bi * t..(bi + 1) * t;
            for h in 0..heads {
                let cols = h * dh..(h + 1) * dh;
                let p = &lc.probs[bi * heads + h];
                let dc = dctx.slice(s![rows.clone(), cols.clone()]);
                let qs = lc.q.slice(s![rows.clone(), cols.clone()]);
                let ks = lc.k.slice(s![rows.clone(), cols.clone()]);
                let vs = lc.v.slice(s![rows.clone(), cols.clone()]);
                dv.slice_mut(s![rows.clone(), cols.clone()]).assign(&p.t().dot(&dc));
                let dp = dc.dot(&vs.t());
                // softmax backward: dS = P * (dP - rowsum(dP * P))
                let mut ds = dp;
                for (mut drow, prow) in ds.outer_iter_mut().zip(p.outer_iter()) {
                    let dot: f64 = drow.iter().zip(prow.iter()).map(|(a, b)| a * b).sum();
                    for (x, &pv) in drow.iter_mut().zip(prow.iter()) {
                        *x = pv * (*x - dot);
                    }
                }
                ds *= scale;
                dq.slice_mut(s![rows.clone(), cols.clone()]).assign(&ds.dot(&ks));
                dk.slice_mut(s![rows.clone(), cols]).assign(&ds.t().dot(&qs));
            }
        }
        g.wq = lc.x_in.t().dot(&dq);
        g.bq = dq.sum_axis(Axis(0));
        g.wk = lc.x_in.t().dot(&dk);
        g.bk = dk.sum_axis(Axis(0));
        g.wv = lc.x_in.t().dot(&dv);
        g.bv = dv.sum_axis(Axis(0));
        dx = dr1 + dq.dot(&lp.wq.t()) + dk.dot(&lp.wk.t()) + dv.dot(&lp.wv.t());
    }

    for (row, &id) in cache.token_ids.iter().enumerate() {
        let pos = row % t;
        let dr = dx.row(row);
        let mut te = grads.token_embedding.row_mut(id as usize);
        te += &dr;
        let mut pe = grads.position_embedding.row_mut(pos);
        pe += &dr;
    }
    Ok((loss, grads))
}
