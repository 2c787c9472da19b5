use ndarray::{s, Array2, Array3, ArrayView3, Axis, Zip};
use rand::Rng;

use super::lstm::{cell_backward, cell_forward, StepCache};
use super::spec::{Architecture, ModelSpec};
use super::weights::{DenseParams, NetworkWeights};
use super::NnError;
use crate::Scalar;

/// Forward mode. Training draws dropout masks and teacher-forcing decisions
/// from the caller's RNG.
#[derive(Debug, Clone, Copy)]
pub enum Mode<'a, T> {
    Infer,
    Train { targets: ArrayView3<'a, T>, teacher_forcing: f64 },
}

#[derive(Debug, Clone)]
struct HeadCache<T> {
    /// Input of each dense layer; the last entry feeds the output layer.
    inputs: Vec<Array2<T>>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// [layer][t]
    enc: Vec<Vec<StepCache<T>>>,
    /// Mask on encoder layer l output at t (feeding layer l + 1).
    enc_masks: Vec<Vec<Option<Array2<T>>>>,
    /// [t][layer]
    dec: Vec<Vec<StepCache<T>>>,
    dec_masks: Vec<Vec<Option<Array2<T>>>>,
    head_masks: Vec<Option<Array2<T>>>,
    heads: Vec<HeadCache<T>>,
    /// Whether step t's decoder input was the step t-1 prediction.
    fed_back: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    /// (batch, horizon, output_dim)
    pub predictions: Array3<T>,
    /// Decoder input at each step, (batch, output_dim) each.
    pub decoder_inputs: Vec<Array2<T>>,
    cache: Option<ForwardCache<T>>,
}

impl<T> ForwardPass<T> {
    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    pub fn discard_cache(&mut self) {
        self.cache = None;
    }
}

fn dropout_mask<T: Scalar, R: Rng>(rng: &mut R, shape: (usize, usize), rate: f64) -> Array2<T> {
    let keep = 1.0 - rate;
    let scale = T::of(1.0 / keep);
    Array2::from_shape_simple_fn(shape, || if rng.gen::<f64>() < keep { scale } else { T::zero() })
}

fn head_forward<T: Scalar>(dense: &[DenseParams<T>], x: Array2<T>) -> (Array2<T>, HeadCache<T>) {
    let mut inputs = Vec::with_capacity(dense.len());
    let mut a = x;
    let last = dense.len() - 1;
    for (k, layer) in dense.iter().enumerate() {
        let mut z = a.dot(&layer.w);
        z += &layer.b;
        if k < last {
            z.mapv_inplace(|v| v.tanh());
        }
        inputs.push(a);
        a = z;
    }
    (a, HeadCache { inputs })
}

/// Returns the gradient w.r.t. the head input.
fn head_backward<T: Scalar>(
    dense: &[DenseParams<T>],
    cache: &HeadCache<T>,
    dy: Array2<T>,
    grad: &mut [DenseParams<T>],
) -> Array2<T> {
    let mut dz = dy;
    for k in (0..dense.len()).rev() {
        let a = &cache.inputs[k];
        grad[k].w += &a.t().dot(&dz);
        grad[k].b += &dz.sum_axis(Axis(0));
        let mut da = dz.dot(&dense[k].w.t());
        if k > 0 {
            // a = tanh(z_{k-1})
            Zip::from(&mut da).and(a).for_each(|d, &v| *d *= T::one() - v * v);
        }
        dz = da;
    }
    dz
}

fn check_inputs<T: Scalar>(spec: &ModelSpec, x: &ArrayView3<T>) -> Result<(), NnError> {
    spec.validate()?;
    let (_, l, f) = x.dim();
    if l != spec.look_back || f != spec.input_dim {
        return Err(NnError::ShapeMismatch(format!(
            "input window ({l}, {f}), expected ({}, {})",
            spec.look_back, spec.input_dim
        )));
    }
    Ok(())
}

type Encoded<T> = (Vec<(Array2<T>, Array2<T>)>, Vec<Vec<StepCache<T>>>, Vec<Vec<Option<Array2<T>>>>);

fn encode<T: Scalar, R: Rng>(
    spec: &ModelSpec,
    weights: &NetworkWeights<T>,
    x: ArrayView3<T>,
    train: bool,
    keep: bool,
    rng: &mut R,
) -> Encoded<T> {
    let (batch, look_back, _) = x.dim();
    let layers = weights.encoder.len();
    let mut finals = Vec::with_capacity(layers);
    let mut caches = Vec::with_capacity(layers);
    let mut masks = Vec::with_capacity(layers);
    let mut seq: Vec<Array2<T>> = (0..look_back).map(|t| x.slice(s![.., t, ..]).to_owned()).collect();
    for (l, p) in weights.encoder.iter().enumerate() {
        let u = p.units();
        let mut h = Array2::zeros((batch, u));
        let mut c = Array2::zeros((batch, u));
        let mut outs = Vec::with_capacity(look_back);
        let mut layer_cache = Vec::new();
        for xt in &seq {
            let (h2, c2, sc) = cell_forward(p, xt.view(), h.view(), c.view());
            if keep {
                layer_cache.push(sc);
            }
            outs.push(h2.clone());
            h = h2;
            c = c2;
        }
        let mut layer_masks = Vec::new();
        if l + 1 < layers && train && spec.dropout > 0.0 {
            for o in &mut outs {
                let m = dropout_mask(rng, o.dim(), spec.dropout);
                *o *= &m;
                layer_masks.push(Some(m));
            }
        } else {
            layer_masks.resize(look_back, None);
        }
        finals.push((h, c));
        caches.push(layer_cache);
        masks.push(layer_masks);
        seq = outs;
    }
    (finals, caches, masks)
}

/// Runs the network on windows `x` of shape (batch, look_back, input_dim).
/// With `keep_cache` the activations needed by [`backward`] are retained.
pub fn forward<T: Scalar, R: Rng>(
    spec: &ModelSpec,
    weights: &NetworkWeights<T>,
    x: ArrayView3<T>,
    mode: Mode<T>,
    keep_cache: bool,
    rng: &mut R,
) -> Result<ForwardPass<T>, NnError> {
    check_inputs(spec, &x)?;
    weights.check(spec)?;
    let (batch, look_back, _) = x.dim();
    let train = matches!(mode, Mode::Train { .. });
    if let Mode::Train { targets, .. } = mode {
        if targets.dim() != (batch, spec.horizon, spec.output_dim) {
            return Err(NnError::ShapeMismatch("training targets shape".into()));
        }
    }
    let drop = train && spec.dropout > 0.0;
    let (finals, enc, enc_masks) = encode(spec, weights, x, train, keep_cache, rng);

    match spec.architecture {
        Architecture::Direct => {
            let mut top = finals.last().expect("validated").0.clone();
            let mask = drop.then(|| dropout_mask(rng, top.dim(), spec.dropout));
            if let Some(m) = &mask {
                top *= m;
            }
            let (y, head) = head_forward(&weights.dense, top);
            let predictions = y
                .into_shape_with_order((batch, spec.horizon, spec.output_dim))
                .map_err(|e| NnError::ShapeMismatch(e.to_string()))?;
            let cache = keep_cache.then(|| ForwardCache {
                enc,
                enc_masks,
                dec: Vec::new(),
                dec_masks: Vec::new(),
                head_masks: vec![mask],
                heads: vec![head],
                fed_back: Vec::new(),
            });
            Ok(ForwardPass { predictions, decoder_inputs: Vec::new(), cache })
        }
        Architecture::EncoderDecoder => {
            let layers = weights.decoder.len();
            let mut state: Vec<(Array2<T>, Array2<T>)> =
                (0..layers).map(|l| finals[spec.state_source(l)].clone()).collect();
            let target_col = spec.target_feature;
            let mut input: Array2<T> =
                Array2::from_shape_fn((batch, spec.output_dim), |(b, _)| x[[b, look_back - 1, target_col]]);
            let mut predictions = Array3::zeros((batch, spec.horizon, spec.output_dim));
            let mut decoder_inputs = Vec::with_capacity(spec.horizon);
            let mut dec = Vec::new();
            let mut dec_masks = Vec::new();
            let mut head_masks = Vec::new();
            let mut heads = Vec::new();
            let mut fed_back = vec![false];
            for t in 0..spec.horizon {
                decoder_inputs.push(input.clone());
                let mut a = input;
                let mut step_cache = Vec::new();
                let mut step_masks = Vec::new();
                for (l, p) in weights.decoder.iter().enumerate() {
                    let (h, c) = &state[l];
                    let (h2, c2, sc) = cell_forward(p, a.view(), h.view(), c.view());
                    if keep_cache {
                        step_cache.push(sc);
                    }
                    let mut out = h2.clone();
                    state[l] = (h2, c2);
                    if l + 1 < layers {
                        let m = drop.then(|| dropout_mask(rng, out.dim(), spec.dropout));
                        if let Some(m) = &m {
                            out *= m;
                        }
                        step_masks.push(m);
                    }
                    a = out;
                }
                let hm = drop.then(|| dropout_mask(rng, a.dim(), spec.dropout));
                if let Some(m) = &hm {
                    a *= m;
                }
                let (y, head) = head_forward(&weights.dense, a);
                predictions.slice_mut(s![.., t, ..]).assign(&y);
                if keep_cache {
                    dec.push(step_cache);
                    dec_masks.push(step_masks);
                    head_masks.push(hm);
                    heads.push(head);
                }
                if t + 1 == spec.horizon {
                    break;
                }
                let teacher = match mode {
                    Mode::Train { targets, teacher_forcing } => {
                        let forced = teacher_forcing >= 1.0 || rng.gen::<f64>() < teacher_forcing;
                        forced.then(|| targets.slice(s![.., t, ..]).to_owned())
                    }
                    Mode::Infer => None,
                };
                fed_back.push(teacher.is_none());
                input = teacher.unwrap_or(y);
            }
            let cache = keep_cache.then(|| ForwardCache { enc, enc_masks, dec, dec_masks, head_masks, heads, fed_back });
            Ok(ForwardPass { predictions, decoder_inputs, cache })
        }
    }
}

/// Predictions only, dropout off, decoder fully autoregressive.
pub fn seq2seq_forward<T: Scalar>(
    spec: &ModelSpec,
    weights: &NetworkWeights<T>,
    x: ArrayView3<T>,
) -> Result<Array3<T>, NnError> {
    // inference never touches the RNG
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    Ok(forward(spec, weights, x, Mode::Infer, false, &mut rng)?.predictions)
}

fn encoder_backward<T: Scalar>(
    weights: &NetworkWeights<T>,
    cache: &ForwardCache<T>,
    mut dfinal: Vec<(Array2<T>, Array2<T>)>,
    grads: &mut NetworkWeights<T>,
) {
    let layers = weights.encoder.len();
    let look_back = cache.enc[0].len();
    // gradient reaching each output of the layer being processed, from above
    let mut from_above: Vec<Option<Array2<T>>> = vec![None; look_back];
    for l in (0..layers).rev() {
        let p = &weights.encoder[l];
        let (mut dh_next, mut dc_next) = std::mem::replace(&mut dfinal[l], (Array2::zeros((0, 0)), Array2::zeros((0, 0))));
        let mut below: Vec<Option<Array2<T>>> = vec![None; look_back];
        for t in (0..look_back).rev() {
            let mut dh = dh_next;
            if let Some(g) = &from_above[t] {
                dh += g;
            }
            let (dx, dhp, dcp) = cell_backward(p, &cache.enc[l][t], &dh, &dc_next, &mut grads.encoder[l], l > 0);
            if let Some(mut dx) = dx {
                if let Some(m) = &cache.enc_masks[l - 1][t] {
                    dx *= m;
                }
                below[t] = Some(dx);
            }
            dh_next = dhp;
            dc_next = dcp;
        }
        from_above = below;
    }
}

/// Reverse-mode gradients of a loss whose gradient w.r.t. the predictions
/// is `dpred` (batch, horizon, output_dim).
pub fn backward<T: Scalar>(
    spec: &ModelSpec,
    weights: &NetworkWeights<T>,
    pass: &ForwardPass<T>,
    dpred: ArrayView3<T>,
) -> Result<NetworkWeights<T>, NnError> {
    let cache = pass.cache.as_ref().ok_or(NnError::MissingCache)?;
    if dpred.dim() != pass.predictions.dim() {
        return Err(NnError::ShapeMismatch("loss gradient shape".into()));
    }
    let mut grads = weights.zeros_like();
    let batch = dpred.dim().0;
    let zero_state = |u: usize| (Array2::<T>::zeros((batch, u)), Array2::<T>::zeros((batch, u)));
    let mut dfinal: Vec<(Array2<T>, Array2<T>)> = weights.encoder.iter().map(|p| zero_state(p.units())).collect();

    match spec.architecture {
        Architecture::Direct => {
            let dy = dpred
                .to_owned()
                .into_shape_with_order((batch, spec.horizon * spec.output_dim))
                .map_err(|e| NnError::ShapeMismatch(e.to_string()))?;
            let mut da = head_backward(&weights.dense, &cache.heads[0], dy, &mut grads.dense);
            if let Some(m) = &cache.head_masks[0] {
                da *= m;
            }
            dfinal.last_mut().expect("validated").0 = da;
        }
        Architecture::EncoderDecoder => {
            let layers = weights.decoder.len();
            let mut dstate: Vec<(Array2<T>, Array2<T>)> = weights.decoder.iter().map(|p| zero_state(p.units())).collect();
            let mut carry: Option<Array2<T>> = None;
            for t in (0..spec.horizon).rev() {
                let mut dy = dpred.slice(s![.., t, ..]).to_owned();
                if let Some(c) = carry.take() {
                    dy += &c;
                }
                let mut da = head_backward(&weights.dense, &cache.heads[t], dy, &mut grads.dense);
                if let Some(m) = &cache.head_masks[t] {
                    da *= m;
                }
                let mut from_above = da;
                for l in (0..layers).rev() {
                    let (dh_rec, dc_rec) = &dstate[l];
                    let dh = &from_above + dh_rec;
                    let need_dx = l > 0 || cache.fed_back[t];
                    let (dx, dhp, dcp) =
                        cell_backward(&weights.decoder[l], &cache.dec[t][l], &dh, dc_rec, &mut grads.decoder[l], need_dx);
                    dstate[l] = (dhp, dcp);
                    match dx {
                        Some(mut dx) if l > 0 => {
                            if let Some(m) = &cache.dec_masks[t][l - 1] {
                                dx *= m;
                            }
                            from_above = dx;
                        }
                        Some(dx) => carry = Some(dx),
                        None => {}
                    }
                }
            }
            for (l, (dh, dc)) in dstate.into_iter().enumerate() {
                let k = spec.state_source(l);
                dfinal[k].0 += &dh;
                dfinal[k].1 += &dc;
            }
        }
    }
    encoder_backward(weights, cache, dfinal, &mut grads);
    Ok(grads)
}
