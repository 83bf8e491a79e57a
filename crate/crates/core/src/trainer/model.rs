use crate::error::{Error, Result};
use crate::multitone::Signal;

use super::{Architecture, FlattenMode, LayerParams, Network, Parameters};

/// Intermediates of one sample's forward pass.
#[derive(Debug, Clone)]
struct SampleTrace {
    input: Vec<f64>,
    /// Conv pre-activations, `[out][t]` per layer.
    pre: Vec<Vec<f64>>,
    /// Conv post-activations, same layout.
    post: Vec<Vec<f64>>,
    features: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
}

/// Everything [`backward`] needs from the matching [`forward`].
#[derive(Debug, Clone)]
pub struct Cache {
    version: u64,
    traces: Vec<SampleTrace>,
    logits: Vec<Vec<f64>>,
}

impl Cache {
    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn batch_size(&self) -> usize {
        self.traces.len()
    }

    /// Pre-activations of conv layer `layer` for sample `sample`, `[out][t]`.
    pub fn conv_pre_activation(&self, sample: usize, layer: usize) -> &[f64] {
        &self.traces[sample].pre[layer]
    }

    pub fn conv_post_activation(&self, sample: usize, layer: usize) -> &[f64] {
        &self.traces[sample].post[layer]
    }

    pub fn hidden_pre_activation(&self, sample: usize) -> &[f64] {
        &self.traces[sample].hidden_pre
    }

    /// `pre > 0` for every conv and hidden pre-activation of the batch. The
    /// loss is smooth along any parameter path that keeps this fixed.
    pub fn activation_pattern(&self) -> Vec<bool> {
        self.traces
            .iter()
            .flat_map(|t| t.pre.iter().flatten().chain(&t.hidden_pre))
            .map(|&v| v > 0.0)
            .collect()
    }
}

fn conv_forward(x: &[f64], p: &LayerParams, in_ch: usize, out_ch: usize, k: usize, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_ch * len];
    for o in 0..out_ch {
        let row = &mut out[o * len..(o + 1) * len];
        row.fill(p.biases[o]);
        for i in 0..in_ch {
            let xi = &x[i * len..(i + 1) * len];
            let w = &p.weights[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
            for (n, &wn) in w.iter().enumerate() {
                for (r, &xv) in row[n..].iter_mut().zip(xi) {
                    *r += wn * xv;
                }
            }
        }
    }
    out
}

/// Accumulates weight/bias gradients and, when `dx` is given, the input gradient.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    dpre: &[f64],
    p: &LayerParams,
    grad: &mut LayerParams,
    mut dx: Option<&mut [f64]>,
    in_ch: usize,
    out_ch: usize,
    k: usize,
    len: usize,
) {
    for o in 0..out_ch {
        let d = &dpre[o * len..(o + 1) * len];
        grad.biases[o] += d.iter().sum::<f64>();
        for i in 0..in_ch {
            let xi = &x[i * len..(i + 1) * len];
            let base = (o * in_ch + i) * k;
            for n in 0..k.min(len) {
                // out[t] depends on x[t - n] for t >= n
                let gw: f64 = d[n..].iter().zip(xi).map(|(a, b)| a * b).sum();
                grad.weights[base + n] += gw;
                if let Some(dx) = dx.as_deref_mut() {
                    let wn = p.weights[base + n];
                    for (g, &dv) in dx[i * len..(i + 1) * len].iter_mut().zip(&d[n..]) {
                        *g += wn * dv;
                    }
                }
            }
        }
    }
}

fn dense_forward(x: &[f64], p: &LayerParams, outputs: usize) -> Vec<f64> {
    let inputs = x.len();
    (0..outputs)
        .map(|o| {
            p.biases[o]
                + p.weights[o * inputs..(o + 1) * inputs]
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
        })
        .collect()
}

fn dense_backward(x: &[f64], dy: &[f64], p: &LayerParams, grad: &mut LayerParams) -> Vec<f64> {
    let inputs = x.len();
    let mut dx = vec![0.0; inputs];
    for (o, &d) in dy.iter().enumerate() {
        grad.biases[o] += d;
        let w = &p.weights[o * inputs..(o + 1) * inputs];
        let gw = &mut grad.weights[o * inputs..(o + 1) * inputs];
        for j in 0..inputs {
            gw[j] += d * x[j];
            dx[j] += d * w[j];
        }
    }
    dx
}

fn trace_sample(arch: &Architecture, params: &Parameters, signal: &[f64]) -> (SampleTrace, Vec<f64>) {
    let len = arch.input_len;
    let mut pre = Vec::with_capacity(arch.conv_layers.len());
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(arch.conv_layers.len());
    for ((spec, p), (in_ch, out_ch, k)) in arch
        .conv_layers
        .iter()
        .zip(&params.conv)
        .zip(arch.conv_shapes())
    {
        let x = post.last().map(|v| v.as_slice()).unwrap_or(signal);
        let z = conv_forward(x, p, in_ch, out_ch, k, len);
        post.push(z.iter().map(|&v| spec.activation.apply(v)).collect());
        pre.push(z);
    }
    let last = post.last().expect("at least one conv layer");
    let features = match arch.flatten_mode {
        FlattenMode::Flatten => last.clone(),
        FlattenMode::GlobalAverage => last
            .chunks(len)
            .map(|c| c.iter().sum::<f64>() / len as f64)
            .collect(),
    };
    let hidden_pre = dense_forward(&features, &params.dense[0], arch.head.hidden_units);
    let hidden: Vec<f64> = hidden_pre.iter().map(|v| v.max(0.0)).collect();
    let logits = dense_forward(&hidden, &params.dense[1], arch.head.n_classes);
    (
        SampleTrace {
            input: signal.to_vec(),
            pre,
            post,
            features,
            hidden_pre,
            hidden,
        },
        logits,
    )
}

fn check_batch(net: &Network, batch: &[Signal]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::ShapeMismatch("empty batch".into()));
    }
    let len = net.architecture.input_len;
    if let Some(s) = batch.iter().find(|s| s.len() != len) {
        return Err(Error::ShapeMismatch(format!(
            "network expects {len} samples per signal, got {}",
            s.len()
        )));
    }
    Ok(())
}

/// Class logits per signal, plus the cache for [`backward`].
pub fn forward(net: &Network, batch: &[Signal]) -> Result<(Vec<Vec<f64>>, Cache)> {
    check_batch(net, batch)?;
    let (traces, logits): (Vec<_>, Vec<_>) = batch
        .iter()
        .map(|s| trace_sample(&net.architecture, &net.parameters, s.samples()))
        .unzip();
    let cache = Cache {
        version: net.version(),
        traces,
        logits: logits.clone(),
    };
    Ok((logits, cache))
}

/// Argmax class per signal; ties go to the lower index.
pub fn predict(net: &Network, batch: &[Signal]) -> Result<Vec<usize>> {
    check_batch(net, batch)?;
    Ok(batch
        .iter()
        .map(|s| {
            let (_, logits) = trace_sample(&net.architecture, &net.parameters, s.samples());
            argmax(&logits)
        })
        .collect())
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let top = (0..logits.len())
        .max_by(|&a, &b| logits[a].total_cmp(&logits[b]))
        .expect("at least one class");
    let m = logits[top];
    // ln(1 + rest) keeps tiny losses accurate when one class dominates
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, z)| (z - m).exp())
        .sum();
    let log_norm = rest.ln_1p();
    logits.iter().map(|z| (z - m) - log_norm).collect()
}

fn check_labels(n_logits: usize, batch: usize, labels: &[usize], classes: usize) -> Result<()> {
    if n_logits != batch || labels.len() != batch {
        return Err(Error::LengthMismatch {
            expected: batch,
            actual: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    Ok(())
}

/// Mean of `−log softmax(logits)[label]` over the batch.
pub fn loss_sparse_ce(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::ShapeMismatch("empty batch".into()));
    }
    let classes = logits[0].len();
    if logits.iter().any(|l| l.len() != classes) {
        return Err(Error::ShapeMismatch("ragged logits".into()));
    }
    check_labels(logits.len(), logits.len(), labels, classes)?;
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(z, &y)| -log_softmax(z)[y])
        .sum();
    Ok(total / logits.len() as f64)
}

/// Forward pass and loss in one call.
pub fn batch_loss(net: &Network, batch: &[Signal], labels: &[usize]) -> Result<f64> {
    let (logits, _) = forward(net, batch)?;
    loss_sparse_ce(&logits, labels)
}

/// Gradient of [`loss_sparse_ce`] with respect to every parameter.
pub fn backward(net: &Network, cache: &Cache, labels: &[usize]) -> Result<Parameters> {
    if cache.version != net.version() {
        return Err(Error::StaleCache);
    }
    let arch = &net.architecture;
    let params = &net.parameters;
    check_labels(cache.logits.len(), cache.traces.len(), labels, arch.head.n_classes)?;
    let len = arch.input_len;
    let shapes = arch.conv_shapes();
    let scale = 1.0 / cache.traces.len() as f64;
    let mut grad = Parameters::zeros_like(params);

    for ((trace, logits), &label) in cache.traces.iter().zip(&cache.logits).zip(labels) {
        let mut dlogits: Vec<f64> = log_softmax(logits).iter().map(|l| l.exp() * scale).collect();
        dlogits[label] -= scale;

        let dhidden = dense_backward(&trace.hidden, &dlogits, &params.dense[1], &mut grad.dense[1]);
        let dhidden_pre: Vec<f64> = dhidden
            .iter()
            .zip(&trace.hidden_pre)
            .map(|(d, &z)| if z > 0.0 { *d } else { 0.0 })
            .collect();
        let dfeatures = dense_backward(&trace.features, &dhidden_pre, &params.dense[0], &mut grad.dense[0]);

        let mut dpost: Vec<f64> = match arch.flatten_mode {
            FlattenMode::Flatten => dfeatures,
            FlattenMode::GlobalAverage => dfeatures
                .iter()
                .flat_map(|&d| std::iter::repeat_n(d / len as f64, len))
                .collect(),
        };

        for l in (0..arch.conv_layers.len()).rev() {
            let act = arch.conv_layers[l].activation;
            let dpre: Vec<f64> = dpost
                .iter()
                .zip(&trace.pre[l])
                .map(|(d, &z)| d * act.derivative(z))
                .collect();
            let (in_ch, out_ch, k) = shapes[l];
            let x = if l == 0 { &trace.input } else { &trace.post[l - 1] };
            if l == 0 {
                conv_backward(x, &dpre, &params.conv[l], &mut grad.conv[l], None, in_ch, out_ch, k, len);
            } else {
                let mut dx = vec![0.0; in_ch * len];
                conv_backward(x, &dpre, &params.conv[l], &mut grad.conv[l], Some(&mut dx), in_ch, out_ch, k, len);
                dpost = dx;
            }
        }
    }
    Ok(grad)
}
