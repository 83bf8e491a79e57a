//! Fixed-weight 1-D convolution: causal filtering, FIR responses, average
//! pooling and the differentiator / moving-average prototype stacks.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::multitone::Signal;
use crate::relu_taylor::relu;

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("kernel needs at least one tap"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid("kernel taps must be finite"));
        }
        Ok(Self { taps })
    }

    /// `[1, −1]`
    pub fn differentiator() -> Self {
        Self {
            taps: vec![1.0, -1.0],
        }
    }

    /// `len` taps of `1/len`.
    pub fn moving_average(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid("moving average length must be positive"));
        }
        Ok(Self {
            taps: vec![1.0 / len as f64; len],
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    /// Comma-separated taps, e.g. `"0.6,0.4"`.
    fn from_str(s: &str) -> Result<Self> {
        let taps = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad kernel tap {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(taps)
    }
}

/// `out[k] = Σₙ taps[n] · in[k − n]` with `in[< 0] = 0`; same length as the input.
pub fn conv1d(signal: &Signal, kernel: &Kernel) -> Result<Signal> {
    if kernel.len() > signal.len() {
        return Err(Error::KernelTooLong {
            kernel: kernel.len(),
            signal: signal.len(),
        });
    }
    let x = signal.samples();
    let out = (0..x.len())
        .map(|k| {
            kernel
                .taps
                .iter()
                .take(k + 1)
                .enumerate()
                .map(|(n, w)| w * x[k - n])
                .sum()
        })
        .collect();
    Ok(Signal::from_parts_unchecked(out, signal.sample_rate()))
}

/// Gains `bᵢ` and phases `φᵢ` of a kernel at a set of frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResponse {
    pub frequencies: Vec<f64>,
    pub gains: Vec<f64>,
    pub phases: Vec<f64>,
}

/// `H(f) = Σₙ wₙ e^{−i2π f n / fs}`; frequencies must lie in `[0, fs/2]`.
pub fn fir_response(kernel: &Kernel, frequencies: &[f64], sample_rate: f64) -> Result<FilterResponse> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid(format!("sample rate must be > 0, got {sample_rate}")));
    }
    let nyquist = sample_rate / 2.0;
    let mut gains = Vec::with_capacity(frequencies.len());
    let mut phases = Vec::with_capacity(frequencies.len());
    for &f in frequencies {
        if !(0.0..=nyquist).contains(&f) {
            return Err(Error::Aliasing {
                frequency: f,
                nyquist,
            });
        }
        let h: Complex64 = kernel
            .taps
            .iter()
            .enumerate()
            .map(|(n, &w)| Complex64::from_polar(w, -TAU * f * n as f64 / sample_rate))
            .sum();
        gains.push(h.norm());
        phases.push(h.arg());
    }
    Ok(FilterResponse {
        frequencies: frequencies.to_vec(),
        gains,
        phases,
    })
}

/// Means over windows `[i·stride, i·stride + width)` that fit in the signal.
pub fn avg_pool(signal: &Signal, width: usize, stride: usize) -> Result<Signal> {
    if width == 0 || stride == 0 {
        return Err(invalid("pool width and stride must be positive"));
    }
    if width > signal.len() {
        return Err(invalid(format!(
            "pool width {width} exceeds signal length {}",
            signal.len()
        )));
    }
    let x = signal.samples();
    let out = (0..=(x.len() - width) / stride)
        .map(|i| x[i * stride..i * stride + width].iter().sum::<f64>() / width as f64)
        .collect();
    Ok(Signal::from_parts_unchecked(
        out,
        signal.sample_rate() / stride as f64,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackKind {
    Differentiator,
    MovingAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pooling {
    pub width: usize,
    pub stride: usize,
}

/// `relu(w ∗ relu(w ∗ … x))` with one shared kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeStack {
    pub kind: StackKind,
    pub depth: usize,
    pub kernel: Kernel,
    pub pool: Option<Pooling>,
}

impl PrototypeStack {
    pub fn differentiator(depth: usize) -> Self {
        Self {
            kind: StackKind::Differentiator,
            depth,
            kernel: Kernel::differentiator(),
            pool: None,
        }
    }

    pub fn moving_average(depth: usize, len: usize) -> Result<Self> {
        Ok(Self {
            kind: StackKind::MovingAverage,
            depth,
            kernel: Kernel::moving_average(len)?,
            pool: None,
        })
    }

    pub fn with_pool(mut self, width: usize, stride: usize) -> Self {
        self.pool = Some(Pooling { width, stride });
        self
    }
}

/// Post-activation output of every layer (pooled when the stack pools).
pub fn run_prototype(stack: &PrototypeStack, input: &Signal) -> Result<Vec<Signal>> {
    if stack.depth == 0 {
        return Err(invalid("stack depth must be >= 1"));
    }
    let mut layers = Vec::with_capacity(stack.depth);
    let mut current = input.clone();
    for _ in 0..stack.depth {
        current = relu(&conv1d(&current, &stack.kernel)?);
        if let Some(p) = stack.pool {
            current = avg_pool(&current, p.width, p.stride)?;
        }
        layers.push(current.clone());
    }
    Ok(layers)
}
