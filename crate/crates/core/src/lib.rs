//! Frequency-domain model of the ReLU activation.
//!
//! A multi-tone input `x(t) = Σ aᵢ cos(2π fᵢ t)` satisfies `x² = A(1 + g(t))`
//! with `A = Σ aᵢ²/2`, so `relu(x) = x/2 + (√A/2)·√(1 + g)`. Expanding the
//! square root as a Taylor series in `g` exposes the DC term `√A/2` and the
//! harmonics ReLU injects. This crate implements that model and the
//! experiments around it:
//!
//! * [`multitone`]: symbolic tones, synthesis, seeded datasets
//! * [`spectral`]: normalized DFT, DC, RRMSE, band occupancy
//! * [`relu_taylor`]: ReLU, `A`, `g(t)`, Taylor coefficients, DC model
//! * [`convnets`]: fixed-weight convolution stacks and FIR responses
//! * [`trainer`]: a small 1-D CNN with manual gradients and Adam
//! * [`cli`]: the `relu-dc` experiment runner

pub mod cli;
pub mod convnets;
pub mod error;
pub mod multitone;
pub mod relu_taylor;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod trainer;

pub use error::{Error, Result};
pub use multitone::{CosineComponent, DatasetSpec, LabeledSet, MultiTone, Signal};
pub use spectral::Spectrum;
