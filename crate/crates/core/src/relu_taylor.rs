//! ReLU as `x/2 + (√A/2)·√(1 + g(t))` and the Taylor expansion of the root.
//!
//! For zero-phase tones `x(t) = Σ aᵢ cos(2π fᵢ t)`:
//!
//! ```text
//! A    = Σ aᵢ² / 2
//! g(t) = (1/2A) Σ aᵢ² cos(2π·2fᵢ·t)
//!      + (1/A) Σ_{i<j} aᵢaⱼ [cos(2π(fᵢ+fⱼ)t) + cos(2π(fᵢ−fⱼ)t)]
//! ```
//!
//! so that `x² = A(1 + g)`. The series `√(1+g) = Σ aₙ gⁿ` only converges for
//! `|g| < 1`; [`ConvergenceReport`] flags samples outside that region instead
//! of clamping them.

use std::f64::consts::{SQRT_2, TAU};

use crate::error::{invalid, Error, Result};
use crate::multitone::{sample_count, synthesize, MultiTone, Signal};

/// Elementwise `max(0, x)`.
pub fn relu(signal: &Signal) -> Signal {
    signal.map(|x| x.max(0.0))
}

/// `A = Σ aᵢ²/2`, the mean power of the tones.
pub fn compute_a(tones: &MultiTone) -> Result<f64> {
    let a: f64 = tones.components().iter().map(|c| c.amplitude * c.amplitude).sum::<f64>() / 2.0;
    if a == 0.0 {
        return Err(Error::DegenerateInput("all amplitudes are zero"));
    }
    Ok(a)
}

/// Closed-form `g(t)` sampled on the same grid as [`synthesize`].
pub fn compute_g(tones: &MultiTone, sample_rate: f64, duration: f64) -> Result<Signal> {
    if let Some(c) = tones.components().iter().find(|c| c.phase != 0.0) {
        return Err(Error::NonZeroPhase(c.phase));
    }
    let a = compute_a(tones)?;
    let n = sample_count(sample_rate, duration)?;
    let comps = tones.components();
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / sample_rate;
            let mut squares = 0.0;
            let mut cross = 0.0;
            for (i, ci) in comps.iter().enumerate() {
                squares += ci.amplitude * ci.amplitude * (TAU * 2.0 * ci.frequency * t).cos();
                for cj in &comps[i + 1..] {
                    let w = ci.amplitude * cj.amplitude;
                    cross += w
                        * ((TAU * (ci.frequency + cj.frequency) * t).cos()
                            + (TAU * (ci.frequency - cj.frequency) * t).cos());
                }
            }
            squares / (2.0 * a) + cross / a
        })
        .collect();
    Ok(Signal::from_parts_unchecked(samples, sample_rate))
}

/// `g = x²/A − 1` computed sample by sample. Works for any phase.
pub fn g_from_samples(signal: &Signal, a: f64) -> Result<Signal> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("A must be > 0, got {a}")));
    }
    Ok(signal.map(|x| x * x / a - 1.0))
}

/// Coefficients `a₀ … a_{n_terms−1}` of `√(1+g) = Σ aₙ gⁿ`.
///
/// Uses `aₙ = aₙ₋₁ · (3 − 2n) / (2n)`, which equals
/// `(−1)ⁿ (2n)! / ((1 − 2n) (n!)² 4ⁿ)` without forming factorials.
pub fn taylor_coefficients(n_terms: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_terms);
    let mut a = 1.0;
    for n in 0..n_terms {
        if n > 0 {
            let n = n as f64;
            a *= (3.0 - 2.0 * n) / (2.0 * n);
        }
        out.push(a);
    }
    out
}

/// `|a_n| / Σ_{k≤n} |a_k|`: the weight of term `n` in the truncated series.
pub fn term_share(coefficients: &[f64], n: usize) -> f64 {
    let total: f64 = coefficients[..=n].iter().map(|c| c.abs()).sum();
    coefficients[n].abs() / total
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// `Σ_{n ≥ first} coefficients[n] · gⁿ`, accumulated in ascending `n`.
fn series_tail(coefficients: &[f64], g: f64, first: usize) -> f64 {
    let mut acc = CompensatedSum::default();
    let mut power = g.powi(first as i32);
    for &c in coefficients.iter().skip(first) {
        acc.add(c * power);
        power *= g;
    }
    acc.value()
}

/// Partial sum of the series for `√(1+g)` with the given coefficients.
pub fn taylor_sqrt(coefficients: &[f64], g: f64) -> f64 {
    series_tail(coefficients, g, 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorConfig {
    pub n_terms: usize,
    /// Amplitude factor applied before the expansion and undone after it.
    pub prescale: f64,
}

impl Default for TaylorConfig {
    fn default() -> Self {
        Self {
            n_terms: 50,
            prescale: 1e-4,
        }
    }
}

impl TaylorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_terms == 0 {
            return Err(invalid("n_terms must be >= 1"));
        }
        if !(self.prescale > 0.0 && self.prescale.is_finite()) {
            return Err(invalid(format!("prescale must be > 0, got {}", self.prescale)));
        }
        Ok(())
    }
}

/// Where the series for `√(1+g)` can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceReport {
    pub max_abs_g: f64,
    /// Fraction of samples with `|g| ≥ 1`.
    pub fraction_violating: f64,
    pub valid: bool,
}

pub fn convergence_report(g: &Signal) -> ConvergenceReport {
    let max_abs_g = g.samples().iter().map(|v| v.abs()).fold(0.0, f64::max);
    let violating = g.samples().iter().filter(|v| v.abs() >= 1.0).count();
    ConvergenceReport {
        max_abs_g,
        fraction_violating: violating as f64 / g.len() as f64,
        valid: violating == 0,
    }
}

/// Result of [`approximate_relu`].
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub output: Signal,
    /// `g(t)` of the prescaled tones (identical to the unscaled one up to rounding).
    pub g: Signal,
    pub report: ConvergenceReport,
}

/// Truncated expansion of `relu(x)`:
/// `(√2/4)√(Σaᵢ²) · (1 + Σ_{n=1}^{N−1} aₙ gⁿ) + x/2`, evaluated on the
/// prescaled tones and divided by the prescale afterwards.
pub fn approximate_relu(
    tones: &MultiTone,
    sample_rate: f64,
    duration: f64,
    cfg: &TaylorConfig,
) -> Result<Approximation> {
    cfg.validate()?;
    let scaled = tones.scaled(cfg.prescale);
    let x = synthesize(&scaled, sample_rate, duration)?;
    let g = compute_g(&scaled, sample_rate, duration)?;
    let sum_sq: f64 = scaled.components().iter().map(|c| c.amplitude * c.amplitude).sum();
    let dc = SQRT_2 / 4.0 * sum_sq.sqrt();
    let coefficients = taylor_coefficients(cfg.n_terms);
    let samples = x
        .samples()
        .iter()
        .zip(g.samples())
        .map(|(&xv, &gv)| {
            let y = dc + 0.5 * xv + dc * series_tail(&coefficients, gv, 1);
            y / cfg.prescale
        })
        .collect();
    let report = convergence_report(&g);
    Ok(Approximation {
        output: Signal::from_parts_unchecked(samples, sample_rate),
        g,
        report,
    })
}

/// Median absolute error of [`approximate_relu`] against `relu(x)` on the
/// samples where `|g| < g_limit`, once per entry of `term_counts`.
pub fn subset_error_profile(
    tones: &MultiTone,
    sample_rate: f64,
    duration: f64,
    prescale: f64,
    term_counts: &[usize],
    g_limit: f64,
) -> Result<Vec<f64>> {
    let exact = relu(&synthesize(tones, sample_rate, duration)?);
    term_counts
        .iter()
        .map(|&n_terms| {
            let approx = approximate_relu(
                tones,
                sample_rate,
                duration,
                &TaylorConfig { n_terms, prescale },
            )?;
            let errors: Vec<f64> = approx
                .output
                .samples()
                .iter()
                .zip(exact.samples())
                .zip(approx.g.samples())
                .filter(|(_, g)| g.abs() < g_limit)
                .map(|((a, e), _)| (a - e).abs())
                .collect();
            if errors.is_empty() {
                return Err(Error::DegenerateInput("no samples inside the |g| limit"));
            }
            Ok(crate::stats::median(&errors))
        })
        .collect()
}

/// Zeroth-order DC after a filter with gains `bᵢ`: `(√2/4)·√(Σ aᵢ² bᵢ²)`.
pub fn dc_model(amplitudes: &[f64], gains: &[f64]) -> Result<f64> {
    if amplitudes.len() != gains.len() {
        return Err(Error::LengthMismatch {
            expected: amplitudes.len(),
            actual: gains.len(),
        });
    }
    if let Some(b) = gains.iter().find(|&&b| !(b >= 0.0)) {
        return Err(invalid(format!("filter gains must be >= 0, got {b}")));
    }
    let s: f64 = amplitudes.iter().zip(gains).map(|(a, b)| a * a * b * b).sum();
    Ok(SQRT_2 / 4.0 * s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multitone::{harmonic_stack, CosineComponent};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive};
    use std::f64::consts::PI;

    fn tones(spec: &[(f64, f64)]) -> MultiTone {
        MultiTone::new(
            spec.iter()
                .map(|&(a, f)| CosineComponent::zero_phase(a, f).unwrap()),
        )
    }

    /// Exact `(−1)ⁿ (2n)! / ((1 − 2n)(n!)² 4ⁿ)` in rational arithmetic.
    fn exact_coefficient(n: u32) -> f64 {
        let fact = |m: u32| (1..=m).fold(BigInt::one(), |acc, k| acc * BigInt::from(k));
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let num = fact(2 * n) * BigInt::from(sign);
        let den = BigInt::from(1 - 2 * n as i64) * fact(n) * fact(n) * BigInt::from(4).pow(n);
        BigRational::new(num, den).to_f64().unwrap()
    }

    #[test]
    fn coefficients_match_table() {
        let c = taylor_coefficients(8);
        let expected = [
            1.0,
            0.5,
            -0.125,
            0.0625,
            -0.0390625,
            0.02734375,
            -0.0205078125,
            0.01611328125,
        ];
        assert_eq!(c, expected);
        // half a unit in the last printed digit
        let printed = ["1", "0.5", "-0.125", "0.0625", "-0.039", "0.027", "-0.02", "0.016"];
        for (v, p) in c.iter().zip(printed) {
            let decimals = p.split_once('.').map_or(0, |(_, d)| d.len());
            let tol = 0.5 * 10f64.powi(-(decimals as i32));
            let p: f64 = p.parse().unwrap();
            assert!((v - p).abs() <= tol, "{v} vs {p}");
        }
    }

    #[test]
    fn recurrence_matches_exact_rationals() {
        let c = taylor_coefficients(21);
        for n in 0..=20u32 {
            let exact = exact_coefficient(n);
            assert!(
                (c[n as usize] - exact).abs() <= 1e-12 * exact.abs().max(1e-300),
                "n={n}: {} vs {exact}",
                c[n as usize]
            );
        }
    }

    #[test]
    fn third_term_share() {
        let c = taylor_coefficients(4);
        assert_eq!(c[3], 0.0625);
        let share = term_share(&c, 3);
        assert!((share - 0.0625 / 1.6875).abs() < 1e-15);
        assert!((share - 0.037).abs() < 1e-3);
    }

    #[test]
    fn relu_examples() {
        let s = Signal::new(vec![-1.0, 0.0, 2.0], 1.0).unwrap();
        assert_eq!(relu(&s).samples(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn a_examples() {
        assert_eq!(compute_a(&tones(&[(1.0, 1.0)])).unwrap(), 0.5);
        assert_eq!(compute_a(&harmonic_stack(5.0, 4, &[1.0; 4]).unwrap()).unwrap(), 2.0);
        assert_eq!(compute_a(&tones(&[(3.0, 1.0), (4.0, 2.0)])).unwrap(), 12.5);
        assert!(matches!(
            compute_a(&tones(&[(0.0, 1.0)])),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn g_single_tone_and_four_harmonics() {
        let g = compute_g(&tones(&[(1.0, 3.0)]), 64.0, 1.0).unwrap();
        for (k, &v) in g.samples().iter().enumerate() {
            assert!((v - (2.0 * TAU * 3.0 * k as f64 / 64.0).cos()).abs() < 1e-12);
        }
        assert_eq!(g.samples()[0], 1.0);
        let g = compute_g(&harmonic_stack(5.0, 4, &[1.0; 4]).unwrap(), 1024.0, 1.0).unwrap();
        assert!((g.samples()[0] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn g_closed_form_matches_samplewise_identity() {
        let t = tones(&[(0.7, 3.0), (1.3, 11.0), (0.2, 17.0)]);
        let a = compute_a(&t).unwrap();
        let closed = compute_g(&t, 256.0, 2.0).unwrap();
        let direct = g_from_samples(&synthesize(&t, 256.0, 2.0).unwrap(), a).unwrap();
        for (c, d) in closed.samples().iter().zip(direct.samples()) {
            assert!((c - d).abs() < 1e-10);
        }
    }

    #[test]
    fn g_rejects_phase_and_zero_power() {
        let t = MultiTone::new([CosineComponent::new(1.0, 2.0, 0.3).unwrap()]);
        assert!(matches!(compute_g(&t, 64.0, 1.0), Err(Error::NonZeroPhase(_))));
        assert!(matches!(
            compute_g(&tones(&[(0.0, 2.0)]), 64.0, 1.0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn g_from_samples_examples() {
        let a: f64 = 2.5;
        let c = Signal::new(vec![a.sqrt(); 8], 8.0).unwrap();
        assert!(g_from_samples(&c, a).unwrap().samples().iter().all(|v| v.abs() < 1e-15));
        let z = Signal::new(vec![0.0; 8], 8.0).unwrap();
        assert!(g_from_samples(&z, 1.0).unwrap().samples().iter().all(|&v| v == -1.0));
        assert!(g_from_samples(&z, 0.0).is_err());
        assert!(g_from_samples(&z, -1.0).is_err());
    }

    #[test]
    fn convergence_examples() {
        let zero = Signal::new(vec![0.0; 16], 16.0).unwrap();
        let r = convergence_report(&zero);
        assert_eq!((r.max_abs_g, r.fraction_violating, r.valid), (0.0, 0.0, true));

        let g = compute_g(&tones(&[(1.0, 4.0)]), 64.0, 1.0).unwrap();
        let r = convergence_report(&g);
        assert!((r.max_abs_g - 1.0).abs() < 1e-12);
        assert!(r.fraction_violating > 0.0);
        assert!(!r.valid);

        let g = compute_g(&harmonic_stack(5.0, 4, &[1.0; 4]).unwrap(), 1024.0, 1.0).unwrap();
        let r = convergence_report(&g);
        assert!((r.max_abs_g - 7.0).abs() < 1e-12);
        assert!(r.fraction_violating > 0.0 && !r.valid);
    }

    #[test]
    fn single_tone_error_shrinks_with_terms_inside_region() {
        let t = tones(&[(1.0, 3.0)]);
        let errs = subset_error_profile(&t, 1000.0, 1.0, 1e-4, &[2, 5, 10, 25, 50, 200], 0.99)
            .unwrap();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0], "{errs:?}");
        }
        assert!(errs[5] < 1e-3, "{errs:?}");
    }

    #[test]
    fn approximation_is_prescale_invariant() {
        let t = tones(&[(1.0, 3.0), (0.5, 7.0)]);
        let a = approximate_relu(&t, 128.0, 1.0, &TaylorConfig { n_terms: 30, prescale: 1e-4 })
            .unwrap();
        let b = approximate_relu(&t, 128.0, 1.0, &TaylorConfig { n_terms: 30, prescale: 1e-2 })
            .unwrap();
        for (x, y) in a.output.samples().iter().zip(b.output.samples()) {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn approximation_rejects_bad_config() {
        let t = tones(&[(1.0, 3.0)]);
        let bad = TaylorConfig { n_terms: 0, prescale: 1.0 };
        assert!(approximate_relu(&t, 64.0, 1.0, &bad).is_err());
        let bad = TaylorConfig { n_terms: 3, prescale: 0.0 };
        assert!(approximate_relu(&t, 64.0, 1.0, &bad).is_err());
        assert!(matches!(
            approximate_relu(&tones(&[(0.0, 3.0)]), 64.0, 1.0, &TaylorConfig::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn single_tone_approximation_spectrum_lines() {
        // energy only at DC, f, and multiples of 2f
        let t = tones(&[(1.0, 4.0)]);
        let approx = approximate_relu(&t, 256.0, 1.0, &TaylorConfig { n_terms: 12, prescale: 1.0 })
            .unwrap();
        let sp = crate::spectral::spectrum(&approx.output);
        let mags = sp.magnitudes();
        let peak = mags.iter().copied().fold(0.0, f64::max);
        for k in 0..=128 {
            let allowed = k == 0 || k == 4 || k % 8 == 0;
            if !allowed {
                assert!(mags[k] < 1e-9 * peak, "bin {k}: {}", mags[k]);
            }
        }
        assert!(mags[8] > 1e-3);
    }

    #[test]
    fn dc_model_examples() {
        assert!((dc_model(&[1.0], &[1.0]).unwrap() - SQRT_2 / 4.0).abs() < 1e-15);
        assert!((dc_model(&[1.0, 1.0], &[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(dc_model(&[1.0], &[1.0, 2.0]).is_err());
        assert!(dc_model(&[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn dc_model_over_exact_relu_mean() {
        // midpoint quadrature of max(0, a cos θ) over one period
        for a in [0.5, 1.0, 2.0, 3.7] {
            let m = 200_000;
            let mean = (0..m)
                .map(|k| (a * (TAU * (k as f64 + 0.5) / m as f64).cos()).max(0.0))
                .sum::<f64>()
                / m as f64;
            assert!((mean - a / PI).abs() < 1e-9);
            let ratio = dc_model(&[a], &[1.0]).unwrap() / mean;
            assert!((ratio - SQRT_2 / 4.0 * PI).abs() < 1e-8);
            assert!((ratio - 1.1107).abs() < 1e-4);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn zero_phase_tones() -> impl Strategy<Value = MultiTone> {
            prop::collection::vec((0.05f64..3.0, 1usize..60), 1..6).prop_map(|v| {
                MultiTone::new(
                    v.into_iter()
                        .map(|(a, bin)| CosineComponent::zero_phase(a, bin as f64).unwrap()),
                )
            })
        }

        proptest! {
            #[test]
            fn square_decomposes_into_a_and_g(t in zero_phase_tones()) {
                let x = synthesize(&t, 128.0, 1.0).unwrap();
                let a = compute_a(&t).unwrap();
                let g = compute_g(&t, 128.0, 1.0).unwrap();
                for (xv, gv) in x.samples().iter().zip(g.samples()) {
                    prop_assert!((xv * xv - a * (1.0 + gv)).abs() < 1e-9);
                }
            }

            #[test]
            fn relu_identities(x in prop::collection::vec(-1e3f64..1e3, 1..64)) {
                let s = Signal::new(x.clone(), 1.0).unwrap();
                let r = relu(&s);
                let rr = relu(&r);
                prop_assert_eq!(rr.samples(), r.samples());
                let neg = relu(&s.map(|v| -v));
                for ((&v, &rv), &nv) in x.iter().zip(r.samples()).zip(neg.samples()) {
                    prop_assert_eq!(rv, (v + v.abs()) / 2.0);
                    prop_assert_eq!(rv - v / 2.0, v.abs() / 2.0);
                    prop_assert_eq!(rv + nv, v.abs());
                }
            }

            #[test]
            fn partial_sums_converge(g in -0.9f64..0.9) {
                let c = taylor_coefficients(50);
                prop_assert!((taylor_sqrt(&c, g) - (1.0 + g).sqrt()).abs() < 1e-3);
            }

            #[test]
            fn dc_model_homogeneous_and_monotone(
                ab in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..8),
                alpha in 0.0f64..10.0,
                bump in 0.0f64..2.0,
                idx in 0usize..8,
            ) {
                let a: Vec<f64> = ab.iter().map(|p| p.0).collect();
                let b: Vec<f64> = ab.iter().map(|p| p.1).collect();
                let base = dc_model(&a, &b).unwrap();
                let scaled: Vec<f64> = a.iter().map(|v| alpha * v).collect();
                prop_assert!((dc_model(&scaled, &b).unwrap() - alpha * base).abs() <= 1e-12 * (1.0 + alpha * base));
                let mut b2 = b.clone();
                let i = idx % b2.len();
                b2[i] += bump;
                prop_assert!(dc_model(&a, &b2).unwrap() >= base);
            }
        }
    }
}
