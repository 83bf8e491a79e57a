use serde::Serialize;

use crate::error::{invalid, Result};

use super::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Parameters,
    pub second_moment: Parameters,
    pub step_count: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(like: &Parameters, hyper: AdamHyper) -> Result<Self> {
        if !(0.0..1.0).contains(&hyper.beta1) || !(0.0..1.0).contains(&hyper.beta2) {
            return Err(invalid("Adam betas must lie in [0, 1)"));
        }
        if !(hyper.lr > 0.0 && hyper.epsilon > 0.0) {
            return Err(invalid("Adam lr and epsilon must be positive"));
        }
        Ok(Self {
            first_moment: Parameters::zeros_like(like),
            second_moment: Parameters::zeros_like(like),
            step_count: 0,
            hyper,
        })
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut Parameters, grads: &Parameters) -> Result<()> {
    params.check_shape(grads)?;
    params.check_shape(&state.first_moment)?;
    state.step_count += 1;
    let AdamHyper {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.hyper;
    let t = state.step_count as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params
        .values_mut()
        .zip(grads.values())
        .zip(state.first_moment.values_mut())
        .zip(state.second_moment.values_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::LayerParams;

    fn params(w: &[f64]) -> Parameters {
        Parameters {
            conv: vec![LayerParams {
                weights: w.to_vec(),
                biases: vec![0.0],
            }],
            dense: vec![],
        }
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = params(&[1.0, -2.0, 0.5]);
        let g = params(&[0.3, -4.0, 1e-3]);
        let mut st = AdamState::new(&p, AdamHyper::default()).unwrap();
        adam_step(&mut st, &mut p, &g).unwrap();
        let expected = [1.0 - 1e-3, -2.0 + 1e-3, 0.5 - 1e-3];
        for (v, e) in p.conv[0].weights.iter().zip(expected) {
            assert!((v - e).abs() < 1e-7, "{v} vs {e}");
        }
        assert_eq!(p.conv[0].biases[0], 0.0);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut p = params(&[1.0]);
        let mut st = AdamState::new(&p, AdamHyper::default()).unwrap();
        adam_step(&mut st, &mut p, &params(&[2.0])).unwrap();
        let after_one = p.clone();
        let m1 = st.first_moment.conv[0].weights[0];
        let v1 = st.second_moment.conv[0].weights[0];
        adam_step(&mut st, &mut p, &params(&[0.0])).unwrap();
        assert!((st.first_moment.conv[0].weights[0] - 0.9 * m1).abs() < 1e-15);
        assert!((st.second_moment.conv[0].weights[0] - 0.999 * v1).abs() < 1e-15);
        // the decayed first moment still pushes, so compare against a fresh state
        let mut fresh = AdamState::new(&p, AdamHyper::default()).unwrap();
        let mut q = after_one.clone();
        adam_step(&mut fresh, &mut q, &params(&[0.0])).unwrap();
        assert_eq!(q, after_one);
    }

    #[test]
    fn identical_gradient_sequences_match() {
        let grads = [params(&[0.1, -0.2]), params(&[0.5, 0.0]), params(&[-1.0, 3.0])];
        let run = || {
            let mut p = params(&[0.0, 0.0]);
            let mut st = AdamState::new(&p, AdamHyper::default()).unwrap();
            for g in &grads {
                adam_step(&mut st, &mut p, g).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_and_hyper_checks() {
        let mut p = params(&[0.0, 0.0]);
        let mut st = AdamState::new(&p, AdamHyper::default()).unwrap();
        assert!(adam_step(&mut st, &mut p, &params(&[1.0])).is_err());
        let bad = AdamHyper {
            beta1: 1.0,
            ..AdamHyper::default()
        };
        assert!(AdamState::new(&p, bad).is_err());
    }
}
