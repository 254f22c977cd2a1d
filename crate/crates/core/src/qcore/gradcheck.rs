use alloc::vec::Vec;

use super::{td_loss_from_cache, td_loss_grad, Batch, ForwardCache, MlpParams, QcoreError};

/// Symmetric relative error with a floor so that two near-zero values
/// compare as equal.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        return (a - b).abs();
    }
    (a - b).abs() / scale
}

/// Largest relative error between the backprop gradient and a
/// central-difference estimate with step `eps`.
pub fn grad_check(
    p: &MlpParams,
    batch: &Batch,
    cql_alpha: Option<f64>,
    eps: f64,
) -> Result<f64, QcoreError> {
    let (_, analytic) = td_loss_grad(p, batch, cql_alpha)?;
    grad_check_against(p, batch, cql_alpha, eps, &analytic)
}

/// Same as [`grad_check`] but against a caller-supplied gradient, which lets
/// tests confirm a corrupted gradient is caught.
pub fn grad_check_against(
    p: &MlpParams,
    batch: &Batch,
    cql_alpha: Option<f64>,
    eps: f64,
    analytic: &MlpParams,
) -> Result<f64, QcoreError> {
    if !p.same_shape(analytic) {
        return Err(QcoreError::Shape(
            "gradient shape differs from params".into(),
        ));
    }
    batch.check(p)?;
    let mut probe = p.clone();
    let base = relu_pattern(&probe.forward_cached(&batch.states)?);
    let mut worst = 0.0f64;
    for (i, &g) in analytic.iter().enumerate() {
        let original = *probe.param_mut(i);
        // A difference across a ReLU kink measures nothing; shrink the step
        // until both probes keep every unit on the same side.
        let mut h = eps;
        let numeric = loop {
            *probe.param_mut(i) = original + h;
            let up = probe.forward_cached(&batch.states)?;
            *probe.param_mut(i) = original - h;
            let down = probe.forward_cached(&batch.states)?;
            let smooth = relu_pattern(&up) == base && relu_pattern(&down) == base;
            if smooth || h <= MIN_STEP {
                let l_up = td_loss_from_cache(&probe, &up, batch, cql_alpha);
                let l_down = td_loss_from_cache(&probe, &down, batch, cql_alpha);
                break (l_up - l_down) / (2.0 * h);
            }
            h *= 0.1;
        };
        *probe.param_mut(i) = original;
        worst = worst.max(relative_error(g, numeric));
    }
    Ok(worst)
}

const MIN_STEP: f64 = 1e-9;

/// On/off state of every hidden unit over the batch.
fn relu_pattern(cache: &ForwardCache) -> Vec<bool> {
    let hidden = &cache.acts[1..cache.acts.len() - 1];
    hidden.iter().flatten().map(|&a| a > 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ActionIndex;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Batch {
        Batch {
            states: (0..n * 6).map(|_| rng.random_range(0.0..4.0)).collect(),
            actions: (0..n)
                .map(|_| ActionIndex::new(rng.random_range(0..5)).unwrap())
                .collect(),
            targets: (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MlpParams::new(&[6, 12, 12, 5], &mut rng);
            let batch = random_batch(&mut rng, 4);
            assert!(grad_check(&p, &batch, None, 1e-5).unwrap() < 1e-4);
            assert!(grad_check(&p, &batch, Some(0.7), 1e-5).unwrap() < 1e-4);
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = MlpParams::new(&[6, 12, 12, 5], &mut rng);
        let batch = random_batch(&mut rng, 4);
        let (_, mut g) = td_loss_grad(&p, &batch, None).unwrap();
        // Drop the output bias gradient of one touched action.
        let a = batch.actions[0].index();
        g.layers[2].bias[a] = 0.0;
        let err = grad_check_against(&p, &batch, None, 1e-5, &g).unwrap();
        assert!(err > 1e-2, "corruption went unnoticed: {err}");
    }

    #[test]
    fn steps_shrink_at_relu_kinks() {
        // One hidden unit whose pre-activation sits 1e-4 above zero; a 1e-2
        // step on its bias would straddle the kink.
        let mut p = MlpParams::zeros(&[1, 1, 5]);
        p.layers[0].weights = vec![1.0];
        p.layers[0].bias = vec![1e-4 - 0.5];
        p.layers[1].weights = vec![2.0, 0.0, 0.0, 0.0, 0.0];
        let batch = Batch {
            states: vec![0.5],
            actions: vec![ActionIndex::new(0).unwrap()],
            targets: vec![-1.0],
        };
        assert!(grad_check(&p, &batch, None, 1e-2).unwrap() < 1e-6);
        assert!(grad_check(&p, &batch, Some(1.0), 1e-2).unwrap() < 1e-4);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1e-12, -1e-12) < 1e-10);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }
}
