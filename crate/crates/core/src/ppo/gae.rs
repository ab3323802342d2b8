/// Generalized advantage estimation over one episode.
///
/// `delta_t = r_t + gamma * V_{t+1} - V_t` with `V_T = bootstrap`, and
/// `A_t = delta_t + gamma * lambda * A_{t+1}`. Returns `(advantages, returns)`
/// where `returns_t = A_t + V_t`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len(), "rewards and values must align");
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts and scales to zero mean and unit standard deviation (population),
/// with `1e-8` added to the standard deviation.
pub fn normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_hand_example() {
        let (a, r) = compute_gae(&[1.0, 1.0], &[0.5, 0.5], 0.0, 0.99, 0.95);
        assert!((a[1] - 0.5).abs() < 1e-12);
        assert!((a[0] - 1.46525).abs() < 1e-12);
        assert!((r[0] - 1.96525).abs() < 1e-12);
    }

    #[test]
    fn unit_discount_is_monte_carlo() {
        let rewards = [0.5, -1.0, 2.0, 0.25];
        let values = [0.1, 0.3, -0.2, 0.7];
        let (a, _) = compute_gae(&rewards, &values, 0.0, 1.0, 1.0);
        for t in 0..4 {
            let tail: f64 = rewards[t..].iter().sum();
            assert!((a[t] - (tail - values[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn zeros_in_zeros_out() {
        let (a, r) = compute_gae(&[0.0; 5], &[0.0; 5], 0.0, 0.99, 0.95);
        assert!(a.iter().chain(&r).all(|&v| v == 0.0));
    }

    #[test]
    fn normalization_moments() {
        let mut v: Vec<f64> = (0..37)
            .map(|i| (i as f64 * 0.7).sin() * 5.0 + 3.0)
            .collect();
        normalize(&mut v);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-6);
    }
}
