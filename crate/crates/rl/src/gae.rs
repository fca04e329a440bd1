//! Generalized advantage estimation.

/// Backward GAE recursion. `dones[t]` marks the last step of an episode;
/// the value after it is taken as zero and the recursion restarts.
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let (next_value, next_carry) = if dones[t] || t + 1 == n {
            (0.0, 0.0)
        } else {
            (values[t + 1], carry)
        };
        let delta = rewards[t] + gamma * next_value - values[t];
        carry = delta + gamma * lambda * next_carry;
        adv[t] = carry;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts to zero mean and scales to unit variance. A constant batch is
/// only centered.
pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in xs.iter_mut() {
        *x -= mean;
        if std > 1e-12 {
            *x /= std;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lambda_zero_is_one_step_td() {
        let r = [1.0, -2.0, 0.5, 3.0];
        let v = [0.3, 0.7, -0.2, 1.1];
        let (adv, _) = compute_gae(&r, &v, &[false, false, false, true], 0.9, 0.0);
        for t in 0..3 {
            assert_eq!(adv[t], r[t] + 0.9 * v[t + 1] - v[t]);
        }
        assert_eq!(adv[3], r[3] - v[3]);
    }

    #[test]
    fn lambda_one_is_reward_to_go() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let (adv, ret) = compute_gae(&r, &[0.0; 4], &[false, false, false, true], 1.0, 1.0);
        assert_eq!(adv, vec![10.0, 9.0, 7.0, 4.0]);
        assert_eq!(ret, adv);
    }

    #[test]
    fn three_step_hand_example() {
        // delta_2 = 3 - 0.5 = 2.5
        // delta_1 = 2 + 0.45 - 0.5 = 1.95
        // delta_0 = 1 + 0.45 - 0.5 = 0.95
        // A_2 = 2.5, A_1 = 1.95 + 0.72 * 2.5 = 3.75, A_0 = 0.95 + 0.72 * 3.75 = 3.65
        let (adv, ret) = compute_gae(&[1.0, 2.0, 3.0], &[0.5; 3], &[false, false, true], 0.9, 0.8);
        let want = [3.65, 3.75, 2.5];
        for t in 0..3 {
            assert!((adv[t] - want[t]).abs() < 1e-12, "{adv:?}");
            assert!((ret[t] - want[t] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn episode_boundary_resets_recursion() {
        let (joined, _) = compute_gae(&[1.0, 2.0, 3.0, 4.0], &[0.1, 0.2, 0.3, 0.4], &[false, true, false, true], 0.9, 0.8);
        let (a, _) = compute_gae(&[1.0, 2.0], &[0.1, 0.2], &[false, true], 0.9, 0.8);
        let (b, _) = compute_gae(&[3.0, 4.0], &[0.3, 0.4], &[false, true], 0.9, 0.8);
        assert_eq!(joined, [a, b].concat());
    }

    proptest! {
        #[test]
        fn normalized_moments(xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            let mut ys = xs.clone();
            normalize(&mut ys);
            let n = ys.len() as f64;
            let mean = ys.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            let var = ys.iter().map(|y| y * y).sum::<f64>() / n;
            let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - xs.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread > 1e-6 {
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }
    }
}
