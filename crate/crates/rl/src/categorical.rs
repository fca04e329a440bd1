//! Categorical distributions over order levels, one per action head.

use rand::Rng;

/// Numerically stable `log softmax(z)`.
pub fn log_softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for &z in logits {
        sum += (z - max).exp();
    }
    let log_norm = max + sum.ln();
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = z - log_norm;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    log_softmax(logits, &mut out);
    out.iter_mut().for_each(|x| *x = x.exp());
    out
}

/// Entropy in nats from log-probabilities.
pub fn entropy(log_probs: &[f64]) -> f64 {
    -log_probs.iter().map(|&lp| lp.exp() * lp).sum::<f64>()
}

/// Lowest index among the largest logits.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from log-probabilities.
pub fn sample<R: Rng + ?Sized>(log_probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &lp) in log_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return i;
        }
    }
    // Only reachable through rounding when u is within an ulp of 1.
    log_probs
        .iter()
        .rposition(|lp| lp.is_finite())
        .unwrap_or(log_probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_logits_are_uniform() {
        let p = softmax(&[0.0; 21]);
        assert!(p.iter().all(|&x| (x - 1.0 / 21.0).abs() < 1e-15));
    }

    #[test]
    fn dominant_logit_wins_almost_always() {
        let mut logits = vec![0.0; 21];
        logits[7] = 20.0;
        let mut lp = vec![0.0; 21];
        log_softmax(&logits, &mut lp);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let hits = (0..10_000).filter(|_| sample(&lp, &mut rng) == 7).count();
        assert!(hits as f64 / 1e4 > 0.999, "{hits}");
    }

    #[test]
    fn uniform_sampling_entropy() {
        let lp = vec![-(21f64.ln()); 21];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 21];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample(&lp, &mut rng)] += 1;
        }
        let h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / draws as f64;
                -p * p.ln()
            })
            .sum();
        assert!((h - 21f64.ln()).abs() / 21f64.ln() < 0.01, "{h}");
        assert!((entropy(&lp) - 21f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_first_tie() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(logits in prop::collection::vec(-50.0f64..50.0, 1..30)) {
            let p = softmax(&logits);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn shift_invariance(logits in prop::collection::vec(-20.0f64..20.0, 1..30), c in -100.0f64..100.0) {
            let shifted: Vec<f64> = logits.iter().map(|z| z + c).collect();
            let (p, q) = (softmax(&logits), softmax(&shifted));
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert_eq!(argmax(&logits), argmax(&shifted));
        }
    }
}
