//! Finite-difference verification of reverse-mode gradients.

/// Step used for central differences.
pub const STEP: f64 = 1e-5;

/// Compares the analytic gradient of `loss` at `params` with central
/// differences. `loss(p, Some(g))` must add its gradient into `g`.
///
/// Returns the worst `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`
/// over all parameters; the floor keeps parameters with a vanishing gradient
/// from dominating.
pub fn gradient_check<F>(params: &[f64], loss: F) -> f64
where
    F: Fn(&[f64], Option<&mut [f64]>) -> f64,
{
    let mut analytic = vec![0.0; params.len()];
    loss(params, Some(&mut analytic));
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let x = p[i];
        p[i] = x + STEP;
        let hi = loss(&p, None);
        p[i] = x - STEP;
        let lo = loss(&p, None);
        p[i] = x;
        let numeric = (hi - lo) / (2.0 * STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}
