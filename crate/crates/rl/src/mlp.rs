//! Small fully connected networks with a hand-written reverse pass.
//!
//! Parameters live in one flat `f64` buffer. Layer `i` stores its weight
//! matrix `W_i` (`out x in`, row-major) followed by its bias `b_i`. Hidden
//! layers use `tanh`; the output layer is linear.

use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    num_params: usize,
}

/// Activations saved by [`Mlp::forward`] for the reverse pass.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    /// `acts[0]` is the input, `acts[i]` the output of layer `i - 1`.
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    /// `sizes = [input, hidden..., output]`; at least two entries.
    pub fn new(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs an input and an output size");
        assert!(sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        let mut offsets = Vec::with_capacity(sizes.len() - 1);
        let mut total = 0;
        for w in sizes.windows(2) {
            offsets.push(total);
            total += w[1] * w[0] + w[1];
        }
        Self {
            sizes: sizes.to_vec(),
            offsets,
            num_params: total,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Range of layer `i`'s weights and biases inside the flat buffer.
    pub fn layer_ranges(&self, i: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (fan_in, fan_out) = (self.sizes[i], self.sizes[i + 1]);
        let w = self.offsets[i]..self.offsets[i] + fan_in * fan_out;
        let b = w.end..w.end + fan_out;
        (w, b)
    }

    /// Gaussian weights with variance `1 / fan_in` (times `gain` squared on
    /// the output layer, per output row) and zero biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R, output_gain: &[f64]) -> Vec<f64> {
        assert_eq!(output_gain.len(), self.output_len());
        let mut params = vec![0.0; self.num_params];
        let last = self.num_layers() - 1;
        for i in 0..self.num_layers() {
            let fan_in = self.sizes[i];
            let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).unwrap();
            let (w, _) = self.layer_ranges(i);
            for (j, x) in params[w].iter_mut().enumerate() {
                let gain = if i == last { output_gain[j / fan_in] } else { 1.0 };
                *x = gain * normal.sample(rng);
            }
        }
        params
    }

    /// Forward pass; the output is `tape.output()`.
    pub fn forward(&self, params: &[f64], input: &[f64], tape: &mut Tape) {
        assert_eq!(params.len(), self.num_params, "parameter count mismatch");
        assert_eq!(input.len(), self.input_len(), "input length mismatch");
        tape.acts.resize_with(self.sizes.len(), Vec::new);
        tape.acts[0].clear();
        tape.acts[0].extend_from_slice(input);
        let last = self.num_layers() - 1;
        for i in 0..self.num_layers() {
            let (w, b) = self.layer_ranges(i);
            let (head, tail) = tape.acts.split_at_mut(i + 1);
            let x = &head[i];
            let y = &mut tail[0];
            y.clear();
            for (row, &bias) in params[w].chunks_exact(x.len()).zip(&params[b]) {
                let z = dot(row, x) + bias;
                y.push(if i == last { z } else { z.tanh() });
            }
        }
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    /// Returns `d loss / d input`.
    pub fn backward(&self, params: &[f64], tape: &Tape, grad_output: &[f64], grad: &mut [f64]) -> Vec<f64> {
        assert_eq!(grad.len(), self.num_params);
        assert_eq!(grad_output.len(), self.output_len());
        let last = self.num_layers() - 1;
        let mut delta = grad_output.to_vec();
        for i in (0..self.num_layers()).rev() {
            if i != last {
                // y = tanh(z), dy/dz = 1 - y^2
                for (d, &y) in delta.iter_mut().zip(&tape.acts[i + 1]) {
                    *d *= 1.0 - y * y;
                }
            }
            let x = &tape.acts[i];
            let (w, b) = self.layer_ranges(i);
            for (g, &d) in grad[b].iter_mut().zip(&delta) {
                *g += d;
            }
            let gw = &mut grad[w.clone()];
            for (row, &d) in gw.chunks_exact_mut(x.len()).zip(&delta) {
                if d != 0.0 {
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            let mut prev = vec![0.0; x.len()];
            for (row, &d) in params[w].chunks_exact(x.len()).zip(&delta) {
                if d != 0.0 {
                    for (p, &wij) in prev.iter_mut().zip(row) {
                        *p += d * wij;
                    }
                }
            }
            delta = prev;
        }
        delta
    }
}

/// Four independent accumulators, combined pairwise.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_layout() {
        let m = Mlp::new(&[3, 4, 2]);
        assert_eq!(m.num_params(), 3 * 4 + 4 + 4 * 2 + 2);
        let (w, b) = m.layer_ranges(1);
        assert_eq!(w, 16..24);
        assert_eq!(b, 24..26);
    }

    #[test]
    fn forward_matches_hand_computation() {
        let m = Mlp::new(&[2, 2, 1]);
        // W0 = [[1, 2], [3, 4]], b0 = [0.5, -0.5], W1 = [[1, -1]], b1 = [0.25]
        let p = [1.0, 2.0, 3.0, 4.0, 0.5, -0.5, 1.0, -1.0, 0.25];
        let mut tape = Tape::default();
        m.forward(&p, &[0.1, -0.2], &mut tape);
        let h0 = (0.1f64 - 0.4 + 0.5).tanh();
        let h1 = (0.3f64 - 0.8 - 0.5).tanh();
        assert!((tape.output()[0] - (h0 - h1 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (0..7).map(|i| i as f64).collect();
        assert_eq!(dot(&a, &a), 91.0);
    }

    #[test]
    fn input_gradient_matches_differences() {
        let m = Mlp::new(&[3, 5, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = m.init(&mut rng, &[1.0, 1.0]);
        let x = [0.3, -0.7, 0.2];
        let mut tape = Tape::default();
        m.forward(&p, &x, &mut tape);
        let mut g = vec![0.0; m.num_params()];
        let dx = m.backward(&p, &tape, &[1.0, 0.0], &mut g);
        for i in 0..3 {
            let mut hi = x;
            let mut lo = x;
            hi[i] += 1e-6;
            lo[i] -= 1e-6;
            m.forward(&p, &hi, &mut tape);
            let f_hi = tape.output()[0];
            m.forward(&p, &lo, &mut tape);
            let f_lo = tape.output()[0];
            assert!((dx[i] - (f_hi - f_lo) / 2e-6).abs() < 1e-8);
        }
    }

    #[test]
    fn init_scales_output_rows() {
        let m = Mlp::new(&[4, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = m.init(&mut rng, &[0.0, 1.0, 0.0]);
        assert!(p[0..4].iter().all(|&x| x == 0.0));
        assert!(p[4..8].iter().any(|&x| x != 0.0));
        assert!(p[12..15].iter().all(|&x| x == 0.0));
    }
}
