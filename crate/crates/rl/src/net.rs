//! Actor-critic network: a tanh trunk whose linear output layer carries
//! every categorical head's logits followed by one value estimate.

use rand::Rng;

use crate::categorical::{argmax, entropy, log_softmax, sample};
use crate::mlp::{Mlp, Tape};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    mlp: Mlp,
    num_heads: usize,
    levels: usize,
    pub params: Vec<f64>,
}

/// Per-head log-probabilities and the value estimate for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `num_heads * levels`, head-major.
    pub log_probs: Vec<f64>,
    pub value: f64,
}

impl Evaluation {
    pub fn head(&self, h: usize, levels: usize) -> &[f64] {
        &self.log_probs[h * levels..(h + 1) * levels]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Sample,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub levels: Vec<usize>,
    /// Sum of the chosen levels' log-probabilities over all heads.
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("observation has {got} entries, network expects {want}")]
pub struct DimensionMismatch {
    pub got: usize,
    pub want: usize,
}

impl PolicyNet {
    /// Zero-initialized network with the given hidden widths.
    pub fn zeros(input: usize, hidden: &[usize], num_heads: usize, levels: usize) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(num_heads * levels + 1);
        let mlp = Mlp::new(&sizes);
        Self {
            params: vec![0.0; mlp.num_params()],
            mlp,
            num_heads,
            levels,
        }
    }

    /// Random trunk; policy rows start near zero so every head begins almost
    /// uniform.
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        num_heads: usize,
        levels: usize,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(input, hidden, num_heads, levels);
        let mut gain = vec![0.01; num_heads * levels];
        gain.push(1.0);
        net.params = net.mlp.init(rng, &gain);
        net
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn input_len(&self) -> usize {
        self.mlp.input_len()
    }

    pub fn num_heads(&self) -> usize {
        self.num_heads
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn hidden(&self) -> &[usize] {
        let s = self.mlp.sizes();
        &s[1..s.len() - 1]
    }

    /// Raw outputs: `(logits, value)`.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, f64), DimensionMismatch> {
        self.check(obs)?;
        let mut tape = Tape::default();
        self.mlp.forward(&self.params, obs, &mut tape);
        let out = tape.output();
        let split = self.num_heads * self.levels;
        Ok((out[..split].to_vec(), out[split]))
    }

    pub fn evaluate(&self, obs: &[f64]) -> Result<Evaluation, DimensionMismatch> {
        let (logits, value) = self.forward(obs)?;
        let mut log_probs = vec![0.0; logits.len()];
        for (z, lp) in logits.chunks_exact(self.levels).zip(log_probs.chunks_exact_mut(self.levels)) {
            log_softmax(z, lp);
        }
        Ok(Evaluation { log_probs, value })
    }

    /// Picks one level per head, sampled or greedy.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        mode: ActMode,
        rng: &mut R,
    ) -> Result<Decision, DimensionMismatch> {
        let ev = self.evaluate(obs)?;
        let mut levels = Vec::with_capacity(self.num_heads);
        let mut log_prob = 0.0;
        for h in 0..self.num_heads {
            let lp = ev.head(h, self.levels);
            let a = match mode {
                ActMode::Sample => sample(lp, rng),
                ActMode::Greedy => argmax(lp),
            };
            log_prob += lp[a];
            levels.push(a);
        }
        Ok(Decision {
            levels,
            log_prob,
            value: ev.value,
        })
    }

    /// Sum of per-head entropies.
    pub fn entropy(&self, obs: &[f64]) -> Result<f64, DimensionMismatch> {
        let ev = self.evaluate(obs)?;
        Ok((0..self.num_heads).map(|h| entropy(ev.head(h, self.levels))).sum())
    }

    fn check(&self, obs: &[f64]) -> Result<(), DimensionMismatch> {
        if obs.len() != self.input_len() {
            return Err(DimensionMismatch {
                got: obs.len(),
                want: self.input_len(),
            });
        }
        Ok(())
    }
}
