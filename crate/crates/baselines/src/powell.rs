//! Powell's direction-set method with golden-section line searches.

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;
const TINY: f64 = 1e-25;

#[derive(Debug, Clone, PartialEq)]
pub struct PowellOptions {
    /// Maximum number of sweeps over the direction set.
    pub max_iters: usize,
    /// Stop when a sweep improves the objective by less than this fraction.
    pub ftol: f64,
    /// Relative bracket width at which a line search stops.
    pub xtol: f64,
    /// Length of the first trial step along each direction.
    pub step: f64,
    /// Points are clamped to at least this value before evaluation.
    pub lower_bound: Option<f64>,
    /// Maximum golden expansions while bracketing.
    pub max_expansions: usize,
}

impl Default for PowellOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            ftol: 1e-6,
            xtol: 1e-8,
            step: 1.0,
            lower_bound: None,
            max_expansions: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowellResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("objective returned {value} at {x:?}; optimization aborted")]
pub struct NonFiniteObjective {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Search state: current point, direction set and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PowellState {
    pub x: Vec<f64>,
    pub f: f64,
    pub directions: Vec<Vec<f64>>,
    pub iterations: usize,
    pub evaluations: usize,
}

struct Objective<'a, F> {
    f: &'a mut F,
    lower: Option<f64>,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Objective<'_, F> {
    fn project(&self, x: &mut [f64]) {
        if let Some(lb) = self.lower {
            x.iter_mut().for_each(|v| *v = v.max(lb));
        }
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64, NonFiniteObjective> {
        self.evaluations += 1;
        let value = (self.f)(x);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(NonFiniteObjective { x: x.to_vec(), value })
        }
    }

    fn point(&self, x: &[f64], d: &[f64], alpha: f64) -> Vec<f64> {
        let mut p: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        self.project(&mut p);
        p
    }

    /// Minimizes along `d` from `x` (whose value is `fx`). Returns the best
    /// step and value seen; the step is 0 when nothing beat `fx`.
    fn line(&mut self, x: &[f64], d: &[f64], fx: f64, opts: &PowellOptions) -> Result<(f64, f64), NonFiniteObjective> {
        let phi = |s: &mut Self, a: f64| -> Result<f64, NonFiniteObjective> {
            let p = s.point(x, d, a);
            s.eval(&p)
        };
        let mut best = (0.0, fx);
        let note = |a: f64, v: f64, best: &mut (f64, f64)| {
            if v < best.1 {
                *best = (a, v);
            }
        };

        // Bracket a minimum with golden expansion.
        let mut a = 0.0;
        let (mut b, mut fb) = (opts.step, phi(self, opts.step)?);
        note(b, fb, &mut best);
        if fb > fx {
            // Downhill is the other way.
            (a, b, fb) = (b, a, fx);
        }
        let mut c = b + GOLD * (b - a);
        let mut fc = phi(self, c)?;
        note(c, fc, &mut best);
        let mut expansions = 0;
        while fb > fc && expansions < opts.max_expansions {
            (a, b, fb) = (b, c, fc);
            c = b + GOLD * (b - a);
            fc = phi(self, c)?;
            note(c, fc, &mut best);
            expansions += 1;
        }

        // Golden-section search on [a, c] around b.
        let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
        let (mut x1, mut x2);
        if (hi - b).abs() > (b - lo).abs() {
            x1 = b;
            x2 = b + CGOLD * (hi - b);
        } else {
            x2 = b;
            x1 = b - CGOLD * (b - lo);
        }
        let mut f1 = if x1 == b { fb } else { phi(self, x1)? };
        let mut f2 = if x2 == b { fb } else { phi(self, x2)? };
        note(x1, f1, &mut best);
        note(x2, f2, &mut best);
        while (hi - lo).abs() > opts.xtol * (x1.abs() + x2.abs()) + 1e-12 {
            if f2 < f1 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = x1 + CGOLD * (hi - x1);
                f2 = phi(self, x2)?;
                note(x2, f2, &mut best);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = x2 - CGOLD * (x2 - lo);
                f1 = phi(self, x1)?;
                note(x1, f1, &mut best);
            }
        }
        Ok(best)
    }
}

fn basis(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect()
}

/// Absolute determinant of the (unit-row) direction matrix via Gaussian
/// elimination with partial pivoting.
fn spread(dirs: &[Vec<f64>]) -> f64 {
    let n = dirs.len();
    let mut m: Vec<Vec<f64>> = dirs.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return 0.0;
        }
        m.swap(col, pivot);
        det *= m[col][col];
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    det.abs()
}

/// Minimizes `f` from `x0`. The returned point never has a larger objective
/// than the (projected) starting point.
pub fn powell_minimize<F>(mut f: F, x0: &[f64], opts: &PowellOptions) -> Result<PowellResult, NonFiniteObjective>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut obj = Objective {
        f: &mut f,
        lower: opts.lower_bound,
        evaluations: 0,
    };
    let mut x = x0.to_vec();
    obj.project(&mut x);
    let fx0 = obj.eval(&x)?;
    let mut st = PowellState {
        x,
        f: fx0,
        directions: basis(n),
        iterations: 0,
        evaluations: 0,
    };
    if n == 0 {
        return Ok(PowellResult { x: st.x, f: st.f, iterations: 0, evaluations: obj.evaluations });
    }
    while st.iterations < opts.max_iters {
        st.iterations += 1;
        let start = st.x.clone();
        let f_start = st.f;
        let mut biggest = 0.0;
        let mut ibig = 0;
        for i in 0..n {
            let d = st.directions[i].clone();
            let (alpha, fnew) = obj.line(&st.x, &d, st.f, opts)?;
            if alpha != 0.0 {
                if st.f - fnew > biggest {
                    biggest = st.f - fnew;
                    ibig = i;
                }
                st.x = obj.point(&st.x, &d, alpha);
                st.f = fnew;
            }
        }
        if 2.0 * (f_start - st.f) <= opts.ftol * (f_start.abs() + st.f.abs()) + TINY {
            break;
        }
        let mut disp: Vec<f64> = st.x.iter().zip(&start).map(|(a, b)| a - b).collect();
        let norm = disp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let mut extrap: Vec<f64> = st.x.iter().zip(&start).map(|(a, b)| 2.0 * a - b).collect();
        obj.project(&mut extrap);
        let fe = obj.eval(&extrap)?;
        if fe < f_start {
            let t = 2.0 * (f_start - 2.0 * st.f + fe) * (f_start - st.f - biggest).powi(2)
                - biggest * (f_start - fe).powi(2);
            if t < 0.0 {
                disp.iter_mut().for_each(|v| *v /= norm);
                let (alpha, fnew) = obj.line(&st.x, &disp, st.f, opts)?;
                if alpha != 0.0 {
                    st.x = obj.point(&st.x, &disp, alpha);
                    st.f = fnew;
                }
                st.directions[ibig] = st.directions[n - 1].clone();
                st.directions[n - 1] = disp;
                if spread(&st.directions) < 1e-10 {
                    st.directions = basis(n);
                }
            }
        }
    }
    st.evaluations = obj.evaluations;
    Ok(PowellResult {
        x: st.x,
        f: st.f,
        iterations: st.iterations,
        evaluations: st.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_quadratic() {
        let r = powell_minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &PowellOptions::default()).unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn separable_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let r = powell_minimize(f, &[0.0, 0.0], &PowellOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] + 2.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = PowellOptions { ftol: 1e-12, ..PowellOptions::default() };
        let r = powell_minimize(f, &[-1.2, 1.0], &opts).unwrap();
        assert!(r.f < 1e-4, "{r:?}");
    }

    #[test]
    fn rotated_quadratic_uses_conjugate_directions() {
        let f = |x: &[f64]| {
            let (u, v) = (x[0] + x[1] - 2.0, x[0] - x[1]);
            u * u + 50.0 * v * v
        };
        let r = powell_minimize(f, &[5.0, -3.0], &PowellOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn lower_bound_is_respected() {
        let opts = PowellOptions { lower_bound: Some(0.0), ..PowellOptions::default() };
        let r = powell_minimize(|x| (x[0] + 2.0).powi(2), &[4.0], &opts).unwrap();
        assert_eq!(r.x[0], 0.0);
        assert_eq!(r.f, 4.0);
    }

    #[test]
    fn non_finite_objective_aborts() {
        let err = powell_minimize(|x| if x[0] > 1.5 { f64::NAN } else { -x[0] }, &[0.0], &PowellOptions::default())
            .unwrap_err();
        assert!(err.value.is_nan());
    }

    #[test]
    fn flat_objective_stays_put() {
        let r = powell_minimize(|_| 7.0, &[1.0, 2.0], &PowellOptions::default()).unwrap();
        assert_eq!(r.x, vec![1.0, 2.0]);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn degenerate_directions_are_detected() {
        assert_eq!(spread(&[vec![1.0, 0.0], vec![1.0, 0.0]]), 0.0);
        assert!((spread(&basis(3)) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn never_worse_than_start(
            x0 in prop::collection::vec(-5.0f64..5.0, 1..4),
            shift in -3.0f64..3.0,
            freq in 0.5f64..4.0,
        ) {
            // Bumpy, piecewise-constant objective.
            let f = |x: &[f64]| x.iter().map(|v| ((v - shift) * freq).round().abs() + (v * 7.0).sin().floor()).sum::<f64>();
            let start = f(&x0);
            let r = powell_minimize(f, &x0, &PowellOptions { max_iters: 20, ..PowellOptions::default() }).unwrap();
            prop_assert!(r.f <= start);
            prop_assert_eq!(r.f, f(&r.x));
        }
    }
}
