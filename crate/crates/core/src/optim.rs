//! Derivative-free Nelder-Mead simplex minimization.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction 1/2,
//! shrink 1/2). Non-finite objective values are treated as `+inf`, so a
//! vertex that lands outside the objective's domain is simply rejected.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when `max f - min f` over the simplex falls below this...
    pub f_tol: f64,
    /// ...and every vertex is within this max-norm distance of the best one.
    pub x_tol: f64,
    /// Edge length of the initial simplex along each coordinate.
    pub initial_step: f64,
    /// Record the best objective value after every iteration.
    pub trace: bool,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            f_tol: 1e-8,
            x_tol: 1e-6,
            initial_step: 0.1,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration, empty unless tracing was requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn f_spread(&self) -> f64 {
        let last = *self.values.last().expect("non-empty simplex");
        if last.is_infinite() {
            return f64::INFINITY;
        }
        last - self.values[0]
    }

    fn diameter(&self) -> f64 {
        let best = &self.points[0];
        self.points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimizes `objective` starting from `x0`.
pub fn nelder_mead<F>(mut objective: F, x0: &[f64], options: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut points = vec![x0.to_vec()];
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += options.initial_step;
        points.push(p);
    }
    let values = points.iter().map(|p| eval(p)).collect();
    let mut s = Simplex { points, values };
    s.order();

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        if s.f_spread() < options.f_tol && s.diameter() < options.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let worst = dim;
        let mut centroid = vec![0.0; dim];
        for p in &s.points[..worst] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / dim as f64;
            }
        }
        let f_best = s.values[0];
        let f_second = s.values[worst - 1];
        let f_worst = s.values[worst];

        let reflected = combine(&centroid, &s.points[worst], -1.0);
        let f_reflected = eval(&reflected);

        let mut replacement = None;
        if f_reflected < f_best {
            let expanded = combine(&centroid, &s.points[worst], -2.0);
            let f_expanded = eval(&expanded);
            replacement = Some(if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            });
        } else if f_reflected < f_second {
            replacement = Some((reflected, f_reflected));
        } else if f_reflected < f_worst {
            let outside = combine(&centroid, &reflected, 0.5);
            let f_outside = eval(&outside);
            if f_outside <= f_reflected {
                replacement = Some((outside, f_outside));
            }
        } else {
            let inside = combine(&centroid, &s.points[worst], 0.5);
            let f_inside = eval(&inside);
            if f_inside < f_worst {
                replacement = Some((inside, f_inside));
            }
        }

        match replacement {
            Some((p, v)) => {
                s.points[worst] = p;
                s.values[worst] = v;
            }
            None => {
                let best = s.points[0].clone();
                for i in 1..=dim {
                    let p = combine(&best, &s.points[i], 0.5);
                    s.values[i] = eval(&p);
                    s.points[i] = p;
                }
            }
        }
        s.order();
        if options.trace {
            trace.push(s.values[0]);
        }
    }

    Minimum {
        x: s.points[0].clone(),
        value: s.values[0],
        iterations,
        evaluations,
        converged,
        trace,
    }
}
