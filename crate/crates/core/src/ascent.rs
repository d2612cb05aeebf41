//! Projected explicit-Euler ascent with adaptive step, shared by all flows.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub initial_step: f64,
    pub grow: f64,
    pub shrink: f64,
    pub min_step: f64,
    /// Stationarity threshold on the norm of the projected direction.
    pub tol: f64,
    pub max_iter: usize,
    pub record_trace: bool,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            initial_step: 0.1,
            grow: 1.5,
            shrink: 0.5,
            min_step: 1e-12,
            tol: 1e-9,
            max_iter: 2000,
            record_trace: false,
        }
    }
}

/// One accepted step of a flow trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub objective: f64,
    pub step: f64,
}

/// Render a trajectory as CSV with header `t,objective,stepsize`.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("t,objective,stepsize\n");
    for p in trace {
        out.push_str(&format!("{:e},{:e},{:e}\n", p.t, p.objective, p.step));
    }
    out
}

#[derive(Debug, Clone)]
pub struct AscentResult<S> {
    pub state: S,
    pub value: f64,
    pub iterations: usize,
    /// Final flow time.
    pub time: f64,
    /// Stationarity tolerance or step floor reached before the iteration cap.
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// A maximization problem on a constrained set, seen through its flow.
pub trait AscentProblem {
    type State: Clone;
    type Direction;

    /// Objective value, projected ascent direction and the direction's norm.
    /// May adjust the state in place (for example to break a multiplicity).
    fn evaluate(&self, state: &mut Self::State) -> Result<(f64, Self::Direction, f64)>;

    /// Euler step of length `h` followed by projection onto the feasible set.
    fn advance(&self, state: &Self::State, dir: &Self::Direction, h: f64) -> Self::State;
}

/// Integrate the flow until stationarity. A step is accepted only when the
/// objective does not decrease; otherwise it is halved.
pub fn ascend<P: AscentProblem>(
    problem: &P,
    mut state: P::State,
    opts: &AscentOptions,
) -> Result<AscentResult<P::State>> {
    let (mut f, mut dir, mut g) = problem.evaluate(&mut state)?;
    let mut h = opts.initial_step;
    let mut t = 0.0;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(TracePoint { t, objective: f, step: h });
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if g <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut cand = problem.advance(&state, &dir, h);
        match problem.evaluate(&mut cand) {
            Ok((fc, dc, gc)) if fc >= f && fc.is_finite() => {
                state = cand;
                f = fc;
                dir = dc;
                g = gc;
                t += h;
                if opts.record_trace {
                    trace.push(TracePoint { t, objective: f, step: h });
                }
                h *= opts.grow;
            }
            _ => {
                h *= opts.shrink;
                if h < opts.min_step {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(AscentResult { state, value: f, iterations, time: t, converged, trace })
}

/// Run independent starts concurrently and return the best successful one.
/// Ties go to the smallest start index; failed starts are counted.
pub(crate) fn best_of_starts<T, R, F, V>(starts: Vec<T>, run: F, value: V) -> (Option<(usize, R)>, usize)
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
    V: Fn(&R) -> f64,
{
    use rayon::prelude::*;
    let results: Vec<Result<R>> = starts.into_par_iter().map(&run).collect();
    let mut failed = 0;
    let mut best: Option<(usize, R)> = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                let better = match &best {
                    None => !value(&r).is_nan(),
                    Some((_, b)) => value(&r) > value(b),
                };
                if better {
                    best = Some((i, r));
                }
            }
            Err(_) => failed += 1,
        }
    }
    (best, failed)
}
