//! Constrained least-squares identification of the model families on a
//! training prefix of a panel.

mod blocks;
mod objective;
mod projection;
mod qp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use objective::{gradient_check, objective, objective_gradient, GRADIENT_CHECK_MARGIN};
pub use projection::{project_box, project_simplex};

use blocks::{BlogState, Problem};
use qp::QpOptions;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::panel::{Family, FitResult, ModelSpec, ParamParts, ParamSet, SentimentPanel, SolverTrace};

/// Step-size policy for the projected-gradient block solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// `1 / L` with `L` the Hessian's largest eigenvalue.
    Fixed,
    /// Start at 1.0 and halve until sufficient decrease.
    Backtracking,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub n_starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop once the relative objective change stays below this for
    /// [`STALL_WINDOW`] consecutive iterations.
    pub rel_tol: f64,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_starts: 16,
            seed: 0,
            max_iterations: 100_000,
            rel_tol: 1e-9,
            step_rule: StepRule::Backtracking,
        }
    }
}

pub const STALL_WINDOW: usize = 10;

/// Scale below which objective changes are measured in absolute terms.
const OBJECTIVE_FLOOR: f64 = 1e-12;

/// Amplitude of the uniform noise applied to the default start.
const START_NOISE: f64 = 0.25;

/// Fits `spec` to periods `1..=t_est` of `panel`.
///
/// Start 0 is the default initialisation; starts `1..n_starts` perturb it
/// with seeded noise. Because the objective separates across blogs, the
/// returned parameters take each blog's block from the start that fitted
/// that blog best, so the result is never worse than the best single start.
pub fn fit(spec: ModelSpec, panel: &SentimentPanel, t_est: usize, config: &SolverConfig) -> Result<FitResult> {
    fit_inner(spec, panel, t_est, config, None)
}

/// FJ fit with the susceptibilities held at `s`.
pub fn fit_fj_with_fixed_susceptibility(
    panel: &SentimentPanel,
    t_est: usize,
    s: &[f64],
    config: &SolverConfig,
) -> Result<FitResult> {
    if s.len() != panel.n_blogs() {
        return Err(Error::DimensionMismatch {
            expected: panel.n_blogs(),
            found: s.len(),
        });
    }
    if s.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter {
            name: "S",
            reason: "entries must lie in [0, 1]".into(),
        });
    }
    fit_inner(ModelSpec::new(Family::Fj, 0)?, panel, t_est, config, Some(s))
}

/// Replaces the latent states of a two-layer parameter set with the
/// trajectory minimising the training objective, all other parameters held
/// fixed. The problem is a convex box-constrained least squares per blog.
pub fn fit_latent_states(spec: ModelSpec, params: &ParamSet, panel: &SentimentPanel, t_est: usize) -> Result<ParamSet> {
    if !spec.family().is_two_layer() {
        return Err(Error::InvalidSpec(format!("{spec} has no latent states")));
    }
    objective::check_inputs(spec, params, panel, t_est)?;
    let problem = Problem {
        family: spec.family(),
        lag: spec.lag(),
        n: panel.n_blogs(),
        t_est,
        panel,
        fixed_s: None,
        qp: QpOptions::default(),
    };
    let a = params.a().expect("two-layer A");
    let d = params.d().expect("two-layer D");
    let phi = params.phi().expect("two-layer Phi");
    let s = params.susceptibility();
    let z = params.innate();
    let start = match params.x() {
        Some(x) if x.cols() >= t_est => x.leading_columns(t_est),
        _ => panel.values().leading_columns(t_est),
    };
    let states: Vec<BlogState> = (0..problem.n)
        .map(|b| {
            let mut st = BlogState {
                row: a.row(b).to_vec(),
                s: s[b],
                z: z[b],
                d: d[b],
                phi: phi[b],
                x: start.row(b).to_vec(),
            };
            problem.update_latent(b, &mut st);
            st
        })
        .collect();
    assemble(spec, &problem, &states)
}

struct Run {
    states: Vec<BlogState>,
    per_blog: Vec<f64>,
    trace: Vec<(usize, f64)>,
    converged: bool,
}

fn fit_inner(
    spec: ModelSpec,
    panel: &SentimentPanel,
    t_est: usize,
    config: &SolverConfig,
    fixed_s: Option<&[f64]>,
) -> Result<FitResult> {
    let lag = spec.lag();
    if t_est < lag + 3 || t_est > panel.n_periods() {
        return Err(Error::InvalidSplit(format!(
            "{spec} needs {} <= t_est <= {}, got {t_est}",
            lag + 3,
            panel.n_periods()
        )));
    }
    if config.n_starts == 0 {
        return Err(Error::InvalidSpec("n_starts must be at least 1".into()));
    }
    if config.rel_tol.is_nan() || config.rel_tol <= 0.0 {
        return Err(Error::InvalidSpec("rel_tol must be positive".into()));
    }
    let n = panel.n_blogs();
    if spec.family().is_two_layer() && n < 2 {
        return Err(Error::InvalidSpec("two-layer models need at least two blogs".into()));
    }

    let problem = Problem {
        family: spec.family(),
        lag,
        n,
        t_est,
        panel,
        fixed_s,
        qp: QpOptions {
            step_rule: config.step_rule,
            ..QpOptions::default()
        },
    };

    let runs: Vec<Run> = (0..config.n_starts)
        .into_par_iter()
        .map(|start| {
            let init = initial_states(&problem, config.seed, start);
            run_block_descent(&problem, init, config)
        })
        .collect();

    // Per-blog selection; ties go to the lowest start index.
    let mut chosen = Vec::with_capacity(n);
    for b in 0..n {
        let mut best = 0;
        for (i, run) in runs.iter().enumerate() {
            if run.per_blog[b] < runs[best].per_blog[b] {
                best = i;
            }
        }
        chosen.push(runs[best].states[b].clone());
    }
    let params = assemble(spec, &problem, &chosen)?;
    let value = objective(spec, &params, panel, t_est)?;

    let best_run = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            let fa = a.trace.last().map_or(f64::INFINITY, |p| p.1);
            let fb = b.trace.last().map_or(f64::INFINITY, |p| p.1);
            fa.total_cmp(&fb).then(i.cmp(j))
        })
        .map(|(_, r)| r)
        .expect("at least one start");
    let mut trace = best_run.trace.clone();
    if let Some(&(it, last)) = trace.last() {
        if value < last {
            trace.push((it + 1, value));
        }
    }

    Ok(FitResult {
        spec,
        params,
        objective: value,
        n_train_periods: t_est,
        solver_trace: SolverTrace {
            points: trace,
            converged: best_run.converged,
        },
        seed: config.seed,
        n_starts: config.n_starts,
    })
}

fn run_block_descent(problem: &Problem<'_>, mut states: Vec<BlogState>, config: &SolverConfig) -> Run {
    let mut per_blog: Vec<f64> = states
        .iter()
        .enumerate()
        .map(|(b, st)| problem.blog_objective(b, st))
        .collect();
    let mut total: f64 = per_blog.iter().sum();
    let mut trace = vec![(0, total)];
    let mut stalled = 0;
    let mut converged = false;
    for it in 1..=config.max_iterations {
        for (b, st) in states.iter_mut().enumerate() {
            let mut candidate = st.clone();
            problem.update(b, &mut candidate);
            let value = problem.blog_objective(b, &candidate);
            // Block solves never increase the value; guard against round-off.
            if value <= per_blog[b] {
                *st = candidate;
                per_blog[b] = value;
            }
        }
        let next: f64 = per_blog.iter().sum();
        let next = next.min(total);
        trace.push((it, next));
        // Changes at round-off level of an already negligible objective count as stalled.
        let rel = (total - next) / total.max(OBJECTIVE_FLOOR);
        total = next;
        if rel < config.rel_tol {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Run {
        states,
        per_blog,
        trace,
        converged,
    }
}

fn initial_states(problem: &Problem<'_>, seed: u64, start: usize) -> Vec<BlogState> {
    let n = problem.n;
    let t_est = problem.t_est;
    let two_layer = problem.family.is_two_layer();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);

    (0..n)
        .map(|b| {
            let row = if two_layer {
                (0..n)
                    .map(|k| if k == b { 0.0 } else { 1.0 / (n - 1) as f64 })
                    .collect()
            } else {
                vec![1.0 / n as f64; n]
            };
            let observed: Vec<f64> = (0..t_est).map(|t| problem.panel.value(b, t)).collect();
            let mean = observed.iter().sum::<f64>() / t_est as f64;
            let s = match problem.fixed_s {
                Some(s) => s[b],
                None if matches!(problem.family, Family::Fdg | Family::Repo) => 1.0,
                None => 0.5,
            };
            let z = if matches!(problem.family, Family::Fj | Family::Epo) {
                mean
            } else {
                0.0
            };
            let mut st = BlogState {
                row,
                s,
                z,
                d: 1.0 / n as f64,
                phi: 0.5,
                x: observed,
            };
            if start > 0 {
                perturb(&mut st, b, problem, &mut rng);
            }
            st
        })
        .collect()
}

fn perturb(st: &mut BlogState, b: usize, problem: &Problem<'_>, rng: &mut ChaCha8Rng) {
    let mut jitter = || rng.gen_range(-START_NOISE..=START_NOISE);
    if problem.family.is_two_layer() {
        let peers: Vec<usize> = (0..problem.n).filter(|&k| k != b).collect();
        let raw: Vec<f64> = peers.iter().map(|&k| st.row[k] + jitter()).collect();
        for (&k, p) in peers.iter().zip(project_simplex(&raw)) {
            st.row[k] = p;
        }
        st.d = (st.d + jitter()).clamp(0.0, 1.0);
        st.phi = (st.phi + jitter()).clamp(0.0, 1.0);
        for v in st.x.iter_mut() {
            *v = (*v + jitter()).clamp(0.0, 1.0);
        }
    } else {
        let raw: Vec<f64> = st.row.iter().map(|&w| w + jitter()).collect();
        st.row = project_simplex(&raw);
    }
    if problem.fixed_s.is_none() && !matches!(problem.family, Family::Fdg | Family::Repo) {
        st.s = (st.s + jitter()).clamp(0.0, 1.0);
    }
    if matches!(problem.family, Family::Fj | Family::Epo) {
        st.z = (st.z + jitter()).clamp(0.0, 1.0);
    }
}

fn assemble(spec: ModelSpec, problem: &Problem<'_>, states: &[BlogState]) -> Result<ParamSet> {
    let n = problem.n;
    let rows: Vec<Vec<f64>> = states.iter().map(|s| s.row.clone()).collect();
    let matrix = Matrix::from_rows(&rows).expect("square");
    let col = |f: fn(&BlogState) -> f64| states.iter().map(f).collect::<Vec<f64>>();
    let parts = match spec.family() {
        Family::Fdg => ParamParts {
            w: Some(matrix),
            ..Default::default()
        },
        Family::Fj => ParamParts {
            w: Some(matrix),
            s: Some(col(|s| s.s)),
            z: Some(col(|s| s.z)),
            ..Default::default()
        },
        Family::Fdgm => ParamParts {
            w: Some(matrix),
            s: Some(col(|s| s.s)),
            ..Default::default()
        },
        Family::Epo | Family::Repo => {
            let x = Matrix::from_fn(n, problem.t_est, |b, t| states[b].x[t]);
            ParamParts {
                a: Some(matrix),
                d: Some(col(|s| s.d)),
                s: (spec.family() == Family::Epo).then(|| col(|s| s.s)),
                phi: Some(col(|s| s.phi)),
                z: (spec.family() == Family::Epo).then(|| col(|s| s.z)),
                x: Some(x),
                ..Default::default()
            }
        }
    };
    ParamSet::new(spec.family(), parts)
}
