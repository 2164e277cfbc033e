//! Forward dynamics of the averaging models: single steps, iterated
//! simulation and forecasting from a fitted model.

use std::io::Write;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::panel::{format_sig, Family, FitResult, ModelSpec, ParamSet, SentimentPanel};

fn check_len(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

fn check_square(m: &Matrix, n: usize) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.rows().max(m.cols()),
        });
    }
    Ok(())
}

#[inline]
fn unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// `s * social + (1 - s) * anchor`, the mixing used by every anchored update.
#[inline]
fn mix(s: f64, social: f64, anchor: f64) -> f64 {
    unit(s * social + (1.0 - s) * anchor)
}

/// `W x`.
pub fn step_fdg(w: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    check_square(w, x.len())?;
    Ok((0..x.len()).map(|b| unit(dot(w.row(b), x))).collect())
}

/// `diag(S) W x + (I - diag(S)) z`.
pub fn step_fj(w: &Matrix, s: &[f64], z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    check_square(w, n)?;
    check_len(n, s)?;
    check_len(n, z)?;
    Ok((0..n).map(|b| mix(s[b], dot(w.row(b), x), z[b])).collect())
}

/// `diag(S) W x(t) + (I - diag(S)) x(t - lag)`.
pub fn step_fdgm(w: &Matrix, s: &[f64], x_now: &[f64], x_lagged: &[f64]) -> Result<Vec<f64>> {
    let n = x_now.len();
    check_square(w, n)?;
    check_len(n, s)?;
    check_len(n, x_lagged)?;
    Ok((0..n).map(|b| mix(s[b], dot(w.row(b), x_now), x_lagged[b])).collect())
}

/// Expressed layer: `diag(Phi) x(t) + (I - diag(Phi)) A xe(t - lag - 1)`.
pub fn epo_expressed(phi: &[f64], a: &Matrix, x_now: &[f64], xe_lagged: &[f64]) -> Result<Vec<f64>> {
    let n = x_now.len();
    check_square(a, n)?;
    check_len(n, phi)?;
    check_len(n, xe_lagged)?;
    Ok((0..n)
        .map(|b| unit(phi[b] * x_now[b] + (1.0 - phi[b]) * dot(a.row(b), xe_lagged)))
        .collect())
}

/// Private layer:
/// `diag(S) (diag(W) x(t) + (W - diag(W)) xe(t)) + (I - diag(S)) z`.
///
/// The inner sum runs over `k` in order, reading the agent's own private
/// opinion on the diagonal, so with `xe == x` it is bit-identical to `W x`.
pub fn step_epo_private(w: &Matrix, s: &[f64], z: &[f64], x_now: &[f64], xe_now: &[f64]) -> Result<Vec<f64>> {
    let n = x_now.len();
    check_square(w, n)?;
    check_len(n, s)?;
    check_len(n, z)?;
    check_len(n, xe_now)?;
    Ok((0..n)
        .map(|b| {
            let row = w.row(b);
            let mut social = 0.0;
            for k in 0..n {
                let v = if k == b { x_now[k] } else { xe_now[k] };
                social += row[k] * v;
            }
            mix(s[b], social, z[b])
        })
        .collect())
}

/// Launch state for [`simulate`]. Histories hold the most recent vector last.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// Current private (or, for single-layer models, observed) opinions.
    pub x: Vec<f64>,
    /// Expressed opinions, ending with the current period.
    pub xe_history: Vec<Vec<f64>>,
    /// Private opinions, ending with `x`. Read by the lagged memory term.
    pub x_history: Vec<Vec<f64>>,
}

impl SimState {
    /// Single-layer state from a history of observed vectors (most recent last).
    pub fn observed(history: Vec<Vec<f64>>) -> Self {
        let x = history.last().cloned().unwrap_or_default();
        Self {
            x,
            xe_history: history.clone(),
            x_history: history,
        }
    }

    /// Two-layer state: latent private opinions plus expressed history.
    pub fn two_layer(x: Vec<f64>, xe_history: Vec<Vec<f64>>) -> Self {
        Self {
            x_history: vec![x.clone()],
            x,
            xe_history,
        }
    }
}

/// One simulated period: private and expressed opinions.
pub type SimStep = (Vec<f64>, Vec<f64>);

/// Iterates the family's dynamics `horizon` times.
///
/// Two-layer step order: `x(t+1)` from `(x(t), xe(t))`, then `xe(t+1)` from
/// `(x(t+1), xe(t - lag))`. Single-layer families report `xe == x`.
pub fn simulate(spec: ModelSpec, params: &ParamSet, init: &SimState, horizon: usize) -> Result<Vec<SimStep>> {
    let n = params.n_blogs();
    check_len(n, &init.x)?;
    let lag = spec.lag();
    let needed = lag + 1;
    let family = spec.family();
    let w = params.w();
    let s = params.susceptibility();
    let z = params.innate();

    let mut out = Vec::with_capacity(horizon);
    if family.is_two_layer() {
        if init.xe_history.len() < needed {
            return Err(Error::InsufficientHistory {
                lag,
                needed,
                found: init.xe_history.len(),
            });
        }
        let a = params.a().expect("two-layer params carry A");
        let phi = params.phi().expect("two-layer params carry Phi");
        let mut xe_hist: Vec<Vec<f64>> = init.xe_history.clone();
        let mut x = init.x.clone();
        for _ in 0..horizon {
            let xe_now = xe_hist.last().expect("non-empty");
            let x_next = step_epo_private(w, &s, &z, &x, xe_now)?;
            let xe_lagged = &xe_hist[xe_hist.len() - 1 - lag];
            let xe_next = epo_expressed(phi, a, &x_next, xe_lagged)?;
            out.push((x_next.clone(), xe_next.clone()));
            xe_hist.push(xe_next);
            x = x_next;
        }
        return Ok(out);
    }

    let mut hist: Vec<Vec<f64>> = if init.x_history.is_empty() {
        vec![init.x.clone()]
    } else {
        init.x_history.clone()
    };
    if family == Family::Fdgm && hist.len() < needed {
        return Err(Error::InsufficientHistory {
            lag,
            needed,
            found: hist.len(),
        });
    }
    for _ in 0..horizon {
        let now = hist.last().expect("non-empty");
        let next = match family {
            Family::Fdg => step_fdg(w, now)?,
            Family::Fj => step_fj(w, &s, &z, now)?,
            Family::Fdgm => step_fdgm(w, &s, now, &hist[hist.len() - 1 - lag])?,
            Family::Epo | Family::Repo => unreachable!(),
        };
        out.push((next.clone(), next.clone()));
        hist.push(next);
    }
    Ok(out)
}

/// Launch state at the end of the training window: fitted latent opinions
/// for two-layer models, observed values otherwise.
pub fn launch_state(fit: &FitResult, panel: &SentimentPanel) -> Result<SimState> {
    let t_est = fit.n_train_periods;
    let n = fit.params.n_blogs();
    if panel.n_blogs() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: panel.n_blogs(),
        });
    }
    if t_est == 0 || t_est > panel.n_periods() {
        return Err(Error::InvalidSplit(format!(
            "model trained on {t_est} periods, panel has {}",
            panel.n_periods()
        )));
    }
    let lag = fit.spec.lag();
    if t_est < lag + 1 {
        return Err(Error::HorizonBeyondSupport {
            needed: t_est as i64 - lag as i64,
        });
    }
    let history: Vec<Vec<f64>> = (0..t_est).map(|t| panel.column(t)).collect();
    if fit.spec.family().is_two_layer() {
        let x = fit.params.x().expect("two-layer params carry X");
        if x.cols() < t_est {
            return Err(Error::DimensionMismatch {
                expected: t_est,
                found: x.cols(),
            });
        }
        Ok(SimState::two_layer(x.column(t_est - 1), history))
    } else {
        Ok(SimState::observed(history))
    }
}

/// Forecasts expressed opinions for periods `T_est + 1 ..= T_est + horizon`.
/// Only periods up to `T_est` of the panel are read.
pub fn predict(fit: &FitResult, panel: &SentimentPanel, horizon: usize) -> Result<Matrix> {
    let n = fit.params.n_blogs();
    if horizon == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    let init = launch_state(fit, panel)?;
    let steps = simulate(fit.spec, &fit.params, &init, horizon)?;
    let mut out = Matrix::zeros(n, horizon);
    for (h, (_, xe)) in steps.iter().enumerate() {
        out.set_column(h, xe);
    }
    Ok(out)
}

/// Writes a trajectory as `t,blog_id,x,xe`, numbering periods from `first_period`.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    steps: &[SimStep],
    blog_ids: &[String],
    first_period: usize,
) -> Result<()> {
    writeln!(out, "t,blog_id,x,xe")?;
    for (i, (x, xe)) in steps.iter().enumerate() {
        for (b, id) in blog_ids.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                first_period + i,
                id,
                format_sig(x[b], 6),
                format_sig(xe[b], 6)
            )?;
        }
    }
    Ok(())
}
