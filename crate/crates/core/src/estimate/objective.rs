//! Estimation objective, its analytic gradient and a finite-difference
//! self-test, all over a flat parameter vector.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::panel::{Family, ModelSpec, ParamSet, SentimentPanel};

/// Position of each parameter block in the flat vector.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub family: Family,
    pub lag: usize,
    pub n: usize,
    pub t_est: usize,
    pub w: Option<Range<usize>>,
    pub a: Option<Range<usize>>,
    pub d: Option<Range<usize>>,
    pub s: Option<Range<usize>>,
    pub phi: Option<Range<usize>>,
    pub z: Option<Range<usize>>,
    pub x: Option<Range<usize>>,
    pub len: usize,
}

impl Layout {
    pub fn new(spec: ModelSpec, n: usize, t_est: usize) -> Self {
        let family = spec.family();
        let mut next = 0;
        let mut take = |on: bool, len: usize| {
            on.then(|| {
                let r = next..next + len;
                next += len;
                r
            })
        };
        let two = family.is_two_layer();
        let w = take(!two, n * n);
        let a = take(two, n * n);
        let d = take(two, n);
        let s = take(!matches!(family, Family::Fdg | Family::Repo), n);
        let phi = take(two, n);
        let z = take(matches!(family, Family::Fj | Family::Epo), n);
        let x = take(two, n * t_est);
        Self {
            family,
            lag: spec.lag(),
            n,
            t_est,
            w,
            a,
            d,
            s,
            phi,
            z,
            x,
            len: next,
        }
    }

    pub fn flatten(&self, params: &ParamSet) -> Vec<f64> {
        let mut theta = vec![0.0; self.len];
        let mut put = |range: &Option<Range<usize>>, values: Option<&[f64]>| {
            if let (Some(r), Some(v)) = (range, values) {
                theta[r.clone()].copy_from_slice(&v[..r.len()]);
            }
        };
        put(&self.w, Some(params.w().as_slice()));
        put(&self.a, params.a().map(Matrix::as_slice));
        put(&self.d, params.d());
        put(&self.s, params.s());
        put(&self.phi, params.phi());
        put(&self.z, params.z());
        if let (Some(r), Some(x)) = (&self.x, params.x()) {
            let cols = x.leading_columns(self.t_est);
            theta[r.clone()].copy_from_slice(cols.as_slice());
        }
        theta
    }

    /// Indices of the free coordinates (the structural zero diagonal of `A` excluded).
    pub fn active_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len);
        for i in 0..self.len {
            if let Some(a) = &self.a {
                if a.contains(&i) {
                    let k = i - a.start;
                    if k / self.n == k % self.n {
                        continue;
                    }
                }
            }
            out.push(i);
        }
        out
    }

    pub fn name_of(&self, i: usize) -> String {
        let blocks = [
            ("W", &self.w),
            ("A", &self.a),
            ("D", &self.d),
            ("S", &self.s),
            ("Phi", &self.phi),
            ("z", &self.z),
            ("X", &self.x),
        ];
        for (name, r) in blocks {
            if let Some(r) = r {
                if r.contains(&i) {
                    return format!("{name}[{}]", i - r.start);
                }
            }
        }
        format!("theta[{i}]")
    }
}

/// Objective value, accumulating the gradient into `grad` when given.
pub(crate) fn evaluate(layout: &Layout, theta: &[f64], panel: &SentimentPanel, mut grad: Option<&mut [f64]>) -> f64 {
    let n = layout.n;
    let lag = layout.lag;
    let obs = |b: usize, t: usize| panel.value(b, t);
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut total = 0.0;
    let transitions = lag..layout.t_est - 1;

    if !layout.family.is_two_layer() {
        let w = &theta[layout.w.clone().expect("single-layer W")];
        let s = layout.s.clone().map(|r| &theta[r]);
        let z = layout.z.clone().map(|r| &theta[r]);
        for t in transitions {
            for b in 0..n {
                let row = &w[b * n..(b + 1) * n];
                let mut social = 0.0;
                for k in 0..n {
                    social += row[k] * obs(k, t);
                }
                let (sb, anchor) = match layout.family {
                    Family::Fdg => (1.0, 0.0),
                    Family::Fj => (s.expect("S")[b], z.expect("z")[b]),
                    Family::Fdgm => (s.expect("S")[b], obs(b, t - lag)),
                    _ => unreachable!(),
                };
                let pred = sb * social + (1.0 - sb) * anchor;
                let r = obs(b, t + 1) - pred;
                total += r * r;
                if let Some(g) = grad.as_deref_mut() {
                    let wr = layout.w.as_ref().expect("W").start + b * n;
                    for k in 0..n {
                        g[wr + k] -= 2.0 * r * sb * obs(k, t);
                    }
                    if let Some(sr) = &layout.s {
                        g[sr.start + b] -= 2.0 * r * (social - anchor);
                    }
                    if let Some(zr) = &layout.z {
                        g[zr.start + b] -= 2.0 * r * (1.0 - sb);
                    }
                }
            }
        }
        return total;
    }

    let a = &theta[layout.a.clone().expect("A")];
    let d = &theta[layout.d.clone().expect("D")];
    let phi = &theta[layout.phi.clone().expect("Phi")];
    let x = &theta[layout.x.clone().expect("X")];
    let s = layout.s.clone().map(|r| &theta[r]);
    let z = layout.z.clone().map(|r| &theta[r]);
    let t_cols = layout.t_est;
    for t in transitions {
        for b in 0..n {
            let arow = &a[b * n..(b + 1) * n];
            let mut peers_now = 0.0;
            let mut peers_lag = 0.0;
            for k in 0..n {
                if k != b {
                    peers_now += arow[k] * obs(k, t);
                    peers_lag += arow[k] * obs(k, t - lag);
                }
            }
            let sb = s.map_or(1.0, |s| s[b]);
            let zb = z.map_or(0.0, |z| z[b]);
            let x_now = x[b * t_cols + t];
            let x_next = x[b * t_cols + t + 1];
            let inner = d[b] * x_now + (1.0 - d[b]) * peers_now;
            let r1 = x_next - sb * inner - (1.0 - sb) * zb;
            let r2 = obs(b, t + 1) - phi[b] * x_next - (1.0 - phi[b]) * peers_lag;
            total += r1 * r1 + r2 * r2;
            if let Some(g) = grad.as_deref_mut() {
                let ar = layout.a.as_ref().expect("A").start + b * n;
                for k in 0..n {
                    if k != b {
                        g[ar + k] -= 2.0 * (r1 * sb * (1.0 - d[b]) * obs(k, t) + r2 * (1.0 - phi[b]) * obs(k, t - lag));
                    }
                }
                let dr = layout.d.as_ref().expect("D").start;
                g[dr + b] -= 2.0 * r1 * sb * (x_now - peers_now);
                if let Some(sr) = &layout.s {
                    g[sr.start + b] -= 2.0 * r1 * (inner - zb);
                }
                if let Some(zr) = &layout.z {
                    g[zr.start + b] -= 2.0 * r1 * (1.0 - sb);
                }
                let pr = layout.phi.as_ref().expect("Phi").start;
                g[pr + b] -= 2.0 * r2 * (x_next - peers_lag);
                let xr = layout.x.as_ref().expect("X").start + b * t_cols;
                g[xr + t + 1] += 2.0 * r1 - 2.0 * r2 * phi[b];
                g[xr + t] -= 2.0 * r1 * sb * d[b];
            }
        }
    }
    total
}

/// Checks the split and that the parameter bundle matches the family.
pub(crate) fn check_inputs(spec: ModelSpec, params: &ParamSet, panel: &SentimentPanel, t_est: usize) -> Result<()> {
    let lag = spec.lag();
    if t_est <= lag + 1 || t_est > panel.n_periods() {
        return Err(Error::InvalidSplit(format!(
            "need {} < t_est <= {}, got {t_est}",
            lag + 1,
            panel.n_periods()
        )));
    }
    if params.family() != spec.family() {
        ParamSet::new(spec.family(), params.to_parts())?;
    }
    if params.n_blogs() != panel.n_blogs() {
        return Err(Error::DimensionMismatch {
            expected: panel.n_blogs(),
            found: params.n_blogs(),
        });
    }
    if let Some(x) = params.x() {
        if x.cols() < t_est {
            return Err(Error::DimensionMismatch {
                expected: t_est,
                found: x.cols(),
            });
        }
    }
    Ok(())
}

/// Sum of squared residual norms over the training transitions
/// `t = 1 + lag, ..., t_est - 1`.
///
/// Single-layer families compare observed `x(t+1)` with the one-step
/// update. Two-layer families add the private-layer residual (with `x`
/// taken from the latent states) and the expressed-layer residual.
pub fn objective(spec: ModelSpec, params: &ParamSet, panel: &SentimentPanel, t_est: usize) -> Result<f64> {
    check_inputs(spec, params, panel, t_est)?;
    let layout = Layout::new(spec, panel.n_blogs(), t_est);
    let theta = layout.flatten(params);
    Ok(evaluate(&layout, &theta, panel, None))
}

/// Margin from constraint boundaries required by [`gradient_check`].
pub const GRADIENT_CHECK_MARGIN: f64 = 1e-3;
const FD_STEP: f64 = 1e-6;
/// Denominator floor for the relative deviation, so that near-zero
/// components are compared on an absolute scale.
const RELATIVE_FLOOR: f64 = 1e-3;

/// Maximum relative deviation between the analytic gradient and central
/// finite differences (`h = 1e-6`) over all active coordinates.
pub fn gradient_check(spec: ModelSpec, params: &ParamSet, panel: &SentimentPanel, t_est: usize) -> Result<f64> {
    check_inputs(spec, params, panel, t_est)?;
    let layout = Layout::new(spec, panel.n_blogs(), t_est);
    let theta = layout.flatten(params);
    let active = layout.active_indices();
    for &i in &active {
        let v = theta[i];
        if !(GRADIENT_CHECK_MARGIN..=1.0 - GRADIENT_CHECK_MARGIN).contains(&v) {
            return Err(Error::OnBoundary {
                name: layout.name_of(i),
                margin: GRADIENT_CHECK_MARGIN,
            });
        }
    }
    let mut grad = vec![0.0; layout.len];
    evaluate(&layout, &theta, panel, Some(&mut grad));
    let mut probe = theta.clone();
    let mut worst: f64 = 0.0;
    for &i in &active {
        probe[i] = theta[i] + FD_STEP;
        let up = evaluate(&layout, &probe, panel, None);
        probe[i] = theta[i] - FD_STEP;
        let down = evaluate(&layout, &probe, panel, None);
        probe[i] = theta[i];
        let fd = (up - down) / (2.0 * FD_STEP);
        let dev = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(RELATIVE_FLOOR);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Analytic gradient of the objective over the flat layout, for tests and diagnostics.
pub fn objective_gradient(
    spec: ModelSpec,
    params: &ParamSet,
    panel: &SentimentPanel,
    t_est: usize,
) -> Result<Vec<f64>> {
    check_inputs(spec, params, panel, t_est)?;
    let layout = Layout::new(spec, panel.n_blogs(), t_est);
    let theta = layout.flatten(params);
    let mut grad = vec![0.0; layout.len];
    evaluate(&layout, &theta, panel, Some(&mut grad));
    Ok(grad)
}
