//! Small convex least-squares problems over products of simplices and boxes.
//!
//! Solved with accelerated projected gradient (monotone, with restart),
//! interleaved with a primal active-set refinement that finishes the
//! problem exactly once the working set is identified.

use nalgebra::{DMatrix, DVector};

use super::projection::project_simplex_in_place;
use super::StepRule;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Constraint {
    Simplex,
    Box { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Segment {
    pub start: usize,
    pub len: usize,
    pub kind: Constraint,
}

impl Segment {
    pub fn simplex(start: usize, len: usize) -> Self {
        Self {
            start,
            len,
            kind: Constraint::Simplex,
        }
    }

    pub fn unit_box(start: usize, len: usize) -> Self {
        Self {
            start,
            len,
            kind: Constraint::Box { lo: 0.0, hi: 1.0 },
        }
    }
}

pub(crate) fn project(segments: &[Segment], v: &mut [f64]) {
    for seg in segments {
        let part = &mut v[seg.start..seg.start + seg.len];
        match seg.kind {
            Constraint::Simplex => project_simplex_in_place(part),
            Constraint::Box { lo, hi } => part.iter_mut().for_each(|x| *x = x.clamp(lo, hi)),
        }
    }
}

/// `sum_i (y_i - f_i . u)^2` with dense feature rows.
#[derive(Clone, Debug)]
pub(crate) struct LeastSquares {
    n: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
}

impl LeastSquares {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            features: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn push(&mut self, features: &[f64], target: f64) {
        debug_assert_eq!(features.len(), self.n);
        self.features.extend_from_slice(features);
        self.targets.push(target);
    }

    fn n_rows(&self) -> usize {
        self.targets.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n..(i + 1) * self.n]
    }

    fn residual(&self, i: usize, u: &[f64]) -> f64 {
        let mut acc = self.targets[i];
        for (f, x) in self.row(i).iter().zip(u) {
            acc -= f * x;
        }
        acc
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        (0..self.n_rows()).map(|i| self.residual(i, u).powi(2)).sum()
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..self.n_rows() {
            let r = self.residual(i, u);
            for (g, f) in out.iter_mut().zip(self.row(i)) {
                *g -= 2.0 * r * f;
            }
        }
    }

    fn normal_equations(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut h = DMatrix::zeros(self.n, self.n);
        let mut g = DVector::zeros(self.n);
        for i in 0..self.n_rows() {
            let row = self.row(i);
            for a in 0..self.n {
                g[a] += row[a] * self.targets[i];
                for b in 0..self.n {
                    h[(a, b)] += row[a] * row[b];
                }
            }
        }
        (h, g)
    }

    /// Largest eigenvalue of the Hessian `2 F^T F`, by power iteration.
    fn lipschitz(&self) -> f64 {
        let (h, _) = self.normal_equations();
        let mut v = DVector::from_element(self.n, 1.0 / (self.n as f64).sqrt());
        let mut lambda = 0.0;
        for _ in 0..100 {
            let hv = &h * &v;
            let norm = hv.norm();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            v = hv / norm;
        }
        2.0 * lambda * 1.01
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct QpOptions {
    pub step_rule: StepRule,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            step_rule: StepRule::Backtracking,
            max_iter: 20_000,
            tol: 1e-12,
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const POLISH_EVERY: usize = 5;

/// Minimises `ls` over the product set, starting from `start`. The returned
/// point never has a larger objective than the projected start.
pub(crate) fn solve(ls: &LeastSquares, segments: &[Segment], start: &[f64], opts: QpOptions) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut x = start.to_vec();
    project(segments, &mut x);
    let mut fx = ls.value(&x);
    if n == 0 {
        return (x, fx);
    }

    let fixed_step = match opts.step_rule {
        StepRule::Fixed => {
            let l = ls.lipschitz();
            if l == 0.0 {
                return (x, fx);
            }
            Some(1.0 / l)
        }
        StepRule::Backtracking => None,
    };
    let mut alpha = fixed_step.unwrap_or(1.0);

    let mut grad = vec![0.0; n];
    ls.gradient(&x, &mut grad);
    let scale = 1.0 + grad.iter().map(|g| g * g).sum::<f64>().sqrt();

    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut z = vec![0.0; n];
    let mut just_restarted = false;

    for k in 0..opts.max_iter {
        let fy = ls.value(&y);
        ls.gradient(&y, &mut grad);
        let fz = loop {
            for i in 0..n {
                z[i] = y[i] - alpha * grad[i];
            }
            project(segments, &mut z);
            let fz = ls.value(&z);
            if fixed_step.is_some() {
                break fz;
            }
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..n {
                let d = z[i] - y[i];
                lin += grad[i] * d;
                sq += d * d;
            }
            // The quadratic upper bound implies Armijo decrease with ARMIJO_C.
            let armijo = fz <= fy + ARMIJO_C * lin;
            if (armijo && fz <= fy + lin + sq / (2.0 * alpha)) || alpha < 1e-30 {
                break fz;
            }
            alpha *= 0.5;
        };
        let mapping = z.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / alpha;

        if fz <= fx {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            for i in 0..n {
                y[i] = z[i] + momentum * (z[i] - x[i]);
            }
            project(segments, &mut y);
            x.copy_from_slice(&z);
            fx = fz;
            t = t_next;
            just_restarted = false;
        } else {
            if just_restarted {
                break;
            }
            y.copy_from_slice(&x);
            t = 1.0;
            just_restarted = true;
            continue;
        }
        if fixed_step.is_none() {
            alpha = (alpha * 2.0).min(1.0);
        }
        if mapping <= opts.tol * scale {
            break;
        }
        if k % POLISH_EVERY == POLISH_EVERY - 1 {
            let (p, fp, optimal) = active_set(ls, segments, &x);
            if fp <= fx {
                x = p;
                fx = fp;
                y.copy_from_slice(&x);
                t = 1.0;
            }
            // A certified optimum differs from the iterate only by round-off.
            if optimal && fp <= fx + 1e-13 * (1.0 + fx) {
                return (x, fx);
            }
        }
    }
    let (p, fp, _) = active_set(ls, segments, &x);
    if fp <= fx {
        (p, fp)
    } else {
        (x, fx)
    }
}

/// Primal active-set refinement from the feasible point `x`.
///
/// Each pass minimises over the face defined by the current working set. If
/// the face minimiser is infeasible the point moves toward it until the
/// first bound blocks, and that bound joins the working set; otherwise the
/// bound with the most negative multiplier is released. Returns the point,
/// its value, and whether the KKT conditions hold.
fn active_set(ls: &LeastSquares, segments: &[Segment], x: &[f64]) -> (Vec<f64>, f64, bool) {
    const EPS: f64 = 1e-12;
    let n = x.len();
    let (h, g) = ls.normal_equations();
    let mut x = x.to_vec();
    // Bound value for coordinates in the working set.
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for seg in segments {
        for i in seg.start..seg.start + seg.len {
            let (lo, hi) = bounds(seg.kind);
            if x[i] - lo <= EPS {
                fixed[i] = Some(lo);
            } else if hi - x[i] <= EPS {
                fixed[i] = Some(hi);
            }
        }
    }
    for (i, f) in fixed.iter().enumerate() {
        if let Some(v) = f {
            x[i] = *v;
        }
    }
    for seg in segments {
        if seg.kind == Constraint::Simplex {
            let part = &mut x[seg.start..seg.start + seg.len];
            let sum: f64 = part.iter().sum();
            part.iter_mut().for_each(|v| *v /= sum);
        }
    }

    let gradient = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 2.0 * ((0..n).map(|j| h[(i, j)] * u[j]).sum::<f64>() - g[i]))
            .collect()
    };

    for _ in 0..4 * n + 20 {
        let Some(c) = face_minimiser(&h, &g, segments, &fixed, &x) else {
            break;
        };
        // Largest step toward c that stays feasible.
        let mut alpha = 1.0;
        let mut blocking = None;
        for seg in segments {
            let (lo, hi) = bounds(seg.kind);
            for i in seg.start..seg.start + seg.len {
                if fixed[i].is_some() {
                    continue;
                }
                let d = c[i] - x[i];
                let limit = if d < 0.0 && c[i] < lo {
                    Some(((lo - x[i]) / d, lo))
                } else if d > 0.0 && c[i] > hi {
                    Some(((hi - x[i]) / d, hi))
                } else {
                    None
                };
                if let Some((a, bound)) = limit {
                    let a = a.clamp(0.0, 1.0);
                    if a < alpha {
                        alpha = a;
                        blocking = Some((i, bound));
                    }
                }
            }
        }
        for i in 0..n {
            x[i] += alpha * (c[i] - x[i]);
        }
        if let Some((i, bound)) = blocking {
            x[i] = bound;
            fixed[i] = Some(bound);
            continue;
        }
        project(segments, &mut x);

        // Face optimum reached: check the multipliers of the working set.
        let grad = gradient(&x);
        let tol = 1e-12 * (1.0 + grad.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        let mut worst: Option<(usize, f64)> = None;
        for seg in segments {
            let range = seg.start..seg.start + seg.len;
            let (lo, hi) = bounds(seg.kind);
            let level = match seg.kind {
                Constraint::Simplex => {
                    let free: Vec<f64> = range.clone().filter(|&i| fixed[i].is_none()).map(|i| grad[i]).collect();
                    free.iter().sum::<f64>() / free.len().max(1) as f64
                }
                Constraint::Box { .. } => 0.0,
            };
            for i in range {
                let violation = match fixed[i] {
                    Some(v) if v == lo => level - grad[i],
                    Some(v) if v == hi => grad[i],
                    _ => continue,
                };
                if violation > tol && worst.is_none_or(|(_, w)| violation > w) {
                    worst = Some((i, violation));
                }
            }
        }
        match worst {
            Some((i, _)) => fixed[i] = None,
            None => {
                let f = ls.value(&x);
                return (x, f, true);
            }
        }
    }
    let f = ls.value(&x);
    (x, f, false)
}

fn bounds(kind: Constraint) -> (f64, f64) {
    match kind {
        // The upper limit is implied by the sum constraint.
        Constraint::Simplex => (0.0, f64::INFINITY),
        Constraint::Box { lo, hi } => (lo, hi),
    }
}

/// Minimiser of the quadratic over the face where the working-set
/// coordinates sit at their bounds and each simplex sums to one. Flat
/// directions are resolved by the minimum-norm step from `x`.
fn face_minimiser(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    segments: &[Segment],
    fixed: &[Option<f64>],
    x: &[f64],
) -> Option<Vec<f64>> {
    let n = x.len();
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seg in segments.iter().filter(|s| s.kind == Constraint::Simplex) {
        let group: Vec<usize> = free
            .iter()
            .enumerate()
            .filter(|(_, &i)| (seg.start..seg.start + seg.len).contains(&i))
            .map(|(a, _)| a)
            .collect();
        if group.is_empty() {
            return None;
        }
        groups.push(group);
    }
    let nf = free.len();
    let mut base = x.to_vec();
    for (i, f) in fixed.iter().enumerate() {
        if let Some(v) = f {
            base[i] = *v;
        }
    }
    if nf == 0 {
        return Some(base);
    }
    // Solve for the step d on the free coordinates:
    //   2 H_ff d + E^T nu = -grad_f(base),  E d = 0.
    let dim = nf + groups.len();
    let mut kkt = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for (a, &i) in free.iter().enumerate() {
        let hx: f64 = (0..n).map(|j| h[(i, j)] * base[j]).sum();
        rhs[a] = -2.0 * (hx - g[i]);
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = 2.0 * h[(i, j)];
        }
    }
    for (c, group) in groups.iter().enumerate() {
        for &a in group {
            kkt[(a, nf + c)] = 1.0;
            kkt[(nf + c, a)] = 1.0;
        }
    }
    let lu_step = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|d| d.iter().all(|v| v.is_finite()) && (&kkt * d - &rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    let step = match lu_step {
        Some(d) => d,
        None => kkt.svd(true, true).solve(&rhs, 1e-13).ok()?,
    };
    if step.iter().any(|v| !v.is_finite()) {
        return None;
    }
    for (a, &i) in free.iter().enumerate() {
        base[i] += step[a];
    }
    Some(base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_interior_minimum() {
        // minimise (u0 - 0.3)^2 + (u1 - 0.7)^2 on the simplex: optimum (0.3, 0.7)
        let mut ls = LeastSquares::new(2);
        ls.push(&[1.0, 0.0], 0.3);
        ls.push(&[0.0, 1.0], 0.7);
        let (u, f) = solve(&ls, &[Segment::simplex(0, 2)], &[0.5, 0.5], QpOptions::default());
        assert!((u[0] - 0.3).abs() < 1e-12 && (u[1] - 0.7).abs() < 1e-12);
        assert!(f < 1e-24);
    }

    #[test]
    fn active_bound_in_box() {
        let mut ls = LeastSquares::new(1);
        ls.push(&[1.0], 1.4);
        for rule in [StepRule::Fixed, StepRule::Backtracking] {
            let opts = QpOptions {
                step_rule: rule,
                ..Default::default()
            };
            let (u, _) = solve(&ls, &[Segment::unit_box(0, 1)], &[0.2], opts);
            assert_eq!(u, vec![1.0]);
        }
    }

    #[test]
    fn simplex_projection_as_qp() {
        // The projection of v onto the simplex is the least-squares fit with identity features.
        let v = [0.9, -0.3, 0.6, 0.1];
        let mut ls = LeastSquares::new(4);
        for i in 0..4 {
            let mut f = [0.0; 4];
            f[i] = 1.0;
            ls.push(&f, v[i]);
        }
        let (u, _) = solve(&ls, &[Segment::simplex(0, 4)], &[0.25; 4], QpOptions::default());
        let p = super::super::project_simplex(&v);
        for (a, b) in u.iter().zip(&p) {
            assert!((a - b).abs() < 1e-12, "{u:?} vs {p:?}");
        }
    }

    #[test]
    fn never_worse_than_start() {
        let mut ls = LeastSquares::new(3);
        ls.push(&[1.0, 2.0, 0.5], 0.7);
        ls.push(&[0.2, 0.1, 0.9], 0.4);
        let start = [0.2, 0.3, 0.5];
        let f0 = ls.value(&start);
        let (_, f) = solve(&ls, &[Segment::simplex(0, 3)], &start, QpOptions::default());
        assert!(f <= f0);
    }
}
