//! Per-blog block updates. With the latent states treated as unknowns the
//! estimation objective separates across blogs, so every family is fitted
//! one blog (row) at a time.

use super::qp::{self, LeastSquares, QpOptions, Segment};
use crate::panel::{Family, SentimentPanel};

/// Everything one blog contributes to the parameter bundle.
///
/// `row` is the blog's row of `W` for single-layer families and of `A` for
/// two-layer families (diagonal entry kept at zero).
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct BlogState {
    pub row: Vec<f64>,
    pub s: f64,
    pub z: f64,
    pub d: f64,
    pub phi: f64,
    pub x: Vec<f64>,
}

/// Fixed data shared by all block updates of one fit.
pub(crate) struct Problem<'a> {
    pub family: Family,
    pub lag: usize,
    pub n: usize,
    pub t_est: usize,
    pub panel: &'a SentimentPanel,
    /// Susceptibilities held fixed (FJ only); `None` lets them vary.
    pub fixed_s: Option<&'a [f64]>,
    pub qp: QpOptions,
}

impl Problem<'_> {
    fn obs(&self, b: usize, t: usize) -> f64 {
        self.panel.value(b, t)
    }

    fn transitions(&self) -> std::ops::Range<usize> {
        self.lag..self.t_est - 1
    }

    /// `sum_{k != b} a_bk xe_k(t)`.
    fn peers(&self, b: usize, row: &[f64], t: usize) -> f64 {
        let mut acc = 0.0;
        for (k, a) in row.iter().enumerate() {
            if k != b {
                acc += a * self.obs(k, t);
            }
        }
        acc
    }

    /// The blog's share of the estimation objective.
    pub fn blog_objective(&self, b: usize, st: &BlogState) -> f64 {
        let mut total = 0.0;
        for t in self.transitions() {
            if self.family.is_two_layer() {
                let now = self.peers(b, &st.row, t);
                let lagged = self.peers(b, &st.row, t - self.lag);
                let inner = st.d * st.x[t] + (1.0 - st.d) * now;
                let r1 = st.x[t + 1] - st.s * inner - (1.0 - st.s) * st.z;
                let r2 = self.obs(b, t + 1) - st.phi * st.x[t + 1] - (1.0 - st.phi) * lagged;
                total += r1 * r1 + r2 * r2;
            } else {
                let mut social = 0.0;
                for (k, w) in st.row.iter().enumerate() {
                    social += w * self.obs(k, t);
                }
                let (s, anchor) = match self.family {
                    Family::Fdg => (1.0, 0.0),
                    Family::Fj => (st.s, st.z),
                    Family::Fdgm => (st.s, self.obs(b, t - self.lag)),
                    _ => unreachable!(),
                };
                let r = self.obs(b, t + 1) - s * social - (1.0 - s) * anchor;
                total += r * r;
            }
        }
        total
    }

    /// One pass of block updates for blog `b`.
    pub fn update(&self, b: usize, st: &mut BlogState) {
        match self.family {
            Family::Fdg => self.update_fdg(b, st),
            Family::Fj => match self.fixed_s {
                Some(s) => self.update_fj_fixed(b, st, s[b]),
                None => self.update_fj(b, st),
            },
            Family::Fdgm => self.update_fdgm(b, st),
            Family::Epo | Family::Repo => self.update_two_layer(b, st),
        }
    }

    fn update_fdg(&self, b: usize, st: &mut BlogState) {
        let n = self.n;
        let mut ls = LeastSquares::new(n);
        let mut f = vec![0.0; n];
        for t in self.transitions() {
            for (k, v) in f.iter_mut().enumerate() {
                *v = self.obs(k, t);
            }
            ls.push(&f, self.obs(b, t + 1));
        }
        let (row, _) = qp::solve(&ls, &[Segment::simplex(0, n)], &st.row, self.qp);
        st.row = row;
    }

    /// Convex form of the FJ row: with `u = s w` and `c = (1 - s) z` the
    /// prediction `u . x(t) + c` is linear and `(u, c, slack)` ranges over a
    /// simplex.
    fn update_fj(&self, b: usize, st: &mut BlogState) {
        let n = self.n;
        let mut ls = LeastSquares::new(n + 2);
        let mut f = vec![0.0; n + 2];
        for t in self.transitions() {
            for k in 0..n {
                f[k] = self.obs(k, t);
            }
            f[n] = 1.0;
            ls.push(&f, self.obs(b, t + 1));
        }
        let mut start: Vec<f64> = st.row.iter().map(|w| st.s * w).collect();
        start.push((1.0 - st.s) * st.z);
        start.push((1.0 - st.s) * (1.0 - st.z));
        let (u, _) = qp::solve(&ls, &[Segment::simplex(0, n + 2)], &start, self.qp);
        let s: f64 = u[..n].iter().sum();
        if s > 1e-300 {
            st.row = u[..n].iter().map(|v| v / s).collect();
        }
        if 1.0 - s > 1e-300 {
            st.z = (u[n] / (1.0 - s)).clamp(0.0, 1.0);
        }
        st.s = s.clamp(0.0, 1.0);
    }

    fn update_fj_fixed(&self, b: usize, st: &mut BlogState, s: f64) {
        let n = self.n;
        let mut ls = LeastSquares::new(n + 1);
        let mut f = vec![0.0; n + 1];
        for t in self.transitions() {
            for k in 0..n {
                f[k] = s * self.obs(k, t);
            }
            f[n] = 1.0 - s;
            ls.push(&f, self.obs(b, t + 1));
        }
        let mut start = st.row.clone();
        start.push(st.z);
        let segs = [Segment::simplex(0, n), Segment::unit_box(n, 1)];
        let (u, _) = qp::solve(&ls, &segs, &start, self.qp);
        st.row = u[..n].to_vec();
        st.z = u[n];
        st.s = s;
    }

    /// With `u = s w` the FDGM prediction is `x_b(t - lag) + u . (x(t) - x_b(t - lag) 1)`.
    fn update_fdgm(&self, b: usize, st: &mut BlogState) {
        let n = self.n;
        let mut ls = LeastSquares::new(n + 1);
        let mut f = vec![0.0; n + 1];
        for t in self.transitions() {
            let own = self.obs(b, t - self.lag);
            for k in 0..n {
                f[k] = self.obs(k, t) - own;
            }
            ls.push(&f, self.obs(b, t + 1) - own);
        }
        let mut start: Vec<f64> = st.row.iter().map(|w| st.s * w).collect();
        start.push(1.0 - st.s);
        let (u, _) = qp::solve(&ls, &[Segment::simplex(0, n + 1)], &start, self.qp);
        let s: f64 = u[..n].iter().sum();
        if s > 1e-300 {
            st.row = u[..n].iter().map(|v| v / s).collect();
        }
        st.s = s.clamp(0.0, 1.0);
    }

    /// Cycles the convex blocks of one blog: peer weights, the
    /// (susceptibility, self-weight, innate) triple, expression
    /// coefficient, latent trajectory, then one joint step over all of them.
    fn update_two_layer(&self, b: usize, st: &mut BlogState) {
        self.update_peer_row(b, st);
        if self.family == Family::Epo {
            self.update_anchoring(b, st);
        } else {
            self.update_self_weight(b, st);
        }
        self.update_phi(b, st);
        self.update_latent(b, st);
        self.joint_step(b, st);
    }

    /// Damped Gauss-Newton step on all of the blog's variables at once,
    /// kept only if it lowers the blog objective. Cyclic block updates
    /// crawl along the flat valleys of the bilinear objective; the joint
    /// step crosses them.
    fn joint_step(&self, b: usize, st: &mut BlogState) {
        let n = self.n;
        let epo = self.family == Family::Epo;
        let peers: Vec<usize> = (0..n).filter(|&k| k != b).collect();
        let m = n - 1;
        // Layout: peer weights | d | phi | (s | z) | x(lag ..= t_est - 1).
        let id = m;
        let iphi = m + 1;
        let is = m + 2;
        let iz = m + 3;
        let ix = if epo { m + 4 } else { m + 2 };
        let first = self.lag;
        let nv = ix + self.t_est - first;

        let mut v = vec![0.0; nv];
        for (j, &k) in peers.iter().enumerate() {
            v[j] = st.row[k];
        }
        v[id] = st.d;
        v[iphi] = st.phi;
        if epo {
            v[is] = st.s;
            v[iz] = st.z;
        }
        v[ix..].copy_from_slice(&st.x[first..]);

        // Linearised residual rows `(J, r)` with `r(v + delta) ~ r + J delta`.
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(2 * (self.t_est - 1 - first));
        for t in self.transitions() {
            let (s, d, phi) = (st.s, st.d, st.phi);
            let now = self.peers(b, &st.row, t);
            let lagged = self.peers(b, &st.row, t - self.lag);
            let (xt, xn) = (st.x[t], st.x[t + 1]);

            let mut j1 = vec![0.0; nv];
            for (j, &k) in peers.iter().enumerate() {
                j1[j] = -s * (1.0 - d) * self.obs(k, t);
            }
            j1[id] = -s * (xt - now);
            if epo {
                j1[is] = -(d * xt + (1.0 - d) * now - st.z);
                j1[iz] = -(1.0 - s);
            }
            j1[ix + t - first] = -s * d;
            j1[ix + t + 1 - first] += 1.0;
            let r1 = xn - s * (d * xt + (1.0 - d) * now) - (1.0 - s) * st.z;
            rows.push((j1, r1));

            let mut j2 = vec![0.0; nv];
            for (j, &k) in peers.iter().enumerate() {
                j2[j] = -(1.0 - phi) * self.obs(k, t - self.lag);
            }
            j2[iphi] = -(xn - lagged);
            j2[ix + t + 1 - first] = -phi;
            let r2 = self.obs(b, t + 1) - phi * xn - (1.0 - phi) * lagged;
            rows.push((j2, r2));
        }

        let scale = rows
            .iter()
            .map(|(j, _)| j.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            / nv as f64;
        let mut segments = vec![Segment::simplex(0, m), Segment::unit_box(m, nv - m)];
        if m == 0 {
            segments.remove(0);
        }
        let current = self.blog_objective(b, st);
        if current == 0.0 {
            return;
        }
        for damping in [1e-9, 1e-5, 1e-2, 1.0] {
            let lambda = damping * scale.max(f64::MIN_POSITIVE);
            let mut ls = LeastSquares::new(nv);
            for (j, r) in &rows {
                // Minimise (r - J v + J y)^2 over y = v + delta.
                let jv: f64 = j.iter().zip(&v).map(|(a, b)| a * b).sum();
                let f: Vec<f64> = j.iter().map(|x| -x).collect();
                ls.push(&f, r - jv);
            }
            let root = lambda.sqrt();
            let mut e = vec![0.0; nv];
            for i in 0..nv {
                e[i] = root;
                ls.push(&e, root * v[i]);
                e[i] = 0.0;
            }
            let (y, _) = qp::solve(&ls, &segments, &v, self.qp);
            // Backtrack towards v; every trial point stays feasible by convexity.
            let mut alpha = 1.0;
            while alpha >= 1.0 / 64.0 {
                let point: Vec<f64> = v.iter().zip(&y).map(|(a, b)| a + alpha * (b - a)).collect();
                let mut trial = st.clone();
                for (j, &k) in peers.iter().enumerate() {
                    trial.row[k] = point[j];
                }
                trial.d = point[id];
                trial.phi = point[iphi];
                if epo {
                    trial.s = point[is];
                    trial.z = point[iz];
                }
                trial.x[first..].copy_from_slice(&point[ix..]);
                if self.blog_objective(b, &trial) < current {
                    *st = trial;
                    return;
                }
                alpha /= 2.0;
            }
        }
    }

    fn update_peer_row(&self, b: usize, st: &mut BlogState) {
        let n = self.n;
        let m = n - 1;
        let peers: Vec<usize> = (0..n).filter(|&k| k != b).collect();
        let coupling = st.s * (1.0 - st.d);
        let mut ls = LeastSquares::new(m);
        let mut f = vec![0.0; m];
        for t in self.transitions() {
            for (j, &k) in peers.iter().enumerate() {
                f[j] = coupling * self.obs(k, t);
            }
            ls.push(&f, st.x[t + 1] - st.s * st.d * st.x[t] - (1.0 - st.s) * st.z);
            for (j, &k) in peers.iter().enumerate() {
                f[j] = (1.0 - st.phi) * self.obs(k, t - self.lag);
            }
            ls.push(&f, self.obs(b, t + 1) - st.phi * st.x[t + 1]);
        }
        let start: Vec<f64> = peers.iter().map(|&k| st.row[k]).collect();
        let (u, _) = qp::solve(&ls, &[Segment::simplex(0, m)], &start, self.qp);
        for (j, &k) in peers.iter().enumerate() {
            st.row[k] = u[j];
        }
        st.row[b] = 0.0;
    }

    /// `p = s d`, `q = s (1 - d)`, `r = (1 - s) z`: the private-layer
    /// prediction `p x(t) + q (a . xe(t)) + r` is linear and `(p, q, r, slack)`
    /// ranges over a simplex.
    fn update_anchoring(&self, b: usize, st: &mut BlogState) {
        let mut ls = LeastSquares::new(4);
        for t in self.transitions() {
            let peers = self.peers(b, &st.row, t);
            ls.push(&[st.x[t], peers, 1.0, 0.0], st.x[t + 1]);
        }
        let start = [
            st.s * st.d,
            st.s * (1.0 - st.d),
            (1.0 - st.s) * st.z,
            (1.0 - st.s) * (1.0 - st.z),
        ];
        let (u, _) = qp::solve(&ls, &[Segment::simplex(0, 4)], &start, self.qp);
        let s = u[0] + u[1];
        if s > 1e-300 {
            st.d = (u[0] / s).clamp(0.0, 1.0);
        }
        if 1.0 - s > 1e-300 {
            st.z = (u[2] / (1.0 - s)).clamp(0.0, 1.0);
        }
        st.s = s.clamp(0.0, 1.0);
    }

    /// Reduced model (`s = 1`): `x(t+1) - a . xe(t) = d (x(t) - a . xe(t))`.
    fn update_self_weight(&self, b: usize, st: &mut BlogState) {
        let mut ls = LeastSquares::new(1);
        for t in self.transitions() {
            let peers = self.peers(b, &st.row, t);
            ls.push(&[st.x[t] - peers], st.x[t + 1] - peers);
        }
        let (u, _) = qp::solve(&ls, &[Segment::unit_box(0, 1)], &[st.d], self.qp);
        st.d = u[0];
    }

    fn update_phi(&self, b: usize, st: &mut BlogState) {
        let mut ls = LeastSquares::new(1);
        for t in self.transitions() {
            let lagged = self.peers(b, &st.row, t - self.lag);
            ls.push(&[st.x[t + 1] - lagged], self.obs(b, t + 1) - lagged);
        }
        let (u, _) = qp::solve(&ls, &[Segment::unit_box(0, 1)], &[st.phi], self.qp);
        st.phi = u[0];
    }

    /// Latent trajectory `x_b(lag ..= t_est - 1)`: a box-constrained
    /// least-squares problem with banded features.
    pub fn update_latent(&self, b: usize, st: &mut BlogState) {
        let first = self.lag;
        let m = self.t_est - first;
        let self_w = st.s * st.d;
        let mut ls = LeastSquares::new(m);
        let mut f = vec![0.0; m];
        for t in self.transitions() {
            let j = t - first;
            let peers = self.peers(b, &st.row, t);
            f.iter_mut().for_each(|v| *v = 0.0);
            f[j + 1] = 1.0;
            f[j] = -self_w;
            ls.push(&f, st.s * (1.0 - st.d) * peers + (1.0 - st.s) * st.z);
            let lagged = self.peers(b, &st.row, t - self.lag);
            f.iter_mut().for_each(|v| *v = 0.0);
            f[j + 1] = st.phi;
            ls.push(&f, self.obs(b, t + 1) - (1.0 - st.phi) * lagged);
        }
        let (u, _) = qp::solve(&ls, &[Segment::unit_box(0, m)], &st.x[first..], self.qp);
        st.x[first..].copy_from_slice(&u);
    }
}
