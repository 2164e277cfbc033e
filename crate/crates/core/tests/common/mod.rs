#![allow(dead_code)]

use opinionfit::estimate::project_simplex;
use opinionfit::models::{simulate, SimState};
use opinionfit::panel::validate_panel;
use opinionfit::{Family, Matrix, ModelSpec, ParamParts, ParamSet, SentimentPanel};
use rand::Rng;

/// Random row-stochastic matrix with every entry at least `floor`.
pub fn stochastic<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for b in 0..n {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let free = 1.0 - floor * n as f64;
        for k in 0..n {
            m[(b, k)] = floor + free * raw[k] / total;
        }
    }
    m
}

/// Random row-stochastic matrix with zero diagonal.
pub fn peer_matrix<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for b in 0..n {
        let raw: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let free = 1.0 - floor * (n - 1) as f64;
        let mut j = 0;
        for k in 0..n {
            if k != b {
                m[(b, k)] = floor + free * raw[j] / total;
                j += 1;
            }
        }
    }
    m
}

pub fn unit_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Random valid parameters for `family`, every bounded entry at least
/// `margin` inside its box (simplex rows at least `margin` per entry).
pub fn random_params<R: Rng>(rng: &mut R, family: Family, n: usize, t_est: usize, margin: f64) -> ParamSet {
    let lo = margin;
    let hi = 1.0 - margin;
    let parts = match family {
        Family::Fdg => ParamParts {
            w: Some(stochastic(rng, n, margin)),
            ..Default::default()
        },
        Family::Fj => ParamParts {
            w: Some(stochastic(rng, n, margin)),
            s: Some(unit_vec(rng, n, lo, hi)),
            z: Some(unit_vec(rng, n, lo, hi)),
            ..Default::default()
        },
        Family::Fdgm => ParamParts {
            w: Some(stochastic(rng, n, margin)),
            s: Some(unit_vec(rng, n, lo, hi)),
            ..Default::default()
        },
        Family::Epo | Family::Repo => {
            let epo = family == Family::Epo;
            ParamParts {
                a: Some(peer_matrix(rng, n, margin)),
                d: Some(unit_vec(rng, n, lo, hi)),
                s: epo.then(|| unit_vec(rng, n, lo, hi)),
                z: epo.then(|| unit_vec(rng, n, lo, hi)),
                phi: Some(unit_vec(rng, n, lo, hi)),
                x: Some(Matrix::from_fn(n, t_est, |_, _| rng.gen_range(lo..=hi))),
                ..Default::default()
            }
        }
    };
    ParamSet::new(family, parts).expect("generated parameters are valid")
}

pub fn random_panel<R: Rng>(rng: &mut R, n: usize, t: usize) -> SentimentPanel {
    SentimentPanel::from_matrix(Matrix::from_fn(n, t, |_, _| rng.gen_range(0.0..=1.0))).unwrap()
}

/// Panel whose columns are the given vectors, with ids `b1..` and periods `1..`.
pub fn panel_from_columns(columns: &[Vec<f64>]) -> SentimentPanel {
    let n = columns[0].len();
    let t = columns.len();
    let values = Matrix::from_fn(n, t, |b, k| columns[k][b]);
    validate_panel(
        values,
        (1..=n).map(|i| format!("b{i}")).collect(),
        (1..=t).map(|i| i.to_string()).collect(),
    )
    .unwrap()
}

/// Expressed trajectory of `spec` over `periods` periods, starting from the
/// given expressed (and, for two-layer models, private) opinions.
pub fn simulate_panel(
    spec: ModelSpec,
    params: &ParamSet,
    xe0: Vec<f64>,
    x0: Vec<f64>,
    periods: usize,
) -> SentimentPanel {
    let init = if spec.family().is_two_layer() {
        SimState::two_layer(x0, vec![xe0.clone(); spec.lag() + 1])
    } else {
        SimState::observed(vec![xe0.clone(); spec.lag() + 1])
    };
    let mut columns = vec![xe0];
    columns.extend(
        simulate(spec, params, &init, periods - 1)
            .unwrap()
            .into_iter()
            .map(|(_, xe)| xe),
    );
    panel_from_columns(&columns)
}

/// Brute-force nearest point of the 2-simplex on a grid of step `h`.
pub fn grid_projection(v: &[f64; 3], h: f64) -> [f64; 3] {
    let steps = (1.0 / h).round() as usize;
    let mut best = [0.0; 3];
    let mut best_d = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let p = [i as f64 * h, j as f64 * h, (steps - i - j) as f64 * h];
            let d: f64 = p.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
    }
    best
}

/// Exact projection used as a reference alongside the grid search.
pub fn projected(v: &[f64; 3]) -> Vec<f64> {
    project_simplex(v)
}
