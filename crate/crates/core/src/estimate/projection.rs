/// Euclidean projection onto the probability simplex `{p >= 0, sum p = 1}`.
///
/// Sort-based exact algorithm: find the largest `rho` with
/// `u_rho - (sum_{i<=rho} u_i - 1) / rho > 0` over the descending sort `u`,
/// then shift and clip.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// In-place variant of [`project_simplex`].
pub(crate) fn project_simplex_in_place(v: &mut [f64]) {
    let p = project_simplex(v);
    v.copy_from_slice(&p);
}

/// Entrywise clamp to `[lo, hi]`.
pub fn project_box(v: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    assert!(lo <= hi, "empty box [{lo}, {hi}]");
    v.iter().map(|x| x.clamp(lo, hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn simplex_examples() {
        let third = 1.0 / 3.0;
        assert!(close(&project_simplex(&[0.5, 0.5, 0.5]), &[third; 3], 1e-15));
        assert_eq!(project_simplex(&[2.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        assert!(close(&project_simplex(&[0.6, 0.3]), &[0.65, 0.35], 1e-15));
    }

    #[test]
    fn simplex_on_one_simplex_matches_grid_search() {
        // Dense grid over the 1-simplex {(p, 1 - p)} for v = (0.6, 0.3).
        let v = [0.6, 0.3];
        let (mut best, mut best_d) = (0.0, f64::INFINITY);
        for i in 0..=100_000 {
            let p = i as f64 / 100_000.0;
            let d = (p - v[0]).powi(2) + (1.0 - p - v[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
        let proj = project_simplex(&v);
        assert!((proj[0] - best).abs() <= 1e-5);
        assert!((best - 0.65).abs() < 1e-12);
    }

    #[test]
    fn box_examples() {
        assert_eq!(project_box(&[-0.2, 0.5, 1.3], 0.0, 1.0), vec![0.0, 0.5, 1.0]);
        assert_eq!(project_box(&[0.1, 0.9], 0.0, 1.0), vec![0.1, 0.9]);
        assert_eq!(project_box(&[0.5], 0.5, 0.5), vec![0.5]);
    }
}
