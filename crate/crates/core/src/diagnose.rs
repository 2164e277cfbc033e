//! Range-violation indices and forecast error metrics.

use std::io::Write;

use crate::error::{Error, Result};
use crate::matrix::{euclidean_distance, Matrix};
use crate::models::{epo_expressed, predict, step_epo_private, step_fdg, step_fdgm, step_fj};
use crate::panel::{export_value, format_sig, Family, FitResult, SentimentPanel};

/// Smallest and largest sentiment over all blogs in periods
/// `t - tau ..= t` (1-based).
fn window_range(panel: &SentimentPanel, t: usize, tau: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in t - tau..=t {
        for v in panel.column(p - 1) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// `mu_b(t, tau) = (sigma_b(t) - m) / (M - m)`, with `m`, `M` the extreme
/// sentiments over all blogs in the `tau + 1` periods before `t`.
///
/// `b` and `t` are 1-based; the window must lie inside the panel, so
/// `t >= tau + 2`. Values outside `[0, 1]` mean `sigma_b(t)` left the range
/// that pure averaging with delay `tau` could produce.
pub fn range_violation_index(panel: &SentimentPanel, b: usize, t: usize, tau: usize) -> Result<f64> {
    if b == 0 || b > panel.n_blogs() {
        return Err(Error::IndexOutOfRange(format!(
            "blog {b} not in 1..={}",
            panel.n_blogs()
        )));
    }
    if t < tau + 2 || t > panel.n_periods() {
        return Err(Error::IndexOutOfRange(format!(
            "period {t} not in {}..={} for tau = {tau}",
            tau + 2,
            panel.n_periods()
        )));
    }
    let (lo, hi) = window_range(panel, t - 1, tau);
    if hi == lo {
        return Err(Error::DegenerateRange { period: t });
    }
    Ok((panel.value(b - 1, t - 1) - lo) / (hi - lo))
}

/// Per-blog number of periods with `mu` outside `[-slack, 1 + slack]`.
/// Cells with a degenerate range count as no violation.
pub fn violation_summary(panel: &SentimentPanel, tau: usize, slack: f64) -> Vec<usize> {
    (1..=panel.n_blogs())
        .map(|b| {
            (tau + 2..=panel.n_periods())
                .filter(|&t| match range_violation_index(panel, b, t, tau) {
                    Ok(mu) => mu < -slack || mu > 1.0 + slack,
                    Err(_) => false,
                })
                .count()
        })
        .collect()
}

/// One row of the long-format index table.
#[derive(Clone, Debug, PartialEq)]
pub struct ViolationPoint {
    pub tau: usize,
    pub blog: usize,
    pub period: usize,
    pub mu: f64,
}

/// All indices for `tau = 0..=tau_max`, ordered by `tau`, blog, period.
pub fn violation_table(panel: &SentimentPanel, tau_max: usize) -> Result<Vec<ViolationPoint>> {
    let mut out = Vec::new();
    for tau in 0..=tau_max {
        for blog in 1..=panel.n_blogs() {
            for period in tau + 2..=panel.n_periods() {
                let mu = range_violation_index(panel, blog, period, tau)?;
                out.push(ViolationPoint { tau, blog, period, mu });
            }
        }
    }
    Ok(out)
}

pub fn write_violation_csv<W: Write>(mut out: W, panel: &SentimentPanel, points: &[ViolationPoint]) -> Result<()> {
    writeln!(out, "tau,blog_id,t,mu")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            p.tau,
            panel.blog_ids()[p.blog - 1],
            p.period,
            format_sig(p.mu, 6)
        )?;
    }
    Ok(())
}

/// Error norm for one period: `||predicted - observed||`, not divided by the
/// number of blogs.
pub fn rmse_period(predicted: &[f64], observed: &[f64]) -> Result<f64> {
    if predicted.len() != observed.len() {
        return Err(Error::DimensionMismatch {
            expected: observed.len(),
            found: predicted.len(),
        });
    }
    Ok(euclidean_distance(predicted, observed))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub sum_of_residuals: f64,
    pub mae: f64,
    pub mape_percent: f64,
    pub rmse_in_sample: f64,
    pub test_periods: Vec<usize>,
    pub rmse_per_test_period: Vec<f64>,
    pub rmse_test_overall: f64,
}

/// One-step in-sample residuals of the expressed opinions over the training
/// transitions, one vector per transition.
///
/// Single-layer families predict from observed values. Two-layer families
/// start the step from the fitted latent state at `t` and the observed
/// expressed history, so the fitted latent state at `t + 1` is not used.
pub fn in_sample_residuals(fit: &FitResult, panel: &SentimentPanel) -> Result<Vec<Vec<f64>>> {
    let t_est = fit.n_train_periods;
    let lag = fit.spec.lag();
    let p = &fit.params;
    if panel.n_blogs() != p.n_blogs() {
        return Err(Error::DimensionMismatch {
            expected: p.n_blogs(),
            found: panel.n_blogs(),
        });
    }
    if t_est <= lag + 1 || t_est > panel.n_periods() {
        return Err(Error::InvalidSplit(format!(
            "training window {t_est} does not fit the panel"
        )));
    }
    let w = p.w();
    let s = p.susceptibility();
    let z = p.innate();
    let mut out = Vec::with_capacity(t_est - 1 - lag);
    for t in lag..t_est - 1 {
        let now = panel.column(t);
        let pred = match fit.spec.family() {
            Family::Fdg => step_fdg(w, &now)?,
            Family::Fj => step_fj(w, &s, &z, &now)?,
            Family::Fdgm => step_fdgm(w, &s, &now, &panel.column(t - lag))?,
            Family::Epo | Family::Repo => {
                let x = p.x().expect("two-layer params carry X").column(t);
                let x_next = step_epo_private(w, &s, &z, &x, &now)?;
                let a = p.a().expect("two-layer params carry A");
                epo_expressed(
                    p.phi().expect("two-layer params carry Phi"),
                    a,
                    &x_next,
                    &panel.column(t - lag),
                )?
            }
        };
        let obs = panel.column(t + 1);
        out.push(obs.iter().zip(&pred).map(|(o, q)| o - q).collect());
    }
    Ok(out)
}

/// Goodness of fit on the training window and forecast error on
/// `test_periods` (1-based, all after the training window).
pub fn evaluate(fit: &FitResult, panel: &SentimentPanel, test_periods: &[usize]) -> Result<MetricReport> {
    let t_est = fit.n_train_periods;
    if let Some(&bad) = test_periods.iter().find(|&&p| p <= t_est || p > panel.n_periods()) {
        return Err(Error::InvalidSplit(format!(
            "test period {bad} outside {}..={}",
            t_est + 1,
            panel.n_periods()
        )));
    }
    let residuals = in_sample_residuals(fit, panel)?;
    let count = residuals.len() as f64;
    let mut mae = 0.0;
    let mut mape = 0.0;
    let mut mse = 0.0;
    for (i, r) in residuals.iter().enumerate() {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let obs = panel.column(fit.spec.lag() + i + 1);
        let obs_norm = obs.iter().map(|v| v * v).sum::<f64>().sqrt();
        mae += norm;
        mape += if obs_norm > 0.0 { norm / obs_norm } else { 0.0 };
        mse += norm * norm;
    }

    let horizon = test_periods.iter().copied().max().map_or(0, |p| p - t_est);
    let forecast = predict(fit, panel, horizon)?;
    let per_period = test_periods
        .iter()
        .map(|&p| rmse_period(&forecast.column(p - t_est - 1), &panel.column(p - 1)))
        .collect::<Result<Vec<f64>>>()?;
    let overall = if per_period.is_empty() {
        0.0
    } else {
        (per_period.iter().map(|v| v * v).sum::<f64>() / per_period.len() as f64).sqrt()
    };

    Ok(MetricReport {
        sum_of_residuals: fit.objective,
        mae: mae / count,
        mape_percent: 100.0 * mape / count,
        rmse_in_sample: (mse / count).sqrt(),
        test_periods: test_periods.to_vec(),
        rmse_per_test_period: per_period,
        rmse_test_overall: overall,
    })
}

/// Comparison table, one row per fitted model. All reports must share the
/// same test periods.
pub fn write_metric_table<W: Write>(mut out: W, rows: &[(&FitResult, &MetricReport)]) -> Result<()> {
    let periods = rows.first().map(|(_, r)| r.test_periods.clone()).unwrap_or_default();
    write!(out, "model,lag,sum_of_residuals,mae,mape,rmse_in")?;
    for p in &periods {
        write!(out, ",rmse_t{p}")?;
    }
    writeln!(out, ",rmse_out")?;
    for (fit, r) in rows {
        if r.test_periods != periods {
            return Err(Error::InvalidSplit("reports use different test periods".into()));
        }
        let mut line = format!(
            "{},{},{},{},{},{}",
            fit.spec.family(),
            fit.spec.lag(),
            format_sig(r.sum_of_residuals, 6),
            format_sig(r.mae, 6),
            format_sig(r.mape_percent, 6),
            format_sig(r.rmse_in_sample, 6)
        );
        for v in &r.rmse_per_test_period {
            line.push(',');
            line.push_str(&format_sig(*v, 6));
        }
        writeln!(out, "{line},{}", format_sig(r.rmse_test_overall, 6))?;
    }
    Ok(())
}

/// Square matrix as a labelled grid; entries below the export threshold are
/// written as 0.
pub fn write_heatmap_csv<W: Write>(mut out: W, m: &Matrix, blog_ids: &[String]) -> Result<()> {
    if m.rows() != blog_ids.len() || m.cols() != blog_ids.len() {
        return Err(Error::DimensionMismatch {
            expected: blog_ids.len(),
            found: m.rows(),
        });
    }
    writeln!(out, "blog_id,{}", blog_ids.join(","))?;
    for (b, id) in blog_ids.iter().enumerate() {
        let cells: Vec<String> = m.row(b).iter().map(|v| format_sig(export_value(*v), 6)).collect();
        writeln!(out, "{id},{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_panel() -> SentimentPanel {
        SentimentPanel::from_matrix(Matrix::filled(2, 3, 0.4)).unwrap()
    }

    #[test]
    fn index_hand_check() {
        let p = SentimentPanel::from_matrix(Matrix::from_rows(&[vec![0.2, 0.9], vec![0.6, 0.4]]).unwrap()).unwrap();
        // Range at t = 1 is [0.2, 0.6].
        assert!((range_violation_index(&p, 1, 2, 0).unwrap() - 1.75).abs() < 1e-12);
        assert!((range_violation_index(&p, 2, 2, 0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn index_bounds() {
        let p = constant_panel();
        assert_eq!(
            range_violation_index(&p, 1, 2, 0),
            Err(Error::DegenerateRange { period: 2 })
        );
        assert!(matches!(
            range_violation_index(&p, 3, 2, 0),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(
            range_violation_index(&p, 1, 1, 0),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(
            range_violation_index(&p, 1, 2, 1),
            Err(Error::IndexOutOfRange(_))
        ));
        assert_eq!(violation_summary(&p, 0, 0.1), vec![0, 0]);
        assert!(violation_table(&p, 0).is_err());
    }

    #[test]
    fn rmse_period_is_unnormalised() {
        assert_eq!(rmse_period(&[0.0, 0.0], &[0.3, 0.4]).unwrap(), 0.5);
        assert_eq!(rmse_period(&[0.1], &[0.1]).unwrap(), 0.0);
        assert!(rmse_period(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn heatmap_zeroes_small_entries() {
        let m = Matrix::from_rows(&[vec![0.999995, 5e-6], vec![0.5, 0.5]]).unwrap();
        let mut buf = Vec::new();
        write_heatmap_csv(&mut buf, &m, &["a".into(), "b".into()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "blog_id,a,b\na,0.999995,0\nb,0.5,0.5\n"
        );
    }
}
