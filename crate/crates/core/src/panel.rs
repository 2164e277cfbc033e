//! Shared domain types: sentiment panels, model specifications, parameter
//! bundles and fit results.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tolerance on row sums and box bounds accepted at construction.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Entries of influence matrices below this are exported as exact zeros.
pub const EXPORT_ZERO_THRESHOLD: f64 = 1e-5;

/// Observed collective sentiments, one row per blog and one column per period.
#[derive(Clone, Debug, PartialEq)]
pub struct SentimentPanel {
    values: Matrix,
    blog_ids: Vec<String>,
    period_labels: Vec<String>,
}

/// Checks dimensions, range and uniqueness, returning a dense panel.
pub fn validate_panel(values: Matrix, blog_ids: Vec<String>, period_labels: Vec<String>) -> Result<SentimentPanel> {
    if values.rows() == 0 {
        return Err(Error::NoBlogs);
    }
    if values.cols() < 2 {
        return Err(Error::TooFewPeriods(values.cols()));
    }
    if blog_ids.len() != values.rows() {
        return Err(Error::DimensionMismatch {
            expected: values.rows(),
            found: blog_ids.len(),
        });
    }
    if period_labels.len() != values.cols() {
        return Err(Error::DimensionMismatch {
            expected: values.cols(),
            found: period_labels.len(),
        });
    }
    for b in 0..values.rows() {
        for t in 0..values.cols() {
            let v = values[(b, t)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRangeValue {
                    blog: b + 1,
                    period: t + 1,
                    value: v,
                });
            }
        }
    }
    ensure_unique(&blog_ids)?;
    ensure_unique(&period_labels)?;
    Ok(SentimentPanel {
        values,
        blog_ids,
        period_labels,
    })
}

fn ensure_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

impl SentimentPanel {
    /// Panel with generated labels `blog1..blogB` and `p1..pT`.
    pub fn from_matrix(values: Matrix) -> Result<Self> {
        let blog_ids = (1..=values.rows()).map(|b| format!("blog{b}")).collect();
        let periods = (1..=values.cols()).map(|t| format!("p{t}")).collect();
        validate_panel(values, blog_ids, periods)
    }

    pub fn n_blogs(&self) -> usize {
        self.values.rows()
    }

    pub fn n_periods(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn blog_ids(&self) -> &[String] {
        &self.blog_ids
    }

    pub fn period_labels(&self) -> &[String] {
        &self.period_labels
    }

    /// Sentiment of blog `b` at period `t`, both zero-based.
    pub fn value(&self, b: usize, t: usize) -> f64 {
        self.values[(b, t)]
    }

    /// Cross-blog vector at zero-based period `t`.
    pub fn column(&self, t: usize) -> Vec<f64> {
        self.values.column(t)
    }

    /// Reads the panel CSV format: header `blog_id,p1,...,pT`, one row per blog.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        if header.is_empty() || header.get(0).map(str::trim) != Some("blog_id") {
            return Err(Error::Parse {
                line: 1,
                message: "expected header starting with `blog_id`".into(),
            });
        }
        let period_labels: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        let mut blog_ids = Vec::new();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if rec.len() != period_labels.len() + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", period_labels.len() + 1, rec.len()),
                });
            }
            blog_ids.push(rec[0].trim().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        message: format!("`{s}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let values = Matrix::from_rows(&rows).ok_or(Error::Parse {
            line: 1,
            message: "ragged rows".into(),
        })?;
        if rows.is_empty() {
            return Err(Error::NoBlogs);
        }
        validate_panel(values, blog_ids, period_labels)
    }

    /// Writes the panel CSV with six significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("blog_id");
        for label in &self.period_labels {
            header.push(',');
            header.push_str(label);
        }
        writeln!(out, "{header}")?;
        for (b, id) in self.blog_ids.iter().enumerate() {
            let mut line = id.clone();
            for v in self.values.row(b) {
                line.push(',');
                line.push_str(&format_sig(*v, 6));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Formats like C's `%.{digits}g`: fixed notation for moderate exponents,
/// trailing zeros stripped.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = strip_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    strip_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Model families under consideration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// French–DeGroot averaging.
    Fdg,
    /// Friedkin–Johnsen, anchored to innate opinions.
    Fj,
    /// French–DeGroot with a single lagged memory term.
    Fdgm,
    /// Expressed/private opinion model.
    Epo,
    /// EPO with all susceptibilities fixed at one.
    Repo,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Fdg, Family::Fj, Family::Fdgm, Family::Epo, Family::Repo];

    pub fn name(self) -> &'static str {
        match self {
            Family::Fdg => "fdg",
            Family::Fj => "fj",
            Family::Fdgm => "fdgm",
            Family::Epo => "epo",
            Family::Repo => "repo",
        }
    }

    /// Two-layer families with latent private opinions.
    pub fn is_two_layer(self) -> bool {
        matches!(self, Family::Epo | Family::Repo)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fdg" => Ok(Family::Fdg),
            "fj" => Ok(Family::Fj),
            "fdgm" => Ok(Family::Fdgm),
            "epo" => Ok(Family::Epo),
            "repo" => Ok(Family::Repo),
            other => Err(Error::InvalidSpec(format!("unknown model family `{other}`"))),
        }
    }
}

/// Family plus delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelSpec {
    family: Family,
    lag: usize,
}

impl ModelSpec {
    pub fn new(family: Family, lag: usize) -> Result<Self> {
        match family {
            Family::Fdg | Family::Fj if lag != 0 => Err(Error::InvalidSpec(format!(
                "{family} has no delay term; lag must be 0, got {lag}"
            ))),
            Family::Fdgm if lag == 0 => Err(Error::InvalidSpec("fdgm requires lag >= 1".into())),
            _ => Ok(Self { family, lag }),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn lag(&self) -> usize {
        self.lag
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (lag {})", self.family, self.lag)
    }
}

/// Names of the parameter blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamName {
    W,
    A,
    D,
    S,
    Phi,
    Z,
    X,
}

impl ParamName {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::W => "W",
            ParamName::A => "A",
            ParamName::D => "D",
            ParamName::S => "S",
            ParamName::Phi => "Phi",
            ParamName::Z => "z",
            ParamName::X => "X",
        }
    }
}

/// The free parameters of a family. For the two-layer families `W` is
/// derived from `A` and `D` and therefore not listed.
pub fn active_parameters(spec: ModelSpec) -> BTreeSet<ParamName> {
    use ParamName::*;
    let names: &[ParamName] = match spec.family() {
        Family::Fdg => &[W],
        Family::Fj => &[W, S, Z],
        Family::Fdgm => &[W, S],
        Family::Epo => &[A, D, S, Phi, Z, X],
        Family::Repo => &[A, D, Phi, X],
    };
    names.iter().copied().collect()
}

/// Raw parameter blocks before validation. Unset blocks are `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamParts {
    pub w: Option<Matrix>,
    pub a: Option<Matrix>,
    pub d: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub x: Option<Matrix>,
}

/// A validated parameter bundle for one model family.
///
/// Diagonal matrices (`D`, `S`, `Phi`) are stored as vectors. For the
/// two-layer families `W = diag(D) + (I - diag(D)) A` is materialised at
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    family: Family,
    w: Matrix,
    a: Option<Matrix>,
    d: Option<Vec<f64>>,
    s: Option<Vec<f64>>,
    phi: Option<Vec<f64>>,
    z: Option<Vec<f64>>,
    x: Option<Matrix>,
}

impl ParamSet {
    pub fn new(family: Family, parts: ParamParts) -> Result<Self> {
        Self::with_tolerance(family, parts, STOCHASTIC_TOL)
    }

    /// Validates with a custom slack on row sums and box bounds. Values
    /// within the slack are renormalised or clamped.
    pub fn with_tolerance(family: Family, parts: ParamParts, tol: f64) -> Result<Self> {
        let ParamParts { w, a, d, s, phi, z, x } = parts;
        let two_layer = family.is_two_layer();
        let needs = |name: ParamName| -> bool {
            match name {
                ParamName::W => !two_layer,
                ParamName::A | ParamName::D | ParamName::Phi | ParamName::X => two_layer,
                ParamName::S => !matches!(family, Family::Fdg | Family::Repo),
                ParamName::Z => matches!(family, Family::Fj | Family::Epo),
            }
        };
        check_presence("A", a.is_some(), needs(ParamName::A))?;
        check_presence("D", d.is_some(), needs(ParamName::D))?;
        check_presence("S", s.is_some(), needs(ParamName::S))?;
        check_presence("Phi", phi.is_some(), needs(ParamName::Phi))?;
        check_presence("z", z.is_some(), needs(ParamName::Z))?;
        check_presence("X", x.is_some(), needs(ParamName::X))?;
        if !two_layer && w.is_none() {
            return Err(Error::MissingParameter("W"));
        }

        let n = match (&w, &a) {
            (_, Some(a)) => a.rows(),
            (Some(w), None) => w.rows(),
            (None, None) => unreachable!("presence checked above"),
        };

        let s = s.map(|v| unit_box("S", v, n, tol)).transpose()?;
        let z = z.map(|v| unit_box("z", v, n, tol)).transpose()?;

        if !two_layer {
            let w = row_stochastic("W", w.expect("checked"), n, tol)?;
            return Ok(Self {
                family,
                w,
                a: None,
                d: None,
                s,
                phi: None,
                z,
                x: None,
            });
        }

        let a = a.expect("checked");
        for b in 0..n.min(a.cols()) {
            if a[(b, b)] != 0.0 {
                return Err(Error::InvalidParameter {
                    name: "A",
                    reason: format!("diagonal entry {} is {}, must be exactly 0", b + 1, a[(b, b)]),
                });
            }
        }
        let a = row_stochastic("A", a, n, tol)?;
        let d = unit_box("D", d.expect("checked"), n, tol)?;
        let phi = unit_box("Phi", phi.expect("checked"), n, tol)?;
        let x = x.expect("checked");
        if x.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.rows(),
            });
        }
        let mut x_clamped = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                x_clamped[(i, j)] = clamp_unit("X", x[(i, j)], tol)?;
            }
        }
        let derived = coupled_influence(&a, &d);
        if let Some(w) = w {
            if w.rows() != n || w.cols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.rows(),
                });
            }
            let gap = w.max_abs_diff(&derived);
            if gap > tol.max(STOCHASTIC_TOL) {
                return Err(Error::InvalidParameter {
                    name: "W",
                    reason: format!("differs from diag(D) + (I - diag(D))A by {gap:e}"),
                });
            }
        }
        Ok(Self {
            family,
            w: derived,
            a: Some(a),
            d: Some(d),
            s,
            phi: Some(phi),
            z,
            x: Some(x_clamped),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n_blogs(&self) -> usize {
        self.w.rows()
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn a(&self) -> Option<&Matrix> {
        self.a.as_ref()
    }

    pub fn d(&self) -> Option<&[f64]> {
        self.d.as_deref()
    }

    /// Stored susceptibilities; `None` for FDG and the reduced EPO.
    pub fn s(&self) -> Option<&[f64]> {
        self.s.as_deref()
    }

    /// Susceptibilities with the implicit all-ones vector filled in.
    pub fn susceptibility(&self) -> Vec<f64> {
        self.s.clone().unwrap_or_else(|| vec![1.0; self.n_blogs()])
    }

    pub fn phi(&self) -> Option<&[f64]> {
        self.phi.as_deref()
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    /// Innate opinions; zeros when the family has none (multiplied by `1 - s = 0`).
    pub fn innate(&self) -> Vec<f64> {
        self.z.clone().unwrap_or_else(|| vec![0.0; self.n_blogs()])
    }

    pub fn x(&self) -> Option<&Matrix> {
        self.x.as_ref()
    }

    pub fn into_parts(self) -> ParamParts {
        let two_layer = self.family.is_two_layer();
        ParamParts {
            w: (!two_layer).then_some(self.w),
            a: self.a,
            d: self.d,
            s: self.s,
            phi: self.phi,
            z: self.z,
            x: self.x,
        }
    }

    pub fn to_parts(&self) -> ParamParts {
        self.clone().into_parts()
    }
}

/// `diag(d) + (I - diag(d)) A`.
pub fn coupled_influence(a: &Matrix, d: &[f64]) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |b, k| {
        let off = (1.0 - d[b]) * a[(b, k)];
        if b == k {
            d[b] + off
        } else {
            off
        }
    })
}

/// Value as it appears in exported tables: entries below `1e-5` become 0.
pub fn export_value(v: f64) -> f64 {
    if v.abs() < EXPORT_ZERO_THRESHOLD {
        0.0
    } else {
        v
    }
}

fn check_presence(name: &'static str, present: bool, needed: bool) -> Result<()> {
    match (present, needed) {
        (true, false) => Err(Error::InactiveParameter(name)),
        (false, true) => Err(Error::MissingParameter(name)),
        _ => Ok(()),
    }
}

fn clamp_unit(name: &'static str, v: f64, tol: f64) -> Result<f64> {
    if !v.is_finite() || v < -tol || v > 1.0 + tol {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("entry {v} outside [0, 1]"),
        });
    }
    Ok(v.clamp(0.0, 1.0))
}

fn unit_box(name: &'static str, v: Vec<f64>, n: usize, tol: f64) -> Result<Vec<f64>> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    v.into_iter().map(|x| clamp_unit(name, x, tol)).collect()
}

fn row_stochastic(name: &'static str, mut m: Matrix, n: usize, tol: f64) -> Result<Matrix> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.cols(),
        });
    }
    for b in 0..n {
        let row = m.row_mut(b);
        for v in row.iter_mut() {
            if !v.is_finite() || *v < -tol {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("row {} has negative entry {v}", b + 1),
                });
            }
            *v = v.max(0.0);
        }
        let sum: f64 = row.iter().sum();
        // A few ulps of headroom so that decimal sums exactly at the
        // tolerance are not rejected by binary rounding.
        if (sum - 1.0).abs() > tol + 8.0 * f64::EPSILON * n as f64 {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("row {} sums to {sum}", b + 1),
            });
        }
        // Rows already within round-off stay untouched so that reloading a
        // stored parameter set reproduces it exactly.
        if (sum - 1.0).abs() > 2.0 * f64::EPSILON * n as f64 {
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
    }
    Ok(m)
}

/// Solver progress: objective after each outer iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub points: Vec<(usize, f64)>,
    /// `false` when the iteration budget ran out before the stopping rule fired.
    pub converged: bool,
}

impl SolverTrace {
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn iterations(&self) -> usize {
        self.points.last().map_or(0, |p| p.0)
    }
}

/// Output of an identification run.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: ParamSet,
    /// Sum of squared residual norms over the training transitions.
    pub objective: f64,
    /// Number of leading periods used for estimation.
    pub n_train_periods: usize,
    pub solver_trace: SolverTrace,
    pub seed: u64,
    pub n_starts: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize, prefix: &str) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn boundary_values_are_admitted() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let p = validate_panel(m, ids(1, "b"), ids(2, "p")).unwrap();
        assert_eq!(p.n_blogs(), 1);
        assert_eq!(p.n_periods(), 2);
    }

    #[test]
    fn out_of_range_rejected() {
        let m = Matrix::from_rows(&[vec![0.1, 0.2, 1.2], vec![0.3, 0.4, 0.5]]).unwrap();
        let err = validate_panel(m, ids(2, "b"), ids(3, "p")).unwrap_err();
        assert!(matches!(err, Error::OutOfRangeValue { blog: 1, period: 3, .. }));
    }

    #[test]
    fn duplicates_and_short_panels_rejected() {
        let m = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let err = validate_panel(m.clone(), vec!["a".into(), "a".into()], ids(2, "p")).unwrap_err();
        assert_eq!(err, Error::DuplicateId("a".into()));
        let short = Matrix::from_rows(&[vec![0.1]]).unwrap();
        assert_eq!(
            validate_panel(short, ids(1, "b"), ids(1, "p")).unwrap_err(),
            Error::TooFewPeriods(1)
        );
    }

    #[test]
    fn spec_lag_rules() {
        assert!(ModelSpec::new(Family::Fdg, 0).is_ok());
        assert!(ModelSpec::new(Family::Fj, 1).is_err());
        assert!(ModelSpec::new(Family::Fdgm, 0).is_err());
        assert!(ModelSpec::new(Family::Fdgm, 2).is_ok());
        assert!(ModelSpec::new(Family::Repo, 0).is_ok());
        assert!(ModelSpec::new(Family::Epo, 2).is_ok());
    }

    #[test]
    fn active_parameter_sets() {
        use ParamName::*;
        let set = |f, l| active_parameters(ModelSpec::new(f, l).unwrap());
        assert_eq!(set(Family::Fdg, 0), [W].into_iter().collect());
        assert_eq!(set(Family::Fj, 0), [W, S, Z].into_iter().collect());
        assert_eq!(set(Family::Fdgm, 2), [W, S].into_iter().collect());
        assert_eq!(set(Family::Epo, 0), [A, D, S, Phi, Z, X].into_iter().collect());
        assert_eq!(set(Family::Repo, 1), [A, D, Phi, X].into_iter().collect());
    }

    #[test]
    fn near_stochastic_rows_renormalised() {
        let w = Matrix::from_rows(&[vec![0.5, 0.5 + 5e-10], vec![0.0, 1.0]]).unwrap();
        let p = ParamSet::new(
            Family::Fdg,
            ParamParts {
                w: Some(w),
                ..Default::default()
            },
        )
        .unwrap();
        let sum: f64 = p.w().row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);

        let bad = Matrix::from_rows(&[vec![0.5, 0.6], vec![0.0, 1.0]]).unwrap();
        assert!(ParamSet::new(
            Family::Fdg,
            ParamParts {
                w: Some(bad),
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn inactive_fields_rejected() {
        let w = Matrix::identity(2);
        let err = ParamSet::new(
            Family::Fdg,
            ParamParts {
                w: Some(w),
                s: Some(vec![1.0, 1.0]),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert_eq!(err, Error::InactiveParameter("S"));
    }

    #[test]
    fn two_layer_coupling_and_zero_diagonal() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let parts = ParamParts {
            a: Some(a.clone()),
            d: Some(vec![0.25, 1.0]),
            phi: Some(vec![1.0, 0.5]),
            x: Some(Matrix::filled(2, 3, 0.5)),
            ..Default::default()
        };
        let p = ParamSet::new(Family::Repo, parts.clone()).unwrap();
        assert_eq!(p.w().row(0), &[0.25, 0.75]);
        assert_eq!(p.w().row(1), &[0.0, 1.0]);
        assert_eq!(p.susceptibility(), vec![1.0, 1.0]);

        let mut bad = parts;
        let mut a_bad = a;
        a_bad[(0, 0)] = 0.1;
        a_bad[(0, 1)] = 0.9;
        bad.a = Some(a_bad);
        assert!(ParamSet::new(Family::Repo, bad).is_err());
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.8197230083, 6), "0.819723");
        assert_eq!(format_sig(0.0872617552, 6), "0.0872618");
        assert_eq!(format_sig(-0.110746092, 6), "-0.110746");
        assert_eq!(format_sig(1.929561, 6), "1.92956");
        assert_eq!(format_sig(0.5, 6), "0.5");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(1.5e-7, 6), "1.5e-07");
    }

    #[test]
    fn panel_csv_round_trip() {
        let m = Matrix::from_rows(&[vec![0.1, 0.25, 0.5], vec![0.75, 1.0, 0.0]]).unwrap();
        let p = SentimentPanel::from_matrix(m).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("blog_id,p1,p2,p3\n"));
        let back = SentimentPanel::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }
}
