//! Fitted-model JSON.
//!
//! Matrices are arrays of rows; parameters inactive for the family are
//! `null`. `W` is always written (derived from `A` and `D` for two-layer
//! models) and checked against them on reading.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::panel::{Family, FitResult, ModelSpec, ParamParts, ParamSet, SolverTrace};

#[derive(Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ModelFile {
    family: Family,
    lag: usize,
    t_est: usize,
    objective: f64,
    W: Option<Vec<Vec<f64>>>,
    A: Option<Vec<Vec<f64>>>,
    D: Option<Vec<f64>>,
    S: Option<Vec<f64>>,
    Phi: Option<Vec<f64>>,
    z: Option<Vec<f64>>,
    X: Option<Vec<Vec<f64>>>,
    seed: u64,
    n_starts: usize,
    converged: bool,
    #[serde(default)]
    solver_trace: Option<Vec<(usize, f64)>>,
}

fn matrix(name: &'static str, rows: Vec<Vec<f64>>) -> Result<Matrix> {
    Matrix::from_rows(&rows).ok_or_else(|| Error::InvalidParameter {
        name,
        reason: "rows of unequal length".into(),
    })
}

pub fn write_fit<W: Write>(mut out: W, fit: &FitResult) -> Result<()> {
    let p = &fit.params;
    let file = ModelFile {
        family: fit.spec.family(),
        lag: fit.spec.lag(),
        t_est: fit.n_train_periods,
        objective: fit.objective,
        W: Some(p.w().to_rows()),
        A: p.a().map(Matrix::to_rows),
        D: p.d().map(<[f64]>::to_vec),
        S: p.s().map(<[f64]>::to_vec),
        Phi: p.phi().map(<[f64]>::to_vec),
        z: p.z().map(<[f64]>::to_vec),
        X: p.x().map(Matrix::to_rows),
        seed: fit.seed,
        n_starts: fit.n_starts,
        converged: fit.solver_trace.converged,
        solver_trace: Some(fit.solver_trace.points.clone()),
    };
    serde_json::to_writer_pretty(&mut out, &file).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn read_fit<R: Read>(reader: R) -> Result<FitResult> {
    let file: ModelFile = serde_json::from_reader(reader).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let spec = ModelSpec::new(file.family, file.lag)?;
    let parts = ParamParts {
        w: file.W.map(|w| matrix("W", w)).transpose()?,
        a: file.A.map(|a| matrix("A", a)).transpose()?,
        d: file.D,
        s: file.S,
        phi: file.Phi,
        z: file.z,
        x: file.X.map(|x| matrix("X", x)).transpose()?,
    };
    let params = ParamSet::new(file.family, parts)?;
    Ok(FitResult {
        spec,
        params,
        objective: file.objective,
        n_train_periods: file.t_est,
        solver_trace: SolverTrace {
            points: file.solver_trace.unwrap_or_default(),
            converged: file.converged,
        },
        seed: file.seed,
        n_starts: file.n_starts,
    })
}
