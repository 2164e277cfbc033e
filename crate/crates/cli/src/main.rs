//! `opinionfit` command-line interface.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use opinionfit::aggregate::{build_panel, cell_counts, read_records_csv};
use opinionfit::diagnose::{
    evaluate, rmse_period, violation_table, write_heatmap_csv, write_metric_table, write_violation_csv,
};
use opinionfit::estimate::{fit, SolverConfig};
use opinionfit::io::{read_fit, write_fit};
use opinionfit::models::{simulate, write_trajectory_csv, SimState};
use opinionfit::panel::format_sig;
use opinionfit::{bundled, Error, Family, FitResult, ModelSpec, SentimentPanel};

#[derive(Parser)]
#[command(
    name = "opinionfit",
    version,
    about = "Fit opinion-dynamics models to blog sentiment panels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate scored comment records into a sentiment panel.
    Aggregate {
        records_csv: PathBuf,
        out_panel_csv: PathBuf,
    },
    /// Fit a model family to a panel and write the fitted-model JSON.
    Fit(FitArgs),
    /// Forecast expressed opinions after the training window.
    Predict {
        model_json: PathBuf,
        /// Panel CSV, or `bundled`.
        panel: String,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Range-violation indices for delays 0..=tau_max.
    Diagnose {
        /// Panel CSV, or `bundled`.
        panel: String,
        #[arg(long, default_value_t = 0)]
        tau_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterate a fitted model from a panel prefix.
    Simulate {
        params_json: PathBuf,
        /// Panel CSV, or `bundled`; supplies the initial history.
        panel: String,
        /// Number of leading panel periods used as history (default: the model's t_est).
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare fitted models in a directory.
    Eval {
        /// Panel CSV, or `bundled`.
        panel: String,
        models_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct FitArgs {
    /// Panel CSV, or `bundled`.
    panel: String,
    /// One of fdg, fj, fdgm, epo, repo.
    model: String,
    #[arg(long, default_value_t = 0)]
    lag: usize,
    /// Training periods (default: all but the last two).
    #[arg(long)]
    t_est: Option<usize>,
    #[arg(long, default_value_t = 16)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::MissingCell { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("OPINIONFIT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow!("OPINIONFIT_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("OPINIONFIT_THREADS must be a positive integer, got `{v}`");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Aggregate {
            records_csv,
            out_panel_csv,
        } => cmd_aggregate(&records_csv, &out_panel_csv),
        Command::Fit(args) => cmd_fit(args),
        Command::Predict {
            model_json,
            panel,
            horizon,
            out,
        } => cmd_predict(&model_json, &panel, horizon, &out),
        Command::Diagnose { panel, tau_max, out } => cmd_diagnose(&panel, tau_max, &out),
        Command::Simulate {
            params_json,
            panel,
            start,
            horizon,
            out,
        } => cmd_simulate(&params_json, &panel, start, horizon, &out),
        Command::Eval { panel, models_dir, out } => cmd_eval(&panel, &models_dir, &out),
    }
}

fn load_panel(source: &str) -> anyhow::Result<SentimentPanel> {
    if source == "bundled" {
        return Ok(bundled::panel());
    }
    let file = File::open(source).with_context(|| format!("cannot open panel `{source}`"))?;
    SentimentPanel::read_csv(BufReader::new(file)).with_context(|| format!("cannot read panel `{source}`"))
}

fn load_fit(path: &Path) -> anyhow::Result<FitResult> {
    let file = File::open(path).with_context(|| format!("cannot open model `{}`", path.display()))?;
    read_fit(BufReader::new(file)).with_context(|| format!("cannot read model `{}`", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create `{}`", path.display()))?;
    Ok(BufWriter::new(file))
}

fn cmd_aggregate(records_csv: &Path, out: &Path) -> anyhow::Result<()> {
    let file = File::open(records_csv).with_context(|| format!("cannot open `{}`", records_csv.display()))?;
    let records = read_records_csv(BufReader::new(file))?;
    let counts = cell_counts(&records);
    let n_blogs = counts
        .keys()
        .map(|(b, _)| b)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let n_periods = records.iter().map(|r| r.period).max().unwrap_or(0);
    let panel = build_panel(&records, n_blogs, n_periods)?;
    let mut w = create(out)?;
    panel.write_csv(&mut w)?;
    w.flush()?;
    println!("B = {}, T = {}", panel.n_blogs(), panel.n_periods());
    println!("blog_id,t,records");
    for id in panel.blog_ids() {
        for t in 1..=panel.n_periods() {
            println!("{id},{t},{}", counts.get(&(id.clone(), t)).copied().unwrap_or(0));
        }
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> anyhow::Result<()> {
    let family: Family = args.model.parse()?;
    let spec = ModelSpec::new(family, args.lag)?;
    let panel = load_panel(&args.panel)?;
    let t_est = match args.t_est {
        Some(t) => t,
        None => panel
            .n_periods()
            .checked_sub(2)
            .ok_or_else(|| Error::InvalidSplit("panel too short for the default split".into()))?,
    };
    let config = SolverConfig {
        n_starts: args.starts,
        seed: args.seed,
        max_iterations: args.max_iter,
        rel_tol: args.rel_tol,
        ..SolverConfig::default()
    };
    let result = fit(spec, &panel, t_est, &config)?;
    let mut w = create(&args.out)?;
    write_fit(&mut w, &result)?;
    w.flush()?;
    println!("model {spec}, t_est {t_est}");
    println!("objective {}", format_sig(result.objective, 6));
    println!("iterations {}", result.solver_trace.iterations());
    if !result.solver_trace.converged {
        println!("warning: iteration budget exhausted before convergence");
    }
    Ok(())
}

fn cmd_predict(model_json: &Path, panel: &str, horizon: usize, out: &Path) -> anyhow::Result<()> {
    let fit = load_fit(model_json)?;
    let panel = load_panel(panel)?;
    let forecast = opinionfit::models::predict(&fit, &panel, horizon)?;
    let mut w = create(out)?;
    writeln!(w, "blog_id,t,predicted")?;
    for (b, id) in panel.blog_ids().iter().enumerate() {
        for h in 0..horizon {
            writeln!(
                w,
                "{id},{},{}",
                fit.n_train_periods + h + 1,
                format_sig(forecast[(b, h)], 6)
            )?;
        }
    }
    w.flush()?;
    for h in 0..horizon {
        let t = fit.n_train_periods + h + 1;
        if t <= panel.n_periods() {
            let rmse = rmse_period(&forecast.column(h), &panel.column(t - 1))?;
            println!("rmse t{t} {}", format_sig(rmse, 6));
        }
    }
    Ok(())
}

fn cmd_diagnose(panel: &str, tau_max: usize, out: &Path) -> anyhow::Result<()> {
    let panel = load_panel(panel)?;
    let points = violation_table(&panel, tau_max)?;
    let mut w = create(out)?;
    write_violation_csv(&mut w, &panel, &points)?;
    w.flush()?;
    println!("{} indices written", points.len());
    Ok(())
}

fn cmd_simulate(
    params_json: &Path,
    panel: &str,
    start: Option<usize>,
    horizon: usize,
    out: &Path,
) -> anyhow::Result<()> {
    let fit = load_fit(params_json)?;
    let panel = load_panel(panel)?;
    let start = start.unwrap_or(fit.n_train_periods);
    if start == 0 || start > panel.n_periods() {
        return Err(Error::InvalidSplit(format!("start {start} outside 1..={}", panel.n_periods())).into());
    }
    let history: Vec<Vec<f64>> = (0..start).map(|t| panel.column(t)).collect();
    let init = if fit.spec.family().is_two_layer() {
        let x = match fit.params.x() {
            Some(x) if x.cols() >= start => x.column(start - 1),
            _ => panel.column(start - 1),
        };
        SimState::two_layer(x, history)
    } else {
        SimState::observed(history)
    };
    let steps = simulate(fit.spec, &fit.params, &init, horizon)?;
    let mut w = create(out)?;
    write_trajectory_csv(&mut w, &steps, panel.blog_ids(), start + 1)?;
    w.flush()?;
    println!("{} periods simulated from period {start}", steps.len());
    Ok(())
}

fn cmd_eval(panel: &str, models_dir: &Path, out: &Path) -> anyhow::Result<()> {
    let panel = load_panel(panel)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(models_dir)
        .with_context(|| format!("cannot read directory `{}`", models_dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    if paths.is_empty() {
        bail!("no fitted-model JSON files in `{}`", models_dir.display());
    }
    let mut fits = Vec::with_capacity(paths.len());
    for path in &paths {
        fits.push(load_fit(path)?);
    }
    fits.sort_by_key(|f| f.spec);

    let mut reports = Vec::with_capacity(fits.len());
    for f in &fits {
        let test: Vec<usize> = (f.n_train_periods + 1..=panel.n_periods()).collect();
        reports.push(evaluate(f, &panel, &test).with_context(|| format!("cannot evaluate {}", f.spec))?);
    }
    let rows: Vec<_> = fits.iter().zip(&reports).collect();
    let mut w = create(out)?;
    write_metric_table(&mut w, &rows)?;
    w.flush()?;

    let dir = out.parent().unwrap_or(Path::new(""));
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("eval");
    for f in &fits {
        let base = format!("{stem}_{}_lag{}", f.spec.family(), f.spec.lag());
        let mut w = create(&dir.join(format!("{base}_W.csv")))?;
        write_heatmap_csv(&mut w, f.params.w(), panel.blog_ids())?;
        w.flush()?;
        if let Some(a) = f.params.a() {
            let mut w = create(&dir.join(format!("{base}_A.csv")))?;
            write_heatmap_csv(&mut w, a, panel.blog_ids())?;
            w.flush()?;
        }
    }
    println!("{} models evaluated", fits.len());
    Ok(())
}
