use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use foamfit::dataproc::csv::{load_dataset, parse_geometry, parse_recording, write_curve_csv};
use foamfit::dataproc::{cycle_average, energy_return, linear_stiffness, reduce, AveragingPolicy};
use foamfit::discovery::{
    export_report, parse_model, parse_report_csv, predict, r_squared, report_csv, run_grid,
    select_model, FitReport, ReportRow,
};
use foamfit::kinematics::{DeformationState, Direction, LoadingMode, SHEAR_PRESTRETCH};
use foamfit::stress::term_contributions;
use foamfit::training::{fit, sparsity_sweep, trace_csv, Architecture, TrainConfig};
use foamfit::{FoamDataset, ModelSpec};

#[derive(Parser)]
#[command(
    name = "foamfit",
    version,
    about = "Sparse hyperelastic model discovery for elastomeric foams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a raw recording to a stretch-stress curve
    Ingest(IngestArgs),
    /// Fit one architecture at one regularisation strength
    Fit(FitArgs),
    /// Evaluate a model document against a dataset
    Eval(EvalArgs),
    /// Fit a list of regularisation strengths from one warm start
    Sweep(SweepArgs),
    /// Run the three architectures at alpha 0 and 1
    Grid(GridArgs),
    /// Merge report CSVs into one table
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Arch {
    Si,
    SiMi,
    SiPs,
    All,
}

impl From<Arch> for Architecture {
    fn from(a: Arch) -> Self {
        match a {
            Arch::Si => Architecture::Si,
            Arch::SiMi => Architecture::SiMi,
            Arch::SiPs => Architecture::SiPs,
            Arch::All => Architecture::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Tension,
    Compression,
    Shear,
}

impl From<Mode> for LoadingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Tension => LoadingMode::UniaxialTension,
            Mode::Compression => LoadingMode::UniaxialCompression,
            Mode::Shear => LoadingMode::SimpleShear,
        }
    }
}

#[derive(Args)]
struct Training {
    /// Seed for weight initialisation
    #[arg(long, env = "FOAMFIT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 15_000)]
    epochs: usize,
    /// Epochs of the unregularised first stage
    #[arg(long, default_value_t = 5_000)]
    warm_epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    /// Axial stretch applied before shearing
    #[arg(long, default_value_t = SHEAR_PRESTRETCH)]
    shear_prestretch: f64,
}

impl Training {
    fn config(&self, architecture: Architecture, alpha: f64) -> TrainConfig {
        // stage 1 cannot be longer than the run
        let warm_epochs = self.warm_epochs.min(self.epochs);
        TrainConfig {
            architecture,
            alpha,
            epochs: self.epochs,
            warm_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            shear_prestretch: self.shear_prestretch,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// CSV with header t,signal,displacement
    #[arg(long)]
    recording: PathBuf,
    /// key=value file with A, L, H or R (mm, mm²)
    #[arg(long)]
    geometry: PathBuf,
    /// Write the pointwise reduced trace instead of the cycle average
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// leap, turbo, a dataset directory or a dataset manifest
    #[arg(long)]
    dataset: String,
    #[arg(long, value_enum)]
    arch: Arch,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[command(flatten)]
    training: Training,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value_t = SHEAR_PRESTRETCH)]
    shear_prestretch: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: String,
    #[arg(long, value_enum)]
    arch: Arch,
    /// Comma-separated, ascending
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    #[command(flatten)]
    training: Training,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    dataset: String,
    #[command(flatten)]
    training: Training,
    /// Allowed drop in min-mode R² against the alpha = 0 baseline
    #[arg(long, default_value_t = 0.02)]
    margin: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Report CSVs to merge
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn dataset(source: &str) -> Result<FoamDataset> {
    load_dataset(source).with_context(|| format!("loading dataset '{source}'"))
}

fn alpha_tag(a: f64) -> String {
    format!("{a}").replace('.', "p")
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let mode = LoadingMode::from(args.mode);
    let geometry = parse_geometry(&read(&args.geometry)?, mode)?;
    let rec = parse_recording(&read(&args.recording)?, geometry)?;
    let trace = reduce(&rec)?;
    if args.raw {
        let mut s = String::from("x,y\n");
        for (x, y) in trace.x.iter().zip(&trace.y) {
            s.push_str(&format!("{x},{y}\n"));
        }
        return write(&args.out, &s);
    }
    let segments = trace.segments()?;
    let curve = if segments.len() == 1 {
        segments[0].clone()
    } else {
        cycle_average(&segments, AveragingPolicy::for_mode(mode))?
    };
    write(&args.out, &write_curve_csv(&curve))?;
    if let Ok(k) = linear_stiffness(&curve, mode, 0.10) {
        println!("linear stiffness (strain <= 0.10): {k} kPa");
    }
    if segments.len() >= 2 {
        if let Ok(eta) = energy_return(&segments[0], &segments[1]) {
            println!("energy return, first cycle: {eta}");
        }
    }
    println!("{} points written to {}", curve.len(), args.out.display());
    Ok(())
}

fn predictions_csv(model: &ModelSpec, data: &FoamDataset, prestretch: f64) -> Result<String> {
    let p = predict(model, data, prestretch)?;
    let ids: Vec<_> = model.terms.iter().map(|t| t.id).collect();
    let mut s = String::from("mode,x,observed,predicted,p22");
    for id in &ids {
        s.push_str(&format!(",term_{id}"));
    }
    s.push('\n');
    for mode in LoadingMode::ALL {
        let obs = data.curve(mode);
        let pred = p.curve(mode);
        let p22 = match mode {
            LoadingMode::UniaxialTension => Some(&p.tension_p22),
            LoadingMode::UniaxialCompression => Some(&p.compression_p22),
            LoadingMode::SimpleShear => None,
        };
        for i in 0..obs.len() {
            let x = obs.x[i];
            let (state, dir) = if mode.is_uniaxial() {
                (DeformationState::uniaxial(x)?, Direction::Lambda)
            } else {
                (DeformationState::shear(x, prestretch)?, Direction::Gamma)
            };
            s.push_str(&format!(
                "{},{x},{},{},{}",
                mode.tag(),
                obs.y[i],
                pred.y[i],
                p22.map_or(0.0, |v| v[i])
            ));
            for (_, c) in term_contributions(model, &state, dir)? {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
    }
    Ok(s)
}

fn write_fit(
    out: &Path,
    stem: &str,
    report: &FitReport,
    data: &FoamDataset,
    prestretch: f64,
) -> Result<()> {
    write(
        &out.join(format!("{stem}.json")),
        &export_report(report).to_json(),
    )?;
    write(
        &out.join(format!("{stem}_loss.csv")),
        &trace_csv(&report.loss_trace),
    )?;
    write(
        &out.join(format!("{stem}_predictions.csv")),
        &predictions_csv(&report.model, data, prestretch)?,
    )
}

fn summary(r: &FitReport) -> String {
    format!(
        "{:<6} alpha={:<4} terms={:<2} R2 ten={:.3} com={:.3} shr={:.3}",
        r.architecture.label(),
        r.alpha,
        r.nonzero_terms,
        r.r2.ten,
        r.r2.com,
        r.r2.shr
    )
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let data = dataset(&args.dataset)?;
    let cfg = args.training.config(args.arch.into(), args.alpha);
    let report = fit(&cfg, &data)?;
    write(
        &args.out.join("model.json"),
        &export_report(&report).to_json(),
    )?;
    write(
        &args.out.join("report.csv"),
        &report_csv(&[ReportRow::from(&report)]),
    )?;
    write(&args.out.join("loss.csv"), &trace_csv(&report.loss_trace))?;
    write(
        &args.out.join("predictions.csv"),
        &predictions_csv(&report.model, &data, cfg.shear_prestretch)?,
    )?;
    println!("{}", summary(&report));
    println!("{}", report.model.render());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let model = parse_model(&read(&args.model)?)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let data = dataset(&args.dataset)?;
    let p = predict(&model, &data, args.shear_prestretch)?;
    let mut r2 = String::from("mode,r2\n");
    let mut residuals = String::from("mode,x,observed,predicted,residual\n");
    for mode in LoadingMode::ALL {
        let (obs, pred) = (data.curve(mode), p.curve(mode));
        let r = r_squared(pred, obs)?;
        r2.push_str(&format!("{},{r}\n", mode.tag()));
        println!("R2 {} = {r:.4}", mode.tag());
        for i in 0..obs.len() {
            residuals.push_str(&format!(
                "{},{},{},{},{}\n",
                mode.tag(),
                obs.x[i],
                obs.y[i],
                pred.y[i],
                pred.y[i] - obs.y[i]
            ));
        }
    }
    write(&args.out.join("r2.csv"), &r2)?;
    write(&args.out.join("residuals.csv"), &residuals)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    if args.alphas.windows(2).any(|w| w[1] < w[0]) {
        bail!("--alphas must be ascending");
    }
    let data = dataset(&args.dataset)?;
    let cfg = args.training.config(args.arch.into(), args.alphas[0]);
    let reports = sparsity_sweep(&cfg, &data, &args.alphas)?;
    let mut rows = Vec::new();
    for r in &reports {
        write_fit(
            &args.out,
            &format!("model_alpha{}", alpha_tag(r.alpha)),
            r,
            &data,
            cfg.shear_prestretch,
        )?;
        rows.push(ReportRow::from(r));
        println!("{}", summary(r));
    }
    write(&args.out.join("report.csv"), &report_csv(&rows))
}

fn cmd_grid(args: &GridArgs) -> Result<()> {
    let data = dataset(&args.dataset)?;
    let cfg = args.training.config(Architecture::SiMi, 0.0);
    let reports = run_grid(&data, &cfg)?;
    let mut rows = Vec::new();
    for r in &reports {
        let stem = format!(
            "model_{}_alpha{}",
            r.architecture.flag(),
            alpha_tag(r.alpha)
        );
        write_fit(&args.out, &stem, r, &data, cfg.shear_prestretch)?;
        rows.push(ReportRow::from(r));
        println!("{}", summary(r));
    }
    write(&args.out.join("report.csv"), &report_csv(&rows))?;
    let sel = select_model(&reports, args.margin)?;
    if sel.fallback {
        eprintln!("warning: no regularised model stayed within the margin; reporting the baseline");
    }
    println!("selected: {}", summary(&sel.report));
    println!("{}", sel.report.model.render());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for p in &args.inputs {
        rows.extend(
            parse_report_csv(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        );
    }
    write(&args.out, &report_csv(&rows))?;
    println!("{} rows written to {}", rows.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
