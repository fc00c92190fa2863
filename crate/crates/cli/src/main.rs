mod svg;

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_core::{OsRng, TryRngCore};
use serde::Serialize;
use serde_json::{json, Value};

use vertexsim::dilation::{dilate, terashima_decomposition};
use vertexsim::experiments::{
    build_t_plan, convergence_rows, d_test_plan, max_abs_difference, power_iterate_psi0, estimate_scatter, oracle_power, random_positive_input,
    report_csv, simulated_t_action, uniform_input, ActionOptions, Backend, EstimatorOptions, ExperimentError,
    Mode, PowerOptions, Psi0Source, ReportRow, TransferExperiment,
};
use vertexsim::model::{generate_model, r_matrix, reference_model, ModelFile, VertexModel};
use vertexsim::simulator::export_circuit_text;
use vertexsim::transfer::{spectral_summary, vector_to_csv, EigenBackend, SpectralOptions, DENSE_CAP_QUBITS};
use vertexsim::ErrorClass;

use svg::{Chart, Series, Style};

#[derive(Parser)]
#[command(name = "vertexsim", version, about = "Vertex-model transfer matrices and their post-selected circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a model file.
    GenModel {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Spectrum of the dense transfer matrix.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = SpectrumBackend::Power)]
        backend: SpectrumBackend,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Apply the transfer circuit M times and compare with the dense result.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, value_enum, default_value_t = CliMode::Deep)]
        mode: CliMode,
        #[arg(long, value_enum, default_value_t = InputKind::Zero)]
        input: InputKind,
        #[command(flatten)]
        out: OutArgs,
    },
    /// λ₁ estimator over random positive inputs.
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Number of random inputs.
        #[arg(long, default_value_t = 100)]
        inputs: u64,
        /// Refeed steps used to resolve Ψ₀.
        #[arg(long, default_value_t = 6)]
        psi0_steps: usize,
        #[arg(long, value_enum, default_value_t = CliMode::Refeed)]
        mode: CliMode,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write a circuit in the text format.
    ExportCircuit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, value_enum, default_value_t = CircuitKind::T)]
        kind: CircuitKind,
        #[command(flatten)]
        out: OutArgs,
    },
    /// SVD factors, dilation and three-step decomposition as JSON.
    Inspect {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Power-iteration distance to Ψ₀ over grids of N and M.
    Convergence {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6")]
        m_list: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 1000)]
        floor: u64,
        #[arg(long, value_enum, default_value_t = CliMode::Refeed)]
        mode: CliMode,
        #[arg(long, value_enum, default_value_t = InputKind::Zero)]
        input: InputKind,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model JSON file.
    #[arg(long, alias = "energies-file", value_name = "FILE", conflicts_with_all = ["fixture", "c"])]
    model: Option<PathBuf>,
    /// The stored reference R matrix (β = 2).
    #[arg(long, conflicts_with = "c")]
    fixture: bool,
    /// Strength of the deterministic energy part.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Seeds the model and every random draw; drawn from the OS when absent.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 40_000)]
    shots: u64,
    /// Minimum meaningful shots per circuit run.
    #[arg(long, default_value_t = 1000)]
    floor: u64,
}

#[derive(Args, Clone)]
struct OutArgs {
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Csv, Format::Json, Format::Svg])]
    format: Vec<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliMode {
    Deep,
    Refeed,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpectrumBackend {
    Power,
    Dense,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputKind {
    /// |0…0⟩
    Zero,
    Uniform,
    /// Seeded uniform-random positive amplitudes.
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CircuitKind {
    T,
    DTest,
}

#[derive(Debug)]
enum CliError {
    Experiment(ExperimentError),
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Experiment(e) => write!(f, "{e}"),
            Self::Usage(m) | Self::Io(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn class(&self) -> ErrorClass {
        match self {
            Self::Experiment(e) => e.class(),
            Self::Usage(_) | Self::Io(_) => ErrorClass::Validation,
        }
    }
}

impl<E: Into<ExperimentError>> From<E> for CliError {
    fn from(e: E) -> Self {
        Self::Experiment(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

struct SeedInfo {
    seed: u64,
    from_entropy: bool,
}

impl SeedInfo {
    fn resolve(seed: Option<u64>) -> CliResult<Self> {
        match seed {
            Some(seed) => Ok(Self { seed, from_entropy: false }),
            None => {
                let seed = OsRng.try_next_u64().map_err(|e| CliError::Io(format!("cannot read OS entropy: {e}")))?;
                Ok(Self { seed, from_entropy: true })
            }
        }
    }

    fn json(&self) -> Value {
        json!({ "seed": self.seed, "seed_from_entropy": self.from_entropy })
    }
}

struct Loaded {
    model: VertexModel,
    source: String,
    seed: SeedInfo,
}

fn load_model(args: &ModelArgs) -> CliResult<Loaded> {
    let seed = SeedInfo::resolve(args.seed)?;
    let (model, source) = if let Some(path) = &args.model {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        (ModelFile::from_json(&text)?.into_model()?, format!("file {}", path.display()))
    } else if args.fixture {
        (reference_model(), "fixture".to_string())
    } else if let Some(c) = args.c {
        (generate_model(c, args.beta, seed.seed)?, format!("generated c={c} beta={}", args.beta))
    } else {
        return Err(CliError::Usage("choose a model with --model FILE, --fixture or --c".into()));
    };
    Ok(Loaded { model, source, seed })
}

struct Outputs {
    dir: PathBuf,
    formats: Vec<Format>,
}

impl Outputs {
    fn new(args: &OutArgs) -> CliResult<Self> {
        fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
        Ok(Self { dir: args.out.clone(), formats: args.format.clone() })
    }

    fn write(&self, name: &str, format: Option<Format>, content: &str) -> CliResult<()> {
        if let Some(f) = format {
            if !self.formats.contains(&f) {
                return Ok(());
            }
        }
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, Some(Format::Json), &pretty(value))
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn header(loaded: &Loaded) -> Value {
    let mut v = loaded.seed.json();
    v["model"] = json!(loaded.source);
    v
}

fn backend(mode: CliMode, shots: u64, seed: u64) -> Backend {
    match mode {
        CliMode::Exact => Backend::Exact,
        CliMode::Deep | CliMode::Refeed => Backend::Shots { shots, seed },
    }
}

fn make_input(kind: InputKind, dim: usize, seed: u64) -> Vec<f64> {
    match kind {
        InputKind::Zero => {
            let mut v = vec![0.0; dim];
            v[0] = 1.0;
            v
        }
        InputKind::Uniform => uniform_input(dim),
        InputKind::Random => random_positive_input(dim, seed, 0),
    }
}

fn dense_available(n: usize) -> bool {
    n < DENSE_CAP_QUBITS
}

fn cmd_gen_model(model: &ModelArgs, out: &OutArgs) -> CliResult<Value> {
    let loaded = load_model(model)?;
    let outputs = Outputs::new(out)?;
    let text = loaded.model.to_file().to_json();
    outputs.write("model.json", None, &format!("{text}\n"))?;
    let mut summary = header(&loaded);
    summary["file"] = json!(outputs.dir.join("model.json"));
    Ok(summary)
}

fn cmd_spectrum(model: &ModelArgs, n: usize, which: SpectrumBackend, out: &OutArgs) -> CliResult<Value> {
    let loaded = load_model(model)?;
    let exp = TransferExperiment::new(loaded.model.clone(), n)?;
    let t = exp.operator()?;
    let opts = SpectralOptions {
        backend: match which {
            SpectrumBackend::Power => EigenBackend::PowerDeflation,
            SpectrumBackend::Dense => EigenBackend::Dense,
        },
        ..Default::default()
    };
    let s = spectral_summary(t, opts)?;
    let outputs = Outputs::new(out)?;
    let ev = t.eigenvalues();
    let nonzero = ev.iter().filter(|z| z.norm() > 1e-12 * s.lambda0).count();
    let mut csv = String::from("index,re,im,modulus\n");
    for (i, z) in ev.iter().enumerate() {
        csv.push_str(&format!("{i},{:e},{:e},{:e}\n", z.re, z.im, z.norm()));
    }
    outputs.write("eigenvalues.csv", Some(Format::Csv), &csv)?;
    outputs.write("psi0.csv", Some(Format::Csv), &vector_to_csv(&s.psi0_right))?;
    let chart = Chart {
        title: format!("Spectrum of T, N = {n}"),
        x_label: "eigenvalue index".into(),
        y_label: "|Λ| / Λ₀".into(),
        series: vec![Series {
            name: "|Λ|/Λ₀".into(),
            points: ev.iter().enumerate().map(|(i, z)| (i as f64, z.norm() / s.lambda0)).collect(),
            style: Style::Points,
        }],
        marks: vec![(s.ratio, format!("λ₁ = {:.4}", s.ratio))],
        log_y: false,
    };
    outputs.write("spectrum.svg", Some(Format::Svg), &chart.render())?;
    let mut summary = header(&loaded);
    summary["n"] = json!(n);
    summary["lambda0"] = json!(s.lambda0);
    summary["lambda1_abs"] = json!(s.lambda1_abs);
    summary["ratio"] = json!(s.ratio);
    summary["residual"] = json!(s.residual);
    summary["iterations"] = json!(s.iterations);
    summary["backend"] = json!(s.backend);
    summary["nonzero_eigenvalues"] = json!(nonzero);
    outputs.json("summary.json", &summary)?;
    Ok(summary)
}

fn cmd_simulate(
    model: &ModelArgs,
    run: &RunArgs,
    m: usize,
    mode: CliMode,
    input: InputKind,
    out: &OutArgs,
) -> CliResult<Value> {
    let loaded = load_model(model)?;
    let exp = TransferExperiment::new(loaded.model.clone(), run.n)?;
    let psi = make_input(input, exp.dim(), loaded.seed.seed);
    let sim_mode = if mode == CliMode::Refeed { Mode::Refeed } else { Mode::Deep };
    let result = simulated_t_action(
        &exp,
        m,
        &psi,
        sim_mode,
        backend(mode, run.shots, loaded.seed.seed),
        ActionOptions { meaningful_floor: run.floor },
    )?;
    let oracle = if dense_available(run.n) { Some(oracle_power(exp.operator()?, &psi, m)?) } else { None };

    let outputs = Outputs::new(out)?;
    if let Some(h) = &result.histogram {
        outputs.write("histogram.csv", Some(Format::Csv), &h.to_csv())?;
        outputs.write("histogram.json", Some(Format::Json), &(h.metadata_json() + "\n"))?;
    }
    let width = run.n + 1;
    let mut csv = String::from("index,basis,simulated,oracle\n");
    for (i, v) in result.vector.iter().enumerate() {
        let o = oracle.as_ref().map(|o| o[i].to_string()).unwrap_or_default();
        csv.push_str(&format!("{i},{i:0width$b},{v},{o}\n"));
    }
    outputs.write("comparison.csv", Some(Format::Csv), &csv)?;
    let mut series = vec![Series {
        name: "simulated".into(),
        points: result.vector.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
        style: Style::Points,
    }];
    if let Some(o) = &oracle {
        series.push(Series {
            name: "expected".into(),
            points: o.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
            style: Style::Line,
        });
    }
    let chart = Chart {
        title: format!("Normalized T^{m}|ψ⟩, N = {}", run.n),
        x_label: "basis index".into(),
        y_label: "amplitude".into(),
        series,
        marks: vec![],
        log_y: false,
    };
    outputs.write("comparison.svg", Some(Format::Svg), &chart.render())?;

    let mut summary = header(&loaded);
    summary["n"] = json!(run.n);
    summary["m"] = json!(m);
    summary["shots_used"] = json!(result.shots_used());
    summary["runs"] = json!(result.runs);
    summary["max_abs_gap"] = json!(oracle.as_ref().map(|o| max_abs_difference(o, &result.vector)));
    outputs.json("summary.json", &summary)?;
    Ok(summary)
}

fn cmd_estimate(
    model: &ModelArgs,
    run: &RunArgs,
    inputs: u64,
    psi0_steps: usize,
    mode: CliMode,
    out: &OutArgs,
) -> CliResult<Value> {
    let loaded = load_model(model)?;
    let exp = TransferExperiment::new(loaded.model.clone(), run.n)?;
    let opts = EstimatorOptions {
        psi0: Psi0Source::Steps(psi0_steps),
        action: ActionOptions { meaningful_floor: run.floor },
        ..Default::default()
    };
    let seed = loaded.seed.seed;
    let scatter = estimate_scatter(&exp, inputs, backend(mode, run.shots, seed), seed, opts)?;
    let lambda1 = if dense_available(run.n) { Some(exp.oracle()?.ratio) } else { None };

    let outputs = Outputs::new(out)?;
    let rows: Vec<ReportRow> = scatter.reports.iter().map(|r| ReportRow::from_estimate(run.n, r)).collect();
    outputs.write("estimates.csv", Some(Format::Csv), &report_csv(&rows))?;
    let chart = Chart {
        title: format!("λ₁ estimator, N = {}", run.n),
        x_label: "input".into(),
        y_label: "estimate".into(),
        series: vec![Series {
            name: "estimate".into(),
            points: scatter
                .reports
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.estimate.map(|e| (i as f64, e)))
                .collect(),
            style: Style::Points,
        }],
        marks: lambda1.map(|l| vec![(l, format!("λ₁ = {l:.4}"))]).unwrap_or_default(),
        log_y: false,
    };
    outputs.write("scatter.svg", Some(Format::Svg), &chart.render())?;

    let below = lambda1.map(|l| scatter.reports.iter().filter(|r| r.estimate.is_some_and(|e| e <= l)).count());
    let mut summary = header(&loaded);
    summary["n"] = json!(run.n);
    summary["oracle_lambda1"] = json!(lambda1);
    summary["evaluated"] = json!(scatter.reports.len());
    summary["excluded_inputs"] = json!(scatter.excluded);
    summary["degenerate"] = json!(scatter.reports.iter().filter(|r| r.degenerate).count());
    summary["at_or_below_oracle"] = json!(below);
    let mut full = summary.clone();
    full["reports"] = json!(scatter.reports);
    outputs.json("report.json", &full)?;
    Ok(summary)
}

fn cmd_export_circuit(model: &ModelArgs, n: usize, m: usize, kind: CircuitKind, out: &OutArgs) -> CliResult<Value> {
    let loaded = load_model(model)?;
    let exp = TransferExperiment::new(loaded.model.clone(), n)?;
    let plan = match kind {
        CircuitKind::T => build_t_plan(exp.factors(), n, m)?,
        CircuitKind::DTest => {
            let a = random_positive_input(4, loaded.seed.seed, 0);
            d_test_plan(exp.factors().d, &[a[0], a[1], a[2], a[3]])?
        }
    };
    let outputs = Outputs::new(out)?;
    outputs.write("circuit.txt", None, &export_circuit_text(&plan))?;
    let mut summary = header(&loaded);
    summary["qubits"] = json!(plan.n_qubits());
    summary["clbits"] = json!(plan.n_clbits());
    summary["unitaries"] = json!(plan.n_unitaries());
    summary["postselects"] = json!(plan.n_postselects());
    summary["measures"] = json!(plan.n_measures());
    Ok(summary)
}

fn cmd_inspect(model: &ModelArgs, out: &OutArgs) -> CliResult<Value> {
    let loaded = load_model(model)?;
    let r = r_matrix(&loaded.model);
    let exp = TransferExperiment::new(loaded.model.clone(), 1)?;
    let f = exp.factors();
    let gate = dilate(f.d)?;
    let steps = terashima_decomposition(f.d)?;
    let mut summary = header(&loaded);
    summary["r_matrix"] = json!(r.entries());
    summary["svd"] = json!(f);
    summary["dilation"] = json!(gate.matrix);
    summary["three_step"] = json!(steps);
    summary["acceptance_on_uniform_input"] = json!(f.d.iter().map(|x| x * x).sum::<f64>() / 4.0);
    let outputs = Outputs::new(out)?;
    outputs.write("factors.json", None, &pretty(&summary))?;
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn cmd_convergence(
    model: &ModelArgs,
    n_list: &[usize],
    m_list: &[usize],
    shots: u64,
    floor: u64,
    mode: CliMode,
    input: InputKind,
    out: &OutArgs,
) -> CliResult<Value> {
    let loaded = load_model(model)?;
    let seed = loaded.seed.seed;
    let opts = PowerOptions { action: ActionOptions { meaningful_floor: floor }, ..Default::default() };
    let m_max = m_list.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::new();
    for &n in n_list {
        let exp = TransferExperiment::new(loaded.model.clone(), n)?;
        let start = match input {
            InputKind::Random => random_positive_input(exp.dim(), seed, n as u64),
            other => make_input(other, exp.dim(), seed),
        };
        let run = power_iterate_psi0(
            &exp,
            Some(&start),
            backend(mode, shots, seed),
            PowerOptions { max_steps: m_max, tol: None, ..opts },
        )?;
        rows.extend(convergence_rows(&exp, m_list, &run)?);
    }
    let outputs = Outputs::new(out)?;
    let report: Vec<ReportRow> = rows.iter().map(ReportRow::from).collect();
    outputs.write("convergence.csv", Some(Format::Csv), &report_csv(&report))?;
    let chart = Chart {
        title: "Distance to Ψ₀ after M steps".into(),
        x_label: "M".into(),
        y_label: "distance".into(),
        series: n_list
            .iter()
            .map(|&n| Series {
                name: format!("N = {n}"),
                points: rows.iter().filter(|r| r.n == n).filter_map(|r| r.distance.map(|d| (r.m as f64, d))).collect(),
                style: Style::Line,
            })
            .collect(),
        marks: vec![],
        log_y: true,
    };
    outputs.write("convergence.svg", Some(Format::Svg), &chart.render())?;
    let mut summary = header(&loaded);
    summary["rows"] = json!(rows);
    outputs.json("convergence.json", &summary)?;
    Ok(summary)
}

fn run(cli: Cli) -> CliResult<Value> {
    match &cli.command {
        Command::GenModel { model, out } => cmd_gen_model(model, out),
        Command::Spectrum { model, n, backend, out } => cmd_spectrum(model, *n, *backend, out),
        Command::Simulate { model, run, m, mode, input, out } => cmd_simulate(model, run, *m, *mode, *input, out),
        Command::Estimate { model, run, inputs, psi0_steps, mode, out } => {
            cmd_estimate(model, run, *inputs, *psi0_steps, *mode, out)
        }
        Command::ExportCircuit { model, n, m, kind, out } => cmd_export_circuit(model, *n, *m, *kind, out),
        Command::Inspect { model, out } => cmd_inspect(model, out),
        Command::Convergence { model, n_list, m_list, shots, floor, mode, input, out } => {
            cmd_convergence(model, n_list, m_list, *shots, *floor, *mode, *input, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            // A closed pipe downstream is not an error for us.
            let _ = std::io::stdout().lock().write_all(pretty(&summary).as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
