//! Command-line front end.
//!
//! Five subcommands: `simulate` (full-comb trajectory), `markovian` (reduced
//! spectrum report), `memory` (long-time memory of an initial state), `sweep`
//! (phase diagram over a coupling grid), `boundaries` (analytic boundary
//! curves). Parameters resolve in precedence order: built-in preset, then
//! `--config` JSON, then explicit flags.
//!
//! Exit codes: 0 success, 2 usage (bad flags, bad config, bad grids),
//! 3 runtime failure (I/O, solver trouble, too many invalid sweep cells).

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::dynamics::{propagate_series, StateVector};
use crate::error::Error;
use crate::markovian::MarkovianModel;
use crate::memory::{memory, MemoryWindow};
use crate::model::{Frame, IndexConvention, SystemParams};
use crate::phase::{self, analytic_sweep, linspace, sweep, MemorySurface, SweepConfig};

/// Sweeps whose invalid-cell fraction exceeds this abort with a runtime
/// error.
pub const MAX_INVALID_CELL_FRACTION: f64 = 0.10;

#[derive(Parser)]
#[command(
    name = "ptbath",
    version,
    about = "Two coupled resonators in a finite mode comb: exact dynamics, reduced spectra, memory, and protection phase diagrams"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// JSON parameter file; explicit flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for generated files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Work in the frame rotating at omega0 (true) or the lab frame (false).
    #[arg(
        long,
        global = true,
        value_name = "BOOL",
        default_value_t = true,
        action = ArgAction::Set
    )]
    pub rotating_frame: bool,
    /// Comb placement convention (default as-written).
    #[arg(long, global = true, value_enum, value_name = "CONV")]
    pub convention: Option<ConventionArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    AsWritten,
    Symmetric,
}

impl From<ConventionArg> for IndexConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::AsWritten => IndexConvention::AsWritten,
            ConventionArg::Symmetric => IndexConvention::Symmetric,
        }
    }
}

/// Physical parameters accepted by most subcommands.
#[derive(Args, Debug, Default, Clone)]
pub struct ParamArgs {
    /// Common resonator frequency.
    #[arg(long, value_name = "FREQ")]
    pub omega0: Option<f64>,
    /// Environment mode spacing.
    #[arg(long, value_name = "FREQ")]
    pub delta_omega: Option<f64>,
    /// Resonator-environment coupling.
    #[arg(long, value_name = "FREQ")]
    pub g: Option<f64>,
    /// Inter-resonator coupling.
    #[arg(long = "Omega", value_name = "FREQ")]
    pub omega: Option<f64>,
    /// Number of environment modes.
    #[arg(long, value_name = "N")]
    pub n_modes: Option<usize>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Integrate the full comb dynamics and write a trajectory.
    Simulate(SimulateArgs),
    /// Print the reduced two-mode spectrum as JSON on stdout.
    Markovian(MarkovianArgs),
    /// Print the long-time memory of an initial state as JSON on stdout.
    Memory(MemoryArgs),
    /// Sweep a (g, Omega) grid and write the protection phase diagram.
    Sweep(SweepArgs),
    /// Tabulate the analytic protection boundaries.
    Boundaries(BoundariesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointPreset {
    /// Strong-coupling revival point: N=100, spacing 2e-3, g 3e-3, Omega 6e-3.
    Fig1,
    /// Protected weak-coupling point: N=100, spacing 2e-3, g 7.5e-4, Omega 5e-4.
    Fig2,
}

impl PointPreset {
    fn name(self) -> &'static str {
        match self {
            PointPreset::Fig1 => "fig1",
            PointPreset::Fig2 => "fig2",
        }
    }

    fn fill(self) -> ConfigFile {
        let (g, omega) = match self {
            PointPreset::Fig1 => (3e-3, 6e-3),
            PointPreset::Fig2 => (7.5e-4, 5e-4),
        };
        ConfigFile {
            omega0: Some(1.0),
            delta_omega: Some(2e-3),
            g: Some(g),
            omega: Some(omega),
            n_modes: Some(100),
            index_convention: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepPreset {
    /// Numeric 20x20 memory sweep, N=50, spacing 2e-3, axes [0.1, 3] in
    /// units of the spacing.
    Fig3,
    /// Analytic-only region map on a fine grid.
    Fig4Analytic,
}

impl SweepPreset {
    fn name(self) -> &'static str {
        match self {
            SweepPreset::Fig3 => "fig3",
            SweepPreset::Fig4Analytic => "fig4-analytic",
        }
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Parameter preset.
    #[arg(long, value_enum)]
    pub preset: Option<PointPreset>,
    /// End time (default: two revival times).
    #[arg(long, value_name = "TIME")]
    pub t_end: Option<f64>,
    /// Number of sample points on [0, t_end], endpoints included.
    #[arg(long, default_value_t = 4000)]
    pub samples: usize,
    /// Initial state: "a1", "a2", or a path to a JSON amplitude file.
    #[arg(long, default_value = "a1")]
    pub init: String,
    /// Also integrate the reduced two-mode model for overlay (implied by
    /// --preset fig1).
    #[arg(long)]
    pub with_markovian: bool,
}

#[derive(Args)]
pub struct MarkovianArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub preset: Option<PointPreset>,
    /// Effective decay rate; replaces the comb-derived pi g^2 / spacing.
    #[arg(long, value_name = "RATE")]
    pub gamma: Option<f64>,
}

#[derive(Args)]
pub struct MemoryArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub preset: Option<PointPreset>,
    /// Initial state: "a1", "a2", or a path to a JSON amplitude file.
    #[arg(long, default_value = "a1")]
    pub init: String,
    /// Window start (default: five revival times).
    #[arg(long, value_name = "TIME")]
    pub tau: Option<f64>,
    /// Window length (default: twenty revival times).
    #[arg(long, value_name = "TIME")]
    pub window: Option<f64>,
    /// Quadrature samples.
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub preset: Option<SweepPreset>,
    /// g axis lower bound, in units of the mode spacing.
    #[arg(long, value_name = "X")]
    pub g_min: Option<f64>,
    /// g axis upper bound, in units of the mode spacing.
    #[arg(long, value_name = "X")]
    pub g_max: Option<f64>,
    /// Points along the g axis.
    #[arg(long, value_name = "N")]
    pub g_steps: Option<usize>,
    /// Omega axis lower bound, in units of the mode spacing.
    #[arg(long, value_name = "X")]
    pub omega_min: Option<f64>,
    /// Omega axis upper bound, in units of the mode spacing.
    #[arg(long, value_name = "X")]
    pub omega_max: Option<f64>,
    /// Points along the Omega axis.
    #[arg(long, value_name = "N")]
    pub omega_steps: Option<usize>,
    /// Memory level separating protected from unprotected. The default sits
    /// under the 0.5 Rabi-average ceiling of an oscillating protected pair;
    /// lossy revivals can hold protected probes lower still, so tighten it
    /// when the bright regions look washed out.
    #[arg(long, default_value_t = 0.4)]
    pub threshold: f64,
    /// Memory window start (default: five revival times).
    #[arg(long, value_name = "TIME")]
    pub tau: Option<f64>,
    /// Memory window length (default: twenty revival times).
    #[arg(long, value_name = "TIME")]
    pub window: Option<f64>,
    /// Quadrature samples per memory evaluation.
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
    /// Emit only the analytic region map (no comb diagonalizations).
    #[arg(long)]
    pub analytic_only: bool,
}

#[derive(Args)]
pub struct BoundariesArgs {
    /// Environment mode spacing (default 2e-3).
    #[arg(long, value_name = "FREQ")]
    pub delta_omega: Option<f64>,
    /// g axis lower bound, in units of the mode spacing.
    #[arg(long, default_value_t = 0.05, value_name = "X")]
    pub g_min: f64,
    /// g axis upper bound, in units of the mode spacing.
    #[arg(long, default_value_t = 3.0, value_name = "X")]
    pub g_max: f64,
    /// Points along the g axis.
    #[arg(long, default_value_t = 300, value_name = "N")]
    pub steps: usize,
}

/// Strict parameter file: unknown keys are rejected so typos cannot pass
/// silently.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    omega0: Option<f64>,
    delta_omega: Option<f64>,
    g: Option<f64>,
    #[serde(rename = "Omega")]
    omega: Option<f64>,
    n_modes: Option<usize>,
    index_convention: Option<IndexConvention>,
}

impl ConfigFile {
    fn overlaid_on(self, base: ConfigFile) -> ConfigFile {
        ConfigFile {
            omega0: self.omega0.or(base.omega0),
            delta_omega: self.delta_omega.or(base.delta_omega),
            g: self.g.or(base.g),
            omega: self.omega.or(base.omega),
            n_modes: self.n_modes.or(base.n_modes),
            index_convention: self.index_convention.or(base.index_convention),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::InvalidParams(_)
            | Error::TooManyModes { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidState(_)
            | Error::NotNormalized { .. }
            | Error::UnsortedTimes
            | Error::InvalidGrid(_)
            | Error::InvalidWindow(_) => CliError::Usage(e.to_string()),
            Error::Eigensolver { .. } | Error::NormDrift { .. } | Error::Io(_) => {
                CliError::Runtime(anyhow::Error::new(e))
            }
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let threads = match cli.global.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        // 0 tells the pool builder to size for the machine.
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.into()))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(&cli.global, args),
        Command::Markovian(args) => cmd_markovian(&cli.global, args),
        Command::Memory(args) => cmd_memory(&cli.global, args),
        Command::Sweep(args) => cmd_sweep(&cli.global, args),
        Command::Boundaries(args) => cmd_boundaries(&cli.global, args),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

/// Layers preset, config file, and flags (weakest first) into one view.
fn layered(
    global: &GlobalArgs,
    args: &ParamArgs,
    preset: Option<ConfigFile>,
) -> CliResult<ConfigFile> {
    let mut merged = preset.unwrap_or_default();
    merged = load_config(global.config.as_deref())?.overlaid_on(merged);
    let flags = ConfigFile {
        omega0: args.omega0,
        delta_omega: args.delta_omega,
        g: args.g,
        omega: args.omega,
        n_modes: args.n_modes,
        index_convention: global.convention.map(IndexConvention::from),
    };
    Ok(flags.overlaid_on(merged))
}

fn resolve_system(
    global: &GlobalArgs,
    args: &ParamArgs,
    preset: Option<ConfigFile>,
) -> CliResult<SystemParams> {
    let merged = layered(global, args, preset)?;
    let mut missing = Vec::new();
    if merged.delta_omega.is_none() {
        missing.push("--delta-omega");
    }
    if merged.g.is_none() {
        missing.push("--g");
    }
    if merged.omega.is_none() {
        missing.push("--Omega");
    }
    if merged.n_modes.is_none() {
        missing.push("--n-modes");
    }
    if !missing.is_empty() {
        return Err(CliError::Usage(format!(
            "missing parameters: {} (supply flags, --config, or --preset)",
            missing.join(", ")
        )));
    }
    Ok(SystemParams::new(
        merged.omega0.unwrap_or(1.0),
        merged.delta_omega.unwrap(),
        merged.g.unwrap(),
        merged.omega.unwrap(),
        merged.n_modes.unwrap(),
        merged.index_convention.unwrap_or(IndexConvention::AsWritten),
    )?)
}

fn frame_of(global: &GlobalArgs) -> Frame {
    if global.rotating_frame {
        Frame::Rotating
    } else {
        Frame::Absolute
    }
}

/// Amplitude file: a JSON array of `[re, im]` pairs, one per basis slot.
fn parse_init(init: &str, n_modes: usize) -> CliResult<StateVector> {
    match init {
        "a1" => Ok(StateVector::resonator1(n_modes)),
        "a2" => Ok(StateVector::resonator2(n_modes)),
        path => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!(
                    "--init must be \"a1\", \"a2\", or a readable amplitude file; {path}: {e}"
                ))
            })?;
            let pairs: Vec<(f64, f64)> = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("amplitude file {path}: {e}")))?;
            let expected = n_modes + 2;
            if pairs.len() != expected {
                return Err(CliError::Usage(format!(
                    "amplitude file {path} has {} entries, expected {expected} (two resonators + {n_modes} modes)",
                    pairs.len()
                )));
            }
            Ok(StateVector::new(
                pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect(),
            )?)
        }
    }
}

fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot create {}: {e}", dir.display())))
}

fn write_named<F>(dir: &Path, name: &str, f: F) -> CliResult<PathBuf>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
{
    let path = dir.join(name);
    let file = fs::File::create(&path)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn cjson(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn params_json(params: &SystemParams, frame: Frame) -> serde_json::Value {
    json!({
        "omega0": params.omega0,
        "delta_omega": params.delta_omega,
        "g": params.g,
        "Omega": params.omega,
        "n_modes": params.n_modes,
        "index_convention": params.index_convention,
        "frame": frame,
        "gamma": params.effective_gamma(),
        "omega_ep": MarkovianModel::from_system(params).exceptional_point(),
        "revival_time": params.revival_time(),
    })
}

fn cmd_simulate(global: &GlobalArgs, args: &SimulateArgs) -> CliResult<()> {
    let params = resolve_system(global, &args.params, args.preset.map(PointPreset::fill))?;
    let frame = frame_of(global);
    let psi0 = parse_init(&args.init, params.n_modes)?;
    if psi0.dim() != params.dim() {
        return Err(CliError::Usage(format!(
            "initial state has {} amplitudes but the system needs {}",
            psi0.dim(),
            params.dim()
        )));
    }
    let t_end = args.t_end.unwrap_or(2.0 * params.revival_time());
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(CliError::Usage(format!("--t-end must be positive, got {t_end}")));
    }
    if args.samples == 0 {
        return Err(CliError::Usage("--samples 0 leaves the time grid empty".into()));
    }
    let times = linspace(0.0, t_end, args.samples)?;

    let decomp = crate::dynamics::diagonalize(&params.build_hamiltonian(frame)?)?;
    let trajectory = propagate_series(&decomp, &psi0, &times)?;

    create_out_dir(&global.out)?;
    let mut written = Vec::new();
    written.push(write_named(&global.out, "trajectory.csv", |w| trajectory.write_csv(w))?);

    let with_markovian = args.with_markovian || args.preset == Some(PointPreset::Fig1);
    if with_markovian {
        let model = MarkovianModel::from_system(&params);
        let reduced0 = nalgebra::Vector2::new(psi0.a1(), psi0.a2());
        let norm0 = psi0.norm_sqr();
        written.push(write_named(&global.out, "trajectory_markovian.csv", |w| {
            write_markovian_overlay(w, &model, &reduced0, norm0, &times)
        })?);
    }

    written.push(write_named(&global.out, "trajectory.gnuplot", |w| {
        write_trajectory_gnuplot(w, params.revival_time(), t_end, with_markovian)
    })?);

    let meta = json!({
        "preset": args.preset.map(PointPreset::name),
        "params": params_json(&params, frame),
        "pt_phase": MarkovianModel::from_system(&params).pt_phase(),
        "t_end": t_end,
        "samples": args.samples,
        "init": args.init,
        "with_markovian": with_markovian,
        "files": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    written.push(write_named(&global.out, "simulate_meta.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &meta)?;
        writeln!(w)
    })?);

    let model = MarkovianModel::from_system(&params);
    println!(
        "gamma = {:.6e}, Omega_EP = {:.6e}, phase = {}, T_R = {:.6e}",
        params.effective_gamma(),
        model.exceptional_point(),
        model.pt_phase(),
        params.revival_time()
    );
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_markovian_overlay<W: Write>(
    w: &mut W,
    model: &MarkovianModel,
    a0: &nalgebra::Vector2<Complex64>,
    norm0: f64,
    times: &[f64],
) -> io::Result<()> {
    writeln!(w, "t,re_a1,im_a1,abs2_a1,re_a2,im_a2,abs2_a2,abs2_env_total")?;
    for &t in times {
        let a = model.propagate(a0, t);
        // The reduced model has no comb slots; the environment column reports
        // the absorbed population instead.
        let absorbed = (norm0 - a[0].norm_sqr() - a[1].norm_sqr()).max(0.0);
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t,
            a[0].re,
            a[0].im,
            a[0].norm_sqr(),
            a[1].re,
            a[1].im,
            a[1].norm_sqr(),
            absorbed
        )?;
    }
    Ok(())
}

fn write_trajectory_gnuplot<W: Write>(
    w: &mut W,
    revival_time: f64,
    t_end: f64,
    with_markovian: bool,
) -> io::Result<()> {
    writeln!(w, "# Resonator populations against time; dashed grey marks revivals.")?;
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set terminal pngcairo size 1000,600")?;
    writeln!(w, "set output 'trajectory.png'")?;
    writeln!(w, "set xlabel 't'")?;
    writeln!(w, "set ylabel 'population'")?;
    writeln!(w, "set yrange [0:1.05]")?;
    writeln!(w, "set key outside right")?;
    let mut k = 1;
    let mut marker = revival_time;
    while marker < t_end * 1.0000001 {
        writeln!(
            w,
            "set arrow {k} from {marker:.9e}, graph 0 to {marker:.9e}, graph 1 nohead dt 2 lc rgb 'gray'"
        )?;
        k += 1;
        marker += revival_time;
    }
    write!(
        w,
        "plot 'trajectory.csv' skip 1 using 1:4 with lines lw 2 title '|a_1|^2', \\\n     \
         '' skip 1 using 1:7 with lines lw 2 title '|a_2|^2', \\\n     \
         '' skip 1 using 1:8 with lines lw 1 title 'environment'"
    )?;
    if with_markovian {
        write!(
            w,
            ", \\\n     'trajectory_markovian.csv' skip 1 using 1:4 with lines dt 2 title 'reduced |a_1|^2', \\\n     \
             '' skip 1 using 1:7 with lines dt 2 title 'reduced |a_2|^2'"
        )?;
    }
    writeln!(w)?;
    Ok(())
}

fn cmd_markovian(global: &GlobalArgs, args: &MarkovianArgs) -> CliResult<()> {
    let merged = layered(global, &args.params, args.preset.map(PointPreset::fill))?;
    let omega0 = merged.omega0.unwrap_or(1.0);
    let Some(omega) = merged.omega else {
        return Err(CliError::Usage(
            "missing parameters: --Omega (supply flags, --config, or --preset)".into(),
        ));
    };
    // The rate comes from --gamma directly or from the comb parameters.
    let (gamma, comb): (f64, Option<(f64, f64)>) = match args.gamma {
        Some(gamma) => (gamma, None),
        None => {
            let (Some(dw), Some(g)) = (merged.delta_omega, merged.g) else {
                return Err(CliError::Usage(
                    "missing parameters: supply --gamma, or --delta-omega and --g to derive it"
                        .into(),
                ));
            };
            (std::f64::consts::PI * g * g / dw, Some((dw, g)))
        }
    };
    let model = MarkovianModel::new(gamma, omega, omega0)?;
    let (lp, lm) = model.eigenvalues();
    let (ep, em) = model.eigenvectors();
    let (rate_p, rate_m) = model.decay_rates();
    let mut report = json!({
        "gamma": model.gamma,
        "Omega": model.omega,
        "omega0": model.omega0,
        "omega_ep": model.exceptional_point(),
        "phase": model.pt_phase(),
        "lambda_plus": cjson(lp),
        "lambda_minus": cjson(lm),
        "decay_rate_plus": rate_p,
        "decay_rate_minus": rate_m,
        "eigenvector_plus": [cjson(ep[0]), cjson(ep[1])],
        "eigenvector_minus": [cjson(em[0]), cjson(em[1])],
    });
    if let Some((dw, g)) = comb {
        report["delta_omega"] = json!(dw);
        report["g"] = json!(g);
        report["n_excited_plus"] = json!(phase::n_excited(rate_p, dw));
        report["n_excited_minus"] = json!(phase::n_excited(rate_m, dw));
    }
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, &report).map_err(io::Error::from)?;
    writeln!(lock)?;
    Ok(())
}

fn cmd_memory(global: &GlobalArgs, args: &MemoryArgs) -> CliResult<()> {
    let params = resolve_system(global, &args.params, args.preset.map(PointPreset::fill))?;
    let frame = frame_of(global);
    let psi0 = parse_init(&args.init, params.n_modes)?;
    let defaults = MemoryWindow::defaults(&params);
    let window = MemoryWindow::new(
        args.tau.unwrap_or(defaults.tau),
        args.window.unwrap_or(defaults.duration),
        args.samples,
    )?;
    let estimate = memory(&params, frame, &psi0, &window)?;
    let mut report = serde_json::to_value(estimate).expect("estimate serializes");
    report["params"] = params_json(&params, frame);
    report["init"] = json!(args.init);
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, &report).map_err(io::Error::from)?;
    writeln!(lock)?;
    Ok(())
}

fn cmd_sweep(global: &GlobalArgs, args: &SweepArgs) -> CliResult<()> {
    let preset_fill = match args.preset {
        Some(SweepPreset::Fig3) => ConfigFile {
            omega0: Some(1.0),
            delta_omega: Some(2e-3),
            n_modes: Some(50),
            ..ConfigFile::default()
        },
        Some(SweepPreset::Fig4Analytic) => ConfigFile {
            omega0: Some(1.0),
            delta_omega: Some(2e-3),
            ..ConfigFile::default()
        },
        None => ConfigFile::default(),
    };
    let merged = layered(global, &args.params, Some(preset_fill))?;
    let analytic_only = args.analytic_only || args.preset == Some(SweepPreset::Fig4Analytic);

    let Some(delta_omega) = merged.delta_omega else {
        return Err(CliError::Usage(
            "missing parameters: --delta-omega (supply flags, --config, or --preset)".into(),
        ));
    };
    let default_steps = if analytic_only { 200 } else { 20 };
    let g_steps = args.g_steps.unwrap_or(default_steps);
    let omega_steps = args.omega_steps.unwrap_or(default_steps);
    let x_range = (args.g_min.unwrap_or(0.1), args.g_max.unwrap_or(3.0));
    let y_range = (args.omega_min.unwrap_or(0.1), args.omega_max.unwrap_or(3.0));
    let g_values: Vec<f64> =
        linspace(x_range.0 * delta_omega, x_range.1 * delta_omega, g_steps)?;
    let omega_values: Vec<f64> =
        linspace(y_range.0 * delta_omega, y_range.1 * delta_omega, omega_steps)?;

    create_out_dir(&global.out)?;

    if analytic_only {
        let cells = analytic_sweep(&g_values, &omega_values, delta_omega)?;
        let csv_path = write_named(&global.out, "diagram_analytic.csv", |w| {
            writeln!(w, "g,Omega,analytic_verdict,state1_protected,state2_protected,above_ep")?;
            for (g, omega, c) in &cells {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{},{},{},{}",
                    g, omega, c.verdict, c.state1_protected, c.state2_protected, c.above_ep
                )?;
            }
            Ok(())
        })?;
        let dat_path = write_named(&global.out, "diagram_analytic.dat", |w| {
            write!(w, "{}", g_values.len())?;
            for g in &g_values {
                write!(w, " {g:.16e}")?;
            }
            writeln!(w)?;
            for (io_idx, omega) in omega_values.iter().enumerate() {
                write!(w, "{omega:.16e}")?;
                for ig in 0..g_values.len() {
                    let c = &cells[ig * omega_values.len() + io_idx].2;
                    write!(w, " {}", c.verdict.count())?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?;
        let plot_path = write_named(&global.out, "diagram_analytic.gnuplot", |w| {
            write_diagram_gnuplot(
                w,
                delta_omega,
                x_range,
                y_range,
                &["diagram_analytic.dat"],
                &["regions_analytic.png"],
                "protected-state count",
            )
        })?;
        let meta = json!({
            "preset": args.preset.map(SweepPreset::name),
            "analytic_only": true,
            "delta_omega": delta_omega,
            "g_values": g_values,
            "omega_values": omega_values,
            "reference_lines": {
                "g_gamma_equals_spacing": phase::g_gamma_equals_spacing(delta_omega),
                "g_both_protected_limit": phase::g_both_protected_limit(delta_omega),
                "omega_weak_rate_slope": (std::f64::consts::PI / 2.0).sqrt(),
            },
        });
        let meta_path = write_named(&global.out, "diagram_analytic_meta.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &meta)?;
            writeln!(w)
        })?;
        for p in [&csv_path, &dat_path, &plot_path, &meta_path] {
            println!("wrote {}", p.display());
        }
        return Ok(());
    }

    let Some(n_modes) = merged.n_modes else {
        return Err(CliError::Usage(
            "missing parameters: --n-modes (supply flags, --config, or --preset)".into(),
        ));
    };
    let t_r = std::f64::consts::TAU / delta_omega;
    let window = MemoryWindow::new(
        args.tau.unwrap_or(5.0 * t_r),
        args.window.unwrap_or(20.0 * t_r),
        args.samples,
    )?;
    let config = SweepConfig {
        omega0: merged.omega0.unwrap_or(1.0),
        delta_omega,
        n_modes,
        index_convention: merged.index_convention.unwrap_or(IndexConvention::AsWritten),
        frame: frame_of(global),
        g_values,
        omega_values,
        threshold: args.threshold,
        window: Some(window),
    };
    let diagram = sweep(&config)?;

    let mut written = Vec::new();
    written.push(write_named(&global.out, "diagram.csv", |w| diagram.write_csv(w))?);
    written.push(write_named(&global.out, "diagram_m1.dat", |w| {
        diagram.write_matrix(w, MemorySurface::State1)
    })?);
    written.push(write_named(&global.out, "diagram_m2.dat", |w| {
        diagram.write_matrix(w, MemorySurface::State2)
    })?);
    written.push(write_named(&global.out, "diagram.gnuplot", |w| {
        write_diagram_gnuplot(
            w,
            delta_omega,
            x_range,
            y_range,
            &["diagram_m1.dat", "diagram_m2.dat"],
            &["diagram_m1.png", "diagram_m2.png"],
            "long-time memory",
        )
    })?);
    let meta_path = write_named(&global.out, "diagram_meta.json", |w| {
        diagram.write_metadata(&mut *w).map_err(|e| match e {
            Error::Io(io_err) => io_err,
            other => io::Error::other(other.to_string()),
        })?;
        writeln!(w)
    })?;
    written.push(meta_path);

    println!(
        "sweep finished: {} cells, invalid fraction {:.3}, verdict disagreement {:.3}",
        diagram.cells().len(),
        diagram.invalid_fraction(),
        diagram.disagreement_fraction()
    );
    for path in &written {
        println!("wrote {}", path.display());
    }

    if diagram.invalid_fraction() > MAX_INVALID_CELL_FRACTION {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{:.1}% of sweep cells failed (limit {:.0}%); see diagram_meta.json for the per-cell errors",
            diagram.invalid_fraction() * 100.0,
            MAX_INVALID_CELL_FRACTION * 100.0
        )));
    }
    Ok(())
}

/// Map-view script shared by the numeric surfaces and the analytic region
/// map; reference lines are drawn in red on top. Ranges arrive already
/// scaled by the mode spacing.
fn write_diagram_gnuplot<W: Write>(
    w: &mut W,
    delta_omega: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    dat_files: &[&str],
    outputs: &[&str],
    quantity: &str,
) -> io::Result<()> {
    let g_vert = phase::g_gamma_equals_spacing(delta_omega) / delta_omega;
    let slope = (std::f64::consts::PI / 2.0).sqrt();
    writeln!(w, "# Axes in units of the mode spacing; red lines are analytic guides.")?;
    writeln!(w, "dw = {delta_omega:.16e}")?;
    writeln!(w, "set terminal pngcairo size 900,700")?;
    writeln!(w, "set view map")?;
    writeln!(w, "set xlabel 'g / delta_omega'")?;
    writeln!(w, "set ylabel 'Omega / delta_omega'")?;
    writeln!(w, "set cblabel '{quantity}'")?;
    writeln!(w, "set datafile missing 'NaN'")?;
    writeln!(w, "set xrange [{:.9e}:{:.9e}]", x_range.0, x_range.1)?;
    writeln!(w, "set yrange [{:.9e}:{:.9e}]", y_range.0, y_range.1)?;
    writeln!(
        w,
        "set arrow 1 from {g_vert:.9e}, graph 0 to {g_vert:.9e}, graph 1 nohead front lw 2 lc rgb 'red'"
    )?;
    writeln!(w, "$weakline << EOD")?;
    writeln!(w, "{:.9e} {:.9e} 1", x_range.0, slope * x_range.0)?;
    writeln!(w, "{:.9e} {:.9e} 1", x_range.1, slope * x_range.1)?;
    writeln!(w, "EOD")?;
    for (dat, png) in dat_files.iter().zip(outputs) {
        writeln!(w, "set output '{png}'")?;
        writeln!(
            w,
            "splot '{dat}' nonuniform matrix using ($1/dw):($2/dw):3 with pm3d notitle, \\"
        )?;
        writeln!(
            w,
            "      $weakline using 1:2:3 with lines lw 2 lc rgb 'red' notitle"
        )?;
    }
    Ok(())
}

fn cmd_boundaries(global: &GlobalArgs, args: &BoundariesArgs) -> CliResult<()> {
    let config = load_config(global.config.as_deref())?;
    let delta_omega = args.delta_omega.or(config.delta_omega).unwrap_or(2e-3);
    if !(delta_omega.is_finite() && delta_omega > 0.0) {
        return Err(CliError::Usage(format!(
            "delta_omega must be positive, got {delta_omega}"
        )));
    }
    let g_values = linspace(args.g_min * delta_omega, args.g_max * delta_omega, args.steps)?;

    create_out_dir(&global.out)?;
    let csv_path = write_named(&global.out, "boundaries.csv", |w| {
        writeln!(w, "g,gamma,omega_ep,omega_protection_boundary,boundary_role")?;
        for &g in &g_values {
            let gamma = std::f64::consts::PI * g * g / delta_omega;
            let ep = phase::markovian_ep_coupling(g, delta_omega);
            // Below the EP the curve Omega = dw sqrt(gamma/dw - 1) bounds the
            // fast branch for gamma < 2 dw and the slow branch beyond.
            let ratio = gamma / delta_omega - 1.0;
            let (boundary, role) = if ratio < 0.0 {
                (f64::NAN, "none")
            } else if gamma < 2.0 * delta_omega {
                (delta_omega * ratio.sqrt(), "state2")
            } else {
                (delta_omega * ratio.sqrt(), "state1")
            };
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                g, gamma, ep, boundary, role
            )?;
        }
        Ok(())
    })?;
    let meta = json!({
        "delta_omega": delta_omega,
        "g_gamma_equals_spacing": phase::g_gamma_equals_spacing(delta_omega),
        "g_both_protected_limit": phase::g_both_protected_limit(delta_omega),
        "omega_weak_rate_slope": (std::f64::consts::PI / 2.0).sqrt(),
        "omega_ep": "pi g^2 / (2 delta_omega)",
        "protection_boundary": "delta_omega * sqrt(gamma/delta_omega - 1) for gamma >= delta_omega",
    });
    let meta_path = write_named(&global.out, "boundaries_meta.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &meta)?;
        writeln!(w)
    })?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", meta_path.display());
    Ok(())
}
