//! Command execution and exit-status mapping.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use gausspt_core::analysis::{run_sweep, DEFAULT_MAX_POINTS};
use gausspt_core::dynamics::relative_deviation;
use gausspt_core::oracle::{fock_tmsv_moments, sde_ensemble, sufficient_cutoff};
use gausspt_core::{
    antibunching, drift_matrix, evolve_observables_with_noise, mode_moments, noise_matrix, propagate_closed_form,
    propagate_rk4, spectrum_sweep, spectrum_table, tmsv_initial, Noise, Reduction, SweepAxis, SweepSpec, SweepTable,
    SystemParams, TrajectoryGrid,
};

use crate::config::{FileConfig, Format};
use crate::figure::{self, default_horizon, gnuplot_script};
use crate::{Cli, Command, CommonArgs};

pub const RUNTIME_ERROR: u8 = 1;
pub const BAD_ARGUMENTS: u8 = 2;
pub const DIVERGED: u8 = 3;
pub const VERIFY_FAILED: u8 = 4;

/// Default integration step, in `1/kappa`.
const DEFAULT_STEP: f64 = 0.005;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_NTRAJ: usize = 20_000;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

fn bad_args(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: BAD_ARGUMENTS, error: error.into() }
}

impl From<gausspt_core::Error> for Failure {
    fn from(e: gausspt_core::Error) -> Self {
        let code = match e {
            gausspt_core::Error::InvalidParameter { .. } | gausspt_core::Error::CutoffTooSmall { .. } => BAD_ARGUMENTS,
            gausspt_core::Error::Divergence { .. } => DIVERGED,
            gausspt_core::Error::Nonphysical(_) => RUNTIME_ERROR,
        };
        Failure { code, error: e.into() }
    }
}

type Outcome = Result<(), Failure>;

/// Fully resolved options: flags, then config file, then defaults.
struct Settings {
    file: FileConfig,
    params: SystemParams,
    t_end: Option<f64>,
    steps: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
    seed: u64,
    noise: Noise,
    plot_script: bool,
}

impl Settings {
    fn resolve(args: &CommonArgs) -> Result<Self, Failure> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path).map_err(bad_args)?,
            None => FileConfig::default(),
        };
        let kappa = file.pick(args.kappa, "kappa").map_err(bad_args)?.unwrap_or(1.0);
        let s = file.pick(args.s, "s").map_err(bad_args)?.unwrap_or(1.0);
        let coupling = file.pick(args.coupling, "coupling").map_err(bad_args)?.unwrap_or(1.5 * kappa);
        let nth = file.pick(args.nth, "nth").map_err(bad_args)?.unwrap_or(0.0);
        let r = file.pick(args.r, "r").map_err(bad_args)?.unwrap_or(1.0);
        let params = SystemParams::new(kappa, s, coupling, nth, r)?;

        if let Some(threads) = file.pick(args.threads, "threads").map_err(bad_args)? {
            if threads == 0 {
                return Err(bad_args(anyhow!("--threads must be >= 1")));
            }
            // a second build in the same process (tests) is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
        let noiseless = file.flag(args.noiseless, "noiseless").map_err(bad_args)?;
        Ok(Settings {
            t_end: file.pick(args.t_end, "t_end").map_err(bad_args)?,
            steps: file.pick(args.steps, "steps").map_err(bad_args)?,
            out: file.pick(args.out.clone(), "out").map_err(bad_args)?,
            format: file.pick(args.format, "format").map_err(bad_args)?.unwrap_or_default(),
            seed: file.pick(args.seed, "seed").map_err(bad_args)?.unwrap_or(DEFAULT_SEED),
            noise: if noiseless { Noise::Off } else { Noise::Physical },
            plot_script: file.flag(args.plot_script, "plot_script").map_err(bad_args)?,
            params,
            file,
        })
    }

    /// `[0, t_end]` with steps of `DEFAULT_STEP / kappa` unless overridden;
    /// the horizon defaults to 20/kappa for `s = 1` and 10/kappa otherwise.
    fn grid(&self) -> Result<TrajectoryGrid, Failure> {
        let kappa = self.params.kappa();
        let t_end = self.t_end.unwrap_or(default_horizon(self.params.s()).0 / kappa);
        let steps = match self.steps {
            Some(n) => n,
            None => ((t_end * kappa / DEFAULT_STEP).round() as usize).max(1),
        };
        Ok(TrajectoryGrid::new(0.0, t_end, steps)?)
    }
}

pub fn dispatch(cli: Cli) -> Outcome {
    let settings = Settings::resolve(&cli.common)?;
    match cli.command {
        Command::Spectrum { g_min, g_max, g_points } => spectrum(&settings, g_min, g_max, g_points),
        Command::Evolve => evolve(&settings),
        Command::Sweep { axes, reduction, max_points } => sweep(&settings, axes, reduction, max_points),
        Command::Figure { id, figure } => {
            let id = id.or(figure).ok_or_else(|| bad_args(anyhow!("figure needs an id (fig2 to fig8)")))?;
            run_figure(&settings, id)
        }
        Command::Verify { ntraj } => verify(&settings, ntraj),
    }
}

/// Output sink opened before any work so an unwritable path fails fast.
enum Sink {
    Stdout,
    File(PathBuf, BufWriter<File>),
}

impl Sink {
    fn open(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Sink::Stdout),
            Some(p) => {
                let file =
                    File::create(p).with_context(|| format!("cannot write {}", p.display())).map_err(bad_args)?;
                Ok(Sink::File(p.to_path_buf(), BufWriter::new(file)))
            }
        }
    }

    fn write_table(self, table: &SweepTable, settings: &Settings) -> Outcome {
        let text = match settings.format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        };
        let io_failure = |e: io::Error| Failure { code: RUNTIME_ERROR, error: e.into() };
        match self {
            Sink::Stdout => io::stdout().lock().write_all(text.as_bytes()).map_err(io_failure),
            Sink::File(path, mut w) => {
                w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_failure)?;
                if settings.plot_script {
                    write_plot_script(&path, table, settings.format)?;
                }
                Ok(())
            }
        }
    }
}

fn write_plot_script(data: &Path, table: &SweepTable, format: Format) -> Outcome {
    if format != Format::Csv {
        eprintln!("gausspt: plot scripts read CSV; none written for {}", data.display());
        return Ok(());
    }
    let name = data.file_name().and_then(|n| n.to_str()).unwrap_or("data.csv");
    let script = gnuplot_script(name, table.header());
    let path = data.with_extension("gp");
    fs::write(&path, script).with_context(|| format!("cannot write {}", path.display())).map_err(bad_args)
}

fn spectrum(settings: &Settings, g_min: Option<f64>, g_max: Option<f64>, g_points: Option<usize>) -> Outcome {
    let f = &settings.file;
    let g_min = f.pick(g_min, "g_min").map_err(bad_args)?.unwrap_or(0.0);
    let default_max = if settings.params.s() == 1.0 { 1.5 } else { 3.0 };
    let g_max = f.pick(g_max, "g_max").map_err(bad_args)?.unwrap_or(default_max);
    let points = f.pick(g_points, "g_points").map_err(bad_args)?.unwrap_or(301);
    let ratios = SweepAxis::new(gausspt_core::SweepParam::Coupling, g_min, g_max, points)?.values();
    let sink = Sink::open(settings.out.as_deref())?;
    let rows = spectrum_sweep(&settings.params, &ratios)?;
    sink.write_table(&spectrum_table(&rows), settings)
}

fn evolve(settings: &Settings) -> Outcome {
    let grid = settings.grid()?;
    let sink = Sink::open(settings.out.as_deref())?;
    let p = &settings.params;
    let evolution = evolve_observables_with_noise(p, &grid, &settings.noise.matrix(p))?;
    sink.write_table(&evolution.to_table(), settings)?;
    match evolution.diverged_at {
        Some(k) => Err(Failure {
            code: DIVERGED,
            error: anyhow!(
                "covariance diverged at t = {} (overflow or loss of precision); output truncated to {k} samples",
                grid.time(k)
            ),
        }),
        None => Ok(()),
    }
}

fn sweep(settings: &Settings, axes: Vec<String>, reduction: Option<String>, max_points: Option<usize>) -> Outcome {
    let f = &settings.file;
    let axes = if axes.is_empty() { f.axes().to_vec() } else { axes };
    if axes.is_empty() {
        return Err(bad_args(anyhow!("sweep needs at least one --axis NAME=START:STOP:COUNT")));
    }
    let axes = axes.iter().map(|a| a.parse::<SweepAxis>()).collect::<Result<Vec<_>, _>>()?;
    let reduction: Reduction = match f.pick(reduction, "reduction").map_err(bad_args)? {
        Some(name) => name.parse()?,
        None => Reduction::default(),
    };
    let cap = f.pick(max_points, "max_points").map_err(bad_args)?.unwrap_or(DEFAULT_MAX_POINTS);
    let spec = SweepSpec::new(axes, reduction).and_then(|s| s.with_max_points(cap))?;
    let grid = settings.grid()?;
    let sink = Sink::open(settings.out.as_deref())?;
    let table = run_sweep(&settings.params, &spec, &grid, settings.noise)?;
    sink.write_table(&table, settings)
}

fn run_figure(settings: &Settings, id: figure::FigureId) -> Outcome {
    let dir = settings.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display())).map_err(bad_args)?;
    let panels = figure::panels(id);
    let mut sinks = Vec::with_capacity(panels.len());
    for panel in &panels {
        let path = dir.join(format!("{}.{}", panel.name, settings.format.extension()));
        sinks.push(Sink::open(Some(&path))?);
    }
    let mut diverged = Vec::new();
    for (panel, sink) in panels.iter().zip(sinks) {
        let grid = panel.grid(settings.t_end, settings.steps)?;
        let data = panel.compute(&grid, settings.noise)?;
        if let Sink::File(path, _) = &sink {
            println!("{}  <=  {}", path.display(), panel.invocation(&grid, settings.noise));
        }
        sink.write_table(&data.table, settings)?;
        if let Some(t) = data.diverged_at {
            diverged.push(format!("{} at t = {t}", panel.name));
        }
    }
    if diverged.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: DIVERGED,
            error: anyhow!("covariance diverged (overflow or loss of precision): {}", diverged.join(", ")),
        })
    }
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

/// Propagator and observable cross-checks for the configured parameters.
fn verify(settings: &Settings, ntraj: Option<usize>) -> Outcome {
    let p = &settings.params;
    let ntraj = settings.file.pick(ntraj, "ntraj").map_err(bad_args)?.unwrap_or(DEFAULT_NTRAJ);
    let kappa = p.kappa();
    let a = drift_matrix(p);
    let z = noise_matrix(p);
    let w0 = tmsv_initial(p.squeeze_r())?;
    let mut checks = Vec::new();

    // RK4 against the exact propagator at t = 5/kappa
    let grid = TrajectoryGrid::new(0.0, 5.0 / kappa, 1000)?;
    let rk4 = propagate_rk4(&w0, &a, &z, &grid)?;
    let exact = propagate_closed_form(&w0, &a, &z, grid.t_end())?;
    let dev = match (rk4.diverged_at, rk4.last()) {
        (None, Some(last)) => relative_deviation(last, &exact),
        _ => f64::INFINITY,
    };
    checks.push(Check {
        name: "rk4_vs_closed_form",
        passed: dev <= 1e-8,
        detail: format!("rel_dev={dev:.3e} tol=1e-8"),
    });

    // physical along the trajectory
    let min_eig = rk4.states.iter().map(|w| w.min_physical_eigenvalue()).fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "physicality",
        passed: min_eig >= -1e-9,
        detail: format!("min_eig={min_eig:.3e} tol=-1e-9"),
    });

    // stochastic ensemble against the Lyapunov solution
    let grid = TrajectoryGrid::new(0.0, 2.0 / kappa, 19)?;
    let ensemble = sde_ensemble(p, &grid, ntraj, settings.seed)?;
    let reference = grid.times().map(|t| propagate_closed_form(&w0, &a, &z, t)).collect::<Result<Vec<_>, _>>()?;
    let fraction = if ensemble.diverged_at.is_some() { 0.0 } else { ensemble.agreement_fraction(&reference, 3.0) };
    checks.push(Check {
        name: "sde_ensemble",
        passed: fraction >= 0.99,
        detail: format!("within_3se={fraction:.4} ntraj={ntraj} seed={}", settings.seed),
    });

    // Gaussian moments against the Fock-space sums
    let r = p.squeeze_r();
    let fock = fock_tmsv_moments(r, sufficient_cutoff(r).max(60))?;
    let moments = mode_moments(&w0)?;
    let n_dev = (moments.n_p - fock.n).abs();
    let g2_dev = match (antibunching(&w0)?, fock.antibunching()) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    checks.push(Check {
        name: "wick_vs_fock",
        passed: n_dev <= 1e-9 && g2_dev <= 1e-9,
        detail: format!("occupation_dev={n_dev:.3e} antibunching_dev={g2_dev:.3e} cutoff={}", fock.cutoff),
    });

    let mut out = io::stdout().lock();
    for c in &checks {
        let _ = writeln!(out, "{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure { code: VERIFY_FAILED, error: anyhow!("{failed} of {} checks failed", checks.len()) })
    }
}
