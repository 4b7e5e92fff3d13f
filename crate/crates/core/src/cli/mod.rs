//! `trilin modes|run|tomography`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 physics or
//! numerical error, 4 ill-conditioned reconstruction.

mod output;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use output::{fmt_f64, sha256_hex, LeakageSummary, RunManifest};
use output::{emit, populations_table, sectors_table, series_table, Table};

use crate::hilbert::{Mode, PhononDistribution};
use crate::modes::{build_mode_system, khz_to_rad, rad_to_khz, resonance_ratio};
use crate::observe::{
    fit_geometric, fit_poisson, reconstruct_distribution, Inversion, SidebandKind, SidebandSignal,
};
use crate::scenarios::{
    run_avoided_crossing, run_energy_exchange, run_jaynes_cummings, run_pdc_depleted, windowed_contrast,
    EvolutionRecord, ScenarioConfig,
};
use crate::Error;

pub const THREADS_ENV: &str = "TRILIN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "trilin", version, about = "Trilinear three-mode phonon simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file; frequencies in kHz.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accepted for scripting symmetry; no random numbers are drawn.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Debug, Args)]
struct TrapFlags {
    /// Single-ion radial x frequency, kHz.
    #[arg(long = "omega-x")]
    omega_x: Option<f64>,
    /// Single-ion radial y frequency, kHz.
    #[arg(long = "omega-y")]
    omega_y: Option<f64>,
    /// Single-ion axial frequency, kHz.
    #[arg(long = "omega-z")]
    omega_z: Option<f64>,
    /// Ion mass, atomic mass units.
    #[arg(long = "mass-u")]
    mass_u: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normal modes, detuning, coupling rate and ion spacing of the trap.
    Modes {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        trap: TrapFlags,
        /// Detuning override, kHz (moves ω_b).
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// Print the ω_z/ω_x ratio at which δ = 0 and exit.
        #[arg(long)]
        resonance_ratio: bool,
    },
    /// Run one scenario and write CSV tables plus a JSON manifest.
    Run {
        scenario: Scenario,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        trap: TrapFlags,
        /// Use built-in defaults (no config file).
        #[arg(long, conflicts_with = "config")]
        defaults: bool,
        /// Fock cutoffs of modes a, b, c.
        #[arg(long, value_parser = parse_truncation)]
        truncation: Option<[usize; 3]>,
        /// Fock numbers of mode c for the Jaynes–Cummings runs.
        #[arg(long, value_delimiter = ',')]
        fock: Option<Vec<usize>>,
        /// Mean phonon number of the coherent Jaynes–Cummings run.
        #[arg(long)]
        coherent_nbar: Option<f64>,
        /// Skip the coherent Jaynes–Cummings run.
        #[arg(long, conflicts_with = "coherent_nbar")]
        no_coherent: bool,
        /// Pump mean phonon number for down-conversion.
        #[arg(long)]
        pump_nbar: Option<f64>,
        /// Use the Krylov propagator instead of dense diagonalization.
        #[arg(long)]
        krylov: bool,
    },
    /// Reconstruct a phonon distribution from a sideband flopping signal.
    Tomography {
        /// CSV with columns `time_s` and `probability`.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Base sideband Rabi frequency Ω₀/2π, kHz.
        #[arg(long, default_value_t = 10.0)]
        omega0: f64,
        /// Highest phonon number to reconstruct.
        #[arg(long, default_value_t = 15)]
        n_cut: usize,
        #[arg(long, value_enum, default_value_t = Sideband::Blue)]
        sideband: Sideband,
        /// Mode label recorded in the output.
        #[arg(long, value_enum, default_value_t = ModeArg::B)]
        mode: ModeArg,
        /// Direct cosine projection instead of non-negative least squares.
        #[arg(long)]
        fourier: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    AvoidedCrossing,
    Exchange,
    Jc,
    Pdc,
}

impl Scenario {
    fn stem(self) -> &'static str {
        match self {
            Scenario::AvoidedCrossing => "avoided_crossing",
            Scenario::Exchange => "exchange",
            Scenario::Jc => "jc",
            Scenario::Pdc => "pdc",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sideband {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    A,
    B,
    C,
}

fn parse_truncation(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected three comma-separated cutoffs, got {s:?}"));
    };
    let p = |x: &str| x.parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok([p(a)?, p(b)?, p(c)?])
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Config(String),
    Physics(Error),
    IllConditioned(Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Physics(_) => 3,
            Failure::IllConditioned(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) => write!(f, "I/O error: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Physics(e) => write!(f, "{e}"),
            Failure::IllConditioned(e) => write!(
                f,
                "{e}\nhint: extend the probe time window so the slowest flopping frequencies separate, or lower --n-cut"
            ),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IllConditioned { .. } => Failure::IllConditioned(e),
            Error::InvalidInput(m) | Error::InvalidTruncation(m) => Failure::Config(m),
            Error::DimensionCap { .. } | Error::OutOfTruncation { .. } => Failure::Config(e.to_string()),
            other => Failure::Physics(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    run_with(std::env::args_os())
}

pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|_| dispatch(cli.command));
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Modes { common, trap, delta, resonance_ratio: ratio } => cmd_modes(&common, &trap, delta, ratio),
        Command::Run { scenario, common, trap, defaults, truncation, fock, coherent_nbar, no_coherent, pump_nbar, krylov } => {
            let mut cfg = if defaults { ScenarioConfig::default() } else { load_config(common.config.as_deref())? };
            apply_trap_flags(&mut cfg, &trap);
            if truncation.is_some() {
                cfg.truncation = truncation;
            }
            if let Some(f) = fock {
                cfg.jc.fock = f;
            }
            if coherent_nbar.is_some() {
                cfg.jc.coherent_nbar = coherent_nbar;
            }
            if no_coherent {
                cfg.jc.coherent_nbar = None;
            }
            if let Some(p) = pump_nbar {
                cfg.pdc.pump_nbar = p;
            }
            if krylov {
                cfg.propagator = crate::dynamics::Propagator::krylov();
            }
            cmd_run(scenario, &cfg, &common)
        }
        Command::Tomography { input, common, omega0, n_cut, sideband, mode, fourier } => {
            cmd_tomography(&input, &common, omega0, n_cut, sideband, mode, fourier)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    let Some(path) = path else { return Ok(ScenarioConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn input_hashes(common: &Common, extra: Option<&Path>) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for p in common.config.as_deref().into_iter().chain(extra) {
        let bytes = std::fs::read(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        out.insert(p.display().to_string(), sha256_hex(&bytes));
    }
    Ok(out)
}

fn apply_trap_flags(cfg: &mut ScenarioConfig, t: &TrapFlags) {
    let s = &mut cfg.trap;
    for (slot, flag) in [
        (&mut s.omega_x_khz, t.omega_x),
        (&mut s.omega_y_khz, t.omega_y),
        (&mut s.omega_z_khz, t.omega_z),
        (&mut s.mass_u, t.mass_u),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
}

fn manifest(command: String, config: serde_json::Value, inputs: BTreeMap<String, String>, start: Instant, leakage: LeakageSummary) -> RunManifest {
    RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs,
        outputs: BTreeMap::new(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        leakage,
    }
}

fn cmd_modes(common: &Common, flags: &TrapFlags, delta: Option<f64>, ratio: bool) -> Result<(), Failure> {
    if ratio {
        let r = resonance_ratio();
        println!("resonance ratio omega_z/omega_x = {r:.4} ({})", fmt_f64(r));
        return Ok(());
    }
    let start = Instant::now();
    let mut cfg = load_config(common.config.as_deref())?;
    apply_trap_flags(&mut cfg, flags);
    let trap = cfg.trap.to_trap()?;
    let sys = build_mode_system(&trap, delta.map(khz_to_rad))?;

    let freqs = [
        ("omega_a", sys.omega_a()),
        ("omega_b", sys.omega_b()),
        ("omega_c", sys.omega_c()),
        ("delta", sys.delta()),
        ("xi", sys.xi()),
    ];
    println!("{:<9} {:>24} {:>24}", "quantity", "rad/s", "kHz");
    for (name, w) in freqs {
        println!("{name:<9} {:>24} {:>24}", fmt_f64(w), fmt_f64(rad_to_khz(w)));
    }
    println!("xi/pi = {} kHz", fmt_f64(sys.xi() / PI / 1e3));
    println!("z0 = {} m", fmt_f64(sys.z0()));

    if let Some(dir) = &common.out {
        let mut t = Table::new("modes", &["quantity", "value", "unit"]);
        for (name, w) in freqs {
            t.push(vec![name.into(), fmt_f64(w), "rad/s".into()]);
            t.push(vec![name.into(), fmt_f64(rad_to_khz(w)), "kHz".into()]);
        }
        t.push(vec!["z0".into(), fmt_f64(sys.z0()), "m".into()]);
        let config = serde_json::json!({ "trap": cfg.trap, "delta_override_khz": delta });
        let m = manifest("modes".into(), config, input_hashes(common, None)?, start, LeakageSummary::none());
        emit(dir, "modes", &[t], m)?;
    }
    Ok(())
}

fn keyed<'a>(key: &'a [String], rec: &'a EvolutionRecord) -> (&'a [String], &'a EvolutionRecord) {
    (key, rec)
}

fn evolution_tables(stem: &str, keys: &[&str], recs: &[(&[String], &EvolutionRecord)], extra: &[&str]) -> Vec<Table> {
    vec![
        series_table(stem, keys, recs, extra),
        populations_table(&format!("{stem}_populations"), keys, recs),
        sectors_table(&format!("{stem}_sectors"), keys, recs),
    ]
}

fn cmd_run(scenario: Scenario, cfg: &ScenarioConfig, common: &Common) -> Result<(), Failure> {
    let start = Instant::now();
    let mut leakage = LeakageSummary::none();
    let none: Vec<String> = Vec::new();
    let tables = match scenario {
        Scenario::AvoidedCrossing => {
            let table = run_avoided_crossing(cfg)?;
            let mut t = Table::new("avoided_crossing", &["delta_khz", "lower_khz", "upper_khz", "gap_khz"]);
            for r in &table.rows {
                t.push([r.delta, r.lower, r.upper, r.gap].map(|x| fmt_f64(rad_to_khz(x))).to_vec());
            }
            println!("xi/pi = {} kHz", fmt_f64(table.xi / PI / 1e3));
            vec![t]
        }
        Scenario::Exchange => {
            let run = run_energy_exchange(cfg)?;
            leakage.absorb(&run.record);
            let mut tables = evolution_tables("exchange", &[], &[keyed(&none, &run.record)], &[]);
            let mut fit = Table::new(
                "exchange_fit",
                &["omega_rad_s", "frequency_hz", "xi_over_pi_hz", "amplitude", "offset", "rms"],
            );
            let f = run.fit;
            let freq = f.omega / (2.0 * PI);
            fit.push(
                [f.omega, freq, run.record.xi / PI, f.amplitude, f.offset, f.rms].map(fmt_f64).to_vec(),
            );
            println!("population exchange frequency = {} Hz", fmt_f64(freq));
            tables.push(fit);
            tables
        }
        Scenario::Jc => {
            let run = run_jaynes_cummings(cfg)?;
            let mut tables = Vec::new();
            if !run.fock.is_empty() {
                let keys: Vec<Vec<String>> = run.fock.iter().map(|f| vec![f.n.to_string()]).collect();
                let recs: Vec<_> = run.fock.iter().zip(&keys).map(|(f, k)| keyed(k, &f.record)).collect();
                for f in &run.fock {
                    leakage.absorb(&f.record);
                }
                tables.extend(evolution_tables("jc_fock", &["n"], &recs, &[]));
                let mut fit = Table::new(
                    "jc_fock_fit",
                    &[
                        "n",
                        "expected_omega_rad_s",
                        "fitted_omega_rad_s",
                        "fitted_frequency_hz",
                        "ratio_to_2xi",
                        "relative_error",
                        "rms",
                    ],
                );
                for f in &run.fock {
                    let hz = f.fit.omega / (2.0 * PI);
                    println!("n = {}: fitted Rabi frequency = {} Hz", f.n, fmt_f64(hz));
                    let mut row = vec![f.n.to_string()];
                    row.extend(
                        [
                            f.expected_omega,
                            f.fit.omega,
                            hz,
                            f.fit.omega / (2.0 * f.record.xi),
                            f.fit.omega / f.expected_omega - 1.0,
                            f.fit.rms,
                        ]
                        .map(fmt_f64),
                    );
                    fit.push(row);
                }
                tables.push(fit);
            }
            if let Some(c) = &run.coherent {
                leakage.absorb(&c.record);
                tables.extend(evolution_tables("jc_coherent", &[], &[keyed(&none, &c.record)], &[]));
                let window = PI / ((c.nbar + 1.0).sqrt() * c.record.xi);
                let mut t = Table::new("jc_coherent_contrast", &["time_s", "xi_tau", "contrast"]);
                for (time, v) in windowed_contrast(&c.record.times, &c.record.mean_series(Mode::A), window) {
                    t.push(vec![fmt_f64(time), fmt_f64(time * c.record.xi), fmt_f64(v)]);
                }
                tables.push(t);
            }
            tables
        }
        Scenario::Pdc => {
            let run = run_pdc_depleted(cfg)?;
            leakage.absorb(&run.record);
            let mut tables = evolution_tables(
                "pdc",
                &[],
                &[keyed(&none, &run.record)],
                &["geometric_l1_b", "geometric_l1_c"],
            );
            let cols: Vec<Vec<String>> = run.thermality.iter().map(|r| r.map(fmt_f64).to_vec()).collect();
            tables[0].append_columns(&cols);
            tables
        }
    };
    if leakage.flagged {
        eprintln!("warning: truncation leakage {} exceeds {}", leakage.max_leakage, leakage.limit);
    }
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let config = serde_json::to_value(cfg).map_err(|e| Failure::Config(e.to_string()))?;
    let stem = scenario.stem();
    let m = manifest(format!("run {stem}"), config, input_hashes(common, None)?, start, leakage);
    let files = emit(&dir, stem, &tables, m)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn read_signal(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let bad = |m: String| Failure::Config(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name:?}")))
    };
    let (ti, pi) = (col("time_s")?, col("probability")?);
    let (mut times, mut probs) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: unparseable number", line + 2)))
        };
        times.push(num(ti)?);
        probs.push(num(pi)?);
    }
    Ok((times, probs))
}

fn cmd_tomography(
    input: &Path,
    common: &Common,
    omega0_khz: f64,
    n_cut: usize,
    sideband: Sideband,
    mode: ModeArg,
    fourier: bool,
) -> Result<(), Failure> {
    let start = Instant::now();
    let (times, probs) = read_signal(input)?;
    let kind = match sideband {
        Sideband::Red => SidebandKind::Red,
        Sideband::Blue => SidebandKind::Blue,
    };
    let mode = match mode {
        ModeArg::A => Mode::A,
        ModeArg::B => Mode::B,
        ModeArg::C => Mode::C,
    };
    let method = if fourier { Inversion::Fourier } else { Inversion::LeastSquares };
    let signal = SidebandSignal::new(kind, mode, khz_to_rad(omega0_khz), times, probs)?;
    let rec = reconstruct_distribution(&signal, n_cut, method)?;
    if !rec.nyquist_ok {
        eprintln!("warning: sampling interval exceeds the Nyquist limit of the fastest flopping frequency");
    }
    let dist: &PhononDistribution = &rec.distribution;

    let mut p = Table::new("tomography", &["n", "p"]);
    for (n, &pn) in dist.probabilities().iter().enumerate() {
        p.push(vec![n.to_string(), fmt_f64(pn)]);
    }
    let mut s = Table::new(
        "tomography_summary",
        &["mean", "total", "residual_rms", "condition_number", "nyquist_ok", "poisson_l1", "geometric_l1"],
    );
    s.push(vec![
        fmt_f64(dist.mean()),
        fmt_f64(dist.total()),
        fmt_f64(rec.residual_rms),
        fmt_f64(rec.condition_number),
        rec.nyquist_ok.to_string(),
        fmt_f64(fit_poisson(dist).residual_norm),
        fmt_f64(fit_geometric(dist).residual_norm),
    ]);
    println!("nbar = {}", fmt_f64(dist.mean()));
    for (n, pn) in dist.probabilities().iter().enumerate() {
        println!("p_{n} = {}", fmt_f64(*pn));
    }

    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let config = serde_json::json!({
        "input": input.display().to_string(),
        "omega0_khz": omega0_khz,
        "n_cut": n_cut,
        "sideband": kind,
        "mode": mode,
        "method": method,
    });
    let m = manifest("tomography".into(), config, input_hashes(common, Some(input))?, start, LeakageSummary::none());
    emit(&dir, "tomography", &[p, s], m)?;
    Ok(())
}
