//! Command-line front end. Every analysis is a subcommand writing CSV or JSON
//! to stdout or `--output`.
//!
//! Exit status is 0 on success, 1 for usage and domain errors and 2 when the
//! numerics fail.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::boundstate::{compare_with_full, fit_bound_state, DEFAULT_Q, DEFAULT_SOURCE_N};
use crate::disorder::{run_disorder_detailed, samples_table, DisorderConfig, NoiseModel};
use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, Coupling, CouplingModel, ExcitationHamiltonian, Geometry, Topology};
use crate::optimize::{
    encoded_end_states, encoded_transfer, optimize_placement, Objective, SearchConfig, DEFAULT_MIN_FIDELITY,
};
use crate::output::{Cell, Table};
use crate::spectral::{decompose, fidelity_curve, SiteState};
use crate::transfer::{chain_sweep, default_window, normalized_time_curve, ring_sweep, sweep_table, PeakSearchConfig};

pub const THREADS_ENV: &str = "DIPOLINK_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[default]
    Dipole,
    Nn,
}

impl From<ModelArg> for CouplingModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dipole => CouplingModel::Dipole,
            ModelArg::Nn => CouplingModel::NearestNeighbour,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    UniformPerSite,
    GaussianPerSite,
    UniformPerGap,
    GaussianPerGap,
}

impl From<NoiseArg> for NoiseModel {
    fn from(m: NoiseArg) -> Self {
        match m {
            NoiseArg::UniformPerSite => NoiseModel::UniformPerSite,
            NoiseArg::GaussianPerSite => NoiseModel::GaussianPerSite,
            NoiseArg::UniformPerGap => NoiseModel::UniformPerGap,
            NoiseArg::GaussianPerGap => NoiseModel::GaussianPerGap,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dipolink", version, about = "State transfer through dipole-coupled spin arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Coupling model.
    #[arg(long, value_enum, default_value_t = ModelArg::Dipole, global = true)]
    pub model: ModelArg,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,

    /// Geometry JSON, either bare or under a "geometry" key.
    #[arg(long, global = true)]
    pub geometry_file: Option<PathBuf>,

    /// Coupling constant; the nearest-neighbour hopping at unit spacing is half of it.
    #[arg(long, default_value_t = 2.0, global = true)]
    pub c_const: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// End-to-end transfer on uniform chains over a range of lengths.
    ChainSweep {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 23)]
        n_max: usize,
        /// Peak-search window; defaults per system.
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Transfer to the antipodal site of rings over a range of sizes.
    RingSweep {
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Fidelity against time on a uniform grid.
    FidelityCurve {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        /// Input site (1-based).
        #[arg(long, default_value_t = 1)]
        from: usize,
        /// Output site (1-based); defaults to the last site of a chain or the antipode of a ring.
        #[arg(long)]
        to: Option<usize>,
        /// Use an `n`-site ring instead of a chain.
        #[arg(long)]
        ring: bool,
    },
    /// On-site flip energies of every site.
    OnsiteEnergies {
        #[arg(long, default_value_t = 15)]
        n: usize,
    },
    /// Excitation energies above the ground state for a range of chain lengths.
    SpectrumSweep {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 23)]
        n_max: usize,
    },
    /// Transfer time rescaled to unit chain length.
    NormalizedTime {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 23)]
        n_max: usize,
    },
    /// End-state fit and its transfer-time prediction against the full system.
    BoundState {
        #[arg(long, default_value_t = DEFAULT_Q)]
        q: usize,
        #[arg(long, default_value_t = DEFAULT_SOURCE_N)]
        source_n: usize,
        #[arg(long, default_value_t = 8)]
        n_min: usize,
        #[arg(long, default_value_t = 23)]
        n_max: usize,
    },
    /// Mirror-symmetric placement of inner spins minimizing the transfer time.
    OptimizePlacement {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_FIDELITY)]
        min_fidelity: f64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 0.05)]
        gap_min: f64,
    },
    /// Encoded end states against single-site transfer.
    EncodedTransfer {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        width: usize,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
    },
    /// Failure rate under random placement errors.
    Disorder {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        error_fraction: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = NoiseArg::UniformPerSite)]
        noise_model: NoiseArg,
        /// Also write per-sample outcomes as CSV to this file.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
}

/// Process entry point.
pub fn main() -> ! {
    std::process::exit(run(std::env::args_os()))
}

/// Parse `args`, run the command and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                2
            } else {
                1
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Domain(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?;
    if threads > 0 {
        // A pool may already exist when running in-process more than once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

enum Rendered {
    Table(Table),
    Json(Value),
}

impl Rendered {
    fn text(&self, format: Format) -> String {
        match (self, format) {
            (Rendered::Table(t), Format::Csv) => t.to_csv(),
            (Rendered::Table(t), Format::Json) => t.to_json(),
            (Rendered::Json(v), _) => pretty(v),
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn execute(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    let coupling = Coupling { model: common.model.into(), c: common.c_const };
    if !(coupling.c.is_finite() && coupling.c > 0.0) {
        return Err(Error::Domain(format!("--c-const must be positive, got {}", coupling.c)));
    }
    let geometry = common.geometry_file.as_deref().map(read_geometry).transpose()?;

    let rendered = match &cli.command {
        Command::ChainSweep { n_min, n_max, t_max } => {
            let cfg = peak_config(*t_max);
            Rendered::Table(sweep_table(&chain_sweep(*n_min, *n_max, &coupling, &cfg)?))
        }
        Command::RingSweep { n_min, n_max, t_max } => {
            let cfg = peak_config(*t_max);
            Rendered::Table(sweep_table(&ring_sweep(*n_min, *n_max, &coupling, &cfg)?))
        }
        Command::FidelityCurve { n, t_max, steps, from, to, ring } => {
            let g = match geometry {
                Some(g) => g,
                None if *ring => Geometry::ring(*n)?,
                None => Geometry::uniform_chain(*n)?,
            };
            fidelity_curve_output(&g, &coupling, *from, *to, *t_max, *steps, common.format)?
        }
        Command::OnsiteEnergies { n } => {
            let g = geometry.map_or_else(|| Geometry::uniform_chain(*n), Ok)?;
            Rendered::Table(onsite_table(&build_hamiltonian(&g, &coupling)?))
        }
        Command::SpectrumSweep { n_min, n_max } => Rendered::Table(spectrum_table(*n_min, *n_max, &coupling)?),
        Command::NormalizedTime { n_min, n_max } => {
            let rows = normalized_time_curve(*n_min, *n_max, &PeakSearchConfig::default())?;
            let mut table = Table::new(["n", "t_peak", "tau", "tau_beat"]);
            for r in rows {
                table.push::<_, Cell>([r.n.into(), r.t_peak.into(), r.tau.into(), r.tau_beat.into()]);
            }
            Rendered::Table(table)
        }
        Command::BoundState { q, source_n, n_min, n_max } => {
            let model = fit_bound_state(*q, *source_n, &coupling)?;
            let rows = compare_with_full(&model, *n_min, *n_max, &coupling, &PeakSearchConfig::default())?;
            match common.format {
                Format::Json => Rendered::Json(json!({ "model": to_value(&model)?, "comparison": to_value(&rows)? })),
                Format::Csv => {
                    let mut table = Table::new([
                        "n",
                        "length",
                        "tau_peak",
                        "tau_beat",
                        "tau_pred",
                        "residual_peak",
                        "residual_beat",
                        "Q",
                        "R",
                    ]);
                    for r in rows {
                        table.push::<_, Cell>([
                            r.n.into(),
                            r.length.into(),
                            r.tau_peak.into(),
                            r.tau_beat.into(),
                            r.tau_pred.into(),
                            r.residual_peak.into(),
                            r.residual_beat.into(),
                            model.q_sum.into(),
                            model.r_sum.into(),
                        ]);
                    }
                    Rendered::Table(table)
                }
            }
        }
        Command::OptimizePlacement { n, min_fidelity, restarts, gap_min } => {
            let search =
                SearchConfig { seed: common.seed, restarts: *restarts, gap_min: *gap_min, ..SearchConfig::default() };
            let report = optimize_placement(*n, Objective::MinimizeTau, *min_fidelity, &coupling, &search)?;
            let rendered = match common.format {
                Format::Json => Rendered::Json(to_value(&report)?),
                Format::Csv => {
                    let mut table = Table::new(["site", "position"]);
                    for (i, p) in report.geometry.positions().iter().enumerate() {
                        table.push::<_, Cell>([(i + 1).into(), (*p).into()]);
                    }
                    Rendered::Table(table)
                }
            };
            emit(&rendered, common)?;
            report.into_result()?;
            return Ok(());
        }
        Command::EncodedTransfer { n, width, t_max, steps } => {
            let g = geometry.map_or_else(|| Geometry::uniform_chain(*n), Ok)?;
            encoded_output(&g, &coupling, *width, *t_max, *steps, common.format)?
        }
        Command::Disorder { n, error_fraction, samples, noise_model, dump_samples } => {
            let g = geometry.map_or_else(|| Geometry::uniform_chain(*n), Ok)?;
            let config = DisorderConfig {
                error_fraction: *error_fraction,
                samples: *samples,
                seed: common.seed,
                noise_model: (*noise_model).into(),
            };
            let (report, outcomes) = run_disorder_detailed(&g, &coupling, &config)?;
            if let Some(path) = dump_samples {
                fs::write(path, samples_table(&outcomes).to_csv())?;
            }
            match common.format {
                Format::Json => Rendered::Json(to_value(&report)?),
                Format::Csv => {
                    let mut table = Table::new([
                        "samples",
                        "failures",
                        "failure_rate",
                        "mean_f_at_nominal_time",
                        "t_nominal",
                        "clean_f_max",
                        "rejected_draws",
                        "error_fraction",
                        "noise_model",
                        "seed",
                    ]);
                    table.push::<_, Cell>([
                        report.samples.into(),
                        report.failures.into(),
                        report.failure_rate.into(),
                        report.mean_f_at_nominal_time.into(),
                        report.t_nominal.into(),
                        report.clean_f_max.into(),
                        report.rejected_draws.into(),
                        config.error_fraction.into(),
                        config.noise_model.to_string().into(),
                        Cell::Text(report.seed.to_string()),
                    ]);
                    Rendered::Table(table)
                }
            }
        }
    };
    emit(&rendered, common)
}

fn emit(rendered: &Rendered, common: &Common) -> Result<()> {
    let text = rendered.text(common.format);
    match &common.output {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn peak_config(t_max: Option<f64>) -> PeakSearchConfig {
    PeakSearchConfig { t_max, ..PeakSearchConfig::default() }
}

/// Geometry from a file holding either a geometry object or any object with a
/// `"geometry"` member, such as a placement report.
pub fn read_geometry(path: &Path) -> Result<Geometry> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    let inner = value.get("geometry").cloned().unwrap_or(value);
    Ok(serde_json::from_value(inner)?)
}

fn default_target(g: &Geometry) -> usize {
    match g.topology() {
        Topology::Chain => g.len(),
        Topology::Ring => g.len() / 2 + 1,
    }
}

fn fidelity_curve_output(
    g: &Geometry,
    coupling: &Coupling,
    from: usize,
    to: Option<usize>,
    t_max: Option<f64>,
    steps: usize,
    format: Format,
) -> Result<Rendered> {
    let n = g.len();
    let to = to.unwrap_or_else(|| default_target(g));
    if from < 1 || from > n || to < 1 || to > n {
        return Err(Error::Domain(format!("sites must lie in 1..={n}, got {from} and {to}")));
    }
    let h = build_hamiltonian(g, coupling)?;
    let spec = decompose(&h)?;
    let t_max = t_max.unwrap_or_else(|| default_window(&h, &spec));
    let input = SiteState::localized(n, from - 1)?;
    let output = SiteState::localized(n, to - 1)?;
    let curve = fidelity_curve(&spec, &input, &output, t_max, steps)?;
    Ok(match format {
        Format::Csv => Rendered::Table(curve.to_table()),
        Format::Json => Rendered::Json(json!({
            "geometry": to_value(g)?,
            "model": coupling.model.to_string(),
            "c": coupling.c,
            "from": from,
            "to": to,
            "t_max": t_max,
            "steps": steps,
            "points": curve.to_table().to_json_value(),
        })),
    })
}

fn onsite_table(h: &ExcitationHamiltonian) -> Table {
    let ground = h.ground_energy();
    let mut table = Table::new(["site", "position", "onsite", "relative"]);
    for (i, (e, p)) in h.onsite_energies().iter().zip(h.geometry().positions()).enumerate() {
        table.push::<_, Cell>([(i + 1).into(), (*p).into(), (*e).into(), (e - ground).into()]);
    }
    table
}

fn spectrum_table(n_min: usize, n_max: usize, coupling: &Coupling) -> Result<Table> {
    if n_min < 2 || n_min > n_max {
        return Err(Error::Domain(format!("need 2 <= n_min <= n_max, got {n_min}..{n_max}")));
    }
    let mut table = Table::new(["n", "m", "energy", "delta_e"]);
    for n in n_min..=n_max {
        let h = build_hamiltonian(&Geometry::uniform_chain(n)?, coupling)?;
        let spec = decompose(&h)?;
        for (m, e) in spec.eigenvalues().iter().enumerate() {
            table.push::<_, Cell>([n.into(), m.into(), (*e).into(), (e - h.ground_energy()).into()]);
        }
    }
    Ok(table)
}

fn encoded_output(
    g: &Geometry,
    coupling: &Coupling,
    width: usize,
    t_max: Option<f64>,
    steps: usize,
    format: Format,
) -> Result<Rendered> {
    if g.topology() != Topology::Chain {
        return Err(Error::Domain("encoded transfer needs a chain".into()));
    }
    let h = build_hamiltonian(g, coupling)?;
    let spec = decompose(&h)?;
    let cfg = peak_config(t_max);
    let comparison = encoded_transfer(&h, width, &cfg)?;
    let window = comparison.encoded.window;
    let n = g.len();
    let (input, output) = encoded_end_states(&h, width)?;
    let encoded = fidelity_curve(&spec, &input, &output, window, steps)?;
    let single = fidelity_curve(&spec, &SiteState::localized(n, 0)?, &SiteState::localized(n, n - 1)?, window, steps)?;

    let mut table = Table::new(["t", "F_single", "F_encoded"]);
    for ((t, s), e) in single.times.iter().zip(&single.values).zip(&encoded.values) {
        table.push([*t, *s, *e]);
    }
    Ok(match format {
        Format::Csv => Rendered::Table(table),
        Format::Json => Rendered::Json(json!({
            "geometry": to_value(g)?,
            "width": width,
            "encoded": to_value(&comparison.encoded)?,
            "single_site": to_value(&comparison.single_site)?,
            "points": table.to_json_value(),
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["dipolink", "chain-sweep", "--n-max", "5", "--model", "nn", "--format", "json"])
            .unwrap();
        assert_eq!(cli.common.model, ModelArg::Nn);
        assert_eq!(cli.common.format, Format::Json);
        assert!(matches!(cli.command, Command::ChainSweep { n_max: 5, .. }));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["dipolink", "no-such-command"]), 1);
        assert_eq!(run(["dipolink", "chain-sweep", "--bogus"]), 1);
        assert_eq!(run(["dipolink", "chain-sweep", "--n-min", "5", "--n-max", "2"]), 1);
        assert_eq!(run(["dipolink", "chain-sweep", "--c-const=-1"]), 1);
    }

    #[test]
    fn spectrum_rows() {
        let t = spectrum_table(2, 4, &Coupling::dipole()).unwrap();
        assert_eq!(t.rows().len(), 2 + 3 + 4);
        assert_eq!(t.rows()[0][3], Cell::Float(1.0));
    }
}
