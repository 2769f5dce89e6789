//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 verification
//! failure, 3 I/O error.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdi_twirl::channel::{CardinalAxis, NoiseModel, DEFAULT_JITTER_SIGMA};
use mdi_twirl::config::{
    resolve, AlphaSweepConfig, BiasSweepConfig, ConfigFile, DistanceSweepConfig, PguessSweepConfig,
    Protection, ProtocolConfig, SectionConfig, VerifyConfig,
};
use mdi_twirl::csv::CsvDoc;
use mdi_twirl::sweep;
use mdi_twirl::Error;
use toml::{Table, Value};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mdi-twirl",
    version,
    about = "Correlated-twirling MDI-QKD simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per grid point (pulses for run-protocol, trials for verify-design).
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with a [common] section and one section per subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["unprotected", "both"])]
    protected: bool,
    #[arg(long, conflicts_with = "both")]
    unprotected: bool,
    #[arg(long)]
    both: bool,
}

#[derive(Args)]
struct GridFlags {
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    stop: Option<f64>,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// QBER versus rotation angle about the y axis (degrees).
    SweepAlpha {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// QBER versus fixed-axis bias (radians) on the y and z axes.
    SweepBias {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
        #[arg(long)]
        threshold: Option<f64>,
        /// Gaussian jitter on each rotation-vector component, radians.
        #[arg(long)]
        jitter: Option<f64>,
    },
    /// Total guessing probability versus rotation angle (degrees).
    SweepPguess {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Maximum secure distance versus drift spread sigma (radians).
    SweepDistance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
        #[arg(long)]
        threshold: Option<f64>,
        /// Fiber attenuation, dB/km.
        #[arg(long)]
        beta: Option<f64>,
        /// Mean photon number per pulse.
        #[arg(long)]
        mu: Option<f64>,
        /// Dark-count probability per gate.
        #[arg(long)]
        y0: Option<f64>,
    },
    /// Certify the twelve-element design and compare the look-up table.
    VerifyDesign {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Fault injection: perturb element K (1-12) before verifying.
        #[arg(long, value_name = "K")]
        corrupt_element: Option<usize>,
    },
    /// Event-level sifting protocol run.
    RunProtocol {
        #[command(flatten)]
        common: Common,
        /// Per-pulse event log path.
        #[arg(long)]
        events: Option<PathBuf>,
        #[command(flatten)]
        noise: NoiseFlags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseKind {
    None,
    Sweep,
    Bias,
    Haar,
    Gaussian,
}

#[derive(Args)]
struct NoiseFlags {
    /// Channel model; the remaining noise flags parameterize it.
    #[arg(long, value_enum)]
    noise: Option<NoiseKind>,
    /// `x`, `y`, `z` or a comma-separated vector.
    #[arg(long, requires = "noise")]
    axis: Option<String>,
    /// Rotation angle, radians.
    #[arg(long, requires = "noise", allow_hyphen_values = true)]
    angle: Option<f64>,
    /// Bias along the axis, radians.
    #[arg(long, requires = "noise", allow_hyphen_values = true)]
    bias: Option<f64>,
    #[arg(long, requires = "noise")]
    jitter: Option<f64>,
    #[arg(long, requires = "noise")]
    sigma: Option<f64>,
}

enum Failure {
    Usage(String),
    Verification(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidAngle(_)
            | Error::NonUnitAxis { .. } => Failure::Usage(e.to_string()),
            other => Failure::Verification(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Io(m)) => {
            eprintln!("I/O error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn set<T: Into<Value>>(t: &mut Table, key: &str, v: Option<T>) {
    if let Some(v) = v {
        t.insert(key.into(), v.into());
    }
}

fn count(v: Option<usize>) -> Option<i64> {
    v.map(|n| i64::try_from(n).unwrap_or(i64::MAX))
}

impl Common {
    fn overrides(&self) -> Result<Table, Failure> {
        let mut t = Table::new();
        if let Some(seed) = self.seed {
            // TOML integers are signed; the config layer reads them back as u64
            let seed = i64::try_from(seed).map_err(|_| {
                Failure::Usage(format!("seed {seed} exceeds the supported range (< 2^63)"))
            })?;
            t.insert("seed".into(), Value::Integer(seed));
        }
        set(&mut t, "samples", count(self.samples));
        let protection = if self.protected {
            Some(Protection::Protected)
        } else if self.unprotected {
            Some(Protection::Unprotected)
        } else if self.both {
            Some(Protection::Both)
        } else {
            None
        };
        set(&mut t, "protection", protection.map(|p| p.to_string()));
        Ok(t)
    }

    fn load<C: SectionConfig>(&self, extra: Table) -> Result<C, Failure> {
        let file = self.config.as_deref().map(ConfigFile::load).transpose()?;
        let mut t = self.overrides()?;
        t.extend(extra);
        Ok(resolve(file.as_ref(), &t)?)
    }
}

impl GridFlags {
    fn overrides(&self, unit: &str) -> Table {
        let mut t = Table::new();
        set(&mut t, &format!("start_{unit}"), self.start);
        set(&mut t, &format!("stop_{unit}"), self.stop);
        set(&mut t, "steps", count(self.steps));
        t
    }
}

fn parse_axis(s: &str) -> Result<[f64; 3], Failure> {
    if let Ok(a) = s.parse::<CardinalAxis>() {
        return Ok(a.unit());
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            Failure::Usage(format!(
                "axis `{s}` is neither x/y/z nor a comma-separated vector"
            ))
        })?;
    let [x, y, z] = parts[..] else {
        return Err(Failure::Usage(format!(
            "axis `{s}` must have three components"
        )));
    };
    let n = (x * x + y * y + z * z).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(Failure::Usage(format!("axis `{s}` has zero length")));
    }
    Ok([x / n, y / n, z / n])
}

impl NoiseFlags {
    fn model(&self) -> Result<Option<NoiseModel>, Failure> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Failure::Usage(format!("--noise needs --{name}")))
        };
        let Some(kind) = self.noise else {
            return Ok(None);
        };
        let model = match kind {
            NoiseKind::None => NoiseModel::noiseless(),
            NoiseKind::Sweep => NoiseModel::FixedAxisSweep {
                axis: parse_axis(self.axis.as_deref().unwrap_or("y"))?,
                angle: need(self.angle, "angle")?,
            },
            NoiseKind::Bias => NoiseModel::FixedAxisBias {
                axis: self
                    .axis
                    .as_deref()
                    .unwrap_or("y")
                    .parse()
                    .map_err(|e: Error| Failure::Usage(e.to_string()))?,
                bias: need(self.bias, "bias")?,
                jitter_sigma: self.jitter.unwrap_or(DEFAULT_JITTER_SIGMA),
            },
            NoiseKind::Haar => NoiseModel::HaarAxis {
                angle: need(self.angle, "angle")?,
            },
            NoiseKind::Gaussian => NoiseModel::TwoArmGaussian {
                sigma: need(self.sigma, "sigma")?,
            },
        };
        Ok(Some(model))
    }
}

fn emit(doc: &CsvDoc, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| io_failure(path, e))?;
            doc.write_to(io::BufWriter::new(file))
                .map_err(|e| io_failure(path, e))
        }
        None => doc
            .write_to(io::stdout().lock())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::SweepAlpha {
            common,
            grid,
            threshold,
        } => {
            let mut extra = grid.overrides("deg");
            set(&mut extra, "threshold", threshold);
            let cfg: AlphaSweepConfig = common.load(extra)?;
            let s = sweep::sweep_alpha(&cfg)?;
            eprintln!(
                "crossings at {}: unprotected {:?} deg, protected {:?} deg",
                cfg.threshold, s.crossing_unprotected, s.crossing_protected
            );
            emit(&s.to_csv(&cfg), common.out.as_deref())
        }
        Command::SweepBias {
            common,
            grid,
            threshold,
            jitter,
        } => {
            let mut extra = grid.overrides("rad");
            set(&mut extra, "threshold", threshold);
            set(&mut extra, "jitter_sigma", jitter);
            let cfg: BiasSweepConfig = common.load(extra)?;
            let s = sweep::sweep_bias(&cfg)?;
            for p in &s.panels {
                eprintln!(
                    "axis {}: crossings unprotected {:?} rad, protected {:?} rad",
                    p.axis, p.crossing_unprotected, p.crossing_protected
                );
            }
            emit(&s.to_csv(&cfg), common.out.as_deref())
        }
        Command::SweepPguess { common, grid } => {
            let cfg: PguessSweepConfig = common.load(grid.overrides("deg"))?;
            let s = sweep::sweep_pguess(&cfg)?;
            emit(&s.to_csv(&cfg), common.out.as_deref())
        }
        Command::SweepDistance {
            common,
            grid,
            threshold,
            beta,
            mu,
            y0,
        } => {
            let mut extra = grid.overrides("rad");
            set(&mut extra, "threshold", threshold);
            set(&mut extra, "beta", beta);
            set(&mut extra, "mu", mu);
            set(&mut extra, "y0", y0);
            let cfg: DistanceSweepConfig = common.load(extra)?;
            let s = sweep::sweep_distance(&cfg)?;
            eprintln!(
                "zero crossings: unprotected {:?} rad, protected {:?} rad, ratio {:?}",
                s.zero_crossing_unprotected,
                s.zero_crossing_protected,
                s.crossing_ratio()
            );
            emit(&s.to_csv(&cfg), common.out.as_deref())
        }
        Command::VerifyDesign {
            common,
            tolerance,
            corrupt_element,
        } => {
            let mut extra = Table::new();
            set(&mut extra, "tolerance", tolerance);
            set(&mut extra, "corrupt_element", count(corrupt_element));
            let file = common.config.as_deref().map(ConfigFile::load).transpose()?;
            let mut t = common.overrides()?;
            // verification has no protection modes
            t.remove("protection");
            t.extend(extra);
            let cfg: VerifyConfig = resolve(file.as_ref(), &t)?;
            let v = sweep::verify_design(&cfg)?;
            let mut stdout = io::stdout().lock();
            let report = match &v.table {
                Ok((_, cmp)) => format!("{}{cmp}", v.certification),
                Err(e) => format!(
                    "{}look-up table construction failed: {e}\n",
                    v.certification
                ),
            };
            stdout
                .write_all(report.as_bytes())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
            if let Some(out) = common.out.as_deref() {
                emit(&v.to_csv(&cfg), Some(out))?;
            }
            if v.passed() {
                Ok(())
            } else {
                Err(Failure::Verification(
                    "design verification did not pass".into(),
                ))
            }
        }
        Command::RunProtocol {
            common,
            events,
            noise,
        } => {
            let mut extra = Table::new();
            set(
                &mut extra,
                "events",
                events.map(|p| p.to_string_lossy().into_owned()),
            );
            if let Some(model) = noise.model()? {
                let v = Value::try_from(model).map_err(|e| Failure::Usage(e.to_string()))?;
                extra.insert("noise".into(), v);
            }
            let cfg: ProtocolConfig = common.load(extra)?;
            let runs = sweep::run_protocol(&cfg)?;
            for run in &runs {
                let r = &run.result;
                eprintln!(
                    "{}: qber_z {:.6} +- {:.6} ({} sifted), qber_x {:.6} +- {:.6} ({} sifted)",
                    if run.protected {
                        "protected"
                    } else {
                        "unprotected"
                    },
                    r.qber_z.value,
                    r.qber_z.se,
                    r.tally.sifted_z_pairs,
                    r.qber_x.value,
                    r.qber_x.se,
                    r.tally.sifted_x_pairs
                );
            }
            if let Some(base) = cfg.events.as_deref() {
                let both = runs.len() > 1;
                for run in &runs {
                    if let Some(doc) = sweep::protocol_events_csv(&cfg, run) {
                        emit(&doc, Some(&sweep::events_path(base, run.protected, both)))?;
                    }
                }
            }
            emit(
                &sweep::protocol_summary_csv(&cfg, &runs),
                common.out.as_deref(),
            )
        }
    }
}
