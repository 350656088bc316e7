use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use su2topo::fields::{normalize, phi_to_spinor, DEFAULT_EPS_ZERO};
use su2topo::generators::{
    identity_map_s3, linear_phi_field, quaternion_polynomial_field, quaternion_power_field, random_gauge, random_spinor, random_su2,
    Domain, IDENTITY4,
};
use su2topo::io::{read_field, write_field, Field, FieldIoError};
use su2topo::pipeline::{self, ChernInput, Generator, MethodSelection, RunConfig, DEFAULT_ROOTS};
use su2topo::report::ChargeReport;
use su2topo::{Axis, Grid, SpinorField};

#[derive(Parser)]
#[command(name = "su2topo", version, about = "Topological charges of SU(2) spinor and gauge fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated field to an FLD1 file.
    Generate {
        /// identity, power:N, linear, flipped, poly, square, random-spinor, random-gauge, random-su2
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Split a gauge potential into a + b relative to a spinor.
    Decompose {
        spinor: PathBuf,
        gauge: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Knot charge Q by every selected route, plus Q_FN.
    Cs {
        /// Spinor or phi file.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Chern density and second Chern number.
    Chern {
        /// Spinor, gauge or phi file.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Zero ledger of a phi file.
    Zeros {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Full cross-check on a named generator.
    Verify {
        /// identity, power:N, linear, flipped, poly, square, random
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Chart {
    S3,
    Box,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Trace,
    Spinor,
    Unit,
    All,
}

#[derive(Args)]
struct Common {
    /// Points per axis, comma separated. One value repeats over all axes.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Coordinate range lo:hi, once for all axes or once per axis.
    #[arg(long = "box", value_name = "LO:HI")]
    bounds: Vec<String>,
    #[arg(long, value_enum)]
    chart: Option<Chart>,
    #[arg(long, value_enum, default_value = "all")]
    method: Method,
    /// Tolerance for route agreement and integer rounding.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output field file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV of the computed charges.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, env = "SU2TOPO_THREADS")]
    threads: Option<usize>,
    /// Include wall-clock stage timings in the report.
    #[arg(long)]
    timings: bool,
}

enum Failure {
    Io(FieldIoError),
    Compute(su2topo::Error),
    Usage(String),
}

impl From<su2topo::Error> for Failure {
    fn from(e: su2topo::Error) -> Self {
        match e {
            su2topo::Error::Io(io) => Failure::Io(io),
            other => Failure::Compute(other),
        }
    }
}

impl From<FieldIoError> for Failure {
    fn from(e: FieldIoError) -> Self {
        Failure::Io(e)
    }
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            tolerance: self.tol,
            methods: match self.method {
                Method::Trace => MethodSelection::Trace,
                Method::Spinor => MethodSelection::Spinor,
                Method::Unit => MethodSelection::Unit,
                Method::All => MethodSelection::All,
            },
            seed: self.seed,
            timings: self.timings,
            ..RunConfig::default()
        }
    }

    fn box_grid(&self, default_n: usize) -> Result<Grid, Failure> {
        let counts = match &self.grid {
            None => vec![default_n; 4],
            Some(v) if v.len() == 1 => vec![v[0]; 4],
            Some(v) if (2..=4).contains(&v.len()) => v.clone(),
            Some(v) => return Err(Failure::Usage(format!("--grid takes 1 to 4 values, got {}", v.len()))),
        };
        let ranges = match self.bounds.len() {
            0 => vec![(-1.0, 1.0); counts.len()],
            1 => vec![parse_range(&self.bounds[0])?; counts.len()],
            k if k == counts.len() => self.bounds.iter().map(|b| parse_range(b)).collect::<Result<_, _>>()?,
            k => return Err(Failure::Usage(format!("{k} --box ranges for {} axes", counts.len()))),
        };
        let mut axes = Vec::new();
        for (&n, &(lo, hi)) in counts.iter().zip(&ranges) {
            if n < 2 {
                return Err(Failure::Usage(format!("axis with {n} points")));
            }
            axes.push(Axis::open(n, lo, (hi - lo) / (n - 1) as f64));
        }
        Ok(Grid::new(axes)?)
    }

    fn chart_resolution(&self, default_n: usize) -> Result<usize, Failure> {
        match &self.grid {
            None => Ok(default_n),
            Some(v) if v.iter().all(|&n| n == v[0]) && !v.is_empty() && v.len() <= 3 => Ok(v[0]),
            Some(_) => Err(Failure::Usage("the S^3 chart takes one resolution".into())),
        }
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("bad --box range '{s}', expected lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(hi > lo) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_power(name: &str) -> Option<Result<i32, Failure>> {
    let n = name.strip_prefix("power:")?;
    Some(n.parse().map_err(|_| Failure::Usage(format!("bad power '{n}'"))))
}

fn generated_field(name: &str, common: &Common) -> Result<Field, Failure> {
    let chart = common.chart;
    if let Some(n) = parse_power(name) {
        let n = n?;
        let domain = match chart {
            Some(Chart::Box) => Domain::Box(common.box_grid(17)?),
            _ => Domain::S3Chart(common.chart_resolution(48)?),
        };
        return Ok(Field::Phi(quaternion_power_field(n, &domain)?));
    }
    Ok(match name {
        "identity" => match chart {
            Some(Chart::Box) => Field::Phi(linear_phi_field(IDENTITY4, [0.0; 4], &common.box_grid(17)?)?.0),
            _ => Field::Spinor(identity_map_s3(common.chart_resolution(48)?)?),
        },
        "linear" | "flipped" => {
            let mut m = IDENTITY4;
            if name == "flipped" {
                m[0][0] = -1.0;
            }
            Field::Phi(linear_phi_field(m, [0.0; 4], &common.box_grid(17)?)?.0)
        }
        "poly" => Field::Phi(quaternion_polynomial_field(&DEFAULT_ROOTS, &common.box_grid(24)?)?.0),
        "square" => Field::Phi(quaternion_power_field(2, &Domain::Box(common.box_grid(17)?))?),
        "random-spinor" => Field::Spinor(random_spinor(common.box_grid(9)?, common.seed)),
        "random-gauge" => Field::Gauge(random_gauge(common.box_grid(9)?, common.seed)),
        "random-su2" => Field::Su2(random_su2(common.box_grid(9)?, common.seed)),
        other => return Err(Failure::Usage(format!("unknown generator '{other}'"))),
    })
}

fn named_generator(name: &str, common: &Common) -> Result<Generator, Failure> {
    let chart = common.chart;
    if let Some(n) = parse_power(name) {
        let n = n?;
        return Ok(match chart {
            Some(Chart::Box) => Generator::BoxPower { n, grid: common.box_grid(17)? },
            _ => Generator::Power { n, resolution: common.chart_resolution(64)? },
        });
    }
    Ok(match name {
        "identity" => match chart {
            Some(Chart::Box) => Generator::Linear { grid: common.box_grid(17)?, flipped: false },
            _ => Generator::Identity { resolution: common.chart_resolution(48)? },
        },
        "linear" => Generator::Linear { grid: common.box_grid(17)?, flipped: false },
        "flipped" => Generator::Linear { grid: common.box_grid(17)?, flipped: true },
        "poly" => Generator::Polynomial { grid: common.box_grid(24)?, roots: DEFAULT_ROOTS.to_vec() },
        "square" => Generator::BoxPower { n: 2, grid: common.box_grid(17)? },
        "random" => Generator::Random { grid: common.box_grid(9)? },
        other => return Err(Failure::Usage(format!("unknown generator '{other}'"))),
    })
}

fn spinor_of(field: Field, what: &str) -> Result<SpinorField, Failure> {
    match field {
        Field::Spinor(s) => Ok(s),
        Field::Phi(p) => Ok(normalize(&phi_to_spinor(&p), DEFAULT_EPS_ZERO)?),
        other => Err(Failure::Usage(format!("{what}: expected a spinor or phi field, got {:?}", other.kind()))),
    }
}

fn read(path: &Path) -> Result<Field, Failure> {
    Ok(read_field(path)?)
}

fn write_table(path: &Path, report: &ChargeReport) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Io(FieldIoError::Io(e.into())))?;
    let mut rows = vec![vec!["quantity".to_string(), "method".into(), "value".into(), "nearest".into(), "deviation".into(), "grid".into()]];
    for r in &report.results {
        let grid = r.grid.axes.iter().map(|a| a.n.to_string()).collect::<Vec<_>>().join("x");
        rows.push(vec![r.quantity.clone(), r.method.clone(), format!("{:e}", r.value), r.nearest.to_string(), format!("{:e}", r.deviation), grid]);
    }
    for row in rows {
        w.write_record(&row).map_err(|e| Failure::Io(FieldIoError::Io(e.into())))?;
    }
    w.flush().map_err(|e| Failure::Io(FieldIoError::Io(e)))?;
    Ok(())
}

fn emit(report: &ChargeReport, common: &Common) -> Result<bool, Failure> {
    let json = report.to_json();
    match &common.report {
        Some(p) => std::fs::write(p, json).map_err(|e| Failure::Io(FieldIoError::Io(e)))?,
        None => print!("{json}"),
    }
    if let Some(t) = &common.table {
        write_table(t, report)?;
    }
    let color = std::env::var_os("SU2TOPO_NO_COLOR").is_none() && std::io::stderr().is_terminal();
    for (line, check) in report.summary_lines().iter().zip(&report.checks) {
        if color {
            let code = if check.pass { 32 } else { 31 };
            eprintln!("\x1b[{code}m{line}\x1b[0m");
        } else {
            eprintln!("{line}");
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(report.pass)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let (common, report) = match cli.command {
        Command::Generate { name, common } => {
            let field = generated_field(&name, &common)?;
            let out = common.out.clone().ok_or_else(|| Failure::Usage("generate needs --out".into()))?;
            write_field(&out, &field)?;
            return Ok(true);
        }
        Command::Decompose { spinor, gauge, common } => {
            let psi = spinor_of(read(&spinor)?, "spinor")?;
            let gauge_field = match read(&gauge)? {
                Field::Gauge(g) => g,
                other => return Err(Failure::Usage(format!("gauge: expected a gauge field, got {:?}", other.kind()))),
            };
            let name = format!("{} {}", spinor.display(), gauge.display());
            let r = pipeline::decompose_report(&psi, &gauge_field, &name, &common.config())?;
            (common, r)
        }
        Command::Cs { input, common } => {
            let psi = spinor_of(read(&input)?, "input")?;
            let r = pipeline::cs_report(&psi, &input.display().to_string(), &common.config())?;
            (common, r)
        }
        Command::Chern { input, common } => {
            let field = read(&input)?;
            let name = input.display().to_string();
            let cfg = common.config();
            let r = match (&field, common.method) {
                (Field::Phi(p), Method::Spinor) => {
                    let psi = normalize(&phi_to_spinor(p), DEFAULT_EPS_ZERO)?;
                    pipeline::chern_report(ChernInput::Spinor(&psi), &name, &cfg)?
                }
                (Field::Phi(p), Method::Unit | Method::All) => pipeline::chern_report(ChernInput::Phi(p), &name, &cfg)?,
                (Field::Spinor(s), Method::Spinor | Method::All) => pipeline::chern_report(ChernInput::Spinor(s), &name, &cfg)?,
                (Field::Gauge(g), Method::Trace | Method::All) => pipeline::chern_report(ChernInput::Gauge(g), &name, &cfg)?,
                (f, _) => return Err(Failure::Usage(format!("method does not apply to a {:?} field", f.kind()))),
            };
            (common, r)
        }
        Command::Zeros { input, common } => {
            let phi = match read(&input)? {
                Field::Phi(p) => p,
                other => return Err(Failure::Usage(format!("expected a phi field, got {:?}", other.kind()))),
            };
            let r = pipeline::zeros_report(&phi, &input.display().to_string(), &common.config())?;
            (common, r)
        }
        Command::Verify { name, common } => {
            let generator = named_generator(&name, &common)?;
            let r = pipeline::verify(&generator, &common.config())?;
            (common, r)
        }
    };
    emit(&report, &common)
}

fn threads(cli: &Cli) -> Option<usize> {
    match &cli.command {
        Command::Generate { common, .. }
        | Command::Decompose { common, .. }
        | Command::Cs { common, .. }
        | Command::Chern { common, .. }
        | Command::Zeros { common, .. }
        | Command::Verify { common, .. } => common.threads,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = threads(&cli) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
