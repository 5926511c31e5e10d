//! `hhd`: generate fixtures, decompose fields, run the verification suite
//! and export slices for plotting.
//!
//! Exit status: 0 pass, 1 check failure, 2 usage error, 3 data or format
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use helmholtz_nd::decompose::{decompose_with, DecompositionResult, ResidualReport, RotationMode};
use helmholtz_nd::fixtures::{make_fixture, FixtureKind};
use helmholtz_nd::grid::{pairs, GridDescriptor};
use helmholtz_nd::io::{read_field, write_field, Field};
use helmholtz_nd::newton::{Backend, NewtonOperator, QuadratureConfig, SelfCell};
use helmholtz_nd::verify::{
    assess_decomposition, reports_to_json, run_all, CheckReport, Status, ToleranceClass,
    Tolerances, VerifyPlan,
};
use helmholtz_nd::{GridSpec, VectorField};

#[derive(Debug, Parser)]
#[command(
    name = "hhd",
    version,
    about = "Helmholtz decomposition of sampled vector fields in n dimensions"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a fixture field and its analytic references.
    Generate(GenerateArgs),
    /// Split a field into gradient and rotation parts.
    Decompose(DecomposeArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Write an axis-aligned slice of a field as CSV.
    ExportCsv(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureArg {
    PureGradient,
    PureRotation,
    Mixed,
    LinearRotation,
    RandomSmooth,
}

impl From<FixtureArg> for FixtureKind {
    fn from(f: FixtureArg) -> Self {
        match f {
            FixtureArg::PureGradient => FixtureKind::PureGradient,
            FixtureArg::PureRotation => FixtureKind::PureRotation,
            FixtureArg::Mixed => FixtureKind::Mixed,
            FixtureArg::LinearRotation => FixtureKind::LinearRotation,
            FixtureArg::RandomSmooth => FixtureKind::RandomSmooth,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelfCellArg {
    Exclude,
    Ball,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Direct,
    Fft,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassArg {
    Stencil,
    Quadrature,
}

/// Per-axis `lo:hi` bounds; a single pair applies to every axis.
#[derive(Debug, Clone)]
struct Bounds(Vec<(f64, f64)>);

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    s.split(',')
        .map(|pair| {
            let (lo, hi) = pair
                .split_once(':')
                .ok_or_else(|| format!("`{pair}` is not of the form lo:hi"))?;
            let lo: f64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
            let hi: f64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
            Ok((lo, hi))
        })
        .collect::<Result<_, _>>()
        .map(Bounds)
}

/// Node counts per axis.
#[derive(Debug, Clone)]
struct Dims(Vec<usize>);

fn parse_dims(s: &str) -> Result<Dims, String> {
    s.split(',')
        .map(|d| d.trim().parse::<usize>().map_err(|e| format!("`{d}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Dims)
}

/// Rotation plane given with one-based axes.
#[derive(Debug, Clone, Copy)]
struct Plane(usize, usize);

fn parse_plane(s: &str) -> Result<Plane, String> {
    let (i, j) = s.split_once(',').ok_or("expected i,j")?;
    let i: usize = i.trim().parse().map_err(|e| format!("`{i}`: {e}"))?;
    let j: usize = j.trim().parse().map_err(|e| format!("`{j}`: {e}"))?;
    if i == 0 || j == 0 {
        return Err("axes are numbered from 1".into());
    }
    if i == j {
        return Err(format!("({i}, {i}) is not a plane"));
    }
    Ok(Plane(i - 1, j - 1))
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Nodes per axis, e.g. `129,129`.
    #[arg(long, default_value = "129,129", value_parser = parse_dims)]
    grid: Dims,
    /// Bounds per axis, `lo:hi[,lo:hi...]`.
    #[arg(long, default_value = "-6:6", value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Bounds,
}

fn build_grid(dims: &Dims, bounds: &Bounds) -> Result<GridSpec, Failure> {
    let n = dims.0.len();
    let b = match bounds.0.len() {
        1 => vec![bounds.0[0]; n],
        m if m == n => bounds.0.clone(),
        m => {
            return Err(Failure::Usage(format!(
                "{m} bounds given for a {n}-dimensional grid"
            )))
        }
    };
    GridSpec::new(
        dims.0.clone(),
        b.iter().map(|p| p.0).collect(),
        b.iter().map(|p| p.1).collect(),
    )
    .map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Debug, Args)]
struct FixtureArgs {
    /// Rotation plane, one-based axes.
    #[arg(long, value_parser = parse_plane)]
    plane: Option<Plane>,
    /// Seed for random fixtures.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct QuadArgs {
    #[arg(long, value_enum, default_value = "ball")]
    self_cell: SelfCellArg,
    #[arg(long, value_enum, default_value = "direct")]
    backend: BackendArg,
}

impl QuadArgs {
    fn config(&self) -> QuadratureConfig {
        QuadratureConfig {
            self_cell: match self.self_cell {
                SelfCellArg::Exclude => SelfCell::Exclude,
                SelfCellArg::Ball => SelfCell::Ball,
            },
            backend: match self.backend {
                BackendArg::Direct => Backend::Direct,
                BackendArg::Fft => Backend::Fft,
            },
            ..QuadratureConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    fixture: FixtureArg,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    fixture_args: FixtureArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    /// HHNF1 vector field to decompose.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    input: Option<PathBuf>,
    /// Decompose a generated fixture instead of a file.
    #[arg(long, value_enum)]
    fixture: Option<FixtureArg>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    fixture_args: FixtureArgs,
    /// Sample the fixture on a grid this many times larger (same spacing) and
    /// crop results back. Reduces truncation error at the cost of runtime.
    #[arg(long)]
    padding: Option<f64>,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long, value_enum, default_value = "quadrature")]
    tolerance_class: ClassArg,
    /// Take r = f - g and skip the rotation potential.
    #[arg(long)]
    skip_rotation: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Grid to verify on; repeat for several grids.
    #[arg(long = "grid", default_value = "129,129", value_parser = parse_dims)]
    grids: Vec<Dims>,
    #[arg(long, default_value = "-6:6", value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Bounds,
    /// Fixtures to run, comma separated; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    fixtures: Vec<FixtureArg>,
    #[command(flatten)]
    fixture_args: FixtureArgs,
    #[command(flatten)]
    quad: QuadArgs,
    /// Skip the refinement pass of the quadrature checks.
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    input: PathBuf,
    /// CSV file to write.
    #[arg(long)]
    out: PathBuf,
    /// Axes spanning the slice, one-based.
    #[arg(long, default_value = "1,2", value_parser = parse_plane)]
    plane: Plane,
    /// Node indices (zero-based) of the remaining axes, in axis order;
    /// the central node by default.
    #[arg(long, value_delimiter = ',')]
    at: Vec<usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(helmholtz_nd::Error),
    Checks,
}

impl From<helmholtz_nd::Error> for Failure {
    fn from(e: helmholtz_nd::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    inputs: Vec<String>,
    outputs: Vec<String>,
    grid: GridDescriptor,
    quadrature: Option<QuadratureConfig>,
    fixture: Option<String>,
    seed: Option<u64>,
    /// One-based axes.
    plane: Option<(usize, usize)>,
    padding: Option<f64>,
    tool_version: &'static str,
    wall_clock_seconds: f64,
}

impl RunManifest {
    fn new(command: &'static str, grid: &GridSpec) -> Self {
        RunManifest {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            grid: grid.clone().into(),
            quadrature: None,
            fixture: None,
            seed: None,
            plane: None,
            padding: None,
            tool_version: env!("CARGO_PKG_VERSION"),
            wall_clock_seconds: 0.0,
        }
    }

    fn write(mut self, dir: &Path, start: Instant) -> Result<(), Failure> {
        self.wall_clock_seconds = start.elapsed().as_secs_f64();
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir,
            names: Vec::new(),
        })
    }

    fn field(&mut self, name: &str, field: impl Into<Field>) -> Result<(), Failure> {
        write_field(&field.into(), self.dir.join(name))?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        fs::write(self.dir.join(name), text)?;
        self.names.push(name.to_string());
        Ok(())
    }
}

fn plane_one_based(p: Option<Plane>) -> Option<(usize, usize)> {
    p.map(|Plane(i, j)| (i + 1, j + 1))
}

fn fixture_plane(p: Option<Plane>, n: usize) -> Result<Option<(usize, usize)>, Failure> {
    match p {
        Some(Plane(i, j)) if i >= n || j >= n => Err(Failure::Usage(format!(
            "plane {},{} outside a {n}-dimensional grid",
            i + 1,
            j + 1
        ))),
        Some(Plane(i, j)) => Ok(Some((i, j))),
        None => Ok(None),
    }
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let grid = build_grid(&args.grid.grid, &args.grid.bounds)?;
    let kind = FixtureKind::from(args.fixture);
    let plane = fixture_plane(args.fixture_args.plane, grid.ndim())?;
    let fx = make_fixture(kind, &grid, plane, args.fixture_args.seed)?;
    let mut out = Outputs::new(&args.out)?;
    out.field("field.hhnf", fx.field)?;
    let refs = fx.references;
    if let Some(g) = refs.gamma {
        out.field("gamma_exact.hhnf", g)?;
    }
    if let Some(r) = refs.rho {
        out.field("rho_exact.hhnf", r)?;
    }
    if let Some(g) = refs.gradient {
        out.field("gradient_exact.hhnf", g)?;
    }
    if let Some(r) = refs.rotation {
        out.field("rotation_exact.hhnf", r)?;
    }
    let mut m = RunManifest::new("generate", &grid);
    m.outputs = out.names;
    m.fixture = Some(kind.name().into());
    m.seed = fx.seed;
    m.plane = Some((fx.plane.0 + 1, fx.plane.1 + 1));
    m.write(&args.out, start)
}

#[derive(Serialize)]
struct DecomposeReport<'a> {
    status: Status,
    check: &'a CheckReport,
    residuals: &'a ResidualReport,
}

/// Crops every output of a decomposition on a padded grid back to `target`.
fn crop_result(
    d: DecompositionResult,
    f: &VectorField,
    target: &GridSpec,
    offset: &[usize],
) -> Result<(VectorField, DecompositionResult), Failure> {
    let f = f.crop(target, offset)?;
    let gradient = d.gradient.crop(target, offset)?;
    let rotation = d.rotation.crop(target, offset)?;
    let residual = d.residual.crop(target, offset)?;
    let report = ResidualReport::new(&f, &gradient, &rotation, &residual);
    let density = helmholtz_nd::DensityBundle::new(
        d.density.gamma.crop(target, offset)?,
        d.density.rho.crop(target, offset)?,
    )?;
    let cropped = DecompositionResult {
        gradient,
        rotation,
        source_potential: d.source_potential.crop(target, offset)?,
        rotation_potential: d
            .rotation_potential
            .map(|r| r.crop(target, offset))
            .transpose()?,
        density,
        residual,
        report,
    };
    Ok((f, cropped))
}

fn decompose(args: DecomposeArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = args.quad.config();
    let mode = if args.skip_rotation {
        RotationMode::Skip
    } else {
        RotationMode::Full
    };
    let class = match args.tolerance_class {
        ClassArg::Stencil => ToleranceClass::Stencil,
        ClassArg::Quadrature => ToleranceClass::Quadrature,
    };
    let tol = Tolerances::default();
    if args.input.is_some() && args.padding.is_some() {
        return Err(Failure::Usage("--padding applies only to --fixture".into()));
    }
    let padding = args.padding.unwrap_or(1.0);
    let (f, d, grid, mut manifest, refs) = match (&args.input, args.fixture) {
        (Some(path), _) => {
            let f = match read_field(path)? {
                Field::Vector(v) => v,
                other => {
                    return Err(Failure::Data(helmholtz_nd::Error::Format {
                        offset: 0,
                        message: format!("expected a vector field, found {}", other.kind()),
                    }))
                }
            };
            let grid = f.grid().clone();
            let op = NewtonOperator::new(&grid, cfg)?;
            let d = decompose_with(&op, &f, mode)?;
            let mut m = RunManifest::new("decompose", &grid);
            m.inputs.push(path.display().to_string());
            (f, d, grid, m, None)
        }
        (None, Some(fixture)) => {
            let grid = build_grid(&args.grid.grid, &args.grid.bounds)?;
            let kind = FixtureKind::from(fixture);
            let plane = fixture_plane(args.fixture_args.plane, grid.ndim())?;
            let (big, offset) = grid
                .padded(padding)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let fx = make_fixture(kind, &big, plane, args.fixture_args.seed)?;
            let op = NewtonOperator::new(&big, cfg)?;
            let d = decompose_with(&op, &fx.field, mode)?;
            let (f, d) = crop_result(d, &fx.field, &grid, &offset)?;
            let small = make_fixture(kind, &grid, plane, args.fixture_args.seed)?;
            let mut m = RunManifest::new("decompose", &grid);
            m.fixture = Some(kind.name().into());
            m.seed = fx.seed;
            m.plane = Some((fx.plane.0 + 1, fx.plane.1 + 1));
            m.padding = Some(padding);
            (f, d, grid, m, Some(small.references))
        }
        (None, None) => {
            return Err(Failure::Usage(
                "either --input or --fixture is required".into(),
            ))
        }
    };
    let refs = refs.filter(|r| r.gradient.is_some());
    let check = assess_decomposition(&f, &d, class, refs.as_ref(), &tol)?;
    let status = check.status;
    let mut out = Outputs::new(&args.out)?;
    out.field("gradient.hhnf", d.gradient)?;
    out.field("rotation.hhnf", d.rotation)?;
    out.field("source_potential.hhnf", d.source_potential)?;
    if let Some(r) = d.rotation_potential {
        out.field("rotation_potential.hhnf", r)?;
    }
    let report = DecomposeReport {
        status,
        check: &check,
        residuals: &d.report,
    };
    out.json(
        "report.json",
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    manifest.outputs = out.names;
    manifest.quadrature = Some(cfg);
    manifest.write(&args.out, start)?;
    log::info!("decomposition on {:?}: {:?}", grid.dims(), status);
    if status == Status::Fail {
        return Err(Failure::Checks);
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let grids = args
        .grids
        .iter()
        .map(|d| build_grid(d, &args.bounds))
        .collect::<Result<Vec<_>, _>>()?;
    let fixtures: Vec<FixtureKind> = if args.fixtures.is_empty() {
        FixtureKind::ALL.to_vec()
    } else {
        args.fixtures.iter().map(|&f| f.into()).collect()
    };
    let min_n = grids.iter().map(GridSpec::ndim).min().unwrap_or(2);
    let plane = fixture_plane(args.fixture_args.plane, min_n)?;
    let plan = VerifyPlan {
        plane,
        seed: args.fixture_args.seed,
        quadrature: args.quad.config(),
        refine: !args.no_refine,
        ..VerifyPlan::new(grids.clone(), fixtures)
    };
    let reports = run_all(&plan)?;
    let mut out = Outputs::new(&args.out)?;
    out.json("report.json", &reports_to_json(&reports))?;
    for r in &reports {
        let tag = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        println!("{tag:4} {:40} {:?} {}", r.name, r.grid.dims, r.fixture);
    }
    let mut m = RunManifest::new("verify", &grids[0]);
    m.outputs = out.names;
    m.quadrature = Some(plan.quadrature);
    m.seed = Some(plan.seed);
    m.plane = plane_one_based(args.fixture_args.plane);
    m.write(&args.out, start)?;
    if reports.iter().any(|r| r.status == Status::Fail) {
        return Err(Failure::Checks);
    }
    Ok(())
}

fn component_names(field: &Field) -> Vec<String> {
    let n = field.grid().ndim();
    match field {
        Field::Scalar(_) => vec!["value".into()],
        Field::Vector(_) => (1..=n).map(|k| format!("f{k}")).collect(),
        Field::Antisym(_) => pairs(n)
            .map(|(i, j)| format!("R{}{}", i + 1, j + 1))
            .collect(),
    }
}

fn export_csv(args: ExportArgs) -> Result<(), Failure> {
    let field = read_field(&args.input)?;
    let grid = field.grid().clone();
    let n = grid.ndim();
    let Plane(a, b) = args.plane;
    if a >= n || b >= n {
        return Err(Failure::Usage(format!(
            "plane {},{} outside {n} dimensions",
            a + 1,
            b + 1
        )));
    }
    let others: Vec<usize> = (0..n).filter(|&k| k != a && k != b).collect();
    let fixed: Vec<usize> = if args.at.is_empty() {
        others.iter().map(|&k| grid.dims()[k] / 2).collect()
    } else if args.at.len() == others.len() {
        args.at.clone()
    } else {
        return Err(Failure::Usage(format!(
            "--at needs {} indices, got {}",
            others.len(),
            args.at.len()
        )));
    };
    for (&k, &i) in others.iter().zip(&fixed) {
        if i >= grid.dims()[k] {
            return Err(Failure::Usage(format!(
                "--at index {i} outside axis {} of {} nodes",
                k + 1,
                grid.dims()[k]
            )));
        }
    }
    let mut writer = csv::Writer::from_path(&args.out).map_err(csv_error)?;
    let mut header: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    header.extend(component_names(&field));
    writer.write_record(&header).map_err(csv_error)?;
    let comps = field.components();
    let mut idx = vec![0usize; n];
    for (&k, &i) in others.iter().zip(&fixed) {
        idx[k] = i;
    }
    for ia in 0..grid.dims()[a] {
        for ib in 0..grid.dims()[b] {
            idx[a] = ia;
            idx[b] = ib;
            let p = grid.flat_index(&idx)?;
            let mut row: Vec<String> = (0..n).map(|k| grid.coord(k, idx[k]).to_string()).collect();
            row.extend(comps.iter().map(|c| c.values()[p].to_string()));
            writer.write_record(&row).map_err(csv_error)?;
        }
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Failure {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => Failure::Data(helmholtz_nd::Error::Io(std::io::Error::other(format!(
            "{other:?}"
        )))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Decompose(a) => decompose(a),
        Command::Verify(a) => verify(a),
        Command::ExportCsv(a) => export_csv(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("hhd: one or more checks failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("hhd: usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("hhd: {e}");
            ExitCode::from(3)
        }
    }
}
