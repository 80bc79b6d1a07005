use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dpim::model::{duffing, two_dof, ForcingSpec, QuadSystem, TwoDofParams};
use dpim::oracle::{duffing_frequency, shooting_frc, ShootingOptions};
use dpim::parametrisation::{Parametrisation, Ratio, Settings, Style};
use dpim::report::{self, fmt17, Summary};
use dpim::romdyn::{backbone, frc, FrcOptions, GenericRom};
use dpim::validity::{estimate, u_max, AngleGrid, Criterion, SearchOptions, SeriesOptions};
use dpim::{Error, Result};

#[derive(Parser, Debug, Serialize)]
#[command(name = "dpim", version, about = "Invariant-manifold reduction with validity estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Compute the expansion and dump its coefficients.
    Parametrise(Common),
    /// Estimate validity limits.
    Validity(ValidityArgs),
    /// Backbone curve of an autonomous expansion.
    Backbone(BackboneArgs),
    /// Forced response curve of the reduced model.
    Frc(SweepArgs),
    /// Full-order reference: exact backbone or shooting response curve.
    Oracle(OracleArgs),
    /// A-priori forcing limit at primary resonance.
    MaxForcing(MaxForcingArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Builtin {
    Duffing,
    Twodof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum StyleArg {
    Cnf,
    Graph,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    #[arg(long, value_enum, default_value = "duffing")]
    system: Builtin,
    /// System file; overrides --system.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = 1.5)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    omega1: f64,
    #[arg(long, default_value_t = 1.57)]
    omega2: f64,
    #[arg(long, default_value_t = 0.0)]
    xi1: f64,
    #[arg(long, default_value_t = 0.0)]
    xi2: f64,
    #[arg(long, default_value_t = 1.0)]
    h1: f64,
    #[arg(long, default_value_t = 1.0)]
    h2: f64,
    /// Forcing amplitude; a builtin system is forced on its master velocity row.
    #[arg(long)]
    kappa: Option<f64>,
    /// Expansion forcing frequency (defaults to the master frequency).
    #[arg(long)]
    forcing_omega: Option<f64>,
    /// Resonance ratio `m:n` with `Omega = (m/n) omega`.
    #[arg(long, default_value = "1:1", value_parser = parse_ratio)]
    ratio: (u32, u32),
    /// Frequency near which the master pair is selected.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, value_enum, default_value = "cnf")]
    style: StyleArg,
    #[arg(long, default_value_t = 15)]
    order: usize,
    #[arg(long)]
    order_na: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ValidityArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated criteria, or `all`.
    #[arg(long, default_value = "all")]
    criteria: String,
    /// Order of the expansion used by the series criteria.
    #[arg(long, default_value_t = 35)]
    series_order: usize,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Angles per period of the slice (default 64 per 2 pi).
    #[arg(long)]
    theta_samples: Option<usize>,
    #[arg(long, default_value_t = 4)]
    phi_samples: usize,
}

#[derive(Args, Debug, Serialize)]
struct BackboneArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1.5)]
    rho_max: f64,
    #[arg(long, default_value_t = 60)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Lower end of the sweep (default 0.85 times the forcing frequency).
    #[arg(long)]
    omega_min: Option<f64>,
    /// Upper end of the sweep (default 1.15 times the forcing frequency).
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long, default_value_t = 61)]
    points: usize,
}

impl SweepArgs {
    fn omegas(&self, sys: &QuadSystem) -> Vec<f64> {
        let centre = sys.forcing().map_or(1.0, |f| f.omega);
        linspace(self.omega_min.unwrap_or(0.85 * centre), self.omega_max.unwrap_or(1.15 * centre), self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum OracleKind {
    /// Exact conservative Duffing frequency versus amplitude.
    Backbone,
    /// Periodic orbits by shooting.
    Frc,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_enum, default_value = "frc")]
    kind: OracleKind,
    /// Largest amplitude of the backbone reference.
    #[arg(long, default_value_t = 1.5)]
    amplitude_max: f64,
}

#[derive(Args, Debug, Serialize)]
struct MaxForcingArgs {
    #[command(flatten)]
    common: Common,
    /// Validity radius of the unforced expansion.
    #[arg(long)]
    rho: f64,
}

fn parse_ratio(s: &str) -> std::result::Result<(u32, u32), String> {
    let (m, n) = s.split_once(':').ok_or("expected m:n")?;
    let m: u32 = m.parse().map_err(|e| format!("{e}"))?;
    let n: u32 = n.parse().map_err(|e| format!("{e}"))?;
    if m == 0 || n == 0 {
        return Err("ratio terms must be positive".into());
    }
    Ok((m, n))
}

impl Common {
    fn base_system(&self) -> Result<QuadSystem> {
        if let Some(path) = &self.json {
            return QuadSystem::load_json(path);
        }
        Ok(match self.system {
            Builtin::Duffing => duffing(self.omega, self.xi, self.h),
            Builtin::Twodof => two_dof(TwoDofParams {
                omega1: self.omega1,
                omega2: self.omega2,
                xi1: self.xi1,
                xi2: self.xi2,
                h1: self.h1,
                h2: self.h2,
            }),
        })
    }

    fn target(&self) -> f64 {
        self.target.unwrap_or(match (self.json.is_some(), self.system) {
            (true, _) => 1.0,
            (false, Builtin::Duffing) => self.omega,
            (false, Builtin::Twodof) => self.omega1,
        })
    }

    /// Base system, forced when `--kappa` is given or the file carries forcing.
    fn system(&self) -> Result<QuadSystem> {
        let sys = self.base_system()?;
        match self.kappa {
            None => Ok(sys),
            Some(kappa) => {
                let row = sys.velocity_row().unwrap_or(sys.displacement_row());
                let omega = self.forcing_omega.unwrap_or(self.target() * self.ratio.0 as f64 / self.ratio.1 as f64);
                sys.base().augment_forcing(&ForcingSpec::cosine(sys.base_dim(), row, omega, kappa))
            }
        }
    }

    fn settings(&self, order: usize) -> Result<Settings> {
        let style = match self.style {
            StyleArg::Cnf => Style::Cnf,
            StyleArg::Graph => Style::Graph,
        };
        let mut s = Settings::new(style, order, self.target()).with_ratio(Ratio::new(self.ratio.0, self.ratio.1)?);
        s.order_na = self.order_na;
        Ok(s)
    }

    fn build(&self, sys: &QuadSystem, order: usize) -> Result<Parametrisation> {
        Parametrisation::build(sys, &self.settings(order)?)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_manifest(cli: &Cli, dir: &Path) -> Result<()> {
    let mut f = create(dir, "manifest.json")?;
    serde_json::to_writer_pretty(&mut f, cli)?;
    Ok(())
}

fn parse_criteria(list: &str) -> Result<Vec<Criterion>> {
    if list == "all" {
        return Ok(vec![
            Criterion::Cauchy,
            Criterion::Dalembert,
            Criterion::Singularity,
            Criterion::Invariance,
            Criterion::Simplified,
        ]);
    }
    list.split(',')
        .map(|s| Criterion::parse(s.trim()).ok_or_else(|| Error::Config(format!("unknown criterion '{s}'"))))
        .collect()
}

fn cmd_parametrise(c: &Common) -> Result<()> {
    let sys = c.system()?;
    let par = c.build(&sys, c.order)?;
    let mut f = create(&c.out, "coefficients.json")?;
    serde_json::to_writer_pretty(&mut f, &par.dump())?;
    println!("{} monomials up to order {}", par.iter().count(), par.order());
    Ok(())
}

fn cmd_validity(a: &ValidityArgs) -> Result<()> {
    let c = &a.common;
    let criteria = parse_criteria(&a.criteria)?;
    let sys = c.system()?;
    let low = c.build(&sys, c.order)?;
    let needs_series = criteria.iter().any(|k| matches!(k, Criterion::Cauchy | Criterion::Dalembert));
    let high = if needs_series { Some(c.build(&sys, a.series_order)?) } else { None };
    let opts = SearchOptions { epsilon: a.eps, ..SearchOptions::default() };
    let series = SeriesOptions::defaults(&sys);
    let n_theta = a.theta_samples.unwrap_or(64 * if low.is_forced() { low.ratio().n as usize } else { 1 });
    let grid = AngleGrid::new(&low, n_theta, a.phi_samples);
    let mut estimates = Vec::new();
    let mut rows = Vec::new();
    println!("{:<18} {:>10} {:>10}  status", "criterion", "rho", "u_max");
    for k in criteria {
        let par = match k {
            Criterion::Cauchy | Criterion::Dalembert => high.as_ref().unwrap_or(&low),
            _ => &low,
        };
        let est = estimate(par, k, &grid, &opts, &series);
        let um = est.rho_star.map(|r| u_max(&low, r, &grid, sys.displacement_row(), c.order));
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:<18} {:>10} {:>10}  {:?}", k.name(), show(est.rho_star), show(um), est.status);
        rows.push(Summary::new(&est, um, a.eps, par.order()));
        estimates.push(est);
    }
    report::write_angle_csv(create(&c.out, "angles.csv")?, &estimates)?;
    report::write_summary_json(create(&c.out, "summary.json")?, &rows)?;
    Ok(())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn cmd_backbone(a: &BackboneArgs) -> Result<()> {
    let c = &a.common;
    let sys = c.base_system()?;
    let par = c.build(&sys, c.order)?;
    let rhos: Vec<f64> = linspace(0.0, a.rho_max, a.points + 1).into_iter().skip(1).collect();
    let pts = backbone(&par, &rhos, c.order)?;
    report::write_backbone_csv(create(&c.out, "backbone.csv")?, &pts)?;
    println!("{} points written", pts.len());
    Ok(())
}

fn cmd_frc(a: &SweepArgs) -> Result<()> {
    let c = &a.common;
    let sys = c.system()?;
    if !sys.is_forced() {
        return Err(Error::Config("frc needs --kappa or a forced system file".into()));
    }
    let par = c.build(&sys, c.order)?;
    let omegas = a.omegas(&sys);
    let pts = frc(&par, &omegas, &FrcOptions::for_par(&par))?;
    report::write_frc_csv(create(&c.out, "frc.csv")?, &pts)?;
    println!("{} fixed points written", pts.iter().map(Vec::len).sum::<usize>());
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let c = &a.sweep.common;
    match a.kind {
        OracleKind::Backbone => {
            if c.json.is_some() || c.system != Builtin::Duffing {
                return Err(Error::Config("the exact backbone is available for the builtin Duffing system".into()));
            }
            let mut w = csv::Writer::from_writer(create(&c.out, "oracle_backbone.csv")?);
            w.write_record(["amplitude", "omega"])?;
            for amp in linspace(0.0, a.amplitude_max, a.sweep.points + 1).into_iter().skip(1) {
                w.write_record([fmt17(amp), fmt17(duffing_frequency(c.omega, c.h, amp)?)])?;
            }
            w.flush()?;
        }
        OracleKind::Frc => {
            let sys = c.system()?;
            if !sys.is_forced() {
                return Err(Error::Config("shooting needs --kappa or a forced system file".into()));
            }
            let omegas = a.sweep.omegas(&sys);
            let opts = ShootingOptions { m: c.ratio.0, ..ShootingOptions::default() };
            let pts = shooting_frc(&sys, &omegas, &opts)?;
            report::write_shooting_csv(create(&c.out, "oracle_frc.csv")?, &pts)?;
        }
    }
    Ok(())
}

fn cmd_max_forcing(a: &MaxForcingArgs) -> Result<()> {
    let c = &a.common;
    let base = c.base_system()?;
    let row = base.velocity_row().unwrap_or(base.displacement_row());
    let omega = c.forcing_omega.unwrap_or(c.target());
    let kappa = c.kappa.unwrap_or(1.0);
    let sys = base.base().augment_forcing(&ForcingSpec::cosine(base.base_dim(), row, omega, kappa))?;
    let settings = Settings { order_na: Some(1), ..c.settings(3)? };
    let par = Parametrisation::build(&sys, &settings)?;
    let rom = GenericRom::extract(&par)?;
    let k = rom.max_forcing(a.rho)?;
    println!("{k:.6}");
    let mut f = create(&c.out, "max_forcing.json")?;
    serde_json::to_writer_pretty(
        &mut f,
        &serde_json::json!({ "rho": a.rho, "kappa_max": k, "branch": rom.branch(), "coefficients": rom }),
    )?;
    Ok(())
}

fn out_dir(cmd: &Command) -> &Path {
    match cmd {
        Command::Parametrise(c) => &c.out,
        Command::Validity(a) => &a.common.out,
        Command::Backbone(a) => &a.common.out,
        Command::Frc(a) => &a.common.out,
        Command::Oracle(a) => &a.sweep.common.out,
        Command::MaxForcing(a) => &a.common.out,
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Parametrise(c) => cmd_parametrise(c)?,
        Command::Validity(a) => cmd_validity(a)?,
        Command::Backbone(a) => cmd_backbone(a)?,
        Command::Frc(a) => cmd_frc(a)?,
        Command::Oracle(a) => cmd_oracle(a)?,
        Command::MaxForcing(a) => cmd_max_forcing(a)?,
    }
    write_manifest(cli, out_dir(&cli.command))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
