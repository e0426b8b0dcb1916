use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use frame_kahler::catalog::{self, CatalogEntry, Model, Suite};
use frame_kahler::grid::{Axis, Grid};
use frame_kahler::report::VerificationReport;
use frame_kahler::warped::{FamilySpec, WarpedFamily, WarpedModel};

mod curves;

#[derive(Parser)]
#[command(
    name = "frame-kahler",
    version,
    about = "Verify frame-defined Kahler metrics and Kahler-Einstein families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Central,
    Ke,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Alpha0,
    Alphaneg,
    AlphaMinus2,
    Complete,
    Custom,
}

#[derive(clap::Args)]
struct Output {
    /// Report path; CSV goes next to it with a `.csv` extension. Without it, output goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Replaces the tolerance of every residual check.
    #[arg(long)]
    tol: Option<f64>,
    /// Record wall-clock duration in the report (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on a catalog entry or a JSON structure document.
    Verify {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        example: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Axis override `var=lo:hi:n`; repeatable.
        #[arg(long)]
        grid: Vec<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Check a warped Kahler-Einstein family: ODE residual, guards, Einstein verdict, completeness.
    Ke {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Integration constant C.
        #[arg(long = "c", allow_negative_numbers = true, default_value_t = 0.0)]
        c_const: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        a1: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        a2: f64,
        /// Admissible interval `lo:hi`; `inf` and `-inf` allowed.
        #[arg(long, allow_hyphen_values = true)]
        interval: Option<String>,
        /// Finite sample box `lo:hi` inside the interval.
        #[arg(long, allow_hyphen_values = true)]
        sample: Option<String>,
        /// `f(tau)` for the custom family.
        #[arg(long)]
        f: Option<String>,
        /// `w(tau)` for the custom family.
        #[arg(long)]
        w: Option<String>,
        /// Constant fiber twist used for the Einstein verdict.
        #[arg(long, allow_negative_numbers = true)]
        iota_bar: Option<f64>,
        /// Points on the tau grid.
        #[arg(long, default_value_t = 21)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// List or show built-in examples.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    /// Print an entry's summary, or with `--document` a structure document `verify --config` accepts.
    Show {
        id: String,
        #[arg(long)]
        document: bool,
    },
}

/// Writes to stdout, treating a closed pipe as success.
fn out(text: &str) -> Result<()> {
    use std::io::Write;
    let mut o = std::io::stdout().lock();
    match o.write_all(text.as_bytes()).and_then(|_| o.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("{what} `{s}` is not of the form lo:hi"))?;
    let p = |t: &str| {
        t.trim()
            .parse::<f64>()
            .with_context(|| format!("{what} end `{t}` is not a number"))
    };
    Ok((p(a)?, p(b)?))
}

fn load_entry(example: &Option<String>, config: &Option<PathBuf>) -> Result<CatalogEntry> {
    if let Some(id) = example {
        return Ok(catalog::load(id)?);
    }
    let path = config.as_ref().expect("clap enforces one of --example / --config");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (s, grid) = catalog::parse_with_grid(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(CatalogEntry::from_structure(s, grid)?)
}

fn apply_overrides(base: &Grid, overrides: &[String]) -> Result<Grid> {
    let mut g = base.clone();
    for o in overrides {
        g = g.with_override(Axis::parse(o)?)?;
    }
    Ok(g)
}

fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

fn emit(report: &VerificationReport, csv: Option<String>, output: &Output) -> Result<()> {
    let json = report.to_json();
    match (&output.out, output.format) {
        (Some(p), f) => {
            if f != Format::Csv {
                fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?;
            }
            if f != Format::Json {
                let c = csv.ok_or_else(|| anyhow!("no curve data for this run"))?;
                let cp = if f == Format::Csv { p.clone() } else { csv_path(p) };
                fs::write(&cp, c).with_context(|| format!("writing {}", cp.display()))?;
            }
        }
        (None, Format::Json) => out(&(json + "\n"))?,
        (None, Format::Csv) => out(&csv.ok_or_else(|| anyhow!("no curve data for this run"))?)?,
        (None, Format::Both) => bail!("--format both needs --out"),
    }
    Ok(())
}

fn finalize(mut report: VerificationReport, output: &Output, start: Instant) -> VerificationReport {
    if let Some(t) = output.tol {
        report.override_tolerance(t);
    }
    if output.timing {
        report.duration_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    report
}

fn print_failures(report: &VerificationReport) {
    for c in report.failures() {
        eprintln!(
            "FAIL {} residual={} tol={:e}{}",
            c.id,
            c.residual.map_or("n/a".to_string(), |r| format!("{r:e}")),
            c.tolerance,
            c.note.as_ref().map_or(String::new(), |n| format!(" ({n})"))
        );
    }
}

fn verify(
    example: &Option<String>,
    config: &Option<PathBuf>,
    suite: SuiteArg,
    grid: &[String],
    output: &Output,
) -> Result<bool> {
    let start = Instant::now();
    let entry = load_entry(example, config)?;
    let g = apply_overrides(&entry.grid, grid)?;
    let suite = match suite {
        SuiteArg::Central => Suite::Central,
        SuiteArg::Ke => Suite::Ke,
        SuiteArg::All => Suite::All,
    };
    let report = catalog::run_suite(&entry, suite, Some(&g))?;
    let csv = if output.format == Format::Json {
        None
    } else {
        Some(curves::entry_curves(&entry, &g)?)
    };
    let report = finalize(report, output, start);
    emit(&report, csv, output)?;
    print_failures(&report);
    Ok(report.passed)
}

#[allow(clippy::too_many_arguments)]
fn family_spec(
    family: FamilyArg,
    alpha: Option<f64>,
    lambda: Option<f64>,
    c_const: f64,
    a1: f64,
    a2: f64,
    interval: Option<(f64, f64)>,
    sample: Option<(f64, f64)>,
    f: &Option<String>,
    w: &Option<String>,
) -> Result<FamilySpec> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| anyhow!("this family needs --{name}"));
    let tau0 = frame_kahler::warped::TAU0;
    Ok(match family {
        FamilyArg::Alpha0 => {
            let interval = interval.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            FamilySpec::Alpha0 {
                lambda: need(lambda, "lambda")?,
                a1,
                a2,
                interval,
                sample: sample.unwrap_or((-1.0, 1.0)),
            }
        }
        FamilyArg::Alphaneg => FamilySpec::AlphaNeg {
            alpha: need(alpha, "alpha")?,
            interval: interval.unwrap_or((0.0, f64::INFINITY)),
            sample: sample.unwrap_or((0.5, 2.0)),
        },
        FamilyArg::AlphaMinus2 => {
            let i = interval.unwrap_or((tau0 - 0.1, tau0 + 0.1));
            FamilySpec::AlphaMinus2 {
                interval: i,
                sample: sample.unwrap_or(i),
            }
        }
        FamilyArg::Complete => FamilySpec::Complete {
            lambda: need(lambda, "lambda")?,
            sample: sample.unwrap_or((-2.0, 2.0)),
        },
        FamilyArg::Custom => {
            let interval = interval.ok_or_else(|| anyhow!("the custom family needs --interval"))?;
            FamilySpec::Custom {
                alpha: need(alpha, "alpha")?,
                lambda: need(lambda, "lambda")?,
                c: c_const,
                f: f.clone().ok_or_else(|| anyhow!("the custom family needs --f"))?,
                w: w.clone().ok_or_else(|| anyhow!("the custom family needs --w"))?,
                interval,
                sample: sample.unwrap_or(interval),
            }
        }
    })
}

fn ke(fam: &WarpedFamily, iota_bar: Option<f64>, n: usize, output: &Output) -> Result<bool> {
    let start = Instant::now();
    if n < 2 {
        bail!("--n must be at least 2");
    }
    let mut report = catalog::run_family(fam, n);
    let ib = iota_bar.unwrap_or(if fam.alpha == -2.0 { -2.0 } else { -1.0 });
    report.absorb("einstein", catalog::family_einstein(fam, ib, n.min(9))?);
    report.attach("family", &fam.spec);
    let csv = if output.format == Format::Json {
        None
    } else {
        Some(curves::family_curves(fam, n)?)
    };
    let report = finalize(report, output, start);
    emit(&report, csv, output)?;
    print_failures(&report);
    Ok(report.passed)
}

fn show(id: &str, document: bool) -> Result<()> {
    let e = catalog::load(id)?;
    if document {
        let mut doc = catalog::to_document(&e.structure())?;
        doc.grid = Some(e.grid.axes().iter().map(|a| a.to_string()).collect());
        return out(&(serde_json::to_string_pretty(&doc)? + "\n"));
    }
    let mut v = e.summary();
    if let Model::Warped(WarpedModel { family, .. }) = &e.model {
        v["family_spec"] = serde_json::to_value(&family.spec)?;
    }
    out(&(serde_json::to_string_pretty(&v)? + "\n"))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify {
            example,
            config,
            suite,
            grid,
            output,
        } => verify(&example, &config, suite, &grid, &output),
        Command::Ke {
            family,
            alpha,
            lambda,
            c_const,
            a1,
            a2,
            interval,
            sample,
            f,
            w,
            iota_bar,
            n,
            output,
        } => {
            let interval = interval.map(|s| parse_pair(&s, "interval")).transpose()?;
            let sample = sample.map(|s| parse_pair(&s, "sample")).transpose()?;
            let spec = family_spec(family, alpha, lambda, c_const, a1, a2, interval, sample, &f, &w)?;
            let fam = spec.build()?;
            ke(&fam, iota_bar, n, &output)
        }
        Command::Catalog { action } => {
            match action {
                CatalogAction::List => {
                    let text: String = catalog::list()
                        .iter()
                        .map(|(id, d)| format!("{id:<22} {d}\n"))
                        .collect();
                    out(&text)?;
                }
                CatalogAction::Show { id, document } => show(&id, document)?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
