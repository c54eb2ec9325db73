use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sensbound::harness::oracle::default_deltas;
use sensbound::harness::study::RATE_POINTS;
use sensbound::harness::{
    emit_outputs, fd_oracle, fit_rate, membrane_line_load_variants, parse_csv, run_case, CaseConfig, CaseId,
    OutputFormat, StudyResult,
};
use sensbound::{Error, Result};

#[derive(Parser)]
#[command(name = "sensbound", version, about = "Strict bounds on sensitivity quantities of interest")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mesh study and write CSV and plot data.
    Run(StudyArgs),
    /// Run a mesh study and report fitted convergence rates.
    Converge(StudyArgs),
    /// Compare J(u'_h) on the reference mesh with finite differences.
    Oracle(StudyArgs),
    /// Summarize CSV files written by `run`.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct StudyArgs {
    /// frame-J1 | frame-J2 | membrane-J1 | membrane-J2
    #[arg(long, conflicts_with = "config")]
    case: Option<CaseId>,
    /// TOML case configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh divisions, comma separated.
    #[arg(long, value_delimiter = ',')]
    meshes: Option<Vec<usize>>,
    /// Coupling weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    xi: Option<Vec<f64>>,
    /// Reference mesh divisions.
    #[arg(long)]
    reference: Option<usize>,
    /// Relative solver tolerance.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the plot-data files.
    #[arg(long)]
    no_plot: bool,
}

impl StudyArgs {
    fn config(&self) -> Result<CaseConfig> {
        let mut c = match (&self.config, self.case) {
            (Some(path), _) => CaseConfig::from_file(path)?,
            (None, Some(case)) if case != CaseId::Custom => CaseConfig::preset(case),
            _ => return Err(Error::Config("give --case (not custom) or --config".into())),
        };
        if let Some(m) = &self.meshes {
            c.meshes = m.clone();
        }
        if let Some(x) = &self.xi {
            c.xi = x.clone();
        }
        if let Some(r) = self.reference {
            c.reference = r;
        }
        if let Some(t) = self.rel_tol {
            c.rel_tol = t;
        }
        if let Some(o) = &self.out {
            c.output.dir = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_study(r: &StudyResult) {
    println!("case {}  reference m={}", r.config.case, r.config.reference);
    for (xi, j) in &r.j_ref {
        println!("  J_ref(xi={xi}) = {j:.10e}");
    }
    println!(
        "{:>5} {:>12} {:>5} {:>17} {:>17} {:>17} {:>10} {:>10} {:>6}",
        "m", "h", "xi", "J_h", "lower", "upper", "RE(J_h)", "RE(gap)", "strict"
    );
    for o in &r.outcomes {
        match &o.result {
            Ok(row) => {
                let j = r.reference(row.xi).unwrap_or(f64::NAN);
                println!(
                    "{:>5} {:>12.6e} {:>5} {:>17.10e} {:>17.10e} {:>17.10e} {:>10.3e} {:>10.3e} {:>6}",
                    o.divisions,
                    row.h,
                    row.xi,
                    row.j_h,
                    row.lower,
                    row.upper,
                    row.re_jh,
                    row.re_gap,
                    if row.brackets(j) { "yes" } else { "NO" }
                );
            }
            Err(e) => println!("{:>5} {:>12} {:>5} failed: {e}", o.divisions, "", o.xi),
        }
    }
}

fn print_rates(r: &StudyResult) {
    for rate in &r.rates {
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |s| format!("{s:.3}"));
        println!(
            "xi={}: gap slope {} , RE(J_h) slope {} (finest {RATE_POINTS} meshes)",
            rate.xi,
            show(rate.gap),
            show(rate.re_jh)
        );
    }
}

fn finish(r: &StudyResult) -> ExitCode {
    let v = r.violations();
    if v.is_empty() {
        println!("strict bounding holds on all rows");
        ExitCode::SUCCESS
    } else {
        for line in &v {
            eprintln!("violation: {line}");
        }
        ExitCode::FAILURE
    }
}

fn run(args: &StudyArgs, rates: bool) -> Result<ExitCode> {
    let config = args.config()?;
    let result = run_case(&config)?;
    print_study(&result);
    if rates {
        print_rates(&result);
    }
    let mut formats = vec![OutputFormat::Csv];
    if !args.no_plot {
        formats.push(OutputFormat::PlotData);
    }
    if !result.rows().is_empty() {
        for p in emit_outputs(&result, &config.output_dir(), &formats)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(finish(&result))
}

fn oracle(args: &StudyArgs) -> Result<ExitCode> {
    let config = args.config()?;
    let deltas = default_deltas(&config, config.reference);
    let o = fd_oracle(&config, &deltas)?;
    println!("case {}  mesh m={}", config.case, config.reference);
    for (d, q) in &o.quotients {
        println!("  delta={d:.6e}  central difference {q:.12e}");
    }
    println!("  extrapolated {:.12e}  noise {:.2e}{}", o.extrapolated, o.noise, if o.noisy { " (noisy)" } else { "" });
    println!("  J(u'_h)      {:.12e}  relative difference {:.3e}", o.j_h, o.rel_diff);
    if config.case == CaseId::MembraneJ2 {
        let v = membrane_line_load_variants(config.reference, config.rel_tol)?;
        println!("  line load on the loaded-box boundary: {:.10e}", v.load_boundary);
        println!("  line load on the QoI-box boundary:    {:.10e}", v.qoi_boundary);
    }
    Ok(if o.rel_diff <= 5e-3 && !o.noisy {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn report(files: &[PathBuf]) -> Result<ExitCode> {
    for f in files {
        let rows = parse_csv(&std::fs::read_to_string(f)?)?;
        println!("{}: {} rows", f.display(), rows.len());
        let mut xis: Vec<f64> = rows.iter().map(|r| r.xi).collect();
        xis.sort_by(f64::total_cmp);
        xis.dedup();
        for xi in xis {
            let sel: Vec<_> = rows.iter().filter(|r| r.xi == xi).collect();
            for r in &sel {
                println!(
                    "  h={:.6e} xi={} J_h={:.10e} [{:.10e}, {:.10e}] RE(gap)={:.3e}",
                    r.h, r.xi, r.j_h, r.lower, r.upper, r.re_gap
                );
            }
            let tail = &sel[sel.len().saturating_sub(RATE_POINTS)..];
            let h: Vec<f64> = tail.iter().map(|r| r.h).collect();
            let g: Vec<f64> = tail.iter().map(|r| r.gap).collect();
            match fit_rate(&h, &g) {
                Ok(s) => println!("  xi={xi}: gap slope {s:.3}"),
                Err(_) => println!("  xi={xi}: gap slope n/a"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Run(a) => run(a, false),
        Command::Converge(a) => run(a, true),
        Command::Oracle(a) => oracle(a),
        Command::Report { files } => report(files),
    };
    out.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
