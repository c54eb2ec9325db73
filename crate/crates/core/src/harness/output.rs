//! CSV and plot-data files of a study.
//!
//! CSV columns: `h,xi,J_h,lower,upper,gap,re_Jh,re_gap,solver_res,equil_res`,
//! one row per successful `(h, xi)` point, floats with 17 significant
//! digits.
//!
//! Plot data: whitespace-separated `x y` pairs, one block per curve headed
//! by `# <curve> xi=<xi>` and separated by two blank lines. `<prefix>_values.dat`
//! holds `J_h`, `upper` and `lower` against `h`; `<prefix>_re.dat` holds
//! `RE(J_h)` and `RE(gap)` against `h` for log-log axes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::study::{StudyResult, StudyRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "h", "xi", "J_h", "lower", "upper", "gap", "re_Jh", "re_gap", "solver_res", "equil_res",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    PlotData,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn row_fields(r: &StudyRow) -> [f64; 10] {
    [
        r.h, r.xi, r.j_h, r.lower, r.upper, r.gap, r.re_jh, r.re_gap, r.solver_res, r.equil_res,
    ]
}

pub fn csv_string(rows: &[StudyRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(row_fields(r).map(fmt)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<StudyRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Io(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidInput(format!("unexpected CSV header: {:?}", header)));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number '{s}': {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != CSV_HEADER.len() {
            return Err(Error::InvalidInput("short CSV record".into()));
        }
        rows.push(StudyRow {
            h: v[0],
            xi: v[1],
            j_h: v[2],
            lower: v[3],
            upper: v[4],
            gap: v[5],
            re_jh: v[6],
            re_gap: v[7],
            solver_res: v[8],
            equil_res: v[9],
        });
    }
    Ok(rows)
}

fn xi_values(rows: &[StudyRow]) -> Vec<f64> {
    let mut xs: Vec<f64> = Vec::new();
    for r in rows {
        if !xs.contains(&r.xi) {
            xs.push(r.xi);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs
}

fn series(rows: &[StudyRow], curves: &[(&str, fn(&StudyRow) -> f64)]) -> String {
    let mut s = String::new();
    for xi in xi_values(rows) {
        for (name, get) in curves {
            if !s.is_empty() {
                s.push_str("\n\n");
            }
            let _ = writeln!(s, "# {name} xi={xi}");
            for r in rows.iter().filter(|r| r.xi == xi) {
                let _ = writeln!(s, "{} {}", fmt(r.h), fmt(get(r)));
            }
        }
    }
    s
}

/// `(file suffix, contents)` of the plot-data files.
pub fn plot_data(rows: &[StudyRow]) -> Vec<(&'static str, String)> {
    vec![
        (
            "values.dat",
            series(rows, &[("J_h", |r| r.j_h), ("upper", |r| r.upper), ("lower", |r| r.lower)]),
        ),
        ("re.dat", series(rows, &[("RE(J_h)", |r| r.re_jh), ("RE(gap)", |r| r.re_gap)])),
    ]
}

/// Writes the requested files into `dir` (created if missing) and returns
/// their paths.
pub fn emit_outputs(result: &StudyResult, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    let rows = result.rows();
    if rows.is_empty() {
        return Err(Error::InvalidInput("study has no rows to write".into()));
    }
    std::fs::create_dir_all(dir)?;
    let prefix = result.config.output_prefix();
    let mut paths = Vec::new();
    for f in formats {
        match f {
            OutputFormat::Csv => {
                let p = dir.join(format!("{prefix}.csv"));
                std::fs::write(&p, csv_string(&rows)?)?;
                paths.push(p);
            }
            OutputFormat::PlotData => {
                for (suffix, text) in plot_data(&rows) {
                    let p = dir.join(format!("{prefix}_{suffix}"));
                    std::fs::write(&p, text)?;
                    paths.push(p);
                }
            }
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<StudyRow> {
        (1..=3)
            .map(|i| {
                let h = 1.0 / f64::from(1 << i);
                StudyRow {
                    h,
                    xi: 1.0,
                    j_h: -0.1 / 3.0 + h,
                    lower: -1.0 / 7.0,
                    upper: 0.1 + h * h,
                    gap: std::f64::consts::PI * h.powi(4),
                    re_jh: 1e-300 * h,
                    re_gap: 2.0 / 3.0,
                    solver_res: 1.5e-16,
                    equil_res: 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let rows = sample();
        let text = csv_string(&rows).unwrap();
        assert!(text.starts_with("h,xi,J_h,lower,upper,gap,re_Jh,re_gap,solver_res,equil_res\n"));
        let back = parse_csv(&text).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(row_fields(a).map(f64::to_bits), row_fields(b).map(f64::to_bits));
        }
    }

    #[test]
    fn values_file_has_three_series() {
        let files = plot_data(&sample());
        assert_eq!(files[0].1.matches("# ").count(), 3);
        assert_eq!(files[1].1.matches("# ").count(), 2);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
    }
}
