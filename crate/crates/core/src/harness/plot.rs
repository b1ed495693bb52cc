use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::field::Grid;
use crate::sparse::DominationReport;

/// Paths written by [`emit_plot_data`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFiles {
    pub profile: PathBuf,
    pub histogram: PathBuf,
}

/// Histogram bins `(lo, hi, count)` of the finite ratios `|Tf| / bound`
/// over `[0, max ratio]`.
pub fn ratio_histogram(report: &DominationReport, bins: usize) -> Vec<(f64, f64, usize)> {
    let ratios: Vec<f64> = (0..report.bound.len()).filter_map(|c| report.ratio(c)).collect();
    if ratios.is_empty() || bins == 0 {
        return Vec::new();
    }
    let top = ratios.iter().copied().fold(0.0f64, f64::max);
    let width = if top > 0.0 { top / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for r in ratios {
        let b = ((r / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, n)| (i as f64 * width, (i + 1) as f64 * width, n))
        .collect()
}

/// Writes `<stem>_profile.csv` (cell centers, `|Tf|` and the bound) and
/// `<stem>_histogram.csv` (64 ratio bins) into `dir`.
pub fn emit_plot_data(report: &DominationReport, grid: &Grid, dir: &Path, stem: &str) -> Result<PlotFiles> {
    fs::create_dir_all(dir)?;
    let dim = grid.dim();
    let mut profile = String::from(if dim == 1 { "x,|Tf|,bound\n" } else { "x,y,|Tf|,bound\n" });
    for c in 0..grid.cell_count() {
        let p = grid.cell_center(c);
        if dim == 1 {
            let _ = writeln!(profile, "{},{:e},{:e}", p[0], report.abs_tf[c], report.bound[c]);
        } else {
            let _ = writeln!(profile, "{},{},{:e},{:e}", p[0], p[1], report.abs_tf[c], report.bound[c]);
        }
    }
    let mut hist = String::from("lo,hi,count\n");
    for (lo, hi, n) in ratio_histogram(report, 64) {
        let _ = writeln!(hist, "{lo:e},{hi:e},{n}");
    }
    let files = PlotFiles {
        profile: dir.join(format!("{stem}_profile.csv")),
        histogram: dir.join(format!("{stem}_histogram.csv")),
    };
    fs::write(&files.profile, profile)?;
    fs::write(&files.histogram, hist)?;
    Ok(files)
}

/// Two-column CSV.
pub fn write_series(path: &Path, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let mut out = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        let _ = writeln!(out, "{a},{b:e}");
    }
    fs::write(path, out)?;
    Ok(())
}
