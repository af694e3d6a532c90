//! Report tables rendered from run records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::profile::Mixture;
use crate::records::{method_slug, trace_csv, StoredRecord};
use crate::stats::{
    delta, generator_frequency, rank_sum_test_with, shape_report, summarize_method, Alternative,
    MethodSummary, FREQUENCY_THRESHOLD_PCT,
};

/// p-values below this are marked significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;
pub const SIGNIFICANCE_MARK: &str = "⋄";

const METHOD_ORDER: [&str; 8] = [
    "GA-NREO", "GA-REO", "GA-REO▼", "RRS", "RRS▼", "RNRS", "IG", "RG",
];

fn method_rank(label: &str) -> usize {
    METHOD_ORDER
        .iter()
        .position(|m| *m == label)
        .unwrap_or(METHOD_ORDER.len())
}

/// Records grouped by (method, size) in report order, runs sorted by index.
pub fn group_cells(records: &[StoredRecord]) -> Vec<((String, usize), Vec<&StoredRecord>)> {
    let mut cells: BTreeMap<(usize, String, usize), Vec<&StoredRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((method_rank(&r.method), r.method.clone(), r.size))
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((_, m, s), mut v)| {
            v.sort_by_key(|r| r.run);
            ((m, s), v)
        })
        .collect()
}

pub fn summaries(records: &[StoredRecord]) -> Result<Vec<MethodSummary>> {
    group_cells(records)
        .into_iter()
        .map(|((method, size), runs)| {
            let values: Vec<f64> = runs.iter().map(|r| r.best_tvd).collect();
            summarize_method(&method, size, &values)
        })
        .collect()
}

/// The run whose best TVD is the batch median (lower median for even
/// counts, lowest run index among ties).
pub fn median_run<'a>(runs: &[&'a StoredRecord]) -> &'a StoredRecord {
    let mut sorted = runs.to_vec();
    sorted.sort_by(|a, b| a.best_tvd.total_cmp(&b.best_tvd).then(a.run.cmp(&b.run)));
    sorted[(sorted.len() - 1) / 2]
}

fn decoded(runs: &[&StoredRecord]) -> Vec<Mixture> {
    runs.iter().filter_map(|r| r.genome.decode().ok()).collect()
}

/// Writes summary.csv, deltas.csv, shapes.csv, generator_freq.csv and one
/// median_trace_<method>_s<size>.csv per cell into `dir`.
pub fn render_reports(
    records: &[StoredRecord],
    dir: &Path,
    alternative: Alternative,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let cells = group_cells(records);
    let mut files = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        files.push(path);
        Ok(())
    };

    let mut summary = String::from("method,size,runs,min,median,iqr,max,mean,std,mean_evaluations\n");
    for ((method, size), runs) in &cells {
        let values: Vec<f64> = runs.iter().map(|r| r.best_tvd).collect();
        let s = summarize_method(method, *size, &values)?.summary;
        let evals = runs.iter().map(|r| r.evaluations as f64).sum::<f64>() / runs.len() as f64;
        let _ = writeln!(
            summary,
            "{method},{size},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.1}",
            s.count, s.min, s.median, s.iqr, s.max, s.mean, s.std, evals
        );
    }
    emit("summary.csv".into(), summary)?;

    let mut deltas =
        String::from("size,method_a,method_b,median_a,median_b,delta_pct,u,p_value,test,significant\n");
    let mut by_size: BTreeMap<usize, Vec<(&str, Vec<f64>)>> = BTreeMap::new();
    for ((method, size), runs) in &cells {
        by_size
            .entry(*size)
            .or_default()
            .push((method.as_str(), runs.iter().map(|r| r.best_tvd).collect()));
    }
    for (size, methods) in &by_size {
        for (i, (ma, va)) in methods.iter().enumerate() {
            for (mb, vb) in &methods[i + 1..] {
                let med_a = summarize_method(ma, *size, va)?.summary.median;
                let med_b = summarize_method(mb, *size, vb)?.summary.median;
                let d = match delta(med_a, med_b) {
                    Ok(d) => format!("{d:.2}"),
                    Err(_) => "undefined".into(),
                };
                let test = rank_sum_test_with(va, vb, alternative)?;
                let mark = if test.p_value < SIGNIFICANCE_LEVEL {
                    SIGNIFICANCE_MARK
                } else {
                    ""
                };
                let _ = writeln!(
                    deltas,
                    "{size},{ma},{mb},{med_a:.6},{med_b:.6},{d},{},{:.6e},mann-whitney-{alternative},{mark}",
                    test.u, test.p_value
                );
            }
        }
    }
    emit("deltas.csv".into(), deltas)?;

    let mut shapes = String::from("method,size,ensemble_size,percent\n");
    let mut freq = String::from("method,size,generator_id,percent\n");
    for ((method, size), runs) in &cells {
        let mixtures = decoded(runs);
        for (k, pct) in shape_report(&mixtures) {
            let _ = writeln!(shapes, "{method},{size},{k},{pct:.1}");
        }
        let mut table: Vec<(usize, f64)> = generator_frequency(&mixtures)
            .into_iter()
            .filter(|(_, pct)| *pct >= FREQUENCY_THRESHOLD_PCT)
            .collect();
        table.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (id, pct) in table {
            let _ = writeln!(freq, "{method},{size},{id},{pct:.1}");
        }
    }
    emit("shapes.csv".into(), shapes)?;
    emit("generator_freq.csv".into(), freq)?;

    for ((method, size), runs) in &cells {
        let median = median_run(runs);
        emit(
            format!("median_trace_{}_s{size}.csv", method_slug(method)),
            trace_csv(&median.trace),
        )?;
    }
    Ok(files)
}
