//! On-disk run records.
//!
//! Each run is stored as a `key=value` text file under `records/` and its
//! fitness trace as `evaluations,best_tvd` CSV under `traces/`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::encoding::Genome;
use crate::error::{Error, Result};
use crate::fitness::Encoding;
use crate::ga::{RunRecord, TracePoint};

pub const RECORDS_DIR: &str = "records";
pub const TRACES_DIR: &str = "traces";
const RECORD_EXT: &str = "rec";

/// One persisted run of one experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredRecord {
    pub method: String,
    pub size: usize,
    pub run: usize,
    pub encoding: Encoding,
    pub seed: u64,
    pub genome: Genome,
    pub best_tvd: f64,
    pub evaluations: usize,
    pub exhausted: bool,
    pub trace: Vec<TracePoint>,
    pub wall_time: f64,
}

impl StoredRecord {
    pub fn from_run(
        method: &str,
        size: usize,
        run: usize,
        encoding: Encoding,
        record: RunRecord,
        exhausted: bool,
    ) -> Self {
        StoredRecord {
            method: method.to_string(),
            size,
            run,
            encoding,
            seed: record.seed,
            genome: record.best_genome,
            best_tvd: record.best_fitness,
            evaluations: record.evaluations_used,
            exhausted,
            trace: record.trace,
            wall_time: record.wall_time,
        }
    }

    /// File stem shared by the record and its trace.
    pub fn stem(&self) -> String {
        format!("{}_s{}_r{}", method_slug(&self.method), self.size, self.run)
    }

    pub fn trace_rel_path(&self) -> String {
        format!("{TRACES_DIR}/{}.csv", self.stem())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let encoding = match self.encoding {
            Encoding::Reo(k) => format!("reo:{k}"),
            Encoding::Nreo(k) => format!("nreo:{k}"),
        };
        let _ = writeln!(s, "method={}", self.method);
        let _ = writeln!(s, "size={}", self.size);
        let _ = writeln!(s, "run={}", self.run);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "encoding={encoding}");
        let _ = writeln!(s, "best_genome={}", self.genome);
        let _ = writeln!(s, "best_tvd={}", self.best_tvd);
        let _ = writeln!(s, "evaluations={}", self.evaluations);
        let _ = writeln!(s, "exhausted={}", self.exhausted);
        let _ = writeln!(s, "trace={}", self.trace_rel_path());
        let _ = writeln!(s, "wall_time={}", self.wall_time);
        s
    }
}

/// ASCII file-name form of a method label (`▼` becomes `-mb`).
pub fn method_slug(method: &str) -> String {
    method
        .replace('▼', "-mb")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut s = String::from("evaluations,best_tvd\n");
    for t in trace {
        let _ = writeln!(s, "{},{}", t.evaluations, t.best);
    }
    s
}

fn parse_trace(text: &str, path: &Path) -> Result<Vec<TracePoint>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "evaluations,best_tvd")) => {}
        _ => return Err(Error::parse(path, 1, "expected header evaluations,best_tvd")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let (e, b) = l
                .split_once(',')
                .ok_or_else(|| Error::parse(path, i + 1, "expected two columns"))?;
            Ok(TracePoint {
                evaluations: e
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(path, i + 1, "bad evaluation count"))?,
                best: b
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(path, i + 1, "bad tvd"))?,
            })
        })
        .collect()
}

/// Writes the record and its trace below `dir`.
pub fn write_record(dir: &Path, record: &StoredRecord) -> Result<PathBuf> {
    let rec_dir = dir.join(RECORDS_DIR);
    let trace_dir = dir.join(TRACES_DIR);
    fs::create_dir_all(&rec_dir)?;
    fs::create_dir_all(&trace_dir)?;
    fs::write(dir.join(record.trace_rel_path()), trace_csv(&record.trace))?;
    let path = rec_dir.join(format!("{}.{RECORD_EXT}", record.stem()));
    let mut f = fs::File::create(&path)?;
    f.write_all(record.to_text().as_bytes())?;
    Ok(path)
}

/// Reads one record file; `dir` is the experiment directory the trace path
/// is relative to.
pub fn read_record(dir: &Path, path: &Path) -> Result<StoredRecord> {
    let text = fs::read_to_string(path)?;
    let mut fields = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
        fields.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    let get = |key: &str| -> Result<&(usize, String)> {
        fields
            .get(key)
            .ok_or_else(|| Error::parse(path, 0, format!("missing field {key}")))
    };
    fn num<T: std::str::FromStr>(path: &Path, (line, v): &(usize, String), key: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::parse(path, *line, format!("bad {key} {v:?}")))
    }

    let (enc_line, enc) = get("encoding")?;
    let encoding = match enc.split_once(':') {
        Some(("reo", k)) => k.parse().ok().map(Encoding::Reo),
        Some(("nreo", k)) => k.parse().ok().map(Encoding::Nreo),
        _ => None,
    }
    .ok_or_else(|| Error::parse(path, *enc_line, format!("bad encoding {enc:?}")))?;
    let (g_line, g) = get("best_genome")?;
    let genome = Genome::parse_text(g, encoding)
        .map_err(|e| Error::parse(path, *g_line, e.to_string()))?;
    let trace_path = dir.join(&get("trace")?.1);
    let trace = parse_trace(&fs::read_to_string(&trace_path)?, &trace_path)?;

    Ok(StoredRecord {
        method: get("method")?.1.clone(),
        size: num(path, get("size")?, "size")?,
        run: num(path, get("run")?, "run")?,
        encoding,
        seed: num(path, get("seed")?, "seed")?,
        genome,
        best_tvd: num(path, get("best_tvd")?, "best_tvd")?,
        evaluations: num(path, get("evaluations")?, "evaluations")?,
        exhausted: num(path, get("exhausted")?, "exhausted")?,
        trace,
        wall_time: num(path, get("wall_time")?, "wall_time")?,
    })
}

/// Loads every record under `dir/records`, sorted by file name.
pub fn load_records(dir: &Path) -> Result<Vec<StoredRecord>> {
    let rec_dir = dir.join(RECORDS_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&rec_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == RECORD_EXT))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_record(dir, p)).collect()
}

/// Removes record and trace files left by an earlier run in `dir`.
pub fn clear_records(dir: &Path) -> Result<()> {
    for (sub, ext) in [(RECORDS_DIR, RECORD_EXT), (TRACES_DIR, "csv")] {
        let d = dir.join(sub);
        if !d.is_dir() {
            continue;
        }
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == ext) {
                fs::remove_file(p)?;
            }
        }
    }
    Ok(())
}
