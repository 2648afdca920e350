//! CSV and JSON formats for path lists, channel realizations, PADPs and
//! optimizer output.
//!
//! Every CSV has a header row naming each column with its unit. Numbers are
//! written in shortest round-trip form, so output is stable across runs.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::monostatic::ChannelRealization;
use crate::optimizer::OptimizationResult;
use crate::stats::{PadpGrid, PathEntry, PathList};

pub const PATH_LIST_HEADER: [&str; 4] = ["delay_ns", "aod_deg", "zod_deg", "power_db"];
pub const WEIGHTED_PATHS_HEADER: [&str; 7] = [
    "rp",
    "cluster",
    "ray",
    "abs_delay_ns",
    "aod_deg",
    "zod_deg",
    "power_lin",
];
pub const PADP_HEADER: [&str; 3] = ["angle_deg", "delay_ns", "power_db"];

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn read_path_list_csv(path: &Path) -> Result<PathList> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_path_list_csv(f, path)
}

/// Parses `delay_ns,aod_deg,zod_deg,power_db`. A blank `zod_deg` means the
/// zenith was not measured. Every bad row is reported by its line number.
pub fn parse_path_list_csv(input: impl Read, path: &Path) -> Result<PathList> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != PATH_LIST_HEADER {
        return Err(Error::MalformedRows {
            path: path.display().to_string(),
            lines: vec![1],
            detail: format!("expected header {}", PATH_LIST_HEADER.join(",")),
        });
    }
    let mut paths = Vec::new();
    let mut bad = Vec::new();
    let mut first_problem = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let parsed = rec
            .map_err(|e| e.to_string())
            .and_then(|r| parse_path_row(&r));
        match parsed {
            Ok(p) => paths.push(p),
            Err(msg) => {
                first_problem.get_or_insert(msg);
                bad.push(line);
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::MalformedRows {
            path: path.display().to_string(),
            lines: bad,
            detail: first_problem.unwrap_or_default(),
        });
    }
    if paths.is_empty() {
        return Err(Error::MalformedInput(format!(
            "{}: no path rows",
            path.display()
        )));
    }
    Ok(PathList::new(paths))
}

fn parse_path_row(r: &csv::StringRecord) -> std::result::Result<PathEntry, String> {
    if r.len() != 4 {
        return Err(format!("expected 4 fields, found {}", r.len()));
    }
    let num = |k: usize| -> std::result::Result<f64, String> {
        let v: f64 = r[k]
            .parse()
            .map_err(|_| format!("{} is not a number: {:?}", PATH_LIST_HEADER[k], &r[k]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{} must be finite", PATH_LIST_HEADER[k]))
        }
    };
    let delay_ns = num(0)?;
    if delay_ns < 0.0 {
        return Err("delay_ns must be nonnegative".into());
    }
    let zod_deg = if r[2].is_empty() { None } else { Some(num(2)?) };
    Ok(PathEntry {
        delay_s: delay_ns * 1e-9,
        aod_deg: num(1)?,
        zod_deg,
        power_lin: 10f64.powf(num(3)? / 10.0),
    })
}

pub fn write_path_list_csv(path: &Path, list: &PathList) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(PATH_LIST_HEADER)?;
    for p in &list.paths {
        w.write_record([
            (p.delay_s * 1e9).to_string(),
            p.aod_deg.to_string(),
            p.zod_deg.map(|z| z.to_string()).unwrap_or_default(),
            (10.0 * p.power_lin.log10()).to_string(),
        ])?;
    }
    finish(w, path)
}

/// Every weighted ray of a realization.
pub fn write_weighted_paths_csv(path: &Path, ch: &ChannelRealization) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(WEIGHTED_PATHS_HEADER)?;
    for p in &ch.weighted_paths {
        w.write_record([
            p.rp_index.to_string(),
            p.cluster_index.to_string(),
            p.ray_index.to_string(),
            (p.abs_delay_s * 1e9).to_string(),
            p.aod_deg.to_string(),
            p.zod_deg.to_string(),
            p.power_lin.to_string(),
        ])?;
    }
    finish(w, path)
}

/// Long-format PADP; empty bins are omitted.
pub fn write_padp_csv(path: &Path, grid: &PadpGrid) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(PADP_HEADER)?;
    for (a, row) in grid.angles_deg.iter().zip(&grid.power) {
        for (d, &p) in grid.delays_s.iter().zip(row) {
            if p > 0.0 {
                w.write_record([
                    a.to_string(),
                    (d * 1e9).to_string(),
                    (10.0 * p.log10()).to_string(),
                ])?;
            }
        }
    }
    finish(w, path)
}

/// One column of samples under a single header.
pub fn write_samples_csv(path: &Path, header: &str, samples: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([header])?;
    for s in samples {
        w.write_record([s.to_string()])?;
    }
    finish(w, path)
}

/// `generation,best_fitness`, generation 0 being the initial population.
pub fn write_trace_csv(path: &Path, result: &OptimizationResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["generation", "best_fitness"])?;
    for (g, f) in result.fitness_trace.iter().enumerate() {
        w.write_record([g.to_string(), f.to_string()])?;
    }
    finish(w, path)
}

/// One row per active slot of each top individual.
pub fn write_top_csv(path: &Path, result: &OptimizationResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "rank",
        "slot",
        "distance_m",
        "aod_deg",
        "zod_deg",
        "fitness",
    ])?;
    for (rank, ind) in result.top_individuals.iter().enumerate() {
        for (slot, rp) in ind.placement.entries().enumerate() {
            w.write_record([
                (rank + 1).to_string(),
                slot.to_string(),
                rp.distance_m.to_string(),
                rp.aod_deg.to_string(),
                rp.zod_deg.to_string(),
                ind.fitness.to_string(),
            ])?;
        }
    }
    finish(w, path)
}
