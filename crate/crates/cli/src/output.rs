//! CSV and JSON writers. Floats carry 17 significant digits so every value
//! parses back to the same `f64`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use qhm_core::experiment::{AggregateRow, EpochRow};

pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const DATASET_CSV: &str = "dataset.csv";

pub fn seed_csv_name(seed: u64) -> String {
    format!("seed_{seed}.csv")
}

/// `{:.16e}`: one leading digit and sixteen decimals.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rows kept for a stride of `every` epochs: multiples of the stride plus the
/// final row.
pub fn keep_row(epoch: usize, last: usize, every: usize) -> bool {
    epoch % every == 0 || epoch == last
}

fn writer(path: &Path) -> io::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn finish(w: csv::Writer<BufWriter<File>>) -> io::Result<()> {
    w.into_inner().map_err(|e| e.into_error())?.flush()
}

pub fn write_seed_csv(path: &Path, rows: &[EpochRow], every: usize) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(EpochRow::COLUMNS)?;
    let last = rows.last().map_or(0, |r| r.epoch);
    for r in rows.iter().filter(|r| keep_row(r.epoch, last, every)) {
        w.write_record([
            r.epoch.to_string(),
            r.step.to_string(),
            fmt_f64(r.loss),
            fmt_f64(r.full_grad_norm),
            fmt_f64(r.min_full_grad_norm_so_far),
            fmt_f64(r.alpha),
            fmt_f64(r.beta),
            fmt_f64(r.gamma),
            r.batch.to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow], every: usize) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(AggregateRow::COLUMNS)?;
    let last = rows.last().map_or(0, |r| r.epoch);
    for r in rows.iter().filter(|r| keep_row(r.epoch, last, every)) {
        let mut rec = vec![r.epoch.to_string(), r.step.to_string(), r.seeds.to_string()];
        for band in [r.loss, r.full_grad_norm, r.min_full_grad_norm_so_far] {
            rec.extend([fmt_f64(band.mean), fmt_f64(band.min), fmt_f64(band.max)]);
        }
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}
