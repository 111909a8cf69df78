use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use arel_core::harness::RewardReport;
use arel_core::metrics::{Histogram, MetricReport, MetricScores};
use arel_core::objectives::{LogRecord, Observer};

fn score_cells(s: &MetricScores) -> String {
    s.as_row().iter().map(|v| format!("{:.4}", 100.0 * v)).collect::<Vec<_>>().join(",")
}

/// One row per album plus a `mean` row; scores are multiplied by 100.
pub fn metric_csv(report: &MetricReport) -> String {
    let mut out = String::from("album_id,B1,B2,B3,B4,M,R,C\n");
    for a in &report.albums {
        out.push_str(&format!("{},{}\n", a.album_id, score_cells(&a.scores)));
    }
    out.push_str(&format!("mean,{}\n", score_cells(&report.mean)));
    out
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bucket_low,count\n");
    for (low, count) in h.lows().zip(&h.counts) {
        out.push_str(&format!("{low:.2},{count}\n"));
    }
    out
}

/// One row per album plus `mean` and `gap` rows.
pub fn reward_csv(report: &RewardReport) -> String {
    let mut out = String::from("album_id,reference,generated\n");
    for r in &report.rows {
        out.push_str(&format!("{},{:.6},{:.6}\n", r.album_id, r.reference, r.generated));
    }
    out.push_str(&format!("mean,{:.6},{:.6}\n", report.mean_reference, report.mean_generated));
    out.push_str(&format!("gap,{:.6},\n", report.gap()));
    out
}

/// Appends log lines to a file as episodes finish.
pub struct LogFile {
    out: BufWriter<File>,
    clock: Option<Instant>,
}

impl LogFile {
    /// With `wall_clock` off every record reports `wall_ms=0`, so logs of
    /// identical runs are byte-identical.
    pub fn create(path: &Path, wall_clock: bool) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            out: BufWriter::new(file),
            clock: wall_clock.then(Instant::now),
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

impl Observer for LogFile {
    fn now_ms(&mut self) -> u64 {
        self.clock.map_or(0, |c| c.elapsed().as_millis() as u64)
    }

    fn record(&mut self, record: &LogRecord) -> arel_core::Result<()> {
        writeln!(self.out, "{}", record.to_line())
            .map_err(|e| arel_core::Error::Invalid(format!("writing training log: {e}")))
    }
}
