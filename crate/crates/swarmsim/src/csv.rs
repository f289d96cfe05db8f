//! CSV logs: one row per robot per tick in `robots.csv`, one row per tick in
//! `shape.csv`.
//!
//! Numbers are written with nine significant digits. The run summary is
//! folded from the rounded values, so rebuilding it from `shape.csv` gives
//! the same result bit for bit.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context};
use swarmsim_core::sim::{SummaryBuilder, DEFAULT_SETTLE_TIME};
use swarmsim_core::{Error as CoreError, RecordSink, RunSummary, TickRecord};

pub const ROBOTS_FILE: &str = "robots.csv";
pub const SHAPE_FILE: &str = "shape.csv";

pub const ROBOTS_HEADER: &[&str] = &[
    "time", "robot_id", "active", "x", "y", "heading", "steering", "qx", "qy", "qid_x", "qid_y", "v", "omega",
    "gamma_1", "gamma_2", "gamma_3", "gamma_4", "gamma_5", "gamma_6", "abar_mux", "abar_muy", "abar_theta",
    "abar_s2", "abar_s1",
];

pub const SHAPE_HEADER: &[&str] = &[
    "time", "active_count", "connected", "a_mux", "a_muy", "a_theta", "a_s2", "a_s1", "zeta_mux", "zeta_muy",
    "zeta_theta", "zeta_s2", "zeta_s1", "err_mux", "err_muy", "err_theta", "err_s2", "err_s1",
];

/// Formats `x` like C's `%.9g`.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value a reader of the CSV sees.
fn quantize(x: f64) -> f64 {
    fmt_g(x).parse().expect("formatted float parses")
}

/// Streams tick records to `robots.csv` and `shape.csv`.
pub struct CsvSink {
    robots: ::csv::Writer<File>,
    shape: ::csv::Writer<File>,
    summary: SummaryBuilder,
}

impl CsvSink {
    /// Creates both files in `dir` and writes their headers.
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        let open = |name: &str, header: &[&str]| -> anyhow::Result<::csv::Writer<File>> {
            let path = dir.join(name);
            let mut w = ::csv::Writer::from_path(&path).with_context(|| format!("cannot create {}", path.display()))?;
            w.write_record(header)?;
            Ok(w)
        };
        let robots = open(ROBOTS_FILE, ROBOTS_HEADER)?;
        let shape = open(SHAPE_FILE, SHAPE_HEADER)?;
        Ok(CsvSink { robots, shape, summary: SummaryBuilder::new(DEFAULT_SETTLE_TIME) })
    }

    fn write(&mut self, r: &TickRecord) -> ::csv::Result<()> {
        let time = fmt_g(r.time);
        for rob in &r.robots {
            let mut row = vec![
                time.clone(),
                rob.id.to_string(),
                u8::from(rob.active).to_string(),
            ];
            let s = &rob.state;
            let nums = [
                s.x,
                s.y,
                s.heading,
                s.steering,
                rob.output.x,
                rob.output.y,
                rob.q_id.x,
                rob.q_id.y,
                rob.input.linear_velocity,
                rob.input.steering_rate,
            ];
            row.extend(nums.iter().map(|&v| fmt_g(v)));
            row.extend(rob.gamma.iter().map(|&v| fmt_g(v)));
            row.extend(rob.estimate.to_array().iter().map(|&v| fmt_g(v)));
            self.robots.write_record(&row)?;
        }

        let err = r.shape_error();
        let mut row = vec![time, r.active_count.to_string(), u8::from(r.connected).to_string()];
        row.extend(r.truth.to_array().iter().chain(&r.zeta).chain(&err).map(|&v| fmt_g(v)));
        self.shape.write_record(&row)?;

        self.summary.push(quantize(r.time), &err.map(quantize), r.active_count, r.connected);
        Ok(())
    }

    /// Flushes both files and returns the summary of everything written.
    pub fn finish(mut self) -> anyhow::Result<RunSummary> {
        self.robots.flush().context("flushing robots.csv")?;
        self.shape.flush().context("flushing shape.csv")?;
        Ok(self.summary.finish())
    }
}

impl RecordSink for CsvSink {
    fn consume(&mut self, record: &TickRecord) -> swarmsim_core::Result<()> {
        self.write(record).map_err(|e| CoreError::Sink(e.to_string()))
    }
}

/// One parsed row of `shape.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRow {
    pub time: f64,
    pub active_count: usize,
    pub connected: bool,
    pub truth: [f64; 5],
    pub zeta: [f64; 5],
    pub error: [f64; 5],
}

/// Reads `shape.csv`, checking the header.
pub fn read_shape_csv(path: &Path) -> anyhow::Result<Vec<ShapeRow>> {
    let mut reader = ::csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    if reader.headers()?.iter().ne(SHAPE_HEADER.iter().copied()) {
        bail!("{}: unexpected header", path.display());
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed row", path.display()))?;
        let ctx = || format!("{} line {}", path.display(), i + 2);
        let num = |k: usize| -> anyhow::Result<f64> {
            rec[k].parse().with_context(|| format!("{}: bad {} value {:?}", ctx(), SHAPE_HEADER[k], &rec[k]))
        };
        let block = |start: usize| -> anyhow::Result<[f64; 5]> {
            let mut out = [0.0; 5];
            for (k, o) in out.iter_mut().enumerate() {
                *o = num(start + k)?;
            }
            Ok(out)
        };
        rows.push(ShapeRow {
            time: num(0)?,
            active_count: rec[1].parse().with_context(|| format!("{}: bad active_count", ctx()))?,
            connected: match &rec[2] {
                "1" => true,
                "0" => false,
                other => bail!("{}: bad connected flag {other:?}", ctx()),
            },
            truth: block(3)?,
            zeta: block(8)?,
            error: block(13)?,
        });
    }
    Ok(rows)
}

/// Rebuilds the run summary from the `shape.csv` in `dir`.
pub fn summary_from_dir(dir: &Path) -> anyhow::Result<RunSummary> {
    let rows = read_shape_csv(&dir.join(SHAPE_FILE))?;
    if rows.is_empty() {
        bail!("{} has no data rows", dir.join(SHAPE_FILE).display());
    }
    let mut b = SummaryBuilder::new(DEFAULT_SETTLE_TIME);
    for r in &rows {
        b.push(r.time, &r.error, r.active_count, r.connected);
    }
    Ok(b.finish())
}

/// Human-readable summary, as written to `summary.txt` and printed by `inspect`.
pub fn format_summary(s: &RunSummary) -> String {
    let vec5 = |v: &[f64; 5]| {
        let names = ["mux", "muy", "theta", "s2", "s1"];
        names.iter().zip(v).map(|(n, x)| format!("{n}={}", fmt_g(*x))).collect::<Vec<_>>().join(" ")
    };
    format!(
        "ticks: {}\nfinal_time: {}\nfinal_active: {}\nfinal_error: {}\nsettle_time: {}\nmax_error_after_settle: {}\ndisconnected_ticks: {}\nfirst_disconnect: {}\n",
        s.ticks,
        fmt_g(s.final_time),
        s.final_active,
        vec5(&s.final_error),
        fmt_g(s.settle_time),
        vec5(&s.max_error_after_settle),
        s.disconnected_ticks,
        s.first_disconnect.map_or_else(|| "none".to_string(), fmt_g),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (9.9999999999, "10"),
            (60.0, "60"),
            (0.019999999999, "0.02"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
    }

    #[test]
    fn quantize_is_idempotent() {
        for x in [std::f64::consts::PI, 1e-7 / 3.0, 12345.678901234, -0.000123456789123] {
            let q = quantize(x);
            assert_eq!(quantize(q), q);
            assert!((q - x).abs() <= 1e-8 * x.abs());
        }
    }
}
