//! SVG figures drawn from a downsampled copy of the record stream.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use swarmsim_core::shape::axes_lengths;
use swarmsim_core::{RecordSink, RobotId, ShapeConfig, ShapeParams, TickRecord};

/// Spacing of plotted samples (s).
const SAMPLE_PERIOD: f64 = 0.05;
/// Spacing of ellipse snapshots on the trajectory overview (s).
const SNAPSHOT_PERIOD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Figure {
    Trajectory,
    Shape,
    Inputs,
    Angles,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Trajectory, Figure::Shape, Figure::Inputs, Figure::Angles];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Trajectory => "trajectory",
            Figure::Shape => "shape",
            Figure::Inputs => "inputs",
            Figure::Angles => "angles",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.svg", self.name())
    }
}

/// Which figures to emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotSpec {
    pub figures: Vec<Figure>,
}

impl PlotSpec {
    pub fn all() -> Self {
        PlotSpec { figures: Figure::ALL.to_vec() }
    }

    pub fn none() -> Self {
        PlotSpec { figures: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.figures.is_empty()
    }
}

impl FromStr for PlotSpec {
    type Err = String;

    /// Accepts `all`, `none`, or a comma-separated list of figure names.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "all" => return Ok(PlotSpec::all()),
            "none" | "" => return Ok(PlotSpec::none()),
            _ => {}
        }
        let mut figures = Vec::new();
        for part in s.split(',').map(str::trim) {
            let f = Figure::ALL
                .into_iter()
                .find(|f| f.name() == part)
                .ok_or_else(|| format!("unknown figure {part:?} (expected trajectory, shape, inputs, angles, all or none)"))?;
            if !figures.contains(&f) {
                figures.push(f);
            }
        }
        figures.sort();
        Ok(PlotSpec { figures })
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    t: f64,
    x: f64,
    y: f64,
    heading: f64,
    steering: f64,
    v: f64,
    omega: f64,
}

/// Samples taken every `stride` ticks, plus the latest unsampled one so a
/// series ends where its data ends.
#[derive(Debug, Clone)]
struct Series<T> {
    samples: Vec<T>,
    pending: Option<T>,
}

impl<T> Default for Series<T> {
    fn default() -> Self {
        Series { samples: Vec::new(), pending: None }
    }
}

impl<T: Copy> Series<T> {
    fn offer(&mut self, v: T, sampled: bool) {
        if sampled {
            self.pending = None;
            self.samples.push(v);
        } else {
            self.pending = Some(v);
        }
    }

    fn close(&mut self) {
        if let Some(v) = self.pending.take() {
            self.samples.push(v);
        }
    }

    fn all(&self) -> Vec<T> {
        let mut out = self.samples.clone();
        out.extend(self.pending);
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct ShapeSample {
    t: f64,
    truth: ShapeParams,
    zeta: ShapeParams,
}

/// Record sink that keeps what the figures need.
#[derive(Debug, Clone)]
pub struct PlotCollector {
    shape: ShapeConfig,
    stride: usize,
    ticks: usize,
    next_snapshot: f64,
    robots: BTreeMap<RobotId, Series<Sample>>,
    swarm: Series<ShapeSample>,
    snapshots: Vec<ShapeSample>,
}

impl PlotCollector {
    pub fn new(shape: ShapeConfig, control_dt: f64) -> Self {
        let stride = ((SAMPLE_PERIOD / control_dt).round() as usize).max(1);
        PlotCollector {
            shape,
            stride,
            ticks: 0,
            next_snapshot: 0.0,
            robots: BTreeMap::new(),
            swarm: Series::default(),
            snapshots: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.ticks == 0
    }

    fn push(&mut self, r: &TickRecord) {
        let sampled = self.ticks.is_multiple_of(self.stride);
        self.ticks += 1;
        let shape = ShapeSample { t: r.time, truth: r.truth, zeta: ShapeParams::from_array(r.zeta) };
        if r.time >= self.next_snapshot - 1e-9 {
            self.snapshots.push(shape);
            self.next_snapshot += SNAPSHOT_PERIOD;
        }
        self.swarm.offer(shape, sampled);
        for rob in &r.robots {
            let series = self.robots.entry(rob.id).or_default();
            if !rob.active {
                series.close();
                continue;
            }
            let s = Sample {
                t: r.time,
                x: rob.state.x,
                y: rob.state.y,
                heading: rob.state.heading,
                steering: rob.state.steering,
                v: rob.input.linear_velocity,
                omega: rob.input.steering_rate,
            };
            series.offer(s, sampled);
        }
    }
}

impl RecordSink for PlotCollector {
    fn consume(&mut self, record: &TickRecord) -> swarmsim_core::Result<()> {
        self.push(record);
        Ok(())
    }
}

/// Writes one SVG per requested figure into `dir` and returns their paths.
pub fn emit_plots(data: &PlotCollector, spec: &PlotSpec, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if data.is_empty() {
        bail!("no records to plot");
    }
    let mut paths = Vec::new();
    for &fig in &spec.figures {
        let svg = match fig {
            Figure::Trajectory => trajectory_svg(data),
            Figure::Shape => shape_svg(data),
            Figure::Inputs => robot_panels_svg(
                data,
                "Control inputs",
                [("linear velocity v (m/s)", |s: &Sample| s.v), ("steering rate ω (rad/s)", |s: &Sample| s.omega)],
            ),
            Figure::Angles => robot_panels_svg(
                data,
                "Heading and steering angles",
                [("heading θ (rad)", |s: &Sample| s.heading), ("steering φ (rad)", |s: &Sample| s.steering)],
            ),
        };
        let path = dir.join(fig.file_name());
        std::fs::write(&path, svg).with_context(|| format!("cannot write {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Tick positions at a 1-2-5 step covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| span / s <= target as f64).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data range padded so flat series still get a visible axis.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span > 1e-9 { 0.05 * span } else { lo.abs().max(1.0) * 0.1 };
    (lo - pad, hi + pad)
}

fn bounds<'a>(values: impl IntoIterator<Item = &'a f64>) -> (f64, f64) {
    values.into_iter().filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

struct Line {
    label: String,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

/// A rectangular plotting area with linear axes.
struct Panel {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(out, r#"<g class="axes">"#);
        let _ = writeln!(out, r#"<rect x="{l:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#);
        for v in nice_ticks(self.x.0, self.x.1, 8) {
            let x = self.px(v);
            let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{t:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, t + h);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#, t + h + 14.0, tick_label(v));
        }
        for v in nice_ticks(self.y.0, self.y.1, 5) {
            let y = self.py(v);
            let _ = writeln!(out, r##"<line x1="{l:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, l + w);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, l - 5.0, y + 4.0, tick_label(v));
        }
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#, l + w / 2.0, t - 8.0, escape(title));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#, l + w / 2.0, t + h + 32.0, escape(xlabel));
        let (yx, yy) = (l - 45.0, t + h / 2.0);
        let _ = writeln!(out, r#"<text x="{yx:.2}" y="{yy:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {yx:.2} {yy:.2})">{}</text>"#, escape(ylabel));
        let _ = writeln!(out, "</g>");
    }

    fn polyline(&self, out: &mut String, line: &Line, class: &str, extra: &str) {
        let mut pts = String::new();
        for &(x, y) in &line.points {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", self.px(x), self.py(y));
            }
        }
        let dash = if line.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline class="{class}" data-label="{}"{extra} fill="none" stroke="{}" stroke-width="1.2"{dash} points="{}"/>"#,
            escape(&line.label),
            line.color,
            pts.trim_end()
        );
    }

    fn legend(&self, out: &mut String, lines: &[Line]) {
        let x = self.left + self.width + 10.0;
        let _ = writeln!(out, r#"<g class="legend">"#);
        for (i, l) in lines.iter().enumerate() {
            let y = self.top + 10.0 + 16.0 * i as f64;
            let dash = if l.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"{dash}/>"#, x + 24.0, l.color);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, x + 30.0, y + 4.0, escape(&l.label));
        }
        let _ = writeln!(out, "</g>");
    }

    /// Draws a time-series panel with axes, lines and legend.
    fn chart(&self, out: &mut String, title: &str, ylabel: &str, lines: &[Line]) {
        self.axes(out, title, "time (s)", ylabel);
        let _ = writeln!(out, r#"<g class="series" data-title="{}">"#, escape(title));
        for l in lines {
            self.polyline(out, l, "line", "");
        }
        let _ = writeln!(out, "</g>");
        self.legend(out, lines);
    }
}

fn svg_open(width: f64, height: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n<title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        escape(title)
    )
}

fn time_range(data: &PlotCollector) -> (f64, f64) {
    let ts: Vec<f64> = data.swarm.all().iter().map(|s| s.t).collect();
    let (lo, hi) = bounds(&ts);
    if hi > lo { (lo, hi) } else { (lo, lo + 1.0) }
}

fn ellipse_points(a: &ShapeParams, cfg: &ShapeConfig) -> Vec<(f64, f64)> {
    let (sw, sl) = axes_lengths(a, cfg);
    let (major, minor) = (a.major_axis(), a.minor_axis());
    (0..=72)
        .map(|k| {
            let phi = k as f64 * std::f64::consts::TAU / 72.0;
            let (u, v) = (sl * phi.cos(), sw * phi.sin());
            (a.mu_x + u * major.x + v * minor.x, a.mu_y + u * major.y + v * minor.y)
        })
        .collect()
}

fn trajectory_svg(data: &PlotCollector) -> String {
    let paths: Vec<(RobotId, Vec<Sample>)> = data.robots.iter().map(|(id, s)| (*id, s.all())).collect();
    let truth_rings: Vec<(f64, Vec<(f64, f64)>)> =
        data.snapshots.iter().map(|s| (s.t, ellipse_points(&s.truth, &data.shape))).collect();
    let goal_rings: Vec<(f64, Vec<(f64, f64)>)> =
        data.snapshots.iter().map(|s| (s.t, ellipse_points(&s.zeta, &data.shape))).collect();

    let xs: Vec<f64> = paths
        .iter()
        .flat_map(|(_, p)| p.iter().map(|s| s.x))
        .chain(truth_rings.iter().chain(&goal_rings).flat_map(|(_, r)| r.iter().map(|p| p.0)))
        .collect();
    let ys: Vec<f64> = paths
        .iter()
        .flat_map(|(_, p)| p.iter().map(|s| s.y))
        .chain(truth_rings.iter().chain(&goal_rings).flat_map(|(_, r)| r.iter().map(|p| p.1)))
        .collect();
    let (x0, x1) = padded(bounds(&xs).0, bounds(&xs).1);
    let (y0, y1) = padded(bounds(&ys).0, bounds(&ys).1);

    // Equal scale on both axes.
    let max_w = 900.0;
    let max_h = 600.0;
    let scale = (max_w / (x1 - x0)).min(max_h / (y1 - y0));
    let panel = Panel { left: 70.0, top: 40.0, width: (x1 - x0) * scale, height: (y1 - y0) * scale, x: (x0, x1), y: (y0, y1) };

    let mut out = svg_open(panel.width + 250.0, panel.height + 100.0, "Robot paths and shape snapshots");
    panel.axes(&mut out, "Robot paths and shape snapshots", "x (m)", "y (m)");
    let _ = writeln!(out, r#"<g class="ellipses">"#);
    for ((t, ring), (_, goal)) in truth_rings.iter().zip(&goal_rings) {
        let extra = format!(r#" data-t="{}""#, tick_label(*t));
        let actual = Line { label: "achieved shape".into(), color: "black", dashed: false, points: ring.clone() };
        let desired = Line { label: "desired shape".into(), color: "#888", dashed: true, points: goal.clone() };
        panel.polyline(&mut out, &actual, "ellipse", &extra);
        panel.polyline(&mut out, &desired, "ellipse-goal", &extra);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g class="paths">"#);
    let mut legend = Vec::new();
    for (i, (id, p)) in paths.iter().enumerate() {
        let line = Line { label: format!("robot {id}"), color: color(i), dashed: false, points: p.iter().map(|s| (s.x, s.y)).collect() };
        let end = p.last().map_or(0.0, |s| s.t);
        panel.polyline(&mut out, &line, "path", &format!(r#" data-robot="{id}" data-t-end="{}""#, tick_label(end)));
        legend.push(line);
    }
    let _ = writeln!(out, "</g>");
    legend.push(Line { label: "achieved shape".into(), color: "black", dashed: false, points: vec![] });
    legend.push(Line { label: "desired shape".into(), color: "#888", dashed: true, points: vec![] });
    panel.legend(&mut out, &legend);
    out.push_str("</svg>\n");
    out
}

type ShapeAccessor<'a> = Box<dyn Fn(&ShapeParams) -> f64 + 'a>;
type SampleAccessor = fn(&Sample) -> f64;

fn shape_svg(data: &PlotCollector) -> String {
    let samples = data.swarm.all();
    let cfg = &data.shape;
    let comps: [(&str, &str, ShapeAccessor); 5] = [
        ("centroid x", "μx (m)", Box::new(|a| a.mu_x)),
        ("centroid y", "μy (m)", Box::new(|a| a.mu_y)),
        ("orientation", "θ (rad)", Box::new(|a| a.orientation)),
        ("minor axis length", "s_w (m)", Box::new(move |a| axes_lengths(a, cfg).0)),
        ("major axis length", "s_l (m)", Box::new(move |a| axes_lengths(a, cfg).1)),
    ];
    let (t0, t1) = time_range(data);
    let (w, h, gap) = (800.0, 150.0, 70.0);
    let mut out = svg_open(w + 230.0, 40.0 + 5.0 * (h + gap), "Abstract shape tracking");
    for (k, (title, ylabel, f)) in comps.iter().enumerate() {
        let lines = vec![
            Line { label: "achieved a".into(), color: color(0), dashed: false, points: samples.iter().map(|s| (s.t, f(&s.truth))).collect() },
            Line { label: "desired ζ".into(), color: color(3), dashed: true, points: samples.iter().map(|s| (s.t, f(&s.zeta))).collect() },
        ];
        let ys: Vec<f64> = lines.iter().flat_map(|l| l.points.iter().map(|p| p.1)).collect();
        let (y0, y1) = bounds(&ys);
        let panel = Panel { left: 80.0, top: 40.0 + k as f64 * (h + gap), width: w, height: h, x: (t0, t1), y: padded(y0, y1) };
        panel.chart(&mut out, title, ylabel, &lines);
    }
    out.push_str("</svg>\n");
    out
}

fn robot_panels_svg(data: &PlotCollector, title: &str, panels: [(&str, SampleAccessor); 2]) -> String {
    let (t0, t1) = time_range(data);
    let (w, h, gap) = (800.0, 260.0, 80.0);
    let mut out = svg_open(w + 230.0, 50.0 + 2.0 * (h + gap), title);
    for (k, (ylabel, f)) in panels.iter().enumerate() {
        let lines: Vec<Line> = data
            .robots
            .iter()
            .enumerate()
            .map(|(i, (id, s))| Line {
                label: format!("robot {id}"),
                color: color(i),
                dashed: false,
                points: s.all().iter().map(|p| (p.t, f(p))).collect(),
            })
            .collect();
        let ys: Vec<f64> = lines.iter().flat_map(|l| l.points.iter().map(|p| p.1)).collect();
        let (y0, y1) = bounds(&ys);
        let panel = Panel { left: 80.0, top: 50.0 + k as f64 * (h + gap), width: w, height: h, x: (t0, t1), y: padded(y0, y1) };
        panel.chart(&mut out, ylabel, ylabel, &lines);
    }
    out.push_str("</svg>\n");
    out
}
