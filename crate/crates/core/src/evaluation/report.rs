use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::experiment::{MethodRow, SweepPoint};
use super::metrics::Metrics;
use crate::error::{Error, Result};
use crate::vocabulary::ClassOccurrence;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MA_COLOR: &str = "#c0392b";
const NORMAL_COLOR: &str = "#2e86c1";
const BAR_COLOR: &str = "#5d6d7e";

pub const FIG7_FILES: [&str; 4] =
    ["fig7_accuracy.svg", "fig7_sensitivity.svg", "fig7_specificity.svg", "fig7_precision.svg"];

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}", v * 100.0))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn metrics_csv(rows: &[MethodRow]) -> String {
    let mut out = String::from("index,method,split,accuracy,sensitivity,specificity,precision,tp,fn,tn,fp\n");
    for (i, r) in rows.iter().enumerate() {
        let m = &r.metrics;
        let c = &r.confusion;
        let _ = writeln!(
            out,
            "{},{},test,{},{},{},{},{},{},{},{}",
            i + 1,
            r.method,
            pct(m.accuracy),
            pct(m.sensitivity),
            pct(m.specificity),
            pct(m.precision),
            c.tp,
            c.fn_,
            c.tn,
            c.fp
        );
    }
    out
}

pub fn occurrence_csv(occ: &ClassOccurrence) -> String {
    let mut out = String::from("word,ma,normal\n");
    for (i, (a, b)) in occ.ma.iter().zip(&occ.normal).enumerate() {
        let _ = writeln!(out, "{i},{a},{b}");
    }
    out
}

pub fn sweep_csv(points: &[SweepPoint], best: Option<usize>) -> String {
    let mut out = String::from("hidden,val_accuracy,best\n");
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(out, "{},{:.2},{}", p.hidden, p.accuracy * 100.0, u8::from(best == Some(i)));
    }
    out
}

struct Svg(String);

impl Svg {
    fn new(title: &str) -> Self {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Svg(s)
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, body: &str) {
        let _ = writeln!(self.0, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#, escape(body));
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, color: &str) {
        let _ = writeln!(self.0, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}"/>"#);
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, color: &str) {
        let _ = writeln!(self.0, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{color}"/>"#);
    }

    /// Axes with `ticks + 1` labelled horizontal gridlines from 0 to `y_max`.
    fn axes(&mut self, y_max: f64, ticks: usize, y_label: &str, x_label: &str) {
        let (x0, y0, y1) = (LEFT, HEIGHT - BOTTOM, TOP);
        for t in 0..=ticks {
            let v = y_max * t as f64 / ticks as f64;
            let y = y0 - (y0 - y1) * t as f64 / ticks as f64;
            self.line(x0, y, WIDTH - RIGHT, y, "#dddddd");
            self.text(x0 - 6.0, y + 4.0, "end", &trim_number(v));
        }
        self.line(x0, y0, WIDTH - RIGHT, y0, "black");
        self.line(x0, y0, x0, y1, "black");
        self.text(WIDTH / 2.0, HEIGHT - 12.0, "middle", x_label);
        let _ = writeln!(
            self.0,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }

    fn finish(mut self) -> String {
        self.0.push_str("</svg>\n");
        self.0
    }
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Rounds up to 1, 2 or 5 times a power of ten.
fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|&c| c >= v).unwrap_or(10.0 * mag)
}

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    values: Vec<Option<f64>>,
}

/// Grouped bars; `None` values draw no bar. Category labels are thinned to at
/// most 25 when there are many groups.
fn bar_chart(
    title: &str,
    categories: &[String],
    series: &[Series<'_>],
    y_max: f64,
    y_label: &str,
    x_label: &str,
) -> String {
    let mut svg = Svg::new(title);
    svg.axes(y_max, 5, y_label, x_label);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = categories.len().max(1);
    let group_w = plot_w / n as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    let label_every = n.div_ceil(25);
    for (g, cat) in categories.iter().enumerate() {
        let gx = LEFT + group_w * g as f64 + group_w * 0.1;
        for (k, s) in series.iter().enumerate() {
            if let Some(v) = s.values[g] {
                let h = plot_h * (v / y_max).clamp(0.0, 1.0);
                svg.rect(gx + bar_w * k as f64, HEIGHT - BOTTOM - h, bar_w, h, s.color);
            }
        }
        if g % label_every == 0 {
            svg.text(LEFT + group_w * (g as f64 + 0.5), HEIGHT - BOTTOM + 14.0, "middle", cat);
        }
    }
    if series.len() > 1 {
        for (k, s) in series.iter().enumerate() {
            let x = WIDTH - RIGHT - 110.0;
            let y = TOP + 4.0 + 16.0 * k as f64;
            svg.rect(x, y, 10.0, 10.0, s.color);
            svg.text(x + 14.0, y + 9.0, "start", s.name);
        }
    }
    svg.finish()
}

pub fn occurrence_svg(occ: &ClassOccurrence) -> String {
    let cats: Vec<String> = (0..occ.ma.len()).map(|i| i.to_string()).collect();
    let to_vals = |v: &[u64]| v.iter().map(|&c| Some(c as f64)).collect::<Vec<_>>();
    let peak = occ.ma.iter().chain(&occ.normal).copied().max().unwrap_or(0) as f64;
    let series = [
        Series { name: "MA", color: MA_COLOR, values: to_vals(&occ.ma) },
        Series { name: "NORMAL", color: NORMAL_COLOR, values: to_vals(&occ.normal) },
    ];
    bar_chart("Visual word occurrence per class", &cats, &series, nice_max(peak), "occurrences", "visual word")
}

pub fn metric_svg(rows: &[MethodRow], metric: usize) -> String {
    let name = Metrics::NAMES[metric];
    let cats: Vec<String> = (1..=rows.len()).map(|i| i.to_string()).collect();
    let values = rows.iter().map(|r| r.metrics.values()[metric].map(|v| v * 100.0)).collect();
    let series = [Series { name, color: BAR_COLOR, values }];
    let mut svg = bar_chart(
        &format!("Test-split {name} by method"),
        &cats,
        &series,
        100.0,
        &format!("{name} (%)"),
        "method index",
    );
    // method legend below the title
    let legend: Vec<String> = rows.iter().enumerate().map(|(i, r)| format!("{}={}", i + 1, r.method)).collect();
    let line = format!(
        r#"<text x="{:.2}" y="34" text-anchor="middle" font-size="9">{}</text>"#,
        WIDTH / 2.0,
        escape(&legend.join("  "))
    );
    let at = svg.rfind("</svg>").unwrap_or(svg.len());
    svg.insert_str(at, &(line + "\n"));
    svg
}

pub fn sweep_svg(points: &[SweepPoint]) -> String {
    let mut svg = Svg::new("Validation accuracy vs hidden neurons");
    svg.axes(100.0, 5, "validation accuracy (%)", "hidden neurons");
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = points.len();
    let x_of = |i: usize| LEFT + plot_w * (i as f64 + 0.5) / n.max(1) as f64;
    let y_of = |a: f64| HEIGHT - BOTTOM - plot_h * a.clamp(0.0, 1.0);
    let coords: Vec<String> =
        points.iter().enumerate().map(|(i, p)| format!("{:.2},{:.2}", x_of(i), y_of(p.accuracy))).collect();
    let _ = writeln!(
        svg.0,
        r#"<polyline points="{}" fill="none" stroke="{BAR_COLOR}" stroke-width="2"/>"#,
        coords.join(" ")
    );
    for (i, p) in points.iter().enumerate() {
        let _ =
            writeln!(svg.0, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{MA_COLOR}"/>"#, x_of(i), y_of(p.accuracy));
        svg.text(x_of(i), HEIGHT - BOTTOM + 14.0, "middle", &p.hidden.to_string());
    }
    svg.finish()
}

/// Inputs to [`emit_report`]. Empty `sweep` or a missing `occurrence` skips
/// the corresponding files.
#[derive(Debug, Clone, Copy)]
pub struct Report<'a> {
    pub rows: &'a [MethodRow],
    pub occurrence: Option<&'a ClassOccurrence>,
    pub sweep: &'a [SweepPoint],
    pub sweep_best: Option<usize>,
}

/// Writes the report files into `out_dir` (created if missing) and returns
/// their paths in write order. Fails if any row breaks the accuracy identity.
pub fn emit_report(report: &Report<'_>, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    for r in report.rows {
        if let Some(res) = r.metrics.identity_residual(&r.confusion) {
            if res > 1e-12 {
                return Err(Error::InvalidArgument(format!("{}: accuracy identity off by {res}", r.method)));
            }
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    write_file(dir, "metrics.csv", &metrics_csv(report.rows), &mut written)?;
    if let Some(occ) = report.occurrence {
        write_file(dir, "word_occurrence.csv", &occurrence_csv(occ), &mut written)?;
        write_file(dir, "fig5.svg", &occurrence_svg(occ), &mut written)?;
    }
    if !report.sweep.is_empty() {
        write_file(dir, "sweep.csv", &sweep_csv(report.sweep, report.sweep_best), &mut written)?;
        write_file(dir, "fig6.svg", &sweep_svg(report.sweep), &mut written)?;
    }
    for (i, name) in FIG7_FILES.iter().enumerate() {
        write_file(dir, name, &metric_svg(report.rows, i), &mut written)?;
    }
    Ok(written)
}
