//! Self-contained SVG line charts for sweep and mobility results.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use crate::experiment::{DynamicResult, EpochRecord, StaticResult, Technique};
use crate::output::{self, fmt_g6, CsvError, Table};
use crate::stats::{confidence_interval, throughput_gain};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 60.0;

const COLOR_AXIS: &str = "#222222";
const COLOR_GRID: &str = "#e6e6e6";
const COLOR_REF: &str = "#999999";
const PALETTE: [&str; 3] = ["#d62728", "#1f77b4", "#2ca02c"];

/// Confidence level assumed when a chart is rebuilt from raw samples.
pub const DEFAULT_CI_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(x, y, error half-width)`.
    pub points: Vec<(f64, f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Dashed horizontal reference line.
    pub reference_y: Option<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round step for roughly `target` intervals across `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn axis_range(lo: f64, hi: f64, from_zero: bool) -> (f64, f64, f64) {
    let lo = if from_zero { lo.min(0.0) } else { lo };
    let (lo, hi) = if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let step = nice_step(hi - lo, 5.0);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

pub fn render(chart: &Chart) -> String {
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let points = chart.series.iter().flat_map(|s| &s.points);
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, e) in points.filter(|p| p.1.is_finite()) {
        let e = e.unwrap_or(0.0);
        xlo = xlo.min(x);
        xhi = xhi.max(x);
        ylo = ylo.min(y - e);
        yhi = yhi.max(y + e);
    }
    if let Some(r) = chart.reference_y {
        ylo = ylo.min(r);
        yhi = yhi.max(r);
    }
    if !xlo.is_finite() {
        (xlo, xhi, ylo, yhi) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1, xstep) = axis_range(xlo, xhi, false);
    let (y0, y1, ystep) = axis_range(ylo, yhi, true);
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="26" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(&chart.title)
    );

    let ticks = |lo: f64, hi: f64, step: f64| {
        let n = ((hi - lo) / step).round() as i64;
        (0..=n).map(move |i| lo + i as f64 * step)
    };
    for y in ticks(y0, y1, ystep) {
        let py = sy(y);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="{COLOR_GRID}"/>"#,
            MARGIN_LEFT,
            MARGIN_LEFT + pw
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN_LEFT - 6.0,
            py + 4.0,
            fmt_g6(y)
        );
    }
    for x in ticks(x0, x1, xstep) {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{COLOR_AXIS}"/>"#,
            MARGIN_TOP + ph,
            MARGIN_TOP + ph + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            MARGIN_TOP + ph + 18.0,
            fmt_g6(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<path d="M{:.2},{:.2} V{:.2} H{:.2}" fill="none" stroke="{COLOR_AXIS}"/>"#,
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_TOP + ph,
        MARGIN_LEFT + pw
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&chart.x_label)
    );
    let cy = MARGIN_TOP + ph / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{cy:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
        escape(&chart.y_label)
    );
    if let Some(r) = chart.reference_y {
        let py = sy(r);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="{COLOR_REF}" stroke-dasharray="4 3"/>"#,
            MARGIN_LEFT,
            MARGIN_LEFT + pw
        );
    }

    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let finite: Vec<_> = s.points.iter().filter(|p| p.1.is_finite()).collect();
        if finite.len() > 1 {
            let d: Vec<String> = finite
                .iter()
                .enumerate()
                .map(|(j, p)| format!("{}{:.2},{:.2}", if j == 0 { 'M' } else { 'L' }, sx(p.0), sy(p.1)))
                .collect();
            let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.join(" "));
        }
        for &&(x, y, e) in &finite {
            let (px, py) = (sx(x), sy(y));
            if let Some(e) = e.filter(|e| *e > 0.0) {
                let (top, bottom) = (sy(y + e), sy(y - e));
                let _ = writeln!(
                    svg,
                    r#"<path d="M{:.2},{top:.2} H{:.2} M{px:.2},{top:.2} V{bottom:.2} M{:.2},{bottom:.2} H{:.2}" class="ci" stroke="{color}"/>"#,
                    px - 4.0,
                    px + 4.0,
                    px - 4.0,
                    px + 4.0
                );
            }
            let _ = writeln!(svg, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="{color}"/>"#);
        }
        let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + pw - 110.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-technique means with CI and the mean gain, by |D|.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StaticSeries {
    pub d_counts: Vec<f64>,
    pub pddt: Vec<(f64, Option<f64>)>,
    pub sddt: Vec<(f64, Option<f64>)>,
    pub gain: Vec<Option<f64>>,
}

impl From<&StaticResult> for StaticSeries {
    fn from(r: &StaticResult) -> Self {
        let mut s = StaticSeries::default();
        for p in &r.points {
            s.d_counts.push(p.d_count as f64);
            s.pddt.push((p.pddt.interval.mean, p.pddt.interval.half_width));
            s.sddt.push((p.sddt.interval.mean, p.sddt.interval.half_width));
            s.gain.push(p.mean_gain);
        }
        s
    }
}

pub fn static_charts(s: &StaticSeries) -> Vec<(&'static str, String)> {
    let series = |name: &str, v: &[(f64, Option<f64>)]| Series {
        name: name.into(),
        points: s.d_counts.iter().zip(v).map(|(&x, &(m, e))| (x, m, e)).collect(),
    };
    let lambda = Chart {
        title: "Maximum multiplier λ".into(),
        x_label: "Number of traffic chunks |D|".into(),
        y_label: "λ (dimensionless)".into(),
        series: vec![series("PDDT (k=5)", &s.pddt), series("SDDT (k=1)", &s.sddt)],
        reference_y: Some(1.0),
    };
    let gain = Chart {
        title: "Throughput gain G = λ_PDDT / λ_SDDT".into(),
        x_label: "Number of traffic chunks |D|".into(),
        y_label: "G (dimensionless)".into(),
        series: vec![Series {
            name: "mean G".into(),
            points: s
                .d_counts
                .iter()
                .zip(&s.gain)
                .filter_map(|(&x, g)| g.map(|g| (x, g, None)))
                .collect(),
        }],
        reference_y: Some(1.0),
    };
    vec![("static_lambda.svg", render(&lambda)), ("static_gain.svg", render(&gain))]
}

pub fn dynamic_charts(epochs: &[EpochRecord]) -> Vec<(&'static str, String)> {
    let hours = |e: &EpochRecord| e.minutes as f64 / 60.0;
    let lambda = Chart {
        title: "Maximum multiplier λ under user mobility".into(),
        x_label: "Time (h)".into(),
        y_label: "λ (dimensionless)".into(),
        series: vec![
            Series { name: "PDDT".into(), points: epochs.iter().map(|e| (hours(e), e.lambda_pddt, None)).collect() },
            Series { name: "SDDT".into(), points: epochs.iter().map(|e| (hours(e), e.lambda_sddt, None)).collect() },
        ],
        reference_y: Some(1.0),
    };
    let gain = Chart {
        title: "Throughput gain under user mobility".into(),
        x_label: "Time (h)".into(),
        y_label: "G (dimensionless)".into(),
        series: vec![Series {
            name: "G".into(),
            points: epochs.iter().filter_map(|e| e.gain.map(|g| (hours(e), g, None))).collect(),
        }],
        reference_y: Some(1.0),
    };
    vec![("dynamic_lambda.svg", render(&lambda)), ("dynamic_gain.svg", render(&gain))]
}

fn write_all(charts: Vec<(&'static str, String)>, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    charts
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}

pub fn plot_static(r: &StaticResult, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    write_all(static_charts(&StaticSeries::from(r)), dir)
}

pub fn plot_dynamic(r: &DynamicResult, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    write_all(dynamic_charts(&r.epochs), dir)
}

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("{path}: unrecognized header `{header}`")]
    UnknownSchema { path: String, header: String },
    #[error("{path}:{line}: {message}")]
    Row { path: String, line: usize, message: String },
    #[error("cannot write charts: {0}")]
    Io(#[from] std::io::Error),
}

struct Fields<'a> {
    path: &'a str,
    line: usize,
    row: &'a [String],
}

impl Fields<'_> {
    fn err(&self, message: String) -> PlotError {
        PlotError::Row { path: self.path.into(), line: self.line, message }
    }

    fn num(&self, i: usize, name: &str) -> Result<f64, PlotError> {
        self.row[i].parse::<f64>().map_err(|_| self.err(format!("`{}` is not a number in column {name}", self.row[i])))
    }

    fn opt_num(&self, i: usize, name: &str) -> Result<Option<f64>, PlotError> {
        if self.row[i].is_empty() {
            Ok(None)
        } else {
            self.num(i, name).map(Some)
        }
    }

    fn technique(&self, i: usize) -> Result<Technique, PlotError> {
        match self.row[i].as_str() {
            "pddt" => Ok(Technique::Pddt),
            "sddt" => Ok(Technique::Sddt),
            other => Err(self.err(format!("unknown technique `{other}`"))),
        }
    }
}

fn series_from_summary(t: &Table, path: &str) -> Result<StaticSeries, PlotError> {
    let mut by_d: BTreeMap<u64, [(f64, Option<f64>); 2]> = BTreeMap::new();
    let mut gain: BTreeMap<u64, Option<f64>> = BTreeMap::new();
    for (line, row) in &t.rows {
        let f = Fields { path, line: *line, row };
        let d = f.num(0, "d_count")?;
        let key = d.to_bits();
        let slot = by_d.entry(key).or_insert([(f64::NAN, None); 2]);
        let idx = match f.technique(1)? {
            Technique::Pddt => 0,
            Technique::Sddt => 1,
        };
        slot[idx] = (f.num(2, "mean_lambda")?, f.opt_num(3, "ci_half_width")?);
        gain.insert(key, f.opt_num(4, "mean_gain")?);
    }
    let mut s = StaticSeries::default();
    let mut keys: Vec<u64> = by_d.keys().copied().collect();
    keys.sort_by(|a, b| f64::from_bits(*a).total_cmp(&f64::from_bits(*b)));
    for k in keys {
        s.d_counts.push(f64::from_bits(k));
        s.pddt.push(by_d[&k][0]);
        s.sddt.push(by_d[&k][1]);
        s.gain.push(gain[&k]);
    }
    Ok(s)
}

fn series_from_samples(t: &Table, path: &str) -> Result<StaticSeries, PlotError> {
    // d_count → technique → replication → λ
    let mut cells: BTreeMap<u64, BTreeMap<Technique, BTreeMap<u64, f64>>> = BTreeMap::new();
    for (line, row) in &t.rows {
        let f = Fields { path, line: *line, row };
        let d = f.num(0, "d_count")?;
        if d < 0.0 || d.fract() != 0.0 {
            return Err(f.err(format!("d_count `{}` is not a count", row[0])));
        }
        let tech = f.technique(1)?;
        let rep = f.num(2, "replication")?;
        let lambda = f.num(3, "lambda")?;
        cells.entry(d as u64).or_default().entry(tech).or_default().insert(rep as u64, lambda);
    }
    let mut s = StaticSeries::default();
    for (d, techs) in cells {
        let get = |t: Technique| techs.get(&t).cloned().unwrap_or_default();
        let (p, q) = (get(Technique::Pddt), get(Technique::Sddt));
        let summarize = |m: &BTreeMap<u64, f64>| {
            let v: Vec<f64> = m.values().copied().collect();
            let ci = confidence_interval(&v, DEFAULT_CI_LEVEL);
            (ci.mean, ci.half_width)
        };
        let gains: Vec<f64> = p
            .iter()
            .filter_map(|(rep, &lp)| q.get(rep).and_then(|&ls| throughput_gain(lp, ls)))
            .collect();
        s.d_counts.push(d as f64);
        s.pddt.push(summarize(&p));
        s.sddt.push(summarize(&q));
        s.gain.push((!gains.is_empty()).then(|| gains.iter().sum::<f64>() / gains.len() as f64));
    }
    Ok(s)
}

fn epochs_from_table(t: &Table, path: &str) -> Result<Vec<EpochRecord>, PlotError> {
    t.rows
        .iter()
        .map(|(line, row)| {
            let f = Fields { path, line: *line, row };
            Ok(EpochRecord {
                index: f.num(0, "epoch_index")? as usize,
                minutes: f.num(1, "epoch_minutes")? as u64,
                lambda_pddt: f.num(2, "lambda_pddt")?,
                lambda_sddt: f.num(3, "lambda_sddt")?,
                gain: f.opt_num(4, "gain")?,
            })
        })
        .collect()
}

/// Charts for any CSV this crate emits, chosen by its header.
pub fn charts_from_table(t: &Table, path: &str) -> Result<Vec<(&'static str, String)>, PlotError> {
    if t.has_header(output::STATIC_SUMMARY_HEADER) {
        Ok(static_charts(&series_from_summary(t, path)?))
    } else if t.has_header(output::STATIC_SAMPLES_HEADER) {
        Ok(static_charts(&series_from_samples(t, path)?))
    } else if t.has_header(output::DYNAMIC_HEADER) {
        Ok(dynamic_charts(&epochs_from_table(t, path)?))
    } else {
        Err(PlotError::UnknownSchema { path: path.into(), header: t.header.join(",") })
    }
}

pub fn plot_csv(input: &Path, dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let table = output::read_table(input)?;
    let charts = charts_from_table(&table, &input.display().to_string())?;
    fs::create_dir_all(dir)?;
    Ok(write_all(charts, dir)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::parse_table;

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(10.0, 5.0), 2.0);
        assert_eq!(nice_step(480.0, 5.0), 100.0);
        assert!((nice_step(0.7, 5.0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_point_chart_renders() {
        let t = parse_table(
            "d_count,technique,mean_lambda,ci_half_width,mean_gain\n100,pddt,1.8,0,1.5\n100,sddt,1.2,0,1.5\n",
            "s.csv",
        )
        .unwrap();
        let charts = charts_from_table(&t, "s.csv").unwrap();
        assert_eq!(charts.len(), 2);
        for (_, svg) in &charts {
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("NaN") && !svg.contains("inf"));
        }
        // Zero-width intervals draw no whiskers, just markers.
        assert_eq!(charts[0].1.matches("<circle").count(), 2);
        assert!(!charts[0].1.contains(r#"class="ci""#));
    }

    #[test]
    fn error_bars_drawn_for_positive_width() {
        let t = parse_table(
            "d_count,technique,mean_lambda,ci_half_width,mean_gain\n20,pddt,5,0.5,1.2\n20,sddt,4,0.4,1.2\n50,pddt,3,0.2,1.3\n50,sddt,2,0.1,1.3\n",
            "s.csv",
        )
        .unwrap();
        let (_, svg) = &charts_from_table(&t, "s.csv").unwrap()[0];
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches(r#"class="ci""#).count(), 4);
        assert!(svg.contains("Number of traffic chunks |D|"));
        assert!(svg.contains("PDDT") && svg.contains("SDDT"));
    }

    #[test]
    fn bad_numbers_report_the_row() {
        let t = parse_table("epoch_index,epoch_minutes,lambda_pddt,lambda_sddt,gain\n0,30,1.2,1,1.2\n1,60,abc,1,\n", "d.csv").unwrap();
        match charts_from_table(&t, "d.csv") {
            Err(PlotError::Row { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        let t = parse_table("x,y\n1,2\n", "o.csv").unwrap();
        assert!(matches!(charts_from_table(&t, "o.csv"), Err(PlotError::UnknownSchema { .. })));
    }

    #[test]
    fn samples_csv_is_summarized() {
        let text = "d_count,technique,replication,lambda,t_max_gbit\n\
                    10,pddt,0,2,1\n10,pddt,1,4,2\n10,sddt,0,1,0.5\n10,sddt,1,2,1\n";
        let t = parse_table(text, "x").unwrap();
        let s = series_from_samples(&t, "x").unwrap();
        assert_eq!(s.d_counts, [10.0]);
        assert_eq!(s.pddt[0].0, 3.0);
        assert_eq!(s.gain[0], Some(2.0));
    }
}
