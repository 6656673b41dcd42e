//! Self-contained SVG line charts of the result files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::HalfSpace;

use super::results::{read_results, BerRow, RadarRow, Rows};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(scale: Scale, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (scale == Scale::Linear || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = match scale {
                Scale::Linear => (0.0, 1.0),
                Scale::Log => (0.1, 1.0),
            };
        }
        match scale {
            Scale::Linear => {
                if hi - lo < 1e-12 * hi.abs().max(1.0) {
                    (lo, hi) = (lo - 0.5, hi + 0.5);
                }
            }
            Scale::Log => {
                lo = 10f64.powf(lo.log10().floor());
                hi = 10f64.powf(hi.log10().ceil());
                if hi <= lo {
                    hi = lo * 10.0;
                }
            }
        }
        Self { scale, lo, hi }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        match self.scale {
            Scale::Linear => Some((v - self.lo) / (self.hi - self.lo)),
            Scale::Log if v > 0.0 => Some((v / self.lo).log10() / (self.hi / self.lo).log10()),
            Scale::Log => None,
        }
    }

    fn ticks(&self) -> Vec<f64> {
        match self.scale {
            Scale::Log => {
                let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
                (a..=b).map(|e| 10f64.powi(e)).collect()
            }
            Scale::Linear => {
                let raw = (self.hi - self.lo) / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
                let first = (self.lo / step).ceil() as i64;
                let last = (self.hi / step).floor() as i64;
                (first..=last).map(|k| k as f64 * step).collect()
            }
        }
    }
}

fn tick_label(v: f64, scale: Scale) -> String {
    match scale {
        Scale::Log => format!("1e{}", v.log10().round() as i32),
        Scale::Linear => {
            let s = format!("{v:.3}");
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let x = Axis::fit(self.x_scale, self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let y = Axis::fit(self.y_scale, self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let px = |v: f64| x.unit(v).map(|u| LEFT + u * pw);
        let py = |v: f64| y.unit(v).map(|u| TOP + (1.0 - u) * ph);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        for t in x.ticks() {
            if let Some(gx) = px(t) {
                let _ = writeln!(s, r##"<line x1="{gx:.2}" y1="{TOP}" x2="{gx:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
                let _ = writeln!(s, r#"<text x="{gx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(t, x.scale));
            }
        }
        for t in y.ticks() {
            if let Some(gy) = py(t) {
                let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{gy:.2}" x2="{:.2}" y2="{gy:.2}" stroke="#ddd"/>"##, LEFT + pw);
                let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, gy + 4.0, tick_label(t, y.scale));
            }
        }
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            // points off a log axis (zero BER, say) break the polyline
            let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for &(vx, vy) in &series.points {
                match (px(vx), py(vy)) {
                    (Some(a), Some(b)) => segments.last_mut().unwrap().push((a, b)),
                    _ => segments.push(Vec::new()),
                }
            }
            for seg in segments.iter().filter(|seg| !seg.is_empty()) {
                let pts: Vec<String> = seg.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}/>"#,
                    pts.join(" "),
                    series.color
                );
                for (a, b) in seg {
                    let _ = writeln!(s, r#"<circle cx="{a:.2}" cy="{b:.2}" r="2.5" fill="{}"/>"#, series.color);
                }
            }
            let ly = TOP + 10.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="1.8"{dash}/>"#,
                lx + 24.0,
                series.color
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// One curve per `(M, b, side)`; the reflective side is dashed.
pub fn ber_chart(rows: &[BerRow]) -> Chart {
    let mut curves: BTreeMap<(usize, u32, u8), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let side = u8::from(r.side == HalfSpace::Reflective);
        curves.entry((r.slot_pulses, r.slot_bits, side)).or_default().push((r.snr_db, r.ber));
    }
    let mut colors: BTreeMap<(usize, u32), &'static str> = BTreeMap::new();
    let series = curves
        .into_iter()
        .map(|((m, b, side), mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let n = colors.len();
            let color = *colors.entry((m, b)).or_insert(PALETTE[n % PALETTE.len()]);
            let side = if side == 1 { HalfSpace::Reflective } else { HalfSpace::Transmissive };
            Series {
                label: format!("M={m}, b={b}, {}", side.as_str()),
                points,
                color,
                dashed: side == HalfSpace::Reflective,
            }
        })
        .collect();
    Chart {
        title: "BER vs reference SNR".into(),
        x_label: "SNR (dB)".into(),
        y_label: "BER".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Log,
        series,
    }
}

/// PD and RMSE charts, one colour per `P`; radar-only curves are dashed.
pub fn radar_charts(rows: &[RadarRow]) -> (Chart, Chart) {
    type Key = (usize, bool);
    let mut pd: BTreeMap<Key, Vec<(f64, f64)>> = BTreeMap::new();
    let mut rmse: BTreeMap<(usize, bool, u8), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        pd.entry((r.pulses_per_cpi, r.with_comm)).or_default().push((r.rcs_m2, r.pd));
        if let Some(v) = r.rmse_tr_mps {
            rmse.entry((r.pulses_per_cpi, r.with_comm, 0)).or_default().push((r.rcs_m2, v));
        }
        if let Some(v) = r.rmse_re_mps {
            rmse.entry((r.pulses_per_cpi, r.with_comm, 1)).or_default().push((r.rcs_m2, v));
        }
    }
    let mut colors: BTreeMap<usize, &'static str> = BTreeMap::new();
    let mut color = |p: usize| {
        let n = colors.len();
        *colors.entry(p).or_insert(PALETTE[n % PALETTE.len()])
    };
    let mode = |c: bool| if c { "with comm" } else { "radar only" };
    let sorted = |mut v: Vec<(f64, f64)>| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let pd_series = pd
        .into_iter()
        .map(|((p, c), points)| Series {
            label: format!("P={p}, {}", mode(c)),
            points: sorted(points),
            color: color(p),
            dashed: !c,
        })
        .collect();
    let rmse_series = rmse
        .into_iter()
        .map(|((p, c, side), points)| Series {
            label: format!("P={p}, {}, {}", if side == 0 { "tr" } else { "re" }, mode(c)),
            points: sorted(points),
            color: color(p),
            dashed: !c,
        })
        .collect();
    (
        Chart {
            title: "Probability of detecting both targets".into(),
            x_label: "RCS (m²)".into(),
            y_label: "PD".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Linear,
            series: pd_series,
        },
        Chart {
            title: "Radial velocity RMSE".into(),
            x_label: "RCS (m²)".into(),
            y_label: "RMSE (m/s)".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            series: rmse_series,
        },
    )
}

/// Reads result CSVs and writes `ber_vs_snr.svg`, `pd_vs_rcs.svg` and
/// `rmse_vs_rcs.svg` as applicable. Nothing is written unless every input
/// parses and holds rows.
pub fn emit_plots(results: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("no result files given".into()));
    }
    let mut radar = Vec::new();
    let mut ber = Vec::new();
    for path in results {
        let rec = read_results(path).map_err(|e| match e {
            Error::Parse { what, message } => Error::Parse {
                what,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        match rec.rows {
            Rows::Radar(r) => radar.extend(r),
            Rows::Ber(r) => ber.extend(r),
        }
    }
    let mut files = Vec::new();
    if !ber.is_empty() {
        files.push(("ber_vs_snr.svg", ber_chart(&ber)));
    }
    if !radar.is_empty() {
        let (pd, rmse) = radar_charts(&radar);
        files.push(("pd_vs_rcs.svg", pd));
        files.push(("rmse_vs_rcs.svg", rmse));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, chart) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, chart.to_svg())?;
        written.push(path);
    }
    Ok(written)
}
