//! Reporting metrics: backlog to AvgTTA hours, colour bands, band
//! proportions over a run set, worst-run selection, and the CSV/SVG
//! emitters used in report bundles.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CostFunction, RunTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    Green,
    Yellow,
    Orange,
    Red,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::Green, Band::Yellow, Band::Orange, Band::Red];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Green => "green",
            Band::Yellow => "yellow",
            Band::Orange => "orange",
            Band::Red => "red",
        }
    }

    fn colour(self) -> &'static str {
        match self {
            Band::Green => "#2e9e44",
            Band::Yellow => "#e6c619",
            Band::Orange => "#ef8a17",
            Band::Red => "#d62728",
        }
    }
}

/// Green `[1,2)`, yellow `[2,3)`, orange `[3,4)`, red `[4,inf)`; exact
/// boundaries go to the worse band.
pub fn color_band(hours: f64) -> Band {
    if hours >= 4.0 {
        Band::Red
    } else if hours >= 3.0 {
        Band::Orange
    } else if hours >= 2.0 {
        Band::Yellow
    } else {
        Band::Green
    }
}

/// Backlog anchors for 1 hour and 4 hours of AvgTTA; linear in between and
/// beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandBoundaries {
    pub one_hour: f64,
    pub four_hours: f64,
}

impl BandBoundaries {
    pub fn paper() -> Self {
        Self::from_cost(&CostFunction::paper())
    }

    pub fn from_cost(cost: &CostFunction) -> Self {
        BandBoundaries {
            one_hour: cost.anchor_low,
            four_hours: cost.anchor_high,
        }
    }

    /// Backlogs at which 2, 3 and 4 hours are reached.
    pub fn thresholds(&self) -> [f64; 3] {
        let span = self.four_hours - self.one_hour;
        [
            self.one_hour + span / 3.0,
            self.one_hour + 2.0 * span / 3.0,
            self.four_hours,
        ]
    }

    pub fn backlog_to_avgtta(&self, backlog: f64) -> f64 {
        let hours = 1.0 + 3.0 * (backlog - self.one_hour) / (self.four_hours - self.one_hour);
        hours.max(1.0)
    }

    /// Band of a backlog, compared in backlog units so the thirds are exact
    /// for integer anchors.
    pub fn band_for_backlog(&self, backlog: u64) -> Band {
        let span = self.four_hours - self.one_hour;
        let z = 3.0 * (backlog as f64 - self.one_hour);
        if z >= 3.0 * span {
            Band::Red
        } else if z >= 2.0 * span {
            Band::Orange
        } else if z >= span {
            Band::Yellow
        } else {
            Band::Green
        }
    }
}

/// Which backlog an hour is classified by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BandBasis {
    /// End-of-hour backlog.
    #[default]
    PostArrival,
    /// Backlog right after the defender's allocation.
    PostAllocation,
}

pub fn band_counts(trace: &RunTrace, bounds: &BandBoundaries, basis: BandBasis) -> [u64; 4] {
    let mut counts = [0u64; 4];
    for r in &trace.records {
        let b = match basis {
            BandBasis::PostArrival => r.b_post,
            BandBasis::PostAllocation => r.b_alloc,
        };
        counts[bounds.band_for_backlog(b).index()] += 1;
    }
    counts
}

pub fn proportions_from_counts(counts: &[u64; 4]) -> [f64; 4] {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return [0.0; 4];
    }
    counts.map(|c| c as f64 / total as f64)
}

/// Fraction of all simulated hours in each band.
pub fn band_proportions(
    traces: &[RunTrace],
    bounds: &BandBoundaries,
    basis: BandBasis,
) -> Result<[f64; 4]> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("band proportions of an empty run set".into()));
    }
    let mut counts = [0u64; 4];
    for t in traces {
        for (acc, c) in counts.iter_mut().zip(band_counts(t, bounds, basis)) {
            *acc += c;
        }
    }
    Ok(proportions_from_counts(&counts))
}

/// Index of the run with the largest backlog ever; lowest index on ties.
pub fn worst_run_by_max(maxima: &[u64]) -> Result<usize> {
    let mut best: Option<(usize, u64)> = None;
    for (i, &m) in maxima.iter().enumerate() {
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidArgument("worst run of an empty run set".into()))
}

pub fn worst_run(traces: &[RunTrace]) -> Result<usize> {
    let maxima: Vec<u64> = traces.iter().map(RunTrace::max_backlog).collect();
    worst_run_by_max(&maxima)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetStats {
    pub proportions: [f64; 4],
    pub worst_run: usize,
    pub per_run_max: Vec<u64>,
}

pub fn run_set_stats(
    traces: &[RunTrace],
    bounds: &BandBoundaries,
    basis: BandBasis,
) -> Result<RunSetStats> {
    let per_run_max: Vec<u64> = traces.iter().map(RunTrace::max_backlog).collect();
    Ok(RunSetStats {
        proportions: band_proportions(traces, bounds, basis)?,
        worst_run: worst_run_by_max(&per_run_max)?,
        per_run_max,
    })
}

pub fn write_proportions_csv<W: Write>(
    rows: &[(String, [f64; 4])],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "label,green,yellow,orange,red")?;
    for (label, p) in rows {
        writeln!(w, "{label},{:.6},{:.6},{:.6},{:.6}", p[0], p[1], p[2], p[3])?;
    }
    Ok(())
}

/// Line chart of one run's end-of-hour backlog over the band backgrounds,
/// each segment coloured by the band of its end point.
pub fn trace_svg(trace: &RunTrace, bounds: &BandBoundaries, title: &str) -> String {
    let (w, h, pad) = (720.0, 360.0, 48.0);
    let hours = trace.records.len().max(1) as f64;
    let ymax = (trace.max_backlog() as f64)
        .max(bounds.four_hours * 1.25)
        .max(1.0);
    let px = |hour: f64| pad + (w - 2.0 * pad) * hour / hours;
    let py = |b: f64| h - pad - (h - 2.0 * pad) * (b / ymax).min(1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let edges = [0.0, bounds.thresholds()[0], bounds.thresholds()[1], bounds.four_hours, ymax];
    for (i, band) in Band::ALL.iter().enumerate() {
        let (lo, hi) = (edges[i].min(ymax), edges[i + 1].min(ymax));
        if hi <= lo {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}" fill-opacity="0.12"/>"#,
            pad,
            py(hi),
            w - 2.0 * pad,
            py(lo) - py(hi),
            band.colour()
        );
    }
    let mut prev = (0.0, trace.initial.backlog as f64);
    for r in &trace.records {
        let cur = (f64::from(r.hour), r.b_post as f64);
        let band = bounds.band_for_backlog(r.b_post);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"/>"#,
            px(prev.0),
            py(prev.1),
            px(cur.0),
            py(cur.1),
            band.colour()
        );
        prev = cur;
    }
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{:.1}" stroke="black"/>"#,
        h - pad
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">hour</text>"#,
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" font-family="sans-serif" font-size="11" transform="rotate(-90 14 {:.1})" text-anchor="middle">backlog (alerts)</text>"#,
        h / 2.0,
        h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Donut chart of band proportions.
pub fn proportions_svg(proportions: &[f64; 4], title: &str) -> String {
    let (cx, cy, r_out, r_in) = (160.0f64, 170.0f64, 120.0f64, 64.0f64);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="420" height="320" viewBox="0 0 420 320">"#
    );
    let _ = writeln!(s, r#"<rect width="420" height="320" fill="white"/>"#);
    let mut start = 0.0f64;
    for band in Band::ALL {
        let p = proportions[band.index()];
        if p <= 0.0 {
            continue;
        }
        if p >= 1.0 - 1e-12 {
            let _ = writeln!(
                s,
                r#"<circle cx="{cx}" cy="{cy}" r="{:.1}" fill="none" stroke="{}" stroke-width="{:.1}"/>"#,
                (r_out + r_in) / 2.0,
                band.colour(),
                r_out - r_in
            );
            break;
        }
        let end = start + p;
        let point = |frac: f64, r: f64| {
            let t = frac * std::f64::consts::TAU - std::f64::consts::FRAC_PI_2;
            (cx + r * t.cos(), cy + r * t.sin())
        };
        let large = if p > 0.5 { 1 } else { 0 };
        let (a, b, c, d) = (point(start, r_out), point(end, r_out), point(end, r_in), point(start, r_in));
        let _ = writeln!(
            s,
            r#"<path d="M {:.2} {:.2} A {r_out} {r_out} 0 {large} 1 {:.2} {:.2} L {:.2} {:.2} A {r_in} {r_in} 0 {large} 0 {:.2} {:.2} Z" fill="{}"/>"#,
            a.0, a.1, b.0, b.1, c.0, c.1, d.0, d.1,
            band.colour()
        );
        start = end;
    }
    for (i, band) in Band::ALL.iter().enumerate() {
        let y = 110.0 + 26.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="300" y="{:.1}" width="14" height="14" fill="{}"/><text x="320" y="{:.1}" font-family="sans-serif" font-size="12">{} {:.1}%</text>"#,
            y,
            band.colour(),
            y + 12.0,
            band.name(),
            100.0 * proportions[band.index()]
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="210" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        xml_escape(title)
    );
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
