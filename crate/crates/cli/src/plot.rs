//! CSV and SVG renderings of report series. Plotting draws the stored rows
//! as they are; the only transform is a log axis for data spanning several
//! decades.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail};

use crate::report::{Report, Series};

pub const PLOT_KINDS: [&str; 3] = ["eigen_trajectories", "principal_angles", "convergence"];

pub fn series<'a>(report: &'a Report, kind: &str) -> anyhow::Result<&'a Series> {
    match report.series.get(kind) {
        Some(s) if !s.rows.is_empty() => Ok(s),
        _ => Err(anyhow!("missing series `{kind}` in report `{}`", report.scenario.name)),
    }
}

/// Header row with the column names, then one line per row.
pub fn csv(series: &Series) -> String {
    let mut out = series.columns.join(",");
    out.push('\n');
    for row in &series.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn column(series: &Series, name: &str) -> anyhow::Result<usize> {
    series
        .columns
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| anyhow!("series has no column `{name}`"))
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64> + Clone) -> anyhow::Result<Self> {
        let finite = values.filter(|v| v.is_finite());
        let (lo, hi) = finite
            .clone()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            bail!("series has no finite values");
        }
        let log = lo > 0.0 && hi / lo > 1e3;
        let (lo, hi) = if log { (lo.log10().floor(), hi.log10().ceil()) } else { (lo, hi) };
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Ok(Axis { lo, hi, log })
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                out.push(((e - self.lo) / (self.hi - self.lo), format!("1e{}", e as i64)));
                e += step;
            }
            return out;
        }
        (0..=4)
            .map(|i| {
                let u = i as f64 / 4.0;
                let v = self.lo + u * (self.hi - self.lo);
                (u, format!("{v:.3}"))
            })
            .collect()
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

pub fn svg(series: &Series, title: &str) -> anyhow::Result<String> {
    let xi = column(series, &series.x)?;
    let yi = column(series, &series.y)?;
    let gi = series.group.as_deref().map(|g| column(series, g)).transpose()?;
    let xa = Axis::new(series.rows.iter().map(move |r| r[xi]))?;
    let ya = Axis::new(series.rows.iter().map(move |r| r[yi]))?;

    // rows keep their stored order within each group
    let mut groups: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &series.rows {
        let g = gi.map_or(0, |g| r[g] as i64);
        let (Some(ux), Some(uy)) = (xa.unit(r[xi]), ya.unit(r[yi])) else {
            continue;
        };
        let px = LEFT + ux * (W - LEFT - RIGHT);
        let py = TOP + (1.0 - uy) * (H - TOP - BOTTOM);
        groups.entry(g).or_default().push((px, py));
    }

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#)?;
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title))?;
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0)?;
    for (u, label) in xa.ticks() {
        let x = x0 + u * (x1 - x0);
        writeln!(s, r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y1 + 4.0)?;
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, y1 + 16.0)?;
    }
    for (u, label) in ya.ticks() {
        let y = y1 - u * (y1 - y0);
        writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0)?;
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 6.0, y + 4.0)?;
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(&series.x))?;
    writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(&series.y)
    )?;
    for (k, (g, pts)) in groups.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "))?;
        if pts.len() == 1 {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, pts[0].0, pts[0].1)?;
        }
        if let Some(name) = &series.group {
            if k < 12 {
                let y = y0 + 14.0 + 13.0 * k as f64;
                writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" fill="{color}">{} {g}</text>"#, x1 - 6.0, escape(name))?;
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines() -> Series {
        Series {
            columns: vec!["t".into(), "label".into(), "eigenvalue".into()],
            x: "t".into(),
            y: "eigenvalue".into(),
            group: Some("label".into()),
            rows: vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 6.0], vec![1.0, 1.0, 7.0]],
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let text = csv(&lines());
        let mut it = text.lines();
        assert_eq!(it.next(), Some("t,label,eigenvalue"));
        assert_eq!(it.count(), 4);
    }

    #[test]
    fn svg_draws_one_polyline_per_group() {
        let text = svg(&lines(), "trajectories").unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(text.starts_with("<svg"));
    }

    #[test]
    fn log_axis_for_wide_ranges() {
        let a = Axis::new([1e-12, 1e-3, 1.0].into_iter()).unwrap();
        assert!(a.log);
        assert_eq!((a.lo, a.hi), (-12.0, 0.0));
        assert!(!Axis::new([-1.0, 2.0].into_iter()).unwrap().log);
    }
}
