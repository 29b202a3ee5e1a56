//! Self-contained SVG charts for the CSV outputs.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::record::write_file;
use crate::table::*;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 11] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79",
];

/// Named series of `(x, y)` points.
pub type Series = (String, Vec<(f64, f64)>);

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if lo < hi {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self {
            x: span(&mut xs.clone()),
            y: span(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open_svg(title: &str, x_label: &str, y_label: &str, frame: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    for (v, anchor, x, y) in [
        (frame.x.0, "middle", x0, y0 + 16.0),
        (frame.x.1, "middle", x1, y0 + 16.0),
        (frame.y.0, "end", x0 - 4.0, y0),
        (frame.y.1, "end", x0 - 4.0, y1 + 4.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.4}</text>"#);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    s
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            WIDTH - MARGIN - 110.0,
            y - 9.0,
            WIDTH - MARGIN - 96.0,
            y,
            escape(name)
        );
    }
}

/// One polyline per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let points = series.iter().flat_map(|(_, p)| p.iter());
    let frame = Frame::new(points.clone().map(|p| p.0), points.map(|p| p.1));
    let mut s = open_svg(title, x_label, y_label, &frame);
    for (i, (name, pts)) in series.iter().enumerate() {
        let d: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-name="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            escape(name),
            PALETTE[i % PALETTE.len()],
            d.join(" ")
        );
    }
    legend(&mut s, &series.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Running totals of `layers` at each x; the last row is the top edge.
pub fn stack(layers: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut acc = vec![0.0; layers.first().map_or(0, Vec::len)];
    layers
        .iter()
        .map(|layer| {
            acc.iter_mut().zip(layer).for_each(|(a, v)| *a += v);
            acc.clone()
        })
        .collect()
}

/// Stacked areas over `xs` on a fixed `[0, 1]` axis.
pub fn stacked_area(title: &str, x_label: &str, xs: &[f64], layers: &[(String, Vec<f64>)]) -> String {
    let frame = Frame {
        x: Frame::new(xs.iter().copied(), [0.0, 1.0].into_iter()).x,
        y: (0.0, 1.0),
    };
    let mut s = open_svg(title, x_label, "probability", &frame);
    let tops = stack(&layers.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
    let mut lower = vec![0.0; xs.len()];
    for (i, ((name, _), upper)) in layers.iter().zip(&tops).enumerate() {
        let mut pts: Vec<String> = xs
            .iter()
            .zip(upper)
            .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        pts.extend(
            xs.iter()
                .zip(&lower)
                .rev()
                .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))),
        );
        let _ = writeln!(
            s,
            r#"<polygon class="layer" data-name="{}" fill="{}" fill-opacity="0.8" points="{}"/>"#,
            escape(name),
            PALETTE[i % PALETTE.len()],
            pts.join(" ")
        );
        lower = upper.clone();
    }
    legend(&mut s, &layers.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

fn group<T, K: Ord>(rows: Vec<T>, key: impl Fn(&T) -> K) -> BTreeMap<K, Vec<T>> {
    let mut out: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for r in rows {
        out.entry(key(&r)).or_default().push(r);
    }
    out
}

fn series_of<T>(rows: &[T], name: impl Fn(&T) -> String, point: impl Fn(&T) -> (f64, f64)) -> Vec<Series> {
    let mut map: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        map.entry(name(r)).or_default().push(point(r));
    }
    map.into_iter()
        .map(|(n, mut p)| {
            p.sort_by(|a, b| a.0.total_cmp(&b.0));
            (n, p)
        })
        .collect()
}

/// Renders every input CSV. Curve CSVs from `analyze` are pooled so each
/// task gets one chart with a line per optimizer.
pub fn plot(csvs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let mut curve_rows: Vec<CurveRow> = Vec::new();
    let mut written = Vec::new();
    let emit = |name: String, svg: String, written: &mut Vec<PathBuf>| -> Result<()> {
        let path = out.join(name);
        write_file(&path, &svg)?;
        written.push(path);
        Ok(())
    };
    for path in csvs {
        let header = header_of(path)?;
        let stem = crate::commands::file_stem(path);
        let is = |h: &[&str]| header.iter().map(String::as_str).eq(h.iter().copied());
        if is(&CURVE_HEADER) {
            curve_rows.extend(read_csv::<CurveRow>(path, &CURVE_HEADER)?);
        } else if is(&PROB_HEADER) {
            let rows: Vec<ProbRow> = read_csv(path, &PROB_HEADER)?;
            for (task, rows) in group(rows, |r| r.task.clone()) {
                let mut xs: Vec<usize> = rows.iter().map(|r| r.budget).collect();
                xs.sort_unstable();
                xs.dedup();
                let layers: Vec<(String, Vec<f64>)> = series_of(&rows, |r| r.optimizer.clone(), |r| (r.budget as f64, r.probability))
                    .into_iter()
                    .map(|(n, p)| (n, p.into_iter().map(|q| q.1).collect()))
                    .collect();
                if layers.iter().any(|(_, v)| v.len() != xs.len()) {
                    return Err(CliError::parse(path, format!("{task}: ragged probability table")));
                }
                let xs: Vec<f64> = xs.into_iter().map(|b| b as f64).collect();
                let svg = stacked_area(&format!("P(best) on {task}"), "budget", &xs, &layers);
                emit(format!("{stem}__{task}.svg"), svg, &mut written)?;
            }
        } else if is(&TIME_HEADER) {
            let rows: Vec<TimeRow> = read_csv(path, &TIME_HEADER)?;
            for (task, rows) in group(rows, |r| r.task.clone()) {
                let series = series_of(&rows, |r| r.optimizer.clone(), |r| (r.steps as f64, r.mean));
                let svg = line_chart(&format!("Expected best on {task}"), "update steps", "objective", &series);
                emit(format!("{stem}__{task}.svg"), svg, &mut written)?;
            }
        } else if is(&RELATIVE_HEADER) {
            let rows: Vec<RelativeRow> = read_csv(path, &RELATIVE_HEADER)?;
            for (scope, rows) in group(rows, |r| r.scope.clone()) {
                let series = series_of(&rows, |r| r.optimizer.clone(), |r| (r.budget as f64, r.score));
                let svg = line_chart(&format!("Relative performance ({scope})"), "budget", "score", &series);
                emit(format!("{stem}__{scope}.svg"), svg, &mut written)?;
            }
        } else if is(&TUNABILITY_HEADER) {
            read_csv::<TunabilityRow>(path, &TUNABILITY_HEADER)?;
            eprintln!("note: {} is a table; nothing to plot", path.display());
        } else {
            return Err(CliError::parse(path, "unrecognized CSV header"));
        }
    }
    for (task, rows) in group(curve_rows, |r| r.task.clone()) {
        let series = series_of(&rows, |r| r.optimizer.clone(), |r| (r.budget as f64, r.mean));
        let svg = line_chart(&format!("Expected best on {task}"), "budget", "objective", &series);
        emit(format!("curves__{task}.svg"), svg, &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_tops_out_at_total() {
        let layers = vec![vec![0.5, 0.2, 0.0], vec![0.25, 0.3, 1.0], vec![0.25, 0.5, 0.0]];
        let tops = stack(&layers);
        assert_eq!(tops[2], vec![1.0, 1.0, 1.0]);
        assert_eq!(tops[0], layers[0]);
    }

    #[test]
    fn one_polyline_per_series() {
        let series = vec![
            ("a".to_string(), vec![(1.0, 2.0), (2.0, 1.0)]),
            ("b<c".to_string(), vec![(1.0, 3.0), (2.0, 3.0)]),
        ];
        let svg = line_chart("t", "x", "y", &series);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn full_stack_reaches_plot_top() {
        let layers = vec![
            ("a".to_string(), vec![0.5, 0.25]),
            ("b".to_string(), vec![0.5, 0.75]),
        ];
        let svg = stacked_area("p", "budget", &[1.0, 2.0], &layers);
        assert_eq!(svg.matches("<polygon").count(), 2);
        let top = format!("{:.2}", MARGIN);
        let last = svg.lines().rfind(|l| l.starts_with("<polygon")).unwrap();
        assert!(last.contains(&format!("{:.2},{top} {:.2},{top}", MARGIN, WIDTH - MARGIN)));
    }
}
