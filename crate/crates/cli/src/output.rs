use std::fmt::Write as _;
use std::path::Path;

use eastwalk_core::estimators::EstimateWithCI;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const HEADER: [&str; 19] = [
    "command",
    "kind",
    "rho",
    "epsilon",
    "L",
    "topology",
    "horizon",
    "replicas",
    "seed",
    "param1",
    "param2",
    "param3",
    "value",
    "se",
    "ci_lo",
    "ci_hi",
    "n_batches",
    "runtime_s",
    "version",
];

/// Run-level columns shared by every row of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub command: String,
    pub kind: String,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub len: usize,
    pub topology: &'static str,
    pub horizon: Option<f64>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub run: RunInfo,
    /// Suffix appended to the command column, e.g. `walker` in `front:walker`.
    pub quantity: Option<&'static str>,
    pub epsilon: Option<f64>,
    pub params: [Option<f64>; 3],
    pub value: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub n_batches: Option<usize>,
    pub runtime_s: f64,
}

impl ResultRecord {
    pub fn estimate(run: &RunInfo, e: &EstimateWithCI) -> Self {
        ResultRecord {
            run: run.clone(),
            quantity: None,
            epsilon: run.epsilon,
            params: [None; 3],
            value: e.value,
            se: e.se,
            ci: e.ci95,
            n_batches: Some(e.n_batches),
            runtime_s: e.budget.wall_clock,
        }
    }

    /// Deterministic value with no sampling error.
    pub fn exact(run: &RunInfo, value: f64) -> Self {
        ResultRecord {
            run: run.clone(),
            quantity: None,
            epsilon: run.epsilon,
            params: [None; 3],
            value,
            se: 0.0,
            ci: (value, value),
            n_batches: None,
            runtime_s: 0.0,
        }
    }

    pub fn named(mut self, quantity: &'static str) -> Self {
        self.quantity = Some(quantity);
        self
    }

    pub fn at(mut self, params: [Option<f64>; 3]) -> Self {
        self.params = params;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn timed(mut self, seconds: f64) -> Self {
        self.runtime_s = seconds;
        self
    }
}

fn float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn int<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results(records: &[ResultRecord], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for r in records {
        let command = match r.quantity {
            Some(q) => format!("{}:{q}", r.run.command),
            None => r.run.command.clone(),
        };
        w.write_record([
            command,
            r.run.kind.clone(),
            float(r.run.rho),
            float(r.epsilon),
            r.run.len.to_string(),
            r.run.topology.to_string(),
            float(r.run.horizon),
            int(r.run.replicas),
            int(r.run.seed),
            float(r.params[0]),
            float(r.params[1]),
            float(r.params[2]),
            float(Some(r.value)),
            float(Some(r.se)),
            float(Some(r.ci.0)),
            float(Some(r.ci.1)),
            int(r.n_batches),
            format!("{:.3}", r.runtime_s),
            VERSION.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Points with symmetric error bars.
pub struct Series<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: Vec<(f64, f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}

/// Minimal line plot: frame, axis labels, error bars, markers, polyline.
pub fn render_svg(s: &Series) -> String {
    let (x0, x1) = span(s.points.iter().map(|p| p.0));
    let (y0, y1) = span(s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2]));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r#"<line x1="{PAD}" x2="{}" y1="{1:.2}" y2="{1:.2}" stroke="grey" stroke-dasharray="4 3"/>"#,
            W - PAD,
            sy(0.0)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, s.title);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, s.x_label);
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        H / 2.0,
        s.y_label
    );
    for (v, anchor_x, anchor_y) in [(x0, sx(x0), H - PAD + 16.0), (x1, sx(x1), H - PAD + 16.0)] {
        let _ = writeln!(out, r#"<text x="{anchor_x:.2}" y="{anchor_y:.2}" text-anchor="middle">{v:.3}</text>"#);
    }
    for v in [y0, y1] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.4}</text>"#, PAD - 4.0, sy(v) + 4.0);
    }
    for &(x, y, e) in &s.points {
        if e > 0.0 {
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1:.2}" y2="{2:.2}" stroke="steelblue"/>"#,
                sx(x),
                sy(y - e),
                sy(y + e)
            );
        }
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    let line: Vec<String> = s.points.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="steelblue"/>"#, line.join(" "));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_record_list_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_results(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("command,kind,rho,epsilon,L,topology"));
    }

    #[test]
    fn svg_is_well_formed_for_flat_data() {
        let svg = render_svg(&Series {
            title: "t",
            x_label: "x",
            y_label: "y",
            points: vec![(0.0, 1.0, 0.0), (1.0, 1.0, 0.0)],
        });
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("NaN"));
    }
}
