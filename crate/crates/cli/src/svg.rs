//! Minimal static SVG line and scatter plots.

use std::fmt::Write as _;
use std::path::Path;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(points: &[(f64, f64)], extra_y: &[f64]) -> Self {
        let finite = points.iter().filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in finite {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for &y in extra_y {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        Self { x: (x0, x1), y: (y0, y1) }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }
}

fn header(out: &mut String, title: &str, xlabel: &str, ylabel: &str, frame: &Frame) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>
<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>
<text x="{PAD}" y="{}" text-anchor="middle">{:.3}</text>
<text x="{}" y="{}" text-anchor="middle">{:.3}</text>
<text x="{}" y="{}" text-anchor="end">{:.3}</text>
<text x="{}" y="{}" text-anchor="end">{:.3}</text>
"#,
        W / 2.0,
        escape(title),
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD,
        W / 2.0,
        H - 12.0,
        escape(xlabel),
        H / 2.0,
        H / 2.0,
        escape(ylabel),
        H - PAD + 16.0,
        frame.x.0,
        W - PAD,
        H - PAD + 16.0,
        frame.x.1,
        PAD - 4.0,
        H - PAD,
        frame.y.0,
        PAD - 4.0,
        PAD + 4.0,
        frame.y.1,
    );
}

fn hline(out: &mut String, frame: &Frame, y: f64) {
    let _ = writeln!(out, r##"<line x1="{PAD}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#c33" stroke-dasharray="4 3"/>"##, frame.py(y), W - PAD);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write(path: &Path, title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)], reference: Option<f64>) -> std::io::Result<()> {
    let frame = Frame::fit(points, reference.as_slice());
    let mut out = String::new();
    header(&mut out, title, xlabel, ylabel, &frame);
    if let Some(y) = reference {
        hline(&mut out, &frame, y);
    }
    let coords: Vec<String> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let _ = writeln!(out, r##"<polyline fill="none" stroke="#246" stroke-width="1.5" points="{}"/>"##, coords.join(" "));
    out.push_str("</svg>\n");
    std::fs::write(path, out)
}

pub fn scatter(path: &Path, title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)], references: &[f64]) -> std::io::Result<()> {
    let frame = Frame::fit(points, references);
    let mut out = String::new();
    header(&mut out, title, xlabel, ylabel, &frame);
    for &y in references {
        hline(&mut out, &frame, y);
    }
    for &(x, y) in points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#246"/>"##, frame.px(x), frame.py(y));
    }
    out.push_str("</svg>\n");
    std::fs::write(path, out)
}
