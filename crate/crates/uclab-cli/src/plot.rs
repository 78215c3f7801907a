//! Hand-rolled static SVG charts of report columns.
//!
//! A chart is a polyline over (x, y) pairs pulled out of a run document,
//! drawn on a fixed 640×480 canvas with linear or logarithmic axes. The
//! output is deterministic: no timestamps, no randomized ids.

use std::fmt::Write as _;

use crate::config::ConfigError;

/// Axis scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

fn axis_map(values: &[f64], scale: Scale, lo_px: f64, hi_px: f64) -> Result<impl Fn(f64) -> f64, ConfigError> {
    let transformed: Vec<f64> = match scale {
        Scale::Linear => values.to_vec(),
        Scale::Log => {
            if values.iter().any(|&v| v <= 0.0) {
                return Err(ConfigError::invalid(
                    "log axis requires strictly positive data",
                ));
            }
            values.iter().map(|v| v.ln()).collect()
        }
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &transformed {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        // Flat profile: pad so the line sits mid-chart.
        lo -= 1.0;
        hi += 1.0;
    }
    Ok(move |v: f64| {
        let t = match scale {
            Scale::Linear => v,
            Scale::Log => v.ln(),
        };
        lo_px + (t - lo) / (hi - lo) * (hi_px - lo_px)
    })
}

/// Render one polyline chart. `points` must be nonempty.
pub fn chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    x_scale: Scale,
    y_scale: Scale,
) -> Result<String, ConfigError> {
    if points.is_empty() {
        return Err(ConfigError::invalid("empty chart: no data rows"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fx = axis_map(&xs, x_scale, MARGIN, W - MARGIN)?;
    let fy = axis_map(&ys, y_scale, H - MARGIN, MARGIN)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="monospace" font-size="14">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="monospace" font-size="12">{}</text>"#,
        W / 2.0,
        H - 12.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="monospace" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        xml_escape(y_label)
    );
    let mut path = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", fx(*x), fy(*y));
    }
    let _ = writeln!(
        s,
        r##"<path d="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>"##,
        path.trim_end()
    );
    for (x, y) in points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f4e9c"/>"##,
            fx(*x),
            fy(*y)
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_a_loglog_chart() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, (i * i) as f64)).collect();
        let svg = chart("q vs tau", "tau", "q", &pts, Scale::Log, Scale::Log).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("</svg>"));
        assert!(svg.contains("circle"));
    }

    #[test]
    fn empty_data_is_an_error() {
        assert!(chart("t", "x", "y", &[], Scale::Linear, Scale::Linear).is_err());
    }

    #[test]
    fn log_axis_rejects_nonpositive_values() {
        let pts = vec![(0.0, 1.0), (1.0, 2.0)];
        assert!(chart("t", "x", "y", &pts, Scale::Log, Scale::Linear).is_err());
    }

    #[test]
    fn flat_profile_renders() {
        let pts = vec![(0.1, 1.0), (0.2, 1.0), (0.3, 1.0)];
        let svg = chart("N(r)", "r", "N", &pts, Scale::Linear, Scale::Linear).unwrap();
        assert!(svg.contains("path"));
    }
}
