//! CSV rows and the SVG line plot.

use std::fmt::Write as _;
use std::io::Write;

use crate::config::RunMode;
use crate::CliError;

pub const HEADER: [&str; 5] = ["axis", "mode", "value", "ci95", "wall_ms"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub mode: RunMode,
    pub value: f64,
    /// 95% half-width, simulator rows only.
    pub ci95: Option<f64>,
    pub wall_ms: f64,
}

/// `x` rounded to 9 significant digits in plain decimal notation.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci.split_once('e').map_or(0, |(_, e)| e.parse().unwrap_or(0));
    let rounded: f64 = sci.parse().unwrap_or(x);
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{rounded:.decimals$}");
    // trailing zeros carry no information
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow], timing: bool) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        let ci = r.ci95.map(format_sig).unwrap_or_default();
        let wall = if timing { format!("{:.3}", r.wall_ms) } else { String::new() };
        w.write_record([format_sig(r.axis_value), r.mode.to_string(), format_sig(r.value), ci, wall])?;
    }
    w.flush()?;
    Ok(())
}

/// Line plot of `value` against the axis, one polyline per mode.
pub fn render_svg(rows: &[ResultRow], x_label: &str, y_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 70.0;
    const R: f64 = 130.0;
    const T: f64 = 20.0;
    const B: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

    let span = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(&mut rows.iter().map(|r| r.axis_value));
    let (y0, y1) = span(&mut rows.iter().map(|r| r.value));
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="M{L} {T} V{} H{}" fill="none" stroke="black"/>"#, H - B, W - R);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(xv),
            H - B + 18.0,
            format_sig(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            L - 6.0,
            py(yv) + 4.0,
            format_sig(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        L + 0.5 * (W - L - R),
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        T + 0.5 * (H - T - B),
        T + 0.5 * (H - T - B)
    );
    let mut modes: Vec<RunMode> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    for (k, mode) in modes.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = rows
            .iter()
            .filter(|r| r.mode == *mode)
            .map(|r| format!("{:.2},{:.2}", px(r.axis_value), py(r.value)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = T + 16.0 * (k as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            W - R + 12.0,
            W - R + 36.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{mode}</text>"#, W - R + 42.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(0.123456789123), "0.123456789");
        assert_eq!(format_sig(1217512345.6), "1217512350");
        assert_eq!(format_sig(-10.0), "-10");
        assert_eq!(format_sig(2.5e-7), "0.00000025");
        assert_eq!(format_sig(0.9999999999), "1");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333");
    }

    #[test]
    fn csv_has_the_fixed_header_and_empty_cells() {
        let rows = [
            ResultRow {
                axis_value: -10.0,
                mode: RunMode::Analytic,
                value: 0.5,
                ci95: None,
                wall_ms: 1.25,
            },
            ResultRow {
                axis_value: -8.0,
                mode: RunMode::Mc,
                value: 0.25,
                ci95: Some(0.01),
                wall_ms: 2.0,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "axis,mode,value,ci95,wall_ms\n-10,analytic,0.5,,1.250\n-8,mc,0.25,0.01,2.000\n"
        );
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, false).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("-8,mc,0.25,0.01,\n"));
    }

    #[test]
    fn svg_has_one_polyline_per_mode() {
        let rows: Vec<ResultRow> = (0..5)
            .flat_map(|i| {
                [RunMode::Analytic, RunMode::Mc].map(|mode| ResultRow {
                    axis_value: i as f64,
                    mode,
                    value: 0.1 * i as f64,
                    ci95: None,
                    wall_ms: 0.0,
                })
            })
            .collect();
        let svg = render_svg(&rows, "beta_db", "coverage");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">mc</text>"));
        // a single point still renders
        assert!(render_svg(&rows[..1], "x", "y").contains("<polyline"));
    }
}
