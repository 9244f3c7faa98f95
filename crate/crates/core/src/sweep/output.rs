//! CSV and SVG emission, and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::{SweepRecord, SweepTable};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "c1,c2,omega_mhz,gcs_ratio,g1_mhz,g2_mhz,mu1_mhz,mu2_mhz,t_op_ns,F_joint,F_pair1,F_pair2,trace_error,min_eig,steps,wall_s";

/// Format like C's `%.{sig}g`: shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn format_g(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sig = sig.max(1);
    // Round first; the exponent of the rounded value picks the notation.
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g9(x: f64) -> String {
    format_g(x, 9)
}

fn nth(v: &[f64], k: usize) -> f64 {
    v.get(k).copied().unwrap_or(f64::NAN)
}

fn csv_row(r: &SweepRecord) -> String {
    let fields = [
        g9(nth(&r.c, 0)),
        g9(nth(&r.c, 1)),
        g9(r.omega_mhz),
        g9(r.gcs_ratio),
        g9(nth(&r.g_mhz, 0)),
        g9(nth(&r.g_mhz, 1)),
        g9(nth(&r.mu_mhz, 0)),
        g9(nth(&r.mu_mhz, 1)),
        g9(r.t_op_ns),
        g9(r.f_joint),
        g9(nth(&r.f_pairs, 0)),
        g9(nth(&r.f_pairs, 1)),
        g9(r.trace_error),
        g9(r.min_eigenvalue),
        r.steps.to_string(),
        g9(r.wall_seconds),
    ];
    fields.join(",")
}

/// One header row and one row per record, `\n` line endings.
///
/// `wall_s` is the only field that differs between reruns; pass
/// `include_timing = false` to write it as 0 and get byte-identical files.
pub fn to_csv(table: &SweepTable, include_timing: bool) -> String {
    let mut out = String::with_capacity(160 * (table.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.records {
        if include_timing {
            out.push_str(&csv_row(r));
        } else {
            let mut r = r.clone();
            r.wall_seconds = 0.0;
            out.push_str(&csv_row(&r));
        }
        out.push('\n');
    }
    out
}

/// Heatmap of F_joint over a two-axis grid: first axis along x, second
/// along y, failed points drawn grey.
pub fn svg_heatmap(table: &SweepTable, title: &str) -> Result<String> {
    if table.axes.len() != 2 {
        return Err(Error::InvalidParameter("a heatmap needs exactly two sweep axes".into()));
    }
    let (nx, ny) = (table.axes[0].len(), table.axes[1].len());
    let (cell_w, cell_h) = (480.0 / nx as f64, 360.0 / ny as f64);
    let (left, top) = (80.0, 40.0);
    let finite: Vec<f64> = table.records.iter().map(|r| r.f_joint).filter(|f| f.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut s = String::new();
    let w = |s: &mut String, line: String| {
        s.push_str(&line);
        s.push('\n');
    };
    w(&mut s, r#"<?xml version="1.0" encoding="UTF-8"?>"#.into());
    w(
        &mut s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="700" height="470" font-family="sans-serif" font-size="12">"#.into(),
    );
    w(&mut s, format!(r#"<text x="{}" y="24" font-size="14">{}</text>"#, left, escape(title)));
    for (i, r) in table.records.iter().enumerate() {
        let c = table.coords(i);
        let x = left + c[0] as f64 * cell_w;
        let y = top + (ny - 1 - c[1]) as f64 * cell_h;
        let fill = if r.f_joint.is_finite() {
            color((r.f_joint - lo) / span)
        } else {
            "#999999".into()
        };
        w(
            &mut s,
            format!(
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"><title>{}</title></rect>"#,
                cell_w + 0.01,
                cell_h + 0.01,
                g9(r.f_joint)
            ),
        );
    }
    let (xa, ya) = (&table.axes[0], &table.axes[1]);
    let bottom = top + 360.0;
    for (k, v) in [(0, xa.values[0]), (nx - 1, xa.values[nx - 1])] {
        let x = left + (k as f64 + 0.5) * cell_w;
        w(&mut s, format!(r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, bottom + 16.0, format_g(v, 4)));
    }
    w(&mut s, format!(r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + 240.0, bottom + 34.0, xa.param));
    for (k, v) in [(0, ya.values[0]), (ny - 1, ya.values[ny - 1])] {
        let y = top + (ny as f64 - 0.5 - k as f64) * cell_h;
        w(&mut s, format!(r#"<text x="{}" y="{y:.2}" text-anchor="end">{}</text>"#, left - 6.0, format_g(v, 4)));
    }
    w(
        &mut s,
        format!(r#"<text x="20" y="{}" transform="rotate(-90 20 {})" text-anchor="middle">{}</text>"#, top + 180.0, top + 180.0, ya.param),
    );
    // Color bar.
    let bar_x = left + 500.0;
    for k in 0..50 {
        let y = top + 360.0 - (k + 1) as f64 * 7.2;
        w(
            &mut s,
            format!(r#"<rect x="{bar_x}" y="{y:.2}" width="20" height="7.3" fill="{}"/>"#, color(k as f64 / 49.0)),
        );
    }
    w(&mut s, format!(r#"<text x="{}" y="{}">{}</text>"#, bar_x + 26.0, top + 10.0, format_g(hi, 4)));
    w(&mut s, format!(r#"<text x="{}" y="{}">{}</text>"#, bar_x + 26.0, bottom, format_g(lo, 4)));
    w(&mut s, format!(r#"<text x="{}" y="{}">F_joint</text>"#, bar_x - 4.0, top - 8.0));
    w(&mut s, "</svg>".into());
    Ok(s)
}

/// Linear map from dark blue (0) through teal to yellow (1).
fn color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let stops = [(0.0, [48.0, 18.0, 120.0]), (0.5, [32.0, 145.0, 140.0]), (1.0, [250.0, 230.0, 35.0])];
    let (a, b) = if u <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let f = (u - a.0) / (b.0 - a.0);
    let mut hex = String::from("#");
    for k in 0..3 {
        let _ = write!(hex, "{:02x}", (a.1[k] + f * (b.1[k] - a.1[k])).round() as u8);
    }
    hex
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write `bytes` to a temporary file next to `path`, then rename it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{Param, SweepAxis};
    use super::*;
    use crate::model::{Status, SystemSpec};

    #[test]
    fn g_format_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (10.2, "10.2"),
            (1.0 / 3.0, "0.333333333"),
            (40.3316825, "40.3316825"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5e-17, "-2.5e-17"),
            (0.999999999951, "1"),
            (99999999.96, "100000000"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x, 9), want, "{x}");
        }
        assert_eq!(format_g(f64::NAN, 9), "nan");
        assert_eq!(format_g(0.0, 9), "0");
    }

    fn table() -> SweepTable {
        let axes = vec![
            SweepAxis::list(Param::C1, vec![10.0, 11.0]).unwrap(),
            SweepAxis::list(Param::OmegaMhz, vec![100.0, 110.0, 120.0]).unwrap(),
        ];
        let records = (0..6)
            .map(|k| {
                let mut r = SweepRecord::from_spec(&SystemSpec::reference(10.0 + (k / 3) as f64).unwrap(), Status::Pass);
                r.f_joint = 0.9 + 0.01 * k as f64;
                r.wall_seconds = 1.5;
                r
            })
            .collect();
        SweepTable { axes, records }
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&table(), true);
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[7], "");
        assert!(lines.iter().skip(1).take(6).all(|l| l.split(',').count() == 16));
        assert!(lines[1].starts_with("10,14.1421356,"));
        assert!(!csv.contains('\r'));
        assert!(to_csv(&table(), false).contains(",0\n"));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = svg_heatmap(&table(), "F <joint>").unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<title>").count(), 6);
        assert!(svg.contains("F &lt;joint&gt;"));
        let mut one = table();
        one.axes.pop();
        assert!(svg_heatmap(&one, "x").is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert!(write_atomic(&dir.path().join("missing/out.csv"), b"x").is_err());
    }
}
