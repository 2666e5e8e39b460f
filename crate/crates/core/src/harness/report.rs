use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::{BerPoint, CfrPoint};
use crate::error::{Error, Result};

pub const BER_HEADER: &str =
    "snr_db,variant,bits,bit_errors,ber,windows,fallback_rate,ped_violations,seed,flags";
pub const CFR_HEADER: &str =
    "snr_db,variant,cfr,hber,error_blocks,blocks,codewords,codeword_failures,bits,bit_errors,seed,flags";
pub const WEIGHTS_HEADER: &str = "snr_db,variant,w,y_w,count";

fn flags(low_confidence: bool) -> &'static str {
    if low_confidence {
        "low-confidence"
    } else {
        ""
    }
}

pub fn ber_csv(points: &[BerPoint]) -> String {
    let mut s = format!("{BER_HEADER}\n");
    for p in points {
        let _ = writeln!(
            s,
            "{:.3},{},{},{},{:.6e},{},{:.6e},{},{},{}",
            p.snr_db,
            p.variant,
            p.bits_simulated,
            p.bit_errors,
            p.ber,
            p.windows,
            p.window_fallback_rate,
            p.ped_violations.map(|v| v.to_string()).unwrap_or_default(),
            p.seed,
            flags(p.low_confidence)
        );
    }
    s
}

pub fn cfr_csv(points: &[CfrPoint]) -> String {
    let mut s = format!("{CFR_HEADER}\n");
    for p in points {
        let _ = writeln!(
            s,
            "{:.3},{},{:.6e},{:.6e},{},{},{},{},{},{},{},{}",
            p.snr_db,
            p.variant,
            p.cfr,
            p.hber,
            p.error_blocks,
            p.blocks,
            p.codewords,
            p.codeword_failures,
            p.bits_simulated,
            p.bit_errors,
            p.seed,
            flags(p.low_confidence)
        );
    }
    s
}

pub fn weights_csv(points: &[CfrPoint]) -> String {
    let mut s = format!("{WEIGHTS_HEADER}\n");
    for p in points {
        let counts = p.weights.counts();
        for (w, y) in p.weights.probabilities().iter().enumerate() {
            let c = counts.map(|c| c[w].to_string()).unwrap_or_default();
            let _ = writeln!(s, "{:.3},{},{w},{y:.6e},{c}", p.snr_db, p.variant);
        }
    }
    s
}

/// One curve of a plot.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Groups `(variant, x, y)` triples into series in first-appearance order.
pub fn series(points: &[(String, f64, f64)]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for (name, x, y) in points {
        match out.iter_mut().find(|s| &s.name == name) {
            Some(s) => s.points.push((*x, *y)),
            None => out.push(Series {
                name: name.clone(),
                points: vec![(*x, *y)],
            }),
        }
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Log-scale plot of rate against SNR. Points with a zero rate or an
/// infinite SNR are left out.
pub fn svg_plot(series: &[Series], y_label: &str) -> String {
    let (w, h) = (640.0, 440.0);
    let (left, right, top, bottom) = (70.0, 170.0, 20.0, 50.0);
    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && *y > 0.0)
        .collect();
    let (mut x0, mut x1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, _)| (a.min(*x), b.max(*x)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (ymin, ymax) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, y)| (a.min(*y), b.max(*y)));
    let (d0, d1) = if ymin.is_finite() {
        (ymin.log10().floor(), ymax.log10().ceil().max(ymin.log10().floor() + 1.0))
    } else {
        (-6.0, 0.0)
    };
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (d1 - y.log10()) / (d1 - d0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let mut d = d0;
    while d <= d1 {
        let y = py(10f64.powf(d));
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
        d += 1.0;
    }
    let ticks = 5;
    for i in 0..=ticks {
        let x = x0 + (x1 - x0) * i as f64 / ticks as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.2}</text>"#,
            px(x),
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR (dB)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = ser
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && *y > 0.0)
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-name="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            ser.name,
            path.join(" ")
        );
        for &(x, y) in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            ser.name
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `ber.csv` (and `ber.svg` with `plot`) into `dir`.
pub fn emit_ber_report(points: &[BerPoint], dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    if points.is_empty() {
        return Err(Error::Input("no points to report".into()));
    }
    ensure_dir(dir)?;
    let mut out = vec![write(dir.join("ber.csv"), &ber_csv(points))?];
    if plot {
        let triples: Vec<_> = points.iter().map(|p| (p.variant.clone(), p.snr_db, p.ber)).collect();
        out.push(write(dir.join("ber.svg"), &svg_plot(&series(&triples), "BER"))?);
    }
    Ok(out)
}

/// Writes `cfr.csv`, `weights.csv` (and `cfr.svg` with `plot`) into `dir`.
pub fn emit_cfr_report(points: &[CfrPoint], dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    if points.is_empty() {
        return Err(Error::Input("no points to report".into()));
    }
    ensure_dir(dir)?;
    let mut out = vec![
        write(dir.join("cfr.csv"), &cfr_csv(points))?,
        write(dir.join("weights.csv"), &weights_csv(points))?,
    ];
    if plot {
        let triples: Vec<_> = points.iter().map(|p| (p.variant.clone(), p.snr_db, p.cfr)).collect();
        out.push(write(dir.join("cfr.svg"), &svg_plot(&series(&triples), "CFR"))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(variant: &str, snr: f64, ber: f64) -> BerPoint {
        BerPoint {
            snr_db: snr,
            variant: variant.into(),
            bits_simulated: 1000,
            bit_errors: (ber * 1000.0) as u64,
            ber,
            windows: 0,
            window_fallback_rate: 0.0,
            ped_violations: None,
            seed: 1,
            low_confidence: false,
        }
    }

    #[test]
    fn single_point_csv() {
        let csv = ber_csv(&[point("NPML", 20.0, 0.002)]);
        assert_eq!(
            csv,
            format!("{BER_HEADER}\n20.000,NPML,1000,2,2.000000e-3,0,0.000000e0,,1,\n")
        );
    }

    #[test]
    fn two_variants_three_snrs() {
        let pts: Vec<BerPoint> = ["A", "B"]
            .iter()
            .flat_map(|v| [19.0, 20.0, 21.0].map(|s| point(v, s, 1e-3 / (s - 18.0))))
            .collect();
        assert_eq!(ber_csv(&pts).lines().count(), 7);
        let triples: Vec<_> = pts.iter().map(|p| (p.variant.clone(), p.snr_db, p.ber)).collect();
        let svg = svg_plot(&series(&triples), "BER");
        assert_eq!(svg.matches("class=\"series\"").count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn writes_files_and_reports_paths() {
        let dir = tempfile::tempdir().unwrap();
        let out = emit_ber_report(&[point("A", 1.0, 0.1)], dir.path(), true).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|p| p.exists()));
        assert!(emit_ber_report(&[], dir.path(), false).is_err());
        let blocked = dir.path().join("file");
        std::fs::write(&blocked, "x").unwrap();
        let err = emit_ber_report(&[point("A", 1.0, 0.1)], &blocked.join("sub"), false).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
