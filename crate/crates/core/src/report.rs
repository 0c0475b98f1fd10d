//! Deterministic run artifacts: CSV (RFC-4180 via the csv crate), JSON
//! with stable key order, minimal self-contained SVG plots, and a
//! manifest listing every output file with its content hash.
//!
//! Identical config + seed must produce byte-identical CSV/JSON, so the
//! manifest carries no wall-clock data; timestamps go to `run.log`,
//! which is outside the determinism contract.

use crate::error::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub config: String,
    pub files: Vec<ManifestEntry>,
    pub summary: BTreeMap<String, String>,
}

/// Collects artifacts under one output directory and finalizes the
/// manifest.
pub struct ArtifactWriter {
    dir: PathBuf,
    subcommand: String,
    files: Vec<ManifestEntry>,
    log_lines: Vec<String>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path, subcommand: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            subcommand: subcommand.to_string(),
            files: Vec::new(),
            log_lines: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log(&mut self, line: impl Into<String>) {
        self.log_lines.push(line.into());
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.files.push(ManifestEntry {
            name: name.to_string(),
            sha256: format!("{:x}", hasher.finalize()),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write_bytes(name, &buf)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(header)?;
        for row in rows {
            wtr.write_record(row)?;
        }
        let buf = wtr.into_inner().map_err(|e| e.into_error())?;
        self.write_bytes(name, &buf)
    }

    pub fn write_svg(
        &mut self,
        name: &str,
        title: &str,
        axes: &PlotAxes,
        series: &[PlotSeries],
    ) -> Result<()> {
        let svg = render_svg(title, axes, series);
        self.write_bytes(name, svg.as_bytes())
    }

    /// Write `manifest.json` (deterministic) and `run.log` (timestamps,
    /// free-form notes; excluded from the determinism contract).
    pub fn finish(
        mut self,
        config_echo: &str,
        seed: u64,
        summary: BTreeMap<String, String>,
    ) -> Result<()> {
        let manifest = Manifest {
            tool: "starkshell".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.clone(),
            seed,
            config: config_echo.to_string(),
            files: std::mem::take(&mut self.files),
            summary,
        };
        let mut buf = serde_json::to_vec_pretty(&manifest)?;
        buf.push(b'\n');
        std::fs::write(self.dir.join("manifest.json"), &buf)?;

        let mut log = std::fs::File::create(self.dir.join("run.log"))?;
        writeln!(
            log,
            "starkshell {} `{}` finished at unix {}",
            env!("CARGO_PKG_VERSION"),
            self.subcommand,
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        )?;
        for line in &self.log_lines {
            writeln!(log, "{line}")?;
        }
        Ok(())
    }
}

// --- SVG plotting -----------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PlotAxes {
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f6fb2", "#d1495b", "#3a8c5c", "#8c6bb1", "#c98a12", "#3b3b3b"];

fn axis_transform(v: f64, log: bool) -> Option<f64> {
    if log {
        if v > 0.0 {
            Some(v.log10())
        } else {
            None
        }
    } else {
        Some(v)
    }
}

/// Minimal deterministic line plot: fixed viewport, one polyline per
/// series, legend in the top-right corner.
pub fn render_svg(title: &str, axes: &PlotAxes, series: &[PlotSeries]) -> String {
    let width = 640.0;
    let height = 420.0;
    let ml = 70.0;
    let mr = 20.0;
    let mt = 40.0;
    let mb = 55.0;

    let mut pts: Vec<Vec<(f64, f64)>> = Vec::new();
    for s in series {
        let transformed: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter_map(|&(x, y)| {
                Some((axis_transform(x, axes.log_x)?, axis_transform(y, axes.log_y)?))
            })
            .collect();
        pts.push(transformed);
    }
    let all: Vec<(f64, f64)> = pts.iter().flatten().copied().collect();
    let (x0, x1, y0, y1) = if all.is_empty() {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        let mut x0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for &(x, y) in &all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let pad = |a: f64, b: f64| {
            let span = (b - a).abs().max(1e-12);
            (a - 0.05 * span, b + 0.05 * span)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    };

    let sx = (width - ml - mr) / (x1 - x0);
    let sy = (height - mt - mb) / (y1 - y0);
    let map = |x: f64, y: f64| (ml + (x - x0) * sx, height - mb - (y - y0) * sy);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>\n",
        width / 2.0,
        xml_escape(title)
    ));
    // frame
    out.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"#444\" stroke-width=\"1\"/>\n",
        width - ml - mr,
        height - mt - mb
    ));
    // ticks: 5 per axis
    for i in 0..=4 {
        let tx = x0 + (x1 - x0) * i as f64 / 4.0;
        let (px, _) = map(tx, y0);
        let label = if axes.log_x { format!("1e{tx:.1}") } else { format!("{tx:.3}") };
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#444\"/>\n",
            height - mb,
            height - mb + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{label}</text>\n",
            height - mb + 18.0
        ));
        let ty = y0 + (y1 - y0) * i as f64 / 4.0;
        let (_, py) = map(x0, ty);
        let label = if axes.log_y { format!("1e{ty:.1}") } else { format!("{ty:.3}") };
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{ml}\" y2=\"{py:.2}\" stroke=\"#444\"/>\n",
            ml - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">{label}</text>\n",
            ml - 8.0,
            py + 4.0
        ));
    }
    // axis labels
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\">{}</text>\n",
        ml + (width - ml - mr) / 2.0,
        height - 12.0,
        xml_escape(&axes.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        mt + (height - mt - mb) / 2.0,
        mt + (height - mt - mb) / 2.0,
        xml_escape(&axes.y_label)
    ));
    // series
    for (i, (s, tp)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if tp.len() > 1 {
            let path: Vec<String> = tp
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = map(x, y);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for &(x, y) in tp {
            let (px, py) = map(x, y);
            out.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"{color}\"/>\n"
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             fill=\"{color}\">{}</text>\n",
            width - mr - 180.0,
            mt + 16.0 + 14.0 * i as f64,
            xml_escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Format a float for CSV: shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn artifacts_are_deterministic_and_hashed() {
        let dir = tempfile::tempdir().unwrap();
        let run = |sub: &str| {
            let d = dir.path().join(sub);
            let mut w = ArtifactWriter::create(&d, "test").unwrap();
            w.write_csv("a.csv", &["x", "y"], &[vec!["1".into(), "2.5".into()]]).unwrap();
            w.write_json("b.json", &BTreeMap::from([("k", 1.0f64)])).unwrap();
            w.write_svg(
                "c.svg",
                "plot",
                &PlotAxes {
                    x_label: "x".into(),
                    y_label: "y".into(),
                    log_x: false,
                    log_y: true,
                },
                &[PlotSeries { label: "s".into(), points: vec![(1.0, 1.0), (2.0, 0.1)] }],
            )
            .unwrap();
            w.finish("cfg", 7, BTreeMap::new()).unwrap();
            d
        };
        let d1 = run("one");
        let d2 = run("two");
        for name in ["a.csv", "b.json", "c.svg", "manifest.json"] {
            let b1 = std::fs::read(d1.join(name)).unwrap();
            let b2 = std::fs::read(d2.join(name)).unwrap();
            assert_eq!(b1, b2, "{name} not byte-identical");
        }
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(d1.join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["files"].as_array().unwrap().len(), 3);
        for f in manifest["files"].as_array().unwrap() {
            assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
        }
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::create(dir.path(), "test").unwrap();
        w.write_csv("q.csv", &["a"], &[vec!["x,y".into()]]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("q.csv")).unwrap();
        assert!(text.contains("\"x,y\""));
        w.finish("cfg", 0, BTreeMap::new()).unwrap();
    }
}
