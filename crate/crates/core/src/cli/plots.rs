//! Overlaid histogram images of ITM score differences, each with a CSV twin.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::eval::{diff_histogram, DiffHistogram, ItmDiffSamples};

const WIDTH: u32 = 480;
const HEIGHT: u32 = 300;
const MARGIN: u32 = 20;
const COLOURS: [[u8; 3]; 2] = [[70, 130, 180], [220, 80, 60]];

/// Plots drawn per report: random-pair metric against counterfactual metric.
pub const OVERLAYS: [(&str, [&str; 2]); 2] = [("ir", ["ir_random", "ir_cf"]), ("tr", ["tr_random", "tr_cf"])];

fn blend(px: &mut Rgb<u8>, c: [u8; 3]) {
    for i in 0..3 {
        px[i] = ((px[i] as u16 + c[i] as u16) / 2) as u8;
    }
}

/// Overlay of the named metrics as half-transparent bars.
pub fn draw_overlay(hist: &DiffHistogram, metrics: &[&str]) -> RgbImage {
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let bins = hist.edges.len() - 1;
    let (plot_w, plot_h) = (WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN);
    let peak = metrics
        .iter()
        .filter_map(|m| hist.metrics.get(*m))
        .flat_map(|h| h.counts.iter().copied())
        .max()
        .unwrap_or(0)
        .max(1);
    for (colour, m) in COLOURS.iter().zip(metrics) {
        let Some(h) = hist.metrics.get(*m) else { continue };
        for (b, &c) in h.counts.iter().enumerate() {
            let x0 = MARGIN + (b as u32 * plot_w) / bins as u32;
            let x1 = MARGIN + ((b as u32 + 1) * plot_w) / bins as u32;
            let bar = (c * plot_h as u64 / peak) as u32;
            for x in x0..x1.max(x0 + 1) {
                for y in (HEIGHT - MARGIN - bar)..(HEIGHT - MARGIN) {
                    blend(img.get_pixel_mut(x, y), *colour);
                }
            }
        }
    }
    let (lo, hi) = (hist.edges[0], hist.edges[bins]);
    if lo < 0.0 && hi > 0.0 {
        let x = MARGIN + ((-lo / (hi - lo)) * plot_w as f64) as u32;
        for y in MARGIN..HEIGHT - MARGIN {
            img.put_pixel(x, y, Rgb([90, 90, 90]));
        }
    }
    for x in MARGIN..WIDTH - MARGIN {
        img.put_pixel(x, HEIGHT - MARGIN, Rgb([0, 0, 0]));
    }
    for y in MARGIN..=HEIGHT - MARGIN {
        img.put_pixel(MARGIN, y, Rgb([0, 0, 0]));
    }
    img
}

/// `metric,bin_left,bin_right,count` rows for the named metrics.
pub fn overlay_csv(hist: &DiffHistogram, metrics: &[&str]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
    w.write_record(["metric", "bin_left", "bin_right", "count"]).map_err(err)?;
    for m in metrics {
        let Some(h) = hist.metrics.get(*m) else { continue };
        for (i, c) in h.counts.iter().enumerate() {
            w.write_record([m.to_string(), hist.edges[i].to_string(), hist.edges[i + 1].to_string(), c.to_string()])
                .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Precondition(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Read the `samples` field of an `eval-itm` output file.
pub fn read_itm_samples(path: &Path) -> Result<ItmDiffSamples> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let samples = v.get_mut("samples").map(serde_json::Value::take).unwrap_or(v);
    serde_json::from_value(samples).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Two overlay PNGs and two CSVs per report, named after the report's file
/// stem. Every report is read and binned before anything is written.
pub fn emit_plots(report_paths: &[PathBuf], out_dir: &Path, bins: usize) -> Result<Vec<PathBuf>> {
    let mut jobs = Vec::new();
    for p in report_paths {
        let hist = diff_histogram(&read_itm_samples(p)?, bins)?;
        let stem = p.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
        for (tag, metrics) in OVERLAYS {
            jobs.push((format!("{stem}.{tag}"), draw_overlay(&hist, &metrics), overlay_csv(&hist, &metrics)?));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let mut written = Vec::new();
    for (name, img, csv) in jobs {
        let png = out_dir.join(format!("{name}.png"));
        img.save(&png).map_err(|e| Error::Decode {
            path: png.clone(),
            message: e.to_string(),
        })?;
        let csv_path = out_dir.join(format!("{name}.csv"));
        std::fs::write(&csv_path, csv).map_err(|e| Error::io(format!("writing {}", csv_path.display()), e))?;
        written.push(png);
        written.push(csv_path);
    }
    Ok(written)
}
