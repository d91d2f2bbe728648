//! CSV and PNG outputs for runs and ensembles.

use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::scene::{Grid, MediumMaps, Phantom};
use crate::trainer::{five_number, EnsembleStats, FiveNumber, LossRow, RunRecord};
use crate::{Error, Result};

const VIRIDIS: [[u8; 3]; 17] = [
    [68, 1, 84],
    [72, 24, 106],
    [71, 45, 123],
    [66, 64, 134],
    [59, 82, 139],
    [51, 99, 141],
    [44, 114, 142],
    [38, 130, 142],
    [33, 145, 140],
    [31, 160, 136],
    [40, 174, 128],
    [63, 188, 115],
    [94, 201, 98],
    [132, 212, 75],
    [173, 220, 48],
    [216, 226, 25],
    [253, 231, 37],
];

/// Viridis color for `t` in `[0, 1]` (clamped), linearly interpolated
/// between 17 anchors.
pub fn viridis(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let lo = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let w = pos - lo as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let a = VIRIDIS[lo][c] as f64;
        let b = VIRIDIS[lo + 1][c] as f64;
        out[c] = (a + (b - a) * w).round() as u8;
    }
    out
}

/// Fixed color range for one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorRange {
    pub lo: f64,
    pub hi: f64,
}

impl ColorRange {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) {
            return Err(Error::invalid(format!("color range [{}, {}] is empty", self.lo, self.hi)));
        }
        Ok(())
    }

    fn unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

/// Pixel containing the point `(x, y)` of the square `[-h, h]^2` drawn at
/// `px × px`, with row 0 at the top (largest `y`).
pub fn point_to_pixel(x: f64, y: f64, half_width: f64, px: u32) -> Option<(u32, u32)> {
    let s = px as f64 / (2.0 * half_width);
    let c = ((x + half_width) * s).floor();
    let r = ((half_width - y) * s).floor();
    if c < 0.0 || r < 0.0 || c >= px as f64 || r >= px as f64 {
        return None;
    }
    Some((c as u32, r as u32))
}

/// Center of pixel `(col, row)` in physical coordinates.
pub fn pixel_center(col: u32, row: u32, half_width: f64, px: u32) -> (f64, f64) {
    let d = 2.0 * half_width / px as f64;
    (-half_width + (col as f64 + 0.5) * d, half_width - (row as f64 + 0.5) * d)
}

/// Dashed outline of a circle as `(col, row)` pixels, dashes of about
/// `dash_px` pixels separated by gaps of the same length.
pub fn contour_pixels(center: [f64; 2], radius: f64, half_width: f64, px: u32, dash_px: f64) -> Vec<(u32, u32)> {
    let pix = 2.0 * half_width / px as f64;
    let circumference = 2.0 * std::f64::consts::PI * radius;
    let n = ((circumference / pix) * 4.0).ceil().max(16.0) as usize;
    let mut out: Vec<(u32, u32)> = Vec::new();
    for k in 0..n {
        let arc = k as f64 / n as f64 * circumference;
        if ((arc / (dash_px * pix)).floor() as i64) % 2 == 1 {
            continue;
        }
        let t = arc / radius;
        let x = center[0] + radius * t.cos();
        let y = center[1] + radius * t.sin();
        if let Some(p) = point_to_pixel(x, y, half_width, px) {
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Renders an `n × n` map (index `i n + j`, `i` along x) into a `px × px`
/// image with a fixed color range and white dashed outlines.
pub fn render_map(
    values: &[f64],
    n: usize,
    half_width: f64,
    range: ColorRange,
    outlines: &[([f64; 2], f64)],
    px: u32,
) -> Result<RgbImage> {
    if values.len() != n * n || n == 0 {
        return Err(Error::invalid(format!("map of {} values is not {n}×{n}", values.len())));
    }
    range.validate()?;
    let mut img = RgbImage::new(px, px);
    for row in 0..px {
        let j = n - 1 - (row as usize * n / px as usize);
        for col in 0..px {
            let i = col as usize * n / px as usize;
            img.put_pixel(col, row, Rgb(viridis(range.unit(values[i * n + j]))));
        }
    }
    for &(c, r) in outlines {
        for (col, row) in contour_pixels(c, r, half_width, px, 3.0) {
            img.put_pixel(col, row, Rgb([255, 255, 255]));
        }
    }
    Ok(img)
}

fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image(other),
    })
}

/// Writes permittivity and, when `sigma_range` is given, conductivity maps
/// as `{prefix}eps_r.png` and `{prefix}sigma.png`.
pub fn write_map_pngs(
    maps: &MediumMaps,
    grid: &Grid,
    reference: Option<&Phantom>,
    eps_range: ColorRange,
    sigma_range: Option<ColorRange>,
    px: u32,
    dir: &Path,
    prefix: &str,
) -> Result<()> {
    let outlines: Vec<([f64; 2], f64)> =
        reference.map(|p| p.shapes.iter().flat_map(|s| s.boundaries()).collect()).unwrap_or_default();
    let img = render_map(&maps.eps_r, maps.n, grid.half_width(), eps_range, &outlines, px)?;
    save_png(&img, &dir.join(format!("{prefix}eps_r.png")))?;
    if let Some(r) = sigma_range {
        let img = render_map(&maps.sigma, maps.n, grid.half_width(), r, &outlines, px)?;
        save_png(&img, &dir.join(format!("{prefix}sigma.png")))?;
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("{e} ({s:?})"),
    })
}

/// `epoch,psnr_eps_r[,psnr_sigma]`.
pub fn write_psnr_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    match &record.psnr_sigma {
        Some(_) => w.write_record(["epoch", "psnr_eps_r", "psnr_sigma"])?,
        None => w.write_record(["epoch", "psnr_eps_r"])?,
    }
    for (k, e) in record.psnr_epochs.iter().enumerate() {
        let mut row = vec![e.to_string(), record.psnr_eps[k].to_string()];
        if let Some(s) = &record.psnr_sigma {
            row.push(s[k].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// PSNR series read back from [`write_psnr_csv`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct PsnrSeries {
    pub epochs: Vec<usize>,
    pub eps_r: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

pub fn read_psnr_csv(path: &Path) -> Result<PsnrSeries> {
    let mut r = csv_reader(path)?;
    let has_sigma = r.headers()?.len() == 3;
    let mut out = PsnrSeries {
        epochs: Vec::new(),
        eps_r: Vec::new(),
        sigma: has_sigma.then(Vec::new),
    };
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        out.epochs.push(rec[0].parse().map_err(|e| Error::Parse {
            line,
            message: format!("epoch: {e}"),
        })?);
        out.eps_r.push(parse_f64(&rec[1], line)?);
        if let Some(s) = out.sigma.as_mut() {
            s.push(parse_f64(&rec[2], line)?);
        }
    }
    Ok(out)
}

/// `epoch,stage,beta,{l_data,l_state,l_cross}_f{k}...,total`. Inactive
/// frequencies leave their cells empty.
pub fn write_loss_csv(rows: &[LossRow], frequencies: &[f64], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["epoch".to_string(), "stage".into(), "beta".into()];
    for f in frequencies {
        let tag = format!("{}MHz", f / 1e6);
        for t in ["l_data", "l_state", "l_cross"] {
            header.push(format!("{t}_{tag}"));
        }
    }
    header.push("total".into());
    w.write_record(&header)?;
    for row in rows {
        if row.terms.len() != frequencies.len() {
            return Err(Error::invalid("loss row does not match the frequency list"));
        }
        let mut rec = vec![row.epoch.to_string(), row.stage.to_string(), row.beta.to_string()];
        for t in &row.terms {
            match t {
                Some(t) => rec.extend([t.l_data.to_string(), t.l_state.to_string(), t.l_cross.to_string()]),
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        rec.push(row.total.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Mean PSNR curve with its pointwise standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurve {
    pub epochs: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl MeanCurve {
    pub fn from_stats(stats: &EnsembleStats) -> Self {
        Self {
            epochs: stats.epochs.clone(),
            mean: stats.mean.clone(),
            std: stats.std.clone(),
        }
    }

    /// A single run: its PSNR series with zero spread.
    pub fn from_series(series: &PsnrSeries) -> Self {
        Self {
            epochs: series.epochs.clone(),
            mean: series.eps_r.clone(),
            std: vec![0.0; series.eps_r.len()],
        }
    }
}

pub fn write_mean_curve_csv(curve: &MeanCurve, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "mean", "std"])?;
    for k in 0..curve.epochs.len() {
        w.write_record([curve.epochs[k].to_string(), curve.mean[k].to_string(), curve.std[k].to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_mean_curve_csv(path: &Path) -> Result<MeanCurve> {
    let mut r = csv_reader(path)?;
    let mut c = MeanCurve {
        epochs: Vec::new(),
        mean: Vec::new(),
        std: Vec::new(),
    };
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: "expected epoch,mean,std".into(),
            });
        }
        c.epochs.push(rec[0].parse().map_err(|e| Error::Parse {
            line,
            message: format!("epoch: {e}"),
        })?);
        c.mean.push(parse_f64(&rec[1], line)?);
        c.std.push(parse_f64(&rec[2], line)?);
    }
    Ok(c)
}

/// One boxplot row: five-number summary of final PSNRs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n_runs: usize,
    pub n_failed: usize,
}

impl BoxplotRow {
    pub fn new(label: &str, s: &FiveNumber, n_runs: usize, n_failed: usize) -> Self {
        Self {
            label: label.to_string(),
            min: s.min,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            max: s.max,
            n_runs,
            n_failed,
        }
    }

    pub fn summary(&self) -> FiveNumber {
        FiveNumber {
            min: self.min,
            q1: self.q1,
            median: self.median,
            q3: self.q3,
            max: self.max,
        }
    }
}

pub fn write_boxplot_csv(rows: &[BoxplotRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_boxplot_csv(path: &Path) -> Result<Vec<BoxplotRow>> {
    let mut r = csv_reader(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<BoxplotRow>, _>>()?)
}

const SERIES_COLORS: [[u8; 3]; 4] = [[31, 119, 180], [214, 39, 40], [44, 160, 44], [148, 103, 189]];

fn blend(img: &mut RgbImage, x: u32, y: u32, c: [u8; 3], alpha: f64) {
    let p = img.get_pixel_mut(x, y);
    for k in 0..3 {
        p.0[k] = (p.0[k] as f64 * (1.0 - alpha) + c[k] as f64 * alpha).round() as u8;
    }
}

fn draw_line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: [u8; 3]) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = (a.0 + (b.0 - a.0) * t).round();
        let y = (a.1 + (b.1 - a.1) * t).round();
        if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, Rgb(c));
        }
    }
}

struct Frame {
    w: f64,
    h: f64,
    margin: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = self.margin + (x - self.x0) / (self.x1 - self.x0) * (self.w - 2.0 * self.margin);
        let py = self.h - self.margin - (y - self.y0) / (self.y1 - self.y0) * (self.h - 2.0 * self.margin);
        (px, py)
    }

    fn axes(&self, img: &mut RgbImage) {
        let k = [0, 0, 0];
        let (l, b) = (self.margin, self.h - self.margin);
        draw_line(img, (l, b), (self.w - self.margin, b), k);
        draw_line(img, (l, b), (l, self.margin), k);
    }
}

fn finite_bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    let pad = ((hi - lo) * 0.05).max(0.5);
    Some((lo - pad, hi + pad))
}

/// Mean curves over epochs, one color per curve, with a translucent
/// `± std` band wherever the spread is nonzero. No text is drawn.
pub fn render_curves(curves: &[MeanCurve], width: u32, height: u32) -> Result<RgbImage> {
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let x1 = curves.iter().flat_map(|c| c.epochs.last().copied()).max().unwrap_or(1).max(1) as f64;
    let Some((y0, y1)) = finite_bounds(
        curves
            .iter()
            .flat_map(|c| c.mean.iter().zip(&c.std).flat_map(|(m, s)| [m - s, m + s])),
    ) else {
        return Err(Error::invalid("no finite values to plot"));
    };
    let f = Frame {
        w: width as f64,
        h: height as f64,
        margin: 20.0,
        x0: 0.0,
        x1,
        y0,
        y1,
    };
    for (k, c) in curves.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        for t in 0..c.epochs.len() {
            if c.std[t] > 0.0 && c.mean[t].is_finite() {
                let (x, ya) = f.map(c.epochs[t] as f64, c.mean[t] + c.std[t]);
                let (_, yb) = f.map(c.epochs[t] as f64, c.mean[t] - c.std[t]);
                let xi = x.round();
                if xi < 0.0 || xi as u32 >= width {
                    continue;
                }
                for y in ya.round().max(0.0) as u32..=(yb.round().min(f.h - 1.0) as u32) {
                    blend(&mut img, xi as u32, y, color, 0.2);
                }
            }
        }
    }
    for (k, c) in curves.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        for t in 1..c.epochs.len() {
            if c.mean[t - 1].is_finite() && c.mean[t].is_finite() {
                let a = f.map(c.epochs[t - 1] as f64, c.mean[t - 1]);
                let b = f.map(c.epochs[t] as f64, c.mean[t]);
                draw_line(&mut img, a, b, color);
            }
        }
    }
    f.axes(&mut img);
    Ok(img)
}

/// Side-by-side box plots (whiskers at min and max).
pub fn render_boxplots(boxes: &[FiveNumber], width: u32, height: u32) -> Result<RgbImage> {
    if boxes.is_empty() {
        return Err(Error::invalid("nothing to plot"));
    }
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let Some((y0, y1)) = finite_bounds(boxes.iter().flat_map(|b| [b.min, b.max])) else {
        return Err(Error::invalid("no finite values to plot"));
    };
    let f = Frame {
        w: width as f64,
        h: height as f64,
        margin: 20.0,
        x0: 0.0,
        x1: boxes.len() as f64,
        y0,
        y1,
    };
    for (k, b) in boxes.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let xc = k as f64 + 0.5;
        let (l, _) = f.map(xc - 0.25, 0.0);
        let (r, _) = f.map(xc + 0.25, 0.0);
        let (m, _) = f.map(xc, 0.0);
        let y = |v: f64| f.map(xc, v).1;
        if !(b.q1.is_finite() && b.q3.is_finite()) {
            continue;
        }
        for yy in y(b.q3).round() as i64..=y(b.q1).round() as i64 {
            for xx in l.round() as i64..=r.round() as i64 {
                if xx >= 0 && yy >= 0 && (xx as u32) < width && (yy as u32) < height {
                    blend(&mut img, xx as u32, yy as u32, color, 0.35);
                }
            }
        }
        for v in [b.q1, b.q3] {
            draw_line(&mut img, (l, y(v)), (r, y(v)), color);
        }
        draw_line(&mut img, (l, y(b.q1)), (l, y(b.q3)), color);
        draw_line(&mut img, (r, y(b.q1)), (r, y(b.q3)), color);
        if b.median.is_finite() {
            draw_line(&mut img, (l, y(b.median)), (r, y(b.median)), [0, 0, 0]);
        }
        for (edge, v) in [(b.q1, b.min), (b.q3, b.max)] {
            if v.is_finite() {
                draw_line(&mut img, (m, y(edge)), (m, y(v)), color);
                draw_line(&mut img, (m - 6.0, y(v)), (m + 6.0, y(v)), color);
            }
        }
    }
    f.axes(&mut img);
    Ok(img)
}

pub fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    save_png(img, path)
}

/// Rendering settings shared by all images of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub eps_range: ColorRange,
    /// Conductivity maps are drawn only when a range is set.
    pub sigma_range: Option<ColorRange>,
    pub image_px: u32,
}

/// Writes one run's outputs into `dir`: `psnr.csv`, `loss.csv`,
/// `checkpoint.json`, `final_maps.json` and the map PNGs.
pub fn export_run(
    record: &RunRecord,
    frequencies: &[f64],
    grid: &Grid,
    reference: Option<&Phantom>,
    render: &RenderSettings,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_psnr_csv(record, &dir.join("psnr.csv"))?;
    write_loss_csv(&record.loss_trace, frequencies, &dir.join("loss.csv"))?;
    record.checkpoint.save(dir.join("checkpoint.json"))?;
    let maps_path = dir.join("final_maps.json");
    std::fs::write(&maps_path, serde_json::to_vec(&record.final_maps)?).map_err(|e| Error::io(&maps_path, e))?;
    let sigma_range = render.sigma_range.filter(|_| record.psnr_sigma.is_some());
    write_map_pngs(&record.final_maps, grid, reference, render.eps_range, sigma_range, render.image_px, dir, "")
}

/// Index of the run with the median of `finals` (lower middle for even
/// counts), skipping NaN entries.
pub fn median_index(finals: &[f64]) -> Option<usize> {
    let mut idx: Vec<usize> = (0..finals.len()).filter(|&i| !finals[i].is_nan()).collect();
    if idx.is_empty() {
        return None;
    }
    idx.sort_by(|&a, &b| finals[a].partial_cmp(&finals[b]).expect("NaN filtered").then(a.cmp(&b)));
    Some(idx[(idx.len() - 1) / 2])
}

/// Writes ensemble outputs: one `run_XX/` per run, `mean_curve.csv`,
/// `boxplot.csv`, and one median-run image per metric (`median_eps_r.png`
/// and, for lossy targets, `median_sigma.png`).
pub fn export_ensemble(
    label: &str,
    stats: &EnsembleStats,
    runs: &[RunRecord],
    frequencies: &[f64],
    grid: &Grid,
    reference: Option<&Phantom>,
    render: &RenderSettings,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (k, run) in runs.iter().enumerate() {
        export_run(run, frequencies, grid, reference, render, &dir.join(format!("run_{k:02}")))?;
    }
    let curve = MeanCurve::from_stats(stats);
    write_mean_curve_csv(&curve, &dir.join("mean_curve.csv"))?;
    write_boxplot_csv(
        &[BoxplotRow::new(label, &stats.final_psnr, runs.len(), stats.failed_runs.len())],
        &dir.join("boxplot.csv"),
    )?;
    let outlines: Vec<([f64; 2], f64)> =
        reference.map(|p| p.shapes.iter().flat_map(|s| s.boundaries()).collect()).unwrap_or_default();
    let m = &runs[stats.median_run].final_maps;
    let img = render_map(&m.eps_r, m.n, grid.half_width(), render.eps_range, &outlines, render.image_px)?;
    save_png(&img, &dir.join("median_eps_r.png"))?;
    if let Some(range) = render.sigma_range {
        let finals: Vec<f64> = runs
            .iter()
            .map(|r| match (&r.psnr_sigma, r.failed()) {
                (Some(s), false) => s.last().copied().unwrap_or(f64::NAN),
                _ => f64::NAN,
            })
            .collect();
        if let Some(k) = median_index(&finals) {
            let m = &runs[k].final_maps;
            let img = render_map(&m.sigma, m.n, grid.half_width(), range, &outlines, render.image_px)?;
            save_png(&img, &dir.join("median_sigma.png"))?;
            let s: Vec<f64> = finals.iter().copied().filter(|v| !v.is_nan()).collect();
            write_boxplot_csv(
                &[BoxplotRow::new(label, &five_number(&s)?, runs.len(), stats.failed_runs.len())],
                &dir.join("boxplot_sigma.csv"),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viridis_endpoints() {
        assert_eq!(viridis(0.0), [68, 1, 84]);
        assert_eq!(viridis(1.0), [253, 231, 37]);
        assert_eq!(viridis(2.0), [253, 231, 37]);
        assert_eq!(viridis(0.5), [33, 145, 140]);
    }

    #[test]
    fn mean_curve_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mean_curve.csv");
        let c = MeanCurve {
            epochs: vec![0, 100, 200],
            mean: vec![1.0 / 3.0, std::f64::consts::PI, 12.345678901234567],
            std: vec![0.0, 1e-17, 2.0_f64.sqrt()],
        };
        write_mean_curve_csv(&c, &path).unwrap();
        let back = read_mean_curve_csv(&path).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn boxplot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        let rows = vec![BoxplotRow::new(
            "cc",
            &five_number(&[1.0, 2.0, 3.0, f64::INFINITY]).unwrap(),
            5,
            1,
        )];
        write_boxplot_csv(&rows, &path).unwrap();
        assert_eq!(read_boxplot_csv(&path).unwrap(), rows);
    }

    /// Independent check: every outline pixel center lies within one pixel
    /// of the true circle, and the dashes cover each quadrant.
    #[test]
    fn contour_within_one_pixel_at_128() {
        let (h, px) = (0.1, 128);
        let pix = 2.0 * h / px as f64;
        for &(c, r) in &[([0.0, 0.0], 0.04), ([-0.0555, 0.0005], 0.0155), ([0.03, -0.02], 0.011)] {
            let pixels = contour_pixels(c, r, h, px, 3.0);
            assert!(pixels.len() > 10);
            let mut quadrants = [false; 4];
            for &(col, row) in &pixels {
                let (x, y) = pixel_center(col, row, h, px);
                let d = ((x - c[0]).hypot(y - c[1]) - r).abs();
                assert!(d <= pix, "pixel ({col},{row}) is {} px off", d / pix);
                let q = ((y - c[1] < 0.0) as usize) * 2 + (x - c[0] < 0.0) as usize;
                quadrants[q] = true;
            }
            assert!(quadrants.iter().all(|&q| q));
        }
    }

    #[test]
    fn map_orientation_puts_max_y_on_top() {
        let n = 4;
        let mut v = vec![0.0; n * n];
        // Cell at i = 0 (left), j = n - 1 (top).
        v[n - 1] = 1.0;
        let img = render_map(&v, n, 1.0, ColorRange { lo: 0.0, hi: 1.0 }, &[], 8).unwrap();
        assert_eq!(img.get_pixel(0, 0).0, viridis(1.0));
        assert_eq!(img.get_pixel(7, 7).0, viridis(0.0));
        assert_eq!(img.get_pixel(0, 7).0, viridis(0.0));
    }

    #[test]
    fn median_index_lower_middle() {
        assert_eq!(median_index(&[3.0, 1.0, 2.0]), Some(2));
        assert_eq!(median_index(&[10.0, 20.0]), Some(0));
        assert_eq!(median_index(&[f64::NAN, 5.0]), Some(1));
        assert_eq!(median_index(&[f64::NAN]), None);
    }

    #[test]
    fn plots_render() {
        let c = MeanCurve {
            epochs: vec![0, 10, 20],
            mean: vec![5.0, 8.0, 9.0],
            std: vec![0.0, 1.0, 0.5],
        };
        let img = render_curves(&[c.clone(), c], 200, 120).unwrap();
        assert_eq!(img.dimensions(), (200, 120));
        let b = five_number(&[1.0, 2.0, 3.0]).unwrap();
        assert!(render_boxplots(&[b, b], 200, 120).is_ok());
    }
}
