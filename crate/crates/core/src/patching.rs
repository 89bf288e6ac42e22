//! Automated eye/mouth patches.
//!
//! Each face goes through Otsu foreground masking, a 3x3 Laplacian high-pass,
//! a percentile magnitude cut, 8-connected labeling, and second-moment shape
//! features. The eye region is the most horizontal region with a moderate
//! major/minor ratio; the mouth region is the most horizontal strongly elongated
//! one. A full-width band of rows around the selected centroid is kept and
//! everything else is zeroed, so patched faces keep the original dimensions.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{FaceId, FaceRecord, FaceVector};
use crate::error::{Error, Result};
use crate::image::{self, GrayImage};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Subject darker than the background.
    #[default]
    Dark,
    Light,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatchParams {
    pub half_height: usize,
    pub eye_ratio_lo: f64,
    pub eye_ratio_hi: f64,
    pub mouth_ratio: f64,
    pub hp_percentile: f64,
    pub min_region_area: usize,
    pub polarity: Polarity,
}

impl Default for PatchParams {
    fn default() -> Self {
        Self {
            half_height: 15,
            eye_ratio_lo: 2.5,
            eye_ratio_hi: 5.0,
            mouth_ratio: 6.0,
            hp_percentile: 90.0,
            min_region_area: 10,
            polarity: Polarity::Dark,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::Param(format!("{} bits for a {rows}x{cols} mask", bits.len())));
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(
            self.rows,
            self.cols,
            self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        )
        .expect("mask dims are nonzero")
    }
}

/// Otsu threshold `t`: the split `{v < t} | {v >= t}` maximizing between-class variance.
///
/// When several thresholds reach the maximum the middle of that run is returned.
pub fn otsu_threshold(image: &GrayImage) -> Result<u8> {
    let mut hist = [0u64; 256];
    for &p in image.pixels() {
        hist[p as usize] += 1;
    }
    let total = image.pixels().len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &h)| v as f64 * h as f64).sum();

    let mut best = f64::NEG_INFINITY;
    let mut best_lo = 0usize;
    let mut best_hi = 0usize;
    let (mut w0, mut sum0) = (0.0f64, 0.0f64);
    for t in 1..256usize {
        w0 += hist[t - 1] as f64;
        sum0 += (t - 1) as f64 * hist[t - 1] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best {
            best = between;
            best_lo = t;
            best_hi = t;
        } else if between == best && best_hi == t - 1 {
            best_hi = t;
        }
    }
    if !(best > 0.0) {
        return Err(Error::DegenerateThreshold);
    }
    Ok(((best_lo + best_hi) / 2) as u8)
}

pub fn foreground_mask(image: &GrayImage, polarity: Polarity) -> Result<BinaryMask> {
    let t = otsu_threshold(image)?;
    let bits = image
        .pixels()
        .iter()
        .map(|&p| match polarity {
            Polarity::Dark => p < t,
            Polarity::Light => p >= t,
        })
        .collect();
    BinaryMask::new(image.rows(), image.cols(), bits)
}

/// 3x3 Laplacian `[[0,-1,0],[-1,4,-1],[0,-1,0]]` with replicated borders.
pub fn laplacian(image: &GrayImage) -> Vec<i32> {
    let (rows, cols) = (image.rows(), image.cols());
    let px = |r: usize, c: usize| i32::from(image.get(r, c));
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let up = r.saturating_sub(1);
        let down = (r + 1).min(rows - 1);
        for c in 0..cols {
            let left = c.saturating_sub(1);
            let right = (c + 1).min(cols - 1);
            out.push(4 * px(r, c) - px(up, c) - px(down, c) - px(r, left) - px(r, right));
        }
    }
    out
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(values: &[f64], pct: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// 8-connected components of the `true` cells, in raster order of their first pixel.
pub fn label_components(keep: &[bool], rows: usize, cols: usize) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; keep.len()];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..keep.len() {
        if !keep[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(idx) = queue.pop_front() {
            let (r, c) = (idx / cols, idx % cols);
            pixels.push((r, c));
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                        continue;
                    }
                    let n = nr as usize * cols + nc as usize;
                    if keep[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        pixels.sort_unstable();
        regions.push(pixels);
    }
    regions
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionFeatures {
    pub region_id: usize,
    pub area: usize,
    /// (row, col)
    pub centroid: (f64, f64),
    /// Major axis length.
    pub rho: f64,
    /// Minor axis length.
    pub psi: f64,
    /// Major-axis orientation in degrees, counter-clockwise from horizontal, in (-90, 90].
    pub theta: f64,
}

impl RegionFeatures {
    pub fn ratio(&self) -> f64 {
        self.rho / self.psi
    }
}

/// Second-moment shape features of a pixel set.
///
/// Each pixel is treated as a unit square, which adds 1/12 to both axis variances.
/// The vertical axis points up, so a region rising to the right has positive theta.
pub fn region_moments(region_id: usize, pixels: &[(usize, usize)]) -> RegionFeatures {
    assert!(!pixels.is_empty(), "region_moments on an empty pixel set");
    let n = pixels.len() as f64;
    let mean_r = pixels.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let mean_c = pixels.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(r, c) in pixels {
        let x = c as f64 - mean_c;
        let y = -(r as f64 - mean_r);
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let cov_xx = sxx / n + 1.0 / 12.0;
    let cov_yy = syy / n + 1.0 / 12.0;
    let cov_xy = sxy / n;

    let half_trace = 0.5 * (cov_xx + cov_yy);
    let disc = (0.25 * (cov_xx - cov_yy).powi(2) + cov_xy * cov_xy).sqrt();
    let lambda_max = half_trace + disc;
    let lambda_min = (half_trace - disc).max(0.0);

    let mut theta = 0.5 * (2.0 * cov_xy).atan2(cov_xx - cov_yy);
    theta = theta.to_degrees();
    if theta <= -90.0 {
        theta += 180.0;
    }
    if theta == 0.0 {
        theta = 0.0; // drop the sign of -0.0
    }
    RegionFeatures {
        region_id,
        area: pixels.len(),
        centroid: (mean_r, mean_c),
        rho: 4.0 * lambda_max.sqrt(),
        psi: 4.0 * lambda_min.sqrt(),
        theta,
    }
}

/// A labeled region together with its pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub features: RegionFeatures,
    pub pixels: Vec<(usize, usize)>,
}

/// Laplacian magnitude response restricted to the mask, plus the cut level used.
#[derive(Clone, Debug, PartialEq)]
pub struct HighPass {
    pub response: Vec<i32>,
    pub level: f64,
    pub keep: Vec<bool>,
}

pub fn high_pass(image: &GrayImage, mask: &BinaryMask, percentile_cut: f64) -> Result<HighPass> {
    if mask.rows() != image.rows() || mask.cols() != image.cols() {
        return Err(Error::Param("mask and image dimensions differ".into()));
    }
    let response = laplacian(image);
    let inside: Vec<f64> = response
        .iter()
        .zip(mask.bits())
        .filter(|(_, &m)| m)
        .map(|(&v, _)| f64::from(v.abs()))
        .collect();
    let level = percentile(&inside, percentile_cut).ok_or(Error::NoRegion)?;
    let keep = response
        .iter()
        .zip(mask.bits())
        .map(|(&v, &m)| m && f64::from(v.abs()) > level)
        .collect();
    Ok(HighPass {
        response,
        level,
        keep,
    })
}

pub fn high_pass_regions_detailed(
    image: &GrayImage,
    mask: &BinaryMask,
    params: &PatchParams,
) -> Result<(HighPass, Vec<Region>)> {
    let hp = high_pass(image, mask, params.hp_percentile)?;
    let regions: Vec<Region> = label_components(&hp.keep, image.rows(), image.cols())
        .into_iter()
        .filter(|px| px.len() >= params.min_region_area)
        .enumerate()
        .map(|(id, pixels)| Region {
            features: region_moments(id, &pixels),
            pixels,
        })
        .collect();
    if regions.is_empty() {
        return Err(Error::NoRegion);
    }
    Ok((hp, regions))
}

pub fn high_pass_regions(
    image: &GrayImage,
    mask: &BinaryMask,
    params: &PatchParams,
) -> Result<Vec<RegionFeatures>> {
    let (_, regions) = high_pass_regions_detailed(image, mask, params)?;
    Ok(regions.into_iter().map(|r| r.features).collect())
}

fn most_horizontal<'a>(
    candidates: impl Iterator<Item = &'a RegionFeatures>,
) -> Option<&'a RegionFeatures> {
    candidates.min_by(|a, b| {
        a.theta
            .abs()
            .total_cmp(&b.theta.abs())
            .then(b.area.cmp(&a.area))
            .then(a.region_id.cmp(&b.region_id))
    })
}

pub fn select_eye_region(
    regions: &[RegionFeatures],
    params: &PatchParams,
) -> Result<RegionFeatures> {
    most_horizontal(regions.iter().filter(|r| {
        let q = r.ratio();
        q > params.eye_ratio_lo && q < params.eye_ratio_hi
    }))
    .copied()
    .ok_or(Error::NoCandidate("eye"))
}

pub fn select_mouth_region(
    regions: &[RegionFeatures],
    params: &PatchParams,
) -> Result<RegionFeatures> {
    most_horizontal(regions.iter().filter(|r| r.ratio() > params.mouth_ratio))
        .copied()
        .ok_or(Error::NoCandidate("mouth"))
}

/// Full-width strip of rows kept by a patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchBand {
    pub center_row: usize,
    pub half_height: usize,
    pub row_lo: usize,
    pub row_hi: usize,
}

impl PatchBand {
    pub fn new(center_row: usize, half_height: usize, rows: usize) -> Self {
        let center_row = center_row.min(rows.saturating_sub(1));
        Self {
            center_row,
            half_height,
            row_lo: center_row.saturating_sub(half_height),
            row_hi: (center_row + half_height).min(rows - 1),
        }
    }

    pub fn contains(&self, row: usize) -> bool {
        (self.row_lo..=self.row_hi).contains(&row)
    }
}

/// Keeps the band rows and zeroes the rest.
pub fn apply_patch(image: &GrayImage, band: &PatchBand) -> GrayImage {
    let mut out = image.clone();
    for r in (0..image.rows()).filter(|&r| !band.contains(r)) {
        for c in 0..image.cols() {
            out.set(r, c, 0);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchTarget {
    Eye,
    Mouth,
    Full,
}

impl PatchTarget {
    /// Row used when region selection fails.
    pub fn default_center(self, rows: usize) -> usize {
        let frac = match self {
            PatchTarget::Eye => 0.35,
            PatchTarget::Mouth => 0.75,
            PatchTarget::Full => 0.5,
        };
        (frac * rows as f64) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchOutcome {
    pub face_id: FaceId,
    pub band: Option<PatchBand>,
    pub region: Option<RegionFeatures>,
    /// Reason the default band was used, if it was.
    pub fallback: Option<String>,
}

/// Intermediate images for one face, for visual inspection.
#[derive(Clone, Debug)]
pub struct PatchTrace {
    pub mask: Option<GrayImage>,
    pub response: Option<GrayImage>,
    pub overlay: Option<GrayImage>,
    pub patched: GrayImage,
    pub outcome: PatchOutcome,
}

fn locate_region(
    image: &GrayImage,
    target: PatchTarget,
    params: &PatchParams,
) -> Result<(BinaryMask, HighPass, Vec<Region>, RegionFeatures)> {
    let mask = foreground_mask(image, params.polarity)?;
    let (hp, regions) = high_pass_regions_detailed(image, &mask, params)?;
    let features: Vec<RegionFeatures> = regions.iter().map(|r| r.features).collect();
    let chosen = match target {
        PatchTarget::Eye => select_eye_region(&features, params)?,
        PatchTarget::Mouth => select_mouth_region(&features, params)?,
        PatchTarget::Full => unreachable!("full target bypasses region search"),
    };
    Ok((mask, hp, regions, chosen))
}

/// Patches one face, recording every intermediate image.
pub fn trace_patch(
    face_id: FaceId,
    image: &GrayImage,
    target: PatchTarget,
    params: &PatchParams,
) -> PatchTrace {
    if target == PatchTarget::Full {
        return PatchTrace {
            mask: None,
            response: None,
            overlay: None,
            patched: image.clone(),
            outcome: PatchOutcome {
                face_id,
                band: None,
                region: None,
                fallback: None,
            },
        };
    }
    let rows = image.rows();
    match locate_region(image, target, params) {
        Ok((mask, hp, regions, chosen)) => {
            let band = PatchBand::new(chosen.centroid.0.round() as usize, params.half_height, rows);
            let response: Vec<f64> = hp.response.iter().map(|v| f64::from(v.abs())).collect();
            let mut overlay = image.clone();
            for region in &regions {
                let value = if region.features.region_id == chosen.region_id { 255 } else { 0 };
                for &(r, c) in &region.pixels {
                    overlay.set(r, c, value);
                }
            }
            PatchTrace {
                mask: Some(mask.to_image()),
                response: image::normalize_to_image(&response, rows, image.cols()).ok(),
                overlay: Some(overlay),
                patched: apply_patch(image, &band),
                outcome: PatchOutcome {
                    face_id,
                    band: Some(band),
                    region: Some(chosen),
                    fallback: None,
                },
            }
        }
        Err(err) => {
            let band = PatchBand::new(target.default_center(rows), params.half_height, rows);
            PatchTrace {
                mask: None,
                response: None,
                overlay: None,
                patched: apply_patch(image, &band),
                outcome: PatchOutcome {
                    face_id,
                    band: Some(band),
                    region: None,
                    fallback: Some(err.to_string()),
                },
            }
        }
    }
}

pub fn patch_face(
    face_id: FaceId,
    image: &GrayImage,
    target: PatchTarget,
    params: &PatchParams,
) -> (GrayImage, PatchOutcome) {
    let trace = trace_patch(face_id, image, target, params);
    (trace.patched, trace.outcome)
}

#[derive(Clone, Debug)]
pub struct PatchedCorpus {
    pub target: PatchTarget,
    pub vectors: Vec<FaceVector>,
    pub outcomes: Vec<PatchOutcome>,
}

impl PatchedCorpus {
    pub fn fallback_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.fallback.is_some()).count()
    }
}

/// Patches and flattens every face; `Full` passes faces through unchanged.
pub fn make_patched_corpus(
    corpus: &[FaceRecord],
    target: PatchTarget,
    params: &PatchParams,
) -> PatchedCorpus {
    let (vectors, outcomes) = corpus
        .par_iter()
        .map(|rec| {
            let (patched, outcome) = patch_face(rec.face_id, &rec.image, target, params);
            (
                FaceVector {
                    face_id: rec.face_id,
                    values: image::flatten(&patched),
                },
                outcome,
            )
        })
        .unzip();
    PatchedCorpus {
        target,
        vectors,
        outcomes,
    }
}
