//! Exponent fits, saturation statistics and island/sea masks.

use alloc::vec::Vec;

use crate::classical::SectionCloud;
use crate::planck::CellLayout;
use crate::{Error, Result};

const MIN_FIT_SAMPLES: usize = 4;

/// Least-squares line through `(t, ln value)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the exponent.
    pub stderr: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Fit `value ≈ e^{intercept + exponent·t}` over samples with `t` in the
/// closed `window` and `value > 0`.
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= window.0 && **t <= window.1 && **v > 0.0)
        .map(|(&t, &v)| (t, libm::log(v)))
        .collect();
    let n = pts.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            found: n,
            needed: MIN_FIT_SAMPLES,
        });
    }
    let nf = n as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if !(stt > 0.0) {
        return Err(Error::DegenerateTimes);
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - intercept - slope * p.0;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let stderr = libm::sqrt(sse / (nf - 2.0) / stt);
    Ok(FitResult {
        exponent: slope,
        intercept,
        r_squared,
        stderr,
        window,
        samples: n,
    })
}

/// Mean and population standard deviation of the trailing `tail_fraction` of `values`.
pub fn saturation_stats(values: &[f64], tail_fraction: f64) -> Result<(f64, f64)> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::invalid("tail_fraction", "must lie in (0, 1]"));
    }
    let count = libm::ceil(tail_fraction * values.len() as f64) as usize;
    if count == 0 {
        return Err(Error::EmptyTail);
    }
    let tail = &values[values.len() - count..];
    let mean = tail.iter().sum::<f64>() / count as f64;
    let var = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    Ok((mean, libm::sqrt(var)))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellLabel {
    Island,
    Sea,
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellMask {
    pub layout: CellLayout,
    pub labels: Vec<CellLabel>,
    pub hits: Vec<usize>,
    pub seed: u64,
    pub iterations: usize,
}

impl CellMask {
    pub fn cells(&self, label: CellLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Cells never visited by the cloud are islands, cells with at least
/// `min_hits` visits are sea, the rest boundary. Points outside a bounded box
/// are ignored.
pub fn classify_cells(cloud: &SectionCloud, layout: &CellLayout, min_hits: usize) -> CellMask {
    let mut hits = alloc::vec![0usize; layout.grid.cell_count()];
    for &(q, p) in &cloud.points {
        if let Some(c) = layout.cell_containing(q, p) {
            hits[c] += 1;
        }
    }
    let labels = hits
        .iter()
        .map(|&h| match h {
            0 => CellLabel::Island,
            h if h >= min_hits.max(1) => CellLabel::Sea,
            _ => CellLabel::Boundary,
        })
        .collect();
    CellMask {
        layout: *layout,
        labels,
        hits,
        seed: cloud.seed,
        iterations: cloud.iterations,
    }
}

/// Fraction of island cells whose image value lies below `fraction` times
/// the median over the whole image. `None` when the mask has no islands.
pub fn valley_overlap(values: &[f64], mask: &CellMask, fraction: f64) -> Option<f64> {
    let islands = mask.cells(CellLabel::Island);
    if islands.is_empty() {
        return None;
    }
    let cut = fraction * median(values)?;
    let inside = islands.iter().filter(|&&c| values[c] < cut).count();
    Some(inside as f64 / islands.len() as f64)
}
