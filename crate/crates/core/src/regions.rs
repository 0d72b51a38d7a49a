//! Regions of the discrete time-frequency grid and random sampling from them.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tfcore::TFPoint;

/// A subset `Ω` of the `L × L` grid. Every point has measure `1/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TFRegion {
    len: usize,
    mask: Vec<bool>,
    point_count: usize,
    label: String,
}

impl TFRegion {
    pub fn from_mask(len: usize, mask: Vec<bool>, label: impl Into<String>) -> Result<Self> {
        Error::check_len(len * len, mask.len())?;
        let point_count = mask.iter().filter(|&&b| b).count();
        Ok(TFRegion {
            len,
            mask,
            point_count,
            label: label.into(),
        })
    }

    pub fn full(len: usize) -> Self {
        TFRegion {
            len,
            mask: vec![true; len * len],
            point_count: len * len,
            label: "full".into(),
        }
    }

    pub fn empty(len: usize) -> Self {
        TFRegion {
            len,
            mask: vec![false; len * len],
            point_count: 0,
            label: "empty".into(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.point_count == 0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// `|Ω| = #Ω / L`
    pub fn measure(&self) -> f64 {
        self.point_count as f64 / self.len as f64
    }

    pub fn contains(&self, p: TFPoint) -> bool {
        p.m < self.len && p.n < self.len && self.mask[p.m * self.len + p.n]
    }

    /// Points of the region in row-major `(m, n)` order.
    pub fn points(&self) -> Vec<TFPoint> {
        let len = self.len;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| TFPoint { m: i / len, n: i % len })
            .collect()
    }

    /// Frequencies `n` with `(m, n) ∈ Ω`, as a boolean column.
    pub(crate) fn frequencies_at(&self, m: usize) -> &[bool] {
        &self.mask[m * self.len..(m + 1) * self.len]
    }

    /// Union of two regions on the same grid.
    pub fn union(&self, other: &TFRegion) -> Result<TFRegion> {
        Error::check_len(self.len, other.len)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        TFRegion::from_mask(self.len, mask, format!("{} | {}", self.label, other.label))
    }

    pub fn is_disjoint(&self, other: &TFRegion) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !(*a && *b))
    }

    /// Alternating run lengths of the row-major mask, starting with a run of
    /// `false` (possibly of length zero).
    pub fn to_rle(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut run = 0usize;
        for &b in &self.mask {
            if b == current {
                run += 1;
            } else {
                runs.push(run);
                current = b;
                run = 1;
            }
        }
        runs.push(run);
        runs
    }

    pub fn from_rle(len: usize, runs: &[usize], label: impl Into<String>) -> Result<Self> {
        let mut mask = Vec::with_capacity(len * len);
        let mut value = false;
        for &run in runs {
            mask.extend(std::iter::repeat_n(value, run));
            value = !value;
        }
        if mask.len() != len * len {
            return Err(Error::InvalidRegion(format!(
                "run lengths cover {} cells, grid has {}",
                mask.len(),
                len * len
            )));
        }
        TFRegion::from_mask(len, mask, label)
    }

    /// Number of aligned `cell_px`-sided cells that meet the region.
    pub fn cells_intersecting(&self, cell_px: usize) -> usize {
        let cell_px = cell_px.max(1);
        let side = self.len.div_ceil(cell_px);
        let mut hit = vec![false; side * side];
        for p in self.points() {
            hit[(p.m / cell_px) * side + p.n / cell_px] = true;
        }
        hit.iter().filter(|&&b| b).count()
    }

    /// Covering excess `ε₁ = #cells meeting Ω - |Ω|` for unit cells of
    /// `cell_px` pixels per side.
    pub fn covering_excess(&self, cell_px: usize) -> f64 {
        (self.cells_intersecting(cell_px) as f64 - self.measure()).max(0.0)
    }
}

/// Closed disk in pixel units, with distances taken on the torus `Z_L²`.
pub fn disk_region(len: usize, center: TFPoint, radius_px: f64) -> Result<TFRegion> {
    if !(radius_px > 0.0) || !radius_px.is_finite() {
        return Err(Error::InvalidRegion(format!(
            "radius must be positive, got {radius_px}"
        )));
    }
    if 2.0 * radius_px >= len as f64 {
        return Err(Error::InvalidRegion(format!(
            "disk of radius {radius_px} wraps onto itself on a {len}x{len} grid"
        )));
    }
    TFPoint::new(center.m, center.n, len)?;
    let wrap = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        d.min(len - d) as f64
    };
    let r2 = radius_px * radius_px;
    let mut mask = vec![false; len * len];
    for m in 0..len {
        let dm = wrap(m, center.m);
        for n in 0..len {
            let dn = wrap(n, center.n);
            mask[m * len + n] = dm * dm + dn * dn <= r2;
        }
    }
    TFRegion::from_mask(
        len,
        mask,
        format!("disk(center=({}, {}), radius={radius_px})", center.m, center.n),
    )
}

pub fn region_measure(region: &TFRegion) -> f64 {
    region.measure()
}

/// Cell side (in pixels) matching a unit square of the continuous plane:
/// `round(√L)`.
pub fn default_cell_px(len: usize) -> usize {
    ((len as f64).sqrt().round() as usize).max(1)
}

/// An ordered list of sampling points drawn from a region.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    len: usize,
    points: Vec<TFPoint>,
    seed: u64,
    region_label: String,
    distinct: bool,
}

impl SampleSet {
    /// Wraps explicit points; every point must lie in `region`.
    pub fn from_points(region: &TFRegion, points: Vec<TFPoint>, seed: u64) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !region.contains(**p)) {
            return Err(Error::InvalidRegion(format!(
                "point ({}, {}) is outside region {}",
                p.m,
                p.n,
                region.label()
            )));
        }
        let distinct = points.iter().collect::<HashSet<_>>().len() == points.len();
        Ok(SampleSet {
            len: region.len(),
            points,
            seed,
            region_label: region.label().to_owned(),
            distinct,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Side length `L` of the underlying grid.
    pub fn grid_len(&self) -> usize {
        self.len
    }

    pub fn points(&self) -> &[TFPoint] {
        &self.points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn region_label(&self) -> &str {
        &self.region_label
    }

    pub fn is_distinct(&self) -> bool {
        self.distinct
    }
}

/// Uniform random grid points of `region`: i.i.d. with replacement, or
/// `r` distinct points when `distinct` is set.
pub fn uniform_sample(region: &TFRegion, r: usize, seed: u64, distinct: bool) -> Result<SampleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = uniform_sample_with(region, r, distinct, &mut rng)?;
    set.seed = seed;
    Ok(set)
}

/// Like [`uniform_sample`] with a caller-supplied generator; the recorded
/// seed is 0.
pub fn uniform_sample_with<R: Rng + ?Sized>(
    region: &TFRegion,
    r: usize,
    distinct: bool,
    rng: &mut R,
) -> Result<SampleSet> {
    if r == 0 {
        return Err(Error::param("r", "at least one sample is required"));
    }
    let all = region.points();
    if all.is_empty() {
        return Err(Error::Infeasible(format!(
            "cannot sample from empty region {}",
            region.label()
        )));
    }
    let points = if distinct {
        if r > all.len() {
            return Err(Error::Infeasible(format!(
                "{r} distinct samples requested from {} points",
                all.len()
            )));
        }
        rand::seq::index::sample(rng, all.len(), r)
            .into_iter()
            .map(|i| all[i])
            .collect()
    } else {
        (0..r).map(|_| all[rng.random_range(0..all.len())]).collect()
    };
    Ok(SampleSet {
        len: region.len(),
        points,
        seed: 0,
        region_label: region.label().to_owned(),
        distinct: distinct || r == 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringReport {
    pub cell_size: usize,
    pub cells_per_side: usize,
    pub counts: Vec<usize>,
    /// Maximum cell occupancy.
    pub n0: usize,
}

pub fn covering_index(samples: &SampleSet, cell_px: usize) -> Result<CoveringReport> {
    if cell_px == 0 {
        return Err(Error::param("cell_px", "must be at least 1"));
    }
    let side = samples.len.div_ceil(cell_px);
    let mut counts = vec![0usize; side * side];
    for p in &samples.points {
        counts[(p.m / cell_px) * side + p.n / cell_px] += 1;
    }
    let n0 = counts.iter().copied().max().unwrap_or(0);
    Ok(CoveringReport {
        cell_size: cell_px,
        cells_per_side: side,
        counts,
        n0,
    })
}
