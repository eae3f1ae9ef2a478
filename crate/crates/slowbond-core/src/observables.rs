//! Measurements on simulation output: binned density profiles, interface
//! box averages, and cumulative crossing flux.
//!
//! All spatial quantities are expressed in macroscopic coordinates
//! (`u = site / n`), so fields from different lattice sizes and from the
//! continuum solver are directly comparable.

use alloc::format;
use alloc::vec::Vec;

use crate::sim::{EventLog, SnapshotRecord};
use crate::Error;

/// A piecewise-constant density on a uniform grid of bins.
///
/// Bin `i` covers `[left_edge + i·bin_width, left_edge + (i+1)·bin_width)`
/// and carries one value (a mean occupancy or a finite-volume cell average).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    left_edge: f64,
    bin_width: f64,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(left_edge: f64, bin_width: f64, values: Vec<f64>) -> Result<DensityField, Error> {
        if !(bin_width > 0.0) || !bin_width.is_finite() || !left_edge.is_finite() {
            return Err(Error::InvalidObservable(format!(
                "bad field geometry: left edge {left_edge}, bin width {bin_width}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidObservable("density field has no bins".into()));
        }
        Ok(DensityField {
            left_edge,
            bin_width,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_edge(&self) -> f64 {
        self.left_edge
    }

    pub fn right_edge(&self) -> f64 {
        self.left_edge + self.bin_width * self.values.len() as f64
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Bin mid-points, in grid order.
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        let l = self.left_edge;
        let w = self.bin_width;
        (0..self.values.len()).map(move |i| l + (i as f64 + 0.5) * w)
    }

    /// Average this field over each bin of a target grid by exact overlap
    /// integration. The target grid must lie inside this field's support.
    pub fn resample(
        &self,
        left_edge: f64,
        bin_width: f64,
        len: usize,
    ) -> Result<DensityField, Error> {
        let tol = 1e-9 * self.bin_width;
        let right = left_edge + bin_width * len as f64;
        if left_edge < self.left_edge - tol || right > self.right_edge() + tol {
            return Err(Error::InvalidObservable(format!(
                "resample target [{left_edge}, {right}] exceeds field support [{}, {}]",
                self.left_edge,
                self.right_edge()
            )));
        }
        let mut values = Vec::with_capacity(len);
        for j in 0..len {
            let a = left_edge + j as f64 * bin_width;
            let b = a + bin_width;
            let mut i = (libm::floor((a - self.left_edge) / self.bin_width) as isize).max(0) as usize;
            let mut acc = 0.0;
            while i < self.values.len() {
                let lo = self.left_edge + i as f64 * self.bin_width;
                let hi = lo + self.bin_width;
                if lo >= b {
                    break;
                }
                let overlap = (hi.min(b) - lo.max(a)).max(0.0);
                acc += overlap * self.values[i];
                i += 1;
            }
            values.push(acc / bin_width);
        }
        DensityField::new(left_edge, bin_width, values)
    }
}

fn same_geometry(a: &DensityField, b: &DensityField) -> bool {
    a.values.len() == b.values.len()
        && (a.left_edge - b.left_edge).abs() <= 1e-12 * (1.0 + a.left_edge.abs())
        && (a.bin_width - b.bin_width).abs() <= 1e-12 * a.bin_width
}

/// Occupancy averaged over consecutive blocks of `sites_per_bin` sites.
///
/// The block size must divide the window half-width so that the origin is a
/// bin boundary: the sign of a site is then the sign of its bin.
pub fn empirical_density(
    snap: &SnapshotRecord,
    sites_per_bin: u32,
) -> Result<DensityField, Error> {
    let w = snap.window_half_width_sites;
    let b = sites_per_bin as i64;
    if b < 1 || w % b != 0 {
        return Err(Error::InvalidObservable(format!(
            "bin size {b} sites must be ≥ 1 and divide the window half-width {w}"
        )));
    }
    let n = snap.n as f64;
    let bins = (2 * w / b) as usize;
    let mut values = Vec::with_capacity(bins);
    for j in 0..bins {
        let mut count = 0usize;
        for s in 0..b {
            if snap.occupancy.get((j as i64 * b + s) as usize) {
                count += 1;
            }
        }
        values.push(count as f64 / b as f64);
    }
    DensityField::new(-(w as f64) / n, b as f64 / n, values)
}

/// Pointwise mean of fields on the same grid.
pub fn mean_density(fields: &[DensityField]) -> Result<DensityField, Error> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidObservable("mean of zero fields".into()))?;
    let mut values = alloc::vec![0.0f64; first.len()];
    for f in fields {
        if !same_geometry(first, f) {
            return Err(Error::InvalidObservable(
                "cannot average fields on different grids".into(),
            ));
        }
        for (v, x) in values.iter_mut().zip(f.values()) {
            *v += x;
        }
    }
    let m = fields.len() as f64;
    for v in &mut values {
        *v /= m;
    }
    DensityField::new(first.left_edge, first.bin_width, values)
}

/// `∫ |a − b| du` for fields on the same grid.
pub fn l1_distance(a: &DensityField, b: &DensityField) -> Result<f64, Error> {
    if !same_geometry(a, b) {
        return Err(Error::InvalidObservable(
            "L1 distance needs matching grids; resample first".into(),
        ));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.bin_width)
}

fn check_box(sites: u32, max: i64) -> Result<i64, Error> {
    let k = sites as i64;
    if k < 1 || k > max {
        return Err(Error::InvalidObservable(format!(
            "box of {k} sites does not fit the window (maximum {max})"
        )));
    }
    Ok(k)
}

/// Mean occupancy of the `sites` sites immediately left of the origin,
/// `y ∈ {−sites, …, −1}`.
pub fn box_average_left(snap: &SnapshotRecord, sites: u32) -> Result<f64, Error> {
    let w = snap.window_half_width_sites;
    let k = check_box(sites, w)?;
    let mut count = 0usize;
    for site in -k..0 {
        if snap.occupancy.get((site + w) as usize) {
            count += 1;
        }
    }
    Ok(count as f64 / k as f64)
}

/// Mean occupancy of the `sites` sites right of the origin, starting at
/// `y = 1`: `y ∈ {1, …, sites}`. The origin site itself is excluded — the
/// two boxes cover disjoint site ranges on either side of the bond {−1, 0}.
pub fn box_average_right(snap: &SnapshotRecord, sites: u32) -> Result<f64, Error> {
    let w = snap.window_half_width_sites;
    let k = check_box(sites, w - 1)?;
    let mut count = 0usize;
    for site in 1..=k {
        if snap.occupancy.get((site + w) as usize) {
            count += 1;
        }
    }
    Ok(count as f64 / k as f64)
}

/// Cumulative signed slow-bond crossings divided by `n`, starting at 0.
///
/// This is the microscopic analogue of the integrated interface flux: its
/// mean matches `α n^{1−β} m ∫ [ρ(0⁻) − ρ(0⁺)] ds` on the macroscopic
/// clock, which at `β = 1` is the Robin transmission `(σ²κ/2)∫[ρ₋ − ρ₊]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn crossing_flux(log: &EventLog, n: u32) -> FluxSeries {
    let mut times = Vec::with_capacity(log.times.len() + 1);
    let mut values = Vec::with_capacity(log.times.len() + 1);
    if log.times.first().map_or(true, |&t| t > 0.0) {
        times.push(0.0);
        values.push(0.0);
    }
    for (&t, &c) in log.times.iter().zip(&log.net) {
        times.push(t);
        values.push(c as f64 / n as f64);
    }
    FluxSeries { times, values }
}
