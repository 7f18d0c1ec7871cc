//! Condition panels (segment x interval series), delimited-text ingestion
//! with a bounded gap-interpolation policy, and min-max normalization into
//! the responsive range of the sigmoid output head.

use std::collections::HashMap;

use ndarray::{Array1, Array2};

use crate::error::{GrnnError, Result};
use crate::graph::LinkageNetwork;

/// Margin used when a value outside the fitted range must be squeezed into
/// the open unit interval.
const CLAMP_MARGIN: f64 = 1e-6;

/// Dense per-segment traffic-condition series in original units (e.g. km/h),
/// column t = interval t. Row order matches the linkage-network node order.
#[derive(Debug, Clone)]
pub struct ConditionPanel {
    pub values: Array2<f64>,
    pub interval_minutes: u32,
    pub segment_ids: Vec<String>,
}

impl ConditionPanel {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, t: usize) -> Array1<f64> {
        self.values.column(t).to_owned()
    }

    /// Intervals per simulated day.
    pub fn intervals_per_day(&self) -> usize {
        (24 * 60 / self.interval_minutes) as usize
    }

    /// Delimited export: `# interval_minutes=M`, a header row, then
    /// `segment_id,interval_index,value` rows, segment-major.
    pub fn export_csv(&self) -> String {
        let mut out = format!("# interval_minutes={}\n", self.interval_minutes);
        out.push_str("segment_id,interval_index,value\n");
        for (i, id) in self.segment_ids.iter().enumerate() {
            for t in 0..self.len() {
                out.push_str(id);
                out.push(',');
                out.push_str(&t.to_string());
                out.push(',');
                out.push_str(&self.values[[i, t]].to_string());
                out.push('\n');
            }
        }
        out
    }

    /// Parses a panel file and aligns rows to `link`'s node order. Interval
    /// indices are re-based so the earliest observed interval becomes 0.
    /// Internal gaps of at most two intervals are filled by linear
    /// interpolation; anything longer (or missing leading/trailing data) is
    /// rejected naming the offending segments.
    pub fn load_csv(text: &str, link: &LinkageNetwork) -> Result<Self> {
        let mut interval_minutes: u32 = 10;
        let mut header_seen = false;
        let mut per_segment: Vec<HashMap<usize, f64>> = vec![HashMap::new(); link.n()];
        let mut min_t = usize::MAX;
        let mut max_t = 0usize;
        let mut any = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("interval_minutes=") {
                    interval_minutes = v.trim().parse().map_err(|_| {
                        GrnnError::Parse(format!("bad interval_minutes value {v:?}"))
                    })?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !header_seen {
                if fields != ["segment_id", "interval_index", "value"] {
                    return Err(GrnnError::Parse(format!(
                        "expected header segment_id,interval_index,value, got {line:?}"
                    )));
                }
                header_seen = true;
                continue;
            }
            if fields.len() != 3 {
                return Err(GrnnError::Parse(format!(
                    "line {}: expected 3 fields, got {}",
                    idx + 1,
                    fields.len()
                )));
            }
            let row = link.node_index(fields[0]).ok_or_else(|| {
                GrnnError::Validation(format!(
                    "panel references unknown segment {:?}",
                    fields[0]
                ))
            })?;
            let t: usize = fields[1].parse().map_err(|_| {
                GrnnError::Parse(format!("line {}: bad interval index {:?}", idx + 1, fields[1]))
            })?;
            let v: f64 = fields[2].parse().map_err(|_| {
                GrnnError::Parse(format!("line {}: bad value {:?}", idx + 1, fields[2]))
            })?;
            if !v.is_finite() {
                return Err(GrnnError::Validation(format!(
                    "non-finite value for segment {:?} at interval {t}",
                    fields[0]
                )));
            }
            if per_segment[row].insert(t, v).is_some() {
                return Err(GrnnError::Validation(format!(
                    "duplicate record for segment {:?} at interval {t}",
                    fields[0]
                )));
            }
            min_t = min_t.min(t);
            max_t = max_t.max(t);
            any = true;
        }
        if !header_seen {
            return Err(GrnnError::Parse(
                "missing header segment_id,interval_index,value".into(),
            ));
        }
        if !any {
            return Err(GrnnError::Validation("panel file holds no records".into()));
        }
        let len = max_t - min_t + 1;
        let mut values = Array2::<f64>::zeros((link.n(), len));
        let mut rejected: Vec<String> = Vec::new();
        for (row, series) in per_segment.iter().enumerate() {
            if series.is_empty() {
                rejected.push(format!("{} (no records)", link.nodes()[row]));
                continue;
            }
            match fill_series(series, min_t, len) {
                Ok(dense) => {
                    for (t, v) in dense.into_iter().enumerate() {
                        values[[row, t]] = v;
                    }
                }
                Err(reason) => rejected.push(format!("{} ({reason})", link.nodes()[row])),
            }
        }
        if !rejected.is_empty() {
            return Err(GrnnError::Validation(format!(
                "segments rejected by the gap policy: {}",
                rejected.join(", ")
            )));
        }
        Ok(Self {
            values,
            interval_minutes,
            segment_ids: link.nodes().to_vec(),
        })
    }
}

/// Densifies one segment's sparse series over `[base, base+len)`. Returns a
/// human-readable reason when the gap policy rejects it.
fn fill_series(
    series: &HashMap<usize, f64>,
    base: usize,
    len: usize,
) -> std::result::Result<Vec<f64>, String> {
    let mut out = vec![f64::NAN; len];
    for (&t, &v) in series {
        out[t - base] = v;
    }
    if out[0].is_nan() {
        return Err("missing data at the first interval".into());
    }
    if out[len - 1].is_nan() {
        return Err("missing data at the last interval".into());
    }
    let mut t = 1;
    while t < len {
        if out[t].is_nan() {
            let start = t; // first missing slot
            while out[t].is_nan() {
                t += 1;
            }
            let gap = t - start;
            if gap > 2 {
                return Err(format!("{gap}-interval gap at interval {}", base + start));
            }
            let left = out[start - 1];
            let right = out[t];
            let span = (gap + 1) as f64;
            for (k, slot) in out[start..t].iter_mut().enumerate() {
                *slot = left + (right - left) * (k + 1) as f64 / span;
            }
        }
        t += 1;
    }
    Ok(out)
}

/// Affine map of the training-split value range onto [0.05, 0.95], so the
/// sigmoid head never has to chase its own asymptotes.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub min: f64,
    pub max: f64,
}

/// Target range of the normalized training values.
pub const NORM_LO: f64 = 0.05;
pub const NORM_HI: f64 = 0.95;

impl Normalizer {
    /// Fits on the first `floor(train_fraction * L)` intervals only.
    pub fn fit(panel: &ConditionPanel, train_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(GrnnError::Parameter(format!(
                "train fraction must be in [0, 1], got {train_fraction}"
            )));
        }
        let cols = ((train_fraction * panel.len() as f64).floor() as usize).min(panel.len());
        if cols == 0 {
            return Err(GrnnError::Parameter(
                "training split holds no intervals".into(),
            ));
        }
        let slice = panel.values.slice(ndarray::s![.., ..cols]);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in slice.iter() {
            min = min.min(v);
            max = max.max(v);
        }
        Self::from_bounds(min, max)
    }

    pub fn from_bounds(min: f64, max: f64) -> Result<Self> {
        if !(max > min) {
            return Err(GrnnError::Validation(format!(
                "cannot normalize a constant panel (min {min} == max {max})"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn apply(&self, v: f64) -> f64 {
        NORM_LO + (v - self.min) * (NORM_HI - NORM_LO) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.min + (y - NORM_LO) * (self.max - self.min) / (NORM_HI - NORM_LO)
    }

    /// Applies the map and squeezes out-of-range results into the open unit
    /// interval. Returns the value and whether it was clamped.
    pub fn apply_clamped(&self, v: f64) -> (f64, bool) {
        let y = self.apply(v);
        if y <= 0.0 + CLAMP_MARGIN {
            (CLAMP_MARGIN, true)
        } else if y >= 1.0 - CLAMP_MARGIN {
            (1.0 - CLAMP_MARGIN, true)
        } else {
            (y, false)
        }
    }

    /// Normalizes a whole panel; the count of clamped entries is reported
    /// so runs can flag validation overflow in their manifest.
    pub fn apply_panel(&self, panel: &ConditionPanel) -> (Array2<f64>, usize) {
        let mut clamped = 0usize;
        let values = panel.values.mapv(|v| {
            let (y, c) = self.apply_clamped(v);
            if c {
                clamped += 1;
            }
            y
        });
        (values, clamped)
    }
}
