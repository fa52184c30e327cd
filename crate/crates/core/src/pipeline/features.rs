//! Atomic per-window feature computations.

use serde::{Deserialize, Serialize};

use crate::domain::ObjectClass;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Mean, population standard deviation, minimum and maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat4<T> {
    pub mean: T,
    pub std: T,
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Stat4<T> {
    pub fn to_array(self) -> [T; 4] {
        [self.mean, self.std, self.min, self.max]
    }
}

pub fn mean<T: Scalar>(xs: &[T]) -> Result<T> {
    if xs.is_empty() {
        return Err(invalid("mean of an empty series"));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Ok(xs[0]);
    }
    Ok(xs.iter().copied().sum::<T>() / T::of_usize(xs.len()))
}

/// Population standard deviation (divides by n).
pub fn population_std<T: Scalar>(xs: &[T]) -> Result<T> {
    let m = mean(xs)?;
    let var = xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::of_usize(xs.len());
    Ok(var.sqrt())
}

pub fn stat4<T: Scalar>(xs: &[T]) -> Result<Stat4<T>> {
    let mean = mean(xs)?;
    let std = population_std(xs)?;
    let (min, max) = xs.iter().fold((xs[0], xs[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(Stat4 { mean, std, min, max })
}

/// Heart-rate variation: population std of inter-beat intervals `60 / HR` in seconds.
pub fn hrv<T: Scalar>(hr: &[T]) -> Result<T> {
    if hr.is_empty() {
        return Err(invalid("hrv of an empty window"));
    }
    if let Some(bad) = hr.iter().find(|&&h| !(h > T::zero())) {
        return Err(invalid(format!("heart rate must be positive, got {bad}")));
    }
    let ibi: Vec<T> = hr.iter().map(|&h| T::of(60.0) / h).collect();
    population_std(&ibi)
}

/// Cell of a 3×3 grid over the unit square, row-major from the top-left
/// (`y` grows downward).
pub fn gaze_region<T: Scalar>(x: T, y: T) -> Result<usize> {
    let cell = |c: T| -> Result<usize> {
        if !(c >= T::zero() && c <= T::one()) {
            return Err(invalid(format!("gaze coordinate {c} outside [0,1]")));
        }
        let k = (T::of(3.0) * c).floor().to_usize().unwrap_or(0);
        Ok(k.min(2))
    };
    let col = cell(x)?;
    let row = cell(y)?;
    Ok(row * 3 + col)
}

pub const N_REGIONS: usize = 9;

/// Shannon entropy in nats of a non-negative weight vector (normalized internally).
pub fn entropy<T: Scalar>(weights: &[T]) -> Result<T> {
    if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
        return Err(invalid("entropy weights must be finite and non-negative"));
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(invalid("entropy of an all-zero distribution"));
    }
    let h = weights
        .iter()
        .filter(|&&w| w > T::zero())
        .map(|&w| {
            let p = w / total;
            -p * p.ln()
        })
        .sum::<T>();
    // Rounding can leave a tiny negative value for a delta distribution.
    Ok(h.max(T::zero()))
}

/// Fraction of samples on each of the 14 object classes. `None` (no object
/// under the gaze) counts as `other`.
pub fn object_distribution<T: Scalar>(samples: &[Option<usize>]) -> Result<[T; ObjectClass::COUNT]> {
    if samples.is_empty() {
        return Err(invalid("object distribution of an empty window"));
    }
    let mut counts = [0usize; ObjectClass::COUNT];
    for s in samples {
        let id = match s {
            Some(id) if *id < ObjectClass::COUNT => *id,
            Some(id) => return Err(invalid(format!("object id {id} outside taxonomy"))),
            None => ObjectClass::Other.id(),
        };
        counts[id] += 1;
    }
    let n = T::of_usize(samples.len());
    let mut out = [T::zero(); ObjectClass::COUNT];
    for (o, &c) in out.iter_mut().zip(&counts) {
        *o = T::of_usize(c) / n;
    }
    Ok(out)
}

/// Skin-conductance response detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScrParams {
    /// Width of the centered moving average subtracted before peak picking (s).
    pub detrend_window: f64,
    /// Minimum residual height of a peak (µS).
    pub min_amplitude: f64,
    /// Minimum distance between accepted peaks (s).
    pub min_separation: f64,
    /// Lowest admissible sample rate (Hz).
    pub min_rate: f64,
}

impl Default for ScrParams {
    fn default() -> Self {
        Self { detrend_window: 4.0, min_amplitude: 0.05, min_separation: 1.0, min_rate: 4.0 }
    }
}

/// Centered moving average, truncated at the edges.
fn centered_moving_average<T: Scalar>(xs: &[T], half: usize) -> Vec<T> {
    let mut prefix = Vec::with_capacity(xs.len() + 1);
    prefix.push(T::zero());
    for &x in xs {
        let last = *prefix.last().unwrap();
        prefix.push(last + x);
    }
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(xs.len());
            (prefix[hi] - prefix[lo]) / T::of_usize(hi - lo)
        })
        .collect()
}

/// Counts phasic skin-conductance peaks in a GSR window sampled at `rate` Hz.
pub fn scr_count<T: Scalar>(gsr: &[T], rate: f64, params: &ScrParams) -> Result<usize> {
    if !(rate >= params.min_rate) {
        return Err(invalid(format!("GSR rate {rate} Hz below {} Hz", params.min_rate)));
    }
    let half = (params.detrend_window * rate / 2.0).round() as usize;
    if gsr.len() < 2 * half + 1 {
        return Err(invalid(format!(
            "GSR window of {} samples shorter than the {} s detrend support",
            gsr.len(),
            params.detrend_window
        )));
    }
    let trend = centered_moving_average(gsr, half);
    let residual: Vec<T> = gsr.iter().zip(&trend).map(|(&x, &m)| x - m).collect();
    let threshold = T::of(params.min_amplitude);

    let mut candidates: Vec<usize> = (1..residual.len() - 1)
        .filter(|&i| residual[i] >= threshold && residual[i] > residual[i - 1] && residual[i] >= residual[i + 1])
        .collect();
    // Larger peaks claim their neighbourhood first; equal heights go to the earlier one.
    candidates.sort_by(|&a, &b| residual[b].partial_cmp(&residual[a]).unwrap().then(a.cmp(&b)));
    let min_gap = params.min_separation * rate;
    let mut accepted: Vec<usize> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|&a| ((a as f64) - (c as f64)).abs() >= min_gap) {
            accepted.push(c);
        }
    }
    Ok(accepted.len())
}

/// `(x - mean) / std` with population std; a constant series maps to zeros.
pub fn znormalize<T: Scalar>(xs: &[T]) -> Result<Vec<T>> {
    let z = ZScore::fit(xs)?;
    Ok(xs.iter().map(|&x| z.apply(x)).collect())
}

/// Location and scale used to z-normalize a modality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZScore<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> ZScore<T> {
    pub fn fit(xs: &[T]) -> Result<Self> {
        if xs.is_empty() {
            return Err(invalid("z-normalization of an empty series"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(invalid("z-normalization input must be finite"));
        }
        Ok(Self { mean: mean(xs)?, std: population_std(xs)? })
    }

    #[inline]
    pub fn apply(&self, x: T) -> T {
        if self.std > T::zero() {
            (x - self.mean) / self.std
        } else {
            T::zero()
        }
    }
}
