//! Windowing, labeling and assembly of the 52-slot feature vectors.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{entropy, gaze_region, hrv, object_distribution, scr_count, stat4, ScrParams, ZScore, N_REGIONS};
use super::sync::{fill_gaps, synchronize, AlignedFrameSeries};
use crate::dataset::{Dataset, FeatureWindow};
use crate::domain::{Aggressiveness, Condition, Modality, ObjectClass, Session};
use crate::error::{invalid, Error, Result};
use crate::layout::*;

/// Window geometry in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    pub window_len: f64,
    pub label_horizon: f64,
    pub gaze_subwindow: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { window_len: 10.0, label_horizon: 3.0, gaze_subwindow: 1.0 }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_len > 0.0) || !(self.label_horizon > 0.0) || !(self.gaze_subwindow > 0.0) {
            return Err(invalid("window lengths must be positive"));
        }
        let ratio = self.window_len / self.gaze_subwindow;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(invalid("gaze_subwindow must divide window_len"));
        }
        Ok(())
    }

    pub fn n_subwindows(&self) -> usize {
        (self.window_len / self.gaze_subwindow).round() as usize
    }
}

/// Everything needed to turn sessions into windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Common clock for all modalities (Hz).
    pub sync_rate: f64,
    /// Longest null run repaired by nearest-neighbour filling (s).
    pub max_gap: f64,
    pub window: WindowSpec,
    pub scr: ScrParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { sync_rate: 20.0, max_gap: 0.5, window: WindowSpec::default(), scr: ScrParams::default() }
    }
}

const EPS: f64 = 1e-9;

/// Non-overlapping `[k·L, (k+1)·L)` windows whose label horizon fits in the session.
pub fn window_slice(duration: f64, spec: &WindowSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    if !(duration + EPS >= spec.window_len + spec.label_horizon) {
        return Err(invalid(format!(
            "session of {duration} s is shorter than one window plus horizon ({} s)",
            spec.window_len + spec.label_horizon
        )));
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let start = k as f64 * spec.window_len;
        let end = (k + 1) as f64 * spec.window_len;
        if end + spec.label_horizon > duration + EPS {
            break;
        }
        out.push((start, end));
        k += 1;
    }
    Ok(out)
}

/// True iff any throttle or brake sample with `t ∈ (end, end + horizon]` is positive.
pub fn label_window(window_end: f64, throttle: &[(f64, f64)], brake: &[(f64, f64)], spec: &WindowSpec) -> Result<bool> {
    let horizon_end = window_end + spec.label_horizon;
    for (name, series) in [("throttle", throttle), ("brake", brake)] {
        let covered = series.first().is_some_and(|s| s.0 <= window_end + EPS)
            && series.last().is_some_and(|s| s.0 + EPS >= horizon_end);
        if !covered {
            return Err(invalid(format!("{name} does not cover the label horizon ({window_end}, {horizon_end}]")));
        }
    }
    Ok(throttle.iter().chain(brake).any(|&(t, v)| t > window_end + EPS && t <= horizon_end + EPS && v > 0.0))
}

/// The samples of one window, ready for feature extraction.
///
/// Physiology, steering and CAN signals come z-normalized; the raw GSR and HR
/// are kept for the unit-bearing SCR and HRV features.
#[derive(Debug, Clone, Copy)]
pub struct WindowData<'a> {
    pub rate: f64,
    pub gsr_z: &'a [f64],
    pub hr_z: &'a [f64],
    pub gsr_raw: &'a [f64],
    pub hr_raw: &'a [f64],
    pub gaze_x: &'a [f64],
    pub gaze_y: &'a [f64],
    pub gaze_object: &'a [Option<usize>],
    pub steering_z: &'a [f64],
    pub vx_z: &'a [f64],
    pub vy_z: &'a [f64],
    pub omega_z_z: &'a [f64],
}

/// Entropy of the per-subwindow dominant gaze regions (ties → lower region id).
pub fn region_entropy(gaze_x: &[f64], gaze_y: &[f64], n_subwindows: usize) -> Result<f64> {
    if gaze_x.len() != gaze_y.len() || gaze_x.len() < n_subwindows || n_subwindows == 0 {
        return Err(invalid("gaze window too short for its subwindows"));
    }
    let per = gaze_x.len() / n_subwindows;
    let mut dominant = [0.0f64; N_REGIONS];
    for k in 0..n_subwindows {
        let lo = k * per;
        let hi = if k + 1 == n_subwindows { gaze_x.len() } else { lo + per };
        let mut hist = [0usize; N_REGIONS];
        for i in lo..hi {
            hist[gaze_region(gaze_x[i], gaze_y[i])?] += 1;
        }
        let best = (0..N_REGIONS).fold(0, |b, r| if hist[r] > hist[b] { r } else { b });
        dominant[best] += 1.0;
    }
    entropy(&dominant)
}

/// Fills all 52 slots for one window.
pub fn extract_features(
    data: &WindowData<'_>,
    spec: &WindowSpec,
    scr: &ScrParams,
    condition: Condition,
) -> Result<[f64; N_FEATURES]> {
    let mut f = [0.0; N_FEATURES];
    let put4 = |f: &mut [f64; N_FEATURES], at: usize, xs: &[f64]| -> Result<()> {
        f[at..at + 4].copy_from_slice(&stat4(xs)?.to_array());
        Ok(())
    };
    put4(&mut f, GSR_MEAN, data.gsr_z)?;
    f[SCR_COUNT] = scr_count(data.gsr_raw, data.rate, scr)? as f64;
    put4(&mut f, HR_MEAN, data.hr_z)?;
    f[HRV] = hrv(data.hr_raw)?;
    put4(&mut f, GAZE_X_MEAN, data.gaze_x)?;
    put4(&mut f, GAZE_Y_MEAN, data.gaze_y)?;
    f[ENTROPY_REGION] = region_entropy(data.gaze_x, data.gaze_y, spec.n_subwindows())?;
    let p: [f64; ObjectClass::COUNT] = object_distribution(data.gaze_object)?;
    f[P_OBJECTS..P_OBJECTS + ObjectClass::COUNT].copy_from_slice(&p);
    f[ENTROPY_OBJECT] = entropy(&p)?;
    put4(&mut f, STEERING_MEAN, data.steering_z)?;
    put4(&mut f, VX_MEAN, data.vx_z)?;
    put4(&mut f, VY_MEAN, data.vy_z)?;
    put4(&mut f, OMEGA_Z_MEAN, data.omega_z_z)?;
    f[AGGRESSIVENESS] = f64::from(u8::from(condition.aggressiveness == Aggressiveness::Aggressive));
    f[PROACTIVE] = f64::from(u8::from(condition.proactive));
    Ok(f)
}

/// Modalities z-normalized per participant.
pub const NORMALIZED: [Modality; 6] =
    [Modality::Gsr, Modality::Hr, Modality::Steering, Modality::Vx, Modality::Vy, Modality::OmegaZ];

/// A window that could not be turned into features.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub session: String,
    pub window_start: f64,
    pub reason: String,
}

/// Result of running the pipeline over sessions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub dataset: Dataset,
    pub rejected: Vec<Rejection>,
}

/// Synchronizes and gap-fills one session.
pub fn align_session(session: &Session, cfg: &PipelineConfig) -> Result<AlignedFrameSeries> {
    let streams: Vec<_> = Modality::ALL
        .iter()
        .map(|&m| {
            session.stream(m).cloned().ok_or_else(|| invalid(format!("session {} missing modality {m}", session.key())))
        })
        .collect::<Result<_>>()?;
    let aligned = synchronize(&streams, cfg.sync_rate)?;
    fill_gaps(&aligned, cfg.max_gap)
}

/// Runs the full pipeline for the sessions of one participant. Normalization
/// statistics are pooled over every session passed in (both domains).
pub fn extract_participant(sessions: &[&Session], cfg: &PipelineConfig) -> Result<Extraction> {
    if let Some(s) = sessions.windows(2).find(|w| w[0].participant_id != w[1].participant_id) {
        return Err(invalid(format!("mixed participants {} and {}", s[0].participant_id, s[1].participant_id)));
    }
    let aligned: Vec<AlignedFrameSeries> = sessions.iter().map(|s| align_session(s, cfg)).collect::<Result<_>>()?;

    let mut zscores = BTreeMap::new();
    for m in NORMALIZED {
        let pooled: Vec<f64> = aligned.iter().flat_map(|a| a.column(m).unwrap().iter().flatten().copied()).collect();
        zscores.insert(m, ZScore::fit(&pooled)?);
    }

    let mut out = Extraction::default();
    for (session, series) in sessions.iter().zip(&aligned) {
        for (start, end) in window_slice(session.duration, &cfg.window)? {
            match window_features(session, series, &zscores, start, end, cfg) {
                Ok(w) => out.dataset.windows.push(w),
                Err(Error::WindowRejected { start, reason }) => {
                    out.rejected.push(Rejection { session: session.key(), window_start: start, reason })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn window_features(
    session: &Session,
    series: &AlignedFrameSeries,
    zscores: &BTreeMap<Modality, ZScore<f64>>,
    start: f64,
    end: f64,
    cfg: &PipelineConfig,
) -> Result<FeatureWindow> {
    let lo = series.frame_at_or_after(start);
    let hi = series.frame_at_or_after(end).min(series.len());
    let reject = |reason: String| Error::WindowRejected { start, reason };
    let values = |m: Modality| -> Result<Vec<f64>> {
        let col = &series.column(m).unwrap()[lo..hi];
        col.iter().map(|v| v.ok_or_else(|| reject(format!("unfilled gap in {m}")))).collect()
    };
    let normalized = |m: Modality| -> Result<Vec<f64>> {
        let z = zscores[&m];
        Ok(values(m)?.into_iter().map(|x| z.apply(x)).collect())
    };

    let gsr_raw = values(Modality::Gsr)?;
    let hr_raw = values(Modality::Hr)?;
    let gaze_x = values(Modality::GazeX)?;
    let gaze_y = values(Modality::GazeY)?;
    let gaze_object: Vec<Option<usize>> = values(Modality::GazeObject)?.into_iter().map(|v| Some(v as usize)).collect();
    let gsr_z = normalized(Modality::Gsr)?;
    let hr_z = normalized(Modality::Hr)?;
    let steering_z = normalized(Modality::Steering)?;
    let vx_z = normalized(Modality::Vx)?;
    let vy_z = normalized(Modality::Vy)?;
    let omega_z_z = normalized(Modality::OmegaZ)?;

    let control = |m: Modality| -> Vec<(f64, f64)> {
        series.column(m).unwrap().iter().enumerate().map(|(j, v)| (series.time(j), v.unwrap_or(0.0))).collect()
    };
    let label = label_window(end, &control(Modality::Throttle), &control(Modality::Brake), &cfg.window)?;

    let data = WindowData {
        rate: series.rate,
        gsr_z: &gsr_z,
        hr_z: &hr_z,
        gsr_raw: &gsr_raw,
        hr_raw: &hr_raw,
        gaze_x: &gaze_x,
        gaze_y: &gaze_y,
        gaze_object: &gaze_object,
        steering_z: &steering_z,
        vx_z: &vx_z,
        vy_z: &vy_z,
        omega_z_z: &omega_z_z,
    };
    let features =
        extract_features(&data, &cfg.window, &cfg.scr, session.condition).map_err(|e| reject(e.to_string()))?;
    let window = FeatureWindow {
        features: features.to_vec(),
        label,
        participant_id: session.participant_id,
        domain: session.domain,
        window_start: start,
    };
    window.check().map_err(|e| reject(e.to_string()))?;
    Ok(window)
}

/// Runs the pipeline over a whole cohort, one participant at a time.
/// Output order is (participant, domain, condition, repetition, window start).
pub fn extract_dataset(sessions: &[Session], cfg: &PipelineConfig) -> Result<Extraction> {
    let mut by_participant: BTreeMap<u32, Vec<&Session>> = BTreeMap::new();
    for s in sessions {
        by_participant.entry(s.participant_id).or_default().push(s);
    }
    for group in by_participant.values_mut() {
        group.sort_by_key(|s| (s.domain, s.condition, s.repetition));
    }
    let groups: Vec<Vec<&Session>> = by_participant.into_values().collect();
    let parts: Vec<Extraction> = groups.par_iter().map(|g| extract_participant(g, cfg)).collect::<Result<_>>()?;
    let mut out = Extraction::default();
    for p in parts {
        out.dataset.windows.extend(p.dataset.windows);
        out.rejected.extend(p.rejected);
    }
    Ok(out)
}

/// Subsamples the majority class without replacement down to the minority count.
/// Kept windows retain their original order.
pub fn balance_downsample(dataset: &Dataset, seed: u64) -> Result<Dataset> {
    let pos: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.windows[i].label).collect();
    let neg: Vec<usize> = (0..dataset.len()).filter(|&i| !dataset.windows[i].label).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(invalid("balancing needs both classes"));
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> =
        sample(&mut rng, majority.len(), minority.len()).into_iter().map(|k| majority[k]).collect();
    keep.extend(minority);
    keep.sort_unstable();
    Ok(Dataset::new(keep.into_iter().map(|i| dataset.windows[i].clone()).collect()))
}
