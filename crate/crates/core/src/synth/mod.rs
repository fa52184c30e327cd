//! Reproducible synthetic dual-mobility cohorts.
//!
//! Every session is a pure function of its configuration and a sub-seed
//! derived from (master seed, participant, domain, condition, repetition), so
//! sessions can be generated in any order or in parallel.

mod calibrate;
mod io;
mod session;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_policy, simulate_label_rates, CellRates, RateTargets};
pub use io::{read_session, write_session, write_session_annotated};
pub use session::{generate_session, generate_session_logged, GenerationLog, HazardEvent, Takeover};

use crate::domain::{Condition, DomainTag, Session, MIN_SESSION_DURATION};
use crate::error::{invalid, Result};

/// Per-participant physiology and disposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub participant_id: u32,
    /// Resting heart rate (bpm), in [50, 100].
    pub hr_baseline: f64,
    /// Tonic skin conductance (µS), in [0.5, 20].
    pub gsr_baseline: f64,
    /// Scale of physiological responses, in (0, 3].
    pub reactivity: f64,
    /// Trust in the automation, in [0, 1]; higher trust means fewer takeovers.
    pub trust: f64,
}

impl ParticipantProfile {
    pub fn validate(&self) -> Result<()> {
        if self.participant_id < 1 {
            return Err(invalid("participant_id must be at least 1"));
        }
        if !(50.0..=100.0).contains(&self.hr_baseline) {
            return Err(invalid(format!("hr_baseline {} outside [50, 100]", self.hr_baseline)));
        }
        if !(0.5..=20.0).contains(&self.gsr_baseline) {
            return Err(invalid(format!("gsr_baseline {} outside [0.5, 20]", self.gsr_baseline)));
        }
        if !(self.reactivity > 0.0 && self.reactivity <= 3.0) {
            return Err(invalid(format!("reactivity {} outside (0, 3]", self.reactivity)));
        }
        if !(0.0..=1.0).contains(&self.trust) {
            return Err(invalid(format!("trust {} outside [0, 1]", self.trust)));
        }
        Ok(())
    }

    /// Draws a profile from the cohort prior.
    pub fn sample<R: Rng>(participant_id: u32, rng: &mut R) -> Self {
        Self {
            participant_id,
            hr_baseline: rng.gen_range(60.0..85.0),
            gsr_baseline: rng.gen_range(2.0..12.0),
            reactivity: rng.gen_range(0.6..1.6),
            trust: rng.gen_range(0.3..0.7),
        }
    }
}

/// Micro-mobility minus car differences injected by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainShift {
    /// Heart-rate level offset (bpm).
    pub hr_mean_delta: f64,
    /// Relative gain of hazard-evoked skin-conductance responses.
    pub gsr_max_delta: f64,
    /// Raise of the lowest vertical gaze coordinate (normalized).
    pub gaze_y_min_delta: f64,
    /// Extra share of gaze on pedestrians.
    pub p_pedestrian_delta: f64,
    /// Micro-mobility cruise speed relative to the car, < 1.
    pub speed_scale: f64,
}

impl Default for DomainShift {
    fn default() -> Self {
        Self {
            hr_mean_delta: 6.0,
            gsr_max_delta: 0.8,
            gaze_y_min_delta: 0.12,
            p_pedestrian_delta: 0.12,
            speed_scale: 0.6,
        }
    }
}

impl DomainShift {
    pub fn validate(&self) -> Result<()> {
        let deltas = [
            ("hr_mean_delta", self.hr_mean_delta),
            ("gsr_max_delta", self.gsr_max_delta),
            ("gaze_y_min_delta", self.gaze_y_min_delta),
            ("p_pedestrian_delta", self.p_pedestrian_delta),
        ];
        for (name, v) in deltas {
            if !(v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.gaze_y_min_delta >= 0.5 || self.p_pedestrian_delta >= 0.5 {
            return Err(invalid("gaze and pedestrian shifts must stay below 0.5"));
        }
        if !(self.speed_scale > 0.0 && self.speed_scale < 1.0) {
            return Err(invalid("speed_scale must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Per-hazard takeover probability
/// `base · (aggressive ? aggressive_multiplier : 1) · (proactive ? proactive_multiplier : 1) · (1.5 − trust) · (0.25 + 1.5 · severity)`,
/// capped at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TakeoverPolicy {
    pub base_rate: f64,
    pub aggressive_multiplier: f64,
    pub proactive_multiplier: f64,
}

impl Default for TakeoverPolicy {
    // Frozen output of `calibrate_policy` for `RateTargets::reference()` on a
    // 2000-participant cohort with otherwise default settings.
    fn default() -> Self {
        Self { base_rate: 0.4296, aggressive_multiplier: 1.4219, proactive_multiplier: 0.6372 }
    }
}

impl TakeoverPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0 && self.base_rate <= 1.0) {
            return Err(invalid("base_rate must lie in (0, 1]"));
        }
        if !(self.aggressive_multiplier > 1.0) {
            return Err(invalid("aggressive_multiplier must exceed 1"));
        }
        if !(self.proactive_multiplier > 0.0 && self.proactive_multiplier < 1.0) {
            return Err(invalid("proactive_multiplier must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn probability(&self, condition: Condition, trust: f64, severity: f64) -> f64 {
        let mut p = self.base_rate * (1.5 - trust) * (0.25 + 1.5 * severity);
        if condition.is_aggressive() {
            p *= self.aggressive_multiplier;
        }
        if condition.proactive {
            p *= self.proactive_multiplier;
        }
        p.clamp(0.0, 1.0)
    }
}

/// Native sensor rates (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleRates {
    pub physiology: f64,
    pub gaze: f64,
    pub vehicle: f64,
    pub controls: f64,
}

impl Default for SampleRates {
    fn default() -> Self {
        Self { physiology: 10.0, gaze: 60.0, vehicle: 20.0, controls: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortConfig {
    pub n_participants: u32,
    /// Sessions per participant for each domain × condition pair.
    pub sessions_per_condition: u32,
    pub car_duration: f64,
    pub micro_duration: f64,
    pub rates: SampleRates,
    /// Road-user interactions per minute.
    pub hazard_rate: f64,
    pub shift: DomainShift,
    pub policy: TakeoverPolicy,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_participants: 20,
            sessions_per_condition: 1,
            car_duration: 600.0,
            micro_duration: 400.0,
            rates: SampleRates::default(),
            hazard_rate: 4.0,
            shift: DomainShift::default(),
            policy: TakeoverPolicy::default(),
            seed: 2024,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_participants < 5 {
            return Err(invalid("n_participants must be at least 5"));
        }
        if self.sessions_per_condition < 1 {
            return Err(invalid("sessions_per_condition must be at least 1"));
        }
        for (name, d) in [("car_duration", self.car_duration), ("micro_duration", self.micro_duration)] {
            if !(d >= MIN_SESSION_DURATION) {
                return Err(invalid(format!("{name} must be at least {MIN_SESSION_DURATION} s")));
            }
        }
        if self.car_duration < self.micro_duration {
            return Err(invalid("car sessions must not be shorter than micro-mobility sessions"));
        }
        let r = &self.rates;
        if [r.physiology, r.gaze, r.vehicle, r.controls].iter().any(|&x| !(x > 0.0)) {
            return Err(invalid("sample rates must be positive"));
        }
        if !(self.hazard_rate > 0.0) {
            return Err(invalid("hazard_rate must be positive"));
        }
        self.shift.validate()?;
        self.policy.validate()
    }

    pub fn duration(&self, domain: DomainTag) -> f64 {
        match domain {
            DomainTag::Car => self.car_duration,
            DomainTag::MicroMobility => self.micro_duration,
        }
    }
}

/// SplitMix64 finalizer used to derive independent sub-seeds.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |acc, &p| mix(acc ^ mix(p)))
}

/// Sub-seed of one session.
pub fn session_seed(master: u64, participant: u32, domain: DomainTag, condition: Condition, repetition: u32) -> u64 {
    let cond = Condition::ALL.iter().position(|c| *c == condition).unwrap_or(0) as u64;
    derive_seed(&[master, participant as u64, domain as u64, cond, repetition as u64])
}

/// Poisson arrivals at `rate` events per minute on `(0, duration)`.
pub fn hazard_schedule(duration: f64, rate: f64, seed: u64) -> Result<Vec<f64>> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(invalid(format!("hazard rate must be non-negative, got {rate}")));
    }
    if !(duration > 0.0) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    if rate == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(rate / 60.0).map_err(|e| invalid(e.to_string()))?;
    let mut out: Vec<f64> = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t >= duration {
            break;
        }
        if t > 0.0 && out.last().is_none_or(|&last| t > last) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Participant profiles drawn from the master seed.
pub fn cohort_profiles(cfg: &CohortConfig) -> Vec<ParticipantProfile> {
    (1..=cfg.n_participants)
        .map(|pid| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, 0x5052_4F46, pid as u64]));
            ParticipantProfile::sample(pid, &mut rng)
        })
        .collect()
}

/// One session per participant × domain × condition × repetition, in that order.
pub fn generate_cohort(cfg: &CohortConfig) -> Result<Vec<Session>> {
    cfg.validate()?;
    let profiles = cohort_profiles(cfg);
    let mut jobs = Vec::new();
    for p in &profiles {
        for domain in DomainTag::ALL {
            for condition in Condition::ALL {
                for rep in 0..cfg.sessions_per_condition {
                    jobs.push((*p, domain, condition, rep));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(p, domain, condition, rep)| {
            let seed = session_seed(cfg.seed, p.participant_id, domain, condition, rep);
            let mut s = generate_session(&p, domain, condition, cfg, seed)?;
            s.repetition = rep;
            Ok(s)
        })
        .collect()
}
