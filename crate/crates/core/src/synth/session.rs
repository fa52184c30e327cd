use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{derive_seed, hazard_schedule, CohortConfig, ParticipantProfile};
use crate::domain::{Condition, DomainTag, Modality, ModalityStream, ObjectClass, Session};
use crate::error::Result;

/// A takeover: one pedal held at `magnitude` over `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Takeover {
    pub start: f64,
    pub end: f64,
    pub pedal: Modality,
    pub magnitude: f64,
}

/// One road-user interaction and the participant's reaction to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardEvent {
    pub time: f64,
    /// In [0, 1].
    pub severity: f64,
    pub object: ObjectClass,
    pub x: f64,
    pub y: f64,
    pub takeover: Option<Takeover>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub hazards: Vec<HazardEvent>,
}

impl GenerationLog {
    pub fn takeovers(&self) -> impl Iterator<Item = &Takeover> {
        self.hazards.iter().filter_map(|h| h.takeover.as_ref())
    }
}

use ObjectClass as O;

/// Baseline fixation shares; micro-mobility only adds pedestrian mass.
fn gaze_prior(domain: DomainTag, pedestrian_delta: f64) -> [f64; ObjectClass::COUNT] {
    let mut w = [0.0; ObjectClass::COUNT];
    let table: [(ObjectClass, f64); ObjectClass::COUNT] = [
        (O::Pedestrian, 0.02),
        (O::Car, 0.16),
        (O::Building, 0.10),
        (O::Road, 0.28),
        (O::Sidewalk, 0.04),
        (O::Tree, 0.05),
        (O::TrafficLight, 0.05),
        (O::TrafficSignal, 0.03),
        (O::StopSign, 0.02),
        (O::Sky, 0.05),
        (O::Pole, 0.03),
        (O::LaneMarking, 0.08),
        (O::OtherMobility, 0.02),
        (O::Other, 0.07),
    ];
    for (c, p) in table {
        w[c.id()] = p;
    }
    if domain == DomainTag::MicroMobility {
        w[O::Pedestrian.id()] += pedestrian_delta;
    }
    w
}

fn hazard_objects(domain: DomainTag) -> &'static [(ObjectClass, f64)] {
    match domain {
        DomainTag::Car => &[
            (O::Car, 0.45),
            (O::TrafficLight, 0.15),
            (O::Pedestrian, 0.15),
            (O::OtherMobility, 0.10),
            (O::StopSign, 0.15),
        ],
        DomainTag::MicroMobility => {
            &[(O::Pedestrian, 0.55), (O::OtherMobility, 0.20), (O::Car, 0.15), (O::StopSign, 0.10)]
        }
    }
}

/// Draws the hazards and takeovers of one session. This layer alone decides
/// the labels, so rate calibration can run it without synthesizing signals.
pub(crate) fn draw_events(
    profile: &ParticipantProfile,
    domain: DomainTag,
    condition: Condition,
    cfg: &CohortConfig,
    seed: u64,
) -> Result<Vec<HazardEvent>> {
    let duration = cfg.duration(domain);
    let times = hazard_schedule(duration, cfg.hazard_rate, derive_seed(&[seed, 1]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 2]));
    let objects = hazard_objects(domain);
    let pick = WeightedIndex::new(objects.iter().map(|o| o.1)).expect("static weights");
    Ok(times
        .into_iter()
        .map(|time| {
            let severity: f64 = rng.gen();
            let object = objects[pick.sample(&mut rng)].0;
            let x = rng.gen_range(0.15..0.85);
            let y = rng.gen_range(0.3..0.8);
            let u: f64 = rng.gen();
            let delay = rng.gen_range(0.5..3.5);
            let length = rng.gen_range(0.3..1.2);
            let brake = rng.gen::<f64>() < 0.4 + 0.5 * severity;
            let magnitude = rng.gen_range(0.3..1.0);
            let p = cfg.policy.probability(condition, profile.trust, severity);
            let takeover = (u < p).then(|| Takeover {
                start: time + delay,
                end: (time + delay + length).min(duration),
                pedal: if brake { Modality::Brake } else { Modality::Throttle },
                magnitude,
            });
            HazardEvent { time, severity, object, x, y, takeover }
        })
        .collect())
}

/// Events recent enough at `t` to still shape the signals.
fn near(events: &[HazardEvent], t: f64) -> std::ops::Range<usize> {
    events.partition_point(|h| h.time < t - 40.0)..events.partition_point(|h| h.time <= t)
}

/// Sample times `0, 1/rate, …` up to and including `duration`.
fn grid(duration: f64, rate: f64) -> Vec<f64> {
    let n = (duration * rate + 1e-9).floor() as usize + 1;
    (0..n).map(|i| i as f64 / rate).collect()
}

/// Stationary zero-mean Ornstein-Uhlenbeck path with time constant `tau` and std `sigma`.
fn ou<R: Rng>(n: usize, dt: f64, tau: f64, sigma: f64, rng: &mut R) -> Vec<f64> {
    let a = (-dt / tau).exp();
    let s = sigma * (1.0 - a * a).sqrt();
    let mut x = sigma * rng.sample::<f64, _>(StandardNormal);
    (0..n)
        .map(|_| {
            let out = x;
            x = a * x + s * rng.sample::<f64, _>(StandardNormal);
            out
        })
        .collect()
}

/// Linear rise over `rise` seconds, then exponential decay with time constant `decay`.
fn response(tau: f64, rise: f64, decay: f64) -> f64 {
    if tau <= 0.0 {
        0.0
    } else if tau < rise {
        tau / rise
    } else {
        (-(tau - rise) / decay).exp()
    }
}

fn bump(tau: f64, width: f64) -> f64 {
    (-0.5 * (tau / width).powi(2)).exp()
}

/// Poisson-timed `(start, end)` intervals.
fn dropouts<R: Rng>(duration: f64, per_minute: f64, len: (f64, f64), rng: &mut R) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += -(1.0 - rng.gen::<f64>()).ln() * 60.0 / per_minute;
        if t >= duration {
            return out;
        }
        out.push((t, t + rng.gen_range(len.0..len.1)));
    }
}

pub fn generate_session(
    profile: &ParticipantProfile,
    domain: DomainTag,
    condition: Condition,
    cfg: &CohortConfig,
    seed: u64,
) -> Result<Session> {
    generate_session_logged(profile, domain, condition, cfg, seed).map(|(s, _)| s)
}

/// Generates one session together with the hazards and takeovers behind it.
pub fn generate_session_logged(
    profile: &ParticipantProfile,
    domain: DomainTag,
    condition: Condition,
    cfg: &CohortConfig,
    seed: u64,
) -> Result<(Session, GenerationLog)> {
    profile.validate()?;
    cfg.validate()?;
    let events = draw_events(profile, domain, condition, cfg, seed)?;
    let duration = cfg.duration(domain);
    let micro = domain == DomainTag::MicroMobility;
    let shift = &cfg.shift;
    let r = profile.reactivity;

    // Physiology.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 3]));
    let t_phys = grid(duration, cfg.rates.physiology);
    let dt = 1.0 / cfg.rates.physiology;
    let hr_level = profile.hr_baseline + if micro { shift.hr_mean_delta } else { 0.0 };
    let hr_ou = ou(t_phys.len(), dt, 30.0, 2.0, &mut rng);
    let phasic_gain = if micro { 1.0 + shift.gsr_max_delta } else { 1.0 };
    let gsr_ou = ou(t_phys.len(), dt, 60.0, 0.2, &mut rng);
    let mut scrs: Vec<(f64, f64)> =
        events.iter().map(|h| (h.time + rng.gen_range(1.0..2.0), (0.1 + 0.4 * h.severity) * r * phasic_gain)).collect();
    for (t, _) in dropouts(duration, 1.0, (0.0, 1.0), &mut rng) {
        scrs.push((t, rng.gen_range(0.05..0.15) * r));
    }
    let mut hr = Vec::with_capacity(t_phys.len());
    let mut gsr = Vec::with_capacity(t_phys.len());
    for (i, &t) in t_phys.iter().enumerate() {
        let arousal: f64 = events[near(&events, t)]
            .iter()
            .map(|h| 8.0 * r * (0.5 + h.severity) * response(t - h.time, 1.0, 10.0 / 3.0))
            .sum();
        hr.push(Some(hr_level + hr_ou[i] + arousal + 0.3 * rng.sample::<f64, _>(StandardNormal)));
        let phasic: f64 = scrs.iter().map(|&(onset, amp)| amp * response(t - onset, 1.0, 4.0)).sum();
        let g = profile.gsr_baseline + gsr_ou[i] + phasic + 0.004 * rng.sample::<f64, _>(StandardNormal);
        gsr.push(Some(g.max(0.05)));
    }

    // Gaze.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 4]));
    let t_gaze = grid(duration, cfg.rates.gaze);
    let prior = WeightedIndex::new(gaze_prior(domain, shift.p_pedestrian_delta)).expect("positive weights");
    let lost: Vec<(f64, f64)> = dropouts(duration, 15.0, (0.1, 0.3), &mut rng)
        .into_iter()
        .chain(dropouts(duration, 0.1, (0.6, 1.5), &mut rng))
        .collect();
    let mut missing = vec![false; t_gaze.len()];
    for &(a, b) in &lost {
        let lo = t_gaze.partition_point(|&t| t < a);
        let hi = t_gaze.partition_point(|&t| t < b);
        missing[lo..hi].iter_mut().for_each(|m| *m = true);
    }
    let lift = |y: f64| if micro { shift.gaze_y_min_delta + (1.0 - shift.gaze_y_min_delta) * y } else { y };
    let (mut gx, mut gy, mut go) = (Vec::new(), Vec::new(), Vec::new());
    let mut fixation_end = -1.0;
    let mut fixation = (0.5, 0.5, O::Road);
    for (i, &t) in t_gaze.iter().enumerate() {
        if t >= fixation_end {
            fixation_end = t + rng.gen_range(0.15..0.6);
            let attending = events.iter().find(|h| {
                let dwell = 1.0 + 2.0 * h.severity;
                t >= h.time + 0.2 && t < h.time + 0.2 + dwell
            });
            fixation = match attending {
                Some(h) if rng.gen::<f64>() < 0.85 => (h.x, h.y, h.object),
                _ => {
                    let x: f64 = 0.5 + 0.17 * rng.sample::<f64, _>(StandardNormal);
                    let y: f64 = 0.5 + 0.17 * rng.sample::<f64, _>(StandardNormal);
                    (x, y, ObjectClass::ALL[prior.sample(&mut rng)])
                }
            };
        }
        let jx: f64 = 0.008 * rng.sample::<f64, _>(StandardNormal);
        let jy: f64 = 0.008 * rng.sample::<f64, _>(StandardNormal);
        if missing[i] {
            gx.push(None);
            gy.push(None);
            go.push(None);
        } else {
            gx.push(Some((fixation.0 + jx).clamp(0.0, 1.0)));
            gy.push(Some(lift((fixation.1 + jy).clamp(0.0, 1.0))));
            go.push(Some(fixation.2.id() as f64));
        }
    }

    // Vehicle.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 5]));
    let t_veh = grid(duration, cfg.rates.vehicle);
    let dt = 1.0 / cfg.rates.vehicle;
    let n = t_veh.len();
    let style = if condition.is_aggressive() { 1.1 } else { 0.9 };
    let cruise = 10.0 * style * if micro { shift.speed_scale } else { 1.0 };
    let speed_ou = ou(n, dt, 20.0, 0.03, &mut rng);
    let vy_ou = ou(n, dt, 1.5, 0.05 * cruise / 10.0, &mut rng);
    let yaw_ou = ou(n, dt, 3.0, 0.02, &mut rng);
    let steer_ou = ou(n, dt, 2.0, 2.0, &mut rng);
    let slowdown = if condition.is_aggressive() { 0.6 } else { 1.0 };
    let sides: Vec<f64> = events.iter().map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let (mut vx, mut vy, mut yaw, mut steer) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, &t) in t_veh.iter().enumerate() {
        let mut dip = 0.0;
        let mut lateral = 0.0;
        let mut turn = 0.0;
        let mut wheel = 0.0;
        let range = near(&events, t);
        for (h, side) in events[range.clone()].iter().zip(&sides[range]) {
            let tau = t - h.time - 0.3;
            dip += cruise * (0.1 + 0.4 * h.severity) * slowdown * response(tau, 1.5, 3.0);
            if let Some(k) = h.takeover.filter(|k| k.pedal == Modality::Brake) {
                dip += cruise * 0.3 * k.magnitude * response(t - k.start, 0.8, 3.0);
            }
            let b = bump(t - h.time - 1.0, 0.7);
            lateral += side * 0.3 * h.severity * cruise / 10.0 * b;
            turn += side * 0.08 * h.severity * b;
            wheel += side * 6.0 * h.severity * r * bump(t - h.time - 0.8, 0.5);
        }
        vx.push(Some((cruise * (1.0 + speed_ou[i]) - dip).max(0.0)));
        vy.push(Some(vy_ou[i] + lateral));
        yaw.push(Some(yaw_ou[i] + turn));
        steer.push(Some(steer_ou[i] + wheel));
    }

    // Controls.
    let t_ctl = grid(duration, cfg.rates.controls);
    let pedal = |m: Modality| -> Vec<Option<f64>> {
        t_ctl
            .iter()
            .map(|&t| {
                let v = events
                    .iter()
                    .filter_map(|h| h.takeover)
                    .filter(|k| k.pedal == m && t >= k.start && t <= k.end)
                    .map(|k| k.magnitude)
                    .fold(0.0, f64::max);
                Some(v)
            })
            .collect()
    };

    let rates = &cfg.rates;
    let streams = vec![
        ModalityStream::regular(Modality::Gsr, rates.physiology, gsr),
        ModalityStream::regular(Modality::Hr, rates.physiology, hr),
        ModalityStream::regular(Modality::GazeX, rates.gaze, gx),
        ModalityStream::regular(Modality::GazeY, rates.gaze, gy),
        ModalityStream::regular(Modality::GazeObject, rates.gaze, go),
        ModalityStream::regular(Modality::Steering, rates.vehicle, steer),
        ModalityStream::regular(Modality::Vx, rates.vehicle, vx),
        ModalityStream::regular(Modality::Vy, rates.vehicle, vy),
        ModalityStream::regular(Modality::OmegaZ, rates.vehicle, yaw),
        ModalityStream::regular(Modality::Throttle, rates.controls, pedal(Modality::Throttle)),
        ModalityStream::regular(Modality::Brake, rates.controls, pedal(Modality::Brake)),
    ];
    let session =
        Session { participant_id: profile.participant_id, domain, condition, repetition: 0, duration, seed, streams };
    Ok((session, GenerationLog { hazards: events }))
}
