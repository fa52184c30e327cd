//! Recording-level domain types and session validation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which mobility a recording or window comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Car,
    MicroMobility,
}

impl DomainTag {
    pub const ALL: [DomainTag; 2] = [DomainTag::Car, DomainTag::MicroMobility];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::Car => "car",
            DomainTag::MicroMobility => "micro_mobility",
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "car" => Ok(DomainTag::Car),
            "micro_mobility" => Ok(DomainTag::MicroMobility),
            other => Err(Error::Parse(format!("unknown domain {other:?}"))),
        }
    }
}

/// Automated driving style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggressiveness {
    Aggressive,
    Defensive,
}

impl Aggressiveness {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggressiveness::Aggressive => "aggressive",
            Aggressiveness::Defensive => "defensive",
        }
    }
}

impl FromStr for Aggressiveness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aggressive" => Ok(Aggressiveness::Aggressive),
            "defensive" => Ok(Aggressiveness::Defensive),
            other => Err(Error::Parse(format!("unknown aggressiveness {other:?}"))),
        }
    }
}

/// Driving condition of one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub aggressiveness: Aggressiveness,
    pub proactive: bool,
}

impl Condition {
    /// The four style × feedback combinations in a fixed order.
    pub const ALL: [Condition; 4] = [
        Condition { aggressiveness: Aggressiveness::Aggressive, proactive: true },
        Condition { aggressiveness: Aggressiveness::Aggressive, proactive: false },
        Condition { aggressiveness: Aggressiveness::Defensive, proactive: true },
        Condition { aggressiveness: Aggressiveness::Defensive, proactive: false },
    ];

    pub fn is_aggressive(&self) -> bool {
        self.aggressiveness == Aggressiveness::Aggressive
    }
}

/// One recorded channel. Units: GSR µS, HR bpm, gaze normalized to [0,1],
/// gaze object a class id, steering degrees, velocities m/s, yaw rate rad/s,
/// pedals in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Gsr,
    Hr,
    GazeX,
    GazeY,
    GazeObject,
    Steering,
    Vx,
    Vy,
    OmegaZ,
    Throttle,
    Brake,
}

impl Modality {
    pub const ALL: [Modality; 11] = [
        Modality::Gsr,
        Modality::Hr,
        Modality::GazeX,
        Modality::GazeY,
        Modality::GazeObject,
        Modality::Steering,
        Modality::Vx,
        Modality::Vy,
        Modality::OmegaZ,
        Modality::Throttle,
        Modality::Brake,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Gsr => "Gsr",
            Modality::Hr => "Hr",
            Modality::GazeX => "GazeX",
            Modality::GazeY => "GazeY",
            Modality::GazeObject => "GazeObject",
            Modality::Steering => "Steering",
            Modality::Vx => "Vx",
            Modality::Vy => "Vy",
            Modality::OmegaZ => "OmegaZ",
            Modality::Throttle => "Throttle",
            Modality::Brake => "Brake",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Modality::Gsr => "uS",
            Modality::Hr => "bpm",
            Modality::GazeX | Modality::GazeY => "normalized",
            Modality::GazeObject => "class_id",
            Modality::Steering => "deg",
            Modality::Vx | Modality::Vy => "m/s",
            Modality::OmegaZ => "rad/s",
            Modality::Throttle | Modality::Brake => "fraction",
        }
    }

    pub fn from_name(name: &str) -> Option<Modality> {
        Modality::ALL.iter().copied().find(|m| m.name() == name)
    }

    fn is_gaze_coordinate(self) -> bool {
        matches!(self, Modality::GazeX | Modality::GazeY)
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Semantic classes a gaze sample can land on. Ids are stable `0..14`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Pedestrian = 0,
    Car = 1,
    Building = 2,
    Road = 3,
    Sidewalk = 4,
    Tree = 5,
    TrafficLight = 6,
    TrafficSignal = 7,
    StopSign = 8,
    Sky = 9,
    Pole = 10,
    LaneMarking = 11,
    OtherMobility = 12,
    Other = 13,
}

impl ObjectClass {
    pub const COUNT: usize = 14;

    pub const ALL: [ObjectClass; 14] = [
        ObjectClass::Pedestrian,
        ObjectClass::Car,
        ObjectClass::Building,
        ObjectClass::Road,
        ObjectClass::Sidewalk,
        ObjectClass::Tree,
        ObjectClass::TrafficLight,
        ObjectClass::TrafficSignal,
        ObjectClass::StopSign,
        ObjectClass::Sky,
        ObjectClass::Pole,
        ObjectClass::LaneMarking,
        ObjectClass::OtherMobility,
        ObjectClass::Other,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<ObjectClass> {
        ObjectClass::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Car => "car",
            ObjectClass::Building => "building",
            ObjectClass::Road => "road",
            ObjectClass::Sidewalk => "sidewalk",
            ObjectClass::Tree => "tree",
            ObjectClass::TrafficLight => "traffic_light",
            ObjectClass::TrafficSignal => "traffic_signal",
            ObjectClass::StopSign => "stop_sign",
            ObjectClass::Sky => "sky",
            ObjectClass::Pole => "pole",
            ObjectClass::LaneMarking => "lane_marking",
            ObjectClass::OtherMobility => "other_mobility",
            ObjectClass::Other => "other",
        }
    }
}

/// Timestamped samples of one modality; `None` marks a recorded gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityStream {
    pub modality: Modality,
    pub samples: Vec<(f64, Option<f64>)>,
}

impl ModalityStream {
    pub fn new(modality: Modality, samples: Vec<(f64, Option<f64>)>) -> Self {
        Self { modality, samples }
    }

    /// Stream sampled at `rate` Hz from `t = 0`.
    pub fn regular(modality: Modality, rate: f64, values: Vec<Option<f64>>) -> Self {
        let samples = values.into_iter().enumerate().map(|(i, v)| (i as f64 / rate, v)).collect();
        Self { modality, samples }
    }
}

/// One participant × mobility × condition recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub participant_id: u32,
    pub domain: DomainTag,
    pub condition: Condition,
    /// Repetition index among sessions with the same participant, domain and condition.
    pub repetition: u32,
    pub duration: f64,
    pub seed: u64,
    pub streams: Vec<ModalityStream>,
}

/// Shortest admissible session: one 10 s window plus the 3 s label horizon.
pub const MIN_SESSION_DURATION: f64 = 13.0;

impl Session {
    pub fn stream(&self, modality: Modality) -> Option<&ModalityStream> {
        self.streams.iter().find(|s| s.modality == modality)
    }

    /// Stable identifier used for file names and ordering.
    pub fn key(&self) -> String {
        format!(
            "p{:03}_{}_{}_{}_r{}",
            self.participant_id,
            self.domain.as_str(),
            self.condition.aggressiveness.as_str(),
            if self.condition.proactive { "proactive" } else { "silent" },
            self.repetition
        )
    }

    pub fn validate(&self) -> Vec<String> {
        validate_session(self)
    }
}

/// Lists every broken session invariant; an empty list means the session is well formed.
pub fn validate_session(s: &Session) -> Vec<String> {
    let mut violations = Vec::new();
    if s.participant_id < 1 {
        violations.push("participant_id < 1".to_string());
    }
    if !(s.duration >= MIN_SESSION_DURATION) {
        violations.push("duration < 13 s".to_string());
    }
    for m in Modality::ALL {
        let count = s.streams.iter().filter(|st| st.modality == m).count();
        if count == 0 {
            violations.push(format!("missing modality: {m}"));
        } else if count > 1 {
            violations.push(format!("duplicate modality: {m}"));
        }
    }
    for st in &s.streams {
        let m = st.modality;
        if st.samples.is_empty() {
            violations.push(format!("{m}: no samples"));
            continue;
        }
        if st.samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            violations.push(format!("{m}: timestamps not strictly increasing"));
        }
        if st.samples.iter().any(|(t, _)| !t.is_finite()) {
            violations.push(format!("{m}: non-finite timestamp"));
        }
        if st.samples.iter().any(|(_, v)| matches!(v, Some(x) if !x.is_finite())) {
            violations.push(format!("{m}: non-finite value"));
        }
        if m.is_gaze_coordinate() && st.samples.iter().any(|(_, v)| matches!(v, Some(x) if !(0.0..=1.0).contains(x))) {
            violations.push(format!("{m}: gaze coordinate outside [0,1]"));
        }
        if m == Modality::GazeObject
            && st
                .samples
                .iter()
                .any(|(_, v)| matches!(v, Some(x) if x.fract() != 0.0 || *x < 0.0 || *x >= ObjectClass::COUNT as f64))
        {
            violations.push(format!("{m}: object id outside taxonomy"));
        }
    }
    violations
}
