//! The fixed 52-slot feature layout.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::domain::ObjectClass;
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 52;

pub const GSR_MEAN: usize = 0;
pub const SCR_COUNT: usize = 4;
pub const HR_MEAN: usize = 5;
pub const HRV: usize = 9;
pub const GAZE_X_MEAN: usize = 10;
pub const GAZE_Y_MEAN: usize = 14;
pub const ENTROPY_REGION: usize = 18;
pub const P_OBJECTS: usize = 19;
pub const ENTROPY_OBJECT: usize = 33;
pub const STEERING_MEAN: usize = 34;
pub const VX_MEAN: usize = 38;
pub const VY_MEAN: usize = 42;
pub const OMEGA_Z_MEAN: usize = 46;
pub const AGGRESSIVENESS: usize = 50;
pub const PROACTIVE: usize = 51;

/// Offsets inside a mean/std/min/max block.
pub const MEAN: usize = 0;
pub const STD: usize = 1;
pub const MIN: usize = 2;
pub const MAX: usize = 3;

/// Modal grouping of the slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Gsr,
    Hr,
    EyeGaze,
    GazeSemantics,
    Maneuver,
    CanBus,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Gsr,
        FeatureGroup::Hr,
        FeatureGroup::EyeGaze,
        FeatureGroup::GazeSemantics,
        FeatureGroup::Maneuver,
        FeatureGroup::CanBus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Gsr => "gsr",
            FeatureGroup::Hr => "hr",
            FeatureGroup::EyeGaze => "eye_gaze",
            FeatureGroup::GazeSemantics => "gaze_semantics",
            FeatureGroup::Maneuver => "maneuver",
            FeatureGroup::CanBus => "can_bus",
        }
    }
}

/// One named slot of the layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSlot {
    pub index: usize,
    pub name: String,
    pub unit: &'static str,
    pub group: FeatureGroup,
}

/// Ordered list of the 52 slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    slots: Vec<FeatureSlot>,
}

const STAT_SUFFIXES: [&str; 4] = ["mean", "std", "min", "max"];

impl FeatureLayout {
    fn build() -> Self {
        let mut slots: Vec<FeatureSlot> = Vec::with_capacity(N_FEATURES);
        let mut push = |name: String, unit: &'static str, group: FeatureGroup| {
            let index = slots.len();
            slots.push(FeatureSlot { index, name, unit, group });
        };
        let stat4 = |push: &mut dyn FnMut(String, &'static str, FeatureGroup),
                     prefix: &str,
                     unit: &'static str,
                     group: FeatureGroup| {
            for s in STAT_SUFFIXES {
                push(format!("{prefix}_{s}"), unit, group);
            }
        };

        stat4(&mut push, "gsr", "z", FeatureGroup::Gsr);
        push("scr_count".into(), "count", FeatureGroup::Gsr);
        stat4(&mut push, "hr", "z", FeatureGroup::Hr);
        push("hrv".into(), "s", FeatureGroup::Hr);
        stat4(&mut push, "gaze_x", "normalized", FeatureGroup::EyeGaze);
        stat4(&mut push, "gaze_y", "normalized", FeatureGroup::EyeGaze);
        push("entropy_region".into(), "nats", FeatureGroup::EyeGaze);
        for class in ObjectClass::ALL {
            push(format!("p_{}", class.name()), "proportion", FeatureGroup::GazeSemantics);
        }
        push("entropy_object".into(), "nats", FeatureGroup::GazeSemantics);
        stat4(&mut push, "steering", "z", FeatureGroup::Maneuver);
        stat4(&mut push, "vx", "z", FeatureGroup::CanBus);
        stat4(&mut push, "vy", "z", FeatureGroup::CanBus);
        stat4(&mut push, "omega_z", "z", FeatureGroup::CanBus);
        push("aggressiveness".into(), "flag", FeatureGroup::CanBus);
        push("proactive".into(), "flag", FeatureGroup::CanBus);
        debug_assert_eq!(slots.len(), N_FEATURES);
        Self { slots }
    }

    /// The process-wide layout.
    pub fn get() -> &'static FeatureLayout {
        static LAYOUT: OnceLock<FeatureLayout> = OnceLock::new();
        LAYOUT.get_or_init(FeatureLayout::build)
    }

    pub fn slots(&self) -> &[FeatureSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.slots.get(index).map(|s| s.name.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.name.as_str())
    }

    pub fn group_count(&self, group: FeatureGroup) -> usize {
        self.slots.iter().filter(|s| s.group == group).count()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.slots
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.index)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Machine-readable manifest: `index,name,unit,group` rows after a header.
    pub fn manifest_csv(&self) -> String {
        let mut out = String::from("index,name,unit,group\n");
        for s in &self.slots {
            out.push_str(&format!("{},{},{},{}\n", s.index, s.name, s.unit, s.group.name()));
        }
        out
    }

    /// Parses a manifest and checks it against this layout.
    pub fn check_manifest(&self, text: &str) -> Result<()> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        match lines.next() {
            Some("index,name,unit,group") => {}
            other => return Err(Error::Parse(format!("bad manifest header {other:?}"))),
        }
        let mut n = 0;
        for (row, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            let slot = self.slots.get(row).ok_or_else(|| Error::Parse(format!("manifest has extra row {row}")))?;
            let expected =
                [slot.index.to_string(), slot.name.clone(), slot.unit.to_string(), slot.group.name().to_string()];
            if cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(Error::Parse(format!("manifest row {row} mismatch: {line}")));
            }
            n += 1;
        }
        if n != self.len() {
            return Err(Error::Parse(format!("manifest has {n} rows, expected {}", self.len())));
        }
        Ok(())
    }
}

/// Index of a named slot.
pub fn feature_index(name: &str) -> Result<usize> {
    FeatureLayout::get().index_of(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_examples() {
        assert_eq!(feature_index("gsr_mean").unwrap(), 0);
        assert_eq!(feature_index("proactive").unwrap(), 51);
        match feature_index("hr_banana") {
            Err(Error::UnknownFeature(n)) => assert_eq!(n, "hr_banana"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bijection_and_unique_names() {
        let layout = FeatureLayout::get();
        assert_eq!(layout.len(), N_FEATURES);
        for (i, name) in layout.names().enumerate() {
            assert_eq!(feature_index(name).unwrap(), i);
        }
        let mut names: Vec<_> = layout.names().collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), N_FEATURES);
    }

    #[test]
    fn group_sizes() {
        let layout = FeatureLayout::get();
        let counts: Vec<usize> = FeatureGroup::ALL.iter().map(|&g| layout.group_count(g)).collect();
        assert_eq!(counts, vec![5, 5, 9, 15, 4, 14]);
    }

    #[test]
    fn constants_agree_with_names() {
        let pairs = [
            (GSR_MEAN, "gsr_mean"),
            (SCR_COUNT, "scr_count"),
            (HR_MEAN, "hr_mean"),
            (HRV, "hrv"),
            (GAZE_X_MEAN, "gaze_x_mean"),
            (GAZE_Y_MEAN, "gaze_y_mean"),
            (ENTROPY_REGION, "entropy_region"),
            (P_OBJECTS, "p_pedestrian"),
            (ENTROPY_OBJECT, "entropy_object"),
            (STEERING_MEAN, "steering_mean"),
            (VX_MEAN, "vx_mean"),
            (VY_MEAN, "vy_mean"),
            (OMEGA_Z_MEAN, "omega_z_mean"),
            (AGGRESSIVENESS, "aggressiveness"),
            (PROACTIVE, "proactive"),
        ];
        for (idx, name) in pairs {
            assert_eq!(feature_index(name).unwrap(), idx, "{name}");
        }
        assert_eq!(feature_index("p_other").unwrap(), P_OBJECTS + 13);
    }

    #[test]
    fn manifest_round_trips() {
        let layout = FeatureLayout::get();
        let text = layout.manifest_csv();
        layout.check_manifest(&text).unwrap();
        let broken = text.replace("hr_max", "hr_maxx");
        assert!(layout.check_manifest(&broken).is_err());
    }
}
