//! Labeled feature windows and their flat-table persistence.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::domain::DomainTag;
use crate::domain::ObjectClass;
use crate::error::{Error, Result};
use crate::layout::{FeatureLayout, ENTROPY_OBJECT, ENTROPY_REGION, N_FEATURES, P_OBJECTS};

/// One 10 s window reduced to the 52 features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    pub features: Vec<f64>,
    pub label: bool,
    pub participant_id: u32,
    pub domain: DomainTag,
    pub window_start: f64,
}

impl FeatureWindow {
    /// Checks the window invariants, returning the first violation.
    pub fn check(&self) -> Result<()> {
        if self.features.len() != N_FEATURES {
            return Err(Error::Dimension { expected: N_FEATURES, got: self.features.len() });
        }
        if let Some(i) = self.features.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("feature {i} is not finite")));
        }
        let p = &self.features[P_OBJECTS..P_OBJECTS + ObjectClass::COUNT];
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidInput("object proportion outside [0,1]".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("object proportions sum to {total}")));
        }
        if self.features[ENTROPY_REGION] < 0.0 || self.features[ENTROPY_OBJECT] < 0.0 {
            return Err(Error::InvalidInput("negative entropy".into()));
        }
        Ok(())
    }
}

/// Ordered collection of windows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub windows: Vec<FeatureWindow>,
}

impl Dataset {
    pub fn new(windows: Vec<FeatureWindow>) -> Self {
        Self { windows }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.windows.iter().filter(|w| w.label).count()
    }

    pub fn domain(&self, domain: DomainTag) -> Dataset {
        self.filter(|w| w.domain == domain)
    }

    pub fn filter(&self, mut keep: impl FnMut(&FeatureWindow) -> bool) -> Dataset {
        Dataset::new(self.windows.iter().filter(|w| keep(w)).cloned().collect())
    }

    /// Distinct participant ids in ascending order.
    pub fn participants(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.windows.iter().map(|w| w.participant_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.windows.iter().map(|w| w.features.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.windows.iter().map(|w| w.label).collect()
    }

    /// Writes the flat table. Lines in `preamble` are emitted as `# ` comments
    /// before the mandatory header row.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::WriterBuilder::new().from_writer(out);
        let mut header: Vec<&str> = FeatureLayout::get().names().collect();
        header.extend(["label", "participant_id", "domain", "window_start"]);
        w.write_record(&header)?;
        for win in &self.windows {
            let mut rec: Vec<String> = win.features.iter().map(|x| format!("{x:?}")).collect();
            rec.push(u8::from(win.label).to_string());
            rec.push(win.participant_id.to_string());
            rec.push(win.domain.as_str().to_string());
            rec.push(format!("{:?}", win.window_start));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Dataset> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let header = r.headers()?.clone();
        let layout = FeatureLayout::get();
        let expected: Vec<&str> = layout.names().chain(["label", "participant_id", "domain", "window_start"]).collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse("dataset header does not match the feature layout".into()));
        }
        let mut windows = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| Error::Parse(format!("row {row} column {i}: {e}")))
            };
            let features = (0..N_FEATURES).map(num).collect::<Result<Vec<_>>>()?;
            let label = match &rec[N_FEATURES] {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse(format!("row {row}: bad label {other:?}"))),
            };
            let participant_id =
                rec[N_FEATURES + 1].parse().map_err(|e| Error::Parse(format!("row {row}: participant_id: {e}")))?;
            let domain = rec[N_FEATURES + 2].parse()?;
            let window_start = num(N_FEATURES + 3)?;
            windows.push(FeatureWindow { features, label, participant_id, domain, window_start });
        }
        Ok(Dataset::new(windows))
    }
}
