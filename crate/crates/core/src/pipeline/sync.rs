//! Resampling onto a common clock and short-gap repair.

use crate::domain::{Modality, ModalityStream};
use crate::error::{invalid, Result};

/// Streams resampled onto one clock: frame `j` sits at `t0 + j / rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFrameSeries {
    pub rate: f64,
    pub t0: f64,
    pub columns: Vec<(Modality, Vec<Option<f64>>)>,
}

impl AlignedFrameSeries {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, frame: usize) -> f64 {
        self.t0 + frame as f64 / self.rate
    }

    pub fn column(&self, modality: Modality) -> Option<&[Option<f64>]> {
        self.columns.iter().find(|(m, _)| *m == modality).map(|(_, v)| v.as_slice())
    }

    pub fn column_mut(&mut self, modality: Modality) -> Option<&mut Vec<Option<f64>>> {
        self.columns.iter_mut().find(|(m, _)| *m == modality).map(|(_, v)| v)
    }

    /// First frame with `time(frame) >= t`.
    pub fn frame_at_or_after(&self, t: f64) -> usize {
        let x = (t - self.t0) * self.rate;
        let j = (x - 1e-9).ceil();
        if j <= 0.0 {
            0
        } else {
            j as usize
        }
    }
}

/// Nearest-neighbour resampling of every stream onto a shared `rate` Hz grid
/// spanning all streams. Equidistant ties take the earlier sample; gaps stay gaps.
pub fn synchronize(streams: &[ModalityStream], rate: f64) -> Result<AlignedFrameSeries> {
    if streams.is_empty() {
        return Err(invalid("cannot synchronize an empty stream set"));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(invalid(format!("sync rate must be positive, got {rate}")));
    }
    if let Some(s) = streams.iter().find(|s| s.samples.is_empty()) {
        return Err(invalid(format!("stream {} has no samples", s.modality)));
    }
    let t0 = streams.iter().map(|s| s.samples[0].0).fold(f64::INFINITY, f64::min);
    let t_end = streams.iter().map(|s| s.samples[s.samples.len() - 1].0).fold(f64::NEG_INFINITY, f64::max);
    let n = ((t_end - t0) * rate + 1e-9).floor() as usize + 1;

    let columns = streams
        .iter()
        .map(|s| {
            let samples = &s.samples;
            let mut k = 0usize;
            let values = (0..n)
                .map(|j| {
                    let t = t0 + j as f64 / rate;
                    while k + 1 < samples.len() && samples[k + 1].0 <= t {
                        k += 1;
                    }
                    // samples[k] is the last sample at or before t (or the first sample).
                    let pick = if k + 1 < samples.len() && samples[k].0 <= t {
                        let before = t - samples[k].0;
                        let after = samples[k + 1].0 - t;
                        if after < before {
                            k + 1
                        } else {
                            k
                        }
                    } else {
                        k
                    };
                    samples[pick].1
                })
                .collect();
            (s.modality, values)
        })
        .collect();
    Ok(AlignedFrameSeries { rate, t0, columns })
}

/// Replaces null runs lasting at most `max_gap` seconds with the nearest
/// non-null neighbour (equidistant → earlier). Longer runs stay null.
pub fn fill_gaps(series: &AlignedFrameSeries, max_gap: f64) -> Result<AlignedFrameSeries> {
    let mut out = series.clone();
    for (m, col) in &mut out.columns {
        if !col.is_empty() && col.iter().all(Option::is_none) {
            return Err(invalid(format!("column {m} is entirely null")));
        }
        fill_column(col, series.rate, max_gap);
    }
    Ok(out)
}

fn fill_column(col: &mut [Option<f64>], rate: f64, max_gap: f64) {
    let n = col.len();
    let mut i = 0;
    while i < n {
        if col[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && col[i].is_none() {
            i += 1;
        }
        let end = i; // exclusive
        let run_seconds = (end - start) as f64 / rate;
        if run_seconds > max_gap + 1e-12 {
            continue;
        }
        let left = start.checked_sub(1).map(|j| (j, col[j].unwrap()));
        let right = (end < n).then(|| (end, col[end].unwrap()));
        for (j, slot) in col.iter_mut().enumerate().take(end).skip(start) {
            *slot = match (left, right) {
                (Some((l, lv)), Some((r, rv))) => Some(if j - l <= r - j { lv } else { rv }),
                (Some((_, lv)), None) => Some(lv),
                (None, Some((_, rv))) => Some(rv),
                (None, None) => None,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_resample() {
        let s = ModalityStream::regular(Modality::Hr, 10.0, (0..50).map(|i| Some(i as f64)).collect());
        let a = synchronize(std::slice::from_ref(&s), 10.0).unwrap();
        let col = a.column(Modality::Hr).unwrap();
        assert_eq!(col, s.samples.iter().map(|x| x.1).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn upsample_with_tie_to_earlier() {
        let s = ModalityStream::new(Modality::Gsr, vec![(0.0, Some(1.0)), (1.0, Some(3.0))]);
        let a = synchronize(&[s], 2.0).unwrap();
        assert_eq!(a.column(Modality::Gsr).unwrap(), &[Some(1.0), Some(1.0), Some(3.0)]);
        assert_eq!((a.time(0), a.time(1), a.time(2)), (0.0, 0.5, 1.0));
    }

    #[test]
    fn nulls_survive_synchronization() {
        let s = ModalityStream::regular(Modality::GazeX, 10.0, vec![Some(0.1), None, Some(0.3)]);
        let a = synchronize(&[s], 10.0).unwrap();
        assert_eq!(a.column(Modality::GazeX).unwrap(), &[Some(0.1), None, Some(0.3)]);
    }

    #[test]
    fn downsample_mixed_rates() {
        let fast = ModalityStream::regular(Modality::GazeX, 60.0, (0..=60).map(|i| Some(i as f64)).collect());
        let slow = ModalityStream::regular(Modality::Hr, 10.0, (0..=10).map(|i| Some(i as f64)).collect());
        let a = synchronize(&[fast, slow], 20.0).unwrap();
        assert_eq!(a.len(), 21);
        let gx = a.column(Modality::GazeX).unwrap();
        assert_eq!(gx[1], Some(3.0));
        let hr = a.column(Modality::Hr).unwrap();
        // 0.05 s is equidistant from 0.0 and 0.1
        assert_eq!(&hr[..4], &[Some(0.0), Some(0.0), Some(1.0), Some(1.0)]);
    }

    #[test]
    fn empty_stream_set_is_an_error() {
        assert!(synchronize(&[], 10.0).is_err());
    }

    fn series(values: Vec<Option<f64>>, rate: f64) -> AlignedFrameSeries {
        AlignedFrameSeries { rate, t0: 0.0, columns: vec![(Modality::GazeX, values)] }
    }

    #[test]
    fn fill_examples() {
        let s = series(vec![Some(1.0), None, Some(3.0)], 10.0);
        let f = fill_gaps(&s, 0.5).unwrap();
        assert_eq!(f.column(Modality::GazeX).unwrap(), &[Some(1.0), Some(1.0), Some(3.0)]);

        let s = series(vec![Some(1.0), Some(2.0)], 10.0);
        assert_eq!(fill_gaps(&s, 0.5).unwrap(), s);

        let mut v = vec![Some(1.0)];
        v.extend(std::iter::repeat_n(None, 20));
        v.push(Some(2.0));
        let s = series(v.clone(), 10.0);
        assert_eq!(fill_gaps(&s, 0.5).unwrap(), s);

        assert!(fill_gaps(&series(vec![None, None], 10.0), 0.5).is_err());
    }

    #[test]
    fn fill_uses_nearest_side() {
        let s = series(vec![Some(1.0), None, None, None, None, Some(9.0)], 10.0);
        let f = fill_gaps(&s, 0.5).unwrap();
        assert_eq!(
            f.column(Modality::GazeX).unwrap(),
            &[Some(1.0), Some(1.0), Some(1.0), Some(9.0), Some(9.0), Some(9.0)]
        );
        let s = series(vec![None, None, Some(4.0), None], 10.0);
        let f = fill_gaps(&s, 0.5).unwrap();
        assert_eq!(f.column(Modality::GazeX).unwrap(), &[Some(4.0); 4]);
    }
}
