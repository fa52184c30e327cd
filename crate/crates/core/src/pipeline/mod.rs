//! Sessions → labeled feature windows.

pub mod extract;
pub mod features;
pub mod sync;

pub use extract::{
    align_session, balance_downsample, extract_dataset, extract_features, extract_participant, label_window,
    region_entropy, window_slice, Extraction, PipelineConfig, Rejection, WindowData, WindowSpec,
};
pub use features::{
    entropy, gaze_region, hrv, object_distribution, scr_count, stat4, znormalize, ScrParams, Stat4, ZScore,
};
pub use sync::{fill_gaps, synchronize, AlignedFrameSeries};
