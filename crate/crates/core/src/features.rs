//! Feature vectors and the binary skeleton raster built from one hand.

use alloc::vec::Vec;
use core::fmt;

use crate::pose::{HandSkeleton, HAND_KEYPOINTS, HAND_SLOT_NAMES};

/// Length of the raw coordinate feature vector: 21 keypoints times (x, y).
pub const RAW_FEATURE_LEN: usize = 2 * HAND_KEYPOINTS;
/// Length of the pairwise distance feature vector.
pub const DISTANCE_FEATURE_LEN: usize = 15;
/// Default raster side length in cells.
pub const RASTER_SIZE: usize = 128;
/// Default number of interior samples per skeleton edge.
pub const FILL_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureError {
    /// A keypoint required by the feature is undetected.
    MissingKeypoint { slot: &'static str },
    /// No keypoints detected at all.
    EmptyHand,
    /// The frame cannot contain the requested crop.
    FrameTooSmall {
        frame: (u32, u32),
        crop: u32,
    },
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::MissingKeypoint { slot } => {
                write!(f, "incomplete hand: {slot} undetected")
            }
            FeatureError::EmptyHand => f.write_str("no hand keypoints detected"),
            FeatureError::FrameTooSmall { frame, crop } => write!(
                f,
                "frame {}x{} smaller than crop size {crop}",
                frame.0, frame.1
            ),
        }
    }
}

/// Names of the 42 raw features: each slot's x then y, in canonical slot
/// order.
pub const RAW_FEATURE_NAMES: [&str; RAW_FEATURE_LEN] = [
    "radius_x",
    "radius_y",
    "trapezium_x",
    "trapezium_y",
    "thumb_metacarpal_x",
    "thumb_metacarpal_y",
    "thumb_proximal_x",
    "thumb_proximal_y",
    "thumb_phalange_x",
    "thumb_phalange_y",
    "index_carpal_x",
    "index_carpal_y",
    "index_metacarpal_x",
    "index_metacarpal_y",
    "index_proximal_x",
    "index_proximal_y",
    "index_phalange_x",
    "index_phalange_y",
    "middle_carpal_x",
    "middle_carpal_y",
    "middle_metacarpal_x",
    "middle_metacarpal_y",
    "middle_proximal_x",
    "middle_proximal_y",
    "middle_phalange_x",
    "middle_phalange_y",
    "ring_carpal_x",
    "ring_carpal_y",
    "ring_metacarpal_x",
    "ring_metacarpal_y",
    "ring_proximal_x",
    "ring_proximal_y",
    "ring_phalange_x",
    "ring_phalange_y",
    "little_carpal_x",
    "little_carpal_y",
    "little_metacarpal_x",
    "little_metacarpal_y",
    "little_proximal_x",
    "little_proximal_y",
    "little_phalange_x",
    "little_phalange_y",
];

/// The 15 distance pairs as canonical slot indices. Each finger is
/// represented by its fingertip (phalanx) keypoint; fingertips discriminate
/// handshapes best.
pub const DISTANCE_PAIRS: [(usize, usize); DISTANCE_FEATURE_LEN] = [
    (0, 4),   // radius - thumb
    (0, 8),   // radius - index
    (0, 12),  // radius - middle
    (0, 16),  // radius - ring
    (0, 20),  // radius - little
    (4, 8),   // thumb - index
    (4, 12),  // thumb - middle
    (4, 16),  // thumb - ring
    (4, 20),  // thumb - little
    (8, 12),  // index - middle
    (8, 16),  // index - ring
    (8, 20),  // index - little
    (12, 16), // middle - ring
    (12, 20), // middle - little
    (16, 20), // ring - little
];

/// Names of the 15 distance features, `<from>_<to>`.
pub const DISTANCE_FEATURE_NAMES: [&str; DISTANCE_FEATURE_LEN] = [
    "radius_thumb",
    "radius_index",
    "radius_middle",
    "radius_ring",
    "radius_little",
    "thumb_index",
    "thumb_middle",
    "thumb_ring",
    "thumb_little",
    "index_middle",
    "index_ring",
    "index_little",
    "middle_ring",
    "middle_little",
    "ring_little",
];

/// The 21 (x, y) coordinates in canonical slot order, no normalization.
/// Every keypoint must be detected.
pub fn raw_features(hand: &HandSkeleton) -> Result<[f64; RAW_FEATURE_LEN], FeatureError> {
    let mut out = [0.0; RAW_FEATURE_LEN];
    for slot in 0..HAND_KEYPOINTS {
        let p = hand.slot(slot).ok_or(FeatureError::MissingKeypoint {
            slot: HAND_SLOT_NAMES[slot],
        })?;
        out[2 * slot] = p.x;
        out[2 * slot + 1] = p.y;
    }
    Ok(out)
}

/// Euclidean distances in pixels for the fixed pair order of
/// [`DISTANCE_PAIRS`]. Only the wrist and the five fingertips need to be
/// detected.
pub fn distance_features(
    hand: &HandSkeleton,
) -> Result<[f64; DISTANCE_FEATURE_LEN], FeatureError> {
    let mut out = [0.0; DISTANCE_FEATURE_LEN];
    for (i, &(a, b)) in DISTANCE_PAIRS.iter().enumerate() {
        let pa = hand.slot(a).ok_or(FeatureError::MissingKeypoint {
            slot: HAND_SLOT_NAMES[a],
        })?;
        let pb = hand.slot(b).ok_or(FeatureError::MissingKeypoint {
            slot: HAND_SLOT_NAMES[b],
        })?;
        out[i] = libm::hypot(pb.x - pa.x, pb.y - pa.y);
    }
    Ok(out)
}

/// The 20 bone edges of the hand skeleton as canonical slot index pairs:
/// the wrist fans out to each finger's base, then each finger chains
/// outward.
pub const HAND_EDGES: [(usize, usize); 20] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (0, 5),
    (5, 6),
    (6, 7),
    (7, 8),
    (0, 9),
    (9, 10),
    (10, 11),
    (11, 12),
    (0, 13),
    (13, 14),
    (14, 15),
    (15, 16),
    (0, 17),
    (17, 18),
    (18, 19),
    (19, 20),
];

/// A square binary grid; `true` cells are skeleton strokes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryHandRaster {
    size: usize,
    cells: Vec<bool>,
}

impl BinaryHandRaster {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            cells: alloc::vec![false; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.size + col]
    }

    pub fn set(&mut self, col: usize, row: usize) {
        self.cells[row * self.size + col] = true;
    }

    pub fn set_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }
}

const RASTER_MARGIN: f64 = 4.0;

/// Min-max normalizes the detected keypoints into the raster (per axis,
/// with a 4-cell margin) and draws every bone edge whose endpoints were
/// both detected.
///
/// Each edge sets its two endpoint cells and samples `fill_steps` interior
/// points of the segment, rounding each to the nearest cell. The segment
/// is parameterized over `t`, not as `y = f(x)`, so vertical bones need no
/// special case.
pub fn render_skeleton(
    hand: &HandSkeleton,
    size: usize,
    fill_steps: usize,
) -> Result<BinaryHandRaster, FeatureError> {
    assert!(size >= 16, "raster too small for the margin");
    let detected: Vec<(usize, (f64, f64))> = hand
        .detected()
        .map(|(i, p)| (i, (p.x, p.y)))
        .collect();
    if detected.is_empty() {
        return Err(FeatureError::EmptyHand);
    }

    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(_, (x, y)) in &detected {
        min.0 = min.0.min(x);
        min.1 = min.1.min(y);
        max.0 = max.0.max(x);
        max.1 = max.1.max(y);
    }
    let lo = RASTER_MARGIN;
    let hi = (size - 1) as f64 - RASTER_MARGIN;
    let center = (size - 1) as f64 / 2.0;
    let map_axis = |v: f64, lo_v: f64, hi_v: f64| -> f64 {
        if hi_v > lo_v {
            lo + (v - lo_v) * (hi - lo) / (hi_v - lo_v)
        } else {
            center
        }
    };

    // Raster-space positions per slot, for detected slots only.
    let mut cells: [Option<(f64, f64)>; HAND_KEYPOINTS] = [None; HAND_KEYPOINTS];
    for &(slot, (x, y)) in &detected {
        cells[slot] = Some((map_axis(x, min.0, max.0), map_axis(y, min.1, max.1)));
    }

    let mut raster = BinaryHandRaster::new(size);
    let clamp_round = |v: f64| -> usize {
        let r = libm::round(v);
        let r = if r < 0.0 { 0.0 } else { r };
        let limit = (size - 1) as f64;
        (if r > limit { limit } else { r }) as usize
    };
    let mut plot = |p: (f64, f64)| {
        raster.set(clamp_round(p.0), clamp_round(p.1));
    };

    let mut drew_any = false;
    for &(a, b) in &HAND_EDGES {
        let (pa, pb) = match (cells[a], cells[b]) {
            (Some(pa), Some(pb)) => (pa, pb),
            _ => continue,
        };
        drew_any = true;
        plot(pa);
        plot(pb);
        for step in 1..=fill_steps {
            let t = step as f64 / (fill_steps + 1) as f64;
            plot((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
        }
    }
    if !drew_any {
        // No drawable edge; plot the detected points themselves.
        for &(slot, _) in &detected {
            plot(cells[slot].unwrap());
        }
    }
    Ok(raster)
}

/// Top-left corner of the `size` x `size` crop box centered on the
/// centroid, clamped into the frame and snapped down to a multiple of 32.
pub fn crop_origin(
    centroid: (f64, f64),
    frame_w: u32,
    frame_h: u32,
    size: u32,
) -> Result<(u32, u32), FeatureError> {
    if frame_w < size || frame_h < size {
        return Err(FeatureError::FrameTooSmall {
            frame: (frame_w, frame_h),
            crop: size,
        });
    }
    let clamp_snap = |c: f64, frame: u32| -> u32 {
        let raw = c - size as f64 / 2.0;
        let max = (frame - size) as f64;
        let clamped = if raw < 0.0 {
            0.0
        } else if raw > max {
            max
        } else {
            raw
        };
        (clamped as u32 / 32) * 32
    };
    Ok((clamp_snap(centroid.0, frame_w), clamp_snap(centroid.1, frame_h)))
}
