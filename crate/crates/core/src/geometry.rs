//! Closed-form orientation, location, and handedness from keypoints.

use alloc::vec::Vec;
use core::fmt;

use crate::pose::{
    body, Bone, Finger, HandSkeleton, Handedness, Location, Orientation, PoseFrame,
    BODY_LOCATIONS,
};
use crate::segmentation::hand_centroid;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryError {
    MissingKeypoint { slot: &'static str },
    /// Radius and middle metacarpal coincide; the direction is undefined.
    CoincidentPoints,
    /// The hand has no detected keypoints, so it has no centroid.
    NoCentroid,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::MissingKeypoint { slot } => {
                write!(f, "orientation undefined: {slot} undetected")
            }
            GeometryError::CoincidentPoints => {
                f.write_str("orientation undefined: radius and middle metacarpal coincide")
            }
            GeometryError::NoCentroid => f.write_str("no hand keypoints detected"),
        }
    }
}

/// Compass bins indexed counterclockwise from east in screen terms.
const SECTORS: [Orientation; 8] = [
    Orientation::East,
    Orientation::NorthEast,
    Orientation::North,
    Orientation::NorthWest,
    Orientation::West,
    Orientation::SouthWest,
    Orientation::South,
    Orientation::SouthEast,
];

/// Bins an image-space direction vector into one of the eight compass
/// orientations, or `None` for the zero vector.
///
/// `dy` grows downward, so it is negated before the angle is taken. Bins
/// are 45 degree sectors centered on the compass directions, half-open:
/// `[center - 22.5, center + 22.5)`.
pub fn orientation_of_vector(dx: f64, dy: f64) -> Option<Orientation> {
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    let degrees = libm::atan2(-dy, dx).to_degrees();
    let sector = libm::floor((degrees + 22.5) / 45.0) as i64;
    Some(SECTORS[sector.rem_euclid(8) as usize])
}

/// Extended finger orientation: the direction from the radius (wrist) to
/// the middle finger metacarpal.
pub fn finger_orientation(hand: &HandSkeleton) -> Result<Orientation, GeometryError> {
    let p = hand.radius().ok_or(GeometryError::MissingKeypoint { slot: "radius" })?;
    let q = hand
        .keypoint(Finger::Middle, Bone::Metacarpal)
        .ok_or(GeometryError::MissingKeypoint {
            slot: "middle_metacarpal",
        })?;
    orientation_of_vector(q.x - p.x, q.y - p.y).ok_or(GeometryError::CoincidentPoints)
}

/// Which body keypoints stand for each location, and how near a centroid
/// must be to count as "at" a body part.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationConfig {
    /// Fraction of the image diagonal; distances at or under it assign the
    /// body part, beyond it the hand is in neutral space.
    pub threshold_fraction: f64,
    /// Body keypoint indices per location, in tie-break priority order.
    /// Lateralized parts list both sides; the nearer one is used.
    pub body_part_slots: Vec<(Location, Vec<usize>)>,
}

impl Default for LocationConfig {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.10,
            body_part_slots: alloc::vec![
                (Location::Ears, alloc::vec![body::RIGHT_EAR, body::LEFT_EAR]),
                (Location::Eyes, alloc::vec![body::RIGHT_EYE, body::LEFT_EYE]),
                (Location::Nose, alloc::vec![body::NOSE]),
                (Location::Neck, alloc::vec![body::NECK]),
                (
                    Location::Shoulder,
                    alloc::vec![body::RIGHT_SHOULDER, body::LEFT_SHOULDER]
                ),
                // The body skeleton has no named abdomen point; mid-hip is
                // the closest stand-in.
                (Location::Abdominal, alloc::vec![body::MID_HIP]),
            ],
        }
    }
}

impl LocationConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err("threshold_fraction must lie in (0, 1)");
        }
        for loc in BODY_LOCATIONS {
            let ok = self
                .body_part_slots
                .iter()
                .any(|(l, slots)| *l == loc && !slots.is_empty());
            if !ok {
                return Err("every non-neutral location needs at least one body slot");
            }
        }
        Ok(())
    }
}

/// Distances in pixels from each configured body part to the two hand
/// centroids. `None` marks an unavailable measurement (body part or hand
/// undetected).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    /// One row per configured location; columns are `[right, left]`.
    pub rows: Vec<(Location, [Option<f64>; 2])>,
}

/// Minimum distance from a point to any detected keypoint among `slots`.
fn part_distance(frame: &PoseFrame, slots: &[usize], point: (f64, f64)) -> Option<f64> {
    slots
        .iter()
        .filter_map(|&i| frame.body[i])
        .map(|kp| libm::hypot(kp.x - point.0, kp.y - point.1))
        .min_by(|a, b| a.total_cmp(b))
}

/// Builds the body-part x hand distance matrix for one frame.
pub fn body_distances(frame: &PoseFrame, cfg: &LocationConfig) -> DistanceMatrix {
    let centroids = [
        hand_centroid(&frame.right_hand),
        hand_centroid(&frame.left_hand),
    ];
    let rows = cfg
        .body_part_slots
        .iter()
        .map(|(loc, slots)| {
            let mut cols = [None, None];
            for (c, centroid) in centroids.iter().enumerate() {
                cols[c] = centroid.and_then(|p| part_distance(frame, slots, p));
            }
            (*loc, cols)
        })
        .collect();
    DistanceMatrix { rows }
}

/// Outcome of the location rule for one hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocatedHand {
    pub location: Location,
    /// Nearest body part and its distance in pixels, when any was visible.
    pub nearest: Option<(Location, f64)>,
    /// True when no configured body part was detected; the label falls
    /// back to neutral and deserves a warning upstream.
    pub body_missing: bool,
}

/// Assigns the nearest body part within the threshold, or neutral.
///
/// Ties at equal distance resolve by the configured priority order
/// (head-first by default); the threshold comparison is inclusive.
pub fn hand_location(
    frame: &PoseFrame,
    hand: Handedness,
    cfg: &LocationConfig,
) -> Result<LocatedHand, GeometryError> {
    let centroid = hand_centroid(frame.hand(hand)).ok_or(GeometryError::NoCentroid)?;
    let mut nearest: Option<(Location, f64)> = None;
    for (loc, slots) in &cfg.body_part_slots {
        if let Some(d) = part_distance(frame, slots, centroid) {
            // Strictly-less keeps the earlier (higher priority) row on ties.
            if nearest.map_or(true, |(_, best)| d < best) {
                nearest = Some((*loc, d));
            }
        }
    }
    let threshold = cfg.threshold_fraction * frame.diagonal();
    match nearest {
        Some((loc, d)) if d <= threshold => Ok(LocatedHand {
            location: loc,
            nearest,
            body_missing: false,
        }),
        Some(_) => Ok(LocatedHand {
            location: Location::Neutral,
            nearest,
            body_missing: false,
        }),
        None => Ok(LocatedHand {
            location: Location::Neutral,
            nearest: None,
            body_missing: true,
        }),
    }
}

/// Mean of `distance / diagonal` per (location, hand) cell over the given
/// frames. An unavailable measurement (body part or hand not detected)
/// contributes exactly 1.0, the value the heatmap reserves for invisible
/// parts.
pub fn distance_heatmap(frames: &[PoseFrame], cfg: &LocationConfig) -> Vec<(Location, [f64; 2])> {
    let mut sums: Vec<(Location, [f64; 2])> = cfg
        .body_part_slots
        .iter()
        .map(|(loc, _)| (*loc, [0.0, 0.0]))
        .collect();
    if frames.is_empty() {
        return sums;
    }
    for frame in frames {
        let diag = frame.diagonal();
        let matrix = body_distances(frame, cfg);
        for (row, (_, cols)) in matrix.rows.iter().enumerate() {
            for c in 0..2 {
                sums[row].1[c] += match cols[c] {
                    Some(d) => d / diag,
                    None => 1.0,
                };
            }
        }
    }
    let n = frames.len() as f64;
    for (_, cols) in &mut sums {
        cols[0] /= n;
        cols[1] /= n;
    }
    sums
}

/// The handedness carried by a pose hand slot. The pose format names its
/// hand arrays by side, so this is the identity; it exists to make the
/// mapping explicit at call sites.
pub fn handedness_of(slot: Handedness) -> Handedness {
    slot
}
