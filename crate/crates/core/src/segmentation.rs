//! Separates sign frames from resting/epenthesis frames.
//!
//! Hand speed is measured per sliding window as the largest side of the
//! minimum-area rectangle enclosing the window's hand centroids. Videos are
//! trimmed to the span between the first and last interior speed maximum;
//! when no maximum exists the whole video is kept, since dropping frames is
//! worse than keeping rest frames for later manual verification.

use alloc::vec::Vec;
use core::fmt;

use crate::pose::{HandSkeleton, Handedness, PoseFrame};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentationError {
    /// A bounding rectangle of zero points is undefined.
    EmptyPointSet,
}

impl fmt::Display for SegmentationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentationError::EmptyPointSet => {
                f.write_str("cannot bound an empty point set")
            }
        }
    }
}

/// Arithmetic mean of the detected keypoints of one hand, or `None` when
/// nothing was detected.
pub fn hand_centroid(hand: &HandSkeleton) -> Option<(f64, f64)> {
    let mut sum = (0.0, 0.0);
    let mut n = 0usize;
    for (_, p) in hand.detected() {
        sum.0 += p.x;
        sum.1 += p.y;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some((sum.0 / n as f64, sum.1 / n as f64))
    }
}

/// Per-frame centroid positions of one hand across a video. Frames where
/// the hand was not detected are marked absent.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidTrack {
    pub hand: Handedness,
    pub centroids: Vec<Option<(f64, f64)>>,
}

impl CentroidTrack {
    pub fn from_frames(frames: &[PoseFrame], hand: Handedness) -> Self {
        let centroids = frames.iter().map(|f| hand_centroid(f.hand(hand))).collect();
        Self { hand, centroids }
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// Minimum-area rectangle enclosing a point set.
///
/// `angle` is the direction of the `width` side in radians; `width` and
/// `height` carry no order guarantee, use [`MinAreaRect::largest_side`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinAreaRect {
    pub center: (f64, f64),
    pub width: f64,
    pub height: f64,
    pub angle: f64,
}

impl MinAreaRect {
    pub fn largest_side(&self) -> f64 {
        if self.width >= self.height {
            self.width
        } else {
            self.height
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Convex hull by monotone chain, counterclockwise, collinear points
/// dropped. Degenerate inputs yield hulls of one or two points.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }

    fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    }

    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    // A fully collinear set collapses each chain to its endpoints.
    if hull.len() < 2 {
        hull = alloc::vec![pts[0], pts[pts.len() - 1]];
        hull.dedup();
    }
    hull
}

/// Minimum-area enclosing rectangle via rotating calipers: the optimum is
/// aligned with some edge of the convex hull, so each hull edge direction
/// is tried in turn.
pub fn minimum_bounding_rectangle(
    points: &[(f64, f64)],
) -> Result<MinAreaRect, SegmentationError> {
    if points.is_empty() {
        return Err(SegmentationError::EmptyPointSet);
    }
    let hull = convex_hull(points);
    if hull.len() == 1 {
        return Ok(MinAreaRect {
            center: hull[0],
            width: 0.0,
            height: 0.0,
            angle: 0.0,
        });
    }
    if hull.len() == 2 {
        let (a, b) = (hull[0], hull[1]);
        let dx = b.0 - a.0;
        let dy = b.1 - a.1;
        return Ok(MinAreaRect {
            center: ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0),
            width: libm::hypot(dx, dy),
            height: 0.0,
            angle: libm::atan2(dy, dx),
        });
    }

    let mut best: Option<MinAreaRect> = None;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let angle = libm::atan2(b.1 - a.1, b.0 - a.0);
        let (c, s) = (libm::cos(angle), libm::sin(angle));

        let mut min_u = f64::INFINITY;
        let mut max_u = f64::NEG_INFINITY;
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        for &(x, y) in &hull {
            // Coordinates in the frame aligned with the edge.
            let u = x * c + y * s;
            let v = -x * s + y * c;
            min_u = min_u.min(u);
            max_u = max_u.max(u);
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
        let width = max_u - min_u;
        let height = max_v - min_v;
        let area = width * height;
        if best.map_or(true, |r| area < r.area()) {
            let cu = (min_u + max_u) / 2.0;
            let cv = (min_v + max_v) / 2.0;
            best = Some(MinAreaRect {
                center: (cu * c - cv * s, cu * s + cv * c),
                width,
                height,
                angle,
            });
        }
    }
    Ok(best.expect("hull has at least one edge"))
}

/// Speeds of one hand, one value per sliding window, aligned to each
/// window's first frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedSeries {
    pub window: usize,
    pub speeds: Vec<f64>,
}

impl SpeedSeries {
    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.speeds.iter().sum()
    }
}

/// Distance travelled per window: the largest side of the minimum-area
/// rectangle over the window's centroids. Windows with fewer than two
/// present centroids have speed 0.
pub fn window_speed(track: &CentroidTrack, window: usize) -> SpeedSeries {
    assert!(window >= 1, "window must be at least 1 frame");
    let n = track.centroids.len();
    let count = if n >= window { n - window + 1 } else { 0 };
    let mut speeds = Vec::with_capacity(count);
    for start in 0..count {
        let pts: Vec<(f64, f64)> = track.centroids[start..start + window]
            .iter()
            .filter_map(|c| *c)
            .collect();
        let speed = match minimum_bounding_rectangle(&pts) {
            Ok(rect) => rect.largest_side(),
            Err(_) => 0.0,
        };
        speeds.push(speed);
    }
    SpeedSeries { window, speeds }
}

/// Indices of interior speed maxima: the discrete slope changes from
/// positive to non-positive, so plateaus count once, at their first index.
pub fn find_speed_maxima(speeds: &[f64]) -> Vec<usize> {
    let mut maxima = Vec::new();
    for t in 1..speeds.len().saturating_sub(1) {
        let before = speeds[t] - speeds[t - 1];
        let after = speeds[t + 1] - speeds[t];
        if before > 0.0 && after <= 0.0 {
            maxima.push(t);
        }
    }
    maxima
}

/// First and last speed maximum, inclusive. Series shorter than 3 or
/// without an interior maximum fall back to the full range. `None` only
/// for an empty series.
pub fn find_sign_boundaries(speeds: &[f64]) -> Option<(usize, usize)> {
    if speeds.is_empty() {
        return None;
    }
    let maxima = find_speed_maxima(speeds);
    match (maxima.first(), maxima.last()) {
        (Some(&first), Some(&last)) => Some((first, last)),
        _ => Some((0, speeds.len() - 1)),
    }
}

/// Frame range kept by segmentation, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentBounds {
    pub first_frame: usize,
    pub last_frame: usize,
    /// True when no interior maximum was found and the full video is kept.
    pub fallback: bool,
    pub dominant_hand: Handedness,
}

/// Computes the kept frame range from the dominant hand's speed series.
///
/// The dominant hand is the one with the larger summed speed (ties go to
/// the right hand). Window speeds align to each window's first frame, so a
/// boundary window pair `(s, e)` keeps frames `s ..= e + window - 1`.
pub fn segment_bounds(frames: &[PoseFrame], window: usize) -> SegmentBounds {
    let full = |fallback: bool, hand: Handedness| SegmentBounds {
        first_frame: 0,
        last_frame: frames.len().saturating_sub(1),
        fallback,
        dominant_hand: hand,
    };
    if frames.len() < window.max(3) {
        return full(true, Handedness::Right);
    }
    let right = window_speed(&CentroidTrack::from_frames(frames, Handedness::Right), window);
    let left = window_speed(&CentroidTrack::from_frames(frames, Handedness::Left), window);
    let (dominant, series) = if left.total() > right.total() {
        (Handedness::Left, left)
    } else {
        (Handedness::Right, right)
    };
    let maxima = find_speed_maxima(&series.speeds);
    match (maxima.first(), maxima.last()) {
        (Some(&first), Some(&last)) => SegmentBounds {
            first_frame: first,
            last_frame: (last + window - 1).min(frames.len() - 1),
            fallback: false,
            dominant_hand: dominant,
        },
        _ => full(true, dominant),
    }
}

/// Keeps only the frames inside the segment bounds.
pub fn segment_video(frames: Vec<PoseFrame>, window: usize) -> Vec<PoseFrame> {
    let bounds = segment_bounds(&frames, window);
    frames
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i >= bounds.first_frame && *i <= bounds.last_frame)
        .map(|(_, f)| f)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{Keypoint, HAND_KEYPOINTS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hand_at_points(points: &[(f64, f64)]) -> HandSkeleton {
        let mut hand = HandSkeleton::default();
        for (i, &(x, y)) in points.iter().enumerate() {
            hand.set_slot(i, Some(Keypoint::new(x, y, 1.0)));
        }
        hand
    }

    fn frame_with_right_centroid(x: f64, y: f64, index: usize) -> PoseFrame {
        let mut frame = PoseFrame::empty("v".into(), index, 512, 512);
        frame.right_hand = hand_at_points(&[(x, y)]);
        frame
    }

    /// Exhaustive angle sweep: the minimum over axis-aligned bounding boxes
    /// at 0.05 degree steps, independent of the calipers implementation.
    pub(crate) fn sweep_min_area(points: &[(f64, f64)], steps: usize) -> f64 {
        let mut best = f64::INFINITY;
        for step in 0..steps {
            let theta = core::f64::consts::PI * step as f64 / steps as f64;
            let (c, s) = (libm::cos(theta), libm::sin(theta));
            let mut min_u = f64::INFINITY;
            let mut max_u = f64::NEG_INFINITY;
            let mut min_v = f64::INFINITY;
            let mut max_v = f64::NEG_INFINITY;
            for &(x, y) in points {
                let u = x * c + y * s;
                let v = -x * s + y * c;
                min_u = min_u.min(u);
                max_u = max_u.max(u);
                min_v = min_v.min(v);
                max_v = max_v.max(v);
            }
            best = best.min((max_u - min_u) * (max_v - min_v));
        }
        best
    }

    #[test]
    fn centroid_constant_points() {
        let hand = hand_at_points(&[(10.0, 20.0); HAND_KEYPOINTS]);
        assert_eq!(hand_centroid(&hand), Some((10.0, 20.0)));
    }

    #[test]
    fn centroid_square_symmetry() {
        let hand = hand_at_points(&[(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)]);
        assert_eq!(hand_centroid(&hand), Some((1.0, 1.0)));
    }

    #[test]
    fn centroid_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(f64, f64)> = (0..HAND_KEYPOINTS)
            .map(|_| (rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
            .collect();
        let hand = hand_at_points(&pts);
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(x, y) in &pts {
            sx += x;
            sy += y;
        }
        let expected = (sx / 21.0, sy / 21.0);
        let got = hand_centroid(&hand).unwrap();
        assert!((got.0 - expected.0).abs() < 1e-9);
        assert!((got.1 - expected.1).abs() < 1e-9);
    }

    #[test]
    fn centroid_absent_when_nothing_detected() {
        assert_eq!(hand_centroid(&HandSkeleton::default()), None);
    }

    #[test]
    fn mbr_degenerate_cases() {
        assert_eq!(
            minimum_bounding_rectangle(&[]),
            Err(SegmentationError::EmptyPointSet)
        );
        let point = minimum_bounding_rectangle(&[(3.0, 4.0)]).unwrap();
        assert_eq!(point.width, 0.0);
        assert_eq!(point.height, 0.0);

        let segment = minimum_bounding_rectangle(&[(0.0, 0.0), (3.0, 4.0)]).unwrap();
        assert!((segment.largest_side() - 5.0).abs() < 1e-12);
        assert_eq!(segment.width.min(segment.height), 0.0);

        let collinear =
            minimum_bounding_rectangle(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.5, 0.5)]).unwrap();
        assert!((collinear.largest_side() - libm::sqrt(8.0)).abs() < 1e-9);
        assert!(collinear.width.min(collinear.height) < 1e-9);
    }

    #[test]
    fn mbr_matches_angle_sweep_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let n = rng.gen_range(3..50);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)))
                .collect();
            let rect = minimum_bounding_rectangle(&pts).unwrap();
            let oracle = sweep_min_area(&pts, 3600);
            assert!(
                rect.area() <= oracle + 1e-6,
                "calipers area {} exceeds sweep minimum {}",
                rect.area(),
                oracle
            );
        }
    }

    #[test]
    fn mbr_contains_all_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)))
            .collect();
        let rect = minimum_bounding_rectangle(&pts).unwrap();
        let (c, s) = (libm::cos(rect.angle), libm::sin(rect.angle));
        for &(x, y) in &pts {
            let dx = x - rect.center.0;
            let dy = y - rect.center.1;
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            assert!(u.abs() <= rect.width / 2.0 + 1e-9);
            assert!(v.abs() <= rect.height / 2.0 + 1e-9);
        }
    }

    #[test]
    fn speed_stationary_track() {
        let track = CentroidTrack {
            hand: Handedness::Right,
            centroids: alloc::vec![Some((5.0, 5.0)); 10],
        };
        let series = window_speed(&track, 3);
        assert_eq!(series.len(), 8);
        assert!(series.speeds.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn speed_collinear_extent() {
        let track = CentroidTrack {
            hand: Handedness::Right,
            centroids: alloc::vec![Some((0.0, 0.0)), Some((10.0, 0.0)), Some((20.0, 0.0))],
        };
        let series = window_speed(&track, 3);
        assert_eq!(series.len(), 1);
        assert!((series.speeds[0] - 20.0).abs() < 1e-9);
    }

    #[test]
    fn speed_short_track_empty_series() {
        let track = CentroidTrack {
            hand: Handedness::Right,
            centroids: alloc::vec![Some((0.0, 0.0)), Some((1.0, 0.0))],
        };
        assert!(window_speed(&track, 3).is_empty());
    }

    #[test]
    fn speed_matches_per_window_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let centroids: Vec<Option<(f64, f64)>> = (0..10)
            .map(|_| Some((rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0))))
            .collect();
        let track = CentroidTrack {
            hand: Handedness::Right,
            centroids: centroids.clone(),
        };
        let series = window_speed(&track, 3);
        assert_eq!(series.len(), 8);
        for (start, speed) in series.speeds.iter().enumerate() {
            let pts: Vec<(f64, f64)> = centroids[start..start + 3]
                .iter()
                .map(|c| c.unwrap())
                .collect();
            // Largest side of the sweep-optimal box at the optimal angle.
            let mut best_side = f64::INFINITY;
            let mut best_area = f64::INFINITY;
            for step in 0..3600 {
                let theta = core::f64::consts::PI * step as f64 / 3600.0;
                let (c, s) = (libm::cos(theta), libm::sin(theta));
                let us: Vec<f64> = pts.iter().map(|p| p.0 * c + p.1 * s).collect();
                let vs: Vec<f64> = pts.iter().map(|p| -p.0 * s + p.1 * c).collect();
                let du = us.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - us.iter().cloned().fold(f64::INFINITY, f64::min);
                let dv = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - vs.iter().cloned().fold(f64::INFINITY, f64::min);
                if du * dv < best_area {
                    best_area = du * dv;
                    best_side = du.max(dv);
                }
            }
            // The sweep is a grid approximation; agree to a loose tolerance.
            assert!(
                (speed - best_side).abs() < 1e-2,
                "window {start}: {speed} vs oracle {best_side}"
            );
        }
    }

    #[test]
    fn boundaries_double_peak() {
        let speeds = [0.0, 5.0, 9.0, 5.0, 2.0, 2.0, 5.0, 9.0, 5.0, 0.0];
        assert_eq!(find_speed_maxima(&speeds), alloc::vec![2, 7]);
        assert_eq!(find_sign_boundaries(&speeds), Some((2, 7)));
    }

    #[test]
    fn boundaries_monotone_full_range() {
        assert_eq!(find_sign_boundaries(&[1.0, 2.0, 3.0, 4.0]), Some((0, 3)));
    }

    #[test]
    fn boundaries_single_peak() {
        assert_eq!(find_sign_boundaries(&[0.0, 9.0, 0.0]), Some((1, 1)));
    }

    #[test]
    fn boundaries_plateau_counts_once() {
        assert_eq!(find_speed_maxima(&[0.0, 5.0, 5.0, 5.0, 0.0]), alloc::vec![1]);
    }

    #[test]
    fn boundaries_short_or_empty() {
        assert_eq!(find_sign_boundaries(&[1.0, 2.0]), Some((0, 1)));
        assert_eq!(find_sign_boundaries(&[]), None);
    }

    #[test]
    fn segment_stationary_keeps_everything() {
        let frames: Vec<PoseFrame> = (0..12)
            .map(|i| frame_with_right_centroid(100.0, 100.0, i))
            .collect();
        let bounds = segment_bounds(&frames, 3);
        assert!(bounds.fallback);
        assert_eq!((bounds.first_frame, bounds.last_frame), (0, 11));
        assert_eq!(segment_video(frames, 3).len(), 12);
    }

    #[test]
    fn segment_two_frames_kept() {
        let frames = alloc::vec![
            frame_with_right_centroid(0.0, 0.0, 0),
            frame_with_right_centroid(50.0, 0.0, 1),
        ];
        assert_eq!(segment_video(frames, 3).len(), 2);
    }

    #[test]
    fn segment_rest_sign_rest() {
        // Rest, accelerate, slow mid-sign, accelerate, rest: positions along
        // x chosen so the 3-frame speed series has exactly two interior
        // maxima.
        let (frames, expected) = crate::synthetic::rest_sign_rest_video();
        let track = CentroidTrack::from_frames(&frames, Handedness::Right);
        let series = window_speed(&track, 3);

        // Independent slope-sign scan over the oracle speeds.
        let mut oracle_maxima = Vec::new();
        for t in 1..series.speeds.len() - 1 {
            if series.speeds[t] - series.speeds[t - 1] > 0.0
                && series.speeds[t + 1] - series.speeds[t] <= 0.0
            {
                oracle_maxima.push(t);
            }
        }
        assert_eq!(oracle_maxima, alloc::vec![expected.0, expected.1 + 1 - 3]);

        let bounds = segment_bounds(&frames, 3);
        assert!(!bounds.fallback);
        assert_eq!((bounds.first_frame, bounds.last_frame), expected);
    }

    #[test]
    fn segment_picks_dominant_hand() {
        // Left hand travels farther than the right.
        let frames: Vec<PoseFrame> = (0..10)
            .map(|i| {
                let mut frame = frame_with_right_centroid(100.0, 100.0, i);
                frame.left_hand = hand_at_points(&[(10.0 * i as f64, 200.0)]);
                frame
            })
            .collect();
        assert_eq!(segment_bounds(&frames, 3).dominant_hand, Handedness::Left);
    }

    #[test]
    fn window_growth_never_lengthens_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let track = CentroidTrack {
            hand: Handedness::Right,
            centroids: (0..30)
                .map(|_| Some((rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))))
                .collect(),
        };
        let mut prev_len = usize::MAX;
        for window in 2..8 {
            let len = window_speed(&track, window).len();
            assert!(len <= prev_len);
            prev_len = len;
        }
    }

    #[test]
    fn window_growth_smooths_synthetic_trajectory() {
        // Larger windows smooth the graph. Window speed sums roughly
        // (window - 1) per-frame displacements, so the raw total variation
        // scales up with the window; the comparison divides it out.
        let (frames, _) = crate::synthetic::rest_sign_rest_video();
        let track = CentroidTrack::from_frames(&frames, Handedness::Right);
        let tv = |speeds: &[f64]| -> f64 {
            speeds.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
        };
        let mut prev = f64::INFINITY;
        for window in [3, 4, 5, 6] {
            let series = window_speed(&track, window);
            let v = tv(&series.speeds) / (window - 1) as f64;
            assert!(v <= prev + 1e-9, "window {window}: tv {v} > {prev}");
            prev = v;
        }
    }
}
