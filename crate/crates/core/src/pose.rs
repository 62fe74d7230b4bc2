//! Pose keypoint types and phonological label vocabularies.
//!
//! Coordinates follow the image convention: origin at the top-left corner,
//! `y` grows downward. "North" therefore means decreasing `y`. Keypoints a
//! pose estimator failed to detect are represented as `None`, never as a
//! silent `(0, 0)` (which is a valid corner pixel).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// One detected 2D keypoint in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Detector confidence in `[0, 1]`. Stored, but not used by any
    /// downstream computation.
    pub confidence: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self { x, y, confidence }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Fingers of one hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl Finger {
    pub const ALL: [Finger; 5] = [
        Finger::Thumb,
        Finger::Index,
        Finger::Middle,
        Finger::Ring,
        Finger::Little,
    ];
}

/// Anatomical levels along a finger chain, from the wrist outward.
///
/// For the thumb the carpal level is occupied by the trapezium bone; see
/// [`HandSkeleton::keypoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bone {
    Carpal,
    Metacarpal,
    Proximal,
    /// Fingertip.
    Phalanx,
}

/// Number of keypoints in a hand skeleton.
pub const HAND_KEYPOINTS: usize = 21;
/// Number of keypoints in the body skeleton.
pub const BODY_KEYPOINTS: usize = 25;
/// Number of keypoints in the optional face set.
pub const FACE_KEYPOINTS: usize = 70;

/// Names of the 21 hand slots in canonical order (the order the pose
/// estimator emits them): radius, trapezium, then each finger chain from
/// the palm outward.
pub const HAND_SLOT_NAMES: [&str; HAND_KEYPOINTS] = [
    "radius",
    "trapezium",
    "thumb_metacarpal",
    "thumb_proximal",
    "thumb_phalange",
    "index_carpal",
    "index_metacarpal",
    "index_proximal",
    "index_phalange",
    "middle_carpal",
    "middle_metacarpal",
    "middle_proximal",
    "middle_phalange",
    "ring_carpal",
    "ring_metacarpal",
    "ring_proximal",
    "ring_phalange",
    "little_carpal",
    "little_metacarpal",
    "little_proximal",
    "little_phalange",
];

/// The 21 named keypoints of one hand.
///
/// Slots are addressed either by canonical index (see [`HAND_SLOT_NAMES`])
/// or anatomically via [`HandSkeleton::keypoint`]. Undetected slots hold
/// `None`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HandSkeleton {
    points: [Option<Keypoint>; HAND_KEYPOINTS],
}

impl HandSkeleton {
    pub fn from_points(points: [Option<Keypoint>; HAND_KEYPOINTS]) -> Self {
        Self { points }
    }

    /// Canonical slot index for a (finger, bone) pair.
    ///
    /// The thumb has no carpal of its own; `(Thumb, Carpal)` resolves to the
    /// trapezium slot, which fills that role anatomically.
    pub fn slot_index(finger: Finger, bone: Bone) -> usize {
        let base = match finger {
            Finger::Thumb => 1,
            Finger::Index => 5,
            Finger::Middle => 9,
            Finger::Ring => 13,
            Finger::Little => 17,
        };
        let offset = match bone {
            Bone::Carpal => 0,
            Bone::Metacarpal => 1,
            Bone::Proximal => 2,
            Bone::Phalanx => 3,
        };
        base + offset
    }

    pub fn keypoint(&self, finger: Finger, bone: Bone) -> Option<Keypoint> {
        self.points[Self::slot_index(finger, bone)]
    }

    /// Wrist keypoint.
    pub fn radius(&self) -> Option<Keypoint> {
        self.points[0]
    }

    pub fn trapezium(&self) -> Option<Keypoint> {
        self.points[1]
    }

    pub fn slot(&self, index: usize) -> Option<Keypoint> {
        self.points[index]
    }

    pub fn set_slot(&mut self, index: usize, point: Option<Keypoint>) {
        self.points[index] = point;
    }

    pub fn points(&self) -> &[Option<Keypoint>; HAND_KEYPOINTS] {
        &self.points
    }

    pub fn detected(&self) -> impl Iterator<Item = (usize, Keypoint)> + '_ {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i, p)))
    }

    pub fn detected_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.points.iter().all(|p| p.is_none())
    }
}

/// Canonical indices into the 25-point body skeleton.
pub mod body {
    pub const NOSE: usize = 0;
    pub const NECK: usize = 1;
    pub const RIGHT_SHOULDER: usize = 2;
    pub const LEFT_SHOULDER: usize = 5;
    pub const MID_HIP: usize = 8;
    pub const RIGHT_EYE: usize = 15;
    pub const LEFT_EYE: usize = 16;
    pub const RIGHT_EAR: usize = 17;
    pub const LEFT_EAR: usize = 18;
}

/// One video frame's detected keypoints plus frame metadata.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PoseFrame {
    pub body: [Option<Keypoint>; BODY_KEYPOINTS],
    pub left_hand: HandSkeleton,
    pub right_hand: HandSkeleton,
    /// Face keypoints are carried opaquely; nothing downstream interprets
    /// them.
    pub face: Option<Vec<Option<Keypoint>>>,
    pub frame_index: usize,
    pub source_video: String,
    pub frame_width: u32,
    pub frame_height: u32,
}

impl PoseFrame {
    /// An empty frame with the given metadata; all keypoints undetected.
    pub fn empty(source_video: String, frame_index: usize, width: u32, height: u32) -> Self {
        Self {
            body: [None; BODY_KEYPOINTS],
            left_hand: HandSkeleton::default(),
            right_hand: HandSkeleton::default(),
            face: None,
            frame_index,
            source_video,
            frame_width: width,
            frame_height: height,
        }
    }

    pub fn hand(&self, side: Handedness) -> &HandSkeleton {
        match side {
            Handedness::Right => &self.right_hand,
            Handedness::Left => &self.left_hand,
        }
    }

    /// Both hand slots with their handedness, right first.
    pub fn hands(&self) -> [(Handedness, &HandSkeleton); 2] {
        [
            (Handedness::Right, &self.right_hand),
            (Handedness::Left, &self.left_hand),
        ]
    }

    /// Image diagonal in pixels.
    pub fn diagonal(&self) -> f64 {
        libm::hypot(self.frame_width as f64, self.frame_height as f64)
    }
}

/// Error for label tokens that do not belong to a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseLabelError {
    pub vocabulary: &'static str,
    pub token: String,
}

impl fmt::Display for ParseLabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown {} label {:?}", self.vocabulary, self.token)
    }
}

macro_rules! label_enum {
    (
        $(#[$meta:meta])*
        $name:ident : $vocab:literal {
            $($variant:ident => $code:literal),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        #[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: [$name; label_enum!(@count $($variant)+)] = [$($name::$variant),+];

            /// The lowercase annotation-file token for this label.
            pub fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }

            /// Position of this label in [`Self::ALL`].
            pub fn index(self) -> usize {
                Self::ALL.iter().position(|l| *l == self).unwrap()
            }

            pub fn from_index(index: usize) -> Option<Self> {
                Self::ALL.get(index).copied()
            }

            pub fn parse(token: &str) -> Result<Self, ParseLabelError> {
                match token {
                    $($code => Ok($name::$variant),)+
                    _ => Err(ParseLabelError {
                        vocabulary: $vocab,
                        token: String::from(token),
                    }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }

        impl FromStr for $name {
            type Err = ParseLabelError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::parse(s)
            }
        }
    };
    (@count $($tt:tt)+) => { [$(label_enum!(@unit $tt)),+].len() };
    (@unit $tt:tt) => { () };
}

label_enum! {
    /// Which hand a record describes.
    Handedness : "handedness" {
        Right => "right",
        Left => "left",
    }
}

label_enum! {
    /// The 13 handshape classes.
    Handshape : "handshape" {
        SHand => "s-hand",
        OneHand => "1-hand",
        BHand => "b-hand",
        BHandTommel => "b-hand-tommel",
        CHand => "c-hand",
        PaedagogHand => "paedagog-hand",
        PegeHand => "pege-hand",
        TwoHand => "2-hand",
        GHand => "g-hand",
        ThreeHand => "3-hand",
        FiveHand => "5-hand",
        NineHand => "9-hand",
        OHand => "o-hand",
    }
}

label_enum! {
    /// Coarse handshape groups.
    HandshapeGroup : "handshape group" {
        Tied => "tied",
        Flat => "flat",
        OneFinger => "1-finger",
        TwoFingers => "2-fingers",
        ThreeToFiveFingers => "3-5-fingers",
        Closed => "closed",
    }
}

label_enum! {
    /// Extended finger orientation: eight compass directions, 45 degrees
    /// each, in image coordinates (north = up on screen).
    Orientation : "orientation" {
        North => "n",
        NorthEast => "ne",
        East => "e",
        SouthEast => "se",
        South => "s",
        SouthWest => "sw",
        West => "w",
        NorthWest => "nw",
    }
}

label_enum! {
    /// Hand location relative to the body: six body regions plus the
    /// neutral signing space.
    Location : "location" {
        Ears => "ears",
        Eyes => "eyes",
        Nose => "nose",
        Neck => "neck",
        Shoulder => "shoulder",
        Abdominal => "abdominal",
        Neutral => "neutral",
    }
}

impl Handshape {
    /// The group a handshape belongs to. Total: every handshape maps to
    /// exactly one group.
    pub fn group(self) -> HandshapeGroup {
        match self {
            Handshape::SHand | Handshape::OneHand => HandshapeGroup::Tied,
            Handshape::BHand
            | Handshape::BHandTommel
            | Handshape::CHand
            | Handshape::PaedagogHand => HandshapeGroup::Flat,
            Handshape::PegeHand => HandshapeGroup::OneFinger,
            Handshape::TwoHand | Handshape::GHand => HandshapeGroup::TwoFingers,
            Handshape::ThreeHand | Handshape::FiveHand => HandshapeGroup::ThreeToFiveFingers,
            Handshape::NineHand | Handshape::OHand => HandshapeGroup::Closed,
        }
    }
}

impl Orientation {
    /// The next direction clockwise on screen (n -> ne -> e -> ... -> nw -> n).
    pub fn next_clockwise(self) -> Orientation {
        Orientation::ALL[(self.index() + 1) % Orientation::ALL.len()]
    }
}

/// Non-neutral locations in tie-break priority order (head-first).
pub const BODY_LOCATIONS: [Location; 6] = [
    Location::Ears,
    Location::Eyes,
    Location::Nose,
    Location::Neck,
    Location::Shoulder,
    Location::Abdominal,
];
