//! Seeded synthetic generator of UHF RFID backscatter reads.
//!
//! Models a tagged cardboard box in front of a reader antenna: three tags on
//! mutually orthogonal faces, six discrete orientation states, five content
//! material classes. Each read carries an RSSI (dBm) and a phase angle (rad)
//! drawn from a face- and material-dependent channel model:
//!
//! - two-way path loss over the reader-to-tag distance (40 dB/decade),
//! - a per-face antenna gain penalty (tags broadside to the reader read
//!   hotter than tags seen edge-on),
//! - material attenuation and phase offset scaled by how much of the box
//!   the signal penetrates for that face,
//! - material-dependent RSSI/phase variance boosts,
//! - a weak-multipath mixture on perpendicular faces that inflates RSSI
//!   variance and skews it toward weaker reads,
//! - a heavy occlusion penalty and read-drop probability for the bottom
//!   face, which is sandwiched against the surface the box sits on.
//!
//! Everything is driven by an explicit seed: the same [`ScenarioConfig`]
//! always produces the same reads.

mod channel;
mod geometry;
mod session;

pub use channel::{expected_phase, expected_rssi, sample_at_face, sample_read};
pub use geometry::{check_face_table, path_distance, penetration_fraction, tag_face_for_state, FACE_TABLE};
pub use session::{
    calibration_summary, generate_corpus, generate_session, CalibrationCell, CalibrationSummary,
    Corpus, Session,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from simulator configuration or generation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
}

/// One face of the rectangular package, named relative to the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    /// Faces the reader.
    Front,
    /// Opposite the reader; signals cross the whole box.
    Rear,
    Left,
    Right,
    Top,
    /// Against the supporting surface; heavily occluded.
    Bottom,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::Front,
        Face::Rear,
        Face::Left,
        Face::Right,
        Face::Top,
        Face::Bottom,
    ];

    /// The opposite face of the box.
    pub fn opposite(self) -> Face {
        match self {
            Face::Front => Face::Rear,
            Face::Rear => Face::Front,
            Face::Left => Face::Right,
            Face::Right => Face::Left,
            Face::Top => Face::Bottom,
            Face::Bottom => Face::Top,
        }
    }

    /// True for the four faces perpendicular to the reader axis.
    pub fn is_perpendicular(self) -> bool {
        matches!(self, Face::Left | Face::Right | Face::Top | Face::Bottom)
    }

    /// Outward unit normal as integer components (x toward the reader).
    pub fn normal(self) -> [i8; 3] {
        match self {
            Face::Front => [1, 0, 0],
            Face::Rear => [-1, 0, 0],
            Face::Right => [0, 1, 0],
            Face::Left => [0, -1, 0],
            Face::Top => [0, 0, 1],
            Face::Bottom => [0, 0, -1],
        }
    }
}

/// One of the six discrete package poses.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct OrientationState(u8);

impl OrientationState {
    pub const COUNT: usize = 6;

    pub fn new(id: u8) -> Result<Self, SimError> {
        if id < 6 {
            Ok(OrientationState(id))
        } else {
            Err(SimError::InvalidConfig(format!(
                "orientation state {id} out of range [0,5]"
            )))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = OrientationState> {
        (0..6).map(OrientationState)
    }
}

impl std::fmt::Display for OrientationState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of the (up to) three tags a read belongs to.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum TagRole {
    Tag1,
    Tag2,
    Tag3,
}

impl TagRole {
    pub const ALL: [TagRole; 3] = [TagRole::Tag1, TagRole::Tag2, TagRole::Tag3];

    /// Zero-based index (Tag1 -> 0).
    pub fn index(self) -> usize {
        match self {
            TagRole::Tag1 => 0,
            TagRole::Tag2 => 1,
            TagRole::Tag3 => 2,
        }
    }

    /// The tags active in a 2- or 3-tag setup, in fixed order.
    pub fn active(n_tags: u8) -> &'static [TagRole] {
        if n_tags == 2 {
            &TagRole::ALL[..2]
        } else {
            &TagRole::ALL
        }
    }
}

impl std::fmt::Display for TagRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TagRole::Tag1 => write!(f, "Tag1"),
            TagRole::Tag2 => write!(f, "Tag2"),
            TagRole::Tag3 => write!(f, "Tag3"),
        }
    }
}

/// The five package content classes.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum MaterialClass {
    /// Empty box.
    Control,
    Clothing,
    ToiletPaper,
    Chips,
    PlasticWrap,
}

impl MaterialClass {
    pub const ALL: [MaterialClass; 5] = [
        MaterialClass::Control,
        MaterialClass::Clothing,
        MaterialClass::ToiletPaper,
        MaterialClass::Chips,
        MaterialClass::PlasticWrap,
    ];

    /// Zero-based class index used as the classifier label.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|m| *m == self).unwrap()
    }

    /// Lowercase snake_case name used in file names and reports.
    pub fn slug(self) -> &'static str {
        match self {
            MaterialClass::Control => "control",
            MaterialClass::Clothing => "clothing",
            MaterialClass::ToiletPaper => "toilet_paper",
            MaterialClass::Chips => "chips",
            MaterialClass::PlasticWrap => "plastic_wrap",
        }
    }
}

impl std::str::FromStr for MaterialClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaterialClass::ALL
            .iter()
            .find(|m| m.slug() == s || format!("{m:?}") == s)
            .copied()
            .ok_or_else(|| format!("unknown material class: {s}"))
    }
}

/// How one material class perturbs the backscatter channel.
///
/// Attenuation and the phase offset scale with the penetration fraction of
/// the tag's face; variance boosts likewise. The control class is all zeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// RSSI loss in dB for a full pass through the box contents.
    pub attenuation_db_per_pass: f64,
    /// Mean phase shift in rad for a full pass.
    pub phase_offset_rad: f64,
    /// Extra RSSI variance in dB^2 at full penetration.
    pub rssi_var_boost_db2: f64,
    /// Extra phase variance in rad^2 at full penetration.
    pub phase_var_boost_rad2: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let vals = [
            self.attenuation_db_per_pass,
            self.phase_offset_rad,
            self.rssi_var_boost_db2,
            self.phase_var_boost_rad2,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidConfig(
                "material params must be finite".into(),
            ));
        }
        if self.attenuation_db_per_pass < 0.0
            || self.rssi_var_boost_db2 < 0.0
            || self.phase_var_boost_rad2 < 0.0
        {
            return Err(SimError::InvalidConfig(
                "attenuation and variance boosts must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-class channel parameters.
///
/// The defaults are calibration knobs, tuned so the synthetic corpus shows
/// the qualitative behavior of the real material classes: clothing barely
/// attenuates, plastic wrap attenuates hardest, the metalized chip bag
/// reflects and produces by far the largest RSSI/phase variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialTable {
    pub control: MaterialParams,
    pub clothing: MaterialParams,
    pub toilet_paper: MaterialParams,
    pub chips: MaterialParams,
    pub plastic_wrap: MaterialParams,
}

impl MaterialTable {
    pub fn get(&self, class: MaterialClass) -> &MaterialParams {
        match class {
            MaterialClass::Control => &self.control,
            MaterialClass::Clothing => &self.clothing,
            MaterialClass::ToiletPaper => &self.toilet_paper,
            MaterialClass::Chips => &self.chips,
            MaterialClass::PlasticWrap => &self.plastic_wrap,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for class in MaterialClass::ALL {
            self.get(class).validate()?;
        }
        let c = self.control;
        if c.attenuation_db_per_pass != 0.0
            || c.rssi_var_boost_db2 != 0.0
            || c.phase_var_boost_rad2 != 0.0
        {
            return Err(SimError::InvalidConfig(
                "control material must have zero attenuation and boosts".into(),
            ));
        }
        Ok(())
    }
}

impl Default for MaterialTable {
    fn default() -> Self {
        MaterialTable {
            control: MaterialParams {
                attenuation_db_per_pass: 0.0,
                phase_offset_rad: 0.0,
                rssi_var_boost_db2: 0.0,
                phase_var_boost_rad2: 0.0,
            },
            clothing: MaterialParams {
                attenuation_db_per_pass: 0.2,
                phase_offset_rad: 0.02,
                rssi_var_boost_db2: 0.1,
                phase_var_boost_rad2: 0.0005,
            },
            toilet_paper: MaterialParams {
                attenuation_db_per_pass: 3.2,
                phase_offset_rad: 0.24,
                rssi_var_boost_db2: 0.5,
                phase_var_boost_rad2: 0.003,
            },
            chips: MaterialParams {
                attenuation_db_per_pass: 1.2,
                phase_offset_rad: 0.50,
                rssi_var_boost_db2: 1.2,
                phase_var_boost_rad2: 0.09,
            },
            plastic_wrap: MaterialParams {
                attenuation_db_per_pass: 6.0,
                phase_offset_rad: 0.50,
                rssi_var_boost_db2: 0.1,
                phase_var_boost_rad2: 0.0015,
            },
        }
    }
}

/// Per-face antenna gain penalties in dB.
///
/// Front and rear see the tag broadside; left/right are read edge-on with a
/// mild penalty; top and bottom sit at the weaker end of the tag pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaceGains {
    pub front_db: f64,
    pub rear_db: f64,
    pub left_db: f64,
    pub right_db: f64,
    pub top_db: f64,
    pub bottom_db: f64,
}

impl FaceGains {
    pub fn penalty(&self, face: Face) -> f64 {
        match face {
            Face::Front => self.front_db,
            Face::Rear => self.rear_db,
            Face::Left => self.left_db,
            Face::Right => self.right_db,
            Face::Top => self.top_db,
            Face::Bottom => self.bottom_db,
        }
    }
}

impl Default for FaceGains {
    fn default() -> Self {
        FaceGains {
            front_db: 0.0,
            rear_db: 0.0,
            left_db: 2.0,
            right_db: 3.0,
            top_db: 3.5,
            bottom_db: 3.5,
        }
    }
}

/// Channel-model constants: path loss reference, noise floors, multipath
/// mixture, bottom-face occlusion, and the per-material table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    /// System loss from transmit power to received backscatter at the
    /// reference distance, in dB.
    pub base_loss_db: f64,
    /// Reference distance for the path-loss term, in meters.
    pub ref_distance_m: f64,
    pub gains: FaceGains,
    /// Extra RSSI penalty for a bottom-face tag, in dB.
    pub bottom_occlusion_db: f64,
    /// Probability that a bottom-face tag answers at all.
    pub bottom_read_prob: f64,
    /// Baseline RSSI noise variance in dB^2.
    pub rssi_noise_var_db2: f64,
    /// Baseline phase noise variance in rad^2.
    pub phase_noise_var_rad2: f64,
    /// Probability that a perpendicular-face read is hit by weak multipath.
    pub side_mix_prob: f64,
    /// Mean RSSI drop of a multipath-hit read, in dB.
    pub side_mix_shift_db: f64,
    /// Extra RSSI variance of a multipath-hit read, in dB^2.
    pub side_mix_extra_var_db2: f64,
    pub materials: MaterialTable,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            base_loss_db: 87.5,
            ref_distance_m: 0.5,
            gains: FaceGains::default(),
            bottom_occlusion_db: 15.0,
            bottom_read_prob: 0.5,
            rssi_noise_var_db2: 1.0,
            phase_noise_var_rad2: 0.0025,
            side_mix_prob: 0.2,
            side_mix_shift_db: 2.5,
            side_mix_extra_var_db2: 1.5,
            materials: MaterialTable::default(),
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.ref_distance_m <= 0.0 {
            return Err(SimError::InvalidConfig("ref_distance_m must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.bottom_read_prob) {
            return Err(SimError::InvalidConfig(
                "bottom_read_prob must be in [0,1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.side_mix_prob) {
            return Err(SimError::InvalidConfig(
                "side_mix_prob must be in [0,1]".into(),
            ));
        }
        if self.rssi_noise_var_db2 < 0.0
            || self.phase_noise_var_rad2 < 0.0
            || self.side_mix_extra_var_db2 < 0.0
            || self.bottom_occlusion_db < 0.0
        {
            return Err(SimError::InvalidConfig(
                "noise variances and occlusion must be >= 0".into(),
            ));
        }
        self.materials.validate()
    }
}

/// Full description of one data-collection session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub material: MaterialClass,
    pub state: OrientationState,
    /// Session length in seconds.
    pub duration_s: f64,
    /// Read rate per tag in Hz. May be fractional (see paper-count mode).
    pub reads_per_sec_per_tag: f64,
    /// Reader-antenna to box-center distance in meters.
    pub reader_distance_m: f64,
    /// Edge length of the cubic package in meters (6 in box).
    pub box_edge_m: f64,
    /// Carrier frequency in Hz.
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    /// Receive sensitivity; sampled reads below this are dropped.
    pub rx_floor_dbm: f64,
    pub seed: u64,
    /// 2 or 3 active tags.
    pub n_tags: u8,
    pub channel: ChannelParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            material: MaterialClass::Control,
            state: OrientationState(0),
            duration_s: 300.0,
            reads_per_sec_per_tag: 5.0,
            reader_distance_m: 0.5,
            box_edge_m: 0.1524,
            frequency_hz: 915e6,
            tx_power_dbm: 32.5,
            rx_floor_dbm: -84.0,
            seed: 0,
            n_tags: 3,
            channel: ChannelParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(SimError::InvalidConfig("duration_s must be > 0".into()));
        }
        if !self.reads_per_sec_per_tag.is_finite() || self.reads_per_sec_per_tag <= 0.0 {
            return Err(SimError::InvalidConfig(
                "reads_per_sec_per_tag must be > 0".into(),
            ));
        }
        if !self.reader_distance_m.is_finite() || self.reader_distance_m <= 0.0 {
            return Err(SimError::InvalidConfig(
                "reader_distance_m must be > 0".into(),
            ));
        }
        if !self.box_edge_m.is_finite()
            || self.box_edge_m <= 0.0
            || self.reader_distance_m <= self.box_edge_m / 2.0
        {
            return Err(SimError::InvalidConfig(
                "need reader_distance_m > box_edge_m / 2".into(),
            ));
        }
        if !self.frequency_hz.is_finite() || self.frequency_hz <= 0.0 {
            return Err(SimError::InvalidConfig("frequency_hz must be > 0".into()));
        }
        if self.rx_floor_dbm >= self.tx_power_dbm {
            return Err(SimError::InvalidConfig(
                "rx_floor_dbm must be below tx_power_dbm".into(),
            ));
        }
        if self.n_tags != 2 && self.n_tags != 3 {
            return Err(SimError::InvalidConfig("n_tags must be 2 or 3".into()));
        }
        self.channel.validate()
    }
}

/// One timestamped tag observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawRead {
    /// Seconds since session start; monotonic within a session.
    pub timestamp_s: f64,
    pub tag: TagRole,
    /// Always in [rx_floor_dbm, 0].
    pub rssi_dbm: f64,
    /// Always in [0, 2*pi).
    pub phase_rad: f64,
}
