//! Room geometry, transmitters, receiver front end and the line-of-sight
//! optical channel.
//!
//! Transmitters point straight down from a ceiling plane `tx_height` above
//! the receiver plane; the receiver faces straight up. Channel gains follow
//! the generalized Lambertian LOS model
//!
//! ```text
//! H = (m + 1) A cos^m(phi) cos(psi) / (2 pi d^2)   for psi <= FOV, else 0
//! ```
//!
//! with `m = -ln 2 / ln(cos(semi_angle))`. No reflections are modeled.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invariant, Error, Result};

/// Bundled scene reproducing the two-transmitter darkroom setup.
pub const PAPER_SCENE: &str = include_str!("../assets/paper_scene.toml");

/// Transmitter identifier as written in the scene file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxId(pub u32);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Two-bit cell identifier, most significant (first transmitted) bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellId(pub [bool; 2]);

impl CellId {
    pub fn bits(&self) -> [bool; 2] {
        self.0
    }

    /// True when every slot has exactly one of the two IDs set.
    pub fn is_complement_of(&self, other: &CellId) -> bool {
        self.0[0] != other.0[0] && self.0[1] != other.0[1]
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for CellId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(invariant("cell_id", format!("{s:?} is not a bit string"))),
            })
            .collect::<Result<_>>()?;
        match bits.as_slice() {
            [a, b] => Ok(CellId([*a, *b])),
            _ => Err(invariant(
                "cell_id",
                format!("{s:?} must have exactly 2 bits"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    pub id: TxId,
    /// Position in meters; `z` is the ceiling height above the receiver plane.
    pub position: [f64; 3],
    /// Optical power, watts.
    pub optical_power: f64,
    /// Half-power semi-angle in degrees (the unit of the scene file).
    pub semi_angle_deg: f64,
    pub cell_id: CellId,
}

impl Transmitter {
    pub fn semi_angle(&self) -> f64 {
        self.semi_angle_deg.to_radians()
    }

    pub fn ground_point(&self) -> [f64; 2] {
        [self.position[0], self.position[1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverParams {
    /// Photodiode area, m^2.
    pub detector_area: f64,
    /// Field-of-view half angle in degrees.
    pub fov_deg: f64,
    /// A/W.
    pub responsivity: f64,
    pub samples_per_bit: usize,
    /// Bits per second.
    pub bit_rate: f64,
    /// Standard deviation of the additive Gaussian noise per sample, amps.
    pub noise_std: f64,
    /// Constant ambient-light photocurrent, amps.
    pub ambient_dc: f64,
}

impl ReceiverParams {
    pub fn fov(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    /// Sampling period `Ts = 1 / (bit_rate * samples_per_bit)`.
    pub fn sample_period(&self) -> f64 {
        1.0 / (self.bit_rate * self.samples_per_bit as f64)
    }

    fn validate(&self) -> Result<()> {
        if !(self.detector_area > 0.0) {
            return Err(invariant("receiver.area_m2", "must be > 0"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 90.0) {
            return Err(invariant("receiver.fov_deg", "must be in (0, 90]"));
        }
        if !(self.responsivity > 0.0 && self.responsivity.is_finite()) {
            return Err(invariant("receiver.responsivity_a_per_w", "must be > 0"));
        }
        if self.samples_per_bit < 2 {
            return Err(invariant("receiver.samples_per_bit", "must be >= 2"));
        }
        if !(self.bit_rate > 0.0 && self.bit_rate.is_finite()) {
            return Err(invariant("receiver.bit_rate_hz", "must be > 0"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(invariant("receiver.noise_std_a", "must be >= 0"));
        }
        if !(self.ambient_dc >= 0.0 && self.ambient_dc.is_finite()) {
            return Err(invariant("receiver.ambient_dc_a", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Receiver-plane rectangle `[0, x] x [0, y]`, meters.
    pub room_extent: [f64; 2],
    pub tx_height: f64,
    pub transmitters: Vec<Transmitter>,
    pub receiver: ReceiverParams,
}

impl Scene {
    /// Checks every scene invariant. [`load_scene`] calls this; call it again
    /// after editing fields by hand.
    pub fn validate(&self) -> Result<()> {
        let [ex, ey] = self.room_extent;
        if !(ex > 0.0 && ey > 0.0 && ex.is_finite() && ey.is_finite()) {
            return Err(invariant("room.extent_m", "both sides must be > 0"));
        }
        if !(self.tx_height > 0.0 && self.tx_height.is_finite()) {
            return Err(invariant("room.tx_height_m", "must be > 0"));
        }
        if self.transmitters.len() < 2 {
            return Err(invariant(
                "transmitters",
                "at least 2 transmitters required",
            ));
        }
        let mut ids = HashSet::new();
        let mut cells = HashSet::new();
        for (i, tx) in self.transmitters.iter().enumerate() {
            let field = |name: &str| format!("transmitters[{i}].{name}");
            if !ids.insert(tx.id) {
                return Err(invariant(field("id"), format!("duplicate id {}", tx.id)));
            }
            if !cells.insert(tx.cell_id) {
                return Err(invariant(field("cell_id"), "cell IDs must be distinct"));
            }
            if !(tx.optical_power > 0.0 && tx.optical_power.is_finite()) {
                return Err(invariant(field("power_w"), "must be > 0"));
            }
            if !(tx.semi_angle_deg > 0.0 && tx.semi_angle_deg < 90.0) {
                return Err(invariant(field("semi_angle_deg"), "must be in (0, 90)"));
            }
            let [x, y, z] = tx.position;
            if !(0.0..=ex).contains(&x) || !(0.0..=ey).contains(&y) {
                return Err(invariant(field("pos_m"), "outside room extent"));
            }
            if z != self.tx_height {
                return Err(invariant(
                    field("pos_m"),
                    "height differs from room.tx_height_m",
                ));
            }
        }
        self.receiver.validate()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..=self.room_extent[0]).contains(&p[0]) && (0.0..=self.room_extent[1]).contains(&p[1])
    }

    pub fn transmitter(&self, id: TxId) -> Option<&Transmitter> {
        self.transmitters.iter().find(|t| t.id == id)
    }

    /// Transmitter ids in ascending order.
    pub fn tx_ids(&self) -> Vec<TxId> {
        let mut ids: Vec<TxId> = self.transmitters.iter().map(|t| t.id).collect();
        ids.sort();
        ids
    }

    /// Indices into `transmitters`, ordered by ascending id.
    pub fn tx_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.transmitters.len()).collect();
        idx.sort_by_key(|&i| self.transmitters[i].id);
        idx
    }

    /// Channel gain from `tx` to a receiver-plane point.
    pub fn gain_at(&self, tx: &Transmitter, p: [f64; 2]) -> Result<f64> {
        los_gain(tx, [p[0], p[1], 0.0], &self.receiver)
    }

    /// Noiseless photocurrent step produced by `tx` switching on at `p`, amps.
    pub fn on_level(&self, tx: &Transmitter, p: [f64; 2]) -> Result<f64> {
        Ok(self.receiver.responsivity * tx.optical_power * self.gain_at(tx, p)?)
    }

    /// Copy with a different per-sample noise level.
    pub fn with_noise_std(&self, noise_std: f64) -> Result<Scene> {
        let mut s = self.clone();
        s.receiver.noise_std = noise_std;
        s.validate()?;
        Ok(s)
    }

    /// Copy with every transmitter's optical power multiplied by `factor`.
    pub fn with_power_scale(&self, factor: f64) -> Result<Scene> {
        let mut s = self.clone();
        for tx in &mut s.transmitters {
            tx.optical_power *= factor;
        }
        s.validate()?;
        Ok(s)
    }

    /// Serializes to the scene document format accepted by [`load_scene`].
    pub fn to_toml_string(&self) -> String {
        let doc = SceneDoc::from(self);
        toml::to_string(&doc).expect("scene document is always serializable")
    }

    pub fn paper() -> Scene {
        load_scene(PAPER_SCENE).expect("bundled scene is valid")
    }
}

/// Parses and validates a scene document (TOML).
pub fn load_scene(text: &str) -> Result<Scene> {
    let doc: SceneDoc = toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
    let scene = doc.into_scene()?;
    scene.validate()?;
    Ok(scene)
}

/// Lambertian emission order `m = -ln 2 / ln(cos(semi_angle))`.
pub fn lambertian_order(semi_angle: f64) -> Result<f64> {
    if !(semi_angle > 0.0 && semi_angle < PI / 2.0) {
        return Err(invariant("semi_angle", "must be in (0, pi/2)"));
    }
    Ok(-std::f64::consts::LN_2 / semi_angle.cos().ln())
}

/// Line-of-sight DC gain from a downward-facing transmitter to a face-up
/// receiver at `rx_pos`.
pub fn los_gain(tx: &Transmitter, rx_pos: [f64; 3], rx: &ReceiverParams) -> Result<f64> {
    let dx = tx.position[0] - rx_pos[0];
    let dy = tx.position[1] - rx_pos[1];
    let dz = tx.position[2] - rx_pos[2];
    let d2 = dx * dx + dy * dy + dz * dz;
    if d2 == 0.0 {
        return Err(Error::Geometry("transmitter and receiver coincide".into()));
    }
    if dz <= 0.0 {
        return Err(Error::Geometry(
            "receiver must lie strictly below the transmitter plane".into(),
        ));
    }
    let m = lambertian_order(tx.semi_angle())?;
    // Both normals are vertical, so irradiance and incidence angles coincide.
    let cos_angle = dz / d2.sqrt();
    if cos_angle < rx.fov().cos() {
        return Ok(0.0);
    }
    Ok((m + 1.0) * rx.detector_area * cos_angle.powf(m) * cos_angle / (2.0 * PI * d2))
}

/// `nx * ny` cell-center points covering the room, row-major (x fastest).
pub fn grid_positions(scene: &Scene, nx: usize, ny: usize) -> Result<Vec<[f64; 2]>> {
    if nx == 0 || ny == 0 {
        return Err(invariant("grid", "nx and ny must be >= 1"));
    }
    let px = scene.room_extent[0] / nx as f64;
    let py = scene.room_extent[1] / ny as f64;
    Ok((0..ny)
        .flat_map(|j| (0..nx).map(move |i| [(i as f64 + 0.5) * px, (j as f64 + 0.5) * py]))
        .collect())
}

// Scene document schema.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    room: RoomDoc,
    transmitters: Vec<TxDoc>,
    receiver: ReceiverDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomDoc {
    extent_m: [f64; 2],
    tx_height_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TxDoc {
    id: u32,
    pos_m: [f64; 2],
    power_w: f64,
    semi_angle_deg: f64,
    cell_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverDoc {
    area_m2: f64,
    fov_deg: f64,
    responsivity_a_per_w: f64,
    bit_rate_hz: f64,
    samples_per_bit: usize,
    noise_std_a: f64,
    ambient_dc_a: f64,
}

impl SceneDoc {
    fn into_scene(self) -> Result<Scene> {
        let tx_height = self.room.tx_height_m;
        let transmitters = self
            .transmitters
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let cell_id = t.cell_id.parse().map_err(|e| match e {
                    Error::Invariant { reason, .. } => {
                        invariant(format!("transmitters[{i}].cell_id"), reason)
                    }
                    other => other,
                })?;
                Ok(Transmitter {
                    id: TxId(t.id),
                    position: [t.pos_m[0], t.pos_m[1], tx_height],
                    optical_power: t.power_w,
                    semi_angle_deg: t.semi_angle_deg,
                    cell_id,
                })
            })
            .collect::<Result<_>>()?;
        let r = self.receiver;
        Ok(Scene {
            room_extent: self.room.extent_m,
            tx_height,
            transmitters,
            receiver: ReceiverParams {
                detector_area: r.area_m2,
                fov_deg: r.fov_deg,
                responsivity: r.responsivity_a_per_w,
                samples_per_bit: r.samples_per_bit,
                bit_rate: r.bit_rate_hz,
                noise_std: r.noise_std_a,
                ambient_dc: r.ambient_dc_a,
            },
        })
    }
}

impl From<&Scene> for SceneDoc {
    fn from(s: &Scene) -> Self {
        let r = &s.receiver;
        SceneDoc {
            room: RoomDoc {
                extent_m: s.room_extent,
                tx_height_m: s.tx_height,
            },
            transmitters: s
                .transmitters
                .iter()
                .map(|t| TxDoc {
                    id: t.id.0,
                    pos_m: [t.position[0], t.position[1]],
                    power_w: t.optical_power,
                    semi_angle_deg: t.semi_angle_deg,
                    cell_id: t.cell_id.to_string(),
                })
                .collect(),
            receiver: ReceiverDoc {
                area_m2: r.detector_area,
                fov_deg: r.fov_deg,
                responsivity_a_per_w: r.responsivity,
                bit_rate_hz: r.bit_rate,
                samples_per_bit: r.samples_per_bit,
                noise_std_a: r.noise_std,
                ambient_dc_a: r.ambient_dc,
            },
        }
    }
}
