//! Trajectory and BER-grid experiments over a scene.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invariant, Error, Result};
use crate::handover::{HandoverConfig, HandoverEvent, HandoverState};
use crate::phy::{
    build_frame, codebook, demodulate_ook, estimate_cell_gains, extract_id_segment, random_payload,
    synthesize_received, CellLevel, Frame, DEFAULT_PAYLOAD_BITS, ID_BITS,
};
use crate::rng::{stream, SimRng};
use crate::scene::{grid_positions, Scene, TxId};
use crate::stats::{kurtosis, KurtosisReport};

/// Bundled A-M walk across the two-cell boundary of the bundled scene.
pub const PAPER_PATH: &str = include_str!("../assets/paper_path.toml");

pub const DEFAULT_FRAMES_PER_WAYPOINT: usize = 5;
pub const DEFAULT_BITS_PER_POINT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub label: String,
    #[serde(rename = "pos_m")]
    pub pos: [f64; 2],
}

/// A walk through labeled waypoints.
///
/// The receiver moves along the polyline. The frames of waypoint `k` are
/// spread around it: frame `f` of `F` sits at fraction
/// `t = (f + 1/2) / F - 1/2` of the way toward the next waypoint (`t > 0`)
/// or the previous one (`t < 0`). With an odd `F` the middle frame is taken
/// exactly at the waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    #[serde(default = "default_frames")]
    pub frames_per_waypoint: usize,
    pub waypoints: Vec<Waypoint>,
}

fn default_frames() -> usize {
    DEFAULT_FRAMES_PER_WAYPOINT
}

impl Trajectory {
    pub fn parse(text: &str) -> Result<Self> {
        let t: Trajectory =
            toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
        if t.waypoints.len() < 2 {
            return Err(invariant("waypoints", "at least 2 waypoints required"));
        }
        if t.frames_per_waypoint == 0 {
            return Err(invariant("frames_per_waypoint", "must be >= 1"));
        }
        Ok(t)
    }

    pub fn paper() -> Self {
        Trajectory::parse(PAPER_PATH).expect("bundled path is valid")
    }

    pub fn validate_in(&self, scene: &Scene) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(invariant("waypoints", "at least 2 waypoints required"));
        }
        if self.frames_per_waypoint == 0 {
            return Err(invariant("frames_per_waypoint", "must be >= 1"));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !scene.contains(w.pos) {
                return Err(invariant(
                    format!("waypoints[{i}].pos_m"),
                    format!("waypoint {} lies outside the room", w.label),
                ));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.waypoints.iter().position(|w| w.label == label)
    }

    /// Receiver position for frame `frame` of waypoint `k`.
    pub fn frame_position(&self, k: usize, frame: usize) -> [f64; 2] {
        let f = self.frames_per_waypoint as f64;
        let t = (frame as f64 + 0.5) / f - 0.5;
        let here = self.waypoints[k].pos;
        let toward = if t > 0.0 {
            self.waypoints.get(k + 1)
        } else if t < 0.0 && k > 0 {
            self.waypoints.get(k - 1)
        } else {
            None
        };
        match toward {
            Some(w) => {
                let a = t.abs();
                [
                    here[0] + a * (w.pos[0] - here[0]),
                    here[1] + a * (w.pos[1] - here[1]),
                ]
            }
            None => here,
        }
    }
}

/// One analyzed frame of a trajectory run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub label: String,
    pub waypoint: usize,
    pub frame: usize,
    pub position: [f64; 2],
    pub kurtosis: KurtosisReport,
    pub gains: Vec<CellLevel>,
    pub serving_cell: TxId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub cells: Vec<TxId>,
    pub records: Vec<FrameRecord>,
    pub events: Vec<HandoverEvent>,
}

impl TrajectoryReport {
    /// Mean kurtosis over each waypoint's frames, in waypoint order.
    pub fn waypoint_kurtosis(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64, usize)> = Vec::new();
        for r in &self.records {
            if out.len() <= r.waypoint {
                out.push((r.label.clone(), 0.0, 0));
            }
            let e = &mut out[r.waypoint];
            e.1 += r.kurtosis.kurtosis;
            e.2 += 1;
        }
        out.into_iter().map(|(l, s, n)| (l, s / n as f64)).collect()
    }

    /// Global frame index of the first frame of waypoint `k`.
    pub fn first_frame_of(&self, k: usize) -> Option<u64> {
        self.records
            .iter()
            .position(|r| r.waypoint == k)
            .map(|i| i as u64)
    }
}

fn active_frames(scene: &Scene, rng: &mut SimRng, payload_bits: usize) -> Result<Vec<Frame>> {
    scene
        .transmitters
        .iter()
        .map(|t| build_frame(t.cell_id, random_payload(rng, payload_bits), payload_bits))
        .collect()
}

/// Analyzes every frame along `trajectory` and runs the handover machine.
///
/// Frame `f` of waypoint `k` uses stream `(seed, k, f)`: payload bits for
/// each transmitter in scene order, then the receiver noise. The initial
/// serving cell is the strongest cell of the first frame.
pub fn run_trajectory(
    scene: &Scene,
    trajectory: &Trajectory,
    cfg: &HandoverConfig,
    seed: u64,
) -> Result<TrajectoryReport> {
    scene.validate()?;
    trajectory.validate_in(scene)?;
    cfg.validate()?;
    let cb = codebook(scene);
    let dark = scene.receiver.ambient_dc;

    let jobs: Vec<(usize, usize)> = (0..trajectory.waypoints.len())
        .flat_map(|k| (0..trajectory.frames_per_waypoint).map(move |f| (k, f)))
        .collect();
    let analyzed: Vec<([f64; 2], KurtosisReport, Vec<CellLevel>)> = jobs
        .par_iter()
        .map(|&(k, f)| {
            let mut rng = stream(seed, k as u64, f as u64);
            let pos = trajectory.frame_position(k, f);
            let frames = active_frames(scene, &mut rng, DEFAULT_PAYLOAD_BITS)?;
            let refs: Vec<Option<&Frame>> = frames.iter().map(Some).collect();
            let w = synthesize_received(scene, pos, &refs, &mut rng)?;
            let seg = extract_id_segment(&w)?;
            let report = kurtosis(&seg.samples)?;
            let gains = estimate_cell_gains(&seg, &cb, dark)?;
            Ok((pos, report, gains))
        })
        .collect::<Result<_>>()?;

    let cells = scene.tx_ids();
    let first = &analyzed[0].2;
    let initial = first
        .iter()
        .fold(
            first[0],
            |best, l| if l.amps > best.amps { *l } else { best },
        )
        .id;
    let mut state = HandoverState::new(&cells, initial)?;
    let mut records = Vec::with_capacity(jobs.len());
    let mut events = Vec::new();
    for (&(k, f), (pos, report, gains)) in jobs.iter().zip(analyzed) {
        if let Some(e) = state.process_frame(&report, &gains, cfg)? {
            events.push(e);
        }
        records.push(FrameRecord {
            label: trajectory.waypoints[k].label.clone(),
            waypoint: k,
            frame: f,
            position: pos,
            kurtosis: report,
            gains,
            serving_cell: state.serving_cell(),
        });
    }
    Ok(TrajectoryReport {
        cells,
        records,
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BerMode {
    /// Only the measured transmitter is on; the detector threshold sits
    /// midway between its true off and on levels.
    Isolated,
    /// Every transmitter sends random payloads; the threshold sits midway
    /// between the measured cell's off level and its per-frame on-level
    /// estimate from the ID slots.
    Concurrent,
}

impl std::str::FromStr for BerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isolated" => Ok(BerMode::Isolated),
            "concurrent" => Ok(BerMode::Concurrent),
            other => Err(invariant("mode", format!("unknown BER mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for BerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BerMode::Isolated => "isolated",
            BerMode::Concurrent => "concurrent",
        })
    }
}

/// Monte Carlo payload BER of transmitter `tx_index` at `pos` over exactly
/// `bits` payload bits.
pub fn ber_at_point(
    scene: &Scene,
    pos: [f64; 2],
    tx_index: usize,
    bits: usize,
    mode: BerMode,
    rng: &mut SimRng,
) -> Result<f64> {
    if bits == 0 {
        return Err(Error::EmptyInput);
    }
    let measured = scene
        .transmitters
        .get(tx_index)
        .ok_or_else(|| invariant("tx_index", "no such transmitter"))?;
    let dark = scene.receiver.ambient_dc;
    let cb = codebook(scene);
    let genie_threshold = dark + scene.on_level(measured, pos)? / 2.0;
    let payload_bits = DEFAULT_PAYLOAD_BITS;

    let mut errors = 0usize;
    let mut remaining = bits;
    while remaining > 0 {
        let frames = match mode {
            BerMode::Isolated => vec![build_frame(
                measured.cell_id,
                random_payload(rng, payload_bits),
                payload_bits,
            )?],
            BerMode::Concurrent => active_frames(scene, rng, payload_bits)?,
        };
        let refs: Vec<Option<&Frame>> = match mode {
            BerMode::Isolated => (0..scene.transmitters.len())
                .map(|i| (i == tx_index).then_some(&frames[0]))
                .collect(),
            BerMode::Concurrent => frames.iter().map(Some).collect(),
        };
        let sent = refs[tx_index].expect("measured transmitter is active");
        let w = synthesize_received(scene, pos, &refs, rng)?;
        let threshold = match mode {
            BerMode::Isolated => genie_threshold,
            BerMode::Concurrent => {
                let levels = estimate_cell_gains(&extract_id_segment(&w)?, &cb, dark)?;
                let own = levels
                    .iter()
                    .find(|l| l.id == measured.id)
                    .expect("codebook covers every transmitter");
                dark + own.amps / 2.0
            }
        };
        let decoded = demodulate_ook(&w, threshold)?;
        let n = remaining.min(payload_bits);
        errors += sent.payload()[..n]
            .iter()
            .zip(&decoded[ID_BITS..ID_BITS + n])
            .filter(|(a, b)| a != b)
            .count();
        remaining -= n;
    }
    Ok(errors as f64 / bits as f64)
}

/// Per-transmitter BER over a grid of receiver positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerMap {
    pub nx: usize,
    pub ny: usize,
    pub mode: BerMode,
    pub bits_per_point: usize,
    /// Row-major cell centers.
    pub positions: Vec<[f64; 2]>,
    /// One row-major BER matrix per transmitter, ascending id.
    pub per_tx: Vec<(TxId, Vec<f64>)>,
    /// Elementwise maximum over transmitters.
    pub combined: Vec<f64>,
}

impl BerMap {
    pub fn ber_of(&self, id: TxId) -> Option<&[f64]> {
        self.per_tx
            .iter()
            .find(|(t, _)| *t == id)
            .map(|(_, v)| v.as_slice())
    }
}

/// Index of the first minimum of `values`.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in values.iter().enumerate() {
        if x < values[best] {
            best = i;
        }
    }
    best
}

/// BER map over an `nx * ny` cell-center grid.
///
/// Grid point `p` (row-major) and transmitter `i` (ascending id order) use
/// stream `(seed, p, i)`.
pub fn run_ber_map(
    scene: &Scene,
    nx: usize,
    ny: usize,
    bits_per_point: usize,
    mode: BerMode,
    seed: u64,
) -> Result<BerMap> {
    scene.validate()?;
    if bits_per_point == 0 {
        return Err(invariant("bits_per_point", "must be >= 1"));
    }
    let positions = grid_positions(scene, nx, ny)?;
    let order = scene.tx_order();
    let per_tx = ber_table(scene, &positions, &order, bits_per_point, mode, seed)?;
    let combined = (0..positions.len())
        .map(|p| per_tx.iter().map(|(_, v)| v[p]).fold(0.0, f64::max))
        .collect();
    Ok(BerMap {
        nx,
        ny,
        mode,
        bits_per_point,
        positions,
        per_tx,
        combined,
    })
}

fn ber_table(
    scene: &Scene,
    positions: &[[f64; 2]],
    order: &[usize],
    bits: usize,
    mode: BerMode,
    seed: u64,
) -> Result<Vec<(TxId, Vec<f64>)>> {
    let jobs: Vec<(usize, usize)> = (0..positions.len())
        .flat_map(|p| (0..order.len()).map(move |r| (p, r)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let mut rng = stream(seed, p as u64, r as u64);
            ber_at_point(scene, positions[p], order[r], bits, mode, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(order
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let v = (0..positions.len())
                .map(|p| values[p * order.len() + r])
                .collect();
            (scene.transmitters[i].id, v)
        })
        .collect())
}

/// BER measured at each waypoint of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBer {
    pub labels: Vec<String>,
    pub per_tx: Vec<(TxId, Vec<f64>)>,
    pub combined: Vec<f64>,
}

/// BER at each waypoint position; waypoint `k` and transmitter `i` use
/// stream `(seed, k, i)`.
pub fn run_path_ber(
    scene: &Scene,
    trajectory: &Trajectory,
    bits_per_point: usize,
    mode: BerMode,
    seed: u64,
) -> Result<PathBer> {
    scene.validate()?;
    trajectory.validate_in(scene)?;
    let positions: Vec<[f64; 2]> = trajectory.waypoints.iter().map(|w| w.pos).collect();
    let per_tx = ber_table(
        scene,
        &positions,
        &scene.tx_order(),
        bits_per_point,
        mode,
        seed,
    )?;
    let combined = (0..positions.len())
        .map(|p| per_tx.iter().map(|(_, v)| v[p]).fold(0.0, f64::max))
        .collect();
    Ok(PathBer {
        labels: trajectory
            .waypoints
            .iter()
            .map(|w| w.label.clone())
            .collect(),
        per_tx,
        combined,
    })
}
