//! Frames, NRZ-OOK waveform synthesis and demodulation.
//!
//! All transmitters are bit-synchronous: bit `k` of every active frame
//! occupies samples `k * samples_per_bit .. (k + 1) * samples_per_bit` of the
//! received waveform. The receiver front end (reference photodiode plus
//! high-pass stage) is modeled by exact mean removal on the analyzed
//! segment, and by a known dark level (the ambient photocurrent) when
//! absolute levels are needed.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invariant, Error, Result};
use crate::scene::{CellId, Scene, TxId};

pub const ID_BITS: usize = 2;
pub const DEFAULT_PAYLOAD_BITS: usize = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameLayout {
    pub samples_per_bit: usize,
    pub id_bits: usize,
    pub payload_bits: usize,
}

impl FrameLayout {
    pub fn new(samples_per_bit: usize, payload_bits: usize) -> Self {
        FrameLayout {
            samples_per_bit,
            id_bits: ID_BITS,
            payload_bits,
        }
    }

    pub fn frame_bits(&self) -> usize {
        self.id_bits + self.payload_bits
    }

    pub fn frame_samples(&self) -> usize {
        self.frame_bits() * self.samples_per_bit
    }

    pub fn id_samples(&self) -> usize {
        self.id_bits * self.samples_per_bit
    }
}

/// Cell-ID bits followed by payload bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    cell_id: CellId,
    payload: Vec<bool>,
}

impl Frame {
    pub fn cell_id(&self) -> CellId {
        self.cell_id
    }

    pub fn payload(&self) -> &[bool] {
        &self.payload
    }

    pub fn len(&self) -> usize {
        ID_BITS + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bit(&self, k: usize) -> bool {
        if k < ID_BITS {
            self.cell_id.0[k]
        } else {
            self.payload[k - ID_BITS]
        }
    }

    /// Serialized bit order: ID bits, then payload.
    pub fn bits(&self) -> Vec<bool> {
        self.cell_id
            .0
            .iter()
            .chain(&self.payload)
            .copied()
            .collect()
    }
}

/// Prepends `cell_id` to `payload`; the payload must have the configured
/// length `payload_bits`.
pub fn build_frame(cell_id: CellId, payload: Vec<bool>, payload_bits: usize) -> Result<Frame> {
    if payload.len() != payload_bits {
        return Err(Error::LengthMismatch {
            expected: payload_bits,
            actual: payload.len(),
        });
    }
    Ok(Frame { cell_id, payload })
}

pub fn random_payload<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Sampled photocurrent `y[n] = y(n Ts)` of one received frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    samples: Vec<f64>,
    ts: f64,
    layout: FrameLayout,
}

impl SampledWaveform {
    pub fn new(samples: Vec<f64>, ts: f64, layout: FrameLayout) -> Result<Self> {
        if !(ts > 0.0) {
            return Err(invariant("ts", "sampling period must be > 0"));
        }
        if layout.samples_per_bit == 0 {
            return Err(invariant("samples_per_bit", "must be >= 1"));
        }
        if samples.len() != layout.frame_samples() {
            return Err(Error::LengthMismatch {
                expected: layout.frame_samples(),
                actual: samples.len(),
            });
        }
        Ok(SampledWaveform {
            samples,
            ts,
            layout,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn layout(&self) -> FrameLayout {
        self.layout
    }

    /// Per-bit-slot sample means.
    pub fn slot_means(&self) -> Vec<f64> {
        slot_means(&self.samples, self.layout.samples_per_bit)
    }
}

fn slot_means(samples: &[f64], samples_per_bit: usize) -> Vec<f64> {
    samples
        .chunks_exact(samples_per_bit)
        .map(|c| c.iter().sum::<f64>() / samples_per_bit as f64)
        .collect()
}

/// The `(id, cell_id)` pairs of a scene, ordered by transmitter id.
pub fn codebook(scene: &Scene) -> Vec<(TxId, CellId)> {
    let mut cb: Vec<_> = scene
        .transmitters
        .iter()
        .map(|t| (t.id, t.cell_id))
        .collect();
    cb.sort_by_key(|(id, _)| *id);
    cb
}

/// Superimposed received waveform at receiver-plane point `rx_pos`.
///
/// `frames[i]` is what `scene.transmitters[i]` sends; `None` leaves that
/// transmitter dark for the whole frame. Noise samples are drawn from `rng`
/// in sample order (none are drawn when `noise_std` is zero).
pub fn synthesize_received<R: Rng + ?Sized>(
    scene: &Scene,
    rx_pos: [f64; 2],
    frames: &[Option<&Frame>],
    rng: &mut R,
) -> Result<SampledWaveform> {
    if frames.len() != scene.transmitters.len() {
        return Err(Error::LengthMismatch {
            expected: scene.transmitters.len(),
            actual: frames.len(),
        });
    }
    if !scene.contains(rx_pos) {
        return Err(Error::Geometry(format!(
            "receiver position ({}, {}) outside room",
            rx_pos[0], rx_pos[1]
        )));
    }
    let n_bits = frames
        .iter()
        .flatten()
        .map(|f| f.len())
        .next()
        .ok_or_else(|| invariant("frames", "at least one transmitter must be active"))?;
    if let Some(f) = frames.iter().flatten().find(|f| f.len() != n_bits) {
        return Err(Error::LengthMismatch {
            expected: n_bits,
            actual: f.len(),
        });
    }

    let rx = &scene.receiver;
    let spb = rx.samples_per_bit;
    let active: Vec<(f64, &Frame)> = scene
        .transmitters
        .iter()
        .zip(frames)
        .filter_map(|(tx, f)| f.map(|f| (tx, f)))
        .map(|(tx, f)| Ok((scene.on_level(tx, rx_pos)?, f)))
        .collect::<Result<_>>()?;

    let mut samples = Vec::with_capacity(n_bits * spb);
    for k in 0..n_bits {
        let level: f64 = rx.ambient_dc
            + active
                .iter()
                .filter(|(_, f)| f.bit(k))
                .map(|(on, _)| on)
                .sum::<f64>();
        samples.extend(std::iter::repeat_n(level, spb));
    }
    if rx.noise_std > 0.0 {
        for s in &mut samples {
            let z: f64 = rng.sample(StandardNormal);
            *s += rx.noise_std * z;
        }
    }
    SampledWaveform::new(
        samples,
        rx.sample_period(),
        FrameLayout::new(spb, n_bits - ID_BITS),
    )
}

/// Cell-ID part of a frame with its mean removed.
#[derive(Debug, Clone, PartialEq)]
pub struct IdSegment {
    /// Zero-mean samples.
    pub samples: Vec<f64>,
    /// The mean that was removed.
    pub dc: f64,
    pub samples_per_bit: usize,
}

impl IdSegment {
    /// Per-slot means with the removed DC restored.
    pub fn absolute_slot_means(&self) -> Vec<f64> {
        slot_means(&self.samples, self.samples_per_bit)
            .into_iter()
            .map(|m| m + self.dc)
            .collect()
    }
}

/// Separates the first `2 * samples_per_bit` samples and removes their mean.
pub fn extract_id_segment(w: &SampledWaveform) -> Result<IdSegment> {
    let n = w.layout.id_samples();
    if w.samples.len() < n || n == 0 {
        return Err(Error::TooShort {
            needed: n.max(1),
            actual: w.samples.len(),
        });
    }
    let seg = &w.samples[..n];
    let dc = seg.iter().sum::<f64>() / n as f64;
    Ok(IdSegment {
        samples: seg.iter().map(|s| s - dc).collect(),
        dc,
        samples_per_bit: w.layout.samples_per_bit,
    })
}

/// Received on-level estimate for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellLevel {
    pub id: TxId,
    pub amps: f64,
}

/// Estimates each cell's received on-level from the ID slots.
///
/// A cell's level is read from the ID slot in which it alone transmits a 1:
/// the slot mean with the segment DC restored, minus the front end's dark
/// level. With complementary IDs (`01`/`10`) each cell owns one slot. Cells
/// that never transmit alone are unsupported.
pub fn estimate_cell_gains(
    segment: &IdSegment,
    codebook: &[(TxId, CellId)],
    dark_level: f64,
) -> Result<Vec<CellLevel>> {
    if segment.samples.len() != ID_BITS * segment.samples_per_bit {
        return Err(Error::LengthMismatch {
            expected: ID_BITS * segment.samples_per_bit,
            actual: segment.samples.len(),
        });
    }
    let slots = segment.absolute_slot_means();
    let mut levels: Vec<CellLevel> = codebook
        .iter()
        .map(|(id, cell)| {
            let own = (0..ID_BITS).find(|&k| {
                cell.0[k] && codebook.iter().all(|(o, oc)| o == id || !oc.0[k])
            });
            match own {
                Some(k) => Ok(CellLevel {
                    id: *id,
                    amps: slots[k] - dark_level,
                }),
                None => Err(Error::Unsupported(format!(
                    "cell {id} (ID {cell}) has no exclusive ID slot; only complementary ID pairs are supported"
                ))),
            }
        })
        .collect::<Result<_>>()?;
    levels.sort_by_key(|l| l.id);
    Ok(levels)
}

/// Slot-mean OOK detector: a bit is 1 iff its slot mean exceeds `threshold`
/// (exact ties decode to 0).
pub fn demodulate_ook(w: &SampledWaveform, threshold: f64) -> Result<Vec<bool>> {
    if !threshold.is_finite() {
        return Err(invariant("threshold", "must be finite"));
    }
    Ok(w.slot_means().into_iter().map(|m| m > threshold).collect())
}
