//! Kurtosis-triggered handover decisions.
//!
//! The receiver tracks the kurtosis of each frame's cell-ID segment. A
//! relative maximum of that series marks a candidate cell boundary; the
//! machine then waits for the per-cell ID levels to show which side the
//! user ends up on:
//!
//! * `Connected -> BoundaryPending` when the frame `peak_window` frames back
//!   is a relative maximum (see [`detect_relative_max`]) and, somewhere in
//!   that window, the two strongest cells are within `gain_hysteresis` of
//!   each other.
//! * `BoundaryPending -> Connected` with a [`HandoverEvent`] once the best
//!   other cell has exceeded `gain_hysteresis` times the serving level for
//!   `confirm_frames` consecutive frames.
//! * `BoundaryPending -> Connected` without an event once the serving cell
//!   has been dominant by the same ratio for `confirm_frames` consecutive
//!   frames (the user turned back).
//!
//! Dominance runs are counted on every frame, so a run that began while the
//! peak was still being confirmed counts toward the decision. Peaks at or
//! before the last state change are ignored.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{invariant, Error, Result};
use crate::phy::CellLevel;
use crate::scene::TxId;
use crate::stats::KurtosisReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HandoverConfig {
    /// Frames on each side of a candidate peak.
    pub peak_window: usize,
    /// Required rise of the peak above the window minimum (kurtosis units).
    pub peak_margin: f64,
    pub confirm_frames: usize,
    /// Level ratio treated as dominance; >= 1.
    pub gain_hysteresis: f64,
}

impl Default for HandoverConfig {
    fn default() -> Self {
        HandoverConfig {
            peak_window: 2,
            peak_margin: 0.3,
            confirm_frames: 3,
            gain_hysteresis: 1.1,
        }
    }
}

impl HandoverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.peak_window == 0 {
            return Err(invariant("peak_window", "must be >= 1"));
        }
        if !(self.peak_margin > 0.0 && self.peak_margin.is_finite()) {
            return Err(invariant("peak_margin", "must be > 0"));
        }
        if self.confirm_frames == 0 {
            return Err(invariant("confirm_frames", "must be >= 1"));
        }
        if !(self.gain_hysteresis >= 1.0 && self.gain_hysteresis.is_finite()) {
            return Err(invariant("gain_hysteresis", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Connected,
    BoundaryPending,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HandoverEvent {
    /// Frame at which the handover was confirmed.
    pub frame_index: u64,
    pub from_cell: TxId,
    pub to_cell: TxId,
    pub kurtosis_at_peak: f64,
}

impl HandoverEvent {
    pub const CSV_HEADER: &'static str = "frame_index,from_cell,to_cell,kurtosis_at_peak";

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{}",
            self.frame_index, self.from_cell, self.to_cell, self.kurtosis_at_peak
        )
    }
}

/// Relative maxima of `series`.
///
/// Index `k` is reported when a full window `k - window ..= k + window` fits,
/// `series[k]` is the largest value in it, it clears the window minimum by
/// `margin`, and no earlier index in the window ties it (plateaus report
/// their first index).
pub fn detect_relative_max(series: &[f64], window: usize, margin: f64) -> Result<Vec<usize>> {
    if window == 0 {
        return Err(invariant("window", "must be >= 1"));
    }
    let needed = 2 * window + 1;
    if series.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: series.len(),
        });
    }
    Ok((window..series.len() - window)
        .filter(|&k| is_window_peak(&series[k - window..=k + window], window, margin))
        .collect())
}

fn is_window_peak(win: &[f64], center: usize, margin: f64) -> bool {
    let v = win[center];
    let min = win.iter().copied().fold(f64::INFINITY, f64::min);
    win.iter().all(|&x| v >= x) && v >= min + margin && !win[..center].contains(&v)
}

#[derive(Debug, Clone)]
struct Observation {
    frame: u64,
    kurtosis: f64,
    levels: Vec<CellLevel>,
}

/// Handover state of one receiver.
#[derive(Debug, Clone)]
pub struct HandoverState {
    cells: Vec<TxId>,
    serving: TxId,
    phase: Phase,
    history: VecDeque<Observation>,
    next_frame: u64,
    last_transition: Option<u64>,
    peak_kurtosis: f64,
    switch_run: usize,
    stay_run: usize,
}

impl HandoverState {
    pub fn new(cells: &[TxId], serving: TxId) -> Result<Self> {
        if !cells.contains(&serving) {
            return Err(Error::UnknownCell(serving.0));
        }
        let mut cells = cells.to_vec();
        cells.sort();
        cells.dedup();
        if cells.len() < 2 {
            return Err(invariant("cells", "handover needs at least 2 cells"));
        }
        Ok(HandoverState {
            cells,
            serving,
            phase: Phase::Connected,
            history: VecDeque::new(),
            next_frame: 0,
            last_transition: None,
            peak_kurtosis: f64::NAN,
            switch_run: 0,
            stay_run: 0,
        })
    }

    pub fn serving_cell(&self) -> TxId {
        self.serving
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Number of frames processed so far.
    pub fn frames_seen(&self) -> u64 {
        self.next_frame
    }

    /// Feeds one frame's kurtosis and per-cell levels.
    pub fn process_frame(
        &mut self,
        report: &KurtosisReport,
        gains: &[CellLevel],
        cfg: &HandoverConfig,
    ) -> Result<Option<HandoverEvent>> {
        let levels = self.checked_levels(gains)?;
        let frame = self.next_frame;
        self.next_frame += 1;

        let window_len = 2 * cfg.peak_window + 1;
        self.history.push_back(Observation {
            frame,
            kurtosis: report.kurtosis,
            levels,
        });
        while self.history.len() > window_len {
            self.history.pop_front();
        }
        self.update_runs(cfg);

        if self.phase == Phase::Connected && self.history.len() == window_len {
            let center = &self.history[cfg.peak_window];
            let after_last = self.last_transition.is_none_or(|t| center.frame > t);
            let series: Vec<f64> = self.history.iter().map(|o| o.kurtosis).collect();
            if after_last
                && is_window_peak(&series, cfg.peak_window, cfg.peak_margin)
                && self
                    .history
                    .iter()
                    .any(|o| top_two_close(&o.levels, cfg.gain_hysteresis))
            {
                self.phase = Phase::BoundaryPending;
                self.peak_kurtosis = center.kurtosis;
            }
        }

        if self.phase == Phase::BoundaryPending {
            if self.switch_run >= cfg.confirm_frames {
                let latest = self.history.back().expect("just pushed");
                let (to, _) = best_other(&latest.levels, self.serving);
                let event = HandoverEvent {
                    frame_index: frame,
                    from_cell: self.serving,
                    to_cell: to,
                    kurtosis_at_peak: self.peak_kurtosis,
                };
                self.serving = to;
                self.settle(frame);
                return Ok(Some(event));
            }
            if self.stay_run >= cfg.confirm_frames {
                self.settle(frame);
            }
        }
        Ok(None)
    }

    fn settle(&mut self, frame: u64) {
        self.phase = Phase::Connected;
        self.last_transition = Some(frame);
        self.switch_run = 0;
        self.stay_run = 0;
    }

    fn update_runs(&mut self, cfg: &HandoverConfig) {
        let latest = self.history.back().expect("history is non-empty");
        let serving = level_of(&latest.levels, self.serving);
        let (_, other) = best_other(&latest.levels, self.serving);
        if other > cfg.gain_hysteresis * serving && other > serving {
            self.switch_run += 1;
            self.stay_run = 0;
        } else if serving > cfg.gain_hysteresis * other && serving > other {
            self.stay_run += 1;
            self.switch_run = 0;
        } else {
            self.switch_run = 0;
            self.stay_run = 0;
        }
    }

    fn checked_levels(&self, gains: &[CellLevel]) -> Result<Vec<CellLevel>> {
        if let Some(g) = gains.iter().find(|g| !self.cells.contains(&g.id)) {
            return Err(Error::UnknownCell(g.id.0));
        }
        let mut levels = gains.to_vec();
        levels.sort_by_key(|g| g.id);
        let ids: Vec<TxId> = levels.iter().map(|g| g.id).collect();
        if ids != self.cells {
            return Err(invariant("gains", "must list every cell exactly once"));
        }
        Ok(levels)
    }
}

fn level_of(levels: &[CellLevel], id: TxId) -> f64 {
    levels
        .iter()
        .find(|l| l.id == id)
        .map(|l| l.amps)
        .unwrap_or(f64::NEG_INFINITY)
}

/// Strongest cell other than `serving` (lowest id on ties).
fn best_other(levels: &[CellLevel], serving: TxId) -> (TxId, f64) {
    levels
        .iter()
        .filter(|l| l.id != serving)
        .fold((serving, f64::NEG_INFINITY), |best, l| {
            if l.amps > best.1 {
                (l.id, l.amps)
            } else {
                best
            }
        })
}

fn top_two_close(levels: &[CellLevel], hysteresis: f64) -> bool {
    let mut v: Vec<f64> = levels.iter().map(|l| l.amps).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.len() >= 2 && v[0] <= hysteresis * v[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::KurtosisClass;

    fn rep(k: f64) -> KurtosisReport {
        KurtosisReport {
            kurtosis: k,
            excess: k - 3.0,
            mean: 0.0,
            std: 1.0,
            n: 100,
            classification: KurtosisClass::from_excess(k - 3.0),
        }
    }

    fn lv(a: f64, b: f64) -> Vec<CellLevel> {
        vec![
            CellLevel {
                id: TxId(1),
                amps: a,
            },
            CellLevel {
                id: TxId(2),
                amps: b,
            },
        ]
    }

    fn run(trace: &[(f64, f64, f64)]) -> (Vec<HandoverEvent>, Vec<Phase>, HandoverState) {
        let cfg = HandoverConfig::default();
        let mut st = HandoverState::new(&[TxId(1), TxId(2)], TxId(1)).unwrap();
        let mut events = vec![];
        let mut phases = vec![];
        for &(k, a, b) in trace {
            if let Some(e) = st.process_frame(&rep(k), &lv(a, b), &cfg).unwrap() {
                events.push(e);
            }
            phases.push(st.phase());
        }
        (events, phases, st)
    }

    #[test]
    fn relative_max_examples() {
        assert_eq!(
            detect_relative_max(&[1.0, 1.0, 3.0, 1.0, 1.0], 1, 0.5).unwrap(),
            vec![2]
        );
        let inc: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(detect_relative_max(&inc, 1, 0.5).unwrap().is_empty());
        assert_eq!(
            detect_relative_max(&[1.0, 3.0, 3.0, 1.0], 1, 0.5).unwrap(),
            vec![1]
        );
        assert!(matches!(
            detect_relative_max(&[1.0, 2.0], 1, 0.1),
            Err(Error::TooShort { .. })
        ));
        assert!(detect_relative_max(&[1.0, 2.0, 1.0], 0, 0.1).is_err());
    }

    #[test]
    fn relative_max_respects_margin() {
        assert!(detect_relative_max(&[1.0, 1.2, 1.0], 1, 0.5)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn dominant_serving_cell_stays_connected() {
        let trace: Vec<_> = (0..40)
            .map(|i| (1.5 + 0.01 * (i % 2) as f64, 3.0, 1.0))
            .collect();
        let (events, phases, st) = run(&trace);
        assert!(events.is_empty());
        assert!(phases.iter().all(|p| *p == Phase::Connected));
        assert_eq!(st.serving_cell(), TxId(1));
    }

    fn approach_then(after: &[(f64, f64, f64)]) -> Vec<(f64, f64, f64)> {
        let mut t = vec![(1.2, 2.0, 1.0); 6];
        t.extend([(1.8, 1.4, 1.0), (2.9, 1.0, 1.0), (2.0, 1.3, 1.0)]);
        t.extend_from_slice(after);
        t
    }

    #[test]
    fn turning_back_cancels_without_event() {
        let trace = approach_then(&[
            (1.3, 1.6, 1.0),
            (1.2, 2.0, 1.0),
            (1.2, 2.0, 1.0),
            (1.2, 2.0, 1.0),
            (1.1, 2.2, 1.0),
        ]);
        let (events, phases, st) = run(&trace);
        assert!(events.is_empty());
        assert!(phases.contains(&Phase::BoundaryPending));
        assert_eq!(*phases.last().unwrap(), Phase::Connected);
        assert_eq!(st.serving_cell(), TxId(1));
    }

    #[test]
    fn crossing_emits_one_event() {
        let trace = approach_then(&[
            (1.4, 1.0, 1.6),
            (1.2, 1.0, 2.0),
            (1.2, 1.0, 2.0),
            (1.2, 1.0, 2.0),
            (1.1, 1.0, 2.1),
        ]);
        let (events, _, st) = run(&trace);
        assert_eq!(events.len(), 1);
        let e = events[0];
        assert_eq!((e.from_cell, e.to_cell), (TxId(1), TxId(2)));
        assert_eq!(e.kurtosis_at_peak, 2.9);
        // Peak at frame 7; other cell dominant from frame 9 on.
        assert_eq!(e.frame_index, 11);
        assert_eq!(st.serving_cell(), TxId(2));
    }

    #[test]
    fn unknown_or_missing_cells_rejected() {
        let cfg = HandoverConfig::default();
        let mut st = HandoverState::new(&[TxId(1), TxId(2)], TxId(1)).unwrap();
        let bad = vec![
            CellLevel {
                id: TxId(1),
                amps: 1.0,
            },
            CellLevel {
                id: TxId(7),
                amps: 1.0,
            },
        ];
        assert!(matches!(
            st.process_frame(&rep(1.0), &bad, &cfg),
            Err(Error::UnknownCell(7))
        ));
        let short = vec![CellLevel {
            id: TxId(1),
            amps: 1.0,
        }];
        assert!(st.process_frame(&rep(1.0), &short, &cfg).is_err());
        assert!(HandoverState::new(&[TxId(1), TxId(2)], TxId(3)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(HandoverConfig::default().validate().is_ok());
        let bad = HandoverConfig {
            gain_hysteresis: 0.9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = HandoverConfig {
            confirm_frames: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
