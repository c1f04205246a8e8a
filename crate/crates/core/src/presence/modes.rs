use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use super::PresenceError;

pub const PULSE_MS_RANGE: RangeInclusive<f64> = 100.0..=150.0;

/// Per-frame vehicle presence for one detection zone.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceStream {
    pub zone_id: String,
    pub frame_rate: f64,
    pub states: Vec<bool>,
}

impl PresenceStream {
    pub fn new(zone_id: impl Into<String>, frame_rate: f64, states: Vec<bool>) -> Result<Self, PresenceError> {
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(PresenceError::InvalidStream(format!("frame rate {frame_rate}")));
        }
        if states.is_empty() {
            return Err(PresenceError::InvalidStream("no frames".to_string()));
        }
        Ok(Self {
            zone_id: zone_id.into(),
            frame_rate,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Maximal runs of presence as half-open frame ranges.
    pub fn runs(&self) -> Vec<ModeEvent> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, &s) in self.states.iter().enumerate() {
            match (s, start) {
                (true, None) => start = Some(i),
                (false, Some(st)) => {
                    out.push(ModeEvent { start: st, end: i });
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(st) = start {
            out.push(ModeEvent {
                start: st,
                end: self.states.len(),
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorMode {
    Pulse,
    Controlled,
    ContinuousPresence,
    LimitedPresence,
}

impl DetectorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorMode::Pulse => "pulse",
            DetectorMode::Controlled => "controlled",
            DetectorMode::ContinuousPresence => "continuous_presence",
            DetectorMode::LimitedPresence => "limited_presence",
        }
    }
}

impl fmt::Display for DetectorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            DetectorMode::Pulse,
            DetectorMode::Controlled,
            DetectorMode::ContinuousPresence,
            DetectorMode::LimitedPresence,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| format!("unknown detector mode {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    /// Pulse length for pulse and controlled modes.
    pub pulse_ms: f64,
    /// Cap on a limited-presence call.
    pub max_ms: f64,
}

impl Default for ModeParams {
    fn default() -> Self {
        Self {
            pulse_ms: 125.0,
            max_ms: 1000.0,
        }
    }
}

/// Half-open frame range `[start, end)` during which the call is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ModeEvent {
    pub start: usize,
    pub end: usize,
}

impl ModeEvent {
    pub fn frames(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSignal {
    pub mode: DetectorMode,
    pub events: Vec<ModeEvent>,
}

impl ModeSignal {
    /// Per-frame call state over `len` frames.
    pub fn to_states(&self, len: usize) -> Vec<bool> {
        let mut states = vec![false; len];
        for e in &self.events {
            for s in &mut states[e.start.min(len)..e.end.min(len)] {
                *s = true;
            }
        }
        states
    }
}

const FRAME_EPS: f64 = 1e-9;

/// Milliseconds to whole frames, rounding up, at least one frame.
pub fn ms_to_frames(ms: f64, frame_rate: f64) -> usize {
    let exact = ms * frame_rate / 1000.0;
    ((exact - FRAME_EPS).ceil().max(1.0)) as usize
}

fn positive(name: &str, v: f64) -> Result<(), PresenceError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(PresenceError::InvalidParam(format!("{name} must be positive, got {v}")))
    }
}

/// Converts per-frame presence into the events a detector in `mode` emits.
///
/// Pulse and controlled modes fire a fixed-length call at each rising edge;
/// a call is cut short at the end of the stream or where the next call
/// starts. Limited presence caps each presence run at `max_ms`, rounded down
/// to whole frames so no call exceeds the cap.
pub fn to_mode_signal(
    ps: &PresenceStream,
    mode: DetectorMode,
    params: &ModeParams,
) -> Result<ModeSignal, PresenceError> {
    let runs = ps.runs();
    let events = match mode {
        DetectorMode::Pulse | DetectorMode::Controlled => {
            if mode == DetectorMode::Pulse && !PULSE_MS_RANGE.contains(&params.pulse_ms) {
                return Err(PresenceError::PulseOutOfRange(params.pulse_ms));
            }
            positive("pulse_ms", params.pulse_ms)?;
            let width = ms_to_frames(params.pulse_ms, ps.frame_rate);
            let mut events: Vec<ModeEvent> = Vec::with_capacity(runs.len());
            for (k, run) in runs.iter().enumerate() {
                let limit = runs.get(k + 1).map_or(ps.len(), |next| next.start);
                events.push(ModeEvent {
                    start: run.start,
                    end: (run.start + width).min(limit),
                });
            }
            events
        }
        DetectorMode::ContinuousPresence => runs,
        DetectorMode::LimitedPresence => {
            positive("max_ms", params.max_ms)?;
            let cap = (params.max_ms * ps.frame_rate / 1000.0 + FRAME_EPS).floor() as usize;
            if cap == 0 {
                return Err(PresenceError::InvalidParam(format!(
                    "max_ms {} is shorter than one frame at {} fps",
                    params.max_ms, ps.frame_rate
                )));
            }
            runs.into_iter()
                .map(|r| ModeEvent {
                    start: r.start,
                    end: r.end.min(r.start + cap),
                })
                .collect()
        }
    };
    Ok(ModeSignal { mode, events })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(states: Vec<bool>) -> PresenceStream {
        PresenceStream::new("z0", 15.0, states).unwrap()
    }

    #[test]
    fn stream_validation() {
        assert!(PresenceStream::new("z", 0.0, vec![true]).is_err());
        assert!(PresenceStream::new("z", 15.0, vec![]).is_err());
    }

    #[test]
    fn all_false_gives_no_events() {
        let ps = stream(vec![false; 20]);
        for mode in [
            DetectorMode::Pulse,
            DetectorMode::Controlled,
            DetectorMode::ContinuousPresence,
            DetectorMode::LimitedPresence,
        ] {
            assert!(to_mode_signal(&ps, mode, &ModeParams::default())
                .unwrap()
                .events
                .is_empty());
        }
    }

    #[test]
    fn continuous_and_limited_on_one_run() {
        let mut states = vec![false; 40];
        states[5..35].iter_mut().for_each(|s| *s = true);
        let ps = stream(states);
        let c = to_mode_signal(&ps, DetectorMode::ContinuousPresence, &ModeParams::default()).unwrap();
        assert_eq!(c.events, vec![ModeEvent { start: 5, end: 35 }]);
        let l = to_mode_signal(&ps, DetectorMode::LimitedPresence, &ModeParams::default()).unwrap();
        assert_eq!(l.events, vec![ModeEvent { start: 5, end: 20 }]);
    }

    #[test]
    fn pulse_bounds_and_width() {
        let ps = stream(vec![false, true, true, true, true, false]);
        for bad in [99.9, 150.1, 0.0] {
            let p = ModeParams { pulse_ms: bad, ..ModeParams::default() };
            assert_eq!(
                to_mode_signal(&ps, DetectorMode::Pulse, &p),
                Err(PresenceError::PulseOutOfRange(bad))
            );
        }
        // 125 ms at 15 fps is 1.875 frames, rounded up to 2
        let s = to_mode_signal(&ps, DetectorMode::Pulse, &ModeParams::default()).unwrap();
        assert_eq!(s.events, vec![ModeEvent { start: 1, end: 3 }]);
        // 100 ms at 10 fps is exactly 1 frame
        assert_eq!(ms_to_frames(100.0, 10.0), 1);
        assert_eq!(ms_to_frames(1.0, 10.0), 1);
    }

    #[test]
    fn controlled_accepts_any_positive_duration_and_stays_disjoint() {
        let ps = stream(vec![true, false, true, false, false, false]);
        let p = ModeParams { pulse_ms: 1000.0, ..ModeParams::default() };
        let s = to_mode_signal(&ps, DetectorMode::Controlled, &p).unwrap();
        assert_eq!(
            s.events,
            vec![ModeEvent { start: 0, end: 2 }, ModeEvent { start: 2, end: 6 }]
        );
        let p = ModeParams { pulse_ms: -1.0, ..ModeParams::default() };
        assert!(to_mode_signal(&ps, DetectorMode::Controlled, &p).is_err());
    }

    #[test]
    fn limited_shorter_than_a_frame_is_rejected() {
        let ps = stream(vec![true; 3]);
        let p = ModeParams { max_ms: 10.0, ..ModeParams::default() };
        assert!(to_mode_signal(&ps, DetectorMode::LimitedPresence, &p).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ["pulse", "controlled", "continuous_presence", "limited_presence"] {
            assert_eq!(m.parse::<DetectorMode>().unwrap().as_str(), m);
        }
        assert!("presence".parse::<DetectorMode>().is_err());
    }
}
