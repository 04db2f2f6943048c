use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// Best-so-far energy at `t` seconds after the solver started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub energy: f64,
}

/// Minimum spacing of heartbeat points.
pub const HEARTBEAT: Duration = Duration::from_millis(10);

/// Records improvements plus a heartbeat at most every [`HEARTBEAT`].
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    start: Instant,
    last_beat: Instant,
    best: f64,
    points: Vec<TracePoint>,
}

impl TraceRecorder {
    pub fn new(start: Instant) -> Self {
        TraceRecorder {
            start,
            last_beat: start,
            best: f64::INFINITY,
            points: Vec::new(),
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Records `energy` if it improves the best so far.
    pub fn improve(&mut self, energy: f64) {
        if energy < self.best {
            self.best = energy;
            self.push(Instant::now(), energy);
        }
    }

    /// Records the current best if a heartbeat interval has passed.
    pub fn heartbeat(&mut self) {
        let now = Instant::now();
        if self.best.is_finite() && now.duration_since(self.last_beat) >= HEARTBEAT {
            self.last_beat = now;
            self.push(now, self.best);
        }
    }

    fn push(&mut self, now: Instant, energy: f64) {
        let t = now.duration_since(self.start).as_secs_f64();
        push_point(&mut self.points, TracePoint { t, energy });
    }

    pub fn into_points(self) -> Vec<TracePoint> {
        self.points
    }
}

/// Appends keeping times strictly increasing and energies non-increasing.
fn push_point(points: &mut Vec<TracePoint>, p: TracePoint) {
    match points.last_mut() {
        Some(last) if p.t <= last.t => {
            last.energy = last.energy.min(p.energy);
        }
        Some(last) => {
            let energy = p.energy.min(last.energy);
            points.push(TracePoint { t: p.t, energy });
        }
        None => points.push(p),
    }
}

/// Merges per-worker traces into the global best-so-far trace, ending at
/// `final_best` no later than `end`.
pub fn merge_traces(traces: impl IntoIterator<Item = Vec<TracePoint>>, final_best: f64, end: f64) -> Vec<TracePoint> {
    let mut all: Vec<TracePoint> = traces.into_iter().flatten().collect();
    all.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.energy.total_cmp(&b.energy)));
    let mut merged = Vec::with_capacity(all.len());
    for p in all {
        push_point(&mut merged, p);
    }
    match merged.last() {
        Some(last) if last.energy == final_best => {}
        Some(last) => {
            let t = if end > last.t { end } else { next_up(last.t) };
            merged.push(TracePoint { t, energy: final_best });
        }
        None => merged.push(TracePoint {
            t: end.max(0.0),
            energy: final_best,
        }),
    }
    merged
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: f64, energy: f64) -> TracePoint {
        TracePoint { t, energy }
    }

    #[test]
    fn merge_takes_running_minimum() {
        let a = vec![p(0.1, -1.0), p(0.3, -3.0)];
        let b = vec![p(0.2, -2.0), p(0.25, -1.5), p(0.3, -2.5)];
        let m = merge_traces([a, b], -3.0, 0.4);
        assert_eq!(m, vec![p(0.1, -1.0), p(0.2, -2.0), p(0.25, -2.0), p(0.3, -3.0)]);
    }

    #[test]
    fn merge_appends_final_best() {
        let m = merge_traces([vec![p(0.1, -1.0)]], -2.0, 0.5);
        assert_eq!(m.last(), Some(&p(0.5, -2.0)));
        let empty = merge_traces(Vec::<Vec<TracePoint>>::new(), 4.0, 0.0);
        assert_eq!(empty, vec![p(0.0, 4.0)]);
    }

    #[test]
    fn recorder_only_keeps_improvements() {
        let mut r = TraceRecorder::new(Instant::now());
        r.improve(3.0);
        r.improve(4.0);
        r.improve(1.0);
        let pts = r.into_points();
        assert!(pts.len() <= 2);
        assert_eq!(pts.last().unwrap().energy, 1.0);
    }
}
