//! Canonical event log. The log is encoded as the magic line
//! `DETMIP-EVENTLOG v1\n` followed by each event's canonical bytes
//! (little-endian integers, IEEE bit patterns for floats, length-prefixed
//! sequences); its SHA-256 is the run's determinism certificate.

use serde::{Deserialize, Serialize};

use crate::encode::{sha256_hex, Encoder};

pub const EVENT_LOG_MAGIC: &[u8] = b"DETMIP-EVENTLOG v1\n";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub lower_bound: f64,
    pub incumbent: Option<f64>,
    pub queue_size: u64,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub cuts: u64,
    pub conflicts: u64,
    pub work_units: Vec<u64>,
    /// Start node of each worker's dive this round.
    pub dived: Vec<Option<u64>>,
    pub dives: Vec<u64>,
    pub salt: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Header {
        workers: u64,
        seed: u64,
        num_vars: u64,
        num_cons: u64,
    },
    Root {
        bound: f64,
        cuts: u64,
        lp_iterations: u64,
    },
    Incumbent {
        nodes: u64,
        worker: u64,
        objective: f64,
    },
    Round(RoundRecord),
    Restart {
        round: u64,
        fixed: u64,
    },
    Finish {
        status: String,
        objective: Option<f64>,
        bound: f64,
        nodes: u64,
        lp_iterations: u64,
    },
}

impl Event {
    pub fn encode(&self, enc: &mut Encoder) {
        match self {
            Event::Header {
                workers,
                seed,
                num_vars,
                num_cons,
            } => {
                enc.put_tag(0);
                enc.put_u64(*workers);
                enc.put_u64(*seed);
                enc.put_u64(*num_vars);
                enc.put_u64(*num_cons);
            }
            Event::Root {
                bound,
                cuts,
                lp_iterations,
            } => {
                enc.put_tag(1);
                enc.put_f64(*bound);
                enc.put_u64(*cuts);
                enc.put_u64(*lp_iterations);
            }
            Event::Incumbent {
                nodes,
                worker,
                objective,
            } => {
                enc.put_tag(2);
                enc.put_u64(*nodes);
                enc.put_u64(*worker);
                enc.put_f64(*objective);
            }
            Event::Round(r) => {
                enc.put_tag(3);
                enc.put_u64(r.round);
                enc.put_f64(r.lower_bound);
                enc.put_opt_f64(r.incumbent);
                enc.put_u64(r.queue_size);
                enc.put_u64(r.nodes);
                enc.put_u64(r.lp_iterations);
                enc.put_u64(r.cuts);
                enc.put_u64(r.conflicts);
                enc.put_usize(r.work_units.len());
                for w in &r.work_units {
                    enc.put_u64(*w);
                }
                enc.put_usize(r.dived.len());
                for d in &r.dived {
                    enc.put_u64(d.unwrap_or(u64::MAX));
                }
                enc.put_usize(r.dives.len());
                for d in &r.dives {
                    enc.put_u64(*d);
                }
                enc.put_u64(r.salt);
            }
            Event::Restart { round, fixed } => {
                enc.put_tag(4);
                enc.put_u64(*round);
                enc.put_u64(*fixed);
            }
            Event::Finish {
                status,
                objective,
                bound,
                nodes,
                lp_iterations,
            } => {
                enc.put_tag(5);
                enc.put_usize(status.len());
                for b in status.bytes() {
                    enc.put_tag(b);
                }
                enc.put_opt_f64(*objective);
                enc.put_f64(*bound);
                enc.put_u64(*nodes);
                enc.put_u64(*lp_iterations);
            }
        }
    }

    pub fn digest(&self) -> String {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.digest_hex()
    }
}

/// Append-only list of events.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        for e in &self.events {
            e.encode(&mut enc);
        }
        let mut out = EVENT_LOG_MAGIC.to_vec();
        out.extend_from_slice(enc.bytes());
        out
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}

/// Index of the first event where `a` and `b` differ, if any (a length
/// difference counts as a divergence at the shorter length).
pub fn first_divergence(a: &EventLog, b: &EventLog) -> Option<usize> {
    let common = a.events.len().min(b.events.len());
    (0..common)
        .find(|&i| a.events[i].digest() != b.events[i].digest())
        .or((a.events.len() != b.events.len()).then_some(common))
}

/// Per-thread timing and effort. Times are wall-clock seconds and feed
/// reporting only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThreadStats {
    /// Seconds spent computing (E).
    pub work_time: f64,
    /// Seconds spent waiting at barriers (W).
    pub wait_time: f64,
    pub work_units: u64,
    pub dives: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_location() {
        let mut a = EventLog::new();
        a.push(Event::Restart { round: 1, fixed: 2 });
        a.push(Event::Restart { round: 2, fixed: 2 });
        let mut b = a.clone();
        assert_eq!(first_divergence(&a, &b), None);
        assert_eq!(a.hash(), b.hash());
        b.push(Event::Restart { round: 3, fixed: 0 });
        assert_eq!(first_divergence(&a, &b), Some(2));
        let mut c = EventLog::new();
        c.push(Event::Restart { round: 1, fixed: 2 });
        c.push(Event::Restart { round: 2, fixed: 3 });
        assert_eq!(first_divergence(&a, &c), Some(1));
        assert!(a.to_bytes().starts_with(EVENT_LOG_MAGIC));
    }
}
