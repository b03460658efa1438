use serde::{Deserialize, Serialize};

use crate::domain::Direction;
use crate::encode::Encoder;

/// One observed objective degradation per unit of branching distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcObservation {
    pub var: usize,
    pub direction: Direction,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pseudocosts {
    down_sum: Vec<f64>,
    down_count: Vec<u64>,
    up_sum: Vec<f64>,
    up_count: Vec<u64>,
}

impl Pseudocosts {
    pub fn new(n: usize) -> Self {
        Self {
            down_sum: vec![0.0; n],
            down_count: vec![0; n],
            up_sum: vec![0.0; n],
            up_count: vec![0; n],
        }
    }

    pub fn record(&mut self, obs: &PcObservation) {
        let gain = obs.gain.max(0.0);
        match obs.direction {
            Direction::Down => {
                self.down_sum[obs.var] += gain;
                self.down_count[obs.var] += 1;
            }
            Direction::Up => {
                self.up_sum[obs.var] += gain;
                self.up_count[obs.var] += 1;
            }
        }
    }

    pub fn count(&self, var: usize, direction: Direction) -> u64 {
        match direction {
            Direction::Down => self.down_count[var],
            Direction::Up => self.up_count[var],
        }
    }

    pub fn average(&self, var: usize, direction: Direction) -> Option<f64> {
        let (sum, count) = match direction {
            Direction::Down => (self.down_sum[var], self.down_count[var]),
            Direction::Up => (self.up_sum[var], self.up_count[var]),
        };
        (count > 0).then(|| sum / count as f64)
    }

    pub fn initialized(&self, var: usize) -> bool {
        self.down_count[var] > 0 && self.up_count[var] > 0
    }

    /// Mean over all observed variables in one direction, or 1 when nothing
    /// has been observed.
    pub fn mean(&self, direction: Direction) -> f64 {
        let (sums, counts) = match direction {
            Direction::Down => (&self.down_sum, &self.down_count),
            Direction::Up => (&self.up_sum, &self.up_count),
        };
        let (mut s, mut c) = (0.0, 0u64);
        for (sum, count) in sums.iter().zip(counts) {
            if *count > 0 {
                s += sum / *count as f64;
                c += 1;
            }
        }
        if c == 0 {
            1.0
        } else {
            s / c as f64
        }
    }

    /// Product score `max(d, eps) * max(u, eps)` for branching on `var` with
    /// fractional part `f`.
    pub fn score(&self, var: usize, f: f64) -> f64 {
        let d = self.average(var, Direction::Down).unwrap_or(0.0) * f;
        let u = self.average(var, Direction::Up).unwrap_or(0.0) * (1.0 - f);
        d.max(1e-6) * u.max(1e-6)
    }

    /// Estimated objective increase to make `var` integral.
    pub fn estimate(&self, var: usize, f: f64) -> f64 {
        let d = self
            .average(var, Direction::Down)
            .unwrap_or_else(|| self.mean(Direction::Down));
        let u = self
            .average(var, Direction::Up)
            .unwrap_or_else(|| self.mean(Direction::Up));
        (d * f).min(u * (1.0 - f))
    }

    pub fn encode(&self, enc: &mut Encoder) {
        enc.put_f64s(&self.down_sum);
        enc.put_f64s(&self.up_sum);
        for c in self.down_count.iter().chain(&self.up_count) {
            enc.put_u64(*c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_and_init() {
        let mut pc = Pseudocosts::new(2);
        assert!(!pc.initialized(0));
        pc.record(&PcObservation {
            var: 0,
            direction: Direction::Down,
            gain: 2.0,
        });
        pc.record(&PcObservation {
            var: 0,
            direction: Direction::Down,
            gain: -1.0,
        });
        assert_eq!(pc.average(0, Direction::Down), Some(1.0));
        pc.record(&PcObservation {
            var: 0,
            direction: Direction::Up,
            gain: 4.0,
        });
        assert!(pc.initialized(0));
        assert_eq!(pc.mean(Direction::Up), 4.0);
        assert_eq!(pc.score(0, 0.5), 0.5 * 2.0);
    }
}
