use serde::{Deserialize, Serialize};

use super::BatteryParams;

/// One counted cycle. Full cycles have weight 1, residual half cycles 0.5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    /// Depth of discharge as a fraction of capacity.
    pub depth: f64,
    pub weight: f64,
}

impl Cycle {
    pub fn full(depth: f64) -> Self {
        Self { depth, weight: 1.0 }
    }

    pub fn half(depth: f64) -> Self {
        Self { depth, weight: 0.5 }
    }
}

/// Local extrema of `series`, endpoints included, plateaus collapsed.
pub fn turning_points(series: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(series.len());
    for &x in series {
        match out.len() {
            0 => out.push(x),
            1 => {
                if x != out[0] {
                    out.push(x);
                }
            }
            n => {
                let (a, b) = (out[n - 2], out[n - 1]);
                if x == b {
                    continue;
                }
                if (b - a) * (x - b) > 0.0 {
                    out[n - 1] = x;
                } else {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Streaming four-point rainflow counter over an SOC trajectory.
///
/// The stack holds the unmatched reversals; its last entry is the current SOC
/// and may still move along the running monotone segment. A full cycle closes
/// once the inner range of the last four reversals is strictly smaller than
/// the range before it and no larger than the range after it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RainflowCounter {
    stack: Vec<f64>,
    closed: Vec<Cycle>,
}

impl RainflowCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds the next SOC sample and returns the number of newly closed cycles,
    /// which are the last entries of [`RainflowCounter::closed`].
    pub fn push(&mut self, x: f64) -> usize {
        debug_assert!(x.is_finite());
        let n = self.stack.len();
        match n {
            0 => self.stack.push(x),
            1 => {
                if x != self.stack[0] {
                    self.stack.push(x);
                }
            }
            _ => {
                let (a, b) = (self.stack[n - 2], self.stack[n - 1]);
                if x == b {
                    return 0;
                }
                if (b - a) * (x - b) > 0.0 {
                    self.stack[n - 1] = x;
                } else {
                    self.stack.push(x);
                }
            }
        }
        let before = self.closed.len();
        while self.stack.len() >= 4 {
            let k = self.stack.len();
            let s = &self.stack[k - 4..];
            let outer_old = (s[1] - s[0]).abs();
            let inner = (s[2] - s[1]).abs();
            let outer_new = (s[3] - s[2]).abs();
            // Unmatched ranges strictly decrease along the stack, so a tie with
            // the older range leaves the pair to the residue.
            if inner < outer_old && inner <= outer_new {
                self.closed.push(Cycle::full(inner));
                self.stack.drain(k - 3..k - 1);
            } else {
                break;
            }
        }
        self.closed.len() - before
    }

    pub fn closed(&self) -> &[Cycle] {
        &self.closed
    }

    /// Unmatched reversals in chronological order.
    pub fn residue(&self) -> &[f64] {
        &self.stack
    }

    /// Half cycles formed by consecutive residue reversals.
    pub fn residue_cycles(&self) -> Vec<Cycle> {
        self.stack
            .windows(2)
            .map(|w| Cycle::half((w[1] - w[0]).abs()))
            .collect()
    }

    /// Closed full cycles followed by the residual half cycles.
    pub fn cycles(&self) -> Vec<Cycle> {
        let mut out = self.closed.clone();
        out.extend(self.residue_cycles());
        out
    }
}

/// Rainflow cycles of a complete trajectory.
pub fn rainflow_cycles(series: &[f64]) -> Vec<Cycle> {
    let mut counter = RainflowCounter::new();
    for &x in series {
        counter.push(x);
    }
    counter.cycles()
}

/// Tracks cumulative aging cost along a trajectory.
///
/// The cost after each sample equals the aging cost of the whole trajectory so
/// far, residue half cycles included; with a Woehler exponent of at least 1
/// the per-sample increments are non-negative.
#[derive(Clone, Debug)]
pub struct AgingMeter {
    params: BatteryParams,
    counter: RainflowCounter,
    closed_cost: f64,
    total: f64,
}

impl AgingMeter {
    pub fn new(params: &BatteryParams, initial_soc: f64) -> Self {
        let mut counter = RainflowCounter::new();
        counter.push(initial_soc);
        Self {
            params: params.clone(),
            counter,
            closed_cost: 0.0,
            total: 0.0,
        }
    }

    /// Records the next SOC and returns the incremental cost.
    pub fn record(&mut self, soc: f64) -> f64 {
        let fresh = self.counter.push(soc);
        let closed = self.counter.closed();
        for c in &closed[closed.len() - fresh..] {
            self.closed_cost += self.params.cycle_cost(c.depth, c.weight);
        }
        let residue: f64 = self
            .counter
            .residue_cycles()
            .iter()
            .map(|c| self.params.cycle_cost(c.depth, c.weight))
            .sum();
        let total = self.closed_cost + residue;
        let delta = total - self.total;
        self.total = total;
        delta
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn counter(&self) -> &RainflowCounter {
        &self.counter
    }
}
