//! Independent reference implementations used as test oracles.
//!
//! None of these call into the crate's algorithms; they share only plain
//! data types. Kept deliberately naive.
#![allow(dead_code)]

/// Turning points by explicit neighbour comparison after removing repeats.
pub fn turning_points(series: &[f64]) -> Vec<f64> {
    let mut dedup: Vec<f64> = Vec::new();
    for &x in series {
        if dedup.last() != Some(&x) {
            dedup.push(x);
        }
    }
    if dedup.len() <= 2 {
        return dedup;
    }
    let mut out = vec![dedup[0]];
    for i in 1..dedup.len() - 1 {
        let (a, b, c) = (dedup[i - 1], dedup[i], dedup[i + 1]);
        if (b > a && b > c) || (b < a && b < c) {
            out.push(b);
        }
    }
    out.push(dedup[dedup.len() - 1]);
    out
}

/// Three-point rainflow counting with full rescans from the start of the
/// unmatched history after each new point. Returns `(depth, weight)` pairs.
pub fn rainflow(series: &[f64]) -> Vec<(f64, f64)> {
    let points = turning_points(series);
    let mut hist: Vec<f64> = Vec::new();
    let mut out = Vec::new();
    for p in points {
        hist.push(p);
        'rescan: loop {
            let n = hist.len();
            if n < 3 {
                break;
            }
            // Examine the most recent pair of ranges only; rescanning restarts
            // from the newest end after every extraction.
            let x = (hist[n - 1] - hist[n - 2]).abs();
            let y = (hist[n - 2] - hist[n - 3]).abs();
            if x < y {
                break 'rescan;
            }
            if n == 3 {
                out.push((y, 0.5));
                hist.remove(0);
            } else {
                out.push((y, 1.0));
                hist.remove(n - 2);
                hist.remove(n - 3);
            }
        }
    }
    for w in hist.windows(2) {
        out.push(((w[1] - w[0]).abs(), 0.5));
    }
    out
}

/// Sorted multiset representation for exact comparison.
pub fn sorted_cycles(mut cycles: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    cycles.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    cycles
}

/// Quantile of sorted values at plotting positions `(i - 0.5)/m`, linear in
/// between and flat outside.
pub fn interpolated_quantile(sorted: &[f64], u: f64) -> f64 {
    let m = sorted.len() as f64;
    let pos = u * m + 0.5; // 1-based fractional rank
    if pos <= 1.0 {
        return sorted[0];
    }
    if pos >= m {
        return sorted[sorted.len() - 1];
    }
    let k = pos.floor();
    let lo = sorted[k as usize - 1];
    let hi = sorted[k as usize];
    lo + (pos - k) * (hi - lo)
}

/// Cash revenue of one PTU written out from the settlement rule.
pub fn cash_revenue(e_c: f64, e_id: f64, delivered: f64, spot: f64, pi_id: f64, pi_pos: f64, pi_neg: f64) -> f64 {
    let imb = delivered + e_id - e_c;
    let pb = if imb >= 0.0 { pi_pos } else { pi_neg };
    spot * e_c - pi_id * e_id + imb * pb
}

/// Battery model written out from the stated dynamics.
#[derive(Clone, Copy, Debug)]
pub struct Bess {
    pub cap: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
    pub k: f64,
    pub bounded: bool,
}

impl Bess {
    /// Next stored energy, or `None` if the command is not admissible.
    pub fn next(&self, content: f64, command: f64, pv: f64) -> Option<f64> {
        const EPS: f64 = 1e-9;
        if command.abs() > self.k + EPS {
            return None;
        }
        if command < 0.0 && -command > self.eta_ch * pv + EPS {
            return None;
        }
        let next = if command >= 0.0 {
            content - command / self.eta_dis
        } else {
            content - command * self.eta_ch
        };
        if self.bounded && (next < -EPS || next > self.cap + EPS) {
            return None;
        }
        Some(next)
    }
}

/// Exhaustive search over `grid^h` command sequences. `step_value(i, b)`
/// scores command `b` at step `i`; `pv_min[i]` bounds charging. Returns the
/// best total score (maximized) and the maximizing sequence.
pub fn enumerate_plans(
    bess: &Bess,
    content0: f64,
    pv_min: &[f64],
    grid: &[f64],
    step_value: impl Fn(usize, f64) -> f64,
) -> (f64, Vec<f64>) {
    let h = pv_min.len();
    let values: Vec<Vec<f64>> = (0..h).map(|i| grid.iter().map(|&b| step_value(i, b)).collect()).collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut idx = vec![0usize; h];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        content: f64,
        acc: f64,
        idx: &mut Vec<usize>,
        bess: &Bess,
        pv_min: &[f64],
        grid: &[f64],
        values: &[Vec<f64>],
        best: &mut (f64, Vec<f64>),
    ) {
        if i == pv_min.len() {
            if acc > best.0 {
                *best = (acc, idx.iter().map(|&g| grid[g]).collect());
            }
            return;
        }
        for g in 0..grid.len() {
            if let Some(next) = bess.next(content, grid[g], pv_min[i]) {
                idx[i] = g;
                rec(i + 1, next, acc + values[i][g], idx, bess, pv_min, grid, values, best);
            }
        }
    }
    rec(0, content0, 0.0, &mut idx, bess, pv_min, grid, &values, &mut best);
    best
}

/// `n` evenly spaced points over `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
