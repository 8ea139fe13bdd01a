#![allow(dead_code)]

use refine_core::auction::{Assignment, AuctionInstance};

/// Every injective partial map from `n` advertisers into `m` slots.
pub fn all_assignments(n: usize, m: usize) -> Vec<Assignment> {
    fn go(i: usize, n: usize, m: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Assignment>) {
        if i == n {
            out.push(Assignment::new(cur.clone(), m).unwrap());
            return;
        }
        cur.push(None);
        go(i + 1, n, m, used, cur, out);
        cur.pop();
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                cur.push(Some(j));
                go(i + 1, n, m, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, m, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

/// Best value of `score(assignment)` over all assignments, by enumeration.
pub fn brute_force_max(inst: &AuctionInstance, score: impl Fn(&Assignment) -> f64) -> f64 {
    all_assignments(inst.n(), inst.m()).iter().map(score).fold(f64::NEG_INFINITY, f64::max)
}

/// `sum_j s_j x_j` with both sides given directly, for hand-built oracles.
pub fn slot_sum(effects: &[f64], realized_in_slot_order: &[f64]) -> f64 {
    effects.iter().zip(realized_in_slot_order).map(|(s, r)| s * r).sum()
}

/// Composite Simpson rule on `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * k as f64);
    }
    s * h / 3.0
}
