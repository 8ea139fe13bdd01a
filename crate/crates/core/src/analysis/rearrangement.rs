//! Rankings, the "more ordered" partial order, and slot-weighted dot products.

use serde::{Deserialize, Serialize};

use crate::auction::SlotProfile;
use crate::error::{Error, Result};

/// A ranking: `order()[x]` is the advertiser shown in position `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ranking(Vec<usize>);

impl Ranking {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &a in &order {
            if a >= n || seen[a] {
                return Err(Error::param(format!("{order:?} is not a permutation of 0..{n}")));
            }
            seen[a] = true;
        }
        Ok(Ranking(order))
    }

    pub fn identity(n: usize) -> Self {
        Ranking((0..n).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `positions()[a]` is the position of advertiser `a`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (x, &a) in self.0.iter().enumerate() {
            pos[a] = x;
        }
        pos
    }

    /// Ranking by descending `values`, ties to the lower id.
    pub fn sorted_by(values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Ranking(order)
    }
}

impl TryFrom<Vec<usize>> for Ranking {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Ranking::new(v)
    }
}

impl From<Ranking> for Vec<usize> {
    fn from(r: Ranking) -> Self {
        r.0
    }
}

/// All `n!` rankings in lexicographic order.
pub fn all_rankings(n: usize) -> Vec<Ranking> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![Ranking(cur.clone())];
    // next lexicographic permutation
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("suffix has a larger element");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(Ranking(cur.clone()));
    }
    out
}

/// True iff every pair that `pi2` shows in efficient order is also in
/// efficient order in `pi1`.
///
/// The efficient order sorts by descending realized value with ties broken
/// toward the lower id, so the relation is the inclusion of inversion sets.
pub fn more_ordered(pi1: &Ranking, pi2: &Ranking, realized: &[f64]) -> Result<bool> {
    let n = realized.len();
    if pi1.len() != n || pi2.len() != n {
        return Err(Error::param(format!(
            "rankings of sizes {} and {} against {n} realized values",
            pi1.len(),
            pi2.len()
        )));
    }
    let canon = Ranking::sorted_by(realized);
    let (p1, p2) = (pi1.positions(), pi2.positions());
    let order = canon.order();
    for x in 0..n {
        for y in x + 1..n {
            let (hi, lo) = (order[x], order[y]);
            if p2[hi] < p2[lo] && p1[hi] > p1[lo] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `sum_x s_x r_{pi(x)}`, with missing slots counting as zero.
pub fn rearrangement_dot(ranking: &Ranking, realized: &[f64], slots: &SlotProfile) -> f64 {
    ranking.order().iter().enumerate().map(|(x, &a)| slots.effect(x) * realized[a]).sum()
}

/// Outcome of an exhaustive rearrangement check for one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RearrangementCheck {
    pub n: usize,
    pub rankings: usize,
    pub ordered_pairs: usize,
    pub dominance_violations: usize,
    /// Largest amount by which some ranking beats the efficient one (should be <= 0).
    pub efficient_gap: f64,
}

impl RearrangementCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.dominance_violations == 0 && self.efficient_gap <= tol
    }
}

/// Checks over all `n!` rankings that more-ordered rankings weakly dominate
/// and that the efficient ranking is maximal.
pub fn check_rearrangement(realized: &[f64], slots: &SlotProfile, tol: f64) -> Result<RearrangementCheck> {
    let n = realized.len();
    let all = all_rankings(n);
    let dots: Vec<f64> = all.iter().map(|r| rearrangement_dot(r, realized, slots)).collect();
    let best = rearrangement_dot(&Ranking::sorted_by(realized), realized, slots);
    let mut ordered_pairs = 0;
    let mut dominance_violations = 0;
    for (a, ra) in all.iter().enumerate() {
        for (b, rb) in all.iter().enumerate() {
            if more_ordered(ra, rb, realized)? {
                ordered_pairs += 1;
                if dots[a] < dots[b] - tol {
                    dominance_violations += 1;
                }
            }
        }
    }
    let efficient_gap = dots.iter().map(|d| d - best).fold(f64::NEG_INFINITY, f64::max);
    Ok(RearrangementCheck { n, rankings: all.len(), ordered_pairs, dominance_violations, efficient_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slots(v: &[f64]) -> SlotProfile {
        SlotProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::new(vec![1, 0, 2]).is_ok());
        assert!(Ranking::new(vec![0, 0]).is_err());
        assert!(Ranking::new(vec![0, 2]).is_err());
        assert_eq!(Ranking::new(vec![2, 0, 1]).unwrap().positions(), vec![1, 2, 0]);
    }

    #[test]
    fn permutations_enumerated() {
        assert_eq!(all_rankings(0).len(), 1);
        assert_eq!(all_rankings(4).len(), 24);
        let five = all_rankings(5);
        assert_eq!(five.len(), 120);
        let distinct: std::collections::HashSet<_> = five.iter().collect();
        assert_eq!(distinct.len(), 120);
    }

    #[test]
    fn more_ordered_examples() {
        let r = [3.0, 2.0, 1.0];
        let id = Ranking::identity(3);
        let swapped = Ranking::new(vec![0, 2, 1]).unwrap();
        assert!(more_ordered(&swapped, &swapped, &r).unwrap());
        for pi2 in all_rankings(3) {
            assert!(more_ordered(&id, &pi2, &r).unwrap());
        }
        assert!(!more_ordered(&swapped, &id, &r).unwrap());
        assert!(more_ordered(&id, &Ranking::identity(2), &r).is_err());
    }

    #[test]
    fn dot_examples() {
        let r = [3.0, 2.0, 1.0];
        let s = slots(&[1.0, 0.5, 0.0]);
        assert_eq!(rearrangement_dot(&Ranking::identity(3), &r, &s), 4.0);
        assert_eq!(rearrangement_dot(&Ranking::new(vec![1, 0, 2]).unwrap(), &r, &s), 3.5);
        assert_eq!(rearrangement_dot(&Ranking::identity(3), &r, &slots(&[0.0, 0.0])), 0.0);
        // fewer slots than advertisers
        assert_eq!(rearrangement_dot(&Ranking::identity(3), &r, &slots(&[1.0])), 3.0);
    }

    #[test]
    fn exhaustive_small_case() {
        let c = check_rearrangement(&[1.0, 5.0, 2.0, 2.0, 0.5], &slots(&[1.0, 0.7, 0.7, 0.2]), 1e-12).unwrap();
        assert_eq!(c.rankings, 120);
        assert!(c.passed(1e-12), "{c:?}");
    }
}
