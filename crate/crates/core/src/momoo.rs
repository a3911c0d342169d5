//! Pareto domination, p-inclusion of pattern supports, multi-modal
//! (p-mo) domination and the bounded Pareto archive.

use serde::{Deserialize, Serialize};

use crate::metrics::{Interval, ScoreVector};

/// The (sensor, time) footprint of a pattern.
///
/// The measure of a support is `|sensors| * interval.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub center: usize,
    /// Ascending, non-empty.
    pub sensors: Vec<usize>,
    pub interval: Interval,
}

impl Support {
    pub fn new(center: usize, mut sensors: Vec<usize>, interval: Interval) -> Self {
        sensors.sort_unstable();
        sensors.dedup();
        Self {
            center,
            sensors,
            interval,
        }
    }

    pub fn measure(&self) -> usize {
        self.sensors.len() * self.interval.len()
    }

    pub fn contains_sensor(&self, id: usize) -> bool {
        self.sensors.binary_search(&id).is_ok()
    }

    pub fn shared_sensors(&self, other: &Support) -> usize {
        let (mut a, mut b) = (self.sensors.iter().peekable(), other.sensors.iter().peekable());
        let mut n = 0;
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    n += 1;
                    a.next();
                    b.next();
                }
            }
        }
        n
    }

    pub fn intersection_measure(&self, other: &Support) -> usize {
        let overlap = self.interval.overlap(&other.interval);
        if overlap == 0 {
            0
        } else {
            self.shared_sensors(other) * overlap
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InclusionMode {
    /// Cell-count intersection against `p * |A|`.
    #[default]
    Exact,
    /// Center-in-support plus interval overlap; ignores `p`.
    Fast,
}

/// `a` improves on `b` on every criterion, strictly on at least one.
/// An undefined alignment never dominates.
pub fn pareto_dominates(a: &ScoreVector, b: &ScoreVector) -> bool {
    if !a.alignment.is_defined() {
        return false;
    }
    let ge = a.length >= b.length && a.area >= b.area && a.alignment >= b.alignment;
    let gt = a.length > b.length || a.area > b.area || a.alignment > b.alignment;
    ge && gt
}

/// `|A ∩ B| > p * |A|`.
pub fn p_included_exact(a: &Support, b: &Support, p: f64) -> bool {
    a.intersection_measure(b) as f64 > p * a.measure() as f64
}

/// The center of `a` lies in `b`'s sensors and the intervals overlap.
pub fn p_included_fast(a: &Support, b: &Support) -> bool {
    a.interval.overlap(&b.interval) >= 1 && b.contains_sensor(a.center)
}

pub fn p_included(a: &Support, b: &Support, p: f64, mode: InclusionMode) -> bool {
    match mode {
        InclusionMode::Exact => p_included_exact(a, b, p),
        InclusionMode::Fast => p_included_fast(a, b),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry<G> {
    pub genotype: G,
    pub scores: ScoreVector,
    pub support: Support,
}

/// `x` p-mo-dominates `y`: `y`'s support is p-included in `x`'s and `x`
/// Pareto-dominates `y`.
pub fn pmo_dominates<G, H>(x: &ArchiveEntry<G>, y: &ArchiveEntry<H>, p: f64, mode: InclusionMode) -> bool {
    dominates_parts(&x.scores, &x.support, &y.scores, &y.support, p, mode)
}

pub(crate) fn dominates_parts(
    xs: &ScoreVector,
    xsup: &Support,
    ys: &ScoreVector,
    ysup: &Support,
    p: f64,
    mode: InclusionMode,
) -> bool {
    pareto_dominates(xs, ys) && p_included(ysup, xsup, p, mode)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    Rejected,
}

/// Crowding distance of each point among `points` in objective space.
/// Boundary points get `f64::INFINITY`.
pub(crate) fn crowding_distances(points: &[ScoreVector]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        return dist;
    }
    let objectives: [fn(&ScoreVector) -> f64; 3] = [
        |s| s.length as f64,
        |s| s.area as f64,
        |s| s.alignment.value().unwrap_or(f64::MIN),
    ];
    let mut order: Vec<usize> = (0..n).collect();
    for f in objectives {
        order.sort_by(|&a, &b| f(&points[a]).total_cmp(&f(&points[b])).then(a.cmp(&b)));
        let (lo, hi) = (f(&points[order[0]]), f(&points[order[n - 1]]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 || !range.is_finite() {
            continue;
        }
        for k in 1..n - 1 {
            dist[order[k]] += (f(&points[order[k + 1]]) - f(&points[order[k - 1]])) / range;
        }
    }
    dist
}

/// Bounded store of mutually non-p-mo-dominated entries.
///
/// Overflow evicts the entry with the most p-overlapping neighbors; ties go
/// to the smallest crowding distance within the tied group, then the oldest.
#[derive(Clone, Debug)]
pub struct ParetoArchive<G> {
    entries: Vec<ArchiveEntry<G>>,
    neighbors: Vec<usize>,
    capacity: usize,
    p: f64,
    mode: InclusionMode,
}

impl<G> ParetoArchive<G> {
    pub fn new(capacity: usize, p: f64, mode: InclusionMode) -> Self {
        assert!(capacity > 0, "archive capacity must be positive");
        Self {
            entries: Vec::new(),
            neighbors: Vec::new(),
            capacity,
            p,
            mode,
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry<G>] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<ArchiveEntry<G>> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mode(&self) -> InclusionMode {
        self.mode
    }

    fn overlapping(&self, a: &Support, b: &Support) -> bool {
        p_included(a, b, self.p, self.mode) || p_included(b, a, self.p, self.mode)
    }

    /// Whether some entry p-mo-dominates the given scored support.
    pub fn dominates(&self, scores: &ScoreVector, support: &Support) -> bool {
        self.entries
            .iter()
            .any(|e| dominates_parts(&e.scores, &e.support, scores, support, self.p, self.mode))
    }

    /// Rejects newcomers dominated by an entry or repeating an entry's
    /// support and scores; removes entries the newcomer dominates.
    pub fn insert(&mut self, entry: ArchiveEntry<G>) -> InsertOutcome {
        if self.dominates(&entry.scores, &entry.support)
            || self
                .entries
                .iter()
                .any(|e| e.scores == entry.scores && e.support == entry.support)
        {
            return InsertOutcome::Rejected;
        }

        let (p, mode) = (self.p, self.mode);
        let doomed: Vec<usize> = (0..self.entries.len())
            .filter(|&k| pmo_dominates(&entry, &self.entries[k], p, mode))
            .collect();
        for &k in doomed.iter().rev() {
            self.remove(k);
        }

        let mut count = 0;
        for k in 0..self.entries.len() {
            if self.overlapping(&entry.support, &self.entries[k].support) {
                self.neighbors[k] += 1;
                count += 1;
            }
        }
        self.entries.push(entry);
        self.neighbors.push(count);

        if self.entries.len() > self.capacity {
            let victim = self.eviction_victim();
            self.remove(victim);
        }
        InsertOutcome::Inserted
    }

    fn remove(&mut self, k: usize) {
        let gone = self.entries.remove(k);
        self.neighbors.remove(k);
        for j in 0..self.entries.len() {
            if self.overlapping(&gone.support, &self.entries[j].support) {
                self.neighbors[j] -= 1;
            }
        }
    }

    fn eviction_victim(&self) -> usize {
        let most = *self.neighbors.iter().max().expect("non-empty archive");
        let tied: Vec<usize> = (0..self.entries.len())
            .filter(|&k| self.neighbors[k] == most)
            .collect();
        if tied.len() == 1 {
            return tied[0];
        }
        let points: Vec<ScoreVector> = tied.iter().map(|&k| self.entries[k].scores).collect();
        let crowd = crowding_distances(&points);
        let mut best = 0;
        for k in 1..tied.len() {
            if crowd[k] < crowd[best] {
                best = k;
            }
        }
        tied[best]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Alignment;

    fn sv(length: usize, area: usize, a: f64) -> ScoreVector {
        ScoreVector {
            length,
            area,
            alignment: Alignment::new(a),
        }
    }

    fn sup(center: usize, sensors: &[usize], t1: usize, t2: usize) -> Support {
        Support::new(center, sensors.to_vec(), Interval::new(t1, t2))
    }

    fn entry(scores: ScoreVector, support: Support) -> ArchiveEntry<()> {
        ArchiveEntry {
            genotype: (),
            scores,
            support,
        }
    }

    #[test]
    fn pareto_examples() {
        assert!(pareto_dominates(&sv(3, 3, 0.5), &sv(2, 3, 0.5)));
        assert!(!pareto_dominates(&sv(3, 3, 0.5), &sv(3, 3, 0.5)));
        assert!(!pareto_dominates(&sv(3, 2, 0.5), &sv(2, 3, 0.5)));
        assert!(!pareto_dominates(&sv(2, 3, 0.5), &sv(3, 2, 0.5)));
    }

    #[test]
    fn undefined_alignment_in_dominance() {
        let undef = ScoreVector {
            alignment: Alignment::UNDEFINED,
            ..sv(9, 9, 0.0)
        };
        assert!(!pareto_dominates(&undef, &sv(1, 1, 0.0)));
        assert!(!pareto_dominates(&undef, &undef));
        assert!(pareto_dominates(&sv(9, 9, -5.0), &undef));
    }

    #[test]
    fn exact_inclusion_examples() {
        let a = sup(1, &[1, 2], 1, 11);
        let b = sup(1, &[1, 2], 6, 21);
        assert_eq!(a.measure(), 20);
        assert_eq!(a.intersection_measure(&b), 10);
        assert!(p_included_exact(&a, &b, 0.4));
        assert!(!p_included_exact(&a, &b, 0.5));

        let disjoint = sup(5, &[5, 6], 1, 11);
        assert!(!p_included_exact(&a, &disjoint, 1e-9));
        assert!(!p_included_exact(&a, &a, 1.0));
        assert!(p_included_exact(&a, &a, 0.999));
    }

    #[test]
    fn exact_inclusion_at_p_zero() {
        let a = sup(1, &[1, 2], 1, 5);
        assert!(p_included_exact(&a, &sup(2, &[2, 3], 4, 9), 0.0));
        // shared sensor but intervals only touch at an endpoint
        assert!(!p_included_exact(&a, &sup(2, &[2, 3], 5, 9), 0.0));
        assert!(!p_included_exact(&a, &sup(3, &[3, 4], 1, 5), 0.0));
    }

    #[test]
    fn fast_inclusion_examples() {
        let b = sup(4, &[2, 3, 4], 4, 9);
        assert!(p_included_fast(&sup(3, &[3], 1, 5), &b));
        assert!(!p_included_fast(&sup(7, &[7], 4, 9), &b));
        assert!(!p_included_fast(&sup(3, &[3], 1, 4), &sup(4, &[2, 3, 4], 5, 9)));
    }

    #[test]
    fn fast_and_exact_disagree() {
        // a's center is inside b, but a is mostly outside b
        let a = sup(3, &[3, 10, 11, 12, 13], 1, 11);
        let b = sup(2, &[1, 2, 3], 1, 11);
        assert!(p_included_fast(&a, &b));
        assert!(!p_included_exact(&a, &b, 0.5));
        // c lies entirely within d but c's center is not in d's sensor list
        let c = sup(9, &[1, 2], 1, 11);
        let d = sup(1, &[1, 2], 1, 11);
        assert!(p_included_exact(&c, &d, 0.5));
        assert!(!p_included_fast(&c, &d));
    }

    #[test]
    fn pmo_examples() {
        let big = entry(sv(10, 5, 0.9), sup(1, &[1, 2, 3, 4, 5], 1, 11));
        let inside = entry(sv(5, 2, 0.8), sup(2, &[1, 2], 3, 8));
        let elsewhere = entry(sv(5, 2, 0.8), sup(20, &[20, 21], 3, 8));
        let incomparable = entry(sv(5, 2, 0.95), sup(2, &[1, 2], 3, 8));
        for mode in [InclusionMode::Exact, InclusionMode::Fast] {
            assert!(pmo_dominates(&big, &inside, 0.5, mode));
            assert!(!pmo_dominates(&inside, &big, 0.5, mode));
            assert!(!pmo_dominates(&big, &elsewhere, 0.5, mode));
            assert!(!pmo_dominates(&big, &incomparable, 0.5, mode));
            assert!(!pmo_dominates(&big, &big, 0.5, mode));
        }
    }

    #[test]
    fn archive_basic_protocol() {
        let mut arch: ParetoArchive<()> = ParetoArchive::new(10, 0.5, InclusionMode::Exact);
        let top = entry(sv(10, 5, 0.9), sup(1, &[1, 2, 3, 4, 5], 1, 11));
        assert_eq!(arch.insert(top.clone()), InsertOutcome::Inserted);
        assert_eq!(arch.len(), 1);
        let weaker = entry(sv(9, 5, 0.9), sup(1, &[1, 2, 3, 4, 5], 1, 10));
        assert_eq!(arch.insert(weaker), InsertOutcome::Rejected);
        assert_eq!(arch.entries(), &[top]);
    }

    #[test]
    fn archive_insert_removes_dominated_nested_entries() {
        let mut arch: ParetoArchive<()> = ParetoArchive::new(10, 0.5, InclusionMode::Exact);
        // three nested supports, each incomparable with the others
        let nested = [
            entry(sv(4, 1, 0.99), sup(3, &[3], 5, 9)),
            entry(sv(6, 3, 0.95), sup(3, &[2, 3, 4], 4, 10)),
            entry(sv(8, 5, 0.90), sup(3, &[1, 2, 3, 4, 5], 3, 11)),
        ];
        for e in &nested {
            assert_eq!(arch.insert(e.clone()), InsertOutcome::Inserted);
        }
        assert_eq!(arch.len(), 3);
        let far = entry(sv(1, 1, 0.5), sup(40, &[40], 1, 2));
        arch.insert(far.clone());

        let champion = entry(sv(10, 5, 0.99), sup(3, &[1, 2, 3, 4, 5], 1, 11));
        for e in &nested {
            assert!(pmo_dominates(&champion, e, 0.5, InclusionMode::Exact));
        }
        assert_eq!(arch.insert(champion.clone()), InsertOutcome::Inserted);
        assert_eq!(arch.entries(), &[far, champion]);
    }

    #[test]
    fn archive_evicts_most_crowded_region() {
        let mut arch: ParetoArchive<()> = ParetoArchive::new(3, 0.5, InclusionMode::Fast);
        // two incomparable entries sharing a region, then two isolated ones
        arch.insert(entry(sv(4, 3, 0.9), sup(1, &[1, 2, 3], 1, 5)));
        arch.insert(entry(sv(6, 3, 0.8), sup(2, &[1, 2, 3], 1, 7)));
        arch.insert(entry(sv(3, 2, 0.7), sup(10, &[10, 11], 1, 4)));
        arch.insert(entry(sv(3, 2, 0.7), sup(20, &[20, 21], 1, 4)));
        assert_eq!(arch.len(), 3);
        let centers: Vec<usize> = arch.entries().iter().map(|e| e.support.center).collect();
        assert!(centers.contains(&10) && centers.contains(&20), "{centers:?}");
    }
}
