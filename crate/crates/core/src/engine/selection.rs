//! Archive-guided binary tournaments for parent choice and replacement.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;

use super::{Member, MinerRng};
use crate::metrics::ScoreVector;
use crate::momoo::{dominates_parts, ParetoArchive};

/// Archive entries sampled per tournament for the domination test.
pub const ARCHIVE_SAMPLE: usize = 20;

/// Crowding distance of `pop[idx]` among the members listed in `pool`,
/// in objective space. Extreme members on any objective get infinity.
pub fn member_crowding<G>(pop: &[Member<G>], pool: &[usize], idx: usize) -> f64 {
    let objectives: [fn(&ScoreVector) -> f64; 3] = [
        |s| s.length as f64,
        |s| s.area as f64,
        |s| s.alignment.value().unwrap_or(f64::MIN),
    ];
    let me = &pop[idx].eval.scores;
    let mut total = 0.0;
    for f in objectives {
        let v = f(me);
        let (mut lo, mut hi) = (v, v);
        let (mut below, mut above) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut has_below, mut has_above) = (false, false);
        for &k in pool.iter().filter(|&&k| k != idx) {
            let u = f(&pop[k].eval.scores);
            lo = lo.min(u);
            hi = hi.max(u);
            if u <= v && u > below {
                below = u;
                has_below = true;
            }
            if u >= v && u < above {
                above = u;
                has_above = true;
            }
        }
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        if !(has_below && has_above) {
            return f64::INFINITY;
        }
        total += (above - below) / range;
    }
    total
}

struct Key {
    dominated: bool,
    crowding: f64,
}

fn key<G, H>(pop: &[Member<G>], pool: &[usize], idx: usize, arch: &ParetoArchive<H>, sample: &[usize]) -> Key {
    let m = &pop[idx].eval;
    let dominated = sample.iter().any(|&k| {
        let e = &arch.entries()[k];
        dominates_parts(&e.scores, &e.support, &m.scores, &m.support, arch.p(), arch.mode())
    });
    Key {
        dominated,
        crowding: member_crowding(pop, pool, idx),
    }
}

/// `Greater` when `a` is the better tournament entrant.
fn compare(a: &Key, b: &Key) -> Ordering {
    b.dominated
        .cmp(&a.dominated)
        .then(a.crowding.total_cmp(&b.crowding))
}

fn archive_sample<H>(arch: &ParetoArchive<H>, rng: &mut MinerRng) -> Vec<usize> {
    let n = arch.len();
    if n <= ARCHIVE_SAMPLE {
        (0..n).collect()
    } else {
        index::sample(rng, n, ARCHIVE_SAMPLE).into_vec()
    }
}

fn two_distinct(rng: &mut MinerRng, n: usize) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// Binary tournament among admissible members: not dominated by the
/// archive sample first, then larger crowding distance, ties uniform.
/// `None` when no member is admissible.
pub fn select_parent<G, H>(pop: &[Member<G>], arch: &ParetoArchive<H>, rng: &mut MinerRng) -> Option<usize> {
    let pool: Vec<usize> = (0..pop.len()).filter(|&k| pop[k].eval.admissible).collect();
    match pool.len() {
        0 => return None,
        1 => return Some(pool[0]),
        _ => {}
    }
    let (a, b) = two_distinct(rng, pool.len());
    let (a, b) = (pool[a], pool[b]);
    let sample = archive_sample(arch, rng);
    let (ka, kb) = (key(pop, &pool, a, arch, &sample), key(pop, &pool, b, arch, &sample));
    Some(match compare(&ka, &kb) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    })
}

/// A uniformly chosen non-admissible member if any; otherwise the loser of
/// an inverse tournament (dominated first, then smaller crowding).
pub fn select_replacement<G, H>(pop: &[Member<G>], arch: &ParetoArchive<H>, rng: &mut MinerRng) -> usize {
    let weak: Vec<usize> = (0..pop.len()).filter(|&k| !pop[k].eval.admissible).collect();
    if !weak.is_empty() {
        return weak[rng.random_range(0..weak.len())];
    }
    let pool: Vec<usize> = (0..pop.len()).collect();
    let (a, b) = two_distinct(rng, pop.len());
    let sample = archive_sample(arch, rng);
    let (ka, kb) = (key(pop, &pool, a, arch, &sample), key(pop, &pool, b, arch, &sample));
    match compare(&ka, &kb) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}
