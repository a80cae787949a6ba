//! Search over root selections.
//!
//! Masks are visited in Gray-code order so consecutive candidates differ in
//! one root; the factor polynomial is updated by dividing that root out and
//! multiplying its partner in. The index range is cut into fixed-length
//! segments, each restarted from a full expansion, so the visit order and the
//! result do not depend on how many threads run the segments.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::poly_from_roots;
use crate::spectral::{RootPairing, SelectionMask};

/// Largest number of free pairs searched exhaustively (2^24 candidates).
pub const EXHAUSTIVE_LIMIT: usize = 24;
/// Gray-code indices per independently expanded segment.
pub const SEGMENT_LEN: u64 = 1 << 10;
/// Relative metric difference below which two candidates tie.
pub const TIE_TOLERANCE: f64 = 1e-12;
pub const HEURISTIC_RESTARTS: usize = 64;
const HEURISTIC_SEED: u64 = 0x6272_6f61_6462_6561;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Papr,
    DynamicRange,
}

/// `M·max|v_m|²/‖v‖²`.
pub fn papr(v: &[Complex64]) -> f64 {
    let (max, sum) = v
        .iter()
        .map(|c| c.norm_sqr())
        .fold((0.0f64, 0.0f64), |(m, s), p| (m.max(p), s + p));
    v.len() as f64 * max / sum
}

/// `max|v_m|²/min|v_m|²`; `+∞` when some antenna is silent.
pub fn dynamic_range(v: &[Complex64]) -> f64 {
    let (max, min) = v
        .iter()
        .map(|c| c.norm_sqr())
        .fold((0.0f64, f64::INFINITY), |(hi, lo), p| (hi.max(p), lo.min(p)));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl Metric {
    pub fn score(&self, v: &[Complex64]) -> f64 {
        match self {
            Metric::Papr => papr(v),
            Metric::DynamicRange => dynamic_range(v),
        }
    }
}

/// A scored candidate; `code` packs the free-pair bits, lowest free pair first.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    score: f64,
    code: u64,
}

impl Candidate {
    /// Lower score wins; near-equal scores fall back to the lower mask value.
    fn beats(&self, other: &Candidate) -> bool {
        let scale = self.score.abs().max(other.score.abs());
        if self.score.is_finite() && other.score.is_finite() {
            if (self.score - other.score).abs() <= TIE_TOLERANCE * scale {
                return self.code < other.code;
            }
        } else if self.score == other.score {
            return self.code < other.code;
        }
        self.score < other.score
    }
}

fn pick(best: Option<Candidate>, cand: Candidate) -> Option<Candidate> {
    match best {
        Some(b) if !cand.beats(&b) => Some(b),
        _ => Some(cand),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub mask: SelectionMask,
    pub score: f64,
    pub heuristic: bool,
    pub candidates: u64,
}

/// Selection space with collapsed unit-circle pairs removed.
#[derive(Debug, Clone)]
pub struct SearchSpace<'a> {
    pairing: &'a RootPairing,
    free: Vec<usize>,
}

impl<'a> SearchSpace<'a> {
    pub fn new(pairing: &'a RootPairing) -> Self {
        Self {
            pairing,
            free: pairing.free_pairs(),
        }
    }

    pub fn free_pairs(&self) -> usize {
        self.free.len()
    }

    pub fn mask_for(&self, code: u64) -> SelectionMask {
        let mut bits = vec![false; self.pairing.len()];
        for (j, &pair) in self.free.iter().enumerate() {
            bits[pair] = (code >> j) & 1 == 1;
        }
        SelectionMask(bits)
    }

    fn mask_from_free_bits(&self, free_bits: &[bool]) -> SelectionMask {
        let mut bits = vec![false; self.pairing.len()];
        for (j, &pair) in self.free.iter().enumerate() {
            bits[pair] = free_bits[j];
        }
        SelectionMask(bits)
    }

    fn roots_for(&self, mask: &SelectionMask) -> Vec<Complex64> {
        self.pairing
            .pairs
            .iter()
            .zip(&mask.0)
            .map(|(p, &b)| p.select(b))
            .collect()
    }

    /// Monic factor for `mask` by direct expansion.
    pub fn expand(&self, mask: &SelectionMask) -> Vec<Complex64> {
        poly_from_roots(&self.roots_for(mask), Complex64::new(1.0, 0.0))
    }

    /// Monic factors for every Gray-code index in `range`, produced by
    /// incremental root swaps from a full expansion at the range start.
    pub fn gray_walk(&self, start: u64, end: u64, mut visit: impl FnMut(u64, &[Complex64])) {
        if start >= end {
            return;
        }
        let mut code = gray(start);
        let mut poly = self.expand(&self.mask_for(code));
        visit(code, &poly);
        for index in start + 1..end {
            let j = index.trailing_zeros() as usize;
            let pair = &self.pairing.pairs[self.free[j]];
            let was_set = (code >> j) & 1 == 1;
            let (old, new) = if was_set {
                (pair.outer, pair.inner)
            } else {
                (pair.inner, pair.outer)
            };
            swap_root(&mut poly, old, new);
            code ^= 1 << j;
            visit(code, &poly);
        }
    }

    pub fn exhaustive(&self, metric: Metric) -> Result<SearchResult> {
        let e = self.free.len();
        if e > EXHAUSTIVE_LIMIT {
            return Err(Error::Parameter(format!(
                "{e} free pairs exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}"
            )));
        }
        let total = 1u64 << e;
        let segments = total.div_ceil(SEGMENT_LEN);
        let bests: Vec<Option<Candidate>> = (0..segments)
            .into_par_iter()
            .map(|s| {
                let start = s * SEGMENT_LEN;
                let end = (start + SEGMENT_LEN).min(total);
                let mut best = None;
                self.gray_walk(start, end, |code, poly| {
                    best = pick(best, Candidate {
                        score: metric.score(poly),
                        code,
                    });
                });
                best
            })
            .collect();
        let best = bests
            .into_iter()
            .flatten()
            .fold(None, pick)
            .ok_or_else(|| Error::Internal("empty search space".into()))?;
        Ok(SearchResult {
            mask: self.mask_for(best.code),
            score: best.score,
            heuristic: false,
            candidates: total,
        })
    }

    /// Greedy single-bit-flip descent from seeded random starts; restart 0
    /// starts from the all-inner (minimum-phase) selection.
    pub fn heuristic(&self, metric: Metric) -> Result<SearchResult> {
        let e = self.free.len();
        let runs: Vec<(Vec<bool>, f64, u64)> = (0..HEURISTIC_RESTARTS)
            .into_par_iter()
            .map(|restart| {
                let mut rng = ChaCha8Rng::seed_from_u64(HEURISTIC_SEED);
                rng.set_stream(restart as u64);
                let mut bits: Vec<bool> = if restart == 0 {
                    vec![false; e]
                } else {
                    (0..e).map(|_| rng.random_bool(0.5)).collect()
                };
                let mut poly = self.expand(&self.mask_from_free_bits(&bits));
                let mut score = metric.score(&poly);
                let mut evaluated = 1u64;
                for _sweep in 0..10 * e.max(1) {
                    let mut best_flip: Option<(usize, f64)> = None;
                    for j in 0..e {
                        let pair = &self.pairing.pairs[self.free[j]];
                        let (old, new) = if bits[j] {
                            (pair.outer, pair.inner)
                        } else {
                            (pair.inner, pair.outer)
                        };
                        let mut trial = poly.clone();
                        swap_root(&mut trial, old, new);
                        let s = metric.score(&trial);
                        evaluated += 1;
                        if s < score * (1.0 - TIE_TOLERANCE)
                            && best_flip.is_none_or(|(_, b)| s < b)
                        {
                            best_flip = Some((j, s));
                        }
                    }
                    let Some((j, s)) = best_flip else { break };
                    bits[j] = !bits[j];
                    score = s;
                    // Fresh expansion after each accepted move.
                    poly = self.expand(&self.mask_from_free_bits(&bits));
                }
                (bits, score, evaluated)
            })
            .collect();
        let mut best: Option<(SelectionMask, f64)> = None;
        let mut candidates = 0;
        for (bits, score, evaluated) in runs {
            candidates += evaluated;
            let mask = self.mask_from_free_bits(&bits);
            let better = match &best {
                None => true,
                Some((bm, bs)) => {
                    let scale = score.abs().max(bs.abs());
                    if (score - bs).abs() <= TIE_TOLERANCE * scale {
                        mask.cmp_value(bm).is_lt()
                    } else {
                        score < *bs
                    }
                }
            };
            if better {
                best = Some((mask, score));
            }
        }
        let (mask, score) = best.ok_or_else(|| Error::Internal("no heuristic runs".into()))?;
        Ok(SearchResult {
            mask,
            score,
            heuristic: true,
            candidates,
        })
    }

    pub fn best(&self, metric: Metric) -> Result<SearchResult> {
        if self.free.len() <= EXHAUSTIVE_LIMIT {
            self.exhaustive(metric)
        } else {
            self.heuristic(metric)
        }
    }
}

pub fn gray(index: u64) -> u64 {
    index ^ (index >> 1)
}

/// Replaces the factor `(x - old)` of `poly` by `(x - new)` in place.
pub fn swap_root(poly: &mut [Complex64], old: Complex64, new: Complex64) {
    let n = poly.len() - 1;
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    if old.norm() <= 1.0 {
        // Deflate from the leading coefficient.
        q[n - 1] = poly[n];
        for k in (1..n).rev() {
            q[k - 1] = poly[k] + old * q[k];
        }
    } else {
        // Deflate from the constant term.
        q[0] = -poly[0] / old;
        for k in 1..n {
            q[k] = (q[k - 1] - poly[k]) / old;
        }
    }
    poly[0] = -new * q[0];
    for k in 1..n {
        poly[k] = q[k - 1] - new * q[k];
    }
    poly[n] = q[n - 1];
}
