//! Isoperimetric quantities of a chain: per-set values `k_n(A)`, the infima
//! `k_n` over subset families, and the supremum `K`.
//!
//! For a subset `A` and step count `n`,
//!
//! ```text
//! k_n(A) = flow_n(A) / (pi(A) pi(A^c)),   flow_n(A) = sum_{x in A, y not in A} pi_x p^n(x, y)
//! ```
//!
//! `k_n(A) = k_n(A^c)` for every stationary chain, so the infimum over all
//! proper subsets equals the infimum over sets of mass at most one half, and
//! enumeration only needs one representative per `{A, A^c}` pair.
//!
//! Exact extrema are found by Gray-code enumeration: consecutive subsets
//! differ in a single state, so the cut flow and the mass are maintained
//! incrementally in `O(n)` per subset. The tracked values are refreshed from
//! scratch periodically, and any subset whose tracked value comes close to
//! the running optimum is re-evaluated exactly before it can become the
//! winner, which keeps the reported value and witness independent of the
//! enumeration order and of how the scan is split across threads.
//!
//! Above the exact-enumeration threshold two certified one-sided heuristics
//! are available: a spectral sweep cut (upper bound on the infimum, lower
//! bound on the supremum) and seeded single-flip local search.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::MarkovChain;
use crate::error::{Error, Result};
use crate::spectral;
use crate::subset::{full_mask, StateSubset};

/// Subset families over which extrema are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsetFamily {
    /// `0 < pi(A) < 1/2`, the literal family of the one-step infimum.
    #[serde(rename = "strict-half")]
    StrictHalf,
    /// `0 < pi(A) <= 1/2`; equivalent to scanning all proper subsets.
    #[serde(rename = "closed-half")]
    ClosedHalf,
    /// All nonempty proper subsets.
    #[serde(rename = "all-proper")]
    AllProper,
}

/// How a reported extremum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutMode {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "sweep-heuristic")]
    SweepHeuristic,
    #[serde(rename = "local-search-heuristic")]
    LocalSearchHeuristic,
}

/// Direction of a heuristic search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Min,
    Max,
}

/// An isoperimetric value together with its witness subset and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub value: f64,
    pub witness: StateSubset,
    pub n_steps: u32,
    pub mode: CutMode,
    pub family: SubsetFamily,
}

/// Knobs for exact enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumOptions {
    /// Exact calls fail loudly above this state count.
    pub max_exact_states: usize,
    /// Partition the subset space across rayon workers. The result is
    /// identical either way.
    pub parallel: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            max_exact_states: 22,
            parallel: true,
        }
    }
}

/// `pi`-weighted probability flow out of `A` in `n_steps` steps.
pub fn flow_out(chain: &MarkovChain, a: &StateSubset, n_steps: u64) -> Result<f64> {
    let q = chain.n_step_flow(n_steps)?;
    Ok(exact_flow(&q, chain.n_states(), a.mask()))
}

/// Normalized flow `k_n(A) = flow_n(A) / (pi(A) pi(A^c))`; always in [0, 2].
pub fn k_of_set(chain: &MarkovChain, a: &StateSubset, n_steps: u64) -> Result<f64> {
    let q = chain.n_step_flow(n_steps)?;
    Ok(evaluate(&q, chain.pi().probs(), chain.n_states(), a.mask()).value)
}

/// Exact infimum of `k_n(A)` over the requested family.
pub fn k_inf(chain: &MarkovChain, n_steps: u64, family: SubsetFamily) -> Result<CutReport> {
    k_inf_with(chain, n_steps, family, &EnumOptions::default())
}

pub fn k_inf_with(
    chain: &MarkovChain,
    n_steps: u64,
    family: SubsetFamily,
    opts: &EnumOptions,
) -> Result<CutReport> {
    check_enumerable(chain, opts)?;
    let q = chain.n_step_flow(n_steps)?;
    let bests = scan_all(&q, chain.pi().probs(), opts.parallel);
    let best = match family {
        SubsetFamily::StrictHalf => bests.min_strict.ok_or(Error::EmptyFamily {
            closed_value: bests.min_closed.expect("closed family is never empty").value,
        })?,
        SubsetFamily::ClosedHalf | SubsetFamily::AllProper => {
            bests.min_closed.expect("closed family is never empty")
        }
    };
    report(chain, best, n_steps as u32, CutMode::Exact, family)
}

/// Exact supremum `K = sup_A k(A)` over all nonempty proper subsets.
pub fn k_sup(chain: &MarkovChain) -> Result<CutReport> {
    k_sup_with(chain, &EnumOptions::default())
}

pub fn k_sup_with(chain: &MarkovChain, opts: &EnumOptions) -> Result<CutReport> {
    check_enumerable(chain, opts)?;
    let bests = scan_all(chain.flow(), chain.pi().probs(), opts.parallel);
    let best = bests.max_all.expect("proper subsets exist");
    report(chain, best, 1, CutMode::Exact, SubsetFamily::AllProper)
}

/// Spectral sweep cut: orders states along the second eigenfunction and
/// takes the best of the `n - 1` prefix cuts.
///
/// The returned minimum is an upper bound for `k_n`; the same scan's
/// maximum, exposed by [`sweep_cut_sup_bound`], is a lower bound for `K`.
pub fn sweep_cut_bound(chain: &MarkovChain, n_steps: u64) -> Result<CutReport> {
    let (min_best, _) = sweep_scan(chain, n_steps)?;
    report(
        chain,
        min_best,
        n_steps as u32,
        CutMode::SweepHeuristic,
        SubsetFamily::AllProper,
    )
}

/// Maximum over the same sweep-cut scan; a lower bound for `K`.
pub fn sweep_cut_sup_bound(chain: &MarkovChain, n_steps: u64) -> Result<CutReport> {
    let (_, max_best) = sweep_scan(chain, n_steps)?;
    report(
        chain,
        max_best,
        n_steps as u32,
        CutMode::SweepHeuristic,
        SubsetFamily::AllProper,
    )
}

/// Single-state-flip hill climbing from seeded random subsets.
///
/// Deterministic given `(seed, restarts)`: restart `r` draws from stream `r`
/// of a ChaCha generator keyed by `seed`. Minimization results upper-bound
/// `k_n`; maximization results lower-bound `K`.
pub fn local_search_bound(
    chain: &MarkovChain,
    n_steps: u64,
    objective: Objective,
    seed: u64,
    restarts: u32,
) -> Result<CutReport> {
    let n = chain.n_states();
    if n > 64 {
        return Err(Error::TooManyStatesForSubset { n });
    }
    if restarts == 0 {
        return Err(Error::bad_params("restarts must be at least 1"));
    }
    let q = chain.n_step_flow(n_steps)?;
    let pi = chain.pi().probs();
    let full = full_mask(n);
    let mut best: Option<Best> = None;

    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mask = loop {
            let m = rng.gen::<u64>() & full;
            if m != 0 && m != full {
                break m;
            }
        };

        let mut tracker = Tracker::new(&q, pi, n, mask);
        let flip_cap = 64 * n;
        for _ in 0..flip_cap {
            let current = tracker.value();
            let mut chosen: Option<(usize, f64)> = None;
            for s in 0..n {
                let next_mask = tracker.mask ^ (1u64 << s);
                if next_mask == 0 || next_mask == full {
                    continue;
                }
                let (flow, mass) = tracker.peek_flip(s);
                let v = flow / (mass * (1.0 - mass));
                let improves = match objective {
                    Objective::Min => v < current,
                    Objective::Max => v > current,
                };
                if !improves {
                    continue;
                }
                let better_than_chosen = match chosen {
                    None => true,
                    Some((_, cv)) => match objective {
                        Objective::Min => v < cv,
                        Objective::Max => v > cv,
                    },
                };
                if better_than_chosen {
                    chosen = Some((s, v));
                }
            }
            match chosen {
                Some((s, _)) => tracker.flip(s),
                None => break,
            }
        }

        let cand = evaluate(&q, pi, n, tracker.mask);
        let cand = Best {
            value: cand.value,
            mask: cand.side_mask,
        };
        best = Some(match best {
            None => cand,
            Some(b) => match objective {
                Objective::Min => {
                    if better_min(&cand, &b) {
                        cand
                    } else {
                        b
                    }
                }
                Objective::Max => {
                    if better_max(&cand, &b) {
                        cand
                    } else {
                        b
                    }
                }
            },
        });
    }

    report(
        chain,
        best.expect("at least one restart ran"),
        n_steps as u32,
        CutMode::LocalSearchHeuristic,
        SubsetFamily::AllProper,
    )
}

fn check_enumerable(chain: &MarkovChain, opts: &EnumOptions) -> Result<()> {
    let n = chain.n_states();
    if n > 64 {
        return Err(Error::TooManyStatesForSubset { n });
    }
    if n > opts.max_exact_states {
        return Err(Error::StateSpaceTooLarge {
            n,
            max: opts.max_exact_states,
        });
    }
    Ok(())
}

fn report(
    chain: &MarkovChain,
    best: Best,
    n_steps: u32,
    mode: CutMode,
    family: SubsetFamily,
) -> Result<CutReport> {
    Ok(CutReport {
        value: best.value,
        witness: StateSubset::from_mask(chain, best.mask)?,
        n_steps,
        mode,
        family,
    })
}

// Enumeration engine ---------------------------------------------------

/// Tracked state is refreshed from scratch this often to cap float drift.
const REFRESH_INTERVAL: u64 = 4096;
/// Tracked values within this band of the running optimum trigger an exact
/// re-evaluation; must dominate the worst drift between refreshes.
const VALUE_GUARD: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    /// Normalized witness: the side of the pair with the smaller mass,
    /// ties by smaller mask.
    mask: u64,
}

fn better_min(a: &Best, b: &Best) -> bool {
    a.value < b.value || (a.value == b.value && a.mask < b.mask)
}

fn better_max(a: &Best, b: &Best) -> bool {
    a.value > b.value || (a.value == b.value && a.mask < b.mask)
}

#[derive(Debug, Default, Clone, Copy)]
struct ScanBests {
    min_strict: Option<Best>,
    min_closed: Option<Best>,
    max_all: Option<Best>,
}

impl ScanBests {
    fn merge(self, other: ScanBests) -> ScanBests {
        fn pick(a: Option<Best>, b: Option<Best>, better: fn(&Best, &Best) -> bool) -> Option<Best> {
            match (a, b) {
                (Some(x), Some(y)) => Some(if better(&x, &y) { x } else { y }),
                (x, None) => x,
                (None, y) => y,
            }
        }
        ScanBests {
            min_strict: pick(self.min_strict, other.min_strict, better_min),
            min_closed: pick(self.min_closed, other.min_closed, better_min),
            max_all: pick(self.max_all, other.max_all, better_max),
        }
    }
}

struct Candidate {
    value: f64,
    side_mask: u64,
    side_mass: f64,
}

/// Exact evaluation of a representative pair `{A, A^c}` from scratch.
fn evaluate(q: &Array2<f64>, pi: &Array1<f64>, n: usize, mask: u64) -> Candidate {
    let full = full_mask(n);
    let comp = !mask & full;
    let mass_a = exact_mass(pi, n, mask);
    let mass_c = exact_mass(pi, n, comp);
    let flow = exact_flow(q, n, mask);
    let value = flow / (mass_a * mass_c);
    let (side_mask, side_mass) = if mass_a < mass_c || (mass_a == mass_c && mask < comp) {
        (mask, mass_a)
    } else {
        (comp, mass_c)
    };
    Candidate {
        value,
        side_mask,
        side_mass,
    }
}

fn exact_flow(q: &Array2<f64>, n: usize, mask: u64) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        if mask >> i & 1 == 1 {
            let row = q.row(i);
            for j in 0..n {
                if mask >> j & 1 == 0 {
                    acc += row[j];
                }
            }
        }
    }
    acc
}

fn exact_mass(pi: &Array1<f64>, n: usize, mask: u64) -> f64 {
    let mut acc = 0.0;
    for s in 0..n {
        if mask >> s & 1 == 1 {
            acc += pi[s];
        }
    }
    acc
}

/// Incrementally maintained cut flow and mass for a mutating subset.
struct Tracker<'a> {
    q: &'a Array2<f64>,
    pi: &'a Array1<f64>,
    n: usize,
    mask: u64,
    flow: f64,
    mass: f64,
    flips_since_refresh: u64,
}

impl<'a> Tracker<'a> {
    fn new(q: &'a Array2<f64>, pi: &'a Array1<f64>, n: usize, mask: u64) -> Self {
        let mut t = Tracker {
            q,
            pi,
            n,
            mask,
            flow: 0.0,
            mass: 0.0,
            flips_since_refresh: 0,
        };
        t.refresh();
        t
    }

    fn refresh(&mut self) {
        self.flow = exact_flow(self.q, self.n, self.mask);
        self.mass = exact_mass(self.pi, self.n, self.mask);
        self.flips_since_refresh = 0;
    }

    fn value(&self) -> f64 {
        self.flow / (self.mass * (1.0 - self.mass))
    }

    /// Flow and mass after flipping state `s`, without committing.
    fn peek_flip(&self, s: usize) -> (f64, f64) {
        let q = self.q;
        let mut row_out = 0.0; // sum_{y not in A, y != s} Q[s][y]
        let mut col_in = 0.0; // sum_{x in A, x != s} Q[x][s]
        for t in 0..self.n {
            if t == s {
                continue;
            }
            if self.mask >> t & 1 == 1 {
                col_in += q[(t, s)];
            } else {
                row_out += q[(s, t)];
            }
        }
        if self.mask >> s & 1 == 0 {
            (self.flow + row_out - col_in, self.mass + self.pi[s])
        } else {
            (self.flow - row_out + col_in, self.mass - self.pi[s])
        }
    }

    fn flip(&mut self, s: usize) {
        let (flow, mass) = self.peek_flip(s);
        self.flow = flow;
        self.mass = mass;
        self.mask ^= 1u64 << s;
        self.flips_since_refresh += 1;
        if self.flips_since_refresh >= REFRESH_INTERVAL {
            self.refresh();
        }
    }
}

/// Scans one representative per `{A, A^c}` pair (state 0 fixed inside A)
/// and returns the exact extrema for all three families.
///
/// The representative space is split on the highest-index states into
/// chunks; each chunk runs its own Gray-code walk over the remaining
/// states. Chunk results are merged by `(value, witness mask)` order, so
/// the outcome does not depend on the chunk count or thread schedule.
fn scan_all(q: &Array2<f64>, pi: &Array1<f64>, parallel: bool) -> ScanBests {
    let n = q.nrows();
    let free = n - 1;
    let chunk_bits = if free > 18 {
        6
    } else if free > 14 {
        4
    } else {
        0
    };
    let low = free - chunk_bits;
    let full = full_mask(n);

    let scan_chunk = |chunk: u64| -> ScanBests {
        let mut mask = 1u64;
        for j in 0..chunk_bits {
            if chunk >> j & 1 == 1 {
                mask |= 1u64 << (low + 1 + j);
            }
        }
        let mut bests = ScanBests::default();
        let mut tracker = Tracker::new(q, pi, n, mask);
        if mask != full {
            consider(&mut bests, &tracker, q, pi, n);
        }
        for j in 1..(1u64 << low) {
            let s = 1 + j.trailing_zeros() as usize;
            tracker.flip(s);
            if tracker.mask != full {
                consider(&mut bests, &tracker, q, pi, n);
            }
        }
        bests
    };

    let chunks = 0..(1u64 << chunk_bits);
    if parallel {
        chunks
            .into_par_iter()
            .map(scan_chunk)
            .reduce(ScanBests::default, ScanBests::merge)
    } else {
        chunks.map(scan_chunk).fold(ScanBests::default(), ScanBests::merge)
    }
}

/// Candidate filter: exact re-evaluation whenever the tracked value lands
/// within the guard band of a running optimum, then exact comparison.
fn consider(bests: &mut ScanBests, tracker: &Tracker, q: &Array2<f64>, pi: &Array1<f64>, n: usize) {
    let tracked = tracker.value();
    let near_min = |b: &Option<Best>| match b {
        None => true,
        Some(b) => tracked < b.value + VALUE_GUARD,
    };
    let near_max = |b: &Option<Best>| match b {
        None => true,
        Some(b) => tracked > b.value - VALUE_GUARD,
    };

    let wants_closed = near_min(&bests.min_closed);
    let wants_strict = near_min(&bests.min_strict);
    let wants_max = near_max(&bests.max_all);
    if !(wants_closed || wants_strict || wants_max) {
        return;
    }

    let cand = evaluate(q, pi, n, tracker.mask);
    let as_best = Best {
        value: cand.value,
        mask: cand.side_mask,
    };
    if wants_closed {
        let take = match &bests.min_closed {
            None => true,
            Some(b) => better_min(&as_best, b),
        };
        if take {
            bests.min_closed = Some(as_best);
        }
    }
    if wants_strict && cand.side_mass < 0.5 {
        let take = match &bests.min_strict {
            None => true,
            Some(b) => better_min(&as_best, b),
        };
        if take {
            bests.min_strict = Some(as_best);
        }
    }
    if wants_max {
        let take = match &bests.max_all {
            None => true,
            Some(b) => better_max(&as_best, b),
        };
        if take {
            bests.max_all = Some(as_best);
        }
    }
}

/// Prefix-cut scan along the second eigenfunction; returns (min, max).
fn sweep_scan(chain: &MarkovChain, n_steps: u64) -> Result<(Best, Best)> {
    let n = chain.n_states();
    if n > 64 {
        return Err(Error::TooManyStatesForSubset { n });
    }
    chain.require_reversible()?;
    let dec = spectral::eigen_decomposition(chain)?;
    let pi = chain.pi().probs();
    // L2(pi) eigenfunction of the second-largest eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    let score: Vec<f64> = (0..n).map(|i| dec.vectors[(i, 1)] / pi[i].sqrt()).collect();
    order.sort_by(|&i, &j| {
        score[i]
            .partial_cmp(&score[j])
            .expect("eigenvector entries are finite")
            .then(i.cmp(&j))
    });

    let q = chain.n_step_flow(n_steps)?;
    let mut tracker = Tracker::new(&q, pi, n, 1u64 << order[0]);
    let mut min_best: Option<Best> = None;
    let mut max_best: Option<Best> = None;
    for m in 1..n {
        let cand = evaluate(&q, pi, n, tracker.mask);
        let as_best = Best {
            value: cand.value,
            mask: cand.side_mask,
        };
        if min_best.map_or(true, |b| better_min(&as_best, &b)) {
            min_best = Some(as_best);
        }
        if max_best.map_or(true, |b| better_max(&as_best, &b)) {
            max_best = Some(as_best);
        }
        if m < n - 1 {
            tracker.flip(order[m]);
        }
    }
    Ok((min_best.unwrap(), max_best.unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::lazify;
    use crate::generate;
    use proptest::prelude::*;

    fn four_cycle() -> MarkovChain {
        MarkovChain::from_matrix(generate::cycle(4).unwrap()).unwrap()
    }

    fn lazy_four_cycle() -> MarkovChain {
        lazify(&four_cycle(), 0.5).unwrap()
    }

    #[test]
    fn flow_out_fixtures() {
        let chain = four_cycle();
        let odd = StateSubset::from_states(&chain, &[0, 2]).unwrap();
        assert!((flow_out(&chain, &odd, 1).unwrap() - 0.5).abs() <= 1e-15);
        // Two steps preserve the parity classes, so nothing leaves.
        assert!(flow_out(&chain, &odd, 2).unwrap().abs() <= 1e-15);

        // Lazy chains scale the one-step flow by (1 - hold).
        let base = MarkovChain::from_matrix(generate::cycle(6).unwrap()).unwrap();
        let a = StateSubset::from_states(&base, &[0, 1]).unwrap();
        let f0 = flow_out(&base, &a, 1).unwrap();
        for hold in [0.25, 0.5, 0.9] {
            let lazy = lazify(&base, hold).unwrap();
            let a = StateSubset::from_states(&lazy, &[0, 1]).unwrap();
            let f = flow_out(&lazy, &a, 1).unwrap();
            assert!((f - (1.0 - hold) * f0).abs() <= 1e-15);
        }
    }

    #[test]
    fn k_of_set_fixtures() {
        let chain = four_cycle();
        let odd = StateSubset::from_states(&chain, &[0, 2]).unwrap();
        assert!((k_of_set(&chain, &odd, 1).unwrap() - 2.0).abs() <= 1e-15);
        assert!(k_of_set(&chain, &odd, 2).unwrap().abs() <= 1e-15);
        let single = StateSubset::from_states(&chain, &[0]).unwrap();
        assert!((k_of_set(&chain, &single, 1).unwrap() - 4.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn four_cycle_extrema() {
        let chain = four_cycle();
        let strict = k_inf(&chain, 1, SubsetFamily::StrictHalf).unwrap();
        assert!((strict.value - 4.0 / 3.0).abs() <= 1e-15);
        assert_eq!(strict.witness.len(), 1);
        assert_eq!(strict.mode, CutMode::Exact);

        let closed = k_inf(&chain, 1, SubsetFamily::ClosedHalf).unwrap();
        assert!((closed.value - 1.0).abs() <= 1e-15);
        assert_eq!(closed.witness.states(), vec![0, 1]);

        let closed2 = k_inf(&chain, 2, SubsetFamily::ClosedHalf).unwrap();
        assert!(closed2.value.abs() <= 1e-15);
        assert_eq!(closed2.witness.states(), vec![0, 2]);

        let sup = k_sup(&chain).unwrap();
        assert!((sup.value - 2.0).abs() <= 1e-15);
        assert_eq!(sup.witness.states(), vec![0, 2]);
        assert_eq!(sup.family, SubsetFamily::AllProper);
    }

    #[test]
    fn lazy_four_cycle_extrema() {
        let chain = lazy_four_cycle();
        let closed = k_inf(&chain, 1, SubsetFamily::ClosedHalf).unwrap();
        assert!((closed.value - 0.5).abs() <= 1e-15);
        let strict = k_inf(&chain, 1, SubsetFamily::StrictHalf).unwrap();
        assert!((strict.value - 2.0 / 3.0).abs() <= 1e-15);
        let sup = k_sup(&chain).unwrap();
        assert!((sup.value - 1.0).abs() <= 1e-15);
        assert_eq!(sup.witness.states(), vec![0, 2]);
        let k2 = k_inf(&chain, 2, SubsetFamily::ClosedHalf).unwrap();
        assert!((k2.value - 0.75).abs() <= 1e-15);
    }

    #[test]
    fn swap_chain_strict_family_is_empty() {
        let chain = MarkovChain::from_matrix(generate::cycle(2).unwrap()).unwrap();
        match k_inf(&chain, 1, SubsetFamily::StrictHalf).unwrap_err() {
            Error::EmptyFamily { closed_value } => {
                assert!((closed_value - 2.0).abs() <= 1e-15);
            }
            other => panic!("expected EmptyFamily, got {other}"),
        }
        let sup = k_sup(&chain).unwrap();
        assert!((sup.value - 2.0).abs() <= 1e-15);
        assert_eq!(sup.witness.states(), vec![0]);
    }

    #[test]
    fn threshold_enforced() {
        let chain = MarkovChain::from_matrix(generate::random_reversible(8, 3).unwrap()).unwrap();
        let opts = EnumOptions {
            max_exact_states: 6,
            parallel: false,
        };
        assert!(matches!(
            k_inf_with(&chain, 1, SubsetFamily::ClosedHalf, &opts).unwrap_err(),
            Error::StateSpaceTooLarge { n: 8, max: 6 }
        ));
    }

    #[test]
    fn witness_reproduces_value() {
        let chain = MarkovChain::from_matrix(generate::random_reversible(7, 11).unwrap()).unwrap();
        for family in [SubsetFamily::StrictHalf, SubsetFamily::ClosedHalf] {
            let rep = k_inf(&chain, 1, family).unwrap();
            let again = k_of_set(&chain, &rep.witness, 1).unwrap();
            assert!((rep.value - again).abs() <= 1e-12);
        }
        let sup = k_sup(&chain).unwrap();
        let again = k_of_set(&chain, &sup.witness, 1).unwrap();
        assert!((sup.value - again).abs() <= 1e-12);
    }

    #[test]
    fn parallel_and_serial_agree() {
        for seed in 0..8u64 {
            let chain =
                MarkovChain::from_matrix(generate::random_reversible(9, seed).unwrap()).unwrap();
            let serial = EnumOptions {
                parallel: false,
                ..EnumOptions::default()
            };
            for family in [SubsetFamily::StrictHalf, SubsetFamily::ClosedHalf] {
                let a = k_inf(&chain, 2, family).unwrap();
                let b = k_inf_with(&chain, 2, family, &serial).unwrap();
                assert_eq!(a, b);
            }
            let a = k_sup(&chain).unwrap();
            let b = k_sup_with(&chain, &serial).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sweep_bounds_fixtures() {
        let chain = four_cycle();
        let sweep = sweep_cut_bound(&chain, 1).unwrap();
        assert!(sweep.value <= 4.0 / 3.0 + 1e-12);
        assert_eq!(sweep.mode, CutMode::SweepHeuristic);

        let lazy = lazy_four_cycle();
        let sweep = sweep_cut_bound(&lazy, 1).unwrap();
        assert!(sweep.value >= 0.5 - 1e-12);

        // Sweep cuts are exact for birth-death chains: the optimal cut is
        // an interval, and intervals are exactly the prefix cuts here.
        let path = MarkovChain::from_matrix(generate::birth_death(8, 0.5, 0.5).unwrap()).unwrap();
        let exact = k_inf(&path, 1, SubsetFamily::ClosedHalf).unwrap();
        let sweep = sweep_cut_bound(&path, 1).unwrap();
        assert!((sweep.value - exact.value).abs() <= 1e-12);
    }

    #[test]
    fn sweep_rejects_nonreversible() {
        let m = ndarray::array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        let chain = MarkovChain::from_matrix(m).unwrap();
        assert!(matches!(
            sweep_cut_bound(&chain, 1).unwrap_err(),
            Error::NotReversible { .. }
        ));
    }

    #[test]
    fn local_search_finds_periodic_witness() {
        let chain = four_cycle();
        let rep = local_search_bound(&chain, 1, Objective::Max, 7, 4).unwrap();
        assert!((rep.value - 2.0).abs() <= 1e-15);
        assert_eq!(rep.witness.states(), vec![0, 2]);
    }

    #[test]
    fn local_search_is_deterministic() {
        let chain = MarkovChain::from_matrix(generate::random_reversible(10, 5).unwrap()).unwrap();
        let a = local_search_bound(&chain, 1, Objective::Min, 123, 6).unwrap();
        let b = local_search_bound(&chain, 1, Objective::Min, 123, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn local_search_two_step_lazy() {
        let chain = lazy_four_cycle();
        let rep = local_search_bound(&chain, 2, Objective::Min, 1, 4).unwrap();
        assert!(rep.value >= 0.75 - 1e-12);
        assert!((rep.value - 0.75).abs() <= 1e-12, "should converge on 4 states");
    }

    #[test]
    fn gray_scan_matches_naive_recomputation() {
        // Every representative's tracked evaluation must agree with a
        // from-scratch pass over all proper subsets.
        for seed in [0u64, 1, 2] {
            let chain =
                MarkovChain::from_matrix(generate::random_reversible(8, seed).unwrap()).unwrap();
            let q = chain.n_step_flow(1).unwrap();
            let pi = chain.pi().probs();
            let n = chain.n_states();
            let full = full_mask(n);
            let mut naive_min_closed = f64::INFINITY;
            let mut naive_min_strict = f64::INFINITY;
            let mut naive_max = f64::NEG_INFINITY;
            for mask in 1..full {
                let cand = evaluate(&q, pi, n, mask);
                naive_min_closed = naive_min_closed.min(cand.value);
                if cand.side_mass < 0.5 {
                    naive_min_strict = naive_min_strict.min(cand.value);
                }
                naive_max = naive_max.max(cand.value);
            }
            let bests = scan_all(&q, pi, false);
            assert!((bests.min_closed.unwrap().value - naive_min_closed).abs() <= 1e-12);
            assert!((bests.min_strict.unwrap().value - naive_min_strict).abs() <= 1e-12);
            assert!((bests.max_all.unwrap().value - naive_max).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn per_set_lemmas(seed in 0u64..40, n in 3usize..8, mask in 1u64..62) {
            let chain = MarkovChain::from_matrix(generate::random_reversible(n, seed).unwrap()).unwrap();
            let full = full_mask(n);
            let mask = mask & full;
            prop_assume!(mask != 0 && mask != full);
            let a = StateSubset::from_mask(&chain, mask).unwrap();
            let c = a.complement(&chain);

            let k1 = k_of_set(&chain, &a, 1).unwrap();
            prop_assert!((0.0..=2.0 + 1e-12).contains(&k1));
            // Symmetry needs only stationarity.
            let k1c = k_of_set(&chain, &c, 1).unwrap();
            prop_assert!((k1 - k1c).abs() <= 1e-12);

            for steps in [2u64, 3, 4] {
                let kn = k_of_set(&chain, &a, steps).unwrap();
                prop_assert!(kn <= steps as f64 * k1 + 1e-12);
            }
        }

        #[test]
        fn near_two_forces_half_mass(seed in 0u64..25, n in 2usize..7) {
            // Finite surrogate of the mass-concentration lemma.
            let chain = MarkovChain::from_matrix(generate::random_reversible(n, seed).unwrap()).unwrap();
            let full = full_mask(n);
            for mask in 1..full {
                let a = StateSubset::from_mask(&chain, mask).unwrap();
                let k = k_of_set(&chain, &a, 1).unwrap();
                if k >= 2.0 - 1e-9 {
                    prop_assert!((a.mass() - 0.5).abs() <= 1e-6);
                }
            }
        }

        #[test]
        fn heuristics_are_one_sided(seed in 0u64..40, n in 3usize..10) {
            let chain = MarkovChain::from_matrix(generate::random_reversible(n, seed).unwrap()).unwrap();
            let exact_min = k_inf(&chain, 1, SubsetFamily::ClosedHalf).unwrap().value;
            let exact_max = k_sup(&chain).unwrap().value;

            let sweep_min = sweep_cut_bound(&chain, 1).unwrap().value;
            let sweep_max = sweep_cut_sup_bound(&chain, 1).unwrap().value;
            prop_assert!(sweep_min >= exact_min - 1e-12);
            prop_assert!(sweep_max <= exact_max + 1e-12);

            let ls_min = local_search_bound(&chain, 1, Objective::Min, seed, 3).unwrap().value;
            let ls_max = local_search_bound(&chain, 1, Objective::Max, seed, 3).unwrap().value;
            prop_assert!(ls_min >= exact_min - 1e-12);
            prop_assert!(ls_max <= exact_max + 1e-12);
        }
    }
}
