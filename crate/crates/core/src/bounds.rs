//! Spectral-gap bounds and the three-way gap characterization.
//!
//! Three bound formulas are evaluated here, all for reversible chains:
//!
//! * the sandwich `k >= r_1 >= kappa k^2 / 8` relating the gap at 1 to the
//!   one-step isoperimetric constant,
//! * the two-sided spectrum interval
//!   `sigma(P)|_(mean-zero) in [-sqrt(1 - kappa k_2^2 / 8),
//!   min(sqrt(1 - kappa k_2^2 / 8), 1 - kappa k^2 / 8)]`,
//! * a computable lower bound on `k_2` as the supremum over four positive
//!   parameters of the minimum of three explicit terms.
//!
//! `kappa` defaults to 1, which is weaker than the sharp constant but always
//! valid; callers who know the sharp value can raise it. The `k_2` optimizer
//! is a deterministic grid plus coordinate ascent, so bound values reproduce
//! bit for bit across runs. The classification verdict checks that the three
//! equivalent gap conditions (positive spectral gap, `0 < k <= K < 2`,
//! `k_2 > 0`) agree on the measured values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::MarkovChain;
use crate::error::{Error, Result};
use crate::isoperimetry::{
    k_inf_with, k_sup_with, CutReport, EnumOptions, SubsetFamily,
};
use crate::spectral::{spectrum, SpectrumReport};

/// Margin applied to every measured-vs-bound comparison.
pub const CHECK_MARGIN: f64 = 1e-9;

/// Slack accepted on `k` and `K` inputs beyond their mathematical ranges,
/// covering float rounding in measured values.
const RANGE_SLACK: f64 = 1e-12;

/// Configuration for bound evaluation and the `k_2` optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Constant in the sandwich and interval formulas; `>= 1`.
    pub kappa: f64,
    /// Grid points per parameter axis, log-spaced.
    pub grid_points: usize,
    /// Coordinate-ascent passes after the grid phase.
    pub refine_iters: usize,
    /// Step shrink factor applied after a pass without improvement.
    pub shrink: f64,
    /// Threshold for the "is positive" / "is below 2" predicates.
    pub gap_tol: f64,
    /// Box for `delta`, inside (0, 1/2).
    pub delta_box: (f64, f64),
    /// Box for `eps1`, inside (0, 1).
    pub eps1_box: (f64, f64),
    /// Box for `eps2`, inside (0, 1).
    pub eps2_box: (f64, f64),
    /// Box for `eps`, inside (0, 1).
    pub eps_box: (f64, f64),
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            kappa: 1.0,
            grid_points: 32,
            refine_iters: 200,
            shrink: 0.5,
            gap_tol: 1e-9,
            delta_box: (1e-6, 0.4999),
            eps1_box: (1e-6, 0.9999),
            eps2_box: (1e-6, 0.9999),
            eps_box: (1e-6, 0.9999),
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 1.0) {
            return Err(Error::domain(format!("kappa must be >= 1, got {}", self.kappa)));
        }
        if self.grid_points < 2 {
            return Err(Error::domain("grid_points must be at least 2"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::domain("shrink must lie in (0, 1)"));
        }
        let boxes = [
            ("delta", self.delta_box, 0.5),
            ("eps1", self.eps1_box, 1.0),
            ("eps2", self.eps2_box, 1.0),
            ("eps", self.eps_box, 1.0),
        ];
        for (name, (lo, hi), cap) in boxes {
            if !(lo > 0.0 && lo < hi && hi < cap) {
                return Err(Error::domain(format!(
                    "{name} box ({lo}, {hi}) must sit inside (0, {cap})"
                )));
            }
        }
        Ok(())
    }
}

/// A closed interval on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64, margin: f64) -> bool {
        x >= self.lo - margin && x <= self.hi + margin
    }

    pub fn well_formed(&self) -> bool {
        self.lo <= self.hi
    }
}

/// Sandwich interval for the gap at 1: `[kappa k^2 / 8, k]`.
pub fn lawler_sokal_interval(k: f64, params: &BoundParams) -> Result<Interval> {
    params.validate()?;
    check_k_range("k", k)?;
    Ok(Interval {
        lo: params.kappa * k * k / 8.0,
        hi: k,
    })
}

/// Two-sided spectrum interval for the mean-zero subspace.
pub fn theorem2_interval(k: f64, k2: f64, params: &BoundParams) -> Result<Interval> {
    params.validate()?;
    check_k_range("k", k)?;
    check_k_range("k2", k2)?;
    let radius = (1.0 - params.kappa * k2 * k2 / 8.0).max(0.0).sqrt();
    Ok(Interval {
        lo: -radius,
        hi: radius.min(1.0 - params.kappa * k * k / 8.0),
    })
}

fn check_k_range(name: &str, v: f64) -> Result<()> {
    if !(-RANGE_SLACK..=2.0 + RANGE_SLACK).contains(&v) {
        return Err(Error::domain(format!("{name} must lie in [0, 2], got {v}")));
    }
    Ok(())
}

/// The minimum of the three lower-bound terms for `k_2` at one parameter
/// point. May be negative; the optimizer clamps only its final answer.
pub fn k2_objective(
    k: f64,
    k_sup: f64,
    delta: f64,
    eps1: f64,
    eps2: f64,
    eps: f64,
) -> Result<f64> {
    check_k_range("k", k)?;
    if !(k_sup > 0.0 && k_sup <= 2.0 + RANGE_SLACK) {
        return Err(Error::domain(format!("K must lie in (0, 2], got {k_sup}")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    for (name, v) in [("eps1", eps1), ("eps2", eps2), ("eps", eps)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    Ok(raw_objective(k, k_sup, [delta, eps1, eps2, eps]))
}

#[inline]
fn raw_objective(k: f64, k_sup: f64, x: [f64; 4]) -> f64 {
    let [delta, eps1, eps2, eps] = x;
    let t1 = k * k * delta / 16.0;
    let t2 = k / 4.0 * (eps1 * eps2 * (1.0 - delta) - delta);
    let t3 = eps
        * (k * ((2.0 - eps) * (1.0 - eps1) * (1.0 - eps2) * (1.0 - delta)
            / ((1.0 - eps) * k_sup)
            - 1.0 / (1.0 - eps))
            - eps / (1.0 - eps));
    t1.min(t2).min(t3)
}

/// Maximizing parameters of the `k_2` lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct K2Argmax {
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps: f64,
}

/// Result of the `k_2` lower-bound optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct K2LowerBound {
    /// Certified lower bound on `k_2`, clamped at 0.
    pub value: f64,
    /// Unclamped optimum, kept for diagnostics.
    pub raw: f64,
    pub argmax: K2Argmax,
}

/// Deterministic maximization of [`k2_objective`] over the parameter box.
///
/// Log-spaced grid per axis, the coupling curve
/// `eps1 = eps2 = sqrt(2 delta / (1 - delta))` seeded as extra candidates,
/// then coordinate ascent in log space. Every evaluated point certifies a
/// lower bound, so the result is sound regardless of how close the search
/// gets to the true supremum.
pub fn k2_lower_bound(k: f64, k_sup: f64, params: &BoundParams) -> Result<K2LowerBound> {
    params.validate()?;
    check_k_range("k", k)?;
    if !(k_sup > 0.0 && k_sup <= 2.0 + RANGE_SLACK) {
        return Err(Error::domain(format!("K must lie in (0, 2], got {k_sup}")));
    }

    let boxes = [params.delta_box, params.eps1_box, params.eps2_box, params.eps_box];
    let m = params.grid_points;
    let grids: Vec<Vec<f64>> = boxes.iter().map(|&(lo, hi)| log_grid(lo, hi, m)).collect();

    // Grid phase, reduced by (value desc, tuple lex asc); the reduction is a
    // total-order max, so the parallel split cannot change the outcome.
    let total = m * m * m * m;
    let decode = |idx: usize| -> [f64; 4] {
        let e = idx % m;
        let e2 = idx / m % m;
        let e1 = idx / (m * m) % m;
        let d = idx / (m * m * m);
        [grids[0][d], grids[1][e1], grids[2][e2], grids[3][e]]
    };
    let mut best = (0..total)
        .into_par_iter()
        .map(|idx| {
            let x = decode(idx);
            (raw_objective(k, k_sup, x), x)
        })
        .reduce_with(|a, b| if better_point(&a, &b) { a } else { b })
        .expect("grid is nonempty");

    // Coupling curve candidates: eps1 eps2 (1 - delta) = 2 delta.
    for &delta in &grids[0] {
        let coupled = (2.0 * delta / (1.0 - delta)).sqrt();
        if coupled <= params.eps1_box.0
            || coupled >= params.eps1_box.1
            || coupled <= params.eps2_box.0
            || coupled >= params.eps2_box.1
        {
            continue;
        }
        for &eps in &grids[3] {
            let x = [delta, coupled, coupled, eps];
            let cand = (raw_objective(k, k_sup, x), x);
            if better_point(&cand, &best) {
                best = cand;
            }
        }
    }

    // Coordinate ascent in log space around the incumbent.
    let mut steps: [f64; 4] = std::array::from_fn(|i| {
        let (lo, hi) = boxes[i];
        (hi / lo).ln() / (m - 1) as f64
    });
    for _ in 0..params.refine_iters {
        let mut improved = false;
        for axis in 0..4 {
            for dir in [1.0f64, -1.0] {
                let (lo, hi) = boxes[axis];
                let mut x = best.1;
                x[axis] = (x[axis] * (dir * steps[axis]).exp()).clamp(lo, hi);
                if x[axis] == best.1[axis] {
                    continue;
                }
                let v = raw_objective(k, k_sup, x);
                if v > best.0 {
                    best = (v, x);
                    improved = true;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= params.shrink;
            }
        }
    }

    let (raw, x) = best;
    Ok(K2LowerBound {
        value: raw.max(0.0),
        raw,
        argmax: K2Argmax {
            delta: x[0],
            eps1: x[1],
            eps2: x[2],
            eps: x[3],
        },
    })
}

fn better_point(a: &(f64, [f64; 4]), b: &(f64, [f64; 4])) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => tuple_less(&a.1, &b.1),
    }
}

fn tuple_less(a: &[f64; 4], b: &[f64; 4]) -> bool {
    for i in 0..4 {
        match a[i].total_cmp(&b[i]) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

fn log_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let ratio = hi / lo;
    (0..m)
        .map(|i| lo * ratio.powf(i as f64 / (m - 1) as f64))
        .collect()
}

/// The three equivalent gap conditions evaluated on measured quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theorem2Verdict {
    /// `r > gap_tol`.
    pub has_gap: bool,
    /// `k > gap_tol` and `K < 2 - gap_tol`.
    pub cond_k_range: bool,
    /// `k_2 > gap_tol`.
    pub cond_k2: bool,
    /// All three predicates agree; must hold for every valid reversible chain.
    pub consistent: bool,
}

fn verdict_from(r: f64, k: f64, k_sup: f64, k2: f64, gap_tol: f64) -> Theorem2Verdict {
    let has_gap = r > gap_tol;
    let cond_k_range = k > gap_tol && k_sup < 2.0 - gap_tol;
    let cond_k2 = k2 > gap_tol;
    Theorem2Verdict {
        has_gap,
        cond_k_range,
        cond_k2,
        consistent: has_gap == cond_k_range && cond_k_range == cond_k2,
    }
}

/// One measured-vs-bound comparison with its margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub lo: f64,
    pub hi: f64,
    pub margin: f64,
}

fn check(name: &str, measured: f64, lo: f64, hi: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: measured >= lo - CHECK_MARGIN && measured <= hi + CHECK_MARGIN,
        measured,
        lo,
        hi,
        margin: CHECK_MARGIN,
    }
}

/// Full bound evaluation for one chain.
///
/// The sandwich uses the strict-half `k` (absent when that family is
/// empty); the spectrum interval and the `k_2` lower bound use the
/// closed-half constants. Each cut report names its family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kappa: f64,
    pub k_strict: Option<CutReport>,
    pub k_closed: CutReport,
    pub k_sup: CutReport,
    pub k2: CutReport,
    pub gap_at_one: f64,
    pub spectral_gap: f64,
    pub lawler_sokal: Option<Interval>,
    pub theorem2: Interval,
    pub k2_bound: K2LowerBound,
    pub verdict: Theorem2Verdict,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// Classifies a chain by the three equivalent gap conditions.
pub fn classify(chain: &MarkovChain) -> Result<Theorem2Verdict> {
    classify_with(chain, &BoundParams::default(), &EnumOptions::default())
}

pub fn classify_with(
    chain: &MarkovChain,
    params: &BoundParams,
    enum_opts: &EnumOptions,
) -> Result<Theorem2Verdict> {
    params.validate()?;
    let r = spectrum(chain)?.spectral_gap;
    let k = k_inf_with(chain, 1, SubsetFamily::ClosedHalf, enum_opts)?.value;
    let k_sup = k_sup_with(chain, enum_opts)?.value;
    let k2 = k_inf_with(chain, 2, SubsetFamily::ClosedHalf, enum_opts)?.value;
    Ok(verdict_from(r, k, k_sup, k2, params.gap_tol))
}

/// Measures every constant, evaluates every bound, and reports each
/// containment with its margin.
pub fn verify_report(chain: &MarkovChain, params: &BoundParams) -> Result<BoundReport> {
    verify_report_with(chain, params, &EnumOptions::default())
}

pub fn verify_report_with(
    chain: &MarkovChain,
    params: &BoundParams,
    enum_opts: &EnumOptions,
) -> Result<BoundReport> {
    params.validate()?;
    let spec: SpectrumReport = spectrum(chain)?;

    let k_strict = match k_inf_with(chain, 1, SubsetFamily::StrictHalf, enum_opts) {
        Ok(rep) => Some(rep),
        Err(Error::EmptyFamily { .. }) => None,
        Err(e) => return Err(e),
    };
    let k_closed = k_inf_with(chain, 1, SubsetFamily::ClosedHalf, enum_opts)?;
    let k_sup = k_sup_with(chain, enum_opts)?;
    let k2 = k_inf_with(chain, 2, SubsetFamily::ClosedHalf, enum_opts)?;

    let lawler_sokal = match &k_strict {
        Some(rep) => Some(lawler_sokal_interval(rep.value, params)?),
        None => None,
    };
    let theorem2 = theorem2_interval(k_closed.value, k2.value, params)?;
    let k2_bound = k2_lower_bound(k_closed.value, k_sup.value, params)?;
    let verdict = verdict_from(
        spec.spectral_gap,
        k_closed.value,
        k_sup.value,
        k2.value,
        params.gap_tol,
    );

    let n = chain.n_states();
    let mut checks = Vec::new();
    if let Some(interval) = &lawler_sokal {
        checks.push(check(
            "gap_at_one_in_lawler_sokal",
            spec.gap_at_one,
            interval.lo,
            interval.hi,
        ));
    }
    checks.push(check(
        "second_eigenvalue_in_theorem2",
        spec.eigenvalues[1],
        theorem2.lo,
        theorem2.hi,
    ));
    checks.push(check(
        "bottom_eigenvalue_in_theorem2",
        spec.eigenvalues[n - 1],
        theorem2.lo,
        theorem2.hi,
    ));
    checks.push(check("k2_lower_bound_sound", k2_bound.value, 0.0, k2.value));
    let all_passed = checks.iter().all(|c| c.passed) && verdict.consistent;

    Ok(BoundReport {
        kappa: params.kappa,
        k_strict,
        k_closed,
        k_sup,
        k2,
        gap_at_one: spec.gap_at_one,
        spectral_gap: spec.spectral_gap,
        lawler_sokal,
        theorem2,
        k2_bound,
        verdict,
        checks,
        all_passed,
    })
}
