//! Exact L2(pi) spectrum of reversible chains and the derived gaps.
//!
//! For a reversible chain the Markov operator is self-adjoint on L2(pi), so
//! its spectrum is real and contained in [-1, 1]. We realize self-adjointness
//! through the similarity transform `S[i][j] = sqrt(pi_i / pi_j) * p[i][j]`,
//! which is symmetric exactly when detailed balance holds, and diagonalize
//! `S` with cyclic Jacobi rotations. Jacobi is slower than tridiagonalization
//! but fully deterministic and accurate to machine precision, which is what
//! the verification suites need.
//!
//! Gap conventions for finite chains, with eigenvalues sorted descending
//! `1 = l_1 >= l_2 >= ... >= l_n >= -1`:
//!
//! ```text
//! r_1  = 1 - l_2      (gap at +1, largest eigenvalue on the mean-zero space)
//! r_-1 = l_n + 1      (gap at -1)
//! r    = min(r_1, r_-1)
//! ```

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::chain::MarkovChain;
use crate::error::{Error, Result};

/// Iteration cap for the Jacobi sweep loop.
const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm at which the iteration stops.
const OFF_TOL: f64 = 1e-13;

/// Full sorted spectrum of the Markov operator with the derived gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues sorted descending; the first entry is 1 up to solver error.
    pub eigenvalues: Vec<f64>,
    /// `r_1 = 1 - lambda_2`.
    pub gap_at_one: f64,
    /// `r_-1 = lambda_n + 1`.
    pub gap_at_minus_one: f64,
    /// `r = min(r_1, r_-1)`.
    pub spectral_gap: f64,
}

impl SpectrumReport {
    fn from_sorted(eigenvalues: Vec<f64>) -> Self {
        let n = eigenvalues.len();
        let gap_at_one = 1.0 - eigenvalues[1];
        let gap_at_minus_one = eigenvalues[n - 1] + 1.0;
        SpectrumReport {
            eigenvalues,
            gap_at_one,
            gap_at_minus_one,
            spectral_gap: gap_at_one.min(gap_at_minus_one),
        }
    }
}

/// Eigenvalues (descending) and matching eigenvector columns of the
/// symmetrized kernel.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector of `values[j]` in plain l2.
    pub vectors: Array2<f64>,
}

/// Similarity transform `S = D^{1/2} P D^{-1/2}` with `D = diag(pi)`.
///
/// `S` shares the spectrum of `P` and is symmetric up to the chain's
/// detailed-balance residual.
pub fn symmetrize(chain: &MarkovChain) -> Result<Array2<f64>> {
    chain.require_reversible()?;
    let n = chain.n_states();
    let p = chain.kernel().matrix();
    let pi = chain.pi().probs();
    let mut s = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = (pi[i] / pi[j]).sqrt() * p[(i, j)];
        }
    }
    Ok(s)
}

/// Spectrum of the chain's one-step operator.
pub fn spectrum(chain: &MarkovChain) -> Result<SpectrumReport> {
    let s = symmetric_part(&symmetrize(chain)?);
    let (values, _) = eigen_sym(&s)?;
    Ok(SpectrumReport::from_sorted(values))
}

/// Spectrum of the two-step operator `P^2`, computed on `S * S`.
///
/// The two-step kernel of a periodic chain is reducible, so this goes
/// through the symmetrized matrix directly instead of rebuilding a chain.
pub fn spectrum_of_square(chain: &MarkovChain) -> Result<SpectrumReport> {
    let s = symmetric_part(&symmetrize(chain)?);
    let s2 = s.dot(&s);
    let (values, _) = eigen_sym(&s2)?;
    Ok(SpectrumReport::from_sorted(values))
}

/// Spectrum together with eigenvectors of the symmetrized kernel.
pub fn eigen_decomposition(chain: &MarkovChain) -> Result<EigenDecomposition> {
    let s = symmetric_part(&symmetrize(chain)?);
    let (values, vectors) = eigen_sym(&s)?;
    Ok(EigenDecomposition { values, vectors })
}

fn symmetric_part(s: &Array2<f64>) -> Array2<f64> {
    let n = s.nrows();
    let mut out = s.clone();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    out
}

/// Cyclic Jacobi diagonalization of a symmetric matrix.
///
/// Returns eigenvalues sorted descending and the matching eigenvector
/// columns. Stops once the off-diagonal Frobenius norm falls below
/// `1e-13`; errors with [`Error::NoConvergence`] after 100 sweeps.
pub fn eigen_sym(matrix: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "eigen_sym needs a square matrix");
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);

    let mut off = off_frobenius(&a);
    let mut sweeps = 0;
    while off > OFF_TOL {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle per Golub & Van Loan sec. 8.4.
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_frobenius(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .expect("eigenvalues are finite")
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok((values, vectors))
}

fn off_frobenius(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// A function on states in the normalized mean-zero class of L2(pi).
#[derive(Debug, Clone)]
pub struct TestFunction {
    values: Array1<f64>,
}

impl TestFunction {
    /// Validates mean zero and unit norm under `pi`, both within `1e-10`.
    pub fn new(chain: &MarkovChain, values: Array1<f64>) -> Result<Self> {
        if values.len() != chain.n_states() {
            return Err(Error::bad_params(format!(
                "function has {} entries for {} states",
                values.len(),
                chain.n_states()
            )));
        }
        let pi = chain.pi().probs();
        let integral: f64 = pi.iter().zip(values.iter()).map(|(p, f)| p * f).sum();
        if integral.abs() > 1e-10 {
            return Err(Error::NotMeanZero { integral });
        }
        let norm_sq: f64 = pi.iter().zip(values.iter()).map(|(p, f)| p * f * f).sum();
        if (norm_sq - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(TestFunction { values })
    }

    /// Centers and scales an arbitrary non-constant function into the class.
    pub fn normalized(chain: &MarkovChain, raw: Array1<f64>) -> Result<Self> {
        let pi = chain.pi().probs();
        let mean: f64 = pi.iter().zip(raw.iter()).map(|(p, f)| p * f).sum();
        let centered = raw.mapv(|f| f - mean);
        let norm_sq: f64 = pi
            .iter()
            .zip(centered.iter())
            .map(|(p, f)| p * f * f)
            .sum();
        if norm_sq <= 0.0 {
            return Err(Error::bad_params(
                "function is pi-a.e. constant, cannot normalize",
            ));
        }
        let scale = norm_sq.sqrt();
        Self::new(chain, centered.mapv(|f| f / scale))
    }

    /// The L2(pi) eigenfunction for eigenvector column `col` of the
    /// symmetrized kernel: `f_i = v_i / sqrt(pi_i)`.
    pub fn from_eigenvector_column(
        chain: &MarkovChain,
        decomposition: &EigenDecomposition,
        col: usize,
    ) -> Result<Self> {
        let pi = chain.pi().probs();
        let values = Array1::from_iter(
            (0..chain.n_states()).map(|i| decomposition.vectors[(i, col)] / pi[i].sqrt()),
        );
        Self::new(chain, values)
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }
}

/// Empirical decay estimate `||P^n f||_2^{1/n}` at `n = n_max`.
///
/// The spectrum already gives the exact limit; this finite-n number is a
/// consistency probe and never exceeds `max(|l_2|, |l_n|)` for reversible
/// chains (up to rounding).
pub fn decay_rate(chain: &MarkovChain, f: &TestFunction, n_max: u32) -> Result<f64> {
    if n_max < 2 {
        return Err(Error::domain(format!("n_max must be >= 2, got {n_max}")));
    }
    // Revalidate against this chain; the function may come from another one.
    let f = TestFunction::new(chain, f.values.clone())?;
    let mut g = f.values;
    for _ in 0..n_max {
        g = chain.kernel().apply(&g);
    }
    let pi = chain.pi().probs();
    let norm_sq: f64 = pi.iter().zip(g.iter()).map(|(p, v)| p * v * v).sum();
    if norm_sq == 0.0 {
        return Ok(0.0);
    }
    Ok(norm_sq.sqrt().powf(1.0 / n_max as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::lazify;
    use crate::generate;
    use ndarray::array;
    use proptest::prelude::*;

    fn four_cycle() -> MarkovChain {
        MarkovChain::from_matrix(generate::cycle(4).unwrap()).unwrap()
    }

    fn assert_close(actual: &[f64], expect: &[f64], tol: f64) {
        assert_eq!(actual.len(), expect.len());
        for (a, b) in actual.iter().zip(expect.iter()) {
            assert!((a - b).abs() <= tol, "{actual:?} vs {expect:?}");
        }
    }

    #[test]
    fn symmetrize_uniform_pi_is_identity_transform() {
        let chain = four_cycle();
        let s = symmetrize(&chain).unwrap();
        assert_eq!(&s, chain.kernel().matrix());
    }

    #[test]
    fn symmetrize_birth_death() {
        let m = array![[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]];
        let chain = MarkovChain::from_matrix(m).unwrap();
        let s = symmetrize(&chain).unwrap();
        let half_sqrt = 0.5f64.sqrt();
        assert!((s[(0, 1)] - half_sqrt).abs() <= 1e-15);
        assert!((s[(1, 0)] - half_sqrt).abs() <= 1e-15);
        assert!((s[(0, 1)] - s[(1, 0)]).abs() <= 1e-15);
    }

    #[test]
    fn rotation_chain_is_not_reversible() {
        let m = array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        let chain = MarkovChain::from_matrix(m).unwrap();
        assert!(matches!(
            symmetrize(&chain).unwrap_err(),
            Error::NotReversible { .. }
        ));
    }

    #[test]
    fn four_cycle_spectrum() {
        let report = spectrum(&four_cycle()).unwrap();
        assert_close(&report.eigenvalues, &[1.0, 0.0, 0.0, -1.0], 1e-12);
        assert!((report.gap_at_one - 1.0).abs() <= 1e-12);
        assert!(report.gap_at_minus_one.abs() <= 1e-12);
        assert!(report.spectral_gap.abs() <= 1e-12);
    }

    #[test]
    fn lazy_four_cycle_spectrum() {
        let chain = lazify(&four_cycle(), 0.5).unwrap();
        let report = spectrum(&chain).unwrap();
        assert_close(&report.eigenvalues, &[1.0, 0.5, 0.5, 0.0], 1e-12);
        assert!((report.gap_at_one - 0.5).abs() <= 1e-12);
        assert!((report.gap_at_minus_one - 1.0).abs() <= 1e-12);
        assert!((report.spectral_gap - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn swap_chain_spectrum() {
        let chain = MarkovChain::from_matrix(generate::cycle(2).unwrap()).unwrap();
        let report = spectrum(&chain).unwrap();
        assert_close(&report.eigenvalues, &[1.0, -1.0], 1e-12);
        assert!(report.spectral_gap.abs() <= 1e-12);
    }

    #[test]
    fn square_spectrum_fixtures() {
        let report = spectrum_of_square(&four_cycle()).unwrap();
        assert_close(&report.eigenvalues, &[1.0, 1.0, 0.0, 0.0], 1e-12);

        let lazy = lazify(&four_cycle(), 0.5).unwrap();
        let report = spectrum_of_square(&lazy).unwrap();
        assert_close(&report.eigenvalues, &[1.0, 0.25, 0.25, 0.0], 1e-12);
    }

    #[test]
    fn decay_rate_on_parity_function() {
        // f = 1_{0,2} - 1_{1,3} is the -1 eigenfunction of the 4-cycle.
        let chain = four_cycle();
        let f = TestFunction::new(&chain, array![1.0, -1.0, 1.0, -1.0]).unwrap();
        for n_max in [2, 5, 20] {
            let v = decay_rate(&chain, &f, n_max).unwrap();
            assert!((v - 1.0).abs() <= 1e-12);
        }

        // The lazy kernel annihilates the same function.
        let lazy = lazify(&chain, 0.5).unwrap();
        let v = decay_rate(&lazy, &f, 20).unwrap();
        assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn decay_rate_rejects_bad_functions() {
        let chain = four_cycle();
        assert!(matches!(
            TestFunction::new(&chain, array![1.0, 1.0, 1.0, 1.0]).unwrap_err(),
            Error::NotMeanZero { .. }
        ));
        assert!(matches!(
            TestFunction::new(&chain, array![2.0, -2.0, 2.0, -2.0]).unwrap_err(),
            Error::NotNormalized { .. }
        ));
        let f = TestFunction::new(&chain, array![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert!(matches!(
            decay_rate(&chain, &f, 1).unwrap_err(),
            Error::DomainError { .. }
        ));
    }

    #[test]
    fn extreme_eigenfunction_tracks_gap() {
        // No gap: the extreme eigenfunction keeps norm 1. With a gap the
        // decay estimate drops to 1 - r.
        let chain = four_cycle();
        let dec = eigen_decomposition(&chain).unwrap();
        let f = TestFunction::from_eigenvector_column(&chain, &dec, 3).unwrap();
        assert!(decay_rate(&chain, &f, 16).unwrap() >= 1.0 - 1e-6);

        let lazy = lazify(&chain, 0.5).unwrap();
        let dec = eigen_decomposition(&lazy).unwrap();
        let f = TestFunction::from_eigenvector_column(&lazy, &dec, 1).unwrap();
        let v = decay_rate(&lazy, &f, 16).unwrap();
        assert!((v - 0.5).abs() <= 1e-9);
    }

    proptest! {
        #[test]
        fn spectral_mapping_and_bounds(seed in 0u64..150, n in 2usize..9) {
            let chain = MarkovChain::from_matrix(generate::random_reversible(n, seed).unwrap()).unwrap();
            let report = spectrum(&chain).unwrap();
            prop_assert!((report.eigenvalues[0] - 1.0).abs() <= 1e-9);
            for &l in &report.eigenvalues {
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&l));
            }
            prop_assert!(report.gap_at_one >= -1e-9);
            prop_assert!(report.gap_at_minus_one >= -1e-9);

            // sigma(P^2) = squares of sigma(P) as sorted multisets.
            let square = spectrum_of_square(&chain).unwrap();
            let mut squared: Vec<f64> = report.eigenvalues.iter().map(|l| l * l).collect();
            squared.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (a, b) in square.eigenvalues.iter().zip(squared.iter()) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
            for &l in &square.eigenvalues {
                prop_assert!(l >= -1e-9);
            }
        }

        #[test]
        fn eigen_residuals_are_tiny(seed in 0u64..100, n in 2usize..9) {
            let chain = MarkovChain::from_matrix(generate::random_reversible(n, seed).unwrap()).unwrap();
            let s = symmetrize(&chain).unwrap();
            let dec = eigen_decomposition(&chain).unwrap();
            for (col, &l) in dec.values.iter().enumerate() {
                for row in 0..n {
                    let mut sv = 0.0;
                    for k in 0..n {
                        sv += s[(row, k)] * dec.vectors[(k, col)];
                    }
                    prop_assert!((sv - l * dec.vectors[(row, col)]).abs() <= 1e-8);
                }
            }
        }

        #[test]
        fn decay_never_exceeds_operator_norm(seed in 0u64..60, n in 3usize..8) {
            let chain = MarkovChain::from_matrix(generate::random_reversible(n, seed).unwrap()).unwrap();
            let mut raw = Array1::<f64>::zeros(n);
            for (i, v) in raw.iter_mut().enumerate() {
                *v = ((seed as f64) + 1.3) * (i as f64 + 0.7).sin();
            }
            if let Ok(f) = TestFunction::normalized(&chain, raw) {
                let v = decay_rate(&chain, &f, 12).unwrap();
                prop_assert!(v <= 1.0 + 1e-9);
                let report = spectrum(&chain).unwrap();
                let rho = report.eigenvalues[1]
                    .abs()
                    .max(report.eigenvalues[n - 1].abs());
                // Below the float noise floor the measured norm saturates
                // at rounding level, so only compare while rho^n stays
                // clear of it.
                if rho.powi(12) >= 1e-12 {
                    prop_assert!(v <= rho + 1e-9, "decay {v} vs rho {rho}");
                }
            }
        }
    }
}
