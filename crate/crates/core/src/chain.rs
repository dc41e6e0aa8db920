//! Finite-state Markov chains: validated transition kernels, stationary
//! distributions, ergodic flow, n-step kernels, and the lazy transform.
//!
//! A [`MarkovChain`] bundles the row-stochastic kernel `P`, its stationary
//! distribution `pi` (solved by a dense linear system, not power iteration),
//! the ergodic-flow matrix `Q[i][j] = pi[i] * P[i][j]`, and a reversibility
//! flag derived from the symmetry of `Q`. The struct is immutable after
//! construction; every operation in this crate is a pure function of it.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Validation tolerances for chain construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    /// Allowed deviation of each row sum from 1.
    pub row_tol: f64,
    /// Allowed residual `max |pi P - pi|` of the stationary solve.
    pub stat_tol: f64,
    /// Allowed asymmetry `max |Q[i][j] - Q[j][i]|` for the reversible flag.
    pub rev_tol: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            row_tol: 1e-12,
            stat_tol: 1e-10,
            rev_tol: 1e-10,
        }
    }
}

/// A validated row-stochastic transition matrix over `n >= 2` states.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    matrix: Array2<f64>,
}

impl TransitionKernel {
    /// Validates squareness, nonnegativity, and row sums within `row_tol`.
    pub fn new(matrix: Array2<f64>, row_tol: f64) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows < 2 {
            return Err(Error::TooFewStates { n: rows });
        }
        for (i, row) in matrix.rows().into_iter().enumerate() {
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) {
                    return Err(Error::NotStochastic {
                        row: i,
                        reason: format!("entry ({i},{j}) is {v}"),
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > row_tol {
                return Err(Error::NotStochastic {
                    row: i,
                    reason: format!("row sum {sum} deviates from 1 by more than {row_tol:e}"),
                });
            }
        }
        Ok(TransitionKernel { matrix })
    }

    pub fn n_states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Applies the Markov operator: `(Pf)(x) = sum_y p(x,y) f(y)`.
    pub fn apply(&self, f: &Array1<f64>) -> Array1<f64> {
        self.matrix.dot(f)
    }
}

/// The stationary distribution `pi` with `pi P = pi`, all entries positive.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    probs: Array1<f64>,
    residual: f64,
}

impl StationaryDistribution {
    pub fn probs(&self) -> &Array1<f64> {
        &self.probs
    }

    pub fn get(&self, state: usize) -> f64 {
        self.probs[state]
    }

    /// `max_i |(pi P)_i - pi_i|` from the solve that produced this vector.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// An `n`-step transition kernel `p^n`, computed by repeated squaring.
#[derive(Debug, Clone)]
pub struct NStepKernel {
    n_steps: u32,
    matrix: Array2<f64>,
}

impl NStepKernel {
    pub fn n_steps(&self) -> u32 {
        self.n_steps
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

/// An immutable, validated finite-state Markov chain.
///
/// Holds the kernel, the stationary distribution, the ergodic-flow matrix
/// `Q[i][j] = pi[i] p[i][j]`, and the reversibility flag together with the
/// measured detailed-balance residual. Construction rejects reducible
/// chains; periodic chains are accepted.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    kernel: TransitionKernel,
    pi: StationaryDistribution,
    flow: Array2<f64>,
    reversible: bool,
    rev_residual: f64,
    options: ChainOptions,
}

impl MarkovChain {
    /// Builds a chain from a raw matrix with default tolerances.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        build_chain(matrix, ChainOptions::default())
    }

    pub fn n_states(&self) -> usize {
        self.kernel.n_states()
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn pi(&self) -> &StationaryDistribution {
        &self.pi
    }

    /// Ergodic-flow matrix `Q[i][j] = pi[i] p[i][j]`.
    pub fn flow(&self) -> &Array2<f64> {
        &self.flow
    }

    pub fn reversible(&self) -> bool {
        self.reversible
    }

    /// `max_{i,j} |Q[i][j] - Q[j][i]|`.
    pub fn reversibility_residual(&self) -> f64 {
        self.rev_residual
    }

    pub fn options(&self) -> ChainOptions {
        self.options
    }

    /// `pi`-weighted n-step flow matrix `Q_n[i][j] = pi[i] p^n[i][j]`.
    pub fn n_step_flow(&self, n_steps: u64) -> Result<Array2<f64>> {
        let kernel_n = n_step_kernel(self, n_steps)?;
        let mut q = kernel_n.matrix;
        for (i, mut row) in q.rows_mut().into_iter().enumerate() {
            let w = self.pi.probs[i];
            row.mapv_inplace(|v| v * w);
        }
        Ok(q)
    }

    /// Errors with [`Error::NotReversible`] unless the flag is set.
    pub fn require_reversible(&self) -> Result<()> {
        if self.reversible {
            Ok(())
        } else {
            Err(Error::NotReversible {
                residual: self.rev_residual,
                tol: self.options.rev_tol,
            })
        }
    }
}

/// Constructs and fully validates a [`MarkovChain`] from a transition matrix.
///
/// Irreducibility is checked by graph reachability on the support of `p`
/// before the stationary solve, so reducible inputs fail with
/// [`Error::NotIrreducible`] rather than a confusing singular system.
pub fn build_chain(matrix: Array2<f64>, options: ChainOptions) -> Result<MarkovChain> {
    let kernel = TransitionKernel::new(matrix, options.row_tol)?;
    check_irreducible(kernel.matrix())?;
    let pi = stationary_distribution(&kernel, options.stat_tol)?;

    let n = kernel.n_states();
    let mut flow = kernel.matrix().clone();
    for (i, mut row) in flow.rows_mut().into_iter().enumerate() {
        let w = pi.probs[i];
        row.mapv_inplace(|v| v * w);
    }

    let mut rev_residual = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            rev_residual = rev_residual.max((flow[(i, j)] - flow[(j, i)]).abs());
        }
    }
    let reversible = rev_residual <= options.rev_tol;

    Ok(MarkovChain {
        kernel,
        pi,
        flow,
        reversible,
        rev_residual,
        options,
    })
}

/// Solves `pi P = pi`, `sum pi = 1` by dense Gaussian elimination on
/// `(P^T - I)` with the last equation replaced by the normalization row.
pub fn stationary_distribution(
    kernel: &TransitionKernel,
    stat_tol: f64,
) -> Result<StationaryDistribution> {
    let n = kernel.n_states();
    let p = kernel.matrix();

    // System rows: (P^T - I) pi = 0 for rows 0..n-1, sum(pi) = 1 for the last.
    let mut a = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = p[(j, i)];
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = Array1::<f64>::zeros(n);
    b[n - 1] = 1.0;

    let mut probs = solve_dense(a, b)?;

    for (state, &v) in probs.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::ZeroMassState { state });
        }
    }
    let total: f64 = probs.sum();
    probs.mapv_inplace(|v| v / total);

    let image = probs.dot(p);
    let residual = image
        .iter()
        .zip(probs.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if residual > stat_tol {
        return Err(Error::SingularSystem {
            detail: format!("stationary residual {residual:e} exceeds tol {stat_tol:e}"),
        });
    }

    Ok(StationaryDistribution { probs, residual })
}

/// Exact `n`-step kernel by repeated squaring; `n = 1` returns the kernel
/// unchanged. Rejects `n > 2^31`.
pub fn n_step_kernel(chain: &MarkovChain, n_steps: u64) -> Result<NStepKernel> {
    if n_steps < 1 {
        return Err(Error::bad_params("step count must be at least 1"));
    }
    if n_steps > 1 << 31 {
        return Err(Error::StepCountTooLarge { n: n_steps });
    }
    let matrix = mat_pow(chain.kernel.matrix(), n_steps);
    Ok(NStepKernel {
        n_steps: n_steps as u32,
        matrix,
    })
}

/// Lazy transform `hold * I + (1 - hold) * P` for `hold` in `[0, 1)`.
///
/// The stationary vector is carried over unchanged (it is invariant for the
/// transformed kernel), so `pi` is preserved bit for bit.
pub fn lazify(chain: &MarkovChain, hold: f64) -> Result<MarkovChain> {
    if !(0.0..1.0).contains(&hold) {
        return Err(Error::bad_params(format!(
            "hold must lie in [0, 1), got {hold}"
        )));
    }
    if hold == 0.0 {
        return Ok(chain.clone());
    }
    let n = chain.n_states();
    let mut matrix = chain.kernel.matrix().mapv(|v| (1.0 - hold) * v);
    for i in 0..n {
        matrix[(i, i)] += hold;
    }
    let kernel = TransitionKernel::new(matrix, chain.options.row_tol.max(1e-15 * n as f64))?;

    let mut flow = kernel.matrix().clone();
    for (i, mut row) in flow.rows_mut().into_iter().enumerate() {
        let w = chain.pi.probs[i];
        row.mapv_inplace(|v| v * w);
    }
    let mut rev_residual = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            rev_residual = rev_residual.max((flow[(i, j)] - flow[(j, i)]).abs());
        }
    }

    Ok(MarkovChain {
        kernel,
        pi: chain.pi.clone(),
        flow,
        reversible: rev_residual <= chain.options.rev_tol,
        rev_residual,
        options: chain.options,
    })
}

/// Strong connectivity of the support digraph (forward and backward
/// reachability from state 0).
fn check_irreducible(p: &Array2<f64>) -> Result<()> {
    let forward = reach(p, false);
    let backward = reach(p, true);
    if forward.iter().any(|&v| !v) || backward.iter().any(|&v| !v) {
        let unreachable = forward.iter().position(|&v| !v);
        let no_return = backward.iter().position(|&v| !v);
        let reason = match (unreachable, no_return) {
            (Some(s), _) => format!("state {s} is unreachable from state 0"),
            (_, Some(s)) => format!("state 0 is unreachable from state {s}"),
            _ => unreachable!(),
        };
        return Err(Error::NotIrreducible { reason });
    }
    Ok(())
}

fn reach(p: &Array2<f64>, transpose: bool) -> Vec<bool> {
    let n = p.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            let w = if transpose { p[(v, u)] } else { p[(u, v)] };
            if w > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Array2<f64>, mut b: Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = a[(col, col)].abs();
        for r in (col + 1)..n {
            let v = a[(r, col)].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val < 1e-13 * scale {
            return Err(Error::SingularSystem {
                detail: format!("pivot {pivot_val:e} at column {col} below threshold"),
            });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
            b.swap(col, pivot_row);
        }
        for r in (col + 1)..n {
            let factor = a[(r, col)] / a[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[(r, j)] -= factor * a[(col, j)];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in (row + 1)..n {
            acc -= a[(row, j)] * x[j];
        }
        x[row] = acc / a[(row, row)];
    }
    Ok(x)
}

/// Matrix power by binary exponentiation, exponent >= 1.
fn mat_pow(base: &Array2<f64>, mut e: u64) -> Array2<f64> {
    debug_assert!(e >= 1);
    let mut result: Option<Array2<f64>> = None;
    let mut sq = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => sq.clone(),
                Some(r) => r.dot(&sq),
            });
        }
        e >>= 1;
        if e > 0 {
            sq = sq.dot(&sq);
        }
    }
    result.expect("exponent >= 1")
}
