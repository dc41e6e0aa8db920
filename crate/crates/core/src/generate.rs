//! Chain generators for fixtures, corpora, and the CLI `gen` command.
//!
//! Every generator is deterministic given its parameters; the random family
//! uses a counter-based ChaCha stream keyed by the seed.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Symmetric nearest-neighbor walk on the n-cycle; `cycle(2)` is the
/// two-state swap chain.
pub fn cycle(n: usize) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(Error::bad_params("cycle needs at least 2 states"));
    }
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        m[(i, (i + 1) % n)] += 0.5;
        m[(i, (i + n - 1) % n)] += 0.5;
    }
    Ok(m)
}

/// Cycle walk with holding probability `hold` on every state.
pub fn lazy_cycle(n: usize, hold: f64) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&hold) {
        return Err(Error::bad_params(format!(
            "hold must lie in [0, 1), got {hold}"
        )));
    }
    let mut m = cycle(n)?;
    m.mapv_inplace(|v| (1.0 - hold) * v);
    for i in 0..n {
        m[(i, i)] += hold;
    }
    Ok(m)
}

/// Uniform jumps: `p[i][j] = 1/n` for all pairs, self-loops included.
pub fn complete(n: usize) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(Error::bad_params("complete needs at least 2 states"));
    }
    Ok(Array2::from_elem((n, n), 1.0 / n as f64))
}

/// Tridiagonal birth-death chain with interior up/down probabilities and
/// holding mass at the boundary.
pub fn birth_death(n: usize, up: f64, down: f64) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(Error::bad_params("birth-death needs at least 2 states"));
    }
    if !(up > 0.0) || !(down > 0.0) || up + down > 1.0 {
        return Err(Error::bad_params(format!(
            "need up > 0, down > 0, up + down <= 1; got up={up}, down={down}"
        )));
    }
    let mut m = Array2::<f64>::zeros((n, n));
    m[(0, 1)] = up;
    m[(0, 0)] = 1.0 - up;
    m[(n - 1, n - 2)] = down;
    m[(n - 1, n - 1)] = 1.0 - down;
    for i in 1..n - 1 {
        m[(i, i + 1)] = up;
        m[(i, i - 1)] = down;
        m[(i, i)] = 1.0 - up - down;
    }
    Ok(m)
}

/// Random reversible chain from a seeded symmetric weight matrix `W`:
/// `p[i][j] = W[i][j] / sum_j W[i][j]`, reversible with respect to
/// `pi_i` proportional to the row sum of `W`.
pub fn random_reversible(n: usize, seed: u64) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(Error::bad_params(
            "random-reversible needs at least 2 states",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            // Bounded away from zero so the support graph stays complete.
            let v = 0.05 + 0.95 * rng.gen::<f64>();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    for mut row in w.rows_mut() {
        let s: f64 = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    Ok(w)
}
