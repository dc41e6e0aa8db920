//! Subsets of the state space as bitmasks with cached stationary mass.

use serde::{Deserialize, Serialize};

use crate::chain::MarkovChain;
use crate::error::{Error, Result};

/// A nonempty proper subset of the states of a chain.
///
/// Backed by a `u64` bitmask, so chains are limited to 64 states here; exact
/// enumeration caps out far earlier anyway. The stationary mass `pi(A)` is
/// computed once at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SubsetRepr", try_from = "SubsetRepr")]
pub struct StateSubset {
    n_states: usize,
    mask: u64,
    mass: f64,
}

impl StateSubset {
    /// Builds a subset from a bitmask over the chain's states.
    pub fn from_mask(chain: &MarkovChain, mask: u64) -> Result<Self> {
        let n = chain.n_states();
        if n > 64 {
            return Err(Error::TooManyStatesForSubset { n });
        }
        let full = full_mask(n);
        if mask & !full != 0 {
            return Err(Error::StateOutOfRange {
                state: (63 - (mask & !full).leading_zeros()) as usize,
                n,
            });
        }
        if mask == 0 || mask == full {
            return Err(Error::ImproperSubset);
        }
        let mass = mask_mass(chain, mask);
        Ok(StateSubset {
            n_states: n,
            mask,
            mass,
        })
    }

    /// Builds a subset from explicit state indices.
    pub fn from_states(chain: &MarkovChain, states: &[usize]) -> Result<Self> {
        let n = chain.n_states();
        let mut mask = 0u64;
        for &s in states {
            if s >= n {
                return Err(Error::StateOutOfRange { state: s, n });
            }
            mask |= 1 << s;
        }
        Self::from_mask(chain, mask)
    }

    pub fn complement(&self, chain: &MarkovChain) -> Self {
        let mask = !self.mask & full_mask(self.n_states);
        StateSubset {
            n_states: self.n_states,
            mask,
            mass: mask_mass(chain, mask),
        }
    }

    pub fn contains(&self, state: usize) -> bool {
        state < self.n_states && self.mask >> state & 1 == 1
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Cached stationary mass `pi(A)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Ascending state indices.
    pub fn states(&self) -> Vec<usize> {
        (0..self.n_states).filter(|&s| self.contains(s)).collect()
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Mass of a mask by direct summation in ascending state order.
pub(crate) fn mask_mass(chain: &MarkovChain, mask: u64) -> f64 {
    let pi = chain.pi().probs();
    let mut mass = 0.0;
    for s in 0..chain.n_states() {
        if mask >> s & 1 == 1 {
            mass += pi[s];
        }
    }
    mass
}

/// Serialized form: explicit state list plus the cached mass.
#[derive(Serialize, Deserialize)]
struct SubsetRepr {
    n_states: usize,
    states: Vec<usize>,
    mass: f64,
}

impl From<StateSubset> for SubsetRepr {
    fn from(s: StateSubset) -> Self {
        SubsetRepr {
            n_states: s.n_states,
            states: s.states(),
            mass: s.mass,
        }
    }
}

impl TryFrom<SubsetRepr> for StateSubset {
    type Error = String;

    fn try_from(r: SubsetRepr) -> std::result::Result<Self, String> {
        if r.n_states > 64 {
            return Err(format!("subset over {} states exceeds 64", r.n_states));
        }
        let mut mask = 0u64;
        for &s in &r.states {
            if s >= r.n_states {
                return Err(format!("state {} out of range for {}", s, r.n_states));
            }
            mask |= 1 << s;
        }
        if mask == 0 || mask == full_mask(r.n_states) {
            return Err("subset must be nonempty and proper".into());
        }
        Ok(StateSubset {
            n_states: r.n_states,
            mask,
            mass: r.mass,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    fn four_cycle() -> MarkovChain {
        MarkovChain::from_matrix(generate::cycle(4).unwrap()).unwrap()
    }

    #[test]
    fn mass_and_membership() {
        let chain = four_cycle();
        let a = StateSubset::from_states(&chain, &[0, 2]).unwrap();
        assert_eq!(a.mask(), 0b0101);
        assert_eq!(a.mass(), 0.5);
        assert!(a.contains(2) && !a.contains(1));
        assert_eq!(a.states(), vec![0, 2]);
        let c = a.complement(&chain);
        assert_eq!(c.states(), vec![1, 3]);
    }

    #[test]
    fn rejects_improper() {
        let chain = four_cycle();
        assert!(matches!(
            StateSubset::from_mask(&chain, 0).unwrap_err(),
            Error::ImproperSubset
        ));
        assert!(matches!(
            StateSubset::from_mask(&chain, 0b1111).unwrap_err(),
            Error::ImproperSubset
        ));
        assert!(matches!(
            StateSubset::from_states(&chain, &[4]).unwrap_err(),
            Error::StateOutOfRange { state: 4, n: 4 }
        ));
    }
}
