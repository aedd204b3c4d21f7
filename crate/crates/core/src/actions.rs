//! Finite action sets with stable integer labels.
//!
//! An [`ActionSet`] holds the universe of arms an algorithm may pull. Labels
//! are assigned once at construction and survive subsetting, so a phased
//! algorithm can shrink its active set while records and estimates keep
//! referring to the original arms.

use crate::error::{Error, Result};
use crate::linalg::norm2;

/// An ordered, non-empty collection of `d`-dimensional arm vectors.
///
/// Every vector must fit inside the declared Euclidean radius (default 1).
/// Instances are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    dim: usize,
    actions: Vec<Vec<f64>>,
    labels: Vec<usize>,
    radius: f64,
}

impl ActionSet {
    /// Builds a set of unit-radius actions labeled `0..n` in input order.
    pub fn new(dim: usize, actions: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_radius(dim, actions, 1.0)
    }

    /// Builds a set whose vectors may extend to the given Euclidean radius.
    pub fn with_radius(dim: usize, actions: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("action dimension must be positive"));
        }
        if actions.is_empty() {
            return Err(Error::domain("action set must be non-empty"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::domain("action radius must be positive and finite"));
        }
        for (i, a) in actions.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::domain(format!(
                    "action {i} has length {}, expected {dim}",
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("action {i} has a non-finite entry")));
            }
            let n = norm2(a);
            if n > radius + 1e-9 {
                return Err(Error::domain(format!(
                    "action {i} has norm {n:.6} exceeding the declared radius {radius:.6}"
                )));
            }
        }
        let labels = (0..actions.len()).collect();
        Ok(Self { dim, actions, labels, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    /// Always false: emptiness is rejected at construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The arm vector at position `idx` (position, not label).
    pub fn action(&self, idx: usize) -> &[f64] {
        &self.actions[idx]
    }

    /// The stable label of the arm at position `idx`.
    pub fn label(&self, idx: usize) -> usize {
        self.labels[idx]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Position of the arm carrying `label`, if present.
    pub fn position_of_label(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Iterates `(label, vector)` pairs in set order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.labels.iter().copied().zip(self.actions.iter().map(|a| a.as_slice()))
    }

    /// Keeps the arms at the given positions, preserving their labels.
    ///
    /// Positions must be strictly increasing and non-empty so the subset
    /// stays a valid, deduplicated action set.
    pub fn subset(&self, positions: &[usize]) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::domain("cannot subset to an empty action set"));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("subset positions must be strictly increasing"));
        }
        if *positions.last().unwrap() >= self.len() {
            return Err(Error::domain("subset position out of range"));
        }
        Ok(Self {
            dim: self.dim,
            actions: positions.iter().map(|&i| self.actions[i].clone()).collect(),
            labels: positions.iter().map(|&i| self.labels[i]).collect(),
            radius: self.radius,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(ActionSet::new(2, vec![]).is_err());
        assert!(ActionSet::new(2, vec![vec![1.0]]).is_err());
        assert!(ActionSet::new(1, vec![vec![2.0]]).is_err()); // norm > 1
    }

    #[test]
    fn labels_survive_subsetting() {
        let set = ActionSet::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]],
        )
        .unwrap();
        let sub = set.subset(&[0, 2]).unwrap();
        assert_eq!(sub.labels(), &[0, 2]);
        assert_eq!(sub.action(1), &[0.6, 0.8]);
        assert_eq!(sub.position_of_label(2), Some(1));
        assert_eq!(sub.position_of_label(1), None);
    }

    #[test]
    fn radius_gates_vectors() {
        let long = vec![vec![3.0, 4.0]]; // norm 5
        assert!(ActionSet::new(2, long.clone()).is_err());
        assert!(ActionSet::with_radius(2, long, 5.0).is_ok());
    }

    #[test]
    fn subset_positions_validated() {
        let set = ActionSet::new(1, vec![vec![0.5], vec![1.0]]).unwrap();
        assert!(set.subset(&[]).is_err());
        assert!(set.subset(&[1, 0]).is_err());
        assert!(set.subset(&[2]).is_err());
    }
}
