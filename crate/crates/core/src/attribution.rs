//! Per-prediction attribution vectors.

use serde::{Deserialize, Serialize};

/// Relative tolerance used when asserting local accuracy.
pub const LOCAL_ACCURACY_RTOL: f64 = 1e-9;

/// An additive explanation of one prediction: a base value plus one
/// contribution per feature, all in model-output units. Local accuracy means
/// `base + sum(phi)` equals the model's prediction for the explained instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    /// Expected model output with no features known.
    pub base: f64,
    /// Per-feature contributions.
    pub phi: Vec<f64>,
}

impl AttributionVector {
    pub fn zeros(base: f64, num_features: usize) -> Self {
        AttributionVector {
            base,
            phi: vec![0.0; num_features],
        }
    }

    /// `base + sum(phi)`, accumulated in feature order.
    pub fn total(&self) -> f64 {
        self.base + self.phi.iter().sum::<f64>()
    }

    /// Absolute deviation of [`total`](Self::total) from a prediction.
    pub fn local_accuracy_gap(&self, prediction: f64) -> f64 {
        (self.total() - prediction).abs()
    }

    /// Whether the attribution sums back to the prediction within
    /// `rtol * max(1, |prediction|)`.
    pub fn is_locally_accurate(&self, prediction: f64, rtol: f64) -> bool {
        self.local_accuracy_gap(prediction) <= rtol * prediction.abs().max(1.0)
    }

    /// Adds another attribution elementwise (used to combine per-tree terms).
    pub fn add_assign(&mut self, other: &AttributionVector) {
        debug_assert_eq!(self.phi.len(), other.phi.len());
        self.base += other.base;
        for (a, b) in self.phi.iter_mut().zip(&other.phi) {
            *a += *b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_and_local_accuracy() {
        let att = AttributionVector {
            base: 20.0,
            phi: vec![30.0, 30.0],
        };
        assert_eq!(att.total(), 80.0);
        assert!(att.is_locally_accurate(80.0, LOCAL_ACCURACY_RTOL));
        assert!(!att.is_locally_accurate(81.0, LOCAL_ACCURACY_RTOL));
    }

    #[test]
    fn add_assign_combines_terms() {
        let mut a = AttributionVector {
            base: 20.0,
            phi: vec![30.0, 30.0],
        };
        let b = AttributionVector {
            base: 25.0,
            phi: vec![30.0, 35.0],
        };
        a.add_assign(&b);
        assert_eq!(a.base, 45.0);
        assert_eq!(a.phi, vec![60.0, 65.0]);
    }
}
