use serde::{Deserialize, Serialize};

use super::{invariant_measures, DynMap};
use crate::error::{Error, Result};
use crate::lipgeometry::{lipnorm_from_state_metric, lipschitz_seminorm, Observable};
use crate::transport::{hull_net, same_space, w1_matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CrossedMode {
    /// Lipschitz constant of `μ ↦ ∫a₀ dμ` on a grid net of resolution `m` of the invariant simplex.
    General { m: usize },
    /// The convention `L(Σ aₙuⁿ) := L(a₀)`.
    UniquelyErgodic,
}

/// Seminorm of a crossed-product element, which only sees its zeroth coefficient `a0`.
pub fn crossed_product_seminorm(a0: &Observable, h: &DynMap, mode: CrossedMode) -> Result<f64> {
    if !same_space(a0.space(), h.space()) {
        return Err(Error::SpaceMismatch);
    }
    match mode {
        CrossedMode::UniquelyErgodic => Ok(lipschitz_seminorm(a0)),
        CrossedMode::General { m } => {
            let simplex = invariant_measures(h);
            if simplex.is_uniquely_ergodic() {
                return Err(Error::Precondition(
                    "the invariant simplex is a single point; use the uniquely_ergodic mode".into(),
                ));
            }
            let net = hull_net(&simplex.extremes, m.max(1))?;
            let values: Vec<f64> = net.measures.iter().map(|mu| mu.integrate(a0.values())).collect();
            let metric = w1_matrix(&net.measures)?;
            lipnorm_from_state_metric(&values, &metric)
        }
    }
}

/// The restricted value next to the full Lipschitz seminorm; the first never exceeds the second.
pub fn crossed_product_seminorm_dominated(a0: &Observable, h: &DynMap, m: usize) -> Result<(f64, f64)> {
    let general = crossed_product_seminorm(a0, h, CrossedMode::General { m })?;
    let full = lipschitz_seminorm(a0);
    if general > full * (1.0 + crate::TOL.lipschitz) + crate::TOL.lipschitz {
        return Err(Error::Internal(format!("restricted seminorm {general} exceeds the full one {full}")));
    }
    Ok((general, full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rotation;
    use crate::metric_space::circle_net;
    use crate::transport::wasserstein1;
    use std::sync::Arc;

    #[test]
    fn identity_recovers_lipschitz_seminorm() {
        let x = Arc::new(circle_net(4, 1.0).unwrap());
        let a0 = Observable::new(x.clone(), vec![0.3, -0.1, 0.05, 0.2]).unwrap();
        let id = DynMap::identity(x.clone());
        let v = crossed_product_seminorm(&a0, &id, CrossedMode::General { m: 2 }).unwrap();
        assert!((v - lipschitz_seminorm(&a0)).abs() < 1e-9);
        let (g, f) = crossed_product_seminorm_dominated(&a0, &id, 2).unwrap();
        assert!((g - f).abs() < 1e-9);
    }

    #[test]
    fn two_cycle_closed_form() {
        let x = Arc::new(circle_net(4, 1.0).unwrap());
        let h = rotation(&x, 2).unwrap();
        let a0 = Observable::new(x.clone(), vec![1.0, 0.0, 0.5, 0.0]).unwrap();
        let s = invariant_measures(&h);
        let (w, _) = wasserstein1(&s.extremes[0], &s.extremes[1]).unwrap();
        let expect = (s.extremes[0].integrate(a0.values()) - s.extremes[1].integrate(a0.values())).abs() / w;
        let v = crossed_product_seminorm(&a0, &h, CrossedMode::General { m: 4 }).unwrap();
        assert!((v - expect).abs() < 1e-9);
        let (g, f) = crossed_product_seminorm_dominated(&a0, &h, 4).unwrap();
        assert!(g < f);
    }

    #[test]
    fn constants_and_singletons() {
        let x = Arc::new(circle_net(4, 1.0).unwrap());
        let c = Observable::new(x.clone(), vec![0.7; 4]).unwrap();
        let h = rotation(&x, 2).unwrap();
        assert_eq!(crossed_product_seminorm(&c, &h, CrossedMode::General { m: 3 }).unwrap(), 0.0);
        let r = rotation(&x, 1).unwrap();
        assert!(matches!(
            crossed_product_seminorm(&c, &r, CrossedMode::General { m: 3 }),
            Err(Error::Precondition(_))
        ));
        assert_eq!(crossed_product_seminorm(&c, &r, CrossedMode::UniquelyErgodic).unwrap(), 0.0);
    }

    #[test]
    fn sub_simplex_never_increases() {
        let x = Arc::new(circle_net(6, 1.0).unwrap());
        let a0 = Observable::from_fn(x.clone(), |i| [0.1, 0.3, -0.2, 0.0, 0.15, -0.05][i]).unwrap();
        let full = crossed_product_seminorm(&a0, &DynMap::identity(x.clone()), CrossedMode::General { m: 2 }).unwrap();
        for steps in [2, 3] {
            let sub = crossed_product_seminorm(&a0, &rotation(&x, steps).unwrap(), CrossedMode::General { m: 3 }).unwrap();
            assert!(sub <= full + 1e-9);
        }
    }
}
