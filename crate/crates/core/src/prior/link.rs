//! Link functions `Φ: R → (K_min, ∞)` turning an unconstrained parameter `F`
//! into a positive coefficient `f = Φ∘F`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LinkFunction {
    /// `f = F`. Used for direct observation models; no positivity.
    #[default]
    Identity,
    /// `Φ(x) = (1 - K_min) e^x + K_min`.
    Exponential { k_min: f64 },
    /// `Φ(x) = K_min + (1 - K_min) log(1 + e^x) / log 2`; all derivatives bounded.
    RegularSoftplus { k_min: f64 },
}

impl LinkFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LinkFunction::Identity => Ok(()),
            LinkFunction::Exponential { k_min } | LinkFunction::RegularSoftplus { k_min } => {
                if (0.0..1.0).contains(&k_min) {
                    Ok(())
                } else {
                    Err(invalid(format!("K_min must lie in [0, 1), got {k_min}")))
                }
            }
        }
    }

    /// Lower bound of the range, `-∞` for the identity.
    pub fn k_min(&self) -> f64 {
        match *self {
            LinkFunction::Identity => f64::NEG_INFINITY,
            LinkFunction::Exponential { k_min } | LinkFunction::RegularSoftplus { k_min } => k_min,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            LinkFunction::Identity => x,
            LinkFunction::Exponential { k_min } => (1.0 - k_min) * x.exp() + k_min,
            LinkFunction::RegularSoftplus { k_min } => {
                k_min + (1.0 - k_min) * softplus(x) / std::f64::consts::LN_2
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            LinkFunction::Identity => 1.0,
            LinkFunction::Exponential { k_min } => (1.0 - k_min) * x.exp(),
            LinkFunction::RegularSoftplus { k_min } => {
                (1.0 - k_min) * sigmoid(x) / std::f64::consts::LN_2
            }
        }
    }

    pub fn inverse(&self, f: f64) -> Result<f64> {
        let k_min = self.k_min();
        if !(f > k_min) {
            return Err(Error::Domain(format!(
                "value {f} is not above K_min = {k_min}"
            )));
        }
        Ok(match *self {
            LinkFunction::Identity => f,
            LinkFunction::Exponential { k_min } => ((f - k_min) / (1.0 - k_min)).ln(),
            LinkFunction::RegularSoftplus { k_min } => {
                inverse_softplus((f - k_min) * std::f64::consts::LN_2 / (1.0 - k_min))
            }
        })
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn inverse_softplus(y: f64) -> f64 {
    // log(e^y - 1) = y + log(1 - e^{-y})
    y + (-(-y).exp_m1()).ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Pointwise `f = Φ∘F`.
pub fn apply_link(f: &GridFunction, link: &LinkFunction) -> GridFunction {
    f.map(|x| link.apply(x))
}

/// Pointwise `F = Φ^{-1}∘f`; fails if any value is at or below `K_min`.
pub fn apply_link_inverse(f: &GridFunction, link: &LinkFunction) -> Result<GridFunction> {
    let values = f
        .values()
        .iter()
        .map(|&v| link.inverse(v))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::from_values(f.dim(), f.level(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LINKS: [LinkFunction; 4] = [
        LinkFunction::Exponential { k_min: 0.1 },
        LinkFunction::Exponential { k_min: 0.0 },
        LinkFunction::RegularSoftplus { k_min: 0.1 },
        LinkFunction::RegularSoftplus { k_min: 0.5 },
    ];

    #[test]
    fn zero_maps_to_one() {
        for link in LINKS {
            let f = apply_link(&GridFunction::zeros(1, 3), &link);
            assert!(
                f.values().iter().all(|v| (v - 1.0).abs() < 1e-15),
                "{link:?}"
            );
        }
    }

    #[test]
    fn identity_link_is_identity() {
        let g = GridFunction::from_fn(1, 4, |x| x[0] - 0.3);
        assert_eq!(apply_link(&g, &LinkFunction::Identity), g);
    }

    #[test]
    fn exponential_value() {
        let link = LinkFunction::Exponential { k_min: 0.1 };
        let want = 0.9 * std::f64::consts::E + 0.1;
        assert!((link.apply(1.0) - want).abs() < 1e-15);
        assert!((link.apply(1.0) - 2.546_453_645_613_097).abs() < 1e-12);
    }

    #[test]
    fn inverse_rejects_values_below_kmin() {
        let link = LinkFunction::Exponential { k_min: 0.2 };
        let g = GridFunction::from_values(1, 1, vec![0.5, 0.2]).unwrap();
        assert!(matches!(
            apply_link_inverse(&g, &link),
            Err(Error::Domain(_))
        ));
        assert!(LinkFunction::RegularSoftplus { k_min: 1.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for link in LINKS {
            for &x in &[-3.0, -0.5, 0.0, 0.7, 4.0] {
                let h = 1e-6;
                let fd = (link.apply(x + h) - link.apply(x - h)) / (2.0 * h);
                assert!((fd - link.derivative(x)).abs() < 1e-8 * (1.0 + fd.abs()));
                assert!(link.derivative(x) > 0.0);
            }
        }
    }

    #[test]
    fn softplus_derivatives_bounded() {
        // Φ' ≤ (1-K_min)/log 2 and Φ'' ≤ (1-K_min)/(4 log 2) everywhere.
        let link = LinkFunction::RegularSoftplus { k_min: 0.0 };
        for i in -400..=400 {
            let x = i as f64 * 0.1;
            assert!(link.derivative(x) <= 1.0 / std::f64::consts::LN_2 + 1e-12);
            let h = 1e-4;
            let second = (link.derivative(x + h) - link.derivative(x - h)) / (2.0 * h);
            assert!(second.abs() <= 0.25 / std::f64::consts::LN_2 + 1e-6);
        }
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec(0.0f64..50.0, 8), which in 0usize..4) {
            let link = LINKS[which];
            let shifted: Vec<f64> = values.iter().map(|v| v + link.k_min() + 1e-3).collect();
            let f = GridFunction::from_values(1, 3, shifted).unwrap();
            let back = apply_link(&apply_link_inverse(&f, &link).unwrap(), &link);
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
