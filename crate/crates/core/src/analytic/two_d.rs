use std::f64::consts::PI;

use super::bloch::BlochParams;
use super::winding::{threshold_displacement, CRITICAL_MAGNITUDE};
use crate::error::{config, Error, Result};
use crate::model::SystemParams;

fn critical(what: &str) -> Error {
    Error::CriticalPoint(format!("on the branch boundary {what}"))
}

/// Closed-form displacements (Δn₁, Δn₂) of the two-mode walk, g₁ > g₂ > 0.
///
/// With v = Ω/2, v′ = g₁√N, v″ = g₂√N:
///
/// ```text
/// Δn₁ = −1 + θ₁/π,  cos θ₁ = (v′² − v² − v″²)/(2vv″)   for |v − v″| ≤ v′ ≤ v + v″
/// Δn₂ = −θ₂/π,      cos θ₂ = (v² + v′² − v″²)/(2vv′)   for |v − v′| ≤ v″
/// ```
///
/// and the integer limits (−1, 0) / (0, 0) outside.
pub fn analytic_2d(params: &SystemParams) -> Result<(f64, f64)> {
    if params.dimension() != 2 {
        return config("analytic_2d needs two resonator modes");
    }
    let (g1, g2) = (params.couplings[0], params.couplings[1]);
    if !(g1 > g2 && g2 > 0.0) {
        return config("analytic_2d assumes g₁ > g₂ > 0");
    }
    let b = BlochParams::from_system(params)?;
    let (v, v1, v2) = (b.v, b.inter[0], b.inter[1]);
    let tol = CRITICAL_MAGNITUDE;

    if (v1 - (v + v2)).abs() < tol {
        return Err(critical("v′ = v + v″"));
    }
    if (v1 - (v - v2)).abs() < tol {
        return Err(critical("v′ = v − v″"));
    }
    let dn1 = if v1 > v + v2 {
        -1.0
    } else if v1 < v - v2 {
        0.0
    } else {
        let c = (v1 * v1 - v * v - v2 * v2) / (2.0 * v * v2);
        -1.0 + c.clamp(-1.0, 1.0).acos() / PI
    };

    let dn2 = if v < v1 - v2 || v > v1 + v2 {
        0.0
    } else {
        let c = (v * v + v1 * v1 - v2 * v2) / (2.0 * v * v1);
        -c.clamp(-1.0, 1.0).acos() / PI
    };
    Ok((dn1, dn2))
}

/// Closed-form ⟨Δn_α⟩ per mode: the sign threshold in 1D, [`analytic_2d`] in 2D.
pub fn analytic_displacement(params: &SystemParams) -> Result<Vec<f64>> {
    match params.dimension() {
        1 => {
            let b = BlochParams::from_system(params)?;
            Ok(vec![threshold_displacement(b.v, b.inter[0])?])
        }
        2 => {
            let (a, b) = analytic_2d(params)?;
            Ok(vec![a, b])
        }
        _ => config("closed forms exist for one and two modes only"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(omega: f64) -> SystemParams {
        SystemParams::two_d(2.0, 1.0, omega, 1e-4, 25.0, 0.0, 5)
    }

    #[test]
    fn middle_branch_example() {
        let (a, b) = analytic_2d(&params(8.0)).unwrap();
        assert!((a - (-1.0 + (-0.05590f64).acos() / PI)).abs() < 1e-5);
        assert!((a + 0.4822).abs() < 1e-4);
        assert!((b - -(31.0 / (8.0 * 20f64.sqrt())).acos() / PI).abs() < 1e-12);
        let inter = [2.0 * 5f64.sqrt(), 5f64.sqrt()];
        let w1 = crate::analytic::winding_displacement(4.0, &inter, 0, 1024).unwrap();
        let w2 = crate::analytic::winding_displacement(4.0, &inter, 1, 1024).unwrap();
        assert!((a - w1).abs() < 1e-9, "{a} vs {w1}");
        assert!((b - w2).abs() < 1e-9, "{b} vs {w2}");
    }

    #[test]
    fn limits() {
        assert_eq!(analytic_2d(&params(1e-3)).unwrap(), (-1.0, 0.0));
        assert_eq!(analytic_2d(&params(0.0)).unwrap(), (-1.0, 0.0));
        assert_eq!(analytic_2d(&params(1e4)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn preconditions() {
        let p = SystemParams::two_d(1.0, 2.0, 3.0, 0.0, 1.0, 0.0, 5);
        assert!(matches!(analytic_2d(&p), Err(Error::Config(_))));
        // v′ = v + v″ exactly: Ω/2 = √5
        let p = params(2.0 * 5f64.sqrt());
        assert!(matches!(analytic_2d(&p), Err(Error::CriticalPoint(_))));
    }
}
