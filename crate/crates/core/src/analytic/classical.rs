//! Incoherent counterpart of the walk.
//!
//! Sites form the chain `… e_{m−1} —v′— g_m —v— e_m —v′— g_{m+1} …`, where
//! g_m / e_m hold N + m photons with the qubit in g / e. The walker starts on
//! g_0, hops along bonds at rates equal to the hopping amplitudes and is
//! removed from e sites at rate γ. The expected occupation times τ solve a
//! tridiagonal linear system; the decay distribution is γτ on the e sites.

use crate::error::{config, Result};

/// Closed-form mean displacement −v′/(v + v′).
pub fn classical_displacement(v: f64, v_prime: f64) -> Result<f64> {
    if !(v >= 0.0 && v_prime >= 0.0 && v.is_finite() && v_prime.is_finite()) {
        return config("hoppings must be finite and non-negative");
    }
    if v + v_prime == 0.0 {
        return config("classical displacement undefined when both hoppings vanish");
    }
    Ok(-v_prime / (v + v_prime))
}

/// Smallest accepted half-width of the chain, in unit cells.
pub const MIN_SPAN: usize = 50;

/// Decay weight tolerated in the outermost cells.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Decay probabilities per cell m = −span..=span of the incoherent walker.
pub fn classical_decay_distribution(
    v: f64,
    v_prime: f64,
    gamma: f64,
    span: usize,
) -> Result<Vec<f64>> {
    if span < MIN_SPAN {
        return config(format!("span must be at least {MIN_SPAN} cells"));
    }
    classical_displacement(v, v_prime)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return config("decay rate must be positive");
    }
    let cells = 2 * span + 1;
    let sites = 2 * cells;
    // bond p joins sites p and p + 1: g→e inside a cell (v), e→g across cells (v′)
    let bond = |p: usize| if p % 2 == 0 { v } else { v_prime };
    let mut diag = vec![0.0; sites];
    let mut off = vec![0.0; sites - 1];
    for p in 0..sites {
        let left = if p > 0 { bond(p - 1) } else { 0.0 };
        let right = if p + 1 < sites { bond(p) } else { 0.0 };
        diag[p] = left + right + if p % 2 == 1 { gamma } else { 0.0 };
        if p + 1 < sites {
            off[p] = -bond(p);
        }
    }
    let mut rhs = vec![0.0; sites];
    rhs[2 * span] = 1.0;
    let tau = solve_tridiagonal(&off, &diag, &off, &rhs)?;
    let decay: Vec<f64> = (0..cells).map(|m| gamma * tau[2 * m + 1]).collect();
    let boundary = decay[0] + decay[cells - 1];
    if boundary > BOUNDARY_TOL {
        return config(format!(
            "span {span} too small: {boundary:.2e} of the decays reach the boundary cells"
        ));
    }
    Ok(decay)
}

/// Mean photon displacement of the incoherent walker on a chain of
/// `span` cells to either side.
pub fn classical_walk_oracle(v: f64, v_prime: f64, gamma: f64, span: usize) -> Result<f64> {
    let decay = classical_decay_distribution(v, v_prime, gamma, span)?;
    let total: f64 = decay.iter().sum();
    let mean: f64 = decay
        .iter()
        .enumerate()
        .map(|(m, p)| (m as f64 - span as f64) * p)
        .sum();
    Ok(mean / total)
}

/// Thomas algorithm for a tridiagonal system.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return config("singular rate matrix");
    }
    c[0] = if n > 1 { upper[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom.abs() < 1e-300 {
            return config("singular rate matrix");
        }
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(classical_displacement(1.0, 1.0).unwrap(), -0.5);
        assert_eq!(classical_displacement(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(classical_displacement(1.0, 3.0).unwrap(), -0.75);
        assert!(classical_displacement(0.0, 0.0).is_err());
    }

    #[test]
    fn walker_examples() {
        assert!((classical_walk_oracle(1.0, 1.0, 3.0, 200).unwrap() + 0.5).abs() < 1e-3);
        assert_eq!(classical_walk_oracle(1.0, 0.0, 3.0, 60).unwrap(), 0.0);
        assert!((classical_walk_oracle(1.0, 2.0, 4.0, 200).unwrap() + 2.0 / 3.0).abs() < 1e-3);
        assert!(classical_walk_oracle(1.0, 1.0, 1.0, 10).is_err());
    }

    #[test]
    fn tridiagonal_solver() {
        // [[2, -1, 0], [-1, 2, -1], [0, -1, 2]] x = [1, 0, 1] → x = [1, 1, 1]
        let x = solve_tridiagonal(
            &[-1.0, -1.0],
            &[2.0, 2.0, 2.0],
            &[-1.0, -1.0],
            &[1.0, 0.0, 1.0],
        )
        .unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-15);
        }
    }
}
