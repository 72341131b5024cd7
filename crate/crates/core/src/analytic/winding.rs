//! Displacement as an average winding number.
//!
//! ⟨Δn_α⟩ = −∮ d^{d−1}k/(2π)^{d−1} w_α(k_others), where w_α is the winding of
//! A_k* = v + Σ v_β e^{ik_β} around the origin as k_α runs over one period.

use std::f64::consts::{FRAC_PI_4, TAU};

use super::bloch::off_diagonal;
use crate::error::{config, Error, Result};
use crate::model::C64;

/// |A_k| below this on the sampled grid means the gap closes there.
pub const CRITICAL_MAGNITUDE: f64 = 1e-9;

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 256;

/// Deviation of the unwrapped phase from a multiple of 2π that is tolerated.
const INTEGER_TOL: f64 = 1e-6;

/// Budget for the uniform outer grid when there are three or more modes.
const MAX_EVALUATIONS: f64 = 2e9;

fn conj_coupling(v: f64, inter: &[f64], k: &[f64]) -> C64 {
    off_diagonal(v, inter, k).conj()
}

/// Integer winding of A_k* in k_α, the other components taken from `k`.
///
/// `floor` is the magnitude below which an evaluated point counts as critical.
fn winding_with_floor(
    v: f64,
    inter: &[f64],
    alpha: usize,
    k: &[f64],
    resolution: usize,
    floor: f64,
) -> Result<i64> {
    let mut point = k.to_vec();
    let mut eval = |ka: f64| {
        point[alpha] = ka;
        conj_coupling(v, inter, &point)
    };
    let h = TAU / resolution as f64;
    let grid: Vec<_> = (0..=resolution).map(|j| eval(j as f64 * h)).collect();
    if let Some(z) = grid.iter().find(|z| z.norm() < floor) {
        return Err(Error::CriticalPoint(format!(
            "|A_k| = {:.3e} on the contour for mode {alpha}",
            z.norm()
        )));
    }
    let mut total = 0.0;
    for j in 0..resolution {
        total += unwrap_segment(
            &mut eval,
            j as f64 * h,
            (j + 1) as f64 * h,
            grid[j],
            grid[j + 1],
            floor,
            0,
        )?;
    }
    let w = total / TAU;
    let rounded = w.round();
    if (w - rounded).abs() > INTEGER_TOL {
        return Err(Error::NumericalInstability(format!(
            "unwrapped phase {w} is not an integer winding"
        )));
    }
    Ok(rounded as i64)
}

/// Phase increment of A* over [a, b], bisecting until every piece turns by
/// at most π/4.
fn unwrap_segment(
    eval: &mut impl FnMut(f64) -> C64,
    a: f64,
    b: f64,
    za: C64,
    zb: C64,
    floor: f64,
    depth: u32,
) -> Result<f64> {
    let step = (zb / za).arg();
    if step.abs() <= FRAC_PI_4 || depth >= 48 {
        return Ok(step);
    }
    let m = 0.5 * (a + b);
    let zm = eval(m);
    if zm.norm() < floor {
        return Err(Error::CriticalPoint(format!(
            "|A_k| = {:.3e} at k = {m}",
            zm.norm()
        )));
    }
    Ok(unwrap_segment(eval, a, m, za, zm, floor, depth + 1)?
        + unwrap_segment(eval, m, b, zm, zb, floor, depth + 1)?)
}

/// Winding number of A_k* in k_α at fixed other momenta (`k[alpha]` is ignored).
pub fn contour_winding(
    v: f64,
    inter: &[f64],
    alpha: usize,
    k: &[f64],
    resolution: usize,
) -> Result<i64> {
    check_args(v, inter, alpha, resolution)?;
    if k.len() != inter.len() {
        return config("momentum has the wrong dimension");
    }
    winding_with_floor(v, inter, alpha, k, resolution, CRITICAL_MAGNITUDE)
}

fn check_args(v: f64, inter: &[f64], alpha: usize, resolution: usize) -> Result<()> {
    if inter.is_empty() {
        return config("at least one inter-cell hopping is required");
    }
    if alpha >= inter.len() {
        return config(format!(
            "mode {alpha} out of range for {} dimensions",
            inter.len()
        ));
    }
    if resolution < MIN_RESOLUTION {
        return config(format!("resolution must be at least {MIN_RESOLUTION}"));
    }
    if std::iter::once(&v)
        .chain(inter)
        .any(|h| !(h.is_finite() && *h >= 0.0))
    {
        return config("hoppings must be finite and non-negative");
    }
    Ok(())
}

/// ⟨Δn_α⟩ from the winding of A_k.
///
/// In one dimension this is −w. In two dimensions the outer integrand is
/// piecewise constant; its jumps are located by bisection so the outer
/// integral is exact up to the bisection tolerance. Higher dimensions use a
/// midpoint grid over the outer momenta.
pub fn winding_displacement(v: f64, inter: &[f64], alpha: usize, resolution: usize) -> Result<f64> {
    check_args(v, inter, alpha, resolution)?;
    let d = inter.len();
    match d {
        1 => Ok(-(winding_with_floor(v, inter, 0, &[0.0], resolution, CRITICAL_MAGNITUDE)? as f64)),
        2 => two_dimensional(v, inter, alpha, resolution),
        _ => {
            if (resolution as f64).powi(d as i32) > MAX_EVALUATIONS {
                return config("resolution too large for this dimension");
            }
            let others: Vec<usize> = (0..d).filter(|&b| b != alpha).collect();
            let h = TAU / resolution as f64;
            let mut k = vec![0.0; d];
            let mut idx = vec![0usize; others.len()];
            let mut sum = 0i64;
            let mut count = 0usize;
            loop {
                for (slot, &b) in idx.iter().zip(&others) {
                    k[b] = (*slot as f64 + 0.5) * h;
                }
                sum += winding_with_floor(v, inter, alpha, &k, resolution, CRITICAL_MAGNITUDE)?;
                count += 1;
                // odometer increment
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        return Ok(-(sum as f64) / count as f64);
                    }
                    idx[pos] += 1;
                    if idx[pos] < resolution {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        }
    }
}

fn two_dimensional(v: f64, inter: &[f64], alpha: usize, resolution: usize) -> Result<f64> {
    let beta = 1 - alpha;
    let w_at = |kb: f64, floor: f64| {
        let mut k = [0.0; 2];
        k[beta] = kb;
        winding_with_floor(v, inter, alpha, &k, resolution, floor)
    };
    let h = TAU / resolution as f64;
    let grid: Vec<i64> = (0..resolution)
        .map(|j| w_at(j as f64 * h, CRITICAL_MAGNITUDE))
        .collect::<Result<_>>()?;
    let mut integral = 0.0;
    for j in 0..resolution {
        let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
        let (wa, wb) = (grid[j], grid[(j + 1) % resolution]);
        if wa == wb {
            integral += h * wa as f64;
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        while hi - lo > 1e-14 * TAU {
            let m = 0.5 * (lo + hi);
            match w_at(m, 1e-14) {
                Ok(w) if w == wa => lo = m,
                Ok(_) => hi = m,
                Err(Error::CriticalPoint(_) | Error::NumericalInstability(_)) => {
                    lo = m;
                    hi = m;
                }
                Err(e) => return Err(e),
            }
        }
        let x = 0.5 * (lo + hi);
        integral += (x - a) * wa as f64 + (b - x) * wb as f64;
    }
    Ok(-integral / TAU)
}

/// Sign-threshold value of the 1D displacement: 0 if v > v′, −1 if v < v′.
pub fn threshold_displacement(v: f64, v_prime: f64) -> Result<f64> {
    if (v - v_prime).abs() < CRITICAL_MAGNITUDE {
        return Err(Error::CriticalPoint(format!("v = v′ = {v}")));
    }
    Ok(if v > v_prime { 0.0 } else { -1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(winding_displacement(2.0, &[1.0], 0, 256).unwrap(), 0.0);
        assert_eq!(winding_displacement(0.5, &[1.0], 0, 256).unwrap(), -1.0);
        assert!(matches!(
            winding_displacement(1.0, &[1.0], 0, 256),
            Err(Error::CriticalPoint(_))
        ));
        assert!(matches!(
            winding_displacement(1.0, &[2.0], 0, 16),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn near_critical_still_integer() {
        // Gap of 1e-6: the contour passes very close to the origin.
        assert_eq!(
            winding_displacement(1.0, &[1.0 + 1e-6], 0, 256).unwrap(),
            -1.0
        );
        assert_eq!(
            winding_displacement(1.0 + 1e-6, &[1.0], 0, 256).unwrap(),
            0.0
        );
    }

    #[test]
    fn three_dimensions_dominant_mode() {
        let d = winding_displacement(0.1, &[5.0, 1.0, 1.0], 0, 256).unwrap();
        assert_eq!(d, -1.0);
        let d = winding_displacement(10.0, &[1.0, 1.0, 1.0], 1, 256).unwrap();
        assert_eq!(d, 0.0);
    }
}
