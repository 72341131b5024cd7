use ndarray::Array2;

use crate::model::C64;

fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings as i32));
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..60 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result = result + &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_generator() {
        // exp(θ [[0, -1], [1, 0]]) is a rotation by θ.
        let theta: f64 = 2.7;
        let a = Array2::from_shape_vec(
            (2, 2),
            vec![
                C64::new(0.0, 0.0),
                C64::new(-theta, 0.0),
                C64::new(theta, 0.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let e = expm(&a);
        assert!((e[[0, 0]].re - theta.cos()).abs() < 1e-14);
        assert!((e[[1, 0]].re - theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_complex() {
        let d = [
            C64::new(-3.0, 1.0),
            C64::new(0.5, -7.0),
            C64::new(0.0, 20.0),
        ];
        let a = Array2::from_diag(&ndarray::arr1(&d));
        let e = expm(&a);
        for (i, z) in d.iter().enumerate() {
            assert!((e[[i, i]] - z.exp()).norm() < 1e-12 * z.exp().norm().max(1.0));
        }
    }
}
