//! Reference implementations used only by the tests. None of them share code
//! with the library: plain `Vec`s, linear-domain arithmetic, brute force.
#![allow(dead_code)]

pub mod linear;
pub mod lp;
pub mod paths;

use rand::Rng;

pub const INF: f64 = f64::INFINITY;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(a: &ndarray::Array2<f64>) -> Dense {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn from_dense(d: &Dense) -> ndarray::Array2<f64> {
    let m = d.first().map_or(0, Vec::len);
    ndarray::Array2::from_shape_fn((d.len(), m), |(i, j)| d[i][j])
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// A random probability vector; each entry is zeroed with probability `p_zero`
/// but at least one entry stays positive.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize, p_zero: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < p_zero {
                    0.0
                } else {
                    rng.gen_range(0.05..1.0)
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}
