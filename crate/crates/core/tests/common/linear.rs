//! The barycenter step computed directly on couplings and kernels, with
//! multiplicative corrections. Fine for moderate γ; underflows for small γ.

use super::Dense;

pub struct LinearInstance<'a> {
    pub rho: &'a [f64],
    pub nu: &'a [f64],
    /// `n × m`, columns are the destination support.
    pub cost: &'a Dense,
    pub cap: &'a Dense,
    pub storage: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct LinearResult {
    pub p: Vec<f64>,
    pub pi1: Dense,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearFailure {
    /// A row with positive target mass has no surviving kernel entry.
    RowUnderflow { row: usize, iteration: usize },
}

struct Pair {
    a: Dense,
    b: Dense,
}

fn col_sums(m: &Dense, ncols: usize) -> Vec<f64> {
    let mut s = vec![0.0; ncols];
    for row in m {
        for (j, v) in row.iter().enumerate() {
            s[j] += v;
        }
    }
    s
}

fn times(pi: &Dense, q: &Dense) -> Dense {
    pi.iter()
        .zip(q)
        .map(|(r, qr)| r.iter().zip(qr).map(|(x, y)| x * y).collect())
        .collect()
}

/// `q ← q · π_before / π_after` wherever `π_after > 0`.
fn update(q: &mut Dense, before: &Dense, after: &Dense) {
    for ((qr, br), ar) in q.iter_mut().zip(before).zip(after) {
        for ((qv, &b), &a) in qr.iter_mut().zip(br).zip(ar) {
            if a > 0.0 {
                *qv *= b / a;
            }
        }
    }
}

fn rows(y: Dense, target: &[f64], k: usize) -> Result<Dense, LinearFailure> {
    let mut out = y;
    for (i, row) in out.iter_mut().enumerate() {
        if target[i] == 0.0 {
            row.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        let s: f64 = row.iter().sum();
        if s == 0.0 {
            return Err(LinearFailure::RowUnderflow { row: i, iteration: k });
        }
        row.iter_mut().for_each(|v| *v *= target[i] / s);
    }
    Ok(out)
}

fn scale_cols(m: &mut Dense, factor: &[f64]) {
    for row in m.iter_mut() {
        for (v, f) in row.iter_mut().zip(factor) {
            if *v != 0.0 {
                *v *= f;
            }
        }
    }
}

fn storage_clip(mut y: Dense, storage: &[f64]) -> Dense {
    let m = storage.len();
    let s = col_sums(&y, m);
    let f: Vec<f64> = s
        .iter()
        .zip(storage)
        .map(|(&c, &cap)| if c > cap { cap / c } else { 1.0 })
        .collect();
    scale_cols(&mut y, &f);
    y
}

pub fn linear_barycenter(
    inst: &LinearInstance,
    omega: f64,
    gamma: f64,
    eps: f64,
    max_iter: usize,
    corrections: bool,
) -> Result<LinearResult, LinearFailure> {
    let n = inst.rho.len();
    let m = inst.storage.len();
    let kernel: Dense = inst
        .cost
        .iter()
        .map(|r| r.iter().map(|c| (-c / gamma).exp()).collect())
        .collect();
    let ones = vec![vec![1.0; m]; n];
    let mut pi = Pair {
        a: kernel.clone(),
        b: kernel,
    };
    let mut q: Vec<Dense> = vec![ones.clone(); 7];
    let mut p = vec![1.0; m];
    let mut k = 0;
    let mut converged = false;
    let pick = |q: &Dense| if corrections { q.clone() } else { ones.clone() };
    while k < max_iter {
        if k > 0 && k % 4 == 0 {
            let s = col_sums(&pi.a, m);
            let gap: f64 = p
                .iter()
                .zip(&s)
                .map(|(&x, &y)| if x == y { 0.0 } else { (x.ln() - y.ln()).abs() })
                .sum();
            let total: f64 = s.iter().sum();
            if gap <= eps && total.ln().abs() <= eps {
                converged = true;
                break;
            }
        }
        match k % 4 {
            0 => {
                let a = rows(times(&pi.a, &pick(&q[0])), inst.rho, k)?;
                let b = rows(times(&pi.b, &pick(&q[1])), inst.nu, k)?;
                update(&mut q[0], &pi.a, &a);
                update(&mut q[1], &pi.b, &b);
                pi = Pair { a, b };
            }
            1 => {
                let mut a = times(&pi.a, &pick(&q[2]));
                let mut b = times(&pi.b, &pick(&q[3]));
                let sa = col_sums(&a, m);
                let sb = col_sums(&b, m);
                p = sa
                    .iter()
                    .zip(&sb)
                    .map(|(&x, &y)| x.powf(omega) * y.powf(1.0 - omega))
                    .collect();
                let fa: Vec<f64> = p.iter().zip(&sa).map(|(&t, &s)| if s > 0.0 { t / s } else { 0.0 }).collect();
                let fb: Vec<f64> = p.iter().zip(&sb).map(|(&t, &s)| if s > 0.0 { t / s } else { 0.0 }).collect();
                scale_cols(&mut a, &fa);
                scale_cols(&mut b, &fb);
                update(&mut q[2], &pi.a, &a);
                update(&mut q[3], &pi.b, &b);
                pi = Pair { a, b };
            }
            2 => {
                let a: Dense = times(&pi.a, &pick(&q[4]))
                    .into_iter()
                    .zip(inst.cap)
                    .map(|(r, c)| r.iter().zip(c).map(|(&x, &u)| x.min(u)).collect())
                    .collect();
                update(&mut q[4], &pi.a, &a);
                pi.a = a;
            }
            _ => {
                let a = storage_clip(times(&pi.a, &pick(&q[5])), inst.storage);
                let b = storage_clip(times(&pi.b, &pick(&q[6])), inst.storage);
                update(&mut q[5], &pi.a, &a);
                update(&mut q[6], &pi.b, &b);
                pi = Pair { a, b };
            }
        }
        k += 1;
    }
    Ok(LinearResult {
        p,
        pi1: pi.a,
        iterations: k,
        converged,
    })
}
