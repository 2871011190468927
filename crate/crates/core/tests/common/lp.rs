//! Exact unregularized barycenter step by enumerating basic solutions.
//!
//! minimize  ω⟨C, π1⟩ + (1 − ω)⟨C, π2⟩
//! s.t.      π1 1 = ρ,  π2 1 = ν,  π1ᵀ1 = π2ᵀ1,  0 ≤ π1 ≤ cap,  π1ᵀ1 ≤ storage,  π2 ≥ 0
//!
//! Capacities are handled as variable bounds and storage through slacks, so
//! every vertex is a basis of the equality system with each nonbasic variable
//! at one of its finite bounds. Only meant for a handful of nodes.

use super::Dense;

const TOL: f64 = 1e-9;

pub struct LpInstance<'a> {
    pub rho: &'a [f64],
    pub nu: &'a [f64],
    /// `n × m`, columns are the destination support.
    pub cost: &'a Dense,
    pub cap: &'a Dense,
    pub storage: &'a [f64],
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct LpOptimum {
    pub objective: f64,
    /// Range of `⟨C, π1⟩` over all optimal vertices (the optimal face may be
    /// larger than a point).
    pub transport_lo: f64,
    pub transport_hi: f64,
    pub vertices: usize,
}

struct Var {
    upper: f64,
    obj: f64,
    transport: f64,
}

pub fn solve(inst: &LpInstance) -> Option<LpOptimum> {
    let n = inst.rho.len();
    let m = inst.storage.len();
    let mut vars: Vec<Var> = Vec::new();
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
    // row layout: [π1 rows | π2 rows | column balance | storage]
    let r_pi2 = n;
    let r_bal = 2 * n;
    let r_sto = 2 * n + m;
    let sto_rows: Vec<usize> = (0..m).filter(|&j| inst.storage[j].is_finite()).collect();
    let nrows = r_sto + sto_rows.len();

    for i in 0..n {
        if inst.rho[i] == 0.0 {
            continue;
        }
        for j in 0..m {
            if inst.cap[i][j] <= 0.0 {
                continue;
            }
            let mut c = vec![(i, 1.0), (r_bal + j, 1.0)];
            if let Some(s) = sto_rows.iter().position(|&x| x == j) {
                c.push((r_sto + s, 1.0));
            }
            cols.push(c);
            vars.push(Var {
                upper: inst.cap[i][j],
                obj: inst.omega * inst.cost[i][j],
                transport: inst.cost[i][j],
            });
        }
    }
    for i in 0..n {
        if inst.nu[i] == 0.0 {
            continue;
        }
        for j in 0..m {
            cols.push(vec![(r_pi2 + i, 1.0), (r_bal + j, -1.0)]);
            vars.push(Var {
                upper: f64::INFINITY,
                obj: (1.0 - inst.omega) * inst.cost[i][j],
                transport: 0.0,
            });
        }
    }
    for (s, _) in sto_rows.iter().enumerate() {
        cols.push(vec![(r_sto + s, 1.0)]);
        vars.push(Var {
            upper: f64::INFINITY,
            obj: 0.0,
            transport: 0.0,
        });
    }

    let nv = vars.len();
    let mut a = vec![vec![0.0; nv]; nrows];
    for (k, c) in cols.iter().enumerate() {
        for &(r, v) in c {
            a[r][k] = v;
        }
    }
    let mut b = vec![0.0; nrows];
    b[..n].copy_from_slice(inst.rho);
    b[r_pi2..r_pi2 + n].copy_from_slice(inst.nu);
    for (s, &j) in sto_rows.iter().enumerate() {
        b[r_sto + s] = inst.storage[j];
    }
    let (a, b) = independent_rows(a, b)?;
    let r = a.len();

    let mut best: Vec<(f64, f64)> = Vec::new();
    let mut basis: Vec<usize> = (0..r).collect();
    loop {
        visit_basis(&a, &b, &vars, &basis, &mut best);
        if !next_combination(&mut basis, nv) {
            break;
        }
    }
    let objective = best.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    if !objective.is_finite() {
        return None;
    }
    let optimal: Vec<f64> = best
        .iter()
        .filter(|x| x.0 <= objective + TOL)
        .map(|x| x.1)
        .collect();
    Some(LpOptimum {
        objective,
        transport_lo: optimal.iter().copied().fold(f64::INFINITY, f64::min),
        transport_hi: optimal.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        vertices: optimal.len(),
    })
}

fn visit_basis(a: &Dense, b: &[f64], vars: &[Var], basis: &[usize], out: &mut Vec<(f64, f64)>) {
    let r = basis.len();
    let ab: Dense = a.iter().map(|row| basis.iter().map(|&k| row[k]).collect()).collect();
    let Some(lu) = Lu::new(ab) else { return };
    let nonbasic: Vec<usize> = (0..vars.len()).filter(|k| !basis.contains(k)).collect();
    let bounded: Vec<usize> = nonbasic
        .iter()
        .copied()
        .filter(|&k| vars[k].upper.is_finite())
        .collect();
    for mask in 0u64..(1u64 << bounded.len()) {
        let mut x = vec![0.0; vars.len()];
        for (bit, &k) in bounded.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                x[k] = vars[k].upper;
            }
        }
        let rhs: Vec<f64> = (0..r)
            .map(|i| b[i] - nonbasic.iter().map(|&k| a[i][k] * x[k]).sum::<f64>())
            .collect();
        let xb = lu.solve(&rhs);
        let ok = basis
            .iter()
            .zip(&xb)
            .all(|(&k, &v)| v >= -TOL && v <= vars[k].upper + TOL);
        if !ok {
            continue;
        }
        for (&k, &v) in basis.iter().zip(&xb) {
            x[k] = v;
        }
        let obj = vars.iter().zip(&x).map(|(v, x)| v.obj * x).sum();
        let transport = vars.iter().zip(&x).map(|(v, x)| v.transport * x).sum();
        out.push((obj, transport));
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if c[i] < n - r + i {
            c[i] += 1;
            for j in i + 1..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Drops redundant equality rows; `None` if the system is inconsistent.
fn independent_rows(a: Dense, b: Vec<f64>) -> Option<(Dense, Vec<f64>)> {
    let mut keep_a: Dense = Vec::new();
    let mut keep_b = Vec::new();
    // reduced copies of the kept rows, for testing new rows against them
    let mut reduced: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    for (row, rhs) in a.into_iter().zip(b) {
        let mut v = row.clone();
        let mut w = rhs;
        for (piv_row, piv_rhs, p) in &reduced {
            let f = v[*p] / piv_row[*p];
            if f != 0.0 {
                v.iter_mut().zip(piv_row).for_each(|(x, y)| *x -= f * y);
                w -= f * piv_rhs;
            }
        }
        let pivot = (0..v.len()).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()));
        match pivot {
            Some(p) if v[p].abs() > 1e-12 => {
                reduced.push((v, w, p));
                keep_a.push(row);
                keep_b.push(rhs);
            }
            _ => {
                if w.abs() > 1e-12 {
                    return None;
                }
            }
        }
    }
    Some((keep_a, keep_b))
}

struct Lu {
    m: Dense,
    perm: Vec<usize>,
}

impl Lu {
    fn new(mut m: Dense) -> Option<Lu> {
        let n = m.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
            if m[p][c].abs() < 1e-10 {
                return None;
            }
            m.swap(c, p);
            perm.swap(c, p);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                m[r][c] = f;
                for k in c + 1..n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        Some(Lu { m, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.m.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for r in 0..n {
            for k in 0..r {
                y[r] -= self.m[r][k] * y[k];
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                y[r] -= self.m[r][k] * y[k];
            }
            y[r] /= self.m[r][r];
        }
        y
    }
}
