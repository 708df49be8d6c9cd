//! Dense primal simplex for `max cᵀu  s.t.  A u ≤ b, u ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible, so no phase one is needed. The tableau is kept in
//! condensed (Tucker) form: one row per constraint, one column per nonbasic
//! variable. Entering columns follow Dantzig's rule until a run of degenerate
//! pivots is seen, after which Bland's rule is used for the rest of the solve.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Debug)]
pub struct Solution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

/// Solves the LP. `rows` holds the dense constraint rows, each of length `c.len()`.
pub fn maximize(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Result<Solution> {
    let n = c.len();
    let m = rows.len();
    if b.len() != m {
        return Err(Error::Lp("row count and rhs length differ".into()));
    }
    if let Some(v) = b.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Lp(format!("rhs {v} must be finite and nonnegative")));
    }
    let width = n + 1;
    // row i < m: x_{basic[i]} = t[i][n] − Σ_j t[i][j] x_{nonbasic[j]}
    // row m:     z           = t[m][n] − Σ_j t[m][j] x_{nonbasic[j]}
    let mut t = vec![0.0; (m + 1) * width];
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Lp(format!("row {i} has length {} (expected {n})", row.len())));
        }
        t[i * width..i * width + n].copy_from_slice(row);
        t[i * width + n] = b[i];
    }
    for j in 0..n {
        t[m * width + j] = -c[j];
    }
    let mut nonbasic: Vec<usize> = (0..n).collect();
    let mut basic: Vec<usize> = (n..n + m).collect();

    let cost_eps = 1e-12 * (1.0 + c.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let max_pivots = 50 * (n + m) + 1000;
    let mut bland = false;
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;
    let mut col_nz: Vec<usize> = Vec::with_capacity(m + 1);
    let mut row_nz: Vec<usize> = Vec::with_capacity(width);

    loop {
        let obj = &t[m * width..m * width + n];
        let entering = if bland {
            (0..n)
                .filter(|&j| obj[j] < -cost_eps)
                .min_by_key(|&j| nonbasic[j])
        } else {
            (0..n)
                .filter(|&j| obj[j] < -cost_eps)
                .min_by(|&a, &b| obj[a].total_cmp(&obj[b]).then(nonbasic[a].cmp(&nonbasic[b])))
        };
        let Some(s) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + s];
            if a > PIVOT_EPS {
                let ratio = t[i * width + n] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - 1e-14 || (ratio <= best + 1e-14 && basic[i] < basic[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::Lp("objective is unbounded".into()));
        };

        if ratio.abs() <= 1e-14 {
            degenerate_run += 1;
            if degenerate_run >= DEGENERATE_RUN {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        pivot(&mut t, width, m, r, s, &mut col_nz, &mut row_nz);
        std::mem::swap(&mut basic[r], &mut nonbasic[s]);
        for i in 0..m {
            let v = &mut t[i * width + n];
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
        }
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Lp(format!("no convergence after {pivots} pivots")));
        }
    }

    let mut x = vec![0.0; n];
    for (i, &var) in basic.iter().enumerate() {
        if var < n {
            x[var] = t[i * width + n];
        }
    }
    Ok(Solution {
        objective: t[m * width + n],
        x,
        pivots,
    })
}

fn pivot(t: &mut [f64], width: usize, m: usize, r: usize, s: usize, col_nz: &mut Vec<usize>, row_nz: &mut Vec<usize>) {
    let p = t[r * width + s];
    let inv = 1.0 / p;
    for j in 0..width {
        t[r * width + j] *= inv;
    }
    t[r * width + s] = inv;

    row_nz.clear();
    row_nz.extend((0..width).filter(|&j| j != s && t[r * width + j] != 0.0));
    col_nz.clear();
    col_nz.extend((0..=m).filter(|&i| i != r && t[i * width + s] != 0.0));

    for &i in col_nz.iter() {
        let f = t[i * width + s];
        for &j in row_nz.iter() {
            t[i * width + j] -= f * t[r * width + j];
        }
        t[i * width + s] = -f * inv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  →  (2, 6), value 36
        let sol = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_objective_stays_at_origin() {
        let sol = maximize(&[0.0, -1.0], &[vec![1.0, 1.0]], &[1.0]).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.pivots, 0);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize(&[1.0, 0.0], &[vec![-1.0, 1.0]], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example (for the textbook rule), written as ≤ rows.
        let c = [0.75, -20.0, 0.5, -6.0];
        let rows = vec![
            vec![0.25, -8.0, -1.0, 9.0],
            vec![0.5, -12.0, -0.5, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let sol = maximize(&c, &rows, &[0.0, 0.0, 1.0]).unwrap();
        assert!((sol.objective - 1.25).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_is_rejected() {
        assert!(maximize(&[1.0], &[vec![1.0]], &[-1.0]).is_err());
    }
}
