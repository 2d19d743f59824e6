//! Penalised quantile regression through its bounded dual linear program.
//!
//! `min sum rho_tau(y - X b) + sum pen_j |b_j|` is rewritten as a plain
//! quantile regression by appending the pseudo-observations `(+pen_j e_j, 0)`
//! and `(-pen_j e_j, 0)` for every penalised column; their check losses add up
//! to `pen_j |b_j|` for any `tau`. The dual
//! `max y'a  s.t.  X'a = (1 - tau) X'1,  0 <= a <= 1`
//! is solved with a Mehrotra predictor-corrector interior-point method and the
//! answer is polished to a vertex when that does not raise the objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn check_loss(r: f64, tau: f64) -> f64 {
    if r >= 0.0 {
        tau * r
    } else {
        (tau - 1.0) * r
    }
}

/// Penalised check-loss objective at `beta`.
pub fn objective(x: &DMatrix<f64>, y: &[f64], tau: f64, penalty: &[f64], beta: &[f64]) -> f64 {
    let b = DVector::from_column_slice(beta);
    let fit = x * b;
    let loss: f64 = y.iter().zip(fit.iter()).map(|(yi, fi)| check_loss(yi - fi, tau)).sum();
    loss + penalty.iter().zip(beta).map(|(p, b)| p * b.abs()).sum::<f64>()
}

#[derive(Clone, Debug)]
pub struct QrSolution {
    pub beta: Vec<f64>,
    /// Dual vector `a` over the augmented rows.
    pub dual: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub purified: bool,
}

/// Rows of the augmented design and response.
pub fn augment(x: &DMatrix<f64>, y: &[f64], penalty: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let (n, p) = x.shape();
    let pen: Vec<usize> = (0..p).filter(|j| penalty[*j] > 0.0).collect();
    let m = n + 2 * pen.len();
    let mut xa = DMatrix::zeros(m, p);
    xa.rows_mut(0, n).copy_from(x);
    let mut ya = y.to_vec();
    for (k, j) in pen.iter().enumerate() {
        xa[(n + 2 * k, *j)] = penalty[*j];
        xa[(n + 2 * k + 1, *j)] = -penalty[*j];
        ya.push(0.0);
        ya.push(0.0);
    }
    (xa, ya)
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    for (x, d) in v.iter().zip(dv) {
        if *d < 0.0 {
            a = a.min(-x / d);
        }
    }
    a
}

struct Newton<'a> {
    xa: &'a DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    d: Vec<f64>,
}

impl Newton<'_> {
    /// Direction for complementarity targets `rxz`, `rsw`.
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        x: &[f64],
        s: &[f64],
        z: &[f64],
        w: &[f64],
        rp: &DVector<f64>,
        rd: &[f64],
        rxz: &[f64],
        rsw: &[f64],
    ) -> [Vec<f64>; 5] {
        let m = x.len();
        let q: Vec<f64> = (0..m).map(|i| rd[i] - rxz[i] / x[i] + rsw[i] / s[i]).collect();
        let dq = DVector::from_iterator(m, (0..m).map(|i| self.d[i] * q[i]));
        let rhs = rp + self.xa.tr_mul(&dq);
        let dy = self.chol.solve(&rhs);
        let xdy = self.xa * &dy;
        let dx: Vec<f64> = (0..m).map(|i| self.d[i] * (xdy[i] - q[i])).collect();
        let ds: Vec<f64> = dx.iter().map(|v| -v).collect();
        let dz: Vec<f64> = (0..m).map(|i| (rxz[i] - z[i] * dx[i]) / x[i]).collect();
        let dw: Vec<f64> = (0..m).map(|i| (rsw[i] - w[i] * ds[i]) / s[i]).collect();
        [dx, ds, dz, dw, dy.iter().copied().collect()]
    }
}

/// Interior-point solve of the augmented problem.
fn interior_point(xa: &DMatrix<f64>, ya: &[f64], tau: f64) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (m, p) = xa.shape();
    let c: Vec<f64> = ya.iter().map(|v| -v).collect();
    let ones = DVector::from_element(m, 1.0);
    let b = xa.tr_mul(&ones) * (1.0 - tau);
    let mut x = vec![1.0 - tau; m];
    let mut s = vec![tau; m];

    // least-squares start for the dual
    let xtx = xa.tr_mul(xa);
    let ridge = 1e-12 * (1.0 + xtx.trace() / p as f64);
    let xtx_r = &xtx + DMatrix::identity(p, p) * ridge;
    let chol0 = xtx_r.cholesky().ok_or(Error::SingularDesign)?;
    let mut yd = chol0.solve(&xa.tr_mul(&DVector::from_column_slice(&c)));
    let r0 = DVector::from_column_slice(&c) - xa * &yd;
    let delta = (r0.iter().map(|v| v.abs()).sum::<f64>() / m as f64).max(1e-8);
    let mut z: Vec<f64> = r0.iter().map(|v| v.max(0.0) + delta).collect();
    let mut w: Vec<f64> = r0.iter().map(|v| (-v).max(0.0) + delta).collect();

    let cnorm = 1.0 + c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bnorm = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it;
        let xv = DVector::from_column_slice(&x);
        let rp = &b - xa.tr_mul(&xv);
        let aty = xa * &yd;
        let rd: Vec<f64> = (0..m).map(|i| c[i] - aty[i] - z[i] + w[i]).collect();
        let gap: f64 = (0..m).map(|i| x[i] * z[i] + s[i] * w[i]).sum();
        let pobj: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        let rp_max = rp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let rd_max = rd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let scale = 1.0 + pobj.abs();
        let feasible = rp_max < 1e-8 * bnorm && rd_max < 1e-8 * cnorm;
        if (gap < 1e-12 * scale && feasible) || gap < 1e-15 * scale {
            break;
        }
        let d: Vec<f64> = (0..m).map(|i| 1.0 / (z[i] / x[i] + w[i] / s[i])).collect();
        let mut mat = DMatrix::zeros(p, p);
        for i in 0..m {
            let row = xa.row(i);
            let di = d[i];
            for a in 0..p {
                let ra = row[a] * di;
                if ra == 0.0 {
                    continue;
                }
                for bb in a..p {
                    mat[(a, bb)] += ra * row[bb];
                }
            }
        }
        for a in 0..p {
            for bb in 0..a {
                mat[(a, bb)] = mat[(bb, a)];
            }
        }
        let tr = mat.trace() / p as f64;
        for a in 0..p {
            mat[(a, a)] += 1e-14 * tr;
        }
        let Some(chol) = mat.cholesky() else {
            // the scaling matrix degenerates only near the optimum
            if gap < 1e-6 * scale {
                break;
            }
            return Err(Error::SingularDesign);
        };
        let nt = Newton { xa, chol, d };

        let rxz: Vec<f64> = (0..m).map(|i| -x[i] * z[i]).collect();
        let rsw: Vec<f64> = (0..m).map(|i| -s[i] * w[i]).collect();
        let [dx, ds, dz, dw, _] = nt.solve(&x, &s, &z, &w, &rp, &rd, &rxz, &rsw);
        let ap = 1f64.min(max_step(&x, &dx)).min(max_step(&s, &ds));
        let ad = 1f64.min(max_step(&z, &dz)).min(max_step(&w, &dw));
        let mu_aff: f64 = (0..m)
            .map(|i| (x[i] + ap * dx[i]) * (z[i] + ad * dz[i]) + (s[i] + ap * ds[i]) * (w[i] + ad * dw[i]))
            .sum();
        let sigma = (mu_aff / gap).powi(3);
        let mu = sigma * gap / (2 * m) as f64;

        let rxz: Vec<f64> = (0..m).map(|i| mu - x[i] * z[i] - dx[i] * dz[i]).collect();
        let rsw: Vec<f64> = (0..m).map(|i| mu - s[i] * w[i] - ds[i] * dw[i]).collect();
        let [dx, ds, dz, dw, dy] = nt.solve(&x, &s, &z, &w, &rp, &rd, &rxz, &rsw);
        let ap = 1f64.min(0.99995 * max_step(&x, &dx).min(max_step(&s, &ds)));
        let ad = 1f64.min(0.99995 * max_step(&z, &dz).min(max_step(&w, &dw)));
        for i in 0..m {
            x[i] += ap * dx[i];
            s[i] += ap * ds[i];
            z[i] += ad * dz[i];
            w[i] += ad * dw[i];
        }
        for k in 0..p {
            yd[k] += ad * dy[k];
        }
        if x.iter().chain(&z).chain(&s).chain(&w).any(|v| !v.is_finite()) {
            return Err(Error::SingularDesign);
        }
    }
    let beta = yd.iter().map(|v| -v).collect();
    Ok((beta, x, iterations))
}

/// Moves to a vertex: interpolates the `p` rows with the smallest absolute
/// residuals that are linearly independent.
fn purify(xa: &DMatrix<f64>, ya: &[f64], beta: &[f64]) -> Option<Vec<f64>> {
    let (m, p) = xa.shape();
    let bv = DVector::from_column_slice(beta);
    let fit = xa * bv;
    // distance to each row's hyperplane, so heavily weighted penalty rows
    // are not pushed to the back
    let dist: Vec<f64> = (0..m)
        .map(|i| {
            let norm = xa.row(i).norm();
            if norm == 0.0 { f64::INFINITY } else { (ya[i] - fit[i]).abs() / norm }
        })
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|a, b| dist[*a].total_cmp(&dist[*b]));
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(p);
    let mut rows = Vec::with_capacity(p);
    for i in order {
        let v = xa.row(i).transpose();
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let mut u = v.clone();
        for q in &basis {
            let proj = q.dot(&u);
            u -= q * proj;
        }
        let un = u.norm();
        if un > 1e-9 * norm {
            basis.push(u / un);
            rows.push(i);
            if rows.len() == p {
                break;
            }
        }
    }
    if rows.len() < p {
        return None;
    }
    let a = DMatrix::from_fn(p, p, |r, c| xa[(rows[r], c)]);
    let rhs = DVector::from_iterator(p, rows.iter().map(|i| ya[*i]));
    let sol = a.lu().solve(&rhs)?;
    Some(sol.iter().copied().collect())
}

/// Solves the penalised quantile regression. `penalty[j]` is the weight
/// `lambda * omega_j` of column `j` (zero leaves it unpenalised).
pub fn quantile_regression(x: &DMatrix<f64>, y: &[f64], tau: f64, penalty: &[f64]) -> Result<QrSolution> {
    let (n, p) = x.shape();
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidConfig(format!("tau must lie in (0, 1), got {tau}")));
    }
    if penalty.len() != p || y.len() != n {
        return Err(Error::InvalidConfig("design, response and penalty sizes disagree".into()));
    }
    if penalty.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidConfig("penalties must be finite and nonnegative".into()));
    }
    let (xa, ya) = augment(x, y, penalty);
    if xa.nrows() < p {
        return Err(Error::SingularDesign);
    }
    // equilibrate columns; heavy penalty rows otherwise swamp the intercept
    let norms: Vec<f64> = (0..p).map(|j| xa.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let xs = DMatrix::from_fn(xa.nrows(), p, |i, j| xa[(i, j)] / norms[j]);
    let (gamma, dual, iterations) = interior_point(&xs, &ya, tau)?;
    let beta_ip: Vec<f64> = gamma.iter().zip(&norms).map(|(g, c)| g / c).collect();
    let obj_ip = objective(x, y, tau, penalty, &beta_ip);
    if let Some(bv) = purify(&xa, &ya, &beta_ip) {
        let obj_v = objective(x, y, tau, penalty, &bv);
        if obj_v <= obj_ip + 1e-9 * (1.0 + obj_ip.abs()) {
            return Ok(QrSolution { beta: bv, dual, objective: obj_v, iterations, purified: true });
        }
    }
    Ok(QrSolution { beta: beta_ip, dual, objective: obj_ip, iterations, purified: false })
}

/// Largest violation of the optimality conditions of `sol`: dual
/// feasibility `X'a = (1 - tau) X'1`, `0 <= a <= 1`, and `a_i = 1` (resp. 0)
/// on rows with clearly positive (resp. negative) residuals.
pub fn kkt_violation(x: &DMatrix<f64>, y: &[f64], tau: f64, penalty: &[f64], sol: &QrSolution) -> f64 {
    let (xa, ya) = augment(x, y, penalty);
    let m = xa.nrows();
    let a = DVector::from_column_slice(&sol.dual);
    let ones = DVector::from_element(m, 1.0);
    let scale = 1.0 + xa.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let feas = (xa.tr_mul(&a) - xa.tr_mul(&ones) * (1.0 - tau)).amax() / scale;
    let fit = &xa * DVector::from_column_slice(&sol.beta);
    let rtol = 1e-7 * (1.0 + ya.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    let mut worst = feas;
    for i in 0..m {
        let ai = sol.dual[i];
        worst = worst.max((-ai).max(ai - 1.0));
        let r = ya[i] - fit[i];
        if r > rtol {
            worst = worst.max(1.0 - ai);
        } else if r < -rtol {
            worst = worst.max(ai);
        }
    }
    worst
}
