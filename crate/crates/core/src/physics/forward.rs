use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{CMatrix, DomainOperator};
use crate::{Error, Result};

/// Largest system solved by LU in [`Solver::Auto`] mode.
const AUTO_DIRECT_LIMIT: usize = 1024;

/// Required relative residual of a returned total field.
const ACCEPT_RESIDUAL: f64 = 1e-8;

/// How to solve the state equation `(I - G_D diag(chi)) E = E_inc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    /// Dense LU with partial pivoting.
    Direct,
    /// BiCGSTAB driven by operator applies.
    Iterative { tol: f64, max_iter: usize },
    /// Direct up to 1024 cells, iterative beyond.
    Auto,
}

impl Solver {
    pub const DEFAULT_ITERATIVE: Solver = Solver::Iterative {
        tol: 1e-10,
        max_iter: 2000,
    };

    fn resolve(self, n_cells: usize) -> Solver {
        match self {
            Solver::Auto if n_cells <= AUTO_DIRECT_LIMIT => Solver::Direct,
            Solver::Auto => Solver::DEFAULT_ITERATIVE,
            s => s,
        }
    }
}

/// `‖E - E_inc - G_D(chi ⊙ E)‖ / ‖E_inc‖` for one field.
pub fn relative_state_residual(
    chi: &[Complex64],
    e_inc: &[Complex64],
    e_tot: &[Complex64],
    op: &DomainOperator,
) -> Result<f64> {
    let source: Vec<Complex64> = chi.iter().zip(e_tot).map(|(c, e)| c * e).collect();
    let g = op.apply_vec(&source)?;
    let num: f64 = e_tot
        .iter()
        .zip(e_inc)
        .zip(&g)
        .map(|((e, i), gj)| (e - i - gj).norm_sqr())
        .sum();
    let den: f64 = e_inc.iter().map(|c| c.norm_sqr()).sum();
    Ok((num / den).sqrt())
}

/// Total field for one incident field.
pub fn forward_solve(
    chi: &[Complex64],
    e_inc: &[Complex64],
    op: &DomainOperator,
    solver: Solver,
) -> Result<Vec<Complex64>> {
    let inc = Array2::from_shape_vec((1, e_inc.len()), e_inc.to_vec())
        .map_err(|e| Error::invalid(e.to_string()))?;
    let out = forward_solve_all(chi, &inc, op, solver)?;
    Ok(out.into_raw_vec_and_offset().0)
}

/// Total fields for every row of `e_inc` (`P × N_g`).
pub fn forward_solve_all(
    chi: &[Complex64],
    e_inc: &CMatrix,
    op: &DomainOperator,
    solver: Solver,
) -> Result<CMatrix> {
    let ng = op.n_cells();
    if chi.len() != ng || e_inc.ncols() != ng {
        return Err(Error::invalid(format!(
            "contrast ({}) and incident field ({}) must both have {ng} cells",
            chi.len(),
            e_inc.ncols()
        )));
    }
    if chi.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite {
            term: "contrast".into(),
        });
    }
    if chi.iter().all(|c| c.norm_sqr() == 0.0) {
        return Ok(e_inc.clone());
    }
    match solver.resolve(ng) {
        Solver::Direct => solve_direct(chi, e_inc, op),
        Solver::Iterative { tol, max_iter } => {
            let mut out = Array2::zeros(e_inc.raw_dim());
            for (p, row) in e_inc.rows().into_iter().enumerate() {
                let b: Vec<Complex64> = row.to_vec();
                let x = bicgstab(chi, &b, op, tol, max_iter)?;
                let res = relative_state_residual(chi, &b, &x, op)?;
                if res > ACCEPT_RESIDUAL {
                    return Err(Error::NonConvergence {
                        iterations: max_iter,
                        final_residual: res,
                        history: vec![res],
                    });
                }
                out.row_mut(p).assign(&Array1::from(x));
            }
            Ok(out)
        }
        Solver::Auto => unreachable!("resolved above"),
    }
}

fn solve_direct(chi: &[Complex64], e_inc: &CMatrix, op: &DomainOperator) -> Result<CMatrix> {
    let g = op.to_dense()?;
    let ng = chi.len();
    let a = DMatrix::from_fn(ng, ng, |m, k| {
        let delta = if m == k { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - g[[m, k]] * chi[k]
    });
    let lu = a.lu();
    let rhs = DMatrix::from_fn(ng, e_inc.nrows(), |m, p| e_inc[[p, m]]);
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularGeometry("state-equation matrix is singular".into()))?;
    let out = Array2::from_shape_fn(e_inc.raw_dim(), |(p, m)| sol[(m, p)]);
    for (p, row) in out.rows().into_iter().enumerate() {
        let b = e_inc.row(p).to_vec();
        let res = relative_state_residual(chi, &b, &row.to_vec(), op)?;
        if res > ACCEPT_RESIDUAL {
            return Err(Error::NonConvergence {
                iterations: 1,
                final_residual: res,
                history: vec![res],
            });
        }
    }
    Ok(out)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// BiCGSTAB on `x - G_D(chi ⊙ x) = b`, starting from `x = b`.
fn bicgstab(
    chi: &[Complex64],
    b: &[Complex64],
    op: &DomainOperator,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<Complex64>> {
    let apply = |x: &[Complex64]| -> Result<Vec<Complex64>> {
        let s: Vec<Complex64> = chi.iter().zip(x).map(|(c, v)| c * v).collect();
        let g = op.apply_vec(&s)?;
        Ok(x.iter().zip(&g).map(|(v, gv)| v - gv).collect())
    };
    let b_norm = norm(b);
    let mut x = b.to_vec();
    let ax = apply(&x)?;
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, a)| bi - a).collect();
    let mut r_hat = r.clone();
    let mut history = vec![norm(&r) / b_norm];
    if history[0] <= tol {
        return Ok(x);
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let (mut rho, mut alpha, mut omega) = (one, one, one);
    let mut v = vec![zero; b.len()];
    let mut p = vec![zero; b.len()];

    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() < 1e-300 {
            // Breakdown: restart the shadow residual.
            r_hat = r.clone();
            rho = one;
            alpha = one;
            omega = one;
            v.iter_mut().for_each(|c| *c = zero);
            p.iter_mut().for_each(|c| *c = zero);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = apply(&p)?;
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<Complex64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm(&s) / b_norm <= tol {
            for i in 0..x.len() {
                x[i] += alpha * p[i];
            }
            history.push(norm(&s) / b_norm);
            return Ok(x);
        }
        let t = apply(&s)?;
        let tt = dot(&t, &t);
        omega = if tt.norm() > 0.0 { dot(&t, &s) / tt } else { zero };
        for i in 0..x.len() {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / b_norm;
        history.push(rel);
        if !rel.is_finite() {
            break;
        }
        if rel <= tol {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: history.len() - 1,
        final_residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{build_spectral_kernel, domain_operator_dense};
    use crate::scene::build_grid;

    fn disk_contrast(n: usize, value: Complex64) -> Vec<Complex64> {
        let grid = build_grid(0.5, n).unwrap();
        grid.cell_centers()
            .into_iter()
            .map(|(x, y)| if x * x + y * y <= 0.04 { value } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    fn plane_like_incident(n: usize) -> Vec<Complex64> {
        let grid = build_grid(0.5, n).unwrap();
        grid.cell_centers()
            .into_iter()
            .map(|(x, y)| Complex64::from_polar(1.0, -6.0 * x + 0.5 * y))
            .collect()
    }

    #[test]
    fn zero_contrast_returns_incident_exactly() {
        let grid = build_grid(0.5, 8).unwrap();
        let op = DomainOperator::Spectral(build_spectral_kernel(&grid, 6.0, 2).unwrap());
        let inc = plane_like_incident(8);
        let out = forward_solve(&vec![Complex64::new(0.0, 0.0); 64], &inc, &op, Solver::Auto).unwrap();
        assert_eq!(out, inc);
    }

    #[test]
    fn direct_and_iterative_agree_and_satisfy_state_equation() {
        let n = 16;
        let grid = build_grid(0.5, n).unwrap();
        let k0 = crate::wavenumber(4e8);
        let chi = disk_contrast(n, Complex64::new(2.0, -0.4));
        let inc = plane_like_incident(n);
        let dense = DomainOperator::Dense(domain_operator_dense(&grid, k0).unwrap());
        let fast = DomainOperator::Spectral(build_spectral_kernel(&grid, k0, 2).unwrap());
        let a = forward_solve(&chi, &inc, &dense, Solver::Direct).unwrap();
        let b = forward_solve(&chi, &inc, &fast, Solver::DEFAULT_ITERATIVE).unwrap();
        assert!(relative_state_residual(&chi, &inc, &a, &dense).unwrap() <= 1e-8);
        assert!(relative_state_residual(&chi, &inc, &b, &fast).unwrap() <= 1e-8);
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff / norm(&a) < 1e-8);
    }

    #[test]
    fn solution_is_linear_in_incident_field() {
        let n = 8;
        let grid = build_grid(0.5, n).unwrap();
        let op = DomainOperator::Dense(domain_operator_dense(&grid, 8.0).unwrap());
        let chi = disk_contrast(n, Complex64::new(1.5, 0.0));
        let inc = plane_like_incident(n);
        let alpha = Complex64::new(-0.7, 2.1);
        let scaled: Vec<Complex64> = inc.iter().map(|c| alpha * c).collect();
        let a = forward_solve(&chi, &inc, &op, Solver::Direct).unwrap();
        let b = forward_solve(&chi, &scaled, &op, Solver::Direct).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((alpha * x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn non_convergence_reports_history() {
        let n = 8;
        let grid = build_grid(0.5, n).unwrap();
        let op = DomainOperator::Spectral(build_spectral_kernel(&grid, 20.0, 2).unwrap());
        let chi = disk_contrast(n, Complex64::new(40.0, 0.0));
        let inc = plane_like_incident(n);
        match forward_solve(&chi, &inc, &op, Solver::Iterative { tol: 1e-14, max_iter: 2 }) {
            Err(Error::NonConvergence { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
