//! Numerical primitives the transmission protocol is built from: complex SVD,
//! zero-forcing right inverses, Gram-Schmidt residuals, the semi-orthogonality
//! measure, and joint diagonalization of Hermitian matrix sets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Singular values at or below `RANK_TOL` times the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Thin SVD `A = U · diag(S) · V^H` with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMat,
    /// Nonnegative, descending.
    pub singular_values: DVector<f64>,
    /// Stored as `V^H` (rows are right singular vectors).
    pub v_h: CMat,
}

impl SvdResult {
    /// Number of singular values above the zero threshold.
    pub fn rank(&self) -> usize {
        let smax = self.singular_values.max();
        self.singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count()
    }

    pub fn reconstruct(&self) -> CMat {
        let r = self.singular_values.len();
        let s = CMat::from_fn(r, r, |i, j| {
            if i == j {
                Complex::new(self.singular_values[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        &self.u * s * &self.v_h
    }
}

/// Thin SVD with descending singular values.
pub fn svd(a: &CMat) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(Error::Domain("svd of an empty matrix".into()));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Domain("svd input contains non-finite entries".into()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_h = svd.v_t.expect("svd requested v_t");
    let s = svd.singular_values;

    // nalgebra does not guarantee ordering; sort descending and permute
    // the singular vectors to match.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let sorted = DVector::from_fn(s.len(), |i, _| s[order[i]]);
    let u_sorted = CMat::from_fn(u.nrows(), u.ncols(), |r, c| u[(r, order[c])]);
    let vh_sorted = CMat::from_fn(v_h.nrows(), v_h.ncols(), |r, c| v_h[(order[r], c)]);
    Ok(SvdResult { u: u_sorted, singular_values: sorted, v_h: vh_sorted })
}

/// Right inverse `A^H (A A^H)^{-1}` of a full-row-rank matrix, so that
/// `A * right_inverse(A) = I`.
pub fn right_inverse(a: &CMat) -> Result<CMat> {
    let dec = svd(a)?;
    let smax = dec.singular_values.max();
    let smin = dec.singular_values.min();
    if dec.singular_values.len() < a.nrows() || smin <= RANK_TOL * smax || smax == 0.0 {
        return Err(Error::Singular(format!(
            "right inverse of a {}x{} matrix without full row rank",
            a.nrows(),
            a.ncols()
        )));
    }
    // V Σ^{-1} U^H, algebraically equal to A^H (A A^H)^{-1} for full row rank.
    let r = dec.singular_values.len();
    let sinv = CMat::from_fn(r, r, |i, j| {
        if i == j {
            Complex::new(1.0 / dec.singular_values[i], 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let mut t = dec.v_h.adjoint() * &sinv * dec.u.adjoint();
    // One pass of iterative refinement tightens A*T = I for ill-conditioned rows.
    let resid = CMat::identity(a.nrows(), a.nrows()) - a * &t;
    t += dec.v_h.adjoint() * &sinv * dec.u.adjoint() * resid;
    Ok(t)
}

/// Gram-Schmidt residual of `v` against the span of `basis`, returning the
/// residual vector and its norm (the NOC). An empty basis returns `v` itself.
pub fn gram_schmidt_residual(v: &CVec, basis: &[&CVec]) -> (CVec, f64) {
    let mut ortho: Vec<CVec> = Vec::with_capacity(basis.len());
    for b in basis {
        assert_eq!(b.len(), v.len(), "basis vector length mismatch");
        let mut q = (*b).clone();
        for o in &ortho {
            let proj = o.dotc(&q);
            q -= o * proj;
        }
        let n = q.norm();
        if n > RANK_TOL {
            ortho.push(q / Complex::new(n, 0.0));
        }
    }
    let mut resid = v.clone();
    // Two projection passes (modified Gram-Schmidt with reorthogonalization).
    for _ in 0..2 {
        for o in &ortho {
            let proj = o.dotc(&resid);
            resid -= o * proj;
        }
    }
    let noc = resid.norm();
    (resid, noc)
}

/// Semi-orthogonality measure `|Re(v1^H v2)| / (‖v1‖·‖v2‖)` in [0, 1].
pub fn semi_orthogonality(v1: &CVec, v2: &CVec) -> Result<f64> {
    let n1 = v1.norm();
    let n2 = v2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::Domain("semi-orthogonality of a zero vector".into()));
    }
    Ok((v1.dotc(v2).re / (n1 * n2)).abs().min(1.0))
}

/// Result of jointly diagonalizing a set of Hermitian matrices: the combiner
/// `B` chosen so the transformed matrices `B A_i B^H` are close to diagonal.
#[derive(Debug, Clone)]
pub struct JointDiagResult {
    pub combiner: CMat,
    /// Objective value after each iteration (index 0 = initialization).
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

fn hermitian_deviation(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

pub(crate) fn hermitian_eigen(a: &CMat) -> (DVector<f64>, CMat) {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    (eig.eigenvalues, eig.eigenvectors)
}

/// Cyclic Jacobi eigendecomposition for small Hermitian matrices, operating
/// in place on column-major storage: on return `g` is diagonal (eigenvalues
/// on the diagonal) and `v` holds the eigenvector columns.
pub(crate) fn jacobi_hermitian_eigen_slice(g: &mut [C64], v: &mut [C64], n: usize) {
    debug_assert_eq!(g.len(), n * n);
    debug_assert_eq!(v.len(), n * n);
    let idx = |i: usize, j: usize| i + j * n;
    for j in 0..n {
        for i in 0..n {
            v[idx(i, j)] = if i == j { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
        }
    }
    let scale: f64 = g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 || n == 1 {
        return;
    }
    let stop = (1e-15 * scale) * (1e-15 * scale);
    for _ in 0..40 {
        let mut off = 0.0;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                off += g[idx(p, q)].norm_sqr();
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let b = g[idx(p, q)];
                let ab = b.norm();
                if ab * ab <= stop / (n * n) as f64 {
                    continue;
                }
                let phase = b / Complex::new(ab, 0.0);
                let theta = (g[idx(q, q)].re - g[idx(p, p)].re) / (2.0 * ab);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let cs = Complex::new(c, 0.0);
                let sp = phase * Complex::new(s, 0.0);
                let spc = sp.conj();
                // columns: G <- G J, V <- V J
                for i in 0..n {
                    let gip = g[idx(i, p)];
                    let giq = g[idx(i, q)];
                    g[idx(i, p)] = gip * cs - giq * spc;
                    g[idx(i, q)] = gip * sp + giq * cs;
                    let vip = v[idx(i, p)];
                    let viq = v[idx(i, q)];
                    v[idx(i, p)] = vip * cs - viq * spc;
                    v[idx(i, q)] = vip * sp + viq * cs;
                }
                // rows: G <- J^H G
                for j in 0..n {
                    let gpj = g[idx(p, j)];
                    let gqj = g[idx(q, j)];
                    g[idx(p, j)] = gpj * cs - gqj * sp;
                    g[idx(q, j)] = gpj * spc + gqj * cs;
                }
                g[idx(p, q)] = Complex::new(0.0, 0.0);
                g[idx(q, p)] = Complex::new(0.0, 0.0);
            }
        }
    }
}

/// Convenience wrapper returning (eigenvalues, eigenvector columns) with
/// `A = V diag(λ) V^H`.
#[cfg(test)]
pub(crate) fn jacobi_hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut g = a.clone();
    let mut v = CMat::zeros(n, n);
    jacobi_hermitian_eigen_slice(g.as_mut_slice(), v.as_mut_slice(), n);
    ((0..n).map(|i| g[(i, i)].re).collect(), v)
}

/// Objective: `Σ_i ‖A_i − B^{-1} Λ_i B^{-H}‖²_F` where `mix = B^{-1}`.
fn jd_objective(targets: &[CMat], mix: &CMat, lambdas: &[Vec<f64>]) -> f64 {
    let d = mix.nrows();
    let mut total = 0.0;
    for (a, lam) in targets.iter().zip(lambdas) {
        for j in 0..d {
            for i in 0..d {
                let mut acc = a[(i, j)];
                for k in 0..d {
                    acc -= mix[(i, k)] * mix[(j, k)].conj() * lam[k];
                }
                total += acc.norm_sqr();
            }
        }
    }
    total
}

fn jd_lambdas(targets: &[CMat], combiner: &CMat) -> Vec<Vec<f64>> {
    let d = combiner.nrows();
    targets
        .iter()
        .map(|a| {
            (0..d)
                .map(|r| {
                    let mut acc = Complex::new(0.0, 0.0);
                    for j in 0..d {
                        for k in 0..d {
                            acc += combiner[(r, j)] * a[(j, k)] * combiner[(r, k)].conj();
                        }
                    }
                    acc.re
                })
                .collect()
        })
        .collect()
}

/// Jointly diagonalize Hermitian PSD `targets` by alternating closed-form
/// updates of the diagonal targets with line-searched descent steps on the
/// combiner. The objective trace is non-increasing by construction.
pub fn joint_diagonalize(targets: &[CMat], tol: f64, max_iter: usize) -> Result<JointDiagResult> {
    if targets.is_empty() {
        return Err(Error::Domain("joint diagonalization of an empty target set".into()));
    }
    let d = targets[0].nrows();
    for a in targets {
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::Domain("joint diagonalization targets must be square and same size".into()));
        }
        let scale = a.norm().max(1.0);
        if hermitian_deviation(a) > 1e-10 * scale {
            return Err(Error::Domain("joint diagonalization target is not Hermitian".into()));
        }
    }
    let scale: f64 = targets.iter().map(|a| a.norm_squared()).sum();

    // Start from the unitary eigenbasis of the summed targets; exact for a
    // single matrix and for commuting sets.
    let sum = targets.iter().fold(CMat::zeros(d, d), |acc, a| acc + a);
    let (_, vecs) = hermitian_eigen(&sum);
    let combiner0 = vecs.adjoint();
    let mut mix = combiner0.adjoint(); // inverse of a unitary combiner
    let mut combiner = combiner0;
    let mut lambdas = jd_lambdas(targets, &combiner);
    let mut obj = jd_objective(targets, &mix, &lambdas);
    let mut trace = vec![obj];
    let mut converged = false;

    if scale == 0.0 {
        return Ok(JointDiagResult { combiner, objective_trace: trace, converged: true });
    }

    let mut descent = CMat::zeros(d, d);
    let mut err = CMat::zeros(d, d);
    let mut cand = CMat::zeros(d, d);
    let mut warm_step: Option<f64> = None;
    for _ in 0..max_iter {
        // Descent step on the mixing matrix with a backtracking line search.
        descent.fill(Complex::new(0.0, 0.0));
        for (a, lam) in targets.iter().zip(&lambdas) {
            for j in 0..d {
                for i in 0..d {
                    let mut acc = a[(i, j)];
                    for k in 0..d {
                        acc -= mix[(i, k)] * mix[(j, k)].conj() * lam[k];
                    }
                    err[(i, j)] = acc;
                }
            }
            for j in 0..d {
                for i in 0..d {
                    let mut acc = Complex::new(0.0, 0.0);
                    for k in 0..d {
                        acc += err[(i, k)] * mix[(k, j)];
                    }
                    descent[(i, j)] += acc * lam[j];
                }
            }
        }
        let dn = descent.norm();
        if dn > 0.0 {
            let mut step = warm_step.map_or(0.5 * mix.norm() / dn, |s| 2.0 * s);
            for _ in 0..60 {
                cand.copy_from(&mix);
                cand.zip_apply(&descent, |m, g| *m += g * Complex::new(step, 0.0));
                let cand_obj = jd_objective(targets, &cand, &lambdas);
                if cand_obj < obj {
                    if let Some(inv) = cand.clone().try_inverse() {
                        mix.copy_from(&cand);
                        combiner = inv;
                        obj = cand_obj;
                        warm_step = Some(step);
                        break;
                    }
                }
                step *= 0.5;
            }
        }

        // Closed-form diagonal update; kept only when it does not regress.
        let cand_lambdas = jd_lambdas(targets, &combiner);
        let cand_obj = jd_objective(targets, &mix, &cand_lambdas);
        if cand_obj <= obj {
            lambdas = cand_lambdas;
            obj = cand_obj;
        }

        let prev = *trace.last().unwrap();
        trace.push(obj);
        if prev - obj <= tol * prev.max(1e-300) {
            converged = true;
            break;
        }
    }

    Ok(JointDiagResult { combiner, objective_trace: trace, converged })
}

/// Evaluate the joint-diagonalization objective at a given combiner, with the
/// diagonal targets taken in closed form from the transformed matrices.
pub fn jd_objective_at(targets: &[CMat], combiner: &CMat) -> Result<f64> {
    let mix = combiner
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("combiner is not invertible".into()))?;
    let lambdas = jd_lambdas(targets, combiner);
    Ok(jd_objective(targets, &mix, &lambdas))
}
