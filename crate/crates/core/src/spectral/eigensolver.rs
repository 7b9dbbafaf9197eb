//! Smallest eigenpairs of the generalized problem (S + P) f = λ M f with S
//! sparse symmetric, P and M diagonal and M positive.
//!
//! Shift-invert block subspace iteration: each sweep applies
//! (S + P + τM)⁻¹ M to an M-orthonormal block (Jacobi-preconditioned CG per
//! column), then performs a Rayleigh–Ritz projection. The shift τ makes the
//! shifted operator positive definite. Optionally the constant vector is
//! deflated in the M inner product, which restricts the problem to
//! functions with zero mean.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{dot, norm, wdot, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverOptions {
    /// Relative residual ‖(S+P)f − λMf‖ / ‖Mf‖ required of every returned pair.
    pub tol: f64,
    /// Cap on subspace sweeps and on CG iterations per solve.
    pub max_iter: usize,
    /// Guard vectors carried beyond the requested count.
    pub guard: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000, guard: 6 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// M-normalized eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

pub struct GeneralizedProblem<'a> {
    pub stiffness: &'a CsrMatrix,
    /// Diagonal of P.
    pub potential: &'a [f64],
    /// Diagonal of M.
    pub mass: &'a [f64],
    pub deflate_constants: bool,
}

impl GeneralizedProblem<'_> {
    fn len(&self) -> usize {
        self.mass.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.stiffness.apply(x);
        for ((y, p), x) in y.iter_mut().zip(self.potential).zip(x) {
            *y += p * x;
        }
        y
    }

    pub fn residual(&self, lambda: f64, f: &[f64]) -> f64 {
        let af = self.apply(f);
        let mf: Vec<f64> = self.mass.iter().zip(f).map(|(m, x)| m * x).collect();
        let r: Vec<f64> = af.iter().zip(&mf).map(|(a, m)| a - lambda * m).collect();
        norm(&r) / norm(&mf)
    }

    fn project_constants(&self, x: &mut [f64]) {
        if !self.deflate_constants {
            return;
        }
        let total: f64 = self.mass.iter().sum();
        let mean = self.mass.iter().zip(x.iter()).map(|(m, v)| m * v).sum::<f64>() / total;
        for v in x.iter_mut() {
            *v -= mean;
        }
    }

    fn shift(&self) -> f64 {
        let diag = self.stiffness.diagonal();
        let scale = diag.iter().sum::<f64>() / self.mass.iter().sum::<f64>();
        let most_negative = self
            .potential
            .iter()
            .zip(self.mass)
            .map(|(p, m)| p / m)
            .fold(0.0f64, f64::min);
        -most_negative + 1e-4 * scale.max(1e-300)
    }
}

/// Preconditioned CG for (S + diag(d)) y = b, started from `y`.
fn conjugate_gradient(
    stiffness: &CsrMatrix,
    d: &[f64],
    b: &[f64],
    y: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let apply = |x: &[f64], out: &mut [f64]| {
        stiffness.mul_vec(x, out);
        for i in 0..n {
            out[i] += d[i] * x[i];
        }
    };
    let inv_diag: Vec<f64> = stiffness.diagonal().iter().zip(d).map(|(s, d)| 1.0 / (s + d)).collect();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        y.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut ay = vec![0.0; n];
    apply(y, &mut ay);
    let mut r: Vec<f64> = b.iter().zip(&ay).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, w)| r * w).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if norm(&r) <= rel_tol * b_norm {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numeric(format!("CG breakdown: pᵀAp = {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            y[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm(&r) <= 1e3 * rel_tol * b_norm {
        Ok(max_iter)
    } else {
        Err(Error::Numeric(format!(
            "CG did not converge in {max_iter} iterations (relative residual {:.3e})",
            norm(&r) / b_norm
        )))
    }
}

/// Modified Gram–Schmidt in the M inner product, applied twice. Columns that
/// collapse are replaced by fresh random vectors.
fn m_orthonormalize(problem: &GeneralizedProblem<'_>, block: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let mass = problem.mass;
    for j in 0..block.len() {
        for attempt in 0..4 {
            problem.project_constants(&mut block[j]);
            let before = wdot(mass, &block[j], &block[j]).sqrt();
            for _ in 0..2 {
                for k in 0..j {
                    let coef = wdot(mass, &block[k], &block[j]);
                    let (head, tail) = block.split_at_mut(j);
                    for (x, q) in tail[0].iter_mut().zip(&head[k]) {
                        *x -= coef * q;
                    }
                }
            }
            let after = wdot(mass, &block[j], &block[j]).sqrt();
            if after > 1e-10 * before && after > 0.0 {
                block[j].iter_mut().for_each(|v| *v /= after);
                break;
            }
            if attempt == 3 {
                break;
            }
            block[j] = (0..problem.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        }
    }
}

/// The `count` smallest eigenpairs, in ascending order.
pub fn smallest_eigenpairs(
    problem: &GeneralizedProblem<'_>,
    count: usize,
    opts: &SolverOptions,
) -> Result<EigenPairs> {
    let n = problem.len();
    let available = if problem.deflate_constants { n.saturating_sub(1) } else { n };
    if count == 0 || count > available {
        return Err(Error::Domain(format!("cannot compute {count} eigenpairs of a size-{n} problem")));
    }
    let width = (count + opts.guard).min(available);
    let tau = problem.shift();
    let shifted: Vec<f64> = problem.potential.iter().zip(problem.mass).map(|(p, m)| p + tau * m).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba5e);
    let mut block: Vec<Vec<f64>> = (0..width).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    m_orthonormalize(problem, &mut block, &mut rng);

    let cg_tol = (opts.tol * 1e-4).max(1e-14);
    let mut values = vec![0.0; width];
    let mut residuals = vec![f64::INFINITY; width];
    for sweep in 1..=opts.max_iter {
        // Rayleigh–Ritz on the M-orthonormal block
        let applied: Vec<Vec<f64>> = block.iter().map(|x| problem.apply(x)).collect();
        let mut h = DMatrix::<f64>::zeros(width, width);
        for i in 0..width {
            for j in 0..=i {
                let v = 0.5 * (dot(&block[i], &applied[j]) + dot(&block[j], &applied[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..width).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&col| {
                    let mut out = vec![0.0; n];
                    for (k, v) in src.iter().enumerate() {
                        let w = eig.eigenvectors[(k, col)];
                        for (o, x) in out.iter_mut().zip(v) {
                            *o += w * x;
                        }
                    }
                    out
                })
                .collect()
        };
        block = rotate(&block);
        let applied = rotate(&applied);
        for (j, &col) in order.iter().enumerate() {
            values[j] = eig.eigenvalues[col];
            let mx: Vec<f64> = problem.mass.iter().zip(&block[j]).map(|(m, x)| m * x).collect();
            let r: Vec<f64> = applied[j].iter().zip(&mx).map(|(a, m)| a - values[j] * m).collect();
            residuals[j] = norm(&r) / norm(&mx);
        }
        let worst = residuals[..count].iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            let mut vectors = block[..count].to_vec();
            for v in &mut vectors {
                problem.project_constants(v);
                let scale = wdot(problem.mass, v, v).sqrt();
                v.iter_mut().for_each(|x| *x /= scale);
            }
            let residuals = vectors.iter().zip(&values).map(|(v, &l)| problem.residual(l, v)).collect();
            return Ok(EigenPairs { values: values[..count].to_vec(), vectors, residuals, iterations: sweep });
        }
        if sweep == opts.max_iter {
            break;
        }
        // inverse iteration step, warm-started at x/(θ+τ)
        for (j, x) in block.iter_mut().enumerate() {
            let rhs: Vec<f64> = problem.mass.iter().zip(x.iter()).map(|(m, v)| m * v).collect();
            let guess = 1.0 / (values[j] + tau).max(1e-300);
            let mut y: Vec<f64> = x.iter().map(|v| v * guess).collect();
            conjugate_gradient(problem.stiffness, &shifted, &rhs, &mut y, cg_tol, opts.max_iter)?;
            *x = y;
        }
        m_orthonormalize(problem, &mut block, &mut rng);
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: residuals[..count].iter().copied().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.extend([(i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)]);
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn cycle_graph_spectrum() {
        // eigenvalues of the cycle Laplacian: 2 − 2cos(2πk/n)
        let n = 40;
        let s = cycle_laplacian(n);
        let mass = vec![1.0; n];
        let zero = vec![0.0; n];
        let problem = GeneralizedProblem { stiffness: &s, potential: &zero, mass: &mass, deflate_constants: true };
        let pairs = smallest_eigenpairs(&problem, 2, &SolverOptions::default()).unwrap();
        let exact = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / n as f64).cos();
        for v in &pairs.values {
            assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
        }
        for (v, r) in pairs.vectors.iter().zip(&pairs.residuals) {
            assert!(*r <= 1e-9);
            assert!(v.iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn potential_and_mass_agree_with_dense_solve() {
        let n = 12;
        let s = cycle_laplacian(n);
        let mass: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let pot: Vec<f64> = (0..n).map(|i| -0.3 + 0.05 * (i * i % 7) as f64).collect();
        let problem = GeneralizedProblem { stiffness: &s, potential: &pot, mass: &mass, deflate_constants: false };
        let pairs = smallest_eigenpairs(&problem, 3, &SolverOptions::default()).unwrap();

        // oracle: dense M^{-1/2}(S+P)M^{-1/2}
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = s.get(i, j) + if i == j { pot[i] } else { 0.0 };
                a[(i, j)] = v / (mass[i] * mass[j]).sqrt();
            }
        }
        let mut dense: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        for (got, want) in pairs.values.iter().zip(&dense) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_impossible_counts() {
        let s = cycle_laplacian(4);
        let mass = vec![1.0; 4];
        let zero = vec![0.0; 4];
        let problem = GeneralizedProblem { stiffness: &s, potential: &zero, mass: &mass, deflate_constants: true };
        assert!(smallest_eigenpairs(&problem, 4, &SolverOptions::default()).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let s = cycle_laplacian(30);
        let mass = vec![1.0; 30];
        let zero = vec![0.0; 30];
        let problem = GeneralizedProblem { stiffness: &s, potential: &zero, mass: &mass, deflate_constants: true };
        let opts = SolverOptions { tol: 1e-9, max_iter: 1, guard: 2 };
        assert!(matches!(smallest_eigenpairs(&problem, 1, &opts), Err(Error::NotConverged { .. })));
    }
}
