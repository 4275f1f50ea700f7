//! Dense linear-algebra kernels for discrete-time control: Riccati and
//! Lyapunov equation solvers, LQR gain synthesis, spectral radius.
//!
//! Everything here operates on `nalgebra::DMatrix<f64>`. Plant dimensions in
//! this crate are small (n <= 12), so simple dense algorithms are used
//! throughout: fixed-point value iteration for the Riccati equation and the
//! n^2 x n^2 Kronecker system for the Lyapunov equation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DARE_DEFAULT_TOL: f64 = 1e-10;
pub const DARE_DEFAULT_MAX_ITER: usize = 100_000;

/// Solution of a discrete algebraic Riccati equation together with the
/// associated optimal feedback gain.
#[derive(Debug, Clone)]
pub struct DareSolution {
    /// Symmetric positive-semidefinite cost-to-go matrix (n x n).
    pub p: DMatrix<f64>,
    /// Feedback gain K = -(R + B'PB)^{-1} B'PA, so that `u = K x` is the
    /// control law (the leading minus sign is included).
    pub k: DMatrix<f64>,
    /// Frobenius norm of the fixed-point residual at acceptance.
    pub residual: f64,
    /// Number of value-iteration sweeps performed.
    pub iterations: usize,
}

fn check_square(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// One application of the Riccati right-hand side
/// `A'PA - A'PB (R + B'PB)^{-1} B'PA + Q`.
fn riccati_rhs(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let at_p = a.transpose() * p;
    let bt_p_a = b.transpose() * p * a;
    let gram = r + b.transpose() * p * b;
    // `gram` is symmetric positive definite whenever R > 0 and P >= 0.
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned("R + B'PB is numerically singular".into()))?;
    let gain_term = chol.solve(&bt_p_a);
    let next = &at_p * a - (&at_p * b) * gain_term + q;
    // Symmetrize to keep rounding drift from accumulating over many sweeps.
    Ok(0.5 * (&next + next.transpose()))
}

/// Solves the discrete algebraic Riccati equation
/// `P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q`
/// by fixed-point value iteration started from `P0 = Q`.
///
/// Returns the stabilizing solution together with the LQR gain. Fails with
/// [`Error::NonConvergence`] if the residual is still above `tol` after
/// `max_iter` sweeps (e.g. when (A, B) is not stabilizable).
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution> {
    check_square(a, "A")?;
    check_square(q, "Q")?;
    check_square(r, "R")?;
    let n = a.nrows();
    let m = b.ncols();
    if b.nrows() != n || q.nrows() != n || r.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "inconsistent DARE dimensions: A {n}x{n}, B {}x{m}, Q {}x{}, R {}x{}",
            b.nrows(),
            q.nrows(),
            q.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }

    let mut p = q.clone();
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let next = riccati_rhs(a, b, q, r, &p)?;
        residual = (&next - &p).norm();
        p = next;
        if !residual.is_finite() {
            return Err(Error::NonConvergence {
                residual,
                iterations: iter,
            });
        }
        if residual <= tol {
            let gram = r + b.transpose() * &p * b;
            let chol = gram
                .cholesky()
                .ok_or_else(|| Error::IllConditioned("R + B'PB is numerically singular".into()))?;
            let k = -chol.solve(&(b.transpose() * &p * a));
            return Ok(DareSolution {
                p,
                k,
                residual,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        residual,
        iterations: max_iter,
    })
}

/// Optimal LQR feedback gain for `(A, B, Q, R)` with default tolerances.
/// The returned gain includes the minus sign: `u = K x`.
pub fn dlqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    Ok(solve_dare(a, b, q, r, DARE_DEFAULT_TOL, DARE_DEFAULT_MAX_ITER)?.k)
}

/// Solves the discrete Lyapunov equation `A'PA - P + Q = 0` for symmetric P
/// via the vectorized n^2 x n^2 linear system `(I - A'⊗A') vec(P) = vec(Q)`.
///
/// Requires `A` Schur-stable; fails with [`Error::UnstableMatrix`] otherwise.
pub fn solve_dlyap(a: &DMatrix<f64>, q_rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a, "A")?;
    check_square(q_rhs, "Q")?;
    let n = a.nrows();
    if q_rhs.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n} but Q is {}x{}",
            q_rhs.nrows(),
            q_rhs.ncols()
        )));
    }
    let rho = spectral_radius(a);
    if rho >= 1.0 - 1e-9 {
        return Err(Error::UnstableMatrix { rho });
    }

    // vec(A'PA) = (A'⊗A') vec(P) with column-major vec.
    let at = a.transpose();
    let kron = at.kronecker(&at);
    let system = DMatrix::<f64>::identity(n * n, n * n) - kron;
    let rhs = DVector::from_column_slice(q_rhs.as_slice());
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditioned("Lyapunov Kronecker system is singular".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok(0.5 * (&p + p.transpose()))
}

/// Largest eigenvalue magnitude of a square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), a.ncols(), "spectral_radius needs a square matrix");
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// Frobenius norm of the Riccati fixed-point residual for a candidate P.
pub fn dare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64> {
    Ok((riccati_rhs(a, b, q, r, p)? - p).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle for the scalar DARE: reduces the fixed point to the
    /// quadratic `p^2 + p (r - a^2 r - q) - q r = 0` in the b=1 case and
    /// solves it by bisection, never touching the implementation path.
    fn scalar_dare_oracle(a: f64, q: f64, r: f64) -> f64 {
        // p = a^2 p - a^2 p^2 / (r + p) + q  =>  f(p) = 0 with
        let f = |p: f64| (p * (r + p)) - a * a * p * (r + p) + a * a * p * p - q * (r + p);
        let (mut lo, mut hi) = (0.0, 1.0);
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Fixed-point iteration oracle run to a large, fixed sweep count; used to
    /// cross-check accepted solutions on the benchmark systems.
    fn fixed_point_oracle(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        q: &DMatrix<f64>,
        r: &DMatrix<f64>,
        sweeps: usize,
    ) -> DMatrix<f64> {
        let mut p = q.clone();
        for _ in 0..sweeps {
            let gram = r + b.transpose() * &p * b;
            let inv = gram.try_inverse().unwrap();
            let next = a.transpose() * &p * a
                - a.transpose() * &p * b * &inv * (b.transpose() * &p * a)
                + q;
            p = 0.5 * (&next + next.transpose());
        }
        p
    }

    fn laplacian_a() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[1.01, 0.01, 0.0, 0.01, 1.01, 0.01, 0.0, 0.01, 1.01],
        )
    }

    #[test]
    fn dare_zero_dynamics_collapses_to_q() {
        let a = DMatrix::from_element(1, 1, 0.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let r = DMatrix::from_element(1, 1, 1.0);
        let sol = solve_dare(&a, &b, &q, &r, 1e-12, 100).unwrap();
        assert_relative_eq!(sol.p[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.k[(0, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dare_scalar_matches_root_finder_oracle() {
        let a = DMatrix::from_element(1, 1, 0.5);
        let b = DMatrix::from_element(1, 1, 1.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let r = DMatrix::from_element(1, 1, 1.0);
        let sol = solve_dare(&a, &b, &q, &r, 1e-12, 10_000).unwrap();

        let p_oracle = scalar_dare_oracle(0.5, 1.0, 1.0);
        // Root of p^2 - 0.25 p - 1 = 0.
        assert_relative_eq!(p_oracle, (0.25 + (0.0625f64 + 4.0).sqrt()) / 2.0, epsilon = 1e-10);
        assert_relative_eq!(sol.p[(0, 0)], p_oracle, epsilon = 1e-8);
        let k_expected = -0.5 * p_oracle / (1.0 + p_oracle);
        assert_relative_eq!(sol.k[(0, 0)], k_expected, epsilon = 1e-8);
        assert_relative_eq!(sol.k[(0, 0)], -0.2656, epsilon = 1e-4);
    }

    #[test]
    fn dare_laplacian_residual_and_stability() {
        let a = laplacian_a();
        let b = DMatrix::identity(3, 3);
        let q = DMatrix::identity(3, 3) * 10.0;
        let r = DMatrix::identity(3, 3);
        let sol = solve_dare(&a, &b, &q, &r, 1e-10, 100_000).unwrap();
        assert!(sol.residual <= 1e-8, "residual = {}", sol.residual);

        let closed = &a + &b * &sol.k;
        assert!(spectral_radius(&closed) < 1.0);

        let p_oracle = fixed_point_oracle(&a, &b, &q, &r, 10_000);
        assert!((&sol.p - &p_oracle).norm() < 1e-8);
        // Symmetry of the accepted solution.
        assert!((&sol.p - sol.p.transpose()).norm() < 1e-10);
    }

    #[test]
    fn dare_gain_consistent_with_p() {
        let a = laplacian_a();
        let b = DMatrix::identity(3, 3);
        let q = DMatrix::identity(3, 3) * 10.0;
        let r = DMatrix::identity(3, 3);
        let sol = solve_dare(&a, &b, &q, &r, 1e-10, 100_000).unwrap();
        let gram = &r + b.transpose() * &sol.p * &b;
        let k_explicit = -gram.try_inverse().unwrap() * b.transpose() * &sol.p * &a;
        assert!((&sol.k - k_explicit).norm() < 1e-10);
    }

    #[test]
    fn dare_unstabilizable_reports_nonconvergence() {
        // Unstable mode with no input authority.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        let err = solve_dare(&a, &b, &q, &r, 1e-10, 500).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn dlqr_zero_dynamics() {
        let a = DMatrix::from_element(1, 1, 0.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let r = DMatrix::from_element(1, 1, 1.0);
        let k = dlqr(&a, &b, &q, &r).unwrap();
        assert_relative_eq!(k[(0, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dlyap_trivial_cases() {
        let a = DMatrix::from_element(1, 1, 0.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let p = solve_dlyap(&a, &q).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-12);

        let a = DMatrix::from_element(1, 1, 0.5);
        let p = solve_dlyap(&a, &q).unwrap();
        assert_relative_eq!(p[(0, 0)], 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn dlyap_residual_on_reference_closed_loop() {
        // A_m for the unstable-init Laplacian setup: (1 - p/(1+p)) I with
        // p the scalar dare(1, 1, 10, 1) solution.
        let p_scalar = (10.0 + 140.0f64.sqrt()) / 2.0;
        let a_m = DMatrix::<f64>::identity(3, 3) * (1.0 - p_scalar / (1.0 + p_scalar));
        let q = DMatrix::<f64>::identity(3, 3);
        let p = solve_dlyap(&a_m, &q).unwrap();
        let residual = (a_m.transpose() * &p * &a_m - &p + &q).norm();
        assert!(residual <= 1e-10, "residual = {residual}");
        assert!((&p - p.transpose()).norm() < 1e-12);
        // PD when Q is PD.
        assert!(p.clone().cholesky().is_some());
    }

    #[test]
    fn dlyap_rejects_unstable_matrix() {
        let a = DMatrix::<f64>::identity(2, 2);
        let q = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            solve_dlyap(&a, &q).unwrap_err(),
            Error::UnstableMatrix { .. }
        ));
    }

    #[test]
    fn spectral_radius_known_values() {
        assert_relative_eq!(spectral_radius(&DMatrix::identity(3, 3)), 1.0, epsilon = 1e-8);
        let d = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, -0.9]);
        assert_relative_eq!(spectral_radius(&d), 0.9, epsilon = 1e-8);
    }

    #[test]
    fn spectral_radius_laplacian_matches_char_poly_oracle() {
        // Independent oracle: for the symmetric tridiagonal [d, o; o, d, o; 0, o, d]
        // the characteristic polynomial factors give eigenvalues
        // d, d ± sqrt(2) o. Find the largest root by bisection on the
        // characteristic polynomial rather than trusting the formula.
        let (d, o) = (1.01, 0.01);
        let charpoly = |x: f64| {
            let t = d - x;
            t * t * t - 2.0 * o * o * t
        };
        let (mut lo, mut hi) = (d, d + 1.0);
        assert!(charpoly(lo) >= 0.0 || charpoly(lo) <= 0.0);
        // Largest root lies in (d, d + 2o]; bisect on sign change.
        let f_lo = charpoly(lo + 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if charpoly(mid).signum() == f_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert_relative_eq!(oracle, d + 2.0f64.sqrt() * o, epsilon = 1e-9);

        let rho = spectral_radius(&laplacian_a());
        assert_relative_eq!(rho, oracle, epsilon = 1e-8);
        assert!(rho > 1.0, "Laplacian benchmark is marginally unstable");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn stable_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
            proptest::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
                let m = DMatrix::from_row_slice(n, n, &v);
                let rho = spectral_radius(&m);
                if rho > 1e-6 {
                    m * (0.9 / rho.max(0.9))
                } else {
                    m
                }
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn dlyap_solution_satisfies_equation(a in stable_matrix(3)) {
                let q = DMatrix::<f64>::identity(3, 3);
                let p = solve_dlyap(&a, &q).unwrap();
                let residual = (a.transpose() * &p * &a - &p + &q).norm();
                prop_assert!(residual < 1e-9);
                prop_assert!((&p - p.transpose()).norm() < 1e-10);
            }

            #[test]
            fn accepted_dare_solutions_close_the_loop(a in stable_matrix(2)) {
                // Shift to make some samples unstable while keeping (A, B=I) stabilizable.
                let a = a * 1.4;
                let b = DMatrix::<f64>::identity(2, 2);
                let q = DMatrix::<f64>::identity(2, 2) * 10.0;
                let r = DMatrix::<f64>::identity(2, 2);
                let sol = solve_dare(&a, &b, &q, &r, 1e-10, 100_000).unwrap();
                prop_assert!(sol.residual <= 1e-10);
                prop_assert!(spectral_radius(&(&a + &b * &sol.k)) < 1.0);
            }
        }
    }
}
