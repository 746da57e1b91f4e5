//! First and second directional derivatives of `g(C) = f(det C)` on the
//! positive definite cone, in closed form and by finite differences.
//!
//! With `s = det C`:
//!
//! ```text
//! Dg(C).H       = f'(s) s <C^-1, H>
//! D^2 g(C).(H,H) = s { [f''(s) s + f'(s)] <C^-1, H>^2 - f'(s) <H C^-1, C^-1 H> }
//! ```

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::linalg::{frob_inner, Matrix, PosDefMatrix, SymMatrix};
use crate::scalar::{lit, Real};

/// Maximum number of step halvings in the finite-difference oracles.
pub const MAX_STEP_HALVINGS: usize = 40;

fn check_dims<T: Real>(c: &PosDefMatrix<T>, h: &SymMatrix<T>) -> Result<()> {
    if c.n() != h.n() {
        return Err(Error::Dimension(format!(
            "C is {0}x{0} but H is {1}x{1}",
            c.n(),
            h.n()
        )));
    }
    Ok(())
}

pub fn g_value<T: Real>(f: &ScalarFunction, c: &PosDefMatrix<T>) -> Result<T> {
    f.eval(c.det())
}

/// `Dg(C).H = f'(det C) det C <C^-1, H>`.
pub fn g_grad_form<T: Real>(
    f: &ScalarFunction,
    c: &PosDefMatrix<T>,
    h: &SymMatrix<T>,
) -> Result<T> {
    check_dims(c, h)?;
    let s = c.det();
    let j = f.eval_jet(s)?;
    Ok(j.d1 * s * frob_inner(c.inverse(), h)?)
}

/// `D^2 g(C).(H,H)`, assembled term by term from the chain rule:
/// `f'' s^2 <C^-1,H>^2 + f' s <C^-1,H>^2 + f' s <-C^-1 H C^-1, H>`.
pub fn g_hess_form<T: Real>(
    f: &ScalarFunction,
    c: &PosDefMatrix<T>,
    h: &SymMatrix<T>,
) -> Result<T> {
    check_dims(c, h)?;
    let s = c.det();
    let j = f.eval_jet(s)?;
    let cinv = c.inverse().as_matrix();
    let sigma = frob_inner(cinv, h)?;
    let cinv_h_cinv = &(cinv * h.as_matrix()) * cinv;
    let tau = frob_inner(&cinv_h_cinv, h)?;
    Ok(j.d2 * s * s * sigma * sigma + j.d1 * s * sigma * sigma - j.d1 * s * tau)
}

/// `[f''(s) s + f'(s)] <C^-1,H>^2 - f'(s) <H C^-1, C^-1 H>`, i.e. the second
/// derivative divided by `det C`.
pub fn condition_lhs_full<T: Real>(
    f: &ScalarFunction,
    c: &PosDefMatrix<T>,
    h: &SymMatrix<T>,
) -> Result<T> {
    check_dims(c, h)?;
    let s = c.det();
    let j = f.eval_jet(s)?;
    let cinv = c.inverse().as_matrix();
    let sigma = frob_inner(cinv, h)?;
    let hc = h.as_matrix() * cinv;
    let ch = cinv * h.as_matrix();
    let tau = frob_inner(&hc, &ch)?;
    Ok((j.d2 * s + j.d1) * sigma * sigma - j.d1 * tau)
}

/// The same condition for `C^-1 = diag(dvec)`, normalized by `s = det C`:
/// `(f''(s) + f'(s)/s) <D^-1,H>^2 - (f'(s)/s) <D^-1 H, H D^-1>`
/// with `1/s = d_1 ... d_n`.
pub fn condition_lhs_diag<T: Real>(f: &ScalarFunction, dvec: &[T], h: &SymMatrix<T>) -> Result<T> {
    if dvec.len() != h.n() {
        return Err(Error::Dimension(format!(
            "{} diagonal entries for a {1}x{1} H",
            dvec.len(),
            h.n()
        )));
    }
    if let Some(bad) = dvec.iter().find(|d| !(**d > T::zero()) || !d.is_finite()) {
        return Err(Error::Parameter(format!(
            "diagonal entries must be positive, got {bad}"
        )));
    }
    let s = dvec.iter().fold(T::one(), |acc, &d| acc * d).recip();
    let j = f.eval_jet(s)?;
    let dinv = Matrix::from_diag(dvec);
    let sigma = frob_inner(&dinv, h)?;
    let dh = &dinv * h.as_matrix();
    let hd = h.as_matrix() * &dinv;
    let tau = frob_inner(&dh, &hd)?;
    let fp_over_s = j.d1 / s;
    Ok((j.d2 + fp_over_s) * sigma * sigma - fp_over_s * tau)
}

/// Finite-difference estimate together with the step that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdEstimate<T> {
    pub value: T,
    pub h_used: T,
}

/// `||C^(-1/2) H C^(-1/2)||_F`, the size of `H` measured against `C`.
pub fn relative_direction_norm<T: Real>(c: &PosDefMatrix<T>, h: &SymMatrix<T>) -> T {
    let root_inv = c.eigen().map_spectrum(|l| l.sqrt().recip());
    h.congruence(root_inv.as_matrix()).frobenius_norm()
}

fn scaled_step<T: Real>(c: &PosDefMatrix<T>, h: &SymMatrix<T>, base: T, factor: f64) -> T {
    let w = relative_direction_norm(c, h);
    if w > T::zero() && w.is_finite() {
        lit::<T>(factor) * base / w
    } else {
        base * (T::one() + c.frobenius_norm())
    }
}

/// `4 eps^(1/4) / ||C^(-1/2) H C^(-1/2)||_F`, so that `C +- h H` moves by
/// a fixed fraction of the scale of `C` however ill-conditioned it is.
pub fn default_second_difference_step<T: Real>(c: &PosDefMatrix<T>, h: &SymMatrix<T>) -> T {
    scaled_step(c, h, T::epsilon().powf(lit(0.25)), 4.0)
}

/// `2 eps^(1/3) / ||C^(-1/2) H C^(-1/2)||_F`.
pub fn default_first_difference_step<T: Real>(c: &PosDefMatrix<T>, h: &SymMatrix<T>) -> T {
    scaled_step(c, h, T::epsilon().powf(lit(1.0 / 3.0)), 2.0)
}

/// Evaluates `g(C + t H)` for each `t` in `offsets(step)`, halving the step
/// until every point is positive definite and inside the domain of `f`.
fn with_admissible_step<T: Real, const K: usize>(
    f: &ScalarFunction,
    c: &PosDefMatrix<T>,
    h: &SymMatrix<T>,
    step: T,
    offsets: impl Fn(T) -> [T; K],
) -> Result<([T; K], T)> {
    check_dims(c, h)?;
    if !(step > T::zero()) || !step.is_finite() {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut step = step;
    for _ in 0..=MAX_STEP_HALVINGS {
        let values: Result<Vec<T>> = offsets(step)
            .iter()
            .map(|&t| {
                let point = PosDefMatrix::new(c.sym().add_scaled(h, t))?;
                g_value(f, &point)
            })
            .collect();
        if let Ok(values) = values {
            let mut out = [T::zero(); K];
            out.copy_from_slice(&values);
            return Ok((out, step));
        }
        step = step * lit(0.5);
    }
    Err(Error::DegenerateDirection(format!(
        "C +- h H left the admissible set for every step down to {step}"
    )))
}

/// `(g(C + hH) - 2 g(C) + g(C - hH)) / h^2`.
pub fn fd_second_directional<T: Real>(
    f: &ScalarFunction,
    c: &PosDefMatrix<T>,
    h: &SymMatrix<T>,
    step: T,
) -> Result<FdEstimate<T>> {
    let g0 = g_value(f, c)?;
    let ([plus, minus], h_used) = with_admissible_step(f, c, h, step, |t| [t, -t])?;
    let value = (plus - g0 - g0 + minus) / (h_used * h_used);
    Ok(FdEstimate { value, h_used })
}

/// `(g(C + hH) - g(C - hH)) / (2h)`.
pub fn fd_first_directional<T: Real>(
    f: &ScalarFunction,
    c: &PosDefMatrix<T>,
    h: &SymMatrix<T>,
    step: T,
) -> Result<FdEstimate<T>> {
    let ([plus, minus], h_used) = with_admissible_step(f, c, h, step, |t| [t, -t])?;
    Ok(FdEstimate {
        value: (plus - minus) / (lit::<T>(2.0) * h_used),
        h_used,
    })
}

/// A point `(C, H)` with the analytic second derivative and its
/// finite-difference estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadFormSample<T> {
    pub c: PosDefMatrix<T>,
    pub h: SymMatrix<T>,
    pub analytic: T,
    pub fd: T,
    pub h_used: T,
}

impl<T: Real> QuadFormSample<T> {
    pub fn evaluate(f: &ScalarFunction, c: PosDefMatrix<T>, h: SymMatrix<T>) -> Result<Self> {
        let analytic = g_hess_form(f, &c, &h)?;
        let step = default_second_difference_step(&c, &h);
        let FdEstimate { value: fd, h_used } = fd_second_directional(f, &c, &h, step)?;
        Ok(Self {
            c,
            h,
            analytic,
            fd,
            h_used,
        })
    }

    /// `|analytic - fd| / max(1, |analytic|)`.
    pub fn discrepancy(&self) -> T {
        (self.analytic - self.fd).abs() / T::one().max(self.analytic.abs())
    }

    pub fn agrees(&self, tol: T) -> bool {
        self.discrepancy() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::family_f_a;

    fn f(src: &str) -> ScalarFunction {
        ScalarFunction::parse(src).unwrap()
    }

    fn diag(d: &[f64]) -> PosDefMatrix<f64> {
        PosDefMatrix::from_diag(d).unwrap()
    }

    #[test]
    fn g_value_examples() {
        assert_eq!(
            g_value(&f("-ln(s)"), &PosDefMatrix::<f64>::identity(3)).unwrap(),
            0.0
        );
        assert_eq!(
            g_value(&f("-ln(s)"), &diag(&[1.0, 1.0, 2.0])).unwrap(),
            -(2f64.ln())
        );
        assert_eq!(g_value(&f("s"), &diag(&[2.0, 3.0, 0.5])).unwrap(), 3.0);
    }

    #[test]
    fn gradient_examples() {
        for n in 1..5 {
            let v = g_grad_form(
                &f("-ln(s)"),
                &PosDefMatrix::<f64>::identity(n),
                &SymMatrix::identity(n),
            )
            .unwrap();
            assert_eq!(v, -(n as f64));
        }
        let zero = g_grad_form(&f("s^2"), &diag(&[1.0, 2.0]), &SymMatrix::zeros(2)).unwrap();
        assert_eq!(zero, 0.0);
        let v = g_grad_form(
            &f("s"),
            &PosDefMatrix::<f64>::identity(3),
            &SymMatrix::from_diag(&[1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn hessian_examples() {
        let v = g_hess_form(
            &f("-ln(s)"),
            &PosDefMatrix::<f64>::identity(2),
            &SymMatrix::identity(2),
        )
        .unwrap();
        assert_eq!(v, 2.0);
        let v = g_hess_form(
            &f("s"),
            &diag(&[1.0, 1.0, 2.0]),
            &SymMatrix::from_diag(&[1.0, -1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(v, -4.0);
        // limiting family member along the extremal direction
        let limit: ScalarFunction = family_f_a(0.0, -3.0, 3.0, 3).unwrap().into();
        for &s in &[0.2f64, 1.0, 8.0] {
            let c = PosDefMatrix::new(SymMatrix::identity(3).scaled(s.cbrt())).unwrap();
            let h = SymMatrix::identity(3).scaled(1.7 / s.cbrt());
            let v = g_hess_form(&limit, &c, &h).unwrap();
            assert!(v.abs() < 1e-13, "s = {s}: {v}");
            let fd = fd_second_directional(&limit, &c, &h, default_second_difference_step(&c, &h))
                .unwrap();
            assert!(fd.value.abs() < 1e-5);
        }
    }

    #[test]
    fn fd_second_examples() {
        let est = fd_second_directional(
            &f("-ln(s)"),
            &PosDefMatrix::<f64>::identity(2),
            &SymMatrix::identity(2),
            1e-4,
        )
        .unwrap();
        assert!((est.value - 2.0).abs() < 1e-6);
        assert_eq!(est.h_used, 1e-4);

        let c = random_c(3);
        let est =
            fd_second_directional(&f("s^3 + exp(-s)"), &c, &SymMatrix::zeros(3), 1e-3).unwrap();
        assert_eq!(est.value, 0.0);

        let c = diag(&[1.0, 1.0, 2.0]);
        let h = SymMatrix::from_diag(&[1.0, -1.0, 0.0]);
        let step = default_second_difference_step(&c, &h);
        let est = fd_second_directional(&f("s"), &c, &h, step).unwrap();
        assert!((est.value + 4.0).abs() <= 1e-5 * 4.0);
    }

    fn random_c(n: usize) -> PosDefMatrix<f64> {
        crate::linalg::random_posdef(n, (0.1f64.ln(), 10f64.ln()), 5).unwrap()
    }

    #[test]
    fn fd_step_halves_until_admissible() {
        let c = diag(&[1.0, 1.0]);
        let h = SymMatrix::identity(2);
        let est = fd_second_directional(&f("-ln(s)"), &c, &h, 4.0).unwrap();
        assert_eq!(est.h_used, 0.5);
        // f undefined for s >= 1.5: ln(1.5 - s)
        let est = fd_first_directional(&f("ln(1.5 - s)"), &c, &h, 1.0).unwrap();
        assert!(est.h_used < 0.25);
    }

    #[test]
    fn fd_degenerate_direction() {
        // g is undefined for det C < 1, so the backward point never exists.
        let c = PosDefMatrix::<f64>::identity(2);
        let h = SymMatrix::identity(2);
        let err = fd_second_directional(&f("ln(s - 1 + 1e-300)"), &c, &h, 0.1);
        assert!(matches!(err, Err(Error::DegenerateDirection(_))), "{err:?}");
    }

    #[test]
    fn condition_lhs_examples() {
        let i3 = PosDefMatrix::<f64>::identity(3);
        let v = condition_lhs_full(&f("-ln(s)"), &i3, &SymMatrix::identity(3)).unwrap();
        assert_eq!(v, 3.0);
        let v = condition_lhs_full(
            &f("s"),
            &diag(&[1.0, 1.0, 2.0]),
            &SymMatrix::from_diag(&[1.0, -1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(v, -2.0);
        assert_eq!(
            condition_lhs_full(&f("s^2"), &i3, &SymMatrix::zeros(3)).unwrap(),
            0.0
        );

        let v = condition_lhs_diag(&f("-ln(s)"), &[1.0; 3], &SymMatrix::identity(3)).unwrap();
        assert_eq!(v, 3.0);
        let v = condition_lhs_diag(&f("-s"), &[1.0; 3], &SymMatrix::identity(3)).unwrap();
        assert_eq!(v, -6.0);
        assert_eq!(
            condition_lhs_diag(&f("s"), &[0.5, 2.0], &SymMatrix::zeros(2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn condition_lhs_diag_errors() {
        let h = SymMatrix::<f64>::identity(2);
        assert!(matches!(
            condition_lhs_diag(&f("s"), &[1.0, 0.0], &h),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            condition_lhs_diag(&f("s"), &[1.0, -2.0], &h),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            condition_lhs_diag(&f("s"), &[1.0], &h),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let c = PosDefMatrix::<f64>::identity(3);
        let h = SymMatrix::identity(2);
        assert!(matches!(
            g_hess_form(&f("s"), &c, &h),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            g_grad_form(&f("s"), &c, &h),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            condition_lhs_full(&f("s"), &c, &h),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn scalar_domain_errors_propagate() {
        let c = diag(&[1.0, 4.0]);
        let h = SymMatrix::identity(2);
        assert!(matches!(
            g_hess_form(&f("ln(2 - s)"), &c, &h),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn single_precision_hessian() {
        let c = PosDefMatrix::<f32>::identity(2);
        let h = SymMatrix::identity(2);
        let v = g_hess_form(&f("-ln(s)"), &c, &h).unwrap();
        assert_eq!(v, 2.0f32);
    }
}
