//! The scalar function `f : (0, inf) -> R` composed with the determinant.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet2;
use crate::scalar::{lit, Real};

/// Distance from `1/n` under which `FamilyA` takes its logarithmic branch.
pub const FAMILY_BRANCH_TOL: f64 = 1e-12;

/// Closed-form function families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinFamily {
    /// `d + c s^p`
    PowerLaw { c: f64, p: f64, d: f64 },
    /// `d + c ln s`
    LogFamily { c: f64, d: f64 },
    /// Three-branch family with `c <= 0`, `a >= 0`:
    /// `d + c s^(1/n - a)` for `a < 1/n`, `d + c ln s` at `a = 1/n`,
    /// `d - c s^(1/n - a)` for `a > 1/n`.
    FamilyA { a: f64, c: f64, d: f64, n: usize },
    /// Volumetric part `-mu ln s` of the compressible Neo-Hooke energy.
    NeoHookeVolumetric { mu: f64 },
}

/// Builds the `FamilyA` member for `(a, c, d)` in dimension `n`.
pub fn family_f_a(a: f64, c: f64, d: f64, n: usize) -> Result<BuiltinFamily> {
    let f = BuiltinFamily::FamilyA { a, c, d, n };
    f.validate()?;
    Ok(f)
}

pub fn neo_hooke_volumetric(mu: f64) -> Result<BuiltinFamily> {
    let f = BuiltinFamily::NeoHookeVolumetric { mu };
    f.validate()?;
    Ok(f)
}

impl BuiltinFamily {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            Self::PowerLaw { c, p, d } if !finite(&[c, p, d]) => Err(Error::Parameter(
                "power law parameters must be finite".into(),
            )),
            Self::LogFamily { c, d } if !finite(&[c, d]) => Err(Error::Parameter(
                "log family parameters must be finite".into(),
            )),
            Self::FamilyA { a, c, d, n } => {
                if !finite(&[a, c, d]) {
                    Err(Error::Parameter("family parameters must be finite".into()))
                } else if a < 0.0 {
                    Err(Error::Parameter(format!(
                        "family requires a >= 0, got a = {a}"
                    )))
                } else if c > 0.0 {
                    Err(Error::Parameter(format!(
                        "family requires c <= 0, got c = {c}"
                    )))
                } else if n == 0 {
                    Err(Error::Parameter("family requires n >= 1".into()))
                } else {
                    Ok(())
                }
            }
            Self::NeoHookeVolumetric { mu } if !(mu > 0.0 && mu.is_finite()) => Err(
                Error::Parameter(format!("Neo-Hooke requires mu > 0, got mu = {mu}")),
            ),
            _ => Ok(()),
        }
    }

    /// Rewrites the member as a plain `PowerLaw` or `LogFamily`.
    pub fn canonical(&self) -> BuiltinFamily {
        match *self {
            Self::FamilyA { a, c, d, n } => {
                let inv_n = 1.0 / n as f64;
                if (a - inv_n).abs() <= FAMILY_BRANCH_TOL {
                    Self::LogFamily { c, d }
                } else if a < inv_n {
                    Self::PowerLaw { c, p: inv_n - a, d }
                } else {
                    Self::PowerLaw {
                        c: -c,
                        p: inv_n - a,
                        d,
                    }
                }
            }
            Self::NeoHookeVolumetric { mu } => Self::LogFamily { c: -mu, d: 0.0 },
            other => other,
        }
    }

    pub fn eval_jet<T: Real>(&self, s: T) -> Result<Jet2<T>> {
        self.validate()?;
        let s_f64 = s.to_f64().unwrap_or(f64::NAN);
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::Domain {
                s: s_f64,
                message: "functions are defined for s > 0 only".into(),
            });
        }
        let j = match self.canonical() {
            Self::PowerLaw { c, p, d } => {
                let (c, p, d) = (lit::<T>(c), lit::<T>(p), lit::<T>(d));
                let one = T::one();
                if c == T::zero() || p == T::zero() {
                    Jet2::constant(d + if p == T::zero() { c } else { T::zero() })
                } else {
                    Jet2::new(
                        d + c * s.powf(p),
                        c * p * s.powf(p - one),
                        c * p * (p - one) * s.powf(p - lit(2.0)),
                    )
                }
            }
            Self::LogFamily { c, d } => {
                let (c, d) = (lit::<T>(c), lit::<T>(d));
                let inv = s.recip();
                Jet2::new(d + c * s.ln(), c * inv, -c * inv * inv)
            }
            _ => unreachable!("canonical form is a power law or a log family"),
        };
        if !j.is_finite() {
            return Err(Error::Domain {
                s: s_f64,
                message: "non-finite result".into(),
            });
        }
        Ok(j)
    }

    /// Equivalent expression tree, evaluated through generic jet arithmetic.
    pub fn to_expr(&self) -> Expr {
        use Expr::*;
        let k = |x: f64| Box::new(Constant(x));
        match self.canonical() {
            Self::PowerLaw { c, p, d } => Add(
                k(d),
                Box::new(Mul(k(c), Box::new(Pow(Box::new(Variable), k(p))))),
            ),
            Self::LogFamily { c, d } => {
                Add(k(d), Box::new(Mul(k(c), Box::new(Ln(Box::new(Variable))))))
            }
            _ => unreachable!(),
        }
    }

    /// Closed-form decision of the differential inequality
    /// `f'' + (n-1)/(n s) f' >= 0`, `f' <= 0` on all of `s > 0`.
    ///
    /// For `d + c s^p` the left-hand side is `c p s^(p-2) (p - 1/n)` and
    /// `f' = c p s^(p-1)`; for `d + c ln s` it is `-c / (n s^2)` and `c / s`.
    /// When `n = 1` only `f'' >= 0` is required.
    pub fn analytic_convexity(&self, n: usize) -> AnalyticVerdict {
        let inv_n = 1.0 / n.max(1) as f64;
        let (convex, reason) = match self.canonical() {
            Self::PowerLaw { c, p, d: _ } => {
                let cp = c * p;
                if cp == 0.0 {
                    (true, "constant function".to_string())
                } else if n == 1 {
                    let ok = cp * (p - 1.0) >= 0.0;
                    (
                        ok,
                        format!(
                            "n = 1: f'' = c p (p - 1) s^(p-2) has sign of {}",
                            cp * (p - 1.0)
                        ),
                    )
                } else if cp > 0.0 {
                    (false, format!("f' = c p s^(p-1) > 0 since c p = {cp} > 0"))
                } else if p <= inv_n {
                    (true, format!("c p = {cp} < 0 and p = {p} <= 1/n"))
                } else {
                    (
                        false,
                        format!("c p < 0 but p = {p} > 1/n, so c p (p - 1/n) < 0"),
                    )
                }
            }
            Self::LogFamily { c, d: _ } => {
                if c <= 0.0 {
                    (true, format!("c = {c} <= 0"))
                } else {
                    (false, format!("c = {c} > 0"))
                }
            }
            _ => unreachable!(),
        };
        AnalyticVerdict { convex, reason }
    }
}

impl fmt::Display for BuiltinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::PowerLaw { c, p, d } => write!(f, "{d} + {c}*s^{p}"),
            Self::LogFamily { c, d } => write!(f, "{d} + {c}*ln(s)"),
            Self::FamilyA { a, c, d, n } => write!(f, "f_a(a={a}, c={c}, d={d}, n={n})"),
            Self::NeoHookeVolumetric { mu } => write!(f, "-{mu}*ln(s)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticVerdict {
    pub convex: bool,
    pub reason: String,
}

/// A twice differentiable `f` given either as an expression or a family.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFunction {
    Expr { source: String, expr: Expr },
    Builtin(BuiltinFamily),
}

impl ScalarFunction {
    pub fn parse(source: &str) -> Result<Self> {
        Ok(Self::Expr {
            source: source.to_string(),
            expr: Expr::parse(source)?,
        })
    }

    pub fn eval_jet<T: Real>(&self, s: T) -> Result<Jet2<T>> {
        match self {
            Self::Expr { expr, .. } => expr.eval_jet(s),
            Self::Builtin(b) => b.eval_jet(s),
        }
    }

    pub fn eval<T: Real>(&self, s: T) -> Result<T> {
        match self {
            Self::Expr { expr, .. } => expr.eval(s),
            Self::Builtin(b) => b.eval_jet(s).map(|j| j.v),
        }
    }

    pub fn as_expr(&self) -> Expr {
        match self {
            Self::Expr { expr, .. } => expr.clone(),
            Self::Builtin(b) => b.to_expr(),
        }
    }

    /// `s -> f(lambda s)`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let inner = Expr::Mul(Box::new(Expr::Constant(lambda)), Box::new(Expr::Variable));
        let expr = self.as_expr().compose(&inner);
        Self::Expr {
            source: expr.to_string(),
            expr,
        }
    }

    pub fn analytic_convexity(&self, n: usize) -> Option<AnalyticVerdict> {
        match self {
            Self::Builtin(b) => Some(b.analytic_convexity(n)),
            Self::Expr { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Expr { source, .. } => source.clone(),
            Self::Builtin(b) => b.to_string(),
        }
    }
}

impl From<BuiltinFamily> for ScalarFunction {
    fn from(b: BuiltinFamily) -> Self {
        Self::Builtin(b)
    }
}

impl From<Expr> for ScalarFunction {
    fn from(expr: Expr) -> Self {
        Self::Expr {
            source: expr.to_string(),
            expr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_d1(f: &BuiltinFamily, s: f64) -> f64 {
        let h = 1e-5 * s.max(1.0);
        (f.eval_jet(s + h).unwrap().v - f.eval_jet(s - h).unwrap().v) / (2.0 * h)
    }

    #[test]
    fn limiting_family_member_jet() {
        let f = family_f_a(0.0, -3.0, 3.0, 3).unwrap();
        let j = f.eval_jet(1.0f64).unwrap();
        assert_eq!(j.v, 0.0);
        assert!((j.d1 + 1.0).abs() < 1e-15);
        assert!((j.d2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((central_d1(&f, 1.0) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn family_branches() {
        let log = family_f_a(1.0 / 3.0, -1.0, 0.0, 3).unwrap();
        assert_eq!(
            log.canonical(),
            BuiltinFamily::LogFamily { c: -1.0, d: 0.0 }
        );
        for &s in &[0.1f64, 1.0, 7.0] {
            assert!((log.eval_jet(s).unwrap().v + f64::ln(s)).abs() < 1e-15);
        }
        let limit = family_f_a(0.0, -3.0, 3.0, 3).unwrap();
        assert!((limit.eval_jet(8.0f64).unwrap().v - (3.0 - 3.0 * 2.0)).abs() < 1e-14);
        let upper = family_f_a(2.0 / 3.0, -3.0, -3.0, 3).unwrap();
        assert!((upper.eval_jet(8.0f64).unwrap().v - (-3.0 + 3.0 / 2.0)).abs() < 1e-14);
        // within the branch tolerance the log form is selected
        let near = family_f_a(1.0 / 3.0 + 1e-13, -1.0, 0.0, 3).unwrap();
        assert!(matches!(near.canonical(), BuiltinFamily::LogFamily { .. }));
    }

    #[test]
    fn family_parameter_errors() {
        assert!(matches!(
            family_f_a(-0.1, -1.0, 0.0, 3),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            family_f_a(0.1, 1.0, 0.0, 3),
            Err(Error::Parameter(_))
        ));
        assert!(neo_hooke_volumetric(0.0).is_err());
        assert!(neo_hooke_volumetric(2.0).is_ok());
    }

    #[test]
    fn neo_hooke_is_scaled_log() {
        let f = neo_hooke_volumetric(2.5).unwrap();
        let j = f.eval_jet(2.0).unwrap();
        assert!((j.v + 2.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(j.d1, -1.25);
        assert_eq!(j.d2, 0.625);
    }

    #[test]
    fn builtin_matches_its_expression() {
        let fams = [
            BuiltinFamily::PowerLaw {
                c: 2.0,
                p: -0.7,
                d: 1.0,
            },
            BuiltinFamily::LogFamily { c: -0.5, d: 2.0 },
            family_f_a(0.25, -2.0, 1.0, 5).unwrap(),
            neo_hooke_volumetric(3.0).unwrap(),
        ];
        for f in fams {
            let e = f.to_expr();
            for &s in &[0.03f64, 0.9, 11.0] {
                let a = f.eval_jet(s).unwrap();
                let b = e.eval_jet(s).unwrap();
                for (x, y) in [(a.v, b.v), (a.d1, b.d1), (a.d2, b.d2)] {
                    assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{f}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn power_law_analytic_convexity() {
        let convex = |c: f64, p: f64, n: usize| {
            BuiltinFamily::PowerLaw { c, p, d: 0.0 }
                .analytic_convexity(n)
                .convex
        };
        assert!(convex(-1.0, 1.0 / 3.0, 3));
        assert!(convex(-1.0, 0.2, 3));
        assert!(!convex(-1.0, 0.5, 3));
        assert!(!convex(1.0, 1.0, 3));
        assert!(convex(1.0, -1.0, 3));
        assert!(!convex(-1.0, -1.0, 3));
        assert!(convex(0.0, 4.0, 3));
        assert!(convex(1.0, 2.0, 1));
        assert!(!convex(-1.0, 1.0, 2));
    }

    #[test]
    fn rescaled_function() {
        let f = ScalarFunction::parse("-ln(s)").unwrap();
        let g = f.rescaled(2.0);
        assert!((g.eval(3.0).unwrap() + 6f64.ln()).abs() < 1e-15);
        assert_eq!(g.eval_jet(3.0).unwrap().d1, -1.0 / 3.0);
    }
}
