//! The limiting case of the differential inequality.
//!
//! Writing `y = f'`, equality in `f'' + (n-1)/(n s) f' >= 0` is the linear
//! problem `y' + (n-1)/(n x) y = 0`, `y(xi) = eta`, whose solution is
//! `y_limit(x) = eta (xi / x)^((n-1)/n)`. Any `y` with `y' >= F(x, y)` and
//! `y(xi) = eta` lies above `y_limit` to the right of `xi` and below it to
//! the left. This module evaluates those objects, integrates them
//! numerically, checks the ordering on sampled curves and exports the
//! reference curves as CSV.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::function::{family_f_a, BuiltinFamily, ScalarFunction};
use crate::scalar::{lit, Real};

/// Absolute tolerance used when classifying sampled curves.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Initial value problem `y' = -(n-1)/(n x) y`, `y(xi) = eta` with `xi > 0`, `eta <= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IvpSpec {
    pub xi: f64,
    pub eta: f64,
    pub n: usize,
}

impl IvpSpec {
    pub fn new(xi: f64, eta: f64, n: usize) -> Result<Self> {
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(Error::Parameter(format!("xi must be positive, got {xi}")));
        }
        if !(eta <= 0.0) {
            return Err(Error::Parameter(format!("eta must be <= 0, got {eta}")));
        }
        if n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        Ok(Self { xi, eta, n })
    }

    /// `(n-1)/n`; `2/3` for `n = 3`.
    pub fn coefficient(&self) -> f64 {
        (self.n as f64 - 1.0) / self.n as f64
    }

    /// `F(x, y) = -(n-1)/(n x) y`.
    pub fn rhs<T: Real>(&self, x: T, y: T) -> T {
        -lit::<T>(self.coefficient()) / x * y
    }
}

fn require_positive<T: Real>(x: T) -> Result<()> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain {
            s: x.to_f64().unwrap_or(f64::NAN),
            message: "x must be positive".into(),
        });
    }
    Ok(())
}

/// `eta (xi / x)^((n-1)/n)`.
pub fn y_limit<T: Real>(spec: &IvpSpec, x: T) -> Result<T> {
    require_positive(x)?;
    Ok(lit::<T>(spec.eta) * (lit::<T>(spec.xi) / x).powf(lit(spec.coefficient())))
}

/// `y_limit` as a scalar function, for jet evaluation.
pub fn y_limit_function(spec: &IvpSpec) -> ScalarFunction {
    let k = spec.coefficient();
    BuiltinFamily::PowerLaw {
        c: spec.eta * spec.xi.powf(k),
        p: -k,
        d: 0.0,
    }
    .into()
}

/// `eta (xi / x)^((n-1)/n + a)`, which solves `y' = -((n-1)/n + a)/x * y`.
/// For `a > 0` and `eta < 0` it satisfies `y' > F(x, y)`.
pub fn y_family<T: Real>(spec: &IvpSpec, a: f64, x: T) -> Result<T> {
    require_positive(x)?;
    Ok(lit::<T>(spec.eta) * (lit::<T>(spec.xi) / x).powf(lit(spec.coefficient() + a)))
}

/// `c s^(1/n) + d` with `c <= 0`.
pub fn f_limit<T: Real>(c: f64, d: f64, s: T, n: usize) -> Result<T> {
    if !(c <= 0.0) {
        return Err(Error::Parameter(format!("c must be <= 0, got {c}")));
    }
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    require_positive(s)?;
    Ok(lit::<T>(c) * s.powf(lit(1.0 / n as f64)) + lit(d))
}

pub fn f_limit_function(c: f64, d: f64, n: usize) -> Result<ScalarFunction> {
    if !(c <= 0.0) {
        return Err(Error::Parameter(format!("c must be <= 0, got {c}")));
    }
    Ok(BuiltinFamily::PowerLaw {
        c,
        p: 1.0 / n as f64,
        d,
    }
    .into())
}

/// Sampled curve `x -> y`, optionally with the derivative at each sample.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable<T> {
    pub label: String,
    pub params: String,
    pub points: Vec<(T, T)>,
    pub derivative: Option<Vec<T>>,
}

impl<T: Real> CurveTable<T> {
    /// Requires strictly increasing, positive abscissae.
    pub fn new(
        label: impl Into<String>,
        params: impl Into<String>,
        points: Vec<(T, T)>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("curve has no points".into()));
        }
        if !(points[0].0 > T::zero()) {
            return Err(Error::Parameter("curve abscissae must be positive".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Parameter(
                "curve abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            label: label.into(),
            params: params.into(),
            points,
            derivative: None,
        })
    }

    pub fn with_derivative(mut self, dy: Vec<T>) -> Result<Self> {
        if dy.len() != self.points.len() {
            return Err(Error::Dimension(format!(
                "{} derivative values for {} points",
                dy.len(),
                self.points.len()
            )));
        }
        self.derivative = Some(dy);
        Ok(self)
    }

    /// Samples `g` at `count` log-spaced points of `[lo, hi]`.
    pub fn sample(
        label: impl Into<String>,
        params: impl Into<String>,
        range: (f64, f64),
        count: usize,
        g: impl Fn(T) -> Result<T>,
    ) -> Result<Self> {
        let xs = log_space::<T>(range, count)?;
        let points = xs
            .into_iter()
            .map(|x| Ok((x, g(x)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, params, points)
    }

    /// The stored derivative, or central differences on the table
    /// (one-sided at both ends).
    pub fn derivative_or_estimate(&self) -> Vec<T> {
        if let Some(d) = &self.derivative {
            return d.clone();
        }
        let p = &self.points;
        let m = p.len();
        if m < 2 {
            return vec![T::zero(); m];
        }
        (0..m)
            .map(|i| {
                let (a, b) = match i {
                    0 => (0, 1),
                    i if i == m - 1 => (m - 2, m - 1),
                    i => (i - 1, i + 1),
                };
                (p[b].1 - p[a].1) / (p[b].0 - p[a].0)
            })
            .collect()
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn value_at(&self, x: T) -> Option<T> {
        let p = &self.points;
        if x < p[0].0 || x > p[p.len() - 1].0 {
            return None;
        }
        let idx = p.partition_point(|q| q.0 < x);
        if idx < p.len() && p[idx].0 == x {
            return Some(p[idx].1);
        }
        let (x0, y0) = p[idx - 1];
        let (x1, y1) = p[idx];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// `# label; params` comment line, `x,y` header, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}; {}", self.label, self.params);
        out.push_str("x,y\n");
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

/// `count` log-spaced points on `[lo, hi]`, endpoints exact.
pub fn log_space<T: Real>(range: (f64, f64), count: usize) -> Result<Vec<T>> {
    let (lo, hi) = range;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::Parameter(format!(
            "range must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if count < 2 {
        return Err(Error::Parameter("need at least 2 points".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| match i {
            0 => lit(lo),
            i if i == count - 1 => lit(hi),
            i => lit((a + (b - a) * i as f64 / (count - 1) as f64).exp()),
        })
        .collect())
}

/// Classical fourth-order Runge-Kutta with `steps` uniform steps.
pub fn rk4<T: Real>(rhs: impl Fn(T, T) -> T, x0: T, y0: T, x_end: T, steps: usize) -> Vec<(T, T)> {
    let h = (x_end - x0) / lit(steps as f64);
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let sixth = lit::<T>(1.0 / 6.0);
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push((x0, y0));
    for i in 0..steps {
        let x = x0 + h * lit(i as f64);
        let k1 = rhs(x, y);
        let k2 = rhs(x + half * h, y + half * h * k1);
        let k3 = rhs(x + half * h, y + half * h * k2);
        let k4 = rhs(x + h, y + h * k3);
        y = y + h * sixth * (k1 + two * k2 + two * k3 + k4);
        let x_next = if i + 1 == steps {
            x_end
        } else {
            x0 + h * lit((i + 1) as f64)
        };
        out.push((x_next, y));
    }
    out
}

/// Integrates the linear problem from `xi` to `x_end` with RK4.
pub fn solve_livp_numeric<T: Real>(
    spec: &IvpSpec,
    x_end: f64,
    steps: usize,
) -> Result<CurveTable<T>> {
    if !(x_end > spec.xi) || !x_end.is_finite() {
        return Err(Error::Parameter(format!(
            "x_end must exceed xi = {}, got {x_end}",
            spec.xi
        )));
    }
    if steps < 10 {
        return Err(Error::Parameter(format!(
            "need at least 10 steps, got {steps}"
        )));
    }
    let points = rk4(
        |x, y| spec.rhs(x, y),
        lit(spec.xi),
        lit(spec.eta),
        lit(x_end),
        steps,
    );
    CurveTable::new(
        "y_numeric",
        format!("xi={},eta={},n={},steps={steps}", spec.xi, spec.eta, spec.n),
        points,
    )
}

/// Integrates `y' = F(x, y) + eps` from `(xi, eta)` and returns the first
/// `x <= x_end` where the solution reaches zero.
pub fn perturbed_zero_crossing<T: Real>(
    spec: &IvpSpec,
    eps: f64,
    x_end: f64,
    steps: usize,
) -> Result<Option<T>> {
    if !(x_end > spec.xi) || steps == 0 {
        return Err(Error::Parameter(
            "need x_end > xi and at least one step".into(),
        ));
    }
    let eps_t = lit::<T>(eps);
    let pts = rk4(
        |x: T, y: T| spec.rhs(x, y) + eps_t,
        lit(spec.xi),
        lit(spec.eta),
        lit(x_end),
        steps,
    );
    Ok(pts
        .windows(2)
        .find(|w| w[0].1 < T::zero() && w[1].1 >= T::zero())
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            x0 - y0 * (x1 - x0) / (y1 - y0)
        }))
}

/// Sign of `y' - F(x, y)` over a sampled curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifferentialClass {
    /// `|y' - F| <= tol` everywhere.
    Exact,
    /// `y' - F > tol` everywhere.
    StrictlyAbove,
    /// `y' - F >= -tol` everywhere.
    WeaklyAbove,
    /// `y' - F < -tol` everywhere.
    StrictlyBelow,
    /// `y' - F <= tol` everywhere.
    WeaklyBelow,
    Mixed,
}

impl DifferentialClass {
    pub fn is_above(&self) -> bool {
        matches!(self, Self::Exact | Self::StrictlyAbove | Self::WeaklyAbove)
    }

    pub fn is_below(&self) -> bool {
        matches!(self, Self::Exact | Self::StrictlyBelow | Self::WeaklyBelow)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonPoint<T> {
    pub x: T,
    pub y: T,
    pub y_limit: T,
    /// `y' - F(x, y)`
    pub residual: T,
}

/// One predicted ordering between the curve and `y_limit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ordering {
    /// `y >= y_limit` for `x >= xi`.
    AboveRightOfXi,
    /// `y <= y_limit` for `x <= xi`.
    BelowLeftOfXi,
    /// `y <= y_limit` for `x >= xi`.
    BelowRightOfXi,
    /// `y >= y_limit` for `x <= xi`.
    AboveLeftOfXi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport<T> {
    pub class: DifferentialClass,
    pub y_at_xi: T,
    pub points: Vec<ComparisonPoint<T>>,
    pub predicted: Vec<Ordering>,
    /// Sample abscissae where a predicted ordering fails.
    pub violations: Vec<T>,
}

/// Classifies `curve` against `F` and checks the orderings against
/// `y_limit` that the comparison principle predicts for that class.
pub fn comparison_check<T: Real>(
    curve: &CurveTable<T>,
    spec: &IvpSpec,
) -> Result<ComparisonReport<T>> {
    let xi = lit::<T>(spec.xi);
    let y_at_xi = curve.value_at(xi).ok_or_else(|| {
        Error::Range(format!(
            "xi = {} outside the sampled range [{}, {}]",
            spec.xi,
            curve.points[0].0,
            curve.points[curve.points.len() - 1].0
        ))
    })?;
    let tol = lit::<T>(CLASSIFY_TOL);
    let dy = curve.derivative_or_estimate();
    let points: Vec<ComparisonPoint<T>> = curve
        .points
        .iter()
        .zip(&dy)
        .map(|(&(x, y), &d)| {
            Ok(ComparisonPoint {
                x,
                y,
                y_limit: y_limit(spec, x)?,
                residual: d - spec.rhs(x, y),
            })
        })
        .collect::<Result<_>>()?;

    let all = |p: &dyn Fn(T) -> bool| points.iter().all(|q| p(q.residual));
    let class = if all(&|r| r.abs() <= tol) {
        DifferentialClass::Exact
    } else if all(&|r| r > tol) {
        DifferentialClass::StrictlyAbove
    } else if all(&|r| r >= -tol) {
        DifferentialClass::WeaklyAbove
    } else if all(&|r| r < -tol) {
        DifferentialClass::StrictlyBelow
    } else if all(&|r| r <= tol) {
        DifferentialClass::WeaklyBelow
    } else {
        DifferentialClass::Mixed
    };

    let eta = lit::<T>(spec.eta);
    let mut predicted = Vec::new();
    if class.is_above() {
        if y_at_xi >= eta - tol {
            predicted.push(Ordering::AboveRightOfXi);
        }
        if y_at_xi <= eta + tol {
            predicted.push(Ordering::BelowLeftOfXi);
        }
    }
    if class.is_below() {
        if y_at_xi <= eta + tol {
            predicted.push(Ordering::BelowRightOfXi);
        }
        if y_at_xi >= eta - tol {
            predicted.push(Ordering::AboveLeftOfXi);
        }
    }

    let violations = points
        .iter()
        .filter(|p| {
            predicted.iter().any(|o| match o {
                Ordering::AboveRightOfXi => p.x >= xi && p.y < p.y_limit - tol,
                Ordering::BelowLeftOfXi => p.x <= xi && p.y > p.y_limit + tol,
                Ordering::BelowRightOfXi => p.x >= xi && p.y > p.y_limit + tol,
                Ordering::AboveLeftOfXi => p.x <= xi && p.y < p.y_limit - tol,
            })
        })
        .map(|p| p.x)
        .collect();

    Ok(ComparisonReport {
        class,
        y_at_xi,
        points,
        predicted,
        violations,
    })
}

/// The four members of the three-branch family drawn in the reference
/// figure (n = 3). All pass through `(1, 0)` with slope `-1`.
pub fn reference_family_curves() -> Vec<(&'static str, BuiltinFamily)> {
    let fam = |a, c, d| family_f_a(a, c, d, 3).expect("valid family parameters");
    vec![
        ("3s^(-1/3)-3", fam(2.0 / 3.0, -3.0, -3.0)),
        ("-ln s", fam(1.0 / 3.0, -1.0, 0.0)),
        ("-6s^(1/6)+6", fam(1.0 / 6.0, -6.0, 6.0)),
        ("f_limit(s)=-3s^(1/3)+3", fam(0.0, -3.0, 3.0)),
    ]
}

fn family_params(f: &BuiltinFamily) -> String {
    match f {
        BuiltinFamily::FamilyA { a, c, d, n } => format!("a={a},c={c},d={d},n={n}"),
        other => other.to_string(),
    }
}

/// CSV-ready tables for the reference family curves followed by `extra`,
/// sampled at `count` log-spaced points of `s_range`, with exact
/// derivatives attached.
pub fn export_family_curves<T: Real>(
    extra: &[BuiltinFamily],
    s_range: (f64, f64),
    count: usize,
) -> Result<Vec<CurveTable<T>>> {
    let mut members: Vec<(String, BuiltinFamily)> = reference_family_curves()
        .into_iter()
        .map(|(l, f)| (l.to_string(), f))
        .collect();
    members.extend(extra.iter().map(|f| (f.to_string(), *f)));
    members
        .into_iter()
        .map(|(label, f)| {
            let xs = log_space::<T>(s_range, count)?;
            let jets = xs
                .iter()
                .map(|&s| f.eval_jet(s))
                .collect::<Result<Vec<_>>>()?;
            let points = xs.iter().zip(&jets).map(|(&x, j)| (x, j.v)).collect();
            CurveTable::new(label, family_params(&f), points)?
                .with_derivative(jets.iter().map(|j| j.d1).collect())
        })
        .collect()
}

/// Curves of the derivative picture: `y_limit` and `y = eta xi / x` (the
/// family member with `a = 1/n`), for the given problem.
pub fn export_derivative_curves<T: Real>(
    spec: &IvpSpec,
    x_range: (f64, f64),
    count: usize,
) -> Result<Vec<CurveTable<T>>> {
    let params = format!("xi={},eta={},n={}", spec.xi, spec.eta, spec.n);
    let a = 1.0 - spec.coefficient();
    Ok(vec![
        CurveTable::sample("y_limit", params.clone(), x_range, count, |x| {
            y_limit(spec, x)
        })?,
        CurveTable::sample("eta*xi/x", format!("{params},a={a}"), x_range, count, |x| {
            y_family(spec, a, x)
        })?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(xi: f64, eta: f64, n: usize) -> IvpSpec {
        IvpSpec::new(xi, eta, n).unwrap()
    }

    #[test]
    fn y_limit_examples() {
        let s = spec(1.0, -1.5, 3);
        assert_eq!(y_limit(&s, 1.0).unwrap(), -1.5);
        assert!((y_limit(&s, 8.0f64).unwrap() + 0.375).abs() < 1e-15);
        let zero = spec(2.0, 0.0, 3);
        for &x in &[0.1, 1.0, 30.0] {
            assert_eq!(y_limit(&zero, x).unwrap(), 0.0);
        }
        assert!(matches!(y_limit(&s, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn spec_validation() {
        assert!(IvpSpec::new(0.0, -1.0, 3).is_err());
        assert!(IvpSpec::new(1.0, 0.5, 3).is_err());
        assert!(IvpSpec::new(1.0, -1.0, 0).is_err());
    }

    #[test]
    fn f_limit_examples() {
        assert_eq!(f_limit(-3.0, 3.0, 1.0, 3).unwrap(), 0.0);
        assert!((f_limit(-3.0, 3.0, 8.0f64, 3).unwrap() + 3.0).abs() < 1e-14);
        assert_eq!(f_limit(0.0, 5.0, 17.0, 3).unwrap(), 5.0);
        assert!(matches!(
            f_limit(1.0, 0.0, 1.0, 3),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn f_limit_solves_the_limiting_equation() {
        for n in [2usize, 3, 5] {
            let f = f_limit_function(-2.0, 1.0, n).unwrap();
            for &s in &[0.01, 0.7, 3.0, 90.0] {
                let j = f.eval_jet(s).unwrap();
                let resid = j.d2 + (n as f64 - 1.0) / (n as f64 * s) * j.d1;
                assert!(
                    resid.abs() <= 1e-12 * (1.0 + j.d2.abs()),
                    "n={n} s={s}: {resid}"
                );
            }
        }
    }

    #[test]
    fn rk4_matches_closed_form() {
        let s = spec(1.0, -1.5, 3);
        let c: CurveTable<f64> = solve_livp_numeric(&s, 8.0, 2000).unwrap();
        let (x, y) = *c.points.last().unwrap();
        assert_eq!(x, 8.0);
        assert!((y + 0.375).abs() <= 1e-6 * 0.375);

        let s2 = spec(2.0, -1.0, 2);
        let c: CurveTable<f64> = solve_livp_numeric(&s2, 8.0, 2000).unwrap();
        assert!((c.points.last().unwrap().1 + 0.5).abs() <= 1e-6 * 0.5);

        let zero = spec(1.0, 0.0, 3);
        let c: CurveTable<f64> = solve_livp_numeric(&zero, 5.0, 100).unwrap();
        assert!(c.points.iter().all(|p| p.1 == 0.0));

        assert!(solve_livp_numeric::<f64>(&s, 0.5, 100).is_err());
        assert!(solve_livp_numeric::<f64>(&s, 8.0, 9).is_err());
    }

    #[test]
    fn perturbed_solution_reaches_zero() {
        let s = spec(1.0, -1.5, 3);
        let x0: f64 = perturbed_zero_crossing(&s, 0.1, 100.0, 20_000)
            .unwrap()
            .unwrap();
        // y = 0.06 x - 1.56 x^(-2/3) vanishes at x = 26^(3/5)
        assert!((x0 - 26f64.powf(0.6)).abs() < 1e-4, "{x0}");
        let none: Option<f64> = perturbed_zero_crossing(&s, 0.0, 100.0, 1000).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn comparison_of_limit_with_itself() {
        let s = spec(1.0, -1.5, 3);
        let c =
            CurveTable::<f64>::sample("y_limit", "", (0.1, 10.0), 401, |x| y_limit(&s, x)).unwrap();
        let dy = c
            .points
            .iter()
            .map(|&(x, y)| -s.coefficient() * y / x)
            .collect();
        let c = c.with_derivative(dy).unwrap();
        let r = comparison_check(&c, &s).unwrap();
        assert_eq!(r.class, DifferentialClass::Exact);
        assert_eq!(r.predicted.len(), 4);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn comparison_of_family_member() {
        let s = spec(1.0, -1.5, 3);
        for a in [0.1, 0.5, 1.0] {
            let c = CurveTable::<f64>::sample("y_a", "", (0.1, 10.0), 1001, |x| y_family(&s, a, x))
                .unwrap();
            let r = comparison_check(&c, &s).unwrap();
            assert_eq!(r.class, DifferentialClass::StrictlyAbove, "a = {a}");
            assert!(r.violations.is_empty());
            for p in &r.points {
                if p.x > 1.0 + 1e-9 {
                    assert!(p.y > p.y_limit);
                } else if p.x < 1.0 - 1e-9 {
                    assert!(p.y < p.y_limit);
                }
            }
        }
    }

    #[test]
    fn comparison_of_constant_curve() {
        let s = spec(1.0, -1.5, 3);
        let c = CurveTable::<f64>::sample("const", "", (0.1, 10.0), 50, |_| Ok(-1.5)).unwrap();
        let r = comparison_check(&c, &s).unwrap();
        // y' - F = 0 + (2/(3x)) * (-1.5) < 0 everywhere
        assert_eq!(r.class, DifferentialClass::StrictlyBelow);
        assert!(r.violations.is_empty());
        assert!(r.predicted.contains(&Ordering::BelowRightOfXi));
    }

    #[test]
    fn comparison_flags_wrong_ordering() {
        // A curve claiming y' >= F while lying below y_limit right of xi.
        let s = spec(1.0, -1.5, 3);
        let c = CurveTable::<f64>::sample("bad", "", (0.5, 4.0), 40, |x| {
            y_limit(&s, x).map(|y| y - (x - 1.0).max(0.0))
        })
        .unwrap();
        let dy = c.points.iter().map(|_| 10.0).collect();
        let c = c.with_derivative(dy).unwrap();
        let r = comparison_check(&c, &s).unwrap();
        assert!(r.class.is_above());
        assert!(!r.violations.is_empty());
    }

    #[test]
    fn comparison_range_error() {
        let s = spec(5.0, -1.0, 3);
        let c = CurveTable::<f64>::sample("c", "", (0.1, 1.0), 10, Ok).unwrap();
        assert!(matches!(comparison_check(&c, &s), Err(Error::Range(_))));
    }

    #[test]
    fn reference_curves_meet_at_one() {
        for (label, f) in reference_family_curves() {
            let j = f.eval_jet(1.0f64).unwrap();
            assert!(j.v.abs() <= 1e-12, "{label}");
            assert!((j.d1 + 1.0).abs() <= 1e-12, "{label}");
        }
        let upper = reference_family_curves()[0].1;
        assert!((upper.eval_jet(8.0f64).unwrap().v + 1.5).abs() < 1e-14);
    }

    #[test]
    fn csv_format() {
        let c = CurveTable::<f64>::new("lbl", "a=1", vec![(0.5, -1.0), (1.0, 0.25)]).unwrap();
        assert_eq!(c.to_csv(), "# lbl; a=1\nx,y\n0.5,-1\n1,0.25\n");
        assert!(CurveTable::<f64>::new("x", "", vec![(1.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(CurveTable::<f64>::new("x", "", vec![(0.0, 0.0)]).is_err());
    }

    #[test]
    fn exports_are_deterministic() {
        let a: Vec<CurveTable<f64>> = export_family_curves(&[], (0.04, 7.05), 50).unwrap();
        let b: Vec<CurveTable<f64>> = export_family_curves(&[], (0.04, 7.05), 50).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(
            a.iter().map(|c| c.to_csv()).collect::<Vec<_>>(),
            b.iter().map(|c| c.to_csv()).collect::<Vec<_>>()
        );
        let d: Vec<CurveTable<f64>> =
            export_derivative_curves(&spec(1.0, -1.5, 3), (0.3, 9.6), 20).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[1].points[0].1 + 5.0).abs() < 1e-14);
    }
}
