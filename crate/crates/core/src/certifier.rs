//! Grid certification of the differential inequality, counterexample
//! witnesses, and numerical checks of the supporting identities.

use crate::detcalculus::{
    condition_lhs_diag, condition_lhs_full, default_second_difference_step, fd_second_directional,
    g_hess_form, g_value,
};
use crate::error::{Error, Result};
use crate::function::{
    family_f_a, neo_hooke_volumetric, AnalyticVerdict, BuiltinFamily, ScalarFunction,
};
use crate::linalg::{
    frob_inner, random_posdef_with, random_sym_with, sample_rng, Matrix, PosDefMatrix, SymMatrix,
};
use crate::scalar::{from_usize, lit, Real};

/// Base of the per-point tolerance band `tol * (1 + |f'| + |f''|)`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A witness is confirmed when `|analytic - fd| <= WITNESS_FD_TOL * max(1, |analytic|)`.
pub const WITNESS_FD_TOL: f64 = 1e-4;

/// Eigenvalue range used by [`sample_convexity`].
pub const SAMPLE_EIG_RANGE: (f64, f64) = (0.1, 10.0);

/// Values of the second derivative below this count as convexity failures
/// in [`sample_convexity`].
pub const HESS_FORM_FLOOR: f64 = -1e-8;

/// Samples kept verbatim in [`SampleDiagnostics::failing`].
pub const MAX_FAILING_KEPT: usize = 16;

/// Log-spaced grid on `[s_min, s_max]`, both endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(s_min: f64, s_max: f64, count: usize) -> Result<Self> {
        let g = Self {
            s_min,
            s_max,
            count,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_min > 0.0) || !self.s_max.is_finite() || !(self.s_max > self.s_min) {
            return Err(Error::Parameter(format!(
                "grid needs 0 < s_min < s_max, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if self.count < 2 {
            return Err(Error::Parameter(format!(
                "grid needs at least 2 points, got {}",
                self.count
            )));
        }
        Ok(())
    }

    pub fn points<T: Real>(&self) -> Vec<T> {
        let (lo, hi) = (self.s_min.ln(), self.s_max.ln());
        let last = self.count - 1;
        (0..self.count)
            .map(|i| match i {
                0 => lit(self.s_min),
                i if i == last => lit(self.s_max),
                i => lit((lo + (hi - lo) * i as f64 / last as f64).exp()),
            })
            .collect()
    }

    /// The same grid with every point multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            s_min: self.s_min * factor,
            s_max: self.s_max * factor,
            count: self.count,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            s_min: 1e-3,
            s_max: 1e3,
            count: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    CertifiedOnGrid,
    Refuted,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::CertifiedOnGrid => "CertifiedOnGrid",
            Verdict::Refuted => "Refuted",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// `C = diag(1, ..., 1, s)`, `H = diag(1, -1, 0, ..., 0)`; needs `f'(s) > 0`.
    PositiveFPrime,
    /// `C = s^(1/n) I`, `H = k s^(-1/n) I`; needs the inequality to fail at `s`.
    SecondOrderDeficit,
}

impl WitnessKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WitnessKind::PositiveFPrime => "PositiveFPrime",
            WitnessKind::SecondOrderDeficit => "SecondOrderDeficit",
        }
    }
}

/// A concrete pair `(C, H)` with `D^2 g(C).(H,H) < 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness<T> {
    pub kind: WitnessKind,
    pub s_star: T,
    pub c: PosDefMatrix<T>,
    pub h: SymMatrix<T>,
    pub analytic_value: T,
    pub fd_value: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointRecord<T> {
    pub s: T,
    pub fprime: T,
    pub fsecond: T,
    /// `f''(s) + (n-1)/(n s) f'(s)`
    pub lhs: T,
    /// Width of the tolerance band at this point.
    pub band: T,
    pub fprime_violated: bool,
    pub lhs_violated: bool,
}

impl<T> PointRecord<T> {
    pub fn failing(&self) -> bool {
        self.fprime_violated || self.lhs_violated
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainFailure {
    pub s: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificationReport<T> {
    pub verdict: Verdict,
    pub n: usize,
    pub grid: GridSpec,
    pub tol: f64,
    pub points: Vec<PointRecord<T>>,
    pub witnesses: Vec<Witness<T>>,
    /// Closed-form decision, available for built-in families.
    pub analytic: Option<AnalyticVerdict>,
    pub domain_failure: Option<DomainFailure>,
    pub notes: Vec<String>,
}

impl<T: Real> CertificationReport<T> {
    pub fn failing_points(&self) -> impl Iterator<Item = &PointRecord<T>> {
        self.points.iter().filter(|p| p.failing())
    }

    pub fn witness(&self, kind: WitnessKind) -> Option<&Witness<T>> {
        self.witnesses.iter().find(|w| w.kind == kind)
    }
}

/// `f''(s) + (n-1)/(n s) f'(s)`.
pub fn diff_ineq_lhs<T: Real>(f: &ScalarFunction, s: T, n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    let j = f.eval_jet(s)?;
    let n_t = from_usize::<T>(n);
    Ok(j.d2 + (n_t - T::one()) / (n_t * s) * j.d1)
}

/// `C = diag(1, ..., 1, s)` and `H = diag(1, -1, 0, ..., 0)` for `n >= 3`.
///
/// Here `<C^-1, H> = 0` and `<H C^-1, C^-1 H> = 2`, so the second derivative
/// of `f(det C)` in direction `H` is `-2 s f'(s)`. For `n = 2` the two unit
/// slots do not exist and the pair is `C = sqrt(s) I`, `H = sqrt(s) diag(1, -1)`,
/// with the same two inner products up to rounding.
pub fn witness_positive_fprime<T: Real>(s: T, n: usize) -> Result<(PosDefMatrix<T>, SymMatrix<T>)> {
    if n < 2 {
        return Err(Error::Dimension(format!(
            "the f' > 0 witness needs n >= 2, got {n}"
        )));
    }
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::Parameter(format!("s must be positive, got {s}")));
    }
    if n == 2 {
        let r = s.sqrt();
        return Ok((
            PosDefMatrix::from_diag(&[r, r])?,
            SymMatrix::from_diag(&[r, -r]),
        ));
    }
    let mut cd = vec![T::one(); n];
    cd[n - 1] = s;
    let mut hd = vec![T::zero(); n];
    hd[0] = T::one();
    hd[1] = -T::one();
    Ok((PosDefMatrix::from_diag(&cd)?, SymMatrix::from_diag(&hd)))
}

/// `s^(1/n)` with one Newton correction, so that exact roots come out exact.
fn nth_root<T: Real>(s: T, n: usize) -> T {
    let n_t = from_usize::<T>(n);
    let r = s.powf(n_t.recip());
    let rn1 = r.powi(n as i32 - 1);
    let refined = r - (rn1 * r - s) / (n_t * rn1);
    if (refined.powi(n as i32) - s).abs() <= (r.powi(n as i32) - s).abs() {
        refined
    } else {
        r
    }
}

/// `C = s^(1/n) I` and `H = k s^(-1/n) I`, the direction along which the
/// condition reduces to `n k^2 s^(-4/n) (n f''(s) + (n-1) f'(s)/s)`.
pub fn witness_second_order<T: Real>(
    s: T,
    n: usize,
    k: T,
) -> Result<(PosDefMatrix<T>, SymMatrix<T>)> {
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    if k == T::zero() || !k.is_finite() {
        return Err(Error::Parameter(
            "k must be a non-zero finite number".into(),
        ));
    }
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::Parameter(format!("s must be positive, got {s}")));
    }
    let root = nth_root(s, n);
    let c = PosDefMatrix::new(SymMatrix::identity(n).scaled(root))?;
    let h = SymMatrix::identity(n).scaled(k / root);
    Ok((c, h))
}

/// Builds the witness of `kind` at `s` and keeps it only if the analytic
/// second derivative is negative and the finite-difference oracle agrees.
pub fn confirm_witness<T: Real>(
    f: &ScalarFunction,
    kind: WitnessKind,
    s: T,
    n: usize,
) -> Result<Option<Witness<T>>> {
    let (c, h) = match kind {
        WitnessKind::PositiveFPrime => witness_positive_fprime(s, n)?,
        WitnessKind::SecondOrderDeficit => witness_second_order(s, n, T::one())?,
    };
    let analytic = g_hess_form(f, &c, &h)?;
    if !(analytic < T::zero()) {
        return Ok(None);
    }
    let fd = match fd_second_directional(f, &c, &h, default_second_difference_step(&c, &h)) {
        Ok(est) => est.value,
        Err(_) => return Ok(None),
    };
    if (analytic - fd).abs() > lit::<T>(WITNESS_FD_TOL) * T::one().max(analytic.abs()) {
        return Ok(None);
    }
    Ok(Some(Witness {
        kind,
        s_star: s,
        c,
        h,
        analytic_value: analytic,
        fd_value: fd,
    }))
}

/// Checks both conditions at every grid point and attaches confirmed
/// witnesses for the first violations found.
///
/// The verdict is `Refuted` once a witness is confirmed, `CertifiedOnGrid`
/// when no grid point leaves the tolerance band, and `Inconclusive`
/// otherwise (including when `f` cannot be evaluated at a grid point).
/// For `n = 1` the map is just `f` and only `f'' >= 0` is checked.
pub fn certify<T: Real>(
    f: &ScalarFunction,
    n: usize,
    grid: &GridSpec,
    tol: f64,
) -> Result<CertificationReport<T>> {
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    grid.validate()?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let tol_t = lit::<T>(tol);
    let monotonicity_required = n >= 2;
    let mut notes = vec![format!(
        "verdict CertifiedOnGrid means the inequality holds at {} log-spaced points in [{}, {}]; it is not a proof for all s > 0",
        grid.count, grid.s_min, grid.s_max
    )];
    if !monotonicity_required {
        notes.push("n = 1: f o det = f, so only f'' >= 0 is checked".into());
    }
    if let ScalarFunction::Builtin(BuiltinFamily::FamilyA { n: m, .. }) = f {
        if *m != 3 {
            notes.push(format!(
                "FamilyA with n = {m} uses the exponent (n-1)/n in place of 2/3; an extension of the three-dimensional family"
            ));
        }
    }

    let mut points = Vec::with_capacity(grid.count);
    let mut domain_failure = None;
    for s in grid.points::<T>() {
        let record = f.eval_jet(s).and_then(|j| {
            let lhs = diff_ineq_lhs(f, s, n)?;
            let band = tol_t * (T::one() + j.d1.abs() + j.d2.abs());
            Ok(PointRecord {
                s,
                fprime: j.d1,
                fsecond: j.d2,
                lhs,
                band,
                fprime_violated: monotonicity_required && j.d1 > band,
                lhs_violated: lhs < -band,
            })
        });
        match record {
            Ok(r) => points.push(r),
            Err(Error::Domain { s, message }) => {
                domain_failure = Some(DomainFailure { s, message });
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let mut witnesses: Vec<Witness<T>> = Vec::new();
    let have = |ws: &[Witness<T>], kind| ws.iter().any(|w| w.kind == kind);
    for p in points.iter().filter(|p| p.failing()) {
        if have(&witnesses, WitnessKind::PositiveFPrime)
            && have(&witnesses, WitnessKind::SecondOrderDeficit)
        {
            break;
        }
        let mut confirmed_here = false;
        if p.fprime_violated && !have(&witnesses, WitnessKind::PositiveFPrime) {
            if let Some(w) = confirm_witness(f, WitnessKind::PositiveFPrime, p.s, n)? {
                witnesses.push(w);
                confirmed_here = true;
            }
        }
        if p.lhs_violated && !confirmed_here && !have(&witnesses, WitnessKind::SecondOrderDeficit) {
            if let Some(w) = confirm_witness(f, WitnessKind::SecondOrderDeficit, p.s, n)? {
                witnesses.push(w);
            }
        }
    }

    let any_failing = points.iter().any(|p| p.failing());
    let verdict = if !witnesses.is_empty() {
        Verdict::Refuted
    } else if any_failing || domain_failure.is_some() {
        Verdict::Inconclusive
    } else {
        Verdict::CertifiedOnGrid
    };
    if let Some(d) = &domain_failure {
        notes.push(format!("evaluation aborted at s = {}: {}", d.s, d.message));
    }

    Ok(CertificationReport {
        verdict,
        n,
        grid: *grid,
        tol,
        points,
        witnesses,
        analytic: f.analytic_convexity(n),
        domain_failure,
        notes,
    })
}

/// The quantities `sigma = <P, A>`, `<P, diag A>`,
/// `sigma_tilde = <P diag A, diag A P>` and `<PA, AP>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaValues<T> {
    pub n: usize,
    pub sigma: T,
    pub sigma_diag: T,
    pub sigma_tilde: T,
    pub pa_ap: T,
}

impl<T: Real> SigmaValues<T> {
    /// `<PA, AP> - sigma_tilde`, non-negative in exact arithmetic.
    pub fn cross_gap(&self) -> T {
        self.pa_ap - self.sigma_tilde
    }

    /// `n sigma_tilde - sigma^2`, non-negative in exact arithmetic.
    pub fn cauchy_schwarz_gap(&self) -> T {
        from_usize::<T>(self.n) * self.sigma_tilde - self.sigma * self.sigma
    }

    pub fn relations_hold(&self, slack: T) -> bool {
        self.sigma == self.sigma_diag
            && self.cross_gap() >= -slack
            && self.cauchy_schwarz_gap() >= -slack
    }
}

/// Evaluates the trace identities for a non-negative diagonal `P` and any `A`.
pub fn sigma_checks<T: Real>(p: &Matrix<T>, a: &Matrix<T>) -> Result<SigmaValues<T>> {
    let n = p.n();
    if a.n() != n {
        return Err(Error::Dimension(format!(
            "P is {0}x{0} but A is {1}x{1}",
            n,
            a.n()
        )));
    }
    for i in 0..n {
        for j in 0..n {
            let v = p.get(i, j);
            if i != j && v != T::zero() {
                return Err(Error::Parameter(format!(
                    "P must be diagonal, P[{i}][{j}] = {v}"
                )));
            }
            if i == j && !(v >= T::zero()) {
                return Err(Error::Parameter(format!(
                    "P must have non-negative entries, P[{i}][{i}] = {v}"
                )));
            }
        }
    }
    let diag_a = a.diag_part();
    let p_diag_a = p * &diag_a;
    let diag_a_p = &diag_a * p;
    Ok(SigmaValues {
        n,
        sigma: frob_inner(p, a)?,
        sigma_diag: frob_inner(p, &diag_a)?,
        sigma_tilde: frob_inner(&p_diag_a, &diag_a_p)?,
        pa_ap: frob_inner(&(p * a), &(a * p))?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionCheck<T> {
    /// Condition evaluated at `(C, H)`.
    pub full: T,
    /// `full / det C`.
    pub normalized_full: T,
    /// Condition at `C^-1 = diag(1/lambda_i)` and `Q^T H Q`.
    pub reduced: T,
    /// Sum of the absolute values of the two terms of `reduced`; both sides
    /// can cancel down to rounding noise, so gaps are measured against this.
    pub term_scale: T,
}

impl<T: Real> ReductionCheck<T> {
    /// `|normalized_full - reduced| / max(|normalized_full|, |reduced|, term_scale)`.
    pub fn relative_gap(&self) -> T {
        crate::scalar::rel_diff(self.normalized_full, self.reduced, self.term_scale)
    }
}

/// Compares the condition at `(C, H)` with its diagonalized form.
pub fn reduction_check<T: Real>(
    f: &ScalarFunction,
    c: &PosDefMatrix<T>,
    h: &SymMatrix<T>,
) -> Result<ReductionCheck<T>> {
    let full = condition_lhs_full(f, c, h)?;
    let eig = c.eigen();
    let dvec: Vec<T> = eig.eigenvalues.iter().map(|l| l.recip()).collect();
    let h_rot = h.congruence(&eig.q.transpose());
    let reduced = condition_lhs_diag(f, &dvec, &h_rot)?;

    let n = dvec.len();
    let s = dvec.iter().fold(T::one(), |acc, &d| acc * d).recip();
    let j = f.eval_jet(s)?;
    let sigma = (0..n).fold(T::zero(), |acc, i| acc + dvec[i] * h_rot.get(i, i));
    let tau = (0..n).fold(T::zero(), |acc, i| {
        (0..n).fold(acc, |acc, k| {
            acc + dvec[i] * dvec[k] * h_rot.get(i, k).powi(2)
        })
    });
    let fp_over_s = j.d1 / s;
    let term_scale = (j.d2 + fp_over_s).abs() * sigma * sigma + fp_over_s.abs() * tau;
    Ok(ReductionCheck {
        full,
        normalized_full: full / c.det(),
        reduced,
        term_scale,
    })
}

/// One sample where the second derivative dropped below [`HESS_FORM_FLOOR`].
#[derive(Clone, Debug, PartialEq)]
pub struct FailingSample<T> {
    pub c: PosDefMatrix<T>,
    pub h: SymMatrix<T>,
    pub hess_form: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleDiagnostics<T> {
    pub n: usize,
    pub seed: u64,
    pub samples_run: usize,
    pub samples_skipped: usize,
    /// Smallest `D^2 g(C).(H,H)` seen; `None` if nothing was evaluated.
    pub min_hess_form: Option<T>,
    /// Smallest `(g(C1) + g(C2))/2 - g((C1 + C2)/2)`; non-negative for convex `g`.
    pub min_midpoint_gap: Option<T>,
    pub failing_count: usize,
    pub failing: Vec<FailingSample<T>>,
}

/// Random search for a negative second derivative or a violated midpoint
/// inequality. Matrices have eigenvalues in [`SAMPLE_EIG_RANGE`], directions
/// have entries in `[-1, 1]`. Samples where `f` cannot be evaluated are skipped.
pub fn sample_convexity<T: Real>(
    f: &ScalarFunction,
    n: usize,
    num_samples: usize,
    seed: u64,
) -> Result<SampleDiagnostics<T>> {
    if num_samples == 0 {
        return Err(Error::Parameter("num_samples must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    let range = (SAMPLE_EIG_RANGE.0.ln(), SAMPLE_EIG_RANGE.1.ln());
    let mut rng = sample_rng(seed);
    let mut diag = SampleDiagnostics {
        n,
        seed,
        samples_run: 0,
        samples_skipped: 0,
        min_hess_form: None,
        min_midpoint_gap: None,
        failing_count: 0,
        failing: Vec::new(),
    };
    let floor = lit::<T>(HESS_FORM_FLOOR);
    let min_opt = |cur: Option<T>, v: T| Some(cur.map_or(v, |m: T| m.min(v)));
    for _ in 0..num_samples {
        let c1: PosDefMatrix<T> = random_posdef_with(n, range, &mut rng)?;
        let c2: PosDefMatrix<T> = random_posdef_with(n, range, &mut rng)?;
        let h: SymMatrix<T> = random_sym_with(n, 1.0, &mut rng)?;
        let evaluated = (|| -> Result<(T, T)> {
            let hess = g_hess_form(f, &c1, &h)?;
            let mid = PosDefMatrix::new(c1.sym().add_scaled(c2.sym(), T::one()).scaled(lit(0.5)))?;
            let gap = (g_value(f, &c1)? + g_value(f, &c2)?) * lit(0.5) - g_value(f, &mid)?;
            Ok((hess, gap))
        })();
        match evaluated {
            Ok((hess, gap)) => {
                diag.samples_run += 1;
                diag.min_hess_form = min_opt(diag.min_hess_form, hess);
                diag.min_midpoint_gap = min_opt(diag.min_midpoint_gap, gap);
                if hess < floor {
                    diag.failing_count += 1;
                    if diag.failing.len() < MAX_FAILING_KEPT {
                        diag.failing.push(FailingSample {
                            c: c1,
                            h,
                            hess_form: hess,
                        });
                    }
                }
            }
            Err(_) => diag.samples_skipped += 1,
        }
    }
    Ok(diag)
}

/// Built-in functions used by the sampling sweeps: convex and non-convex
/// members of every family for dimension `n`.
pub fn reference_functions(n: usize) -> Vec<ScalarFunction> {
    let mut fs: Vec<ScalarFunction> = vec![
        BuiltinFamily::LogFamily { c: -1.0, d: 0.0 }.into(),
        neo_hooke_volumetric(2.0).expect("valid mu").into(),
    ];
    let inv_n = 1.0 / n.max(1) as f64;
    for a in [0.0, 0.1, inv_n, 0.5, 1.0, 2.0] {
        fs.push(
            family_f_a(a, -1.0, 0.0, n.max(1))
                .expect("valid family parameters")
                .into(),
        );
    }
    fs.extend([
        BuiltinFamily::PowerLaw {
            c: 1.0,
            p: 1.0,
            d: 0.0,
        }
        .into(),
        BuiltinFamily::PowerLaw {
            c: -1.0,
            p: 1.0,
            d: 0.0,
        }
        .into(),
        BuiltinFamily::PowerLaw {
            c: 1.0,
            p: 2.0,
            d: 0.0,
        }
        .into(),
        BuiltinFamily::PowerLaw {
            c: 1.0,
            p: -1.0,
            d: 0.0,
        }
        .into(),
        BuiltinFamily::LogFamily { c: 1.0, d: 0.0 }.into(),
    ]);
    fs
}
