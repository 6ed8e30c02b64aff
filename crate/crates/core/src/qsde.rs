//! A desk-scale rough-path harness for q-Brownian motion on a time grid.
//!
//! Time `[0, T]` is cut into `m` cells of width `dt`; the normalised cell
//! indicators `u_k = 1_{cell_k}/√dt` form an orthonormal basis, so the noise
//! lives in `H = ℝ^m`. On this grid the increments `B(s,t) = ξ(1_{[s,t]})`,
//! the left and right Lévy areas with an operator insertion, the Chen
//! identity, the BPHZ mollifier constant and a one-step Itô residual are all
//! computed exactly in the Wick algebra.

use serde::{Deserialize, Serialize};

use crate::combinat::Pairing;
use crate::error::{Error, Result};
use crate::fock::FockTensor;
use crate::polywick::{delta_r, InsertionPattern};
use crate::wickalg::{delta_q, multiply, multiply_all, triple_norm, WickElement};

/// Relative tolerance used to decide whether a time lies on the grid.
const ALIGN_TOLERANCE: f64 = 1e-9;

/// A uniform grid on `[0, T]` with `m` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    cells: usize,
}

impl TimeGrid {
    /// Builds a grid; requires `T > 0` and `m ≥ 1`.
    pub fn new(horizon: f64, cells: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || cells == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs a positive horizon and at least one cell, got T = {horizon}, m = {cells}"
            )));
        }
        Ok(Self { horizon, cells })
    }

    /// The horizon `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The number of cells `m`, which is also the dimension of `H`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// The cell width `T/m`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.cells as f64
    }

    /// Index of the grid point `t`, i.e. `t/dt` as an integer in `0..=m`.
    pub fn point(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let k = x.round();
        if !(x - k).abs().le(&(ALIGN_TOLERANCE * x.abs().max(1.0))) || k < 0.0 || k > self.cells as f64
        {
            return Err(Error::NotGridAligned(t));
        }
        Ok(k as usize)
    }

    /// Coordinates of `1_{[s,t]}` (with `s ≤ t`) in the cell basis: `√dt` on covered cells.
    pub fn indicator(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let (a, b) = (self.point(s)?, self.point(t)?);
        let (a, b) = (a.min(b), a.max(b));
        let h = self.dt().sqrt();
        Ok((0..self.cells)
            .map(|k| if a <= k && k < b { h } else { 0.0 })
            .collect())
    }
}

/// The increment `B(s,t) = sgn(t−s) ξ(1_{[s,t]})` as a chaos-1 element.
pub fn qbm(s: f64, t: f64, grid: &TimeGrid) -> Result<WickElement> {
    let mut v = grid.indicator(s, t)?;
    if t < s {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(WickElement::field(&v))
}

/// Which time ordering a Lévy area integrates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// First leg earlier than the second.
    Left,
    /// First leg later than the second.
    Right,
}

/// Grid kernel of the Lévy area: `θ(z₂ − z₁) 1_{[s,t]²}` and its mirror.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyAreaTensor {
    /// Time ordering.
    pub side: Side,
    /// Start of the interval.
    pub s: f64,
    /// End of the interval.
    pub t: f64,
    /// Weight of the diagonal cells, in `[0, 1]`.
    pub diag_weight: f64,
    /// The degree-2 coefficient tensor.
    pub tensor: FockTensor,
}

impl LevyAreaTensor {
    /// Builds the kernel on `[s, t]`; requires `s ≤ t` grid-aligned and `c ∈ [0, 1]`.
    ///
    /// For `Left` the coefficient of `u_k ⊗ u_l` is `dt` for `k < l` and
    /// `c·dt` for `k = l`; `Right` is the transpose.
    pub fn new(grid: &TimeGrid, s: f64, t: f64, side: Side, diag_weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&diag_weight) {
            return Err(Error::InvalidArgument(format!(
                "diagonal weight {diag_weight} outside [0, 1]"
            )));
        }
        let (a, b) = (grid.point(s)?, grid.point(t)?);
        if a > b {
            return Err(Error::InvalidArgument(format!("interval [{s}, {t}] is reversed")));
        }
        let m = grid.cells();
        let dt = grid.dt();
        let mut tensor = FockTensor::zeros(m, 2)?;
        for k in a..b {
            for l in a..b {
                let ordered = match side {
                    Side::Left => k < l,
                    Side::Right => k > l,
                };
                let w = if k == l {
                    diag_weight * dt
                } else if ordered {
                    dt
                } else {
                    0.0
                };
                tensor.coeffs_mut()[k * m + l] = w;
            }
        }
        Ok(Self {
            side,
            s,
            t,
            diag_weight,
            tensor,
        })
    }
}

fn one_insertion() -> InsertionPattern {
    InsertionPattern::parse("LIL").expect("valid pattern")
}

/// The Lévy area `𝔹(a)(s,t) = ℳ^{(1,1)}(F(s,t); a)` with a single insertion `a`.
///
/// The renormalised multiplication map never contracts the two noise legs
/// with each other, so for `a = 𝟙` the vacuum expectation vanishes.
pub fn levy_area(
    a: &WickElement,
    s: f64,
    t: f64,
    side: Side,
    grid: &TimeGrid,
    q: f64,
    diag_weight: f64,
) -> Result<WickElement> {
    let kernel = LevyAreaTensor::new(grid, s, t, side, diag_weight)?;
    levy_area_of(&kernel.tensor, a, q)
}

fn levy_area_of(kernel: &FockTensor, a: &WickElement, q: f64) -> Result<WickElement> {
    let d = kernel.dim();
    let pattern = one_insertion();
    let ops = [WickElement::one(d), a.clone(), WickElement::one(d)];
    delta_r(&pattern, &Pairing::empty(pattern.legs()), kernel, &ops, q)
}

/// The Lévy area with the leg–leg contraction restored.
///
/// Adds `tr F · Δ_q(a)`, the term in which the two noise legs pair with each
/// other across the insertion. For `a = 𝟙` its vacuum expectation is
/// `c·(t − s)`: only the diagonal cells contribute.
pub fn levy_area_unrenormalised(
    a: &WickElement,
    s: f64,
    t: f64,
    side: Side,
    grid: &TimeGrid,
    q: f64,
    diag_weight: f64,
) -> Result<WickElement> {
    let kernel = LevyAreaTensor::new(grid, s, t, side, diag_weight)?;
    let mut out = levy_area_of(&kernel.tensor, a, q)?;
    let trace = kernel.tensor.contract_slots(&[(0, 1)])?.as_scalar()?;
    out.add_scaled(trace, &delta_q(a, q))?;
    Ok(out)
}

/// `𝔹(s,t) − 𝔹(s,u) − 𝔹(u,t)` minus the product of increments it should equal.
///
/// For `Left` the product is `B(s,u) a B(u,t)`, for `Right` it is
/// `B(u,t) a B(s,u)`. The returned element is zero up to rounding.
#[allow(clippy::too_many_arguments)]
pub fn chen_residual(
    s: f64,
    u: f64,
    t: f64,
    a: &WickElement,
    side: Side,
    grid: &TimeGrid,
    q: f64,
    diag_weight: f64,
) -> Result<WickElement> {
    if !(s <= u && u <= t) {
        return Err(Error::InvalidArgument(format!(
            "Chen identity needs s ≤ u ≤ t, got {s}, {u}, {t}"
        )));
    }
    let full = levy_area(a, s, t, side, grid, q, diag_weight)?;
    let first = levy_area(a, s, u, side, grid, q, diag_weight)?;
    let second = levy_area(a, u, t, side, grid, q, diag_weight)?;
    let (early, late) = (qbm(s, u, grid)?, qbm(u, t, grid)?);
    let product = match side {
        Side::Left => multiply_all(grid.cells(), &[early, a.clone(), late], q)?,
        Side::Right => multiply_all(grid.cells(), &[late, a.clone(), early], q)?,
    };
    full.minus(&first)?.minus(&second)?.minus(&product)
}

/// Relabels the cells of a Wick element by time reversal `k ↦ m − 1 − k`.
pub fn time_reversed(a: &WickElement) -> Result<WickElement> {
    let d = a.dim();
    let mut out = WickElement::zero(d);
    for t in a.components().values() {
        let mut r = FockTensor::zeros(d, t.degree())?;
        for (word, v) in t.entries() {
            let flipped: Vec<usize> = word.iter().map(|&k| d - 1 - k).collect();
            let idx = r.index_of(&flipped)?;
            r.coeffs_mut()[idx] = v;
        }
        out.add_tensor(1.0, &r)?;
    }
    Ok(out)
}

/// An even bump function supported on `[−1, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct Mollifier {
    name: &'static str,
    density: fn(f64) -> f64,
}

impl Mollifier {
    /// Wraps a density; it is only evaluated on `[−1, 1]`.
    pub fn new(name: &'static str, density: fn(f64) -> f64) -> Self {
        Self { name, density }
    }

    /// `(15/16)(1 − x²)²`.
    pub fn quartic() -> Self {
        Self::new("quartic", |x| 15.0 / 16.0 * (1.0 - x * x).powi(2))
    }

    /// `1 − |x|`.
    pub fn triangle() -> Self {
        Self::new("triangle", |x| 1.0 - x.abs())
    }

    /// Looks up a built-in mollifier by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "quartic" => Ok(Self::quartic()),
            "triangle" => Ok(Self::triangle()),
            other => Err(Error::InvalidArgument(format!("unknown mollifier {other:?}"))),
        }
    }

    /// The name given at construction.
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// `ρ(x)`, zero outside `[−1, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() > 1.0 {
            0.0
        } else {
            (self.density)(x)
        }
    }

    /// `ρ_ε(x) = ρ(x/ε)/ε`.
    pub fn scaled(&self, eps: f64, x: f64) -> f64 {
        self.eval(x / eps) / eps
    }
}

/// Absolute tolerance of the adaptive quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

/// Integrates `f` over `[a, b]` by adaptive Simpson to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a >= b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integrates over `[a, b]` after splitting at the given interior break points.
fn integrate_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut points = vec![a];
    points.extend(breaks.iter().copied().filter(|&x| a < x && x < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    let pieces = (points.len() - 1) as f64;
    points
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces))
        .sum()
}

/// The BPHZ constant `∫₀^∞ ∫ ρ_ε(s − z) ρ_ε(z) dz ds`.
///
/// The mollifier must integrate to one and be even; the result is then ½ for
/// every `ε > 0`. Both integrals are split at the kinks of the integrand so
/// that adaptive Simpson converges quickly.
pub fn bphz_constant(mollifier: &Mollifier, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let rho = |x: f64| mollifier.eval(x);
    let mass = integrate_split(&rho, -1.0, 1.0, &[0.0], QUADRATURE_TOLERANCE);
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(mass));
    }
    let samples = 64;
    let odd = (1..=samples)
        .map(|i| i as f64 / samples as f64)
        .any(|x| (mollifier.eval(x) - mollifier.eval(-x)).abs() > 1e-12);
    if odd {
        return Err(Error::InvalidArgument(format!(
            "mollifier {:?} is not even",
            mollifier.name()
        )));
    }
    // (ρ_ε * ρ_ε)(s) is supported on |s| ≤ 2ε and the factors have kinks at z = 0 and z = s.
    let inner_tol = QUADRATURE_TOLERANCE * 1e-2;
    let convolution = |s: f64| {
        let (lo, hi) = ((s - eps).max(-eps), (s + eps).min(eps));
        integrate_split(
            &|z: f64| mollifier.scaled(eps, s - z) * mollifier.scaled(eps, z),
            lo,
            hi,
            &[0.0, s],
            inner_tol,
        )
    };
    Ok(integrate_split(&convolution, 0.0, 2.0 * eps, &[eps], QUADRATURE_TOLERANCE))
}

/// Convention for the second noncommutative derivative of `x^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Sum over `r < s` of `X^{r−1} ⊗ X^{s−r−1} ⊗ X^{p−s}`.
    Unordered,
    /// Sum over `r ≠ s`, which doubles the unordered sum.
    Ordered,
}

impl Convention {
    fn factor(self) -> f64 {
        match self {
            Convention::Unordered => 1.0,
            Convention::Ordered => 2.0,
        }
    }
}

/// Exact pieces of one Itô step for `F(x) = x^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ItoStep {
    /// The increment's squared norm `⟨δ, δ⟩ = dt`.
    pub dt: f64,
    /// `F(X+Y) − F(X) − Σ_r X^{r−1} Y X^{p−r}`.
    pub residual: WickElement,
    /// `Δ^{R;(1,1),(1,2)}` of the unordered second derivative (with `2C = 1`).
    pub prediction: WickElement,
}

impl ItoStep {
    /// The chaos `≤ p−2` part of the residual minus `dt` times the prediction.
    pub fn defect(&self, p: usize, convention: Convention) -> Result<WickElement> {
        self.residual
            .truncated(p.saturating_sub(2))
            .minus(&self.prediction.scaled(self.dt * convention.factor()))
    }
}

/// One Itô step from `X = B(0,t)` with increment `Y` of variance `⟨y, y⟩`.
///
/// `x` and `y` are the coordinate vectors of the two (orthogonal) noises.
pub fn ito_step(p: usize, x: &[f64], y: &[f64], q: f64) -> Result<ItoStep> {
    if !(2..=4).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "Itô residual supports p ∈ {{2, 3, 4}}, got {p}"
        )));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let d = x.len();
    let (xe, ye) = (WickElement::field(x), WickElement::field(y));
    let mut powers = vec![WickElement::one(d)];
    for k in 1..=p {
        powers.push(multiply(&powers[k - 1], &xe, q)?);
    }
    let sum = xe.plus(&ye)?;
    let mut full = WickElement::one(d);
    for _ in 0..p {
        full = multiply(&full, &sum, q)?;
    }
    let mut residual = full.minus(&powers[p])?;
    for r in 1..=p {
        let term = multiply_all(d, &[powers[r - 1].clone(), ye.clone(), powers[p - r].clone()], q)?;
        residual = residual.minus(&term)?;
    }

    let pattern = one_insertion();
    let pi = Pairing::new(vec![(1, 2)], pattern.legs())?;
    let unit = FockTensor::scalar(d, 1.0);
    let mut prediction = WickElement::zero(d);
    for r in 1..=p {
        for s in r + 1..=p {
            let ops = [
                powers[r - 1].clone(),
                powers[s - r - 1].clone(),
                powers[p - s].clone(),
            ];
            prediction.add_scaled(1.0, &delta_r(&pattern, &pi, &unit, &ops, q)?)?;
        }
    }
    let dt = y.iter().map(|v| v * v).sum();
    Ok(ItoStep {
        dt,
        residual,
        prediction,
    })
}

/// One Itô step on the grid: `X = B(0,t)` and `Y = B(t, t+dt)`.
pub fn ito_step_on_grid(p: usize, t: f64, grid: &TimeGrid, q: f64) -> Result<ItoStep> {
    let x = grid.indicator(0.0, t)?;
    let y = grid.indicator(t, t + grid.dt())?;
    ito_step(p, &x, &y, q)
}

/// One Itô step written in the two-dimensional frame spanned by the
/// normalised past `1_{[0,t]}/√t` and the normalised increment.
///
/// All quantities are invariant under orthogonal changes of basis, so this
/// agrees with [`ito_step_on_grid`] while staying cheap on fine grids.
pub fn ito_step_in_frame(p: usize, t: f64, grid: &TimeGrid, q: f64) -> Result<ItoStep> {
    let k = grid.point(t)?;
    if k >= grid.cells() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} leaves no room for an increment before T = {}",
            grid.horizon()
        )));
    }
    let past = (k as f64 * grid.dt()).sqrt();
    ito_step(p, &[past, 0.0], &[0.0, grid.dt().sqrt()], q)
}

/// Residual norms for one convention across a family of grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionFit {
    /// The convention.
    pub convention: Convention,
    /// `|||defect|||` for each grid.
    pub residual_norms: Vec<f64>,
    /// Least-squares slope of `log residual` against `log dt`; absent when a residual is zero.
    pub fit_slope: Option<f64>,
}

/// Summary of the Itô residual over a family of grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoReport {
    /// Degree of `F(x) = x^p`.
    pub p: usize,
    /// Deformation parameter.
    pub q: f64,
    /// Cell counts of the grids.
    pub grids: Vec<usize>,
    /// Residual norms under the matched (or, failing that, unordered) convention.
    pub residual_norms: Vec<f64>,
    /// Fitted slope for those residuals.
    pub fit_slope: Option<f64>,
    /// `"ordered"`, `"unordered"` or `"neither"`.
    pub matched_convention: String,
    /// Per-convention details.
    pub conventions: Vec<ConventionFit>,
}

/// Residuals below this are treated as exactly zero.
const ZERO_RESIDUAL: f64 = 1e-13;
/// A convention matches if its defect vanishes faster than `dt` by this margin.
const MATCH_SLOPE: f64 = 1.25;

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the Itô step at time `t` on each grid of horizon `horizon` and
/// fits the convergence rate of the defect for both conventions.
pub fn ito_report(p: usize, t: f64, horizon: f64, grids: &[usize], q: f64) -> Result<ItoReport> {
    if grids.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mut fits = Vec::new();
    for convention in [Convention::Unordered, Convention::Ordered] {
        let mut norms = Vec::new();
        let mut log_dt = Vec::new();
        for &m in grids {
            let grid = TimeGrid::new(horizon, m)?;
            let step = ito_step_in_frame(p, t, &grid, q)?;
            norms.push(triple_norm(&step.defect(p, convention)?, q)?);
            log_dt.push(grid.dt().ln());
        }
        let slope = if norms.iter().any(|&r| r <= ZERO_RESIDUAL) {
            None
        } else {
            fit_slope(&log_dt, &norms.iter().map(|r| r.ln()).collect::<Vec<_>>())
        };
        fits.push(ConventionFit {
            convention,
            residual_norms: norms,
            fit_slope: slope,
        });
    }
    let matches = |f: &ConventionFit| {
        f.residual_norms.iter().all(|&r| r <= ZERO_RESIDUAL)
            || f.fit_slope.is_some_and(|s| s >= MATCH_SLOPE)
    };
    let matched: Vec<&ConventionFit> = fits.iter().filter(|f| matches(f)).collect();
    let (chosen, label) = match matched.as_slice() {
        [only] => (*only, format!("{:?}", only.convention).to_lowercase()),
        _ => (&fits[0], "neither".to_string()),
    };
    Ok(ItoReport {
        p,
        q,
        grids: grids.to_vec(),
        residual_norms: chosen.residual_norms.clone(),
        fit_slope: chosen.fit_slope,
        matched_convention: label,
        conventions: fits.clone(),
    })
}
