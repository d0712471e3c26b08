//! Radial kernel basis functions.
//!
//! Each kernel is a pair `(F, f)`: the radial profile `F` with
//! `K(x, y) = F(‖x − y‖)` and its sliced counterpart `f` satisfying
//! `E_{ξ ~ U(S^{d−1})}[f(|⟨ξ, x⟩|)] = F(‖x‖)`. For positive definite
//! kernels the module also evaluates the 1D spectral density of `f`,
//! normalized so it integrates to `f(0) = 1`.
//!
//! Evaluation of `f` mixes closed forms (Riesz, thin plate), power series
//! (Gauss, Laplace, guarded by a cancellation bound), and a cosine
//! transform of the spectral density (Matérn, and the series overflow
//! regimes). [`SlicedEval`] wraps the same values behind a piecewise
//! Chebyshev proxy for bulk evaluation.
//!
//! The "sliced Laplace" pairing (f exponential, F a Bessel/Struve
//! combination) is not supported: all families here are specified by
//! their radial profile F.

use crate::math::{self, harmonic, ln_gamma};
use crate::points::{self, PointSet};
use crate::quad;
use crate::rng::SplitMix64;
use crate::{Error, Result};

use std::f64::consts::{PI, TAU};

/// Kernel family with exactly its own parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelFamily {
    /// `F(t) = exp(−t²/(2σ²))`
    Gauss { sigma: f64 },
    /// `F(t) = exp(−αt)`
    Laplace { alpha: f64 },
    /// `F(t) = 2^{1−ν}/Γ(ν) (√(2ν) t/β)^ν K_ν(√(2ν) t/β)`
    Matern { beta: f64, nu: f64 },
    /// Generalized Riesz `F(t) = −t^r`, r > −1
    Riesz { r: f64 },
    /// `F(t) = t² log t`
    ThinPlate,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gauss { .. } => "gauss",
            KernelFamily::Laplace { .. } => "laplace",
            KernelFamily::Matern { .. } => "matern",
            KernelFamily::Riesz { .. } => "riesz",
            KernelFamily::ThinPlate => "thinplate",
        }
    }
}

/// A kernel family together with the ambient dimension `d ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension must be at least 2, got {dim}"
            )));
        }
        let positive = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match family {
            KernelFamily::Gauss { sigma } => positive("sigma", sigma)?,
            KernelFamily::Laplace { alpha } => positive("alpha", alpha)?,
            KernelFamily::Matern { beta, nu } => {
                positive("beta", beta)?;
                positive("nu", nu)?;
            }
            KernelFamily::Riesz { r } => {
                if !(r.is_finite() && r > -1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "riesz exponent must satisfy r > -1, got {r}"
                    )));
                }
            }
            KernelFamily::ThinPlate => {}
        }
        Ok(Self { family, dim })
    }

    pub fn gauss(sigma: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gauss { sigma }, dim)
    }

    pub fn laplace(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Laplace { alpha }, dim)
    }

    pub fn matern(beta: f64, nu: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Matern { beta, nu }, dim)
    }

    pub fn riesz(r: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Riesz { r }, dim)
    }

    pub fn thin_plate(dim: usize) -> Result<Self> {
        Self::new(KernelFamily::ThinPlate, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_positive_definite(&self) -> bool {
        matches!(
            self.family,
            KernelFamily::Gauss { .. } | KernelFamily::Laplace { .. } | KernelFamily::Matern { .. }
        )
    }

    /// Same kernel in a rescaled geometry: `σ̃ = τσ`, `α̃ = α/τ`, `β̃ = τβ`.
    pub fn rescaled(&self, tau: f64) -> Result<Self> {
        let family = match self.family {
            KernelFamily::Gauss { sigma } => KernelFamily::Gauss { sigma: tau * sigma },
            KernelFamily::Laplace { alpha } => KernelFamily::Laplace { alpha: alpha / tau },
            KernelFamily::Matern { beta, nu } => KernelFamily::Matern { beta: tau * beta, nu },
            other => other,
        };
        Self::new(family, self.dim)
    }

    /// The radial profile `F(t)`.
    pub fn basis(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain(format!("basis argument must be nonnegative, got {t}")));
        }
        Ok(match self.family {
            KernelFamily::Gauss { sigma } => (-t * t / (2.0 * sigma * sigma)).exp(),
            KernelFamily::Laplace { alpha } => (-alpha * t).exp(),
            KernelFamily::Matern { beta, nu } => {
                let u = (2.0 * nu).sqrt() * t / beta;
                if u < 1e-10 {
                    1.0
                } else {
                    let ln_pref = (1.0 - nu) * 2.0f64.ln() - ln_gamma(nu) + nu * u.ln();
                    let k = math::bessel_k(nu, u);
                    if k == 0.0 {
                        0.0
                    } else {
                        (ln_pref + k.ln()).exp()
                    }
                }
            }
            KernelFamily::Riesz { r } => {
                if t == 0.0 {
                    if r > 0.0 {
                        0.0
                    } else if r == 0.0 {
                        -1.0
                    } else {
                        return Err(Error::Domain(
                            "riesz kernel with negative exponent diverges at t = 0".into(),
                        ));
                    }
                } else {
                    -t.powf(r)
                }
            }
            KernelFamily::ThinPlate => {
                // limit of t² log t at zero
                if t == 0.0 {
                    0.0
                } else {
                    t * t * t.ln()
                }
            }
        })
    }

    /// The sliced profile `f(t)` with `E_ξ[f(|⟨ξ,x⟩|)] = F(‖x‖)`.
    pub fn sliced_basis(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain(format!("sliced basis argument must be nonnegative, got {t}")));
        }
        let d = self.dim as f64;
        match self.family {
            KernelFamily::Gauss { sigma } => {
                let z = t * t / (2.0 * sigma * sigma);
                if gauss_series_ok(d, z) {
                    Ok(gauss_sliced_series(d, z))
                } else {
                    self.sliced_by_transform(t, 1e-10)
                }
            }
            KernelFamily::Laplace { alpha } => {
                let u = alpha * t;
                if laplace_series_ok(d, u) {
                    Ok(laplace_sliced_series(d, u))
                } else {
                    self.sliced_by_transform(t, 1e-10)
                }
            }
            KernelFamily::Matern { .. } => self.sliced_by_transform(t, 1e-10),
            KernelFamily::Riesz { r } => {
                if t == 0.0 && r < 0.0 {
                    return Err(Error::Domain(
                        "riesz kernel with negative exponent diverges at t = 0".into(),
                    ));
                }
                let c = riesz_slice_constant(self.dim, r);
                Ok(if t == 0.0 && r > 0.0 { 0.0 } else { -c * t.powf(r) })
            }
            KernelFamily::ThinPlate => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let c_d = thin_plate_slice_offset(self.dim);
                Ok(d * t * t * t.ln() + c_d * t * t)
            }
        }
    }

    /// 1D spectral density of `f(|·|)` under the convention
    /// `F₁[g](ω) = ∫ g(x) e^{−2πiωx} dx`; even in ω and integrating to
    /// `f(0) = 1`. Only positive definite kernels have one.
    pub fn spectral_density_1d(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::Domain("non-finite frequency".into()));
        }
        if !self.is_positive_definite() {
            return Err(Error::Unsupported(format!(
                "kernel family {} has no 1D spectral density (distributional transform only)",
                self.family.name()
            )));
        }
        Ok(self.density_unchecked(omega.abs()))
    }

    /// Density in log-stable form; `w = |omega| >= 0`, PD family only.
    fn density_unchecked(&self, w: f64) -> f64 {
        let d = self.dim as f64;
        if w == 0.0 {
            // ω^{d−1} factor, d ≥ 2
            return 0.0;
        }
        let lw = w.ln();
        let ln_dens = match self.family {
            KernelFamily::Gauss { sigma } => {
                let a = 2.0 * PI * PI * sigma * sigma;
                0.5 * d * a.ln() - ln_gamma(0.5 * d) + (d - 1.0) * lw - a * w * w
            }
            KernelFamily::Laplace { alpha } => {
                ln_gamma(0.5 * (d + 1.0)) + d * 2.0f64.ln() + 0.5 * (2.0 * d - 1.0) * PI.ln()
                    - ln_gamma(0.5 * d)
                    - d * alpha.ln()
                    + (d - 1.0) * lw
                    - 0.5 * (d + 1.0) * (1.0 + 4.0 * PI * PI * w * w / (alpha * alpha)).ln()
            }
            KernelFamily::Matern { beta, nu } => {
                ln_gamma(nu + 0.5 * d) + 0.5 * d * 2.0f64.ln() + d * PI.ln() + d * beta.ln()
                    - ln_gamma(nu)
                    - 0.5 * d * nu.ln()
                    - ln_gamma(0.5 * d)
                    + (d - 1.0) * lw
                    - (nu + 0.5 * d) * (1.0 + 2.0 * PI * PI * beta * beta * w * w / nu).ln()
            }
            _ => unreachable!("checked positive definite"),
        };
        if ln_dens < -745.0 {
            0.0
        } else {
            ln_dens.exp()
        }
    }

    /// Characteristic frequency scale of the spectral density.
    fn density_scale(&self) -> f64 {
        let d = self.dim as f64;
        match self.family {
            KernelFamily::Gauss { sigma } => (d - 1.0).sqrt().max(1.0) / (TAU * sigma),
            KernelFamily::Laplace { alpha } => alpha * (d - 1.0).sqrt().max(1.0) / TAU,
            KernelFamily::Matern { beta, nu } => {
                ((nu * (d - 1.0) / (2.0 * nu + 1.0)).sqrt().max(1.0)) / (TAU * beta) * 2.0
            }
            _ => 1.0,
        }
    }

    /// `f(t) = 2 ∫_0^∞ η(ω) cos(2πωt) dω` with a certified tail.
    fn sliced_by_transform(&self, t: f64, tol: f64) -> Result<f64> {
        if !self.is_positive_definite() {
            return Err(Error::Unsupported(
                "transform evaluation requires a positive definite kernel".into(),
            ));
        }
        let dens = |w: f64| self.density_unchecked(w);
        cosine_transform(&dens, self.density_scale(), t, tol)
    }
}

/// `√π Γ((d+r)/2) / (Γ(d/2) Γ((r+1)/2))`, the Riesz slicing factor.
pub fn riesz_slice_constant(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    (0.5 * PI.ln() + ln_gamma(0.5 * (d + r)) - ln_gamma(0.5 * d) - ln_gamma(0.5 * (r + 1.0))).exp()
}

/// `C_d = (d/2)(H_{d/2} − 2 + log 4)` for the sliced thin plate spline.
pub fn thin_plate_slice_offset(dim: usize) -> f64 {
    let d = dim as f64;
    0.5 * d * (harmonic(0.5 * d) - 2.0 + 4.0f64.ln())
}

// ---------------------------------------------------------------------------
// Series evaluations
// ---------------------------------------------------------------------------

/// Cancellation guard for the Gauss sliced series at argument z = t²/(2σ²):
/// the Kummer-transformed series loses at most e^{2√(2dz) − z} ε absolutely.
fn gauss_series_ok(d: f64, z: f64) -> bool {
    z <= 30.0 && 2.0 * (2.0 * d * z).sqrt() <= z + 12.0
}

/// `₁F₁(d/2; 1/2; −z)` via the Kummer transform `e^{−z} ₁F₁((1−d)/2; 1/2; z)`,
/// which terminates for odd d and avoids the alternating hump otherwise.
fn gauss_sliced_series(d: f64, z: f64) -> f64 {
    (-z).exp() * math::kummer_1f1(0.5 * (1.0 - d), 0.5, z)
}

/// Cancellation guard for the Laplace sliced series at u = αt.
fn laplace_series_ok(d: f64, u: f64) -> bool {
    u <= 10.0 && 1.5 * (u * (0.5 * d).sqrt()).powf(2.0 / 3.0) <= u + 12.0
}

/// `Σ_n (−1)^n √π Γ((n+d)/2) / (n! Γ(d/2) Γ((n+1)/2)) u^n` with the even and
/// odd chains advanced by the two-step ratio `u²(n+d)/((n+1)²(n+2))`.
fn laplace_sliced_series(d: f64, u: f64) -> f64 {
    let t0 = 1.0;
    let t1 = -u * (0.5 * PI.ln() + ln_gamma(0.5 * (d + 1.0)) - ln_gamma(0.5 * d)).exp();
    let mut even = t0;
    let mut odd = t1;
    let mut sum = t0 + t1;
    let mut comp = 0.0f64;
    let u2 = u * u;
    let mut n = 0.0f64;
    loop {
        even *= u2 * (n + d) / ((n + 1.0) * (n + 1.0) * (n + 2.0));
        odd *= u2 * (n + 1.0 + d) / ((n + 2.0) * (n + 2.0) * (n + 3.0));
        let add = even + odd;
        let y = add - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        n += 2.0;
        if (even.abs() + odd.abs()) <= f64::EPSILON * sum.abs().max(1e-30) && n > 2.0 * u {
            break;
        }
        if n > 40_000.0 {
            break;
        }
    }
    sum
}

// ---------------------------------------------------------------------------
// Cosine transform with tail control
// ---------------------------------------------------------------------------

/// Numeric tail mass `∫_W^∞ |η|` by geometric panels; `None` when it does not
/// contract fast enough to trust.
fn tail_mass(dens: &dyn Fn(f64) -> f64, w: f64, tol: f64) -> Option<f64> {
    let mut total = 0.0;
    let mut lo = w;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let (v, _) = quad::gk15(&|x: f64| dens(x).abs(), lo, 2.0 * lo);
        total += v;
        if v < tol / 8.0 && v <= last {
            // remaining tail bounded by a geometric continuation
            return Some(total + v);
        }
        last = v;
        lo *= 2.0;
    }
    None
}

/// `2 ∫_0^∞ η(ω) cos(2πωt) dω` with absolute tolerance `tol`.
///
/// The cutoff W doubles until either the tail mass is below tolerance or,
/// for slowly decaying densities and t > 0, an integration-by-parts tail
/// correction applies (boundary terms through η″, residual ~ |η″|/s³).
fn cosine_transform(
    dens: &dyn Fn(f64) -> f64,
    scale_hint: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    // Locate the density peak on a geometric grid around the scale hint.
    let mut peak_w = scale_hint;
    let mut peak_v = 0.0f64;
    for k in -24..=48 {
        let w = scale_hint * 2.0f64.powf(k as f64 / 4.0);
        let v = dens(w);
        if v > peak_v {
            peak_v = v;
            peak_w = w;
        }
    }
    if peak_v == 0.0 {
        return Ok(0.0);
    }
    let s = TAU * t;
    let mut w_cut = 16.0 * peak_w;
    let mut best_residual = f64::INFINITY;
    for _ in 0..44 {
        let mass = tail_mass(dens, w_cut, tol);
        let mut correction = None;
        let mut residual = mass.unwrap_or(f64::INFINITY);
        if let Some(m) = mass {
            if 2.0 * m <= 0.5 * tol {
                correction = Some(0.0);
                residual = 2.0 * m;
            }
        }
        if correction.is_none() && s * w_cut >= 30.0 {
            let h = 1e-3 * w_cut;
            let g = dens(w_cut);
            let gp = (dens(w_cut + h) - dens(w_cut - h)) / (2.0 * h);
            let gpp = (dens(w_cut + h) - 2.0 * g + dens(w_cut - h)) / (h * h);
            let tail = -g * (s * w_cut).sin() / s - gp * (s * w_cut).cos() / (s * s)
                + gpp * (s * w_cut).sin() / (s * s * s);
            let est = 2.0 * (2.0 * gpp.abs() / (s * s * s) + g.abs() * 1e-12);
            if est <= 0.5 * tol {
                correction = Some(2.0 * tail);
                residual = est;
            }
        }
        best_residual = best_residual.min(residual);
        if let Some(corr) = correction {
            let f = |w: f64| dens(w) * (s * w).cos();
            let n0 = ((10.0 * w_cut * t).ceil() as usize).clamp(32, 60_000);
            let out = quad::adaptive(&f, 0.0, w_cut, 0.45 * tol, n0, 2_500_000);
            return match out {
                Ok(o) => Ok(2.0 * o.value + corr),
                Err(o) => Err(Error::Evaluation {
                    msg: "cosine transform did not converge".into(),
                    residual: o.abs_err,
                }),
            };
        }
        w_cut *= 2.0;
    }
    Err(Error::Evaluation {
        msg: "cosine transform tail not controllable".into(),
        residual: best_residual,
    })
}

// ---------------------------------------------------------------------------
// Median rule
// ---------------------------------------------------------------------------

/// Bandwidth selection rule: `γ ·` median of sampled pairwise distances.
#[derive(Clone, Copy, Debug)]
pub struct ScaleRule {
    pub gamma: f64,
    pub sample_size: usize,
}

impl ScaleRule {
    pub fn new(gamma: f64, sample_size: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        if sample_size == 0 {
            return Err(Error::InvalidParameter("sample_size must be at least 1".into()));
        }
        Ok(Self { gamma, sample_size })
    }
}

impl Default for ScaleRule {
    fn default() -> Self {
        Self { gamma: 1.0, sample_size: 1000 }
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `γ ·` median of `‖x − y‖` over `sample_size` seeded random pairs.
///
/// Inputs are put in a canonical (lexicographic) order before sampling, so
/// the result is invariant under permutation of either point set.
pub fn median_rule(a: &PointSet, b: &PointSet, rule: &ScaleRule, seed: u64) -> Result<f64> {
    if a.n() == 0 || b.n() == 0 {
        return Err(Error::InvalidParameter("median rule requires non-empty point sets".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter("point sets have different dimensions".into()));
    }
    let order = |p: &PointSet| {
        let mut idx: Vec<usize> = (0..p.n()).collect();
        idx.sort_by(|&i, &j| {
            p.row(i)
                .iter()
                .zip(p.row(j))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx
    };
    let ia = order(a);
    let ib = order(b);
    let mut rng = SplitMix64::new(seed);
    let mut dists: Vec<f64> = (0..rule.sample_size)
        .map(|_| {
            let x = a.row(ia[rng.below(a.n())]);
            let y = b.row(ib[rng.below(b.n())]);
            points::dist(x, y)
        })
        .collect();
    let med = median(&mut dists);
    if med == 0.0 {
        return Err(Error::DegenerateData("median of sampled pairwise distances is zero".into()));
    }
    Ok(rule.gamma * med)
}

// ---------------------------------------------------------------------------
// Projection sampler
// ---------------------------------------------------------------------------

/// Draw `t = ⟨ξ, x⟩/‖x‖` for ξ uniform on `S^{d−1}`: density ∝ (1−t²)^{(d−3)/2}
/// on [−1, 1], sampled through `t = ±√u`, `u ~ Beta(1/2, (d−1)/2)`.
pub fn sample_projection(dim: usize, rng: &mut SplitMix64) -> f64 {
    debug_assert!(dim >= 2);
    let u = rng.beta(0.5, 0.5 * (dim as f64 - 1.0));
    let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
    sign * u.sqrt()
}

// ---------------------------------------------------------------------------
// Bulk evaluator
// ---------------------------------------------------------------------------

enum EvalRoute {
    /// Series / closed forms are cheap enough to call directly.
    Direct,
    /// Piecewise Chebyshev proxy over dyadic subintervals of [0, t_max].
    Cheb { pieces: Vec<ChebPiece>, t_max: f64 },
}

pub(crate) struct ChebPiece {
    lo: f64,
    hi: f64,
    coef: Vec<f64>,
}

/// Fast repeated evaluation of the sliced basis on `[0, t_max]`.
///
/// Absolute accuracy is ~1e−8 against [`KernelSpec::sliced_basis`]; the
/// Matérn route replaces per-call quadrature with a Chebyshev table.
pub struct SlicedEval {
    kernel: KernelSpec,
    route: EvalRoute,
}

impl SlicedEval {
    pub fn new(kernel: &KernelSpec, t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(Error::InvalidParameter("t_max must be nonnegative".into()));
        }
        let route = match kernel.family() {
            KernelFamily::Matern { .. } => build_cheb(kernel, t_max.max(1e-6))?,
            _ => EvalRoute::Direct,
        };
        Ok(Self { kernel: *kernel, route })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// f(t) for t ≥ 0. Falls back to the exact path outside the table range.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.route {
            EvalRoute::Direct => self.kernel.sliced_basis(t).unwrap_or(f64::NAN),
            EvalRoute::Cheb { pieces, t_max } => {
                if t > *t_max {
                    return self.kernel.sliced_basis(t).unwrap_or(f64::NAN);
                }
                cheb_table_eval(pieces, *t_max, t)
            }
        }
    }
}

fn piece_index(pieces: &[ChebPiece], t: f64, t_max: f64) -> usize {
    // pieces[0] = [0, t_max 2^{1−J}], pieces[j>0] dyadic up to t_max.
    let last = pieces.len() - 1;
    if t <= pieces[0].hi {
        return 0;
    }
    let j = (t_max / t).log2().floor() as isize; // t in (t_max 2^{−j−1}, t_max 2^{−j}]
    let idx = (last as isize - j).clamp(1, last as isize) as usize;
    // fp guard at piece boundaries
    if t < pieces[idx].lo && idx > 0 {
        idx - 1
    } else if t > pieces[idx].hi && idx < last {
        idx + 1
    } else {
        idx
    }
}

/// Dyadic piecewise Chebyshev table for a smooth function on [0, t_max]
/// (smooth away from a possible algebraic singularity at 0). Verified
/// against the exact evaluator at off-node points before use.
pub(crate) fn cheb_table(
    f: &dyn Fn(f64) -> Result<f64>,
    t_max: f64,
) -> Result<Vec<ChebPiece>> {
    const LEVELS: usize = 26;
    const DEGREE: usize = 28;
    let mut pieces = Vec::with_capacity(LEVELS + 1);
    let eps = t_max * (0.5f64).powi(LEVELS as i32);
    let fit = |lo: f64, hi: f64, n: usize| -> Result<ChebPiece> {
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            let u = (PI * (k as f64 + 0.5) / n as f64).cos();
            let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * u;
            vals.push(f(x)?);
        }
        Ok(ChebPiece { lo, hi, coef: cheb_coef(&vals) })
    };
    pieces.push(fit(0.0, eps, 8)?);
    for j in (0..LEVELS).rev() {
        let hi = t_max * (0.5f64).powi(j as i32);
        pieces.push(fit(0.5 * hi, hi, DEGREE)?);
    }
    for i in 1..=7 {
        let t = t_max * (i as f64 / 7.5).powi(3);
        let exact = f(t)?;
        let got = cheb_table_eval(&pieces, t_max, t);
        if (got - exact).abs() > 5e-8 * (1.0 + exact.abs()) {
            return Err(Error::Evaluation {
                msg: "chebyshev proxy failed verification".into(),
                residual: (got - exact).abs(),
            });
        }
    }
    Ok(pieces)
}

pub(crate) fn cheb_table_eval(pieces: &[ChebPiece], t_max: f64, t: f64) -> f64 {
    let idx = piece_index(pieces, t, t_max);
    let p = &pieces[idx];
    cheb_eval(&p.coef, p.lo, p.hi, t)
}

fn build_cheb(kernel: &KernelSpec, t_max: f64) -> Result<EvalRoute> {
    let k = *kernel;
    let pieces = cheb_table(&move |t| k.sliced_basis(t), t_max)?;
    Ok(EvalRoute::Cheb { pieces, t_max })
}

/// Chebyshev coefficients from values at the n Chebyshev points.
fn cheb_coef(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let mut coef = vec![0.0; n];
    for (j, c) in coef.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, v) in vals.iter().enumerate() {
            s += v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos();
        }
        *c = 2.0 * s / n as f64;
    }
    coef
}

/// Clenshaw evaluation with the halved-c₀ convention.
fn cheb_eval(coef: &[f64], lo: f64, hi: f64, x: f64) -> f64 {
    let u = (2.0 * x - lo - hi) / (hi - lo);
    let mut d = 0.0;
    let mut dd = 0.0;
    for &c in coef.iter().skip(1).rev() {
        let sv = d;
        d = 2.0 * u * d - dd + c;
        dd = sv;
    }
    u * d - dd + 0.5 * coef[0]
}
