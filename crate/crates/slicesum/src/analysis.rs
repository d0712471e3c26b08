//! Slicing-error analysis: closed-form variances, Monte Carlo estimates,
//! and convergence-rate experiments.
//!
//! The slicing variance `V_d[f](x) = E_ξ[(f(|⟨ξ,x⟩|) − F(‖x‖))²]` controls
//! the mean squared error of P-slice averages through Bienaymé's identity
//! (MSE = V/P for iid directions). Closed forms exist for the Riesz kernel
//! (any d), Laplace/Gauss at d = 3, and asymptotically for the thin plate
//! spline; every positive definite kernel has the bound `F(0)² − F(‖x‖)²`.

use crate::directions::{self, Generator};
use crate::fastsum::SpectralSampler;
use crate::kernels::{sample_projection, KernelFamily, KernelSpec, SlicedEval};
use crate::math::{digamma, gamma, trigamma, EULER_GAMMA};
use crate::points::{dot, norm};
use crate::rng::{derive_seed, SplitMix64};
use crate::{Error, Result};

use std::f64::consts::PI;

/// How a closed-form variance value is to be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarianceKind {
    /// Exact value of `V_d[f](x)`.
    Exact,
    /// Upper bound (positive definite kernels: `F(0)² − F(‖x‖)²`).
    UpperBound,
    /// Large-d asymptotic with the `O(d⁻¹ log d)` remainder dropped.
    Asymptotic,
}

#[derive(Clone, Copy, Debug)]
pub struct ClosedFormVariance {
    pub value: f64,
    pub kind: VarianceKind,
}

/// Closed-form slicing variance.
///
/// Riesz (r > 0): exact for every d. Laplace and Gauss: exact at d = 3,
/// positive-definite upper bound otherwise. Matérn: upper bound. Thin
/// plate: asymptotic. Unsupported combinations (e.g. Riesz r ≤ 0) fail
/// with a capability error rather than silently falling back.
pub fn variance_closed_form(kernel: &KernelSpec, x_norm: f64) -> Result<ClosedFormVariance> {
    if !(x_norm.is_finite() && x_norm >= 0.0) {
        return Err(Error::Domain("x norm must be nonnegative".into()));
    }
    let d = kernel.dim() as f64;
    match kernel.family() {
        KernelFamily::Riesz { r } => {
            if r <= 0.0 {
                return Err(Error::Unsupported(
                    "closed-form riesz variance requires r > 0".into(),
                ));
            }
            let factor = PI.sqrt() * gamma(r + 0.5) * gamma(0.5 * (d + r)).powi(2)
                / (gamma(0.5 * (r + 1.0)).powi(2) * gamma(0.5 * d) * gamma(r + 0.5 * d));
            Ok(ClosedFormVariance {
                value: (factor - 1.0) * x_norm.powf(2.0 * r),
                kind: VarianceKind::Exact,
            })
        }
        KernelFamily::Laplace { alpha } if kernel.dim() == 3 => {
            let u = alpha * x_norm;
            let value = if u == 0.0 {
                0.0
            } else {
                let f2 = (-2.0 * u).exp();
                (1.0 - (2.0 * u * u + 2.0 * u + 1.0) * f2) / (4.0 * u) / alpha
            };
            Ok(ClosedFormVariance { value, kind: VarianceKind::Exact })
        }
        KernelFamily::Gauss { sigma } if kernel.dim() == 3 => {
            // With u = ‖x‖²/σ², summing the d = 3 power series of V gives
            // V = u² ∫₀¹ t⁴ e^{−ut²} dt = (3 I₀(u) − (3 + 2u) e^{−u})/4,
            // I₀(u) = ∫₀¹ e^{−ut²} dt.
            let u = x_norm * x_norm / (sigma * sigma);
            let value = if u == 0.0 {
                0.0
            } else {
                let i0 = crate::quad::adaptive(&|t: f64| (-u * t * t).exp(), 0.0, 1.0, 1e-15, 8, 100_000)
                    .map(|o| o.value)
                    .unwrap_or_else(|o| o.value);
                0.25 * (3.0 * i0 - (3.0 + 2.0 * u) * (-u).exp())
            };
            Ok(ClosedFormVariance { value, kind: VarianceKind::Exact })
        }
        KernelFamily::Gauss { .. } | KernelFamily::Laplace { .. } | KernelFamily::Matern { .. } => {
            let f = kernel.basis(x_norm)?;
            Ok(ClosedFormVariance { value: 1.0 - f * f, kind: VarianceKind::UpperBound })
        }
        KernelFamily::ThinPlate => {
            // (2 + c₁/L + c₂/L²)(1 + 2/d) F² expanded as a polynomial in
            // L = log‖x‖ so the zero of F at ‖x‖ = 1 stays finite.
            let (c1, c2) = thin_plate_variance_constants();
            let l = x_norm.ln();
            let x4 = x_norm.powi(4);
            let value = (1.0 + 2.0 / d) * x4 * (2.0 * l * l + c1 * l + c2);
            Ok(ClosedFormVariance { value, kind: VarianceKind::Asymptotic })
        }
    }
}

/// `(c₁, c₂)` of the thin plate variance asymptotics
/// `V/‖x‖⁴ → 2L² + c₁L + c₂` with `L = log‖x‖` for d → ∞.
///
/// Collected from the exact Beta-moment expansion: with
/// `A = ψ(5/2) + log 2`, `B = 3γ − 8 + log 8`, `C = γ + log 2 − 2`,
/// the limit has `c₁ = 3C − B = 2` exactly and
/// `c₂ = (3/4)(ψ′(5/2) + A²) + (3/4)C² − BC/2 ≈ 0.70110`.
pub fn thin_plate_variance_constants() -> (f64, f64) {
    let a = digamma(2.5) + 2.0f64.ln();
    let b = 3.0 * EULER_GAMMA - 8.0 + 8.0f64.ln();
    let c = EULER_GAMMA + 2.0f64.ln() - 2.0;
    let c1 = 3.0 * c - b;
    let c2 = 0.75 * (trigamma(2.5) + a * a) + 0.75 * c * c - 0.5 * b * c;
    (c1, c2)
}

/// Upper bound from the Riesz variance inequality:
/// `V < √π Γ(r+1/2)/Γ((r+1)/2)² · F(‖x‖)²`.
pub fn riesz_variance_bound(r: f64, x_norm: f64) -> f64 {
    PI.sqrt() * gamma(r + 0.5) / gamma(0.5 * (r + 1.0)).powi(2) * x_norm.powf(2.0 * r)
}

/// Monte Carlo variance report.
#[derive(Clone, Debug)]
pub struct VarianceReport {
    pub closed_form: Option<ClosedFormVariance>,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub n_samples: usize,
    pub x_norm: f64,
}

/// Estimate `V_d[f](x)` as the mean of `(f(‖x‖|t|) − F(‖x‖))²` over the
/// projection density (the population mean `F` is known exactly, so the
/// standard error is the plain standard error of that mean).
pub fn variance_mc(
    kernel: &KernelSpec,
    x_norm: f64,
    n_samples: usize,
    seed: u64,
) -> Result<VarianceReport> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let f_ref = kernel.basis(x_norm)?;
    let eval = SlicedEval::new(kernel, x_norm)?;
    let mut rng = SplitMix64::new(seed);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n_samples {
        let t = sample_projection(kernel.dim(), &mut rng).abs();
        let z = eval.eval(x_norm * t) - f_ref;
        let z2 = z * z;
        sum += z2;
        sumsq += z2 * z2;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var_of_z2 = (sumsq / n - mean * mean).max(0.0);
    let stderr = (var_of_z2 / n).sqrt();
    Ok(VarianceReport {
        closed_form: variance_closed_form(kernel, x_norm).ok(),
        mc_estimate: mean,
        mc_stderr: stderr,
        n_samples,
        x_norm,
    })
}

// ---------------------------------------------------------------------------
// Rate experiments
// ---------------------------------------------------------------------------

/// Per-P error statistics and the fitted convergence rate.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub generator: String,
    pub kernel: String,
    pub dim: usize,
    pub p_values: Vec<usize>,
    pub mean_errors: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rate: f64,
    pub intercept: f64,
    pub reps: usize,
    pub n_x: usize,
    pub seed: u64,
}

impl ExperimentReport {
    /// CSV rows `generator,kernel,d,P,mean_error,std_error` plus a trailer
    /// row carrying the fitted rate and intercept in the last columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generator,kernel,d,P,mean_error,std_error\n");
        for ((p, me), se) in self.p_values.iter().zip(&self.mean_errors).zip(&self.std_errors) {
            out.push_str(&format!(
                "{},{},{},{},{:.10e},{:.10e}\n",
                self.generator, self.kernel, self.dim, p, me, se
            ));
        }
        out.push_str(&format!(
            "{},{},{},rate,{:.10e},{:.10e}\n",
            self.generator, self.kernel, self.dim, self.rate, self.intercept
        ));
        out
    }
}

/// Slicing approximation error `|F(‖x‖) − (1/P) Σ_p f(|⟨ξ_p, x⟩|)|` averaged
/// over direction realizations and samples `x ~ N(0, 0.1·I)`, for each P.
///
/// Random generators draw fresh sets per repetition; Sobol re-shifts
/// digitally; distance designs are optimized once per P and rotated by a
/// Haar-uniform orthogonal matrix per repetition (which keeps the estimator
/// unbiased without re-running the optimizer).
pub fn slicing_error_experiment(
    kernel: &KernelSpec,
    p_list: &[usize],
    generator: Generator,
    reps: usize,
    n_x: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if p_list.is_empty() || p_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("P list must be nonempty and ascending".into()));
    }
    // a single P is a valid error measurement; the rate is then undefined
    if reps == 0 || n_x == 0 {
        return Err(Error::InvalidParameter("reps and n_x must be positive".into()));
    }
    let d = kernel.dim();
    let samples = draw_experiment_samples(d, reps, n_x, seed);
    let t_max = samples
        .iter()
        .flat_map(|rep| rep.iter().map(|(xn, _)| *xn))
        .fold(0.0f64, f64::max);
    let eval = SlicedEval::new(kernel, t_max.max(1e-9))?;
    let mut mean_errors = Vec::with_capacity(p_list.len());
    let mut std_errors = Vec::with_capacity(p_list.len());
    for (ip, &p) in p_list.iter().enumerate() {
        let base = match generator {
            Generator::Distance => Some(directions::distance_design(
                p,
                d,
                &directions::EnergyOptConfig {
                    seed: derive_seed(seed, 0xd15 + ip as u64),
                    ..Default::default()
                },
            )?),
            _ => None,
        };
        let mut rep_means = Vec::with_capacity(reps);
        for (rep, xs) in samples.iter().enumerate() {
            let dirs = match &base {
                Some(b) => directions::realize_for_rep(
                    b,
                    generator,
                    p,
                    d,
                    derive_seed(seed, 0x9e + ip as u64),
                    rep as u64,
                )?,
                None => {
                    // fresh realization per rep (iid/orthogonal) or shifted Sobol
                    let s = derive_seed(derive_seed(seed, 0x9e + ip as u64), rep as u64);
                    match generator {
                        Generator::Iid => directions::iid_uniform(p, d, s)?,
                        Generator::Orthogonal => directions::orthogonal(p, d, s)?,
                        Generator::SobolSphere => directions::sobol_sphere(p, d, Some(s))?,
                        _ => {
                            return Err(Error::InvalidParameter(
                                "experiment generator needs a base direction set".into(),
                            ))
                        }
                    }
                }
            };
            let mut err_sum = 0.0;
            for (x_norm, x) in xs {
                let mut acc = 0.0;
                for xi in dirs.rows() {
                    acc += eval.eval(dot(xi, x).abs());
                }
                let approx = acc / p as f64;
                err_sum += (kernel.basis(*x_norm)? - approx).abs();
            }
            rep_means.push(err_sum / n_x as f64);
        }
        let mean: f64 = rep_means.iter().sum::<f64>() / reps as f64;
        let std = if reps > 1 {
            (rep_means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (reps as f64 - 1.0))
                .sqrt()
        } else {
            0.0
        };
        mean_errors.push(mean);
        std_errors.push(std);
    }
    let (rate, intercept) = if p_list.len() >= 2 {
        fit_rate(p_list, &mean_errors)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ExperimentReport {
        generator: generator.name().to_string(),
        kernel: kernel.family().name().to_string(),
        dim: d,
        p_values: p_list.to_vec(),
        mean_errors,
        std_errors,
        rate,
        intercept,
        reps,
        n_x,
        seed,
    })
}

/// RFF counterpart of [`slicing_error_experiment`]: the approximation is
/// `(1/D) Σ_p cos(⟨x, w_p⟩)` with iid spectral frequencies.
pub fn rff_error_experiment(
    kernel: &KernelSpec,
    d_list: &[usize],
    reps: usize,
    n_x: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if d_list.is_empty() || d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("D list must be nonempty and ascending".into()));
    }
    if reps == 0 || n_x == 0 {
        return Err(Error::InvalidParameter("reps and n_x must be positive".into()));
    }
    let sampler = SpectralSampler::new(kernel)?;
    let d = kernel.dim();
    let samples = draw_experiment_samples(d, reps, n_x, seed);
    let mut mean_errors = Vec::with_capacity(d_list.len());
    let mut std_errors = Vec::with_capacity(d_list.len());
    let mut freq = vec![0.0; d];
    for (ip, &n_feat) in d_list.iter().enumerate() {
        let mut rep_means = Vec::with_capacity(reps);
        for (rep, xs) in samples.iter().enumerate() {
            let mut rng =
                SplitMix64::new(derive_seed(derive_seed(seed, 0xff + ip as u64), rep as u64));
            let mut approx = vec![0.0; xs.len()];
            for _ in 0..n_feat {
                sampler.sample_frequency(&mut rng, &mut freq);
                for (slot, (_, x)) in approx.iter_mut().zip(xs) {
                    *slot += dot(x, &freq).cos();
                }
            }
            let mut err_sum = 0.0;
            for (slot, (x_norm, _)) in approx.iter().zip(xs) {
                err_sum += (kernel.basis(*x_norm)? - slot / n_feat as f64).abs();
            }
            rep_means.push(err_sum / n_x as f64);
        }
        let mean: f64 = rep_means.iter().sum::<f64>() / reps as f64;
        let std = if reps > 1 {
            (rep_means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (reps as f64 - 1.0))
                .sqrt()
        } else {
            0.0
        };
        mean_errors.push(mean);
        std_errors.push(std);
    }
    let (rate, intercept) = if d_list.len() >= 2 {
        fit_rate(d_list, &mean_errors)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ExperimentReport {
        generator: "rff".to_string(),
        kernel: kernel.family().name().to_string(),
        dim: d,
        p_values: d_list.to_vec(),
        mean_errors,
        std_errors,
        rate,
        intercept,
        reps,
        n_x,
        seed,
    })
}

/// `reps` batches of `n_x` samples `x ~ N(0, 0.1·I_d)`, with norms.
fn draw_experiment_samples(
    d: usize,
    reps: usize,
    n_x: usize,
    seed: u64,
) -> Vec<Vec<(f64, Vec<f64>)>> {
    let coord_std = 0.1f64.sqrt();
    (0..reps)
        .map(|rep| {
            let mut rng = SplitMix64::new(derive_seed(seed, 0xa0 + rep as u64));
            (0..n_x)
                .map(|_| {
                    let x: Vec<f64> = (0..d).map(|_| coord_std * rng.normal()).collect();
                    (norm(&x), x)
                })
                .collect()
        })
        .collect()
}

/// Median of `‖x‖` under the experiment distribution `N(0, 0.1·I_d)` —
/// the scale the median rule assigns to kernel parameters in rate runs.
pub fn median_norm_scale(d: usize, n: usize, gamma: f64, seed: u64) -> f64 {
    let coord_std = 0.1f64.sqrt();
    let mut rng = SplitMix64::new(seed);
    let mut norms: Vec<f64> = (0..n.max(1))
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| coord_std * rng.normal()).collect();
            norm(&x)
        })
        .collect();
    gamma * crate::kernels::median(&mut norms)
}

/// Least-squares regression of `log error` on `log P`; returns
/// `(r, intercept)` with `r` the negated slope.
pub fn fit_rate(p_list: &[usize], mean_errors: &[f64]) -> Result<(f64, f64)> {
    if p_list.len() != mean_errors.len() || p_list.len() < 2 {
        return Err(Error::InvalidParameter("rate fit needs at least two (P, error) pairs".into()));
    }
    if mean_errors.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Domain("rate fit requires strictly positive errors".into()));
    }
    let xs: Vec<f64> = p_list.iter().map(|&p| (p as f64).ln()).collect();
    let ys: Vec<f64> = mean_errors.iter().map(|&e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((-slope, my - slope * mx))
}

/// One-sample Kolmogorov–Smirnov statistic against U(0, 1).
pub fn ks_uniform_statistic(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (x - lo).abs().max((hi - x).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riesz_variance_exact_values() {
        // d=3, r=1, ‖x‖=1: √π/Γ(5/2) − 1 = 4/3 − 1 = 1/3
        let k = KernelSpec::riesz(1.0, 3).unwrap();
        let v = variance_closed_form(&k, 1.0).unwrap();
        assert_eq!(v.kind, VarianceKind::Exact);
        assert!((v.value - 1.0 / 3.0).abs() < 1e-13);
        // scale equivariance V(λx) = λ^{2r} V(x)
        let v2 = variance_closed_form(&k, 2.0).unwrap();
        assert!((v2.value - 4.0 * v.value).abs() < 1e-13);
        let k7 = KernelSpec::riesz(0.7, 5).unwrap();
        let a = variance_closed_form(&k7, 1.3).unwrap().value;
        let b = variance_closed_form(&k7, 2.6).unwrap().value;
        assert!((b - 2.0f64.powf(1.4) * a).abs() < 1e-12 * b.abs());
        // strict bound from the right side of the inequality
        assert!(v.value < riesz_variance_bound(1.0, 1.0));
        assert!((riesz_variance_bound(1.0, 1.0) - PI / 2.0).abs() < 1e-12);
        // unsupported exponent
        assert!(matches!(
            variance_closed_form(&KernelSpec::riesz(-0.5, 3).unwrap(), 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn laplace_gauss_d3_closed_forms() {
        let l = KernelSpec::laplace(1.0, 3).unwrap();
        let v = variance_closed_form(&l, 1.0).unwrap();
        assert_eq!(v.kind, VarianceKind::Exact);
        assert!((v.value - (1.0 - 5.0 * (-2.0f64).exp()) / 4.0).abs() < 1e-14);
        // Gauss d = 3: the closed form must reproduce the direct quadrature
        // V = ∫₀¹ f(σ·?...)² dt − F², with f the explicit d = 3 profile.
        for (sigma, x_norm) in [(1.0f64, 1.0f64), (0.7, 1.3), (2.0, 0.5)] {
            let g = KernelSpec::gauss(sigma, 3).unwrap();
            let v = variance_closed_form(&g, x_norm).unwrap();
            assert_eq!(v.kind, VarianceKind::Exact);
            let f = |t: f64| {
                let z = t * t / (2.0 * sigma * sigma);
                (1.0 - 2.0 * z) * (-z).exp()
            };
            let big_f = (-x_norm * x_norm / (2.0 * sigma * sigma)).exp();
            // t uniform on [0, 1] at d = 3
            let ef2 = crate::quad::adaptive(
                &|s: f64| f(x_norm * s).powi(2),
                0.0,
                1.0,
                1e-14,
                4,
                100_000,
            )
            .unwrap()
            .value;
            let oracle = ef2 - big_f * big_f;
            assert!(
                (v.value - oracle).abs() < 1e-12,
                "σ={sigma} ‖x‖={x_norm}: {} vs oracle {oracle}",
                v.value
            );
        }
        // frozen reference at σ = 1, ‖x‖ = 1 (erf form: (3I₀ − 5e⁻¹)/4)
        let v = variance_closed_form(&KernelSpec::gauss(1.0, 3).unwrap(), 1.0).unwrap();
        assert!((v.value - 0.100268798145017).abs() < 1e-12);
        // other dimensions downgrade to the PD bound
        let g7 = KernelSpec::gauss(1.0, 7).unwrap();
        let v = variance_closed_form(&g7, 1.0).unwrap();
        assert_eq!(v.kind, VarianceKind::UpperBound);
        let f = g7.basis(1.0).unwrap();
        assert!((v.value - (1.0 - f * f)).abs() < 1e-14);
        // bound tends to F(0)² = 1 for ‖x‖ → ∞
        let v = variance_closed_form(&g7, 50.0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    /// Exact thin plate variance from the Beta-log moments (test oracle).
    fn thin_plate_exact_variance(d: usize, s: f64) -> f64 {
        use crate::math::ln_gamma;
        let df = d as f64;
        let h = |x: f64| digamma(x + 1.0) + EULER_GAMMA;
        let g = 2.0 * s.ln() + h(0.5 * df) - 2.0 + 4.0f64.ln();
        let pre = (ln_gamma(0.5 * df) - ln_gamma(0.5 * (df - 1.0))).exp()
            / PI.sqrt()
            * 0.5
            * df
            * df
            * s.powi(4);
        let gr = (ln_gamma(0.5 * (df - 1.0)) - ln_gamma(0.5 * (df + 4.0))).exp();
        let i4 = 3.0 * PI.sqrt() / 8.0 * gr;
        let i4l = -PI.sqrt() / 16.0 * gr * (-8.0 + 3.0 * h(1.0 + 0.5 * df) + 64.0f64.ln());
        let i4l2 = 3.0 * PI.sqrt() / 32.0
            * gr
            * (trigamma(2.5) - trigamma(0.5 * (df + 4.0))
                + (digamma(2.5) - digamma(0.5 * (df + 4.0))).powi(2));
        let ef2 = pre * (4.0 * i4l2 + 4.0 * g * i4l + g * g * i4);
        let big_f = s * s * s.ln();
        ef2 - big_f * big_f
    }

    #[test]
    fn thin_plate_constants_are_the_large_d_limit() {
        let (c1, c2) = thin_plate_variance_constants();
        assert!((c1 - 2.0).abs() < 1e-12, "c1 = {c1}");
        assert!((c2 - 0.701101650408509).abs() < 1e-12, "c2 = {c2}");
        // the asymptotic approaches the exact Γ-form as d grows
        let s = 4.0;
        let mut prev_gap = f64::INFINITY;
        for d in [50usize, 200, 800, 3200] {
            let exact = thin_plate_exact_variance(d, s);
            let asym = variance_closed_form(&KernelSpec::thin_plate(d).unwrap(), s)
                .unwrap()
                .value;
            let gap = (asym - exact).abs() / exact;
            assert!(gap < prev_gap, "gap not shrinking at d={d}");
            prev_gap = gap;
        }
        assert!(prev_gap < 3e-3, "residual gap {prev_gap}");
    }

    #[test]
    fn thin_plate_exact_oracle_vs_mc() {
        let k = KernelSpec::thin_plate(10).unwrap();
        let x_norm = 2.0;
        let rep = variance_mc(&k, x_norm, 300_000, 19).unwrap();
        let exact = thin_plate_exact_variance(10, x_norm);
        assert!(
            (rep.mc_estimate - exact).abs() <= 4.0 * rep.mc_stderr,
            "{} vs {exact} (stderr {})",
            rep.mc_estimate,
            rep.mc_stderr
        );
    }

    #[test]
    fn variance_mc_matches_closed_forms() {
        let n = 200_000;
        let cases = [
            (KernelSpec::riesz(1.0, 3).unwrap(), 2.0, 4.0 / 3.0),
            (
                KernelSpec::laplace(1.0, 3).unwrap(),
                1.0,
                (1.0 - 5.0 * (-2.0f64).exp()) / 4.0,
            ),
            (KernelSpec::gauss(1.0, 3).unwrap(), 1.0, 0.100268798145017),
        ];
        for (kernel, x_norm, want) in cases {
            let rep = variance_mc(&kernel, x_norm, n, 5).unwrap();
            assert!(
                (rep.mc_estimate - want).abs() <= 4.0 * rep.mc_stderr,
                "{}: {} vs {} (stderr {})",
                kernel.family().name(),
                rep.mc_estimate,
                want,
                rep.mc_stderr
            );
            assert!(rep.mc_stderr > 0.0);
        }
    }

    #[test]
    fn variance_mc_pd_bound_holds() {
        let mut rng = SplitMix64::new(8);
        for kernel in [
            KernelSpec::gauss(1.0, 5).unwrap(),
            KernelSpec::laplace(0.8, 4).unwrap(),
            KernelSpec::matern(1.0, 1.5, 4).unwrap(),
        ] {
            for _ in 0..5 {
                let x_norm = 0.2 + 2.5 * rng.next_f64();
                let rep = variance_mc(&kernel, x_norm, 20_000, rng.next_u64()).unwrap();
                let bound = variance_closed_form(&kernel, x_norm).unwrap();
                assert_eq!(bound.kind, VarianceKind::UpperBound);
                assert!(
                    rep.mc_estimate <= bound.value + 4.0 * rep.mc_stderr,
                    "{} at {x_norm}: {} > {}",
                    kernel.family().name(),
                    rep.mc_estimate,
                    bound.value
                );
            }
        }
    }

    #[test]
    fn variance_mc_degenerate_point_is_zero() {
        // x_norm = 0: f(0·t) is constant, so the variance vanishes exactly.
        let k = KernelSpec::gauss(1.0, 4).unwrap();
        let rep = variance_mc(&k, 0.0, 1000, 3).unwrap();
        assert_eq!(rep.mc_estimate, 0.0);
    }

    #[test]
    fn thin_plate_asymptotic_vs_mc() {
        // d ≥ 50 and ‖x‖ away from 1: loose 10% agreement.
        let k = KernelSpec::thin_plate(60).unwrap();
        let x_norm = 4.0;
        let rep = variance_mc(&k, x_norm, 400_000, 11).unwrap();
        let asym = variance_closed_form(&k, x_norm).unwrap();
        assert_eq!(asym.kind, VarianceKind::Asymptotic);
        let rel = (rep.mc_estimate - asym.value).abs() / asym.value;
        assert!(rel < 0.10, "relative gap {rel}");
    }

    #[test]
    fn projection_sampler_uniform_at_d3() {
        // Archimedes: t uniform on [−1, 1]; KS test at the 1% level.
        let n = 50_000;
        let mut rng = SplitMix64::new(21);
        let mut u: Vec<f64> = (0..n)
            .map(|_| (sample_projection(3, &mut rng) + 1.0) / 2.0)
            .collect();
        let dstat = ks_uniform_statistic(&mut u);
        assert!(dstat < 1.63 / (n as f64).sqrt(), "KS statistic {dstat}");
    }

    #[test]
    fn fit_rate_reference_cases() {
        let p = [8usize, 16, 32, 64];
        let e1: Vec<f64> = p.iter().map(|&v| 1.0 / v as f64).collect();
        let (r, _) = fit_rate(&p, &e1).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        for c in [0.1, 7.0] {
            let e: Vec<f64> = p.iter().map(|&v| c / (v as f64).sqrt()).collect();
            let (r, _) = fit_rate(&p, &e).unwrap();
            assert!((r - 0.5).abs() < 1e-12, "c={c}");
        }
        assert!(fit_rate(&p[..1], &e1[..1]).is_err());
        assert!(fit_rate(&p, &[0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn experiment_smoke_and_determinism() {
        let sigma = median_norm_scale(3, 500, 1.0, 40);
        let kernel = KernelSpec::gauss(sigma, 3).unwrap();
        let p_list = [8usize, 32, 128];
        let a = slicing_error_experiment(&kernel, &p_list, Generator::Iid, 3, 100, 7).unwrap();
        let b = slicing_error_experiment(&kernel, &p_list, Generator::Iid, 3, 100, 7).unwrap();
        assert_eq!(a.mean_errors, b.mean_errors);
        assert_eq!(a.to_csv(), b.to_csv());
        // iid slicing is a plain Monte Carlo average: rate near 1/2
        assert!(a.rate > 0.2 && a.rate < 0.9, "rate {}", a.rate);
        assert!(a.mean_errors.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn experiment_rejects_bad_p_list() {
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        assert!(slicing_error_experiment(&kernel, &[], Generator::Iid, 1, 10, 0).is_err());
        assert!(
            slicing_error_experiment(&kernel, &[8, 8], Generator::Iid, 1, 10, 0).is_err()
        );
        assert!(
            slicing_error_experiment(&kernel, &[16, 8], Generator::Iid, 1, 10, 0).is_err()
        );
    }

    #[test]
    fn experiment_single_p_measures_positive_error() {
        // P = 1: the error is mean |F − f(|⟨ξ,x⟩|)| > 0; no rate to fit.
        let kernel = KernelSpec::gauss(0.5, 3).unwrap();
        let rep = slicing_error_experiment(&kernel, &[1], Generator::Iid, 3, 50, 5).unwrap();
        assert_eq!(rep.p_values, vec![1]);
        assert!(rep.mean_errors[0] > 0.0);
        assert!(rep.rate.is_nan());
    }

    #[test]
    fn csv_layout() {
        let kernel = KernelSpec::gauss(0.5, 3).unwrap();
        let rep =
            slicing_error_experiment(&kernel, &[8, 16], Generator::Iid, 2, 20, 3).unwrap();
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.trim_end().split('\n').collect();
        assert_eq!(lines[0], "generator,kernel,d,P,mean_error,std_error");
        assert_eq!(lines.len(), 4); // header + 2 data rows + rate trailer
        assert!(lines[3].starts_with("iid,gauss,3,rate,"));
    }

    #[test]
    fn rff_experiment_smoke() {
        let kernel = KernelSpec::gauss(0.5, 3).unwrap();
        let rep = rff_error_experiment(&kernel, &[16, 64, 256], 3, 100, 9).unwrap();
        assert!(rep.rate > 0.2 && rep.rate < 0.9, "rate {}", rep.rate);
        assert_eq!(rep.generator, "rff");
    }
}
