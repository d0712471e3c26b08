//! Kernel summation backends.
//!
//! All backends approximate (or compute exactly) the sums
//! `s_m = Σ_n w_n F(‖x_n − y_m‖)`:
//!
//! * [`naive_sum`] — exact `O(NM)` reference.
//! * [`sliced_direct_sum`] — slicing with exact 1D basis values,
//!   `O(P·N·M)`; the oracle for the fast slicing backends.
//! * [`fourier_slice_sum`] — slicing + 1D fast Fourier summation through
//!   the NFFT, `O(P(N + M + N_ft log N_ft))`.
//! * [`sorting_slice_sum`] — slicing + sorting for the negative distance
//!   kernel, exact up to floating point, `O(P(N+M) log(N+M))`.
//! * [`rff_sum`] / [`orf_sum`] / [`rff_k_slice_sum`] — random Fourier
//!   feature baselines, `O(D(N+M))`.
//!
//! Slices and features are reduced in ascending index order; the `_mt`
//! variants split slices across threads and change results by at most the
//! fp reassociation of the final chunk reduction (≤ 1e−12 relative).

use crate::directions::DirectionSet;
use crate::kernels::{self, KernelFamily, KernelSpec, SlicedEval};
use crate::points::{dot, PointSet};
use crate::rng::{derive_seed, SplitMix64};
use crate::{nfft, Error, Result};
use num_complex::Complex64;

use std::f64::consts::TAU;

/// Sources `x`, targets `y`, and source weights `w`.
#[derive(Clone, Debug)]
pub struct SummationProblem {
    x: PointSet,
    y: PointSet,
    w: Vec<f64>,
}

impl SummationProblem {
    pub fn new(x: PointSet, y: PointSet, w: Vec<f64>) -> Result<Self> {
        if x.n() == 0 || y.n() == 0 {
            return Err(Error::InvalidParameter("need at least one source and one target".into()));
        }
        if x.dim() != y.dim() {
            return Err(Error::InvalidParameter(format!(
                "source dimension {} != target dimension {}",
                x.dim(),
                y.dim()
            )));
        }
        if w.len() != x.n() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} sources",
                w.len(),
                x.n()
            )));
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite weight".into()));
        }
        Ok(Self { x, y, w })
    }

    /// Unit weights, the benchmark convention.
    pub fn with_unit_weights(x: PointSet, y: PointSet) -> Result<Self> {
        let w = vec![1.0; x.n()];
        Self::new(x, y, w)
    }

    pub fn x(&self) -> &PointSet {
        &self.x
    }

    pub fn y(&self) -> &PointSet {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn m(&self) -> usize {
        self.y.n()
    }

    /// `c = max_n ‖x_n‖ + max_m ‖y_m‖`, the rescaling radius.
    pub fn data_radius(&self) -> f64 {
        self.x.max_norm() + self.y.max_norm()
    }

    fn check_dirs(&self, dirs: &DirectionSet) -> Result<()> {
        if dirs.dim() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "directions have dimension {}, data {}",
                dirs.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Run `f(p)` for every slice index and accumulate the per-target partial
/// outputs in ascending slice order, optionally across threads.
fn reduce_slices<F>(p_total: usize, m: usize, threads: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    let threads = threads.max(1).min(p_total);
    if threads == 1 {
        let mut acc = vec![0.0; m];
        for p in 0..p_total {
            let part = f(p);
            for (a, v) in acc.iter_mut().zip(&part) {
                *a += v;
            }
        }
        return acc;
    }
    let chunk = p_total.div_ceil(threads);
    let mut chunks: Vec<Vec<f64>> = Vec::with_capacity(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                scope.spawn(move || {
                    let lo = t * chunk;
                    let hi = ((t + 1) * chunk).min(p_total);
                    let mut acc = vec![0.0; m];
                    for p in lo..hi {
                        let part = f(p);
                        for (a, v) in acc.iter_mut().zip(&part) {
                            *a += v;
                        }
                    }
                    acc
                })
            })
            .collect();
        for h in handles {
            chunks.push(h.join().expect("slice worker panicked"));
        }
    });
    let mut acc = vec![0.0; m];
    for part in chunks {
        for (a, v) in acc.iter_mut().zip(&part) {
            *a += v;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Naive reference
// ---------------------------------------------------------------------------

/// Exact sums in source-index order. `O(N·M)`.
pub fn naive_sum(problem: &SummationProblem, kernel: &KernelSpec) -> Result<Vec<f64>> {
    naive_sum_mt(problem, kernel, 1)
}

pub fn naive_sum_mt(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    threads: usize,
) -> Result<Vec<f64>> {
    if kernel.dim() != problem.dim() {
        return Err(Error::InvalidParameter("kernel dimension differs from data".into()));
    }
    // The Matérn profile costs a Bessel quadrature per call; bulk work goes
    // through a verified Chebyshev table instead.
    let table = match kernel.family() {
        KernelFamily::Matern { .. } => {
            let k = *kernel;
            let radius = problem.data_radius().max(1e-9);
            Some((kernels::cheb_table(&move |t| k.basis(t), radius)?, radius))
        }
        _ => None,
    };
    let eval = |t: f64| -> Result<f64> {
        match &table {
            Some((pieces, radius)) if t <= *radius => {
                Ok(kernels::cheb_table_eval(pieces, *radius, t))
            }
            _ => kernel.basis(t),
        }
    };
    let m = problem.m();
    let threads = threads.max(1);
    let mut out = vec![0.0; m];
    let compute_row = |mi: usize| -> Result<f64> {
        let ym = problem.y.row(mi);
        let mut acc = 0.0;
        for (n, xn) in problem.x.rows().enumerate() {
            let mut d2 = 0.0;
            for k in 0..ym.len() {
                let t = xn[k] - ym[k];
                d2 += t * t;
            }
            acc += problem.w[n] * eval(d2.sqrt())?;
        }
        Ok(acc)
    };
    if threads == 1 {
        for (mi, slot) in out.iter_mut().enumerate() {
            *slot = compute_row(mi)?;
        }
    } else {
        let results: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
            let chunk = m.div_ceil(threads);
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let compute_row = &compute_row;
                    scope.spawn(move || {
                        let lo = t * chunk;
                        let hi = ((t + 1) * chunk).min(m);
                        (lo..hi).map(compute_row).collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut mi = 0;
        for chunk in results {
            for v in chunk? {
                out[mi] = v;
                mi += 1;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Direct slicing
// ---------------------------------------------------------------------------

/// Slicing with exact 1D basis values: `(1/P) Σ_p Σ_n w_n f(|⟨ξ_p, x_n − y_m⟩|)`.
///
/// `O(P·N·M)` — the oracle for the fast backends at small sizes.
pub fn sliced_direct_sum(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    dirs: &DirectionSet,
) -> Result<Vec<f64>> {
    sliced_direct_sum_mt(problem, kernel, dirs, 1)
}

pub fn sliced_direct_sum_mt(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    dirs: &DirectionSet,
    threads: usize,
) -> Result<Vec<f64>> {
    problem.check_dirs(dirs)?;
    if kernel.dim() != problem.dim() {
        return Err(Error::InvalidParameter("kernel dimension differs from data".into()));
    }
    let eval = SlicedEval::new(kernel, problem.data_radius().max(1e-9))?;
    let (n, m) = (problem.n(), problem.m());
    let slice = |p: usize| -> Vec<f64> {
        let xi = dirs.row(p);
        let a: Vec<f64> = problem.x.rows().map(|r| dot(r, xi)).collect();
        let b: Vec<f64> = problem.y.rows().map(|r| dot(r, xi)).collect();
        let mut part = vec![0.0; m];
        for (mi, &bm) in b.iter().enumerate() {
            let mut acc = 0.0;
            for ni in 0..n {
                acc += problem.w[ni] * eval.eval((a[ni] - bm).abs());
            }
            part[mi] = acc;
        }
        part
    };
    let mut out = reduce_slices(dirs.p(), m, threads, slice);
    let scale = 1.0 / dirs.p() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Fourier slicing
// ---------------------------------------------------------------------------

/// Per-kernel rescaling threshold `T` and decay radius `g_max = 5m`.
fn rescaling_constants(kernel: &KernelSpec) -> (f64, Option<f64>, usize) {
    match kernel.family() {
        KernelFamily::Gauss { sigma } => (0.3, Some(5.0 * sigma), 128),
        KernelFamily::Matern { beta, .. } => (0.2, Some(5.0 * beta), 512),
        KernelFamily::Laplace { alpha } => (0.1, Some(5.0 / alpha), 1024),
        // periodized path: only the data must fit in [−T, T]
        KernelFamily::Riesz { .. } | KernelFamily::ThinPlate => (0.3, None, 1024),
    }
}

/// Fourier-series state for one kernel/geometry pair.
#[derive(Clone, Debug)]
pub struct FourierPlan {
    kernel: KernelSpec,
    tau: f64,
    threshold: f64,
    g_max: Option<f64>,
    data_radius: f64,
    n_ft: usize,
    coeffs: Vec<Complex64>,
    nfft: nfft::NfftPlan,
}

impl FourierPlan {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_ft(&self) -> usize {
        self.n_ft
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Effective support radius of the decaying kernels (None for the
    /// periodized Riesz/thin-plate path).
    pub fn g_max(&self) -> Option<f64> {
        self.g_max
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Rescale per the data radius and tabulate the Fourier coefficients of the
/// rescaled sliced basis: `c_k = η̃(k)` for closed-form densities
/// (Gauss/Laplace/Matérn via Poisson summation), or the DFT of a smoothly
/// periodized sampling for Riesz/thin plate.
pub fn build_fourier_plan(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    n_ft_override: Option<usize>,
) -> Result<FourierPlan> {
    if kernel.dim() != problem.dim() {
        return Err(Error::InvalidParameter("kernel dimension differs from data".into()));
    }
    let (threshold, g_max, n_ft_default) = rescaling_constants(kernel);
    let n_ft = n_ft_override.unwrap_or(n_ft_default);
    if n_ft == 0 || n_ft % 2 != 0 {
        return Err(Error::InvalidParameter(format!("N_ft must be even and positive, got {n_ft}")));
    }
    let c = problem.data_radius().max(1e-12);
    let tau = match g_max {
        Some(g) => (threshold / c).min(1.0 / (2.0 * g)),
        None => threshold / c,
    };
    let half = n_ft as isize / 2;
    let coeffs: Vec<Complex64> = if kernel.is_positive_definite() {
        let rescaled = kernel.rescaled(tau)?;
        (-half..half)
            .map(|k| Ok(Complex64::new(rescaled.spectral_density_1d(k as f64)?, 0.0)))
            .collect::<Result<_>>()?
    } else {
        periodized_coeffs(kernel, tau, threshold, n_ft)?
    };
    Ok(FourierPlan {
        kernel: *kernel,
        tau,
        threshold,
        g_max,
        data_radius: c,
        n_ft,
        coeffs,
        nfft: nfft::NfftPlan::with_defaults(n_ft)?,
    })
}

/// Fourier coefficients of a 1-periodic extension of the rescaled basis
/// `g̃(u) = f(u/τ)`: exact values on `|u| ≤ T`, a two-point Taylor bridge
/// across the wrap gap, sampled on a 16× oversampled grid and transformed.
fn periodized_coeffs(
    kernel: &KernelSpec,
    tau: f64,
    threshold: f64,
    n_ft: usize,
) -> Result<Vec<Complex64>> {
    let a = threshold;
    let b = 1.0 - threshold;
    const ORDER: usize = 7;
    // endpoint derivatives of g̃ at u = a; the wrap end mirrors them
    let derivs = sliced_derivatives(kernel, a / tau, tau, ORDER)?;
    let mirrored: Vec<f64> =
        derivs.iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -*v }).collect();
    let bridge = hermite_two_point(a, &derivs, b, &mirrored);
    let grid = (16 * n_ft).next_power_of_two();
    let mut samples = vec![Complex64::ZERO; grid];
    for (j, slot) in samples.iter_mut().enumerate() {
        let u = j as f64 / grid as f64;
        let u = if u >= 0.5 { u - 1.0 } else { u }; // wrap to [−1/2, 1/2)
        let au = u.abs();
        let val = if au <= a { kernel.sliced_basis(au / tau)? } else { bridge(au) };
        *slot = Complex64::new(val, 0.0);
    }
    let twiddles: Vec<Complex64> =
        (0..grid / 2).map(|j| Complex64::from_polar(1.0, -TAU * j as f64 / grid as f64)).collect();
    nfft::fft_in_place(&mut samples, &twiddles, false);
    let half = n_ft as isize / 2;
    Ok((-half..half)
        .map(|k| {
            let idx = k.rem_euclid(grid as isize) as usize;
            samples[idx] / grid as f64
        })
        .collect())
}

/// Derivatives `g̃^{(j)}(u) = f^{(j)}(u/τ)/τ^j` for the periodized kernels.
fn sliced_derivatives(kernel: &KernelSpec, t: f64, tau: f64, order: usize) -> Result<Vec<f64>> {
    let d = kernel.dim() as f64;
    let mut out = Vec::with_capacity(order + 1);
    match kernel.family() {
        KernelFamily::Riesz { r } => {
            let c = kernels::riesz_slice_constant(kernel.dim(), r);
            let mut falling = 1.0;
            for j in 0..=order {
                let jf = j as f64;
                if j > 0 {
                    falling *= r - (jf - 1.0);
                }
                out.push(-c * falling * t.powf(r - jf) / tau.powi(j as i32));
            }
        }
        KernelFamily::ThinPlate => {
            let c_d = kernels::thin_plate_slice_offset(kernel.dim());
            for j in 0..=order {
                let v = match j {
                    0 => d * t * t * t.ln() + c_d * t * t,
                    1 => d * (2.0 * t * t.ln() + t) + 2.0 * c_d * t,
                    2 => d * (2.0 * t.ln() + 3.0) + 2.0 * c_d,
                    _ => {
                        // j ≥ 3: d · 2 · (−1)^{j−3} (j−3)! / t^{j−2}
                        let mut fact = 1.0;
                        for i in 1..(j as i32 - 2) {
                            fact *= i as f64;
                        }
                        let sign = if (j - 3) % 2 == 0 { 1.0 } else { -1.0 };
                        d * 2.0 * sign * fact / t.powi(j as i32 - 2)
                    }
                };
                out.push(v / tau.powi(j as i32));
            }
        }
        _ => {
            return Err(Error::Unsupported(
                "periodized coefficients exist only for riesz/thin-plate kernels".into(),
            ))
        }
    }
    Ok(out)
}

/// Hermite interpolant matching `f^{(j)}(a) = da[j]` and `f^{(j)}(b) = db[j]`.
fn hermite_two_point(a: f64, da: &[f64], b: f64, db: &[f64]) -> impl Fn(f64) -> f64 {
    let q = da.len();
    let n = 2 * q;
    let mut z = Vec::with_capacity(n);
    z.extend(std::iter::repeat(a).take(q));
    z.extend(std::iter::repeat(b).take(q));
    // divided-difference table with repeated nodes
    let mut table = vec![vec![0.0; n]; n];
    let mut fact = vec![1.0; q];
    for j in 1..q {
        fact[j] = fact[j - 1] * j as f64;
    }
    for i in 0..n {
        table[i][0] = if i < q { da[0] } else { db[0] };
    }
    for j in 1..n {
        for i in 0..n - j {
            if z[i + j] == z[i] {
                let side = if z[i] == a { da } else { db };
                table[i][j] = side[j] / fact.get(j).copied().unwrap_or(f64::INFINITY);
            } else {
                table[i][j] = (table[i + 1][j - 1] - table[i][j - 1]) / (z[i + j] - z[i]);
            }
        }
    }
    let coef: Vec<f64> = (0..n).map(|j| table[0][j]).collect();
    move |x: f64| {
        let mut acc = coef[n - 1];
        for j in (0..n - 1).rev() {
            acc = acc * (x - z[j]) + coef[j];
        }
        acc
    }
}

/// Fourier slicing: per slice, adjoint NFFT of the weights at the rescaled
/// source projections, multiply by the plan coefficients, forward NFFT at
/// the target projections, average over slices.
pub fn fourier_slice_sum(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    dirs: &DirectionSet,
    plan: &FourierPlan,
) -> Result<Vec<f64>> {
    fourier_slice_sum_mt(problem, kernel, dirs, plan, 1)
}

pub fn fourier_slice_sum_mt(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    dirs: &DirectionSet,
    plan: &FourierPlan,
    threads: usize,
) -> Result<Vec<f64>> {
    problem.check_dirs(dirs)?;
    if *kernel != plan.kernel {
        return Err(Error::PlanMismatch("plan was built for a different kernel".into()));
    }
    let radius = problem.data_radius();
    if radius > plan.data_radius * (1.0 + 1e-12) {
        return Err(Error::PlanMismatch(format!(
            "data radius {radius} exceeds the plan radius {}",
            plan.data_radius
        )));
    }
    let w: Vec<Complex64> = problem.w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let m = problem.m();
    let result = std::sync::Mutex::new(Ok(()));
    let slice = |p: usize| -> Vec<f64> {
        let xi = dirs.row(p);
        let project = |pts: &PointSet| -> Result<Vec<f64>> {
            pts.rows()
                .map(|r| {
                    let v = plan.tau * dot(r, xi);
                    if (-0.5..0.5).contains(&v) {
                        Ok(v)
                    } else {
                        Err(Error::PlanMismatch(format!(
                            "projected node {v} outside [-1/2, 1/2); geometry changed after planning"
                        )))
                    }
                })
                .collect()
        };
        let compute = || -> Result<Vec<f64>> {
            let a = project(&problem.x)?;
            let b = project(&problem.y)?;
            let mut spectral = plan.nfft.adjoint(&a, &w)?;
            for (s, c) in spectral.iter_mut().zip(&plan.coeffs) {
                *s *= c;
            }
            let t = plan.nfft.forward(&b, &spectral)?;
            Ok(t.into_iter().map(|v| v.re).collect())
        };
        match compute() {
            Ok(part) => part,
            Err(e) => {
                *result.lock().unwrap() = Err(e);
                vec![0.0; m]
            }
        }
    };
    let mut out = reduce_slices(dirs.p(), m, threads, slice);
    result.into_inner().unwrap()?;
    let scale = 1.0 / dirs.p() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sorting slicing (negative distance kernel)
// ---------------------------------------------------------------------------

/// `Σ_n w_n |a_n − b|` for every b, via sorted prefix sums.
/// `pairs` must be sorted by the first component.
fn one_d_abs_sums(pairs: &[(f64, f64)], targets: &[f64]) -> Vec<f64> {
    let n = pairs.len();
    let mut w_prefix = Vec::with_capacity(n + 1);
    let mut wa_prefix = Vec::with_capacity(n + 1);
    let mut acc_w = 0.0;
    let mut acc_wa = 0.0;
    w_prefix.push(0.0);
    wa_prefix.push(0.0);
    for &(a, w) in pairs {
        acc_w += w;
        acc_wa += w * a;
        w_prefix.push(acc_w);
        wa_prefix.push(acc_wa);
    }
    let w_total = acc_w;
    let wa_total = acc_wa;
    targets
        .iter()
        .map(|&b| {
            // j = #{a_i ≤ b}
            let j = pairs.partition_point(|&(a, _)| a <= b);
            b * (2.0 * w_prefix[j] - w_total) - (2.0 * wa_prefix[j] - wa_total)
        })
        .collect()
}

/// Slicing for the negative distance kernel (Riesz, r = 1): exact per-slice
/// 1D sums by sorting, `O(P (N+M) log(N+M))`.
pub fn sorting_slice_sum(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    dirs: &DirectionSet,
) -> Result<Vec<f64>> {
    sorting_slice_sum_mt(problem, kernel, dirs, 1)
}

pub fn sorting_slice_sum_mt(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    dirs: &DirectionSet,
    threads: usize,
) -> Result<Vec<f64>> {
    problem.check_dirs(dirs)?;
    match kernel.family() {
        KernelFamily::Riesz { r } if r == 1.0 => {}
        _ => {
            return Err(Error::Unsupported(
                "sorting backend requires the negative distance kernel (riesz, r = 1)".into(),
            ))
        }
    }
    if kernel.dim() != problem.dim() {
        return Err(Error::InvalidParameter("kernel dimension differs from data".into()));
    }
    let slice_const = kernels::riesz_slice_constant(problem.dim(), 1.0);
    let m = problem.m();
    let slice = |p: usize| -> Vec<f64> {
        let xi = dirs.row(p);
        let mut pairs: Vec<(f64, f64)> = problem
            .x
            .rows()
            .zip(&problem.w)
            .map(|(r, &w)| (dot(r, xi), w))
            .collect();
        pairs.sort_by(|u, v| u.0.total_cmp(&v.0));
        let targets: Vec<f64> = problem.y.rows().map(|r| dot(r, xi)).collect();
        let sums = one_d_abs_sums(&pairs, &targets);
        sums.into_iter().map(|v| -slice_const * v).collect()
    };
    let mut out = reduce_slices(dirs.p(), m, threads, slice);
    let scale = 1.0 / dirs.p() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Random Fourier features
// ---------------------------------------------------------------------------

/// Sampler for the d-dimensional spectral measure, in the `w`-frequency
/// convention where features are `cos(⟨x, w⟩)` and `E[cos(⟨x−y, w⟩)] = F(‖x−y‖)`.
#[derive(Clone, Debug)]
pub struct SpectralSampler {
    kernel: KernelSpec,
}

impl SpectralSampler {
    pub fn new(kernel: &KernelSpec) -> Result<Self> {
        if !kernel.is_positive_definite() {
            return Err(Error::Unsupported(format!(
                "kernel family {} is not positive definite; no spectral measure",
                kernel.family().name()
            )));
        }
        Ok(Self { kernel: *kernel })
    }

    /// One frequency vector `w ∈ R^d`.
    pub fn sample_frequency(&self, rng: &mut SplitMix64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.kernel.dim());
        match self.kernel.family() {
            KernelFamily::Gauss { sigma } => {
                // w ~ N(0, σ^{−2} I)
                for v in out.iter_mut() {
                    *v = rng.normal() / sigma;
                }
            }
            KernelFamily::Laplace { alpha } => {
                // w = α z/|g|, multivariate Cauchy scaled by α
                let g = loop {
                    let g = rng.normal();
                    if g != 0.0 {
                        break g;
                    }
                };
                for v in out.iter_mut() {
                    *v = alpha * rng.normal() / g.abs();
                }
            }
            KernelFamily::Matern { beta, nu } => {
                // w = z √(2ν/u)/β, u ~ χ²_{2ν}: multivariate Student-t scaled
                let u = rng.chi_square(2.0 * nu);
                let scale = (2.0 * nu / u).sqrt() / beta;
                for v in out.iter_mut() {
                    *v = scale * rng.normal();
                }
            }
            _ => unreachable!("validated positive definite"),
        }
    }

    /// Radius `‖w‖` of a fresh spectral sample (the radial pushforward law).
    pub fn sample_radius(&self, rng: &mut SplitMix64) -> f64 {
        let mut buf = vec![0.0; self.kernel.dim()];
        self.sample_frequency(rng, &mut buf);
        buf.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Accumulate one cosine feature with frequency profile `proj ↦ ρ·proj`.
fn accumulate_feature(
    problem: &SummationProblem,
    x_phase: &[f64],
    y_phase: &[f64],
    out: &mut [f64],
) {
    // Σ_n w_n cos(φx_n − φy_m) = cos(φy_m)·Σ w cos(φx) + sin(φy_m)·Σ w sin(φx)
    let mut sum_cos = 0.0;
    let mut sum_sin = 0.0;
    for (&w, &ph) in problem.w.iter().zip(x_phase) {
        sum_cos += w * ph.cos();
        sum_sin += w * ph.sin();
    }
    for (o, &ph) in out.iter_mut().zip(y_phase) {
        *o += ph.cos() * sum_cos + ph.sin() * sum_sin;
    }
}

/// Random Fourier features: `s̃_m = (1/D) Σ_p Σ_n w_n cos(⟨x_n − y_m, w_p⟩)`
/// with `w_p` iid from the kernel's spectral measure. `O(D(N+M))`.
pub fn rff_sum(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    n_features: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_features == 0 {
        return Err(Error::InvalidParameter("need at least one feature".into()));
    }
    if kernel.dim() != problem.dim() {
        return Err(Error::InvalidParameter("kernel dimension differs from data".into()));
    }
    let sampler = SpectralSampler::new(kernel)?;
    let mut rng = SplitMix64::new(seed);
    let d = problem.dim();
    let mut freq = vec![0.0; d];
    let mut out = vec![0.0; problem.m()];
    for _ in 0..n_features {
        sampler.sample_frequency(&mut rng, &mut freq);
        let xp: Vec<f64> = problem.x.rows().map(|r| dot(r, &freq)).collect();
        let yp: Vec<f64> = problem.y.rows().map(|r| dot(r, &freq)).collect();
        accumulate_feature(problem, &xp, &yp, &mut out);
    }
    let scale = 1.0 / n_features as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Orthogonal random features: directions from stacked Haar frames, radii
/// drawn independently as norms of fresh spectral samples.
pub fn orf_sum(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    n_features: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_features == 0 {
        return Err(Error::InvalidParameter("need at least one feature".into()));
    }
    if kernel.dim() != problem.dim() {
        return Err(Error::InvalidParameter("kernel dimension differs from data".into()));
    }
    let sampler = SpectralSampler::new(kernel)?;
    let dirs = crate::directions::orthogonal(n_features, problem.dim(), derive_seed(seed, 1))?;
    let mut rng = SplitMix64::new(derive_seed(seed, 2));
    let d = problem.dim();
    let mut freq = vec![0.0; d];
    let mut out = vec![0.0; problem.m()];
    for p in 0..n_features {
        let rho = sampler.sample_radius(&mut rng);
        let xi = dirs.row(p);
        for (f, &x) in freq.iter_mut().zip(xi) {
            *f = rho * x;
        }
        let xp: Vec<f64> = problem.x.rows().map(|r| dot(r, &freq)).collect();
        let yp: Vec<f64> = problem.y.rows().map(|r| dot(r, &freq)).collect();
        accumulate_feature(problem, &xp, &yp, &mut out);
    }
    let scale = 1.0 / n_features as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// RFF-k slicing: per slice, k one-dimensional random Fourier features with
/// radii from the radial spectral law. `O(P·k·(N+M))`.
pub fn rff_k_slice_sum(
    problem: &SummationProblem,
    kernel: &KernelSpec,
    dirs: &DirectionSet,
    k: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    problem.check_dirs(dirs)?;
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one feature per slice".into()));
    }
    if kernel.dim() != problem.dim() {
        return Err(Error::InvalidParameter("kernel dimension differs from data".into()));
    }
    let sampler = SpectralSampler::new(kernel)?;
    let mut out = vec![0.0; problem.m()];
    for p in 0..dirs.p() {
        let mut rng = SplitMix64::new(derive_seed(seed, p as u64));
        let xi = dirs.row(p);
        let a: Vec<f64> = problem.x.rows().map(|r| dot(r, xi)).collect();
        let b: Vec<f64> = problem.y.rows().map(|r| dot(r, xi)).collect();
        for _ in 0..k {
            let rho = sampler.sample_radius(&mut rng);
            let xp: Vec<f64> = a.iter().map(|&v| rho * v).collect();
            let yp: Vec<f64> = b.iter().map(|&v| rho * v).collect();
            accumulate_feature(problem, &xp, &yp, &mut out);
        }
    }
    let scale = 1.0 / (dirs.p() * k) as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::{iid_uniform, DirectionSet, Generator};
    use crate::points::PointSet;

    fn gaussian_cloud(n: usize, d: usize, seed: u64) -> PointSet {
        let mut rng = SplitMix64::new(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.normal()).collect();
        PointSet::from_flat(data, n, d).unwrap()
    }

    fn rel_l1(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        let den: f64 = b.iter().map(|v| v.abs()).sum();
        num / den.max(1e-300)
    }

    #[test]
    fn problem_validation() {
        let x = gaussian_cloud(3, 2, 1);
        let y = gaussian_cloud(4, 3, 2);
        assert!(SummationProblem::new(x.clone(), y, vec![1.0; 3]).is_err());
        let y2 = gaussian_cloud(4, 2, 3);
        assert!(SummationProblem::new(x.clone(), y2.clone(), vec![1.0; 2]).is_err());
        assert!(SummationProblem::new(x, y2, vec![1.0; 3]).is_ok());
    }

    #[test]
    fn naive_trivial_cases() {
        let d = 3;
        let x = PointSet::from_rows(&[vec![0.5, 0.0, 0.0]]).unwrap();
        let y = x.clone();
        let problem = SummationProblem::new(x, y, vec![1.0]).unwrap();
        // F(0): Gauss 1, Riesz 0, thin plate 0
        assert_eq!(
            naive_sum(&problem, &KernelSpec::gauss(1.0, d).unwrap()).unwrap()[0],
            1.0
        );
        assert_eq!(
            naive_sum(&problem, &KernelSpec::riesz(1.0, d).unwrap()).unwrap()[0],
            0.0
        );
        assert_eq!(
            naive_sum(&problem, &KernelSpec::thin_plate(d).unwrap()).unwrap()[0],
            0.0
        );
        // zero weights
        let x = gaussian_cloud(5, d, 4);
        let y = gaussian_cloud(6, d, 5);
        let problem = SummationProblem::new(x, y, vec![0.0; 5]).unwrap();
        let s = naive_sum(&problem, &KernelSpec::gauss(1.0, d).unwrap()).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
        // symmetric pair
        let a = vec![0.3, -0.2, 0.9];
        let minus_a: Vec<f64> = a.iter().map(|v| -v).collect();
        let norm2: f64 = a.iter().map(|v| v * v).sum();
        let x = PointSet::from_rows(&[a, minus_a]).unwrap();
        let y = PointSet::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
        let problem = SummationProblem::new(x, y, vec![1.0, 1.0]).unwrap();
        let s = naive_sum(&problem, &KernelSpec::gauss(1.0, d).unwrap()).unwrap();
        assert!((s[0] - 2.0 * (-norm2 / 2.0).exp()).abs() < 1e-14);
    }

    #[test]
    fn naive_matern_table_matches_direct_eval() {
        let kernel = KernelSpec::matern(1.0, 1.5, 3).unwrap();
        let x = gaussian_cloud(8, 3, 6);
        let y = gaussian_cloud(5, 3, 7);
        let problem = SummationProblem::with_unit_weights(x.clone(), y.clone()).unwrap();
        let fast = naive_sum(&problem, &kernel).unwrap();
        for (mi, ym) in y.rows().enumerate() {
            let mut acc = 0.0;
            for xn in x.rows() {
                acc += kernel.basis(crate::points::dist(xn, ym)).unwrap();
            }
            assert!((fast[mi] - acc).abs() < 1e-7 * acc.abs().max(1.0));
        }
    }

    #[test]
    fn naive_parallel_matches_serial() {
        let kernel = KernelSpec::gauss(1.0, 4).unwrap();
        let x = gaussian_cloud(40, 4, 8);
        let y = gaussian_cloud(33, 4, 9);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let serial = naive_sum(&problem, &kernel).unwrap();
        let parallel = naive_sum_mt(&problem, &kernel, 4).unwrap();
        assert_eq!(serial, parallel, "per-target sums are identical work");
    }

    #[test]
    fn sliced_direct_aligned_direction_is_1d_sum() {
        // data on the e1 axis with ξ = e1: projection is the identity
        let d = 3;
        let kernel = KernelSpec::gauss(0.8, d).unwrap();
        let xs = [0.1, -0.4, 0.9];
        let ys = [0.0, 0.55];
        let x = PointSet::from_rows(
            &xs.iter().map(|&v| vec![v, 0.0, 0.0]).collect::<Vec<_>>(),
        )
        .unwrap();
        let y = PointSet::from_rows(
            &ys.iter().map(|&v| vec![v, 0.0, 0.0]).collect::<Vec<_>>(),
        )
        .unwrap();
        let w = vec![1.0, 2.0, -0.5];
        let problem = SummationProblem::new(x, y, w.clone()).unwrap();
        let e1 = DirectionSet::from_points(
            PointSet::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap(),
            Generator::File,
            None,
        )
        .unwrap();
        let got = sliced_direct_sum(&problem, &kernel, &e1).unwrap();
        for (mi, &ym) in ys.iter().enumerate() {
            let want: f64 = xs
                .iter()
                .zip(&w)
                .map(|(&xn, &wn)| wn * kernel.sliced_basis((xn - ym).abs()).unwrap())
                .sum();
            assert!((got[mi] - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn sliced_direct_riesz_is_weighted_projection_sum() {
        // d=3, r=1: per-slice sum is −2 Σ w_n |⟨ξ, x_n − y_m⟩|
        let kernel = KernelSpec::riesz(1.0, 3).unwrap();
        let x = gaussian_cloud(7, 3, 11);
        let y = gaussian_cloud(4, 3, 12);
        let problem = SummationProblem::with_unit_weights(x.clone(), y.clone()).unwrap();
        let dirs = iid_uniform(1, 3, 13).unwrap();
        let xi = dirs.row(0).to_vec();
        let got = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        for (mi, ym) in y.rows().enumerate() {
            let want: f64 = x
                .rows()
                .map(|xn| {
                    let proj: f64 =
                        xn.iter().zip(ym).zip(&xi).map(|((a, b), c)| (a - b) * c).sum();
                    -2.0 * proj.abs()
                })
                .sum();
            assert!((got[mi] - want).abs() < 1e-11 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn sliced_direct_converges_to_naive() {
        // Bienaymé: MSE of the P-slice average is (single-slice variance)/P.
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        let x = gaussian_cloud(6, 3, 21);
        let y = gaussian_cloud(3, 3, 22);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let exact = naive_sum(&problem, &kernel).unwrap();
        // estimate the per-slice variance of each entry from 400 single slices
        let reps = 400;
        let mut mean = vec![0.0; problem.m()];
        let mut m2 = vec![0.0; problem.m()];
        for rep in 0..reps {
            let dirs = iid_uniform(1, 3, derive_seed(100, rep)).unwrap();
            let s = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
            for (i, &v) in s.iter().enumerate() {
                mean[i] += v;
                m2[i] += v * v;
            }
        }
        let p = 2000;
        let dirs = iid_uniform(p, 3, 77).unwrap();
        let sliced = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        for i in 0..problem.m() {
            let mu = mean[i] / reps as f64;
            let var = (m2[i] / reps as f64 - mu * mu).max(0.0);
            let sigma_p = (var / p as f64).sqrt();
            assert!(
                (sliced[i] - exact[i]).abs() < 6.0 * sigma_p + 1e-9,
                "entry {i}: sliced {} exact {} σ_P {}",
                sliced[i],
                exact[i],
                sigma_p
            );
        }
    }

    #[test]
    fn fourier_plan_constants() {
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        // tiny data radius: τ = 1/(2·g_max) = 1/(10σ)
        let x = gaussian_cloud(10, 3, 31);
        let scaled_rows: Vec<Vec<f64>> =
            x.rows().map(|r| r.iter().map(|v| v * 1e-3).collect()).collect();
        let xs = PointSet::from_rows(&scaled_rows).unwrap();
        let problem = SummationProblem::with_unit_weights(xs.clone(), xs).unwrap();
        let plan = build_fourier_plan(&problem, &kernel, None).unwrap();
        assert!((plan.tau() - 0.1).abs() < 1e-15);
        assert_eq!(plan.n_ft(), 128);
        // coefficients are the rescaled density at the integers
        let rescaled = kernel.rescaled(plan.tau()).unwrap();
        for (slot, k) in (-64i32..64).enumerate() {
            let want = rescaled.spectral_density_1d(k as f64).unwrap();
            let got = plan.coeffs[slot];
            assert!(got.im == 0.0 && (got.re - want).abs() < 1e-15);
            assert!(got.re >= 0.0);
        }
        // Σ_k c_k = f̃(0) = 1
        let sum: f64 = plan.coeffs.iter().map(|c| c.re).sum();
        assert!((sum - 1.0).abs() < 1e-6, "Σ c_k = {sum}");
        // conjugate symmetry (real coefficients): c_{−k} = c_k
        for k in 1..64usize {
            assert_eq!(plan.coeffs[64 - k], plan.coeffs[64 + k]);
        }
    }

    #[test]
    fn fourier_matches_sliced_direct_gauss() {
        let kernel = KernelSpec::gauss(1.2, 3).unwrap();
        let x = gaussian_cloud(64, 3, 41);
        let y = gaussian_cloud(64, 3, 42);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let dirs = iid_uniform(4, 3, 43).unwrap();
        let plan = build_fourier_plan(&problem, &kernel, None).unwrap();
        let fast = fourier_slice_sum(&problem, &kernel, &dirs, &plan).unwrap();
        let direct = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        let err = rel_l1(&fast, &direct);
        assert!(err < 1e-6, "relative L1 {err}");
    }

    #[test]
    fn fourier_single_pair_single_slice() {
        let kernel = KernelSpec::gauss(0.9, 3).unwrap();
        let x = PointSet::from_rows(&[vec![0.4, -0.2, 0.1]]).unwrap();
        let y = PointSet::from_rows(&[vec![-0.3, 0.5, 0.2]]).unwrap();
        let problem = SummationProblem::new(x.clone(), y.clone(), vec![1.7]).unwrap();
        let dirs = iid_uniform(1, 3, 5).unwrap();
        let plan = build_fourier_plan(&problem, &kernel, None).unwrap();
        let got = fourier_slice_sum(&problem, &kernel, &dirs, &plan).unwrap()[0];
        let diff: f64 = x
            .row(0)
            .iter()
            .zip(y.row(0))
            .zip(dirs.row(0))
            .map(|((a, b), c)| (a - b) * c)
            .sum();
        let want = 1.7 * kernel.sliced_basis(diff.abs()).unwrap();
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
    }

    #[test]
    fn fourier_zero_weights_zero_output() {
        let kernel = KernelSpec::laplace(1.0, 3).unwrap();
        let x = gaussian_cloud(20, 3, 51);
        let y = gaussian_cloud(20, 3, 52);
        let problem = SummationProblem::new(x, y, vec![0.0; 20]).unwrap();
        let dirs = iid_uniform(3, 3, 53).unwrap();
        let plan = build_fourier_plan(&problem, &kernel, None).unwrap();
        let s = fourier_slice_sum(&problem, &kernel, &dirs, &plan).unwrap();
        assert!(s.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn stale_plan_is_rejected() {
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        let x = gaussian_cloud(10, 3, 61);
        let y = gaussian_cloud(10, 3, 62);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let plan = build_fourier_plan(&problem, &kernel, None).unwrap();
        // bigger geometry against the stale plan
        let grown: Vec<Vec<f64>> = gaussian_cloud(10, 3, 63)
            .rows()
            .map(|r| r.iter().map(|v| v * 10.0).collect())
            .collect();
        let gx = PointSet::from_rows(&grown).unwrap();
        let big = SummationProblem::with_unit_weights(gx.clone(), gx).unwrap();
        let dirs = iid_uniform(2, 3, 64).unwrap();
        assert!(matches!(
            fourier_slice_sum(&big, &kernel, &dirs, &plan),
            Err(Error::PlanMismatch(_))
        ));
        // different kernel against the plan
        let other = KernelSpec::gauss(2.0, 3).unwrap();
        let p2 = SummationProblem::with_unit_weights(
            gaussian_cloud(10, 3, 61),
            gaussian_cloud(10, 3, 62),
        )
        .unwrap();
        assert!(matches!(
            fourier_slice_sum(&p2, &other, &dirs, &plan),
            Err(Error::PlanMismatch(_))
        ));
    }

    #[test]
    fn one_d_abs_core_cases() {
        // a = {0, 1}, w = {1, 1}, b = 0.5 → 1
        let pairs = [(0.0, 1.0), (1.0, 1.0)];
        let out = one_d_abs_sums(&pairs, &[0.5]);
        assert!((out[0] - 1.0).abs() < 1e-15);
        // b below all sources: Σ w (a − b)
        let pairs = [(1.0, 2.0), (3.0, 0.5)];
        let out = one_d_abs_sums(&pairs, &[-1.0]);
        assert!((out[0] - (2.0 * 2.0 + 0.5 * 4.0)).abs() < 1e-15);
        // b above all sources
        let out = one_d_abs_sums(&pairs, &[5.0]);
        assert!((out[0] - (2.0 * 4.0 + 0.5 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn sorting_matches_sliced_direct() {
        let kernel = KernelSpec::riesz(1.0, 5).unwrap();
        let x = gaussian_cloud(100, 5, 71);
        let y = gaussian_cloud(100, 5, 72);
        let mut rng = SplitMix64::new(73);
        let w: Vec<f64> = (0..100).map(|_| rng.normal()).collect();
        let problem = SummationProblem::new(x, y, w).unwrap();
        let dirs = iid_uniform(8, 5, 74).unwrap();
        let fast = sorting_slice_sum(&problem, &kernel, &dirs).unwrap();
        let direct = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        let err = rel_l1(&fast, &direct);
        assert!(err < 1e-10, "relative L1 {err}");
    }

    #[test]
    fn sorting_requires_negative_distance_kernel() {
        let x = gaussian_cloud(4, 3, 81);
        let problem = SummationProblem::with_unit_weights(x.clone(), x).unwrap();
        let dirs = iid_uniform(2, 3, 82).unwrap();
        for bad in [
            KernelSpec::gauss(1.0, 3).unwrap(),
            KernelSpec::riesz(0.5, 3).unwrap(),
        ] {
            assert!(matches!(
                sorting_slice_sum(&problem, &bad, &dirs),
                Err(Error::Unsupported(_))
            ));
        }
    }

    #[test]
    fn rff_exact_at_coincident_points() {
        // x = y: every feature is cos(0) = 1 and the sum is exact
        let kernel = KernelSpec::gauss(1.0, 4).unwrap();
        let one = PointSet::from_rows(&[vec![0.2, 0.1, -0.3, 0.7]]).unwrap();
        let problem = SummationProblem::new(one.clone(), one, vec![2.5]).unwrap();
        for backend in [rff_sum, orf_sum] {
            let s = backend(&problem, &kernel, 16, 3).unwrap();
            assert!((s[0] - 2.5).abs() < 1e-12, "cos(0) features sum exactly");
        }
    }

    #[test]
    fn rff_unbiased_for_fixed_pair() {
        // mean feature → F(‖x−y‖) for each PD kernel
        let d = 3;
        let x = PointSet::from_rows(&[vec![0.3, -0.1, 0.8]]).unwrap();
        let y = PointSet::from_rows(&[vec![-0.4, 0.2, 0.1]]).unwrap();
        let dist = crate::points::dist(x.row(0), y.row(0));
        let problem = SummationProblem::new(x, y, vec![1.0]).unwrap();
        for kernel in [
            KernelSpec::gauss(0.9, d).unwrap(),
            KernelSpec::laplace(1.3, d).unwrap(),
            KernelSpec::matern(1.0, 1.5, d).unwrap(),
        ] {
            let n_feat = 400_000;
            let s = rff_sum(&problem, &kernel, n_feat, 17).unwrap()[0];
            let want = kernel.basis(dist).unwrap();
            // feature variance ≤ 1 ⇒ stderr ≤ 1/√D
            let stderr = 1.0 / (n_feat as f64).sqrt();
            assert!(
                (s - want).abs() < 5.0 * stderr,
                "{}: {s} vs {want}",
                kernel.family().name()
            );
        }
    }

    #[test]
    fn orf_directions_orthogonal_for_small_d() {
        // With D ≤ d the feature directions are pairwise orthogonal; verify
        // via the underlying generator the backend uses.
        let dirs = crate::directions::orthogonal(4, 6, derive_seed(5, 1)).unwrap();
        for i in 0..4 {
            for j in 0..i {
                assert!(dot(dirs.row(i), dirs.row(j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn orf_unbiased_for_fixed_pair() {
        // the radial law is unchanged, so the mean feature is still F
        let d = 3;
        let x = PointSet::from_rows(&[vec![0.5, -0.2, 0.3]]).unwrap();
        let y = PointSet::from_rows(&[vec![-0.1, 0.4, -0.3]]).unwrap();
        let r = crate::points::dist(x.row(0), y.row(0));
        let problem = SummationProblem::new(x, y, vec![1.0]).unwrap();
        let kernel = KernelSpec::gauss(0.9, d).unwrap();
        let n_feat = 300_000;
        let s = orf_sum(&problem, &kernel, n_feat, 23).unwrap()[0];
        let want = kernel.basis(r).unwrap();
        // orthogonal blocks correlate features, so allow a margin over the
        // iid stderr bound 1/√D
        let stderr = 1.0 / (n_feat as f64).sqrt();
        assert!((s - want).abs() < 8.0 * stderr, "{s} vs {want}");
    }

    #[test]
    fn rff_k1_matches_rff_in_distribution() {
        // With k = 1 and iid slices, RFF-k slicing and plain RFF draw the
        // feature (radius, direction) pair from the same law: over many
        // seeds the estimator means and variances must agree.
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        let x = gaussian_cloud(6, 3, 161);
        let y = gaussian_cloud(1, 3, 162);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let p = 4;
        let n_seeds = 200;
        let stats = |f: &dyn Fn(u64) -> f64| -> (f64, f64) {
            let vals: Vec<f64> = (0..n_seeds).map(|s| f(s as u64)).collect();
            let mean = vals.iter().sum::<f64>() / n_seeds as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (n_seeds as f64 - 1.0);
            (mean, var)
        };
        let (m_rff, v_rff) = stats(&|s| {
            rff_sum(&problem, &kernel, p, derive_seed(1000, s)).unwrap()[0]
        });
        let (m_k, v_k) = stats(&|s| {
            let dirs = iid_uniform(p, 3, derive_seed(2000, s)).unwrap();
            rff_k_slice_sum(&problem, &kernel, &dirs, 1, derive_seed(3000, s)).unwrap()[0]
        });
        // means agree within 4 × the combined standard error
        let se = ((v_rff + v_k) / n_seeds as f64).sqrt();
        assert!((m_rff - m_k).abs() < 4.0 * se, "means {m_rff} vs {m_k} (se {se})");
        // variances agree within the sampling noise of a variance estimate
        // (relative stderr ≈ √(2/n) ≈ 10%)
        let ratio = v_rff / v_k;
        assert!((0.6..1.7).contains(&ratio), "variance ratio {ratio}");
    }

    #[test]
    fn rff_k_trivial_and_convergence() {
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        let one = PointSet::from_rows(&[vec![0.5, 0.5, 0.0]]).unwrap();
        let same = SummationProblem::new(one.clone(), one, vec![3.0]).unwrap();
        let dirs = iid_uniform(4, 3, 7).unwrap();
        let s = rff_k_slice_sum(&same, &kernel, &dirs, 3, 11).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12);
        // k → large with fixed dirs converges to sliced_direct on those dirs
        let x = gaussian_cloud(5, 3, 101);
        let y = gaussian_cloud(4, 3, 102);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let k = 200_000;
        let approx = rff_k_slice_sum(&problem, &kernel, &dirs, k, 13).unwrap();
        let exact = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        let stderr = 5.0 / (k as f64 * dirs.p() as f64).sqrt();
        for (a, e) in approx.iter().zip(&exact) {
            assert!((a - e).abs() < 6.0 * stderr, "{a} vs {e}");
        }
    }

    #[test]
    fn linearity_in_weights() {
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        let x = gaussian_cloud(12, 3, 111);
        let y = gaussian_cloud(9, 3, 112);
        let mut rng = SplitMix64::new(113);
        let w1: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
        let w2: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
        let (a, b) = (1.7, -0.6);
        let combo: Vec<f64> = w1.iter().zip(&w2).map(|(u, v)| a * u + b * v).collect();
        let dirs = iid_uniform(4, 3, 114).unwrap();
        let mk = |w: Vec<f64>| {
            SummationProblem::new(x.clone(), y.clone(), w).unwrap()
        };
        let plan = build_fourier_plan(&mk(combo.clone()), &kernel, None).unwrap();
        let backends: Vec<Box<dyn Fn(&SummationProblem) -> Vec<f64> + '_>> = vec![
            Box::new(|p| naive_sum(p, &kernel).unwrap()),
            Box::new(|p| sliced_direct_sum(p, &kernel, &dirs).unwrap()),
            Box::new(|p| fourier_slice_sum(p, &kernel, &dirs, &plan).unwrap()),
            Box::new(|p| rff_sum(p, &kernel, 32, 9).unwrap()),
        ];
        for backend in backends {
            let s1 = backend(&mk(w1.clone()));
            let s2 = backend(&mk(w2.clone()));
            let sc = backend(&mk(combo.clone()));
            for i in 0..s1.len() {
                let want = a * s1[i] + b * s2[i];
                assert!(
                    (sc[i] - want).abs() < 1e-11 * (1.0 + want.abs()),
                    "entry {i}"
                );
            }
        }
    }

    #[test]
    fn permutation_invariance() {
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        let x = gaussian_cloud(30, 3, 121);
        let y = gaussian_cloud(10, 3, 122);
        let mut rng = SplitMix64::new(123);
        let w: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
        // reverse the sources
        let perm_rows: Vec<Vec<f64>> = x.rows().rev().map(|r| r.to_vec()).collect();
        let wp: Vec<f64> = w.iter().rev().copied().collect();
        let p1 = SummationProblem::new(x, y.clone(), w).unwrap();
        let p2 =
            SummationProblem::new(PointSet::from_rows(&perm_rows).unwrap(), y, wp).unwrap();
        let dirs = iid_uniform(4, 3, 124).unwrap();
        let riesz = KernelSpec::riesz(1.0, 3).unwrap();
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (naive_sum(&p1, &kernel).unwrap(), naive_sum(&p2, &kernel).unwrap()),
            (
                sliced_direct_sum(&p1, &kernel, &dirs).unwrap(),
                sliced_direct_sum(&p2, &kernel, &dirs).unwrap(),
            ),
            (
                sorting_slice_sum(&p1, &riesz, &dirs).unwrap(),
                sorting_slice_sum(&p2, &riesz, &dirs).unwrap(),
            ),
        ];
        for (a, b) in pairs {
            for i in 0..a.len() {
                assert!((a[i] - b[i]).abs() <= 1e-12 * (1.0 + a[i].abs()));
            }
        }
    }

    #[test]
    fn parallel_slicing_close_to_serial() {
        let kernel = KernelSpec::gauss(1.0, 3).unwrap();
        let x = gaussian_cloud(50, 3, 131);
        let y = gaussian_cloud(40, 3, 132);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let dirs = iid_uniform(8, 3, 133).unwrap();
        let serial = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        let parallel = sliced_direct_sum_mt(&problem, &kernel, &dirs, 3).unwrap();
        for (a, b) in serial.iter().zip(&parallel) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn periodized_riesz_fourier_backend() {
        let kernel = KernelSpec::riesz(1.0, 3).unwrap();
        let x = gaussian_cloud(48, 3, 141);
        let y = gaussian_cloud(48, 3, 142);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let dirs = iid_uniform(4, 3, 143).unwrap();
        let plan = build_fourier_plan(&problem, &kernel, Some(1024)).unwrap();
        let fast = fourier_slice_sum(&problem, &kernel, &dirs, &plan).unwrap();
        let direct = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        // |·| has a kink, so the truncated series converges slowly
        let err = rel_l1(&fast, &direct);
        assert!(err < 5e-3, "relative L1 {err}");
    }

    #[test]
    fn periodized_thin_plate_fourier_backend() {
        let kernel = KernelSpec::thin_plate(3).unwrap();
        let x = gaussian_cloud(48, 3, 151);
        let y = gaussian_cloud(48, 3, 152);
        let problem = SummationProblem::with_unit_weights(x, y).unwrap();
        let dirs = iid_uniform(4, 3, 153).unwrap();
        let plan = build_fourier_plan(&problem, &kernel, Some(1024)).unwrap();
        let fast = fourier_slice_sum(&problem, &kernel, &dirs, &plan).unwrap();
        let direct = sliced_direct_sum(&problem, &kernel, &dirs).unwrap();
        let err = rel_l1(&fast, &direct);
        assert!(err < 1e-4, "relative L1 {err}");
    }

    #[test]
    fn hermite_bridge_matches_endpoint_data() {
        let da = [1.0, -2.0, 0.5, 3.0];
        let db = [1.0, 2.0, 0.5, -3.0];
        let h = hermite_two_point(0.3, &da, 0.7, &db);
        assert!((h(0.3) - 1.0).abs() < 1e-12);
        assert!((h(0.7) - 1.0).abs() < 1e-12);
        let fd = (h(0.3 + 1e-6) - h(0.3 - 1e-6)) / 2e-6;
        assert!((fd + 2.0).abs() < 1e-5);
        // mirrored derivatives ⇒ symmetric about the midpoint
        for &s in &[0.05, 0.1, 0.17] {
            assert!((h(0.5 + s) - h(0.5 - s)).abs() < 1e-10);
        }
    }
}
