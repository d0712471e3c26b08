//! One-dimensional non-equispaced discrete Fourier transforms.
//!
//! The adjoint transform computes `ŵ_k = Σ_n w_n e^{−2πik x_n}` for
//! `k = −N_ft/2 … N_ft/2 − 1`; the forward transform evaluates
//! `t_m = Σ_k c_k e^{+2πik y_m}`. The fast path is window gridding:
//! spread onto an oversampled grid, FFT, deconvolve by the window's
//! Fourier coefficients (and the reverse for the forward map). Exact
//! `O(N·N_ft)` direct versions serve as test oracles.

use crate::math::bessel_i0;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Window shape for the gridding interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    KaiserBessel,
    Gaussian,
}

/// Precomputed state for transforms with a fixed mode count.
///
/// Plans are immutable; executions allocate their own scratch and may run
/// concurrently on one shared plan.
#[derive(Clone, Debug)]
pub struct NfftPlan {
    n_ft: usize,
    grid_len: usize,
    cutoff: usize,
    window: Window,
    /// window shape parameter
    b: f64,
    /// `L·φ̂(k)` for k = −N_ft/2 … N_ft/2 − 1
    deconv: Vec<f64>,
    /// e^{−2πi j / L} for j < L/2
    twiddles: Vec<Complex64>,
}

impl NfftPlan {
    /// `oversampling ≥ 1.25` enlarges the grid to the next power of two.
    pub fn new(n_ft: usize, oversampling: f64, cutoff: usize, window: Window) -> Result<Self> {
        if n_ft == 0 || n_ft % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "mode count must be even and positive, got {n_ft}"
            )));
        }
        if !(oversampling >= 1.25) {
            return Err(Error::InvalidParameter(format!(
                "oversampling must be at least 1.25, got {oversampling}"
            )));
        }
        if cutoff < 2 {
            return Err(Error::InvalidParameter(format!(
                "window cutoff must be at least 2, got {cutoff}"
            )));
        }
        let grid_len = (oversampling * n_ft as f64).ceil() as usize;
        let grid_len = grid_len.next_power_of_two();
        if grid_len < 2 * cutoff {
            return Err(Error::InvalidParameter(
                "grid too small for the window support".into(),
            ));
        }
        let sigma_eff = grid_len as f64 / n_ft as f64;
        let m = cutoff as f64;
        let b = match window {
            // shape parameter π·m·(2 − 1/σ) enters through b·m
            Window::KaiserBessel => PI * (2.0 - 1.0 / sigma_eff),
            Window::Gaussian => 2.0 * sigma_eff * m / ((2.0 * sigma_eff - 1.0) * PI),
        };
        let half = n_ft / 2;
        let l = grid_len as f64;
        let deconv: Vec<f64> = (-(half as isize)..half as isize)
            .map(|k| {
                let kf = k as f64;
                match window {
                    Window::KaiserBessel => {
                        let arg = b * b - (TAU * kf / l) * (TAU * kf / l);
                        debug_assert!(arg >= 0.0);
                        bessel_i0(m * arg.sqrt())
                    }
                    Window::Gaussian => (-b * (PI * kf / l) * (PI * kf / l)).exp(),
                }
            })
            .collect();
        let twiddles: Vec<Complex64> = (0..grid_len / 2)
            .map(|j| Complex64::from_polar(1.0, -TAU * j as f64 / l))
            .collect();
        Ok(Self { n_ft, grid_len, cutoff, window, b, deconv, twiddles })
    }

    /// Defaults tuned for ~1e−12 window accuracy.
    pub fn with_defaults(n_ft: usize) -> Result<Self> {
        Self::new(n_ft, 2.0, 8, Window::KaiserBessel)
    }

    pub fn n_ft(&self) -> usize {
        self.n_ft
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    /// Window value φ(x) on the torus, support |x| ≤ cutoff/L.
    fn phi(&self, x: f64) -> f64 {
        let l = self.grid_len as f64;
        let m = self.cutoff as f64;
        let u = l * x;
        match self.window {
            Window::KaiserBessel => {
                let q = m * m - u * u;
                if q < 0.0 {
                    0.0
                } else if q == 0.0 {
                    self.b / PI
                } else {
                    let r = q.sqrt();
                    (self.b * r).sinh() / (PI * r)
                }
            }
            Window::Gaussian => {
                if u.abs() > m {
                    0.0
                } else {
                    (-u * u / self.b).exp() / (PI * self.b).sqrt()
                }
            }
        }
    }

    fn check_nodes(&self, nodes: &[f64]) -> Result<()> {
        for (i, &x) in nodes.iter().enumerate() {
            if !(x.is_finite() && (-0.5..0.5).contains(&x)) {
                return Err(Error::Domain(format!(
                    "node {i} = {x} outside [-1/2, 1/2)"
                )));
            }
        }
        Ok(())
    }

    /// Fast adjoint: `ŵ_k = Σ_n w_n e^{−2πik x_n}`.
    pub fn adjoint(&self, nodes: &[f64], coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if nodes.len() != coeffs.len() {
            return Err(Error::InvalidParameter("nodes and coefficients differ in length".into()));
        }
        self.check_nodes(nodes)?;
        let l = self.grid_len;
        let m = self.cutoff as isize;
        let mut grid = vec![Complex64::ZERO; l];
        for (&x, &w) in nodes.iter().zip(coeffs) {
            let c = x * l as f64;
            let center = c.floor() as isize;
            for off in -m..=m + 1 {
                let idx = center + off;
                let dist = x - idx as f64 / l as f64;
                let val = self.phi(dist);
                if val != 0.0 {
                    let wrapped = idx.rem_euclid(l as isize) as usize;
                    grid[wrapped] += w * val;
                }
            }
        }
        fft_in_place(&mut grid, &self.twiddles, false);
        let half = self.n_ft / 2;
        let mut out = Vec::with_capacity(self.n_ft);
        for (slot, k) in (-(half as isize)..half as isize).enumerate() {
            let idx = k.rem_euclid(l as isize) as usize;
            out.push(grid[idx] / self.deconv[slot]);
        }
        Ok(out)
    }

    /// Fast forward: `t_m = Σ_k spectral_k e^{+2πik y_m}`.
    pub fn forward(&self, nodes: &[f64], spectral: &[Complex64]) -> Result<Vec<Complex64>> {
        if spectral.len() != self.n_ft {
            return Err(Error::InvalidParameter(format!(
                "expected {} spectral coefficients, got {}",
                self.n_ft,
                spectral.len()
            )));
        }
        self.check_nodes(nodes)?;
        let l = self.grid_len;
        let half = self.n_ft / 2;
        let mut grid = vec![Complex64::ZERO; l];
        for (slot, k) in (-(half as isize)..half as isize).enumerate() {
            let idx = k.rem_euclid(l as isize) as usize;
            grid[idx] = spectral[slot] / self.deconv[slot];
        }
        // unscaled inverse FFT: h_l = Σ_k ĥ_k e^{+2πikl/L}
        fft_in_place(&mut grid, &self.twiddles, true);
        let m = self.cutoff as isize;
        let mut out = Vec::with_capacity(nodes.len());
        for &y in nodes {
            let c = y * l as f64;
            let center = c.floor() as isize;
            let mut acc = Complex64::ZERO;
            for off in -m..=m + 1 {
                let idx = center + off;
                let dist = y - idx as f64 / l as f64;
                let val = self.phi(dist);
                if val != 0.0 {
                    let wrapped = idx.rem_euclid(l as isize) as usize;
                    acc += grid[wrapped] * val;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Exact adjoint sum, the accuracy oracle for [`NfftPlan::adjoint`].
pub fn direct_adjoint(nodes: &[f64], coeffs: &[Complex64], n_ft: usize) -> Vec<Complex64> {
    let half = n_ft as isize / 2;
    (-half..half)
        .map(|k| {
            let mut acc = Complex64::ZERO;
            for (&x, &w) in nodes.iter().zip(coeffs) {
                acc += w * Complex64::from_polar(1.0, -TAU * k as f64 * x);
            }
            acc
        })
        .collect()
}

/// Exact forward sum, the accuracy oracle for [`NfftPlan::forward`].
pub fn direct_forward(nodes: &[f64], spectral: &[Complex64]) -> Vec<Complex64> {
    let n_ft = spectral.len();
    let half = n_ft as isize / 2;
    nodes
        .iter()
        .map(|&y| {
            let mut acc = Complex64::ZERO;
            for (slot, k) in (-half..half).enumerate() {
                acc += spectral[slot] * Complex64::from_polar(1.0, TAU * k as f64 * y);
            }
            acc
        })
        .collect()
}

/// Iterative radix-2 FFT; `inverse` computes the unscaled inverse transform.
pub(crate) fn fft_in_place(buf: &mut [Complex64], twiddles: &[Complex64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    debug_assert_eq!(twiddles.len(), n / 2);
    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i.reverse_bits() >> (usize::BITS - bits)) as usize;
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let tw = twiddles[k * stride];
                let tw = if inverse { tw.conj() } else { tw };
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * tw;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
}
