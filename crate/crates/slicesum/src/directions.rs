//! Direction sets on the unit sphere `S^{d−1}`.
//!
//! Four generators: iid uniform, Sobol points pushed through the inverse
//! normal CDF and normalized, orthogonal frames from QR factors, and
//! distance designs that minimize the symmetrized negative-distance energy
//! with an Adam-style optimizer. Sets can be saved/loaded in a plain text
//! format and re-randomized by a Haar-uniform rotation, which makes the
//! equal-weight quadrature unbiased.

use crate::math::inv_norm_cdf;
use crate::points::{self, PointSet};
use crate::rng::{derive_seed, SplitMix64};
use crate::sobol::SobolSeq;
use crate::{Error, Result};

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub use crate::sobol::MAX_DIM as MAX_SOBOL_DIM;

/// Provenance of a direction set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Iid,
    SobolSphere,
    Orthogonal,
    Distance,
    SphericalDesign,
    File,
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Iid => "iid",
            Generator::SobolSphere => "sobol",
            Generator::Orthogonal => "orthogonal",
            Generator::Distance => "distance",
            Generator::SphericalDesign => "spherical-design",
            Generator::File => "file",
        }
    }
}

/// `P` unit vectors in `R^d` with provenance and seed.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    vectors: PointSet,
    generator: Generator,
    seed: Option<u64>,
}

impl DirectionSet {
    /// Wraps a matrix of unit rows (each within 1e−12 of unit norm).
    pub fn from_points(vectors: PointSet, generator: Generator, seed: Option<u64>) -> Result<Self> {
        if vectors.n() == 0 {
            return Err(Error::InvalidParameter("direction set must contain at least one row".into()));
        }
        if vectors.dim() < 2 {
            return Err(Error::InvalidParameter("directions need dimension at least 2".into()));
        }
        for (i, row) in vectors.rows().enumerate() {
            let nrm = points::norm(row);
            if (nrm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has norm {nrm}, not unit within 1e-12"
                )));
            }
        }
        Ok(Self { vectors, generator, seed })
    }

    pub fn p(&self) -> usize {
        self.vectors.n()
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, p: usize) -> &[f64] {
        self.vectors.row(p)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.rows()
    }

    pub fn points(&self) -> &PointSet {
        &self.vectors
    }
}

fn normalize_rows(mat: &mut [f64], d: usize) {
    for row in mat.chunks_exact_mut(d) {
        let nrm = points::norm(row);
        if nrm > 0.0 {
            for v in row.iter_mut() {
                *v /= nrm;
            }
        }
    }
}

/// `P` iid uniform directions: normalized standard Gaussian rows.
pub fn iid_uniform(p: usize, d: usize, seed: u64) -> Result<DirectionSet> {
    check_pd(p, d)?;
    let mut rng = SplitMix64::new(seed);
    let mut data = vec![0.0; p * d];
    for row in data.chunks_exact_mut(d) {
        loop {
            rng.fill_normal(row);
            if points::norm(row) > 1e-300 {
                break;
            }
        }
    }
    normalize_rows(&mut data, d);
    DirectionSet::from_points(PointSet::from_flat(data, p, d)?, Generator::Iid, Some(seed))
}

/// Sobol points in `(0,1)^d` mapped through the inverse normal CDF and
/// normalized to the sphere. Index 0 and exactly-zero Gaussian images are
/// skipped; `shift_seed` applies a digital shift (None = plain sequence).
pub fn sobol_sphere(p: usize, d: usize, shift_seed: Option<u64>) -> Result<DirectionSet> {
    check_pd(p, d)?;
    let mut seq = SobolSeq::new(d, shift_seed)?;
    let mut data = Vec::with_capacity(p * d);
    let mut u = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut produced = 0;
    while produced < p {
        seq.next_point(&mut u);
        for (zi, &ui) in z.iter_mut().zip(u.iter()) {
            *zi = inv_norm_cdf(ui);
        }
        let nrm = points::norm(&z);
        if nrm == 0.0 {
            // the unshifted point (1/2, …, 1/2) maps to the zero vector
            continue;
        }
        data.extend(z.iter().map(|v| v / nrm));
        produced += 1;
    }
    DirectionSet::from_points(PointSet::from_flat(data, p, d)?, Generator::SobolSphere, shift_seed)
}

/// Columns of Haar-uniform orthogonal matrices: ⌈P/d⌉ Gaussian matrices,
/// QR with column signs fixed by the diagonal of R, first P columns kept.
pub fn orthogonal(p: usize, d: usize, seed: u64) -> Result<DirectionSet> {
    check_pd(p, d)?;
    let mut rng = SplitMix64::new(seed);
    let blocks = p.div_ceil(d);
    let mut data = Vec::with_capacity(p * d);
    let mut taken = 0;
    for _ in 0..blocks {
        let q = haar_orthogonal(d, &mut rng);
        for col in 0..d {
            if taken == p {
                break;
            }
            // column `col` of the d×d matrix as a direction row
            data.extend((0..d).map(|r| q[r * d + col]));
            taken += 1;
        }
    }
    normalize_rows(&mut data, d);
    DirectionSet::from_points(PointSet::from_flat(data, p, d)?, Generator::Orthogonal, Some(seed))
}

/// Haar-uniform orthogonal `d×d` matrix (row-major) from a seeded stream.
pub fn random_orthogonal(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    haar_orthogonal(d, &mut rng)
}

/// QR of a Gaussian matrix with sign correction, row-major output.
fn haar_orthogonal(d: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let mut a = vec![0.0; d * d];
    rng.fill_normal(&mut a);
    let (mut q, rdiag) = householder_qr(&mut a, d);
    for (j, &rj) in rdiag.iter().enumerate() {
        if rj < 0.0 {
            for i in 0..d {
                q[i * d + j] = -q[i * d + j];
            }
        }
    }
    q
}

/// Householder QR of a square matrix; returns (Q, diag(R)).
fn householder_qr(a: &mut [f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        q[i * d + i] = 1.0;
    }
    let mut v = vec![0.0; d];
    for k in 0..d {
        // Householder vector for column k
        let mut norm_x = 0.0;
        for i in k..d {
            norm_x += a[i * d + k] * a[i * d + k];
        }
        let norm_x = norm_x.sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let alpha = if a[k * d + k] >= 0.0 { -norm_x } else { norm_x };
        let mut vnorm2 = 0.0;
        for i in k..d {
            v[i] = a[i * d + k];
            if i == k {
                v[i] -= alpha;
            }
            vnorm2 += v[i] * v[i];
        }
        if vnorm2 == 0.0 {
            continue;
        }
        // apply H = I − 2vvᵀ/‖v‖² to A (left) and accumulate into Q (right)
        for j in k..d {
            let mut dot = 0.0;
            for i in k..d {
                dot += v[i] * a[i * d + j];
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..d {
                a[i * d + j] -= f * v[i];
            }
        }
        for i in 0..d {
            let mut dot = 0.0;
            for l in k..d {
                dot += q[i * d + l] * v[l];
            }
            let f = 2.0 * dot / vnorm2;
            for l in k..d {
                q[i * d + l] -= f * v[l];
            }
        }
    }
    let rdiag = (0..d).map(|k| a[k * d + k]).collect();
    (q, rdiag)
}

/// Rotate every direction by a Haar-uniform orthogonal matrix.
///
/// Preserves pairwise inner products, so energies are unchanged; the
/// rotated set makes the equal-weight quadrature an unbiased estimator.
pub fn randomize(dirs: &DirectionSet, seed: u64) -> DirectionSet {
    let d = dirs.dim();
    let a = random_orthogonal(d, seed);
    let mut data = vec![0.0; dirs.p() * d];
    for (p, row) in dirs.rows().enumerate() {
        let out = &mut data[p * d..(p + 1) * d];
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += a[i * d + j] * row[j];
            }
            out[i] = s;
        }
        // rotation is an isometry; renormalize to keep the 1e-12 contract
        let nrm = points::norm(out);
        for v in out.iter_mut() {
            *v /= nrm;
        }
    }
    DirectionSet {
        vectors: PointSet::from_flat(data, dirs.p(), d).expect("rotation preserves shape"),
        generator: dirs.generator,
        seed: Some(seed),
    }
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

/// Symmetrized distance energy
/// `E_sym(ξ) = −2 Σ_{p,q} (‖ξ_p − ξ_q‖ + ‖ξ_p + ξ_q‖)`, diagonal included.
pub fn energy_sym(dirs: &DirectionSet) -> f64 {
    let p = dirs.p();
    let mut sum = 0.0;
    for i in 0..p {
        let xi = dirs.row(i);
        for j in 0..p {
            let xj = dirs.row(j);
            let mut dm = 0.0;
            let mut dp = 0.0;
            for k in 0..xi.len() {
                let a = xi[k] - xj[k];
                let b = xi[k] + xj[k];
                dm += a * a;
                dp += b * b;
            }
            sum += dm.sqrt() + dp.sqrt();
        }
    }
    -2.0 * sum
}

/// Riesz distance energy `−Σ_{p≠q} ‖ξ_p − ξ_q‖^s` for `s ∈ (0, 2)`.
pub fn energy_riesz(dirs: &DirectionSet, exponent: f64) -> Result<f64> {
    if !(exponent > 0.0 && exponent < 2.0) {
        return Err(Error::Domain(format!(
            "riesz energy exponent must lie in (0, 2), got {exponent}"
        )));
    }
    let p = dirs.p();
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let dist = points::dist(dirs.row(i), dirs.row(j));
            if dist > 0.0 {
                sum += dist.powf(exponent);
            }
        }
    }
    Ok(-sum)
}

/// Closed-form optimum of `E_sym` for orthonormal sets (P ≤ d).
pub fn energy_sym_orthonormal(p: usize) -> f64 {
    let pf = p as f64;
    -4.0 * pf - 4.0 * 2.0f64.sqrt() * pf * (pf - 1.0)
}

// ---------------------------------------------------------------------------
// Distance design optimization
// ---------------------------------------------------------------------------

/// Adam settings for the distance-design optimizer.
#[derive(Clone, Copy, Debug)]
pub struct EnergyOptConfig {
    /// Gradient step budget; 0 picks `max(10·d·P, 3000)`.
    pub steps: usize,
    pub step_size: f64,
    pub decay: (f64, f64),
    /// Clamp for near-coincident pair distances in the gradient.
    pub pair_clamp: f64,
    pub seed: u64,
}

impl Default for EnergyOptConfig {
    fn default() -> Self {
        Self { steps: 0, step_size: 0.01, decay: (0.9, 0.999), pair_clamp: 1e-12, seed: 0 }
    }
}

impl EnergyOptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_size <= 0.0 {
            return Err(Error::InvalidParameter("step_size must be positive".into()));
        }
        let (b1, b2) = self.decay;
        if !(0.0 < b1 && b1 < 1.0 && 0.0 < b2 && b2 < 1.0) {
            return Err(Error::InvalidParameter("decay rates must lie in (0, 1)".into()));
        }
        if self.pair_clamp <= 0.0 {
            return Err(Error::InvalidParameter("pair_clamp must be positive".into()));
        }
        Ok(())
    }

    fn budget(&self, p: usize, d: usize) -> usize {
        if self.steps > 0 {
            self.steps
        } else {
            (10 * d * p).max(3000)
        }
    }
}

/// Distance QMC design: minimize `E_sym` over the sphere by projected
/// Adam steps from an iid start, returning the best iterate seen.
pub fn distance_design(p: usize, d: usize, cfg: &EnergyOptConfig) -> Result<DirectionSet> {
    check_pd(p, d)?;
    cfg.validate()?;
    let start = iid_uniform(p, d, cfg.seed)?;
    let mut x: Vec<f64> = start.points().as_slice().to_vec();
    let steps = cfg.budget(p, d);
    let (b1, b2) = cfg.decay;
    let mut m = vec![0.0; p * d];
    let mut v = vec![0.0; p * d];
    let mut grad = vec![0.0; p * d];
    let mut best = x.clone();
    let mut best_energy = energy_sym_flat(&x, p, d);
    let mut since_improvement = 0usize;
    let patience = (steps / 4).max(1000);
    for step in 0..steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        // ∂E_sym/∂ξ_a = −2 [ 2 Σ_{q≠a} ((ξ_a−ξ_q)/‖·‖ + (ξ_a+ξ_q)/‖·‖) + 2ξ_a ]
        for a in 0..p {
            for q in 0..p {
                if a == q {
                    continue;
                }
                let xa = &x[a * d..(a + 1) * d];
                let xq = &x[q * d..(q + 1) * d];
                let mut dm = 0.0;
                let mut dp = 0.0;
                for k in 0..d {
                    let s = xa[k] - xq[k];
                    let t = xa[k] + xq[k];
                    dm += s * s;
                    dp += t * t;
                }
                let dm = dm.sqrt().max(cfg.pair_clamp);
                let dp = dp.sqrt().max(cfg.pair_clamp);
                for k in 0..d {
                    let s = x[a * d + k] - x[q * d + k];
                    let t = x[a * d + k] + x[q * d + k];
                    let mut g = 0.0;
                    if s != 0.0 || t != 0.0 {
                        g = -4.0 * (s / dm + t / dp);
                    }
                    grad[a * d + k] += g;
                }
            }
            // project to the tangent space of the sphere: the radial
            // component is removed by the renormalization anyway, and
            // keeping it out of Adam's moment estimates is what lets the
            // iterates settle onto the minimizer.
            let ga = &mut grad[a * d..(a + 1) * d];
            let xa = &x[a * d..(a + 1) * d];
            let radial: f64 = ga.iter().zip(xa).map(|(g, xi)| g * xi).sum();
            for k in 0..d {
                ga[k] -= radial * xa[k];
            }
        }
        let t = (step + 1) as f64;
        let bc1 = 1.0 - b1.powf(t);
        let bc2 = 1.0 - b2.powf(t);
        for i in 0..p * d {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            let mh = m[i] / bc1;
            let vh = v[i] / bc2;
            x[i] -= cfg.step_size * mh / (vh.sqrt() + 1e-8);
        }
        normalize_rows(&mut x, d);
        let e = energy_sym_flat(&x, p, d);
        if !e.is_finite() {
            return Err(Error::OptimizationDiverged { steps: step + 1 });
        }
        if e < best_energy {
            best_energy = e;
            best.copy_from_slice(&x);
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement > patience {
                break;
            }
        }
    }
    DirectionSet::from_points(PointSet::from_flat(best, p, d)?, Generator::Distance, Some(cfg.seed))
}

fn energy_sym_flat(x: &[f64], p: usize, d: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..p {
        let xi = &x[i * d..(i + 1) * d];
        for j in 0..p {
            let xj = &x[j * d..(j + 1) * d];
            let mut dm = 0.0;
            let mut dp = 0.0;
            for k in 0..d {
                let a = xi[k] - xj[k];
                let b = xi[k] + xj[k];
                dm += a * a;
                dp += b * b;
            }
            sum += dm.sqrt() + dp.sqrt();
        }
    }
    -2.0 * sum
}

fn check_pd(p: usize, d: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidParameter("need at least one direction".into()));
    }
    if d < 2 {
        return Err(Error::InvalidParameter("dimension must be at least 2".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// Save as text: header line `d P`, then P rows of d floats at 17
/// significant digits (lossless f64 round trip).
pub fn save_directions<P: AsRef<Path>>(dirs: &DirectionSet, path: P) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", dirs.dim(), dirs.p()));
    for row in dirs.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Load a direction file.
///
/// With a `d P` header the shape is checked against it; without one
/// (e.g. published spherical-design tables) `d` is inferred from the first
/// row's field count. Rows with `|‖ξ‖ − 1| < 1e−6` are renormalized,
/// larger deviations are rejected.
pub fn load_directions<P: AsRef<Path>>(path: P) -> Result<DirectionSet> {
    let f = std::fs::File::open(path)?;
    let reader = BufReader::new(f);
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            lines.push(t.to_string());
        }
    }
    if lines.is_empty() {
        return Err(Error::Parse("empty direction file".into()));
    }
    // Header detection: two integer tokens consistent with the line count.
    let first: Vec<&str> = lines[0].split_whitespace().collect();
    let header = if first.len() == 2 {
        match (first[0].parse::<usize>(), first[1].parse::<usize>()) {
            (Ok(d), Ok(p)) if d >= 2 && p >= 1 && lines.len() - 1 == p => Some((d, p)),
            _ => None,
        }
    } else {
        None
    };
    let (d, rows_start) = match header {
        Some((d, _)) => (d, 1),
        None => (first.len(), 0),
    };
    if d < 2 {
        return Err(Error::Parse(format!("inferred dimension {d} is too small")));
    }
    let mut data = Vec::with_capacity((lines.len() - rows_start) * d);
    for (lineno, line) in lines.iter().enumerate().skip(rows_start) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d {
            return Err(Error::Parse(format!(
                "line {}: expected {d} fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(d);
        for f in fields {
            row.push(f.parse::<f64>().map_err(|e| {
                Error::Parse(format!("line {}: bad float {f:?}: {e}", lineno + 1))
            })?);
        }
        let nrm = points::norm(&row);
        if (nrm - 1.0).abs() >= 1e-6 {
            return Err(Error::Parse(format!(
                "line {}: row norm {nrm} deviates from 1 by ≥ 1e-6",
                lineno + 1
            )));
        }
        if (nrm - 1.0).abs() > 1e-12 {
            for v in row.iter_mut() {
                *v /= nrm;
            }
        }
        data.extend_from_slice(&row);
    }
    let p = data.len() / d;
    if p == 0 {
        return Err(Error::Parse("direction file holds no rows".into()));
    }
    DirectionSet::from_points(PointSet::from_flat(data, p, d)?, Generator::File, None)
}

/// Per-repetition realization used by experiments: fresh sample for random
/// generators, digital shift for Sobol, random rotation for fixed sets.
pub fn realize_for_rep(
    base: &DirectionSet,
    generator: Generator,
    p: usize,
    d: usize,
    seed: u64,
    rep: u64,
) -> Result<DirectionSet> {
    let rep_seed = derive_seed(seed, rep);
    match generator {
        Generator::Iid => iid_uniform(p, d, rep_seed),
        Generator::Orthogonal => orthogonal(p, d, rep_seed),
        Generator::SobolSphere => sobol_sphere(p, d, Some(rep_seed)),
        Generator::Distance | Generator::SphericalDesign | Generator::File => {
            Ok(randomize(base, rep_seed))
        }
    }
}
