//! Browser demo bindings: direction sets on the sphere, slicing-error
//! convergence curves, and kernel basis-function profiles.
//!
//! Each export returns a JSON string (flat numeric arrays) that the static
//! page in `www/` renders onto canvases. Everything is seeded and pure, so
//! the demo needs no JS-side randomness and no framework. The `imp` module
//! keeps the logic host-testable; the `#[wasm_bindgen]` wrappers only map
//! errors into `JsValue`.

use wasm_bindgen::prelude::*;

mod imp {
    use slicesum::analysis::{rff_error_experiment, slicing_error_experiment};
    use slicesum::directions::{
        self, distance_design, energy_sym, energy_sym_orthonormal, EnergyOptConfig, Generator,
    };
    use slicesum::kernels::{KernelSpec, SlicedEval};

    fn json_array(values: impl IntoIterator<Item = f64>) -> String {
        let fields: Vec<String> = values
            .into_iter()
            .map(|v| {
                if v.is_finite() {
                    format!("{v:.12e}")
                } else {
                    "null".to_string()
                }
            })
            .collect();
        format!("[{}]", fields.join(","))
    }

    fn parse_kernel(kernel: &str, scale: f64, d: usize) -> Result<KernelSpec, String> {
        match kernel {
            "gauss" => KernelSpec::gauss(scale, d),
            "laplace" => KernelSpec::laplace(1.0 / scale, d),
            "matern" => KernelSpec::matern(scale, 1.5, d),
            "riesz" => KernelSpec::riesz(1.0, d),
            "thinplate" => KernelSpec::thin_plate(d),
            other => return Err(format!("unknown kernel {other:?}")),
        }
        .map_err(|e| e.to_string())
    }

    fn parse_generator(name: &str) -> Result<Generator, String> {
        Ok(match name {
            "iid" => Generator::Iid,
            "sobol" => Generator::SobolSphere,
            "orthogonal" => Generator::Orthogonal,
            "distance" => Generator::Distance,
            other => return Err(format!("unknown generator {other:?}")),
        })
    }

    pub fn directions_json(
        method: &str,
        p: usize,
        d: usize,
        seed: u64,
        steps: usize,
    ) -> Result<String, String> {
        let dirs = match parse_generator(method)? {
            Generator::Iid => directions::iid_uniform(p, d, seed),
            Generator::SobolSphere => directions::sobol_sphere(p, d, Some(seed)),
            Generator::Orthogonal => directions::orthogonal(p, d, seed),
            Generator::Distance => {
                distance_design(p, d, &EnergyOptConfig { steps, seed, ..Default::default() })
            }
            _ => unreachable!(),
        }
        .map_err(|e| e.to_string())?;
        let flat: Vec<f64> = dirs.rows().flatten().copied().collect();
        Ok(format!(
            "{{\"p\":{},\"d\":{},\"energy\":{:.12e},\"orthonormal_energy\":{:.12e},\"points\":{}}}",
            dirs.p(),
            dirs.dim(),
            energy_sym(&dirs),
            energy_sym_orthonormal(dirs.p()),
            json_array(flat)
        ))
    }

    pub fn error_curve_json(
        kernel: &str,
        scale: f64,
        d: usize,
        generator: &str,
        k_min: u32,
        k_max: u32,
        reps: usize,
        n_x: usize,
        seed: u64,
    ) -> Result<String, String> {
        if k_min >= k_max || k_max > 14 {
            return Err("need k_min < k_max <= 14".into());
        }
        let spec = parse_kernel(kernel, scale, d)?;
        let p_list: Vec<usize> = (k_min..=k_max).map(|k| 1usize << k).collect();
        let report = if generator == "rff" {
            rff_error_experiment(&spec, &p_list, reps, n_x, seed).map_err(|e| e.to_string())?
        } else {
            slicing_error_experiment(&spec, &p_list, parse_generator(generator)?, reps, n_x, seed)
                .map_err(|e| e.to_string())?
        };
        Ok(format!(
            "{{\"p\":{},\"mean_error\":{},\"rate\":{:.6},\"intercept\":{:.6}}}",
            json_array(report.p_values.iter().map(|&p| p as f64)),
            json_array(report.mean_errors.iter().copied()),
            report.rate,
            report.intercept
        ))
    }

    pub fn basis_curves_json(
        kernel: &str,
        scale: f64,
        d: usize,
        t_max: f64,
        n: usize,
    ) -> Result<String, String> {
        if !(t_max > 0.0) || !(2..=100_000).contains(&n) {
            return Err("need t_max > 0 and 2 <= n <= 100000".into());
        }
        let spec = parse_kernel(kernel, scale, d)?;
        let eval = SlicedEval::new(&spec, t_max).map_err(|e| e.to_string())?;
        let ts: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        let radial: Vec<f64> = ts.iter().map(|&t| spec.basis(t).unwrap_or(f64::NAN)).collect();
        let sliced: Vec<f64> = ts.iter().map(|&t| eval.eval(t)).collect();
        Ok(format!(
            "{{\"t\":{},\"radial\":{},\"sliced\":{}}}",
            json_array(ts),
            json_array(radial),
            json_array(sliced)
        ))
    }
}

/// Direction set as `{"p","d","energy","orthonormal_energy","points":[...]}`
/// with points flattened row-major.
#[wasm_bindgen]
pub fn directions_json(
    method: &str,
    p: usize,
    d: usize,
    seed: u64,
    steps: usize,
) -> Result<String, JsValue> {
    imp::directions_json(method, p, d, seed, steps).map_err(|e| JsValue::from_str(&e))
}

/// Slicing (or RFF) error curve over P ∈ {2^k_min … 2^k_max} with the fitted
/// convergence rate: `{"p":[...],"mean_error":[...],"rate","intercept"}`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn error_curve_json(
    kernel: &str,
    scale: f64,
    d: usize,
    generator: &str,
    k_min: u32,
    k_max: u32,
    reps: usize,
    n_x: usize,
    seed: u64,
) -> Result<String, JsValue> {
    imp::error_curve_json(kernel, scale, d, generator, k_min, k_max, reps, n_x, seed)
        .map_err(|e| JsValue::from_str(&e))
}

/// Radial profile F and sliced profile f on a uniform grid:
/// `{"t":[...],"radial":[...],"sliced":[...]}`.
#[wasm_bindgen]
pub fn basis_curves_json(
    kernel: &str,
    scale: f64,
    d: usize,
    t_max: f64,
    n: usize,
) -> Result<String, JsValue> {
    imp::basis_curves_json(kernel, scale, d, t_max, n).map_err(|e| JsValue::from_str(&e))
}
