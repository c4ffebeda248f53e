//! Forward solver by exact per-mode Duhamel integrals.
//!
//! Each mode obeys `a'' + b a' + n⁴ a = f_n`. With the impulse response
//! `K(t) = (e^{λ⁺t} - e^{λ⁻t})/q` (or `t e^{λt}` for a double root) the
//! endpoint is `a(T) = w⁰(K'+bK)(T) + w¹K(T) + ∫ f_n(s) K(T-s) ds` and
//! `a'(T) = -n⁴w⁰K(T) + w¹K'(T) + ∫ f_n(s) K'(T-s) ds`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::{eigenfunction, BeamState};
use crate::numerics::{phi1, simpson, uniform_integral, C64};
use crate::spectrum::{FrequencySet, RootPair};

/// Forcing samples on the uniform grid `t_i = i T / intervals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSpec {
    None,
    /// `h¹(x) f¹(t) + h²(x) f²(t)` with sine coefficients `h¹ₙ`, `h²ₙ`.
    Profiled {
        t_final: f64,
        f1: Vec<f64>,
        f2: Vec<f64>,
        h1: Vec<f64>,
        h2: Vec<f64>,
    },
    /// `χ_{(a,b)}(x) f(x, t)`; `values[i][j]` is `f(x_j, t_i)` on a uniform
    /// grid of `(a, b)` including both ends.
    Patch {
        t_final: f64,
        a: f64,
        b: f64,
        values: Vec<Vec<f64>>,
    },
}

impl ForcingSpec {
    pub fn intervals(&self) -> Option<usize> {
        match self {
            ForcingSpec::None => None,
            ForcingSpec::Profiled { f1, .. } => Some(f1.len().saturating_sub(1)),
            ForcingSpec::Patch { values, .. } => Some(values.len().saturating_sub(1)),
        }
    }

    /// `f_n(t_i)` against the orthonormal `φ_n`; `None` for the zero forcing.
    pub fn fourier(&self, n: usize) -> Result<Option<Vec<f64>>> {
        match self {
            ForcingSpec::None => Ok(None),
            ForcingSpec::Profiled { f1, f2, h1, h2, .. } => {
                let c1 = h1.get(n - 1).copied().unwrap_or(0.0);
                let c2 = h2.get(n - 1).copied().unwrap_or(0.0);
                Ok(Some(f1.iter().zip(f2).map(|(a, b)| c1 * a + c2 * b).collect()))
            }
            ForcingSpec::Patch { a, b, values, .. } => {
                let nx = values.first().map_or(0, Vec::len);
                if nx < 5 {
                    return Err(Error::InvalidInput("patch forcing needs at least 5 x samples".into()));
                }
                let hx = (b - a) / (nx - 1) as f64;
                let phi: Vec<f64> = (0..nx).map(|j| eigenfunction(n, a + j as f64 * hx)).collect();
                let mut out = Vec::with_capacity(values.len());
                for row in values {
                    let prod: Vec<f64> = row.iter().zip(&phi).map(|(f, p)| f * p).collect();
                    out.push(simpson(&prod, hx));
                }
                Ok(Some(out))
            }
        }
    }

    /// Checks the x quadrature of mode `n` against the half-resolution
    /// rule: the Richardson difference must stay below `tol` relative.
    pub fn check_patch_resolution(&self, n: usize, tol: f64) -> Result<()> {
        let ForcingSpec::Patch { a, b, values, .. } = self else {
            return Ok(());
        };
        let nx = values.first().map_or(0, Vec::len);
        if (nx - 1) % 2 != 0 || nx < 9 {
            return Ok(());
        }
        let hx = (b - a) / (nx - 1) as f64;
        let phi: Vec<f64> = (0..nx).map(|j| eigenfunction(n, a + j as f64 * hx)).collect();
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for row in values {
            let prod: Vec<f64> = row.iter().zip(&phi).map(|(f, p)| f * p).collect();
            let fine = simpson(&prod, hx);
            let coarse: Vec<f64> = prod.iter().step_by(2).copied().collect();
            let coarse = simpson(&coarse, 2.0 * hx);
            diff = diff.max((fine - coarse).abs() / 15.0);
            scale = scale.max(fine.abs());
        }
        if diff > tol * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::GridTooCoarse {
                step: hx,
                limit: hx * (tol * scale / diff).powf(0.25),
            });
        }
        Ok(())
    }
}

/// Impulse response `K` and its derivative at `t`. Written around `λ⁺`
/// with `Re q ≥ 0`, so that no intermediate overflows.
fn kernel(r: &RootPair, t: f64) -> (C64, C64) {
    let k = (r.lambda_plus * t).exp() * t * phi1(-r.q * t);
    let dk = r.lambda_plus * k + (r.lambda_minus * t).exp();
    (k, dk)
}

/// `(a(T), a'(T))` of the forced part of mode `n` started from rest.
pub fn duhamel_mode(n: usize, forcing_n: &[f64], fs: &FrequencySet, t_final: f64) -> Result<(C64, C64)> {
    let r = fs.root(n);
    let intervals = forcing_n.len().saturating_sub(1);
    if intervals == 0 {
        return Err(Error::InvalidInput("forcing needs at least two samples".into()));
    }
    let step = t_final / intervals as f64;
    let scale = r.lambda_plus.norm().max(r.lambda_minus.norm());
    let limit = (0.1 / scale).min(t_final / 256.0);
    if step > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { mode: n, step, limit });
    }
    let mut ka = Vec::with_capacity(intervals + 1);
    let mut kb = Vec::with_capacity(intervals + 1);
    for (i, &f) in forcing_n.iter().enumerate() {
        let (k, dk) = kernel(r, t_final - i as f64 * step);
        ka.push(k * f);
        kb.push(dk * f);
    }
    Ok((uniform_integral(&ka, step), uniform_integral(&kb, step)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEndpoint {
    pub n: usize,
    #[serde(with = "crate::cjson")]
    pub a: C64,
    #[serde(with = "crate::cjson")]
    pub a_prime: C64,
    #[serde(with = "crate::cjson")]
    pub free_a: C64,
    #[serde(with = "crate::cjson")]
    pub free_a_prime: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub t_final: f64,
    pub modes: Vec<ModeEndpoint>,
    /// `(Σ n⁴|aₙ(T)|²)^{1/2}`.
    pub residual_x2: f64,
    /// `(Σ |aₙ'(T)|²)^{1/2}`.
    pub residual_x0: f64,
    pub initial_energy: f64,
    /// Optional `(t, n, a_n(t))` samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<(f64, usize, f64, f64)>>,
}

impl SimResult {
    pub fn energy(&self) -> f64 {
        self.residual_x2 + self.residual_x0
    }

    /// Endpoint energy relative to the initial energy.
    pub fn relative_energy(&self) -> f64 {
        if self.initial_energy > 0.0 {
            self.energy() / self.initial_energy
        } else {
            self.energy()
        }
    }
}

fn free_mode(r: &RootPair, n: usize, w0: f64, w1: f64, t: f64) -> (C64, C64) {
    let (k, dk) = kernel(r, t);
    let b = -(r.lambda_plus + r.lambda_minus);
    let n4 = (n as f64).powi(4);
    (dk * w0 + b * k * w0 + k * w1, -k * (n4 * w0) + dk * w1)
}

fn norms(modes: &[ModeEndpoint]) -> (f64, f64) {
    let x2: f64 = modes.iter().map(|m| (m.n as f64).powi(4) * m.a.norm_sqr()).sum();
    let x0: f64 = modes.iter().map(|m| m.a_prime.norm_sqr()).sum();
    (x2.sqrt(), x0.sqrt())
}

/// Endpoint of the beam from `state` under `forcing` at time `t_final`.
pub fn simulate(state: &BeamState, forcing: &ForcingSpec, fs: &FrequencySet, t_final: f64) -> Result<SimResult> {
    if state.n_modes() != fs.n_modes() {
        return Err(Error::InvalidInput(format!(
            "state has {} modes, frequency set has {}",
            state.n_modes(),
            fs.n_modes()
        )));
    }
    if !(t_final > 0.0) {
        return Err(Error::InvalidInput(format!("T = {t_final} must be positive")));
    }
    let modes: Vec<ModeEndpoint> = (1..=fs.n_modes())
        .into_par_iter()
        .map(|n| {
            let r = fs.root(n);
            let (fa, fb) = free_mode(r, n, state.u0_coeffs[n - 1], state.u1_coeffs[n - 1], t_final);
            let (ca, cb) = match forcing.fourier(n)? {
                Some(f) => duhamel_mode(n, &f, fs, t_final)?,
                None => (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            };
            Ok(ModeEndpoint {
                n,
                a: fa + ca,
                a_prime: fb + cb,
                free_a: fa,
                free_a_prime: fb,
            })
        })
        .collect::<Result<_>>()?;
    let (residual_x2, residual_x0) = norms(&modes);
    let x2: f64 = state
        .u0_coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| ((i + 1) as f64).powi(4) * a * a)
        .sum();
    let x0: f64 = state.u1_coeffs.iter().map(|b| b * b).sum();
    Ok(SimResult {
        t_final,
        modes,
        residual_x2,
        residual_x0,
        initial_energy: x2.sqrt() + x0.sqrt(),
        trajectory: None,
    })
}

/// `simulate` plus `a_n(t)` at `samples + 1` equally spaced times, each
/// obtained from the Duhamel integral over the prefix `[0, t]`.
pub fn simulate_with_trajectory(
    state: &BeamState,
    forcing: &ForcingSpec,
    fs: &FrequencySet,
    t_final: f64,
    samples: usize,
) -> Result<SimResult> {
    let mut res = simulate(state, forcing, fs, t_final)?;
    let intervals = forcing.intervals().unwrap_or(samples * 256);
    let stride = (intervals / samples.max(1)).max(1);
    let dt = t_final / intervals as f64;
    let mut traj = Vec::new();
    for n in 1..=fs.n_modes() {
        let r = fs.root(n);
        let f = forcing.fourier(n)?;
        let mut i = 0;
        while i <= intervals {
            let t = i as f64 * dt;
            let (mut a, _) = free_mode(r, n, state.u0_coeffs[n - 1], state.u1_coeffs[n - 1], t);
            if let (Some(f), true) = (&f, i >= 4) {
                let prefix = &f[..=i];
                let vals: Vec<C64> = prefix
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| kernel(r, t - j as f64 * dt).0 * v)
                    .collect();
                a += uniform_integral(&vals, dt);
            }
            traj.push((t, n, a.re, a.im));
            i += stride;
        }
    }
    res.trajectory = Some(traj);
    Ok(res)
}
