//! Sine-series analysis, free evolution of the modal coefficients, energy
//! norms, and the geometry of eigenfunctions restricted to a subinterval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{simpson, C64};
use crate::spectrum::FrequencySet;

/// Sine coefficients of displacement and velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamState {
    pub u0_coeffs: Vec<f64>,
    pub u1_coeffs: Vec<f64>,
}

impl BeamState {
    pub fn new(u0_coeffs: Vec<f64>, u1_coeffs: Vec<f64>) -> Result<Self> {
        if u0_coeffs.len() != u1_coeffs.len() {
            return Err(Error::InvalidInput(format!(
                "displacement has {} modes, velocity has {}",
                u0_coeffs.len(),
                u1_coeffs.len()
            )));
        }
        Ok(BeamState {
            u0_coeffs,
            u1_coeffs,
        })
    }

    pub fn zero(n_modes: usize) -> Self {
        BeamState {
            u0_coeffs: vec![0.0; n_modes],
            u1_coeffs: vec![0.0; n_modes],
        }
    }

    /// Displacement equal to the `n`-th eigenfunction, zero velocity.
    pub fn eigenmode(n: usize, n_modes: usize) -> Self {
        let mut s = Self::zero(n_modes);
        s.u0_coeffs[n - 1] = 1.0;
        s
    }

    pub fn n_modes(&self) -> usize {
        self.u0_coeffs.len()
    }

    /// Zero-padded or truncated copy with `n_modes` coefficients.
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut u0 = self.u0_coeffs.clone();
        let mut u1 = self.u1_coeffs.clone();
        u0.resize(n_modes, 0.0);
        u1.resize(n_modes, 0.0);
        BeamState {
            u0_coeffs: u0,
            u1_coeffs: u1,
        }
    }
}

/// `φ_n(x) = √(2/π) sin(nx)`.
pub fn eigenfunction(n: usize, x: f64) -> f64 {
    (2.0 / PI).sqrt() * (n as f64 * x).sin()
}

/// `⟨f, φ_n⟩` for `n = 1..n_modes`, from samples on the uniform grid
/// `x_i = iπ/M`, `i = 0..=M`.
pub fn sine_coeffs(samples: &[f64], n_modes: usize) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::GridTooCoarse {
            step: PI,
            limit: PI / (10.0 * n_modes as f64),
        });
    }
    let m = samples.len() - 1;
    let h = PI / m as f64;
    let limit = PI / (10.0 * n_modes as f64);
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { step: h, limit });
    }
    Ok((1..=n_modes)
        .map(|n| {
            let prod: Vec<f64> = samples
                .iter()
                .enumerate()
                .map(|(i, f)| f * eigenfunction(n, i as f64 * h))
                .collect();
            simpson(&prod, h)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    #[serde(with = "crate::cjson")]
    pub c_plus: C64,
    #[serde(with = "crate::cjson")]
    pub c_minus: C64,
    /// When set, the pair multiplies `{e^{λt}, t e^{λt}}`.
    pub double_branch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeCoefficients {
    pub modes: Vec<ModeCoefficients>,
}

fn check_modes(state: &BeamState, fs: &FrequencySet) -> Result<()> {
    if state.n_modes() != fs.n_modes() {
        return Err(Error::InvalidInput(format!(
            "state has {} modes, frequency set has {}",
            state.n_modes(),
            fs.n_modes()
        )));
    }
    Ok(())
}

pub fn free_coefficients(state: &BeamState, fs: &FrequencySet) -> Result<FreeCoefficients> {
    check_modes(state, fs)?;
    let modes = fs
        .roots
        .iter()
        .zip(state.u0_coeffs.iter().zip(&state.u1_coeffs))
        .map(|(r, (&w0, &w1))| {
            if r.is_double {
                ModeCoefficients {
                    c_plus: C64::new(w0, 0.0),
                    c_minus: w1 - r.lambda_plus * w0,
                    double_branch: true,
                }
            } else {
                ModeCoefficients {
                    c_plus: (w1 - r.lambda_minus * w0) / r.q,
                    c_minus: (-w1 + r.lambda_plus * w0) / r.q,
                    double_branch: false,
                }
            }
        })
        .collect();
    Ok(FreeCoefficients { modes })
}

/// Modal displacement `γ¹` and velocity `γ²` at time `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointState {
    #[serde(with = "crate::cjson::vec")]
    pub gamma1: Vec<C64>,
    #[serde(with = "crate::cjson::vec")]
    pub gamma2: Vec<C64>,
    pub t_final: f64,
}

impl EndpointState {
    pub fn zero(n_modes: usize, t_final: f64) -> Self {
        EndpointState {
            gamma1: vec![C64::new(0.0, 0.0); n_modes],
            gamma2: vec![C64::new(0.0, 0.0); n_modes],
            t_final,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.gamma1.len()
    }
}

pub fn free_state(state: &BeamState, fs: &FrequencySet, t_final: f64) -> Result<EndpointState> {
    if !(t_final > 0.0) {
        return Err(Error::InvalidInput(format!("T = {t_final} must be positive")));
    }
    let coeffs = free_coefficients(state, fs)?;
    let mut gamma1 = Vec::with_capacity(fs.n_modes());
    let mut gamma2 = Vec::with_capacity(fs.n_modes());
    for (r, c) in fs.roots.iter().zip(&coeffs.modes) {
        let (lp, lm) = (r.lambda_plus, r.lambda_minus);
        if c.double_branch {
            let e = (lp * t_final).exp();
            let amp = c.c_plus + c.c_minus * t_final;
            gamma1.push(amp * e);
            gamma2.push((lp * amp + c.c_minus) * e);
        } else {
            let (ep, em) = ((lp * t_final).exp(), (lm * t_final).exp());
            gamma1.push(c.c_plus * ep + c.c_minus * em);
            gamma2.push(lp * c.c_plus * ep + lm * c.c_minus * em);
        }
    }
    Ok(EndpointState {
        gamma1,
        gamma2,
        t_final,
    })
}

/// `(‖·‖_{X²}, ‖·‖_{X⁰})` surrogates: `(Σ n⁴|a_n|²)^{1/2}` and `(Σ |b_n|²)^{1/2}`.
pub trait EnergyNorms {
    fn energy_norms(&self) -> (f64, f64);

    fn energy(&self) -> f64 {
        let (a, b) = self.energy_norms();
        a + b
    }
}

fn weighted_norms(disp: impl Iterator<Item = f64>, vel: impl Iterator<Item = f64>) -> (f64, f64) {
    let x2: f64 = disp
        .enumerate()
        .map(|(i, a)| ((i + 1) as f64).powi(4) * a * a)
        .sum();
    let x0: f64 = vel.map(|b| b * b).sum();
    (x2.sqrt(), x0.sqrt())
}

impl EnergyNorms for EndpointState {
    fn energy_norms(&self) -> (f64, f64) {
        weighted_norms(
            self.gamma1.iter().map(|z| z.norm()),
            self.gamma2.iter().map(|z| z.norm()),
        )
    }
}

impl EnergyNorms for BeamState {
    fn energy_norms(&self) -> (f64, f64) {
        weighted_norms(self.u0_coeffs.iter().copied(), self.u1_coeffs.iter().copied())
    }
}

pub(crate) fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0..PI + 1e-12).contains(&a) || b > PI + 1e-12 || b - a < 1e-9 {
        return Err(Error::DegenerateInterval { a, b });
    }
    Ok(())
}

/// `∫_a^b φ_n φ_m dx` in closed form.
pub fn restricted_inner(n: usize, m: usize, a: f64, b: f64) -> f64 {
    let scale = 2.0 / PI;
    if n == m {
        let k = n as f64;
        let prim = |x: f64| 0.5 * x - (2.0 * k * x).sin() / (4.0 * k);
        return scale * (prim(b) - prim(a));
    }
    let d = n as f64 - m as f64;
    let s = (n + m) as f64;
    let prim = |x: f64| 0.5 * ((d * x).sin() / d - (s * x).sin() / s);
    scale * (prim(b) - prim(a))
}

/// `‖φ_n‖_{L²(a,b)}`.
pub fn restricted_norm(n: usize, a: f64, b: f64) -> f64 {
    restricted_inner(n, n, a, b).sqrt()
}

/// Signed cosine of the angle between `φ_n` and `φ_m` in `L²(a,b)`.
pub fn signed_cos(n: usize, m: usize, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b)?;
    Ok(restricted_inner(n, m, a, b) / (restricted_norm(n, a, b) * restricted_norm(m, a, b)))
}

/// `|⟨φ_n, φ_m⟩| / (‖φ_n‖ ‖φ_m‖)` on `L²(a,b)`.
pub fn angle_cos(n: usize, m: usize, a: f64, b: f64) -> Result<f64> {
    if n == 0 || m <= n {
        return Err(Error::InvalidInput(format!("need 1 <= n < m, got ({n}, {m})")));
    }
    Ok(signed_cos(n, m, a, b)?.abs())
}

/// Minimal-norm biorthogonal pair to the normalized restrictions
/// `φ̂_l`, `φ̂_m` inside their span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialPair {
    pub interval: (f64, f64),
    pub indices: (usize, usize),
    /// Signed cosine `⟨φ̂_l, φ̂_m⟩`.
    pub cos: f64,
    pub grid: Vec<f64>,
    pub eta_l: Vec<f64>,
    pub eta_m: Vec<f64>,
}

impl SpatialPair {
    /// Coefficients of `η_l` and `η_m` on `(φ̂_l, φ̂_m)`.
    pub fn coefficients(&self) -> [[f64; 2]; 2] {
        let c = self.cos;
        let d = 1.0 - c * c;
        [[1.0 / d, -c / d], [-c / d, 1.0 / d]]
    }

    /// `(η_l(x), η_m(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (a, b) = self.interval;
        let (l, m) = self.indices;
        let pl = eigenfunction(l, x) / restricted_norm(l, a, b);
        let pm = eigenfunction(m, x) / restricted_norm(m, a, b);
        let k = self.coefficients();
        (k[0][0] * pl + k[0][1] * pm, k[1][0] * pl + k[1][1] * pm)
    }

    /// `‖η_l‖² + ‖η_m‖²`.
    pub fn norm_sq_sum(&self) -> f64 {
        2.0 / (1.0 - self.cos * self.cos)
    }
}

pub fn spatial_biortho_pair(l: usize, m: usize, a: f64, b: f64) -> Result<SpatialPair> {
    if l == m || l == 0 || m == 0 {
        return Err(Error::InvalidInput(format!("need distinct modes, got ({l}, {m})")));
    }
    let cos = signed_cos(l, m, a, b)?;
    let gap = 1.0 - cos.abs();
    if gap < 1e-12 {
        return Err(Error::NearParallel { l, m, gap });
    }
    let points = (40 * l.max(m)).max(200) | 1;
    let h = (b - a) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| a + h * i as f64).collect();
    let mut pair = SpatialPair {
        interval: (a, b),
        indices: (l, m),
        cos,
        grid: Vec::new(),
        eta_l: Vec::new(),
        eta_m: Vec::new(),
    };
    let (eta_l, eta_m): (Vec<f64>, Vec<f64>) = grid.iter().map(|&x| pair.eval(x)).unzip();
    pair.grid = grid;
    pair.eta_l = eta_l;
    pair.eta_m = eta_m;
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{frequency_set, SpectralParams};

    fn grid(m: usize) -> Vec<f64> {
        (0..=m).map(|i| PI * i as f64 / m as f64).collect()
    }

    #[test]
    fn sine_coeffs_of_eigenfunction() {
        let x = grid(400);
        let f: Vec<f64> = x.iter().map(|&x| eigenfunction(3, x)).collect();
        let c = sine_coeffs(&f, 6).unwrap();
        for (i, v) in c.iter().enumerate() {
            let want = if i == 2 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-8, "{i}: {v}");
        }
    }

    #[test]
    fn sine_coeffs_of_mixture() {
        let x = grid(400);
        let f: Vec<f64> = x.iter().map(|&x| x.sin() + 2.0 * (2.0 * x).sin()).collect();
        let c = sine_coeffs(&f, 4).unwrap();
        let s = (PI / 2.0).sqrt();
        let want = [s, 2.0 * s, 0.0, 0.0];
        for (v, w) in c.iter().zip(want) {
            assert!((v - w).abs() < 1e-8);
        }
        assert!(sine_coeffs(&vec![0.0; 401], 4).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coarse_grid_rejected() {
        let f = vec![0.0; 21];
        assert!(matches!(sine_coeffs(&f, 8), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn free_coefficient_examples() {
        let p = SpectralParams::new(0.5, 1.0, 1).unwrap();
        let fs = frequency_set(p);
        let c = free_coefficients(&BeamState::new(vec![1.0], vec![0.0]).unwrap(), &fs).unwrap();
        assert!((c.modes[0].c_plus + c.modes[0].c_minus - 1.0).norm() < 1e-15);

        let c = free_coefficients(&BeamState::new(vec![0.0], vec![1.0]).unwrap(), &fs).unwrap();
        let q = C64::new(0.0, 3f64.sqrt());
        assert!((c.modes[0].c_plus - 1.0 / q).norm() < 1e-15);
        assert!((c.modes[0].c_minus + 1.0 / q).norm() < 1e-15);

        let fs = frequency_set(SpectralParams::new(1.0, 2.0, 1).unwrap());
        let c = free_coefficients(&BeamState::new(vec![1.0], vec![0.0]).unwrap(), &fs).unwrap();
        assert!(c.modes[0].double_branch);
        assert_eq!(c.modes[0].c_plus, C64::new(1.0, 0.0));
        assert_eq!(c.modes[0].c_minus, C64::new(1.0, 0.0));
    }

    #[test]
    fn free_state_limits() {
        let fs = frequency_set(SpectralParams::new(0.7, 1.3, 4).unwrap());
        let z = free_state(&BeamState::zero(4), &fs, 1.0).unwrap();
        assert!(z.gamma1.iter().chain(&z.gamma2).all(|v| v.norm() == 0.0));
        let s = BeamState::new(vec![0.3, -1.0, 0.2, 0.5], vec![1.0, 0.0, -2.0, 0.1]).unwrap();
        let e = free_state(&s, &fs, 1e-10).unwrap();
        for n in 0..4 {
            assert!((e.gamma1[n].re - s.u0_coeffs[n]).abs() < 1e-8);
            assert!((e.gamma2[n].re - s.u1_coeffs[n]).abs() < 1e-6);
        }
        assert!(free_state(&s, &fs, 0.0).is_err());
        assert!(free_state(&BeamState::zero(3), &fs, 1.0).is_err());
    }

    #[test]
    fn energy_of_first_mode() {
        let s = BeamState::eigenmode(1, 4);
        assert_eq!(s.energy_norms(), (1.0, 0.0));
        assert_eq!(BeamState::zero(3).energy_norms(), (0.0, 0.0));
        let s = BeamState::eigenmode(2, 4);
        assert_eq!(s.energy_norms(), (4.0, 0.0));
    }

    #[test]
    fn angle_examples() {
        assert!(angle_cos(1, 2, 0.0, PI).unwrap() < 1e-15);
        assert!(angle_cos(1, 3, 0.0, PI / 2.0).unwrap() < 1e-15);
        assert!(angle_cos(2, 1, 0.0, 1.0).is_err());
        assert!(matches!(angle_cos(1, 2, 1.0, 1.0), Err(Error::DegenerateInterval { .. })));
    }

    #[test]
    fn orthogonal_pair_is_identity() {
        let p = spatial_biortho_pair(1, 3, 0.0, PI / 2.0).unwrap();
        let k = p.coefficients();
        assert!((k[0][0] - 1.0).abs() < 1e-14 && k[0][1].abs() < 1e-14);
        let x = 0.4;
        let (el, em) = p.eval(x);
        assert!((el - eigenfunction(1, x) / restricted_norm(1, 0.0, PI / 2.0)).abs() < 1e-14);
        assert!((em - eigenfunction(3, x) / restricted_norm(3, 0.0, PI / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn pair_norm_formula() {
        let p = spatial_biortho_pair(2, 5, 1.0, 2.0).unwrap();
        let h = p.grid[1] - p.grid[0];
        let sq: Vec<f64> = p.eta_l.iter().map(|v| v * v).collect();
        let n2 = simpson(&sq, h);
        assert!((n2 - 1.0 / (1.0 - p.cos * p.cos)).abs() < 1e-8);
    }
}
