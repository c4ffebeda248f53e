//! Entire multiplier `P(z) = ∏ₙ (1 + e^{2i aₙ z})/2` with `aₙ = A n^{-1/κ̃}`
//! and `Σ aₙ = δ/2`, and the Lagrange products `F₁`, `F₂`.
//!
//! The first `n_terms` factors are evaluated directly. The remainder uses
//! `log((1+e^{2iaz})/2) = iaz + log cos(az)` and the even expansion of
//! `log cos`, summed against Hurwitz-zeta moments of the tail sequence.

use serde::{Deserialize, Serialize};

use super::majorant::{theta_majorant, NuMajorant};
use crate::error::{Error, Result};
use crate::numerics::{hurwitz_zeta, linear_fit, zeta, C64, I};
use crate::spectrum::{char_roots, FrequencySet};

const SERIES_TERMS: usize = 40;
/// Series radius in units of `1/a_{n_terms+1}`.
const SERIES_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub delta: f64,
    pub kappa_tilde: f64,
    pub amplitude: f64,
    pub a_seq: Vec<f64>,
    /// `Σ_{n > n_terms} (aₙ/a_next)^{2m}` for `m = 1..=SERIES_TERMS`.
    tail_even: Vec<f64>,
    a_next: f64,
    tail_sum: f64,
    /// Largest `|z|` on which the tail expansion is trusted.
    pub valid_radius: f64,
    pub diagnostics: MultiplierDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierDiagnostics {
    /// `max (log|P(s)| + 3θ(s))` over the checked range.
    pub q: f64,
    /// Fitted exponent and constant of `-log|P(s)| ≈ c s^p` on the upper
    /// envelope.
    pub decay_exponent: f64,
    pub decay_constant: f64,
    /// `sup_β -log P(iβ) / β^{κ̃}`.
    pub c4: f64,
    /// `sup_r |P'(ir)|`.
    pub c_p: f64,
    pub checked_up_to: f64,
}

/// `q^s ζ(s, q) = Σ_{k≥0} (1 + k/q)^{-s}` without underflow.
fn scaled_tail(s: f64, q: f64) -> f64 {
    if s * q.ln() < 600.0 {
        return hurwitz_zeta(s, q) * q.powf(s);
    }
    let mut acc = 0.0;
    for k in 0.. {
        let term = (1.0 + k as f64 / q).powf(-s);
        acc += term;
        if term < 1e-18 * acc {
            break;
        }
    }
    acc
}

/// `c_m` in `log cos x = Σ c_m x^{2m}`.
fn log_cos_coeffs() -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (1..=SERIES_TERMS)
        .map(|m| {
            let two_m = 2.0 * m as f64;
            let scale = (2.0 / pi).powf(two_m) - pi.powf(-two_m);
            -scale * zeta(two_m) / m as f64
        })
        .collect()
}

/// Builds the multiplier for horizon `t_final` with `δ = t_final` and
/// `κ̃ = (1+κ)/2`, then checks the decay against the majorant `nu`
/// (the unit majorant `r^κ` when `None`).
pub fn build_multiplier(
    t_final: f64,
    kappa: f64,
    n_terms: usize,
    nu: Option<&NuMajorant>,
) -> Result<Multiplier> {
    if !(t_final > 0.0) || !(0.0..1.0).contains(&kappa) || kappa <= 0.0 || n_terms == 0 {
        return Err(Error::InvalidParams(format!(
            "multiplier needs T > 0, κ ∈ (0,1), n_terms > 0 (got {t_final}, {kappa}, {n_terms})"
        )));
    }
    let delta = t_final;
    let kappa_tilde = 0.5 * (1.0 + kappa);
    let p = 1.0 / kappa_tilde;
    let amplitude = 0.5 * delta / zeta(p);
    let a_seq: Vec<f64> = (1..=n_terms)
        .map(|n| amplitude * (n as f64).powf(-p))
        .collect();
    let q0 = n_terms as f64 + 1.0;
    let tail_sum = amplitude * hurwitz_zeta(p, q0);
    let tail_even = (1..=SERIES_TERMS)
        .map(|m| scaled_tail(2.0 * m as f64 * p, q0))
        .collect();
    let a_next = amplitude * q0.powf(-p);
    let mut mult = Multiplier {
        delta,
        kappa_tilde,
        amplitude,
        a_seq,
        tail_even,
        a_next,
        tail_sum,
        valid_radius: SERIES_RADIUS / a_next,
        diagnostics: MultiplierDiagnostics {
            q: 0.0,
            decay_exponent: 0.0,
            decay_constant: 0.0,
            c4: 0.0,
            c_p: 0.0,
            checked_up_to: 0.0,
        },
    };
    let unit = NuMajorant::unit(kappa);
    mult.diagnostics = mult.check(nu.unwrap_or(&unit))?;
    Ok(mult)
}

impl Multiplier {
    fn tail_log(&self, z: C64) -> C64 {
        let coeffs = log_cos_coeffs_cached();
        let w = z * self.a_next;
        let w2 = w * w;
        let mut pow = w2;
        let mut acc = I * z * self.tail_sum;
        for (c, s) in coeffs.iter().zip(&self.tail_even) {
            acc += pow * (c * s);
            pow *= w2;
        }
        acc
    }

    fn tail_log_deriv(&self, z: C64) -> C64 {
        let coeffs = log_cos_coeffs_cached();
        let w = z * self.a_next;
        let w2 = w * w;
        let mut pow = w * self.a_next;
        let mut acc = I * self.tail_sum;
        for (m, (c, s)) in coeffs.iter().zip(&self.tail_even).enumerate() {
            acc += pow * (2.0 * (m + 1) as f64 * c * s);
            pow *= w2;
        }
        acc
    }

    fn check_radius(&self, z: f64) -> Result<()> {
        if z > self.valid_radius {
            return Err(Error::InvalidInput(format!(
                "|z| = {z:.3e} exceeds the multiplier range {:.3e}; increase n_terms",
                self.valid_radius
            )));
        }
        Ok(())
    }

    /// Largest `|s|` for which [`Multiplier::log_abs_real`] is valid.
    pub fn range(&self) -> f64 {
        self.valid_radius
    }

    /// `log|P(s)|` for real `s`.
    pub fn log_abs_real(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for &a in &self.a_seq {
            acc += (a * s).cos().abs().ln();
        }
        acc + self.tail_log(C64::new(s, 0.0)).re
    }

    /// `log P(s)` for real `s` as a complex logarithm (phase mod 2π).
    pub fn log_real(&self, s: f64) -> C64 {
        let mut re = 0.0;
        let mut negatives = 0usize;
        for &a in &self.a_seq {
            let c = (a * s).cos();
            re += c.abs().ln();
            if c < 0.0 {
                negatives += 1;
            }
        }
        let head_phase = s * self.a_seq.iter().sum::<f64>() + std::f64::consts::PI * (negatives % 2) as f64;
        let tail = self.tail_log(C64::new(s, 0.0));
        C64::new(re + tail.re, head_phase + tail.im)
    }

    /// `log P(z)` for `Im z ≥ 0`.
    pub fn log_eval(&self, z: C64) -> Result<C64> {
        self.check_radius(z.norm())?;
        if z.im < 0.0 {
            return Err(Error::InvalidInput("log P is evaluated in the upper half-plane".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for &a in &self.a_seq {
            acc += ((C64::new(1.0, 0.0) + (2.0 * I * a * z).exp()) * 0.5).ln();
        }
        Ok(acc + self.tail_log(z))
    }

    /// `(log P)'(z) = Σ (i aₙ − aₙ tan(aₙ z))`.
    pub fn log_deriv(&self, z: C64) -> Result<C64> {
        self.check_radius(z.norm())?;
        let mut acc = C64::new(0.0, 0.0);
        for &a in &self.a_seq {
            acc += I * a - stable_tan(z * a) * a;
        }
        Ok(acc + self.tail_log_deriv(z))
    }

    /// `P(iβ)` for `β ≥ 0` (real and positive) in log form.
    pub fn log_imag_axis(&self, beta: f64) -> Result<f64> {
        Ok(self.log_eval(C64::new(0.0, beta))?.re)
    }

    fn check(&self, nu: &NuMajorant) -> Result<MultiplierDiagnostics> {
        let hi = self.valid_radius;
        let lo = 1e-2f64.min(hi);
        let samples = 4000;
        let grid: Vec<f64> = (0..samples)
            .map(|i| lo * (hi / lo).powf(i as f64 / (samples - 1) as f64))
            .collect();
        let mut q = f64::NEG_INFINITY;
        let logs: Vec<f64> = grid.iter().map(|&s| self.log_abs_real(s)).collect();
        for (&s, &l) in grid.iter().zip(&logs) {
            q = q.max(l + 3.0 * theta_majorant(nu, s));
        }
        // Upper envelope of -log|P| over geometric windows in the upper decades.
        let windows = 40;
        let start = grid.partition_point(|&s| s < hi * 1e-3);
        let chunk = ((samples - start) / windows).max(1);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for w in 0..windows {
            let range = start + w * chunk..(start + (w + 1) * chunk).min(samples);
            if range.is_empty() {
                break;
            }
            let best = logs[range.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s_mid = grid[range.start + range.len() / 2];
            if best < 0.0 {
                xs.push(s_mid.ln());
                ys.push((-best).ln());
            }
        }
        if xs.len() < 4 {
            return Err(Error::DecayInsufficient(
                "multiplier shows no decay on its sampled range".into(),
            ));
        }
        let fit = linear_fit(&xs, &ys);
        if fit.slope <= nu.kappa {
            return Err(Error::DecayInsufficient(format!(
                "multiplier decay exponent {:.3} does not exceed κ = {:.3}",
                fit.slope, nu.kappa
            )));
        }
        let mut c4 = 0.0f64;
        let mut c_p = 0.0f64;
        for &b in grid.iter().filter(|&&b| b <= hi) {
            let lp = self.log_imag_axis(b)?;
            c4 = c4.max(-lp / b.powf(self.kappa_tilde));
            let d = self.log_deriv(C64::new(0.0, b))?;
            c_p = c_p.max(d.norm() * lp.exp());
        }
        Ok(MultiplierDiagnostics {
            q,
            decay_exponent: fit.slope,
            decay_constant: fit.intercept.exp(),
            c4,
            c_p,
            checked_up_to: hi,
        })
    }
}

/// `tan w`, saturating to `±i` far from the real axis.
fn stable_tan(w: C64) -> C64 {
    if w.im.abs() > 20.0 {
        C64::new(0.0, w.im.signum())
    } else {
        w.tan()
    }
}

fn log_cos_coeffs_cached() -> &'static [f64] {
    use std::sync::OnceLock;
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(log_cos_coeffs)
}

/// `log(1 - w)` accurate for small `|w|`.
fn log1m(w: C64) -> C64 {
    if w.norm() < 1e-4 {
        -w * (C64::new(1.0, 0.0) + w * (0.5 + w / 3.0))
    } else {
        (C64::new(1.0, 0.0) - w).ln()
    }
}

/// `log F₁(z)` for node `lambda_j` against the other nodes:
/// `F₁(z) = ∏_{k≠j} (1 - ((z-λ_j)/(λ_k-λ_j))²)²`.
pub fn log_f1(lambda_j: C64, others: &[C64], z: C64) -> C64 {
    let d = z - lambda_j;
    others
        .iter()
        .map(|&lk| {
            let w = d / (lk - lambda_j);
            2.0 * log1m(w * w)
        })
        .sum()
}

/// `F₁(z)` and `F₂(z) = (z - λ_j) F₁(z)` for index `j` against all other
/// indices with `|k| ≤ trunc`. Indices beyond the set are recomputed from
/// the spectral parameters.
pub fn f_products(j: i64, fs: &FrequencySet, z: C64, trunc: usize) -> Result<(C64, C64)> {
    let nodes = product_nodes(j, fs, trunc)?;
    let lj = fs.lambda(j);
    let f1 = log_f1(lj, &nodes, z).exp();
    Ok((f1, (z - lj) * f1))
}

fn product_nodes(j: i64, fs: &FrequencySet, trunc: usize) -> Result<Vec<C64>> {
    let jn = j.unsigned_abs() as usize;
    if j == 0 || jn > fs.n_modes() || jn > trunc {
        return Err(Error::InvalidInput(format!(
            "index {j} outside the truncation {trunc}"
        )));
    }
    let lj = fs.lambda(j);
    let mut nodes = Vec::with_capacity(2 * trunc);
    for n in 1..=trunc {
        let r = char_roots(n, &fs.params);
        for lk in [-I * r.lambda_plus, -I * r.lambda_minus] {
            if lk != lj {
                nodes.push(lk);
            }
        }
        if r.is_double {
            nodes.pop();
        }
    }
    Ok(nodes)
}

/// Upper bound on `|log|F₁(z)||` contributed by the factors with
/// `trunc < |k| ≤ horizon`.
pub fn truncation_log_bound(j: i64, fs: &FrequencySet, z: C64, trunc: usize, horizon: usize) -> f64 {
    let lj = fs.lambda(j);
    let d = z - lj;
    let mut acc = 0.0;
    for n in trunc + 1..=horizon {
        let r = char_roots(n, &fs.params);
        let mut roots = vec![-I * r.lambda_plus];
        if !r.is_double {
            roots.push(-I * r.lambda_minus);
        }
        for lk in roots {
            let w = d / (lk - lj);
            acc += 2.0 * log1m(w * w).norm();
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{frequency_set, SpectralParams};

    fn mult() -> Multiplier {
        build_multiplier(1.0, 0.5, 400, None).unwrap()
    }

    #[test]
    fn coefficient_sum_is_half_delta() {
        let m = mult();
        let s: f64 = m.a_seq.iter().sum::<f64>() + m.tail_sum;
        assert!((s - 0.5).abs() < 1e-10, "{s}");
    }

    #[test]
    fn tail_series_matches_direct_product() {
        let small = build_multiplier(1.0, 0.5, 50, None).unwrap();
        let big = build_multiplier(1.0, 0.5, 20000, None).unwrap();
        for s in [0.3, 7.0, 60.0, 300.0] {
            let (a, b) = (small.log_real(s), big.log_real(s));
            assert!((a.re - b.re).abs() < 1e-6, "{s}: {} vs {}", a.re, b.re);
            let dphi = (a.im - b.im).rem_euclid(2.0 * std::f64::consts::PI);
            assert!(dphi.min(2.0 * std::f64::consts::PI - dphi) < 1e-6);
        }
    }

    #[test]
    fn bounded_by_one_on_real_axis_and_equals_one_at_zero() {
        let m = mult();
        assert!(m.log_abs_real(0.0).abs() < 1e-14);
        for i in 1..200 {
            assert!(m.log_abs_real(i as f64 * 3.7) <= 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = mult();
        for z in [C64::new(0.0, 2.0), C64::new(1.5, 0.5), C64::new(0.0, 30.0)] {
            let h = 1e-5;
            let fd = (m.log_eval(z + h).unwrap() - m.log_eval(z - h).unwrap()) / (2.0 * h);
            let d = m.log_deriv(z).unwrap();
            assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0), "{z}: {fd} vs {d}");
        }
    }

    #[test]
    fn imaginary_axis_value_is_real_and_decreasing() {
        let m = mult();
        let mut prev = 0.0;
        for b in [0.1, 1.0, 10.0, 100.0] {
            let z = m.log_eval(C64::new(0.0, b)).unwrap();
            assert!(z.im.abs() < 1e-10);
            assert!(z.re < prev);
            prev = z.re;
        }
        assert!(m.diagnostics.c_p <= 0.5 + 1e-9);
        assert!(m.diagnostics.decay_exponent > 0.5);
    }

    #[test]
    fn products_interpolate() {
        let fs = frequency_set(SpectralParams::new(0.5, 1.0, 5).unwrap());
        for j in fs.indices() {
            let lj = fs.lambda(j);
            let (f1, f2) = f_products(j, &fs, lj, 5).unwrap();
            assert!((f1 - 1.0).norm() < 1e-14 && f2.norm() < 1e-14);
            let h = 1e-6;
            let d = (f_products(j, &fs, lj + h, 5).unwrap().0
                - f_products(j, &fs, lj - h, 5).unwrap().0)
                / (2.0 * h);
            assert!(d.norm() < 1e-6);
            for k in fs.indices().filter(|&k| k != j) {
                let (f1, _) = f_products(j, &fs, fs.lambda(k), 5).unwrap();
                assert!(f1.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_bound_halves_when_doubling() {
        let fs = frequency_set(SpectralParams::new(0.5, 1.0, 4).unwrap());
        let z = C64::new(3.0, 1.0);
        let b1 = truncation_log_bound(1, &fs, z, 8, 4000);
        let b2 = truncation_log_bound(1, &fs, z, 16, 4000);
        assert!(b2 <= 0.5 * b1, "{b1} {b2}");
    }
}
