//! Power-law majorant of the counting function and the associated
//! logarithmic weight `θ(s) = 2∫₀^∞ ν(r)/r · s²/(s²+r²) dr`.

use serde::{Deserialize, Serialize};

use crate::numerics::adaptive_simpson;
use crate::spectrum::{CountingProfile, FrequencySet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuMajorant {
    /// Separation radius; the majorant vanishes below it.
    pub r0: f64,
    pub c0: f64,
    pub c1: f64,
    pub kappa: f64,
}

impl NuMajorant {
    /// `ν(r) = r^κ` with no separation cutoff.
    pub fn unit(kappa: f64) -> Self {
        NuMajorant {
            r0: 0.0,
            c0: 1.0,
            c1: 1.0,
            kappa,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.r0 {
            0.0
        } else {
            self.c1 * r.powf(self.kappa)
        }
    }

    /// Majorant with exponent `kappa` bracketing the empirical counting
    /// function on `samples` radii spread geometrically over `(r0, r_hi]`.
    pub fn fit(fs: &FrequencySet, kappa: f64, r_hi: f64, samples: usize) -> Self {
        let profile = CountingProfile::new(fs);
        let r0 = fs.min_gap();
        let (mut c0, mut c1) = (f64::INFINITY, 0.0f64);
        for r in sample_radii(r0, r_hi, samples) {
            let ratio = profile.count(r) as f64 / r.powf(kappa);
            c0 = c0.min(ratio);
            c1 = c1.max(ratio);
        }
        NuMajorant { r0, c0, c1, kappa }
    }

    /// Checks `c0 r^κ ≤ ν̂(r) ≤ c1 r^κ` on the sampled radii.
    pub fn validate(&self, profile: &CountingProfile, r_hi: f64, samples: usize) -> bool {
        sample_radii(self.r0, r_hi, samples).all(|r| {
            let nu = profile.count(r) as f64;
            let p = r.powf(self.kappa);
            nu >= self.c0 * p * (1.0 - 1e-12) && nu <= self.c1 * p * (1.0 + 1e-12)
        })
    }
}

fn sample_radii(r0: f64, r_hi: f64, samples: usize) -> impl Iterator<Item = f64> {
    let lo = r0 * (1.0 + 1e-9);
    (0..samples).map(move |i| lo * (r_hi / lo).powf(i as f64 / (samples.max(2) - 1) as f64))
}

/// `θ(s)` by adaptive quadrature in `u = ln r`, with the far tail
/// `r > s·e^{40}` added in closed form.
pub fn theta_majorant(nu: &NuMajorant, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let k = nu.kappa;
    let s2 = s * s;
    let integrand = |u: f64| {
        let r = u.exp();
        r.powf(k) * s2 / (s2 + r * r)
    };
    let u_hi = s.ln() + 40.0;
    let (u_lo, head) = if nu.r0 > 0.0 {
        (nu.r0.ln(), 0.0)
    } else {
        // ∫₀^{r_lo} r^{κ-1} dr with s²/(s²+r²) ≈ 1.
        let r_lo = s * (-40.0f64).exp();
        (r_lo.ln(), r_lo.powf(k) / k)
    };
    if u_lo >= u_hi {
        return 0.0;
    }
    let tol = 1e-12 * s.powf(k).max(1.0);
    let body = adaptive_simpson(&integrand, u_lo, u_hi, tol);
    let r_hi = u_hi.exp();
    let tail = s2 * r_hi.powf(k - 2.0) / (2.0 - k);
    2.0 * nu.c1 * (head + body + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linear_fit;
    use crate::spectrum::{frequency_set, SpectralParams};
    use std::f64::consts::PI;

    #[test]
    fn theta_at_zero_and_monotone() {
        let nu = NuMajorant {
            r0: 0.8,
            c0: 0.5,
            c1: 2.0,
            kappa: 0.5,
        };
        assert_eq!(theta_majorant(&nu, 0.0), 0.0);
        for s in [1.0, 10.0, 100.0] {
            assert!(theta_majorant(&nu, 2.0 * s) > theta_majorant(&nu, s));
        }
    }

    #[test]
    fn theta_matches_closed_form_without_cutoff() {
        // ∫₀^∞ r^{κ-1} s²/(s²+r²) dr = s^κ π / (2 sin(πκ/2))
        for kappa in [0.3, 0.5, 0.8] {
            let nu = NuMajorant::unit(kappa);
            for s in [0.5f64, 3.0, 250.0] {
                let want = 2.0 * s.powf(kappa) * PI / (2.0 * (PI * kappa / 2.0).sin());
                let got = theta_majorant(&nu, s);
                assert!((got - want).abs() < 1e-8 * want, "{kappa} {s}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn theta_slope_is_kappa() {
        let nu = NuMajorant {
            r0: 1.0,
            c0: 1.0,
            c1: 1.3,
            kappa: 0.5,
        };
        let s: Vec<f64> = (0..=20).map(|i| 100.0 * 100f64.powf(i as f64 / 20.0)).collect();
        let x: Vec<f64> = s.iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = s.iter().map(|&v| theta_majorant(&nu, v).ln()).collect();
        assert!((linear_fit(&x, &y).slope - 0.5).abs() < 0.05);
    }

    #[test]
    fn fitted_majorant_brackets_counting_function() {
        let fs = frequency_set(SpectralParams::new(0.5, 1.0, 30).unwrap());
        let nu = NuMajorant::fit(&fs, 0.5, 500.0, 60);
        assert!(nu.c0 > 0.0 && nu.c1 >= nu.c0);
        assert!(nu.validate(&CountingProfile::new(&fs), 500.0, 60));
        assert_eq!(nu.eval(0.5 * nu.r0), 0.0);
    }
}
