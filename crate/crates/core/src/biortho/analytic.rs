//! Families generated by entire functions `G_j` with `G_j(λ_k) = δ_jk`:
//! `G_j(z) = F₁(z) P(z - α_j) / P(iβ_j)`, sampled on the real axis and
//! transformed to time by an inverse FFT.
//!
//! With `H(s) = conj G(s)` and `g(t) = (1/2π)∫ H(s) e^{ist} ds` one has
//! `⟨g, e^{iλt}⟩ = conj G(λ)` and `⟨g, t e^{iλt}⟩ = i conj G'(λ)`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::multiplier::{build_multiplier, log_f1, Multiplier};
use super::{family_nodes, verify_biorthogonality, Atom, BiorthFamily, FamilyIndex, Member, Repr, Strategy};
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, zeta, C64, I};
use crate::spectrum::FrequencySet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    /// Exponent of the counting majorant; the multiplier uses `(1+κ)/2`.
    pub kappa: f64,
    /// Initial number of time intervals on `[0, T]`; doubled on failure.
    pub base_intervals: usize,
    pub max_intervals: usize,
    /// FFT period in units of `T`.
    pub oversampling: usize,
    pub leak_tolerance: f64,
    pub with_t_terms: bool,
    /// Largest admissible `log|G|` on the sampling window. Synthesis
    /// rounding grows like `e^{peak}` times the machine epsilon.
    pub max_log_magnitude: f64,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            kappa: 0.5,
            base_intervals: 512,
            max_intervals: 4096,
            oversampling: 64,
            leak_tolerance: 1e-6,
            with_t_terms: false,
            max_log_magnitude: 30.0,
        }
    }
}

/// Per-frequency data shared by the plain and weighted members.
struct Node {
    lambda: C64,
    others: Vec<C64>,
    log_p_ib: f64,
    /// `P'(iβ)/P(iβ)`.
    dlog: C64,
    corrected: bool,
}

impl Node {
    /// `log G_{j,1}(s)` on the real axis.
    fn log_g1(&self, mult: &Multiplier, s: f64) -> C64 {
        log_f1(self.lambda, &self.others, C64::new(s, 0.0)) + mult.log_real(s - self.lambda.re)
            - self.log_p_ib
    }

    /// Spectral sample `H(s)` for a plain (`weighted = false`) or
    /// `t`-weighted member.
    fn spectrum(&self, mult: &Multiplier, s: f64, weighted: bool) -> C64 {
        let g1 = self.log_g1(mult, s).exp();
        let g2 = (C64::new(s, 0.0) - self.lambda) * g1;
        let g = if weighted {
            I * g2
        } else if self.corrected {
            g1 - self.dlog * g2
        } else {
            g1
        };
        g.conj()
    }

    fn log_abs(&self, mult: &Multiplier, s: f64) -> f64 {
        let l = self.log_g1(mult, s).re;
        l + (C64::new(s, 0.0) - self.lambda).norm().max(1.0).ln()
            + self.dlog.norm().max(1.0).ln()
    }
}

fn amplitude(t_final: f64, kappa: f64) -> f64 {
    0.5 * t_final / zeta(2.0 / (1.0 + kappa))
}

/// Factor count so that the tail expansion covers `|s| ≤ reach`.
fn terms_for(reach: f64, t_final: f64, kappa: f64) -> usize {
    let kt = 0.5 * (1.0 + kappa);
    ((amplitude(t_final, kappa) * reach).powf(kt).ceil() as usize).max(16)
}

fn prepare_nodes(
    fs: &FrequencySet,
    labels: &[FamilyIndex],
    mult: &Multiplier,
) -> Result<Vec<(C64, Node)>> {
    let mut distinct: Vec<C64> = Vec::new();
    for l in labels {
        let lam = fs.lambda(l.k);
        if !distinct.contains(&lam) {
            distinct.push(lam);
        }
    }
    distinct
        .iter()
        .map(|&lambda| {
            let others: Vec<C64> = distinct.iter().copied().filter(|&o| o != lambda).collect();
            let z = C64::new(0.0, lambda.im);
            let corrected = labels.iter().any(|l| l.weighted && fs.lambda(l.k) == lambda);
            Ok((
                lambda,
                Node {
                    lambda,
                    others,
                    log_p_ib: mult.log_imag_axis(lambda.im)?,
                    dlog: mult.log_deriv(z)?,
                    corrected,
                },
            ))
        })
        .collect()
}

fn node_for<'a>(nodes: &'a [(C64, Node)], lambda: C64) -> &'a Node {
    &nodes.iter().find(|(l, _)| *l == lambda).expect("node present").1
}

/// Peak of `log|G|` on a coarse scan of `[-reach, reach]` and the largest
/// value in the outer tenth.
fn decay_profile(node: &Node, mult: &Multiplier, reach: f64) -> (f64, f64) {
    let n = 4096;
    let (mut peak, mut edge) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..=n {
        let s = -reach + 2.0 * reach * i as f64 / n as f64;
        let v = node.log_abs(mult, s);
        peak = peak.max(v);
        if s.abs() >= 0.9 * reach {
            edge = edge.max(v);
        }
    }
    (peak, edge)
}

/// Inverse transform of centered spectral samples, zero-padded by
/// `factor`; returns `g(t_m)` for `m = 0..=intervals`.
pub(super) fn synthesize(h: &[C64], ds: f64, factor: usize, intervals: usize) -> Vec<C64> {
    let len = h.len();
    let big = len * factor;
    let mut buf = vec![C64::new(0.0, 0.0); big];
    let offset = (big - len) / 2;
    buf[offset..offset + len].copy_from_slice(h);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(big);
    fft.process(&mut buf);
    let scale = ds / (2.0 * std::f64::consts::PI);
    (0..=intervals)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            buf[m] * (scale * sign)
        })
        .collect()
}

fn leak_fraction(h: &[C64], ds: f64, intervals: usize) -> f64 {
    let all = synthesize(h, ds, 1, h.len() - 1);
    let total: f64 = all.iter().map(|z| z.norm_sqr()).sum();
    let inside: f64 = all[..=intervals].iter().map(|z| z.norm_sqr()).sum();
    if total > 0.0 {
        ((total - inside).max(0.0) / total).sqrt()
    } else {
        0.0
    }
}

/// Analytic family over `indices`. The sampling window doubles from
/// `base_intervals` until `|G|` has decayed by `e^{-36}` at its edge.
pub fn build_biortho_analytic(
    fs: &FrequencySet,
    indices: &[i64],
    t_final: f64,
    cfg: &AnalyticConfig,
) -> Result<BiorthFamily> {
    if !(t_final > 0.0) {
        return Err(Error::InvalidInput(format!("T = {t_final} must be positive")));
    }
    let labels = family_nodes(fs, indices, cfg.with_t_terms)?;
    let alpha_max = labels
        .iter()
        .map(|l| fs.lambda(l.k).re.abs())
        .fold(0.0, f64::max);
    let beta_max = labels.iter().map(|l| fs.lambda(l.k).im).fold(0.0, f64::max);
    let reach_max = std::f64::consts::PI * cfg.max_intervals as f64 / t_final;
    let n_terms = terms_for(reach_max + alpha_max + beta_max, t_final, cfg.kappa);
    let mult = build_multiplier(t_final, cfg.kappa, n_terms, None)?;
    let nodes = prepare_nodes(fs, &labels, &mult)?;

    let mut intervals = cfg.base_intervals.max(4);
    let mut last_peak = f64::NEG_INFINITY;
    loop {
        let reach = std::f64::consts::PI * intervals as f64 / t_final;
        let profiles: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|(_, n)| decay_profile(n, &mult, reach))
            .collect();
        let peak = profiles.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        last_peak = last_peak.max(peak);
        if peak > cfg.max_log_magnitude {
            return Err(Error::DynamicRange { log_peak: peak });
        }
        if profiles.iter().all(|(p, e)| *e < p - 36.0) {
            break;
        }
        if intervals * 2 > cfg.max_intervals {
            let worst = profiles
                .iter()
                .map(|(p, e)| e - p)
                .fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::DecayInsufficient(format!(
                "|G| falls only by e^{:.1} at |s| = {reach:.3e} (peak e^{last_peak:.1})",
                -worst
            )));
        }
        intervals *= 2;
    }

    let len = cfg.oversampling * intervals;
    let dt = t_final / intervals as f64;
    let ds = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    let grid: Vec<f64> = (0..len).map(|l| (l as f64 - (len / 2) as f64) * ds).collect();
    let spectra: Vec<Vec<C64>> = labels
        .par_iter()
        .map(|l| {
            let node = node_for(&nodes, fs.lambda(l.k));
            grid.iter().map(|&s| node.spectrum(&mult, s, l.weighted)).collect()
        })
        .collect();
    let leak = spectra
        .iter()
        .map(|h| leak_fraction(h, ds, intervals))
        .fold(0.0, f64::max);
    if leak > cfg.leak_tolerance {
        return Err(Error::SupportLeak {
            leak,
            tolerance: cfg.leak_tolerance,
        });
    }
    let samples: Vec<Vec<C64>> = spectra
        .par_iter()
        .map(|h| synthesize(h, ds, 1, intervals))
        .collect();
    let members = labels
        .iter()
        .zip(&spectra)
        .map(|(l, h)| {
            let e: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            Member {
                index: *l,
                atom: l.atom(fs),
                norm: (e * ds / (2.0 * std::f64::consts::PI)).sqrt(),
            }
        })
        .collect::<Vec<_>>();
    let basis: Vec<Atom> = labels.iter().map(|l| l.atom(fs)).collect();
    let mut fam = BiorthFamily {
        strategy: Strategy::Analytic,
        t_final,
        intervals,
        members,
        basis,
        residual: 0.0,
        condition: None,
        leak: Some(leak),
        samples,
        repr: Repr::Spectral { spectra, ds },
    };
    fam.residual = verify_biorthogonality(&fam, fs).max_deviation;
    Ok(fam)
}

/// `log‖g‖` for every member, by Plancherel on a grid fine enough for
/// support `[0, T]` and summed in log space, so it remains meaningful when
/// the family itself is beyond floating-point range.
pub fn analytic_log_norms(
    fs: &FrequencySet,
    indices: &[i64],
    t_final: f64,
    cfg: &AnalyticConfig,
) -> Result<Vec<(FamilyIndex, f64)>> {
    let labels = family_nodes(fs, indices, cfg.with_t_terms)?;
    let ds = std::f64::consts::PI / t_final;
    let mut reach = 256.0 * ds;
    loop {
        let shift = labels
            .iter()
            .map(|l| fs.lambda(l.k).norm())
            .fold(0.0, f64::max);
        let n_terms = terms_for(reach + shift, t_final, cfg.kappa);
        let mult = build_multiplier(t_final, cfg.kappa, n_terms, None)?;
        let nodes = prepare_nodes(fs, &labels, &mult)?;
        let count = (reach / ds).ceil() as i64;
        let result: Vec<(FamilyIndex, f64, bool)> = labels
            .par_iter()
            .map(|l| {
                let node = node_for(&nodes, fs.lambda(l.k));
                let logs: Vec<f64> = (-count..=count)
                    .map(|i| {
                        let h = node.spectrum_log(&mult, i as f64 * ds, l.weighted);
                        2.0 * h
                    })
                    .collect();
                let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let edge = logs[..8].iter().chain(&logs[logs.len() - 8..]).copied().fold(f64::NEG_INFINITY, f64::max);
                let total = log_sum_exp(logs) + (ds / (2.0 * std::f64::consts::PI)).ln();
                (*l, 0.5 * total, edge < peak - 40.0)
            })
            .collect();
        if result.iter().all(|r| r.2) {
            return Ok(result.into_iter().map(|(l, v, _)| (l, v)).collect());
        }
        if reach > 1e6 {
            return Err(Error::DecayInsufficient(format!(
                "spectral tail still significant at |s| = {reach:.3e}"
            )));
        }
        reach *= 2.0;
    }
}

impl Node {
    /// `log|H(s)|` without forming `H`.
    fn spectrum_log(&self, mult: &Multiplier, s: f64, weighted: bool) -> f64 {
        let l1 = self.log_g1(mult, s);
        let d = C64::new(s, 0.0) - self.lambda;
        if weighted {
            l1.re + d.norm().ln()
        } else if self.corrected {
            // |G₁ - c G₂| = |G₁| |1 - c (s - λ)|
            l1.re + (C64::new(1.0, 0.0) - self.dlog * d).norm().ln()
        } else {
            l1.re
        }
    }
}
