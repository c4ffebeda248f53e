//! Regime dispatch and the control-cost sweep over horizons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    control_1d, control_2d, control_interior, interior_pairs, interior_time_family,
    moment_targets, subset_indices, synthesize_profiles, weak_control, ControlSignal, Profiles,
};
use crate::biortho::{build_biortho_analytic, build_biortho_gram, AnalyticConfig, BiorthFamily, Strategy};
use crate::error::{Error, Result};
use crate::modal::{free_state, BeamState};
use crate::numerics::linear_fit;
use crate::spectrum::{
    classify_regime, cluster_map, default_epsilon, frequency_set, FrequencySet, Regime,
    RegimeReport, SpectralParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub strategy: Strategy,
    /// Cluster threshold; defaults to half the smallest same-branch gap.
    pub epsilon: Option<f64>,
    /// Target endpoint energy in the weak regime.
    pub eps_weak: f64,
    /// Patch for distributed control.
    pub interval: Option<(f64, f64)>,
    pub analytic: AnalyticConfig,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            strategy: Strategy::Gram,
            epsilon: None,
            eps_weak: 1e-3,
            interval: None,
            analytic: AnalyticConfig::default(),
        }
    }
}

fn family(fs: &FrequencySet, indices: &[i64], t_final: f64, opts: &SynthesisOptions) -> Result<BiorthFamily> {
    match opts.strategy {
        Strategy::Gram => build_biortho_gram(fs, indices, false, t_final),
        Strategy::Analytic => build_biortho_analytic(fs, indices, t_final, &opts.analytic),
    }
}

/// Null control of `state` at `t_final`, routed by regime.
pub fn synthesize_null_control(
    state: &BeamState,
    params: SpectralParams,
    t_final: f64,
    opts: &SynthesisOptions,
) -> Result<(ControlSignal, RegimeReport)> {
    let fs = frequency_set(params);
    let report = classify_regime(&params);
    let ep = free_state(state, &fs, t_final)?;
    let md = moment_targets(&ep, &fs)?;
    let epsilon = opts.epsilon.unwrap_or_else(|| default_epsilon(&fs));
    let cm = cluster_map(&fs, epsilon)?;
    if let Some((a, b)) = opts.interval {
        let fam = interior_time_family(&fs, &cm, t_final)?;
        let pairs = interior_pairs(&cm, a, b)?;
        let sig = control_interior(&md, &fs, &cm, (a, b), &fam, &pairs)?;
        return Ok((sig, report));
    }
    let sig = match report.regime {
        Regime::NotControllable => {
            return Err(Error::RegimeMismatch {
                expected: Regime::WeakOnly,
                found: Regime::NotControllable,
            })
        }
        Regime::WeakOnly => {
            let profiles = synthesize_profiles(&fs, &cm)?;
            weak_control(&md, &profiles, opts.eps_weak, &fs)?
        }
        Regime::OneDim if cm.is_empty() => {
            let idx: Vec<i64> = fs.indices().collect();
            let fam = family(&fs, &idx, t_final, opts)?;
            control_1d(&md, &Profiles::single(fs.n_modes()).h1, &fam)?
        }
        Regime::OneDim | Regime::TwoDim => {
            let profiles = synthesize_profiles(&fs, &cm)?;
            let mut fams = Vec::new();
            for input in [1u8, 2] {
                let idx = subset_indices(&profiles, input);
                fams.push(if idx.is_empty() {
                    None
                } else {
                    Some(family(&fs, &idx, t_final, opts)?)
                });
            }
            control_2d(&md, &profiles, [fams[0].as_ref(), fams[1].as_ref()])?
        }
    };
    Ok((sig, report))
}

/// Fit of `log‖f‖ ≈ a + b T^{-γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub gamma: f64,
    pub intercept: f64,
    pub slope: f64,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// `(T, ‖f‖)` in the order given.
    pub points: Vec<(f64, f64)>,
    pub fits: Vec<ExponentFit>,
    pub best_gamma: Option<f64>,
    /// `‖f‖` does not decrease as `T` shrinks.
    pub monotone: bool,
}

/// Candidate exponents: 1, 2, and the two regime-dependent values when
/// positive and distinct.
pub fn candidate_exponents(alpha: f64) -> Vec<f64> {
    let mut out = vec![1.0, 2.0];
    for g in [1.0 / (3.0 - 2.0 * alpha), 1.0 / (3.0 * alpha - 2.0)] {
        if g.is_finite() && g > 0.0 && out.iter().all(|o| (o - g).abs() > 1e-9) {
            out.push(g);
        }
    }
    out
}

pub fn cost_sweep(
    state: &BeamState,
    params: SpectralParams,
    t_list: &[f64],
    opts: &SynthesisOptions,
) -> Result<CostReport> {
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput("horizons must be positive and non-empty".into()));
    }
    let norms: Vec<f64> = t_list
        .par_iter()
        .map(|&t| synthesize_null_control(state, params, t, opts).map(|(s, _)| s.norm))
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = t_list.iter().copied().zip(norms).collect();
    let mut sorted = points.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = sorted.windows(2).all(|w| w[1].1 >= w[0].1);
    let mut fits = Vec::new();
    if points.len() >= 3 {
        let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        for gamma in candidate_exponents(params.alpha) {
            let x: Vec<f64> = points.iter().map(|p| p.0.powf(-gamma)).collect();
            let f = linear_fit(&x, &y);
            fits.push(ExponentFit {
                gamma,
                intercept: f.intercept,
                slope: f.slope,
                sse: f.sse,
            });
        }
    }
    let best_gamma = fits
        .iter()
        .min_by(|a, b| a.sse.total_cmp(&b.sse))
        .map(|f| f.gamma);
    Ok(CostReport {
        points,
        fits,
        best_gamma,
        monotone,
    })
}
