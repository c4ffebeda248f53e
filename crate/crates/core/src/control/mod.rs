//! Moment targets, actuator profiles and null-control synthesis.
//!
//! Conventions: the forced part of mode `n` started from rest is driven by
//! `∫₀ᵀ f_n(T-τ) e^{iλ_k τ} dτ` (and the `τ`-weighted integral for a double
//! root). A control `f(T-τ) = Σ_j c_j conj(g_j(τ))` built on a family with
//! `⟨g_j, e_k⟩ = δ_jk` therefore produces the moments `c_k`.

mod interior;
mod profiles;
mod scalar;
mod sweep;
mod weak;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::beamsim::ForcingSpec;
use crate::biortho::{default_intervals, BiorthFamily, FamilyIndex};
use crate::error::{Error, Result};
use crate::modal::{EndpointState, EnergyNorms};
use crate::numerics::{simpson, uniform_integral, C64};
use crate::spectrum::{FrequencySet, SpectralParams};

pub use interior::{control_interior, interior_indices, interior_pairs, interior_time_family};
pub use profiles::{subset_indices, synthesize_profiles, Assignment, Profiles, Rule};
pub use scalar::{control_1d, control_2d};
pub use sweep::{
    candidate_exponents, cost_sweep, synthesize_null_control, CostReport, ExponentFit, SynthesisOptions,
};
pub use weak::weak_control;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub k: i64,
    #[serde(with = "crate::cjson")]
    pub zeta: C64,
}

/// Targets `ζ_k` such that the controlled part must produce `-ζ_k`.
///
/// For a simple mode, `k > 0` carries the moment paired with `λ⁺` and
/// `k < 0` the one paired with `λ⁻`. For a double mode `n`, `ζ_n` pairs
/// with `e^{λτ}` and `ζ_{-n}` with `τ e^{λτ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentData {
    pub params: SpectralParams,
    pub t_final: f64,
    pub entries: Vec<MomentEntry>,
    pub double_modes: BTreeSet<usize>,
}

impl MomentData {
    pub fn get(&self, k: i64) -> C64 {
        self.entries
            .iter()
            .find(|e| e.k == k)
            .map_or(C64::new(0.0, 0.0), |e| e.zeta)
    }

    pub fn n_modes(&self) -> usize {
        self.entries.len() / 2
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.zeta == C64::new(0.0, 0.0))
    }

    /// Family label that pairs with target `k`.
    pub fn label(&self, k: i64) -> FamilyIndex {
        let n = k.unsigned_abs() as usize;
        if self.double_modes.contains(&n) {
            FamilyIndex {
                k: n as i64,
                weighted: k < 0,
            }
        } else {
            FamilyIndex::plain(k)
        }
    }

    /// Endpoint `(γ¹, γ²)` recovered from the targets.
    pub fn endpoint(&self, fs: &FrequencySet) -> EndpointState {
        let mut ep = EndpointState::zero(self.n_modes(), self.t_final);
        for n in 1..=self.n_modes() {
            let r = fs.root(n);
            let (zp, zm) = (self.get(n as i64), self.get(-(n as i64)));
            if r.is_double {
                ep.gamma1[n - 1] = zm;
                ep.gamma2[n - 1] = zp + r.lambda_plus * zm;
            } else {
                ep.gamma1[n - 1] = (zp - zm) / r.q;
                ep.gamma2[n - 1] = (r.lambda_plus * zp - r.lambda_minus * zm) / r.q;
            }
        }
        ep
    }

    /// Endpoint reached when the controlled part produces `moments`.
    pub fn controlled_endpoint(&self, fs: &FrequencySet, moments: &MomentData) -> EndpointState {
        let free = self.endpoint(fs);
        let forced = moments.endpoint(fs);
        EndpointState {
            gamma1: free.gamma1.iter().zip(&forced.gamma1).map(|(a, b)| a + b).collect(),
            gamma2: free.gamma2.iter().zip(&forced.gamma2).map(|(a, b)| a + b).collect(),
            t_final: self.t_final,
        }
    }
}

/// Relative distance below which a gap counts as vanishing.
const GAP_TOL: f64 = 1e-9;

pub fn moment_targets(endpoint: &EndpointState, fs: &FrequencySet) -> Result<MomentData> {
    if endpoint.n_modes() != fs.n_modes() {
        return Err(Error::InvalidInput(format!(
            "endpoint has {} modes, frequency set has {}",
            endpoint.n_modes(),
            fs.n_modes()
        )));
    }
    let mut entries = Vec::with_capacity(2 * fs.n_modes());
    for (i, r) in fs.roots.iter().enumerate() {
        let (g1, g2) = (endpoint.gamma1[i], endpoint.gamma2[i]);
        let n = r.mode as i64;
        let (zp, zm) = if r.is_double {
            (g2 - r.lambda_plus * g1, g1)
        } else {
            if r.q.norm() <= GAP_TOL * (r.lambda_plus.norm() + r.lambda_minus.norm()) {
                return Err(Error::DegenerateGap { mode: r.mode });
            }
            (g2 - r.lambda_minus * g1, g2 - r.lambda_plus * g1)
        };
        entries.push(MomentEntry { k: n, zeta: zp });
        entries.push(MomentEntry { k: -n, zeta: zm });
    }
    Ok(MomentData {
        params: fs.params,
        t_final: endpoint.t_final,
        entries,
        double_modes: fs.double_modes.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlKind {
    Scalar1D,
    Scalar2D,
    Interior,
    Weak,
}

/// `f(x_j, t_i)` on a uniform grid of `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorField {
    pub a: f64,
    pub b: f64,
    pub x: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlDiagnostics {
    /// Largest imaginary part discarded when taking the real signal.
    pub imag_residue: f64,
    /// Estimated contribution of targets not covered by the family.
    pub tail: f64,
    /// Biorthogonality residual of the families used.
    pub family_residual: f64,
    /// Endpoint energy predicted by the moment model.
    pub predicted_energy: Option<f64>,
    /// Mode cutoff selected by the weak solver.
    pub cutoff: Option<usize>,
    /// `max |⟨h_j, φ̂_k e_k⟩ - δ_jk|` for interior controls.
    pub cross_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub kind: ControlKind,
    pub t_final: f64,
    pub times: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub interior: Option<InteriorField>,
    pub norm: f64,
    pub profiles: Option<Profiles>,
    pub diagnostics: ControlDiagnostics,
}

impl ControlSignal {
    pub fn forcing(&self) -> ForcingSpec {
        match (&self.interior, &self.profiles) {
            (Some(field), _) => ForcingSpec::Patch {
                t_final: self.t_final,
                a: field.a,
                b: field.b,
                values: field.values.clone(),
            },
            (None, Some(p)) => ForcingSpec::Profiled {
                t_final: self.t_final,
                f1: self.f1.clone(),
                f2: self.f2.clone(),
                h1: p.h1.clone(),
                h2: p.h2.clone(),
            },
            (None, None) => ForcingSpec::None,
        }
    }

    fn scalar(kind: ControlKind, t_final: f64, f1: Vec<f64>, f2: Vec<f64>, profiles: Profiles) -> Self {
        let intervals = f1.len() - 1;
        let dt = t_final / intervals as f64;
        let sq: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a * a + b * b).collect();
        ControlSignal {
            kind,
            t_final,
            times: (0..=intervals).map(|i| i as f64 * dt).collect(),
            norm: uniform_integral(&sq, dt).max(0.0).sqrt(),
            f1,
            f2,
            interior: None,
            profiles: Some(profiles),
            diagnostics: ControlDiagnostics::default(),
        }
    }

    fn interior(t_final: f64, field: InteriorField) -> Self {
        let intervals = field.values.len() - 1;
        let dt = t_final / intervals as f64;
        let hx = field.x[1] - field.x[0];
        let rows: Vec<f64> = field
            .values
            .iter()
            .map(|row| {
                let sq: Vec<f64> = row.iter().map(|v| v * v).collect();
                simpson(&sq, hx)
            })
            .collect();
        ControlSignal {
            kind: ControlKind::Interior,
            t_final,
            times: (0..=intervals).map(|i| i as f64 * dt).collect(),
            f1: Vec::new(),
            f2: Vec::new(),
            norm: uniform_integral(&rows, dt).max(0.0).sqrt(),
            interior: Some(field),
            profiles: None,
            diagnostics: ControlDiagnostics::default(),
        }
    }
}

/// Samples of member `j` on `intervals` equal steps of `[0, T]`.
pub(crate) fn member_on_grid(fam: &BiorthFamily, j: usize, intervals: usize) -> Result<Vec<C64>> {
    if intervals == fam.intervals {
        return Ok(fam.samples(j).to_vec());
    }
    let dt = fam.t_final / intervals as f64;
    if fam.eval(j, 0.0).is_some() {
        return Ok((0..=intervals)
            .map(|i| fam.eval(j, i as f64 * dt).unwrap_or_default())
            .collect());
    }
    if intervals % fam.intervals == 0 {
        let factor = intervals / fam.intervals;
        return Ok(fam.refined_samples(factor).swap_remove(j));
    }
    Err(Error::InvalidInput(format!(
        "cannot resample a family on {} intervals to {intervals}",
        fam.intervals
    )))
}

/// Output grid: fine enough for the forward solver on every mode and a
/// multiple of the family grid when the family has no closed form.
pub(crate) fn output_intervals(fs: &FrequencySet, fam: Option<&BiorthFamily>, t_final: f64) -> usize {
    let need = default_intervals(fs.max_abs(), t_final);
    match fam {
        Some(f) if f.eval(0, 0.0).is_none() && !f.is_empty() => f.intervals * need.div_ceil(f.intervals),
        Some(f) => need.max(f.intervals),
        None => need,
    }
}

/// `f(t_i) = Σ c_j conj(g_j(T - t_i))` over `(member, c_j)` pairs; returns
/// the real part and the largest discarded imaginary part relative to the
/// peak.
pub(crate) fn assemble(fam: &BiorthFamily, terms: &[(usize, C64)], intervals: usize) -> Result<(Vec<f64>, f64)> {
    let m = intervals;
    let mut out = vec![C64::new(0.0, 0.0); m + 1];
    for &(j, c) in terms {
        let g = member_on_grid(fam, j, m)?;
        for (i, o) in out.iter_mut().enumerate() {
            *o += c * g[m - i].conj();
        }
    }
    Ok(split_real(out))
}

pub(crate) fn split_real(out: Vec<C64>) -> (Vec<f64>, f64) {
    let scale = out.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let imag = out.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let rel = if scale > 0.0 { imag / scale } else { 0.0 };
    (out.into_iter().map(|z| z.re).collect(), rel)
}

/// Coefficients `c_k = -ζ_k / w(|k|)` for the nonzero targets in `targets`,
/// matched to members of `fam`. Targets without a member are summed into
/// the tail estimate `Σ |c_k| max‖g‖`.
pub(crate) fn coefficients(
    md: &MomentData,
    fam: &BiorthFamily,
    targets: &[i64],
    weight: impl Fn(usize) -> f64,
) -> Result<(Vec<(usize, C64)>, f64)> {
    let mut terms = Vec::new();
    let mut missing = 0.0;
    for &k in targets {
        let z = md.get(k);
        if z == C64::new(0.0, 0.0) {
            continue;
        }
        let n = k.unsigned_abs() as usize;
        let w = weight(n);
        if w == 0.0 || !w.is_finite() {
            return Err(Error::InvalidInput(format!("profile weight of mode {n} is {w}")));
        }
        let c = -z / w;
        match fam.position(md.label(k)) {
            Some(j) => terms.push((j, c)),
            None => missing += c.norm(),
        }
    }
    let gmax = fam.members.iter().map(|m| m.norm).fold(0.0, f64::max);
    Ok((terms, missing * gmax))
}

pub(crate) fn check_tail(tail: f64, norm: f64) -> Result<()> {
    if tail > 1e-6 * norm.max(f64::MIN_POSITIVE) && tail > 0.0 {
        return Err(Error::TailDominant { tail, norm });
    }
    Ok(())
}

pub(crate) fn check_horizon(md: &MomentData, fam: &BiorthFamily) -> Result<()> {
    if (md.t_final - fam.t_final).abs() > 1e-12 * md.t_final {
        return Err(Error::InvalidInput(format!(
            "family built for T = {}, targets for T = {}",
            fam.t_final, md.t_final
        )));
    }
    Ok(())
}

/// Energy of the endpoint predicted when the moments `-ζ` are met up to
/// the uncovered targets.
pub fn endpoint_energy(ep: &EndpointState) -> f64 {
    ep.energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::{free_state, BeamState};
    use crate::spectrum::{frequency_set, RootPair};

    #[test]
    fn targets_for_real_roots_example() {
        let mut fs = frequency_set(SpectralParams::new(0.5, 1.0, 1).unwrap());
        fs.roots[0] = RootPair {
            mode: 1,
            lambda_plus: C64::new(-1.0, 0.0),
            lambda_minus: C64::new(-2.0, 0.0),
            q: C64::new(1.0, 0.0),
            is_double: false,
        };
        let ep = EndpointState {
            gamma1: vec![C64::new(1.0, 0.0)],
            gamma2: vec![C64::new(0.0, 0.0)],
            t_final: 1.0,
        };
        let md = moment_targets(&ep, &fs).unwrap();
        // ζ¹ (paired with λ⁻) = 1, ζ² (paired with λ⁺) = 2.
        assert!((md.get(-1) - 1.0).norm() < 1e-15);
        assert!((md.get(1) - 2.0).norm() < 1e-15);
        let back = md.endpoint(&fs);
        assert!((back.gamma1[0] - 1.0).norm() < 1e-15 && back.gamma2[0].norm() < 1e-15);
    }

    #[test]
    fn targets_agree_with_quotient_form() {
        let fs = frequency_set(SpectralParams::new(0.5, 1.0, 4).unwrap());
        let state = BeamState::new(vec![1.0, -0.3, 0.2, 0.05], vec![0.1, 0.4, 0.0, -0.2]).unwrap();
        let ep = free_state(&state, &fs, 0.6).unwrap();
        let md = moment_targets(&ep, &fs).unwrap();
        for (i, r) in fs.roots.iter().enumerate() {
            let (g1, g2) = (ep.gamma1[i], ep.gamma2[i]);
            let (lp, lm, q) = (r.lambda_plus, r.lambda_minus, r.q);
            let z1 = q * (g1 - g2 / lp) / (lm / lp - 1.0);
            let z2 = q * (g1 - g2 / lm) / (1.0 - lp / lm);
            let n = r.mode as i64;
            assert!((md.get(-n) - z1).norm() < 1e-12 * (1.0 + z1.norm()));
            assert!((md.get(n) - z2).norm() < 1e-12 * (1.0 + z2.norm()));
        }
    }

    #[test]
    fn zero_endpoint_gives_zero_targets() {
        let fs = frequency_set(SpectralParams::new(1.0, 2.0, 3).unwrap());
        let md = moment_targets(&EndpointState::zero(3, 1.0), &fs).unwrap();
        assert!(md.is_zero());
    }
}
