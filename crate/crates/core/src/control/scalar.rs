//! Scalar-input controls: one profile, or two profiles splitting clusters.

use super::{
    assemble, check_horizon, check_tail, coefficients, output_intervals, subset_indices,
    ControlKind, ControlSignal, MomentData, Profiles,
};
use crate::biortho::{family_nodes, BiorthFamily};
use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::spectrum::{classify_regime, frequency_set, Regime};

fn nonzero_targets(md: &MomentData, targets: impl IntoIterator<Item = i64>) -> Vec<i64> {
    targets
        .into_iter()
        .filter(|&k| md.get(k) != C64::new(0.0, 0.0))
        .collect()
}

fn check_subset(md: &MomentData, indices: &[i64]) -> Result<()> {
    family_nodes(&frequency_set(md.params), indices, false).map(|_| ())
}

/// `f¹(t) = -Σ_k ζ_k / h¹_{|k|} conj(g_k(T - t))`, `f² ≡ 0`.
pub fn control_1d(md: &MomentData, h1: &[f64], fam: &BiorthFamily) -> Result<ControlSignal> {
    check_horizon(md, fam)?;
    let all: Vec<i64> = (1..=md.n_modes() as i64).flat_map(|n| [n, -n]).collect();
    check_subset(md, &all)?;
    let found = classify_regime(&md.params).regime;
    if found != Regime::OneDim {
        return Err(Error::RegimeMismatch {
            expected: Regime::OneDim,
            found,
        });
    }
    if h1.len() < md.n_modes() {
        return Err(Error::InvalidInput(format!(
            "h¹ has {} coefficients for {} modes",
            h1.len(),
            md.n_modes()
        )));
    }
    let fs = frequency_set(md.params);
    let targets = nonzero_targets(md, all);
    let (terms, tail) = coefficients(md, fam, &targets, |n| h1[n - 1])?;
    let intervals = output_intervals(&fs, Some(fam), md.t_final);
    let (f1, imag) = assemble(fam, &terms, intervals)?;
    let profiles = Profiles {
        h1: h1[..md.n_modes()].to_vec(),
        h2: vec![0.0; md.n_modes()],
        assignment_log: Profiles::single(md.n_modes()).assignment_log,
    };
    let f2 = vec![0.0; f1.len()];
    let mut sig = ControlSignal::scalar(ControlKind::Scalar1D, md.t_final, f1, f2, profiles);
    check_tail(tail, sig.norm)?;
    sig.diagnostics.imag_residue = imag;
    sig.diagnostics.tail = tail;
    sig.diagnostics.family_residual = fam.residual;
    Ok(sig)
}

/// Two inputs: `fⁱ` solves the moment problem on `{±n : hⁱₙ ≠ 0}` with
/// targets `ζ_k / hⁱ_{|k|}`. `fams[i]` may be `None` when its subset is
/// empty.
pub fn control_2d(
    md: &MomentData,
    profiles: &Profiles,
    fams: [Option<&BiorthFamily>; 2],
) -> Result<ControlSignal> {
    if profiles.n_modes() != md.n_modes() {
        return Err(Error::InvalidInput(format!(
            "profiles cover {} modes, targets {}",
            profiles.n_modes(),
            md.n_modes()
        )));
    }
    let subsets = [subset_indices(profiles, 1), subset_indices(profiles, 2)];
    for s in &subsets {
        check_subset(md, s)?;
    }
    let found = classify_regime(&md.params).regime;
    if !matches!(found, Regime::OneDim | Regime::TwoDim) {
        return Err(Error::RegimeMismatch {
            expected: Regime::TwoDim,
            found,
        });
    }
    let fs = frequency_set(md.params);
    let first = fams.iter().flatten().next().copied();
    let intervals = output_intervals(&fs, first, md.t_final);
    let mut signals = [vec![0.0; intervals + 1], vec![0.0; intervals + 1]];
    let mut diag = super::ControlDiagnostics::default();
    let mut tails = 0.0;
    for (i, subset) in subsets.iter().enumerate() {
        let input = i as u8 + 1;
        let targets = nonzero_targets(md, subset.iter().copied());
        if targets.is_empty() {
            continue;
        }
        let fam = fams[i].ok_or_else(|| {
            Error::InvalidInput(format!("no family for the subset of input {input}"))
        })?;
        check_horizon(md, fam)?;
        let (terms, tail) = coefficients(md, fam, &targets, |n| profiles.coeff(input, n))?;
        let (f, imag) = assemble(fam, &terms, intervals)?;
        signals[i] = f;
        tails += tail;
        diag.imag_residue = diag.imag_residue.max(imag);
        diag.family_residual = diag.family_residual.max(fam.residual);
    }
    let [f1, f2] = signals;
    let mut sig = ControlSignal::scalar(ControlKind::Scalar2D, md.t_final, f1, f2, profiles.clone());
    check_tail(tails, sig.norm)?;
    diag.tail = tails;
    sig.diagnostics = diag;
    Ok(sig)
}
