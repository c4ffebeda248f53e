//! Distributed control on a patch `(a, b)`.
//!
//! Each target `k` gets a separated product `s_k(x) θ_k(t)`. Outside
//! clusters `s_k = φ̂_{|k|}` and `θ_k` is the temporal biorthogonal member.
//! A cluster `(l, m)` keeps only `l` in the temporal family, with the
//! family also annihilating the divided difference of `e_l` and `e_{-m}`,
//! so `θ_l` pairs with both. The spatial pair `(η_l, η_m)` then separates
//! the two targets.

use super::{
    check_horizon, member_on_grid, output_intervals, ControlSignal, InteriorField, MomentData,
};
use crate::biortho::{build_constrained_gram, BiorthFamily, FamilyIndex};
use crate::error::{Error, Result};
use crate::modal::{check_interval, eigenfunction, restricted_norm, spatial_biortho_pair, SpatialPair};
use crate::numerics::{simpson, uniform_integral, C64};
use crate::spectrum::{classify_regime, ClusterMap, FrequencySet, Regime};

/// Indices kept in the temporal family: every `k` except the minus member
/// of each cluster.
pub fn interior_indices(fs: &FrequencySet, cm: &ClusterMap) -> Vec<i64> {
    fs.indices()
        .filter(|&k| k > 0 || !cm.n_minus.contains(&(k.unsigned_abs() as usize)))
        .collect()
}

/// Temporal family over [`interior_indices`] with one divided-difference
/// constraint per cluster.
pub fn interior_time_family(fs: &FrequencySet, cm: &ClusterMap, t_final: f64) -> Result<BiorthFamily> {
    let constraints: Vec<(i64, i64)> = cm
        .pairs
        .iter()
        .map(|&(l, m)| (l as i64, -(m as i64)))
        .collect();
    build_constrained_gram(fs, &interior_indices(fs, cm), &constraints, t_final)
}

pub fn interior_pairs(cm: &ClusterMap, a: f64, b: f64) -> Result<Vec<SpatialPair>> {
    cm.pairs
        .iter()
        .map(|&(l, m)| spatial_biortho_pair(l, m, a, b))
        .collect()
}

/// Temporal label and spatial factor of target `k`.
struct Shape<'a> {
    k: i64,
    label: FamilyIndex,
    spatial: Spatial<'a>,
}

enum Spatial<'a> {
    Plain(usize),
    PairL(&'a SpatialPair),
    PairM(&'a SpatialPair),
}

impl Spatial<'_> {
    fn eval(&self, x: f64, a: f64, b: f64) -> f64 {
        match self {
            Spatial::Plain(n) => eigenfunction(*n, x) / restricted_norm(*n, a, b),
            Spatial::PairL(p) => p.eval(x).0,
            Spatial::PairM(p) => p.eval(x).1,
        }
    }
}

fn shapes<'a>(md: &MomentData, fs: &FrequencySet, cm: &ClusterMap, pairs: &'a [SpatialPair]) -> Result<Vec<Shape<'a>>> {
    let mut out = Vec::with_capacity(2 * fs.n_modes());
    for k in fs.indices() {
        let n = k.unsigned_abs() as usize;
        let mut label = md.label(k);
        let mut spatial = Spatial::Plain(n);
        for (&(l, m), p) in cm.pairs.iter().zip(pairs) {
            if p.indices != (l, m) {
                return Err(Error::InvalidInput(format!(
                    "spatial pair {:?} does not match cluster ({l}, {m})",
                    p.indices
                )));
            }
            if k == l as i64 {
                spatial = Spatial::PairL(p);
            } else if k == -(m as i64) {
                label = FamilyIndex::for_target(l as i64, fs);
                spatial = Spatial::PairM(p);
            }
        }
        out.push(Shape { k, label, spatial });
    }
    Ok(out)
}

/// `f(x, t) = -Σ_k ζ_k / ‖φ_{|k|}‖_{(a,b)} s_k(x) conj(θ_k(T - t))`.
pub fn control_interior(
    md: &MomentData,
    fs: &FrequencySet,
    cm: &ClusterMap,
    interval: (f64, f64),
    fam: &BiorthFamily,
    pairs: &[SpatialPair],
) -> Result<ControlSignal> {
    let (a, b) = interval;
    check_interval(a, b)?;
    check_horizon(md, fam)?;
    if pairs.len() != cm.pairs.len() {
        return Err(Error::InvalidInput(format!(
            "{} spatial pairs for {} clusters",
            pairs.len(),
            cm.pairs.len()
        )));
    }
    let found = classify_regime(&md.params).regime;
    if md.params.alpha >= 1.5 {
        return Err(Error::RegimeMismatch {
            expected: Regime::TwoDim,
            found,
        });
    }
    let t = md.t_final;
    let shapes = shapes(md, fs, cm, pairs)?;
    let nx = (64 * fs.n_modes() + 1).max(257) | 1;
    let hx = (b - a) / (nx - 1) as f64;
    let x: Vec<f64> = (0..nx).map(|j| a + j as f64 * hx).collect();
    let spatial: Vec<Vec<f64>> = shapes
        .iter()
        .map(|s| x.iter().map(|&xi| s.spatial.eval(xi, a, b)).collect())
        .collect();

    let intervals = output_intervals(fs, Some(fam), t);
    let mut terms: Vec<(usize, Vec<C64>, C64)> = Vec::new();
    for (si, s) in shapes.iter().enumerate() {
        let z = md.get(s.k);
        if z == C64::new(0.0, 0.0) {
            continue;
        }
        let j = fam.position(s.label).ok_or_else(|| {
            Error::InvalidInput(format!("temporal family lacks a member for target {}", s.k))
        })?;
        let c = -z / restricted_norm(s.k.unsigned_abs() as usize, a, b);
        terms.push((si, member_on_grid(fam, j, intervals)?, c));
    }
    let (mut peak, mut imag) = (0.0f64, 0.0f64);
    let values: Vec<Vec<f64>> = (0..=intervals)
        .map(|i| {
            let mut row = vec![C64::new(0.0, 0.0); nx];
            for (si, theta, c) in &terms {
                let w = c * theta[intervals - i].conj();
                for (r, sv) in row.iter_mut().zip(&spatial[*si]) {
                    *r += w * sv;
                }
            }
            for r in &row {
                peak = peak.max(r.norm());
                imag = imag.max(r.im.abs());
            }
            row.into_iter().map(|r| r.re).collect()
        })
        .collect();

    let field = InteriorField { a, b, x: x.clone(), values };
    let mut sig = ControlSignal::interior(t, field);
    sig.diagnostics.imag_residue = if peak > 0.0 { imag / peak } else { 0.0 };
    sig.diagnostics.family_residual = fam.residual;
    sig.diagnostics.cross_residual = Some(cross_residual(&shapes, &spatial, &x, fs, fam)?);
    Ok(sig)
}

/// `max |⟨s_j, φ̂_k⟩ ⟨θ_j, e_k⟩ - δ_jk|` over all targets, Simpson in `x`
/// and a refined uniform rule in `t`.
fn cross_residual(
    shapes: &[Shape],
    spatial: &[Vec<f64>],
    x: &[f64],
    fs: &FrequencySet,
    fam: &BiorthFamily,
) -> Result<f64> {
    let (a, b) = (x[0], x[x.len() - 1]);
    let hx = x[1] - x[0];
    let factor = 4;
    let fine = fam.refined_samples(factor);
    let n = fam.intervals * factor;
    let dt = fam.t_final / n as f64;
    let mut worst = 0.0f64;
    for (ki, target) in shapes.iter().enumerate() {
        let nk = target.k.unsigned_abs() as usize;
        let phi: Vec<f64> = x.iter().map(|&xi| eigenfunction(nk, xi) / restricted_norm(nk, a, b)).collect();
        let ek = FamilyIndex::for_target(target.k, fs).atom(fs);
        let ek_samples: Vec<C64> = (0..=n).map(|i| ek.eval(i as f64 * dt)).collect();
        for (ji, s) in shapes.iter().enumerate() {
            let j = fam.position(s.label).ok_or_else(|| {
                Error::InvalidInput(format!("temporal family lacks a member for target {}", s.k))
            })?;
            let prod: Vec<f64> = spatial[ji].iter().zip(&phi).map(|(u, v)| u * v).collect();
            let sx = simpson(&prod, hx);
            let tv: Vec<C64> = fine[j].iter().zip(&ek_samples).map(|(g, e)| g * e.conj()).collect();
            let st = uniform_integral(&tv, dt);
            let want = if ji == ki { 1.0 } else { 0.0 };
            worst = worst.max((sx * st - want).norm());
        }
    }
    Ok(worst)
}
