//! ε-steering when the exponential family is not minimal.
//!
//! Each input lives in the real span of the exponentials of its first `M`
//! modes. The span is whitened so that coefficient norm equals `L²` norm,
//! the predicted endpoint is linear in the coefficients, and a Tikhonov
//! solve picks the least-norm control whose predicted energy is `ε/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{ControlDiagnostics, ControlKind, ControlSignal, MomentData, MomentEntry, Profiles};
use crate::biortho::{default_intervals, gram_entry, Atom};
use crate::error::{Error, Result};
use crate::modal::EndpointState;
use crate::numerics::{C64, I};
use crate::spectrum::{classify_regime, FrequencySet, Regime};

/// Relative eigenvalue floor when whitening a span.
const SPAN_FLOOR: f64 = 1e-13;
/// Relative singular value floor of the moment map.
const SV_FLOOR: f64 = 1e-12;

fn conj_atom(a: &Atom) -> Atom {
    match *a {
        Atom::Exp { lambda } => Atom::Exp { lambda: -lambda.conj() },
        Atom::TExp { lambda } => Atom::TExp { lambda: -lambda.conj() },
        Atom::DivDiff { base, other } => Atom::DivDiff {
            base: -base.conj(),
            other: -other.conj(),
        },
    }
}

/// Real function `Σ w·b(τ)` of the time-to-go `τ = T - t`.
type RealCombo = Vec<(C64, Atom)>;

/// Real and imaginary parts of the exponentials of mode `n`.
fn mode_functions(fs: &FrequencySet, n: usize) -> Vec<RealCombo> {
    let lam = fs.lambda(n as i64);
    let atoms = if fs.is_double(n) {
        vec![Atom::Exp { lambda: lam }, Atom::TExp { lambda: lam }]
    } else {
        vec![Atom::Exp { lambda: lam }, Atom::Exp { lambda: fs.lambda(-(n as i64)) }]
    };
    let mut out = Vec::new();
    for b in atoms {
        let c = conj_atom(&b);
        out.push(vec![(C64::new(0.5, 0.0), b), (C64::new(0.5, 0.0), c)]);
        out.push(vec![(-0.5 * I, b), (0.5 * I, c)]);
    }
    out
}

fn combo_inner(a: &RealCombo, b: &RealCombo, t_final: f64) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for (wa, xa) in a {
        for (wb, xb) in b {
            s += wa * wb.conj() * gram_entry(xa, xb, t_final);
        }
    }
    s.re
}

/// `∫₀ᵀ ψ(τ) e_k(τ) dτ`.
fn combo_moment(a: &RealCombo, ek: &Atom, t_final: f64) -> C64 {
    let ck = conj_atom(ek);
    a.iter().map(|(w, x)| w * gram_entry(x, &ck, t_final)).sum()
}

/// Orthonormal functions of one input, as coefficient rows over `funcs`.
struct Whitened {
    input: u8,
    funcs: Vec<RealCombo>,
    rows: Vec<Vec<f64>>,
}

fn whiten(input: u8, funcs: Vec<RealCombo>, t_final: f64) -> Whitened {
    let n = funcs.len();
    let g = DMatrix::from_fn(n, n, |i, j| combo_inner(&funcs[i], &funcs[j], t_final));
    let eig = SymmetricEigen::new(g);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut rows = Vec::new();
    for (j, &d) in eig.eigenvalues.iter().enumerate() {
        if d > SPAN_FLOOR * top {
            rows.push((0..n).map(|a| eig.eigenvectors[(a, j)] / d.sqrt()).collect());
        }
    }
    Whitened { input, funcs, rows }
}

/// `[n² Re γ¹, n² Im γ¹, Re γ², Im γ²]` per mode.
fn endpoint_vector(ep: &EndpointState) -> DVector<f64> {
    let n = ep.n_modes();
    let mut v = DVector::zeros(4 * n);
    for i in 0..n {
        let w = ((i + 1) * (i + 1)) as f64;
        v[4 * i] = w * ep.gamma1[i].re;
        v[4 * i + 1] = w * ep.gamma1[i].im;
        v[4 * i + 2] = ep.gamma2[i].re;
        v[4 * i + 3] = ep.gamma2[i].im;
    }
    v
}

/// `x2 + x0` of an endpoint vector.
fn vector_energy(v: &DVector<f64>) -> f64 {
    let (mut x2, mut x0) = (0.0, 0.0);
    for i in 0..v.len() / 4 {
        x2 += v[4 * i].powi(2) + v[4 * i + 1].powi(2);
        x0 += v[4 * i + 2].powi(2) + v[4 * i + 3].powi(2);
    }
    x2.sqrt() + x0.sqrt()
}

struct Plan {
    spans: Vec<Whitened>,
    svd_u: DMatrix<f64>,
    svd_v: DMatrix<f64>,
    sigma: Vec<f64>,
    r0: DVector<f64>,
}

impl Plan {
    fn coeffs(&self, mu: f64) -> DVector<f64> {
        let beta = self.svd_u.transpose() * &self.r0;
        let mut z = DVector::zeros(self.svd_v.nrows());
        for (i, &s) in self.sigma.iter().enumerate() {
            let f = if mu == 0.0 { 1.0 / s } else { s / (s * s + mu) };
            z -= self.svd_v.column(i) * (f * beta[i]);
        }
        z
    }

    fn energy(&self, mu: f64) -> f64 {
        let beta = self.svd_u.transpose() * &self.r0;
        let mut r = self.r0.clone();
        for (i, &s) in self.sigma.iter().enumerate() {
            let f = if mu == 0.0 { 1.0 } else { s * s / (s * s + mu) };
            r -= self.svd_u.column(i) * (f * beta[i]);
        }
        vector_energy(&r)
    }
}

fn plan(md: &MomentData, profiles: &Profiles, fs: &FrequencySet, cutoff: usize, r0: &DVector<f64>) -> Plan {
    let t = md.t_final;
    let mut spans = Vec::new();
    for input in [1u8, 2] {
        let funcs: Vec<RealCombo> = (1..=cutoff)
            .filter(|&n| profiles.coeff(input, n) != 0.0)
            .flat_map(|n| mode_functions(fs, n))
            .collect();
        if !funcs.is_empty() {
            spans.push(whiten(input, funcs, t));
        }
    }
    let n = md.n_modes();
    let targets: Vec<(i64, Atom)> = (1..=n as i64)
        .flat_map(|m| [m, -m])
        .map(|k| (k, md.label(k).atom(fs)))
        .collect();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for span in &spans {
        let raw: Vec<Vec<C64>> = span
            .funcs
            .iter()
            .map(|f| targets.iter().map(|(_, e)| combo_moment(f, e, t)).collect())
            .collect();
        for row in &span.rows {
            let entries = targets
                .iter()
                .enumerate()
                .map(|(ti, &(k, _))| {
                    let h = profiles.coeff(span.input, k.unsigned_abs() as usize);
                    let m: C64 = row.iter().zip(&raw).map(|(c, r)| *c * r[ti]).sum();
                    MomentEntry { k, zeta: h * m }
                })
                .collect();
            let moments = MomentData {
                entries,
                ..md.clone()
            };
            cols.push(endpoint_vector(&moments.endpoint(fs)));
        }
    }
    let k = DMatrix::from_columns(&cols);
    let svd = k.svd(true, true);
    let top = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SV_FLOOR * top)
        .collect();
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    Plan {
        svd_u: DMatrix::from_columns(&keep.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>()),
        svd_v: DMatrix::from_columns(&keep.iter().map(|&i| vt.row(i).transpose()).collect::<Vec<_>>()),
        sigma: keep.iter().map(|&i| svd.singular_values[i]).collect(),
        spans,
        r0: r0.clone(),
    }
}

/// Smallest mode cutoff whose least-squares endpoint energy is below
/// `eps/2`, then the least-norm control reaching `eps/2` on that span.
pub fn weak_control(md: &MomentData, profiles: &Profiles, eps: f64, fs: &FrequencySet) -> Result<ControlSignal> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps = {eps} must be positive")));
    }
    if fs.params != md.params || profiles.n_modes() != md.n_modes() {
        return Err(Error::InvalidInput("targets, profiles and frequencies disagree".into()));
    }
    let found = classify_regime(&md.params).regime;
    if found != Regime::WeakOnly {
        return Err(Error::RegimeMismatch {
            expected: Regime::WeakOnly,
            found,
        });
    }
    let t = md.t_final;
    let goal = 0.5 * eps;
    let r0 = endpoint_vector(&md.endpoint(fs));
    let intervals = default_intervals(fs.max_abs(), t);
    let free_energy = vector_energy(&r0);
    if free_energy < goal {
        let zeros = vec![0.0; intervals + 1];
        let mut sig = ControlSignal::scalar(ControlKind::Weak, t, zeros.clone(), zeros, profiles.clone());
        sig.diagnostics = ControlDiagnostics {
            predicted_energy: Some(free_energy),
            cutoff: Some(0),
            ..Default::default()
        };
        return Ok(sig);
    }
    let mut chosen = None;
    let mut best = free_energy;
    for cutoff in 1..=md.n_modes() {
        let p = plan(md, profiles, fs, cutoff, &r0);
        let e0 = p.energy(0.0);
        best = best.min(e0);
        if e0 < goal {
            chosen = Some((cutoff, p));
            break;
        }
    }
    let (cutoff, p) = chosen.ok_or(Error::CutoffTooLarge { achievable: 2.0 * best })?;

    // energy(μ) grows with μ; find the largest μ that still meets the goal.
    let s_max = p.sigma.iter().fold(0.0f64, |m, v| m.max(*v));
    let (mut lo, mut hi) = ((1e-30 * s_max * s_max).ln(), (1e4 * s_max * s_max).ln());
    if p.energy(hi.exp()) <= goal {
        lo = hi;
    } else {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if p.energy(mid.exp()) <= goal {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let mu = lo.exp();
    let z = p.coeffs(mu);
    let predicted = p.energy(mu);

    let dt = t / intervals as f64;
    let mut signals = [vec![0.0; intervals + 1], vec![0.0; intervals + 1]];
    let mut offset = 0;
    for span in &p.spans {
        let mut w = vec![C64::new(0.0, 0.0); span.funcs.len()];
        for (j, row) in span.rows.iter().enumerate() {
            for (a, c) in row.iter().enumerate() {
                w[a] += z[offset + j] * c;
            }
        }
        offset += span.rows.len();
        let out = &mut signals[span.input as usize - 1];
        for (i, o) in out.iter_mut().enumerate() {
            let tau = t - i as f64 * dt;
            let v: C64 = span
                .funcs
                .iter()
                .zip(&w)
                .map(|(f, wa)| wa * f.iter().map(|(c, b)| c * b.eval(tau)).sum::<C64>())
                .sum();
            *o = v.re;
        }
    }
    let [f1, f2] = signals;
    let mut sig = ControlSignal::scalar(ControlKind::Weak, t, f1, f2, profiles.clone());
    sig.diagnostics = ControlDiagnostics {
        predicted_energy: Some(predicted),
        cutoff: Some(cutoff),
        ..Default::default()
    };
    Ok(sig)
}
