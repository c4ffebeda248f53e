//! Biorthogonal families to the temporal exponentials `e^{iλ_k t}` on
//! `[0, T]`, built either from an explicit Gram inverse or from entire
//! functions sampled through an FFT.

mod analytic;
mod gram;
pub mod majorant;
pub mod multiplier;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{phi1, uniform_integral, C64, I};
use crate::spectrum::FrequencySet;

pub use analytic::{analytic_log_norms, build_biortho_analytic, AnalyticConfig};
pub use gram::{build_biortho_gram, build_constrained_gram, gram_entry};
pub use majorant::{theta_majorant, NuMajorant};
pub use multiplier::{build_multiplier, f_products, truncation_log_bound, Multiplier};

/// Relative distance below which two distinct indices count as coincident.
pub const SEPARATION_TOL: f64 = 1e-8;

/// Temporal basis functions on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Atom {
    Exp {
        #[serde(with = "crate::cjson")]
        lambda: C64,
    },
    TExp {
        #[serde(with = "crate::cjson")]
        lambda: C64,
    },
    /// `(e^{iλ_m t} - e^{iλ_l t}) / (λ_m - λ_l)`, regular as `λ_m → λ_l`.
    DivDiff {
        #[serde(with = "crate::cjson")]
        base: C64,
        #[serde(with = "crate::cjson")]
        other: C64,
    },
}

impl Atom {
    pub fn eval(&self, t: f64) -> C64 {
        match *self {
            Atom::Exp { lambda } => (I * lambda * t).exp(),
            Atom::TExp { lambda } => (I * lambda * t).exp() * t,
            Atom::DivDiff { base, other } => {
                (I * base * t).exp() * I * t * phi1(I * (other - base) * t)
            }
        }
    }

    pub fn max_frequency(&self) -> f64 {
        match *self {
            Atom::Exp { lambda } | Atom::TExp { lambda } => lambda.norm(),
            Atom::DivDiff { base, other } => base.norm().max(other.norm()),
        }
    }
}

/// Member label: index `k` and whether it pairs with `t e^{iλ_k t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FamilyIndex {
    pub k: i64,
    pub weighted: bool,
}

impl FamilyIndex {
    pub fn plain(k: i64) -> Self {
        FamilyIndex { k, weighted: false }
    }

    /// Label pairing with the moment target of index `k`. For a double
    /// mode `n`, `-n` is the `t`-weighted partner of `n`.
    pub fn for_target(k: i64, fs: &FrequencySet) -> Self {
        let n = k.unsigned_abs() as usize;
        if fs.is_double(n) {
            FamilyIndex {
                k: n as i64,
                weighted: k < 0,
            }
        } else {
            FamilyIndex::plain(k)
        }
    }

    pub fn atom(&self, fs: &FrequencySet) -> Atom {
        let lambda = fs.lambda(self.k);
        if self.weighted {
            Atom::TExp { lambda }
        } else {
            Atom::Exp { lambda }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Gram,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub index: FamilyIndex,
    pub atom: Atom,
    pub norm: f64,
}

/// A family `{g_j}` sampled on `t_i = i T / intervals`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiorthFamily {
    pub strategy: Strategy,
    pub t_final: f64,
    pub intervals: usize,
    pub members: Vec<Member>,
    /// Every atom the family is biorthogonal against, members first.
    pub basis: Vec<Atom>,
    pub residual: f64,
    pub condition: Option<f64>,
    pub leak: Option<f64>,
    #[serde(skip)]
    samples: Vec<Vec<C64>>,
    #[serde(skip)]
    repr: Repr,
}

#[derive(Debug, Clone, Default)]
enum Repr {
    #[default]
    None,
    /// Rows of `G⁻¹` restricted to members.
    Gram(Vec<Vec<C64>>),
    /// Centered spectra `H(s_l)` with spacing `ds`.
    Spectral { spectra: Vec<Vec<C64>>, ds: f64 },
}

impl BiorthFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.intervals as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| i as f64 * self.dt()).collect()
    }

    pub fn position(&self, index: FamilyIndex) -> Option<usize> {
        self.members.iter().position(|m| m.index == index)
    }

    pub fn samples(&self, member: usize) -> &[C64] {
        &self.samples[member]
    }

    /// Samples on a grid `factor` times finer.
    pub fn refined_samples(&self, factor: usize) -> Vec<Vec<C64>> {
        assert!(factor >= 1);
        if factor == 1 {
            return self.samples.clone();
        }
        let n = self.intervals * factor;
        let dt = self.t_final / n as f64;
        match &self.repr {
            Repr::Gram(rows) => rows
                .iter()
                .map(|row| {
                    (0..=n)
                        .map(|i| gram::eval_row(row, &self.basis, i as f64 * dt))
                        .collect()
                })
                .collect(),
            Repr::Spectral { spectra, ds } => spectra
                .iter()
                .map(|h| analytic::synthesize(h, *ds, factor, n))
                .collect(),
            Repr::None => self.samples.clone(),
        }
    }

    /// Exact value of member `i` at `t` where the representation allows it.
    pub fn eval(&self, member: usize, t: f64) -> Option<C64> {
        match &self.repr {
            Repr::Gram(rows) => Some(gram::eval_row(&rows[member], &self.basis, t)),
            _ => None,
        }
    }

    /// Rows as JSON-friendly records: `(k, weighted, t, re, im)`.
    pub fn table(&self) -> Vec<(i64, bool, f64, f64, f64)> {
        let times = self.times();
        let mut out = Vec::with_capacity(self.members.len() * times.len());
        for (m, s) in self.members.iter().zip(&self.samples) {
            for (t, v) in times.iter().zip(s) {
                out.push((m.index.k, m.index.weighted, *t, v.re, v.im));
            }
        }
        out
    }
}

/// Pairing matrix against the independently assembled basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max |⟨g_i, b_j⟩ - δ_ij|`.
    pub max_deviation: f64,
    pub worst: Option<(FamilyIndex, usize)>,
    pub refinement: usize,
}

/// Checks `⟨g_i, b_j⟩ = δ_ij` on a 4× refined grid. Member atoms are
/// rebuilt from `fs` rather than taken from the family; extra constraint
/// atoms must pair to zero.
pub fn verify_biorthogonality(fam: &BiorthFamily, fs: &FrequencySet) -> ResidualReport {
    let refinement = 4;
    let samples = fam.refined_samples(refinement);
    let n = fam.intervals * refinement;
    let dt = fam.t_final / n as f64;
    let mut tests: Vec<Atom> = fam.members.iter().map(|m| m.index.atom(fs)).collect();
    tests.extend(fam.basis[fam.members.len()..].iter().copied());
    let columns: Vec<Vec<C64>> = tests
        .iter()
        .map(|a| (0..=n).map(|i| a.eval(i as f64 * dt).conj()).collect())
        .collect();
    let mut max_deviation = 0.0f64;
    let mut worst = None;
    for (i, (m, g)) in fam.members.iter().zip(&samples).enumerate() {
        for (j, col) in columns.iter().enumerate() {
            let prod: Vec<C64> = g.iter().zip(col).map(|(a, b)| a * b).collect();
            let v = uniform_integral(&prod, dt);
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (v - target).norm();
            if dev > max_deviation {
                max_deviation = dev;
                worst = Some((m.index, j));
            }
        }
    }
    ResidualReport {
        max_deviation,
        worst,
        refinement,
    }
}

/// Members for `indices`: double modes always carry both pairings,
/// simple indices add the weighted pairing when `with_t_terms` is set.
pub(crate) fn family_nodes(
    fs: &FrequencySet,
    indices: &[i64],
    with_t_terms: bool,
) -> Result<Vec<FamilyIndex>> {
    let mut out: Vec<FamilyIndex> = Vec::new();
    for &k in indices {
        let n = k.unsigned_abs() as usize;
        if k == 0 || n > fs.n_modes() {
            return Err(Error::InvalidInput(format!("index {k} outside the frequency set")));
        }
        let labels = if fs.is_double(n) {
            vec![FamilyIndex::for_target(n as i64, fs), FamilyIndex::for_target(-(n as i64), fs)]
        } else if with_t_terms {
            vec![FamilyIndex::plain(k), FamilyIndex { k, weighted: true }]
        } else {
            vec![FamilyIndex::plain(k)]
        };
        for l in labels {
            if !out.contains(&l) {
                out.push(l);
            }
        }
    }
    check_separated(fs, &out)?;
    Ok(out)
}

fn check_separated(fs: &FrequencySet, nodes: &[FamilyIndex]) -> Result<()> {
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if a.k == b.k {
                continue;
            }
            let (la, lb) = (fs.lambda(a.k), fs.lambda(b.k));
            let distance = (la - lb).norm();
            if distance <= SEPARATION_TOL * la.norm().max(lb.norm()).max(1.0) {
                return Err(Error::SubsetNotSeparated {
                    a: a.k,
                    b: b.k,
                    distance,
                });
            }
        }
    }
    Ok(())
}

/// Grid size for sampling: a multiple of four with at least 40 points per
/// unit of `max|λ| T`.
pub fn default_intervals(max_abs: f64, t_final: f64) -> usize {
    let n = (40.0 * max_abs * t_final).ceil().max(1024.0) as usize;
    n.div_ceil(4) * 4
}

/// Least-squares fit of `log‖g_j‖ ≈ log C₂ + C₃ (Im λ_j)^κ` over the
/// members with `k` of the given sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormFit {
    pub log_c2: f64,
    pub c3: f64,
    pub points: usize,
}

pub fn fit_norm_law(points: &[(C64, f64)], kappa: f64) -> NormFit {
    let x: Vec<f64> = points.iter().map(|(l, _)| l.im.powf(kappa)).collect();
    let y: Vec<f64> = points.iter().map(|(_, ln)| *ln).collect();
    let f = crate::numerics::linear_fit(&x, &y);
    NormFit {
        log_c2: f.intercept,
        c3: f.slope,
        points: points.len(),
    }
}
