//! Characteristic roots of the damped beam modes, the indexed frequency set
//! in the upper half-plane, cross-branch clusters, the counting function and
//! the controllability regime.
//!
//! Mode `n` obeys `a'' + ρ n^{2α} a' + n⁴ a = f`, whose characteristic roots
//! `λ±` are mapped to frequencies `λ_k = -i λ^±_{|k|}` (plus branch for
//! `k > 0`, minus branch for `k < 0`), so that `e^{λ± t} = e^{i λ_k t}`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{linear_fit, C64, I};

/// Relative discriminant tolerance below which a mode is treated as double.
pub const DOUBLE_ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub alpha: f64,
    pub rho: f64,
    pub n_modes: usize,
}

impl SpectralParams {
    pub fn new(alpha: f64, rho: f64, n_modes: usize) -> Result<Self> {
        if !(0.0..=2.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha = {alpha} outside [0, 2]")));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParams(format!("rho = {rho} must be positive")));
        }
        if n_modes == 0 {
            return Err(Error::InvalidParams("n_modes must be at least 1".into()));
        }
        Ok(SpectralParams {
            alpha,
            rho,
            n_modes,
        })
    }

    pub fn with_modes(self, n_modes: usize) -> Self {
        SpectralParams { n_modes, ..self }
    }

    /// Damping coefficient `ρ n^{2α}` of mode `n`.
    pub fn damping(&self, n: usize) -> f64 {
        self.rho * (n as f64).powf(2.0 * self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub mode: usize,
    #[serde(with = "crate::cjson")]
    pub lambda_plus: C64,
    #[serde(with = "crate::cjson")]
    pub lambda_minus: C64,
    #[serde(with = "crate::cjson")]
    pub q: C64,
    pub is_double: bool,
}

/// Roots of `λ² + ρ n^{2α} λ + n⁴ = 0`.
///
/// Real roots are computed as `λ⁻ = (-b - √D)/2`, `λ⁺ = n⁴/λ⁻` to avoid
/// cancellation; complex roots are returned with `Im λ⁺ > 0`.
pub fn char_roots(n: usize, params: &SpectralParams) -> RootPair {
    assert!(n >= 1, "modes are numbered from 1");
    let b = params.damping(n);
    let c = (n as f64).powi(4);
    let disc = b * b - 4.0 * c;
    let scale = b * b + 4.0 * c;
    if disc.abs() <= DOUBLE_ROOT_TOL * scale {
        let lam = C64::new(-0.5 * b, 0.0);
        return RootPair {
            mode: n,
            lambda_plus: lam,
            lambda_minus: lam,
            q: C64::new(0.0, 0.0),
            is_double: true,
        };
    }
    let (lambda_plus, lambda_minus, q) = if disc > 0.0 {
        let sq = disc.sqrt();
        let minus = -0.5 * (b + sq);
        (C64::new(c / minus, 0.0), C64::new(minus, 0.0), C64::new(sq, 0.0))
    } else {
        let sq = (-disc).sqrt();
        (
            C64::new(-0.5 * b, 0.5 * sq),
            C64::new(-0.5 * b, -0.5 * sq),
            C64::new(0.0, sq),
        )
    };
    RootPair {
        mode: n,
        lambda_plus,
        lambda_minus,
        q,
        is_double: false,
    }
}

/// Indexed frequencies `λ_k`, `k ∈ {-N..-1, 1..N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySet {
    pub params: SpectralParams,
    pub roots: Vec<RootPair>,
    pub entries: Vec<FrequencyEntry>,
    pub double_modes: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEntry {
    pub k: i64,
    #[serde(with = "crate::cjson")]
    pub lambda: C64,
}

pub fn frequency_set(params: SpectralParams) -> FrequencySet {
    let roots: Vec<RootPair> = (1..=params.n_modes).map(|n| char_roots(n, &params)).collect();
    let mut entries = Vec::with_capacity(2 * roots.len());
    for r in &roots {
        entries.push(FrequencyEntry {
            k: r.mode as i64,
            lambda: -I * r.lambda_plus,
        });
        entries.push(FrequencyEntry {
            k: -(r.mode as i64),
            lambda: -I * r.lambda_minus,
        });
    }
    let double_modes = roots.iter().filter(|r| r.is_double).map(|r| r.mode).collect();
    FrequencySet {
        params,
        roots,
        entries,
        double_modes,
    }
}

impl FrequencySet {
    pub fn n_modes(&self) -> usize {
        self.roots.len()
    }

    pub fn root(&self, n: usize) -> &RootPair {
        &self.roots[n - 1]
    }

    /// `λ_k`; panics when `k` is zero or out of range.
    pub fn lambda(&self, k: i64) -> C64 {
        let r = self.root(k.unsigned_abs() as usize);
        if k > 0 {
            -I * r.lambda_plus
        } else {
            -I * r.lambda_minus
        }
    }

    /// Characteristic root paired with index `k` (`e^{root·t} = e^{iλ_k t}`).
    pub fn root_of(&self, k: i64) -> C64 {
        I * self.lambda(k)
    }

    /// Indices in the order `1, -1, 2, -2, ...`.
    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.iter().map(|e| e.k)
    }

    pub fn is_double(&self, n: usize) -> bool {
        self.double_modes.contains(&n)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.lambda.norm()).fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct indices.
    pub fn min_gap(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                best = best.min((a.lambda - b.lambda).norm());
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMap {
    pub epsilon: f64,
    /// `(l, m)` with `|λ_l⁺ - λ_m⁻| < ε`.
    pub pairs: Vec<(usize, usize)>,
    pub iota: BTreeMap<usize, usize>,
    pub n_plus: BTreeSet<usize>,
    pub n_minus: BTreeSet<usize>,
    pub n_both: BTreeSet<usize>,
}

impl ClusterMap {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Half the smallest within-branch gap, the largest threshold that keeps
/// every cluster to one member per branch, further capped by half the gap
/// between the two roots of any simple mode.
pub fn default_epsilon(fs: &FrequencySet) -> f64 {
    let mut best = fs
        .roots
        .iter()
        .filter(|r| !r.is_double)
        .map(|r| r.q.norm())
        .fold(f64::INFINITY, f64::min);
    for sign in [1i64, -1] {
        let lams: Vec<C64> = (1..=fs.n_modes() as i64).map(|n| fs.lambda(sign * n)).collect();
        for (i, a) in lams.iter().enumerate() {
            for b in &lams[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
    }
    if best.is_finite() {
        0.5 * best
    } else {
        0.5 * fs.entries.iter().map(|e| e.lambda.norm()).fold(f64::INFINITY, f64::min)
    }
}

pub fn cluster_map(fs: &FrequencySet, epsilon: f64) -> Result<ClusterMap> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon = {epsilon} must be positive")));
    }
    let n = fs.n_modes();
    let too_large = |reason: String| Error::EpsilonTooLarge { epsilon, reason };
    for sign in [1i64, -1] {
        for a in 1..=n {
            for b in a + 1..=n {
                let d = (fs.lambda(sign * a as i64) - fs.lambda(sign * b as i64)).norm();
                if d < epsilon {
                    return Err(too_large(format!(
                        "same-branch frequencies of modes {a} and {b} are {d:e} apart"
                    )));
                }
            }
        }
    }
    let mut pairs = Vec::new();
    for l in 1..=n {
        for m in 1..=n {
            if l == m && fs.is_double(l) {
                continue;
            }
            let d = (fs.lambda(l as i64) - fs.lambda(-(m as i64))).norm();
            if d < epsilon {
                if l == m {
                    return Err(too_large(format!(
                        "mode {l} has near-equal roots ({d:e}) but is not double"
                    )));
                }
                pairs.push((l, m));
            }
        }
    }
    let mut iota = BTreeMap::new();
    let mut n_minus = BTreeSet::new();
    for &(l, m) in &pairs {
        if iota.insert(l, m).is_some() || !n_minus.insert(m) {
            return Err(too_large(format!("cluster through ({l}, {m}) has three members")));
        }
    }
    let n_plus: BTreeSet<usize> = iota.keys().copied().collect();
    let n_both = n_plus.intersection(&n_minus).copied().collect();
    Ok(ClusterMap {
        epsilon,
        pairs,
        iota,
        n_plus,
        n_minus,
        n_both,
    })
}

/// Sorted neighbour distances for every index, so that the counting
/// function can be evaluated for many radii.
#[derive(Debug, Clone)]
pub struct CountingProfile {
    distances: Vec<Vec<f64>>,
    pub n_modes: usize,
}

impl CountingProfile {
    pub fn new(fs: &FrequencySet) -> Self {
        let lams: Vec<C64> = fs.entries.iter().map(|e| e.lambda).collect();
        let distances = lams
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut d: Vec<f64> = lams
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| (a - b).norm())
                    .collect();
                d.sort_by(f64::total_cmp);
                d
            })
            .collect();
        CountingProfile {
            distances,
            n_modes: fs.n_modes(),
        }
    }

    /// `max_k #{n ≠ k : |λ_n - λ_k| < r}`.
    pub fn count(&self, r: f64) -> usize {
        self.distances
            .iter()
            .map(|d| d.partition_point(|&x| x < r))
            .max()
            .unwrap_or(0)
    }

    /// Log-log least-squares exponent of the counting function over
    /// `samples` geometrically spaced radii in `[r_lo, r_hi]`.
    pub fn fitted_exponent(&self, r_lo: f64, r_hi: f64, samples: usize) -> Option<f64> {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 0..samples {
            let r = r_lo * (r_hi / r_lo).powf(i as f64 / (samples - 1) as f64);
            let c = self.count(r);
            if c > 0 {
                xs.push(r.ln());
                ys.push((c as f64).ln());
            }
        }
        (xs.len() >= 2).then(|| linear_fit(&xs, &ys).slope)
    }
}

pub fn counting_function(fs: &FrequencySet, r: f64) -> usize {
    CountingProfile::new(fs).count(r)
}

/// `S_N = Σ_{n≤N} |Im(1/(iλ_n⁺))|`.
pub fn blaschke_partial_sum(params: &SpectralParams, n: usize) -> f64 {
    (1..=n)
        .map(|m| {
            let lp = char_roots(m, params).lambda_plus;
            (C64::new(1.0, 0.0) / (I * lp)).im.abs()
        })
        .sum()
}

/// Local power-law exponent `p` of the Blaschke terms `~ n^{-p}`, estimated
/// from two consecutive decades of partial sums.
pub fn blaschke_decay_exponent(params: &SpectralParams, n: usize) -> f64 {
    let s1 = blaschke_partial_sum(params, n);
    let s10 = blaschke_partial_sum(params, 10 * n);
    let s100 = blaschke_partial_sum(params, 100 * n);
    1.0 - ((s100 - s10) / (s10 - s1)).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    OneDim,
    TwoDim,
    NotControllable,
    WeakOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub blaschke_divergent: bool,
    pub kappa: f64,
    pub notes: Vec<String>,
}

/// Radii used for the empirical counting exponent.
pub const KAPPA_FIT_RANGE: (f64, f64) = (10.0, 1e3);

pub fn classify_regime(params: &SpectralParams) -> RegimeReport {
    let (alpha, rho) = (params.alpha, params.rho);
    let mut notes = Vec::new();
    let regime = if alpha >= 2.0 {
        notes.push("frequencies stay bounded; no control synthesis".into());
        Regime::NotControllable
    } else if alpha >= 1.5 {
        Regime::WeakOnly
    } else if alpha > 1.0 || (alpha > 0.0 && rho > 2.0) {
        Regime::TwoDim
    } else {
        Regime::OneDim
    };
    let kappa = if alpha <= 1.0 {
        0.5
    } else {
        let n = params.n_modes.max(200);
        let profile = CountingProfile::new(&frequency_set(params.with_modes(n)));
        let fit = profile
            .fitted_exponent(KAPPA_FIT_RANGE.0, KAPPA_FIT_RANGE.1, 41)
            .unwrap_or(0.5);
        notes.push(format!("counting exponent fitted on N = {n}: {fit:.4}"));
        fit.clamp(0.01, 0.99)
    };
    let p = blaschke_decay_exponent(params, 1000);
    notes.push(format!("Blaschke term decay exponent {p:.4}"));
    RegimeReport {
        regime,
        blaschke_divergent: p <= 1.01,
        kappa,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, rho: f64, n: usize) -> SpectralParams {
        SpectralParams::new(alpha, rho, n).unwrap()
    }

    /// Textbook quadratic formula, used as an independent check.
    fn quadratic(b: f64, c: f64) -> (C64, C64) {
        let d = C64::new(b * b - 4.0 * c, 0.0).sqrt();
        ((-b + d) / 2.0, (-b - d) / 2.0)
    }

    #[test]
    fn double_root_at_critical_damping() {
        let r = char_roots(1, &params(1.0, 2.0, 1));
        assert!(r.is_double);
        assert_eq!(r.lambda_plus, C64::new(-1.0, 0.0));
        assert_eq!(r.lambda_minus, C64::new(-1.0, 0.0));
    }

    #[test]
    fn complex_pair_for_light_damping() {
        let r = char_roots(1, &params(0.5, 1.0, 1));
        let (p, m) = quadratic(1.0, 1.0);
        assert!((r.lambda_plus - p).norm() < 1e-15);
        assert!((r.lambda_minus - m).norm() < 1e-15);
        assert!(r.lambda_plus.im > 0.0);
        assert!((r.lambda_plus - C64::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn coincidence_at_rho_13_over_6() {
        let p = params(1.0, 13.0 / 6.0, 4);
        let r3 = char_roots(3, &p);
        let r2 = char_roots(2, &p);
        let (q3p, q3m) = quadratic(13.0 / 6.0 * 9.0, 81.0);
        let (q2p, q2m) = quadratic(13.0 / 6.0 * 4.0, 16.0);
        assert!((r3.lambda_plus - q3p).norm() < 1e-13);
        assert!((r3.lambda_minus - q3m).norm() < 1e-13);
        assert!((r2.lambda_plus - q2p).norm() < 1e-13);
        assert!((r2.lambda_minus - q2m).norm() < 1e-13);
        assert!((r3.lambda_plus.re + 6.0).abs() < 1e-13);
        assert!((r3.lambda_minus.re + 13.5).abs() < 1e-13);
        assert!((r2.lambda_plus.re + 8.0 / 3.0).abs() < 1e-13);
        assert!((r2.lambda_minus.re + 6.0).abs() < 1e-13);
    }

    #[test]
    fn frequencies_in_upper_half_plane() {
        let fs = frequency_set(params(0.5, 1.0, 1));
        let s3 = 3f64.sqrt();
        assert!((fs.lambda(1) - C64::new(s3 / 2.0, 0.5)).norm() < 1e-15);
        assert!((fs.lambda(-1) - C64::new(-s3 / 2.0, 0.5)).norm() < 1e-15);

        let fs = frequency_set(params(1.0, 2.0, 2));
        assert_eq!(fs.double_modes, BTreeSet::from([1, 2]));
        assert!((fs.lambda(1) - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((fs.lambda(-1) - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((fs.lambda(2) - C64::new(0.0, 4.0)).norm() < 1e-15);
        assert!((fs.lambda(-2) - C64::new(0.0, 4.0)).norm() < 1e-15);
    }

    #[test]
    fn kelvin_voigt_plus_branch_bounded() {
        let p = params(2.0, 1.0, 1);
        let sup = (1..=10_000)
            .map(|n| char_roots(n, &p).lambda_plus.norm())
            .fold(0.0, f64::max);
        assert!(sup < 1.1, "{sup}");
        assert!((char_roots(10_000, &p).lambda_plus.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn clusters_for_coincidence() {
        let fs = frequency_set(params(1.0, 13.0 / 6.0, 4));
        let cm = cluster_map(&fs, 1e-6).unwrap();
        assert_eq!(cm.pairs, vec![(3, 2)]);
        assert_eq!(cm.n_plus, BTreeSet::from([3]));
        assert_eq!(cm.n_minus, BTreeSet::from([2]));
        assert!(cm.n_both.is_empty());
    }

    #[test]
    fn no_clusters_in_separated_set() {
        let fs = frequency_set(params(0.5, 1.0, 10));
        // exhaustive pairwise check
        let mut min = f64::INFINITY;
        for a in &fs.entries {
            for b in &fs.entries {
                if a.k != b.k {
                    min = min.min((a.lambda - b.lambda).norm());
                }
            }
        }
        assert!(min > 0.1);
        assert!(cluster_map(&fs, 0.1).unwrap().is_empty());
        assert!(cluster_map(&fs, 0.5 * fs.min_gap()).unwrap().is_empty());
    }

    #[test]
    fn oversized_epsilon_rejected() {
        let fs = frequency_set(params(0.5, 1.0, 6));
        assert!(matches!(cluster_map(&fs, 50.0), Err(Error::EpsilonTooLarge { .. })));
        assert!(cluster_map(&fs, 0.0).is_err());
    }

    #[test]
    fn counting_below_min_gap_is_zero() {
        let fs = frequency_set(params(0.5, 1.0, 20));
        assert_eq!(counting_function(&fs, 0.99 * fs.min_gap()), 0);
        assert!(counting_function(&fs, 2.0 * fs.max_abs()) == 2 * 20 - 1);
    }

    #[test]
    fn blaschke_edge_cases() {
        assert_eq!(blaschke_partial_sum(&params(1.5, 1.0, 1), 0), 0.0);
        let d = blaschke_partial_sum(&params(1.5, 1.0, 1), 10_000)
            - blaschke_partial_sum(&params(1.5, 1.0, 1), 1_000);
        assert!((d - 10f64.ln()).abs() < 0.3);
    }

    #[test]
    fn blaschke_converges_below_three_halves() {
        // Terms decay like n^{-1.2}; consecutive decades shrink by 10^{-0.2}.
        let p = params(1.4, 1.0, 1);
        let e = blaschke_decay_exponent(&p, 1000);
        assert!((e - 1.2).abs() < 0.02, "{e}");
        assert!(!classify_regime(&p).blaschke_divergent);
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(&params(0.5, 1.0, 8)).regime, Regime::OneDim);
        assert_eq!(classify_regime(&params(0.0, 4.0, 8)).regime, Regime::OneDim);
        assert_eq!(classify_regime(&params(1.0, 13.0 / 6.0, 4)).regime, Regime::TwoDim);
        let r = classify_regime(&params(1.2, 1.0, 8));
        assert_eq!(r.regime, Regime::TwoDim);
        assert!(r.kappa > 0.0 && r.kappa < 1.0);
        let r = classify_regime(&params(1.6, 1.0, 8));
        assert_eq!(r.regime, Regime::WeakOnly);
        assert!(r.blaschke_divergent);
        assert_eq!(classify_regime(&params(2.0, 1.0, 8)).regime, Regime::NotControllable);
    }

    #[test]
    fn invalid_params() {
        assert!(SpectralParams::new(2.5, 1.0, 1).is_err());
        assert!(SpectralParams::new(1.0, 0.0, 1).is_err());
        assert!(SpectralParams::new(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn json_uses_re_im_objects() {
        let fs = frequency_set(params(0.5, 1.0, 1));
        let v: serde_json::Value = serde_json::to_value(&fs).unwrap();
        let lam = &v["entries"][0]["lambda"];
        assert!(lam["re"].is_f64() && lam["im"].is_f64());
        let back: FrequencySet = serde_json::from_value(v).unwrap();
        assert_eq!(back, fs);
    }
}
