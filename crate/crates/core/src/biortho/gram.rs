use nalgebra::DMatrix;

use super::{
    default_intervals, family_nodes, verify_biorthogonality, Atom, BiorthFamily, FamilyIndex,
    Member, Repr, Strategy,
};
use crate::error::{Error, Result};
use crate::numerics::{exp_moment, gauss_integral, C64};
use crate::spectrum::FrequencySet;

pub const MAX_CONDITION: f64 = 1e12;

fn power_and_lambda(a: &Atom) -> Option<(u32, C64)> {
    match *a {
        Atom::Exp { lambda } => Some((0, lambda)),
        Atom::TExp { lambda } => Some((1, lambda)),
        Atom::DivDiff { .. } => None,
    }
}

/// `∫₀ᵀ a(t) conj(b(t)) dt`.
pub fn gram_entry(a: &Atom, b: &Atom, t_final: f64) -> C64 {
    if let (Some((pa, la)), Some((pb, lb))) = (power_and_lambda(a), power_and_lambda(b)) {
        return exp_moment(pa + pb, la - lb.conj(), t_final);
    }
    let freq = a.max_frequency() + b.max_frequency();
    let panels = ((freq * t_final).ceil() as usize).max(8);
    gauss_integral(|t| a.eval(t) * b.eval(t).conj(), 0.0, t_final, panels, 16)
}

pub(super) fn eval_row(row: &[C64], basis: &[Atom], t: f64) -> C64 {
    row.iter().zip(basis).map(|(c, a)| c * a.eval(t)).sum()
}

/// Minimal-norm family in the span of the basis: `g_j = Σ_b (G⁻¹)_{jb} b`,
/// so that `⟨g_j, b_m⟩ = δ_{jm}` for every basis atom.
fn gram_family(
    members: Vec<FamilyIndex>,
    basis: Vec<Atom>,
    t_final: f64,
    fs: &FrequencySet,
) -> Result<BiorthFamily> {
    let n = basis.len();
    let g = DMatrix::from_fn(n, n, |i, j| gram_entry(&basis[i], &basis[j], t_final));
    let sv = g.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    let inv = g
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned { cond })?;
    let rows: Vec<Vec<C64>> = (0..members.len())
        .map(|j| (0..n).map(|b| inv[(j, b)]).collect())
        .collect();
    let max_freq = basis.iter().map(Atom::max_frequency).fold(0.0, f64::max);
    let intervals = default_intervals(max_freq, t_final);
    let dt = t_final / intervals as f64;
    let samples: Vec<Vec<C64>> = rows
        .iter()
        .map(|row| {
            (0..=intervals)
                .map(|i| eval_row(row, &basis, i as f64 * dt))
                .collect()
        })
        .collect();
    let members: Vec<Member> = members
        .iter()
        .enumerate()
        .map(|(j, &index)| {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    acc += rows[j][a] * rows[j][b].conj() * g[(a, b)];
                }
            }
            Member {
                index,
                atom: basis[j],
                norm: acc.re.max(0.0).sqrt(),
            }
        })
        .collect();
    let mut fam = BiorthFamily {
        strategy: Strategy::Gram,
        t_final,
        intervals,
        members,
        basis,
        residual: 0.0,
        condition: Some(cond),
        leak: None,
        samples,
        repr: Repr::Gram(rows),
    };
    fam.residual = verify_biorthogonality(&fam, fs).max_deviation;
    Ok(fam)
}

/// Gram family over `indices`. Double modes carry the `t e^{iλt}` pairing;
/// `with_t_terms` adds it for simple indices too.
pub fn build_biortho_gram(
    fs: &FrequencySet,
    indices: &[i64],
    with_t_terms: bool,
    t_final: f64,
) -> Result<BiorthFamily> {
    check_horizon(t_final)?;
    let nodes = family_nodes(fs, indices, with_t_terms)?;
    let basis = nodes.iter().map(|ix| ix.atom(fs)).collect();
    gram_family(nodes, basis, t_final, fs)
}

/// Gram family over `indices` that also annihilates the divided
/// differences `(e_other - e_base)/(λ_other - λ_base)` for each
/// `(base, other)` constraint. Used when `other` is represented by `base`.
pub fn build_constrained_gram(
    fs: &FrequencySet,
    indices: &[i64],
    constraints: &[(i64, i64)],
    t_final: f64,
) -> Result<BiorthFamily> {
    check_horizon(t_final)?;
    let nodes = family_nodes(fs, indices, false)?;
    let mut basis: Vec<Atom> = nodes.iter().map(|ix| ix.atom(fs)).collect();
    for &(base, other) in constraints {
        basis.push(Atom::DivDiff {
            base: fs.lambda(base),
            other: fs.lambda(other),
        });
    }
    gram_family(nodes, basis, t_final, fs)
}

fn check_horizon(t_final: f64) -> Result<()> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidInput(format!("T = {t_final} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{frequency_set, SpectralParams};

    #[test]
    fn simple_family_is_biorthogonal() {
        let fs = frequency_set(SpectralParams::new(0.5, 1.0, 4).unwrap());
        let idx: Vec<i64> = fs.indices().collect();
        let fam = build_biortho_gram(&fs, &idx, false, 1.0).unwrap();
        assert!(fam.residual < 1e-10, "{}", fam.residual);
        assert!(fam.members.iter().all(|m| m.norm > 0.0));
    }

    #[test]
    fn double_family_pairs_with_t_terms() {
        let fs = frequency_set(SpectralParams::new(1.0, 2.0, 3).unwrap());
        assert_eq!(fs.double_modes.len(), 3);
        let idx: Vec<i64> = fs.indices().collect();
        let fam = build_biortho_gram(&fs, &idx, true, 1.0).unwrap();
        assert_eq!(fam.len(), 6);
        assert!(fam.residual < 1e-8, "{}", fam.residual);
    }

    #[test]
    fn norm_matches_sampled_norm() {
        let fs = frequency_set(SpectralParams::new(0.5, 1.0, 3).unwrap());
        let idx: Vec<i64> = fs.indices().collect();
        let fam = build_biortho_gram(&fs, &idx, false, 1.0).unwrap();
        for (i, m) in fam.members.iter().enumerate() {
            let sq: Vec<f64> = fam.samples(i).iter().map(|z| z.norm_sqr()).collect();
            let n2 = crate::numerics::uniform_integral(&sq, fam.dt());
            assert!((n2.sqrt() - m.norm).abs() < 1e-8 * m.norm);
        }
    }

    #[test]
    fn constraints_are_annihilated() {
        let fs = frequency_set(SpectralParams::new(0.5, 1.0, 3).unwrap());
        let fam = build_constrained_gram(&fs, &[1, 2, -2, 3, -3], &[(1, -1)], 1.0).unwrap();
        assert!(fam.residual < 1e-9, "{}", fam.residual);
    }
}
