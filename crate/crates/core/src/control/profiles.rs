//! Actuator profiles that split every cluster across the two inputs.
//!
//! Clusters pair mode `l` (plus branch) with `ι(l)` (minus branch). Seen as
//! edges between modes they form paths and cycles, since every mode has at
//! most one partner per branch. Each component is two-coloured: `h¹` or `h²`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{ClusterMap, FrequencySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Not in any cluster: `h¹`.
    Isolated,
    /// Only the minus root is clustered; starts its chain with `h¹`.
    MinusOnly,
    /// Takes the profile opposite to its predecessor along a chain.
    ChainOpposite,
    /// Member of a closed cycle, coloured alternately from its smallest mode.
    CycleOpposite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub mode: usize,
    pub rule: Rule,
    /// 1 for `h¹`, 2 for `h²`.
    pub profile: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub assignment_log: Vec<Assignment>,
}

impl Profiles {
    /// `h¹ₙ = 1/n`, `h² ≡ 0`.
    pub fn single(n_modes: usize) -> Self {
        Profiles {
            h1: (1..=n_modes).map(|n| 1.0 / n as f64).collect(),
            h2: vec![0.0; n_modes],
            assignment_log: (1..=n_modes)
                .map(|mode| Assignment {
                    mode,
                    rule: Rule::Isolated,
                    profile: 1,
                })
                .collect(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.h1.len()
    }

    /// Coefficient of mode `n` on input 1 or 2.
    pub fn coeff(&self, input: u8, n: usize) -> f64 {
        match input {
            1 => self.h1[n - 1],
            _ => self.h2[n - 1],
        }
    }

    /// Clusters where both members act through the same input.
    pub fn split_violations(&self, cm: &ClusterMap) -> Vec<(usize, usize)> {
        cm.pairs
            .iter()
            .copied()
            .filter(|&(l, m)| {
                (self.h1[l - 1] != 0.0 && self.h1[m - 1] != 0.0)
                    || (self.h2[l - 1] != 0.0 && self.h2[m - 1] != 0.0)
            })
            .collect()
    }
}

pub fn synthesize_profiles(fs: &FrequencySet, cm: &ClusterMap) -> Result<Profiles> {
    let n = fs.n_modes();
    if let Some(&(l, m)) = cm.pairs.iter().find(|&&(l, m)| l > n || m > n || l == 0 || m == 0) {
        return Err(Error::InvalidInput(format!(
            "cluster ({l}, {m}) outside {n} modes"
        )));
    }
    let inverse: BTreeMap<usize, usize> = cm.iota.iter().map(|(&l, &m)| (m, l)).collect();
    let mut colour: BTreeMap<usize, (u8, Rule)> = BTreeMap::new();

    // Chains end at a mode whose plus root is free; walk them backwards.
    for start in 1..=n {
        if cm.n_plus.contains(&start) {
            continue;
        }
        let rule = if cm.n_minus.contains(&start) {
            Rule::MinusOnly
        } else {
            Rule::Isolated
        };
        colour.insert(start, (1, rule));
        let (mut cur, mut c) = (start, 1u8);
        while let Some(&prev) = inverse.get(&cur) {
            c = 3 - c;
            colour.insert(prev, (c, Rule::ChainOpposite));
            cur = prev;
        }
    }

    // What remains lies on cycles.
    let mut left: BTreeSet<usize> = (1..=n).filter(|k| !colour.contains_key(k)).collect();
    while let Some(&first) = left.iter().next() {
        let (mut cur, mut c) = (first, 1u8);
        loop {
            left.remove(&cur);
            colour.insert(cur, (c, Rule::CycleOpposite));
            let next = cm.iota[&cur];
            if next == first {
                if c == 1 {
                    return Err(Error::UnresolvableCluster { mode: first });
                }
                break;
            }
            cur = next;
            c = 3 - c;
        }
    }

    let mut p = Profiles {
        h1: vec![0.0; n],
        h2: vec![0.0; n],
        assignment_log: Vec::with_capacity(n),
    };
    for (&mode, &(profile, rule)) in &colour {
        let v = 1.0 / mode as f64;
        if profile == 1 {
            p.h1[mode - 1] = v;
        } else {
            p.h2[mode - 1] = v;
        }
        p.assignment_log.push(Assignment { mode, rule, profile });
    }
    debug_assert!(p.split_violations(cm).is_empty());
    Ok(p)
}

/// Indices driven by input 1 or 2: `{±n : hⁱₙ ≠ 0}`.
pub fn subset_indices(p: &Profiles, input: u8) -> Vec<i64> {
    let mut out = Vec::new();
    for n in 1..=p.n_modes() {
        if p.coeff(input, n) != 0.0 {
            out.push(n as i64);
            out.push(-(n as i64));
        }
    }
    out
}
