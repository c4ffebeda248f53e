//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use beamctl::modal::eigenfunction;
use beamctl::numerics::{gauss_legendre, C64};
use rand::Rng;

/// Composite Gauss–Legendre rule on `[a, b]`.
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        Rule { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> C64>(&self, f: F) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| f(*x) * *w).sum()
    }

    pub fn integrate_real<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| f(*x) * w).sum()
    }
}

/// Smooth random signal `Σ a_j cos(jπt/T) + b_j sin(jπt/T)`.
#[derive(Debug, Clone)]
pub struct Signal {
    pub t_final: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Signal {
    pub fn random(rng: &mut impl Rng, t_final: f64, terms: usize) -> Self {
        Signal {
            t_final,
            cos: (0..terms).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            sin: (0..terms).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = std::f64::consts::PI / self.t_final;
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(j, (a, b))| {
                let arg = j as f64 * w * t;
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    }

    pub fn sample(&self, intervals: usize) -> Vec<f64> {
        let dt = self.t_final / intervals as f64;
        (0..=intervals).map(|i| self.eval(i as f64 * dt)).collect()
    }
}

/// Classical RK4 for `a'' + b a' + c a = f(t)` from `(a0, v0)`.
pub fn rk4(b: f64, c: f64, a0: f64, v0: f64, f: impl Fn(f64) -> f64, t_final: f64, steps: usize) -> (f64, f64) {
    let h = t_final / steps as f64;
    let rhs = |t: f64, a: f64, v: f64| (v, f(t) - b * v - c * a);
    let (mut a, mut v) = (a0, v0);
    for i in 0..steps {
        let t = i as f64 * h;
        let (k1a, k1v) = rhs(t, a, v);
        let (k2a, k2v) = rhs(t + h / 2.0, a + h / 2.0 * k1a, v + h / 2.0 * k1v);
        let (k3a, k3v) = rhs(t + h / 2.0, a + h / 2.0 * k2a, v + h / 2.0 * k2v);
        let (k4a, k4v) = rhs(t + h, a + h * k3a, v + h * k3v);
        a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (a, v)
}

/// `∫ₐᵇ φ_n φ_m` by quadrature.
pub fn restricted_inner_quad(n: usize, m: usize, rule: &Rule) -> f64 {
    rule.integrate_real(|x| eigenfunction(n, x) * eigenfunction(m, x))
}
