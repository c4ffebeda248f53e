//! Small numerical kernels shared by the solver modules: stable complex
//! exponentials, exponential moments, uniform-grid and Gauss rules, an
//! adaptive Simpson integrator, the Hurwitz zeta function and a linear fit.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// `exp(z) - 1` without cancellation near the origin.
pub fn expm1(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    let ex = x.exp();
    let s = (0.5 * y).sin();
    C64::new(ex * (-2.0 * s * s) + x.exp_m1(), ex * y.sin())
}

/// `(exp(z) - 1) / z`, equal to 1 at the origin.
pub fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-5 {
        C64::new(1.0, 0.0) + z * (0.5 + z / 6.0)
    } else {
        expm1(z) / z
    }
}

/// `∫₀ᵀ tᵖ e^{iμt} dt` for `p ∈ {0, 1, 2}`.
///
/// A power series is used when `|μT| < 1`; otherwise the closed forms
/// obtained by repeated integration by parts.
pub fn exp_moment(p: u32, mu: C64, t: f64) -> C64 {
    assert!(p <= 2, "exp_moment supports p <= 2");
    let x = I * mu * t;
    if x.norm() < 1.0 {
        let mut sum = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for k in 0..40u32 {
            sum += term / f64::from(k + p + 1);
            term = term * x / f64::from(k + 1);
            if term.norm() < 1e-18 {
                break;
            }
        }
        return sum * t.powi(p as i32 + 1);
    }
    let e = x.exp();
    let imu = I * mu;
    let m0 = (e - 1.0) / imu;
    if p == 0 {
        return m0;
    }
    let m1 = (e * t - m0) / imu;
    if p == 1 {
        return m1;
    }
    (e * (t * t) - m1 * 2.0) / imu
}

/// Composite Simpson rule on equally spaced samples.
///
/// An odd number of intervals is closed with a 3/8 panel at the end.
pub fn simpson<T>(values: &[T], h: f64) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let n = values.len();
    match n {
        0 | 1 => return T::default(),
        2 => return (values[0] + values[1]) * (0.5 * h),
        3 => return (values[0] + values[1] * 4.0 + values[2]) * (h / 3.0),
        _ => {}
    }
    let intervals = n - 1;
    let (even_end, tail) = if intervals % 2 == 0 {
        (n - 1, None)
    } else {
        (n - 4, Some(n - 4))
    };
    let mut acc = values[0] + values[even_end];
    for (i, v) in values.iter().enumerate().take(even_end).skip(1) {
        acc = acc + *v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let mut total = acc * (h / 3.0);
    if let Some(s) = tail {
        let panel = values[s] + values[s + 1] * 3.0 + values[s + 2] * 3.0 + values[s + 3];
        total = total + panel * (3.0 * h / 8.0);
    }
    total
}

/// Richardson-extrapolated Simpson (composite Boole) when the interval
/// count is a multiple of four, plain Simpson otherwise.
pub fn uniform_integral<T>(values: &[T], h: f64) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let intervals = values.len().saturating_sub(1);
    if intervals < 4 || intervals % 4 != 0 {
        return simpson(values, h);
    }
    let mut acc = (values[0] + values[intervals]) * 7.0;
    for (i, v) in values.iter().enumerate().take(intervals).skip(1) {
        let w = match i % 4 {
            0 => 14.0,
            2 => 12.0,
            _ => 32.0,
        };
        acc = acc + *v * w;
    }
    acc * (2.0 * h / 45.0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre quadrature over `panels` equal sub-intervals.
pub fn gauss_integral<F>(f: F, a: f64, b: f64, panels: usize, order: usize) -> C64
where
    F: Fn(f64) -> C64,
{
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + 0.5 * width;
        for (xi, wi) in x.iter().zip(&w) {
            total += f(mid + 0.5 * width * xi) * (wi * 0.5 * width);
        }
    }
    total
}

/// Adaptive Simpson integration of a real function.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

// Even Bernoulli numbers B_2 .. B_16.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `ζ(s, q) = Σ_{n≥0} (n+q)^{-s}` for real `s > 1`, `q > 0`,
/// by Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(s > 1.0 && q > 0.0, "hurwitz_zeta needs s > 1, q > 0");
    const DIRECT: usize = 24;
    let mut sum = 0.0;
    for n in 0..DIRECT {
        sum += (q + n as f64).powf(-s);
    }
    let x = q + DIRECT as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Rising factorial s(s+1)...(s+2k-2) / (2k)! times x^{-s-2k+1}.
    let mut factor = s / x.powf(s + 1.0);
    let mut fact = 2.0;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * factor;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let kk = (k + 1) as f64;
        factor *= (s + 2.0 * kk - 1.0) * (s + 2.0 * kk) / (x * x);
        fact *= (2.0 * kk + 1.0) * (2.0 * kk + 2.0);
    }
    sum
}

/// Riemann zeta for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Sum of squared residuals.
    pub sse: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    LinearFit {
        intercept,
        slope,
        sse,
    }
}

/// `log(Σ exp(v))` without overflow.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
