//! Independent numerical oracles shared by the integration tests. Nothing
//! here calls into the crate's numerics except through the values under test.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use skewt_inverse::model::{HierarchicalState, ObservedData, PriorSpec};
use skewt_inverse::{LinearForwardModel, SeededRng};
use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(&f, a, b, tol, 40)
}

/// Integral over the whole real line via `x = t / (1 - t^2)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let g = |t: f64| {
        let s = 1.0 - t * t;
        if s <= 0.0 {
            return 0.0;
        }
        let x = t / s;
        let v = f(x) * (1.0 + t * t) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // Split at zero so the peak is never straddled by a single panel.
    integrate(g, -1.0, 0.0, 0.5 * tol) + integrate(g, 0.0, 1.0, 0.5 * tol)
}

/// Tabulated CDF of a density on a uniform grid, by per-cell quadrature.
pub struct NumericCdf {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl NumericCdf {
    pub fn new<F: Fn(f64) -> f64>(pdf: F, lo: f64, hi: f64, cells: usize) -> Self {
        let h = (hi - lo) / cells as f64;
        let left_tail = integrate_real_line(|x| if x < lo { pdf(x) } else { 0.0 }, 1e-12);
        let mut x = vec![lo];
        let mut cdf = vec![left_tail];
        for k in 0..cells {
            let a = lo + k as f64 * h;
            let (v, _) = gk15(&pdf, a, a + h);
            x.push(a + h);
            cdf.push(cdf[k] + v);
        }
        NumericCdf { x, cdf }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.x[0] {
            return self.cdf[0];
        }
        let last = self.x.len() - 1;
        if t >= self.x[last] {
            return self.cdf[last];
        }
        let h = self.x[1] - self.x[0];
        let k = ((t - self.x[0]) / h) as usize;
        let k = k.min(last - 1);
        let f = (t - self.x[k]) / h;
        self.cdf[k] + f * (self.cdf[k + 1] - self.cdf[k])
    }

    /// Draw by inverting the table at a uniform variate.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random_range(self.cdf[0]..*self.cdf.last().unwrap());
        let k = self.cdf.partition_point(|c| *c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.x[k - 1] + f * (self.x[k] - self.x[k - 1])
    }
}

/// `sup |F_n - F|` of a sample against a reference CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Index-by-index matrix-vector product.
pub fn naive_matvec(a: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[i] += a[(i, j)] * u[j];
        }
    }
    out
}

/// Joint log-density coded term by term from the hierarchical model.
pub fn joint_oracle(s: &HierarchicalState, data: &ObservedData, spec: &PriorSpec) -> f64 {
    let a = data.operator.matrix();
    let au = naive_matvec(a, &s.u);
    let mut total = 0.0;
    for i in 0..data.n_obs() {
        let e = data.y[i] - au[i];
        let var = s.tau / s.w[i];
        total += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (e - s.delta * s.z[i]).powi(2) / (2.0 * var);
        // Half-normal with variance 1/w.
        total += (2.0f64).ln() - 0.5 * (2.0 * std::f64::consts::PI / s.w[i]).ln() - 0.5 * s.w[i] * s.z[i].powi(2);
        let h = s.nu / 2.0;
        total += h * h.ln() - ln_gamma(h) + (h - 1.0) * s.w[i].ln() - h * s.w[i];
    }
    let d = s.u.len();
    let p0 = &spec.u_precision;
    let diff = DVector::from_iterator(d, s.u.iter().zip(&spec.u_mean).map(|(x, m)| x - m));
    let logdet = p0.clone().lu().determinant().ln();
    total += 0.5 * logdet - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * (p0 * &diff).dot(&diff);
    let sd = spec.delta_sd;
    total += -0.5 * (2.0 * std::f64::consts::PI * sd * sd).ln() - s.delta.powi(2) / (2.0 * sd * sd);
    let (ta, tb) = (spec.tau_shape, spec.tau_rate);
    total += ta * tb.ln() - ln_gamma(ta) - (ta + 1.0) * s.tau.ln() - tb / s.tau;
    total += spec.nu_rate.ln() - spec.nu_rate * (s.nu - 2.0);
    total
}

/// Random valid problem: operator `n x d`, data, prior and a state.
pub fn random_problem(rng: &mut SeededRng, n: usize, d: usize) -> (ObservedData, PriorSpec, HierarchicalState) {
    let a = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
    let op = LinearForwardModel::new(a).unwrap();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let data = ObservedData::new(y, op).unwrap();
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
    let precision = &b * b.transpose() + DMatrix::identity(d, d) * 0.5;
    let spec = PriorSpec::new(
        (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        precision,
        rng.random_range(0.5..5.0),
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..3.0),
        rng.random_range(0.2..1.0),
    )
    .unwrap();
    let state = random_state(rng, n, d);
    (data, spec, state)
}

pub fn random_state(rng: &mut SeededRng, n: usize, d: usize) -> HierarchicalState {
    HierarchicalState {
        u: (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
        z: (0..n).map(|_| rng.random_range(0.0..2.5)).collect(),
        w: (0..n).map(|_| rng.random_range(0.2..3.0)).collect(),
        delta: rng.random_range(-2.0..2.0),
        tau: rng.random_range(0.2..3.0),
        nu: rng.random_range(2.1..40.0),
    }
}

/// Exact posterior mean of `u` under Gaussian noise with unknown variance:
/// `E[m(tau)]` over `p(tau | y)`, with `m(tau)` the conjugate mean for fixed
/// `tau`. The marginal `p(tau | y)` is evaluated on a log grid.
pub fn gaussian_posterior_mean(data: &ObservedData, spec: &PriorSpec) -> Vec<f64> {
    let a = data.operator.matrix();
    let (n, d) = a.shape();
    let p0 = &spec.u_precision;
    let mu0 = DVector::from_column_slice(&spec.u_mean);
    let y = DVector::from_column_slice(&data.y);
    let p0_inv = p0.clone().try_inverse().unwrap();
    let s = a * &p0_inv * a.transpose();
    let eig = nalgebra::SymmetricEigen::new(s);
    let r = eig.eigenvectors.transpose() * (&y - a * &mu0);

    let log_marginal = |tau: f64| -> f64 {
        let mut v = 0.0;
        for i in 0..n {
            let lam = eig.eigenvalues[i].max(0.0) + tau;
            v += -0.5 * lam.ln() - 0.5 * r[i] * r[i] / lam;
        }
        let (ta, tb) = (spec.tau_shape, spec.tau_rate);
        v + ta * tb.ln() - ln_gamma(ta) - (ta + 1.0) * tau.ln() - tb / tau
    };
    let cond_mean = |tau: f64| -> DVector<f64> {
        let q = p0 + a.transpose() * a / tau;
        let rhs = p0 * &mu0 + a.transpose() * &y / tau;
        q.cholesky().unwrap().solve(&rhs)
    };

    // Locate the mode on a coarse grid, then integrate finely around it.
    let coarse: Vec<f64> = (0..=400).map(|k| -20.0 + 0.1 * k as f64).collect();
    let mode = coarse
        .iter()
        .copied()
        .max_by(|x, y| (log_marginal(x.exp()) + x).total_cmp(&(log_marginal(y.exp()) + y)))
        .unwrap();
    let grid: Vec<f64> = (0..=4000).map(|k| mode - 4.0 + 8.0 * k as f64 / 4000.0).collect();
    // Jacobian of tau = e^s.
    let logw: Vec<f64> = grid.iter().map(|s| log_marginal(s.exp()) + s).collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut acc = DVector::zeros(d);
    for (k, s) in grid.iter().enumerate() {
        let trap = if k == 0 || k == grid.len() - 1 { 0.5 } else { 1.0 };
        let wgt = trap * (logw[k] - max).exp();
        total += wgt;
        acc += cond_mean(s.exp()) * wgt;
    }
    (acc / total).iter().copied().collect()
}

/// Largest singular value by power iteration on `A^T A`.
pub fn sigma_max(a: &DMatrix<f64>) -> f64 {
    let ata = a.transpose() * a;
    let mut v = DVector::from_element(a.ncols(), 1.0).normalize();
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let next = &ata * &v;
        let new_lambda = next.norm();
        v = next / new_lambda;
        if (new_lambda - lambda).abs() <= 1e-14 * new_lambda {
            break;
        }
        lambda = new_lambda;
    }
    lambda.sqrt()
}

/// Smallest singular value by inverse power iteration (repeated solves).
pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    let ata = a.transpose() * a;
    let lu = ata.lu();
    let mut v = DVector::from_element(a.ncols(), 1.0).normalize();
    let mut mu = 0.0;
    for _ in 0..5000 {
        let next = lu.solve(&v).unwrap();
        let new_mu = next.norm();
        v = next / new_mu;
        if (new_mu - mu).abs() <= 1e-12 * new_mu {
            break;
        }
        mu = new_mu;
    }
    (1.0 / mu).sqrt()
}

pub fn iid_normal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = skewt_inverse::seeded_rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut rng = skewt_inverse::seeded_rng(seed);
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = phi * x + e;
            x
        })
        .collect()
}

/// Mixing draws for tests that need a valid `w` at a given `nu`.
pub fn gamma_draws(rng: &mut SeededRng, n: usize, nu: f64) -> Vec<f64> {
    let g = Gamma::new(nu / 2.0, 2.0 / nu).unwrap();
    (0..n).map(|_| g.sample(rng)).collect()
}
