//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library's transforms, products or multipliers: fields are evaluated
//! by direct trigonometric sums and all right-hand sides are rebuilt from
//! the local (momentum) forms of the equations.
#![allow(dead_code)]

use std::f64::consts::PI;

use gevreych::{SpectralField, SystemState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Coeffs = Vec<Complex64>;

pub fn k_of(c: &Coeffs) -> i64 {
    (c.len() as i64 - 1) / 2
}

pub fn at(c: &Coeffs, k: i64) -> Complex64 {
    let n = k_of(c);
    if k.abs() > n {
        Complex64::new(0.0, 0.0)
    } else {
        c[(k + n) as usize]
    }
}

/// `Σ_{j+l=k} a_j b_l` over every pair, truncated to `|k| ≤ K`.
pub fn convolution(a: &Coeffs, b: &Coeffs) -> Coeffs {
    let n = k_of(a);
    let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
    for j in -n..=n {
        for l in -n..=n {
            let k = j + l;
            if k.abs() <= n {
                out[(k + n) as usize] += at(a, j) * at(b, l);
            }
        }
    }
    out
}

/// Direct evaluation at `x_j = j·2π/m`.
pub fn evaluate(c: &Coeffs, m: usize) -> Vec<f64> {
    let n = k_of(c);
    (0..m)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / m as f64;
            (-n..=n).map(|k| (at(c, k) * Complex64::from_polar(1.0, k as f64 * x)).re).sum()
        })
        .collect()
}

/// Discrete projection onto `|k| ≤ n` from `m` equispaced samples.
pub fn project(vals: &[f64], n: i64) -> Coeffs {
    let m = vals.len();
    (-n..=n)
        .map(|k| {
            vals.iter()
                .enumerate()
                .map(|(j, &v)| Complex64::from_polar(v / m as f64, -2.0 * PI * k as f64 * j as f64 / m as f64))
                .sum()
        })
        .collect()
}

/// Pointwise product on `3K+1` points, which is alias-free for `|k| ≤ K`.
pub fn physical_product(a: &Coeffs, b: &Coeffs) -> Coeffs {
    let n = k_of(a);
    let m = 3 * n as usize + 1;
    let (va, vb) = (evaluate(a, m), evaluate(b, m));
    project(&va.iter().zip(&vb).map(|(x, y)| x * y).collect::<Vec<_>>(), n)
}

pub fn symbol(c: &Coeffs, s: impl Fn(f64) -> Complex64) -> Coeffs {
    let n = k_of(c);
    (-n..=n).map(|k| at(c, k) * s(k as f64)).collect()
}

pub fn dx(c: &Coeffs) -> Coeffs {
    symbol(c, |k| Complex64::new(0.0, k))
}

/// `(1 − ∂xx)^{-1}`
pub fn inv1(c: &Coeffs) -> Coeffs {
    symbol(c, |k| Complex64::new(1.0 / (1.0 + k * k), 0.0))
}

/// `(4 − ∂xx)^{-1}`
pub fn inv4(c: &Coeffs) -> Coeffs {
    symbol(c, |k| Complex64::new(1.0 / (4.0 + k * k), 0.0))
}

/// `1 − ∂xx`
pub fn helmholtz(c: &Coeffs) -> Coeffs {
    symbol(c, |k| Complex64::new(1.0 + k * k, 0.0))
}

pub fn lin(terms: &[(f64, &Coeffs)]) -> Coeffs {
    let len = terms[0].1.len();
    (0..len).map(|i| terms.iter().map(|(a, c)| c[i] * *a).sum()).collect()
}

pub fn mul(a: &Coeffs, b: &Coeffs) -> Coeffs {
    convolution(a, b)
}

/// CH through the momentum `m = u − u_xx`: `u_t = −(1−∂xx)^{-1}(u m_x + 2u_x m)`.
pub fn ch_oracle(u: &Coeffs) -> Coeffs {
    two_ch_oracle(u, &vec![Complex64::new(0.0, 0.0); u.len()], 1.0).0
}

/// `m_t + u m_x + 2u_x m + kρρ_x = 0`, `ρ_t = −(uρ)_x`.
pub fn two_ch_oracle(u: &Coeffs, rho: &Coeffs, k: f64) -> (Coeffs, Coeffs) {
    let m = helmholtz(u);
    let flux = lin(&[(1.0, &mul(u, &dx(&m))), (2.0, &mul(&dx(u), &m)), (k, &mul(rho, &dx(rho)))]);
    let ut = lin(&[(-1.0, &inv1(&flux))]);
    let rt = lin(&[(-1.0, &dx(&mul(u, rho)))]);
    (ut, rt)
}

/// With `ρ = (1−∂xx)γ`: `m_t + u m_x + 2u_x m + kργ_x = 0`,
/// `γ_t = −(1−∂xx)^{-1}(uρ)_x`.
pub fn m2ch_oracle(u: &Coeffs, gamma: &Coeffs, k: f64) -> (Coeffs, Coeffs) {
    let m = helmholtz(u);
    let rho = helmholtz(gamma);
    let flux = lin(&[(1.0, &mul(u, &dx(&m))), (2.0, &mul(&dx(u), &m)), (k, &mul(&rho, &dx(gamma)))]);
    let ut = lin(&[(-1.0, &inv1(&flux))]);
    let gt = lin(&[(-1.0, &inv1(&dx(&mul(u, &rho))))]);
    (ut, gt)
}

/// The three-component system in its original form with `a = (1−∂xx)^{-1}u`,
/// `c = (1−∂xx)^{-1}w` and `b` solved from
/// `v = ½(b_xx − 4b + a_xx c_x − c_xx a_x + 3a_x c − 3a c_x)`.
pub fn three_ch_oracle(u: &Coeffs, v: &Coeffs, w: &Coeffs) -> (Coeffs, Coeffs, Coeffs) {
    let a = inv1(u);
    let c = inv1(w);
    let (ax, cx) = (dx(&a), dx(&c));
    let (axx, cxx) = (dx(&ax), dx(&cx));
    let n = lin(&[(1.0, &mul(&axx, &cx)), (-1.0, &mul(&cxx, &ax)), (3.0, &mul(&ax, &c)), (-3.0, &mul(&a, &cx))]);
    // b_xx − 4b = 2v − N  ⇒  b = (4 − ∂xx)^{-1}(N − 2v)
    let b = inv4(&lin(&[(1.0, &n), (-2.0, v)]));
    let bx = dx(&b);
    let q = lin(&[(1.0, &mul(&ax, &cx)), (-1.0, &mul(&a, &c))]);
    let ut = lin(&[(-1.0, &mul(v, &ax)), (1.0, &mul(&dx(u), &b)), (1.5, &mul(u, &bx)), (-1.5, &mul(u, &q))]);
    let vt = lin(&[(2.0, &mul(v, &bx)), (1.0, &mul(&dx(v), &b))]);
    let wt = lin(&[(-1.0, &mul(v, &cx)), (1.0, &mul(&dx(w), &b)), (1.5, &mul(w, &bx)), (1.5, &mul(w, &q))]);
    (ut, vt, wt)
}

/// `Σ (1+k²)^s e^{2δ|k|^{1/σ}} |ĉ_k|²`, square-rooted, on the 2π torus.
pub fn gevrey_norm(c: &Coeffs, sigma: f64, delta: f64, s: f64) -> f64 {
    let n = k_of(c);
    (-n..=n)
        .map(|k| {
            let x = k.abs() as f64;
            (1.0 + x * x).powf(s) * (2.0 * delta * x.powf(1.0 / sigma)).exp() * at(c, k).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Hermitian coefficients with `|ĉ_k| ≤ amp · e^{−rate |k|}`.
pub fn random_coeffs(n: usize, amp: f64, rate: f64, rng: &mut impl Rng) -> Coeffs {
    let n = n as i64;
    let mut c = vec![Complex64::new(0.0, 0.0); (2 * n + 1) as usize];
    c[n as usize] = Complex64::new(amp * rng.gen_range(-1.0..1.0), 0.0);
    for k in 1..=n {
        let mag = amp * rng.gen::<f64>() * (-rate * k as f64).exp();
        let z = Complex64::from_polar(mag, rng.gen_range(0.0..2.0 * PI));
        c[(n + k) as usize] = z;
        c[(n - k) as usize] = z.conj();
    }
    c
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn field(c: Coeffs) -> SpectralField {
    SpectralField::from_coeffs(c, 2.0 * PI).unwrap()
}

pub fn coeffs(f: &SpectralField) -> Coeffs {
    f.coeffs().to_vec()
}

pub fn max_diff(a: &Coeffs, b: &Coeffs) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &Coeffs) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn component(s: &SystemState, i: usize) -> Coeffs {
    coeffs(s.component(i))
}

/// Closed-form lifespan `min{1/(2^{2σ+4}L), (2^σ−1)R/((2^σ−1)2^{2σ+3}LR + M)}`.
pub fn t0_formula(l: f64, m: f64, r: f64, sigma: f64) -> f64 {
    let q = 2f64.powf(sigma) - 1.0;
    (1.0 / (2f64.powf(2.0 * sigma + 4.0) * l)).min(q * r / (q * 2f64.powf(2.0 * sigma + 3.0) * l * r + m))
}
