use super::state::{KSign, SystemState, SystemTag};
use crate::error::Result;
use crate::gevrey::InequalityReport;
use crate::spectral::{Multiplier::*, SpectralField};

/// Absolute tolerance of [`check_3ch_consistency`], scaled by the size of
/// the right-hand side.
pub const CONSISTENCY_TOL: f64 = 1e-10;

/// Direct convolution: the right-hand sides feed Gevrey-weighted norms.
fn f(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.convolve(b)
}

/// `−uP₃u − P₁₃[u² + ½(P₃u)² + extra]`
fn ch_part(u: &SpectralField, extra: Option<&SpectralField>) -> Result<SpectralField> {
    let ux = u.apply_multiplier(P3);
    let mut inner = f(u, u)?.axpy(0.5, &f(&ux, &ux)?)?;
    if let Some(e) = extra {
        inner = inner.add(e)?;
    }
    f(u, &ux)?.scale(-1.0).sub(&inner.apply_multiplier(P13))
}

pub fn rhs_ch(state: &SystemState) -> Result<SystemState> {
    state.expect_tag(SystemTag::Ch)?;
    Ok(state.with_components(vec![ch_part(state.component(0), None)?]))
}

/// `F₁ = −P₃(u²/2) − P₁₃[u² + ½(P₃u)² + (k/2)ρ²]`, `F₂ = −P₃(uρ)`.
pub fn rhs_2ch(state: &SystemState, k: KSign) -> Result<SystemState> {
    state.expect_tag(SystemTag::TwoCh)?;
    let (u, rho) = (state.component(0), state.component(1));
    let ux = u.apply_multiplier(P3);
    let uu = f(u, u)?;
    let inner = uu.axpy(0.5, &f(&ux, &ux)?)?.axpy(0.5 * k.value(), &f(rho, rho)?)?;
    let f1 = uu.apply_multiplier(P3).scale(-0.5).sub(&inner.apply_multiplier(P13))?;
    let f2 = f(u, rho)?.apply_multiplier(P3).scale(-1.0);
    Ok(state.with_components(vec![f1, f2]))
}

/// `u`-equation as in CH plus `(k/2)(γ² − γ_x²)` under `P₁₃`;
/// `γ_t = −uγ_x − P₁((u_xγ_x)_x + u_xγ)`.
pub fn rhs_m2ch(state: &SystemState, k: KSign) -> Result<SystemState> {
    state.expect_tag(SystemTag::M2Ch)?;
    let (u, g) = (state.component(0), state.component(1));
    let gx = g.apply_multiplier(P3);
    let ux = u.apply_multiplier(P3);
    let extra = f(g, g)?.sub(&f(&gx, &gx)?)?.scale(0.5 * k.value());
    let fu = ch_part(u, Some(&extra))?;
    let inner = f(&ux, &gx)?.apply_multiplier(P3).add(&f(&ux, g)?)?;
    let fg = f(u, &gx)?.scale(-1.0).sub(&inner.apply_multiplier(P1))?;
    Ok(state.with_components(vec![fu, fg]))
}

/// `B(u,w) = P₂(w·P₁₃u − u·P₁₃w) + 2P₂(P₁₃u·P₁w − P₁u·P₁₃w)`
pub fn b_operator(u: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    let (u13, w13) = (u.apply_multiplier(P13), w.apply_multiplier(P13));
    let (u1, w1) = (u.apply_multiplier(P1), w.apply_multiplier(P1));
    let first = f(w, &u13)?.sub(&f(u, &w13)?)?;
    let second = f(&u13, &w1)?.sub(&f(&u1, &w13)?)?;
    Ok(first.axpy(2.0, &second)?.apply_multiplier(P2))
}

/// `b = B(u,w) − 2P₂v`
pub fn b_field(u: &SpectralField, w: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    b_operator(u, w)?.axpy(-2.0, &v.apply_multiplier(P2))
}

pub fn rhs_3ch(state: &SystemState) -> Result<SystemState> {
    state.expect_tag(SystemTag::ThreeCh)?;
    let (u, v, w) = (state.component(0), state.component(1), state.component(2));
    let bb = b_operator(u, w)?;
    let p2v = v.apply_multiplier(P2);
    let b = bb.axpy(-2.0, &p2v)?;
    let bx = bb.apply_multiplier(P3).axpy(-2.0, &v.apply_multiplier(P23))?;
    let (u13, w13) = (u.apply_multiplier(P13), w.apply_multiplier(P13));
    let mix = f(&u13, &w13)?.sub(&f(&u.apply_multiplier(P1), &w.apply_multiplier(P1))?)?;

    let f1 = f(v, &u13)?
        .scale(-1.0)
        .add(&f(&u.apply_multiplier(P3), &b)?)?
        .axpy(1.5, &f(u, &bx)?)?
        .axpy(-1.5, &f(u, &mix)?)?;
    let vx = v.apply_multiplier(P3);
    let f2 = f(v, &bb.apply_multiplier(P3))?
        .scale(2.0)
        .axpy(-4.0, &f(v, &v.apply_multiplier(P23))?)?
        .add(&f(&vx, &bb)?)?
        .axpy(-2.0, &f(&vx, &p2v)?)?;
    let f3 = f(v, &w13)?
        .scale(-1.0)
        .add(&f(&w.apply_multiplier(P3), &b)?)?
        .axpy(1.5, &f(w, &bx)?)?
        .axpy(1.5, &f(w, &mix)?)?;
    Ok(state.with_components(vec![f1, f2, f3]))
}

pub fn rhs(state: &SystemState, k: KSign) -> Result<SystemState> {
    match state.tag() {
        SystemTag::Ch => rhs_ch(state),
        SystemTag::TwoCh => rhs_2ch(state, k),
        SystemTag::M2Ch => rhs_m2ch(state, k),
        SystemTag::ThreeCh => rhs_3ch(state),
    }
}

/// Evaluates the three-component system in its original local form, with
/// `a = P₁u`, `c = P₁w` and `b` solved from `v = ½(b_xx − 4b + N)`, and
/// compares against `rhs_out`. The discrepancy also includes the gap between
/// that `b` and [`b_field`].
pub fn check_3ch_consistency(state: &SystemState, rhs_out: &SystemState) -> Result<InequalityReport> {
    state.expect_tag(SystemTag::ThreeCh)?;
    rhs_out.expect_tag(SystemTag::ThreeCh)?;
    let (u, v, w) = (state.component(0), state.component(1), state.component(2));
    let a = u.apply_multiplier(P1);
    let c = w.apply_multiplier(P1);
    let (ax, cx) = (a.apply_multiplier(P3), c.apply_multiplier(P3));
    let (axx, cxx) = (ax.apply_multiplier(P3), cx.apply_multiplier(P3));

    // N = a_xx c_x − c_xx a_x + 3a_x c − 3a c_x
    let n = f(&axx, &cx)?.sub(&f(&cxx, &ax)?)?.axpy(3.0, &f(&ax, &c)?)?.axpy(-3.0, &f(&a, &cx)?)?;
    let b = n.axpy(-2.0, v)?.apply_multiplier(P2);
    let b_gap = b.max_coeff_diff(&b_field(u, w, v)?);
    let bx = b.apply_multiplier(P3);
    let ac = f(&ax, &cx)?.sub(&f(&a, &c)?)?;

    let ut = f(v, &ax)?
        .scale(-1.0)
        .add(&f(&u.apply_multiplier(P3), &b)?)?
        .axpy(1.5, &f(u, &bx)?)?
        .axpy(-1.5, &f(u, &ac)?)?;
    let vt = f(v, &bx)?.scale(2.0).add(&f(&v.apply_multiplier(P3), &b)?)?;
    let wt =
        f(v, &cx)?.scale(-1.0).add(&f(&w.apply_multiplier(P3), &b)?)?.axpy(1.5, &f(w, &bx)?)?.axpy(1.5, &f(w, &ac)?)?;

    let local = state.with_components(vec![ut, vt, wt]);
    let gap = local.max_coeff_diff(rhs_out).max(b_gap);
    let tol = CONSISTENCY_TOL * rhs_out.max_abs_coeff().max(1.0);
    Ok(InequalityReport::new("3ch_consistency", gap, tol, vec![("b_gap", b_gap)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gevrey::{random_gevrey_field, GevreyParams};

    fn close(a: &SpectralField, b: &SpectralField, tol: f64) {
        let d = a.max_coeff_diff(b);
        assert!(d < tol, "diff {d}");
    }

    #[test]
    fn ch_hand_values() {
        let n = 8;
        let out = rhs_ch(&SystemState::ch(SpectralField::cosine(1, 1.0, n), 2.0)).unwrap();
        close(out.component(0), &SpectralField::sine(2, 0.6, n), 1e-14);
        let c = rhs_ch(&SystemState::ch(SpectralField::constant(3.0, n), 2.0)).unwrap();
        assert!(c.max_abs_coeff() < 1e-14);
        let small = rhs_ch(&SystemState::ch(SpectralField::cosine(1, 0.1, n), 2.0)).unwrap();
        close(small.component(0), &SpectralField::sine(2, 0.006, n), 1e-16);
    }

    #[test]
    fn two_ch_hand_values() {
        let n = 8;
        let z = SystemState::two_ch(SpectralField::cosine(1, 1.0, n), SpectralField::sine(1, 1.0, n), 2.0).unwrap();
        let out = rhs_2ch(&z, KSign::Plus).unwrap();
        close(out.component(0), &SpectralField::sine(2, 0.5, n), 1e-14);
        close(out.component(1), &SpectralField::cosine(2, -1.0, n), 1e-14);
        assert_eq!(out.component(1).coeff(0).norm(), 0.0);
        // k = -1 flips the ρ² contribution: 0.6 + 0.1
        let flipped = rhs_2ch(&z, KSign::Minus).unwrap();
        close(flipped.component(0), &SpectralField::sine(2, 0.7, n), 1e-14);
    }

    #[test]
    fn m2ch_hand_values() {
        let n = 8;
        let z = SystemState::m2ch(SpectralField::zeros(n), SpectralField::cosine(1, 1.0, n), 2.0).unwrap();
        let out = rhs_m2ch(&z, KSign::Plus).unwrap();
        close(out.component(0), &SpectralField::sine(2, 0.2, n), 1e-14);
        assert!(out.component(1).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn reductions_to_ch() {
        let p = GevreyParams::new(1.0, 0.5, 2.0).unwrap();
        let u = random_gevrey_field(p, 0.5, 16, 3);
        let zero = SpectralField::zeros(16);
        let ch = rhs_ch(&SystemState::ch(u.clone(), 2.0)).unwrap();
        let two = rhs_2ch(&SystemState::two_ch(u.clone(), zero.clone(), 2.0).unwrap(), KSign::Plus).unwrap();
        let m2 = rhs_m2ch(&SystemState::m2ch(u.clone(), zero, 2.0).unwrap(), KSign::Minus).unwrap();
        close(two.component(0), ch.component(0), 1e-13);
        close(m2.component(0), ch.component(0), 1e-13);
        assert!(two.component(1).is_zero());
    }

    #[test]
    fn b_field_special_cases() {
        let p = GevreyParams::new(1.0, 0.5, 2.0).unwrap();
        let u = random_gevrey_field(p, 0.5, 16, 5);
        let v = random_gevrey_field(p, 0.5, 16, 6);
        close(&b_field(&u, &u, &v).unwrap(), &v.apply_multiplier(P2).scale(-2.0), 1e-14);
        let zero = SpectralField::zeros(16);
        assert!(b_field(&SpectralField::cosine(1, 1.0, 16), &zero, &zero).unwrap().max_abs_coeff() < 1e-16);
    }

    #[test]
    fn three_ch_vanishing_and_consistency() {
        let n = 16;
        let zero = SpectralField::zeros(n);
        let s = SystemState::three_ch(SpectralField::cosine(1, 1.0, n), zero.clone(), zero, 1.0).unwrap();
        assert!(rhs_3ch(&s).unwrap().max_abs_coeff() < 1e-15);

        let p = GevreyParams::new(1.0, 0.5, 1.0).unwrap();
        for seed in 0..5 {
            let st = SystemState::three_ch(
                random_gevrey_field(p, 0.3, n, 3 * seed),
                random_gevrey_field(p, 0.3, n, 3 * seed + 1),
                random_gevrey_field(p, 0.3, n, 3 * seed + 2),
                1.0,
            )
            .unwrap();
            let out = rhs_3ch(&st).unwrap();
            let rep = check_3ch_consistency(&st, &out).unwrap();
            assert!(rep.holds, "{rep:?}");
            assert!(rep.lhs < 1e-12);
            for c in out.components() {
                assert!(c.is_hermitian());
            }
        }
    }

    #[test]
    fn wrong_tag_rejected() {
        let s = SystemState::ch(SpectralField::cosine(1, 1.0, 4), 2.0);
        assert!(rhs_2ch(&s, KSign::Plus).is_err());
        assert!(rhs_3ch(&s).is_err());
    }
}
