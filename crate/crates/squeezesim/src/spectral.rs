//! Frequency-domain steady state in the rotating frame: transfer
//! coefficients from the input noises to the mechanical position quadrature,
//! the symmetrized position spectrum, and the steady variance as a spectral
//! integral evaluated both in closed form and by quadrature.
//!
//! The position quadrature responds to the two baths through
//!   dX_b(omega) = B(omega) X_a_in + E(omega) X_b_in,
//! with B and E sharing the quadratic denominator
//!   den(omega) = 4 G- G+ + (gamma_m - 2 i omega)(kappa - 2 i omega).
//! The variance integral (1/2pi) int S(omega) d omega is a rational
//! integral done exactly by residues; an adaptive quadrature of the same
//! integrand guards the root bookkeeping.

use num_complex::Complex64;

use crate::model::{CouplingSidebands, SystemParams};
use crate::{Error, Result};

/// Transfer coefficients at one frequency. The cavity phase and mechanical
/// momentum inputs do not reach the position quadrature in this frame, so
/// `a` and `f` vanish identically; they are kept so the full linear response
/// reads off directly.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumCoeffs {
    pub a: Complex64,
    pub b: Complex64,
    pub e: Complex64,
    pub f: Complex64,
}

/// Exact residue value of the variance integral plus the relative
/// discrepancy against the quadrature cross-check.
#[derive(Debug, Clone, Copy)]
pub struct SpectralVariance {
    pub value: f64,
    pub cross_check: f64,
}

fn den(omega: Complex64, g_minus: f64, g_plus: f64, params: &SystemParams) -> Complex64 {
    let two_i_om = Complex64::new(0.0, 2.0) * omega;
    4.0 * g_minus * g_plus
        + (Complex64::new(params.gamma_m, 0.0) - two_i_om)
            * (Complex64::new(params.kappa, 0.0) - two_i_om)
}

/// Exact rational transfer coefficients at real frequency `omega`.
pub fn transfer_coeffs(
    omega: f64,
    couplings: &CouplingSidebands,
    params: &SystemParams,
) -> Result<SpectrumCoeffs> {
    params.validate()?;
    let (_, g0c, g1) = couplings.as_real()?;
    let (gm, gp) = (g0c - g1, g0c + g1);
    let d = den(Complex64::new(omega, 0.0), gm, gp, params);
    // Magnitude sum of the terms that may cancel; a denominator ten orders
    // below it means the couplings sit on the instability edge.
    let scale = params.kappa * params.gamma_m
        + 4.0 * (gm * gp).abs()
        + 2.0 * (params.kappa + params.gamma_m) * omega.abs()
        + 4.0 * omega * omega;
    if d.norm() <= 1e-300_f64.max(1e-10 * scale) {
        return Err(Error::Numeric(format!(
            "transfer function pole at omega = {omega:e}; couplings sit on the instability edge"
        )));
    }
    let b = -4.0 * gm * params.kappa.sqrt() / d;
    let e = 2.0 * (Complex64::new(params.kappa, -2.0 * omega)) * params.gamma_m.sqrt() / d;
    Ok(SpectrumCoeffs { a: Complex64::ZERO, b, e, f: Complex64::ZERO })
}

/// Symmetrized position fluctuation spectrum
/// S(omega) = |B|^2 (n_a + 1/2) + |E|^2 (n_m + 1/2); real and nonnegative.
pub fn position_spectrum(
    omega: f64,
    couplings: &CouplingSidebands,
    params: &SystemParams,
) -> Result<f64> {
    let c = transfer_coeffs(omega, couplings, params)?;
    Ok(c.b.norm_sqr() * (params.n_a + 0.5) + c.e.norm_sqr() * (params.n_m + 0.5))
}

/// Closed-form variance of the position quadrature from the spectral
/// integral, with an adaptive-quadrature cross-check of the same integrand.
///
/// The integral exists exactly when the denominator has no real root, i.e.
/// kappa gamma_m + 4 G- G+ > 0; the marginal two-tone point G1 = G0 is fine
/// (pure thermal Lorentzian), true instability is rejected.
pub fn steady_variance_spectral(
    couplings: &CouplingSidebands,
    params: &SystemParams,
) -> Result<SpectralVariance> {
    params.validate()?;
    let (_, g0c, g1) = couplings.as_real()?;
    let (gm, gp) = (g0c - g1, g0c + g1);
    let c0 = params.kappa * params.gamma_m + 4.0 * gm * gp;
    if !(c0 > 0.0) {
        return Err(Error::NoSteadyState(format!(
            "variance integral diverges: kappa gamma_m + 4 G- G+ = {c0:e} <= 0"
        )));
    }

    let kappa = params.kappa;
    let gamma = params.gamma_m;
    let na = params.n_a + 0.5;
    let nm = params.n_m + 0.5;
    let num_const = 16.0 * gm * gm * kappa * na + 4.0 * gamma * kappa * kappa * nm;
    let num_quad = 16.0 * gamma * nm;
    // N(omega) = num_const + num_quad * omega^2.
    let numerator = |w: Complex64| num_const + num_quad * w * w;
    let spectrum = |w: f64| {
        let re = c0 - 4.0 * w * w;
        let im = 2.0 * (kappa + gamma) * w;
        (num_const + num_quad * w * w) / (re * re + im * im)
    };

    // Quadrature: adaptive Simpson over [0, W] plus the substituted tail
    // u = 1/omega on (0, 1/W], whose integrand is again a smooth rational
    // function with value gamma_m (n_m + 1/2) at u = 0.
    let w_max = 10.0 * kappa.max(gp.abs()).max(gamma);
    let tail = |u: f64| {
        let nq = num_const * u * u + num_quad;
        let re = c0 * u * u - 4.0;
        let im = 2.0 * (kappa + gamma) * u;
        nq / (re * re + im * im)
    };
    let i_main = adaptive_simpson(&spectrum, 0.0, w_max);
    let i_tail = adaptive_simpson(&tail, 0.0, 1.0 / w_max);
    let quadrature = (i_main + i_tail) / std::f64::consts::PI;

    // Residues: den(omega) = -4 (omega^2 + B omega + C); the quartic
    // |den|^2 has poles at the roots of den and their negatives. Vieta's
    // pairing (big root from the stable quadratic-formula branch, small
    // root from the product) avoids the cancellation that costs the naive
    // formula six digits near the marginal point.
    let bq = Complex64::new(0.0, (kappa + gamma) / 2.0);
    let cq = Complex64::new(-c0 / 4.0, 0.0);
    let disc = bq * bq - 4.0 * cq;
    let sq = disc.sqrt();
    let n1 = -bq + sq;
    let n2 = -bq - sq;
    let w_big = if n1.norm() >= n2.norm() { n1 / 2.0 } else { n2 / 2.0 };
    let w_small = cq / w_big;

    let separated = (w_big - w_small).norm() > 1e-8 * w_big.norm().max(w_small.norm());
    let upper: Vec<Complex64> = [w_big, w_small, -w_big, -w_small]
        .into_iter()
        .filter(|p| p.im > 0.0)
        .collect();
    if !separated || upper.len() != 2 {
        // Repeated or ambiguous roots: fall back to the quadrature value.
        return Ok(SpectralVariance { value: quadrature, cross_check: 0.0 });
    }

    let den_c = |w: Complex64| -4.0 * w * w - Complex64::new(0.0, 2.0 * (kappa + gamma)) * w + c0;
    let den_d = |w: Complex64| -8.0 * w - Complex64::new(0.0, 2.0 * (kappa + gamma));
    let mut sum = Complex64::ZERO;
    for p in upper {
        let q_d = den_d(p) * den_c(-p) - den_c(p) * den_d(-p);
        sum += numerator(p) / q_d;
    }
    let value = (Complex64::I * sum).re;

    let cross_check = (value - quadrature).abs() / value.abs().max(f64::MIN_POSITIVE);
    if cross_check > 1e-8 {
        return Err(Error::Numeric(format!(
            "spectral variance cross-check failed: residues {value:e} vs quadrature \
             {quadrature:e} (relative {cross_check:e})"
        )));
    }
    Ok(SpectralVariance { value, cross_check })
}

/// Adaptive Simpson with a second pass once the magnitude of the integral
/// is known, so the tolerance is relative to the true value rather than to
/// the coarse first estimate (which a sharp peak at the left endpoint can
/// inflate by orders of magnitude).
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let coarse = simpson(f, a, b);
    let first = adaptive(f, a, b, 1e-13 * coarse.abs().max(f64::MIN_POSITIVE));
    adaptive(f, a, b, 1e-13 * first.abs().max(f64::MIN_POSITIVE))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * eps, depth - 1)
                + recurse(f, m, b, right, 0.5 * eps, depth - 1)
        }
    }
    recurse(f, a, b, simpson(f, a, b), eps, 60)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn workhorse() -> (CouplingSidebands, SystemParams) {
        (CouplingSidebands::real(0.0, 0.1, 0.05), SystemParams::default())
    }

    #[test]
    fn coeffs_at_zero_frequency() {
        let (c, p) = workhorse();
        let k = transfer_coeffs(0.0, &c, &p).unwrap();
        assert_eq!(k.a, Complex64::ZERO);
        assert_eq!(k.f, Complex64::ZERO);
        // Direct evaluation of the rational form at omega = 0.
        let expect = -4.0 * 0.05 * 0.1_f64.sqrt() / (4.0 * 0.05 * 0.15 + 1e-6 * 0.1);
        assert_relative_eq!(k.b.re, expect, max_relative = 1e-12);
        assert_relative_eq!(k.b.re, -2.1081780795186723, max_relative = 1e-12);
        assert!(k.b.im.abs() < 1e-15);
        let e_expect = 2.0 * 0.1 * 1e-3 / (4.0 * 0.05 * 0.15 + 1e-7);
        assert_relative_eq!(k.e.re, e_expect, max_relative = 1e-12);
    }

    #[test]
    fn marginal_point_is_brownian_motion() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.0, 0.1, 0.1);
        for om in [0.0, 1e-7, 0.01, 0.3] {
            let k = transfer_coeffs(om, &c, &p).unwrap();
            assert_eq!(k.b.norm(), 0.0);
            let s = position_spectrum(om, &c, &p).unwrap();
            let lorentz = p.gamma_m * (p.n_m + 0.5) / (p.gamma_m * p.gamma_m / 4.0 + om * om);
            assert_relative_eq!(s, lorentz, max_relative = 1e-12);
        }
        let peak = position_spectrum(0.0, &c, &p).unwrap();
        assert_relative_eq!(peak, 4.2e7, max_relative = 1e-12);
        // Vacuum baths halve the peak weight.
        let pv = SystemParams { n_m: 0.0, ..p };
        let cv = CouplingSidebands::real(0.0, 0.0, 0.0);
        let s = position_spectrum(0.02, &cv, &pv).unwrap();
        assert_relative_eq!(
            s,
            0.5 * pv.gamma_m / (pv.gamma_m * pv.gamma_m / 4.0 + 0.02 * 0.02),
            max_relative = 1e-12
        );
    }

    #[test]
    fn spectrum_is_even_and_rolls_off() {
        let (c, p) = workhorse();
        for om in [0.013, 0.2, 1.7] {
            let sp = position_spectrum(om, &c, &p).unwrap();
            let sm = position_spectrum(-om, &c, &p).unwrap();
            assert_relative_eq!(sp, sm, max_relative = 1e-14);
            assert!(sp >= 0.0);
        }
        // omega^2 S -> gamma_m (n_m + 1/2) from above.
        let w = 1e4;
        let s = position_spectrum(w, &c, &p).unwrap();
        assert_relative_eq!(s * w * w, p.gamma_m * (p.n_m + 0.5), max_relative = 1e-4);
    }

    #[test]
    fn variance_matches_the_lyapunov_route() {
        let (c, p) = workhorse();
        let v = steady_variance_spectral(&c, &p).unwrap();
        println!("variance {} cross-check {:e}", v.value, v.cross_check);
        assert_relative_eq!(v.value, 0.16680444295186717, max_relative = 1e-12);
        assert!(v.cross_check <= 1e-8);
        // The momentum variance is the same integral under the tone flip.
        let w = steady_variance_spectral(&c.with_pi_phase(), &p).unwrap();
        assert_relative_eq!(w.value, 1.5001199987000135, max_relative = 1e-12);
    }

    #[test]
    fn thermal_limits_are_exact() {
        let p = SystemParams::default();
        for c in [CouplingSidebands::real(0.0, 0.0, 0.0), CouplingSidebands::real(0.0, 0.1, 0.1)]
        {
            let v = steady_variance_spectral(&c, &p).unwrap();
            assert_relative_eq!(v.value, p.n_m + 0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn divergent_integral_is_rejected() {
        let p = SystemParams::default();
        // G1 far enough above G0 that kappa gamma_m no longer rescues it.
        let c = CouplingSidebands::real(0.0, 0.05, 0.1);
        assert!(matches!(steady_variance_spectral(&c, &p), Err(Error::NoSteadyState(_))));
    }

    #[test]
    fn pole_on_the_instability_edge_is_reported() {
        let p = SystemParams::default();
        let g1 = (0.1f64 * 0.1 + p.kappa * p.gamma_m / 4.0).sqrt();
        let c = CouplingSidebands::real(0.0, 0.1, g1);
        assert!(matches!(transfer_coeffs(0.0, &c, &p), Err(Error::Numeric(_))));
    }
}
