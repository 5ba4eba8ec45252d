//! Domain types and unit conventions shared by every other module: system
//! rates, drive and coupling sidebands, covariance matrices, and the
//! stability classification of the rotating-frame drift.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::{Error, Result, OMEGA_M};

/// Relative tolerance below which a coupling tone's imaginary part is treated
/// as zero by operations that require real tones.
const REAL_TONE_TOL: f64 = 1e-12;

/// All rates, frequencies and bath occupancies of the optomechanical model,
/// in units of the mechanical frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Mechanical angular frequency; the unit, always exactly 1.
    pub omega_m: f64,
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    /// Mechanical damping rate.
    pub gamma_m: f64,
    /// Single-photon optomechanical coupling.
    pub g0: f64,
    /// Bare laser-cavity detuning, entering the mean-field equations.
    pub delta_a: f64,
    /// Effective detuning after the static mean-field shift, entering the
    /// linearized fluctuation dynamics. Defaults to `omega_m`.
    pub delta_eff: f64,
    /// Cavity bath mean occupancy.
    pub n_a: f64,
    /// Mechanical bath mean occupancy.
    pub n_m: f64,
    /// Overall drive phase in radians.
    pub phi: f64,
}

impl Default for SystemParams {
    /// Sideband-resolved workhorse parameter set used throughout the examples:
    /// kappa = 0.1, gamma_m = 1e-6, g0 = 4e-6, red-detuned by one mechanical
    /// frequency, cavity bath at vacuum, mechanical bath at n_m = 10.
    fn default() -> Self {
        SystemParams {
            omega_m: OMEGA_M,
            kappa: 0.1,
            gamma_m: 1e-6,
            g0: 4e-6,
            delta_a: 1.0,
            delta_eff: 1.0,
            n_a: 0.0,
            n_m: 10.0,
            phi: 0.0,
        }
    }
}

impl SystemParams {
    /// Checks every invariant, reporting all violations by field name.
    pub fn validate(&self) -> Result<()> {
        let mut faults = Vec::new();
        if self.omega_m != OMEGA_M {
            faults.push("omega_m must be exactly 1 (it is the unit)".to_string());
        }
        if !(self.kappa > 0.0) {
            faults.push("kappa must be positive".to_string());
        }
        if !(self.gamma_m > 0.0) {
            faults.push("gamma_m must be positive".to_string());
        }
        if !(self.g0 >= 0.0) {
            faults.push("g0 must be non-negative".to_string());
        }
        if !(self.n_a >= 0.0) {
            faults.push("n_a must be non-negative".to_string());
        }
        if !(self.n_m >= 0.0) {
            faults.push("n_m must be non-negative".to_string());
        }
        if !self.delta_a.is_finite() || !self.delta_eff.is_finite() || !self.phi.is_finite() {
            faults.push("delta_a, delta_eff and phi must be finite".to_string());
        }
        if faults.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(faults.join("; ")))
        }
    }

    /// Same parameters with a different mechanical bath occupancy.
    pub fn with_n_m(mut self, n_m: f64) -> Self {
        self.n_m = n_m;
        self
    }
}

/// Sideband cooling figure of merit 4 G0^2 / (kappa gamma_m) for a given
/// center coupling tone.
pub fn cooperativity(params: &SystemParams, g0c: f64) -> f64 {
    4.0 * g0c * g0c / (params.kappa * params.gamma_m)
}

/// Complex three-tone drive: eps(t) = eps_minus1 e^{+i Omega t} + eps_0
/// + eps_plus1 e^{-i Omega t}, modulated at `Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSidebands {
    pub eps_minus1: Complex64,
    pub eps_0: Complex64,
    pub eps_plus1: Complex64,
    /// Modulation frequency; the modulation period is tau = 2 pi / Omega.
    pub omega: f64,
}

impl DriveSidebands {
    pub fn new(eps_minus1: Complex64, eps_0: Complex64, eps_plus1: Complex64, omega: f64) -> Self {
        DriveSidebands { eps_minus1, eps_0, eps_plus1, omega }
    }

    /// Real-amplitude convenience constructor with the default Omega = 2.
    pub fn real(eps_minus1: f64, eps_0: f64, eps_plus1: f64) -> Self {
        DriveSidebands::new(eps_minus1.into(), eps_0.into(), eps_plus1.into(), 2.0)
    }

    /// Modulation period.
    pub fn tau(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput("Omega must be positive".to_string()))
        }
    }

    /// Drive amplitude at time `t`, including the overall phase `phi`.
    pub fn at(&self, t: f64, phi: f64) -> Complex64 {
        let rot = Complex64::new(0.0, self.omega * t).exp();
        let tones = self.eps_minus1 * rot + self.eps_0 + self.eps_plus1 * rot.conj();
        tones * Complex64::new(0.0, phi).exp()
    }
}

/// Effective-coupling tones: G(t) = g_minus1 e^{+i Omega t} + g_0c
/// + g_plus1 e^{-i Omega t}, obtained from g0 times the cavity mean field.
///
/// All headline scenarios use real non-negative tones; complex values are
/// allowed for the pi-phase variant (g_plus1 negated), which swaps the
/// squeezed quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSidebands {
    pub g_minus1: Complex64,
    pub g_0c: Complex64,
    pub g_plus1: Complex64,
}

impl CouplingSidebands {
    pub fn new(g_minus1: Complex64, g_0c: Complex64, g_plus1: Complex64) -> Self {
        CouplingSidebands { g_minus1, g_0c, g_plus1 }
    }

    pub fn real(g_minus1: f64, g_0c: f64, g_plus1: f64) -> Self {
        CouplingSidebands::new(g_minus1.into(), g_0c.into(), g_plus1.into())
    }

    /// Center tone plus ratio: tones (0, G0, ratio*G0). The rotating-frame
    /// dynamics depend only on these two; g_minus1 matters off resonance.
    pub fn from_ratio(g0c: f64, ratio: f64) -> Self {
        CouplingSidebands::real(0.0, g0c, ratio * g0c)
    }

    /// Real parts of the tones, failing if any imaginary part is significant
    /// relative to the tone magnitudes.
    pub fn as_real(&self) -> Result<(f64, f64, f64)> {
        let scale = self.g_minus1.norm() + self.g_0c.norm() + self.g_plus1.norm();
        let im = self.g_minus1.im.abs().max(self.g_0c.im.abs()).max(self.g_plus1.im.abs());
        if im > REAL_TONE_TOL * scale.max(1e-300) {
            return Err(Error::InvalidInput(format!(
                "coupling tones must be real for this operation (max imaginary part {im:e})"
            )));
        }
        Ok((self.g_minus1.re, self.g_0c.re, self.g_plus1.re))
    }

    /// G+ = G0 + G1, the two-mode-squeezing combination.
    pub fn g_plus(&self) -> Complex64 {
        self.g_0c + self.g_plus1
    }

    /// G- = G0 - G1, the beam-splitter combination.
    pub fn g_minus(&self) -> Complex64 {
        self.g_0c - self.g_plus1
    }

    /// Sideband ratio G1/G0 (real tones).
    pub fn ratio(&self) -> Result<f64> {
        let (_, g0c, g1) = self.as_real()?;
        if g0c == 0.0 {
            return Err(Error::InvalidInput("ratio undefined for G0 = 0".to_string()));
        }
        Ok(g1 / g0c)
    }

    /// Bogoliubov-cavity coupling sqrt(G0^2 - G1^2); defined for G0 >= |G1|.
    pub fn bogoliubov_coupling(&self) -> Result<f64> {
        let (_, g0c, g1) = self.as_real()?;
        let sq = g0c * g0c - g1 * g1;
        if sq < 0.0 {
            return Err(Error::InvalidInput(
                "Bogoliubov coupling undefined for |G1| > G0".to_string(),
            ));
        }
        Ok(sq.sqrt())
    }

    /// Squeezing parameter r with tanh r = G1/G0; requires |G1| < G0.
    pub fn squeeze_r(&self) -> Result<f64> {
        let (_, g0c, g1) = self.as_real()?;
        if !(g1.abs() < g0c) {
            return Err(Error::InvalidInput(
                "squeezing parameter requires |G1| < G0".to_string(),
            ));
        }
        // arctanh(x) written via the log form; exact at x = 0.
        Ok(0.5 * ((g0c + g1) / (g0c - g1)).ln())
    }

    /// Effective coupling G(t) reconstructed from the three tones.
    pub fn at(&self, t: f64, omega: f64) -> Complex64 {
        let rot = Complex64::new(0.0, omega * t).exp();
        self.g_minus1 * rot + self.g_0c + self.g_plus1 * rot.conj()
    }

    /// The pi-phase variant: g_plus1 -> -g_plus1, swapping which mechanical
    /// quadrature is squeezed.
    pub fn with_pi_phase(&self) -> Self {
        CouplingSidebands::new(self.g_minus1, self.g_0c, -self.g_plus1)
    }
}

/// Stability classification of the rotating-frame drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

/// Classifies stability by the reduced criterion |G1| < |G0| and
/// cross-checks it against the eigenvalues of the rotating-frame drift.
///
/// The two tests provably agree whenever |G0^2 - G1^2| > kappa gamma_m / 4;
/// inside that damping sliver the drift is still Hurwitz although the
/// reduced criterion says unstable, and the disagreement is surfaced as an
/// internal-consistency error rather than silently resolved.
pub fn stability(couplings: &CouplingSidebands, params: &SystemParams) -> Result<Stability> {
    params.validate()?;
    let (_, g0c, g1) = couplings.as_real()?;
    let scale = g0c.abs().max(g1.abs());
    let reduced = if scale == 0.0 || (g1.abs() - g0c.abs()).abs() <= REAL_TONE_TOL * scale {
        Stability::Marginal
    } else if g1.abs() < g0c.abs() {
        Stability::Stable
    } else {
        Stability::Unstable
    };

    let m = crate::covariance::rwa_drift_matrix(couplings, params)?;
    let max_re = m
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let eig_tol = 1e-12 * (params.kappa + params.gamma_m + scale).max(1.0);
    let eig_stable = max_re < -eig_tol;

    match reduced {
        Stability::Stable if !eig_stable => Err(Error::Internal(format!(
            "reduced criterion says stable but max drift eigenvalue has Re = {max_re:e}"
        ))),
        Stability::Unstable if eig_stable => Err(Error::Internal(format!(
            "reduced criterion says unstable but the drift is Hurwitz \
             (G1^2 - G0^2 = {:e} lies inside the damping sliver kappa*gamma_m/4 = {:e})",
            g1 * g1 - g0c * g0c,
            params.kappa * params.gamma_m / 4.0
        ))),
        _ => Ok(reduced),
    }
}

/// 4x4 symmetric covariance matrix of the quadrature fluctuations, ordered
/// (dX_a, dY_a, dX_b, dY_b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub m: Matrix4<f64>,
}

impl CovarianceMatrix {
    /// Wraps a matrix, symmetrizing it exactly.
    pub fn new(m: Matrix4<f64>) -> Self {
        CovarianceMatrix { m: 0.5 * (m + m.transpose()) }
    }

    pub fn from_diagonal(d: [f64; 4]) -> Self {
        CovarianceMatrix { m: Matrix4::from_diagonal(&d.into()) }
    }

    /// Cavity vacuum, mechanics thermal at the bath occupancy: the default
    /// initial state diag(1/2, 1/2, n_m + 1/2, n_m + 1/2).
    pub fn initial(params: &SystemParams) -> Self {
        let nm = params.n_m + 0.5;
        CovarianceMatrix::from_diagonal([0.5, 0.5, nm, nm])
    }

    /// Mechanical position variance <dX_b^2>.
    pub fn v33(&self) -> f64 {
        self.m[(2, 2)]
    }

    /// Mechanical momentum variance <dY_b^2>.
    pub fn v44(&self) -> f64 {
        self.m[(3, 3)]
    }

    /// Mechanical cross moment.
    pub fn v34(&self) -> f64 {
        self.m[(2, 3)]
    }

    /// Mechanical 2x2 block.
    pub fn mech_block(&self) -> Matrix2<f64> {
        Matrix2::new(self.m[(2, 2)], self.m[(2, 3)], self.m[(3, 2)], self.m[(3, 3)])
    }

    /// Determinant of the mechanical block; >= 1/4 is the Heisenberg bound.
    pub fn mech_det(&self) -> f64 {
        self.v33() * self.v44() - self.v34() * self.v34()
    }

    /// All diagonal entries strictly positive.
    pub fn diagonal_positive(&self) -> bool {
        (0..4).all(|i| self.m[(i, i)] > 0.0)
    }
}
