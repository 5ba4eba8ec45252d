//! Drift and diffusion construction, covariance evolution with and without
//! the rotating-wave approximation, and the steady state by a direct
//! Lyapunov solve.
//!
//! The quadrature ordering everywhere is (dX_a, dY_a, dX_b, dY_b). The
//! second moments obey dV/dt = M V + V M^T + D for delta-correlated baths,
//! which is the differential form of the propagator-plus-double-integral
//! solution and costs O(steps) instead of O(steps^2).

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use crate::model::{CouplingSidebands, CovarianceMatrix, Stability, SystemParams};
use crate::{Error, Result};

/// Default step for the full (lab-frame) drift: 200 steps per mechanical
/// period, resolving the e^{+-2it} and e^{+-4it} content of the coefficients.
pub const FULL_DRIFT_DT: f64 = 2.0 * std::f64::consts::PI / 200.0;

/// Drift matrix together with the frame it was built in.
#[derive(Debug, Clone, Copy)]
pub struct DriftMatrix {
    pub matrix: Matrix4<f64>,
    pub flavor: DriftFlavor,
}

/// Which linearized dynamics a drift matrix encodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftFlavor {
    /// Time-independent rotating-frame drift; carries the stability
    /// classification of its couplings.
    Rwa { stability: Stability },
    /// Lab-frame drift evaluated at one instant of the modulation cycle.
    Full { t: f64 },
}

/// Rotating-frame drift matrix for real tones, rows
/// (-k/2, 0, 0, -G-), (0, -k/2, G+, 0), (0, -G-, -g/2, 0), (G+, 0, 0, -g/2).
pub(crate) fn rwa_drift_matrix(
    couplings: &CouplingSidebands,
    params: &SystemParams,
) -> Result<Matrix4<f64>> {
    let (_, g0c, g1) = couplings.as_real()?;
    let gp = g0c + g1;
    let gm = g0c - g1;
    let k2 = -params.kappa / 2.0;
    let gm2 = -params.gamma_m / 2.0;
    #[rustfmt::skip]
    let m = Matrix4::new(
        k2,  0.0, 0.0, -gm,
        0.0, k2,  gp,  0.0,
        0.0, -gm, gm2, 0.0,
        gp,  0.0, 0.0, gm2,
    );
    Ok(m)
}

/// Rotating-frame drift with its stability classification.
pub fn drift_rwa(couplings: &CouplingSidebands, params: &SystemParams) -> Result<DriftMatrix> {
    let stability = crate::model::stability(couplings, params)?;
    Ok(DriftMatrix {
        matrix: rwa_drift_matrix(couplings, params)?,
        flavor: DriftFlavor::Rwa { stability },
    })
}

/// Lab-frame drift at time `t` under the modulated coupling
/// G(t) = g_minus1 e^{+i Omega t} + g_0c + g_plus1 e^{-i Omega t}.
///
/// G(t) is genuinely complex whenever g_minus1 != g_plus1, even for real
/// tones: Im G(t) = (g_minus1 - g_plus1) sin(Omega t). Both quadrature
/// components of 2 G(t) enter the coupling rows.
pub fn drift_full(
    t: f64,
    couplings: &CouplingSidebands,
    params: &SystemParams,
    omega: f64,
) -> DriftMatrix {
    let g2: Complex64 = 2.0 * couplings.at(t, omega);
    let d = params.delta_eff;
    let w = params.omega_m;
    let k2 = -params.kappa / 2.0;
    let gm2 = -params.gamma_m / 2.0;
    #[rustfmt::skip]
    let m = Matrix4::new(
        k2,    d,     -g2.im, 0.0,
        -d,    k2,    g2.re,  0.0,
        0.0,   0.0,   gm2,    w,
        g2.re, g2.im, -w,     gm2,
    );
    DriftMatrix { matrix: m, flavor: DriftFlavor::Full { t } }
}

/// Diagonal diffusion matrix
/// diag(kappa (n_a+1/2), kappa (n_a+1/2), gamma_m (n_m+1/2), gamma_m (n_m+1/2)).
pub fn diffusion(params: &SystemParams) -> Matrix4<f64> {
    let da = params.kappa * (params.n_a + 0.5);
    let db = params.gamma_m * (params.n_m + 0.5);
    Matrix4::from_diagonal(&[da, da, db, db].into())
}

/// Where `evolve_cm` gets its drift from.
pub enum DriftSource<'a> {
    /// A constant drift, typically the rotating-frame one.
    Constant(&'a DriftMatrix),
    /// The lab-frame drift rebuilt at every stage time.
    Periodic { couplings: &'a CouplingSidebands, params: &'a SystemParams, omega: f64 },
}

impl DriftSource<'_> {
    fn at(&self, t: f64) -> Matrix4<f64> {
        match self {
            DriftSource::Constant(d) => d.matrix,
            DriftSource::Periodic { couplings, params, omega } => {
                drift_full(t, couplings, params, *omega).matrix
            }
        }
    }
}

/// Covariance trajectory on a uniform grid.
#[derive(Debug, Clone)]
pub struct CmTrajectory {
    pub t: Vec<f64>,
    pub v: Vec<CovarianceMatrix>,
}

impl CmTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> &CovarianceMatrix {
        self.v.last().expect("trajectory has at least the initial sample")
    }
}

/// Integrates dV/dt = M V + V M^T + D from `v0` with fixed-step fourth-order
/// Runge-Kutta, re-symmetrizing after every step and rejecting states that
/// lose positive definiteness beyond tolerance.
pub fn evolve_cm(
    v0: &CovarianceMatrix,
    drift: &DriftSource,
    d: &Matrix4<f64>,
    t_end: f64,
    dt: f64,
) -> Result<CmTrajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidInput("t_end and dt must be positive".to_string()));
    }
    check_positive(v0, 0.0)?;
    let steps = (t_end / dt).round().max(0.0) as usize;
    let rhs = |m: &Matrix4<f64>, v: &Matrix4<f64>| m * v + v * m.transpose() + d;

    let mut v = v0.m;
    let mut out = CmTrajectory {
        t: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
    };
    out.t.push(0.0);
    out.v.push(*v0);

    for i in 0..steps {
        let t = i as f64 * dt;
        let m0 = drift.at(t);
        let mh = drift.at(t + 0.5 * dt);
        let m1 = drift.at(t + dt);
        let k1 = rhs(&m0, &v);
        let k2 = rhs(&mh, &(v + (0.5 * dt) * k1));
        let k3 = rhs(&mh, &(v + (0.5 * dt) * k2));
        let k4 = rhs(&m1, &(v + dt * k3));
        v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        v = 0.5 * (v + v.transpose());
        let sample = CovarianceMatrix { m: v };
        check_positive(&sample, (i + 1) as f64 * dt)?;
        out.t.push((i + 1) as f64 * dt);
        out.v.push(sample);
    }
    Ok(out)
}

/// Positive definiteness up to a small slack proportional to the trace.
fn check_positive(v: &CovarianceMatrix, t: f64) -> Result<()> {
    let slack = 1e-9 * v.m.trace().abs().max(1.0);
    let padded = v.m + Matrix4::from_diagonal_element(slack);
    if !v.diagonal_positive() || padded.cholesky().is_none() {
        return Err(Error::Numeric(format!(
            "covariance lost positive definiteness at t = {t:.6}"
        )));
    }
    Ok(())
}

/// Unique steady state of M V + V M^T + D = 0 for a strictly stable
/// rotating-frame drift, via a direct linear solve in the 10 independent
/// entries of the symmetric V.
pub fn steady_cm(m: &DriftMatrix, d: &Matrix4<f64>) -> Result<CovarianceMatrix> {
    match m.flavor {
        DriftFlavor::Rwa { stability: Stability::Stable } => {}
        DriftFlavor::Rwa { stability } => {
            return Err(Error::NoSteadyState(format!(
                "rotating-frame drift is {stability:?}; the Lyapunov steady state requires \
                 strictly stable couplings"
            )));
        }
        DriftFlavor::Full { .. } => {
            return Err(Error::InvalidInput(
                "steady state is defined for the rotating-frame drift only".to_string(),
            ));
        }
    }
    lyapunov_steady(&m.matrix, d)
}

/// Steady covariance for the given couplings and rates, building drift and
/// diffusion internally.
pub fn steady_cm_for(
    couplings: &CouplingSidebands,
    params: &SystemParams,
) -> Result<CovarianceMatrix> {
    steady_cm(&drift_rwa(couplings, params)?, &diffusion(params))
}

// Upper-triangle index pairs in solve order.
const UPPER: [(usize, usize); 10] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

fn upper_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    UPPER.iter().position(|&p| p == (i, j)).expect("index in range")
}

/// Direct solve of the 10-unknown linear system behind M V + V M^T = -D.
fn lyapunov_steady(m: &Matrix4<f64>, d: &Matrix4<f64>) -> Result<CovarianceMatrix> {
    let mut a = SMatrix::<f64, 10, 10>::zeros();
    let mut b = SVector::<f64, 10>::zeros();
    for (row, &(i, j)) in UPPER.iter().enumerate() {
        for k in 0..4 {
            a[(row, upper_index(k, j))] += m[(i, k)];
            a[(row, upper_index(i, k))] += m[(j, k)];
        }
        b[row] = -d[(i, j)];
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NoSteadyState("Lyapunov system is singular".to_string()))?;
    let mut v = Matrix4::zeros();
    for (idx, &(i, j)) in UPPER.iter().enumerate() {
        v[(i, j)] = x[idx];
        v[(j, i)] = x[idx];
    }
    debug_assert!((m * v + v * m.transpose() + d).norm() <= 1e-9 * d.norm().max(1e-300));
    Ok(CovarianceMatrix { m: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent closed form for the steady mechanical variances from the
    /// decoupled 2x2 blocks of the rotating-frame system: with
    /// E = (kappa+gamma_m)/2 + 2 G- G+ / kappa,
    /// V33 = (d_b E + 2 G-^2 d_a / kappa) / (gamma_m E + 2 G- G+) and V44 the
    /// same with G- and G+ swapped.
    fn reduced_v33_v44(c: &CouplingSidebands, p: &SystemParams) -> (f64, f64) {
        let (_, g0c, g1) = c.as_real().unwrap();
        let (gm, gp) = (g0c - g1, g0c + g1);
        let da = p.kappa * (p.n_a + 0.5);
        let db = p.gamma_m * (p.n_m + 0.5);
        let e = (p.kappa + p.gamma_m) / 2.0 + 2.0 * gm * gp / p.kappa;
        let den = p.gamma_m * e + 2.0 * gm * gp;
        let v33 = (db * e + 2.0 * gm * gm * da / p.kappa) / den;
        let v44 = (db * e + 2.0 * gp * gp * da / p.kappa) / den;
        (v33, v44)
    }

    #[test]
    fn drift_rwa_places_tones() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.01, 0.1, 0.05);
        let m = drift_rwa(&c, &p).unwrap().matrix;
        assert_relative_eq!(m[(0, 3)], -0.05, max_relative = 1e-15);
        assert_relative_eq!(m[(1, 2)], 0.15, max_relative = 1e-15);
        assert_relative_eq!(m[(2, 1)], -0.05, max_relative = 1e-15);
        assert_relative_eq!(m[(3, 0)], 0.15, max_relative = 1e-15);
        assert_eq!(m[(0, 0)], -0.05);
        assert_eq!(m[(2, 2)], -5e-7);
        // Zero tones decouple the two modes completely.
        let m0 = drift_rwa(&CouplingSidebands::real(0.0, 0.0, 0.0), &p).unwrap().matrix;
        assert_eq!(m0[(0, 3)], 0.0);
        assert_eq!(m0[(3, 0)], 0.0);
        // G1 = 0 puts the same tone in both off-diagonal couplings.
        let mb = drift_rwa(&CouplingSidebands::real(0.0, 0.1, 0.0), &p).unwrap().matrix;
        assert_eq!(mb[(0, 3)], -0.1);
        assert_eq!(mb[(1, 2)], 0.1);
    }

    #[test]
    fn drift_full_carries_both_coupling_quadratures() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.01, 0.1, 0.05);
        let m = drift_full(0.0, &c, &p, 2.0).matrix;
        assert_relative_eq!(m[(3, 0)], 0.32, max_relative = 1e-14);
        assert_relative_eq!(m[(1, 2)], 0.32, max_relative = 1e-14);
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(2, 3)], 1.0);
        // A quarter modulation period in: Im 2G = 2 (G-1 - G+1) sin(Omega t).
        let t = std::f64::consts::PI / 4.0;
        let m = drift_full(t, &c, &p, 2.0).matrix;
        assert_relative_eq!(m[(3, 1)], 2.0 * (0.01 - 0.05), max_relative = 1e-12);
        assert_relative_eq!(m[(0, 2)], -2.0 * (0.01 - 0.05), max_relative = 1e-12);
    }

    #[test]
    fn frozen_dynamics_keep_the_state() {
        let v0 = CovarianceMatrix::from_diagonal([0.5, 0.5, 10.5, 10.5]);
        let m = DriftMatrix {
            matrix: Matrix4::zeros(),
            flavor: DriftFlavor::Rwa { stability: Stability::Stable },
        };
        let traj =
            evolve_cm(&v0, &DriftSource::Constant(&m), &Matrix4::zeros(), 1.0, 0.01).unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(traj.last().m, v0.m);
    }

    #[test]
    fn steady_matches_reduced_block_algebra() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.01, 0.1, 0.05);
        let v = steady_cm_for(&c, &p).unwrap();
        let (v33, v44) = reduced_v33_v44(&c, &p);
        assert_relative_eq!(v.v33(), v33, max_relative = 1e-12);
        assert_relative_eq!(v.v44(), v44, max_relative = 1e-12);
        assert_relative_eq!(v.v33(), 0.16680444295186717, max_relative = 1e-12);
        assert_relative_eq!(v.v44(), 1.5001199987000135, max_relative = 1e-12);
        assert!(v.v34().abs() < 1e-14);
    }

    #[test]
    fn steady_thermal_fixed_point_without_tones() {
        let p = SystemParams::default();
        let v = steady_cm_for(&CouplingSidebands::real(0.0, 0.0, 0.0), &p);
        // Zero tones are marginal by the reduced criterion: no steady state
        // through this interface (the spectral route handles the limit).
        assert!(matches!(v, Err(Error::NoSteadyState(_))));
        // A beam-splitter tone well below the cooling threshold
        // 4 G0^2 / kappa ~ gamma_m leaves the thermal fixed point intact.
        let v = steady_cm_for(&CouplingSidebands::real(0.0, 1e-6, 0.0), &p).unwrap();
        assert_relative_eq!(v.v33(), 10.5, max_relative = 1e-3);
        assert_relative_eq!(v.v44(), 10.5, max_relative = 1e-3);
    }

    #[test]
    fn steady_near_marginal_approaches_thermal() {
        // Squeezing survives until G0^2 - G1^2 drops to kappa*gamma_m/4, so
        // the ratio must be this close to 1 before V33 returns to thermal.
        let p = SystemParams::default();
        let c = CouplingSidebands::from_ratio(0.1, 1.0 - 1e-9);
        let v = steady_cm_for(&c, &p).unwrap();
        assert_relative_eq!(v.v33(), 10.5, max_relative = 1e-2);
        let (v33, _) = reduced_v33_v44(&c, &p);
        assert_relative_eq!(v.v33(), v33, max_relative = 1e-10);
    }

    #[test]
    fn steady_rejects_marginal_and_unstable() {
        let p = SystemParams::default();
        for c in [
            CouplingSidebands::real(0.0, 0.1, 0.1),
            CouplingSidebands::real(0.0, 0.05, 0.1),
        ] {
            assert!(matches!(steady_cm_for(&c, &p), Err(Error::NoSteadyState(_))));
        }
    }

    #[test]
    fn pi_phase_swaps_the_steady_variances() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.01, 0.1, 0.05);
        let v = steady_cm_for(&c, &p).unwrap();
        let w = steady_cm_for(&c.with_pi_phase(), &p).unwrap();
        assert_relative_eq!(v.v33(), w.v44(), max_relative = 1e-12);
        assert_relative_eq!(v.v44(), w.v33(), max_relative = 1e-12);
    }

    #[test]
    fn rwa_evolution_squeezes_position_only() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.01, 0.1, 0.05);
        let drift = drift_rwa(&c, &p).unwrap();
        let traj = evolve_cm(
            &CovarianceMatrix::initial(&p),
            &DriftSource::Constant(&drift),
            &diffusion(&p),
            200.0,
            std::f64::consts::PI / 100.0,
        )
        .unwrap();
        let last = traj.last();
        assert!(last.v33() < 0.5, "position variance {}", last.v33());
        assert!(last.v44() > 0.5, "momentum variance {}", last.v44());
        // Heisenberg bound on the mechanical block along the whole path.
        for v in &traj.v {
            assert!(v.mech_det() >= 0.25 - 1e-9);
        }
    }

    #[test]
    fn full_drift_settles_to_a_periodic_orbit() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.01, 0.1, 0.05);
        // Transients decay at (kappa + gamma_m)/4, so the orbit is periodic
        // to a part in 1e3 only after roughly seventy modulation periods.
        let tau = std::f64::consts::PI;
        let traj = evolve_cm(
            &CovarianceMatrix::initial(&p),
            &DriftSource::Periodic { couplings: &c, params: &p, omega: 2.0 },
            &diffusion(&p),
            80.0 * tau,
            FULL_DRIFT_DT,
        )
        .unwrap();
        // Compare the last two modulation periods sample by sample.
        let per = (tau / FULL_DRIFT_DT).round() as usize;
        let n = traj.len();
        let mut max_rel: f64 = 0.0;
        for i in (n - per)..n {
            let a = traj.v[i - per].v33();
            let b = traj.v[i].v33();
            max_rel = max_rel.max((a - b).abs() / b.abs());
        }
        assert!(max_rel < 1e-2, "period residual {max_rel}");
        // The orbit dips below the rotating-frame steady value within each
        // period but stays above it by a finite margin at the minimum.
        let min = traj.v[(n - per)..n].iter().map(|v| v.v33()).fold(f64::INFINITY, f64::min);
        println!("min over period V33 = {min}");
        assert!(min > 0.16 && min < 0.20, "min over period {min}");
    }

    #[test]
    fn evolve_rejects_indefinite_input() {
        let p = SystemParams::default();
        let c = CouplingSidebands::real(0.0, 0.1, 0.05);
        let drift = drift_rwa(&c, &p).unwrap();
        let v0 = CovarianceMatrix::from_diagonal([0.5, 0.5, -1.0, 0.5]);
        assert!(matches!(
            evolve_cm(&v0, &DriftSource::Constant(&drift), &diffusion(&p), 1.0, 0.01),
            Err(Error::Numeric(_))
        ));
    }
}
