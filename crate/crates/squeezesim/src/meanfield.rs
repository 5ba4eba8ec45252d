//! Classical mean-value dynamics under the three-tone drive, the asymptotic
//! sideband expansion of the periodic orbit, extraction of the effective
//! coupling tones from a settled trajectory, and the inverse map from target
//! coupling tones to drive strengths.
//!
//! The mean values obey
//!   d<a>/dt = -(i delta_a + kappa/2)<a> + i g0 <a>(<b> + <b>*) + eps_L(t) e^{i phi}
//!   d<b>/dt = -(i omega_m + gamma_m/2)<b> + i g0 |<a>|^2
//! and settle onto a tau-periodic orbit for stable parameters. The orbit's
//! harmonic content is what the linearized covariance dynamics inherits.

use num_complex::Complex64;

use crate::model::{CouplingSidebands, DriveSidebands, SystemParams};
use crate::{Error, Result};

/// Integration steps per modulation period used by the default step size.
pub const STEPS_PER_PERIOD: usize = 2000;

/// Amplitude bound beyond which the integration reports divergence.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// Default fixed step for `integrate_meanfield`.
pub fn default_dt(drive: &DriveSidebands) -> f64 {
    drive.tau() / STEPS_PER_PERIOD as f64
}

/// Mean-value trajectory on a uniform grid. Times are stored in units of the
/// modulation period tau; `dt` keeps the raw step.
#[derive(Debug, Clone)]
pub struct MeanTrajectory {
    pub tau: f64,
    pub dt: f64,
    pub t: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl MeanTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn steps_per_period(&self) -> usize {
        (self.tau / self.dt).round() as usize
    }

    /// Number of complete modulation periods covered.
    pub fn periods(&self) -> usize {
        (self.len() - 1) / self.steps_per_period()
    }
}

fn deriv(
    params: &SystemParams,
    drive: &DriveSidebands,
    t: f64,
    a: Complex64,
    b: Complex64,
) -> (Complex64, Complex64) {
    let ca = Complex64::new(-params.kappa / 2.0, -params.delta_a);
    let cb = Complex64::new(-params.gamma_m / 2.0, -params.omega_m);
    let da = ca * a + Complex64::I * params.g0 * a * (2.0 * b.re) + drive.at(t, params.phi);
    let db = cb * b + Complex64::I * params.g0 * a.norm_sqr();
    (da, db)
}

/// Integrates the mean-value equations from <a(0)> = <b(0)> = 0 with
/// fixed-step fourth-order Runge-Kutta.
pub fn integrate_meanfield(
    params: &SystemParams,
    drive: &DriveSidebands,
    t_end: f64,
    dt: f64,
) -> Result<MeanTrajectory> {
    params.validate()?;
    drive.validate()?;
    let tau = drive.tau();
    if !(dt > 0.0) || dt > tau / 1000.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "step {dt:e} must be positive and at most tau/1000 = {:e}",
            tau / 1000.0
        )));
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidInput("t_end must be positive".to_string()));
    }

    let steps = (t_end / dt).round() as usize;
    let mut traj = MeanTrajectory {
        tau,
        dt,
        t: Vec::with_capacity(steps + 1),
        a: Vec::with_capacity(steps + 1),
        b: Vec::with_capacity(steps + 1),
    };
    let mut a = Complex64::ZERO;
    let mut b = Complex64::ZERO;
    traj.t.push(0.0);
    traj.a.push(a);
    traj.b.push(b);

    for i in 0..steps {
        let t = i as f64 * dt;
        let (ka1, kb1) = deriv(params, drive, t, a, b);
        let (ka2, kb2) = deriv(params, drive, t + 0.5 * dt, a + 0.5 * dt * ka1, b + 0.5 * dt * kb1);
        let (ka3, kb3) = deriv(params, drive, t + 0.5 * dt, a + 0.5 * dt * ka2, b + 0.5 * dt * kb2);
        let (ka4, kb4) = deriv(params, drive, t + dt, a + dt * ka3, b + dt * kb3);
        a += dt / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
        b += dt / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
        let t_next = (i + 1) as f64 * dt;
        if !a.is_finite()
            || !b.is_finite()
            || a.norm_sqr() > OVERFLOW_GUARD * OVERFLOW_GUARD
            || b.norm_sqr() > OVERFLOW_GUARD * OVERFLOW_GUARD
        {
            return Err(Error::Numeric(format!(
                "mean-field amplitudes diverged at t = {:.3} periods",
                t_next / tau
            )));
        }
        traj.t.push(t_next / tau);
        traj.a.push(a);
        traj.b.push(b);
    }
    Ok(traj)
}

/// Harmonic content of the asymptotic tau-periodic orbit, obtained from the
/// double expansion in powers of g0 and drive harmonics.
///
/// `a_tones`/`b_tones` hold the labels (-1, 0, +1) in the drive convention
/// where tone n multiplies e^{-i n Omega t}. The full harmonic tables (index
/// n + n_max, coefficient of e^{+i n Omega t}) are kept as well: the
/// mechanical orbit in particular carries harmonics beyond |n| = 1 at an
/// observable level, so reconstruction uses every retained harmonic.
#[derive(Debug, Clone)]
pub struct SidebandAmplitudes {
    pub a_tones: [Complex64; 3],
    pub b_tones: [Complex64; 3],
    pub a_harmonics: Vec<Complex64>,
    pub b_harmonics: Vec<Complex64>,
    pub j_max: usize,
    pub n_max: usize,
    pub omega: f64,
    /// False when some expansion order contributed more than the previous
    /// nonzero one, i.e. the series shows no sign of converging.
    pub converged: bool,
    /// False when g0 exceeds the perturbative comfort zone (g0 > 0.01).
    pub perturbative: bool,
}

impl SidebandAmplitudes {
    fn idx(&self, n: i64) -> Option<usize> {
        let m = self.n_max as i64;
        (-m..=m).contains(&n).then(|| (n + m) as usize)
    }

    /// Coefficient of e^{+i n Omega t} in <a(t)>; zero outside the window.
    pub fn harmonic_a(&self, n: i64) -> Complex64 {
        self.idx(n).map_or(Complex64::ZERO, |i| self.a_harmonics[i])
    }

    /// Coefficient of e^{+i n Omega t} in <b(t)>; zero outside the window.
    pub fn harmonic_b(&self, n: i64) -> Complex64 {
        self.idx(n).map_or(Complex64::ZERO, |i| self.b_harmonics[i])
    }

    /// Asymptotic <a(t)> summed over all retained harmonics.
    pub fn reconstruct_a(&self, t: f64) -> Complex64 {
        self.reconstruct(&self.a_harmonics, t)
    }

    /// Asymptotic <b(t)> summed over all retained harmonics.
    pub fn reconstruct_b(&self, t: f64) -> Complex64 {
        self.reconstruct(&self.b_harmonics, t)
    }

    fn reconstruct(&self, h: &[Complex64], t: f64) -> Complex64 {
        let m = self.n_max as i64;
        (-m..=m)
            .zip(h)
            .map(|(n, c)| c * Complex64::new(0.0, n as f64 * self.omega * t).exp())
            .sum()
    }
}

/// Computes the expansion coefficients a_{n,j}, b_{n,j} by the sideband
/// recursion and sums them in powers of g0.
///
/// Zeroth order is the driven empty cavity, a_{n,0} = eps_{-n} e^{i phi} /
/// (i(delta_a + n Omega) + kappa/2), with the mechanics dark. Each further
/// order feeds the radiation-pressure products back in, harmonics outside
/// |n| <= n_max dropped at every order.
pub fn floquet_amplitudes(
    params: &SystemParams,
    drive: &DriveSidebands,
    j_max: usize,
    n_max: usize,
) -> Result<SidebandAmplitudes> {
    params.validate()?;
    drive.validate()?;
    if n_max < 1 {
        return Err(Error::InvalidInput("n_max must be at least 1".to_string()));
    }
    if j_max > 20 {
        return Err(Error::InvalidInput("j_max must be at most 20".to_string()));
    }

    let width = 2 * n_max + 1;
    let idx = |n: i64| -> Option<usize> {
        let m = n_max as i64;
        (-m..=m).contains(&n).then(|| (n + m) as usize)
    };
    let om = drive.omega;
    let d_a = |n: i64| Complex64::new(params.kappa / 2.0, params.delta_a + n as f64 * om);
    let d_b = |n: i64| Complex64::new(params.gamma_m / 2.0, params.omega_m + n as f64 * om);
    let phase = Complex64::new(0.0, params.phi).exp();

    // a_orders[j][idx(n)] = a_{n,j}; the g0^j factor is applied when summing.
    let mut a_orders = vec![vec![Complex64::ZERO; width]; j_max + 1];
    let mut b_orders = vec![vec![Complex64::ZERO; width]; j_max + 1];
    for (label, eps) in
        [(-1i64, drive.eps_minus1), (0, drive.eps_0), (1, drive.eps_plus1)]
    {
        // Tone labeled n multiplies e^{-i n Omega t}, i.e. harmonic -n.
        if let Some(i) = idx(-label) {
            a_orders[0][i] = eps * phase / d_a(-label);
        }
    }

    let get = |orders: &[Vec<Complex64>], j: usize, n: i64| -> Complex64 {
        idx(n).map_or(Complex64::ZERO, |i| orders[j][i])
    };
    for j in 1..=j_max {
        for n in -(n_max as i64)..=n_max as i64 {
            let mut sa = Complex64::ZERO;
            let mut sb = Complex64::ZERO;
            for k in 0..j {
                for m in -(n_max as i64)..=n_max as i64 {
                    sa += get(&a_orders, j - 1 - k, n + m) * get(&b_orders, k, m).conj()
                        + get(&a_orders, j - 1 - k, n - m) * get(&b_orders, k, m);
                    sb += get(&a_orders, j - 1 - k, n + m) * get(&a_orders, k, m).conj();
                }
            }
            let i = idx(n).expect("n within window");
            a_orders[j][i] = Complex64::I * sa / d_a(n);
            b_orders[j][i] = Complex64::I * sb / d_b(n);
        }
    }

    // Sum orders and watch whether successive nonzero contributions shrink.
    let mut a_harmonics = vec![Complex64::ZERO; width];
    let mut b_harmonics = vec![Complex64::ZERO; width];
    let mut converged = true;
    let mut last_nonzero: Option<f64> = None;
    let mut g_pow = 1.0;
    for j in 0..=j_max {
        let mut order_max: f64 = 0.0;
        for i in 0..width {
            a_harmonics[i] += g_pow * a_orders[j][i];
            b_harmonics[i] += g_pow * b_orders[j][i];
            order_max = order_max
                .max(g_pow * a_orders[j][i].norm())
                .max(g_pow * b_orders[j][i].norm());
        }
        if order_max > 0.0 {
            if let Some(prev) = last_nonzero {
                if order_max > prev {
                    converged = false;
                }
            }
            last_nonzero = Some(order_max);
        }
        g_pow *= params.g0;
    }

    let tone = |label: i64| idx(-label).map_or(Complex64::ZERO, |i| a_harmonics[i]);
    let tone_b = |label: i64| idx(-label).map_or(Complex64::ZERO, |i| b_harmonics[i]);
    Ok(SidebandAmplitudes {
        a_tones: [tone(-1), tone(0), tone(1)],
        b_tones: [tone_b(-1), tone_b(0), tone_b(1)],
        a_harmonics,
        b_harmonics,
        j_max,
        n_max,
        omega: om,
        converged,
        perturbative: params.g0 <= 0.01,
    })
}

/// Coupling tones extracted from the periodic orbit, with diagnostics.
#[derive(Debug, Clone)]
pub struct EffectiveCoupling {
    pub tones: CouplingSidebands,
    /// Max |g0 <a(t)> - three-tone reconstruction| over the last period,
    /// in coupling units.
    pub residual: f64,
    /// Relative period-to-period change of <a> over the last two periods.
    pub settling_residual: f64,
    /// True when the settling residual is within the periodicity tolerance.
    pub settled: bool,
}

/// Periodicity detection tolerance: consecutive periods must agree to this
/// relative level before the orbit counts as settled.
pub const SETTLING_TOL: f64 = 1e-4;

/// Projects the coupling tones g0 (a_-1, a_0, a_1) out of the last five
/// modulation periods of a settled trajectory.
///
/// Tones are trapezoid projections of g0 <a(t)> onto e^{-i n Omega t};
/// the residual is the max distance between g0 <a(t)> and the three-tone
/// reconstruction over the final period. A trajectory whose last two
/// periods differ by more than 1% trips the insufficient-settling error;
/// below that the `settled` flag still records whether the strict
/// periodicity tolerance was met.
pub fn effective_coupling(
    params: &SystemParams,
    traj: &MeanTrajectory,
) -> Result<EffectiveCoupling> {
    let spp = traj.steps_per_period();
    let n = traj.len();
    if n < 6 * spp + 1 {
        return Err(Error::InvalidInput(
            "trajectory must cover at least six modulation periods".to_string(),
        ));
    }

    let scale = traj.a[n - spp - 1..].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut shift: f64 = 0.0;
    for i in n - spp - 1..n {
        shift = shift.max((traj.a[i] - traj.a[i - spp]).norm());
    }
    let settling_residual = if scale > 0.0 { shift / scale } else { 0.0 };
    if settling_residual > 1e-2 {
        return Err(Error::InvalidInput(format!(
            "mean field is not periodic yet (period-to-period change {settling_residual:.2e}); \
             integrate longer"
        )));
    }

    // Trapezoid projection over the last five periods; integer periods keep
    // the harmonics orthogonal.
    let omega = 2.0 * std::f64::consts::PI / traj.tau;
    let window = 5 * spp;
    let start = n - 1 - window;
    let mut tones = [Complex64::ZERO; 3];
    for (k, label) in [-1i64, 0, 1].iter().enumerate() {
        let mut acc = Complex64::ZERO;
        for i in start..=n - 1 {
            let w = if i == start || i == n - 1 { 0.5 } else { 1.0 };
            let t_raw = traj.t[i] * traj.tau;
            let ph = Complex64::new(0.0, *label as f64 * omega * t_raw).exp();
            acc += w * traj.a[i] * ph;
        }
        tones[k] = params.g0 * acc * traj.dt / (window as f64 * traj.dt);
    }
    let coupling = CouplingSidebands::new(tones[0], tones[1], tones[2]);

    let mut residual: f64 = 0.0;
    for i in n - spp - 1..n {
        let t_raw = traj.t[i] * traj.tau;
        let recon = coupling.at(t_raw, omega);
        residual = residual.max((params.g0 * traj.a[i] - recon).norm());
    }

    Ok(EffectiveCoupling {
        tones: coupling,
        residual,
        settling_residual,
        settled: settling_residual <= SETTLING_TOL,
    })
}

/// Coupling tones straight from the sideband amplitudes: G_n = g0 a_n.
/// The residual is the three-tone truncation error of the full harmonic
/// reconstruction over one period.
pub fn effective_coupling_from_amplitudes(
    params: &SystemParams,
    amps: &SidebandAmplitudes,
) -> EffectiveCoupling {
    let tones = CouplingSidebands::new(
        params.g0 * amps.a_tones[0],
        params.g0 * amps.a_tones[1],
        params.g0 * amps.a_tones[2],
    );
    let tau = 2.0 * std::f64::consts::PI / amps.omega;
    let mut residual: f64 = 0.0;
    for i in 0..=512 {
        let t = tau * i as f64 / 512.0;
        let full = params.g0 * amps.reconstruct_a(t);
        residual = residual.max((full - tones.at(t, amps.omega)).norm());
    }
    EffectiveCoupling { tones, residual, settling_residual: 0.0, settled: true }
}

/// First period index k >= 1 whose complex period-mean agrees with the
/// previous one to the given relative tolerance, or None if never.
pub fn settling_period(samples: &[Complex64], steps_per_period: usize, tol: f64) -> Option<usize> {
    let periods = (samples.len() - 1) / steps_per_period;
    let mean = |k: usize| -> Complex64 {
        let s: Complex64 = samples[k * steps_per_period..(k + 1) * steps_per_period].iter().sum();
        s / steps_per_period as f64
    };
    let mut prev = mean(0);
    for k in 1..periods {
        let cur = mean(k);
        let scale = cur.norm().max(prev.norm()).max(f64::MIN_POSITIVE);
        if (cur - prev).norm() <= tol * scale {
            return Some(k);
        }
        prev = cur;
    }
    None
}

/// Largest pointwise gap |g0 <a(t)> - reference(t)| over the trailing
/// `periods` whole periods, the time-domain distance between the realized
/// coupling and a three-tone reference envelope.
pub fn coupling_gap(
    params: &SystemParams,
    traj: &MeanTrajectory,
    reference: &CouplingSidebands,
    periods: usize,
) -> Result<f64> {
    let spp = traj.steps_per_period();
    let n = traj.len();
    if periods == 0 || n < periods * spp + 1 {
        return Err(Error::InvalidInput(format!(
            "trajectory holds {} samples, need {} for a {periods}-period window",
            n,
            periods * spp + 1
        )));
    }
    let omega = 2.0 * std::f64::consts::PI / traj.tau;
    let mut gap: f64 = 0.0;
    for i in n - periods * spp - 1..n {
        let t_raw = traj.t[i] * traj.tau;
        let envelope = reference.at(t_raw, omega);
        gap = gap.max((params.g0 * traj.a[i] - envelope).norm());
    }
    Ok(gap)
}

/// Static radiation-pressure detuning shift g0 <b + b*> averaged over the
/// last period; the operating effective detuning is delta_a minus this.
pub fn static_detuning_shift(params: &SystemParams, traj: &MeanTrajectory) -> f64 {
    let spp = traj.steps_per_period();
    let n = traj.len();
    let start = n.saturating_sub(spp + 1);
    let sum: f64 = traj.b[start..].iter().map(|b| 2.0 * b.re).sum();
    params.g0 * sum / (n - start) as f64
}

/// Drive strengths that make the settled coupling tones hit a real target
/// (G_-1, G_0, G_1), from the closed-form inverse of the asymptotic orbit.
///
/// The map compensates the static and oscillating parts of the
/// radiation-pressure backaction through the k-coefficients below; its
/// accuracy is set by the perturbative orbit structure, so the round trip
/// through `integrate_meanfield` reproduces the target tones only
/// approximately (at the percent level for the workhorse parameters).
pub fn synthesize_drive(
    params: &SystemParams,
    target: &CouplingSidebands,
    omega: f64,
) -> Result<DriveSidebands> {
    params.validate()?;
    if !(params.g0 > 0.0) {
        return Err(Error::InvalidInput(
            "drive synthesis divides by g0; it must be positive".to_string(),
        ));
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidInput("modulation frequency must be positive".to_string()));
    }
    let (g_m1, g_0c, g_p1) = target.as_real()?;
    let g0 = params.g0;
    let i = Complex64::I;

    let s1 = Complex64::new(-params.gamma_m / 2.0, -params.omega_m);
    let s2 = Complex64::new(0.0, 2.0 * omega);
    let s3 = -s2;
    let s4 = Complex64::new(0.0, omega);
    let s5 = -s4;

    let k0 = -i * (g_m1 * g_m1 + g_0c * g_0c + g_p1 * g_p1) / (2.0 * g0 * s1);
    let k1 = -i * g_m1 * g_p1 * s2 / (g0 * (s1 - s2) * (s2 - s3));
    let k2 = i * g_m1 * g_p1 * s3 / (g0 * (s1 - s3) * (s2 - s3));
    let k3 = -i * g_0c * (g_m1 + g_p1) * s4 / (g0 * (s1 - s4) * (s4 - s5));
    let k4 = i * g_0c * (g_m1 + g_p1) * s5 / (g0 * (s1 - s5) * (s4 - s5));
    let k12 = k1 + k2;
    let k34 = k3 + k4;

    let eps_m1 = (g_m1 / g0) * Complex64::new(params.kappa / 2.0, omega + params.delta_a)
        - i * (2.0 * k0 * g_m1 + k34 * g_0c + k12 * g_p1);
    let eps_0 = (g_0c / g0) * Complex64::new(params.kappa / 2.0, params.delta_a)
        - i * (k34 * g_m1 + 2.0 * k0 * g_0c + k34 * g_p1);
    let eps_p1 = (g_p1 / g0) * Complex64::new(params.kappa / 2.0, params.delta_a - omega)
        - i * (k12 * g_m1 + k34 * g_0c + 2.0 * k0 * g_p1);

    Ok(DriveSidebands { eps_minus1: eps_m1, eps_0, eps_plus1: eps_p1, omega })
}
