//! Observables derived from covariance data: squeezing depth in decibels,
//! occupancy of the squeezed Bogoliubov mode, and Wigner-function grids for
//! the mechanical quadratures.

use nalgebra::Matrix2;

use crate::par::par_map;
use crate::{Error, Result};

/// Squeezing of a quadrature variance relative to the vacuum value 1/2,
/// in decibels: -10 log10(variance / 0.5). Positive means squeezed below
/// vacuum; 3.01 dB marks the static parametric bound.
pub fn squeezing_db(variance: f64) -> Result<f64> {
    if !variance.is_finite() || variance <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "variance must be positive and finite, got {variance}"
        )));
    }
    Ok(-10.0 * (variance / 0.5).log10())
}

/// Mean occupancy of the Bogoliubov mode beta = cosh(r) b + sinh(r) b^dag.
///
/// The transform scales the quadratures as Q = e^r X_b, P = e^{-r} Y_b, so
/// for a zero-mean Gaussian state
///
///   n_beta = (e^{2r} <X_b^2> + e^{-2r} <Y_b^2> - 1) / 2.
///
/// The off-diagonal covariance never enters: in <beta^dag beta> the <bb> and
/// <b^dag b^dag> cross terms contribute only their sum, which is real and
/// equal to <X_b^2> - <Y_b^2>.
pub fn bogoliubov_occupancy(v_b: &Matrix2<f64>, r: f64) -> Result<f64> {
    let n = ((2.0 * r).exp() * v_b[(0, 0)] + (-2.0 * r).exp() * v_b[(1, 1)] - 1.0) / 2.0;
    if n < -1e-9 {
        return Err(Error::InvalidInput(format!(
            "occupancy {n:e}: block is not a physical covariance"
        )));
    }
    Ok(n.max(0.0))
}

/// Phase-space density of the mechanical mode on a rectangular grid.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    /// Samples along the X_b axis, strictly increasing.
    pub x: Vec<f64>,
    /// Samples along the Y_b axis, strictly increasing.
    pub y: Vec<f64>,
    /// Step between X_b samples.
    pub dx: f64,
    /// Step between Y_b samples.
    pub dy: f64,
    /// Density values in row-major order: `values[iy][ix]`.
    pub values: Vec<Vec<f64>>,
    /// The mechanical covariance block the density was built from.
    pub v_b: Matrix2<f64>,
}

impl WignerGrid {
    /// Trapezoid-rule integral of the density over the window. Approaches
    /// one once the window spans several standard deviations on both axes.
    pub fn mass(&self) -> f64 {
        let nx = self.x.len();
        let ny = self.y.len();
        let mut total = 0.0;
        for (iy, row) in self.values.iter().enumerate() {
            let wy = if iy == 0 || iy == ny - 1 { 0.5 } else { 1.0 };
            for (ix, &v) in row.iter().enumerate() {
                let wx = if ix == 0 || ix == nx - 1 { 0.5 } else { 1.0 };
                total += wy * wx * v;
            }
        }
        total * self.dx * self.dy
    }

    /// Density at column `ix` (X_b axis) and row `iy` (Y_b axis).
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy][ix]
    }
}

/// Wigner density of a zero-mean Gaussian mechanical state,
///
///   W(D) = exp(-D^T V_b^{-1} D / 2) / (2 pi sqrt(det V_b)),  D = [X_b, Y_b],
///
/// sampled on an `n_points` x `n_points` grid over the given axis ranges.
/// Rows are evaluated in parallel. Errors when the block is singular or not
/// positive definite, or when the grid request is degenerate.
pub fn wigner_grid(
    v_b: &Matrix2<f64>,
    x_range: (f64, f64),
    y_range: (f64, f64),
    n_points: usize,
) -> Result<WignerGrid> {
    if n_points < 2 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 points per axis, got {n_points}"
        )));
    }
    if !(x_range.0 < x_range.1) || !(y_range.0 < y_range.1) {
        return Err(Error::InvalidInput(format!(
            "axis ranges must be increasing, got x {:?}, y {:?}",
            x_range, y_range
        )));
    }
    let (vxx, vxy, vyy) = (v_b[(0, 0)], v_b[(0, 1)], v_b[(1, 1)]);
    if (vxy - v_b[(1, 0)]).abs() > 1e-9 * (1.0 + vxy.abs()) {
        return Err(Error::InvalidInput(
            "covariance block is not symmetric".into(),
        ));
    }
    let det = vxx * vyy - vxy * vxy;
    if !det.is_finite() || det <= 0.0 || vxx <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "covariance block must be positive definite, det = {det:e}"
        )));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());

    let dx = (x_range.1 - x_range.0) / (n_points - 1) as f64;
    let dy = (y_range.1 - y_range.0) / (n_points - 1) as f64;
    let x: Vec<f64> = (0..n_points).map(|i| x_range.0 + i as f64 * dx).collect();
    let y: Vec<f64> = (0..n_points).map(|i| y_range.0 + i as f64 * dy).collect();

    // D^T V^{-1} D = (V_yy x^2 - 2 V_xy x y + V_xx y^2) / det
    let values = par_map(&y, |&yv| {
        x.iter()
            .map(|&xv| {
                let quad = (vyy * xv * xv - 2.0 * vxy * xv * yv + vxx * yv * yv) / det;
                norm * (-0.5 * quad).exp()
            })
            .collect::<Vec<f64>>()
    });

    Ok(WignerGrid {
        x,
        y,
        dx,
        dy,
        values,
        v_b: *v_b,
    })
}
