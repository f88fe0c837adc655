//! Volume-integral forward solvers for the scattering problem.
//!
//! The total field solves `u = u^i + k^2 V[q u]` in the isotropic case
//! and the coupled system `u = u^i - div V[Q grad u] + k^2 V[q u]` in the
//! anisotropic case, where `V` is the volume potential with the outgoing
//! Helmholtz kernel. Both are discretized by pointwise collocation on a
//! uniform grid of cell centers over the square `[-A, A]^2`; the
//! potential and all of its derivatives are applied as frequency-space
//! multipliers of the periodized truncated kernel (see [`kernel`]), so
//! one operator application costs a constant number of padded FFTs and
//! the systems are solved matrix-free by restarted GMRES.
//!
//! Scattered-field traces and normal derivatives on the measurement
//! circle come from the volume representation formulas, integrated with
//! the midpoint rule over the cells carrying contrast; the kernels are
//! smooth there because the circle keeps a positive distance from the
//! scatterer.

mod fft2;
mod gmres;
mod kernel;
mod mie;

pub use gmres::SolveStats;
pub use mie::{mie_disk_reference, mie_disk_reference_truncated, OracleError};

use ndarray::{s, Array2};
use num_complex::Complex64;

use crate::media::Medium;
use crate::point::{Point, SymMat2};
use crate::specfun::{SpecFunError, WaveContext};
use crate::synth::MeasurementCircle;
use fft2::Fft2;
use kernel::KernelSymbols;

/// Uniform computational grid over `[-A, A]^2`: `n` cells per axis,
/// samples at cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Center of cell `(ix, iy)`.
    pub fn node(&self, ix: usize, iy: usize) -> Point {
        let h = self.spacing();
        Point::new(
            -self.half_width + (ix as f64 + 0.5) * h,
            -self.half_width + (iy as f64 + 0.5) * h,
        )
    }
}

/// Complex field sampled on a [`GridSpec`]; `values[[iy, ix]]`.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    spec: GridSpec,
    pub values: Array2<Complex64>,
}

impl FieldGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        FieldGrid { spec, values: Array2::default((spec.n, spec.n)) }
    }

    /// Samples a function of position on the grid.
    pub fn from_fn(spec: GridSpec, f: impl Fn(Point) -> Complex64) -> Self {
        let values = Array2::from_shape_fn((spec.n, spec.n), |(iy, ix)| f(spec.node(ix, iy)));
        FieldGrid { spec, values }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }
}

/// Forward-solver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Cells per axis (power of two, at least 64).
    pub n: usize,
    /// Half-width of the computational square.
    pub half_width: f64,
    /// Relative residual target of the Krylov iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { n: 256, half_width: 2.2, tolerance: 1e-8, max_iterations: 500 }
    }
}

/// Scattered field and normal-derivative samples on the circle nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyPair {
    pub us: Vec<Complex64>,
    pub dnus: Vec<Complex64>,
}

/// Errors from the forward solvers.
#[derive(Debug)]
pub enum SolverError {
    /// The Krylov iteration missed the residual target.
    NotConverged { iterations: usize, residual: f64 },
    /// Invalid arguments or solver/medium mismatch.
    Usage(String),
    SpecFun(SpecFunError),
}

impl std::fmt::Display for SolverError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverError::NotConverged { iterations, residual } => write!(
                f,
                "no convergence after {} iterations (relative residual {:.3e})",
                iterations, residual
            ),
            SolverError::Usage(msg) => write!(f, "{}", msg),
            SolverError::SpecFun(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<SpecFunError> for SolverError {
    fn from(e: SpecFunError) -> Self {
        SolverError::SpecFun(e)
    }
}

fn usage(msg: impl Into<String>) -> SolverError {
    SolverError::Usage(msg.into())
}

/// Precomputed state for repeated solves against one medium: sampled
/// contrasts, kernel symbols and FFT plans. Immutable once built, so a
/// single context can drive independent solves on many threads.
pub struct SolverContext {
    wave: WaveContext,
    spec: GridSpec,
    opts: SolverOptions,
    /// Scalar contrast per cell.
    q: Array2<f64>,
    /// Matrix contrast per cell (xx, xy, yy); `None` for isotropic media.
    qmat: Option<[Array2<f64>; 3]>,
    /// Cells `(iy, ix)` with any nonzero contrast.
    support: Vec<(usize, usize)>,
    /// Largest distance of a support bounding-box corner from origin.
    bbox_corner_norm: f64,
    symbols: KernelSymbols,
    fft: Fft2,
}

impl SolverContext {
    pub fn new(
        medium: &Medium,
        ctx: &WaveContext,
        opts: &SolverOptions,
    ) -> Result<Self, SolverError> {
        if opts.n < 64 || !opts.n.is_power_of_two() {
            return Err(usage(format!("grid size {} must be a power of two >= 64", opts.n)));
        }
        if !(opts.tolerance > 0.0 && opts.tolerance <= 1e-2) {
            return Err(usage(format!("tolerance {} outside (0, 1e-2]", opts.tolerance)));
        }
        let spec = GridSpec { n: opts.n, half_width: opts.half_width };
        let h = spec.spacing();

        let mut bbox_corner_norm = 0.0;
        if let Some((lo, hi)) = medium.bounding_box() {
            bbox_corner_norm = [lo, hi, Point::new(lo.x, hi.y), Point::new(hi.x, lo.y)]
                .iter()
                .map(|p| p.norm())
                .fold(0.0, f64::max);
            // The scatterer must sit inside the inscribed disk with a
            // two-cell margin: this is what makes the periodized
            // truncated kernel an exact volume potential on the support.
            if bbox_corner_norm > opts.half_width - 2.0 * h {
                return Err(usage(format!(
                    "medium (extent {:.3}) does not fit the computational disk of radius {:.3}",
                    bbox_corner_norm,
                    opts.half_width - 2.0 * h
                )));
            }
        }

        let n = opts.n;
        let mut q = Array2::zeros((n, n));
        let mut qm = [Array2::zeros((n, n)), Array2::zeros((n, n)), Array2::zeros((n, n))];
        let mut any_matrix = false;
        let mut support = Vec::new();
        // Cells cut by a contrast jump get the cell-averaged contrast
        // (subcell supersampling); uniform cells keep the center sample.
        // The averaging removes the O(h) staircase-area error of plain
        // center sampling, which would dominate the trace accuracy.
        const SUBSAMPLES: usize = 8;
        for iy in 0..n {
            for ix in 0..n {
                let center = spec.node(ix, iy);
                let at_center = medium.contrast_at(center);
                let corners_differ = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)]
                    .iter()
                    .any(|&(cx, cy)| {
                        medium.contrast_at(center + Point::new(cx * h, cy * h)) != at_center
                    });
                let c = if corners_differ {
                    let mut acc = crate::media::Contrast::default();
                    let mut mat = SymMat2::ZERO;
                    for sy in 0..SUBSAMPLES {
                        for sx in 0..SUBSAMPLES {
                            let p = center
                                + Point::new(
                                    ((sx as f64 + 0.5) / SUBSAMPLES as f64 - 0.5) * h,
                                    ((sy as f64 + 0.5) / SUBSAMPLES as f64 - 0.5) * h,
                                );
                            let s = medium.contrast_at(p);
                            acc.q += s.q;
                            mat.xx += s.q_matrix.xx;
                            mat.xy += s.q_matrix.xy;
                            mat.yy += s.q_matrix.yy;
                        }
                    }
                    let w = 1.0 / (SUBSAMPLES * SUBSAMPLES) as f64;
                    crate::media::Contrast::new(
                        acc.q * w,
                        SymMat2 { xx: mat.xx * w, xy: mat.xy * w, yy: mat.yy * w },
                    )
                } else {
                    at_center
                };
                if c.q != 0.0 || !c.q_matrix.is_zero() {
                    q[[iy, ix]] = c.q;
                    qm[0][[iy, ix]] = c.q_matrix.xx;
                    qm[1][[iy, ix]] = c.q_matrix.xy;
                    qm[2][[iy, ix]] = c.q_matrix.yy;
                    any_matrix |= !c.q_matrix.is_zero();
                    support.push((iy, ix));
                    let eig = SymMat2 {
                        xx: 1.0 + c.q_matrix.xx,
                        xy: c.q_matrix.xy,
                        yy: 1.0 + c.q_matrix.yy,
                    }
                    .eig_min();
                    if eig <= 0.0 {
                        return Err(usage(format!(
                            "I+Q loses positivity at cell ({}, {}): eig {}",
                            ix, iy, eig
                        )));
                    }
                }
            }
        }

        Ok(SolverContext {
            wave: *ctx,
            spec,
            opts: *opts,
            q,
            qmat: if any_matrix { Some(qm) } else { None },
            support,
            bbox_corner_norm,
            symbols: KernelSymbols::build(ctx.wavenumber(), n, opts.half_width),
            fft: Fft2::new(2 * n),
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.spec
    }

    pub fn is_isotropic(&self) -> bool {
        self.qmat.is_none()
    }

    /// Volume potential `V[f]` of a grid density via the periodized
    /// kernel multiplier (zero-pad, FFT, multiply, inverse FFT, crop).
    pub fn apply_volume(&self, density: &Array2<Complex64>) -> Array2<Complex64> {
        let n = self.spec.n;
        let mut work = self.padded_hat(density);
        work *= &self.symbols.phi;
        self.fft.inverse(&mut work);
        work.slice(s![0..n, 0..n]).to_owned()
    }

    fn padded_hat(&self, density: &Array2<Complex64>) -> Array2<Complex64> {
        let n = self.spec.n;
        let mut work = Array2::default((2 * n, 2 * n));
        work.slice_mut(s![0..n, 0..n]).assign(density);
        self.fft.forward(&mut work);
        work
    }

    /// Combined potential of a scalar density and a vector density:
    /// returns `k^2 V[psi] - div V[phi]` and its two first derivatives,
    /// all evaluated through one shared multiplier pass.
    fn apply_volume_system(
        &self,
        psi: &Array2<Complex64>,
        phi1: &Array2<Complex64>,
        phi2: &Array2<Complex64>,
    ) -> [Array2<Complex64>; 3] {
        let n = self.spec.n;
        let k2 = self.wave.wavenumber().powi(2);
        let psi_hat = self.padded_hat(psi);
        let p1_hat = self.padded_hat(phi1);
        let p2_hat = self.padded_hat(phi2);

        let xi = &self.symbols.xi;
        let mut combined = Array2::default((2 * n, 2 * n));
        for ((iy, ix), c) in combined.indexed_iter_mut() {
            let div = Complex64::i() * (xi[ix] * p1_hat[[iy, ix]] + xi[iy] * p2_hat[[iy, ix]]);
            *c = self.symbols.phi[[iy, ix]] * (k2 * psi_hat[[iy, ix]] - div);
        }

        let mut u_part = combined.clone();
        self.fft.inverse(&mut u_part);
        let mut g1_part = Array2::default((2 * n, 2 * n));
        let mut g2_part = Array2::default((2 * n, 2 * n));
        for ((iy, ix), c) in combined.indexed_iter() {
            g1_part[[iy, ix]] = Complex64::i() * xi[ix] * c;
            g2_part[[iy, ix]] = Complex64::i() * xi[iy] * c;
        }
        self.fft.inverse(&mut g1_part);
        self.fft.inverse(&mut g2_part);

        [
            u_part.slice(s![0..n, 0..n]).to_owned(),
            g1_part.slice(s![0..n, 0..n]).to_owned(),
            g2_part.slice(s![0..n, 0..n]).to_owned(),
        ]
    }

    fn check_grid(&self, field: &FieldGrid) -> Result<(), SolverError> {
        if field.spec != self.spec {
            return Err(usage("field grid does not match the solver grid"));
        }
        Ok(())
    }

    /// Solves the isotropic problem for the given incident field (a point
    /// source sampled on the grid, or any source density supported on the
    /// scatterer). Returns the total field.
    pub fn solve_isotropic_ctx(
        &self,
        incident: &FieldGrid,
    ) -> Result<(FieldGrid, SolveStats), SolverError> {
        if self.qmat.is_some() {
            return Err(usage("isotropic solver called with an anisotropic medium"));
        }
        self.check_grid(incident)?;
        let n = self.spec.n;
        let k2 = self.wave.wavenumber().powi(2);

        // Scattered-field form: (I - k^2 V q) u_s = k^2 V[q u_i].
        let masked_incident = &incident.values * &self.q.mapv(|v| Complex64::new(v, 0.0));
        let rhs_grid = self.apply_volume(&masked_incident).mapv(|v| v * k2);
        let rhs: Vec<Complex64> = rhs_grid.iter().copied().collect();

        let apply = |x: &[Complex64]| -> Vec<Complex64> {
            let grid = Array2::from_shape_vec((n, n), x.to_vec()).expect("vector length n^2");
            let density = ndarray::Zip::from(&grid)
                .and(&self.q)
                .map_collect(|&u, &qv| u * qv);
            let v = self.apply_volume(&density);
            grid.iter().zip(v.iter()).map(|(xi, vi)| xi - k2 * vi).collect()
        };

        let (scattered, stats) = gmres::gmres(apply, &rhs, self.opts.tolerance, self.opts.max_iterations)
            .map_err(|e| SolverError::NotConverged { iterations: e.iterations, residual: e.residual })?;

        let scattered = Array2::from_shape_vec((n, n), scattered).expect("solution length n^2");
        let total = FieldGrid { spec: self.spec, values: &incident.values + &scattered };
        Ok((total, stats))
    }

    /// Solves the anisotropic problem for an incident field with its
    /// gradient. Returns the total field and its gradient.
    pub fn solve_anisotropic_ctx(
        &self,
        incident: &FieldGrid,
        incident_grad: &[FieldGrid; 2],
    ) -> Result<(FieldGrid, [FieldGrid; 2], SolveStats), SolverError> {
        self.check_grid(incident)?;
        self.check_grid(&incident_grad[0])?;
        self.check_grid(&incident_grad[1])?;
        let n = self.spec.n;

        let densities = |u: &Array2<Complex64>,
                         g1: &Array2<Complex64>,
                         g2: &Array2<Complex64>|
         -> [Array2<Complex64>; 3] {
            let psi = ndarray::Zip::from(u).and(&self.q).map_collect(|&uv, &qv| uv * qv);
            match &self.qmat {
                Some([qxx, qxy, qyy]) => {
                    let p1 = ndarray::Zip::from(g1)
                        .and(g2)
                        .and(qxx)
                        .and(qxy)
                        .map_collect(|&a, &b, &xx, &xy| a * xx + b * xy);
                    let p2 = ndarray::Zip::from(g1)
                        .and(g2)
                        .and(qxy)
                        .and(qyy)
                        .map_collect(|&a, &b, &xy, &yy| a * xy + b * yy);
                    [psi, p1, p2]
                }
                None => [psi, Array2::default((n, n)), Array2::default((n, n))],
            }
        };

        let [psi_i, p1_i, p2_i] =
            densities(&incident.values, &incident_grad[0].values, &incident_grad[1].values);
        let rhs_parts = self.apply_volume_system(&psi_i, &p1_i, &p2_i);
        let mut rhs = Vec::with_capacity(3 * n * n);
        for part in &rhs_parts {
            rhs.extend(part.iter().copied());
        }

        let unpack = |x: &[Complex64]| -> [Array2<Complex64>; 3] {
            let nn = n * n;
            [
                Array2::from_shape_vec((n, n), x[0..nn].to_vec()).expect("block"),
                Array2::from_shape_vec((n, n), x[nn..2 * nn].to_vec()).expect("block"),
                Array2::from_shape_vec((n, n), x[2 * nn..].to_vec()).expect("block"),
            ]
        };

        let apply = |x: &[Complex64]| -> Vec<Complex64> {
            let [u, g1, g2] = unpack(x);
            let [psi, p1, p2] = densities(&u, &g1, &g2);
            let [lu, lg1, lg2] = self.apply_volume_system(&psi, &p1, &p2);
            let mut out = Vec::with_capacity(3 * n * n);
            out.extend(u.iter().zip(lu.iter()).map(|(a, b)| a - b));
            out.extend(g1.iter().zip(lg1.iter()).map(|(a, b)| a - b));
            out.extend(g2.iter().zip(lg2.iter()).map(|(a, b)| a - b));
            out
        };

        let (scattered, stats) = gmres::gmres(apply, &rhs, self.opts.tolerance, self.opts.max_iterations)
            .map_err(|e| SolverError::NotConverged { iterations: e.iterations, residual: e.residual })?;
        let [us, g1s, g2s] = unpack(&scattered);

        let total = FieldGrid { spec: self.spec, values: &incident.values + &us };
        let grad = [
            FieldGrid { spec: self.spec, values: &incident_grad[0].values + &g1s },
            FieldGrid { spec: self.spec, values: &incident_grad[1].values + &g2s },
        ];
        Ok((total, grad, stats))
    }

    /// Evaluates the scattered field and its outward normal derivative on
    /// the measurement circle from the solved total field, through the
    /// volume representation formulas.
    pub fn evaluate_cauchy_ctx(
        &self,
        u: &FieldGrid,
        grad_u: Option<&[FieldGrid; 2]>,
        circle: &MeasurementCircle,
    ) -> Result<CauchyPair, SolverError> {
        self.check_grid(u)?;
        let h = self.spec.spacing();
        if !self.support.is_empty() {
            let clearance = circle.radius() - self.bbox_corner_norm;
            if clearance <= 2.0 * h {
                return Err(usage(format!(
                    "measurement circle too close to the scatterer: clearance {:.4} <= 2h = {:.4}",
                    clearance,
                    2.0 * h
                )));
            }
        }
        if self.qmat.is_some() && grad_u.is_none() {
            return Err(usage("anisotropic media need the solved gradient for trace evaluation"));
        }
        if let Some(g) = grad_u {
            self.check_grid(&g[0])?;
            self.check_grid(&g[1])?;
        }

        let k = self.wave.wavenumber();
        let k2 = k * k;
        let cell_area = h * h;
        let m = circle.len();
        let mut us = vec![Complex64::default(); m];
        let mut dnus = vec![Complex64::default(); m];

        for i in 0..m {
            let x = circle.node(i);
            let nu = circle.normal(i);
            let mut field = Complex64::default();
            let mut normal = Complex64::default();
            for &(iy, ix) in &self.support {
                let c = self.spec.node(ix, iy);
                let d = x - c;
                let r = d.norm();
                let z = k * r;
                let h0 = Complex64::new(libm::j0(z), libm::y0(z));
                let h1 = Complex64::new(libm::j1(z), libm::y1(z));
                let rhat = d * (1.0 / r);
                let nu_dot_rhat = nu.dot(rhat);

                let phi = Complex64::new(0.0, 0.25) * h0;
                let phi_r = Complex64::new(0.0, -0.25 * k) * h1;

                let moment = k2 * self.q[[iy, ix]] * u.values[[iy, ix]];
                field += phi * moment;
                normal += phi_r * nu_dot_rhat * moment;

                if let (Some([qxx, qxy, qyy]), Some(g)) = (&self.qmat, grad_u) {
                    let g1 = g[0].values[[iy, ix]];
                    let g2 = g[1].values[[iy, ix]];
                    let f1 = qxx[[iy, ix]] * g1 + qxy[[iy, ix]] * g2;
                    let f2 = qxy[[iy, ix]] * g1 + qyy[[iy, ix]] * g2;
                    let rhat_dot_f = rhat.x * f1 + rhat.y * f2;
                    let nu_dot_f = nu.x * f1 + nu.y * f2;
                    // grad_c Phi = -phi_r * rhat.
                    field += -phi_r * rhat_dot_f;
                    // nu^T grad_x grad_c Phi = a (nu.rhat) rhat + b nu,
                    // a = -phi_rr + phi_r / r, b = -phi_r / r.
                    let h1d = h0 - h1 / z;
                    let phi_rr = Complex64::new(0.0, -0.25 * k2) * h1d;
                    let a = -phi_rr + phi_r / r;
                    let b = -phi_r / r;
                    normal += a * nu_dot_rhat * rhat_dot_f + b * nu_dot_f;
                }
            }
            us[i] = field * cell_area;
            dnus[i] = normal * cell_area;
        }
        Ok(CauchyPair { us, dnus })
    }
}

/// One-shot isotropic solve; see [`SolverContext::solve_isotropic_ctx`].
pub fn solve_isotropic(
    medium: &Medium,
    ctx: &WaveContext,
    incident: &FieldGrid,
    opts: &SolverOptions,
) -> Result<FieldGrid, SolverError> {
    let solver = SolverContext::new(medium, ctx, opts)?;
    solver.solve_isotropic_ctx(incident).map(|(u, _)| u)
}

/// One-shot anisotropic solve; see [`SolverContext::solve_anisotropic_ctx`].
pub fn solve_anisotropic(
    medium: &Medium,
    ctx: &WaveContext,
    incident: &FieldGrid,
    incident_grad: &[FieldGrid; 2],
    opts: &SolverOptions,
) -> Result<(FieldGrid, [FieldGrid; 2]), SolverError> {
    let solver = SolverContext::new(medium, ctx, opts)?;
    solver
        .solve_anisotropic_ctx(incident, incident_grad)
        .map(|(u, g, _)| (u, g))
}

/// One-shot Cauchy-trace evaluation from a solved field.
pub fn evaluate_cauchy(
    medium: &Medium,
    ctx: &WaveContext,
    u: &FieldGrid,
    grad_u: Option<&[FieldGrid; 2]>,
    circle: &MeasurementCircle,
) -> Result<CauchyPair, SolverError> {
    let opts = SolverOptions {
        n: u.spec().n,
        half_width: u.spec().half_width,
        ..SolverOptions::default()
    };
    let solver = SolverContext::new(medium, ctx, &opts)?;
    solver.evaluate_cauchy_ctx(u, grad_u, circle)
}

/// Point-source incident field sampled on the grid.
///
/// Cells closer than half a mesh width to the source (possible when the
/// measurement circle cuts through a corner of the computational square)
/// get a zeroed sample; such cells lie outside the scatterer support by
/// the solver's margin requirements and never influence the solution on
/// the support.
pub fn point_source_field(ctx: &WaveContext, spec: GridSpec, source: Point) -> FieldGrid {
    let k = ctx.wavenumber();
    let cutoff = 0.5 * spec.spacing();
    FieldGrid::from_fn(spec, |p| {
        let r = p.dist(source);
        if r < cutoff {
            Complex64::default()
        } else {
            Complex64::new(0.0, 0.25) * Complex64::new(libm::j0(k * r), libm::y0(k * r))
        }
    })
}

/// Gradient of the point-source incident field on the grid, with the
/// same near-source cutoff as [`point_source_field`].
pub fn point_source_gradient(ctx: &WaveContext, spec: GridSpec, source: Point) -> [FieldGrid; 2] {
    let k = ctx.wavenumber();
    let cutoff = 0.5 * spec.spacing();
    let component = |axis: usize| {
        FieldGrid::from_fn(spec, |p| {
            let d = p - source;
            let r = d.norm();
            if r < cutoff {
                return Complex64::default();
            }
            let radial = Complex64::new(0.0, -0.25 * k) * Complex64::new(libm::j1(k * r), libm::y1(k * r));
            radial * (if axis == 0 { d.x } else { d.y } / r)
        })
    };
    [component(0), component(1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{
        make_preset_medium, Component, Contrast, ContrastModel, ContrastPreset, Medium,
        PresetGeometry, Shape, ShapeKind,
    };
    use crate::specfun;

    fn disk_medium(radius: f64, center: Point, q: f64) -> Medium {
        Medium::new(vec![Component {
            shape: Shape::new(ShapeKind::Disk { center, radius }),
            contrast: ContrastModel::Constant(Contrast::scalar(q)),
        }])
        .unwrap()
    }

    fn small_opts(n: usize) -> SolverOptions {
        SolverOptions { n, ..SolverOptions::default() }
    }

    /// Closed form of the volume potential of a unit disk indicator:
    /// outside `V = (i pi a / 2k) J1(ka) H0(kr)`, inside
    /// `V = -1/k^2 + (i pi a / 2k) H1(ka) J0(kr)`.
    fn disk_potential_exact(r: f64, a: f64, k: f64) -> Complex64 {
        let i = Complex64::i();
        let pi = std::f64::consts::PI;
        if r >= a {
            i * (0.5 * pi * a / k)
                * libm::j1(k * a)
                * Complex64::new(libm::j0(k * r), libm::y0(k * r))
        } else {
            i * (0.5 * pi * a / k)
                * Complex64::new(libm::j1(k * a), libm::y1(k * a))
                * libm::j0(k * r)
                - Complex64::new(1.0 / (k * k), 0.0)
        }
    }

    #[test]
    fn volume_potential_inverts_helmholtz_on_manufactured_solution() {
        // w = (1 - r^2/rho^2)^4 inside r < rho is a C^3 compactly
        // supported field; V[-(Laplace + k^2) w] must reproduce w, which
        // pins the kernel symbol (including the resonant ring) exactly.
        let ctx = WaveContext::new(8.0);
        let medium = disk_medium(0.5, Point::ORIGIN, 1.0);
        let opts = small_opts(256);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let spec = solver.grid();
        let rho = 0.8f64;
        let k2 = 64.0;

        let density = Array2::from_shape_fn((spec.n, spec.n), |(iy, ix)| {
            let p = spec.node(ix, iy);
            let u = p.norm_sq() / (rho * rho);
            if u >= 1.0 {
                return Complex64::default();
            }
            let lap = -16.0 / (rho * rho) * (1.0 - u).powi(3)
                + 48.0 * p.norm_sq() / rho.powi(4) * (1.0 - u).powi(2);
            Complex64::new(-(lap + k2 * (1.0 - u).powi(4)), 0.0)
        });
        let v = solver.apply_volume(&density);

        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for iy in 0..spec.n {
            for ix in 0..spec.n {
                let p = spec.node(ix, iy);
                let u = p.norm_sq() / (rho * rho);
                let w = if u < 1.0 { (1.0 - u).powi(4) } else { 0.0 };
                worst = worst.max((v[[iy, ix]] - Complex64::new(w, 0.0)).norm());
                scale = scale.max(w);
            }
        }
        assert!(worst / scale < 1e-5, "max deviation {} of scale {}", worst, scale);
    }

    #[test]
    fn volume_potential_matches_disk_closed_form() {
        // Discontinuous density: pointwise sampling costs accuracy near
        // the jump, so compare away from it and in the mean.
        let ctx = WaveContext::new(8.0);
        let medium = disk_medium(0.5, Point::ORIGIN, 1.0);
        let opts = small_opts(256);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let spec = solver.grid();

        let density = Array2::from_shape_fn((spec.n, spec.n), |(iy, ix)| {
            let p = spec.node(ix, iy);
            if p.norm() <= 0.5 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        let v = solver.apply_volume(&density);

        let mut worst: f64 = 0.0;
        let mut err_sq = 0.0;
        let mut ref_sq = 0.0;
        let mut checked = 0;
        for iy in 0..spec.n {
            for ix in 0..spec.n {
                let p = spec.node(ix, iy);
                let r = p.norm();
                if (r - 0.5).abs() < 0.08 || r > 1.8 {
                    continue;
                }
                let exact = disk_potential_exact(r, 0.5, 8.0);
                let err = (v[[iy, ix]] - exact).norm();
                worst = worst.max(err / exact.norm());
                err_sq += err * err;
                ref_sq += exact.norm_sqr();
                checked += 1;
            }
        }
        assert!(checked > 1000);
        assert!(worst < 0.03, "worst relative error {}", worst);
        assert!(
            (err_sq / ref_sq).sqrt() < 3e-3,
            "mean relative error {}",
            (err_sq / ref_sq).sqrt()
        );
    }

    #[test]
    fn zero_contrast_returns_incident() {
        let ctx = WaveContext::new(8.0);
        let medium = Medium::free_space();
        let opts = small_opts(64);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let incident = point_source_field(&ctx, solver.grid(), Point::new(3.0, 0.0));
        let (u, stats) = solver.solve_isotropic_ctx(&incident).unwrap();
        assert_eq!(stats.iterations, 0);
        let diff = (&u.values - &incident.values).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn born_limit_matches_single_application() {
        // At vanishing contrast the scattered field approaches
        // k^2 V[q u_i] with an O(q) relative defect.
        let ctx = WaveContext::new(8.0);
        let q = 1e-4;
        let medium = disk_medium(0.25, Point::ORIGIN, q);
        let opts = small_opts(128);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let incident = point_source_field(&ctx, solver.grid(), Point::new(3.0, 0.0));
        let (u, _) = solver.solve_isotropic_ctx(&incident).unwrap();

        let k2 = 64.0;
        let density = ndarray::Zip::from(&incident.values)
            .and(&solver.q)
            .map_collect(|&ui, &qv| ui * qv);
        let born = solver.apply_volume(&density).mapv(|v| v * k2);
        let scattered = &u.values - &incident.values;
        let num: f64 = (&scattered - &born).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = born.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 1e-3, "born defect {}", num / den);
    }

    #[test]
    fn solver_linearity_in_the_source() {
        // The arbitrary-source variant is linear to solver tolerance.
        let ctx = WaveContext::new(8.0);
        let medium = disk_medium(0.25, Point::new(0.2, -0.1), 0.3);
        let opts = small_opts(64);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let f = FieldGrid::from_fn(solver.grid(), |p| {
            if p.dist(Point::new(0.2, -0.1)) <= 0.25 {
                Complex64::new(p.x, 0.3 - p.y)
            } else {
                Complex64::default()
            }
        });
        let alpha = Complex64::new(1.7, -0.4);
        let f_scaled =
            FieldGrid { spec: f.spec(), values: f.values.mapv(|v| v * alpha) };
        let (u, _) = solver.solve_isotropic_ctx(&f).unwrap();
        let (u_scaled, _) = solver.solve_isotropic_ctx(&f_scaled).unwrap();
        let num: f64 = (&u_scaled.values - &u.values.mapv(|v| v * alpha))
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = u_scaled.values.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 1e-7, "linearity defect {}", num / den);
    }

    #[test]
    fn isotropic_solver_rejects_anisotropic_medium() {
        let ctx = WaveContext::new(8.0);
        let medium = make_preset_medium(PresetGeometry::TwoScatterers, ContrastPreset::Q2);
        let opts = small_opts(64);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let incident = point_source_field(&ctx, solver.grid(), Point::new(3.0, 0.0));
        assert!(matches!(
            solver.solve_isotropic_ctx(&incident),
            Err(SolverError::Usage(_))
        ));
    }

    #[test]
    fn medium_must_fit_computational_disk() {
        let ctx = WaveContext::new(8.0);
        let medium = disk_medium(0.4, Point::new(2.0, 0.0), 0.3);
        match SolverContext::new(&medium, &ctx, &small_opts(64)) {
            Err(SolverError::Usage(_)) => {}
            Err(other) => panic!("expected usage error, got {}", other),
            Ok(_) => panic!("expected usage error, got a context"),
        }
    }

    #[test]
    fn anisotropic_reduces_to_isotropic_at_zero_matrix() {
        let ctx = WaveContext::new(8.0);
        let medium = disk_medium(0.25, Point::ORIGIN, 0.3);
        let opts = small_opts(128);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let source = Point::new(3.0, 0.0);
        let incident = point_source_field(&ctx, solver.grid(), source);
        let grad = point_source_gradient(&ctx, solver.grid(), source);
        let circle = MeasurementCircle::build(3.0, 32);

        let (u_iso, _) = solver.solve_isotropic_ctx(&incident).unwrap();
        let trace_iso = solver.evaluate_cauchy_ctx(&u_iso, None, &circle).unwrap();
        let (u_aniso, g, _) = solver.solve_anisotropic_ctx(&incident, &grad).unwrap();
        let trace_aniso = solver.evaluate_cauchy_ctx(&u_aniso, Some(&g), &circle).unwrap();

        let num: f64 = trace_iso
            .us
            .iter()
            .zip(&trace_aniso.us)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = trace_iso.us.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 1e-8, "traces differ by {}", num / den);
    }

    #[test]
    fn anisotropic_gradient_is_consistent_with_field() {
        // Away from the contrast jump the solved gradient matches a
        // centered difference of the solved field.
        let ctx = WaveContext::new(8.0);
        let medium = make_preset_medium(PresetGeometry::TwoScatterers, ContrastPreset::Q3);
        let opts = small_opts(256);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let source = Point::new(3.0, 0.0);
        let incident = point_source_field(&ctx, solver.grid(), source);
        let grad = point_source_gradient(&ctx, solver.grid(), source);
        let (u, g, _) = solver.solve_anisotropic_ctx(&incident, &grad).unwrap();

        let spec = solver.grid();
        let h = spec.spacing();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for iy in 2..spec.n - 2 {
            for ix in 2..spec.n - 2 {
                let p = spec.node(ix, iy);
                if p.norm() > 1.9 || medium.support_distance(p) < 0.15 {
                    continue;
                }
                let fd_x = (u.values[[iy, ix + 1]] - u.values[[iy, ix - 1]]) / (2.0 * h);
                let fd_y = (u.values[[iy + 1, ix]] - u.values[[iy - 1, ix]]) / (2.0 * h);
                num += (fd_x - g[0].values[[iy, ix]]).norm_sqr()
                    + (fd_y - g[1].values[[iy, ix]]).norm_sqr();
                den += g[0].values[[iy, ix]].norm_sqr() + g[1].values[[iy, ix]].norm_sqr();
            }
        }
        let rel = (num / den).sqrt();
        // Centered differences are O(h^2); the bound leaves headroom.
        assert!(rel < 1e-2, "gradient inconsistency {}", rel);
    }

    #[test]
    fn cauchy_trace_of_free_space_is_zero() {
        let ctx = WaveContext::new(8.0);
        let medium = Medium::free_space();
        let opts = small_opts(64);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let incident = point_source_field(&ctx, solver.grid(), Point::new(3.0, 0.0));
        let (u, _) = solver.solve_isotropic_ctx(&incident).unwrap();
        let circle = MeasurementCircle::build(3.0, 16);
        let pair = solver.evaluate_cauchy_ctx(&u, None, &circle).unwrap();
        assert!(pair.us.iter().all(|c| c.norm() == 0.0));
        assert!(pair.dnus.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn cauchy_evaluation_matches_specfun_kernels() {
        // The inlined kernels in the trace evaluation agree with the
        // specfun closed forms on a one-cell "medium".
        let ctx = WaveContext::new(8.0);
        let x = Point::new(3.0, 0.0);
        let nu = Point::new(1.0, 0.0);
        let c = Point::new(0.31, -0.42);
        let k = ctx.wavenumber();
        let z = k * x.dist(c);
        let h0 = Complex64::new(libm::j0(z), libm::y0(z));
        let h1 = Complex64::new(libm::j1(z), libm::y1(z));
        let phi = Complex64::new(0.0, 0.25) * h0;
        assert!((phi - specfun::fundamental_solution(x, c, &ctx).unwrap()).norm() < 1e-15);
        let d = x - c;
        let r = d.norm();
        let phi_r = Complex64::new(0.0, -0.25 * k) * h1;
        let dn = phi_r * (d.dot(nu) / r);
        assert!(
            (dn - specfun::fundamental_normal_derivative(x, nu, c, &ctx).unwrap()).norm() < 1e-15
        );
        let (gx, gy) = specfun::fundamental_source_gradient(x, c, &ctx).unwrap();
        let rhat = d * (1.0 / r);
        assert!((-phi_r * rhat.x - gx).norm() < 1e-15);
        assert!((-phi_r * rhat.y - gy).norm() < 1e-15);
        let (hx, hy) = specfun::fundamental_normal_source_hessian(x, nu, c, &ctx).unwrap();
        let h1d = h0 - h1 / z;
        let phi_rr = Complex64::new(0.0, -0.25 * k * k) * h1d;
        let a = -phi_rr + phi_r / r;
        let b = -phi_r / r;
        let nu_dot_rhat = nu.dot(rhat);
        assert!((a * nu_dot_rhat * rhat.x + b * nu.x - hx).norm() < 1e-14);
        assert!((a * nu_dot_rhat * rhat.y + b * nu.y - hy).norm() < 1e-14);
    }

    #[test]
    fn radiation_condition_at_large_radius() {
        // On a circle of radius 10 the normal derivative approaches
        // i k u^s within 10% in the 2-norm.
        let ctx = WaveContext::new(8.0);
        let medium = disk_medium(0.25, Point::ORIGIN, 0.3);
        let opts = SolverOptions { n: 128, half_width: 0.6, ..SolverOptions::default() };
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let circle = MeasurementCircle::build(10.0, 64);
        let source = circle.node(0);
        let incident = point_source_field(&ctx, solver.grid(), source);
        let (u, _) = solver.solve_isotropic_ctx(&incident).unwrap();
        let pair = solver.evaluate_cauchy_ctx(&u, None, &circle).unwrap();

        let ik = Complex64::new(0.0, ctx.wavenumber());
        let num: f64 = pair
            .dnus
            .iter()
            .zip(&pair.us)
            .map(|(d, u)| (d - ik * u).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = pair.us.iter().map(|u| (ik * u).norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 0.1, "radiation defect {}", num / den);
    }

    #[test]
    fn solver_traces_match_disk_series() {
        // Separation-of-variables oracle: at n = 256 the solver's traces
        // come within 1% (field) and 2% (normal derivative) in the
        // relative 2-norm over the circle nodes.
        let ctx = WaveContext::new(8.0);
        let medium = disk_medium(0.25, Point::ORIGIN, 0.3);
        let opts = small_opts(256);
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let circle = MeasurementCircle::build(3.0, 100);
        let source = circle.node(0);
        let incident = point_source_field(&ctx, solver.grid(), source);
        let (u, _) = solver.solve_isotropic_ctx(&incident).unwrap();
        let numeric = solver.evaluate_cauchy_ctx(&u, None, &circle).unwrap();
        let exact = mie_disk_reference(0.25, Point::ORIGIN, 0.3, &ctx, source, &circle).unwrap();

        let rel = |a: &[Complex64], b: &[Complex64]| -> f64 {
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
            num / den
        };
        let field_err = rel(&numeric.us, &exact.us);
        let deriv_err = rel(&numeric.dnus, &exact.dnus);
        assert!(field_err < 0.01, "field trace error {}", field_err);
        assert!(deriv_err < 0.02, "derivative trace error {}", deriv_err);
    }

    #[test]
    fn grid_convergence_of_traces() {
        // Trace differences between successive grids shrink (no
        // divergence) for the kite and the two-scatterer geometry.
        let ctx = WaveContext::new(8.0);
        let circle = MeasurementCircle::build(3.0, 24);
        let source = circle.node(5);
        for geometry in [PresetGeometry::OneScatterer, PresetGeometry::TwoScatterers] {
            let medium = make_preset_medium(geometry, ContrastPreset::Q1);
            let trace = |n: usize| {
                let opts = small_opts(n);
                let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
                let incident = point_source_field(&ctx, solver.grid(), source);
                let (u, _) = solver.solve_isotropic_ctx(&incident).unwrap();
                solver.evaluate_cauchy_ctx(&u, None, &circle).unwrap()
            };
            let t64 = trace(64);
            let t128 = trace(128);
            let t256 = trace(256);
            let d_coarse: f64 = t64
                .us
                .iter()
                .zip(&t128.us)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let d_fine: f64 = t128
                .us
                .iter()
                .zip(&t256.us)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(
                d_fine < d_coarse,
                "{:?}: successive differences {} then {}",
                geometry,
                d_coarse,
                d_fine
            );
        }
    }
}
