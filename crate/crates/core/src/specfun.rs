//! Cylindrical special functions and the 2D Helmholtz fundamental solution.
//!
//! Everything downstream (forward solvers, data synthesis, imaging
//! functionals) consumes the kernels defined here: the Bessel functions
//! $J_m$, $Y_m$, the outgoing Hankel function $H^{(1)}_m = J_m + i Y_m$,
//! the fundamental solution $\Phi(x,y) = \frac{i}{4} H^{(1)}_0(k|x-y|)$
//! and its first and mixed second directional derivatives.
//!
//! Base evaluations of $J_m$ and $Y_m$ delegate to `libm` (the msun
//! routines: series near zero, backward/continued-fraction recurrence for
//! $J_m$ at order above argument, upward recurrence for $Y_m$), which is
//! accurate to a few ulp over the argument range used here. Negative
//! orders are folded with the reflection rule
//! $Z_{-m}(t) = (-1)^m Z_m(t)$ so that the Hankel reflection identity
//! holds exactly by construction.

use num_complex::Complex64;

use crate::point::Point;

/// Largest Bessel/Hankel order the crate evaluates.
///
/// The far-field transform needs orders up to its truncation plus the
/// convergence-study margin; 128 leaves ample headroom over the default
/// truncation order 20.
pub const MAX_ORDER: i32 = 128;

/// Errors from special-function evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecFunError {
    /// Requested order exceeds [`MAX_ORDER`].
    OrderTooLarge { order: i32 },
    /// Argument where the function diverges (e.g. $Y_m$ at zero, or the
    /// fundamental solution on its diagonal).
    SingularArgument,
    /// Negative argument outside the real-valued domain.
    NegativeArgument { t: f64 },
}

impl std::fmt::Display for SpecFunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpecFunError::OrderTooLarge { order } => {
                write!(f, "order {} exceeds the supported maximum {}", order, MAX_ORDER)
            }
            SpecFunError::SingularArgument => write!(f, "argument lies on a singularity"),
            SpecFunError::NegativeArgument { t } => {
                write!(f, "argument {} is negative", t)
            }
        }
    }
}

impl std::error::Error for SpecFunError {}

/// Wavenumber context for all kernel evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveContext {
    k: f64,
}

impl WaveContext {
    /// Panics if `k` is not strictly positive and finite.
    pub fn new(k: f64) -> Self {
        assert!(k > 0.0 && k.is_finite(), "wavenumber must be positive, got {}", k);
        WaveContext { k }
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }
}

fn check_order(order: i32) -> Result<i32, SpecFunError> {
    let m = order.abs();
    if m > MAX_ORDER {
        Err(SpecFunError::OrderTooLarge { order })
    } else {
        Ok(m)
    }
}

/// Sign factor $(-1)^m$ of the negative-order reflection rule.
fn reflection_sign(order: i32) -> f64 {
    if order >= 0 || order % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bessel function of the first kind $J_m(t)$ for integer order.
pub fn bessel_j(order: i32, t: f64) -> Result<f64, SpecFunError> {
    let m = check_order(order)?;
    if t < 0.0 {
        return Err(SpecFunError::NegativeArgument { t });
    }
    Ok(reflection_sign(order) * libm::jn(m, t))
}

/// Bessel function of the second kind $Y_m(t)$, $t > 0$.
pub fn bessel_y(order: i32, t: f64) -> Result<f64, SpecFunError> {
    let m = check_order(order)?;
    if t < 0.0 {
        return Err(SpecFunError::NegativeArgument { t });
    }
    if t == 0.0 {
        return Err(SpecFunError::SingularArgument);
    }
    Ok(reflection_sign(order) * libm::yn(m, t))
}

/// Derivative $J_m'(t) = \frac{1}{2}(J_{m-1}(t) - J_{m+1}(t))$.
pub fn bessel_j_derivative(order: i32, t: f64) -> Result<f64, SpecFunError> {
    check_order(order)?;
    Ok(0.5 * (bessel_j(order - 1, t)? - bessel_j(order + 1, t)?))
}

/// Derivative $Y_m'(t) = \frac{1}{2}(Y_{m-1}(t) - Y_{m+1}(t))$.
pub fn bessel_y_derivative(order: i32, t: f64) -> Result<f64, SpecFunError> {
    check_order(order)?;
    Ok(0.5 * (bessel_y(order - 1, t)? - bessel_y(order + 1, t)?))
}

/// First-kind Hankel function $H^{(1)}_m(t) = J_m(t) + i Y_m(t)$, $t > 0$.
///
/// Satisfies $H^{(1)}_{-m}(t) = (-1)^m H^{(1)}_m(t)$ exactly.
pub fn hankel1(order: i32, t: f64) -> Result<Complex64, SpecFunError> {
    Ok(Complex64::new(bessel_j(order, t)?, bessel_y(order, t)?))
}

/// Derivative of the first-kind Hankel function.
pub fn hankel1_derivative(order: i32, t: f64) -> Result<Complex64, SpecFunError> {
    Ok(0.5 * (hankel1(order - 1, t)? - hankel1(order + 1, t)?))
}

/// Outgoing fundamental solution $\Phi(x,y) = \frac{i}{4} H^{(1)}_0(k|x-y|)$.
///
/// Symmetric in its two arguments; errors when $x = y$.
pub fn fundamental_solution(x: Point, y: Point, ctx: &WaveContext) -> Result<Complex64, SpecFunError> {
    let r = x.dist(y);
    if r == 0.0 {
        return Err(SpecFunError::SingularArgument);
    }
    Ok(Complex64::new(0.0, 0.25) * hankel1(0, ctx.wavenumber() * r)?)
}

/// Imaginary part of the fundamental solution, $\frac{1}{4} J_0(k|x-z|)$.
///
/// Unlike [`fundamental_solution`] this extends continuously to the
/// diagonal ($J_0(0) = 1$), so coincident points are allowed.
pub fn fundamental_imag(x: Point, z: Point, ctx: &WaveContext) -> f64 {
    0.25 * libm::j0(ctx.wavenumber() * x.dist(z))
}

/// Directional derivative $\partial_\nu \Phi(\cdot, z)$ at `x` along the
/// unit vector `nu`:
/// $-\frac{ik}{4} H^{(1)}_1(k|x-z|) \, \frac{(x-z)\cdot\nu}{|x-z|}$.
pub fn fundamental_normal_derivative(
    x: Point,
    nu: Point,
    z: Point,
    ctx: &WaveContext,
) -> Result<Complex64, SpecFunError> {
    let d = x - z;
    let r = d.norm();
    if r == 0.0 {
        return Err(SpecFunError::SingularArgument);
    }
    let k = ctx.wavenumber();
    let radial = Complex64::new(0.0, -0.25 * k) * hankel1(1, k * r)?;
    Ok(radial * (d.dot(nu) / r))
}

/// Gradient of $\Phi(x, \cdot)$ with respect to the second argument at `c`:
/// $\nabla_c \Phi(x,c) = \frac{ik}{4} H^{(1)}_1(k|x-c|) \, \frac{x-c}{|x-c|}$.
pub fn fundamental_source_gradient(
    x: Point,
    c: Point,
    ctx: &WaveContext,
) -> Result<(Complex64, Complex64), SpecFunError> {
    let d = x - c;
    let r = d.norm();
    if r == 0.0 {
        return Err(SpecFunError::SingularArgument);
    }
    let k = ctx.wavenumber();
    // d/dr of (i/4) H0(kr) is -(ik/4) H1(kr); the r-gradient in c is -(x-c)/r.
    let radial = Complex64::new(0.0, 0.25 * k) * hankel1(1, k * r)?;
    Ok((radial * (d.x / r), radial * (d.y / r)))
}

/// Mixed second derivative $\nu^\top \nabla_x \nabla_c^\top \Phi(x,c)$,
/// returned as the row vector acting on source-side densities.
///
/// With $\varphi(r) = \frac{i}{4} H^{(1)}_0(kr)$ and $\hat r = (x-c)/r$:
/// $\nabla_x \nabla_c^\top \Phi
///   = -\varphi''(r)\, \hat r \hat r^\top
///     - \frac{\varphi'(r)}{r} (I - \hat r \hat r^\top)$.
pub fn fundamental_normal_source_hessian(
    x: Point,
    nu: Point,
    c: Point,
    ctx: &WaveContext,
) -> Result<(Complex64, Complex64), SpecFunError> {
    let d = x - c;
    let r = d.norm();
    if r == 0.0 {
        return Err(SpecFunError::SingularArgument);
    }
    let k = ctx.wavenumber();
    let h1 = hankel1(1, k * r)?;
    let h1d = hankel1_derivative(1, k * r)?;
    let phi_p = Complex64::new(0.0, -0.25 * k) * h1;
    let phi_pp = Complex64::new(0.0, -0.25 * k * k) * h1d;
    let rhat = d * (1.0 / r);
    let nu_dot_rhat = nu.dot(rhat);
    // Row vector nu^T [ -phi'' rr^T - (phi'/r)(I - rr^T) ].
    let a = -phi_pp + phi_p / r;
    let b = -phi_p / r;
    Ok((
        a * (nu_dot_rhat * rhat.x) + b * nu.x,
        a * (nu_dot_rhat * rhat.y) + b * nu.y,
    ))
}

/// Closed form of the plane-wave superposition integral over the unit
/// circle, $\int_{S^1} e^{-ik(z-x)\cdot\hat y} \, ds(\hat y) = 2\pi J_0(k|x-z|)$.
pub fn herglotz_point(x: Point, z: Point, ctx: &WaveContext) -> f64 {
    2.0 * std::f64::consts::PI * libm::j0(ctx.wavenumber() * x.dist(z))
}
