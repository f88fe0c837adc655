//! Fourier symbols of the periodized volume-potential kernel.
//!
//! The free-space kernel $\Phi(x) = \frac{i}{4}H^{(1)}_0(k|x|)$ is
//! truncated to the disk $|x| \le T$ with $T = 2A$ and periodized over
//! the torus of side $L = 4A$. For sources and targets inside the disk
//! of radius $A$ the circular convolution with the periodized kernel
//! equals the free-space volume potential exactly, so the potential can
//! be applied as a pointwise multiplier in frequency space.
//!
//! The truncated kernel has a closed-form transform: with $\rho = |\xi|$,
//!
//! $\hat\Phi_T(\rho) = \frac{1 + \frac{i\pi T}{2}\big(\rho H^{(1)}_0(kT)
//!   J_1(\rho T) - k H^{(1)}_1(kT) J_0(\rho T)\big)}{\rho^2 - k^2}$,
//!
//! with the removable limits at $\rho = 0$ and $\rho = k$ evaluated
//! explicitly. Spectral derivative factors $i\xi$ (with the Nyquist
//! frequency zeroed, which keeps the discrete gradient/divergence pair
//! exactly skew-adjoint) turn the same multiplier into the gradient,
//! divergence and gradient-of-divergence of the potential.

use ndarray::Array2;
use num_complex::Complex64;

/// Precomputed multiplier data on the padded `2n x 2n` frequency grid.
pub struct KernelSymbols {
    /// $\hat\Phi_T$ at each discrete frequency.
    pub phi: Array2<Complex64>,
    /// Signed frequency component per padded index, Nyquist zeroed.
    pub xi: Vec<f64>,
}

impl KernelSymbols {
    /// Builds the symbols for a physical grid of `n` cells per axis over
    /// the square of half-width `a`, at wavenumber `k`.
    pub fn build(k: f64, n: usize, a: f64) -> Self {
        let padded = 2 * n;
        let period = 4.0 * a;
        let truncation = 2.0 * a;

        let h0_kt = hankel0(k * truncation);
        let h1_kt = hankel1(k * truncation);

        let xi: Vec<f64> = (0..padded)
            .map(|p| {
                let signed = if p <= n { p as isize } else { p as isize - padded as isize };
                if signed.unsigned_abs() == n {
                    0.0 // Nyquist: zeroed for the derivative symbols
                } else {
                    2.0 * std::f64::consts::PI * signed as f64 / period
                }
            })
            .collect();

        // Frequency magnitudes reuse the raw (non-zeroed) Nyquist value:
        // the potential symbol itself is well defined there.
        let xi_raw: Vec<f64> = (0..padded)
            .map(|p| {
                let signed = if p <= n { p as isize } else { p as isize - padded as isize };
                2.0 * std::f64::consts::PI * signed as f64 / period
            })
            .collect();

        let phi = Array2::from_shape_fn((padded, padded), |(i, j)| {
            let rho = xi_raw[i].hypot(xi_raw[j]);
            truncated_kernel_transform(rho, k, truncation, h0_kt, h1_kt)
        });

        KernelSymbols { phi, xi }
    }
}

fn hankel0(t: f64) -> Complex64 {
    Complex64::new(libm::j0(t), libm::y0(t))
}

fn hankel1(t: f64) -> Complex64 {
    Complex64::new(libm::j1(t), libm::y1(t))
}

/// $\hat\Phi_T(\rho)$ for the disk-truncated outgoing kernel.
fn truncated_kernel_transform(
    rho: f64,
    k: f64,
    t: f64,
    h0_kt: Complex64,
    h1_kt: Complex64,
) -> Complex64 {
    let i = Complex64::i();
    let pi = std::f64::consts::PI;
    if rho == 0.0 {
        return -(Complex64::new(1.0, 0.0) - i * (0.5 * pi * t * k) * h1_kt) / (k * k);
    }
    if (rho - k).abs() < 1e-9 * k {
        // Removable singularity on the resonant ring.
        let kt = k * t;
        return i * (0.25 * pi * t * t)
            * (h0_kt * libm::j0(kt) + h1_kt * libm::j1(kt));
    }
    let numerator = Complex64::new(1.0, 0.0)
        + i * (0.5 * pi * t) * (rho * h0_kt * libm::j1(rho * t) - k * h1_kt * libm::j0(rho * t));
    numerator / (rho * rho - k * k)
}
