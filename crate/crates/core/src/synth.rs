//! Measurement-circle data synthesis, the multiplicative noise model and
//! the `nfd 1` data file format.
//!
//! A full data set holds the scattered field and its normal derivative
//! sampled on the measurement circle for every point source on the same
//! circle: two `m x m` complex matrices with `Us[i][j] = u^s(x_i, y_j)`.
//! Synthesis runs one forward solve per source (columns are independent
//! and computed in parallel).

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::forward::{
    point_source_field, point_source_gradient, SolveStats, SolverContext, SolverError,
    SolverOptions,
};
use crate::media::Medium;
use crate::point::Point;
use crate::specfun::WaveContext;

/// Uniform discretization of the measurement circle.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementCircle {
    radius: f64,
    nodes: Vec<Point>,
}

impl MeasurementCircle {
    /// Builds the circle of the given radius with `m` uniformly spaced
    /// nodes, node 0 at angle zero.
    ///
    /// Panics unless `radius > 0` and `m >= 8`.
    pub fn build(radius: f64, m: usize) -> Self {
        assert!(radius > 0.0, "circle radius must be positive");
        assert!(m >= 8, "need at least 8 nodes, got {}", m);
        let nodes = (0..m)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                Point::new(radius * theta.cos(), radius * theta.sin())
            })
            .collect();
        MeasurementCircle { radius, nodes }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    /// Outward unit normal at node `i`.
    pub fn normal(&self, i: usize) -> Point {
        self.nodes[i] * (1.0 / self.radius)
    }

    /// Trapezoid quadrature weight per node, `2 pi R / m`.
    pub fn weight(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius / self.nodes.len() as f64
    }
}

/// Parameters of the multiplicative noise applied to a data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
    /// Whether the scattered field and its normal derivative share one
    /// perturbation matrix draw.
    pub shared: bool,
}

/// Near-field Cauchy data over the full source/receiver circle.
#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldData {
    pub circle: MeasurementCircle,
    pub k: f64,
    /// `us[[i, j]] = u^s(x_i, y_j)`.
    pub us: Array2<Complex64>,
    /// `dnus[[i, j]] = (d/d nu) u^s(x_i, y_j)`, normal at the receiver.
    pub dnus: Array2<Complex64>,
    pub noise: Option<NoiseSpec>,
}

/// Errors from data synthesis and file handling.
#[derive(Debug)]
pub enum DataError {
    /// A forward solve failed for the given source index.
    Solver { source: usize, error: SolverError },
    Io(std::io::Error),
    /// Malformed data file, with the 1-based offending line.
    Parse { line: usize, message: String },
    UnsupportedVersion { found: String },
    DimensionMismatch { expected: usize, found: usize },
}

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataError::Solver { source, error } => {
                write!(f, "forward solve for source {} failed: {}", source, error)
            }
            DataError::Io(e) => write!(f, "io error: {}", e),
            DataError::Parse { line, message } => write!(f, "line {}: {}", line, message),
            DataError::UnsupportedVersion { found } => {
                write!(f, "unsupported format version '{}' (expected 'nfd 1')", found)
            }
            DataError::DimensionMismatch { expected, found } => {
                write!(f, "expected {} matrix entries, found {}", expected, found)
            }
        }
    }
}

impl std::error::Error for DataError {}

impl From<std::io::Error> for DataError {
    fn from(e: std::io::Error) -> Self {
        DataError::Io(e)
    }
}

/// Synthesizes clean Cauchy data for every source on the circle.
pub fn generate_data(
    medium: &Medium,
    ctx: &WaveContext,
    circle: &MeasurementCircle,
    opts: &SolverOptions,
) -> Result<NearFieldData, DataError> {
    generate_data_verbose(medium, ctx, circle, opts).map(|(data, _)| data)
}

/// As [`generate_data`], additionally returning per-source solve
/// statistics in source order.
pub fn generate_data_verbose(
    medium: &Medium,
    ctx: &WaveContext,
    circle: &MeasurementCircle,
    opts: &SolverOptions,
) -> Result<(NearFieldData, Vec<SolveStats>), DataError> {
    let solver = SolverContext::new(medium, ctx, opts)
        .map_err(|error| DataError::Solver { source: 0, error })?;
    let m = circle.len();
    let anisotropic = !medium.is_isotropic();

    let columns: Result<Vec<_>, DataError> = (0..m)
        .into_par_iter()
        .map(|j| {
            let source = circle.node(j);
            let wrap = |error: SolverError| DataError::Solver { source: j, error };
            let incident = point_source_field(ctx, solver.grid(), source);
            let (pair, stats) = if anisotropic {
                let grad = point_source_gradient(ctx, solver.grid(), source);
                let (u, g, stats) =
                    solver.solve_anisotropic_ctx(&incident, &grad).map_err(wrap)?;
                let pair = solver.evaluate_cauchy_ctx(&u, Some(&g), circle).map_err(wrap)?;
                (pair, stats)
            } else {
                let (u, stats) = solver.solve_isotropic_ctx(&incident).map_err(wrap)?;
                let pair = solver.evaluate_cauchy_ctx(&u, None, circle).map_err(wrap)?;
                (pair, stats)
            };
            Ok((j, pair, stats))
        })
        .collect();
    let columns = columns?;

    let mut us = Array2::default((m, m));
    let mut dnus = Array2::default((m, m));
    let mut stats = vec![SolveStats { iterations: 0, residual: 0.0 }; m];
    for (j, pair, st) in columns {
        for i in 0..m {
            us[[i, j]] = pair.us[i];
            dnus[[i, j]] = pair.dnus[i];
        }
        stats[j] = st;
    }

    Ok((
        NearFieldData { circle: circle.clone(), k: ctx.wavenumber(), us, dnus, noise: None },
        stats,
    ))
}

/// Applies the multiplicative noise model: each entry is scaled by
/// `1 + delta * E[i][j]` where `E` is a random complex matrix normalized
/// to unit Frobenius norm. With `shared` the derivative data reuses the
/// same draw, otherwise an independent second matrix is drawn.
/// Deterministic in `seed`; `delta = 0` returns the input unchanged.
pub fn add_noise(data: &NearFieldData, delta: f64, seed: u64, shared: bool) -> NearFieldData {
    assert!(delta >= 0.0, "noise level must be nonnegative");
    if delta == 0.0 {
        return data.clone();
    }
    let m = data.circle.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e_us = draw_unit_frobenius(&mut rng, m);
    let e_dnus = if shared { e_us.clone() } else { draw_unit_frobenius(&mut rng, m) };

    let one = Complex64::new(1.0, 0.0);
    let us = ndarray::Zip::from(&data.us)
        .and(&e_us)
        .map_collect(|&u, &e| u * (one + delta * e));
    let dnus = ndarray::Zip::from(&data.dnus)
        .and(&e_dnus)
        .map_collect(|&u, &e| u * (one + delta * e));

    NearFieldData {
        circle: data.circle.clone(),
        k: data.k,
        us,
        dnus,
        noise: Some(NoiseSpec { delta, seed, shared }),
    }
}

/// Uniform complex matrix rescaled to unit Frobenius norm.
fn draw_unit_frobenius(rng: &mut ChaCha8Rng, m: usize) -> Array2<Complex64> {
    let mut e = Array2::from_shape_simple_fn((m, m), || {
        Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
    });
    let norm = e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    e.mapv_inplace(|c| c / norm);
    e
}

/// Serializes a data set in the `nfd 1` text format:
/// the version line, a header `k R m delta seed shared`, then `m*m`
/// rows `i j Re(us) Im(us) Re(dnus) Im(dnus)` in row-major order.
/// Floats carry 17 significant digits, enough for exact round trips.
pub fn save_nfd(data: &NearFieldData, path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    let m = data.circle.len();
    out.push_str("nfd 1\n");
    let (delta, seed, shared) = match data.noise {
        Some(NoiseSpec { delta, seed, shared }) => (delta, seed, shared),
        None => (0.0, 0, true),
    };
    let _ = writeln!(
        out,
        "{:.16e} {:.16e} {} {:.16e} {} {}",
        data.k,
        data.circle.radius(),
        m,
        delta,
        seed,
        if shared { 1 } else { 0 }
    );
    for i in 0..m {
        for j in 0..m {
            let u = data.us[[i, j]];
            let d = data.dnus[[i, j]];
            let _ = writeln!(
                out,
                "{} {} {:.16e} {:.16e} {:.16e} {:.16e}",
                i, j, u.re, u.im, d.re, d.im
            );
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a data set written by [`save_nfd`].
pub fn load_nfd(path: &Path) -> Result<NearFieldData, DataError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, version) = lines
        .next()
        .ok_or(DataError::Parse { line: 1, message: "empty file".into() })?;
    if version.trim() != "nfd 1" {
        return Err(DataError::UnsupportedVersion { found: version.trim().to_string() });
    }

    let (line_no, header) = lines
        .next()
        .ok_or(DataError::Parse { line: 2, message: "missing header".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(DataError::Parse {
            line: line_no + 1,
            message: format!("header needs 6 fields, found {}", fields.len()),
        });
    }
    let parse_f64 = |s: &str, line: usize| -> Result<f64, DataError> {
        let v: f64 = s
            .parse()
            .map_err(|_| DataError::Parse { line, message: format!("bad number '{}'", s) })?;
        if !v.is_finite() {
            return Err(DataError::Parse { line, message: format!("non-finite value '{}'", s) });
        }
        Ok(v)
    };
    let k = parse_f64(fields[0], line_no + 1)?;
    let radius = parse_f64(fields[1], line_no + 1)?;
    let m: usize = fields[2].parse().map_err(|_| DataError::Parse {
        line: line_no + 1,
        message: format!("bad node count '{}'", fields[2]),
    })?;
    let delta = parse_f64(fields[3], line_no + 1)?;
    let seed: u64 = fields[4].parse().map_err(|_| DataError::Parse {
        line: line_no + 1,
        message: format!("bad seed '{}'", fields[4]),
    })?;
    let shared = match fields[5] {
        "0" => false,
        "1" => true,
        other => {
            return Err(DataError::Parse {
                line: line_no + 1,
                message: format!("bad shared flag '{}'", other),
            })
        }
    };

    let mut us = Array2::default((m, m));
    let mut dnus = Array2::default((m, m));
    let mut count = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(DataError::Parse {
                line: line_no,
                message: format!("entry needs 6 fields, found {}", fields.len()),
            });
        }
        let i: usize = fields[0].parse().map_err(|_| DataError::Parse {
            line: line_no,
            message: format!("bad row index '{}'", fields[0]),
        })?;
        let j: usize = fields[1].parse().map_err(|_| DataError::Parse {
            line: line_no,
            message: format!("bad column index '{}'", fields[1]),
        })?;
        if count >= m * m {
            return Err(DataError::DimensionMismatch { expected: m * m, found: count + 1 });
        }
        let (expect_i, expect_j) = (count / m, count % m);
        if i != expect_i || j != expect_j {
            return Err(DataError::Parse {
                line: line_no,
                message: format!(
                    "entry ({}, {}) out of row-major order, expected ({}, {})",
                    i, j, expect_i, expect_j
                ),
            });
        }
        us[[i, j]] = Complex64::new(parse_f64(fields[2], line_no)?, parse_f64(fields[3], line_no)?);
        dnus[[i, j]] =
            Complex64::new(parse_f64(fields[4], line_no)?, parse_f64(fields[5], line_no)?);
        count += 1;
    }
    if count != m * m {
        return Err(DataError::DimensionMismatch { expected: m * m, found: count });
    }

    let noise = if delta > 0.0 { Some(NoiseSpec { delta, seed, shared }) } else { None };
    Ok(NearFieldData { circle: MeasurementCircle::build(radius, m), k, us, dnus, noise })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn circle_quarter_points() {
        let circle = MeasurementCircle::build(3.0, 8);
        let expect = [
            Point::new(3.0, 0.0),
            Point::new(0.0, 3.0),
            Point::new(-3.0, 0.0),
            Point::new(0.0, -3.0),
        ];
        for (quarter, e) in expect.iter().enumerate() {
            let node = circle.node(2 * quarter);
            assert!(node.dist(*e) < 1e-14, "node {} = {:?}", 2 * quarter, node);
        }
    }

    #[test]
    fn circle_weights_sum_to_circumference() {
        let circle = MeasurementCircle::build(3.0, 100);
        assert!((circle.weight() - 2.0 * std::f64::consts::PI * 3.0 / 100.0).abs() < 1e-15);
        let total = circle.weight() * circle.len() as f64;
        assert!((total - 2.0 * std::f64::consts::PI * 3.0).abs() < 1e-12);
    }

    #[test]
    fn circle_normals_are_radial_units() {
        let circle = MeasurementCircle::build(2.5, 16);
        for i in 0..circle.len() {
            let n = circle.normal(i);
            assert!((n.norm() - 1.0).abs() < 1e-14);
            assert!(n.dist(circle.node(i) * (1.0 / 2.5)) < 1e-14);
        }
    }

    fn sample_data(m: usize) -> NearFieldData {
        let mut state = 7u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        NearFieldData {
            circle: MeasurementCircle::build(3.0, m),
            k: 8.0,
            us: Array2::from_shape_simple_fn((m, m), || Complex64::new(next(), next())),
            dnus: Array2::from_shape_simple_fn((m, m), || Complex64::new(next(), next())),
            noise: None,
        }
    }

    #[test]
    fn noise_is_identity_at_zero_level() {
        let data = sample_data(8);
        let noisy = add_noise(&data, 0.0, 42, true);
        assert_eq!(noisy, data);
    }

    #[test]
    fn noise_matrix_has_unit_frobenius_norm() {
        for seed in [1u64, 7, 123456] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = draw_unit_frobenius(&mut rng, 12);
            let norm = e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "seed {}: norm {}", seed, norm);
        }
    }

    #[test]
    fn noise_is_deterministic_and_shared() {
        let data = sample_data(10);
        let a = add_noise(&data, 0.5, 9, true);
        let b = add_noise(&data, 0.5, 9, true);
        assert_eq!(a, b);
        // Shared draw: the multiplicative factor matrices agree entrywise.
        for i in 0..10 {
            for j in 0..10 {
                let fu = a.us[[i, j]] / data.us[[i, j]];
                let fd = a.dnus[[i, j]] / data.dnus[[i, j]];
                assert!((fu - fd).norm() < 1e-12);
            }
        }
        // Independent draws disagree.
        let c = add_noise(&data, 0.5, 9, false);
        let fu = c.us[[0, 0]] / data.us[[0, 0]];
        let fd = c.dnus[[0, 0]] / data.dnus[[0, 0]];
        assert!((fu - fd).norm() > 1e-6);
    }

    #[test]
    fn noise_entry_and_aggregate_bounds() {
        let data = sample_data(10);
        let delta = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = draw_unit_frobenius(&mut rng, 10);
        let e_max = e.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for v in e.iter() {
            assert!(delta * v.norm() <= delta * e_max + 1e-15);
        }
        // Hadamard bound: ||E o Us||_F <= max|Us| * ||E||_F <= ||Us||_F.
        let had: f64 = e
            .iter()
            .zip(data.us.iter())
            .map(|(ei, ui)| (ei * ui).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let us_f: f64 = data.us.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(delta * had / us_f <= delta + 1e-12);
    }

    #[test]
    fn noise_scale_grows_linearly_in_delta() {
        let data = sample_data(16);
        let deltas = [0.1, 0.25, 0.5];
        let norms: Vec<f64> = deltas
            .iter()
            .map(|&d| {
                let noisy = add_noise(&data, d, 31, true);
                noisy
                    .us
                    .iter()
                    .zip(data.us.iter())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        // Same seed family: perturbation norm is exactly linear in delta.
        let slope01 = norms[0] / 0.1;
        let slope05 = norms[2] / 0.5;
        assert!(
            (slope01 - slope05).abs() / slope05 < 0.05,
            "slopes {} vs {}",
            slope01,
            slope05
        );
    }

    #[test]
    fn nfd_version_check() {
        let dir = std::env::temp_dir();
        let path = dir.join("nearscat_nfd_version_test.nfd");
        std::fs::write(&path, "nfd 2\n1 1 8 0 0 1\n").unwrap();
        match load_nfd(&path) {
            Err(DataError::UnsupportedVersion { found }) => assert_eq!(found, "nfd 2"),
            other => panic!("expected version error, got {:?}", other.map(|_| ())),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn nfd_dimension_mismatch() {
        let data = sample_data(8);
        let dir = std::env::temp_dir();
        let path = dir.join("nearscat_nfd_dim_test.nfd");
        save_nfd(&data, &path).unwrap();
        // Drop the last entry line.
        let text = std::fs::read_to_string(&path).unwrap();
        let truncated: Vec<&str> = text.lines().collect();
        std::fs::write(&path, truncated[..truncated.len() - 1].join("\n")).unwrap();
        match load_nfd(&path) {
            Err(DataError::DimensionMismatch { expected, found }) => {
                assert_eq!(expected, 64);
                assert_eq!(found, 63);
            }
            other => panic!("expected dimension mismatch, got {:?}", other.map(|_| ())),
        }
        std::fs::remove_file(&path).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn nfd_round_trip_is_exact(seed in 0u64..1000, m in 8usize..12, noisy in proptest::bool::ANY) {
            let mut data = sample_data(m);
            if noisy {
                data = add_noise(&data, 0.25, seed, seed % 2 == 0);
            }
            let path = std::env::temp_dir().join(format!("nearscat_nfd_rt_{}_{}.nfd", seed, m));
            save_nfd(&data, &path).unwrap();
            let loaded = load_nfd(&path).unwrap();
            std::fs::remove_file(&path).ok();
            prop_assert_eq!(loaded, data);
        }
    }
}
