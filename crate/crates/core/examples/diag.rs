use num_complex::Complex64;
use nearscat::forward::*;
use nearscat::media::*;
use nearscat::specfun::WaveContext;
use nearscat::synth::MeasurementCircle;
use nearscat::Point;

fn main() {
    let ctx = WaveContext::new(8.0);
    let medium = Medium::new(vec![Component {
        shape: Shape::new(ShapeKind::Disk { center: Point::ORIGIN, radius: 0.25 }),
        contrast: ContrastModel::Constant(Contrast::scalar(0.3)),
    }]).unwrap();
    let circle = MeasurementCircle::build(3.0, 100);
    let source = circle.node(0);
    let exact = mie_disk_reference(0.25, Point::ORIGIN, 0.3, &ctx, source, &circle).unwrap();
    let rel = |a: &[Complex64], b: &[Complex64]| -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
        num / den
    };
    for n in [128usize, 256, 512] {
        let opts = SolverOptions { n, ..Default::default() };
        let solver = SolverContext::new(&medium, &ctx, &opts).unwrap();
        let t0 = std::time::Instant::now();
        let incident = point_source_field(&ctx, solver.grid(), source);
        let (u, stats) = solver.solve_isotropic_ctx(&incident).unwrap();
        let numeric = solver.evaluate_cauchy_ctx(&u, None, &circle).unwrap();
        println!("n={:4}: us err {:.4e}  dnus err {:.4e}  ({} iters, {:.2?})",
            n, rel(&numeric.us, &exact.us), rel(&numeric.dnus, &exact.dnus),
            stats.iterations, t0.elapsed());
    }
}
