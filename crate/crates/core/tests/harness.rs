use std::collections::HashSet;

use mad_core::harness::*;
use mad_core::neural::Operator;
use mad_core::sampling::{generate_dataset, GenOptions};
use mad_core::*;
use ndarray::{Array2, ArrayView2};

fn square(res: usize, mb: usize) -> Domain {
    Domain::build(DomainKind::UnitSquare, GridSpec::new(res, mb)).unwrap()
}

#[test]
fn test_set_1_is_disjoint_from_training() {
    let d = square(11, 40);
    let eq = EquationSpec::laplace();
    let opts = GenOptions::default();
    for seed in [0, 1, 42] {
        let train = generate_dataset(Generator::Mad1, &eq, &d, 200, seed, &opts, Execution::Parallel).unwrap();
        let test = build_test_set_1(Generator::Mad1, &eq, &d, 200, seed, &opts, Execution::Parallel).unwrap();
        assert_eq!(test.meta.role, Role::TestAnalytic);
        let seen: HashSet<u64> = train.samples.iter().map(|s| s.seed).collect();
        assert!(test.samples.iter().all(|s| !seen.contains(&s.seed)));
        let bits: HashSet<Vec<u64>> = train
            .samples
            .iter()
            .map(|s| s.u.as_ref().unwrap().iter().map(|v| v.to_bits()).collect())
            .collect();
        assert!(test
            .samples
            .iter()
            .all(|s| !bits.contains(&s.u.as_ref().unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>())));
    }
    assert!(build_test_set_1(Generator::Mad1, &eq, &d, 0, 0, &opts, Execution::Parallel).is_err());
}

fn fine_boundary(d: &Domain, oracle: &OracleConfig, u: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let m = oracle.refinement(d).unwrap();
    let fine = Domain::build(d.kind(), GridSpec::new(oracle.fine_resolution(d).unwrap(), m * d.boundary_count())).unwrap();
    fine.boundary_points().iter().map(|p| u(p[0], p[1])).collect()
}

#[test]
fn manufactured_oracle_follows_second_order_ladder() {
    use std::f64::consts::PI;
    let d = square(11, 40);
    let eq = EquationSpec::laplace();
    let exact = |x: f64, y: f64| (PI * x).sin() * (PI * y).sinh() / PI.sinh();
    let truth: Vec<f64> = d.nodes().iter().map(|p| exact(p[0], p[1])).collect();
    let mut errs = Vec::new();
    for h in [0.02, 0.01] {
        let oracle = OracleConfig { h, ..OracleConfig::default() };
        let u = oracle_solution(&d, &eq, &oracle, &fine_boundary(&d, &oracle, exact), None).unwrap();
        errs.push(relative_l2(&u, &truth).unwrap());
    }
    let ratio = errs[0] / errs[1];
    assert!((3.2..=4.8).contains(&ratio), "errors {errs:?}");
}

#[test]
fn manufactured_source_is_carried_through_interpolation() {
    // u = x^3 y + x y^3 has lap u = 12 x y, which bilinear interpolation
    // and the five-point stencil both reproduce exactly
    let d = square(11, 40);
    let eq = EquationSpec::poisson();
    let exact = |x: f64, y: f64| x.powi(3) * y + x * y.powi(3);
    let res = d.grid().resolution;
    let h = 1.0 / (res - 1) as f64;
    let f: Vec<f64> = (0..res * res)
        .map(|k| 12.0 * (k / res) as f64 * h * (k % res) as f64 * h)
        .collect();
    let oracle = OracleConfig { h: 0.02, ..OracleConfig::default() };
    let u = oracle_solution(&d, &eq, &oracle, &fine_boundary(&d, &oracle, exact), Some(&f)).unwrap();
    let truth: Vec<f64> = d.nodes().iter().map(|p| exact(p[0], p[1])).collect();
    assert!(relative_l2(&u, &truth).unwrap() < 1e-8);
}

#[test]
fn constant_boundary_gives_constant_solution() {
    let d = square(11, 40);
    let oracle = OracleConfig { h: 0.02, ..OracleConfig::default() };
    let g = vec![1.0; oracle.refinement(&d).unwrap() * 40];
    let u = oracle_solution(&d, &EquationSpec::laplace(), &oracle, &g, None).unwrap();
    assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-8));
}

#[test]
fn test_set_2_records_are_consistent() {
    let d = square(11, 40);
    let oracle = OracleConfig { h: 0.02, ..OracleConfig::default() };
    let opts = GenOptions::default();
    for eq in [EquationSpec::laplace(), EquationSpec::poisson()] {
        let ts = build_test_set_2(&eq, &d, 3, 5, &oracle, &opts, Execution::Parallel).unwrap();
        ts.validate().unwrap();
        assert_eq!(ts.meta.role, Role::TestFd);
        assert_eq!(ts.meta.has_f, eq.has_source());
        for s in &ts.samples {
            let u = s.u.as_ref().unwrap();
            // boundary samples sit on lattice corners/edges: the oracle
            // solution there is the prescribed value
            for (b, p) in d.boundary_points().iter().enumerate() {
                let node = d.nodes().iter().position(|q| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12);
                if let Some(n) = node {
                    assert!((u[n] - s.g[b]).abs() < 1e-12);
                }
            }
        }
        let again = build_test_set_2(&eq, &d, 3, 5, &oracle, &opts, Execution::Sequential).unwrap();
        assert_eq!(again.samples, ts.samples);
    }
}

#[test]
fn bench_degenerate_and_small() {
    let d = square(11, 40);
    let eq = EquationSpec::helmholtz(10.0).unwrap();
    let oracle = OracleConfig { h: 0.02, ..OracleConfig::default() };
    let opts = GenOptions::default();
    let r = bench_generation(&eq, &d, 0, 1, &oracle, &opts, Execution::Sequential).unwrap();
    assert_eq!((r.t_mad, r.t_fd, r.ratio), (0.0, 0.0, None));
    let r = bench_generation(&eq, &d, 4, 1, &oracle, &opts, Execution::Sequential).unwrap();
    assert_eq!(r.fd_resolution, 51);
    assert!(r.t_mad > 0.0 && r.t_fd > 0.0 && r.ratio.unwrap() > 0.0);
    assert!(r.fd_iterations_mean > 0.0);
}

struct Lookup<'a>(&'a Dataset);

impl Operator for Lookup<'_> {
    fn predict(&self, g: ArrayView2<f64>, _: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((g.nrows(), x.nrows()));
        for (r, row) in g.rows().into_iter().enumerate() {
            let s = self.0.samples.iter().find(|s| s.g.as_slice() == row.as_slice().unwrap()).unwrap();
            out.row_mut(r).assign(&ndarray::ArrayView1::from(s.u.as_ref().unwrap()));
        }
        Ok(out)
    }

    fn laplacian(&self, g: ArrayView2<f64>, _: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(Array2::zeros((g.nrows(), x.nrows())))
    }
}

struct Zero;

impl Operator for Zero {
    fn predict(&self, g: ArrayView2<f64>, _: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(Array2::zeros((g.nrows(), x.nrows())))
    }

    fn laplacian(&self, g: ArrayView2<f64>, _: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(Array2::zeros((g.nrows(), x.nrows())))
    }
}

#[test]
fn evaluation_examples() {
    let d = square(11, 40);
    let ts = build_test_set_1(
        Generator::Mad1,
        &EquationSpec::laplace(),
        &d,
        60,
        3,
        &GenOptions::default(),
        Execution::Parallel,
    )
    .unwrap();
    let r = evaluate(&Lookup(&ts), &ts, &d, Execution::Parallel).unwrap();
    assert_eq!(r.per_sample.len(), 60);
    assert!(r.per_sample.iter().all(|&e| e == 0.0));
    let r = evaluate(&Zero, &ts, &d, Execution::Parallel).unwrap();
    assert!(r.per_sample.iter().all(|&e| e == 1.0));
    assert_eq!(r.mean, 1.0);
    let other = square(13, 40);
    assert!(evaluate(&Zero, &ts, &other, Execution::Parallel).is_err());
}

#[test]
fn evaluation_is_pure_across_policies() {
    let d = square(11, 40);
    let eq = EquationSpec::laplace();
    let ts = build_test_set_1(Generator::Mad1, &eq, &d, 40, 9, &GenOptions::default(), Execution::Parallel).unwrap();
    let model = mad_core::neural::ArchConfig::new(mad_core::neural::Arch::Baseline, 2, 40, 121).build(1).unwrap();
    let a = evaluate(&model, &ts, &d, Execution::Parallel).unwrap();
    let b = evaluate(&model, &ts, &d, Execution::Sequential).unwrap();
    let c = evaluate(&model, &ts, &d, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
