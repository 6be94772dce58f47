mod common;

use common::{clamped_sample, energy_error, free_sample, hessian_mean_defect, local_errors, params, JetFn};
use glb_core::mesh::{builtin_domain, refine_nvb, refine_uniform, Domain, Point2, Triangulation2D};
use glb_core::morley::{
    dof_map, eval_basis, interpolate_local, interpolate_morley, kappa, morley_dofs, p2_basis, p2_mass_matrix,
    MorleyDof, Simplex,
};
use glb_core::quadrature::{gauss_legendre, triangle_rule};
use nalgebra::{Matrix6, Vector6};
use proptest::prelude::*;

/// Applies every Morley functional of `s` to the basis function of `dof`,
/// by quadrature of values and gradients only.
fn functionals(s: &Simplex, dof: MorleyDof) -> Vec<f64> {
    let n = s.dim();
    let eval = |x: &[f64]| eval_basis(s, dof, x).unwrap();
    let (gx, gw) = gauss_legendre(4);
    let others = |skip: &[usize]| (0..=n).filter(|i| !skip.contains(i)).collect::<Vec<_>>();
    morley_dofs(n)
        .into_iter()
        .map(|f| match f {
            MorleyDof::Sub(j, k) => {
                let rest = others(&[j, k]);
                if n == 2 {
                    eval(&s.vertices[rest[0]]).0
                } else {
                    let (a, b) = (&s.vertices[rest[0]], &s.vertices[rest[1]]);
                    gx.iter()
                        .zip(&gw)
                        .map(|(t, w)| {
                            let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
                            w * eval(&x).0
                        })
                        .sum()
                }
            }
            MorleyDof::Face(j) => {
                let g = &s.grad_bary[j];
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nu: Vec<f64> = g.iter().map(|v| -v / norm).collect();
                let rest = others(&[j]);
                let dn = |x: &[f64]| eval(x).1.iter().zip(&nu).map(|(a, b)| a * b).sum::<f64>();
                if n == 2 {
                    let (a, b) = (&s.vertices[rest[0]], &s.vertices[rest[1]]);
                    gx.iter()
                        .zip(&gw)
                        .map(|(t, w)| {
                            let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
                            w * dn(&x)
                        })
                        .sum()
                } else {
                    let rule = triangle_rule(4);
                    rule.bary
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| {
                            let x: Vec<f64> =
                                (0..n).map(|d| (0..3).map(|i| l[i] * s.vertices[rest[i]][d]).sum()).collect();
                            w * dn(&x)
                        })
                        .sum()
                }
            }
        })
        .collect()
}

fn simplex_strategy(n: usize) -> impl Strategy<Value = Simplex> {
    prop::collection::vec(-1.0f64..1.0, n * (n + 1)).prop_filter_map("degenerate", move |c| {
        let vertices: Vec<Vec<f64>> = c.chunks(n).map(|v| v.to_vec()).collect();
        let s = Simplex::new(vertices).ok()?;
        // Skip slivers, whose dual matrices are ill conditioned in any basis.
        let diam = s
            .vertices
            .iter()
            .flat_map(|a| s.vertices.iter().map(move |b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()))
            .fold(0.0, f64::max)
            .sqrt();
        (s.volume > 0.02 * diam.powi(n as i32)).then_some(s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dual_basis_identity_triangles(s in simplex_strategy(2)) {
        for (c, dof) in morley_dofs(2).into_iter().enumerate() {
            for (r, v) in functionals(&s, dof).into_iter().enumerate() {
                let e = if r == c { 1.0 } else { 0.0 };
                prop_assert!((v - e).abs() < 1e-9, "({r},{c}) = {v}");
            }
        }
    }

    #[test]
    fn dual_basis_identity_tetrahedra(s in simplex_strategy(3)) {
        for (c, dof) in morley_dofs(3).into_iter().enumerate() {
            for (r, v) in functionals(&s, dof).into_iter().enumerate() {
                let e = if r == c { 1.0 } else { 0.0 };
                prop_assert!((v - e).abs() < 1e-9, "({r},{c}) = {v}");
            }
        }
    }
}

/// A mildly graded mesh of the unit square with triangles of several shapes.
fn graded_square() -> Triangulation2D {
    let mut m = refine_uniform(&refine_uniform(&builtin_domain(Domain::UnitSquare)));
    for _ in 0..3 {
        let marked: Vec<usize> = (0..m.num_triangles())
            .filter(|&t| {
                let p = m.triangle_points(t);
                p.iter().any(|q| q[0] + q[1] < 0.6)
            })
            .collect();
        m = refine_nvb(&m, &marked).unwrap();
    }
    m
}

#[test]
fn local_interpolation_constants_hold() {
    let k = kappa(2).unwrap();
    let mesh = graded_square();
    for sample in 0..50 {
        let f = free_sample(sample);
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let h = mesh.diameter(t);
            let c = interpolate_local(&f, p);
            let [l2, h1, h2] = local_errors(&f, p, &c);
            assert!(l2.sqrt() <= k.kappa2 * h * h * h2.sqrt() + 1e-8, "sample {sample}, T {t}");
            assert!(h1.sqrt() <= k.kappa1 * h * h2.sqrt() + 1e-8, "sample {sample}, T {t}");
        }
    }
}

#[test]
fn interpolation_commutes_with_piecewise_mean_hessian() {
    let mesh = graded_square();
    for sample in 0..20 {
        let f = free_sample(100 + sample);
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let d = hessian_mean_defect(&f, p, &interpolate_local(&f, p));
            let scale = local_errors(&f, p, &[0.0; 6])[2].sqrt() * mesh.area(t).sqrt();
            for v in d.iter().flatten() {
                assert!(v.abs() <= 1e-6 * scale.max(1e-300), "sample {sample}, T {t}: {v:e}");
            }
        }
    }
}

#[test]
fn interpolant_is_the_best_approximation() {
    let mesh = graded_square();
    let map = dof_map(&mesh);
    for sample in 0..5 {
        let f = clamped_sample(sample);
        let u = interpolate_morley(&f, &mesh, &map);
        let best = energy_error(&f, &mesh, &map, &u);
        for trial in 0..20 {
            let delta = params(1000 * sample + trial, map.total);
            let amp = 1e-3 * (trial as f64 + 1.0);
            let v: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + amp * d).collect();
            let other = energy_error(&f, &mesh, &map, &v);
            // Pythagoras: the error splits into the interpolation error and the
            // discrete energy of v − I_M f.
            let diff = JetFn(Box::new(|_| common::Jet::constant(0.0)));
            let dv: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
            let discrete = energy_error(&diff, &mesh, &map, &dv);
            assert!(best <= other + 1e-8);
            assert!((other - best - discrete).abs() <= 1e-6 * other, "{other} {best} {discrete}");
        }
    }
}

/// `‖f − Π₂ f‖²` on one triangle with the `L²` projection `Π₂` onto P2.
fn p2_projection_error(f: &JetFn, p: [Point2; 3]) -> f64 {
    let s = Simplex::from_triangle(p).unwrap();
    let rule = triangle_rule(14);
    let m = p2_mass_matrix(s.volume);
    let mass = Matrix6::from_fn(|i, j| m[i][j]);
    let mut rhs = Vector6::zeros();
    for (b, w) in rule.bary.iter().zip(&rule.weights) {
        let x = s.point(b);
        let phi = p2_basis(b);
        for i in 0..6 {
            rhs[i] += w * s.volume * f.jet([x[0], x[1]]).v * phi[i];
        }
    }
    let coef = mass.cholesky().unwrap().solve(&rhs);
    rule.bary
        .iter()
        .zip(&rule.weights)
        .map(|(b, w)| {
            let x = s.point(b);
            let phi = p2_basis(b);
            let proj: f64 = (0..6).map(|i| coef[i] * phi[i]).sum();
            w * s.volume * (f.jet([x[0], x[1]]).v - proj).powi(2)
        })
        .sum()
}

#[test]
fn projection_error_is_bounded_by_the_interpolation_energy() {
    let mesh = graded_square();
    let map = dof_map(&mesh);
    let h_max = mesh.quantities().h_max;
    for sample in 0..10 {
        let f = clamped_sample(50 + sample);
        let u = interpolate_morley(&f, &mesh, &map);
        let energy = energy_error(&f, &mesh, &map, &u);
        let proj: f64 = (0..mesh.num_triangles()).map(|t| p2_projection_error(&f, mesh.triangle_points(t))).sum();
        let bound = (h_max / std::f64::consts::PI).powi(2) * energy.sqrt();
        assert!(proj.sqrt() <= bound + 1e-10, "{} > {bound}", proj.sqrt());
    }
}
