mod common;

use common::{morley_jet, params, Jet, JetFn};
use glb_core::afem::{
    estimator, mark_doerfler, piecewise_hessians, uniform_history, EstimatorField, EstimatorOptions,
};
use glb_core::eigen::{EigenOptions, MorleySystem};
use glb_core::mesh::{builtin_domain, refine_nvb, refine_uniform, Domain, Triangulation2D, NONE};
use glb_core::morley::{interpolate_morley, Simplex};
use glb_core::quadrature::{gauss_legendre, triangle_rule};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn doerfler_set_is_minimal(
        eta in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..10.0], 1..60),
        theta in 0.01f64..=1.0,
    ) {
        let field = EstimatorField::new(eta.clone());
        let marked = mark_doerfler(&field, theta).unwrap();
        let sum: f64 = marked.iter().map(|&t| eta[t]).sum();
        prop_assert!(sum >= theta * field.total * (1.0 - 1e-12));
        prop_assert!(marked.windows(2).all(|w| w[0] < w[1]));
        if let Some(&smallest) = marked.iter().min_by(|&&a, &&b| eta[a].total_cmp(&eta[b])) {
            prop_assert!(sum - eta[smallest] < theta * field.total);
        }
        // No set with fewer elements reaches the threshold: the largest
        // |M| − 1 values fall short.
        let mut sorted = eta.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let best: f64 = sorted.iter().take(marked.len().saturating_sub(1)).sum();
        prop_assert!(marked.is_empty() || best < theta * field.total);
        if theta == 1.0 {
            prop_assert_eq!(marked.len(), eta.iter().filter(|&&v| v > 0.0).count());
        }
    }
}

fn test_mesh() -> Triangulation2D {
    let m = refine_uniform(&refine_uniform(&builtin_domain(Domain::LShape)));
    let marked: Vec<usize> = (0..m.num_triangles()).filter(|t| t % 3 == 0).collect();
    refine_nvb(&m, &marked).unwrap()
}

/// `η²(T)` by brute-force quadrature: the volume term from point values of
/// `u_M`, the jump term from two-sided Hessians at edge Gauss points.
fn estimator_by_quadrature(mesh: &Triangulation2D, sys: &MorleySystem, lambda: f64, u: &[f64]) -> Vec<f64> {
    let simplex = |t: usize| Simplex::from_triangle(mesh.triangle_points(t)).unwrap();
    let jet_at = |t: usize, x: [f64; 2]| {
        let s = simplex(t);
        let l = s.barycentric(&x);
        morley_jet(&s, &sys.map.gather(mesh, t, u), &l)
    };
    let rule = triangle_rule(6);
    let (gx, gw) = gauss_legendre(3);
    (0..mesh.num_triangles())
        .map(|t| {
            let s = simplex(t);
            let area = s.volume;
            let l2: f64 = rule
                .bary
                .iter()
                .zip(&rule.weights)
                .map(|(b, w)| {
                    let x = s.point(b);
                    w * area * jet_at(t, [x[0], x[1]]).v.powi(2)
                })
                .sum();
            let mut jumps = 0.0;
            for &e in &mesh.triangle_edges()[t] {
                let [a, b] = mesh.edges()[e];
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                let len = mesh.edge_length(e);
                let tau = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
                let [t0, t1] = mesh.edge_triangles()[e];
                for (x, w) in gx.iter().zip(&gw) {
                    let p = [pa[0] + x * (pb[0] - pa[0]), pa[1] + x * (pb[1] - pa[1])];
                    let mut j = jet_at(t0, p);
                    if t1 != NONE {
                        j = j - jet_at(t1, p);
                    }
                    let jt = [j.h[0][0] * tau[0] + j.h[0][1] * tau[1], j.h[1][0] * tau[0] + j.h[1][1] * tau[1]];
                    jumps += w * len * (jt[0] * jt[0] + jt[1] * jt[1]);
                }
            }
            area * area * lambda * lambda * l2 + area.sqrt() * jumps
        })
        .collect()
}

#[test]
fn estimator_matches_brute_force_quadrature() {
    let mesh = test_mesh();
    let sys = MorleySystem::new(&mesh).unwrap();
    for seed in 0..5 {
        let u = params(seed, sys.map.total);
        let lambda = 300.0 + 50.0 * seed as f64;
        let eta = estimator(&sys, lambda, &u, EstimatorOptions::default()).unwrap();
        let oracle = estimator_by_quadrature(&mesh, &sys, lambda, &u);
        for (a, b) in eta.eta_sq.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
        }
        let total: f64 = eta.eta_sq.iter().sum();
        assert_eq!(total, eta.total);
    }
}

#[test]
fn zero_function_has_zero_estimator() {
    let mesh = test_mesh();
    let sys = MorleySystem::new(&mesh).unwrap();
    let eta = estimator(&sys, 100.0, &vec![0.0; sys.map.total], EstimatorOptions::default()).unwrap();
    assert!(eta.eta_sq.iter().all(|&v| v == 0.0));
    assert!(estimator(&sys, 100.0, &[0.0], EstimatorOptions::default()).is_err());
}

#[test]
fn a_global_quadratic_has_no_interior_jumps() {
    let mesh = refine_uniform(&refine_uniform(&test_mesh()));
    let sys = MorleySystem::new(&mesh).unwrap();
    let q = JetFn(Box::new(|p| {
        let (x, y) = (Jet::x(p), Jet::y(p));
        x * x + x * y.scale(0.7) - y * y.scale(1.3) + x.scale(0.2)
    }));
    let u = interpolate_morley(&q, &mesh, &sys.map);
    let hess = piecewise_hessians(&sys, &u);
    // Only triangles without boundary dofs carry the quadratic exactly.
    let bv = mesh.boundary_vertices();
    let inner = |t: usize| {
        mesh.triangles[t].iter().all(|&v| !bv[v]) && mesh.triangle_edges()[t].iter().all(|&e| !mesh.is_boundary_edge(e))
    };
    let mut checked = 0;
    for e in 0..mesh.num_edges() {
        let [t0, t1] = mesh.edge_triangles()[e];
        if t1 == NONE || !inner(t0) || !inner(t1) {
            continue;
        }
        for r in 0..2 {
            for c in 0..2 {
                assert!((hess[t0][r][c] - hess[t1][r][c]).abs() < 1e-10);
            }
        }
        checked += 1;
    }
    assert!(checked > 10);
}

const REFERENCES: [(Domain, usize, f64); 3] = [
    (Domain::LShape, 1, 418.9750424668822),
    (Domain::DumbbellSlit, 1, 80.93261350),
    (Domain::FourSlit, 3, 1125.12791932),
];

#[test]
fn uniform_histories_increase_and_stay_below_the_references() {
    for (domain, k, lambda) in REFERENCES {
        let mesh = builtin_domain(domain);
        let levels = if domain == Domain::LShape { 6 } else { 4 };
        let h = uniform_history(&mesh, k, levels, &EigenOptions::default()).unwrap();
        for w in h.rows.windows(2) {
            assert!(w[1].glb >= w[0].glb - 1e-10, "{domain}: {} then {}", w[0].glb, w[1].glb);
            assert!(w[1].num_triangles > w[0].num_triangles);
        }
        for r in &h.rows {
            assert!(r.glb <= r.lambda_h * (1.0 + 1e-9) && r.lambda_h <= r.lambda_m * (1.0 + 1e-9));
            if r.condition_ok {
                assert!(r.lambda_h <= lambda, "{domain}: λ_h = {} > {lambda}", r.lambda_h);
            }
        }
    }
}
