mod common;

use common::{brute_force, close, random_case};
use eikonal_core::dirichlet::{effective_boundary, solve_weighted};
use eikonal_core::graph::{build_graph, grid_domain, refine, Domain, GraphSpec, Stencil};
use eikonal_core::monge::{comparison_check, full_slope_f, subslope_f, superslope_f};
use eikonal_core::optical::{check_metric_axioms, truncated_solve};
use eikonal_core::regularity::{estimate_q, fit_holder};
use eikonal_core::transversal::{maximal_optical, optical_transversal, solve_lax_transversal, NullSetMarking};
use eikonal_core::{curve_integral, DirichletProblem, Path, Quadrature, WeightField, WeightedGraph};
use proptest::prelude::*;

fn quad() -> Quadrature {
    Quadrature::default()
}

fn problem<'g>(case: &'g common::Case, shift: impl Fn(usize) -> f64) -> DirichletProblem<'g> {
    DirichletProblem::on_flagged_boundary(&case.graph, case.field(), |v| shift(v.label.parse().unwrap()))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn dijkstra_matches_path_enumeration(seed in any::<u64>(), offsets in prop::collection::vec(0.0f64..3.0, 8)) {
        let case = random_case(seed, 8);
        let wg = WeightedGraph::new(&case.graph, &case.field(), &quad());
        let n = case.graph.vertex_count();
        for s in 0..n {
            let table = wg.from_sources(&[s], None).unwrap();
            prop_assert_eq!(&table.dist, &brute_force(&case.graph, wg.weights(), &[(s, 0.0)]));
        }
        let sources: Vec<usize> = (0..n).step_by(2).collect();
        let init: Vec<f64> = sources.iter().map(|&s| offsets[s]).collect();
        let table = wg.from_sources(&sources, Some(&init)).unwrap();
        let pairs: Vec<(usize, f64)> = sources.iter().copied().zip(init.iter().copied()).collect();
        prop_assert_eq!(table.dist, brute_force(&case.graph, wg.weights(), &pairs));
    }

    #[test]
    fn edge_weights_are_f_times_length(seed in any::<u64>()) {
        let case = random_case(seed, 8);
        let wg = WeightedGraph::new(&case.graph, &case.field(), &quad());
        for (e, edge) in case.graph.edges().iter().enumerate() {
            prop_assert!(close(wg.weights()[e], case.f[e] * edge.length, 1e-12));
        }
    }

    #[test]
    fn metric_axioms_hold(seed in any::<u64>()) {
        let case = random_case(seed, 8);
        let wg = WeightedGraph::new(&case.graph, &case.field(), &quad());
        let report = check_metric_axioms(&wg, 500, seed);
        prop_assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn scaling_multiplies_distances(seed in any::<u64>(), c in 0.1f64..10.0, k in -3i32..4) {
        let case = random_case(seed, 8);
        let f = case.field();
        let base = WeightedGraph::new(&case.graph, &f, &quad()).distances_from(0);
        let scaled = WeightedGraph::new(&case.graph, &f.scaled(c).unwrap(), &quad()).distances_from(0);
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!(close(c * a, *b, 1e-12));
        }
        // powers of two scale without rounding
        let p = 2f64.powi(k);
        let exact = WeightedGraph::new(&case.graph, &f.scaled(p).unwrap(), &quad()).distances_from(0);
        for (a, b) in base.iter().zip(&exact) {
            prop_assert_eq!(p * a, *b);
        }
    }

    #[test]
    fn constant_field_gives_scaled_graph_distance(seed in any::<u64>(), c in 1.0f64..5.0) {
        let case = random_case(seed, 8);
        let d = WeightedGraph::new(&case.graph, &WeightField::constant(c).unwrap(), &quad()).distances_from(0);
        let dg = case.graph.distances_from(0);
        for (a, b) in d.iter().zip(&dg) {
            prop_assert!(close(*a, c * b, 1e-12));
        }
    }

    #[test]
    fn monotone_in_f(seed in any::<u64>(), bumps in prop::collection::vec(0.0f64..2.0, 28)) {
        let case = random_case(seed, 8);
        let f2: Vec<f64> = case.f.iter().zip(bumps.iter().cycle()).map(|(a, b)| a + b).collect();
        let wg1 = WeightedGraph::new(&case.graph, &case.field(), &quad());
        let field2 = WeightField::per_edge(f2).unwrap();
        let wg2 = WeightedGraph::new(&case.graph, &field2, &quad());
        for s in 0..case.graph.vertex_count() {
            let (d1, d2) = (wg1.distances_from(s), wg2.distances_from(s));
            prop_assert!(d1.iter().zip(&d2).all(|(a, b)| a <= b));
        }
        let p1 = problem(&case, |_| 0.0);
        let p2 = DirichletProblem::new(&case.graph, field2.clone(), &p1.boundary().iter().map(|(&v, &g)| (v, g)).collect::<Vec<_>>()).unwrap();
        let u1 = solve_weighted(&p1, &wg1).unwrap().u;
        let u2 = solve_weighted(&p2, &wg2).unwrap().u;
        prop_assert!(u1.iter().zip(&u2).all(|(a, b)| a <= b));
    }

    #[test]
    fn truncation_is_monotone_in_m(seed in any::<u64>()) {
        let case = random_case(seed, 8);
        let f = case.field();
        let mut last = vec![0.0; case.graph.vertex_count()];
        let a = f.alpha();
        for m in [a + 0.5, a + 1.0, a + 2.0, a + 4.0, f64::INFINITY] {
            let t = truncated_solve(&case.graph, &f, m, &[0], None, &quad()).unwrap();
            prop_assert!(last.iter().zip(&t.dist).all(|(a, b)| a <= b));
            last = t.dist;
        }
        prop_assert_eq!(last, WeightedGraph::new(&case.graph, &f, &quad()).distances_from(0));
    }

    #[test]
    fn lax_solution_invariants(seed in any::<u64>(), g in prop::collection::vec(0.0f64..3.0, 8)) {
        let case = random_case(seed, 8);
        let p = problem(&case, |v| g[v]);
        let wg = p.weighted(&quad());
        let s = solve_weighted(&p, &wg).unwrap();
        // u(x) <= u(y) + L_f(x, y) over all pairs
        let mut worst = f64::NEG_INFINITY;
        for y in 0..s.u.len() {
            let d = wg.distances_from(y);
            for x in 0..s.u.len() {
                worst = worst.max(s.u[x] - s.u[y] - d[x]);
            }
        }
        prop_assert!(worst <= 1e-9, "lax excess {worst}");
        for (&v, &gv) in p.boundary() {
            prop_assert!(s.u[v] <= gv);
            prop_assert_eq!(s.in_sigma(v), s.u[v] == gv);
        }
        prop_assert_eq!(effective_boundary(&p, &s, 0.0), s.sigma_g.clone());
    }

    #[test]
    fn monotone_in_g_and_raising_outside_sigma(seed in any::<u64>(), g in prop::collection::vec(0.0f64..3.0, 8), dg in prop::collection::vec(0.0f64..1.0, 8)) {
        let case = random_case(seed, 8);
        let p1 = problem(&case, |v| g[v]);
        let p2 = problem(&case, |v| g[v] + dg[v]);
        let wg = p1.weighted(&quad());
        let s1 = solve_weighted(&p1, &wg).unwrap();
        let s2 = solve_weighted(&p2, &wg).unwrap();
        prop_assert!(s1.u.iter().zip(&s2.u).all(|(a, b)| a <= b));
        let raised: Vec<(usize, f64)> = p1
            .boundary()
            .iter()
            .map(|(&v, &gv)| (v, if s1.in_sigma(v) { gv } else { gv + 1.0 + dg[v] }))
            .collect();
        let s3 = solve_weighted(&p1.with_data(&raised).unwrap(), &wg).unwrap();
        prop_assert_eq!(s3.u, s1.u);
    }

    #[test]
    fn comparison_with_shifted_supersolution(seed in any::<u64>(), c in 0.0f64..2.0) {
        let case = random_case(seed, 8);
        let s = solve_weighted(&problem(&case, |_| 0.0), &WeightedGraph::new(&case.graph, &case.field(), &quad())).unwrap();
        let v: Vec<f64> = s.u.iter().map(|x| x + c).collect();
        let r = comparison_check(&s.u, &v, true, 0.0).unwrap();
        prop_assert!(r.pass);
    }

    #[test]
    fn transversal_orderings(seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..4)) {
        let case = random_case(seed, 8);
        let g = &case.graph;
        let wg = WeightedGraph::new(g, &case.field(), &quad());
        let blocked: Vec<usize> = picks.iter().map(|i| i.index(g.edge_count())).collect();
        let passable = vec![g.edges()[blocked[0]].u];
        let m1 = NullSetMarking::new("a", blocked.clone(), passable);
        let m2 = NullSetMarking::new("b", blocked[..1].to_vec(), []);
        let plain = wg.distances_from(0);
        let marked = optical_transversal(&wg, &m1, &[0], None).unwrap().dist;
        prop_assert!(plain.iter().zip(&marked).all(|(a, b)| a <= b));
        let only_passable = NullSetMarking::new("p", [], [0, 1]);
        prop_assert_eq!(&optical_transversal(&wg, &only_passable, &[0], None).unwrap().dist, &plain);
        for y in 0..g.vertex_count() {
            let (small, _) = maximal_optical(&wg, std::slice::from_ref(&m1), 0, y).unwrap();
            let (large, _) = maximal_optical(&wg, &[m1.clone(), m2.clone()], 0, y).unwrap();
            prop_assert!(small <= large);
            prop_assert!(plain[y] <= small);
        }
        let p = problem(&case, |_| 0.0);
        let one = solve_lax_transversal(&p, &wg, std::slice::from_ref(&m2)).unwrap();
        let two = solve_lax_transversal(&p, &wg, &[m2.clone(), m1.clone()]).unwrap();
        prop_assert!(one.u.iter().zip(&one.solution.u).all(|(a, b)| a <= b));
        if one.method.exact() && two.method.exact() {
            prop_assert!(one.solution.u.iter().zip(&two.solution.u).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn refine_preserves_distances_and_measure(seed in any::<u64>(), k in 2usize..6) {
        let case = random_case(seed, 8);
        let fine = refine(&case.graph, k).unwrap();
        prop_assert!(close(fine.total_measure(), case.graph.total_measure(), 1e-12));
        for s in 0..case.graph.vertex_count() {
            let (a, b) = (case.graph.distances_from(s), fine.distances_from(s));
            for v in 0..case.graph.vertex_count() {
                prop_assert!(close(a[v], b[v], 1e-12));
            }
        }
    }

    #[test]
    fn curve_integral_reversal_and_constant(seed in any::<u64>(), c in 1.0f64..5.0) {
        let case = random_case(seed, 8);
        let g = &case.graph;
        let edges: Vec<usize> = {
            // walk the tree path 0 -> last vertex through the shortest-path parent chain
            let wg = WeightedGraph::new(g, &case.field(), &quad());
            let t = wg.from_sources(&[0], None).unwrap();
            t.witness(g, g.vertex_count() - 1).segments.iter().map(|s| s.edge).collect()
        };
        let path = t_path(g, &edges);
        let f = case.field();
        let forward = curve_integral(g, &f, &path, &quad()).unwrap();
        let back = curve_integral(g, &f, &path.reversed(), &quad()).unwrap();
        prop_assert!(close(forward, back, 1e-12));
        let cf = curve_integral(g, &WeightField::constant(c).unwrap(), &path, &quad()).unwrap();
        prop_assert!(close(cf, c * path.length(), 1e-12));
    }

    #[test]
    fn holder_fit_recovers_power_law(a in 0.2f64..1.0, c in 0.5f64..5.0) {
        let pairs: Vec<(f64, f64)> = (0..40).map(|i| {
            let d = 1e-3 * 1.2f64.powi(i);
            (d, c * d.powf(a))
        }).collect();
        let fit = fit_holder(&pairs, Some((1e-3, 1.0))).unwrap();
        prop_assert!((fit.exponent - a).abs() < 1e-6);
        prop_assert!((fit.constant - c).abs() < 1e-6 * c);
    }

    #[test]
    fn q_ignores_measure_scale(s in 0.1f64..10.0) {
        let base = grid_domain(&Domain::Interval { a: -1.0, b: 1.0 }, 0.01, Stencil::Four).unwrap();
        let mut spec = GraphSpec { name: "scaled".into(), dim: 1, ..GraphSpec::default() };
        for v in base.vertices() {
            spec.vertex(v.label.clone(), &v.coords[..1], v.boundary);
        }
        for e in base.edges() {
            let id = spec.edge(e.u, e.v);
            spec.edges[id].measure = Some(s * e.measure);
        }
        let scaled = build_graph(&spec).unwrap();
        let center = base.nearest([0.0; 3]);
        let radii = [0.02, 0.05, 0.1, 0.3];
        let q1 = estimate_q(&base, &radii, &[center]).unwrap();
        let q2 = estimate_q(&scaled, &radii, &[center]).unwrap();
        prop_assert!((q1.q - q2.q).abs() < 1e-9);
        prop_assert!((q2.intercept - q1.intercept - s.ln()).abs() < 1e-9);
    }
}

fn t_path(g: &eikonal_core::MetricGraph, edges: &[usize]) -> Path {
    Path::from_edges(g, 0, edges).unwrap()
}

#[test]
fn constant_field_holder_exponent_is_one() {
    let g = grid_domain(&Domain::Interval { a: 0.0, b: 1.0 }, 0.01, Stencil::Four).unwrap();
    let wg = WeightedGraph::new(&g, &WeightField::constant(3.0).unwrap(), &quad());
    let fit = fit_holder(&eikonal_core::regularity::optical_pairs(&wg, 0), None).unwrap();
    assert!((fit.exponent - 1.0).abs() < 1e-6);
    assert!((fit.constant - 3.0).abs() < 1e-6);
}

#[test]
fn full_slope_is_max_of_sub_and_super() {
    let g = grid_domain(&Domain::Interval { a: -1.0, b: 1.0 }, 0.01, Stencil::Four).unwrap();
    let f = eikonal_core::Builtin::InvSqrtAbs.field().unwrap();
    let p = DirichletProblem::on_flagged_boundary(&g, f, |_| 0.0).unwrap();
    let wg = p.weighted(&quad());
    let u = solve_weighted(&p, &wg).unwrap().u;
    let radii = [0.2, 0.1, 0.05, 0.02];
    for x in [10, 57, 100, 150, 190] {
        let sub = subslope_f(&u, &wg, x, &radii).unwrap();
        let sup = superslope_f(&u, &wg, x, &radii).unwrap();
        let full = full_slope_f(&u, &wg, x, &radii).unwrap();
        for k in 0..radii.len() {
            let want = match (sub.values[k], sup.values[k]) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            assert_eq!(full.values[k], want);
        }
    }
}

#[test]
fn subslope_is_one_after_scaling_f() {
    let g = grid_domain(&Domain::Interval { a: -1.0, b: 1.0 }, 0.002, Stencil::Four).unwrap();
    let f = eikonal_core::Builtin::InvSqrtAbs.field().unwrap();
    for c in [0.5, 3.0] {
        let p = DirichletProblem::on_flagged_boundary(&g, f.scaled(c).unwrap(), |_| 0.0).unwrap();
        let wg = p.weighted(&quad());
        let u = solve_weighted(&p, &wg).unwrap().u;
        let radii = eikonal_core::monge::default_radii_f(&wg);
        for x in [100, 400, 700, 900] {
            let s = subslope_f(&u, &wg, x, &radii).unwrap();
            assert!((s.extrapolated - 1.0).abs() < 0.05, "c={c} x={x} {}", s.extrapolated);
        }
    }
}
