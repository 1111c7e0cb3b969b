//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{brute_force, close, random_case};
use eikonal_core::dirichlet::solve_weighted;
use eikonal_core::monge::comparison_check;
use eikonal_core::optical::check_metric_axioms;
use eikonal_core::scenarios::{convergence, run_scenario, tol, Resolution, ScenarioReport};
use eikonal_core::{DirichletProblem, Quadrature, WeightField, WeightedGraph};

struct Outcome {
    pass: bool,
    detail: String,
}

fn checks(report: &ScenarioReport, names: &[&str]) -> Outcome {
    let mut failed = Vec::new();
    let mut shown = Vec::new();
    for name in names {
        match report.check(name) {
            Some(c) => {
                if c.expected == "true" {
                    shown.push(format!("{name} holds"));
                } else {
                    shown.push(format!("{name} = {:.4e}", c.observed));
                }
                if !c.pass {
                    failed.push(format!("{name} = {} (expected {})", c.observed, c.expected));
                }
            }
            None => failed.push(format!("{name} missing")),
        }
    }
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() { shown.join(", ") } else { failed.join("; ") },
    }
}

fn timed(limit: Option<f64>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let secs = start.elapsed().as_secs_f64();
    if let Some(limit) = limit {
        if secs >= limit {
            out.pass = false;
        }
        out.detail = format!("{}; {secs:.2}s (limit {limit}s)", out.detail);
    }
    out
}

fn scenario(name: &str) -> ScenarioReport {
    run_scenario(name, &Resolution::default())
        .unwrap_or_else(|e| panic!("{name}: {e}"))
        .report
}

fn criterion_1() -> Outcome {
    timed(Some(5.0), || {
        let r = scenario("interval_sqrt");
        checks(&r, &["u sup error", "u(0)"])
    })
}

fn criterion_2() -> Outcome {
    let t = convergence(
        "interval_sqrt",
        &[1e-1, 1e-2, 1e-3],
        &[10.0, 100.0, 1000.0],
        &Quadrature::default(),
    )
    .expect("convergence study");
    let errors: Vec<String> = t.rows.iter().map(|r| format!("{:.3e}", r.interpolant_error)).collect();
    let diffs: Vec<String> = t.truncation.iter().map(|r| format!("{:.3e}", r.sup_diff)).collect();
    Outcome {
        pass: t.errors_decreasing && t.truncation_decreasing,
        detail: format!("sup errors {}; truncation {}", errors.join(" > "), diffs.join(" > ")),
    }
}

fn criterion_3() -> Outcome {
    timed(Some(2.0), || {
        let r = scenario("comb");
        checks(
            &r,
            &["L_f(O,Q_j) - (1 + 1/j)", "u(O)", "u(Q_j) - (3 - 1/j)", "topology modulus at r = 2/j"],
        )
    })
}

fn criterion_4() -> Outcome {
    let r = scenario("interval_loss");
    checks(&r, &["sigma_g = {0}", "u(x) - x", "compatibility violation at (1,0)"])
}

fn criterion_5() -> Outcome {
    timed(Some(60.0), || {
        let r = scenario("punctured_disk");
        checks(&r, &["L_f(O,(1,0))", "min_j L_f(O,(0,1/j))", "max_z L_f(O,z)"])
    })
}

fn criterion_6() -> Outcome {
    let a = checks(&scenario("interval_sqrt"), &["u monge fraction", "u superslope <= subslope + tol"]);
    let b = checks(
        &scenario("comb"),
        &["refined comb monge fraction", "refined comb superslope <= subslope + tol"],
    );
    Outcome {
        pass: a.pass && b.pass,
        detail: format!("interval_sqrt: {}; comb: {}", a.detail, b.detail),
    }
}

fn criterion_7() -> Outcome {
    let a = checks(
        &scenario("interval_sqrt"),
        &["holder exponent of L_f", "holder constant of L_f", "Q"],
    );
    let b = checks(&scenario("punctured_disk"), &["Q"]);
    Outcome {
        pass: a.pass && b.pass,
        detail: format!("interval: {}; disk: {}", a.detail, b.detail),
    }
}

#[derive(Default)]
struct Violations {
    brute_force: usize,
    axioms: usize,
    monotonicity: usize,
    scaling: usize,
    lax: usize,
    comparison: usize,
    infinite: usize,
}

fn property_suite(count: u64) -> Violations {
    let quad = Quadrature::default();
    let mut v = Violations::default();
    for seed in 0..count {
        let case = random_case(seed, 8);
        let g = &case.graph;
        let f = case.field();
        let wg = WeightedGraph::new(g, &f, &quad);
        let n = g.vertex_count();
        for s in 0..n {
            let table = wg.from_sources(&[s], None).unwrap();
            if table.dist != brute_force(g, wg.weights(), &[(s, 0.0)]) {
                v.brute_force += 1;
            }
            v.infinite += table.dist.iter().filter(|d| !d.is_finite()).count();
        }
        v.axioms += check_metric_axioms(&wg, 500, seed).violations.len();

        let bumped: Vec<f64> = case.f.iter().enumerate().map(|(e, x)| x + (e % 3) as f64 * 0.5).collect();
        let wg2 = WeightedGraph::new(g, &WeightField::per_edge(bumped).unwrap(), &quad);
        let c = 1.0 + (seed % 7) as f64 * 0.37;
        let wg3 = WeightedGraph::new(g, &f.scaled(c).unwrap(), &quad);
        for s in 0..n {
            let (d1, d2, d3) = (wg.distances_from(s), wg2.distances_from(s), wg3.distances_from(s));
            v.monotonicity += d1.iter().zip(&d2).filter(|(a, b)| a > b).count();
            v.scaling += d1.iter().zip(&d3).filter(|(a, b)| !close(c * **a, **b, 1e-12)).count();
        }

        let problem = DirichletProblem::on_flagged_boundary(g, f.clone(), |vx| {
            (vx.label.parse::<u64>().unwrap() * 37 % 11) as f64 * 0.25
        })
        .unwrap();
        let s = solve_weighted(&problem, &wg).unwrap();
        for y in 0..n {
            let d = wg.distances_from(y);
            v.lax += (0..n).filter(|&x| s.u[x] - s.u[y] - d[x] > tol::LAX).count();
        }
        let shifted: Vec<f64> = s.u.iter().map(|x| x + 0.5).collect();
        if !comparison_check(&s.u, &shifted, true, 0.0).unwrap().pass {
            v.comparison += 1;
        }
    }
    v
}

fn criterion_8() -> Outcome {
    timed(Some(30.0), || {
        let v = property_suite(200);
        let total = v.brute_force + v.axioms + v.monotonicity + v.scaling + v.lax;
        Outcome {
            pass: total == 0,
            detail: format!(
                "200 graphs: brute force {}, metric axioms {}, monotonicity {}, scaling {}, lax inequality {} violations",
                v.brute_force, v.axioms, v.monotonicity, v.scaling, v.lax
            ),
        }
    })
}

fn criterion_9() -> Outcome {
    let r = scenario("blocked_square");
    checks(
        &r,
        &["L_f <= L_f^N", "L_f^N - L_f at the far corner", "u <= u~", "empty family gives u~ = u bitwise"],
    )
}

fn criterion_10() -> Outcome {
    // the abstract statements have no finite computation; their stand-ins are
    // the ordering checks and the finiteness counts
    let v = property_suite(200);
    let disk = scenario("punctured_disk");
    let finite = checks(&disk, &["vertices at infinite L_f from O"]);
    Outcome {
        pass: v.comparison == 0 && v.infinite == 0 && finite.pass,
        detail: format!(
            "stand-ins only: comparison failures {}, infinite optical distances on connected graphs {}, disk {}",
            v.comparison, v.infinite, finite.detail
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, fn() -> Outcome); 10] = [
        (1, "interval_sqrt accuracy", criterion_1),
        (2, "interval_sqrt convergence", criterion_2),
        (3, "comb exact values", criterion_3),
        (4, "interval_loss boundary loss", criterion_4),
        (5, "punctured_disk optical bounds", criterion_5),
        (6, "Monge property", criterion_6),
        (7, "regularity fits", criterion_7),
        (8, "property suites", criterion_8),
        (9, "transversal orderings", criterion_9),
        (10, "abstract statements via stand-ins", criterion_10),
    ];
    let mut all = true;
    for (n, label, run) in criteria {
        let out = run();
        all &= out.pass;
        println!("{} criterion {n} ({label}): {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
