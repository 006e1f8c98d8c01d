//! Acceptance criteria, one pass/fail line each.
//!
//! Criteria listed in `EXPECTED_FAILURES` are known to be unattainable and
//! print FAIL with the measured values; the process fails only on an
//! unexpected failure or an unexpected pass.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sympopt_core::costs::{
    brockett_critical_check, brockett_model, brockett_second_order_sample, least_squares_model,
    random_j_symmetric,
};
use sympopt_core::gradients::{
    embedded_gradient_euc_ambient, embedded_gradient_inv_ambient, fd_directional, gram_multipliers,
    inv_inner, is_critical, lagrange_inv, sigma_closed_form_n1, sylvester_multipliers,
    sylvester_residual,
};
use sympopt_core::hessians::{
    covariant_deriv_general, covariant_deriv_left_inv, hess_euc_restricted, hess_inv_restricted,
    newton_system,
};
use sympopt_core::linalg::{bracket, skewness_defect};
use sympopt_core::manifold::{poisson, random_symplectic, random_tangent};
use sympopt_core::optimizers::{classify_critical_point, quadratic_rate_constant};
use sympopt_core::random::{self, seeded_rng};
use sympopt_core::{
    cayley_retract, newton, retract_tangent, steepest_descent, BrockettCost, CostModel, Dim, Mat,
    OptimizerConfig, Status, SymTangent, SymplecticPoint,
};

const EXPECTED_FAILURES: &[usize] = &[9];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn dim(n: usize) -> Dim {
    Dim::new(n).unwrap()
}

fn brockett(n: Dim, seed: u64) -> BrockettCost {
    brockett_model(
        random_j_symmetric(n, seed, 1.0).unwrap(),
        random_j_symmetric(n, seed + 1, 1.0).unwrap(),
    )
    .unwrap()
}

/// Running maximum.
fn worst(acc: &mut f64, x: f64) {
    if x.is_nan() || x > *acc {
        *acc = x;
    }
}

fn gradient_consistency() -> Outcome {
    let start = Instant::now();
    let (mut e_euc, mut e_inv) = (0.0f64, 0.0f64);
    for k in [2, 3] {
        let n = dim(k);
        for seed in 0..50u64 {
            let ls = least_squares_model(random_symplectic(n, seed, 1.0).unwrap());
            let br = brockett(n, 1000 + seed);
            let m = random_symplectic(n, 2000 + seed, 0.5).unwrap();
            let v = random_tangent(&m, 3000 + seed, 1.0);
            for cost in [&ls as &dyn CostModel, &br] {
                let grad = cost.euc_grad(m.matrix());
                let fd = fd_directional(cost, &m, &v, 1e-5).unwrap();
                let (d_euc, _) = embedded_gradient_euc_ambient(&m, &grad).unwrap();
                let d_inv = embedded_gradient_inv_ambient(&m, &grad);
                let scale = 1.0 + fd.abs();
                worst(&mut e_euc, (d_euc.dot(&v.ambient()) - fd).abs() / scale);
                worst(&mut e_inv, (inv_inner(&m, &d_inv, &v.ambient()).unwrap() - fd).abs() / scale);
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: e_euc <= 1e-6 && e_inv <= 1e-6 && elapsed < Duration::from_secs(5),
        detail: format!(
            "worst relative error euc {e_euc:.2e}, inv {e_inv:.2e} (tol 1e-6); {:.2} s (limit 5 s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn multiplier_agreement() -> Outcome {
    let (mut closed, mut gram, mut res, mut skew) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 1..=3 {
        let n = dim(k);
        for seed in 0..50u64 {
            let ls = least_squares_model(random_symplectic(n, seed, 1.0).unwrap());
            let br = brockett(n, 1000 + seed);
            let m = random_symplectic(n, 2000 + seed, 0.5).unwrap();
            for cost in [&ls as &dyn CostModel, &br] {
                let grad = cost.euc_grad(m.matrix());
                let sigma = sylvester_multipliers(&m, &grad).unwrap();
                if k == 1 {
                    let c = sigma_closed_form_n1(&m, &grad).unwrap();
                    worst(&mut closed, (sigma.matrix() - c.matrix()).amax());
                }
                let g = gram_multipliers(&m, &grad).unwrap();
                worst(&mut gram, (sigma.matrix() - g.matrix()).amax());
                let (r, rhs) = sylvester_residual(&m, &grad, &sigma);
                worst(&mut res, r / (1.0 + rhs));
                worst(&mut skew, skewness_defect(sigma.matrix()));
                worst(&mut skew, skewness_defect(g.matrix()));
            }
        }
    }
    Outcome {
        pass: closed <= 1e-12 && gram <= 1e-8 && res <= 1e-10 && skew <= 1e-12,
        detail: format!(
            "closed form {closed:.2e} (1e-12), Gram {gram:.2e} (1e-8), Sylvester residual {res:.2e} (1e-10), skewness {skew:.2e} (1e-12)"
        ),
    }
}

fn critical_point_theorem() -> Outcome {
    let mut disagreements = 0;
    let mut checked = 0;
    let mut sigma_at_w = 0.0f64;
    let mut explicit_at_w = 0.0f64;
    for k in 1..=3 {
        let n = dim(k);
        let w = random_symplectic(n, 40 + k as u64, 1.0).unwrap();
        let cost = least_squares_model(w.clone());
        let mut points = vec![(w.clone(), true)];
        for seed in 0..50u64 {
            points.push((random_symplectic(n, 500 + seed, 1.0).unwrap(), false));
        }
        for (m, expect) in &points {
            let grad = cost.euc_grad(m.matrix());
            let (d_euc, _) = embedded_gradient_euc_ambient(m, &grad).unwrap();
            let by_norm = d_euc.norm() <= 1e-9;
            let by_skew = is_critical(m, &cost, 1e-8).critical;
            checked += 1;
            if by_norm != by_skew || by_norm != *expect {
                disagreements += 1;
            }
        }
        let grad = cost.euc_grad(w.matrix());
        let sigma = sylvester_multipliers(&w, &grad).unwrap();
        worst(&mut sigma_at_w, sigma.matrix().amax());
        let explicit = poisson(n) * w.matrix().transpose() * &grad;
        worst(&mut explicit_at_w, explicit.amax());
    }
    Outcome {
        pass: disagreements == 0 && sigma_at_w <= 1e-12 && explicit_at_w <= 1e-12,
        detail: format!(
            "{disagreements} disagreements over {checked} points; at W: max|Σ̃| {sigma_at_w:.2e}, max|JWᵀ∇G| {explicit_at_w:.2e} (1e-12)"
        ),
    }
}

fn retraction_axioms() -> Outcome {
    let (mut zero, mut deriv, mut symp) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-5;
    for k in 1..=3 {
        let n = dim(k);
        for seed in 0..100u64 {
            let m = random_symplectic(n, seed, 0.5).unwrap();
            let d = n.ambient();
            let r0 = cayley_retract(&m, &Mat::zeros(d, d)).unwrap();
            worst(&mut zero, (r0.matrix() - m.matrix()).norm() / m.matrix().norm());

            let v = random_tangent(&m, 100 + seed, 1.0);
            let fwd = cayley_retract(&m, &(v.s() * h)).unwrap();
            let bwd = cayley_retract(&m, &(v.s() * -h)).unwrap();
            let fd = (fwd.matrix() - bwd.matrix()) / (2.0 * h);
            worst(&mut deriv, (fd - v.ambient()).norm());

            let raw = random::symmetric(&mut seeded_rng(200 + seed), d, 1.0);
            let radius = 10.0 * (seed + 1) as f64 / 100.0;
            let r = cayley_retract(&m, &(&raw * (radius / raw.norm()))).unwrap();
            worst(&mut symp, r.residual());
        }
    }
    Outcome {
        pass: zero <= 4.0 * f64::EPSILON && deriv <= 1e-6 && symp <= 1e-10,
        detail: format!(
            "‖R(0) − M‖/‖M‖ {zero:.2e} (4ε), FD derivative {deriv:.2e} (1e-6), symplecticity for ‖S‖ ≤ 10: {symp:.2e} (1e-10)"
        ),
    }
}

fn hessian_oracle() -> Outcome {
    let h = 1e-5;
    let (mut oracle, mut swap, mut at_w, mut corr, mut second) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in [1, 2] {
        let n = dim(k);
        for seed in 0..50u64 {
            let ls = least_squares_model(random_symplectic(n, seed, 1.0).unwrap());
            let br = brockett(n, 1000 + seed);
            let m = random_symplectic(n, 2000 + seed, 0.5).unwrap();
            let v = random_tangent(&m, 3000 + seed, 1.0);
            let u = random_tangent(&m, 4000 + seed, 1.0);
            for cost in [&ls as &dyn CostModel, &br] {
                let field = |p: &SymplecticPoint| embedded_gradient_euc_ambient(p, &cost.euc_grad(p.matrix())).unwrap().0;
                let fwd = field(&cayley_retract(&m, &(v.s() * h)).unwrap());
                let bwd = field(&cayley_retract(&m, &(v.s() * -h)).unwrap());
                let fd = ((fwd - bwd) / (2.0 * h)).dot(&u.ambient());
                let exact = hess_euc_restricted(&m, cost, &v, &u).unwrap();
                worst(&mut oracle, (fd - exact).abs() / (1.0 + exact.abs()));
                let a = hess_inv_restricted(&m, cost, &v, &u).unwrap();
                let b = hess_inv_restricted(&m, cost, &u, &v).unwrap();
                worst(&mut swap, (a - b).abs());
            }
        }
        for seed in 0..20u64 {
            let w = random_symplectic(n, 5000 + seed, 1.0).unwrap();
            let cost = least_squares_model(w.clone());
            let v = random_tangent(&w, 6000 + seed, 1.0);
            let expect = 2.0 * v.ambient().norm_squared();
            worst(&mut at_w, (hess_euc_restricted(&w, &cost, &v, &v).unwrap() - expect).abs());
            worst(&mut at_w, (hess_inv_restricted(&w, &cost, &v, &v).unwrap() - expect).abs());
            let grad = cost.euc_grad(w.matrix());
            let gamma = lagrange_inv(&w, &grad).unwrap().into_matrix();
            let sigma = sylvester_multipliers(&w, &grad).unwrap().into_matrix();
            let pairing = &grad + poisson(n) * w.matrix() * &gamma;
            worst(&mut corr, gamma.amax().max(sigma.amax()).max(pairing.amax()));
        }
    }
    // At a critical point the second difference along any curve is the Hessian.
    let n = dim(2);
    let cost = brockett_model(random_j_symmetric(n, 7, 1.0).unwrap(), Mat::identity(4, 4)).unwrap();
    let id = SymplecticPoint::identity(n);
    let hs = 1e-4;
    for seed in 0..20u64 {
        let v = random_tangent(&id, seed, 1.0);
        let f = |t: f64| cost.value(cayley_retract(&id, &(v.s() * t)).unwrap().matrix());
        let fd = (f(hs) - 2.0 * f(0.0) + f(-hs)) / (hs * hs);
        let e = hess_euc_restricted(&id, &cost, &v, &v).unwrap();
        worst(&mut second, (fd - e).abs() / (1.0 + e.abs()));
    }
    Outcome {
        pass: oracle <= 1e-4 && swap <= 1e-10 && at_w <= 1e-8 && corr <= 1e-8 && second <= 1e-5,
        detail: format!(
            "FD oracle {oracle:.2e} (1e-4), inv swap {swap:.2e} (1e-10), at W {at_w:.2e} (1e-8), correction terms at W {corr:.2e}, second difference at a critical point {second:.2e}"
        ),
    }
}

fn covariant_identities() -> Outcome {
    let (mut torsion, mut compat, mut parts) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let n = dim(1 + (seed as usize % 3));
        let d = n.ambient();
        let m = random_symplectic(n, seed, 0.5).unwrap();
        let mm = m.matrix();
        let mut rng = seeded_rng(10_000 + seed);
        let x0 = random::dense(&mut rng, d, d, 1.0);
        let y0 = random::dense(&mut rng, d, d, 1.0);
        let z0 = random::dense(&mut rng, d, d, 1.0);
        let lhs = covariant_deriv_left_inv(mm, &x0, &y0) - covariant_deriv_left_inv(mm, &y0, &x0);
        worst(
            &mut torsion,
            (lhs - mm * bracket(&x0, &y0)).norm() / (1.0 + mm.norm() * x0.norm() * y0.norm()),
        );
        let a = inv_inner(&m, &covariant_deriv_left_inv(mm, &x0, &y0), &(mm * &z0)).unwrap();
        let b = inv_inner(&m, &(mm * &y0), &covariant_deriv_left_inv(mm, &x0, &z0)).unwrap();
        worst(&mut compat, (a + b).abs());
        let gen = covariant_deriv_general(mm, &(mm * &x0), &(mm * &y0), &(mm * &x0 * &y0)).unwrap();
        let left = covariant_deriv_left_inv(mm, &x0, &y0);
        worst(&mut parts, (gen - &left).norm() / (1.0 + left.norm()));
    }
    Outcome {
        pass: torsion <= 1e-12 && compat <= 1e-11 && parts <= 1e-11,
        detail: format!("torsion {torsion:.2e} (1e-12), metric compatibility {compat:.2e} (1e-11), general vs left-invariant {parts:.2e} (1e-11)"),
    }
}

fn steepest_descent_convergence() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for k in 1..=3 {
        let n = dim(k);
        let w = random_symplectic(n, 70 + k as u64, 0.5).unwrap();
        let cost = least_squares_model(w.clone());
        let m0 = retract_tangent(&random_tangent(&w, 80 + k as u64, 0.5)).unwrap();
        let start = Instant::now();
        let t = steepest_descent(&cost, &m0, &OptimizerConfig::default()).unwrap();
        let elapsed = start.elapsed();
        let dist = (t.final_point.matrix() - w.matrix()).norm();
        let monotone = t.records.windows(2).all(|p| p[1].cost <= p[0].cost);
        let symp = t.max_symplecticity_residual();
        let ok = dist <= 1e-6
            && t.iterations() <= 2000
            && monotone
            && symp <= 1e-9
            && elapsed < Duration::from_secs(10);
        pass &= ok;
        lines.push(format!(
            "n={k}: {} iters, ‖M−W‖ {dist:.1e}, monotone {monotone}, symplecticity {symp:.1e}, {:.3} s",
            t.iterations(),
            elapsed.as_secs_f64()
        ));
    }
    Outcome {
        pass,
        detail: lines.join("; "),
    }
}

fn newton_quadratic() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for k in [1, 2] {
        let n = dim(k);
        let w = random_symplectic(n, 90 + k as u64, 0.5).unwrap();
        let cost = least_squares_model(w.clone());
        let m0 = retract_tangent(&random_tangent(&w, 95 + k as u64, 0.1)).unwrap();
        let cfg = OptimizerConfig {
            grad_tol: 1e-12,
            max_iter: 10,
            ..OptimizerConfig::default()
        };
        let t = newton(&cost, &m0, &cfg).unwrap();
        let c = quadratic_rate_constant(&t.records, 1e-12);
        let (h, _) = newton_system(&w, &cost).unwrap();
        let pd = h.is_positive_definite();
        let min_eig = h.eigenvalues()[0];
        let ok = t.status == Status::Converged && t.iterations() <= 10 && c.is_some_and(f64::is_finite) && pd;
        pass &= ok;
        let norms: Vec<String> = t.records.iter().map(|r| format!("{:.1e}", r.grad_norm)).collect();
        lines.push(format!(
            "n={k}: C = {:.3} over r = [{}], h(W) min eigenvalue {min_eig:.3}",
            c.unwrap_or(f64::NAN),
            norms.join(", ")
        ));
    }
    Outcome {
        pass,
        detail: lines.join("; "),
    }
}

/// `diag(P, P)` with `P` symmetric: J-symmetric and commuting with `J`.
fn block_diag_twice(p: &Mat) -> Mat {
    let k = p.nrows();
    let mut out = Mat::zeros(2 * k, 2 * k);
    out.view_mut((0, 0), (k, k)).copy_from(p);
    out.view_mut((k, k), (k, k)).copy_from(p);
    out
}

fn brockett_optimality() -> Outcome {
    let n = dim(2);
    let cost = brockett(n, 300);
    let mut disagreements = 0;
    for seed in 0..50u64 {
        let m = random_symplectic(n, 400 + seed, 1.0).unwrap();
        let (a, _) = brockett_critical_check(&cost, &m, 1e-8);
        if a != is_critical(&m, &cost, 1e-8).critical {
            disagreements += 1;
        }
    }

    // Generic instance: no limit point, the cost is unbounded below.
    let cfg = OptimizerConfig::default();
    let m0 = retract_tangent(&random_tangent(&SymplecticPoint::identity(n), 301, 0.1)).unwrap();
    let generic = match steepest_descent(&cost, &m0, &cfg) {
        Ok(t) => format!("{} after {} iters, cost {:.3e}", t.status.as_str(), t.iterations(), t.last().cost),
        Err(e) => format!("aborted ({e})"),
    };

    // Q, N commuting with J keep descent on the compact subgroup Sp ∩ O, so a
    // limit point exists; measure the second-order gap there.
    let p = random::symmetric(&mut seeded_rng(302), 2, 1.0);
    let r = random::symmetric(&mut seeded_rng(303), 2, 1.0);
    let compact = brockett_model(block_diag_twice(&p), block_diag_twice(&r)).unwrap();
    let mut a = random::symmetric(&mut seeded_rng(304), 2, 0.3);
    a[(0, 1)] = a[(1, 0)];
    let b = random::skew(&mut seeded_rng(305), 2, 0.3);
    let mut s = Mat::zeros(4, 4);
    s.view_mut((0, 0), (2, 2)).copy_from(&a);
    s.view_mut((2, 2), (2, 2)).copy_from(&a);
    s.view_mut((0, 2), (2, 2)).copy_from(&b);
    s.view_mut((2, 0), (2, 2)).copy_from(&(-&b));
    let start = SymTangent::new(SymplecticPoint::identity(n), s).unwrap();
    let limit_run = steepest_descent(&compact, &retract_tangent(&start).unwrap(), &OptimizerConfig {
        max_iter: 20_000,
        ..cfg
    })
    .unwrap();
    let limit = &limit_run.final_point;
    let sample = brockett_second_order_sample(&compact, limit, 200, 306);
    let class = classify_critical_point(limit, &compact);

    let gap_text = match &sample {
        Ok(s) => format!("min_gap {:.3e} over {} directions (need ≥ −1e-10)", s.min_gap, s.trials),
        Err(e) => format!("gap not sampled: {e}"),
    };
    let class_text = match &class {
        Ok(c) => format!(
            "{:?}, inertia (+{}, 0:{}, −{})",
            c.kind, c.inertia.positive, c.inertia.zero, c.inertia.negative
        ),
        Err(e) => format!("{e}"),
    };
    let gap_ok = sample.as_ref().is_ok_and(|s| s.min_gap >= -1e-10);
    Outcome {
        pass: disagreements == 0 && limit_run.status == Status::Converged && gap_ok,
        detail: format!(
            "critical-check disagreements {disagreements}/50; generic instance: {generic}; \
             commuting instance: {} after {} iters, {gap_text}; limit point is {class_text}",
            limit_run.status.as_str(),
            limit_run.iterations(),
        ),
    }
}

fn sympopt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sympopt"))
        .args(args)
        .output()
        .expect("sympopt runs")
}

fn summary_without_wall_time(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("summary.json"))
        .unwrap()
        .lines()
        .filter(|l| !l.contains("wall_time_s"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut runs = 0;
    for (i, text) in [
        r#"{"v": 1, "problem": "least_squares", "n": 2, "seed": 7, "optimizer": "steepest_descent", "perturbation": 0.5}"#,
        r#"{"v": 1, "problem": "least_squares", "n": 3, "seed": 8, "optimizer": "newton", "perturbation": 0.2}"#,
        r#"{"v": 1, "problem": "brockett", "n": 2, "seed": 9, "optimizer": "steepest_descent", "perturbation": 0.1, "max_iter": 50}"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = tmp.path().join(format!("c{i}.json"));
        std::fs::write(&cfg, text).unwrap();
        let a = tmp.path().join(format!("a{i}"));
        let b = tmp.path().join(format!("b{i}"));
        for dir in [&a, &b] {
            sympopt(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        }
        runs += 1;
        identical &= summary_without_wall_time(&a) == summary_without_wall_time(&b);
    }
    let start = Instant::now();
    let check = sympopt(&["check", "--n-max", "3"]);
    let elapsed = start.elapsed();
    let check_ok = check.status.success();
    Outcome {
        pass: identical && check_ok && elapsed < Duration::from_secs(60),
        detail: format!(
            "{runs} configs reproduce byte-identical summaries: {identical}; `check --n-max 3` {} in {:.2} s (limit 60 s)",
            if check_ok { "passed" } else { "FAILED" },
            elapsed.as_secs_f64()
        ),
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient consistency", gradient_consistency),
        ("multiplier triple-path agreement", multiplier_agreement),
        ("critical-point theorem", critical_point_theorem),
        ("retraction axioms", retraction_axioms),
        ("Hessian oracle", hessian_oracle),
        ("covariant-derivative identities", covariant_identities),
        ("steepest-descent convergence", steepest_descent_convergence),
        ("Newton local quadratic convergence", newton_quadratic),
        ("Brockett optimality", brockett_optimality),
        ("CLI determinism", cli_determinism),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let outcome = run();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let tag = match (outcome.pass, expected_fail) {
            (true, false) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected)",
        };
        if outcome.pass == expected_fail {
            unexpected.push(id);
        }
        println!("criterion {id:>2} {tag}: {name}: {}", outcome.detail);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
