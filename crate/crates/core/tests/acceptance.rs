//! Acceptance suite: one pass/fail line per criterion. Runs as a plain
//! binary so the lines are always printed; exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cheeger_core::decomposition::{assemble_regions, build_scheme, disjoint_family};
use cheeger_core::*;

type Outcome = (bool, String);

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

fn grid(spec: &DomainSpec, res: u32) -> Grid {
    build_grid(spec, res).unwrap()
}

fn eig(g: &Grid, p: f64) -> Eigenpair {
    first_eigenpair(g, exp(p), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

fn eigenvalue_accuracy() -> Outcome {
    let gi = grid(&DomainSpec::unit_interval(), 1024);
    let (ei, ti) = timed(|| eig(&gi, 2.0));
    let gs = grid(&DomainSpec::unit_square(), 64);
    let (es, ts) = timed(|| eig(&gs, 2.0));
    let (ri, rs) = (rel(ei.lambda, PI * PI), rel(es.lambda, 2.0 * PI * PI));
    let limit = Duration::from_secs(30);
    (
        ri <= 0.005 && rs <= 0.01 && ti < limit && ts < limit,
        format!(
            "interval lambda1 = {:.5} (rel err {ri:.2e}, {ti:.2?}); square lambda1 = {:.5} (rel err {rs:.2e}, {ts:.2?})",
            ei.lambda, es.lambda
        ),
    )
}

/// Every `(grid, k, exact value)` the brute force is run on, shared with the
/// Faber-Krahn and sandwich criteria.
fn bruteforce_instances() -> Vec<(DomainSpec, u32, usize)> {
    let mut out = Vec::new();
    for res in [1, 2, 3, 5, 8, 16, 33, 64, 256, 1024] {
        out.push((DomainSpec::unit_interval(), res, 1));
    }
    out.push((DomainSpec::unit_interval(), 8, 2));
    for res in 1..=5 {
        out.push((DomainSpec::unit_square(), res, 1));
    }
    out
}

fn exact_values() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    for (spec, res, k) in bruteforce_instances() {
        let g = grid(&spec, res);
        // 2k on the interval, 4 for the whole square.
        let expected = if spec.dimension == 1 { 2.0 * k as f64 } else { 4.0 };
        let got = hk_bruteforce(&g, k, PerimeterMode::Dirichlet, DEFAULT_BUDGET).unwrap().value;
        if got != expected {
            bad.push(format!("{} res {res} k {k}: {got}", spec.name));
        }
    }
    // Beyond enumeration, the parametric cut is exact for k = 1.
    for res in [8, 16, 32, 64] {
        let g = grid(&DomainSpec::unit_square(), res);
        let got = h1_exact(&g, PerimeterMode::Dirichlet).unwrap().value;
        if got != 4.0 {
            bad.push(format!("unit_square res {res} (cut): {got}"));
        }
    }
    let elapsed = t.elapsed();
    (
        bad.is_empty() && elapsed < Duration::from_secs(60),
        if bad.is_empty() {
            format!(
                "h1(interval) = 2 at 10 resolutions, h1(square) = 4 at res 1..5 (enumeration) and 8..64 (cut), h2(interval, 8) = 4 ({elapsed:.2?})"
            )
        } else {
            format!("mismatches: {bad:?}")
        },
    )
}

fn probe_fields(g: &Grid, p: f64) -> Vec<(String, ScalarField)> {
    let tent = ScalarField::from_fn(g, |x| x.iter().map(|&t| 1.0 - (2.0 * t - 1.0).abs()).product());
    let smooth_box = ScalarField::from_fn(g, |x| {
        x.iter()
            .map(|&t| ((0.35 - (t - 0.5).abs()) / 0.1).clamp(0.0, 1.0))
            .product()
    });
    let off_center = ScalarField::from_fn(g, |x| {
        let r2: f64 = x.iter().enumerate().map(|(d, &t)| (t - 0.3 - 0.1 * d as f64).powi(2)).sum();
        (-r2 * 20.0).exp() * x.iter().map(|&t| t * (1.0 - t)).product::<f64>()
    });
    vec![
        ("eigenfield".into(), eig(g, p).field),
        ("tent".into(), tent),
        ("smoothed_indicator".into(), smooth_box),
        ("bump".into(), off_center),
    ]
}

fn sweep_chain() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut tight_min = f64::INFINITY;
    for (spec, res) in [(DomainSpec::unit_interval(), 128), (DomainSpec::unit_square(), 32)] {
        let g = grid(&spec, res);
        for p in [1.5, 2.0, 3.0] {
            for (name, f) in probe_fields(&g, p) {
                let s = sweep(&g, &f, p, PerimeterMode::Dirichlet).unwrap();
                checked += 1;
                if !(s.phi <= s.discrete_bound()) {
                    bad.push(format!("{} {name} p={p}: {} > {}", spec.name, s.phi, s.discrete_bound()));
                }
            }
        }
    }
    for (spec, res) in [(DomainSpec::unit_interval(), 1024), (DomainSpec::unit_square(), 64)] {
        let g = grid(&spec, res);
        for p in [1.5, 2.0, 3.0] {
            let e = eig(&g, p);
            let s = sweep(&g, &e.field, p, PerimeterMode::Dirichlet).unwrap();
            checked += 1;
            tight_min = tight_min.min(s.bound / s.phi);
            if !(s.phi <= s.bound) {
                bad.push(format!("{} eigenfield p={p}: {} > {}", spec.name, s.phi, s.bound));
            }
        }
    }
    (
        bad.is_empty(),
        if bad.is_empty() {
            format!("{checked} sweeps within the chain; eigenfields min bound/phi = {tight_min:.3}")
        } else {
            format!("violations: {bad:?}")
        },
    )
}

fn decomposition_certificate() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut min_delta = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    let mut worst_cert = 0.0f64;
    let mut runs = 0;
    for (spec, res) in [(DomainSpec::unit_interval(), 1024), (DomainSpec::unit_square(), 32)] {
        let g = grid(&spec, res);
        for p in [1.5, 2.0, 3.0] {
            let e = eig(&g, p);
            let f = normalized(&g, &e.field, p).unwrap();
            let lambdas = (p == 2.0).then(|| spectrum_p2(&g, 3).unwrap().eigenvalues);
            for k in 1..=3 {
                let tag = format!("{} p={p} k={k}", spec.name);
                let scheme = build_scheme(&g, &f, exp(p), k, &DecomposeOptions::default()).unwrap();
                let regions = match assemble_regions(&scheme) {
                    Ok(r) => r,
                    Err(err) => {
                        bad.push(format!("{tag}: {err}"));
                        continue;
                    }
                };
                let fam = match disjoint_family(&g, &f, &scheme, &regions) {
                    Ok(fam) => fam,
                    Err(err) => {
                        bad.push(format!("{tag}: {err}"));
                        continue;
                    }
                };
                runs += 1;
                let c = &fam.certificate;
                min_delta = min_delta.min(c.delta_sum);
                min_margin = min_margin.min(regions.separation_margin);
                worst_cert = worst_cert.max(c.max_member_rayleigh / c.region_bound);
                for i in 0..fam.members.len() {
                    for j in i + 1..fam.members.len() {
                        let (a, b) = (fam.members[i].values(), fam.members[j].values());
                        if a.iter().zip(b).any(|(x, y)| *x != 0.0 && *y != 0.0) {
                            bad.push(format!("{tag}: members {i} and {j} overlap"));
                        }
                    }
                }
                if !(regions.separation_margin > 0.0) {
                    bad.push(format!("{tag}: separation margin {}", regions.separation_margin));
                }
                if c.delta_sum < 0.45 {
                    bad.push(format!("{tag}: Delta = {}", c.delta_sum));
                }
                if !c.holds() {
                    bad.push(format!("{tag}: max R = {} > 4 * {}", c.max_member_rayleigh, c.region_bound));
                }
                if let Some(l) = &lambdas {
                    if c.max_member_rayleigh < l[k - 1] {
                        bad.push(format!("{tag}: max R = {} < lambda_k = {}", c.max_member_rayleigh, l[k - 1]));
                    }
                }
            }
        }
    }
    let elapsed = t.elapsed();
    (
        bad.is_empty() && elapsed < Duration::from_secs(300),
        if bad.is_empty() {
            format!(
                "{runs} runs: min Delta = {min_delta:.3}, min separation margin = {min_margin:.3e}, max R(f_i)/region_bound = {worst_cert:.2e} ({elapsed:.2?})"
            )
        } else {
            format!("failures: {bad:?}")
        },
    )
}

fn hk_scaling() -> Outcome {
    let g = grid(&DomainSpec::unit_interval(), 1024);
    let e = eig(&g, 2.0);
    let mut c_eff = Vec::new();
    for k in 1..=6 {
        match hk_upper_from(&g, &e, k, PerimeterMode::Dirichlet) {
            Ok(r) => c_eff.push(r.c_eff),
            Err(err) => return (false, format!("k = {k}: {err}")),
        }
    }
    let spread = c_eff.iter().copied().fold(0.0, f64::max) / c_eff.iter().copied().fold(f64::INFINITY, f64::min);
    let g60 = grid(&DomainSpec::unit_interval(), 60);
    let pts: Vec<(f64, f64)> = (1..=6)
        .map(|k| {
            let h = hk_bruteforce(&g60, k, PerimeterMode::Dirichlet, DEFAULT_BUDGET).unwrap().value;
            ((k as f64).ln(), h.ln())
        })
        .collect();
    let s = slope(&pts);
    (
        spread < 3.0 && (s - 1.0).abs() <= 0.05,
        format!("C_eff = {c_eff:.2?} (spread {spread:.3}); exact h_k slope at res 60 = {s:.4}"),
    )
}

fn bilateral() -> Outcome {
    let interval = verify_bilateral(
        &DomainSpec::unit_interval(),
        exp(2.0),
        &BilateralOptions {
            resolutions: vec![60],
            ks: vec![1, 2, 3, 4],
            ..BilateralOptions::default()
        },
    )
    .unwrap();
    let target = 4.0 / (PI * PI);
    let ratios: Vec<f64> = interval
        .rows
        .iter()
        .map(|r| r.h_exact.unwrap().powi(2) / r.lambda_k.unwrap())
        .collect();
    let ratios_ok = ratios.iter().all(|&r| rel(r, target) <= 0.02);

    let square = verify_bilateral(
        &DomainSpec::unit_square(),
        exp(2.0),
        &BilateralOptions {
            resolutions: vec![32],
            ks: vec![1, 2, 4],
            ..BilateralOptions::default()
        },
    )
    .unwrap();
    let g = grid(&DomainSpec::unit_square(), 32);
    let mut square_ok = true;
    let mut parts = Vec::new();
    for row in &square.rows {
        let h = best_box_partition(&g, row.k, PerimeterMode::Dirichlet).unwrap().value;
        square_ok &= h >= row.faber_krahn && h <= 2.5 * row.faber_krahn && row.h_upper <= h;
        parts.push((row.k, h, row.faber_krahn));
    }
    (
        ratios_ok && square_ok,
        format!(
            "interval h_k^2/lambda_k = {ratios:.4?} vs {target:.4}; square (k, partition h, FK) = {:?}",
            parts
                .iter()
                .map(|(k, h, fk)| format!("({k}, {h}, {fk:.3})"))
                .collect::<Vec<_>>()
        ),
    )
}

fn faber_krahn() -> Outcome {
    let mut instances: Vec<(DomainSpec, u32, usize)> = bruteforce_instances();
    for k in 1..=6 {
        instances.push((DomainSpec::unit_interval(), 60, k));
    }
    for k in 1..=4 {
        instances.push((DomainSpec::unit_interval(), 64, k));
    }
    instances.push((DomainSpec::unit_square(), 4, 2));
    instances.push((DomainSpec::rectangle("rectangle_2x1", &[2.0, 1.0]).unwrap(), 3, 2));
    let mut bad = Vec::new();
    let mut min_margin = f64::INFINITY;
    for (spec, res, k) in &instances {
        let g = grid(spec, *res);
        let h = hk_bruteforce(&g, *k, PerimeterMode::Dirichlet, DEFAULT_BUDGET).unwrap().value;
        let fk = faber_krahn_lower(spec.dimension, *k, spec.volume());
        min_margin = min_margin.min(h / fk);
        if h < fk {
            bad.push(format!("{} res {res} k {k}: {h} < {fk}", spec.name));
        }
    }
    (
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} convex instances, min h_exact / FK = {min_margin:.4}", instances.len())
        } else {
            format!("violations: {bad:?}")
        },
    )
}

fn comb() -> Outcome {
    let room = BoxRegion::new(vec![[0.0, 2.0], [0.0, 1.0]]);
    let r = counterexample_comb(4, &[0.25], &room, 16).unwrap();
    let h4 = r.rows[3].h_relative_upper;
    let l4 = r.rows[3].lambda_k;
    (
        h4 <= 1.2 && l4 >= PI * PI && r.ratio_increasing,
        format!(
            "h4 (relative) = {h4}, lambda4 = {l4:.3}, lambda_k/h_k^2 = {:.3?}",
            r.rows.iter().map(|row| row.ratio).collect::<Vec<_>>()
        ),
    )
}

fn sandwich() -> Outcome {
    let mut cases: Vec<(DomainSpec, u32, usize)> = Vec::new();
    for res in [48, 60, 64, 96, 128, 256, 512, 1024] {
        for k in 1..=4 {
            cases.push((DomainSpec::unit_interval(), res, k));
        }
    }
    for k in 1..=2 {
        cases.push((DomainSpec::unit_square(), 4, k));
        cases.push((DomainSpec::unit_square(), 5, k));
    }
    let mut compared = 0;
    let mut skipped = 0;
    let mut bad = Vec::new();
    for (spec, res, k) in &cases {
        let g = grid(spec, *res);
        let upper = match hk_upper(&g, exp(2.0), *k, PerimeterMode::Dirichlet) {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let exact = hk_bruteforce(&g, *k, PerimeterMode::Dirichlet, DEFAULT_BUDGET).unwrap().value;
        let local = hk_local_search(&g, PerimeterMode::Dirichlet, &upper.witnesses, 100_000)
            .unwrap()
            .value;
        compared += 1;
        if !(exact <= local && local <= upper.h_k_upper) {
            bad.push(format!("{} res {res} k {k}: {exact} / {local} / {}", spec.name, upper.h_k_upper));
        }
    }
    (
        bad.is_empty() && compared > 0,
        if bad.is_empty() {
            format!("{compared} instances ordered exactly ({skipped} where the pipeline declined)")
        } else {
            format!("violations: {bad:?}")
        },
    )
}

fn multiaxis_transparency() -> Outcome {
    let g = grid(&DomainSpec::unit_square(), 32);
    let e = eig(&g, 2.0);
    let report = multiaxis_decompose_experimental(&g, &e.field, exp(2.0), 2).unwrap();
    let fam = decompose(&g, &e.field, exp(2.0), 2).unwrap();
    let disjoint = fam.members[0]
        .values()
        .iter()
        .zip(fam.members[1].values())
        .all(|(a, b)| *a == 0.0 || *b == 0.0);
    (
        !report.overlaps.is_empty() && disjoint && fam.certificate.holds(),
        format!(
            "{} overlapping pairs in the per-axis family; k-function members disjoint = {disjoint}",
            report.overlaps.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("eigenvalue accuracy", eigenvalue_accuracy),
        ("exact discrete Cheeger values", exact_values),
        ("sweep chain", sweep_chain),
        ("decomposition certificate", decomposition_certificate),
        ("h_k scaling", hk_scaling),
        ("bilateral estimates", bilateral),
        ("Faber-Krahn", faber_krahn),
        ("comb counterexample", comb),
        ("oracle sandwich", sandwich),
        ("multiaxis overlap report", multiaxis_transparency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
