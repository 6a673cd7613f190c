//! Acceptance suite: one test per release criterion, each printing a
//! single pass line (visible with `--nocapture`) and enforcing its stated
//! tolerance and runtime budget.
//!
//!     cargo test -p stergm --test acceptance -- --nocapture

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use stergm::eval::{pr_auc, predict_transition, roc_auc, simulate_networks};
use stergm::fit::{
    fit_model, pirls::pirls_fit, pirls::PirlsOptions, Covariate, FitSettings,
    LambdaMode, ModelSpec, Role, Side, Term, Variant,
};
use stergm::network::{formation_network, persistence_network, reconstruct, Network};
use stergm::panel::NetworkPanel;
use stergm::splines::DesignBlock;
use stergm::stats::{global_stats, outdegree, reciprocity, shared_suppliers, transitivity_stat};
use stergm::synth::{generate, SynthConfig};
use stergm::transition::build_all_transitions;

fn pass(name: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < budget_s,
        "{name}: took {elapsed:.1}s, budget {budget_s}s"
    );
    println!("acceptance PASS {name} ({elapsed:.1}s)");
}

fn random_network(rng: &mut ChaCha8Rng, n: u32, density: f64) -> Network {
    let mut net = Network::empty((0..n).collect());
    for (i, j) in net.clone().dyads() {
        if rng.gen::<f64>() < density {
            net.set(i, j, true);
        }
    }
    net
}

#[test]
fn criterion_01_reconstruction_round_trip() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=8u32);
        let d1 = rng.gen_range(0.0..1.0);
        let d2 = rng.gen_range(0.0..1.0);
        let prev = random_network(&mut rng, n, d1);
        let curr = random_network(&mut rng, n, d2);
        let plus = formation_network(&prev, &curr);
        let minus = persistence_network(&prev, &curr);
        let rebuilt = reconstruct(&prev, &plus, &minus).unwrap();
        assert_eq!(rebuilt, curr, "round trip must be exact");
        // the two closed forms, computed independently of the library
        let mut form_a = Network::empty(prev.actors().to_vec());
        let mut form_b = Network::empty(prev.actors().to_vec());
        for (i, j) in prev.dyads() {
            let dissolved = prev.has(i, j) && !minus.has(i, j);
            form_a.set(i, j, plus.has(i, j) && !dissolved);
            form_b.set(i, j, minus.has(i, j) || (plus.has(i, j) && !prev.has(i, j)));
        }
        assert_eq!(form_a, form_b, "the two closed forms must coincide");
        assert_eq!(form_a, rebuilt);
    }
    pass("01 reconstruction round trip (10k pairs, n<=8)", started, 10.0);
}

#[test]
fn criterion_02_statistic_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    for _ in 0..1000 {
        let n = rng.gen_range(3..=8u32);
        let density = rng.gen_range(0.0..1.0);
        let net = random_network(&mut rng, n, density);
        let n = n as usize;
        // dyadic statistics against O(n^3) enumeration
        for i in 0..n {
            let out_count = (0..n).filter(|&k| k != i && net.has(i, k)).count();
            let got = outdegree(&net, i).unwrap();
            assert!((got - 100.0 * out_count as f64 / (n - 1) as f64).abs() < 1e-12);
            for j in 0..n {
                if i == j {
                    continue;
                }
                assert_eq!(
                    reciprocity(&net, i, j).unwrap(),
                    if net.has(j, i) { 1.0 } else { 0.0 }
                );
                let mut two_paths = 0usize;
                let mut shared = 0usize;
                for k in 0..n {
                    if k != i && k != j {
                        if net.has(i, k) && net.has(k, j) {
                            two_paths += 1;
                        }
                        if net.has(k, i) && net.has(k, j) {
                            shared += 1;
                        }
                    }
                }
                let trans = transitivity_stat(&net, i, j).unwrap();
                assert!((trans - 100.0 * two_paths as f64 / (n - 2) as f64).abs() < 1e-12);
                let sup = shared_suppliers(&net, i, j).unwrap();
                assert!((sup - 100.0 * shared as f64 / (n - 2) as f64).abs() < 1e-12);
            }
        }
        // global statistics against brute force
        let s = global_stats(&net).unwrap();
        let mut size = 0usize;
        let mut mutual = 0usize;
        let mut active = 0usize;
        for i in 0..n {
            let mut engaged = false;
            for j in 0..n {
                if i != j {
                    if net.has(i, j) {
                        size += 1;
                        if net.has(j, i) {
                            mutual += 1;
                        }
                    }
                    engaged |= net.has(i, j) || net.has(j, i);
                }
            }
            active += engaged as usize;
        }
        assert_eq!(s.size, size as f64);
        assert_eq!(s.order, active as f64);
        assert!((s.density - size as f64 / (n * (n - 1)) as f64).abs() < 1e-12);
        assert!((s.mean_indegree - size as f64 / n as f64).abs() < 1e-12);
        let recip = if size == 0 { 0.0 } else { mutual as f64 / size as f64 };
        assert!((s.reciprocity - recip).abs() < 1e-12);
        let und = |a: usize, b: usize| net.has(a, b) || net.has(b, a);
        let mut triangles = 0usize;
        let mut triples = 0usize;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i < j && j < k && und(i, j) && und(i, k) && und(j, k) {
                        triangles += 1;
                    }
                }
            }
        }
        for v in 0..n {
            let deg = (0..n).filter(|&k| k != v && und(v, k)).count();
            triples += deg.saturating_sub(1) * deg / 2;
        }
        let want = if triples == 0 { 0.0 } else { 3.0 * triangles as f64 / triples as f64 };
        assert!((s.transitivity - want).abs() < 1e-12);
    }
    pass("02 statistic oracles (1000 networks, n<=8)", started, 30.0);
}

/// Newton logistic MLE with a naive Gauss-Jordan solve, independent of the
/// production linear algebra.
fn newton_oracle(x: &[Vec<f64>], y: &[f64], iters: usize) -> Vec<f64> {
    let n = x.len();
    let p = x[0].len();
    let mut beta = vec![0.0; p];
    for _ in 0..iters {
        let mut h = vec![vec![0.0; p + 1]; p];
        for r in 0..n {
            let eta: f64 = (0..p).map(|c| x[r][c] * beta[c]).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = mu * (1.0 - mu);
            for a in 0..p {
                h[a][p] += x[r][a] * (y[r] - mu);
                for b in 0..p {
                    h[a][b] += w * x[r][a] * x[r][b];
                }
            }
        }
        for col in 0..p {
            let pivot = (col..p)
                .max_by(|&a, &b| h[a][col].abs().partial_cmp(&h[b][col].abs()).unwrap())
                .unwrap();
            h.swap(col, pivot);
            let d = h[col][col];
            for v in h[col].iter_mut() {
                *v /= d;
            }
            for row in 0..p {
                if row != col {
                    let f = h[row][col];
                    for k in 0..=p {
                        h[row][k] -= f * h[col][k];
                    }
                }
            }
        }
        for c in 0..p {
            beta[c] += h[c][p];
        }
    }
    beta
}

#[test]
fn criterion_03_zero_penalty_matches_newton_mle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(120..=500);
        let p = rng.gen_range(2..=10);
        let true_beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            row[0] = 1.0;
            let eta: f64 = row.iter().zip(&true_beta).map(|(a, b)| a * b).sum();
            let prob = 1.0 / (1.0 + (-eta).exp());
            y.push(if rng.gen::<f64>() < prob { 1.0 } else { 0.0 });
            x.push(row);
        }
        let oracle = newton_oracle(&x, &y, 50);
        if oracle.iter().any(|b| !b.is_finite() || b.abs() > 6.0) {
            continue; // severely separated draw; take another fixture
        }
        let blocks: Vec<DesignBlock> = (0..p)
            .map(|c| {
                let col: Vec<f64> = x.iter().map(|row| row[c]).collect();
                DesignBlock::column(format!("x{c}"), &col)
            })
            .collect();
        let fit = pirls_fit(&y, &blocks, &vec![0.0; p], None, &PirlsOptions::default()).unwrap();
        let max_err = (0..p)
            .map(|c| (fit.coefficients[c] - oracle[c]).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-6, "coefficient max-norm error {max_err}");
        checked += 1;
    }
    pass("03 zero-penalty fit equals Newton MLE (50 fixtures)", started, 60.0);
}

#[test]
fn criterion_04_penalty_limit_collapses_curves_to_constants() {
    let started = Instant::now();
    let config = SynthConfig {
        n_actors: 20,
        n_periods: 20,
        seed: 1004,
        ..Default::default()
    };
    let synth = generate(&config).unwrap();
    let panel = synth.to_panel(0.0).unwrap();
    let mut spec = synth.model_spec();
    spec.tv_order = 1;
    let mut per_term = std::collections::BTreeMap::new();
    for term in ["recip", "alliance", "gdp_j"] {
        per_term.insert(term.to_string(), 1e8);
    }
    per_term.insert("sender_effect".into(), 1.0);
    per_term.insert("receiver_effect".into(), 1.0);
    let settings = FitSettings {
        lambda: LambdaMode::Fixed {
            default: 1.0,
            per_term,
        },
        ..Default::default()
    };
    let model = fit_model(&panel, &spec, &settings).unwrap();
    let grid: Vec<f64> = panel.periods().iter().map(|&p| p as f64).collect();
    for side_fit in model.side_fits() {
        for term in ["recip", "alliance", "gdp_j"] {
            let (values, _) = side_fit.coefficient_curve(term, &grid).unwrap();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let scale = 1.0f64.max(0.5 * (lo.abs() + hi.abs()));
            assert!(
                (hi - lo) / scale < 1e-3,
                "{} {term}: relative range {} under lambda 1e8",
                side_fit.side.label(),
                (hi - lo) / scale
            );
        }
    }
    pass("04 first-order penalty limit flattens every curve", started, 120.0);
}

#[test]
fn criterion_05_gradient_check() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    use stergm::fit::pirls::penalized_score;
    use stergm::splines::{apply_centering_constraint, varying_coeff_block, SplineBasis};

    for fixture in 0..20 {
        let n = rng.gen_range(200..400);
        let times: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
        let cov: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
        let y: Vec<f64> = times
            .iter()
            .zip(&cov)
            .map(|(&t, &c)| {
                let eta = -0.3 + c * (0.6 + 0.3 * (t / 6.0).sin());
                if rng.gen::<f64>() < 1.0 / (1.0 + (-eta as f64).exp()) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let basis = SplineBasis::new(0.0, 20.0, 7, 2, 1).unwrap();
        let smooth = apply_centering_constraint(
            &varying_coeff_block(&cov, &times, &basis, "c(t)").unwrap(),
        )
        .unwrap();
        let blocks = vec![
            DesignBlock::column("intercept", &vec![1.0; n]),
            DesignBlock::column("c", &cov),
            smooth,
        ];
        let lambdas = vec![0.0, 0.0, 10f64.powf(rng.gen_range(-1.0..3.0))];
        let fit = pirls_fit(&y, &blocks, &lambdas, None, &PirlsOptions::default()).unwrap();
        assert!(
            fit.score_norm < 1e-6,
            "fixture {fixture}: converged score norm {}",
            fit.score_norm
        );

        // finite-difference comparison of the penalized log-likelihood
        // gradient, at the optimum and at a displaced point
        let offsets = stergm::fit::pirls::block_offsets(&blocks);
        let p = fit.coefficients.len();
        let pen_ll = |beta: &[f64]| -> f64 {
            let mut ll = 0.0;
            for r in 0..n {
                let eta: f64 = blocks
                    .iter()
                    .enumerate()
                    .map(|(k, b)| b.row_dot(r, &beta[offsets[k]..offsets[k + 1]]))
                    .sum();
                ll += y[r] * eta - if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            }
            let mut pen = 0.0;
            for (k, b) in blocks.iter().enumerate() {
                if lambdas[k] > 0.0 {
                    if let Some(q) = &b.penalty {
                        pen += lambdas[k] * q.quad_form(&beta[offsets[k]..offsets[k + 1]]);
                    }
                }
            }
            ll - 0.5 * pen
        };
        let fd_gradient = |beta: &[f64]| -> Vec<f64> {
            (0..p)
                .map(|c| {
                    let h = 1e-5 * (1.0 + beta[c].abs());
                    let mut plus = beta.to_vec();
                    plus[c] += h;
                    let mut minus = beta.to_vec();
                    minus[c] -= h;
                    (pen_ll(&plus) - pen_ll(&minus)) / (2.0 * h)
                })
                .collect()
        };
        let eta_of = |beta: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|r| {
                    blocks
                        .iter()
                        .enumerate()
                        .map(|(k, b)| b.row_dot(r, &beta[offsets[k]..offsets[k + 1]]))
                        .sum()
                })
                .collect()
        };

        // displaced point: gradients are order one there, so the relative
        // error is well defined
        let displaced: Vec<f64> = fit
            .coefficients
            .iter()
            .enumerate()
            .map(|(c, b)| b + if c % 2 == 0 { 0.05 } else { -0.05 })
            .collect();
        let eta_d = eta_of(&displaced);
        let analytic_d = penalized_score(&y, &blocks, &offsets, &lambdas, &displaced, &eta_d);
        let fd_d = fd_gradient(&displaced);
        let scale = fd_d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        let rel = analytic_d
            .iter()
            .zip(&fd_d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / scale;
        assert!(rel < 1e-4, "fixture {fixture}: displaced relative error {rel}");

        // at the optimum both gradients must vanish at the same scale
        let beta_hat = fit.coefficients.to_vec();
        let eta_hat = eta_of(&beta_hat);
        let analytic_hat = penalized_score(&y, &blocks, &offsets, &lambdas, &beta_hat, &eta_hat);
        let fd_hat = fd_gradient(&beta_hat);
        let max_diff = analytic_hat
            .iter()
            .zip(&fd_hat)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_diff / scale < 1e-4,
            "fixture {fixture}: at-optimum gradient mismatch {max_diff}"
        );
    }
    pass("05 gradient matches central finite differences (20 fixtures)", started, 60.0);
}

fn pooled_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da.sqrt() * db.sqrt())
}

#[test]
fn criterion_06_parameter_recovery_on_the_standard_fixture() {
    let started = Instant::now();
    let synth = generate(&SynthConfig::default()).unwrap();
    let panel = synth.to_panel(0.0).unwrap();
    let spec = synth.model_spec();
    let settings = FitSettings {
        lambda: LambdaMode::Select,
        ..Default::default()
    };
    let model = fit_model(&panel, &spec, &settings).unwrap();
    let side = model.side(Side::Formation).expect("formation side fitted");
    let grid: Vec<f64> = panel.periods().iter().map(|&p| p as f64).collect();

    for (cov, truth) in &synth.formation_truth.curves {
        let (values, _) = side.coefficient_curve(cov.name(), &grid).unwrap();
        let rmse = (values
            .iter()
            .zip(truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / grid.len() as f64)
            .sqrt();
        println!("  recovery {}: rmse {rmse:.4}", cov.name());
        assert!(rmse < 0.15, "{}: curve rmse {rmse}", cov.name());
    }
    for role in [Role::Sender, Role::Receiver] {
        let truth = match role {
            Role::Sender => &synth.formation_truth.sender_curves,
            Role::Receiver => &synth.formation_truth.receiver_curves,
        };
        let mut fitted = Vec::new();
        let mut expected = Vec::new();
        for (slot, &actor) in side.layout.re_actors.clone().iter().enumerate() {
            let (values, _) = side.actor_curve(role, actor, &grid).unwrap();
            for (g, v) in values.iter().enumerate() {
                fitted.push(*v);
                expected.push(truth[[slot, g]]);
            }
        }
        let corr = pooled_correlation(&fitted, &expected);
        println!("  recovery {:?} curve correlation: {corr:.4}", role);
        assert!(corr > 0.8, "{role:?} correlation {corr}");
    }
    pass("06 parameter recovery (30 actors x 40 periods)", started, 300.0);
}

/// Cyclic Jacobi eigensolver, the slow textbook route.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[test]
fn criterion_07_fpca_matches_dense_eigendecomposition() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    for _ in 0..50 {
        let n = rng.gen_range(4..20);
        let t = 100;
        let grid: Vec<f64> = (0..t).map(|g| 1950.0 + g as f64 * 50.0 / (t - 1) as f64).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a = rng.gen_range(-1.0..1.0);
                let b = rng.gen_range(-0.05..0.05);
                let c = rng.gen_range(-0.8..0.8);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                grid.iter()
                    .map(|&x| a + b * (x - 1975.0) + c * ((x - 1950.0) * 0.3 + phase).sin())
                    .collect()
            })
            .collect();
        let mut curves = ndarray::Array2::zeros((n, t));
        for (i, row) in rows.iter().enumerate() {
            for (g, &v) in row.iter().enumerate() {
                curves[[i, g]] = v;
            }
        }
        let bundle = stergm::fpca::CurveBundle {
            actors: (0..n).map(|i| format!("A{i:02}")).collect(),
            grid: grid.clone(),
            curves,
        };
        let m = n.min(t);
        let result = stergm::fpca::fpca(&bundle, m).unwrap();

        let share_sum: f64 = result.variance_shares.iter().sum();
        assert!((share_sum - 1.0).abs() < 1e-10, "shares sum {share_sum}");

        // oracle covariance and eigen decomposition from first principles
        let mean: Vec<f64> = (0..t)
            .map(|g| rows.iter().map(|r| r[g]).sum::<f64>() / n as f64)
            .collect();
        let mut cov = vec![vec![0.0; t]; t];
        for a in 0..t {
            for b in 0..t {
                cov[a][b] = rows
                    .iter()
                    .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                    .sum::<f64>()
                    / n as f64;
            }
        }
        let (evals, evecs) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by(|&a, &b| evals[b].partial_cmp(&evals[a]).unwrap());
        let w = bundle.quadrature_weight();
        for comp in 0..m {
            let want = w * evals[order[comp]].max(0.0);
            assert!(
                (result.eigenvalues[comp] - want).abs() < 1e-8,
                "eigenvalue {comp}: {} vs {want}",
                result.eigenvalues[comp]
            );
            if want > 1e-7 * result.eigenvalues[0].max(1e-300) {
                let oracle_xi: Vec<f64> =
                    (0..t).map(|g| evecs[g][order[comp]] / w.sqrt()).collect();
                let dot: f64 = (0..t)
                    .map(|g| result.eigenfunctions[[comp, g]] * oracle_xi[g])
                    .sum();
                let sign = dot.signum();
                for g in 0..t {
                    let diff = (result.eigenfunctions[[comp, g]] - sign * oracle_xi[g]).abs();
                    assert!(diff < 1e-6, "component {comp}, grid {g}: diff {diff}");
                }
            }
        }
    }
    pass("07 fpca equals dense eigendecomposition (50 bundles)", started, 60.0);
}

#[test]
fn criterion_08_auc_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let mut done = 0;
    while done < 1000 {
        let n = rng.gen_range(4..60);
        let coarse = rng.gen::<bool>();
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if coarse {
                    (rng.gen_range(0..6) as f64) / 6.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let prevalence = rng.gen_range(0.1..0.9);
        let labels: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < prevalence { 1.0 } else { 0.0 })
            .collect();
        let pos = labels.iter().filter(|&&l| l == 1.0).count();
        if pos == 0 || pos == n {
            continue;
        }
        // exhaustive pair counting
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, (&si, &li)) in scores.iter().zip(&labels).enumerate() {
            for (&sj, &lj) in scores.iter().zip(&labels).skip(i + 1) {
                let (ps, ns) = match (li == 1.0, lj == 1.0) {
                    (true, false) => (si, sj),
                    (false, true) => (sj, si),
                    _ => continue,
                };
                pairs += 1.0;
                wins += if ps > ns { 1.0 } else if ps == ns { 0.5 } else { 0.0 };
            }
        }
        let roc = roc_auc(&scores, &labels).unwrap();
        assert!((roc - wins / pairs).abs() < 1e-12);

        // exhaustive threshold sweep
        let mut thresholds: Vec<f64> = scores.clone();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let mut area = 0.0;
        let mut prev_recall = 0.0;
        for &thr in &thresholds {
            let tp = scores
                .iter()
                .zip(&labels)
                .filter(|&(&s, &l)| s >= thr && l == 1.0)
                .count() as f64;
            let fp = scores
                .iter()
                .zip(&labels)
                .filter(|&(&s, &l)| s >= thr && l == 0.0)
                .count() as f64;
            let recall = tp / pos as f64;
            area += (recall - prev_recall) * (tp / (tp + fp));
            prev_recall = recall;
        }
        let pr = pr_auc(&scores, &labels).unwrap();
        assert!((pr - area).abs() < 1e-12);
        done += 1;
    }

    // shuffled labels stay near one half on average
    let mut mean = 0.0;
    for _ in 0..200 {
        let n = 300;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut labels: Vec<f64> = (0..n).map(|i| if i < 60 { 1.0 } else { 0.0 }).collect();
        labels.shuffle(&mut rng);
        mean += roc_auc(&scores, &labels).unwrap();
    }
    mean /= 200.0;
    assert!((mean - 0.5).abs() < 0.05, "shuffled-label mean {mean}");
    pass("08 auc oracles (1000 fixtures + 200 shuffled trials)", started, 60.0);
}

#[test]
fn criterion_09_simulation_gof_self_consistency() {
    let started = Instant::now();
    let synth = generate(&SynthConfig::default()).unwrap();
    let panel = synth.to_panel(0.0).unwrap();
    let tables = panel.covariates();
    let n_sims = 1000;

    // replicate bands simulated directly from the true generating process
    let (transitions, _) = build_all_transitions(&panel, Default::default()).unwrap();
    let mut inside_size = 0usize;
    let mut inside_density = 0usize;
    let mut n_periods = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    for td in &transitions {
        let t_idx = (td.period - panel.periods()[0]) as usize;
        // true probabilities straight from the generator's sampled curves
        let true_prob = |i: usize, j: usize, truth: &stergm::synth::TrueSide| -> f64 {
            let (gi, gj) = (td.actors[i], td.actors[j]);
            let mut eta = truth.intercept
                + truth.sender_curves[[gi as usize, t_idx]]
                + truth.receiver_curves[[gj as usize, t_idx]];
            for (cov, curve) in &truth.curves {
                let value = match cov {
                    Covariate::Recip => {
                        if td.y_prev.has(j, i) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Covariate::Alliance => tables.alliance(td.period - 1, gi, gj),
                    Covariate::GdpReceiver => tables.gdp(td.period - 1, gj).unwrap(),
                    _ => 0.0,
                };
                eta += value * curve[t_idx];
            }
            1.0 / (1.0 + (-eta).exp())
        };
        let p_form: Vec<f64> = td
            .formation
            .iter()
            .map(|o| true_prob(o.i, o.j, &synth.formation_truth))
            .collect();
        let p_pers: Vec<f64> = td
            .persistence
            .iter()
            .map(|o| true_prob(o.i, o.j, &synth.persistence_truth))
            .collect();
        let mut sizes = Vec::with_capacity(n_sims);
        let mut densities = Vec::with_capacity(n_sims);
        for _rep in 0..n_sims {
            let mut y_plus = td.y_prev.clone();
            for (obs, &p) in td.formation.iter().zip(&p_form) {
                if rng.gen::<f64>() < p {
                    y_plus.set(obs.i, obs.j, true);
                }
            }
            let mut y_minus = Network::empty(td.actors.clone());
            for (obs, &p) in td.persistence.iter().zip(&p_pers) {
                if rng.gen::<f64>() < p {
                    y_minus.set(obs.i, obs.j, true);
                }
            }
            let rebuilt = reconstruct(&td.y_prev, &y_plus, &y_minus).unwrap();
            let s = global_stats(&rebuilt).unwrap();
            sizes.push(s.size);
            densities.push(s.density);
        }
        let obs = global_stats(&td.y_curr).unwrap();
        let smin = sizes.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = sizes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dmin = densities.iter().cloned().fold(f64::INFINITY, f64::min);
        let dmax = densities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        inside_size += (obs.size >= smin && obs.size <= smax) as usize;
        inside_density += (obs.density >= dmin && obs.density <= dmax) as usize;
        n_periods += 1;
    }
    let size_share = inside_size as f64 / n_periods as f64;
    let density_share = inside_density as f64 / n_periods as f64;
    println!("  size inside band: {inside_size}/{n_periods}; density inside band: {inside_density}/{n_periods}");
    assert!(size_share >= 0.95, "size coverage {size_share}");
    assert!(density_share >= 0.95, "density coverage {density_share}");

    // moment check through the simulation interface on a fitted model
    let spec = synth.model_spec();
    let settings = FitSettings {
        lambda: LambdaMode::Fixed {
            default: 10.0,
            per_term: Default::default(),
        },
        ..Default::default()
    };
    let model = fit_model(&panel, &spec, &settings).unwrap();
    let step = panel.periods()[panel.periods().len() - 2];
    let sims = simulate_networks(&model, &panel, step, n_sims, 2026, Default::default()).unwrap();
    let pred = predict_transition(&model, &panel, step, Default::default()).unwrap();
    let expected: f64 = pred.scored.iter().map(|d| d.probability).sum();
    let variance: f64 = pred
        .scored
        .iter()
        .map(|d| d.probability * (1.0 - d.probability))
        .sum();
    let mc_se = (variance / n_sims as f64).sqrt();
    let mean_size: f64 = sims.iter().map(|s| s.edge_count() as f64).sum::<f64>() / n_sims as f64;
    println!(
        "  replicate mean size {mean_size:.2} vs expected {expected:.2} (3 mc se {:.2})",
        3.0 * mc_se
    );
    assert!((mean_size - expected).abs() < 3.0 * mc_se);
    pass("09 simulation gof self-consistency (1000 replicates)", started, 180.0);
}

#[test]
fn criterion_10_threshold_and_window_robustness_harness() {
    let started = Instant::now();
    let synth = generate(&SynthConfig::default()).unwrap();
    let out_dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("robustness");
    std::fs::create_dir_all(&out_dir).unwrap();

    let spec = ModelSpec {
        variant: Variant::Stergm,
        terms: vec![
            Term::constant(Covariate::Recip),
            Term::constant(Covariate::Alliance),
            Term::constant(Covariate::GdpReceiver),
        ],
        include_intercept: true,
        tv_dim: 8,
        tv_degree: 2,
        tv_order: 1,
        re_dim: 9,
        re_degree: 2,
        re_order: 1,
    };
    let settings = FitSettings {
        lambda: LambdaMode::Fixed {
            default: 1.0,
            per_term: Default::default(),
        },
        ..Default::default()
    };

    // thresholds 0, 0.5, ..., 3: exact monotone nesting plus a coefficient
    // comparison table
    let thresholds: Vec<f64> = (0..=6).map(|k| k as f64 * 0.5).collect();
    let mut table = String::from("threshold,side,term,estimate,se\n");
    let mut previous: Option<NetworkPanel> = None;
    for &threshold in &thresholds {
        let panel = synth.to_panel(threshold).unwrap();
        if let Some(prev) = &previous {
            for &p in panel.periods() {
                let coarse = panel.network(p).unwrap();
                let fine = prev.network(p).unwrap();
                assert!(
                    coarse.subset_of(fine),
                    "nesting violated at threshold {threshold}, period {p}"
                );
            }
        }
        let model = fit_model(&panel, &spec, &settings).unwrap();
        for side_fit in model.side_fits() {
            for term in ["intercept", "recip", "alliance", "gdp_j"] {
                let (estimate, se) = side_fit.constant_coefficient(term).unwrap();
                table.push_str(&format!(
                    "{threshold},{},{term},{estimate},{se}\n",
                    side_fit.side.label()
                ));
            }
        }
        previous = Some(panel);
    }
    std::fs::write(out_dir.join("thresholds.csv"), &table).unwrap();

    // window widths 1, 2, 3
    let mut wtable = String::from("width,side,term,estimate,se\n");
    for width in [1usize, 2, 3] {
        let (flows, covariates) =
            stergm::panel::aggregate_windows(&synth.flows, width, &synth.covariates).unwrap();
        let registry = if width == 1 {
            synth.registry.clone()
        } else {
            let map = stergm::panel::WindowMap::new(1, synth.config.n_periods, width).unwrap();
            synth.registry.map_periods(&map).unwrap()
        };
        let panel = stergm::panel::binarize(&flows, 0.0, &registry, &covariates)
            .unwrap()
            .prepare()
            .unwrap();
        let model = fit_model(&panel, &spec, &settings).unwrap();
        for side_fit in model.side_fits() {
            for term in ["intercept", "recip", "alliance", "gdp_j"] {
                let (estimate, se) = side_fit.constant_coefficient(term).unwrap();
                wtable.push_str(&format!(
                    "{width},{},{term},{estimate},{se}\n",
                    side_fit.side.label()
                ));
            }
        }
    }
    std::fs::write(out_dir.join("windows.csv"), &wtable).unwrap();
    println!("  comparison tables in {}", out_dir.display());
    pass("10 threshold/window robustness harness", started, 300.0);
}

#[test]
fn criterion_11_pipeline_determinism_across_thread_counts() {
    let started = Instant::now();
    use stergm::pipeline::{run, RunConfig, Stage, SynthParams};

    let base = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("determinism");
    let _ = std::fs::remove_dir_all(&base);
    let fixture_dir = base.join("fixture");
    let mut synth_config = RunConfig {
        out_dir: fixture_dir.clone(),
        seed: 404,
        synth: SynthParams {
            n_actors: 10,
            n_periods: 10,
            staggered_entry: false,
        },
        ..Default::default()
    };
    run(&synth_config, Stage::Synth).unwrap();
    synth_config.edges = Some(fixture_dir.join("edges.csv"));
    synth_config.monadic = Some(fixture_dir.join("monadic.csv"));
    synth_config.dyadic = Some(fixture_dir.join("dyadic.csv"));
    synth_config.registry = Some(fixture_dir.join("registry.csv"));
    synth_config.model = ModelSpec {
        variant: Variant::Stergm,
        terms: vec![
            Term::time_varying(Covariate::Recip),
            Term::time_varying(Covariate::Alliance),
            Term::constant(Covariate::GdpReceiver),
        ],
        include_intercept: true,
        tv_dim: 6,
        tv_degree: 2,
        tv_order: 1,
        re_dim: 5,
        re_degree: 2,
        re_order: 1,
    };
    synth_config.lambda = LambdaMode::Select;
    synth_config.n_sims = 200;

    let stages = [
        Stage::Ingest,
        Stage::Fit,
        Stage::Curves,
        Stage::Fpca,
        Stage::Evaluate,
        Stage::Simulate,
        Stage::Gof,
    ];
    let mut outputs: Vec<std::collections::BTreeMap<String, Vec<u8>>> = Vec::new();
    for (label, threads) in [("one", 1usize), ("four", 4usize)] {
        let mut files = std::collections::BTreeMap::new();
        for stage in stages {
            // fpca needs random smooths; run it with its own model
            let mut config = synth_config.clone();
            config.threads = Some(threads);
            config.out_dir = base.join(format!("{label}_{}", stage.name()));
            if matches!(stage, Stage::Fpca) {
                config.model = ModelSpec {
                    variant: Variant::StergmRe,
                    terms: vec![
                        Term::constant(Covariate::Recip),
                        Term::random_smooth(Role::Sender),
                        Term::random_smooth(Role::Receiver),
                    ],
                    include_intercept: true,
                    tv_dim: 6,
                    tv_degree: 2,
                    tv_order: 1,
                    re_dim: 4,
                    re_degree: 2,
                    re_order: 1,
                };
                config.lambda = LambdaMode::Fixed {
                    default: 5.0,
                    per_term: Default::default(),
                };
            }
            let summary = run(&config, stage)
                .unwrap_or_else(|e| panic!("stage {} failed: {e}", stage.name()));
            for path in summary.outputs {
                let rel = format!(
                    "{}/{}",
                    stage.name(),
                    path.strip_prefix(&config.out_dir).unwrap().display()
                );
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
        outputs.push(files);
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "both runs must produce the same file set"
    );
    for (name, bytes) in a {
        assert_eq!(
            bytes, &b[name],
            "{name} differs between thread counts"
        );
    }
    println!("  {} files byte-identical across thread counts", a.len());
    pass("11 pipeline determinism across parallelism degrees", started, 300.0);
}
