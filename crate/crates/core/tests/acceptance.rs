//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mompc::analysis::{
    car_objectives, car_parameter_ranges, delta2_convergence, sobol_first_order, ParameterRange, SensitivityReport,
};
use mompc::bench::{uncovered_fraction, Lss25Problem, WittingOcp, WittingProblem};
use mompc::control::{mpc_run, reference_distance, rpm_refine, MethodVariant, MpcConfig, RpmConfig, RunOptions};
use mompc::library::{build_library, save, BuildOptions, GridSpec, Library, LibraryManifest};
use mompc::moo::{archive_update, Archive, ArchiveEntry, Bounds, DecisionPoint, RealizationSet};
use mompc::ocp::{evaluate, evaluate_realizations, rk4_step, UncertaintyBox};
use mompc::service::{router, ServiceState, Snapshot};
use mompc::vehicle::{
    dynamics_rhs, simulate, symmetry_reduce, CarProblem, ReducedState, Track, VehicleParams, VehicleState,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tracks_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../tracks")
}

fn below_strict(p: &[f64], q: &[f64]) -> bool {
    p.iter().zip(q).all(|(a, b)| a <= b) && p != q
}

fn brute_force_front(pop: &[Vec<Vec<f64>>]) -> Vec<usize> {
    let dominated = |a: &[Vec<f64>], b: &[Vec<f64>]| a.iter().all(|p| b.iter().any(|q| below_strict(p, q)));
    let same = |a: &[Vec<f64>], b: &[Vec<f64>]| a.iter().all(|p| b.contains(p)) && b.iter().all(|q| a.contains(q));
    (0..pop.len())
        .filter(|&i| !(0..pop.len()).any(|j| j != i && dominated(&pop[j], &pop[i])))
        .filter(|&i| !(0..i).any(|j| same(&pop[j], &pop[i])))
        .collect()
}

fn archiver_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bounds = Bounds::uniform(1, 0.0, 1e6).unwrap();
    let mut archive_time = Duration::ZERO;
    for round in 0..500 {
        let n = rng.gen_range(1..=200);
        let max_points = if round % 2 == 0 { 1 } else { 5 };
        let pop: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| {
                let m = rng.gen_range(1..=max_points);
                (0..m).map(|_| vec![rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64]).collect()
            })
            .collect();
        let entries: Vec<ArchiveEntry> = pop
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let d = DecisionPoint::new(vec![i as f64], &bounds).unwrap();
                ArchiveEntry::new(d, RealizationSet::from_points(s).unwrap())
            })
            .collect();
        let t = Instant::now();
        let archive = archive_update(entries, Archive::new()).map_err(|e| e.to_string())?;
        archive_time += t.elapsed();
        let mut got: Vec<usize> = archive.decisions().iter().map(|d| d[0] as usize).collect();
        got.sort_unstable();
        let expected = brute_force_front(&pop);
        if got != expected {
            return Err(format!("population {round}: archive {got:?} != oracle {expected:?}"));
        }
    }
    ensure(
        archive_time < Duration::from_secs(5),
        format!("500 populations match the oracle; archiving took {:.2} s", archive_time.as_secs_f64()),
    )
}

fn lss25_reproduction() -> Outcome {
    let archive = Lss25Problem::efficient_set(21).map_err(|e| e.to_string())?;
    let mut labels: Vec<&str> = archive.decisions().iter().filter_map(|u| Lss25Problem::label(u)).collect();
    labels.sort_unstable();
    ensure(
        labels == ["u_II", "u_IV"] && archive.len() == 2,
        format!("efficient set {labels:?}"),
    )
}

fn witting_invariance() -> Outcome {
    let n = 200;
    let tol = WittingProblem::grid_cell(n) * (1.0 + 1e-9);
    let fronts: Vec<_> = [0.1, 0.5, 0.9].iter().map(|&a| WittingProblem::reference_front(a, n)).collect();
    let mut worst: f64 = 0.0;
    for a in &fronts {
        for b in &fronts {
            worst = worst.max(uncovered_fraction(&a.decisions, &b.decisions, tol));
        }
    }
    let lost = WittingProblem::lost_fraction(0.5, 1.5, n);
    ensure(
        worst == 0.0 && lost >= 0.1,
        format!("alpha 0.1/0.5/0.9 uncovered {worst:.3}; alpha 1.5 loses {:.1}% of the alpha 0.5 set", 100.0 * lost),
    )
}

fn convergence_trend() -> Outcome {
    let table = delta2_convergence(0.5, &[500, 1_000, 10_000, 100_000], 30, 100, 200, 0).map_err(|e| e.to_string())?;
    let rows = &table.rows;
    let decreasing = rows.windows(2).all(|w| {
        w[1].median_decision < w[0].median_decision && w[1].median_objective < w[0].median_objective
    });
    let last = rows.last().unwrap().median_objective;
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{:.4}/{:.4}", r.budget, r.median_decision, r.median_objective))
        .collect();
    ensure(
        decreasing && last <= 0.05,
        format!("median decision/objective delta2 {}", summary.join(" ")),
    )
}

fn rpm_benchmark() -> Outcome {
    let instance = WittingOcp { alpha: 0.5 };
    let unc = UncertaintyBox::symmetric(0.4, 21).unwrap();
    let z = [0.0, 0.0];
    let mut oracle = f64::INFINITY;
    for &u1 in &WittingProblem::decision_grid(200) {
        for &u2 in &WittingProblem::decision_grid(200) {
            let r = evaluate_realizations(&instance, &[u1, u2], &unc).map_err(|e| e.to_string())?;
            oracle = oracle.min(reference_distance(&r, &z));
        }
    }
    let config = RpmConfig { budget: 600, ..RpmConfig::default() };
    let res = rpm_refine(&instance, &[-1.8, -1.6], &unc, &z, &config).map_err(|e| e.to_string())?;
    ensure(
        res.phi <= oracle + 1e-3 && res.evaluations <= 600,
        format!(
            "phi {:.6} -> {:.6} in {} evaluations; grid oracle {oracle:.6}",
            res.phi_init, res.phi, res.evaluations
        ),
    )
}

fn vehicle_equilibrium() -> Outcome {
    let p = CarProblem::new(VehicleParams::default(), ReducedState::default(), CarProblem::default_grid(), 10.0)
        .map_err(|e| e.to_string())?;
    let j = evaluate(&p, &[0.0], &[0.0; 11]).map_err(|e| e.to_string())?.objectives;
    ensure(j[0].abs() <= 1e-6 && (j[1] + 15.0).abs() <= 1e-6, format!("J = ({:.3e}, {:.9})", j[0], j[1]))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Objectives of the car on an exact circle of curvature `kappa` centred at
/// the origin, integrated in world coordinates.
fn circle_objectives(x0: ReducedState, u: &[f64], phi0: f64) -> [f64; 2] {
    let params = VehicleParams::default();
    let radius = 1.0 / x0.kappa;
    let rho = radius - x0.d;
    let h = CarProblem::default_grid().h;
    // World state plus the running integral of d^2.
    let mut z = [rho * phi0.cos(), rho * phi0.sin(), phi0 + PI / 2.0 + x0.xi, x0.v_y, x0.r, 0.0];
    let rhs = |x: &[f64], u: f64, dx: &mut [f64]| {
        let s = VehicleState { p1: x[0], p2: x[1], theta: x[2], v_y: x[3], r: x[4] };
        let f = dynamics_rhs(&params, &s, u).unwrap();
        dx[..5].copy_from_slice(&f.to_array());
        let d = radius - x[0].hypot(x[1]);
        dx[5] = d * d;
    };
    for &uk in &u[..u.len() - 1] {
        let mut next = [0.0; 6];
        rk4_step(rhs, &z, uk, h, &mut next);
        z = next;
    }
    let mut swept = z[1].atan2(z[0]) - phi0;
    swept = (swept + PI).rem_euclid(2.0 * PI) - PI;
    [z[5], -radius * swept]
}

fn symmetry_equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = VehicleParams::default();
    let circle = Track::circle(50.0, 720, 10.0).unwrap();
    let (mut traj_err, mut reduced_err, mut objective_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let s = VehicleState {
            p1: rng.gen_range(-50.0..50.0),
            p2: rng.gen_range(-50.0..50.0),
            theta: rng.gen_range(-PI..PI),
            v_y: rng.gen_range(-1.0..1.0),
            r: rng.gen_range(-0.5..0.5),
        };
        let u: Vec<f64> = (0..11).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let (angle, tx, ty) = (rng.gen_range(-PI..PI), rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
        let (sn, cs) = f64::sin_cos(angle);
        let mv = |s: VehicleState| VehicleState {
            p1: cs * s.p1 - sn * s.p2 + tx,
            p2: sn * s.p1 + cs * s.p2 + ty,
            theta: s.theta + angle,
            ..s
        };
        let flip = |s: VehicleState| VehicleState { p1: s.p1, p2: -s.p2, theta: -s.theta, v_y: -s.v_y, r: -s.r };
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();

        let base = simulate(&params, s, &u[..10], 0.05).unwrap();
        let moved = simulate(&params, mv(s), &u[..10], 0.05).unwrap();
        let mirrored = simulate(&params, flip(s), &neg[..10], 0.05).unwrap();
        for ((a, b), c) in base.iter().zip(&moved).zip(&mirrored) {
            traj_err = traj_err.max(max_abs_diff(&mv(*a).to_array(), &b.to_array()));
            traj_err = traj_err.max(max_abs_diff(&flip(*a).to_array(), &c.to_array()));
        }

        // Reduction on a moved track, for a state near the centerline.
        let phi0 = rng.gen_range(-PI..PI);
        let offset = rng.gen_range(-3.0..3.0);
        let near = VehicleState {
            p1: (50.0 - offset) * phi0.cos(),
            p2: (50.0 - offset) * phi0.sin(),
            theta: phi0 + PI / 2.0 + rng.gen_range(-0.3..0.3),
            ..s
        };
        let moved_track = Track::new(
            circle.points().iter().map(|p| [cs * p[0] - sn * p[1] + tx, sn * p[0] + cs * p[1] + ty]).collect(),
            true,
            10.0,
        )
        .unwrap();
        let x1 = symmetry_reduce(&circle, &near).unwrap();
        let x2 = symmetry_reduce(&moved_track, &mv(near)).unwrap();
        reduced_err = reduced_err.max(max_abs_diff(&x1.to_array(), &x2.to_array()));

        // Objectives of the local problem against the exact circle and its mirror image.
        let x0 = ReducedState::new(s.v_y, s.r, rng.gen_range(-0.2..0.2), offset, 1.0 / 50.0);
        let local = |x0: ReducedState, u: &[f64]| {
            let p = CarProblem::new(params, x0, CarProblem::default_grid(), 10.0).unwrap();
            evaluate(&p, &[0.0], u).unwrap().objectives
        };
        let j = local(x0, &u);
        let world = circle_objectives(x0, &u, phi0);
        let j_mirror = local(x0.mirrored(), &neg);
        objective_err = objective_err.max(max_abs_diff(&j, &world)).max(max_abs_diff(&j, &j_mirror));
    }

    // Full closed loop: mirroring the start across a straight track mirrors the run.
    let track = Arc::new(Track::load(&tracks_dir().join("straight.csv")).map_err(|e| e.to_string())?);
    let start = VehicleState { p1: 5.0, p2: 1.5, theta: 0.1, v_y: 0.2, r: -0.05 };
    let mirror_start = VehicleState { p2: -start.p2, theta: -start.theta, v_y: -start.v_y, r: -start.r, ..start };
    let config = RunOptions { rpm_budget: 150, seed: 3, ..Default::default() }.config().map_err(|e| e.to_string())?;
    let a = mpc_run(MethodVariant::SbrRpm, track.clone(), None, start, 12, config.clone()).map_err(|e| e.to_string())?;
    let b = mpc_run(MethodVariant::SbrRpm, track, None, mirror_start, 12, config).map_err(|e| e.to_string())?;
    let mut loop_err: f64 = 0.0;
    for (ra, rb) in a.records.iter().zip(&b.records) {
        let (sa, sb) = (ra.state, rb.state);
        let mirrored = [sa.p1, -sa.p2, -sa.theta, -sa.v_y, -sa.r];
        loop_err = loop_err.max(max_abs_diff(&mirrored, &sb.to_array()));
    }

    ensure(
        traj_err <= 1e-9 && reduced_err <= 1e-9 && objective_err <= 1e-6 && loop_err <= 1e-6,
        format!(
            "trajectories {traj_err:.1e}, reduced states {reduced_err:.1e}, objectives {objective_err:.1e}, closed loop {loop_err:.1e}"
        ),
    )
}

fn library_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut manifest = LibraryManifest::new(GridSpec::coarse(), 200, 17);
    manifest.population_size = 20;
    let build = |options: BuildOptions| build_library(&manifest, &options).map_err(|e| e.to_string());
    let checksum = |lib: &Library, name: &str| save(lib, &dir.path().join(name)).map_err(|e| e.to_string());

    let t = Instant::now();
    let one = build(BuildOptions { workers: 1, ..Default::default() })?;
    let single_time = t.elapsed();
    let eight = build(BuildOptions { workers: 8, ..Default::default() })?;
    let journal = dir.path().join("build.journal");
    let partial = build(BuildOptions { workers: 8, journal: Some(journal.clone()), stop_after: Some(100), ..Default::default() })?;
    let resumed = build(BuildOptions { workers: 8, journal: Some(journal), resume: true, ..Default::default() })?;
    let sums = [
        checksum(&one, "one.lib")?,
        checksum(&eight, "eight.lib")?,
        checksum(&resumed, "resumed.lib")?,
    ];

    let out = Command::new(env!("CARGO_BIN_EXE_mompc"))
        .args(["build-library", "--grid", "paper", "--dry-run"])
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    let dry_ok = out.status.success() && stdout.lines().any(|l| l.trim() == "grid nodes: 223587");

    ensure(
        one.nodes.len() == 243
            && one == eight
            && one == resumed
            && partial.nodes.len() < 243
            && sums.iter().all(|s| *s == sums[0])
            && dry_ok,
        format!(
            "243 nodes identical across 1/8 workers and resume (checksum {:016x}, {:.1} s single-worker); paper dry run ok: {dry_ok}",
            sums[0],
            single_time.as_secs_f64()
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn method_comparison() -> Outcome {
    let manifest = LibraryManifest::new(GridSpec::compact(), 1000, 1);
    let library = Arc::new(build_library(&manifest, &BuildOptions::default()).map_err(|e| e.to_string())?);
    let track = Arc::new(Track::load(&tracks_dir().join("test.csv")).map_err(|e| e.to_string())?);
    let mut stats = BTreeMap::new();
    for method in MethodVariant::ALL {
        let (mut dist, mut lap, mut max_d) = (Vec::new(), Vec::new(), Vec::new());
        for seed in 0..30 {
            let config = MpcConfig { seed, ..MpcConfig::default() };
            let log = mpc_run(method, track.clone(), Some(library.clone()), track.start_state(), 1000, config)
                .map_err(|e| e.to_string())?;
            let m = log.metrics;
            dist.push(m.accumulated_distance);
            lap.push(m.lap_time.unwrap_or(f64::INFINITY));
            max_d.push(m.max_distance);
        }
        stats.insert(method.to_string(), (median(dist), median(lap), median(max_d)));
    }
    let get = |m: MethodVariant| stats[&m.to_string()];
    let offline = get(MethodVariant::OptOffOn).0.min(get(MethodVariant::SbrOffOn).0);
    let a = [MethodVariant::Hybrid, MethodVariant::SbrRpm].iter().all(|&m| get(m).0 < 0.7 * offline);
    let laps: Vec<f64> = stats.values().map(|s| s.1).collect();
    let (lo, hi) = laps.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    let b = hi.is_finite() && hi <= 1.05 * lo;
    let smallest = stats.iter().min_by(|x, y| x.1 .2.total_cmp(&y.1 .2)).map(|(k, _)| k.clone()).unwrap();
    let c = smallest == MethodVariant::Hybrid.to_string() || smallest == MethodVariant::SbrRpm.to_string();
    let table: Vec<String> = stats
        .iter()
        .map(|(k, s)| format!("{k} int|d| {:.2} lap {:.2} max|d| {:.2}", s.0, s.1, s.2))
        .collect();
    ensure(a && b && c, format!("(a) {a} (b) {b} (c) {c}; medians: {}", table.join("; ")))
}

fn sensitivity_ranking() -> Outcome {
    let report = sobol_first_order(|y| car_objectives(y, 0.0), &car_parameter_ranges(), 4096, 200, 1)
        .map_err(|e| e.to_string())?;
    let j1 = report.dominant(0).unwrap_or("-").to_string();
    let j2 = report.dominant(1).unwrap_or("-").to_string();
    let small = ["m", "L_f"].iter().all(|p| (0..2).all(|k| report.index(p, k).map_or(true, |s| s < 0.05)));
    let hw = |p: &str, k: usize| {
        let i = report.parameters.iter().position(|x| x.name == p).unwrap();
        report.half_widths[i][k].unwrap_or(f64::NAN)
    };

    let unit = vec![ParameterRange::new("a", 0.0, 1.0), ParameterRange::new("b", 0.0, 1.0)];
    let only_a = sobol_first_order(|y| Ok(vec![y[0]]), &unit, 4096, 0, 2).map_err(|e| e.to_string())?;
    let both = sobol_first_order(|y| Ok(vec![y[0] + y[1]]), &unit, 4096, 0, 3).map_err(|e| e.to_string())?;
    let near = |r: &SensitivityReport, a: f64, b: f64| {
        (r.index("a", 0).unwrap() - a).abs() <= 0.05 && (r.index("b", 0).unwrap() - b).abs() <= 0.05
    };
    let analytic = near(&only_a, 1.0, 0.0) && near(&both, 0.5, 0.5);
    ensure(
        j1 == "d" && j2 == "kappa" && small && analytic,
        format!(
            "J1 -> {j1} ({:.3} +- {:.3}), J2 -> {j2} ({:.3} +- {:.3}); m/L_f below 0.05: {small}; analytic checks: {analytic}",
            report.index("d", 0).unwrap_or(f64::NAN),
            hw("d", 0),
            report.index("kappa", 1).unwrap_or(f64::NAN),
            hw("kappa", 1)
        ),
    )
}

fn strip_comments(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

fn service_equivalence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("cli.csv");
    let track = tracks_dir().join("test.csv");
    let args: Vec<String> = [
        "mompc", "simulate", "--method", "rpm", "--track", track.to_str().unwrap(), "--steps", "60", "--seed", "11",
        "--out", out.to_str().unwrap(),
    ]
    .map(String::from)
    .to_vec();
    if mompc::cli::run(args) != 0 {
        return Err("CLI simulate failed".into());
    }
    let cli_log = strip_comments(&std::fs::read_to_string(&out).map_err(|e| e.to_string())?);

    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let service_log = runtime.block_on(async {
        let mut tracks = BTreeMap::new();
        tracks.insert("test".to_string(), Track::load(&track).unwrap());
        let state = Arc::new(ServiceState::new(tracks, None, None));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
        let http = reqwest::Client::new();
        let options = RunOptions { seed: 11, ..Default::default() };
        let created: serde_json::Value = http
            .post(format!("{base}/sessions"))
            .json(&serde_json::json!({ "track": "test", "method": "rpm", "steps": 60, "options": options }))
            .send()
            .await
            .map_err(|e| e.to_string())?
            .json()
            .await
            .map_err(|e| e.to_string())?;
        let id = created["id"].as_u64().ok_or("no session id")?;
        http.post(format!("{base}/sessions/{id}/control"))
            .json(&serde_json::json!({ "action": "run" }))
            .send()
            .await
            .map_err(|e| e.to_string())?;
        for _ in 0..6000 {
            let s: Snapshot = http
                .get(format!("{base}/sessions/{id}"))
                .send()
                .await
                .map_err(|e| e.to_string())?
                .json()
                .await
                .map_err(|e| e.to_string())?;
            match s.status {
                mompc::service::RunStatus::Finished => {
                    return http
                        .get(format!("{base}/sessions/{id}/log"))
                        .send()
                        .await
                        .map_err(|e| e.to_string())?
                        .text()
                        .await
                        .map_err(|e| e.to_string());
                }
                mompc::service::RunStatus::Failed => return Err(format!("session failed: {:?}", s.error)),
                _ => tokio::time::sleep(Duration::from_millis(10)).await,
            }
        }
        Err::<String, String>("session did not finish".into())
    })?;
    let rows = cli_log.lines().count().saturating_sub(1);
    ensure(service_log == cli_log, format!("{rows} logged steps identical byte for byte"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("archiver exactness", 60, archiver_exactness),
        ("lss25 reproduction", 1, lss25_reproduction),
        ("witting invariance", 30, witting_invariance),
        ("convergence trend", 600, convergence_trend),
        ("rpm benchmark", 5, rpm_benchmark),
        ("vehicle equilibrium", 1, vehicle_equilibrium),
        ("symmetry equivariance", 30, symmetry_equivariance),
        ("library determinism", 1800, library_determinism),
        ("method comparison", 1200, method_comparison),
        ("sensitivity ranking", 300, sensitivity_ranking),
        ("service equivalence", 60, service_equivalence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, limit, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match result {
            Ok(d) if secs <= limit as f64 => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {limit} s")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {name} [{secs:.1} s]: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
