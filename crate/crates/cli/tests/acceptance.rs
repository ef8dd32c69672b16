//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#[path = "../../core/tests/common/naive.rs"]
mod naive;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fireline_cli::RunManifest;
use fireline_core::lattice::{self, IgnitionSource, LatticeConfig};
use fireline_core::limit::{simulate, FireKind};
use fireline_core::stats::{
    ks_two_sample, least_squares_slope, length_tail_from, lffp_origin_samples,
    localization_coincidence, pooled_se, vacant_from_clusters, window_from_clusters,
    lattice_origin_clusters, CoincidenceReport, Process,
};
use fireline_core::{MarkSet, Scaling, SeedSpec};
use naive::{naive_run, run_size, NaiveConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

// ---------------------------------------------------------------- oracle

fn oracle_ks() -> Verdict {
    let lambda = 0.5;
    let raw_t = 5.0;
    let n = 20_000u64;
    let half_width = 5.5 * Scaling::new(lambda).unwrap().site_width();
    let event: Vec<f64> = (0..n)
        .map(|i| {
            let cfg = LatticeConfig {
                lambda,
                half_width,
                raw_horizon: raw_t,
                growth_seed: SeedSpec::replica(101, i, "growth"),
                ignition: IgnitionSource::Clocks(SeedSpec::replica(101, i, "fires")),
            };
            let occ = lattice::run(&cfg, &[], &[]).unwrap().final_state.occupancy();
            assert_eq!(occ.len(), 11);
            run_size(&occ, 5) as f64
        })
        .collect();
    let ncfg = NaiveConfig {
        sites: 11,
        lambda,
        raw_horizon: raw_t,
        dt: 1e-3,
    };
    let reference: Vec<f64> = (0..n)
        .map(|i| run_size(&naive_run(&ncfg, &SeedSpec::replica(102, i, "naive")), 5) as f64)
        .collect();
    let ks = ks_two_sample(&event, &reference).unwrap();
    verdict(
        ks.p_value > 0.01,
        format!("KS D = {:.4}, p = {:.3} (need > 0.01)", ks.statistic, ks.p_value),
    )
}

// ---------------------------------------------------------------- golden

fn golden_trace() -> Verdict {
    let (a, horizon) = (4.0, 3.5);
    let text = std::fs::read_to_string(configs().join("skeleton_marks.csv")).unwrap();
    let marks = MarkSet::from_csv(&text, horizon, a).unwrap();
    let tl = simulate(a, horizon, &marks).unwrap();
    let t = |i: usize| tl.events()[i - 1].mark.t;
    let x = |i: usize| tl.events()[i - 1].mark.x;
    let mut failures = Vec::new();
    for k in 0..=64 {
        let s = k as f64 / 64.0;
        if tl.query_z(s, 0.0).unwrap() != s {
            failures.push(format!("Z_{s}(0) != {s}"));
        }
        if k < 64 && tl.query_d(s, 0.0).unwrap() != (0.0, 0.0) {
            failures.push(format!("D_{s}(0) != {{0}}"));
        }
    }
    let until = |i: usize| {
        tl.state_at(t(i))
            .unwrap()
            .breakpoint_at(x(i))
            .map(|b| b.barrier_until)
    };
    if until(1) != Some(2.0 * t(1)) {
        failures.push(format!("barrier 1 ends at {:?}, want {}", until(1), 2.0 * t(1)));
    }
    if until(12) != Some(2.0 * t(12) - t(9)) {
        failures.push(format!("barrier 12 ends at {:?}, want {}", until(12), 2.0 * t(12) - t(9)));
    }
    if tl.query_h(2.0 * t(1), x(1)).unwrap() != 0.0 || tl.query_h(2.0 * t(12) - t(9), x(12)).unwrap() != 0.0 {
        failures.push("H not zero at expiry".into());
    }
    let macros: Vec<usize> = (1..=15).filter(|&i| tl.events()[i - 1].kind == FireKind::Macroscopic).collect();
    if macros != [9, 10, 15] {
        failures.push(format!("macroscopic fires {macros:?}"));
    }
    if tl.replay().unwrap() != tl {
        failures.push("replay differs".into());
    }
    let detail = if failures.is_empty() {
        format!("barriers end at 2t1 = {} and 2t12 - t9 = {}", 2.0 * t(1), 2.0 * t(12) - t(9))
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

// ------------------------------------------------------------ lffp tails

const TAIL_BS: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

fn lffp_tails() -> Vec<fireline_core::stats::TailEstimate> {
    let samples = lffp_origin_samples(2.0, 100_000, 30.0, 2.5, 201).unwrap();
    TAIL_BS.iter().map(|&b| length_tail_from(&samples, b)).collect()
}

fn tail_bound(tails: &[fireline_core::stats::TailEstimate]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (b, e) in TAIL_BS.iter().zip(tails) {
        let bound = 2.0 * (-b / 8.0).exp();
        ok &= e.p_hat <= bound + 3.0 * e.se;
        parts.push(format!("B={b}: {:.5} <= {:.4}", e.p_hat, bound + 3.0 * e.se));
    }
    verdict(ok, parts.join(", "))
}

fn tail_slope(tails: &[fireline_core::stats::TailEstimate]) -> Verdict {
    if let Some(k) = tails.iter().position(|e| e.successes == 0) {
        let partial = least_squares_slope(
            &TAIL_BS[..k],
            &tails[..k].iter().map(|e| e.p_hat.ln()).collect::<Vec<_>>(),
        );
        let partial = partial.map_or("n/a".to_string(), |s| format!("{s:.4}"));
        return verdict(
            false,
            format!(
                "0 of {} samples reach B={}, so log p is undefined; slope over the first {k} thresholds = {partial}",
                tails[k].n, TAIL_BS[k]
            ),
        );
    }
    let ys: Vec<f64> = tails.iter().map(|e| e.p_hat.ln()).collect();
    let slope = least_squares_slope(&TAIL_BS, &ys).unwrap();
    verdict(
        (-1.5..=-0.125).contains(&slope),
        format!("slope = {slope:.4} in [-1.5, -0.125]"),
    )
}

// ------------------------------------------------------------ atomless

fn atomless() -> Verdict {
    let samples = lffp_origin_samples(3.0, 10_000, 10.0, 3.0, 301).unwrap();
    let hits: Vec<usize> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&z| samples.iter().filter(|s| s.z == z).count())
        .collect();
    let mass = |a: f64, b: f64| samples.iter().filter(|s| s.z >= a && s.z <= b).count() as f64;
    let (m1, m2) = (mass(0.1, 0.3), mass(0.5, 0.7));
    let ratio = m1 / m2;
    let ok = hits.iter().all(|&h| h == 0) && m1 > 0.0 && m2 > 0.0 && (1.0 / 3.0..=3.0).contains(&ratio);
    verdict(
        ok,
        format!("exact hits {hits:?}; mass [0.1,0.3] = {m1}, [0.5,0.7] = {m2}, ratio {ratio:.3}"),
    )
}

// ----------------------------------------------------- lattice estimators

fn vacant_density(clusters: &[(f64, Vec<Option<fireline_core::SiteInterval>>)]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    let est: Vec<_> = clusters
        .iter()
        .map(|(l, c)| (*l, vacant_from_clusters(&c[..2000])))
        .collect();
    for (l, e) in &est {
        let scaled = e.p_hat * (1.0 / l).ln();
        ok &= (0.3..=3.0).contains(&scaled);
        parts.push(format!("lambda={l}: p={:.4} p*log={scaled:.3}", e.p_hat));
    }
    for w in est.windows(2) {
        let (e1, e2) = (&w[0].1, &w[1].1);
        let tol = 2.0 * pooled_se(e1, e2);
        ok &= e2.p_hat <= e1.p_hat + tol;
        parts.push(format!("{:.4} -> {:.4} (tol {tol:.4})", e1.p_hat, e2.p_hat));
    }
    verdict(ok, parts.join(", "))
}

fn window_flatness(clusters: &[Option<fireline_core::SiteInterval>]) -> Verdict {
    let ps: Vec<f64> = [(0.1, 0.3), (0.3, 0.5), (0.5, 0.7)]
        .iter()
        .map(|&(a, b)| window_from_clusters(clusters, 1e-4, a, b).unwrap().p_hat)
        .collect();
    let max = ps.iter().copied().fold(f64::MIN, f64::max);
    let min = ps.iter().copied().fold(f64::MAX, f64::min);
    verdict(
        min > 0.0 && max / min <= 3.0,
        format!("p = {:.4} / {:.4} / {:.4}, max/min = {:.3}", ps[0], ps[1], ps[2], max / min),
    )
}

// -------------------------------------------------------------- coupling

fn run_cli(cmd: &str, config: &Path, out: &Path) -> RunManifest {
    let status = Command::new(env!("CARGO_BIN_EXE_fireline"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("FIRELINE_SEED")
        .output()
        .expect("binary runs");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn coupling(tmp: &Path) -> Verdict {
    let out = tmp.join("couple");
    run_cli("couple", &configs().join("couple.conf"), &out);
    let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<(f64, f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0], f[3], f[4])
        })
        .collect();
    let mut ok = rows.len() == 3;
    let mut parts: Vec<String> = rows
        .iter()
        .map(|(l, m, se)| format!("lambda={l}: median {m:.4} (se {se:.4})"))
        .collect();
    for w in rows.windows(2) {
        let drop = w[0].1 - w[1].1;
        let need = 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt();
        ok &= drop > need;
        parts.push(format!("drop {drop:.4} vs 2se {need:.4}"));
    }
    verdict(ok, parts.join(", "))
}

// ----------------------------------------------------------- localization

fn localization(process: Process) -> Verdict {
    let reports: Vec<CoincidenceReport> = [2.0, 4.0, 8.0]
        .iter()
        .map(|&a| localization_coincidence(a, 3.0, 500, 401, process).unwrap())
        .collect();
    let mut ok = true;
    let mut parts: Vec<String> = reports
        .iter()
        .map(|r| format!("A={}: {:.3}", r.half_width, r.fraction))
        .collect();
    for w in reports.windows(2) {
        let tol = 2.0 * pooled_se(&w[0].estimate(), &w[1].estimate());
        ok &= w[1].fraction >= w[0].fraction - tol;
        parts.push(format!("tol {tol:.3}"));
    }
    verdict(ok, parts.join(", "))
}

// ------------------------------------------------------------ determinism

fn determinism(tmp: &Path) -> Verdict {
    let small_couple = tmp.join("couple_small.conf");
    std::fs::write(
        &small_couple,
        "seed = 3\nlambda = 1e-2\nlambda = 1e-3\nA = 3\nT = 2\nreplicas = 10\nbootstrap = 100\n",
    )
    .unwrap();
    let small_stats = tmp.join("stats_small.conf");
    std::fs::write(
        &small_stats,
        "seed = 3\nlambda = 1e-2\nt = 3\nA = 3\nreplicas = 100\nwindow = 0.1,0.3\nB = 1\n\
         lffp_t = 2\nlffp_A = 8\nlffp_B = 2\nlffp_replicas = 500\n\
         atom_t = 3\natom_A = 5\natom_z = 0.5\natom_window = 0.1,0.3\natom_replicas = 200\n\
         loc_A = 2\nloc_T = 2\nloc_lambda = 1e-2\nloc_replicas = 20\n",
    )
    .unwrap();
    let runs = [
        ("simulate-lattice", configs().join("lattice.conf")),
        ("simulate-limit", configs().join("limit.conf")),
        ("simulate-limit", configs().join("skeleton.conf")),
        ("couple", small_couple),
        ("stats", small_stats),
    ];
    let mut ok = true;
    let mut files = 0;
    for (k, (cmd, cfg)) in runs.iter().enumerate() {
        let a = run_cli(cmd, cfg, &tmp.join(format!("det{k}a")));
        let b = run_cli(cmd, cfg, &tmp.join(format!("det{k}b")));
        ok &= a.files == b.files && a.config_hash == b.config_hash && !a.files.is_empty();
        files += a.files.len();
    }
    verdict(ok, format!("{} runs, {files} files compared by sha256", runs.len()))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Verdict, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} {name}: {} [{secs:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((name, v, secs));
    };

    run("oracle equivalence (KS, 11 sites)", &mut oracle_ks);
    run("golden limit trace", &mut golden_trace);
    let start = Instant::now();
    let tails = lffp_tails();
    println!("     (10^5 limit timelines sampled in {:.1} s)", start.elapsed().as_secs_f64());
    run("limit tail upper bound", &mut || tail_bound(&tails));
    run("limit tail slope bracket", &mut || tail_slope(&tails));
    run("atomlessness of Z", &mut atomless);
    let start = Instant::now();
    let clusters: Vec<(f64, Vec<_>)> = [(1e-2, 2000), (1e-3, 2000), (1e-4, 10_000)]
        .iter()
        .map(|&(l, n)| (l, lattice_origin_clusters(l, 3.0, n, 5.0, 501).unwrap()))
        .collect();
    println!("     (lattice replicas at t=3 sampled in {:.1} s)", start.elapsed().as_secs_f64());
    run("vacant density", &mut || vacant_density(&clusters));
    run("window flatness", &mut || window_flatness(&clusters[2].1));
    run("coupling shrinkage", &mut || coupling(tmp.path()));
    run("localization (limit)", &mut || localization(Process::Limit));
    run("localization (lattice, lambda=1e-3)", &mut || {
        localization(Process::Lattice { lambda: 1e-3 })
    });
    run("CLI determinism", &mut || determinism(tmp.path()));

    let failed = results.iter().filter(|r| !r.1.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
