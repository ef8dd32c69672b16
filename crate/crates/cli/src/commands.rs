//! The four subcommands.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use fireline_core::lattice::{self, IgnitionSource, LatticeConfig, LatticeRun};
use fireline_core::limit::simulate;
use fireline_core::rescale::{coupled_run, CoupledSummary, RescaledTrajectory};
use fireline_core::stats::{
    self, atom_report_from, bootstrap_median_se, length_tail_from, localization_coincidence,
    lffp_origin_samples, replica_seeds, size_histogram, tail_from_clusters, vacant_from_clusters,
    window_from_clusters, EstimateRecord, Process,
};
use fireline_core::{marks_to_ignitions, sample_marks, FireError, MarkSet, Scaling, SeedSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{bad, CliError, Result};
use crate::manifest::{Output, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SimulateLattice,
    SimulateLimit,
    Couple,
    Stats,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateLattice => "simulate-lattice",
            Command::SimulateLimit => "simulate-limit",
            Command::Couple => "couple",
            Command::Stats => "stats",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub verify: bool,
    pub seed_override: Option<u64>,
}

pub fn execute(command: Command, mut cfg: Config, opts: &RunOptions) -> Result<RunManifest> {
    if let Some(seed) = opts.seed_override {
        cfg.set("seed", seed.to_string());
    }
    let seed: u64 = cfg.require("seed")?;
    let hash = cfg.hash();
    let out = match command {
        Command::SimulateLattice => simulate_lattice(&cfg, seed, opts)?,
        Command::SimulateLimit => simulate_limit(&cfg, seed, opts)?,
        Command::Couple => couple(&cfg, seed, opts)?,
        Command::Stats => run_stats(&cfg, seed, opts)?,
    };
    out.finish(command.name(), hash, seed)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return bad(format!("`{name}` must be positive, got {v}"));
    }
    Ok(v)
}

fn positive_count(name: &str, v: u64) -> Result<u64> {
    if v == 0 {
        return bad(format!("`{name}` must be at least 1"));
    }
    Ok(v)
}

fn fire<T>(r: fireline_core::Result<T>) -> Result<T> {
    r.map_err(CliError::from)
}

fn prefix(replicas: u64, i: u64) -> String {
    if replicas == 1 {
        String::new()
    } else {
        format!("r{i:04}_")
    }
}

// ------------------------------------------------------------ lattice

fn simulate_lattice(cfg: &Config, seed: u64, opts: &RunOptions) -> Result<Output> {
    cfg.check_keys(&["seed", "lambda", "A", "T", "replicas", "probe", "snapshot", "ignition"])?;
    let lambda: f64 = cfg.require("lambda")?;
    let scaling = Scaling::new(lambda)?;
    let a = positive("A", cfg.require("A")?)?;
    let t = positive("T", cfg.require("T")?)?;
    let replicas = positive_count("replicas", cfg.or("replicas", 1)?)?;
    let probes: Vec<f64> = cfg.list("probe")?;
    if let Some(p) = probes.iter().find(|p| !(p.abs() < a)) {
        return bad(format!("probe {p} outside (-A, A)"));
    }
    let snapshots: Vec<f64> = cfg.list("snapshot")?;
    if let Some(s) = snapshots.iter().find(|s| !(0.0..=t).contains(*s)) {
        return bad(format!("snapshot time {s} outside [0, T]"));
    }
    let from_marks = match cfg.or("ignition", "marks".to_string())?.as_str() {
        "marks" => true,
        "clocks" => false,
        other => return bad(format!("`ignition` must be `marks` or `clocks`, got `{other}`")),
    };
    let config_for = |i: u64| -> fireline_core::Result<(LatticeConfig, Option<MarkSet>)> {
        let (mark_seed, growth_seed) = replica_seeds(seed, i);
        let (ignition, marks) = if from_marks {
            let marks = sample_marks(t, a, &mark_seed)?;
            (IgnitionSource::Schedule(marks_to_ignitions(&marks, lambda)?), Some(marks))
        } else {
            (IgnitionSource::Clocks(SeedSpec::replica(seed, i, "fires")), None)
        };
        let lc = LatticeConfig {
            lambda,
            half_width: a,
            raw_horizon: scaling.raw_time(t),
            growth_seed,
            ignition,
        };
        Ok((lc, marks))
    };
    fire(config_for(0)?.0.validate())?;
    let raw_snaps: Vec<f64> = snapshots.iter().map(|&s| scaling.raw_time(s)).collect();

    let mut out = Output::create(&opts.out)?;
    let runs: Vec<(LatticeRun, Option<MarkSet>)> = out.stage("simulate", || {
        fire(
            (0..replicas)
                .into_par_iter()
                .map(|i| {
                    let (lc, marks) = config_for(i)?;
                    Ok((lattice::run_with(&lc, &probes, &raw_snaps, opts.verify)?, marks))
                })
                .collect::<fireline_core::Result<Vec<_>>>(),
        )
    })?;
    let start = Instant::now();
    let mut summary = String::from("replica,growth_applied,ignitions,burns,vacant_density\n");
    for (i, (run, marks)) in runs.iter().enumerate() {
        let p = prefix(replicas, i as u64);
        if let Some(m) = marks {
            out.write(&format!("{p}marks.csv"), &m.to_csv())?;
        }
        out.write(&format!("{p}burns.csv"), &run.burns_csv())?;
        for (j, rec) in run.probes.iter().enumerate() {
            out.write(&format!("{p}probe_{j}.csv"), &rec.to_csv())?;
        }
        if !snapshots.is_empty() {
            out.write(&format!("{p}snapshots.txt"), &run.snapshots_text())?;
        }
        let c = run.counts;
        let _ = writeln!(
            summary,
            "{i},{},{},{},{}",
            c.growth_applied,
            c.ignitions_consumed,
            c.burns,
            run.final_state.vacant_density()
        );
    }
    out.write("summary.csv", &summary)?;
    out.record("write", start);
    Ok(out)
}

// -------------------------------------------------------------- limit

fn simulate_limit(cfg: &Config, seed: u64, opts: &RunOptions) -> Result<Output> {
    cfg.check_keys(&["seed", "A", "T", "marks_file", "empty_marks", "probe", "dump_time", "dump_steps"])?;
    let a = positive("A", cfg.require("A")?)?;
    let t = positive("T", cfg.require("T")?)?;
    let probes: Vec<f64> = cfg.list("probe")?;
    if let Some(p) = probes.iter().find(|p| !(p.abs() < a)) {
        return bad(format!("probe {p} outside (-A, A)"));
    }
    let mut times: Vec<f64> = cfg.list("dump_time")?;
    if let Some(s) = times.iter().find(|s| !(0.0..=t).contains(*s)) {
        return bad(format!("dump time {s} outside [0, T]"));
    }
    let steps: u64 = cfg.or("dump_steps", 0)?;
    if steps > 0 {
        times.extend((0..=steps).map(|k| t * k as f64 / steps as f64));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let empty: bool = cfg.or("empty_marks", false)?;
    let marks = match cfg.path("marks_file")? {
        _ if empty => MarkSet::empty(t, a),
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            MarkSet::from_csv(&text, t, a)?
        }
        None => sample_marks(t, a, &replica_seeds(seed, 0).0)?,
    };

    let mut out = Output::create(&opts.out)?;
    let timeline = out.stage("simulate", || {
        let tl = simulate(a, t, &marks)?;
        if opts.verify {
            for s in tl.states() {
                s.check_structure()?;
            }
            if tl.replay()? != tl {
                return Err(FireError::Invariant("replay differs from timeline".into()).into());
            }
        }
        Ok(tl)
    })?;
    let start = Instant::now();
    out.write("marks.csv", &marks.to_csv())?;
    out.write("events.csv", &timeline.events_csv())?;
    if !times.is_empty() {
        out.write("dump.txt", &timeline.dump(&times)?)?;
    }
    for (j, &x) in probes.iter().enumerate() {
        let traj = RescaledTrajectory::from_timeline(&timeline, x)?;
        out.write(&format!("trajectory_{j}.csv"), &traj.to_csv())?;
    }
    out.record("write", start);
    Ok(out)
}

// ------------------------------------------------------------- couple

#[derive(Serialize)]
struct ReplicaLine<'a> {
    replica: u64,
    #[serde(flatten)]
    summary: &'a CoupledSummary,
}

fn couple(cfg: &Config, seed: u64, opts: &RunOptions) -> Result<Output> {
    cfg.check_keys(&["seed", "lambda", "A", "T", "replicas", "probe", "bootstrap"])?;
    let lambdas: Vec<f64> = cfg.list("lambda")?;
    if lambdas.is_empty() {
        return bad("at least one `lambda` is required");
    }
    for &l in &lambdas {
        Scaling::new(l)?;
    }
    let a = positive("A", cfg.require("A")?)?;
    let t = positive("T", cfg.require("T")?)?;
    let replicas = positive_count("replicas", cfg.or("replicas", 1)?)?;
    let boot: u64 = cfg.or("bootstrap", 1000)?;
    let mut probes: Vec<f64> = cfg.list("probe")?;
    if probes.is_empty() {
        probes.push(0.0);
    }
    if let Some(p) = probes.iter().find(|p| !(p.abs() < a)) {
        return bad(format!("probe {p} outside (-A, A)"));
    }
    for &l in &lambdas {
        fire(Scaling::new(l).map(|s| s.box_bound(a)).and_then(|b| {
            if b < 1 {
                Err(FireError::Config(format!("box degenerate for A = {a}, lambda = {l}")))
            } else {
                Ok(())
            }
        }))?;
    }

    let mut out = Output::create(&opts.out)?;
    let mut lines = String::new();
    let mut summary = String::from("lambda,probe,n,median_delta_T,bootstrap_se,median_sup_z,median_int_D\n");
    let boot_key = SeedSpec::new(seed, "bootstrap").key();
    for (k, &lambda) in lambdas.iter().enumerate() {
        let runs: Vec<Vec<CoupledSummary>> = out.stage(&format!("couple lambda={lambda}"), || {
            fire(
                (0..replicas)
                    .into_par_iter()
                    .map(|i| {
                        let (ms, gs) = replica_seeds(seed, i);
                        Ok(coupled_run(lambda, a, t, &ms, &gs, &probes)?.summaries())
                    })
                    .collect::<fireline_core::Result<Vec<_>>>(),
            )
        })?;
        for (i, rs) in runs.iter().enumerate() {
            for s in rs {
                let line = ReplicaLine {
                    replica: i as u64,
                    summary: s,
                };
                lines.push_str(&serde_json::to_string(&line).expect("serializable"));
                lines.push('\n');
            }
        }
        for (j, &p) in probes.iter().enumerate() {
            let col = |f: fn(&CoupledSummary) -> f64| runs.iter().map(|rs| f(&rs[j])).collect::<Vec<f64>>();
            let delta = col(|s| s.delta_t);
            let se = bootstrap_median_se(&delta, boot, boot_key.child(k as u64).child(j as u64));
            let _ = writeln!(
                summary,
                "{lambda},{p},{replicas},{},{se},{},{}",
                stats::median(&delta),
                stats::median(&col(|s| s.sup_z)),
                stats::median(&col(|s| s.int_d)),
            );
        }
    }
    out.write("coupled.jsonl", &lines)?;
    out.write("summary.csv", &summary)?;
    Ok(out)
}

// -------------------------------------------------------------- stats

const STATS_KEYS: &[&str] = &[
    "seed",
    "lambda",
    "t",
    "A",
    "replicas",
    "window",
    "B",
    "lffp_t",
    "lffp_A",
    "lffp_T",
    "lffp_B",
    "lffp_replicas",
    "atom_t",
    "atom_A",
    "atom_z",
    "atom_window",
    "atom_replicas",
    "loc_A",
    "loc_T",
    "loc_lambda",
    "loc_replicas",
];

pub fn estimates_csv(records: &[EstimateRecord]) -> String {
    let mut s = String::from("estimator,lambda,t,B,a,b,p_hat,se,n,successes\n");
    for r in records {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let (wa, wb) = r.window.map_or((None, None), |[a, b]| (Some(a), Some(b)));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.estimator,
            opt(r.lambda),
            r.t,
            opt(r.b),
            opt(wa),
            opt(wb),
            r.p_hat,
            r.se,
            r.n,
            r.successes
        );
    }
    s
}

#[derive(Serialize)]
struct StatsReport {
    seed: u64,
    estimates: Vec<EstimateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    atoms: Option<stats::AtomReport>,
    localization: Vec<stats::CoincidenceReport>,
}

fn run_stats(cfg: &Config, seed: u64, opts: &RunOptions) -> Result<Output> {
    cfg.check_keys(STATS_KEYS)?;
    let replicas = positive_count("replicas", cfg.or("replicas", 1000)?)?;

    // every parameter is validated before any simulation starts
    let lambdas: Vec<f64> = cfg.list("lambda")?;
    for &l in &lambdas {
        Scaling::new(l)?;
    }
    let lattice_t: f64 = if lambdas.is_empty() { 0.0 } else { cfg.require("t")? };
    let lattice_a: f64 = if lambdas.is_empty() { 1.0 } else { positive("A", cfg.require("A")?)? };
    if !(lattice_t >= 0.0) {
        return bad("`t` must be non-negative");
    }
    let windows = cfg.pairs("window")?;
    if let Some((a, b)) = windows.iter().find(|(a, b)| !(0.0 <= *a && a < b && *b < 1.0)) {
        return bad(format!("window needs 0 <= a < b < 1, got ({a}, {b})"));
    }
    let bs: Vec<f64> = cfg.list("B")?;
    let lffp_bs: Vec<f64> = cfg.list("lffp_B")?;
    if let Some(b) = bs.iter().chain(&lffp_bs).find(|b| !(**b > 0.0)) {
        return bad(format!("thresholds must be positive, got {b}"));
    }
    let lffp = if lffp_bs.is_empty() {
        None
    } else {
        let lt: f64 = cfg.require("lffp_t")?;
        let la = positive("lffp_A", cfg.require("lffp_A")?)?;
        let lh = positive("lffp_T", cfg.or("lffp_T", lt)?)?;
        let ln = positive_count("lffp_replicas", cfg.or("lffp_replicas", replicas)?)?;
        if !(0.0..=lh).contains(&lt) {
            return bad(format!("`lffp_t` must lie in [0, lffp_T], got {lt}"));
        }
        let need = lffp_bs.iter().copied().fold(0.0, f64::max) + 4.0;
        if la < need {
            return bad(format!("`lffp_A` = {la} too small: need A >= B + 4 = {need}"));
        }
        Some((lt, la, lh, ln))
    };
    let atom_z: Vec<f64> = cfg.list("atom_z")?;
    let atom_windows = cfg.pairs("atom_window")?;
    let atoms = if atom_z.is_empty() && atom_windows.is_empty() {
        None
    } else {
        let at: f64 = cfg.require("atom_t")?;
        if !(at > 0.0) {
            return bad("`atom_t` must be positive");
        }
        let aa = positive("atom_A", cfg.require("atom_A")?)?;
        let an = positive_count("atom_replicas", cfg.or("atom_replicas", replicas)?)?;
        if let Some((a, b)) = atom_windows.iter().find(|(a, b)| !(0.0 <= *a && a <= b && *b <= 1.0)) {
            return bad(format!("atom window needs 0 <= a <= b <= 1, got ({a}, {b})"));
        }
        Some((at, aa, an))
    };
    let loc_as: Vec<f64> = cfg.list("loc_A")?;
    let loc_lambdas: Vec<f64> = cfg.list("loc_lambda")?;
    for &l in &loc_lambdas {
        Scaling::new(l)?;
    }
    let loc = if loc_as.is_empty() {
        None
    } else {
        if let Some(a) = loc_as.iter().find(|a| !(**a >= 2.0)) {
            return bad(format!("localization needs A >= 2, got {a}"));
        }
        let lt = positive("loc_T", cfg.require("loc_T")?)?;
        let ln = positive_count("loc_replicas", cfg.or("loc_replicas", replicas)?)?;
        Some((lt, ln))
    };

    let mut out = Output::create(&opts.out)?;
    let mut records = Vec::new();
    let mut window_rows = Vec::new();
    let mut tail_rows = Vec::new();
    let mut vacant_rows = Vec::new();
    let mut hist = String::from("lambda,t,size,count,n\n");
    for &lambda in &lambdas {
        let clusters = out.stage(&format!("lattice lambda={lambda}"), || {
            fire(stats::lattice_origin_clusters(lambda, lattice_t, replicas, lattice_a, seed))
        })?;
        for &(a, b) in &windows {
            window_rows.push(window_from_clusters(&clusters, lambda, a, b)?.record("cluster_window_prob", Some(lambda), lattice_t));
        }
        for &b in &bs {
            tail_rows.push(tail_from_clusters(&clusters, lambda, b)?.record("macroscopic_tail", Some(lambda), lattice_t));
        }
        vacant_rows.push(vacant_from_clusters(&clusters).record("vacant_probability", Some(lambda), lattice_t));
        for (size, count) in size_histogram(&clusters) {
            let _ = writeln!(hist, "{lambda},{lattice_t},{size},{count},{replicas}");
        }
    }
    if !lambdas.is_empty() {
        out.write("windows.csv", &estimates_csv(&window_rows))?;
        out.write("tails.csv", &estimates_csv(&tail_rows))?;
        out.write("vacant.csv", &estimates_csv(&vacant_rows))?;
        out.write("cluster_sizes.csv", &hist)?;
    }
    records.extend(window_rows);
    records.extend(tail_rows);
    records.extend(vacant_rows);

    if let Some((lt, la, lh, ln)) = lffp {
        let samples = out.stage("lffp tails", || fire(lffp_origin_samples(lt, ln, la, lh, seed)))?;
        let rows: Vec<EstimateRecord> = lffp_bs
            .iter()
            .map(|&b| length_tail_from(&samples, b).record("lffp_length_tail", None, lt))
            .collect();
        out.write("lffp_tails.csv", &estimates_csv(&rows))?;
        records.extend(rows);
    }

    let atom_report = match atoms {
        Some((at, aa, an)) => {
            let samples = out.stage("lffp atoms", || fire(lffp_origin_samples(at, an, aa, at, seed)))?;
            let report = atom_report_from(at, &samples, &atom_z, &atom_windows)?;
            out.write("atoms.json", &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
            Some(report)
        }
        None => None,
    };

    let mut localization = Vec::new();
    if let Some((lt, ln)) = loc {
        let mut processes = vec![Process::Limit];
        processes.extend(loc_lambdas.iter().map(|&lambda| Process::Lattice { lambda }));
        for process in processes {
            for &a in &loc_as {
                let label = format!("localization {process:?} A={a}");
                localization.push(out.stage(&label, || fire(localization_coincidence(a, lt, ln, seed, process)))?);
            }
        }
        out.write(
            "localization.json",
            &(serde_json::to_string_pretty(&localization).expect("serializable") + "\n"),
        )?;
    }

    let report = StatsReport {
        seed,
        estimates: records,
        atoms: atom_report,
        localization,
    };
    out.write("report.json", &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
    Ok(out)
}
