//! Monte Carlo estimators for cluster-size laws, the limit-process
//! marginals and localization.
//!
//! Replica `i` of a batch with master seed `s` draws its marks from
//! `SeedSpec::replica(s, i, "marks")` and its growth clocks from
//! `SeedSpec::replica(s, i, "growth")`, so any replica can be rerun alone.
//! Batches run on the rayon pool and are collected in replica order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{config, Result};
use crate::event_sources::{marks_to_ignitions, sample_marks};
use crate::lattice::{self, cluster_size, IgnitionSource, LatticeConfig, LatticeSim, SiteInterval};
use crate::limit::{simulate, state_at_time};
use crate::rescale::{path_distance, RescaledTrajectory};
use crate::rng::{SeedSpec, StreamKey};
use crate::scaling::Scaling;

/// What a [`TailEstimate`] counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Window { a: f64, b: f64 },
    Threshold { b: f64 },
    Event,
}

/// Binomial frequency with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub target: Target,
    pub p_hat: f64,
    pub se: f64,
    pub successes: u64,
    pub n: u64,
}

impl TailEstimate {
    pub fn from_counts(target: Target, successes: u64, n: u64) -> Self {
        let (p_hat, se) = if n == 0 {
            (0.0, 0.0)
        } else {
            let p = successes as f64 / n as f64;
            (p, (p * (1.0 - p) / n as f64).sqrt())
        };
        Self {
            target,
            p_hat,
            se,
            successes,
            n,
        }
    }

    pub fn record(&self, estimator: &str, lambda: Option<f64>, t: f64) -> EstimateRecord {
        let (b, window) = match self.target {
            Target::Window { a, b } => (None, Some([a, b])),
            Target::Threshold { b } => (Some(b), None),
            Target::Event => (None, None),
        };
        EstimateRecord {
            estimator: estimator.to_string(),
            lambda,
            t,
            b,
            window,
            p_hat: self.p_hat,
            se: self.se,
            n: self.n,
            successes: self.successes,
        }
    }
}

/// Flat JSON/CSV row for one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub t: f64,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub p_hat: f64,
    pub se: f64,
    pub n: u64,
    pub successes: u64,
}

pub fn replica_seeds(master_seed: u64, index: u64) -> (SeedSpec, SeedSpec) {
    (
        SeedSpec::replica(master_seed, index, "marks"),
        SeedSpec::replica(master_seed, index, "growth"),
    )
}

fn check_replicas(n: u64) -> Result<()> {
    if n == 0 {
        return config("replica count must be positive");
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return config(format!("time t must be finite and non-negative, got {t}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- lattice

/// Cluster of site 0 at rescaled time `t` in replica `index`.
///
/// Fires come from the replica's marks on `[0,t] × [−A,A]`.
pub fn lattice_origin_cluster(
    lambda: f64,
    t: f64,
    half_width: f64,
    master_seed: u64,
    index: u64,
) -> Result<Option<SiteInterval>> {
    let scaling = Scaling::new(lambda)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(None);
    }
    let (mark_seed, growth_seed) = replica_seeds(master_seed, index);
    let marks = sample_marks(t, half_width, &mark_seed)?;
    let cfg = LatticeConfig {
        lambda,
        half_width,
        raw_horizon: scaling.raw_time(t),
        growth_seed,
        ignition: IgnitionSource::Schedule(marks_to_ignitions(&marks, lambda)?),
    };
    let run = LatticeSim::new(&cfg)?.finish()?;
    run.final_state.cluster_of(0)
}

/// [`lattice_origin_cluster`] for replicas `0..n`, in order.
pub fn lattice_origin_clusters(
    lambda: f64,
    t: f64,
    n: u64,
    half_width: f64,
    master_seed: u64,
) -> Result<Vec<Option<SiteInterval>>> {
    check_replicas(n)?;
    Scaling::new(lambda)?;
    (0..n)
        .into_par_iter()
        .map(|i| lattice_origin_cluster(lambda, t, half_width, master_seed, i))
        .collect()
}

fn check_window(a: f64, b: f64) -> Result<()> {
    if !(0.0 <= a && a < b && b < 1.0) {
        return config(format!("window needs 0 <= a < b < 1, got ({a}, {b})"));
    }
    Ok(())
}

/// Frequency of `λ^{−a} ≤ #C ≤ λ^{−b}` among stored cluster samples.
pub fn window_from_clusters(
    clusters: &[Option<SiteInterval>],
    lambda: f64,
    a: f64,
    b: f64,
) -> Result<TailEstimate> {
    check_window(a, b)?;
    Scaling::new(lambda)?;
    let lo = lambda.powf(-a);
    let hi = lambda.powf(-b);
    let hits = clusters
        .iter()
        .filter(|c| {
            let s = cluster_size(**c) as f64;
            s >= lo && s <= hi
        })
        .count() as u64;
    Ok(TailEstimate::from_counts(
        Target::Window { a, b },
        hits,
        clusters.len() as u64,
    ))
}

/// Frequency of `#C ≥ B / (λ log(1/λ))` among stored cluster samples.
pub fn tail_from_clusters(
    clusters: &[Option<SiteInterval>],
    lambda: f64,
    big_b: f64,
) -> Result<TailEstimate> {
    let scaling = Scaling::new(lambda)?;
    if !(big_b > 0.0) {
        return config(format!("threshold B must be positive, got {big_b}"));
    }
    let threshold = big_b / scaling.site_width();
    let hits = clusters
        .iter()
        .filter(|c| cluster_size(**c) as f64 >= threshold)
        .count() as u64;
    Ok(TailEstimate::from_counts(
        Target::Threshold { b: big_b },
        hits,
        clusters.len() as u64,
    ))
}

pub fn vacant_from_clusters(clusters: &[Option<SiteInterval>]) -> TailEstimate {
    let hits = clusters.iter().filter(|c| c.is_none()).count() as u64;
    TailEstimate::from_counts(Target::Event, hits, clusters.len() as u64)
}

pub fn cluster_window_prob(
    lambda: f64,
    t: f64,
    a: f64,
    b: f64,
    n: u64,
    half_width: f64,
    master_seed: u64,
) -> Result<TailEstimate> {
    check_window(a, b)?;
    let clusters = lattice_origin_clusters(lambda, t, n, half_width, master_seed)?;
    window_from_clusters(&clusters, lambda, a, b)
}

pub fn macroscopic_tail(
    lambda: f64,
    t: f64,
    big_b: f64,
    n: u64,
    half_width: f64,
    master_seed: u64,
) -> Result<TailEstimate> {
    if !(big_b > 0.0) {
        return config(format!("threshold B must be positive, got {big_b}"));
    }
    let clusters = lattice_origin_clusters(lambda, t, n, half_width, master_seed)?;
    tail_from_clusters(&clusters, lambda, big_b)
}

pub fn vacant_probability(
    lambda: f64,
    t: f64,
    n: u64,
    half_width: f64,
    master_seed: u64,
) -> Result<TailEstimate> {
    let clusters = lattice_origin_clusters(lambda, t, n, half_width, master_seed)?;
    Ok(vacant_from_clusters(&clusters))
}

/// `(size, count)` pairs of the non-empty cluster sizes, by size.
pub fn size_histogram(clusters: &[Option<SiteInterval>]) -> Vec<(u64, u64)> {
    let mut sizes: Vec<u64> = clusters.iter().flatten().map(|c| c.len()).collect();
    sizes.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::new();
    for s in sizes {
        match out.last_mut() {
            Some((v, c)) if *v == s => *c += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

// ------------------------------------------------------------------ limit

/// `Z_t(0)` and `D_t(0)` of the limit process in replica `index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginSample {
    pub z: f64,
    pub d: (f64, f64),
}

impl OriginSample {
    pub fn length(&self) -> f64 {
        self.d.1 - self.d.0
    }
}

pub fn lffp_origin_sample(
    t: f64,
    half_width: f64,
    horizon: f64,
    master_seed: u64,
    index: u64,
) -> Result<OriginSample> {
    check_time(t)?;
    if t > horizon {
        return config(format!("query time {t} beyond horizon {horizon}"));
    }
    let (mark_seed, _) = replica_seeds(master_seed, index);
    let marks = sample_marks(horizon, half_width, &mark_seed)?;
    let state = state_at_time(half_width, marks.marks(), t)?;
    Ok(OriginSample {
        z: state.z_at(t, 0.0)?,
        d: state.d_at(t, 0.0)?,
    })
}

pub fn lffp_origin_samples(
    t: f64,
    n: u64,
    half_width: f64,
    horizon: f64,
    master_seed: u64,
) -> Result<Vec<OriginSample>> {
    check_replicas(n)?;
    (0..n)
        .into_par_iter()
        .map(|i| lffp_origin_sample(t, half_width, horizon, master_seed, i))
        .collect()
}

/// Minimum box half-width for a length threshold `B`.
pub fn min_half_width_for(big_b: f64) -> f64 {
    big_b + 4.0
}

/// Frequency of `|D_t(0)| ≥ B` among stored samples.
pub fn length_tail_from(samples: &[OriginSample], big_b: f64) -> TailEstimate {
    let hits = samples.iter().filter(|s| s.length() >= big_b).count() as u64;
    TailEstimate::from_counts(Target::Threshold { b: big_b }, hits, samples.len() as u64)
}

pub fn lffp_length_tail(
    t: f64,
    big_b: f64,
    n: u64,
    half_width: f64,
    horizon: f64,
    master_seed: u64,
) -> Result<TailEstimate> {
    if !(big_b > 0.0) {
        return config(format!("threshold B must be positive, got {big_b}"));
    }
    if half_width < min_half_width_for(big_b) {
        return config(format!(
            "box half-width {half_width} too small for B = {big_b}: need A >= B + 4"
        ));
    }
    let samples = lffp_origin_samples(t, n, half_width, horizon, master_seed)?;
    Ok(length_tail_from(&samples, big_b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomCount {
    pub z: f64,
    pub hits: u64,
}

/// Exact-value hits and window masses of `Z_t(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub t: f64,
    pub n: u64,
    pub atoms: Vec<AtomCount>,
    pub windows: Vec<TailEstimate>,
}

pub fn atom_report_from(t: f64, samples: &[OriginSample], z_values: &[f64], windows: &[(f64, f64)]) -> Result<AtomReport> {
    for &(a, b) in windows {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return config(format!("z window needs 0 <= a <= b <= 1, got [{a}, {b}]"));
        }
    }
    let n = samples.len() as u64;
    let atoms = z_values
        .iter()
        .map(|&z| AtomCount {
            z,
            hits: samples.iter().filter(|s| s.z == z).count() as u64,
        })
        .collect();
    let windows = windows
        .iter()
        .map(|&(a, b)| {
            let hits = samples.iter().filter(|s| s.z >= a && s.z <= b).count() as u64;
            TailEstimate::from_counts(Target::Window { a, b }, hits, n)
        })
        .collect();
    Ok(AtomReport { t, n, atoms, windows })
}

/// Samples `Z_t(0)` on `[−A, A]` with marks up to time `t`.
pub fn lffp_z_atomless(
    t: f64,
    z_values: &[f64],
    windows: &[(f64, f64)],
    n: u64,
    half_width: f64,
    master_seed: u64,
) -> Result<AtomReport> {
    check_time(t)?;
    if t == 0.0 {
        return atom_report_from(t, &vec![OriginSample { z: 0.0, d: (0.0, 0.0) }; n as usize], z_values, windows);
    }
    let samples = lffp_origin_samples(t, n, half_width, t, master_seed)?;
    atom_report_from(t, &samples, z_values, windows)
}

// ----------------------------------------------------------- localization

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum Process {
    Limit,
    Lattice { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceReport {
    #[serde(flatten)]
    pub process: Process,
    #[serde(rename = "A")]
    pub half_width: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub replicas: u64,
    pub coincidences: u64,
    pub fraction: f64,
    pub se: f64,
}

impl CoincidenceReport {
    pub fn estimate(&self) -> TailEstimate {
        TailEstimate::from_counts(Target::Event, self.coincidences, self.replicas)
    }
}

/// Five equally spaced probes spanning `[−A/2, A/2]`.
pub fn localization_probes(half_width: f64) -> Vec<f64> {
    (0..5).map(|k| half_width * (k as f64 - 2.0) / 4.0).collect()
}

fn same_paths(a: &[RescaledTrajectory], b: &[RescaledTrajectory], horizon: f64) -> Result<bool> {
    for (p, q) in a.iter().zip(b) {
        if path_distance(p, q, horizon)?.total() != 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn lattice_paths(
    lambda: f64,
    half_width: f64,
    horizon: f64,
    marks: &crate::event_sources::MarkSet,
    growth_seed: &SeedSpec,
    probes: &[f64],
) -> Result<Vec<RescaledTrajectory>> {
    let scaling = Scaling::new(lambda)?;
    let cfg = LatticeConfig {
        lambda,
        half_width,
        raw_horizon: scaling.raw_time(horizon),
        growth_seed: growth_seed.clone(),
        ignition: IgnitionSource::Schedule(marks_to_ignitions(marks, lambda)?),
    };
    let run = lattice::run(&cfg, probes, &[])?;
    Ok(run
        .probes
        .iter()
        .map(|r| RescaledTrajectory::from_probe_record(r, &scaling, horizon, |raw| scaling.rescaled_time(raw)))
        .collect())
}

/// Whether the `A`-box and `2A`-box processes agree at every probe over `[0,T]`.
pub fn coincides(
    half_width: f64,
    horizon: f64,
    process: Process,
    master_seed: u64,
    index: u64,
) -> Result<bool> {
    if !(half_width >= 2.0) {
        return config(format!("localization needs A >= 2, got {half_width}"));
    }
    let (mark_seed, growth_seed) = replica_seeds(master_seed, index);
    let big = sample_marks(horizon, 2.0 * half_width, &mark_seed)?;
    let small = big.restrict(horizon, half_width);
    let probes = localization_probes(half_width);
    let (p_small, p_big) = match process {
        Process::Limit => {
            let ts = simulate(half_width, horizon, &small)?;
            let tb = simulate(2.0 * half_width, horizon, &big)?;
            let mut a = Vec::with_capacity(probes.len());
            let mut b = Vec::with_capacity(probes.len());
            for &x in &probes {
                a.push(RescaledTrajectory::from_timeline(&ts, x)?);
                b.push(RescaledTrajectory::from_timeline(&tb, x)?);
            }
            (a, b)
        }
        Process::Lattice { lambda } => (
            lattice_paths(lambda, half_width, horizon, &small, &growth_seed, &probes)?,
            lattice_paths(lambda, 2.0 * half_width, horizon, &big, &growth_seed, &probes)?,
        ),
    };
    same_paths(&p_small, &p_big, horizon)
}

pub fn localization_coincidence(
    half_width: f64,
    horizon: f64,
    n: u64,
    master_seed: u64,
    process: Process,
) -> Result<CoincidenceReport> {
    check_replicas(n)?;
    if !(half_width >= 2.0) {
        return config(format!("localization needs A >= 2, got {half_width}"));
    }
    if let Process::Lattice { lambda } = process {
        Scaling::new(lambda)?;
    }
    let hits: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| coincides(half_width, horizon, process, master_seed, i))
        .collect::<Result<_>>()?;
    let coincidences = hits.iter().filter(|&&h| h).count() as u64;
    let est = TailEstimate::from_counts(Target::Event, coincidences, n);
    Ok(CoincidenceReport {
        process,
        half_width,
        horizon,
        replicas: n,
        coincidences,
        fraction: est.p_hat,
        se: est.se,
    })
}

// ---------------------------------------------------------------- helpers

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return config("slope needs two or more paired points");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return config("slope undefined for constant abscissae");
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Standard deviation of the median over `resamples` bootstrap draws.
pub fn bootstrap_median_se(values: &[f64], resamples: u64, key: StreamKey) -> f64 {
    let n = values.len() as u64;
    if n < 2 || resamples < 2 {
        return 0.0;
    }
    let meds: Vec<f64> = (0..resamples)
        .map(|b| {
            let k = key.child(b);
            let draw: Vec<f64> = (0..n).map(|j| values[(k.bits(j) % n) as usize]).collect();
            median(&draw)
        })
        .collect();
    let m = meds.iter().sum::<f64>() / resamples as f64;
    let var = meds.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (resamples - 1) as f64;
    var.sqrt()
}

/// Pooled two-proportion standard error of `p̂₁ − p̂₂`.
pub fn pooled_se(x: &TailEstimate, y: &TailEstimate) -> f64 {
    if x.n == 0 || y.n == 0 {
        return 0.0;
    }
    let p = (x.successes + y.successes) as f64 / (x.n + y.n) as f64;
    (p * (1.0 - p) * (1.0 / x.n as f64 + 1.0 / y.n as f64)).sqrt()
}

/// Kolmogorov survival function `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // small-x form converges faster
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let s: f64 = (1..=20)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return config("KS test needs two non-empty samples");
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    Ok(KsResult { statistic: d, p_value })
}

/// Pearson chi-square statistic and its upper-tail p-value.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], fitted_params: usize) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < fitted_params + 2 {
        return config("chi-square needs matching bins and positive degrees of freedom");
    }
    if expected.iter().any(|&e| !(e > 0.0)) {
        return config("chi-square expected counts must be positive");
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1 - fitted_params) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| crate::FireError::Config(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Two-sample chi-square homogeneity test on counts over a shared ordered
/// support. Adjacent categories are pooled until both expected counts
/// reach `min_expected`. Returns the statistic and its p-value.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], min_expected: f64) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return config("homogeneity test needs equal-length count vectors");
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return config("homogeneity test needs two non-empty samples");
    }
    let share = na as f64 / (na + nb) as f64;
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut cur = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        cur.0 += x;
        cur.1 += y;
        let tot = (cur.0 + cur.1) as f64;
        if tot * share.min(1.0 - share) >= min_expected {
            bins.push(cur);
            cur = (0, 0);
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += cur.0;
            last.1 += cur.1;
        }
        None => bins.push(cur),
    }
    if bins.len() < 2 {
        return Ok((0.0, 1.0));
    }
    let stat: f64 = bins
        .iter()
        .map(|&(x, y)| {
            let tot = (x + y) as f64;
            let (ea, eb) = (tot * share, tot * (1.0 - share));
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    let dist = ChiSquared::new((bins.len() - 1) as f64).map_err(|e| crate::FireError::Config(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_edge_cases() {
        let zero = TailEstimate::from_counts(Target::Event, 0, 100);
        assert_eq!((zero.p_hat, zero.se), (0.0, 0.0));
        let all = TailEstimate::from_counts(Target::Event, 100, 100);
        assert_eq!((all.p_hat, all.se), (1.0, 0.0));
        let half = TailEstimate::from_counts(Target::Event, 50, 100).se;
        for k in (0..=100).filter(|&k| k != 50) {
            assert!(TailEstimate::from_counts(Target::Event, k, 100).se < half);
        }
        assert_eq!(half, 0.05);
    }

    #[test]
    fn window_validation() {
        assert!(cluster_window_prob(0.1, 1.0, 0.5, 0.3, 1, 2.0, 1).is_err());
        assert!(cluster_window_prob(0.1, 1.0, 0.3, 1.0, 1, 2.0, 1).is_err());
        assert!(cluster_window_prob(0.1, 1.0, -0.1, 0.3, 1, 2.0, 1).is_err());
    }

    #[test]
    fn empty_forest_at_time_zero() {
        let w = cluster_window_prob(0.01, 0.0, 0.1, 0.3, 50, 3.0, 4).unwrap();
        assert_eq!(w.p_hat, 0.0);
        let v = vacant_probability(0.01, 0.0, 50, 3.0, 4).unwrap();
        assert_eq!(v.p_hat, 1.0);
    }

    #[test]
    fn box_bounds_macroscopic_tail() {
        let tail = macroscopic_tail(0.01, 2.0, 2.0 * 3.0 + 0.5, 100, 3.0, 9).unwrap();
        assert_eq!(tail.successes, 0);
    }

    #[test]
    fn shrinking_window_loses_mass() {
        let clusters = lattice_origin_clusters(0.01, 3.0, 300, 3.0, 5).unwrap();
        let wide = window_from_clusters(&clusters, 0.01, 0.1, 0.6).unwrap();
        let narrow = window_from_clusters(&clusters, 0.01, 0.3, 0.3 + 1e-9).unwrap();
        assert!(wide.p_hat > 0.0);
        assert!(narrow.p_hat <= 0.01);
    }

    #[test]
    fn estimator_is_exact_recount() {
        let clusters = lattice_origin_clusters(0.05, 2.0, 200, 3.0, 13).unwrap();
        let scaling = Scaling::new(0.05).unwrap();
        let est = tail_from_clusters(&clusters, 0.05, 0.5).unwrap();
        let mut count = 0;
        for c in &clusters {
            if cluster_size(*c) as f64 * scaling.site_width() >= 0.5 {
                count += 1;
            }
        }
        assert_eq!(est.successes, count);
        assert_eq!(est.p_hat, est.successes as f64 / 200.0);
    }

    #[test]
    fn seed_isolation() {
        let batch = lattice_origin_clusters(0.02, 2.5, 20, 3.0, 77).unwrap();
        for i in [0u64, 7, 19] {
            assert_eq!(lattice_origin_cluster(0.02, 2.5, 3.0, 77, i).unwrap(), batch[i as usize]);
        }
        let lim = lffp_origin_samples(2.0, 20, 6.0, 2.5, 77).unwrap();
        assert_eq!(lffp_origin_sample(2.0, 6.0, 2.5, 77, 11).unwrap(), lim[11]);
    }

    #[test]
    fn lffp_tail_examples() {
        let early = lffp_length_tail(0.5, 1.0, 200, 6.0, 1.0, 3).unwrap();
        assert_eq!(early.p_hat, 0.0);
        assert!(lffp_length_tail(2.0, 8.0, 10, 10.0, 2.5, 3).is_err());
        assert!(lffp_length_tail(2.0, 8.0, 10, 12.0, 2.5, 3).is_ok());
    }

    #[test]
    fn z_before_time_one_is_deterministic() {
        let r = lffp_z_atomless(0.7, &[0.7], &[(0.6, 0.8)], 200, 5.0, 2).unwrap();
        assert_eq!(r.atoms[0].hits, 200);
        assert_eq!(r.windows[0].p_hat, 1.0);
    }

    #[test]
    fn localization_examples() {
        assert!(localization_coincidence(1.5, 3.0, 10, 1, Process::Limit).is_err());
        let r = localization_coincidence(2.0, 3.0, 100, 1, Process::Limit).unwrap();
        assert!(r.fraction > 0.0 && r.fraction <= 1.0);
        // before the first mark both boxes evolve identically
        let r = localization_coincidence(2.0, 1e-6, 20, 1, Process::Lattice { lambda: 0.05 }).unwrap();
        assert_eq!(r.fraction, 1.0);
    }

    #[test]
    fn slope_and_median() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        assert!((least_squares_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
        assert!(least_squares_slope(&[1.0], &[1.0]).is_err());
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bootstrap_se_is_reproducible_and_scales() {
        let key = SeedSpec::new(1, "boot").key();
        let v: Vec<f64> = (0..400).map(|i| key.child(99).uniform(i)).collect();
        let a = bootstrap_median_se(&v, 400, key);
        assert_eq!(a, bootstrap_median_se(&v, 400, key));
        // uniform median SE is about 1/(2 sqrt(n)) = 0.025
        assert!(a > 0.012 && a < 0.05, "{a}");
        assert_eq!(bootstrap_median_se(&[1.0; 10], 100, key), 0.0);
    }

    #[test]
    fn kolmogorov_tail_values() {
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.0) - 0.2700).abs() < 1e-3);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_detects_shift_only() {
        let key = SeedSpec::new(5, "ks").key();
        let a: Vec<f64> = (0..2000).map(|i| key.uniform(i)).collect();
        let b: Vec<f64> = (0..2000).map(|i| key.child(1).uniform(i)).collect();
        let c: Vec<f64> = b.iter().map(|x| x + 0.1).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
    }

    #[test]
    fn chi_square_p_value() {
        let (stat, p) = chi_square_gof(&[10, 10, 10], &[10.0, 10.0, 10.0], 0).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        // 3.841 is the 0.95 quantile of chi-square(1)
        let (_, p) = chi_square_gof(&[0, 0], &[1.0, 1.0], 0).unwrap();
        assert!((0.1..0.2).contains(&p), "{p}");
        let e = 100.0 - 3.841f64.sqrt() * 10.0 / 2f64.sqrt();
        let (_, p) = chi_square_gof(&[e.round() as u64, 200 - e.round() as u64], &[100.0, 100.0], 0).unwrap();
        assert!((p - 0.05).abs() < 0.02, "{p}");
    }

    #[test]
    fn homogeneity_examples() {
        let (stat, p) = chi_square_homogeneity(&[50, 30, 20], &[50, 30, 20], 5.0).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, p) = chi_square_homogeneity(&[80, 20], &[20, 80], 5.0).unwrap();
        assert!(p < 1e-10);
        // sparse tail categories are pooled into their neighbour
        let (_, p) = chi_square_homogeneity(&[100, 100, 1, 0], &[100, 100, 0, 1], 5.0).unwrap();
        assert!(p > 0.9);
        assert!(chi_square_homogeneity(&[1], &[1, 2], 5.0).is_err());
    }

    #[test]
    fn record_shape() {
        let e = TailEstimate::from_counts(Target::Threshold { b: 4.0 }, 3, 10);
        let json = serde_json::to_string(&e.record("lffp_length_tail", None, 2.0)).unwrap();
        assert!(json.contains("\"B\":4.0"), "{json}");
        assert!(!json.contains("lambda") && !json.contains("window"));
        let w = TailEstimate::from_counts(Target::Window { a: 0.1, b: 0.3 }, 1, 10);
        let json = serde_json::to_string(&w.record("cluster_window_prob", Some(0.01), 3.0)).unwrap();
        assert!(json.contains("\"window\":[0.1,0.3]") && json.contains("\"lambda\":0.01"));
    }
}
