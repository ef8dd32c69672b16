//! Fixed-step reference simulator for the lattice process.
//!
//! Each step of length `dt` first lets every vacant site grow with
//! probability `dt`, then ignites every site with probability `λ·dt`;
//! an ignited tree burns its whole cluster. Used only as a test oracle.

use fireline_core::SeedSpec;

pub struct NaiveConfig {
    pub sites: usize,
    pub lambda: f64,
    pub raw_horizon: f64,
    pub dt: f64,
}

/// Final occupancy after one replica.
pub fn naive_run(cfg: &NaiveConfig, seed: &SeedSpec) -> Vec<bool> {
    let key = seed.key();
    let steps = (cfg.raw_horizon / cfg.dt).round() as u64;
    let p_grow = cfg.dt;
    let p_fire = cfg.lambda * cfg.dt;
    let mut occ = vec![false; cfg.sites];
    let mut counter = 0u64;
    for _ in 0..steps {
        for s in occ.iter_mut() {
            if !*s && key.uniform(counter) < p_grow {
                *s = true;
            }
            counter += 1;
        }
        for i in 0..cfg.sites {
            let fire = key.child(1).uniform(counter) < p_fire;
            counter += 1;
            if fire && occ[i] {
                let mut l = i;
                while l > 0 && occ[l - 1] {
                    l -= 1;
                }
                let mut r = i;
                while r + 1 < cfg.sites && occ[r + 1] {
                    r += 1;
                }
                occ[l..=r].iter_mut().for_each(|s| *s = false);
            }
        }
    }
    occ
}

/// Size of the occupied run through site `i`.
pub fn run_size(occ: &[bool], i: usize) -> u64 {
    if !occ[i] {
        return 0;
    }
    let mut l = i;
    while l > 0 && occ[l - 1] {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < occ.len() && occ[r + 1] {
        r += 1;
    }
    (r - l + 1) as u64
}
