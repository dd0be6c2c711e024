use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_index, Error, Result};
use crate::image::Sinogram;
use crate::projector::RaySystem;

/// Draws allowed per requested pair before generation gives up.
pub const DEFAULT_ATTEMPT_CAP: u64 = 1000;

/// Precomputed disjoint ray pairs, consumed in order by the correction loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairPool {
    pub pairs: Vec<(u32, u32)>,
    pub seed: u64,
    /// [`ScanGeometry::fingerprint`](crate::ScanGeometry::fingerprint) of the
    /// generating geometry, when known.
    pub fingerprint: Option<u64>,
}

impl PairPool {
    pub fn new(pairs: Vec<(u32, u32)>, seed: u64, fingerprint: Option<u64>) -> Self {
        Self {
            pairs,
            seed,
            fingerprint,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks the pool against a ray system: indices in range, paths
    /// non-empty and pairwise disjoint, geometry fingerprint matching.
    pub fn validate(&self, system: &RaySystem) -> Result<()> {
        if let Some(fp) = self.fingerprint {
            if fp != system.geometry().fingerprint() {
                return Err(Error::Config(
                    "pair pool was generated for a different geometry".into(),
                ));
            }
        }
        let mut checker = DisjointChecker::new(system.geometry().cell_count());
        for (i, &(a, b)) in self.pairs.iter().enumerate() {
            check_index("ray", a as usize, system.ray_count())?;
            check_index("ray", b as usize, system.ray_count())?;
            if !checker.accepts(system, a as usize, b as usize) {
                return Err(Error::Domain(alloc::format!(
                    "pair {i} ({a}, {b}) shares a cell or has an empty path"
                )));
            }
        }
        Ok(())
    }

    /// Number of pairs whose measurements are both positive.
    pub fn usable_count(&self, sinogram: &Sinogram) -> usize {
        self.pairs
            .iter()
            .filter(|&&(a, b)| sinogram.ray(a as usize) > 0.0 && sinogram.ray(b as usize) > 0.0)
            .count()
    }
}

/// Cell-disjointness test with a generation-stamped scratch array.
struct DisjointChecker {
    stamps: Vec<u32>,
    current: u32,
}

impl DisjointChecker {
    fn new(cells: usize) -> Self {
        Self {
            stamps: vec![0; cells],
            current: 0,
        }
    }

    fn accepts(&mut self, system: &RaySystem, a: usize, b: usize) -> bool {
        let (pa, pb) = (system.path(a), system.path(b));
        if pa.is_empty() || pb.is_empty() {
            return false;
        }
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamps.fill(0);
            self.current = 1;
        }
        for &c in pa.cells {
            self.stamps[c as usize] = self.current;
        }
        pb.cells.iter().all(|&c| self.stamps[c as usize] != self.current)
    }
}

fn draw_pairs(
    system: &RaySystem,
    seed: u64,
    attempt_cap: u64,
    mut keep_going: impl FnMut(u32, u32) -> bool,
) -> Result<Vec<(u32, u32)>> {
    let rays = system.ray_count();
    if rays == 0 || rays > u32::MAX as usize {
        return Err(Error::Config("ray system has no addressable rays".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checker = DisjointChecker::new(system.geometry().cell_count());
    let mut pairs = Vec::new();
    let mut attempts = 0u64;
    loop {
        if attempts >= attempt_cap {
            return Err(Error::PairSearchExhausted {
                accepted: pairs.len(),
                attempts,
            });
        }
        attempts += 1;
        let a = rng.random_range(0..rays as u32);
        let b = rng.random_range(0..rays as u32);
        if checker.accepts(system, a as usize, b as usize) {
            pairs.push((a, b));
            if !keep_going(a, b) {
                return Ok(pairs);
            }
        }
    }
}

/// Draws uniform ray pairs, keeping those with non-empty, cell-disjoint
/// paths, until `count` pairs are accepted. Deterministic in `seed`.
pub fn generate_pair_pool(
    system: &RaySystem,
    count: usize,
    seed: u64,
    attempt_cap: Option<u64>,
) -> Result<PairPool> {
    if count == 0 {
        return Err(Error::Config("pair count must be at least 1".into()));
    }
    let cap = attempt_cap.unwrap_or(DEFAULT_ATTEMPT_CAP.saturating_mul(count as u64));
    let mut accepted = 0;
    let pairs = draw_pairs(system, seed, cap, |_, _| {
        accepted += 1;
        accepted < count
    })?;
    Ok(PairPool::new(pairs, seed, Some(system.geometry().fingerprint())))
}

/// Like [`generate_pair_pool`], but keeps drawing until the pool holds
/// `budget` pairs whose measurements are both positive. The other accepted
/// pairs stay in the pool (in draw order) and are skipped by the driver.
pub fn generate_pair_pool_for_budget(
    system: &RaySystem,
    sinogram: &Sinogram,
    budget: usize,
    seed: u64,
    attempt_cap: Option<u64>,
) -> Result<PairPool> {
    if budget == 0 {
        return Ok(PairPool::new(
            Vec::new(),
            seed,
            Some(system.geometry().fingerprint()),
        ));
    }
    crate::error::check_len("sinogram", system.ray_count(), sinogram.len())?;
    let cap = attempt_cap.unwrap_or(DEFAULT_ATTEMPT_CAP.saturating_mul(budget as u64));
    let mut usable = 0;
    let pairs = draw_pairs(system, seed, cap, |a, b| {
        if sinogram.ray(a as usize) > 0.0 && sinogram.ray(b as usize) > 0.0 {
            usable += 1;
        }
        usable < budget
    })?;
    Ok(PairPool::new(pairs, seed, Some(system.geometry().fingerprint())))
}
