use std::collections::HashMap;

use super::hypergeom::{hypergeom_pmf, HypergeomParams};
use super::pmf::FinitePmf;
use super::rng::RngStream;

/// Inverse-transform draw scanning the support from the left. Mass lost to
/// truncation is excluded, i.e. the draw is from the renormalized pmf.
pub fn sample(pmf: &FinitePmf, rng: &mut RngStream) -> i64 {
    let u = rng.uniform() * pmf.total_mass();
    let mut cum = 0.0;
    for (j, w) in pmf.iter() {
        cum += w;
        if u < cum {
            return j;
        }
    }
    pmf.hi()
}

/// Inverse transform against the cdf that visits support points in order of
/// decreasing probability, starting at the mode. For unimodal laws the
/// expected number of visited points is of the order of the standard
/// deviation rather than the support width.
#[derive(Debug, Clone)]
pub struct ModeOutwardSampler {
    pmf: FinitePmf,
    mode: usize,
    total: f64,
}

impl ModeOutwardSampler {
    pub fn new(pmf: FinitePmf) -> Self {
        let mode = pmf.argmax();
        let total = pmf.total_mass();
        ModeOutwardSampler { pmf, mode, total }
    }

    pub fn pmf(&self) -> &FinitePmf {
        &self.pmf
    }

    pub fn sample(&self, rng: &mut RngStream) -> i64 {
        self.sample_at(rng.uniform())
    }

    /// Maps a uniform `u ∈ [0, 1)` to a support point.
    pub fn sample_at(&self, u: f64) -> i64 {
        let w = self.pmf.weights();
        let u = u * self.total;
        let mut cum = w[self.mode];
        let mut left = self.mode as isize - 1;
        let mut right = self.mode + 1;
        let mut last = self.mode;
        while u >= cum {
            let take_left = match (left >= 0, right < w.len()) {
                (true, true) => w[left as usize] >= w[right],
                (true, false) => true,
                (false, true) => false,
                (false, false) => break,
            };
            if take_left {
                last = left as usize;
                left -= 1;
            } else {
                last = right;
                right += 1;
            }
            cum += w[last];
        }
        self.pmf.offset() + last as i64
    }
}

/// Exact hypergeometric draw.
pub fn sample_hypergeom(params: HypergeomParams, rng: &mut RngStream) -> i64 {
    ModeOutwardSampler::new(hypergeom_pmf(params)).sample(rng)
}

/// Memoizes hypergeometric samplers by parameter triple. One instance per
/// worker; the cache is cleared when it grows past `capacity` entries.
#[derive(Debug)]
pub struct HypergeomSampler {
    cache: HashMap<HypergeomParams, ModeOutwardSampler>,
    capacity: usize,
}

impl Default for HypergeomSampler {
    fn default() -> Self {
        HypergeomSampler::with_capacity(1 << 16)
    }
}

impl HypergeomSampler {
    pub fn with_capacity(capacity: usize) -> Self {
        HypergeomSampler {
            cache: HashMap::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn sample(&mut self, params: HypergeomParams, rng: &mut RngStream) -> i64 {
        let (lo, hi) = params.support();
        if lo == hi {
            return lo as i64;
        }
        if self.cache.len() >= self.capacity && !self.cache.contains_key(&params) {
            self.cache.clear();
        }
        self.cache
            .entry(params)
            .or_insert_with(|| ModeOutwardSampler::new(hypergeom_pmf(params)))
            .sample(rng)
    }
}
