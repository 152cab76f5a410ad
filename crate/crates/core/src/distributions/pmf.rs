use crate::error::{Error, Result};

/// Weights smaller than this fraction of the largest weight may be dropped
/// from hypergeometric pmfs and convolutions. Dropped mass is recorded in
/// [`FinitePmf::lost_mass`].
pub const TAIL_CUTOFF: f64 = 1e-17;

/// Tolerance on `Σ weights + lost_mass = 1` accepted by the constructors.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability mass function on the contiguous integer range
/// `offset ..= offset + weights.len() - 1`.
///
/// The representation is kept trimmed: the first and last weights are
/// strictly positive. Mass removed by tail truncation is tracked in
/// `lost_mass`, so `Σ weights + lost_mass = 1` up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    offset: i64,
    weights: Vec<f64>,
    lost_mass: f64,
}

impl FinitePmf {
    /// Builds a pmf from weights that must already sum to one.
    pub fn from_weights(offset: i64, weights: Vec<f64>) -> Result<Self> {
        Self::with_lost_mass(offset, weights, 0.0)
    }

    /// Builds a pmf whose weights sum to `1 - lost_mass`.
    pub fn with_lost_mass(offset: i64, weights: Vec<f64>, lost_mass: f64) -> Result<Self> {
        check_weights(&weights)?;
        if !(0.0..=1.0).contains(&lost_mass) {
            return Err(Error::domain(format!("lost mass {lost_mass} outside [0, 1]")));
        }
        let total: f64 = weights.iter().sum();
        if (total + lost_mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::domain(format!(
                "weights sum to {total} with lost mass {lost_mass}; expected 1"
            )));
        }
        Ok(Self::trimmed(offset, weights, lost_mass))
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_unnormalized(offset: i64, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self::trimmed(offset, weights, 0.0))
    }

    pub fn point_mass(at: i64) -> Self {
        FinitePmf {
            offset: at,
            weights: vec![1.0],
            lost_mass: 0.0,
        }
    }

    /// Internal constructor: strips zero weights from both ends.
    /// Callers guarantee at least one positive weight.
    pub(crate) fn trimmed(offset: i64, mut weights: Vec<f64>, lost_mass: f64) -> Self {
        let first = weights.iter().position(|&w| w > 0.0).unwrap_or(0);
        let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        weights.truncate(last + 1);
        weights.drain(..first);
        FinitePmf {
            offset: offset + first as i64,
            weights,
            lost_mass,
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Smallest support point.
    pub fn lo(&self) -> i64 {
        self.offset
    }

    /// Largest support point.
    pub fn hi(&self) -> i64 {
        self.offset + self.weights.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lost_mass(&self) -> f64 {
        self.lost_mass
    }

    pub fn is_truncated(&self) -> bool {
        self.lost_mass > 0.0
    }

    /// Probability of the integer `j`; zero off the support.
    pub fn prob(&self, j: i64) -> f64 {
        if j < self.lo() || j > self.hi() {
            0.0
        } else {
            self.weights[(j - self.offset) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.offset + i as i64, w))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn expect(&self, f: impl Fn(i64) -> f64) -> f64 {
        self.iter().map(|(j, w)| w * f(j)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|j| j as f64) / self.total_mass()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.expect(|j| (j as f64 - mean).powi(2)) / self.total_mass()
    }

    /// Index of the largest weight (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    /// The law of `X + eta`.
    pub fn shifted(&self, eta: i64) -> Self {
        FinitePmf {
            offset: self.offset + eta,
            weights: self.weights.clone(),
            lost_mass: self.lost_mass,
        }
    }

    /// The law of `-X`.
    pub fn negated(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.reverse();
        FinitePmf {
            offset: -self.hi(),
            weights,
            lost_mass: self.lost_mass,
        }
    }

    /// Drops tail weights below `rel_cutoff` times the largest weight and
    /// moves them into `lost_mass`. Only the two tails are cut, so the
    /// support stays contiguous.
    pub fn truncated(self, rel_cutoff: f64) -> Self {
        if rel_cutoff <= 0.0 || self.weights.len() <= 1 {
            return self;
        }
        let threshold = self.weights[self.argmax()] * rel_cutoff;
        let first = self.weights.iter().position(|&w| w >= threshold).unwrap_or(0);
        let last = self
            .weights
            .iter()
            .rposition(|&w| w >= threshold)
            .unwrap_or(self.weights.len() - 1);
        let dropped: f64 = self.weights[..first].iter().sum::<f64>()
            + self.weights[last + 1..].iter().sum::<f64>();
        if dropped == 0.0 && first == 0 && last + 1 == self.weights.len() {
            return self;
        }
        let weights = self.weights[first..=last].to_vec();
        FinitePmf {
            offset: self.offset + first as i64,
            weights,
            lost_mass: self.lost_mass + dropped,
        }
    }

    /// Rescales the weights to sum to one and clears `lost_mass`.
    pub fn renormalized(&self) -> Self {
        let total = self.total_mass();
        if self.lost_mass > 0.0 {
            log::debug!(
                "renormalizing pmf on [{}, {}] with lost mass {:e}",
                self.lo(),
                self.hi(),
                self.lost_mass
            );
        }
        FinitePmf {
            offset: self.offset,
            weights: self.weights.iter().map(|w| w / total).collect(),
            lost_mass: 0.0,
        }
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::domain("pmf needs at least one weight"));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::domain(format!("invalid pmf weight {w}")));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::domain("pmf weights are all zero"));
    }
    Ok(())
}

/// Total variation distance `½ Σ_y |p(y) − q(y)|` over the union of the
/// supports, with absent points counted as zero.
pub fn tv_distance(p: &FinitePmf, q: &FinitePmf) -> f64 {
    let lo = p.lo().min(q.lo());
    let hi = p.hi().max(q.hi());
    let sum: f64 = (lo..=hi).map(|j| (p.prob(j) - q.prob(j)).abs()).sum();
    (0.5 * sum).clamp(0.0, 1.0)
}

/// Exact law of `A − B` for independent `A ~ a`, `B ~ b`, with tails below
/// [`TAIL_CUTOFF`] folded into `lost_mass`.
pub fn difference_law(a: &FinitePmf, b: &FinitePmf) -> FinitePmf {
    convolve(a, &b.negated()).truncated(TAIL_CUTOFF)
}

/// Law of `A + B` for independent summands, without truncation.
pub fn convolve(a: &FinitePmf, b: &FinitePmf) -> FinitePmf {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &wa) in a.weights.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        for (slot, &wb) in out[i..].iter_mut().zip(&b.weights) {
            *slot += wa * wb;
        }
    }
    let lost = a.lost_mass + b.lost_mass - a.lost_mass * b.lost_mass;
    FinitePmf::trimmed(a.offset + b.offset, out, lost)
}
