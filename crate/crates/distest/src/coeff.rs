//! Coefficient sequences on the Haar multiresolution ladder.
//!
//! A [`CoeffSeq`] stores one father coefficient plus dyadic wavelet levels
//! `j = 0..=j_max`, level `j` holding `2^j` entries at positions
//! `k = 1..=2^j`. The flat index `t` orders coefficients coarse-to-fine:
//! the father is `t = 1` and `(j, k)` sits at `t = 2^j + k`. Every
//! transmission range in this crate is a prefix `t <= N` of that order.
//!
//! All norms use base-2 weights: the squared Besov (2, inf) norm is the
//! level supremum of `4^(j*s)` times the level's squared mass, the
//! (inf, inf) norm is the supremum of `2^(j*(s+1/2))` times the absolute
//! coefficients. The father counts as its own level with weight `2^0 = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat index of the father coefficient.
pub const FATHER_FLAT: usize = 1;

/// Flat index of wavelet coefficient `(j, k)`, with `k` in `1..=2^j`.
pub fn flat_index(j: usize, k: usize) -> Result<usize> {
    if j >= usize::BITS as usize - 1 || k == 0 || k > (1usize << j) {
        return Err(Error::IndexOutOfRange { j, k });
    }
    Ok((1usize << j) + k)
}

/// Inverse of [`flat_index`] for `t >= 2`; the father (`t = 1`) has no
/// level/position pair.
pub fn flat_to_jk(t: usize) -> Result<(usize, usize)> {
    if t < 2 {
        return Err(Error::FlatIndexOutOfRange { t, max: 1 });
    }
    let j = usize::BITS as usize - 1 - (t - 1).leading_zeros() as usize;
    Ok((j, t - (1usize << j)))
}

#[derive(Deserialize)]
struct RawCoeffSeq {
    #[serde(rename = "J_max")]
    j_max: usize,
    father: f64,
    levels: Vec<Vec<f64>>,
}

impl TryFrom<RawCoeffSeq> for CoeffSeq {
    type Error = Error;

    fn try_from(raw: RawCoeffSeq) -> Result<CoeffSeq> {
        if raw.levels.len() != raw.j_max + 1 {
            return Err(Error::Malformed(format!(
                "expected {} levels for J_max {}, found {}",
                raw.j_max + 1,
                raw.j_max,
                raw.levels.len()
            )));
        }
        for (j, level) in raw.levels.iter().enumerate() {
            if level.len() != 1usize << j {
                return Err(Error::Malformed(format!(
                    "level {} must hold {} entries, found {}",
                    j,
                    1usize << j,
                    level.len()
                )));
            }
        }
        let seq = CoeffSeq {
            j_max: raw.j_max,
            father: raw.father,
            levels: raw.levels,
        };
        seq.check_finite()?;
        Ok(seq)
    }
}

/// Haar coefficient array: father plus levels `0..=j_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoeffSeq")]
pub struct CoeffSeq {
    #[serde(rename = "J_max")]
    j_max: usize,
    father: f64,
    levels: Vec<Vec<f64>>,
}

impl CoeffSeq {
    /// All-zero ladder of depth `j_max`.
    pub fn zeros(j_max: usize) -> Self {
        assert!(j_max < 26, "ladder depth {j_max} would not fit in memory");
        CoeffSeq {
            j_max,
            father: 0.0,
            levels: (0..=j_max).map(|j| vec![0.0; 1usize << j]).collect(),
        }
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// Total number of stored coefficients, `2^(j_max + 1)`.
    pub fn len(&self) -> usize {
        1usize << (self.j_max + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn father(&self) -> f64 {
        self.father
    }

    pub fn set_father(&mut self, v: f64) {
        self.father = v;
    }

    /// Wavelet level `j` as a slice; slot `i` is position `k = i + 1`.
    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    pub fn level_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.levels[j]
    }

    /// Coefficient at level `j`, position `k` (1-based).
    pub fn coeff(&self, j: usize, k: usize) -> Result<f64> {
        if j > self.j_max || k == 0 || k > (1usize << j) {
            return Err(Error::IndexOutOfRange { j, k });
        }
        Ok(self.levels[j][k - 1])
    }

    pub fn set_coeff(&mut self, j: usize, k: usize, v: f64) -> Result<()> {
        if j > self.j_max || k == 0 || k > (1usize << j) {
            return Err(Error::IndexOutOfRange { j, k });
        }
        self.levels[j][k - 1] = v;
        Ok(())
    }

    /// Coefficient at flat index `t` (father at `t = 1`).
    pub fn get_flat(&self, t: usize) -> Result<f64> {
        if t == FATHER_FLAT {
            return Ok(self.father);
        }
        if t > self.len() {
            return Err(Error::FlatIndexOutOfRange { t, max: self.len() });
        }
        let (j, k) = flat_to_jk(t)?;
        Ok(self.levels[j][k - 1])
    }

    pub fn set_flat(&mut self, t: usize, v: f64) -> Result<()> {
        if t == FATHER_FLAT {
            self.father = v;
            return Ok(());
        }
        if t > self.len() {
            return Err(Error::FlatIndexOutOfRange { t, max: self.len() });
        }
        let (j, k) = flat_to_jk(t)?;
        self.levels[j][k - 1] = v;
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        if !self.father.is_finite() {
            return Err(Error::NonFinite("father coefficient".into()));
        }
        for (j, level) in self.levels.iter().enumerate() {
            if level.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("coefficient at level {j}")));
            }
        }
        Ok(())
    }

    /// Squared L2 (sequence) norm: father plus all levels.
    pub fn l2_norm_sq(&self) -> f64 {
        let mut acc = self.father * self.father;
        for level in &self.levels {
            for v in level {
                acc += v * v;
            }
        }
        acc
    }

    /// Squared L2 distance to another ladder of the same depth.
    pub fn l2_dist_sq(&self, other: &CoeffSeq) -> Result<f64> {
        if self.j_max != other.j_max {
            return Err(Error::ShapeMismatch(format!(
                "ladder depths {} vs {}",
                self.j_max, other.j_max
            )));
        }
        let mut acc = (self.father - other.father).powi(2);
        for (a, b) in self.levels.iter().zip(&other.levels) {
            for (x, y) in a.iter().zip(b) {
                acc += (x - y) * (x - y);
            }
        }
        Ok(acc)
    }

    /// Besov (2, inf) norm at smoothness `s`: the square root of the level
    /// supremum of `4^(j*s)` times the level's squared mass, the father
    /// counting as its own level with weight 1.
    pub fn besov_2inf_norm(&self, s: f64) -> f64 {
        let mut sup = self.father * self.father;
        for (j, level) in self.levels.iter().enumerate() {
            let mass: f64 = level.iter().map(|v| v * v).sum();
            sup = sup.max((2.0f64).powf(2.0 * s * j as f64) * mass);
        }
        sup.sqrt()
    }

    /// Besov (inf, inf) norm at smoothness `s`: the supremum of
    /// `2^(j*(s+1/2))` times absolute coefficients, father at weight 1.
    pub fn besov_infinf_norm(&self, s: f64) -> f64 {
        let mut sup = self.father.abs();
        for (j, level) in self.levels.iter().enumerate() {
            let w = (2.0f64).powf((s + 0.5) * j as f64);
            for v in level {
                sup = sup.max(w * v.abs());
            }
        }
        sup
    }

    /// Projection onto one test level: `l = 0` keeps the father alone
    /// (matching the statistic's unit centering), `l >= 1` keeps wavelet
    /// level `l`. Everything else is zeroed.
    pub fn project_level(&self, l: usize) -> Result<CoeffSeq> {
        if l > 0 && l > self.j_max {
            return Err(Error::IndexOutOfRange { j: l, k: 1 });
        }
        let mut out = CoeffSeq::zeros(self.j_max);
        if l == 0 {
            out.father = self.father;
        } else {
            out.levels[l].copy_from_slice(&self.levels[l]);
        }
        Ok(out)
    }

    /// Keeps wavelet levels `j1..=j2` (father excluded), zeroing the rest.
    pub fn block(&self, j1: usize, j2: usize) -> Result<CoeffSeq> {
        if j1 > j2 || j2 > self.j_max {
            return Err(Error::InvalidParam(format!(
                "block [{j1}, {j2}] outside levels 0..={}",
                self.j_max
            )));
        }
        let mut out = CoeffSeq::zeros(self.j_max);
        for j in j1..=j2 {
            out.levels[j].copy_from_slice(&self.levels[j]);
        }
        Ok(out)
    }

    /// Zeroes every coefficient with flat index above `t_keep`.
    pub fn truncate_flat(&mut self, t_keep: usize) {
        if t_keep == 0 {
            self.father = 0.0;
        }
        for (j, level) in self.levels.iter_mut().enumerate() {
            let base = 1usize << j; // flat index of (j, 1) minus 1
            for (i, v) in level.iter_mut().enumerate() {
                if base + i + 1 > t_keep {
                    *v = 0.0;
                }
            }
        }
    }

    /// Exact sup norm of the represented function on [0, 1).
    ///
    /// The function is piecewise constant on the `2^(j_max + 1)` finest
    /// dyadic cells, so the supremum is the max over those cells. The Haar
    /// wavelet at `(j, k)` is `+2^(j/2)` on the left half of
    /// `[(k-1)/2^j, k/2^j)` and `-2^(j/2)` on the right half; the father is
    /// the indicator of [0, 1).
    pub fn haar_sup_norm(&self) -> f64 {
        let depth = self.j_max + 1;
        let cells = 1usize << depth;
        let amp: Vec<f64> = (0..=self.j_max)
            .map(|j| (2.0f64).powf(j as f64 / 2.0))
            .collect();
        let mut sup = 0.0f64;
        for c in 0..cells {
            let mut v = self.father;
            for (j, (&a, level)) in amp.iter().zip(&self.levels).enumerate() {
                let k0 = c >> (depth - j); // 0-based position at level j
                let left_half = (c >> (depth - j - 1)) & 1 == 0;
                let w = level[k0];
                v += if left_half { a * w } else { -a * w };
            }
            sup = sup.max(v.abs());
        }
        sup
    }

    /// Euclidean distance to the Besov (2, inf) ball of radius `radius` at
    /// smoothness `s2`. Levels are independent, so the metric projection
    /// shrinks each level radially to its cap `radius * 2^(-j*s2)` (father
    /// cap `radius`); the distance is the root of the summed squared
    /// excesses.
    pub fn dist_to_b2inf_ball(&self, s2: f64, radius: f64) -> f64 {
        let mut acc = (self.father.abs() - radius).max(0.0).powi(2);
        for (j, level) in self.levels.iter().enumerate() {
            let mass: f64 = level.iter().map(|v| v * v).sum();
            let cap = radius * (2.0f64).powf(-s2 * j as f64);
            acc += (mass.sqrt() - cap).max(0.0).powi(2);
        }
        acc.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_examples() {
        assert_eq!(flat_index(0, 1).unwrap(), 2);
        assert_eq!(flat_index(1, 2).unwrap(), 4);
        assert_eq!(flat_index(3, 5).unwrap(), 13);
        assert!(flat_index(2, 0).is_err());
        assert!(flat_index(2, 5).is_err());
    }

    #[test]
    fn flat_roundtrip_covers_ladder() {
        for j in 0..=6usize {
            for k in 1..=(1usize << j) {
                let t = flat_index(j, k).unwrap();
                assert_eq!(flat_to_jk(t).unwrap(), (j, k));
            }
        }
        assert!(flat_to_jk(1).is_err());
    }

    #[test]
    fn flat_order_is_coarse_to_fine() {
        let mut seq = CoeffSeq::zeros(3);
        for t in 1..=seq.len() {
            seq.set_flat(t, t as f64).unwrap();
        }
        assert_eq!(seq.father(), 1.0);
        assert_eq!(seq.coeff(0, 1).unwrap(), 2.0);
        assert_eq!(seq.coeff(1, 1).unwrap(), 3.0);
        assert_eq!(seq.coeff(1, 2).unwrap(), 4.0);
        assert_eq!(seq.coeff(3, 8).unwrap(), 16.0);
    }

    #[test]
    fn l2_norm_examples() {
        let mut seq = CoeffSeq::zeros(4);
        assert_eq!(seq.l2_norm_sq(), 0.0);
        seq.set_coeff(2, 3, 0.5).unwrap();
        assert_eq!(seq.l2_norm_sq(), 0.25);
        seq.set_father(1.0);
        seq.set_coeff(1, 1, 1.0).unwrap();
        seq.set_coeff(1, 2, 1.0).unwrap();
        assert_eq!(seq.l2_norm_sq(), 3.25);
    }

    #[test]
    fn besov_2inf_examples() {
        let mut seq = CoeffSeq::zeros(3);
        assert_eq!(seq.besov_2inf_norm(1.0), 0.0);
        // Level 2 filled with 0.25: mass 0.25, weight 4^(2*1) = 16 -> norm 2.
        for k in 1..=4 {
            seq.set_coeff(2, k, 0.25).unwrap();
        }
        assert!((seq.besov_2inf_norm(1.0) - 2.0).abs() < 1e-14);

        let mut single = CoeffSeq::zeros(4);
        single.set_coeff(3, 2, 0.0625).unwrap();
        // 2^(2*0.5*3) * 0.0625^2 = 8 * 0.00390625 -> sqrt = 0.1767767.
        let expect = (8.0f64 * 0.0625 * 0.0625).sqrt();
        assert!((single.besov_2inf_norm(0.5) - expect).abs() < 1e-14);
    }

    #[test]
    fn besov_infinf_examples() {
        let mut seq = CoeffSeq::zeros(4);
        seq.set_coeff(2, 1, 0.1).unwrap();
        assert!((seq.besov_infinf_norm(1.0) - 0.8).abs() < 1e-14);

        // Saturating profile: coefficient 2^(-j(s+1/2)) everywhere -> norm 1.
        let s = 0.5;
        let mut sat = CoeffSeq::zeros(5);
        sat.set_father(1.0);
        for j in 0..=5 {
            let a = (2.0f64).powf(-(s + 0.5) * j as f64);
            for k in 1..=(1usize << j) {
                sat.set_coeff(j, k, a).unwrap();
            }
        }
        assert!((sat.besov_infinf_norm(s) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn father_counts_in_both_norms() {
        let mut seq = CoeffSeq::zeros(2);
        seq.set_father(-1.5);
        assert!((seq.besov_2inf_norm(1.0) - 1.5).abs() < 1e-15);
        assert!((seq.besov_infinf_norm(1.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn projection_conventions() {
        let mut seq = CoeffSeq::zeros(2);
        seq.set_father(3.0);
        seq.set_coeff(0, 1, 5.0).unwrap();
        seq.set_coeff(1, 2, 7.0).unwrap();

        let p0 = seq.project_level(0).unwrap();
        assert_eq!(p0.father(), 3.0);
        assert_eq!(p0.l2_norm_sq(), 9.0); // father only, not the level-0 wavelet

        let p1 = seq.project_level(1).unwrap();
        assert_eq!(p1.father(), 0.0);
        assert_eq!(p1.coeff(1, 2).unwrap(), 7.0);
        assert_eq!(p1.l2_norm_sq(), 49.0);

        assert!(seq.project_level(3).is_err());
    }

    #[test]
    fn block_retains_exact_levels() {
        let mut seq = CoeffSeq::zeros(3);
        seq.set_father(1.0);
        for j in 0..=3usize {
            for k in 1..=(1usize << j) {
                seq.set_coeff(j, k, (j + 1) as f64).unwrap();
            }
        }
        let b = seq.block(1, 2).unwrap();
        assert_eq!(b.father(), 0.0);
        assert_eq!(b.level(0), &[0.0]);
        assert_eq!(b.level(1), &[2.0, 2.0]);
        assert_eq!(b.level(2), &[3.0; 4]);
        assert_eq!(b.level(3), &[0.0; 8]);
        assert!(seq.block(2, 1).is_err());
        assert!(seq.block(1, 9).is_err());
    }

    #[test]
    fn blocks_and_complement_are_parseval_additive() {
        let mut seq = CoeffSeq::zeros(4);
        let mut x = 0.37;
        seq.set_father(0.9);
        for j in 0..=4usize {
            for k in 1..=(1usize << j) {
                x = (x * 7.13 + 0.11) % 1.0;
                seq.set_coeff(j, k, x - 0.5).unwrap();
            }
        }
        let inner = seq.block(1, 2).unwrap();
        let low = seq.block(0, 0).unwrap();
        let high = seq.block(3, 4).unwrap();
        let father_sq = seq.father() * seq.father();
        let total = inner.l2_norm_sq() + low.l2_norm_sq() + high.l2_norm_sq() + father_sq;
        assert!((total - seq.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn truncate_flat_keeps_prefix() {
        let mut seq = CoeffSeq::zeros(2);
        for t in 1..=seq.len() {
            seq.set_flat(t, 1.0).unwrap();
        }
        seq.truncate_flat(5);
        for t in 1..=5 {
            assert_eq!(seq.get_flat(t).unwrap(), 1.0);
        }
        for t in 6..=seq.len() {
            assert_eq!(seq.get_flat(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn haar_sup_norm_examples() {
        let mut seq = CoeffSeq::zeros(3);
        seq.set_father(0.75);
        assert!((seq.haar_sup_norm() - 0.75).abs() < 1e-15);

        let mut one = CoeffSeq::zeros(3);
        one.set_coeff(1, 1, 0.5).unwrap();
        // Amplitude 2^(1/2) * 0.5.
        assert!((one.haar_sup_norm() - 0.5 * 2.0f64.sqrt()).abs() < 1e-15);

        let mut zero_level = CoeffSeq::zeros(3);
        zero_level.set_coeff(0, 1, 1.0).unwrap();
        assert!((zero_level.haar_sup_norm() - 1.0).abs() < 1e-15);
    }

    /// Independent oracle: evaluate the expansion pointwise from the basis
    /// definition at midpoints of a finer dyadic grid.
    fn haar_eval_oracle(seq: &CoeffSeq, x: f64) -> f64 {
        let mut v = seq.father(); // father = indicator of [0,1)
        for j in 0..=seq.j_max() {
            let scale = (1usize << j) as f64;
            let k = (x * scale).floor() as usize + 1; // 1-based position
            if k > (1usize << j) {
                continue;
            }
            let lo = (k - 1) as f64 / scale;
            let mid = (k as f64 - 0.5) / scale;
            let hi = k as f64 / scale;
            let psi = if x >= lo && x < mid {
                scale.sqrt()
            } else if x >= mid && x < hi {
                -scale.sqrt()
            } else {
                0.0
            };
            v += seq.coeff(j, k).unwrap() * psi;
        }
        v
    }

    #[test]
    fn haar_sup_norm_matches_pointwise_oracle() {
        let mut seq = CoeffSeq::zeros(4);
        let mut x = 0.2;
        seq.set_father(-0.3);
        for j in 0..=4usize {
            for k in 1..=(1usize << j) {
                x = (x * 3.7 + 0.31) % 1.0;
                seq.set_coeff(j, k, (x - 0.5) * 0.8).unwrap();
            }
        }
        // Midpoints of cells one level finer than the finest wavelet.
        let cells = 1usize << (seq.j_max() + 2);
        let mut sup = 0.0f64;
        for c in 0..cells {
            let mid = (c as f64 + 0.5) / cells as f64;
            sup = sup.max(haar_eval_oracle(&seq, mid).abs());
        }
        assert!((seq.haar_sup_norm() - sup).abs() < 1e-12);
    }

    #[test]
    fn ball_distance_examples() {
        // Inside the ball.
        let mut inside = CoeffSeq::zeros(3);
        inside.set_coeff(1, 1, 0.1).unwrap();
        assert_eq!(inside.dist_to_b2inf_ball(1.0, 1.0), 0.0);

        // Single spike: level 4 mass 1, cap 2^-4 -> distance 0.9375.
        let mut spike = CoeffSeq::zeros(5);
        spike.set_coeff(4, 7, 1.0).unwrap();
        assert!((spike.dist_to_b2inf_ball(1.0, 1.0) - 0.9375).abs() < 1e-14);

        // Two unit levels at s2 = 0.5: excesses 1 - 2^(-1/2) and 1 - 2^-1.
        let mut two = CoeffSeq::zeros(3);
        two.set_coeff(1, 2, 1.0).unwrap();
        two.set_coeff(2, 1, 1.0).unwrap();
        let expect = ((1.0 - 2.0f64.powf(-0.5)).powi(2) + (0.5f64).powi(2)).sqrt();
        assert!((expect - 0.579_470_825_5).abs() < 1e-9);
        assert!((two.dist_to_b2inf_ball(0.5, 1.0) - expect).abs() < 1e-14);
    }

    /// Independent oracle: projected gradient descent on the squared
    /// distance to the ball, projecting onto the per-level norm caps.
    fn ball_dist_oracle(f: &CoeffSeq, s2: f64, radius: f64) -> f64 {
        let project = |g: &mut CoeffSeq| {
            if g.father().abs() > radius {
                g.set_father(radius * g.father().signum());
            }
            for j in 0..=g.j_max() {
                let cap = radius * (2.0f64).powf(-s2 * j as f64);
                let mass: f64 = g.level(j).iter().map(|v| v * v).sum();
                let norm = mass.sqrt();
                if norm > cap {
                    let scale = cap / norm;
                    for v in g.level_mut(j) {
                        *v *= scale;
                    }
                }
            }
        };
        let mut g = f.clone();
        project(&mut g);
        let step = 0.5;
        for _ in 0..4000 {
            // gradient of |f - g|^2 in g is 2(g - f); step toward f, project.
            let mut next = g.clone();
            next.set_father(g.father() + step * (f.father() - g.father()));
            for j in 0..=g.j_max() {
                for k in 1..=(1usize << j) {
                    let gv = g.coeff(j, k).unwrap();
                    let fv = f.coeff(j, k).unwrap();
                    next.set_coeff(j, k, gv + step * (fv - gv)).unwrap();
                }
            }
            project(&mut next);
            g = next;
        }
        f.l2_dist_sq(&g).unwrap().sqrt()
    }

    #[test]
    fn ball_distance_matches_projected_gradient_oracle() {
        let mut f = CoeffSeq::zeros(3);
        let mut x = 0.81;
        f.set_father(1.7);
        for j in 0..=3usize {
            for k in 1..=(1usize << j) {
                x = (x * 5.3 + 0.17) % 1.0;
                f.set_coeff(j, k, (x - 0.3) * 1.4).unwrap();
            }
        }
        for (s2, radius) in [(0.5, 1.0), (1.0, 0.8), (1.5, 2.0)] {
            let fast = f.dist_to_b2inf_ball(s2, radius);
            let slow = ball_dist_oracle(&f, s2, radius);
            assert!(
                (fast - slow).abs() < 1e-6,
                "s2 {s2} radius {radius}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn ball_distance_zero_iff_member() {
        let mut f = CoeffSeq::zeros(4);
        f.set_coeff(2, 2, 0.3).unwrap();
        f.set_coeff(4, 9, 0.05).unwrap();
        let s2 = 0.7;
        let norm = f.besov_2inf_norm(s2);
        assert_eq!(f.dist_to_b2inf_ball(s2, norm * 1.000001), 0.0);
        assert!(f.dist_to_b2inf_ball(s2, norm * 0.9) > 0.0);
    }

    #[test]
    fn json_shape_roundtrip() {
        let mut seq = CoeffSeq::zeros(2);
        seq.set_father(0.5);
        seq.set_coeff(1, 2, -1.25).unwrap();
        let js = serde_json::to_string(&seq).unwrap();
        assert!(js.contains("\"J_max\":2"));
        assert!(js.contains("\"father\":0.5"));
        let back: CoeffSeq = serde_json::from_str(&js).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn json_rejects_malformed_input() {
        // Wrong level width.
        let bad = r#"{"J_max": 1, "father": 0.0, "levels": [[0.0], [0.0]]}"#;
        assert!(serde_json::from_str::<CoeffSeq>(bad).is_err());
        // Missing level.
        let bad = r#"{"J_max": 2, "father": 0.0, "levels": [[0.0], [0.0, 0.0]]}"#;
        assert!(serde_json::from_str::<CoeffSeq>(bad).is_err());
        // Non-finite entry.
        let bad = r#"{"J_max": 0, "father": 1e999, "levels": [[0.0]]}"#;
        assert!(serde_json::from_str::<CoeffSeq>(bad).is_err());
    }
}
