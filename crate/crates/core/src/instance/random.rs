//! Seeded random instances.
//!
//! Entries are Gaussian rationals with `|numerator| ≤ 9` and denominators in
//! `1..=4`, which keeps exact elimination cheap.

use std::str::FromStr;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::QSatInstance;
use crate::field::{dot, kron_vec, scalar, Field, Matrix, Scalar};

/// Relative weights for pair ranks 1 through 4.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDist(pub [f64; 4]);

impl Default for RankDist {
    fn default() -> Self {
        RankDist([6.0, 2.0, 1.0, 0.25])
    }
}

impl FromStr for RankDist {
    type Err = String;

    /// `uniform`, a single rank (`2`), or weights `1:6,2:2,3:1,4:0.25`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(RankDist([1.0; 4]));
        }
        let mut w = [0.0; 4];
        if let Ok(r) = s.parse::<usize>() {
            if !(1..=4).contains(&r) {
                return Err(format!("rank {r} not in 1..=4"));
            }
            w[r - 1] = 1.0;
            return Ok(RankDist(w));
        }
        for part in s.split(',') {
            let (r, x) = part
                .split_once(':')
                .ok_or_else(|| format!("expected rank:weight, got {part:?}"))?;
            let r: usize = r.trim().parse().map_err(|_| format!("bad rank {r:?}"))?;
            let x: f64 = x.trim().parse().map_err(|_| format!("bad weight {x:?}"))?;
            if !(1..=4).contains(&r) || !(x >= 0.0 && x.is_finite()) {
                return Err(format!("invalid entry {part:?}"));
            }
            w[r - 1] = x;
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err("weights sum to zero".into());
        }
        Ok(RankDist(w))
    }
}

#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub n: usize,
    pub pairs: usize,
    pub rank_dist: RankDist,
    pub seed: u64,
    /// Every tensor annihilates one hidden random product state (ranks capped at 3).
    pub planted: bool,
}

impl RandomSpec {
    pub fn new(n: usize, pairs: usize, seed: u64) -> Self {
        RandomSpec {
            n,
            pairs,
            rank_dist: RankDist::default(),
            seed,
            planted: false,
        }
    }

    pub fn with_ranks(mut self, d: RankDist) -> Self {
        self.rank_dist = d;
        self
    }

    pub fn planted(mut self, yes: bool) -> Self {
        self.planted = yes;
        self
    }
}

pub fn random_scalar<R: Rng>(rng: &mut R) -> Scalar {
    if rng.random_ratio(1, 4) {
        return Scalar::zero();
    }
    let re = (rng.random_range(-9..=9), rng.random_range(1..=4));
    let im = if rng.random_bool(0.5) {
        (rng.random_range(-9..=9), rng.random_range(1..=4))
    } else {
        (0, 1)
    };
    scalar(re.0, re.1, im.0, im.1)
}

pub fn random_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<Scalar> {
    loop {
        let v: Vec<Scalar> = (0..len).map(|_| random_scalar(rng)).collect();
        if v.iter().any(|z| !z.is_zero()) {
            return v;
        }
    }
}

pub fn random_tensor<R: Rng>(rng: &mut R) -> crate::Mat {
    Matrix::new(2, 2, random_vector(rng, 4)).expect("four entries")
}

fn pick_rank<R: Rng>(rng: &mut R, d: &RankDist) -> usize {
    let total: f64 = d.0.iter().sum();
    let mut x = rng.random_range(0.0..total);
    for (i, w) in d.0.iter().enumerate() {
        if x < *w {
            return i + 1;
        }
        x -= w;
    }
    4
}

/// Projects a tensor onto the annihilator of `w` (a pair ket) by adjusting one entry.
fn annihilate(t: &mut [Scalar], w: &[Scalar]) {
    let k = w.iter().position(|z| !z.is_zero()).expect("nonzero planted state");
    let c = dot(t, w).div_ref(&w[k]);
    t[k] = t[k].sub_ref(&c);
}

pub fn random_instance(spec: &RandomSpec) -> QSatInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut inst = QSatInstance::new(spec.n);
    let mut all: Vec<(usize, usize)> = (0..spec.n).flat_map(|a| (a + 1..spec.n).map(move |b| (a, b))).collect();
    all.shuffle(&mut rng);
    all.truncate(spec.pairs);
    all.sort_unstable();
    let hidden: Vec<Vec<Scalar>> = if spec.planted {
        (0..spec.n).map(|_| random_vector(&mut rng, 2)).collect()
    } else {
        Vec::new()
    };
    for (a, b) in all {
        let mut rank = pick_rank(&mut rng, &spec.rank_dist);
        if spec.planted {
            rank = rank.min(3);
        }
        let w = spec.planted.then(|| kron_vec(&hidden[a], &hidden[b]));
        let mut attempts = 0;
        while inst.constraint_rank(a, b) < rank && attempts < 64 {
            attempts += 1;
            let mut t = random_vector(&mut rng, 4);
            if let Some(w) = &w {
                annihilate(&mut t, w);
            }
            let t = Matrix::new(2, 2, t).expect("four entries");
            inst.insert_tensor(a, b, t).expect("pair in range");
        }
    }
    inst
}
