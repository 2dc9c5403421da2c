//! The Stern-Brocot labelling of the binary tree by positive rationals and
//! Markov chains on ℚ⁺ that move by the maps L, R and P.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, WalkRow};
use crate::tree::{NodeWord, TreeSource};

/// A positive rational a/b in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PosRational {
    num: BigUint,
    den: BigUint,
}

impl PosRational {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if num.is_zero() || den.is_zero() {
            return Err(Error::Parse(format!("{num}/{den} is not a positive rational")));
        }
        let g = num.gcd(&den);
        Ok(PosRational {
            num: num / &g,
            den: den / &g,
        })
    }

    pub fn from_u64(num: u64, den: u64) -> Result<Self> {
        PosRational::new(num.into(), den.into())
    }

    pub fn one() -> Self {
        PosRational {
            num: BigUint::one(),
            den: BigUint::one(),
        }
    }

    pub fn numer(&self) -> &BigUint {
        &self.num
    }

    pub fn denom(&self) -> &BigUint {
        &self.den
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// a/(a+b)
    pub fn left(&self) -> Self {
        PosRational {
            num: self.num.clone(),
            den: &self.num + &self.den,
        }
    }

    /// (a+b)/b
    pub fn right(&self) -> Self {
        PosRational {
            num: &self.num + &self.den,
            den: self.den.clone(),
        }
    }

    /// Inverse of `left`/`right`; 1/1 is its own parent.
    pub fn parent(&self) -> Self {
        match self.num.cmp(&self.den) {
            std::cmp::Ordering::Greater => PosRational {
                num: &self.num - &self.den,
                den: self.den.clone(),
            },
            std::cmp::Ordering::Less => PosRational {
                num: self.num.clone(),
                den: &self.den - &self.num,
            },
            std::cmp::Ordering::Equal => PosRational::one(),
        }
    }
}

impl fmt::Display for PosRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for PosRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected a positive rational a/b, got {s:?}"));
        let (a, b) = match s.trim().split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s.trim(), "1"),
        };
        let a: BigUint = a.parse().map_err(|_| bad())?;
        let b: BigUint = b.parse().map_err(|_| bad())?;
        PosRational::new(a, b).map_err(|_| bad())
    }
}

/// L, R and P of `x`.
pub fn sb_maps(x: &PosRational) -> (PosRational, PosRational, PosRational) {
    (x.left(), x.right(), x.parent())
}

/// The rational at a binary word: letter 0 applies L, letter 1 applies R.
pub fn sb_encode(u: &NodeWord) -> Result<PosRational> {
    let mut x = PosRational::one();
    for &c in u.letters() {
        x = match c {
            0 => x.left(),
            1 => x.right(),
            _ => return Err(Error::UnknownNode(u.to_string())),
        };
    }
    Ok(x)
}

/// Runs the parent map down to 1/1. a + b drops at every step, so this ends.
pub fn sb_decode(x: &PosRational) -> NodeWord {
    let mut letters = Vec::new();
    let mut y = x.clone();
    while !y.is_one() {
        letters.push(if y.num < y.den { 0 } else { 1 });
        y = y.parent();
    }
    letters.reverse();
    NodeWord::new(letters)
}

/// Depth of `x` in the tree without building the word.
pub fn sb_depth(x: &PosRational) -> usize {
    // runs of equal letters are the partial quotients of a/b
    let (mut a, mut b) = (x.num.clone(), x.den.clone());
    let mut depth = BigUint::zero();
    while !b.is_zero() {
        let (q, r) = a.div_rem(&b);
        depth += q;
        a = b;
        b = r;
    }
    let d: usize = (depth - BigUint::one()).try_into().unwrap_or(usize::MAX);
    d
}

/// Probabilities (r, ℓ, p, s) of moving to R(x), L(x), P(x) or staying.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moves {
    pub r: f64,
    pub l: f64,
    pub p: f64,
    pub s: f64,
}

type MoveFn = Arc<dyn Fn(&PosRational) -> Moves + Send + Sync>;

#[derive(Clone)]
pub struct TransitionFamily {
    name: String,
    rule: MoveFn,
}

impl fmt::Debug for TransitionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionFamily").field("name", &self.name).finish()
    }
}

impl TransitionFamily {
    pub fn new(name: &str, rule: MoveFn) -> Self {
        TransitionFamily {
            name: name.to_string(),
            rule,
        }
    }

    pub fn constant(r: f64, l: f64, p: f64) -> Result<Self> {
        let s = 1.0 - r - l - p;
        if [r, l, p].iter().any(|&w| !(0.0..=1.0).contains(&w)) || s < -1e-12 {
            return Err(Error::InvalidKernel(format!("r={r}, l={l}, p={p} is not a probability vector")));
        }
        let moves = Moves { r, l, p, s: s.max(0.0) };
        Ok(TransitionFamily::new(&format!("r={r},l={l},p={p}"), Arc::new(move |_| moves)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The moves at x, with P(1/1) = 1/1 folded into staying.
    pub fn at(&self, x: &PosRational) -> Moves {
        let mut m = (self.rule)(x);
        if x.is_one() {
            m.s += m.p;
            m.p = 0.0;
        }
        m
    }

    pub fn validate(&self, x: &PosRational) -> Result<()> {
        let m = self.at(x);
        let ok = [m.r, m.l, m.p, m.s].iter().all(|w| (0.0..=1.0).contains(w))
            && (m.r + m.l + m.p + m.s - 1.0).abs() <= 1e-12;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidKernel(format!("moves at {x} do not form a probability vector")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Right,
    Left,
    Parent,
    Stay,
}

fn choose<R: Rng + ?Sized>(m: &Moves, rng: &mut R) -> Move {
    let u: f64 = rng.gen();
    if u < m.r {
        Move::Right
    } else if u < m.r + m.l {
        Move::Left
    } else if u < m.r + m.l + m.p {
        Move::Parent
    } else {
        Move::Stay
    }
}

fn apply(x: &PosRational, mv: Move) -> PosRational {
    match mv {
        Move::Right => x.right(),
        Move::Left => x.left(),
        Move::Parent => x.parent(),
        Move::Stay => x.clone(),
    }
}

pub fn sb_step<R: Rng + ?Sized>(family: &TransitionFamily, x: &PosRational, rng: &mut R) -> PosRational {
    apply(x, choose(&family.at(x), rng))
}

/// The same chain on the binary tree, through the Stern-Brocot labels.
pub fn family_to_walk(family: &TransitionFamily) -> Kernel<f64> {
    let f = family.clone();
    Kernel::walk(
        TreeSource::complete(2),
        &format!("stern_brocot({})", family.name()),
        Arc::new(move |u: &NodeWord, _| {
            let x = sb_encode(u).expect("binary word");
            let m = f.at(&x);
            WalkRow {
                up: m.p,
                stay: m.s,
                children: vec![m.l, m.r],
            }
        }),
    )
}

#[derive(Clone, Debug)]
pub struct SbRun {
    pub start: PosRational,
    pub steps: usize,
    pub last: PosRational,
    /// First time ≥ 1 at 1/1.
    pub first_return: Option<usize>,
    pub visits_to_root: usize,
    /// Visits to states of depth ≤ the tracking depth.
    pub occupancy: HashMap<PosRational, usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct SbConfig {
    pub steps: usize,
    pub seed: u64,
    pub track_depth: usize,
    pub stop_at_root: bool,
}

impl Default for SbConfig {
    fn default() -> Self {
        SbConfig {
            steps: 100_000,
            seed: 0,
            track_depth: 4,
            stop_at_root: false,
        }
    }
}

pub fn simulate_sb(family: &TransitionFamily, start: &PosRational, cfg: &SbConfig) -> SbRun {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = start.clone();
    let mut depth = sb_depth(&x);
    let mut run = SbRun {
        start: start.clone(),
        steps: 0,
        last: x.clone(),
        first_return: None,
        visits_to_root: 0,
        occupancy: HashMap::new(),
    };
    for t in 1..=cfg.steps {
        let mv = choose(&family.at(&x), &mut rng);
        let next = apply(&x, mv);
        match mv {
            Move::Right | Move::Left => depth += 1,
            Move::Parent => depth -= 1,
            Move::Stay => {}
        }
        x = next;
        run.steps = t;
        if depth <= cfg.track_depth {
            *run.occupancy.entry(x.clone()).or_insert(0) += 1;
        }
        if x.is_one() {
            run.visits_to_root += 1;
            if run.first_return.is_none() {
                run.first_return = Some(t);
                if cfg.stop_at_root {
                    break;
                }
            }
        }
    }
    run.last = x;
    run
}

/// Number of seeds in `seeds` whose trajectory from `start` hits 1/1
/// within `steps` steps.
pub fn return_count(
    family: &TransitionFamily,
    start: &PosRational,
    steps: usize,
    seeds: std::ops::Range<u64>,
) -> usize {
    seeds
        .into_par_iter()
        .filter(|&seed| {
            let cfg = SbConfig {
                steps,
                seed,
                track_depth: 0,
                stop_at_root: true,
            };
            simulate_sb(family, start, &cfg).first_return.is_some()
        })
        .count()
}

#[cfg(test)]
mod tests;
