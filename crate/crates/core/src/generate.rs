//! Seeded random instance generator.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{Mode, PenaltySpec, ProblemInstance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {what} `{input}`")]
pub struct PolicyParseError {
    what: &'static str,
    input: String,
}

fn policy_err(what: &'static str, input: &str) -> PolicyParseError {
    PolicyParseError {
        what,
        input: input.to_string(),
    }
}

fn field<T: FromStr>(
    what: &'static str,
    input: &str,
    token: Option<&str>,
) -> Result<T, PolicyParseError> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| policy_err(what, input))
}

/// How demand/center costs are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostMode {
    /// Independent uniform costs in `[1, max_cost]`.
    Uniform { max_cost: i64 },
    /// Integer points in a `width` square; cost is the rounded Euclidean
    /// distance, at least 1.
    Planar { width: i64 },
}

impl FromStr for CostMode {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        let mode = match parts.next() {
            Some("uniform") => {
                let max_cost: i64 = field("cost mode", s, parts.next())?;
                if max_cost < 1 {
                    return Err(policy_err("cost mode", s));
                }
                CostMode::Uniform { max_cost }
            }
            Some("planar") => {
                let width: i64 = field("cost mode", s, parts.next())?;
                if width < 1 {
                    return Err(policy_err("cost mode", s));
                }
                CostMode::Planar { width }
            }
            _ => return Err(policy_err("cost mode", s)),
        };
        match parts.next() {
            None => Ok(mode),
            Some(_) => Err(policy_err("cost mode", s)),
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostMode::Uniform { max_cost } => write!(f, "uniform:{max_cost}"),
            CostMode::Planar { width } => write!(f, "planar:{width}"),
        }
    }
}

/// How capacities are set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapacityPolicy {
    /// Total capacity `ceil(0.8 n)`, so some center must overload.
    Tight,
    /// Total capacity `n`.
    Balanced,
    /// Total capacity `ceil(1.5 n)`.
    Loose,
    /// The same capacity everywhere.
    Fixed(usize),
}

impl CapacityPolicy {
    /// Capacities for `k` centers serving `n` demands. Totals are spread as
    /// evenly as possible, earlier centers taking the remainder.
    pub fn capacities(self, k: usize, n: usize) -> Vec<usize> {
        let total = match self {
            CapacityPolicy::Tight => (4 * n).div_ceil(5),
            CapacityPolicy::Balanced => n,
            CapacityPolicy::Loose => (3 * n).div_ceil(2),
            CapacityPolicy::Fixed(c) => return vec![c; k],
        };
        (0..k)
            .map(|j| total / k + usize::from(j < total % k))
            .collect()
    }
}

impl FromStr for CapacityPolicy {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tight" => Ok(CapacityPolicy::Tight),
            "balanced" => Ok(CapacityPolicy::Balanced),
            "loose" => Ok(CapacityPolicy::Loose),
            _ => match s.strip_prefix("fixed:") {
                Some(c) => field("capacity policy", s, Some(c)).map(CapacityPolicy::Fixed),
                None => Err(policy_err("capacity policy", s)),
            },
        }
    }
}

impl fmt::Display for CapacityPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacityPolicy::Tight => f.write_str("tight"),
            CapacityPolicy::Balanced => f.write_str("balanced"),
            CapacityPolicy::Loose => f.write_str("loose"),
            CapacityPolicy::Fixed(c) => write!(f, "fixed:{c}"),
        }
    }
}

/// How overload penalties are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyPolicy {
    Constant(i64),
    Linear {
        base: i64,
        step: i64,
    },
    /// A random nondecreasing table per center.
    Table,
    /// A random constant, linear or table schedule per center.
    Mixed,
}

impl FromStr for PenaltyPolicy {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const WHAT: &str = "penalty policy";
        let parts: Vec<&str> = s.split(':').collect();
        let policy = match parts.as_slice() {
            ["constant", v] => PenaltyPolicy::Constant(field(WHAT, s, Some(v))?),
            ["linear", b, st] => PenaltyPolicy::Linear {
                base: field(WHAT, s, Some(b))?,
                step: field(WHAT, s, Some(st))?,
            },
            ["table"] => PenaltyPolicy::Table,
            ["mixed"] => PenaltyPolicy::Mixed,
            _ => return Err(policy_err(WHAT, s)),
        };
        match policy {
            PenaltyPolicy::Constant(v) if v < 1 => Err(policy_err(WHAT, s)),
            PenaltyPolicy::Linear { base, step } if base < 1 || step < 0 => {
                Err(policy_err(WHAT, s))
            }
            p => Ok(p),
        }
    }
}

impl fmt::Display for PenaltyPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyPolicy::Constant(v) => write!(f, "constant:{v}"),
            PenaltyPolicy::Linear { base, step } => write!(f, "linear:{base}:{step}"),
            PenaltyPolicy::Table => f.write_str("table"),
            PenaltyPolicy::Mixed => f.write_str("mixed"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub centers: usize,
    pub demands: usize,
    pub costs: CostMode,
    pub capacity: CapacityPolicy,
    pub penalty: PenaltyPolicy,
    pub mode: Mode,
    pub seed: u64,
}

fn random_table(rng: &mut impl Rng) -> PenaltySpec {
    let len = rng.gen_range(1..=4);
    let mut value = 0;
    let values = (0..len)
        .map(|_| {
            value += rng.gen_range(1..=20);
            value
        })
        .collect();
    PenaltySpec::Table(values)
}

fn draw_penalty(policy: PenaltyPolicy, rng: &mut impl Rng) -> PenaltySpec {
    match policy {
        PenaltyPolicy::Constant(v) => PenaltySpec::Constant(v),
        PenaltyPolicy::Linear { base, step } => PenaltySpec::Linear { base, step },
        PenaltyPolicy::Table => random_table(rng),
        PenaltyPolicy::Mixed => match rng.gen_range(0..3) {
            0 => PenaltySpec::Constant(rng.gen_range(1..=50)),
            1 => PenaltySpec::Linear {
                base: rng.gen_range(1..=30),
                step: rng.gen_range(0..=10),
            },
            _ => random_table(rng),
        },
    }
}

/// Nearest integer to `sqrt(x)`.
fn rounded_sqrt(x: u64) -> u64 {
    let r = x.isqrt();
    // (r + 1/2)^2 = r^2 + r + 1/4
    if x - r * r > r {
        r + 1
    } else {
        r
    }
}

fn cost_rows(config: &GeneratorConfig, rng: &mut impl Rng) -> Vec<Vec<i64>> {
    let (k, n) = (config.centers, config.demands);
    match config.costs {
        CostMode::Uniform { max_cost } => (0..n)
            .map(|_| (0..k).map(|_| rng.gen_range(1..=max_cost)).collect())
            .collect(),
        CostMode::Planar { width } => {
            let mut point = || (rng.gen_range(0..=width), rng.gen_range(0..=width));
            let sites: Vec<(i64, i64)> = (0..k).map(|_| point()).collect();
            let homes: Vec<(i64, i64)> = (0..n).map(|_| point()).collect();
            homes
                .iter()
                .map(|&(x, y)| {
                    sites
                        .iter()
                        .map(|&(sx, sy)| {
                            let squared = ((x - sx).pow(2) + (y - sy).pow(2)) as u64;
                            (rounded_sqrt(squared) as i64).max(1)
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Deterministic in `config` (including the seed).
pub fn generate(config: &GeneratorConfig) -> ProblemInstance {
    assert!(config.centers >= 1, "an instance needs at least one center");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let capacities = config.capacity.capacities(config.centers, config.demands);
    let rows = cost_rows(config, &mut rng);
    match config.mode {
        Mode::HardCapacity => ProblemInstance::with_hard_capacities(&capacities, &rows),
        Mode::OverloadAllowed => {
            let centers: Vec<(usize, PenaltySpec)> = capacities
                .into_iter()
                .map(|c| (c, draw_penalty(config.penalty, &mut rng)))
                .collect();
            ProblemInstance::with_schedules(&centers, &rows)
        }
    }
    .expect("generated instances are valid")
}

/// Random small instance with the given shape bounds, for test sweeps.
/// Capacities are drawn from `capacities`, costs from `[1, max_cost]`, and
/// penalties are mixed.
pub fn random_small(
    rng: &mut impl Rng,
    centers: usize,
    demands: usize,
    capacities: std::ops::RangeInclusive<usize>,
    max_cost: i64,
) -> ProblemInstance {
    let schedules: Vec<(usize, PenaltySpec)> = (0..centers)
        .map(|_| {
            let cap = rng.gen_range(capacities.clone());
            (cap, draw_penalty(PenaltyPolicy::Mixed, rng))
        })
        .collect();
    let rows: Vec<Vec<i64>> = (0..demands)
        .map(|_| (0..centers).map(|_| rng.gen_range(1..=max_cost)).collect())
        .collect();
    ProblemInstance::with_schedules(&schedules, &rows).expect("generated instances are valid")
}

/// A random permutation of `0..n`.
pub fn shuffled(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::CenterPenalty;
    use crate::io::render_instance;

    fn config(costs: CostMode, capacity: CapacityPolicy) -> GeneratorConfig {
        GeneratorConfig {
            centers: 4,
            demands: 50,
            costs,
            capacity,
            penalty: PenaltyPolicy::Mixed,
            mode: Mode::OverloadAllowed,
            seed: 11,
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let c = config(CostMode::Planar { width: 100 }, CapacityPolicy::Balanced);
        assert_eq!(
            render_instance(&generate(&c)),
            render_instance(&generate(&c))
        );
        let other = GeneratorConfig {
            seed: 12,
            ..c.clone()
        };
        assert_ne!(
            render_instance(&generate(&c)),
            render_instance(&generate(&other))
        );
    }

    #[test]
    fn uniform_costs_in_range() {
        let inst = generate(&config(
            CostMode::Uniform { max_cost: 7 },
            CapacityPolicy::Loose,
        ));
        for d in 0..inst.demand_count() {
            assert!(inst.cost.row(d).iter().all(|&c| (1..=7).contains(&c)));
        }
    }

    #[test]
    fn capacity_policies() {
        assert_eq!(
            CapacityPolicy::Tight
                .capacities(4, 50)
                .iter()
                .sum::<usize>(),
            40
        );
        assert_eq!(CapacityPolicy::Tight.capacities(3, 7), vec![2, 2, 2]);
        assert_eq!(CapacityPolicy::Balanced.capacities(3, 7), vec![3, 2, 2]);
        assert_eq!(
            CapacityPolicy::Loose.capacities(2, 3).iter().sum::<usize>(),
            5
        );
        assert_eq!(CapacityPolicy::Fixed(2).capacities(3, 100), vec![2, 2, 2]);
        assert_eq!(CapacityPolicy::Tight.capacities(2, 0), vec![0, 0]);
    }

    #[test]
    fn rounded_square_roots() {
        let cases = [
            (0, 0),
            (1, 1),
            (2, 1),
            (3, 2),
            (6, 2),
            (7, 3),
            (12, 3),
            (13, 4),
            (16, 4),
        ];
        for (x, r) in cases {
            assert_eq!(rounded_sqrt(x), r, "sqrt({x})");
        }
    }

    #[test]
    fn planar_costs_are_distances() {
        let inst = generate(&config(
            CostMode::Planar { width: 10 },
            CapacityPolicy::Tight,
        ));
        for d in 0..inst.demand_count() {
            assert!(inst.cost.row(d).iter().all(|&c| (1..=15).contains(&c)));
        }
    }

    #[test]
    fn hard_mode_generates_infinite_penalties() {
        let mut c = config(CostMode::Uniform { max_cost: 9 }, CapacityPolicy::Tight);
        c.mode = Mode::HardCapacity;
        let inst = generate(&c);
        assert!(inst
            .centers
            .iter()
            .all(|s| s.penalty == CenterPenalty::Infinite));
    }

    #[test]
    fn policy_strings_round_trip() {
        for s in ["uniform:100", "planar:50"] {
            assert_eq!(s.parse::<CostMode>().unwrap().to_string(), s);
        }
        for s in ["tight", "balanced", "loose", "fixed:3"] {
            assert_eq!(s.parse::<CapacityPolicy>().unwrap().to_string(), s);
        }
        for s in ["constant:5", "linear:3:2", "table", "mixed"] {
            assert_eq!(s.parse::<PenaltyPolicy>().unwrap().to_string(), s);
        }
        for bad in ["uniform", "uniform:0", "planar:x", "uniform:5:6"] {
            assert!(bad.parse::<CostMode>().is_err(), "{bad}");
        }
        assert!("fixed:-1".parse::<CapacityPolicy>().is_err());
        assert!("constant:0".parse::<PenaltyPolicy>().is_err());
        assert!("linear:1:-1".parse::<PenaltyPolicy>().is_err());
    }
}
