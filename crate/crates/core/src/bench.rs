//! Timing harness for whole-instance solves over a grid of sizes.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::generate::{generate, CapacityPolicy, CostMode, GeneratorConfig, PenaltyPolicy};
use crate::instance::{Mode, ProblemInstance};
use crate::solver::{solve_with, SolveOptions};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub centers: Vec<usize>,
    pub demands: Vec<usize>,
    pub seed: u64,
    /// Timed repetitions per cell; the fastest one is kept.
    pub repetitions: usize,
    pub costs: CostMode,
    pub capacity: CapacityPolicy,
    pub penalty: PenaltyPolicy,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            centers: vec![4],
            demands: vec![1000, 2000, 4000],
            seed: 1,
            repetitions: 3,
            costs: CostMode::Uniform { max_cost: 1000 },
            capacity: CapacityPolicy::Tight,
            penalty: PenaltyPolicy::Mixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub centers: usize,
    pub demands: usize,
    pub total: Duration,
    pub per_insert_us: f64,
    /// Time relative to the previous nonempty row with the same center
    /// count.
    pub ratio: Option<f64>,
}

/// Fastest of `repetitions` solves, with the per-operation loop scan off.
pub fn time_solve(instance: &ProblemInstance, repetitions: usize) -> Duration {
    let options = SolveOptions {
        full_check: Some(false),
    };
    (0..repetitions.max(1))
        .map(|_| {
            let start = Instant::now();
            let solution = solve_with(instance, options).expect("generated instance solves");
            let elapsed = start.elapsed();
            std::hint::black_box(solution);
            elapsed
        })
        .min()
        .expect("at least one repetition")
}

pub fn run(config: &BenchConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &k in &config.centers {
        let mut previous: Option<Duration> = None;
        for &n in &config.demands {
            let instance = generate(&GeneratorConfig {
                centers: k,
                demands: n,
                costs: config.costs,
                capacity: config.capacity,
                penalty: config.penalty,
                mode: Mode::OverloadAllowed,
                seed: config.seed,
            });
            let total = time_solve(&instance, config.repetitions);
            let per_insert_us = if n == 0 {
                0.0
            } else {
                total.as_secs_f64() * 1e6 / n as f64
            };
            let ratio = previous
                .filter(|p| !p.is_zero())
                .map(|p| total.as_secs_f64() / p.as_secs_f64());
            previous = (n > 0).then_some(total);
            rows.push(BenchRow {
                centers: k,
                demands: n,
                total,
                per_insert_us,
                ratio,
            });
        }
    }
    rows
}

/// Whitespace-separated table with a header; `-` where no ratio applies.
pub fn render_rows(rows: &[BenchRow]) -> String {
    let mut out = String::from("k n total_ms per_insert_us ratio\n");
    for r in rows {
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.3}"));
        writeln!(
            out,
            "{} {} {:.3} {:.3} {ratio}",
            r.centers,
            r.demands,
            r.total.as_secs_f64() * 1e3,
            r.per_insert_us
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_tiny_cells() {
        let rows = run(&BenchConfig {
            centers: vec![2, 3],
            demands: vec![0, 20, 40],
            repetitions: 1,
            ..BenchConfig::default()
        });
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].per_insert_us, 0.0);
        assert!(rows[0].ratio.is_none());
        assert!(rows[3].ratio.is_none());
        assert!(rows[1].ratio.is_none());
        assert!(rows[2].ratio.is_some());
        let text = render_rows(&rows);
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().nth(1).unwrap().starts_with("2 0 "));
    }
}
