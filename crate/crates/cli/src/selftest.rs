//! Oracle suites bundled into the binary, so a build can be checked without
//! the test harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tensorlog::compiler::compile;
use tensorlog::datalog::{random_adjacency, tc_closed_form, tc_fixpoint, tc_warshall, TcConfig};
use tensorlog::evaluator::{evaluate_with, EvalOptions, Strategy};
use tensorlog::matkit::{compose, horn_transitivity, AdjMatrix};
use tensorlog::model::{ground_eval, Assignment};
use tensorlog::random::{random_closed_formula, random_model, FormulaParams};

use crate::error::CliError;

pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compiled evaluation under every strategy against direct ground evaluation.
fn formulas(rng: &mut ChaCha8Rng, cases: usize) -> Result<SuiteResult, CliError> {
    let params = FormulaParams::default();
    let mut failures = Vec::new();
    for _ in 0..cases {
        let m = random_model(rng, &params);
        let f = random_closed_formula(rng, &params);
        let want = ground_eval(&m, &f, &Assignment::new())?;
        let p = compile(&m, &f)?;
        for strategy in [Strategy::Auto, Strategy::Materialized, Strategy::Fused] {
            let opts = EvalOptions {
                strategy,
                ..EvalOptions::default()
            };
            let got = evaluate_with(&m, &p, opts)?.truth;
            if got != want {
                failures.push(format!("{f} on N={} ({strategy:?}): got {got}, want {want}", m.size()));
            }
        }
    }
    Ok(SuiteResult {
        name: "formulas",
        cases,
        failures,
    })
}

/// Closed form and fixpoint against Warshall, sparse graphs included.
fn closure(rng: &mut ChaCha8Rng, cases: usize) -> Result<SuiteResult, CliError> {
    let cfg = TcConfig::default();
    let mut failures = Vec::new();
    for k in 0..cases {
        let n = rng.gen_range(1..=40);
        let p = [0.02, 0.05, 0.1, 0.3, 0.6][k % 5];
        let r1 = random_adjacency(rng, n, p);
        let w = tc_warshall(&r1)?.closure;
        if tc_closed_form(&r1, &cfg)?.closure != w {
            failures.push(format!("closed form differs on N={n}, p={p}"));
        }
        if tc_fixpoint(&r1, &cfg)?.closure != w {
            failures.push(format!("fixpoint differs on N={n}, p={p}"));
        }
        if horn_transitivity(&w, &w, &w)?.0 != 1 {
            failures.push(format!("closure is not transitive on N={n}, p={p}"));
        }
    }
    Ok(SuiteResult {
        name: "closure",
        cases,
        failures,
    })
}

/// Matrix composition against explicit loops.
fn patterns(rng: &mut ChaCha8Rng, cases: usize) -> Result<SuiteResult, CliError> {
    let mut failures = Vec::new();
    for _ in 0..cases {
        let n = rng.gen_range(1..=12);
        let a = random_adjacency(rng, n, 0.3);
        let b = random_adjacency(rng, n, 0.3);
        let want = AdjMatrix::from_fn(n, |i, k| (0..n).any(|j| a.get(i, j) == 1.0 && b.get(j, k) == 1.0) as u8 as f64);
        if compose(&a, &b)? != want {
            failures.push(format!("composition differs on N={n}"));
        }
    }
    Ok(SuiteResult {
        name: "patterns",
        cases,
        failures,
    })
}

pub fn run(cases: usize, seed: u64) -> Result<Vec<SuiteResult>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        formulas(&mut rng, cases)?,
        closure(&mut rng, cases.div_ceil(4))?,
        patterns(&mut rng, cases.div_ceil(4))?,
    ])
}
