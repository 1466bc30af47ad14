//! Transitive closure of a binary relation, i.e. the least model of
//!
//! ```text
//! r2(X,Y) :- r1(X,Y).
//! r2(X,Y) :- r1(X,Z), r2(Z,Y).
//! ```
//!
//! In matrix form `R₂` is the least Boolean solution of `R₂ = min₁(R₁ + R₁R₂)`.
//! Three solvers are provided: iterating that equation, reading the support of
//! the resolvent `X = (I − εR₁)⁻¹ εR₁ = Σ_{k≥1} (εR₁)^k`, and Warshall's
//! algorithm as an independent reference.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::matkit::{AdjMatrix, MatError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TcError {
    #[error(transparent)]
    Matrix(#[from] MatError),

    #[error("linear system is singular at pivot {0}")]
    Singular(usize),

    #[error("ε‖R‖∞ = {0} is not below 1")]
    Spectral(f64),

    #[error("fixpoint did not stabilize within {0} iterations")]
    NotConverged(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// The resolvent solve never turns an exact zero into a nonzero, so any
/// positive threshold separates unreachable pairs; the smallest normal double
/// keeps long shortest paths, whose entries shrink like `ε^L`, from being
/// dropped. A threshold such as `1e-9` misses pairs whose shortest path is
/// longer than about `ln(1e-9) / ln(ε)`.
pub const DEFAULT_TAU: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcConfig {
    /// Resolvent entries above this are read as reachable.
    pub tau: f64,
    /// Defaults to the matrix size.
    pub max_fixpoint_iters: Option<usize>,
}

impl Default for TcConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            max_fixpoint_iters: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TcMethod {
    ClosedForm,
    Fixpoint,
    Warshall,
}

impl TcMethod {
    pub const ALL: [TcMethod; 3] = [TcMethod::ClosedForm, TcMethod::Fixpoint, TcMethod::Warshall];

    /// Short name used on the command line and in reports.
    pub fn short(self) -> &'static str {
        match self {
            TcMethod::ClosedForm => "closed",
            TcMethod::Fixpoint => "fixpoint",
            TcMethod::Warshall => "warshall",
        }
    }
}

impl fmt::Display for TcMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for TcMethod {
    type Err = TcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "closed" | "closed_form" | "closed-form" => Ok(TcMethod::ClosedForm),
            "fixpoint" => Ok(TcMethod::Fixpoint),
            "warshall" => Ok(TcMethod::Warshall),
            other => Err(TcError::InvalidArgument(format!(
                "unknown method `{other}` (expected closed, fixpoint or warshall)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcSolution {
    pub closure: AdjMatrix,
    pub method: TcMethod,
    pub epsilon: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_ms: f64,
}

impl TcSolution {
    pub fn summary_json(&self) -> Value {
        json!({
            "method": self.method,
            "n": self.closure.dim(),
            "edges": self.closure.count_ones(),
            "epsilon": self.epsilon,
            "iterations": self.iterations,
            "wall_ms": self.wall_ms,
        })
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// `(1 + ‖R‖∞)⁻¹` with `‖·‖∞` the largest absolute row sum.
pub fn epsilon(r: &AdjMatrix) -> f64 {
    1.0 / (1.0 + infinity_norm(r))
}

fn infinity_norm(r: &AdjMatrix) -> f64 {
    let n = r.dim();
    r.data()
        .chunks(n)
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `(I − εR)X = εR` and returns `X` with `ε`.
///
/// Gaussian elimination runs on `[I − εR | εR]` without pivoting. The system
/// matrix is a nonsingular M-matrix (unit diagonal, non-positive off-diagonal,
/// strictly diagonally dominant), so every update adds terms of one sign:
/// entries of `X` that are zero in exact arithmetic come out as exact zeros
/// and positive ones keep full relative accuracy. No entry is skipped, so the
/// cost depends only on the size.
pub fn resolvent(r: &AdjMatrix) -> Result<(AdjMatrix, f64), TcError> {
    let n = r.dim();
    let norm = infinity_norm(r);
    let eps = 1.0 / (1.0 + norm);
    if eps * norm >= 1.0 {
        return Err(TcError::Spectral(eps * norm));
    }
    let w = 2 * n;
    let mut aug = vec![0.0f64; n * w];
    for (i, row) in aug.chunks_mut(w).enumerate() {
        for j in 0..n {
            let e = eps * r.get(i, j);
            row[j] = if i == j { 1.0 - e } else { -e };
            row[n + j] = e;
        }
    }

    for k in 0..n {
        let (upper, lower) = aug.split_at_mut((k + 1) * w);
        let pivot_row = &upper[k * w..];
        let pivot = pivot_row[k];
        if !(pivot.is_finite() && pivot > 0.0) {
            return Err(TcError::Singular(k));
        }
        let tail = &pivot_row[k + 1..];
        lower.par_chunks_mut(w).for_each(|row| {
            let l = row[k] / pivot;
            for (x, &p) in row[k + 1..].iter_mut().zip(tail) {
                *x -= l * p;
            }
        });
    }

    for k in (0..n).rev() {
        let (upper, rest) = aug.split_at_mut(k * w);
        let row_k = &mut rest[..w];
        let pivot = row_k[k];
        for x in &mut row_k[n..] {
            *x /= pivot;
        }
        let solved = &row_k[n..];
        upper.par_chunks_mut(w).for_each(|row| {
            let a = row[k];
            for (x, &s) in row[n..].iter_mut().zip(solved) {
                *x -= a * s;
            }
        });
    }

    let data: Vec<f64> = aug.chunks(w).flat_map(|row| row[n..].iter().copied()).collect();
    Ok((AdjMatrix::from_vec(n, data)?, eps))
}

/// Closure as the entries of the resolvent above `cfg.tau`.
pub fn tc_closed_form(r1: &AdjMatrix, cfg: &TcConfig) -> Result<TcSolution, TcError> {
    check_tau(cfg)?;
    r1.check_boolean()?;
    let start = Instant::now();
    let (x, eps) = resolvent(r1)?;
    let closure = AdjMatrix::from_vec(
        r1.dim(),
        x.data().iter().map(|&v| (v > cfg.tau) as u8 as f64).collect(),
    )?;
    Ok(TcSolution {
        closure,
        method: TcMethod::ClosedForm,
        epsilon: Some(eps),
        iterations: None,
        wall_ms: elapsed_ms(start),
    })
}

fn check_tau(cfg: &TcConfig) -> Result<(), TcError> {
    if cfg.tau > 0.0 && cfg.tau.is_finite() {
        Ok(())
    } else {
        Err(TcError::InvalidArgument(format!("tau must be positive, got {}", cfg.tau)))
    }
}

/// `min₁(R₁ + R₁R)`.
pub fn fixpoint_step(r1: &AdjMatrix, r: &AdjMatrix) -> Result<AdjMatrix, TcError> {
    let prod = r1.matmul(r)?;
    let data = prod.data().iter().zip(r1.data()).map(|(p, a)| (p + a).min(1.0)).collect();
    Ok(AdjMatrix::from_vec(r1.dim(), data)?)
}

/// Whether `r2 = min₁(R₁ + R₁R₂)` holds exactly.
pub fn satisfies_tc_equation(r1: &AdjMatrix, r2: &AdjMatrix) -> Result<bool, TcError> {
    Ok(&fixpoint_step(r1, r2)? == r2)
}

/// Iterates `R ← min₁(R₁ + R₁R)` from the zero matrix. The first step just
/// yields `R₁` and is not counted; `iterations` counts the later steps up to
/// and including the one that leaves `R` unchanged.
pub fn tc_fixpoint(r1: &AdjMatrix, cfg: &TcConfig) -> Result<TcSolution, TcError> {
    r1.check_boolean()?;
    let start = Instant::now();
    let max = cfg.max_fixpoint_iters.unwrap_or(r1.dim()).max(1);
    let mut r = r1.clone();
    for iterations in 1..=max {
        let next = fixpoint_step(r1, &r)?;
        if next == r {
            return Ok(TcSolution {
                closure: r,
                method: TcMethod::Fixpoint,
                epsilon: None,
                iterations: Some(iterations),
                wall_ms: elapsed_ms(start),
            });
        }
        r = next;
    }
    Err(TcError::NotConverged(max))
}

/// Warshall's algorithm on bit rows: paths of length at least one.
pub fn tc_warshall(r1: &AdjMatrix) -> Result<TcSolution, TcError> {
    r1.check_boolean()?;
    let start = Instant::now();
    let n = r1.dim();
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    for (i, j) in r1.edges() {
        bits[i * words + j / 64] |= 1 << (j % 64);
    }
    for k in 0..n {
        let row_k: Vec<u64> = bits[k * words..(k + 1) * words].to_vec();
        for i in 0..n {
            if bits[i * words + k / 64] >> (k % 64) & 1 == 1 {
                for (dst, src) in bits[i * words..(i + 1) * words].iter_mut().zip(&row_k) {
                    *dst |= src;
                }
            }
        }
    }
    let closure = AdjMatrix::from_fn(n, |i, j| (bits[i * words + j / 64] >> (j % 64) & 1) as f64);
    Ok(TcSolution {
        closure,
        method: TcMethod::Warshall,
        epsilon: None,
        iterations: None,
        wall_ms: elapsed_ms(start),
    })
}

pub fn tc(method: TcMethod, r1: &AdjMatrix, cfg: &TcConfig) -> Result<TcSolution, TcError> {
    match method {
        TcMethod::ClosedForm => tc_closed_form(r1, cfg),
        TcMethod::Fixpoint => tc_fixpoint(r1, cfg),
        TcMethod::Warshall => tc_warshall(r1),
    }
}

/// Each entry, the diagonal included, is 1 with probability `p`.
pub fn random_adjacency<R: Rng>(rng: &mut R, n: usize, p: f64) -> AdjMatrix {
    AdjMatrix::from_fn(n, |_, _| rng.gen_bool(p) as u8 as f64)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n: usize,
    pub p_es: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub methods: Vec<TcMethod>,
    pub tc: TcConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub p_e: f64,
    pub method: String,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchAgreement {
    pub p_e: f64,
    /// Every method produced the same closure on every instance.
    pub all_agree: bool,
    /// Closure sizes per instance, from the first method.
    pub closure_edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub runs: usize,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    pub agreement: Vec<BenchAgreement>,
}

impl BenchReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Times each method on `runs` random instances per edge probability.
/// Instance `r` of probability `i` is drawn from stream `i·runs + r` of a
/// ChaCha8 generator seeded with `seed`, so reports depend only on the
/// configuration. Generation is parallel; solves run one at a time.
pub fn bench_tc(cfg: &BenchConfig) -> Result<BenchReport, TcError> {
    if cfg.n == 0 {
        return Err(TcError::InvalidArgument("n must be at least 1".into()));
    }
    if cfg.runs == 0 {
        return Err(TcError::InvalidArgument("runs must be at least 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(TcError::InvalidArgument("no methods selected".into()));
    }
    if let Some(p) = cfg.p_es.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(TcError::InvalidArgument(format!("edge probability {p} is outside [0, 1]")));
    }
    check_tau(&cfg.tc)?;

    let mut rows = Vec::new();
    let mut agreement = Vec::new();
    for (pi, &p) in cfg.p_es.iter().enumerate() {
        let instances: Vec<AdjMatrix> = (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream((pi * cfg.runs + r) as u64);
                random_adjacency(&mut rng, cfg.n, p)
            })
            .collect();
        let mut closures: Vec<Vec<AdjMatrix>> = Vec::new();
        for &method in &cfg.methods {
            let mut times = Vec::with_capacity(cfg.runs);
            let mut out = Vec::with_capacity(cfg.runs);
            for r1 in &instances {
                let sol = tc(method, r1, &cfg.tc)?;
                times.push(sol.wall_ms);
                out.push(sol.closure);
            }
            let (mean_ms, std_ms) = mean_std(&times);
            rows.push(BenchRow {
                n: cfg.n,
                p_e: p,
                method: method.short().to_string(),
                mean_ms,
                std_ms,
                runs: cfg.runs,
                seed: cfg.seed,
            });
            closures.push(out);
        }
        agreement.push(BenchAgreement {
            p_e: p,
            all_agree: closures.iter().all(|c| c == &closures[0]),
            closure_edges: closures[0].iter().map(AdjMatrix::count_ones).collect(),
        });
    }
    Ok(BenchReport {
        n: cfg.n,
        runs: cfg.runs,
        seed: cfg.seed,
        rows,
        agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> TcConfig {
        TcConfig::default()
    }

    fn all_methods(r1: &AdjMatrix) -> Vec<TcSolution> {
        TcMethod::ALL.iter().map(|&m| tc(m, r1, &cfg()).unwrap()).collect()
    }

    /// Reachability by depth-first search from every node.
    fn dfs_closure(r: &AdjMatrix) -> AdjMatrix {
        let n = r.dim();
        let mut out = AdjMatrix::zeros(n);
        for s in 0..n {
            let mut stack: Vec<usize> = (0..n).filter(|&j| r.get(s, j) == 1.0).collect();
            while let Some(v) = stack.pop() {
                if out.get(s, v) == 1.0 {
                    continue;
                }
                out.set(s, v, 1.0);
                stack.extend((0..n).filter(|&j| r.get(v, j) == 1.0));
            }
        }
        out
    }

    #[test]
    fn single_edge() {
        let r1 = AdjMatrix::from_edges(2, &[(0, 1)]);
        for s in all_methods(&r1) {
            assert_eq!(s.closure, r1, "{}", s.method);
        }
    }

    #[test]
    fn two_cycle_is_full() {
        let r1 = AdjMatrix::from_edges(2, &[(0, 1), (1, 0)]);
        for s in all_methods(&r1) {
            assert_eq!(s.closure, AdjMatrix::from_fn(2, |_, _| 1.0));
        }
    }

    #[test]
    fn chain_fixpoint_iterations() {
        let r1 = AdjMatrix::from_edges(3, &[(0, 1), (1, 2)]);
        let s = tc_fixpoint(&r1, &cfg()).unwrap();
        assert_eq!(s.closure, AdjMatrix::from_edges(3, &[(0, 1), (0, 2), (1, 2)]));
        assert_eq!(s.iterations, Some(2));

        let empty = tc_fixpoint(&AdjMatrix::zeros(4), &cfg()).unwrap();
        assert_eq!(empty.closure, AdjMatrix::zeros(4));
        assert_eq!(empty.iterations, Some(1));

        let full = AdjMatrix::from_fn(3, |_, _| 1.0);
        assert_eq!(tc_fixpoint(&full, &cfg()).unwrap().closure, full);
    }

    #[test]
    fn warshall_examples() {
        let cycle = AdjMatrix::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(tc_warshall(&cycle).unwrap().closure.count_ones(), 9);
        let loop1 = AdjMatrix::from_edges(3, &[(0, 0)]);
        assert_eq!(tc_warshall(&loop1).unwrap().closure, loop1);
        // Wider than one 64-bit word.
        let n = 130;
        let chain: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let c = tc_warshall(&AdjMatrix::from_edges(n, &chain)).unwrap().closure;
        assert_eq!(c.count_ones(), n * (n - 1) / 2);
    }

    #[test]
    fn closed_form_reports_epsilon() {
        let r1 = AdjMatrix::from_edges(3, &[(0, 1), (0, 2), (1, 2)]);
        let s = tc_closed_form(&r1, &cfg()).unwrap();
        assert_eq!(s.epsilon, Some(1.0 / 3.0));
        assert_eq!(s.closure, r1);
    }

    #[test]
    fn resolvent_is_the_neumann_series() {
        // Nilpotent chain: X = εR + (εR)², exactly.
        let r1 = AdjMatrix::from_edges(3, &[(0, 1), (1, 2)]);
        let (x, eps) = resolvent(&r1).unwrap();
        assert_eq!(eps, 0.5);
        let want = [0.0, 0.5, 0.25, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0];
        for (a, b) in x.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn input_validation() {
        let half = AdjMatrix::from_vec(1, vec![0.5]).unwrap();
        for m in TcMethod::ALL {
            assert!(matches!(tc(m, &half, &cfg()), Err(TcError::Matrix(MatError::NotBoolean { .. }))));
        }
        let bad = TcConfig {
            tau: 0.0,
            ..cfg()
        };
        assert!(matches!(tc_closed_form(&AdjMatrix::zeros(2), &bad), Err(TcError::InvalidArgument(_))));
        let tight = TcConfig {
            max_fixpoint_iters: Some(1),
            ..cfg()
        };
        let chain = AdjMatrix::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(tc_fixpoint(&chain, &tight), Err(TcError::NotConverged(1)));
    }

    #[test]
    fn method_names() {
        assert_eq!("closed".parse::<TcMethod>().unwrap(), TcMethod::ClosedForm);
        assert_eq!("closed_form".parse::<TcMethod>().unwrap(), TcMethod::ClosedForm);
        assert_eq!("warshall".parse::<TcMethod>().unwrap(), TcMethod::Warshall);
        assert!("dijkstra".parse::<TcMethod>().is_err());
        assert_eq!(TcMethod::Fixpoint.to_string(), "fixpoint");
    }

    #[test]
    fn one_by_one() {
        for v in [0.0, 1.0] {
            let r1 = AdjMatrix::from_vec(1, vec![v]).unwrap();
            for s in all_methods(&r1) {
                assert_eq!(s.closure, r1);
            }
        }
    }

    #[test]
    fn bench_is_deterministic_and_validated() {
        let cfg = BenchConfig {
            n: 10,
            p_es: vec![0.5],
            runs: 3,
            seed: 9,
            methods: TcMethod::ALL.to_vec(),
            tc: TcConfig::default(),
        };
        let a = bench_tc(&cfg).unwrap();
        let b = bench_tc(&cfg).unwrap();
        assert_eq!(a.rows.len(), 3);
        assert!(a.agreement.iter().all(|x| x.all_agree));
        assert_eq!(a.agreement, b.agreement);
        let csv = a.to_csv().unwrap();
        assert!(csv.starts_with("n,p_e,method,mean_ms,std_ms,runs,seed\n"));
        assert_eq!(csv.lines().count(), 4);

        for bad in [
            BenchConfig { runs: 0, ..cfg.clone() },
            BenchConfig { n: 0, ..cfg.clone() },
            BenchConfig {
                p_es: vec![1.5],
                ..cfg.clone()
            },
        ] {
            assert!(matches!(bench_tc(&bad), Err(TcError::InvalidArgument(_))));
        }
    }

    #[test]
    fn sample_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn methods_agree_with_dfs(n in 1usize..12, p in 0.0f64..0.6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r1 = random_adjacency(&mut rng, n, p);
            let want = dfs_closure(&r1);
            for s in all_methods(&r1) {
                prop_assert_eq!(&s.closure, &want);
            }
        }

        #[test]
        fn closure_is_transitive_and_contains_input(n in 1usize..10, p in 0.0f64..0.5, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r1 = random_adjacency(&mut rng, n, p);
            let c = tc_fixpoint(&r1, &TcConfig::default()).unwrap().closure;
            prop_assert!(r1.le(&c));
            prop_assert!(c.matmul(&c).unwrap().min1().le(&c));
            prop_assert!(satisfies_tc_equation(&r1, &c).unwrap());
        }
    }
}
