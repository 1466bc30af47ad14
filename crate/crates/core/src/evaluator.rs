//! Runs a [`TensorProgram`] against a model's relation tensors.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::compiler::{Polarity, RootExpr, TensorDefinition, TensorProgram};
use crate::model::{encode_dedup_relation, encode_relation, FiniteModel, ModelError};
use crate::tensor::{increment, quantifier_tensor, DenseTensor, Slot, TensorError};

/// Distance from 0 or 1 within which the root scalar is read as a truth value.
pub const TRUTH_TOLERANCE: f64 = 1e-6;
/// Distance from {0, 1} allowed for entries of intermediate tensors.
pub const INTERMEDIATE_TOLERANCE: f64 = 1e-9;
/// Largest chained intermediate (in entries) built before switching to the
/// fused kernel.
pub const DEFAULT_CHAIN_BUDGET: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("reference to unknown tensor `{0}`")]
    Unresolved(String),

    #[error("definition `{0}` has no operands")]
    EmptyOperands(String),

    #[error("`{name}` has a non-Boolean entry {value}")]
    NonBoolean { name: String, value: f64 },

    #[error("root value {0} is not a truth value")]
    NonBooleanRoot(f64),
}

/// How a definition's contraction chain is executed. All strategies agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Fast paths for one and two operands, materialized `Q` otherwise, and
    /// the fused kernel when the chain would exceed the budget.
    #[default]
    Auto,
    /// Always build `Q^{∃,M}` and contract left to right.
    Materialized,
    /// Sum directly into the merged output.
    Fused,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub strategy: Strategy,
    pub keep_intermediates: bool,
    pub chain_budget: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            keep_intermediates: false,
            chain_budget: DEFAULT_CHAIN_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalStats {
    pub contractions: usize,
    pub peak_order: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub truth: u8,
    pub raw: f64,
    /// Definition tensors by name, when requested.
    pub intermediates: Option<BTreeMap<String, DenseTensor>>,
    pub stats: EvalStats,
}

impl EvalResult {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "truth": self.truth,
            "raw": self.raw,
            "stats": self.stats,
        });
        if let Some(map) = &self.intermediates {
            let dump: serde_json::Map<String, Value> = map.iter().map(|(k, t)| (k.clone(), t.to_json())).collect();
            v["intermediates"] = Value::Object(dump);
        }
        v
    }
}

pub type Env = HashMap<String, DenseTensor>;

/// Encodes every base tensor the program reads.
pub fn base_env(m: &FiniteModel, p: &TensorProgram) -> Result<Env, EvalError> {
    let defined: Vec<&str> = p.definitions.iter().map(|d| d.name.as_str()).collect();
    let mut names: Vec<&str> = p
        .definitions
        .iter()
        .flat_map(|d| d.expr.operands.iter().map(|o| o.tensor.as_str()))
        .collect();
    root_refs(&p.root, &mut names);

    let mut env = Env::new();
    for name in names {
        if defined.contains(&name) || env.contains_key(name) {
            continue;
        }
        let t = match p.dedups.iter().find(|s| s.new_pred == name) {
            Some(spec) => encode_dedup_relation(m, spec)?,
            None => encode_relation(m, name)?,
        };
        env.insert(name.to_string(), t);
    }
    Ok(env)
}

fn root_refs<'a>(e: &'a RootExpr, out: &mut Vec<&'a str>) {
    match e {
        RootExpr::Ref { tensor, .. } => out.push(tensor),
        RootExpr::Product { terms } | RootExpr::MinSum { terms } => terms.iter().for_each(|t| root_refs(t, out)),
    }
}

pub fn evaluate(m: &FiniteModel, p: &TensorProgram) -> Result<EvalResult, EvalError> {
    evaluate_with(m, p, EvalOptions::default())
}

pub fn evaluate_with(m: &FiniteModel, p: &TensorProgram, opts: EvalOptions) -> Result<EvalResult, EvalError> {
    let start = Instant::now();
    let mut env = base_env(m, p)?;
    let mut stats = EvalStats::default();
    for d in &p.definitions {
        let t = run_definition(d, &env, opts, &mut stats)?;
        env.insert(d.name.clone(), t);
    }
    let raw = root_value(&p.root, &env)?;
    let truth = if (raw - 1.0).abs() < TRUTH_TOLERANCE {
        1
    } else if raw.abs() < TRUTH_TOLERANCE {
        0
    } else {
        return Err(EvalError::NonBooleanRoot(raw));
    };
    let intermediates = opts.keep_intermediates.then(|| {
        p.definitions
            .iter()
            .map(|d| (d.name.clone(), env[&d.name].clone()))
            .collect()
    });
    stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(EvalResult {
        truth,
        raw,
        intermediates,
        stats,
    })
}

fn root_value(e: &RootExpr, env: &Env) -> Result<f64, EvalError> {
    Ok(match e {
        RootExpr::Ref { tensor, complemented } => {
            let t = env.get(tensor).ok_or_else(|| EvalError::Unresolved(tensor.clone()))?;
            let v = t.as_scalar().ok_or(TensorError::BadLength {
                expected: 1,
                got: t.len(),
            })?;
            if *complemented {
                1.0 - v
            } else {
                v
            }
        }
        RootExpr::Product { terms } => {
            let mut acc = 1.0;
            for t in terms {
                acc *= root_value(t, env)?;
            }
            acc
        }
        RootExpr::MinSum { terms } => {
            let mut acc = 0.0;
            for t in terms {
                acc += root_value(t, env)?;
            }
            acc.min(1.0)
        }
    })
}

/// Evaluates one definition with the default strategy.
pub fn evaluate_definition(defn: &TensorDefinition, env: &Env) -> Result<DenseTensor, EvalError> {
    run_definition(defn, env, EvalOptions::default(), &mut EvalStats::default())
}

pub fn evaluate_definition_with(defn: &TensorDefinition, env: &Env, strategy: Strategy) -> Result<DenseTensor, EvalError> {
    let opts = EvalOptions {
        strategy,
        ..EvalOptions::default()
    };
    run_definition(defn, env, opts, &mut EvalStats::default())
}

fn run_definition(defn: &TensorDefinition, env: &Env, opts: EvalOptions, stats: &mut EvalStats) -> Result<DenseTensor, EvalError> {
    let expr = &defn.expr;
    if expr.operands.is_empty() {
        return Err(EvalError::EmptyOperands(defn.name.clone()));
    }
    let mut tensors: Vec<Cow<DenseTensor>> = Vec::with_capacity(expr.operands.len());
    for op in &expr.operands {
        let t = env.get(&op.tensor).ok_or_else(|| EvalError::Unresolved(op.tensor.clone()))?;
        if op.mode >= t.order() {
            return Err(TensorError::ModeOutOfRange {
                mode: op.mode,
                order: t.order(),
            }
            .into());
        }
        tensors.push(if op.complemented {
            Cow::Owned(t.complement()?)
        } else {
            Cow::Borrowed(t)
        });
    }
    let dim = tensors[0].dim();
    if let Some(t) = tensors.iter().find(|t| t.dim() != dim) {
        return Err(TensorError::DimMismatch {
            left: dim,
            right: t.dim(),
        }
        .into());
    }
    let modes: Vec<usize> = expr.operands.iter().map(|o| o.mode).collect();
    let orders: Vec<usize> = tensors.iter().map(|t| t.order()).collect();
    let remaining: usize = orders.iter().map(|k| k - 1).sum();
    if expr.merge.len() != remaining || expr.merge.iter().any(|&a| a >= defn.args.len()) {
        return Err(TensorError::BadLength {
            expected: remaining,
            got: expr.merge.len(),
        }
        .into());
    }

    let materialize = opts.strategy == Strategy::Materialized;
    let peak = chain_peak_order(&orders, materialize);
    let fused = match opts.strategy {
        Strategy::Fused => true,
        Strategy::Materialized => false,
        Strategy::Auto => dim.checked_pow(peak as u32).is_none_or(|n| n > opts.chain_budget),
    };

    let mut out = if fused {
        stats.contractions += 1;
        stats.peak_order = stats.peak_order.max(defn.args.len());
        fused_contract(&tensors, &modes, &expr.merge, defn.args.len(), dim)
    } else {
        stats.contractions += tensors.len();
        stats.peak_order = stats.peak_order.max(peak);
        let chained = chain(&tensors, &modes, dim, materialize)?;
        let merged = if expr.merge.iter().copied().eq(0..remaining) && defn.args.len() == remaining {
            chained
        } else {
            let slots: Vec<Slot> = expr.merge.iter().map(|&a| Slot::Axis(a)).collect();
            chained.restrict(&slots, defn.args.len())?
        };
        merged
    };
    if expr.min1 {
        out = out.min1();
    }
    if expr.polarity == Polarity::ForallComplemented {
        out = out.complement()?;
    }
    if let Some(&value) = out
        .data()
        .iter()
        .find(|&&v| v.abs() > INTERMEDIATE_TOLERANCE && (v - 1.0).abs() > INTERMEDIATE_TOLERANCE)
    {
        return Err(EvalError::NonBoolean {
            name: defn.name.clone(),
            value,
        });
    }
    Ok(out)
}

fn chain_peak_order(orders: &[usize], materialize: bool) -> usize {
    match (orders, materialize) {
        ([n1], false) => n1 - 1,
        ([n1, n2], false) => (*n1).max(n1 + n2 - 2),
        _ => {
            let m = orders.len();
            let mut peak = m;
            let mut acc = 0;
            for (i, k) in orders.iter().enumerate() {
                acc += k - 1;
                peak = peak.max(m - i - 1 + acc);
            }
            peak
        }
    }
}

/// `Q^{∃,M} ×_{1,j1} T1 ×_{1,j2} … ×_{1,jM} TM`, associated to the left.
fn chain(tensors: &[Cow<DenseTensor>], modes: &[usize], dim: usize, materialize: bool) -> Result<DenseTensor, TensorError> {
    match (tensors, materialize) {
        ([t], false) => DenseTensor::ones(1, dim).contract(0, t, modes[0]),
        // Q^{∃,2} is the identity, so the first product only reorders modes.
        ([t1, t2], false) => t1.move_mode_to_front(modes[0])?.contract(0, t2, modes[1]),
        _ => {
            let mut acc = quantifier_tensor(tensors.len(), dim);
            for (t, &j) in tensors.iter().zip(modes) {
                acc = acc.contract(0, t, j)?;
            }
            Ok(acc)
        }
    }
}

enum Source {
    Bound,
    Free(usize),
}

/// Computes the merged chain directly: for every output index `o`,
/// `Σ_k Π_m T_m[…]` where the quantified mode reads `k` and every other mode
/// reads its free argument from `o`.
fn fused_contract(tensors: &[Cow<DenseTensor>], modes: &[usize], merge: &[usize], out_order: usize, dim: usize) -> DenseTensor {
    let mut sources: Vec<Vec<Source>> = Vec::with_capacity(tensors.len());
    let mut pos = 0;
    for (t, &j) in tensors.iter().zip(modes) {
        let mut s = Vec::with_capacity(t.order());
        for mode in 0..t.order() {
            if mode == j {
                s.push(Source::Bound);
            } else {
                s.push(Source::Free(merge[pos]));
                pos += 1;
            }
        }
        sources.push(s);
    }
    let mut out = DenseTensor::zeros(out_order, dim);
    let mut o = vec![0usize; out_order];
    let mut idx: Vec<Vec<usize>> = tensors.iter().map(|t| vec![0; t.order()]).collect();
    for _ in 0..out.len() {
        for (s, ix) in sources.iter().zip(idx.iter_mut()) {
            for (slot, src) in ix.iter_mut().zip(s) {
                if let Source::Free(a) = src {
                    *slot = o[*a];
                }
            }
        }
        let mut sum = 0.0;
        for k in 0..dim {
            let mut prod = 1.0;
            for ((t, s), ix) in tensors.iter().zip(&sources).zip(idx.iter_mut()) {
                for (slot, src) in ix.iter_mut().zip(s) {
                    if let Source::Bound = src {
                        *slot = k;
                    }
                }
                prod *= t.get(ix);
                if prod == 0.0 {
                    break;
                }
            }
            sum += prod;
        }
        out.set(&o, sum);
        increment(&mut o, dim);
    }
    out
}
