//! Compiles a closed prenex formula into a tensor program.
//!
//! Quantifiers are eliminated innermost first. For `∃y` the matrix is put in
//! DNF and every monomial `∃y (L1 ∧ … ∧ LM) ∧ D'` gets a fresh relation
//!
//! ```text
//! R_new = min₁(Q^{∃,M} ×_{1,j1} R°1 ×_{1,j2} … ×_{1,jM} R°M)
//! ```
//!
//! where `j_m` is the position of `y` in `L_m` and `R°m` encodes `L_m` (the
//! complemented tensor for a negative literal). For `∀y` the matrix is put in
//! CNF and each clause `∀y (L1 ∨ … ∨ LM) ∨ C'` gets
//! `R_new = 1 − min₁(Q^{∃,M} ×… )` over tensors encoding `¬L_m`. When the same
//! free variable appears in several operands the contracted tensor is
//! restricted to its generalized diagonal, so each definition depends on each
//! free variable once. Once every quantifier is gone the remaining
//! propositional formula becomes the root: products for `∧`, `min₁` of sums
//! for `∨`.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::formula::{
    nnf, rewrite_duplicate_atoms, shrink_scope, to_cnf, to_dnf, DedupSpec, Formula, FormulaError, Literal,
    NormalForm, Quantifier, Term, DEFAULT_GROUP_CAP,
};
use crate::model::{FiniteModel, ModelError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("formula is not in prenex form")]
    NotPrenex,

    #[error("formula has free variables: {0:?}")]
    NotClosed(Vec<String>),

    #[error(transparent)]
    Formula(#[from] FormulaError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("`{var}` must occur exactly once in `{literal}`")]
    VariableCondition { var: String, literal: String },

    #[error("a quantified group needs at least one literal")]
    EmptyGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// `min₁(Q ×…)`
    Exists,
    /// `1 − min₁(Q ×…)` over complemented operands.
    ForallComplemented,
}

/// One factor of a quantifier contraction: `×_{1,mode+1} tensor`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Operand {
    pub tensor: String,
    /// 0-based position of the quantified variable in the operand.
    pub mode: usize,
    pub complemented: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuantContraction {
    pub quantifier_arity: usize,
    pub operands: Vec<Operand>,
    pub polarity: Polarity,
    pub min1: bool,
    /// For each mode of the chained result (the operands' remaining modes in
    /// order), the index of the free argument it collapses onto.
    pub merge: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TensorDefinition {
    pub name: String,
    pub args: Vec<String>,
    pub expr: QuantContraction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RootExpr {
    Ref { tensor: String, complemented: bool },
    Product { terms: Vec<RootExpr> },
    MinSum { terms: Vec<RootExpr> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TensorProgram {
    /// Base relations introduced by atom rewriting.
    pub dedups: Vec<DedupSpec>,
    /// In evaluation order; each refers only to base tensors and earlier
    /// definitions.
    pub definitions: Vec<TensorDefinition>,
    pub root: RootExpr,
}

impl TensorProgram {
    pub fn definition(&self, name: &str) -> Option<&TensorDefinition> {
        self.definitions.iter().find(|d| d.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("program serializes")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompileOptions {
    /// Upper bound on DNF/CNF groups at any step.
    pub group_cap: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            group_cap: DEFAULT_GROUP_CAP,
        }
    }
}

/// Free arguments of a quantified group and how the contracted modes map onto them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeArgLayout {
    pub args: Vec<String>,
    pub merge: Vec<usize>,
}

/// Concatenates each literal's arguments minus `var`, keeping one copy of
/// every free variable (first occurrence order).
pub fn free_arg_layout(inner: &[Literal], var: &str) -> FreeArgLayout {
    let mut args: Vec<String> = Vec::new();
    let mut merge = Vec::new();
    for l in inner {
        for v in l.vars().filter(|&v| v != var) {
            let k = args.iter().position(|a| a == v).unwrap_or_else(|| {
                args.push(v.to_string());
                args.len() - 1
            });
            merge.push(k);
        }
    }
    FreeArgLayout { args, merge }
}

type MemoKey = (Polarity, String, Vec<Literal>);

struct Compiler<'m> {
    model: &'m FiniteModel,
    options: CompileOptions,
    reserved: BTreeSet<String>,
    counter: usize,
    definitions: Vec<TensorDefinition>,
    memo: HashMap<MemoKey, usize>,
}

impl<'m> Compiler<'m> {
    fn new(model: &'m FiniteModel, options: CompileOptions, reserved: BTreeSet<String>) -> Self {
        Self {
            model,
            options,
            reserved,
            counter: 0,
            definitions: Vec::new(),
            memo: HashMap::new(),
        }
    }

    fn fresh_name(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("r_new_{}", self.counter);
            if !self.reserved.contains(&name) {
                return name;
            }
        }
    }

    /// Emits (or reuses) the definition for `Q var (inner)` and returns the
    /// literal that replaces the group.
    fn define(&mut self, q: Quantifier, var: &str, inner: &[Literal]) -> Result<Literal, CompileError> {
        if inner.is_empty() {
            return Err(CompileError::EmptyGroup);
        }
        let polarity = match q {
            Quantifier::Exists => Polarity::Exists,
            Quantifier::Forall => Polarity::ForallComplemented,
        };
        let key = (polarity, var.to_string(), inner.to_vec());
        if let Some(&i) = self.memo.get(&key) {
            let d = &self.definitions[i];
            return Ok(Literal::over_vars(d.name.clone(), &d.args));
        }

        let mut operands = Vec::with_capacity(inner.len());
        for l in inner {
            let positions: Vec<usize> = l
                .args
                .iter()
                .enumerate()
                .filter(|(_, t)| t.as_var() == Some(var))
                .map(|(i, _)| i)
                .collect();
            let all_vars = l.args.iter().all(|t| matches!(t, Term::Var(_)));
            if positions.len() != 1 || !all_vars {
                return Err(CompileError::VariableCondition {
                    var: var.to_string(),
                    literal: l.to_string(),
                });
            }
            operands.push(Operand {
                tensor: l.pred.clone(),
                mode: positions[0],
                // ∃ uses the literal's own relation, ∀ the relation of its negation.
                complemented: l.negated == (q == Quantifier::Exists),
            });
        }
        let layout = free_arg_layout(inner, var);
        let name = self.fresh_name();
        self.definitions.push(TensorDefinition {
            name: name.clone(),
            args: layout.args.clone(),
            expr: QuantContraction {
                quantifier_arity: operands.len(),
                operands,
                polarity,
                min1: true,
                merge: layout.merge,
            },
        });
        self.memo.insert(key, self.definitions.len() - 1);
        Ok(Literal::over_vars(name, &layout.args))
    }

    /// One pass of the elimination loop for `q var`.
    fn eliminate(&mut self, q: Quantifier, var: &str, matrix: &Formula) -> Result<Formula, CompileError> {
        let cap = self.options.group_cap;
        let nf = match q {
            Quantifier::Exists => to_dnf(matrix, cap)?,
            Quantifier::Forall => to_cnf(matrix, cap)?,
        };
        let mut groups = Vec::with_capacity(nf.groups.len());
        for group in &nf.groups {
            let (inner, outer) = shrink_scope(q, var, group);
            if inner.is_empty() {
                // `var` does not occur: the quantifier is vacuous for this group.
                groups.push(outer);
                continue;
            }
            let mut replaced = vec![self.define(q, var, &inner)?];
            replaced.extend(outer);
            groups.push(replaced);
        }
        Ok(NormalForm { kind: nf.kind, groups }.to_formula())
    }

    fn check_signature(&self, f: &Formula) -> Result<(), CompileError> {
        for (pred, arity) in f.arities()? {
            let rel = self.model.relation(&pred)?;
            if rel.arity != arity {
                return Err(ModelError::Arity {
                    pred,
                    expected: rel.arity,
                    got: arity,
                }
                .into());
            }
        }
        for c in f.constants() {
            self.model.constant_index(&c)?;
        }
        Ok(())
    }
}

fn root_expr(f: &Formula) -> RootExpr {
    match f {
        Formula::Lit(l) => RootExpr::Ref {
            tensor: l.pred.clone(),
            complemented: l.negated,
        },
        Formula::And(cs) => RootExpr::Product {
            terms: cs.iter().map(root_expr).collect(),
        },
        Formula::Or(cs) => RootExpr::MinSum {
            terms: cs.iter().map(root_expr).collect(),
        },
        _ => unreachable!("root is built from a quantifier-free NNF formula"),
    }
}

/// Compiles with default options.
pub fn compile(m: &FiniteModel, f: &Formula) -> Result<TensorProgram, CompileError> {
    compile_with(m, f, CompileOptions::default())
}

pub fn compile_with(m: &FiniteModel, f: &Formula, options: CompileOptions) -> Result<TensorProgram, CompileError> {
    if !f.is_prenex() {
        return Err(CompileError::NotPrenex);
    }
    let free = f.free_vars();
    if !free.is_empty() {
        return Err(CompileError::NotClosed(free.into_iter().collect()));
    }
    let reserved: BTreeSet<String> = f.arities()?.into_keys().collect();
    let mut c = Compiler::new(m, options, reserved);
    c.check_signature(f)?;

    let (rewritten, dedups) = rewrite_duplicate_atoms(f);
    for spec in &dedups {
        // Pinned constants were validated by check_signature; this catches
        // nothing new but keeps the base tensors buildable.
        crate::model::encode_dedup_relation(m, spec)?;
    }
    let (prefix, matrix) = rewritten.prefix();
    let mut matrix = matrix.clone();
    for &(q, var) in prefix.iter().rev() {
        matrix = c.eliminate(q, var, &matrix)?;
    }
    let root = root_expr(&nnf(&matrix)?);
    Ok(TensorProgram {
        dedups,
        definitions: c.definitions,
        root,
    })
}

/// The definition for `∃var (inner)`, named `r_new_1`.
pub fn compile_exists_group(var: &str, inner: &[Literal], model: &FiniteModel) -> Result<TensorDefinition, CompileError> {
    compile_group(Quantifier::Exists, var, inner, model)
}

/// The definition for `∀var (inner)`, named `r_new_1`.
pub fn compile_forall_group(var: &str, inner: &[Literal], model: &FiniteModel) -> Result<TensorDefinition, CompileError> {
    compile_group(Quantifier::Forall, var, inner, model)
}

fn compile_group(q: Quantifier, var: &str, inner: &[Literal], model: &FiniteModel) -> Result<TensorDefinition, CompileError> {
    let mut c = Compiler::new(model, CompileOptions::default(), BTreeSet::new());
    for l in inner {
        c.check_signature(&Formula::Lit(l.clone()))?;
    }
    c.define(q, var, inner)?;
    Ok(c.definitions.pop().expect("one definition emitted"))
}
