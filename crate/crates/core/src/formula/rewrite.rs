use std::collections::HashMap;

use serde::Serialize;

use super::{Formula, Literal, Quantifier, Term};

/// Source of one argument position of the original atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgSlot {
    /// The k-th argument of the rewritten atom.
    Var(usize),
    /// A constant fixed in place.
    Const(String),
}

/// Records how a fresh predicate relates to the atom it replaced:
/// `new_pred(x') <=> orig_pred(x)` with `x[i]` read through `slots[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DedupSpec {
    pub new_pred: String,
    pub orig_pred: String,
    pub slots: Vec<ArgSlot>,
}

impl DedupSpec {
    pub fn new_arity(&self) -> usize {
        self.slots
            .iter()
            .filter_map(|s| match s {
                ArgSlot::Var(k) => Some(k + 1),
                ArgSlot::Const(_) => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Replaces every atom that repeats a variable or mentions a constant with a
/// fresh predicate over its distinct variables, in first-occurrence order.
///
/// Fresh names are `<orig>__dedup<k>`, numbered from 1 in the order atoms are
/// met; atoms sharing a predicate and slot pattern share the fresh name.
pub fn rewrite_duplicate_atoms(f: &Formula) -> (Formula, Vec<DedupSpec>) {
    let mut specs: Vec<DedupSpec> = Vec::new();
    let mut seen: HashMap<(String, Vec<ArgSlot>), String> = HashMap::new();
    let out = f.map_literals(&mut |lit| {
        let mut vars: Vec<&str> = Vec::new();
        let mut slots = Vec::with_capacity(lit.args.len());
        for t in &lit.args {
            match t {
                Term::Var(v) => {
                    let k = vars.iter().position(|x| x == v).unwrap_or_else(|| {
                        vars.push(v);
                        vars.len() - 1
                    });
                    slots.push(ArgSlot::Var(k));
                }
                Term::Const(c) => slots.push(ArgSlot::Const(c.clone())),
            }
        }
        if vars.len() == lit.args.len() {
            return lit.clone();
        }
        let key = (lit.pred.clone(), slots);
        let name = match seen.get(&key) {
            Some(name) => name.clone(),
            None => {
                let name = format!("{}__dedup{}", lit.pred, specs.len() + 1);
                specs.push(DedupSpec {
                    new_pred: name.clone(),
                    orig_pred: lit.pred.clone(),
                    slots: key.1.clone(),
                });
                seen.insert(key, name.clone());
                name
            }
        };
        Literal {
            pred: name,
            args: vars.into_iter().map(Term::var).collect(),
            negated: lit.negated,
        }
    });
    (out, specs)
}

/// Splits a monomial (for `∃`) or clause (for `∀`) into the literals that
/// mention `var` and those that do not. The quantifier kind does not affect
/// the split.
pub fn shrink_scope(_q: Quantifier, var: &str, group: &[Literal]) -> (Vec<Literal>, Vec<Literal>) {
    group.iter().cloned().partition(|l| l.mentions(var))
}
