//! First-order formulas without function symbols.
//!
//! Concrete syntax (whitespace-insensitive):
//!
//! ```text
//! formula := quant* matrix
//! quant   := ("all" | "some") VAR
//! matrix  := conj ("|" conj)*
//! conj    := unit ("&" unit)*
//! unit    := "~" unit | "(" formula ")" | atom
//! atom    := PRED "(" term ("," term)* ")"
//! ```
//!
//! `VAR` is `[A-Z][A-Za-z0-9_]*`; predicates and constants are
//! `[a-z][A-Za-z0-9_]*`. A parenthesised unit may itself start with
//! quantifiers, which is how non-prenex formulas are written.

mod normal;
mod parse;
mod rewrite;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use normal::{nnf, to_cnf, to_dnf, NormalForm, NormalFormKind, DEFAULT_GROUP_CAP};
pub use parse::parse_formula;
pub use rewrite::{rewrite_duplicate_atoms, shrink_scope, ArgSlot, DedupSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("predicate `{pred}` used with arity {first} and {second}")]
    Arity {
        pred: String,
        first: usize,
        second: usize,
    },

    #[error("normal form would exceed {cap} groups")]
    TooManyGroups { cap: usize },

    #[error("expected a quantifier-free formula")]
    Quantified,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Const(n) | Term::Var(n) => n,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(n) => Some(n),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    pub pred: String,
    pub args: Vec<Term>,
    pub negated: bool,
}

impl Literal {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Self {
            pred: pred.into(),
            args,
            negated: false,
        }
    }

    /// Positive literal whose arguments are all variables.
    pub fn over_vars<S: AsRef<str>>(pred: impl Into<String>, vars: &[S]) -> Self {
        Self::new(pred, vars.iter().map(|v| Term::var(v.as_ref())).collect())
    }

    pub fn negate(mut self) -> Self {
        self.negated = !self.negated;
        self
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.args.iter().any(|t| t.as_var() == Some(var))
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("~")?;
        }
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    Exists,
    Forall,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Exists => "some",
            Quantifier::Forall => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Lit(Literal),
    Not(Box<Formula>),
    /// At least two children.
    And(Vec<Formula>),
    /// At least two children.
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn lit(l: Literal) -> Self {
        Formula::Lit(l)
    }

    /// Conjunction; a single child is returned unwrapped.
    pub fn and(mut children: Vec<Formula>) -> Self {
        assert!(!children.is_empty(), "empty conjunction");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::And(children)
        }
    }

    /// Disjunction; a single child is returned unwrapped.
    pub fn or(mut children: Vec<Formula>) -> Self {
        assert!(!children.is_empty(), "empty disjunction");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::Or(children)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Self {
        Formula::Forall(var.into(), Box::new(body))
    }

    pub fn quantified(q: Quantifier, var: impl Into<String>, body: Formula) -> Self {
        match q {
            Quantifier::Exists => Self::exists(var, body),
            Quantifier::Forall => Self::forall(var, body),
        }
    }

    fn as_quantifier(&self) -> Option<(Quantifier, &str, &Formula)> {
        match self {
            Formula::Exists(v, b) => Some((Quantifier::Exists, v, b)),
            Formula::Forall(v, b) => Some((Quantifier::Forall, v, b)),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Lit(l) => {
                for v in l.vars() {
                    if !bound.contains(&v) {
                        out.insert(v.to_string());
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(cs) | Formula::Or(cs) => {
                for c in cs {
                    c.collect_free(bound, out);
                }
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                bound.push(v);
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Lit(_) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().all(Formula::is_quantifier_free),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// Splits a formula into its leading quantifier chain and the rest.
    pub fn prefix(&self) -> (Vec<(Quantifier, &str)>, &Formula) {
        let mut chain = Vec::new();
        let mut cur = self;
        while let Some((q, v, body)) = cur.as_quantifier() {
            chain.push((q, v));
            cur = body;
        }
        (chain, cur)
    }

    pub fn is_prenex(&self) -> bool {
        self.prefix().1.is_quantifier_free()
    }

    pub fn literals(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.visit_literals(&mut |l| out.push(l));
        out
    }

    fn visit_literals<'a>(&'a self, f: &mut impl FnMut(&'a Literal)) {
        match self {
            Formula::Lit(l) => f(l),
            Formula::Not(x) | Formula::Exists(_, x) | Formula::Forall(_, x) => x.visit_literals(f),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.visit_literals(f)),
        }
    }

    /// Predicate arities, or an error if a predicate is used inconsistently.
    pub fn arities(&self) -> Result<BTreeMap<String, usize>, FormulaError> {
        let mut out = BTreeMap::new();
        for l in self.literals() {
            let arity = l.args.len();
            if let Some(&first) = out.get(&l.pred) {
                if first != arity {
                    return Err(FormulaError::Arity {
                        pred: l.pred.clone(),
                        first,
                        second: arity,
                    });
                }
            } else {
                out.insert(l.pred.clone(), arity);
            }
        }
        Ok(out)
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.literals()
            .into_iter()
            .flat_map(|l| l.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    /// Rewrites every literal through `f`.
    pub fn map_literals(&self, f: &mut impl FnMut(&Literal) -> Literal) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(f(l)),
            Formula::Not(x) => Formula::not(x.map_literals(f)),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_literals(f)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.map_literals(f)).collect()),
            Formula::Exists(v, b) => Formula::exists(v.clone(), b.map_literals(f)),
            Formula::Forall(v, b) => Formula::forall(v.clone(), b.map_literals(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists(..) | Formula::Forall(..) => 0,
            Formula::Or(_) => 1,
            Formula::And(_) => 2,
            Formula::Lit(_) | Formula::Not(_) => 3,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // Same-precedence children are parenthesised so nesting survives a
        // round trip through the parser, which flattens `a & b & c`.
        if self.precedence() <= parent {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Lit(l) => write!(f, "{l}"),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Lit(l) if l.negated => write!(f, "~{l}"),
                Formula::Not(_) => write!(f, "~{inner}"),
                _ => write!(f, "~({inner})"),
            },
            Formula::And(cs) | Formula::Or(cs) => {
                let (sep, prec) = if matches!(self, Formula::And(_)) {
                    (" & ", 2)
                } else {
                    (" | ", 1)
                };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    c.fmt_child(f, prec)?;
                }
                Ok(())
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let q = if matches!(self, Formula::Exists(..)) {
                    Quantifier::Exists
                } else {
                    Quantifier::Forall
                };
                write!(f, "{q} {v} {body}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(pred: &str, vars: &[&str]) -> Formula {
        Formula::Lit(Literal::over_vars(pred, vars))
    }

    #[test]
    fn free_vars_examples() {
        let f = Formula::exists("Y", a("a", &["X", "Y"]));
        assert_eq!(f.free_vars(), BTreeSet::from(["X".to_string()]));

        let abcd = parse_formula("all X some Y (a(X,Y) & b(X)) | (c(X,Y) & d(Y))").unwrap();
        assert!(abcd.free_vars().is_empty());

        assert_eq!(a("a", &["X", "X"]).free_vars(), BTreeSet::from(["X".to_string()]));
    }

    #[test]
    fn shadowed_binders() {
        let f = Formula::and(vec![
            Formula::exists("X", a("p", &["X"])),
            a("q", &["X"]),
        ]);
        assert_eq!(f.free_vars(), BTreeSet::from(["X".to_string()]));
    }

    #[test]
    fn prefix_and_prenex() {
        let f = parse_formula("all X some Y r(X,Y) | s(Y)").unwrap();
        let (chain, matrix) = f.prefix();
        assert_eq!(chain, vec![(Quantifier::Forall, "X"), (Quantifier::Exists, "Y")]);
        assert!(matrix.is_quantifier_free());
        assert!(f.is_prenex());

        let g = parse_formula("p(a) & (some X q(X))").unwrap();
        assert!(!g.is_prenex());
    }

    #[test]
    fn display_parenthesises_nested_connectives() {
        let f = Formula::And(vec![
            Formula::And(vec![a("p", &["X"]), a("q", &["X"])]),
            Formula::Or(vec![a("r", &["X"]), a("s", &["X"])]),
        ]);
        assert_eq!(f.to_string(), "(p(X) & q(X)) & (r(X) | s(X))");
        assert_eq!(Formula::not(a("p", &["X"])).to_string(), "~(p(X))");
        assert_eq!(Formula::Lit(Literal::over_vars("p", &["X"]).negate()).to_string(), "~p(X)");
    }
}
