//! Negation normal form and DNF/CNF by distribution.
//!
//! Distribution keeps groups duplicate-free and absorbed: a group that is a
//! superset of another group is dropped, since `A ∨ (A ∧ B) ≡ A` and dually.

use std::collections::HashMap;

use serde::Serialize;

use super::{Formula, FormulaError, Literal};

pub const DEFAULT_GROUP_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormalFormKind {
    /// Disjunction of monomials.
    Dnf,
    /// Conjunction of clauses.
    Cnf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub kind: NormalFormKind,
    pub groups: Vec<Vec<Literal>>,
}

impl NormalForm {
    /// Rebuilds the equivalent formula (`Or` of `And`s, or `And` of `Or`s).
    pub fn to_formula(&self) -> Formula {
        type Join = fn(Vec<Formula>) -> Formula;
        let (outer, inner): (Join, Join) = match self.kind {
            NormalFormKind::Dnf => (Formula::or, Formula::and),
            NormalFormKind::Cnf => (Formula::and, Formula::or),
        };
        outer(
            self.groups
                .iter()
                .map(|g| inner(g.iter().cloned().map(Formula::Lit).collect()))
                .collect(),
        )
    }
}

/// Pushes negations down to the literals.
pub fn nnf(f: &Formula) -> Result<Formula, FormulaError> {
    push(f, false)
}

fn push(f: &Formula, negate: bool) -> Result<Formula, FormulaError> {
    Ok(match f {
        Formula::Lit(l) => {
            let mut l = l.clone();
            l.negated ^= negate;
            Formula::Lit(l)
        }
        Formula::Not(inner) => push(inner, !negate)?,
        Formula::And(cs) | Formula::Or(cs) => {
            let children = cs.iter().map(|c| push(c, negate)).collect::<Result<Vec<_>, _>>()?;
            if matches!(f, Formula::And(_)) != negate {
                Formula::And(children)
            } else {
                Formula::Or(children)
            }
        }
        Formula::Exists(..) | Formula::Forall(..) => return Err(FormulaError::Quantified),
    })
}

pub fn to_dnf(matrix: &Formula, cap: usize) -> Result<NormalForm, FormulaError> {
    convert(matrix, NormalFormKind::Dnf, cap)
}

pub fn to_cnf(matrix: &Formula, cap: usize) -> Result<NormalForm, FormulaError> {
    convert(matrix, NormalFormKind::Cnf, cap)
}

/// Literals interned to dense ids; groups are id lists plus a bitset.
#[derive(Default)]
struct Interner {
    ids: HashMap<Literal, usize>,
    lits: Vec<Literal>,
}

impl Interner {
    fn id(&mut self, l: &Literal) -> usize {
        if let Some(&id) = self.ids.get(l) {
            return id;
        }
        let id = self.lits.len();
        self.ids.insert(l.clone(), id);
        self.lits.push(l.clone());
        id
    }
}

#[derive(Clone)]
struct Group {
    members: Vec<usize>,
    bits: Vec<u64>,
}

impl Group {
    fn single(id: usize) -> Self {
        let mut g = Group {
            members: Vec::new(),
            bits: Vec::new(),
        };
        g.push(id);
        g
    }

    fn contains(&self, id: usize) -> bool {
        self.bits.get(id / 64).is_some_and(|w| w >> (id % 64) & 1 == 1)
    }

    fn push(&mut self, id: usize) {
        if self.contains(id) {
            return;
        }
        if self.bits.len() <= id / 64 {
            self.bits.resize(id / 64 + 1, 0);
        }
        self.bits[id / 64] |= 1 << (id % 64);
        self.members.push(id);
    }

    fn is_subset_of(&self, other: &Group) -> bool {
        self.bits
            .iter()
            .enumerate()
            .all(|(i, &w)| w & !other.bits.get(i).copied().unwrap_or(0) == 0)
    }
}

/// Drops duplicates and supersets, keeping first occurrences in order.
fn absorb(groups: Vec<Group>) -> Vec<Group> {
    let mut keep = vec![true; groups.len()];
    for i in 0..groups.len() {
        if !keep[i] {
            continue;
        }
        for j in 0..groups.len() {
            if i == j || !keep[j] {
                continue;
            }
            // j absorbs i when j ⊆ i; among equal groups the earlier one wins.
            let sub = groups[j].members.len() <= groups[i].members.len() && groups[j].is_subset_of(&groups[i]);
            if sub && (groups[j].members.len() < groups[i].members.len() || j < i) {
                keep[i] = false;
                break;
            }
        }
    }
    groups
        .into_iter()
        .zip(keep)
        .filter_map(|(g, k)| k.then_some(g))
        .collect()
}

fn convert(matrix: &Formula, kind: NormalFormKind, cap: usize) -> Result<NormalForm, FormulaError> {
    let f = nnf(matrix)?;
    let mut interner = Interner::default();
    let groups = build(&f, kind, cap, &mut interner)?;
    Ok(NormalForm {
        kind,
        groups: groups
            .into_iter()
            .map(|g| g.members.iter().map(|&i| interner.lits[i].clone()).collect())
            .collect(),
    })
}

fn build(f: &Formula, kind: NormalFormKind, cap: usize, interner: &mut Interner) -> Result<Vec<Group>, FormulaError> {
    // "Union" is the connective that concatenates groups (∨ for DNF, ∧ for
    // CNF); the other one distributes.
    let (union, product) = match (f, kind) {
        (Formula::Lit(l), _) => return Ok(vec![Group::single(interner.id(l))]),
        (Formula::Or(cs), NormalFormKind::Dnf) | (Formula::And(cs), NormalFormKind::Cnf) => (Some(cs), None),
        (Formula::And(cs), NormalFormKind::Dnf) | (Formula::Or(cs), NormalFormKind::Cnf) => (None, Some(cs)),
        _ => unreachable!("input is in negation normal form"),
    };
    if let Some(cs) = union {
        let mut out = Vec::new();
        for c in cs {
            out.extend(build(c, kind, cap, interner)?);
            if out.len() > cap {
                return Err(FormulaError::TooManyGroups { cap });
            }
        }
        return Ok(absorb(out));
    }
    let cs = product.unwrap();
    let mut acc = vec![Group {
        members: Vec::new(),
        bits: Vec::new(),
    }];
    for c in cs {
        let part = build(c, kind, cap, interner)?;
        if acc.len().saturating_mul(part.len()) > cap {
            return Err(FormulaError::TooManyGroups { cap });
        }
        let mut next = Vec::with_capacity(acc.len() * part.len());
        for a in &acc {
            for p in &part {
                let mut g = a.clone();
                for &id in &p.members {
                    g.push(id);
                }
                next.push(g);
            }
        }
        acc = absorb(next);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn groups(nf: &NormalForm) -> Vec<Vec<String>> {
        nf.groups
            .iter()
            .map(|g| g.iter().map(|l| l.to_string()).collect())
            .collect()
    }

    #[test]
    fn distribution_to_cnf() {
        let f = parse_formula("(a(X) & b(X)) | c(X)").unwrap();
        let nf = to_cnf(&f, DEFAULT_GROUP_CAP).unwrap();
        assert_eq!(nf.kind, NormalFormKind::Cnf);
        assert_eq!(groups(&nf), vec![vec!["a(X)", "c(X)"], vec!["b(X)", "c(X)"]]);
    }

    #[test]
    fn already_dnf() {
        let f = parse_formula("a(X) | b(X)").unwrap();
        assert_eq!(groups(&to_dnf(&f, DEFAULT_GROUP_CAP).unwrap()), vec![vec!["a(X)"], vec!["b(X)"]]);
    }

    #[test]
    fn de_morgan() {
        let f = parse_formula("~(a(X) | b(X))").unwrap();
        assert_eq!(groups(&to_dnf(&f, DEFAULT_GROUP_CAP).unwrap()), vec![vec!["~a(X)", "~b(X)"]]);
    }

    #[test]
    fn deduplicates_literals_and_groups() {
        let f = parse_formula("(a(X) & a(X)) | (b(X) & a(X)) | (a(X) & b(X))").unwrap();
        let nf = to_dnf(&f, DEFAULT_GROUP_CAP).unwrap();
        // a ∨ (b ∧ a) ∨ (a ∧ b) absorbs to a.
        assert_eq!(groups(&nf), vec![vec!["a(X)"]]);

        let g = parse_formula("(b(X) & a(X)) | (a(X) & b(X))").unwrap();
        assert_eq!(groups(&to_dnf(&g, DEFAULT_GROUP_CAP).unwrap()), vec![vec!["b(X)", "a(X)"]]);
    }

    #[test]
    fn cap_is_enforced() {
        let f = parse_formula("(a(X) | b(X)) & (c(X) | d(X)) & (e(X) | f(X))").unwrap();
        assert_eq!(to_dnf(&f, 8).unwrap().groups.len(), 8);
        assert_eq!(to_dnf(&f, 7), Err(FormulaError::TooManyGroups { cap: 7 }));
    }

    #[test]
    fn rejects_quantifiers() {
        let f = parse_formula("some X a(X)").unwrap();
        assert_eq!(to_dnf(&f, 10), Err(FormulaError::Quantified));
    }

    #[test]
    fn round_trips_to_formula() {
        let f = parse_formula("(a(X) & b(X)) | c(X)").unwrap();
        let nf = to_cnf(&f, DEFAULT_GROUP_CAP).unwrap();
        assert_eq!(nf.to_formula().to_string(), "(a(X) | c(X)) & (b(X) | c(X))");
    }
}
