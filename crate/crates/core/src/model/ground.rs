//! Grounded Tarskian evaluation: the reference semantics every compiled
//! program is checked against. Truth values are exact integers.

use std::collections::BTreeMap;

use super::{FiniteModel, ModelError};
use crate::formula::{Formula, Literal, Term};

/// Maps variable names to 0-based entity indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<String, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, var: impl Into<String>, index: usize) -> Self {
        self.0.insert(var.into(), index);
        self
    }

    pub fn get(&self, var: &str) -> Option<usize> {
        self.0.get(var).copied()
    }

    fn set(&mut self, var: &str, index: usize) -> Option<usize> {
        self.0.insert(var.to_string(), index)
    }

    fn restore(&mut self, var: &str, previous: Option<usize>) {
        match previous {
            Some(i) => self.0.insert(var.to_string(), i),
            None => self.0.remove(var),
        };
    }
}

/// Truth value (0 or 1) of `f` in `m` under `a`.
pub fn ground_eval(m: &FiniteModel, f: &Formula, a: &Assignment) -> Result<u8, ModelError> {
    let mut a = a.clone();
    eval(m, f, &mut a)
}

fn eval(m: &FiniteModel, f: &Formula, a: &mut Assignment) -> Result<u8, ModelError> {
    Ok(match f {
        Formula::Lit(l) => {
            let v = atom(m, l, a)?;
            if l.negated {
                1 - v
            } else {
                v
            }
        }
        Formula::Not(inner) => 1 - eval(m, inner, a)?,
        Formula::And(cs) => {
            let mut product = 1;
            for c in cs {
                product *= eval(m, c, a)?;
            }
            product
        }
        Formula::Or(cs) => {
            let mut sum = 0u64;
            for c in cs {
                sum += u64::from(eval(m, c, a)?);
            }
            sum.min(1) as u8
        }
        Formula::Exists(var, body) => exists(m, var, body, a, false)?,
        // ∀x F = ¬∃x ¬F
        Formula::Forall(var, body) => 1 - exists(m, var, body, a, true)?,
    })
}

/// min₁ of the sum over every instantiation of `var`; `negate_body`
/// evaluates ¬body instead.
fn exists(m: &FiniteModel, var: &str, body: &Formula, a: &mut Assignment, negate_body: bool) -> Result<u8, ModelError> {
    let mut sum = 0u64;
    for d in 0..m.size() {
        let prev = a.set(var, d);
        let v = eval(m, body, a);
        a.restore(var, prev);
        let v = v?;
        sum += u64::from(if negate_body { 1 - v } else { v });
    }
    Ok(sum.min(1) as u8)
}

fn atom(m: &FiniteModel, l: &Literal, a: &Assignment) -> Result<u8, ModelError> {
    let tuple = l
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => m.constant_index(c),
            Term::Var(v) => a.get(v).ok_or_else(|| ModelError::Unassigned(v.clone())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(m.holds(&l.pred, &tuple)? as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::model::load_model;

    fn eval_closed(m: &FiniteModel, text: &str) -> u8 {
        ground_eval(m, &parse_formula(text).unwrap(), &Assignment::new()).unwrap()
    }

    #[test]
    fn examples() {
        let m = load_model("r1(e1,e2).").unwrap();
        assert_eq!(eval_closed(&m, "r1(e1,e2)"), 1);
        assert_eq!(eval_closed(&m, "some Y r1(e1,Y)"), 1);
        // X = e2 has no witness.
        assert_eq!(eval_closed(&m, "all X some Y r1(X,Y)"), 0);
    }

    #[test]
    fn open_formula_uses_assignment() {
        let m = load_model("r(a,b).").unwrap();
        let f = parse_formula("r(X,b)").unwrap();
        assert_eq!(ground_eval(&m, &f, &Assignment::new().bind("X", 0)).unwrap(), 1);
        assert_eq!(ground_eval(&m, &f, &Assignment::new().bind("X", 1)).unwrap(), 0);
        assert_eq!(
            ground_eval(&m, &f, &Assignment::new()),
            Err(ModelError::Unassigned("X".into()))
        );
    }

    #[test]
    fn errors() {
        let m = load_model("r(a,b).").unwrap();
        assert_eq!(
            ground_eval(&m, &parse_formula("some X q(X)").unwrap(), &Assignment::new()),
            Err(ModelError::UnknownPredicate("q".into()))
        );
        assert_eq!(
            ground_eval(&m, &parse_formula("r(a,zz)").unwrap(), &Assignment::new()),
            Err(ModelError::UnknownConstant("zz".into()))
        );
    }

    #[test]
    fn shadowing_restores_outer_binding() {
        let m = load_model("p(a). q(b).").unwrap();
        // Inner X is rebound; the outer X = b must be visible again for q.
        let f = parse_formula("(some X p(X)) & q(X)").unwrap();
        assert_eq!(ground_eval(&m, &f, &Assignment::new().bind("X", 1)).unwrap(), 1);
    }

    #[test]
    fn atoms_agree_with_membership() {
        let m = load_model("r(a,b). r(b,b). r(c,a).").unwrap();
        for (i, x) in m.constants().iter().enumerate() {
            for (j, y) in m.constants().iter().enumerate() {
                let f = parse_formula(&format!("r({x},{y})")).unwrap();
                assert_eq!(
                    ground_eval(&m, &f, &Assignment::new()).unwrap() == 1,
                    m.holds("r", &[i, j]).unwrap()
                );
            }
        }
    }
}
