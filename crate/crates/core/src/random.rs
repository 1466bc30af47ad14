//! Seeded generators for random models and closed prenex formulas.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{Formula, Literal, Quantifier, Term};
use crate::model::FiniteModel;

#[derive(Debug, Clone)]
pub struct FormulaParams {
    /// Domain sizes are drawn from `min_size..=max_size`.
    pub min_size: usize,
    pub max_size: usize,
    /// Predicates and their arities; every model interprets all of them.
    pub signature: Vec<(String, usize)>,
    pub max_quantifiers: usize,
    /// The matrix is a connective over at most `max_groups` groups of at most
    /// `max_literals` literals each.
    pub max_groups: usize,
    pub max_literals: usize,
    /// Chance that an argument is a constant (`e1` or `e2`) instead of a variable.
    pub constant_prob: f64,
}

impl Default for FormulaParams {
    fn default() -> Self {
        Self {
            min_size: 2,
            max_size: 5,
            signature: vec![("p".into(), 1), ("q".into(), 2), ("r".into(), 3), ("s".into(), 2)],
            max_quantifiers: 3,
            max_groups: 3,
            max_literals: 3,
            constant_prob: 0.1,
        }
    }
}

const VARS: [&str; 6] = ["X", "Y", "Z", "U", "V", "W"];

/// A model over `e1..eN` where each relation holds each tuple with a
/// per-relation probability drawn uniformly from [0.1, 0.9].
pub fn random_model<R: Rng>(rng: &mut R, params: &FormulaParams) -> FiniteModel {
    let n = rng.gen_range(params.min_size..=params.max_size);
    random_model_of_size(rng, n, &params.signature)
}

pub fn random_model_of_size<R: Rng>(rng: &mut R, n: usize, signature: &[(String, usize)]) -> FiniteModel {
    let mut m = FiniteModel::with_size(n).expect("n >= 1");
    for (pred, arity) in signature {
        m.declare(pred, *arity).expect("fresh predicate");
        let density = rng.gen_range(0.1..0.9);
        let mut tuple = vec![0usize; *arity];
        for _ in 0..n.pow(*arity as u32) {
            if rng.gen_bool(density) {
                m.insert(pred, &tuple).expect("in range");
            }
            crate::tensor::increment(&mut tuple, n);
        }
    }
    m
}

/// A closed prenex formula: up to `max_quantifiers` quantifiers over distinct
/// variables, followed by a random two-level matrix over those variables.
pub fn random_closed_formula<R: Rng>(rng: &mut R, params: &FormulaParams) -> Formula {
    let k = rng.gen_range(0..=params.max_quantifiers.min(VARS.len()));
    let vars = &VARS[..k];
    let matrix = random_matrix(rng, params, vars);
    vars.iter().rev().fold(matrix, |body, v| {
        let q = if rng.gen_bool(0.5) {
            Quantifier::Exists
        } else {
            Quantifier::Forall
        };
        Formula::quantified(q, *v, body)
    })
}

fn random_matrix<R: Rng>(rng: &mut R, params: &FormulaParams, vars: &[&str]) -> Formula {
    let groups = rng.gen_range(1..=params.max_groups);
    let outer_and = rng.gen_bool(0.5);
    let children = (0..groups)
        .map(|_| {
            let lits = rng.gen_range(1..=params.max_literals);
            let inner: Vec<Formula> = (0..lits).map(|_| Formula::Lit(random_literal(rng, params, vars))).collect();
            let g = if outer_and { Formula::or(inner) } else { Formula::and(inner) };
            if rng.gen_bool(0.15) {
                Formula::not(g)
            } else {
                g
            }
        })
        .collect();
    if outer_and {
        Formula::and(children)
    } else {
        Formula::or(children)
    }
}

fn random_literal<R: Rng>(rng: &mut R, params: &FormulaParams, vars: &[&str]) -> Literal {
    let (pred, arity) = params.signature.choose(rng).expect("non-empty signature");
    let args = (0..*arity)
        .map(|_| {
            if vars.is_empty() || rng.gen_bool(params.constant_prob) {
                Term::constant(if rng.gen_bool(0.5) { "e1" } else { "e2" })
            } else {
                Term::var(*vars.choose(rng).expect("non-empty"))
            }
        })
        .collect();
    let mut l = Literal::new(pred.clone(), args);
    l.negated = rng.gen_bool(0.4);
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn formulas_are_closed_and_prenex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = FormulaParams::default();
        for _ in 0..300 {
            let f = random_closed_formula(&mut rng, &params);
            assert!(f.is_closed(), "{f}");
            assert!(f.is_prenex(), "{f}");
            assert!(f.prefix().0.len() <= 3);
            for (pred, arity) in f.arities().unwrap() {
                assert!(params.signature.contains(&(pred, arity)));
            }
        }
    }

    #[test]
    fn models_interpret_the_signature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = FormulaParams::default();
        for _ in 0..50 {
            let m = random_model(&mut rng, &params);
            assert!((2..=5).contains(&m.size()));
            for (pred, arity) in &params.signature {
                assert_eq!(m.relation(pred).unwrap().arity, *arity);
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let params = FormulaParams::default();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (random_model(&mut rng, &params), random_closed_formula(&mut rng, &params))
        };
        assert_eq!(draw(), draw());
    }
}
