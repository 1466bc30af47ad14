//! Finite models and their encoding as adjacency tensors.
//!
//! Constants are indexed 0-based in lexicographic order of their names, so
//! entity `e_i` of an N-element model is index `i - 1` here.

mod ground;
mod load;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::{ArgSlot, DedupSpec};
use crate::tensor::{DenseTensor, Slot};

pub use ground::{ground_eval, Assignment};
pub use load::{load_model, write_model};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("predicate `{pred}` has arity {expected}, got {got}")]
    Arity {
        pred: String,
        expected: usize,
        got: usize,
    },

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("unknown constant `{0}`")]
    UnknownConstant(String),

    #[error("variable `{0}` is not assigned")]
    Unassigned(String),

    #[error("a model needs at least one constant")]
    Empty,

    #[error("index {index} out of range for a model of {n} constants")]
    IndexOutOfRange { index: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub arity: usize,
    /// 0-based index tuples.
    pub tuples: BTreeSet<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteModel {
    constants: Vec<String>,
    index: HashMap<String, usize>,
    relations: BTreeMap<String, Relation>,
}

impl FiniteModel {
    /// A model over the given constants (sorted and deduplicated) with no
    /// relations yet.
    pub fn new<I, S>(constants: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = constants.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(ModelError::Empty);
        }
        let constants: Vec<String> = set.into_iter().collect();
        let index = constants
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Ok(Self {
            constants,
            index,
            relations: BTreeMap::new(),
        })
    }

    /// A model whose constants are `e1..eN`. Note that `e10` sorts before
    /// `e2`, so index order follows the names, not the numbers.
    pub fn with_size(n: usize) -> Result<Self, ModelError> {
        Self::new((1..=n).map(|i| format!("e{i}")))
    }

    pub fn size(&self) -> usize {
        self.constants.len()
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn constant_index(&self, name: &str) -> Result<usize, ModelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownConstant(name.to_string()))
    }

    pub fn relations(&self) -> &BTreeMap<String, Relation> {
        &self.relations
    }

    pub fn relation(&self, pred: &str) -> Result<&Relation, ModelError> {
        self.relations
            .get(pred)
            .ok_or_else(|| ModelError::UnknownPredicate(pred.to_string()))
    }

    /// Declares a (possibly empty) relation. Re-declaring with the same arity
    /// is a no-op.
    pub fn declare(&mut self, pred: &str, arity: usize) -> Result<(), ModelError> {
        match self.relations.get(pred) {
            Some(r) if r.arity != arity => Err(ModelError::Arity {
                pred: pred.to_string(),
                expected: r.arity,
                got: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(
                    pred.to_string(),
                    Relation {
                        arity,
                        tuples: BTreeSet::new(),
                    },
                );
                Ok(())
            }
        }
    }

    /// Adds a tuple of 0-based indices, declaring the relation if needed.
    pub fn insert(&mut self, pred: &str, tuple: &[usize]) -> Result<(), ModelError> {
        let n = self.size();
        if let Some(&index) = tuple.iter().find(|&&i| i >= n) {
            return Err(ModelError::IndexOutOfRange { index, n });
        }
        self.declare(pred, tuple.len())?;
        self.relations
            .get_mut(pred)
            .expect("declared above")
            .tuples
            .insert(tuple.to_vec());
        Ok(())
    }

    pub fn insert_named(&mut self, pred: &str, args: &[&str]) -> Result<(), ModelError> {
        let tuple = args
            .iter()
            .map(|a| self.constant_index(a))
            .collect::<Result<Vec<_>, _>>()?;
        self.insert(pred, &tuple)
    }

    pub fn holds(&self, pred: &str, tuple: &[usize]) -> Result<bool, ModelError> {
        let r = self.relation(pred)?;
        if r.arity != tuple.len() {
            return Err(ModelError::Arity {
                pred: pred.to_string(),
                expected: r.arity,
                got: tuple.len(),
            });
        }
        Ok(r.tuples.contains(tuple))
    }
}

/// Order-k tensor with a 1 at every tuple of the relation.
pub fn encode_relation(m: &FiniteModel, pred: &str) -> Result<DenseTensor, ModelError> {
    let r = m.relation(pred)?;
    let mut t = DenseTensor::zeros(r.arity, m.size());
    for tuple in &r.tuples {
        t.set(tuple, 1.0);
    }
    Ok(t)
}

/// All-ones tensor minus the relation's encoding.
pub fn encode_negated_relation(m: &FiniteModel, pred: &str) -> Result<DenseTensor, ModelError> {
    Ok(encode_relation(m, pred)?
        .complement()
        .expect("relation encodings are 0/1"))
}

/// Tensor over the rewritten atom's arguments: `R_new(x') = R(x)` where each
/// original position reads its slot (a merged variable or a pinned constant).
pub fn encode_dedup_relation(m: &FiniteModel, spec: &DedupSpec) -> Result<DenseTensor, ModelError> {
    let base = encode_relation(m, &spec.orig_pred)?;
    if base.order() != spec.slots.len() {
        return Err(ModelError::Arity {
            pred: spec.orig_pred.clone(),
            expected: base.order(),
            got: spec.slots.len(),
        });
    }
    let slots = spec
        .slots
        .iter()
        .map(|s| match s {
            ArgSlot::Var(k) => Ok(Slot::Axis(*k)),
            ArgSlot::Const(c) => m.constant_index(c).map(Slot::Fixed),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(base
        .restrict(&slots, spec.new_arity())
        .expect("slots validated against the model"))
}
