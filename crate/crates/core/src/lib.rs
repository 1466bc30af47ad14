//! First-order formulas over finite models, evaluated as tensor programs,
//! plus transitive closure by linear algebra, fixpoint iteration and Warshall.
//!
//! ```
//! use tensorlog::{compiler::compile, evaluator::evaluate, formula::parse_formula, model::load_model};
//!
//! let m = load_model("r1(e1,e2).").unwrap();
//! let f = parse_formula("all X some Y r1(X,Y)").unwrap();
//! assert_eq!(evaluate(&m, &compile(&m, &f).unwrap()).unwrap().truth, 0);
//! ```

pub mod compiler;
pub mod datalog;
pub mod evaluator;
pub mod formula;
pub mod matkit;
pub mod model;
pub mod random;
pub mod tensor;
