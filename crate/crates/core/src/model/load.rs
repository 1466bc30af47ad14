use std::collections::BTreeSet;

use super::{FiniteModel, ModelError};

enum Statement {
    Const(String),
    Pred(String, usize),
    Fact(String, Vec<String>),
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_statement(text: &str, line: usize) -> Result<Statement, ModelError> {
    let err = |message: String| ModelError::Parse { line, message };
    if let Some(rest) = text.strip_prefix("#const") {
        let name = rest.trim();
        if !is_name(name) {
            return Err(err(format!("bad constant name `{name}`")));
        }
        return Ok(Statement::Const(name.to_string()));
    }
    if let Some(rest) = text.strip_prefix("#pred") {
        let (name, arity) = rest
            .trim()
            .split_once('/')
            .ok_or_else(|| err("expected `#pred name/arity.`".into()))?;
        let name = name.trim();
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| err(format!("bad arity `{}`", arity.trim())))?;
        if !is_name(name) || arity == 0 {
            return Err(err(format!("bad predicate declaration `{}`", text.trim())));
        }
        return Ok(Statement::Pred(name.to_string(), arity));
    }
    let (pred, rest) = text
        .split_once('(')
        .ok_or_else(|| err(format!("expected `pred(args).`, found `{text}`")))?;
    let pred = pred.trim();
    let args = rest
        .trim_end()
        .strip_suffix(')')
        .ok_or_else(|| err(format!("missing `)` in `{text}`")))?;
    if !is_name(pred) {
        return Err(err(format!("bad predicate name `{pred}`")));
    }
    let args: Vec<String> = args.split(',').map(|a| a.trim().to_string()).collect();
    if let Some(bad) = args.iter().find(|a| !is_name(a)) {
        return Err(err(format!("bad constant `{bad}`")));
    }
    Ok(Statement::Fact(pred.to_string(), args))
}

/// Reads a fact file.
///
/// Each statement ends with `.`: `pred(c1,...,ck).` adds a tuple,
/// `#const name.` declares a constant and `#pred name/k.` declares a
/// possibly empty k-ary relation. `%` starts a comment that runs to the end
/// of the line.
pub fn load_model(text: &str) -> Result<FiniteModel, ModelError> {
    let mut statements = Vec::new();
    let mut pending = String::new();
    let mut start_line = 1;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("");
        for (k, piece) in line.split('.').enumerate() {
            if k > 0 {
                let stmt = pending.trim();
                if stmt.is_empty() {
                    return Err(ModelError::Parse {
                        line: i + 1,
                        message: "empty statement".into(),
                    });
                }
                statements.push((parse_statement(stmt, start_line)?, start_line));
                pending.clear();
            }
            if pending.trim().is_empty() {
                start_line = i + 1;
            }
            pending.push_str(piece);
            pending.push(' ');
        }
    }
    if !pending.trim().is_empty() {
        return Err(ModelError::Parse {
            line: start_line,
            message: format!("statement `{}` is missing its final `.`", pending.trim()),
        });
    }

    let mut constants = BTreeSet::new();
    for (s, _) in &statements {
        match s {
            Statement::Const(c) => {
                constants.insert(c.clone());
            }
            Statement::Fact(_, args) => constants.extend(args.iter().cloned()),
            Statement::Pred(..) => {}
        }
    }
    let mut model = FiniteModel::new(constants)?;
    for (s, _) in &statements {
        match s {
            Statement::Const(_) => {}
            Statement::Pred(p, k) => model.declare(p, *k)?,
            Statement::Fact(p, args) => {
                let args: Vec<&str> = args.iter().map(String::as_str).collect();
                model.insert_named(p, &args)?;
            }
        }
    }
    Ok(model)
}

/// Writes `m` as a fact file that [`load_model`] reads back unchanged:
/// every constant and relation is declared, then one fact per tuple.
pub fn write_model(m: &FiniteModel) -> String {
    let mut out = String::new();
    for c in m.constants() {
        out.push_str(&format!("#const {c}.\n"));
    }
    for (pred, rel) in m.relations() {
        out.push_str(&format!("#pred {pred}/{}.\n", rel.arity));
        for t in &rel.tuples {
            let args: Vec<&str> = t.iter().map(|&i| m.constants()[i].as_str()).collect();
            out.push_str(&format!("{pred}({}).\n", args.join(",")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_models_load_back() {
        let m = load_model("#const z. #pred e/1. r(a,b). r(b,b). s(c).").unwrap();
        assert_eq!(load_model(&write_model(&m)).unwrap(), m);
    }

    #[test]
    fn single_fact() {
        let m = load_model("r1(a,b).").unwrap();
        assert_eq!(m.size(), 2);
        assert_eq!(m.constants(), &["a", "b"]);
        assert_eq!(m.relation("r1").unwrap().tuples.iter().collect::<Vec<_>>(), vec![&vec![0, 1]]);
    }

    #[test]
    fn declared_constant() {
        let m = load_model("#const c.\nr(a,a).").unwrap();
        assert_eq!(m.constants(), &["a", "c"]);
        assert!(m.holds("r", &[0, 0]).unwrap());
        assert_eq!(m.relation("r").unwrap().tuples.len(), 1);
    }

    #[test]
    fn arity_error() {
        assert!(matches!(
            load_model("r(a,b).\nr(a)."),
            Err(ModelError::Arity { expected: 2, got: 1, .. })
        ));
    }

    #[test]
    fn comments_whitespace_and_declarations() {
        let text = "% a comment\n  edge( x , y ).  edge(y,z). % trailing\n#pred lonely/2.\n";
        let m = load_model(text).unwrap();
        assert_eq!(m.constants(), &["x", "y", "z"]);
        assert_eq!(m.relation("edge").unwrap().tuples.len(), 2);
        assert!(m.relation("lonely").unwrap().tuples.is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(load_model("r(a,b)"), Err(ModelError::Parse { line: 1, .. })));
        assert!(matches!(load_model("r(a,b).\nr(A)."), Err(ModelError::Parse { line: 2, .. })));
        assert!(matches!(load_model("r a."), Err(ModelError::Parse { .. })));
        assert_eq!(load_model("% nothing"), Err(ModelError::Empty));
    }
}
