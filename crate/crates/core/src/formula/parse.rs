use std::collections::BTreeMap;

use super::{Formula, FormulaError, Literal, Quantifier, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lower(String),
    Upper(String),
    LParen,
    RParen,
    Comma,
    Amp,
    Bar,
    Tilde,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Lower(s) | Tok::Upper(s) => format!("`{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Bar => "`|`".into(),
        Tok::Tilde => "`~`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, FormulaError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            '~' => Some(Tok::Tilde),
            _ => None,
        };
        if let Some(tok) = simple {
            chars.next();
            column += 1;
            out.push(Spanned {
                tok,
                line: tl,
                column: tc,
            });
        } else if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
        } else if c.is_whitespace() {
            chars.next();
            column += 1;
        } else if c.is_ascii_alphabetic() {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            let tok = if word.starts_with(|c: char| c.is_ascii_uppercase()) {
                Tok::Upper(word)
            } else {
                Tok::Lower(word)
            };
            out.push(Spanned {
                tok,
                line: tl,
                column: tc,
            });
        } else {
            return Err(FormulaError::Syntax {
                line,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    arities: BTreeMap<String, (usize, usize, usize)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> FormulaError {
        let t = &self.toks[self.pos];
        FormulaError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), FormulaError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                describe(&want),
                describe(self.peek())
            )))
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let mut quants = Vec::new();
        while let (Tok::Lower(kw), Tok::Upper(var)) = (self.peek(), self.peek_at(1)) {
            let q = match kw.as_str() {
                "all" => Quantifier::Forall,
                "some" => Quantifier::Exists,
                _ => break,
            };
            quants.push((q, var.clone()));
            self.bump();
            self.bump();
        }
        let mut f = self.disjunction()?;
        for (q, v) in quants.into_iter().rev() {
            f = Formula::quantified(q, v, f);
        }
        Ok(f)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = vec![self.conjunction()?];
        while *self.peek() == Tok::Bar {
            self.bump();
            parts.push(self.conjunction()?);
        }
        Ok(Formula::or(parts))
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut parts = vec![self.unit()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.unit()?);
        }
        Ok(Formula::and(parts))
    }

    fn unit(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                if let Tok::Lower(_) = self.peek() {
                    let lit = self.atom()?;
                    Ok(Formula::Lit(lit.negate()))
                } else {
                    Ok(Formula::not(self.unit()?))
                }
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Lower(_) => Ok(Formula::Lit(self.atom()?)),
            other => Err(self.error(format!("expected a formula, found {}", describe(&other)))),
        }
    }

    fn atom(&mut self) -> Result<Literal, FormulaError> {
        let start = self.bump();
        let Tok::Lower(pred) = start.tok else {
            unreachable!("atom called on a non-predicate token")
        };
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        match self.arities.get(&pred) {
            Some(&(first, _, _)) if first != args.len() => {
                return Err(FormulaError::Arity {
                    pred,
                    first,
                    second: args.len(),
                })
            }
            Some(_) => {}
            None => {
                self.arities
                    .insert(pred.clone(), (args.len(), start.line, start.column));
            }
        }
        Ok(Literal::new(pred, args))
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        match self.peek().clone() {
            Tok::Upper(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::Lower(c) => {
                self.bump();
                Ok(Term::Const(c))
            }
            other => Err(self.error(format!("expected a term, found {}", describe(&other)))),
        }
    }
}

/// Parses the concrete formula syntax described in the module docs.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        arities: BTreeMap::new(),
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {}", describe(p.peek()))));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(pred: &str, vars: &[&str]) -> Formula {
        Formula::Lit(Literal::over_vars(pred, vars))
    }

    #[test]
    fn parses_the_abcd_example() {
        let f = parse_formula("all X some Y (a(X,Y) & b(X)) | (c(X,Y) & d(Y))").unwrap();
        let expected = Formula::forall(
            "X",
            Formula::exists(
                "Y",
                Formula::Or(vec![
                    Formula::And(vec![lit("a", &["X", "Y"]), lit("b", &["X"])]),
                    Formula::And(vec![lit("c", &["X", "Y"]), lit("d", &["Y"])]),
                ]),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_ground_atom() {
        let f = parse_formula("r(e1,e2)").unwrap();
        assert_eq!(
            f,
            Formula::Lit(Literal::new("r", vec![Term::constant("e1"), Term::constant("e2")]))
        );
        assert!(f.is_closed());
        assert!(f.is_quantifier_free());
    }

    #[test]
    fn reports_syntax_errors_with_position() {
        let err = parse_formula("some X r(X").unwrap_err();
        assert_eq!(
            err,
            FormulaError::Syntax {
                line: 1,
                column: 11,
                message: "expected `)`, found end of input".into()
            }
        );
        let err = parse_formula("p(X) &\n  $").unwrap_err();
        assert!(matches!(err, FormulaError::Syntax { line: 2, column: 3, .. }));
        assert!(parse_formula("p(X) q(X)").is_err());
        assert!(parse_formula("p()").is_err());
        assert!(parse_formula("").is_err());
    }

    #[test]
    fn reports_inconsistent_arity() {
        let err = parse_formula("some X r(X) & r(X,X)").unwrap_err();
        assert_eq!(
            err,
            FormulaError::Arity {
                pred: "r".into(),
                first: 1,
                second: 2
            }
        );
    }

    #[test]
    fn negation_forms() {
        assert_eq!(
            parse_formula("~p(X)").unwrap(),
            Formula::Lit(Literal::over_vars("p", &["X"]).negate())
        );
        assert_eq!(parse_formula("~(p(X))").unwrap(), Formula::not(lit("p", &["X"])));
        assert_eq!(
            parse_formula("~~p(X)").unwrap(),
            Formula::not(Formula::Lit(Literal::over_vars("p", &["X"]).negate()))
        );
    }

    #[test]
    fn keywords_are_contextual() {
        // `all` followed by `(` is an ordinary predicate.
        let f = parse_formula("some X all(X)").unwrap();
        assert_eq!(f, Formula::exists("X", lit("all", &["X"])));
    }

    #[test]
    fn nested_quantifiers_in_parentheses() {
        let f = parse_formula("p(a) & (some X q(X))").unwrap();
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::Lit(Literal::new("p", vec![Term::constant("a")])),
                Formula::exists("X", lit("q", &["X"])),
            ])
        );
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            prop::sample::select(vec!["X", "Y", "Z1"]).prop_map(Term::var),
            prop::sample::select(vec!["a", "b_2"]).prop_map(Term::constant),
        ]
    }

    fn arb_literal() -> impl Strategy<Value = Literal> {
        // Predicate name fixes the arity so generated formulas stay well-formed.
        (0usize..3, any::<bool>(), prop::collection::vec(arb_term(), 3)).prop_map(|(p, neg, args)| {
            let pred = ["p", "q", "r"][p];
            let mut l = Literal::new(pred, args[..p + 1].to_vec());
            l.negated = neg;
            l
        })
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        arb_literal().prop_map(Formula::Lit).prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
                (prop::sample::select(vec!["X", "Y"]), inner.clone())
                    .prop_map(|(v, b)| Formula::exists(v, b)),
                (prop::sample::select(vec!["X", "Y"]), inner).prop_map(|(v, b)| Formula::forall(v, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(f in arb_formula()) {
            let text = f.to_string();
            let back = parse_formula(&text).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
