//! Syntax: AST, parser and pretty-printer with a round-trip guarantee.

mod ast;
mod lexer;
mod parser;
mod printer;

pub use ast::{
    arity_conflict, CmpOp, Formula, HasSignature, HybridProgram, SigEntry, SymbolKind, Term,
    Variable,
};
pub use lexer::Pos;
pub use parser::{parse_formula, parse_program, parse_term};
pub use printer::{print_formula, print_program, print_term};

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: found {found}, expected {}", expected.join(" or "))]
    Syntax {
        pos: Pos,
        found: String,
        expected: Vec<String>,
    },
    #[error("symbol `{symbol}` ({kind}) used with arities {first} and {second}")]
    Arity {
        symbol: String,
        kind: SymbolKind,
        first: usize,
        second: usize,
    },
    #[error("tests and evolution domains must be differential-free")]
    DifferentialInTest,
    #[error("duplicate ODE variable `{name}`")]
    DuplicateOdeVariable { name: String },
}

impl ParseError {
    pub(crate) fn unexpected_char(pos: Pos, c: char) -> ParseError {
        ParseError::Syntax {
            pos,
            found: format!("character `{c}`"),
            expected: vec!["token".to_string()],
        }
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", print_term(self))
    }
}

impl std::fmt::Display for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", print_formula(self))
    }
}

impl std::fmt::Display for HybridProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", print_program(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt_f(s: &str) {
        let f = parse_formula(s).unwrap_or_else(|e| panic!("parse {s}: {e}"));
        let printed = print_formula(&f);
        let again = parse_formula(&printed)
            .unwrap_or_else(|e| panic!("reparse {printed}: {e}"));
        assert_eq!(f, again, "round trip through {printed}");
    }

    fn rt_p(s: &str) {
        let p = parse_program(s).unwrap_or_else(|e| panic!("parse {s}: {e}"));
        let printed = print_program(&p);
        let again = parse_program(&printed)
            .unwrap_or_else(|e| panic!("reparse {printed}: {e}"));
        assert_eq!(p, again, "round trip through {printed}");
    }

    #[test]
    fn parses_sum_of_product() {
        let t = parse_term("x + 2*y").unwrap();
        assert_eq!(
            t,
            Term::plus(Term::var("x"), Term::times(Term::num(2), Term::var("y")))
        );
    }

    #[test]
    fn parses_car_controller_shape() {
        let p = parse_program(
            "{a:=-B ++ ?safe(x); a:=A}; t0:=t; {x'=v, v'=a, t'=1 & t-t0<=T}",
        )
        .unwrap();
        match &p {
            HybridProgram::Seq(ctrl, rest) => {
                assert!(matches!(**ctrl, HybridProgram::Choice(..)));
                match &**rest {
                    HybridProgram::Seq(clock, ode) => {
                        assert!(matches!(**clock, HybridProgram::Assign(..)));
                        match &**ode {
                            HybridProgram::ODE { eqs, .. } => assert_eq!(eqs.len(), 3),
                            other => panic!("expected ODE, got {other}"),
                        }
                    }
                    other => panic!("expected sequence, got {other}"),
                }
            }
            other => panic!("expected sequence, got {other}"),
        }
    }

    #[test]
    fn parses_refinement_formula() {
        let f = parse_formula("{?true} refines {x:=1}").unwrap();
        assert_eq!(
            f,
            Formula::refines(
                HybridProgram::test(Formula::True),
                HybridProgram::assign(Variable::base("x"), Term::num(1)),
            )
        );
        assert_eq!(print_formula(&f), "{?true} refines {x:=1}");
    }

    #[test]
    fn print_examples() {
        let p = HybridProgram::assign(
            Variable::base("x"),
            Term::plus(Term::var("x"), Term::num(1)),
        );
        assert_eq!(print_program(&p), "x:=x+1");
        let d = Term::Differential(Box::new(Term::times(Term::var("x"), Term::var("y"))));
        assert_eq!(print_term(&d), "(x*y)'");
    }

    #[test]
    fn diamond_desugars() {
        let f = parse_formula("<x:=1>x>=1").unwrap();
        let d = f.desugar();
        assert_eq!(d, parse_formula("!([x:=1]!x>=1)").unwrap());
        assert_eq!(d.desugar(), d);
    }

    #[test]
    fn prog_equiv_desugars() {
        let f = parse_formula("{a} equiv {b}").unwrap();
        let d = f.desugar();
        assert_eq!(
            d,
            parse_formula("{a} refines {b} & {b} refines {a}").unwrap()
        );
    }

    #[test]
    fn signature_examples() {
        use std::collections::BTreeSet;
        let f = parse_formula("f(x) >= p(y)").unwrap();
        // In `f(x) >= p(y)` both sides are terms, so both are functions.
        let sig = f.signature();
        assert!(sig.contains(&("f".to_string(), SymbolKind::Func, 1)));
        assert!(sig.contains(&("p".to_string(), SymbolKind::Func, 1)));

        let g = parse_formula("f(x) >= 0 & p(y)").unwrap();
        let sig = g.signature();
        assert!(sig.contains(&("f".to_string(), SymbolKind::Func, 1)));
        assert!(sig.contains(&("p".to_string(), SymbolKind::Pred, 1)));

        let h = parse_formula("[a]P(||)").unwrap();
        let sig = h.signature();
        let expect: BTreeSet<SigEntry> = [
            ("a".to_string(), SymbolKind::Prog, 0),
            ("P".to_string(), SymbolKind::Predicational, 0),
        ]
        .into_iter()
        .collect();
        assert_eq!(sig, expect);

        assert!(parse_formula("x + 1 <= y").unwrap().signature().is_empty());
    }

    #[test]
    fn arity_conflicts_rejected() {
        let e = parse_formula("f(x) + f(x, y) >= 0").unwrap_err();
        assert!(matches!(e, ParseError::Arity { .. }));
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_formula("x >= ") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos.line, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn differential_in_test_rejected() {
        assert_eq!(
            parse_program("?(x)'>=0"),
            Err(ParseError::DifferentialInTest)
        );
    }

    #[test]
    fn duplicate_ode_variable_rejected() {
        assert!(matches!(
            parse_program("{x'=1, x'=2}"),
            Err(ParseError::DuplicateOdeVariable { .. })
        ));
    }

    #[test]
    fn round_trips() {
        rt_f("{?true} refines {x:=1}");
        rt_f("\\forall x x>=y -> \\exists z z=x");
        rt_f("[{x'=v, v'=a & v>=0}](x)'=v");
        rt_f("p() -> [a]p()");
        rt_f("(p() -> q()) -> p() | q() & r()");
        rt_f("{a ++ b} equiv {b ++ a}");
        rt_f("[x':=f(x); ?p(x)]q(x)");
        rt_f("x-y-z=x-(y-z)");
        rt_f("-x*y+-3<=0.5");
        rt_f("<x:=*>x=2");
        rt_p("{x:=1 ++ ?safe(x); x:=A}; t0:=t; {x'=v, v'=a, t'=1 & t-t0<=T}");
        rt_p("{{a; b}; c}*");
        rt_p("x':=y'+1");
        rt_p("{x'=v}");
        rt_p("?\\exists y y=f()");
    }

    #[test]
    fn fraction_literals() {
        let t = parse_term("3/4").unwrap();
        assert_eq!(print_term(&t), "3/4");
        let t = parse_term("0.5").unwrap();
        assert_eq!(print_term(&t), "1/2");
    }

    #[test]
    fn loop_requires_group_for_compound_bodies() {
        // `a*` works on atoms, compound bodies take braces.
        let p = parse_program("a*").unwrap();
        assert_eq!(p, HybridProgram::repeat(HybridProgram::prog_const("a")));
        assert_eq!(print_program(&p), "{a}*");
        rt_p("{x:=1; y:=2}*");
    }
}
