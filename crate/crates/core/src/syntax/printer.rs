//! Pretty-printer. Output reparses to a structurally identical AST and uses
//! minimal parentheses under the declared precedences.

use super::ast::*;
use num::BigRational;
use num::Zero;

pub fn print_term(t: &Term) -> String {
    let mut s = String::new();
    term(t, 0, &mut s);
    s
}

pub fn print_formula(f: &Formula) -> String {
    let mut s = String::new();
    formula(f, 0, &mut s);
    s
}

pub fn print_program(p: &HybridProgram) -> String {
    let mut s = String::new();
    program(p, 0, &mut s);
    s
}

// Term precedence: 0 sum, 1 product, 2 unary minus, 3 atom.
fn term(t: &Term, prec: u8, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(&v.to_string()),
        Term::Number(n) => number(n, prec, out),
        Term::Dot(0) => out.push('.'),
        Term::Dot(i) => out.push_str(&format!(".{i}")),
        Term::FuncApp { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                term(a, 0, out);
            }
            out.push(')');
        }
        Term::Plus(a, b) => paren(prec > 0, out, |out| {
            term(a, 0, out);
            out.push('+');
            term(b, 1, out);
        }),
        Term::Minus(a, b) => paren(prec > 0, out, |out| {
            term(a, 0, out);
            out.push('-');
            term(b, 1, out);
        }),
        Term::Times(a, b) => paren(prec > 1, out, |out| {
            term(a, 1, out);
            out.push('*');
            term(b, 2, out);
        }),
        Term::Neg(a) => paren(prec > 2, out, |out| {
            out.push('-');
            term(a, 2, out);
        }),
        Term::Differential(a) => {
            out.push('(');
            term(a, 0, out);
            out.push_str(")'");
        }
    }
}

fn number(n: &BigRational, prec: u8, out: &mut String) {
    if n < &BigRational::zero() {
        // Internal construction only; the parser always produces `Neg`.
        paren(prec > 2, out, |out| {
            out.push('-');
            number(&-n.clone(), 3, out);
        });
    } else if n.is_integer() {
        out.push_str(&n.numer().to_string());
    } else {
        out.push_str(&format!("{}/{}", n.numer(), n.denom()));
    }
}

// Formula precedence: 0 equiv, 1 imply, 2 or, 3 and, 4 unary, 5 atom.
fn formula(f: &Formula, prec: u8, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Cmp(op, a, b) => {
            term(a, 0, out);
            out.push_str(op.as_str());
            term(b, 0, out);
        }
        Formula::PredApp { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                term(a, 0, out);
            }
            out.push(')');
        }
        Formula::Predicational(p) => {
            out.push_str(p);
            out.push_str("(||)");
        }
        Formula::Equiv(a, b) => paren(prec > 0, out, |out| {
            formula(a, 0, out);
            out.push_str(" <-> ");
            formula(b, 1, out);
        }),
        Formula::Imply(a, b) => paren(prec > 1, out, |out| {
            formula(a, 2, out);
            out.push_str(" -> ");
            formula(b, 1, out);
        }),
        Formula::Or(a, b) => paren(prec > 2, out, |out| {
            formula(a, 2, out);
            out.push_str(" | ");
            formula(b, 3, out);
        }),
        Formula::And(a, b) => paren(prec > 3, out, |out| {
            formula(a, 3, out);
            out.push_str(" & ");
            formula(b, 4, out);
        }),
        Formula::Not(a) => paren(prec > 4, out, |out| {
            out.push('!');
            formula(a, 4, out);
        }),
        Formula::Forall(x, a) => paren(prec > 4, out, |out| {
            out.push_str("\\forall ");
            out.push_str(&x.to_string());
            out.push(' ');
            formula(a, 4, out);
        }),
        Formula::Exists(x, a) => paren(prec > 4, out, |out| {
            out.push_str("\\exists ");
            out.push_str(&x.to_string());
            out.push(' ');
            formula(a, 4, out);
        }),
        Formula::Box_(p, a) => paren(prec > 4, out, |out| {
            out.push('[');
            program(p, 0, out);
            out.push(']');
            formula(a, 4, out);
        }),
        Formula::Diamond(p, a) => paren(prec > 4, out, |out| {
            out.push('<');
            program(p, 0, out);
            out.push('>');
            formula(a, 4, out);
        }),
        Formula::Refines(a, b) => {
            out.push('{');
            program(a, 0, out);
            out.push_str("} refines {");
            program(b, 0, out);
            out.push('}');
        }
        Formula::ProgEquiv(a, b) => {
            out.push('{');
            program(a, 0, out);
            out.push_str("} equiv {");
            program(b, 0, out);
            out.push('}');
        }
    }
}

// Program precedence: 0 choice, 1 sequence, 2 postfix star / atom.
fn program(p: &HybridProgram, prec: u8, out: &mut String) {
    match p {
        HybridProgram::ProgConst(a) => out.push_str(a),
        HybridProgram::Test(f) => {
            // `?F` extends to the end of the formula; braces keep a
            // following `;` or `++` out of F when needed.
            out.push('?');
            formula(f, 4, out);
        }
        HybridProgram::Assign(x, t) => {
            out.push_str(&x.to_string());
            out.push_str(":=");
            term(t, 0, out);
        }
        HybridProgram::AssignAny(x) => {
            out.push_str(&x.to_string());
            out.push_str(":=*");
        }
        HybridProgram::ODE { eqs, domain } => {
            out.push('{');
            for (i, (x, e)) in eqs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&x.name);
                out.push_str("'=");
                term(e, 0, out);
            }
            if **domain != Formula::True {
                out.push_str(" & ");
                formula(domain, 0, out);
            }
            out.push('}');
        }
        HybridProgram::Choice(a, b) => paren_prog(prec > 0, out, |out| {
            program(a, 0, out);
            out.push_str(" ++ ");
            program(b, 1, out);
        }),
        HybridProgram::Seq(a, b) => paren_prog(prec > 1, out, |out| {
            program(a, 2, out);
            out.push_str("; ");
            program(b, 1, out);
        }),
        HybridProgram::Loop(a) => {
            out.push('{');
            program(a, 0, out);
            out.push_str("}*");
        }
    }
}

fn paren(needed: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if needed {
        out.push('(');
        body(out);
        out.push(')');
    } else {
        body(out);
    }
}

fn paren_prog(needed: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if needed {
        out.push('{');
        body(out);
        out.push('}');
    } else {
        body(out);
    }
}
