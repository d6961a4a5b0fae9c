//! Abstract syntax for terms, formulas and hybrid programs.

use num::BigRational;
use std::fmt;

/// A variable. Every base variable `x` has exactly one associated
/// differential symbol `x'`, represented by the `differential` flag, so a
/// "differential of a differential symbol" is not constructible.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    pub name: String,
    pub differential: bool,
}

impl Variable {
    pub fn base(name: impl Into<String>) -> Self {
        Variable { name: name.into(), differential: false }
    }

    pub fn diff(name: impl Into<String>) -> Self {
        Variable { name: name.into(), differential: true }
    }

    /// The differential symbol `x'` associated with this base variable.
    /// Differential symbols are their own associated symbol.
    pub fn primed(&self) -> Variable {
        Variable { name: self.name.clone(), differential: true }
    }

    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.differential {
            write!(f, "{}'", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// Comparison operators. All of them are primitive so that axioms and
/// examples print exactly as written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Terms of the logic. `Dot(i)` is a reserved 0-ary symbol that only occurs
/// inside substitution replacements, marking the position of the i-th
/// argument.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Variable),
    Number(BigRational),
    FuncApp { name: String, args: Vec<Term> },
    Dot(u8),
    Plus(Box<Term>, Box<Term>),
    Minus(Box<Term>, Box<Term>),
    Times(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Differential(Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Variable::base(name))
    }

    pub fn num(n: i64) -> Term {
        if n < 0 {
            Term::Neg(Box::new(Term::Number(BigRational::from_integer((-n).into()))))
        } else {
            Term::Number(BigRational::from_integer(n.into()))
        }
    }

    /// A number term for an arbitrary rational, negative values wrapped in
    /// `Neg` so the result always reparses to itself.
    pub fn rat(r: BigRational) -> Term {
        if r < BigRational::from_integer(0.into()) {
            Term::Neg(Box::new(Term::Number(-r)))
        } else {
            Term::Number(r)
        }
    }

    pub fn func(name: &str, args: Vec<Term>) -> Term {
        Term::FuncApp { name: name.to_string(), args }
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn minus(a: Term, b: Term) -> Term {
        Term::Minus(Box::new(a), Box::new(b))
    }

    pub fn times(a: Term, b: Term) -> Term {
        Term::Times(Box::new(a), Box::new(b))
    }

    /// True iff the term contains no `Differential` node.
    pub fn differential_free(&self) -> bool {
        match self {
            Term::Var(_) | Term::Number(_) | Term::Dot(_) => true,
            Term::FuncApp { args, .. } => args.iter().all(|t| t.differential_free()),
            Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
                a.differential_free() && b.differential_free()
            }
            Term::Neg(a) => a.differential_free(),
            Term::Differential(_) => false,
        }
    }

    pub fn mentions_dot(&self) -> bool {
        match self {
            Term::Dot(_) => true,
            Term::Var(_) | Term::Number(_) => false,
            Term::FuncApp { args, .. } => args.iter().any(|t| t.mentions_dot()),
            Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
                a.mentions_dot() || b.mentions_dot()
            }
            Term::Neg(a) | Term::Differential(a) => a.mentions_dot(),
        }
    }
}

/// Formulas of the logic. `Diamond` and `ProgEquiv` are parser-level sugar:
/// [`Formula::desugar`] rewrites them away before anything reaches the
/// kernel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Cmp(CmpOp, Term, Term),
    PredApp { name: String, args: Vec<Term> },
    /// `P(||)`, a predicate over all variables.
    Predicational(String),
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    Equiv(Box<Formula>, Box<Formula>),
    Forall(Variable, Box<Formula>),
    Exists(Variable, Box<Formula>),
    Box_(Box<HybridProgram>, Box<Formula>),
    Diamond(Box<HybridProgram>, Box<Formula>),
    Refines(Box<HybridProgram>, Box<HybridProgram>),
    ProgEquiv(Box<HybridProgram>, Box<HybridProgram>),
}

impl Formula {
    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn pred(name: &str, args: Vec<Term>) -> Formula {
        Formula::PredApp { name: name.to_string(), args }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imply(a: Formula, b: Formula) -> Formula {
        Formula::Imply(Box::new(a), Box::new(b))
    }

    pub fn equiv(a: Formula, b: Formula) -> Formula {
        Formula::Equiv(Box::new(a), Box::new(b))
    }

    pub fn forall(x: Variable, f: Formula) -> Formula {
        Formula::Forall(x, Box::new(f))
    }

    pub fn exists(x: Variable, f: Formula) -> Formula {
        Formula::Exists(x, Box::new(f))
    }

    pub fn boxed(p: HybridProgram, f: Formula) -> Formula {
        Formula::Box_(Box::new(p), Box::new(f))
    }

    pub fn refines(a: HybridProgram, b: HybridProgram) -> Formula {
        Formula::Refines(Box::new(a), Box::new(b))
    }

    pub fn prog_equiv(a: HybridProgram, b: HybridProgram) -> Formula {
        Formula::ProgEquiv(Box::new(a), Box::new(b))
    }

    /// Rewrites `Diamond(a, f)` to `!([a]!f)` and `ProgEquiv(a, b)` to
    /// `Refines(a, b) & Refines(b, a)` everywhere. Idempotent.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.clone(), b.clone()),
            Formula::PredApp { name, args } => {
                Formula::PredApp { name: name.clone(), args: args.clone() }
            }
            Formula::Predicational(p) => Formula::Predicational(p.clone()),
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Not(f) => Formula::not(f.desugar()),
            Formula::And(a, b) => Formula::and(a.desugar(), b.desugar()),
            Formula::Or(a, b) => Formula::or(a.desugar(), b.desugar()),
            Formula::Imply(a, b) => Formula::imply(a.desugar(), b.desugar()),
            Formula::Equiv(a, b) => Formula::equiv(a.desugar(), b.desugar()),
            Formula::Forall(x, f) => Formula::forall(x.clone(), f.desugar()),
            Formula::Exists(x, f) => Formula::exists(x.clone(), f.desugar()),
            Formula::Box_(p, f) => Formula::boxed(p.desugar(), f.desugar()),
            Formula::Diamond(p, f) => {
                Formula::not(Formula::boxed(p.desugar(), Formula::not(f.desugar())))
            }
            Formula::Refines(a, b) => Formula::refines(a.desugar(), b.desugar()),
            Formula::ProgEquiv(a, b) => {
                let (a, b) = (a.desugar(), b.desugar());
                Formula::and(
                    Formula::refines(a.clone(), b.clone()),
                    Formula::refines(b, a),
                )
            }
        }
    }

    pub fn is_sugar_free(&self) -> bool {
        match self {
            Formula::Diamond(..) | Formula::ProgEquiv(..) => false,
            Formula::Cmp(..)
            | Formula::PredApp { .. }
            | Formula::Predicational(_)
            | Formula::True
            | Formula::False => true,
            Formula::Not(f) => f.is_sugar_free(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Imply(a, b)
            | Formula::Equiv(a, b) => a.is_sugar_free() && b.is_sugar_free(),
            Formula::Forall(_, f) | Formula::Exists(_, f) => f.is_sugar_free(),
            Formula::Box_(p, f) => p.is_sugar_free() && f.is_sugar_free(),
            Formula::Refines(a, b) => a.is_sugar_free() && b.is_sugar_free(),
        }
    }

    /// True iff the formula contains no `Differential` term.
    pub fn differential_free(&self) -> bool {
        match self {
            Formula::Cmp(_, a, b) => a.differential_free() && b.differential_free(),
            Formula::PredApp { args, .. } => args.iter().all(|t| t.differential_free()),
            Formula::Predicational(_) | Formula::True | Formula::False => true,
            Formula::Not(f) => f.differential_free(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Imply(a, b)
            | Formula::Equiv(a, b) => a.differential_free() && b.differential_free(),
            Formula::Forall(_, f) | Formula::Exists(_, f) => f.differential_free(),
            Formula::Box_(p, f) | Formula::Diamond(p, f) => {
                p.differential_free() && f.differential_free()
            }
            Formula::Refines(a, b) | Formula::ProgEquiv(a, b) => {
                a.differential_free() && b.differential_free()
            }
        }
    }

    pub fn mentions_dot(&self) -> bool {
        match self {
            Formula::Cmp(_, a, b) => a.mentions_dot() || b.mentions_dot(),
            Formula::PredApp { args, .. } => args.iter().any(|t| t.mentions_dot()),
            Formula::Predicational(_) | Formula::True | Formula::False => false,
            Formula::Not(f) => f.mentions_dot(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Imply(a, b)
            | Formula::Equiv(a, b) => a.mentions_dot() || b.mentions_dot(),
            Formula::Forall(_, f) | Formula::Exists(_, f) => f.mentions_dot(),
            Formula::Box_(p, f) | Formula::Diamond(p, f) => {
                p.mentions_dot() || f.mentions_dot()
            }
            Formula::Refines(a, b) | Formula::ProgEquiv(a, b) => {
                a.mentions_dot() || b.mentions_dot()
            }
        }
    }
}

/// Hybrid programs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HybridProgram {
    ProgConst(String),
    Test(Box<Formula>),
    Assign(Variable, Term),
    AssignAny(Variable),
    /// A differential equation system `{x1'=e1, ..., xn'=en & domain}`.
    /// Left-hand sides are pairwise distinct base variables.
    ODE { eqs: Vec<(Variable, Term)>, domain: Box<Formula> },
    Choice(Box<HybridProgram>, Box<HybridProgram>),
    Seq(Box<HybridProgram>, Box<HybridProgram>),
    Loop(Box<HybridProgram>),
}

impl HybridProgram {
    pub fn prog_const(name: &str) -> HybridProgram {
        HybridProgram::ProgConst(name.to_string())
    }

    pub fn test(f: Formula) -> HybridProgram {
        HybridProgram::Test(Box::new(f))
    }

    pub fn assign(x: Variable, t: Term) -> HybridProgram {
        HybridProgram::Assign(x, t)
    }

    pub fn ode(eqs: Vec<(Variable, Term)>, domain: Formula) -> HybridProgram {
        HybridProgram::ODE { eqs, domain: Box::new(domain) }
    }

    pub fn choice(a: HybridProgram, b: HybridProgram) -> HybridProgram {
        HybridProgram::Choice(Box::new(a), Box::new(b))
    }

    pub fn seq(a: HybridProgram, b: HybridProgram) -> HybridProgram {
        HybridProgram::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of one or more programs.
    pub fn seq_all(mut parts: Vec<HybridProgram>) -> HybridProgram {
        let last = parts.pop().expect("seq_all of empty list");
        parts
            .into_iter()
            .rev()
            .fold(last, |acc, p| HybridProgram::seq(p, acc))
    }

    pub fn repeat(a: HybridProgram) -> HybridProgram {
        HybridProgram::Loop(Box::new(a))
    }

    pub fn desugar(&self) -> HybridProgram {
        match self {
            HybridProgram::ProgConst(_)
            | HybridProgram::Assign(..)
            | HybridProgram::AssignAny(_) => self.clone(),
            HybridProgram::Test(f) => HybridProgram::test(f.desugar()),
            HybridProgram::ODE { eqs, domain } => {
                HybridProgram::ode(eqs.clone(), domain.desugar())
            }
            HybridProgram::Choice(a, b) => HybridProgram::choice(a.desugar(), b.desugar()),
            HybridProgram::Seq(a, b) => HybridProgram::seq(a.desugar(), b.desugar()),
            HybridProgram::Loop(a) => HybridProgram::repeat(a.desugar()),
        }
    }

    pub fn is_sugar_free(&self) -> bool {
        match self {
            HybridProgram::ProgConst(_)
            | HybridProgram::Assign(..)
            | HybridProgram::AssignAny(_) => true,
            HybridProgram::Test(f) => f.is_sugar_free(),
            HybridProgram::ODE { domain, .. } => domain.is_sugar_free(),
            HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
                a.is_sugar_free() && b.is_sugar_free()
            }
            HybridProgram::Loop(a) => a.is_sugar_free(),
        }
    }

    pub fn differential_free(&self) -> bool {
        match self {
            HybridProgram::ProgConst(_) | HybridProgram::AssignAny(_) => true,
            HybridProgram::Test(f) => f.differential_free(),
            HybridProgram::Assign(_, t) => t.differential_free(),
            HybridProgram::ODE { eqs, domain } => {
                eqs.iter().all(|(_, e)| e.differential_free()) && domain.differential_free()
            }
            HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
                a.differential_free() && b.differential_free()
            }
            HybridProgram::Loop(a) => a.differential_free(),
        }
    }

    pub fn mentions_dot(&self) -> bool {
        match self {
            HybridProgram::ProgConst(_) | HybridProgram::AssignAny(_) => false,
            HybridProgram::Test(f) => f.mentions_dot(),
            HybridProgram::Assign(_, t) => t.mentions_dot(),
            HybridProgram::ODE { eqs, domain } => {
                eqs.iter().any(|(_, e)| e.mentions_dot()) || domain.mentions_dot()
            }
            HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
                a.mentions_dot() || b.mentions_dot()
            }
            HybridProgram::Loop(a) => a.mentions_dot(),
        }
    }
}

/// Symbol kinds as reported by [`signature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Func,
    Pred,
    Predicational,
    Prog,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymbolKind::Func => "func",
            SymbolKind::Pred => "pred",
            SymbolKind::Predicational => "predicational",
            SymbolKind::Prog => "prog",
        };
        write!(f, "{s}")
    }
}

/// An entry of a signature: symbol name, kind and arity.
pub type SigEntry = (String, SymbolKind, usize);

/// Anything whose signature (the occurring function, predicate,
/// predicational and program constant symbols) can be collected.
pub trait HasSignature {
    fn collect_signature(&self, out: &mut std::collections::BTreeSet<SigEntry>);

    fn signature(&self) -> std::collections::BTreeSet<SigEntry> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_signature(&mut out);
        out
    }
}

impl HasSignature for Term {
    fn collect_signature(&self, out: &mut std::collections::BTreeSet<SigEntry>) {
        match self {
            Term::Var(_) | Term::Number(_) | Term::Dot(_) => {}
            Term::FuncApp { name, args } => {
                out.insert((name.clone(), SymbolKind::Func, args.len()));
                for a in args {
                    a.collect_signature(out);
                }
            }
            Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
                a.collect_signature(out);
                b.collect_signature(out);
            }
            Term::Neg(a) | Term::Differential(a) => a.collect_signature(out),
        }
    }
}

impl HasSignature for Formula {
    fn collect_signature(&self, out: &mut std::collections::BTreeSet<SigEntry>) {
        match self {
            Formula::Cmp(_, a, b) => {
                a.collect_signature(out);
                b.collect_signature(out);
            }
            Formula::PredApp { name, args } => {
                out.insert((name.clone(), SymbolKind::Pred, args.len()));
                for a in args {
                    a.collect_signature(out);
                }
            }
            Formula::Predicational(p) => {
                out.insert((p.clone(), SymbolKind::Predicational, 0));
            }
            Formula::True | Formula::False => {}
            Formula::Not(f) => f.collect_signature(out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Imply(a, b)
            | Formula::Equiv(a, b) => {
                a.collect_signature(out);
                b.collect_signature(out);
            }
            Formula::Forall(_, f) | Formula::Exists(_, f) => f.collect_signature(out),
            Formula::Box_(p, f) | Formula::Diamond(p, f) => {
                p.collect_signature(out);
                f.collect_signature(out);
            }
            Formula::Refines(a, b) | Formula::ProgEquiv(a, b) => {
                a.collect_signature(out);
                b.collect_signature(out);
            }
        }
    }
}

impl HasSignature for HybridProgram {
    fn collect_signature(&self, out: &mut std::collections::BTreeSet<SigEntry>) {
        match self {
            HybridProgram::ProgConst(a) => {
                out.insert((a.clone(), SymbolKind::Prog, 0));
            }
            HybridProgram::Test(f) => f.collect_signature(out),
            HybridProgram::Assign(_, t) => t.collect_signature(out),
            HybridProgram::AssignAny(_) => {}
            HybridProgram::ODE { eqs, domain } => {
                for (_, e) in eqs {
                    e.collect_signature(out);
                }
                domain.collect_signature(out);
            }
            HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
                a.collect_signature(out);
                b.collect_signature(out);
            }
            HybridProgram::Loop(a) => a.collect_signature(out),
        }
    }
}

/// Checks that no symbol occurs with two different arities (per kind).
/// Returns the offending symbol and both arities if so.
pub fn arity_conflict(sig: &std::collections::BTreeSet<SigEntry>) -> Option<(String, SymbolKind, usize, usize)> {
    let mut seen: std::collections::BTreeMap<(String, SymbolKind), usize> =
        std::collections::BTreeMap::new();
    for (name, kind, arity) in sig {
        if let Some(prev) = seen.insert((name.clone(), *kind), *arity) {
            if prev != *arity {
                return Some((name.clone(), *kind, prev, *arity));
            }
        }
    }
    None
}
