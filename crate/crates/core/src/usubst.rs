//! One-pass uniform substitution with input/output taboo sets.
//!
//! A substitution maps function symbols `f(.)` to replacement terms over
//! dot placeholders, predicate symbols `p(.)` to replacement formulas,
//! predicationals `P(||)` to formulas, and program constants to programs.
//! Application threads a taboo set through the expression: variables bound
//! by the surrounding context which must not be introduced free by any
//! replacement. Admissibility is checked exactly where a symbol is
//! replaced, so a single pass suffices.
//!
//! Predicational replacement performs no taboo check: a predicational
//! stands for a predicate over all variables, so its replacement cannot
//! smuggle a free variable past a binder that was not already in scope
//! semantically.

use crate::statics::{bv, fv_formula, fv_term, VarSet};
use crate::syntax::{parse_formula, parse_program, parse_term, Formula, HybridProgram, Term, Variable};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// One replacement rule of a uniform substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubstRule {
    Func { name: String, arity: usize, repl: Term },
    Pred { name: String, arity: usize, repl: Formula },
    Predicational { name: String, repl: Formula },
    Prog { name: String, repl: HybridProgram },
    /// Internal: argument placeholder bindings during replacement descent.
    Dot { index: u8, repl: Term },
}

/// A uniform substitution: at most one rule per symbol and kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    rules: Vec<SubstRule>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("clash: substituting `{symbol}` would introduce {free} free into a context tabooing {taboo} (at {path})")]
    Clash {
        symbol: String,
        taboo: String,
        free: String,
        path: String,
    },
    #[error("substitution replaces `{name}` (arity {want}) but it occurs with arity {got}")]
    ArityMismatch { name: String, want: usize, got: usize },
    #[error("duplicate rule for `{0}`")]
    DuplicateRule(String),
    #[error("replacement for `{name}` mentions dot index {index} beyond its arity {arity}")]
    DotOutOfRange { name: String, index: u8, arity: usize },
    #[error("dots may only occur in function and predicate replacements (`{0}`)")]
    StrayDots(String),
    #[error("substituting into a test or evolution domain must keep it differential-free")]
    DifferentialInTest,
    #[error("substitution text: {0}")]
    Parse(String),
    #[error("sugar must be desugared before substitution")]
    Sugared,
}

/// A clash record: which symbol clashed, against which taboo, with which
/// free variables, and where in the expression.
pub type SubstResult<T> = Result<T, SubstError>;

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn rules(&self) -> &[SubstRule] {
        &self.rules
    }

    pub fn is_identity(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn push(&mut self, rule: SubstRule) -> SubstResult<()> {
        let key = |r: &SubstRule| match r {
            SubstRule::Func { name, arity, .. } => format!("f:{name}/{arity}"),
            SubstRule::Pred { name, arity, .. } => format!("p:{name}/{arity}"),
            SubstRule::Predicational { name, .. } => format!("P:{name}"),
            SubstRule::Prog { name, .. } => format!("a:{name}"),
            SubstRule::Dot { index, .. } => format!(".:{index}"),
        };
        if self.rules.iter().any(|r| key(r) == key(&rule)) {
            return Err(SubstError::DuplicateRule(key(&rule)));
        }
        match &rule {
            SubstRule::Func { name, arity, repl } => {
                check_dot_range(name, *arity, &max_dot_term(repl))?;
            }
            SubstRule::Pred { name, arity, repl } => {
                check_dot_range(name, *arity, &max_dot_formula(repl))?;
            }
            SubstRule::Predicational { name, repl } => {
                if repl.mentions_dot() {
                    return Err(SubstError::StrayDots(name.clone()));
                }
            }
            SubstRule::Prog { name, repl } => {
                if repl.mentions_dot() {
                    return Err(SubstError::StrayDots(name.clone()));
                }
            }
            SubstRule::Dot { .. } => {}
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn func(mut self, name: &str, arity: usize, repl: &str) -> Subst {
        let t = parse_term(repl).expect("replacement term parses");
        self.push(SubstRule::Func { name: name.to_string(), arity, repl: t })
            .expect("valid rule");
        self
    }

    pub fn pred(mut self, name: &str, arity: usize, repl: &str) -> Subst {
        let f = parse_formula(repl).expect("replacement formula parses");
        self.push(SubstRule::Pred { name: name.to_string(), arity, repl: f.desugar() })
            .expect("valid rule");
        self
    }

    pub fn predicational(mut self, name: &str, repl: &str) -> Subst {
        let f = parse_formula(repl).expect("replacement formula parses");
        self.push(SubstRule::Predicational { name: name.to_string(), repl: f.desugar() })
            .expect("valid rule");
        self
    }

    pub fn prog(mut self, name: &str, repl: &str) -> Subst {
        let p = parse_program(repl).expect("replacement program parses");
        self.push(SubstRule::Prog { name: name.to_string(), repl: p.desugar() })
            .expect("valid rule");
        self
    }

    fn func_rule(&self, name: &str, arity: usize) -> Option<(&Term, usize)> {
        self.rules.iter().find_map(|r| match r {
            SubstRule::Func { name: n, arity: a, repl } if n == name && *a == arity => {
                Some((repl, *a))
            }
            _ => None,
        })
    }

    /// A rule for the name regardless of arity, to report mismatches.
    fn func_rule_any(&self, name: &str) -> Option<usize> {
        self.rules.iter().find_map(|r| match r {
            SubstRule::Func { name: n, arity, .. } if n == name => Some(*arity),
            _ => None,
        })
    }

    fn pred_rule(&self, name: &str, arity: usize) -> Option<&Formula> {
        self.rules.iter().find_map(|r| match r {
            SubstRule::Pred { name: n, arity: a, repl } if n == name && *a == arity => Some(repl),
            _ => None,
        })
    }

    fn pred_rule_any(&self, name: &str) -> Option<usize> {
        self.rules.iter().find_map(|r| match r {
            SubstRule::Pred { name: n, arity, .. } if n == name => Some(*arity),
            _ => None,
        })
    }

    fn predicational_rule(&self, name: &str) -> Option<&Formula> {
        self.rules.iter().find_map(|r| match r {
            SubstRule::Predicational { name: n, repl } if n == name => Some(repl),
            _ => None,
        })
    }

    fn prog_rule(&self, name: &str) -> Option<&HybridProgram> {
        self.rules.iter().find_map(|r| match r {
            SubstRule::Prog { name: n, repl } if n == name => Some(repl),
            _ => None,
        })
    }

    fn dot_rule(&self, index: u8) -> Option<&Term> {
        self.rules.iter().find_map(|r| match r {
            SubstRule::Dot { index: i, repl } if *i == index => Some(repl),
            _ => None,
        })
    }

    fn dots(args: Vec<Term>) -> Subst {
        Subst {
            rules: args
                .into_iter()
                .enumerate()
                .map(|(i, repl)| SubstRule::Dot { index: i as u8, repl })
                .collect(),
        }
    }

    /// Parses the line-oriented substitution text format:
    /// `f(.) ~> .*.+1`, `p(.) ~> .>=0`, `P(||) ~> x+y>=0`, `a ~> x:=1`.
    pub fn parse(text: &str) -> SubstResult<Subst> {
        let mut subst = Subst::new();
        for line in text.lines().flat_map(|l| l.split(',')) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once("~>")
                .ok_or_else(|| SubstError::Parse(format!("missing `~>` in `{line}`")))?;
            let lhs = lhs.trim();
            let rhs = rhs.trim();
            subst.push(parse_rule(lhs, rhs)?)?;
        }
        Ok(subst)
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in &self.rules {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            match r {
                SubstRule::Func { name, arity, repl } => {
                    write!(f, "{name}({}) ~> {repl}", dots_pattern(*arity))?
                }
                SubstRule::Pred { name, arity, repl } => {
                    write!(f, "{name}({}) ~> {repl}", dots_pattern(*arity))?
                }
                SubstRule::Predicational { name, repl } => write!(f, "{name}(||) ~> {repl}")?,
                SubstRule::Prog { name, repl } => write!(f, "{name} ~> {repl}")?,
                SubstRule::Dot { index, repl } => write!(f, ".{index} ~> {repl}")?,
            }
        }
        Ok(())
    }
}

fn dots_pattern(arity: usize) -> String {
    match arity {
        0 => String::new(),
        1 => ".".to_string(),
        n => (0..n).map(|i| format!(".{i}")).collect::<Vec<_>>().join(", "),
    }
}

fn parse_rule(lhs: &str, rhs: &str) -> SubstResult<SubstRule> {
    let perr = |m: String| SubstError::Parse(m);
    if let Some(name) = lhs.strip_suffix("(||)") {
        let f = parse_formula(rhs).map_err(|e| perr(e.to_string()))?;
        return Ok(SubstRule::Predicational { name: name.trim().to_string(), repl: f.desugar() });
    }
    if let Some(open) = lhs.find('(') {
        let name = lhs[..open].trim().to_string();
        let inner = lhs[open..]
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| perr(format!("malformed rule head `{lhs}`")))?
            .trim();
        let arity = if inner.is_empty() {
            0
        } else {
            inner.split(',').count()
        };
        // Try the replacement as a term first; a full term parse makes it a
        // function rule, otherwise it must be a formula (predicate rule).
        if let Ok(t) = parse_term(rhs) {
            return Ok(SubstRule::Func { name, arity, repl: t });
        }
        let f = parse_formula(rhs).map_err(|e| perr(e.to_string()))?;
        Ok(SubstRule::Pred { name, arity, repl: f.desugar() })
    } else {
        let name = lhs.trim().to_string();
        let p = parse_program(rhs).map_err(|e| perr(e.to_string()))?;
        Ok(SubstRule::Prog { name, repl: p.desugar() })
    }
}

fn max_dot_term(t: &Term) -> Option<u8> {
    match t {
        Term::Dot(i) => Some(*i),
        Term::Var(_) | Term::Number(_) => None,
        Term::FuncApp { args, .. } => args.iter().filter_map(max_dot_term).max(),
        Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
            [max_dot_term(a), max_dot_term(b)].into_iter().flatten().max()
        }
        Term::Neg(a) | Term::Differential(a) => max_dot_term(a),
    }
}

fn max_dot_formula(f: &Formula) -> Option<u8> {
    match f {
        Formula::Cmp(_, a, b) => [max_dot_term(a), max_dot_term(b)].into_iter().flatten().max(),
        Formula::PredApp { args, .. } => args.iter().filter_map(max_dot_term).max(),
        Formula::Predicational(_) | Formula::True | Formula::False => None,
        Formula::Not(a) => max_dot_formula(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
            [max_dot_formula(a), max_dot_formula(b)].into_iter().flatten().max()
        }
        Formula::Forall(_, a) | Formula::Exists(_, a) => max_dot_formula(a),
        Formula::Box_(p, a) | Formula::Diamond(p, a) => {
            [max_dot_program(p), max_dot_formula(a)].into_iter().flatten().max()
        }
        Formula::Refines(a, b) | Formula::ProgEquiv(a, b) => {
            [max_dot_program(a), max_dot_program(b)].into_iter().flatten().max()
        }
    }
}

fn max_dot_program(p: &HybridProgram) -> Option<u8> {
    match p {
        HybridProgram::ProgConst(_) | HybridProgram::AssignAny(_) => None,
        HybridProgram::Test(f) => max_dot_formula(f),
        HybridProgram::Assign(_, t) => max_dot_term(t),
        HybridProgram::ODE { eqs, domain } => eqs
            .iter()
            .filter_map(|(_, e)| max_dot_term(e))
            .chain(max_dot_formula(domain))
            .max(),
        HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
            [max_dot_program(a), max_dot_program(b)].into_iter().flatten().max()
        }
        HybridProgram::Loop(a) => max_dot_program(a),
    }
}

fn check_dot_range(name: &str, arity: usize, max: &Option<u8>) -> SubstResult<()> {
    if let Some(i) = max {
        if (*i as usize) >= arity {
            return Err(SubstError::DotOutOfRange {
                name: name.to_string(),
                index: *i,
                arity,
            });
        }
    }
    Ok(())
}

/// Location of a clash inside the substituted expression.
type Path = Vec<String>;

fn clash(symbol: &str, taboo: &VarSet, free: &VarSet, path: &Path) -> SubstError {
    SubstError::Clash {
        symbol: symbol.to_string(),
        taboo: taboo.render(),
        free: free.render(),
        path: if path.is_empty() { "root".to_string() } else { path.join(".") },
    }
}

fn admissible(symbol: &str, repl_fv: &VarSet, taboo: &VarSet, path: &Path) -> SubstResult<()> {
    let overlap = repl_fv.intersect(taboo);
    if overlap.is_empty() {
        Ok(())
    } else {
        Err(clash(symbol, taboo, repl_fv, path))
    }
}

/// Applies the substitution to a term under an input taboo set.
pub fn apply_term(s: &Subst, taboo: &VarSet, t: &Term) -> SubstResult<Term> {
    let mut path = Path::new();
    term(s, taboo, t, &mut path)
}

/// Applies the substitution to a (sugar-free) formula under an input taboo.
pub fn apply_formula(s: &Subst, taboo: &VarSet, f: &Formula) -> SubstResult<Formula> {
    if !f.is_sugar_free() {
        return Err(SubstError::Sugared);
    }
    let mut path = Path::new();
    formula(s, taboo, f, &mut path)
}

/// Applies the substitution to a (sugar-free) program under an input taboo,
/// returning the substituted program and the output taboo.
pub fn apply_program(
    s: &Subst,
    taboo: &VarSet,
    p: &HybridProgram,
) -> SubstResult<(HybridProgram, VarSet)> {
    if !p.is_sugar_free() {
        return Err(SubstError::Sugared);
    }
    let mut path = Path::new();
    program(s, taboo, p, &mut path)
}

/// Applies the substitution to a formula with no initial taboos.
pub fn us(s: &Subst, f: &Formula) -> SubstResult<Formula> {
    apply_formula(s, &VarSet::empty(), f)
}

fn term(s: &Subst, taboo: &VarSet, t: &Term, path: &mut Path) -> SubstResult<Term> {
    match t {
        Term::Var(_) | Term::Number(_) => Ok(t.clone()),
        Term::Dot(i) => match s.dot_rule(*i) {
            Some(repl) => {
                // the argument was already substituted at its own taboo;
                // here it only must avoid the binders inside the replacement
                admissible(&format!(".{i}"), &fv_term(repl), taboo, path)?;
                Ok(repl.clone())
            }
            None => Ok(t.clone()),
        },
        Term::FuncApp { name, args } => {
            let substituted: Vec<Term> = args
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    path.push(format!("arg{k}"));
                    let r = term(s, taboo, a, path);
                    path.pop();
                    r
                })
                .collect::<Result<_, _>>()?;
            match s.func_rule(name, args.len()) {
                Some((repl, _)) => {
                    admissible(name, &fv_term(repl), taboo, path)?;
                    let dots = Subst::dots(substituted);
                    path.push(format!("{name}()"));
                    let out = term(&dots, &VarSet::empty(), repl, path);
                    path.pop();
                    out
                }
                None => {
                    if let Some(want) = s.func_rule_any(name) {
                        return Err(SubstError::ArityMismatch {
                            name: name.clone(),
                            want,
                            got: args.len(),
                        });
                    }
                    Ok(Term::FuncApp { name: name.clone(), args: substituted })
                }
            }
        }
        Term::Plus(a, b) => Ok(Term::plus(
            term(s, taboo, a, path)?,
            term(s, taboo, b, path)?,
        )),
        Term::Minus(a, b) => Ok(Term::minus(
            term(s, taboo, a, path)?,
            term(s, taboo, b, path)?,
        )),
        Term::Times(a, b) => Ok(Term::times(
            term(s, taboo, a, path)?,
            term(s, taboo, b, path)?,
        )),
        Term::Neg(a) => Ok(Term::Neg(Box::new(term(s, taboo, a, path)?))),
        // differentials depend on all variables: recurse with full taboo
        Term::Differential(a) => Ok(Term::Differential(Box::new(term(
            s,
            &VarSet::all(),
            a,
            path,
        )?))),
    }
}

fn formula(s: &Subst, taboo: &VarSet, f: &Formula, path: &mut Path) -> SubstResult<Formula> {
    match f {
        Formula::True | Formula::False => Ok(f.clone()),
        Formula::Cmp(op, a, b) => Ok(Formula::Cmp(
            *op,
            term(s, taboo, a, path)?,
            term(s, taboo, b, path)?,
        )),
        Formula::PredApp { name, args } => {
            let substituted: Vec<Term> = args
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    path.push(format!("arg{k}"));
                    let r = term(s, taboo, a, path);
                    path.pop();
                    r
                })
                .collect::<Result<_, _>>()?;
            match s.pred_rule(name, args.len()) {
                Some(repl) => {
                    admissible(name, &fv_formula(repl), taboo, path)?;
                    let dots = Subst::dots(substituted);
                    path.push(format!("{name}()"));
                    let out = formula(&dots, &VarSet::empty(), repl, path);
                    path.pop();
                    out
                }
                None => {
                    if let Some(want) = s.pred_rule_any(name) {
                        return Err(SubstError::ArityMismatch {
                            name: name.clone(),
                            want,
                            got: args.len(),
                        });
                    }
                    Ok(Formula::PredApp { name: name.clone(), args: substituted })
                }
            }
        }
        // predicationals substitute without a taboo check
        Formula::Predicational(name) => match s.predicational_rule(name) {
            Some(repl) => Ok(repl.clone()),
            None => Ok(f.clone()),
        },
        Formula::Not(a) => Ok(Formula::not(formula(s, taboo, a, path)?)),
        Formula::And(a, b) => Ok(Formula::and(
            formula(s, taboo, a, path)?,
            formula(s, taboo, b, path)?,
        )),
        Formula::Or(a, b) => Ok(Formula::or(
            formula(s, taboo, a, path)?,
            formula(s, taboo, b, path)?,
        )),
        Formula::Imply(a, b) => Ok(Formula::imply(
            formula(s, taboo, a, path)?,
            formula(s, taboo, b, path)?,
        )),
        Formula::Equiv(a, b) => Ok(Formula::equiv(
            formula(s, taboo, a, path)?,
            formula(s, taboo, b, path)?,
        )),
        Formula::Forall(x, a) => {
            let inner = taboo.union(&VarSet::singleton(x.clone()));
            path.push("forall".to_string());
            let out = formula(s, &inner, a, path);
            path.pop();
            Ok(Formula::forall(x.clone(), out?))
        }
        Formula::Exists(x, a) => {
            let inner = taboo.union(&VarSet::singleton(x.clone()));
            path.push("exists".to_string());
            let out = formula(s, &inner, a, path);
            path.pop();
            Ok(Formula::exists(x.clone(), out?))
        }
        Formula::Box_(p, a) => {
            path.push("box".to_string());
            let (p2, out_taboo) = program(s, taboo, p, path)?;
            path.pop();
            path.push("post".to_string());
            let a2 = formula(s, &out_taboo, a, path);
            path.pop();
            Ok(Formula::boxed(p2, a2?))
        }
        // both programs get the input taboo; their output taboos are
        // discarded since a refinement binds nothing afterwards
        Formula::Refines(a, b) => {
            path.push("left".to_string());
            let (a2, _) = program(s, taboo, a, path)?;
            path.pop();
            path.push("right".to_string());
            let (b2, _) = program(s, taboo, b, path)?;
            path.pop();
            Ok(Formula::refines(a2, b2))
        }
        Formula::Diamond(..) | Formula::ProgEquiv(..) => Err(SubstError::Sugared),
    }
}

fn program(
    s: &Subst,
    taboo: &VarSet,
    p: &HybridProgram,
    path: &mut Path,
) -> SubstResult<(HybridProgram, VarSet)> {
    match p {
        HybridProgram::ProgConst(name) => match s.prog_rule(name) {
            Some(repl) => Ok((repl.clone(), taboo.union(&bv(repl)))),
            None => Ok((p.clone(), taboo.union(&VarSet::all()))),
        },
        HybridProgram::Test(f) => {
            path.push("test".to_string());
            let f2 = formula(s, taboo, f, path);
            path.pop();
            let f2 = f2?;
            if !f2.differential_free() {
                return Err(SubstError::DifferentialInTest);
            }
            Ok((HybridProgram::test(f2), taboo.clone()))
        }
        HybridProgram::Assign(x, e) => {
            path.push(format!("{x}:="));
            let e2 = term(s, taboo, e, path);
            path.pop();
            Ok((
                HybridProgram::Assign(x.clone(), e2?),
                taboo.union(&VarSet::singleton(x.clone())),
            ))
        }
        HybridProgram::AssignAny(x) => Ok((
            p.clone(),
            taboo.union(&VarSet::singleton(x.clone())),
        )),
        HybridProgram::ODE { eqs, domain } => {
            let bound = VarSet::from_iter(
                eqs.iter().flat_map(|(x, _)| [x.clone(), x.primed()]),
            );
            let inner = taboo.union(&bound);
            let mut eqs2 = Vec::with_capacity(eqs.len());
            for (x, e) in eqs {
                path.push(format!("{x}'=", x = x.name));
                let e2 = term(s, &inner, e, path);
                path.pop();
                eqs2.push((x.clone(), e2?));
            }
            path.push("domain".to_string());
            let d2 = formula(s, &inner, domain, path);
            path.pop();
            let d2 = d2?;
            if !d2.differential_free() {
                return Err(SubstError::DifferentialInTest);
            }
            Ok((HybridProgram::ode(eqs2, d2), inner))
        }
        HybridProgram::Choice(a, b) => {
            path.push("left".to_string());
            let (a2, va) = program(s, taboo, a, path)?;
            path.pop();
            path.push("right".to_string());
            let (b2, vb) = program(s, taboo, b, path)?;
            path.pop();
            Ok((HybridProgram::choice(a2, b2), va.union(&vb)))
        }
        HybridProgram::Seq(a, b) => {
            path.push("first".to_string());
            let (a2, va) = program(s, taboo, a, path)?;
            path.pop();
            path.push("second".to_string());
            let (b2, vb) = program(s, &va, b, path)?;
            path.pop();
            Ok((HybridProgram::seq(a2, b2), vb))
        }
        HybridProgram::Loop(a) => {
            // Two passes: the first computes the loop's taboo fixpoint V,
            // the second substitutes the body under V. V is already closed
            // (it contains the input taboo and all bound variables of the
            // substituted body), which the debug check asserts.
            path.push("loop".to_string());
            let (_, v) = program(s, taboo, a, path)?;
            let (a2, v2) = program(s, &v, a, path)?;
            path.pop();
            debug_assert_eq!(v, v2, "loop taboo fixpoint must be closed");
            Ok((HybridProgram::repeat(a2), v))
        }
    }
}

/// Applies each rule's replacement as the whole expression, used by tests
/// that need direct access to replacements.
pub fn rule_map(s: &Subst) -> BTreeMap<String, String> {
    s.rules
        .iter()
        .map(|r| match r {
            SubstRule::Func { name, arity, repl } => {
                (format!("{name}/{arity}"), repl.to_string())
            }
            SubstRule::Pred { name, arity, repl } => {
                (format!("{name}/{arity}"), repl.to_string())
            }
            SubstRule::Predicational { name, repl } => (format!("{name}(||)"), repl.to_string()),
            SubstRule::Prog { name, repl } => (name.clone(), repl.to_string()),
            SubstRule::Dot { index, repl } => (format!(".{index}"), repl.to_string()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_program, parse_term};

    fn vset(names: &[&str]) -> VarSet {
        VarSet::from_iter(names.iter().map(|n| Variable::base(*n)))
    }

    #[test]
    fn constant_function_substitutes() {
        let s = Subst::new().func("f", 0, "2");
        let t = apply_term(&s, &VarSet::empty(), &parse_term("f()+x").unwrap()).unwrap();
        assert_eq!(t, parse_term("2+x").unwrap());
    }

    #[test]
    fn tabooed_replacement_clashes() {
        let s = Subst::new().func("f", 0, "y");
        let e = apply_term(&s, &vset(&["y"]), &parse_term("f()").unwrap());
        match e {
            Err(SubstError::Clash { symbol, taboo, .. }) => {
                assert_eq!(symbol, "f");
                assert_eq!(taboo, "{y}");
            }
            other => panic!("expected clash, got {other:?}"),
        }
    }

    #[test]
    fn dot_argument_substitution() {
        let s = Subst::new().func("f", 1, ".*.");
        let t = apply_term(&s, &VarSet::empty(), &parse_term("f(x+1)").unwrap()).unwrap();
        assert_eq!(t, parse_term("(x+1)*(x+1)").unwrap());
    }

    #[test]
    fn assignment_axiom_instantiates() {
        let s = Subst::new().pred("p", 1, ".>=0").func("f", 0, "2");
        let axiom = parse_formula("[x:=f()]p(x) <-> p(f())").unwrap();
        let out = us(&s, &axiom).unwrap();
        assert_eq!(out, parse_formula("[x:=2]x>=0 <-> 2>=0").unwrap());
    }

    #[test]
    fn quantifier_taboo_clashes() {
        let s = Subst::new().pred("p", 1, ".>=y");
        let f = parse_formula("\\forall y p(x)").unwrap();
        match us(&s, &f) {
            Err(SubstError::Clash { symbol, .. }) => assert_eq!(symbol, "p"),
            other => panic!("expected clash, got {other:?}"),
        }
    }

    #[test]
    fn program_constants_substitute_freely() {
        let s = Subst::new().prog("a", "x:=1").prog("b", "x:=1 ++ x:=2");
        let f = parse_formula("{a} refines {b}").unwrap();
        let out = us(&s, &f).unwrap();
        assert_eq!(out, parse_formula("{x:=1} refines {x:=1 ++ x:=2}").unwrap());
    }

    #[test]
    fn prog_const_output_taboo() {
        let s = Subst::new().prog("a", "x:=1");
        let (p, v) = apply_program(
            &s,
            &VarSet::empty(),
            &parse_program("a").unwrap(),
        )
        .unwrap();
        assert_eq!(p, parse_program("x:=1").unwrap());
        assert_eq!(v, vset(&["x"]));
    }

    #[test]
    fn loop_first_pass_taboo_is_enough() {
        // f() ~> y, body x:=f(): first pass gives taboo {x}; y is not
        // tabooed, so the loop substitutes fine.
        let s = Subst::new().func("f", 0, "y");
        let (p, v) = apply_program(
            &s,
            &VarSet::empty(),
            &parse_program("{x:=f()}*").unwrap(),
        )
        .unwrap();
        assert_eq!(p, parse_program("{x:=y}*").unwrap());
        assert_eq!(v, vset(&["x"]));
    }

    #[test]
    fn loop_second_pass_clashes() {
        // body y:=x; x:=f() with f() ~> x: the second pass runs under
        // taboo {x, y} where the replacement's free x clashes.
        let s = Subst::new().func("f", 0, "x");
        let e = apply_program(
            &s,
            &VarSet::empty(),
            &parse_program("{y:=x; x:=f()}*").unwrap(),
        );
        assert!(matches!(e, Err(SubstError::Clash { .. })), "{e:?}");
    }

    #[test]
    fn vacuous_axiom_clash_and_success() {
        let v = parse_formula("p() -> [a]p()").unwrap();
        // p ~> x>=0 with a ~> x:=x+1 must clash: x becomes tabooed by a
        let bad = Subst::new().pred("p", 0, "x>=0").prog("a", "x:=x+1");
        assert!(matches!(us(&bad, &v), Err(SubstError::Clash { symbol, .. }) if symbol == "p"));
        // y>=0 is fine since y is not bound by x:=x+1
        let good = Subst::new().pred("p", 0, "y>=0").prog("a", "x:=x+1");
        assert_eq!(
            us(&good, &v).unwrap(),
            parse_formula("y>=0 -> [x:=x+1]y>=0").unwrap()
        );
    }

    #[test]
    fn identity_substitution_never_clashes() {
        let s = Subst::new();
        for text in [
            "[{x'=v, v'=a & v>=0}](x)'=v",
            "\\forall x \\exists y x+y>=0",
            "{{a}*} refines {{b}*} <-> P(||)",
        ] {
            let f = parse_formula(text).unwrap().desugar();
            assert_eq!(us(&s, &f).unwrap(), f, "{text}");
        }
    }

    #[test]
    fn differential_recurses_with_full_taboo() {
        let s = Subst::new().func("f", 0, "y");
        // (f())' substitutes under taboo ALL, so any free variable clashes
        let e = apply_term(&s, &VarSet::empty(), &parse_term("(f())'").unwrap());
        assert!(matches!(e, Err(SubstError::Clash { .. })));
        // a closed replacement is fine
        let s2 = Subst::new().func("f", 0, "3+1");
        let t = apply_term(&s2, &VarSet::empty(), &parse_term("(f())'").unwrap()).unwrap();
        assert_eq!(t, parse_term("(3+1)'").unwrap());
    }

    #[test]
    fn predicational_substitutes_untabooed() {
        let s = Subst::new().predicational("P", "x>=0");
        let f = parse_formula("[x:=1]P(||)").unwrap();
        assert_eq!(us(&s, &f).unwrap(), parse_formula("[x:=1]x>=0").unwrap());
    }

    #[test]
    fn dot_under_binder_in_replacement_clashes() {
        // p(.) ~> \forall y .>=y: the argument x is fine, but an argument
        // mentioning y must clash inside the replacement
        let s = Subst::new().pred("p", 1, "\\forall y .>=y");
        let ok = us(&s, &parse_formula("p(x)").unwrap()).unwrap();
        assert_eq!(ok, parse_formula("\\forall y x>=y").unwrap());
        let e = us(&s, &parse_formula("p(y)").unwrap());
        assert!(matches!(e, Err(SubstError::Clash { .. })), "{e:?}");
    }

    #[test]
    fn text_format_round_trip() {
        let s = Subst::parse("f(.) ~> .*.+1\np(.) ~> .>=0\nP(||) ~> x+y>=0\na ~> x:=1; ?x>=0")
            .unwrap();
        assert_eq!(s.rules().len(), 4);
        let shown = s.to_string();
        let again = Subst::parse(&shown).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn update_axiom_taboo_blocks_self_reference() {
        // x:=f() == x:=*;?x=f() : f may not be replaced by a term with x
        // free, because x is tabooed after x:=*.
        let ax = parse_formula("{x:=f()} equiv {x:=*; ?x=f()}").unwrap().desugar();
        let bad = Subst::new().func("f", 0, "x+1");
        assert!(matches!(us(&bad, &ax), Err(SubstError::Clash { .. })));
        let good = Subst::new().func("f", 0, "y+1");
        assert!(us(&good, &ax).is_ok());
    }

    #[test]
    fn monotone_taboos() {
        // success under a taboo implies success (same result) under subsets
        let s = Subst::new().pred("q", 1, ".*.<=z");
        let f = parse_formula("[y:=1]q(y)").unwrap();
        let big = apply_formula(&s, &vset(&["w", "u"]), &f).unwrap();
        let small = apply_formula(&s, &VarSet::empty(), &f).unwrap();
        assert_eq!(big, small);
    }
}
