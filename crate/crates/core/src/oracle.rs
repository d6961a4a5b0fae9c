//! Executable concrete semantics over exact rationals: term evaluation with
//! differentials, three-valued formula truth with explicit certainty,
//! transition sampling for programs, and a randomized refinement falsifier.
//!
//! Verdicts carry a `certain` flag. A certain verdict is a genuine semantic
//! fact; an uncertain one reflects sampling (quantifier grids, chosen values
//! for `x:=*`, sampled ODE durations, bounded loop unrolling). Falsification
//! harnesses only ever act on certain `false` verdicts.
//!
//! Differentials of terms that mention differential symbols sum over base
//! variables only, since no second-order differential symbols exist.

use crate::poly::{self, sturm, Poly};
use crate::syntax::{CmpOp, Formula, HybridProgram, Term, Variable};
use num::{BigRational, Signed, Zero};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type Rat = BigRational;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("uninterpreted symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{name}` applied with arity {got}, interpreted with arity {want}")]
    ArityMismatch { name: String, want: usize, got: usize },
    #[error("dot placeholder outside a substitution replacement")]
    StrayDot,
}

/// A state: a total map from variables to rationals, default 0. Entries
/// equal to zero are dropped so equality is plain map equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct State {
    vals: BTreeMap<Variable, Rat>,
}

impl State {
    pub fn new() -> State {
        State::default()
    }

    pub fn from_pairs(pairs: &[(&str, i64)]) -> State {
        let mut s = State::new();
        for (name, v) in pairs {
            let var = if let Some(base) = name.strip_suffix('\'') {
                Variable::diff(base)
            } else {
                Variable::base(*name)
            };
            s.set(var, Rat::from_integer((*v).into()));
        }
        s
    }

    pub fn get(&self, v: &Variable) -> Rat {
        self.vals.get(v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn set(&mut self, v: Variable, val: Rat) {
        if val.is_zero() {
            self.vals.remove(&v);
        } else {
            self.vals.insert(v, val);
        }
    }

    pub fn with(&self, v: Variable, val: Rat) -> State {
        let mut s = self.clone();
        s.set(v, val);
        s
    }

    pub fn support(&self) -> impl Iterator<Item = (&Variable, &Rat)> {
        self.vals.iter()
    }

    /// True iff the two states agree on every variable outside `except`.
    pub fn agrees_except(&self, other: &State, except: &dyn Fn(&Variable) -> bool) -> bool {
        let keys: BTreeSet<&Variable> =
            self.vals.keys().chain(other.vals.keys()).collect();
        keys.into_iter()
            .all(|k| except(k) || self.get(k) == other.get(k))
    }
}

/// Interpretation of function and predicate symbols as polynomial bodies
/// over dot placeholders, and of program constants as finite transition
/// tables (test fixtures only).
#[derive(Clone, Debug, Default)]
pub struct Interp {
    pub funcs: BTreeMap<String, FuncDef>,
    pub preds: BTreeMap<String, PredDef>,
    pub progs: BTreeMap<String, Vec<(State, State)>>,
}

#[derive(Clone, Debug)]
pub struct FuncDef {
    pub arity: usize,
    /// Symbol-free term over `Dot(0..arity)`.
    pub body: Term,
}

#[derive(Clone, Debug)]
pub struct PredDef {
    pub arity: usize,
    /// Symbol-free, quantifier-free, modality-free formula over dots.
    pub body: Formula,
}

impl Interp {
    pub fn func(mut self, name: &str, arity: usize, body: &str) -> Self {
        let t = crate::syntax::parse_term(body).expect("function body parses");
        self.funcs.insert(name.to_string(), FuncDef { arity, body: t });
        self
    }

    pub fn pred(mut self, name: &str, arity: usize, body: &str) -> Self {
        let f = crate::syntax::parse_formula(body).expect("predicate body parses");
        self.preds.insert(name.to_string(), PredDef { arity, body: f });
        self
    }
}

pub(crate) fn subst_dots_term(t: &Term, dots: &[Term]) -> Term {
    match t {
        Term::Dot(i) => dots
            .get(*i as usize)
            .cloned()
            .unwrap_or_else(|| t.clone()),
        Term::Var(_) | Term::Number(_) => t.clone(),
        Term::FuncApp { name, args } => Term::FuncApp {
            name: name.clone(),
            args: args.iter().map(|a| subst_dots_term(a, dots)).collect(),
        },
        Term::Plus(a, b) => Term::plus(subst_dots_term(a, dots), subst_dots_term(b, dots)),
        Term::Minus(a, b) => Term::minus(subst_dots_term(a, dots), subst_dots_term(b, dots)),
        Term::Times(a, b) => Term::times(subst_dots_term(a, dots), subst_dots_term(b, dots)),
        Term::Neg(a) => Term::Neg(Box::new(subst_dots_term(a, dots))),
        Term::Differential(a) => Term::Differential(Box::new(subst_dots_term(a, dots))),
    }
}

/// Inlines function interpretations, leaving a symbol-free term.
fn resolve_term(i: &Interp, t: &Term) -> Result<Term, OracleError> {
    match t {
        Term::Var(_) | Term::Number(_) => Ok(t.clone()),
        Term::Dot(_) => Err(OracleError::StrayDot),
        Term::FuncApp { name, args } => {
            let def = i
                .funcs
                .get(name)
                .ok_or_else(|| OracleError::UnknownSymbol(name.clone()))?;
            if def.arity != args.len() {
                return Err(OracleError::ArityMismatch {
                    name: name.clone(),
                    want: def.arity,
                    got: args.len(),
                });
            }
            let resolved: Vec<Term> = args
                .iter()
                .map(|a| resolve_term(i, a))
                .collect::<Result<_, _>>()?;
            Ok(subst_dots_term(&def.body, &resolved))
        }
        Term::Plus(a, b) => Ok(Term::plus(resolve_term(i, a)?, resolve_term(i, b)?)),
        Term::Minus(a, b) => Ok(Term::minus(resolve_term(i, a)?, resolve_term(i, b)?)),
        Term::Times(a, b) => Ok(Term::times(resolve_term(i, a)?, resolve_term(i, b)?)),
        Term::Neg(a) => Ok(Term::Neg(Box::new(resolve_term(i, a)?))),
        Term::Differential(a) => Ok(Term::Differential(Box::new(resolve_term(i, a)?))),
    }
}

/// Expands differentials of a symbol-free term into a polynomial over base
/// and differential variables: `(e)'` becomes `sum_x x' * de/dx` over the
/// base variables of `e`.
fn diff_expand(t: &Term) -> Result<Poly, OracleError> {
    match t {
        Term::Var(v) => Ok(Poly::var(v.clone())),
        Term::Number(n) => Ok(Poly::constant(n.clone())),
        Term::Dot(_) => Err(OracleError::StrayDot),
        Term::FuncApp { name, .. } => Err(OracleError::UnknownSymbol(name.clone())),
        Term::Plus(a, b) => Ok(diff_expand(a)?.add(&diff_expand(b)?)),
        Term::Minus(a, b) => Ok(diff_expand(a)?.sub(&diff_expand(b)?)),
        Term::Times(a, b) => Ok(diff_expand(a)?.mul(&diff_expand(b)?)),
        Term::Neg(a) => Ok(diff_expand(a)?.neg()),
        Term::Differential(a) => {
            let p = diff_expand(a)?;
            let mut out = Poly::zero();
            for v in p.variables() {
                if v.differential {
                    continue;
                }
                let d = p.derivative(&v);
                out = out.add(&d.mul(&Poly::var(v.primed())));
            }
            Ok(out)
        }
    }
}

/// Evaluates a term in an interpretation and state. Exact.
pub fn eval_term(i: &Interp, s: &State, t: &Term) -> Result<Rat, OracleError> {
    let resolved = resolve_term(i, t)?;
    let p = diff_expand(&resolved)?;
    Ok(p.eval(&|v| s.get(v)))
}

/// A three-valued truth verdict with a certainty flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truth {
    pub value: Option<bool>,
    pub certain: bool,
}

impl Truth {
    pub const fn certain(b: bool) -> Truth {
        Truth { value: Some(b), certain: true }
    }

    pub const fn lean(b: bool) -> Truth {
        Truth { value: Some(b), certain: false }
    }

    pub const UNKNOWN: Truth = Truth { value: None, certain: false };

    pub fn definitely_true(self) -> bool {
        self.value == Some(true) && self.certain
    }

    pub fn definitely_false(self) -> bool {
        self.value == Some(false) && self.certain
    }

    fn not(self) -> Truth {
        Truth { value: self.value.map(|b| !b), certain: self.certain }
    }

    fn and(self, other: Truth) -> Truth {
        match (self.value, other.value) {
            (Some(false), _) if self.certain => Truth::certain(false),
            (_, Some(false)) if other.certain => Truth::certain(false),
            (Some(false), _) | (_, Some(false)) => Truth::lean(false),
            (Some(true), Some(true)) => Truth {
                value: Some(true),
                certain: self.certain && other.certain,
            },
            _ => Truth::UNKNOWN,
        }
    }

    fn or(self, other: Truth) -> Truth {
        self.not().and(other.not()).not()
    }
}

/// Sampling configuration for quantifiers, nondeterministic assignments,
/// ODE durations and loop unrolling.
#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub values: Vec<Rat>,
    pub durations: Vec<Rat>,
    pub loop_unroll: usize,
    pub max_states: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        let r = |n: i64, d: i64| Rat::new(n.into(), d.into());
        SampleConfig {
            values: vec![r(-2, 1), r(-1, 1), r(0, 1), r(1, 2), r(1, 1), r(2, 1)],
            durations: vec![r(0, 1), r(1, 2), r(1, 1), r(2, 1)],
            loop_unroll: 4,
            max_states: 2000,
        }
    }
}

impl SampleConfig {
    /// Extends the value pool, deduplicated, keeping determinism.
    pub fn with_values(mut self, extra: impl IntoIterator<Item = Rat>) -> Self {
        for v in extra {
            if !self.values.contains(&v) {
                self.values.push(v);
            }
        }
        self
    }
}

/// Collects constants (and their neighbors) from an expression to seed
/// sample pools; boundary values catch counterexamples that a plain grid
/// misses.
pub fn harvest_constants_formula(f: &Formula, out: &mut Vec<Rat>) {
    fn push(out: &mut Vec<Rat>, n: &Rat) {
        let one = Rat::from_integer(1.into());
        for v in [n.clone(), -n.clone(), n + one.clone(), n - one] {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    fn term(t: &Term, out: &mut Vec<Rat>) {
        match t {
            Term::Number(n) => push(out, n),
            Term::Var(_) | Term::Dot(_) => {}
            Term::FuncApp { args, .. } => args.iter().for_each(|a| term(a, out)),
            Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
                term(a, out);
                term(b, out);
            }
            Term::Neg(a) | Term::Differential(a) => term(a, out),
        }
    }
    fn prog(p: &HybridProgram, out: &mut Vec<Rat>) {
        match p {
            HybridProgram::ProgConst(_) | HybridProgram::AssignAny(_) => {}
            HybridProgram::Test(f) => harvest_constants_formula(f, out),
            HybridProgram::Assign(_, t) => term(t, out),
            HybridProgram::ODE { eqs, domain } => {
                eqs.iter().for_each(|(_, e)| term(e, out));
                harvest_constants_formula(domain, out);
            }
            HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
                prog(a, out);
                prog(b, out);
            }
            HybridProgram::Loop(a) => prog(a, out),
        }
    }
    match f {
        Formula::Cmp(_, a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::PredApp { args, .. } => args.iter().for_each(|a| term(a, out)),
        Formula::Predicational(_) | Formula::True | Formula::False => {}
        Formula::Not(a) => harvest_constants_formula(a, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
            harvest_constants_formula(a, out);
            harvest_constants_formula(b, out);
        }
        Formula::Forall(_, a) | Formula::Exists(_, a) => harvest_constants_formula(a, out),
        Formula::Box_(p, a) | Formula::Diamond(p, a) => {
            prog(p, out);
            harvest_constants_formula(a, out);
        }
        Formula::Refines(a, b) | Formula::ProgEquiv(a, b) => {
            prog(a, out);
            prog(b, out);
        }
    }
}

pub fn harvest_constants_program(p: &HybridProgram, out: &mut Vec<Rat>) {
    harvest_constants_formula(&Formula::refines(p.clone(), p.clone()), out);
}

/// All variables occurring anywhere in a program, bound or free.
pub fn vars_of_program(p: &HybridProgram, out: &mut BTreeSet<Variable>) {
    fn term(t: &Term, out: &mut BTreeSet<Variable>) {
        match t {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Number(_) | Term::Dot(_) => {}
            Term::FuncApp { args, .. } => args.iter().for_each(|a| term(a, out)),
            Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
                term(a, out);
                term(b, out);
            }
            Term::Neg(a) | Term::Differential(a) => term(a, out),
        }
    }
    fn fml(f: &Formula, out: &mut BTreeSet<Variable>) {
        match f {
            Formula::Cmp(_, a, b) => {
                term(a, out);
                term(b, out);
            }
            Formula::PredApp { args, .. } => args.iter().for_each(|a| term(a, out)),
            Formula::Predicational(_) | Formula::True | Formula::False => {}
            Formula::Not(a) => fml(a, out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Imply(a, b)
            | Formula::Equiv(a, b) => {
                fml(a, out);
                fml(b, out);
            }
            Formula::Forall(x, a) | Formula::Exists(x, a) => {
                out.insert(x.clone());
                fml(a, out);
            }
            Formula::Box_(p, a) | Formula::Diamond(p, a) => {
                vars_of_program(p, out);
                fml(a, out);
            }
            Formula::Refines(a, b) | Formula::ProgEquiv(a, b) => {
                vars_of_program(a, out);
                vars_of_program(b, out);
            }
        }
    }
    match p {
        HybridProgram::ProgConst(_) => {}
        HybridProgram::Test(f) => fml(f, out),
        HybridProgram::Assign(x, t) => {
            out.insert(x.clone());
            term(t, out);
        }
        HybridProgram::AssignAny(x) => {
            out.insert(x.clone());
        }
        HybridProgram::ODE { eqs, domain } => {
            for (x, e) in eqs {
                out.insert(x.clone());
                out.insert(x.primed());
                term(e, out);
            }
            fml(domain, out);
        }
        HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
            vars_of_program(a, out);
            vars_of_program(b, out);
        }
        HybridProgram::Loop(a) => vars_of_program(a, out),
    }
}

pub fn vars_of_formula(f: &Formula, out: &mut BTreeSet<Variable>) {
    vars_of_program(&HybridProgram::Test(Box::new(f.clone())), out)
}

/// Evaluates a formula. Quantifiers are checked on the configured sample
/// grid; `Box` and `Refines` go through transition enumeration.
pub fn eval_formula(
    i: &Interp,
    s: &State,
    f: &Formula,
    cfg: &SampleConfig,
) -> Result<Truth, OracleError> {
    match f {
        Formula::True => Ok(Truth::certain(true)),
        Formula::False => Ok(Truth::certain(false)),
        Formula::Cmp(op, a, b) => {
            let va = eval_term(i, s, a)?;
            let vb = eval_term(i, s, b)?;
            let holds = match op {
                CmpOp::Le => va <= vb,
                CmpOp::Lt => va < vb,
                CmpOp::Eq => va == vb,
                CmpOp::Ge => va >= vb,
                CmpOp::Gt => va > vb,
            };
            Ok(Truth::certain(holds))
        }
        Formula::PredApp { name, args } => {
            let def = i
                .preds
                .get(name)
                .ok_or_else(|| OracleError::UnknownSymbol(name.clone()))?
                .clone();
            if def.arity != args.len() {
                return Err(OracleError::ArityMismatch {
                    name: name.clone(),
                    want: def.arity,
                    got: args.len(),
                });
            }
            let vals: Vec<Term> = args
                .iter()
                .map(|a| eval_term(i, s, a).map(Term::rat))
                .collect::<Result<_, _>>()?;
            let body = subst_dots_formula(&def.body, &vals);
            eval_formula(i, s, &body, cfg)
        }
        Formula::Predicational(p) => Err(OracleError::UnknownSymbol(p.clone())),
        Formula::Not(a) => Ok(eval_formula(i, s, a, cfg)?.not()),
        Formula::And(a, b) => Ok(eval_formula(i, s, a, cfg)?.and(eval_formula(i, s, b, cfg)?)),
        Formula::Or(a, b) => Ok(eval_formula(i, s, a, cfg)?.or(eval_formula(i, s, b, cfg)?)),
        Formula::Imply(a, b) => {
            Ok(eval_formula(i, s, a, cfg)?.not().or(eval_formula(i, s, b, cfg)?))
        }
        Formula::Equiv(a, b) => {
            let va = eval_formula(i, s, a, cfg)?;
            let vb = eval_formula(i, s, b, cfg)?;
            let both = va.and(vb);
            let neither = va.not().and(vb.not());
            Ok(both.or(neither))
        }
        Formula::Forall(x, a) => {
            for v in &cfg.values {
                let t = eval_formula(i, &s.with(x.clone(), v.clone()), a, cfg)?;
                if t.definitely_false() {
                    return Ok(Truth::certain(false));
                }
                if t.value == Some(false) {
                    return Ok(Truth::lean(false));
                }
            }
            Ok(Truth::lean(true))
        }
        Formula::Exists(x, a) => {
            let mut leaning = false;
            for v in &cfg.values {
                let t = eval_formula(i, &s.with(x.clone(), v.clone()), a, cfg)?;
                if t.definitely_true() {
                    return Ok(Truth::certain(true));
                }
                leaning |= t.value == Some(true);
            }
            Ok(if leaning { Truth::lean(true) } else { Truth::lean(false) })
        }
        Formula::Box_(p, a) => {
            let enumeration = transitions(i, s, p, cfg)?;
            let mut all_true_certain = enumeration.complete;
            for (target, exact) in &enumeration.states {
                let t = eval_formula(i, target, a, cfg)?;
                if t.definitely_false() && *exact {
                    return Ok(Truth::certain(false));
                }
                if t.value == Some(false) {
                    return Ok(Truth::lean(false));
                }
                all_true_certain &= t.definitely_true() && *exact;
            }
            Ok(if all_true_certain { Truth::certain(true) } else { Truth::lean(true) })
        }
        Formula::Refines(a, b) => {
            let enumeration = transitions(i, s, a, cfg)?;
            let mut all_yes = enumeration.complete;
            for (target, exact) in &enumeration.states {
                match reaches(i, s, b, target, cfg)? {
                    Tri::No if *exact => return Ok(Truth::certain(false)),
                    Tri::No | Tri::Maybe => all_yes = false,
                    Tri::Yes => {
                        all_yes &= *exact;
                    }
                }
            }
            Ok(if all_yes { Truth::certain(true) } else { Truth::lean(true) })
        }
        Formula::Diamond(..) | Formula::ProgEquiv(..) => eval_formula(i, s, &f.desugar(), cfg),
    }
}

pub(crate) fn subst_dots_formula(f: &Formula, dots: &[Term]) -> Formula {
    match f {
        Formula::Cmp(op, a, b) => {
            Formula::Cmp(*op, subst_dots_term(a, dots), subst_dots_term(b, dots))
        }
        Formula::PredApp { name, args } => Formula::PredApp {
            name: name.clone(),
            args: args.iter().map(|a| subst_dots_term(a, dots)).collect(),
        },
        Formula::Predicational(_) | Formula::True | Formula::False => f.clone(),
        Formula::Not(a) => Formula::not(subst_dots_formula(a, dots)),
        Formula::And(a, b) => {
            Formula::and(subst_dots_formula(a, dots), subst_dots_formula(b, dots))
        }
        Formula::Or(a, b) => Formula::or(subst_dots_formula(a, dots), subst_dots_formula(b, dots)),
        Formula::Imply(a, b) => {
            Formula::imply(subst_dots_formula(a, dots), subst_dots_formula(b, dots))
        }
        Formula::Equiv(a, b) => {
            Formula::equiv(subst_dots_formula(a, dots), subst_dots_formula(b, dots))
        }
        Formula::Forall(x, a) => Formula::forall(x.clone(), subst_dots_formula(a, dots)),
        Formula::Exists(x, a) => Formula::exists(x.clone(), subst_dots_formula(a, dots)),
        other => other.clone(),
    }
}

/// Result of transition enumeration: sampled reachable states with per-state
/// exactness, and whether the enumeration covers the whole relation.
#[derive(Clone, Debug)]
pub struct Transitions {
    pub states: Vec<(State, bool)>,
    pub complete: bool,
}

impl Transitions {
    fn exact_complete(states: Vec<State>) -> Transitions {
        Transitions {
            states: states.into_iter().map(|s| (s, true)).collect(),
            complete: true,
        }
    }

    fn dedup(mut self) -> Transitions {
        let mut best: BTreeMap<State, bool> = BTreeMap::new();
        for (s, e) in self.states.drain(..) {
            let entry = best.entry(s).or_insert(false);
            *entry |= e;
        }
        Transitions { states: best.into_iter().collect(), complete: self.complete }
    }
}

/// The exact polynomial flow of a nilpotent-linear ODE system: per equation
/// variable, its value as a polynomial in initial values and time.
pub struct OdeFlow {
    pub time: Variable,
    pub sols: BTreeMap<Variable, Poly>,
}

/// Solves an ODE system whose dependency structure is strictly triangular
/// after topological sorting (acyclic, no self dependencies) by iterated
/// exact integration. `None` when the system is not of that shape.
pub fn solve_nilpotent(eqs: &[(Variable, Term)]) -> Option<OdeFlow> {
    let time = Variable::base("t__flow");
    let mut rhs: BTreeMap<Variable, Poly> = BTreeMap::new();
    for (x, e) in eqs {
        let p = poly::term_to_poly(e).ok()?;
        // right-hand sides mentioning differential symbols are out of scope
        if p.variables().iter().any(|v| v.differential) {
            return None;
        }
        rhs.insert(x.clone(), p);
    }
    let ode_vars: BTreeSet<Variable> = rhs.keys().cloned().collect();
    let mut order: Vec<Variable> = Vec::new();
    let mut remaining: BTreeSet<Variable> = ode_vars.clone();
    while !remaining.is_empty() {
        let mut progressed = false;
        for v in remaining.clone() {
            let deps = rhs[&v].variables();
            if deps.iter().all(|d| !remaining.contains(d)) {
                order.push(v.clone());
                remaining.remove(&v);
                progressed = true;
            }
        }
        if !progressed {
            return None; // cyclic dependencies: not nilpotent
        }
    }
    let mut sols: BTreeMap<Variable, Poly> = BTreeMap::new();
    for v in order {
        let integrand = rhs[&v].subst(&sols);
        if integrand
            .variables()
            .iter()
            .any(|d| ode_vars.contains(d) && !sols.contains_key(d))
        {
            return None;
        }
        let sol = integrand.integrate(&time).add(&Poly::var(v.clone()));
        sols.insert(v, sol);
    }
    Some(OdeFlow { time, sols })
}

/// Decides whether a differential-free domain formula holds at every time
/// in `[0, d]` along the flow. Exact for conjunctions of polynomial
/// comparisons; `None` when not decidable this way.
fn domain_holds_throughout(
    i: &Interp,
    s: &State,
    flow: &OdeFlow,
    domain: &Formula,
    d: &Rat,
) -> Option<bool> {
    fn atom_poly(i: &Interp, s: &State, flow: &OdeFlow, t: &Term) -> Option<Poly> {
        let resolved = resolve_term(i, t).ok()?;
        let p = diff_expand(&resolved).ok()?;
        let mut bindings: BTreeMap<Variable, Poly> = BTreeMap::new();
        for v in p.variables() {
            if v == flow.time {
                return None;
            }
            if let Some(sol) = flow.sols.get(&v) {
                bindings.insert(v.clone(), eval_poly_at_state(sol, s, &flow.time));
            } else if v.differential && flow.sols.contains_key(&Variable::base(v.name.clone()))
            {
                let sol = eval_poly_at_state(
                    &flow.sols[&Variable::base(v.name.clone())],
                    s,
                    &flow.time,
                );
                bindings.insert(v.clone(), sol.derivative(&flow.time));
            } else {
                bindings.insert(v.clone(), Poly::constant(s.get(&v)));
            }
        }
        Some(p.subst(&bindings))
    }
    fn go(i: &Interp, s: &State, flow: &OdeFlow, f: &Formula, d: &Rat) -> Option<bool> {
        match f {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::And(a, b) => Some(go(i, s, flow, a, d)? && go(i, s, flow, b, d)?),
            Formula::Cmp(op, a, b) => {
                let pa = atom_poly(i, s, flow, a)?;
                let pb = atom_poly(i, s, flow, b)?;
                if matches!(op, CmpOp::Eq) {
                    let delta = pa.sub(&pb);
                    let up = sturm::UniPoly::from_poly(&delta, &flow.time)?;
                    return Some(up.is_zero());
                }
                let diff = match op {
                    CmpOp::Le | CmpOp::Lt => pb.sub(&pa),
                    _ => pa.sub(&pb),
                };
                let up = sturm::UniPoly::from_poly(&diff, &flow.time)?;
                let strict = matches!(op, CmpOp::Lt | CmpOp::Gt);
                Some(sturm::nonneg_on(&up, &Rat::zero(), d, strict))
            }
            Formula::PredApp { name, args } => {
                let def = i.preds.get(name)?;
                if def.arity != args.len() {
                    return None;
                }
                let inlined = subst_dots_formula(&def.body, args);
                go(i, s, flow, &inlined, d)
            }
            _ => None,
        }
    }
    go(i, s, flow, domain, d)
}

/// Substitutes the state's values for all non-time variables, leaving a
/// univariate polynomial in the flow's time variable.
fn eval_poly_at_state(p: &Poly, s: &State, time: &Variable) -> Poly {
    let mut bindings: BTreeMap<Variable, Poly> = BTreeMap::new();
    for v in p.variables() {
        if &v != time {
            bindings.insert(v.clone(), Poly::constant(s.get(&v)));
        }
    }
    p.subst(&bindings)
}

/// Samples the transition relation of a program from a state.
pub fn transitions(
    i: &Interp,
    s: &State,
    p: &HybridProgram,
    cfg: &SampleConfig,
) -> Result<Transitions, OracleError> {
    let out = match p {
        HybridProgram::ProgConst(name) => {
            let table = i
                .progs
                .get(name)
                .ok_or_else(|| OracleError::UnknownSymbol(name.clone()))?;
            Transitions::exact_complete(
                table
                    .iter()
                    .filter(|(from, _)| from == s)
                    .map(|(_, to)| to.clone())
                    .collect(),
            )
        }
        HybridProgram::Test(f) => {
            let t = eval_formula(i, s, f, cfg)?;
            match t.value {
                Some(true) => Transitions {
                    states: vec![(s.clone(), t.certain)],
                    complete: t.certain,
                },
                Some(false) => Transitions { states: vec![], complete: t.certain },
                None => Transitions { states: vec![], complete: false },
            }
        }
        HybridProgram::Assign(x, e) => {
            let v = eval_term(i, s, e)?;
            Transitions::exact_complete(vec![s.with(x.clone(), v)])
        }
        HybridProgram::AssignAny(x) => Transitions {
            states: cfg
                .values
                .iter()
                .map(|v| (s.with(x.clone(), v.clone()), true))
                .collect(),
            complete: false,
        },
        HybridProgram::ODE { eqs, domain } => {
            let Some(flow) = solve_nilpotent(eqs) else {
                // unsupported dynamics: no samples, known-incomplete
                return Ok(Transitions { states: vec![], complete: false });
            };
            let mut states = Vec::new();
            for d in &cfg.durations {
                if d.is_negative() {
                    continue;
                }
                let keep = match domain_holds_throughout(i, s, &flow, domain, d) {
                    Some(true) => Some(true),
                    Some(false) => None,
                    None => {
                        let end = flow_state(i, s, &flow, eqs, d)?;
                        let t0 = eval_formula(i, s, domain, cfg)?;
                        let t1 = eval_formula(i, &end, domain, cfg)?;
                        if t0.value == Some(true) && t1.value == Some(true) {
                            Some(false)
                        } else {
                            None
                        }
                    }
                };
                if let Some(exact) = keep {
                    states.push((flow_state(i, s, &flow, eqs, d)?, exact));
                }
            }
            Transitions { states, complete: false }.dedup()
        }
        HybridProgram::Choice(a, b) => {
            let ta = transitions(i, s, a, cfg)?;
            let tb = transitions(i, s, b, cfg)?;
            Transitions {
                states: ta.states.into_iter().chain(tb.states).collect(),
                complete: ta.complete && tb.complete,
            }
            .dedup()
        }
        HybridProgram::Seq(a, b) => {
            let ta = transitions(i, s, a, cfg)?;
            let mut states = Vec::new();
            let mut complete = ta.complete;
            for (mid, e1) in &ta.states {
                let tb = transitions(i, mid, b, cfg)?;
                complete &= tb.complete;
                for (end, e2) in tb.states {
                    states.push((end, e1 & e2));
                }
                if states.len() > cfg.max_states {
                    complete = false;
                    break;
                }
            }
            Transitions { states, complete }.dedup()
        }
        HybridProgram::Loop(body) => {
            let mut seen: BTreeMap<State, bool> = BTreeMap::new();
            seen.insert(s.clone(), true);
            let mut frontier: Vec<State> = vec![s.clone()];
            let mut complete = true;
            for _ in 0..cfg.loop_unroll {
                let mut next = Vec::new();
                for st in &frontier {
                    let from_exact = seen[st];
                    let tb = transitions(i, st, body, cfg)?;
                    complete &= tb.complete;
                    for (end, e2) in tb.states {
                        let exact = from_exact & e2;
                        match seen.get_mut(&end) {
                            Some(e) => *e |= exact,
                            None => {
                                seen.insert(end.clone(), exact);
                                next.push(end);
                            }
                        }
                    }
                }
                if next.is_empty() {
                    // saturated: all reachable states are known
                    return Ok(Transitions {
                        states: seen.into_iter().collect(),
                        complete,
                    });
                }
                if seen.len() > cfg.max_states {
                    complete = false;
                    break;
                }
                frontier = next;
            }
            Transitions { states: seen.into_iter().collect(), complete: false }
        }
    };
    Ok(out)
}

/// The state after following the flow for duration `d`: equation variables
/// take their solution values and each differential symbol `x'` is
/// synchronized with its right-hand side at the final state.
fn flow_state(
    i: &Interp,
    s: &State,
    flow: &OdeFlow,
    eqs: &[(Variable, Term)],
    d: &Rat,
) -> Result<State, OracleError> {
    let mut end = s.clone();
    for (x, sol) in &flow.sols {
        let uni = eval_poly_at_state(sol, s, &flow.time);
        let val = uni.eval(&|v| if v == &flow.time { d.clone() } else { s.get(v) });
        end.set(x.clone(), val);
    }
    for (x, e) in eqs {
        let v = eval_term(i, &end, e)?;
        end.set(x.primed(), v);
    }
    Ok(end)
}

/// Three-valued reachability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tri {
    Yes,
    No,
    Maybe,
}

/// Enriches a value pool by inverting linear assignments backward from the
/// target values, so intermediate values pinned by later assignments can be
/// hit by `x:=*` sampling. Bounded and purely heuristic: every candidate is
/// still verified by forward execution.
fn backward_pool(p: &HybridProgram, target: &State, base: &[Rat], cap: usize) -> Vec<Rat> {
    fn collect_assigns<'a>(p: &'a HybridProgram, out: &mut Vec<(&'a Variable, &'a Term)>) {
        match p {
            HybridProgram::Assign(x, e) => out.push((x, e)),
            HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
                collect_assigns(a, out);
                collect_assigns(b, out);
            }
            HybridProgram::Loop(a) => collect_assigns(a, out),
            _ => {}
        }
    }
    let mut assigns = Vec::new();
    collect_assigns(p, &mut assigns);
    let mut pool: Vec<Rat> = base.to_vec();
    for (_, v) in target.support() {
        if !pool.contains(v) {
            pool.push(v.clone());
        }
    }
    for _round in 0..3 {
        let snapshot = pool.clone();
        for (x, e) in &assigns {
            let Ok(pe) = poly::term_to_poly(e) else { continue };
            if pe.terms.keys().any(|m| m.values().sum::<u32>() > 1) {
                continue; // nonlinear
            }
            let coeffs = pe.coeffs_in(x);
            if coeffs.len() != 2 {
                continue;
            }
            let Some(c) = coeffs[1].constant_value() else { continue };
            if c.is_zero() {
                continue;
            }
            let rest = &coeffs[0];
            let others: Vec<Variable> = rest.variables().into_iter().collect();
            if others.len() > 2 {
                continue;
            }
            // candidate values for the other variables
            let cands: Vec<Vec<Rat>> = others
                .iter()
                .map(|v| {
                    let mut c = vec![Rat::zero(), target.get(v)];
                    c.dedup();
                    c
                })
                .collect();
            let mut combos: Vec<BTreeMap<Variable, Rat>> = vec![BTreeMap::new()];
            for (v, vals) in others.iter().zip(&cands) {
                let mut next = Vec::new();
                for combo in &combos {
                    for val in vals {
                        let mut c = combo.clone();
                        c.insert(v.clone(), val.clone());
                        next.push(c);
                    }
                }
                combos = next;
            }
            for post in &snapshot {
                for combo in &combos {
                    let r = rest.eval(&|v| combo.get(v).cloned().unwrap_or_else(Rat::zero));
                    let pre = (post - r) / c.clone();
                    if !pool.contains(&pre) {
                        pool.push(pre);
                        if pool.len() >= cap {
                            return pool;
                        }
                    }
                }
            }
        }
    }
    pool
}

/// Reachability with a target-guided value pool derived up front.
pub fn reaches_guided(
    i: &Interp,
    s: &State,
    p: &HybridProgram,
    target: &State,
    cfg: &SampleConfig,
) -> Result<Tri, OracleError> {
    let pool = backward_pool(p, target, &cfg.values, 200);
    let guided = cfg.clone().with_values(pool);
    reaches(i, s, p, target, &guided)
}

/// Decides whether `target` is reachable from `s` by `p`, erring on the
/// side of `Maybe`. `Yes` and `No` answers are exact.
pub fn reaches(
    i: &Interp,
    s: &State,
    p: &HybridProgram,
    target: &State,
    cfg: &SampleConfig,
) -> Result<Tri, OracleError> {
    // bound effect: transitions agree with the start state outside bv(p)
    let frame = crate::statics::bv(p);
    if !s.agrees_except(target, &|v| frame.contains(v)) {
        return Ok(Tri::No);
    }
    let r = match p {
        HybridProgram::ProgConst(name) => {
            let table = i
                .progs
                .get(name)
                .ok_or_else(|| OracleError::UnknownSymbol(name.clone()))?;
            if table.iter().any(|(from, to)| from == s && to == target) {
                Tri::Yes
            } else {
                Tri::No
            }
        }
        HybridProgram::Test(f) => {
            if s != target {
                Tri::No
            } else {
                match eval_formula(i, s, f, cfg)? {
                    t if t.definitely_true() => Tri::Yes,
                    t if t.definitely_false() => Tri::No,
                    _ => Tri::Maybe,
                }
            }
        }
        HybridProgram::Assign(x, e) => {
            let v = eval_term(i, s, e)?;
            if &s.with(x.clone(), v) == target {
                Tri::Yes
            } else {
                Tri::No
            }
        }
        HybridProgram::AssignAny(x) => {
            if &s.with(x.clone(), target.get(x)) == target {
                Tri::Yes
            } else {
                Tri::No
            }
        }
        HybridProgram::ODE { eqs, domain } => ode_reaches(i, s, eqs, domain, target, cfg)?,
        HybridProgram::Choice(a, b) => {
            match (reaches(i, s, a, target, cfg)?, reaches(i, s, b, target, cfg)?) {
                (Tri::Yes, _) | (_, Tri::Yes) => Tri::Yes,
                (Tri::No, Tri::No) => Tri::No,
                _ => Tri::Maybe,
            }
        }
        HybridProgram::Seq(a, b) => seq_reaches(i, s, a, b, target, cfg)?,
        HybridProgram::Loop(body) => {
            if s == target {
                return Ok(Tri::Yes);
            }
            if ends_in_ode_and_fails(i, body, target, cfg)? {
                return Ok(Tri::No);
            }
            let mut seen: BTreeSet<State> = [s.clone()].into();
            let mut frontier = vec![s.clone()];
            let mut all_complete = true;
            for _ in 0..cfg.loop_unroll {
                let mut next = Vec::new();
                for st in &frontier {
                    if reaches_step(i, st, body, target, cfg)? == Tri::Yes {
                        return Ok(Tri::Yes);
                    }
                    let tb = transitions(i, st, body, cfg)?;
                    all_complete &= tb.complete;
                    for (end, _) in tb.states {
                        if seen.insert(end.clone()) {
                            next.push(end);
                        }
                    }
                }
                if next.is_empty() {
                    return Ok(if all_complete { Tri::No } else { Tri::Maybe });
                }
                frontier = next;
            }
            Tri::Maybe
        }
    };
    Ok(r)
}

fn reaches_step(
    i: &Interp,
    s: &State,
    body: &HybridProgram,
    target: &State,
    cfg: &SampleConfig,
) -> Result<Tri, OracleError> {
    reaches(i, s, body, target, cfg)
}

/// Sequential reachability with target-guided value pools: the chosen
/// values for nondeterministic assignments include every coordinate of the
/// endpoints, so pinned intermediates can be hit.
fn seq_reaches(
    i: &Interp,
    s: &State,
    a: &HybridProgram,
    b: &HybridProgram,
    target: &State,
    cfg: &SampleConfig,
) -> Result<Tri, OracleError> {
    let guided = cfg
        .clone()
        .with_values(target.support().map(|(_, v)| v.clone()).collect::<Vec<_>>())
        .with_values(s.support().map(|(_, v)| v.clone()).collect::<Vec<_>>());
    // Nondeterministic assignments whose variable is never rewritten later
    // are fully determined by the target; route them through the exact
    // branch to keep `No` answers sound.
    if let HybridProgram::AssignAny(x) = a {
        let mid = s.with(x.clone(), target.get(x));
        let direct = reaches(i, &mid, b, target, &guided)?;
        match direct {
            Tri::Yes => return Ok(Tri::Yes),
            // other values could still matter if b rewrites x
            Tri::No | Tri::Maybe => {}
        }
        if !bv_mentions(b, x) {
            // the only candidate intermediate was mid
            return Ok(direct);
        }
    }
    let ta = transitions(i, s, a, &guided)?;
    let mut any_maybe = !ta.complete;
    for (mid, exact) in &ta.states {
        match reaches(i, mid, b, target, &guided)? {
            Tri::Yes if *exact => return Ok(Tri::Yes),
            Tri::Yes | Tri::Maybe => any_maybe = true,
            Tri::No => {}
        }
    }
    Ok(if any_maybe { Tri::Maybe } else { Tri::No })
}

fn bv_mentions(p: &HybridProgram, x: &Variable) -> bool {
    crate::statics::bv(p).contains(x)
}

/// True when every terminal construct of `body` is an ODE whose end-state
/// necessary conditions (differential symbol synchronization, final domain)
/// certainly fail at `target`.
fn ends_in_ode_and_fails(
    i: &Interp,
    body: &HybridProgram,
    target: &State,
    cfg: &SampleConfig,
) -> Result<bool, OracleError> {
    match body {
        HybridProgram::Seq(_, b) => ends_in_ode_and_fails(i, b, target, cfg),
        HybridProgram::Choice(a, b) => Ok(ends_in_ode_and_fails(i, a, target, cfg)?
            && ends_in_ode_and_fails(i, b, target, cfg)?),
        HybridProgram::ODE { eqs, domain } => {
            for (x, e) in eqs {
                match eval_term(i, target, e) {
                    Ok(v) => {
                        if target.get(&x.primed()) != v {
                            return Ok(true);
                        }
                    }
                    Err(_) => return Ok(false),
                }
            }
            let dom = eval_formula(i, target, domain, cfg)?;
            Ok(dom.definitely_false())
        }
        _ => Ok(false),
    }
}

fn ode_reaches(
    i: &Interp,
    s: &State,
    eqs: &[(Variable, Term)],
    domain: &Formula,
    target: &State,
    cfg: &SampleConfig,
) -> Result<Tri, OracleError> {
    let changed: BTreeSet<Variable> = eqs
        .iter()
        .flat_map(|(x, _)| [x.clone(), x.primed()])
        .collect();
    if !s.agrees_except(target, &|v| changed.contains(v)) {
        return Ok(Tri::No);
    }
    for (x, e) in eqs {
        let v = eval_term(i, target, e)?;
        if target.get(&x.primed()) != v {
            return Ok(Tri::No);
        }
    }
    let dom_end = eval_formula(i, target, domain, cfg)?;
    if dom_end.definitely_false() {
        return Ok(Tri::No);
    }
    let Some(flow) = solve_nilpotent(eqs) else {
        return Ok(Tri::Maybe);
    };
    // Candidate durations: configured samples plus durations solved from
    // coordinates whose flow is linear in time with constant nonzero slope.
    let mut candidates: Vec<Rat> = cfg.durations.clone();
    let mut determined = false;
    for (x, sol) in &flow.sols {
        let uni = eval_poly_at_state(sol, s, &flow.time);
        let coeffs = uni.coeffs_in(&flow.time);
        if coeffs.len() == 2 {
            if let Some(slope) = coeffs[1].constant_value() {
                if !slope.is_zero() {
                    let d = (target.get(x) - s.get(x)) / slope;
                    if !candidates.contains(&d) {
                        candidates.push(d.clone());
                    }
                    determined = true;
                }
            }
        }
    }
    let mut saw_undecidable_domain = false;
    for d in &candidates {
        if d.is_negative() {
            continue;
        }
        let end = flow_state(i, s, &flow, eqs, d)?;
        if &end == target {
            match domain_holds_throughout(i, s, &flow, domain, d) {
                Some(true) => return Ok(Tri::Yes),
                Some(false) => continue,
                None => saw_undecidable_domain = true,
            }
        }
    }
    if saw_undecidable_domain {
        Ok(Tri::Maybe)
    } else if determined {
        // some coordinate uniquely pins the duration; no candidate worked
        Ok(Tri::No)
    } else {
        Ok(Tri::Maybe)
    }
}

/// A refinement counterexample: from `initial`, the left program reaches
/// `target` but the right one cannot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub initial: State,
    pub target: State,
}

/// Searches for a state pair witnessing that `a` does not refine `b`.
/// Deterministic for a fixed seed.
pub fn falsify_refinement(
    i: &Interp,
    a: &HybridProgram,
    b: &HybridProgram,
    trials: usize,
    seed: u64,
) -> Result<Option<Counterexample>, OracleError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let mut pool: Vec<Rat> = Vec::new();
    harvest_constants_program(a, &mut pool);
    harvest_constants_program(b, &mut pool);
    let cfg = SampleConfig::default().with_values(pool);

    let mut vars: BTreeSet<Variable> = BTreeSet::new();
    vars_of_program(a, &mut vars);
    vars_of_program(b, &mut vars);

    for _ in 0..trials {
        let mut s = State::new();
        for v in &vars {
            let val = random_rat(&mut rng, &cfg.values);
            s.set(v.clone(), val);
        }
        if let Some(ce) = falsify_from(i, &s, a, b, &cfg)? {
            return Ok(Some(ce));
        }
    }
    Ok(None)
}

/// Checks a single initial state for a refinement counterexample.
pub fn falsify_from(
    i: &Interp,
    s: &State,
    a: &HybridProgram,
    b: &HybridProgram,
    cfg: &SampleConfig,
) -> Result<Option<Counterexample>, OracleError> {
    let ta = transitions(i, s, a, cfg)?;
    for (target, exact) in &ta.states {
        if !exact {
            continue;
        }
        if reaches_guided(i, s, b, target, cfg)? == Tri::No {
            return Ok(Some(Counterexample {
                initial: s.clone(),
                target: target.clone(),
            }));
        }
    }
    Ok(None)
}

/// Replays a counterexample: the target must be a confirmed transition of
/// `a`, and a bounded target-guided search over `b`'s branchings must fail
/// to reach it.
pub fn witness_replays(
    i: &Interp,
    ce: &Counterexample,
    a: &HybridProgram,
    b: &HybridProgram,
    cfg: &SampleConfig,
) -> Result<bool, OracleError> {
    let in_a = reaches_guided(i, &ce.initial, a, &ce.target, cfg)? == Tri::Yes;
    let in_b = reaches_guided(i, &ce.initial, b, &ce.target, cfg)? == Tri::Yes;
    Ok(in_a && !in_b)
}

pub fn random_rat(rng: &mut impl Rng, pool: &[Rat]) -> Rat {
    if rng.gen_bool(0.7) && !pool.is_empty() {
        pool[rng.gen_range(0..pool.len())].clone()
    } else {
        let num: i64 = rng.gen_range(-8..=8);
        let den: i64 = rng.gen_range(1..=4);
        Rat::new(num.into(), den.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_program, parse_term};

    fn st(pairs: &[(&str, i64)]) -> State {
        State::from_pairs(pairs)
    }

    #[test]
    fn eval_term_examples() {
        let i = Interp::default();
        let s = st(&[("x", 1)]).with(Variable::base("y"), Rat::new(1.into(), 4.into()));
        let v = eval_term(&i, &s, &parse_term("x+2*y").unwrap()).unwrap();
        assert_eq!(v, Rat::new(3.into(), 2.into()));
    }

    #[test]
    fn differential_evaluation() {
        let i = Interp::default();
        // (x*x)' with x=3, x'=2 gives 2 * (2*3) = 12
        let s = st(&[("x", 3), ("x'", 2)]);
        let v = eval_term(&i, &s, &parse_term("(x*x)'").unwrap()).unwrap();
        assert_eq!(v, Rat::from_integer(12.into()));
        let c = eval_term(&i, &s, &parse_term("(5)'").unwrap()).unwrap();
        assert_eq!(c, Rat::zero());
        let f = Interp::default().func("c", 0, "7");
        let c2 = eval_term(&f, &s, &parse_term("(c())'").unwrap()).unwrap();
        assert_eq!(c2, Rat::zero());
    }

    #[test]
    fn formula_truth() {
        let i = Interp::default();
        let cfg = SampleConfig::default();
        let neg = st(&[("x", -1)]);
        let t = eval_formula(&i, &neg, &parse_formula("x>=0").unwrap(), &cfg).unwrap();
        assert!(t.definitely_false());
        let t = eval_formula(
            &i,
            &State::new(),
            &parse_formula("\\forall y y*y>=0").unwrap(),
            &cfg,
        )
        .unwrap();
        assert_eq!(t.value, Some(true));
        assert!(!t.certain);
    }

    #[test]
    fn refinement_truth_flips_with_state() {
        let i = Interp::default();
        let cfg = SampleConfig::default();
        let f = parse_formula("{?true} refines {x:=1}").unwrap();
        let at1 = eval_formula(&i, &st(&[("x", 1)]), &f, &cfg).unwrap();
        assert!(at1.definitely_true());
        let at0 = eval_formula(&i, &st(&[("x", 0)]), &f, &cfg).unwrap();
        assert!(at0.definitely_false());
    }

    #[test]
    fn transitions_choice() {
        let i = Interp::default();
        let cfg = SampleConfig::default();
        let p = parse_program("x:=1 ++ x:=2").unwrap();
        let tr = transitions(&i, &State::new(), &p, &cfg).unwrap();
        assert!(tr.complete);
        let states: Vec<State> = tr.states.iter().map(|(s, _)| s.clone()).collect();
        assert!(states.contains(&st(&[("x", 1)])));
        assert!(states.contains(&st(&[("x", 2)])));
        assert_eq!(states.len(), 2);
    }

    #[test]
    fn nilpotent_ode_flow() {
        let i = Interp::default();
        let cfg = SampleConfig {
            durations: vec![Rat::from_integer(1.into())],
            ..SampleConfig::default()
        };
        let p = parse_program("{x'=v, v'=a, t'=1}").unwrap();
        let s = st(&[("x", 0), ("v", 1), ("a", 2), ("t", 0)]);
        let tr = transitions(&i, &s, &p, &cfg).unwrap();
        let expect = st(&[
            ("x", 2),
            ("v", 3),
            ("a", 2),
            ("t", 1),
            ("x'", 3),
            ("v'", 2),
            ("t'", 1),
        ]);
        assert!(
            tr.states.iter().any(|(s, exact)| s == &expect && *exact),
            "got {:?}",
            tr.states
        );
    }

    #[test]
    fn ode_differential_symbol_distinguishes_slopes() {
        let i = Interp::default();
        let a = parse_program("{x'=1}").unwrap();
        let b = parse_program("{x'=2}").unwrap();
        let ce = falsify_refinement(&i, &a, &b, 20, 7).unwrap();
        let ce = ce.expect("slope mismatch should falsify");
        assert_eq!(ce.target.get(&Variable::diff("x")), Rat::from_integer(1.into()));
    }

    #[test]
    fn falsifier_finds_test_vs_assign() {
        let i = Interp::default();
        let a = parse_program("?true").unwrap();
        let b = parse_program("x:=1").unwrap();
        let ce = falsify_refinement(&i, &a, &b, 50, 3).unwrap();
        let ce = ce.expect("counterexample expected");
        assert_eq!(ce.initial, ce.target);
        assert_ne!(ce.target.get(&Variable::base("x")), Rat::from_integer(1.into()));
    }

    #[test]
    fn falsifier_accepts_branch_inclusion() {
        let i = Interp::default();
        let a = parse_program("x:=1").unwrap();
        let b = parse_program("x:=1 ++ x:=2").unwrap();
        assert_eq!(falsify_refinement(&i, &a, &b, 60, 5).unwrap(), None);
    }

    #[test]
    fn loop_saturation_is_complete() {
        let i = Interp::default();
        let cfg = SampleConfig::default();
        let p = parse_program("{x:=1 ++ x:=2}*").unwrap();
        let tr = transitions(&i, &st(&[("x", 5)]), &p, &cfg).unwrap();
        assert!(tr.complete);
        assert_eq!(tr.states.len(), 3);
    }

    #[test]
    fn reaches_guides_intermediate_values() {
        let i = Interp::default();
        let cfg = SampleConfig::default();
        let p = parse_program("x:=*; ?x>=10; x:=x+1").unwrap();
        let target = st(&[("x", 42)]);
        assert_eq!(reaches_guided(&i, &State::new(), &p, &target, &cfg).unwrap(), Tri::Yes);
        // x=5 would need an intermediate below the test threshold; the
        // bounded search cannot prove impossibility, only fail to find it
        let nope = st(&[("x", 5)]);
        assert_ne!(reaches_guided(&i, &State::new(), &p, &nope, &cfg).unwrap(), Tri::Yes);
        // a touched frame variable is ruled out exactly
        let off_frame = st(&[("x", 42), ("y", 1)]);
        assert_eq!(reaches_guided(&i, &State::new(), &p, &off_frame, &cfg).unwrap(), Tri::No);
    }

    #[test]
    fn prog_const_uses_fixture_table() {
        let mut i = Interp::default();
        let from = st(&[("x", 0)]);
        let to = st(&[("x", 9)]);
        i.progs.insert("a".to_string(), vec![(from.clone(), to.clone())]);
        let p = parse_program("a").unwrap();
        let cfg = SampleConfig::default();
        let tr = transitions(&i, &from, &p, &cfg).unwrap();
        assert!(tr.complete);
        assert_eq!(tr.states, vec![(to, true)]);
    }

    #[test]
    fn domain_violation_blocks_ode() {
        let i = Interp::default();
        let cfg = SampleConfig {
            durations: vec![Rat::from_integer(0.into()), Rat::from_integer(2.into())],
            ..SampleConfig::default()
        };
        let p = parse_program("{t'=1 & t<=1}").unwrap();
        let tr = transitions(&i, &st(&[]), &p, &cfg).unwrap();
        assert_eq!(tr.states.len(), 1, "{:?}", tr.states);
        assert!(tr.states[0].1, "duration-0 transition is exact");
    }
}
