//! Validity for first-order linear real arithmetic: Gauss elimination on
//! equalities plus Fourier-Motzkin on inequalities, with exact rational
//! witnesses for invalid sentences.
//!
//! Terms that are not linear polynomials (uninterpreted function
//! applications, differentials) are abstracted to fresh pseudo-variables
//! when their free variables are not captured by a surrounding quantifier;
//! identical terms share a pseudo-variable. The abstraction keeps `Valid`
//! answers sound. A satisfying assignment of the negation that involves
//! abstracted terms may not be realizable, so such results degrade to
//! `Unknown` instead of `Invalid`.
//!
//! Everything here is deterministic: no randomness, ordered maps only.

use crate::oracle::Rat;
use crate::statics::fv_term;
use crate::syntax::{print_term, CmpOp, Formula, Term, Variable};
use num::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LinError {
    #[error("nonlinear term: {0}")]
    Nonlinear(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("atom budget exceeded ({0} atoms)")]
    Budget(usize),
}

/// A linear expression `constant + sum coeff_i * key_i` over variable keys.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub constant: Rat,
    pub coeffs: BTreeMap<String, Rat>,
}

impl LinExpr {
    pub fn constant(c: Rat) -> LinExpr {
        LinExpr { constant: c, coeffs: BTreeMap::new() }
    }

    pub fn var(key: &str) -> LinExpr {
        LinExpr {
            constant: Rat::zero(),
            coeffs: [(key.to_string(), Rat::from_integer(1.into()))].into_iter().collect(),
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.constant += other.constant.clone();
        for (k, v) in &other.coeffs {
            let e = out.coeffs.entry(k.clone()).or_insert_with(Rat::zero);
            *e += v;
            if e.is_zero() {
                out.coeffs.remove(k);
            }
        }
        out
    }

    pub fn neg(&self) -> LinExpr {
        LinExpr {
            constant: -self.constant.clone(),
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), -v.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> LinExpr {
        if c.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            constant: &self.constant * c,
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn coeff(&self, key: &str) -> Rat {
        self.coeffs.get(key).cloned().unwrap_or_else(Rat::zero)
    }

    /// Removes `key` and adds `coeff * repl`.
    pub fn subst(&self, key: &str, repl: &LinExpr) -> LinExpr {
        let c = self.coeff(key);
        if c.is_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        out.coeffs.remove(key);
        out.add(&repl.scale(&c))
    }

    pub fn eval(&self, env: &BTreeMap<String, Rat>) -> Rat {
        let mut acc = self.constant.clone();
        for (k, v) in &self.coeffs {
            acc += v * env.get(k).cloned().unwrap_or_else(Rat::zero);
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Relation of an atom against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Le,
    Lt,
}

/// A normalized atom `expr rel 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinAtom {
    pub expr: LinExpr,
    pub rel: Rel,
}

impl LinAtom {
    fn holds(&self, env: &BTreeMap<String, Rat>) -> bool {
        let v = self.expr.eval(env);
        match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Le => v <= Rat::zero(),
            Rel::Lt => v < Rat::zero(),
        }
    }

    fn ground_truth(&self) -> Option<bool> {
        if self.expr.is_constant() {
            Some(self.holds(&BTreeMap::new()))
        } else {
            None
        }
    }
}

/// Linear formulas: boolean combinations of linear atoms plus quantifiers
/// over variable keys.
#[derive(Clone, Debug, PartialEq)]
pub enum LinFormula {
    True,
    False,
    Atom(LinAtom),
    Not(Box<LinFormula>),
    And(Box<LinFormula>, Box<LinFormula>),
    Or(Box<LinFormula>, Box<LinFormula>),
    Exists(String, Box<LinFormula>),
    Forall(String, Box<LinFormula>),
}

impl LinFormula {
    fn not(f: LinFormula) -> LinFormula {
        LinFormula::Not(Box::new(f))
    }

    fn and(a: LinFormula, b: LinFormula) -> LinFormula {
        LinFormula::And(Box::new(a), Box::new(b))
    }

    fn or(a: LinFormula, b: LinFormula) -> LinFormula {
        LinFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn free_keys(&self) -> BTreeSet<String> {
        fn go(f: &LinFormula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                LinFormula::True | LinFormula::False => {}
                LinFormula::Atom(a) => {
                    for k in a.expr.coeffs.keys() {
                        if !bound.contains(k) {
                            out.insert(k.clone());
                        }
                    }
                }
                LinFormula::Not(a) => go(a, bound, out),
                LinFormula::And(a, b) | LinFormula::Or(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                LinFormula::Exists(k, a) | LinFormula::Forall(k, a) => {
                    bound.push(k.clone());
                    go(a, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Exact evaluation under an assignment (quantifier-free only).
    pub fn eval_qf(&self, env: &BTreeMap<String, Rat>) -> Option<bool> {
        match self {
            LinFormula::True => Some(true),
            LinFormula::False => Some(false),
            LinFormula::Atom(a) => Some(a.holds(env)),
            LinFormula::Not(a) => a.eval_qf(env).map(|b| !b),
            LinFormula::And(a, b) => Some(a.eval_qf(env)? && b.eval_qf(env)?),
            LinFormula::Or(a, b) => Some(a.eval_qf(env)? || b.eval_qf(env)?),
            LinFormula::Exists(..) | LinFormula::Forall(..) => None,
        }
    }
}

/// Result of a validity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    /// A falsifying assignment for the universal closure.
    Invalid(BTreeMap<Variable, Rat>),
    Unknown(String),
}

/// Budget configuration.
#[derive(Clone, Copy, Debug)]
pub struct ArithConfig {
    pub atom_budget: usize,
}

impl Default for ArithConfig {
    fn default() -> Self {
        ArithConfig { atom_budget: 50_000 }
    }
}

// ---------------------------------------------------------------- linearize

struct Linearizer {
    /// stack of (source variable, unique key) for quantifier scopes
    scopes: Vec<(Variable, String)>,
    counter: usize,
    abstracted: bool,
}

fn var_key(v: &Variable) -> String {
    if v.differential {
        format!("{}'", v.name)
    } else {
        v.name.clone()
    }
}

impl Linearizer {
    fn new() -> Linearizer {
        Linearizer { scopes: Vec::new(), counter: 0, abstracted: false }
    }

    fn lookup(&self, v: &Variable) -> String {
        for (sv, key) in self.scopes.iter().rev() {
            if sv == v {
                return key.clone();
            }
        }
        var_key(v)
    }

    fn term(&mut self, t: &Term) -> Result<LinExpr, LinError> {
        match t {
            Term::Var(v) => Ok(LinExpr::var(&self.lookup(v))),
            Term::Number(n) => Ok(LinExpr::constant(n.clone())),
            Term::Dot(_) => Err(LinError::Unsupported("dot placeholder".to_string())),
            Term::Plus(a, b) => Ok(self.term(a)?.add(&self.term(b)?)),
            Term::Minus(a, b) => Ok(self.term(a)?.sub(&self.term(b)?)),
            Term::Neg(a) => Ok(self.term(a)?.neg()),
            Term::Times(a, b) => {
                let la = self.term(a)?;
                let lb = self.term(b)?;
                if la.is_constant() {
                    Ok(lb.scale(&la.constant))
                } else if lb.is_constant() {
                    Ok(la.scale(&lb.constant))
                } else {
                    Err(LinError::Nonlinear(print_term(t)))
                }
            }
            Term::FuncApp { .. } | Term::Differential(_) => self.abstract_term(t),
        }
    }

    /// Maps an opaque term to a pseudo-variable, provided none of its free
    /// variables is bound by a quantifier in scope (instantiating the
    /// pseudo-variable later would be capture-unsound otherwise).
    fn abstract_term(&mut self, t: &Term) -> Result<LinExpr, LinError> {
        let fv = fv_term(t);
        for (sv, _) in &self.scopes {
            if fv.contains(sv) {
                return Err(LinError::Unsupported(format!(
                    "term {} mentions quantified variable {}",
                    print_term(t),
                    sv
                )));
            }
        }
        self.abstracted = true;
        Ok(LinExpr::var(&format!("#{}", print_term(t))))
    }

    fn formula(&mut self, f: &Formula) -> Result<LinFormula, LinError> {
        match f {
            Formula::True => Ok(LinFormula::True),
            Formula::False => Ok(LinFormula::False),
            Formula::Cmp(op, a, b) => {
                let la = self.term(a)?;
                let lb = self.term(b)?;
                let atom = |expr: LinExpr, rel: Rel| LinFormula::Atom(LinAtom { expr, rel });
                Ok(match op {
                    CmpOp::Le => atom(la.sub(&lb), Rel::Le),
                    CmpOp::Lt => atom(la.sub(&lb), Rel::Lt),
                    CmpOp::Eq => atom(la.sub(&lb), Rel::Eq),
                    CmpOp::Ge => atom(lb.sub(&la), Rel::Le),
                    CmpOp::Gt => atom(lb.sub(&la), Rel::Lt),
                })
            }
            Formula::Not(a) => Ok(LinFormula::not(self.formula(a)?)),
            Formula::And(a, b) => Ok(LinFormula::and(self.formula(a)?, self.formula(b)?)),
            Formula::Or(a, b) => Ok(LinFormula::or(self.formula(a)?, self.formula(b)?)),
            Formula::Imply(a, b) => Ok(LinFormula::or(
                LinFormula::not(self.formula(a)?),
                self.formula(b)?,
            )),
            Formula::Equiv(a, b) => {
                let la = self.formula(a)?;
                let lb = self.formula(b)?;
                Ok(LinFormula::or(
                    LinFormula::and(la.clone(), lb.clone()),
                    LinFormula::and(LinFormula::not(la), LinFormula::not(lb)),
                ))
            }
            Formula::Forall(x, a) => {
                self.counter += 1;
                let key = format!("{}%{}", var_key(x), self.counter);
                self.scopes.push((x.clone(), key.clone()));
                let body = self.formula(a);
                self.scopes.pop();
                Ok(LinFormula::Forall(key, Box::new(body?)))
            }
            Formula::Exists(x, a) => {
                self.counter += 1;
                let key = format!("{}%{}", var_key(x), self.counter);
                self.scopes.push((x.clone(), key.clone()));
                let body = self.formula(a);
                self.scopes.pop();
                Ok(LinFormula::Exists(key, Box::new(body?)))
            }
            Formula::PredApp { name, .. } => {
                Err(LinError::Unsupported(format!("predicate symbol {name}")))
            }
            Formula::Predicational(name) => {
                Err(LinError::Unsupported(format!("predicational {name}")))
            }
            Formula::Box_(..) | Formula::Diamond(..) | Formula::Refines(..)
            | Formula::ProgEquiv(..) => {
                Err(LinError::Unsupported("modality or refinement".to_string()))
            }
        }
    }
}

/// Normalizes a modality-free, refinement-free formula into a linear
/// formula. Fails on nonlinear monomials.
pub fn linearize(f: &Formula) -> Result<LinFormula, LinError> {
    let mut lin = Linearizer::new();
    lin.formula(&one_point(&f.desugar()))
}

fn linearize_with_flag(f: &Formula) -> Result<(LinFormula, bool), LinError> {
    let mut lin = Linearizer::new();
    let out = lin.formula(&one_point(&f.desugar()))?;
    Ok((out, lin.abstracted))
}

// ----------------------------------------------------------- one-point rule

/// Rewrites `exists y (y = t & R)` to `R[y := t]` and
/// `forall y (y = t & G -> C)` to `(G -> C)[y := t]` where `y` is not free
/// in `t` and the substitution is capture-free. Applied bottom-up; this is
/// what makes quantifiers over defined values tractable even when the
/// defining term is not linear.
pub fn one_point(f: &Formula) -> Formula {
    let g = map_subformulas(f, &one_point);
    match &g {
        Formula::Exists(y, body) => {
            let mut conjuncts = Vec::new();
            flatten_and(body, &mut conjuncts);
            for (i, c) in conjuncts.iter().enumerate() {
                if let Some(t) = defining_eq(c, y) {
                    let rest: Vec<Formula> = conjuncts
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, f)| (*f).clone())
                        .collect();
                    let remaining = rebuild_and(rest);
                    if let Some(out) = subst_var(&remaining, y, &t) {
                        return out;
                    }
                }
            }
            g
        }
        Formula::Forall(y, body) => {
            if let Formula::Imply(ante, cons) = &**body {
                let mut conjuncts = Vec::new();
                flatten_and(ante, &mut conjuncts);
                for (i, c) in conjuncts.iter().enumerate() {
                    if let Some(t) = defining_eq(c, y) {
                        let rest: Vec<Formula> = conjuncts
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .map(|(_, f)| (*f).clone())
                            .collect();
                        let new_body = if rest.is_empty() {
                            (**cons).clone()
                        } else {
                            Formula::imply(rebuild_and(rest), (**cons).clone())
                        };
                        if let Some(out) = subst_var(&new_body, y, &t) {
                            return out;
                        }
                    }
                }
            }
            g
        }
        _ => g,
    }
}

fn map_subformulas(f: &Formula, m: &dyn Fn(&Formula) -> Formula) -> Formula {
    match f {
        Formula::Not(a) => Formula::not(m(a)),
        Formula::And(a, b) => Formula::and(m(a), m(b)),
        Formula::Or(a, b) => Formula::or(m(a), m(b)),
        Formula::Imply(a, b) => Formula::imply(m(a), m(b)),
        Formula::Equiv(a, b) => Formula::equiv(m(a), m(b)),
        Formula::Forall(x, a) => Formula::forall(x.clone(), m(a)),
        Formula::Exists(x, a) => Formula::exists(x.clone(), m(a)),
        other => other.clone(),
    }
}

fn flatten_and<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    if let Formula::And(a, b) = f {
        flatten_and(a, out);
        flatten_and(b, out);
    } else {
        out.push(f);
    }
}

fn rebuild_and(mut fs: Vec<Formula>) -> Formula {
    if fs.is_empty() {
        return Formula::True;
    }
    let first = fs.remove(0);
    fs.into_iter().fold(first, Formula::and)
}

fn defining_eq(c: &Formula, y: &Variable) -> Option<Term> {
    if let Formula::Cmp(CmpOp::Eq, lhs, rhs) = c {
        if lhs == &Term::Var(y.clone()) && !fv_term(rhs).contains(y) {
            return Some(rhs.clone());
        }
        if rhs == &Term::Var(y.clone()) && !fv_term(lhs).contains(y) {
            return Some(lhs.clone());
        }
    }
    None
}

/// Capture-checked substitution of a term for a variable in a first-order
/// formula. `None` when a binder would capture a variable of `t`.
fn subst_var(f: &Formula, y: &Variable, t: &Term) -> Option<Formula> {
    fn term(u: &Term, y: &Variable, t: &Term) -> Term {
        match u {
            Term::Var(v) if v == y => t.clone(),
            Term::Var(_) | Term::Number(_) | Term::Dot(_) => u.clone(),
            Term::FuncApp { name, args } => Term::FuncApp {
                name: name.clone(),
                args: args.iter().map(|a| term(a, y, t)).collect(),
            },
            Term::Plus(a, b) => Term::plus(term(a, y, t), term(b, y, t)),
            Term::Minus(a, b) => Term::minus(term(a, y, t), term(b, y, t)),
            Term::Times(a, b) => Term::times(term(a, y, t), term(b, y, t)),
            Term::Neg(a) => Term::Neg(Box::new(term(a, y, t))),
            Term::Differential(a) => Term::Differential(Box::new(term(a, y, t))),
        }
    }
    match f {
        Formula::True | Formula::False => Some(f.clone()),
        Formula::Cmp(op, a, b) => Some(Formula::Cmp(*op, term(a, y, t), term(b, y, t))),
        Formula::PredApp { name, args } => Some(Formula::PredApp {
            name: name.clone(),
            args: args.iter().map(|a| term(a, y, t)).collect(),
        }),
        Formula::Predicational(_) => None, // depends on all variables
        Formula::Not(a) => Some(Formula::not(subst_var(a, y, t)?)),
        Formula::And(a, b) => Some(Formula::and(subst_var(a, y, t)?, subst_var(b, y, t)?)),
        Formula::Or(a, b) => Some(Formula::or(subst_var(a, y, t)?, subst_var(b, y, t)?)),
        Formula::Imply(a, b) => Some(Formula::imply(subst_var(a, y, t)?, subst_var(b, y, t)?)),
        Formula::Equiv(a, b) => Some(Formula::equiv(subst_var(a, y, t)?, subst_var(b, y, t)?)),
        Formula::Forall(x, a) | Formula::Exists(x, a) => {
            if x == y {
                return Some(f.clone()); // shadowed
            }
            if fv_term(t).contains(x) {
                return None; // would capture
            }
            let body = subst_var(a, y, t)?;
            Some(match f {
                Formula::Forall(..) => Formula::forall(x.clone(), body),
                _ => Formula::exists(x.clone(), body),
            })
        }
        // modalities bind program variables; bail out conservatively
        Formula::Box_(..) | Formula::Diamond(..) | Formula::Refines(..)
        | Formula::ProgEquiv(..) => None,
    }
}

// ------------------------------------------------------- quantifier elim

/// Negation-normal form with atoms only; `!=` splits into two strict
/// disjuncts.
fn nnf(f: &LinFormula, positive: bool) -> LinFormula {
    match f {
        LinFormula::True => {
            if positive {
                LinFormula::True
            } else {
                LinFormula::False
            }
        }
        LinFormula::False => {
            if positive {
                LinFormula::False
            } else {
                LinFormula::True
            }
        }
        LinFormula::Atom(a) => {
            if positive {
                LinFormula::Atom(a.clone())
            } else {
                match a.rel {
                    // not(e <= 0)  ==  -e < 0
                    Rel::Le => LinFormula::Atom(LinAtom { expr: a.expr.neg(), rel: Rel::Lt }),
                    // not(e < 0)  ==  -e <= 0
                    Rel::Lt => LinFormula::Atom(LinAtom { expr: a.expr.neg(), rel: Rel::Le }),
                    // not(e = 0)  ==  e < 0  or  -e < 0
                    Rel::Eq => LinFormula::or(
                        LinFormula::Atom(LinAtom { expr: a.expr.clone(), rel: Rel::Lt }),
                        LinFormula::Atom(LinAtom { expr: a.expr.neg(), rel: Rel::Lt }),
                    ),
                }
            }
        }
        LinFormula::Not(a) => nnf(a, !positive),
        LinFormula::And(a, b) => {
            let (na, nb) = (nnf(a, positive), nnf(b, positive));
            if positive {
                LinFormula::and(na, nb)
            } else {
                LinFormula::or(na, nb)
            }
        }
        LinFormula::Or(a, b) => {
            let (na, nb) = (nnf(a, positive), nnf(b, positive));
            if positive {
                LinFormula::or(na, nb)
            } else {
                LinFormula::and(na, nb)
            }
        }
        LinFormula::Exists(k, a) => {
            let body = nnf(a, positive);
            if positive {
                LinFormula::Exists(k.clone(), Box::new(body))
            } else {
                LinFormula::Forall(k.clone(), Box::new(body))
            }
        }
        LinFormula::Forall(k, a) => {
            let body = nnf(a, positive);
            if positive {
                LinFormula::Forall(k.clone(), Box::new(body))
            } else {
                LinFormula::Exists(k.clone(), Box::new(body))
            }
        }
    }
}

type Branch = Vec<LinAtom>;

/// Disjunctive normal form of a quantifier-free formula in NNF.
fn dnf(f: &LinFormula, budget: usize) -> Result<Vec<Branch>, LinError> {
    let out = match f {
        LinFormula::True => vec![vec![]],
        LinFormula::False => vec![],
        LinFormula::Atom(a) => vec![vec![a.clone()]],
        LinFormula::Or(a, b) => {
            let mut out = dnf(a, budget)?;
            out.extend(dnf(b, budget)?);
            out
        }
        LinFormula::And(a, b) => {
            let da = dnf(a, budget)?;
            let db = dnf(b, budget)?;
            let mut out = Vec::new();
            for x in &da {
                for y in &db {
                    let mut branch = x.clone();
                    branch.extend(y.iter().cloned());
                    out.push(branch);
                }
            }
            out
        }
        LinFormula::Not(_) => unreachable!("dnf expects NNF"),
        LinFormula::Exists(..) | LinFormula::Forall(..) => {
            return Err(LinError::Unsupported("quantifier in DNF".to_string()))
        }
    };
    let atoms: usize = out.iter().map(|b| b.len().max(1)).sum();
    if atoms > budget {
        return Err(LinError::Budget(atoms));
    }
    Ok(out)
}

/// Simplifies ground atoms in a branch; `None` when the branch is false.
fn simplify_branch(branch: Branch) -> Option<Branch> {
    let mut out = Vec::new();
    for a in branch {
        match a.ground_truth() {
            Some(true) => {}
            Some(false) => return None,
            None => out.push(a),
        }
    }
    Some(out)
}

/// Eliminates `key` existentially from one branch: Gauss substitution when
/// an equality pins the variable, Fourier-Motzkin pairing otherwise.
fn eliminate_branch(key: &str, branch: &Branch) -> Option<Branch> {
    // Gauss: use an equality with a nonzero coefficient on key.
    if let Some(pos) = branch
        .iter()
        .position(|a| a.rel == Rel::Eq && !a.expr.coeff(key).is_zero())
    {
        let eq = &branch[pos];
        let c = eq.expr.coeff(key);
        // expr = c*key + rest = 0  =>  key = -rest/c
        let mut rest = eq.expr.clone();
        rest.coeffs.remove(key);
        let solution = rest.scale(&(-Rat::from_integer(1.into()) / c));
        let out: Branch = branch
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, a)| LinAtom { expr: a.expr.subst(key, &solution), rel: a.rel })
            .collect();
        return simplify_branch(out);
    }
    let mut lowers: Vec<(LinExpr, bool)> = Vec::new(); // bound <= / < key
    let mut uppers: Vec<(LinExpr, bool)> = Vec::new(); // key <= / < bound
    let mut rest: Branch = Vec::new();
    for a in branch {
        let c = a.expr.coeff(key);
        if c.is_zero() {
            rest.push(a.clone());
            continue;
        }
        // c*key + r rel 0  =>  key rel -r/c (direction flips for c < 0)
        let mut r = a.expr.clone();
        r.coeffs.remove(key);
        let bound = r.scale(&(-Rat::from_integer(1.into()) / c.clone()));
        let strict = a.rel == Rel::Lt;
        if c.is_positive() {
            uppers.push((bound, strict));
        } else {
            lowers.push((bound, strict));
        }
    }
    for (lo, slo) in &lowers {
        for (hi, shi) in &uppers {
            let expr = lo.sub(hi);
            let rel = if *slo || *shi { Rel::Lt } else { Rel::Le };
            rest.push(LinAtom { expr, rel });
        }
    }
    simplify_branch(rest)
}

/// Eliminates a quantified variable from a quantifier-free body.
pub fn eliminate(
    exists: bool,
    key: &str,
    body: &LinFormula,
    cfg: &ArithConfig,
) -> Result<LinFormula, LinError> {
    if exists {
        let n = nnf(body, true);
        let branches = dnf(&n, cfg.atom_budget)?;
        let mut out = LinFormula::False;
        let mut first = true;
        for b in &branches {
            let Some(b) = simplify_branch(b.clone()) else { continue };
            if let Some(reduced) = eliminate_branch(key, &b) {
                let conj = rebuild_branch(reduced);
                out = if first { conj } else { LinFormula::or(out, conj) };
                first = false;
            }
        }
        Ok(out)
    } else {
        // forall k body == not exists k not body
        let inner = eliminate(true, key, &LinFormula::not(body.clone()), cfg)?;
        Ok(nnf(&LinFormula::not(inner), true))
    }
}

fn rebuild_branch(atoms: Branch) -> LinFormula {
    if atoms.is_empty() {
        return LinFormula::True;
    }
    let mut it = atoms.into_iter();
    let first = LinFormula::Atom(it.next().unwrap());
    it.fold(first, |acc, a| LinFormula::and(acc, LinFormula::Atom(a)))
}

/// Recursively eliminates all quantifiers bottom-up.
fn eliminate_all(f: &LinFormula, cfg: &ArithConfig) -> Result<LinFormula, LinError> {
    match f {
        LinFormula::True | LinFormula::False | LinFormula::Atom(_) => Ok(f.clone()),
        LinFormula::Not(a) => Ok(LinFormula::not(eliminate_all(a, cfg)?)),
        LinFormula::And(a, b) => Ok(LinFormula::and(
            eliminate_all(a, cfg)?,
            eliminate_all(b, cfg)?,
        )),
        LinFormula::Or(a, b) => Ok(LinFormula::or(
            eliminate_all(a, cfg)?,
            eliminate_all(b, cfg)?,
        )),
        LinFormula::Exists(k, a) => {
            let body = eliminate_all(a, cfg)?;
            eliminate(true, k, &body, cfg)
        }
        LinFormula::Forall(k, a) => {
            let body = eliminate_all(a, cfg)?;
            eliminate(false, k, &body, cfg)
        }
    }
}

// -------------------------------------------------------------- sat witness

enum TraceStep {
    Gauss { key: String, solution: LinExpr },
    Fm {
        key: String,
        lowers: Vec<(LinExpr, bool)>,
        uppers: Vec<(LinExpr, bool)>,
    },
}

/// Searches a quantifier-free formula for a satisfying assignment of its
/// free keys, exact and deterministic.
fn sat_witness(
    qf: &LinFormula,
    cfg: &ArithConfig,
) -> Result<Option<BTreeMap<String, Rat>>, LinError> {
    let n = nnf(qf, true);
    let branches = dnf(&n, cfg.atom_budget)?;
    'branch: for branch in &branches {
        let Some(mut current) = simplify_branch(branch.clone()) else {
            continue;
        };
        let keys: BTreeSet<String> = current
            .iter()
            .flat_map(|a| a.expr.coeffs.keys().cloned())
            .collect();
        let mut trace: Vec<TraceStep> = Vec::new();
        for key in &keys {
            // Gauss first
            if let Some(pos) = current
                .iter()
                .position(|a| a.rel == Rel::Eq && !a.expr.coeff(key).is_zero())
            {
                let eq = current[pos].clone();
                let c = eq.expr.coeff(key);
                let mut rest_expr = eq.expr.clone();
                rest_expr.coeffs.remove(key);
                let solution = rest_expr.scale(&(-Rat::from_integer(1.into()) / c));
                current = current
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != pos)
                    .map(|(_, a)| LinAtom { expr: a.expr.subst(key, &solution), rel: a.rel })
                    .collect();
                match simplify_branch(current) {
                    Some(c2) => current = c2,
                    None => continue 'branch,
                }
                trace.push(TraceStep::Gauss { key: key.clone(), solution });
                continue;
            }
            let mut lowers = Vec::new();
            let mut uppers = Vec::new();
            let mut rest = Vec::new();
            for a in &current {
                let c = a.expr.coeff(key);
                if c.is_zero() {
                    rest.push(a.clone());
                    continue;
                }
                let mut r = a.expr.clone();
                r.coeffs.remove(key);
                let bound = r.scale(&(-Rat::from_integer(1.into()) / c.clone()));
                let strict = a.rel == Rel::Lt;
                if c.is_positive() {
                    uppers.push((bound, strict));
                } else {
                    lowers.push((bound, strict));
                }
            }
            for (lo, slo) in &lowers {
                for (hi, shi) in &uppers {
                    let expr = lo.sub(hi);
                    let rel = if *slo || *shi { Rel::Lt } else { Rel::Le };
                    rest.push(LinAtom { expr, rel });
                }
            }
            match simplify_branch(rest) {
                Some(c2) => current = c2,
                None => continue 'branch,
            }
            trace.push(TraceStep::Fm { key: key.clone(), lowers, uppers });
        }
        // all variables eliminated: remaining atoms are ground
        if current
            .iter()
            .any(|a| a.ground_truth() != Some(true))
        {
            continue 'branch;
        }
        // back-substitute
        let mut env: BTreeMap<String, Rat> = BTreeMap::new();
        for step in trace.iter().rev() {
            match step {
                TraceStep::Gauss { key, solution } => {
                    let v = solution.eval(&env);
                    env.insert(key.clone(), v);
                }
                TraceStep::Fm { key, lowers, uppers } => {
                    let lo = lowers
                        .iter()
                        .map(|(e, s)| (e.eval(&env), *s))
                        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
                    let hi = uppers
                        .iter()
                        .map(|(e, s)| (e.eval(&env), *s))
                        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
                    let one = Rat::from_integer(1.into());
                    let two = Rat::from_integer(2.into());
                    let v = match (lo, hi) {
                        (None, None) => Rat::zero(),
                        (Some((lo, strict)), None) => {
                            if strict {
                                lo + one
                            } else {
                                lo
                            }
                        }
                        (None, Some((hi, strict))) => {
                            if strict {
                                hi - one
                            } else {
                                hi
                            }
                        }
                        (Some((lo, _)), Some((hi, _))) => {
                            if lo == hi {
                                lo
                            } else {
                                (lo + hi) / two
                            }
                        }
                    };
                    env.insert(key.clone(), v);
                }
            }
        }
        return Ok(Some(env));
    }
    Ok(None)
}

// ------------------------------------------------------------------- valid

/// Decides validity of the universal closure of a modality-free formula.
pub fn valid(f: &Formula) -> Validity {
    valid_with(f, &ArithConfig::default())
}

pub fn valid_with(f: &Formula, cfg: &ArithConfig) -> Validity {
    let (lin, abstracted) = match linearize_with_flag(f) {
        Ok(x) => x,
        Err(e) => return Validity::Unknown(e.to_string()),
    };
    // valid(forall-closure f) iff not(f) has no satisfying assignment
    let negated = LinFormula::not(lin);
    let qf = match eliminate_all(&negated, cfg) {
        Ok(x) => x,
        Err(e) => return Validity::Unknown(e.to_string()),
    };
    match sat_witness(&qf, cfg) {
        Err(e) => Validity::Unknown(e.to_string()),
        Ok(None) => Validity::Valid,
        Ok(Some(env)) => {
            if abstracted {
                // the assignment constrains abstracted terms, which an
                // interpretation may not realize consistently
                return Validity::Unknown(
                    "falsifying assignment involves uninterpreted terms".to_string(),
                );
            }
            let mut witness = BTreeMap::new();
            for (k, v) in env {
                let var = if let Some(base) = k.strip_suffix('\'') {
                    Variable::diff(base)
                } else {
                    Variable::base(k.as_str())
                };
                witness.insert(var, v);
            }
            Validity::Invalid(witness)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn v(s: &str) -> Validity {
        valid(&parse_formula(s).unwrap())
    }

    #[test]
    fn simple_validities() {
        assert_eq!(v("x=y+1 & y>=0 -> x>=y"), Validity::Valid);
        assert_eq!(v("\\forall x (x>=0 -> x+1>0)"), Validity::Valid);
        assert_eq!(v("\\exists x (x>=1 & x<=3)"), Validity::Valid);
    }

    #[test]
    fn contradictory_exists_invalid() {
        // the sentence itself is the formula: closed universally over y
        match v("\\exists x (x<y & x>y)") {
            Validity::Invalid(_) => {}
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn invalid_with_witness() {
        match v("x >= 0") {
            Validity::Invalid(w) => {
                let x = w.get(&Variable::base("x")).unwrap();
                assert_eq!(x, &Rat::from_integer((-1).into()));
            }
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn nonlinear_unknown() {
        match v("x*x >= 0") {
            Validity::Unknown(reason) => assert!(reason.contains("nonlinear"), "{reason}"),
            other => panic!("expected unknown, got {other:?}"),
        }
    }

    #[test]
    fn linearizes_scaled_terms() {
        assert_eq!(v("x+v*0 >= 0 -> x >= 0"), Validity::Valid);
        assert_eq!(v("2*(x+1) <= y -> 2*x-y+2 <= 0"), Validity::Valid);
    }

    #[test]
    fn uninterpreted_constants_as_unknowns() {
        // 0-ary symbols act like universally quantified reals
        assert_eq!(v("f() = f()"), Validity::Valid);
        assert_eq!(v("\\exists y y=f()"), Validity::Valid);
        assert_eq!(v("true -> \\exists y y=f()"), Validity::Valid);
        // cannot claim invalidity about abstracted terms
        match v("f() >= 0") {
            Validity::Unknown(_) => {}
            other => panic!("expected unknown, got {other:?}"),
        }
    }

    #[test]
    fn one_point_handles_applied_symbols() {
        assert_eq!(
            v("\\exists y (y=f() & x=g(y)) <-> x=g(f())"),
            Validity::Valid
        );
        assert_eq!(
            v("\\forall y (y=f() -> g(y)=g(f()))"),
            Validity::Valid
        );
    }

    #[test]
    fn capture_is_refused() {
        // g(y) under exists y cannot be abstracted when no defining
        // equation removes the quantifier
        match v("\\exists y g(y) >= 0") {
            Validity::Unknown(reason) => assert!(reason.contains("quantified"), "{reason}"),
            other => panic!("expected unknown, got {other:?}"),
        }
    }

    #[test]
    fn ghost_equalities_gauss() {
        assert_eq!(
            v("x = xp+1 & xp >= 0 -> x >= xp"),
            Validity::Valid
        );
    }

    #[test]
    fn eliminate_is_equivalent_on_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cfg = ArithConfig::default();
        for _ in 0..60 {
            // random small linear formula over x (quantified), y, z
            let atom = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut expr = LinExpr::constant(Rat::from_integer(
                    rng.gen_range(-3i64..=3).into(),
                ));
                for k in ["x", "y", "z"] {
                    let c: i64 = rng.gen_range(-2..=2);
                    if c != 0 {
                        expr = expr.add(&LinExpr::var(k).scale(&Rat::from_integer(c.into())));
                    }
                }
                let rel = match rng.gen_range(0..3) {
                    0 => Rel::Eq,
                    1 => Rel::Le,
                    _ => Rel::Lt,
                };
                LinFormula::Atom(LinAtom { expr, rel })
            };
            let body = LinFormula::and(
                atom(&mut rng),
                LinFormula::or(atom(&mut rng), atom(&mut rng)),
            );
            let eliminated = eliminate(true, "x", &body, &cfg).unwrap();
            // compare on sample assignments for y, z by scanning x samples
            for y in -3..=3i64 {
                for z in -3..=3i64 {
                    let mut env = BTreeMap::new();
                    env.insert("y".to_string(), Rat::from_integer(y.into()));
                    env.insert("z".to_string(), Rat::from_integer(z.into()));
                    let reduced = eliminated.eval_qf(&env).unwrap();
                    let mut found = false;
                    // dense rational scan; bounds in these formulas are
                    // small, so +-6 with halves is generous
                    for xn in -12..=12i64 {
                        env.insert("x".to_string(), Rat::new(xn.into(), 2.into()));
                        if body.eval_qf(&env).unwrap() {
                            found = true;
                            break;
                        }
                    }
                    env.remove("x");
                    if reduced && !found {
                        // witness may be non-half-integral; confirm via FM
                        let mut constrained = body.clone();
                        for (k, val) in &env {
                            let expr = LinExpr::var(k)
                                .sub(&LinExpr::constant(val.clone()));
                            constrained = LinFormula::and(
                                constrained,
                                LinFormula::Atom(LinAtom { expr, rel: Rel::Eq }),
                            );
                        }
                        let w = sat_witness(&constrained, &cfg).unwrap();
                        assert!(w.is_some(), "eliminated true but body unsat");
                    }
                    if !reduced {
                        assert!(!found, "eliminated false but body sat at y={y} z={z}");
                    }
                }
            }
        }
    }

    #[test]
    fn budget_exceeded_reports() {
        let cfg = ArithConfig { atom_budget: 4 };
        let atom = |k: &str| {
            LinFormula::Atom(LinAtom { expr: LinExpr::var(k), rel: Rel::Le })
        };
        let mut f = LinFormula::or(atom("a"), atom("b"));
        for k in ["c", "d", "e", "f"] {
            f = LinFormula::and(f, LinFormula::or(atom(k), atom("g")));
        }
        match eliminate(true, "a", &f, &cfg) {
            Err(LinError::Budget(_)) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
