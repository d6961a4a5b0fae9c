//! The trusted proof checker.
//!
//! [`Provable`] is the only theorem token. Its fields are private and it is
//! constructible exclusively through the operations in this module: axiom
//! lookup, hypothesis introduction, rule application, uniform substitution,
//! propositional tautology checking, congruence rewriting, uniform
//! renaming, the linear-arithmetic rule, and premise merging. Everything
//! else in the crate builds on these.
//!
//! Soundness notes, per operation:
//! * `us` on a premise-free Provable applies the substitution with no
//!   initial taboos; with premises it substitutes premises and conclusion
//!   under the all-variables taboo, which keeps locally sound inferences
//!   locally sound.
//! * `rename` swaps two base variables (with their differential symbols)
//!   everywhere; validity is invariant under this bijection of states.
//! * `arith` trusts the linear-arithmetic backend only in its `Valid`
//!   answers.

use crate::arith;
use crate::axioms;
use crate::syntax::{
    parse_formula, parse_program, print_formula, Formula, HybridProgram, Term, Variable,
};
use crate::usubst::{self, Subst, SubstError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A checked inference: premises and conclusion. Premise-free Provables
/// are theorems. All formulas are stored desugared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provable {
    premises: Vec<Formula>,
    conclusion: Formula,
}

impl Provable {
    pub fn premises(&self) -> &[Formula] {
        &self.premises
    }

    pub fn conclusion(&self) -> &Formula {
        &self.conclusion
    }

    pub fn is_theorem(&self) -> bool {
        self.premises.is_empty()
    }
}

impl std::fmt::Display for Provable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in &self.premises {
            writeln!(f, "  {}", print_formula(p))?;
        }
        write!(f, "|- {}", print_formula(&self.conclusion))
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    UnknownAxiom(#[from] axioms::UnknownAxiom),
    #[error(transparent)]
    Clash(#[from] SubstError),
    #[error("rule {rule}: {detail}")]
    Shape { rule: String, detail: String },
    #[error("not a propositional tautology; falsified by {0}")]
    NotTautology(String),
    #[error("too many distinct atoms for the tautology checker ({0} > 20)")]
    TooManyAtoms(usize),
    #[error("position mismatch: {0}")]
    PositionMismatch(String),
    #[error("arithmetic rule refused: {0}")]
    NotValid(String),
    #[error("renaming must swap two distinct base variables")]
    BadRename,
    #[error("script error: {0}")]
    Script(String),
}

type KResult<T> = Result<T, KernelError>;

/// A premise-free Provable for a registered axiom.
pub fn start_axiom(key: &str) -> KResult<Provable> {
    let entry = axioms::lookup(key)?;
    Ok(Provable { premises: vec![], conclusion: entry.formula.desugar() })
}

/// The inference `phi |- phi`, the seed for derived inferences.
pub fn hypothesis(f: &Formula) -> Provable {
    let d = f.desugar();
    Provable { premises: vec![d.clone()], conclusion: d }
}

/// Uniform substitution on a Provable. Premise-free: conclusion under no
/// taboos. With premises: everything under the all-variables taboo.
pub fn apply_us(pv: &Provable, s: &Subst) -> KResult<Provable> {
    if pv.premises.is_empty() {
        let conclusion = usubst::us(s, &pv.conclusion)?;
        Ok(Provable { premises: vec![], conclusion })
    } else {
        let taboo = crate::statics::VarSet::all();
        let premises = pv
            .premises
            .iter()
            .map(|p| usubst::apply_formula(s, &taboo, p))
            .collect::<Result<Vec<_>, _>>()?;
        let conclusion = usubst::apply_formula(s, &taboo, &pv.conclusion)?;
        Ok(Provable { premises, conclusion })
    }
}

fn union_premises(parts: &[&Provable]) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::new();
    for p in parts {
        for f in &p.premises {
            if !out.contains(f) {
                out.push(f.clone());
            }
        }
    }
    out
}

/// Modus ponens: from `phi -> psi` and `phi`, infer `psi`.
pub fn modus_ponens(major: &Provable, minor: &Provable) -> KResult<Provable> {
    match &major.conclusion {
        Formula::Imply(a, b) if **a == minor.conclusion => Ok(Provable {
            premises: union_premises(&[major, minor]),
            conclusion: (**b).clone(),
        }),
        Formula::Imply(a, _) => Err(KernelError::Shape {
            rule: "mp".to_string(),
            detail: format!(
                "minor premise is `{}` but the implication expects `{}`",
                print_formula(&minor.conclusion),
                print_formula(a)
            ),
        }),
        other => Err(KernelError::Shape {
            rule: "mp".to_string(),
            detail: format!("major premise `{}` is not an implication", print_formula(other)),
        }),
    }
}

/// Goedel generalization: from `phi` infer `[alpha]phi`.
pub fn generalize(pv: &Provable, program: &HybridProgram) -> Provable {
    Provable {
        premises: pv.premises.clone(),
        conclusion: Formula::boxed(program.desugar(), pv.conclusion.clone()),
    }
}

/// Universal generalization: from `phi` infer `forall x phi`.
pub fn all_generalize(pv: &Provable, x: &Variable) -> Provable {
    Provable {
        premises: pv.premises.clone(),
        conclusion: Formula::forall(x.clone(), pv.conclusion.clone()),
    }
}

/// Applies an axiomatic rule by name.
pub fn apply_rule(name: &str, inputs: &[&Provable], args: &RuleArgs) -> KResult<Provable> {
    match name {
        "mp" => {
            let [major, minor] = inputs else {
                return Err(KernelError::Shape {
                    rule: "mp".to_string(),
                    detail: format!("needs 2 inputs, got {}", inputs.len()),
                });
            };
            modus_ponens(major, minor)
        }
        "g" => {
            let [pv] = inputs else {
                return Err(KernelError::Shape {
                    rule: "g".to_string(),
                    detail: format!("needs 1 input, got {}", inputs.len()),
                });
            };
            let program = args.program.as_ref().ok_or_else(|| KernelError::Shape {
                rule: "g".to_string(),
                detail: "missing program argument".to_string(),
            })?;
            Ok(generalize(pv, program))
        }
        "allgen" => {
            let [pv] = inputs else {
                return Err(KernelError::Shape {
                    rule: "allgen".to_string(),
                    detail: format!("needs 1 input, got {}", inputs.len()),
                });
            };
            let var = args.var.as_ref().ok_or_else(|| KernelError::Shape {
                rule: "allgen".to_string(),
                detail: "missing variable argument".to_string(),
            })?;
            Ok(all_generalize(pv, var))
        }
        other => Err(KernelError::Shape {
            rule: other.to_string(),
            detail: "unknown rule".to_string(),
        }),
    }
}

/// Optional arguments for [`apply_rule`].
#[derive(Clone, Debug, Default)]
pub struct RuleArgs {
    pub program: Option<HybridProgram>,
    pub var: Option<Variable>,
}

// --------------------------------------------------------------- prop taut

/// Proves a propositional tautology over its maximal non-propositional
/// subformulas by truth table. At most 20 distinct atoms.
pub fn prop_taut(f: &Formula) -> KResult<Provable> {
    let f = f.desugar();
    let mut atoms: Vec<Formula> = Vec::new();
    collect_atoms(&f, &mut atoms);
    if atoms.len() > 20 {
        return Err(KernelError::TooManyAtoms(atoms.len()));
    }
    let n = atoms.len();
    for mask in 0..(1u32 << n) {
        if !eval_prop(&f, &atoms, mask) {
            let mut assignment = Vec::new();
            for (i, a) in atoms.iter().enumerate() {
                let v = (mask >> i) & 1 == 1;
                assignment.push(format!("{} := {}", print_formula(a), v));
            }
            return Err(KernelError::NotTautology(assignment.join(", ")));
        }
    }
    Ok(Provable { premises: vec![], conclusion: f })
}

fn collect_atoms(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Not(a) => collect_atoms(a, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
            collect_atoms(a, out);
            collect_atoms(b, out);
        }
        atom => {
            if !out.contains(atom) {
                out.push(atom.clone());
            }
        }
    }
}

fn eval_prop(f: &Formula, atoms: &[Formula], mask: u32) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Not(a) => !eval_prop(a, atoms, mask),
        Formula::And(a, b) => eval_prop(a, atoms, mask) && eval_prop(b, atoms, mask),
        Formula::Or(a, b) => eval_prop(a, atoms, mask) || eval_prop(b, atoms, mask),
        Formula::Imply(a, b) => !eval_prop(a, atoms, mask) || eval_prop(b, atoms, mask),
        Formula::Equiv(a, b) => eval_prop(a, atoms, mask) == eval_prop(b, atoms, mask),
        atom => {
            let i = atoms.iter().position(|a| a == atom).expect("atom collected");
            (mask >> i) & 1 == 1
        }
    }
}

// ------------------------------------------------------------ CE rewriting

/// Replaces the subformula at `position` of the target's conclusion, which
/// must equal the equivalence's left side, by its right side. Positions
/// index formula children only and never cross into a program:
/// `Not`: 0; binary connectives: 0/1; quantifiers: 0 (body);
/// `Box`: 1 (postcondition).
pub fn ce_rewrite(target: &Provable, equiv: &Provable, position: &[usize]) -> KResult<Provable> {
    let Formula::Equiv(lhs, rhs) = &equiv.conclusion else {
        return Err(KernelError::Shape {
            rule: "ce".to_string(),
            detail: format!(
                "second input `{}` is not an equivalence",
                print_formula(&equiv.conclusion)
            ),
        });
    };
    let rewritten = replace_at(&target.conclusion, position, lhs, rhs)?;
    Ok(Provable {
        premises: union_premises(&[target, equiv]),
        conclusion: rewritten,
    })
}

fn replace_at(f: &Formula, pos: &[usize], lhs: &Formula, rhs: &Formula) -> KResult<Formula> {
    if pos.is_empty() {
        if f == lhs {
            return Ok(rhs.clone());
        }
        return Err(KernelError::PositionMismatch(format!(
            "subformula `{}` does not match `{}`",
            print_formula(f),
            print_formula(lhs)
        )));
    }
    let (head, rest) = (pos[0], &pos[1..]);
    let bad = |what: &str| {
        Err(KernelError::PositionMismatch(format!(
            "cannot descend into child {head} of {what}"
        )))
    };
    match f {
        Formula::Not(a) if head == 0 => Ok(Formula::not(replace_at(a, rest, lhs, rhs)?)),
        Formula::And(a, b) if head <= 1 => Ok(if head == 0 {
            Formula::and(replace_at(a, rest, lhs, rhs)?, (**b).clone())
        } else {
            Formula::and((**a).clone(), replace_at(b, rest, lhs, rhs)?)
        }),
        Formula::Or(a, b) if head <= 1 => Ok(if head == 0 {
            Formula::or(replace_at(a, rest, lhs, rhs)?, (**b).clone())
        } else {
            Formula::or((**a).clone(), replace_at(b, rest, lhs, rhs)?)
        }),
        Formula::Imply(a, b) if head <= 1 => Ok(if head == 0 {
            Formula::imply(replace_at(a, rest, lhs, rhs)?, (**b).clone())
        } else {
            Formula::imply((**a).clone(), replace_at(b, rest, lhs, rhs)?)
        }),
        Formula::Equiv(a, b) if head <= 1 => Ok(if head == 0 {
            Formula::equiv(replace_at(a, rest, lhs, rhs)?, (**b).clone())
        } else {
            Formula::equiv((**a).clone(), replace_at(b, rest, lhs, rhs)?)
        }),
        Formula::Forall(x, a) if head == 0 => {
            Ok(Formula::forall(x.clone(), replace_at(a, rest, lhs, rhs)?))
        }
        Formula::Exists(x, a) if head == 0 => {
            Ok(Formula::exists(x.clone(), replace_at(a, rest, lhs, rhs)?))
        }
        Formula::Box_(p, a) if head == 1 => Ok(Formula::boxed(
            (**p).clone(),
            replace_at(a, rest, lhs, rhs)?,
        )),
        Formula::Box_(..) if head == 0 => bad("a box modality (programs are excluded)"),
        Formula::Refines(..) => bad("a refinement (programs are excluded)"),
        other => bad(&format!("`{}`", print_formula(other))),
    }
}

// ------------------------------------------------------------- renaming

fn rename_var(v: &Variable, x: &str, y: &str) -> Variable {
    if v.name == x {
        Variable { name: y.to_string(), differential: v.differential }
    } else if v.name == y {
        Variable { name: x.to_string(), differential: v.differential }
    } else {
        v.clone()
    }
}

fn rename_term(t: &Term, x: &str, y: &str) -> Term {
    match t {
        Term::Var(v) => Term::Var(rename_var(v, x, y)),
        Term::Number(_) | Term::Dot(_) => t.clone(),
        Term::FuncApp { name, args } => Term::FuncApp {
            name: name.clone(),
            args: args.iter().map(|a| rename_term(a, x, y)).collect(),
        },
        Term::Plus(a, b) => Term::plus(rename_term(a, x, y), rename_term(b, x, y)),
        Term::Minus(a, b) => Term::minus(rename_term(a, x, y), rename_term(b, x, y)),
        Term::Times(a, b) => Term::times(rename_term(a, x, y), rename_term(b, x, y)),
        Term::Neg(a) => Term::Neg(Box::new(rename_term(a, x, y))),
        Term::Differential(a) => Term::Differential(Box::new(rename_term(a, x, y))),
    }
}

fn rename_formula(f: &Formula, x: &str, y: &str) -> Formula {
    match f {
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, rename_term(a, x, y), rename_term(b, x, y)),
        Formula::PredApp { name, args } => Formula::PredApp {
            name: name.clone(),
            args: args.iter().map(|a| rename_term(a, x, y)).collect(),
        },
        Formula::Predicational(_) | Formula::True | Formula::False => f.clone(),
        Formula::Not(a) => Formula::not(rename_formula(a, x, y)),
        Formula::And(a, b) => Formula::and(rename_formula(a, x, y), rename_formula(b, x, y)),
        Formula::Or(a, b) => Formula::or(rename_formula(a, x, y), rename_formula(b, x, y)),
        Formula::Imply(a, b) => Formula::imply(rename_formula(a, x, y), rename_formula(b, x, y)),
        Formula::Equiv(a, b) => Formula::equiv(rename_formula(a, x, y), rename_formula(b, x, y)),
        Formula::Forall(v, a) => Formula::forall(rename_var(v, x, y), rename_formula(a, x, y)),
        Formula::Exists(v, a) => Formula::exists(rename_var(v, x, y), rename_formula(a, x, y)),
        Formula::Box_(p, a) => Formula::boxed(rename_program(p, x, y), rename_formula(a, x, y)),
        Formula::Diamond(p, a) => {
            Formula::Diamond(Box::new(rename_program(p, x, y)), Box::new(rename_formula(a, x, y)))
        }
        Formula::Refines(a, b) => {
            Formula::refines(rename_program(a, x, y), rename_program(b, x, y))
        }
        Formula::ProgEquiv(a, b) => {
            Formula::prog_equiv(rename_program(a, x, y), rename_program(b, x, y))
        }
    }
}

fn rename_program(p: &HybridProgram, x: &str, y: &str) -> HybridProgram {
    match p {
        HybridProgram::ProgConst(_) => p.clone(),
        HybridProgram::Test(f) => HybridProgram::test(rename_formula(f, x, y)),
        HybridProgram::Assign(v, t) => {
            HybridProgram::Assign(rename_var(v, x, y), rename_term(t, x, y))
        }
        HybridProgram::AssignAny(v) => HybridProgram::AssignAny(rename_var(v, x, y)),
        HybridProgram::ODE { eqs, domain } => HybridProgram::ode(
            eqs.iter()
                .map(|(v, e)| (rename_var(v, x, y), rename_term(e, x, y)))
                .collect(),
            rename_formula(domain, x, y),
        ),
        HybridProgram::Choice(a, b) => {
            HybridProgram::choice(rename_program(a, x, y), rename_program(b, x, y))
        }
        HybridProgram::Seq(a, b) => {
            HybridProgram::seq(rename_program(a, x, y), rename_program(b, x, y))
        }
        HybridProgram::Loop(a) => HybridProgram::repeat(rename_program(a, x, y)),
    }
}

/// Uniform renaming: transposes the base variables `x` and `y` (together
/// with their differential symbols) everywhere in the Provable. Sound
/// because validity is invariant under bijective variable swaps.
pub fn rename(pv: &Provable, x: &Variable, y: &Variable) -> KResult<Provable> {
    if x.differential || y.differential || x == y {
        return Err(KernelError::BadRename);
    }
    Ok(Provable {
        premises: pv
            .premises
            .iter()
            .map(|f| rename_formula(f, &x.name, &y.name))
            .collect(),
        conclusion: rename_formula(&pv.conclusion, &x.name, &y.name),
    })
}

// ---------------------------------------------------------- arith rule

/// Trusted linear-arithmetic rule: accepts exactly the modality-free
/// sentences the backend proves `Valid`.
pub fn arith_rule(f: &Formula) -> KResult<Provable> {
    let d = f.desugar();
    match arith::valid(&d) {
        arith::Validity::Valid => Ok(Provable { premises: vec![], conclusion: d }),
        arith::Validity::Invalid(w) => {
            let mut parts: Vec<String> = w
                .iter()
                .map(|(v, r)| format!("{v} = {r}"))
                .collect();
            parts.sort();
            Err(KernelError::NotValid(format!(
                "falsified by {}",
                parts.join(", ")
            )))
        }
        arith::Validity::Unknown(reason) => Err(KernelError::NotValid(reason)),
    }
}

// -------------------------------------------------------------- merging

/// Discharges premise `index` of `target` with a proof of that premise.
pub fn merge(target: &Provable, index: usize, proof: &Provable) -> KResult<Provable> {
    let Some(expected) = target.premises.get(index) else {
        return Err(KernelError::Shape {
            rule: "merge".to_string(),
            detail: format!(
                "premise index {index} out of range ({} premises)",
                target.premises.len()
            ),
        });
    };
    if &proof.conclusion != expected {
        return Err(KernelError::Shape {
            rule: "merge".to_string(),
            detail: format!(
                "proof concludes `{}` but premise {index} is `{}`",
                print_formula(&proof.conclusion),
                print_formula(expected)
            ),
        });
    }
    let mut premises: Vec<Formula> = target
        .premises
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, f)| f.clone())
        .collect();
    for p in &proof.premises {
        if !premises.contains(p) {
            premises.push(p.clone());
        }
    }
    Ok(Provable { premises, conclusion: target.conclusion.clone() })
}

// ------------------------------------------------------------ proof scripts

/// One step of a proof script. `rule` selects the operation; the remaining
/// fields carry its arguments.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Step {
    pub id: String,
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subst: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub major: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equiv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with: Option<String>,
}

/// A proof script: named, ordered steps, optionally a declared conclusion
/// the final step must prove.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProofScript {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<String>,
    pub steps: Vec<Step>,
}

/// Outcome of replaying one script step.
#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub id: String,
    pub ok: bool,
    pub detail: String,
}

/// Outcome of checking a whole script.
#[derive(Clone, Debug, Serialize)]
pub struct ScriptReport {
    pub name: String,
    pub ok: bool,
    pub steps: Vec<StepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<String>,
}

/// Replays a proof script step by step, stopping at the first failure.
/// Succeeds iff every step validates, the final step is premise-free, and
/// the declared conclusion (if any) matches.
pub fn check_script(script: &ProofScript) -> ScriptReport {
    let mut env: std::collections::BTreeMap<String, Provable> = Default::default();
    let mut reports = Vec::new();
    let mut failed = false;
    let mut last: Option<Provable> = None;

    for step in &script.steps {
        if env.contains_key(&step.id) {
            reports.push(StepReport {
                id: step.id.clone(),
                ok: false,
                detail: format!("duplicate step id `{}`", step.id),
            });
            failed = true;
            break;
        }
        match run_step(step, &env) {
            Ok(pv) => {
                reports.push(StepReport {
                    id: step.id.clone(),
                    ok: true,
                    detail: pv.to_string(),
                });
                last = Some(pv.clone());
                env.insert(step.id.clone(), pv);
            }
            Err(e) => {
                reports.push(StepReport {
                    id: step.id.clone(),
                    ok: false,
                    detail: e.to_string(),
                });
                failed = true;
                break;
            }
        }
    }

    let mut ok = !failed && !script.steps.is_empty();
    let mut conclusion = None;
    if ok {
        let final_pv = last.expect("nonempty script");
        if !final_pv.is_theorem() {
            ok = false;
            reports.push(StepReport {
                id: "final".to_string(),
                ok: false,
                detail: "final step still has premises".to_string(),
            });
        } else if let Some(expected) = &script.conclusion {
            match parse_formula(expected) {
                Ok(f) => {
                    if f.desugar() != *final_pv.conclusion() {
                        ok = false;
                        reports.push(StepReport {
                            id: "final".to_string(),
                            ok: false,
                            detail: format!(
                                "conclusion is `{}`, declared `{}`",
                                print_formula(final_pv.conclusion()),
                                expected
                            ),
                        });
                    }
                }
                Err(e) => {
                    ok = false;
                    reports.push(StepReport {
                        id: "final".to_string(),
                        ok: false,
                        detail: format!("declared conclusion does not parse: {e}"),
                    });
                }
            }
        }
        if ok {
            conclusion = Some(print_formula(final_pv.conclusion()));
        }
    }
    ScriptReport { name: script.name.clone(), ok, steps: reports, conclusion }
}

fn need<'a, T>(opt: &'a Option<T>, what: &str, step: &Step) -> KResult<&'a T> {
    opt.as_ref().ok_or_else(|| {
        KernelError::Script(format!("step `{}` ({}) needs `{}`", step.id, step.rule, what))
    })
}

fn lookup_step<'a>(
    env: &'a std::collections::BTreeMap<String, Provable>,
    id: &str,
    step: &Step,
) -> KResult<&'a Provable> {
    env.get(id).ok_or_else(|| {
        KernelError::Script(format!(
            "step `{}` references `{id}`, which is not an earlier step",
            step.id
        ))
    })
}

/// Runs a single step against an environment of earlier results, used by
/// script checking and by the tactics layer while it generates scripts.
pub fn run_builder_step(
    step: &Step,
    env: &std::collections::BTreeMap<String, Provable>,
) -> KResult<Provable> {
    run_step(step, env)
}

fn run_step(
    step: &Step,
    env: &std::collections::BTreeMap<String, Provable>,
) -> KResult<Provable> {
    let parse_f = |text: &String| -> KResult<Formula> {
        parse_formula(text).map_err(|e| KernelError::Script(format!("step `{}`: {e}", step.id)))
    };
    match step.rule.as_str() {
        "axiom" => start_axiom(need(&step.key, "key", step)?),
        "hyp" => Ok(hypothesis(&parse_f(need(&step.formula, "formula", step)?)?)),
        "us" => {
            let of = lookup_step(env, need(&step.of, "of", step)?, step)?;
            let subst = Subst::parse(need(&step.subst, "subst", step)?)
                .map_err(KernelError::Clash)?;
            apply_us(of, &subst)
        }
        "mp" => {
            let major = lookup_step(env, need(&step.major, "major", step)?, step)?;
            let minor = lookup_step(env, need(&step.minor, "minor", step)?, step)?;
            modus_ponens(major, minor)
        }
        "g" => {
            let of = lookup_step(env, need(&step.of, "of", step)?, step)?;
            let program = parse_program(need(&step.program, "program", step)?)
                .map_err(|e| KernelError::Script(format!("step `{}`: {e}", step.id)))?;
            Ok(generalize(of, &program))
        }
        "allgen" => {
            let of = lookup_step(env, need(&step.of, "of", step)?, step)?;
            let var = Variable::base(need(&step.var, "var", step)?.as_str());
            Ok(all_generalize(of, &var))
        }
        "prop" => prop_taut(&parse_f(need(&step.formula, "formula", step)?)?),
        "ce" => {
            let target = lookup_step(env, need(&step.target, "target", step)?, step)?;
            let equiv = lookup_step(env, need(&step.equiv, "equiv", step)?, step)?;
            let position = need(&step.position, "position", step)?;
            ce_rewrite(target, equiv, position)
        }
        "arith" => arith_rule(&parse_f(need(&step.formula, "formula", step)?)?),
        "ur" => {
            let of = lookup_step(env, need(&step.of, "of", step)?, step)?;
            let from = Variable::base(need(&step.from, "from", step)?.as_str());
            let to = Variable::base(need(&step.to, "to", step)?.as_str());
            rename(of, &from, &to)
        }
        "merge" => {
            let target = lookup_step(env, need(&step.target, "target", step)?, step)?;
            let index = *need(&step.premise, "premise", step)?;
            let with = lookup_step(env, need(&step.with, "with", step)?, step)?;
            merge(target, index, with)
        }
        other => Err(KernelError::Script(format!(
            "step `{}` uses unknown rule `{other}`",
            step.id
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    #[test]
    fn start_axiom_examples() {
        let refl = start_axiom("<=refl").unwrap();
        assert!(refl.is_theorem());
        assert_eq!(
            refl.conclusion(),
            &parse_formula("{a} refines {a}").unwrap()
        );
        let k = start_axiom("K").unwrap();
        assert_eq!(
            k.conclusion(),
            &parse_formula("[a](P(||) -> Q(||)) -> ([a]P(||) -> [a]Q(||))").unwrap()
        );
        assert!(start_axiom("nope").is_err());
    }

    #[test]
    fn us_on_assignment_axiom() {
        let ax = start_axiom("[:=]").unwrap();
        let s = Subst::new().func("f", 0, "2").pred("p", 1, ".>=0");
        let out = apply_us(&ax, &s).unwrap();
        assert_eq!(
            out.conclusion(),
            &parse_formula("[x:=2]x>=0 <-> 2>=0").unwrap()
        );
    }

    #[test]
    fn us_clash_keeps_original() {
        let ax = start_axiom("V").unwrap();
        let s = Subst::new().pred("p", 0, "x>=0").prog("a", "x:=x+1");
        assert!(apply_us(&ax, &s).is_err());
        // the axiom Provable itself is unchanged by a failed application
        assert_eq!(ax.conclusion(), &parse_formula("p() -> [a]p()").unwrap());
    }

    #[test]
    fn rule_substitution_under_full_taboo() {
        // derived inference: premise {a} refines {b}, conclusion
        // {a; c} refines {b; c}; then substitute c ~> x:=1.
        let h = hypothesis(&parse_formula("{a} refines {b}").unwrap());
        let seq = start_axiom(";").unwrap();
        let s = Subst::new().prog("b", "c").prog("c", "b").prog("d", "c");
        // after renaming roles: (a<=b & [a](c<=c)) -> a;c <= b;c
        let seq_inst = apply_us(&seq, &s).unwrap();
        let refl_c = apply_us(
            &start_axiom("<=refl").unwrap(),
            &Subst::new().prog("a", "c"),
        )
        .unwrap();
        let boxed = generalize(&refl_c, &parse_program("a").unwrap());
        let conj_taut = prop_taut(
            &parse_formula(
                "{a} refines {b} -> [a]({c} refines {c}) -> {a} refines {b} & [a]({c} refines {c})",
            )
            .unwrap(),
        )
        .unwrap();
        let conj = modus_ponens(&modus_ponens(&conj_taut, &h).unwrap(), &boxed).unwrap();
        let derived = modus_ponens(&seq_inst, &conj).unwrap();
        assert_eq!(derived.premises().len(), 1);
        assert_eq!(
            derived.conclusion(),
            &parse_formula("{a; c} refines {b; c}").unwrap()
        );
        // Theorem-2-style substitution: program constant replacements carry
        // no free variables, so the all-variables taboo never clashes.
        let inst = apply_us(&derived, &Subst::new().prog("c", "x:=1")).unwrap();
        assert_eq!(
            inst.conclusion(),
            &parse_formula("{a; x:=1} refines {b; x:=1}").unwrap()
        );
        assert_eq!(
            inst.premises(),
            &[parse_formula("{a} refines {b}").unwrap()]
        );
        // but replacing a predicate by an open formula under taboo ALL clashes
        let h2 = hypothesis(&parse_formula("p()").unwrap());
        assert!(apply_us(&h2, &Subst::new().pred("p", 0, "x>=0")).is_err());
    }

    #[test]
    fn mp_shape_errors() {
        let p = prop_taut(&parse_formula("x>=0 -> x>=0").unwrap()).unwrap();
        let q = prop_taut(&parse_formula("y>=0 | !(y>=0)").unwrap()).unwrap();
        assert!(modus_ponens(&p, &q).is_err());
        assert!(modus_ponens(&q, &p).is_err());
    }

    #[test]
    fn g_and_allgen() {
        let base = arith_rule(&parse_formula("1>=0").unwrap()).unwrap();
        let boxed = generalize(&base, &parse_program("x:=1").unwrap());
        assert_eq!(boxed.conclusion(), &parse_formula("[x:=1]1>=0").unwrap());
        let all = all_generalize(
            &arith_rule(&parse_formula("x*0=0").unwrap()).unwrap(),
            &Variable::base("x"),
        );
        assert_eq!(all.conclusion(), &parse_formula("\\forall x x*0=0").unwrap());
    }

    #[test]
    fn prop_taut_examples() {
        assert!(prop_taut(&parse_formula("p() & q() -> p()").unwrap()).is_ok());
        let refinement_atoms = parse_formula(
            "{a} refines {b} & {b} refines {c} -> {a} refines {b}",
        )
        .unwrap();
        assert!(prop_taut(&refinement_atoms).is_ok());
        match prop_taut(&parse_formula("p() -> q()").unwrap()) {
            Err(KernelError::NotTautology(detail)) => {
                assert!(detail.contains("p() := true"), "{detail}");
                assert!(detail.contains("q() := false"), "{detail}");
            }
            other => panic!("expected NotTautology, got {other:?}"),
        }
    }

    #[test]
    fn prop_taut_atom_cap() {
        // 21 distinct atoms exceed the cap
        let big = (1..=21)
            .map(|i| format!("x{i}>=0"))
            .collect::<Vec<_>>()
            .join(" & ");
        let f = parse_formula(&format!("{big} -> {big}")).unwrap();
        assert!(matches!(prop_taut(&f), Err(KernelError::TooManyAtoms(21))));
    }

    #[test]
    fn ce_rewrites_postcondition() {
        let target = hypothesis(&parse_formula("[a](x>=0 & true)").unwrap());
        let equiv = prop_taut(&parse_formula("x>=0 & true <-> x>=0").unwrap()).unwrap();
        let out = ce_rewrite(&target, &equiv, &[1]).unwrap();
        assert_eq!(out.conclusion(), &parse_formula("[a]x>=0").unwrap());
        // wrong position
        assert!(matches!(
            ce_rewrite(&target, &equiv, &[0]),
            Err(KernelError::PositionMismatch(_))
        ));
        // cannot rewrite inside a program
        let target2 = hypothesis(&parse_formula("[?x>=0 & true]y>=0").unwrap());
        assert!(matches!(
            ce_rewrite(&target2, &equiv, &[0, 0]),
            Err(KernelError::PositionMismatch(_))
        ));
    }

    #[test]
    fn renaming_swaps_everywhere() {
        let pv = hypothesis(&parse_formula("[{x'=y}]x>=y").unwrap());
        let out = rename(&pv, &Variable::base("x"), &Variable::base("y")).unwrap();
        assert_eq!(
            out.conclusion(),
            &parse_formula("[{y'=x}]y>=x").unwrap()
        );
        // double swap is the identity
        let back = rename(&out, &Variable::base("x"), &Variable::base("y")).unwrap();
        assert_eq!(back.conclusion(), pv.conclusion());
        assert!(rename(&pv, &Variable::base("x"), &Variable::base("x")).is_err());
    }

    #[test]
    fn arith_rule_is_guarded() {
        assert!(arith_rule(&parse_formula("x+1>x").unwrap()).is_ok());
        assert!(matches!(
            arith_rule(&parse_formula("x>=0").unwrap()),
            Err(KernelError::NotValid(_))
        ));
        assert!(matches!(
            arith_rule(&parse_formula("x*x>=0").unwrap()),
            Err(KernelError::NotValid(_))
        ));
    }

    #[test]
    fn merge_discharges_premises() {
        let h = hypothesis(&parse_formula("1>=0").unwrap());
        let boxed = generalize(&h, &parse_program("a").unwrap());
        assert!(!boxed.is_theorem());
        let fact = arith_rule(&parse_formula("1>=0").unwrap()).unwrap();
        let done = merge(&boxed, 0, &fact).unwrap();
        assert!(done.is_theorem());
        assert_eq!(done.conclusion(), &parse_formula("[a]1>=0").unwrap());
        // wrong conclusion refused
        let wrong = arith_rule(&parse_formula("2>=0").unwrap()).unwrap();
        assert!(merge(&boxed, 0, &wrong).is_err());
    }

    #[test]
    fn script_round_trip_and_check() {
        let json = r#"{
            "name": "boxed refl",
            "conclusion": "[x:=1]{a} refines {a}",
            "steps": [
                {"id": "s1", "rule": "axiom", "key": "<=refl"},
                {"id": "s2", "rule": "g", "of": "s1", "program": "x:=1"}
            ]
        }"#;
        let script: ProofScript = serde_json::from_str(json).unwrap();
        let report = check_script(&script);
        assert!(report.ok, "{report:?}");
        assert_eq!(
            report.conclusion.as_deref(),
            Some("[x:=1]{a} refines {a}")
        );
        // replay determinism
        let again = check_script(&script);
        assert_eq!(serde_json::to_string(&report).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn script_failures_stop_at_first() {
        let json = r#"{
            "name": "bad",
            "steps": [
                {"id": "s1", "rule": "axiom", "key": "V"},
                {"id": "s2", "rule": "us", "of": "s1", "subst": "p() ~> x>=0, a ~> x:=x+1"},
                {"id": "s3", "rule": "axiom", "key": "K"}
            ]
        }"#;
        let script: ProofScript = serde_json::from_str(json).unwrap();
        let report = check_script(&script);
        assert!(!report.ok);
        assert_eq!(report.steps.len(), 2);
        assert!(report.steps[1].detail.contains("clash"));
    }

    #[test]
    fn script_requires_premise_free_final() {
        let json = r#"{
            "name": "open",
            "steps": [ {"id": "s1", "rule": "hyp", "formula": "x>=0"} ]
        }"#;
        let script: ProofScript = serde_json::from_str(json).unwrap();
        let report = check_script(&script);
        assert!(!report.ok);
    }
}
