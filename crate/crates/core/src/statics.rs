//! Static semantics: syntactic free, bound and must-bound variables, plus
//! the finite-or-cofinite variable set algebra they need. `BV` of a program
//! constant is the set of all variables, hence the cofinite variant.

use crate::syntax::{Formula, HybridProgram, Term, Variable};
use std::collections::BTreeSet;

/// A set of variables that is either finite or the complement of a finite
/// set. All operations are total and closed over the two variants, and
/// equality is structural after normalization (`BTreeSet` keeps both
/// variants sorted).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarSet {
    Finite(BTreeSet<Variable>),
    /// The complement of the given finite set; `CoFinite(∅)` is the set of
    /// all variables.
    CoFinite(BTreeSet<Variable>),
}

impl VarSet {
    pub fn empty() -> VarSet {
        VarSet::Finite(BTreeSet::new())
    }

    /// The set of all variables.
    pub fn all() -> VarSet {
        VarSet::CoFinite(BTreeSet::new())
    }

    pub fn singleton(v: Variable) -> VarSet {
        VarSet::Finite([v].into_iter().collect())
    }

    pub fn from_iter<I: IntoIterator<Item = Variable>>(it: I) -> VarSet {
        VarSet::Finite(it.into_iter().collect())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, VarSet::Finite(s) if s.is_empty())
    }

    pub fn contains(&self, v: &Variable) -> bool {
        match self {
            VarSet::Finite(s) => s.contains(v),
            VarSet::CoFinite(c) => !c.contains(v),
        }
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        use VarSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.union(b).cloned().collect()),
            (Finite(a), CoFinite(c)) | (CoFinite(c), Finite(a)) => {
                CoFinite(c.difference(a).cloned().collect())
            }
            (CoFinite(c), CoFinite(d)) => CoFinite(c.intersection(d).cloned().collect()),
        }
    }

    pub fn intersect(&self, other: &VarSet) -> VarSet {
        use VarSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.intersection(b).cloned().collect()),
            (Finite(a), CoFinite(c)) | (CoFinite(c), Finite(a)) => {
                Finite(a.difference(c).cloned().collect())
            }
            (CoFinite(c), CoFinite(d)) => CoFinite(c.union(d).cloned().collect()),
        }
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        use VarSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.difference(b).cloned().collect()),
            // A \ (V \ C) = A ∩ C
            (Finite(a), CoFinite(c)) => Finite(a.intersection(c).cloned().collect()),
            // (V \ C) \ B = V \ (C ∪ B)
            (CoFinite(c), Finite(b)) => CoFinite(c.union(b).cloned().collect()),
            // (V \ C) \ (V \ D) = D \ C
            (CoFinite(c), CoFinite(d)) => Finite(d.difference(c).cloned().collect()),
        }
    }

    pub fn subset_of(&self, other: &VarSet) -> bool {
        self.difference(other).is_empty()
    }

    /// The differential symbols associated with the base variables of a
    /// finite set; differential symbols map to themselves.
    pub fn primed(&self) -> VarSet {
        match self {
            VarSet::Finite(s) => {
                VarSet::Finite(s.iter().map(|v| v.primed()).collect())
            }
            VarSet::CoFinite(_) => VarSet::all(),
        }
    }

    /// Renders as a sorted list `{x, y}` or `ALL \ {x}` for cofinite sets.
    pub fn render(&self) -> String {
        fn list(s: &BTreeSet<Variable>) -> String {
            let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            format!("{{{}}}", items.join(", "))
        }
        match self {
            VarSet::Finite(s) => list(s),
            VarSet::CoFinite(c) if c.is_empty() => "ALL".to_string(),
            VarSet::CoFinite(c) => format!("ALL \\ {}", list(c)),
        }
    }
}

impl std::fmt::Display for VarSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Free variables of a term.
pub fn fv_term(t: &Term) -> VarSet {
    match t {
        Term::Var(v) => VarSet::singleton(v.clone()),
        Term::Number(_) | Term::Dot(_) => VarSet::empty(),
        Term::FuncApp { args, .. } => args
            .iter()
            .fold(VarSet::empty(), |acc, a| acc.union(&fv_term(a))),
        Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
            fv_term(a).union(&fv_term(b))
        }
        Term::Neg(a) => fv_term(a),
        // FV((e)') = FV(e) ∪ FV(e)'
        Term::Differential(a) => {
            let fv = fv_term(a);
            let primed = fv.primed();
            fv.union(&primed)
        }
    }
}

/// Free variables of a formula. The refinement case is
/// `FV(a) ∪ FV(b) ∪ ((BV(a) ∪ BV(b)) \ (MBV(a) ∩ MBV(b)))`: variables that
/// may be written by one side but are not certainly written by both still
/// influence whether a final state of one program is reachable by the other.
pub fn fv_formula(f: &Formula) -> VarSet {
    match f {
        Formula::Cmp(_, a, b) => fv_term(a).union(&fv_term(b)),
        Formula::PredApp { args, .. } => args
            .iter()
            .fold(VarSet::empty(), |acc, a| acc.union(&fv_term(a))),
        Formula::Predicational(_) => VarSet::all(),
        Formula::True | Formula::False => VarSet::empty(),
        Formula::Not(a) => fv_formula(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
            fv_formula(a).union(&fv_formula(b))
        }
        Formula::Forall(x, a) | Formula::Exists(x, a) => {
            fv_formula(a).difference(&VarSet::singleton(x.clone()))
        }
        Formula::Box_(p, a) | Formula::Diamond(p, a) => {
            fv_program(p).union(&fv_formula(a).difference(&mbv(p)))
        }
        Formula::Refines(a, b) | Formula::ProgEquiv(a, b) => {
            let may = bv(a).union(&bv(b));
            let must = mbv(a).intersect(&mbv(b));
            fv_program(a)
                .union(&fv_program(b))
                .union(&may.difference(&must))
        }
    }
}

/// Free variables of a hybrid program.
pub fn fv_program(p: &HybridProgram) -> VarSet {
    match p {
        HybridProgram::ProgConst(_) => VarSet::all(),
        HybridProgram::Test(f) => fv_formula(f),
        HybridProgram::Assign(_, t) => fv_term(t),
        HybridProgram::AssignAny(_) => VarSet::empty(),
        // FV({x'=e & q}) = {x} ∪ FV(e) ∪ FV(q); the x' are bound, not free.
        HybridProgram::ODE { eqs, domain } => {
            let mut acc = fv_formula(domain);
            for (x, e) in eqs {
                acc = acc.union(&VarSet::singleton(x.clone())).union(&fv_term(e));
            }
            acc
        }
        HybridProgram::Choice(a, b) => fv_program(a).union(&fv_program(b)),
        HybridProgram::Seq(a, b) => {
            fv_program(a).union(&fv_program(b).difference(&mbv(a)))
        }
        HybridProgram::Loop(a) => fv_program(a),
    }
}

/// Bound variables of a hybrid program: variables that may be written.
pub fn bv(p: &HybridProgram) -> VarSet {
    match p {
        HybridProgram::ProgConst(_) => VarSet::all(),
        HybridProgram::Test(_) => VarSet::empty(),
        HybridProgram::Assign(x, _) | HybridProgram::AssignAny(x) => {
            VarSet::singleton(x.clone())
        }
        HybridProgram::ODE { eqs, .. } => VarSet::from_iter(
            eqs.iter()
                .flat_map(|(x, _)| [x.clone(), x.primed()].into_iter()),
        ),
        HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => bv(a).union(&bv(b)),
        HybridProgram::Loop(a) => bv(a),
    }
}

/// Must-bound variables of a hybrid program: variables written on all runs.
pub fn mbv(p: &HybridProgram) -> VarSet {
    match p {
        HybridProgram::ProgConst(_) => VarSet::empty(),
        HybridProgram::Test(_) => VarSet::empty(),
        HybridProgram::Assign(x, _) | HybridProgram::AssignAny(x) => {
            VarSet::singleton(x.clone())
        }
        HybridProgram::ODE { eqs, .. } => VarSet::from_iter(
            eqs.iter()
                .flat_map(|(x, _)| [x.clone(), x.primed()].into_iter()),
        ),
        HybridProgram::Choice(a, b) => mbv(a).intersect(&mbv(b)),
        HybridProgram::Seq(a, b) => mbv(a).union(&mbv(b)),
        HybridProgram::Loop(_) => VarSet::empty(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_program, parse_term};

    fn vs(names: &[&str]) -> VarSet {
        VarSet::from_iter(names.iter().map(|n| {
            if let Some(base) = n.strip_suffix('\'') {
                Variable::diff(base)
            } else {
                Variable::base(*n)
            }
        }))
    }

    #[test]
    fn fv_term_examples() {
        assert_eq!(fv_term(&parse_term("x + y").unwrap()), vs(&["x", "y"]));
        assert_eq!(
            fv_term(&parse_term("(x*y)'").unwrap()),
            vs(&["x", "y", "x'", "y'"])
        );
        assert_eq!(fv_term(&parse_term("f()").unwrap()), VarSet::empty());
    }

    #[test]
    fn fv_formula_examples() {
        assert_eq!(
            fv_formula(&parse_formula("{?true} refines {x:=1}").unwrap()),
            vs(&["x"])
        );
        assert_eq!(
            fv_formula(&parse_formula("[x:=1]x>=y").unwrap()),
            vs(&["y"])
        );
        assert_eq!(
            fv_formula(&parse_formula("\\forall x x>=y").unwrap()),
            vs(&["y"])
        );
    }

    #[test]
    fn bv_mbv_examples() {
        let p = parse_program("x:=1 ++ ?true").unwrap();
        assert_eq!(bv(&p), vs(&["x"]));
        assert_eq!(mbv(&p), VarSet::empty());

        let ode = parse_program("{x'=v & v>=0}").unwrap();
        assert_eq!(bv(&ode), vs(&["x", "x'"]));
        assert_eq!(mbv(&ode), vs(&["x", "x'"]));

        let seq = parse_program("x:=*; ?x>=y").unwrap();
        assert_eq!(fv_program(&seq), vs(&["y"]));
    }

    #[test]
    fn cofinite_algebra() {
        let all = VarSet::all();
        let x = vs(&["x"]);
        assert!(all.contains(&Variable::base("q")));
        assert_eq!(all.difference(&x), VarSet::CoFinite(vs_set(&["x"])));
        assert_eq!(all.intersect(&x), x);
        assert_eq!(x.difference(&all), VarSet::empty());
        assert!(x.subset_of(&all));
        assert!(!all.subset_of(&x));
        let cof_x = VarSet::CoFinite(vs_set(&["x"]));
        assert_eq!(cof_x.union(&x), all);
        assert_eq!(cof_x.difference(&cof_x), VarSet::empty());
    }

    fn vs_set(names: &[&str]) -> BTreeSet<Variable> {
        names.iter().map(|n| Variable::base(*n)).collect()
    }

    #[test]
    fn prog_const_is_cofinite() {
        let p = parse_program("a").unwrap();
        assert_eq!(bv(&p), VarSet::all());
        assert_eq!(fv_program(&p), VarSet::all());
        assert_eq!(mbv(&p), VarSet::empty());
    }

    #[test]
    fn render_formats() {
        assert_eq!(vs(&["x", "y"]).render(), "{x, y}");
        assert_eq!(VarSet::all().render(), "ALL");
        assert_eq!(
            VarSet::CoFinite(vs_set(&["x"])).render(),
            "ALL \\ {x}"
        );
    }
}
