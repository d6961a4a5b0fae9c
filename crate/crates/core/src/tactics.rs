//! Untrusted helpers that compile algebraic reasoning into kernel proof
//! steps. Nothing here extends the trusted base: every emitted step is
//! replayed through the kernel as it is generated, so a bug in a tactic
//! shows up as a failed script, never as a bogus theorem.
//!
//! The central pattern is rewriting with program equivalences: an
//! equivalence `{p} equiv {q}` desugars to a conjunction of two
//! refinements, and the combinators below chain, flip and push such
//! equivalences through sequences and boxes using the registered axioms.

use crate::kernel::{check_script, run_builder_step, Provable, Step};
use crate::syntax::{
    parse_formula, parse_program, print_formula, print_program, Formula, HybridProgram,
};
use crate::usubst::Subst;
use std::collections::BTreeMap;

/// Identifier of a step inside a [`ScriptBuilder`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Id(String);

/// Builds a proof script, replaying each step through the kernel
/// immediately. Panics on kernel failures: tactics run on inputs the
/// author controls, and a failure means the derivation is wrong.
pub struct ScriptBuilder {
    name: String,
    steps: Vec<Step>,
    env: BTreeMap<String, Provable>,
    counter: usize,
}

impl ScriptBuilder {
    pub fn new(name: &str) -> ScriptBuilder {
        ScriptBuilder {
            name: name.to_string(),
            steps: Vec::new(),
            env: BTreeMap::new(),
            counter: 0,
        }
    }

    pub fn provable(&self, id: &Id) -> &Provable {
        &self.env[&id.0]
    }

    pub fn conclusion(&self, id: &Id) -> &Formula {
        self.provable(id).conclusion()
    }

    /// Finishes the script, declaring the final step's conclusion, and
    /// re-checks the whole thing from scratch.
    pub fn finish(self, last: &Id) -> crate::kernel::ProofScript {
        let conclusion = print_formula(self.env[&last.0].conclusion());
        let script = crate::kernel::ProofScript {
            name: self.name,
            conclusion: Some(conclusion),
            steps: self.steps,
        };
        let report = check_script(&script);
        assert!(report.ok, "generated script must check: {report:?}");
        script
    }

    fn push(&mut self, mut step: Step) -> Id {
        self.counter += 1;
        step.id = format!("s{}", self.counter);
        let pv = run_builder_step(&step, &self.env)
            .unwrap_or_else(|e| panic!("tactic emitted a bad step {step:?}: {e}"));
        self.env.insert(step.id.clone(), pv);
        let id = Id(step.id.clone());
        self.steps.push(step);
        id
    }

    fn blank(rule: &str) -> Step {
        Step {
            id: String::new(),
            rule: rule.to_string(),
            key: None,
            of: None,
            subst: None,
            major: None,
            minor: None,
            program: None,
            var: None,
            formula: None,
            target: None,
            equiv: None,
            position: None,
            from: None,
            to: None,
            premise: None,
            with: None,
        }
    }

    // ------------------------------------------------------- primitives

    pub fn axiom(&mut self, key: &str) -> Id {
        let mut s = Self::blank("axiom");
        s.key = Some(key.to_string());
        self.push(s)
    }

    pub fn us(&mut self, of: &Id, subst: &Subst) -> Id {
        let text = subst.to_string();
        debug_assert_eq!(
            &Subst::parse(&text).expect("printed substitution reparses"),
            subst,
            "substitution text round trip"
        );
        let mut s = Self::blank("us");
        s.of = Some(of.0.clone());
        s.subst = Some(text);
        self.push(s)
    }

    pub fn prop(&mut self, formula: &str) -> Id {
        let mut s = Self::blank("prop");
        s.formula = Some(formula.to_string());
        self.push(s)
    }

    pub fn mp(&mut self, major: &Id, minor: &Id) -> Id {
        let mut s = Self::blank("mp");
        s.major = Some(major.0.clone());
        s.minor = Some(minor.0.clone());
        self.push(s)
    }

    pub fn g(&mut self, of: &Id, program: &HybridProgram) -> Id {
        let mut s = Self::blank("g");
        s.of = Some(of.0.clone());
        s.program = Some(print_program(program));
        self.push(s)
    }

    pub fn allgen(&mut self, of: &Id, var: &str) -> Id {
        let mut s = Self::blank("allgen");
        s.of = Some(of.0.clone());
        s.var = Some(var.to_string());
        self.push(s)
    }

    pub fn arith(&mut self, formula: &str) -> Id {
        let mut s = Self::blank("arith");
        s.formula = Some(formula.to_string());
        self.push(s)
    }

    pub fn ur(&mut self, of: &Id, from: &str, to: &str) -> Id {
        let mut s = Self::blank("ur");
        s.of = Some(of.0.clone());
        s.from = Some(from.to_string());
        s.to = Some(to.to_string());
        self.push(s)
    }

    pub fn ce(&mut self, target: &Id, equiv: &Id, position: &[usize]) -> Id {
        let mut s = Self::blank("ce");
        s.target = Some(target.0.clone());
        s.equiv = Some(equiv.0.clone());
        s.position = Some(position.to_vec());
        self.push(s)
    }

    // ------------------------------------------------ propositional glue

    fn ptext(&self, id: &Id) -> String {
        format!("({})", print_formula(self.conclusion(id)))
    }

    /// From `|- A` and `|- B`, proves `|- A & B`.
    pub fn conj(&mut self, a: &Id, b: &Id) -> Id {
        let (ta, tb) = (self.ptext(a), self.ptext(b));
        let taut = self.prop(&format!("{ta} -> {tb} -> {ta} & {tb}"));
        let step = self.mp(&taut, a);
        self.mp(&step, b)
    }

    /// From `|- A & B`, proves `|- A`.
    pub fn proj_left(&mut self, ab: &Id) -> Id {
        let Formula::And(l, _) = self.conclusion(ab) else {
            panic!("proj_left on a non-conjunction")
        };
        let tl = format!("({})", print_formula(l));
        let t = self.ptext(ab);
        let taut = self.prop(&format!("{t} -> {tl}"));
        self.mp(&taut, ab)
    }

    /// From `|- A & B`, proves `|- B`.
    pub fn proj_right(&mut self, ab: &Id) -> Id {
        let Formula::And(_, r) = self.conclusion(ab) else {
            panic!("proj_right on a non-conjunction")
        };
        let tr = format!("({})", print_formula(r));
        let t = self.ptext(ab);
        let taut = self.prop(&format!("{t} -> {tr}"));
        self.mp(&taut, ab)
    }

    /// From `|- A <-> B`, proves the implication `|- A -> B` (`forward`)
    /// or `|- B -> A`.
    pub fn equiv_imp(&mut self, e: &Id, forward: bool) -> Id {
        let Formula::Equiv(l, r) = self.conclusion(e) else {
            panic!("equiv_imp on a non-equivalence")
        };
        let (tl, tr) = (
            format!("({})", print_formula(l)),
            format!("({})", print_formula(r)),
        );
        let t = self.ptext(e);
        let taut = if forward {
            self.prop(&format!("{t} -> ({tl} -> {tr})"))
        } else {
            self.prop(&format!("{t} -> ({tr} -> {tl})"))
        };
        self.mp(&taut, e)
    }

    /// From `|- A <-> B` and `|- B`, proves `|- A`.
    pub fn equiv_backward(&mut self, e: &Id, b: &Id) -> Id {
        let imp = self.equiv_imp(e, false);
        self.mp(&imp, b)
    }

    /// From `|- A <-> B` and `|- A`, proves `|- B`.
    pub fn equiv_forward(&mut self, e: &Id, a: &Id) -> Id {
        let imp = self.equiv_imp(e, true);
        self.mp(&imp, a)
    }

    /// Chains `|- A <-> B` and `|- B <-> C` into `|- A <-> C`.
    pub fn equiv_chain(&mut self, e1: &Id, e2: &Id) -> Id {
        let (c1, c2) = (self.conclusion(e1).clone(), self.conclusion(e2).clone());
        let (Formula::Equiv(a, b1), Formula::Equiv(b2, c)) = (c1, c2) else {
            panic!("equiv_chain on non-equivalences")
        };
        assert_eq!(b1, b2, "equivalence chain must share the middle formula");
        let (ta, tb, tc) = (
            format!("({})", print_formula(&a)),
            format!("({})", print_formula(&b1)),
            format!("({})", print_formula(&c)),
        );
        let taut = self.prop(&format!(
            "({ta} <-> {tb}) -> ({tb} <-> {tc}) -> ({ta} <-> {tc})"
        ));
        let step = self.mp(&taut, e1);
        self.mp(&step, e2)
    }

    /// From `|- A <-> B`, proves `|- B <-> A`.
    pub fn equiv_flip(&mut self, e: &Id) -> Id {
        let Formula::Equiv(l, r) = self.conclusion(e) else {
            panic!("equiv_flip on a non-equivalence")
        };
        let (tl, tr) = (
            format!("({})", print_formula(l)),
            format!("({})", print_formula(r)),
        );
        let taut = self.prop(&format!("({tl} <-> {tr}) -> ({tr} <-> {tl})"));
        self.mp(&taut, e)
    }

    /// From `|- A -> B` and `|- B -> A`, proves `|- A <-> B`.
    pub fn equiv_intro(&mut self, fwd: &Id, bwd: &Id) -> Id {
        let Formula::Imply(a, b) = self.conclusion(fwd) else {
            panic!("equiv_intro forward input is not an implication")
        };
        let (ta, tb) = (
            format!("({})", print_formula(a)),
            format!("({})", print_formula(b)),
        );
        let taut = self.prop(&format!(
            "({ta} -> {tb}) -> ({tb} -> {ta}) -> ({ta} <-> {tb})"
        ));
        let step = self.mp(&taut, fwd);
        self.mp(&step, bwd)
    }

    // ------------------------------------------- refinement combinators

    fn refines_sides(&self, id: &Id) -> (HybridProgram, HybridProgram) {
        match self.conclusion(id) {
            Formula::Refines(a, b) => ((**a).clone(), (**b).clone()),
            other => panic!("expected a refinement, got {}", print_formula(other)),
        }
    }

    /// The two programs of a proved equivalence (conjunction of
    /// refinements after desugaring).
    pub fn equiv_sides(&self, id: &Id) -> (HybridProgram, HybridProgram) {
        match self.conclusion(id) {
            Formula::And(l, _) => match &**l {
                Formula::Refines(a, b) => ((**a).clone(), (**b).clone()),
                other => panic!("expected refinements, got {}", print_formula(other)),
            },
            other => panic!("expected an equivalence, got {}", print_formula(other)),
        }
    }

    /// `|- {p} refines {p}`.
    pub fn refl(&mut self, p: &HybridProgram) -> Id {
        let ax = self.axiom("<=refl");
        let s = Subst::new().prog("a", &print_program(p));
        self.us(&ax, &s)
    }

    /// From `|- {a} refines {b}` and `|- {b} refines {c}`, proves
    /// `|- {a} refines {c}`.
    pub fn trans(&mut self, ab: &Id, bc: &Id) -> Id {
        let (a, b1) = self.refines_sides(ab);
        let (b2, c) = self.refines_sides(bc);
        assert_eq!(b1, b2, "transitivity must share the middle program");
        let ax = self.axiom("<=t");
        let s = Subst::new()
            .prog("a", &print_program(&a))
            .prog("c", &print_program(&b1))
            .prog("b", &print_program(&c));
        let inst = self.us(&ax, &s);
        let both = self.conj(ab, bc);
        self.mp(&inst, &both)
    }

    /// From both refinements, the program equivalence (their conjunction).
    pub fn equiv_of(&mut self, pq: &Id, qp: &Id) -> Id {
        self.conj(pq, qp)
    }

    /// Flips a program equivalence.
    pub fn prog_equiv_flip(&mut self, e: &Id) -> Id {
        let l = self.proj_left(e);
        let r = self.proj_right(e);
        self.conj(&r, &l)
    }

    /// Chains program equivalences.
    pub fn prog_equiv_trans(&mut self, e1: &Id, e2: &Id) -> Id {
        let l1 = self.proj_left(e1);
        let l2 = self.proj_left(e2);
        let fwd = self.trans(&l1, &l2);
        let r2 = self.proj_right(e2);
        let r1 = self.proj_right(e1);
        let bwd = self.trans(&r2, &r1);
        self.conj(&fwd, &bwd)
    }

    /// `|- {{a; b}; c} equiv {a; b; c}`.
    pub fn assoc(&mut self, a: &HybridProgram, b: &HybridProgram, c: &HybridProgram) -> Id {
        let ax = self.axiom(";assoc");
        let s = Subst::new()
            .prog("a", &print_program(a))
            .prog("b", &print_program(b))
            .prog("c", &print_program(c));
        self.us(&ax, &s)
    }

    /// From `|- {p} refines {q}`, proves `|- {p; r} refines {q; r}`.
    pub fn seq_refine(&mut self, pq: &Id, r: &HybridProgram) -> Id {
        let (p, q) = self.refines_sides(pq);
        let ax = self.axiom(";");
        let s = Subst::new()
            .prog("a", &print_program(&p))
            .prog("b", &print_program(r))
            .prog("c", &print_program(&q))
            .prog("d", &print_program(r));
        let inst = self.us(&ax, &s);
        let refl_r = self.refl(r);
        let boxed = self.g(&refl_r, &p);
        let both = self.conj(pq, &boxed);
        self.mp(&inst, &both)
    }

    /// From `|- {p} equiv {q}`, proves `|- {p; r} equiv {q; r}`.
    pub fn rewrite_first(&mut self, e: &Id, r: &HybridProgram) -> Id {
        let fwd = {
            let pq = self.proj_left(e);
            self.seq_refine(&pq, r)
        };
        let bwd = {
            let qp = self.proj_right(e);
            self.seq_refine(&qp, r)
        };
        self.conj(&fwd, &bwd)
    }

    /// From `|- {p} refines {q}`, proves `|- {r; p} refines {r; q}`.
    pub fn seq_refine_second(&mut self, r: &HybridProgram, pq: &Id) -> Id {
        let (p, q) = self.refines_sides(pq);
        let ax = self.axiom(";");
        let s = Subst::new()
            .prog("a", &print_program(r))
            .prog("b", &print_program(&p))
            .prog("c", &print_program(r))
            .prog("d", &print_program(&q));
        let inst = self.us(&ax, &s);
        let refl_r = self.refl(r);
        let boxed = self.g(pq, r);
        let both = self.conj(&refl_r, &boxed);
        self.mp(&inst, &both)
    }

    /// From `|- {p} equiv {q}`, proves `|- {r; p} equiv {r; q}`.
    pub fn rewrite_second(&mut self, r: &HybridProgram, e: &Id) -> Id {
        let fwd = {
            let pq = self.proj_left(e);
            self.seq_refine_second(r, &pq)
        };
        let bwd = {
            let qp = self.proj_right(e);
            self.seq_refine_second(r, &qp)
        };
        self.conj(&fwd, &bwd)
    }

    /// From `|- {p} equiv {q}`, proves `|- [p]F <-> [q]F`.
    pub fn box_mono(&mut self, e: &Id, f: &Formula) -> Id {
        let (p, q) = self.equiv_sides(e);
        let ftext = print_formula(f);
        let ax1 = self.axiom("[<=]");
        let s1 = Subst::new()
            .prog("a", &print_program(&p))
            .prog("b", &print_program(&q))
            .predicational("P", &ftext);
        let inst1 = self.us(&ax1, &s1); // (p<=q) -> ([q]F -> [p]F)
        let ltr = self.proj_left(e);
        let q_to_p = self.mp(&inst1, &ltr);
        let ax2 = self.axiom("[<=]");
        let s2 = Subst::new()
            .prog("a", &print_program(&q))
            .prog("b", &print_program(&p))
            .predicational("P", &ftext);
        let inst2 = self.us(&ax2, &s2); // (q<=p) -> ([p]F -> [q]F)
        let rtl = self.proj_right(e);
        let p_to_q = self.mp(&inst2, &rtl);
        self.equiv_intro(&p_to_q, &q_to_p)
    }

    // ---------------------------------------------------- test algebra

    /// The `?` axiom instance `|- {?F} refines {?G} <-> (F -> G)`.
    pub fn test_axiom_inst(&mut self, f: &Formula, g: &Formula) -> Id {
        let ax = self.axiom("?");
        let s = Subst::new()
            .pred("p", 0, &print_formula(f))
            .pred("q", 0, &print_formula(g));
        self.us(&ax, &s)
    }

    /// `|- {?F} refines {?G}` when `F -> G` is a propositional tautology.
    pub fn test_refine_prop(&mut self, f: &Formula, g: &Formula) -> Id {
        let e = self.test_axiom_inst(f, g);
        let imp = self.prop(&format!(
            "({}) -> ({})",
            print_formula(f),
            print_formula(g)
        ));
        self.equiv_backward(&e, &imp)
    }

    /// From `|- ctx -> X`, proves `|- [?ctx]X` via the `[?]` axiom.
    pub fn boxed_via_test(&mut self, ctx: &Formula, cond: &Id) -> Id {
        let Formula::Imply(a, x) = self.conclusion(cond).clone() else {
            panic!("boxed_via_test expects an implication")
        };
        assert_eq!(*a, ctx.desugar(), "context mismatch");
        let ax = self.axiom("[?]");
        let s = Subst::new()
            .pred("q", 0, &print_formula(ctx))
            .pred("p", 0, &print_formula(&x));
        let inst = self.us(&ax, &s); // [?ctx]X <-> (ctx -> X)
        self.equiv_backward(&inst, cond)
    }

    /// `|- ctx -> ({?F} refines {?G})` when `ctx -> (F -> G)` is a
    /// propositional tautology.
    pub fn test_refine_under(&mut self, ctx: &Formula, f: &Formula, g: &Formula) -> Id {
        let e = self.test_axiom_inst(f, g);
        let (tf, tg, tc) = (
            format!("({})", print_formula(f)),
            format!("({})", print_formula(g)),
            format!("({})", print_formula(ctx)),
        );
        let x = self.ptext(&e);
        let lhs = format!("({})", print_formula(&Formula::refines(
            HybridProgram::test(f.clone()),
            HybridProgram::test(g.clone()),
        )));
        let taut = self.prop(&format!(
            "{x} -> (({tc} -> ({tf} -> {tg})) -> ({tc} -> {lhs}))"
        ));
        let step = self.mp(&taut, &e);
        let inner = self.prop(&format!("{tc} -> ({tf} -> {tg})"));
        self.mp(&step, &inner)
    }

    /// `|- {?(F & G)} equiv {?F; ?G}`.
    pub fn test_and_equiv(&mut self, f: &Formula, g: &Formula) -> Id {
        let and_fg = Formula::and(f.clone(), g.clone()).desugar();
        let t_and = HybridProgram::test(and_fg.clone());
        let t_f = HybridProgram::test(f.clone());
        let t_g = HybridProgram::test(g.clone());

        // direction 1: ?(F&G) <= ?F;?G
        let d1 = {
            let idr = self.axiom(";id-r");
            let idr_inst = self.us(&idr, &Subst::new().prog("a", &print_program(&t_and)));
            // ?(F&G) <= ?(F&G);?true
            let a_step = self.proj_right(&idr_inst);
            let seq = self.axiom(";");
            let s = Subst::new()
                .prog("a", &print_program(&t_and))
                .prog("b", "?true")
                .prog("c", &print_program(&t_f))
                .prog("d", &print_program(&t_g));
            let seq_inst = self.us(&seq, &s);
            let p1 = self.test_refine_prop(&and_fg, f);
            let p2 = {
                let inner = self.test_refine_under(&and_fg, &Formula::True, g);
                self.boxed_via_test(&and_fg, &inner)
            };
            let both = self.conj(&p1, &p2);
            let b_step = self.mp(&seq_inst, &both);
            self.trans(&a_step, &b_step)
        };
        // direction 2: ?F;?G <= ?(F&G)
        let d2 = {
            let idl = self.axiom(";id-l");
            let idl_inst = self.us(&idl, &Subst::new().prog("a", &print_program(&t_and)));
            let seq = self.axiom(";");
            let s = Subst::new()
                .prog("a", &print_program(&t_f))
                .prog("b", &print_program(&t_g))
                .prog("c", "?true")
                .prog("d", &print_program(&t_and));
            let seq_inst = self.us(&seq, &s);
            let p1 = self.test_refine_prop(f, &Formula::True);
            let p2 = {
                let inner = self.test_refine_under(f, g, &and_fg);
                self.boxed_via_test(f, &inner)
            };
            let both = self.conj(&p1, &p2);
            let to_mid = self.mp(&seq_inst, &both);
            let mid_done = self.proj_left(&idl_inst);
            self.trans(&to_mid, &mid_done)
        };
        self.conj(&d1, &d2)
    }

    /// `|- {?F} equiv {?G}` when both implications are tautologies.
    pub fn test_equiv_prop(&mut self, f: &Formula, g: &Formula) -> Id {
        let d1 = self.test_refine_prop(f, g);
        let d2 = self.test_refine_prop(g, f);
        self.conj(&d1, &d2)
    }

    /// `|- {?F} equiv {?G}` with both implications discharged by the
    /// linear-arithmetic rule.
    pub fn test_equiv_arith(&mut self, f: &Formula, g: &Formula) -> Id {
        let e1 = self.test_axiom_inst(f, g);
        let i1 = self.arith(&format!(
            "({}) -> ({})",
            print_formula(f),
            print_formula(g)
        ));
        let d1 = self.equiv_backward(&e1, &i1);
        let e2 = self.test_axiom_inst(g, f);
        let i2 = self.arith(&format!(
            "({}) -> ({})",
            print_formula(g),
            print_formula(f)
        ));
        let d2 = self.equiv_backward(&e2, &i2);
        self.conj(&d1, &d2)
    }

    // -------------------------------------- nondeterministic assignment

    /// `|- {v:=e} equiv {v:=*; ?v=e}`, renaming the axiom when v is not
    /// x. `e` must not mention `v` (the taboo check enforces it).
    pub fn update_at(&mut self, v: &str, e: &str) -> Id {
        let ax = self.axiom(":=");
        let at_v = if v == "x" { ax } else { self.ur(&ax, "x", v) };
        self.us(&at_v, &Subst::new().func("f", 0, e))
    }

    /// `|- {v:=*; ?F} equiv {?F; v:=*}`; `F` must not mention `v`.
    pub fn rand_test_comm_at(&mut self, v: &str, f: &Formula) -> Id {
        let ax = self.axiom(":*test");
        let at_v = if v == "x" { ax } else { self.ur(&ax, "x", v) };
        self.us(&at_v, &Subst::new().pred("p", 0, &print_formula(f)))
    }

    /// `|- {r:=*; v:=*} equiv {v:=*; r:=*}` for `{r, v} == {x, y}`.
    pub fn rand_comm_at(&mut self, r: &str, v: &str) -> Id {
        let ax = self.axiom(":*comm");
        match (r, v) {
            ("x", "y") => ax,
            ("y", "x") => self.prog_equiv_flip(&ax),
            _ => panic!("rand_comm_at supports the x/y pair only"),
        }
    }

    /// `|- {v:=e; ?F} equiv {?F; v:=e}` where neither F nor e mentions v.
    pub fn test_assign_comm(&mut self, v: &str, e: &str, f: &Formula) -> Id {
        let rand = parse_program(&format!("{v}:=*")).unwrap();
        let test_f = HybridProgram::test(f.clone());
        let eq_test = parse_formula(&format!("{v}={e}")).unwrap();
        let t_eq = HybridProgram::test(eq_test.clone());

        // v:=e; ?F == (v:=*; ?v=e); ?F
        let upd = self.update_at(v, e);
        let step1 = self.rewrite_first(&upd, &test_f);
        // == v:=*; (?v=e; ?F)
        let a1 = self.assoc(&rand, &t_eq, &test_f);
        let step2 = self.prog_equiv_trans(&step1, &a1);
        // == v:=*; ?(v=e & F)
        let ta = self.test_and_equiv(&eq_test, f);
        let flipped = self.prog_equiv_flip(&ta);
        let inner1 = self.rewrite_second(&rand, &flipped);
        let step3 = self.prog_equiv_trans(&step2, &inner1);
        // == v:=*; ?(F & v=e)
        let comm = {
            let lhs = Formula::and(eq_test.clone(), f.clone());
            let rhs = Formula::and(f.clone(), eq_test.clone());
            self.test_equiv_prop(&lhs, &rhs)
        };
        let inner2 = self.rewrite_second(&rand, &comm);
        let step4 = self.prog_equiv_trans(&step3, &inner2);
        // == v:=*; (?F; ?v=e)
        let ta2 = self.test_and_equiv(f, &eq_test);
        let inner3 = self.rewrite_second(&rand, &ta2);
        let step5 = self.prog_equiv_trans(&step4, &inner3);
        // == (v:=*; ?F); ?v=e
        let a2 = self.assoc(&rand, &test_f, &t_eq);
        let a2f = self.prog_equiv_flip(&a2);
        let step6 = self.prog_equiv_trans(&step5, &a2f);
        // == (?F; v:=*); ?v=e
        let rt = self.rand_test_comm_at(v, f);
        let head = self.rewrite_first(&rt, &t_eq);
        let step7 = self.prog_equiv_trans(&step6, &head);
        // == ?F; (v:=*; ?v=e)
        let a3 = self.assoc(&test_f, &rand, &t_eq);
        let step8 = self.prog_equiv_trans(&step7, &a3);
        // == ?F; v:=e
        let upd2 = self.update_at(v, e);
        let upd2f = self.prog_equiv_flip(&upd2);
        let tail = self.rewrite_second(&test_f, &upd2f);
        self.prog_equiv_trans(&step8, &tail)
    }

    /// `|- {r:=*; v:=e} equiv {v:=e; r:=*}` for r != v in {x, y}, with r
    /// not free in e.
    pub fn rand_assign_comm(&mut self, r: &str, v: &str, e: &str) -> Id {
        let rand_r = parse_program(&format!("{r}:=*")).unwrap();
        let rand_v = parse_program(&format!("{v}:=*")).unwrap();
        let eq_test = parse_formula(&format!("{v}={e}")).unwrap();
        let t_eq = HybridProgram::test(eq_test.clone());

        // r:=*; v:=e == r:=*; (v:=*; ?v=e)
        let upd = self.update_at(v, e);
        let step1 = self.rewrite_second(&rand_r, &upd);
        // == (r:=*; v:=*); ?v=e
        let a1 = self.assoc(&rand_r, &rand_v, &t_eq);
        let a1f = self.prog_equiv_flip(&a1);
        let step2 = self.prog_equiv_trans(&step1, &a1f);
        // == (v:=*; r:=*); ?v=e
        let rc = self.rand_comm_at(r, v);
        let head = self.rewrite_first(&rc, &t_eq);
        let step3 = self.prog_equiv_trans(&step2, &head);
        // == v:=*; (r:=*; ?v=e)
        let a2 = self.assoc(&rand_v, &rand_r, &t_eq);
        let step4 = self.prog_equiv_trans(&step3, &a2);
        // == v:=*; (?v=e; r:=*)
        let rt = self.rand_test_comm_at(r, &eq_test);
        let inner = self.rewrite_second(&rand_v, &rt);
        let step5 = self.prog_equiv_trans(&step4, &inner);
        // == (v:=*; ?v=e); r:=*
        let a3 = self.assoc(&rand_v, &t_eq, &rand_r);
        let a3f = self.prog_equiv_flip(&a3);
        let step6 = self.prog_equiv_trans(&step5, &a3f);
        // == v:=e; r:=*
        let upd2 = self.update_at(v, e);
        let upd2f = self.prog_equiv_flip(&upd2);
        let tail = self.rewrite_first(&upd2f, &rand_r);
        self.prog_equiv_trans(&step6, &tail)
    }

    /// `|- {x:=e; A(x)} equiv {x:=e; B(x)}` where `A(.)` and `B(.)` are
    /// program texts over the dot that coincide syntactically at `.` = e.
    pub fn det_second_rewrite(&mut self, e: &str, alpha_dot: &str, beta_dot: &str) -> Id {
        let subst_dot = |pat: &str, arg: &str| pat.replace('.', &format!("({arg})"));
        let alpha_x = parse_program(&subst_dot(alpha_dot, "x")).unwrap();
        let beta_x = parse_program(&subst_dot(beta_dot, "x")).unwrap();
        let alpha_e = parse_program(&subst_dot(alpha_dot, e)).unwrap();
        let beta_e = parse_program(&subst_dot(beta_dot, e)).unwrap();
        assert_eq!(alpha_e, beta_e, "instances at e must coincide");

        let mut dir = |me: &mut Self, from: &HybridProgram, to: &HybridProgram, from_dot: &str, to_dot: &str| -> Id {
            let det = me.axiom(":=det");
            let det_inst = me.us(
                &det,
                &Subst::new()
                    .func("f", 0, e)
                    .prog("a", &print_program(from))
                    .prog("b", &print_program(to)),
            );
            let assign = me.axiom("[:=]");
            let p_repl = format!(
                "{{{}}} refines {{{}}}",
                subst_dot(from_dot, "."),
                subst_dot(to_dot, ".")
            );
            let inst = me.us(
                &assign,
                &Subst::new().func("f", 0, e).pred("p", 1, &p_repl),
            );
            let refl = me.refl(&parse_program(&subst_dot(from_dot, e)).unwrap());
            let boxed = me.equiv_backward(&inst, &refl);
            me.equiv_backward(&det_inst, &boxed)
        };
        let d1 = dir(self, &alpha_x, &beta_x, alpha_dot, beta_dot);
        let d2 = dir(self, &beta_x, &alpha_x, beta_dot, alpha_dot);
        self.conj(&d1, &d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::check_script;

    #[test]
    fn conj_proj_round_trip() {
        let mut b = ScriptBuilder::new("glue");
        let p = b.arith("1>=0");
        let q = b.arith("2>=0");
        let both = b.conj(&p, &q);
        let back = b.proj_left(&both);
        assert_eq!(b.conclusion(&back), b.conclusion(&p));
        let script = b.finish(&back);
        assert!(check_script(&script).ok);
    }

    #[test]
    fn refl_and_trans() {
        let mut b = ScriptBuilder::new("chain");
        let p1 = parse_program("x:=1").unwrap();
        let r1 = b.refl(&p1);
        let r2 = b.refl(&p1);
        let t = b.trans(&r1, &r2);
        assert_eq!(print_formula(b.conclusion(&t)), "{x:=1} refines {x:=1}");
        b.finish(&t);
    }

    #[test]
    fn rewrite_first_on_update() {
        let mut b = ScriptBuilder::new("rw");
        let upd = b.update_at("x", "f()");
        let tail = parse_program("x:=*").unwrap();
        let rw = b.rewrite_first(&upd, &tail);
        let (l, r) = b.equiv_sides(&rw);
        assert_eq!(print_program(&l), "x:=f(); x:=*");
        assert_eq!(print_program(&r), "{x:=*; ?x=f()}; x:=*");
        b.finish(&rw);
    }

    #[test]
    fn test_and_checks() {
        let mut b = ScriptBuilder::new("testand");
        let f = parse_formula("p()").unwrap();
        let g = parse_formula("q()").unwrap();
        let e = b.test_and_equiv(&f, &g);
        let (l, r) = b.equiv_sides(&e);
        assert_eq!(print_program(&l), "?p() & q()");
        assert_eq!(print_program(&r), "?p(); ?q()");
        b.finish(&e);
    }

    #[test]
    fn box_mono_on_stutter() {
        let mut b = ScriptBuilder::new("boxmono");
        let st = b.axiom("stutter");
        let f = parse_formula("y>=0").unwrap();
        let e = b.box_mono(&st, &f);
        assert_eq!(
            print_formula(b.conclusion(&e)),
            "[x:=x]y>=0 <-> [?true]y>=0"
        );
        b.finish(&e);
    }

    #[test]
    fn update_renames_to_other_variables() {
        let mut b = ScriptBuilder::new("upd-y");
        let e = b.update_at("y", "g(f())");
        let (l, r) = b.equiv_sides(&e);
        assert_eq!(print_program(&l), "y:=g(f())");
        assert_eq!(print_program(&r), "y:=*; ?y=g(f())");
        b.finish(&e);
    }

    #[test]
    fn rand_assign_comm_checks() {
        let mut b = ScriptBuilder::new("rac");
        let e = b.rand_assign_comm("y", "x", "f()");
        let (l, r) = b.equiv_sides(&e);
        assert_eq!(print_program(&l), "y:=*; x:=f()");
        assert_eq!(print_program(&r), "x:=f(); y:=*");
        b.finish(&e);
    }
}
