//! The finite registry of concrete axiom formulas and the axiomatic rules.
//!
//! Axioms are concrete formulas (not schemata) over reserved symbols:
//! program constants `a, b, c, d`, function symbols `f, g, h` (0-ary or
//! unary), predicate symbols `p, q, r`, predicationals `P, Q`, and the
//! concrete variables `x, y, t, s`. Instantiation happens exclusively
//! through uniform substitution, whose taboo discipline rejects exactly the
//! unsound instances.
//!
//! Lookup accepts a few unicode aliases for the canonical ASCII keys.

use crate::syntax::{parse_formula, Formula};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use thiserror::Error;

/// Which axiom family an entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Refinement axioms.
    Refinement,
    /// Dynamic-logic axioms.
    Dynamic,
    /// Kleene algebra with tests.
    Kat,
    /// Schematic KAT (nondeterministic assignment laws).
    Skat,
}

/// A registered axiom: key, concrete formula, family tag.
#[derive(Clone, Debug)]
pub struct AxiomEntry {
    pub key: &'static str,
    pub formula: Formula,
    pub family: Family,
    /// Source text, exactly as registered.
    pub text: &'static str,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("unknown axiom `{0}`")]
pub struct UnknownAxiom(pub String);

const TABLE: &[(&str, Family, &str)] = &[
    // --- refinement axioms ---
    (
        "<=t",
        Family::Refinement,
        "{a} refines {c} & {c} refines {b} -> {a} refines {b}",
    ),
    (
        "equiv",
        Family::Refinement,
        "{a} equiv {b} <-> {a} refines {b} & {b} refines {a}",
    ),
    (
        "[<=]",
        Family::Refinement,
        "{a} refines {b} -> ([b]P(||) -> [a]P(||))",
    ),
    ("?", Family::Refinement, "{?p()} refines {?q()} <-> (p() -> q())"),
    (":=", Family::Refinement, "{x:=f()} equiv {x:=*; ?x=f()}"),
    (
        "?det",
        Family::Refinement,
        "{?p(); a} refines {?p(); b} <-> [?p()]({a} refines {b})",
    ),
    (
        ":=det",
        Family::Refinement,
        "{x:=f(); a} refines {x:=f(); b} <-> [x:=f()]({a} refines {b})",
    ),
    ("stutter", Family::Refinement, "{x:=x} equiv {?true}"),
    (
        "++l",
        Family::Refinement,
        "{a ++ b} refines {c} <-> {a} refines {c} & {b} refines {c}",
    ),
    (
        "++r",
        Family::Refinement,
        "{a} refines {b} | {a} refines {c} -> {a} refines {b ++ c}",
    ),
    (
        ";",
        Family::Refinement,
        "{a} refines {c} & [a]({b} refines {d}) -> {a; b} refines {c; d}",
    ),
    (
        "loop-l",
        Family::Refinement,
        "[{a}*]({a; b} refines {b}) -> {{a}*; b} refines {b}",
    ),
    (
        "loop-r",
        Family::Refinement,
        "{a; b} refines {a} -> {a; {b}*} refines {a}",
    ),
    (
        "unloop",
        Family::Refinement,
        "[{a}*]({a} refines {b}) -> {{a}*} refines {{b}*}",
    ),
    (
        ":*merge",
        Family::Refinement,
        "{x:=*; ?p(x); x:=*} equiv {x:=*; ?\\exists y p(y)}",
    ),
    (
        ":=*merge",
        Family::Refinement,
        "{x:=*; ?p(x); x:=f(x)} equiv {x:=*; ?\\exists y (p(y) & x=f(y))}",
    ),
    (
        "ode",
        Family::Refinement,
        "{{x'=f(x) & p(x)}} refines {{x'=g(x) & q(x)}} <-> [{x'=f(x) & p(x)}](x'=g(x) & q(x))",
    ),
    (
        "DW==",
        Family::Refinement,
        "{{x'=f(x) & p(x)}} equiv {?p(x); {x'=f(x) & p(x)}; ?p(x)}",
    ),
    (
        "DE==",
        Family::Refinement,
        "{{x'=f(x) & p(x)}} equiv {{x'=f(x) & p(x)}; x':=f(x)}",
    ),
    (
        "DX",
        Family::Refinement,
        "{x':=f(x); ?p(x)} refines {{x'=f(x) & p(x)}}",
    ),
    (
        "ODEidemp",
        Family::Refinement,
        "{{x'=f(x) & p(x)}; {x'=f(x) & p(x)}} equiv {{x'=f(x) & p(x)}}",
    ),
    // --- dynamic-logic axioms ---
    ("[?]", Family::Dynamic, "[?q()]p() <-> (q() -> p())"),
    ("[:=]", Family::Dynamic, "[x:=f()]p(x) <-> p(f())"),
    ("[:*]", Family::Dynamic, "[x:=*]p(x) <-> \\forall x p(x)"),
    ("[++]", Family::Dynamic, "[a ++ b]P(||) <-> [a]P(||) & [b]P(||)"),
    ("[;]", Family::Dynamic, "[a; b]P(||) <-> [a][b]P(||)"),
    (
        "[*]",
        Family::Dynamic,
        "[{a}*]P(||) <-> P(||) & [{a}*](P(||) -> [a]P(||))",
    ),
    (
        "K",
        Family::Dynamic,
        "[a](P(||) -> Q(||)) -> ([a]P(||) -> [a]Q(||))",
    ),
    (
        "I",
        Family::Dynamic,
        "[{a}*](P(||) -> [a]P(||)) -> (P(||) -> [{a}*]P(||))",
    ),
    ("V", Family::Dynamic, "p() -> [a]p()"),
    (
        "DI",
        Family::Dynamic,
        "(q(x) -> [{x'=f(x) & q(x)}](g(x))'=(h(x))') -> ([{x'=f(x) & q(x)}]g(x)=h(x) <-> [?q(x)]g(x)=h(x))",
    ),
    (
        "DG",
        Family::Dynamic,
        "[{x'=f(x) & q(x)}]p(x) <-> \\exists y [{x'=f(x), y'=g(x)*y+h(x) & q(x)}]p(x)",
    ),
    (
        "DS",
        Family::Dynamic,
        "[{x'=f() & q(x)}]p(x) <-> \\forall t (t>=0 -> (\\forall s (0<=s & s<=t -> q(x+f()*s)) -> [x:=x+f()*t]p(x)))",
    ),
    ("+'", Family::Dynamic, "(f(x)+g(x))' = (f(x))'+(g(x))'"),
    ("-'", Family::Dynamic, "(f(x)-g(x))' = (f(x))'-(g(x))'"),
    (
        "*'",
        Family::Dynamic,
        "(f(x)*g(x))' = (f(x))'*g(x)+f(x)*(g(x))'",
    ),
    ("c'", Family::Dynamic, "(f())' = 0"),
    ("x'", Family::Dynamic, "(x)' = x'"),
    // --- KAT axioms ---
    ("<=refl", Family::Kat, "{a} refines {a}"),
    ("++id", Family::Kat, "{a ++ ?false} equiv {a}"),
    (";assoc", Family::Kat, "{{a; b}; c} equiv {a; b; c}"),
    (";id-l", Family::Kat, "{?true; a} equiv {a}"),
    (";id-r", Family::Kat, "{a; ?true} equiv {a}"),
    ("dist-l", Family::Kat, "{a; {b ++ c}} equiv {a; b ++ a; c}"),
    ("annih-l", Family::Kat, "{?false; a} equiv {?false}"),
    ("annih-r", Family::Kat, "{a; ?false} equiv {?false}"),
    ("unfold-l", Family::Kat, "{{a}*} equiv {?true ++ a; {a}*}"),
    ("unfold-r", Family::Kat, "{{a}*} equiv {?true ++ {a}*; a}"),
    // --- SKAT axioms ---
    (":*comm", Family::Skat, "{x:=*; y:=*} equiv {y:=*; x:=*}"),
    (":*test", Family::Skat, "{x:=*; ?p()} equiv {?p(); x:=*}"),
];

fn registry() -> &'static BTreeMap<&'static str, AxiomEntry> {
    static REG: OnceLock<BTreeMap<&'static str, AxiomEntry>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut m = BTreeMap::new();
        for (key, family, text) in TABLE {
            let formula = parse_formula(text)
                .unwrap_or_else(|e| panic!("axiom {key} does not parse: {e}"));
            m.insert(*key, AxiomEntry { key, formula, family: *family, text });
        }
        m
    })
}

/// Unicode spellings accepted as aliases for canonical ASCII keys.
const ALIASES: &[(&str, &str)] = &[
    ("≤t", "<=t"),
    ("≡", "equiv"),
    ("[≤]", "[<=]"),
    ("∪l", "++l"),
    ("∪r", "++r"),
    ("DW≡", "DW=="),
    ("DE≡", "DE=="),
    ("[∪]", "[++]"),
    ("·'", "*'"),
    ("⋅'", "*'"),
    ("≤refl", "<=refl"),
    ("∪id", "++id"),
];

/// Looks up an axiom by key (canonical or alias).
pub fn lookup(key: &str) -> Result<&'static AxiomEntry, UnknownAxiom> {
    let canon = ALIASES
        .iter()
        .find_map(|(alias, k)| (*alias == key).then_some(*k))
        .unwrap_or(key);
    registry()
        .get(canon)
        .ok_or_else(|| UnknownAxiom(key.to_string()))
}

/// All registered axioms in registry order.
pub fn all_axioms() -> Vec<&'static AxiomEntry> {
    registry().values().collect()
}

/// The number of registered axioms.
pub fn count() -> usize {
    registry().len()
}

/// The shape of an axiomatic rule: named premises and conclusion, with
/// schema variables standing for whole formulas/programs. These rules are
/// applied structurally by the kernel, never through substitution.
#[derive(Clone, Debug)]
pub struct RuleInfo {
    pub name: &'static str,
    pub premises: &'static [&'static str],
    pub conclusion: &'static str,
}

/// The three axiomatic proof rules.
pub fn axiomatic_rules() -> Vec<RuleInfo> {
    vec![
        RuleInfo {
            name: "mp",
            premises: &["phi -> psi", "phi"],
            conclusion: "psi",
        },
        RuleInfo {
            name: "g",
            premises: &["phi"],
            conclusion: "[alpha]phi",
        },
        RuleInfo {
            name: "allgen",
            premises: &["phi"],
            conclusion: "\\forall x phi",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statics::fv_formula;
    use crate::syntax::print_formula;

    #[test]
    fn fifty_axioms() {
        assert_eq!(count(), 50);
        let fam = |f: Family| all_axioms().iter().filter(|a| a.family == f).count();
        assert_eq!(fam(Family::Refinement), 21);
        assert_eq!(fam(Family::Dynamic), 17);
        assert_eq!(fam(Family::Kat), 10);
        assert_eq!(fam(Family::Skat), 2);
    }

    #[test]
    fn all_axioms_round_trip_and_desugar() {
        for ax in all_axioms() {
            let printed = print_formula(&ax.formula);
            let reparsed = crate::syntax::parse_formula(&printed)
                .unwrap_or_else(|e| panic!("axiom {}: {e}", ax.key));
            assert_eq!(reparsed, ax.formula, "axiom {}", ax.key);
            let d = ax.formula.desugar();
            assert!(d.is_sugar_free(), "axiom {}", ax.key);
            assert_eq!(d.desugar(), d, "axiom {} desugar idempotent", ax.key);
        }
    }

    #[test]
    fn no_axiom_mentions_dot() {
        for ax in all_axioms() {
            assert!(!ax.formula.mentions_dot(), "axiom {}", ax.key);
        }
    }

    #[test]
    fn lookup_examples() {
        assert_eq!(
            print_formula(&lookup("[<=]").unwrap().formula),
            "{a} refines {b} -> [b]P(||) -> [a]P(||)"
        );
        let ode = lookup("ode").unwrap();
        assert_eq!(
            print_formula(&ode.formula),
            "{{x'=f(x) & p(x)}} refines {{x'=g(x) & q(x)}} <-> [{x'=f(x) & p(x)}](x'=g(x) & q(x))"
        );
        let unloop = lookup("unloop").unwrap();
        assert_eq!(
            print_formula(&unloop.formula),
            "[{a}*]{a} refines {b} -> {{a}*} refines {{b}*}"
        );
        assert!(lookup("no-such-axiom").is_err());
    }

    #[test]
    fn unicode_aliases() {
        assert_eq!(lookup("≤refl").unwrap().key, "<=refl");
        assert_eq!(lookup("≤t").unwrap().key, "<=t");
        assert_eq!(lookup("∪l").unwrap().key, "++l");
        assert_eq!(lookup("DW≡").unwrap().key, "DW==");
    }

    #[test]
    fn closedness_golden() {
        // Free variables of each axiom after desugaring. Program constants
        // make most refinement axioms depend on all variables.
        let cases: &[(&str, &str)] = &[
            ("<=t", "ALL"),
            ("equiv", "ALL"),
            ("[<=]", "ALL"),
            ("?", "{}"),
            (":=", "{}"),
            ("?det", "ALL"),
            (":=det", "ALL \\ {x}"),
            ("stutter", "{x}"),
            ("++l", "ALL"),
            ("++r", "ALL"),
            (";", "ALL"),
            ("loop-l", "ALL"),
            ("loop-r", "ALL"),
            ("unloop", "ALL"),
            (":*merge", "{}"),
            (":=*merge", "{}"),
            ("ode", "{x}"),
            ("DW==", "{x}"),
            ("DE==", "{x}"),
            ("DX", "{x}"),
            ("ODEidemp", "{x}"),
            ("[?]", "{}"),
            ("[:=]", "{}"),
            ("[:*]", "{}"),
            ("[++]", "ALL"),
            ("[;]", "ALL"),
            ("[*]", "ALL"),
            ("K", "ALL"),
            ("I", "ALL"),
            ("V", "ALL"),
            ("DI", "{x}"),
            ("DG", "{x}"),
            ("DS", "{x}"),
            ("+'", "{x, x'}"),
            ("-'", "{x, x'}"),
            ("*'", "{x, x'}"),
            ("c'", "{}"),
            ("x'", "{x, x'}"),
            ("<=refl", "ALL"),
            ("++id", "ALL"),
            (";assoc", "ALL"),
            (";id-l", "ALL"),
            (";id-r", "ALL"),
            ("dist-l", "ALL"),
            ("annih-l", "ALL"),
            ("annih-r", "ALL"),
            ("unfold-l", "ALL"),
            ("unfold-r", "ALL"),
            (":*comm", "{}"),
            (":*test", "{}"),
        ];
        assert_eq!(cases.len(), 50);
        for (key, expect) in cases {
            let ax = lookup(key).unwrap();
            let fv = fv_formula(&ax.formula.desugar());
            assert_eq!(&fv.render(), expect, "axiom {key}");
        }
    }

    #[test]
    fn rules_listed() {
        let rules = axiomatic_rules();
        assert_eq!(rules.len(), 3);
        assert_eq!(rules[0].name, "mp");
    }
}
