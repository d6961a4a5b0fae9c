//! Multivariate polynomials over exact rationals, used for symbolic ODE
//! solutions, coefficient comparison and symbolic differentiation, plus
//! exact univariate sign decisions on intervals via Sturm chains.

use crate::syntax::{Term, Variable};
use num::{BigRational, One, Zero};
use std::collections::BTreeMap;

/// A monomial: variable -> exponent, exponents > 0.
pub type Monomial = BTreeMap<Variable, u32>;

/// A polynomial as a map from monomials to nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    pub fn var(v: Variable) -> Poly {
        let mut m = Monomial::new();
        m.insert(v, 1);
        Poly { terms: [(m, BigRational::one())].into_iter().collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_empty())
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_zero() {
            Some(BigRational::zero())
        } else if self.is_constant() {
            self.terms.get(&Monomial::new()).cloned()
        } else {
            None
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let entry = out.terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                out.terms.remove(m);
            }
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                let c = c1 * c2;
                let entry = out.terms.entry(m).or_insert_with(BigRational::zero);
                *entry += c;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Partial derivative with respect to `v`.
    pub fn derivative(&self, v: &Variable) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if let Some(&e) = m.get(v) {
                let mut m2 = m.clone();
                if e == 1 {
                    m2.remove(v);
                } else {
                    m2.insert(v.clone(), e - 1);
                }
                let c2 = c * BigRational::from_integer(e.into());
                let entry = out.terms.entry(m2).or_insert_with(BigRational::zero);
                *entry += c2;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    /// Antiderivative in `v` with constant 0.
    pub fn integrate(&self, v: &Variable) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.get(v).copied().unwrap_or(0);
            let mut m2 = m.clone();
            m2.insert(v.clone(), e + 1);
            let c2 = c / BigRational::from_integer((e + 1).into());
            out.terms.insert(m2, c2);
        }
        out
    }

    /// Substitutes polynomials for variables; unbound variables stay.
    pub fn subst(&self, bindings: &BTreeMap<Variable, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for (v, e) in m {
                let base = bindings
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| Poly::var(v.clone()));
                for _ in 0..*e {
                    term = term.mul(&base);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Evaluates under a total assignment.
    pub fn eval(&self, env: &dyn Fn(&Variable) -> BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (var, e) in m {
                let x = env(var);
                for _ in 0..*e {
                    v *= x.clone();
                }
            }
            acc += v;
        }
        acc
    }

    pub fn variables(&self) -> std::collections::BTreeSet<Variable> {
        self.terms
            .iter()
            .flat_map(|(m, _)| m.keys().cloned())
            .collect()
    }

    pub fn degree_in(&self, v: &Variable) -> u32 {
        self.terms
            .keys()
            .map(|m| m.get(v).copied().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Coefficients in `v`, index = exponent, as polynomials in the others.
    pub fn coeffs_in(&self, v: &Variable) -> Vec<Poly> {
        let d = self.degree_in(v) as usize;
        let mut out = vec![Poly::zero(); d + 1];
        for (m, c) in &self.terms {
            let e = m.get(v).copied().unwrap_or(0) as usize;
            let mut m2 = m.clone();
            m2.remove(v);
            let entry = out[e].terms.entry(m2).or_insert_with(BigRational::zero);
            *entry += c;
        }
        for p in &mut out {
            p.terms.retain(|_, c| !c.is_zero());
        }
        out
    }

    /// Converts back to a term (sum of products).
    pub fn to_term(&self) -> Term {
        if self.is_zero() {
            return Term::num(0);
        }
        let mut acc: Option<Term> = None;
        for (m, c) in &self.terms {
            let mut factors: Vec<Term> = Vec::new();
            if !c.is_one() || m.is_empty() {
                factors.push(Term::rat(c.clone()));
            }
            for (v, e) in m {
                for _ in 0..*e {
                    factors.push(Term::Var(v.clone()));
                }
            }
            let prod = factors
                .into_iter()
                .reduce(Term::times)
                .expect("nonempty monomial");
            acc = Some(match acc {
                None => prod,
                Some(t) => Term::plus(t, prod),
            });
        }
        acc.unwrap()
    }
}

/// Errors from converting a term to a polynomial.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("term contains a symbol application: {0}")]
    Symbol(String),
    #[error("term contains a differential: {0}")]
    Differential(String),
    #[error("term contains a dot placeholder")]
    Dot,
}

/// Converts a symbol-free, differential-free term into a polynomial.
pub fn term_to_poly(t: &Term) -> Result<Poly, PolyError> {
    match t {
        Term::Var(v) => Ok(Poly::var(v.clone())),
        Term::Number(n) => Ok(Poly::constant(n.clone())),
        Term::Dot(_) => Err(PolyError::Dot),
        Term::FuncApp { name, .. } => Err(PolyError::Symbol(name.clone())),
        Term::Plus(a, b) => Ok(term_to_poly(a)?.add(&term_to_poly(b)?)),
        Term::Minus(a, b) => Ok(term_to_poly(a)?.sub(&term_to_poly(b)?)),
        Term::Times(a, b) => Ok(term_to_poly(a)?.mul(&term_to_poly(b)?)),
        Term::Neg(a) => Ok(term_to_poly(a)?.neg()),
        Term::Differential(t) => Err(PolyError::Differential(t.to_string())),
    }
}

/// Exact univariate sign analysis via Sturm chains and Tarski queries.
pub mod sturm {
    use super::*;

    /// Dense univariate polynomial, index = degree.
    #[derive(Clone, Debug, PartialEq, Eq)]
    pub struct UniPoly(pub Vec<BigRational>);

    impl UniPoly {
        pub fn from_poly(p: &Poly, v: &Variable) -> Option<UniPoly> {
            let coeffs = p.coeffs_in(v);
            let mut out = Vec::with_capacity(coeffs.len());
            for c in coeffs {
                out.push(c.constant_value()?);
            }
            let mut up = UniPoly(out);
            up.trim();
            Some(up)
        }

        pub fn one() -> UniPoly {
            UniPoly(vec![BigRational::one()])
        }

        fn trim(&mut self) {
            while self.0.len() > 1 && self.0.last().map(|c| c.is_zero()).unwrap_or(false) {
                self.0.pop();
            }
            if self.0.is_empty() {
                self.0.push(BigRational::zero());
            }
        }

        pub fn is_zero(&self) -> bool {
            self.0.iter().all(|c| c.is_zero())
        }

        pub fn degree(&self) -> usize {
            let mut d = self.0.len();
            while d > 1 && self.0[d - 1].is_zero() {
                d -= 1;
            }
            d - 1
        }

        pub fn eval(&self, x: &BigRational) -> BigRational {
            let mut acc = BigRational::zero();
            for c in self.0.iter().rev() {
                acc = acc * x.clone() + c.clone();
            }
            acc
        }

        pub fn derivative(&self) -> UniPoly {
            if self.0.len() <= 1 {
                return UniPoly(vec![BigRational::zero()]);
            }
            let mut out = Vec::with_capacity(self.0.len() - 1);
            for (i, c) in self.0.iter().enumerate().skip(1) {
                out.push(c * BigRational::from_integer(i.into()));
            }
            let mut up = UniPoly(out);
            up.trim();
            up
        }

        pub fn mul(&self, other: &UniPoly) -> UniPoly {
            let mut out = vec![BigRational::zero(); self.0.len() + other.0.len()];
            for (i, a) in self.0.iter().enumerate() {
                for (j, b) in other.0.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            let mut up = UniPoly(out);
            up.trim();
            up
        }

        /// Remainder of `self` divided by `other` (`other` nonzero).
        fn rem(&self, other: &UniPoly) -> UniPoly {
            let mut r = self.clone();
            r.trim();
            let d = other.degree();
            let lead = other.0[d].clone();
            while !r.is_zero() && r.degree() >= d {
                let rd = r.degree();
                let shift = rd - d;
                let factor = r.0[rd].clone() / lead.clone();
                for i in 0..=d {
                    let sub = factor.clone() * other.0[i].clone();
                    r.0[i + shift] -= sub;
                }
                r.0[rd] = BigRational::zero();
                r.trim();
            }
            r
        }
    }

    /// Sturm-like chain starting with (f0, f1), each next element the
    /// negated remainder of the previous two.
    fn chain(f0: &UniPoly, f1: &UniPoly) -> Vec<UniPoly> {
        let mut out = vec![f0.clone()];
        if f1.is_zero() {
            return out;
        }
        out.push(f1.clone());
        loop {
            let n = out.len();
            let r = out[n - 2].rem(&out[n - 1]);
            if r.is_zero() {
                break;
            }
            let mut neg = UniPoly(r.0.iter().map(|c| -c.clone()).collect());
            neg.trim();
            out.push(neg);
        }
        out
    }

    fn sign_variations(chain: &[UniPoly], x: &BigRational) -> i64 {
        let mut count = 0;
        let mut last: Option<bool> = None;
        for q in chain {
            let v = q.eval(x);
            if v.is_zero() {
                continue;
            }
            let s = v > BigRational::zero();
            if let Some(prev) = last {
                if prev != s {
                    count += 1;
                }
            }
            last = Some(s);
        }
        count
    }

    /// Tarski query: sum over distinct roots r of `q` in `(lo, hi]` of
    /// `sign(p(r))`.
    pub fn tarski_query(q: &UniPoly, p: &UniPoly, lo: &BigRational, hi: &BigRational) -> i64 {
        assert!(!q.is_zero());
        let c = chain(q, &q.derivative().mul(p));
        sign_variations(&c, lo) - sign_variations(&c, hi)
    }

    /// Number of distinct real roots of `q` in `(lo, hi]`.
    pub fn roots_in(q: &UniPoly, lo: &BigRational, hi: &BigRational) -> i64 {
        tarski_query(q, &UniPoly::one(), lo, hi)
    }

    /// Exactly decides whether `p(x) >= 0` (or `> 0` when `strict`) for all
    /// x in `[lo, hi]`, `lo <= hi`.
    pub fn nonneg_on(p: &UniPoly, lo: &BigRational, hi: &BigRational, strict: bool) -> bool {
        let pos = |v: &BigRational| {
            if strict {
                v > &BigRational::zero()
            } else {
                v >= &BigRational::zero()
            }
        };
        if p.is_zero() {
            return !strict;
        }
        if !pos(&p.eval(lo)) || !pos(&p.eval(hi)) {
            return false;
        }
        if lo == hi {
            return true;
        }
        if strict {
            // Positive at lo and no zero in (lo, hi] means positive across.
            return roots_in(p, lo, hi) == 0;
        }
        // p < 0 somewhere inside iff some interior critical point has a
        // negative value (endpoints already checked).
        let dp = p.derivative();
        if dp.is_zero() {
            return true;
        }
        // N- = (TQ(p', p^2) - TQ(p', p)) / 2 over roots of p' in (lo, hi].
        let tq_p = tarski_query(&dp, p, lo, hi);
        let tq_p2 = tarski_query(&dp, &p.mul(p), lo, hi);
        let n_neg = (tq_p2 - tq_p) / 2;
        n_neg == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn p(s: &str) -> Poly {
        term_to_poly(&parse_term(s).unwrap()).unwrap()
    }

    #[test]
    fn arithmetic() {
        assert_eq!(p("(x+y)*(x-y)"), p("x*x-y*y"));
        assert_eq!(p("x*x-x*x"), Poly::zero());
        assert_eq!(p("2*x").derivative(&Variable::base("x")), p("2"));
        assert_eq!(p("x*x").derivative(&Variable::base("x")), p("2*x"));
    }

    #[test]
    fn integrate_then_differentiate() {
        let x = Variable::base("x");
        let q = p("x*x+3");
        assert_eq!(q.integrate(&x).derivative(&x), q);
    }

    #[test]
    fn to_term_round_trip() {
        let q = p("x*x + 2*x*y - 1/2");
        assert_eq!(term_to_poly(&q.to_term()).unwrap(), q);
    }

    #[test]
    fn sturm_root_counts() {
        use sturm::*;
        let x = Variable::base("x");
        // (x-1)(x-2) = x^2 - 3x + 2
        let q = UniPoly::from_poly(&p("x*x-3*x+2"), &x).unwrap();
        let r = |a: i64, b: i64| {
            roots_in(
                &q,
                &BigRational::from_integer(a.into()),
                &BigRational::from_integer(b.into()),
            )
        };
        assert_eq!(r(0, 3), 2);
        assert_eq!(r(0, 1), 1);
        assert_eq!(r(3, 5), 0);
    }

    #[test]
    fn sturm_sign_conditions() {
        use sturm::*;
        let x = Variable::base("x");
        let zero = BigRational::from_integer(0.into());
        let four = BigRational::from_integer(4.into());
        let neg1 = BigRational::from_integer((-1).into());
        // x^2 - 3x + 2 dips below zero between its roots.
        let q = UniPoly::from_poly(&p("x*x-3*x+2"), &x).unwrap();
        assert!(!nonneg_on(&q, &zero, &four, false));
        // x^2 stays nonnegative but not positive.
        let sq = UniPoly::from_poly(&p("x*x"), &x).unwrap();
        assert!(nonneg_on(&sq, &neg1, &four, false));
        assert!(!nonneg_on(&sq, &neg1, &four, true));
        // x + 1 is positive on [0, 4].
        let lin = UniPoly::from_poly(&p("x+1"), &x).unwrap();
        assert!(nonneg_on(&lin, &zero, &four, true));
        // (x-1)^2 touches zero at 1 but stays nonnegative.
        let touch = UniPoly::from_poly(&p("x*x-2*x+1"), &x).unwrap();
        assert!(nonneg_on(&touch, &zero, &four, false));
        assert!(!nonneg_on(&touch, &zero, &four, true));
        // constant checks
        let c = UniPoly::from_poly(&p("5"), &x).unwrap();
        assert!(nonneg_on(&c, &zero, &four, true));
    }
}
