//! Recursive descent parser for terms, formulas and hybrid programs.
//!
//! Precedences, low to high. Formulas: `<->`, `->` (right), `|`, `&`,
//! prefix/unary (`!`, quantifiers, modalities), atoms. Programs: `++`, `;`,
//! postfix `*`. Terms: `+`/`-`, `*`, unary `-`, atoms.

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok};
use super::ParseError;

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.expect_eof()?;
    check_arities(&f.signature())?;
    Ok(f)
}

pub fn parse_program(text: &str) -> Result<HybridProgram, ParseError> {
    let mut p = Parser::new(text)?;
    let prog = p.program()?;
    p.expect_eof()?;
    check_arities(&prog.signature())?;
    Ok(prog)
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect_eof()?;
    check_arities(&t.signature())?;
    Ok(t)
}

fn check_arities(sig: &std::collections::BTreeSet<SigEntry>) -> Result<(), ParseError> {
    if let Some((name, kind, a1, a2)) = arity_conflict(sig) {
        return Err(ParseError::Arity { symbol: name, kind, first: a1, second: a2 });
    }
    Ok(())
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(text)?, i: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let j = (self.i + off).min(self.toks.len() - 1);
        &self.toks[j].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.peek() == &t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(vec![t.describe()]))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.err(vec!["end of input".to_string()]))
        }
    }

    fn err(&self, expected: Vec<String>) -> ParseError {
        ParseError::Syntax {
            pos: self.pos(),
            found: self.peek().describe(),
            expected,
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(vec!["identifier".to_string()])),
        }
    }

    // ---- formulas ----

    pub fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.imply()?;
        while self.eat(&Tok::Biarrow) {
            let rhs = self.imply()?;
            f = Formula::equiv(f, rhs);
        }
        Ok(f)
    }

    fn imply(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.imply()?;
            Ok(Formula::imply(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.and()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.unary()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Forall => {
                self.bump();
                let x = self.quantified_var()?;
                Ok(Formula::forall(x, self.unary()?))
            }
            Tok::Exists => {
                self.bump();
                let x = self.quantified_var()?;
                Ok(Formula::exists(x, self.unary()?))
            }
            Tok::LBracket => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::RBracket)?;
                Ok(Formula::boxed(p, self.unary()?))
            }
            Tok::Lt => {
                // Backtrack if this `<` does not open a diamond modality.
                let save = self.i;
                self.bump();
                match self.try_diamond() {
                    Ok(f) => Ok(f),
                    Err(e) => {
                        self.i = save;
                        // A formula cannot start with `<`, so report the
                        // diamond error rather than inventing another one.
                        Err(e)
                    }
                }
            }
            _ => self.atom_formula(),
        }
    }

    fn try_diamond(&mut self) -> Result<Formula, ParseError> {
        let p = self.program()?;
        self.expect(Tok::Gt)?;
        let f = self.unary()?;
        Ok(Formula::Diamond(Box::new(p), Box::new(f)))
    }

    fn quantified_var(&mut self) -> Result<Variable, ParseError> {
        let name = self.ident()?;
        Ok(Variable::base(name))
    }

    fn atom_formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LBrace => {
                self.bump();
                let a = self.program()?;
                self.expect(Tok::RBrace)?;
                let equiv = match self.bump() {
                    Tok::Refines => false,
                    Tok::EquivKw => true,
                    _ => {
                        self.i -= 1;
                        return Err(self.err(vec![
                            "`refines`".to_string(),
                            "`equiv`".to_string(),
                        ]));
                    }
                };
                self.expect(Tok::LBrace)?;
                let b = self.program()?;
                self.expect(Tok::RBrace)?;
                if equiv {
                    Ok(Formula::prog_equiv(a, b))
                } else {
                    Ok(Formula::refines(a, b))
                }
            }
            Tok::Ident(name)
                if self.peek_at(1) == &Tok::LParen && self.peek_at(2) == &Tok::PipePipe =>
            {
                self.bump();
                self.expect(Tok::LParen)?;
                self.expect(Tok::PipePipe)?;
                self.expect(Tok::RParen)?;
                Ok(Formula::Predicational(name))
            }
            Tok::LParen => {
                // Either a parenthesized formula or a parenthesized term
                // opening a comparison; try the formula reading first.
                let save = self.i;
                self.bump();
                let inner = self.formula();
                match inner {
                    Ok(f) if self.peek() == &Tok::RParen && !self.cmpop_at(1) => {
                        self.expect(Tok::RParen)?;
                        return Ok(f);
                    }
                    _ => {
                        self.i = save;
                        self.comparison()
                    }
                }
            }
            _ => self.comparison(),
        }
    }

    fn cmpop_at(&self, off: usize) -> bool {
        matches!(
            self.peek_at(off),
            Tok::Le | Tok::Lt | Tok::Eq | Tok::Ge | Tok::Gt
        )
        // `(x)' <= y`: a prime after `)` still belongs to the term.
        || (self.peek_at(off) == &Tok::Prime)
    }

    fn comparison(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::Le => CmpOp::Le,
            Tok::Lt => CmpOp::Lt,
            Tok::Eq => CmpOp::Eq,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            _ => {
                // A bare application is a predicate application.
                if let Term::FuncApp { name, args } = lhs {
                    return Ok(Formula::PredApp { name, args });
                }
                return Err(self.err(vec![
                    "comparison operator".to_string(),
                    "predicate application".to_string(),
                ]));
            }
        };
        self.bump();
        let rhs = self.term()?;
        Ok(Formula::Cmp(op, lhs, rhs))
    }

    // ---- terms ----

    pub fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.prod()?;
        loop {
            if self.eat(&Tok::Plus) {
                let rhs = self.prod()?;
                t = Term::plus(t, rhs);
            } else if self.eat(&Tok::Minus) {
                let rhs = self.prod()?;
                t = Term::minus(t, rhs);
            } else {
                break;
            }
        }
        Ok(t)
    }

    fn prod(&mut self) -> Result<Term, ParseError> {
        let mut t = self.factor()?;
        while self.eat(&Tok::Star) {
            let rhs = self.factor()?;
            t = Term::times(t, rhs);
        }
        Ok(t)
    }

    fn factor(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(Term::Neg(Box::new(self.factor()?)))
            }
            Tok::Number(n) => {
                self.bump();
                Ok(Term::Number(n))
            }
            Tok::Dot(i) => {
                self.bump();
                Ok(Term::Dot(i))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek() != &Tok::RParen {
                        args.push(self.term()?);
                        while self.eat(&Tok::Comma) {
                            args.push(self.term()?);
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Term::FuncApp { name, args })
                } else if self.eat(&Tok::Prime) {
                    Ok(Term::Var(Variable::diff(name)))
                } else {
                    Ok(Term::Var(Variable::base(name)))
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                if self.eat(&Tok::Prime) {
                    Ok(Term::Differential(Box::new(t)))
                } else {
                    Ok(t)
                }
            }
            _ => Err(self.err(vec!["term".to_string()])),
        }
    }

    // ---- programs ----

    pub fn program(&mut self) -> Result<HybridProgram, ParseError> {
        let mut p = self.seqp()?;
        while self.eat(&Tok::PlusPlus) {
            let rhs = self.seqp()?;
            p = HybridProgram::choice(p, rhs);
        }
        Ok(p)
    }

    fn seqp(&mut self) -> Result<HybridProgram, ParseError> {
        let mut parts = vec![self.post()?];
        while self.eat(&Tok::Semi) {
            parts.push(self.post()?);
        }
        Ok(HybridProgram::seq_all(parts))
    }

    fn post(&mut self) -> Result<HybridProgram, ParseError> {
        let mut p = self.atom_program()?;
        while self.eat(&Tok::Star) {
            p = HybridProgram::repeat(p);
        }
        Ok(p)
    }

    fn atom_program(&mut self) -> Result<HybridProgram, ParseError> {
        match self.peek().clone() {
            Tok::Question => {
                self.bump();
                let f = self.formula()?;
                if !f.differential_free() {
                    return Err(ParseError::DifferentialInTest);
                }
                Ok(HybridProgram::test(f))
            }
            Tok::LBrace => {
                // `{x'= ...}` is an ODE system, everything else is grouping.
                if matches!(self.peek_at(1), Tok::Ident(_))
                    && self.peek_at(2) == &Tok::Prime
                    && self.peek_at(3) == &Tok::Eq
                {
                    self.bump();
                    self.ode()
                } else {
                    self.bump();
                    let p = self.program()?;
                    self.expect(Tok::RBrace)?;
                    Ok(p)
                }
            }
            Tok::Ident(name) => {
                self.bump();
                let differential = self.eat(&Tok::Prime);
                if self.eat(&Tok::Assign) {
                    let x = Variable { name, differential };
                    if self.eat(&Tok::Star) {
                        Ok(HybridProgram::AssignAny(x))
                    } else {
                        Ok(HybridProgram::Assign(x, self.term()?))
                    }
                } else if differential {
                    Err(self.err(vec!["`:=`".to_string()]))
                } else {
                    Ok(HybridProgram::ProgConst(name))
                }
            }
            _ => Err(self.err(vec!["program".to_string()])),
        }
    }

    fn ode(&mut self) -> Result<HybridProgram, ParseError> {
        let mut eqs = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect(Tok::Prime)?;
            self.expect(Tok::Eq)?;
            let rhs = self.term()?;
            let x = Variable::base(name);
            if eqs.iter().any(|(v, _)| v == &x) {
                return Err(ParseError::DuplicateOdeVariable { name: x.name });
            }
            eqs.push((x, rhs));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let domain = if self.eat(&Tok::Amp) {
            let f = self.formula()?;
            if !f.differential_free() {
                return Err(ParseError::DifferentialInTest);
            }
            f
        } else {
            Formula::True
        };
        self.expect(Tok::RBrace)?;
        Ok(HybridProgram::ode(eqs, domain))
    }
}
