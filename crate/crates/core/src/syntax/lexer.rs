//! Tokenizer for the concrete ASCII syntax.

use super::ParseError;
use num::{BigInt, BigRational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(BigRational),
    /// `.`, `.0` .. `.9` — dot placeholders for substitution replacements.
    Dot(u8),
    True,
    False,
    Refines,
    EquivKw,
    Forall,
    Exists,
    Prime,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Question,
    Bang,
    Amp,
    Pipe,
    PipePipe,
    Arrow,
    Biarrow,
    Plus,
    PlusPlus,
    Minus,
    Star,
    Assign,
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(_) => "number".to_string(),
            Tok::Dot(_) => "`.`".to_string(),
            Tok::True => "`true`".to_string(),
            Tok::False => "`false`".to_string(),
            Tok::Refines => "`refines`".to_string(),
            Tok::EquivKw => "`equiv`".to_string(),
            Tok::Forall => "`\\forall`".to_string(),
            Tok::Exists => "`\\exists`".to_string(),
            Tok::Prime => "`'`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Semi => "`;`".to_string(),
            Tok::Question => "`?`".to_string(),
            Tok::Bang => "`!`".to_string(),
            Tok::Amp => "`&`".to_string(),
            Tok::Pipe => "`|`".to_string(),
            Tok::PipePipe => "`||`".to_string(),
            Tok::Arrow => "`->`".to_string(),
            Tok::Biarrow => "`<->`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::PlusPlus => "`++`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Assign => "`:=`".to_string(),
            Tok::Eq => "`=`".to_string(),
            Tok::Le => "`<=`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Ge => "`>=`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

pub fn tokenize(input: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! pos {
        () => {
            Pos { line, col }
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let p = pos!();
        let adv = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '(' => {
                out.push((Tok::LParen, p));
                adv(1, &mut i, &mut col);
            }
            ')' => {
                out.push((Tok::RParen, p));
                adv(1, &mut i, &mut col);
            }
            '{' => {
                out.push((Tok::LBrace, p));
                adv(1, &mut i, &mut col);
            }
            '}' => {
                out.push((Tok::RBrace, p));
                adv(1, &mut i, &mut col);
            }
            '[' => {
                out.push((Tok::LBracket, p));
                adv(1, &mut i, &mut col);
            }
            ']' => {
                out.push((Tok::RBracket, p));
                adv(1, &mut i, &mut col);
            }
            ',' => {
                out.push((Tok::Comma, p));
                adv(1, &mut i, &mut col);
            }
            ';' => {
                out.push((Tok::Semi, p));
                adv(1, &mut i, &mut col);
            }
            '?' => {
                out.push((Tok::Question, p));
                adv(1, &mut i, &mut col);
            }
            '!' => {
                out.push((Tok::Bang, p));
                adv(1, &mut i, &mut col);
            }
            '&' => {
                out.push((Tok::Amp, p));
                adv(1, &mut i, &mut col);
            }
            '\'' => {
                out.push((Tok::Prime, p));
                adv(1, &mut i, &mut col);
            }
            '=' => {
                out.push((Tok::Eq, p));
                adv(1, &mut i, &mut col);
            }
            '|' => {
                if chars.get(i + 1) == Some(&'|') {
                    out.push((Tok::PipePipe, p));
                    adv(2, &mut i, &mut col);
                } else {
                    out.push((Tok::Pipe, p));
                    adv(1, &mut i, &mut col);
                }
            }
            '+' => {
                if chars.get(i + 1) == Some(&'+') {
                    out.push((Tok::PlusPlus, p));
                    adv(2, &mut i, &mut col);
                } else {
                    out.push((Tok::Plus, p));
                    adv(1, &mut i, &mut col);
                }
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    out.push((Tok::Arrow, p));
                    adv(2, &mut i, &mut col);
                } else {
                    out.push((Tok::Minus, p));
                    adv(1, &mut i, &mut col);
                }
            }
            '*' => {
                out.push((Tok::Star, p));
                adv(1, &mut i, &mut col);
            }
            ':' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Assign, p));
                    adv(2, &mut i, &mut col);
                } else {
                    return Err(ParseError::unexpected_char(p, ':'));
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    out.push((Tok::Biarrow, p));
                    adv(3, &mut i, &mut col);
                } else if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Le, p));
                    adv(2, &mut i, &mut col);
                } else {
                    out.push((Tok::Lt, p));
                    adv(1, &mut i, &mut col);
                }
            }
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Ge, p));
                    adv(2, &mut i, &mut col);
                } else {
                    out.push((Tok::Gt, p));
                    adv(1, &mut i, &mut col);
                }
            }
            '.' => {
                if let Some(d) = chars.get(i + 1).and_then(|c| c.to_digit(10)) {
                    out.push((Tok::Dot(d as u8), p));
                    adv(2, &mut i, &mut col);
                } else {
                    out.push((Tok::Dot(0), p));
                    adv(1, &mut i, &mut col);
                }
            }
            '\\' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j].is_ascii_alphabetic() {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                match word.as_str() {
                    "forall" => out.push((Tok::Forall, p)),
                    "exists" => out.push((Tok::Exists, p)),
                    _ => return Err(ParseError::unexpected_char(p, '\\')),
                }
                let n = j - i;
                adv(n, &mut i, &mut col);
            }
            d if d.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                // Decimal fraction `1.5` or exact fraction `3/4`; a `.` or
                // `/` must be followed by a digit to belong to the number.
                let mut numer: BigInt;
                let mut denom = BigInt::from(1);
                if j < chars.len()
                    && chars[j] == '.'
                    && chars.get(j + 1).is_some_and(|c| c.is_ascii_digit())
                {
                    let int_part: String = chars[start..j].iter().collect();
                    let mut k = j + 1;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    let frac_part: String = chars[j + 1..k].iter().collect();
                    numer = format!("{int_part}{frac_part}").parse().unwrap();
                    denom = BigInt::from(10).pow(frac_part.len() as u32);
                    j = k;
                } else if j < chars.len()
                    && chars[j] == '/'
                    && chars.get(j + 1).is_some_and(|c| c.is_ascii_digit())
                {
                    let int_part: String = chars[start..j].iter().collect();
                    let mut k = j + 1;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    let den_part: String = chars[j + 1..k].iter().collect();
                    numer = int_part.parse().unwrap();
                    denom = den_part.parse().unwrap();
                    if denom == BigInt::from(0) {
                        return Err(ParseError::Syntax {
                            pos: p,
                            found: "number with zero denominator".to_string(),
                            expected: vec!["nonzero denominator".to_string()],
                        });
                    }
                    j = k;
                } else {
                    let int_part: String = chars[start..j].iter().collect();
                    numer = int_part.parse().unwrap();
                }
                if numer == BigInt::from(0) {
                    numer = BigInt::from(0);
                }
                out.push((Tok::Number(BigRational::new(numer, denom)), p));
                let n = j - i;
                adv(n, &mut i, &mut col);
            }
            a if a.is_ascii_alphabetic() => {
                let start = i;
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_ascii_alphanumeric() || chars[j] == '_')
                {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                let tok = match word.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "refines" => Tok::Refines,
                    "equiv" => Tok::EquivKw,
                    _ => Tok::Ident(word),
                };
                out.push((tok, p));
                let n = j - i;
                adv(n, &mut i, &mut col);
            }
            other => return Err(ParseError::unexpected_char(p, other)),
        }
    }
    out.push((Tok::Eof, pos!()));
    Ok(out)
}
