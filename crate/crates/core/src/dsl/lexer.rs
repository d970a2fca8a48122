use std::fmt;

use num_bigint::BigUint;

use super::ast::{Number, Pos};
use super::DslError;

#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    Ident(String),
    Number(Number),
    Eq,
    Colon,
    Comma,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Arrow,
    Then,
    Bar,
    Star,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Number(n) => write!(f, "number `{n}`"),
            Token::Eq => f.write_str("`=`"),
            Token::Colon => f.write_str("`:`"),
            Token::Comma => f.write_str("`,`"),
            Token::LBrace => f.write_str("`{`"),
            Token::RBrace => f.write_str("`}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Arrow => f.write_str("`->`"),
            Token::Then => f.write_str("`>>`"),
            Token::Bar => f.write_str("`|`"),
            Token::Star => f.write_str("`*`"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spanned {
    pub token: Token,
    pub pos: Pos,
}

fn syntax(pos: Pos, found: impl Into<String>, expected: &[&str]) -> DslError {
    DslError::Syntax {
        pos,
        found: found.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Spanned>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let token = if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            Token::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            let digits = |i: &mut usize| {
                let s = *i;
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                }
                chars[s..*i].iter().collect::<String>()
            };
            let whole = digits(&mut i);
            let next_digit = |k: usize| chars.get(k).is_some_and(|d| d.is_ascii_digit());
            if chars.get(i) == Some(&'.') && next_digit(i + 1) {
                i += 1;
                let frac = digits(&mut i);
                let text = format!("{whole}.{frac}");
                let x: f64 = text.parse().map_err(|_| syntax(pos, text.clone(), &["number"]))?;
                Token::Number(Number::Decimal(x))
            } else if chars.get(i) == Some(&'/') && next_digit(i + 1) {
                i += 1;
                let den = digits(&mut i);
                Token::Number(Number::Fraction(big(&whole), big(&den)))
            } else {
                Token::Number(Number::Integer(big(&whole)))
            }
        } else {
            let two = chars.get(i + 1).copied();
            let (tok, len) = match (c, two) {
                ('-', Some('>')) => (Token::Arrow, 2),
                ('>', Some('>')) => (Token::Then, 2),
                ('=', _) => (Token::Eq, 1),
                (':', _) => (Token::Colon, 1),
                (',', _) => (Token::Comma, 1),
                ('{', _) => (Token::LBrace, 1),
                ('}', _) => (Token::RBrace, 1),
                ('(', _) => (Token::LParen, 1),
                (')', _) => (Token::RParen, 1),
                ('|', _) => (Token::Bar, 1),
                ('*', _) => (Token::Star, 1),
                _ => return Err(syntax(pos, format!("`{c}`"), &["a token"])),
            };
            i += len;
            tok
        };
        col += i - start;
        out.push(Spanned { token, pos });
    }
    out.push(Spanned {
        token: Token::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

fn big(digits: &str) -> BigUint {
    digits.parse().expect("ascii digits")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Token> {
        tokenize(src).unwrap().into_iter().map(|s| s.token).collect()
    }

    #[test]
    fn numbers_and_operators() {
        assert_eq!(
            kinds("a >> b | c -> 1/3 0.25 7"),
            vec![
                Token::Ident("a".into()),
                Token::Then,
                Token::Ident("b".into()),
                Token::Bar,
                Token::Ident("c".into()),
                Token::Arrow,
                Token::Number(Number::Fraction(1u32.into(), 3u32.into())),
                Token::Number(Number::Decimal(0.25)),
                Token::Number(Number::Integer(7u32.into())),
                Token::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("# header\n  space X\n").unwrap();
        assert_eq!(toks[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(toks[1].pos, Pos { line: 2, col: 9 });
    }

    #[test]
    fn stray_character_is_reported() {
        match tokenize("space X = {a, b}\n  @") {
            Err(DslError::Syntax { pos, .. }) => assert_eq!(pos, Pos { line: 2, col: 3 }),
            other => panic!("{other:?}"),
        }
    }
}
