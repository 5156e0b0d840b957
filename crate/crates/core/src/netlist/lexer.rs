use alloc::string::String;
use alloc::vec::Vec;

use super::{NetlistError, NetlistErrorKind, Span};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Imag(f64),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Eq,
    Series,
    Concat,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        use alloc::format;
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(x) => format!("number {x}"),
            Tok::Imag(x) => format!("number {x}i"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Series => "`<|`".into(),
            Tok::Concat => "`++`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, Span)>, NetlistError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let is_ident_start = |c: char| c.is_ascii_alphabetic() || c == '_';
    let is_ident = |c: char| c.is_ascii_alphanumeric() || c == '_';

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        let peek = chars.get(i + 1).copied();
        let step = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => step(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '<' if peek == Some('|') => {
                out.push((Tok::Series, span));
                step(2, &mut i, &mut col);
            }
            '+' if peek == Some('+') => {
                out.push((Tok::Concat, span));
                step(2, &mut i, &mut col);
            }
            '+' | '-' | '*' | '/' | '(' | ')' | ',' | '=' => {
                let t = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    _ => Tok::Eq,
                };
                out.push((t, span));
                step(1, &mut i, &mut col);
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident(chars[i]) {
                    i += 1;
                }
                col += i - start;
                out.push((Tok::Ident(chars[start..i].iter().collect()), span));
            }
            c if c.is_ascii_digit() || (c == '.' && peek.is_some_and(|p| p.is_ascii_digit())) => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    } else {
                        return Err(NetlistError::new(
                            NetlistErrorKind::MalformedNumber,
                            Span::new(line, col + (j - start)),
                        ));
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text
                    .parse()
                    .map_err(|_| NetlistError::new(NetlistErrorKind::MalformedNumber, span))?;
                let imaginary = i < chars.len()
                    && chars[i] == 'i'
                    && !chars.get(i + 1).is_some_and(|&c| is_ident(c));
                if imaginary {
                    i += 1;
                }
                col += i - start;
                out.push((
                    if imaginary {
                        Tok::Imag(value)
                    } else {
                        Tok::Number(value)
                    },
                    span,
                ));
            }
            other => {
                return Err(NetlistError::new(
                    NetlistErrorKind::UnexpectedChar(other),
                    span,
                ));
            }
        }
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn operators_and_numbers() {
        assert_eq!(
            toks("a <| b ++ c # comment\n1.5e3 2i .5"),
            [
                Tok::Ident("a".into()),
                Tok::Series,
                Tok::Ident("b".into()),
                Tok::Concat,
                Tok::Ident("c".into()),
                Tok::Number(1500.0),
                Tok::Imag(2.0),
                Tok::Number(0.5),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let t = lex("mode a\n  comp").unwrap();
        assert_eq!(t[1].1, Span::new(1, 6));
        assert_eq!(t[2].1, Span::new(2, 3));
    }

    #[test]
    fn stray_character() {
        let e = lex("mode a\nparam x = 1 $").unwrap_err();
        assert_eq!(e.kind, NetlistErrorKind::UnexpectedChar('$'));
        assert_eq!(e.span, Some(Span::new(2, 13)));
    }

    #[test]
    fn dangling_exponent() {
        assert_eq!(
            lex("1e").unwrap_err().kind,
            NetlistErrorKind::MalformedNumber
        );
    }
}
