//! Term mini-language.
//!
//! ```text
//! term_list := term ("," term)*
//! term      := "edges" | "triangles"
//!            | "nodematch(" ident "," value ")"
//!            | "absdiff(" ident ("," "scale=" real)? ")"
//! ```
//!
//! An empty or all-whitespace string is the empty term list. Whitespace is
//! allowed between tokens. Errors carry the byte offset where parsing failed.

use thiserror::Error;

use crate::graph::Decision;
use crate::stats::{TermSpec, DEFAULT_ABSDIFF_SCALE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct TermParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Number(&'a str),
    LParen,
    RParen,
    Comma,
    Eq,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, TermParseError> {
        Err(TermParseError {
            offset,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    /// Next token and its starting offset.
    fn next(&mut self) -> Result<(Tok<'a>, usize), TermParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return self.err(start, "unexpected end of input");
        };
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((Tok::Ident(&rest[..len]), start));
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let len = rest
                .char_indices()
                .find(|&(i, ch)| {
                    !(ch.is_ascii_digit()
                        || ch == '.'
                        || ch == 'e'
                        || ch == 'E'
                        || ((ch == '-' || ch == '+')
                            && (i == 0 || matches!(rest.as_bytes()[i - 1], b'e' | b'E'))))
                })
                .map(|(i, _)| i)
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((Tok::Number(&rest[..len]), start));
        }
        self.err(start, format!("unexpected character `{c}`"))
    }

    fn expect(&mut self, want: Tok<'static>, what: &str) -> Result<(), TermParseError> {
        let (tok, at) = self.next()?;
        if tok == want {
            Ok(())
        } else {
            self.err(at, format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(&'a str, usize), TermParseError> {
        match self.next()? {
            (Tok::Ident(s), at) => Ok((s, at)),
            (_, at) => self.err(at, format!("expected {what}")),
        }
    }

    fn term(&mut self) -> Result<TermSpec, TermParseError> {
        let (name, at) = self.ident("term name")?;
        match name {
            "edges" => Ok(TermSpec::Edges),
            "triangles" => Ok(TermSpec::Triangles),
            "nodematch" => {
                self.expect(Tok::LParen, "`(`")?;
                let (attr, attr_at) = self.ident("attribute name")?;
                if attr != "decision" {
                    return self.err(attr_at, format!("unknown categorical attribute `{attr}`"));
                }
                self.expect(Tok::Comma, "`,`")?;
                let (value, value_at) = self.ident("attribute value")?;
                let Some(value) = Decision::from_code(value) else {
                    return self.err(value_at, format!("`{value}` is not one of C, D, N"));
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(TermSpec::nodematch(value))
            }
            "absdiff" => {
                self.expect(Tok::LParen, "`(`")?;
                let (attr, attr_at) = self.ident("attribute name")?;
                if attr != "wealth" {
                    return self.err(attr_at, format!("unknown numeric attribute `{attr}`"));
                }
                let mut scale = DEFAULT_ABSDIFF_SCALE;
                match self.next()? {
                    (Tok::RParen, _) => {}
                    (Tok::Comma, _) => {
                        let (key, key_at) = self.ident("`scale`")?;
                        if key != "scale" {
                            return self.err(key_at, format!("unknown option `{key}`"));
                        }
                        self.expect(Tok::Eq, "`=`")?;
                        let (tok, num_at) = self.next()?;
                        let Tok::Number(text) = tok else {
                            return self.err(num_at, "expected a number");
                        };
                        scale = match text.parse::<f64>() {
                            Ok(v) if v.is_finite() && v > 0.0 => v,
                            Ok(_) => return self.err(num_at, "scale must be positive and finite"),
                            Err(_) => return self.err(num_at, format!("malformed number `{text}`")),
                        };
                        self.expect(Tok::RParen, "`)`")?;
                    }
                    (_, other) => return self.err(other, "expected `,` or `)`"),
                }
                Ok(TermSpec::AbsDiff {
                    attr: crate::stats::NumericAttr::Wealth,
                    scale,
                })
            }
            other => self.err(at, format!("unknown term `{other}`")),
        }
    }
}

/// Parses a comma-separated term list.
pub fn parse_terms(text: &str) -> Result<Vec<TermSpec>, TermParseError> {
    let mut p = Parser::new(text);
    let mut terms = Vec::new();
    if p.at_end() {
        return Ok(terms);
    }
    loop {
        terms.push(p.term()?);
        if p.at_end() {
            return Ok(terms);
        }
        p.expect(Tok::Comma, "`,` between terms")?;
    }
}

/// Parses exactly one term.
pub fn parse_term(text: &str) -> Result<TermSpec, TermParseError> {
    let mut p = Parser::new(text);
    let t = p.term()?;
    if !p.at_end() {
        return p.err(p.pos, "trailing input after term");
    }
    Ok(t)
}

/// Inverse of [`parse_terms`].
pub fn render_terms(terms: &[TermSpec]) -> String {
    terms
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(
            parse_terms("edges,triangles").unwrap(),
            vec![TermSpec::Edges, TermSpec::Triangles]
        );
        assert_eq!(
            parse_terms("nodematch(decision,C)").unwrap(),
            vec![TermSpec::nodematch(Decision::Cooperate)]
        );
        assert_eq!(
            parse_terms("absdiff(wealth,scale=0.001)").unwrap(),
            vec![TermSpec::absdiff(0.001).unwrap()]
        );
        assert_eq!(
            parse_terms("absdiff(wealth)").unwrap(),
            vec![TermSpec::absdiff(DEFAULT_ABSDIFF_SCALE).unwrap()]
        );
        assert_eq!(parse_terms("").unwrap(), vec![]);
        assert_eq!(parse_terms("   ").unwrap(), vec![]);
        assert_eq!(
            parse_terms(" edges , nodematch( decision , D ) ").unwrap(),
            vec![TermSpec::Edges, TermSpec::nodematch(Decision::Defect)]
        );
        assert_eq!(
            parse_terms("absdiff(wealth,scale=2.5e-3)").unwrap(),
            vec![TermSpec::absdiff(0.0025).unwrap()]
        );
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_terms("edges,kstar").unwrap_err();
        assert_eq!(e.offset, 6);
        assert!(e.message.contains("kstar"));
        let e = parse_terms("nodematch(wealth,C)").unwrap_err();
        assert_eq!(e.offset, 10);
        let e = parse_terms("nodematch(decision,X)").unwrap_err();
        assert_eq!(e.offset, 19);
        let e = parse_terms("absdiff(wealth,scale=0)").unwrap_err();
        assert_eq!(e.offset, 21);
        let e = parse_terms("absdiff(wealth,scale=abc)").unwrap_err();
        assert_eq!(e.offset, 21);
        let e = parse_terms("edges triangles").unwrap_err();
        assert_eq!(e.offset, 6);
        let e = parse_terms("edges,").unwrap_err();
        assert_eq!(e.offset, 6);
        assert!(parse_terms("edges,,triangles").is_err());
        assert!(parse_terms("absdiff(wealth,scale=1").is_err());
        assert!(parse_terms("edges#").is_err());
    }

    fn term_strategy() -> impl Strategy<Value = TermSpec> {
        prop_oneof![
            Just(TermSpec::Edges),
            Just(TermSpec::Triangles),
            prop_oneof![
                Just(Decision::Cooperate),
                Just(Decision::Defect),
                Just(Decision::None)
            ]
            .prop_map(TermSpec::nodematch),
            (1e-9f64..1e6).prop_map(|s| TermSpec::absdiff(s).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(terms in prop::collection::vec(term_strategy(), 0..8)) {
            prop_assert_eq!(parse_terms(&render_terms(&terms)).unwrap(), terms);
        }
    }
}
