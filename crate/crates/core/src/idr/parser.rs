//! Lexer and recursive-descent parser for rule text.
//!
//! ```text
//! rule    := literal "<-" xor EOF
//! xor     := or  ( "^" or )*
//! or      := and ( ("|" | "+") and )*
//! and     := atom ( ("&" | ".") atom )*
//! atom    := literal | "(" xor ")"
//! literal := IDENT [ "(" INT ( "," INT )* ")" ]
//! ```
//!
//! Chains of one operator at one level collapse into a single n-ary node;
//! parentheses always produce a nested node.

use crate::entity::EntityId;
use crate::idr::ast::{Expr, IdrRule};
use crate::idr::IdrError;
use crate::ternary::{Model, Operator};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    LParen,
    RParen,
    Comma,
    Arrow,
    Op(Operator),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Arrow => "'<-'".into(),
            Tok::Op(op) => format!("'{}'", op.symbol()),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, IdrError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
                continue;
            }
            '#' => break,
            '(' => out.push((Tok::LParen, start)),
            ')' => out.push((Tok::RParen, start)),
            ',' => out.push((Tok::Comma, start)),
            '&' => out.push((Tok::Op(Operator::MinAnd), start)),
            '|' => out.push((Tok::Op(Operator::MaxOr), start)),
            '^' => out.push((Tok::Op(Operator::NewXor), start)),
            '.' => out.push((Tok::Op(Operator::BoolAnd), start)),
            '+' => out.push((Tok::Op(Operator::BoolOr), start)),
            '<' if bytes.get(i + 1) == Some(&b'-') => {
                out.push((Tok::Arrow, start));
                i += 2;
                continue;
            }
            c if c.is_ascii_digit() => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v = text[start..i].parse().map_err(|_| IdrError::Lex {
                    pos: start,
                    found: text[start..i].to_string(),
                })?;
                out.push((Tok::Int(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let found = text[start..].chars().next().unwrap().to_string();
                return Err(IdrError::Lex { pos: start, found });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    fn unexpected(&self, expected: &str) -> IdrError {
        IdrError::Syntax {
            pos: self.pos(),
            expected: expected.to_string(),
            found: self.peek().map(Tok::describe).unwrap_or_else(|| "end of input".into()),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), IdrError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn literal(&mut self) -> Result<EntityId, IdrError> {
        let name = match self.peek() {
            Some(Tok::Ident(name)) => name.clone(),
            _ => return Err(self.unexpected("entity literal")),
        };
        let name_pos = self.pos();
        self.at += 1;
        let mut idx = Vec::new();
        // a bare name is a free symbol, even when it spells a known prefix
        if self.peek() != Some(&Tok::LParen) {
            return Ok(EntityId::Alias(name, idx));
        }
        {
            self.at += 1;
            loop {
                match self.bump() {
                    Some(Tok::Int(v)) => idx.push(v),
                    _ => {
                        self.at -= 1;
                        return Err(self.unexpected("index"));
                    }
                }
                match self.peek() {
                    Some(Tok::Comma) => self.at += 1,
                    Some(Tok::RParen) => {
                        self.at += 1;
                        break;
                    }
                    _ => return Err(self.unexpected("',' or ')'")),
                }
            }
        }
        match EntityId::from_parts(&name, &idx) {
            Ok(Some(id)) => Ok(id),
            Ok(None) => Ok(EntityId::Alias(name, idx)),
            Err(source) => Err(IdrError::Entity { pos: name_pos, source }),
        }
    }

    fn atom(&mut self) -> Result<Expr, IdrError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.at += 1;
                let e = self.level(0)?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(_)) => self.literal().map(Expr::Lit),
            Some(Tok::Op(op)) => Err(IdrError::Arity {
                op: op.symbol(),
                pos: Some(self.pos()),
            }),
            _ => Err(self.unexpected("entity literal or '('")),
        }
    }

    /// Binding level: 0 = `^`, 1 = `|`/`+`, 2 = `&`/`.`.
    fn level(&mut self, level: u8) -> Result<Expr, IdrError> {
        let next = |p: &mut Self| if level == 2 { p.atom() } else { p.level(level + 1) };
        let at_level = |op: Operator| match op {
            Operator::NewXor => level == 0,
            Operator::MaxOr | Operator::BoolOr => level == 1,
            Operator::MinAnd | Operator::BoolAnd => level == 2,
        };
        let mut acc = next(self)?;
        let mut chain: Option<(Operator, Vec<Expr>)> = None;
        while let Some(Tok::Op(op)) = self.peek().cloned() {
            if !at_level(op) {
                break;
            }
            let op_pos = self.pos();
            self.at += 1;
            if matches!(self.peek(), None | Some(Tok::RParen)) {
                return Err(IdrError::Arity {
                    op: op.symbol(),
                    pos: Some(op_pos),
                });
            }
            let rhs = next(self)?;
            chain = Some(match chain.take() {
                Some((cur, mut items)) if cur == op => {
                    items.push(rhs);
                    (cur, items)
                }
                Some((cur, items)) => (op, vec![Expr::Op(cur, items), rhs]),
                None => (op, vec![acc.clone(), rhs]),
            });
        }
        if let Some((op, items)) = chain {
            acc = Expr::Op(op, items);
        }
        Ok(acc)
    }
}

fn infer_model(body: &Expr) -> Result<Model, IdrError> {
    let ops = body.operators();
    let three = ops.iter().any(|o| o.model() == Model::Miim);
    let two = ops.iter().any(|o| o.model() == Model::Iim);
    match (three, two) {
        (true, true) => Err(IdrError::MixedModels),
        (false, true) => Ok(Model::Iim),
        _ => Ok(Model::Miim),
    }
}

fn parse_parts(text: &str) -> Result<(EntityId, Expr), IdrError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let target = p.literal()?;
    p.expect(Tok::Arrow, "'<-'")?;
    let body = p.level(0)?;
    if p.peek().is_some() {
        return Err(p.unexpected("operator or end of rule"));
    }
    Ok((target, body))
}

/// Parse one rule. The model is inferred from the operators; a rule with a
/// bare literal body is taken as three-valued.
pub fn parse_idr(text: &str) -> Result<IdrRule, IdrError> {
    let (target, body) = parse_parts(text)?;
    let model = infer_model(&body)?;
    IdrRule::new(target, body, model)
}

/// Parse one rule that must belong to `model`.
pub fn parse_idr_as(text: &str, model: Model) -> Result<IdrRule, IdrError> {
    let (target, body) = parse_parts(text)?;
    IdrRule::new(target, body, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idr::format_idr;

    fn lit(s: &str) -> Expr {
        Expr::Lit(EntityId::parse(s).unwrap())
    }

    fn alias(s: &str) -> Expr {
        Expr::Lit(EntityId::Alias(s.into(), vec![]))
    }

    const RING_RULE: &str = "C(2,1,1,0) <- (C(2,1,2,0) & C(2,2,1,2)) | (C(2,1,6,0) & C(2,2,1,6))";

    #[test]
    fn parses_ring_rule() {
        let r = parse_idr(RING_RULE).unwrap();
        assert_eq!(r.target, EntityId::sadm(1));
        assert_eq!(r.model, Model::Miim);
        let expected = Expr::Op(
            Operator::MaxOr,
            vec![
                Expr::Op(Operator::MinAnd, vec![lit("C(2,1,2,0)"), lit("C(2,2,1,2)")]),
                Expr::Op(Operator::MinAnd, vec![lit("C(2,1,6,0)"), lit("C(2,2,1,6)")]),
            ],
        );
        assert_eq!(r.body, expected);
        assert_eq!(format_idr(&r), RING_RULE);
    }

    #[test]
    fn literal_rule() {
        let r = parse_idr("X(1) <- P(4)").unwrap();
        assert_eq!(r.target, EntityId::Alias("X".into(), vec![1]));
        assert_eq!(r.body, lit("P(4)"));
        assert_eq!(format_idr(&r), "X(1) <- P(4)");
    }

    #[test]
    fn precedence() {
        let r = parse_idr("A <- B ^ C & D").unwrap();
        assert_eq!(
            r.body,
            Expr::Op(
                Operator::NewXor,
                vec![alias("B"), Expr::Op(Operator::MinAnd, vec![alias("C"), alias("D")])]
            )
        );
        let r = parse_idr("A <- B | C & D ^ E").unwrap();
        assert_eq!(
            r.body,
            Expr::Op(
                Operator::NewXor,
                vec![
                    Expr::Op(
                        Operator::MaxOr,
                        vec![alias("B"), Expr::Op(Operator::MinAnd, vec![alias("C"), alias("D")])]
                    ),
                    alias("E")
                ]
            )
        );
        let r = parse_idr("A <- B . C + D").unwrap();
        assert_eq!(r.model, Model::Iim);
        assert_eq!(
            r.body,
            Expr::Op(
                Operator::BoolOr,
                vec![Expr::Op(Operator::BoolAnd, vec![alias("B"), alias("C")]), alias("D")]
            )
        );
    }

    #[test]
    fn chains_flatten_but_parens_nest() {
        let r = parse_idr("A <- B ^ C ^ D ^ E").unwrap();
        assert!(matches!(&r.body, Expr::Op(Operator::NewXor, c) if c.len() == 4));
        let r = parse_idr("A <- (B ^ C) ^ D").unwrap();
        match &r.body {
            Expr::Op(Operator::NewXor, c) => {
                assert_eq!(c.len(), 2);
                assert!(matches!(&c[0], Expr::Op(Operator::NewXor, _)));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(format_idr(&r), "A <- (B ^ C) ^ D");
    }

    #[test]
    fn lexical_errors_report_position() {
        match parse_idr("A <- B $ C") {
            Err(IdrError::Lex { pos, found }) => {
                assert_eq!(pos, 7);
                assert_eq!(found, "$");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_idr("A B"), Err(IdrError::Syntax { .. })));
        assert!(matches!(parse_idr("A <- (B & C"), Err(IdrError::Syntax { .. })));
        assert!(matches!(parse_idr("A <- B C"), Err(IdrError::Syntax { .. })));
        assert!(matches!(parse_idr("A <- P(1,"), Err(IdrError::Syntax { .. })));
        assert!(matches!(parse_idr("<- B"), Err(IdrError::Syntax { .. })));
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(parse_idr("A <- B &"), Err(IdrError::Arity { op: '&', .. })));
        assert!(matches!(parse_idr("A <- | B"), Err(IdrError::Arity { op: '|', .. })));
        assert!(matches!(parse_idr("A <- (B ^) & C"), Err(IdrError::Arity { op: '^', .. })));
    }

    #[test]
    fn model_errors() {
        assert!(matches!(parse_idr("A <- B & C . D"), Err(IdrError::MixedModels)));
        assert!(matches!(
            parse_idr_as("A <- B & C", Model::Iim),
            Err(IdrError::ModelMismatch { op: '&', .. })
        ));
        assert_eq!(parse_idr_as("A <- B", Model::Iim).unwrap().model, Model::Iim);
    }

    #[test]
    fn entity_errors_inside_rules() {
        assert!(matches!(parse_idr("A <- C(1,2)"), Err(IdrError::Entity { pos: 5, .. })));
    }

    #[test]
    fn comments_are_ignored() {
        let r = parse_idr("A <- B & C  # trailing note").unwrap();
        assert_eq!(format_idr(&r), "A <- B & C");
    }
}
