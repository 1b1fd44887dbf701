//! The `.nfs` schema description format.
//!
//! ```text
//! # comment to end of line
//! schema Rent_a_car
//! attributes RegisteredNumber, CarType,
//!            Date, Time          # a trailing comma continues the line
//! fd RegisteredNumber -> CarType
//! mvd Date ->> Time
//! key RegisteredNumber, Date
//! ```
//!
//! Identifiers match `[A-Za-z_][A-Za-z0-9_]*` and are case-sensitive.
//! Exactly one `schema` and one `attributes` statement are required; `key`
//! may appear at most once. Statements may come in any order.

use std::collections::HashMap;
use std::fmt;

use crate::error::Error;
use crate::model::{canonicalize, DraftDependency, RelationSchema, SchemaDraft, Warning, MAX_ATTRIBUTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    Syntax,
    UndeclaredAttribute,
    DuplicateAttribute,
    DuplicateSchema,
    DuplicateStatement,
    MissingSchema,
    MissingAttributes,
    TooManyAttributes,
    TrivialDependency,
    Io,
}

impl DiagnosticKind {
    pub fn code(self) -> &'static str {
        match self {
            DiagnosticKind::Syntax => "syntax",
            DiagnosticKind::UndeclaredAttribute => "undeclared-attribute",
            DiagnosticKind::DuplicateAttribute => "duplicate-attribute",
            DiagnosticKind::DuplicateSchema => "duplicate-schema",
            DiagnosticKind::DuplicateStatement => "duplicate-statement",
            DiagnosticKind::MissingSchema => "missing-schema",
            DiagnosticKind::MissingAttributes => "missing-attributes",
            DiagnosticKind::TooManyAttributes => "too-many-attributes",
            DiagnosticKind::TrivialDependency => "trivial-dependency",
            DiagnosticKind::Io => "io",
        }
    }
}

/// A located parse error. `line` and `column` are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl ParseDiagnostic {
    fn new(line: usize, column: usize, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line,
            column,
            kind,
            message: message.into(),
        }
    }

    /// Diagnostic for a file that could not be read at all.
    pub fn io(message: impl Into<String>) -> Self {
        ParseDiagnostic::new(1, 1, DiagnosticKind::Io, message)
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: error[{}]: {}",
            self.line,
            self.column,
            self.kind.code(),
            self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    Comma,
    Arrow,
    DoubleArrow,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

#[derive(Debug)]
struct Statement {
    tokens: Vec<Token>,
    /// Position just past the last character of the statement.
    end: (usize, usize),
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse(ParseDiagnostic::new(line, column, DiagnosticKind::Syntax, message))
}

fn lex_line(text: &str, line: usize, out: &mut Vec<Token>) -> Result<(), Error> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == ',' {
            out.push(Token {
                kind: TokenKind::Comma,
                line,
                column,
            });
            i += 1;
        } else if c == '-' {
            if chars.get(i + 1) != Some(&'>') {
                return Err(syntax(line, column, "expected `->` or `->>`"));
            }
            if chars.get(i + 2) == Some(&'>') {
                out.push(Token {
                    kind: TokenKind::DoubleArrow,
                    line,
                    column,
                });
                i += 3;
            } else {
                out.push(Token {
                    kind: TokenKind::Arrow,
                    line,
                    column,
                });
                i += 2;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                line,
                column,
            });
        } else {
            return Err(syntax(line, column, format!("unexpected character `{}`", c.escape_debug())));
        }
    }
    Ok(())
}

fn end_of(text: &str, line: usize) -> (usize, usize) {
    let visible = text.split('#').next().unwrap_or("");
    (line, visible.trim_end().chars().count() + 1)
}

fn statements(text: &str) -> Result<Vec<Statement>, Error> {
    let mut out = Vec::new();
    let mut pending: Option<Statement> = None;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let mut tokens = Vec::new();
        lex_line(raw, line, &mut tokens)?;
        if tokens.is_empty() {
            continue;
        }
        let continues = matches!(tokens.last().map(|t| &t.kind), Some(TokenKind::Comma));
        let stmt = pending.get_or_insert_with(|| Statement {
            tokens: Vec::new(),
            end: (line, 1),
        });
        stmt.tokens.extend(tokens);
        stmt.end = end_of(raw, line);
        if !continues {
            out.push(pending.take().expect("statement in progress"));
        }
    }
    if let Some(stmt) = pending {
        out.push(stmt);
    }
    Ok(out)
}

type Located = (String, usize, usize);

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: (usize, usize),
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.end, |t| (t.line, t.column))
    }

    fn ident(&mut self, what: &str) -> Result<Located, Error> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(name),
                line,
                column,
            }) => {
                self.pos += 1;
                Ok((name.clone(), *line, *column))
            }
            _ => {
                let (line, column) = self.here();
                Err(syntax(line, column, format!("expected {what}")))
            }
        }
    }

    fn ident_list(&mut self, what: &str) -> Result<Vec<Located>, Error> {
        let mut items = vec![self.ident(what)?];
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
            self.pos += 1;
            items.push(self.ident(what)?);
        }
        Ok(items)
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> Result<(), Error> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            _ => {
                let (line, column) = self.here();
                Err(syntax(line, column, format!("expected `{text}`")))
            }
        }
    }

    fn finish(&self) -> Result<(), Error> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(t.line, t.column, "unexpected token after end of statement")),
        }
    }
}

struct LocatedDependency {
    lhs: Vec<Located>,
    rhs: Vec<Located>,
    line: usize,
}

/// Parse and canonicalize a schema description.
pub fn parse_schema(text: &str) -> Result<RelationSchema, Error> {
    parse_schema_with_warnings(text).map(|(schema, _)| schema)
}

/// Like [`parse_schema`], also returning the canonicalization warnings.
pub fn parse_schema_with_warnings(text: &str) -> Result<(RelationSchema, Vec<Warning>), Error> {
    let mut name: Option<Located> = None;
    let mut attributes: Option<(Vec<Located>, usize)> = None;
    let mut key: Option<(Vec<Located>, usize)> = None;
    let mut fds = Vec::new();
    let mut mvds = Vec::new();

    for stmt in statements(text)? {
        let mut cur = Cursor {
            tokens: &stmt.tokens,
            pos: 0,
            end: stmt.end,
        };
        let (keyword, line, column) = cur.ident("a statement keyword")?;
        match keyword.as_str() {
            "schema" => {
                let ident = cur.ident("a schema name")?;
                cur.finish()?;
                if name.is_some() {
                    return Err(Error::Parse(ParseDiagnostic::new(
                        line,
                        column,
                        DiagnosticKind::DuplicateSchema,
                        "a second `schema` statement",
                    )));
                }
                name = Some(ident);
            }
            "attributes" | "key" => {
                let list = cur.ident_list("an attribute name")?;
                cur.finish()?;
                let slot = if keyword == "attributes" { &mut attributes } else { &mut key };
                if slot.is_some() {
                    return Err(Error::Parse(ParseDiagnostic::new(
                        line,
                        column,
                        DiagnosticKind::DuplicateStatement,
                        format!("a second `{keyword}` statement"),
                    )));
                }
                *slot = Some((list, line));
            }
            "fd" | "mvd" => {
                let lhs = cur.ident_list("an attribute name")?;
                if keyword == "fd" {
                    cur.expect(TokenKind::Arrow, "->")?;
                } else {
                    cur.expect(TokenKind::DoubleArrow, "->>")?;
                }
                let rhs = cur.ident_list("an attribute name")?;
                cur.finish()?;
                let dep = LocatedDependency { lhs, rhs, line };
                if keyword == "fd" {
                    fds.push(dep);
                } else {
                    mvds.push(dep);
                }
            }
            other => {
                return Err(syntax(line, column, format!("unknown statement `{other}`")));
            }
        }
    }

    let (schema_name, _, _) = name.ok_or_else(|| {
        Error::Parse(ParseDiagnostic::new(1, 1, DiagnosticKind::MissingSchema, "no `schema` statement"))
    })?;
    let (attribute_list, attributes_line) = attributes.ok_or_else(|| {
        Error::Parse(ParseDiagnostic::new(
            1,
            1,
            DiagnosticKind::MissingAttributes,
            "no `attributes` statement",
        ))
    })?;
    if attribute_list.len() > MAX_ATTRIBUTES {
        return Err(Error::Parse(ParseDiagnostic::new(
            attributes_line,
            1,
            DiagnosticKind::TooManyAttributes,
            format!("{} attributes exceed the cap of {MAX_ATTRIBUTES}", attribute_list.len()),
        )));
    }

    let mut declared = HashMap::new();
    for (attr, line, column) in &attribute_list {
        if declared.insert(attr.as_str(), ()).is_some() {
            return Err(Error::Parse(ParseDiagnostic::new(
                *line,
                *column,
                DiagnosticKind::DuplicateAttribute,
                format!("attribute `{attr}` is declared twice"),
            )));
        }
    }
    let check = |list: &[Located]| -> Result<Vec<String>, Error> {
        let mut names: Vec<String> = Vec::with_capacity(list.len());
        for (attr, line, column) in list {
            if !declared.contains_key(attr.as_str()) {
                return Err(Error::Parse(ParseDiagnostic::new(
                    *line,
                    *column,
                    DiagnosticKind::UndeclaredAttribute,
                    format!("attribute `{attr}` is not declared"),
                )));
            }
            if !names.contains(attr) {
                names.push(attr.clone());
            }
        }
        Ok(names)
    };
    let resolve = |deps: &[LocatedDependency]| -> Result<Vec<DraftDependency>, Error> {
        deps.iter()
            .map(|d| {
                Ok(DraftDependency {
                    lhs: check(&d.lhs)?,
                    rhs: check(&d.rhs)?,
                    line: Some(d.line),
                })
            })
            .collect()
    };

    let draft = SchemaDraft {
        name: schema_name,
        attributes: attribute_list.iter().map(|(a, _, _)| a.clone()).collect(),
        fds: resolve(&fds)?,
        mvds: resolve(&mvds)?,
        key: key.as_ref().map(|(list, _)| check(list)).transpose()?,
    };
    let trivial = draft
        .fds
        .iter()
        .chain(draft.mvds.iter())
        .find(|d| d.rhs.iter().all(|n| d.lhs.contains(n)));
    if let Some(dep) = trivial {
        return Err(Error::Parse(ParseDiagnostic::new(
            dep.line.unwrap_or(1),
            1,
            DiagnosticKind::TrivialDependency,
            "dependency is trivial: every right-side attribute is on the left side",
        )));
    }
    canonicalize(&draft)
}

/// Render a schema in the `.nfs` format. The output re-parses to an equal
/// schema.
pub fn render_schema(schema: &RelationSchema) -> String {
    let mut out = String::new();
    out.push_str(&format!("schema {}\n", schema.name()));
    out.push_str(&format!("attributes {}\n", schema.attribute_names().join(", ")));
    for fd in schema.fds() {
        out.push_str(&format!("fd {}\n", schema.render_fd(fd)));
    }
    for mvd in schema.mvds() {
        out.push_str(&format!("mvd {}\n", schema.render_mvd(mvd)));
    }
    if let Some(key) = schema.declared_key() {
        out.push_str(&format!("key {}\n", schema.render_set(key)));
    }
    out
}
