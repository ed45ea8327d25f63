//! Text formats for queries, TGD sets and databases.
//!
//! ```text
//! q(x1,x2) :- R1(x1,y), R2(y,x2).      # query file
//! R1(x1,x2), R2(x2,x3) -> R3(x3,x1).   # TGD file, one per line
//! true -> S(z).                        # empty body
//! R1(a,b). R1("a b",3).                # fact file
//! ```
//!
//! Variables start with a lowercase letter or `_`. Constants may not appear
//! in rules. A directory of `R.csv` files (no header) is also accepted as a
//! database.

use std::path::Path;

use pest::iterators::Pair;
use pest::Parser;

use crate::error::{Error, ParseError, Result};
use crate::model::database::Database;
use crate::model::query::{Atom, ConjunctiveQuery, Tgd, TgdSet, Var};
use crate::symbol::{Sym, Value};

#[derive(pest_derive::Parser)]
#[grammar = "grammar.pest"]
struct Grammar;

fn syntax_error(e: pest::error::Error<Rule>) -> Error {
    let (line, column) = match e.line_col {
        pest::error::LineColLocation::Pos(p) => p,
        pest::error::LineColLocation::Span(p, _) => p,
    };
    Error::Parse(ParseError {
        line,
        column,
        message: e.variant.message().into_owned(),
    })
}

fn at(pair: &Pair<Rule>, message: String) -> Error {
    let (line, column) = pair.as_span().start_pos().line_col();
    Error::Parse(ParseError {
        line,
        column,
        message,
    })
}

fn variable(pair: Pair<Rule>) -> Result<Var> {
    let s = pair.as_str();
    let c = s.chars().next().unwrap();
    if c.is_ascii_lowercase() || c == '_' {
        Ok(Var::new(s))
    } else {
        Err(at(
            &pair,
            format!("`{s}` is not a variable; constants are not allowed in rules"),
        ))
    }
}

fn var_list(pair: Pair<Rule>) -> Result<Vec<Var>> {
    pair.into_inner()
        .filter(|p| p.as_rule() == Rule::word)
        .map(variable)
        .collect()
}

fn atom(pair: Pair<Rule>) -> Result<Atom> {
    let mut it = pair.into_inner();
    let rel = Sym::new(it.next().unwrap().as_str());
    let args = var_list(it.next().unwrap())?;
    Ok(Atom { rel, args })
}

fn atoms(pair: Pair<Rule>) -> Result<Vec<Atom>> {
    pair.into_inner()
        .filter(|p| p.as_rule() == Rule::atom)
        .map(atom)
        .collect()
}

fn constant(pair: Pair<Rule>) -> Value {
    let inner = pair.into_inner().next().unwrap();
    match inner.as_rule() {
        Rule::quoted => {
            let s = inner.as_str();
            let mut out = String::new();
            let mut esc = false;
            for c in s[1..s.len() - 1].chars() {
                if esc {
                    out.push(c);
                    esc = false;
                } else if c == '\\' {
                    esc = true;
                } else {
                    out.push(c);
                }
            }
            Value::name(&out)
        }
        _ => Value::name(inner.as_str()),
    }
}

pub fn parse_query(text: &str) -> Result<ConjunctiveQuery> {
    let file = Grammar::parse(Rule::query_file, text)
        .map_err(syntax_error)?
        .next()
        .unwrap();
    let q = file.into_inner().next().unwrap();
    let span = q.clone();
    let mut name = "q";
    let mut answer = Vec::new();
    let mut body = Vec::new();
    for p in q.into_inner() {
        match p.as_rule() {
            Rule::ident => name = p.as_str(),
            Rule::var_list => answer = var_list(p)?,
            Rule::atoms => body = atoms(p)?,
            _ => {}
        }
    }
    ConjunctiveQuery::named(name, answer, body).map_err(|e| match e {
        Error::InvalidQuery(m) => at(&span, m),
        other => other,
    })
}

pub fn parse_tgds(text: &str) -> Result<TgdSet> {
    let file = Grammar::parse(Rule::tgd_file, text)
        .map_err(syntax_error)?
        .next()
        .unwrap();
    let mut tgds = Vec::new();
    for t in file.into_inner() {
        if t.as_rule() != Rule::tgd {
            continue;
        }
        let span = t.clone();
        let parts: Vec<Pair<Rule>> = t
            .into_inner()
            .filter(|p| matches!(p.as_rule(), Rule::kw_true | Rule::atoms))
            .collect();
        let (body, head) = match parts.as_slice() {
            [h] => (Vec::new(), atoms(h.clone())?),
            [b, h] if b.as_rule() == Rule::kw_true => (Vec::new(), atoms(h.clone())?),
            [b, h] => (atoms(b.clone())?, atoms(h.clone())?),
            _ => unreachable!(),
        };
        tgds.push(Tgd::new(body, head).map_err(|e| match e {
            Error::InvalidQuery(m) => at(&span, m),
            other => other,
        })?);
    }
    TgdSet::new(tgds)
}

pub fn parse_database(text: &str) -> Result<Database> {
    let file = Grammar::parse(Rule::fact_file, text)
        .map_err(syntax_error)?
        .next()
        .unwrap();
    let mut db = Database::new();
    for f in file.into_inner() {
        if f.as_rule() != Rule::fact {
            continue;
        }
        let mut it = f.into_inner();
        let rel = Sym::new(it.next().unwrap().as_str());
        let tuple: Vec<Value> = it
            .filter(|p| p.as_rule() == Rule::constant)
            .map(constant)
            .collect();
        db.insert(rel, &tuple)?;
    }
    Ok(db)
}

/// Parses a comma-separated variable list such as `x1,x2`.
pub fn parse_var_list(text: &str) -> Result<Vec<Var>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let c = s.chars().next().unwrap();
            if (c.is_ascii_lowercase() || c == '_')
                && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                Ok(Var::new(s))
            } else {
                Err(Error::Parse(ParseError {
                    line: 1,
                    column: 1,
                    message: format!("`{s}` is not a variable"),
                }))
            }
        })
        .collect()
}

/// Parses a comma-separated constant tuple such as `a,3`.
pub fn parse_tuple(text: &str) -> Vec<Value> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Value::name)
        .collect()
}

pub fn read_query(path: &Path) -> Result<ConjunctiveQuery> {
    parse_query(&std::fs::read_to_string(path)?)
}

pub fn read_tgds(path: &Path) -> Result<TgdSet> {
    parse_tgds(&std::fs::read_to_string(path)?)
}

/// Reads a fact file, or a directory of headerless `R.csv` files.
pub fn read_database(path: &Path) -> Result<Database> {
    if !path.is_dir() {
        return parse_database(&std::fs::read_to_string(path)?);
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let mut db = Database::new();
    for file in files {
        let rel = Sym::new(file.file_stem().unwrap().to_string_lossy().as_ref());
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&file)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| {
                Error::Parse(ParseError {
                    line: i + 1,
                    column: 1,
                    message: format!("{}: {e}", file.display()),
                })
            })?;
            let tuple: Vec<Value> = rec.iter().map(|s| Value::name(s.trim())).collect();
            db.insert(rel, &tuple)?;
        }
    }
    Ok(db)
}
