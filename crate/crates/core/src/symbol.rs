//! Interned names and ground values.
//!
//! Names (relation symbols, variable names, constant names) are interned once
//! into a process-wide table and referred to by [`Sym`]. Ground values live in
//! [`Value`], a single machine word: small integers are stored inline and all
//! other values are interned.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use sha2::{Digest, Sha256};

/// An interned string.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sym(u32);

struct SymTable {
    map: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

fn sym_table() -> &'static RwLock<SymTable> {
    static TABLE: OnceLock<RwLock<SymTable>> = OnceLock::new();
    TABLE.get_or_init(|| {
        RwLock::new(SymTable {
            map: HashMap::new(),
            names: Vec::new(),
        })
    })
}

impl Sym {
    pub fn new(name: &str) -> Sym {
        if let Some(&id) = sym_table().read().unwrap().map.get(name) {
            return Sym(id);
        }
        let mut table = sym_table().write().unwrap();
        if let Some(&id) = table.map.get(name) {
            return Sym(id);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = table.names.len() as u32;
        table.names.push(leaked);
        table.map.insert(leaked, id);
        Sym(id)
    }

    pub fn as_str(self) -> &'static str {
        sym_table().read().unwrap().names[self.0 as usize]
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl serde::Serialize for Sym {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl From<&str> for Sym {
    fn from(s: &str) -> Sym {
        Sym::new(s)
    }
}

/// Identity of a labeled null created by the Skolem chase: the TGD that
/// produced it, the existential head variable, and the frontier image.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SkolemId {
    pub tgd: u32,
    pub var: Sym,
    pub frontier: Box<[Value]>,
}

/// The structure of a ground value.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ValueKind {
    Int(i64),
    Name(Sym),
    Null(SkolemId),
    /// A pair ⟨tag, value⟩ used by tagged databases. The tag is the value a
    /// query variable takes in the canonical database (a name or a null).
    Tagged(Value, Value),
}

/// A ground term: constant, labeled null or tagged pair.
///
/// Equality is structural. Ids of interned values depend on interning order,
/// so nothing user-visible is ever ordered by them.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Value(u64);

const INLINE_BIT: u64 = 1 << 63;
const INLINE_MIN: i64 = -(1 << 62);
const INLINE_MAX: i64 = (1 << 62) - 1;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Stored {
    BigInt(i64),
    Name(Sym),
    Null(SkolemId),
    Tagged(Value, Value),
}

struct ValueTable {
    map: HashMap<Stored, u64>,
    data: Vec<Stored>,
}

fn value_table() -> &'static RwLock<ValueTable> {
    static TABLE: OnceLock<RwLock<ValueTable>> = OnceLock::new();
    TABLE.get_or_init(|| {
        RwLock::new(ValueTable {
            map: HashMap::new(),
            data: Vec::new(),
        })
    })
}

fn intern(stored: Stored) -> Value {
    if let Some(&id) = value_table().read().unwrap().map.get(&stored) {
        return Value(id);
    }
    let mut table = value_table().write().unwrap();
    if let Some(&id) = table.map.get(&stored) {
        return Value(id);
    }
    let id = table.data.len() as u64;
    table.data.push(stored.clone());
    table.map.insert(stored, id);
    Value(id)
}

impl Value {
    pub fn int(i: i64) -> Value {
        if (INLINE_MIN..=INLINE_MAX).contains(&i) {
            Value(INLINE_BIT | ((i as u64) & !INLINE_BIT))
        } else {
            intern(Stored::BigInt(i))
        }
    }

    /// A named constant. Names that are the canonical decimal rendering of an
    /// integer become integers, so printing and re-parsing is lossless.
    pub fn name(s: &str) -> Value {
        if let Ok(i) = s.parse::<i64>() {
            if i.to_string() == s {
                return Value::int(i);
            }
        }
        intern(Stored::Name(Sym::new(s)))
    }

    pub fn sym(s: Sym) -> Value {
        Value::name(s.as_str())
    }

    pub fn null(id: SkolemId) -> Value {
        intern(Stored::Null(id))
    }

    pub fn tagged(tag: Value, value: Value) -> Value {
        intern(Stored::Tagged(tag, value))
    }

    pub fn kind(self) -> ValueKind {
        if self.0 & INLINE_BIT != 0 {
            // sign-extend the 63-bit payload
            return ValueKind::Int(((self.0 << 1) as i64) >> 1);
        }
        match &value_table().read().unwrap().data[self.0 as usize] {
            Stored::BigInt(i) => ValueKind::Int(*i),
            Stored::Name(s) => ValueKind::Name(*s),
            Stored::Null(id) => ValueKind::Null(id.clone()),
            Stored::Tagged(t, v) => ValueKind::Tagged(*t, *v),
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self.kind() {
            ValueKind::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn is_null(self) -> bool {
        matches!(self.kind(), ValueKind::Null(_))
    }

    pub fn as_tagged(self) -> Option<(Value, Value)> {
        match self.kind() {
            ValueKind::Tagged(t, v) => Some((t, v)),
            _ => None,
        }
    }

    /// Printable form that the fact parser reads back as a constant.
    pub fn render(self) -> String {
        match self.kind() {
            ValueKind::Int(i) => i.to_string(),
            ValueKind::Name(s) => {
                let s = s.as_str();
                if is_bare(s) {
                    s.to_owned()
                } else {
                    quote(s)
                }
            }
            ValueKind::Null(id) => null_label(&id),
            ValueKind::Tagged(t, v) => quote(&format!("<{},{}>", t.render(), v.render())),
        }
    }
}

fn null_label(id: &SkolemId) -> String {
    let mut hasher = Sha256::new();
    for (i, v) in id.frontier.iter().enumerate() {
        if i > 0 {
            hasher.update(b",");
        }
        hasher.update(v.render().as_bytes());
    }
    let digest = hasher.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("_:t{}.{}.{}", id.tgd, id.var, hex)
}

/// Whether a constant name can be written without quotes.
pub fn is_bare(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '.' | '-'))
        && !s.ends_with('.')
        && !s.contains("..")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.kind() {
            ValueKind::Int(i) => s.serialize_i64(i),
            _ => s.serialize_str(&self.render()),
        }
    }
}
