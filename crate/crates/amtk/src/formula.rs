//! Modal formulas: abstract syntax, a text parser, a pretty-printer, and
//! syntactic operations (modal depth, single negation, closure).
//!
//! The primitive connectives are `top`, `bot`, propositions, negation,
//! disjunction, and one diamond per agent.  Conjunction, implication, and the
//! box modality are derived forms: `f & g` abbreviates `~(~f | ~g)`,
//! `f -> g` abbreviates `~f | g`, and `[a]f` abbreviates `~<a>~f`.  The
//! constructors desugar immediately, so the rest of the crate only ever sees
//! the six primitive shapes.

use std::fmt;
use std::sync::Arc;

use crate::Error;

/// Returns true when `s` is a lexically valid identifier:
/// `[A-Za-z_][A-Za-z0-9_]*`, excluding the keywords `top` and `bot`.
pub fn is_valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return false;
    }
    s != "top" && s != "bot"
}

/// Prefix reserved for propositions minted internally (world markers of the
/// canonical model construction).  The parser rejects identifiers that start
/// with this prefix so internally minted names can never collide with input.
pub const RESERVED_PREFIX: &str = "__atom_";

macro_rules! ident_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            /// Wraps `s`, requiring a lexically valid identifier.
            pub fn new(s: &str) -> Result<Self, Error> {
                if is_valid_ident(s) {
                    Ok(Self(Arc::from(s)))
                } else {
                    Err(Error::BadIdent(s.to_string()))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::str::FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self, Error> {
                Self::new(s)
            }
        }
    };
}

ident_newtype!(
    /// An agent name.
    AgentId
);
ident_newtype!(
    /// A proposition name.
    PropId
);

/// A modal formula over the primitive connectives.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Top,
    Bot,
    Prop(PropId),
    Not(Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Diamond(AgentId, Arc<Formula>),
}

use Formula::*;

impl Formula {
    pub fn top() -> Formula {
        Top
    }

    pub fn bot() -> Formula {
        Bot
    }

    pub fn prop(p: PropId) -> Formula {
        Prop(p)
    }

    pub fn not(f: Formula) -> Formula {
        Not(Arc::new(f))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Or(Arc::new(l), Arc::new(r))
    }

    pub fn diamond(a: AgentId, f: Formula) -> Formula {
        Diamond(a, Arc::new(f))
    }

    /// `f & g`, desugared to `~(~f | ~g)`.
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(l), Formula::not(r)))
    }

    /// `f -> g`, desugared to `~f | g`.
    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::or(Formula::not(l), r)
    }

    /// `[a]f`, desugared to `~<a>~f`.
    pub fn boxm(a: AgentId, f: Formula) -> Formula {
        Formula::not(Formula::diamond(a, Formula::not(f)))
    }

    /// Conjunction of `items` in order; `top` when empty, the sole member
    /// when a singleton.
    pub fn and_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Top,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of `items` in order; `bot` when empty, the sole member
    /// when a singleton.
    pub fn or_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Bot,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    /// Maximum nesting depth of modalities.  Every diamond counts, including
    /// the diamonds inside desugared boxes.
    pub fn depth(&self) -> usize {
        match self {
            Top | Bot | Prop(_) => 0,
            Not(f) => f.depth(),
            Or(l, r) => l.depth().max(r.depth()),
            Diamond(_, f) => 1 + f.depth(),
        }
    }

    /// `~f` with double negations avoided: strips the outer negation when
    /// `f` is itself a negation, otherwise prepends one.
    pub fn single_negation(&self) -> Formula {
        match self {
            Not(g) => (**g).clone(),
            other => Formula::not(other.clone()),
        }
    }

    /// Immediate subformulas (one step, not reflexive).
    fn direct_subformulas(&self) -> Vec<Formula> {
        match self {
            Top | Bot | Prop(_) => vec![],
            Not(f) => vec![(**f).clone()],
            Or(l, r) => vec![(**l).clone(), (**r).clone()],
            Diamond(_, f) => vec![(**f).clone()],
        }
    }

    /// All propositions occurring in the formula.
    pub fn propositions(&self) -> std::collections::BTreeSet<PropId> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut std::collections::BTreeSet<PropId>) {
        match self {
            Top | Bot => {}
            Prop(p) => {
                out.insert(p.clone());
            }
            Not(f) => f.collect_props(out),
            Or(l, r) => {
                l.collect_props(out);
                r.collect_props(out);
            }
            Diamond(_, f) => f.collect_props(out),
        }
    }

    /// All agents whose modalities occur in the formula.
    pub fn agents(&self) -> std::collections::BTreeSet<AgentId> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_agents(&mut out);
        out
    }

    fn collect_agents(&self, out: &mut std::collections::BTreeSet<AgentId>) {
        match self {
            Top | Bot | Prop(_) => {}
            Not(f) => f.collect_agents(out),
            Or(l, r) => {
                l.collect_agents(out);
                r.collect_agents(out);
            }
            Diamond(a, f) => {
                out.insert(a.clone());
                f.collect_agents(out);
            }
        }
    }

    /// Renders with minimal parentheses, printing `&` and `[a]` sugar where
    /// the tree matches their desugarings.  `parse(render(f))` reproduces
    /// `f` exactly.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s, 1);
        s
    }

    // Precedence levels: 1 = disjunction, 2 = conjunction, 3 = prefix
    // operators, 4 = atoms.  `min` is the lowest level printable without
    // parentheses in the current position.
    fn level(&self) -> u8 {
        match self {
            Or(_, _) => 1,
            f if f.as_and().is_some() => 2,
            Top | Bot | Prop(_) => 4,
            _ => 3,
        }
    }

    /// Matches the desugared shape of `l & r`.
    fn as_and(&self) -> Option<(&Formula, &Formula)> {
        if let Not(inner) = self {
            if let Or(l, r) = &**inner {
                if let (Not(dl), Not(dr)) = (&**l, &**r) {
                    return Some((dl, dr));
                }
            }
        }
        None
    }

    /// Matches the desugared shape of `[a]f`.
    fn as_box(&self) -> Option<(&AgentId, &Formula)> {
        if let Not(inner) = self {
            if let Diamond(a, body) = &**inner {
                if let Not(f) = &**body {
                    return Some((a, f));
                }
            }
        }
        None
    }

    fn render_into(&self, out: &mut String, min: u8) {
        let lvl = self.level();
        if lvl < min {
            out.push('(');
            self.render_into(out, 1);
            out.push(')');
            return;
        }
        match self {
            Top => out.push_str("top"),
            Bot => out.push_str("bot"),
            Prop(p) => out.push_str(p.as_str()),
            Or(l, r) => {
                l.render_into(out, 1);
                out.push_str(" | ");
                r.render_into(out, 2);
            }
            Diamond(a, f) => {
                out.push('<');
                out.push_str(a.as_str());
                out.push('>');
                f.render_into(out, 3);
            }
            Not(_) => {
                if let Some((a, f)) = self.as_box() {
                    out.push('[');
                    out.push_str(a.as_str());
                    out.push(']');
                    f.render_into(out, 3);
                } else if let Some((l, r)) = self.as_and() {
                    l.render_into(out, 2);
                    out.push_str(" & ");
                    r.render_into(out, 3);
                } else if let Not(g) = self {
                    out.push('~');
                    g.render_into(out, 3);
                } else {
                    unreachable!()
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Formula, Error> {
        parse(s)
    }
}

/// Least set containing `phis` that is closed under subformulas and single
/// negations.
pub fn closure<'a, I>(phis: I) -> std::collections::BTreeSet<Formula>
where
    I: IntoIterator<Item = &'a Formula>,
{
    let mut out = std::collections::BTreeSet::new();
    let mut work: Vec<Formula> = phis.into_iter().cloned().collect();
    while let Some(f) = work.pop() {
        if out.insert(f.clone()) {
            work.extend(f.direct_subformulas());
            work.push(f.single_negation());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Top,
    Bot,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, Error> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '~' => {
                toks.push((i, Tok::Tilde));
                i += 1;
            }
            '&' => {
                toks.push((i, Tok::Amp));
                i += 1;
            }
            '|' => {
                toks.push((i, Tok::Pipe));
                i += 1;
            }
            '<' => {
                toks.push((i, Tok::LAngle));
                i += 1;
            }
            '>' => {
                toks.push((i, Tok::RAngle));
                i += 1;
            }
            '[' => {
                toks.push((i, Tok::LBracket));
                i += 1;
            }
            ']' => {
                toks.push((i, Tok::RBracket));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    toks.push((i, Tok::Arrow));
                    i += 2;
                } else {
                    return Err(Error::Parse {
                        pos: i,
                        msg: "expected '>' after '-'".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &src[start..i];
                let tok = match word {
                    "top" => Tok::Top,
                    "bot" => Tok::Bot,
                    _ => {
                        if word.starts_with(RESERVED_PREFIX) {
                            return Err(Error::Parse {
                                pos: start,
                                msg: format!(
                                    "identifier '{word}' uses the reserved prefix '{RESERVED_PREFIX}'"
                                ),
                            });
                        }
                        Tok::Ident(word.to_string())
                    }
                };
                toks.push((start, tok));
            }
            other => {
                return Err(Error::Parse {
                    pos: i,
                    msg: format!("unexpected character '{other}'"),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), Error> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(Error::Parse {
                pos,
                msg: format!("expected {what}"),
            }),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, Error> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => Err(Error::Parse {
                pos,
                msg: format!("expected {what}"),
            }),
        }
    }

    // formula := imp
    // imp     := or ("->" imp)?        (right associative)
    fn imp(&mut self) -> Result<Formula, Error> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.imp()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // or := and ("|" and)*             (left associative)
    fn or(&mut self) -> Result<Formula, Error> {
        let mut acc = self.and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            let rhs = self.and()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    // and := unary ("&" unary)*        (left associative)
    fn and(&mut self) -> Result<Formula, Error> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    // unary := "~" unary | "<" ident ">" unary | "[" ident "]" unary | atom
    fn unary(&mut self) -> Result<Formula, Error> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LAngle) => {
                self.bump();
                let name = self.ident("an agent name after '<'")?;
                let agent = AgentId::new(&name).map_err(|_| Error::Parse {
                    pos: self.pos(),
                    msg: format!("invalid agent name '{name}'"),
                })?;
                self.expect(Tok::RAngle, "'>'")?;
                Ok(Formula::diamond(agent, self.unary()?))
            }
            Some(Tok::LBracket) => {
                self.bump();
                let name = self.ident("an agent name after '['")?;
                let agent = AgentId::new(&name).map_err(|_| Error::Parse {
                    pos: self.pos(),
                    msg: format!("invalid agent name '{name}'"),
                })?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(Formula::boxm(agent, self.unary()?))
            }
            _ => self.atom(),
        }
    }

    // atom := "top" | "bot" | ident | "(" formula ")"
    fn atom(&mut self) -> Result<Formula, Error> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Top) => Ok(Formula::top()),
            Some(Tok::Bot) => Ok(Formula::bot()),
            Some(Tok::Ident(s)) => {
                let p = PropId::new(&s).map_err(|_| Error::Parse {
                    pos,
                    msg: format!("invalid proposition name '{s}'"),
                })?;
                Ok(Formula::prop(p))
            }
            Some(Tok::LParen) => {
                let f = self.imp()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            _ => Err(Error::Parse {
                pos,
                msg: "expected a formula".into(),
            }),
        }
    }
}

/// Parses a formula from its textual syntax.
pub fn parse(src: &str) -> Result<Formula, Error> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: src.len(),
    };
    let f = p.imp()?;
    if p.at != p.toks.len() {
        return Err(Error::Parse {
            pos: p.pos(),
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(f)
}
