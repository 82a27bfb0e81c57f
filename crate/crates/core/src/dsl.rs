//! Reaction-network description language.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! param k1 = 5;
//! 0 -> S1 @ k1
//! S1 + E <-> S1E @ 20, 0.1
//! 2 A -> B @ 1e-3
//! ```
//!
//! `0` spells the empty complex. Reversible arrows take a forward and a
//! reverse rate and are expanded into two irreversible reactions at parse
//! time. Species are indexed in order of first appearance.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dynamics::VectorField;

/// A located parse or validation error.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Errors raised when rebinding parameters of an already parsed network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BindError {
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("parameter `{name}` must be finite and nonnegative, got {value}")]
    InvalidValue { name: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// A rate constant, either inline or a reference into the `param` block.
#[derive(Debug, Clone, PartialEq)]
pub enum Rate {
    Literal(f64),
    Param(String),
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Literal(v) => write!(f, "{v:?}"),
            Rate::Param(name) => f.write_str(name),
        }
    }
}

/// An irreversible reaction. Complexes are lists of `(species index,
/// stoichiometry)` in order of appearance, with repeated species merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub rate: Rate,
}

impl Reaction {
    /// Net stoichiometric change of every species touched by the reaction.
    pub fn net_change(&self) -> BTreeMap<usize, i64> {
        let mut change = BTreeMap::new();
        for &(s, c) in &self.reactants {
            *change.entry(s).or_insert(0) -= i64::from(c);
        }
        for &(s, c) in &self.products {
            *change.entry(s).or_insert(0) += i64::from(c);
        }
        change.retain(|_, v| *v != 0);
        change
    }
}

/// A validated reaction network.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    /// Parameter bindings in declaration order.
    params: Vec<(String, f64)>,
}

impl ReactionNetwork {
    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    /// Numeric value of a reaction's rate under the current bindings.
    pub fn rate_value(&self, reaction: &Reaction) -> f64 {
        match &reaction.rate {
            Rate::Literal(v) => *v,
            // Parameter references are checked at parse time.
            Rate::Param(name) => self.param(name).expect("validated parameter reference"),
        }
    }

    /// Returns a copy with `name` rebound to `value`.
    ///
    /// Zero is accepted here (it switches the reactions off), which is what
    /// parameter sweeps starting at a decoupled network need.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, BindError> {
        if !value.is_finite() || value < 0.0 {
            return Err(BindError::InvalidValue {
                name: name.to_string(),
                value,
            });
        }
        let mut out = self.clone();
        let slot = out
            .params
            .iter_mut()
            .find(|(n, _)| n == name)
            .ok_or_else(|| BindError::UnknownParam(name.to_string()))?;
        slot.1 = value;
        Ok(out)
    }

    /// Stoichiometric matrix, species by reaction.
    pub fn stoichiometry(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.reactions.len());
        for (j, r) in self.reactions.iter().enumerate() {
            for (s, c) in r.net_change() {
                m[(s, j)] = c as f64;
            }
        }
        m
    }

    fn fmt_complex(&self, f: &mut fmt::Formatter<'_>, complex: &[(usize, u32)]) -> fmt::Result {
        if complex.is_empty() {
            return f.write_str("0");
        }
        for (i, &(s, c)) in complex.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c != 1 {
                write!(f, "{c} ")?;
            }
            f.write_str(&self.species[s].name)?;
        }
        Ok(())
    }

    /// One reaction in source syntax, e.g. `S1 + E -> S1E @ k3`.
    pub fn reaction_string(&self, r: &Reaction) -> String {
        struct Line<'a>(&'a ReactionNetwork, &'a Reaction);
        impl fmt::Display for Line<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_complex(f, &self.1.reactants)?;
                f.write_str(" -> ")?;
                self.0.fmt_complex(f, &self.1.products)?;
                write!(f, " @ {}", self.1.rate)
            }
        }
        Line(self, r).to_string()
    }
}

/// Serializes back into source form; reversible pairs come out as two
/// irreversible lines, so `parse(net.to_string()) == net`.
impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in &self.params {
            writeln!(f, "param {name} = {value:?};")?;
        }
        for r in &self.reactions {
            writeln!(f, "{}", self.reaction_string(r))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Plus,
    Arrow,
    BiArrow,
    At,
    Comma,
    Eq,
    Semi,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::BiArrow => "`<->`".into(),
            Tok::At => "`@`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Semi => "`;`".into(),
        }
    }
}

/// Token with its 1-based column.
type Spanned = (Tok, usize);

fn lex_line(line_no: usize, text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push((Tok::Plus, col));
                i += 1;
            }
            '@' => {
                out.push((Tok::At, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '=' if chars.get(i + 1) == Some(&'>') => {
                return Err(ParseError::new(line_no, col, "unknown arrow `=>`; expected `->` or `<->`"));
            }
            '=' => {
                out.push((Tok::Eq, col));
                i += 1;
            }
            ';' => {
                out.push((Tok::Semi, col));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, col));
                i += 2;
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                out.push((Tok::BiArrow, col));
                i += 3;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = i;
                if c == '-' {
                    i += 1;
                }
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent, only when followed by a digit (keeps `2A` lexing as 2, A)
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                if s == "-" || s == "." || s == "-." {
                    return Err(ParseError::new(line_no, col, format!("unexpected character `{c}`")));
                }
                out.push((Tok::Number(s), col));
            }
            other => {
                return Err(ParseError::new(
                    line_no,
                    col,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    Ok(out)
}

struct LineParser<'a> {
    line: usize,
    toks: &'a [Spanned],
    pos: usize,
    end_col: usize,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |&(_, c)| c)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col(), message)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.err(format!("expected {expected}, found {}", t.describe())),
            None => self.err(format!("expected {expected}, found end of line")),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Number(s)) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| ParseError::new(self.line, col, format!("malformed number `{s}`")))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected(what)),
        }
    }
}

struct RawTerm {
    coeff: u32,
    name: String,
    column: usize,
}

struct RawReaction {
    line: usize,
    lhs: Vec<RawTerm>,
    rhs: Vec<RawTerm>,
    rates: Vec<(Rate, usize)>,
    reversible: bool,
}

fn parse_complex(p: &mut LineParser<'_>, what: &str) -> Result<Vec<RawTerm>, ParseError> {
    // a lone `0` is the empty complex
    if let Some(Tok::Number(s)) = p.peek() {
        if s == "0" && !matches!(p.toks.get(p.pos + 1), Some((Tok::Ident(_), _))) {
            p.pos += 1;
            return Ok(Vec::new());
        }
    }
    let mut terms = Vec::new();
    loop {
        let column = p.col();
        let coeff = match p.peek() {
            Some(Tok::Number(s)) => {
                let c: u32 = s
                    .parse()
                    .ok()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| p.err(format!("stoichiometry must be a positive integer, got `{s}`")))?;
                p.pos += 1;
                c
            }
            _ => 1,
        };
        match p.next() {
            Some(Tok::Ident(name)) => terms.push(RawTerm { coeff, name, column }),
            _ => {
                p.pos -= 1;
                return Err(p.unexpected(what));
            }
        }
        if p.peek() == Some(&Tok::Plus) {
            p.pos += 1;
        } else {
            return Ok(terms);
        }
    }
}

fn parse_rate(p: &mut LineParser<'_>) -> Result<(Rate, usize), ParseError> {
    let col = p.col();
    match p.peek() {
        Some(Tok::Ident(name)) => {
            let name = name.clone();
            p.pos += 1;
            Ok((Rate::Param(name), col))
        }
        Some(Tok::Number(_)) => Ok((Rate::Literal(p.number("rate")?), col)),
        _ => Err(p.unexpected("rate constant")),
    }
}

/// Parses a network description.
pub fn parse_network(source: &str) -> Result<ReactionNetwork, ParseError> {
    let mut params: Vec<(String, f64)> = Vec::new();
    let mut raw = Vec::new();
    let mut last_line = 1;

    for (i, text) in source.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let toks = lex_line(line, text)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line,
            toks: &toks,
            pos: 0,
            end_col: text.chars().count() + 1,
        };
        if p.peek() == Some(&Tok::Ident("param".into()))
            && matches!(toks.get(1), Some((Tok::Ident(_), _)))
        {
            p.pos += 1;
            let name_col = p.col();
            let Some(Tok::Ident(name)) = p.next() else {
                unreachable!()
            };
            if p.next() != Some(Tok::Eq) {
                p.pos -= 1;
                return Err(p.unexpected("`=`"));
            }
            let value_col = p.col();
            let value = p.number("parameter value")?;
            if p.peek() == Some(&Tok::Semi) {
                p.pos += 1;
            }
            if !p.at_end() {
                return Err(p.unexpected("end of statement"));
            }
            if params.iter().any(|(n, _)| *n == name) {
                return Err(ParseError::new(
                    line,
                    name_col,
                    format!("duplicate rate constant `{name}`"),
                ));
            }
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParseError::new(
                    line,
                    value_col,
                    format!("rate constant `{name}` must be positive, got {value}"),
                ));
            }
            params.push((name, value));
            continue;
        }

        let lhs = parse_complex(&mut p, "species or `0`")?;
        let reversible = match p.next() {
            Some(Tok::Arrow) => false,
            Some(Tok::BiArrow) => true,
            _ => {
                p.pos -= 1;
                return Err(p.unexpected("`->` or `<->`"));
            }
        };
        let rhs = parse_complex(&mut p, "species or `0`")?;
        if p.next() != Some(Tok::At) {
            p.pos -= 1;
            return Err(p.unexpected("`@`"));
        }
        let mut rates = vec![parse_rate(&mut p)?];
        if p.peek() == Some(&Tok::Comma) {
            p.pos += 1;
            rates.push(parse_rate(&mut p)?);
        }
        if p.peek() == Some(&Tok::Semi) {
            p.pos += 1;
        }
        if !p.at_end() {
            return Err(p.unexpected("end of statement"));
        }
        if reversible && rates.len() != 2 {
            return Err(ParseError::new(
                line,
                rates[0].1,
                "reversible reaction needs forward and reverse rates `@ kf, kr`",
            ));
        }
        if !reversible && rates.len() != 1 {
            return Err(ParseError::new(
                line,
                rates[1].1,
                "irreversible reaction takes exactly one rate",
            ));
        }
        if lhs.is_empty() && rhs.is_empty() {
            return Err(ParseError::new(line, 1, "reaction has neither reactants nor products"));
        }
        raw.push(RawReaction {
            line,
            lhs,
            rhs,
            rates,
            reversible,
        });
    }

    if raw.is_empty() {
        return Err(ParseError::new(last_line, 1, "no reactions"));
    }

    let mut species: Vec<Species> = Vec::new();
    let mut intern = |name: &str| -> usize {
        if let Some(s) = species.iter().find(|s| s.name == name) {
            return s.index;
        }
        let index = species.len();
        species.push(Species {
            name: name.to_string(),
            index,
        });
        index
    };
    let mut complex = |terms: &[RawTerm]| -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = Vec::new();
        for t in terms {
            let idx = intern(&t.name);
            match out.iter_mut().find(|(s, _)| *s == idx) {
                Some(slot) => slot.1 += t.coeff,
                None => out.push((idx, t.coeff)),
            }
        }
        out
    };

    let mut reactions = Vec::new();
    for r in &raw {
        for t in r.lhs.iter().chain(&r.rhs) {
            if t.name == "param" {
                return Err(ParseError::new(r.line, t.column, "`param` is a reserved word"));
            }
        }
        for (rate, col) in &r.rates {
            match rate {
                Rate::Literal(v) if !(*v > 0.0 && v.is_finite()) => {
                    return Err(ParseError::new(
                        r.line,
                        *col,
                        format!("rate must be positive, got {v}"),
                    ))
                }
                Rate::Param(name) if !params.iter().any(|(n, _)| n == name) => {
                    return Err(ParseError::new(
                        r.line,
                        *col,
                        format!("undefined rate constant `{name}`"),
                    ))
                }
                _ => {}
            }
        }
        let lhs = complex(&r.lhs);
        let rhs = complex(&r.rhs);
        reactions.push(Reaction {
            reactants: lhs.clone(),
            products: rhs.clone(),
            rate: r.rates[0].0.clone(),
        });
        if r.reversible {
            reactions.push(Reaction {
                reactants: rhs,
                products: lhs,
                rate: r.rates[1].0.clone(),
            });
        }
    }

    Ok(ReactionNetwork {
        species,
        reactions,
        params,
    })
}

/// A single compiled mass-action term.
#[derive(Debug, Clone)]
struct Term {
    rate: f64,
    reactants: Vec<(usize, i32)>,
    change: Vec<(usize, f64)>,
}

impl Term {
    fn propensity(&self, x: &[f64]) -> f64 {
        self.reactants
            .iter()
            .fold(self.rate, |acc, &(s, c)| acc * x[s].powi(c))
    }
}

/// Mass-action drift compiled from a network, with analytic Jacobian.
#[derive(Debug, Clone)]
pub struct MassActionField {
    dim: usize,
    terms: Vec<Term>,
}

/// Compiles a network into its mass-action vector field
/// `f_i(x) = sum_r change_ir * k_r * prod_j x_j^{a_jr}`.
pub fn mass_action_field(net: &ReactionNetwork) -> MassActionField {
    let terms = net
        .reactions()
        .iter()
        .map(|r| Term {
            rate: net.rate_value(r),
            reactants: r.reactants.iter().map(|&(s, c)| (s, c as i32)).collect(),
            change: r
                .net_change()
                .into_iter()
                .map(|(s, c)| (s, c as f64))
                .collect(),
        })
        .collect();
    MassActionField {
        dim: net.dim(),
        terms,
    }
}

impl VectorField for MassActionField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for t in &self.terms {
            let v = t.propensity(x);
            for &(s, c) in &t.change {
                out[s] += c * v;
            }
        }
    }

    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            for (k, &(j, cj)) in t.reactants.iter().enumerate() {
                // d/dx_j of k * prod x_s^{c_s}
                let mut d = t.rate * f64::from(cj) * x[j].powi(cj - 1);
                for (m, &(s, c)) in t.reactants.iter().enumerate() {
                    if m != k {
                        d *= x[s].powi(c);
                    }
                }
                for &(i, ci) in &t.change {
                    jac[(i, j)] += ci * d;
                }
            }
        }
        Some(jac)
    }

    fn nonnegative_domain(&self) -> bool {
        true
    }
}
