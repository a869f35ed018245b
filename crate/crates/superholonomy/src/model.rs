//! Text model files and the expression grammar used inside them.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | atom
//! atom   := rational | name | '(' expr ')'
//! ```
//!
//! Rationals are `n` or `p/q`; names are resolved by the caller
//! (`x1`, `th1`, `etaS1`, `etaT1`, `t`, `eta1`, ...).

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::geometry::{ConnectionModel, MetricModel, PatchModel};
use crate::grassmann::{GrassmannElement, GrassmannMorphism, Q};
use crate::points::{PointMap, SPoint};
use crate::superfn::SuperFunction;
use crate::transport::PathModel;
use crate::Error;

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col0: usize,
    resolve: &'a dyn Fn(&str) -> Option<SuperFunction>,
}

impl Parser<'_> {
    fn col(&self) -> usize {
        self.col0 + self.pos + 1
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<SuperFunction, Error> {
        let mut acc = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == '+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<SuperFunction, Error> {
        let mut acc = self.unary()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = acc.multiply(&rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<SuperFunction, Error> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn atom(&mut self) -> Result<SuperFunction, Error> {
        let col = self.col();
        match self.peek() {
            None => Err(parse_err(self.line, col, "unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(parse_err(self.line, self.col(), "expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let num: BigInt = self.digits().parse().expect("digits");
                let mut den = BigInt::from(1);
                if self.chars.get(self.pos) == Some(&'/') {
                    self.pos += 1;
                    let d = self.digits();
                    if d.is_empty() {
                        return Err(parse_err(self.line, self.col(), "expected a denominator after '/'"));
                    }
                    den = d.parse().expect("digits");
                    if den == BigInt::from(0) {
                        return Err(parse_err(self.line, col, "zero denominator"));
                    }
                }
                self.no_juxtaposition()?;
                Ok(SuperFunction::rational(Q::new(num, den)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                let v = (self.resolve)(&name).ok_or_else(|| parse_err(self.line, col, format!("unknown symbol '{name}'")))?;
                self.no_juxtaposition()?;
                Ok(v)
            }
            Some(c) => Err(parse_err(self.line, col, format!("unexpected '{c}'"))),
        }
    }

    fn no_juxtaposition(&mut self) -> Result<(), Error> {
        match self.peek() {
            Some(c) if c.is_ascii_alphanumeric() || c == '(' => Err(parse_err(self.line, self.col(), "juxtaposition is not allowed; use '*'")),
            _ => Ok(()),
        }
    }
}

/// Parse one expression; `line` and `col0` locate it in a file.
pub fn parse_expression_at(text: &str, resolve: &dyn Fn(&str) -> Option<SuperFunction>, line: usize, col0: usize) -> Result<SuperFunction, Error> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0, line, col0, resolve };
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(parse_err(line, p.col(), format!("unexpected '{c}'")));
    }
    Ok(e)
}

/// Symbols of a patch: `x1..`, `th1..`, `etaS1..`, `etaT1..`.
pub fn patch_symbols(patch: &PatchModel) -> impl Fn(&str) -> Option<SuperFunction> + '_ {
    move |name: &str| {
        let idx = |prefix: &str, n: usize| -> Option<usize> {
            let k: usize = name.strip_prefix(prefix)?.parse().ok()?;
            (k >= 1 && k <= n).then_some(k - 1)
        };
        if let Some(i) = idx("etaS", patch.l) {
            return Some(SuperFunction::generator(patch.eta_s(i)));
        }
        if let Some(i) = idx("etaT", patch.lprime) {
            return Some(SuperFunction::generator(patch.eta_t(i)));
        }
        if let Some(i) = idx("th", patch.q) {
            return Some(SuperFunction::generator(patch.theta(i)));
        }
        if let Some(i) = idx("x", patch.p) {
            return Some(SuperFunction::var(i));
        }
        None
    }
}

/// Parse an expression over a patch.
pub fn parse_expression(text: &str, patch: &PatchModel) -> Result<SuperFunction, Error> {
    let sym = patch_symbols(patch);
    parse_expression_at(text, &sym, 1, 0)
}

/// Print in the input grammar; parsing the result gives the same value.
pub fn print_expression(f: &SuperFunction, patch: &PatchModel) -> String {
    f.display(patch.context())
}

/// A parsed model file. Every section is optional except where a command
/// needs it.
#[derive(Clone, Debug, Default)]
pub struct ModelFile {
    pub patch: Option<PatchModel>,
    pub kmax: usize,
    pub seed: u64,
    pub samples: usize,
    pub bundle: Option<Vec<u8>>,
    pub gamma: BTreeMap<(usize, usize, usize), SuperFunction>,
    pub aux: BTreeMap<(usize, usize, usize), SuperFunction>,
    pub metric: BTreeMap<(usize, usize), SuperFunction>,
    pub base: Option<Vec<SuperFunction>>,
    pub paths: Vec<(String, Vec<PointMap>)>,
    pub vectors: Vec<(String, Vec<GrassmannElement>)>,
    pub submodules: Vec<(String, Vec<Vec<GrassmannElement>>)>,
    pub morphisms: Vec<(String, GrassmannMorphism)>,
    pub covers: Vec<(String, usize, Vec<String>)>,
}

fn parse_usize(tok: &str, line: usize, col: usize) -> Result<usize, Error> {
    tok.parse().map_err(|_| parse_err(line, col, format!("expected a number, found '{tok}'")))
}

fn parity_of(f: &SuperFunction) -> Option<u8> {
    if f.is_zero() {
        None
    } else {
        f.parity()
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        Self::parse_with(text, None)
    }

    /// Parse, replacing the declared `L'` maximum when `lprime` is given.
    pub fn parse_with(text: &str, lprime_override: Option<usize>) -> Result<Self, Error> {
        let mut m = ModelFile { kmax: 2, seed: 1, samples: 2, ..Default::default() };
        let mut lprime = 4;
        let mut lines: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            if !line.trim().is_empty() {
                lines.push((i + 1, line));
            }
        }
        // header keywords first so expressions can be resolved in any order
        let (mut p, mut q, mut l) = (None, None, 0);
        for &(n, line) in &lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "manifold" if toks.len() == 3 => {
                    p = Some(parse_usize(toks[1], n, 1)?);
                    q = Some(parse_usize(toks[2], n, 1)?);
                }
                "manifold" => return Err(parse_err(n, 1, "expected 'manifold P Q'")),
                "base" => l = parse_usize(toks.get(1).copied().unwrap_or(""), n, 1)?,
                "functor" => {
                    lprime = parse_usize(toks.get(1).copied().unwrap_or(""), n, 1)?;
                    if let Some(k) = toks.get(2) {
                        m.kmax = parse_usize(k, n, 1)?;
                    }
                }
                "seed" => m.seed = parse_usize(toks.get(1).copied().unwrap_or(""), n, 1)? as u64,
                "samples" => m.samples = parse_usize(toks.get(1).copied().unwrap_or(""), n, 1)?,
                _ => {}
            }
        }
        if let Some(lp) = lprime_override {
            lprime = lp;
        }
        if let (Some(p), Some(q)) = (p, q) {
            m.patch = Some(PatchModel::new(p, q, l, lprime)?);
        }
        for &(n, line) in &lines {
            m.line(n, line)?;
        }
        Ok(m)
    }

    fn need_patch(&self, n: usize) -> Result<&PatchModel, Error> {
        self.patch.as_ref().ok_or_else(|| parse_err(n, 1, "declare 'manifold P Q' first"))
    }

    fn line(&mut self, n: usize, line: &str) -> Result<(), Error> {
        let (head, rhs) = match line.find('=') {
            Some(i) => (&line[..i], Some((&line[i + 1..], i + 1))),
            None => (line, None),
        };
        let toks: Vec<&str> = head.split_whitespace().collect();
        let kw = toks[0];
        let rhs_or = |what: &str| rhs.ok_or_else(|| parse_err(n, 1, format!("'{what}' needs '= ...'")));
        match kw {
            "manifold" | "base" | "functor" | "seed" | "samples" => {}
            "bundle" => {
                let patch = &self.need_patch(n)?.clone();
                if toks.get(1) == Some(&"tangent") {
                    self.bundle = Some(patch.parities());
                } else if toks.len() == 3 {
                    let r = parse_usize(toks[1], n, 1)?;
                    let s = parse_usize(toks[2], n, 1)?;
                    self.bundle = Some([vec![0; r], vec![1; s]].concat());
                } else {
                    return Err(parse_err(n, 1, "expected 'bundle R S' or 'bundle tangent'"));
                }
            }
            "connection" | "aux" => {
                let (text, col) = rhs_or(kw)?;
                if toks.len() != 4 {
                    return Err(parse_err(n, 1, format!("expected '{kw} A B C = expr'")));
                }
                let idx = (1..4).map(|i| parse_usize(toks[i], n, 1).map(|v| v.wrapping_sub(1))).collect::<Result<Vec<_>, _>>()?;
                let patch = &self.need_patch(n)?.clone();
                let sym = patch_symbols(patch);
                let e = parse_expression_at(text, &sym, n, col)?;
                let key = (idx[0], idx[1], idx[2]);
                if kw == "connection" {
                    self.gamma.insert(key, e);
                } else {
                    self.aux.insert(key, e);
                }
            }
            "metric" => {
                let (text, col) = rhs_or(kw)?;
                if toks.len() != 3 {
                    return Err(parse_err(n, 1, "expected 'metric A B = expr'"));
                }
                let a = parse_usize(toks[1], n, 1)?.wrapping_sub(1);
                let b = parse_usize(toks[2], n, 1)?.wrapping_sub(1);
                let patch = &self.need_patch(n)?.clone();
                let sym = patch_symbols(patch);
                let e = parse_expression_at(text, &sym, n, col)?;
                self.metric.insert((a, b), e);
            }
            "point" | "path" | "segment" => {
                let (text, col) = rhs_or(kw)?;
                let patch = self.need_patch(n)?.clone();
                let sym = patch_symbols(&patch);
                let with_t = |s: &str| if s == "t" { Some(SuperFunction::var(0)) } else if s.starts_with('x') || s.starts_with("th") { None } else { sym(s) };
                let images = split_list(text, ',', col)
                    .into_iter()
                    .map(|(s, c)| parse_expression_at(s, if kw == "point" { &sym } else { &with_t }, n, c))
                    .collect::<Result<Vec<_>, _>>()?;
                if images.len() != patch.dim() {
                    return Err(parse_err(n, col, format!("expected {} coordinates, found {}", patch.dim(), images.len())));
                }
                for (a, f) in images.iter().enumerate() {
                    if parity_of(f).is_some_and(|p| p != patch.coord_parity(a)) || (!f.is_zero() && f.parity().is_none()) {
                        return Err(Error::Parity(format!("line {n}: coordinate {} has the wrong parity", a + 1)));
                    }
                }
                match kw {
                    "point" => self.base = Some(images),
                    _ => {
                        let name = toks.get(1).ok_or_else(|| parse_err(n, 1, format!("'{kw}' needs a name")))?.to_string();
                        let seg = PointMap::new(&patch, images)?;
                        match self.paths.iter_mut().find(|(p, _)| *p == name) {
                            Some((_, segs)) if kw == "segment" => segs.push(seg),
                            Some(_) => return Err(parse_err(n, 1, format!("path '{name}' is already defined"))),
                            None if kw == "path" => self.paths.push((name, vec![seg])),
                            None => return Err(parse_err(n, 1, format!("unknown path '{name}'"))),
                        }
                    }
                }
            }
            "vector" | "submodule" => {
                let (text, col) = rhs_or(kw)?;
                let name = toks.get(1).ok_or_else(|| parse_err(n, 1, format!("'{kw}' needs a name")))?.to_string();
                let patch = &self.need_patch(n)?.clone();
                let sym = patch_symbols(patch);
                let only_s = |s: &str| if s.starts_with("etaS") { sym(s) } else { None };
                let mut cols = Vec::new();
                for (part, c0) in split_list(text, ';', col) {
                    let col: Vec<GrassmannElement> = split_list(part, ',', c0)
                        .into_iter()
                        .map(|(s, c)| parse_expression_at(s, &only_s, n, c).map(|f| f.constant_part()))
                        .collect::<Result<_, _>>()?;
                    cols.push(col);
                }
                if kw == "vector" {
                    if cols.len() != 1 {
                        return Err(parse_err(n, col, "a vector has one column"));
                    }
                    self.vectors.push((name, cols.remove(0)));
                } else {
                    self.submodules.push((name, cols));
                }
            }
            "morphism" => {
                let (text, col) = rhs_or(kw)?;
                if toks.len() != 4 {
                    return Err(parse_err(n, 1, "expected 'morphism NAME SOURCE TARGET = images'"));
                }
                let src = parse_usize(toks[2], n, 1)?;
                let tgt = parse_usize(toks[3], n, 1)?;
                let sym = |s: &str| {
                    let k: usize = s.strip_prefix("eta")?.parse().ok()?;
                    (k >= 1 && k <= tgt).then(|| SuperFunction::generator(k - 1))
                };
                let images = split_list(text, ',', col)
                    .into_iter()
                    .map(|(s, c)| parse_expression_at(s, &sym, n, c).map(|f| f.constant_part()))
                    .collect::<Result<Vec<_>, _>>()?;
                let phi = GrassmannMorphism::new(src, tgt, images).map_err(|e| match e {
                    Error::Parity(msg) => Error::Parity(format!("line {n}: {msg}")),
                    other => other,
                })?;
                self.morphisms.push((toks[1].to_string(), phi));
            }
            "cover" => {
                let (text, _) = rhs_or(kw)?;
                if toks.len() != 3 {
                    return Err(parse_err(n, 1, "expected 'cover NAME BASE = m1, m2'"));
                }
                let base = parse_usize(toks[2], n, 1)?;
                let names: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
                for name in &names {
                    if !self.morphisms.iter().any(|(m, _)| m == name) {
                        return Err(parse_err(n, 1, format!("unknown morphism '{name}'")));
                    }
                }
                self.covers.push((toks[1].to_string(), base, names));
            }
            other => return Err(parse_err(n, 1, format!("unknown keyword '{other}'"))),
        }
        Ok(())
    }

    /// The connection, with the tangent bundle and zero Christoffel symbols
    /// as defaults.
    pub fn connection(&self) -> Result<ConnectionModel, Error> {
        let patch = self.patch.clone().ok_or_else(|| Error::Invalid("model has no manifold".into()))?;
        if !self.metric.is_empty() && self.gamma.is_empty() {
            return crate::geometry::levi_civita(&self.metric()?);
        }
        let bundle = self.bundle.clone().unwrap_or_else(|| patch.parities());
        let n = patch.dim();
        let r = bundle.len();
        let table = |src: &BTreeMap<(usize, usize, usize), SuperFunction>, rr: usize| -> Result<Vec<Vec<Vec<SuperFunction>>>, Error> {
            let mut t = vec![vec![vec![SuperFunction::zero(); rr]; rr]; n];
            for (&(a, b, c), f) in src {
                if a >= n || b >= rr || c >= rr {
                    return Err(Error::Invalid(format!("index ({}, {}, {}) out of range", a + 1, b + 1, c + 1)));
                }
                t[a][b][c] = f.clone();
            }
            Ok(t)
        };
        let gamma = table(&self.gamma, r)?;
        let aux = if self.aux.is_empty() { None } else { Some(table(&self.aux, n)?) };
        ConnectionModel::new(patch, bundle, gamma, aux)
    }

    /// The metric; entries below the diagonal default to their
    /// supersymmetric partners and the rest to zero.
    pub fn metric(&self) -> Result<MetricModel, Error> {
        let patch = self.patch.clone().ok_or_else(|| Error::Invalid("model has no manifold".into()))?;
        if self.metric.is_empty() {
            return Err(Error::Invalid("model has no metric".into()));
        }
        let n = patch.dim();
        let mut g = vec![vec![SuperFunction::zero(); n]; n];
        for (&(a, b), f) in &self.metric {
            if a >= n || b >= n {
                return Err(Error::Invalid(format!("metric index ({}, {}) out of range", a + 1, b + 1)));
            }
            g[a][b] = f.clone();
            if !self.metric.contains_key(&(b, a)) {
                let odd = patch.coord_parity(a) * patch.coord_parity(b) == 1;
                g[b][a] = if odd { -f.clone() } else { f.clone() };
            }
        }
        MetricModel::new(patch, g)
    }

    pub fn base_point(&self) -> Result<SPoint, Error> {
        let patch = self.patch.as_ref().ok_or_else(|| Error::Invalid("model has no manifold".into()))?;
        match &self.base {
            None => Ok(SPoint::origin(patch)),
            Some(images) => SPoint::new(patch, images.iter().map(|f| f.constant_part()).collect()),
        }
    }

    pub fn path_models(&self) -> Result<Vec<(String, PathModel)>, Error> {
        self.paths.iter().map(|(name, segs)| Ok((name.clone(), PathModel::new(segs.clone())?))).collect()
    }

    pub fn morphism(&self, name: &str) -> Option<&GrassmannMorphism> {
        self.morphisms.iter().find(|(m, _)| m == name).map(|(_, phi)| phi)
    }
}

/// Split on a separator outside parentheses, keeping columns.
fn split_list(text: &str, sep: char, col0: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((&text[start..i], col0 + start));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((&text[start..], col0 + start));
    out
}
