//! Polynomials in even variables with Grassmann coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::grassmann::{mask_indices, GeneratorContext, GrassmannElement, Q};

/// Exponent vector of the even variables, without trailing zeros.
pub type Multidegree = Vec<u32>;

fn trim(mut d: Multidegree) -> Multidegree {
    while d.last() == Some(&0) {
        d.pop();
    }
    d
}

fn add_degrees(a: &[u32], b: &[u32]) -> Multidegree {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0))
        .collect();
    trim(out)
}

/// A polynomial in even variables whose coefficients are Grassmann elements.
///
/// Even variables commute with everything, so `x^a * c` needs no ordering.
/// The same type models functions on a coordinate patch (variables `x1..`)
/// and functions of a path parameter (variable 0 is `t`).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SuperFunction {
    terms: BTreeMap<Multidegree, GrassmannElement>,
}

impl SuperFunction {
    pub fn zero() -> Self {
        SuperFunction { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(GrassmannElement::one())
    }

    pub fn constant(g: GrassmannElement) -> Self {
        Self::term(Vec::new(), g)
    }

    pub fn rational(c: Q) -> Self {
        Self::constant(GrassmannElement::constant(c))
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(GrassmannElement::from_int(n))
    }

    /// The even variable `j` (0-based).
    pub fn var(j: usize) -> Self {
        let mut d = vec![0; j + 1];
        d[j] = 1;
        Self::term(d, GrassmannElement::one())
    }

    /// The odd generator with global index `g`.
    pub fn generator(g: usize) -> Self {
        Self::constant(GrassmannElement::generator(g))
    }

    pub fn term(deg: Multidegree, g: GrassmannElement) -> Self {
        let mut terms = BTreeMap::new();
        if !g.is_zero() {
            terms.insert(trim(deg), g);
        }
        SuperFunction { terms }
    }

    pub fn terms(&self) -> &BTreeMap<Multidegree, GrassmannElement> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, deg: Multidegree, g: &GrassmannElement) {
        if g.is_zero() {
            return;
        }
        let e = self.terms.entry(deg.clone()).or_default();
        *e += g;
        if e.is_zero() {
            self.terms.remove(&deg);
        }
    }

    /// True when no even variable occurs.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|d| d.is_empty())
    }

    /// The coefficient of the zero multidegree.
    pub fn constant_part(&self) -> GrassmannElement {
        self.terms.get(&Vec::new()).cloned().unwrap_or_default()
    }

    pub fn as_constant(&self) -> Option<GrassmannElement> {
        if self.is_constant() {
            Some(self.constant_part())
        } else {
            None
        }
    }

    /// Union of Grassmann generators that occur.
    pub fn support(&self) -> u64 {
        self.terms.values().fold(0, |a, g| a | g.support())
    }

    /// Number of even variables that may occur.
    pub fn nvars(&self) -> usize {
        self.terms.keys().map(|d| d.len()).max().unwrap_or(0)
    }

    pub fn parity_part(&self, p: u8) -> Self {
        let mut out = Self::zero();
        for (d, g) in &self.terms {
            out.add_term(d.clone(), &g.parity_part(p));
        }
        out
    }

    /// Parity if homogeneous; zero counts as even.
    pub fn parity(&self) -> Option<u8> {
        let e = self.parity_part(0).is_zero();
        let o = self.parity_part(1).is_zero();
        match (e, o) {
            (true, true) => Some(0),
            (false, true) => Some(0),
            (true, false) => Some(1),
            _ => None,
        }
    }

    pub fn is_homogeneous(&self, p: u8) -> bool {
        self.parity_part(1 - p).is_zero()
    }

    /// Even and odd parts, skipping zero parts.
    pub fn homogeneous_parts(&self) -> Vec<(u8, SuperFunction)> {
        let mut out = Vec::new();
        for p in 0..2u8 {
            let part = self.parity_part(p);
            if !part.is_zero() {
                out.push((p, part));
            }
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        SuperFunction { terms: self.terms.iter().map(|(d, g)| (d.clone(), g.scale(c))).collect() }
    }

    /// Multiply by a Grassmann constant on the left.
    pub fn left_mul_grassmann(&self, g: &GrassmannElement) -> Self {
        let mut out = Self::zero();
        for (d, c) in &self.terms {
            out.add_term(d.clone(), &g.multiply(c));
        }
        out
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (da, ga) in &self.terms {
            for (db, gb) in &other.terms {
                let p = ga.multiply(gb);
                if !p.is_zero() {
                    out.add_term(add_degrees(da, db), &p);
                }
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = out.multiply(self);
        }
        out
    }

    /// Derivative along the even variable `j`.
    pub fn d_even(&self, j: usize) -> Self {
        let mut out = Self::zero();
        for (d, g) in &self.terms {
            let e = d.get(j).copied().unwrap_or(0);
            if e == 0 {
                continue;
            }
            let mut nd = d.clone();
            nd[j] -= 1;
            out.add_term(trim(nd), &g.scale(&Q::from_integer(BigInt::from(e))));
        }
        out
    }

    /// Odd left derivative along the generator `g`.
    pub fn left_partial(&self, g: usize) -> Self {
        let mut out = Self::zero();
        for (d, c) in &self.terms {
            out.add_term(d.clone(), &c.left_partial(g));
        }
        out
    }

    /// Antiderivative in variable `j` vanishing at 0.
    pub fn integrate(&self, j: usize) -> Self {
        let mut out = Self::zero();
        for (d, g) in &self.terms {
            let mut nd = d.clone();
            if nd.len() <= j {
                nd.resize(j + 1, 0);
            }
            nd[j] += 1;
            let k = nd[j];
            out.add_term(trim(nd), &g.scale(&Q::new(BigInt::one(), BigInt::from(k))));
        }
        out
    }

    /// Substitute the rational `value` for variable `j`.
    pub fn eval_var(&self, j: usize, value: &Q) -> Self {
        let mut out = Self::zero();
        for (d, g) in &self.terms {
            let e = d.get(j).copied().unwrap_or(0);
            let mut nd = d.clone();
            if e > 0 {
                nd[j] = 0;
            }
            let mut f = Q::one();
            for _ in 0..e {
                f *= value;
            }
            out.add_term(trim(nd), &g.scale(&f));
        }
        out
    }

    /// Coefficients of the powers of variable `j`.
    pub fn coefficients_in_var(&self, j: usize) -> BTreeMap<u32, SuperFunction> {
        let mut out: BTreeMap<u32, SuperFunction> = BTreeMap::new();
        for (d, g) in &self.terms {
            let e = d.get(j).copied().unwrap_or(0);
            let mut nd = d.clone();
            if e > 0 {
                nd[j] = 0;
            }
            out.entry(e).or_default().add_term(trim(nd), g);
        }
        out
    }

    /// Rename variable `from` to `to` (the target must not occur).
    pub fn rename_var(&self, from: usize, to: usize) -> Self {
        let mut out = Self::zero();
        for (d, g) in &self.terms {
            let e = d.get(from).copied().unwrap_or(0);
            let mut nd = d.clone();
            if e > 0 {
                nd[from] = 0;
            }
            if nd.len() <= to {
                nd.resize(to + 1, 0);
            }
            nd[to] += e;
            out.add_term(trim(nd), g);
        }
        out
    }

    /// Algebra substitution: even variable `j` goes to `even[j]`; generator
    /// `g` goes to `odd(g)` when that returns `Some`, and to itself otherwise.
    /// Odd images must be odd.
    pub fn compose<F>(&self, even: &[SuperFunction], mut odd: F) -> SuperFunction
    where
        F: FnMut(usize) -> Option<SuperFunction>,
    {
        let mut gen_cache: BTreeMap<usize, SuperFunction> = BTreeMap::new();
        let mut pow_cache: BTreeMap<(usize, u32), SuperFunction> = BTreeMap::new();
        let mut out = Self::zero();
        for (d, g) in &self.terms {
            let mut coeff = Self::zero();
            for (m, c) in g.terms() {
                let mut prod = Self::rational(c.clone());
                for i in mask_indices(*m) {
                    let img = gen_cache
                        .entry(i)
                        .or_insert_with(|| odd(i).unwrap_or_else(|| SuperFunction::generator(i)));
                    prod = prod.multiply(img);
                    if prod.is_zero() {
                        break;
                    }
                }
                coeff += &prod;
            }
            if coeff.is_zero() {
                continue;
            }
            for (j, &e) in d.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let p = pow_cache.entry((j, e)).or_insert_with(|| even[j].pow(e)).clone();
                coeff = coeff.multiply(&p);
            }
            out += &coeff;
        }
        out
    }

    /// Render with `x1..` for even variables and generator names from `ctx`.
    pub fn display(&self, ctx: &GeneratorContext) -> String {
        self.display_with(ctx, &|j| format!("x{}", j + 1))
    }

    pub fn display_with(&self, ctx: &GeneratorContext, var: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts: Vec<(bool, String)> = Vec::new();
        for (d, g) in &self.terms {
            let mut vars = Vec::new();
            for (j, &e) in d.iter().enumerate() {
                for _ in 0..e {
                    vars.push(var(j));
                }
            }
            for (m, c) in g.terms() {
                let mut factors = vars.clone();
                factors.extend(mask_indices(*m).into_iter().map(|i| ctx.generator_name(i)));
                let a = c.abs();
                let body = if factors.is_empty() {
                    a.to_string()
                } else if a.is_one() {
                    factors.join("*")
                } else {
                    format!("{}*{}", a, factors.join("*"))
                };
                parts.push((c.is_negative(), body));
            }
        }
        let mut s = String::new();
        for (k, (neg, body)) in parts.into_iter().enumerate() {
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            s.push_str(&body);
        }
        s
    }
}

impl fmt::Debug for SuperFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(d, g)| format!("x^{:?}*({:?})", d, g)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl From<GrassmannElement> for SuperFunction {
    fn from(g: GrassmannElement) -> Self {
        SuperFunction::constant(g)
    }
}

impl<'a> AddAssign<&'a SuperFunction> for SuperFunction {
    fn add_assign(&mut self, rhs: &'a SuperFunction) {
        for (d, g) in &rhs.terms {
            self.add_term(d.clone(), g);
        }
    }
}

impl<'a> SubAssign<&'a SuperFunction> for SuperFunction {
    fn sub_assign(&mut self, rhs: &'a SuperFunction) {
        for (d, g) in &rhs.terms {
            self.add_term(d.clone(), &-g);
        }
    }
}

impl<'a> Add<&'a SuperFunction> for &'a SuperFunction {
    type Output = SuperFunction;
    fn add(self, rhs: &'a SuperFunction) -> SuperFunction {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a SuperFunction> for &'a SuperFunction {
    type Output = SuperFunction;
    fn sub(self, rhs: &'a SuperFunction) -> SuperFunction {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<'a> Mul<&'a SuperFunction> for &'a SuperFunction {
    type Output = SuperFunction;
    fn mul(self, rhs: &'a SuperFunction) -> SuperFunction {
        self.multiply(rhs)
    }
}

impl Neg for SuperFunction {
    type Output = SuperFunction;
    fn neg(self) -> SuperFunction {
        SuperFunction { terms: self.terms.into_iter().map(|(d, g)| (d, -g)).collect() }
    }
}

impl Neg for &SuperFunction {
    type Output = SuperFunction;
    fn neg(self) -> SuperFunction {
        -self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{q, qi};

    #[test]
    fn nilpotent_square_vanishes() {
        let x = SuperFunction::var(0);
        let a = SuperFunction::constant(&GrassmannElement::constant(q(1, 2)) + &GrassmannElement::monomial(0b11));
        let f = x.pow(2);
        let v = f.compose(&[a], |_| None);
        assert_eq!(v.as_constant().unwrap(), &GrassmannElement::constant(q(1, 4)) + &GrassmannElement::monomial(0b11));
    }

    #[test]
    fn integrate_and_differentiate() {
        let t = SuperFunction::var(0);
        let f = &t.pow(2).scale(&qi(3)) + &SuperFunction::generator(1);
        let i = f.integrate(0);
        assert_eq!(i.d_even(0), f);
        assert!(i.eval_var(0, &qi(0)).is_zero());
    }
}
