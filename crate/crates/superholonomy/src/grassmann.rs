//! Exact arithmetic in finite Grassmann algebras over the rationals.
//!
//! Monomials are `u64` bitmasks: bit `i` set means generator `i` occurs. A
//! monomial is always read in increasing generator order, so `0b101` is
//! `g0 g2`. Coefficients are exact rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::echelon::RowEchelon;
use crate::Error;

/// Exact rational scalar.
pub type Q = BigRational;

/// Build a rational from a numerator and denominator.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Build an integral rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Render a rational as `p/q`, always with an explicit denominator.
pub fn q_to_string(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Sign of `m1 * m2` when both are written in increasing order, or `None`
/// when they share a generator. `true` means negative.
#[inline]
pub fn monomial_product_sign(a: u64, b: u64) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut inv = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        inv += (a >> j).count_ones();
    }
    Some(inv % 2 == 1)
}

/// Indices of the set bits of a mask, increasing.
pub fn mask_indices(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    out
}

/// Mask from a list of generator indices (duplicates are an error upstream).
pub fn indices_mask(indices: &[usize]) -> u64 {
    indices.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Family {
    pub name: String,
    pub start: usize,
    pub count: usize,
}

impl Family {
    pub fn mask(&self) -> u64 {
        range_mask(self.start, self.count)
    }

    /// Global generator index of the `k`-th generator (1-based).
    pub fn generator(&self, k: usize) -> usize {
        assert!(k >= 1 && k <= self.count, "generator {k} outside family {}", self.name);
        self.start + k - 1
    }
}

pub(crate) fn range_mask(start: usize, count: usize) -> u64 {
    if count == 0 {
        0
    } else if count >= 64 {
        u64::MAX << start
    } else {
        ((1u64 << count) - 1) << start
    }
}

/// Ordered generator families of one algebra.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorContext {
    families: Vec<Family>,
    total: usize,
}

impl GeneratorContext {
    pub fn new(families: &[(&str, usize)]) -> Result<Self, Error> {
        let mut out = Vec::new();
        let mut start = 0;
        for (name, count) in families {
            if out.iter().any(|f: &Family| f.name == *name) {
                return Err(Error::Invalid(format!("duplicate family {name}")));
            }
            out.push(Family { name: name.to_string(), start, count: *count });
            start += count;
        }
        if start > 64 {
            return Err(Error::Invalid(format!("{start} generators exceed the limit of 64")));
        }
        Ok(GeneratorContext { families: out, total: start })
    }

    /// A single family `eta` of `n` generators.
    pub fn plain(n: usize) -> Self {
        GeneratorContext::new(&[("eta", n)]).expect("at most 64 generators")
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn family(&self, name: &str) -> Result<&Family, Error> {
        self.families
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::Invalid(format!("unknown generator family {name}")))
    }

    /// Mask of all generators in the context.
    pub fn mask(&self) -> u64 {
        range_mask(0, self.total)
    }

    /// Name of a global generator, e.g. `etaS2`.
    pub fn generator_name(&self, g: usize) -> String {
        for f in &self.families {
            if g >= f.start && g < f.start + f.count {
                return format!("{}{}", f.name, g - f.start + 1);
            }
        }
        format!("g{}", g + 1)
    }

    pub fn contains(&self, a: &GrassmannElement) -> bool {
        a.terms.keys().all(|m| m & !self.mask() == 0)
    }

    pub fn check(&self, a: &GrassmannElement) -> Result<(), Error> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }
}

/// Element of a Grassmann algebra with rational coefficients.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct GrassmannElement {
    terms: BTreeMap<u64, Q>,
}

impl GrassmannElement {
    pub fn zero() -> Self {
        GrassmannElement { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::term(0, c)
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(qi(n))
    }

    pub fn term(mask: u64, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(mask, c);
        }
        GrassmannElement { terms }
    }

    pub fn monomial(mask: u64) -> Self {
        Self::term(mask, Q::one())
    }

    pub fn generator(i: usize) -> Self {
        Self::monomial(1u64 << i)
    }

    pub fn from_terms<I: IntoIterator<Item = (u64, Q)>>(it: I) -> Self {
        let mut out = Self::zero();
        for (m, c) in it {
            out.add_term(m, c);
        }
        out
    }

    pub fn add_term(&mut self, mask: u64, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mask) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<u64, Q> {
        &self.terms
    }

    pub fn into_terms(self) -> BTreeMap<u64, Q> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mask: u64) -> Q {
        self.terms.get(&mask).cloned().unwrap_or_else(Q::zero)
    }

    pub fn body(&self) -> Q {
        self.coefficient(0)
    }

    pub fn soul(&self) -> Self {
        let mut s = self.clone();
        s.terms.remove(&0);
        s
    }

    /// Union of all generators that occur.
    pub fn support(&self) -> u64 {
        self.terms.keys().fold(0, |a, m| a | m)
    }

    /// Highest monomial degree, 0 for the zero element.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.count_ones()).max().unwrap_or(0)
    }

    /// Part of parity `p` (0 even, 1 odd).
    pub fn parity_part(&self, p: u8) -> Self {
        GrassmannElement {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| (m.count_ones() % 2) as u8 == p)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Parity if homogeneous. Zero counts as even.
    pub fn parity(&self) -> Option<u8> {
        let mut seen = None;
        for m in self.terms.keys() {
            let p = (m.count_ones() % 2) as u8;
            match seen {
                None => seen = Some(p),
                Some(s) if s != p => return None,
                _ => {}
            }
        }
        Some(seen.unwrap_or(0))
    }

    pub fn is_homogeneous(&self, p: u8) -> bool {
        self.is_zero() || self.parity() == Some(p)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        GrassmannElement { terms: self.terms.iter().map(|(m, x)| (*m, x * c)).collect() }
    }

    /// Multiply two elements.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = BTreeMap::<u64, Q>::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some(neg) = monomial_product_sign(*ma, *mb) {
                    let v = ca * cb;
                    let v = if neg { -v } else { v };
                    let e = out.entry(ma | mb).or_insert_with(Q::zero);
                    *e += v;
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        GrassmannElement { terms: out }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = out.multiply(self);
            if out.is_zero() {
                break;
            }
        }
        out
    }

    /// Multiplicative inverse by the nilpotent geometric series.
    pub fn invert(&self) -> Result<Self, Error> {
        let b = self.body();
        if b.is_zero() {
            return Err(Error::NotInvertible);
        }
        let binv = b.recip();
        let n = self.soul().scale(&binv);
        let mut sum = Self::one();
        let mut power = Self::one();
        loop {
            power = -power.multiply(&n);
            if power.is_zero() {
                break;
            }
            sum += &power;
        }
        Ok(sum.scale(&binv))
    }

    /// Odd left derivative along generator `i`.
    pub fn left_partial(&self, i: usize) -> Self {
        let bit = 1u64 << i;
        let below = bit - 1;
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m & bit != 0 {
                let neg = (m & below).count_ones() % 2 == 1;
                out.add_term(m & !bit, if neg { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// Split as `a = sum_I result[I] * eta^I` over the generators in `family_mask`.
    /// The coefficients are free of the family and stand to the left.
    pub fn coefficient_split_mask(&self, family_mask: u64) -> BTreeMap<u64, GrassmannElement> {
        let mut out: BTreeMap<u64, GrassmannElement> = BTreeMap::new();
        for (m, c) in &self.terms {
            let i = m & family_mask;
            let k = m & !family_mask;
            let neg = monomial_product_sign(k, i).expect("disjoint");
            out.entry(i)
                .or_default()
                .add_term(k, if neg { -c.clone() } else { c.clone() });
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    /// Family-named variant of [`GrassmannElement::coefficient_split_mask`].
    pub fn coefficient_split(
        &self,
        ctx: &GeneratorContext,
        family: &str,
    ) -> Result<BTreeMap<u64, GrassmannElement>, Error> {
        let f = ctx.family(family)?;
        Ok(self.coefficient_split_mask(f.mask()))
    }

    /// Apply `f` to every generator in increasing order and multiply the images.
    pub fn substitute<F: FnMut(usize) -> GrassmannElement>(&self, mut f: F) -> Self {
        let mut cache: BTreeMap<usize, GrassmannElement> = BTreeMap::new();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut prod = Self::constant(c.clone());
            for g in mask_indices(*m) {
                let img = cache.entry(g).or_insert_with(|| f(g));
                prod = prod.multiply(img);
                if prod.is_zero() {
                    break;
                }
            }
            out += &prod;
        }
        out
    }

    /// Render using generator names from `ctx`, e.g. `1/2 + etaS1*etaS2`.
    pub fn display(&self, ctx: &GeneratorContext) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let names: Vec<String> = mask_indices(*m).into_iter().map(|g| ctx.generator_name(g)).collect();
            if names.is_empty() {
                s.push_str(&a.to_string());
            } else if a.is_one() {
                s.push_str(&names.join("*"));
            } else {
                s.push_str(&format!("{}*{}", a, names.join("*")));
            }
        }
        s
    }

    /// Coefficients as `f64`, for the numeric transport mode.
    pub fn to_f64_terms(&self) -> BTreeMap<u64, f64> {
        self.terms.iter().map(|(m, c)| (*m, c.to_f64().unwrap_or(f64::NAN))).collect()
    }
}

impl fmt::Debug for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let idx: Vec<String> = mask_indices(*m).iter().map(|i| (i + 1).to_string()).collect();
                if idx.is_empty() {
                    c.to_string()
                } else {
                    format!("{}*e[{}]", c, idx.join(","))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<'a> AddAssign<&'a GrassmannElement> for GrassmannElement {
    fn add_assign(&mut self, rhs: &'a GrassmannElement) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl<'a> SubAssign<&'a GrassmannElement> for GrassmannElement {
    fn sub_assign(&mut self, rhs: &'a GrassmannElement) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, -c.clone());
        }
    }
}

impl<'a> Add<&'a GrassmannElement> for &'a GrassmannElement {
    type Output = GrassmannElement;
    fn add(self, rhs: &'a GrassmannElement) -> GrassmannElement {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a GrassmannElement> for &'a GrassmannElement {
    type Output = GrassmannElement;
    fn sub(self, rhs: &'a GrassmannElement) -> GrassmannElement {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<'a> Mul<&'a GrassmannElement> for &'a GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: &'a GrassmannElement) -> GrassmannElement {
        GrassmannElement::multiply(self, rhs)
    }
}

impl Add for GrassmannElement {
    type Output = GrassmannElement;
    fn add(mut self, rhs: GrassmannElement) -> GrassmannElement {
        self += &rhs;
        self
    }
}

impl Sub for GrassmannElement {
    type Output = GrassmannElement;
    fn sub(mut self, rhs: GrassmannElement) -> GrassmannElement {
        self -= &rhs;
        self
    }
}

impl Mul for GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: GrassmannElement) -> GrassmannElement {
        GrassmannElement::multiply(&self, &rhs)
    }
}

impl Neg for GrassmannElement {
    type Output = GrassmannElement;
    fn neg(mut self) -> GrassmannElement {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &GrassmannElement {
    type Output = GrassmannElement;
    fn neg(self) -> GrassmannElement {
        -self.clone()
    }
}

/// Algebra morphism given by odd images of the source generators.
///
/// Generator `i < images.len()` maps to `images[i]`; higher generators map
/// to themselves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrassmannMorphism {
    pub source: usize,
    pub target: usize,
    images: Vec<GrassmannElement>,
}

impl GrassmannMorphism {
    pub fn new(source: usize, target: usize, images: Vec<GrassmannElement>) -> Result<Self, Error> {
        if images.len() != source {
            return Err(Error::Invalid(format!("expected {source} images, got {}", images.len())));
        }
        let tmask = range_mask(0, target);
        for (i, img) in images.iter().enumerate() {
            if !img.is_homogeneous(1) {
                return Err(Error::Parity(format!("image of generator {} is not odd", i + 1)));
            }
            if img.support() & !tmask != 0 {
                return Err(Error::ContextMismatch);
            }
        }
        Ok(GrassmannMorphism { source, target, images })
    }

    pub fn identity(n: usize) -> Self {
        GrassmannMorphism {
            source: n,
            target: n,
            images: (0..n).map(GrassmannElement::generator).collect(),
        }
    }

    pub fn images(&self) -> &[GrassmannElement] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &GrassmannElement {
        &self.images[i]
    }

    pub fn apply(&self, a: &GrassmannElement) -> GrassmannElement {
        a.substitute(|g| {
            if g < self.images.len() {
                self.images[g].clone()
            } else {
                GrassmannElement::generator(g)
            }
        })
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &GrassmannMorphism) -> Result<Self, Error> {
        if first.target != self.source {
            return Err(Error::ContextMismatch);
        }
        let images = first.images.iter().map(|i| self.apply(i)).collect();
        GrassmannMorphism::new(first.source, self.target, images)
    }

    /// Matrix of degree-one coefficients: entry `(j, i)` is the coefficient of
    /// target generator `j` in the image of source generator `i`.
    pub fn linear_part(&self) -> Vec<Vec<Q>> {
        (0..self.target)
            .map(|j| self.images.iter().map(|img| img.coefficient(1u64 << j)).collect())
            .collect()
    }
}

/// Apply a morphism to an element.
pub fn apply_morphism(phi: &GrassmannMorphism, a: &GrassmannElement) -> GrassmannElement {
    phi.apply(a)
}

/// Dimension over Q of the principal ideal generated by `mu` in the algebra
/// on `n` generators.
pub fn ideal_dimension(mu: &GrassmannElement, n: usize) -> usize {
    if mu.is_zero() {
        return 0;
    }
    let mut ech = RowEchelon::new();
    for j in 0..(1u64 << n) {
        let v = mu.multiply(&GrassmannElement::monomial(j));
        if !v.is_zero() {
            ech.insert(v.into_terms());
        }
    }
    ech.rank()
}

/// Closed form for the ideal dimension of an element whose monomials are
/// pairwise disjoint.
pub fn esin_koc_dimension(mu: &GrassmannElement, n: usize) -> Result<usize, Error> {
    let mut seen = 0u64;
    for m in mu.terms.keys() {
        if seen & m != 0 {
            return Err(Error::Precondition("monomials share a generator".into()));
        }
        seen |= m;
    }
    if mu.is_zero() {
        return Ok(0);
    }
    let mut prod = Q::one();
    for m in mu.terms.keys() {
        let len = m.count_ones() as i32;
        let f = Q::one() - pow2(1 - len);
        prod *= f;
    }
    let d = pow2(n as i32 - 1) * (Q::one() - prod);
    if !d.is_integer() {
        return Err(Error::Precondition("non-integral dimension".into()));
    }
    Ok(d.to_integer().to_usize().expect("small dimension"))
}

fn pow2(e: i32) -> Q {
    if e >= 0 {
        Q::from_integer(BigInt::one() << e as usize)
    } else {
        Q::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}

/// Output of the monomial replacement procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replacement {
    pub mu: GrassmannElement,
    pub generators: usize,
    /// Pairs `(old monomial, new monomial)`, sorted by the old monomial.
    pub lambda: Vec<(u64, u64)>,
    pub steps: usize,
}

/// Rewrite an odd `mu` with `dim(mu) >= 2^(n-1)` until no generator is
/// shared by two of its monomials, adding one generator per step.
pub fn replacement_algorithm(mu: &GrassmannElement, n: usize) -> Result<Replacement, Error> {
    if !mu.is_homogeneous(1) || mu.is_zero() {
        return Err(Error::Precondition("element must be odd and nonzero".into()));
    }
    if mu.support() & !range_mask(0, n) != 0 {
        return Err(Error::ContextMismatch);
    }
    if ideal_dimension(mu, n) < (1usize << (n - 1)) {
        return Err(Error::Precondition("ideal dimension below 2^(L-1)".into()));
    }
    let mut cur = mu.clone();
    let mut gens = n;
    // current monomial -> original monomial
    let mut origin: BTreeMap<u64, u64> = mu.terms.keys().map(|m| (*m, *m)).collect();
    let mut steps = 0;
    loop {
        let Some(j0) = (0..gens).find(|&j| cur.terms.keys().filter(|m| *m & (1u64 << j) != 0).count() >= 2)
        else {
            break;
        };
        if gens >= 64 {
            return Err(Error::Invalid("generator limit reached".into()));
        }
        // The lexicographically last monomial through j0: it keeps the
        // single-generator monomial in place when there is one.
        let i_mask = *cur
            .terms
            .keys()
            .filter(|m| *m & (1u64 << j0) != 0)
            .max_by(|a, b| mask_indices(**a).cmp(&mask_indices(**b)))
            .expect("at least two");
        let c = cur.coefficient(i_mask);
        let r = GrassmannElement::monomial(i_mask).left_partial(j0);
        let fresh = gens;
        let hat = &(&cur - &GrassmannElement::term(i_mask, c.clone()))
            + &(&GrassmannElement::generator(j0) + &GrassmannElement::generator(fresh)).multiply(&r.scale(&c));
        let mut images: Vec<GrassmannElement> = (0..=fresh).map(GrassmannElement::generator).collect();
        images[fresh] = &GrassmannElement::generator(fresh) - &GrassmannElement::generator(j0);
        let phi = GrassmannMorphism::new(fresh + 1, fresh + 1, images)?;
        cur = phi.apply(&hat);
        gens += 1;
        steps += 1;
        let new_mask = (i_mask & !(1u64 << j0)) | (1u64 << fresh);
        let o = origin.remove(&i_mask).expect("tracked");
        origin.insert(new_mask, o);
        debug_assert_eq!(origin.len(), cur.terms.len());
    }
    let mut lambda: Vec<(u64, u64)> = origin.into_iter().map(|(new, old)| (old, new)).collect();
    lambda.sort();
    Ok(Replacement { mu: cur, generators: gens, lambda, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(i: usize) -> GrassmannElement {
        GrassmannElement::generator(i)
    }

    #[test]
    fn anticommutation() {
        assert_eq!(g(0).multiply(&g(1)), GrassmannElement::monomial(0b11));
        assert_eq!(g(1).multiply(&g(0)), -GrassmannElement::monomial(0b11));
        assert!(GrassmannElement::monomial(0b011).multiply(&GrassmannElement::monomial(0b101)).is_zero());
    }

    #[test]
    fn invert_cases() {
        let one = GrassmannElement::one();
        let a = &one + &g(0);
        let b = &one - &g(0);
        assert_eq!(a.multiply(&b), one);
        assert_eq!(GrassmannElement::from_int(2).invert().unwrap(), GrassmannElement::constant(q(1, 2)));
        let c = &one + &GrassmannElement::monomial(0b11);
        assert_eq!(c.invert().unwrap(), &one - &GrassmannElement::monomial(0b11));
        assert!(matches!(g(0).invert(), Err(Error::NotInvertible)));
    }

    #[test]
    fn partial_signs() {
        let e12 = GrassmannElement::monomial(0b11);
        assert_eq!(e12.left_partial(0), g(1));
        assert_eq!(e12.left_partial(1), -g(0));
        assert!(g(1).left_partial(0).is_zero());
    }

    #[test]
    fn golden_replacement() {
        let mu = &g(0) + &GrassmannElement::monomial(0b111);
        let r = replacement_algorithm(&mu, 3).unwrap();
        assert_eq!(r.mu, &g(0) + &GrassmannElement::monomial(0b1110));
        assert_eq!(r.generators, 4);
        assert_eq!(r.lambda, vec![(0b1, 0b1), (0b111, 0b1110)]);
    }
}
