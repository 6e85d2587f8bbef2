//! Exact arithmetic in the prime field `F_p` and its quadratic extension
//! `F_{p^2} = F_p[g]/(g^2 - r)` with `r` the smallest quadratic nonresidue.
//!
//! Elements are stored as a pair `a0 + a1*g` of canonical representatives in
//! `[0, p)`. Prime-field elements are exactly the pairs with `a1 = 0`, so the
//! two contexts of one prime share a representation and values can be mixed
//! freely; the result lives in the larger of the two contexts.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;

use crate::error::{Error, Result};

/// Largest modulus accepted by [`make_field`].
pub const MAX_PRIME: u64 = 101;

/// Raw coefficient pair `a0 + a1*g`, both in `[0, p)`.
pub(crate) type Raw = [u32; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldCtx {
    p: u32,
    ext_degree: u8,
    /// `g^2`; zero for the prime field.
    nonresidue: u32,
}

/// Builds `F_p` (`ext_degree = 1`) or `F_{p^2}` (`ext_degree = 2`).
pub fn make_field(p: u64, ext_degree: u8) -> Result<FieldCtx> {
    FieldCtx::new(p, ext_degree)
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut base: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

impl FieldCtx {
    pub fn new(p: u64, ext_degree: u8) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if !(3..=MAX_PRIME).contains(&p) {
            return Err(Error::UnsupportedModulus(p));
        }
        let nonresidue = match ext_degree {
            1 => 0,
            2 => (2..p)
                .find(|&r| pow_mod(r, (p - 1) / 2, p) == p - 1)
                .expect("every odd prime has a nonresidue") as u32,
            other => {
                return Err(Error::Domain(format!(
                    "extension degree {other} is not supported (use 1 or 2)"
                )))
            }
        };
        Ok(Self {
            p: p as u32,
            ext_degree,
            nonresidue,
        })
    }

    pub fn p(&self) -> u64 {
        self.p as u64
    }

    pub fn ext_degree(&self) -> u8 {
        self.ext_degree
    }

    /// The element `g^2`, or zero for the prime field.
    pub fn nonresidue(&self) -> u64 {
        self.nonresidue as u64
    }

    /// Number of elements of the field.
    pub fn order(&self) -> u64 {
        self.p().pow(self.ext_degree as u32)
    }

    /// The prime field with the same characteristic.
    pub fn prime_field(&self) -> FieldCtx {
        Self {
            p: self.p,
            ext_degree: 1,
            nonresidue: 0,
        }
    }

    /// The quadratic extension with the same characteristic.
    pub fn extension(&self) -> FieldCtx {
        if self.ext_degree == 2 {
            *self
        } else {
            Self::new(self.p(), 2).expect("prime already validated")
        }
    }

    /// Smallest context containing both; panics on a characteristic mismatch.
    pub(crate) fn join(self, other: FieldCtx) -> FieldCtx {
        assert_eq!(
            self.p, other.p,
            "field elements of different characteristic mixed"
        );
        if self.ext_degree >= other.ext_degree {
            self
        } else {
            other
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.from_raw([0, 0])
    }

    pub fn one(&self) -> FieldElement {
        self.from_raw([1, 0])
    }

    /// Reduces an integer into the prime field.
    pub fn elem(&self, v: i64) -> FieldElement {
        self.from_raw([self.reduce(v), 0])
    }

    /// `a0 + a1*g`; the `g` part must be zero in the prime field.
    pub fn ext_elem(&self, a0: i64, a1: i64) -> Result<FieldElement> {
        let a1 = self.reduce(a1);
        if self.ext_degree == 1 && a1 != 0 {
            return Err(Error::Domain(format!(
                "F_{} has no element with a g-component",
                self.p
            )));
        }
        Ok(self.from_raw([self.reduce(a0), a1]))
    }

    /// The generator `g` of the extension.
    pub fn gen(&self) -> Result<FieldElement> {
        self.ext_elem(0, 1)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let a0 = rng.gen_range(0..self.p);
        let a1 = if self.ext_degree == 2 {
            rng.gen_range(0..self.p)
        } else {
            0
        };
        self.from_raw([a0, a1])
    }

    /// All field elements, prime-field elements first.
    pub fn elements(&self) -> Vec<FieldElement> {
        let top = if self.ext_degree == 2 { self.p } else { 1 };
        (0..top)
            .flat_map(|a1| (0..self.p).map(move |a0| [a0, a1]))
            .map(|r| self.from_raw(r))
            .collect()
    }

    pub(crate) fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    pub(crate) fn from_raw(&self, raw: Raw) -> FieldElement {
        debug_assert!(raw[0] < self.p && raw[1] < self.p);
        FieldElement {
            ctx: *self,
            a0: raw[0],
            a1: raw[1],
        }
    }

    #[inline]
    pub(crate) fn add_raw(&self, a: Raw, b: Raw) -> Raw {
        let p = self.p;
        let mut s0 = a[0] + b[0];
        if s0 >= p {
            s0 -= p;
        }
        let mut s1 = a[1] + b[1];
        if s1 >= p {
            s1 -= p;
        }
        [s0, s1]
    }

    #[inline]
    pub(crate) fn neg_raw(&self, a: Raw) -> Raw {
        let p = self.p;
        [
            if a[0] == 0 { 0 } else { p - a[0] },
            if a[1] == 0 { 0 } else { p - a[1] },
        ]
    }

    #[inline]
    pub(crate) fn sub_raw(&self, a: Raw, b: Raw) -> Raw {
        self.add_raw(a, self.neg_raw(b))
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: Raw, b: Raw) -> Raw {
        let p = self.p as u64;
        if a[1] == 0 && b[1] == 0 {
            return [((a[0] as u64 * b[0] as u64) % p) as u32, 0];
        }
        let (a0, a1, b0, b1) = (a[0] as u64, a[1] as u64, b[0] as u64, b[1] as u64);
        let r = self.nonresidue as u64;
        let c0 = (a0 * b0 + (a1 * b1 % p) * r) % p;
        let c1 = (a0 * b1 + a1 * b0) % p;
        [c0 as u32, c1 as u32]
    }

    pub(crate) fn inv_raw(&self, a: Raw) -> Result<Raw> {
        let p = self.p as u64;
        if a == [0, 0] {
            return Err(Error::DivisionByZero);
        }
        // (a0 + a1 g)^-1 = (a0 - a1 g) / (a0^2 - r a1^2)
        let (a0, a1) = (a[0] as u64, a[1] as u64);
        let norm = (a0 * a0 % p + p - (a1 * a1 % p) * self.nonresidue as u64 % p) % p;
        let ninv = pow_mod(norm, p - 2, p);
        Ok([
            (a0 * ninv % p) as u32,
            ((p - a1) % p * ninv % p) as u32,
        ])
    }
}

/// An element of `F_p` or `F_{p^2}`.
#[derive(Clone, Copy, Debug)]
pub struct FieldElement {
    ctx: FieldCtx,
    a0: u32,
    a1: u32,
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.p == other.ctx.p && self.a0 == other.a0 && self.a1 == other.a1
    }
}

impl Eq for FieldElement {}

impl std::hash::Hash for FieldElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.ctx.p, self.a0, self.a1).hash(state);
    }
}

impl FieldElement {
    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    /// Coefficients `(a0, a1)` of `a0 + a1*g`.
    pub fn coords(&self) -> (u64, u64) {
        (self.a0 as u64, self.a1 as u64)
    }

    pub(crate) fn raw(&self) -> Raw {
        [self.a0, self.a1]
    }

    pub fn is_zero(&self) -> bool {
        self.a0 == 0 && self.a1 == 0
    }

    pub fn is_one(&self) -> bool {
        self.a0 == 1 && self.a1 == 0
    }

    pub fn in_prime_field(&self) -> bool {
        self.a1 == 0
    }

    /// The integer in `[0, p)` representing a prime-field element.
    pub fn as_prime(&self) -> Option<u64> {
        self.in_prime_field().then_some(self.a0 as u64)
    }

    /// Signed representative in `(-p/2, p/2]` of a prime-field element.
    pub fn as_signed(&self) -> Option<i64> {
        self.as_prime().map(|v| signed_rep(v as u32, self.ctx.p))
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(self.ctx.from_raw(self.ctx.inv_raw(self.raw())?))
    }

    pub fn pow(&self, mut e: u64) -> FieldElement {
        let ctx = self.ctx;
        let mut base = self.raw();
        let mut acc = [1, 0];
        while e > 0 {
            if e & 1 == 1 {
                acc = ctx.mul_raw(acc, base);
            }
            base = ctx.mul_raw(base, base);
            e >>= 1;
        }
        ctx.from_raw(acc)
    }

    /// Moves the element into a context of the same characteristic.
    pub fn lift(&self, ctx: FieldCtx) -> Result<FieldElement> {
        if ctx.p != self.ctx.p {
            return Err(Error::Structural(format!(
                "cannot move an element of F_{} into F_{}",
                self.ctx.p, ctx.p
            )));
        }
        if ctx.ext_degree == 1 && self.a1 != 0 {
            return Err(Error::Domain(format!("{self} is not in F_{}", ctx.p)));
        }
        Ok(ctx.from_raw(self.raw()))
    }
}

/// `C(m, i) mod p` by Lucas' theorem; zero when `i > m`.
pub fn binomial_mod(m: u64, i: u64, p: u64) -> u64 {
    if i > m {
        return 0;
    }
    let (mut m, mut i) = (m, i);
    let mut acc = 1u64;
    while i > 0 {
        let (md, id) = (m % p, i % p);
        if id > md {
            return 0;
        }
        let mut num = 1u64;
        let mut den = 1u64;
        for r in 0..id {
            num = num * ((md - r) % p) % p;
            den = den * ((r + 1) % p) % p;
        }
        acc = acc * num % p * pow_mod(den, p - 2, p) % p;
        m /= p;
        i /= p;
    }
    acc
}

pub(crate) fn signed_rep(v: u32, p: u32) -> i64 {
    if v > p / 2 {
        v as i64 - p as i64
    } else {
        v as i64
    }
}

impl fmt::Display for FieldElement {
    /// Signed representatives; extension elements as `(a+b*g)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.ctx.p;
        let a0 = signed_rep(self.a0, p);
        if self.a1 == 0 {
            return write!(f, "{a0}");
        }
        let a1 = signed_rep(self.a1, p);
        let g = match a1 {
            1 => "g".to_string(),
            -1 => "-g".to_string(),
            c => format!("{c}*g"),
        };
        if a0 == 0 {
            write!(f, "({g})")
        } else if g.starts_with('-') {
            write!(f, "({a0}{g})")
        } else {
            write!(f, "({a0}+{g})")
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $raw:ident) => {
        impl $tr for FieldElement {
            type Output = FieldElement;
            #[inline]
            fn $m(self, rhs: FieldElement) -> FieldElement {
                let ctx = self.ctx.join(rhs.ctx);
                ctx.from_raw(ctx.$raw(self.raw(), rhs.raw()))
            }
        }
    };
}

binop!(Add, add, add_raw);
binop!(Sub, sub, sub_raw);
binop!(Mul, mul, mul_raw);

impl Div for FieldElement {
    type Output = FieldElement;
    /// Panics on division by zero; use [`FieldElement::inv`] to handle it.
    fn div(self, rhs: FieldElement) -> FieldElement {
        self * rhs.inv().expect("division by zero field element")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.ctx.from_raw(self.ctx.neg_raw(self.raw()))
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: FieldElement) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: FieldElement) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: FieldElement) {
        *self = *self * rhs;
    }
}

/// Parses `c`, `a+b*g`, `b*g`, `g`, `-g+a`, ... into an element of `ctx`.
pub fn parse_element(ctx: FieldCtx, s: &str) -> Result<FieldElement> {
    let cleaned: String = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '(' && *c != ')')
        .collect();
    if cleaned.is_empty() {
        return Err(Error::Parse("empty field element".into()));
    }
    let mut a0: i64 = 0;
    let mut a1: i64 = 0;
    let mut rest = cleaned.as_str();
    while !rest.is_empty() {
        let (sign, body) = match rest.as_bytes()[0] {
            b'+' => (1, &rest[1..]),
            b'-' => (-1, &rest[1..]),
            _ => (1, rest),
        };
        let end = body[1..]
            .find(['+', '-'])
            .map(|i| i + 1)
            .unwrap_or(body.len());
        let term = &body[..end];
        rest = &body[end..];
        let bad = || Error::Parse(format!("bad field element {s:?}"));
        if let Some(c) = term.strip_suffix("*g") {
            a1 += sign * c.parse::<i64>().map_err(|_| bad())?;
        } else if term == "g" {
            a1 += sign;
        } else {
            a0 += sign * term.parse::<i64>().map_err(|_| bad())?;
        }
    }
    ctx.ext_elem(a0, a1)
}

/// Random point of `F_{p^2}^n` with `z_i - z_j` outside `F_p` for all `i < j`.
pub fn sample_point(ctx: FieldCtx, n: usize, rng_seed: u64) -> Result<Vec<FieldElement>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    sample_point_with(ctx, n, &mut rng, |_| true)
}

const SAMPLE_RETRY_CAP: usize = 10_000;

/// Rejection sampler: draws points off the `F_p`-difference arrangement until
/// `accept` also holds.
pub fn sample_point_with<R: Rng + ?Sized>(
    ctx: FieldCtx,
    n: usize,
    rng: &mut R,
    mut accept: impl FnMut(&[FieldElement]) -> bool,
) -> Result<Vec<FieldElement>> {
    if ctx.ext_degree != 2 {
        return Err(Error::Domain(
            "nonsingular points only exist over the quadratic extension".into(),
        ));
    }
    for _ in 0..SAMPLE_RETRY_CAP {
        let z: Vec<FieldElement> = (0..n).map(|_| ctx.random(rng)).collect();
        let off_arrangement = (0..n)
            .all(|i| (i + 1..n).all(|j| !(z[i] - z[j]).in_prime_field()));
        if off_arrangement && accept(&z) {
            return Ok(z);
        }
    }
    Err(Error::Sampling(SAMPLE_RETRY_CAP))
}
