//! Sparse multivariate polynomials in `z1..zn` over a [`FieldCtx`].
//!
//! A monomial is packed into a `u128`: the total degree in the top 16 bits,
//! then 14 bits per variable with `z1` most significant. Integer comparison
//! of packed monomials is therefore the length-lexicographic order (total
//! degree first, ties broken lexicographically with `z1 > z2 > ...`), and
//! monomial multiplication is integer addition. Terms are kept sorted in
//! decreasing order with no zero coefficients, so structural equality is
//! polynomial equality.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::ffield::{binomial_mod, parse_element, FieldCtx, FieldElement, Raw};

/// Maximum number of variables a packed monomial can hold.
pub const MAX_VARS: usize = 8;
/// Maximum exponent of a single variable.
pub const MAX_EXP: u32 = (1 << EXP_BITS) - 1;

const EXP_BITS: u32 = 14;
const DEG_SHIFT: u32 = 112;
const DENSE_LIMIT: usize = 1 << 22;

#[inline]
fn var_shift(i: usize) -> u32 {
    98 - EXP_BITS * i as u32
}

/// A packed monomial; see the module docs for the layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub(crate) u128);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn from_exps(exps: &[u32]) -> Monomial {
        assert!(exps.len() <= MAX_VARS, "at most {MAX_VARS} variables");
        let mut m = 0u128;
        let mut deg = 0u32;
        for (i, &e) in exps.iter().enumerate() {
            assert!(e <= MAX_EXP, "exponent {e} exceeds {MAX_EXP}");
            m |= (e as u128) << var_shift(i);
            deg += e;
        }
        Monomial(m | (deg as u128) << DEG_SHIFT)
    }

    /// `z_i^e` (0-based `i`).
    pub fn var_pow(i: usize, e: u32) -> Monomial {
        Monomial(((e as u128) << var_shift(i)) | ((e as u128) << DEG_SHIFT))
    }

    #[inline]
    pub fn exp(self, i: usize) -> u32 {
        ((self.0 >> var_shift(i)) as u32) & MAX_EXP
    }

    pub fn exps(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|i| self.exp(i)).collect()
    }

    #[inline]
    pub fn degree(self) -> u32 {
        (self.0 >> DEG_SHIFT) as u32
    }

    #[inline]
    pub fn mul(self, other: Monomial) -> Monomial {
        Monomial(self.0 + other.0)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(self, other: Monomial) -> Option<Monomial> {
        if self.degree() < other.degree() {
            return None;
        }
        (0..MAX_VARS)
            .all(|i| self.exp(i) >= other.exp(i))
            .then(|| Monomial(self.0 - other.0))
    }

    /// Drops the exponent of variable `i`.
    #[inline]
    pub fn without(self, i: usize) -> Monomial {
        let e = self.exp(i) as u128;
        Monomial(self.0 - (e << var_shift(i)) - (e << DEG_SHIFT))
    }
}

/// Multiply-rotate hasher; packed monomials are already well mixed.
#[derive(Default)]
pub(crate) struct MonoHasher(u64);

impl Hasher for MonoHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }
    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
    fn write_u128(&mut self, v: u128) {
        self.write_u64(v as u64);
        self.write_u64((v >> 64) as u64);
    }
}

pub(crate) type MonoMap<V> = HashMap<Monomial, V, BuildHasherDefault<MonoHasher>>;

/// Collects terms with repeated monomials, densely when the exponent box is
/// small enough and through a hash map otherwise.
pub(crate) struct Accum {
    ctx: FieldCtx,
    nvars: usize,
    store: Store,
}

enum Store {
    Dense {
        strides: Vec<usize>,
        data: Vec<Raw>,
    },
    Sparse(MonoMap<Raw>),
}

impl Accum {
    /// `bounds[i]` is the largest exponent of `z_i` that will be added.
    pub(crate) fn new(ctx: FieldCtx, nvars: usize, bounds: &[u32]) -> Accum {
        let mut size = 1usize;
        let mut strides = Vec::with_capacity(nvars);
        for &b in bounds {
            strides.push(size);
            size = size.saturating_mul(b as usize + 1);
        }
        let store = if size <= DENSE_LIMIT {
            Store::Dense {
                strides,
                data: vec![[0, 0]; size],
            }
        } else {
            Store::Sparse(MonoMap::default())
        };
        Accum { ctx, nvars, store }
    }

    #[inline]
    pub(crate) fn index(&self, m: Monomial) -> usize {
        match &self.store {
            Store::Dense { strides, .. } => strides
                .iter()
                .enumerate()
                .map(|(i, s)| m.exp(i) as usize * s)
                .sum(),
            Store::Sparse(_) => 0,
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, m: Monomial, c: Raw) {
        let ctx = self.ctx;
        match &mut self.store {
            Store::Dense { strides, data } => {
                let idx: usize = strides
                    .iter()
                    .enumerate()
                    .map(|(i, s)| m.exp(i) as usize * s)
                    .sum();
                data[idx] = ctx.add_raw(data[idx], c);
            }
            Store::Sparse(map) => {
                let slot = map.entry(m).or_insert([0, 0]);
                *slot = ctx.add_raw(*slot, c);
            }
        }
    }

    pub(crate) fn is_dense(&self) -> bool {
        matches!(self.store, Store::Dense { .. })
    }

    /// Dense-mode add with a precomputed index.
    #[inline]
    pub(crate) fn add_at(&mut self, idx: usize, c: Raw) {
        if let Store::Dense { data, .. } = &mut self.store {
            data[idx] = self.ctx.add_raw(data[idx], c);
        }
    }

    pub(crate) fn finish(self) -> MPoly {
        let nvars = self.nvars;
        let mut terms: Vec<(Monomial, Raw)> = match self.store {
            Store::Dense { strides, data } => {
                let bounds: Vec<usize> = strides
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let next = strides.get(i + 1).copied().unwrap_or(data.len());
                        next / s
                    })
                    .collect();
                let mut out = Vec::new();
                let mut exps = vec![0u32; nvars];
                for c in data.iter() {
                    if *c != [0, 0] {
                        out.push((Monomial::from_exps(&exps), *c));
                    }
                    for (e, b) in exps.iter_mut().zip(&bounds) {
                        *e += 1;
                        if (*e as usize) < *b {
                            break;
                        }
                        *e = 0;
                    }
                }
                out
            }
            Store::Sparse(map) => map.into_iter().filter(|(_, c)| *c != [0, 0]).collect(),
        };
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        MPoly {
            ctx: self.ctx,
            nvars,
            terms,
        }
    }
}

/// Polynomial in `z1..zn` with coefficients in a finite field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MPoly {
    ctx: FieldCtx,
    nvars: usize,
    /// Strictly decreasing monomials, nonzero coefficients.
    terms: Vec<(Monomial, Raw)>,
}

/// The form `z_i - z_j - c`, or `z_i - c` when `j` is absent (0-based indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub i: usize,
    pub j: Option<usize>,
    pub c: FieldElement,
}

impl LinearForm {
    pub fn diff(i: usize, j: usize, c: FieldElement) -> Result<LinearForm> {
        if i == j {
            return Err(Error::Domain(format!("z{} - z{} is not a linear form", i + 1, j + 1)));
        }
        Ok(LinearForm { i, j: Some(j), c })
    }

    pub fn single(i: usize, c: FieldElement) -> LinearForm {
        LinearForm { i, j: None, c }
    }

    pub fn to_mpoly(&self, nvars: usize) -> MPoly {
        let ctx = self.c.ctx();
        let mut f = MPoly::var(ctx, nvars, self.i) - MPoly::constant(nvars, self.c);
        if let Some(j) = self.j {
            f = f - MPoly::var(ctx, nvars, j);
        }
        f
    }

    pub fn eval(&self, z: &[FieldElement]) -> FieldElement {
        let mut v = z[self.i] - self.c;
        if let Some(j) = self.j {
            v -= z[j];
        }
        v
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_mpoly(self.i.max(self.j.unwrap_or(0)) + 1))
    }
}

impl MPoly {
    pub fn zero(ctx: FieldCtx, nvars: usize) -> MPoly {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables are supported");
        MPoly {
            ctx,
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn one(ctx: FieldCtx, nvars: usize) -> MPoly {
        MPoly::constant(nvars, ctx.one())
    }

    pub fn constant(nvars: usize, c: FieldElement) -> MPoly {
        let mut f = MPoly::zero(c.ctx(), nvars);
        if !c.is_zero() {
            f.terms.push((Monomial::ONE, c.raw()));
        }
        f
    }

    /// The variable `z_{i+1}` (0-based `i`).
    pub fn var(ctx: FieldCtx, nvars: usize, i: usize) -> MPoly {
        assert!(i < nvars, "variable index {i} out of range");
        let mut f = MPoly::zero(ctx, nvars);
        f.terms.push((Monomial::var_pow(i, 1), [1, 0]));
        f
    }

    pub fn monomial(nvars: usize, exps: &[u32], c: FieldElement) -> MPoly {
        assert_eq!(exps.len(), nvars);
        let mut f = MPoly::zero(c.ctx(), nvars);
        if !c.is_zero() {
            f.terms.push((Monomial::from_exps(exps), c.raw()));
        }
        f
    }

    /// Sums arbitrary terms; coefficients must share the characteristic.
    pub fn from_terms(
        ctx: FieldCtx,
        nvars: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, FieldElement)>,
    ) -> MPoly {
        let mut map: BTreeMap<Monomial, FieldElement> = BTreeMap::new();
        let mut ctx = ctx;
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            ctx = ctx.join(c.ctx());
            let m = Monomial::from_exps(&e);
            let slot = map.entry(m).or_insert(ctx.zero());
            *slot += c;
        }
        let terms = map
            .into_iter()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m, c.raw()))
            .collect();
        MPoly { ctx, nvars, terms }
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub(crate) fn raw_terms(&self) -> &[(Monomial, Raw)] {
        &self.terms
    }

    /// Terms in decreasing monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<u32>, FieldElement)> + '_ {
        self.terms
            .iter()
            .map(|(m, c)| (m.exps(self.nvars), self.ctx.from_raw(*c)))
    }

    pub fn coeff(&self, exps: &[u32]) -> FieldElement {
        let m = Monomial::from_exps(exps);
        match self.terms.binary_search_by(|t| m.cmp(&t.0)) {
            Ok(i) => self.ctx.from_raw(self.terms[i].1),
            Err(_) => self.ctx.zero(),
        }
    }

    /// The constant term.
    pub fn constant_term(&self) -> FieldElement {
        match self.terms.last() {
            Some((m, c)) if *m == Monomial::ONE => self.ctx.from_raw(*c),
            _ => self.ctx.zero(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.0 == Monomial::ONE)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.first().map(|t| t.0.degree())
    }

    /// Degree in `z_{i+1}`; zero for the zero polynomial.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.iter().map(|t| t.0.exp(i)).max().unwrap_or(0)
    }

    pub(crate) fn degree_bounds(&self) -> Vec<u32> {
        let mut b = vec![0u32; self.nvars];
        for (m, _) in &self.terms {
            for (i, bi) in b.iter_mut().enumerate() {
                *bi = (*bi).max(m.exp(i));
            }
        }
        b
    }

    pub fn is_homogeneous(&self) -> bool {
        match self.terms.first() {
            None => true,
            Some((m, _)) => self.terms.iter().all(|t| t.0.degree() == m.degree()),
        }
    }

    /// Moves the coefficients into a context of the same characteristic.
    pub fn lift(&self, ctx: FieldCtx) -> Result<MPoly> {
        if ctx.p() != self.ctx.p() {
            return Err(Error::Structural("characteristic mismatch".into()));
        }
        if ctx.ext_degree() == 1 && self.terms.iter().any(|t| t.1[1] != 0) {
            return Err(Error::Domain("coefficients outside the prime field".into()));
        }
        Ok(MPoly {
            ctx,
            ..self.clone()
        })
    }

    fn check_compatible(&self, other: &MPoly) -> Result<FieldCtx> {
        if self.nvars != other.nvars {
            return Err(Error::Structural(format!(
                "polynomials in {} and {} variables",
                self.nvars, other.nvars
            )));
        }
        if self.ctx.p() != other.ctx.p() {
            return Err(Error::Structural(format!(
                "polynomials over characteristic {} and {}",
                self.ctx.p(),
                other.ctx.p()
            )));
        }
        Ok(self.ctx.join(other.ctx))
    }

    fn merge(&self, other: &MPoly, negate_other: bool) -> Result<MPoly> {
        let ctx = self.check_compatible(other)?;
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        let fix = |c: Raw| if negate_other { ctx.neg_raw(c) } else { c };
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push((b[j].0, fix(b[j].1)));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = ctx.add_raw(a[i].1, fix(b[j].1));
                    if c != [0, 0] {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend(b[j..].iter().map(|t| (t.0, fix(t.1))));
        Ok(MPoly {
            ctx,
            nvars: self.nvars,
            terms: out,
        })
    }

    pub fn checked_add(&self, other: &MPoly) -> Result<MPoly> {
        self.merge(other, false)
    }

    pub fn checked_sub(&self, other: &MPoly) -> Result<MPoly> {
        self.merge(other, true)
    }

    pub fn checked_mul(&self, other: &MPoly) -> Result<MPoly> {
        let ctx = self.check_compatible(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(MPoly::zero(ctx, self.nvars));
        }
        let (small, big) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        if small.terms.len() <= 4 {
            let mut acc = MPoly::zero(ctx, self.nvars);
            for &(m, c) in &small.terms {
                acc = acc.merge(&big.mul_term_raw(ctx, m, c), false)?;
            }
            return Ok(acc);
        }
        let bounds: Vec<u32> = small
            .degree_bounds()
            .iter()
            .zip(big.degree_bounds())
            .map(|(a, b)| a + b)
            .collect();
        let mut acc = Accum::new(ctx, self.nvars, &bounds);
        if acc.is_dense() {
            let bi: Vec<usize> = big.terms.iter().map(|t| acc.index(t.0)).collect();
            for &(m, c) in &small.terms {
                let base = acc.index(m);
                for (t, idx) in big.terms.iter().zip(&bi) {
                    acc.add_at(base + idx, ctx.mul_raw(c, t.1));
                }
            }
        } else {
            for &(m, c) in &small.terms {
                for t in &big.terms {
                    acc.add(m.mul(t.0), ctx.mul_raw(c, t.1));
                }
            }
        }
        Ok(acc.finish())
    }

    fn mul_term_raw(&self, ctx: FieldCtx, m: Monomial, c: Raw) -> MPoly {
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let v = ctx.mul_raw(t.1, c);
                (v != [0, 0]).then_some((t.0.mul(m), v))
            })
            .collect();
        MPoly {
            ctx,
            nvars: self.nvars,
            terms,
        }
    }

    /// `c * z^exps * self`.
    pub fn mul_term(&self, exps: &[u32], c: FieldElement) -> MPoly {
        let ctx = self.ctx.join(c.ctx());
        self.mul_term_raw(ctx, Monomial::from_exps(exps), c.raw())
    }

    pub fn scale(&self, c: FieldElement) -> MPoly {
        let ctx = self.ctx.join(c.ctx());
        self.mul_term_raw(ctx, Monomial::ONE, c.raw())
    }

    pub fn mul_linear(&self, l: &LinearForm) -> MPoly {
        self * &l.to_mpoly(self.nvars)
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut acc = MPoly::one(self.ctx, self.nvars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluates at a point whose coordinates may lie in an extension.
    pub fn eval(&self, z: &[FieldElement]) -> Result<FieldElement> {
        if z.len() != self.nvars {
            return Err(Error::Structural(format!(
                "point of length {} for a polynomial in {} variables",
                z.len(),
                self.nvars
            )));
        }
        let mut ctx = self.ctx;
        for v in z {
            if v.ctx().p() != ctx.p() {
                return Err(Error::Structural("point over another characteristic".into()));
            }
            ctx = ctx.join(v.ctx());
        }
        let bounds = self.degree_bounds();
        let powers: Vec<Vec<Raw>> = z
            .iter()
            .zip(&bounds)
            .map(|(v, &b)| {
                let mut row = vec![[1, 0]];
                for _ in 0..b {
                    let last = *row.last().unwrap();
                    row.push(ctx.mul_raw(last, v.raw()));
                }
                row
            })
            .collect();
        let mut acc = [0, 0];
        for (m, c) in &self.terms {
            let mut term = *c;
            for (i, row) in powers.iter().enumerate() {
                let e = m.exp(i) as usize;
                if e > 0 {
                    term = ctx.mul_raw(term, row[e]);
                }
            }
            acc = ctx.add_raw(acc, term);
        }
        Ok(ctx.from_raw(acc))
    }

    /// `f(z_1, .., z_a + delta, .., z_n)` (0-based `a`), expanded exactly.
    pub fn shift_var(&self, a: usize, delta: FieldElement) -> MPoly {
        assert!(a < self.nvars, "variable index out of range");
        let ctx = self.ctx.join(delta.ctx());
        let p = ctx.p();
        let top = self.degree_in(a);
        let mut dpow = vec![[1u32, 0u32]];
        for _ in 0..top {
            dpow.push(ctx.mul_raw(*dpow.last().unwrap(), delta.raw()));
        }
        let binom: Vec<Vec<u32>> = (0..=top as u64)
            .map(|m| (0..=m).map(|i| binomial_mod(m, i, p) as u32).collect())
            .collect();
        let mut acc = Accum::new(ctx, self.nvars, &self.degree_bounds());
        for &(m, c) in &self.terms {
            let e = m.exp(a);
            let rest = m.without(a);
            for i in 0..=e {
                let b = binom[e as usize][i as usize];
                if b == 0 {
                    continue;
                }
                let coef = ctx.mul_raw(ctx.mul_raw(c, dpow[(e - i) as usize]), [b, 0]);
                acc.add(rest.mul(Monomial::var_pow(a, i)), coef);
            }
        }
        acc.finish()
    }

    /// Replaces the assigned variables by constants; the result keeps all
    /// variable slots, with the assigned ones absent.
    pub fn substitute(&self, assignments: &[(usize, FieldElement)]) -> Result<MPoly> {
        let mut ctx = self.ctx;
        let mut seen = vec![false; self.nvars];
        for (i, v) in assignments {
            if *i >= self.nvars {
                return Err(Error::Structural(format!("variable index {i} out of range")));
            }
            if std::mem::replace(&mut seen[*i], true) {
                return Err(Error::Structural(format!("variable z{} assigned twice", i + 1)));
            }
            ctx = ctx.join(v.ctx());
        }
        if assignments.is_empty() {
            return Ok(self.clone());
        }
        let powers: Vec<(usize, Vec<Raw>)> = assignments
            .iter()
            .map(|(i, v)| {
                let mut row = vec![[1, 0]];
                for _ in 0..self.degree_in(*i) {
                    row.push(ctx.mul_raw(*row.last().unwrap(), v.raw()));
                }
                (*i, row)
            })
            .collect();
        let mut acc = Accum::new(ctx, self.nvars, &self.degree_bounds());
        for &(m, c) in &self.terms {
            let mut rest = m;
            let mut coef = c;
            for (i, row) in &powers {
                coef = ctx.mul_raw(coef, row[m.exp(*i) as usize]);
                rest = rest.without(*i);
            }
            acc.add(rest, coef);
        }
        Ok(acc.finish())
    }

    /// Sum of the terms of maximal total degree.
    pub fn top_degree_part(&self) -> Result<MPoly> {
        let d = self
            .total_degree()
            .ok_or(Error::ZeroPolynomial("top-degree part"))?;
        let terms = self
            .terms
            .iter()
            .take_while(|t| t.0.degree() == d)
            .copied()
            .collect();
        Ok(MPoly {
            terms,
            ..self.clone_empty()
        })
    }

    /// Homogeneous component of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> MPoly {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.0.degree() == d)
            .copied()
            .collect();
        MPoly {
            terms,
            ..self.clone_empty()
        }
    }

    fn clone_empty(&self) -> MPoly {
        MPoly::zero(self.ctx, self.nvars)
    }

    /// Largest term in the length-lexicographic order.
    pub fn leading_term(&self) -> Result<(Vec<u32>, FieldElement)> {
        self.terms
            .first()
            .map(|(m, c)| (m.exps(self.nvars), self.ctx.from_raw(*c)))
            .ok_or(Error::ZeroPolynomial("leading term"))
    }

    pub(crate) fn leading_monomial(&self) -> Option<Monomial> {
        self.terms.first().map(|t| t.0)
    }

    /// Exact quotient by a nonzero polynomial; errors on a nonzero remainder.
    pub fn div_exact(&self, divisor: &MPoly) -> Result<MPoly> {
        let ctx = self.check_compatible(divisor)?;
        let (lm, lc) = *divisor
            .terms
            .first()
            .ok_or(Error::DivisionByZero)?;
        let lc_inv = ctx.inv_raw(lc)?;
        let mut rem: BTreeMap<Monomial, Raw> = self.terms.iter().copied().collect();
        let mut quot = Vec::new();
        while let Some((&m, &c)) = rem.iter().next_back() {
            let Some(qm) = m.div(lm) else {
                return Err(Error::NotDivisible(format!(
                    "leading monomial of the remainder is not divisible by that of {divisor}"
                )));
            };
            let qc = ctx.mul_raw(c, lc_inv);
            quot.push((qm, qc));
            for &(dm, dc) in &divisor.terms {
                let t = qm.mul(dm);
                let v = ctx.sub_raw(*rem.get(&t).unwrap_or(&[0, 0]), ctx.mul_raw(qc, dc));
                if v == [0, 0] {
                    rem.remove(&t);
                } else {
                    rem.insert(t, v);
                }
            }
        }
        Ok(MPoly {
            ctx,
            nvars: self.nvars,
            terms: quot,
        })
    }

    /// Exact quotient by a linear form.
    pub fn divide_exact_linear(&self, l: &LinearForm) -> Result<MPoly> {
        self.div_exact(&l.to_mpoly(self.nvars))
            .map_err(|e| match e {
                Error::NotDivisible(_) => Error::NotDivisible(format!("{self} by {l}")),
                other => other,
            })
    }

    /// Formal partial derivative in `z_{i+1}`.
    pub fn derivative(&self, i: usize) -> MPoly {
        let ctx = self.ctx;
        let terms: Vec<(Monomial, Raw)> = self
            .terms
            .iter()
            .filter_map(|&(m, c)| {
                let e = m.exp(i);
                let f = ctx.reduce(e as i64);
                if f == 0 {
                    return None;
                }
                let lowered = Monomial(m.0 - (1u128 << var_shift(i)) - (1u128 << DEG_SHIFT));
                Some((lowered, ctx.mul_raw(c, [f, 0])))
            })
            .collect();
        MPoly {
            terms,
            ..self.clone_empty()
        }
    }

    /// `f(-z)`.
    pub fn negate_vars(&self) -> MPoly {
        let ctx = self.ctx;
        let terms = self
            .terms
            .iter()
            .map(|&(m, c)| (m, if m.degree() % 2 == 1 { ctx.neg_raw(c) } else { c }))
            .collect();
        MPoly {
            terms,
            ..self.clone_empty()
        }
    }

    /// Decides membership in `F_p[z_1^p - z_1, .., z_n^p - z_n]` and returns
    /// the coordinates in that subring as a polynomial in fresh variables.
    pub fn in_periodic_subring(&self) -> Option<MPoly> {
        let ctx = self.ctx;
        let p = ctx.p() as u32;
        let h: Vec<MPoly> = (0..self.nvars)
            .map(|i| {
                MPoly::var(ctx, self.nvars, i).pow(p) - MPoly::var(ctx, self.nvars, i)
            })
            .collect();
        let mut rem = self.clone();
        let mut coords = Vec::new();
        while let Some((m, c)) = rem.terms.first().copied() {
            let exps = m.exps(self.nvars);
            if exps.iter().any(|e| e % p != 0) {
                return None;
            }
            let reduced: Vec<u32> = exps.iter().map(|e| e / p).collect();
            let mut prod = MPoly::constant(self.nvars, ctx.from_raw(c));
            for (i, e) in reduced.iter().enumerate() {
                prod = &prod * &h[i].pow(*e);
            }
            rem = &rem - &prod;
            coords.push((reduced, ctx.from_raw(c)));
        }
        Some(MPoly::from_terms(ctx, self.nvars, coords))
    }

    /// `f(z)` with `z_i` replaced by `z_i^p - z_i` for every `i`.
    pub fn compose_periodic(&self) -> MPoly {
        let ctx = self.ctx;
        let p = ctx.p() as u32;
        let mut acc = MPoly::zero(ctx, self.nvars);
        for (exps, c) in self.terms() {
            let mut prod = MPoly::constant(self.nvars, c);
            for (i, e) in exps.iter().enumerate() {
                let h = MPoly::var(ctx, self.nvars, i).pow(p) - MPoly::var(ctx, self.nvars, i);
                prod = &prod * &h.pow(*e);
            }
            acc = &acc + &prod;
        }
        acc
    }

    /// Parses the canonical rendering produced by `Display`.
    pub fn parse(ctx: FieldCtx, nvars: usize, s: &str) -> Result<MPoly> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut pieces = Vec::new();
        let mut depth = 0i32;
        let mut start = 0usize;
        let bytes = s.as_bytes();
        for (idx, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' | b'-' if depth == 0 && idx > start => {
                    pieces.push(&s[start..idx]);
                    start = idx;
                }
                _ => {}
            }
        }
        pieces.push(&s[start..]);
        let mut terms = Vec::new();
        for piece in pieces {
            let (neg, body) = match piece.as_bytes().first() {
                Some(b'-') => (true, &piece[1..]),
                Some(b'+') => (false, &piece[1..]),
                _ => (false, piece),
            };
            let mut coef = ctx.one();
            let mut exps = vec![0u32; nvars];
            for factor in split_top_level(body, '*') {
                if let Some(v) = factor.strip_prefix('z') {
                    let (idx, e) = match v.split_once('^') {
                        Some((i, e)) => (i, e),
                        None => (v, "1"),
                    };
                    let i: usize = idx
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad variable in {piece:?}")))?;
                    if i == 0 || i > nvars {
                        return Err(Error::Parse(format!("variable z{i} out of range")));
                    }
                    let e: u32 = e
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad exponent in {piece:?}")))?;
                    exps[i - 1] += e;
                } else {
                    coef *= parse_element(ctx, factor)?;
                }
            }
            if neg {
                coef = -coef;
            }
            terms.push((exps, coef));
        }
        Ok(MPoly::from_terms(ctx, nvars, terms))
    }
}

fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl fmt::Display for MPoly {
    /// `c*z1^e1*...*zn^en + ...`, decreasing order, signed representatives.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, &(m, c)) in self.terms.iter().enumerate() {
            let c = self.ctx.from_raw(c);
            let mut mono = String::new();
            for i in 0..self.nvars {
                match m.exp(i) {
                    0 => {}
                    1 => mono.push_str(&format!("*z{}", i + 1)),
                    e => mono.push_str(&format!("*z{}^{e}", i + 1)),
                }
            }
            let mono = mono.trim_start_matches('*');
            let (negative, mag) = match c.as_signed() {
                Some(v) if v < 0 => (true, (-v).to_string()),
                Some(v) => (false, v.to_string()),
                None => (false, c.to_string()),
            };
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if negative { " - " } else { " + " })?;
            }
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == "1" {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}*{mono}")?;
            }
        }
        Ok(())
    }
}

macro_rules! ref_ops {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&MPoly> for &MPoly {
            type Output = MPoly;
            /// Panics on mismatched rings; see the `checked_*` variant.
            fn $m(self, rhs: &MPoly) -> MPoly {
                self.$checked(rhs).expect("polynomial ring mismatch")
            }
        }
        impl $tr<MPoly> for MPoly {
            type Output = MPoly;
            fn $m(self, rhs: MPoly) -> MPoly {
                (&self).$m(&rhs)
            }
        }
    };
}

ref_ops!(Add, add, checked_add);
ref_ops!(Sub, sub, checked_sub);
ref_ops!(Mul, mul, checked_mul);

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        let ctx = self.ctx;
        MPoly {
            terms: self.terms.iter().map(|&(m, c)| (m, ctx.neg_raw(c))).collect(),
            ..self.clone_empty()
        }
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::make_field;
    use proptest::prelude::*;

    fn f5() -> FieldCtx {
        make_field(5, 1).unwrap()
    }

    fn z(n: usize, i: usize) -> MPoly {
        MPoly::var(f5(), n, i)
    }

    fn c(n: usize, v: i64) -> MPoly {
        MPoly::constant(n, f5().elem(v))
    }

    #[test]
    fn packing_orders_length_lex() {
        let a = Monomial::from_exps(&[1, 2, 0]);
        let b = Monomial::from_exps(&[2, 1, 0]);
        let cc = Monomial::from_exps(&[0, 0, 1]);
        assert!(b > a && a > cc);
        assert_eq!(a.mul(b).exps(3), vec![3, 3, 0]);
        assert_eq!(a.div(cc), None);
        assert_eq!(b.div(Monomial::var_pow(0, 2)).unwrap().exps(3), vec![0, 1, 0]);
    }

    #[test]
    fn basic_arith() {
        let n = 1;
        assert_eq!(&(z(n, 0) + c(n, 1)) * &(z(n, 0) - c(n, 1)), z(n, 0).pow(2) - c(n, 1));
        let f = z(2, 0) * z(2, 1) + c(2, 3);
        assert_eq!(&f + &MPoly::zero(f5(), 2), f);
        assert!(f.scale(f5().elem(5)).is_zero());
        assert!(f.checked_add(&z(3, 0)).is_err());
    }

    #[test]
    fn evaluation() {
        let f = z(2, 0) * z(2, 1) + c(2, 1);
        let pt = [f5().elem(2), f5().elem(3)];
        assert_eq!(f.eval(&pt).unwrap(), f5().elem(2));
        assert_eq!(f.eval(&[f5().zero(), f5().zero()]).unwrap(), f5().elem(1));
        assert!(MPoly::zero(f5(), 2).eval(&pt).unwrap().is_zero());
        assert!(f.eval(&pt[..1]).is_err());
    }

    #[test]
    fn shifts() {
        assert_eq!(z(1, 0).shift_var(0, f5().elem(-2)), z(1, 0) + c(1, 3));
        let k = f5().elem(3);
        assert_eq!(z(1, 0).pow(5).shift_var(0, -k), z(1, 0).pow(5) - MPoly::constant(1, k.pow(5)));
        let h = z(1, 0).pow(5) - z(1, 0);
        assert_eq!(h.shift_var(0, -k), h);
    }

    #[test]
    fn substitution() {
        let f = z(2, 0) + z(2, 1);
        assert_eq!(f.substitute(&[(0, f5().elem(2))]).unwrap(), z(2, 1) + c(2, 2));
        let g = z(2, 0) * z(2, 1).pow(2) - z(2, 1);
        let pt = [f5().elem(4), f5().elem(3)];
        let full = g.substitute(&[(0, pt[0]), (1, pt[1])]).unwrap();
        assert_eq!(full, MPoly::constant(2, g.eval(&pt).unwrap()));
        assert_eq!(g.substitute(&[]).unwrap(), g);
        assert!(g.substitute(&[(0, pt[0]), (0, pt[1])]).is_err());
    }

    #[test]
    fn top_and_leading() {
        let f = z(2, 0).pow(2) + z(2, 1);
        assert_eq!(f.top_degree_part().unwrap(), z(2, 0).pow(2));
        let q = MPoly::parse(f5(), 2, "-2*z1 + 2*z2 + 2").unwrap();
        assert_eq!(q.top_degree_part().unwrap().to_string(), "-2*z1 + 2*z2");
        assert!(MPoly::zero(f5(), 2).top_degree_part().is_err());
        let g = z(3, 0) * z(3, 1).pow(2) + z(3, 0).pow(2) * z(3, 1) + z(3, 2);
        assert_eq!(g.leading_term().unwrap(), (vec![2, 1, 0], f5().one()));
        assert_eq!(c(3, 4).leading_term().unwrap(), (vec![0, 0, 0], f5().elem(4)));
        assert!(MPoly::zero(f5(), 1).leading_term().is_err());
    }

    #[test]
    fn linear_division() {
        let l = LinearForm::diff(0, 1, f5().zero()).unwrap();
        let f = &l.to_mpoly(2) * &(z(2, 0) + c(2, 1));
        assert_eq!(f.divide_exact_linear(&l).unwrap(), z(2, 0) + c(2, 1));
        assert!(MPoly::zero(f5(), 2).divide_exact_linear(&l).unwrap().is_zero());
        assert!(matches!(
            (z(2, 0) + c(2, 1)).divide_exact_linear(&l),
            Err(Error::NotDivisible(_))
        ));
        assert!(LinearForm::diff(1, 1, f5().zero()).is_err());
    }

    #[test]
    fn rendering_round_trip() {
        let ext = make_field(7, 2).unwrap();
        let f = MPoly::parse(ext, 3, "(1+g)*z1^2*z3 - z2 + 3*z1*z2 - 1").unwrap();
        assert_eq!(MPoly::parse(ext, 3, &f.to_string()).unwrap(), f);
        assert_eq!(MPoly::zero(ext, 3).to_string(), "0");
        assert_eq!((z(2, 0) - z(2, 1)).to_string(), "z1 - z2");
        assert_eq!((-z(2, 1)).to_string(), "-z2");
    }

    #[test]
    fn periodic_subring() {
        let h1 = z(2, 0).pow(5) - z(2, 0);
        let h2 = z(2, 1).pow(5) - z(2, 1);
        let f = &(&h1 * &h2) + &c(2, 3);
        let coords = f.in_periodic_subring().unwrap();
        assert_eq!(coords.compose_periodic(), f);
        assert!(z(2, 0).in_periodic_subring().is_none());
    }

    #[test]
    fn derivative_in_char_p() {
        let f = z(2, 0).pow(5) + z(2, 0).pow(2) * z(2, 1);
        assert_eq!(f.derivative(0), c(2, 2) * z(2, 0) * z(2, 1));
    }

    fn poly_strategy(n: usize, max_deg: u32) -> impl Strategy<Value = MPoly> {
        proptest::collection::vec(
            (proptest::collection::vec(0..=max_deg, n), -2i64..=2),
            0..6,
        )
        .prop_map(move |ts| {
            MPoly::from_terms(
                make_field(5, 1).unwrap(),
                n,
                ts.into_iter().map(|(e, v)| (e, make_field(5, 1).unwrap().elem(v))),
            )
        })
    }

    fn linear_strategy(n: usize) -> impl Strategy<Value = LinearForm> {
        (0..n, 0..n, 0i64..5).prop_filter_map("distinct", |(i, j, v)| {
            LinearForm::diff(i, j, make_field(5, 1).unwrap().elem(v)).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn ring_axioms(f in poly_strategy(4, 4), g in poly_strategy(4, 4), h in poly_strategy(4, 4)) {
            prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
            prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
            prop_assert_eq!(&f + &g, &g + &f);
            prop_assert_eq!(&f * &g, &g * &f);
            prop_assert!((&f - &f).is_zero());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn shift_commutes_with_eval(f in poly_strategy(3, 6), a in 0usize..3,
                                    d in 0i64..5, pt in proptest::collection::vec(0i64..5, 3)) {
            let ctx = make_field(5, 1).unwrap();
            let pt: Vec<FieldElement> = pt.iter().map(|&v| ctx.elem(v)).collect();
            let mut moved = pt.clone();
            moved[a] += ctx.elem(d);
            prop_assert_eq!(f.shift_var(a, ctx.elem(d)).eval(&pt).unwrap(), f.eval(&moved).unwrap());
        }

        #[test]
        fn leading_term_is_multiplicative(f in poly_strategy(3, 4), g in poly_strategy(3, 4)) {
            prop_assume!(!f.is_zero() && !g.is_zero());
            let (ef, cf) = f.leading_term().unwrap();
            let (eg, cg) = g.leading_term().unwrap();
            let (e, c) = (&f * &g).leading_term().unwrap();
            let sum: Vec<u32> = ef.iter().zip(&eg).map(|(a, b)| a + b).collect();
            prop_assert_eq!(e, sum);
            prop_assert_eq!(c, cf * cg);
        }

        #[test]
        fn top_part_is_multiplicative(f in poly_strategy(3, 4), g in poly_strategy(3, 4)) {
            prop_assume!(!f.is_zero() && !g.is_zero());
            let tf = f.top_degree_part().unwrap();
            let tg = g.top_degree_part().unwrap();
            // Over a field the product of nonzero top parts never cancels.
            prop_assert_eq!((&f * &g).top_degree_part().unwrap(), &tf * &tg);
        }

        #[test]
        fn division_inverts_multiplication(f in poly_strategy(3, 4), l in linear_strategy(3)) {
            let prod = f.mul_linear(&l);
            prop_assert_eq!(prod.divide_exact_linear(&l).unwrap(), f);
        }

        #[test]
        fn dense_and_sparse_products_agree(f in poly_strategy(2, 9), g in poly_strategy(2, 9)) {
            let mut naive = MPoly::zero(f.ctx(), 2);
            for (e, c) in g.terms() {
                naive = &naive + &f.mul_term(&e, c);
            }
            prop_assert_eq!(&f * &g, naive);
        }
    }
}
