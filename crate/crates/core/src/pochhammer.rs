//! Polynomials in an auxiliary variable `t` with coefficients in `K[z]`, the
//! Pochhammer basis `(t;κ)_m = t (t-κ) ... (t-(m-1)κ)`, Stirling numbers mod p,
//! and the exact identity suite for Pochhammer polynomials.

use crate::error::{Error, Result};
use crate::ffield::{binomial_mod, FieldCtx, FieldElement};
use crate::mpoly::MPoly;
use crate::report::Report;

/// `Σ_i coeffs[i] t^i` with `coeffs[i] ∈ K[z_1..z_n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TPoly {
    ctx: FieldCtx,
    nvars: usize,
    coeffs: Vec<MPoly>,
}

impl TPoly {
    pub fn new(ctx: FieldCtx, nvars: usize, coeffs: Vec<MPoly>) -> TPoly {
        let mut f = TPoly { ctx, nvars, coeffs };
        f.trim();
        f
    }

    pub fn zero(ctx: FieldCtx, nvars: usize) -> TPoly {
        TPoly::new(ctx, nvars, Vec::new())
    }

    pub fn one(ctx: FieldCtx, nvars: usize) -> TPoly {
        TPoly::new(ctx, nvars, vec![MPoly::one(ctx, nvars)])
    }

    /// Constant-coefficient polynomial `Σ c_i t^i`.
    pub fn from_scalars(ctx: FieldCtx, nvars: usize, coeffs: &[FieldElement]) -> TPoly {
        TPoly::new(
            ctx,
            nvars,
            coeffs.iter().map(|&c| MPoly::constant(nvars, c)).collect(),
        )
    }

    /// `t^m`.
    pub fn t_pow(ctx: FieldCtx, nvars: usize, m: usize) -> TPoly {
        let mut coeffs = vec![MPoly::zero(ctx, nvars); m + 1];
        coeffs[m] = MPoly::one(ctx, nvars);
        TPoly::new(ctx, nvars, coeffs)
    }

    /// `t - w`.
    pub fn linear(w: &MPoly) -> TPoly {
        TPoly::new(w.ctx(), w.nvars(), vec![-w, MPoly::one(w.ctx(), w.nvars())])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        for c in &self.coeffs {
            self.ctx = self.ctx.join(c.ctx());
        }
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree in `t`; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[MPoly] {
        &self.coeffs
    }

    /// Coefficient of `t^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> MPoly {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| MPoly::zero(self.ctx, self.nvars))
    }

    pub fn add(&self, other: &TPoly) -> TPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|i| &self.coeff(i) + &other.coeff(i)).collect();
        TPoly::new(self.ctx.join(other.ctx), self.nvars, coeffs)
    }

    pub fn sub(&self, other: &TPoly) -> TPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|i| &self.coeff(i) - &other.coeff(i)).collect();
        TPoly::new(self.ctx.join(other.ctx), self.nvars, coeffs)
    }

    pub fn mul(&self, other: &TPoly) -> TPoly {
        let ctx = self.ctx.join(other.ctx);
        if self.is_zero() || other.is_zero() {
            return TPoly::zero(ctx, self.nvars);
        }
        let mut coeffs = vec![MPoly::zero(ctx, self.nvars); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        TPoly::new(ctx, self.nvars, coeffs)
    }

    /// Multiplies every coefficient by a polynomial in `z`.
    pub fn scale(&self, c: &MPoly) -> TPoly {
        TPoly::new(
            self.ctx.join(c.ctx()),
            self.nvars,
            self.coeffs.iter().map(|a| a * c).collect(),
        )
    }

    /// `f(t + delta)`.
    pub fn shift_t(&self, delta: FieldElement) -> TPoly {
        let ctx = self.ctx.join(delta.ctx());
        let p = ctx.p();
        let deg = self.coeffs.len();
        let mut out = vec![MPoly::zero(ctx, self.nvars); deg];
        for (m, c) in self.coeffs.iter().enumerate() {
            for i in 0..=m {
                let b = binomial_mod(m as u64, i as u64, p);
                if b == 0 {
                    continue;
                }
                let s = ctx.elem(b as i64) * delta.pow((m - i) as u64);
                out[i] = &out[i] + &c.scale(s);
            }
        }
        TPoly::new(ctx, self.nvars, out)
    }

    /// Value at `t = x` as a polynomial in `z`.
    pub fn eval_t(&self, x: &MPoly) -> MPoly {
        let mut acc = MPoly::zero(self.ctx.join(x.ctx()), self.nvars);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }
}

/// `Σ_i coeffs[i] (t;κ)_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PochhammerForm {
    pub kappa: FieldElement,
    nvars: usize,
    coeffs: Vec<MPoly>,
}

impl PochhammerForm {
    pub fn new(kappa: FieldElement, nvars: usize, coeffs: Vec<MPoly>) -> PochhammerForm {
        let mut f = PochhammerForm { kappa, nvars, coeffs };
        while f.coeffs.last().is_some_and(|c| c.is_zero()) {
            f.coeffs.pop();
        }
        f
    }

    /// The constant `1 = (t;κ)_0`.
    pub fn one(kappa: FieldElement, nvars: usize) -> PochhammerForm {
        PochhammerForm::new(kappa, nvars, vec![MPoly::one(kappa.ctx(), nvars)])
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn coeffs(&self) -> &[MPoly] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<MPoly> {
        self.coeffs
    }

    /// Coefficient of `(t;κ)_i`.
    pub fn coeff(&self, i: usize) -> MPoly {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| MPoly::zero(self.kappa.ctx(), self.nvars))
    }

    /// Multiplies by `t - w`, keeping only indices `< limit` when given.
    ///
    /// Uses `t (t;κ)_i = (t;κ)_{i+1} + iκ (t;κ)_i`.
    pub fn mul_linear(&self, w: &MPoly, limit: Option<usize>) -> PochhammerForm {
        let ctx = self.kappa.ctx().join(w.ctx());
        let len = self.coeffs.len() + 1;
        let len = limit.map_or(len, |l| len.min(l));
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let mut v = MPoly::zero(ctx, self.nvars);
            if i >= 1 {
                if let Some(prev) = self.coeffs.get(i - 1) {
                    v = prev.clone();
                }
            }
            if let Some(cur) = self.coeffs.get(i) {
                if !cur.is_zero() {
                    let shift = MPoly::constant(self.nvars, self.kappa * ctx.elem(i as i64)) - w.clone();
                    v = &v + &(cur * &shift);
                }
            }
            out.push(v);
        }
        PochhammerForm::new(self.kappa, self.nvars, out)
    }

    /// Product via the Pochhammer product rule, truncated to indices `< limit`.
    pub fn mul(&self, other: &PochhammerForm, limit: Option<usize>) -> PochhammerForm {
        let ctx = self.kappa.ctx();
        let full = (self.coeffs.len() + other.coeffs.len()).saturating_sub(1);
        let len = limit.map_or(full, |l| full.min(l));
        let mut out = vec![MPoly::zero(ctx, self.nvars); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                for (e, c) in product_rule(i, j, self.kappa) {
                    if e < len && !c.is_zero() {
                        out[e] = &out[e] + &(a * b).scale(c);
                    }
                }
            }
        }
        PochhammerForm::new(self.kappa, self.nvars, out)
    }
}

/// `(t;κ)_m` as a polynomial in `t` over `K[z_1..z_nvars]`.
pub fn poch_poly_vars(kappa: FieldElement, m: usize, nvars: usize) -> TPoly {
    let ctx = kappa.ctx();
    let coeffs = poch_scalar(kappa, m);
    TPoly::from_scalars(ctx, nvars, &coeffs)
}

/// `(t;κ)_m` with constant coefficients.
pub fn poch_poly(kappa: FieldElement, m: usize) -> TPoly {
    poch_poly_vars(kappa, m, 0)
}

/// Monomial coefficients of `(t;κ)_m`, lowest degree first.
pub fn poch_scalar(kappa: FieldElement, m: usize) -> Vec<FieldElement> {
    let ctx = kappa.ctx();
    let mut c = vec![ctx.one()];
    for i in 0..m {
        let root = kappa * ctx.elem(i as i64);
        let mut next = vec![ctx.zero(); c.len() + 1];
        for (d, v) in c.iter().enumerate() {
            next[d + 1] += *v;
            next[d] -= root * *v;
        }
        c = next;
    }
    c
}

/// `(i, j) ↦ [(i+j-l, C(i,l) C(j,l) l! κ^l)]`, the product rule for
/// `(t;κ)_i (t;κ)_j`.
pub fn product_rule(i: usize, j: usize, kappa: FieldElement) -> Vec<(usize, FieldElement)> {
    let ctx = kappa.ctx();
    let p = ctx.p();
    let mut out = Vec::with_capacity(i.min(j) + 1);
    let mut fact = ctx.one();
    for l in 0..=i.min(j) {
        if l > 0 {
            fact *= ctx.elem(l as i64);
        }
        if fact.is_zero() {
            break;
        }
        let c = ctx.elem(binomial_mod(i as u64, l as u64, p) as i64)
            * ctx.elem(binomial_mod(j as u64, l as u64, p) as i64)
            * fact
            * kappa.pow(l as u64);
        out.push((i + j - l, c));
    }
    out
}

/// Signed Stirling numbers of the first kind (`kind = 1`) or Stirling
/// numbers of the second kind (`kind = 2`), reduced mod p.
pub fn stirling(kind: u8, m: usize, l: usize, ctx: FieldCtx) -> Result<FieldElement> {
    if l > m {
        return Err(Error::Domain(format!("stirling({kind}, {m}, {l}) needs l <= m")));
    }
    if kind != 1 && kind != 2 {
        return Err(Error::Domain(format!("Stirling numbers of kind {kind}")));
    }
    let table = stirling_table(kind, m, ctx);
    Ok(table[m][l])
}

/// Rows `0..=max_m` of the Stirling triangle of the given kind.
pub fn stirling_table(kind: u8, max_m: usize, ctx: FieldCtx) -> Vec<Vec<FieldElement>> {
    let mut rows = vec![vec![ctx.one()]];
    for m in 0..max_m {
        let prev = &rows[m];
        let mut row = vec![ctx.zero(); m + 2];
        for l in 0..=m + 1 {
            let down = if l >= 1 { prev[l - 1] } else { ctx.zero() };
            let same = prev.get(l).copied().unwrap_or(ctx.zero());
            row[l] = if kind == 1 {
                down - ctx.elem(m as i64) * same
            } else {
                down + ctx.elem(l as i64) * same
            };
        }
        rows.push(row);
    }
    rows
}

/// Rewrites `f` in the Pochhammer basis by eliminating the top `t`-degree
/// repeatedly; every `(t;κ)_i` is monic of degree `i`. (Divided differences
/// would need `i!`, which vanishes mod p once `i >= p`.)
pub fn to_pochhammer_basis(f: &TPoly, kappa: FieldElement) -> PochhammerForm {
    let ctx = f.ctx().join(kappa.ctx());
    let Some(deg) = f.degree() else {
        return PochhammerForm::new(kappa, f.nvars(), Vec::new());
    };
    let basis: Vec<Vec<FieldElement>> = (0..=deg).map(|m| poch_scalar(kappa, m)).collect();
    let mut rem: Vec<MPoly> = f.coeffs().to_vec();
    let mut out = vec![MPoly::zero(ctx, f.nvars()); deg + 1];
    for d in (0..=deg).rev() {
        let c = std::mem::replace(&mut rem[d], MPoly::zero(ctx, f.nvars()));
        if c.is_zero() {
            continue;
        }
        for (i, b) in basis[d].iter().enumerate().take(d) {
            if !b.is_zero() {
                rem[i] = &rem[i] - &c.scale(*b);
            }
        }
        out[d] = c;
    }
    PochhammerForm::new(kappa, f.nvars(), out)
}

/// Expands a Pochhammer-basis form back into powers of `t`.
pub fn from_pochhammer_basis(pf: &PochhammerForm) -> TPoly {
    let ctx = pf.kappa.ctx();
    let mut coeffs = vec![MPoly::zero(ctx, pf.nvars()); pf.coeffs().len()];
    for (m, c) in pf.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (i, b) in poch_scalar(pf.kappa, m).iter().enumerate() {
            if !b.is_zero() {
                coeffs[i] = &coeffs[i] + &c.scale(*b);
            }
        }
    }
    TPoly::new(ctx, pf.nvars(), coeffs)
}

// Scalar univariate helpers for the identity suite, lowest degree first.

fn umul(a: &[FieldElement], b: &[FieldElement]) -> Vec<FieldElement> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let ctx = a[0].ctx();
    let mut out = vec![ctx.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += *x * *y;
        }
    }
    utrim(out)
}

fn uadd_scaled(acc: &mut Vec<FieldElement>, b: &[FieldElement], s: FieldElement) {
    if acc.len() < b.len() {
        acc.resize(b.len(), s.ctx().zero());
    }
    for (i, y) in b.iter().enumerate() {
        acc[i] += s * *y;
    }
}

fn utrim(mut v: Vec<FieldElement>) -> Vec<FieldElement> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn ushift(f: &[FieldElement], delta: FieldElement) -> Vec<FieldElement> {
    let t = TPoly::from_scalars(delta.ctx(), 0, f).shift_t(delta);
    t.coeffs().iter().map(|c| c.constant_term()).collect()
}

/// Univariate Pochhammer coefficients of a scalar polynomial.
fn to_poch_scalar(f: &[FieldElement], kappa: FieldElement) -> Vec<FieldElement> {
    let t = TPoly::from_scalars(kappa.ctx(), 0, f);
    to_pochhammer_basis(&t, kappa)
        .coeffs()
        .iter()
        .map(|c| c.constant_term())
        .collect()
}

/// Runs the exact Pochhammer identity suite for one step `κ`, with all
/// indices up to `max_m`.
pub fn verify_identities(kappa: FieldElement, max_m: usize) -> Report {
    let ctx = kappa.ctx();
    let p = ctx.p() as usize;
    let mut r = Report::new();
    let poch: Vec<Vec<FieldElement>> = (0..=2 * max_m + 1).map(|m| poch_scalar(kappa, m)).collect();
    let t = vec![ctx.zero(), ctx.one()];

    for m in 0..=max_m {
        // (t-κ;κ)_m t = (t;κ)_m (t-κm)
        let lhs = umul(&ushift(&poch[m], -kappa), &t);
        let rhs = umul(&poch[m], &[-(kappa * ctx.elem(m as i64)), ctx.one()]);
        r.record(format!("shift-down m={m}"), lhs == rhs, || format!("{lhs:?} vs {rhs:?}"));

        // (t+κ;κ)_m (t-(m-1)κ) = (t;κ)_m (t+κ)
        let lhs = umul(
            &ushift(&poch[m], kappa),
            &[-(kappa * ctx.elem(m as i64 - 1)), ctx.one()],
        );
        let rhs = umul(&poch[m], &[kappa, ctx.one()]);
        r.record(format!("shift-up m={m}"), lhs == rhs, || format!("{lhs:?} vs {rhs:?}"));

        // Stirling expansions in both directions.
        let s1 = stirling_table(1, m, ctx);
        let s2 = stirling_table(2, m, ctx);
        let expanded: Vec<FieldElement> = (0..=m)
            .map(|l| s1[m][l] * kappa.pow((m - l) as u64))
            .collect();
        r.record(format!("stirling-1 m={m}"), utrim(expanded) == poch[m], || {
            format!("(t;κ)_{m} mismatch")
        });
        let mut t_m = vec![ctx.zero(); m + 1];
        t_m[m] = ctx.one();
        let mut via_s2 = Vec::new();
        for l in 0..=m {
            uadd_scaled(&mut via_s2, &poch[l], s2[m][l] * kappa.pow((m - l) as u64));
        }
        r.record(format!("stirling-2 m={m}"), utrim(via_s2) == t_m, || {
            format!("t^{m} mismatch")
        });
        let conv = to_poch_scalar(&t_m, kappa);
        let predicted: Vec<FieldElement> = utrim(
            (0..=m)
                .map(|l| s2[m][l] * kappa.pow((m - l) as u64))
                .collect(),
        );
        r.record(format!("basis-conversion m={m}"), conv == predicted, || {
            format!("{conv:?} vs {predicted:?}")
        });
    }

    for i in 0..=max_m {
        for j in 0..=max_m {
            let lhs = umul(&poch[i], &poch[j]);
            let mut rhs = Vec::new();
            for (e, c) in product_rule(i, j, kappa) {
                uadd_scaled(&mut rhs, &poch[e], c);
            }
            r.record(format!("product i={i} j={j}"), lhs == utrim(rhs), || {
                "expansion mismatch".to_string()
            });
        }
    }

    // Binomial convolution (t+z;κ)_m = Σ C(m,i) (t;κ)_i (z;κ)_{m-i}, with z a
    // second formal variable.
    let z = MPoly::var(ctx, 1, 0);
    let poch_z: Vec<MPoly> = (0..=max_m)
        .map(|m| poch_poly_vars(kappa, m, 1).eval_t(&z))
        .collect();
    for m in 0..=max_m {
        let mut lhs = TPoly::one(ctx, 1);
        for i in 0..m {
            let w = MPoly::constant(1, kappa * ctx.elem(i as i64)) - z.clone();
            lhs = lhs.mul(&TPoly::linear(&w));
        }
        let mut rhs = TPoly::zero(ctx, 1);
        for i in 0..=m {
            let b = ctx.elem(binomial_mod(m as u64, i as u64, p as u64) as i64);
            rhs = rhs.add(&poch_poly_vars(kappa, i, 1).scale(&poch_z[m - i].scale(b)));
        }
        r.record(format!("binomial m={m}"), lhs == rhs, || "expansion mismatch".into());
        if m == p {
            let additive = poch_poly_vars(kappa, p, 1).add(&TPoly::new(ctx, 1, vec![poch_z[p].clone()]));
            r.record("additivity at p", lhs == additive, || "(t+z;κ)_p mismatch".into());
        }
    }

    // (t;κ)_p = t^p - κ^{p-1} t, (t;κ)_{pa} = (t^p - κ^{p-1} t)^a, and
    // quasi-constancy under t -> t - κ.
    let mut base = vec![ctx.zero(); p + 1];
    base[p] = ctx.one();
    base[1] = -kappa.pow(p as u64 - 1);
    if p >= poch.len() {
        return r;
    }
    r.record("(t;κ)_p", poch[p] == base, || format!("{:?}", poch[p]));
    let mut power = vec![ctx.one()];
    let mut a = 0;
    while a * p <= 2 * max_m + 1 {
        let m = a * p;
        r.record(format!("quasi-constant a={a}"), poch[m] == power, || {
            format!("(t;κ)_{m} is not a power of t^p - κ^(p-1) t")
        });
        r.record(format!("quasi-constant shift a={a}"), ushift(&poch[m], -kappa) == poch[m], || {
            format!("(t;κ)_{m} changes under t -> t - κ")
        });
        power = umul(&power, &base);
        a += 1;
    }
    r
}
