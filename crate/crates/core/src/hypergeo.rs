//! p-hypergeometric solutions of the qKZ equations and of the differential
//! KZ equations, their leading terms and minors, special restrictions,
//! orthogonality, and quasi-hypergeometric sections.
//!
//! The master vector `Q(t, z)` is a product of `n` shifted Pochhammer
//! polynomials, one per variable. Each factor is expanded in the basis
//! `(t;κ)_i` with coefficients in a single variable, and the factors are
//! multiplied with the Pochhammer product rule, computing only the indices
//! that are needed.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ffield::{binomial_mod, FieldCtx, FieldElement};
use crate::linalg::Mat;
use crate::mpoly::{Accum, MPoly};
use crate::pochhammer::{PochhammerForm, TPoly};
use crate::qkz::{k_operator_at, shapovalov, shifted, QkzParams, VectorPoly};
use crate::report::Report;

/// The unique `0 < k < p` with `κ k ≡ -1 (mod p)`.
pub fn k_from_kappa(ctx: FieldCtx, kappa: FieldElement) -> Result<u64> {
    if kappa.ctx().p() != ctx.p() {
        return Err(Error::Domain("kappa lives over another characteristic".into()));
    }
    if kappa.is_zero() {
        return Err(Error::Domain("kappa must be nonzero".into()));
    }
    let v = kappa
        .as_prime()
        .ok_or_else(|| Error::Domain(format!("kappa = {kappa} is not in the prime field")))?;
    let p = ctx.p();
    Ok((1..p).find(|k| (k * v) % p == p - 1).expect("nonzero residues are invertible"))
}

/// `d(κ) = floor(n k / p)`, the number of p-hypergeometric solutions.
pub fn d_of_kappa(ctx: FieldCtx, n: usize, kappa: FieldElement) -> Result<usize> {
    let k = k_from_kappa(ctx, kappa)?;
    Ok(n * k as usize / ctx.p() as usize)
}

fn require_k(params: &QkzParams) -> Result<(usize, usize)> {
    match (params.k(), params.d()) {
        (Some(k), Some(d)) => Ok((k as usize, d)),
        _ => Err(Error::Domain("kappa must lie in the prime field".into())),
    }
}

/// `(t - z_var - shift; κ)_len`.
#[derive(Clone, Copy, Debug)]
struct PochFactor {
    var: usize,
    shift: FieldElement,
    len: usize,
}

/// Factors of `Q_a = ∏_{j<a}(t-z_j-κ;κ)_k (t-z_a-κ;κ)_{k-1} ∏_{j>a}(t-z_j;κ)_k`.
fn q_factors(params: &QkzParams, a: usize) -> Result<Vec<PochFactor>> {
    let (k, _) = require_k(params)?;
    let n = params.n();
    if a >= n {
        return Err(Error::Domain(format!("coordinate {} out of range 1..={n}", a + 1)));
    }
    let kappa = params.kappa();
    let zero = params.ctx().zero();
    Ok((0..n)
        .map(|j| match j.cmp(&a) {
            std::cmp::Ordering::Less => PochFactor {
                var: j,
                shift: kappa,
                len: k,
            },
            std::cmp::Ordering::Equal => PochFactor {
                var: j,
                shift: kappa,
                len: k - 1,
            },
            std::cmp::Ordering::Greater => PochFactor {
                var: j,
                shift: zero,
                len: k,
            },
        })
        .collect())
}

/// Pochhammer coefficients of one factor, from
/// `(t + y;κ)_m = Σ_i C(m,i) (t;κ)_i (y;κ)_{m-i}` with `y = -z_var - shift`
/// (or a constant when `z_var` is assigned).
fn factor_coeffs(f: &PochFactor, kappa: FieldElement, nvars: usize, value: Option<FieldElement>) -> Vec<MPoly> {
    let ctx = kappa.ctx().join(value.map_or(kappa.ctx(), |v| v.ctx()));
    let y = match value {
        None => &(-&MPoly::var(ctx, nvars, f.var)) - &MPoly::constant(nvars, f.shift),
        Some(c) => MPoly::constant(nvars, -c - f.shift),
    };
    let mut pochs = vec![MPoly::one(ctx, nvars)];
    for m in 0..f.len {
        let step = &y - &MPoly::constant(nvars, kappa * ctx.elem(m as i64));
        let next = pochs.last().unwrap() * &step;
        pochs.push(next);
    }
    let p = ctx.p();
    (0..=f.len)
        .map(|i| pochs[f.len - i].scale(ctx.elem(binomial_mod(f.len as u64, i as u64, p) as i64)))
        .collect()
}

/// Scalars of the product rule `(t;κ)_i (t;κ)_j = Σ_l C(i,l)C(j,l) l! κ^l (t;κ)_{i+j-l}`.
struct ProductRule {
    kappa: FieldElement,
    fact: Vec<FieldElement>,
    kpow: Vec<FieldElement>,
}

impl ProductRule {
    fn new(kappa: FieldElement, max: usize) -> ProductRule {
        let ctx = kappa.ctx();
        let mut fact = vec![ctx.one()];
        let mut kpow = vec![ctx.one()];
        for l in 1..=max {
            fact.push(*fact.last().unwrap() * ctx.elem(l as i64));
            kpow.push(*kpow.last().unwrap() * kappa);
        }
        ProductRule { kappa, fact, kpow }
    }

    fn coeff(&self, i: usize, j: usize, l: usize) -> FieldElement {
        let ctx = self.kappa.ctx();
        let p = ctx.p();
        if self.fact[l].is_zero() {
            return ctx.zero();
        }
        ctx.elem(binomial_mod(i as u64, l as u64, p) as i64)
            * ctx.elem(binomial_mod(j as u64, l as u64, p) as i64)
            * self.fact[l]
            * self.kpow[l]
    }
}

fn degree_bounds_all(polys: &[MPoly], nvars: usize) -> Vec<u32> {
    let mut b = vec![0u32; nvars];
    for f in polys {
        for (x, y) in b.iter_mut().zip(f.degree_bounds()) {
            *x = (*x).max(y);
        }
    }
    b
}

/// Coefficients at the `targets` of the product of two Pochhammer-basis
/// forms: `Σ_i A_i W_{N,i}` with `W_{N,i} = Σ_j rule(i, j, i+j-N) B_j`.
fn combine(a: &[MPoly], b: &[MPoly], targets: &[usize], rule: &ProductRule) -> Vec<MPoly> {
    let nvars = a.first().or(b.first()).map_or(0, |f| f.nvars());
    let ctx = a
        .iter()
        .chain(b)
        .map(|f| f.ctx())
        .fold(rule.kappa.ctx(), |x, y| x.join(y));
    let bounds: Vec<u32> = degree_bounds_all(a, nvars)
        .iter()
        .zip(degree_bounds_all(b, nvars))
        .map(|(x, y)| x + y)
        .collect();
    targets
        .par_iter()
        .map(|&n| {
            let mut acc = Accum::new(ctx, nvars, &bounds);
            for (i, ai) in a.iter().enumerate().take(n + 1) {
                if ai.is_zero() {
                    continue;
                }
                let mut w = MPoly::zero(ctx, nvars);
                for (j, bj) in b.iter().enumerate().take(n + 1).skip(n - i) {
                    let c = rule.coeff(i, j, i + j - n);
                    if !c.is_zero() && !bj.is_zero() {
                        w = &w + &bj.scale(c);
                    }
                }
                for &(m1, c1) in ai.raw_terms() {
                    for &(m2, c2) in w.raw_terms() {
                        acc.add(m1.mul(m2), ctx.mul_raw(c1, c2));
                    }
                }
            }
            acc.finish()
        })
        .collect()
}

/// Coefficients at `targets` of a product of Pochhammer-basis forms.
fn poch_product(kappa: FieldElement, forms: &[Vec<MPoly>], targets: &[usize]) -> Vec<MPoly> {
    let Some(limit) = targets.iter().max().map(|m| m + 1) else {
        return Vec::new();
    };
    let total: usize = forms.iter().map(|f| f.len().saturating_sub(1)).sum();
    let rule = ProductRule::new(kappa, total + 1);
    let (last, init) = forms.split_last().expect("at least one factor");
    let mut acc: Vec<MPoly> = match init.split_first() {
        None => {
            let zero = MPoly::zero(kappa.ctx(), last.first().map_or(0, |f| f.nvars()));
            return targets
                .iter()
                .map(|&t| last.get(t).cloned().unwrap_or_else(|| zero.clone()))
                .collect();
        }
        Some((first, rest)) => {
            let mut acc: Vec<MPoly> = first.iter().take(limit).cloned().collect();
            for f in rest {
                let len = (acc.len() + f.len() - 1).min(limit);
                let idx: Vec<usize> = (0..len).collect();
                acc = combine(&acc, f, &idx, &rule);
            }
            acc
        }
    };
    if acc.is_empty() {
        acc.push(MPoly::zero(kappa.ctx(), last[0].nvars()));
    }
    combine(&acc, last, targets, &rule)
}

fn assignment_of(subst: &[(usize, FieldElement)], var: usize) -> Option<FieldElement> {
    subst.iter().find(|(i, _)| *i == var).map(|(_, v)| *v)
}

/// Pochhammer-basis coefficients of `Q_a(t, z)` (0-based `a`) at the given
/// indices, with some variables optionally assigned constants.
pub fn q_pochhammer_coeffs(
    params: &QkzParams,
    a: usize,
    subst: &[(usize, FieldElement)],
    targets: &[usize],
) -> Result<Vec<MPoly>> {
    let n = params.n();
    let kappa = params.kappa();
    let forms: Vec<Vec<MPoly>> = q_factors(params, a)?
        .iter()
        .map(|f| factor_coeffs(f, kappa, n, assignment_of(subst, f.var)))
        .collect();
    Ok(poch_product(kappa, &forms, targets))
}

/// The full Pochhammer expansion of `Q_a(t, z)`.
pub fn q_pochhammer_form(params: &QkzParams, a: usize) -> Result<PochhammerForm> {
    let (k, _) = require_k(params)?;
    let targets: Vec<usize> = (0..params.n() * k).collect();
    let coeffs = q_pochhammer_coeffs(params, a, &[], &targets)?;
    Ok(PochhammerForm::new(params.kappa(), params.n(), coeffs))
}

/// `Q_1, .., Q_n` in powers of `t`, multiplied out factor by factor.
pub fn q_vector(params: &QkzParams) -> Result<Vec<TPoly>> {
    let n = params.n();
    let ctx = params.ctx();
    let kappa = params.kappa();
    (0..n)
        .map(|a| {
            let mut acc = TPoly::one(ctx, n);
            for f in q_factors(params, a)? {
                for i in 0..f.len {
                    let w = &MPoly::var(ctx, n, f.var) + &MPoly::constant(n, f.shift + kappa * ctx.elem(i as i64));
                    acc = acc.mul(&TPoly::linear(&w));
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Value of a Pochhammer-basis form at `t` and `z`.
pub fn eval_pochhammer_form(form: &PochhammerForm, t: FieldElement, z: &[FieldElement]) -> Result<FieldElement> {
    let mut acc = t.ctx().zero();
    let mut poch = t.ctx().one();
    for (i, c) in form.coeffs().iter().enumerate() {
        acc += c.eval(z)? * poch;
        poch *= t - form.kappa * form.kappa.ctx().elem(i as i64);
    }
    Ok(acc)
}

/// Compares `Q_a` with the weight-function definition `Φ η_a` after
/// clearing denominators:
/// `Q_a (t - z_a) ∏_{j<a}(t - z_j) = Φ ∏_{j<a}(t - z_j + 1)`, `Φ = ∏_j (t - z_j;κ)_k`.
pub fn verify_weight_functions(params: &QkzParams, samples: &[(FieldElement, Vec<FieldElement>)]) -> Result<Report> {
    let (k, _) = require_k(params)?;
    let n = params.n();
    let kappa = params.kappa();
    let forms: Vec<PochhammerForm> = (0..n).map(|a| q_pochhammer_form(params, a)).collect::<Result<_>>()?;
    let mut r = Report::new();
    for (si, (t, z)) in samples.iter().enumerate() {
        let one = t.ctx().one();
        let mut phi = one;
        for zj in z {
            for i in 0..k {
                phi *= *t - *zj - kappa * kappa.ctx().elem(i as i64);
            }
        }
        for (a, form) in forms.iter().enumerate() {
            let q = eval_pochhammer_form(form, *t, z)?;
            let mut lhs = q * (*t - z[a]);
            let mut rhs = phi;
            for zj in &z[..a] {
                lhs *= *t - *zj;
                rhs *= *t - *zj + one;
            }
            r.record(format!("sample {si} a={}", a + 1), lhs == rhs, || format!("{lhs} != {rhs}"));
        }
    }
    Ok(r)
}

/// The solutions `Q^{ℓp-1}(z;κ)` (or their KZ analogues) for `ℓ = 1..d(κ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSet {
    pub params: QkzParams,
    /// Entry `ℓ - 1` holds the solution with index `ℓp - 1`.
    pub solutions: Vec<VectorPoly>,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn degrees(&self) -> Vec<Option<u32>> {
        self.solutions.iter().map(|s| s.total_degree()).collect()
    }

    /// Values of all solutions at `z`, as the columns of an `n × d` matrix.
    pub fn eval_matrix(&self, z: &[FieldElement]) -> Result<Mat> {
        let cols = self.solutions.iter().map(|s| s.eval(z)).collect::<Result<Vec<_>>>()?;
        let ctx = z.first().map_or(self.params.ctx(), |v| v.ctx());
        if cols.is_empty() {
            return Ok(Mat::zeros(ctx, self.params.n(), 0));
        }
        Ok(Mat::from_cols(ctx, &cols))
    }

    pub fn to_json(&self) -> Value {
        let p = &self.params;
        json!({
            "p": p.p(),
            "n": p.n(),
            "kappa": kappa_json(p.kappa()),
            "k": p.k(),
            "d": p.d(),
            "solutions": self
                .solutions
                .iter()
                .map(|s| s.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// `κ` as an integer in `[0, p)` or as `[a0, a1]` for `a0 + a1 g`.
pub fn kappa_json(kappa: FieldElement) -> Value {
    match kappa.as_prime() {
        Some(v) => json!(v),
        None => {
            let (a0, a1) = kappa.coords();
            json!([a0, a1])
        }
    }
}

/// Extracts `Q^{ℓp-1}(z;κ)`, `ℓ = 1..d(κ)`, from the Pochhammer expansion
/// of `Q(t, z)`. Also confirms that the coefficients at `ℓp - 1` vanish for
/// `d(κ) < ℓ ≤ n`.
pub fn extract_solutions(params: &QkzParams) -> Result<SolutionSet> {
    let (_, d) = require_k(params)?;
    let n = params.n();
    let p = params.p() as usize;
    let targets: Vec<usize> = (1..=n).map(|l| l * p - 1).collect();
    let per_coord: Vec<Vec<MPoly>> = (0..n)
        .into_par_iter()
        .map(|a| q_pochhammer_coeffs(params, a, &[], &targets))
        .collect::<Result<_>>()?;
    for l in d + 1..=n {
        if per_coord.iter().any(|c| !c[l - 1].is_zero()) {
            return Err(Error::Structural(format!(
                "coefficient at index {} is nonzero although d = {d}",
                l * p - 1
            )));
        }
    }
    let solutions = (0..d)
        .map(|l| VectorPoly::new(per_coord.iter().map(|c| c[l].clone()).collect()))
        .collect();
    Ok(SolutionSet {
        params: *params,
        solutions,
    })
}

/// Solutions of the differential KZ equations: the coefficients of
/// `t^{ℓp-1}` in `bar Q_a = ∏_{j≠a}(t - z_j)^k (t - z_a)^{k-1}`.
pub fn barq_solutions(params: &QkzParams) -> Result<SolutionSet> {
    let (k, d) = require_k(params)?;
    let n = params.n();
    let p = params.p() as usize;
    let ctx = params.ctx();
    let solutions = (1..=d)
        .map(|l| {
            let target = n * k - l * p;
            let coords = (0..n)
                .map(|a| {
                    let caps: Vec<usize> = (0..n).map(|j| if j == a { k - 1 } else { k }).collect();
                    let mut terms = Vec::new();
                    let mut exps = vec![0u32; n];
                    enumerate_exponents(&caps, target, 0, &mut exps, &mut |e| {
                        let mut c = ctx.one();
                        for (j, &ej) in e.iter().enumerate() {
                            let b = binomial_mod(caps[j] as u64, ej as u64, p as u64) as i64;
                            let sign = if ej % 2 == 1 { -1 } else { 1 };
                            c *= ctx.elem(sign * b);
                        }
                        terms.push((e.to_vec(), c));
                    });
                    MPoly::from_terms(ctx, n, terms)
                })
                .collect();
            VectorPoly::new(coords)
        })
        .collect();
    Ok(SolutionSet {
        params: *params,
        solutions,
    })
}

fn enumerate_exponents(caps: &[usize], remaining: usize, i: usize, exps: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if i == caps.len() {
        if remaining == 0 {
            f(exps);
        }
        return;
    }
    let rest: usize = caps[i + 1..].iter().sum();
    let lo = remaining.saturating_sub(rest);
    for e in lo..=caps[i].min(remaining) {
        exps[i] = e as u32;
        enumerate_exponents(caps, remaining - e, i + 1, exps, f);
    }
    exps[i] = 0;
}

/// Predicted leading term of the `ℓ`-th solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeadingTermData {
    pub ell: usize,
    /// `r(ℓ)` with `r k ≤ nk - ℓp < (r+1) k`.
    pub r: usize,
    /// `(n - r) k - ℓp`.
    pub a: usize,
    pub u: Vec<FieldElement>,
    /// Exponents of `(z_1 .. z_r)^k z_{r+1}^a`.
    pub monomial: Vec<u32>,
}

pub fn leading_term_data(params: &QkzParams, ell: usize) -> Result<LeadingTermData> {
    let (k, d) = require_k(params)?;
    if ell == 0 || ell > d {
        return Err(Error::Domain(format!("solution index {ell} outside 1..={d}")));
    }
    let n = params.n();
    let p = params.p() as usize;
    let ctx = params.ctx();
    let deg = n * k - ell * p;
    let r = deg / k;
    let a = (n - r) * k - ell * p;
    let sign = if deg % 2 == 0 { 1 } else { -1 };
    let scale = ctx.elem(sign) * ctx.elem(k as i64).inv()? * ctx.elem(binomial_mod(k as u64, a as u64, p as u64) as i64);
    let u = (0..n)
        .map(|i| match i.cmp(&r) {
            std::cmp::Ordering::Less => ctx.zero(),
            std::cmp::Ordering::Equal => scale * ctx.elem((k - a) as i64),
            std::cmp::Ordering::Greater => scale * ctx.elem(k as i64),
        })
        .collect();
    let monomial = (0..n)
        .map(|i| match i.cmp(&r) {
            std::cmp::Ordering::Less => k as u32,
            std::cmp::Ordering::Equal => a as u32,
            std::cmp::Ordering::Greater => 0,
        })
        .collect();
    Ok(LeadingTermData {
        ell,
        r,
        a,
        u,
        monomial,
    })
}

/// Negative controls for the leading-term suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LeadingControl {
    #[default]
    Exact,
    /// Rotate the predicted vector by one coordinate.
    PermuteU,
}

/// Checks the predicted leading term against the computed solutions of
/// both the qKZ and the KZ equations.
pub fn verify_leading_terms(set: &SolutionSet, kz: &SolutionSet, control: LeadingControl) -> Report {
    let params = &set.params;
    let mut r = Report::new();
    for (idx, (q, qbar)) in set.solutions.iter().zip(&kz.solutions).enumerate() {
        let ell = idx + 1;
        let mut pred = match leading_term_data(params, ell) {
            Ok(p) => p,
            Err(e) => {
                r.fail(format!("l={ell} prediction"), e.to_string());
                continue;
            }
        };
        if control == LeadingControl::PermuteU {
            pred.u.rotate_right(1);
        }
        let k = params.k().unwrap_or(0) as usize;
        let sum = pred.u.iter().fold(params.ctx().zero(), |s, v| s + *v);
        r.record(format!("l={ell} u sums to zero"), sum.is_zero(), || format!("sum {sum}"));
        r.record(format!("l={ell} 0 <= a < k"), pred.a < k, || format!("a={} k={k}", pred.a));
        for (name, f) in [("qKZ", q), ("KZ", qbar)] {
            match f.leading_term() {
                Ok((exps, coeffs)) => {
                    let ok = exps == pred.monomial && coeffs == pred.u;
                    r.record(format!("l={ell} {name} leading term"), ok, || {
                        format!(
                            "got {:?} * ({}), predicted {:?} * ({})",
                            exps,
                            join_elems(&coeffs),
                            pred.monomial,
                            join_elems(&pred.u)
                        )
                    });
                }
                Err(e) => r.fail(format!("l={ell} {name} leading term"), e.to_string()),
            }
        }
    }
    r
}

fn join_elems(v: &[FieldElement]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn poly_det(m: &[Vec<MPoly>]) -> MPoly {
    let size = m.len();
    if size == 1 {
        return m[0][0].clone();
    }
    let mut acc = MPoly::zero(m[0][0].ctx(), m[0][0].nvars());
    for (i, row) in m.iter().enumerate() {
        if row[0].is_zero() {
            continue;
        }
        let sub: Vec<Vec<MPoly>> = m
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != i)
            .map(|(_, rr)| rr[1..].to_vec())
            .collect();
        let term = &row[0] * &poly_det(&sub);
        acc = if i % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// The minor of the `n × d` solution matrix at the rows `rows` (0-based).
pub fn minor(set: &SolutionSet, rows: &[usize]) -> Result<MPoly> {
    let d = set.len();
    if rows.len() != d || d == 0 {
        return Err(Error::Domain(format!("need {d} rows for a minor, got {}", rows.len())));
    }
    if rows.iter().any(|&r| r >= set.params.n()) {
        return Err(Error::Domain("row index out of range".into()));
    }
    let m: Vec<Vec<MPoly>> = rows
        .iter()
        .map(|&r| set.solutions.iter().map(|s| s.coords[r].clone()).collect())
        .collect();
    Ok(poly_det(&m))
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    go(0, n, size, &mut cur, &mut out);
    out
}

/// Looks for a nonzero `d × d` minor by evaluating at the given points.
/// Also checks the pivot rows `{r(ℓ) + 1}` read off the leading terms, and
/// notes every row set found nonzero.
pub fn verify_independence(set: &SolutionSet, points: &[Vec<FieldElement>]) -> Report {
    let mut r = Report::new();
    let d = set.len();
    if d == 0 {
        r.note("d = 0: nothing to check");
        return r;
    }
    let mats: Vec<Mat> = match points.iter().map(|z| set.eval_matrix(z)).collect::<Result<_>>() {
        Ok(m) => m,
        Err(e) => {
            r.fail("evaluation", e.to_string());
            return r;
        }
    };
    let nonzero_at = |rows: &[usize]| {
        mats.iter().any(|m| {
            let sub = Mat::from_rows(m.ctx(), rows.iter().map(|&i| m.row(i)).collect());
            !sub.det().expect("square").is_zero()
        })
    };
    let nonzero: Vec<Vec<usize>> = subsets(set.params.n(), d).into_iter().filter(|s| nonzero_at(s)).collect();
    r.record("some minor is nonzero", !nonzero.is_empty(), || {
        format!("all minors vanish at {} points", points.len())
    });
    let pivots: Result<Vec<usize>> = (1..=d).rev().map(|l| leading_term_data(&set.params, l).map(|t| t.r)).collect();
    match pivots {
        Ok(rows) => r.record("pivot-row minor is nonzero", nonzero_at(&rows), || {
            format!("rows {:?} give a vanishing minor", rows.iter().map(|i| i + 1).collect::<Vec<_>>())
        }),
        Err(e) => r.fail("pivot-row minor is nonzero", e.to_string()),
    }
    let shown: Vec<String> = nonzero
        .iter()
        .map(|s| format!("{:?}", s.iter().map(|i| i + 1).collect::<Vec<_>>()))
        .collect();
    r.note(format!("nonzero minors at rows {}", shown.join(" ")));
    r
}

/// Values of `S_I`: `z_{i_b} = ((b-1)k - 1)κ` for the `b`-th smallest
/// element of `I` (0-based indices in and out).
pub fn special_values(params: &QkzParams, set_i: &[usize]) -> Result<Vec<(usize, FieldElement)>> {
    let (k, _) = require_k(params)?;
    if set_i.is_empty() || set_i.windows(2).any(|w| w[0] >= w[1]) || set_i.iter().any(|&i| i >= params.n()) {
        return Err(Error::Domain(format!("index set {set_i:?} must be nonempty, ascending, in range")));
    }
    let ctx = params.ctx();
    Ok(set_i
        .iter()
        .enumerate()
        .map(|(b, &i)| (i, ctx.elem((b * k) as i64 - 1) * params.kappa()))
        .collect())
}

/// Substitutes the `S_I` values into every coordinate.
pub fn restrict_special(params: &QkzParams, f: &VectorPoly, set_i: &[usize]) -> Result<VectorPoly> {
    let vals = special_values(params, set_i)?;
    Ok(VectorPoly::new(
        f.coords.iter().map(|c| c.substitute(&vals)).collect::<Result<_>>()?,
    ))
}

/// For every nonempty `I`: the restriction of `Q(t,z)` to `S_I` has
/// vanishing Pochhammer coefficients below `|I|k - 1` (so it is divisible
/// by `(t;κ)_{|I|k-1}`), and `Q^{ℓp-1}` restricts to zero when `ℓp < |I|k`.
pub fn verify_restrictions(set: &SolutionSet) -> Report {
    let params = &set.params;
    let n = params.n();
    let k = params.k().unwrap_or(0) as usize;
    let p = params.p() as usize;
    let results: Vec<Report> = (1..=n)
        .flat_map(|size| subsets(n, size))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|set_i| {
            let mut r = Report::new();
            let label = format!("{:?}", set_i.iter().map(|i| i + 1).collect::<Vec<_>>());
            let vals = match special_values(params, set_i) {
                Ok(v) => v,
                Err(e) => {
                    r.fail(format!("I={label}"), e.to_string());
                    return r;
                }
            };
            let below: Vec<usize> = (0..(set_i.len() * k).saturating_sub(1)).collect();
            for a in 0..n {
                let name = format!("I={label} a={} divisible by (t;kappa)_{}", a + 1, below.len());
                match q_pochhammer_coeffs(params, a, &vals, &below) {
                    Ok(c) => {
                        let bad = c.iter().position(|x| !x.is_zero());
                        r.record(name, bad.is_none(), || format!("coefficient at index {} is nonzero", bad.unwrap()));
                    }
                    Err(e) => r.fail(name, e.to_string()),
                }
            }
            for (idx, s) in set.solutions.iter().enumerate() {
                let ell = idx + 1;
                if ell * p < set_i.len() * k {
                    let name = format!("I={label} l={ell} restriction vanishes");
                    match restrict_special(params, s, set_i) {
                        Ok(v) => r.record(name, v.is_zero(), || format!("restriction {v}")),
                        Err(e) => r.fail(name, e.to_string()),
                    }
                }
            }
            r
        })
        .collect();
    let mut out = Report::new();
    for r in results {
        out.absorb("", r);
    }
    out
}

/// `G_{ℓ,m}(z) = Σ_a Q^{mp-1}_a(-z;-κ) Q^{ℓp-1}_a(z;κ)` as polynomials.
pub fn orthogonality_pairing(set: &SolutionSet, dual: &SolutionSet) -> Vec<Vec<MPoly>> {
    let n = set.params.n();
    let ctx = set.params.ctx();
    let duals: Vec<VectorPoly> = dual.solutions.iter().map(|g| g.negate_vars()).collect();
    set.solutions
        .iter()
        .map(|f| {
            duals
                .iter()
                .map(|g| {
                    g.coords
                        .iter()
                        .zip(&f.coords)
                        .fold(MPoly::zero(ctx, n), |acc, (x, y)| &acc + &(x * y))
                })
                .collect()
        })
        .collect()
}

/// Values of `f` on the grid `nodes^n`, axis 0 varying fastest.
pub(crate) fn grid_values(f: &MPoly, nodes: &[FieldElement]) -> Vec<[u32; 2]> {
    let n = f.nvars();
    let ctx = nodes.iter().fold(f.ctx(), |c, v| c.join(v.ctx()));
    let s = nodes.len();
    let mut shape: Vec<usize> = f.degree_bounds().iter().map(|b| *b as usize + 1).collect();
    let mut data = vec![[0u32, 0u32]; shape.iter().product()];
    for &(m, c) in f.raw_terms() {
        let mut idx = 0;
        let mut stride = 1;
        for (i, len) in shape.iter().enumerate() {
            idx += m.exp(i) as usize * stride;
            stride *= len;
        }
        data[idx] = c;
    }
    for axis in 0..n {
        let len = shape[axis];
        let inner: usize = shape[..axis].iter().product();
        let outer: usize = shape[axis + 1..].iter().product();
        let powers: Vec<Vec<[u32; 2]>> = nodes
            .iter()
            .map(|v| {
                let mut row = vec![[1, 0]];
                for _ in 1..len {
                    row.push(ctx.mul_raw(*row.last().unwrap(), v.raw()));
                }
                row
            })
            .collect();
        let mut out = vec![[0u32, 0u32]; inner * s * outer];
        for o in 0..outer {
            for e in 0..len {
                for x in 0..inner {
                    let c = data[x + inner * (e + len * o)];
                    if c == [0, 0] {
                        continue;
                    }
                    for (si, row) in powers.iter().enumerate() {
                        let slot = &mut out[x + inner * (si + s * o)];
                        *slot = ctx.add_raw(*slot, ctx.mul_raw(c, row[e]));
                    }
                }
            }
        }
        data = out;
        shape[axis] = s;
    }
    data
}

/// Decides `G_{ℓ,m} ≡ 0` by evaluation on `S^n`, `S = F_p ∪ {g}`. Each
/// `G_{ℓ,m}` has degree at most `p` in every variable, so vanishing on the
/// `p + 1` values of `S` per axis forces the zero polynomial.
pub fn verify_orthogonality(set: &SolutionSet, dual: &SolutionSet) -> Report {
    let mut r = Report::new();
    let params = &set.params;
    let n = params.n();
    let ext = params.point_ctx();
    let mut nodes = params.ctx().prime_field().elements();
    nodes.push(ext.gen().expect("extension has a generator"));
    let neg_nodes: Vec<FieldElement> = nodes.iter().map(|v| -*v).collect();
    let max_deg = |s: &SolutionSet| -> Vec<u32> {
        (0..n)
            .map(|i| {
                s.solutions
                    .iter()
                    .flat_map(|v| v.coords.iter().map(move |c| c.degree_in(i)))
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    };
    let (df, dg) = (max_deg(set), max_deg(dual));
    if let Some(i) = (0..n).find(|&i| (df[i] + dg[i]) as usize >= nodes.len()) {
        r.fail(
            "per-variable degree bound",
            format!("degree {} in z{} exceeds what the grid decides", df[i] + dg[i], i + 1),
        );
        return r;
    }
    let size = nodes.len().pow(n as u32);
    let mut sums = vec![vec![vec![[0u32, 0u32]; size]; dual.len()]; set.len()];
    for a in 0..n {
        let fv: Vec<_> = set.solutions.par_iter().map(|f| grid_values(&f.coords[a], &nodes)).collect();
        let gv: Vec<_> = dual
            .solutions
            .par_iter()
            .map(|g| grid_values(&g.coords[a], &neg_nodes))
            .collect();
        for (l, f) in fv.iter().enumerate() {
            for (m, g) in gv.iter().enumerate() {
                for ((acc, x), y) in sums[l][m].iter_mut().zip(f).zip(g) {
                    *acc = ext.add_raw(*acc, ext.mul_raw(*x, *y));
                }
            }
        }
    }
    for (l, row) in sums.iter().enumerate() {
        for (m, vals) in row.iter().enumerate() {
            let bad = vals.iter().position(|v| *v != [0, 0]);
            r.record(format!("G[{},{}] = 0", l + 1, m + 1), bad.is_none(), || {
                let mut idx = bad.unwrap();
                let point: Vec<String> = (0..n)
                    .map(|_| {
                        let v = nodes[idx % nodes.len()];
                        idx /= nodes.len();
                        v.to_string()
                    })
                    .collect();
                format!("nonzero at z = ({})", point.join(", "))
            });
        }
    }
    r
}

/// Quasi-hypergeometric sections at `z`: vectors `T^ℓ` in `V` with
/// `S(Q^{mp-1}(-z;-κ), T^ℓ) = δ_{ℓm}` and `S(Q^{ℓ'p-1}(z;κ), T^ℓ) = 0`.
pub fn quasi_sections_at(set: &SolutionSet, dual: &SolutionSet, z: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>> {
    let n = set.params.n();
    let ctx = z.first().map_or(set.params.ctx(), |v| v.ctx());
    let minus_z: Vec<FieldElement> = z.iter().map(|v| -*v).collect();
    let mut rows = vec![vec![ctx.one(); n]];
    for g in &dual.solutions {
        rows.push(g.eval(&minus_z)?);
    }
    for f in &set.solutions {
        rows.push(f.eval(z)?);
    }
    if rows.len() != n {
        return Err(Error::Rank {
            rank: rows.len(),
            expected: n,
        });
    }
    let m = Mat::from_rows(ctx, rows);
    (0..dual.len())
        .map(|l| {
            let mut rhs = vec![ctx.zero(); n];
            rhs[1 + l] = ctx.one();
            m.solve(&rhs)
        })
        .collect()
}

/// Checks the defining pairings of the quasi-sections and their flatness
/// modulo the span of the step-`κ` solutions.
pub fn verify_quasi_sections(set: &SolutionSet, dual: &SolutionSet, points: &[Vec<FieldElement>]) -> Report {
    let params = &set.params;
    let n = params.n();
    let kappa = params.kappa();
    let mut r = Report::new();
    for (pi, z) in points.iter().enumerate() {
        let base = match quasi_sections_at(set, dual, z) {
            Ok(t) => t,
            Err(e) => {
                r.note(format!("point {pi} skipped: {e}"));
                continue;
            }
        };
        let minus_z: Vec<FieldElement> = z.iter().map(|v| -*v).collect();
        for (l, t) in base.iter().enumerate() {
            for (m, g) in dual.solutions.iter().enumerate() {
                let val = g.eval(&minus_z).and_then(|gz| shapovalov(&gz, t));
                let want = if l == m { z[0].ctx().one() } else { z[0].ctx().zero() };
                r.record(format!("point {pi} S(T{}, Q{}) = delta", l + 1, m + 1), val.as_ref().ok() == Some(&want), || {
                    format!("{val:?}")
                });
            }
        }
        for a in 0..n {
            let zs = shifted(z, a, -kappa);
            let (k, next) = match (k_operator_at(params, a, z), quasi_sections_at(set, dual, &zs)) {
                (Ok(k), Ok(t)) => (k, t),
                (Err(e), _) | (_, Err(e)) => {
                    r.note(format!("point {pi} a={} skipped: {e}", a + 1));
                    continue;
                }
            };
            let span = match set.eval_matrix(&zs) {
                Ok(m) => m,
                Err(e) => {
                    r.fail(format!("point {pi} a={}", a + 1), e.to_string());
                    continue;
                }
            };
            let span_rank = span.rank();
            for (l, (t, tn)) in base.iter().zip(&next).enumerate() {
                let moved = k.apply(t);
                let diff: Vec<FieldElement> = moved.iter().zip(tn).map(|(x, y)| *x - *y).collect();
                let ok = span.hcat(&Mat::from_cols(diff[0].ctx(), &[diff.clone()])).rank() == span_rank;
                r.record(format!("point {pi} a={} T{} flat mod span", a + 1, l + 1), ok, || {
                    format!("K T - T(shifted) = ({})", join_elems(&diff))
                });
            }
        }
    }
    r
}
