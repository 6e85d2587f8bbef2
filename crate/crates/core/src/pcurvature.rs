//! p-curvature of the qKZ connection:
//! `C_a(z) = K_a(z - (p-1)κ e_a) ... K_a(z - κ e_a) K_a(z)`, its reduced form
//! `Ĉ_a = C_a - 1`, and the normalized `C̃_a = D_a Ĉ_a` with
//! `D_a = ∏_{j≠a} ∏_{m<p} (z_a - z_j - mκ - 1)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ffield::{sample_point_with, FieldElement};
use crate::hypergeo::SolutionSet;
use crate::linalg::Mat;
use crate::mpoly::{LinearForm, MPoly};
use crate::qkz::{k_factors, k_operator_at, shapovalov, shifted, v_basis, PolyMat, QkzParams, RFactor};
use crate::report::Report;

/// `C_a(z)` at a point.
pub fn curvature_at(params: &QkzParams, a: usize, z: &[FieldElement]) -> Result<Mat> {
    let kappa = params.kappa();
    let mut c = Mat::identity(z[0].ctx().join(params.ctx()), params.n());
    let mut w = z.to_vec();
    for _ in 0..params.p() {
        c = &k_operator_at(params, a, &w)? * &c;
        w[a] -= kappa;
    }
    Ok(c)
}

/// `Ĉ_a(z) = C_a(z) - 1`.
pub fn reduced_curvature_at(params: &QkzParams, a: usize, z: &[FieldElement]) -> Result<Mat> {
    let c = curvature_at(params, a, z)?;
    Ok(&c - &Mat::identity(c.ctx(), c.rows()))
}

/// `D_a(z) = ∏_{j≠a} (x^p - κ^{p-1} x)` with `x = z_a - z_j - 1`.
pub fn d_factor_at(params: &QkzParams, a: usize, z: &[FieldElement]) -> FieldElement {
    let p = params.p();
    let kp = params.kappa().pow(p - 1);
    let one = z[0].ctx().one();
    (0..params.n())
        .filter(|&j| j != a)
        .fold(one, |acc, j| {
            let x = z[a] - z[j] - one;
            acc * (x.pow(p) - kp * x)
        })
}

/// `C̃_a(z) = D_a(z) Ĉ_a(z)`.
pub fn normalized_curvature_at(params: &QkzParams, a: usize, z: &[FieldElement]) -> Result<Mat> {
    Ok(reduced_curvature_at(params, a, z)?.scale(d_factor_at(params, a, z)))
}

/// `D_a` as a polynomial, from the closed form of `(x;κ)_p`.
pub fn d_factor_poly(params: &QkzParams, a: usize) -> MPoly {
    let n = params.n();
    let ctx = params.ctx();
    let p = params.p() as u32;
    let kp = params.kappa().pow(p as u64 - 1);
    (0..n).filter(|&j| j != a).fold(MPoly::one(ctx, n), |acc, j| {
        let x = LinearForm::diff(a, j, ctx.one()).expect("distinct").to_mpoly(n);
        &acc * &(&x.pow(p) - &x.scale(kp))
    })
}

/// Symbolic p-curvature: `C_a = num / ∏ den` and `C̃_a = num - D_a`.
#[derive(Clone, Debug)]
pub struct SymbolicCurvature {
    pub num: PolyMat,
    pub den: Vec<LinearForm>,
    pub normalized: PolyMat,
}

/// Multiplies out the `p` shifted copies of `K_a`. Fails with
/// [`Error::NotDivisible`] if the denominators do not multiply to `D_a`,
/// which would leave `C̃_a` non-polynomial.
pub fn curvature_symbolic(params: &QkzParams, a: usize) -> Result<SymbolicCurvature> {
    let n = params.n();
    let ctx = params.ctx();
    let kappa = params.kappa();
    let base = k_factors(params, a)?;
    let mut num = PolyMat::identity(ctx, n, n);
    let mut den = Vec::new();
    for s in (0..params.p()).rev() {
        let extra = kappa * ctx.elem(s as i64);
        for f in &base {
            let g = RFactor {
                shift: f.shift + extra,
                ..*f
            };
            num = num.mul(&g.numerator(n));
            den.push(g.pole());
        }
    }
    let den_poly = den.iter().fold(MPoly::one(ctx, n), |acc, l| acc.mul_linear(l));
    let d = d_factor_poly(params, a);
    if den_poly != d {
        return Err(Error::NotDivisible(format!(
            "denominator of C_{} differs from D_{}",
            a + 1,
            a + 1
        )));
    }
    let normalized = num.sub(&PolyMat::scalar(n, &d));
    Ok(SymbolicCurvature { num, den, normalized })
}

/// Negative control for the duality checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DualityControl {
    #[default]
    Exact,
    /// Drop the minus sign of `Ĉ_a(z;-κ) = -Ĉ_a(-z;κ)^*`.
    FlipSign,
}

/// Residues of `S(Ĉ_a(z;-κ) x, y) + S(x, Ĉ_a(-z;κ) y)` and of
/// `S(C̃_a(z;-κ) x, y) - (-1)^n S(x, C̃_a(-z;κ) y)` over the basis `e_i` of `V`.
pub fn duality_residues(
    params: &QkzParams,
    a: usize,
    z: &[FieldElement],
    control: DualityControl,
) -> Result<(Mat, Mat)> {
    let n = params.n();
    let dual = params.negated();
    let minus_z: Vec<FieldElement> = z.iter().map(|v| -*v).collect();
    let plus = reduced_curvature_at(params, a, &minus_z)?;
    let minus = reduced_curvature_at(&dual, a, z)?;
    let d_plus = d_factor_at(params, a, &minus_z);
    let d_minus = d_factor_at(&dual, a, z);
    let ctx = plus.ctx();
    let basis = v_basis(ctx, n);
    let sign = match control {
        DualityControl::Exact => ctx.one(),
        DualityControl::FlipSign => -ctx.one(),
    };
    let parity = if n % 2 == 0 { ctx.one() } else { -ctx.one() };
    let mut first = Mat::zeros(ctx, n - 1, n - 1);
    let mut second = Mat::zeros(ctx, n - 1, n - 1);
    for (i, x) in basis.iter().enumerate() {
        let mx = minus.apply(x);
        for (j, y) in basis.iter().enumerate() {
            let py = plus.apply(y);
            let left = shapovalov(&mx, y)?;
            let right = shapovalov(x, &py)?;
            first[(i, j)] = left + sign * right;
            second[(i, j)] = d_minus * left - sign * parity * d_plus * right;
        }
    }
    Ok((first, second))
}

/// Matrix of an operator preserving `V` in the basis `e_i = v^(i) - v^(i+1)`.
pub fn restrict_to_v(m: &Mat) -> Mat {
    let n = m.rows();
    let ctx = m.ctx();
    let cols: Vec<Vec<FieldElement>> = v_basis(ctx, n)
        .iter()
        .map(|e| {
            let img = m.apply(e);
            let mut partial = ctx.zero();
            (0..n - 1)
                .map(|i| {
                    partial += img[i];
                    partial
                })
                .collect()
        })
        .collect();
    Mat::from_cols(ctx, &cols)
}

/// Ranks of the reduced curvature at one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankData {
    /// `(dim ker Ĉ_a|_V, rank Ĉ_a)` for each `a`.
    pub per_axis: Vec<(usize, usize)>,
    /// `dim Σ_a im Ĉ_a`.
    pub image_sum: usize,
}

pub fn kernel_image_ranks(params: &QkzParams, z: &[FieldElement]) -> Result<RankData> {
    let n = params.n();
    let mut per_axis = Vec::with_capacity(n);
    let mut images: Option<Mat> = None;
    for a in 0..n {
        let c = reduced_curvature_at(params, a, z)?;
        let rank = c.rank();
        per_axis.push((n - 1 - rank, rank));
        images = Some(match images {
            None => c,
            Some(m) => m.hcat(&c),
        });
    }
    Ok(RankData {
        per_axis,
        image_sum: images.map_or(0, |m| m.rank()),
    })
}

/// Points of `F_{p^2}^n` where every shifted `K_a` used by the p-curvature,
/// for both `±z` and `±κ`, is defined and invertible.
pub fn curvature_points(params: &QkzParams, count: usize, seed: u64) -> Result<Vec<Vec<FieldElement>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n();
    let p = params.p();
    let factors: Vec<Vec<RFactor>> = (0..n).map(|a| k_factors(params, a)).collect::<Result<_>>()?;
    let kappa = params.kappa();
    (0..count)
        .map(|_| {
            sample_point_with(params.point_ctx(), n, &mut rng, |z| {
                let one = z[0].ctx().one();
                for sz in [one, -one] {
                    for sk in [one, -one] {
                        for fs in &factors {
                            for f in fs {
                                for s in 0..p {
                                    let shift = sk * (f.shift + kappa * kappa.ctx().elem(s as i64));
                                    let u = sz * (z[f.a] - z[f.j]) - shift;
                                    if u == one || u == -one {
                                        return false;
                                    }
                                }
                            }
                        }
                    }
                }
                true
            })
        })
        .collect()
}

/// The full battery at each point: vanishing or nonvanishing of `Ĉ_a` by
/// the value of `d(κ)`, `Ĉ_a Ĉ_b = 0`, solutions fixed by `C_a`, image in
/// the solution span, rank bounds, commutativity, the endomorphism
/// property, and both duality identities.
pub fn verify_curvature_battery(
    set: &SolutionSet,
    points: &[Vec<FieldElement>],
    control: DualityControl,
) -> Report {
    let params = &set.params;
    let n = params.n();
    let d = params.d().unwrap_or(0);
    let middle = d > 0 && d + 1 < n;
    let reports: Vec<Report> = points
        .par_iter()
        .enumerate()
        .map(|(pi, z)| {
            let mut r = Report::new();
            match battery_at(set, z, middle, control) {
                Ok(sub) => r.absorb(&format!("point {pi} "), sub),
                Err(e) => r.fail(format!("point {pi}"), e.to_string()),
            }
            r
        })
        .collect();
    let mut out = Report::new();
    for r in reports {
        out.absorb("", r);
    }
    out
}

fn battery_at(set: &SolutionSet, z: &[FieldElement], middle: bool, control: DualityControl) -> Result<Report> {
    let params = &set.params;
    let n = params.n();
    let d = set.len();
    let kappa = params.kappa();
    let mut r = Report::new();
    let curv: Vec<Mat> = (0..n).map(|a| curvature_at(params, a, z)).collect::<Result<_>>()?;
    let ctx = curv[0].ctx();
    let id = Mat::identity(ctx, n);
    let red: Vec<Mat> = curv.iter().map(|c| c - &id).collect();
    let span = set.eval_matrix(z)?;
    let span_rank = span.rank();
    r.record("solutions independent at z", span_rank == d, || format!("rank {span_rank} < {d}"));
    for a in 0..n {
        let ax = a + 1;
        if middle {
            r.record(format!("a={ax} reduced curvature nonzero"), !red[a].is_zero(), || "C_a = 1".into());
        } else {
            r.record(format!("a={ax} reduced curvature vanishes"), red[a].is_zero(), || format!("C_a - 1 = {}", red[a]));
        }
        for b in 0..n {
            let prod = &red[a] * &red[b];
            r.record(format!("a={ax} b={} product vanishes", b + 1), prod.is_zero(), || prod.to_string());
            if b > a {
                let ab = &curv[a] * &curv[b];
                let ba = &curv[b] * &curv[a];
                r.record(format!("a={ax} b={} commute", b + 1), ab == ba, || format!("{ab} != {ba}"));
            }
            let kb = k_operator_at(params, b, z)?;
            let shifted_c = curvature_at(params, a, &shifted(z, b, -kappa))?;
            let lhs = &kb * &curv[a];
            let rhs = &shifted_c * &kb;
            r.record(format!("a={ax} b={} endomorphism", b + 1), lhs == rhs, || format!("{lhs} != {rhs}"));
        }
        let fixed = (&red[a] * &span).is_zero();
        r.record(format!("a={ax} fixes solutions"), fixed, || "C_a s != s".into());
        let rank = red[a].rank();
        let joined = span.hcat(&red[a]).rank();
        r.record(format!("a={ax} image in span"), joined == span_rank, || {
            format!("rank grows from {span_rank} to {joined}")
        });
        r.record(format!("a={ax} rank <= d"), rank <= d, || format!("rank {rank}, d {d}"));
        let ker = n - 1 - restrict_to_v(&red[a]).rank();
        r.record(format!("a={ax} kernel on V >= d"), ker >= d, || format!("kernel {ker}, d {d}"));
        let (first, second) = duality_residues(params, a, z, control)?;
        r.record(format!("a={ax} duality residue"), first.is_zero(), || first.to_string());
        r.record(format!("a={ax} normalized duality residue"), second.is_zero(), || second.to_string());
    }
    Ok(r)
}

/// For `κ` outside the prime field: `det Ĉ_a|_V ≠ 0` at each point.
pub fn verify_ext_kappa(params: &QkzParams, points: &[Vec<FieldElement>]) -> Result<Report> {
    if params.kappa_in_prime_field() {
        return Err(Error::Domain("kappa lies in the prime field".into()));
    }
    let n = params.n();
    let rows: Vec<Vec<(usize, Result<FieldElement>)>> = points
        .par_iter()
        .map(|z| {
            (0..n)
                .map(|a| (a, reduced_curvature_at(params, a, z).and_then(|c| restrict_to_v(&c).det())))
                .collect()
        })
        .collect();
    let mut r = Report::new();
    for (pi, row) in rows.into_iter().enumerate() {
        for (a, det) in row {
            let name = format!("point {pi} a={} det on V nonzero", a + 1);
            match det {
                Ok(v) => r.record(name, !v.is_zero(), || "determinant vanishes".into()),
                Err(e) => r.fail(name, e.to_string()),
            }
        }
    }
    Ok(r)
}
