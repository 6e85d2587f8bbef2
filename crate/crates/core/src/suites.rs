//! Parameter sweeps: runs the verification suites over `(p, n, κ)` triples
//! and assembles a deterministic JSON report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::ffield::{make_field, parse_element, sample_point, FieldCtx, FieldElement};
use crate::hypergeo::{
    barq_solutions, extract_solutions, kappa_json, verify_independence, verify_leading_terms,
    verify_orthogonality, verify_quasi_sections, verify_restrictions, verify_weight_functions,
    LeadingControl, SolutionSet,
};
use crate::linalg::Mat;
use crate::pcurvature::{
    curvature_points, curvature_symbolic, duality_residues, kernel_image_ranks,
    normalized_curvature_at, reduced_curvature_at, restrict_to_v, verify_curvature_battery,
    verify_ext_kappa, DualityControl,
};
use crate::pochhammer::verify_identities;
use crate::qkz::{
    pairing_in_periodic_subring, v_gram, verify_fixes_symmetric, verify_flatness, verify_kz_solution,
    verify_pairing_identity, verify_pairing_periodicity, verify_qkz_solution,
    verify_qkz_solution_variant, verify_rmatrix_identities, KVariant, QkzParams, RMutation,
};
use crate::report::Report;

pub const SCHEMA: &str = "charp-qkz/1";

/// Failures and notes kept per entry in the JSON report.
const MAX_LISTED: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Identities,
    Rmatrix,
    Solutions,
    Leading,
    Ortho,
    Restrict,
    Curvature,
    ExtKappa,
    Quasi,
    Kz,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Identities,
        Suite::Rmatrix,
        Suite::Solutions,
        Suite::Leading,
        Suite::Ortho,
        Suite::Restrict,
        Suite::Curvature,
        Suite::ExtKappa,
        Suite::Quasi,
        Suite::Kz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Rmatrix => "rmatrix",
            Suite::Solutions => "solutions",
            Suite::Leading => "leading",
            Suite::Ortho => "ortho",
            Suite::Restrict => "restrict",
            Suite::Curvature => "curvature",
            Suite::ExtKappa => "ext_kappa",
            Suite::Quasi => "quasi",
            Suite::Kz => "kz",
        }
    }

    fn needs_solutions(self) -> bool {
        !matches!(self, Suite::Identities | Suite::Rmatrix | Suite::ExtKappa)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Which steps to run for each `(p, n)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum KappaFilter {
    /// Every `κ ∈ F_p^×`, plus random `κ ∈ F_{p^2} \ F_p` for the
    /// `ext_kappa` suite.
    #[default]
    All,
    /// Explicit values, `c` or `a+b*g`.
    List(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub primes: Vec<u64>,
    pub n_values: Vec<usize>,
    pub kappas: KappaFilter,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub points: usize,
    /// Random steps outside `F_p` per `(p, n)` under [`KappaFilter::All`].
    pub ext_kappa_count: usize,
    /// Random steps per prime for the Pochhammer identity suite.
    pub identity_kappa_count: usize,
    /// Runs deliberately corrupted operators; every affected suite must fail.
    pub sabotage: bool,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            primes: vec![5, 7, 11, 13],
            n_values: vec![2, 3, 4, 5],
            kappas: KappaFilter::All,
            suites: Suite::ALL.to_vec(),
            seed: 0,
            points: 50,
            ext_kappa_count: 5,
            identity_kappa_count: 10,
            sabotage: false,
        }
    }
}

impl RunConfig {
    fn to_json(&self) -> Value {
        json!({
            "primes": self.primes,
            "n": self.n_values,
            "kappa": match &self.kappas {
                KappaFilter::All => json!("all"),
                KappaFilter::List(v) => json!(v),
            },
            "suites": self.suites.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "seed": self.seed,
            "points": self.points,
            "sabotage": self.sabotage,
        })
    }
}

/// One parameter triple of the sweep.
#[derive(Clone, Copy, Debug)]
pub struct Triple {
    pub params: QkzParams,
}

impl Triple {
    pub fn key(&self) -> String {
        let p = &self.params;
        format!("p={},n={},kappa={}", p.p(), p.n(), kappa_label(p.kappa()))
    }
}

/// `κ` as `c` with `0 <= c < p`, or `a+b*g`.
pub fn kappa_label(kappa: FieldElement) -> String {
    let (a0, a1) = kappa.coords();
    if a1 == 0 {
        a0.to_string()
    } else {
        format!("{a0}+{a1}*g")
    }
}

fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |acc, v| {
        (acc ^ v).wrapping_mul(0x0100_0000_01b3).rotate_left(17)
    })
}

fn random_ext_kappas(ctx: FieldCtx, count: usize, seed: u64) -> Vec<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<FieldElement> = Vec::new();
    while out.len() < count {
        let v = ctx.random(&mut rng);
        if !v.in_prime_field() && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Distinct nonzero elements; fewer than `count` when the field is small.
fn random_nonzero(ctx: FieldCtx, count: usize, seed: u64) -> Vec<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = count.min(ctx.elements().len() - 1);
    let mut out: Vec<FieldElement> = Vec::new();
    while out.len() < count {
        let v = ctx.random(&mut rng);
        if !v.is_zero() && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Expands the sweep into triples; invalid `(p, n)` pairs are returned as
/// skip reasons.
pub fn sweep(config: &RunConfig) -> Result<(Vec<Triple>, Vec<String>)> {
    let mut triples = Vec::new();
    let mut skipped = Vec::new();
    let want_ext = config.suites.contains(&Suite::ExtKappa);
    for &p in &config.primes {
        let ext = make_field(p, 2)?;
        for &n in &config.n_values {
            if n < 2 || n as u64 >= p {
                skipped.push(format!("p={p},n={n}: need 2 <= n < p"));
                continue;
            }
            let kappas: Vec<FieldElement> = match &config.kappas {
                KappaFilter::All => {
                    let mut v: Vec<FieldElement> = (1..p as i64).map(|c| ext.prime_field().elem(c)).collect();
                    if want_ext {
                        v.extend(random_ext_kappas(ext, config.ext_kappa_count, mix_seed(config.seed, &[p, n as u64])));
                    }
                    v
                }
                KappaFilter::List(items) => items
                    .iter()
                    .map(|s| parse_element(ext, s))
                    .collect::<Result<_>>()?,
            };
            for kappa in kappas {
                if kappa.is_zero() {
                    skipped.push(format!("p={p},n={n}: kappa must be nonzero"));
                    continue;
                }
                triples.push(Triple {
                    params: QkzParams::new(n, kappa)?,
                });
            }
        }
    }
    Ok((triples, skipped))
}

fn points_for(params: &QkzParams, count: usize, seed: u64) -> Result<Vec<Vec<FieldElement>>> {
    let (a0, a1) = params.kappa().coords();
    curvature_points(params, count, mix_seed(seed, &[params.p(), params.n() as u64, a0, a1]))
}

fn report_json(r: &Report) -> Value {
    let failed = r.failures().count();
    json!({
        "passed": r.passed(),
        "checks": r.len(),
        "failed": failed,
        "failures": r
            .failures()
            .take(MAX_LISTED)
            .map(|c| json!({"name": c.name, "witness": c.witness}))
            .collect::<Vec<_>>(),
        "notes": r.notes.iter().take(MAX_LISTED).collect::<Vec<_>>(),
    })
}

/// Outcome of a sweep: the JSON document and the overall verdict.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub suites: BTreeMap<&'static str, BTreeMap<String, Report>>,
    pub skipped: Vec<String>,
    pub config: RunConfig,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.suites.values().flat_map(|m| m.values()).all(|r| r.passed())
    }

    pub fn suite(&self, s: Suite) -> Option<&BTreeMap<String, Report>> {
        self.suites.get(s.name())
    }

    pub fn to_json(&self) -> Value {
        let mut suites = Map::new();
        for (name, entries) in &self.suites {
            let mut m = Map::new();
            for (k, r) in entries {
                m.insert(k.clone(), report_json(r));
            }
            suites.insert((*name).to_string(), Value::Object(m));
        }
        json!({
            "schema": SCHEMA,
            "config": self.config.to_json(),
            "passed": self.passed(),
            "skipped": self.skipped,
            "suites": suites,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.suites {
            for (k, r) in entries {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                out.push_str(&format!("{status} {name} {k} ({} checks)", r.len()));
                if let Some(f) = r.first_failure() {
                    out.push_str(&format!(": {f}"));
                }
                out.push('\n');
            }
        }
        for s in &self.skipped {
            out.push_str(&format!("SKIP {s}\n"));
        }
        out.push_str(if self.passed() { "all checks passed\n" } else { "some checks failed\n" });
        out
    }
}

/// Runs the configured suites over the sweep.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let (triples, skipped) = sweep(config)?;
    let mut suites: BTreeMap<&'static str, BTreeMap<String, Report>> = BTreeMap::new();
    for s in &config.suites {
        suites.insert(s.name(), BTreeMap::new());
    }

    let mut primes: Vec<u64> = config.primes.clone();
    primes.sort_unstable();
    primes.dedup();
    if config.suites.contains(&Suite::Identities) {
        let entries: Vec<(String, Report)> = primes
            .par_iter()
            .flat_map_iter(|&p| {
                let ext = make_field(p, 2).expect("validated prime");
                let kappas = random_nonzero(ext, config.identity_kappa_count, mix_seed(config.seed, &[p, 1]));
                kappas
                    .into_iter()
                    .map(move |kappa| {
                        let key = format!("p={p},kappa={}", kappa_label(kappa));
                        (key, verify_identities(kappa, 2 * p as usize))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        suites.get_mut("identities").unwrap().extend(entries);
    }
    if config.suites.contains(&Suite::Rmatrix) {
        let mutation = if config.sabotage { RMutation::FlipEntry } else { RMutation::Exact };
        for &p in &primes {
            let ctx = make_field(p, 1)?;
            suites
                .get_mut("rmatrix")
                .unwrap()
                .insert(format!("p={p}"), verify_rmatrix_identities(ctx, mutation));
        }
    }

    let per_triple: Vec<Vec<(Suite, String, Report)>> = triples
        .par_iter()
        .map(|t| run_triple(t, config))
        .collect();
    for entries in per_triple {
        for (s, key, r) in entries {
            suites.get_mut(s.name()).unwrap().insert(key, r);
        }
    }
    Ok(RunOutput {
        suites,
        skipped,
        config: config.clone(),
    })
}

struct Solved {
    set: SolutionSet,
    dual: SolutionSet,
    kz: SolutionSet,
}

fn run_triple(t: &Triple, config: &RunConfig) -> Vec<(Suite, String, Report)> {
    let params = t.params;
    let key = t.key();
    let mut out = Vec::new();
    let prime_kappa = params.kappa_in_prime_field();
    let points = match points_for(&params, config.points, config.seed) {
        Ok(p) => p,
        Err(e) => {
            let mut r = Report::new();
            r.fail("sampling", e.to_string());
            for s in &config.suites {
                if !matches!(s, Suite::Identities) && !(matches!(s, Suite::Rmatrix) && !prime_kappa) {
                    out.push((*s, key.clone(), r.clone()));
                }
            }
            return out;
        }
    };
    let needs = config.suites.iter().any(|s| s.needs_solutions()) && prime_kappa;
    let solved: Option<std::result::Result<Solved, String>> = needs.then(|| {
        let set = extract_solutions(&params).map_err(|e| e.to_string())?;
        let dual = extract_solutions(&params.negated()).map_err(|e| e.to_string())?;
        let kz = barq_solutions(&params).map_err(|e| e.to_string())?;
        Ok(Solved { set, dual, kz })
    });
    for &suite in &config.suites {
        let report = match suite {
            Suite::Identities => continue,
            Suite::Rmatrix if prime_kappa => rmatrix_triple(&params, &points, config),
            Suite::ExtKappa if !prime_kappa => match verify_ext_kappa(&params, &points) {
                Ok(r) => r,
                Err(e) => failed("ext_kappa", e),
            },
            Suite::Rmatrix | Suite::ExtKappa => continue,
            _ if !prime_kappa => continue,
            _ => match solved.as_ref().expect("solutions requested") {
                Err(e) => {
                    let mut r = Report::new();
                    r.fail("extraction", e.clone());
                    r
                }
                Ok(s) => solution_suite(suite, &params, s, &points, config),
            },
        };
        out.push((suite, key.clone(), report));
    }
    out
}

fn failed(name: &str, e: Error) -> Report {
    let mut r = Report::new();
    r.fail(name, e.to_string());
    r
}

fn rmatrix_triple(params: &QkzParams, points: &[Vec<FieldElement>], config: &RunConfig) -> Report {
    let variant = if config.sabotage { KVariant::DropFactor(0) } else { KVariant::Exact };
    let mut r = Report::new();
    r.absorb("flatness ", verify_flatness(params, points, variant));
    r.absorb("", verify_fixes_symmetric(params));
    r.absorb("pairing ", verify_pairing_identity(params, &points[..points.len().min(20)]));
    r
}

fn solution_suite(
    suite: Suite,
    params: &QkzParams,
    s: &Solved,
    points: &[Vec<FieldElement>],
    config: &RunConfig,
) -> Report {
    let n = params.n();
    let p = params.p() as usize;
    let k = params.k().unwrap_or(0) as usize;
    let d = s.set.len();
    let mut r = Report::new();
    match suite {
        Suite::Solutions => {
            let dd = s.dual.len();
            r.record("d(kappa) + d(-kappa) = n - 1", d + dd == n - 1, || format!("{d} + {dd}"));
            r.record("solution count is d(kappa)", Some(d) == params.d(), || format!("{d}"));
            let variant = if config.sabotage { KVariant::DropFactor(0) } else { KVariant::Exact };
            for (i, f) in s.set.solutions.iter().enumerate() {
                let ell = i + 1;
                r.record(format!("l={ell} coordinates sum to zero"), f.is_singular(), || "not in V".into());
                let want = (n * k - ell * p) as u32;
                r.record(format!("l={ell} degree nk - lp"), f.total_degree() == Some(want), || {
                    format!("degree {:?}, expected {want}", f.total_degree())
                });
                let per_var = (0..n).all(|j| f.coords.iter().all(|c| c.degree_in(j) as usize <= k));
                r.record(format!("l={ell} degree in each variable <= k"), per_var, || "too large".into());
                r.absorb(&format!("l={ell} "), verify_qkz_solution_variant(params, f, variant));
            }
            let dual_params = params.negated();
            for (i, g) in s.dual.solutions.iter().enumerate() {
                r.absorb(&format!("step -kappa m={} ", i + 1), verify_qkz_solution(&dual_params, g));
            }
            if n * k <= 24 {
                let ext = params.point_ctx();
                let samples: Vec<(FieldElement, Vec<FieldElement>)> = (0..5u64)
                    .map(|i| {
                        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, &[i, 7]));
                        (ext.random(&mut rng), points[i as usize % points.len()].clone())
                    })
                    .collect();
                match verify_weight_functions(params, &samples) {
                    Ok(w) => r.absorb("weight function ", w),
                    Err(e) => r.fail("weight function", e.to_string()),
                }
            }
            let few = &points[..points.len().min(5)];
            for (i, f) in s.set.solutions.iter().enumerate() {
                for (j, g) in s.dual.solutions.iter().enumerate() {
                    let name = format!("pairing l={} m={} ", i + 1, j + 1);
                    r.absorb(&name, verify_pairing_periodicity(params, f, g, few));
                    if n <= 3 {
                        let inside = pairing_in_periodic_subring(f, g).is_some();
                        r.record(format!("{name}in periodic subring"), inside, || "not periodic".into());
                    }
                }
            }
        }
        Suite::Leading => {
            let control = if config.sabotage { LeadingControl::PermuteU } else { LeadingControl::Exact };
            r.absorb("", verify_leading_terms(&s.set, &s.kz, control));
            r.absorb("minors ", verify_independence(&s.set, &points[..points.len().min(3)]));
        }
        Suite::Ortho => {
            if d > 0 && d + 1 < n {
                r.absorb("", verify_orthogonality(&s.set, &s.dual));
            } else {
                r.note(format!("d(kappa) = {d}: orthogonality is stated only for 0 < d < n - 1"));
            }
        }
        Suite::Restrict => r.absorb("", verify_restrictions(&s.set)),
        Suite::Curvature => {
            let control = if config.sabotage { DualityControl::FlipSign } else { DualityControl::Exact };
            r.absorb("", verify_curvature_battery(&s.set, points, control));
            if let Some(z) = points.first() {
                match kernel_image_ranks(params, z) {
                    Ok(rd) => r.note(format!(
                        "ranks {:?}, dim of the sum of images {}",
                        rd.per_axis.iter().map(|x| x.1).collect::<Vec<_>>(),
                        rd.image_sum
                    )),
                    Err(e) => r.fail("ranks", e.to_string()),
                }
            }
            if p <= 7 && n <= 3 {
                r.absorb("symbolic ", symbolic_curvature_checks(params, &points[..points.len().min(10)]));
            }
        }
        Suite::Quasi => {
            if s.dual.is_empty() {
                r.note("d(-kappa) = 0: no quasi-sections");
            } else {
                r.absorb("", verify_quasi_sections(&s.set, &s.dual, &points[..points.len().min(20)]));
            }
        }
        Suite::Kz => {
            let kz_params = if config.sabotage { params.negated() } else { *params };
            for (i, (q, qbar)) in s.set.solutions.iter().zip(&s.kz.solutions).enumerate() {
                let ell = i + 1;
                r.absorb(&format!("l={ell} "), verify_kz_solution(&kz_params, qbar));
                r.record(format!("l={ell} homogeneous"), qbar.coords.iter().all(|c| c.is_homogeneous()), || {
                    "not homogeneous".into()
                });
                match q.top_degree_part() {
                    Ok(top) => {
                        r.record(format!("l={ell} top part equals KZ solution"), &top == qbar, || {
                            format!("{top} != {qbar}")
                        });
                        r.absorb(&format!("l={ell} top part "), verify_kz_solution(&kz_params, &top));
                    }
                    Err(e) => r.fail(format!("l={ell} top part"), e.to_string()),
                }
            }
        }
        Suite::Identities | Suite::Rmatrix | Suite::ExtKappa => {}
    }
    r
}

/// Symbolic `C̃_a`: polynomial, degree at most `(n-2)p`, top part of rank
/// at most one, and agreeing with the pointwise product.
pub fn symbolic_curvature_checks(params: &QkzParams, points: &[Vec<FieldElement>]) -> Report {
    let n = params.n();
    let bound = ((n - 2) * params.p() as usize) as u32;
    let mut r = Report::new();
    for a in 0..n {
        let ax = a + 1;
        let sym = match curvature_symbolic(params, a) {
            Ok(s) => s,
            Err(e) => {
                r.fail(format!("a={ax} polynomial"), e.to_string());
                continue;
            }
        };
        r.pass(format!("a={ax} polynomial"));
        let deg = sym.normalized.total_degree();
        r.record(format!("a={ax} degree <= {bound}"), deg.map_or(true, |d| d <= bound), || {
            format!("degree {deg:?}")
        });
        let top = sym.normalized.map(|e| e.homogeneous_part(bound));
        for (pi, z) in points.iter().enumerate() {
            match (top.eval(z), normalized_curvature_at(params, a, z), sym.normalized.eval(z)) {
                (Ok(t), Ok(direct), Ok(s)) => {
                    let rank = t.rank();
                    r.record(format!("a={ax} point {pi} top part rank <= 1"), rank <= 1, || format!("rank {rank}"));
                    r.record(format!("a={ax} point {pi} matches pointwise"), s == direct, || {
                        format!("{s} != {direct}")
                    });
                }
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => r.fail(format!("a={ax} point {pi}"), e.to_string()),
            }
        }
    }
    r
}

/// Parameters for the single-triple commands.
pub fn params_from(p: u64, n: usize, kappa: &str) -> Result<QkzParams> {
    let ext = make_field(p, 2)?;
    QkzParams::new(n, parse_element(ext, kappa)?)
}

/// The solution set for one triple as a JSON document.
pub fn solve_json(params: &QkzParams) -> Result<Value> {
    let set = extract_solutions(params)?;
    let mut v = set.to_json();
    v["schema"] = json!(SCHEMA);
    v["degrees"] = json!(set.degrees());
    Ok(v)
}

pub fn solve_text(params: &QkzParams) -> Result<String> {
    let set = extract_solutions(params)?;
    let k = params.k().unwrap_or(0);
    let d = set.len();
    let mut out = format!(
        "p={} n={} kappa={} k={k} d(kappa)={d}\n",
        params.p(),
        params.n(),
        kappa_label(params.kappa())
    );
    if d == 0 {
        out.push_str("d(kappa)=0: no p-hypergeometric solutions\n");
    }
    for (i, s) in set.solutions.iter().enumerate() {
        let idx = (i + 1) * params.p() as usize - 1;
        out.push_str(&format!("Q^{idx} = {s}  (degree {})\n", s.total_degree().unwrap_or(0)));
    }
    Ok(out)
}

fn elem_json(v: FieldElement) -> Value {
    let (a0, a1) = v.coords();
    json!([a0, a1])
}

/// Per-axis curvature records at sampled points.
pub fn curvature_json(params: &QkzParams, points: usize, seed: u64) -> Result<Value> {
    let pts = points_for(params, points, seed)?;
    let set = if params.kappa_in_prime_field() {
        Some(extract_solutions(params)?)
    } else {
        None
    };
    let n = params.n();
    let mut records = Vec::new();
    for (pi, z) in pts.iter().enumerate() {
        let span = match &set {
            Some(s) => Some(s.eval_matrix(z)?),
            None => None,
        };
        let red: Vec<Mat> = (0..n).map(|a| reduced_curvature_at(params, a, z)).collect::<Result<_>>()?;
        let ranks = kernel_image_ranks(params, z)?;
        for a in 0..n {
            let c = &red[a];
            let mut rec = json!({
                "point": pi,
                "a": a + 1,
                "nonzero": !c.is_zero(),
                "rank": ranks.per_axis[a].1,
                "kernel_on_v": ranks.per_axis[a].0,
                "products_vanish": red.iter().all(|b| (c * b).is_zero()),
            });
            if let Some(span) = &span {
                let sr = span.rank();
                rec["image_in_span"] = json!(span.hcat(c).rank() == sr);
                rec["span_in_kernel"] = json!((c * span).is_zero());
                let (r1, r2) = duality_residues(params, a, z, DualityControl::Exact)?;
                rec["duality_residue_zero"] = json!(r1.is_zero());
                rec["normalized_duality_residue_zero"] = json!(r2.is_zero());
            } else {
                rec["det_on_v"] = elem_json(restrict_to_v(c).det()?);
            }
            records.push(rec);
        }
    }
    Ok(json!({
        "schema": SCHEMA,
        "p": params.p(),
        "n": n,
        "kappa": kappa_json(params.kappa()),
        "d": params.d(),
        "records": records,
    }))
}

/// Orthogonality for one triple: grid verdict per `(ℓ, m)`.
pub fn ortho_json(params: &QkzParams) -> Result<Value> {
    let set = extract_solutions(params)?;
    let dual = extract_solutions(&params.negated())?;
    let d = set.len();
    let n = params.n();
    if !(d > 0 && d + 1 < n) {
        return Err(Error::InvalidParams(format!(
            "orthogonality needs 0 < d(kappa) < n - 1, here d(kappa) = {d}"
        )));
    }
    let r = verify_orthogonality(&set, &dual);
    Ok(json!({
        "schema": SCHEMA,
        "p": params.p(),
        "n": n,
        "kappa": kappa_json(params.kappa()),
        "d": d,
        "d_dual": dual.len(),
        "entries": r.checks.iter().map(|c| json!({"name": c.name, "zero": c.passed, "witness": c.witness})).collect::<Vec<_>>(),
        "passed": r.passed(),
    }))
}

/// Summary rows for the `report` command.
pub fn report_rows(config: &RunConfig) -> Result<Vec<Value>> {
    let (triples, _) = sweep(&RunConfig {
        suites: vec![],
        ..config.clone()
    })?;
    triples
        .par_iter()
        .filter(|t| t.params.kappa_in_prime_field())
        .map(|t| {
            let params = t.params;
            let n = params.n();
            let set = extract_solutions(&params)?;
            let dual = extract_solutions(&params.negated())?;
            let d = set.len();
            let z = sample_point(params.point_ctx(), n, mix_seed(config.seed, &[params.p(), n as u64]))?;
            let ranks = kernel_image_ranks(&params, &z)?;
            let ortho = if d > 0 && d + 1 < n {
                json!(verify_orthogonality(&set, &dual).passed())
            } else {
                Value::Null
            };
            let gram = v_gram(params.ctx(), n).det()?;
            Ok(json!({
                "p": params.p(),
                "n": n,
                "kappa": kappa_json(params.kappa()),
                "k": params.k(),
                "d": d,
                "d_dual": dual.len(),
                "degrees": set.degrees(),
                "curvature_ranks": ranks.per_axis.iter().map(|x| x.1).collect::<Vec<_>>(),
                "image_sum": ranks.image_sum,
                "orthogonal": ortho,
                "gram_det_is_n": gram == params.ctx().elem(n as i64),
            }))
        })
        .collect()
}

pub fn report_text(rows: &[Value]) -> String {
    let mut out = String::from("p   n  kappa  k   d  d(-k)  degrees          ranks            sum  ortho  gram\n");
    for r in rows {
        let list = |v: &Value| {
            v.as_array()
                .map(|a| a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                .unwrap_or_default()
        };
        let s = |v: &Value| v.to_string();
        out.push_str(&format!(
            "{:<3} {:<2} {:<6} {:<3} {:<2} {:<6} {:<16} {:<16} {:<4} {:<6} {}\n",
            s(&r["p"]),
            s(&r["n"]),
            s(&r["kappa"]),
            s(&r["k"]),
            s(&r["d"]),
            s(&r["d_dual"]),
            list(&r["degrees"]),
            list(&r["curvature_ranks"]),
            s(&r["image_sum"]),
            match &r["orthogonal"] {
                Value::Bool(true) => "yes",
                Value::Bool(false) => "NO",
                _ => "-",
            },
            if r["gram_det_is_n"] == json!(true) { "ok" } else { "BAD" },
        ));
    }
    out
}

/// Draws `count` nonsingular points for `params`, reproducibly.
pub fn sample_points(params: &QkzParams, count: usize, seed: u64) -> Result<Vec<Vec<FieldElement>>> {
    points_for(params, count, seed)
}

/// Random `κ ∈ F_{p^2} \ F_p`, reproducibly.
pub fn sample_ext_kappas(p: u64, count: usize, seed: u64) -> Result<Vec<FieldElement>> {
    Ok(random_ext_kappas(make_field(p, 2)?, count, seed))
}
