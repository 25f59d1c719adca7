//! Run configuration, verification suites, and deterministic JSON
//! reports.
//!
//! Reports carry no timestamps and serialize through ordered maps only,
//! so identical configurations produce byte-identical output regardless
//! of thread count. Each check record quotes the structural statement it
//! verifies next to the computed and expected values.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

use crate::conn::{
    bott_projection, corner_projection, lift_connection, Calculus, Connection, Projection,
};
use crate::error::{Error, Result};
use crate::exact::{Scalar, SparseVec};
use crate::forms::pipeline::{dims, omega_tower, stabilize, OmegaSpace};
use crate::forms::witness::{laurent_witness, matrix_witness, matrix_witness_degree_one_value};
use crate::forms::{verify, AlgebraBasis};
use crate::oper::Mode;
use crate::triple::{Family, Triple, TripleSpec};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Point,
    Circle,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCfg {
    Bounded,
    Calkin,
}

impl ModeCfg {
    pub fn mode(self) -> Mode {
        match self {
            ModeCfg::Bounded => Mode::Bounded,
            ModeCfg::Calkin => Mode::Calkin,
        }
    }
}

pub const ALL_SUITES: &[&str] = &[
    "s_calculus",
    "laurent",
    "witnesses",
    "circle",
    "qds_theorem",
    "iterated",
    "pauli",
    "conditions",
    "connections",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub base: BaseKind,
    pub fourier_window: i64,
    pub gen_degree: i64,
    pub qds_iterations: usize,
    pub cutoffs: Vec<usize>,
    pub word_budget: usize,
    pub mode: ModeCfg,
    pub suites: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            base: BaseKind::Circle,
            fourier_window: 8,
            gen_degree: 1,
            qds_iterations: 1,
            cutoffs: vec![6],
            word_budget: 3,
            mode: ModeCfg::Calkin,
            suites: ALL_SUITES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fourier_window <= 0
            || self.gen_degree <= 0
            || self.cutoffs.is_empty()
            || self.cutoffs.iter().any(|c| *c == 0)
            || self.word_budget == 0
        {
            return Err(Error::ConfigInvalid("all parameters must be positive".into()));
        }
        for s in &self.suites {
            if !ALL_SUITES.contains(&s.as_str()) {
                return Err(Error::ConfigInvalid(format!("unknown suite: {s}")));
            }
        }
        Ok(())
    }

    pub fn base_spec(&self) -> TripleSpec {
        match self.base {
            BaseKind::Point => TripleSpec::Point,
            BaseKind::Circle => TripleSpec::Circle {
                window: self.fourier_window,
                gen_degree: self.gen_degree,
            },
        }
    }

    /// Base spec with qds_iterations suspensions applied, cutoffs taken
    /// from the list (the last one repeating).
    pub fn triple_spec(&self) -> TripleSpec {
        let mut spec = self.base_spec();
        for i in 0..self.qds_iterations {
            let cutoff = *self.cutoffs.get(i).unwrap_or_else(|| self.cutoffs.last().unwrap());
            spec = spec.qds_of(cutoff);
        }
        spec
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub parameters: BTreeMap<String, String>,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

impl CheckRecord {
    fn new(
        id: &str,
        anchor: &str,
        parameters: &[(&str, String)],
        expected: impl ToString,
        computed: impl ToString,
        pass: bool,
    ) -> CheckRecord {
        CheckRecord {
            id: id.to_string(),
            anchor: anchor.to_string(),
            parameters: parameters
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            expected: expected.to_string(),
            computed: computed.to_string(),
            pass,
        }
    }
}

#[derive(Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

/// Render spanning indices one-based for report output (internally the
/// sequence space is zero-based).
fn one_based(label: &str) -> String {
    let mut out = String::new();
    let mut rest = label;
    while let Some(start) = rest.find("e[") {
        out.push_str(&rest[..start + 2]);
        let end = rest[start..].find(']').map(|e| start + e).unwrap_or(rest.len());
        let inside = &rest[start + 2..end];
        let bumped: Vec<String> = inside
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<i64>()
                    .map(|v| (v + 1).to_string())
                    .unwrap_or_else(|_| s.to_string())
            })
            .collect();
        out.push_str(&bumped.join(","));
        rest = &rest[end..];
    }
    out.push_str(rest);
    out
}

pub fn vec_json(v: &SparseVec) -> serde_json::Value {
    let map: BTreeMap<String, String> =
        v.iter().map(|(i, c)| (i.to_string(), c.to_string())).collect();
    serde_json::Value::Object(map.into_iter().map(|(k, v)| (k, v.into())).collect())
}

/// Serializable summary of a calculus space, used by the cache and the
/// compute command.
pub fn omega_json(t: &Triple, space: &OmegaSpace) -> serde_json::Value {
    let reps: Vec<serde_json::Value> = (0..space.quotient_dim())
        .map(|j| {
            let rep = space.class_rep(j);
            let word: Vec<String> = rep
                .form
                .terms()
                .iter()
                .map(|(c, w)| {
                    let labels: Vec<String> = w
                        .iter()
                        .map(|i| one_based(&t.elems()[*i].label))
                        .collect();
                    format!("{} * {}", c, labels.join(" d "))
                })
                .collect();
            serde_json::json!({ "class": j, "word": word, "pi": vec_json(&rep.pi) })
        })
        .collect();
    serde_json::json!({
        "degree": space.degree,
        "mode": format!("{:?}", space.mode).to_lowercase(),
        "budget": space.budget,
        "ambient": space.ambient,
        "span_dim": space.pi_span.dim(),
        "junk_dim": space.junk.dim(),
        "quotient_dim": space.quotient_dim(),
        "word_count": space.word_count,
        "skipped_words": space.skipped_words,
        "classes": reps,
    })
}

fn fmt_dims(d: &[usize]) -> String {
    format!("({})", d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

fn suite_s_calculus(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let m = cfg.cutoffs[0];
    let t = Triple::build(TripleSpec::Point.qds_of(m))?;
    let basis = AlgebraBasis::new(&t);
    let stable = stabilize(&basis, Family::FinPart, Mode::Bounded, 3, m)?;
    let got = dims(&stable.spaces);
    let expect = vec![m * m, m * m, 0, 0];
    Ok(vec![CheckRecord::new(
        "s_calculus.dims",
        "The finite-block calculus equals the block algebra in degrees zero and one and vanishes in degree two and above.",
        &[("cutoff", m.to_string()), ("stable_budget", stable.budget.to_string())],
        fmt_dims(&expect),
        fmt_dims(&got),
        got == expect,
    )])
}

fn suite_laurent(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let m = cfg.cutoffs[0];
    let t = Triple::build(TripleSpec::Point.qds_of(m))?;
    let basis = AlgebraBasis::new(&t);
    let stable = stabilize(&basis, Family::BandPart, Mode::Calkin, 2, m)?;
    let got = dims(&stable.spaces);
    let expect = vec![2 * m + 1, 2 * m + 1, 0];
    Ok(vec![CheckRecord::new(
        "laurent.dims",
        "Modulo compacts, the Laurent calculus equals the Laurent window in degrees zero and one and vanishes in degree two.",
        &[("window", (2 * m + 1).to_string()), ("stable_budget", stable.budget.to_string())],
        fmt_dims(&expect),
        fmt_dims(&got),
        got == expect,
    )])
}

fn suite_witnesses(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut out = vec![];
    for n in 1..=5 {
        let w = matrix_witness(n)?;
        out.push(CheckRecord::new(
            &format!("witness.zeta.{n}"),
            "There are n-forms representing to zero whose differentials represent to nonzero block matrices, in every degree.",
            &[("degree", n.to_string()), ("cutoff", (n + 3).to_string())],
            "pi = 0, pi d != 0",
            format!(
                "pi {} 0, pi d {} 0",
                if w.pi_vanishes { "=" } else { "!=" },
                if w.dpi_nonzero { "!=" } else { "=" }
            ),
            w.pi_vanishes && w.dpi_nonzero,
        ));
    }
    let v1 = matrix_witness_degree_one_value()?;
    out.push(CheckRecord::new(
        "witness.zeta.1.value",
        "The degree-one witness differential represents to minus the matrix unit e[2,1].",
        &[],
        "-e[2,1]",
        if v1 { "-e[2,1]".to_string() } else { "mismatch".to_string() },
        v1,
    ));
    let cutoff = (*cfg.cutoffs.first().unwrap()).max(7);
    for n in 1..=5 {
        let w = laurent_witness(n, cutoff)?;
        out.push(CheckRecord::new(
            &format!("witness.omega.{n}"),
            "pi(d omega) equals -2 for n = 1, -2(-1)^((n-1)/2) for odd n, and -4(-1)^((n-2)/2) for even n, modulo compacts.",
            &[("degree", n.to_string()), ("cutoff", cutoff.to_string())],
            w.expected.to_string(),
            if w.pi_vanishes && w.dpi_matches {
                w.expected.to_string()
            } else {
                "mismatch".to_string()
            },
            w.pi_vanishes && w.dpi_matches,
        ));
    }
    Ok(out)
}

fn suite_circle(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let r = verify::verify_circle(cfg.fourier_window, cfg.gen_degree, cfg.word_budget)?;
    let params = [
        ("window", cfg.fourier_window.to_string()),
        ("gen_degree", cfg.gen_degree.to_string()),
        ("budget", cfg.word_budget.to_string()),
    ];
    Ok(vec![
        CheckRecord::new(
            "circle.omega01",
            "The circle calculus returns the de Rham picture: degrees zero and one are the reachable Fourier windows.",
            &params,
            format!("({}, {})", r.oracle[0], r.oracle[1]),
            format!("({}, {})", r.dims[0], r.dims[1]),
            r.omega0_ok && r.omega1_ok,
        ),
        CheckRecord::new(
            "circle.omega2",
            "The circle calculus vanishes in degree two.",
            &params,
            "0",
            r.dims[2].to_string(),
            r.omega2_zero,
        ),
    ])
}

fn theorem_records(prefix: &str, r: &verify::QdsTheoremReport, params: &[(&str, String)]) -> Vec<CheckRecord> {
    vec![
        CheckRecord::new(
            &format!("{prefix}.split"),
            "Represented one-forms of the suspension split as the block sub-span plus the Laurent sub-span, with trivial intersection.",
            params,
            "direct sum",
            if r.split_ok { "direct sum" } else { "split fails" },
            r.split_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.graded_span"),
            "Represented n-forms of the block part decompose as sum_r F^r (base n-r forms) tensor the block algebra.",
            params,
            "equal spans (degrees 0..2)",
            if r.graded_span_ok { "equal spans (degrees 0..2)" } else { "span mismatch" },
            r.graded_span_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.calkin_split"),
            "The block and Laurent sub-spans intersect trivially modulo compacts.",
            params,
            "0",
            if r.calkin_split_ok { "0" } else { "nonzero" },
            r.calkin_split_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.omega1"),
            "dim of degree one for the suspension = (base degree-one dim) * m^2 + dim of the suspended algebra window.",
            params,
            format!(
                "{} * m^2 + {}",
                r.base_omega1_dim, r.window_span_dim
            ),
            r.omega1_dim,
            r.omega1_formula_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.omega2"),
            "dim of degree two for the suspension = (base degree-two dim) * m^2.",
            params,
            format!("{} * m^2", r.base_omega2_dim),
            r.omega2_dim,
            r.omega2_formula_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.delta0"),
            "delta^0 sends a (x) T + f to [D,a] (x) T plus the embedded a (x) [N,T] + f'.",
            params,
            "formula holds",
            if r.delta0_ok { "formula holds" } else { "mismatch" },
            r.delta0_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.delta1"),
            "delta^1 vanishes on the embedded algebra summand.",
            params,
            "0",
            if r.delta1_kills_ok { "0" } else { "nonzero" },
            r.delta1_kills_ok,
        ),
    ]
}

fn suite_qds_theorem(_cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut out = vec![];
    let r = verify::verify_qds_theorem(&TripleSpec::Point, 5, 2, Mode::Bounded)?;
    out.extend(theorem_records(
        "qds.point",
        &r,
        &[("base", "point".to_string()), ("cutoff", "5".to_string()), ("budget", "2".to_string())],
    ));
    let r = verify::verify_qds_theorem(
        &TripleSpec::Circle { window: 6, gen_degree: 1 },
        3,
        2,
        Mode::Calkin,
    )?;
    out.extend(theorem_records(
        "qds.circle",
        &r,
        &[("base", "circle(6,1)".to_string()), ("cutoff", "3".to_string()), ("budget", "2".to_string())],
    ));
    Ok(out)
}

fn suite_iterated(_cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let r = verify::verify_iterated(3, 3, 2)?;
    let params = [("cutoffs", "3,3".to_string()), ("budget", "2".to_string())];
    Ok(vec![
        CheckRecord::new(
            "iterated.omega2",
            "For the twice-suspended point, degree two vanishes: dim = (point degree-two dim) * (m^2)^2 = 0.",
            &params,
            "0",
            r.level2.omega2_dim.to_string(),
            r.level2.omega2_dim == 0 && r.level2.omega2_formula_ok,
        ),
        CheckRecord::new(
            "iterated.three_summands",
            "Degree one carries the three-summand shape, the innermost (point degree-one, doubly tensored) summand being zero.",
            &params,
            "levels pass, innermost = 0",
            format!(
                "level1 {}, level2 {}, innermost {}",
                if r.level1.ok() { "ok" } else { "fail" },
                if r.level2.ok() { "ok" } else { "fail" },
                if r.point_part_zero { "0" } else { "nonzero" }
            ),
            r.ok(),
        ),
    ])
}

fn suite_pauli(_cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let r = verify::verify_pauli(4, 1, 2)?;
    let params = [("base", "circle(4,1)".to_string()), ("budget", "2".to_string())];
    Ok(vec![
        CheckRecord::new(
            "pauli.dims",
            "Doubling by a Pauli matrix leaves every calculus dimension unchanged.",
            &params,
            fmt_dims(&r.circle_dims),
            fmt_dims(&r.doubled_dims),
            r.dims_equal,
        ),
        CheckRecord::new(
            "pauli.f_intersection",
            "After doubling, F A and A intersect trivially.",
            &params,
            "{0}",
            if r.f_intersection_trivial { "{0}" } else { "nonzero" },
            r.f_intersection_trivial,
        ),
    ])
}

fn suite_conditions(_cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let specs: Vec<(&str, TripleSpec)> = vec![
        ("circle(6,1)", TripleSpec::Circle { window: 6, gen_degree: 1 }),
        (
            "qds(circle(6,1), 4)",
            TripleSpec::Circle { window: 6, gen_degree: 1 }.qds_of(4),
        ),
        ("qds(qds(point,4), 4)", TripleSpec::Point.qds_of(4).qds_of(4)),
    ];
    let mut out = vec![];
    for (label, spec) in specs {
        let checks = verify::verify_condition_a(&spec)?;
        let pass = checks.iter().all(|(_, ok)| *ok);
        out.push(CheckRecord::new(
            &format!("condition_a.{}", label.replace([' ', '(', ')', ','], "_")),
            "The commutator of [D,a] with F is compact for every algebra generator, and the property persists under suspension.",
            &[("triple", label.to_string())],
            "compact for all generators",
            if pass {
                "compact for all generators".to_string()
            } else {
                let bad: Vec<&str> = checks
                    .iter()
                    .filter(|(_, ok)| !ok)
                    .map(|(l, _)| l.as_str())
                    .collect();
                format!("fails for {}", bad.join(", "))
            },
            pass,
        ));
    }
    Ok(out)
}

/// Deterministic pseudo-random scalars for the injectivity probe.
struct Lcg(u64);

impl Lcg {
    fn next_small(&mut self) -> Scalar {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let v = ((self.0 >> 33) % 7) as i64 - 3;
        Scalar::from_int(v)
    }
}

fn random_hermitian_omega(
    calc: &Calculus,
    proj: &Projection,
    rng: &mut Lcg,
) -> Result<Vec<Vec<SparseVec>>> {
    let n = proj.size();
    let qdim = calc.tower[1].quotient_dim();
    let mut raw = vec![vec![SparseVec::new(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut v = SparseVec::new();
            for k in 0..qdim.min(4) {
                v.add_to(k, rng.next_small());
            }
            // hermitize: omega_ji = omega_ij adjoint
            raw[i][j] = v.clone();
            raw[j][i] = calc.adj1(&v)?;
        }
    }
    Ok(raw)
}

fn lift_records(
    prefix: &str,
    base: &Calculus,
    upper: &Calculus,
    conn: &Connection,
    params: &[(&str, String)],
) -> Result<Vec<CheckRecord>> {
    let r = crate::conn::verify_lift(base, upper, conn)?;
    Ok(vec![
        CheckRecord::new(
            &format!("{prefix}.leibniz"),
            "nabla(xi a) = nabla(xi) a + xi (x) da on the module generators, before and after the lift.",
            params,
            "holds",
            if r.leibniz_ok && r.lifted_leibniz_ok { "holds" } else { "fails" },
            r.leibniz_ok && r.lifted_leibniz_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.compatibility"),
            "<xi, nabla zeta> - <nabla xi, zeta> = d<xi, zeta> on the module generators, before and after the lift.",
            params,
            "holds",
            if r.compatibility_ok && r.lifted_compatibility_ok { "holds" } else { "fails" },
            r.compatibility_ok && r.lifted_compatibility_ok,
        ),
        CheckRecord::new(
            &format!("{prefix}.grassmannian"),
            "The lift of the Grassmannian connection is the Grassmannian connection of the lifted module.",
            params,
            "preserved",
            if r.grassmannian_preserved { "preserved" } else { "differs" },
            r.grassmannian_preserved,
        ),
        CheckRecord::new(
            &format!("{prefix}.curvature"),
            "curvature(lift nabla) equals the embedded curvature(nabla), exactly.",
            params,
            "commutes",
            if r.curvature_commutes { "commutes" } else { "differs" },
            r.curvature_commutes,
        ),
    ])
}

fn suite_connections(_cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut out = vec![];

    // Bott-type projection over the circle, lifted one suspension level
    let circle = Triple::build(TripleSpec::Circle { window: 4, gen_degree: 1 })?;
    let upper_t = Triple::build(TripleSpec::Circle { window: 4, gen_degree: 1 }.qds_of(3))?;
    let base = Calculus::new(&circle, Mode::Calkin, 2)?;
    let upper = Calculus::new(&upper_t, Mode::Calkin, 2)?;
    let p = bott_projection(&circle)?;
    let g = crate::oper::Op::circle_monomial(&circle.layer, 1, Scalar::one())?
        .add(&crate::oper::Op::circle_monomial(&circle.layer, -1, Scalar::one())?);
    let gcls = base.tower[1].project(&g.coords(&circle.layer, Mode::Calkin))?;
    let raw = vec![vec![gcls.clone(), SparseVec::new()], vec![SparseVec::new(), gcls]];
    let conn = Connection::perturbed(&base, p.clone(), raw)?;
    out.extend(lift_records(
        "connection.bott",
        &base,
        &upper,
        &conn,
        &[("base", "circle(4,1)".to_string()), ("cutoff", "3".to_string())],
    )?);

    // injectivity of the connection lift on random Hermitian pairs
    let mut rng = Lcg(0x5eed);
    let mut injective = true;
    for _ in 0..5 {
        let raw1 = random_hermitian_omega(&base, &p, &mut rng)?;
        let raw2 = random_hermitian_omega(&base, &p, &mut rng)?;
        let c1 = Connection::perturbed(&base, p.clone(), raw1)?;
        let c2 = Connection::perturbed(&base, p.clone(), raw2)?;
        if c1.omega == c2.omega {
            continue;
        }
        let l1 = lift_connection(&base, &upper, &c1)?;
        let l2 = lift_connection(&base, &upper, &c2)?;
        if l1.omega == l2.omega {
            injective = false;
        }
    }
    out.push(CheckRecord::new(
        "connection.lift_injective",
        "Distinct connections lift to distinct connections.",
        &[("pairs", "5".to_string())],
        "injective",
        if injective { "injective" } else { "collision" },
        injective,
    ));

    // corner projection over the block-suspension algebra
    let toep = Triple::build(TripleSpec::Point.qds_of(3))?;
    let upper_t = Triple::build(TripleSpec::Point.qds_of(3).qds_of(3))?;
    let base = Calculus::new(&toep, Mode::Bounded, 2)?;
    let upper = Calculus::new(&upper_t, Mode::Bounded, 2)?;
    let p = corner_projection(&toep)?;
    let u = p.entries[0][0].clone();
    let ucls = base.tower[1]
        .project(&u.scale(&Scalar::from_int(2)).coords(&toep.layer, Mode::Bounded))?;
    let conn = Connection::perturbed(&base, p, vec![vec![ucls]])?;
    out.extend(lift_records(
        "connection.corner",
        &base,
        &upper,
        &conn,
        &[("base", "qds(point,3)".to_string()), ("cutoff", "3".to_string())],
    )?);

    Ok(out)
}

type SuiteFn = fn(&RunConfig) -> Result<Vec<CheckRecord>>;

fn suite_fn(name: &str) -> SuiteFn {
    match name {
        "s_calculus" => suite_s_calculus,
        "laurent" => suite_laurent,
        "witnesses" => suite_witnesses,
        "circle" => suite_circle,
        "qds_theorem" => suite_qds_theorem,
        "iterated" => suite_iterated,
        "pauli" => suite_pauli,
        "conditions" => suite_conditions,
        "connections" => suite_connections,
        _ => unreachable!("validated suite name"),
    }
}

/// Run the configured suites (concurrently when jobs > 1; record order is
/// fixed by the suite list, so the report is byte-deterministic).
pub fn run_suite(cfg: &RunConfig, jobs: usize) -> Result<Report> {
    cfg.validate()?;
    let results: Vec<Result<Vec<CheckRecord>>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            cfg.suites.par_iter().map(|s| suite_fn(s)(cfg)).collect()
        })
    } else {
        cfg.suites.iter().map(|s| suite_fn(s)(cfg)).collect()
    };
    let mut checks = vec![];
    for r in results {
        checks.extend(r?);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        tool: "ccalc".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        config_hash: cfg.hash(),
        checks,
        pass,
    })
}

/// Compute the calculus tower for the configured triple and return its
/// JSON description.
pub fn compute_omega(cfg: &RunConfig, degree: usize) -> Result<serde_json::Value> {
    cfg.validate()?;
    let t = Triple::build(cfg.triple_spec())?;
    let basis = AlgebraBasis::new(&t);
    let tower = omega_tower(&basis, Family::Full, cfg.mode.mode(), cfg.word_budget, degree)?;
    let spaces: Vec<serde_json::Value> = tower.iter().map(|s| omega_json(&t, s)).collect();
    Ok(serde_json::json!({
        "config_hash": cfg.hash(),
        "index_base": 0,
        "triple": cfg.triple_spec(),
        "dims": dims(&tower),
        "spaces": spaces,
    }))
}

/// Lift the sample connection over the configured base one suspension
/// level and return the diagram report as JSON.
pub fn compute_lift(cfg: &RunConfig) -> Result<serde_json::Value> {
    cfg.validate()?;
    let (base_t, upper_t, mode) = match cfg.base {
        BaseKind::Circle => {
            let b = TripleSpec::Circle { window: cfg.fourier_window, gen_degree: cfg.gen_degree };
            (b.clone(), b.qds_of(cfg.cutoffs[0]), Mode::Calkin)
        }
        BaseKind::Point => {
            let b = TripleSpec::Point.qds_of(cfg.cutoffs[0]);
            (b.clone(), b.qds_of(cfg.cutoffs[0]), Mode::Bounded)
        }
    };
    let base_triple = Triple::build(base_t)?;
    let upper_triple = Triple::build(upper_t)?;
    let base = Calculus::new(&base_triple, mode, cfg.word_budget.min(2))?;
    let upper = Calculus::new(&upper_triple, mode, cfg.word_budget.min(2))?;
    let p = match cfg.base {
        BaseKind::Circle => bott_projection(&base_triple)?,
        BaseKind::Point => corner_projection(&base_triple)?,
    };
    let conn = Connection::grassmannian(p);
    let r = crate::conn::verify_lift(&base, &upper, &conn)?;
    let lifted = lift_connection(&base, &upper, &conn)?;
    let curv = lifted.curvature(&upper)?;
    let curv_json: Vec<Vec<serde_json::Value>> =
        curv.iter().map(|row| row.iter().map(vec_json).collect()).collect();
    Ok(serde_json::json!({
        "config_hash": cfg.hash(),
        "index_base": 0,
        "module_rank": conn.proj.size(),
        "leibniz": r.leibniz_ok && r.lifted_leibniz_ok,
        "compatibility": r.compatibility_ok && r.lifted_compatibility_ok,
        "grassmannian_preserved": r.grassmannian_preserved,
        "curvature_commutes": r.curvature_commutes,
        "lifted_curvature": curv_json,
    }))
}
