//! Structural verification of the suspension results: the graded span
//! decomposition, the direct-sum description of the calculus of a double
//! suspension, the induced differentials, its two-fold iteration, and the
//! Pauli-doubling comparison.

use crate::error::Result;
use crate::exact::{Scalar, SparseVec, Subspace};
use crate::forms::pipeline::{delta_columns, omega_tower, OmegaSpace};
use crate::forms::AlgebraBasis;
use crate::oper::{Layer, Mode, Op};
use crate::triple::{ElemKind, Family, Triple, TripleSpec};

fn window_span(t: &Triple, mode: Mode) -> Subspace {
    Subspace::from_vectors(
        t.layer.dim(mode),
        t.elems().iter().map(|e| e.op.coords(&t.layer, mode)),
    )
}

fn subspace_eq(a: &Subspace, b: &Subspace) -> bool {
    a.contains(b) && b.contains(a)
}

/// Graded span identity: represented n-forms of the finite block A (x) S are
/// exactly sum_r F^r pi(Omega^{n-r}(A)) (x) S.
pub fn verify_graded_span(
    base: &TripleSpec,
    cutoff: usize,
    budget: usize,
    mode: Mode,
    max_degree: usize,
) -> Result<Vec<bool>> {
    let t = Triple::build(base.clone().qds_of(cutoff))?;
    let basis = AlgebraBasis::new(&t);
    let inner = Triple::build(base.clone())?;
    let inner_basis = AlgebraBasis::new(&inner);
    let fin_tower = omega_tower(&basis, Family::FinPart, mode, budget, max_degree)?;
    let inner_tower = omega_tower(&inner_basis, Family::Full, mode, budget, max_degree)?;
    let ambient = t.layer.dim(mode);
    let mut out = vec![];
    for n in 0..=max_degree {
        let mut rhs_vecs: Vec<SparseVec> = vec![];
        for r in 0..=n {
            for rep in &inner_tower[n - r].reps {
                let mut x = inner_basis.pi_op(&rep.form)?;
                if r % 2 == 1 {
                    x = x.mul_f(&inner.layer);
                }
                for p in 0..cutoff {
                    for q in 0..cutoff {
                        let op = Op::qds_fin(&t.layer, p, q, x.clone())?;
                        rhs_vecs.push(op.coords(&t.layer, mode));
                    }
                }
            }
        }
        let rhs = Subspace::from_vectors(ambient, rhs_vecs);
        out.push(subspace_eq(&fin_tower[n].pi_span, &rhs));
    }
    Ok(out)
}

#[derive(Debug)]
pub struct QdsTheoremReport {
    pub base_omega1_dim: usize,
    pub base_omega2_dim: usize,
    pub window_span_dim: usize,
    pub omega1_dim: usize,
    pub omega2_dim: usize,
    pub omega1_formula_ok: bool,
    pub omega2_formula_ok: bool,
    pub split_ok: bool,
    /// the two summands together span all of degree one even when the
    /// direct-sum bookkeeping degenerates
    pub summands_span_ok: bool,
    pub delta0_ok: bool,
    pub delta1_kills_ok: bool,
    pub graded_span_ok: bool,
    pub calkin_split_ok: bool,
}

impl QdsTheoremReport {
    pub fn ok(&self) -> bool {
        self.omega1_formula_ok
            && self.omega2_formula_ok
            && self.split_ok
            && self.delta0_ok
            && self.delta1_kills_ok
            && self.graded_span_ok
            && self.calkin_split_ok
    }
}

/// The suspension theorem at one level: the degree-one calculus of the
/// suspended triple splits as (degree-one calculus of the base) (x) S
/// plus a copy of the suspended algebra itself embedded through F, the
/// degree-two calculus is the base one tensored by S, and the induced
/// differentials act as stated.
pub fn verify_qds_theorem(
    base: &TripleSpec,
    cutoff: usize,
    budget: usize,
    mode: Mode,
) -> Result<QdsTheoremReport> {
    let t = Triple::build(base.clone().qds_of(cutoff))?;
    let layer = &t.layer;
    let basis = AlgebraBasis::new(&t);
    let inner = Triple::build(base.clone())?;
    let inner_basis = AlgebraBasis::new(&inner);
    let m2 = cutoff * cutoff;

    let tower = omega_tower(&basis, Family::Full, mode, budget, 2)?;
    let inner_tower = omega_tower(&inner_basis, Family::Full, mode, budget, 2)?;
    let base1 = inner_tower[1].quotient_dim();
    let base2 = inner_tower[2].quotient_dim();
    let span_dim = window_span(&t, mode).dim();
    let omega1 = tower[1].quotient_dim();
    let omega2 = tower[2].quotient_dim();

    // direct-sum split of degree one in quotient coordinates
    let o1 = &tower[1];
    let qdim = o1.quotient_dim();
    let mut s1_vecs = vec![];
    for rep in &inner_tower[1].reps {
        let x = inner_basis.pi_op(&rep.form)?;
        for p in 0..cutoff {
            for q in 0..cutoff {
                let op = Op::qds_fin(layer, p, q, x.clone())?;
                s1_vecs.push(o1.project(&op.coords(layer, mode))?);
            }
        }
    }
    let s1 = Subspace::from_vectors(qdim, s1_vecs);
    let mut s2_vecs = vec![];
    for e in t.elems().iter() {
        let op = e.op.mul_f(layer);
        s2_vecs.push(o1.project(&op.coords(layer, mode))?);
    }
    let s2 = Subspace::from_vectors(qdim, s2_vecs);
    let split_ok = s1.dim() == base1 * m2
        && s2.dim() == span_dim
        && s1.intersect(&s2)?.dim() == 0
        && s1.dim() + s2.dim() == omega1;
    // weaker spanning form of the split, which survives truncations
    // whose algebra window saturates the whole matrix algebra
    let summands_span_ok = s1.sum(&s2)?.dim() == omega1;

    // delta^0 (a (x) T + f -> [D,a] (x) T  (+)  a (x) [N,T] + f'), the
    // second component embedded through F
    let mut delta0_ok = true;
    let project_d = |op: &Op| -> Result<SparseVec> {
        o1.project(&op.d_commutator(layer)?.coords(layer, mode))
    };
    // the unit maps to zero
    if !project_d(&t.elems()[0].op)?.is_zero() {
        delta0_ok = false;
    }
    let inner_len = t.elems().iter().filter(|e| e.kind == ElemKind::Fin).count() / m2;
    for p in 0..cutoff {
        for q in 0..cutoff {
            for i in 0..inner_len {
                let idx = t.fin_index(p, q, i)?;
                let e = &t.elems()[idx];
                let lhs = project_d(&e.op)?;
                // [D,a] (x) e_pq
                let b = if i == 0 {
                    Op::one(inner_layer(layer))
                } else {
                    inner.elems()[i].op.clone()
                };
                let da = b.d_commutator(inner_layer(layer))?;
                let first = Op::qds_fin(layer, p, q, da)?;
                // a (x) [N, e_pq] = (p - q) a (x) e_pq, embedded through F
                let second = e
                    .op
                    .mul_f(layer)
                    .scale(&Scalar::from_int(p as i64 - q as i64));
                let rhs =
                    o1.project(&first.add(&second).coords(layer, mode))?;
                if lhs != rhs {
                    delta0_ok = false;
                }
            }
        }
    }
    // band elements: delta^0(f) = f', the derivative inside the embedded
    // algebra copy, which is exactly the honest commutator
    for e in t.elems().iter().filter(|e| e.kind == ElemKind::Band) {
        let lhs = project_d(&e.op)?;
        let d = band_degree(&e.label);
        let rhs = o1.project(
            &e.op
                .mul_f(layer)
                .scale(&Scalar::from_int(-d))
                .coords(layer, mode),
        )?;
        if lhs != rhs {
            delta0_ok = false;
        }
    }

    // delta^1 vanishes on the embedded algebra copy
    let cols = delta_columns(&tower[1], &tower[2])?;
    let mut delta1_kills_ok = true;
    for e in t.elems().iter() {
        let q = o1.project(&e.op.mul_f(layer).coords(layer, mode))?;
        let mut img = SparseVec::new();
        for (j, c) in q.iter() {
            img.add_scaled(c, &cols[*j]);
        }
        if !img.is_zero() {
            delta1_kills_ok = false;
        }
    }

    let graded_span = verify_graded_span(base, cutoff, budget, mode, 2)?;
    let graded_span_ok = graded_span.iter().all(|b| *b);

    // the finite block and the Laurent part stay disjoint modulo compacts
    let cdim = layer.dim(Mode::Calkin);
    let fin_span = Subspace::from_vectors(
        cdim,
        t.elems()
            .iter()
            .filter(|e| e.kind == ElemKind::Fin)
            .map(|e| e.op.coords(layer, Mode::Calkin)),
    );
    let band_span = Subspace::from_vectors(
        cdim,
        t.elems()
            .iter()
            .filter(|e| e.kind != ElemKind::Fin)
            .map(|e| e.op.coords(layer, Mode::Calkin)),
    );
    let calkin_split_ok = fin_span.intersect(&band_span)?.dim() == 0;

    Ok(QdsTheoremReport {
        base_omega1_dim: base1,
        base_omega2_dim: base2,
        window_span_dim: span_dim,
        omega1_dim: omega1,
        omega2_dim: omega2,
        omega1_formula_ok: omega1 == base1 * m2 + span_dim,
        omega2_formula_ok: omega2 == base2 * m2,
        split_ok,
        summands_span_ok,
        delta0_ok,
        delta1_kills_ok,
        graded_span_ok,
        calkin_split_ok,
    })
}

fn inner_layer(layer: &Layer) -> &Layer {
    match layer {
        Layer::Qds { inner, .. } => inner,
        _ => unreachable!("suspension layer"),
    }
}

fn band_degree(label: &str) -> i64 {
    label
        .trim_start_matches("s[")
        .trim_end_matches(']')
        .parse()
        .expect("band label")
}

pub struct IteratedReport {
    pub level1: QdsTheoremReport,
    pub level2: QdsTheoremReport,
    /// the innermost summand (degree-one calculus of the point, doubly
    /// tensored by S) contributes nothing
    pub point_part_zero: bool,
}

impl IteratedReport {
    pub fn ok(&self) -> bool {
        // At the second level the block window saturates the full matrix
        // algebra, so the degree-one split is only a spanning sum there;
        // everything else of the theorem is still required exactly.
        self.level1.ok()
            && self.level2.summands_span_ok
            && self.level2.omega2_formula_ok
            && self.level2.delta0_ok
            && self.level2.delta1_kills_ok
            && self.level2.graded_span_ok
            && self.level2.calkin_split_ok
            && self.point_part_zero
    }
}

/// Two-fold iteration over the point: the degree-two calculus
/// vanishes and degree one carries the three-summand shape with the
/// innermost summand equal to zero.
pub fn verify_iterated(cut1: usize, cut2: usize, budget: usize) -> Result<IteratedReport> {
    let level1 = verify_qds_theorem(&TripleSpec::Point, cut1, budget, Mode::Bounded)?;
    let level2 = verify_qds_theorem(
        &TripleSpec::Point.qds_of(cut1),
        cut2,
        budget,
        Mode::Bounded,
    )?;
    let point_part_zero = level1.base_omega1_dim == 0
        && level2.omega2_dim == 0
        && level2.base_omega1_dim == level1.window_span_dim;
    Ok(IteratedReport { level1, level2, point_part_zero })
}

pub struct PauliReport {
    pub circle_dims: Vec<usize>,
    pub doubled_dims: Vec<usize>,
    pub dims_equal: bool,
    pub f_intersection_trivial: bool,
}

impl PauliReport {
    pub fn ok(&self) -> bool {
        self.dims_equal && self.f_intersection_trivial
    }
}

/// Pauli doubling leaves every calculus dimension unchanged while forcing
/// F A and A to intersect trivially.
pub fn verify_pauli(window: i64, gen_degree: i64, budget: usize) -> Result<PauliReport> {
    let circle = Triple::build(TripleSpec::Circle { window, gen_degree })?;
    let doubled = Triple::build(TripleSpec::Doubled {
        base: Box::new(TripleSpec::Circle { window, gen_degree }),
    })?;
    let cb = AlgebraBasis::new(&circle);
    let db = AlgebraBasis::new(&doubled);
    let ct = omega_tower(&cb, Family::Full, Mode::Calkin, budget, 2)?;
    let dt = omega_tower(&db, Family::Full, Mode::Calkin, budget, 2)?;
    let circle_dims: Vec<usize> = ct.iter().map(OmegaSpace::quotient_dim).collect();
    let doubled_dims: Vec<usize> = dt.iter().map(OmegaSpace::quotient_dim).collect();
    Ok(PauliReport {
        dims_equal: circle_dims == doubled_dims,
        circle_dims,
        doubled_dims,
        f_intersection_trivial: doubled.f_intersection_trivial()?,
    })
}

/// Independent count of the Fourier monomials reachable by degree-n words
/// on the circle: the leading slot ranges over the whole window, each
/// differential slot over nonzero degrees within the budget, and every
/// prefix sum must stay inside the window.
pub fn circle_monomial_oracle(
    window: i64,
    gen_degree: i64,
    budget: usize,
    degree: usize,
) -> usize {
    let mut reached: std::collections::BTreeSet<i64> = std::collections::BTreeSet::new();
    let slot_max = budget as i64 * gen_degree;
    fn rec(
        k: i64,
        remaining: usize,
        window: i64,
        g: i64,
        slot_max: i64,
        reached: &mut std::collections::BTreeSet<i64>,
    ) {
        if remaining == 0 {
            reached.insert(k);
            return;
        }
        let mut b = g;
        while b <= slot_max {
            for s in [b, -b] {
                if (k + s).abs() <= window {
                    rec(k + s, remaining - 1, window, g, slot_max, reached);
                }
            }
            b += g;
        }
    }
    let mut a = 0;
    while a <= window {
        for s in if a == 0 { vec![0] } else { vec![a, -a] } {
            rec(s, degree, window, gen_degree, slot_max, &mut reached);
        }
        a += gen_degree;
    }
    reached.len()
}

pub struct CircleReport {
    pub dims: Vec<usize>,
    pub oracle: [usize; 2],
    pub omega0_ok: bool,
    pub omega1_ok: bool,
    pub omega2_zero: bool,
}

impl CircleReport {
    pub fn ok(&self) -> bool {
        self.omega0_ok && self.omega1_ok && self.omega2_zero
    }
}

/// The classical circle calculus: degrees zero and one are the reachable
/// Fourier windows, degree two vanishes.
pub fn verify_circle(window: i64, gen_degree: i64, budget: usize) -> Result<CircleReport> {
    let t = Triple::build(TripleSpec::Circle { window, gen_degree })?;
    let basis = AlgebraBasis::new(&t);
    let tower = omega_tower(&basis, Family::Full, Mode::Calkin, budget, 2)?;
    let dims: Vec<usize> = tower.iter().map(OmegaSpace::quotient_dim).collect();
    let oracle = [
        circle_monomial_oracle(window, gen_degree, budget, 0),
        circle_monomial_oracle(window, gen_degree, budget, 1),
    ];
    Ok(CircleReport {
        omega0_ok: dims[0] == oracle[0],
        omega1_ok: dims[1] == oracle[1],
        omega2_zero: dims[2] == 0,
        dims,
        oracle,
    })
}

/// Condition (A) for a triple: [[D, a], F] compact for every generator.
pub fn verify_condition_a(spec: &TripleSpec) -> Result<Vec<(String, bool)>> {
    Triple::build(spec.clone())?.check_condition_a()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qds_theorem_point_base() {
        let r = verify_qds_theorem(&TripleSpec::Point, 4, 2, Mode::Bounded).unwrap();
        assert_eq!(r.base_omega1_dim, 0);
        assert_eq!(r.omega1_dim, r.window_span_dim);
        assert_eq!(r.omega2_dim, 0);
        assert!(r.ok(), "split={} d0={} d1={} span={} calkin={}",
            r.split_ok, r.delta0_ok, r.delta1_kills_ok, r.graded_span_ok, r.calkin_split_ok);
    }

    #[test]
    fn qds_theorem_circle_base() {
        let r = verify_qds_theorem(
            &TripleSpec::Circle { window: 4, gen_degree: 1 },
            3,
            2,
            Mode::Calkin,
        )
        .unwrap();
        assert!(r.ok(), "split={} d0={} d1={} span={} calkin={}",
            r.split_ok, r.delta0_ok, r.delta1_kills_ok, r.graded_span_ok, r.calkin_split_ok);
    }

    #[test]
    fn pauli_doubling_preserves_dims() {
        let r = verify_pauli(4, 1, 2).unwrap();
        assert!(r.ok(), "dims {:?} vs {:?}", r.circle_dims, r.doubled_dims);
    }

    #[test]
    fn circle_matches_monomial_oracle() {
        let r = verify_circle(6, 1, 2).unwrap();
        assert!(r.ok(), "dims {:?} oracle {:?}", r.dims, r.oracle);
        assert_eq!(circle_monomial_oracle(8, 1, 3, 0), 17);
        assert_eq!(circle_monomial_oracle(8, 1, 3, 1), 17);
    }
}
