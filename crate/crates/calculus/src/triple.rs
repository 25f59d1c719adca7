//! Truncated spectral triples: spanning filtrations of the algebra,
//! generators, and the operator-theoretic conditions used by the
//! suspension results.
//!
//! A triple is described structurally (point, circle, iterated double
//! suspension, Pauli doubling). The algebra is presented through a finite
//! window spanning set; the leading slot of a word may use the whole
//! window while differential slots are filtered by a word budget
//! (`min_budget` below). Sub-families (the finite block a (x) S, the
//! Laurent part) are index subsets of the same spanning set, which is how
//! the non-unital sub-calculi are computed without a separate triple.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exact::{Scalar, Subspace};
use crate::oper::{Layer, Mode, Op};

/// Structural description of a triple; serializable for configs/reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TripleSpec {
    Point,
    Circle { window: i64, gen_degree: i64 },
    Qds { base: Box<TripleSpec>, cutoff: usize },
    Doubled { base: Box<TripleSpec> },
}

impl TripleSpec {
    pub fn qds_of(self, cutoff: usize) -> TripleSpec {
        TripleSpec::Qds { base: Box::new(self), cutoff }
    }
}

/// Which part of the algebra a spanning element belongs to (meaningful on
/// suspension layers; everything below is `Base`).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum ElemKind {
    Unit,
    /// b (x) e_pq summand of the top suspension layer
    Fin,
    /// s_d summand (d != 0) of the top suspension layer
    Band,
    /// element of a non-suspension layer
    Base,
}

#[derive(Clone, Debug)]
pub struct SpanElem {
    pub op: Op,
    pub label: String,
    pub kind: ElemKind,
    /// smallest word budget admitting this element in a differential slot
    pub min_budget: usize,
}

/// Word families: which spanning elements may appear in the leading slot
/// and in differential slots of a form.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// whole algebra (unital)
    Full,
    /// the finite-block ideal a (x) S of the top suspension (non-unital)
    FinPart,
    /// the Laurent part spanned by the unit and the shifts (unital)
    BandPart,
}

#[derive(Clone)]
pub struct Alphabet {
    /// full spanning list; index 0 is always the unit of the ambient algebra
    pub elems: Arc<Vec<SpanElem>>,
    /// indices allowed in the leading slot (window filtration)
    pub slot0: Vec<usize>,
    /// indices allowed in differential slots (budget filtration, no unit)
    pub slots: Vec<usize>,
    pub family: Family,
    pub budget: usize,
}

pub struct Triple {
    pub spec: TripleSpec,
    pub layer: Arc<Layer>,
    elems: Arc<Vec<SpanElem>>,
}

fn build_layer(spec: &TripleSpec) -> Arc<Layer> {
    match spec {
        TripleSpec::Point => Layer::point(),
        TripleSpec::Circle { window, gen_degree } => Layer::circle(*window, *gen_degree),
        TripleSpec::Qds { base, cutoff } => {
            Layer::qds(build_layer(base), *cutoff, *cutoff as i64)
        }
        TripleSpec::Doubled { base } => Layer::doubled(build_layer(base)),
    }
}

fn build_elems(spec: &TripleSpec, layer: &Arc<Layer>) -> Result<Vec<SpanElem>> {
    let mut out = vec![SpanElem {
        op: Op::one(layer),
        label: "1".to_string(),
        kind: ElemKind::Unit,
        min_budget: 0,
    }];
    match (spec, &**layer) {
        (TripleSpec::Point, Layer::Point) => {}
        (TripleSpec::Circle { window, gen_degree }, Layer::Circle { .. }) => {
            let mut degs: Vec<i64> = vec![];
            let mut k = *gen_degree;
            while k <= *window {
                degs.push(k);
                degs.push(-k);
                k += gen_degree;
            }
            for k in degs {
                out.push(SpanElem {
                    op: Op::circle_monomial(layer, k, Scalar::one())?,
                    label: format!("z^{}", k),
                    kind: ElemKind::Base,
                    min_budget: (k.abs() / gen_degree) as usize,
                });
            }
        }
        (TripleSpec::Qds { base, cutoff }, Layer::Qds { inner, band, .. }) => {
            let inner_elems = build_elems(base, &Arc::new((**inner).clone()))?;
            for p in 0..*cutoff {
                for q in 0..*cutoff {
                    for b in &inner_elems {
                        out.push(SpanElem {
                            op: Op::qds_fin(layer, p, q, b.op.clone())?,
                            label: format!("{}(x)e[{},{}]", b.label, p, q),
                            kind: ElemKind::Fin,
                            min_budget: b.min_budget.max(1),
                        });
                    }
                }
            }
            let mut ds: Vec<i64> = vec![];
            for d in 1..=*band {
                ds.push(d);
                ds.push(-d);
            }
            for d in ds {
                out.push(SpanElem {
                    op: Op::qds_band(layer, d, Op::one(inner))?,
                    label: format!("s[{}]", d),
                    kind: ElemKind::Band,
                    min_budget: d.unsigned_abs() as usize,
                });
            }
        }
        (TripleSpec::Doubled { base }, Layer::Doubled { inner }) => {
            let inner_elems = build_elems(base, &Arc::new((**inner).clone()))?;
            for b in inner_elems.into_iter().skip(1) {
                out.push(SpanElem {
                    op: Op::doubled_even(b.op),
                    label: format!("{}(x)I2", b.label),
                    kind: b.kind,
                    min_budget: b.min_budget,
                });
            }
        }
        _ => return Err(Error::LayerMismatch("spec/layer mismatch".into())),
    }
    Ok(out)
}

impl Triple {
    pub fn build(spec: TripleSpec) -> Result<Triple> {
        let layer = build_layer(&spec);
        let elems = Arc::new(build_elems(&spec, &layer)?);
        Ok(Triple { spec, layer, elems })
    }

    pub fn elems(&self) -> &Arc<Vec<SpanElem>> {
        &self.elems
    }

    /// Window spanning dimension of a family (the unit counts for the
    /// unital families).
    pub fn family_dim(&self, family: Family) -> usize {
        self.alphabet(family, usize::MAX).slot0.len()
    }

    pub fn alphabet(&self, family: Family, budget: usize) -> Alphabet {
        let keep = |k: ElemKind| match family {
            Family::Full => true,
            Family::FinPart => k == ElemKind::Fin,
            Family::BandPart => k == ElemKind::Band || k == ElemKind::Unit,
        };
        let slot0 = self
            .elems
            .iter()
            .enumerate()
            .filter(|(_, e)| keep(e.kind))
            .map(|(i, _)| i)
            .collect();
        let slots = self
            .elems
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, e)| keep(e.kind) && e.min_budget <= budget)
            .map(|(i, _)| i)
            .collect();
        Alphabet { elems: self.elems.clone(), slot0, slots, family, budget }
    }

    /// Spanning-set index of b_i (x) e_pq on a suspension layer, where i
    /// indexes the inner spanning list (0 = inner unit).
    pub fn fin_index(&self, p: usize, q: usize, inner_idx: usize) -> Result<usize> {
        let TripleSpec::Qds { cutoff, .. } = &self.spec else {
            return Err(Error::LayerMismatch("fin_index on a non-suspension triple".into()));
        };
        let l = self.elems.iter().filter(|e| e.kind == ElemKind::Fin).count()
            / (cutoff * cutoff);
        if p >= *cutoff || q >= *cutoff || inner_idx >= l {
            return Err(Error::WindowOverflow(format!("fin index ({p},{q},{inner_idx})")));
        }
        Ok(1 + (p * cutoff + q) * l + inner_idx)
    }

    /// Spanning-set index of the shift s_d (d != 0) on a suspension layer.
    pub fn band_index(&self, d: i64) -> Result<usize> {
        let TripleSpec::Qds { cutoff, .. } = &self.spec else {
            return Err(Error::LayerMismatch("band_index on a non-suspension triple".into()));
        };
        let a = d.unsigned_abs() as usize;
        if a == 0 || a > *cutoff {
            return Err(Error::WindowOverflow(format!("band index {d}")));
        }
        let n_fin = self.elems.iter().filter(|e| e.kind == ElemKind::Fin).count();
        Ok(1 + n_fin + 2 * (a - 1) + usize::from(d < 0))
    }

    /// Algebra generators (used for the condition checks).
    pub fn generators(&self) -> Result<Vec<(String, Op)>> {
        let mut out = vec![];
        match (&self.spec, &*self.layer) {
            (TripleSpec::Point, _) => {
                out.push(("1".to_string(), Op::one(&self.layer)));
            }
            (TripleSpec::Circle { gen_degree, .. }, _) => {
                for k in [*gen_degree, -*gen_degree] {
                    out.push((
                        format!("z^{}", k),
                        Op::circle_monomial(&self.layer, k, Scalar::one())?,
                    ));
                }
            }
            (TripleSpec::Qds { base, .. }, Layer::Qds { inner, .. }) => {
                let inner_triple = Triple::build((**base).clone())?;
                out.push((
                    "1(x)l".to_string(),
                    Op::qds_band(&self.layer, 1, Op::one(inner))?,
                ));
                out.push((
                    "1(x)l*".to_string(),
                    Op::qds_band(&self.layer, -1, Op::one(inner))?,
                ));
                for (label, g) in inner_triple.generators()? {
                    out.push((
                        format!("{}(x)u", label),
                        Op::qds_fin(&self.layer, 0, 0, g)?,
                    ));
                }
            }
            (TripleSpec::Doubled { base }, _) => {
                let inner_triple = Triple::build((**base).clone())?;
                for (label, g) in inner_triple.generators()? {
                    out.push((format!("{}(x)I2", label), Op::doubled_even(g)));
                }
            }
            _ => unreachable!(),
        }
        Ok(out)
    }

    /// Condition (A): [D,a]F - F[D,a] compact for every generator.
    pub fn check_condition_a(&self) -> Result<Vec<(String, bool)>> {
        let mut out = vec![];
        for (label, g) in self.generators()? {
            let c = g.d_commutator(&self.layer)?;
            let diff = c.mul_f_right(&self.layer).sub(&c.mul_f(&self.layer));
            out.push((label, diff.is_compact(&self.layer)));
        }
        Ok(out)
    }

    /// Whether F A and A intersect trivially inside bounded coordinates
    /// (granted for free by the Pauli doubling).
    pub fn f_intersection_trivial(&self) -> Result<bool> {
        let dim = self.layer.dim(Mode::Bounded);
        let alg = Subspace::from_vectors(
            dim,
            self.elems.iter().map(|e| e.op.coords(&self.layer, Mode::Bounded)),
        );
        let falg = Subspace::from_vectors(
            dim,
            self.elems
                .iter()
                .map(|e| e.op.mul_f(&self.layer).coords(&self.layer, Mode::Bounded)),
        );
        Ok(alg.intersect(&falg)?.dim() == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanning_counts() {
        // circle window 6: unit + 12 monomials
        let c = Triple::build(TripleSpec::Circle { window: 6, gen_degree: 1 }).unwrap();
        assert_eq!(c.elems().len(), 13);
        assert_eq!(c.alphabet(Family::Full, 2).slots.len(), 4);
        // suspension of the point at cutoff 5: unit + 25 matrix units + 10 shifts
        let t = Triple::build(TripleSpec::Point.qds_of(5)).unwrap();
        assert_eq!(t.elems().len(), 36);
        assert_eq!(t.family_dim(Family::FinPart), 25);
        assert_eq!(t.family_dim(Family::BandPart), 11);
        assert_eq!(t.family_dim(Family::Full), 36);
        // non-unital family never allows the unit
        assert!(!t.alphabet(Family::FinPart, 3).slot0.contains(&0));
        assert!(t.alphabet(Family::BandPart, 3).slot0.contains(&0));
    }

    #[test]
    fn condition_a_for_circle_and_suspensions() {
        for spec in [
            TripleSpec::Circle { window: 6, gen_degree: 1 },
            TripleSpec::Circle { window: 6, gen_degree: 1 }.qds_of(4),
            TripleSpec::Point.qds_of(4).qds_of(4),
        ] {
            let t = Triple::build(spec).unwrap();
            for (label, ok) in t.check_condition_a().unwrap() {
                assert!(ok, "condition (A) failed for generator {label}");
            }
        }
    }

    #[test]
    fn f_intersection_doubling() {
        // the Toeplitz triple has F = 1, so F A meets A; the doubled
        // triple separates them structurally
        let t = Triple::build(TripleSpec::Point.qds_of(4)).unwrap();
        assert!(!t.f_intersection_trivial().unwrap());
        let d = Triple::build(TripleSpec::Doubled {
            base: Box::new(TripleSpec::Circle { window: 4, gen_degree: 1 }),
        })
        .unwrap();
        assert!(d.f_intersection_trivial().unwrap());
    }
}
