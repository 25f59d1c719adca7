//! Universal graded forms over a spanning set.
//!
//! A form of degree n is a combination of words (i0, i1, ..., in) standing
//! for b_{i0} d(b_{i1}) ... d(b_{in}), the b's indexing the triple's
//! spanning set. Index 0 is the unit and may only occupy the leading slot
//! (differential slots are reduced modulo the unit: d1 = 0). The universal
//! differential prepends a unit slot; products follow the graded Leibniz
//! expansion, re-expanding merged slots in the spanning basis.

pub mod pipeline;
pub mod verify;
pub mod witness;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exact::{Scalar, SparseVec, TrackedEchelon};
use crate::oper::{Mode, Op};
use crate::triple::Triple;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FormExpr {
    degree: usize,
    /// sorted by word, coefficients nonzero
    terms: Vec<(Scalar, Vec<usize>)>,
}

impl FormExpr {
    pub fn zero(degree: usize) -> FormExpr {
        FormExpr { degree, terms: vec![] }
    }

    pub fn word(word: Vec<usize>) -> FormExpr {
        assert!(!word.is_empty());
        FormExpr::from_terms(word.len() - 1, vec![(Scalar::one(), word)])
    }

    pub fn from_terms(degree: usize, terms: Vec<(Scalar, Vec<usize>)>) -> FormExpr {
        let mut map: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
        for (c, w) in terms {
            assert_eq!(w.len(), degree + 1, "word length must be degree + 1");
            assert!(
                w.iter().skip(1).all(|i| *i != 0),
                "unit in a differential slot"
            );
            if c.is_zero() {
                continue;
            }
            match map.remove(&w) {
                None => {
                    map.insert(w, c);
                }
                Some(old) => {
                    let s = old + c;
                    if !s.is_zero() {
                        map.insert(w, s);
                    }
                }
            }
        }
        FormExpr { degree, terms: map.into_iter().map(|(w, c)| (c, w)).collect() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Scalar, Vec<usize>)] {
        &self.terms
    }

    pub fn scale(&self, c: &Scalar) -> FormExpr {
        FormExpr::from_terms(
            self.degree,
            self.terms.iter().map(|(k, w)| (c * k, w.clone())).collect(),
        )
    }

    pub fn add(&self, other: &FormExpr) -> FormExpr {
        assert_eq!(self.degree, other.degree);
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        FormExpr::from_terms(self.degree, t)
    }

    pub fn sub(&self, other: &FormExpr) -> FormExpr {
        self.add(&other.scale(&(-Scalar::one())))
    }

    /// Universal differential: d(b0 (x) b1... ) = 1 (x) b0 (x) b1 ...,
    /// with the leading slot reduced modulo the unit (so words led by the
    /// unit die).
    pub fn d(&self) -> FormExpr {
        let terms = self
            .terms
            .iter()
            .filter(|(_, w)| w[0] != 0)
            .map(|(c, w)| {
                let mut nw = Vec::with_capacity(w.len() + 1);
                nw.push(0);
                nw.extend_from_slice(w);
                (c.clone(), nw)
            })
            .collect();
        FormExpr::from_terms(self.degree + 1, terms)
    }
}

/// Expansion of algebra elements (operators) over the triple's spanning
/// basis, backed by a tracked echelon of bounded coordinates.
pub struct AlgebraBasis<'t> {
    pub triple: &'t Triple,
    solver: TrackedEchelon,
}

impl<'t> AlgebraBasis<'t> {
    pub fn new(triple: &'t Triple) -> AlgebraBasis<'t> {
        let mut solver = TrackedEchelon::new(triple.layer.dim(Mode::Bounded));
        for e in triple.elems().iter() {
            solver.insert(e.op.coords(&triple.layer, Mode::Bounded));
        }
        AlgebraBasis { triple, solver }
    }

    /// Expand an operator in the spanning basis.
    pub fn expand(&self, op: &Op) -> Result<SparseVec> {
        self.solver
            .express(&op.coords(&self.triple.layer, Mode::Bounded))
            .ok_or_else(|| {
                Error::BudgetExceeded("operator product escapes the spanning window".into())
            })
    }

    fn elem_op(&self, i: usize) -> &Op {
        &self.triple.elems()[i].op
    }

    /// Product of two spanning elements expanded in the basis.
    fn slot_product(&self, i: usize, j: usize) -> Result<SparseVec> {
        let p = self.elem_op(i).mul(self.elem_op(j), &self.triple.layer)?;
        self.expand(&p)
    }

    /// Graded product of forms. For x = a0 da1 ... da_m and
    /// y = b0 db1 ... db_n:
    ///   x y = a0 da1 ... d(a_m b0) db1 ...
    ///       + sum_{i=1}^{m-1} (-1)^i a0 ... d(a_{m-i} a_{m-i+1}) ... da_m db0 ...
    ///       + (-1)^m (a0 a1) da2 ... da_m db0 db1 ...
    /// Merged differential slots are reduced modulo the unit.
    pub fn product(&self, x: &FormExpr, y: &FormExpr) -> Result<FormExpr> {
        let degree = x.degree + y.degree;
        let mut out: Vec<(Scalar, Vec<usize>)> = vec![];
        for (cx, a) in &x.terms {
            for (cy, b) in &y.terms {
                let c = cx * cy;
                let m = x.degree;
                if m == 0 {
                    // plain left multiplication into the leading slot
                    let exp = self.slot_product(a[0], b[0])?;
                    for (k, ck) in exp.iter() {
                        let mut w = Vec::with_capacity(b.len());
                        w.push(*k);
                        w.extend_from_slice(&b[1..]);
                        out.push((&c * ck, w));
                    }
                    continue;
                }
                // group 1: merge a_m with b0 into a differential slot
                let exp = self.slot_product(a[m], b[0])?;
                for (k, ck) in exp.iter() {
                    if *k == 0 {
                        continue;
                    }
                    let mut w = Vec::with_capacity(degree + 1);
                    w.extend_from_slice(&a[..m]);
                    w.push(*k);
                    w.extend_from_slice(&b[1..]);
                    out.push((&c * ck, w));
                }
                // middle and last groups carry a db0 factor, which dies
                // when b0 is the unit
                if b[0] == 0 {
                    continue;
                }
                // middle groups: merge a_{m-i} a_{m-i+1}, keep db0
                for i in 1..m {
                    let sign = if i % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                    let exp = self.slot_product(a[m - i], a[m - i + 1])?;
                    for (k, ck) in exp.iter() {
                        if *k == 0 {
                            continue;
                        }
                        let mut w = Vec::with_capacity(degree + 1);
                        w.extend_from_slice(&a[..m - i]);
                        w.push(*k);
                        w.extend_from_slice(&a[m - i + 2..]);
                        w.extend_from_slice(b);
                        out.push((&(&c * ck) * &sign, w));
                    }
                }
                // last group: merge a0 a1 into the leading slot
                let sign = if m % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                let exp = self.slot_product(a[0], a[1])?;
                for (k, ck) in exp.iter() {
                    let mut w = Vec::with_capacity(degree + 1);
                    w.push(*k);
                    w.extend_from_slice(&a[2..]);
                    w.extend_from_slice(b);
                    out.push((&(&c * ck) * &sign, w));
                }
            }
        }
        Ok(FormExpr::from_terms(degree, out))
    }

    /// Involution: (a0 da1 ... dan)* = (-1)^n d(an*) ... d(a1*) a0*.
    pub fn adjoint(&self, x: &FormExpr) -> Result<FormExpr> {
        let n = x.degree;
        let mut out = FormExpr::zero(n);
        for (c, w) in &x.terms {
            // build right-to-left as a product of 1-forms
            let star = |i: usize| -> Result<FormExpr> {
                // a* expanded as a 0-form
                let exp = self.expand(&self.elem_op(i).adjoint(&self.triple.layer))?;
                Ok(FormExpr::from_terms(
                    0,
                    exp.iter().map(|(k, ck)| (ck.clone(), vec![*k])).collect(),
                ))
            };
            let mut acc: Option<FormExpr> = None;
            for j in (1..=n).rev() {
                let dsj = star(w[j])?.d();
                acc = Some(match acc {
                    None => dsj,
                    Some(a) => self.product(&a, &dsj)?,
                });
            }
            let a0s = star(w[0])?;
            let total = match acc {
                None => a0s,
                Some(a) => self.product(&a, &a0s)?,
            };
            let sign = if n % 2 == 0 { c.conj() } else { -c.conj() };
            out = out.add(&total.scale(&sign));
        }
        Ok(out)
    }

    /// Represent a form on the Hilbert space:
    /// pi(b0 d b1 ... d bn) = b0 [D,b1] ... [D,bn].
    pub fn pi_op(&self, x: &FormExpr) -> Result<Op> {
        let layer = &self.triple.layer;
        let mut acc = Op::zero(layer);
        for (c, w) in &x.terms {
            let mut p = self.elem_op(w[0]).clone();
            for i in &w[1..] {
                let di = self.elem_op(*i).d_commutator(layer)?;
                p = p.mul(&di, layer)?;
            }
            acc = acc.add(&p.scale(c));
        }
        Ok(acc)
    }

    pub fn pi_coords(&self, x: &FormExpr, mode: Mode) -> Result<SparseVec> {
        Ok(self.pi_op(x)?.coords(&self.triple.layer, mode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triple::TripleSpec;
    use proptest::prelude::*;

    fn toeplitz() -> Triple {
        Triple::build(TripleSpec::Point.qds_of(5)).unwrap()
    }

    #[test]
    fn d_squared_is_zero() {
        let x = FormExpr::word(vec![3, 2, 7]);
        assert!(x.d().d().is_zero());
        let y = FormExpr::word(vec![0, 2]);
        assert!(y.d().is_zero());
    }

    #[test]
    fn product_degree_zero_example() {
        // (a db)(c) = a d(bc) - (ab) dc
        let t = toeplitz();
        let basis = AlgebraBasis::new(&t);
        // a = e_{0,1}, b = e_{1,2}, c = e_{2,2}: indices via the helper
        let a = t.fin_index(0, 1, 0).unwrap();
        let b = t.fin_index(1, 2, 0).unwrap();
        let c = t.fin_index(2, 2, 0).unwrap();
        let x = FormExpr::word(vec![a, b]);
        let y = FormExpr::word(vec![c]);
        let p = basis.product(&x, &y).unwrap();
        // bc = e_{1,2}, ab = e_{0,2}
        let bc = t.fin_index(1, 2, 0).unwrap();
        let ab = t.fin_index(0, 2, 0).unwrap();
        let expect = FormExpr::word(vec![a, bc])
            .sub(&FormExpr::word(vec![ab, c]));
        assert_eq!(p, expect);
    }

    #[test]
    fn pi_is_multiplicative_on_products() {
        let t = toeplitz();
        let basis = AlgebraBasis::new(&t);
        let l = t.band_index(1).unwrap();
        let ls = t.band_index(-1).unwrap();
        let e01 = t.fin_index(0, 1, 0).unwrap();
        let forms = [
            FormExpr::word(vec![l, ls]),
            FormExpr::word(vec![ls, l]),
            FormExpr::word(vec![e01, l]),
            FormExpr::word(vec![0, ls]),
            FormExpr::word(vec![l]),
            FormExpr::word(vec![e01]),
        ];
        let layer = &t.layer;
        for x in &forms {
            for y in &forms {
                let (Ok(p), Ok(px), Ok(py)) =
                    (basis.product(x, y), basis.pi_op(x), basis.pi_op(y))
                else {
                    continue;
                };
                let lhs = basis.pi_op(&p).unwrap();
                let rhs = px.mul(&py, layer).unwrap();
                assert_eq!(lhs, rhs, "pi not multiplicative on {x:?} * {y:?}");
            }
        }
    }

    #[test]
    fn adjoint_is_involutive_and_pi_compatible() {
        let t = toeplitz();
        let basis = AlgebraBasis::new(&t);
        let l = t.band_index(1).unwrap();
        let e12 = t.fin_index(1, 2, 0).unwrap();
        for x in [
            FormExpr::word(vec![e12, l]),
            FormExpr::word(vec![l, e12]).scale(&Scalar::i()),
            FormExpr::word(vec![0, l]),
        ] {
            let xs = basis.adjoint(&x).unwrap();
            assert_eq!(basis.adjoint(&xs).unwrap(), x);
            // pi(x*) = pi(x)* since [D, a]* = -[D, a*] pairs with the sign
            let lhs = basis.pi_op(&xs).unwrap();
            let rhs = basis.pi_op(&x).unwrap().adjoint(&t.layer);
            assert_eq!(lhs, rhs);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn graded_leibniz(
            iw in proptest::collection::vec(1usize..20, 1..3),
            jw in proptest::collection::vec(1usize..20, 1..3),
        ) {
            // d(xy) = dx y + (-1)^|x| x dy on random words
            let t = toeplitz();
            let basis = AlgebraBasis::new(&t);
            let x = FormExpr::word(iw);
            let y = FormExpr::word(jw);
            let (Ok(xy), Ok(dx_y)) = (basis.product(&x, &y), basis.product(&x.d(), &y)) else {
                return Ok(());
            };
            let Ok(x_dy) = basis.product(&x, &y.d()) else { return Ok(()); };
            let sign = if x.degree() % 2 == 0 { Scalar::one() } else { -Scalar::one() };
            let lhs = xy.d();
            let rhs = dx_y.add(&x_dy.scale(&sign));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
