//! Exact linear algebra over the Gaussian rationals.
//!
//! Everything downstream (operator coordinates, span/junk elimination,
//! quotient dimensions) reduces to row echelon computations over Q(i).
//! No floating point anywhere; subspaces are kept in reduced row echelon
//! form so that equality of subspaces is equality of data.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A Gaussian rational a + bi with exact rational parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    pub re: BigRational,
    pub im: BigRational,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        Scalar { re: BigRational::one(), im: BigRational::zero() }
    }

    pub fn i() -> Self {
        Scalar { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Scalar { re: BigRational::from_integer(BigInt::from(n)), im: BigRational::zero() }
    }

    /// num/den as a real rational; panics on den == 0.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Scalar { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Multiplicative inverse; panics on zero (callers guard).
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero scalar");
        let n = &self.re * &self.re + &self.im * &self.im;
        Scalar { re: &self.re / &n, im: -(&self.im / &n) }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        if !self.re.is_zero() {
            write!(f, "{}", self.re)?;
            first = false;
        }
        if !self.im.is_zero() {
            if !first && self.im.is_positive() {
                write!(f, "+")?;
            }
            if self.im == BigRational::one() {
                write!(f, "i")?;
            } else if self.im == -BigRational::one() {
                write!(f, "-i")?;
            } else {
                write!(f, "{}i", self.im)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -self.re, im: -self.im }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        Scalar {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl<'a> Mul<&'a Scalar> for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        &self * rhs
    }
}

impl<'a> Mul<Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        self * &rhs
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self * &rhs.inv()
    }
}

/// Sparse vector with a fixed ambient dimension implied by context.
/// Invariant: stored entries are nonzero.
#[derive(Clone, PartialEq, Eq, Default, Serialize)]
pub struct SparseVec {
    entries: BTreeMap<usize, Scalar>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec { entries: BTreeMap::new() }
    }

    pub fn unit(idx: usize) -> Self {
        let mut v = SparseVec::new();
        v.set(idx, Scalar::one());
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: usize) -> Scalar {
        self.entries.get(&idx).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn set(&mut self, idx: usize, c: Scalar) {
        if c.is_zero() {
            self.entries.remove(&idx);
        } else {
            self.entries.insert(idx, c);
        }
    }

    pub fn add_to(&mut self, idx: usize, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.entries.remove(&idx) {
            None => {
                self.entries.insert(idx, c);
            }
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.entries.insert(idx, s);
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &Scalar)> {
        self.entries.iter()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Smallest index with a nonzero entry.
    pub fn leading(&self) -> Option<usize> {
        self.entries.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn scale(&self, c: &Scalar) -> SparseVec {
        if c.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self.entries.iter().map(|(k, v)| (*k, c * v)).collect(),
        }
    }

    /// self += c * other
    pub fn add_scaled(&mut self, c: &Scalar, other: &SparseVec) {
        if c.is_zero() {
            return;
        }
        for (k, v) in other.entries.iter() {
            self.add_to(*k, c * v);
        }
    }

    /// Shift every index by `offset` (used to build block vectors).
    pub fn shifted(&self, offset: usize) -> SparseVec {
        SparseVec {
            entries: self.entries.iter().map(|(k, v)| (k + offset, v.clone())).collect(),
        }
    }

    /// Restrict to indices in [lo, hi) and re-base them at 0.
    pub fn window(&self, lo: usize, hi: usize) -> SparseVec {
        SparseVec {
            entries: self
                .entries
                .range(lo..hi)
                .map(|(k, v)| (k - lo, v.clone()))
                .collect(),
        }
    }
}

impl fmt::Debug for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

/// Incremental row echelon accumulator. Rows are kept with unit leading
/// coefficient, keyed by pivot column. Incoming vectors are reduced
/// against all existing pivots before insertion, so pivots are distinct.
#[derive(Clone)]
pub struct Echelon {
    ambient: usize,
    rows: BTreeMap<usize, SparseVec>,
}

impl Echelon {
    pub fn new(ambient: usize) -> Self {
        Echelon { ambient, rows: BTreeMap::new() }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce v against the current rows (clears all pivot columns).
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        // Walk pivots present in v's support, in increasing order; each
        // elimination can only introduce indices larger than the pivot.
        loop {
            let mut acted = false;
            let keys: Vec<usize> = v
                .entries
                .keys()
                .filter(|k| self.rows.contains_key(k))
                .copied()
                .collect();
            for k in keys {
                let c = v.get(k);
                if c.is_zero() {
                    continue;
                }
                let row = &self.rows[&k];
                v.add_scaled(&(-c), row);
                acted = true;
            }
            if !acted {
                return v;
            }
        }
    }

    /// Insert a vector, returning its pivot column if it increased the rank.
    pub fn insert(&mut self, v: SparseVec) -> Option<usize> {
        let v = self.reduce(v);
        let pivot = v.leading()?;
        if let Some(m) = v.max_index() {
            assert!(m < self.ambient, "vector exceeds ambient dimension");
        }
        let lead = v.get(pivot);
        let v = v.scale(&lead.inv());
        self.rows.insert(pivot, v);
        Some(pivot)
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).is_zero()
    }

    /// Full back substitution: canonical RREF subspace.
    pub fn into_subspace(mut self) -> Subspace {
        let pivots: Vec<usize> = self.rows.keys().copied().collect();
        for i in (0..pivots.len()).rev() {
            let p = pivots[i];
            let row = self.rows.remove(&p).unwrap();
            for q in pivots.iter().take(i) {
                let r = self.rows.get_mut(q).unwrap();
                let c = r.get(p);
                if !c.is_zero() {
                    r.add_scaled(&(-c), &row);
                }
            }
            self.rows.insert(p, row);
        }
        Subspace {
            ambient: self.ambient,
            pivots,
            rows: self.rows.into_values().collect(),
        }
    }
}

/// A subspace of Q(i)^ambient in reduced row echelon form.
/// Two values are equal iff they are the same subspace.
#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct Subspace {
    ambient: usize,
    pivots: Vec<usize>,
    rows: Vec<SparseVec>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} of {})", self.dim(), self.ambient)
    }
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, pivots: vec![], rows: vec![] }
    }

    pub fn from_vectors<I: IntoIterator<Item = SparseVec>>(ambient: usize, vecs: I) -> Self {
        let mut e = Echelon::new(ambient);
        for v in vecs {
            e.insert(v);
        }
        e.into_subspace()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn to_echelon(&self) -> Echelon {
        Echelon {
            ambient: self.ambient,
            rows: self.pivots.iter().copied().zip(self.rows.iter().cloned()).collect(),
        }
    }

    pub fn contains_vec(&self, v: &SparseVec) -> bool {
        self.to_echelon().contains(v)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        other.rows.iter().all(|r| self.contains_vec(r))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch { expected: self.ambient, got: other.ambient });
        }
        let mut e = self.to_echelon();
        for r in &other.rows {
            e.insert(r.clone());
        }
        Ok(e.into_subspace())
    }

    /// Zassenhaus: echelonize [a|a] for a in self and [b|0] for b in other;
    /// rows with pivot in the right block span the intersection.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch { expected: self.ambient, got: other.ambient });
        }
        let n = self.ambient;
        let mut e = Echelon::new(2 * n);
        for a in &self.rows {
            let mut v = a.clone();
            v.add_scaled(&Scalar::one(), &a.shifted(n));
            e.insert(v);
        }
        for b in &other.rows {
            e.insert(b.clone());
        }
        let mut out = Echelon::new(n);
        for (p, row) in e.rows {
            if p >= n {
                out.insert(row.window(n, 2 * n));
            }
        }
        Ok(out.into_subspace())
    }

    /// dim(self / other); other must be contained in self.
    pub fn quotient_dim(&self, other: &Subspace) -> Result<usize> {
        if !self.contains(other) {
            return Err(Error::NotInSubspace);
        }
        Ok(self.dim() - other.dim())
    }
}

/// Tracked echelon: remembers how each echelon row was formed from the
/// inserted vectors, enabling `express` (solve for a combination) and
/// kernel extraction.
pub struct TrackedEchelon {
    ambient: usize,
    inserted: usize,
    /// pivot -> (row, combo over inserted-vector indices)
    rows: BTreeMap<usize, (SparseVec, SparseVec)>,
    /// combos of inserted vectors that reduced to zero
    kernel: Vec<SparseVec>,
}

impl TrackedEchelon {
    pub fn new(ambient: usize) -> Self {
        TrackedEchelon { ambient, inserted: 0, rows: BTreeMap::new(), kernel: vec![] }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    fn reduce_tracked(&self, mut v: SparseVec, mut combo: SparseVec) -> (SparseVec, SparseVec) {
        loop {
            let mut acted = false;
            let keys: Vec<usize> = v
                .entries
                .keys()
                .filter(|k| self.rows.contains_key(k))
                .copied()
                .collect();
            for k in keys {
                let c = v.get(k);
                if c.is_zero() {
                    continue;
                }
                let (row, rc) = &self.rows[&k];
                let neg = -c;
                v.add_scaled(&neg, row);
                combo.add_scaled(&neg, rc);
                acted = true;
            }
            if !acted {
                return (v, combo);
            }
        }
    }

    /// Insert vector number `self.inserted()`; returns true if rank grew.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let idx = self.inserted;
        self.inserted += 1;
        let (v, combo) = self.reduce_tracked(v, SparseVec::unit(idx));
        match v.leading() {
            None => {
                self.kernel.push(combo);
                false
            }
            Some(p) => {
                if let Some(m) = v.max_index() {
                    assert!(m < self.ambient, "vector exceeds ambient dimension");
                }
                let lead = v.get(p).inv();
                self.rows.insert(p, (v.scale(&lead), combo.scale(&lead)));
                true
            }
        }
    }

    /// Write `target` as a combination of the inserted vectors, if possible.
    /// Returns coefficients indexed by insertion order.
    pub fn express(&self, target: &SparseVec) -> Option<SparseVec> {
        let (v, combo) = self.reduce_tracked(target.clone(), SparseVec::new());
        if v.is_zero() {
            Some(combo.scale(&(-Scalar::one())))
        } else {
            None
        }
    }

    /// Combinations of inserted vectors mapping to zero, as found so far.
    pub fn kernel_combos(&self) -> &[SparseVec] {
        &self.kernel
    }
}

/// Kernel of the map e_i -> rows[i], as a subspace of Q(i)^rows.len().
pub fn kernel(ambient: usize, rows: &[SparseVec]) -> Subspace {
    let mut t = TrackedEchelon::new(ambient);
    for r in rows {
        t.insert(r.clone());
    }
    Subspace::from_vectors(rows.len(), t.kernel.iter().cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sc(n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(n, d)
    }

    fn vec_of(entries: &[(usize, i64)]) -> SparseVec {
        let mut v = SparseVec::new();
        for (i, c) in entries {
            v.add_to(*i, Scalar::from_int(*c));
        }
        v
    }

    #[test]
    fn scalar_field_ops() {
        let a = Scalar { re: sc(1, 2).re, im: sc(3, 1).re };
        let b = Scalar { re: sc(-2, 3).re, im: sc(1, 5).re };
        let prod = &a * &b;
        let back = prod / b.clone();
        assert_eq!(back, a);
        assert_eq!(a.clone() * a.inv(), Scalar::one());
        assert_eq!((a.conj()).conj(), a);
        assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
    }

    #[test]
    fn scalar_display() {
        assert_eq!(Scalar::zero().to_string(), "0");
        assert_eq!(Scalar::from_int(-2).to_string(), "-2");
        assert_eq!(Scalar::i().to_string(), "i");
        let z = Scalar::from_int(1) + Scalar::i().scale_test(-2);
        assert_eq!(z.to_string(), "1-2i");
        assert_eq!(Scalar::from_ratio(3, 2).to_string(), "3/2");
    }

    impl Scalar {
        fn scale_test(&self, n: i64) -> Scalar {
            self * &Scalar::from_int(n)
        }
    }

    #[test]
    fn echelon_basic_rank() {
        let mut e = Echelon::new(3);
        assert!(e.insert(vec_of(&[(0, 1), (1, 2)])).is_some());
        assert!(e.insert(vec_of(&[(1, 1), (2, 1)])).is_some());
        // dependent on the first two
        assert!(e.insert(vec_of(&[(0, 1), (1, 3), (2, 1)])).is_none());
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn subspace_canonical_equality() {
        // Same plane from different spanning sets.
        let s1 = Subspace::from_vectors(3, vec![vec_of(&[(0, 1), (2, 1)]), vec_of(&[(1, 1)])]);
        let s2 = Subspace::from_vectors(
            3,
            vec![vec_of(&[(0, 2), (1, 2), (2, 2)]), vec_of(&[(0, 1), (1, -3), (2, 1)])],
        );
        assert_eq!(s1, s2);
        assert_eq!(s1.dim(), 2);
    }

    #[test]
    fn intersection_of_planes_in_q3() {
        // span{e0,e1} ∩ span{e1,e2} = span{e1}  [DERIVED]
        let a = Subspace::from_vectors(3, vec![SparseVec::unit(0), SparseVec::unit(1)]);
        let b = Subspace::from_vectors(3, vec![SparseVec::unit(1), SparseVec::unit(2)]);
        let c = a.intersect(&b).unwrap();
        assert_eq!(c, Subspace::from_vectors(3, vec![SparseVec::unit(1)]));
    }

    #[test]
    fn quotient_dim_and_errors() {
        let big = Subspace::from_vectors(4, (0..3).map(SparseVec::unit));
        let small = Subspace::from_vectors(4, vec![vec_of(&[(0, 1), (1, 1)])]);
        assert_eq!(big.quotient_dim(&small).unwrap(), 2);
        assert!(small.quotient_dim(&big).is_err());
        let other = Subspace::zero(5);
        assert!(big.sum(&other).is_err());
    }

    #[test]
    fn tracked_express_and_kernel() {
        let rows = vec![
            vec_of(&[(0, 1), (1, 1)]),
            vec_of(&[(1, 1), (2, 1)]),
            vec_of(&[(0, 1), (2, -1)]), // row0 - row1
        ];
        let mut t = TrackedEchelon::new(3);
        for r in &rows {
            t.insert(r.clone());
        }
        assert_eq!(t.rank(), 2);
        assert_eq!(t.kernel_combos().len(), 1);
        // target = 2*row0 + row1
        let target = vec_of(&[(0, 2), (1, 3), (2, 1)]);
        let combo = t.express(&target).unwrap();
        let mut rebuilt = SparseVec::new();
        for (i, c) in combo.iter() {
            rebuilt.add_scaled(c, &rows[*i]);
        }
        assert_eq!(rebuilt, target);
        // kernel combo really is in the kernel
        let k = kernel(3, &rows);
        assert_eq!(k.dim(), 1);
        for kc in k.rows() {
            let mut z = SparseVec::new();
            for (i, c) in kc.iter() {
                z.add_scaled(c, &rows[*i]);
            }
            assert!(z.is_zero());
        }
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-6i64..=6, 1i64..=4, -6i64..=6, 1i64..=4).prop_map(|(a, b, c, d)| Scalar {
            re: Scalar::from_ratio(a, b).re,
            im: Scalar::from_ratio(c, d).re,
        })
    }

    fn arb_vec(ambient: usize) -> impl Strategy<Value = SparseVec> {
        proptest::collection::vec((0..ambient, arb_scalar()), 0..6).prop_map(|pairs| {
            let mut v = SparseVec::new();
            for (i, c) in pairs {
                v.add_to(i, c);
            }
            v
        })
    }

    proptest! {
        #[test]
        fn scalar_ring_axioms(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            let ab = &a * &b;
            let ba = &b * &a;
            prop_assert_eq!(ab.clone(), ba);
            let left = &a * &(b.clone() + c.clone());
            let right = (&a * &b) + (&a * &c);
            prop_assert_eq!(left, right);
            if !a.is_zero() {
                prop_assert_eq!(a.clone() * a.inv(), Scalar::one());
            }
        }

        #[test]
        fn span_is_idempotent(vs in proptest::collection::vec(arb_vec(6), 0..8)) {
            let s = Subspace::from_vectors(6, vs.clone());
            // re-spanning the RREF rows gives the identical subspace
            let s2 = Subspace::from_vectors(6, s.rows().iter().cloned());
            prop_assert_eq!(s.clone(), s2);
            // every input vector is contained
            for v in &vs {
                prop_assert!(s.contains_vec(v));
            }
        }

        #[test]
        fn rank_nullity(vs in proptest::collection::vec(arb_vec(5), 0..8)) {
            let mut t = TrackedEchelon::new(5);
            for v in &vs { t.insert(v.clone()); }
            prop_assert_eq!(t.rank() + t.kernel_combos().len(), vs.len());
            let k = kernel(5, &vs);
            prop_assert_eq!(k.dim(), vs.len() - t.rank());
        }

        #[test]
        fn sum_and_intersection_dims(
            xs in proptest::collection::vec(arb_vec(5), 0..5),
            ys in proptest::collection::vec(arb_vec(5), 0..5),
        ) {
            let a = Subspace::from_vectors(5, xs);
            let b = Subspace::from_vectors(5, ys);
            let s = a.sum(&b).unwrap();
            let i = a.intersect(&b).unwrap();
            // modular law for dimensions
            prop_assert_eq!(s.dim() + i.dim(), a.dim() + b.dim());
            prop_assert!(s.contains(&a) && s.contains(&b));
            prop_assert!(a.contains(&i) && b.contains(&i));
        }
    }
}
