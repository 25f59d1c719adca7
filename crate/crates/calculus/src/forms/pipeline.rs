//! Represented form spaces: spanning-word enumeration, junk elimination,
//! quotients, and the induced differential.
//!
//! For each degree n the represented span pi(Omega^n) is generated by
//! words b0 [D,b1] ... [D,bn]. The junk at degree n+1 is pi(d ker pi_n),
//! computed with a combined [pi(w) | pi(dw)] echelon: once a row's
//! leading entry falls in the second block, the corresponding
//! combination of words lies in ker pi and its differential image is a
//! junk vector. The calculus space at degree n is the quotient of the
//! represented span by the junk.

use crate::error::{Error, Result};
use crate::exact::{Echelon, Scalar, SparseVec, Subspace, TrackedEchelon};
use crate::forms::{AlgebraBasis, FormExpr};
use crate::oper::{Mode, Op};
use crate::triple::{Alphabet, Family};

/// A basis word of the represented span, kept with its universal form and
/// the coordinates of pi(w) and pi(dw).
pub struct Rep {
    pub form: FormExpr,
    pub pi: SparseVec,
    pub dpi: SparseVec,
}

pub struct OmegaSpace {
    pub degree: usize,
    pub family: Family,
    pub mode: Mode,
    pub budget: usize,
    pub ambient: usize,
    pub pi_span: Subspace,
    pub junk: Subspace,
    pub reps: Vec<Rep>,
    /// echelon over the rep pi vectors (combo indices = rep indices)
    rep_solver: TrackedEchelon,
    /// junk rows first, then rep pi vectors; backs the quotient coordinates
    quot: TrackedEchelon,
    n_junk: usize,
    /// quotient coordinate -> rep index of its canonical representative
    class_reps: Vec<usize>,
    pub word_count: u64,
    pub skipped_words: u64,
}

impl OmegaSpace {
    pub fn quotient_dim(&self) -> usize {
        self.quot.rank() - self.n_junk
    }

    /// Quotient coordinates of the class of a represented vector. The
    /// vector must lie in pi_span + junk.
    pub fn project(&self, v: &SparseVec) -> Result<SparseVec> {
        let combo = self.quot.express(v).ok_or(Error::NotInSubspace)?;
        let mut out = SparseVec::new();
        for (id, c) in combo.iter() {
            if *id < self.n_junk {
                continue;
            }
            // rank-adding rep insertions, in order, are the quotient basis
            let rep_idx = *id - self.n_junk;
            let coord = self
                .class_reps
                .binary_search(&rep_idx)
                .expect("combo references a dependent insertion");
            out.add_to(coord, c.clone());
        }
        Ok(out)
    }

    /// Canonical representative word of a quotient basis class.
    pub fn class_rep(&self, coord: usize) -> &Rep {
        &self.reps[self.class_reps[coord]]
    }

    /// Express a represented vector as a combination of the rep words
    /// (exact, before taking the quotient).
    pub fn rep_combo(&self, v: &SparseVec) -> Result<SparseVec> {
        self.rep_solver.express(v).ok_or(Error::NotInSubspace)
    }

    /// Lift quotient coordinates to the represented span through the
    /// canonical class representatives.
    pub fn section(&self, coords: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, c) in coords.iter() {
            out.add_scaled(c, &self.class_rep(*j).pi);
        }
        out
    }
}

/// Statistics of one enumeration pass.
#[derive(Clone, Copy, Default)]
pub struct WordStats {
    pub count: u64,
    pub skipped: u64,
}

fn subtree_size(branching: usize, depth: usize) -> u64 {
    (branching as u64).saturating_pow(depth as u32)
}

/// Enumerate degree-n words of the alphabet, with their represented
/// operator and the represented operator of their differential. Subtrees
/// whose prefix represents zero (both for pi and pi d) are counted but
/// not visited; subtrees whose prefix product escapes the window are
/// counted as skipped.
pub fn enumerate_words<F>(
    basis: &AlgebraBasis,
    alpha: &Alphabet,
    degree: usize,
    f: &mut F,
) -> Result<WordStats>
where
    F: FnMut(&[usize], &Op, &Op) -> Result<()>,
{
    let layer = &basis.triple.layer;
    let n_elems = alpha.elems.len();
    let mut d_ops: Vec<Option<Op>> = vec![None; n_elems];
    for &i in alpha.slot0.iter().chain(alpha.slots.iter()) {
        if d_ops[i].is_none() {
            d_ops[i] = Some(alpha.elems[i].op.d_commutator(layer)?);
        }
    }
    if d_ops[0].is_none() {
        d_ops[0] = Some(Op::zero(layer));
    }

    // leading slot: the unit participates at positive degree even for the
    // non-unital family; budget-respecting elements come first so that the
    // canonical class representatives stay differentiable
    let mut slot0: Vec<usize> = alpha.slot0.clone();
    if degree > 0 && !slot0.contains(&0) {
        slot0.insert(0, 0);
    }
    slot0.sort_by_key(|&i| (alpha.elems[i].min_budget > alpha.budget, i));

    let mut stats = WordStats::default();
    let mut word = vec![0usize; degree + 1];

    struct Ctx<'a, F> {
        basis: &'a AlgebraBasis<'a>,
        slots: &'a [usize],
        d_ops: &'a [Option<Op>],
        stats: &'a mut WordStats,
        f: &'a mut F,
    }

    fn rec<F>(
        ctx: &mut Ctx<'_, F>,
        word: &mut Vec<usize>,
        pos: usize,
        degree: usize,
        pi: &Op,
        dpi: &Op,
    ) -> Result<()>
    where
        F: FnMut(&[usize], &Op, &Op) -> Result<()>,
    {
        let remaining = degree - pos;
        if remaining == 0 {
            ctx.stats.count += 1;
            return (ctx.f)(word, pi, dpi);
        }
        if pi.is_zero() && dpi.is_zero() {
            ctx.stats.count += subtree_size(ctx.slots.len(), remaining);
            return Ok(());
        }
        let layer = &ctx.basis.triple.layer;
        for &i in ctx.slots {
            let di = ctx.d_ops[i].as_ref().unwrap();
            let next = pi.mul(di, layer).and_then(|np| {
                let nd = dpi.mul(di, layer)?;
                Ok((np, nd))
            });
            match next {
                Ok((np, nd)) => {
                    word[pos + 1] = i;
                    rec(ctx, word, pos + 1, degree, &np, &nd)?;
                }
                Err(Error::WindowOverflow(_)) => {
                    ctx.stats.skipped += subtree_size(ctx.slots.len(), remaining - 1);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    for &b0 in &slot0 {
        word[0] = b0;
        let pi = alpha.elems[b0].op.clone();
        let dpi = d_ops[b0].as_ref().unwrap().clone();
        let mut ctx = Ctx {
            basis,
            slots: &alpha.slots,
            d_ops: &d_ops,
            stats: &mut stats,
            f,
        };
        rec(&mut ctx, &mut word, 0, degree, &pi, &dpi)?;
    }
    Ok(stats)
}

fn unshift(v: &SparseVec, off: usize) -> SparseVec {
    let mut out = SparseVec::new();
    for (i, c) in v.iter() {
        out.set(*i - off, c.clone());
    }
    out
}

/// Compute the calculus spaces for degrees 0..=max_degree at a fixed word
/// budget.
pub fn omega_tower(
    basis: &AlgebraBasis,
    family: Family,
    mode: Mode,
    budget: usize,
    max_degree: usize,
) -> Result<Vec<OmegaSpace>> {
    let layer = &basis.triple.layer;
    let ambient = layer.dim(mode);
    let alpha = basis.triple.alphabet(family, budget);
    let mut junk = Subspace::zero(ambient);
    let mut out: Vec<OmegaSpace> = vec![];
    for degree in 0..=max_degree {
        let mut sel = Echelon::new(ambient);
        let mut reps: Vec<Rep> = vec![];
        let mut comb = Echelon::new(2 * ambient);
        let stats = enumerate_words(basis, &alpha, degree, &mut |word, pi_op, dpi_op| {
            let pi = pi_op.coords(layer, mode);
            let dpi = dpi_op.coords(layer, mode);
            let mut row = pi.clone();
            row.add_scaled(&Scalar::one(), &dpi.shifted(ambient));
            comb.insert(row);
            if sel.insert(pi.clone()).is_some() {
                reps.push(Rep { form: FormExpr::word(word.to_vec()), pi, dpi });
            }
            Ok(())
        })?;
        let pi_span = Subspace::from_vectors(ambient, reps.iter().map(|r| r.pi.clone()));
        let mut rep_solver = TrackedEchelon::new(ambient);
        let mut quot = TrackedEchelon::new(ambient);
        for r in junk.rows() {
            quot.insert(r.clone());
        }
        let n_junk = junk.dim();
        debug_assert_eq!(quot.rank(), n_junk);
        let mut class_reps = vec![];
        for (ri, r) in reps.iter().enumerate() {
            rep_solver.insert(r.pi.clone());
            if quot.insert(r.pi.clone()) {
                class_reps.push(ri);
            }
        }
        // junk one degree up: rows of the combined echelon whose leading
        // entry lies in the differential block
        let next = comb.into_subspace();
        let next_junk = Subspace::from_vectors(
            ambient,
            next.rows()
                .iter()
                .zip(next.pivots())
                .filter(|(_, p)| **p >= ambient)
                .map(|(r, _)| unshift(r, ambient)),
        );
        out.push(OmegaSpace {
            degree,
            family,
            mode,
            budget,
            ambient,
            pi_span,
            junk,
            reps,
            rep_solver,
            quot,
            n_junk,
            class_reps,
            word_count: stats.count,
            skipped_words: stats.skipped,
        });
        junk = next_junk;
    }
    Ok(out)
}

pub fn dims(spaces: &[OmegaSpace]) -> Vec<usize> {
    spaces.iter().map(|s| s.quotient_dim()).collect()
}

/// The tower at increasing budgets until two consecutive budgets agree on
/// every quotient dimension.
pub struct StableTower {
    pub budget: usize,
    pub spaces: Vec<OmegaSpace>,
    /// (budget, dims) history including the stable repeat
    pub profile: Vec<(usize, Vec<usize>)>,
}

pub fn stabilize(
    basis: &AlgebraBasis,
    family: Family,
    mode: Mode,
    max_degree: usize,
    max_budget: usize,
) -> Result<StableTower> {
    let mut profile: Vec<(usize, Vec<usize>)> = vec![];
    let mut prev: Option<Vec<OmegaSpace>> = None;
    for budget in 1..=max_budget {
        let spaces = omega_tower(basis, family, mode, budget, max_degree)?;
        let d = dims(&spaces);
        profile.push((budget, d.clone()));
        if let Some(p) = &prev {
            if dims(p) == d {
                return Ok(StableTower { budget, spaces, profile });
            }
        }
        prev = Some(spaces);
    }
    Err(Error::NotStabilized(max_budget))
}

/// Columns of the induced differential from quotient degree n to n+1, in
/// quotient coordinates (columns indexed by the source basis classes),
/// computed from the canonical class representatives.
pub fn delta_columns(from: &OmegaSpace, to: &OmegaSpace) -> Result<Vec<SparseVec>> {
    assert_eq!(to.degree, from.degree + 1);
    assert_eq!(to.family, from.family);
    assert_eq!(to.mode, from.mode);
    assert_eq!(to.budget, from.budget);
    let mut cols: Vec<SparseVec> = Vec::with_capacity(from.quotient_dim());
    for j in 0..from.quotient_dim() {
        let dpi = &from.class_rep(j).dpi;
        let col = to.project(dpi).map_err(|_| {
            Error::NotWellDefined(format!(
                "differential image of a degree-{} class escapes the represented span",
                from.degree
            ))
        })?;
        cols.push(col);
    }
    Ok(cols)
}

/// The induced differential, additionally verified well-defined over the
/// whole enumerated span: every word must satisfy [pi(dw)] = delta [pi(w)].
pub fn delta_matrix(
    basis: &AlgebraBasis,
    from: &OmegaSpace,
    to: &OmegaSpace,
) -> Result<Vec<SparseVec>> {
    let cols = delta_columns(from, to)?;
    let layer = &basis.triple.layer;
    let mode = from.mode;
    let alpha = basis.triple.alphabet(from.family, from.budget);
    enumerate_words(basis, &alpha, from.degree, &mut |_, pi_op, dpi_op| {
        let v = from.project(&pi_op.coords(layer, mode))?;
        let lhs = to.project(&dpi_op.coords(layer, mode)).map_err(|_| {
            Error::NotWellDefined("differential of a word escapes the represented span".into())
        })?;
        let mut rhs = SparseVec::new();
        for (j, c) in v.iter() {
            rhs.add_scaled(c, &cols[*j]);
        }
        if lhs != rhs {
            return Err(Error::NotWellDefined(format!(
                "induced differential inconsistent at degree {}",
                from.degree
            )));
        }
        Ok(())
    })?;
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triple::{Triple, TripleSpec};

    #[test]
    fn toeplitz_finite_block_calculus() {
        // finite block of the suspended point at cutoff 6: the calculus is
        // A in degrees 0 and 1 and vanishes above
        let t = Triple::build(TripleSpec::Point.qds_of(6)).unwrap();
        let basis = AlgebraBasis::new(&t);
        let tower =
            omega_tower(&basis, Family::FinPart, Mode::Bounded, 2, 3).unwrap();
        assert_eq!(dims(&tower), vec![36, 36, 0, 0]);
    }

    #[test]
    fn laurent_calculus_modulo_compacts() {
        // band part of the suspended point at cutoff 6, modulo compacts:
        // Laurent window of 13 monomials in degrees 0 and 1, nothing above
        let t = Triple::build(TripleSpec::Point.qds_of(6)).unwrap();
        let basis = AlgebraBasis::new(&t);
        let stable =
            stabilize(&basis, Family::BandPart, Mode::Calkin, 2, 6).unwrap();
        assert_eq!(dims(&stable.spaces), vec![13, 13, 0]);
    }

    #[test]
    fn circle_calculus_dims() {
        let t = Triple::build(TripleSpec::Circle { window: 8, gen_degree: 1 }).unwrap();
        let basis = AlgebraBasis::new(&t);
        let tower = omega_tower(&basis, Family::Full, Mode::Calkin, 3, 2).unwrap();
        assert_eq!(dims(&tower), vec![17, 17, 0]);
    }

    #[test]
    fn delta_squares_to_zero_on_classes() {
        let t = Triple::build(TripleSpec::Point.qds_of(4)).unwrap();
        let basis = AlgebraBasis::new(&t);
        let tower = omega_tower(&basis, Family::Full, Mode::Bounded, 2, 2).unwrap();
        let d0 = delta_matrix(&basis, &tower[0], &tower[1]).unwrap();
        let d1 = delta_matrix(&basis, &tower[1], &tower[2]).unwrap();
        for col in &d0 {
            let mut acc = SparseVec::new();
            for (j, c) in col.iter() {
                acc.add_scaled(c, &d1[*j]);
            }
            assert!(acc.is_zero());
        }
    }
}
