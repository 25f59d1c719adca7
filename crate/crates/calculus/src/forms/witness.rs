//! Explicit junk witnesses: universal n-forms that represent to zero while
//! their differentials do not, exhibiting non-trivial junk in every degree
//! for the finite-block and Laurent calculi.

use crate::error::Result;
use crate::exact::{Scalar, SparseVec};
use crate::forms::{AlgebraBasis, FormExpr};
use crate::oper::Mode;
use crate::triple::{Triple, TripleSpec};

/// Append a differential factor d(c * b_slot) to every term of a form.
fn append_d(x: &FormExpr, c: Scalar, slot: usize) -> FormExpr {
    FormExpr::from_terms(
        x.degree() + 1,
        x.terms()
            .iter()
            .map(|(k, w)| {
                let mut nw = w.clone();
                nw.push(slot);
                (k * &c, nw)
            })
            .collect(),
    )
}

pub struct WitnessCheck {
    pub degree: usize,
    pub pi_vanishes: bool,
    pub dpi_nonzero: bool,
    /// representation of the differential, as a human-readable label
    pub dpi_display: String,
}

/// The matrix-algebra junk witness of degree n, checked on the suspended
/// point at cutoff n + 3 in bounded coordinates.
pub fn matrix_witness(n: usize) -> Result<WitnessCheck> {
    assert!(n >= 1);
    let t = Triple::build(TripleSpec::Point.qds_of(n + 3))?;
    let basis = AlgebraBasis::new(&t);
    let e = |p: usize, q: usize| t.fin_index(p, q, 0).unwrap();

    let zeta = if n <= 3 {
        let z1 = FormExpr::from_terms(
            1,
            vec![
                (Scalar::from_ratio(1, 2), vec![e(1, 2), e(2, 0)]),
                (-Scalar::one(), vec![e(1, 1), e(1, 0)]),
            ],
        );
        let mut z = z1;
        if n >= 2 {
            z = append_d(&z, Scalar::from_ratio(-1, 3), e(0, 3));
        }
        if n >= 3 {
            z = append_d(&z, Scalar::from_ratio(1, 2), e(3, 1));
        }
        z
    } else {
        let mut z = FormExpr::from_terms(
            1,
            vec![
                (Scalar::from_ratio(1, n as i64), vec![e(1, n), e(n, 0)]),
                (-Scalar::one(), vec![e(1, 1), e(1, 0)]),
            ],
        );
        z = append_d(&z, Scalar::from_ratio(-1, 3), e(0, 3));
        for j in 4..=n {
            z = append_d(&z, -Scalar::one(), e(j - 1, j));
        }
        z = append_d(&z, Scalar::from_ratio(1, (n as i64) - 1), e(n, 1));
        z
    };

    let pi = basis.pi_op(&zeta)?;
    let dpi = basis.pi_op(&zeta.d())?;
    let dv = dpi.coords(&t.layer, Mode::Bounded);
    Ok(WitnessCheck {
        degree: n,
        pi_vanishes: pi.is_zero(),
        dpi_nonzero: !dv.is_zero(),
        dpi_display: format!("{dv:?}"),
    })
}

/// Exact value of pi(d zeta_1): minus the matrix unit e_{1,0} at cutoff 4.
pub fn matrix_witness_degree_one_value() -> Result<bool> {
    let t = Triple::build(TripleSpec::Point.qds_of(4))?;
    let basis = AlgebraBasis::new(&t);
    let e = |p: usize, q: usize| t.fin_index(p, q, 0).unwrap();
    let zeta = FormExpr::from_terms(
        1,
        vec![
            (Scalar::from_ratio(1, 2), vec![e(1, 2), e(2, 0)]),
            (-Scalar::one(), vec![e(1, 1), e(1, 0)]),
        ],
    );
    let dpi = basis.pi_op(&zeta.d())?;
    let expect = t.elems()[e(1, 0)].op.scale(&(-Scalar::one()));
    Ok(dpi == expect)
}

pub struct LaurentWitness {
    pub degree: usize,
    pub pi_vanishes: bool,
    pub dpi_matches: bool,
    pub expected: Scalar,
}

/// The Laurent junk witness of degree n, checked modulo compacts on the
/// band part of the suspended point. xi and eta are the backward and
/// forward shifts, satisfying [D, xi] = xi and [D, eta] = -eta; modulo
/// compacts they are mutually inverse, and pi(d omega) is the scalar
/// -2 for n = 1, -2(-1)^{(n-1)/2} for odd n >= 3, and -4(-1)^{(n-2)/2}
/// for even n.
pub fn laurent_witness(n: usize, cutoff: usize) -> Result<LaurentWitness> {
    assert!(n >= 1);
    let t = Triple::build(TripleSpec::Point.qds_of(cutoff))?;
    let basis = AlgebraBasis::new(&t);
    let xi = t.band_index(-1)?;
    let eta = t.band_index(1)?;

    let pairs = |lead: Vec<(Scalar, Vec<usize>)>, r: usize| -> FormExpr {
        let mut z = FormExpr::from_terms(lead[0].1.len() - 1, lead);
        for _ in 0..r {
            z = append_d(&z, Scalar::one(), xi);
            z = append_d(&z, Scalar::one(), eta);
        }
        z
    };

    let (omega, expected) = if n % 2 == 1 {
        let r = (n - 1) / 2;
        let omega = pairs(
            vec![
                (Scalar::one(), vec![xi, eta]),
                (Scalar::one(), vec![eta, xi]),
            ],
            r,
        );
        let sign = if r % 2 == 0 { 1 } else { -1 };
        (omega, Scalar::from_int(-2 * sign))
    } else {
        let r = (n - 2) / 2;
        let omega = pairs(
            vec![
                (-Scalar::one(), vec![t.band_index(-2)?, eta, eta]),
                (Scalar::one(), vec![t.band_index(2)?, xi, xi]),
            ],
            r,
        );
        let sign = if r % 2 == 0 { 1 } else { -1 };
        (omega, Scalar::from_int(-4 * sign))
    };

    let pi = basis.pi_coords(&omega, Mode::Calkin)?;
    let dpi = basis.pi_coords(&omega.d(), Mode::Calkin)?;
    let mut expect_vec = SparseVec::new();
    let unit = t.elems()[0].op.coords(&t.layer, Mode::Calkin);
    expect_vec.add_scaled(&expected, &unit);
    Ok(LaurentWitness {
        degree: n,
        pi_vanishes: pi.is_zero(),
        dpi_matches: dpi == expect_vec,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_witnesses_one_through_five() {
        for n in 1..=5 {
            let w = matrix_witness(n).unwrap();
            assert!(w.pi_vanishes, "pi(zeta_{n}) != 0");
            assert!(w.dpi_nonzero, "pi(d zeta_{n}) == 0");
        }
        assert!(matrix_witness_degree_one_value().unwrap());
    }

    #[test]
    fn laurent_witnesses_match_expected_scalars() {
        for n in 1..=5 {
            let w = laurent_witness(n, 6).unwrap();
            assert!(w.pi_vanishes, "pi(omega_{n}) != 0 modulo compacts");
            assert!(w.dpi_matches, "pi(d omega_{n}) != {} modulo compacts", w.expected);
        }
        // the expected scalars alternate as claimed
        assert_eq!(laurent_witness(1, 6).unwrap().expected, Scalar::from_int(-2));
        assert_eq!(laurent_witness(2, 6).unwrap().expected, Scalar::from_int(-4));
        assert_eq!(laurent_witness(3, 6).unwrap().expected, Scalar::from_int(2));
        assert_eq!(laurent_witness(4, 6).unwrap().expected, Scalar::from_int(4));
        assert_eq!(laurent_witness(5, 6).unwrap().expected, Scalar::from_int(-2));
    }
}
