//! Hermitian connections on finitely generated projective modules, their
//! curvature, and the lift along the double suspension.
//!
//! A module is the image of an exact projection matrix p over the algebra.
//! A connection is stored as the Grassmannian part (determined by p) plus
//! a matrix of degree-one classes; all class arithmetic happens in the
//! quotient coordinates of the calculus spaces.

use crate::error::{Error, Result};
use crate::exact::{Scalar, SparseVec};
use crate::forms::pipeline::{delta_columns, omega_tower, OmegaSpace};
use crate::forms::AlgebraBasis;
use crate::oper::{Mode, Op};
use crate::triple::{Family, Triple};

/// The calculus of a triple up to degree two, bundled for connection
/// arithmetic.
pub struct Calculus<'t> {
    pub basis: AlgebraBasis<'t>,
    pub tower: Vec<OmegaSpace>,
    pub delta1: Vec<SparseVec>,
    pub mode: Mode,
}

impl<'t> Calculus<'t> {
    pub fn new(triple: &'t Triple, mode: Mode, budget: usize) -> Result<Calculus<'t>> {
        let basis = AlgebraBasis::new(triple);
        let tower = omega_tower(&basis, Family::Full, mode, budget, 2)?;
        let delta1 = delta_columns(&tower[1], &tower[2])?;
        Ok(Calculus { basis, tower, delta1, mode })
    }

    pub fn triple(&self) -> &Triple {
        self.basis.triple
    }

    fn coords(&self, op: &Op) -> SparseVec {
        op.coords(&self.triple().layer, self.mode)
    }

    /// Class of the differential of an algebra element.
    pub fn d0(&self, a: &Op) -> Result<SparseVec> {
        let c = a.d_commutator(&self.triple().layer)?;
        self.tower[1].project(&self.coords(&c))
    }

    /// Canonical operator representative of a class.
    pub fn section_op(&self, degree: usize, cls: &SparseVec) -> Result<Op> {
        let layer = &self.triple().layer;
        let mut acc = Op::zero(layer);
        for (j, c) in cls.iter() {
            let rep = self.tower[degree].class_rep(*j);
            acc = acc.add(&self.basis.pi_op(&rep.form)?.scale(c));
        }
        Ok(acc)
    }

    /// Left multiplication of a degree-one class by an algebra element.
    pub fn lmul1(&self, a: &Op, cls: &SparseVec) -> Result<SparseVec> {
        let s = self.section_op(1, cls)?;
        let p = a.mul(&s, &self.triple().layer)?;
        self.tower[1].project(&self.coords(&p))
    }

    /// Right multiplication of a degree-one class by an algebra element.
    pub fn rmul1(&self, cls: &SparseVec, a: &Op) -> Result<SparseVec> {
        let s = self.section_op(1, cls)?;
        let p = s.mul(a, &self.triple().layer)?;
        self.tower[1].project(&self.coords(&p))
    }

    /// Product of two degree-one classes, as a degree-two class.
    pub fn mul11(&self, x: &SparseVec, y: &SparseVec) -> Result<SparseVec> {
        let sx = self.section_op(1, x)?;
        let sy = self.section_op(1, y)?;
        let p = sx.mul(&sy, &self.triple().layer)?;
        self.tower[2].project(&self.coords(&p))
    }

    /// Involution on degree-one classes (operator adjoint of a section).
    pub fn adj1(&self, cls: &SparseVec) -> Result<SparseVec> {
        let s = self.section_op(1, cls)?.adjoint(&self.triple().layer);
        self.tower[1].project(&self.coords(&s))
    }

    /// Induced differential on degree-one classes.
    pub fn d1(&self, cls: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, c) in cls.iter() {
            out.add_scaled(c, &self.delta1[*j]);
        }
        out
    }
}

/// An exact projection matrix over the algebra.
#[derive(Clone)]
pub struct Projection {
    pub entries: Vec<Vec<Op>>,
}

impl Projection {
    pub fn new(triple: &Triple, entries: Vec<Vec<Op>>) -> Result<Projection> {
        let n = entries.len();
        if entries.iter().any(|row| row.len() != n) {
            return Err(Error::NotAProjection("matrix is not square".into()));
        }
        let p = Projection { entries };
        let layer = &triple.layer;
        let sq = p.mul_mat(&p, triple)?;
        for i in 0..n {
            for j in 0..n {
                if sq.entries[i][j] != p.entries[i][j] {
                    return Err(Error::NotAProjection("p^2 != p".into()));
                }
                if p.entries[i][j].adjoint(layer) != p.entries[j][i] {
                    return Err(Error::NotAProjection("p* != p".into()));
                }
            }
        }
        Ok(p)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    fn mul_mat(&self, other: &Projection, triple: &Triple) -> Result<Projection> {
        let layer = &triple.layer;
        let n = self.size();
        let mut out = vec![vec![Op::zero(layer); n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = self.entries[i][k].mul(&other.entries[k][j], layer)?;
                    out[i][j] = out[i][j].add(&t);
                }
            }
        }
        Ok(Projection { entries: out })
    }

    /// The j-th module generator p e_j, as a column of algebra elements.
    pub fn generator(&self, j: usize) -> Vec<Op> {
        (0..self.size()).map(|i| self.entries[i][j].clone()).collect()
    }
}

/// A Hermitian connection: the Grassmannian part of p plus a perturbation
/// matrix of degree-one classes (stored compressed, i.e. already equal to
/// p omega p).
pub struct Connection {
    pub proj: Projection,
    pub omega: Vec<Vec<SparseVec>>,
}

impl Connection {
    pub fn grassmannian(proj: Projection) -> Connection {
        let n = proj.size();
        Connection { proj, omega: vec![vec![SparseVec::new(); n]; n] }
    }

    /// Compress a raw perturbation to p omega p.
    pub fn perturbed(
        calc: &Calculus,
        proj: Projection,
        raw: Vec<Vec<SparseVec>>,
    ) -> Result<Connection> {
        let n = proj.size();
        let mut omega = vec![vec![SparseVec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = SparseVec::new();
                for a in 0..n {
                    for b in 0..n {
                        let t = calc.lmul1(&proj.entries[i][a], &raw[a][b])?;
                        let t = calc.rmul1(&t, &proj.entries[b][j])?;
                        acc.add_scaled(&Scalar::one(), &t);
                    }
                }
                omega[i][j] = acc;
            }
        }
        Ok(Connection { proj, omega })
    }

    /// Connection one-form theta = p dp + omega, so that
    /// nabla(p e_j) = sum_i e_i (x) theta_ij.
    pub fn theta(&self, calc: &Calculus) -> Result<Vec<Vec<SparseVec>>> {
        let n = self.proj.size();
        let mut out = vec![vec![SparseVec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.omega[i][j].clone();
                for k in 0..n {
                    let dp = calc.d0(&self.proj.entries[k][j])?;
                    let t = calc.lmul1(&self.proj.entries[i][k], &dp)?;
                    acc.add_scaled(&Scalar::one(), &t);
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    }

    /// nabla applied to a module element (a column in the image of p):
    /// the column of degree-one classes p d xi + omega xi.
    pub fn apply(&self, calc: &Calculus, xi: &[Op]) -> Result<Vec<SparseVec>> {
        let n = self.proj.size();
        let mut out = vec![SparseVec::new(); n];
        for i in 0..n {
            let mut acc = SparseVec::new();
            for k in 0..n {
                let dk = calc.d0(&xi[k])?;
                acc.add_scaled(&Scalar::one(), &calc.lmul1(&self.proj.entries[i][k], &dk)?);
                acc.add_scaled(&Scalar::one(), &calc.rmul1(&self.omega[i][k], &xi[k])?);
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Curvature matrix d theta + theta theta, entries in degree-two
    /// classes.
    pub fn curvature(&self, calc: &Calculus) -> Result<Vec<Vec<SparseVec>>> {
        let theta = self.theta(calc)?;
        let n = self.proj.size();
        let mut out = vec![vec![SparseVec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = calc.d1(&theta[i][j]);
                for k in 0..n {
                    acc.add_scaled(&Scalar::one(), &calc.mul11(&theta[i][k], &theta[k][j])?);
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    }

    /// Leibniz rule nabla(xi a) = nabla(xi) a + xi (x) [da], checked on the
    /// module generators against every algebra generator.
    pub fn check_leibniz(&self, calc: &Calculus) -> Result<bool> {
        let layer = &calc.triple().layer;
        let n = self.proj.size();
        for j in 0..n {
            let eps = self.proj.generator(j);
            let base = self.apply(calc, &eps)?;
            for (_, a) in calc.triple().generators()? {
                let xi_a: Vec<Op> = eps
                    .iter()
                    .map(|x| x.mul(&a, layer))
                    .collect::<Result<_>>()?;
                let lhs = self.apply(calc, &xi_a)?;
                let da = calc.d0(&a)?;
                for i in 0..n {
                    let mut rhs = calc.rmul1(&base[i], &a)?;
                    rhs.add_scaled(&Scalar::one(), &calc.lmul1(&eps[i], &da)?);
                    if lhs[i] != rhs {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Compatibility with the Hermitian structure <xi, zeta> = sum xi_i*
    /// zeta_i: the identity <xi, nabla zeta> - <nabla xi, zeta> = d<xi,
    /// zeta>, checked on the module generators.
    pub fn check_compatibility(&self, calc: &Calculus) -> Result<bool> {
        let layer = &calc.triple().layer;
        let n = self.proj.size();
        let theta = self.theta(calc)?;
        for j in 0..n {
            for k in 0..n {
                let xi = self.proj.generator(j);
                let zeta = self.proj.generator(k);
                // <xi, zeta>
                let mut inner = Op::zero(layer);
                for i in 0..n {
                    inner = inner.add(&xi[i].adjoint(layer).mul(&zeta[i], layer)?);
                }
                let lhs = calc.d0(&inner)?;
                let mut rhs = SparseVec::new();
                for i in 0..n {
                    // <xi, e_i (x) theta_ik> = xi_i* theta_ik
                    let t = calc.lmul1(&xi[i].adjoint(layer), &theta[i][k])?;
                    rhs.add_scaled(&Scalar::one(), &t);
                    // <e_i (x) theta_ij, zeta> = theta_ij* zeta_i
                    let s = calc.rmul1(&calc.adj1(&theta[i][j])?, &zeta[i])?;
                    rhs.add_scaled(&(-Scalar::one()), &s);
                }
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// The lift of algebra elements along one double suspension: a maps to
/// a (x) e_00.
pub fn lift_op(upper: &Calculus, a: &Op) -> Result<Op> {
    Op::qds_fin(&upper.triple().layer, 0, 0, a.clone())
}

/// Embedding of degree-n classes of the base calculus into the suspended
/// calculus, through the corner a0 da1 ... |-> (a0 (x) e_00) d(a1 (x)
/// e_00) ...
pub fn psi(base: &Calculus, upper: &Calculus, degree: usize, cls: &SparseVec) -> Result<SparseVec> {
    let s = base.section_op(degree, cls)?;
    let lifted = lift_op(upper, &s)?;
    upper.tower[degree].project(&lifted.coords(&upper.triple().layer, upper.mode))
}

/// Lift a connection one suspension level: the projection becomes
/// p (x) e_00 and the perturbation is embedded entrywise.
pub fn lift_connection(
    base: &Calculus,
    upper: &Calculus,
    conn: &Connection,
) -> Result<Connection> {
    let n = conn.proj.size();
    let mut entries = vec![];
    for i in 0..n {
        let mut row = vec![];
        for j in 0..n {
            row.push(lift_op(upper, &conn.proj.entries[i][j])?);
        }
        entries.push(row);
    }
    let proj = Projection::new(upper.triple(), entries)?;
    let mut omega = vec![vec![SparseVec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            omega[i][j] = psi(base, upper, 1, &conn.omega[i][j])?;
        }
    }
    Ok(Connection { proj, omega })
}

pub struct LiftReport {
    pub leibniz_ok: bool,
    pub compatibility_ok: bool,
    pub lifted_leibniz_ok: bool,
    pub lifted_compatibility_ok: bool,
    pub grassmannian_preserved: bool,
    pub curvature_commutes: bool,
}

impl LiftReport {
    pub fn ok(&self) -> bool {
        self.leibniz_ok
            && self.compatibility_ok
            && self.lifted_leibniz_ok
            && self.lifted_compatibility_ok
            && self.grassmannian_preserved
            && self.curvature_commutes
    }
}

/// Full commuting-diagram check for one connection and one suspension
/// level: both connections are Hermitian Leibniz connections, the lift of
/// the Grassmannian is the Grassmannian of the lifted module, and the
/// curvature of the lift is the embedded curvature.
pub fn verify_lift(
    base: &Calculus,
    upper: &Calculus,
    conn: &Connection,
) -> Result<LiftReport> {
    let lifted = lift_connection(base, upper, conn)?;
    let n = conn.proj.size();

    // Grassmannian preservation: the lifted projection's Grassmannian
    // one-form is the embedding of the base one.
    let grass = Connection::grassmannian(conn.proj.clone());
    let lifted_grass = lift_connection(base, upper, &grass)?;
    let theta_base = grass.theta(base)?;
    let theta_lift = lifted_grass.theta(upper)?;
    let mut grassmannian_preserved = true;
    for i in 0..n {
        for j in 0..n {
            if psi(base, upper, 1, &theta_base[i][j])? != theta_lift[i][j] {
                grassmannian_preserved = false;
            }
        }
    }

    // curvature of the lift vs embedded curvature
    let curv_base = conn.curvature(base)?;
    let curv_lift = lifted.curvature(upper)?;
    let mut curvature_commutes = true;
    for i in 0..n {
        for j in 0..n {
            if psi(base, upper, 2, &curv_base[i][j])? != curv_lift[i][j] {
                curvature_commutes = false;
            }
        }
    }

    Ok(LiftReport {
        leibniz_ok: conn.check_leibniz(base)?,
        compatibility_ok: conn.check_compatibility(base)?,
        lifted_leibniz_ok: lifted.check_leibniz(upper)?,
        lifted_compatibility_ok: lifted.check_compatibility(upper)?,
        grassmannian_preserved,
        curvature_commutes,
    })
}

/// The Bott-type projection over the circle: one-half of
/// [[1 + cos, sin], [sin, 1 - cos]] with cos = (z + z^-1)/2 and
/// sin = (z - z^-1)/(2i).
pub fn bott_projection(triple: &Triple) -> Result<Projection> {
    let layer = &triple.layer;
    let half = Scalar::from_ratio(1, 2);
    let quarter = Scalar::from_ratio(1, 4);
    let zi = |k: i64, c: Scalar| Op::circle_monomial(layer, k, c);
    // cos/2 = z/4 + z^-1/4 ; sin/2 = z/(4i) - z^-1/(4i)
    let cos2 = zi(1, quarter.clone())?.add(&zi(-1, quarter.clone())?);
    let i4 = &quarter * &Scalar::i().conj(); // 1/(4i) = -i/4
    let sin2 = zi(1, i4.clone())?.add(&zi(-1, -i4)?);
    let half_op = Op::one(layer).scale(&half);
    let p00 = half_op.add(&cos2);
    let p11 = half_op.sub(&cos2);
    Projection::new(triple, vec![vec![p00, sin2.clone()], vec![sin2, p11]])
}

/// The corner projection u = e_00 over a suspension algebra, as a 1x1
/// module.
pub fn corner_projection(triple: &Triple) -> Result<Projection> {
    let layer = &triple.layer;
    let inner = match &*triple.layer {
        crate::oper::Layer::Qds { inner, .. } => inner.clone(),
        _ => return Err(Error::LayerMismatch("corner projection needs a suspension".into())),
    };
    let u = Op::qds_fin(layer, 0, 0, Op::one(&inner))?;
    Projection::new(triple, vec![vec![u]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triple::TripleSpec;

    #[test]
    fn bott_connection_over_circle_lifts() {
        let circle = Triple::build(TripleSpec::Circle { window: 4, gen_degree: 1 }).unwrap();
        let upper_t = Triple::build(
            TripleSpec::Circle { window: 4, gen_degree: 1 }.qds_of(3),
        )
        .unwrap();
        let base = Calculus::new(&circle, Mode::Calkin, 2).unwrap();
        let upper = Calculus::new(&upper_t, Mode::Calkin, 2).unwrap();
        let p = bott_projection(&circle).unwrap();

        // Hermitian perturbation: p (g I) p for the self-adjoint symbol
        // g = z + z^-1 as a degree-one class
        let g = Op::circle_monomial(&circle.layer, 1, Scalar::one())
            .unwrap()
            .add(&Op::circle_monomial(&circle.layer, -1, Scalar::one()).unwrap());
        let gcls = base.tower[1]
            .project(&g.coords(&circle.layer, Mode::Calkin))
            .unwrap();
        let raw = vec![
            vec![gcls.clone(), SparseVec::new()],
            vec![SparseVec::new(), gcls],
        ];
        let conn = Connection::perturbed(&base, p, raw).unwrap();
        let r = verify_lift(&base, &upper, &conn).unwrap();
        assert!(
            r.ok(),
            "leib={} compat={} leib'={} compat'={} grass={} curv={}",
            r.leibniz_ok,
            r.compatibility_ok,
            r.lifted_leibniz_ok,
            r.lifted_compatibility_ok,
            r.grassmannian_preserved,
            r.curvature_commutes
        );
    }

    #[test]
    fn corner_connection_over_toeplitz_lifts() {
        let toep = Triple::build(TripleSpec::Point.qds_of(3)).unwrap();
        let upper_t = Triple::build(TripleSpec::Point.qds_of(3).qds_of(3)).unwrap();
        let base = Calculus::new(&toep, Mode::Bounded, 2).unwrap();
        let upper = Calculus::new(&upper_t, Mode::Bounded, 2).unwrap();
        let p = corner_projection(&toep).unwrap();

        // perturbation: twice the corner itself, viewed as a one-form class
        let u = p.entries[0][0].clone();
        let ucls = base.tower[1]
            .project(&u.scale(&Scalar::from_int(2)).coords(&toep.layer, Mode::Bounded))
            .unwrap();
        let conn = Connection::perturbed(&base, p, vec![vec![ucls]]).unwrap();
        let r = verify_lift(&base, &upper, &conn).unwrap();
        assert!(
            r.ok(),
            "leib={} compat={} leib'={} compat'={} grass={} curv={}",
            r.leibniz_ok,
            r.compatibility_ok,
            r.lifted_leibniz_ok,
            r.lifted_compatibility_ok,
            r.grassmannian_preserved,
            r.curvature_commutes
        );
    }
}
