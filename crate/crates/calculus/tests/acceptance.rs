//! End-to-end acceptance gate: one pass/fail line per criterion, every
//! comparison exact.

use std::time::{Duration, Instant};

use connes_calculus::exact::Scalar;
use connes_calculus::forms::pipeline::{dims, stabilize};
use connes_calculus::forms::verify;
use connes_calculus::forms::witness::{laurent_witness, matrix_witness};
use connes_calculus::forms::AlgebraBasis;
use connes_calculus::oper::Mode;
use connes_calculus::report::{run_suite, RunConfig};
use connes_calculus::triple::{Family, Triple, TripleSpec};

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Gate {
        Gate { failures: vec![] }
    }

    fn check(&mut self, id: &str, limit: Duration, run: impl FnOnce() -> bool) {
        let start = Instant::now();
        let ok = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        println!(
            "criterion {id}: {} ({elapsed:.2?}, limit {limit:?})",
            if ok && in_time { "pass" } else { "FAIL" }
        );
        if !ok {
            self.failures.push(format!("{id}: check failed"));
        }
        if !in_time {
            self.failures.push(format!("{id}: overran {limit:?} ({elapsed:.2?})"));
        }
    }
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();

    // 1. finite-block calculus over the Toeplitz layer, cutoff 6,
    // budgets raised to stabilization: dims (36, 36, 0, 0)
    gate.check("01 s-calculus", Duration::from_secs(60), || {
        let t = Triple::build(TripleSpec::Point.qds_of(6)).unwrap();
        let basis = AlgebraBasis::new(&t);
        let stable = stabilize(&basis, Family::FinPart, Mode::Bounded, 3, 6).unwrap();
        dims(&stable.spaces) == vec![36, 36, 0, 0]
    });

    // 2. Laurent calculus modulo compacts, window 13: dims (13, 13, 0)
    gate.check("02 laurent", Duration::from_secs(30), || {
        let t = Triple::build(TripleSpec::Point.qds_of(6)).unwrap();
        let basis = AlgebraBasis::new(&t);
        let stable = stabilize(&basis, Family::BandPart, Mode::Calkin, 2, 6).unwrap();
        dims(&stable.spaces) == vec![13, 13, 0]
    });

    // 3. witness values: pi(zeta_n) = 0 with pi(d zeta_n) != 0 for
    // n = 1..5, and the exact pi(d omega_n) scalar table
    gate.check("03 witnesses", Duration::from_secs(120), || {
        let zeta = (1..=5).all(|n| {
            let w = matrix_witness(n).unwrap();
            w.pi_vanishes && w.dpi_nonzero
        });
        let table = [
            (1, Scalar::from_int(-2)),
            (2, Scalar::from_int(-4)),
            (3, Scalar::from_int(2)),
            (4, Scalar::from_int(4)),
            (5, Scalar::from_int(-2)),
        ];
        let omega = table.iter().all(|(n, want)| {
            let w = laurent_witness(*n, n + 3).unwrap();
            w.pi_vanishes && w.dpi_matches && w.expected == *want
        });
        zeta && omega
    });

    // 4. circle calculus, window 8, winding 1, budget 3: degrees zero
    // and one match the reachable-monomial oracle, degree two vanishes
    gate.check("04 circle", Duration::from_secs(120), || {
        let r = verify::verify_circle(8, 1, 3).unwrap();
        r.ok()
    });

    // 5. suspension theorem: split, dimension formulas, delta^0 formula,
    // delta^1 killing the algebra summand — point base at cutoff 5 and
    // circle(6,1) base at cutoff 3, budget 2
    gate.check("05 qds theorem", Duration::from_secs(300), || {
        let a = verify::verify_qds_theorem(&TripleSpec::Point, 5, 2, Mode::Bounded).unwrap();
        let b = verify::verify_qds_theorem(
            &TripleSpec::Circle { window: 6, gen_degree: 1 },
            3,
            2,
            Mode::Calkin,
        )
        .unwrap();
        a.ok() && b.ok()
    });

    // 6. twice-iterated suspension of the point, cutoffs 3,3: degree two
    // vanishes and degree one carries the three-summand shape
    gate.check("06 iterated", Duration::from_secs(120), || {
        let r = verify::verify_iterated(3, 3, 2).unwrap();
        r.ok() && r.level2.omega2_dim == 0
    });

    // 7. Pauli doubling over circle(4,1), budget 2: identical dims in
    // degrees 0..2 and trivial intersection of F A with A
    gate.check("07 pauli", Duration::from_secs(120), || {
        verify::verify_pauli(4, 1, 2).unwrap().ok()
    });

    // 8. compactness of [[D,a],F] persists under suspension
    gate.check("08 condition stability", Duration::from_secs(120), || {
        let specs = [
            TripleSpec::Circle { window: 6, gen_degree: 1 },
            TripleSpec::Circle { window: 6, gen_degree: 1 }.qds_of(4),
            TripleSpec::Point.qds_of(4).qds_of(4),
        ];
        specs.iter().all(|s| {
            verify::verify_condition_a(s)
                .unwrap()
                .iter()
                .all(|(_, ok)| *ok)
        })
    });

    // 9. connections: Leibniz, compatibility, Grassmannian preservation,
    // injectivity on five random pairs, and exact curvature commutation,
    // for a Bott-type module over the circle and a corner module over
    // the Toeplitz layer, each lifted one suspension level
    gate.check("09 connections", Duration::from_secs(180), || {
        let mut cfg = RunConfig::default();
        cfg.suites = vec!["connections".to_string()];
        let report = run_suite(&cfg, 1).unwrap();
        report.pass && report.checks.len() == 9
    });

    // 10. byte-identical reports across consecutive runs and across
    // different --jobs values
    gate.check("10 determinism", Duration::from_secs(300), || {
        let bin = env!("CARGO_BIN_EXE_ccalc");
        let run = |jobs: &str| {
            let out = std::process::Command::new(bin)
                .args(["verify", "--out", "-", "--jobs", jobs])
                .output()
                .unwrap();
            assert!(out.status.success(), "verify run failed");
            out.stdout
        };
        let a = run("1");
        let b = run("1");
        let c = run("4");
        a == b && a == c
    });

    assert!(gate.failures.is_empty(), "acceptance failures: {:?}", gate.failures);
}
