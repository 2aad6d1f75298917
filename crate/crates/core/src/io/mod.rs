//! Problem files and machine-readable reports.

mod instance;
mod pop_format;
mod report;

pub use crate::diagnosis::ReportDocument;
pub use instance::{InstanceError, PopInstance};
pub use pop_format::{parse_pop, print_pop, ParseError, ParseErrorKind, MAX_EXPONENT};
pub use report::{emit_report_json, REPORT_SCHEMA, REPORT_SCHEMA_ID};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::poly::{rat, RatPoly};
    use proptest::prelude::*;

    #[test]
    fn robinson_file() {
        let p = catalog::robinson();
        assert_eq!(p.nvars(), 3);
        assert_eq!(p.num_equalities(), 1);
        assert_eq!(p.num_inequalities(), 0);
        assert_eq!(p.objective().degree(), Some(6));
        assert_eq!(p.name(), "robinson");
    }

    #[test]
    fn degenerate_point_file() {
        let p = parse_pop("vars x\nmin x\ng: -x^2 >= 0\n").unwrap();
        assert_eq!(p.num_equalities(), 0);
        assert_eq!(p.num_inequalities(), 1);
        assert_eq!(
            p.inequalities().get(0).unwrap(),
            &(-&RatPoly::var(1, 0).pow(2))
        );
    }

    #[test]
    fn decimals_are_exact() {
        let p = parse_pop("vars x\nmin 0.5*x + 1/3 - 0.125").unwrap();
        assert_eq!(
            p.objective().coeff(&crate::poly::Monomial::var(1, 0)),
            rat(1, 2)
        );
        assert_eq!(p.objective().constant_term(), rat(5, 24));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_pop("vars x y\nmin x + z\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 9));
        assert_eq!(e.kind, ParseErrorKind::UnknownVariable("z".into()));

        let e = parse_pop("vars x x\nmin x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateVariable("x".into()));
        assert_eq!((e.line, e.column), (1, 8));

        let e = parse_pop("vars x\nmin x^4294967296").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::ExponentOverflow(_)));
        let e = parse_pop("vars x\nmin x^1001").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::ExponentOverflow(_)));

        let e = parse_pop("vars x\nmin x +\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(e.line, 2);

        let e = parse_pop("vars x\nmin x\nh: x >= 0").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::BadRelation { expected: "==" });

        let e = parse_pop("vars x\nmin x\nh: x == 0\nh: x - 1 == 0\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Instance(_)));

        let e = parse_pop("min x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingVars);
        assert!(parse_pop("vars x\nmin x/x").is_err());
        assert!(parse_pop("vars x\nmin x $ 2").is_err());
    }

    #[test]
    fn printing() {
        let p = parse_pop("vars x1\nmin x1^2 - 1").unwrap();
        assert_eq!(print_pop(&p), "vars x1\nmin x1^2 - 1\n");
    }

    #[test]
    fn printed_simplex_cubic_reparses_identically() {
        use rand::{Rng, SeedableRng};
        let p = catalog::simplex_cubic();
        let q = parse_pop(&print_pop(&p)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let u: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert_eq!(p.objective_at(&u), q.objective_at(&u));
            for (a, b) in p.inequalities().iter().zip(q.inequalities()) {
                assert_eq!(a.eval_f64(&u), b.eval_f64(&u));
            }
        }
        assert_eq!(p, q);
    }

    #[test]
    fn catalog_round_trips() {
        for p in [
            catalog::robinson(),
            catalog::lemniscate(),
            catalog::simplex_cubic(),
            catalog::motzkin_ball(),
            catalog::degenerate_point(),
            catalog::shifted_motzkin(),
            catalog::motzkin_plus_quadratic(),
        ] {
            assert_eq!(parse_pop(&print_pop(&p)).unwrap(), p);
        }
    }

    fn arb_instance() -> impl Strategy<Value = PopInstance> {
        let monos = crate::poly::Monomial::all_up_to(3, 3);
        let len = monos.len();
        let poly = move || {
            let monos = monos.clone();
            proptest::collection::vec((0..len, -50i64..50, 1i64..9), 1..6).prop_map(move |ts| {
                RatPoly::from_terms(
                    3,
                    ts.into_iter()
                        .map(|(i, a, b)| (monos[i].clone(), rat(a, b))),
                )
            })
        };
        (
            poly(),
            proptest::collection::vec(poly(), 0..3),
            proptest::collection::vec(poly(), 0..3),
        )
            .prop_map(|(f, h, g)| PopInstance::with_default_names("rand", f, h, g).unwrap())
    }

    proptest! {
        #[test]
        fn parse_print_round_trip(p in arb_instance()) {
            let text = print_pop(&p);
            let q = parse_pop(&text).unwrap();
            prop_assert_eq!(q, p);
        }
    }
}
