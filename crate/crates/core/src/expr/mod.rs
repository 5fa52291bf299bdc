//! Closed-form scalar expressions over chart coordinates, evaluated together
//! with exact first and second derivatives.

mod ast;
mod jet;
mod parse;

pub use ast::{Evaluator, Expression, Func, Node, Vocabulary};
pub use jet::{Jet2, MAX_DIM};
pub use parse::{parse_expression, parse_with};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier '{name}' at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("{message} in '{subexpr}'")]
    Domain { message: String, subexpr: String },
    #[error("parameter '{0}' is not bound")]
    Unbound(String),
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("substituted expressions use different vocabularies")]
    VocabularyMismatch,
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;

    fn no_params() -> HashMap<String, f64> {
        HashMap::new()
    }

    #[test]
    fn parses_power_of_coordinate() {
        let e = parse_expression("r^2", &["r"], &[]).unwrap();
        assert_eq!(**e.root(), Node::Pow(Arc::new(Node::Coord(0)), Arc::new(Node::Num(2.0))));
    }

    #[test]
    fn parses_static_potential_v0() {
        let e = parse_expression("sqrt(r^2+1)", &["r"], &[]).unwrap();
        let pow = Arc::new(Node::Pow(Arc::new(Node::Coord(0)), Arc::new(Node::Num(2.0))));
        let sum = Arc::new(Node::Add(pow, Arc::new(Node::Num(1.0))));
        assert_eq!(**e.root(), Node::Call(Func::Sqrt, sum));
    }

    #[test]
    fn division_binds_looser_than_power() {
        let e = parse_expression("1/(1+r^2) ", &["r"], &[]).unwrap();
        let pow = Arc::new(Node::Pow(Arc::new(Node::Coord(0)), Arc::new(Node::Num(2.0))));
        let sum = Arc::new(Node::Add(Arc::new(Node::Num(1.0)), pow));
        assert_eq!(**e.root(), Node::Div(Arc::new(Node::Num(1.0)), sum));
    }

    #[test]
    fn power_is_right_associative_and_unary_minus_is_looser() {
        let e = parse_expression("-a^b^2", &["a", "b"], &[]).unwrap();
        let inner = Arc::new(Node::Pow(Arc::new(Node::Coord(1)), Arc::new(Node::Num(2.0))));
        let outer = Arc::new(Node::Pow(Arc::new(Node::Coord(0)), inner));
        assert_eq!(**e.root(), Node::Neg(outer));
    }

    #[test]
    fn errors_carry_position_and_name() {
        match parse_expression("r + q", &["r"], &[]) {
            Err(ExprError::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "q");
                assert_eq!(pos, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expression("r +", &["r"], &[]), Err(ExprError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_expression("(r", &["r"], &[]), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expression("", &["r"], &[]), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expression("r", &["r"], &["r"]), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expression("foo(r)", &["r"], &[]), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn polynomial_jet() {
        let e = parse_expression("r^2", &["r"], &[]).unwrap();
        let j = e.eval_jet2(&[3.0], &no_params()).unwrap();
        assert_eq!(j.value(), 9.0);
        assert_eq!(j.grad(), &[6.0]);
        assert_eq!(j.hess(), vec![vec![2.0]]);
    }

    #[test]
    fn v0_at_origin() {
        let e = parse_expression("sqrt(r^2+1)", &["r"], &[]).unwrap();
        let j = e.eval_jet2(&[0.0], &no_params()).unwrap();
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.grad(), &[0.0]);
        assert_eq!(j.hess(), vec![vec![1.0]]);
    }

    fn central_fd(f: &dyn Fn(&[f64]) -> f64, p: &[f64], h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = p.len();
        let at = |shifts: &[(usize, f64)]| {
            let mut q = p.to_vec();
            for &(i, s) in shifts {
                q[i] += s;
            }
            f(&q)
        };
        let grad = (0..n).map(|i| (at(&[(i, h)]) - at(&[(i, -h)])) / (2.0 * h)).collect();
        let mut hess = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                hess[i][j] = if i == j {
                    (at(&[(i, h)]) - 2.0 * f(p) + at(&[(i, -h)])) / (h * h)
                } else {
                    (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                        + at(&[(i, -h), (j, -h)]))
                        / (4.0 * h * h)
                };
            }
        }
        (grad, hess)
    }

    #[test]
    fn sinh_cos_matches_finite_differences() {
        let e = parse_expression("sinh(t)*cos(p)", &["t", "p"], &[]).unwrap();
        let p = [0.7, 0.3];
        let j = e.eval_jet2(&p, &no_params()).unwrap();
        // Oracle: closed-form values of the plain function.
        let f = |x: &[f64]| x[0].sinh() * x[1].cos();
        let (g, _) = central_fd(&f, &p, 1e-5);
        for i in 0..2 {
            assert!((j.d(i) - g[i]).abs() <= 1e-8 * g[i].abs().max(1e-300), "grad {i}");
        }
        // Second derivatives need a coarser step to stay above roundoff.
        let (_, h) = central_fd(&f, &p, 1e-4);
        for a in 0..2 {
            for b in 0..2 {
                assert!((j.dd(a, b) - h[a][b]).abs() <= 1e-6 * h[a][b].abs().max(1e-3), "hess {a}{b}");
            }
        }
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = parse_expression("1 + log(r - 2)", &["r"], &[]).unwrap();
        match e.eval_jet2(&[1.0], &no_params()) {
            Err(ExprError::Domain { subexpr, .. }) => assert_eq!(subexpr, "log(r - 2)"),
            other => panic!("{other:?}"),
        }
        let e = parse_expression("1/(r-1)", &["r"], &[]).unwrap();
        assert!(matches!(e.eval_jet2(&[1.0], &no_params()), Err(ExprError::Domain { .. })));
        let e = parse_expression("sqrt(r)", &["r"], &[]).unwrap();
        assert!(matches!(e.eval_jet2(&[-1.0], &no_params()), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn parameters_must_be_bound() {
        let e = parse_expression("m*r", &["r"], &["m"]).unwrap();
        assert!(matches!(e.eval_jet2(&[1.0], &no_params()), Err(ExprError::Unbound(_))));
        let mut ps = HashMap::new();
        ps.insert("m".to_string(), 2.5);
        assert_eq!(e.eval_jet2(&[2.0], &ps).unwrap().value(), 5.0);
        assert_eq!(e.bind(&ps).unwrap().eval_value(&[2.0]).unwrap(), 5.0);
    }

    #[test]
    fn symbolic_derivative_agrees_with_jet() {
        let e = parse_expression("atan2(r*sin(t), 2*sqrt(r^2+1) + r*cos(t)) * exp(r/3)", &["r", "t"], &[]).unwrap();
        let p = [1.3, 0.4];
        let j = e.eval_jet2_with(&p, &[]).unwrap();
        for i in 0..2 {
            let d = e.derivative(i).eval_jet2_with(&p, &[]).unwrap();
            assert!((d.value() - j.d(i)).abs() < 1e-14);
            for k in 0..2 {
                assert!((d.d(k) - j.dd(i, k)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn substitution_composes() {
        let f = parse_expression("x^2 + y", &["x", "y"], &[]).unwrap();
        let vocab = Arc::new(Vocabulary::new(&["s", "t"], &[]));
        let a = parse_with("s*t", vocab.clone()).unwrap();
        let b = parse_with("sin(s)", vocab).unwrap();
        let g = f.substitute(&[a, b]).unwrap();
        let v = g.eval_value(&[2.0, 3.0]).unwrap();
        assert!((v - (36.0 + 2f64.sin())).abs() < 1e-14);
    }

    // --- properties ---

    fn arb_poly(vars: usize) -> impl Strategy<Value = String> {
        // Sum of up to five monomials of total degree <= 4.
        let mono = (-3i32..=3, proptest::collection::vec(0u32..=2, vars)).prop_filter_map(
            "degree <= 4",
            move |(c, pows)| {
                if pows.iter().sum::<u32>() > 4 {
                    return None;
                }
                let mut s = format!("{c}");
                for (i, p) in pows.iter().enumerate() {
                    if *p > 0 {
                        s.push_str(&format!("*x{i}^{p}"));
                    }
                }
                Some(s)
            },
        );
        proptest::collection::vec(mono, 1..5).prop_map(|ms| ms.join(" + "))
    }

    fn names(vars: usize) -> Vec<String> {
        (0..vars).map(|i| format!("x{i}")).collect()
    }

    /// Fourth-order central differences.
    fn fd4(f: &dyn Fn(&[f64]) -> f64, p: &[f64], h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = p.len();
        let w = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
        let w2 = [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];
        let shifted = |d: &[(usize, f64)]| {
            let mut q = p.to_vec();
            for &(i, s) in d {
                q[i] += s * h;
            }
            f(&q)
        };
        let grad: Vec<f64> = (0..n).map(|i| w.iter().map(|&(s, c)| c * shifted(&[(i, s)])).sum::<f64>() / h).collect();
        let mut hess = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                hess[i][j] = if i == j {
                    w2.iter().map(|&(s, c)| c * shifted(&[(i, s)])).sum::<f64>() / (h * h)
                } else {
                    let mut acc = 0.0;
                    for &(si, ci) in &w {
                        for &(sj, cj) in &w {
                            acc += ci * cj * shifted(&[(i, si), (j, sj)]);
                        }
                    }
                    acc / (h * h)
                };
            }
        }
        (grad, hess)
    }

    proptest! {
        #[test]
        fn jets_match_fourth_order_differences(
            (vars, src, pt) in (1usize..=4).prop_flat_map(|v| (Just(v), arb_poly(v), proptest::collection::vec(-1.5f64..1.5, v)))
        ) {
            let nm = names(vars);
            let refs: Vec<&str> = nm.iter().map(|s| s.as_str()).collect();
            let e = parse_expression(&src, &refs, &[]).unwrap();
            let j = e.eval_jet2_with(&pt, &[]).unwrap();
            let f = |q: &[f64]| e.eval_value(q).unwrap();
            let (g, h) = fd4(&f, &pt, 1e-2);
            let scale = 1.0 + j.value().abs() + g.iter().map(|x| x.abs()).sum::<f64>();
            for i in 0..vars {
                prop_assert!((j.d(i) - g[i]).abs() <= 1e-7 * scale);
                for k in 0..vars {
                    prop_assert!((j.dd(i, k) - h[i][k]).abs() <= 1e-7 * scale.max(1.0) * 10.0);
                }
            }
        }

        #[test]
        fn jet_evaluation_is_linear(
            a in -3.0f64..3.0, x in 0.1f64..2.0, y in -2.0f64..2.0
        ) {
            let vars = ["x", "y"];
            let e1 = parse_expression("sin(x)*y^2", &vars, &[]).unwrap();
            let e2 = parse_expression("exp(x*y) - sqrt(x)", &vars, &[]).unwrap();
            let combo = e1.scale(a).add(&e2);
            let p = [x, y];
            let lhs = combo.eval_jet2_with(&p, &[]).unwrap();
            let j1 = e1.eval_jet2_with(&p, &[]).unwrap();
            let j2 = e2.eval_jet2_with(&p, &[]).unwrap();
            let rhs = j1.scale(a) + j2;
            let tol = 1e-13 * (1.0 + rhs.value().abs());
            prop_assert!((lhs.value() - rhs.value()).abs() <= tol);
            for i in 0..2 {
                prop_assert!((lhs.d(i) - rhs.d(i)).abs() <= 1e-13 * (1.0 + rhs.d(i).abs()));
                for k in 0..2 {
                    prop_assert!((lhs.dd(i, k) - rhs.dd(i, k)).abs() <= 1e-13 * (1.0 + rhs.dd(i, k).abs()));
                }
            }
        }

        #[test]
        fn chain_rule_for_catalog_functions(x in 0.2f64..1.2, fi in 0usize..10, gi in 0usize..10) {
            // f(g(x)) with the second-order chain rule f'' g'^2 + f' g''.
            let fs = Func::ALL;
            let (f, g) = (fs[fi], fs[gi]);
            let src = format!("{}({}(x))", f.name(), g.name());
            let e = parse_expression(&src, &["x"], &[]).unwrap();
            let inner = parse_expression(&format!("{}(x)", g.name()), &["x"], &[]).unwrap();
            let Ok(gj) = inner.eval_jet2_with(&[x], &[]) else { return Ok(()); };
            let outer = parse_expression(&format!("{}(u)", f.name()), &["u"], &[]).unwrap();
            let Ok(fj) = outer.eval_jet2_with(&[gj.value()], &[]) else { return Ok(()); };
            let j = e.eval_jet2_with(&[x], &[]).unwrap();
            let d1 = fj.d(0) * gj.d(0);
            let d2 = fj.dd(0, 0) * gj.d(0) * gj.d(0) + fj.d(0) * gj.dd(0, 0);
            prop_assert!((j.value() - fj.value()).abs() <= 1e-15 * (1.0 + fj.value().abs()));
            prop_assert!((j.d(0) - d1).abs() <= 1e-14 * (1.0 + d1.abs()));
            prop_assert!((j.dd(0, 0) - d2).abs() <= 1e-13 * (1.0 + d2.abs()));
        }

        #[test]
        fn print_parse_round_trip(src in arb_poly(3), wrap in 0usize..4) {
            let wrapped = match wrap {
                0 => src.clone(),
                1 => format!("sqrt(1 + ({src})^2)"),
                2 => format!("-({src})/(2 - x0)^-1"),
                _ => format!("atan2({src}, cosh(x1))"),
            };
            let nm = names(3);
            let refs: Vec<&str> = nm.iter().map(|s| s.as_str()).collect();
            let e = parse_expression(&wrapped, &refs, &[]).unwrap();
            let again = parse_expression(&e.to_string(), &refs, &[]).unwrap();
            prop_assert_eq!(e, again);
        }
    }
}
