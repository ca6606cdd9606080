//! Randomized property checks.
//!
//! Exact-rational arithmetic is checked against `num_rational::BigRational`
//! as an independent oracle; structural invariants (constant width, text
//! round trips, scaling equivariance, zero-regret equilibria) are checked on
//! generated programs and grids with full shrinking support.

use fpreduce_core::brouwer::{from_color_table, Color};
use fpreduce_core::circuit;
use fpreduce_core::game::{
    add_loopback, assignment_from_fixed_point, build_game, construct_equilibrium,
    extract_gate_values, rescale_tenth, verify_regret, MixWeight,
};
use fpreduce_core::slp::{parse_program, FlatArg, FlatLine, FlatOp, FlatSlp, VarId};
use fpreduce_core::Rat;
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

/// A rational in `[0, 1]` derived from two raw bytes.
fn unit_rat(n_raw: u8, d_raw: u8) -> Rat {
    let den = (d_raw % 16) as i64 + 1;
    let num = (n_raw as i64) % (den + 1);
    Rat::new(num, den)
}

/// Signed rational with small numerator and denominator.
fn signed_rat() -> impl Strategy<Value = Rat> {
    (-400i64..=400, 1i64..=24).prop_map(|(n, d)| Rat::new(n, d))
}

/// Raw operand descriptor: variable pick, literal switch, literal bytes.
type RawOperand = (u16, bool, u8, u8);

/// Raw gate descriptor: op selector, reassignment switch, two operands,
/// scaling-factor bytes.
type RawLine = (u8, bool, RawOperand, RawOperand, (u8, u8));

fn raw_line() -> impl Strategy<Value = RawLine> {
    (
        0u8..4,
        any::<bool>(),
        (any::<u16>(), any::<bool>(), any::<u8>(), any::<u8>()),
        (any::<u16>(), any::<bool>(), any::<u8>(), any::<u8>()),
        (any::<u8>(), any::<u8>()),
    )
}

/// Deterministically assembles raw descriptors into a well-formed program:
/// every operand refers to an already-defined variable (by reduction modulo
/// the defined count), reassignments reuse an existing slot, and outputs are
/// a nonempty distinct selection. `fixed_outputs` pins the output count.
fn assemble(
    num_inputs: usize,
    raw: &[RawLine],
    out_seeds: &[u16],
    fixed_outputs: Option<usize>,
) -> FlatSlp {
    let mut names: Vec<String> = (0..num_inputs).map(|i| format!("i{i}")).collect();
    let mut defined: Vec<VarId> = (0..num_inputs as VarId).collect();
    let mut lines = Vec::with_capacity(raw.len());
    for (t, (sel, reassign, a, b, factor)) in raw.iter().enumerate() {
        let dst: VarId = if *reassign {
            defined[(a.0 as usize) % defined.len()]
        } else {
            names.push(format!("t{t}"));
            (names.len() - 1) as VarId
        };
        let operand = |o: &RawOperand| -> FlatArg {
            if o.1 {
                FlatArg::Lit(unit_rat(o.2, o.3))
            } else {
                FlatArg::Var(defined[(o.0 as usize) % defined.len()])
            }
        };
        let op = match sel % 4 {
            0 => FlatOp::Const(unit_rat(a.2, a.3)),
            1 => FlatOp::AddB(operand(a), operand(b)),
            2 => FlatOp::SubB(operand(a), operand(b)),
            _ => {
                let den = (factor.1 % 4) as i64 + 1;
                let num = (factor.0 % 13) as i64;
                FlatOp::MulB(operand(a), Rat::new(num, den))
            }
        };
        if !defined.contains(&dst) {
            defined.push(dst);
        }
        lines.push(FlatLine { dst, op });
    }
    let want = fixed_outputs
        .unwrap_or_else(|| 1 + (out_seeds[0] as usize) % defined.len().clamp(1, 6))
        .min(defined.len());
    let mut pool = defined.clone();
    let mut outputs = Vec::with_capacity(want);
    for seed in out_seeds.iter().cycle().take(want) {
        outputs.push(pool.swap_remove((*seed as usize) % pool.len()));
    }
    FlatSlp::new(names, (0..num_inputs as VarId).collect(), outputs, lines)
        .expect("assembled program is well-formed")
}

fn input_points(seeds: &[(u8, u8)], n: usize) -> Vec<Rat> {
    seeds.iter().take(n).map(|&(a, b)| unit_rat(a, b)).collect()
}

// ---------------------------------------------------------------------------
// exact arithmetic against the big-rational oracle
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn arithmetic_matches_bigrational(a in signed_rat(), b in signed_rat()) {
        prop_assert_eq!((&a + &b).to_big(), a.to_big() + b.to_big());
        prop_assert_eq!((&a - &b).to_big(), a.to_big() - b.to_big());
        prop_assert_eq!((&a * &b).to_big(), a.to_big() * b.to_big());
        if !b.is_zero() {
            prop_assert_eq!((&a / &b).to_big(), a.to_big() / b.to_big());
        }
        prop_assert_eq!((-&a).to_big(), -a.to_big());
        prop_assert_eq!(Rat::from_big(a.to_big()), a.clone());
        prop_assert_eq!(a.cmp(&b), a.to_big().cmp(&b.to_big()));
        prop_assert_eq!(a.to_string().parse::<Rat>().expect("parse"), a.clone());
        let floor = a.floor_i64().expect("small value");
        prop_assert!(Rat::int(floor) <= a && a < Rat::int(floor + 1));
        let abs = a.abs();
        prop_assert!(abs >= Rat::zero());
        prop_assert!(abs == a || abs == -&a);
    }

    #[test]
    fn clipped_ops_match_oracle_and_stay_in_range(
        (an, ad) in (any::<u8>(), any::<u8>()),
        (bn, bd) in (any::<u8>(), any::<u8>()),
        (fn_, fd) in (0u8..26, any::<u8>()),
    ) {
        let one = Rat::one();
        let a = unit_rat(an, ad);
        let b = unit_rat(bn, bd);
        let factor = Rat::new(fn_ as i64, (fd % 4) as i64 + 1);

        let sum = a.add_clip(&b, &one);
        let expected = (a.to_big() + b.to_big()).min(one.to_big());
        prop_assert_eq!(sum.to_big(), expected);

        let diff = a.sub_clip(&b);
        let expected = (a.to_big() - b.to_big()).max(Rat::zero().to_big());
        prop_assert_eq!(diff.to_big(), expected);

        let prod = a.mul_clip(&factor, &one);
        let expected = (a.to_big() * factor.to_big()).min(one.to_big());
        prop_assert_eq!(prod.to_big(), expected);

        for r in [&sum, &diff, &prod] {
            prop_assert!(*r >= Rat::zero() && *r <= one);
        }
    }
}

// ---------------------------------------------------------------------------
// programs: compilation, text round trips, scaling, residuals
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn compilation_preserves_semantics(
        num_inputs in 1usize..=6,
        raw in prop::collection::vec(raw_line(), 1..=40),
        out_seeds in prop::collection::vec(any::<u16>(), 1..=6),
        point in prop::collection::vec((any::<u8>(), any::<u8>()), 6),
    ) {
        let program = assemble(num_inputs, &raw, &out_seeds, None);
        let circ = circuit::compile(&program).expect("compile");
        circ.validate().expect("synchronous");
        prop_assert_eq!(circ.width(), program.max_live());
        prop_assert_eq!(circ.depth(), program.lines.len().max(1));
        let inputs = input_points(&point, num_inputs);
        let direct = program.interpret(&inputs).expect("interpret");
        let compiled = circ.evaluate(&inputs).expect("evaluate");
        prop_assert_eq!(direct, compiled);
    }

    #[test]
    fn text_form_round_trips(
        num_inputs in 1usize..=5,
        raw in prop::collection::vec(raw_line(), 1..=25),
        out_seeds in prop::collection::vec(any::<u16>(), 1..=4),
        point in prop::collection::vec((any::<u8>(), any::<u8>()), 5),
    ) {
        let program = assemble(num_inputs, &raw, &out_seeds, None);
        let reparsed = parse_program(&program.to_text())
            .expect("parse")
            .expand()
            .expect("expand");
        let inputs = input_points(&point, num_inputs);
        prop_assert_eq!(
            program.interpret(&inputs).expect("interpret"),
            reparsed.interpret(&inputs).expect("interpret"),
        );
    }

    #[test]
    fn rescaling_is_pointwise_division_by_ten(
        raw in prop::collection::vec(raw_line(), 1..=25),
        out_seeds in prop::collection::vec(any::<u16>(), 1..=4),
        point in prop::collection::vec((any::<u8>(), any::<u8>()), 2),
    ) {
        let program = assemble(2, &raw, &out_seeds, Some(2));
        let circ = circuit::compile(&program).expect("compile");
        let scaled = rescale_tenth(&circ);
        let ten = Rat::int(10);
        let p = input_points(&point, 2);
        let small: Vec<Rat> = p.iter().map(|v| v / &ten).collect();
        let full = circ.evaluate(&p).expect("evaluate");
        let tenth = scaled.evaluate(&small).expect("evaluate");
        for (lhs, rhs) in tenth.iter().zip(full.iter()) {
            prop_assert_eq!(&(lhs * &ten), rhs);
        }
        prop_assert_eq!(
            &scaled.residual(&small).expect("residual") * &ten,
            circ.residual(&p).expect("residual"),
        );
    }

    #[test]
    fn residual_vanishes_exactly_at_fixed_points(
        raw in prop::collection::vec(raw_line(), 1..=25),
        out_seeds in prop::collection::vec(any::<u16>(), 1..=4),
        point in prop::collection::vec((any::<u8>(), any::<u8>()), 2),
    ) {
        let program = assemble(2, &raw, &out_seeds, Some(2));
        let circ = circuit::compile(&program).expect("compile");
        let p = input_points(&point, 2);
        let out = circ.evaluate(&p).expect("evaluate");
        let residual = circ.residual(&p).expect("residual");
        prop_assert!(residual >= Rat::zero());
        prop_assert_eq!(residual.is_zero(), out == p);
    }
}

// ---------------------------------------------------------------------------
// grids and games
// ---------------------------------------------------------------------------

fn color_from(byte: u8) -> Color {
    match byte % 3 {
        0 => Color::C1,
        1 => Color::C2,
        _ => Color::C3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        cases: 64,
        ..ProptestConfig::default()
    })]

    #[test]
    fn color_tables_round_trip_through_netlists(
        n in 1u32..=3,
        bytes in prop::collection::vec(any::<u8>(), 64),
    ) {
        let side = 1usize << n;
        let table: Vec<Vec<Color>> = (0..side)
            .map(|gy| (0..side).map(|gx| color_from(bytes[gy * side + gx])).collect())
            .collect();
        let inst = from_color_table(n, &table).expect("instance");
        inst.check_one_hot().expect("one-hot everywhere");
        for (gy, row) in table.iter().enumerate() {
            for (gx, want) in row.iter().enumerate() {
                prop_assert_eq!(
                    inst.eval_color(gx as u64, gy as u64).expect("color"),
                    *want
                );
            }
        }
    }

    #[test]
    fn copy_circuit_equilibria_have_zero_regret(
        (xn, xd) in (any::<u8>(), any::<u8>()),
        (yn, yd) in (any::<u8>(), any::<u8>()),
    ) {
        let src = "inputs x, y
            x <- x *b 1
            y <- y *b 1
            x <- x *b 1
            y <- y *b 1
            x <- x *b 1
            y <- y *b 1
            outputs x, y";
        let program = parse_program(src).expect("parse").expand().expect("expand");
        let circ = circuit::compile(&program).expect("compile");
        let sys = add_loopback(&rescale_tenth(&circ)).expect("loopback");
        let game = build_game(&sys, MixWeight::Auto).expect("game");
        let x = unit_rat(xn, xd);
        let y = unit_rat(yn, yd);
        let assignment = assignment_from_fixed_point(&sys, &x, &y).expect("assignment");
        let profile = construct_equilibrium(&game, &sys, &assignment).expect("equilibrium");
        let report = verify_regret(&game, &profile).expect("regret");
        prop_assert!(report.max_regret.is_zero());
        let extraction = extract_gate_values(&game, &sys, &profile).expect("extraction");
        prop_assert!(extraction.consistent);
        prop_assert_eq!(extraction.induced_point, (x, y));
    }
}
