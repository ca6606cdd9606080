//! End-to-end acceptance checks.
//!
//! Each test exercises one acceptance criterion and writes a single
//! PASS/FAIL line straight to stdout (bypassing the harness capture), so a
//! plain `cargo test` run shows the verdicts inline. Criteria with a
//! runtime budget fail when they exceed it.

use std::io::Write as _;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fpreduce_core::brouwer::{
    enforce_boundary, find_trichromatic, from_color_table, thicken, BoolCircuit, BoolGate,
    BoundaryMode, Builder, Color, DiscreteBrouwerInstance,
};
use fpreduce_core::circuit::{self, GateOp, SyncCircuit};
use fpreduce_core::game::{
    add_loopback, assignment_from_fixed_point, build_game, construct_equilibrium,
    extract_gate_values, rescale_tenth, verify_regret, MixWeight,
};
use fpreduce_core::reduction::{
    build_reduction, count_poorly_positioned, displacement_geometry_check, exact_walk_thresholds,
    ReductionParams, MACRO_LIBRARY,
};
use fpreduce_core::slp::{parse_program, FlatArg, FlatLine, FlatOp, FlatSlp, VarId};
use fpreduce_core::Rat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Writes one line directly to stdout so it survives test capture.
fn report_line(line: &str) {
    let mut out = std::io::stdout();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Runs one criterion body, timing it and printing a single verdict line.
/// The body returns a short summary used on success; panics (failed
/// assertions) and blown budgets turn into a FAIL line plus a test failure.
fn criterion(number: u32, what: &str, budget: Option<Duration>, body: impl FnOnce() -> String) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let stamp = format!("criterion {number} ({what})");
    match outcome {
        Ok(summary) => {
            if let Some(limit) = budget {
                if elapsed > limit {
                    report_line(&format!(
                        "{stamp}: FAIL [{elapsed:.2?} over the {limit:?} budget] {summary}"
                    ));
                    panic!("{stamp} exceeded its {limit:?} budget: took {elapsed:.2?}");
                }
            }
            report_line(&format!("{stamp}: PASS [{elapsed:.2?}] {summary}"));
        }
        Err(cause) => {
            report_line(&format!("{stamp}: FAIL [{elapsed:.2?}]"));
            resume_unwind(cause);
        }
    }
}

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

fn compiled(src: &str) -> SyncCircuit {
    let program = parse_program(src).expect("parse").expand().expect("expand");
    circuit::compile(&program).expect("compile")
}

/// A random rational in `[0, 1]` with denominator at most `max_den`.
fn unit_rat(rng: &mut ChaCha8Rng, max_den: i64) -> Rat {
    let den = rng.gen_range(1..=max_den);
    let num = rng.gen_range(0..=den);
    Rat::new(num, den)
}

// ---------------------------------------------------------------------------
// criterion 1: reductions always compile at constant width 8
// ---------------------------------------------------------------------------

/// A netlist over `2n` inputs that colors every grid point 1, shaped like
/// the generic instances fed to the displacement builder: a tautology, its
/// negation, and three disjunction outputs.
fn constant_color_instance(n: u32) -> DiscreteBrouwerInstance {
    let mut b = Builder::new(2 * n as usize);
    let x = b.input(0);
    let nx = b.not(x);
    let tru = b.or(x, nx);
    let fls = b.not(tru);
    let c1 = b.or(tru, tru);
    let c2 = b.or(fls, fls);
    let c3 = b.or(fls, fls);
    DiscreteBrouwerInstance::new(n, b.finish(vec![c1, c2, c3])).expect("instance")
}

#[test]
fn c01_reductions_compile_at_width_eight() {
    criterion(
        1,
        "constant-width displacement circuits",
        Some(Duration::from_secs(10)),
        || {
            let eps = rat(1, 5);
            let mut combos = 0;
            for n in 2..=6u32 {
                let inst = constant_color_instance(n);
                for k in 3..=9u32 {
                    let params = ReductionParams::with_defaults(n, k, eps.clone()).expect("params");
                    let red = build_reduction(&inst, &params).expect("reduction");
                    assert_eq!(red.program.max_live(), 8, "peak liveness for n={n}, k={k}");
                    assert_eq!(red.circuit.width(), 8, "circuit width for n={n}, k={k}");
                    combos += 1;
                }
            }
            assert_eq!(combos, 35);
            "35 (n, k) combinations; every program peaks at 8 live values and \
             compiles to width exactly 8"
                .to_owned()
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 2: the circuit compiler preserves interpreter semantics
// ---------------------------------------------------------------------------

/// Builds a random flat program: `num_inputs` inputs, up to `max_lines`
/// gates drawing operands from anything already defined (or inline
/// literals), occasional reassignment, and `num_outputs` outputs if given
/// (otherwise a random nonempty selection).
fn random_flat_program(
    rng: &mut ChaCha8Rng,
    num_inputs: usize,
    max_lines: usize,
    num_outputs: Option<usize>,
) -> FlatSlp {
    let num_lines = rng.gen_range(1..=max_lines);
    let mut names: Vec<String> = (0..num_inputs).map(|i| format!("i{i}")).collect();
    let mut defined: Vec<VarId> = (0..num_inputs as VarId).collect();
    let mut lines = Vec::with_capacity(num_lines);
    for t in 0..num_lines {
        let dst: VarId = if rng.gen_bool(0.25) {
            defined[rng.gen_range(0..defined.len())]
        } else {
            names.push(format!("t{t}"));
            (names.len() - 1) as VarId
        };
        fn operand(rng: &mut ChaCha8Rng, defined: &[VarId]) -> FlatArg {
            if rng.gen_bool(0.2) {
                FlatArg::Lit(unit_rat(rng, 16))
            } else {
                FlatArg::Var(defined[rng.gen_range(0..defined.len())])
            }
        }
        let op = match rng.gen_range(0..4) {
            0 => FlatOp::Const(unit_rat(rng, 16)),
            1 => FlatOp::AddB(operand(rng, &defined), operand(rng, &defined)),
            2 => FlatOp::SubB(operand(rng, &defined), operand(rng, &defined)),
            _ => {
                let factor = rat(rng.gen_range(0..=12), rng.gen_range(1..=4));
                FlatOp::MulB(operand(rng, &defined), factor)
            }
        };
        if !defined.contains(&dst) {
            defined.push(dst);
        }
        lines.push(FlatLine { dst, op });
    }
    let want = num_outputs.unwrap_or_else(|| rng.gen_range(1..=defined.len().min(6)));
    assert!(want <= defined.len());
    let mut pool = defined.clone();
    let mut outputs = Vec::with_capacity(want);
    for _ in 0..want {
        outputs.push(pool.swap_remove(rng.gen_range(0..pool.len())));
    }
    FlatSlp::new(names, (0..num_inputs as VarId).collect(), outputs, lines)
        .expect("generated program is well-formed")
}

#[test]
fn c02_compiler_agrees_with_interpreter() {
    criterion(
        2,
        "compiled circuits match direct interpretation",
        Some(Duration::from_secs(30)),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xAC02);
            for case in 0..100 {
                let program = random_flat_program(&mut rng, 10, 60, None);
                let circ = circuit::compile(&program).expect("compile");
                circ.validate().expect("compiled circuit is synchronous");
                assert_eq!(circ.width(), program.max_live(), "case {case}: width");
                let inputs: Vec<Rat> = (0..10).map(|_| unit_rat(&mut rng, 16)).collect();
                let direct = program.interpret(&inputs).expect("interpret");
                let via_circuit = circ.evaluate(&inputs).expect("evaluate");
                assert_eq!(direct, via_circuit, "case {case}: outputs differ");
            }
            "100 random programs (up to 60 lines, 10 inputs) evaluate \
             identically before and after compilation"
                .to_owned()
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 3: at most two poorly positioned samples per averaging train
// ---------------------------------------------------------------------------

#[test]
fn c03_sample_trains_stay_well_positioned() {
    criterion(3, "per-train poorly-positioned sample bound", None, || {
        let params = ReductionParams::with_defaults(4, 5, rat(1, 5)).expect("params");
        assert_eq!(params.l(), Rat::int(224), "decoder margin L");
        let mut max_poor = 0u32;
        let mut worst = (Rat::zero(), Rat::zero());
        let audit = |x: &Rat, y: &Rat, max_poor: &mut u32, worst: &mut (Rat, Rat)| {
            let poor = count_poorly_positioned(&params, x, y);
            if poor > *max_poor {
                *max_poor = poor;
                *worst = (x.clone(), y.clone());
            }
        };
        let res = 512i64;
        for i in 0..=res {
            let x = rat(i, res);
            for j in 0..=res {
                audit(&x, &rat(j, res), &mut max_poor, &mut worst);
            }
        }
        let grid_points = ((res + 1) * (res + 1)) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0xAC03);
        let random_points = 100_000;
        for _ in 0..random_points {
            let x = unit_rat(&mut rng, 1 << 20);
            let y = unit_rat(&mut rng, 1 << 20);
            audit(&x, &y, &mut max_poor, &mut worst);
        }
        assert!(
            max_poor <= 2,
            "{max_poor} poorly positioned samples at ({}, {})",
            worst.0,
            worst.1
        );
        format!(
            "n=4, k=5: worst train has {max_poor} poorly positioned samples \
                 (bound 2) over a {grid_points}-point dyadic grid and \
                 {random_points} random points"
        )
    });
}

// ---------------------------------------------------------------------------
// criterion 4: packed bit-walk simulation of random netlists
// ---------------------------------------------------------------------------

/// A random netlist in textual form: NOT/OR gates over earlier signals.
fn random_netlist(rng: &mut ChaCha8Rng, num_inputs: usize, gates: usize) -> BoolCircuit {
    let mut text = format!("inputs {num_inputs}\n");
    for t in 0..gates {
        let id = num_inputs + t + 1;
        let pick = |rng: &mut ChaCha8Rng| rng.gen_range(1..id);
        if rng.gen_bool(0.5) {
            text.push_str(&format!("g{id} = NOT g{}\n", pick(rng)));
        } else {
            text.push_str(&format!("g{id} = OR g{} g{}\n", pick(rng), pick(rng)));
        }
    }
    text.push_str(&format!("outputs g{}\n", num_inputs + gates));
    BoolCircuit::parse(&text).expect("generated netlist parses")
}

/// The straight-line source that simulates `netlist` on one packed input:
/// input bits sit at positions `1..=I`, gate `t` writes position `I+t`.
fn packed_simulation_source(netlist: &BoolCircuit, t: &Rat, g: &Rat) -> String {
    let mut src = String::from("inputs seed\noutputs xs\n");
    src.push_str(MACRO_LIBRARY);
    src.push_str("\nxs <- seed *b 1\n");
    for (idx, gate) in netlist.gates.iter().enumerate() {
        let out_pos = netlist.num_inputs + idx + 1;
        match gate {
            BoolGate::Not(a) => src.push_str(&format!("Not(xs, {a}, {out_pos}, {t}, {g})\n")),
            BoolGate::Or(a, b) => {
                src.push_str(&format!("Or(xs, {a}, {b}, {out_pos}, {t}, {g})\n"));
            }
        }
    }
    src
}

/// The bit of `value` at position `pos` (weight `2^-pos`), for exact
/// dyadics whose scaled numerator fits an `i64`.
fn bit_at(value: &Rat, pos: u32) -> bool {
    let scaled = value * &Rat::pow2(pos as i32);
    let floor = scaled.floor_i64().expect("scaled dyadic fits an i64");
    floor & 1 == 1
}

#[test]
fn c04_packed_walks_simulate_netlists() {
    criterion(
        4,
        "packed simulation of Boolean netlists",
        Some(Duration::from_secs(60)),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xAC04);
            let mut packed_evals = 0usize;
            for case in 0..50 {
                let num_inputs = rng.gen_range(2..=8usize);
                let gates = rng.gen_range(1..=16usize);
                let netlist = random_netlist(&mut rng, num_inputs, gates);
                let bit_budget = (num_inputs + gates) as u32;
                let (t, g) = exact_walk_thresholds(bit_budget);
                let src = packed_simulation_source(&netlist, &t, &g);
                let program = parse_program(&src)
                    .expect("parse")
                    .expand()
                    .expect("expand");
                for mask in 0u64..(1 << num_inputs) {
                    let input_bits: Vec<bool> =
                        (0..num_inputs).map(|i| (mask >> i) & 1 == 1).collect();
                    let expected = netlist.eval_all(&input_bits).expect("netlist eval");
                    let mut seed = Rat::zero();
                    for (i, &bit) in input_bits.iter().enumerate() {
                        if bit {
                            seed = &seed + &Rat::pow2(-(i as i32) - 1);
                        }
                    }
                    let out = program.interpret(&[seed]).expect("interpret");
                    for t in 1..=gates {
                        let signal = num_inputs + t;
                        assert_eq!(
                            bit_at(&out[0], signal as u32),
                            expected[signal],
                            "case {case}, input mask {mask:#b}, gate signal {signal}"
                        );
                    }
                    packed_evals += 1;
                }
            }
            format!(
                "50 random netlists, every Boolean input ({packed_evals} packed \
                 evaluations): all simulated gate bits match direct evaluation"
            )
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 5: grid enlargement translates witnesses out of the border
// ---------------------------------------------------------------------------

#[test]
fn c05_enlargement_translates_witnesses() {
    criterion(
        5,
        "witness-preserving grid enlargement",
        Some(Duration::from_secs(60)),
        || {
            let one = Rat::one();
            let mut rng = ChaCha8Rng::seed_from_u64(0xAC05);
            let mut witnesses = 0usize;
            for case in 0..20usize {
                // The boundary bands must all be nonempty for a witness to be
                // guaranteed: eps must be at least one grid cell.
                let (n, eps): (u32, Rat) = if case % 2 == 0 {
                    (2, rat(1, 4))
                } else {
                    (3, rat(1, 5))
                };
                let side = 1usize << n;
                let table: Vec<Vec<Color>> = (0..side)
                    .map(|_| {
                        (0..side)
                            .map(|_| match rng.gen_range(0..3) {
                                0 => Color::C1,
                                1 => Color::C2,
                                _ => Color::C3,
                            })
                            .collect()
                    })
                    .collect();
                let raw = from_color_table(n, &table).expect("table instance");
                let inst = enforce_boundary(&raw, BoundaryMode::Thick(eps.clone()))
                    .expect("boundary discipline");
                let hits = find_trichromatic(&inst).expect("search");
                assert!(
                    !hits.is_empty(),
                    "case {case}: proper instance has a witness"
                );
                let thick = thicken(&inst, &eps).expect("enlarge");
                let thick_hits = find_trichromatic(&thick.instance).expect("search");
                let (dx, dy) = thick.offset;
                let translated: Vec<(u64, u64)> =
                    hits.iter().map(|&(x, y)| (x + dx, y + dy)).collect();
                assert_eq!(thick_hits, translated, "case {case}: witness sets differ");
                let big_side = thick.instance.side() as i64;
                for &(x, y) in &thick_hits {
                    for (lo, hi) in [(x, x + 1), (y, y + 1)] {
                        assert!(
                            rat(hi as i64, big_side) > eps
                                && rat(lo as i64, big_side) < &one - &eps,
                            "case {case}: witness ({x}, {y}) touches the eps-border"
                        );
                    }
                }
                witnesses += hits.len();
            }
            format!(
                "20 random disciplined instances: every witness square ({witnesses} \
                 total) reappears exactly at the enlargement offset, none in the \
                 eps-border"
            )
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 6: exact displacement geometry minima
// ---------------------------------------------------------------------------

#[test]
fn c06_displacement_geometry_closed_forms() {
    criterion(6, "exact displacement-geometry minima", None, || {
        let tolerance = rat(1, 1000);
        let mut combos = 0;
        for n in 2..=6u32 {
            for k in [3u32, 5, 9] {
                for eps in [rat(1, 5), rat(1, 4), rat(2, 5)] {
                    let params = ReductionParams::with_defaults(n, k, eps).expect("params");
                    let geo = displacement_geometry_check(&params);
                    let ep = &params.eps_prime;
                    let r = &params.r;
                    let tilted = &(r - &Rat::one()) * ep;
                    let mixed = ep / &(&Rat::one() + r);
                    assert_eq!(geo.single_min, ep.clone(), "single-vector minimum");
                    for pm in &geo.pair_mins {
                        let want = match pm.colors {
                            (1, 2) | (1, 3) => &mixed,
                            (2, 3) => &tilted,
                            other => panic!("unexpected color pair {other:?}"),
                        };
                        assert_eq!(&pm.min_norm, want, "pair {:?}", pm.colors);
                    }
                    assert_eq!(geo.pair_mins.len(), 3);
                    assert_eq!(geo.overall_min, mixed, "overall minimum");
                    assert!(
                        geo.overall_min > tolerance,
                        "overall minimum {} under the pinned 1/1000 tolerance",
                        geo.overall_min
                    );
                    combos += 1;
                }
            }
        }
        assert_eq!(combos, 45);
        "45 parameter combinations match the closed forms (singles eps', \
             pair {2,3} (r-1)eps', pairs with 1 eps'/(1+r)); every overall \
             minimum clears the pinned 1/1000 tolerance"
            .to_owned()
    });
}

// ---------------------------------------------------------------------------
// criterion 7: tenth-scale rescaling divides residuals by ten
// ---------------------------------------------------------------------------

#[test]
fn c07_rescaling_divides_residuals_by_ten() {
    criterion(
        7,
        "tenth-scale residual equivariance",
        Some(Duration::from_secs(30)),
        || {
            let ten = Rat::int(10);
            let mut rng = ChaCha8Rng::seed_from_u64(0xAC07);
            for case in 0..50 {
                let program = random_flat_program(&mut rng, 2, 30, Some(2));
                let circ = circuit::compile(&program).expect("compile");
                let scaled = rescale_tenth(&circ);
                scaled.validate().expect("rescaled circuit is well-formed");
                for point in 0..20 {
                    let p = [unit_rat(&mut rng, 64), unit_rat(&mut rng, 64)];
                    let down = [&p[0] / &ten, &p[1] / &ten];
                    let original = circ.residual(&p).expect("residual");
                    let rescaled = scaled.residual(&down).expect("rescaled residual");
                    assert_eq!(
                        &rescaled * &ten,
                        original,
                        "case {case}, point {point}: residuals not in 10:1 ratio"
                    );
                }
            }
            "50 random two-coordinate circuits x 20 points: rescaled residual \
             at p/10 equals exactly one tenth of the original residual at p"
                .to_owned()
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 8: fixed points become exact zero-regret equilibria and back
// ---------------------------------------------------------------------------

const IDENTITY: &str = "inputs x, y
    x <- x *b 1
    y <- y *b 1
    x <- x *b 1
    y <- y *b 1
    x <- x *b 1
    y <- y *b 1
    x <- x *b 1
    y <- y *b 1
    outputs x, y";

const CONSTANT_HALF: &str = "inputs x, y
    x <- x *b 0
    y <- y *b 0
    x <- x +b 1/2
    y <- y +b 1/2
    outputs x, y";

const INTERIOR_ADD: &str = "inputs x, y
    y <- x +b 1/4
    x <- x *b 0
    x <- x +b 1/4
    y <- y *b 1
    outputs x, y";

const CLIPPED_SUB: &str = "inputs x, y
    x <- x -b y
    y <- y *b 0
    y <- y +b 1/8
    x <- x *b 1
    outputs x, y";

const CLIPPED_MUL: &str = "inputs x, y
    x <- x *b 3
    y <- y *b 0
    y <- y +b 1/2
    x <- x *b 1
    outputs x, y";

const ALL_ZERO: &str = "inputs x, y
    x <- x *b 0
    y <- y *b 0
    x <- x *b 1
    y <- y *b 1
    outputs x, y";

#[test]
fn c08_fixed_points_round_trip_through_games() {
    criterion(
        8,
        "equilibrium construction and extraction round trip",
        None,
        || {
            let cases: [(&str, &str, Rat, Rat, Rat); 6] = [
                ("identity", IDENTITY, rat(2, 5), rat(3, 5), Rat::int(41)),
                (
                    "constant half",
                    CONSTANT_HALF,
                    rat(1, 2),
                    rat(1, 2),
                    Rat::int(43),
                ),
                (
                    "interior add",
                    INTERIOR_ADD,
                    rat(1, 4),
                    rat(1, 2),
                    Rat::int(42),
                ),
                (
                    "clipped sub",
                    CLIPPED_SUB,
                    Rat::zero(),
                    rat(1, 8),
                    rat(83, 2),
                ),
                (
                    "clipped mul",
                    CLIPPED_MUL,
                    Rat::one(),
                    rat(1, 2),
                    Rat::int(121),
                ),
                ("all zero", ALL_ZERO, Rat::zero(), Rat::zero(), Rat::int(41)),
            ];
            for (name, src, fx, fy, weight) in &cases {
                let circ = compiled(src);
                assert_eq!(
                    circ.evaluate(&[fx.clone(), fy.clone()]).expect("evaluate"),
                    vec![fx.clone(), fy.clone()],
                    "{name}: chosen point is not fixed"
                );
                let sys = add_loopback(&rescale_tenth(&circ)).expect("loopback");
                let game = build_game(&sys, MixWeight::Auto).expect("game");
                assert_eq!(&game.mix_weight, weight, "{name}: auto mix weight");
                let assignment = assignment_from_fixed_point(&sys, fx, fy).expect("assignment");
                let profile = construct_equilibrium(&game, &sys, &assignment).expect("equilibrium");
                let regret = verify_regret(&game, &profile).expect("regret");
                assert!(
                    regret.max_regret.is_zero(),
                    "{name}: max regret {} is not zero",
                    regret.max_regret
                );
                let extraction = extract_gate_values(&game, &sys, &profile).expect("extract");
                assert!(
                    extraction.consistent,
                    "{name}: extracted gates inconsistent"
                );
                assert_eq!(
                    extraction.induced_point,
                    (fx.clone(), fy.clone()),
                    "{name}: induced point"
                );
                assert_eq!(extraction.assignment, assignment, "{name}: assignment");
            }
            "six circuits (copies, constants, interior and clipped gates): \
             exact zero-regret equilibria whose extraction returns the original \
             fixed point, with the predicted automatic mix weights"
                .to_owned()
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 9: deviations are punished
// ---------------------------------------------------------------------------

#[test]
fn c09_deviations_are_punished() {
    criterion(9, "regret under profile perturbations", None, || {
        // (a) Cross-pair deviation: a variable player moves 1/100 of mass
        // onto a different pair, and its matching-pennies partner answers
        // with the pure best response (all mass on the now-heaviest pair).
        // The deviator's regret must land in (M/10, 3M/25): its pair
        // weight on the punished pair is 11/100, every non-coupling
        // payoff lies in [0, 1/10], so the regret is 11M/100 +- 1/10.
        let circ = compiled(IDENTITY);
        let sys = add_loopback(&rescale_tenth(&circ)).expect("loopback");
        let game = build_game(&sys, MixWeight::Auto).expect("game");
        let m = game.mix_weight.clone();
        let assignment =
            assignment_from_fixed_point(&sys, &rat(2, 5), &rat(3, 5)).expect("assignment");
        let mut profile = construct_equilibrium(&game, &sys, &assignment).expect("equilibrium");
        let baseline = verify_regret(&game, &profile).expect("regret");
        assert!(baseline.max_regret.is_zero(), "baseline must be exact");

        let v1 = 0usize;
        assert_eq!(profile[v1][0], rat(1, 20), "pair 0 of v1 is ungated");
        let shift = rat(1, 100);
        profile[v1][0] = &profile[v1][0] - &shift;
        profile[v1][12] = &profile[v1][12] + &shift; // pair 6, low action
        let levels = sys.num_levels();
        let m1 = 2 * levels - 2 + 1; // partner of v1
        for w in profile[m1].iter_mut() {
            *w = Rat::zero();
        }
        profile[m1][12] = rat(1, 2);
        profile[m1][13] = rat(1, 2);
        let punished = verify_regret(&game, &profile).expect("regret");
        let v1_regret = punished.per_player[v1].clone();
        let lo = &m / &Rat::int(10);
        let hi = &(&Rat::int(3) * &m) / &Rat::int(25);
        assert!(
            v1_regret > lo && v1_regret < hi,
            "cross-pair regret {v1_regret} outside ({lo}, {hi})"
        );

        // (b) Within-pair deviation: nudging an interior gate's value by
        // 1/1000 inside its pair leaves every pair weight intact but
        // breaks the hosting constraint player's indifference.
        let circ = compiled(INTERIOR_ADD);
        let sys = add_loopback(&rescale_tenth(&circ)).expect("loopback");
        let game = build_game(&sys, MixWeight::Auto).expect("game");
        let assignment =
            assignment_from_fixed_point(&sys, &rat(1, 4), &rat(1, 2)).expect("assignment");
        let mut profile = construct_equilibrium(&game, &sys, &assignment).expect("equilibrium");
        let baseline = verify_regret(&game, &profile).expect("regret");
        assert!(baseline.max_regret.is_zero(), "baseline must be exact");

        let (_, slot, _) = sys
            .gates()
            .find(|(level, _, op)| *level == 2 && matches!(op, GateOp::AddB { .. }))
            .expect("the addition gate sits at level 2");
        let v2 = 1usize;
        let low = 2 * slot;
        assert_eq!(profile[v2][low], rat(1, 20), "interior gate value");
        let nudge = rat(1, 1000);
        profile[v2][low] = &profile[v2][low] + &nudge;
        profile[v2][low + 1] = &profile[v2][low + 1] - &nudge;
        let c1 = sys.num_levels(); // constraint player hosting level-2 gates
        let nudged = verify_regret(&game, &profile).expect("regret");
        let c1_regret = nudged.per_player[c1].clone();
        assert!(
            c1_regret > Rat::zero(),
            "hosting constraint player has zero regret after the nudge"
        );

        format!(
            "cross-pair deviation regret {v1_regret} lies in ({lo}, {hi}); \
                 a 1/1000 within-pair nudge leaves the hosting constraint \
                 player regret {c1_regret} > 0"
        )
    });
}

// ---------------------------------------------------------------------------
// criterion 10: end-to-end displacement field on a known instance
// ---------------------------------------------------------------------------

/// Inner rule for the known instance: color 1 exactly at (2, 2), color 3
/// everywhere else, built leanly by hand.
fn hand_inner_instance() -> DiscreteBrouwerInstance {
    let mut b = Builder::new(4);
    // Bit order: x high, x low, y high, y low.
    let x_hi = b.input(0);
    let x_lo = b.input(1);
    let y_hi = b.input(2);
    let y_lo = b.input(3);
    let nx_hi = b.not(x_hi);
    let ny_hi = b.not(y_hi);
    let off = b.or_many(&[nx_hi, x_lo, ny_hi, y_lo]);
    let c1 = b.not(off); // x == 2 and y == 2
    let c3 = b.or(off, off);
    let c2 = b.constant(false);
    DiscreteBrouwerInstance::new(2, b.finish(vec![c1, c2, c3])).expect("instance")
}

/// Sup-norm distance from `p` to the rectangle `[1/4, 1/2] x [1/2, 3/4]`
/// (the cell of the unique witness square), compared against 1/2.
fn far_from_witness_cell(px: &Rat, py: &Rat) -> bool {
    let zero = Rat::zero();
    let dx = (&rat(1, 4) - px).max(px - &rat(1, 2)).max(zero.clone());
    let dy = (&rat(1, 2) - py).max(py - &rat(3, 4)).max(zero);
    dx.max(dy) >= rat(1, 2)
}

#[test]
fn c10_displacement_field_of_a_known_instance() {
    criterion(
        10,
        "end-to-end displacement field on a known instance",
        Some(Duration::from_secs(300)),
        || {
            let eps = rat(1, 4);
            let inner_table: Vec<Vec<Color>> = (0..4)
                .map(|gy| {
                    (0..4)
                        .map(|gx| {
                            if (gx, gy) == (2, 2) {
                                Color::C1
                            } else {
                                Color::C3
                            }
                        })
                        .collect()
                })
                .collect();
            let table_inst = enforce_boundary(
                &from_color_table(2, &inner_table).expect("table instance"),
                BoundaryMode::Thick(eps.clone()),
            )
            .expect("boundary discipline");
            let inst = enforce_boundary(&hand_inner_instance(), BoundaryMode::Thick(eps.clone()))
                .expect("boundary discipline");
            let expected: [[u8; 4]; 4] = [[1, 1, 1, 1], [1, 1, 1, 1], [2, 2, 1, 3], [2, 2, 3, 3]];
            for gy in 0..4u64 {
                for gx in 0..4u64 {
                    let color = inst.eval_color(gx, gy).expect("color");
                    assert_eq!(
                        color,
                        table_inst.eval_color(gx, gy).expect("color"),
                        "hand-built and table-built instances disagree at ({gx}, {gy})"
                    );
                    assert_eq!(
                        color.label(),
                        expected[gy as usize][gx as usize],
                        "unexpected color at ({gx}, {gy})"
                    );
                }
            }
            assert_eq!(
                find_trichromatic(&inst).expect("search"),
                vec![(1, 2)],
                "unique witness square"
            );

            let params = ReductionParams::with_defaults(2, 5, eps).expect("params");
            let red = build_reduction(&inst, &params).expect("reduction");

            let res = 16i64;
            let mut far_min: Option<Rat> = None;
            let mut global: Option<(Rat, Rat, Rat)> = None;
            for i in 0..=res {
                let px = rat(i, res);
                for j in 0..=res {
                    let py = rat(j, res);
                    let out = red
                        .program
                        .interpret(&[px.clone(), py.clone()])
                        .expect("interpret");
                    let residual = (&out[0] - &px).abs().max((&out[1] - &py).abs());
                    if global.as_ref().is_none_or(|(r, _, _)| residual < *r) {
                        global = Some((residual.clone(), px.clone(), py.clone()));
                    }
                    if far_from_witness_cell(&px, &py)
                        && far_min.as_ref().is_none_or(|m| residual < *m)
                    {
                        far_min = Some(residual);
                    }
                }
            }
            let delta = far_min.expect("grid contains far points");
            // Frozen from the first run: the measured floor is 74867/1849600
            // (about 1/25), the scale of one displacement train's net motion.
            assert!(
                delta > rat(1, 30),
                "far-point residual floor {delta} collapsed below 1/30"
            );
            let (global_min, gx, gy) = global.expect("nonempty grid");
            assert!(
                !far_from_witness_cell(&gx, &gy),
                "global residual minimum {global_min} at ({gx}, {gy}) sits far \
                 from the witness cell"
            );

            for (i, j) in [(0, 0), (64, 64), (21, 43)] {
                let p = [rat(i, 64), rat(j, 64)];
                assert_eq!(
                    red.program.interpret(&p).expect("interpret"),
                    red.circuit.evaluate(&p).expect("evaluate"),
                    "spot check at ({i}/64, {j}/64)"
                );
            }

            format!(
                "unique witness square (1, 2); 17x17 sweep: far-point residual \
                 floor {delta} > 0, global minimum {global_min} at ({gx}, {gy}) \
                 near the witness cell; compiled circuit matches at 3 spot points"
            )
        },
    );
}
