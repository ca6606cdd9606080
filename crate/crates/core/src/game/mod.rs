//! Twenty-action polymatrix games whose equilibria encode gate values.
//!
//! A [`LoopbackSystem`] with `N` levels becomes a game with `4N - 2`
//! players, each holding twenty actions grouped into ten *pairs* that mirror
//! the ten gate slots of a level:
//!
//! - a **variable** player `v_j` per level, whose mass split within pair `s`
//!   encodes the value of the gate at slot `s`;
//! - a **constraint** player `c_j` per adjacent level pair, refereeing the
//!   gate equations between `v_j` and `v_{j+1}`;
//! - a **mix** player coupled to every variable and constraint player
//!   through a matching-pennies block scaled by a large weight, which forces
//!   each of its partner's action pairs to carry total mass exactly `1/10`.
//!
//! Every gate turns into a *gadget*: three blocks of payoff entries between
//! its output variable player, the constraint player between the two levels
//! it touches, and the variable player holding its operands. At any exact
//! equilibrium the low action of pair `s` in level `j`'s variable player
//! carries mass equal to the gate value, so a self-consistent assignment of
//! the system can be read straight out of the mixed strategies
//! ([`extract_gate_values`]) and, conversely, a self-consistent assignment
//! yields an exactly verifiable equilibrium ([`construct_equilibrium`]).

mod equilibrium;
mod loopback;

pub use equilibrium::{construct_equilibrium, extract_gate_values, ExtractionReport, GateCheck};
pub use loopback::{
    add_loopback, assignment_from_fixed_point, rescale_tenth, Assignment, LoopbackSystem, SLOTS,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::circuit::{CRef, CircuitError, GArg, GateOp};
use crate::rational::Rat;

/// Actions per player: two per gate slot.
pub const ACTIONS: usize = 2 * SLOTS;

/// Errors from game construction, equilibrium construction, and checking.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GameError {
    /// A structural precondition failed.
    #[error("{0}")]
    BadShape(String),
    /// The underlying circuit was invalid.
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    /// An assignment violated a gate equation.
    #[error("gate at level {level} slot {slot} has value {value}, expected {expected}")]
    NotSelfConsistent {
        /// Level of the violated gate (numbered from 1).
        level: usize,
        /// Slot of the violated gate.
        slot: usize,
        /// Value the assignment supplied.
        value: Rat,
        /// Value the gate equation requires.
        expected: Rat,
    },
    /// A profile was malformed (wrong size, negative weight, bad sum).
    #[error("invalid profile: {0}")]
    Profile(String),
    /// A variable player's action pair does not carry mass exactly 1/10.
    #[error("player {player} pair {pair} carries mass {got}, expected 1/10")]
    PairMass {
        /// Player id.
        player: usize,
        /// Pair index (0-9).
        pair: usize,
        /// Observed total mass on the pair.
        got: Rat,
    },
    /// The mix coupling weight is too small to support the equilibrium.
    #[error("mix weight {mix_weight} is too small to level player {player}")]
    MixWeightTooSmall {
        /// The weight that failed.
        mix_weight: Rat,
        /// Player whose payoff spread exceeded it.
        player: usize,
    },
}

/// What a player stands for. Indices are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum PlayerKind {
    /// `v_j`: encodes the gate values of level `j`.
    Variable(usize),
    /// `c_j`: referees the gate equations between levels `j` and `j + 1`.
    Constraint(usize),
    /// `m_i`: pins its partner's pair masses; odd `i = 2j - 1` partners
    /// `v_j`, even `i = 2j` partners `c_j`.
    Mix(usize),
}

/// One player of the game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerInfo {
    /// Dense id, also the player's index into profiles.
    pub id: usize,
    /// Role.
    pub kind: PlayerKind,
    /// Short name such as `v3`, `c2`, `m5`.
    pub label: String,
}

/// A 20-by-20 payoff matrix; `m[i][j]` pays the row player when it plays
/// `i` against the column player's `j`.
pub type PayoffMatrix = Vec<Vec<Rat>>;

/// One edge of the polymatrix game, stored once per unordered player pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// First endpoint (smaller id).
    pub a: usize,
    /// Second endpoint (larger id).
    pub b: usize,
    /// Payoffs to `a` against `b`.
    pub payoff_a: PayoffMatrix,
    /// Payoffs to `b` against `a`.
    pub payoff_b: PayoffMatrix,
}

/// A polymatrix game: players, pairwise payoff matrices, and the mix
/// coupling weight used to build it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolymatrixGame {
    /// All players, sorted by id.
    pub players: Vec<PlayerInfo>,
    /// All edges with any nonzero payoff, sorted by endpoint ids.
    pub edges: Vec<Edge>,
    /// The matching-pennies scale on mix edges.
    pub mix_weight: Rat,
}

/// How to choose the mix coupling weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MixWeight {
    /// `40 P + 1` where `P` is the largest payoff magnitude outside the mix
    /// edges; always large enough to level any non-mix payoff spread.
    Auto,
    /// A caller-supplied positive weight. Equilibrium construction fails
    /// cleanly if it is too small.
    Fixed(Rat),
}

/// A mixed-strategy profile: twenty nonnegative weights summing to one per
/// player, indexed by player id.
pub type Profile = Vec<Vec<Rat>>;

/// Exact regrets under a profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegretReport {
    /// Per-player regret: best single-action payoff minus realized payoff.
    pub per_player: Vec<Rat>,
    /// The largest entry of `per_player`.
    pub max_regret: Rat,
}

/// Player-id layout for a system with `n` levels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ids {
    n: usize,
}

impl Ids {
    pub(crate) fn new(num_levels: usize) -> Self {
        Ids { n: num_levels }
    }

    /// `v_j`, `j` in `1..=n`.
    pub(crate) fn variable(&self, j: usize) -> usize {
        debug_assert!((1..=self.n).contains(&j));
        j - 1
    }

    /// `c_j`, `j` in `1..=n-1`.
    pub(crate) fn constraint(&self, j: usize) -> usize {
        debug_assert!((1..self.n).contains(&j));
        self.n + j - 1
    }

    /// `m_i`, `i` in `1..=2n-1`.
    pub(crate) fn mix(&self, i: usize) -> usize {
        debug_assert!((1..=2 * self.n - 1).contains(&i));
        2 * self.n - 1 + i - 1
    }

    pub(crate) fn num_players(&self) -> usize {
        4 * self.n - 2
    }
}

/// One gate of the system viewed as a payoff gadget.
#[derive(Debug, Clone)]
pub(crate) struct Gadget {
    /// Constraint player hosting the gadget's rows.
    pub constraint: usize,
    /// Variable player encoding the gate's output value.
    pub v_out: usize,
    /// Variable player holding the gate's operands.
    pub v_in: usize,
    /// Slot of the gate, hence the action pair used on `v_out` and the
    /// constraint player.
    pub slot: usize,
    /// The gate, with references still in `(level, slot)` form.
    pub op: GateOp,
}

/// Enumerate the gadgets of a validated system.
///
/// A gate at level `j` reading the level below is refereed by `c_{j-1}`
/// against `v_{j-1}`; a gate reading the level above (the loopback copies)
/// is refereed by `c_j` against `v_{j+1}`. Constants count as reading the
/// level below. Two gates may never claim the same action pair on the same
/// constraint player.
pub(crate) fn gadgets(sys: &LoopbackSystem) -> Result<Vec<Gadget>, GameError> {
    let ids = Ids::new(sys.num_levels());
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut out = Vec::with_capacity(sys.gate_count());
    for (j, s, gate) in sys.gates() {
        let mut dir: Option<isize> = None;
        for r in gate.refs() {
            let CRef::Gate(l, _) = r else {
                return Err(GameError::BadShape(format!(
                    "gate at level {j} slot {s} reads an external input"
                )));
            };
            let d = l as isize - j as isize;
            match dir {
                None => dir = Some(d),
                Some(prev) if prev == d => {}
                Some(_) => {
                    return Err(GameError::BadShape(format!(
                        "gate at level {j} slot {s} reads both adjacent levels"
                    )))
                }
            }
        }
        let (constraint, v_in) = match dir.unwrap_or(-1) {
            -1 => (ids.constraint(j - 1), ids.variable(j - 1)),
            1 => (ids.constraint(j), ids.variable(j + 1)),
            _ => unreachable!("validated: references are adjacent"),
        };
        if !seen.insert((constraint, s)) {
            return Err(GameError::BadShape(format!(
                "two gates claim pair {s} on the same constraint player \
                 (near level {j})"
            )));
        }
        out.push(Gadget {
            constraint,
            v_out: ids.variable(j),
            v_in,
            slot: s,
            op: gate.clone(),
        });
    }
    Ok(out)
}

fn zero_matrix() -> PayoffMatrix {
    vec![vec![Rat::zero(); ACTIONS]; ACTIONS]
}

/// Directed payoff store keyed by `(payee, opponent)`.
struct MatrixStore(BTreeMap<(usize, usize), PayoffMatrix>);

impl MatrixStore {
    fn new() -> Self {
        MatrixStore(BTreeMap::new())
    }

    fn add(&mut self, payee: usize, other: usize, row: usize, col: usize, delta: &Rat) {
        let m = self.0.entry((payee, other)).or_insert_with(zero_matrix);
        let updated = &m[row][col] + delta;
        m[row][col] = updated;
    }

    fn add_row(&mut self, payee: usize, other: usize, row: usize, delta: &Rat) {
        if delta.is_zero() {
            return;
        }
        for col in 0..ACTIONS {
            self.add(payee, other, row, col, delta);
        }
    }

    fn max_abs(&self) -> Rat {
        let mut p = Rat::zero();
        for m in self.0.values() {
            for row in m {
                for v in row {
                    p = p.max(v.abs());
                }
            }
        }
        p
    }
}

/// Build the polymatrix game of a loopback system.
///
/// Per gadget with pair `s` (actions `x = 2s`, `x̄ = 2s + 1`):
///
/// - the output variable earns 1 against the constraint when they play
///   *opposite* actions of the pair, making it copy whichever action the
///   constraint shuns;
/// - the constraint earns the output variable's mass on `x` when playing
///   `x`, and the gate's (unclipped) value — read off the input variable's
///   strategy via one row of coefficients — when playing `x̄`;
/// - literal and constant terms enter that row as a uniform coefficient
///   across all twenty columns, so they contribute their face value against
///   any full distribution.
///
/// Each variable and constraint player is then coupled to its own mix
/// player by `±weight` on the pair-diagonal: the mix player chases whichever
/// pair of its partner is heaviest, and at equilibrium this flattens the
/// partner's pair masses to exactly 1/10 each.
pub fn build_game(sys: &LoopbackSystem, weight: MixWeight) -> Result<PolymatrixGame, GameError> {
    sys.validate()?;
    let n = sys.num_levels();
    let ids = Ids::new(n);
    let gadget_list = gadgets(sys)?;
    let one = Rat::one();
    let mut mats = MatrixStore::new();

    for g in &gadget_list {
        let x = 2 * g.slot;
        let xb = x + 1;
        mats.add(g.v_out, g.constraint, x, xb, &one);
        mats.add(g.v_out, g.constraint, xb, x, &one);
        mats.add(g.constraint, g.v_out, x, x, &one);

        let operand = |mats: &mut MatrixStore, arg: &GArg, scale: &Rat| match arg {
            GArg::Ref(CRef::Gate(_, s2)) => {
                mats.add(g.constraint, g.v_in, xb, 2 * s2, scale);
            }
            GArg::Ref(CRef::In(_)) => unreachable!("validated: no input refs"),
            GArg::Lit { lit } => {
                mats.add_row(g.constraint, g.v_in, xb, &(lit * scale));
            }
        };
        match &g.op {
            GateOp::Const { value } => {
                mats.add_row(g.constraint, g.v_in, xb, value);
            }
            GateOp::AddB { lhs, rhs } => {
                operand(&mut mats, lhs, &one);
                operand(&mut mats, rhs, &one);
            }
            GateOp::SubB { lhs, rhs } => {
                let neg_one = -&one;
                operand(&mut mats, lhs, &one);
                operand(&mut mats, rhs, &neg_one);
            }
            GateOp::MulB { arg, factor } => {
                operand(&mut mats, arg, factor);
            }
        }
    }

    let mix_weight = match weight {
        MixWeight::Auto => &(&Rat::int(40) * &mats.max_abs()) + &Rat::one(),
        MixWeight::Fixed(w) => {
            if !Rat::zero().lt(&w) {
                return Err(GameError::BadShape("mix weight must be positive".into()));
            }
            w
        }
    };

    // Matching-pennies blocks on the pair diagonal.
    let mut z = zero_matrix();
    for (i, row) in z.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i / 2 == j / 2 {
                *cell = mix_weight.clone();
            }
        }
    }
    let neg_z: PayoffMatrix = z
        .iter()
        .map(|row| row.iter().map(|v| -v).collect())
        .collect();
    let mut pairings: Vec<(usize, usize)> = Vec::with_capacity(2 * n - 1);
    for j in 1..=n {
        pairings.push((ids.mix(2 * j - 1), ids.variable(j)));
    }
    for j in 1..n {
        pairings.push((ids.mix(2 * j), ids.constraint(j)));
    }
    for &(m_id, p_id) in &pairings {
        mats.0.insert((m_id, p_id), z.clone());
        mats.0.insert((p_id, m_id), neg_z.clone());
    }

    let keys: BTreeSet<(usize, usize)> =
        mats.0.keys().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let edges = keys
        .into_iter()
        .map(|(a, b)| Edge {
            a,
            b,
            payoff_a: mats.0.remove(&(a, b)).unwrap_or_else(zero_matrix),
            payoff_b: mats.0.remove(&(b, a)).unwrap_or_else(zero_matrix),
        })
        .collect();

    let mut players = Vec::with_capacity(ids.num_players());
    for j in 1..=n {
        players.push(PlayerInfo {
            id: ids.variable(j),
            kind: PlayerKind::Variable(j),
            label: format!("v{j}"),
        });
    }
    for j in 1..n {
        players.push(PlayerInfo {
            id: ids.constraint(j),
            kind: PlayerKind::Constraint(j),
            label: format!("c{j}"),
        });
    }
    for i in 1..=2 * n - 1 {
        players.push(PlayerInfo {
            id: ids.mix(i),
            kind: PlayerKind::Mix(i),
            label: format!("m{i}"),
        });
    }

    Ok(PolymatrixGame {
        players,
        edges,
        mix_weight,
    })
}

/// Check that `profile` has one well-formed mixed strategy per player.
pub fn validate_profile(game: &PolymatrixGame, profile: &Profile) -> Result<(), GameError> {
    if profile.len() != game.players.len() {
        return Err(GameError::Profile(format!(
            "profile has {} strategies, game has {} players",
            profile.len(),
            game.players.len()
        )));
    }
    for (id, s) in profile.iter().enumerate() {
        if s.len() != ACTIONS {
            return Err(GameError::Profile(format!(
                "player {id} has {} weights, expected {ACTIONS}",
                s.len()
            )));
        }
        let mut total = Rat::zero();
        for (a, w) in s.iter().enumerate() {
            if w.is_negative() {
                return Err(GameError::Profile(format!(
                    "player {id} action {a} has negative weight {w}"
                )));
            }
            total = &total + w;
        }
        if total != Rat::one() {
            return Err(GameError::Profile(format!(
                "player {id} weights sum to {total}, expected 1"
            )));
        }
    }
    Ok(())
}

fn accumulate(dst: &mut [Rat], m: &PayoffMatrix, s: &[Rat]) {
    for i in 0..ACTIONS {
        for j in 0..ACTIONS {
            if !m[i][j].is_zero() && !s[j].is_zero() {
                let updated = &dst[i] + &(&m[i][j] * &s[j]);
                dst[i] = updated;
            }
        }
    }
}

/// Expected payoff of every action of every player under `profile`,
/// including mix edges.
pub fn payoff_vectors(
    game: &PolymatrixGame,
    profile: &Profile,
) -> Result<Vec<Vec<Rat>>, GameError> {
    validate_profile(game, profile)?;
    let mut pay = vec![vec![Rat::zero(); ACTIONS]; game.players.len()];
    for e in &game.edges {
        accumulate(&mut pay[e.a], &e.payoff_a, &profile[e.b]);
        accumulate(&mut pay[e.b], &e.payoff_b, &profile[e.a]);
    }
    Ok(pay)
}

/// Expected payoff of every action of `player`, ignoring its mix edges.
pub(crate) fn non_mix_payoffs(game: &PolymatrixGame, profile: &Profile, player: usize) -> Vec<Rat> {
    let mut pay = vec![Rat::zero(); ACTIONS];
    for e in &game.edges {
        let (mat, other) = if e.a == player {
            (&e.payoff_a, e.b)
        } else if e.b == player {
            (&e.payoff_b, e.a)
        } else {
            continue;
        };
        if matches!(game.players[other].kind, PlayerKind::Mix(_)) {
            continue;
        }
        accumulate(&mut pay, mat, &profile[other]);
    }
    pay
}

/// Compute every player's exact regret under `profile`.
///
/// Regret is the payoff of the player's best single action minus its
/// realized expected payoff; a profile is an exact equilibrium if and only
/// if every regret is zero.
pub fn verify_regret(game: &PolymatrixGame, profile: &Profile) -> Result<RegretReport, GameError> {
    let pay = payoff_vectors(game, profile)?;
    let mut per_player = Vec::with_capacity(game.players.len());
    let mut max_regret = Rat::zero();
    for (s, p) in profile.iter().zip(&pay) {
        let mut best = p[0].clone();
        for v in &p[1..] {
            best = best.max(v.clone());
        }
        let mut got = Rat::zero();
        for (w, v) in s.iter().zip(p) {
            if !w.is_zero() {
                got = &got + &(w * v);
            }
        }
        let regret = &best - &got;
        max_regret = max_regret.max(regret.clone());
        per_player.push(regret);
    }
    Ok(RegretReport {
        per_player,
        max_regret,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{compile, SyncCircuit};
    use crate::slp::parse_program;

    fn compiled(src: &str) -> SyncCircuit {
        let flat = parse_program(src).unwrap().expand().unwrap();
        compile(&flat).unwrap()
    }

    /// Maps every point to itself.
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

    /// Maps every point to (1/2, 1/2).
    const CONSTANT_HALF: &str = "inputs x, y
        x <- x *b 0
        y <- y *b 0
        x <- x +b 1/2
        y <- y +b 1/2
        outputs x, y";

    /// Maps (x, y) to (1/4, x + 1/4); its addition gate sits strictly
    /// inside the clipping interval at the fixed point (1/4, 1/2).
    const INTERIOR_ADD: &str = "inputs x, y
        y <- x +b 1/4
        x <- x *b 0
        x <- x +b 1/4
        y <- y *b 1
        outputs x, y";

    /// Maps (x, y) to (x - y, 1/8); the subtraction clips to zero at the
    /// fixed point (0, 1/8).
    const CLIPPED_SUB: &str = "inputs x, y
        x <- x -b y
        y <- y *b 0
        y <- y +b 1/8
        x <- x *b 1
        outputs x, y";

    /// Maps (x, y) to (3x, 1/2); the product clips to the bound at the
    /// fixed point (1, 1/2).
    const CLIPPED_MUL: &str = "inputs x, y
        x <- x *b 3
        y <- y *b 0
        y <- y +b 1/2
        x <- x *b 1
        outputs x, y";

    /// Maps every point to (0, 0); every referee faces an exact tie.
    const ALL_ZERO: &str = "inputs x, y
        x <- x *b 0
        y <- y *b 0
        x <- x *b 1
        y <- y *b 1
        outputs x, y";

    fn round_trip(src: &str, fx: Rat, fy: Rat, expect_weight: Rat) {
        let circ = compiled(src);
        let image = circ.evaluate(&[fx.clone(), fy.clone()]).unwrap();
        assert_eq!(image, vec![fx.clone(), fy.clone()], "not a fixed point");

        let sys = add_loopback(&rescale_tenth(&circ)).unwrap();
        let assignment = assignment_from_fixed_point(&sys, &fx, &fy).unwrap();
        let game = build_game(&sys, MixWeight::Auto).unwrap();
        assert_eq!(game.mix_weight, expect_weight);

        let profile = construct_equilibrium(&game, &sys, &assignment).unwrap();
        let report = verify_regret(&game, &profile).unwrap();
        assert!(
            report.max_regret.is_zero(),
            "expected an exact equilibrium, max regret {}",
            report.max_regret
        );

        let extracted = extract_gate_values(&game, &sys, &profile).unwrap();
        assert!(extracted.consistent);
        assert_eq!(extracted.induced_point, (fx, fy));
        assert_eq!(extracted.assignment, assignment);
    }

    #[test]
    fn identity_map_equilibrium_round_trips() {
        round_trip(IDENTITY, Rat::new(3, 10), Rat::new(7, 10), Rat::int(41));
    }

    #[test]
    fn constant_map_equilibrium_round_trips() {
        round_trip(CONSTANT_HALF, Rat::new(1, 2), Rat::new(1, 2), Rat::int(43));
    }

    #[test]
    fn interior_addition_equilibrium_round_trips() {
        round_trip(INTERIOR_ADD, Rat::new(1, 4), Rat::new(1, 2), Rat::int(42));
    }

    #[test]
    fn clipped_subtraction_equilibrium_round_trips() {
        round_trip(CLIPPED_SUB, Rat::zero(), Rat::new(1, 8), Rat::new(83, 2));
    }

    #[test]
    fn clipped_product_equilibrium_round_trips() {
        round_trip(CLIPPED_MUL, Rat::one(), Rat::new(1, 2), Rat::int(121));
    }

    #[test]
    fn all_zero_map_survives_exact_referee_ties() {
        round_trip(ALL_ZERO, Rat::zero(), Rat::zero(), Rat::int(41));
    }

    #[test]
    fn rescale_divides_values_by_ten_pointwise() {
        let circ = compiled(
            "inputs x, y
             x <- x +b 1/5
             t <- 1/2
             x <- x -b t
             x <- x *b 3
             y <- y *b 1
             outputs x, y",
        );
        let small = rescale_tenth(&circ);
        assert_eq!(small.bound, Rat::new(1, 10));
        small.validate().unwrap();
        let ten = Rat::int(10);
        for (px, py) in [(0i64, 0i64), (1, 1), (1, 2), (2, 3)] {
            let p = [Rat::new(px, 3), Rat::new(py, 3)];
            let q = [&p[0] / &ten, &p[1] / &ten];
            let big = circ.evaluate(&p).unwrap();
            let scaled = small.evaluate(&q).unwrap();
            assert_eq!(scaled[0], &big[0] / &ten);
            assert_eq!(scaled[1], &big[1] / &ten);
        }
    }

    #[test]
    fn loopback_reserves_the_coordinate_pair_and_chain() {
        let sys = add_loopback(&rescale_tenth(&compiled(IDENTITY))).unwrap();
        let n = sys.num_levels();
        assert_eq!(n, 9);
        assert_eq!(
            sys.gate(1, 6),
            Some(&GateOp::copy(CRef::Gate(2, 8))),
            "level 1 reads the bottom of the chain"
        );
        assert_eq!(
            sys.gate(n - 1, 8),
            Some(&GateOp::copy(CRef::Gate(n, 6))),
            "the chain top reads the first output"
        );
        for j in 2..n - 1 {
            assert_eq!(sys.gate(j, 8), Some(&GateOp::copy(CRef::Gate(j + 1, 8))));
            assert_eq!(sys.gate(j, 9), Some(&GateOp::copy(CRef::Gate(j + 1, 9))));
        }
        assert!(sys.gate(n, 6).is_some() && sys.gate(n, 7).is_some());
    }

    #[test]
    fn wide_first_level_gets_a_padding_level() {
        let bound = Rat::one();
        let mut level1 = vec![GateOp::copy(CRef::In(0)), GateOp::copy(CRef::In(1))];
        for _ in 0..5 {
            level1.push(GateOp::Const { value: Rat::zero() });
        }
        let circ = SyncCircuit {
            num_inputs: 2,
            bound,
            levels: vec![
                level1,
                vec![
                    GateOp::copy(CRef::Gate(1, 0)),
                    GateOp::copy(CRef::Gate(1, 1)),
                ],
                vec![
                    GateOp::copy(CRef::Gate(2, 0)),
                    GateOp::copy(CRef::Gate(2, 1)),
                ],
                vec![
                    GateOp::copy(CRef::Gate(3, 0)),
                    GateOp::copy(CRef::Gate(3, 1)),
                ],
            ],
            outputs: vec![CRef::Gate(4, 0), CRef::Gate(4, 1)],
        };
        circ.validate().unwrap();
        let sys = add_loopback(&rescale_tenth(&circ)).unwrap();
        // One level more than depth + 1: the wide first level would have
        // collided with the coordinate pair's rows on the first referee.
        assert_eq!(sys.num_levels(), 6);
        assert_eq!(sys.gate(2, 0), Some(&GateOp::copy(CRef::Gate(1, 6))));
        assert_eq!(sys.gate(2, 1), Some(&GateOp::copy(CRef::Gate(1, 7))));
        assert!(sys.gate(3, 6).is_some(), "wide level lands above the pad");
        build_game(&sys, MixWeight::Auto).unwrap();
    }

    #[test]
    fn non_fixed_point_is_rejected() {
        let sys = add_loopback(&rescale_tenth(&compiled(CONSTANT_HALF))).unwrap();
        let err = assignment_from_fixed_point(&sys, &Rat::new(1, 4), &Rat::new(1, 4));
        assert!(matches!(err, Err(GameError::NotSelfConsistent { .. })));
    }

    #[test]
    fn within_pair_perturbation_creates_referee_regret() {
        let circ = compiled(INTERIOR_ADD);
        let sys = add_loopback(&rescale_tenth(&circ)).unwrap();
        let assignment =
            assignment_from_fixed_point(&sys, &Rat::new(1, 4), &Rat::new(1, 2)).unwrap();
        let game = build_game(&sys, MixWeight::Auto).unwrap();
        let mut profile = construct_equilibrium(&game, &sys, &assignment).unwrap();

        // Find an interior gate value and slide mass within its pair,
        // keeping the pair total at 1/10.
        let (j, s) = sys
            .gates()
            .map(|(j, s, _)| (j, s))
            .find(|&(j, s)| {
                let g = assignment[j - 1][s].as_ref().unwrap();
                !g.is_zero() && g != &Rat::new(1, 10)
            })
            .expect("some interior gate");
        let ids = Ids::new(sys.num_levels());
        let v = ids.variable(j);
        let shift = Rat::new(1, 1000);
        profile[v][2 * s] = &profile[v][2 * s] - &shift;
        profile[v][2 * s + 1] = &profile[v][2 * s + 1] + &shift;

        let report = verify_regret(&game, &profile).unwrap();
        assert!(
            !report.max_regret.is_zero(),
            "the referee should now prefer one side"
        );
    }

    #[test]
    fn game_and_system_serialize_round_trip() {
        let sys = add_loopback(&rescale_tenth(&compiled(ALL_ZERO))).unwrap();
        let json = serde_json::to_string(&sys).unwrap();
        let back: LoopbackSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sys);

        let game = build_game(&sys, MixWeight::Auto).unwrap();
        let json = serde_json::to_string(&game).unwrap();
        let back: PolymatrixGame = serde_json::from_str(&json).unwrap();
        assert_eq!(back, game);
    }
}
