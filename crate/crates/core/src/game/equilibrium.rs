//! Building exact equilibria from assignments, and reading assignments back
//! out of profiles.

use serde::{Deserialize, Serialize};

use crate::circuit::{CRef, GArg, GateOp};
use crate::game::loopback::{Assignment, LoopbackSystem, SLOTS};
use crate::game::{
    gadgets, non_mix_payoffs, validate_profile, GameError, Ids, PlayerKind, PolymatrixGame,
    Profile, ACTIONS,
};
use crate::rational::Rat;

/// The gate value a gadget's constraint row reads off the input variable's
/// strategy, *before* clipping to `[0, 1/10]`: sums may exceed the bound and
/// differences may go negative.
fn unclipped(op: &GateOp, read: &dyn Fn(CRef) -> Rat) -> Rat {
    let arg = |a: &GArg| match a {
        GArg::Ref(r) => read(*r),
        GArg::Lit { lit } => lit.clone(),
    };
    match op {
        GateOp::Const { value } => value.clone(),
        GateOp::AddB { lhs, rhs } => &arg(lhs) + &arg(rhs),
        GateOp::SubB { lhs, rhs } => &arg(lhs) - &arg(rhs),
        GateOp::MulB { arg: a, factor } => &arg(a) * factor,
    }
}

fn require_tenth_bound(sys: &LoopbackSystem) -> Result<(), GameError> {
    if sys.bound != Rat::new(1, 10) {
        return Err(GameError::BadShape(format!(
            "strategy pairs carry mass 1/10, so the system bound must be \
             1/10, got {}",
            sys.bound
        )));
    }
    Ok(())
}

/// Build an exact equilibrium of `game` from a self-consistent `assignment`
/// of the system it was built from.
///
/// Strategy of each player:
///
/// - variable `v_j`, pair `s` holding a gate of value `g`: mass `g` on the
///   low action and `1/10 - g` on the high action; pairs without a gate
///   split `1/20` each;
/// - constraint `c`, pair of a hosted gadget: compare the gate's unclipped
///   value `f` with the clipping interval: interior values leave the
///   constraint indifferent (`1/20` each), `f <= 0` puts the whole tenth on
///   the low action, and `f >= 1/10` puts it on the high action, which is
///   exactly what pins the output variable to the clipped value;
/// - mix `m`: weights chosen so that its matching-pennies penalty flattens
///   the partner's payoffs: pair `a` gets mass `(level_a - V) / weight`
///   where `level_a` is the partner's best non-mix payoff within pair `a`
///   and `V = (sum_a level_a - weight) / 10`, split evenly over the pair's
///   two actions. This makes every supported action of the partner worth
///   exactly `V` and every other action at most `V`.
///
/// Fails if the assignment is not self-consistent or the mix weight is too
/// small for some partner's payoff spread.
pub fn construct_equilibrium(
    game: &PolymatrixGame,
    sys: &LoopbackSystem,
    assignment: &Assignment,
) -> Result<Profile, GameError> {
    sys.validate()?;
    require_tenth_bound(sys)?;
    sys.check_assignment(assignment)?;
    let n = sys.num_levels();
    let ids = Ids::new(n);
    if game.players.len() != ids.num_players() {
        return Err(GameError::BadShape(format!(
            "game has {} players but the system needs {}",
            game.players.len(),
            ids.num_players()
        )));
    }

    let pair_mass = Rat::new(1, 10);
    let half_pair = Rat::new(1, 20);
    let mut profile: Profile = vec![vec![half_pair.clone(); ACTIONS]; game.players.len()];

    // Variable players encode the assignment.
    for j in 1..=n {
        let id = ids.variable(j);
        for s in 0..SLOTS {
            if let Some(g) = &assignment[j - 1][s] {
                profile[id][2 * s] = g.clone();
                profile[id][2 * s + 1] = &pair_mass - g;
            }
        }
    }

    // Constraint players referee each gadget by the unclipped gate value.
    let read = |r: CRef| -> Rat {
        match r {
            CRef::Gate(l, t) => assignment[l - 1][t].clone().expect("checked occupied"),
            CRef::In(_) => unreachable!("validated: no input refs"),
        }
    };
    for g in gadgets(sys)? {
        let f = unclipped(&g.op, &read);
        let (low, high) = if !Rat::zero().lt(&f) {
            (pair_mass.clone(), Rat::zero())
        } else if !f.lt(&pair_mass) {
            (Rat::zero(), pair_mass.clone())
        } else {
            (half_pair.clone(), half_pair.clone())
        };
        profile[g.constraint][2 * g.slot] = low;
        profile[g.constraint][2 * g.slot + 1] = high;
    }

    // Mix players level their partner's payoffs.
    let ten = Rat::int(10);
    let two = Rat::int(2);
    let weight = &game.mix_weight;
    for i in 1..=2 * n - 1 {
        let partner = if i % 2 == 1 {
            ids.variable(i.div_ceil(2))
        } else {
            ids.constraint(i / 2)
        };
        let pay = non_mix_payoffs(game, &profile, partner);
        let mut levels = Vec::with_capacity(SLOTS);
        let mut total = Rat::zero();
        for a in 0..SLOTS {
            let level = pay[2 * a].clone().max(pay[2 * a + 1].clone());
            total = &total + &level;
            levels.push(level);
        }
        let value = &(&total - weight) / &ten;
        let mix_id = ids.mix(i);
        for (a, level) in levels.iter().enumerate() {
            let w = &(level - &value) / weight;
            if w.is_negative() {
                return Err(GameError::MixWeightTooSmall {
                    mix_weight: weight.clone(),
                    player: partner,
                });
            }
            let half = &w / &two;
            profile[mix_id][2 * a] = half.clone();
            profile[mix_id][2 * a + 1] = half;
        }
    }

    validate_profile(game, &profile)?;
    Ok(profile)
}

/// One gate equation checked against extracted values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCheck {
    /// Level of the gate (numbered from 1).
    pub level: usize,
    /// Slot of the gate.
    pub slot: usize,
    /// Value extracted from the profile.
    pub value: Rat,
    /// Value the gate equation predicts from the extracted operands.
    pub expected: Rat,
    /// Whether the two agree exactly.
    pub ok: bool,
}

/// Gate values read out of a profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionReport {
    /// Extracted values in the shape of the system's gate table.
    pub assignment: Assignment,
    /// Per-gate consistency checks.
    pub checks: Vec<GateCheck>,
    /// `true` when every gate equation holds exactly.
    pub consistent: bool,
    /// The coordinate pair of level 1, scaled back up by ten to the source
    /// circuit's range.
    pub induced_point: (Rat, Rat),
}

/// Read gate values out of a profile: the value of the gate at level `j`,
/// slot `s` is the mass `v_j` puts on the low action of pair `s`.
///
/// Requires every gate-holding pair of every variable player to carry total
/// mass exactly 1/10 (any equilibrium of the game does). The report records
/// whether each gate equation holds on the extracted values; at an exact
/// equilibrium all of them do, and the induced point is a fixed point of the
/// source circuit.
pub fn extract_gate_values(
    game: &PolymatrixGame,
    sys: &LoopbackSystem,
    profile: &Profile,
) -> Result<ExtractionReport, GameError> {
    sys.validate()?;
    require_tenth_bound(sys)?;
    validate_profile(game, profile)?;
    let n = sys.num_levels();
    let ids = Ids::new(n);
    if game.players.len() != ids.num_players() {
        return Err(GameError::BadShape(format!(
            "game has {} players but the system needs {}",
            game.players.len(),
            ids.num_players()
        )));
    }
    for j in 1..=n {
        let id = ids.variable(j);
        if game.players[id].kind != PlayerKind::Variable(j) {
            return Err(GameError::BadShape(format!(
                "player {id} is not variable v{j}; was this game built from \
                 this system?"
            )));
        }
    }

    let pair_mass = Rat::new(1, 10);
    let mut assignment: Assignment = vec![vec![None; SLOTS]; n];
    for (j, s, _) in sys.gates() {
        let id = ids.variable(j);
        let low = &profile[id][2 * s];
        let high = &profile[id][2 * s + 1];
        let total = low + high;
        if total != pair_mass {
            return Err(GameError::PairMass {
                player: id,
                pair: s,
                got: total,
            });
        }
        assignment[j - 1][s] = Some(low.clone());
    }

    let read = |r: CRef| -> Rat {
        match r {
            CRef::Gate(l, t) => assignment[l - 1][t].clone().expect("validated occupied"),
            CRef::In(_) => unreachable!("validated: no input refs"),
        }
    };
    let mut checks = Vec::with_capacity(sys.gate_count());
    let mut consistent = true;
    for (level, slot, gate) in sys.gates() {
        let value = assignment[level - 1][slot].clone().expect("just filled");
        let expected = sys.eval_gate(gate, &read);
        let ok = value == expected;
        consistent &= ok;
        checks.push(GateCheck {
            level,
            slot,
            value,
            expected,
            ok,
        });
    }

    let ten = Rat::int(10);
    let x = assignment[0][6].clone().expect("level 1 slot 6 occupied");
    let y = assignment[0][7].clone().expect("level 1 slot 7 occupied");
    Ok(ExtractionReport {
        assignment,
        checks,
        consistent,
        induced_point: (&x * &ten, &y * &ten),
    })
}
