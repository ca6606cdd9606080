//! Rescaling circuits and closing them into self-referential gate systems.
//!
//! [`rescale_tenth`] shrinks a circuit's value range by a factor of ten so
//! that gate values fit comfortably inside mixed-strategy weights.
//! [`add_loopback`] then removes the distinction between inputs and outputs:
//! the circuit's output pair is routed back to its input reads through a
//! chain of copy gates, producing a closed [`LoopbackSystem`] whose
//! self-consistent assignments correspond exactly to fixed points of the
//! original map.

use serde::{Deserialize, Serialize};

use crate::circuit::{CRef, GArg, GateOp, SyncCircuit};
use crate::game::GameError;
use crate::rational::Rat;

/// Number of gate slots per system level (and action pairs per player).
pub const SLOTS: usize = 10;

/// Divide a circuit's value range by ten.
///
/// Every constant and every inline literal operand is divided by ten, while
/// multiplier factors are left untouched; the clipping bound shrinks from
/// `b` to `b/10`. The rescaled circuit computes exactly one tenth of the
/// original on inputs that are one tenth of the original inputs, so fixed
/// points are in bijection under scaling by ten.
pub fn rescale_tenth(circ: &SyncCircuit) -> SyncCircuit {
    let ten = Rat::int(10);
    let scale_arg = |arg: &GArg| match arg {
        GArg::Ref(r) => GArg::Ref(*r),
        GArg::Lit { lit } => GArg::Lit { lit: lit / &ten },
    };
    let levels = circ
        .levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|gate| match gate {
                    GateOp::Const { value } => GateOp::Const {
                        value: value / &ten,
                    },
                    GateOp::AddB { lhs, rhs } => GateOp::AddB {
                        lhs: scale_arg(lhs),
                        rhs: scale_arg(rhs),
                    },
                    GateOp::SubB { lhs, rhs } => GateOp::SubB {
                        lhs: scale_arg(lhs),
                        rhs: scale_arg(rhs),
                    },
                    GateOp::MulB { arg, factor } => GateOp::MulB {
                        arg: scale_arg(arg),
                        factor: factor.clone(),
                    },
                })
                .collect()
        })
        .collect();
    SyncCircuit {
        num_inputs: circ.num_inputs,
        bound: &circ.bound / &ten,
        levels,
        outputs: circ.outputs.clone(),
    }
}

/// A closed synchronous gate system with no external inputs.
///
/// Levels are numbered from 1 and hold up to [`SLOTS`] gates each, addressed
/// by slot index; unoccupied slots are `None`. Every operand reference points
/// at an occupied slot exactly one level away (the level below for ordinary
/// computation, the level above for the loopback chain), so the reference
/// graph is a cycle through the levels rather than a DAG.
///
/// An *assignment* maps each occupied slot to a value in `[0, bound]`; it is
/// self-consistent when every gate equation holds exactly. For systems built
/// by [`add_loopback`], self-consistent assignments correspond one-to-one to
/// fixed points of the source circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopbackSystem {
    /// Clipping bound shared by every gate.
    pub bound: Rat,
    /// Gate table: `levels[j - 1][s]` is the gate at level `j`, slot `s`.
    pub levels: Vec<Vec<Option<GateOp>>>,
}

/// Values for the occupied slots of a [`LoopbackSystem`], in the same shape
/// as its gate table.
pub type Assignment = Vec<Vec<Option<Rat>>>;

impl LoopbackSystem {
    /// Number of levels.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Total number of gates.
    pub fn gate_count(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.iter().filter(|g| g.is_some()).count())
            .sum()
    }

    /// Iterate over `(level, slot, gate)` for every occupied slot, with
    /// levels numbered from 1.
    pub fn gates(&self) -> impl Iterator<Item = (usize, usize, &GateOp)> {
        self.levels.iter().enumerate().flat_map(|(i, level)| {
            level
                .iter()
                .enumerate()
                .filter_map(move |(s, g)| g.as_ref().map(|g| (i + 1, s, g)))
        })
    }

    /// Look up the gate at `(level, slot)` (level numbered from 1).
    pub fn gate(&self, level: usize, slot: usize) -> Option<&GateOp> {
        self.levels.get(level.checked_sub(1)?)?.get(slot)?.as_ref()
    }

    /// Check structural invariants.
    ///
    /// - the bound is positive and there are at least two levels;
    /// - every level row has exactly [`SLOTS`] entries;
    /// - level 1 holds exactly two unit-factor copy gates at slots 6 and 7
    ///   (the system's designated coordinate pair);
    /// - every operand reference points at an occupied slot exactly one
    ///   level away, and no gate reads an external input;
    /// - constants and literals lie in `[0, bound]` and multiplier factors
    ///   are nonnegative.
    pub fn validate(&self) -> Result<(), GameError> {
        if !Rat::zero().lt(&self.bound) {
            return Err(GameError::BadShape("bound must be positive".into()));
        }
        let n = self.levels.len();
        if n < 2 {
            return Err(GameError::BadShape(
                "system needs at least two levels".into(),
            ));
        }
        for (i, level) in self.levels.iter().enumerate() {
            if level.len() != SLOTS {
                return Err(GameError::BadShape(format!(
                    "level {} has {} slots, expected {SLOTS}",
                    i + 1,
                    level.len()
                )));
            }
        }
        let first: Vec<usize> = self.levels[0]
            .iter()
            .enumerate()
            .filter_map(|(s, g)| g.as_ref().map(|_| s))
            .collect();
        if first != [6, 7] {
            return Err(GameError::BadShape(
                "level 1 must hold gates at slots 6 and 7 only".into(),
            ));
        }
        for s in [6usize, 7] {
            match &self.levels[0][s] {
                Some(GateOp::MulB {
                    arg: GArg::Ref(_),
                    factor,
                }) if factor == &Rat::one() => {}
                _ => {
                    return Err(GameError::BadShape(format!(
                        "level 1 slot {s} must be a unit-factor copy gate"
                    )))
                }
            }
        }
        for (j, s, gate) in self.gates() {
            let check_value = |v: &Rat, what: &str| {
                if v.is_negative() || self.bound.lt(v) {
                    Err(GameError::BadShape(format!(
                        "{what} {v} at level {j} slot {s} is outside [0, {}]",
                        self.bound
                    )))
                } else {
                    Ok(())
                }
            };
            match gate {
                GateOp::Const { value } => check_value(value, "constant")?,
                GateOp::MulB { factor, .. } if factor.is_negative() => {
                    return Err(GameError::BadShape(format!(
                        "negative factor at level {j} slot {s}"
                    )))
                }
                _ => {}
            }
            for arg in gate.args() {
                if let GArg::Lit { lit } = arg {
                    check_value(lit, "literal")?;
                }
            }
            for r in gate.refs() {
                let CRef::Gate(l, t) = r else {
                    return Err(GameError::BadShape(format!(
                        "gate at level {j} slot {s} reads an external input"
                    )));
                };
                if l.abs_diff(j) != 1 {
                    return Err(GameError::BadShape(format!(
                        "gate at level {j} slot {s} reads level {l}, which is not adjacent"
                    )));
                }
                if self.gate(l, t).is_none() {
                    return Err(GameError::BadShape(format!(
                        "gate at level {j} slot {s} reads empty slot ({l}, {t})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluate one gate under `read`, clipping to `[0, bound]`.
    pub(crate) fn eval_gate(&self, gate: &GateOp, read: &dyn Fn(CRef) -> Rat) -> Rat {
        let arg = |a: &GArg| match a {
            GArg::Ref(r) => read(*r),
            GArg::Lit { lit } => lit.clone(),
        };
        match gate {
            GateOp::Const { value } => value.clone(),
            GateOp::AddB { lhs, rhs } => arg(lhs).add_clip(&arg(rhs), &self.bound),
            GateOp::SubB { lhs, rhs } => arg(lhs).sub_clip(&arg(rhs)),
            GateOp::MulB { arg: a, factor } => arg(a).mul_clip(factor, &self.bound),
        }
    }

    /// Verify that `assignment` satisfies every gate equation exactly.
    ///
    /// The assignment must have a value exactly where the system has a gate.
    /// Returns the first violated gate as an error.
    pub fn check_assignment(&self, assignment: &Assignment) -> Result<(), GameError> {
        if assignment.len() != self.levels.len() {
            return Err(GameError::BadShape(
                "assignment has the wrong number of levels".into(),
            ));
        }
        for (i, (lvl, row)) in self.levels.iter().zip(assignment).enumerate() {
            if row.len() != SLOTS {
                return Err(GameError::BadShape(format!(
                    "assignment level {} has {} slots, expected {SLOTS}",
                    i + 1,
                    row.len()
                )));
            }
            for (s, (g, v)) in lvl.iter().zip(row).enumerate() {
                if g.is_some() != v.is_some() {
                    return Err(GameError::BadShape(format!(
                        "assignment shape differs from system at level {} slot {s}",
                        i + 1
                    )));
                }
            }
        }
        let read = |r: CRef| -> Rat {
            match r {
                CRef::Gate(l, t) => assignment[l - 1][t].clone().expect("validated occupied"),
                CRef::In(_) => unreachable!("validated: no input refs"),
            }
        };
        for (j, s, gate) in self.gates() {
            let got = assignment[j - 1][s].as_ref().expect("shape checked");
            let want = self.eval_gate(gate, &read);
            if *got != want {
                return Err(GameError::NotSelfConsistent {
                    level: j,
                    slot: s,
                    value: got.clone(),
                    expected: want,
                });
            }
        }
        Ok(())
    }
}

/// Close a two-input, two-output circuit into a [`LoopbackSystem`].
///
/// The circuit must have depth at least 4, width at most 8, and both outputs
/// must be gates of its final level; input references may appear only in the
/// first level (compiled circuits always satisfy this). Level `j + 1` of the
/// system holds circuit level `j` with slots preserved, level 1 holds two
/// copy gates at slots 6 and 7 that stand in for the inputs, the final
/// level is rearranged so the output gates sit at slots 6 and 7, and a chain
/// of copies through slots 8 and 9 carries the outputs back down to level 1.
/// If the first circuit level is wide enough to collide with the slots 6 and
/// 7 reserved on level 1, an extra copy level is inserted below it first.
pub fn add_loopback(circ: &SyncCircuit) -> Result<LoopbackSystem, GameError> {
    circ.validate().map_err(GameError::Circuit)?;
    if circ.num_inputs != 2 || circ.outputs.len() != 2 {
        return Err(GameError::BadShape(
            "loopback closure needs exactly two inputs and two outputs".into(),
        ));
    }
    if circ.depth() < 4 {
        return Err(GameError::BadShape(format!(
            "loopback closure needs depth at least 4, got {}",
            circ.depth()
        )));
    }
    if circ.width() > 8 {
        return Err(GameError::BadShape(format!(
            "loopback closure needs width at most 8, got {}",
            circ.width()
        )));
    }

    // Insert a copy level below the circuit when its first level would
    // otherwise occupy slot 6 or 7 of system level 2, which are rows the
    // coordinate copies on level 1 already claim for their own equations.
    let padded: SyncCircuit;
    let circ = if circ.levels[0].len() >= 7 {
        let mut levels = Vec::with_capacity(circ.levels.len() + 1);
        levels.push(vec![GateOp::copy(CRef::In(0)), GateOp::copy(CRef::In(1))]);
        for (i, level) in circ.levels.iter().enumerate() {
            levels.push(
                level
                    .iter()
                    .map(|gate| {
                        let mut gate = gate.clone();
                        for arg in gate.args_mut() {
                            if let GArg::Ref(r) = arg {
                                *r = match *r {
                                    CRef::In(k) if i == 0 => CRef::Gate(1, k),
                                    CRef::In(k) => CRef::In(k),
                                    CRef::Gate(l, s) => CRef::Gate(l + 1, s),
                                };
                            }
                        }
                        gate
                    })
                    .collect(),
            );
        }
        let outputs = circ
            .outputs
            .iter()
            .map(|r| match *r {
                CRef::Gate(l, s) => CRef::Gate(l + 1, s),
                CRef::In(k) => CRef::In(k),
            })
            .collect();
        padded = SyncCircuit {
            num_inputs: circ.num_inputs,
            bound: circ.bound.clone(),
            levels,
            outputs,
        };
        &padded
    } else {
        circ
    };

    let depth = circ.depth();
    let num_levels = depth + 1;
    let (sx, sy) = match (circ.outputs[0], circ.outputs[1]) {
        (CRef::Gate(lx, sx), CRef::Gate(ly, sy)) if lx == depth && ly == depth => (sx, sy),
        _ => {
            return Err(GameError::BadShape(
                "both outputs must be gates of the final level".into(),
            ))
        }
    };

    // References shift one level up; input reads become reads of the
    // coordinate copies on level 1, which is only adjacent from the first
    // circuit level.
    let shift = |gate: &GateOp, circuit_level: usize| -> Result<GateOp, GameError> {
        let mut gate = gate.clone();
        for arg in gate.args_mut() {
            if let GArg::Ref(r) = arg {
                *r = match *r {
                    CRef::In(k) => {
                        if circuit_level != 1 {
                            return Err(GameError::BadShape(format!(
                                "input read at circuit level {circuit_level}; \
                                 inputs may only be read by the first level"
                            )));
                        }
                        CRef::Gate(1, 6 + k)
                    }
                    CRef::Gate(l, s) => CRef::Gate(l + 1, s),
                };
            }
        }
        Ok(gate)
    };

    let mut levels: Vec<Vec<Option<GateOp>>> = vec![vec![None; SLOTS]; num_levels];

    // Level 1: the coordinate pair, fed from the bottom of the copy chain.
    levels[0][6] = Some(GateOp::copy(CRef::Gate(2, 8)));
    levels[0][7] = Some(GateOp::copy(CRef::Gate(2, 9)));

    // Interior circuit levels keep their slots.
    for (i, level) in circ.levels.iter().enumerate().take(depth - 1) {
        for (s, gate) in level.iter().enumerate() {
            levels[i + 1][s] = Some(shift(gate, i + 1)?);
        }
    }

    // Final level: outputs move to slots 6 and 7; the rest pack from slot 0.
    let last = &circ.levels[depth - 1];
    let top = &mut levels[num_levels - 1];
    top[6] = Some(shift(&last[sx], depth)?);
    top[7] = Some(shift(&last[sy], depth)?);
    let mut free = 0usize;
    for (s, gate) in last.iter().enumerate() {
        if s == sx || s == sy {
            continue;
        }
        while free < 6 && top[free].is_some() {
            free += 1;
        }
        if free >= 6 {
            return Err(GameError::BadShape(
                "final level cannot fit beside the output pair".into(),
            ));
        }
        top[free] = Some(shift(gate, depth)?);
        free += 1;
    }

    // Copy chain through slots 8 and 9: level N-1 reads the outputs above
    // it, and each lower level reads the chain one level up.
    levels[num_levels - 2][8] = Some(GateOp::copy(CRef::Gate(num_levels, 6)));
    levels[num_levels - 2][9] = Some(GateOp::copy(CRef::Gate(num_levels, 7)));
    for j in 2..num_levels - 1 {
        levels[j - 1][8] = Some(GateOp::copy(CRef::Gate(j + 1, 8)));
        levels[j - 1][9] = Some(GateOp::copy(CRef::Gate(j + 1, 9)));
    }

    let system = LoopbackSystem {
        bound: circ.bound.clone(),
        levels,
    };
    system.validate()?;
    Ok(system)
}

/// Build the self-consistent assignment induced by a fixed point.
///
/// `x` and `y` are coordinates of an exact fixed point of the circuit that
/// was closed into `system`, *before* rescaling: they are divided by ten,
/// propagated forward through the levels, and the copy chain is filled from
/// the outputs back down. Returns an error if the resulting assignment is
/// not self-consistent, i.e. if `(x, y)` was not actually a fixed point.
pub fn assignment_from_fixed_point(
    system: &LoopbackSystem,
    x: &Rat,
    y: &Rat,
) -> Result<Assignment, GameError> {
    system.validate()?;
    let ten = Rat::int(10);
    let n = system.num_levels();
    let mut values: Assignment = vec![vec![None; SLOTS]; n];
    values[0][6] = Some(x / &ten);
    values[0][7] = Some(y / &ten);

    // Forward pass: every gate that reads the level below it.
    for j in 2..=n {
        for s in 0..SLOTS {
            let Some(gate) = system.gate(j, s) else {
                continue;
            };
            let reads_below = gate
                .refs()
                .all(|r| matches!(r, CRef::Gate(l, _) if l == j - 1));
            if !reads_below {
                continue;
            }
            let prev = &values[j - 2];
            let read = |r: CRef| -> Rat {
                match r {
                    // Forward gates only read circuit slots (or the seeded
                    // coordinate pair), all filled by earlier iterations.
                    CRef::Gate(_, t) => prev[t].clone().expect("forward read computed"),
                    CRef::In(_) => unreachable!("validated: no input refs"),
                }
            };
            values[j - 1][s] = Some(system.eval_gate(gate, &read));
        }
    }

    // Backward pass: the copy chain carries the output pair down.
    values[n - 2][8] = values[n - 1][6].clone();
    values[n - 2][9] = values[n - 1][7].clone();
    for j in (2..n - 1).rev() {
        values[j - 1][8] = values[j][8].clone();
        values[j - 1][9] = values[j][9].clone();
    }

    system.check_assignment(&values)?;
    Ok(values)
}
