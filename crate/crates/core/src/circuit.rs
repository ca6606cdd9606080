//! Synchronous clipped-arithmetic circuits and the program-to-circuit
//! compiler.
//!
//! A [`SyncCircuit`] is a layered circuit over values in `[0, bound]`
//! (`bound` is `1` for source circuits; rescaling produces `1/10`). Level
//! `0` is the inputs; levels `1..=depth` hold gates. Gates compute the same
//! clipped operations as the program DSL:
//!
//! * `Const(c)` — the constant `c ∈ [0, bound]`;
//! * `AddB(a, b)` — `min(a + b, bound)`;
//! * `SubB(a, b)` — `max(a - b, 0)`;
//! * `MulB(a, f)` — `min(a · f, bound)` with a constant factor `f ≥ 0`.
//!
//! **Synchronicity:** `AddB`/`SubB` gates at level `i` may only read level
//! `i - 1` (the inputs when `i == 1`). `Const` gates read nothing, and
//! `MulB` gates may read any earlier level, though the compiler only ever
//! emits references to the immediately preceding one. Constant literal
//! operands are allowed anywhere and read no level at all.
//!
//! [`compile`] turns a flat program into such a circuit with one level per
//! program line. The slots of level `i` are exactly the variables live at
//! line `i` (in a fixed order), so the circuit's width equals the program's
//! peak live-variable count: the destination variable's slot holds the
//! line's gate, and every other live variable is carried forward by a
//! `MulB(·, 1)` copy gate. Outputs become references into the final level
//! because declared outputs stay live to the end.

use serde::{Deserialize, Serialize};

use crate::rational::Rat;
use crate::slp::{FlatArg, FlatOp, FlatSlp, SlpError, VarId};

/// A reference to a value produced earlier in the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CRef {
    /// Input `i` (level 0).
    In(usize),
    /// Gate `slot` of `level` (1-based level, 0-based slot).
    Gate(usize, usize),
}

/// An operand of a circuit gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GArg {
    /// A reference to an input or an earlier gate.
    Ref(CRef),
    /// An inline constant in `[0, bound]`.
    Lit {
        /// The constant.
        lit: Rat,
    },
}

impl GArg {
    /// The reference inside, if this operand is one.
    pub fn as_ref(&self) -> Option<CRef> {
        match self {
            GArg::Ref(r) => Some(*r),
            GArg::Lit { .. } => None,
        }
    }

    /// Convenience constructor for a literal operand.
    pub fn lit(r: Rat) -> Self {
        GArg::Lit { lit: r }
    }
}

/// A circuit gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum GateOp {
    /// The constant `value ∈ [0, bound]`.
    Const {
        /// The constant.
        value: Rat,
    },
    /// Saturating addition `min(lhs + rhs, bound)`.
    AddB {
        /// Left operand.
        lhs: GArg,
        /// Right operand.
        rhs: GArg,
    },
    /// Truncated subtraction `max(lhs - rhs, 0)`.
    SubB {
        /// Left operand.
        lhs: GArg,
        /// Right operand.
        rhs: GArg,
    },
    /// Clipped scaling `min(arg · factor, bound)`, `factor ≥ 0`.
    MulB {
        /// Operand.
        arg: GArg,
        /// Non-negative constant factor (may exceed the bound).
        factor: Rat,
    },
}

impl GateOp {
    /// A `MulB(·, 1)` copy gate.
    pub fn copy(of: CRef) -> Self {
        GateOp::MulB {
            arg: GArg::Ref(of),
            factor: Rat::one(),
        }
    }

    /// The operand slots of this gate.
    pub fn args(&self) -> impl Iterator<Item = &GArg> {
        let (a, b) = match self {
            GateOp::Const { .. } => (None, None),
            GateOp::AddB { lhs, rhs } | GateOp::SubB { lhs, rhs } => (Some(lhs), Some(rhs)),
            GateOp::MulB { arg, .. } => (Some(arg), None),
        };
        [a, b].into_iter().flatten()
    }

    /// Mutable access to the operand slots of this gate.
    pub fn args_mut(&mut self) -> impl Iterator<Item = &mut GArg> {
        let (a, b) = match self {
            GateOp::Const { .. } => (None, None),
            GateOp::AddB { lhs, rhs } | GateOp::SubB { lhs, rhs } => (Some(lhs), Some(rhs)),
            GateOp::MulB { arg, .. } => (Some(arg), None),
        };
        [a, b].into_iter().flatten()
    }

    /// The operand references of this gate.
    pub fn refs(&self) -> impl Iterator<Item = CRef> + '_ {
        self.args().filter_map(GArg::as_ref)
    }
}

/// A layered synchronous circuit over `[0, bound]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncCircuit {
    /// Number of inputs (level 0 slots).
    pub num_inputs: usize,
    /// The clipping bound shared by every gate (`1` for source circuits).
    pub bound: Rat,
    /// Gate levels; `levels[i]` is level `i + 1`.
    pub levels: Vec<Vec<GateOp>>,
    /// Output references.
    pub outputs: Vec<CRef>,
}

/// Errors from circuit validation and evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    /// Wrong number of inputs at evaluation.
    #[error("circuit takes {expected} inputs, got {got}")]
    InputCount {
        /// Expected count.
        expected: usize,
        /// Supplied count.
        got: usize,
    },
    /// An input value was outside `[0, bound]`.
    #[error("input {index} is {value}, outside [0, {bound}]")]
    InputRange {
        /// 0-based index.
        index: usize,
        /// Offending value.
        value: Rat,
        /// Circuit bound.
        bound: Rat,
    },
    /// A reference pointed nowhere.
    #[error("level {level}, slot {slot}: dangling reference {msg}")]
    BadRef {
        /// Level of the offending gate (0 for outputs).
        level: usize,
        /// Slot of the offending gate.
        slot: usize,
        /// Description.
        msg: String,
    },
    /// An add/sub gate read something other than the previous level.
    #[error("level {level}, slot {slot}: {msg}")]
    Synchronicity {
        /// Level of the offending gate.
        level: usize,
        /// Slot of the offending gate.
        slot: usize,
        /// Description.
        msg: String,
    },
    /// A constant was outside its required range.
    #[error("level {level}, slot {slot}: constant {value} {msg}")]
    ConstRange {
        /// Level of the offending gate.
        level: usize,
        /// Slot of the offending gate.
        slot: usize,
        /// Offending value.
        value: Rat,
        /// Description.
        msg: String,
    },
    /// The residual was requested for a circuit that is not an endomap.
    #[error("residual needs outputs ({outputs}) to match inputs ({inputs})")]
    NotAnEndomap {
        /// Input count.
        inputs: usize,
        /// Output count.
        outputs: usize,
    },
    /// The underlying program was malformed.
    #[error(transparent)]
    Slp(#[from] SlpError),
}

impl SyncCircuit {
    /// Number of gate levels.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Maximum level size (zero for a gateless circuit).
    pub fn width(&self) -> usize {
        self.levels.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Total number of gates.
    pub fn gate_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    fn check_ref(&self, r: CRef, level: usize, slot: usize) -> Result<(), CircuitError> {
        match r {
            CRef::In(i) if i < self.num_inputs => Ok(()),
            CRef::In(i) => Err(CircuitError::BadRef {
                level,
                slot,
                msg: format!("input {i} of {}", self.num_inputs),
            }),
            CRef::Gate(l, s) => {
                if l >= 1 && l <= self.levels.len() && s < self.levels[l - 1].len() {
                    Ok(())
                } else {
                    Err(CircuitError::BadRef {
                        level,
                        slot,
                        msg: format!("gate ({l}, {s})"),
                    })
                }
            }
        }
    }

    fn check_const(
        &self,
        value: &Rat,
        level: usize,
        slot: usize,
        allow_above_bound: bool,
    ) -> Result<(), CircuitError> {
        if value.is_negative() {
            return Err(CircuitError::ConstRange {
                level,
                slot,
                value: value.clone(),
                msg: "must be non-negative".into(),
            });
        }
        if !allow_above_bound && *value > self.bound {
            return Err(CircuitError::ConstRange {
                level,
                slot,
                value: value.clone(),
                msg: format!("exceeds the bound {}", self.bound),
            });
        }
        Ok(())
    }

    /// Validates structure, constant ranges, and the synchronicity rule for
    /// a feedforward circuit (every reference points strictly earlier;
    /// add/sub gates read exactly the previous level).
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.bound.is_negative() || self.bound.is_zero() {
            return Err(CircuitError::ConstRange {
                level: 0,
                slot: 0,
                value: self.bound.clone(),
                msg: "bound must be positive".into(),
            });
        }
        for (lvl_idx, level) in self.levels.iter().enumerate() {
            let i = lvl_idx + 1;
            for (slot, gate) in level.iter().enumerate() {
                for r in gate.refs() {
                    self.check_ref(r, i, slot)?;
                    let source_level = match r {
                        CRef::In(_) => 0,
                        CRef::Gate(l, _) => l,
                    };
                    if source_level >= i {
                        return Err(CircuitError::Synchronicity {
                            level: i,
                            slot,
                            msg: format!(
                                "reads level {source_level}, which is not earlier than {i}"
                            ),
                        });
                    }
                    let synchronous = matches!(gate, GateOp::AddB { .. } | GateOp::SubB { .. });
                    if synchronous && source_level != i - 1 {
                        return Err(CircuitError::Synchronicity {
                            level: i,
                            slot,
                            msg: format!(
                                "add/sub gate reads level {source_level}, expected {}",
                                i - 1
                            ),
                        });
                    }
                }
                match gate {
                    GateOp::Const { value } => self.check_const(value, i, slot, false)?,
                    GateOp::MulB { factor, arg } => {
                        self.check_const(factor, i, slot, true)?;
                        if let GArg::Lit { lit } = arg {
                            self.check_const(lit, i, slot, false)?;
                        }
                    }
                    GateOp::AddB { lhs, rhs } | GateOp::SubB { lhs, rhs } => {
                        for a in [lhs, rhs] {
                            if let GArg::Lit { lit } = a {
                                self.check_const(lit, i, slot, false)?;
                            }
                        }
                    }
                }
            }
        }
        for (k, &out) in self.outputs.iter().enumerate() {
            self.check_ref(out, 0, k)?;
        }
        Ok(())
    }

    /// Evaluates the circuit, returning all gate values level by level.
    ///
    /// Inputs must lie in `[0, bound]`.
    pub fn evaluate_all(&self, inputs: &[Rat]) -> Result<Vec<Vec<Rat>>, CircuitError> {
        if inputs.len() != self.num_inputs {
            return Err(CircuitError::InputCount {
                expected: self.num_inputs,
                got: inputs.len(),
            });
        }
        for (index, v) in inputs.iter().enumerate() {
            if v.is_negative() || *v > self.bound {
                return Err(CircuitError::InputRange {
                    index,
                    value: v.clone(),
                    bound: self.bound.clone(),
                });
            }
        }
        let mut values: Vec<Vec<Rat>> = Vec::with_capacity(self.levels.len());
        for (lvl_idx, level) in self.levels.iter().enumerate() {
            let i = lvl_idx + 1;
            let mut row = Vec::with_capacity(level.len());
            for (slot, gate) in level.iter().enumerate() {
                let arg = |a: &GArg| -> Result<Rat, CircuitError> {
                    match a {
                        GArg::Lit { lit } => Ok(lit.clone()),
                        GArg::Ref(CRef::In(k)) => Ok(inputs[*k].clone()),
                        GArg::Ref(CRef::Gate(l, s)) => {
                            if *l >= i || *l < 1 {
                                return Err(CircuitError::BadRef {
                                    level: i,
                                    slot,
                                    msg: format!("gate ({l}, {s}) not yet computed"),
                                });
                            }
                            values
                                .get(*l - 1)
                                .and_then(|lv: &Vec<Rat>| lv.get(*s))
                                .cloned()
                                .ok_or_else(|| CircuitError::BadRef {
                                    level: i,
                                    slot,
                                    msg: format!("gate ({l}, {s})"),
                                })
                        }
                    }
                };
                let v = match gate {
                    GateOp::Const { value } => value.clone(),
                    GateOp::AddB { lhs, rhs } => arg(lhs)?.add_clip(&arg(rhs)?, &self.bound),
                    GateOp::SubB { lhs, rhs } => arg(lhs)?.sub_clip(&arg(rhs)?),
                    GateOp::MulB { arg: a, factor } => arg(a)?.mul_clip(factor, &self.bound),
                };
                row.push(v);
            }
            values.push(row);
        }
        Ok(values)
    }

    /// Evaluates the circuit, returning the output values.
    pub fn evaluate(&self, inputs: &[Rat]) -> Result<Vec<Rat>, CircuitError> {
        let values = self.evaluate_all(inputs)?;
        self.outputs
            .iter()
            .enumerate()
            .map(|(k, out)| match out {
                CRef::In(i) => inputs.get(*i).cloned().ok_or_else(|| CircuitError::BadRef {
                    level: 0,
                    slot: k,
                    msg: format!("input {i}"),
                }),
                CRef::Gate(l, s) => values
                    .get(*l - 1)
                    .and_then(|lv| lv.get(*s))
                    .cloned()
                    .ok_or_else(|| CircuitError::BadRef {
                        level: 0,
                        slot: k,
                        msg: format!("gate ({l}, {s})"),
                    }),
            })
            .collect()
    }

    /// The sup-norm residual `‖F(p) − p‖∞` of an endomap circuit at `p`.
    pub fn residual(&self, point: &[Rat]) -> Result<Rat, CircuitError> {
        if self.num_inputs != self.outputs.len() {
            return Err(CircuitError::NotAnEndomap {
                inputs: self.num_inputs,
                outputs: self.outputs.len(),
            });
        }
        let image = self.evaluate(point)?;
        let mut worst = Rat::zero();
        for (x, fx) in point.iter().zip(&image) {
            let d = (fx - x).abs();
            if d > worst {
                worst = d;
            }
        }
        Ok(worst)
    }
}

/// Compiles a flat program into a synchronous circuit, one level per line.
///
/// The resulting circuit's width equals [`FlatSlp::max_live`], its depth
/// equals the line count, and it computes exactly the same function: for
/// all valid inputs, `circuit.evaluate(x) == program.interpret(x)`.
pub fn compile(slp: &FlatSlp) -> Result<SyncCircuit, CircuitError> {
    slp.validate()?;
    let lv = slp.liveness();
    let m = slp.lines.len();

    // Where variable `v` lives at level `i`: its position in `lv.live[i]`.
    let slot_of = |live: &[VarId], v: VarId| -> usize {
        live.binary_search(&v).expect("live variable has a slot")
    };
    // Inputs sit at level 0 in declaration order.
    let input_index = |v: VarId| -> usize {
        slp.inputs
            .iter()
            .position(|&id| id == v)
            .expect("input variable")
    };
    let resolve = |v: VarId, level: usize| -> CRef {
        if level == 0 {
            CRef::In(input_index(v))
        } else {
            CRef::Gate(level, slot_of(&lv.live[level], v))
        }
    };

    let mut levels = Vec::with_capacity(m);
    for (idx, line) in slp.lines.iter().enumerate() {
        let i = idx + 1;
        let arg = |a: &FlatArg| -> GArg {
            match a {
                FlatArg::Var(v) => GArg::Ref(resolve(*v, i - 1)),
                FlatArg::Lit(r) => GArg::lit(r.clone()),
            }
        };
        let gate_for_line = match &line.op {
            FlatOp::Const(c) => GateOp::Const { value: c.clone() },
            FlatOp::AddB(a, b) => GateOp::AddB {
                lhs: arg(a),
                rhs: arg(b),
            },
            FlatOp::SubB(a, b) => GateOp::SubB {
                lhs: arg(a),
                rhs: arg(b),
            },
            FlatOp::MulB(a, f) => GateOp::MulB {
                arg: arg(a),
                factor: f.clone(),
            },
        };
        let level: Vec<GateOp> = lv.live[i]
            .iter()
            .map(|&v| {
                if v == line.dst {
                    gate_for_line.clone()
                } else {
                    GateOp::copy(resolve(v, i - 1))
                }
            })
            .collect();
        levels.push(level);
    }

    let outputs = slp.outputs.iter().map(|&v| resolve(v, m)).collect();
    Ok(SyncCircuit {
        num_inputs: slp.inputs.len(),
        bound: Rat::one(),
        levels,
        outputs,
    })
}
