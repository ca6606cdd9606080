//! Flat (fully expanded) programs: a plain list of gate assignments.

use std::fmt::Write as _;

use super::liveness::{self, Liveness};
use super::SlpError;
use crate::rational::Rat;

/// Index of a variable in a flat program.
pub type VarId = u32;

/// An operand of a flat gate: a variable or an inline rational literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatArg {
    /// A variable reference.
    Var(VarId),
    /// A constant literal in `[0, 1]`.
    Lit(Rat),
}

/// A flat gate operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatOp {
    /// A constant in `[0, 1]`.
    Const(Rat),
    /// Saturating addition `min(a + b, 1)`.
    AddB(FlatArg, FlatArg),
    /// Truncated subtraction `max(a - b, 0)`.
    SubB(FlatArg, FlatArg),
    /// Clipped scaling `min(a * c, 1)` by a constant `c >= 0`.
    MulB(FlatArg, Rat),
}

impl FlatOp {
    /// The operands of this gate, in order (literals excluded).
    pub fn var_args(&self) -> impl Iterator<Item = VarId> + '_ {
        let (a, b) = match self {
            FlatOp::Const(_) => (None, None),
            FlatOp::AddB(a, b) | FlatOp::SubB(a, b) => (Some(a), Some(b)),
            FlatOp::MulB(a, _) => (Some(a), None),
        };
        [a, b].into_iter().flatten().filter_map(|arg| match arg {
            FlatArg::Var(v) => Some(*v),
            FlatArg::Lit(_) => None,
        })
    }
}

/// One assignment line of a flat program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatLine {
    /// Variable assigned.
    pub dst: VarId,
    /// Gate computing the new value.
    pub op: FlatOp,
}

/// A fully expanded program.
///
/// Lines are conventionally numbered `1..=len`; "line 0" stands for the
/// virtual point where inputs receive their values, and "line `len + 1`"
/// for the virtual point where outputs are read. Those conventions matter
/// for the liveness analysis ([`FlatSlp::liveness`]) and the circuit
/// compiler built on top of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSlp {
    names: Vec<String>,
    /// Input variables, in declaration order.
    pub inputs: Vec<VarId>,
    /// Output variables, in declaration order.
    pub outputs: Vec<VarId>,
    /// Assignment lines, in execution order.
    pub lines: Vec<FlatLine>,
}

impl FlatSlp {
    /// Builds a flat program from raw parts, validating it.
    pub fn new(
        names: Vec<String>,
        inputs: Vec<VarId>,
        outputs: Vec<VarId>,
        lines: Vec<FlatLine>,
    ) -> Result<Self, SlpError> {
        let slp = Self::from_parts(names, inputs, outputs, lines);
        slp.validate()?;
        Ok(slp)
    }

    pub(super) fn from_parts(
        names: Vec<String>,
        inputs: Vec<VarId>,
        outputs: Vec<VarId>,
        lines: Vec<FlatLine>,
    ) -> Self {
        FlatSlp {
            names,
            inputs,
            outputs,
            lines,
        }
    }

    /// The number of interned variable names.
    pub fn names_len(&self) -> usize {
        self.names.len()
    }

    /// The name of a variable.
    pub fn var_name(&self, id: VarId) -> &str {
        &self.names[id as usize]
    }

    /// Checks structural well-formedness: all ids in range, inputs distinct,
    /// every variable defined before use, every constant in range.
    pub fn validate(&self) -> Result<(), SlpError> {
        let n = self.names.len();
        let invalid = |line: usize, msg: String| SlpError::FlatInvalid { line, msg };
        let mut seen = vec![false; n];
        for &id in &self.inputs {
            if id as usize >= n {
                return Err(invalid(0, format!("input id {id} out of range")));
            }
            if seen[id as usize] {
                return Err(invalid(
                    0,
                    format!("duplicate input {:?}", self.var_name(id)),
                ));
            }
            seen[id as usize] = true;
        }
        let mut defined = seen;
        let unit = Rat::one();
        for (idx, line) in self.lines.iter().enumerate() {
            let lineno = idx + 1;
            if line.dst as usize >= n {
                return Err(invalid(lineno, format!("dst id {} out of range", line.dst)));
            }
            let check_arg = |arg: &FlatArg, defined: &[bool]| -> Result<(), SlpError> {
                match arg {
                    FlatArg::Var(v) => {
                        if *v as usize >= n {
                            return Err(invalid(lineno, format!("arg id {v} out of range")));
                        }
                        if !defined[*v as usize] {
                            return Err(SlpError::FlatUseBeforeDef {
                                line: lineno,
                                name: self.var_name(*v).to_owned(),
                            });
                        }
                        Ok(())
                    }
                    FlatArg::Lit(r) => {
                        if r.is_negative() || *r > unit {
                            return Err(invalid(
                                lineno,
                                format!("literal operand {r} outside [0, 1]"),
                            ));
                        }
                        Ok(())
                    }
                }
            };
            match &line.op {
                FlatOp::Const(c) => {
                    if c.is_negative() || *c > unit {
                        return Err(invalid(lineno, format!("constant {c} outside [0, 1]")));
                    }
                }
                FlatOp::AddB(a, b) | FlatOp::SubB(a, b) => {
                    check_arg(a, &defined)?;
                    check_arg(b, &defined)?;
                }
                FlatOp::MulB(a, f) => {
                    check_arg(a, &defined)?;
                    if f.is_negative() {
                        return Err(invalid(lineno, format!("negative scaling factor {f}")));
                    }
                }
            }
            defined[line.dst as usize] = true;
        }
        for &id in &self.outputs {
            if id as usize >= n || !defined[id as usize] {
                return Err(SlpError::UndefinedOutput {
                    name: self
                        .names
                        .get(id as usize)
                        .cloned()
                        .unwrap_or_else(|| format!("#{id}")),
                });
            }
        }
        Ok(())
    }

    /// Runs the program on the given inputs, returning the output values.
    ///
    /// Inputs must lie in `[0, 1]`; every intermediate value then does too.
    pub fn interpret(&self, inputs: &[Rat]) -> Result<Vec<Rat>, SlpError> {
        if inputs.len() != self.inputs.len() {
            return Err(SlpError::InputCount {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        let one = Rat::one();
        for (index, v) in inputs.iter().enumerate() {
            if v.is_negative() || *v > one {
                return Err(SlpError::InputRange {
                    index,
                    value: v.clone(),
                });
            }
        }
        let mut env: Vec<Option<Rat>> = vec![None; self.names.len()];
        for (&id, v) in self.inputs.iter().zip(inputs) {
            env[id as usize] = Some(v.clone());
        }
        for (idx, line) in self.lines.iter().enumerate() {
            let value = {
                let arg = |a: &FlatArg| -> Result<Rat, SlpError> {
                    match a {
                        FlatArg::Var(v) => {
                            env[*v as usize]
                                .clone()
                                .ok_or_else(|| SlpError::FlatUseBeforeDef {
                                    line: idx + 1,
                                    name: self.var_name(*v).to_owned(),
                                })
                        }
                        FlatArg::Lit(r) => Ok(r.clone()),
                    }
                };
                match &line.op {
                    FlatOp::Const(c) => c.clone(),
                    FlatOp::AddB(a, b) => arg(a)?.add_clip(&arg(b)?, &one),
                    FlatOp::SubB(a, b) => arg(a)?.sub_clip(&arg(b)?),
                    FlatOp::MulB(a, f) => arg(a)?.mul_clip(f, &one),
                }
            };
            env[line.dst as usize] = Some(value);
        }
        let mut out = Vec::with_capacity(self.outputs.len());
        for &id in &self.outputs {
            match &env[id as usize] {
                Some(v) => out.push(v.clone()),
                None => {
                    return Err(SlpError::UndefinedOutput {
                        name: self.var_name(id).to_owned(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Runs the liveness analysis; see [`Liveness`].
    pub fn liveness(&self) -> Liveness {
        liveness::analyze(self)
    }

    /// The peak number of simultaneously live variables over all assignment
    /// lines (zero for a program with no lines).
    pub fn max_live(&self) -> usize {
        self.liveness().max_live
    }

    /// Renders the program as parseable DSL text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let list = |ids: &[VarId]| -> String {
            ids.iter()
                .map(|&id| self.var_name(id))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if !self.inputs.is_empty() {
            let _ = writeln!(out, "inputs {}", list(&self.inputs));
        }
        if !self.outputs.is_empty() {
            let _ = writeln!(out, "outputs {}", list(&self.outputs));
        }
        let arg = |a: &FlatArg| -> String {
            match a {
                FlatArg::Var(v) => self.var_name(*v).to_owned(),
                FlatArg::Lit(r) => r.to_string(),
            }
        };
        for line in &self.lines {
            let dst = self.var_name(line.dst);
            let rhs = match &line.op {
                FlatOp::Const(c) => c.to_string(),
                FlatOp::AddB(a, b) => format!("{} +b {}", arg(a), arg(b)),
                FlatOp::SubB(a, b) => format!("{} -b {}", arg(a), arg(b)),
                FlatOp::MulB(a, f) => format!("{} *b {}", arg(a), f),
            };
            let _ = writeln!(out, "{dst} <- {rhs}");
        }
        out
    }
}
