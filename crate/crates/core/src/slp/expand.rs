//! Expansion of structured programs into flat gate lists.
//!
//! Expansion is a single pass over the statement tree that:
//!
//! * evaluates every constant expression (loops, conditionals, and list
//!   machinery are resolved here — nothing structural survives);
//! * inlines macro bodies, binding variable parameters by reference to
//!   caller variables and constant parameters by value;
//! * renames every variable a macro body introduces to a fresh name
//!   (`base__N`), so separate invocations can never interfere;
//! * enforces definedness (no variable is read before a value is written)
//!   and the range discipline of the gate language (assignment constants and
//!   add/sub literal operands in `[0, 1]`, scaling factors non-negative).

use std::collections::HashMap;

use super::flat::{FlatArg, FlatLine, FlatOp, FlatSlp, VarId};
use super::{
    CBinOp, CFn, CmpOp, ConstExpr, GateRhs, InvokeArg, MacroDef, MacroParam, Operand, Pred,
    Program, SlpError, Span, Stmt, StmtKind,
};
use crate::rational::Rat;

/// Hard cap on emitted lines, to catch runaway loop nests early.
const MAX_LINES: usize = 10_000_000;

/// Hard cap on `|exponent|` in constant powers.
const MAX_POW: i64 = 4096;

/// Hard cap on the length of a `[lo..hi]` range literal.
const MAX_RANGE: i64 = 1_000_000;

/// A constant value: a rational or a list of rationals.
#[derive(Debug, Clone, PartialEq)]
enum CVal {
    Num(Rat),
    List(Vec<Rat>),
}

impl CVal {
    fn kind(&self) -> &'static str {
        match self {
            CVal::Num(_) => "a number",
            CVal::List(_) => "a list",
        }
    }
}

#[derive(Debug, Clone)]
enum Binding {
    Var(VarId),
    Const(CVal),
}

/// One lexical scope: the global scope or one macro invocation.
///
/// Lookups do **not** chain to outer scopes — that is what makes macro
/// bodies hygienic. `hygienic` controls what assignment to an unknown name
/// does: create a global (top level) or a renamed local (macro body).
struct Frame {
    bindings: HashMap<String, Binding>,
    hygienic: bool,
}

struct Expander<'p> {
    macros: HashMap<&'p str, &'p MacroDef>,
    names: Vec<String>,
    ids: HashMap<String, VarId>,
    defined: Vec<bool>,
    lines: Vec<FlatLine>,
    call_stack: Vec<&'p str>,
    fresh: u64,
}

pub(super) fn expand(prog: &Program) -> Result<FlatSlp, SlpError> {
    let mut macros = HashMap::new();
    for def in &prog.macros {
        macros.insert(def.name.as_str(), def);
    }
    let mut ex = Expander {
        macros,
        names: Vec::new(),
        ids: HashMap::new(),
        defined: Vec::new(),
        lines: Vec::new(),
        call_stack: Vec::new(),
        fresh: 0,
    };
    let mut top = Frame {
        bindings: HashMap::new(),
        hygienic: false,
    };
    let mut input_ids = Vec::with_capacity(prog.inputs.len());
    for name in &prog.inputs {
        let id = ex.intern(name.clone());
        ex.defined[id as usize] = true;
        top.bindings.insert(name.clone(), Binding::Var(id));
        input_ids.push(id);
    }
    ex.run_body(&prog.body, &mut top)?;
    let mut output_ids = Vec::with_capacity(prog.outputs.len());
    for name in &prog.outputs {
        match top.bindings.get(name) {
            Some(Binding::Var(id)) if ex.defined[*id as usize] => output_ids.push(*id),
            Some(Binding::Const(_)) => {
                return Err(SlpError::ConstKind {
                    msg: format!("output {name:?} is a constant, not a variable"),
                    span: Span::default(),
                })
            }
            _ => return Err(SlpError::UndefinedOutput { name: name.clone() }),
        }
    }
    Ok(FlatSlp::from_parts(
        ex.names, input_ids, output_ids, ex.lines,
    ))
}

impl<'p> Expander<'p> {
    fn intern(&mut self, name: String) -> VarId {
        if let Some(id) = self.ids.get(&name) {
            return *id;
        }
        let id = self.names.len() as VarId;
        self.ids.insert(name.clone(), id);
        self.names.push(name);
        self.defined.push(false);
        id
    }

    fn fresh_name(&mut self, base: &str) -> String {
        loop {
            self.fresh += 1;
            let candidate = format!("{base}__{}", self.fresh);
            if !self.ids.contains_key(&candidate) {
                return candidate;
            }
        }
    }

    fn run_body(&mut self, body: &'p [Stmt], frame: &mut Frame) -> Result<(), SlpError> {
        for stmt in body {
            self.run_stmt(stmt, frame)?;
        }
        Ok(())
    }

    fn run_stmt(&mut self, stmt: &'p Stmt, frame: &mut Frame) -> Result<(), SlpError> {
        match &stmt.kind {
            StmtKind::Assign { dst, rhs } => self.run_assign(dst, rhs, stmt.span, frame),
            StmtKind::Invoke { name, args } => self.run_invoke(name, args, stmt.span, frame),
            StmtKind::For { var, lo, hi, body } => {
                let lo = self.eval_int(lo, frame)?;
                let hi = self.eval_int(hi, frame)?;
                if (hi as i128) - (lo as i128) >= MAX_RANGE as i128 {
                    return Err(SlpError::ConstEval {
                        msg: format!("loop range {lo}..{hi} is too long"),
                        span: stmt.span,
                    });
                }
                let saved = frame.bindings.get(var).cloned();
                for i in lo..=hi {
                    frame
                        .bindings
                        .insert(var.clone(), Binding::Const(CVal::Num(Rat::int(i))));
                    self.run_body(body, frame)?;
                }
                match saved {
                    Some(b) => frame.bindings.insert(var.clone(), b),
                    None => frame.bindings.remove(var),
                };
                Ok(())
            }
            StmtKind::If {
                pred,
                then_body,
                else_body,
            } => {
                if self.eval_pred(pred, frame)? {
                    self.run_body(then_body, frame)
                } else {
                    self.run_body(else_body, frame)
                }
            }
        }
    }

    fn run_assign(
        &mut self,
        dst: &str,
        rhs: &GateRhs,
        span: Span,
        frame: &mut Frame,
    ) -> Result<(), SlpError> {
        let op = match rhs {
            GateRhs::Const(e) => {
                let c = self.eval_num(e, frame)?;
                self.check_range(&c, "a constant assignment must lie in [0, 1]", span)?;
                FlatOp::Const(c)
            }
            GateRhs::AddB(a, b) => {
                let a = self.resolve_operand(a, span, frame)?;
                let b = self.resolve_operand(b, span, frame)?;
                FlatOp::AddB(a, b)
            }
            GateRhs::SubB(a, b) => {
                let a = self.resolve_operand(a, span, frame)?;
                let b = self.resolve_operand(b, span, frame)?;
                FlatOp::SubB(a, b)
            }
            GateRhs::MulB(a, factor) => {
                let a = self.resolve_operand(a, span, frame)?;
                let f = self.eval_num(factor, frame)?;
                if f.is_negative() {
                    return Err(SlpError::ConstOutOfRange {
                        value: f,
                        msg: "scaling factors must be non-negative".into(),
                        span,
                    });
                }
                FlatOp::MulB(a, f)
            }
        };
        let dst_id = self.resolve_write(dst, span, frame)?;
        if self.lines.len() >= MAX_LINES {
            return Err(SlpError::TooLarge { limit: MAX_LINES });
        }
        self.lines.push(FlatLine { dst: dst_id, op });
        self.defined[dst_id as usize] = true;
        Ok(())
    }

    fn resolve_operand(
        &mut self,
        op: &Operand,
        span: Span,
        frame: &Frame,
    ) -> Result<FlatArg, SlpError> {
        match op {
            Operand::Var(name, vspan) => match frame.bindings.get(name) {
                Some(Binding::Var(id)) => {
                    if !self.defined[*id as usize] {
                        return Err(SlpError::UseBeforeDef {
                            name: name.clone(),
                            span: *vspan,
                        });
                    }
                    Ok(FlatArg::Var(*id))
                }
                Some(Binding::Const(CVal::Num(r))) => {
                    let r = r.clone();
                    self.check_range(&r, "gate operands must lie in [0, 1]", *vspan)?;
                    Ok(FlatArg::Lit(r))
                }
                Some(Binding::Const(CVal::List(_))) => Err(SlpError::ConstKind {
                    msg: format!("{name:?} is a list and cannot be a gate operand"),
                    span: *vspan,
                }),
                None => Err(SlpError::UseBeforeDef {
                    name: name.clone(),
                    span: *vspan,
                }),
            },
            Operand::Lit(e) => {
                let r = self.eval_num(e, frame)?;
                self.check_range(&r, "gate operands must lie in [0, 1]", span)?;
                Ok(FlatArg::Lit(r))
            }
        }
    }

    fn resolve_write(
        &mut self,
        name: &str,
        span: Span,
        frame: &mut Frame,
    ) -> Result<VarId, SlpError> {
        match frame.bindings.get(name) {
            Some(Binding::Var(id)) => Ok(*id),
            Some(Binding::Const(_)) => Err(SlpError::ConstKind {
                msg: format!("cannot assign to {name:?}: it is a constant in this scope"),
                span,
            }),
            None => {
                let final_name = if frame.hygienic {
                    self.fresh_name(name)
                } else {
                    name.to_owned()
                };
                let id = self.intern(final_name);
                frame.bindings.insert(name.to_owned(), Binding::Var(id));
                Ok(id)
            }
        }
    }

    fn run_invoke(
        &mut self,
        name: &str,
        args: &[InvokeArg],
        span: Span,
        frame: &mut Frame,
    ) -> Result<(), SlpError> {
        let def = *self
            .macros
            .get(name)
            .ok_or_else(|| SlpError::UnknownMacro {
                name: name.to_owned(),
                span,
            })?;
        if self.call_stack.contains(&def.name.as_str()) {
            return Err(SlpError::Recursion {
                name: name.to_owned(),
                span,
            });
        }
        if args.len() != def.params.len() {
            return Err(SlpError::ArityMismatch {
                name: name.to_owned(),
                expected: def.params.len(),
                got: args.len(),
                span,
            });
        }
        let mut callee = Frame {
            bindings: HashMap::new(),
            hygienic: true,
        };
        for (index, (param, arg)) in def.params.iter().zip(args).enumerate() {
            let binding = match param {
                MacroParam::Var(_) => match arg {
                    InvokeArg::Name(arg_name, aspan) => {
                        match frame.bindings.get(arg_name) {
                            Some(Binding::Var(id)) => Binding::Var(*id),
                            Some(Binding::Const(_)) => {
                                return Err(SlpError::ArgKind {
                                    name: name.to_owned(),
                                    index: index + 1,
                                    msg: format!(
                                        "is the constant {arg_name:?}, expected a variable"
                                    ),
                                    span: *aspan,
                                })
                            }
                            None => {
                                // A new variable the macro may define; create
                                // it in the caller's scope.
                                let id = self.resolve_write(arg_name, *aspan, frame)?;
                                Binding::Var(id)
                            }
                        }
                    }
                    InvokeArg::Expr(_) => {
                        return Err(SlpError::ArgKind {
                            name: name.to_owned(),
                            index: index + 1,
                            msg: "is a constant expression, expected a variable".into(),
                            span,
                        })
                    }
                },
                MacroParam::Const(_) => {
                    let val = match arg {
                        InvokeArg::Expr(e) => self.eval_cexpr(e, frame)?,
                        InvokeArg::Name(arg_name, aspan) => match frame.bindings.get(arg_name) {
                            Some(Binding::Const(v)) => v.clone(),
                            Some(Binding::Var(_)) => {
                                return Err(SlpError::ArgKind {
                                    name: name.to_owned(),
                                    index: index + 1,
                                    msg: format!(
                                        "is the variable {arg_name:?}, expected a constant"
                                    ),
                                    span: *aspan,
                                })
                            }
                            None => {
                                return Err(SlpError::UnknownConst {
                                    name: arg_name.clone(),
                                    span: *aspan,
                                })
                            }
                        },
                    };
                    Binding::Const(val)
                }
            };
            let param_name = match param {
                MacroParam::Var(n) => n.clone(),
                MacroParam::Const(n) => n.clone(),
            };
            callee.bindings.insert(param_name, binding);
        }
        self.call_stack.push(&def.name);
        let result = self.run_body(&def.body, &mut callee);
        self.call_stack.pop();
        result
    }

    fn check_range(&self, value: &Rat, msg: &str, span: Span) -> Result<(), SlpError> {
        if value.is_negative() || *value > Rat::one() {
            return Err(SlpError::ConstOutOfRange {
                value: value.clone(),
                msg: msg.to_owned(),
                span,
            });
        }
        Ok(())
    }

    // ── constant evaluation ──────────────────────────────────────────────

    fn eval_cexpr(&self, e: &ConstExpr, frame: &Frame) -> Result<CVal, SlpError> {
        match e {
            ConstExpr::Lit(r) => Ok(CVal::Num(r.clone())),
            ConstExpr::Ref(name, span) => match frame.bindings.get(name) {
                Some(Binding::Const(v)) => Ok(v.clone()),
                Some(Binding::Var(_)) => Err(SlpError::ConstKind {
                    msg: format!("{name:?} is a gate variable, not a constant"),
                    span: *span,
                }),
                None => Err(SlpError::UnknownConst {
                    name: name.clone(),
                    span: *span,
                }),
            },
            ConstExpr::List(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for item in items {
                    vals.push(self.eval_num(item, frame)?);
                }
                Ok(CVal::List(vals))
            }
            ConstExpr::Range(lo, hi) => {
                let lo = self.eval_int(lo, frame)?;
                let hi = self.eval_int(hi, frame)?;
                if hi >= lo && hi - lo >= MAX_RANGE {
                    return Err(SlpError::ConstEval {
                        msg: format!("range [{lo}..{hi}] is too long"),
                        span: Span::default(),
                    });
                }
                Ok(CVal::List((lo..=hi).map(Rat::int).collect()))
            }
            ConstExpr::Neg(inner) => {
                let v = self.eval_num(inner, frame)?;
                Ok(CVal::Num(-v))
            }
            ConstExpr::Bin(op, lhs, rhs, span) => {
                let a = self.eval_num(lhs, frame)?;
                match op {
                    CBinOp::Pow => {
                        let exp = self.eval_int(rhs, frame)?;
                        if exp.abs() > MAX_POW {
                            return Err(SlpError::ConstEval {
                                msg: format!("exponent {exp} is too large"),
                                span: *span,
                            });
                        }
                        if a.is_zero() && exp < 0 {
                            return Err(SlpError::ConstEval {
                                msg: "zero raised to a negative power".into(),
                                span: *span,
                            });
                        }
                        Ok(CVal::Num(a.pow(exp as i32)))
                    }
                    _ => {
                        let b = self.eval_num(rhs, frame)?;
                        let r = match op {
                            CBinOp::Add => &a + &b,
                            CBinOp::Sub => &a - &b,
                            CBinOp::Mul => &a * &b,
                            CBinOp::Div => {
                                if b.is_zero() {
                                    return Err(SlpError::ConstEval {
                                        msg: "division by zero".into(),
                                        span: *span,
                                    });
                                }
                                &a / &b
                            }
                            CBinOp::Pow => unreachable!(),
                        };
                        Ok(CVal::Num(r))
                    }
                }
            }
            ConstExpr::Call(func, args, span) => self.eval_call(*func, args, *span, frame),
            ConstExpr::Index(list, idx, span) => {
                let list = self.eval_list(list, frame)?;
                let i = self.eval_int(idx, frame)?;
                if i < 1 || i as usize > list.len() {
                    return Err(SlpError::ConstEval {
                        msg: format!("index {i} out of bounds for a list of {}", list.len()),
                        span: *span,
                    });
                }
                Ok(CVal::Num(list[i as usize - 1].clone()))
            }
        }
    }

    fn eval_call(
        &self,
        func: CFn,
        args: &[ConstExpr],
        span: Span,
        frame: &Frame,
    ) -> Result<CVal, SlpError> {
        let arity = match func {
            CFn::IndexOf => 2,
            _ => 1,
        };
        if args.len() != arity {
            return Err(SlpError::ConstEval {
                msg: format!("function takes {arity} argument(s), got {}", args.len()),
                span,
            });
        }
        match func {
            CFn::Len => {
                let list = self.eval_list(&args[0], frame)?;
                Ok(CVal::Num(Rat::int(list.len() as i64)))
            }
            CFn::Max => {
                let list = self.eval_list(&args[0], frame)?;
                list.into_iter()
                    .max()
                    .map(CVal::Num)
                    .ok_or_else(|| SlpError::ConstEval {
                        msg: "max() of an empty list".into(),
                        span,
                    })
            }
            CFn::Abs => Ok(CVal::Num(self.eval_num(&args[0], frame)?.abs())),
            CFn::IndexOf => {
                let list = self.eval_list(&args[0], frame)?;
                let v = self.eval_num(&args[1], frame)?;
                match list.iter().position(|x| *x == v) {
                    Some(i) => Ok(CVal::Num(Rat::int(i as i64 + 1))),
                    None => Err(SlpError::ConstEval {
                        msg: format!("indexof: {v} does not occur in the list"),
                        span,
                    }),
                }
            }
        }
    }

    fn eval_num(&self, e: &ConstExpr, frame: &Frame) -> Result<Rat, SlpError> {
        match self.eval_cexpr(e, frame)? {
            CVal::Num(r) => Ok(r),
            v => Err(SlpError::ConstKind {
                msg: format!("expected a number, found {}", v.kind()),
                span: cexpr_span(e),
            }),
        }
    }

    fn eval_list(&self, e: &ConstExpr, frame: &Frame) -> Result<Vec<Rat>, SlpError> {
        match self.eval_cexpr(e, frame)? {
            CVal::List(l) => Ok(l),
            v => Err(SlpError::ConstKind {
                msg: format!("expected a list, found {}", v.kind()),
                span: cexpr_span(e),
            }),
        }
    }

    fn eval_int(&self, e: &ConstExpr, frame: &Frame) -> Result<i64, SlpError> {
        let r = self.eval_num(e, frame)?;
        match r.as_i64() {
            Some(i) => Ok(i),
            None => Err(SlpError::ConstKind {
                msg: format!("expected an integer, found {r}"),
                span: cexpr_span(e),
            }),
        }
    }

    fn eval_pred(&self, pred: &Pred, frame: &Frame) -> Result<bool, SlpError> {
        match pred {
            Pred::Cmp(op, lhs, rhs) => {
                let a = self.eval_num(lhs, frame)?;
                let b = self.eval_num(rhs, frame)?;
                Ok(match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                })
            }
            Pred::Even(e, _) | Pred::Odd(e, _) => {
                let i = self.eval_int(e, frame)?;
                let even = i % 2 == 0;
                Ok(match pred {
                    Pred::Even(..) => even,
                    _ => !even,
                })
            }
            Pred::In(item, list, _) => {
                let v = self.eval_num(item, frame)?;
                let list = self.eval_list(list, frame)?;
                Ok(list.contains(&v))
            }
        }
    }
}

fn cexpr_span(e: &ConstExpr) -> Span {
    match e {
        ConstExpr::Ref(_, s)
        | ConstExpr::Bin(_, _, _, s)
        | ConstExpr::Call(_, _, s)
        | ConstExpr::Index(_, _, s) => *s,
        ConstExpr::Neg(inner) => cexpr_span(inner),
        ConstExpr::Range(lo, _) => cexpr_span(lo),
        ConstExpr::List(items) => items.first().map(cexpr_span).unwrap_or_default(),
        ConstExpr::Lit(_) => Span::default(),
    }
}
