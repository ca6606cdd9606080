//! A DSL for straight-line programs over `[0, 1]`-valued variables.
//!
//! # The gate language
//!
//! Programs manipulate rational variables confined to `[0, 1]` with exactly
//! three operations (all results are clipped back into the interval):
//!
//! * `x <- a +b b` — saturating addition: `min(a + b, 1)`;
//! * `x <- a -b b` — truncated subtraction: `max(a - b, 0)`;
//! * `x <- a *b c` — scaling: `min(a * c, 1)` where `c` is a **constant**
//!   expression, `c >= 0` (it may exceed `1`);
//! * `x <- c` — a constant assignment, `c` in `[0, 1]`.
//!
//! Operands of `+b` / `-b` are variables or constant literals in `[0, 1]`.
//! There is no plain copy statement; the idiom is `x <- y *b 1`.
//!
//! # Structuring constructs
//!
//! All control flow is resolved at expansion time; the result of expansion
//! is always a flat list of gate assignments ([`FlatSlp`]).
//!
//! * `for i in lo..hi { ... }` — an **inclusive** range of integers; the
//!   body is unrolled once per value (zero times when `lo > hi`).
//! * `if <pred> { ... } else { ... }` — compile-time conditional. Predicates
//!   compare constant expressions (`== != < <= > >=`), test parity
//!   (`even(e)` / `odd(e)`), or test list membership (`e in $S`).
//! * `macro Name(x, y, $c, $s) { ... }` — a macro with variable parameters
//!   (aliases for caller variables) and `$`-prefixed constant parameters
//!   (numbers or integer lists). Any other variable a macro body assigns is
//!   a fresh local, renamed per invocation so distinct calls never collide.
//!   Recursion is rejected.
//!
//! Constant expressions support integer, decimal, and quotient literals,
//! the arithmetic operators `+ - * / ^` (with `^` binding tightest), list
//! literals `[a, b, c]`, inclusive integer ranges `[lo..hi]`, 1-based list
//! indexing `$S[i]`, and the functions `len`, `max`, `abs`, and
//! `indexof($S, v)` (1-based position of `v` in `$S`).
//!
//! `#` starts a comment; statements are separated by newlines or `;`.
//!
//! # Example
//!
//! ```
//! use fpreduce_core::slp::parse_program;
//! use fpreduce_core::Rat;
//!
//! let program = parse_program(
//!     "inputs a
//!      outputs x
//!      macro Bump(v, $step) { v <- v +b $step }
//!      x <- a *b 1
//!      for i in 1..3 { Bump(x, 1/10) }",
//! )
//! .unwrap();
//! let flat = program.expand().unwrap();
//! let out = flat.interpret(&[Rat::new(1, 2)]).unwrap();
//! assert_eq!(out, vec![Rat::new(4, 5)]);
//! ```

mod expand;
mod flat;
mod liveness;
mod parse;

pub use flat::{FlatArg, FlatLine, FlatOp, FlatSlp, VarId};
pub use liveness::Liveness;
pub use parse::parse_program;

use crate::rational::Rat;

/// A source position (1-based line and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    /// 1-based line number.
    pub line: u32,
    /// 1-based column number.
    pub col: u32,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, col {}", self.line, self.col)
    }
}

/// Binary operators usable in constant expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CBinOp {
    /// Addition.
    Add,
    /// Subtraction.
    Sub,
    /// Multiplication.
    Mul,
    /// Exact division.
    Div,
    /// Power with an integer exponent.
    Pow,
}

/// Built-in functions usable in constant expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CFn {
    /// `len($S)` — number of elements in a list.
    Len,
    /// `max($S)` — largest element of a non-empty list.
    Max,
    /// `abs(e)` — absolute value.
    Abs,
    /// `indexof($S, v)` — 1-based position of `v` in `$S`.
    IndexOf,
}

/// A constant expression, evaluated during expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstExpr {
    /// A literal rational.
    Lit(Rat),
    /// A reference to a loop variable (`i`) or constant parameter (`$c`).
    Ref(String, Span),
    /// A list literal `[a, b, c]`.
    List(Vec<ConstExpr>),
    /// An inclusive integer range `[lo..hi]` (empty when `lo > hi`).
    Range(Box<ConstExpr>, Box<ConstExpr>),
    /// Unary negation.
    Neg(Box<ConstExpr>),
    /// A binary operation.
    Bin(CBinOp, Box<ConstExpr>, Box<ConstExpr>, Span),
    /// A function call.
    Call(CFn, Vec<ConstExpr>, Span),
    /// 1-based list indexing `$S[i]`.
    Index(Box<ConstExpr>, Box<ConstExpr>, Span),
}

/// Comparison operators usable in predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    /// `==`
    Eq,
    /// `!=`
    Ne,
    /// `<`
    Lt,
    /// `<=`
    Le,
    /// `>`
    Gt,
    /// `>=`
    Ge,
}

/// A compile-time predicate.
#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    /// Comparison of two constant expressions.
    Cmp(CmpOp, ConstExpr, ConstExpr),
    /// True when the expression is an even integer.
    Even(ConstExpr, Span),
    /// True when the expression is an odd integer.
    Odd(ConstExpr, Span),
    /// True when the value occurs in the list.
    In(ConstExpr, ConstExpr, Span),
}

/// An operand of a `+b` / `-b` / `*b` gate.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    /// A named variable (or, if the name is bound to a constant, a literal).
    Var(String, Span),
    /// A constant literal operand.
    Lit(ConstExpr),
}

/// The right-hand side of an assignment statement.
#[derive(Debug, Clone, PartialEq)]
pub enum GateRhs {
    /// `x <- c`
    Const(ConstExpr),
    /// `x <- a +b b`
    AddB(Operand, Operand),
    /// `x <- a -b b`
    SubB(Operand, Operand),
    /// `x <- a *b c`
    MulB(Operand, ConstExpr),
}

/// An argument at a macro invocation site.
#[derive(Debug, Clone, PartialEq)]
pub enum InvokeArg {
    /// A bare name (a variable, loop variable, or constant parameter).
    Name(String, Span),
    /// A constant expression.
    Expr(ConstExpr),
}

/// A statement, with the source position it started at.
#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    /// What the statement does.
    pub kind: StmtKind,
    /// Where it begins in the source.
    pub span: Span,
}

/// The kinds of statement.
#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// A gate assignment.
    Assign {
        /// Variable assigned.
        dst: String,
        /// Right-hand side.
        rhs: GateRhs,
    },
    /// A macro invocation.
    Invoke {
        /// Macro name.
        name: String,
        /// Arguments, positionally matched against the definition.
        args: Vec<InvokeArg>,
    },
    /// An inclusive counting loop, unrolled at expansion time.
    For {
        /// Loop variable.
        var: String,
        /// Lower bound (inclusive).
        lo: ConstExpr,
        /// Upper bound (inclusive).
        hi: ConstExpr,
        /// Body.
        body: Vec<Stmt>,
    },
    /// A compile-time conditional.
    If {
        /// Predicate, evaluated during expansion.
        pred: Pred,
        /// Statements expanded when the predicate holds.
        then_body: Vec<Stmt>,
        /// Statements expanded otherwise.
        else_body: Vec<Stmt>,
    },
}

/// A macro parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MacroParam {
    /// A variable parameter, aliasing a caller variable.
    Var(String),
    /// A `$`-prefixed constant parameter (stored with the sigil).
    Const(String),
}

/// A macro definition.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroDef {
    /// Macro name.
    pub name: String,
    /// Parameter list.
    pub params: Vec<MacroParam>,
    /// Body statements.
    pub body: Vec<Stmt>,
    /// Position of the definition.
    pub span: Span,
}

/// A parsed program: declarations, macro definitions, and top-level body.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    /// Declared input variables, in order.
    pub inputs: Vec<String>,
    /// Declared output variables, in order.
    pub outputs: Vec<String>,
    /// Macro definitions.
    pub macros: Vec<MacroDef>,
    /// Top-level statements.
    pub body: Vec<Stmt>,
}

impl Program {
    /// Expands macros, loops, and conditionals into a flat gate list.
    ///
    /// Expansion evaluates every constant expression, renames macro locals
    /// hygienically, checks that every variable is defined before use, and
    /// range-checks every constant that enters a gate.
    pub fn expand(&self) -> Result<FlatSlp, SlpError> {
        expand::expand(self)
    }
}

/// Errors produced while parsing, expanding, or interpreting programs.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SlpError {
    /// Syntax error.
    #[error("{span}: {msg}")]
    Parse {
        /// Where the error was detected.
        span: Span,
        /// Description.
        msg: String,
    },
    /// A `inputs`/`outputs` declaration appeared twice, or listed a name twice.
    #[error("{span}: duplicate declaration of {name:?}")]
    DuplicateDecl {
        /// Offending name.
        name: String,
        /// Position.
        span: Span,
    },
    /// Two macros share a name.
    #[error("{span}: macro {name:?} is defined twice")]
    DuplicateMacro {
        /// Offending name.
        name: String,
        /// Position.
        span: Span,
    },
    /// A statement invoked an unknown macro.
    #[error("{span}: unknown macro {name:?}")]
    UnknownMacro {
        /// Offending name.
        name: String,
        /// Position.
        span: Span,
    },
    /// Wrong number of arguments at an invocation.
    #[error("{span}: macro {name:?} expects {expected} arguments, got {got}")]
    ArityMismatch {
        /// Macro name.
        name: String,
        /// Declared parameter count.
        expected: usize,
        /// Supplied argument count.
        got: usize,
        /// Position.
        span: Span,
    },
    /// An argument's kind did not match the parameter's kind.
    #[error("{span}: argument {index} of {name:?} {msg}")]
    ArgKind {
        /// Macro name.
        name: String,
        /// 1-based argument index.
        index: usize,
        /// Description of the mismatch.
        msg: String,
        /// Position.
        span: Span,
    },
    /// A variable was read before any assignment.
    #[error("{span}: variable {name:?} is used before it is defined")]
    UseBeforeDef {
        /// Offending name.
        name: String,
        /// Position.
        span: Span,
    },
    /// A name was referenced in a constant expression but is not a constant.
    #[error("{span}: {name:?} is not a constant in this scope")]
    UnknownConst {
        /// Offending name.
        name: String,
        /// Position.
        span: Span,
    },
    /// A constant expression produced the wrong kind of value.
    #[error("{span}: {msg}")]
    ConstKind {
        /// Description.
        msg: String,
        /// Position.
        span: Span,
    },
    /// A constant entering a gate was out of range.
    #[error("{span}: constant {value} is out of range: {msg}")]
    ConstOutOfRange {
        /// The offending value.
        value: Rat,
        /// Which range was violated.
        msg: String,
        /// Position.
        span: Span,
    },
    /// Evaluation failure inside a constant expression.
    #[error("{span}: {msg}")]
    ConstEval {
        /// Description.
        msg: String,
        /// Position.
        span: Span,
    },
    /// A macro invoked itself, directly or indirectly.
    #[error("{span}: recursive invocation of macro {name:?}")]
    Recursion {
        /// Macro name.
        name: String,
        /// Position.
        span: Span,
    },
    /// Expansion exceeded the safety limit on emitted lines.
    #[error("expansion exceeded {limit} lines; the program is too large")]
    TooLarge {
        /// The line limit.
        limit: usize,
    },
    /// An output was declared but never defined.
    #[error("output variable {name:?} is never defined")]
    UndefinedOutput {
        /// Offending name.
        name: String,
    },
    /// Interpretation was given the wrong number of inputs.
    #[error("program takes {expected} inputs, got {got}")]
    InputCount {
        /// Declared input count.
        expected: usize,
        /// Supplied input count.
        got: usize,
    },
    /// An input value was outside `[0, 1]`.
    #[error("input {index} is {value}, outside [0, 1]")]
    InputRange {
        /// 0-based input index.
        index: usize,
        /// Offending value.
        value: Rat,
    },
    /// A flat program referenced a variable that has no value yet.
    #[error("flat line {line} reads variable {name:?} before any assignment")]
    FlatUseBeforeDef {
        /// 1-based line number.
        line: usize,
        /// Variable name.
        name: String,
    },
    /// A flat program failed validation.
    #[error("flat line {line}: {msg}")]
    FlatInvalid {
        /// 1-based line number (0 for program-level problems).
        line: usize,
        /// Description.
        msg: String,
    },
}
