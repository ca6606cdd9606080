//! Boolean NOT/OR netlists: representation, evaluation, a text format, and
//! a builder with derived gates (and/xor), unsigned comparators against
//! constants, and a ripple-borrow constant subtractor.

use super::BrouwerError;

/// A 1-based signal reference.
///
/// References `1..=num_inputs` are the circuit inputs; reference
/// `num_inputs + t` is gate `t` (1-based position in the gate list).
pub type BRef = usize;

/// A single Boolean gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolGate {
    /// Logical negation.
    Not(BRef),
    /// Logical disjunction.
    Or(BRef, BRef),
}

impl BoolGate {
    fn refs(&self) -> [Option<BRef>; 2] {
        match *self {
            BoolGate::Not(a) => [Some(a), None],
            BoolGate::Or(a, b) => [Some(a), Some(b)],
        }
    }
}

/// A Boolean circuit over NOT and OR gates.
///
/// Gates are stored in topological order: gate `t` may only reference
/// inputs and gates `< t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolCircuit {
    /// Number of inputs.
    pub num_inputs: usize,
    /// Gates in topological order.
    pub gates: Vec<BoolGate>,
    /// Output references.
    pub outputs: Vec<BRef>,
}

impl BoolCircuit {
    /// Checks topological order and reference ranges.
    pub fn validate(&self) -> Result<(), BrouwerError> {
        let check = |r: BRef, limit: usize, what: String| -> Result<(), BrouwerError> {
            if r >= 1 && r <= limit {
                Ok(())
            } else {
                Err(BrouwerError::BadRef {
                    reference: r,
                    msg: what,
                })
            }
        };
        for (idx, gate) in self.gates.iter().enumerate() {
            let own = self.num_inputs + idx + 1;
            for r in gate.refs().into_iter().flatten() {
                check(r, own - 1, format!("used by gate g{own}"))?;
            }
        }
        let last = self.num_inputs + self.gates.len();
        for (k, &r) in self.outputs.iter().enumerate() {
            check(r, last, format!("used by output {k}"))?;
        }
        Ok(())
    }

    /// Evaluates every signal; index `r` of the result is signal `r`
    /// (index 0 is unused padding).
    pub fn eval_all(&self, inputs: &[bool]) -> Result<Vec<bool>, BrouwerError> {
        if inputs.len() != self.num_inputs {
            return Err(BrouwerError::InputCount {
                expected: self.num_inputs,
                got: inputs.len(),
            });
        }
        let mut values = vec![false; 1 + self.num_inputs + self.gates.len()];
        values[1..=self.num_inputs].copy_from_slice(inputs);
        for (idx, gate) in self.gates.iter().enumerate() {
            let own = self.num_inputs + idx + 1;
            let get = |r: BRef| -> Result<bool, BrouwerError> {
                if r >= 1 && r < own {
                    Ok(values[r])
                } else {
                    Err(BrouwerError::BadRef {
                        reference: r,
                        msg: format!("used by gate g{own}"),
                    })
                }
            };
            values[own] = match *gate {
                BoolGate::Not(a) => !get(a)?,
                BoolGate::Or(a, b) => get(a)? || get(b)?,
            };
        }
        Ok(values)
    }

    /// Evaluates the circuit, returning the output values.
    pub fn eval(&self, inputs: &[bool]) -> Result<Vec<bool>, BrouwerError> {
        let values = self.eval_all(inputs)?;
        self.outputs
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                values
                    .get(r)
                    .copied()
                    .filter(|_| r >= 1)
                    .ok_or_else(|| BrouwerError::BadRef {
                        reference: r,
                        msg: format!("used by output {k}"),
                    })
            })
            .collect()
    }

    /// Renders the netlist in its text format.
    ///
    /// ```text
    /// inputs 2
    /// g3 = NOT g1
    /// g4 = OR g3 g2
    /// outputs g4 g3 g4
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = format!("inputs {}\n", self.num_inputs);
        for (idx, gate) in self.gates.iter().enumerate() {
            let own = self.num_inputs + idx + 1;
            match *gate {
                BoolGate::Not(a) => s.push_str(&format!("g{own} = NOT g{a}\n")),
                BoolGate::Or(a, b) => s.push_str(&format!("g{own} = OR g{a} g{b}\n")),
            }
        }
        s.push_str("outputs");
        for &r in &self.outputs {
            s.push_str(&format!(" g{r}"));
        }
        s.push('\n');
        s
    }

    /// Parses the text format produced by [`BoolCircuit::to_text`].
    ///
    /// `#` starts a comment; blank lines are ignored; gate ids must be
    /// consecutive starting at `num_inputs + 1`.
    pub fn parse(text: &str) -> Result<Self, BrouwerError> {
        let err = |line: usize, msg: String| BrouwerError::ParseNetlist { line, msg };
        let sig = |tok: &str, line: usize| -> Result<BRef, BrouwerError> {
            tok.strip_prefix('g')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&r| r >= 1)
                .ok_or_else(|| err(line, format!("expected a signal like g7, got {tok:?}")))
        };
        let mut num_inputs: Option<usize> = None;
        let mut gates: Vec<BoolGate> = Vec::new();
        let mut outputs: Option<Vec<BRef>> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if outputs.is_some() {
                return Err(err(lineno, "content after the outputs line".into()));
            }
            match toks[0] {
                "inputs" => {
                    if num_inputs.is_some() {
                        return Err(err(lineno, "second inputs line".into()));
                    }
                    if toks.len() != 2 {
                        return Err(err(lineno, "expected: inputs <count>".into()));
                    }
                    let n: usize = toks[1]
                        .parse()
                        .map_err(|_| err(lineno, format!("bad input count {:?}", toks[1])))?;
                    num_inputs = Some(n);
                }
                "outputs" => {
                    let refs = toks[1..]
                        .iter()
                        .map(|t| sig(t, lineno))
                        .collect::<Result<Vec<_>, _>>()?;
                    if refs.is_empty() {
                        return Err(err(lineno, "outputs line lists no signals".into()));
                    }
                    outputs = Some(refs);
                }
                first => {
                    let ni = num_inputs
                        .ok_or_else(|| err(lineno, "gate before the inputs line".into()))?;
                    let own = sig(first, lineno)?;
                    let expected = ni + gates.len() + 1;
                    if own != expected {
                        return Err(err(
                            lineno,
                            format!("expected gate g{expected}, found g{own}"),
                        ));
                    }
                    if toks.get(1) != Some(&"=") {
                        return Err(err(lineno, "expected: g<id> = NOT|OR ...".into()));
                    }
                    let gate = match toks.get(2) {
                        Some(&"NOT") if toks.len() == 4 => BoolGate::Not(sig(toks[3], lineno)?),
                        Some(&"OR") if toks.len() == 5 => {
                            BoolGate::Or(sig(toks[3], lineno)?, sig(toks[4], lineno)?)
                        }
                        _ => {
                            return Err(err(
                                lineno,
                                "expected: g<id> = NOT g<a>  or  g<id> = OR g<a> g<b>".into(),
                            ))
                        }
                    };
                    gates.push(gate);
                }
            }
        }
        let circuit = BoolCircuit {
            num_inputs: num_inputs
                .ok_or_else(|| err(text.lines().count(), "missing inputs line".into()))?,
            gates,
            outputs: outputs
                .ok_or_else(|| err(text.lines().count(), "missing outputs line".into()))?,
        };
        circuit.validate()?;
        Ok(circuit)
    }
}

/// Incremental netlist construction with derived gates.
///
/// All helpers append gates to the growing netlist and return the
/// reference of the result signal. Bit vectors are most-significant bit
/// first unless stated otherwise.
#[derive(Debug, Clone)]
pub struct Builder {
    num_inputs: usize,
    gates: Vec<BoolGate>,
}

impl Builder {
    /// Starts a netlist with the given number of inputs (at least one).
    pub fn new(num_inputs: usize) -> Self {
        assert!(num_inputs >= 1, "netlists need at least one input");
        Builder {
            num_inputs,
            gates: Vec::new(),
        }
    }

    /// The reference of input `i` (0-based index).
    pub fn input(&self, i: usize) -> BRef {
        assert!(i < self.num_inputs, "input {i} of {}", self.num_inputs);
        i + 1
    }

    fn push(&mut self, gate: BoolGate) -> BRef {
        self.gates.push(gate);
        self.num_inputs + self.gates.len()
    }

    /// `NOT a`.
    pub fn not(&mut self, a: BRef) -> BRef {
        self.push(BoolGate::Not(a))
    }

    /// `a OR b`.
    pub fn or(&mut self, a: BRef, b: BRef) -> BRef {
        self.push(BoolGate::Or(a, b))
    }

    /// `a AND b`, via De Morgan.
    pub fn and(&mut self, a: BRef, b: BRef) -> BRef {
        let na = self.not(a);
        let nb = self.not(b);
        let o = self.or(na, nb);
        self.not(o)
    }

    /// `a XOR b`.
    pub fn xor(&mut self, a: BRef, b: BRef) -> BRef {
        let both = self.and(a, b);
        let either = self.or(a, b);
        let nboth = self.not(both);
        self.and(either, nboth)
    }

    /// Disjunction of any number of signals (false when empty).
    pub fn or_many(&mut self, refs: &[BRef]) -> BRef {
        match refs.split_first() {
            None => self.constant(false),
            Some((&first, rest)) => {
                let mut acc = first;
                for &r in rest {
                    acc = self.or(acc, r);
                }
                acc
            }
        }
    }

    /// Conjunction of any number of signals (true when empty).
    pub fn and_many(&mut self, refs: &[BRef]) -> BRef {
        let negated: Vec<BRef> = refs.iter().map(|&r| self.not(r)).collect();
        let any = self.or_many(&negated);
        self.not(any)
    }

    /// A constant signal, built from input 0.
    pub fn constant(&mut self, value: bool) -> BRef {
        let a = self.input(0);
        let na = self.not(a);
        let t = self.or(a, na);
        if value {
            t
        } else {
            self.not(t)
        }
    }

    /// `NOT (any bit set)` — true iff the value is zero.
    pub fn is_zero(&mut self, bits: &[BRef]) -> BRef {
        let any = self.or_many(bits);
        self.not(any)
    }

    /// True iff the unsigned value of `bits` (MSB first) is `≥ t`.
    pub fn ge_const(&mut self, bits: &[BRef], t: i128) -> BRef {
        let w = bits.len() as u32;
        if t <= 0 {
            return self.constant(true);
        }
        if t >= 1i128 << w {
            return self.constant(false);
        }
        // Scan from the most significant bit, tracking prefix equality
        // with t. Strictly-greater happens at the first position where t
        // has a 0 and the value a 1; equality survives to the end.
        let mut terms: Vec<BRef> = Vec::new();
        let mut prefix_eq: Option<BRef> = None; // None = vacuously true
        for (i, &bit) in bits.iter().enumerate() {
            let pos = w - 1 - i as u32;
            let tb = (t >> pos) & 1 == 1;
            if !tb {
                let term = match prefix_eq {
                    None => bit,
                    Some(eq) => self.and(eq, bit),
                };
                terms.push(term);
            }
            let eq_here = if tb { bit } else { self.not(bit) };
            prefix_eq = Some(match prefix_eq {
                None => eq_here,
                Some(eq) => self.and(eq, eq_here),
            });
        }
        terms.push(prefix_eq.expect("w >= 1 because 0 < t < 2^w"));
        self.or_many(&terms)
    }

    /// True iff the unsigned value of `bits` (MSB first) is `≤ t`.
    pub fn le_const(&mut self, bits: &[BRef], t: i128) -> BRef {
        if t < 0 {
            return self.constant(false);
        }
        let w = bits.len() as u32;
        if t >= (1i128 << w) - 1 {
            return self.constant(true);
        }
        let gt = self.ge_const(bits, t + 1);
        self.not(gt)
    }

    /// Subtracts the constant `c` from the unsigned value of `bits` (MSB
    /// first), returning the difference bits (MSB first, modulo `2^w`) and
    /// the final borrow (true iff the value is `< c`).
    pub fn sub_const(&mut self, bits: &[BRef], c: u64) -> (Vec<BRef>, BRef) {
        let w = bits.len();
        assert!(
            w < 64 && c < 1u64 << w,
            "constant {c} needs more than {w} bits"
        );
        let mut diff_lsb: Vec<BRef> = Vec::with_capacity(w);
        let mut borrow: Option<BRef> = None; // None = no borrow yet
        for i in 0..w {
            let x = bits[w - 1 - i];
            let yb = (c >> i) & 1 == 1;
            let (d, b) = match (yb, borrow) {
                (false, None) => (x, None),
                (false, Some(b)) => {
                    let d = self.xor(x, b);
                    let nx = self.not(x);
                    (d, Some(self.and(nx, b)))
                }
                (true, None) => {
                    let nx = self.not(x);
                    (nx, Some(nx))
                }
                (true, Some(b)) => {
                    let x_xor_b = self.xor(x, b);
                    let d = self.not(x_xor_b);
                    let nx = self.not(x);
                    (d, Some(self.or(nx, b)))
                }
            };
            diff_lsb.push(d);
            borrow = b;
        }
        diff_lsb.reverse();
        let borrow = match borrow {
            None => self.constant(false),
            Some(b) => b,
        };
        (diff_lsb, borrow)
    }

    /// Splices another netlist into this one, mapping its input `i` to
    /// `input_map[i]`; returns the references its outputs now have.
    pub fn append(&mut self, other: &BoolCircuit, input_map: &[BRef]) -> Vec<BRef> {
        assert_eq!(
            input_map.len(),
            other.num_inputs,
            "input map must cover every input"
        );
        let base = self.num_inputs + self.gates.len();
        let remap = |r: BRef| -> BRef {
            if r <= other.num_inputs {
                input_map[r - 1]
            } else {
                base + (r - other.num_inputs)
            }
        };
        for gate in &other.gates {
            let mapped = match *gate {
                BoolGate::Not(a) => BoolGate::Not(remap(a)),
                BoolGate::Or(a, b) => BoolGate::Or(remap(a), remap(b)),
            };
            self.gates.push(mapped);
        }
        other.outputs.iter().map(|&r| remap(r)).collect()
    }

    /// Number of gates appended so far.
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Finishes the netlist with the given outputs.
    pub fn finish(self, outputs: Vec<BRef>) -> BoolCircuit {
        BoolCircuit {
            num_inputs: self.num_inputs,
            gates: self.gates,
            outputs,
        }
    }
}
