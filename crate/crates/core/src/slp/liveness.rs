//! Interval liveness for flat programs.
//!
//! The analysis assigns every variable one contiguous live interval of line
//! numbers, where lines are numbered `1..=m`, line `0` is the virtual
//! definition point of the inputs, and line `m + 1` is the virtual read of
//! the declared outputs:
//!
//! * a variable's interval **starts** at its first definition (line `0` for
//!   inputs, otherwise the first line assigning it);
//! * it **ends** at the latest event involving the variable — its last use
//!   as an operand, its last (re)definition, or the virtual output read —
//!   whichever is latest.
//!
//! Definitions count as events, so a variable that is assigned and never
//! read is live exactly across its own assignment lines. There is no
//! per-path kill analysis: between two events the variable stays live even
//! if the earlier value is provably dead. These conventions make every
//! line's destination live at its own line and every operand live at the
//! preceding line, which is exactly what the slot-per-live-variable circuit
//! compiler needs.

use super::flat::{FlatSlp, VarId};

/// Sentinel for "never defined".
const UNDEF: usize = usize::MAX;

/// Result of the liveness analysis of one flat program.
#[derive(Debug, Clone)]
pub struct Liveness {
    /// Per variable: the line of its first definition (`0` for inputs,
    /// `usize::MAX` for variables that are never defined).
    pub start: Vec<usize>,
    /// Per variable: the last event involving it (see module docs).
    pub end: Vec<usize>,
    /// `live[i]` for `i in 0..=m`: the variables live at line `i`, in
    /// ascending `VarId` order.
    pub live: Vec<Vec<VarId>>,
    /// Peak size of `live[i]` over assignment lines `i in 1..=m`
    /// (zero when the program has no lines).
    pub max_live: usize,
}

pub(super) fn analyze(slp: &FlatSlp) -> Liveness {
    let n = slp.names_len();
    let m = slp.lines.len();
    let mut start = vec![UNDEF; n];
    let mut last_event = vec![0usize; n];
    for &id in &slp.inputs {
        start[id as usize] = 0;
    }
    for (idx, line) in slp.lines.iter().enumerate() {
        let lineno = idx + 1;
        let d = line.dst as usize;
        if start[d] == UNDEF {
            start[d] = lineno;
        }
        last_event[d] = lineno;
        for v in line.op.var_args() {
            last_event[v as usize] = lineno;
        }
    }
    for &id in &slp.outputs {
        last_event[id as usize] = m + 1;
    }

    // Sweep lines, maintaining the live set. Variables enter at their start
    // line and leave after their end line. VarId order is preserved because
    // insertion keeps the vector sorted.
    let mut live: Vec<Vec<VarId>> = Vec::with_capacity(m + 1);
    let mut current: Vec<VarId> = Vec::new();
    let mut max_live = 0usize;
    for i in 0..=m {
        current.retain(|&v| last_event[v as usize].max(start[v as usize]) >= i);
        if i == 0 {
            current.extend(slp.inputs.iter().copied());
            current.sort_unstable();
        } else {
            let d = slp.lines[i - 1].dst;
            if start[d as usize] == i {
                let pos = current.partition_point(|&v| v < d);
                current.insert(pos, d);
            }
            max_live = max_live.max(current.len());
        }
        live.push(current.clone());
    }

    let end = last_event
        .iter()
        .zip(&start)
        .map(|(&e, &s)| if s == UNDEF { 0 } else { e.max(s) })
        .collect();
    Liveness {
        start,
        end,
        live,
        max_live,
    }
}
