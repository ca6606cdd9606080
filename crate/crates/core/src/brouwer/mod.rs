//! Discrete planar fixed-point instances: Boolean netlists that assign one
//! of three colors to every point of a `2^n × 2^n` grid.
//!
//! An instance is a NOT/OR netlist with `2n` inputs — the bits of the grid
//! coordinates `(gx, gy)`, most significant first, `x` before `y` — and
//! three outputs, exactly one of which must fire on every grid point (the
//! *one-hot* discipline, checked by [`DiscreteBrouwerInstance::check_one_hot`]).
//! The fired output names the point's color: `1`, `2`, or `3`.
//!
//! The colors follow a boundary discipline (left edge `1`, bottom edge `2`,
//! right and top edges `3`, with that priority at corners) which
//! [`enforce_boundary`] imposes on an arbitrary netlist. Under it, a
//! parity/index argument guarantees a *trichromatic square*: a unit grid
//! square whose corners carry all three colors. [`find_trichromatic`]
//! locates them all by exhaustive sweep.
//!
//! [`thicken`] embeds an instance into a larger grid on which the boundary
//! colors form thick bands rather than single lines, at the cost of growing
//! `n`; trichromatic squares of the embedded instance are exactly the
//! original ones translated by the embedding offset.

mod boundary;
mod netlist;

pub use boundary::{enforce_boundary, thicken, BoundaryMode};
pub use netlist::{BRef, BoolCircuit, BoolGate, Builder};

use crate::par;

/// Errors from netlist parsing, instance validation, and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BrouwerError {
    /// A signal reference pointed out of range or forward.
    #[error("signal g{reference} is out of range ({msg})")]
    BadRef {
        /// The offending reference.
        reference: usize,
        /// Where it occurred.
        msg: String,
    },
    /// Wrong number of inputs at evaluation.
    #[error("netlist takes {expected} inputs, got {got}")]
    InputCount {
        /// Expected count.
        expected: usize,
        /// Supplied count.
        got: usize,
    },
    /// The netlist text was malformed.
    #[error("netlist text, line {line}: {msg}")]
    ParseNetlist {
        /// 1-based line number.
        line: usize,
        /// Description.
        msg: String,
    },
    /// The instance shape was wrong (input or output counts, grid size).
    #[error("malformed instance: {0}")]
    MalformedInstance(String),
    /// A grid point's three color outputs were not one-hot.
    #[error("point ({gx}, {gy}) has color outputs {outputs:?}, expected exactly one set")]
    NotOneHot {
        /// Grid x-coordinate.
        gx: u64,
        /// Grid y-coordinate.
        gy: u64,
        /// The three raw output bits.
        outputs: [bool; 3],
    },
    /// A grid coordinate exceeded `2^n - 1`.
    #[error("point ({gx}, {gy}) is outside the {side}×{side} grid")]
    PointOutOfRange {
        /// Grid x-coordinate.
        gx: u64,
        /// Grid y-coordinate.
        gy: u64,
        /// Grid side length.
        side: u64,
    },
}

/// One of the three grid colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    /// Color 1 (left boundary).
    C1,
    /// Color 2 (bottom boundary).
    C2,
    /// Color 3 (right and top boundaries).
    C3,
}

impl Color {
    /// All colors, in order.
    pub const ALL: [Color; 3] = [Color::C1, Color::C2, Color::C3];

    /// 0-based index (`C1 → 0`).
    pub fn index(self) -> usize {
        match self {
            Color::C1 => 0,
            Color::C2 => 1,
            Color::C3 => 2,
        }
    }

    /// 1-based label (`C1 → 1`).
    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl std::fmt::Display for Color {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A grid-coloring instance: an `n`-bit-per-axis grid and a netlist with
/// `2n` inputs and three one-hot color outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteBrouwerInstance {
    /// Grid exponent: the grid is `2^n × 2^n` points.
    pub n: u32,
    /// The coloring netlist (`2n` inputs, 3 outputs).
    pub circuit: BoolCircuit,
}

impl DiscreteBrouwerInstance {
    /// Wraps a netlist after checking its shape.
    pub fn new(n: u32, circuit: BoolCircuit) -> Result<Self, BrouwerError> {
        if !(1..=32).contains(&n) {
            return Err(BrouwerError::MalformedInstance(format!(
                "grid exponent n={n} outside 1..=32"
            )));
        }
        if circuit.num_inputs != 2 * n as usize {
            return Err(BrouwerError::MalformedInstance(format!(
                "netlist has {} inputs, expected 2n = {}",
                circuit.num_inputs,
                2 * n
            )));
        }
        if circuit.outputs.len() != 3 {
            return Err(BrouwerError::MalformedInstance(format!(
                "netlist has {} outputs, expected 3",
                circuit.outputs.len()
            )));
        }
        circuit.validate()?;
        Ok(DiscreteBrouwerInstance { n, circuit })
    }

    /// Grid side length `2^n`.
    pub fn side(&self) -> u64 {
        1u64 << self.n
    }

    /// Encodes a grid point as netlist inputs: `n` bits of `gx` (MSB
    /// first), then `n` bits of `gy`.
    pub fn input_bits(&self, gx: u64, gy: u64) -> Result<Vec<bool>, BrouwerError> {
        let side = self.side();
        if gx >= side || gy >= side {
            return Err(BrouwerError::PointOutOfRange { gx, gy, side });
        }
        let n = self.n;
        let mut bits = Vec::with_capacity(2 * n as usize);
        for i in (0..n).rev() {
            bits.push((gx >> i) & 1 == 1);
        }
        for i in (0..n).rev() {
            bits.push((gy >> i) & 1 == 1);
        }
        Ok(bits)
    }

    /// The color of a grid point; errors if the outputs are not one-hot.
    pub fn eval_color(&self, gx: u64, gy: u64) -> Result<Color, BrouwerError> {
        let out = self.circuit.eval(&self.input_bits(gx, gy)?)?;
        let outputs = [out[0], out[1], out[2]];
        match outputs {
            [true, false, false] => Ok(Color::C1),
            [false, true, false] => Ok(Color::C2),
            [false, false, true] => Ok(Color::C3),
            _ => Err(BrouwerError::NotOneHot { gx, gy, outputs }),
        }
    }

    /// Verifies the one-hot discipline on every grid point.
    pub fn check_one_hot(&self) -> Result<(), BrouwerError> {
        let side = self.side();
        let rows = par::map_range(side as usize, |y| {
            for x in 0..side {
                self.eval_color(x, y as u64)?;
            }
            Ok(())
        });
        rows.into_iter().collect()
    }
}

/// Colors the whole grid; `result[gy as usize][gx as usize]` is the color
/// of `(gx, gy)`. Rows are computed in parallel.
pub fn color_grid(inst: &DiscreteBrouwerInstance) -> Result<Vec<Vec<Color>>, BrouwerError> {
    let side = inst.side();
    let rows = par::map_range(side as usize, |y| {
        (0..side)
            .map(|x| inst.eval_color(x, y as u64))
            .collect::<Result<Vec<_>, _>>()
    });
    rows.into_iter().collect()
}

/// Finds every trichromatic unit square, identified by its lower-left
/// corner `(gx, gy)`, in ascending `(gx, gy)` order.
///
/// A square is trichromatic when its four corners carry all three colors.
pub fn find_trichromatic(inst: &DiscreteBrouwerInstance) -> Result<Vec<(u64, u64)>, BrouwerError> {
    let grid = color_grid(inst)?;
    let side = inst.side() as usize;
    let per_row = par::map_range(side - 1, |y| {
        let mut found = Vec::new();
        for x in 0..side - 1 {
            let mut seen = [false; 3];
            seen[grid[y][x].index()] = true;
            seen[grid[y][x + 1].index()] = true;
            seen[grid[y + 1][x].index()] = true;
            seen[grid[y + 1][x + 1].index()] = true;
            if seen == [true; 3] {
                found.push((x as u64, y as u64));
            }
        }
        found
    });
    let mut all: Vec<(u64, u64)> = per_row.into_iter().flatten().collect();
    all.sort_unstable();
    Ok(all)
}

/// Builds an instance from an explicit color table
/// (`table[gy as usize][gx as usize]`), as a disjunction of minterms per
/// color. One-hot by construction; useful for small hand-made grids.
pub fn from_color_table(
    n: u32,
    table: &[Vec<Color>],
) -> Result<DiscreteBrouwerInstance, BrouwerError> {
    let side = 1usize << n;
    if table.len() != side || table.iter().any(|row| row.len() != side) {
        return Err(BrouwerError::MalformedInstance(format!(
            "color table must be {side}×{side}"
        )));
    }
    let mut b = Builder::new(2 * n as usize);
    let mut minterms: [Vec<BRef>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (y, row) in table.iter().enumerate() {
        for (x, &color) in row.iter().enumerate() {
            // Conjunction of literals matching (x, y)'s bits.
            let mut literals = Vec::with_capacity(2 * n as usize);
            for i in 0..n {
                let bit_set = (x >> (n - 1 - i)) & 1 == 1;
                let r = b.input(i as usize);
                literals.push(if bit_set { r } else { b.not(r) });
            }
            for i in 0..n {
                let bit_set = (y >> (n - 1 - i)) & 1 == 1;
                let r = b.input((n + i) as usize);
                literals.push(if bit_set { r } else { b.not(r) });
            }
            let term = b.and_many(&literals);
            minterms[color.index()].push(term);
        }
    }
    let outs: Vec<BRef> = minterms.iter().map(|terms| b.or_many(terms)).collect();
    DiscreteBrouwerInstance::new(n, b.finish(outs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_2x2(colors: [[Color; 2]; 2]) -> DiscreteBrouwerInstance {
        let table: Vec<Vec<Color>> = colors.iter().map(|row| row.to_vec()).collect();
        from_color_table(1, &table).unwrap()
    }

    #[test]
    fn color_table_round_trips() {
        use Color::*;
        let inst = table_2x2([[C1, C2], [C3, C1]]);
        inst.check_one_hot().unwrap();
        assert_eq!(inst.eval_color(0, 0).unwrap(), C1);
        assert_eq!(inst.eval_color(1, 0).unwrap(), C2);
        assert_eq!(inst.eval_color(0, 1).unwrap(), C3);
        assert_eq!(inst.eval_color(1, 1).unwrap(), C1);
    }

    #[test]
    fn trichromatic_sweep_finds_exactly_the_mixed_squares() {
        use Color::*;
        // 4×4 grid with exactly one trichromatic square at (1, 1).
        let rows = vec![
            vec![C1, C1, C1, C1],
            vec![C1, C1, C2, C2],
            vec![C1, C3, C3, C2],
            vec![C1, C1, C1, C1],
        ];
        let inst = from_color_table(2, &rows).unwrap();
        // (1,1): corners C1, C2, C3, C3. (2,2): corners C3, C2, C1, C1.
        assert_eq!(find_trichromatic(&inst).unwrap(), vec![(1, 1), (2, 2)]);
        // An all-one-color grid has none.
        let flat = from_color_table(2, &vec![vec![C2; 4]; 4]).unwrap();
        assert_eq!(find_trichromatic(&flat).unwrap(), vec![]);
    }

    #[test]
    fn one_hot_violations_are_reported() {
        // Two outputs wired to the same signal: (x OR y, x OR y, NOT(x OR y))
        // fires doubly whenever x OR y is set.
        let mut b = Builder::new(2);
        let o = b.or(1, 2);
        let no = b.not(o);
        let circ = b.finish(vec![o, o, no]);
        let inst = DiscreteBrouwerInstance {
            n: 1,
            circuit: circ,
        };
        assert!(matches!(
            inst.eval_color(1, 0),
            Err(BrouwerError::NotOneHot {
                gx: 1,
                gy: 0,
                outputs: [true, true, false]
            })
        ));
        assert!(inst.check_one_hot().is_err());
        // (0, 0) decodes fine: outputs (0, 0, 1).
        assert_eq!(inst.eval_color(0, 0).unwrap(), Color::C3);
    }

    #[test]
    fn instance_shape_is_validated() {
        let mut b = Builder::new(3);
        let t = b.constant(true);
        let circ = b.finish(vec![t, t, t]);
        assert!(matches!(
            DiscreteBrouwerInstance::new(1, circ),
            Err(BrouwerError::MalformedInstance(_))
        ));
    }

    #[test]
    fn points_outside_the_grid_are_rejected() {
        use Color::*;
        let inst = table_2x2([[C1, C1], [C1, C1]]);
        assert!(matches!(
            inst.eval_color(2, 0),
            Err(BrouwerError::PointOutOfRange { side: 2, .. })
        ));
    }
}
