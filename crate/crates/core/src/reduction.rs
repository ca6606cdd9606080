//! From grid colorings to displacement circuits on the unit square.
//!
//! [`build_reduction`] turns a [`DiscreteBrouwerInstance`] into a program
//! (and compiled circuit) computing a map `F : [0,1]² → [0,1]²` of the form
//! `F(p) = p + (1/k) Σᵢ d(cᵢ)`, where sample `i` looks up the instance's
//! color near `p + i·δ` and `d(c)` is a fixed displacement vector per
//! color. Approximate fixed points of `F` can then only sit near grid
//! squares whose neighborhood shows all three colors.
//!
//! The program works on *packed* values: a single `[0,1]` variable `x`
//! stores a bit string `Σⱼ bⱼ 2^(−j)`. A macro library (see
//! [`MACRO_LIBRARY`]) manipulates such strings with the three clipped
//! gate operations only:
//!
//! * `FirstBit` peels off the leading bit of a packed value by comparing
//!   against a threshold `$T` and amplifying the difference by `$G`;
//! * `Clear`/`Pack`/`Unpack` move bits between packed strings;
//! * `Or`/`Not` compute Boolean gates on chosen bit positions;
//! * `AddVector` adds `±2·|d|/k` times a stored bit into an accumulator.
//!
//! Two threshold regimes drive `FirstBit`:
//!
//! * **Exact walks** over packed `K`-bit dyadics use `T = 1/2 − 2^(−K−1)`,
//!   `G = 2^(K+1)`; every extracted bit is then exactly `0` or `1`.
//! * **Coordinate decoding** uses `T = 1/2`, `G = L` with
//!   `L = (k+2)·2^(n+1)`. A coordinate `c` is *well positioned* when it
//!   lies at least `1/L` above the grid line below it; its `n` leading
//!   bits then decode exactly, with the margin doubling at each level.
//!   Poorly positioned coordinates may decode to garbage, but
//!   [`count_poorly_positioned`] shows at most two of the `k` samples can
//!   be affected, and `AddVector` bounds the damage by `|d|/k` each.
//!
//! Because the program reuses a fixed set of eight working variables
//! (`in_x`, `in_y`, `out_x`, `out_y`, the packed state, one gate
//! accumulator, and the walk scratch pair), its peak liveness — and hence
//! the compiled circuit's width — is eight, independent of the instance.

use serde::{Deserialize, Serialize};

use crate::brouwer::{BoolCircuit, BoolGate, BrouwerError, DiscreteBrouwerInstance};
use crate::circuit::{compile, CircuitError, SyncCircuit};
use crate::par;
use crate::rational::Rat;
use crate::slp::{parse_program, FlatSlp, SlpError};

/// Errors from parameter validation and reduction building.
#[derive(Debug, thiserror::Error)]
pub enum ReductionError {
    /// A parameter was out of range or inconsistent.
    #[error("bad parameters: {0}")]
    BadParams(String),
    /// The instance and parameters disagree.
    #[error("instance/parameter mismatch: {0}")]
    Mismatch(String),
    /// The generated program failed to parse or expand (an internal bug).
    #[error("generated program is malformed: {0}")]
    Slp(#[from] SlpError),
    /// The generated program failed to compile (an internal bug).
    #[error("generated circuit is malformed: {0}")]
    Circuit(#[from] CircuitError),
    /// The instance netlist was malformed.
    #[error(transparent)]
    Brouwer(#[from] BrouwerError),
}

/// Parameters of the displacement construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionParams {
    /// Grid exponent of the instance (side `2^n`).
    pub n: u32,
    /// Number of color samples averaged per point.
    pub k: u32,
    /// Band width of the instance's boundary discipline; the displacement
    /// budget must stay inside it.
    pub eps: Rat,
    /// Magnitude of the per-color displacement vectors.
    pub eps_prime: Rat,
    /// Rational stand-in for `√2` used to tilt the color-3 displacement.
    pub r: Rat,
}

/// The interval `√2` is pinned to: `|r − √2| ≤ 1/100000`.
pub fn sqrt2_tolerance() -> Rat {
    Rat::new(1, 100_000)
}

impl ReductionParams {
    /// Fills in `r` (a `√2` convergent within [`sqrt2_tolerance`]) and
    /// `eps_prime` (`(r−1)·ε·9/10`, comfortably inside every geometric
    /// margin) from the three free parameters.
    pub fn with_defaults(n: u32, k: u32, eps: Rat) -> Result<Self, ReductionError> {
        let r = sqrt2_approx(&sqrt2_tolerance());
        let eps_prime = &(&(&r - &Rat::one()) * &eps) * &Rat::new(9, 10);
        let params = ReductionParams {
            n,
            k,
            eps,
            eps_prime,
            r,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks every parameter range and inequality.
    pub fn validate(&self) -> Result<(), ReductionError> {
        let bad = |msg: String| Err(ReductionError::BadParams(msg));
        if self.n < 1 || self.n > 32 {
            return bad(format!("grid exponent n={} outside 1..=32", self.n));
        }
        if self.k < 1 {
            return bad("sample count k must be at least 1".into());
        }
        if self.eps.is_negative() || self.eps.is_zero() || self.eps >= Rat::new(1, 2) {
            return bad(format!("band width eps={} outside (0, 1/2)", self.eps));
        }
        if self.r <= Rat::one() {
            return bad(format!("r={} must exceed 1", self.r));
        }
        let tol = sqrt2_tolerance();
        let two = Rat::int(2);
        let lo = &self.r - &tol;
        let hi = &self.r + &tol;
        let below = lo.is_negative() || &lo * &lo <= two;
        let above = &hi * &hi >= two;
        if !(below && above) {
            return bad(format!("r={} is farther than {tol} from √2", self.r));
        }
        if self.eps_prime.is_negative() || self.eps_prime.is_zero() {
            return bad(format!(
                "displacement eps'={} must be positive",
                self.eps_prime
            ));
        }
        // The smallest two-color margin is eps'/(1+r); keeping the whole
        // displacement budget under eps/(1+r) keeps it inside the bands.
        let budget = &self.eps_prime * &(&Rat::one() + &self.r);
        if budget >= self.eps {
            return bad(format!(
                "displacement eps'={} too large: eps'·(1+r) must stay below eps={}",
                self.eps_prime, self.eps
            ));
        }
        Ok(())
    }

    /// The well-positioning pitch `L = (k+2)·2^(n+1)`.
    pub fn l(&self) -> Rat {
        &Rat::int(self.k as i64 + 2) * &Rat::pow2(self.n as i32 + 1)
    }

    /// The sampling shift `δ = 1/((k+1)·2^(n+1))` applied before each
    /// sample.
    pub fn delta(&self) -> Rat {
        Rat::one() / (&Rat::int(self.k as i64 + 1) * &Rat::pow2(self.n as i32 + 1))
    }

    /// The three displacement vectors, indexed by color:
    /// `d₁ = (0, ε′)`, `d₂ = (ε′, (1−r)·ε′)`, `d₃ = (−ε′, (1−r)·ε′)`.
    pub fn displacement_vectors(&self) -> [(Rat, Rat); 3] {
        let e = &self.eps_prime;
        let tilt = &(&Rat::one() - &self.r) * e;
        [
            (Rat::zero(), e.clone()),
            (e.clone(), tilt.clone()),
            (-e.clone(), tilt),
        ]
    }
}

/// The last convergent `p/q` of `√2` (from `1/1` via
/// `(p, q) ↦ (p + 2q, p + q)`) that is NOT yet within `prec`, advanced
/// until one is: returns the first convergent with `|p/q − √2| ≤ prec`.
pub fn sqrt2_approx(prec: &Rat) -> Rat {
    assert!(
        !prec.is_negative() && !prec.is_zero(),
        "precision must be positive"
    );
    let two = Rat::int(2);
    let (mut p, mut q) = (1i64, 1i64);
    loop {
        let x = Rat::new(p, q);
        let lo = &x - prec;
        let hi = &x + prec;
        let below = lo.is_negative() || &lo * &lo <= two;
        let above = &hi * &hi >= two;
        if below && above {
            return x;
        }
        let (np, nq) = (p + 2 * q, p + q);
        (p, q) = (np, nq);
    }
}

/// Appends one copy gate per output so the three color outputs become the
/// netlist's last three gates, in output order. Evaluation is unchanged.
pub fn normalize_colors(circ: &BoolCircuit) -> BoolCircuit {
    let mut gates = circ.gates.clone();
    let mut outputs = Vec::with_capacity(circ.outputs.len());
    for &r in &circ.outputs {
        gates.push(BoolGate::Or(r, r));
        outputs.push(circ.num_inputs + gates.len());
    }
    BoolCircuit {
        num_inputs: circ.num_inputs,
        gates,
        outputs,
    }
}

/// The packed-bit-string macro library, as program-DSL source text.
///
/// All macros take the `FirstBit` threshold pair `($T, $G)` from the
/// caller; see the module docs for the two regimes. Bit positions are
/// 1-based: position `j` carries weight `2^(−j)`.
pub const MACRO_LIBRARY: &str = r#"
# Peels the leading bit of the packed value x into b (shifting x left).
macro FirstBit(x, b, $T, $G) {
  b <- $T
  b <- x -b b
  b <- b *b $G
  b <- b *b 1/2
  x <- x -b b
  x <- x *b 2
  b <- b *b 2
}

# Zeroes the bits of x at the positions listed in $I.
macro Clear(x, $I, $T, $G) {
  xw <- x *b 1
  for i in 1 .. max($I) {
    t <- 0
    FirstBit(xw, t, $T, $G)
    if i in $I {
      t <- t *b 1/2^i
      x <- x -b t
    }
  }
}

# Writes the first len($S) bits of y into x at positions $S (clearing them
# first). The walk over y uses ($Ty, $Gy); the clearing walk over x uses
# ($Tx, $Gx).
macro Pack(x, y, $S, $Ty, $Gy, $Tx, $Gx) {
  Clear(x, $S, $Tx, $Gx)
  yw <- y *b 1
  for i in 1 .. len($S) {
    t <- 0
    FirstBit(yw, t, $Ty, $Gy)
    t <- t *b 1/2^($S[i])
    x <- x +b t
  }
}

# Adds the bits of x at positions $S into y, at positions 1..len($S).
macro Unpack(x, y, $S, $T, $G) {
  xw <- x *b 1
  for i in 1 .. max($S) {
    t <- 0
    FirstBit(xw, t, $T, $G)
    if i in $S {
      t <- t *b 1/2^(indexof($S, i))
      y <- y +b t
    }
  }
}

# out <- the bit of x at position $i, as a full-scale 0/1 value.
macro ExtractBit(x, $i, out, $T, $G) {
  out <- 0
  Unpack(x, out, [$i], $T, $G)
  out <- out *b 2
}

# out <- the bits of x at positions $S, repacked at positions 1..len($S).
macro ExtractBits(x, $S, out, $T, $G) {
  out <- 0
  Unpack(x, out, $S, $T, $G)
}

# Bit $i3 of x <- bit $i1 OR bit $i2.
macro Or(x, $i1, $i2, $i3, $T, $G) {
  a <- 0
  Unpack(x, a, [$i1], $T, $G)
  Unpack(x, a, [$i2], $T, $G)
  a <- a *b 2
  Pack(x, a, [$i3], $T, $G, $T, $G)
}

# Bit $i2 of x <- NOT bit $i1.
macro Not(x, $i1, $i2, $T, $G) {
  a <- 0
  Unpack(x, a, [$i1], $T, $G)
  a <- a *b 2
  a <- 1 -b a
  Pack(x, a, [$i2], $T, $G, $T, $G)
}

# Adds bit $i of x, scaled to ($dx, $dy)/$k, into (outx, outy).
macro AddVector(x, $i, outx, outy, $k, $dx, $dy, $T, $G) {
  a <- 0
  Unpack(x, a, [$i], $T, $G)
  a <- a *b 2 * abs($dx) / $k
  if $dx < 0 {
    outx <- outx -b a
  } else {
    outx <- outx +b a
  }
  a <- 0
  Unpack(x, a, [$i], $T, $G)
  a <- a *b 2 * abs($dy) / $k
  if $dy < 0 {
    outy <- outy -b a
  } else {
    outy <- outy +b a
  }
}
"#;

/// A built reduction: the generated source, its flat expansion, and the
/// compiled synchronous circuit (two inputs, two outputs, width eight).
#[derive(Debug, Clone)]
pub struct Reduction {
    /// The parameters it was built with.
    pub params: ReductionParams,
    /// Macro-level program source.
    pub source: String,
    /// Flat expansion of `source`.
    pub program: FlatSlp,
    /// Synchronous compilation of `program`.
    pub circuit: SyncCircuit,
}

/// The exact-walk threshold pair for `K`-bit packed values:
/// `T = 1/2 − 2^(−K−1)` and `G = 2^(K+1)`.
pub fn exact_walk_thresholds(bit_budget: u32) -> (Rat, Rat) {
    let k = bit_budget as i32;
    let t = &Rat::new(1, 2) - &Rat::pow2(-k - 1);
    let g = Rat::pow2(k + 1);
    (t, g)
}

/// Builds the displacement program and circuit for an instance.
///
/// The instance's netlist is first normalized so its three color outputs
/// are its last three gates; bit position `j ∈ 1..=2n` then holds input
/// `j`, and position `2n + t` holds gate `t`, so the color bits are the
/// last three of the `K = 2n + G` packed positions.
pub fn build_reduction(
    inst: &DiscreteBrouwerInstance,
    params: &ReductionParams,
) -> Result<Reduction, ReductionError> {
    params.validate()?;
    if params.n != inst.n {
        return Err(ReductionError::Mismatch(format!(
            "params.n = {} but the instance has n = {}",
            params.n, inst.n
        )));
    }
    inst.circuit.validate()?;
    let circ = normalize_colors(&inst.circuit);
    let n = params.n as usize;
    let num_gates = circ.gates.len();
    let bit_budget = (2 * n + num_gates) as u32;
    let (tk, gk) = exact_walk_thresholds(bit_budget);
    let l = params.l();
    let delta = params.delta();
    let half = Rat::new(1, 2);

    let mut src = String::with_capacity(64 * 1024);
    src.push_str("inputs in_x, in_y\noutputs out_x, out_y\n");
    src.push_str(MACRO_LIBRARY);
    src.push_str("\nout_x <- in_x *b 1\nout_y <- in_y *b 1\n");

    // Netlist signal r sits at packed bit position r: inputs at 1..=2n,
    // gate t at 2n + t.
    let vectors = params.displacement_vectors();
    for _ in 0..params.k {
        src.push_str(&format!("in_x <- in_x +b {delta}\n"));
        src.push_str(&format!("in_y <- in_y +b {delta}\n"));
        src.push_str("x <- 0\n");
        src.push_str(&format!(
            "Pack(x, in_x, [1 .. {n}], {half}, {l}, {tk}, {gk})\n"
        ));
        src.push_str(&format!(
            "Pack(x, in_y, [{} .. {}], {half}, {l}, {tk}, {gk})\n",
            n + 1,
            2 * n
        ));
        for (idx, gate) in circ.gates.iter().enumerate() {
            let out_pos = 2 * n + idx + 1;
            match *gate {
                BoolGate::Not(a) => {
                    src.push_str(&format!("Not(x, {a}, {out_pos}, {tk}, {gk})\n"));
                }
                BoolGate::Or(a, b) => {
                    src.push_str(&format!("Or(x, {a}, {b}, {out_pos}, {tk}, {gk})\n"));
                }
            }
        }
        for (c, (dx, dy)) in vectors.iter().enumerate() {
            let color_pos = 2 * n + num_gates - 2 + c;
            src.push_str(&format!(
                "AddVector(x, {color_pos}, out_x, out_y, {}, {dx}, {dy}, {tk}, {gk})\n",
                params.k
            ));
        }
    }

    let program = parse_program(&src)?.expand()?;
    let circuit = compile(&program)?;
    Ok(Reduction {
        params: params.clone(),
        source: src,
        program,
        circuit,
    })
}

/// Counts how many of the `k` ideal sample points taken from `p` are
/// poorly positioned: sample `i ∈ 1..=k` sits at `p + (i−1)·(δ, δ)`
/// (unclipped), and a coordinate `c` is poorly positioned when it lies
/// less than `1/L` above the grid line below it.
///
/// This is never more than 2: consecutive samples are `δ > 1/L` apart, so
/// no grid line's bad zone holds two of them, and the whole sample train
/// spans `(k−1)·δ < 2^(−n−1)`, less than half a cell, so per axis at most
/// one grid line is crossed at all.
pub fn count_poorly_positioned(params: &ReductionParams, px: &Rat, py: &Rat) -> u32 {
    let delta = params.delta();
    let inv_l = Rat::one() / params.l();
    let scale = Rat::pow2(params.n as i32);
    let poorly = |c: &Rat| -> bool {
        let scaled = c * &scale;
        let cell = Rat::from_big(num_rational::BigRational::from(scaled.floor_big()));
        let frac = &scaled - &cell; // (c − a/2^n) · 2^n
        &frac / &scale < inv_l
    };
    let mut count = 0;
    for i in 0..params.k {
        let shift = &Rat::int(i as i64) * &delta;
        let sx = px + &shift;
        let sy = py + &shift;
        if poorly(&sx) || poorly(&sy) {
            count += 1;
        }
    }
    count
}

/// One two-color segment minimum in the geometry report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMin {
    /// The two color labels (1-based).
    pub colors: (u8, u8),
    /// Exact minimum sup-norm over the segment between their displacement
    /// vectors.
    pub min_norm: Rat,
}

/// Exact minima of the displacement geometry; see
/// [`displacement_geometry_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryReport {
    /// Minimum sup-norm of a single displacement vector.
    pub single_min: Rat,
    /// Minimum sup-norm over each two-color segment.
    pub pair_mins: Vec<PairMin>,
    /// The smallest of all of the above.
    pub overall_min: Rat,
}

/// Smallest sup-norm on the segment `u + t·(v−u)`, `t ∈ [0, 1]`, computed
/// exactly by checking the endpoints and every breakpoint where a
/// coordinate vanishes or the two coordinates tie in magnitude.
fn segment_min_sup_norm(u: &(Rat, Rat), v: &(Rat, Rat)) -> Rat {
    let ax = &v.0 - &u.0; // X(t) = u.0 + t·ax
    let ay = &v.1 - &u.1; // Y(t) = u.1 + t·ay
    let mut candidates = vec![Rat::zero(), Rat::one()];
    // Roots of X = 0, Y = 0, X = Y, X = −Y (all linear in t).
    let mut add_root = |num: Rat, den: Rat| {
        if !den.is_zero() {
            let t = &num / &den;
            if !t.is_negative() && t <= Rat::one() {
                candidates.push(t);
            }
        }
    };
    add_root(-u.0.clone(), ax.clone());
    add_root(-u.1.clone(), ay.clone());
    add_root(&u.1 - &u.0, &ax - &ay);
    add_root(-(&u.0 + &u.1), &ax + &ay);
    candidates
        .into_iter()
        .map(|t| {
            let x = (&u.0 + &(&t * &ax)).abs();
            let y = (&u.1 + &(&t * &ay)).abs();
            x.max(y)
        })
        .min()
        .expect("endpoints always present")
}

/// Computes, exactly, how far from zero the displacement field stays when
/// only one or two colors contribute: the minimum sup-norm of each single
/// displacement vector and of every convex combination of each pair.
///
/// A positive overall minimum means a point whose samples never see all
/// three colors keeps a residual displacement of at least that size
/// (before clipping and up to the poorly-positioned sample allowance).
pub fn displacement_geometry_check(params: &ReductionParams) -> GeometryReport {
    let d = params.displacement_vectors();
    let single_min = d
        .iter()
        .map(|(x, y)| x.abs().max(y.abs()))
        .min()
        .expect("three vectors");
    let pair_mins: Vec<PairMin> = [(0usize, 1usize), (0, 2), (1, 2)]
        .into_iter()
        .map(|(i, j)| PairMin {
            colors: (i as u8 + 1, j as u8 + 1),
            min_norm: segment_min_sup_norm(&d[i], &d[j]),
        })
        .collect();
    let overall_min = pair_mins
        .iter()
        .map(|p| p.min_norm.clone())
        .fold(single_min.clone(), Rat::min);
    GeometryReport {
        single_min,
        pair_mins,
        overall_min,
    }
}

/// One grid-search sample: a point and its sup-norm residual `‖F(p)−p‖∞`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridHit {
    /// The sampled point.
    pub point: (Rat, Rat),
    /// Its residual.
    pub residual: Rat,
}

/// Sweeps the `(resolution+1)²` lattice `(i·s/resolution, j·s/resolution)`
/// over `[0, s]²` with an arbitrary evaluator, returning all hits sorted
/// by residual (ties by point).
pub fn grid_search_with<F>(eval: F, scale: &Rat, resolution: u32) -> Vec<GridHit>
where
    F: Fn(&Rat, &Rat) -> (Rat, Rat) + Sync + Send,
{
    let res = resolution as usize;
    let step_of = |i: usize| -> Rat { &(&Rat::int(i as i64) * scale) / &Rat::int(res as i64) };
    let mut hits: Vec<GridHit> = par::map_range(res + 1, |j| {
        let y = step_of(j);
        let mut row = Vec::with_capacity(res + 1);
        for i in 0..=res {
            let x = step_of(i);
            let (fx, fy) = eval(&x, &y);
            let residual = (&fx - &x).abs().max((&fy - &y).abs());
            row.push(GridHit {
                point: (x.clone(), y.clone()),
                residual,
            });
        }
        row
    })
    .into_iter()
    .flatten()
    .collect();
    hits.sort_by(|a, b| {
        a.residual
            .cmp(&b.residual)
            .then_with(|| a.point.0.cmp(&b.point.0))
            .then_with(|| a.point.1.cmp(&b.point.1))
    });
    hits
}

/// [`grid_search_with`] driven by a compiled two-in/two-out circuit; the
/// lattice spans `[0, bound]²`.
pub fn grid_search(circ: &SyncCircuit, resolution: u32) -> Result<Vec<GridHit>, CircuitError> {
    circ.validate()?;
    if circ.num_inputs != 2 || circ.outputs.len() != 2 {
        return Err(CircuitError::NotAnEndomap {
            inputs: circ.num_inputs,
            outputs: circ.outputs.len(),
        });
    }
    Ok(grid_search_with(
        |x, y| {
            let out = circ
                .evaluate(&[x.clone(), y.clone()])
                .expect("validated circuit evaluates on in-range lattice points");
            (out[0].clone(), out[1].clone())
        },
        &circ.bound,
        resolution,
    ))
}
