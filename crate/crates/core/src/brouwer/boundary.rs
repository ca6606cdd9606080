//! Boundary-enforcement wrappers and the border-thickening embedding.
//!
//! Both transforms wrap an instance's netlist in comparator logic plus a
//! priority multiplexer, producing a new netlist that agrees with the
//! inner one away from the border and imposes the boundary discipline
//! (left `1`, bottom `2`, right/top `3`) on or near it.

use super::netlist::{BRef, Builder};
use super::{BrouwerError, DiscreteBrouwerInstance};
use crate::rational::Rat;

/// Which boundary discipline to impose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Exact single-line boundary:
    /// `gx = 0 → 1`, else `gy = 0 → 2`, else `gx = 2^n−1 or gy = 2^n−1 → 3`,
    /// else the inner color.
    Original,
    /// Thick bands of relative width `ε ∈ (0, 1/2)`:
    /// `gy ≤ ⌊ε·2^n⌋ → 1`, else `gx ≤ ⌊ε·2^n⌋ → 2`, else
    /// `(gx > ⌊ε·2^n⌋ and gy ≥ ⌈(1−ε)·2^n⌉) or
    ///  (gy > ⌊ε·2^n⌋ and gx ≥ ⌈(1−ε)·2^n⌉) → 3`,
    /// else the inner color.
    Thick(Rat),
}

fn check_eps(eps: &Rat) -> Result<(), BrouwerError> {
    if eps.is_negative() || eps.is_zero() || *eps >= Rat::new(1, 2) {
        return Err(BrouwerError::MalformedInstance(format!(
            "band width {eps} outside (0, 1/2)"
        )));
    }
    Ok(())
}

fn floor_scaled(eps: &Rat, n: u32) -> i128 {
    let scaled = eps * &Rat::pow2(n as i32);
    scaled
        .floor_i64()
        .expect("n ≤ 32 keeps thresholds within i64") as i128
}

fn ceil_scaled(eps: &Rat, n: u32) -> i128 {
    let scaled = eps * &Rat::pow2(n as i32);
    let fl = scaled
        .floor_i64()
        .expect("n ≤ 32 keeps thresholds within i64") as i128;
    if scaled.is_integer() {
        fl
    } else {
        fl + 1
    }
}

/// Three condition bits, one per boundary color, evaluated in priority
/// order `1, 2, 3` ahead of the inner color.
struct BoundaryConds {
    c1: BRef,
    c2: BRef,
    c3: BRef,
}

/// `cond ? 1 : cond2 ? 2 : cond3 ? 3 : inner` as three one-hot outputs.
fn priority_mux(b: &mut Builder, conds: BoundaryConds, inner: [BRef; 3]) -> Vec<BRef> {
    let BoundaryConds { c1, c2, c3 } = conds;
    let n1 = b.not(c1);
    let n2 = b.not(c2);
    let n3 = b.not(c3);
    let sel2 = b.and(n1, c2);
    let pre3 = b.and(n1, n2);
    let sel3 = b.and(pre3, c3);
    let sel_inner = b.and(pre3, n3);
    let pick1 = b.and(sel_inner, inner[0]);
    let pick2 = b.and(sel_inner, inner[1]);
    let pick3 = b.and(sel_inner, inner[2]);
    let out1 = b.or(c1, pick1);
    let out2 = b.or(sel2, pick2);
    let out3 = b.or(sel3, pick3);
    vec![out1, out2, out3]
}

/// Wraps an instance so its colors obey the requested boundary discipline;
/// interior points keep the inner netlist's color.
pub fn enforce_boundary(
    inst: &DiscreteBrouwerInstance,
    mode: BoundaryMode,
) -> Result<DiscreteBrouwerInstance, BrouwerError> {
    let n = inst.n as usize;
    let mut b = Builder::new(2 * n);
    let xbits: Vec<BRef> = (0..n).map(|i| b.input(i)).collect();
    let ybits: Vec<BRef> = (0..n).map(|i| b.input(n + i)).collect();
    let identity: Vec<BRef> = (0..2 * n).map(|i| b.input(i)).collect();
    let inner = b.append(&inst.circuit, &identity);
    let inner = [inner[0], inner[1], inner[2]];

    let conds = match &mode {
        BoundaryMode::Original => {
            let c1 = b.is_zero(&xbits);
            let c2 = b.is_zero(&ybits);
            let x_max = b.and_many(&xbits);
            let y_max = b.and_many(&ybits);
            let c3 = b.or(x_max, y_max);
            BoundaryConds { c1, c2, c3 }
        }
        BoundaryMode::Thick(eps) => {
            check_eps(eps)?;
            let low = floor_scaled(eps, inst.n);
            let one_minus = &Rat::one() - eps;
            let high = ceil_scaled(&one_minus, inst.n);
            let c1 = b.le_const(&ybits, low);
            let c2 = b.le_const(&xbits, low);
            let x_gt = b.ge_const(&xbits, low + 1);
            let y_hi = b.ge_const(&ybits, high);
            let t1 = b.and(x_gt, y_hi);
            let y_gt = b.ge_const(&ybits, low + 1);
            let x_hi = b.ge_const(&xbits, high);
            let t2 = b.and(y_gt, x_hi);
            let c3 = b.or(t1, t2);
            BoundaryConds { c1, c2, c3 }
        }
    };
    let outs = priority_mux(&mut b, conds, inner);
    DiscreteBrouwerInstance::new(inst.n, b.finish(outs))
}

/// A thickened instance together with the embedding offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thickened {
    /// The instance on the enlarged grid.
    pub instance: DiscreteBrouwerInstance,
    /// The translation applied to the original grid: original point
    /// `(gx, gy)` sits at `(gx + offset.0, gy + offset.1)`.
    pub offset: (u64, u64),
}

/// Embeds an instance into a `2^n' × 2^n'` grid, `n'` minimal with
/// `2^(n−n') < 1 − 2ε`, translating it by
/// `(2^(n'−1) − 2^(n−1), 2^(n'−1) − 2^(n−1))` and coloring the surrounding
/// frame `1` (at or below the copy), `2` (left of it), and `3` (the rest):
///
/// 1. both `gx − X₀` and `gy − Y₀` in `[0, 2^n)` → the inner color at
///    `(gx − X₀, gy − Y₀)`;
/// 2. else `gy − Y₀ ≤ 0` → `1`;
/// 3. else `gx − X₀ < 0` → `2`;
/// 4. else → `3`.
///
/// The frame follows the banded discipline's orientation (below `1`, left
/// `2`, elsewhere `3`). For instances whose own border obeys that
/// discipline — nonempty bands colored the same way, as produced by
/// [`enforce_boundary`] with [`BoundaryMode::Thick`] — the frame extends
/// the bands seamlessly, so the trichromatic squares of the result are
/// exactly the original ones translated by the offset.
pub fn thicken(inst: &DiscreteBrouwerInstance, eps: &Rat) -> Result<Thickened, BrouwerError> {
    check_eps(eps)?;
    let n = inst.n;
    let gap = &Rat::one() - &(&Rat::int(2) * eps);
    let mut np = n + 1;
    while Rat::pow2(n as i32 - np as i32) >= gap {
        np += 1;
        if np > 40 {
            return Err(BrouwerError::MalformedInstance(format!(
                "band width {eps} leaves no room to embed"
            )));
        }
    }
    if np > 32 {
        return Err(BrouwerError::MalformedInstance(format!(
            "embedding needs grid exponent {np}, beyond the supported 32"
        )));
    }
    let x0 = (1u64 << (np - 1)) - (1u64 << (n - 1));

    let npu = np as usize;
    let nu = n as usize;
    let mut b = Builder::new(2 * npu);
    let xbits: Vec<BRef> = (0..npu).map(|i| b.input(i)).collect();
    let ybits: Vec<BRef> = (0..npu).map(|i| b.input(npu + i)).collect();
    let (dx, bx) = b.sub_const(&xbits, x0);
    let (dy, by) = b.sub_const(&ybits, x0);

    // In range: no borrow and every difference bit above position n−1 clear.
    let high_x_zero = b.is_zero(&dx[..npu - nu]);
    let high_y_zero = b.is_zero(&dy[..npu - nu]);
    let nbx = b.not(bx);
    let nby = b.not(by);
    let in_x = b.and(nbx, high_x_zero);
    let in_y = b.and(nby, high_y_zero);
    let case_inner = b.and(in_x, in_y);

    // gy − Y₀ ≤ 0: borrowed, or the difference is exactly zero.
    let dy_zero = b.is_zero(&dy);
    let below = b.or(by, dy_zero);

    let map: Vec<BRef> = dx[npu - nu..]
        .iter()
        .chain(&dy[npu - nu..])
        .copied()
        .collect();
    let inner = b.append(&inst.circuit, &map);

    // Priority: inner first, then 1 (below), then 2 (left), then 3.
    let n_inner = b.not(case_inner);
    let sel1 = b.and(n_inner, below);
    let nbelow = b.not(below);
    let pre2 = b.and(n_inner, nbelow);
    let sel2 = b.and(pre2, bx);
    let nbx2 = b.not(bx);
    let sel3 = b.and(pre2, nbx2);
    let pick1 = b.and(case_inner, inner[0]);
    let pick2 = b.and(case_inner, inner[1]);
    let pick3 = b.and(case_inner, inner[2]);
    let out1 = b.or(pick1, sel1);
    let out2 = b.or(pick2, sel2);
    let out3 = b.or(pick3, sel3);

    let instance = DiscreteBrouwerInstance::new(np, b.finish(vec![out1, out2, out3]))?;
    Ok(Thickened {
        instance,
        offset: (x0, x0),
    })
}
