//! Riemann problems for a sampled piecewise affine flux.
//!
//! The solution of `[uL, uR]` is read off the lower envelope of the flux when
//! `uL < uR` and off the upper envelope when `uL > uR`. Each maximal constant
//! slope run of the envelope becomes one [`Wavefront`] travelling with the run
//! slope; rarefactions therefore appear as fans of contact pieces.

use std::cmp::Ordering;

use crate::envelope::{lower_envelope, upper_envelope, EnvelopeResult, PiecewiseAffineFn};
use crate::error::{Error, Result};

/// Nature of a wavefront.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveKind {
    /// The envelope lies strictly below (or above) the flux inside the piece.
    Shock,
    /// The flux is affine on a piece spanning several cells.
    Contact,
    /// A single cell of a rarefaction fan.
    RarefactionCell,
}

/// One piece of a Riemann solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavefront {
    /// State index on the left of the front.
    pub left: i64,
    /// State index on the right of the front.
    pub right: i64,
    /// Rankine-Hugoniot speed.
    pub speed: f64,
    /// Classification of the piece.
    pub kind: WaveKind,
}

impl Wavefront {
    /// Sign of the jump carried by the front.
    pub fn sign(&self) -> i8 {
        if self.right > self.left {
            1
        } else {
            -1
        }
    }

    /// Number of grid cells crossed by the jump.
    pub fn cells(&self) -> i64 {
        (self.right - self.left).abs()
    }

    /// Smaller and larger state of the jump.
    pub fn span(&self) -> (i64, i64) {
        (self.left.min(self.right), self.left.max(self.right))
    }

    /// True when the two fronts travel with exactly the same speed, decided on
    /// the flux samples rather than on the rounded speeds. Only meaningful for
    /// pieces of envelopes whose value ranges overlap.
    pub fn same_speed(&self, other: &Wavefront, flux: &PiecewiseAffineFn) -> bool {
        let (a, b) = self.span();
        let (c, d) = other.span();
        flux.same_line(a, b, c, d)
    }
}

/// Envelope that governs the Riemann problem `[ul, ur]`.
pub fn riemann_envelope(f: &PiecewiseAffineFn, ul: i64, ur: i64) -> Result<EnvelopeResult> {
    match ul.cmp(&ur) {
        Ordering::Less => lower_envelope(f, ul, ur),
        Ordering::Greater => upper_envelope(f, ur, ul),
        Ordering::Equal => Err(Error::Degenerate(ul)),
    }
}

/// Solves the Riemann problem `[ul, ur]`. Returns an empty list when `ul = ur`.
/// The pieces are ordered left to right in space, so their speeds strictly increase.
pub fn solve(f: &PiecewiseAffineFn, ul: i64, ur: i64) -> Result<Vec<Wavefront>> {
    f.check(ul)?;
    f.check(ur)?;
    if ul == ur {
        return Ok(Vec::new());
    }
    let env = riemann_envelope(f, ul, ur)?;
    let mut pieces: Vec<Wavefront> = env
        .runs
        .iter()
        .map(|r| {
            let kind = if (r.lo + 1..r.hi).any(|m| !env.is_contact(m)) {
                WaveKind::Shock
            } else if r.hi - r.lo == 1 {
                WaveKind::RarefactionCell
            } else {
                WaveKind::Contact
            };
            Wavefront { left: r.lo, right: r.hi, speed: r.slope, kind }
        })
        .collect();
    if ul > ur {
        pieces.reverse();
        for p in &mut pieces {
            std::mem::swap(&mut p.left, &mut p.right);
        }
    }
    Ok(pieces)
}

/// Grid cell occupied by a wave with state `uhat` and the given sign:
/// the cell `[uhat - 1, uhat]` for a positive wave and `[uhat, uhat + 1]` for a
/// negative one. The cell is returned by its right endpoint.
pub fn wave_cell(uhat: i64, sign: i8) -> i64 {
    if sign > 0 {
        uhat
    } else {
        uhat + 1
    }
}

/// Speed assigned by the Riemann problem `[ul, ur]` to the wave with state
/// `uhat` and sign `sign`: the envelope slope on the cell that the wave occupies.
pub fn wave_speed(f: &PiecewiseAffineFn, ul: i64, ur: i64, uhat: i64, sign: i8) -> Result<f64> {
    let (lo, hi) = (ul.min(ur), ul.max(ur));
    let jump_sign = if ur > ul { 1 } else { -1 };
    let cell = wave_cell(uhat, sign);
    if ul == ur || sign != jump_sign || cell <= lo || cell > hi {
        return Err(Error::OutsideJump(uhat));
    }
    let env = riemann_envelope(f, ul, ur)?;
    crate::envelope::envelope_slope(&env, cell)
}
