//! Uniform cell-centred discretization of an interval `(x_lo, x_hi)` together
//! with the two boundary nodes, and the plain and Ψ-weighted boundary projections.
//!
//! Node indexing convention used across the crate: interior cells are `0..n`,
//! the lower boundary node is `n` and the upper boundary node is `n + 1`.
//!
//! All projection ties are broken toward `x_lo`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pair of values attached to the two boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValues {
    pub lower: f64,
    pub upper: f64,
}

impl BoundaryValues {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn constant(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Lower => self.lower,
            Side::Upper => self.upper,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.abs().max(self.upper.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Lower, Side::Upper];
}

/// Sign selecting `P_{Ψ,τ}` (`Plus`) or `P_{−Ψ,τ}` (`Minus`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
    pub dx: f64,
    pub cell_centers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionResult {
    pub side: Side,
    pub point: f64,
    pub value: f64,
}

pub fn build_grid(x_lo: f64, x_hi: f64, n_cells: usize) -> Result<Grid> {
    if !x_lo.is_finite() || !x_hi.is_finite() {
        return Err(Error::InvalidGrid("bounds must be finite".into()));
    }
    if x_lo >= x_hi {
        return Err(Error::InvalidGrid(format!("x_lo = {x_lo} must be below x_hi = {x_hi}")));
    }
    if n_cells == 0 {
        return Err(Error::InvalidGrid("n_cells must be positive".into()));
    }
    let dx = (x_hi - x_lo) / n_cells as f64;
    let cell_centers = (0..n_cells).map(|i| x_lo + (i as f64 + 0.5) * dx).collect();
    Ok(Grid { x_lo, x_hi, n_cells, dx, cell_centers })
}

impl Grid {
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 2
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn interior_ball_radius(&self) -> f64 {
        0.5 * self.length()
    }

    pub fn boundary_nodes(&self) -> [f64; 2] {
        [self.x_lo, self.x_hi]
    }

    pub fn boundary_point(&self, side: Side) -> f64 {
        match side {
            Side::Lower => self.x_lo,
            Side::Upper => self.x_hi,
        }
    }

    pub fn boundary_index(&self, side: Side) -> usize {
        match side {
            Side::Lower => self.n_cells,
            Side::Upper => self.n_cells + 1,
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        node >= self.n_cells
    }

    pub fn side_of(&self, node: usize) -> Option<Side> {
        match node.checked_sub(self.n_cells) {
            Some(0) => Some(Side::Lower),
            Some(1) => Some(Side::Upper),
            _ => None,
        }
    }

    /// Coordinate of a node (cell centre or boundary point).
    pub fn node_position(&self, node: usize) -> f64 {
        match self.side_of(node) {
            Some(side) => self.boundary_point(side),
            None => self.cell_centers[node],
        }
    }

    pub fn distance_to_boundary(&self, x: f64) -> f64 {
        (x - self.x_lo).min(self.x_hi - x)
    }

    fn check_closed(&self, x: f64) -> Result<()> {
        if !(x >= self.x_lo && x <= self.x_hi) {
            return Err(Error::OutOfDomain { x, lo: self.x_lo, hi: self.x_hi });
        }
        Ok(())
    }

    /// Linear interpolant of boundary values, used as the interior extension of Ψ.
    pub fn interpolate_boundary(&self, values: &BoundaryValues, x: f64) -> f64 {
        let s = (x - self.x_lo) / self.length();
        values.lower + s * (values.upper - values.lower)
    }
}

pub fn nearest_boundary_projection(g: &Grid, x: f64) -> Result<ProjectionResult> {
    g.check_closed(x)?;
    let (dl, du) = (x - g.x_lo, g.x_hi - x);
    Ok(if dl <= du {
        ProjectionResult { side: Side::Lower, point: g.x_lo, value: dl }
    } else {
        ProjectionResult { side: Side::Upper, point: g.x_hi, value: du }
    })
}

/// `argmin_b |x − b|²/(2τ) ± Ψ(b)` over the two boundary nodes.
pub fn weighted_boundary_projection(
    g: &Grid,
    x: f64,
    psi: &BoundaryValues,
    tau: f64,
    sign: Sign,
) -> Result<ProjectionResult> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    g.check_closed(x)?;
    let s = sign.factor();
    let vl = (x - g.x_lo).powi(2) / (2.0 * tau) + s * psi.lower;
    let vu = (g.x_hi - x).powi(2) / (2.0 * tau) + s * psi.upper;
    Ok(if vl <= vu {
        ProjectionResult { side: Side::Lower, point: g.x_lo, value: vl }
    } else {
        ProjectionResult { side: Side::Upper, point: g.x_hi, value: vu }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGapReport {
    pub max_gap_plus: f64,
    pub max_gap_minus: f64,
    pub bound: f64,
    pub samples_used: usize,
    pub pass: bool,
}

/// Compares `P` with `P_{±Ψ,τ}` on the samples lying within `r/2` of the boundary.
pub fn projection_gap_check(
    g: &Grid,
    psi: &BoundaryValues,
    tau: f64,
    samples: &[f64],
) -> Result<ProjectionGapReport> {
    let lip = (psi.upper - psi.lower).abs() / g.length();
    let bound = 4.0 * tau * lip;
    let half_r = 0.5 * g.interior_ball_radius();
    let (mut gp, mut gm, mut used) = (0.0f64, 0.0f64, 0usize);
    for &x in samples {
        if !(x >= g.x_lo && x <= g.x_hi) || g.distance_to_boundary(x) >= half_r {
            continue;
        }
        used += 1;
        let p = nearest_boundary_projection(g, x)?.point;
        gp = gp.max((p - weighted_boundary_projection(g, x, psi, tau, Sign::Plus)?.point).abs());
        gm = gm.max((p - weighted_boundary_projection(g, x, psi, tau, Sign::Minus)?.point).abs());
    }
    Ok(ProjectionGapReport {
        max_gap_plus: gp,
        max_gap_minus: gm,
        bound,
        samples_used: used,
        pass: gp <= bound && gm <= bound,
    })
}
