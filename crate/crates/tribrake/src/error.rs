use crate::integrate::Termination;

/// A binary collision pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    P12,
    P13,
    P23,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::P12, Pair::P13, Pair::P23];

    /// Angle of the collision point on the unit circle.
    pub fn angle(self) -> f64 {
        use core::f64::consts::PI;
        match self {
            Pair::P12 => 0.0,
            Pair::P13 => 2.0 * PI / 3.0,
            Pair::P23 => -2.0 * PI / 3.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Pair::P12 => 0,
            Pair::P13 => 1,
            Pair::P23 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("masses must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("energy parameter h must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("triple collision (xi = 0)")]
    TripleCollision,
    #[error("shape is the Lagrange point at infinity")]
    ShapeAtInfinity,
    #[error("binary collision singularity {0:?}")]
    Collision(Pair),
    #[error("outside domain: {0}")]
    Domain(&'static str),
    #[error("root not bracketed on [{lo}, {hi}] (g = {glo}, {ghi})")]
    NoBracket { lo: f64, hi: f64, glo: f64, ghi: f64 },
    #[error("Lagrange homothetic start: no syzygy")]
    LagrangeHomothetic,
    #[error("integration ended without reaching target: {0:?}")]
    Integration(Termination),
    #[error("region-crossing violation: {0}")]
    RegionCrossing(&'static str),
    #[error("shooting found no sign change")]
    NoSignChange,
    #[error("optimizer did not converge")]
    NoConvergence,
}
