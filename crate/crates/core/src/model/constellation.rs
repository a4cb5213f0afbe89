use std::fmt;

use crate::linalg::{c64, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Bpsk,
    Qpsk,
    Qam16,
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstellationKind::Bpsk => "bpsk",
            ConstellationKind::Qpsk => "qpsk",
            ConstellationKind::Qam16 => "qam16",
        })
    }
}

impl std::str::FromStr for ConstellationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            "qam16" | "16qam" | "16-qam" => Ok(Self::Qam16),
            other => Err(format!("unknown constellation '{other}' (expected bpsk, qpsk, qam16)")),
        }
    }
}

/// Finite symbol alphabet normalized to unit average energy.
///
/// The order of `points` is significant: slicing ties resolve to the earliest
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<C64>,
}

impl Constellation {
    pub fn new(kind: ConstellationKind) -> Self {
        let points = match kind {
            ConstellationKind::Bpsk => vec![c64(1.0, 0.0), c64(-1.0, 0.0)],
            ConstellationKind::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                vec![c64(a, a), c64(-a, a), c64(-a, -a), c64(a, -a)]
            }
            ConstellationKind::Qam16 => {
                let a = 1.0 / 10f64.sqrt();
                let levels = [-3.0, -1.0, 1.0, 3.0];
                levels
                    .iter()
                    .flat_map(|&im| levels.iter().map(move |&re| c64(re * a, -im * a)))
                    .collect()
            }
        };
        Self { kind, points }
    }

    pub fn bpsk() -> Self {
        Self::new(ConstellationKind::Bpsk)
    }

    pub fn qpsk() -> Self {
        Self::new(ConstellationKind::Qpsk)
    }

    pub fn qam16() -> Self {
        Self::new(ConstellationKind::Qam16)
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn contains(&self, z: C64) -> bool {
        self.points.iter().any(|p| (p - z).norm() < 1e-12)
    }
}

/// Nearest constellation point; ties go to the earliest point.
pub fn slice_entry(z: C64, c: &Constellation) -> C64 {
    let mut best = c.points[0];
    let mut best_d = (z - best).norm_sqr();
    for &p in &c.points[1..] {
        let d = (z - p).norm_sqr();
        if d < best_d {
            best = p;
            best_d = d;
        }
    }
    best
}

pub fn slice(v: &CVector, c: &Constellation) -> CVector {
    v.map(|z| slice_entry(z, c))
}
