use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{czero, Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "RY")]
    Ry,
    #[serde(rename = "RZ")]
    Rz,
    X,
    Y,
    Z,
    #[serde(rename = "CNOT")]
    Cnot,
    #[serde(rename = "IDENTITY")]
    Identity,
}

/// Single-qubit Pauli generator of a rotation `R_P(θ) = exp(−iθP/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

pub type Mat2<T> = [[C<T>; 2]; 2];

impl Pauli {
    pub fn matrix<T: Real>(self) -> Mat2<T> {
        let o = T::one();
        let z = T::zero();
        match self {
            Pauli::X => [
                [Complex::new(z, z), Complex::new(o, z)],
                [Complex::new(o, z), Complex::new(z, z)],
            ],
            Pauli::Y => [
                [Complex::new(z, z), Complex::new(z, -o)],
                [Complex::new(z, o), Complex::new(z, z)],
            ],
            Pauli::Z => [
                [Complex::new(o, z), Complex::new(z, z)],
                [Complex::new(z, z), Complex::new(-o, z)],
            ],
        }
    }
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }
}

/// One gate of a window circuit. Targets are relative to the window start;
/// for CNOT `targets = [control, target]`. Rotations name the entry of the
/// parameter vector holding their angle (radians).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
    param: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRepr {
    kind: GateKind,
    targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param: Option<usize>,
}

impl TryFrom<GateRepr> for Gate {
    type Error = Error;

    fn try_from(r: GateRepr) -> Result<Self> {
        Gate::new(r.kind, r.targets, r.param)
    }
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        GateRepr {
            kind: g.kind,
            targets: g.targets,
            param: g.param,
        }
    }
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, param: Option<usize>) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(Error::config(format!(
                "{kind:?} takes {} target(s), got {}",
                kind.arity(),
                targets.len()
            )));
        }
        if kind == GateKind::Cnot && targets[0] == targets[1] {
            return Err(Error::config("CNOT control and target coincide"));
        }
        match (kind.is_rotation(), param) {
            (true, None) => Err(Error::config(format!("{kind:?} needs a parameter index"))),
            (false, Some(_)) => Err(Error::config(format!("{kind:?} takes no parameter"))),
            _ => Ok(Self {
                kind,
                targets,
                param,
            }),
        }
    }

    pub fn rx(q: usize, param: usize) -> Self {
        Self::new(GateKind::Rx, vec![q], Some(param)).expect("valid")
    }

    pub fn ry(q: usize, param: usize) -> Self {
        Self::new(GateKind::Ry, vec![q], Some(param)).expect("valid")
    }

    pub fn rz(q: usize, param: usize) -> Self {
        Self::new(GateKind::Rz, vec![q], Some(param)).expect("valid")
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::Cnot, vec![control, target], None).expect("valid")
    }

    pub fn fixed(kind: GateKind, q: usize) -> Result<Self> {
        Self::new(kind, vec![q], None)
    }

    #[inline]
    pub fn kind(&self) -> GateKind {
        self.kind
    }

    #[inline]
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    #[inline]
    pub fn param(&self) -> Option<usize> {
        self.param
    }

    /// Highest target index plus one.
    pub fn span(&self) -> usize {
        self.targets.iter().max().map_or(0, |m| m + 1)
    }

    /// Generator of a rotation; fixed gates have none and are rejected.
    pub fn generator(&self) -> Result<Pauli> {
        match self.kind {
            GateKind::Rx => Ok(Pauli::X),
            GateKind::Ry => Ok(Pauli::Y),
            GateKind::Rz => Ok(Pauli::Z),
            other => Err(Error::domain(format!(
                "{other:?} is a fixed gate with no rotation generator"
            ))),
        }
    }

    /// 2×2 matrix of a single-qubit gate at angle `theta` (ignored for fixed gates).
    pub fn matrix_1q<T: Real>(&self, theta: T) -> Option<Mat2<T>> {
        let half = theta * T::lit(0.5);
        let (c, s) = (half.cos(), half.sin());
        let z = T::zero();
        let o = T::one();
        let m = match self.kind {
            GateKind::Rx => [
                [Complex::new(c, z), Complex::new(z, -s)],
                [Complex::new(z, -s), Complex::new(c, z)],
            ],
            GateKind::Ry => [
                [Complex::new(c, z), Complex::new(-s, z)],
                [Complex::new(s, z), Complex::new(c, z)],
            ],
            GateKind::Rz => [
                [Complex::new(c, -s), czero()],
                [czero(), Complex::new(c, s)],
            ],
            GateKind::X => Pauli::X.matrix(),
            GateKind::Y => Pauli::Y.matrix(),
            GateKind::Z => Pauli::Z.matrix(),
            GateKind::Identity => [
                [Complex::new(o, z), czero()],
                [czero(), Complex::new(o, z)],
            ],
            GateKind::Cnot => return None,
        };
        Some(m)
    }
}
