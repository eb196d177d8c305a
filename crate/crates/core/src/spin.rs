//! Spin-J representations, the coupling Hamiltonian `M = sum B^mu J_mu` and
//! its dressed states.
//!
//! Basis vectors are ordered by descending `J3` eigenvalue, `m = +J, ..., -J`.
//! For spin 1 that is `(|1>, |0>, |2>)` in the atomic labelling
//! (`m_F = +1, 0, -1`).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;

use crate::error::{Error, Result};
use crate::field::{check_gap, BVector, FieldParams};
use crate::linalg::{hermitian_eigen, CMatrix, C64};

/// Relative threshold on `|B| + B3` below which the z-patch is singular.
pub const POLE_REL: f64 = 1e-9;

/// A level `m` of a spin-J multiplet, stored as the integer `2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Band(i32);

impl Band {
    pub const fn from_twice(two_m: i32) -> Self {
        Band(two_m)
    }

    /// Integer level `m`.
    pub const fn integer(m: i32) -> Self {
        Band(2 * m)
    }

    /// Parses a real `m`; fails unless `2m` is an integer.
    pub fn from_f64(m: f64) -> Option<Self> {
        let two_m = 2.0 * m;
        let r = libm::round(two_m);
        if (two_m - r).abs() < 1e-9 && r.abs() < i32::MAX as f64 {
            Some(Band(r as i32))
        } else {
            None
        }
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn m(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// The `2J+1`-dimensional irreducible representation of su(2).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinRep {
    two_j: u32,
    j1: CMatrix,
    j2: CMatrix,
    j3: CMatrix,
}

impl SpinRep {
    /// Ladder-operator construction. `two_j = 0` is rejected: the trivial
    /// representation has a single band and nothing to compute.
    pub fn new(two_j: u32) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::invalid("two_j must be >= 1"));
        }
        let dim = two_j as usize + 1;
        let j = two_j as f64 / 2.0;
        let ms: Vec<f64> = (0..dim).map(|i| j - i as f64).collect();

        // J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>; index i-1 holds m+1
        let mut raise = CMatrix::zeros(dim);
        for i in 1..dim {
            let m = ms[i];
            raise[(i - 1, i)] = C64::new(sqrt(j * (j + 1.0) - m * (m + 1.0)), 0.0);
        }
        let lower = raise.adjoint();

        let mut j1 = raise.clone();
        j1.add_scaled(1.0, &lower);
        let j1 = j1.scaled(C64::new(0.5, 0.0));
        let j2 = raise.sub(&lower).scaled(C64::new(0.0, -0.5));
        let j3 = CMatrix::from_diagonal(&ms);
        Ok(Self { two_j, j1, j2, j3 })
    }

    pub fn spin_half() -> Self {
        Self::new(1).expect("two_j = 1 is valid")
    }

    pub fn spin_one() -> Self {
        Self::new(2).expect("two_j = 2 is valid")
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn generators(&self) -> [&CMatrix; 3] {
        [&self.j1, &self.j2, &self.j3]
    }

    /// Bands in basis order, `+J` first.
    pub fn bands(&self) -> impl Iterator<Item = Band> + '_ {
        (0..self.dim()).map(move |i| Band(self.two_j as i32 - 2 * i as i32))
    }

    pub fn contains(&self, band: Band) -> bool {
        let tj = self.two_j as i32;
        band.0.abs() <= tj && (tj - band.0) % 2 == 0
    }

    /// Position of `band` in the descending-energy ordering.
    pub fn band_position(&self, band: Band) -> Result<usize> {
        if !self.contains(band) {
            return Err(Error::invalid(alloc::format!(
                "band m={band} is not a level of spin {}/2",
                self.two_j
            )));
        }
        Ok(((self.two_j as i32 - band.0) / 2) as usize)
    }

    /// `sum_mu v^mu J_mu`
    pub fn contract(&self, v: &BVector) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim());
        m.add_scaled(v.b1, &self.j1);
        m.add_scaled(v.b2, &self.j2);
        m.add_scaled(v.b3, &self.j3);
        m
    }
}

/// One eigenpair of `M(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandState {
    pub band: Band,
    pub energy: f64,
    pub state: Vec<C64>,
}

/// `M(t, x) = sum_mu B^mu(t, x) J_mu` for a given representation.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianField {
    pub rep: SpinRep,
    pub params: FieldParams,
}

impl HermitianField {
    pub fn new(rep: SpinRep, params: FieldParams) -> Self {
        Self { rep, params }
    }

    /// The physical three-level atom.
    pub fn spin_one(params: FieldParams) -> Self {
        Self::new(SpinRep::spin_one(), params)
    }

    pub fn hamiltonian_at(&self, t: f64, x: f64) -> CMatrix {
        self.rep.contract(&self.params.sample(t, x))
    }

    /// Eigenpairs sorted by descending energy, labelled `m = +J .. -J`.
    pub fn eigensystem_at(&self, t: f64, x: f64) -> Result<Vec<BandState>> {
        let b = self.params.sample(t, x);
        check_gap(b.norm(), self.params.degeneracy_threshold(), t, x)?;
        Ok(eigensystem_for(&self.rep, &b))
    }

    /// Single band, via the eigensolver.
    pub fn band_state_at(&self, band: Band, t: f64, x: f64) -> Result<BandState> {
        let pos = self.rep.band_position(band)?;
        Ok(self.eigensystem_at(t, x)?.swap_remove(pos))
    }
}

/// Diagonalizes `B . J` (no gap check).
pub fn eigensystem_for(rep: &SpinRep, b: &BVector) -> Vec<BandState> {
    let eig = hermitian_eigen(&rep.contract(b));
    eig.values
        .into_iter()
        .zip(eig.vectors)
        .zip(rep.bands())
        .map(|((energy, state), band)| BandState {
            band,
            energy,
            state,
        })
        .collect()
}

/// Closed-form `m = +1` dressed state of the spin-1 coupling,
///
/// ```text
/// |eta_1> = (|1> + sqrt(2) z |0> + z^2 |2>) / (1 + |z|^2),  z = (B1 + i B2) / (|B| + B3)
/// ```
///
/// valid away from the south pole of the stereographic patch.
pub fn dressed_state_spin1(b: &BVector) -> Result<BandState> {
    let mag = b.norm();
    if !(mag > 0.0) {
        return Err(Error::Degenerate {
            t: f64::NAN,
            x: f64::NAN,
            magnitude: mag,
            threshold: 0.0,
        });
    }
    let denom = mag + b.b3;
    let threshold = POLE_REL * mag;
    if denom <= threshold {
        return Err(Error::PolePatch {
            value: denom,
            threshold,
        });
    }
    let z = C64::new(b.b1, b.b2) / denom;
    let norm = 1.0 + z.norm_sqr();
    let state = vec![
        C64::new(1.0 / norm, 0.0),
        z * (core::f64::consts::SQRT_2 / norm),
        z * z / norm,
    ];
    Ok(BandState {
        band: Band::integer(1),
        energy: mag,
        state,
    })
}
