//! Unit cells in Cartesian and fractional form.
//!
//! A crystal is a finite cell `(A, X, L)` repeated over the lattice spanned by
//! the columns of `L`: every atom `i` appears at `x_i + L k` for all
//! `k ∈ Z³`. The fractional view stores `F = L⁻¹ X` with entries wrapped into
//! `[0, 1)`, which pins down each atom's representative uniquely.
//!
//! ```
//! use crystal_tc0::crystal::{frac_to_cartesian, FracUnitCell};
//! use nalgebra::{DMatrix, Matrix3, Matrix3xX};
//!
//! let lattice = Matrix3::from_diagonal(&[2.0, 3.0, 4.0].into());
//! let frac = Matrix3xX::from_column_slice(&[0.5, 1.0 / 3.0, 0.25]);
//! let cell = FracUnitCell::new(DMatrix::zeros(1, 1), frac, lattice).unwrap();
//! let cart = frac_to_cartesian(&cell);
//! assert!((cart.cart.column(0) - nalgebra::Vector3::new(1.0, 1.0, 1.0)).norm() < 1e-15);
//! ```

use nalgebra::{DMatrix, Matrix3, Matrix3xX, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DET_EPS: f64 = 1e-10;
pub const CRYSTAL_SCHEMA_VERSION: u32 = 1;
/// Fractional entries this far below 0 are treated as 0 when not wrapping.
pub const FRAC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrystalError {
    #[error("lattice is singular: |det L| = {det:e} <= {eps:e}")]
    SingularLattice { det: f64, eps: f64 },
    #[error("fractional coordinate F[{row}, {col}] = {value} is outside [0, 1)")]
    FracOutOfRange { row: usize, col: usize, value: f64 },
    #[error("{what} has shape {found}, expected {expected}")]
    Shape { what: &'static str, expected: String, found: String },
    #[error("{what} contains a non-finite entry")]
    NonFinite { what: &'static str },
    #[error("crystal json: {0}")]
    Schema(String),
}

impl CrystalError {
    /// Malformed documents, as opposed to well-formed ones with bad values.
    pub fn is_schema(&self) -> bool {
        matches!(self, CrystalError::Schema(_) | CrystalError::Shape { .. })
    }
}

/// Checks that the lattice vectors (columns of `l`) are independent.
/// Returns the determinant.
pub fn validate_lattice(l: &Matrix3<f64>, eps: f64) -> Result<f64, CrystalError> {
    if l.iter().any(|v| !v.is_finite()) {
        return Err(CrystalError::NonFinite { what: "lattice" });
    }
    let det = l.determinant();
    if det.abs() <= eps {
        return Err(CrystalError::SingularLattice { det, eps });
    }
    Ok(det)
}

/// Cartesian cell `(A, X, L)`: `A` is `h × n`, `X` is `3 × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCell {
    pub descriptors: DMatrix<f64>,
    pub cart: Matrix3xX<f64>,
    pub lattice: Matrix3<f64>,
}

/// Fractional cell `(A, F, L)` with every entry of `F` in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracUnitCell {
    descriptors: DMatrix<f64>,
    frac: Matrix3xX<f64>,
    lattice: Matrix3<f64>,
}

impl UnitCell {
    pub fn new(descriptors: DMatrix<f64>, cart: Matrix3xX<f64>, lattice: Matrix3<f64>) -> Result<Self, CrystalError> {
        check_columns(&descriptors, cart.ncols())?;
        validate_lattice(&lattice, DEFAULT_DET_EPS)?;
        Ok(UnitCell { descriptors, cart, lattice })
    }

    pub fn num_atoms(&self) -> usize {
        self.cart.ncols()
    }
}

fn check_columns(descriptors: &DMatrix<f64>, n: usize) -> Result<(), CrystalError> {
    if descriptors.ncols() != n {
        return Err(CrystalError::Shape {
            what: "descriptors",
            expected: format!("h x {n}"),
            found: format!("{} x {}", descriptors.nrows(), descriptors.ncols()),
        });
    }
    if descriptors.iter().any(|v| !v.is_finite()) {
        return Err(CrystalError::NonFinite { what: "descriptors" });
    }
    Ok(())
}

impl FracUnitCell {
    pub fn new(descriptors: DMatrix<f64>, frac: Matrix3xX<f64>, lattice: Matrix3<f64>) -> Result<Self, CrystalError> {
        Self::with_eps(descriptors, frac, lattice, DEFAULT_DET_EPS)
    }

    pub fn with_eps(
        descriptors: DMatrix<f64>,
        frac: Matrix3xX<f64>,
        lattice: Matrix3<f64>,
        eps: f64,
    ) -> Result<Self, CrystalError> {
        check_columns(&descriptors, frac.ncols())?;
        validate_lattice(&lattice, eps)?;
        for (col, c) in frac.column_iter().enumerate() {
            for (row, &value) in c.iter().enumerate() {
                if !value.is_finite() {
                    return Err(CrystalError::NonFinite { what: "frac_coords" });
                }
                if !(0.0..1.0).contains(&value) {
                    return Err(CrystalError::FracOutOfRange { row, col, value });
                }
            }
        }
        Ok(FracUnitCell { descriptors, frac, lattice })
    }

    pub fn descriptors(&self) -> &DMatrix<f64> {
        &self.descriptors
    }

    pub fn frac(&self) -> &Matrix3xX<f64> {
        &self.frac
    }

    pub fn lattice(&self) -> &Matrix3<f64> {
        &self.lattice
    }

    pub fn num_atoms(&self) -> usize {
        self.frac.ncols()
    }

    pub fn descriptor_dim(&self) -> usize {
        self.descriptors.nrows()
    }

    /// Same atoms listed in a different order: new atom `t` is old atom `perm[t]`.
    pub fn permuted(&self, perm: &[usize]) -> FracUnitCell {
        assert_eq!(perm.len(), self.num_atoms());
        FracUnitCell {
            descriptors: self.descriptors.select_columns(perm),
            frac: Matrix3xX::from_columns(&perm.iter().map(|&i| self.frac.column(i).into_owned()).collect::<Vec<_>>()),
            lattice: self.lattice,
        }
    }

    pub fn with_lattice(&self, lattice: Matrix3<f64>) -> Result<FracUnitCell, CrystalError> {
        FracUnitCell::new(self.descriptors.clone(), self.frac.clone(), lattice)
    }

    pub fn with_frac(&self, frac: Matrix3xX<f64>) -> Result<FracUnitCell, CrystalError> {
        FracUnitCell::new(self.descriptors.clone(), frac, self.lattice)
    }
}

/// `X = L F`.
pub fn frac_to_cartesian(c: &FracUnitCell) -> UnitCell {
    UnitCell { descriptors: c.descriptors.clone(), cart: c.lattice * &c.frac, lattice: c.lattice }
}

/// `F = L⁻¹ X`, optionally reduced mod 1 into `[0, 1)`.
///
/// Without wrapping, entries that come out in `[-FRAC_TOLERANCE, 0)` from
/// solver round-off are set to 0; anything else outside `[0, 1)` is an error.
pub fn cartesian_to_frac(c: &UnitCell, wrap: bool) -> Result<FracUnitCell, CrystalError> {
    validate_lattice(&c.lattice, DEFAULT_DET_EPS)?;
    let lu = c.lattice.lu();
    let mut frac = lu
        .solve(&c.cart)
        .ok_or(CrystalError::SingularLattice { det: c.lattice.determinant(), eps: DEFAULT_DET_EPS })?;
    for v in frac.iter_mut() {
        *v = if wrap {
            wrap_unit(*v)
        } else if (-FRAC_TOLERANCE..0.0).contains(v) {
            0.0
        } else {
            *v
        };
    }
    FracUnitCell::new(c.descriptors.clone(), frac, c.lattice)
}

/// `x mod 1` in `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // A tiny negative x gives 1 - ε, which can round to exactly 1.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Fractional,
    Cartesian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomImage {
    pub atom: usize,
    pub shift: [i64; 3],
    /// `f_i + k` or `x_i + L k`, depending on the view.
    pub position: Vector3<f64>,
}

/// All images with `k ∈ {-r..r}³`, ordered by atom, then `k` lexicographically.
pub fn enumerate_images(c: &FracUnitCell, radius_shells: u32, view: View) -> Vec<AtomImage> {
    let r = radius_shells as i64;
    let side = (2 * r + 1) as usize;
    let cart = match view {
        View::Cartesian => Some(frac_to_cartesian(c).cart),
        View::Fractional => None,
    };
    let mut out = Vec::with_capacity(c.num_atoms() * side.pow(3));
    for atom in 0..c.num_atoms() {
        for k0 in -r..=r {
            for k1 in -r..=r {
                for k2 in -r..=r {
                    let k = Vector3::new(k0 as f64, k1 as f64, k2 as f64);
                    let position = match &cart {
                        Some(x) => x.column(atom) + c.lattice * k,
                        None => c.frac.column(atom) + k,
                    };
                    out.push(AtomImage { atom, shift: [k0, k1, k2], position });
                }
            }
        }
    }
    out
}

/// On-disk crystal. `lattice[i]` is the `i`-th lattice vector, i.e. column
/// `i` of `L`; `frac_coords[j]` is `f_j` and `descriptors[j]` is column `j`
/// of `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalDoc {
    pub schema_version: u32,
    pub descriptors: Vec<Vec<f64>>,
    pub frac_coords: Vec<[f64; 3]>,
    pub lattice: [[f64; 3]; 3],
}

impl CrystalDoc {
    pub fn from_cell(c: &FracUnitCell) -> Self {
        CrystalDoc {
            schema_version: CRYSTAL_SCHEMA_VERSION,
            descriptors: c.descriptors.column_iter().map(|col| col.iter().copied().collect()).collect(),
            frac_coords: c.frac.column_iter().map(|col| [col[0], col[1], col[2]]).collect(),
            lattice: std::array::from_fn(|i| [c.lattice[(0, i)], c.lattice[(1, i)], c.lattice[(2, i)]]),
        }
    }

    pub fn into_cell(self) -> Result<FracUnitCell, CrystalError> {
        if self.schema_version != CRYSTAL_SCHEMA_VERSION {
            return Err(CrystalError::Schema(format!("unsupported schema_version {}", self.schema_version)));
        }
        let n = self.frac_coords.len();
        if self.descriptors.len() != n {
            return Err(CrystalError::Shape {
                what: "descriptors",
                expected: format!("{n} atoms"),
                found: format!("{} atoms", self.descriptors.len()),
            });
        }
        let h = self.descriptors.first().map_or(0, Vec::len);
        if let Some((j, d)) = self.descriptors.iter().enumerate().find(|(_, d)| d.len() != h) {
            return Err(CrystalError::Shape {
                what: "descriptors",
                expected: format!("{h} entries for atom {j}"),
                found: format!("{}", d.len()),
            });
        }
        let a = DMatrix::from_fn(h, n, |r, c| self.descriptors[c][r]);
        let f = Matrix3xX::from_fn(n, |r, c| self.frac_coords[c][r]);
        let l = Matrix3::from_fn(|r, c| self.lattice[c][r]);
        FracUnitCell::new(a, f, l)
    }
}

pub fn load_crystal_json(s: &str) -> Result<FracUnitCell, CrystalError> {
    let doc: CrystalDoc = serde_json::from_str(s).map_err(|e| CrystalError::Schema(e.to_string()))?;
    doc.into_cell()
}

pub fn crystal_to_json(c: &FracUnitCell) -> String {
    serde_json::to_string_pretty(&CrystalDoc::from_cell(c)).expect("crystal serializes")
}

/// 2-norm condition number of a lattice.
pub fn condition_number(l: &Matrix3<f64>) -> f64 {
    let sv = l.singular_values();
    sv.max() / sv.min()
}

/// A random lattice with condition number at most `max_cond`, by rejection.
pub fn random_lattice<R: Rng + ?Sized>(rng: &mut R, max_cond: f64) -> Matrix3<f64> {
    loop {
        let l = Matrix3::from_fn(|r, c| {
            let off = rng.random_range(-1.0..1.0);
            if r == c {
                rng.random_range(2.0..6.0) + off
            } else {
                off
            }
        });
        if condition_number(&l) <= max_cond && l.determinant().abs() > DEFAULT_DET_EPS {
            return l;
        }
    }
}

/// Random fractional cell with `n` atoms and `h`-dimensional descriptors.
pub fn random_cell<R: Rng + ?Sized>(rng: &mut R, n: usize, h: usize) -> FracUnitCell {
    let lattice = random_lattice(rng, 1e3);
    let frac = Matrix3xX::from_fn(n, |_, _| rng.random_range(0.0..1.0));
    let descriptors = DMatrix::from_fn(h, n, |_, _| rng.random_range(-1.0..1.0));
    FracUnitCell::new(descriptors, frac, lattice).expect("sampled cell is valid")
}
