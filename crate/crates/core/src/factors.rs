//! Conjugate-pair bookkeeping, factor recovery and realification.
//!
//! Complex eigenvalues of the defining eigenproblems come in conjugate pairs
//! `(ℓ, ℓ̃)` with `â_ℓ̃ = κ conj(â_ℓ)`, `b̂_ℓ̃ = κ conj(b̂_ℓ)` and
//! `x̂_{t,ℓ̃} = conj(x̂_{t,ℓ})` for a sign `κ`. Each pair contributes a real
//! matrix, so `d̂` real univariate series (real columns plus the real and
//! imaginary parts of one member per pair) carry all the dynamics.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimate::CpEstimate;
use crate::linalg::{kron_vec, pinv_complex, C64};
use crate::series::MatrixSeries;

/// Imaginary parts of real factor columns up to this size are dropped silently.
pub const IMAG_DISCARD: f64 = 1e-8;
/// Beyond this the column is not treated as real.
pub const IMAG_REJECT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConjugatePair {
    /// Member with positive imaginary part.
    pub index: usize,
    pub partner: usize,
    /// `±1`.
    pub kappa: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairMap {
    pub pairs: Vec<ConjugatePair>,
    pub reals: Vec<usize>,
}

impl PairMap {
    pub fn len(&self) -> usize {
        self.reals.len() + 2 * self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Splits eigenvalue indices into real ones and conjugate pairs.
pub fn pair_conjugates(eigenvalues: &[C64], tol: f64) -> Result<PairMap> {
    let mut map = PairMap::default();
    let mut used = alloc::vec![false; eigenvalues.len()];
    for (k, z) in eigenvalues.iter().enumerate() {
        if used[k] {
            continue;
        }
        if z.im.abs() <= tol * (1.0 + z.norm()) {
            used[k] = true;
            map.reals.push(k);
            continue;
        }
        let target = z.conj();
        let partner = (0..eigenvalues.len())
            .filter(|&j| !used[j] && j != k)
            .filter(|&j| (eigenvalues[j] - target).norm() <= tol * (1.0 + z.norm()))
            .min_by(|&a, &b| {
                (eigenvalues[a] - target)
                    .norm()
                    .total_cmp(&(eigenvalues[b] - target).norm())
            })
            .ok_or(Error::UnmatchedComplexEigenvalue { index: k })?;
        used[k] = true;
        used[partner] = true;
        let (index, partner) = if z.im > 0.0 { (k, partner) } else { (partner, k) };
        map.pairs.push(ConjugatePair {
            index,
            partner,
            kappa: 1,
        });
    }
    Ok(map)
}

/// Picks `κ ∈ {-1, 1}` minimizing `|â_ℓ̃ - κ conj(â_ℓ)|` for every pair.
pub fn assign_kappa(map: &mut PairMap, a: &DMatrix<C64>) {
    for pair in map.pairs.iter_mut() {
        let conj: DVector<C64> = a.column(pair.index).map(|z| z.conj());
        let tilde = a.column(pair.partner);
        let plus = (tilde - &conj).norm();
        let minus = (tilde + &conj).norm();
        pair.kappa = if minus < plus { -1 } else { 1 };
    }
}

/// `Ĥ = (b̂_1 ⊗ â_1, …, b̂_d ⊗ â_d)`.
pub fn khatri_rao(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let d = a.ncols();
    let mut h = DMatrix::zeros(a.nrows() * b.nrows(), d);
    for l in 0..d {
        let col = kron_vec(&b.column(l).into_owned(), &a.column(l).into_owned());
        h.set_column(l, &col);
    }
    h
}

/// Factor series `x̂_t = Ĥ⁺ vec(Y_t)` as an `n x d̂` matrix.
pub fn recover_factors(series: &MatrixSeries, a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if a.nrows() != series.p() || b.nrows() != series.q() || a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "loadings {:?} and {:?} do not fit a {}x{} series",
            a.shape(),
            b.shape(),
            series.p(),
            series.q()
        )));
    }
    let d = a.ncols();
    let h = khatri_rao(a, b);
    let (h_pinv, rank) = pinv_complex(&h);
    if rank < d {
        return Err(Error::RankDeficientLoadings { rank, expected: d });
    }
    let pq = series.p() * series.q();
    let n = series.n();
    let data = DMatrix::from_fn(pq, n, |r, t| C64::new(series.slice(t).as_slice()[r], 0.0));
    Ok((h_pinv * data).transpose())
}

/// Where each realified series comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// A real factor column.
    Real { column: usize },
    /// Real part of column `index`; its partner is the conjugate.
    PairRe { index: usize, partner: usize },
    /// Imaginary part of column `index`.
    PairIm { index: usize, partner: usize },
}

/// `d̂` real series plus the recipe to rebuild the complex factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Realified {
    pub series: Vec<Vec<f64>>,
    pub components: Vec<Component>,
    pub d_hat: usize,
}

impl Realified {
    /// Rebuilds the `d̂` complex factor values from one value per realified series.
    pub fn recombine(&self, values: &[f64]) -> Vec<C64> {
        let mut x = alloc::vec![C64::new(0.0, 0.0); self.d_hat];
        for (c, v) in self.components.iter().zip(values) {
            match *c {
                Component::Real { column } => x[column] = C64::new(*v, 0.0),
                Component::PairRe { index, partner } => {
                    x[index].re = *v;
                    x[partner].re = *v;
                }
                Component::PairIm { index, partner } => {
                    x[index].im = *v;
                    x[partner].im = -*v;
                }
            }
        }
        x
    }
}

/// Realifies the factor series of `est` (see module docs).
pub fn realify(est: &CpEstimate) -> Result<Realified> {
    realify_factors(&est.factors, &est.pairs)
}

pub fn realify_factors(factors: &DMatrix<C64>, pairs: &PairMap) -> Result<Realified> {
    let d = factors.ncols();
    if pairs.len() != d {
        return Err(Error::ShapeMismatch(alloc::format!(
            "pair map covers {} columns, factors have {d}",
            pairs.len()
        )));
    }
    let mut series = Vec::with_capacity(d);
    let mut components = Vec::with_capacity(d);
    for &column in &pairs.reals {
        let col = factors.column(column);
        let magnitude = col.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if magnitude > IMAG_REJECT {
            return Err(Error::ResidualImaginaryPart { column, magnitude });
        }
        if magnitude > IMAG_DISCARD {
            log::warn!("factor column {column} carries imaginary residue {magnitude:e}");
        }
        series.push(col.iter().map(|z| z.re).collect());
        components.push(Component::Real { column });
    }
    for pair in &pairs.pairs {
        let col = factors.column(pair.index);
        series.push(col.iter().map(|z| z.re).collect());
        components.push(Component::PairRe {
            index: pair.index,
            partner: pair.partner,
        });
        series.push(col.iter().map(|z| z.im).collect());
        components.push(Component::PairIm {
            index: pair.index,
            partner: pair.partner,
        });
    }
    Ok(Realified {
        series,
        components,
        d_hat: d,
    })
}
