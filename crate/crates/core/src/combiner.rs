//! Frequency-flat analog combiner `W` (M × N_RF).
//!
//! The random kind draws i.i.d. uniform phases from a SplitMix64 stream in
//! row-major order (element outer, RF chain inner), one 53-bit uniform per
//! entry: `W[m,n] = exp(j 2π u) / √M`. The identity kind is the full-array
//! reference `W = I_M`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, Dyn};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMatrix, CVector, C64};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CombinerKind {
    RandomConstantModulus { seed: u64 },
    Identity,
}

#[derive(Debug, Clone)]
pub struct Combiner {
    kind: CombinerKind,
    w: CMatrix,
    gram: CMatrix,
    gram_factor: Option<Cholesky<C64, Dyn>>,
}

impl Combiner {
    /// Random constant-modulus combiner, bit-identical for identical inputs.
    pub fn random(elements: usize, rf_chains: usize, seed: u64) -> Result<Self> {
        if rf_chains == 0 || rf_chains > elements {
            return invalid(format!("need 1 <= N_RF <= M, got N_RF = {rf_chains}, M = {elements}"));
        }
        let mut rng = SplitMix64::new(seed);
        let scale = 1.0 / (elements as f64).sqrt();
        let mut w = CMatrix::zeros(elements, rf_chains);
        for m in 0..elements {
            for n in 0..rf_chains {
                w[(m, n)] = C64::from_polar(scale, 2.0 * PI * rng.next_f64());
            }
        }
        let gram = w.ad_mul(&w);
        let factor = Cholesky::new(gram.clone()).ok_or_else(|| {
            Error::InvalidArgument(format!("W^H W is singular for seed {seed} (M = {elements}, N_RF = {rf_chains})"))
        })?;
        Ok(Self { kind: CombinerKind::RandomConstantModulus { seed }, w, gram, gram_factor: Some(factor) })
    }

    /// Full-array access, `W = I_M`.
    pub fn identity(elements: usize) -> Result<Self> {
        if elements == 0 {
            return invalid("identity combiner needs at least one element");
        }
        let eye = CMatrix::identity(elements, elements);
        Ok(Self { kind: CombinerKind::Identity, w: eye.clone(), gram: eye, gram_factor: None })
    }

    pub fn kind(&self) -> CombinerKind {
        self.kind
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, CombinerKind::Identity)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    /// Cached `W^H W`.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn elements(&self) -> usize {
        self.w.nrows()
    }

    pub fn rf_chains(&self) -> usize {
        self.w.ncols()
    }

    /// `W^H a`.
    pub fn compress(&self, a: &CVector) -> Result<CVector> {
        if a.len() != self.elements() {
            return invalid(format!("vector has {} entries, combiner expects {}", a.len(), self.elements()));
        }
        Ok(if self.is_identity() { a.clone() } else { self.w.ad_mul(a) })
    }

    /// `W^H X` for a block of column vectors.
    pub(crate) fn compress_columns(&self, x: CMatrix) -> CMatrix {
        if self.is_identity() {
            x
        } else {
            self.w.ad_mul(&x)
        }
    }

    /// `(W^H W)^{-1} X`.
    pub(crate) fn gram_solve(&self, x: &CMatrix) -> CMatrix {
        match &self.gram_factor {
            Some(f) => f.solve(x),
            None => x.clone(),
        }
    }

    pub fn gram_min_eigenvalue(&self) -> f64 {
        if self.is_identity() {
            1.0
        } else {
            hermitian_eigenvalues(&self.gram)[0]
        }
    }
}
