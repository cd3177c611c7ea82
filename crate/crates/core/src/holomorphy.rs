//! Almost-complex-map and Cauchy-Riemann residuals for maps between charted
//! almost complex manifolds.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geom::{eval_field, fd_jacobian, max_abs, standard_acs, ChartPoint, FdConfig, TensorFieldSpec};

type MapFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
pub struct ChartedMap {
    pub source_dim: usize,
    pub target_dim: usize,
    map: Arc<MapFn>,
    pub source_acs: TensorFieldSpec,
    pub target_acs: TensorFieldSpec,
}

impl fmt::Debug for ChartedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartedMap")
            .field("source_dim", &self.source_dim)
            .field("target_dim", &self.target_dim)
            .finish_non_exhaustive()
    }
}

impl ChartedMap {
    pub fn new<F>(
        source_acs: TensorFieldSpec,
        target_acs: TensorFieldSpec,
        map: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let (source_dim, target_dim) = (source_acs.chart_dim(), target_acs.chart_dim());
        for d in [source_dim, target_dim] {
            if d % 2 == 1 {
                return Err(Error::OddDimension(d));
            }
        }
        Ok(ChartedMap {
            source_dim,
            target_dim,
            map: Arc::new(map),
            source_acs,
            target_acs,
        })
    }

    /// Map between `C^m` and `C^n` with the coordinate structure on both
    /// sides (`J d/dx = d/dy`).
    pub fn standard<F>(source_dim: usize, target_dim: usize, map: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(
            TensorFieldSpec::constant(source_dim, standard_acs(source_dim)),
            TensorFieldSpec::constant(target_dim, standard_acs(target_dim)),
            map,
        )
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (self.map)(p)
    }

    pub fn differential(&self, p: &ChartPoint, cfg: &FdConfig) -> Result<DMatrix<f64>> {
        let d = fd_jacobian(|x| self.apply(x), p, cfg)?;
        if d.nrows() != self.target_dim {
            return Err(Error::DimensionMismatch {
                context: "charted map output".into(),
                expected: self.target_dim,
                found: d.nrows(),
            });
        }
        Ok(d)
    }
}

/// `|D J1(p) - J2(phi(p)) D|_F`.
pub fn almost_complex_residual(cm: &ChartedMap, p: &ChartPoint, cfg: &FdConfig) -> Result<f64> {
    let d = cm.differential(p, cfg)?;
    let j1 = eval_field(&cm.source_acs, p)?;
    let j2 = eval_field(&cm.target_acs, &ChartPoint::new(cm.apply(p.coords()))?)?;
    Ok((&d * j1 - j2 * &d).norm())
}

const STANDARD_TOL: f64 = 1e-12;

/// Largest violation of the Cauchy-Riemann equations
/// `da_j/dx_i = db_j/dy_i` and `da_j/dy_i = -db_j/dx_i`, where `a_j`, `b_j` are
/// the real and imaginary parts of the `j`-th output coordinate.
pub fn cauchy_riemann_residual(cm: &ChartedMap, p: &ChartPoint, cfg: &FdConfig) -> Result<f64> {
    let j1 = eval_field(&cm.source_acs, p)?;
    let j2 = eval_field(&cm.target_acs, &ChartPoint::new(cm.apply(p.coords()))?)?;
    if max_abs(&(j1 - standard_acs(cm.source_dim))) > STANDARD_TOL
        || max_abs(&(j2 - standard_acs(cm.target_dim))) > STANDARD_TOL
    {
        return Err(Error::NotStandardStructure);
    }
    let d = cm.differential(p, cfg)?;
    let mut worst: f64 = 0.0;
    for j in 0..cm.target_dim / 2 {
        let (a, b) = (2 * j, 2 * j + 1);
        for i in 0..cm.source_dim / 2 {
            let (x, y) = (2 * i, 2 * i + 1);
            worst = worst.max((d[(a, x)] - d[(b, y)]).abs());
            worst = worst.max((d[(a, y)] + d[(b, x)]).abs());
        }
    }
    Ok(worst)
}
