//! The boundary coefficient β and the source term f.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::simplex_rule;

/// Reentrant coordinate → value mapping.
pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Nonnegative bounded coefficient on ∂Ω.
#[derive(Clone)]
pub enum BoundaryField {
    Constant(f64),
    /// One value per entry of `mesh.boundary_facets()`.
    PerFacet(Vec<f64>),
    Closure(ScalarFn),
}

/// Right-hand side f on Ω.
#[derive(Clone)]
pub enum SourceField {
    Constant(f64),
    Closure(ScalarFn),
}

impl fmt::Debug for BoundaryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryField::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            BoundaryField::PerFacet(v) => f.debug_tuple("PerFacet").field(&v.len()).finish(),
            BoundaryField::Closure(_) => f.write_str("Closure(..)"),
        }
    }
}

impl fmt::Debug for SourceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceField::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            SourceField::Closure(_) => f.write_str("Closure(..)"),
        }
    }
}

impl BoundaryField {
    pub fn closure(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryField::Closure(Arc::new(f))
    }

    /// β at `point` of boundary facet `facet`. Negative or non-finite values
    /// are rejected here, where they are first observed.
    pub fn eval_boundary(&self, facet: usize, point: &Point) -> Result<f64> {
        let value = match self {
            BoundaryField::Constant(v) => *v,
            BoundaryField::PerFacet(values) => *values.get(facet).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "per-facet field has {} values, facet {facet} requested",
                    values.len()
                ))
            })?,
            BoundaryField::Closure(f) => f(point),
        };
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidCoefficient { facet, value });
        }
        Ok(value)
    }

    /// True when the field is identically zero without sampling.
    pub fn is_trivially_zero(&self) -> bool {
        match self {
            BoundaryField::Constant(v) => *v == 0.0,
            BoundaryField::PerFacet(values) => values.iter().all(|&v| v == 0.0),
            BoundaryField::Closure(_) => false,
        }
    }

    fn check_len(&self, mesh: &Mesh) -> Result<()> {
        if let BoundaryField::PerFacet(values) = self {
            if values.len() != mesh.boundary_facets().len() {
                return Err(Error::InvalidArgument(format!(
                    "per-facet field has {} values but the mesh has {} boundary facets",
                    values.len(),
                    mesh.boundary_facets().len()
                )));
            }
        }
        Ok(())
    }
}

impl SourceField {
    pub fn closure(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        SourceField::Closure(Arc::new(f))
    }

    pub fn eval(&self, point: &Point) -> f64 {
        match self {
            SourceField::Constant(v) => *v,
            SourceField::Closure(f) => f(point),
        }
    }
}

/// Evaluates `visit(facet, value)` at every boundary sample point: the facet
/// vertices together with the facet quadrature points.
fn for_each_boundary_sample(
    field: &BoundaryField,
    mesh: &Mesh,
    quad_order: usize,
    mut visit: impl FnMut(usize, f64),
) -> Result<()> {
    field.check_len(mesh)?;
    let rule = simplex_rule(mesh.dim() - 1, quad_order)?;
    for f in 0..mesh.boundary_facets().len() {
        let pts = mesh.facet_points(f);
        for p in pts.iter().copied().chain(rule.iter().map(|q| q.map(&pts))) {
            visit(f, field.eval_boundary(f, &p)?);
        }
    }
    Ok(())
}

/// Sampled ‖a − b‖_{∞,∂Ω}; exact for constant and per-facet fields.
pub fn boundary_sup_diff(a: &BoundaryField, b: &BoundaryField, mesh: &Mesh, quad_order: usize) -> Result<f64> {
    let mut va = Vec::new();
    for_each_boundary_sample(a, mesh, quad_order, |_, v| va.push(v))?;
    let mut sup = 0.0f64;
    let mut i = 0;
    for_each_boundary_sample(b, mesh, quad_order, |_, v| {
        sup = sup.max((va[i] - v).abs());
        i += 1;
    })?;
    Ok(sup)
}

/// Sampled sup of β over ∂Ω.
pub fn boundary_sup(field: &BoundaryField, mesh: &Mesh, quad_order: usize) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for_each_boundary_sample(field, mesh, quad_order, |_, v| sup = sup.max(v))?;
    Ok(sup)
}

/// Sampled inf of β over ∂Ω.
pub fn boundary_inf(field: &BoundaryField, mesh: &Mesh, quad_order: usize) -> Result<f64> {
    let mut inf = f64::INFINITY;
    for_each_boundary_sample(field, mesh, quad_order, |_, v| inf = inf.min(v))?;
    Ok(inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_unit_square_mesh};

    #[test]
    fn evaluation_kinds() {
        let sq = build_unit_square_mesh(2).unwrap();
        assert_eq!(BoundaryField::Constant(1.0).eval_boundary(3, &[0.2, 0.0, 0.0]).unwrap(), 1.0);
        let per = BoundaryField::PerFacet(vec![0.5, 2.0]);
        assert_eq!(per.eval_boundary(1, &[1.0, 0.0, 0.0]).unwrap(), 2.0);
        let cl = BoundaryField::closure(|x| x[0] + 1.0);
        assert_eq!(cl.eval_boundary(0, &[0.25, 0.0, 0.0]).unwrap(), 1.25);
        assert!(boundary_sup(&per, &sq, 2).is_err());
    }

    #[test]
    fn negative_coefficient_rejected_at_evaluation() {
        let neg = BoundaryField::closure(|x| x[0] - 0.5);
        assert!(matches!(
            neg.eval_boundary(0, &[0.0, 0.0, 0.0]),
            Err(Error::InvalidCoefficient { .. })
        ));
        assert!(neg.eval_boundary(0, &[0.75, 0.0, 0.0]).is_ok());
        assert!(BoundaryField::Constant(f64::NAN).eval_boundary(0, &[0.0; 3]).is_err());
        let sq = build_unit_square_mesh(2).unwrap();
        assert!(boundary_sup(&neg, &sq, 2).is_err());
    }

    #[test]
    fn sup_diff_examples() {
        let m = build_unit_square_mesh(3).unwrap();
        let three = BoundaryField::Constant(3.0);
        assert_eq!(boundary_sup_diff(&three, &three, &m, 2).unwrap(), 0.0);
        let d = boundary_sup_diff(&BoundaryField::Constant(1.0), &BoundaryField::Constant(1.5), &m, 2).unwrap();
        assert_eq!(d, 0.5);
        let beta = |k: usize| BoundaryField::Constant(1.0 + 1.0 / (k as f64 + 1.0));
        assert!((boundary_sup_diff(&beta(1), &beta(3), &m, 1).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sup_and_inf() {
        let m = build_interval_mesh(2).unwrap();
        assert_eq!(boundary_sup(&BoundaryField::Constant(2.0), &m, 1).unwrap(), 2.0);
        let per = BoundaryField::PerFacet(vec![0.1, 7.0]);
        assert_eq!(boundary_sup(&per, &m, 2).unwrap(), 7.0);
        assert_eq!(boundary_inf(&per, &m, 2).unwrap(), 0.1);

        // Brute force: the largest x over all facet vertices and Gauss points.
        let sq = build_unit_square_mesh(4).unwrap();
        let x = BoundaryField::closure(|p| p[0]);
        let rule = simplex_rule(1, 2).unwrap();
        let mut brute = f64::NEG_INFINITY;
        for f in 0..sq.boundary_facets().len() {
            let pts = sq.facet_points(f);
            for p in pts.iter().copied().chain(rule.iter().map(|q| q.map(&pts))) {
                brute = brute.max(p[0]);
            }
        }
        assert_eq!(boundary_sup(&x, &sq, 2).unwrap(), brute);
        assert!((brute - 1.0).abs() < 1e-15);
        assert_eq!(boundary_inf(&x, &sq, 2).unwrap(), 0.0);
    }

    #[test]
    fn constant_norms_independent_of_order() {
        let m = build_unit_square_mesh(3).unwrap();
        let a = BoundaryField::Constant(1.25);
        let b = BoundaryField::Constant(0.5);
        let reference = boundary_sup_diff(&a, &b, &m, 1).unwrap();
        for order in 2..=4 {
            assert_eq!(boundary_sup_diff(&a, &b, &m, order).unwrap(), reference);
            assert_eq!(boundary_sup(&a, &m, order).unwrap(), 1.25);
        }
    }

    #[test]
    fn sup_diff_is_a_metric_on_samples() {
        let m = build_unit_square_mesh(3).unwrap();
        let fields = [
            BoundaryField::closure(|p| p[0] * p[0] + 0.5),
            BoundaryField::closure(|p| 2.0 - p[1]),
            BoundaryField::Constant(0.75),
            BoundaryField::PerFacet((0..12).map(|i| i as f64 * 0.1).collect()),
        ];
        for a in &fields {
            assert_eq!(boundary_sup_diff(a, a, &m, 2).unwrap(), 0.0);
            for b in &fields {
                let ab = boundary_sup_diff(a, b, &m, 2).unwrap();
                assert_eq!(ab, boundary_sup_diff(b, a, &m, 2).unwrap());
                for c in &fields {
                    let ac = boundary_sup_diff(a, c, &m, 2).unwrap();
                    let cb = boundary_sup_diff(c, b, &m, 2).unwrap();
                    assert!(ab <= ac + cb + 1e-15);
                }
            }
        }
    }
}
