//! Solution-level quantities: sup and L^p norms on Ω̄ and ∂Ω, the H¹ norm,
//! traces, the truncation `(|u| − k)⁺ sgn u`, and level-set measures of
//! `{|u| > k}`.

use crate::assembly::{assemble_mass, assemble_stiffness};
use crate::error::{invalid, Error, Result};
use crate::fields::{BoundaryField, SourceField};
use crate::mesh::{boundary_vertex_indices, Mesh, Point};
use crate::quadrature::{simplex_rule, QuadPoint};

/// Default rule for level-set indicator sampling.
pub const LEVEL_SET_QUAD_ORDER: usize = 2;

/// P1 function given by its nodal values on `mesh`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution<'m> {
    mesh: &'m Mesh,
    values: Vec<f64>,
}

impl<'m> DiscreteSolution<'m> {
    pub fn new(mesh: &'m Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(invalid(format!(
                "{} nodal values for a mesh with {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("nodal values must be finite"));
        }
        Ok(DiscreteSolution { mesh, values })
    }

    pub fn constant(mesh: &'m Mesh, c: f64) -> Self {
        DiscreteSolution { mesh, values: vec![c; mesh.num_vertices()] }
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate(mesh: &'m Mesh, g: impl Fn(&Point) -> f64) -> Result<Self> {
        Self::new(mesh, mesh.vertices().iter().map(g).collect())
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `self − other`; both must live on the same mesh.
    pub fn difference(&self, other: &DiscreteSolution<'_>) -> Result<DiscreteSolution<'m>> {
        if self.mesh.num_vertices() != other.mesh.num_vertices() {
            return Err(invalid("solutions live on different meshes"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(DiscreteSolution { mesh: self.mesh, values })
    }

    pub fn scaled(&self, s: f64) -> DiscreteSolution<'m> {
        DiscreteSolution { mesh: self.mesh, values: self.values.iter().map(|v| s * v).collect() }
    }

    /// Value at a quadrature point of cell `c`.
    fn at_cell(&self, c: usize, q: &QuadPoint) -> f64 {
        self.mesh.cell(c).iter().zip(&q.bary).map(|(&v, b)| b * self.values[v]).sum()
    }

    fn at_facet(&self, f: usize, q: &QuadPoint) -> f64 {
        self.mesh.boundary_facets()[f]
            .vertices
            .iter()
            .zip(&q.bary)
            .map(|(&v, b)| b * self.values[v])
            .sum()
    }
}

/// Sobolev exponent `q = 2d/(d−2)` and trace exponent `s = 2(d−1)/(d−2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub d: usize,
    pub q: f64,
    pub s: f64,
}

pub fn exponents(d: usize) -> Result<Exponents> {
    if d < 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    let df = d as f64;
    Ok(Exponents { d, q: 2.0 * df / (df - 2.0), s: 2.0 * (df - 1.0) / (df - 2.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupRegion {
    /// All vertices (Ω̄).
    Closure,
    /// Boundary vertices (∂Ω).
    Boundary,
    /// Vertices not on the boundary.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Domain,
    Boundary,
}

/// Max of |u| over the vertices of the region; exact for P1 functions.
pub fn sup_norm(u: &DiscreteSolution<'_>, region: SupRegion) -> f64 {
    let mesh = u.mesh();
    let abs = |i: usize| u.values[i].abs();
    match region {
        SupRegion::Closure => (0..mesh.num_vertices()).map(abs).fold(0.0, f64::max),
        SupRegion::Boundary => boundary_vertex_indices(mesh).into_iter().map(abs).fold(0.0, f64::max),
        SupRegion::Interior => {
            let mut on_boundary = vec![false; mesh.num_vertices()];
            for i in boundary_vertex_indices(mesh) {
                on_boundary[i] = true;
            }
            (0..mesh.num_vertices())
                .filter(|&i| !on_boundary[i])
                .map(abs)
                .fold(0.0, f64::max)
        }
    }
}

/// Anything that can be sampled inside cells and on boundary facets.
pub trait Sampled {
    fn mesh_compatible(&self, _mesh: &Mesh) -> Result<()> {
        Ok(())
    }
    fn in_cell(&self, mesh: &Mesh, cell: usize, q: &QuadPoint) -> Result<f64>;
    fn on_facet(&self, mesh: &Mesh, facet: usize, q: &QuadPoint) -> Result<f64>;
}

impl Sampled for DiscreteSolution<'_> {
    fn mesh_compatible(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh.num_vertices() != mesh.num_vertices() {
            return Err(invalid("solution does not belong to this mesh"));
        }
        Ok(())
    }
    fn in_cell(&self, _mesh: &Mesh, cell: usize, q: &QuadPoint) -> Result<f64> {
        Ok(self.at_cell(cell, q))
    }
    fn on_facet(&self, _mesh: &Mesh, facet: usize, q: &QuadPoint) -> Result<f64> {
        Ok(self.at_facet(facet, q))
    }
}

impl Sampled for SourceField {
    fn in_cell(&self, mesh: &Mesh, cell: usize, q: &QuadPoint) -> Result<f64> {
        Ok(self.eval(&q.map(&mesh.cell_points(cell))))
    }
    fn on_facet(&self, mesh: &Mesh, facet: usize, q: &QuadPoint) -> Result<f64> {
        Ok(self.eval(&q.map(&mesh.facet_points(facet))))
    }
}

impl Sampled for BoundaryField {
    fn in_cell(&self, _mesh: &Mesh, _cell: usize, _q: &QuadPoint) -> Result<f64> {
        Err(invalid("a boundary field has no values inside the domain"))
    }
    fn on_facet(&self, mesh: &Mesh, facet: usize, q: &QuadPoint) -> Result<f64> {
        self.eval_boundary(facet, &q.map(&mesh.facet_points(facet)))
    }
}

/// Calls `visit(measure, weight, value)` for every quadrature sample of the region.
fn for_each_sample<S: Sampled + ?Sized>(
    g: &S,
    mesh: &Mesh,
    region: Region,
    quad_order: usize,
    mut visit: impl FnMut(f64, f64, f64),
) -> Result<()> {
    g.mesh_compatible(mesh)?;
    match region {
        Region::Domain => {
            let rule = simplex_rule(mesh.dim(), quad_order)?;
            for c in 0..mesh.num_cells() {
                for q in &rule {
                    visit(mesh.cell_measures()[c], q.weight, g.in_cell(mesh, c, q)?);
                }
            }
        }
        Region::Boundary => {
            let rule = simplex_rule(mesh.dim() - 1, quad_order)?;
            for (f, facet) in mesh.boundary_facets().iter().enumerate() {
                for q in &rule {
                    visit(facet.measure, q.weight, g.on_facet(mesh, f, q)?);
                }
            }
        }
    }
    Ok(())
}

/// `(∫ |g|^p)^{1/p}` over cells or boundary facets by quadrature.
pub fn lp_norm<S: Sampled + ?Sized>(g: &S, mesh: &Mesh, p: f64, region: Region, quad_order: usize) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("L^p exponent must be a finite p >= 1, got {p}")));
    }
    let mut total = 0.0;
    for_each_sample(g, mesh, region, quad_order, |m, w, v| total += m * w * v.abs().powf(p))?;
    Ok(total.powf(1.0 / p))
}

/// `sqrt(uᵀKu + uᵀMu)` with the consistent mass matrix.
pub fn h1_norm(u: &DiscreteSolution<'_>) -> Result<f64> {
    let k = assemble_stiffness(u.mesh())?;
    let m = assemble_mass(u.mesh(), false)?;
    let sq = k.quadratic_form(&u.values)? + m.quadratic_form(&u.values)?;
    Ok(sq.max(0.0).sqrt())
}

/// Nodal truncation `v_i = max(|u_i| − k, 0)·sgn(u_i)`.
pub fn truncate<'m>(u: &DiscreteSolution<'m>, k: f64) -> Result<DiscreteSolution<'m>> {
    if !(k >= 0.0) {
        return Err(invalid(format!("truncation level must be nonnegative, got {k}")));
    }
    let values = u
        .values
        .iter()
        .map(|&x| {
            let t = (x.abs() - k).max(0.0);
            if t == 0.0 {
                0.0
            } else {
                t.copysign(x)
            }
        })
        .collect();
    Ok(DiscreteSolution { mesh: u.mesh, values })
}

/// Measure of `{|u| > k}` in the region, approximated cell by cell (or facet
/// by facet) as measure × weighted fraction of quadrature points above `k`.
pub fn level_set_measure(u: &DiscreteSolution<'_>, k: f64, region: Region, quad_order: usize) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(invalid(format!("level must be nonnegative, got {k}")));
    }
    let mut total = 0.0;
    for_each_sample(u, u.mesh(), region, quad_order, |m, w, v| {
        if v.abs() > k {
            total += m * w;
        }
    })?;
    Ok(total)
}

/// Restriction of the nodal values to `boundary_vertex_indices`.
pub fn trace_values(u: &DiscreteSolution<'_>) -> Vec<f64> {
    boundary_vertex_indices(u.mesh()).into_iter().map(|i| u.values[i]).collect()
}

/// `‖u‖_{s,∂Ω} / ‖u‖_{H¹}` with `s` the trace exponent for dimension `d`: an
/// empirical lower bound for the trace-embedding constant.
pub fn trace_constant_estimate(u: &DiscreteSolution<'_>, d: usize) -> Result<f64> {
    let e = exponents(d)?;
    let h1 = h1_norm(u)?;
    if h1 == 0.0 {
        return Err(invalid("trace constant is undefined for the zero function"));
    }
    Ok(lp_norm(u, u.mesh(), e.s, Region::Boundary, 2)? / h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_unit_cube_mesh, build_unit_square_mesh};
    use proptest::prelude::*;

    #[test]
    fn exponent_table() {
        let e = exponents(3).unwrap();
        assert_eq!((e.q, e.s), (6.0, 4.0));
        let e = exponents(4).unwrap();
        assert_eq!((e.q, e.s), (4.0, 3.0));
        let e = exponents(6).unwrap();
        assert_eq!((e.q, e.s), (3.0, 2.5));
        assert_eq!(exponents(2).unwrap_err(), Error::UnsupportedDimension(2));
        for d in 3..20 {
            assert!(exponents(d).unwrap().s - 1.0 > 1.0);
        }
    }

    #[test]
    fn sup_norm_examples() {
        let m = build_unit_square_mesh(3).unwrap();
        let c = DiscreteSolution::constant(&m, 0.5);
        for r in [SupRegion::Closure, SupRegion::Boundary, SupRegion::Interior] {
            assert_eq!(sup_norm(&c, r), 0.5);
            assert_eq!(sup_norm(&DiscreteSolution::constant(&m, 0.0), r), 0.0);
        }
        let i = build_interval_mesh(2).unwrap();
        let u = DiscreteSolution::new(&i, vec![-1.0, 0.3, 0.7]).unwrap();
        assert_eq!(sup_norm(&u, SupRegion::Boundary), 1.0);
        assert_eq!(sup_norm(&u, SupRegion::Interior), 0.3);
    }

    #[test]
    fn lp_norm_examples() {
        let cube = build_unit_cube_mesh(2).unwrap();
        for p in [1.0, 2.0, 4.0, 7.5] {
            let v = lp_norm(&SourceField::Constant(1.0), &cube, p, Region::Domain, 2).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        let sq = build_unit_square_mesh(4).unwrap();
        let c = 0.7;
        let u = DiscreteSolution::constant(&sq, c);
        assert!((lp_norm(&u, &sq, 2.0, Region::Boundary, 2).unwrap() - 2.0 * c).abs() < 1e-12);
        assert_eq!(lp_norm(&SourceField::Constant(0.0), &sq, 3.0, Region::Domain, 2).unwrap(), 0.0);
        assert!(lp_norm(&u, &sq, 0.5, Region::Domain, 2).is_err());
        // Boundary fields only live on ∂Ω.
        let beta = BoundaryField::Constant(2.0);
        assert!((lp_norm(&beta, &sq, 1.0, Region::Boundary, 2).unwrap() - 8.0).abs() < 1e-12);
        assert!(lp_norm(&beta, &sq, 1.0, Region::Domain, 2).is_err());
    }

    #[test]
    fn constant_boundary_lp_norms() {
        let meshes = [build_interval_mesh(3).unwrap(), build_unit_square_mesh(3).unwrap(), build_unit_cube_mesh(2).unwrap()];
        for m in &meshes {
            let c = 1.3;
            let u = DiscreteSolution::constant(m, c);
            for p in [1.0, 2.0, 3.0, 4.0] {
                let expect = c * m.domain().boundary_measure().powf(1.0 / p);
                assert!((lp_norm(&u, m, p, Region::Boundary, 2).unwrap() - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn h1_norm_examples() {
        let sq = build_unit_square_mesh(3).unwrap();
        assert!((h1_norm(&DiscreteSolution::constant(&sq, 0.8)).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(h1_norm(&DiscreteSolution::constant(&sq, 0.0)).unwrap(), 0.0);
        let i = build_interval_mesh(2).unwrap();
        let x = DiscreteSolution::new(&i, vec![0.0, 0.5, 1.0]).unwrap();
        assert!((h1_norm(&x).unwrap() - (1.0f64 + 1.0 / 3.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn truncation_examples() {
        let i = build_interval_mesh(2).unwrap();
        let u = DiscreteSolution::new(&i, vec![-0.5, 0.2, 0.8]).unwrap();
        let v = truncate(&u, 0.3).unwrap();
        let expect = [-0.2, 0.0, 0.5];
        for (a, b) in v.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(truncate(&u, 0.0).unwrap(), u);
        assert!(truncate(&u, 0.8).unwrap().values().iter().all(|&x| x == 0.0));
        assert!(truncate(&u, -0.1).is_err());
    }

    #[test]
    fn level_set_examples() {
        let sq = build_unit_square_mesh(4).unwrap();
        let u = DiscreteSolution::constant(&sq, 0.5);
        assert!((level_set_measure(&u, 0.4, Region::Boundary, 2).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(level_set_measure(&u, 0.6, Region::Boundary, 2).unwrap(), 0.0);
        assert!((level_set_measure(&u, 0.4, Region::Domain, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_examples() {
        let i = build_interval_mesh(2).unwrap();
        let u = DiscreteSolution::new(&i, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(trace_values(&u), vec![1.0, 3.0]);
        let cube = build_unit_cube_mesh(2).unwrap();
        let c = DiscreteSolution::constant(&cube, 0.25);
        let t = trace_values(&c);
        assert_eq!(t.len(), boundary_vertex_indices(&cube).len());
        assert!(t.iter().all(|&x| x == 0.25));
    }

    #[test]
    fn trace_constant_examples() {
        let cube = build_unit_cube_mesh(2).unwrap();
        let one = DiscreteSolution::constant(&cube, 1.0);
        let r = trace_constant_estimate(&one, 3).unwrap();
        assert!((r - 6f64.powf(0.25)).abs() < 1e-12);
        assert!((r - 1.5651).abs() < 1e-4);
        let u = DiscreteSolution::interpolate(&cube, |p| p[0] * p[1] - p[2] + 0.3).unwrap();
        let r1 = trace_constant_estimate(&u, 3).unwrap();
        let r2 = trace_constant_estimate(&u.scaled(2.0), 3).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
        assert!(trace_constant_estimate(&DiscreteSolution::constant(&cube, 0.0), 3).is_err());
        assert!(trace_constant_estimate(&one, 2).is_err());
    }

    fn cube() -> &'static Mesh {
        use std::sync::OnceLock;
        static MESH: OnceLock<Mesh> = OnceLock::new();
        MESH.get_or_init(|| build_unit_cube_mesh(3).unwrap())
    }

    proptest! {
        #[test]
        fn truncation_lowers_sup_by_k(vals in prop::collection::vec(-3.0f64..3.0, 64), k in 0.0f64..4.0) {
            let u = DiscreteSolution::new(cube(), vals).unwrap();
            let v = truncate(&u, k).unwrap();
            let expect = (sup_norm(&u, SupRegion::Closure) - k).max(0.0);
            prop_assert!((sup_norm(&v, SupRegion::Closure) - expect).abs() <= 1e-15 * (1.0 + expect));
        }

        #[test]
        fn level_sets_nest_and_vanish(vals in prop::collection::vec(-2.0f64..2.0, 64)) {
            let u = DiscreteSolution::new(cube(), vals).unwrap();
            let top = sup_norm(&u, SupRegion::Closure);
            for region in [Region::Domain, Region::Boundary] {
                let mut prev = f64::INFINITY;
                for i in 0..50 {
                    let k = top * 1.2 * i as f64 / 49.0;
                    let phi = level_set_measure(&u, k, region, 2).unwrap();
                    prop_assert!(phi <= prev);
                    prev = phi;
                }
            }
            let bd = sup_norm(&u, SupRegion::Boundary);
            prop_assert_eq!(level_set_measure(&u, bd, Region::Boundary, 2).unwrap(), 0.0);
            prop_assert_eq!(level_set_measure(&u, top, Region::Domain, 2).unwrap(), 0.0);
        }

        #[test]
        fn trace_ratio_scale_invariant(vals in prop::collection::vec(-2.0f64..2.0, 64), s in 0.1f64..10.0) {
            let u = DiscreteSolution::new(cube(), vals).unwrap();
            prop_assume!(h1_norm(&u).unwrap() > 1e-6);
            let a = trace_constant_estimate(&u, 3).unwrap();
            let b = trace_constant_estimate(&u.scaled(s), 3).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
