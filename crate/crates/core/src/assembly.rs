//! P1 Galerkin assembly of the Robin form
//! `a(u, v) = ∫ ∇u·∇v + λ ∫ u v + ∫_∂Ω β u v dσ` and the load `∫ f v`.

use crate::error::{invalid, Error, Result};
use crate::fields::{BoundaryField, SourceField};
use crate::mesh::{Mesh, Point};
use crate::quadrature::simplex_rule;
pub use crate::sparse::{SymmetricSparseMatrix, TripletBuilder};

/// One entry per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub values: Vec<f64>,
}

const MIN_MEASURE: f64 = 1e-300;

fn check_cell(mesh: &Mesh, c: usize) -> Result<f64> {
    let measure = mesh.cell_measures()[c];
    if !(measure > MIN_MEASURE) {
        return Err(Error::DegenerateMesh { cell: c, measure });
    }
    Ok(measure)
}

/// Gradients of the barycentric coordinates of a simplex; constant per cell.
pub(crate) fn barycentric_gradients(pts: &[Point], dim: usize) -> [Point; 4] {
    let mut jac = [[0.0; 3]; 3];
    for col in 0..dim {
        for row in 0..dim {
            jac[row][col] = pts[col + 1][row] - pts[0][row];
        }
    }
    let inv = invert(&jac, dim);
    let mut grads = [[0.0; 3]; 4];
    for i in 0..dim {
        grads[i + 1][..dim].copy_from_slice(&inv[i][..dim]);
        for k in 0..dim {
            grads[0][k] -= inv[i][k];
        }
    }
    grads
}

fn invert(a: &[[f64; 3]; 3], dim: usize) -> [[f64; 3]; 3] {
    let mut inv = [[0.0; 3]; 3];
    match dim {
        1 => inv[0][0] = 1.0 / a[0][0],
        2 => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            inv[0][0] = a[1][1] / det;
            inv[0][1] = -a[0][1] / det;
            inv[1][0] = -a[1][0] / det;
            inv[1][1] = a[0][0] / det;
        }
        3 => {
            let cof = |r: usize, c: usize| {
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1]
            };
            let det = a[0][0] * cof(0, 0) + a[0][1] * cof(0, 1) + a[0][2] * cof(0, 2);
            for r in 0..3 {
                for c in 0..3 {
                    inv[c][r] = cof(r, c) / det;
                }
            }
        }
        _ => unreachable!(),
    }
    inv
}

/// `K_ij = ∫ ∇φ_i·∇φ_j`, exact per simplex.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SymmetricSparseMatrix> {
    let dim = mesh.dim();
    let mut b = TripletBuilder::new(mesh.num_vertices());
    for c in 0..mesh.num_cells() {
        let vol = check_cell(mesh, c)?;
        let grads = barycentric_gradients(&mesh.cell_points(c), dim);
        let mut local = [[0.0; 4]; 4];
        for i in 0..=dim {
            for j in i..=dim {
                local[i][j] = vol * crate::mesh::dot(&grads[i], &grads[j]);
            }
        }
        b.add_element(mesh.cell(c), &local);
    }
    Ok(b.build())
}

/// Consistent P1 mass matrix `|T|/((d+1)(d+2))·(1 + δ_ij)`, or its row-sum
/// lumped diagonal.
pub fn assemble_mass(mesh: &Mesh, lumped: bool) -> Result<SymmetricSparseMatrix> {
    let dim = mesh.dim();
    let mut b = TripletBuilder::new(mesh.num_vertices());
    let denom = ((dim + 1) * (dim + 2)) as f64;
    for c in 0..mesh.num_cells() {
        let vol = check_cell(mesh, c)?;
        let mut local = [[0.0; 4]; 4];
        for i in 0..=dim {
            for j in i..=dim {
                local[i][j] = vol * if i == j { 2.0 } else { 1.0 } / denom;
            }
        }
        b.add_element(mesh.cell(c), &local);
    }
    let consistent = b.build();
    Ok(if lumped { consistent.lumped() } else { consistent })
}

/// `B_ij = ∫_∂Ω β φ_i φ_j dσ` by facet quadrature. In 1D the facets are the
/// endpoints and B is diagonal with the endpoint values of β.
pub fn assemble_boundary_mass(mesh: &Mesh, beta: &BoundaryField, quad_order: usize) -> Result<SymmetricSparseMatrix> {
    let facet_dim = mesh.dim() - 1;
    let rule = simplex_rule(facet_dim, quad_order)?;
    let mut b = TripletBuilder::new(mesh.num_vertices());
    for (f, facet) in mesh.boundary_facets().iter().enumerate() {
        let pts = mesh.facet_points(f);
        let mut local = [[0.0; 4]; 4];
        for q in &rule {
            let weight = facet.measure * q.weight * beta.eval_boundary(f, &q.map(&pts))?;
            for i in 0..=facet_dim {
                for j in i..=facet_dim {
                    local[i][j] += weight * q.bary[i] * q.bary[j];
                }
            }
        }
        b.add_element(&facet.vertices, &local);
    }
    Ok(b.build())
}

/// `F_i = ∫ f φ_i` by cell quadrature.
pub fn assemble_load(mesh: &Mesh, f: &SourceField, quad_order: usize) -> Result<LoadVector> {
    let dim = mesh.dim();
    let rule = simplex_rule(dim, quad_order)?;
    let mut values = vec![0.0; mesh.num_vertices()];
    for c in 0..mesh.num_cells() {
        let vol = mesh.cell_measures()[c];
        let pts = mesh.cell_points(c);
        for q in &rule {
            let fx = vol * q.weight * f.eval(&q.map(&pts));
            for (i, &v) in mesh.cell(c).iter().enumerate() {
                values[v] += fx * q.bary[i];
            }
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("source field produced a non-finite load"));
    }
    Ok(LoadVector { values })
}

/// The three pieces of the Robin operator.
#[derive(Debug, Clone)]
pub struct RobinOperator {
    pub stiffness: SymmetricSparseMatrix,
    pub mass: SymmetricSparseMatrix,
    pub boundary: SymmetricSparseMatrix,
    pub lambda: f64,
}

impl RobinOperator {
    pub fn assemble(mesh: &Mesh, lambda: f64, beta: &BoundaryField, lumped: bool, quad_order: usize) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be a finite nonnegative number, got {lambda}")));
        }
        let boundary = assemble_boundary_mass(mesh, beta, quad_order)?;
        if lambda == 0.0 && boundary.is_zero() {
            return Err(Error::SingularSystem);
        }
        Ok(RobinOperator {
            stiffness: assemble_stiffness(mesh)?,
            mass: assemble_mass(mesh, lumped)?,
            boundary,
            lambda,
        })
    }

    /// `A = K + λM + B`.
    pub fn system(&self) -> SymmetricSparseMatrix {
        SymmetricSparseMatrix::linear_combination(&[
            (1.0, &self.stiffness),
            (self.lambda, &self.mass),
            (1.0, &self.boundary),
        ])
        .expect("operator pieces share the mesh dimension")
    }

    /// Lower bound `min(1, λ)` in `vᵀAv ≥ min(1, λ)·(vᵀKv + vᵀMv)`, i.e. the
    /// coercivity constant with respect to the discrete H¹ norm. Zero when
    /// λ = 0, where coercivity comes from B alone and has no closed form.
    pub fn coercivity_constant(&self) -> f64 {
        self.lambda.min(1.0)
    }
}

/// `A = K + λM + B`; rejects the Neumann case λ = 0, β ≡ 0.
pub fn assemble_system(
    mesh: &Mesh,
    lambda: f64,
    beta: &BoundaryField,
    lumped: bool,
    quad_order: usize,
) -> Result<SymmetricSparseMatrix> {
    Ok(RobinOperator::assemble(mesh, lambda, beta, lumped, quad_order)?.system())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_unit_cube_mesh, build_unit_square_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meshes() -> Vec<Mesh> {
        vec![
            build_interval_mesh(5).unwrap(),
            build_unit_square_mesh(4).unwrap(),
            build_unit_cube_mesh(3).unwrap(),
        ]
    }

    fn assert_dense(m: &SymmetricSparseMatrix, expected: &[[f64; 3]; 3], tol: f64) {
        let d = m.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((d[i][j] - expected[i][j]).abs() < tol, "({i},{j}): {} vs {}", d[i][j], expected[i][j]);
            }
        }
    }

    #[test]
    fn interval_stiffness_by_hand() {
        let k = assemble_stiffness(&build_interval_mesh(2).unwrap()).unwrap();
        assert_dense(&k, &[[2.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]], 1e-14);
    }

    #[test]
    fn stiffness_kills_constants() {
        for m in meshes() {
            let k = assemble_stiffness(&m).unwrap();
            let r = k.mul_vec(&vec![1.0; m.num_vertices()]).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-12));
        }
        let k = assemble_stiffness(&build_unit_square_mesh(1).unwrap()).unwrap();
        for row in k.to_dense() {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn interval_mass_by_hand() {
        let m = build_interval_mesh(2).unwrap();
        let c = 1.0 / 12.0;
        assert_dense(
            &assemble_mass(&m, false).unwrap(),
            &[[2.0 * c, c, 0.0], [c, 4.0 * c, c], [0.0, c, 2.0 * c]],
            1e-15,
        );
        assert_dense(
            &assemble_mass(&m, true).unwrap(),
            &[[0.25, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.25]],
            1e-15,
        );
    }

    #[test]
    fn mass_integrates_one() {
        for m in meshes() {
            let ones = vec![1.0; m.num_vertices()];
            for lumped in [false, true] {
                let q = assemble_mass(&m, lumped).unwrap().quadratic_form(&ones).unwrap();
                assert!((q - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_mass_examples() {
        let m = build_interval_mesh(2).unwrap();
        let b = assemble_boundary_mass(&m, &BoundaryField::Constant(1.0), 2).unwrap();
        assert_dense(&b, &[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]], 1e-15);
        let per = assemble_boundary_mass(&m, &BoundaryField::PerFacet(vec![0.5, 3.0]), 1).unwrap();
        assert_eq!(per.diagonal(), vec![0.5, 0.0, 3.0]);

        for mesh in meshes() {
            let zero = assemble_boundary_mass(&mesh, &BoundaryField::Constant(0.0), 2).unwrap();
            assert!(zero.is_zero());
            let one = assemble_boundary_mass(&mesh, &BoundaryField::Constant(1.0), 2).unwrap();
            let total = one.quadratic_form(&vec![1.0; mesh.num_vertices()]).unwrap();
            assert!((total - mesh.domain().boundary_measure()).abs() < 1e-12);
        }

        let neg = BoundaryField::Constant(-1.0);
        assert!(matches!(
            assemble_boundary_mass(&m, &neg, 2),
            Err(Error::InvalidCoefficient { .. })
        ));
    }

    #[test]
    fn load_examples() {
        for m in meshes() {
            let ones = assemble_load(&m, &SourceField::Constant(1.0), 1).unwrap();
            assert!((ones.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let zero = assemble_load(&m, &SourceField::Constant(0.0), 2).unwrap();
            assert!(zero.values.iter().all(|&v| v == 0.0));
            let c = 2.5;
            let f = assemble_load(&m, &SourceField::Constant(c), 2).unwrap();
            let m1 = assemble_mass(&m, false).unwrap().mul_vec(&vec![1.0; m.num_vertices()]).unwrap();
            for (a, b) in f.values.iter().zip(&m1) {
                assert!((a - c * b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn doubling_order_leaves_constant_integrals_unchanged() {
        for m in meshes() {
            let beta = BoundaryField::Constant(1.7);
            let b2 = assemble_boundary_mass(&m, &beta, 2).unwrap().to_dense();
            let b4 = assemble_boundary_mass(&m, &beta, 4).unwrap().to_dense();
            let f2 = assemble_load(&m, &SourceField::Constant(0.3), 2).unwrap();
            let f4 = assemble_load(&m, &SourceField::Constant(0.3), 4).unwrap();
            for (r2, r4) in b2.iter().zip(&b4) {
                assert!(r2.iter().zip(r4).all(|(a, b)| (a - b).abs() < 1e-12));
            }
            assert!(f2.values.iter().zip(&f4.values).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn per_facet_boundary_mass_is_exact_from_order_two() {
        let m = build_unit_cube_mesh(2).unwrap();
        let values: Vec<f64> = (0..m.boundary_facets().len()).map(|i| (i % 5) as f64 * 0.3).collect();
        let beta = BoundaryField::PerFacet(values);
        let b2 = assemble_boundary_mass(&m, &beta, 2).unwrap().to_dense();
        let b5 = assemble_boundary_mass(&m, &beta, 5).unwrap().to_dense();
        for (r2, r5) in b2.iter().zip(&b5) {
            assert!(r2.iter().zip(r5).all(|(a, b)| (a - b).abs() < 1e-13));
        }
    }

    #[test]
    fn system_by_hand_and_singular_case() {
        let m = build_interval_mesh(2).unwrap();
        let a = assemble_system(&m, 1.0, &BoundaryField::Constant(1.0), true, 2).unwrap();
        assert_dense(
            &a,
            &[[2.0 + 0.25 + 1.0, -2.0, 0.0], [-2.0, 4.0 + 0.5, -2.0], [0.0, -2.0, 2.0 + 0.25 + 1.0]],
            1e-14,
        );
        assert_eq!(
            assemble_system(&m, 0.0, &BoundaryField::Constant(0.0), false, 2).unwrap_err(),
            Error::SingularSystem
        );
        assert!(assemble_system(&m, 0.0, &BoundaryField::Constant(0.5), false, 2).is_ok());
        assert!(assemble_system(&m, -1.0, &BoundaryField::Constant(0.5), false, 2).is_err());
    }

    #[test]
    fn psd_and_coercive_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in meshes() {
            let beta = BoundaryField::closure(|p| 1.0 + p[0] * p[1]);
            let op = RobinOperator::assemble(&m, 0.7, &beta, false, 2).unwrap();
            let a = op.system();
            for _ in 0..100 {
                let v: Vec<f64> = (0..m.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let nv: f64 = v.iter().map(|x| x * x).sum();
                for piece in [&op.stiffness, &op.mass, &op.boundary] {
                    assert!(piece.quadratic_form(&v).unwrap() >= -1e-10 * nv);
                }
                let lhs = a.quadratic_form(&v).unwrap();
                let rhs = op.stiffness.quadratic_form(&v).unwrap() + 0.7 * op.mass.quadratic_form(&v).unwrap();
                assert!(lhs >= rhs - 1e-10);
                assert!(lhs > 0.0);
                let h1 = op.stiffness.quadratic_form(&v).unwrap() + op.mass.quadratic_form(&v).unwrap();
                assert!(lhs >= op.coercivity_constant() * h1 - 1e-10);
            }
        }
    }
}
