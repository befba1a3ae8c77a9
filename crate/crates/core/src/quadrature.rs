//! Quadrature on reference simplices in barycentric coordinates.
//!
//! Orders 1 and 2 use the classical symmetric rules (centroid; 2-point Gauss on
//! segments, 3-point on triangles, 4-point on tetrahedra). Higher orders use a
//! collapsed Gauss–Legendre product rule exact for polynomials of that degree.
//! All weights are positive and sum to one, so the physical integral is
//! `measure * Σ w f(x_q)`.

use crate::error::{invalid, Result};
use crate::mesh::Point;

pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    /// Barycentric coordinates; only the first `k + 1` entries are used.
    pub bary: [f64; 4],
    pub weight: f64,
}

impl QuadPoint {
    pub fn map(&self, vertices: &[Point]) -> Point {
        let mut x = [0.0; 3];
        for (b, v) in self.bary.iter().zip(vertices) {
            for i in 0..3 {
                x[i] += b * v[i];
            }
        }
        x
    }
}

/// Rule on the `k`-simplex (0 = point, 1 = segment, 2 = triangle, 3 = tet).
pub fn simplex_rule(k: usize, order: usize) -> Result<Vec<QuadPoint>> {
    if order == 0 || order > MAX_ORDER {
        return Err(invalid(format!("quadrature order must lie in 1..={MAX_ORDER}, got {order}")));
    }
    if k > 3 {
        return Err(invalid(format!("no quadrature on {k}-simplices")));
    }
    let rule = match (k, order) {
        (0, _) => vec![pt(&[1.0], 1.0)],
        (_, 1) => {
            let c = 1.0 / (k + 1) as f64;
            vec![pt(&vec![c; k + 1], 1.0)]
        }
        (1, 2) => {
            let g = 0.5 / 3f64.sqrt();
            vec![pt(&[0.5 - g, 0.5 + g], 0.5), pt(&[0.5 + g, 0.5 - g], 0.5)]
        }
        (2, 2) => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            vec![
                pt(&[a, b, b], 1.0 / 3.0),
                pt(&[b, a, b], 1.0 / 3.0),
                pt(&[b, b, a], 1.0 / 3.0),
            ]
        }
        (3, 2) => {
            let s5 = 5f64.sqrt();
            let a = (5.0 + 3.0 * s5) / 20.0;
            let b = (5.0 - s5) / 20.0;
            vec![
                pt(&[a, b, b, b], 0.25),
                pt(&[b, a, b, b], 0.25),
                pt(&[b, b, a, b], 0.25),
                pt(&[b, b, b, a], 0.25),
            ]
        }
        (k, order) => collapsed_rule(k, order),
    };
    Ok(rule)
}

fn pt(bary: &[f64], weight: f64) -> QuadPoint {
    let mut b = [0.0; 4];
    b[..bary.len()].copy_from_slice(bary);
    QuadPoint { bary: b, weight }
}

/// Duffy-collapsed tensor rule. The Jacobian factors `(1-t)^j` raise the
/// degree in the outer variables, so each direction gets enough Gauss points.
fn collapsed_rule(k: usize, order: usize) -> Vec<QuadPoint> {
    // Direction j (0-based, outermost first) sees degree order + (k - 1 - j).
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..k)
        .map(|j| gauss_legendre_unit((order + k - j).div_ceil(2)))
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    'outer: loop {
        // Map (t_0, ..., t_{k-1}) in the unit cube onto the reference simplex.
        let mut coords = [0.0; 3];
        let mut remaining = 1.0;
        let mut weight = k_factorial(k);
        for j in 0..k {
            let (nodes, weights) = &rules[j];
            let t = nodes[idx[j]];
            coords[j] = remaining * t;
            weight *= weights[idx[j]] * remaining;
            remaining *= 1.0 - t;
        }
        let mut bary = [0.0; 4];
        bary[1..=k].copy_from_slice(&coords[..k]);
        bary[0] = 1.0 - coords[..k].iter().sum::<f64>();
        out.push(QuadPoint { bary, weight });

        for j in (0..k).rev() {
            idx[j] += 1;
            if idx[j] < rules[j].0.len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    out
}

fn k_factorial(k: usize) -> f64 {
    (1..=k).product::<usize>() as f64
}

/// Gauss–Legendre nodes and weights on [0, 1].
fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// P_m(x) and P_m'(x) by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ over the reference simplex of Π λ_i^{a_i}, normalised by its volume:
    /// k! Π a_i! / (k + Σ a_i)!.
    fn monomial_mean(k: usize, exps: &[u32]) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let total: u32 = exps.iter().sum();
        fact(k as u32) * exps.iter().map(|&a| fact(a)).product::<f64>() / fact(k as u32 + total)
    }

    fn all_exponents(k: usize, degree: u32) -> Vec<Vec<u32>> {
        let mut out = vec![vec![]];
        for _ in 0..=k {
            out = out
                .into_iter()
                .flat_map(|e: Vec<u32>| {
                    let used: u32 = e.iter().sum();
                    (0..=degree - used).map(move |a| {
                        let mut e = e.clone();
                        e.push(a);
                        e
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn weights_sum_to_one_and_positive() {
        for k in 0..=3 {
            for order in 1..=MAX_ORDER {
                let rule = simplex_rule(k, order).unwrap();
                let s: f64 = rule.iter().map(|q| q.weight).sum();
                assert!((s - 1.0).abs() < 1e-13, "k={k} order={order} sum={s}");
                assert!(rule.iter().all(|q| q.weight > 0.0));
                for q in &rule {
                    let b: f64 = q.bary[..=k].iter().sum();
                    assert!((b - 1.0).abs() < 1e-14);
                    assert!(q.bary[..=k].iter().all(|&x| x >= 0.0));
                }
            }
        }
    }

    #[test]
    fn exact_up_to_order() {
        for k in 1..=3 {
            for order in 1..=MAX_ORDER {
                let rule = simplex_rule(k, order).unwrap();
                for exps in all_exponents(k, order as u32) {
                    let approx: f64 = rule
                        .iter()
                        .map(|q| {
                            q.weight
                                * exps
                                    .iter()
                                    .enumerate()
                                    .map(|(i, &a)| q.bary[i].powi(a as i32))
                                    .product::<f64>()
                        })
                        .sum();
                    let exact = monomial_mean(k, &exps);
                    assert!(
                        (approx - exact).abs() < 1e-13,
                        "k={k} order={order} exps={exps:?}: {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(simplex_rule(2, 0).is_err());
        assert!(simplex_rule(2, MAX_ORDER + 1).is_err());
    }
}
