//! Legendre spectral-Galerkin discretisation of the modal problem on the
//! reference interval `x in (-1, 1)`, `r = (b - b0)/2 x + (b + b0)/2`.
//!
//! Basis `phi_k = L_k + L_{k+1}`, `k = 0..N-1`, so `phi_k(-1) = 0`, `phi_k(1) = 2`.
//! With `varpi = (x + c0)^{d-1}`:
//!
//! ```text
//! m_ij = (phi_j, phi_i)_varpi    s_ij = (phi_j', phi_i')_varpi    mt_ij = (phi_j (x + c0)^{-2}, phi_i)_varpi
//! ```

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_lobatto, Rule};
use nalgebra::{DMatrix, DVector, LU};

/// Annulus `b0 < r < b`, dimension and wave speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub d: u8,
    pub b0: f64,
    pub b: f64,
    pub c: f64,
}

impl Geometry {
    pub fn new(d: u8, b0: f64, b: f64, c: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {d}")));
        }
        if !(b0 > 0.0 && b > b0) {
            return Err(Error::Config(format!("need b > b0 > 0, got b0={b0} b={b}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("wave speed must be positive, got {c}")));
        }
        Ok(Geometry { d, b0, b, c })
    }

    pub fn c0(&self) -> f64 {
        (self.b + self.b0) / (self.b - self.b0)
    }

    pub fn c_tilde(&self) -> f64 {
        2.0 * self.c / (self.b - self.b0)
    }

    /// Coefficient of `E v'` in the semi-discrete system.
    pub fn alpha(&self) -> f64 {
        8.0 * self.c * (1.0 + self.c0()).powi(self.d as i32 - 1) / (self.b - self.b0)
    }

    /// Coefficient of `E v` in the semi-discrete system.
    pub fn mu(&self) -> f64 {
        let d1 = self.d as f64 - 1.0;
        4.0 * self.c * self.c * d1 * (1.0 + self.c0()).powi(self.d as i32 - 1) / (self.b * (self.b - self.b0))
    }

    pub fn weight(&self, x: f64) -> f64 {
        (x + self.c0()).powi(self.d as i32 - 1)
    }

    pub fn radius(&self, x: f64) -> f64 {
        0.5 * (self.b - self.b0) * x + 0.5 * (self.b + self.b0)
    }

    pub fn reference(&self, r: f64) -> f64 {
        (2.0 * r - self.b - self.b0) / (self.b - self.b0)
    }
}

/// `beta_n = n^2` (d = 2) or `n(n+1)` (d = 3).
pub fn beta(d: u8, n: usize) -> f64 {
    let n = n as f64;
    if d == 2 {
        n * n
    } else {
        n * (n + 1.0)
    }
}

/// `phi_k(x)` and `phi_k'(x)` for `k = 0..count`.
pub fn basis_values(count: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut l = vec![0.0; count + 1];
    let mut dl = vec![0.0; count + 1];
    l[0] = 1.0;
    if count >= 1 {
        l[1] = x;
        dl[1] = 1.0;
    }
    for k in 1..count {
        let kf = k as f64;
        l[k + 1] = ((2.0 * kf + 1.0) * x * l[k] - kf * l[k - 1]) / (kf + 1.0);
        // L'_{k+1} = L'_{k-1} + (2k + 1) L_k
        dl[k + 1] = dl[k - 1] + (2.0 * kf + 1.0) * l[k];
    }
    let phi = (0..count).map(|k| l[k] + l[k + 1]).collect();
    let dphi = (0..count).map(|k| dl[k] + dl[k + 1]).collect();
    (phi, dphi)
}

/// `l(x) = (1 - x)/2`, equal to one at the scatterer and zero at the artificial boundary.
pub fn lift(x: f64) -> f64 {
    0.5 * (1.0 - x)
}

/// Assembled matrices for one geometry and degree; shared by all modes.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    pub geom: Geometry,
    /// Number of basis functions `N` (polynomial degree of the space).
    pub degree: usize,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub inv_square: DMatrix<f64>,
    /// `(l, phi_i)_varpi`, `(l', phi_i')_varpi`, `(l (x+c0)^{-2}, phi_i)_varpi`.
    pub lift_mass: DVector<f64>,
    pub lift_stiffness: DVector<f64>,
    pub lift_inv_square: DVector<f64>,
    /// `(l, l)_varpi`, `(l', l')_varpi`, `(l (x+c0)^{-2}, l)_varpi`.
    pub lift_self: [f64; 3],
    /// `N + 1` Legendre-Gauss-Lobatto points.
    pub lgl: Rule,
    /// `phi_k(x_j)` at the Lobatto points, `(N + 1) x N`.
    pub lgl_basis: DMatrix<f64>,
    /// `(ell_j, phi_i)_varpi` for the Lagrange basis `ell_j` on the Lobatto points, `N x (N + 1)`.
    pub interp_load: DMatrix<f64>,
    interp_lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

struct Moments {
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    inv_square: DMatrix<f64>,
    lift_mass: DVector<f64>,
    lift_stiffness: DVector<f64>,
    lift_inv_square: DVector<f64>,
    lift_self: [f64; 3],
}

fn moments(geom: &Geometry, n: usize, rule: &Rule) -> Moments {
    let c0 = geom.c0();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    let mut inv_square = DMatrix::zeros(n, n);
    let mut lift_mass = DVector::zeros(n);
    let mut lift_stiffness = DVector::zeros(n);
    let mut lift_inv_square = DVector::zeros(n);
    let mut lift_self = [0.0; 3];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (phi, dphi) = basis_values(n, x);
        let wv = w * geom.weight(x);
        let wr = wv / ((x + c0) * (x + c0));
        for i in 0..n {
            for j in 0..=i {
                mass[(i, j)] += wv * phi[i] * phi[j];
                stiffness[(i, j)] += wv * dphi[i] * dphi[j];
                inv_square[(i, j)] += wr * phi[i] * phi[j];
            }
            lift_mass[i] += wv * lift(x) * phi[i];
            lift_stiffness[i] += wv * -0.5 * dphi[i];
            lift_inv_square[i] += wr * lift(x) * phi[i];
        }
        lift_self[0] += wv * lift(x) * lift(x);
        lift_self[1] += wv * 0.25;
        lift_self[2] += wr * lift(x) * lift(x);
    }
    for m in [&mut mass, &mut stiffness, &mut inv_square] {
        m.fill_upper_triangle_with_lower_triangle();
    }
    Moments { mass, stiffness, inv_square, lift_mass, lift_stiffness, lift_inv_square, lift_self }
}

/// Barycentric Lagrange basis on `nodes` evaluated at `x`.
fn lagrange_row(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    if let Some(k) = nodes.iter().position(|&xj| xj == x) {
        let mut row = vec![0.0; nodes.len()];
        row[k] = 1.0;
        return row;
    }
    let terms: Vec<f64> = nodes.iter().zip(bary).map(|(&xj, &wj)| wj / (x - xj)).collect();
    let total: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / total).collect()
}

/// Assemble `M`, `S`, `M~` and the lifting and interpolation moments for `N`
/// basis functions. The rational `M~` entries (d = 2) use `2N + 16` Gauss
/// points and are rejected if doubling the rule changes any entry by more than
/// `1e-12` relative to the largest.
pub fn assemble(geom: Geometry, n: usize) -> Result<SpectralOperator> {
    if n < 4 {
        return Err(Error::Config(format!("need at least 4 basis functions, got {n}")));
    }
    let q = 2 * n + 16;
    let fine = moments(&geom, n, &gauss_legendre(q));
    let check = moments(&geom, n, &gauss_legendre(2 * q));
    let scale = fine.inv_square.amax().max(fine.mass.amax());
    let diff = (&fine.inv_square - &check.inv_square).amax().max((&fine.lift_inv_square - &check.lift_inv_square).amax());
    if diff > 1e-12 * scale {
        return Err(Error::Assembly(format!("quadrature with {q} points unresolved: doubling changes entries by {diff:e}")));
    }
    let lgl = gauss_lobatto(n);
    let lgl_basis = DMatrix::from_fn(n + 1, n, |j, k| basis_values(n, lgl.nodes[j]).0[k]);
    // barycentric weights
    let bary: Vec<f64> = (0..=n)
        .map(|j| 1.0 / (0..=n).filter(|&k| k != j).map(|k| lgl.nodes[j] - lgl.nodes[k]).product::<f64>())
        .collect();
    let gauss = gauss_legendre(n + 2);
    let mut interp_load = DMatrix::zeros(n, n + 1);
    for (&x, &w) in gauss.nodes.iter().zip(&gauss.weights) {
        let (phi, _) = basis_values(n, x);
        let row = lagrange_row(&lgl.nodes, &bary, x);
        let wv = w * geom.weight(x);
        for i in 0..n {
            for (j, &lj) in row.iter().enumerate() {
                interp_load[(i, j)] += wv * phi[i] * lj;
            }
        }
    }
    // interpolation conditions at the N Lobatto points other than x = -1
    let interp = lgl_basis.rows(1, n).into_owned();
    let interp_lu = interp.lu();
    if !interp_lu.is_invertible() {
        return Err(Error::Assembly("singular Lobatto interpolation matrix".into()));
    }
    Ok(SpectralOperator {
        geom,
        degree: n,
        mass: fine.mass,
        stiffness: fine.stiffness,
        inv_square: fine.inv_square,
        lift_mass: fine.lift_mass,
        lift_stiffness: fine.lift_stiffness,
        lift_inv_square: fine.lift_inv_square,
        lift_self: fine.lift_self,
        lgl,
        lgl_basis,
        interp_load,
        interp_lu,
    })
}

impl SpectralOperator {
    /// Coefficients of the interpolant of `values` (at the Lobatto points, with
    /// `values[0]` at `x = -1` ignored) in the basis `phi_k`.
    pub fn coefficients_from_lgl(&self, values: &[f64]) -> DVector<f64> {
        let rhs = DVector::from_iterator(self.degree, values[1..].iter().copied());
        self.interp_lu.solve(&rhs).expect("interpolation matrix checked at assembly")
    }

    /// `sum_k v_k phi_k(x)`.
    pub fn evaluate(&self, coeffs: &DVector<f64>, x: f64) -> f64 {
        let (phi, _) = basis_values(self.degree, x);
        phi.iter().zip(coeffs.iter()).map(|(p, v)| p * v).sum()
    }

    /// Values at the Lobatto points.
    pub fn lgl_values(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.lgl_basis * coeffs
    }

    /// `(I_N h, phi_i)_varpi` from samples of `h` at the Lobatto points.
    pub fn load(&self, samples: &DVector<f64>) -> DVector<f64> {
        &self.interp_load * samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;

    fn geom(d: u8) -> Geometry {
        Geometry::new(d, 2.0, 5.0, 5.0).unwrap()
    }

    #[test]
    fn basis_boundary_values() {
        for x in [-1.0, 1.0] {
            let (phi, _) = basis_values(12, x);
            for p in phi {
                assert!((p - if x < 0.0 { 0.0 } else { 2.0 }).abs() < 1e-14);
            }
        }
        let (_, dphi) = basis_values(6, 0.3);
        let h = 1e-6;
        let (a, _) = basis_values(6, 0.3 + h);
        let (b, _) = basis_values(6, 0.3 - h);
        for k in 0..6 {
            assert!((dphi[k] - (a[k] - b[k]) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn matrices_symmetric_and_definite() {
        for d in [2, 3] {
            let op = assemble(geom(d), 16).unwrap();
            for m in [&op.mass, &op.stiffness, &op.inv_square] {
                assert_eq!((m - m.transpose()).amax(), 0.0);
            }
            assert!(op.mass.clone().cholesky().is_some());
            assert!(op.stiffness.clone().cholesky().is_some());
        }
    }

    #[test]
    fn unit_weight_first_entry() {
        // with the weight isolated, (phi_0, phi_0) = int (1 + x)^2 = 2 + 2/3
        let rule = gauss_legendre(4);
        let v = rule.integrate(|x| {
            let (phi, _) = basis_values(1, x);
            phi[0] * phi[0]
        });
        assert!((v - (2.0 + 2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn stiffness_quadratic_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for d in [2, 3] {
            let g = geom(d);
            let op = assemble(g, 10).unwrap();
            for _ in 0..5 {
                let v = DVector::from_fn(10, |_, _| rng.gen_range(-1.0..1.0));
                let form = (v.transpose() * &op.stiffness * &v)[(0, 0)];
                let direct = adaptive(
                    |x| {
                        let (_, dphi) = basis_values(10, x);
                        let dv: f64 = dphi.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                        g.weight(x) * dv * dv
                    },
                    -1.0,
                    1.0,
                    1e-13,
                    1e-13,
                )
                .unwrap();
                assert!((form - direct).abs() < 1e-12 * direct.abs().max(1.0));
                let rational = (v.transpose() * &op.inv_square * &v)[(0, 0)];
                let direct = adaptive(
                    |x| {
                        let (phi, _) = basis_values(10, x);
                        let val: f64 = phi.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                        g.weight(x) * val * val / (x + g.c0()).powi(2)
                    },
                    -1.0,
                    1.0,
                    1e-13,
                    1e-13,
                )
                .unwrap();
                assert!((rational - direct).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn interpolation_round_trip() {
        let op = assemble(geom(2), 12).unwrap();
        let f = |x: f64| (1.0 + x) * (0.3 * x).exp();
        let vals: Vec<f64> = op.lgl.nodes.iter().map(|&x| f(x)).collect();
        let coeffs = op.coefficients_from_lgl(&vals);
        for x in [-0.9, 0.1, 0.77] {
            assert!((op.evaluate(&coeffs, x) - f(x)).abs() < 1e-11);
        }
        let back = op.lgl_values(&coeffs);
        for (a, b) in back.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn load_matches_mass_for_polynomials() {
        // I_N h = h for h in V_N, so the load equals M times its coefficients
        let op = assemble(geom(3), 9).unwrap();
        let v = DVector::from_fn(9, |i, _| 1.0 / (i as f64 + 1.0));
        let samples = op.lgl_values(&v);
        let load = op.load(&samples);
        assert!((load - &op.mass * &v).amax() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Geometry::new(4, 2.0, 5.0, 1.0).is_err());
        assert!(Geometry::new(2, 2.0, 1.0, 1.0).is_err());
        assert!(assemble(geom(2), 3).is_err());
    }
}
