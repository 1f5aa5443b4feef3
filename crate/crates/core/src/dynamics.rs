//! k-contact Euler–Lagrange field equations: pointwise residuals, the explicit
//! evolution form used by the simulator, and SOPDE coefficients of the
//! Euler–Lagrange k-vector field.
//!
//! Gauge for the dissipation variables: `g^β_α = δ^β_α ℓ_α` with `ℓ₁ = L` and
//! `ℓ_α = 0` otherwise, so only `s¹` (the evolution direction) is dynamical.

use nalgebra::{DMatrix, DVector};

use crate::contact::{hessian, rank_test, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::jet::{check_len, evaluate_jet, Jet2, LagrangianModel, PhasePoint};

/// First- and second-order data of a candidate solution at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondJet {
    pub z: PhasePoint,
    /// `φⁱ_{αβ}` at `(i * k + α) * k + β`, symmetric in `(α, β)`.
    pub a: Vec<f64>,
    /// `dsdt[(α, β)] = ∂s^β/∂t^α`.
    pub dsdt: DMatrix<f64>,
}

impl SecondJet {
    pub fn new(z: PhasePoint, a: Vec<f64>, dsdt: DMatrix<f64>) -> Self {
        SecondJet { z, a, dsdt }
    }

    #[inline]
    pub fn second(&self, i: usize, alpha: usize, beta: usize) -> f64 {
        let k = self.z.k();
        self.a[(i * k + alpha) * k + beta]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElResidual {
    pub r_el: Vec<f64>,
    pub r_s: f64,
}

impl ElResidual {
    pub fn max_abs(&self) -> f64 {
        self.r_el.iter().fold(self.r_s.abs(), |m, r| m.max(r.abs()))
    }
}

/// Residual of the Euler–Lagrange equations together with the divergence
/// equation `∂s^α/∂t^α = L`.
pub fn el_residual(model: &LagrangianModel, sj: &SecondJet) -> Result<ElResidual> {
    let (n, k) = (model.n(), model.k());
    check_len("second derivatives", n * k * k, sj.a.len())?;
    check_len("dsdt rows", k, sj.dsdt.nrows())?;
    check_len("dsdt columns", k, sj.dsdt.ncols())?;
    let jet = evaluate_jet(model, &sj.z)?;
    Ok(el_residual_with_jet(&jet, sj))
}

pub(crate) fn el_residual_with_jet(jet: &Jet2, sj: &SecondJet) -> ElResidual {
    let (n, k) = (jet.n(), jet.k());
    let z = &sj.z;
    let r_el = (0..n)
        .map(|i| {
            let mut r = 0.0;
            for alpha in 0..k {
                let row = i * k + alpha;
                for j in 0..n {
                    for beta in 0..k {
                        r += jet.d2ldvdv[(row, j * k + beta)] * sj.second(j, beta, alpha);
                    }
                    r += jet.d2ldvdq[(row, j)] * z.vel(j, alpha);
                }
                for beta in 0..k {
                    r += jet.d2ldvds[(row, beta)] * sj.dsdt[(alpha, beta)];
                }
                r -= jet.dlds[alpha] * jet.dldv[row];
            }
            r - jet.dldq[i]
        })
        .collect();
    let r_s = (0..k).map(|a| sj.dsdt[(a, a)]).sum::<f64>() - jet.l;
    ElResidual { r_el, r_s }
}

/// Time-second-derivatives `φⁱ_{tt}` making the Euler–Lagrange residual vanish.
///
/// `spatial` holds `φⁱ_{ab}` for spatial directions at `(i*(k−1) + a)*(k−1) + b`,
/// `mixed` holds `φⁱ_{ta}` at `i*(k−1) + a`.
pub fn evolution_rhs(model: &LagrangianModel, z: &PhasePoint, spatial: &[f64], mixed: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = (model.n(), model.k());
    check_len("spatial second derivatives", n * (k - 1) * (k - 1), spatial.len())?;
    check_len("mixed second derivatives", n * (k - 1), mixed.len())?;
    let jet = evaluate_jet(model, z)?;
    evolution_rhs_with_jet(&jet, z, spatial, mixed)
}

pub(crate) fn evolution_rhs_with_jet(jet: &Jet2, z: &PhasePoint, spatial: &[f64], mixed: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = (jet.n(), jet.k());
    let m = k - 1;
    if jet.d2ldvds.amax() != 0.0 {
        return Err(Error::SCoupled);
    }
    let w = &jet.d2ldvdv;
    let second = |j: usize, beta: usize, alpha: usize| -> f64 {
        match (beta, alpha) {
            (0, 0) => 0.0,
            (0, a) | (a, 0) => mixed[j * m + a - 1],
            (b, a) => spatial[(j * m + b - 1) * m + a - 1],
        }
    };
    let mut w_tt = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let mut r = 0.0;
        for alpha in 0..k {
            let row = i * k + alpha;
            for j in 0..n {
                for beta in 0..k {
                    r += w[(row, j * k + beta)] * second(j, beta, alpha);
                }
                r += jet.d2ldvdq[(row, j)] * z.vel(j, alpha);
            }
            r -= jet.dlds[alpha] * jet.dldv[row];
        }
        rhs[i] = jet.dldq[i] - r;
        for j in 0..n {
            w_tt[(i, j)] = w[(i * k, j * k)];
        }
    }
    if n == 1 {
        let d = w_tt[(0, 0)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::NotEvolvable);
        }
        return Ok(vec![rhs[0] / d]);
    }
    if !rank_test(&w_tt, DEFAULT_RANK_TOL).0 {
        return Err(Error::NotEvolvable);
    }
    let x = w_tt.lu().solve(&rhs).ok_or(Error::NotEvolvable)?;
    Ok(x.iter().copied().collect())
}

/// Coefficients `Γⁱ_{αβ}` and s-velocities `g^β_α` of an Euler–Lagrange SOPDE.
#[derive(Clone, Debug, PartialEq)]
pub struct SopdeData {
    /// `Γⁱ_{αβ}` at `(i * k + α) * k + β`.
    pub gamma: Vec<f64>,
    /// `g[(α, β)] = g^β_α`, the `∂/∂s^β` component of `X_α`.
    pub g: DMatrix<f64>,
}

/// The gauge-fixed s-velocities at a point with Lagrangian value `l`.
pub fn gauge_s_velocities(k: usize, l: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(k, k);
    g[(0, 0)] = l;
    g
}

/// SOPDE data with the minimum-Frobenius-norm symmetric `Γ` solving the
/// contracted second-order equations.
pub fn assemble_sopde(model: &LagrangianModel, z: &PhasePoint) -> Result<SopdeData> {
    let (n, k) = (model.n(), model.k());
    let jet = evaluate_jet(model, z)?;
    if !hessian(&jet, DEFAULT_RANK_TOL).regular {
        return Err(Error::NotRegular);
    }
    let g = gauge_s_velocities(k, jet.l);

    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let mut r = jet.dldq[i];
        for alpha in 0..k {
            let row = i * k + alpha;
            r += jet.dlds[alpha] * jet.dldv[row];
            for j in 0..n {
                r -= jet.d2ldvdq[(row, j)] * z.vel(j, alpha);
            }
            for beta in 0..k {
                r -= jet.d2ldvds[(row, beta)] * g[(alpha, beta)];
            }
        }
        rhs[i] = r;
    }

    // Unknowns: Γʲ_{αβ} for α ≤ β; off-diagonal entries rescaled by √2 so the
    // Euclidean norm of the unknowns is the Frobenius norm of the full tensor.
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let unknowns = n * pairs.len();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut mat = DMatrix::zeros(n, unknowns);
    for i in 0..n {
        for j in 0..n {
            for (p, &(a, b)) in pairs.iter().enumerate() {
                let col = j * pairs.len() + p;
                mat[(i, col)] = if a == b {
                    jet.d2ldvdv[(i * k + a, j * k + a)]
                } else {
                    (jet.d2ldvdv[(i * k + a, j * k + b)] + jet.d2ldvdv[(i * k + b, j * k + a)]) / sqrt2
                };
            }
        }
    }
    let y = min_norm_solve(&mat, &rhs)?;

    let mut gamma = vec![0.0; n * k * k];
    for j in 0..n {
        for (p, &(a, b)) in pairs.iter().enumerate() {
            let val = y[j * pairs.len() + p];
            let val = if a == b { val } else { val / sqrt2 };
            gamma[(j * k + a) * k + b] = val;
            gamma[(j * k + b) * k + a] = val;
        }
    }
    Ok(SopdeData { gamma, g })
}

fn min_norm_solve(mat: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = mat.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = DEFAULT_RANK_TOL * smax.max(f64::MIN_POSITIVE);
    svd.solve(rhs, eps).map_err(|_| Error::NotRegular)
}

/// Residuals of the four component equations of the Lagrangian k-vector field
/// equations for the SOPDE with the given coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SopdeReport {
    /// `(X^j_α − v^j_α) ∂²L/∂v^j_α∂s^β`
    pub s_coupling: f64,
    /// `(X^j_α − v^j_α) W`
    pub holonomy: f64,
    /// second-order equation
    pub second_order: f64,
    /// trace equation `L − X^α_α`
    pub trace: f64,
}

impl SopdeReport {
    pub fn max(&self) -> f64 {
        self.s_coupling
            .max(self.holonomy)
            .max(self.second_order)
            .max(self.trace)
    }
}

pub fn verify_sopde(model: &LagrangianModel, z: &PhasePoint, sopde: &SopdeData) -> Result<SopdeReport> {
    let (n, k) = (model.n(), model.k());
    check_len("Gamma", n * k * k, sopde.gamma.len())?;
    let jet = evaluate_jet(model, z)?;
    // first-order components X^j_α = v^j_α (SOPDE condition)
    let xq: Vec<f64> = z.v.clone();
    let dx: Vec<f64> = xq.iter().zip(&z.v).map(|(x, v)| x - v).collect();

    let mut s_coupling: f64 = 0.0;
    for beta in 0..k {
        let r: f64 = (0..n * k).map(|f| dx[f] * jet.d2ldvds[(f, beta)]).sum();
        s_coupling = s_coupling.max(r.abs());
    }
    let mut holonomy: f64 = 0.0;
    for row in 0..n * k {
        let r: f64 = (0..n * k).map(|f| dx[f] * jet.d2ldvdv[(row, f)]).sum();
        holonomy = holonomy.max(r.abs());
    }
    let mut second_order: f64 = 0.0;
    for i in 0..n {
        let mut r = jet.dldq[i];
        for alpha in 0..k {
            let row = i * k + alpha;
            for j in 0..n {
                let f = j * k + alpha;
                r += dx[f] * jet.d2ldvdq[(row, j)];
                r -= jet.d2ldvdq[(row, j)] * xq[f];
                for beta in 0..k {
                    r -= jet.d2ldvdv[(j * k + beta, row)] * sopde.gamma[(j * k + alpha) * k + beta];
                }
            }
            for beta in 0..k {
                r -= jet.d2ldvds[(row, beta)] * sopde.g[(alpha, beta)];
            }
            r += jet.dlds[alpha] * jet.dldv[row];
        }
        second_order = second_order.max(r.abs());
    }
    let pdx: f64 = jet.dldv.iter().zip(&dx).map(|(p, d)| p * d).sum();
    let tr: f64 = (0..k).map(|a| sopde.g[(a, a)]).sum();
    let trace = (jet.l + pdx - tr).abs();
    Ok(SopdeReport {
        s_coupling,
        holonomy,
        second_order,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{free, membrane, oscillator, string, Poly2, StringParams};

    fn membrane_point() -> PhasePoint {
        PhasePoint::new(vec![0.5], vec![1.0, 2.0, -1.0], vec![0.1, 0.0, 0.0])
    }

    #[test]
    fn membrane_el_residual_reproduces_damped_wave() {
        let m = membrane(3.7, 0.5);
        let z = PhasePoint::new(vec![0.0], vec![1.0, 0.0, 0.0], vec![0.0; 3]);
        let mut a = vec![0.0; 9];
        a[0] = -0.5; // u_tt
        let r = el_residual(&m, &SecondJet::new(z, a, DMatrix::zeros(3, 3))).unwrap();
        assert!(r.r_el[0].abs() < 1e-15);
    }

    #[test]
    fn static_free_vacuum() {
        let m = free(2, 3);
        let sj = SecondJet::new(PhasePoint::zeros(2, 3), vec![0.0; 18], DMatrix::zeros(3, 3));
        let r = el_residual(&m, &sj).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn string_residual_at_origin() {
        let (rho, gamma) = (1.3, 0.4);
        let p = StringParams::symmetric_gauge(rho, 0.7, 0.1, gamma, 1.0, Poly2::zero());
        let z = PhasePoint::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 2]);
        let r = el_residual(&string(p), &SecondJet::new(z, vec![0.0; 8], DMatrix::zeros(2, 2))).unwrap();
        assert!((r.r_el[0] + gamma * rho).abs() < 1e-15);
    }

    #[test]
    fn evolution_rhs_examples() {
        let m = membrane(1.0, 0.3);
        let z = PhasePoint::new(vec![0.0], vec![0.0; 3], vec![0.0; 3]);
        // u_xx = u_yy = 1
        let accel = evolution_rhs(&m, &z, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!((accel[0] - 2.0).abs() < 1e-15);

        let accel = evolution_rhs(&free(1, 2), &PhasePoint::zeros(1, 2), &[3.0], &[0.0]).unwrap();
        assert!((accel[0] + 3.0).abs() < 1e-15);

        let err = evolution_rhs(&crate::models::s_coupled(0.1), &PhasePoint::zeros(1, 1), &[], &[]);
        assert_eq!(err, Err(Error::SCoupled));
        let err = evolution_rhs(&membrane(1.0, 0.0), &z, &[0.0; 3], &[0.0; 2]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn string_evolution_matches_field_equations() {
        let (rho, tau, lambda, gamma, b) = (1.2, 0.8, 0.3, 0.25, 0.9);
        let p = StringParams::symmetric_gauge(rho, tau, lambda, gamma, b, Poly2::zero());
        let (x, y) = (0.3, -0.2);
        let (xt, xz, yt, yz) = (0.5, -0.4, 0.7, 0.1);
        let z = PhasePoint::new(vec![x, y], vec![xt, xz, yt, yz], vec![0.0; 2]);
        let (xzz, yzz) = (1.1, -0.6);
        let accel = evolution_rhs(&string(p), &z, &[xzz, yzz], &[0.0, 0.0]).unwrap();
        let a1 = -0.5 * b * y;
        let a2 = 0.5 * b * x;
        // Hand derivation from L: ρx_tt − τx_zz = λB y_t + γρx_t + γλA₁ and
        // ρy_tt − τy_zz = −λB x_t + γρy_t + γλA₂.
        let ax = (tau / rho) * xzz + (lambda * b / rho) * yt + gamma * xt + gamma * lambda * a1 / rho;
        let ay = (tau / rho) * yzz - (lambda * b / rho) * xt + gamma * yt + gamma * lambda * a2 / rho;
        assert!((accel[0] - ax).abs() < 1e-14);
        assert!((accel[1] - ay).abs() < 1e-14);
    }

    #[test]
    fn scalar_potential_enters_as_minus_gradient() {
        // φ = x: the force on x is −λ ∂φ/∂x
        let lambda = 0.4;
        let p = StringParams::symmetric_gauge(1.0, 1.0, lambda, 0.0, 0.0, Poly2::monomial(1, 0, 1.0));
        let accel = evolution_rhs(&string(p), &PhasePoint::zeros(2, 2), &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((accel[0] + lambda).abs() < 1e-15);
    }

    #[test]
    fn membrane_sopde_trace_gauge() {
        let m = membrane(2.0, 0.5);
        let sopde = assemble_sopde(&m, &membrane_point()).unwrap();
        assert!((sopde.g[(0, 0)] + 9.55).abs() < 1e-12);
        assert_eq!(sopde.g[(1, 1)], 0.0);
        assert_eq!(sopde.g[(2, 2)], 0.0);
        assert!(verify_sopde(&m, &membrane_point(), &sopde).unwrap().max() < 1e-12);

        let mut bad = sopde.clone();
        bad.gamma[0] += 1.0;
        assert!(verify_sopde(&m, &membrane_point(), &bad).unwrap().max() > 0.9);
    }

    #[test]
    fn damped_oscillator_sopde_is_determined() {
        let gamma = 0.35;
        let m = oscillator(0.0, gamma);
        let z = PhasePoint::new(vec![0.4], vec![-1.3], vec![0.2]);
        let sopde = assemble_sopde(&m, &z).unwrap();
        assert!((sopde.gamma[0] - (-gamma * -1.3)).abs() <= 1e-15);
        assert_eq!(sopde.g[(0, 0)], m.value(&z).unwrap());
        assert!(verify_sopde(&m, &z, &sopde).unwrap().max() < 1e-15);
    }

    #[test]
    fn free_sopde_at_rest_is_zero() {
        let m = free(2, 3);
        let sopde = assemble_sopde(&m, &PhasePoint::zeros(2, 3)).unwrap();
        assert!(sopde.gamma.iter().all(|&g| g == 0.0));
        assert_eq!(sopde.g.trace(), 0.0);
    }

    #[test]
    fn gamma_is_symmetric_for_k_greater_than_one() {
        let p = StringParams::symmetric_gauge(1.0, 2.0, 0.1, 0.3, 1.0, Poly2::monomial(2, 1, 0.5));
        let z = PhasePoint::new(vec![0.3, 0.2], vec![0.1, -0.5, 0.7, 0.2], vec![0.4, 0.0]);
        let sopde = assemble_sopde(&string(p), &z).unwrap();
        for i in 0..2 {
            assert_eq!(sopde.gamma[(i * 2) * 2 + 1], sopde.gamma[(i * 2 + 1) * 2]);
        }
    }
}
