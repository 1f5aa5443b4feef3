//! Lagrangian energy, contact forms, Legendre map, fibre Hessian and Reeb fields.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonian::MomentumPoint;
use crate::jet::{evaluate_jet, Jet2, LagrangianModel, PhasePoint};

/// Default scale-invariant rank tolerance for the fibre Hessian.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Coefficients of `η^α = ds^α − p^α_i dqⁱ`; `p` is flat `n × k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactCoeffs {
    pub p: Vec<f64>,
}

/// Fibre Hessian `W^{αβ}_{ij}` indexed by flat pairs.
#[derive(Clone, Debug)]
pub struct HessianW {
    pub w: DMatrix<f64>,
    pub winv: Option<DMatrix<f64>>,
    pub regular: bool,
    /// `σ_max / σ_min`; infinite when singular.
    pub cond: f64,
}

/// `(R_L)_α = ∂/∂s^α + vcomp[α]_{(i,β)} ∂/∂vⁱ_β`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReebFields {
    pub vcomp: Vec<DVector<f64>>,
}

/// `E_L = Σ vⁱ_α ∂L/∂vⁱ_α − L`.
pub fn energy(jet: &Jet2, z: &PhasePoint) -> f64 {
    dot(&z.v, &jet.dldv) - jet.l
}

pub fn contact_coeffs(jet: &Jet2) -> ContactCoeffs {
    ContactCoeffs { p: jet.dldv.clone() }
}

pub fn legendre(jet: &Jet2, z: &PhasePoint) -> MomentumPoint {
    MomentumPoint {
        q: z.q.clone(),
        p: jet.dldv.clone(),
        s: z.s.clone(),
    }
}

pub fn hessian(jet: &Jet2, rank_tol: f64) -> HessianW {
    assert!(rank_tol > 0.0, "rank tolerance must be positive");
    let w = symmetrized(&jet.d2ldvdv);
    let (regular, cond) = rank_test(&w, rank_tol);
    let winv = if regular { w.clone().try_inverse() } else { None };
    HessianW {
        regular: winv.is_some(),
        w,
        winv,
        cond,
    }
}

pub(crate) fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `(σ_min > tol · σ_max, σ_max / σ_min)`.
pub(crate) fn rank_test(m: &DMatrix<f64>, tol: f64) -> (bool, f64) {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    (smax > 0.0 && smin > tol * smax, cond)
}

pub fn reeb(jet: &Jet2, hess: &HessianW) -> Result<ReebFields> {
    let winv = hess.winv.as_ref().ok_or(Error::NotRegular)?;
    let vcomp = (0..jet.k()).map(|alpha| -(winv * jet.d2ldvds.column(alpha))).collect();
    Ok(ReebFields { vcomp })
}

/// Residuals of `i(R_β)η^α = δ^α_β` and `i(R_β)dη^α = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReebReport {
    pub eta: f64,
    /// Contraction assembled from the jet blocks.
    pub deta: f64,
    /// Same contraction with `R_β(p^α_i)` taken by central differences of `p`.
    pub deta_fd: f64,
}

impl ReebReport {
    pub fn max(&self) -> f64 {
        self.eta.max(self.deta)
    }
}

pub fn verify_reeb(model: &LagrangianModel, z: &PhasePoint, h: f64) -> Result<ReebReport> {
    let jet = evaluate_jet(model, z)?;
    let hess = hessian(&jet, DEFAULT_RANK_TOL);
    let r = reeb(&jet, &hess)?;
    let (n, k) = (model.n(), model.k());
    let nk = n * k;

    // η^α(R_β) = R_β^{s^α} − p^α_i R_β^{qⁱ}; Reeb fields carry no ∂/∂q part.
    let r_q = vec![0.0; n];
    let mut eta: f64 = 0.0;
    for beta in 0..k {
        for alpha in 0..k {
            let r_s = if alpha == beta { 1.0 } else { 0.0 };
            let delta = if alpha == beta { 1.0 } else { 0.0 };
            let pq: f64 = (0..n).map(|i| jet.dldv[i * k + alpha] * r_q[i]).sum();
            eta = eta.max((r_s - pq - delta).abs());
        }
    }

    // dη^α = dqⁱ ∧ dp^α_i, so i(R_β)dη^α = −R_β(p^α_i) dqⁱ.
    let mut deta: f64 = 0.0;
    for (beta, vc) in r.vcomp.iter().enumerate() {
        let rp = jet.d2ldvds.column(beta) + &jet.d2ldvdv * vc;
        deta = deta.max(rp.amax());
    }

    let mut deta_fd: f64 = 0.0;
    for (beta, vc) in r.vcomp.iter().enumerate() {
        let mut dir = DVector::zeros(n + nk + k);
        dir.rows_mut(n, nk).copy_from(vc);
        dir[n + nk + beta] = 1.0;
        let shift = |sign: f64| {
            let c: Vec<f64> = z
                .coords()
                .iter()
                .zip(dir.iter())
                .map(|(x, d)| x + sign * h * d)
                .collect();
            PhasePoint::from_coords(n, k, &c)
        };
        let jp = evaluate_jet(model, &shift(1.0))?;
        let jm = evaluate_jet(model, &shift(-1.0))?;
        for a in 0..nk {
            deta_fd = deta_fd.max(((jp.dldv[a] - jm.dldv[a]) / (2.0 * h)).abs());
        }
    }

    Ok(ReebReport { eta, deta, deta_fd })
}

/// `∂E_L/∂s^α = Σ vʲ_γ ∂²L/∂vʲ_γ∂s^α − ∂L/∂s^α`.
pub fn energy_ds(jet: &Jet2, z: &PhasePoint) -> Vec<f64> {
    (0..jet.k())
        .map(|alpha| dot(&z.v, jet.d2ldvds.column(alpha).as_slice()) - jet.dlds[alpha])
        .collect()
}

/// `∂E_L/∂vⁱ_β = Σ vʲ_γ W^{γβ}_{ji}`.
pub fn energy_dv(jet: &Jet2, z: &PhasePoint) -> DVector<f64> {
    jet.d2ldvdv.transpose() * DVector::from_column_slice(&z.v)
}

/// `∂E_L/∂qʲ = Σ vⁱ_α ∂²L/∂vⁱ_α∂qʲ − ∂L/∂qʲ`.
pub fn energy_dq(jet: &Jet2, z: &PhasePoint) -> Vec<f64> {
    (0..jet.n())
        .map(|j| dot(&z.v, jet.d2ldvdq.column(j).as_slice()) - jet.dldq[j])
        .collect()
}

/// `(R_L)_α(E_L)` for every `α`.
pub fn reeb_derivative_of_energy(jet: &Jet2, z: &PhasePoint, reeb: &ReebFields) -> Vec<f64> {
    let de_ds = energy_ds(jet, z);
    let de_dv = energy_dv(jet, z);
    reeb.vcomp
        .iter()
        .zip(de_ds)
        .map(|(vc, ds)| ds + vc.dot(&de_dv))
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{free, membrane, s_coupled, string, Poly2, StringParams};

    fn z0() -> PhasePoint {
        PhasePoint::new(vec![0.5], vec![1.0, 2.0, -1.0], vec![0.1, 0.0, 0.0])
    }

    #[test]
    fn membrane_energy_and_momenta() {
        let m = membrane(2.0, 0.5);
        let jet = evaluate_jet(&m, &z0()).unwrap();
        assert!((energy(&jet, &z0()) + 9.45).abs() < 1e-12);
        assert_eq!(contact_coeffs(&jet).p, vec![1.0, -8.0, 4.0]);
        let mp = legendre(&jet, &z0());
        assert_eq!(mp.q, vec![0.5]);
        assert_eq!(mp.s, vec![0.1, 0.0, 0.0]);
    }

    #[test]
    fn energy_is_minus_lagrangian_at_rest() {
        let m = membrane(1.3, 0.2);
        let z = PhasePoint::new(vec![0.2], vec![0.0; 3], vec![0.7, 0.1, -0.4]);
        let jet = evaluate_jet(&m, &z).unwrap();
        assert_eq!(energy(&jet, &z), -jet.l);
    }

    #[test]
    fn free_energy_equals_lagrangian() {
        let m = free(2, 2);
        let z = PhasePoint::new(vec![0.3, 1.0], vec![0.5, -1.0, 2.0, 0.25], vec![0.0, 1.0]);
        let jet = evaluate_jet(&m, &z).unwrap();
        assert!((energy(&jet, &z) - jet.l).abs() < 1e-14);
    }

    #[test]
    fn hessian_regularity_verdicts() {
        let jet = evaluate_jet(&membrane(2.0, 0.5), &z0()).unwrap();
        let h = hessian(&jet, DEFAULT_RANK_TOL);
        assert!(h.regular);
        assert_eq!(h.w, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -4.0, -4.0])));
        assert!((h.cond - 4.0).abs() < 1e-12);
        let winv = h.winv.unwrap();
        let eye = &h.w * &winv;
        assert!((eye - DMatrix::identity(3, 3)).amax() < 1e-9);

        let jet = evaluate_jet(&membrane(0.0, 0.5), &z0()).unwrap();
        let h = hessian(&jet, DEFAULT_RANK_TOL);
        assert!(!h.regular);
        assert!(h.winv.is_none());
        assert!(matches!(reeb(&jet, &h), Err(Error::NotRegular)));
    }

    #[test]
    fn string_hessian_is_diagonal_in_flat_ordering() {
        let p = StringParams::symmetric_gauge(1.5, 2.5, 0.1, 0.3, 1.0, Poly2::zero());
        let z = PhasePoint::new(vec![0.2, -0.3], vec![0.1, 0.2, 0.3, 0.4], vec![0.0, 0.0]);
        let jet = evaluate_jet(&string(p), &z).unwrap();
        let h = hessian(&jet, DEFAULT_RANK_TOL);
        // flat order (x_t, x_z, y_t, y_z)
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.5, -2.5, 1.5, -2.5]));
        assert_eq!(h.w, expect);
        assert!(h.regular);
        let singular = StringParams::symmetric_gauge(0.0, 2.5, 0.1, 0.3, 1.0, Poly2::zero());
        let jet = evaluate_jet(&string(singular), &z).unwrap();
        assert!(!hessian(&jet, DEFAULT_RANK_TOL).regular);
    }

    #[test]
    fn reeb_fields_of_fixtures() {
        let jet = evaluate_jet(&membrane(2.0, 0.5), &z0()).unwrap();
        let r = reeb(&jet, &hessian(&jet, DEFAULT_RANK_TOL)).unwrap();
        assert!(r.vcomp.iter().all(|c| c.amax() == 0.0));
        assert_eq!(reeb_derivative_of_energy(&jet, &z0(), &r), vec![0.5, 0.0, 0.0]);

        let eps = 0.3;
        let z = PhasePoint::new(vec![0.1], vec![0.7], vec![-0.2]);
        let jet = evaluate_jet(&s_coupled(eps), &z).unwrap();
        let r = reeb(&jet, &hessian(&jet, DEFAULT_RANK_TOL)).unwrap();
        assert!((r.vcomp[0][0] + eps).abs() < 1e-15);
    }

    #[test]
    fn string_reeb_derivative_of_energy() {
        let gamma = 0.3;
        let p = StringParams::symmetric_gauge(1.2, 0.8, 0.1, gamma, 1.0, Poly2::monomial(2, 0, 0.5));
        let z = PhasePoint::new(vec![0.2, -0.3], vec![0.1, 0.2, 0.3, 0.4], vec![0.5, -0.1]);
        let jet = evaluate_jet(&string(p), &z).unwrap();
        let r = reeb(&jet, &hessian(&jet, DEFAULT_RANK_TOL)).unwrap();
        let d = reeb_derivative_of_energy(&jet, &z, &r);
        assert!((d[0] + gamma).abs() < 1e-14);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn verify_reeb_on_coupled_fixture() {
        let z = PhasePoint::new(vec![0.1], vec![0.7], vec![-0.2]);
        let rep = verify_reeb(&s_coupled(0.3), &z, 1e-4).unwrap();
        assert!(rep.max() <= 1e-10);
        assert!(rep.deta_fd <= 1e-8);
        let rep = verify_reeb(&free(2, 3), &PhasePoint::zeros(2, 3), 1e-4).unwrap();
        assert_eq!(rep.max(), 0.0);
    }
}
