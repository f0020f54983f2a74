use super::EpsSpace;
use crate::error::{Error, Result};
use crate::grid::DiscreteField;
use crate::ground_state::{linearized_kernel, rescale_profile, KernelField, RescaledProfile};
use crate::manifold::{chart_difference, normal_coords, orthonormal_frame, Point};
use nalgebra::DMatrix;

/// W_{eps,xi}, the kernel fields Z^i and their Gram matrix on one grid.
#[derive(Debug, Clone)]
pub struct PeakAnsatz {
    pub eps: f64,
    pub xi: Point,
    pub radius: f64,
    pub rescaled: RescaledProfile,
    pub w: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    /// A Z^i in nodal form.
    pub az: Vec<Vec<f64>>,
    pub gram: DMatrix<f64>,
    pub gram_inv: DMatrix<f64>,
    pub gram_condition: f64,
    /// Nodes inside the geodesic ball with their normal coordinates.
    pub support: Vec<(usize, Vec<f64>)>,
    quad_scale: f64,
}

impl PeakAnsatz {
    pub fn new(space: &EpsSpace, xi: &Point) -> Result<Self> {
        let pr = &space.problem;
        let (eps, r) = (space.eps, pr.cutoff_radius);
        if eps > r {
            return Err(Error::EpsilonTooLarge { eps, r });
        }
        let m = pr.manifold.as_ref();
        let xi = crate::manifold::to_chart(m, xi, 0)?;
        let rescaled = rescale_profile(pr.profile.clone(), &pr.coeffs, &xi.x)?;
        let n = space.n();
        let kernels: Vec<KernelField> = (1..=n).map(|i| linearized_kernel(&rescaled, i)).collect::<Result<_>>()?;
        let frame = orthonormal_frame(m, &xi);
        let frame_inv = frame.clone().try_inverse().ok_or_else(|| Error::InvalidParameter("degenerate frame".into()))?;
        let grid = &space.grid;
        let lower = grid.min_metric_eig.sqrt();
        let len = grid.len();
        let mut w = vec![0.0; len];
        let mut z = vec![vec![0.0; len]; n];
        let mut support = Vec::new();
        for k in 0..len {
            let x = grid.node(k);
            let d = chart_difference(m, 0, &xi.x, &x);
            if d.iter().map(|v| v * v).sum::<f64>().sqrt() * lower >= r {
                continue;
            }
            let y = normal_coords(m, &xi, &frame_inv, &Point::new(0, x))?;
            let s = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if s >= r {
                continue;
            }
            let chi = pr.cutoff.eval(s, r);
            let eta: Vec<f64> = y.iter().map(|v| v / eps).collect();
            w[k] = rescaled.value(&eta) * chi;
            for (i, kf) in kernels.iter().enumerate() {
                z[i][k] = kf.value(&eta) * chi;
            }
            support.push((k, y));
        }
        let az: Vec<Vec<f64>> = z.iter().map(|zi| space.apply_a(zi)).collect();
        let mut gram = DMatrix::zeros(n, n);
        for h in 0..n {
            for k in 0..n {
                gram[(h, k)] = space.quad_scale * crate::linsolve::dot(&az[h], &z[k]);
            }
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        let ev = gram.clone().symmetric_eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        let gram_condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if gram_condition > 1e12 {
            return Err(Error::SingularGram(gram_condition));
        }
        let gram_inv = gram.clone().try_inverse().ok_or(Error::SingularGram(gram_condition))?;
        Ok(Self { eps, xi, radius: r, rescaled, w, z, az, gram, gram_inv, gram_condition, support, quad_scale: space.quad_scale })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// <phi, Z^k>_eps for every k.
    pub fn z_coefficients(&self, phi: &[f64]) -> Vec<f64> {
        self.az.iter().map(|a| self.quad_scale * crate::linsolve::dot(a, phi)).collect()
    }

    /// Component of phi in span{Z^i}: coefficients on the Z basis.
    pub fn kernel_coordinates(&self, phi: &[f64]) -> Vec<f64> {
        let c = nalgebra::DVector::from_vec(self.z_coefficients(phi));
        (&self.gram_inv * c).as_slice().to_vec()
    }

    pub fn project_kernel(&self, phi: &[f64]) -> Vec<f64> {
        let coef = self.kernel_coordinates(phi);
        let mut out = vec![0.0; phi.len()];
        for (c, zh) in coef.iter().zip(&self.z) {
            for (o, v) in out.iter_mut().zip(zh) {
                *o += c * v;
            }
        }
        out
    }

    /// Pi^perp phi = phi - sum_hk (G^{-1})_hk <phi, Z^k> Z^h.
    pub fn project_orthogonal(&self, phi: &[f64]) -> Vec<f64> {
        let k = self.project_kernel(phi);
        phi.iter().zip(&k).map(|(a, b)| a - b).collect()
    }

    /// max_k |<phi, Z^k>| / (|phi| |Z^k|), given |phi|_eps.
    pub fn orthogonality_defect(&self, phi: &[f64], phi_norm: f64) -> f64 {
        if phi_norm == 0.0 {
            return 0.0;
        }
        self.z_coefficients(phi)
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() / (phi_norm * self.gram[(k, k)].sqrt()))
            .fold(0.0, f64::max)
    }
}

pub fn build_peak(space: &EpsSpace, xi: &Point) -> Result<DiscreteField> {
    Ok(space.field(PeakAnsatz::new(space, xi)?.w))
}

/// Z^i for the 1-based axis index i.
pub fn build_kernel_field(space: &EpsSpace, xi: &Point, i: usize) -> Result<DiscreteField> {
    let n = space.n();
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    let mut ans = PeakAnsatz::new(space, xi)?;
    Ok(space.field(ans.z.swap_remove(i - 1)))
}

pub fn gram_z(space: &EpsSpace, xi: &Point) -> Result<DMatrix<f64>> {
    Ok(PeakAnsatz::new(space, xi)?.gram)
}

pub fn project_orthogonal(ansatz: &PeakAnsatz, phi: &DiscreteField) -> Result<DiscreteField> {
    if phi.values.len() != ansatz.w.len() {
        return Err(Error::MeshMismatch);
    }
    Ok(phi.with_values(ansatz.project_orthogonal(&phi.values)))
}
