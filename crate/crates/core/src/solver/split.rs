//! Symmetric split-operator steps with an exact spectral kinetic factor.

use num_complex::Complex64;

use crate::grid::SpaceGrid;
use crate::spectral::Spectral;

#[derive(Debug, Clone)]
pub struct SplitStepper {
    spectral: Spectral,
    half_dt: f64,
    g: f64,
    dv: f64,
    kinetic: Vec<Complex64>,
    kinetic_adj: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SplitStepper {
    pub fn new(grid: &SpaceGrid, dt: f64, g: f64) -> Self {
        let spectral = Spectral::new(grid);
        let kinetic: Vec<Complex64> = spectral
            .k_squared()
            .iter()
            .map(|k2| Complex64::from_polar(1.0, -0.5 * dt * k2))
            .collect();
        let kinetic_adj = kinetic.iter().map(|z| z.conj()).collect();
        Self {
            spectral,
            half_dt: 0.5 * dt,
            g,
            dv: grid.cell_volume(),
            kinetic,
            kinetic_adj,
            scratch: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    fn diagonal(&mut self, data: &mut [Complex64], adjoint: bool) {
        self.spectral.forward(data);
        let factors = if adjoint { &self.kinetic_adj } else { &self.kinetic };
        for (v, f) in data.iter_mut().zip(factors) {
            *v *= f;
        }
        self.spectral.inverse(data);
    }

    /// `psi <- exp(-i a (V + g |psi|^2)) psi` pointwise.
    fn phase(&self, v: &[f64], psi: &mut [Complex64]) {
        let (a, g) = (self.half_dt, self.g);
        for (z, vi) in psi.iter_mut().zip(v) {
            *z *= Complex64::from_polar(1.0, -a * (vi + g * z.norm_sqr()));
        }
    }

    /// One step `t_m -> t_{m+1}`; the end phase uses the modulus after the
    /// kinetic factor, which equals the modulus of the result.
    pub fn forward(&mut self, v_m: &[f64], v_next: &[f64], psi: &mut [Complex64]) {
        self.phase(v_m, psi);
        self.diagonal(psi, false);
        self.phase(v_next, psi);
    }

    /// Transposed linearization of one phase factor evaluated at `chi`:
    /// `u <- e^{i theta} u + 2 i a g Re(conj(e^{i theta} u) chi) chi`.
    fn phase_adjoint(&self, v: &[f64], chi: &[Complex64], u: &mut [Complex64]) {
        let (a, g) = (self.half_dt, self.g);
        for ((z, vi), c) in u.iter_mut().zip(v).zip(chi) {
            let w = *z * Complex64::from_polar(1.0, a * (vi + g * c.norm_sqr()));
            *z = w + Complex64::new(0.0, 2.0 * a * g * (w.conj() * c).re) * c;
        }
    }

    /// Adjoint step `p_{m+1} -> p_m` around the forward step that produced
    /// `psi_next` from `psi_m`.
    pub fn backward(
        &mut self,
        v_m: &[f64],
        v_next: &[f64],
        psi_m: &[Complex64],
        psi_next: &[Complex64],
        p: &mut [Complex64],
    ) {
        if self.g == 0.0 {
            self.phase_adjoint(v_next, psi_next, p);
        } else {
            // the end phase was evaluated at phi = exp(i theta) psi_next
            let mut phi = std::mem::take(&mut self.scratch);
            phi.copy_from_slice(psi_next);
            let a = self.half_dt;
            for (z, vi) in phi.iter_mut().zip(v_next) {
                *z *= Complex64::from_polar(1.0, a * (vi + self.g * z.norm_sqr()));
            }
            self.phase_adjoint(v_next, &phi, p);
            self.scratch = phi;
        }
        self.diagonal(p, true);
        self.phase_adjoint(v_m, psi_m, p);
    }

    /// Imaginary-time step with renormalization left to the caller.
    pub fn relax(&mut self, tau: f64, v: &[f64], psi: &mut [Complex64]) {
        let (g, dv) = (self.g, self.dv);
        // the interaction uses the unit-norm density at the start of the step
        let n2 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dv;
        let factors: Vec<f64> = psi
            .iter()
            .zip(v)
            .map(|(z, vi)| (-0.5 * tau * (vi + g * z.norm_sqr() / n2)).exp())
            .collect();
        psi.iter_mut().zip(&factors).for_each(|(z, f)| *z *= f);
        self.spectral.kinetic_decay(psi, tau);
        psi.iter_mut().zip(&factors).for_each(|(z, f)| *z *= f);
    }

    pub fn spectral_mut(&mut self) -> &mut Spectral {
        &mut self.spectral
    }
}
