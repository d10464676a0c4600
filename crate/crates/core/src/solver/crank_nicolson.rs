//! Crank–Nicolson stepping with a periodic finite-difference Laplacian.
//!
//! Both factors use the step-averaged potential `(V_m + V_{m+1}) / 2`, which
//! keeps the update a Cayley transform of one Hermitian matrix and therefore
//! exactly unitary.

use num_complex::Complex64;

use crate::error::{OctError, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Solves `M x = rhs` for a cyclic tridiagonal `M` with diagonal `diag` and a
/// constant off-diagonal `off` (corners included). `rhs` is overwritten.
#[derive(Debug, Clone)]
pub struct CyclicSolver {
    gamma: Vec<Complex64>,
    u: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl CyclicSolver {
    pub fn new(n: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            gamma: vec![z; n],
            u: vec![z; n],
            b: vec![z; n],
        }
    }

    fn tridiag(&mut self, off: Complex64, rhs: &mut [Complex64]) -> Result<()> {
        let n = rhs.len();
        let b = &self.b;
        let mut bet = b[0];
        if bet.norm() < 1e-300 {
            return Err(OctError::Numerical("singular tridiagonal system".into()));
        }
        rhs[0] /= bet;
        for j in 1..n {
            self.gamma[j] = off / bet;
            bet = b[j] - off * self.gamma[j];
            if bet.norm() < 1e-300 {
                return Err(OctError::Numerical("singular tridiagonal system".into()));
            }
            rhs[j] = (rhs[j] - off * rhs[j - 1]) / bet;
        }
        for j in (0..n - 1).rev() {
            let r = rhs[j + 1];
            rhs[j] -= self.gamma[j + 1] * r;
        }
        Ok(())
    }

    pub fn solve(&mut self, diag: &[Complex64], off: Complex64, rhs: &mut [Complex64]) -> Result<()> {
        let n = diag.len();
        debug_assert_eq!(rhs.len(), n);
        // Sherman–Morrison: M = T + u v^T with u = (g, 0, .., off), v = (1, 0, .., off/g)
        let g = -diag[0];
        self.b.copy_from_slice(diag);
        self.b[0] = diag[0] - g;
        self.b[n - 1] = diag[n - 1] - off * off / g;
        self.tridiag(off, rhs)?;
        self.u.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        self.u[0] = g;
        self.u[n - 1] = off;
        let mut u = std::mem::take(&mut self.u);
        self.tridiag(off, &mut u)?;
        let fact_num = rhs[0] + off * rhs[n - 1] / g;
        let fact_den = Complex64::new(1.0, 0.0) + u[0] + off * u[n - 1] / g;
        if fact_den.norm() < 1e-300 {
            return Err(OctError::Numerical("singular cyclic correction".into()));
        }
        let fact = fact_num / fact_den;
        for (r, z) in rhs.iter_mut().zip(&u) {
            *r -= fact * z;
        }
        self.u = u;
        Ok(())
    }
}

/// Matrices `1 + s i a H` for `H = -1/2 D2 + V` on a periodic grid.
#[derive(Debug, Clone)]
pub struct CnStepper {
    n: usize,
    half_dt: f64,
    inv_dx2: f64,
    diag: Vec<Complex64>,
    rhs: Vec<Complex64>,
    solver: CyclicSolver,
}

impl CnStepper {
    pub fn new(n: usize, dx: f64, dt: f64) -> Self {
        Self {
            n,
            half_dt: 0.5 * dt,
            inv_dx2: 1.0 / (dx * dx),
            diag: vec![Complex64::new(0.0, 0.0); n],
            rhs: vec![Complex64::new(0.0, 0.0); n],
            solver: CyclicSolver::new(n),
        }
    }

    /// `out = (1 + sign i a H) x`
    fn apply(&self, sign: f64, v_bar: &[f64], x: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let c = sign * self.half_dt * I;
        for i in 0..n {
            let left = x[(i + n - 1) % n];
            let right = x[(i + 1) % n];
            let h = (x[i] - 0.5 * (left + right)) * self.inv_dx2 + v_bar[i] * x[i];
            out[i] = x[i] + c * h;
        }
    }

    /// `x <- (1 + sign i a H)^{-1} x`
    fn solve(&mut self, sign: f64, v_bar: &[f64], x: &mut [Complex64]) -> Result<()> {
        let c = sign * self.half_dt * I;
        for (d, v) in self.diag.iter_mut().zip(v_bar) {
            *d = Complex64::new(1.0, 0.0) + c * (self.inv_dx2 + v);
        }
        let off = -0.5 * c * self.inv_dx2;
        self.solver.solve(&self.diag, off, x)
    }

    /// `psi <- A^{-1} B psi`
    pub fn forward(&mut self, v_bar: &[f64], psi: &mut [Complex64]) -> Result<()> {
        let mut rhs = std::mem::take(&mut self.rhs);
        self.apply(-1.0, v_bar, psi, &mut rhs);
        self.solve(1.0, v_bar, &mut rhs)?;
        psi.copy_from_slice(&rhs);
        self.rhs = rhs;
        Ok(())
    }

    /// Adjoint step: `s = B^{-1} p` is written to `s`, then `p <- A s`.
    pub fn backward(&mut self, v_bar: &[f64], p: &mut [Complex64], s: &mut [Complex64]) -> Result<()> {
        s.copy_from_slice(p);
        self.solve(-1.0, v_bar, s)?;
        self.apply(1.0, v_bar, s, p);
        Ok(())
    }

    /// Inverse of [`forward`](Self::forward): `psi <- B^{-1} A psi`.
    pub fn reverse(&mut self, v_bar: &[f64], psi: &mut [Complex64]) -> Result<()> {
        let mut rhs = std::mem::take(&mut self.rhs);
        self.apply(1.0, v_bar, psi, &mut rhs);
        self.solve(-1.0, v_bar, &mut rhs)?;
        psi.copy_from_slice(&rhs);
        self.rhs = rhs;
        Ok(())
    }

    /// Backward-Euler imaginary-time step `psi <- (1 + tau H)^{-1} psi`.
    pub fn relax(&mut self, tau: f64, v: &[f64], psi: &mut [Complex64]) -> Result<()> {
        for (d, vi) in self.diag.iter_mut().zip(v) {
            *d = Complex64::new(1.0 + tau * (self.inv_dx2 + vi), 0.0);
        }
        let off = Complex64::new(-0.5 * tau * self.inv_dx2, 0.0);
        self.solver.solve(&self.diag, off, psi)
    }
}

/// `<psi| -1/2 D2 |psi>` with the periodic three-point stencil, unweighted.
pub fn fd_kinetic_sum(psi: &[Complex64], dx: f64) -> f64 {
    let n = psi.len();
    (0..n).map(|i| (psi[(i + 1) % n] - psi[i]).norm_sqr()).sum::<f64>() * 0.5 / (dx * dx)
}
