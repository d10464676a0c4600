//! Three-wire atom-chip trap.
//!
//! Model: three infinite straight wires on the chip surface (`z = 0`) running
//! along `y`, at `x = -s, 0, +s`. The outer pair carries `I_ext` (same
//! direction), the central wire carries `I_c` in the opposite direction. A
//! uniform bias field along `x` and a weak field along the wires (`y`) are
//! superimposed. The 1D confinement along `x` is the valley of `|B|`: for each
//! `x` the field magnitude is minimized over the height `z`, i.e. the tight
//! vertical confinement is followed adiabatically.
//!
//! Increasing `I_c` drives the on-axis pair of field zeros through a hexapole
//! point where they leave the axis sideways, which turns the single well into a
//! double well. By default the bias is tuned so that this happens at
//! `lambda = 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{OctError, Result};

/// `mu_0 / (2 pi)` expressed in gauss * micrometer / milliampere.
const WIRE_FIELD_G_UM_PER_MA: f64 = 2.0;

/// Bohr magneton per gauss in units of `hbar^2 / (m_Rb87 * 1 um^2)`.
pub const BOHR_MAGNETON_PER_GAUSS: f64 = 12_034.6;

/// How the transverse bias field is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasField {
    /// Fixed magnitude in gauss.
    Fixed(f64),
    /// Tuned so the single-to-double-well transition happens at this `lambda`.
    SplitAt(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeWireTrap {
    /// Distance between neighbouring wires, micrometers.
    pub wire_spacing: f64,
    pub bias_field: BiasField,
    /// Field component along the wires, gauss.
    pub ioffe_field: f64,
    /// Outer-wire current law `I_ext = base + lambda * slope`, milliamperes.
    pub current_ext_base: f64,
    pub current_ext_slope: f64,
    /// Central-wire current law `I_c = base + lambda * slope`, milliamperes.
    pub current_c_base: f64,
    pub current_c_slope: f64,
    /// `m_F * g_F` of the trapped state (87Rb, F = 2, m_F = 2: 1).
    pub mf_gf: f64,
    /// Height window searched for the field minimum, micrometers.
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for ThreeWireTrap {
    fn default() -> Self {
        Self {
            wire_spacing: 20.0,
            bias_field: BiasField::SplitAt(0.5),
            ioffe_field: 1.0,
            current_ext_base: 140.0,
            current_ext_slope: 2.91,
            current_c_base: 0.25,
            current_c_slope: 4.4,
            mf_gf: 1.0,
            z_min: 2.0,
            z_max: 120.0,
        }
    }
}

/// Magnetic field vector `(B_x, B_y, B_z)` in gauss.
pub type FieldVector = [f64; 3];

impl ThreeWireTrap {
    pub fn currents(&self, lambda: f64) -> (f64, f64) {
        (
            self.current_ext_base + lambda * self.current_ext_slope,
            self.current_c_base + lambda * self.current_c_slope,
        )
    }

    /// Same trap with every current and field multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let bias = self.bias_magnitude() * factor;
        Self {
            bias_field: BiasField::Fixed(bias),
            ioffe_field: self.ioffe_field * factor,
            current_ext_base: self.current_ext_base * factor,
            current_ext_slope: self.current_ext_slope * factor,
            current_c_base: self.current_c_base * factor,
            current_c_slope: self.current_c_slope * factor,
            ..self.clone()
        }
    }

    /// Transverse bias in gauss.
    pub fn bias_magnitude(&self) -> f64 {
        match self.bias_field {
            BiasField::Fixed(b) => b,
            BiasField::SplitAt(lambda) => self.hexapole_bias(lambda),
        }
    }

    /// Bias at which the on-axis field `B_x(0, z)` just touches zero: the
    /// maximum over `z` of the wire contribution.
    fn hexapole_bias(&self, lambda: f64) -> f64 {
        let (ie, ic) = self.currents(lambda);
        let s = self.wire_spacing;
        let k = WIRE_FIELD_G_UM_PER_MA;
        let f = |z: f64| 2.0 * k * ie * z / (s * s + z * z) - k * ic / z;
        maximize(f, self.z_min, self.z_max)
    }

    /// Wire positions and signed currents (positive = +y).
    fn wires(&self, lambda: f64) -> [(f64, f64); 3] {
        let (ie, ic) = self.currents(lambda);
        let s = self.wire_spacing;
        [(-s, ie), (0.0, -ic), (s, ie)]
    }

    fn wire_slopes(&self) -> [(f64, f64); 3] {
        let s = self.wire_spacing;
        [
            (-s, self.current_ext_slope),
            (0.0, -self.current_c_slope),
            (s, self.current_ext_slope),
        ]
    }

    fn field_from(wires: &[(f64, f64); 3], bias: [f64; 3], x: f64, z: f64) -> Result<FieldVector> {
        let mut b = bias;
        for &(xw, current) in wires {
            let dx = x - xw;
            let r2 = dx * dx + z * z;
            if r2 < 1e-18 {
                return Err(OctError::Singularity(format!(
                    "point ({x}, {z}) lies on the wire at x = {xw}"
                )));
            }
            // y_hat x (dx, 0, z) = (z, 0, -dx)
            let c = WIRE_FIELD_G_UM_PER_MA * current / r2;
            b[0] += c * z;
            b[2] -= c * dx;
        }
        Ok(b)
    }

    /// Field at `(x, z)` in gauss, with `z` the height above the chip.
    pub fn field(&self, x: f64, z: f64, lambda: f64) -> Result<FieldVector> {
        let bias = [-self.bias_magnitude(), self.ioffe_field, 0.0];
        Self::field_from(&self.wires(lambda), bias, x, z)
    }

    /// Height of the field minimum above `x`.
    pub fn valley_height(&self, x: f64, lambda: f64) -> Result<f64> {
        let bias = [-self.bias_magnitude(), self.ioffe_field, 0.0];
        let wires = self.wires(lambda);
        let mag2 = |z: f64| Self::field_from(&wires, bias, x, z).map(|b| b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
        // coarse scan, then golden-section refinement of the best bracket
        const SCAN: usize = 240;
        let h = (self.z_max - self.z_min) / SCAN as f64;
        let mut best = (self.z_min, f64::INFINITY);
        for i in 0..=SCAN {
            let z = self.z_min + i as f64 * h;
            let v = mag2(z)?;
            if v < best.1 {
                best = (z, v);
            }
        }
        let lo = (best.0 - h).max(self.z_min);
        let hi = (best.0 + h).min(self.z_max);
        Ok(minimize(|z| mag2(z).unwrap_or(f64::INFINITY), lo, hi))
    }

    /// Trap potential `m_F g_F mu_B |B|` along the valley, in energy units.
    pub fn potential(&self, x: f64, lambda: f64) -> Result<f64> {
        let z = self.valley_height(x, lambda)?;
        let b = self.field(x, z, lambda)?;
        Ok(self.mf_gf * BOHR_MAGNETON_PER_GAUSS * norm3(b))
    }

    /// `dV/dlambda` along the valley. The minimization over `z` drops out
    /// (envelope theorem), leaving `B . dB/dlambda / |B|`.
    pub fn potential_derivative(&self, x: f64, lambda: f64) -> Result<f64> {
        let z = self.valley_height(x, lambda)?;
        let b = self.field(x, z, lambda)?;
        let db = Self::field_from(&self.wire_slopes(), [0.0; 3], x, z)?;
        let mag = norm3(b);
        if mag == 0.0 {
            return Ok(0.0);
        }
        let dot = b[0] * db[0] + b[1] * db[1] + b[2] * db[2];
        Ok(self.mf_gf * BOHR_MAGNETON_PER_GAUSS * dot / mag)
    }
}

fn norm3(b: FieldVector) -> f64 {
    (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn minimize<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-10 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    const SCAN: usize = 400;
    let h = (hi - lo) / SCAN as f64;
    let zbest = (0..=SCAN)
        .map(|i| lo + i as f64 * h)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(lo);
    let z = minimize(|z| -f(z), (zbest - h).max(lo), (zbest + h).min(hi));
    f(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn local_minima(trap: &ThreeWireTrap, lambda: f64) -> Vec<f64> {
        let xs: Vec<f64> = (0..=400).map(|i| -30.0 + 0.15 * i as f64).collect();
        let v: Vec<f64> = xs.iter().map(|&x| trap.potential(x, lambda).unwrap()).collect();
        (1..v.len() - 1)
            .filter(|&i| v[i] < v[i - 1] && v[i] < v[i + 1])
            .map(|i| xs[i])
            .collect()
    }

    #[test]
    fn currents_follow_affine_law() {
        let t = ThreeWireTrap::default();
        assert_eq!(t.currents(0.0), (140.0, 0.25));
        let (ie, ic) = t.currents(1.0);
        assert!((ie - 142.91).abs() < 1e-12);
        assert!((ic - 4.65).abs() < 1e-12);
    }

    #[test]
    fn single_well_turns_into_double_well() {
        let t = ThreeWireTrap::default();
        let m0 = local_minima(&t, 0.0);
        assert_eq!(m0.len(), 1, "{m0:?}");
        assert!(m0[0].abs() < 0.2);
        let m1 = local_minima(&t, 1.0);
        assert_eq!(m1.len(), 2, "{m1:?}");
        assert!((m1[0] + m1[1]).abs() < 0.2);
    }

    #[test]
    fn field_is_linear_in_sources() {
        let t = ThreeWireTrap::default();
        let t2 = t.scaled(2.0);
        for &(x, z, l) in &[(0.0, 20.0, 0.0), (3.5, 14.0, 0.7), (-11.0, 40.0, 1.0)] {
            let b1 = norm3(t.field(x, z, l).unwrap());
            let b2 = norm3(t2.field(x, z, l).unwrap());
            assert!((b2 - 2.0 * b1).abs() < 1e-12 * b2.max(1.0));
        }
        let v1 = t.potential(2.0, 0.3).unwrap();
        let v2 = t2.potential(2.0, 0.3).unwrap();
        assert!((v2 - 2.0 * v1).abs() < 1e-6 * v2);
    }

    #[test]
    fn wire_position_is_singular() {
        let t = ThreeWireTrap::default();
        assert!(matches!(t.field(20.0, 0.0, 0.5), Err(OctError::Singularity(_))));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let t = ThreeWireTrap::default();
        for &(x, l) in &[(0.0, 0.3), (4.0, 0.6), (-9.0, 0.9), (15.0, 0.2)] {
            let h = 1e-6;
            let fd = (t.potential(x, l + h).unwrap() - t.potential(x, l - h).unwrap()) / (2.0 * h);
            let an = t.potential_derivative(x, l).unwrap();
            // potentials are O(1e3) energy units; derivatives near zero get an absolute floor
            assert!(
                (fd - an).abs() <= 1e-5 * an.abs().max(10.0),
                "x={x} l={l}: {fd} vs {an}"
            );
        }
    }
}
