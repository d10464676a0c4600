//! Potentials supplied as slices on a grid at a list of control values.

use std::io::{Read, Write};

use crate::error::{OctError, Result};
use crate::grid::SpaceGrid;
use crate::io::{read_record, write_record, FieldRecord};

/// Potential slices `V(r, lambda_j)`, linearly interpolated in `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    grid: SpaceGrid,
    lambdas: Vec<f64>,
    slices: Vec<Vec<f64>>,
}

impl TabulatedPotential {
    pub fn new(grid: SpaceGrid, lambdas: Vec<f64>, slices: Vec<Vec<f64>>) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(OctError::ContractViolation(
                "tabulated potential needs at least two lambda samples".into(),
            ));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OctError::ContractViolation(
                "lambda samples must be strictly increasing".into(),
            ));
        }
        if lambdas[0] != 0.0 || *lambdas.last().unwrap() != 1.0 {
            return Err(OctError::ContractViolation(
                "lambda samples must start at 0 and end at 1".into(),
            ));
        }
        if slices.len() != lambdas.len() {
            return Err(OctError::Dimension(format!(
                "{} slices for {} lambda samples",
                slices.len(),
                lambdas.len()
            )));
        }
        if let Some(bad) = slices.iter().find(|s| s.len() != grid.len()) {
            return Err(OctError::Dimension(format!(
                "slice has {} values, grid has {}",
                bad.len(),
                grid.len()
            )));
        }
        if slices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(OctError::ContractViolation("non-finite potential value".into()));
        }
        Ok(Self { grid, lambdas, slices })
    }

    /// Tabulates `f(index, lambda)` at `n` equally spaced control values.
    pub fn from_fn<F>(grid: SpaceGrid, n: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, f64) -> Result<f64>,
    {
        let n = n.max(2);
        let lambdas: Vec<f64> = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
        let slices = lambdas
            .iter()
            .map(|&l| (0..grid.len()).map(|i| f(i, l)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, lambdas, slices)
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }

    /// Same table with `c` added to every value.
    pub fn offset_by(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            lambdas: self.lambdas.clone(),
            slices: self.slices.iter().map(|s| s.iter().map(|v| v + c).collect()).collect(),
        }
    }

    /// Segment `j` with `lambda_j <= lambda <= lambda_{j+1}`; end segments are
    /// used for extrapolation.
    fn segment(&self, lambda: f64) -> usize {
        let n = self.lambdas.len();
        match self.lambdas.partition_point(|&l| l <= lambda) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    pub(crate) fn value_at(&self, index: usize, lambda: f64) -> f64 {
        let j = self.segment(lambda);
        let (l0, l1) = (self.lambdas[j], self.lambdas[j + 1]);
        let t = (lambda - l0) / (l1 - l0);
        (1.0 - t) * self.slices[j][index] + t * self.slices[j + 1][index]
    }

    pub(crate) fn slope_at(&self, index: usize, lambda: f64) -> f64 {
        let j = self.segment(lambda);
        (self.slices[j + 1][index] - self.slices[j][index]) / (self.lambdas[j + 1] - self.lambdas[j])
    }

    pub(crate) fn check_grid(&self, grid: &SpaceGrid) -> Result<()> {
        if *grid != self.grid {
            return Err(OctError::Dimension(
                "tabulated potential was built for a different grid".into(),
            ));
        }
        Ok(())
    }

    /// Two concatenated field records: the lambda samples (rank 1), then the
    /// slices with dims `[n_lambda, n_x(, n_y)]`.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        write_record(
            w,
            &FieldRecord::real(vec![self.lambdas.len() as u32], self.lambdas.clone())?,
        )?;
        let mut dims = vec![self.lambdas.len() as u32, self.grid.n_x() as u32];
        if let Some(ay) = self.grid.y {
            dims.push(ay.n as u32);
        }
        let data: Vec<f64> = self.slices.iter().flatten().copied().collect();
        write_record(w, &FieldRecord::real(dims, data)?)
    }

    pub fn read<R: Read>(r: &mut R, grid: SpaceGrid) -> Result<Self> {
        let lambdas = read_record(r)?.into_real()?;
        let rec = read_record(r)?;
        let expected_rank = 1 + grid.dim();
        if rec.dims.len() != expected_rank
            || rec.dims[0] as usize != lambdas.len()
            || rec.dims[1] as usize != grid.n_x()
            || (grid.dim() == 2 && rec.dims[2] as usize != grid.n_y())
        {
            return Err(OctError::Dimension(format!(
                "tabulated slices have dims {:?}, expected [{}, {}{}]",
                rec.dims,
                lambdas.len(),
                grid.n_x(),
                if grid.dim() == 2 {
                    format!(", {}", grid.n_y())
                } else {
                    String::new()
                }
            )));
        }
        let data = rec.into_real()?;
        let slices = data.chunks_exact(grid.len()).map(|c| c.to_vec()).collect();
        Self::new(grid, lambdas, slices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpaceGrid {
        SpaceGrid::new_1d(-4.0, 4.0, 16).unwrap()
    }

    #[test]
    fn validation() {
        let g = grid();
        let s = vec![vec![0.0; 16]; 2];
        assert!(TabulatedPotential::new(g, vec![0.0], vec![vec![0.0; 16]]).is_err());
        assert!(TabulatedPotential::new(g, vec![0.0, 0.9], s.clone()).is_err());
        assert!(TabulatedPotential::new(g, vec![1.0, 0.0], s.clone()).is_err());
        assert!(TabulatedPotential::new(g, vec![0.0, 1.0], vec![vec![0.0; 15]; 2]).is_err());
        assert!(TabulatedPotential::new(g, vec![0.0, 1.0], s).is_ok());
    }

    #[test]
    fn interpolation_and_slope() {
        let g = grid();
        let t = TabulatedPotential::new(
            g,
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0; 16], vec![1.0; 16], vec![5.0; 16]],
        )
        .unwrap();
        assert!((t.value_at(3, 0.25) - 0.5).abs() < 1e-15);
        assert!((t.value_at(3, 0.75) - 3.0).abs() < 1e-15);
        assert!((t.slope_at(3, 0.25) - 2.0).abs() < 1e-15);
        assert!((t.slope_at(3, 0.75) - 8.0).abs() < 1e-15);
        assert!((t.value_at(3, 1.0) - 5.0).abs() < 1e-15);
        // linear extrapolation past the ends
        assert!((t.value_at(3, 1.1) - 5.8).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let g = grid();
        let t = TabulatedPotential::from_fn(g, 5, |i, l| Ok(i as f64 * l)).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = TabulatedPotential::read(&mut buf.as_slice(), g).unwrap();
        assert_eq!(back, t);
        let other = SpaceGrid::new_1d(-4.0, 4.0, 32).unwrap();
        assert!(TabulatedPotential::read(&mut buf.as_slice(), other).is_err());
    }
}
