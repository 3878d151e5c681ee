//! Simplified dynamics producing snapshot sets: explicit Euler steps of a
//! reaction–diffusion equation `u' = D Δu − κ u³` on a structured grid.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::synth::{GridShape, Mesh};

/// `n_t` fields defined on the mesh, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet<T> {
    pub snapshots: Array2<T>,
}

impl<T: Scalar> SnapshotSet<T> {
    pub fn new(snapshots: Array2<T>) -> Result<Self> {
        if snapshots.nrows() == 0 || snapshots.ncols() == 0 {
            return invalid("a snapshot set needs at least one non-empty snapshot");
        }
        Ok(SnapshotSet { snapshots })
    }

    pub fn n_t(&self) -> usize {
        self.snapshots.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.snapshots.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub n_t: usize,
    pub diffusivity: f64,
    /// Cubic reaction coefficient κ.
    pub reaction: f64,
    /// Fraction of the explicit-Euler stability bound used as time step.
    pub cfl: f64,
    /// Upper bound on the pseudo-time step, which keeps the reaction term
    /// stable on coarse grids.
    pub max_step: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { n_t: 5, diffusivity: 1e-3, reaction: 1.0, cfl: 0.9, max_step: 0.05 }
    }
}

impl SimulationConfig {
    /// Diffusive stability bound `1 / (2 D Σ_a h_a⁻²)` over the active axes.
    pub fn stability_bound<T: Scalar>(&self, grid: &GridShape<T>) -> f64 {
        let mut inv = 0.0;
        if grid.nx > 1 {
            inv += 1.0 / grid.dx.as_f64().powi(2);
        }
        if grid.ny > 1 {
            inv += 1.0 / grid.dy.as_f64().powi(2);
        }
        1.0 / (2.0 * self.diffusivity * inv)
    }

    /// Validated time step for the grid: `cfl · min(diffusive bound, max_step)`.
    pub fn time_step<T: Scalar>(&self, grid: &GridShape<T>) -> Result<f64> {
        if self.n_t == 0 {
            return invalid("n_t must be at least 1");
        }
        if !(self.diffusivity > 0.0) || !(self.reaction >= 0.0) {
            return Err(Error::Config("diffusivity must be positive and reaction nonnegative".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "cfl = {} exceeds the explicit stability bound (must lie in (0, 1])",
                self.cfl
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::Config("max_step must be positive".into()));
        }
        Ok(self.cfl * self.stability_bound(grid).min(self.max_step))
    }
}

/// Five-point Laplacian with zero-flux (mirrored) boundaries.
fn laplacian<T: Scalar>(u: &Array1<T>, g: &GridShape<T>, out: &mut Array1<T>) {
    let (nx, ny) = (g.nx, g.ny);
    let (ix2, iy2) = (T::one() / (g.dx * g.dx), T::one() / (g.dy * g.dy));
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = u[k];
            let mut acc = T::zero();
            if nx > 1 {
                let l = if i > 0 { u[k - 1] } else { u[k + 1] };
                let r = if i + 1 < nx { u[k + 1] } else { u[k - 1] };
                acc = acc + (l - c - c + r) * ix2;
            }
            if ny > 1 {
                let d = if j > 0 { u[k - nx] } else { u[k + nx] };
                let t = if j + 1 < ny { u[k + nx] } else { u[k - nx] };
                acc = acc + (d - c - c + t) * iy2;
            }
            out[k] = acc;
        }
    }
}

/// Runs `n_t` explicit steps from `u⁰ = sample` and returns `u¹ … u^{n_t}`.
pub fn run_toy_simulation<T: Scalar>(sample: ArrayView1<T>, mesh: &Mesh<T>, cfg: &SimulationConfig) -> Result<SnapshotSet<T>> {
    let grid = mesh
        .grid()
        .ok_or_else(|| Error::InvalidArgument("toy simulation requires a structured grid mesh".into()))?;
    if sample.len() != mesh.len() {
        return invalid(format!("sample has {} values for {} nodes", sample.len(), mesh.len()));
    }
    let dt = cfg.time_step(grid)?;
    let umax = sample.iter().fold(0.0f64, |m, x| m.max(x.as_f64().abs()));
    if dt * cfg.reaction * umax * umax > 1.0 {
        return Err(Error::Config(format!(
            "reaction term unstable: dt·κ·max|u|² = {:.3} > 1",
            dt * cfg.reaction * umax * umax
        )));
    }
    let (dt, d, kappa) = (T::lit(dt), T::lit(cfg.diffusivity), T::lit(cfg.reaction));
    let n = mesh.len();
    let mut u = sample.to_owned();
    let mut lap = Array1::zeros(n);
    let mut snapshots = Array2::zeros((cfg.n_t, n));
    for step in 0..cfg.n_t {
        laplacian(&u, grid, &mut lap);
        for k in 0..n {
            let uk = u[k];
            u[k] = uk + dt * (d * lap[k] - kappa * uk * uk * uk);
        }
        snapshots.row_mut(step).assign(&u);
    }
    SnapshotSet::new(snapshots)
}
