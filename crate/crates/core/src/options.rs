use crate::par::Execution;

/// Numerical knobs shared by the allocator, commitment search and oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Absolute tolerance on loads when solving for a shared marginal value.
    pub root_tol: f64,
    /// Relative tolerance when comparing outputs (ties, fewer-units preference).
    pub w_rel_tol: f64,
    /// Absolute tolerance on refined switching points.
    pub breakpoint_tol: f64,
    /// Grid resolution of the allocator's safety-net search, per free dimension.
    pub grid_divisions: usize,
    /// Smallest step of the coordinate-ascent polish.
    pub polish_min_step: f64,
    /// The grid safety net runs only for subsets up to this size.
    pub max_grid_units: usize,
    /// Pinned-bound enumeration (3^n combinations) runs only up to this size.
    pub max_pinned_units: usize,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            root_tol: 1e-9,
            w_rel_tol: 1e-9,
            breakpoint_tol: 1e-6,
            grid_divisions: 200,
            polish_min_step: 1e-9,
            max_grid_units: 3,
            max_pinned_units: 6,
            execution: Execution::default(),
        }
    }
}

impl SolverOptions {
    pub fn sequential() -> Self {
        Self { execution: Execution::Sequential, ..Self::default() }
    }

    /// `true` when `x` beats `y` by more than the relative output tolerance.
    pub(crate) fn better(&self, x: f64, y: f64) -> bool {
        x > y + self.w_rel_tol * y.abs().max(1.0)
    }
}
