//! Stack in, solved field and report out.

use crate::analysis::{build_report, ThermalReport};
use crate::error::Result;
use crate::mesh::{assemble, discretize, power_vector, stack_powers, Mesh, SparseSystem};
use crate::model::{GridSpec, Stack};
use crate::scalar::Scalar;
use crate::solver::{solve_steady, SolveOptions, TemperatureField};

#[derive(Debug, Clone)]
pub struct Simulation<S> {
    pub mesh: Mesh<S>,
    pub system: SparseSystem<S>,
    pub field: TemperatureField<S>,
}

impl<S: Scalar> Simulation<S> {
    pub fn report(&self, scenario: Option<&str>) -> Result<ThermalReport> {
        build_report(&self.field, &self.mesh, self.system.ambient, scenario)
    }

    /// Highest cell temperature.
    pub fn peak(&self) -> S {
        self.field.values[..self.mesh.cell_count()]
            .iter()
            .copied()
            .fold(S::neg_infinity(), S::max)
    }
}

/// Background-fill, discretize, assemble and solve.
pub fn simulate<S: Scalar>(stack: &Stack<S>, grid: GridSpec, opts: SolveOptions<S>) -> Result<Simulation<S>> {
    let mesh = discretize(stack, grid)?;
    let source = power_vector(&mesh, &stack_powers(stack))?;
    let system = assemble(&mesh, &stack.package)?.with_source(source)?;
    let field = solve_steady(&system, opts)?;
    Ok(Simulation { mesh, system, field })
}
