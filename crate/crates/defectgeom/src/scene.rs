//! Derived fields of a scene on one grid, shared by every pipeline.

use defectgeom_core::defects::DefectScene;
use defectgeom_core::geometry::{
    bravais_metric, christoffel_bravais, connection_contortion, dislocation_torsion, full_connection,
};
use defectgeom_core::kinematics::{contortion_from_densities, incompatibility};
use defectgeom_core::{Connection, Grid2D, Metric, NodeMask, TensorField, Warning};

use crate::config::GeometrySpec;
use crate::error::Result;

pub struct SceneFields {
    pub grid: Grid2D,
    pub strain: TensorField,
    pub theta: TensorField,
    pub lambda: TensorField,
    pub kappa: TensorField,
    pub eta: TensorField,
    pub metric: Metric,
    pub bravais: Connection,
    /// Dislocation torsion `T_{k;ij}`.
    pub torsion: TensorField,
    /// `ΔΓ` built from the torsion.
    pub delta: TensorField,
    pub connection: Connection,
    pub warnings: Vec<Warning>,
}

impl SceneFields {
    pub fn build(scene: &DefectScene, grid: Grid2D, geo: &GeometrySpec) -> Result<Self> {
        let mut warnings = scene.validate(&grid)?;
        let strain = scene.strain(grid)?;
        let (theta, lambda) = scene.densities(grid)?;
        let kappa = contortion_from_densities(&lambda, &theta, scene.reference)?;
        let eta = incompatibility(&strain)?;
        let metric = bravais_metric(&strain, geo.strain_guard)?;
        warnings.extend_from_slice(metric.warnings());
        let bravais = christoffel_bravais(&metric)?;
        let torsion = dislocation_torsion(&lambda)?;
        let delta = connection_contortion(&torsion)?;
        let connection = full_connection(&bravais, &delta)?;
        Ok(Self {
            grid,
            strain,
            theta,
            lambda,
            kappa,
            eta,
            metric,
            bravais,
            torsion,
            delta,
            connection,
            warnings,
        })
    }
}

/// Interior nodes `margin` cells from the edge, minus screw cores.
pub fn assessment_mask(scene: &DefectScene, grid: Grid2D, margin: usize) -> NodeMask {
    let mut m = NodeMask::interior(grid, margin);
    for s in &scene.screws {
        m = m.excluding_disc(s.center, 3.0 * s.core_radius + 2.0 * grid.spacing());
    }
    m
}
