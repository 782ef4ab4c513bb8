//! Input fields: core-regularised screw dislocations, Gaussian density blobs,
//! compatible strains from displacements, and strains that are exactly
//! consistent with a set of blobs.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{arg, domain, Error, Result, Warning};
use crate::grid::{surface_integral, Grid2D, SurfaceRegion, TensorField};
use crate::tensor::{Mat3, Vec3, X, Y, Z};

/// Straight screw dislocation along `ẑ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScrewSource {
    pub burgers: f64,
    pub center: [f64; 2],
    pub core_radius: f64,
}

impl ScrewSource {
    pub fn new(burgers: f64, center: [f64; 2], core_radius: f64) -> Result<Self> {
        if !burgers.is_finite() || !(core_radius > 0.0 && core_radius.is_finite()) {
            return Err(arg("screw needs a finite Burgers magnitude and core radius > 0"));
        }
        Ok(Self {
            burgers,
            center,
            core_radius,
        })
    }

    /// Offset from the line and the regularised `r²`.
    fn local(&self, p: [f64; 2]) -> (f64, f64, f64) {
        let x = p[0] - self.center[0];
        let y = p[1] - self.center[1];
        let r2 = (x * x + y * y).max(self.core_radius * self.core_radius);
        (x, y, r2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefectKind {
    Dislocation,
    Disclination,
}

/// Gaussian-mollified line density along `ẑ`; `charge` is the Burgers or
/// Frank vector it carries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityBlob {
    pub kind: DefectKind,
    pub charge: Vec3,
    pub center: [f64; 2],
    pub width: f64,
}

impl DensityBlob {
    pub fn new(kind: DefectKind, charge: Vec3, center: [f64; 2], width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || charge.iter().any(|c| !c.is_finite()) {
            return Err(arg("blob needs width > 0 and a finite charge"));
        }
        Ok(Self {
            kind,
            charge,
            center,
            width,
        })
    }

    /// Unit-mass Gaussian `exp(−r²/2σ²)/(2πσ²)` before renormalisation.
    pub fn profile(&self, p: [f64; 2]) -> f64 {
        let s2 = self.width * self.width;
        let (x, y) = (p[0] - self.center[0], p[1] - self.center[1]);
        libm::exp(-(x * x + y * y) / (2.0 * s2)) / (2.0 * PI * s2)
    }
}

/// Closed-form scalar fields for concentrations and temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarSpec {
    Uniform(f64),
    Gaussian {
        background: f64,
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    Linear {
        value: f64,
        gradient: [f64; 2],
    },
}

impl ScalarSpec {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            ScalarSpec::Uniform(v) => v,
            ScalarSpec::Gaussian {
                background,
                amplitude,
                center,
                width,
            } => {
                let (x, y) = (p[0] - center[0], p[1] - center[1]);
                background + amplitude * libm::exp(-(x * x + y * y) / (2.0 * width * width))
            }
            ScalarSpec::Linear { value, gradient } => value + gradient[0] * p[0] + gradient[1] * p[1],
        }
    }

    pub fn field(&self, grid: Grid2D) -> TensorField {
        TensorField::scalar_fn(grid, |p| self.eval(p))
    }
}

/// Smooth displacement fields with analytic gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Displacement {
    /// `u = (A sin ky, 0, 0)`.
    ShearWave { amplitude: f64, wavenumber: f64 },
    /// `u = A (sin kx cos ky, −cos kx sin ky, 0)`.
    Cellular { amplitude: f64, wavenumber: f64 },
    /// `u = (0, 0, A sin kx sin ky)`.
    Antiplane { amplitude: f64, wavenumber: f64 },
    /// `u = A exp(−k²r²/2) (x, y, 0)`.
    Radial { amplitude: f64, wavenumber: f64 },
}

impl Displacement {
    pub fn value(&self, p: [f64; 2]) -> Vec3 {
        let (x, y) = (p[0], p[1]);
        match *self {
            Displacement::ShearWave { amplitude: a, wavenumber: k } => [a * libm::sin(k * y), 0.0, 0.0],
            Displacement::Cellular { amplitude: a, wavenumber: k } => [
                a * libm::sin(k * x) * libm::cos(k * y),
                -a * libm::cos(k * x) * libm::sin(k * y),
                0.0,
            ],
            Displacement::Antiplane { amplitude: a, wavenumber: k } => {
                [0.0, 0.0, a * libm::sin(k * x) * libm::sin(k * y)]
            }
            Displacement::Radial { amplitude: a, wavenumber: k } => {
                let g = a * libm::exp(-0.5 * k * k * (x * x + y * y));
                [g * x, g * y, 0.0]
            }
        }
    }

    /// `grad[i][j] = ∂_j u_i`; the `j = z` column is zero.
    pub fn gradient(&self, p: [f64; 2]) -> Mat3 {
        let (x, y) = (p[0], p[1]);
        let mut g = [[0.0; 3]; 3];
        match *self {
            Displacement::ShearWave { amplitude: a, wavenumber: k } => {
                g[X][Y] = a * k * libm::cos(k * y);
            }
            Displacement::Cellular { amplitude: a, wavenumber: k } => {
                let (sx, cx, sy, cy) = (libm::sin(k * x), libm::cos(k * x), libm::sin(k * y), libm::cos(k * y));
                g[X][X] = a * k * cx * cy;
                g[X][Y] = -a * k * sx * sy;
                g[Y][X] = a * k * sx * sy;
                g[Y][Y] = -a * k * cx * cy;
            }
            Displacement::Antiplane { amplitude: a, wavenumber: k } => {
                g[Z][X] = a * k * libm::cos(k * x) * libm::sin(k * y);
                g[Z][Y] = a * k * libm::sin(k * x) * libm::cos(k * y);
            }
            Displacement::Radial { amplitude: a, wavenumber: k } => {
                let e = a * libm::exp(-0.5 * k * k * (x * x + y * y));
                let k2 = k * k;
                g[X][X] = e * (1.0 - k2 * x * x);
                g[X][Y] = -e * k2 * x * y;
                g[Y][X] = -e * k2 * x * y;
                g[Y][Y] = e * (1.0 - k2 * y * y);
            }
        }
        g
    }

    /// Magnitude of second derivatives of the strain, `A k³`.
    pub fn strain_curvature_scale(&self) -> f64 {
        let (a, k) = match *self {
            Displacement::ShearWave { amplitude, wavenumber }
            | Displacement::Cellular { amplitude, wavenumber }
            | Displacement::Antiplane { amplitude, wavenumber }
            | Displacement::Radial { amplitude, wavenumber } => (amplitude, wavenumber),
        };
        a.abs() * k.abs() * k.abs() * k.abs()
    }
}

/// Declarative defect content of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectScene {
    pub screws: Vec<ScrewSource>,
    pub blobs: Vec<DensityBlob>,
    pub displacement: Option<Displacement>,
    pub vacancies: Option<ScalarSpec>,
    pub interstitials: Option<ScalarSpec>,
    pub temperature: Option<ScalarSpec>,
    pub reference: [f64; 2],
}

impl DefectScene {
    pub fn empty(reference: [f64; 2]) -> Self {
        Self {
            screws: Vec::new(),
            blobs: Vec::new(),
            displacement: None,
            vacancies: None,
            interstitials: None,
            temperature: None,
            reference,
        }
    }

    /// Checks the scene against a grid and lists resolution warnings.
    pub fn validate(&self, grid: &Grid2D) -> Result<Vec<Warning>> {
        if !grid.contains(self.reference) {
            return Err(domain("reference point x0 lies outside the grid"));
        }
        let h = grid.spacing();
        let mut warnings = Vec::new();
        for s in &self.screws {
            if s.core_radius < 2.0 * h {
                warnings.push(Warning::UnresolvedCore {
                    core_radius: s.core_radius,
                    spacing: h,
                });
            }
        }
        for b in &self.blobs {
            if b.width < 2.0 * h {
                warnings.push(Warning::UnresolvedBlob { width: b.width, spacing: h });
            }
        }
        Ok(warnings)
    }

    /// `(Θ, Λ)` from the blobs, each renormalised on `grid`.
    pub fn densities(&self, grid: Grid2D) -> Result<(TensorField, TensorField)> {
        let mut theta = TensorField::zeros(grid, 2)?;
        let mut lambda = TensorField::zeros(grid, 2)?;
        for b in &self.blobs {
            let d = blob_density(b, grid)?;
            match b.kind {
                DefectKind::Disclination => theta = theta.add(&d)?,
                DefectKind::Dislocation => lambda = lambda.add(&d)?,
            }
        }
        Ok((theta, lambda))
    }

    /// Total strain: screws, blob-consistent strain, and the compatible
    /// strain of the displacement.
    pub fn strain(&self, grid: Grid2D) -> Result<TensorField> {
        let mut e = consistent_strain(&self.blobs, self.reference, grid)?;
        for s in &self.screws {
            e = e.add(&screw_strain(s, grid))?;
        }
        if let Some(u) = self.displacement {
            e = e.add(&compatible_strain(grid, |p| u.gradient(p)))?;
        }
        Ok(e)
    }
}

/// Screw strain `E_xz = −B y/(4πr²)`, `E_yz = B x/(4πr²)`, with
/// `r² → max(r², r_c²)`.
pub fn screw_strain(src: &ScrewSource, grid: Grid2D) -> TensorField {
    let mut f = TensorField::zeros(grid, 2).expect("rank 2");
    for n in 0..grid.node_count() {
        let (x, y, r2) = src.local(grid.point(n));
        let c = src.burgers / (4.0 * PI * r2);
        let o = f.node_mut(n);
        o[3 * X + Z] = -c * y;
        o[3 * Z + X] = -c * y;
        o[3 * Y + Z] = c * x;
        o[3 * Z + Y] = c * x;
    }
    f
}

/// Regular part of the screw Frank tensor,
/// `−B/(4πr²) [[cos 2θ, sin 2θ, 0], [sin 2θ, −cos 2θ, 0], [0, 0, 0]]`.
pub fn screw_frank_regular(src: &ScrewSource, grid: Grid2D) -> TensorField {
    let mut f = TensorField::zeros(grid, 2).expect("rank 2");
    for n in 0..grid.node_count() {
        let (x, y, r2) = src.local(grid.point(n));
        let rr = x * x + y * y;
        let (c2, s2) = if rr > 0.0 {
            ((x * x - y * y) / rr, 2.0 * x * y / rr)
        } else {
            (1.0, 0.0)
        };
        let a = -src.burgers / (4.0 * PI * r2);
        let o = f.node_mut(n);
        o[0] = a * c2;
        o[1] = a * s2;
        o[3] = a * s2;
        o[4] = -a * c2;
    }
    f
}

/// Density of one blob: only the `z` row is populated, `field[z][k] =
/// charge_k·ρ(x)`, with `ρ` rescaled so the discrete integral over the whole
/// grid equals the charge.
pub fn blob_density(b: &DensityBlob, grid: Grid2D) -> Result<TensorField> {
    let rho = TensorField::scalar_fn(grid, |p| b.profile(p));
    let mass = blob_mass(b, grid)?;
    let mut f = TensorField::zeros(grid, 2)?;
    for n in 0..grid.node_count() {
        let r = rho.data()[n] / mass;
        let o = f.node_mut(n);
        for k in 0..3 {
            o[3 * Z + k] = b.charge[k] * r;
        }
    }
    Ok(f)
}

/// Discrete integral of the unit profile over the whole grid.
fn blob_mass(b: &DensityBlob, grid: Grid2D) -> Result<f64> {
    let rho = TensorField::scalar_fn(grid, |p| b.profile(p));
    let mass = surface_integral(&rho, &SurfaceRegion::whole(grid))?[0];
    if !(mass > 0.0) {
        return Err(Error::Construction(format!(
            "blob at ({}, {}) has no mass on the grid",
            b.center[0], b.center[1]
        )));
    }
    Ok(mass)
}

/// `E = sym(∇u)` from an analytic gradient `grad[i][j] = ∂_j u_i`.
pub fn compatible_strain(grid: Grid2D, mut grad: impl FnMut([f64; 2]) -> Mat3) -> TensorField {
    let mut f = TensorField::zeros(grid, 2).expect("rank 2");
    for n in 0..grid.node_count() {
        let g = grad(grid.point(n));
        let o = f.node_mut(n);
        for i in 0..3 {
            for j in 0..3 {
                o[3 * i + j] = 0.5 * (g[i][j] + g[j][i]);
            }
        }
    }
    f
}

/// Closed-form strain whose incompatibility matches the blob densities
/// through Kröner's relation with the contortion built from the same blobs.
///
/// Dislocation blobs with `B_z` contribute the mollified screw strain; blobs
/// with in-plane `B`, and disclination blobs with `Ω_z`, contribute an
/// in-plane dilatation `E_αβ = φ δ_αβ`. Disclination blobs with in-plane
/// Frank vectors have no consistent strain and are rejected.
///
/// Each blob's charge is divided by the same discrete mass as in
/// [`blob_density`], so the strain stays consistent with the rescaled density
/// when the profile is cut off by the grid.
pub fn consistent_strain(blobs: &[DensityBlob], x0: [f64; 2], grid: Grid2D) -> Result<TensorField> {
    reject_twist(blobs)?;
    let scale = blobs.iter().map(|b| blob_mass(b, grid).map(|m| 1.0 / m)).collect::<Result<Vec<f64>>>()?;
    let mut f = TensorField::zeros(grid, 2)?;
    for n in 0..grid.node_count() {
        let p = grid.point(n);
        let mut phi = 0.0;
        let (mut exz, mut eyz) = (0.0, 0.0);
        for (b, c) in blobs.iter().zip(&scale) {
            let charge = b.charge.map(|q| q * c);
            let (x, y) = (p[0] - b.center[0], p[1] - b.center[1]);
            let s2 = b.width * b.width;
            let r2 = x * x + y * y;
            let u = r2 / (2.0 * s2);
            // (1 − e^{−u})/r², finite at the centre.
            let w = if u < 1e-8 {
                1.0 / (2.0 * s2)
            } else {
                -libm::expm1(-u) / r2
            };
            match b.kind {
                DefectKind::Dislocation => {
                    let bz = charge[Z];
                    exz += -bz * y * w / (4.0 * PI);
                    eyz += bz * x * w / (4.0 * PI);
                    phi += (charge[Y] * x - charge[X] * y) * w / (2.0 * PI);
                }
                DefectKind::Disclination => {
                    let om = charge[Z];
                    let amp = om / (2.0 * PI * s2);
                    let g = 0.5 * amp * s2 * ein(u);
                    let moment = -amp * s2 * libm::exp(-u);
                    let cx = b.center[0] - x0[0];
                    let cy = b.center[1] - x0[1];
                    let grad = amp * s2 * w;
                    phi += g + moment + grad * (cx * x + cy * y);
                }
            }
        }
        let o = f.node_mut(n);
        o[0] = phi;
        o[4] = phi;
        o[3 * X + Z] = exz;
        o[3 * Z + X] = exz;
        o[3 * Y + Z] = eyz;
        o[3 * Z + Y] = eyz;
    }
    Ok(f)
}

/// Scalar `E^s_pp` carried by [`consistent_strain`]: the field whose
/// Laplacian equals the trace of the incompatibility.
pub fn solenoidal_trace(blobs: &[DensityBlob], x0: [f64; 2], grid: Grid2D) -> Result<TensorField> {
    let e = consistent_strain(blobs, x0, grid)?;
    Ok(e.component(0))
}

fn reject_twist(blobs: &[DensityBlob]) -> Result<()> {
    for b in blobs {
        if b.kind == DefectKind::Disclination && (b.charge[X] != 0.0 || b.charge[Y] != 0.0) {
            return Err(Error::Construction(
                "a disclination blob with in-plane Frank vector has no consistent strain".into(),
            ));
        }
    }
    Ok(())
}

/// `Ein(u) = ∫₀ᵘ (1 − e^{−t})/t dt`.
pub fn ein(u: f64) -> f64 {
    if u <= 2.0 {
        // Σ (−1)^{k+1} u^k / (k·k!)
        let mut term = u;
        let mut sum = u;
        let mut k = 1.0;
        loop {
            term *= -u / (k + 1.0);
            let add = term / (k + 1.0);
            sum += add;
            k += 1.0;
            if add.abs() <= 1e-17 * sum.abs() || k > 200.0 {
                break;
            }
        }
        sum
    } else {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        EULER_GAMMA + libm::log(u) + exp_integral_e1(u)
    }
}

/// `E₁(u)` for `u > 1` by continued fraction.
fn exp_integral_e1(u: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = u + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * libm::exp(-u)
}
