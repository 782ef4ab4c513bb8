//! Uniform 2D grids, tensor fields on them, and the discrete calculus used by
//! every other module.
//!
//! Fields are z-invariant: only `∂_x` and `∂_y` exist, and a derivative along
//! z is identically zero. First derivatives use central differences inside and
//! second-order one-sided closures at the edges. Second derivatives along one
//! axis use a dedicated three-point stencil inside and the four-point closure
//! `(2f0 − 5f1 + 4f2 − f3)/h²` at the edges; mixed derivatives compose first
//! derivatives.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{arg, domain, Error, Result};
use crate::tensor::{component_count, eps, SmallTensor, Vec3, MAX_RANK, PLANE, X, Y};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => X,
            Axis::Y => Y,
        }
    }
}

/// Uniform node grid: node `(i, j)` sits at `origin + h·(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    origin: [f64; 2],
    spacing: f64,
    nx: usize,
    ny: usize,
}

impl Grid2D {
    pub fn new(origin: [f64; 2], spacing: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(arg(format!("grid spacing must be positive, got {spacing}")));
        }
        if nx < 3 || ny < 3 {
            return Err(arg(format!("grid needs at least 3 nodes per axis, got {nx}x{ny}")));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(arg("grid origin must be finite"));
        }
        Ok(Self {
            origin,
            spacing,
            nx,
            ny,
        })
    }

    /// `n × n` nodes spanning `[lo, hi]²`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || n < 2 {
            return Err(arg(format!("bad square grid [{lo}, {hi}] with {n} nodes")));
        }
        Self::new([lo, lo], (hi - lo) / (n - 1) as f64, n, n)
    }

    /// Same extent, half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            origin: self.origin,
            spacing: 0.5 * self.spacing,
            nx: 2 * (self.nx - 1) + 1,
            ny: 2 * (self.ny - 1) + 1,
        }
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }
    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + self.spacing * i as f64
    }
    pub fn y(&self, j: usize) -> f64 {
        self.origin[1] + self.spacing * j as f64
    }
    pub fn upper(&self) -> [f64; 2] {
        [self.x(self.nx - 1), self.y(self.ny - 1)]
    }
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }
    pub fn point(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.ij(node);
        [self.x(i), self.y(j)]
    }
    pub fn area(&self) -> f64 {
        let u = self.upper();
        (u[0] - self.origin[0]) * (u[1] - self.origin[1])
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let tol = 1e-9 * self.spacing;
        let u = self.upper();
        p[0] >= self.origin[0] - tol
            && p[0] <= u[0] + tol
            && p[1] >= self.origin[1] - tol
            && p[1] <= u[1] + tol
    }

    /// Cell `(i, j)` containing `p` and the local fractions within it.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, usize, f64, f64)> {
        if !self.contains(p) {
            return None;
        }
        let fx = (p[0] - self.origin[0]) / self.spacing;
        let fy = (p[1] - self.origin[1]) / self.spacing;
        let i = (libm::floor(fx).max(0.0) as usize).min(self.nx - 2);
        let j = (libm::floor(fy).max(0.0) as usize).min(self.ny - 2);
        let tx = (fx - i as f64).clamp(0.0, 1.0);
        let ty = (fy - j as f64).clamp(0.0, 1.0);
        Some((i, j, tx, ty))
    }

    /// Nearest node to `p` (clamped into the grid).
    pub fn nearest(&self, p: [f64; 2]) -> (usize, usize) {
        let fx = libm::round((p[0] - self.origin[0]) / self.spacing);
        let fy = libm::round((p[1] - self.origin[1]) / self.spacing);
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    fn same_as(&self, other: &Grid2D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(arg("fields live on different grids"))
        }
    }
}

/// A tensor of fixed rank at every node of a grid.
///
/// Storage is node-major: components of node `n` occupy
/// `data[n·3^rank .. (n+1)·3^rank]`, first slot major within a node.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: Grid2D,
    rank: usize,
    data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: Grid2D, rank: usize) -> Result<Self> {
        if rank > MAX_RANK {
            return Err(arg(format!("field rank {rank} exceeds {MAX_RANK}")));
        }
        Ok(Self {
            grid,
            rank,
            data: vec![0.0; grid.node_count() * component_count(rank)],
        })
    }

    pub fn from_data(grid: Grid2D, rank: usize, data: Vec<f64>) -> Result<Self> {
        if rank > MAX_RANK {
            return Err(arg(format!("field rank {rank} exceeds {MAX_RANK}")));
        }
        let want = grid.node_count() * component_count(rank);
        if data.len() != want {
            return Err(arg(format!("field data has {} values, expected {want}", data.len())));
        }
        Ok(Self { grid, rank, data })
    }

    /// Fill each node from its position; the closure writes `3^rank` values.
    pub fn from_fn(
        grid: Grid2D,
        rank: usize,
        mut f: impl FnMut([f64; 2], &mut [f64]),
    ) -> Result<Self> {
        let mut out = Self::zeros(grid, rank)?;
        let nc = out.ncomp();
        for (n, chunk) in out.data.chunks_exact_mut(nc).enumerate() {
            f(grid.point(n), chunk);
        }
        Ok(out)
    }

    pub fn scalar_fn(grid: Grid2D, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let data = (0..grid.node_count()).map(|n| f(grid.point(n))).collect();
        Self {
            grid,
            rank: 0,
            data,
        }
    }

    pub fn uniform(grid: Grid2D, value: &SmallTensor) -> Self {
        let nc = value.len();
        let mut data = Vec::with_capacity(grid.node_count() * nc);
        for _ in 0..grid.node_count() {
            data.extend_from_slice(value.components());
        }
        Self {
            grid,
            rank: value.rank(),
            data,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn ncomp(&self) -> usize {
        component_count(self.rank)
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn node(&self, n: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[n * nc..(n + 1) * nc]
    }
    pub fn node_mut(&mut self, n: usize) -> &mut [f64] {
        let nc = self.ncomp();
        &mut self.data[n * nc..(n + 1) * nc]
    }
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        self.node(self.grid.index(i, j))
    }
    pub fn value(&self, n: usize) -> SmallTensor {
        SmallTensor::from_components(self.rank, self.node(n)).expect("rank checked at construction")
    }

    /// Scalar field of one flat component.
    pub fn component(&self, c: usize) -> TensorField {
        let nc = self.ncomp();
        let data = self.data.iter().skip(c).step_by(nc).copied().collect();
        TensorField {
            grid: self.grid,
            rank: 0,
            data,
        }
    }

    pub fn set_component(&mut self, c: usize, src: &TensorField) -> Result<()> {
        self.grid.same_as(&src.grid)?;
        if src.rank != 0 {
            return Err(arg("set_component needs a scalar source"));
        }
        let nc = self.ncomp();
        for (n, v) in src.data.iter().enumerate() {
            self.data[n * nc + c] = *v;
        }
        Ok(())
    }

    /// Nodewise map to a field of rank `rank_out`.
    pub fn map(&self, rank_out: usize, mut f: impl FnMut([f64; 2], &[f64], &mut [f64])) -> TensorField {
        let mut out = TensorField::zeros(self.grid, rank_out).expect("valid rank");
        let nc = self.ncomp();
        let nco = out.ncomp();
        for n in 0..self.grid.node_count() {
            f(
                self.grid.point(n),
                &self.data[n * nc..(n + 1) * nc],
                &mut out.data[n * nco..(n + 1) * nco],
            );
        }
        out
    }

    pub fn zip_map(
        &self,
        other: &TensorField,
        rank_out: usize,
        mut f: impl FnMut([f64; 2], &[f64], &[f64], &mut [f64]),
    ) -> Result<TensorField> {
        self.grid.same_as(&other.grid)?;
        let mut out = TensorField::zeros(self.grid, rank_out)?;
        let (na, nb, no) = (self.ncomp(), other.ncomp(), out.ncomp());
        for n in 0..self.grid.node_count() {
            f(
                self.grid.point(n),
                &self.data[n * na..(n + 1) * na],
                &other.data[n * nb..(n + 1) * nb],
                &mut out.data[n * no..(n + 1) * no],
            );
        }
        Ok(out)
    }

    fn check_same(&self, other: &TensorField) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        if self.rank != other.rank {
            return Err(arg(format!("rank mismatch: {} vs {}", self.rank, other.rank)));
        }
        Ok(())
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.axpy(-1.0, other)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &TensorField) -> Result<TensorField> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(other.data.iter()) {
            *o += a * v;
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> TensorField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_in(&self, mask: &NodeMask) -> f64 {
        let nc = self.ncomp();
        let mut m: f64 = 0.0;
        for n in mask.nodes() {
            for v in &self.data[n * nc..(n + 1) * nc] {
                m = m.max(v.abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|A_ij − A_ji|` over all nodes of a rank-2 field.
    pub fn asymmetry(&self) -> Result<f64> {
        if self.rank != 2 {
            return Err(arg("asymmetry needs a rank-2 field"));
        }
        let mut m: f64 = 0.0;
        for c in self.data.chunks_exact(9) {
            for i in 0..3 {
                for j in (i + 1)..3 {
                    m = m.max((c[3 * i + j] - c[3 * j + i]).abs());
                }
            }
        }
        Ok(m)
    }

    pub(crate) fn require_symmetric(&self, what: &str) -> Result<()> {
        let asym = self.asymmetry()?;
        if asym > 1e-12 * (1.0 + self.max_abs()) {
            return Err(arg(format!("{what} must be symmetric (asymmetry {asym:e})")));
        }
        Ok(())
    }

    pub(crate) fn require_rank(&self, rank: usize, what: &str) -> Result<()> {
        if self.rank != rank {
            return Err(arg(format!("{what} must have rank {rank}, got {}", self.rank)));
        }
        Ok(())
    }

    /// Bilinear interpolation into `out` (length `3^rank`).
    pub fn sample_into(&self, p: [f64; 2], out: &mut [f64]) -> Result<()> {
        let (i, j, tx, ty) = self
            .grid
            .locate(p)
            .ok_or_else(|| domain(format!("point ({}, {}) lies outside the grid", p[0], p[1])))?;
        let nc = self.ncomp();
        let n00 = self.grid.index(i, j);
        let n10 = n00 + 1;
        let n01 = n00 + self.grid.nx;
        let n11 = n01 + 1;
        let w = [
            (1.0 - tx) * (1.0 - ty),
            tx * (1.0 - ty),
            (1.0 - tx) * ty,
            tx * ty,
        ];
        for (c, o) in out.iter_mut().enumerate().take(nc) {
            *o = w[0] * self.data[n00 * nc + c]
                + w[1] * self.data[n10 * nc + c]
                + w[2] * self.data[n01 * nc + c]
                + w[3] * self.data[n11 * nc + c];
        }
        Ok(())
    }

    pub fn sample(&self, p: [f64; 2]) -> Result<SmallTensor> {
        let mut t = SmallTensor::zeros(self.rank)?;
        self.sample_into(p, t.components_mut())?;
        Ok(t)
    }
}

/// Selection of grid nodes, used to restrict residual norms.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMask {
    grid: Grid2D,
    keep: Vec<bool>,
}

impl NodeMask {
    pub fn all(grid: Grid2D) -> Self {
        Self {
            grid,
            keep: vec![true; grid.node_count()],
        }
    }

    /// Nodes at least `margin` nodes away from every edge.
    pub fn interior(grid: Grid2D, margin: usize) -> Self {
        let mut keep = vec![false; grid.node_count()];
        for j in margin..grid.ny.saturating_sub(margin) {
            for i in margin..grid.nx.saturating_sub(margin) {
                keep[grid.index(i, j)] = true;
            }
        }
        Self { grid, keep }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut([f64; 2]) -> bool) -> Self {
        let keep = (0..grid.node_count()).map(|n| f(grid.point(n))).collect();
        Self { grid, keep }
    }

    /// Drop nodes with `|x − c| < radius`.
    pub fn excluding_disc(mut self, c: [f64; 2], radius: f64) -> Self {
        for n in 0..self.keep.len() {
            let p = self.grid.point(n);
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            let r2 = dx * dx + dy * dy;
            if r2 < radius * radius {
                self.keep[n] = false;
            }
        }
        self
    }

    pub fn intersect(mut self, other: &NodeMask) -> Self {
        for (a, b) in self.keep.iter_mut().zip(other.keep.iter()) {
            *a = *a && *b;
        }
        self
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn contains(&self, n: usize) -> bool {
        self.keep[n]
    }
    pub fn count(&self) -> usize {
        self.keep.iter().filter(|k| **k).count()
    }
    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.keep.iter().enumerate().filter(|(_, k)| **k).map(|(n, _)| n)
    }
}

/// Piecewise-linear curve in the (x, y) plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    vertices: Vec<[f64; 2]>,
    closed: bool,
}

impl Polyline {
    pub fn new(vertices: Vec<[f64; 2]>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(arg("a polyline needs at least 2 vertices"));
        }
        if vertices.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(arg("polyline vertices must be finite"));
        }
        if closed && vertices.first() != vertices.last() {
            return Err(arg("a closed polyline must end at its first vertex"));
        }
        Ok(Self { vertices, closed })
    }

    /// Closed curve through `vertices`, appending the first vertex at the end.
    pub fn closed_through(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(&first) = vertices.first() {
            if vertices.last() != Some(&first) {
                vertices.push(first);
            }
        }
        if vertices.len() < 4 {
            return Err(arg("a closed polyline needs at least 3 distinct vertices"));
        }
        Self::new(vertices, true)
    }

    pub fn segment(a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            vertices: vec![a, b],
            closed: false,
        }
    }

    /// Counter-clockwise rectangle from `lo` to `hi`, starting at `lo`.
    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        if !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(arg("rectangle corners must satisfy lo < hi"));
        }
        Self::closed_through(vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]])
    }

    /// Counter-clockwise square of side `side` centred at `c`.
    pub fn square(c: [f64; 2], side: f64) -> Result<Self> {
        let a = 0.5 * side;
        Self::rectangle([c[0] - a, c[1] - a], [c[0] + a, c[1] + a])
    }

    /// Counter-clockwise regular `n`-gon inscribed in a circle.
    pub fn circle(c: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        if n < 3 || !(radius > 0.0) {
            return Err(arg("circle needs radius > 0 and at least 3 vertices"));
        }
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * core::f64::consts::PI * k as f64 / n as f64;
                [c[0] + radius * libm::cos(t), c[1] + radius * libm::sin(t)]
            })
            .collect();
        Self::closed_through(pts)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }
    pub fn is_closed(&self) -> bool {
        self.closed
    }
    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }
    pub fn start(&self) -> [f64; 2] {
        self.vertices[0]
    }
    pub fn end(&self) -> [f64; 2] {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| libm::hypot(w[1][0] - w[0][0], w[1][1] - w[0][1]))
            .sum()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self {
            vertices: v,
            closed: self.closed,
        }
    }

    /// `self` followed by `next`; `next` must start where `self` ends.
    pub fn then(&self, next: &Polyline) -> Result<Self> {
        if self.end() != next.start() {
            return Err(arg("concatenated paths must share the junction vertex"));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&next.vertices[1..]);
        let closed = v.first() == v.last();
        Ok(Self { vertices: v, closed })
    }

    /// Shoelace area; positive for counter-clockwise loops.
    pub fn signed_area(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1])
            .sum::<f64>()
            * 0.5
    }

    /// Even-odd point-in-polygon test (closed curves only).
    pub fn encloses(&self, p: [f64; 2]) -> bool {
        if !self.closed {
            return false;
        }
        let mut inside = false;
        for w in self.vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let xc = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Vertices after splitting each segment into equal pieces no longer than
    /// `max_piece`. Original vertices are kept.
    pub fn subdivided(&self, max_piece: f64) -> Vec<[f64; 2]> {
        let mut out = vec![self.vertices[0]];
        for w in self.vertices.windows(2) {
            let len = libm::hypot(w[1][0] - w[0][0], w[1][1] - w[0][1]);
            let pieces = libm::ceil(len / max_piece).max(1.0) as usize;
            for s in 1..=pieces {
                let t = s as f64 / pieces as f64;
                out.push(if s == pieces {
                    w[1]
                } else {
                    [
                        w[0][0] + t * (w[1][0] - w[0][0]),
                        w[0][1] + t * (w[1][1] - w[0][1]),
                    ]
                });
            }
        }
        out
    }

    pub fn inside(&self, grid: &Grid2D) -> bool {
        self.vertices.iter().all(|v| grid.contains(*v))
    }
}

/// A planar surface with normal `ẑ`: a set of grid nodes or the interior of a
/// closed polyline.
///
/// Both variants are discretised as a union of grid cells. A node set keeps
/// the cells whose four corners are selected; a polygon keeps the cells whose
/// centre it encloses. Quadrature is the trapezoid rule on those cells.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceRegion {
    Nodes(NodeMask),
    Interior(Polyline),
}

impl SurfaceRegion {
    pub fn whole(grid: Grid2D) -> Self {
        SurfaceRegion::Nodes(NodeMask::all(grid))
    }

    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        Ok(SurfaceRegion::Interior(Polyline::rectangle(lo, hi)?))
    }

    /// Cell inclusion flags, `(nx−1)·(ny−1)` of them, cell `(i,j)` at
    /// `j·(nx−1) + i`.
    pub fn cells(&self, grid: &Grid2D) -> Result<Vec<bool>> {
        let (cx, cy) = (grid.nx - 1, grid.ny - 1);
        let mut cells = vec![false; cx * cy];
        match self {
            SurfaceRegion::Nodes(mask) => {
                mask.grid.same_as(grid)?;
                for j in 0..cy {
                    for i in 0..cx {
                        let n = grid.index(i, j);
                        cells[j * cx + i] = mask.keep[n]
                            && mask.keep[n + 1]
                            && mask.keep[n + grid.nx]
                            && mask.keep[n + grid.nx + 1];
                    }
                }
            }
            SurfaceRegion::Interior(poly) => {
                if !poly.is_closed() {
                    return Err(arg("surface boundary must be a closed polyline"));
                }
                if !poly.inside(grid) {
                    return Err(domain("surface region extends outside the grid"));
                }
                let h = grid.spacing;
                for j in 0..cy {
                    for i in 0..cx {
                        let c = [grid.x(i) + 0.5 * h, grid.y(j) + 0.5 * h];
                        cells[j * cx + i] = poly.encloses(c);
                    }
                }
            }
        }
        if !cells.iter().any(|c| *c) {
            return Err(arg("surface region covers no grid cell"));
        }
        Ok(cells)
    }

    /// Trapezoid weights per node.
    pub fn node_weights(&self, grid: &Grid2D) -> Result<Vec<f64>> {
        let cells = self.cells(grid)?;
        let cx = grid.nx - 1;
        let q = 0.25 * grid.spacing * grid.spacing;
        let mut w = vec![0.0; grid.node_count()];
        for (c, inc) in cells.iter().enumerate() {
            if *inc {
                let (i, j) = (c % cx, c / cx);
                let n = grid.index(i, j);
                w[n] += q;
                w[n + 1] += q;
                w[n + grid.nx] += q;
                w[n + grid.nx + 1] += q;
            }
        }
        Ok(w)
    }

    pub fn area(&self, grid: &Grid2D) -> Result<f64> {
        Ok(self.node_weights(grid)?.iter().sum())
    }

    /// Counter-clockwise boundary. For a polygon this is the polygon itself;
    /// for a node set it is traced along the edges of the selected cells.
    pub fn boundary(&self, grid: &Grid2D) -> Result<Polyline> {
        match self {
            SurfaceRegion::Interior(poly) => {
                if poly.signed_area() < 0.0 {
                    Ok(poly.reversed())
                } else {
                    Ok(poly.clone())
                }
            }
            SurfaceRegion::Nodes(_) => trace_cell_boundary(grid, &self.cells(grid)?),
        }
    }
}

fn trace_cell_boundary(grid: &Grid2D, cells: &[bool]) -> Result<Polyline> {
    let (cx, cy) = (grid.nx - 1, grid.ny - 1);
    let inc = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && (i as usize) < cx && (j as usize) < cy && cells[j as usize * cx + i as usize]
    };
    // Directed boundary edges between node coordinates, interior on the left.
    let mut next: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    let mut push = |a: (usize, usize), b: (usize, usize)| -> Result<()> {
        if next.insert(a, b).is_some() {
            return Err(Error::Construction(
                "surface boundary touches itself at a vertex".into(),
            ));
        }
        Ok(())
    };
    for j in 0..cy {
        for i in 0..cx {
            if !cells[j * cx + i] {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            if !inc(ii, jj - 1) {
                push((i, j), (i + 1, j))?;
            }
            if !inc(ii + 1, jj) {
                push((i + 1, j), (i + 1, j + 1))?;
            }
            if !inc(ii, jj + 1) {
                push((i + 1, j + 1), (i, j + 1))?;
            }
            if !inc(ii - 1, jj) {
                push((i, j + 1), (i, j))?;
            }
        }
    }
    let total = next.len();
    let start = *next.keys().next().expect("region has at least one cell");
    let mut loop_nodes = vec![start];
    let mut cur = start;
    loop {
        cur = next[&cur];
        if cur == start {
            break;
        }
        loop_nodes.push(cur);
    }
    if loop_nodes.len() != total {
        return Err(Error::Construction(
            "surface region boundary is not a single closed curve".into(),
        ));
    }
    // Keep only corners.
    let m = loop_nodes.len();
    let mut verts = Vec::new();
    for k in 0..m {
        let a = loop_nodes[(k + m - 1) % m];
        let b = loop_nodes[k];
        let c = loop_nodes[(k + 1) % m];
        let d1 = (b.0 as isize - a.0 as isize, b.1 as isize - a.1 as isize);
        let d2 = (c.0 as isize - b.0 as isize, c.1 as isize - b.1 as isize);
        if d1 != d2 {
            verts.push([grid.x(b.0), grid.y(b.1)]);
        }
    }
    Polyline::closed_through(verts)
}

// ---------------------------------------------------------------------------
// Finite differences

#[derive(Clone, Copy)]
enum Order {
    First,
    Second,
}

/// Stencil along one axis at position `pos` of `n`: (offsets, coefficients)
/// in units of h or h².
fn stencil(order: Order, pos: usize, n: usize) -> ([isize; 4], [f64; 4], usize) {
    match order {
        Order::First => {
            if pos == 0 {
                ([0, 1, 2, 0], [-1.5, 2.0, -0.5, 0.0], 3)
            } else if pos == n - 1 {
                ([0, -1, -2, 0], [1.5, -2.0, 0.5, 0.0], 3)
            } else {
                ([-1, 1, 0, 0], [-0.5, 0.5, 0.0, 0.0], 2)
            }
        }
        Order::Second => {
            if pos > 0 && pos < n - 1 {
                ([-1, 0, 1, 0], [1.0, -2.0, 1.0, 0.0], 3)
            } else {
                let s: isize = if pos == 0 { 1 } else { -1 };
                if n >= 4 {
                    ([0, s, 2 * s, 3 * s], [2.0, -5.0, 4.0, -1.0], 4)
                } else {
                    ([0, s, 2 * s, 0], [1.0, -2.0, 1.0, 0.0], 3)
                }
            }
        }
    }
}

fn apply_axis(f: &TensorField, axis: Axis, order: Order) -> TensorField {
    let g = f.grid;
    let nc = f.ncomp();
    let (n, stride) = match axis {
        Axis::X => (g.nx, 1isize),
        Axis::Y => (g.ny, g.nx as isize),
    };
    let scale = match order {
        Order::First => 1.0 / g.spacing,
        Order::Second => 1.0 / (g.spacing * g.spacing),
    };
    let mut out = vec![0.0; f.data.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let node = g.index(i, j);
            let pos = match axis {
                Axis::X => i,
                Axis::Y => j,
            };
            let (offs, coefs, len) = stencil(order, pos, n);
            let dst = &mut out[node * nc..(node + 1) * nc];
            for s in 0..len {
                let src = (node as isize + offs[s] * stride) as usize;
                let w = coefs[s] * scale;
                for (d, v) in dst.iter_mut().zip(&f.data[src * nc..(src + 1) * nc]) {
                    *d += w * v;
                }
            }
        }
    }
    TensorField {
        grid: g,
        rank: f.rank,
        data: out,
    }
}

/// `∂_axis f`, componentwise.
pub fn partial(f: &TensorField, axis: Axis) -> TensorField {
    apply_axis(f, axis, Order::First)
}

/// `∂²_axis f`, componentwise, with the dedicated second-derivative stencil.
pub fn partial2(f: &TensorField, axis: Axis) -> TensorField {
    apply_axis(f, axis, Order::Second)
}

/// `∂_x ∂_y f`.
pub fn mixed_partial(f: &TensorField) -> TensorField {
    partial(&partial(f, Axis::Y), Axis::X)
}

pub fn laplacian(f: &TensorField) -> TensorField {
    let mut out = partial2(f, Axis::X);
    let yy = partial2(f, Axis::Y);
    out.data.iter_mut().zip(yy.data.iter()).for_each(|(a, b)| *a += b);
    out
}

/// Gradient with the derivative index prepended: `out[d][rest] = ∂_d f[rest]`,
/// the `d = z` block being zero.
pub fn gradient(f: &TensorField) -> Result<TensorField> {
    if f.rank >= MAX_RANK {
        return Err(arg("gradient would exceed the maximum rank"));
    }
    let dx = partial(f, Axis::X);
    let dy = partial(f, Axis::Y);
    let nc = f.ncomp();
    let mut out = TensorField::zeros(f.grid, f.rank + 1)?;
    for n in 0..f.grid.node_count() {
        let o = out.node_mut(n);
        o[..nc].copy_from_slice(dx.node(n));
        o[nc..2 * nc].copy_from_slice(dy.node(n));
    }
    Ok(out)
}

/// Row curl `(∇×U)_ik = ε_ilj ∂_l U_jk` with `∂_z = 0`.
pub fn curl_rows(u: &TensorField) -> Result<TensorField> {
    u.require_rank(2, "curl_rows input")?;
    let d = [partial(u, Axis::X), partial(u, Axis::Y)];
    let mut out = TensorField::zeros(u.grid, 2)?;
    for n in 0..u.grid.node_count() {
        let o = out.node_mut(n);
        for i in 0..3 {
            for l in PLANE {
                let dl = d[l].node(n);
                for j in 0..3 {
                    let e = eps(i, l, j);
                    if e != 0.0 {
                        for k in 0..3 {
                            o[3 * i + k] += e * dl[3 * j + k];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Incompatibility `η_kl = ε_kpm ε_lqn ∂_p ∂_q E_mn` of a symmetric field.
pub fn incompatibility_op(e: &TensorField) -> Result<TensorField> {
    e.require_rank(2, "incompatibility input")?;
    e.require_symmetric("strain")?;
    let exx = partial2(e, Axis::X);
    let eyy = partial2(e, Axis::Y);
    let exy = mixed_partial(e);
    let mut out = TensorField::zeros(e.grid, 2)?;
    for n in 0..e.grid.node_count() {
        let d2 = |p: usize, q: usize| -> &[f64] {
            match (p, q) {
                (0, 0) => exx.node(n),
                (1, 1) => eyy.node(n),
                _ => exy.node(n),
            }
        };
        let mut eta = [0.0; 9];
        for k in 0..3 {
            for l in 0..3 {
                let mut s = 0.0;
                for p in PLANE {
                    for q in PLANE {
                        let dd = d2(p, q);
                        for m in 0..3 {
                            let e1 = eps(k, p, m);
                            if e1 == 0.0 {
                                continue;
                            }
                            for nn in 0..3 {
                                let e2 = eps(l, q, nn);
                                if e2 != 0.0 {
                                    s += e1 * e2 * dd[3 * m + nn];
                                }
                            }
                        }
                    }
                }
                eta[3 * k + l] = s;
            }
        }
        out.node_mut(n).copy_from_slice(&eta);
    }
    Ok(out)
}

/// Row divergence `(∇·U)_k = ∂_i U_ik`.
pub fn divergence_rows(u: &TensorField) -> Result<TensorField> {
    u.require_rank(2, "divergence_rows input")?;
    let dx = partial(u, Axis::X);
    let dy = partial(u, Axis::Y);
    let mut out = TensorField::zeros(u.grid, 1)?;
    for n in 0..u.grid.node_count() {
        let (a, b) = (dx.node(n), dy.node(n));
        let o = out.node_mut(n);
        for k in 0..3 {
            o[k] = a[k] + b[3 + k];
        }
    }
    Ok(out)
}

/// `∮ form_kβ dx_β` along `path`, where `form` is rank 2 with the direction
/// in the first slot (`form[β][k]`). Trapezoid rule on pieces no longer than
/// h/2, with bilinear sampling.
pub fn line_integral(form: &TensorField, path: &Polyline) -> Result<Vec3> {
    form.require_rank(2, "line_integral form")?;
    if !path.inside(&form.grid) {
        return Err(domain("integration path leaves the grid"));
    }
    let pts = path.subdivided(0.5 * form.grid.spacing);
    let mut acc = [0.0; 3];
    let mut fa = [0.0; 9];
    let mut fb = [0.0; 9];
    form.sample_into(pts[0], &mut fa)?;
    for w in pts.windows(2) {
        form.sample_into(w[1], &mut fb)?;
        let dx = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
        for k in 0..3 {
            for b in PLANE {
                acc[k] += 0.5 * (fa[3 * b + k] + fb[3 * b + k]) * dx[b];
            }
        }
        fa = fb;
    }
    Ok(acc)
}

/// `∫_S f dS` with the scalar area element.
pub fn surface_integral(f: &TensorField, region: &SurfaceRegion) -> Result<SmallTensor> {
    let w = region.node_weights(&f.grid)?;
    let mut t = SmallTensor::zeros(f.rank)?;
    let nc = f.ncomp();
    {
        let acc = t.components_mut();
        for (n, wn) in w.iter().enumerate() {
            if *wn != 0.0 {
                for c in 0..nc {
                    acc[c] += wn * f.data[n * nc + c];
                }
            }
        }
    }
    Ok(t)
}

/// Observed order `log(e_coarse/e_fine)/log(h_coarse/h_fine)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    libm::log(e_coarse / e_fine) / libm::log(h_coarse / h_fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid2D {
        Grid2D::square(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid2D::new([0.0, 0.0], 0.0, 5, 5).is_err());
        assert!(Grid2D::new([0.0, 0.0], 0.1, 2, 5).is_err());
        let g = grid(5);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.upper(), [1.0, 1.0]);
        let r = g.refined();
        assert_eq!((r.nx(), r.spacing()), (9, 0.25));
        assert_eq!(r.upper(), [1.0, 1.0]);
    }

    #[test]
    fn partial_of_constant_and_linear() {
        let g = grid(7);
        let c = TensorField::scalar_fn(g, |_| 3.0);
        assert!(partial(&c, Axis::X).max_abs() < 1e-14);
        let f = TensorField::scalar_fn(g, |p| 2.5 * p[0] - 0.5 * p[1]);
        let dx = partial(&f, Axis::X);
        let dy = partial(&f, Axis::Y);
        for n in 0..g.node_count() {
            assert_abs_diff_eq!(dx.data()[n], 2.5, epsilon = 1e-13);
            assert_abs_diff_eq!(dy.data()[n], -0.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        let g = grid(6);
        let f = TensorField::scalar_fn(g, |p| 1.0 + p[0] - 2.0 * p[1] + 3.0 * p[0] * p[0] + p[0] * p[1] - 0.5 * p[1] * p[1]);
        let dx = partial(&f, Axis::X);
        let dxx = partial2(&f, Axis::X);
        let dyy = partial2(&f, Axis::Y);
        let dxy = mixed_partial(&f);
        for n in 0..g.node_count() {
            let p = g.point(n);
            assert_abs_diff_eq!(dx.data()[n], 1.0 + 6.0 * p[0] + p[1], epsilon = 1e-12);
            assert_abs_diff_eq!(dxx.data()[n], 6.0, epsilon = 1e-11);
            assert_abs_diff_eq!(dyy.data()[n], -1.0, epsilon = 1e-11);
            assert_abs_diff_eq!(dxy.data()[n], 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn second_derivative_boundary_closure_is_exact_on_cubics() {
        let g = grid(6);
        let f = TensorField::scalar_fn(g, |p| p[0].powi(3));
        let d = partial2(&f, Axis::X);
        for n in 0..g.node_count() {
            assert_abs_diff_eq!(d.data()[n], 6.0 * g.point(n)[0], epsilon = 1e-10);
        }
    }

    fn sin_error(n: usize) -> (f64, f64) {
        let g = Grid2D::square(0.0, 2.0, n).unwrap();
        let f = TensorField::scalar_fn(g, |p| libm::sin(p[0]));
        let d = partial(&f, Axis::X);
        let err = (0..g.node_count())
            .map(|k| (d.data()[k] - libm::cos(g.point(k)[0])).abs())
            .fold(0.0, f64::max);
        (err, g.spacing())
    }

    #[test]
    fn partial_of_sine_is_second_order() {
        let (e1, h1) = sin_error(101);
        let (e2, h2) = sin_error(201);
        assert!(e1 <= 0.5 * h1 * h1, "error {e1}");
        assert!(observed_order(e1, e2, h1, h2) > 1.9);
    }

    #[test]
    fn curl_rows_examples() {
        let g = grid(5);
        let c = TensorField::uniform(g, &SmallTensor::identity());
        assert!(curl_rows(&c).unwrap().max_abs() < 1e-14);

        // U_jk = δ_jk a x  ⇒  (∇×U)_ik = ε_i1k a (1-based), i.e. ε_{i,x,k} a.
        let a = 0.7;
        let u = TensorField::from_fn(g, 2, |p, o| {
            for j in 0..3 {
                o[4 * j] = a * p[0];
            }
        })
        .unwrap();
        let cu = curl_rows(&u).unwrap();
        for n in 0..g.node_count() {
            for i in 0..3 {
                for k in 0..3 {
                    assert_abs_diff_eq!(cu.node(n)[3 * i + k], eps(i, X, k) * a, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn divergence_rows_example() {
        let g = grid(5);
        let a = 1.3;
        let u = TensorField::from_fn(g, 2, |p, o| {
            for j in 0..3 {
                o[4 * j] = a * p[0];
            }
        })
        .unwrap();
        let d = divergence_rows(&u).unwrap();
        for n in 0..g.node_count() {
            assert_abs_diff_eq!(d.node(n)[0], a, epsilon = 1e-13);
            assert_abs_diff_eq!(d.node(n)[1], 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(d.node(n)[2], 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn incompatibility_rejects_asymmetric_and_kills_zero() {
        let g = grid(5);
        let mut e = TensorField::zeros(g, 2).unwrap();
        assert!(incompatibility_op(&e).unwrap().max_abs() == 0.0);
        e.data_mut()[1] = 1.0;
        assert!(incompatibility_op(&e).is_err());
    }

    #[test]
    fn incompatibility_of_quadratic_strain() {
        // E_xx = y², others 0  ⇒  η_zz = ε_zpx ε_zqx ∂p∂q y² = ∂y∂y y² = 2.
        let g = grid(6);
        let e = TensorField::from_fn(g, 2, |p, o| o[0] = p[1] * p[1]).unwrap();
        let eta = incompatibility_op(&e).unwrap();
        for n in 0..g.node_count() {
            assert_abs_diff_eq!(eta.node(n)[8], 2.0, epsilon = 1e-10);
            for c in 0..8 {
                assert_abs_diff_eq!(eta.node(n)[c], 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn polyline_invariants() {
        assert!(Polyline::new(vec![[0.0, 0.0]], false).is_err());
        assert!(Polyline::new(vec![[0.0, 0.0], [1.0, 0.0]], true).is_err());
        let sq = Polyline::square([0.0, 0.0], 2.0).unwrap();
        assert!(sq.is_closed());
        assert_abs_diff_eq!(sq.signed_area(), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.length(), 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.reversed().signed_area(), -4.0, epsilon = 1e-14);
        assert!(sq.encloses([0.1, -0.3]));
        assert!(!sq.encloses([1.1, 0.0]));
        let a = Polyline::segment([0.0, 0.0], [1.0, 0.0]);
        let b = Polyline::segment([1.0, 0.0], [1.0, 1.0]);
        assert_eq!(a.then(&b).unwrap().segment_count(), 2);
        assert!(b.then(&b).is_err());
    }

    #[test]
    fn surface_integral_of_one_is_area() {
        let g = Grid2D::square(-2.0, 2.0, 81).unwrap();
        let one = TensorField::scalar_fn(g, |_| 1.0);
        let w = 1.0;
        let s = SurfaceRegion::rectangle([-0.5, -0.5], [0.5, 0.5]).unwrap();
        let a = surface_integral(&one, &s).unwrap()[0];
        assert!((a - w * w).abs() <= 2.0 * g.spacing(), "area {a}");
        let whole = surface_integral(&one, &SurfaceRegion::whole(g)).unwrap()[0];
        assert_abs_diff_eq!(whole, 16.0, epsilon = 1e-12);
    }

    #[test]
    fn surface_integral_of_gaussian() {
        let g = Grid2D::square(-2.0, 2.0, 161).unwrap();
        let s = 0.2;
        let f = TensorField::scalar_fn(g, |p| {
            libm::exp(-(p[0] * p[0] + p[1] * p[1]) / (2.0 * s * s)) / (2.0 * core::f64::consts::PI * s * s)
        });
        let r = SurfaceRegion::rectangle([-1.5, -1.5], [1.5, 1.5]).unwrap();
        let v = surface_integral(&f, &r).unwrap()[0];
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn empty_region_is_rejected() {
        let g = grid(5);
        let none = NodeMask::from_fn(g, |_| false);
        let one = TensorField::scalar_fn(g, |_| 1.0);
        assert!(surface_integral(&one, &SurfaceRegion::Nodes(none)).is_err());
    }

    #[test]
    fn mask_boundary_is_traced_ccw() {
        let g = Grid2D::square(0.0, 4.0, 5).unwrap();
        let m = NodeMask::from_fn(g, |p| p[0] >= 1.0 && p[0] <= 3.0 && p[1] >= 1.0 && p[1] <= 2.0);
        let r = SurfaceRegion::Nodes(m);
        let b = r.boundary(&g).unwrap();
        assert_eq!(b.segment_count(), 4);
        assert_abs_diff_eq!(b.signed_area(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.area(&g).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn line_integral_of_exact_form_vanishes_on_loops() {
        // form = ∇φ for each k: form[β][k] = ∂_β φ_k
        let g = Grid2D::square(-1.0, 1.0, 81).unwrap();
        let form = TensorField::from_fn(g, 2, |p, o| {
            let (x, y) = (p[0], p[1]);
            // φ_0 = sin x cos y, φ_1 = x² y, φ_2 = 0
            o[0] = libm::cos(x) * libm::cos(y);
            o[1] = 2.0 * x * y;
            o[3] = -libm::sin(x) * libm::sin(y);
            o[4] = x * x;
        })
        .unwrap();
        let lp = Polyline::circle([0.1, -0.1], 0.6, 64).unwrap();
        let v = line_integral(&form, &lp).unwrap();
        for c in v {
            assert!(c.abs() < 1e-3 * g.spacing(), "{v:?}");
        }
        let zero = TensorField::zeros(g, 2).unwrap();
        assert_eq!(line_integral(&zero, &lp).unwrap(), [0.0; 3]);
        let out = Polyline::segment([0.0, 0.0], [1.5, 0.0]);
        assert!(matches!(line_integral(&form, &out), Err(Error::Domain(_))));
    }

    #[test]
    fn stokes_consistency_on_smooth_field() {
        // ∮ U_βk dx_β = ∫ (∂_x U_yk − ∂_y U_xk) dS = ∫ (curl U)_zk dS
        let g = Grid2D::square(-1.0, 1.0, 161).unwrap();
        let u = TensorField::from_fn(g, 2, |p, o| {
            let (x, y) = (p[0], p[1]);
            o[0] = -y * x;
            o[3] = x * x + libm::sin(y);
            o[2] = libm::exp(0.3 * x) * y;
            o[5] = x * y * y;
        })
        .unwrap();
        let c = curl_rows(&u).unwrap();
        let lo = [-0.5, -0.4];
        let hi = [0.55, 0.6];
        let region = SurfaceRegion::rectangle(lo, hi).unwrap();
        let surf = surface_integral(&c, &region).unwrap();
        let line = line_integral(&u, &region.boundary(&g).unwrap()).unwrap();
        let tol = g.spacing().powi(2) * 10.0;
        for k in 0..3 {
            assert!((surf.get(&[2, k]) - line[k]).abs() < tol + 1e-3 * g.spacing(),
                "k={k}: {} vs {}", surf.get(&[2, k]), line[k]);
        }
    }

    #[test]
    fn bilinear_sampling_is_exact_on_bilinear_fields() {
        let g = grid(9);
        let f = TensorField::scalar_fn(g, |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]);
        let v = f.sample([0.3, -0.77]).unwrap()[0];
        assert_abs_diff_eq!(v, 1.0 + 0.6 + 0.77 - 0.5 * 0.3 * 0.77, epsilon = 1e-13);
        assert!(f.sample([1.2, 0.0]).is_err());
    }

    #[test]
    fn gradient_layout() {
        let g = grid(7);
        let f = TensorField::from_fn(g, 1, |p, o| {
            o[0] = p[0];
            o[2] = p[1];
        })
        .unwrap();
        let gr = gradient(&f).unwrap();
        assert_eq!(gr.rank(), 2);
        let n = g.index(3, 3);
        assert_abs_diff_eq!(gr.node(n)[0], 1.0, epsilon = 1e-13); // ∂x f0
        assert_abs_diff_eq!(gr.node(n)[5], 1.0, epsilon = 1e-13); // ∂y f2
        assert_eq!(&gr.node(n)[6..], &[0.0; 3]);
    }

    proptest! {
        #[test]
        fn partial_exact_for_random_quadratics(c in prop::array::uniform6(-5.0f64..5.0)) {
            let g = Grid2D::new([-0.3, 0.2], 0.07, 9, 7).unwrap();
            let f = TensorField::scalar_fn(g, |p| c[0] + c[1]*p[0] + c[2]*p[1] + c[3]*p[0]*p[0] + c[4]*p[0]*p[1] + c[5]*p[1]*p[1]);
            let dy = partial(&f, Axis::Y);
            let lap = laplacian(&f);
            for n in 0..g.node_count() {
                let p = g.point(n);
                prop_assert!((dy.data()[n] - (c[2] + c[4]*p[0] + 2.0*c[5]*p[1])).abs() < 1e-9);
                prop_assert!((lap.data()[n] - 2.0*(c[3] + c[5])).abs() < 1e-7);
            }
        }

        #[test]
        fn incompatibility_symmetric_for_symmetric_input(c in prop::array::uniform6(-2.0f64..2.0)) {
            let g = Grid2D::square(-1.0, 1.0, 9).unwrap();
            let e = TensorField::from_fn(g, 2, |p, o| {
                let s = [c[0]*p[0]*p[1], c[1]*p[1]*p[1], c[2]*p[0]*p[0], c[3]*p[0], c[4]*p[1]*p[0]*p[0], c[5]];
                let idx = [(0,0),(0,1),(0,2),(1,1),(1,2),(2,2)];
                for (v, (i, j)) in s.iter().zip(idx) {
                    o[3*i+j] = *v;
                    o[3*j+i] = *v;
                }
            }).unwrap();
            let eta = incompatibility_op(&e).unwrap();
            prop_assert!(eta.asymmetry().unwrap() < 1e-9);
        }
    }
}
