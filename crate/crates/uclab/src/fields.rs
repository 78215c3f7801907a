//! Scalar fields with gradient access and all quadrature: L^p norms over
//! regions, surface integrals over spheres, and the frequency integrands
//! H, D, H̄, Ĥ, D̂.
//!
//! Sphere quadrature is a tensor Gauss–Legendre rule in the spherical angles
//! (trapezoid in angle for n = 2); ball and annulus integrals add a radial
//! Gauss–Legendre factor. All quadrature sums use a pairwise reduction with a
//! fixed order, so results are bit-reproducible regardless of worker count.

use crate::error::{UcError, UcResult};
use crate::geometry::{dist, Aab, BoxDomain, Point, RegionMask};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Deterministic summation
// ---------------------------------------------------------------------------

/// Pairwise (cascade) summation; deterministic for a fixed input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

// ---------------------------------------------------------------------------
// Gauss–Legendre nodes
// ---------------------------------------------------------------------------

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial with the Chebyshev initial guess.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=order {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = nf * (x * p1 - p0) / (x * x - 1.0);
        nodes[order - 1 - i] = x;
        weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

// ---------------------------------------------------------------------------
// Quadrature specification and sphere rules
// ---------------------------------------------------------------------------

/// Quadrature orders: radial Gauss–Legendre × angular tensor rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub radial_order: usize,
    /// Polar (θ) order for n = 3; total angular order for n = 2.
    pub theta_order: usize,
    /// Azimuthal (φ) order for n = 3; unused for n = 2.
    pub phi_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_order: 32,
            theta_order: 32,
            phi_order: 64,
        }
    }
}

/// Quadrature rule on the unit sphere S^{n−1}: direction vectors and weights
/// summing to the surface measure (4π for n = 3, 2π for n = 2).
pub struct SphereRule {
    pub dirs: Vec<Point>,
    pub weights: Vec<f64>,
}

pub fn sphere_rule(n: usize, spec: &QuadratureSpec) -> SphereRule {
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    if n == 2 {
        // Trapezoid in angle is spectrally exact for trigonometric data.
        let m = spec.theta_order.max(4);
        let w = 2.0 * PI / m as f64;
        for j in 0..m {
            let a = 2.0 * PI * j as f64 / m as f64;
            dirs.push([a.cos(), a.sin(), 0.0]);
            weights.push(w);
        }
    } else {
        let (tn, tw) = gauss_legendre_on(spec.theta_order, 0.0, PI);
        let m = spec.phi_order.max(4);
        let wphi = 2.0 * PI / m as f64;
        for (ti, &theta) in tn.iter().enumerate() {
            let (st, ct) = (theta.sin(), theta.cos());
            for j in 0..m {
                let phi = 2.0 * PI * j as f64 / m as f64;
                dirs.push([st * phi.cos(), st * phi.sin(), ct]);
                weights.push(tw[ti] * st * wphi);
            }
        }
    }
    SphereRule { dirs, weights }
}

// ---------------------------------------------------------------------------
// Scalar fields
// ---------------------------------------------------------------------------

/// Provenance of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSource {
    Analytic,
    Grid,
}

type EvalFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> [f64; 3] + Send + Sync>;

/// A scalar function on ℝⁿ given in closed form or as grid samples with
/// trilinear interpolation; carries gradient (and optionally Laplacian)
/// access.
#[derive(Clone)]
pub struct ScalarField {
    eval: EvalFn,
    grad: GradFn,
    lap: Option<EvalFn>,
    pub source: FieldSource,
    /// Region of validity; integrals refuse to leave it when present.
    pub support: Option<Aab>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("source", &self.source)
            .field("support", &self.support)
            .finish()
    }
}

impl ScalarField {
    pub fn analytic(
        eval: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Point) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            lap: None,
            source: FieldSource::Analytic,
            support: None,
        }
    }

    pub fn with_laplacian(mut self, lap: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.lap = Some(Arc::new(lap));
        self
    }

    pub fn with_support(mut self, support: Aab) -> Self {
        self.support = Some(support);
        self
    }

    /// Constant field.
    pub fn constant(c: f64) -> Self {
        ScalarField::analytic(move |_| c, |_| [0.0; 3]).with_laplacian(|_| 0.0)
    }

    pub fn value(&self, x: &Point) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &Point) -> [f64; 3] {
        (self.grad)(x)
    }

    pub fn laplacian(&self, x: &Point) -> Option<f64> {
        self.lap.as_ref().map(|l| l(x))
    }

    /// Check that `B(x0, r)` lies in the field's declared support.
    fn check_ball(&self, x0: &Point, r: f64, n: usize) -> UcResult<()> {
        if let Some(sup) = &self.support {
            for i in 0..n {
                if x0[i] - r < sup.lo[i] - 1e-12 || x0[i] + r > sup.hi[i] + 1e-12 {
                    return Err(UcError::region(format!(
                        "ball of radius {r} around ({}, {}, {}) leaves the field support",
                        x0[0], x0[1], x0[2]
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Grid fields
// ---------------------------------------------------------------------------

/// Node samples on a box grid with trilinear interpolation and second-order
/// central-difference gradients (one-sided at the boundary).
#[derive(Debug, Clone)]
pub struct GridField {
    pub n: usize,
    pub dims: [usize; 3],
    pub h: f64,
    pub origin: Point,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn zeros(domain: &BoxDomain) -> Self {
        GridField {
            n: domain.n,
            dims: domain.dims,
            h: domain.h,
            origin: domain.origin,
            data: vec![0.0; domain.node_count()],
        }
    }

    pub fn sample(domain: &BoxDomain, f: &ScalarField) -> Self {
        let mut g = Self::zeros(domain);
        for k in 0..domain.dims[2] {
            for j in 0..domain.dims[1] {
                for i in 0..domain.dims[0] {
                    let p = domain.node_point([i, j, k]);
                    g.data[domain.linear_index([i, j, k])] = f.value(&p);
                }
            }
        }
        g
    }

    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    pub fn at(&self, idx: [usize; 3]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn bounding_box(&self) -> Aab {
        let mut hi = self.origin;
        for i in 0..self.n {
            hi[i] += (self.dims[i] - 1) as f64 * self.h;
        }
        Aab::new(self.origin, hi)
    }

    /// Trilinear (bilinear for n = 2) interpolation, clamped to the grid.
    pub fn interpolate(&self, x: &Point) -> f64 {
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for i in 0..3 {
            if i >= self.n || self.dims[i] == 1 {
                continue;
            }
            let t = (x[i] - self.origin[i]) / self.h;
            let c = t.floor().clamp(0.0, (self.dims[i] - 2) as f64);
            cell[i] = c as usize;
            frac[i] = (t - c).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        let corners = if self.n == 3 { 8 } else { 4 };
        for corner in 0..corners {
            let di = corner & 1;
            let dj = (corner >> 1) & 1;
            let dk = (corner >> 2) & 1;
            let w = (if di == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if dj == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if self.n == 3 {
                    if dk == 1 {
                        frac[2]
                    } else {
                        1.0 - frac[2]
                    }
                } else {
                    1.0
                });
            acc += w * self.at([cell[0] + di, cell[1] + dj, cell[2] + dk]);
        }
        acc
    }

    /// Gradient of the interpolant via central differences on the samples,
    /// one-sided at the grid boundary, then interpolated.
    pub fn gradient(&self, x: &Point) -> [f64; 3] {
        let mut g = [0.0; 3];
        let eps = self.h;
        let bb = self.bounding_box();
        for i in 0..self.n {
            if self.dims[i] == 1 {
                continue;
            }
            let mut xp = *x;
            let mut xm = *x;
            xp[i] = (x[i] + eps).min(bb.hi[i]);
            xm[i] = (x[i] - eps).max(bb.lo[i]);
            let denom = xp[i] - xm[i];
            if denom > 0.0 {
                g[i] = (self.interpolate(&xp) - self.interpolate(&xm)) / denom;
            }
        }
        g
    }

    /// Convert to a `ScalarField` (shares the sample buffer).
    pub fn as_field(self) -> ScalarField {
        let bb = self.bounding_box();
        let me = Arc::new(self);
        let me2 = Arc::clone(&me);
        ScalarField {
            eval: Arc::new(move |x: &Point| me.interpolate(x)),
            grad: Arc::new(move |x: &Point| me2.gradient(x)),
            lap: None,
            source: FieldSource::Grid,
            support: Some(bb),
        }
    }

    /// Write raw little-endian f64 samples plus a sidecar text header
    /// (`path.hdr`) recording dims, h and origin.
    pub fn save(&self, path: &std::path::Path) -> UcResult<()> {
        let mut f = std::fs::File::create(path)?;
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        let hdr = format!(
            "n {}\ndims {} {} {}\nh {:.17e}\norigin {:.17e} {:.17e} {:.17e}\n",
            self.n, self.dims[0], self.dims[1], self.dims[2], self.h, self.origin[0],
            self.origin[1], self.origin[2]
        );
        std::fs::write(path.with_extension("hdr"), hdr)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> UcResult<Self> {
        let hdr = std::fs::read_to_string(path.with_extension("hdr"))?;
        let mut n = 0usize;
        let mut dims = [1usize; 3];
        let mut h = 0.0f64;
        let mut origin = [0.0f64; 3];
        for line in hdr.lines() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("n") => n = it.next().unwrap_or("0").parse().unwrap_or(0),
                Some("dims") => {
                    for d in dims.iter_mut() {
                        *d = it.next().unwrap_or("1").parse().unwrap_or(1);
                    }
                }
                Some("h") => h = it.next().unwrap_or("0").parse().unwrap_or(0.0),
                Some("origin") => {
                    for o in origin.iter_mut() {
                        *o = it.next().unwrap_or("0").parse().unwrap_or(0.0);
                    }
                }
                _ => {}
            }
        }
        if n == 0 || h <= 0.0 {
            return Err(UcError::invalid_domain("malformed grid-field header"));
        }
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let count = dims[0] * dims[1] * dims[2];
        if bytes.len() != count * 8 {
            return Err(UcError::invalid_domain(format!(
                "grid-field payload has {} bytes, expected {}",
                bytes.len(),
                count * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(GridField {
            n,
            dims,
            h,
            origin,
            data,
        })
    }
}

// ---------------------------------------------------------------------------
// Regions and L^p norms
// ---------------------------------------------------------------------------

/// Integration region.
#[derive(Debug, Clone)]
pub enum Region {
    Ball { center: Point, r: f64 },
    Annulus { center: Point, a: f64, b: f64 },
    Mask(RegionMask),
}

/// Integrability exponent in [1, ∞].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(*p),
            Exponent::Infinity => None,
        }
    }
}

/// Integrate `g` over a ball or annulus with the radial × sphere rule; the
/// dimension comes from the caller.
fn radial_integral(
    n: usize,
    center: &Point,
    r_lo: f64,
    r_hi: f64,
    spec: &QuadratureSpec,
    g: &dyn Fn(&Point) -> f64,
) -> f64 {
    let (rn, rw) = gauss_legendre_on(spec.radial_order, r_lo, r_hi);
    let sph = sphere_rule(n, spec);
    let mut terms = Vec::with_capacity(rn.len() * sph.dirs.len());
    for (ri, &rho) in rn.iter().enumerate() {
        let jac = rw[ri] * rho.powi(n as i32 - 1);
        for (di, dir) in sph.dirs.iter().enumerate() {
            let x = [
                center[0] + rho * dir[0],
                center[1] + rho * dir[1],
                center[2] + rho * dir[2],
            ];
            terms.push(jac * sph.weights[di] * g(&x));
        }
    }
    pairwise_sum(&terms)
}

/// Integrate `g` over a region (midpoint rule on masks).
pub fn integrate(n: usize, region: &Region, spec: &QuadratureSpec, g: &dyn Fn(&Point) -> f64) -> f64 {
    match region {
        Region::Ball { center, r } => radial_integral(n, center, 0.0, *r, spec, g),
        Region::Annulus { center, a, b } => radial_integral(n, center, *a, *b, spec, g),
        Region::Mask(mask) => {
            let hn = mask.domain.h.powi(mask.domain.n as i32);
            let terms: Vec<f64> = mask.node_points().iter().map(|p| hn * g(p)).collect();
            pairwise_sum(&terms)
        }
    }
}

/// `‖f‖_{L^p(region)}`; for p = ∞ the essential sup over quadrature/sample
/// points.
pub fn lp_norm(
    n: usize,
    f: &ScalarField,
    region: &Region,
    p: Exponent,
    spec: &QuadratureSpec,
) -> UcResult<f64> {
    match region {
        Region::Mask(m) if m.is_empty() => {
            return Err(UcError::region("L^p norm over an empty mask"))
        }
        Region::Ball { center, r } => {
            if !(*r > 0.0) {
                return Err(UcError::region("L^p norm over an empty ball"));
            }
            f.check_ball(center, *r, n)?;
        }
        Region::Annulus { center, a, b } => {
            if !(*b > *a && *a >= 0.0) {
                return Err(UcError::region("L^p norm over an empty annulus"));
            }
            f.check_ball(center, *b, n)?;
        }
        _ => {}
    }
    match p {
        Exponent::Infinity => {
            let mut best = 0.0f64;
            let mut visit = |x: &Point| {
                best = best.max(f.value(x).abs());
            };
            match region {
                Region::Ball { center, r } => {
                    let (rn, _) = gauss_legendre_on(spec.radial_order, 0.0, *r);
                    let sph = sphere_rule(n, spec);
                    visit(center);
                    for &rho in &rn {
                        for dir in &sph.dirs {
                            visit(&[
                                center[0] + rho * dir[0],
                                center[1] + rho * dir[1],
                                center[2] + rho * dir[2],
                            ]);
                        }
                    }
                }
                Region::Annulus { center, a, b } => {
                    let (rn, _) = gauss_legendre_on(spec.radial_order, *a, *b);
                    let sph = sphere_rule(n, spec);
                    for &rho in &rn {
                        for dir in &sph.dirs {
                            visit(&[
                                center[0] + rho * dir[0],
                                center[1] + rho * dir[1],
                                center[2] + rho * dir[2],
                            ]);
                        }
                    }
                }
                Region::Mask(m) => {
                    for pt in m.node_points() {
                        visit(&pt);
                    }
                }
            }
            Ok(best)
        }
        Exponent::Finite(p) => {
            if !(p >= 1.0) {
                return Err(UcError::ExponentOutOfRange {
                    context: format!("p = {p} < 1"),
                });
            }
            let val = integrate(n, region, spec, &|x| f.value(x).abs().powf(p));
            Ok(val.max(0.0).powf(1.0 / p))
        }
    }
}

// ---------------------------------------------------------------------------
// Frequency integrands
// ---------------------------------------------------------------------------

/// `H(r) = ∫_{S_r} f² ds`.
pub fn sphere_square_integral(
    n: usize,
    f: &ScalarField,
    x0: &Point,
    r: f64,
    spec: &QuadratureSpec,
) -> UcResult<f64> {
    f.check_ball(x0, r, n)?;
    let sph = sphere_rule(n, spec);
    let jac = r.powi(n as i32 - 1);
    let mut terms = Vec::with_capacity(sph.dirs.len());
    for (di, dir) in sph.dirs.iter().enumerate() {
        let x = [x0[0] + r * dir[0], x0[1] + r * dir[1], x0[2] + r * dir[2]];
        let v = f.value(&x);
        terms.push(jac * sph.weights[di] * v * v);
    }
    Ok(pairwise_sum(&terms))
}

/// `D(r) = ∫_{B_r} |∇f|² + V f²` (V omitted means V ≡ 0).
pub fn schrodinger_energy(
    n: usize,
    f: &ScalarField,
    v: Option<&ScalarField>,
    x0: &Point,
    r: f64,
    spec: &QuadratureSpec,
) -> UcResult<f64> {
    f.check_ball(x0, r, n)?;
    let region = Region::Ball { center: *x0, r };
    Ok(integrate(n, &region, spec, &|x| {
        let g = f.gradient(x);
        let mut val = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        if let Some(vv) = v {
            let u = f.value(x);
            val += vv.value(x) * u * u;
        }
        val
    }))
}

/// `H̄(r) = ∫_{S_r} (∂_ν f)² ds` and `Ĥ(r) = ∫_{S_r} V f² ds`.
pub fn boundary_flux_integrals(
    n: usize,
    f: &ScalarField,
    v: Option<&ScalarField>,
    x0: &Point,
    r: f64,
    spec: &QuadratureSpec,
) -> UcResult<(f64, f64)> {
    f.check_ball(x0, r, n)?;
    let sph = sphere_rule(n, spec);
    let jac = r.powi(n as i32 - 1);
    let mut hbar_terms = Vec::with_capacity(sph.dirs.len());
    let mut hhat_terms = Vec::with_capacity(sph.dirs.len());
    for (di, dir) in sph.dirs.iter().enumerate() {
        let x = [x0[0] + r * dir[0], x0[1] + r * dir[1], x0[2] + r * dir[2]];
        let g = f.gradient(&x);
        let dn = g[0] * dir[0] + g[1] * dir[1] + g[2] * dir[2];
        hbar_terms.push(jac * sph.weights[di] * dn * dn);
        if let Some(vv) = v {
            let u = f.value(&x);
            hhat_terms.push(jac * sph.weights[di] * vv.value(&x) * u * u);
        }
    }
    Ok((pairwise_sum(&hbar_terms), pairwise_sum(&hhat_terms)))
}

/// Potential correction in the `D′` identity (from the Rellich–Pohozaev
/// computation with `Δf = V f`):
/// `D̂(r) = ∫_{S_r} V f² − r⁻¹ ∫_{B_r} V { 2 f ((x−x₀)·∇f) + (n−2) f² }`.
pub fn dhat_integral(
    n: usize,
    f: &ScalarField,
    v: Option<&ScalarField>,
    x0: &Point,
    r: f64,
    spec: &QuadratureSpec,
) -> UcResult<f64> {
    f.check_ball(x0, r, n)?;
    let vv = match v {
        Some(vv) => vv,
        None => return Ok(0.0),
    };
    let sph = sphere_rule(n, spec);
    let jac = r.powi(n as i32 - 1);
    let mut surface_terms = Vec::with_capacity(sph.dirs.len());
    for (di, dir) in sph.dirs.iter().enumerate() {
        let x = [x0[0] + r * dir[0], x0[1] + r * dir[1], x0[2] + r * dir[2]];
        let u = f.value(&x);
        surface_terms.push(jac * sph.weights[di] * vv.value(&x) * u * u);
    }
    let region = Region::Ball { center: *x0, r };
    let bulk = integrate(n, &region, spec, &|x| {
        let u = f.value(x);
        let g = f.gradient(x);
        let xd = (x[0] - x0[0]) * g[0] + (x[1] - x0[1]) * g[1] + (x[2] - x0[2]) * g[2];
        vv.value(x) * (2.0 * u * xd + (n as f64 - 2.0) * u * u)
    });
    Ok(pairwise_sum(&surface_terms) - bulk / r)
}

/// `K(r) = ∫_{B_r} f² dx`, i.e. the squared L² ball norm.
pub fn ball_square_integral(
    n: usize,
    f: &ScalarField,
    x0: &Point,
    r: f64,
    spec: &QuadratureSpec,
) -> UcResult<f64> {
    f.check_ball(x0, r, n)?;
    let region = Region::Ball { center: *x0, r };
    Ok(integrate(n, &region, spec, &|x| {
        let u = f.value(x);
        u * u
    }))
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Sanity check used by the quadrature spec invariant: integrate 1 over B_r.
pub fn ball_volume_check(n: usize, r: f64, spec: &QuadratureSpec) -> f64 {
    let one = ScalarField::constant(1.0);
    let region = Region::Ball {
        center: [0.0; 3],
        r,
    };
    integrate(n, &region, spec, &|x| one.value(x))
}

/// `‖f‖_{H¹}` on a mask: grid values and gradients, midpoint rule.
pub fn h1_norm(f: &ScalarField, mask: &RegionMask) -> f64 {
    let hn = mask.domain.h.powi(mask.domain.n as i32);
    let terms: Vec<f64> = mask
        .node_points()
        .iter()
        .map(|p| {
            let u = f.value(p);
            let g = f.gradient(p);
            hn * (u * u + g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
        })
        .collect();
    pairwise_sum(&terms).max(0.0).sqrt()
}

/// Helper: Euclidean distance from a sphere point set's center, re-exported
/// for callers assembling custom regions.
pub fn distance(a: &Point, b: &Point) -> f64 {
    dist(a, b)
}
