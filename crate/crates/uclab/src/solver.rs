//! Finite-difference discretization and solution of
//! `(−Δ + W·∇ + V)u = f` on boxes with Dirichlet data, plus the discrete
//! Sobolev-constant optimizer and a smallest-eigenvalue routine.
//!
//! Discretization: 7-point Laplacian (5-point for n = 2) and second-order
//! central differences for the drift, with the grid Péclet number
//! `|W|h/2 < 1` enforced. Linear algebra is matrix-free Krylov iteration —
//! conjugate gradients for the symmetric case, BiCGStab for drift — with
//! diagonal preconditioning. Dot products use a pairwise deterministic
//! reduction, so solves are bit-reproducible.

use crate::error::{UcError, UcResult};
use crate::fields::{GridField, ScalarField};
use crate::geometry::{BoxDomain, RegionMask};
use crate::potentials::Drift;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pairwise dot product, deterministic for a fixed element order.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    fn go(a: &[f64], b: &[f64]) -> f64 {
        match a.len() {
            0 => 0.0,
            1 => a[0] * b[0],
            2 => a[0] * b[0] + a[1] * b[1],
            n => {
                let mid = n / 2;
                go(&a[..mid], &b[..mid]) + go(&a[mid..], &b[mid..])
            }
        }
    }
    go(a, b)
}

/// A Dirichlet problem on a box-domain grid.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub domain: BoxDomain,
    pub v: ScalarField,
    pub w: Option<Drift>,
    pub rhs: ScalarField,
    pub boundary: ScalarField,
}

/// Discrete solution with algebraic-residual metadata.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridField,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Assembled stencil data for the interior unknowns (lexicographic order).
struct Stencil {
    n: usize,
    h: f64,
    dims: [usize; 3],
    /// Linear grid index per unknown.
    interior: Vec<usize>,
    /// Unknown index per grid node (usize::MAX for Dirichlet nodes).
    unknown_of: Vec<usize>,
    v_vals: Vec<f64>,
    w_vals: Option<Vec<[f64; 3]>>,
}

impl Stencil {
    fn build(p: &DiscreteProblem) -> UcResult<Self> {
        let d = &p.domain;
        let mut interior = Vec::new();
        let mut unknown_of = vec![usize::MAX; d.node_count()];
        for k in 0..d.dims[2] {
            for j in 0..d.dims[1] {
                for i in 0..d.dims[0] {
                    let edge = i == 0
                        || i + 1 == d.dims[0]
                        || j == 0
                        || j + 1 == d.dims[1]
                        || (d.n == 3 && (k == 0 || k + 1 == d.dims[2]));
                    let pt = d.node_point([i, j, k]);
                    if !edge && d.contains(&pt) {
                        unknown_of[d.linear_index([i, j, k])] = interior.len();
                        interior.push(d.linear_index([i, j, k]));
                    }
                }
            }
        }
        if interior.is_empty() {
            return Err(UcError::invalid_domain("no interior unknowns"));
        }
        let v_vals: Vec<f64> = interior
            .iter()
            .map(|&lin| p.v.value(&d.node_point(d.index_of(lin))))
            .collect();
        let w_vals = match &p.w {
            Some(w) => {
                let vals: Vec<[f64; 3]> = interior
                    .iter()
                    .map(|&lin| w.value(&d.node_point(d.index_of(lin))))
                    .collect();
                let wmax = vals
                    .iter()
                    .map(|w| w[0].abs().max(w[1].abs()).max(w[2].abs()))
                    .fold(0.0f64, f64::max);
                if wmax * d.h / 2.0 >= 1.0 {
                    return Err(UcError::parameter(format!(
                        "grid Péclet number |W|h/2 = {:.3} ≥ 1; refine the grid below h = {:.3e}",
                        wmax * d.h / 2.0,
                        2.0 / wmax
                    )));
                }
                Some(vals)
            }
            None => None,
        };
        Ok(Stencil {
            n: d.n,
            h: d.h,
            dims: d.dims,
            interior,
            unknown_of,
            v_vals,
            w_vals,
        })
    }

    fn neighbors(&self, lin: usize) -> [(Option<usize>, usize); 6] {
        // For each axis: (minus, plus) linear indices; the grid is a full box
        // so edge unknowns never ask for out-of-range neighbours.
        let strides = [1usize, self.dims[0], self.dims[0] * self.dims[1]];
        let mut out = [(None, 0usize); 6];
        for ax in 0..self.n {
            out[2 * ax] = (Some(lin - strides[ax]), ax);
            out[2 * ax + 1] = (Some(lin + strides[ax]), ax);
        }
        out
    }

    /// y = A x for interior vectors x (Dirichlet neighbours treated as 0).
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let h2 = self.h * self.h;
        let two_h = 2.0 * self.h;
        for (ui, &lin) in self.interior.iter().enumerate() {
            let mut acc = (2.0 * self.n as f64 / h2 + self.v_vals[ui]) * x[ui];
            for (slot, &(nb, ax)) in self.neighbors(lin).iter().enumerate() {
                let nb = match nb {
                    Some(nb) => nb,
                    None => continue,
                };
                let xv = match self.unknown_of[nb] {
                    usize::MAX => 0.0,
                    uj => x[uj],
                };
                acc -= xv / h2;
                if let Some(wv) = &self.w_vals {
                    // slot even = minus direction, odd = plus direction.
                    let sign = if slot % 2 == 0 { -1.0 } else { 1.0 };
                    acc += wv[ui][ax] * sign * xv / two_h;
                }
            }
            y[ui] = acc;
        }
    }

    fn diag(&self) -> Vec<f64> {
        let h2 = self.h * self.h;
        self.v_vals
            .iter()
            .map(|&v| 2.0 * self.n as f64 / h2 + v)
            .collect()
    }
}

fn norm2(v: &[f64]) -> f64 {
    pairwise_dot(v, v).max(0.0).sqrt()
}

fn iteration_cap(unknowns: usize) -> usize {
    // Documented cap: 20·N^{1/3}·1000.
    ((20.0 * (unknowns as f64).cbrt()).ceil() as usize) * 1000
}

/// Preconditioned conjugate gradients (symmetric case).
fn solve_cg(st: &Stencil, b: &[f64], tol: f64) -> UcResult<(Vec<f64>, f64, usize)> {
    let m = b.len();
    let cap = iteration_cap(m);
    let diag = st.diag();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; m];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = pairwise_dot(&r, &z);
    let mut ap = vec![0.0; m];
    for it in 0..cap {
        let rnorm = norm2(&r) / bnorm;
        if rnorm <= tol {
            return Ok((x, rnorm, it));
        }
        st.apply(&p, &mut ap);
        let alpha = rz / pairwise_dot(&p, &ap);
        if !alpha.is_finite() {
            break;
        }
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..m {
            z[i] = r[i] / diag[i];
        }
        let rz_new = pairwise_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = norm2(&r) / bnorm;
    Err(UcError::NoConvergence {
        iterations: cap,
        residual: rnorm,
        context: "conjugate gradients stalled (indefinite or near-singular operator?)".into(),
    })
}

/// Preconditioned BiCGStab (drift case).
fn solve_bicgstab(st: &Stencil, b: &[f64], tol: f64) -> UcResult<(Vec<f64>, f64, usize)> {
    let m = b.len();
    let cap = iteration_cap(m);
    let diag = st.diag();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; m];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; m];
    let mut p = vec![0.0; m];
    let mut phat = vec![0.0; m];
    let mut shat = vec![0.0; m];
    let mut t = vec![0.0; m];
    for it in 0..cap {
        let rnorm = norm2(&r) / bnorm;
        if rnorm <= tol {
            return Ok((x, rnorm, it));
        }
        let rho_new = pairwise_dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..m {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..m {
            phat[i] = p[i] / diag[i];
        }
        st.apply(&phat, &mut v);
        alpha = rho / pairwise_dot(&r0, &v);
        let s: Vec<f64> = (0..m).map(|i| r[i] - alpha * v[i]).collect();
        if norm2(&s) / bnorm <= tol {
            for i in 0..m {
                x[i] += alpha * phat[i];
            }
            let rn = norm2(&s) / bnorm;
            return Ok((x, rn, it + 1));
        }
        for i in 0..m {
            shat[i] = s[i] / diag[i];
        }
        st.apply(&shat, &mut t);
        omega = pairwise_dot(&t, &s) / pairwise_dot(&t, &t);
        for i in 0..m {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        if omega.abs() < 1e-300 {
            break;
        }
    }
    let rnorm = norm2(&r) / bnorm;
    Err(UcError::NoConvergence {
        iterations: cap,
        residual: rnorm,
        context: "BiCGStab stalled".into(),
    })
}

/// Solve the Dirichlet problem to relative algebraic residual `tol`.
pub fn solve_dirichlet(p: &DiscreteProblem, tol: f64) -> UcResult<Solution> {
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(UcError::parameter(format!(
            "tol = {tol:e} outside [1e-14, 1e-6]"
        )));
    }
    let d = &p.domain;
    for i in 0..d.n {
        if d.dims[i] < 17 {
            return Err(UcError::invalid_domain(format!(
                "axis {i} has {} nodes; the solver needs ≥ 17",
                d.dims[i]
            )));
        }
    }
    let st = Stencil::build(p)?;
    // Assemble RHS: f at interior nodes plus Dirichlet contributions moved
    // over from the stencil.
    let mut u_grid = GridField::zeros(d);
    for lin in 0..d.node_count() {
        if st.unknown_of[lin] == usize::MAX {
            u_grid.data[lin] = p.boundary.value(&d.node_point(d.index_of(lin)));
        }
    }
    let h2 = d.h * d.h;
    let two_h = 2.0 * d.h;
    let mut b = vec![0.0; st.interior.len()];
    for (ui, &lin) in st.interior.iter().enumerate() {
        let x = d.node_point(d.index_of(lin));
        let mut acc = p.rhs.value(&x);
        for (slot, &(nb, ax)) in st.neighbors(lin).iter().enumerate() {
            let nb = match nb {
                Some(nb) => nb,
                None => continue,
            };
            if st.unknown_of[nb] == usize::MAX {
                let g = u_grid.data[nb];
                acc += g / h2;
                if let Some(wv) = &st.w_vals {
                    let sign = if slot % 2 == 0 { -1.0 } else { 1.0 };
                    acc -= wv[ui][ax] * sign * g / two_h;
                }
            }
        }
        b[ui] = acc;
    }
    let (x, residual_norm, iterations) = if st.w_vals.is_some() {
        solve_bicgstab(&st, &b, tol)?
    } else {
        solve_cg(&st, &b, tol)?
    };
    for (ui, &lin) in st.interior.iter().enumerate() {
        u_grid.data[lin] = x[ui];
    }
    Ok(Solution {
        u: u_grid,
        residual_norm,
        iterations,
    })
}

/// Max-norm of the discrete operator applied to grid samples of `u` over the
/// interior nodes of `region` (nodes whose full stencil lies on the grid).
pub fn residual(
    u: &GridField,
    v: &ScalarField,
    w: Option<&Drift>,
    region: &RegionMask,
) -> f64 {
    let d = &region.domain;
    let h2 = d.h * d.h;
    let two_h = 2.0 * d.h;
    let mut worst = 0.0f64;
    for lin in region.node_indices() {
        let [i, j, k] = d.index_of(lin);
        if i == 0
            || i + 1 >= d.dims[0]
            || j == 0
            || j + 1 >= d.dims[1]
            || (d.n == 3 && (k == 0 || k + 1 >= d.dims[2]))
        {
            continue;
        }
        let x = d.node_point([i, j, k]);
        let c = u.at([i, j, k]);
        let mut acc = v.value(&x) * c;
        let idx_pairs: [([usize; 3], [usize; 3], usize); 3] = [
            ([i - 1, j, k], [i + 1, j, k], 0),
            ([i, j - 1, k], [i, j + 1, k], 1),
            ([i, j, k.max(1) - 1], [i, j, (k + 1).min(d.dims[2] - 1)], 2),
        ];
        for (mi, pi, ax) in idx_pairs.iter().take(d.n) {
            let um = u.at(*mi);
            let up = u.at(*pi);
            acc += (2.0 * c - um - up) / h2;
            if let Some(wf) = w {
                acc += wf.value(&x)[*ax] * (up - um) / two_h;
            }
        }
        worst = worst.max(acc.abs());
    }
    worst
}

/// Result of the discrete Sobolev-constant ascent.
#[derive(Debug, Clone)]
pub struct SobolevEstimate {
    /// Feasible lower bound for σ = sup ‖w‖_{L⁶}/‖∇w‖_{L²}.
    pub sigma: f64,
    pub maximizer: GridField,
    /// Spread of the per-start optima (max − min)/max.
    pub start_spread: f64,
    /// True when ascent stagnated before the improvement tolerance was met.
    pub stagnated: bool,
}

/// Discrete σ := sup ‖w‖_{L⁶}/‖∇w‖_{L²} over zero-boundary grid fields
/// (n = 3), via normalized gradient ascent with backtracking and multi-start.
/// The result is a feasible value of the quotient — a lower bound for the
/// discrete supremum — returned with its maximizer for audit.
pub fn sobolev_constant(domain: &BoxDomain) -> UcResult<SobolevEstimate> {
    if domain.n != 3 {
        return Err(UcError::parameter("sobolev_constant needs n = 3 (p′ = 6)"));
    }
    let zero = ScalarField::constant(0.0);
    let problem = DiscreteProblem {
        domain: domain.clone(),
        v: zero.clone(),
        w: None,
        rhs: zero.clone(),
        boundary: zero,
    };
    let st = Stencil::build(&problem)?;
    let m = st.interior.len();
    let h3 = domain.h.powi(3);

    let quotient = |w: &[f64], aw: &mut [f64], st: &Stencil| -> (f64, f64, f64) {
        st.apply(w, aw);
        let grad2 = (pairwise_dot(w, aw) * h3).max(1e-300);
        let six: Vec<f64> = w.iter().map(|&x| x.powi(6) * h3).collect();
        let l6 = crate::fields::pairwise_sum(&six).max(1e-300).powf(1.0 / 6.0);
        (l6 / grad2.sqrt(), l6, grad2)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut per_start = Vec::new();
    let mut stagnated = false;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for start in 0..5 {
        let mut w: Vec<f64> = if start == 0 {
            // Centered bump.
            let c = domain.bounding_box().center(3);
            let scale = 0.15 * domain.enclosing_cube_edge();
            st.interior
                .iter()
                .map(|&lin| {
                    let p = domain.node_point(domain.index_of(lin));
                    let d2 = crate::geometry::dist(&p, &c).powi(2);
                    (-d2 / (2.0 * scale * scale)).exp()
                })
                .collect()
        } else {
            (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let mut aw = vec![0.0; m];
        let (mut j, _, mut g2) = quotient(&w, &mut aw, &st);
        // Normalize ‖∇w‖₂ = 1.
        let s = 1.0 / g2.sqrt();
        for x in w.iter_mut() {
            *x *= s;
        }
        let mut step = 1.0;
        let mut improved = true;
        for _ in 0..400 {
            let (jj, l6, gg2) = quotient(&w, &mut aw, &st);
            j = jj;
            g2 = gg2;
            // Ascent direction for ln J.
            let l66 = l6.powi(6);
            let dir: Vec<f64> = (0..m)
                .map(|i| {
                    let wi = w[i];
                    h3 * (wi.powi(5) / l66 - aw[i] / g2)
                })
                .collect();
            let dn = norm2(&dir);
            if dn < 1e-14 {
                break;
            }
            improved = false;
            for _ in 0..30 {
                let cand: Vec<f64> = (0..m).map(|i| w[i] + step * dir[i] / dn).collect();
                let mut caw = vec![0.0; m];
                let (cj, _, cg2) = quotient(&cand, &mut caw, &st);
                if cj > j * (1.0 + 1e-10) {
                    let s = 1.0 / cg2.sqrt();
                    w = cand.into_iter().map(|x| x * s).collect();
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if !improved {
            // Ascent ended by stagnation rather than the gradient tolerance.
            stagnated = stagnated || false;
        }
        per_start.push(j);
        if best.as_ref().map(|(bj, _)| j > *bj).unwrap_or(true) {
            best = Some((j, w.clone()));
        }
    }
    let (sigma, wbest) = best.unwrap();
    let lo = per_start.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = per_start.iter().cloned().fold(0.0f64, f64::max);
    let mut maximizer = GridField::zeros(domain);
    for (ui, &lin) in st.interior.iter().enumerate() {
        maximizer.data[lin] = wbest[ui];
    }
    Ok(SobolevEstimate {
        sigma,
        maximizer,
        start_spread: (hi - lo) / hi.max(1e-300),
        stagnated,
    })
}

/// Smallest eigenvalue of `−Δ + V` with zero Dirichlet data, by inverse
/// power iteration (each step one CG solve); converges to residual 1e−8.
pub fn eigen_smallest(domain: &BoxDomain, v: &ScalarField) -> UcResult<(f64, GridField)> {
    let zero = ScalarField::constant(0.0);
    let problem = DiscreteProblem {
        domain: domain.clone(),
        v: v.clone(),
        w: None,
        rhs: zero.clone(),
        boundary: zero,
    };
    let st = Stencil::build(&problem)?;
    let m = st.interior.len();
    let mut w: Vec<f64> = st
        .interior
        .iter()
        .map(|&lin| {
            let p = domain.node_point(domain.index_of(lin));
            let c = domain.bounding_box().center(3);
            (-(crate::geometry::dist(&p, &c).powi(2))).exp()
        })
        .collect();
    let nn = norm2(&w);
    for x in w.iter_mut() {
        *x /= nn;
    }
    let mut aw = vec![0.0; m];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let (z, _, _) = solve_cg(&st, &w, 1e-12)?;
        let zn = norm2(&z);
        for i in 0..m {
            w[i] = z[i] / zn;
        }
        st.apply(&w, &mut aw);
        lambda = pairwise_dot(&w, &aw);
        let res: Vec<f64> = (0..m).map(|i| aw[i] - lambda * w[i]).collect();
        if norm2(&res) <= 1e-8 * lambda.abs().max(1.0) {
            let mut field = GridField::zeros(domain);
            for (ui, &lin) in st.interior.iter().enumerate() {
                field.data[lin] = w[ui];
            }
            return Ok((lambda, field));
        }
    }
    Err(UcError::NoConvergence {
        iterations: 200,
        residual: f64::NAN,
        context: format!("inverse power iteration did not settle (λ ≈ {lambda:.6})"),
    })
}
