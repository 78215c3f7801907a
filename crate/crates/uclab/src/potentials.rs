//! Potentials and drifts with integrability bookkeeping, the level-set
//! truncation split, admissibility classes and manufactured exact solutions.

use crate::error::{UcError, UcResult};
use crate::fields::{lp_norm, Exponent, QuadratureSpec, Region, ScalarField};
use crate::geometry::{BoxDomain, Point, RegionMask};
use std::sync::Arc;

/// A scalar potential tagged with its integrability exponent `s ∈ [n/2, ∞]`
/// and the cached norm `κ_V = ‖V‖_{L^s(Ω)}`.
#[derive(Debug, Clone)]
pub struct Potential {
    pub field: ScalarField,
    pub s: Exponent,
    pub kappa: f64,
}

impl Potential {
    /// Build a potential, computing `κ_V` over the given region. Grid
    /// potentials use node (midpoint) quadrature through `Region::Mask`; that
    /// node norm is the definition of discrete class membership.
    pub fn new(
        n: usize,
        field: ScalarField,
        s: Exponent,
        region: &Region,
        spec: &QuadratureSpec,
    ) -> UcResult<Self> {
        if let Exponent::Finite(sv) = s {
            if sv < n as f64 / 2.0 {
                return Err(UcError::ExponentOutOfRange {
                    context: format!("s = {sv} below n/2 = {}", n as f64 / 2.0),
                });
            }
        }
        let kappa = lp_norm(n, &field, region, s, spec)?;
        Ok(Potential { field, s, kappa })
    }

    pub fn zero(n: usize) -> Self {
        let _ = n;
        Potential {
            field: ScalarField::constant(0.0),
            s: Exponent::Infinity,
            kappa: 0.0,
        }
    }

    /// Recompute `κ_V` on demand (the cached value must agree).
    pub fn recompute_kappa(
        &self,
        n: usize,
        region: &Region,
        spec: &QuadratureSpec,
    ) -> UcResult<f64> {
        lp_norm(n, &self.field, region, self.s, spec)
    }
}

/// A real-valued drift field tagged with `m ∈ (n, ∞]`.
#[derive(Clone)]
pub struct Drift {
    eval: Arc<dyn Fn(&Point) -> [f64; 3] + Send + Sync>,
    pub m: Exponent,
    pub kappa_w: f64,
}

impl std::fmt::Debug for Drift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Drift")
            .field("m", &self.m)
            .field("kappa_w", &self.kappa_w)
            .finish()
    }
}

impl Drift {
    pub fn new(
        n: usize,
        eval: impl Fn(&Point) -> [f64; 3] + Send + Sync + 'static,
        m: Exponent,
        region: &Region,
        spec: &QuadratureSpec,
    ) -> UcResult<Self> {
        if let Exponent::Finite(mv) = m {
            if mv <= n as f64 {
                return Err(UcError::ExponentOutOfRange {
                    context: format!("m = {mv} must exceed n = {n}"),
                });
            }
        }
        let eval = Arc::new(eval);
        let mag = {
            let eval = Arc::clone(&eval);
            ScalarField::analytic(
                move |x| {
                    let w = eval(x);
                    (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
                },
                |_| [0.0; 3],
            )
        };
        let kappa_w = lp_norm(n, &mag, region, m, spec)?;
        Ok(Drift { eval, m, kappa_w })
    }

    pub fn constant(n: usize, w: [f64; 3], region: &Region, spec: &QuadratureSpec) -> UcResult<Self> {
        Self::new(n, move |_| w, Exponent::Infinity, region, spec)
    }

    pub fn value(&self, x: &Point) -> [f64; 3] {
        (self.eval)(x)
    }
}

/// Result of the level-set truncation split `V = V¹_t + V²_t`.
#[derive(Debug, Clone)]
pub struct SplitResult {
    /// Tail above level t, tagged with exponent n/2.
    pub v1: Potential,
    /// Bounded part, tagged with exponent ∞.
    pub v2: Potential,
    pub t: f64,
    /// `‖V¹_t‖_{L^{n/2}}` (measured).
    pub v1_norm: f64,
    /// Closed-form cap `t^{−(2s/n−1)} κ_V^{2s/n}` it must satisfy.
    pub v1_bound: f64,
    /// `‖V²_t‖_∞` (measured); at most t by construction.
    pub v2_norm: f64,
}

/// Split `V = V·χ_{|V|>t} + V·χ_{|V|≤t}`; the L^{n/2} cap on the tail is
/// asserted from the measured norms, never assumed.
pub fn split(
    n: usize,
    v: &Potential,
    t: f64,
    region: &Region,
    spec: &QuadratureSpec,
) -> UcResult<SplitResult> {
    if !(t > 0.0) {
        return Err(UcError::parameter("split threshold must be positive"));
    }
    let s = match v.s {
        Exponent::Finite(s) if s > n as f64 / 2.0 => s,
        Exponent::Finite(s) => {
            return Err(UcError::ExponentOutOfRange {
                context: format!("split needs s ∈ (n/2, ∞), got s = {s}"),
            })
        }
        Exponent::Infinity => {
            return Err(UcError::ExponentOutOfRange {
                context: "split needs s ∈ (n/2, ∞), got s = ∞".into(),
            })
        }
    };
    let base = v.field.clone();
    let base2 = v.field.clone();
    let f1 = ScalarField::analytic(
        move |x| {
            let val = base.value(x);
            if val.abs() > t {
                val
            } else {
                0.0
            }
        },
        |_| [0.0; 3],
    );
    let f2 = ScalarField::analytic(
        move |x| {
            let val = base2.value(x);
            if val.abs() > t {
                0.0
            } else {
                val
            }
        },
        |_| [0.0; 3],
    );
    let half_n = Exponent::Finite(n as f64 / 2.0);
    let v1_norm = lp_norm(n, &f1, region, half_n, spec)?;
    let v2_norm = lp_norm(n, &f2, region, Exponent::Infinity, spec)?;
    let v1_bound = t.powf(-(2.0 * s / n as f64 - 1.0)) * v.kappa.powf(2.0 * s / n as f64);
    Ok(SplitResult {
        v1: Potential {
            field: f1,
            s: half_n,
            kappa: v1_norm,
        },
        v2: Potential {
            field: f2,
            s: Exponent::Infinity,
            kappa: v2_norm,
        },
        t,
        v1_norm,
        v1_bound,
        v2_norm,
    })
}

/// Admissibility-class membership record.
#[derive(Debug, Clone, Copy)]
pub struct Membership {
    /// `2σ²κ_V < 1`.
    pub class_v0: bool,
    /// `2σ²κ_V < 1` and `ϑκ_V < 1`.
    pub class_v: bool,
    /// `ϑ κ̃_V < 1` with `κ̃_V = ‖V‖_{L^{n/2}}`.
    pub class_vs: bool,
    /// `min(m, 2s) > 3n/2 − 1`.
    pub class_n: bool,
    pub two_sigma2_kappa: f64,
    pub vartheta_kappa: f64,
    pub vartheta_kappa_tilde: f64,
    /// `min(m, 2s) − (3n/2 − 1)`.
    pub n_margin: f64,
}

/// Evaluate the admissibility classes for a potential (and optional drift).
pub fn classify(
    n: usize,
    v: &Potential,
    w: Option<&Drift>,
    sigma: f64,
    vartheta: f64,
    region: &Region,
    spec: &QuadratureSpec,
) -> UcResult<Membership> {
    if !(sigma > 0.0 && vartheta > 0.0) {
        return Err(UcError::parameter("sigma and vartheta must be positive"));
    }
    let kappa_tilde = lp_norm(n, &v.field, region, Exponent::Finite(n as f64 / 2.0), spec)?;
    let two_sigma2_kappa = 2.0 * sigma * sigma * v.kappa;
    let vartheta_kappa = vartheta * v.kappa;
    let vartheta_kappa_tilde = vartheta * kappa_tilde;
    let s_val = v.s.finite().unwrap_or(f64::INFINITY);
    let m_val = w
        .map(|d| d.m.finite().unwrap_or(f64::INFINITY))
        .unwrap_or(f64::INFINITY);
    let min_ms = m_val.min(2.0 * s_val);
    let n_margin = min_ms - (1.5 * n as f64 - 1.0);
    Ok(Membership {
        class_v0: two_sigma2_kappa < 1.0,
        class_v: two_sigma2_kappa < 1.0 && vartheta_kappa < 1.0,
        class_vs: vartheta_kappa_tilde < 1.0,
        class_n: n_margin > 0.0,
        two_sigma2_kappa,
        vartheta_kappa,
        vartheta_kappa_tilde,
        n_margin,
    })
}

/// Exact-solution oracle: given analytic `u` with an analytic Laplacian and
/// no zeros on the grid, return the potential `V = Δu/u` so that
/// `(−Δ + V)u = 0` identically.
pub fn manufacture(
    n: usize,
    u: &ScalarField,
    domain: &BoxDomain,
    s_tag: Exponent,
    spec: &QuadratureSpec,
) -> UcResult<Potential> {
    let lap = match u.laplacian(&domain.origin) {
        Some(_) => (),
        None => {
            return Err(UcError::parameter(
                "manufacture needs a field with an analytic Laplacian",
            ))
        }
    };
    let _ = lap;
    for k in 0..domain.dims[2] {
        for j in 0..domain.dims[1] {
            for i in 0..domain.dims[0] {
                let p = domain.node_point([i, j, k]);
                if u.value(&p).abs() < 1e-12 {
                    return Err(UcError::ZeroCrossing {
                        context: format!(
                            "u vanishes at node ({:.4}, {:.4}, {:.4})",
                            p[0], p[1], p[2]
                        ),
                    });
                }
            }
        }
    }
    let u2 = u.clone();
    let v_field = ScalarField::analytic(
        move |x| u2.laplacian(x).unwrap() / u2.value(x),
        |_| [0.0; 3],
    );
    let region = Region::Mask(RegionMask::from_predicate(
        domain,
        crate::geometry::MaskKind::Custom,
        |p| domain.contains(p),
    ));
    Potential::new(n, v_field, s_tag, &region, spec)
}

/// Report of the Hölder product bound `‖Vu‖_{L^p} ≤ ‖V‖_{L^{n/2}} ‖u‖_{L^{p′}}`
/// with `p = 2n/(n+2)`, `p′ = 2n/(n−2)`.
pub fn holder_product_check(
    n: usize,
    v: &Potential,
    u: &ScalarField,
    region: &Region,
    spec: &QuadratureSpec,
) -> UcResult<crate::report::InequalityReport> {
    if n < 3 {
        return Err(UcError::parameter("Hölder product check needs n ≥ 3"));
    }
    let p = 2.0 * n as f64 / (n as f64 + 2.0);
    let pp = 2.0 * n as f64 / (n as f64 - 2.0);
    let vf = v.field.clone();
    let uf = u.clone();
    let prod = ScalarField::analytic(move |x| vf.value(x) * uf.value(x), |_| [0.0; 3]);
    let lhs = lp_norm(n, &prod, region, Exponent::Finite(p), spec)?;
    let v_half = lp_norm(n, &v.field, region, Exponent::Finite(n as f64 / 2.0), spec)?;
    let u_pp = lp_norm(n, u, region, Exponent::Finite(pp), spec)?;
    Ok(
        crate::report::InequalityReport::new(
            "sec1.holder_product",
            crate::report::Mode::Explicit,
            lhs,
            v_half * u_pp,
        )
        .with_constants(&[("norm_V_n_half", v_half), ("norm_u_pprime", u_pp)]),
    )
}

// ---------------------------------------------------------------------------
// Built-in analytic fields
// ---------------------------------------------------------------------------

/// `e^{a·x}`; satisfies `(−Δ + |a|²)u = 0`.
pub fn exp_field(a: [f64; 3]) -> ScalarField {
    let a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    ScalarField::analytic(
        move |x| (a[0] * x[0] + a[1] * x[1] + a[2] * x[2]).exp(),
        move |x| {
            let e = (a[0] * x[0] + a[1] * x[1] + a[2] * x[2]).exp();
            [a[0] * e, a[1] * e, a[2] * e]
        },
    )
    .with_laplacian(move |x| a2 * (a[0] * x[0] + a[1] * x[1] + a[2] * x[2]).exp())
}

/// `cosh(a·x)`; satisfies `(−Δ + |a|²)u = 0`.
pub fn cosh_field(a: [f64; 3]) -> ScalarField {
    let a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    let dot = move |x: &Point| a[0] * x[0] + a[1] * x[1] + a[2] * x[2];
    ScalarField::analytic(
        move |x| dot(x).cosh(),
        move |x| {
            let s = dot(x).sinh();
            [a[0] * s, a[1] * s, a[2] * s]
        },
    )
    .with_laplacian(move |x| a2 * dot(x).cosh())
}

/// Two-level field: `hi` on a sub-box, `lo` elsewhere.
pub fn two_level_field(sub: crate::geometry::Aab, n: usize, hi: f64, lo: f64) -> ScalarField {
    ScalarField::analytic(
        move |x| {
            if sub.contains_closed(x, n) {
                hi
            } else {
                lo
            }
        },
        |_| [0.0; 3],
    )
}

/// Radial power `|x − x₀|^{−a}` truncated at `floor_r` (grid scale).
pub fn radial_power_field(x0: Point, a: f64, floor_r: f64) -> ScalarField {
    ScalarField::analytic(
        move |x| {
            let d = crate::geometry::dist(x, &x0).max(floor_r);
            d.powf(-a)
        },
        |_| [0.0; 3],
    )
}

/// Homogeneous harmonic polynomial of degree k ∈ {0,1,2,3} (n = 3):
/// `1`, `x₁`, `x₁² − x₂²`, `x₁³ − 3x₁x₂²`.
pub fn harmonic_polynomial(k: usize) -> ScalarField {
    match k {
        0 => ScalarField::constant(1.0),
        1 => ScalarField::analytic(|x| x[0], |_| [1.0, 0.0, 0.0]).with_laplacian(|_| 0.0),
        2 => ScalarField::analytic(
            |x| x[0] * x[0] - x[1] * x[1],
            |x| [2.0 * x[0], -2.0 * x[1], 0.0],
        )
        .with_laplacian(|_| 0.0),
        3 => ScalarField::analytic(
            |x| x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1],
            |x| {
                [
                    3.0 * x[0] * x[0] - 3.0 * x[1] * x[1],
                    -6.0 * x[0] * x[1],
                    0.0,
                ]
            },
        )
        .with_laplacian(|_| 0.0),
        _ => panic!("harmonic polynomial degree {k} not shipped"),
    }
}

/// `sinh(x₁)`; satisfies `(−Δ + 1)u = 0` and vanishes to first order on
/// `{x₁ = 0}`.
pub fn sinh_field() -> ScalarField {
    ScalarField::analytic(|x| x[0].sinh(), |x| [x[0].cosh(), 0.0, 0.0])
        .with_laplacian(|x| x[0].sinh())
}

/// `sinh(x₁)·sinh(x₂)`; satisfies `(−Δ + 2)u = 0`, order-2 zero at 0.
pub fn sinh_sinh_field() -> ScalarField {
    ScalarField::analytic(
        |x| x[0].sinh() * x[1].sinh(),
        |x| [x[0].cosh() * x[1].sinh(), x[0].sinh() * x[1].cosh(), 0.0],
    )
    .with_laplacian(|x| 2.0 * x[0].sinh() * x[1].sinh())
}
