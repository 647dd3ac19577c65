//! A 2×2 instance with three inputs for which Φ(X) = Σ wᵢ log(Aᵢ♯X⁻¹) = 0
//! has two distinct solutions, and a sampled Poincaré–Miranda certificate
//! for the second one.
//!
//! With S = diag(1, −1), T = [[0, 1], [1, 0]] and c = 19/10:
//! X₀ = e^{3S}, Z₁ = 3S, Z₂ = cT, Z₃ = −Z₁ − Z₂, Bᵢ = e^{Zᵢ},
//! Aᵢ = Bᵢ X₀ Bᵢ, equal weights. Every matrix involved has determinant 1,
//! and on det-1 matrices X(u, v) = e^{uS + vT} the equation reduces to the
//! two scalar equations F₁ = F₂ = 0.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::meansm::{MeanProblem, SolverOptions};
use crate::pdcore::{thompson, SpdMatrix, SymMatrix, WeightVector};
use crate::repfn::RepFunction;
use crate::speqsolve::residual;

/// Coefficient of T in Z₂.
pub const C: f64 = 19.0 / 10.0;

/// Rectangle around the second solution, in (u, v) coordinates.
pub const REFERENCE_RECT: Rect2 = Rect2 { u_lo: 1.61247432825, u_hi: 1.62347432825, v_lo: 0.5194188906, v_hi: 0.5254188906 };

/// Published edge bounds on [`REFERENCE_RECT`]: min F₁ on the left edge,
/// max F₁ on the right edge, min F₂ on the bottom edge, max F₂ on the top.
pub const REFERENCE_EDGE_BOUNDS: [f64; 4] = [1.0174896754e-4, -9.2173535435e-5, 9.9667442521e-6, -4.7891817896e-6];

pub const DEFAULT_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect2 {
    pub u_lo: f64,
    pub u_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Rect2 {
    pub fn new(u_lo: f64, u_hi: f64, v_lo: f64, v_hi: f64) -> Result<Self> {
        if !(u_lo < u_hi && v_lo < v_hi) {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle [{u_lo}, {u_hi}] x [{v_lo}, {v_hi}]"
            )));
        }
        Ok(Rect2 { u_lo, u_hi, v_lo, v_hi })
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.u_lo + self.u_hi), 0.5 * (self.v_lo + self.v_hi))
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        (self.u_lo..=self.u_hi).contains(&u) && (self.v_lo..=self.v_hi).contains(&v)
    }

    pub fn translated(&self, du: f64, dv: f64) -> Rect2 {
        Rect2 { u_lo: self.u_lo + du, u_hi: self.u_hi + du, v_lo: self.v_lo + dv, v_hi: self.v_hi + dv }
    }

    /// The four quarters, in the order (lo, lo), (hi, lo), (lo, hi), (hi, hi).
    fn quarters(&self) -> [Rect2; 4] {
        let (um, vm) = self.center();
        [
            Rect2 { u_hi: um, v_hi: vm, ..*self },
            Rect2 { u_lo: um, v_hi: vm, ..*self },
            Rect2 { u_hi: um, v_lo: vm, ..*self },
            Rect2 { u_lo: um, v_lo: vm, ..*self },
        ]
    }
}

/// Sampled edge signs of F on a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct MirandaReport {
    pub certified: bool,
    /// min F₁ on u = u_lo (required ≥ margin).
    pub left_min: f64,
    /// max F₁ on u = u_hi (required ≤ −margin).
    pub right_max: f64,
    /// min F₂ on v = v_lo (required ≥ margin).
    pub bottom_min: f64,
    /// max F₂ on v = v_hi (required ≤ −margin).
    pub top_max: f64,
    pub samples_per_edge: usize,
    pub margin: f64,
}

/// The instance and its known solution X₀.
#[derive(Clone, Debug)]
pub struct Instance {
    pub problem: MeanProblem,
    pub x0: SpdMatrix,
    pub b: [SpdMatrix; 3],
}

pub fn s_mat() -> Mat {
    Mat::from_diag(&[1.0, -1.0])
}

pub fn t_mat() -> Mat {
    Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

/// sinh(r)/r, accurate near 0.
fn sinhc(r: f64) -> f64 {
    if r < 1e-4 {
        1.0 + r * r / 6.0
    } else {
        r.sinh() / r
    }
}

fn uv_entries(u: f64, v: f64) -> [f64; 3] {
    let r = u.hypot(v);
    let (ch, sc) = (r.cosh(), sinhc(r));
    [ch + sc * u, sc * v, ch - sc * u]
}

fn sym2(e: [f64; 3]) -> Mat {
    Mat::from_rows(&[&[e[0], e[1]], &[e[1], e[2]]])
}

/// X(u, v) = e^{uS + vT} = cosh(r) I + sinh(r)/r (uS + vT), r = √(u² + v²).
pub fn x_of_uv(u: f64, v: f64) -> SpdMatrix {
    SpdMatrix::from_mat(sym2(uv_entries(u, v))).expect("exponential of a symmetric matrix")
}

/// Builds the instance from closed-form exponentials.
pub fn build_instance() -> Instance {
    let x0 = x_of_uv(3.0, 0.0);
    let b = [x_of_uv(3.0, 0.0), x_of_uv(0.0, C), x_of_uv(-3.0, -C)];
    let a: Vec<SpdMatrix> = b
        .iter()
        .map(|bi| {
            let m = bi.as_mat().matmul(x0.as_mat()).matmul(bi.as_mat());
            SpdMatrix::from_mat(m).expect("congruence of SPD")
        })
        .collect();
    let problem = MeanProblem::new(WeightVector::uniform(3), a).expect("consistent instance");
    Instance { problem, x0, b }
}

fn instance() -> &'static Instance {
    static INSTANCE: OnceLock<Instance> = OnceLock::new();
    INSTANCE.get_or_init(build_instance)
}

/// θ(t) = arcosh(t)/√(t² − 1) written in s = t − 1, with θ(1) = 1.
fn theta(s: f64) -> f64 {
    if s < 1e-8 {
        1.0 - s / 3.0 + 2.0 * s * s / 15.0
    } else {
        let q = (s * (2.0 + s)).sqrt();
        (s + q).ln_1p() / q
    }
}

/// θ and M = (G − G⁻¹)/2 entries ((a − d)/2, b) for a det-1 SPD G given by
/// its entries (a, b, d).
fn log_parts(a: f64, b: f64, d: f64) -> (f64, f64, f64) {
    let s = 0.5 * (a + d) - 1.0;
    (theta(s), 0.5 * (a - d), b)
}

/// log G = θ M for a 2×2 SPD G with det G = 1, where t = ½ tr G,
/// θ = arcosh(t)/√(t² − 1) and M = (G − G⁻¹)/2.
pub fn log2x2_det1(g: &SpdMatrix) -> Result<SymMatrix> {
    if g.n() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: g.n() });
    }
    let det = g.get(0, 0) * g.get(1, 1) - g.get(0, 1) * g.get(1, 0);
    if (det - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("det G = {det} is not 1")));
    }
    let (a, b, d) = (g.get(0, 0), g.get(0, 1), g.get(1, 1));
    let (th, p, q) = log_parts(a, b, d);
    Ok(SymMatrix::new(sym2([th * p, th * q, -th * p])))
}

/// Gᵢ(u, v) = (Aᵢ + X⁻¹)/√det(Aᵢ + X⁻¹) as entries (a, b, d).
///
/// Both summands have determinant 1, so det(A + Y) = 2 + tr(adj(A) Y).
fn g_entries(ai: &SpdMatrix, xi: [f64; 3]) -> [f64; 3] {
    let (a, b, d) = (ai.get(0, 0), ai.get(0, 1), ai.get(1, 1));
    let det = 2.0 + d * xi[0] + a * xi[2] - 2.0 * b * xi[1];
    let s = det.sqrt();
    [(a + xi[0]) / s, (b + xi[1]) / s, (d + xi[2]) / s]
}

/// Gᵢ(u, v) for the built-in instance.
pub fn g_of_uv(i: usize, u: f64, v: f64) -> SpdMatrix {
    let xi = uv_entries(-u, -v);
    SpdMatrix::from_mat(sym2(g_entries(&instance().problem.matrices()[i], xi))).expect("SPD sum")
}

/// (F₁, F₂) with Φ(X(u, v)) = F₁ S + F₂ T.
pub fn f_uv(u: f64, v: f64) -> (f64, f64) {
    let inst = instance();
    let xi = uv_entries(-u, -v);
    let (mut f1, mut f2) = (0.0, 0.0);
    for a in inst.problem.matrices() {
        let [ga, gb, gd] = g_entries(a, xi);
        let (th, p, q) = log_parts(ga, gb, gd);
        f1 += th * p;
        f2 += th * q;
    }
    (f1 / 3.0, f2 / 3.0)
}

fn edge_points(lo: f64, hi: f64, k: usize) -> impl IndexedParallelIterator<Item = f64> {
    (0..k).into_par_iter().map(move |j| {
        if j + 1 == k {
            hi
        } else {
            lo + (hi - lo) * (j as f64) / ((k - 1) as f64)
        }
    })
}

/// Sampled Poincaré–Miranda check of an arbitrary map F on `rect`: F₁ ≥
/// margin on the left edge, ≤ −margin on the right, F₂ ≥ margin on the
/// bottom and ≤ −margin on the top, at `samples` equally spaced points per
/// edge including the corners.
pub fn miranda_certify_with<F>(f: F, rect: &Rect2, samples: usize, margin: f64) -> Result<MirandaReport>
where
    F: Fn(f64, f64) -> (f64, f64) + Sync,
{
    if samples < 2 || !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("samples = {samples}, margin = {margin}")));
    }
    let r = *rect;
    let left_min = edge_points(r.v_lo, r.v_hi, samples).map(|v| f(r.u_lo, v).0).reduce(|| f64::INFINITY, f64::min);
    let right_max = edge_points(r.v_lo, r.v_hi, samples).map(|v| f(r.u_hi, v).0).reduce(|| f64::NEG_INFINITY, f64::max);
    let bottom_min = edge_points(r.u_lo, r.u_hi, samples).map(|u| f(u, r.v_lo).1).reduce(|| f64::INFINITY, f64::min);
    let top_max = edge_points(r.u_lo, r.u_hi, samples).map(|u| f(u, r.v_hi).1).reduce(|| f64::NEG_INFINITY, f64::max);
    let certified = left_min >= margin && right_max <= -margin && bottom_min >= margin && top_max <= -margin;
    Ok(MirandaReport { certified, left_min, right_max, bottom_min, top_max, samples_per_edge: samples, margin })
}

/// [`miranda_certify_with`] for the built-in (F₁, F₂).
pub fn miranda_certify(rect: &Rect2, samples: usize, margin: f64) -> Result<MirandaReport> {
    miranda_certify_with(f_uv, rect, samples, margin)
}

/// The second solution X* = X(u*, v*).
#[derive(Clone, Debug)]
pub struct SecondSolution {
    pub u: f64,
    pub v: f64,
    pub x: SpdMatrix,
    pub f: (f64, f64),
    /// ‖Φ(X*)‖_F by the generic residual.
    pub residual: f64,
    /// d_T(X*, X₀).
    pub distance_to_x0: f64,
    pub newton_iterations: usize,
    pub subdivisions: usize,
}

const ROOT_TOL: f64 = 1e-12;

/// Damped Newton on (F₁, F₂) with a central-difference Jacobian, confined to
/// `rect`. Returns the root and the iteration count, or `None` if a step
/// cannot stay inside the rectangle or the iteration stalls.
fn newton_uv(rect: &Rect2, start: (f64, f64), opts: &SolverOptions) -> Option<(f64, f64, usize)> {
    let (mut u, mut v) = start;
    let (mut f1, mut f2) = f_uv(u, v);
    let norm = |a: f64, b: f64| a.hypot(b);
    let h = 1e-7;
    for it in 0..opts.max_iter {
        if f1.abs() <= ROOT_TOL && f2.abs() <= ROOT_TOL {
            return Some((u, v, it));
        }
        let (a1, a2) = f_uv(u + h, v);
        let (b1, b2) = f_uv(u - h, v);
        let (c1, c2) = f_uv(u, v + h);
        let (d1, d2) = f_uv(u, v - h);
        let (j11, j21) = ((a1 - b1) / (2.0 * h), (a2 - b2) / (2.0 * h));
        let (j12, j22) = ((c1 - d1) / (2.0 * h), (c2 - d2) / (2.0 * h));
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let du = -(j22 * f1 - j12 * f2) / det;
        let dv = -(-j21 * f1 + j11 * f2) / det;
        let r0 = norm(f1, f2);
        let mut lambda = 1.0;
        loop {
            let (nu, nv) = (u + lambda * du, v + lambda * dv);
            if rect.contains(nu, nv) {
                let (n1, n2) = f_uv(nu, nv);
                if norm(n1, n2) < r0 || (n1.abs() <= ROOT_TOL && n2.abs() <= ROOT_TOL) {
                    (u, v, f1, f2) = (nu, nv, n1, n2);
                    break;
                }
            } else if lambda == 1.0 {
                return None;
            }
            lambda *= 0.5;
            if lambda < opts.min_damping {
                return (f1.abs() <= ROOT_TOL && f2.abs() <= ROOT_TOL).then_some((u, v, it));
            }
        }
    }
    None
}

/// Locates the zero of (F₁, F₂) inside a certified rectangle.
///
/// Newton starts from the centre. If it leaves the rectangle or stalls, the
/// rectangle is split into quarters, the first quarter that is still
/// certified (64 samples per edge, zero margin) is kept, and Newton restarts
/// from its centre.
pub fn find_second_solution(rect: &Rect2, opts: &SolverOptions) -> Result<SecondSolution> {
    let inst = instance();
    let mut box_ = *rect;
    let mut subdivisions = 0;
    let (u, v, iters) = loop {
        if let Some(root) = newton_uv(rect, box_.center(), opts) {
            break root;
        }
        if subdivisions >= 40 {
            return Err(Error::NonConvergence("no root found after 40 subdivisions".into()));
        }
        let next = box_.quarters().into_iter().find(|q| {
            miranda_certify(q, 64, 0.0).is_ok_and(|r| r.certified)
        });
        match next {
            Some(q) => box_ = q,
            None => return Err(Error::NonConvergence("no certified sub-rectangle".into())),
        }
        subdivisions += 1;
    };
    let x = x_of_uv(u, v);
    let f = f_uv(u, v);
    let res = residual(&inst.problem, &x, &RepFunction::Log)?.1;
    let dist = thompson(&x, &inst.x0)?;
    if res > 1e-10 {
        return Err(Error::InternalConsistency(format!("residual at the second solution is {res:e}")));
    }
    if dist <= 0.1 {
        return Err(Error::InternalConsistency(format!("second solution within {dist} of X0")));
    }
    Ok(SecondSolution { u, v, x, f, residual: res, distance_to_x0: dist, newton_iterations: iters, subdivisions })
}

/// The construction evaluated in 256-bit binary floating point, starting
/// from the exact constants 3 and 19/10, so that X₀ is a solution to far
/// below double rounding. In f64 the stored Aᵢ already carry determinant
/// errors of a few 10⁻¹², which bounds ‖Φ(X₀)‖ of the stored instance at
/// about 10⁻¹².
pub mod exact {
    use astro_float::{BigFloat, Consts, RoundingMode};

    const P: usize = 256;
    const RM: RoundingMode = RoundingMode::ToEven;

    struct Ctx {
        cc: Consts,
    }

    type Sym2 = [BigFloat; 3];

    impl Ctx {
        fn new() -> Ctx {
            Ctx { cc: Consts::new().expect("constant cache") }
        }

        fn num(&self, x: f64) -> BigFloat {
            BigFloat::from_f64(x, P)
        }

        /// e^{uS + vT}.
        fn x_of_uv(&mut self, u: &BigFloat, v: &BigFloat) -> Sym2 {
            let r = u.mul(u, P, RM).add(&v.mul(v, P, RM), P, RM).sqrt(P, RM);
            let ch = r.cosh(P, RM, &mut self.cc);
            let sc = if r.is_zero() { self.num(1.0) } else { r.sinh(P, RM, &mut self.cc).div(&r, P, RM) };
            let su = sc.mul(u, P, RM);
            [ch.add(&su, P, RM), sc.mul(v, P, RM), ch.sub(&su, P, RM)]
        }

        /// B X B for symmetric 2×2 B, X.
        fn sandwich(&self, b: &Sym2, x: &Sym2) -> Sym2 {
            let m = |p: &BigFloat, q: &BigFloat| p.mul(q, P, RM);
            let a = |p: BigFloat, q: BigFloat| p.add(&q, P, RM);
            let bx = [
                [a(m(&b[0], &x[0]), m(&b[1], &x[1])), a(m(&b[0], &x[1]), m(&b[1], &x[2]))],
                [a(m(&b[1], &x[0]), m(&b[2], &x[1])), a(m(&b[1], &x[1]), m(&b[2], &x[2]))],
            ];
            [
                a(m(&bx[0][0], &b[0]), m(&bx[0][1], &b[1])),
                a(m(&bx[0][0], &b[1]), m(&bx[0][1], &b[2])),
                a(m(&bx[1][0], &b[1]), m(&bx[1][1], &b[2])),
            ]
        }

        fn det(&self, a: &Sym2) -> BigFloat {
            a[0].mul(&a[2], P, RM).sub(&a[1].mul(&a[1], P, RM), P, RM)
        }

        fn instance(&mut self) -> [Sym2; 3] {
            let three = self.num(3.0);
            let zero = self.num(0.0);
            let c = self.num(19.0).div(&self.num(10.0), P, RM);
            let x0 = self.x_of_uv(&three, &zero);
            let b = [
                self.x_of_uv(&three, &zero),
                self.x_of_uv(&zero, &c),
                self.x_of_uv(&three.neg(), &c.neg()),
            ];
            [self.sandwich(&b[0], &x0), self.sandwich(&b[1], &x0), self.sandwich(&b[2], &x0)]
        }
    }

    fn to_f64(x: &BigFloat) -> f64 {
        x.to_string().parse().expect("finite value")
    }

    /// det Aᵢ − 1 for the three inputs.
    pub fn det_errors() -> [f64; 3] {
        let mut ctx = Ctx::new();
        let one = ctx.num(1.0);
        ctx.instance().map(|a| to_f64(&ctx.det(&a).sub(&one, P, RM)))
    }

    /// (F₁, F₂) at (u, v).
    pub fn f_uv(u: f64, v: f64) -> (f64, f64) {
        let mut ctx = Ctx::new();
        let a = ctx.instance();
        let xi = ctx.x_of_uv(&ctx.num(-u), &ctx.num(-v));
        let one = ctx.num(1.0);
        let two = ctx.num(2.0);
        let (mut f1, mut f2) = (ctx.num(0.0), ctx.num(0.0));
        for ai in &a {
            let s: Sym2 = [0, 1, 2].map(|k| ai[k].add(&xi[k], P, RM));
            let root = ctx.det(&s).sqrt(P, RM);
            let g: Sym2 = s.map(|e| e.div(&root, P, RM));
            let t = g[0].add(&g[2], P, RM).div(&two, P, RM);
            let sm1 = t.sub(&one, P, RM);
            let theta = if sm1.is_zero() {
                one.clone()
            } else {
                let q = sm1.mul(&sm1.add(&two, P, RM), P, RM).sqrt(P, RM);
                one.add(&sm1, P, RM).add(&q, P, RM).ln(P, RM, &mut ctx.cc).div(&q, P, RM)
            };
            let half_diff = g[0].sub(&g[2], P, RM).div(&two, P, RM);
            f1 = f1.add(&theta.mul(&half_diff, P, RM), P, RM);
            f2 = f2.add(&theta.mul(&g[1], P, RM), P, RM);
        }
        let three = ctx.num(3.0);
        (to_f64(&f1.div(&three, P, RM)), to_f64(&f2.div(&three, P, RM)))
    }

    /// ‖Φ(X(u, v))‖_F = √2 ‖(F₁, F₂)‖.
    pub fn residual_norm(u: f64, v: f64) -> f64 {
        let (f1, f2) = f_uv(u, v);
        std::f64::consts::SQRT_2 * f1.hypot(f2)
    }
}

/// Full reproduction: both solutions and the rectangle certificate.
#[derive(Clone, Debug)]
pub struct Reproduction {
    pub instance: Instance,
    /// ‖Φ(X₀)‖_F of the exact construction (256-bit evaluation).
    pub x0_residual: f64,
    /// ‖Φ(X₀)‖_F of the f64 instance through the generic residual.
    pub x0_residual_f64: f64,
    pub certificate: MirandaReport,
    pub second: SecondSolution,
}

pub fn reproduce(samples: usize, margin: f64, opts: &SolverOptions) -> Result<Reproduction> {
    let instance = build_instance();
    let x0_residual = exact::residual_norm(3.0, 0.0);
    let x0_residual_f64 = residual(&instance.problem, &instance.x0, &RepFunction::Log)?.1;
    let certificate = miranda_certify(&REFERENCE_RECT, samples, margin)?;
    if !certificate.certified {
        return Err(Error::Precondition("reference rectangle is not certified".into()));
    }
    let second = find_second_solution(&REFERENCE_RECT, opts)?;
    Ok(Reproduction { instance, x0_residual, x0_residual_f64, certificate, second })
}
