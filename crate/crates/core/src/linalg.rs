//! Krylov solvers and a fast-diagonalization solver for separable operators.

use std::sync::Arc;

use rustdct::DctPlanner;

use crate::error::SolverError;
use crate::grid::ScalarBc;

/// Iteration count and final relative residual of a Krylov solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Work in the complement of constants (singular operators with a constant nullspace).
    pub deflate_mean: bool,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { rel_tol: 1e-10, abs_tol: 0.0, max_iter: 10_000, deflate_mean: false }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite operator.
pub fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: KrylovOptions,
    what: &'static str,
) -> Result<IterStats, SolverError> {
    let n = b.len();
    let mut rhs = b.to_vec();
    if opts.deflate_mean {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let bnorm = dot(&rhs, &rhs).sqrt();
    if !bnorm.is_finite() {
        return Err(SolverError::NonFinite(what));
    }
    let target = opts.rel_tol * bnorm + opts.abs_tol;
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = rhs[k] - r[k];
    }
    if opts.deflate_mean {
        remove_mean(&mut r);
    }
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= target || bnorm == 0.0 && rnorm == 0.0 {
        return Ok(IterStats { iterations: 0, residual: rnorm / bnorm.max(f64::MIN_POSITIVE) });
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    if opts.deflate_mean {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            if rnorm <= target * 10.0 {
                return Ok(IterStats { iterations: it, residual: rnorm / bnorm });
            }
            return Err(SolverError::NonFinite(what));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if opts.deflate_mean {
            remove_mean(&mut r);
        }
        rnorm = dot(&r, &r).sqrt();
        if !rnorm.is_finite() {
            return Err(SolverError::NonFinite(what));
        }
        if rnorm <= target {
            if opts.deflate_mean {
                remove_mean(x);
            }
            return Ok(IterStats { iterations: it, residual: rnorm / bnorm });
        }
        precond(&r, &mut z);
        if opts.deflate_mean {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(SolverError::NoConvergence { what, iters: opts.max_iter, residual: rnorm / bnorm })
}

/// Right-preconditioned BiCGSTAB for non-symmetric operators.
pub fn bicgstab(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: KrylovOptions,
    what: &'static str,
) -> Result<IterStats, SolverError> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if !bnorm.is_finite() {
        return Err(SolverError::NonFinite(what));
    }
    let target = opts.rel_tol * bnorm + opts.abs_tol;
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= target {
        return Ok(IterStats { iterations: 0, residual: rnorm / bnorm.max(f64::MIN_POSITIVE) });
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=opts.max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(SolverError::NoConvergence { what, iters: it, residual: rnorm / bnorm });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        precond(&p, &mut phat);
        apply(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        let snorm = dot(&s, &s).sqrt();
        if snorm <= target {
            for k in 0..n {
                x[k] += alpha * phat[k];
            }
            return Ok(IterStats { iterations: it, residual: snorm / bnorm });
        }
        precond(&s, &mut shat);
        apply(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for k in 0..n {
            x[k] += alpha * phat[k] + omega * shat[k];
            r[k] = s[k] - omega * t[k];
        }
        rnorm = dot(&r, &r).sqrt();
        if !rnorm.is_finite() {
            return Err(SolverError::NonFinite(what));
        }
        if rnorm <= target {
            return Ok(IterStats { iterations: it, residual: rnorm / bnorm });
        }
    }
    Err(SolverError::NoConvergence { what, iters: opts.max_iter, residual: rnorm / bnorm })
}

/// Boundary pairing of a 1D cell-centered three-point Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lap1d {
    NeumannNeumann,
    DirichletDirichlet,
    NeumannDirichlet,
    DirichletNeumann,
    Periodic,
}

impl Lap1d {
    pub fn from_bcs(low: ScalarBc, high: ScalarBc) -> Lap1d {
        match (low, high) {
            (ScalarBc::Periodic, _) | (_, ScalarBc::Periodic) => Lap1d::Periodic,
            (ScalarBc::Neumann, ScalarBc::Neumann) => Lap1d::NeumannNeumann,
            (ScalarBc::Dirichlet(_), ScalarBc::Dirichlet(_)) => Lap1d::DirichletDirichlet,
            (ScalarBc::Neumann, ScalarBc::Dirichlet(_)) => Lap1d::NeumannDirichlet,
            (ScalarBc::Dirichlet(_), ScalarBc::Neumann) => Lap1d::DirichletNeumann,
        }
    }
}

/// Orthonormal eigenbasis of a 1D Laplacian. `q[j * n + k]` is component j of vector k.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen1d {
    pub n: usize,
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Fast transform whose basis matches `q` up to column scaling.
    pub transform: LineTransform,
}

/// Trigonometric transform families used for the 1D eigenbases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineTransform {
    /// DCT-II forward, DCT-III backward.
    Dct2,
    /// DST-II forward, DST-III backward.
    Dst2,
    Dct4,
    Dst4,
    Dst1,
    /// DST-VII forward, DST-VI backward; `flip` reverses the index order.
    Dst7 { flip: bool },
    /// Matrix products with the stored basis.
    Dense,
}

impl Eigen1d {
    pub fn cell_laplacian(kind: Lap1d, n: usize, h: f64) -> Eigen1d {
        use std::f64::consts::PI;
        let nf = n as f64;
        let s2 = |theta: f64| -4.0 / (h * h) * theta.sin().powi(2);
        let mut q = vec![0.0; n * n];
        let mut lambda = vec![0.0; n];
        match kind {
            Lap1d::Periodic => {
                // real Fourier basis: 1, cos/sin pairs, alternating mode at n/2
                let mut k = 0;
                let mut m = 0usize;
                while k < n {
                    if m == 0 || (n % 2 == 0 && m == n / 2) {
                        for j in 0..n {
                            q[j * n + k] = (2.0 * PI * (m * j) as f64 / nf).cos();
                        }
                        lambda[k] = s2(PI * m as f64 / nf);
                        k += 1;
                    } else {
                        for j in 0..n {
                            q[j * n + k] = (2.0 * PI * (m * j) as f64 / nf).cos();
                            q[j * n + k + 1] = (2.0 * PI * (m * j) as f64 / nf).sin();
                        }
                        lambda[k] = s2(PI * m as f64 / nf);
                        lambda[k + 1] = lambda[k];
                        k += 2;
                    }
                    m += 1;
                }
            }
            _ => {
                for k in 0..n {
                    let (wave, basis): (f64, fn(f64) -> f64) = match kind {
                        Lap1d::NeumannNeumann => (k as f64, f64::cos),
                        Lap1d::DirichletDirichlet => (k as f64 + 1.0, f64::sin),
                        Lap1d::NeumannDirichlet => (k as f64 + 0.5, f64::cos),
                        Lap1d::DirichletNeumann => (k as f64 + 0.5, f64::sin),
                        Lap1d::Periodic => unreachable!(),
                    };
                    for j in 0..n {
                        q[j * n + k] = basis(PI * wave * (j as f64 + 0.5) / nf);
                    }
                    lambda[k] = s2(PI * wave / (2.0 * nf));
                }
            }
        }
        for k in 0..n {
            let norm: f64 = (0..n).map(|j| q[j * n + k].powi(2)).sum::<f64>().sqrt();
            for j in 0..n {
                q[j * n + k] /= norm;
            }
        }
        let transform = match kind {
            Lap1d::NeumannNeumann => LineTransform::Dct2,
            Lap1d::DirichletDirichlet => LineTransform::Dst2,
            Lap1d::NeumannDirichlet => LineTransform::Dct4,
            Lap1d::DirichletNeumann => LineTransform::Dst4,
            Lap1d::Periodic => LineTransform::Dense,
        };
        Eigen1d { n, q, lambda, transform }
    }
}

/// Boundary closure of a 1D operator on face nodes 1..n−1 of an n-cell line: the end
/// value is either fixed (Dirichlet) or copied from its neighbour (Extrapolate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node1d {
    DirichletDirichlet,
    DirichletExtrapolate,
    ExtrapolateDirichlet,
    ExtrapolateExtrapolate,
    /// n nodes 0..n−1 with wrap-around.
    Periodic,
}

impl Eigen1d {
    /// Eigenbasis of the second difference on face nodes; see [`Node1d`].
    pub fn node_laplacian(kind: Node1d, n: usize, h: f64) -> Eigen1d {
        use std::f64::consts::PI;
        let m = match kind {
            Node1d::Periodic => return Eigen1d::cell_laplacian(Lap1d::Periodic, n, h),
            Node1d::ExtrapolateExtrapolate => return Eigen1d::cell_laplacian(Lap1d::NeumannNeumann, n - 1, h),
            _ => n - 1,
        };
        let s2 = |theta: f64| -4.0 / (h * h) * (0.5 * theta).sin().powi(2);
        let mut q = vec![0.0; m * m];
        let mut lambda = vec![0.0; m];
        for k in 0..m {
            let theta = match kind {
                Node1d::DirichletDirichlet => PI * (k + 1) as f64 / n as f64,
                _ => PI * (2 * k + 1) as f64 / (2 * m + 1) as f64,
            };
            for j in 0..m {
                let idx = match kind {
                    Node1d::ExtrapolateDirichlet => m - j,
                    _ => j + 1,
                };
                q[j * m + k] = (idx as f64 * theta).sin();
            }
            lambda[k] = s2(theta);
        }
        for k in 0..m {
            let norm: f64 = (0..m).map(|j| q[j * m + k].powi(2)).sum::<f64>().sqrt();
            for j in 0..m {
                q[j * m + k] /= norm;
            }
        }
        let transform = match kind {
            Node1d::DirichletDirichlet => LineTransform::Dst1,
            Node1d::ExtrapolateDirichlet => LineTransform::Dst7 { flip: true },
            _ => LineTransform::Dst7 { flip: false },
        };
        Eigen1d { n: m, q, lambda, transform }
    }
}

type Plan = Arc<dyn Fn(&mut [f64], &mut [f64]) + Send + Sync>;

/// Forward (x ↦ Qᵀx) and backward (y ↦ Qy) transforms of one 1D eigenbasis.
#[derive(Clone)]
struct Line {
    n: usize,
    fwd: Plan,
    bwd: Plan,
    /// Column scales making the raw transforms orthonormal.
    sf: Vec<f64>,
    sb: Vec<f64>,
    flip: bool,
    scratch_len: usize,
    zero_scratch: bool,
}

impl Line {
    fn new(e: &Eigen1d, planner: &mut DctPlanner<f64>) -> Line {
        let n = e.n;
        let (fwd, bwd, flip, scratch_len): (Plan, Plan, bool, usize) = match e.transform {
            LineTransform::Dct2 => {
                let t = planner.plan_dct2(n);
                let u = t.clone();
                let l = t.get_scratch_len();
                (Arc::new(move |b, s| t.process_dct2_with_scratch(b, s)), Arc::new(move |b, s| u.process_dct3_with_scratch(b, s)), false, l)
            }
            LineTransform::Dst2 => {
                let t = planner.plan_dst2(n);
                let u = t.clone();
                let l = t.get_scratch_len();
                (Arc::new(move |b, s| t.process_dst2_with_scratch(b, s)), Arc::new(move |b, s| u.process_dst3_with_scratch(b, s)), false, l)
            }
            LineTransform::Dct4 => {
                let t = planner.plan_dct4(n);
                let u = t.clone();
                let l = t.get_scratch_len();
                (Arc::new(move |b, s| t.process_dct4_with_scratch(b, s)), Arc::new(move |b, s| u.process_dct4_with_scratch(b, s)), false, l)
            }
            LineTransform::Dst4 => {
                let t = planner.plan_dst4(n);
                let u = t.clone();
                let l = t.get_scratch_len();
                (Arc::new(move |b, s| t.process_dst4_with_scratch(b, s)), Arc::new(move |b, s| u.process_dst4_with_scratch(b, s)), false, l)
            }
            LineTransform::Dst1 => {
                let t = planner.plan_dst1(n);
                let u = t.clone();
                let l = t.get_scratch_len();
                (Arc::new(move |b, s| t.process_dst1_with_scratch(b, s)), Arc::new(move |b, s| u.process_dst1_with_scratch(b, s)), false, l)
            }
            LineTransform::Dst7 { flip } => {
                let t = planner.plan_dst7(n);
                let u = planner.plan_dst6(n);
                let l = t.get_scratch_len().max(u.get_scratch_len());
                (Arc::new(move |b, s| t.process_dst7_with_scratch(b, s)), Arc::new(move |b, s| u.process_dst6_with_scratch(b, s)), flip, l)
            }
            LineTransform::Dense => {
                let q = e.q.clone();
                let qt = q.clone();
                let fwd: Plan = Arc::new(move |b: &mut [f64], s: &mut [f64]| {
                    s[..n].copy_from_slice(b);
                    for (k, out) in b.iter_mut().enumerate() {
                        *out = (0..n).map(|j| q[j * n + k] * s[j]).sum();
                    }
                });
                let bwd: Plan = Arc::new(move |b: &mut [f64], s: &mut [f64]| {
                    s[..n].copy_from_slice(b);
                    for (j, out) in b.iter_mut().enumerate() {
                        *out = (0..n).map(|k| qt[j * n + k] * s[k]).sum();
                    }
                });
                (fwd, bwd, false, n)
            }
        };
        let zero_scratch = matches!(e.transform, LineTransform::Dst1 | LineTransform::Dst7 { .. });
        let mut line = Line { n, fwd, bwd, sf: vec![1.0; n], sb: vec![1.0; n], flip, scratch_len: scratch_len.max(1), zero_scratch };
        // Calibrate column scales against the orthonormal basis.
        let mut scratch = vec![0.0; line.scratch_len];
        for k in 0..n {
            let mut col: Vec<f64> = (0..n).map(|j| e.q[j * n + k]).collect();
            line.forward(&mut col, &mut scratch);
            line.sf[k] = 1.0 / col[k];
            let mut unit = vec![0.0; n];
            unit[k] = 1.0;
            line.backward(&mut unit, &mut scratch);
            let jmax = (0..n).max_by(|&a, &b| e.q[a * n + k].abs().total_cmp(&e.q[b * n + k].abs())).unwrap();
            line.sb[k] = e.q[jmax * n + k] / unit[jmax];
        }
        line
    }

    /// The FFT-based DST-I and DST-VI/VII kernels read scratch entries they never write.
    fn clear(&self, scratch: &mut [f64]) {
        if self.zero_scratch {
            // the inner FFT buffer leads the scratch and is at most 4n + 4 complex values
            let len = (8 * self.n + 8).min(self.scratch_len);
            scratch[..len].fill(0.0);
        }
    }

    fn forward(&self, b: &mut [f64], scratch: &mut [f64]) {
        if self.flip {
            b.reverse();
        }
        self.clear(scratch);
        (self.fwd)(b, scratch);
        for (v, s) in b.iter_mut().zip(&self.sf) {
            *v *= s;
        }
    }

    fn backward(&self, b: &mut [f64], scratch: &mut [f64]) {
        for (v, s) in b.iter_mut().zip(&self.sb) {
            *v *= s;
        }
        self.clear(scratch);
        (self.bwd)(b, scratch);
        if self.flip {
            b.reverse();
        }
    }
}

/// Fast diagonalization of separable operators p(Lx ⊗ I + I ⊗ Ly) on an nx × ny cell grid.
/// Vectors are packed row-major with x fastest.
#[derive(Clone)]
pub struct FastDiag {
    pub ex: Eigen1d,
    pub ey: Eigen1d,
    lx: Line,
    ly: Line,
}

impl std::fmt::Debug for FastDiag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FastDiag").field("nx", &self.ex.n).field("ny", &self.ey.n).finish()
    }
}

impl PartialEq for FastDiag {
    fn eq(&self, o: &Self) -> bool {
        self.ex == o.ex && self.ey == o.ey
    }
}

impl FastDiag {
    pub fn from_eigen(ex: Eigen1d, ey: Eigen1d) -> Self {
        let mut planner = DctPlanner::new();
        let lx = Line::new(&ex, &mut planner);
        let ly = Line::new(&ey, &mut planner);
        FastDiag { ex, ey, lx, ly }
    }

    pub fn new(kx: Lap1d, nx: usize, hx: f64, ky: Lap1d, ny: usize, hy: f64) -> Self {
        FastDiag::from_eigen(Eigen1d::cell_laplacian(kx, nx, hx), Eigen1d::cell_laplacian(ky, ny, hy))
    }

    pub fn from_bcs(bcs: [ScalarBc; 4], nx: usize, hx: f64, ny: usize, hy: f64) -> Self {
        FastDiag::new(Lap1d::from_bcs(bcs[0], bcs[1]), nx, hx, Lap1d::from_bcs(bcs[2], bcs[3]), ny, hy)
    }

    fn transform(&self, b: &[f64], forward: bool) -> Vec<f64> {
        let (nx, ny) = (self.lx.n, self.ly.n);
        let mut out = b.to_vec();
        let mut scratch = vec![0.0; self.lx.scratch_len.max(self.ly.scratch_len).max(nx.max(ny))];
        for row in out.chunks_mut(nx) {
            if forward {
                self.lx.forward(row, &mut scratch);
            } else {
                self.lx.backward(row, &mut scratch);
            }
        }
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = out[j * nx + i];
            }
            if forward {
                self.ly.forward(&mut col, &mut scratch);
            } else {
                self.ly.backward(&mut col, &mut scratch);
            }
            for j in 0..ny {
                out[j * nx + i] = col[j];
            }
        }
        out
    }

    /// Coefficients in the eigenbasis: B̂ = Qyᵀ B Qx.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        self.transform(b, true)
    }

    /// Inverse of [`forward`](Self::forward): B = Qy B̂ Qxᵀ.
    pub fn backward(&self, bh: &[f64]) -> Vec<f64> {
        self.transform(bh, false)
    }

    /// Solves p(Λ) x = b where Λ is the discrete Laplacian; modes with p = 0 are set to zero.
    pub fn solve(&self, b: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        self.solve_separable(b, |lx, ly| symbol(lx + ly))
    }

    /// Solves p(Λx, Λy) x = b for a symbol of the two 1D eigenvalues.
    pub fn solve_separable(&self, b: &[f64], symbol: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut bh = self.forward(b);
        let nx = self.ex.n;
        for (l, row) in bh.chunks_mut(nx).enumerate() {
            let ly = self.ey.lambda[l];
            for (k, v) in row.iter_mut().enumerate() {
                let p = symbol(self.ex.lambda[k], ly);
                *v = if p == 0.0 { 0.0 } else { *v / p };
            }
        }
        self.backward(&bh)
    }

    /// Applies p(Λ) to x.
    pub fn apply(&self, x: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut xh = self.forward(x);
        let nx = self.ex.n;
        for (l, row) in xh.chunks_mut(nx).enumerate() {
            let ly = self.ey.lambda[l];
            for (k, v) in row.iter_mut().enumerate() {
                *v *= symbol(self.ex.lambda[k] + ly);
            }
        }
        self.backward(&xh)
    }
}
