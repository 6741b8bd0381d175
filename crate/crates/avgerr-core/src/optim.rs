//! Small dense bound-constrained quasi-Newton minimizer.
//!
//! Projected BFGS with an active-set mask and Armijo backtracking, sized for
//! the low-dimensional problems in this crate (a handful to ~20 variables).
//! The inverse Hessian is kept dense; directions along binding bounds with
//! outward gradients are frozen each iteration.

/// Elementwise box bounds; use `f64::NEG_INFINITY` / `f64::INFINITY` for
/// unbounded components.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        debug_assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Self { lower, upper }
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(lo, hi);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    /// True when the projected-gradient or objective-decrease tolerance was
    /// met; false on iteration-budget exhaustion or a line-search stall.
    pub converged: bool,
}

const ARMIJO_C1: f64 = 1e-4;
const CURVATURE_SKIP: f64 = 1e-12;

/// Minimize `f` subject to box bounds. The closure writes the gradient into
/// its second argument and returns the objective value.
// `!(x < 0.0)` instead of `x >= 0.0`: a NaN descent value must take the
// restart/bail branch, not continue the line search
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn minimize_bounded<F>(
    mut func: F,
    x0: &[f64],
    bounds: &Bounds,
    max_iters: usize,
    pg_tol: f64,
    f_tol: f64,
) -> MinimizeResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; d];
    let mut f = func(&x, &mut g);

    // dense inverse-Hessian approximation, row-major
    let mut h = identity(d);
    let mut g_masked = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut x_new = vec![0.0; d];
    let mut g_new = vec![0.0; d];
    let mut flat_streak = 0usize;

    for iter in 0..max_iters {
        // projected-gradient optimality measure
        let mut pg_norm = 0.0f64;
        for i in 0..d {
            let stepped = (x[i] - g[i]).clamp(bounds.lower[i], bounds.upper[i]);
            pg_norm = pg_norm.max((stepped - x[i]).abs());
        }
        if pg_norm <= pg_tol {
            return MinimizeResult {
                x,
                f,
                iterations: iter,
                converged: true,
            };
        }

        // freeze coordinates pressed against a bound with an outward gradient
        let mut any_active = false;
        for i in 0..d {
            let span = (bounds.upper[i] - bounds.lower[i]).abs();
            let edge = 1e-12 * span.clamp(1e-4, 1.0);
            let at_lower = x[i] - bounds.lower[i] <= edge && g[i] > 0.0;
            let at_upper = bounds.upper[i] - x[i] <= edge && g[i] < 0.0;
            if at_lower || at_upper {
                g_masked[i] = 0.0;
                any_active = true;
            } else {
                g_masked[i] = g[i];
            }
        }

        // dir = -H * g_masked, re-masked so frozen coordinates stay put
        mat_vec(&h, &g_masked, &mut dir);
        for v in dir.iter_mut() {
            *v = -*v;
        }
        if any_active {
            for i in 0..d {
                if g_masked[i] == 0.0 && g[i] != 0.0 {
                    dir[i] = 0.0;
                }
            }
        }
        let descent: f64 = dot(&dir, &g);
        if !(descent < 0.0) {
            // curvature information has gone stale; restart from steepest descent
            h = identity(d);
            for i in 0..d {
                dir[i] = -g_masked[i];
            }
            if !(dot(&dir, &g) < 0.0) {
                // no feasible descent direction at all
                return MinimizeResult {
                    x,
                    f,
                    iterations: iter,
                    converged: pg_norm <= pg_tol * 10.0,
                };
            }
        }

        // backtracking Armijo search on the projected path
        let mut alpha = 1.0f64;
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..50 {
            for i in 0..d {
                x_new[i] = (x[i] + alpha * dir[i]).clamp(bounds.lower[i], bounds.upper[i]);
            }
            f_new = func(&x_new, &mut g_new);
            // directional derivative through the actual projected displacement
            let mut gdx = 0.0;
            for i in 0..d {
                gdx += g[i] * (x_new[i] - x[i]);
            }
            if f_new.is_finite() && f_new <= f + ARMIJO_C1 * gdx && gdx < 0.0 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return MinimizeResult {
                x,
                f,
                iterations: iter,
                converged: pg_norm <= pg_tol * 10.0,
            };
        }

        // BFGS update of the inverse Hessian
        let mut s = vec![0.0; d];
        let mut yv = vec![0.0; d];
        for i in 0..d {
            s[i] = x_new[i] - x[i];
            yv[i] = g_new[i] - g[i];
        }
        let sy = dot(&s, &yv);
        let s_norm = norm2(&s);
        let y_norm = norm2(&yv);
        if sy > CURVATURE_SKIP * s_norm * y_norm {
            bfgs_update(&mut h, &s, &yv, sy);
        }

        let f_drop = f - f_new;
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        f = f_new;

        // objective-flatness stop: several consecutive negligible decreases
        if f_drop <= f_tol * f.abs().max(1.0) {
            flat_streak += 1;
            if flat_streak >= 3 {
                return MinimizeResult {
                    x,
                    f,
                    iterations: iter + 1,
                    converged: true,
                };
            }
        } else {
            flat_streak = 0;
        }
    }

    MinimizeResult {
        x,
        f,
        iterations: max_iters,
        converged: false,
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for i in 0..d {
        let row = &m[i * d..(i + 1) * d];
        let mut acc = 0.0;
        for j in 0..d {
            acc += row[j] * v[j];
        }
        out[i] = acc;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// H <- (I - s yᵀ/sy) H (I - y sᵀ/sy) + s sᵀ/sy
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let d = s.len();
    let rho = 1.0 / sy;
    // hy = H y
    let mut hy = vec![0.0; d];
    mat_vec(h, y, &mut hy);
    let yhy = dot(y, &hy);
    // H += rho^2 (y'Hy) s s' + rho s s' - rho (s hy' + hy s')
    let c = rho * rho * yhy + rho;
    for i in 0..d {
        for j in 0..d {
            h[i * d + j] += c * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]);
        }
    }
}
