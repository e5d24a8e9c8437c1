//! Derivative-free local searches used by the agent and principal solvers.
//!
//! All routines minimize. Callers maximizing a payoff pass its negation.

use crate::scalar::Scalar;

/// Brent's bounded scalar minimization (golden section with parabolic steps).
///
/// Returns `(argmin, min)` on `[lo, hi]`.
pub fn brent_minimize<T, F>(mut f: F, lo: T, hi: T, tol: T, max_iter: usize) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let golden = T::lit(0.381_966_011_250_105_1);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let eps = T::epsilon().sqrt();

    let mut x = a + golden * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d = T::zero();
    let mut e = T::zero();

    for _ in 0..max_iter {
        let m = half * (a + b);
        let tol1 = eps * x.abs() + tol / T::lit(3.0);
        let tol2 = two * tol1;
        if (x - m).abs() <= tol2 - half * (b - a) {
            break;
        }

        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (half * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x < m { b - x } else { a - x };
            d = golden * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);

        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Axis-aligned box `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [T]) {
        for ((xi, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.max(lo).min(hi);
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((&xi, &lo), &hi)| xi >= lo && xi <= hi)
    }

    fn span(&self, i: usize) -> T {
        self.upper[i] - self.lower[i]
    }
}

#[derive(Debug, Clone)]
pub struct LocalMin<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex search confined to a box by projecting every trial
/// point onto it. Steps are expressed as fractions of each coordinate's span.
pub fn nelder_mead_box<T, F>(
    f: &mut F,
    start: &[T],
    bounds: &Bounds<T>,
    step: T,
    ftol: T,
    max_iter: usize,
) -> LocalMin<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = start.len();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut evaluations = 0usize;
    let mut eval = |x: &mut Vec<T>, f: &mut F| {
        bounds.clamp(x);
        evaluations += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    let f0 = eval(&mut x0, f);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut xi = x0.clone();
        let h = step * bounds.span(i);
        // step inward when the start sits on the upper face
        xi[i] = if xi[i] + h <= bounds.upper[i] { xi[i] + h } else { xi[i] - h };
        let fi = eval(&mut xi, f);
        simplex.push((xi, fi));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .enumerate()
                    .map(|(i, (&a, &b))| (a - b).abs() / bounds.span(i).max(T::epsilon()))
            })
            .fold(T::zero(), T::max);
        if (worst - best).abs() <= ftol * (T::one() + best.abs()) && size <= ftol.sqrt() {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c = *c + xi;
            }
        }
        let nt = T::from_usize(n).unwrap();
        centroid.iter_mut().for_each(|c| *c = *c / nt);

        let along = |t: T, from: &[T]| -> Vec<T> {
            centroid
                .iter()
                .zip(from)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let worst_x = simplex[n].0.clone();
        let mut xr = along(T::one(), &worst_x);
        let fr = eval(&mut xr, f);
        if fr < simplex[0].1 {
            let mut xe = along(two, &worst_x);
            let fe = eval(&mut xe, f);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (mut xc, fc) = if fr < worst {
                let mut xc = along(half, &worst_x);
                let fc = eval(&mut xc, f);
                (xc, fc)
            } else {
                let mut xc = along(-half, &worst_x);
                let fc = eval(&mut xc, f);
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[n] = (std::mem::take(&mut xc), fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (xi, &bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + half * (*xi - bi);
                    }
                    *fx = eval(x, f);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, fx) = simplex.swap_remove(0);
    LocalMin {
        x,
        f: fx,
        iterations,
        evaluations,
        converged,
    }
}

/// Compass (coordinate pattern) search: tries `x +- h e_i`, halving `h` when no
/// axis move improves, until `h` drops below `min_step` (fraction of span).
pub fn compass_search<T, F>(
    f: &mut F,
    start: LocalMin<T>,
    bounds: &Bounds<T>,
    initial_step: T,
    min_step: T,
    max_evals: usize,
) -> LocalMin<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let LocalMin {
        mut x,
        f: mut fx,
        iterations,
        mut evaluations,
        converged,
    } = start;
    let mut h = initial_step;
    let budget = evaluations + max_evals;
    while h >= min_step && evaluations < budget {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [T::one(), -T::one()] {
                let mut trial = x.clone();
                trial[i] = trial[i] + sign * h * bounds.span(i);
                bounds.clamp(&mut trial);
                if trial[i] == x[i] {
                    continue;
                }
                let ft = f(&trial);
                evaluations += 1;
                if ft < fx {
                    x = trial;
                    fx = ft;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            h = h * T::lit(0.5);
        }
    }
    LocalMin {
        x,
        f: fx,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_minimum() {
        let (x, fx) = brent_minimize(|x: f64| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn brent_respects_bounds() {
        let (x, _) = brent_minimize(|x: f64| x, 0.2, 0.7, 1e-10, 200);
        assert!((0.2..0.2 + 1e-8).contains(&x));
    }

    #[test]
    fn brent_works_in_f32() {
        let (x, _) = brent_minimize(|x: f32| (x - 0.25).powi(2), 0.0, 1.0, 1e-6, 200);
        assert!((x - 0.25).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_rosenbrock_in_box() {
        let bounds = Bounds {
            lower: vec![-2.0, -2.0],
            upper: vec![2.0, 2.0],
        };
        let mut f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = nelder_mead_box(&mut f, &[-1.2, 1.0], &bounds, 0.1, 1e-14, 5000);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_active_bound() {
        let bounds = Bounds {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        let mut f = |x: &[f64]| (x[0] + 1.0).powi(2) + (x[1] - 0.5).powi(2);
        let r = nelder_mead_box(&mut f, &[0.7, 0.7], &bounds, 0.1, 1e-12, 2000);
        let r = compass_search(&mut f, r, &bounds, 0.01, 1e-10, 10_000);
        assert_eq!(r.x[0], 0.0);
        assert!((r.x[1] - 0.5).abs() < 1e-6);
    }
}
