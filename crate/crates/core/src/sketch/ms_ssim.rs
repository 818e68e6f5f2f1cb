//! Multi-scale structural similarity with an analytic gradient.
//!
//! Gaussian window 11 / σ 1.5, K1 = 0.01, K2 = 0.03, data range 1, valid
//! filtering, 2×2 average pooling between scales (odd edges average the
//! available pixels). Negative per-scale terms are clamped to zero.

use crate::core::{Image, SketchMap};
use crate::error::{Error, Result};

pub const WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// Window size and number of scales used for a given shorter side.
///
/// Five scales need a side above 160; smaller inputs use as many scales as
/// keep the coarsest level at least one window wide. Inputs narrower than
/// the window shrink it to the largest odd size that fits.
pub fn scale_plan(min_side: usize) -> (usize, usize) {
    let window = if min_side >= WINDOW {
        WINDOW
    } else if min_side % 2 == 1 {
        min_side
    } else {
        min_side.saturating_sub(1).max(1)
    };
    let mut scales = 1;
    while scales < WEIGHTS.len() && min_side > (window - 1) << scales {
        scales += 1;
    }
    (window, scales)
}

fn gaussian(window: usize) -> Vec<f64> {
    let c = (window / 2) as f64;
    let k: Vec<f64> = (0..window)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SIGMA * SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone)]
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn new(w: usize, h: usize, v: Vec<f64>) -> Self {
        debug_assert_eq!(v.len(), w * h);
        Self { w, h, v }
    }

    fn mul(&self, o: &Plane) -> Plane {
        Plane::new(
            self.w,
            self.h,
            self.v.iter().zip(&o.v).map(|(a, b)| a * b).collect(),
        )
    }

    /// Valid separable filtering.
    fn filter(&self, k: &[f64]) -> Plane {
        let n = k.len();
        let ow = self.w + 1 - n;
        let oh = self.h + 1 - n;
        let mut tmp = vec![0.0; ow * self.h];
        for y in 0..self.h {
            let row = &self.v[y * self.w..(y + 1) * self.w];
            for x in 0..ow {
                tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
            }
        }
        let mut out = vec![0.0; ow * oh];
        for y in 0..oh {
            for (i, &kv) in k.iter().enumerate() {
                let src = &tmp[(y + i) * ow..(y + i + 1) * ow];
                let dst = &mut out[y * ow..(y + 1) * ow];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += kv * s;
                }
            }
        }
        Plane::new(ow, oh, out)
    }

    /// Adjoint of `filter`, back to a `w × h` plane.
    fn filter_adjoint(&self, k: &[f64], w: usize, h: usize) -> Plane {
        let n = k.len();
        let (ow, oh) = (self.w, self.h);
        let mut tmp = vec![0.0; ow * h];
        for y in 0..oh {
            for (i, &kv) in k.iter().enumerate() {
                let src = &self.v[y * ow..(y + 1) * ow];
                let dst = &mut tmp[(y + i) * ow..(y + i + 1) * ow];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += kv * s;
                }
            }
        }
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..ow {
                let g = tmp[y * ow + x];
                if g == 0.0 {
                    continue;
                }
                for (i, &kv) in k.iter().enumerate() {
                    out[y * w + x + i] += kv * g;
                }
            }
        }
        debug_assert_eq!(ow + n - 1, w);
        Plane::new(w, h, out)
    }

    fn pool(&self) -> Plane {
        let (nw, nh) = (self.w.div_ceil(2), self.h.div_ceil(2));
        let mut out = vec![0.0; nw * nh];
        for y in 0..nh {
            for x in 0..nw {
                let mut s = 0.0;
                let mut c = 0.0;
                for yy in 2 * y..(2 * y + 2).min(self.h) {
                    for xx in 2 * x..(2 * x + 2).min(self.w) {
                        s += self.v[yy * self.w + xx];
                        c += 1.0;
                    }
                }
                out[y * nw + x] = s / c;
            }
        }
        Plane::new(nw, nh, out)
    }

    /// Adjoint of `pool`, back to a `w × h` plane.
    fn pool_adjoint(&self, w: usize, h: usize) -> Plane {
        let mut out = vec![0.0; w * h];
        for y in 0..self.h {
            for x in 0..self.w {
                let ys = 2 * y..(2 * y + 2).min(h);
                let xs = 2 * x..(2 * x + 2).min(w);
                let c = (ys.len() * xs.len()) as f64;
                let g = self.v[y * self.w + x] / c;
                for yy in ys {
                    for xx in xs.clone() {
                        out[yy * w + xx] += g;
                    }
                }
            }
        }
        Plane::new(w, h, out)
    }
}

/// Per-scale mean term and, if requested, its gradient with respect to `y`.
fn scale_term(x: &Plane, y: &Plane, k: &[f64], last: bool, grad: bool) -> (f64, Option<Plane>) {
    let mx = x.filter(k);
    let my = y.filter(k);
    let qx = x.mul(x).filter(k);
    let qy = y.mul(y).filter(k);
    let pxy = x.mul(y).filter(k);
    let n = mx.v.len();

    let mut sum = 0.0;
    let (mut g_m, mut g_q, mut g_p) = if grad {
        (vec![0.0; n], vec![0.0; n], vec![0.0; n])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    for i in 0..n {
        let (ux, uy) = (mx.v[i], my.v[i]);
        let sxx = qx.v[i] - ux * ux;
        let syy = qy.v[i] - uy * uy;
        let sxy = pxy.v[i] - ux * uy;
        let a = 2.0 * sxy + C2;
        let b = sxx + syy + C2;
        let cs = a / b;
        let (l, dl_dmy) = if last {
            let num = 2.0 * (ux * uy) + C1;
            let den = ux * ux + uy * uy + C1;
            (num / den, (2.0 * ux * den - num * 2.0 * uy) / (den * den))
        } else {
            (1.0, 0.0)
        };
        sum += l * cs;
        if grad {
            let dcs_dmy = (-2.0 * ux * b + 2.0 * uy * a) / (b * b);
            let dcs_dqy = -a / (b * b);
            let dcs_dp = 2.0 / b;
            g_m[i] = (l * dcs_dmy + cs * dl_dmy) / n as f64;
            g_q[i] = l * dcs_dqy / n as f64;
            g_p[i] = l * dcs_dp / n as f64;
        }
    }
    let value = sum / n as f64;
    if !grad {
        return (value, None);
    }
    let (ow, oh) = (mx.w, mx.h);
    let adj = |g: Vec<f64>| Plane::new(ow, oh, g).filter_adjoint(k, y.w, y.h);
    let am = adj(g_m);
    let aq = adj(g_q);
    let ap = adj(g_p);
    let d: Vec<f64> = (0..y.v.len())
        .map(|i| am.v[i] + 2.0 * y.v[i] * aq.v[i] + x.v[i] * ap.v[i])
        .collect();
    (value, Some(Plane::new(y.w, y.h, d)))
}

fn evaluate(
    x: &[f32],
    y: &[f32],
    w: usize,
    h: usize,
    grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    if x.len() != w * h || y.len() != w * h {
        return Err(Error::Shape(format!(
            "planes of {} and {} samples for {w}x{h}",
            x.len(),
            y.len()
        )));
    }
    if w == 0 || h == 0 {
        return Err(Error::Shape("empty plane".into()));
    }
    let (window, scales) = scale_plan(w.min(h));
    let k = gaussian(window);
    let weights: Vec<f64> = {
        let s: f64 = WEIGHTS[..scales].iter().sum();
        WEIGHTS[..scales].iter().map(|v| v / s).collect()
    };

    let mut xs = vec![Plane::new(w, h, x.iter().map(|&v| v as f64).collect())];
    let mut ys = vec![Plane::new(w, h, y.iter().map(|&v| v as f64).collect())];
    for _ in 1..scales {
        let nx = xs.last().unwrap().pool();
        let ny = ys.last().unwrap().pool();
        xs.push(nx);
        ys.push(ny);
    }

    let mut terms = Vec::with_capacity(scales);
    let mut grads = Vec::with_capacity(scales);
    for j in 0..scales {
        let (v, g) = scale_term(&xs[j], &ys[j], &k, j + 1 == scales, grad);
        terms.push(v);
        grads.push(g);
    }
    let value: f64 = terms
        .iter()
        .zip(&weights)
        .map(|(v, wt)| v.max(0.0).powf(*wt))
        .product();
    if !grad {
        return Ok((value, None));
    }

    // d value / d y, accumulated coarse to fine through the pooling adjoints
    let mut acc: Option<Plane> = None;
    for j in (0..scales).rev() {
        let mut own = grads[j].take().expect("gradient requested");
        let factor = if terms[j] > 0.0 {
            value * weights[j] / terms[j]
        } else {
            0.0
        };
        own.v.iter_mut().for_each(|g| *g *= factor);
        if let Some(coarse) = acc.take() {
            let up = coarse.pool_adjoint(own.w, own.h);
            own.v.iter_mut().zip(&up.v).for_each(|(a, b)| *a += b);
        }
        acc = Some(own);
    }
    Ok((value, acc.map(|p| p.v)))
}

/// MS-SSIM between two single-channel planes.
pub fn ms_ssim_plane(a: &[f32], b: &[f32], width: usize, height: usize) -> Result<f64> {
    Ok(evaluate(a, b, width, height, false)?.0)
}

/// MS-SSIM of `y` against reference `x` and its gradient with respect to `y`.
pub fn ms_ssim_with_grad(
    x: &[f32],
    y: &[f32],
    width: usize,
    height: usize,
) -> Result<(f64, Vec<f64>)> {
    let (v, g) = evaluate(x, y, width, height, true)?;
    Ok((v, g.expect("gradient requested")))
}

pub fn ms_ssim(a: &SketchMap, b: &SketchMap) -> Result<f64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    ms_ssim_plane(a.data(), b.data(), a.width(), a.height())
}

/// Mean of the per-channel MS-SSIM values.
pub fn ms_ssim_image(a: &Image, b: &Image) -> Result<f64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mut total = 0.0;
    for c in 0..3 {
        total += ms_ssim_plane(&a.channel(c), &b.channel(c), a.width(), a.height())?;
    }
    Ok(total / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen::<f32>()).collect()
    }

    #[test]
    fn plan_follows_side_length() {
        assert_eq!(scale_plan(256), (11, 5));
        assert_eq!(scale_plan(161), (11, 5));
        assert_eq!(scale_plan(160), (11, 4));
        assert_eq!(scale_plan(128), (11, 4));
        assert_eq!(scale_plan(64), (11, 3));
        assert_eq!(scale_plan(11), (11, 1));
        assert_eq!(scale_plan(8), (7, 1));
    }

    #[test]
    fn identity_is_one() {
        for &(w, h) in &[(200usize, 170usize), (64, 64), (9, 12)] {
            let a = noise(w * h, 3);
            assert_eq!(ms_ssim_plane(&a, &a, w, h).unwrap(), 1.0);
        }
    }

    #[test]
    fn symmetric() {
        let a = noise(70 * 50, 1);
        let b = noise(70 * 50, 2);
        assert_eq!(
            ms_ssim_plane(&a, &b, 70, 50).unwrap(),
            ms_ssim_plane(&b, &a, 70, 50).unwrap()
        );
    }

    #[test]
    fn constant_zero_versus_one_matches_closed_form() {
        // all variances vanish, so every contrast-structure term is 1 and the
        // coarsest luminance term is C1 / (1 + C1)
        for side in [180usize, 64, 20] {
            let a = vec![0.0f32; side * side];
            let b = vec![1.0f32; side * side];
            let (_, scales) = scale_plan(side);
            let wsum: f64 = WEIGHTS[..scales].iter().sum();
            let w_last = WEIGHTS[scales - 1] / wsum;
            let c1 = 0.0001f64;
            let expected = (c1 / (1.0 + c1)).powf(w_last);
            let got = ms_ssim_plane(&a, &b, side, side).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "{side}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (w, h) = (37, 29);
        let x = noise(w * h, 10);
        let y: Vec<f32> = x
            .iter()
            .zip(noise(w * h, 11))
            .map(|(a, n)| 0.7 * a + 0.3 * n)
            .collect();
        let (_, g) = ms_ssim_with_grad(&x, &y, w, h).unwrap();
        let f = |yy: &[f32]| evaluate(&x, yy, w, h, false).unwrap().0;
        for &i in &[0usize, 5, 100, 333, 500, w * h - 1] {
            let eps = 1e-3f32;
            let mut up = y.clone();
            up[i] += eps;
            let mut dn = y.clone();
            dn[i] -= eps;
            let fd = (f(&up) - f(&dn)) / (2.0 * eps as f64);
            assert!(
                (fd - g[i]).abs() < 1e-4 * (1.0 + fd.abs()) + 1e-6,
                "pixel {i}: fd {fd} vs analytic {}",
                g[i]
            );
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = SketchMap::zeros(16, 16).unwrap();
        let b = SketchMap::zeros(16, 17).unwrap();
        assert!(matches!(ms_ssim(&a, &b), Err(Error::Shape(_))));
    }
}
