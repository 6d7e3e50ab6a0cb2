//! Globally adaptive Gauss–Kronrod (7/15) quadrature, an iterated
//! version for integrals over boxes, and Genz–Malik adaptive cubature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[a, b]` until the estimated error is below
/// `max(abs_tol, rel_tol * |value|)` or `max_evals` is exhausted.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, evaluations: 0, converged: true };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    loop {
        let target = abs_tol.max(rel_tol * total.abs());
        if total_err <= target {
            return QuadResult { value: total, error: total_err, evaluations: evals, converged: true };
        }
        if evals + 30 > max_evals {
            return QuadResult { value: total, error: total_err, evaluations: evals, converged: false };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return QuadResult { value: total, error: total_err, evaluations: evals, converged: false };
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // Rebuild the running error sum periodically to shed round-off drift.
        if evals % 3000 < 30 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Iterated adaptive quadrature of `f` over the box `[lower, upper]`.
///
/// The innermost coordinate is the last one. Inner integrals are computed to
/// a fraction of the outer tolerance and their error estimates are
/// accumulated into the reported error.
pub fn integrate_box(
    f: &dyn Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_evals_per_level: usize,
) -> QuadResult {
    assert_eq!(lower.len(), upper.len());
    let dim = lower.len();
    if dim == 0 {
        let v = f(&[]);
        return QuadResult { value: v, error: 0.0, evaluations: 1, converged: true };
    }
    let mut point = vec![0.0; dim];
    nested(f, lower, upper, 0, &mut point, abs_tol, rel_tol, max_evals_per_level)
}

#[allow(clippy::too_many_arguments)]
fn nested(
    f: &dyn Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    level: usize,
    point: &mut Vec<f64>,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> QuadResult {
    let dim = lower.len();
    let width = upper[level] - lower[level];
    if level + 1 == dim {
        let mut p = point.clone();
        return integrate(
            |x| {
                p[level] = x;
                f(&p)
            },
            lower[level],
            upper[level],
            abs_tol,
            rel_tol,
            max_evals,
        );
    }
    let mut inner_err = 0.0;
    let mut inner_evals = 0;
    let mut all_converged = true;
    let inner_abs = 0.1 * abs_tol / width.abs().max(1e-300);
    let inner_rel = 0.1 * rel_tol;
    let outer = {
        let mut p = point.clone();
        integrate(
            |x| {
                p[level] = x;
                let r = nested(f, lower, upper, level + 1, &mut p, inner_abs, inner_rel, max_evals);
                inner_err += r.error;
                inner_evals += r.evaluations;
                all_converged &= r.converged;
                r.value
            },
            lower[level],
            upper[level],
            abs_tol,
            rel_tol,
            max_evals,
        )
    };
    // Inner errors are summed over all outer nodes; scale by the mean node
    // weight so the total approximates the integrated inner error.
    let mean_weight = width.abs() / (outer.evaluations.max(1) as f64);
    QuadResult {
        value: outer.value,
        error: outer.error + inner_err * mean_weight,
        evaluations: inner_evals,
        converged: outer.converged && all_converged,
    }
}

struct Region {
    center: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    split_axis: usize,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Degree-7 Genz–Malik rule with its embedded degree-5 rule on one box.
fn genz_malik(f: &dyn Fn(&[f64]) -> f64, center: &[f64], half: &[f64]) -> (f64, f64, usize, usize) {
    let n = center.len();
    let nf = n as f64;
    let l2 = (9.0f64 / 70.0).sqrt();
    let l4 = (9.0f64 / 10.0).sqrt();
    let l5 = (9.0f64 / 19.0).sqrt();
    let w1 = (12824.0 - 9120.0 * nf + 400.0 * nf * nf) / 19683.0;
    let w2 = 980.0 / 6561.0;
    let w3 = (1820.0 - 400.0 * nf) / 19683.0;
    let w4 = 200.0 / 19683.0;
    let w5 = 6859.0 / 19683.0 / 2f64.powi(n as i32);
    let v1 = (729.0 - 950.0 * nf + 50.0 * nf * nf) / 729.0;
    let v2 = 245.0 / 486.0;
    let v3 = (265.0 - 100.0 * nf) / 1458.0;
    let v4 = 25.0 / 729.0;
    let mut p = center.to_vec();
    let f0 = f(&p);
    let (mut s2, mut s3, mut s4, mut s5) = (0.0, 0.0, 0.0, 0.0);
    let mut best_axis = 0;
    let mut best_diff = -1.0;
    let ratio = (l2 * l2) / (l4 * l4);
    for i in 0..n {
        p[i] = center[i] - l2 * half[i];
        let a = f(&p);
        p[i] = center[i] + l2 * half[i];
        let b = f(&p);
        p[i] = center[i] - l4 * half[i];
        let c = f(&p);
        p[i] = center[i] + l4 * half[i];
        let d = f(&p);
        p[i] = center[i];
        s2 += a + b;
        s3 += c + d;
        let diff = ((a + b - 2.0 * f0) - ratio * (c + d - 2.0 * f0)).abs();
        if diff > best_diff {
            best_diff = diff;
            best_axis = i;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                p[i] = center[i] + si * l4 * half[i];
                p[j] = center[j] + sj * l4 * half[j];
                s4 += f(&p);
            }
            p[i] = center[i];
            p[j] = center[j];
        }
    }
    for mask in 0..(1usize << n) {
        for i in 0..n {
            let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            p[i] = center[i] + sign * l5 * half[i];
        }
        s5 += f(&p);
    }
    let vol: f64 = half.iter().map(|h| 2.0 * h).product();
    let i7 = vol * (w1 * f0 + w2 * s2 + w3 * s3 + w4 * s4 + w5 * s5);
    let i5 = vol * (v1 * f0 + v2 * s2 + v3 * s3 + v4 * s4);
    let evals = 1 + 4 * n + 2 * n * (n - 1) + (1 << n);
    (i7, (i7 - i5).abs(), best_axis, evals)
}

/// Globally adaptive Genz–Malik cubature over `[lower, upper]` for
/// dimensions 2 to about 8; one dimension falls back to [`integrate`].
pub fn cubature(
    f: &dyn Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> QuadResult {
    assert_eq!(lower.len(), upper.len());
    let n = lower.len();
    match n {
        0 => return QuadResult { value: f(&[]), error: 0.0, evaluations: 1, converged: true },
        1 => return integrate(|x| f(&[x]), lower[0], upper[0], abs_tol, rel_tol, max_evals),
        _ => {}
    }
    let region = |center: Vec<f64>, half: Vec<f64>| -> (Region, usize) {
        let (value, error, split_axis, ev) = genz_malik(f, &center, &half);
        (Region { center, half, value, error, split_axis }, ev)
    };
    let center: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (b - a)).collect();
    let (first, mut evals) = region(center, half);
    let per_region = evals;
    let (mut total, mut total_err) = (first.value, first.error);
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut splits = 0usize;
    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return QuadResult { value: total, error: total_err, evaluations: evals, converged: true };
        }
        if evals + 2 * per_region > max_evals {
            return QuadResult { value: total, error: total_err, evaluations: evals, converged: false };
        }
        let worst = heap.pop().expect("non-empty heap");
        let ax = worst.split_axis;
        let mut half = worst.half.clone();
        half[ax] *= 0.5;
        let mut c1 = worst.center.clone();
        let mut c2 = worst.center.clone();
        c1[ax] -= half[ax];
        c2[ax] += half[ax];
        let (r1, e1) = region(c1, half.clone());
        let (r2, e2) = region(c2, half);
        evals += e1 + e2;
        total += r1.value + r2.value - worst.value;
        total_err += r1.error + r2.error - worst.error;
        heap.push(r1);
        heap.push(r2);
        splits += 1;
        if splits % 200 == 0 {
            total = heap.iter().map(|r| r.value).sum();
            total_err = heap.iter().map(|r| r.error).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-14, 1e-14, 1000);
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singular_integrand() {
        // int_0^1 x^{-1/2} dx = 2
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 1e-10, 100_000);
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn cubature_matches_closed_forms() {
        let f = |p: &[f64]| p[0] * p[1] * p[1] * p[2].sin();
        let r = cubature(&f, &[0.0, 0.0, 0.0], &[1.0, 2.0, std::f64::consts::PI], 1e-11, 1e-11, 1_000_000);
        assert!(r.converged && (r.value - 8.0 / 3.0).abs() < 1e-9, "{r:?}");
        // Gaussian bump in 4-D: (sqrt(pi) erf(2))^4 / 16 over [0,2]^4 of exp(-|x|^2)
        let g = |p: &[f64]| (-p.iter().map(|x| x * x).sum::<f64>()).exp();
        let one = std::f64::consts::PI.sqrt() / 2.0 * libm::erf(2.0);
        let r = cubature(&g, &[0.0; 4], &[2.0; 4], 1e-12, 1e-10, 5_000_000);
        assert!((r.value - one.powi(4)).abs() < 1e-9, "{r:?}");
        // kink along a diagonal
        let h = |p: &[f64]| (p[0] - p[1]).abs();
        let r = cubature(&h, &[0.0, 0.0], &[1.0, 1.0], 1e-8, 1e-8, 2_000_000);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn box_integral_separable() {
        // int over [0,1]x[0,2]x[0,pi] of x * y^2 * sin z = 1/2 * 8/3 * 2
        let f = |p: &[f64]| p[0] * p[1] * p[1] * p[2].sin();
        let r = integrate_box(&f, &[0.0, 0.0, 0.0], &[1.0, 2.0, std::f64::consts::PI], 1e-10, 1e-10, 10_000);
        assert!((r.value - 8.0 / 3.0).abs() < 1e-9, "{r:?}");
    }
}
