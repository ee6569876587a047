//! Adaptive Gauss–Kronrod and fixed Gauss–Legendre rules.

use crate::C64;

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
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

/// Result of a numerical integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kron += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm(), abs * h.abs())
}

/// Adaptive 7/15-point Gauss–Kronrod on `[a, b]` until the summed error
/// estimate drops below `max(abs_tol, rel_tol·∫|f|)`.
pub fn integrate_complex(
    f: impl Fn(f64) -> C64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Quadrature<C64> {
    if a == b {
        return Quadrature {
            value: C64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        };
    }
    const MAX_PANELS: usize = 4000;
    // (a, b, value, error, |f| integral)
    let mut panels: Vec<(f64, f64, C64, f64, f64)> = Vec::new();
    let (v, e, m) = gk15(&f, a, b);
    panels.push((a, b, v, e, m));
    let mut evaluations = 15;
    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        let total_abs: f64 = panels.iter().map(|p| p.4).sum();
        if total_err <= abs_tol.max(rel_tol * total_abs) || panels.len() >= MAX_PANELS {
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty panel list");
        let (pa, pb, ..) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa.min(pb) || mid >= pa.max(pb) {
            break;
        }
        for (x0, x1) in [(pa, mid), (mid, pb)] {
            let (v, e, m) = gk15(&f, x0, x1);
            panels.push((x0, x1, v, e, m));
        }
        evaluations += 30;
    }
    // sum in left-to-right order for reproducibility
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    Quadrature {
        value: panels.iter().map(|p| p.2).sum(),
        error: panels.iter().map(|p| p.3).sum(),
        evaluations,
    }
}

pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Quadrature<f64> {
    let q = integrate_complex(|x| C64::new(f(x), 0.0), a, b, abs_tol, rel_tol);
    Quadrature {
        value: q.value.re,
        error: q.error,
        evaluations: q.evaluations,
    }
}

/// Integral over `[a, b]` split at the given interior breakpoints.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Quadrature<f64> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let pieces = (pts.len() - 1).max(1) as f64;
    let mut out = Quadrature {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in pts.windows(2) {
        let q = integrate(&f, w[0], w[1], abs_tol / pieces, rel_tol);
        out.value += q.value;
        out.error += q.error;
        out.evaluations += q.evaluations;
    }
    out
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
