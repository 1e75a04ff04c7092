//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used only as an oracle: normalizations, moment checks and the
//! integral form of the range density. The interval with the largest error
//! estimate is bisected until the summed estimate meets the tolerance.

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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl QuadConfig {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

struct Segment {
    lo: f64,
    hi: f64,
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

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrate `f` over the finite interval `[lo, hi]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> Integral {
    if lo == hi {
        return Integral {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        };
    }
    if hi < lo {
        let mut r = integrate(f, hi, lo, cfg);
        r.value = -r.value;
        return r;
    }
    let (value, error) = kronrod15(&mut f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { lo, hi, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) && heap.len() < cfg.max_intervals {
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        let (lv, le) = kronrod15(&mut f, worst.lo, mid);
        let (rv, re) = kronrod15(&mut f, mid, worst.hi);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: rv,
            error: re,
        });
    }
    // re-sum to shed the drift accumulated by the incremental updates
    let intervals = heap.len();
    let (value, abs_error) = heap
        .into_sorted_vec()
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Integral {
        value,
        abs_error,
        intervals,
    }
}

/// Integrate `f` over a sequence of breakpoints, summing the pieces.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], cfg: &QuadConfig) -> Integral {
    let mut out = Integral {
        value: 0.0,
        abs_error: 0.0,
        intervals: 0,
    };
    for w in breaks.windows(2) {
        let part = integrate(&mut f, w[0], w[1], cfg);
        out.value += part.value;
        out.abs_error += part.abs_error;
        out.intervals += part.intervals;
    }
    out
}

/// Iterated integral `∫_{x_lo}^{x_hi} ∫_{y_lo(x)}^{y_hi(x)} f(x, y) dy dx`.
pub fn integrate_2d<F, L, H>(mut f: F, x_lo: f64, x_hi: f64, y_lo: L, y_hi: H, cfg: &QuadConfig) -> Integral
where
    F: FnMut(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_cfg = QuadConfig {
        abs_tol: cfg.abs_tol * 0.1,
        ..*cfg
    };
    let mut inner_err = 0.0f64;
    let outer = integrate(
        |x| {
            let r = integrate(|y| f(x, y), y_lo(x), y_hi(x), &inner_cfg);
            inner_err = inner_err.max(r.abs_error);
            r.value
        },
        x_lo,
        x_hi,
        cfg,
    );
    Integral {
        value: outer.value,
        abs_error: outer.abs_error + inner_err * (x_hi - x_lo).abs(),
        intervals: outer.intervals,
    }
}
