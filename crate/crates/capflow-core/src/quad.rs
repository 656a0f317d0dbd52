//! Adaptive Gauss-Kronrod quadrature (G10/K21 pair) with a global error queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for every adaptive integral in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections applied to any one subinterval.
    pub max_depth: u32,
    /// Force the square-root substitution at the inner boundary even when
    /// the boundary is not a horizon.
    pub endpoint_singular: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_depth: 40,
            endpoint_singular: false,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_depth < 1 {
            return Err(Error::Domain(format!(
                "quadrature tolerances must be positive and depth >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// The spec used for integrals nested inside another integrand.
    pub(crate) fn inner(&self) -> Self {
        Self {
            rel_tol: (self.rel_tol * 1e-2).max(1e-14),
            abs_tol: self.abs_tol * 1e-2,
            ..*self
        }
    }
}

/// A value together with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub const fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }

    pub const fn exact(value: f64) -> Self {
        Self { value, err: 0.0 }
    }

    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            if self.err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.err / self.value.abs()
        }
    }
}

/// Result of one adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub err: f64,
    /// Estimate of the integral of |f|.
    pub abs: f64,
    pub evals: usize,
}

impl Quad {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.value, self.err)
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_058_711_820,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Rule {
    value: f64,
    err: f64,
    abs: f64,
    roundoff: bool,
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Rule> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { x })
        }
    };
    let fc = eval(c)?;
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = (WGK[10] * fc).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = eval(c - x)?;
        let f2 = eval(c + x)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * h;
    let abs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs;
    let roundoff = err <= floor;
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    Ok(Rule {
        value,
        err,
        abs,
        roundoff,
    })
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
    depth: u32,
    roundoff: bool,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
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
        self.err.total_cmp(&other.err)
    }
}

const MAX_SEGMENTS: usize = 20_000;

/// Integrate `f` over the finite interval [a, b].
///
/// Subintervals are bisected in order of decreasing error until the summed
/// error meets `max(abs_tol, rel_tol * |I|)`. When the worst subinterval is
/// already at its rounding floor the result is returned with the error
/// estimate it has; hitting `max_depth` otherwise is an error.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quad> {
    integrate_points(f, &[a, b], spec)
}

/// As [`integrate`] over [points[0], points[last]], with the listed interior
/// points as initial subdivisions. Use it where the integrand has kinks or
/// jumps in a low derivative, which the error formula would underrate.
pub fn integrate_points<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Quad> {
    let (a, b) = match (points.first(), points.last()) {
        (Some(&a), Some(&b)) if points.len() >= 2 => (a, b),
        _ => return Err(Error::Domain("integration needs at least two points".into())),
    };
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("integration points must be nondecreasing".into()));
    }
    if a == b {
        return Ok(Quad {
            value: 0.0,
            err: 0.0,
            abs: 0.0,
            evals: 0,
        });
    }
    let mut evals = 0;
    let mut heap = BinaryHeap::new();
    for w in points.windows(2).filter(|w| w[1] > w[0]) {
        let r = gk21(&mut f, w[0], w[1])?;
        evals += 21;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: r.value,
            err: r.err,
            abs: r.abs,
            depth: 0,
            roundoff: r.roundoff,
        });
    }
    let (mut total, mut total_err) = sums(&heap);
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let worst = heap.peek().expect("heap never empties");
        if worst.roundoff {
            break;
        }
        if worst.depth >= spec.max_depth || heap.len() >= MAX_SEGMENTS {
            let (value, err) = sums(&heap);
            return Err(Error::Quadrature { a, b, value, err });
        }
        let seg = heap.pop().expect("heap never empties");
        let mid = 0.5 * (seg.a + seg.b);
        let left = gk21(&mut f, seg.a, mid)?;
        let right = gk21(&mut f, mid, seg.b)?;
        evals += 42;
        total += left.value + right.value - seg.value;
        total_err += left.err + right.err - seg.err;
        for (lo, hi, r) in [(seg.a, mid, left), (mid, seg.b, right)] {
            heap.push(Segment {
                a: lo,
                b: hi,
                value: r.value,
                err: r.err,
                abs: r.abs,
                depth: seg.depth + 1,
                roundoff: r.roundoff,
            });
        }
        // Running sums drift; resynchronise now and then.
        if heap.len() % 64 == 0 {
            (total, total_err) = sums(&heap);
        }
    }
    let (value, err) = sums(&heap);
    let abs = heap.iter().map(|s| s.abs).sum();
    Ok(Quad { value, err, abs, evals })
}

fn sums(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum();
    let err = segs.iter().map(|s| s.err).sum();
    (value, err)
}
