use serde::{Deserialize, Serialize};

use crate::math;

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = math::ln_gamma(a + b) - math::ln_gamma(a) - math::ln_gamma(b)
        + a * math::ln(x)
        + b * math::ln(1.0 - x);
    let front = math::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=500 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    #[serde(with = "crate::nonfinite")]
    pub t: f64,
    #[serde(with = "crate::nonfinite")]
    pub df: f64,
    /// `None` for degenerate samples.
    pub p: Option<f64>,
    pub degenerate: bool,
}

impl TTest {
    fn degenerate() -> Self {
        TTest {
            t: f64::NAN,
            df: f64::NAN,
            p: None,
            degenerate: true,
        }
    }
}

/// Welch's unequal-variance two-sample t-test with Welch–Satterthwaite df.
/// Degenerate when either sample has fewer than two values or both have zero
/// variance.
pub fn welch_t(a: &[f64], b: &[f64]) -> TTest {
    if a.len() < 2 || b.len() < 2 || a.iter().chain(b).any(|x| !x.is_finite()) {
        return TTest::degenerate();
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (math::sample_variance(a) / na, math::sample_variance(b) / nb);
    let se2 = va + vb;
    if se2.is_nan() || se2 <= 0.0 {
        return TTest::degenerate();
    }
    let t = (math::mean(a) - math::mean(b)) / math::sqrt(se2);
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    TTest {
        t,
        df,
        p: Some(student_t_two_sided(t, df)),
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    #[serde(with = "crate::nonfinite")]
    pub z: f64,
    #[serde(with = "crate::nonfinite")]
    pub p: f64,
}

/// Pooled two-proportion z-test; `None` when a group is empty or the pooled
/// rate is 0 or 1.
pub fn two_proportion_z(x1: usize, n1: usize, x2: usize, n2: usize) -> Option<ZTest> {
    if n1 == 0 || n2 == 0 {
        return None;
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = math::sqrt(pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f));
    if se.is_nan() || se <= 0.0 {
        return None;
    }
    let z = (x1 as f64 / n1f - x2 as f64 / n2f) / se;
    Some(ZTest {
        z,
        p: math::erfc(z.abs() / core::f64::consts::SQRT_2),
    })
}
