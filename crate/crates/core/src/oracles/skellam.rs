use crate::model::ModelParams;

/// Terms below this are treated as zero once past the mode.
const NEGLIGIBLE: f64 = 1e-18;

/// `P(D = d)` for `D = Poisson(pt) - Poisson(qt)`.
fn pmf(d: i64, t: f64, params: &ModelParams) -> f64 {
    let (a, b) = (params.p() * t, params.q() * t);
    let k0 = (-d).max(0) as u64;
    let j0 = (d + k0 as i64) as u64;
    // e^{-t} a^{j0} b^{k0} / (j0! k0!)
    let mut term = (-t).exp();
    for i in 1..=j0 {
        term *= a / i as f64;
    }
    for i in 1..=k0 {
        term *= b / i as f64;
    }
    let mut sum = 0.0;
    let (mut j, mut k) = (j0, k0);
    loop {
        sum += term;
        j += 1;
        k += 1;
        term *= a * b / (j as f64 * k as f64);
        if term <= NEGLIGIBLE * sum.max(f64::MIN_POSITIVE) && k as f64 > t || term == 0.0 {
            break;
        }
    }
    sum
}

/// `P(position <= x)` at time `t` for one free particle started at `y0`:
/// the net displacement is a difference of Poisson counts with means
/// `pt` and `qt`.
pub fn skellam_single(y0: i64, x: i64, t: f64, params: &ModelParams) -> f64 {
    let edge = x - y0;
    if t == 0.0 {
        return if edge >= 0 { 1.0 } else { 0.0 };
    }
    // Sum the smaller side outward until terms are negligible.
    let far = 10.0 + 4.0 * t;
    if edge >= 0 {
        let mut tail = 0.0;
        let mut d = edge + 1;
        loop {
            let v = pmf(d, t, params);
            tail += v;
            if (v < 1e-17 && d as f64 > far) || v == 0.0 && d as f64 > t {
                break;
            }
            d += 1;
        }
        1.0 - tail
    } else {
        let mut sum = 0.0;
        let mut d = edge;
        loop {
            let v = pmf(d, t, params);
            sum += v;
            if (v < 1e-17 && (-d) as f64 > far) || v == 0.0 && (-d) as f64 > t {
                break;
            }
            d -= 1;
        }
        sum
    }
}
