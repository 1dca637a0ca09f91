//! Monotone reparametrisations built from the quintic smoothstep
//! `s(u) = 6u^5 - 15u^4 + 10u^3`, which is exactly 0 / 1 outside `[0, 1]`.

pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (u * (6.0 * u - 15.0) + 10.0)
    }
}

/// `int_0^u s`, equal to `u - 1/2` for `u >= 1`.
fn smoothstep_integral(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        u - 0.5
    } else {
        let u4 = u * u * u * u;
        u4 * (u * (u - 3.0) + 2.5)
    }
}

/// 1 below `lo`, 0 above `hi`, smooth in between.
pub fn cutoff(x: f64, lo: f64, hi: f64) -> f64 {
    1.0 - smoothstep((x - lo) / (hi - lo))
}

/// Increasing, zero for `y <= 0`, `>= y` and slope `>= 1` for `y >= 1`.
pub fn phi_plus(y: f64) -> f64 {
    2.0 * smoothstep_integral(y)
}

/// `phi-(y) = -phi+(-y)`.
pub fn phi_minus(y: f64) -> f64 {
    -phi_plus(-y)
}

/// Zero below `start`, slope exactly 1 above `start + width`.
pub fn ramp(y: f64, start: f64, width: f64) -> f64 {
    width * smoothstep_integral((y - start) / width)
}

/// Gluing ramp: zero for `y <= 0`, identity for `y >= w`, increasing.
pub fn psi(y: f64, w: f64) -> f64 {
    y * smoothstep(y / w)
}

/// Gluing ramp: identity for `y <= a`, constant `c` for `y >= y1`
/// (`a < c`, `a < y1`), monotone cubic Hermite in between.
pub fn plateau(y: f64, a: f64, c: f64, y1: f64) -> f64 {
    if y <= a {
        return y;
    }
    if y >= y1 {
        return c;
    }
    let u = (y - a) / (y1 - a);
    // slope 1 at a in y-units; capped at 3 to keep the cubic monotone
    let k = ((y1 - a) / (c - a)).min(3.0);
    a + (c - a) * (k * u + (3.0 - 2.0 * k) * u * u + (k - 2.0) * u * u * u)
}
