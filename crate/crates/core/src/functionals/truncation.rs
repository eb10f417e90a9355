//! The truncation G_eps and the C^2 cutoff h_eps used by the vector-field
//! functionals.

/// Piecewise-linear truncation:
/// 0 on [0, eps], `2t - 2eps` on [eps, 2eps], `t` above, odd-extended.
pub fn truncation_g(t: f64, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "truncation_g needs epsilon > 0");
    if t < 0.0 {
        return -truncation_g(-t, epsilon);
    }
    if t <= epsilon {
        0.0
    } else if t <= 2.0 * epsilon {
        2.0 * t - 2.0 * epsilon
    } else {
        t
    }
}

/// The C^2 bridge of the cutoff on [1, 2]: the quintic Hermite interpolant
/// with (value, slope, curvature) = (0, 0, 0) at t = 1 and (2, 1, 0) at t = 2,
/// h(s) = 16 s^3 - 23 s^4 + 9 s^5 in s = t - 1. Satisfies h(t) <= t on [1, 2].
fn h_profile(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t >= 2.0 {
        t
    } else {
        let s = t - 1.0;
        let s3 = s * s * s;
        s3 * (16.0 + s * (-23.0 + 9.0 * s))
    }
}

fn h_profile_d1(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else {
        let s = t - 1.0;
        s * s * (48.0 + s * (-92.0 + 45.0 * s))
    }
}

fn h_profile_d2(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        let s = t - 1.0;
        s * (96.0 + s * (-276.0 + 180.0 * s))
    }
}

/// `h_eps(t) = eps * h(t / eps)`: vanishes on [0, eps], equals `t` above
/// `2 eps`. `eps = 0` is the sharp limit `h_0(t) = t`.
pub fn cutoff_h(t: f64, epsilon: f64) -> f64 {
    debug_assert!(t >= 0.0, "cutoff_h is defined for t >= 0");
    if epsilon == 0.0 {
        return t;
    }
    epsilon * h_profile(t / epsilon)
}

pub fn cutoff_h_d1(t: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 1.0;
    }
    h_profile_d1(t / epsilon)
}

pub fn cutoff_h_d2(t: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    h_profile_d2(t / epsilon) / epsilon
}
