//! Closed-form parameter admissibility: the q-chain recursion, alpha thresholds,
//! p-windows, the gamma lower bound, k thresholds, and the stress-field window.
//!
//! Everything here is pure arithmetic over value types. Strictness of a bound
//! (`>` versus `>=`) is carried as data because the two bracketing conventions
//! for the q-chain genuinely differ between the signed-source and unsigned-source
//! results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExponentError {
    #[error("q = {q} violates the bracket: need q {cmp} q0 = {q0}")]
    QBelowChainStart { q: f64, q0: f64, cmp: &'static str },
    #[error("q-chain starting at q0 = {q0} never brackets q = {q}")]
    BracketUnattainable { q0: f64, q: f64 },
    #[error("alpha_tilde = {0} below the stress-window hypothesis alpha_tilde >= 3")]
    AlphaTildeTooSmall(f64),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Which bracketing convention selects N from the q-chain.
///
/// `Strict` is the signed-source convention `q_N < q <= q_{N+1}`;
/// `NonStrict` is the unsigned-source convention `q_N <= q < q_{N+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bracket {
    Strict,
    NonStrict,
}

/// A one-sided real bound together with its strictness.
///
/// `strict = true` means the admissible set is `{x : x > value}` (or `< value`
/// for upper bounds); `strict = false` means the boundary itself is admissible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub strict: bool,
}

impl Bound {
    pub fn strict(value: f64) -> Self {
        Bound { value, strict: true }
    }
    pub fn non_strict(value: f64) -> Self {
        Bound { value, strict: false }
    }
    /// True when `x` lies on the admissible side of this lower bound.
    pub fn admits_above(&self, x: f64) -> bool {
        if self.strict {
            x > self.value
        } else {
            x >= self.value
        }
    }
}

/// A real interval with per-endpoint strictness and an optional side constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub lo_strict: bool,
    pub hi: f64,
    pub hi_strict: bool,
    /// Extra constraint that applies only on part of the interval
    /// (e.g. `q < (p-1)/(p-2)` for `p > 2` in the W^{2,q} window).
    pub note: Option<String>,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, lo_strict: true, hi, hi_strict: true, note: None }
    }
    pub fn half_open_upper(lo: f64, hi: f64) -> Self {
        Interval { lo, lo_strict: true, hi, hi_strict: false, note: None }
    }
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_strict || self.hi_strict))
    }
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_strict { x > self.lo } else { x >= self.lo };
        let below = if self.hi_strict { x < self.hi } else { x <= self.hi };
        above && below
    }
}

/// Input bundle for the admissibility ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentParams {
    /// Diffusion exponent, > 1.
    pub p: f64,
    /// Integrability exponent, >= 2.
    pub q: f64,
    /// Hessian exponent in the third-order functional.
    pub gamma: f64,
    /// Spatial dimension, >= 2.
    pub n: usize,
    /// Calderon-Zygmund constant C(n,q), > 0. Supplied, never looked up.
    pub cz_constant: f64,
    /// Whether the source satisfies f >= tau > 0 (or f <= tau < 0).
    pub f_has_sign: bool,
}

impl ExponentParams {
    pub fn validate(&self) -> Result<(), ExponentError> {
        if !(self.p > 1.0) {
            return Err(ExponentError::Invalid(format!("p = {} must be > 1", self.p)));
        }
        if !(self.q >= 2.0) {
            return Err(ExponentError::Invalid(format!("q = {} must be >= 2", self.q)));
        }
        if self.n < 2 {
            return Err(ExponentError::Invalid(format!("n = {} must be >= 2", self.n)));
        }
        if !(self.cz_constant > 0.0) {
            return Err(ExponentError::Invalid(format!(
                "cz_constant = {} must be > 0",
                self.cz_constant
            )));
        }
        Ok(())
    }
}

/// The full admissibility ledger for one parameter bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentReport {
    pub q0: f64,
    pub chain: Vec<f64>,
    #[serde(rename = "N")]
    pub n_index: usize,
    pub alpha_threshold: Bound,
    pub p_window: Interval,
    pub gamma_lower: f64,
    pub k_threshold: Bound,
}

const MAX_CHAIN: usize = 64;

/// Runs the recursion `q_N = 2(q_{N-1} - 1)` from `q0` until it brackets `q`,
/// returning the selected index N and the chain through `q_{N+1}`.
pub fn q_chain(q0: f64, q: f64, bracket: Bracket) -> Result<(usize, Vec<f64>), ExponentError> {
    match bracket {
        Bracket::Strict if !(q > q0) => {
            return Err(ExponentError::QBelowChainStart { q, q0, cmp: ">" })
        }
        Bracket::NonStrict if !(q >= q0) => {
            return Err(ExponentError::QBelowChainStart { q, q0, cmp: ">=" })
        }
        _ => {}
    }
    let mut chain = vec![q0];
    for n in 0..MAX_CHAIN {
        let prev = chain[n];
        let next = 2.0 * (prev - 1.0);
        chain.push(next);
        let bracketed = match bracket {
            Bracket::Strict => prev < q && q <= next,
            Bracket::NonStrict => prev <= q && q < next,
        };
        if bracketed {
            return Ok((n, chain));
        }
        // A chain started at q0 <= 2 is non-increasing and will never advance.
        if next <= prev {
            break;
        }
    }
    Err(ExponentError::BracketUnattainable { q0, q })
}

/// Alpha admissibility threshold.
///
/// Signed source: strict threshold `(q - q_N)/(2^N q) * (1-p) + (3-p)/2^N + 1`.
/// Unsigned source: strict `(3-p)/2^N + 1` for N >= 1, non-strict `4 - p` at N = 0.
/// The chain is regenerated from `q0 = 3 + gamma`; `n_index` must come from
/// `q_chain` with the matching bracket.
pub fn alpha_threshold(params: &ExponentParams, n_index: usize) -> Result<Bound, ExponentError> {
    params.validate()?;
    let pow = (2.0f64).powi(n_index as i32);
    if params.f_has_sign {
        let q0 = 3.0 + params.gamma;
        let mut q_n = q0;
        for _ in 0..n_index {
            q_n = 2.0 * (q_n - 1.0);
        }
        let value =
            (params.q - q_n) / (pow * params.q) * (1.0 - params.p) + (3.0 - params.p) / pow + 1.0;
        Ok(Bound::strict(value))
    } else if n_index == 0 {
        Ok(Bound::non_strict(4.0 - params.p))
    } else {
        Ok(Bound::strict((3.0 - params.p) / pow + 1.0))
    }
}

/// Which p-window formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PWindowMode {
    /// Third-order estimates: `2 - 1/C < p < min{2 + 1/(q-1), 2 + 1/C}`.
    ThirdOrder,
    /// W^{2,q} regularity: `|p - 2| < 1/C`, plus `q < (p-1)/(p-2)` when p > 2.
    W2q,
}

pub fn p_window(q: f64, cz_constant: f64, mode: PWindowMode) -> Result<Interval, ExponentError> {
    if !(q >= 2.0) {
        return Err(ExponentError::Invalid(format!("q = {q} must be >= 2")));
    }
    if !(cz_constant > 0.0) {
        return Err(ExponentError::Invalid(format!("C = {cz_constant} must be > 0")));
    }
    let inv_c = 1.0 / cz_constant;
    let window = match mode {
        PWindowMode::ThirdOrder => {
            Interval::open(2.0 - inv_c, (2.0 + 1.0 / (q - 1.0)).min(2.0 + inv_c))
        }
        PWindowMode::W2q => {
            let mut w = Interval::open(2.0 - inv_c, 2.0 + inv_c);
            w.note = Some("for p > 2 additionally q < (p-1)/(p-2)".to_string());
            w
        }
    };
    Ok(window)
}

/// Lower bound on gamma: `max{(p-2)/(p-1), 2-p}`.
pub fn gamma_lower(p: f64) -> f64 {
    ((p - 2.0) / (p - 1.0)).max(2.0 - p)
}

/// Power threshold for the vector field |grad u|^{k-1} grad u:
/// strict `(alpha+1)/2` with a signed source, non-strict `(p+alpha)/2` without.
pub fn k_threshold(p: f64, alpha: f64, f_has_sign: bool) -> Bound {
    if f_has_sign {
        Bound::strict((alpha + 1.0) / 2.0)
    } else {
        Bound::non_strict((p + alpha) / 2.0)
    }
}

/// Stress-field admissibility: sets `q = 2(alpha_tilde - 1)` and returns the
/// half-open window `max{2 - 1/(2 alpha_tilde - 1), 2 - 1/C} < p <= 2`.
pub fn stress_window(
    alpha_tilde: f64,
    _n: usize,
    cz_constant: f64,
) -> Result<(f64, Interval), ExponentError> {
    if !(alpha_tilde >= 3.0) {
        return Err(ExponentError::AlphaTildeTooSmall(alpha_tilde));
    }
    if !(cz_constant > 0.0) {
        return Err(ExponentError::Invalid(format!("C = {cz_constant} must be > 0")));
    }
    let q = 2.0 * (alpha_tilde - 1.0);
    let lo = (2.0 - 1.0 / (2.0 * alpha_tilde - 1.0)).max(2.0 - 1.0 / cz_constant);
    Ok((q, Interval::half_open_upper(lo, 2.0)))
}

/// Builds the full ledger for one parameter bundle. The chain starts at
/// `q0 = 3 + gamma` and the bracket follows the source-sign convention.
/// `k_threshold` is evaluated at the infimum admissible alpha.
pub fn report(params: &ExponentParams) -> Result<ExponentReport, ExponentError> {
    params.validate()?;
    let q0 = 3.0 + params.gamma;
    let bracket = if params.f_has_sign { Bracket::Strict } else { Bracket::NonStrict };
    let (n_index, chain) = q_chain(q0, params.q, bracket)?;
    let alpha = alpha_threshold(params, n_index)?;
    let window = p_window(params.q, params.cz_constant, PWindowMode::ThirdOrder)?;
    Ok(ExponentReport {
        q0,
        chain,
        n_index,
        alpha_threshold: alpha,
        p_window: window,
        gamma_lower: gamma_lower(params.p),
        k_threshold: k_threshold(params.p, alpha.value, params.f_has_sign),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-12;

    fn params(p: f64, q: f64, gamma: f64, signed: bool) -> ExponentParams {
        ExponentParams { p, q, gamma, n: 2, cz_constant: 1.0, f_has_sign: signed }
    }

    #[test]
    fn chain_strict_examples() {
        let (n, chain) = q_chain(4.0, 8.0, Bracket::Strict).unwrap();
        assert_eq!(n, 1);
        assert_eq!(chain, vec![4.0, 6.0, 10.0]);

        let (n, chain) = q_chain(5.0, 14.0, Bracket::Strict).unwrap();
        assert_eq!(n, 1);
        assert_eq!(chain, vec![5.0, 8.0, 14.0]);
    }

    #[test]
    fn chain_nonstrict_boundary() {
        let (n, chain) = q_chain(4.0, 4.0, Bracket::NonStrict).unwrap();
        assert_eq!(n, 0);
        assert_eq!(chain, vec![4.0, 6.0]);
    }

    #[test]
    fn chain_rejects_q_below_start() {
        assert!(q_chain(4.0, 3.0, Bracket::Strict).is_err());
        assert!(q_chain(4.0, 4.0, Bracket::Strict).is_err());
        assert!(q_chain(4.0, 3.9, Bracket::NonStrict).is_err());
    }

    #[test]
    fn chain_stalls_at_q0_two() {
        // q0 = 2 fixes the recursion at 2 forever; no q > 2 is ever bracketed.
        assert!(matches!(
            q_chain(2.0, 3.0, Bracket::Strict),
            Err(ExponentError::BracketUnattainable { .. })
        ));
    }

    #[test]
    fn chain_strictly_increasing_above_two() {
        let (_, chain) = q_chain(4.0, 1000.0, Bracket::Strict).unwrap();
        assert!(chain.len() >= 8);
        for w in chain.windows(2) {
            assert!(w[1] > w[0]);
            assert_abs_diff_eq!(w[1], 2.0 * (w[0] - 1.0), epsilon = TOL);
        }
    }

    #[test]
    fn alpha_threshold_signed_example() {
        // p=2, q=8, gamma=1 => q0=4, N=1, q_1=6: (2/16)(-1) + 0.5 + 1 = 1.375
        let b = alpha_threshold(&params(2.0, 8.0, 1.0, true), 1).unwrap();
        assert!(b.strict);
        assert_abs_diff_eq!(b.value, 1.375, epsilon = TOL);
    }

    #[test]
    fn alpha_threshold_unsigned() {
        let b = alpha_threshold(&params(2.0, 8.0, 1.0, false), 1).unwrap();
        assert!(b.strict);
        assert_abs_diff_eq!(b.value, 1.5, epsilon = TOL);

        let b0 = alpha_threshold(&params(2.0, 4.0, 1.0, false), 0).unwrap();
        assert!(!b0.strict);
        assert_abs_diff_eq!(b0.value, 2.0, epsilon = TOL);
    }

    #[test]
    fn alpha_threshold_decreasing_in_n() {
        // alpha_k < alpha_{k-1} over an admissible (p, q) grid with p < 2 + 1/(q-1).
        for &p in &[1.5, 1.8, 2.0, 2.1] {
            for &q in &[5.0, 8.0, 12.0, 20.0] {
                if p >= 2.0 + 1.0 / (q - 1.0) {
                    continue;
                }
                let pr = params(p, q, 1.0, true);
                let mut prev = f64::INFINITY;
                for n in 0..5 {
                    let b = alpha_threshold(&pr, n).unwrap();
                    assert!(b.value < prev, "alpha not decreasing at p={p} q={q} N={n}");
                    assert!(b.value > 1.0, "alpha threshold <= 1 at p={p} q={q} N={n}");
                    prev = b.value;
                }
            }
        }
    }

    #[test]
    fn p_window_examples() {
        let w = p_window(2.0, 1.0, PWindowMode::W2q).unwrap();
        assert_abs_diff_eq!(w.lo, 1.0, epsilon = TOL);
        assert_abs_diff_eq!(w.hi, 3.0, epsilon = TOL);
        assert!(w.note.is_some());

        let w = p_window(4.0, 2.0, PWindowMode::ThirdOrder).unwrap();
        assert_abs_diff_eq!(w.lo, 1.5, epsilon = TOL);
        assert_abs_diff_eq!(w.hi, 7.0 / 3.0, epsilon = TOL);

        let w = p_window(4.0, 1.25, PWindowMode::ThirdOrder).unwrap();
        assert_abs_diff_eq!(w.lo, 1.2, epsilon = TOL);
        assert_abs_diff_eq!(w.hi, 7.0 / 3.0, epsilon = TOL);
    }

    #[test]
    fn p_window_straddles_two() {
        for &q in &[2.0, 4.0, 9.5, 30.0] {
            for &c in &[0.5, 1.0, 2.0, 17.0] {
                for mode in [PWindowMode::ThirdOrder, PWindowMode::W2q] {
                    let w = p_window(q, c, mode).unwrap();
                    assert!(w.contains(2.0), "p=2 outside window q={q} C={c}");
                    assert!(!w.is_empty());
                }
            }
        }
    }

    #[test]
    fn gamma_lower_examples() {
        assert_abs_diff_eq!(gamma_lower(2.0), 0.0, epsilon = TOL);
        assert_abs_diff_eq!(gamma_lower(1.5), 0.5, epsilon = TOL);
        assert_abs_diff_eq!(gamma_lower(3.0), 0.5, epsilon = TOL);
    }

    #[test]
    fn k_threshold_examples() {
        let b = k_threshold(2.0, 2.0, true);
        assert!(b.strict);
        assert_abs_diff_eq!(b.value, 1.5, epsilon = TOL);

        let b = k_threshold(2.0, 2.0, false);
        assert!(!b.strict);
        assert_abs_diff_eq!(b.value, 2.0, epsilon = TOL);

        let b = k_threshold(1.9, 2.1, true);
        assert_abs_diff_eq!(b.value, 1.55, epsilon = TOL);
    }

    #[test]
    fn stress_window_examples() {
        let (q, w) = stress_window(3.0, 2, 1.25).unwrap();
        assert_abs_diff_eq!(q, 4.0, epsilon = TOL);
        assert_abs_diff_eq!(w.lo, 1.8, epsilon = TOL);
        assert_abs_diff_eq!(w.hi, 2.0, epsilon = TOL);
        assert!(w.lo_strict && !w.hi_strict);

        let (q, w) = stress_window(3.0, 2, 10.0).unwrap();
        assert_abs_diff_eq!(q, 4.0, epsilon = TOL);
        assert_abs_diff_eq!(w.lo, 1.9, epsilon = TOL);

        let (q, w) = stress_window(4.0, 2, 1.0).unwrap();
        assert_abs_diff_eq!(q, 6.0, epsilon = TOL);
        assert_abs_diff_eq!(w.lo, 2.0 - 1.0 / 7.0, epsilon = TOL);

        assert!(stress_window(2.5, 2, 1.0).is_err());
    }

    #[test]
    fn stress_window_nonempty_for_finite_c() {
        for &c in &[1e-3, 0.1, 1.0, 100.0, 1e9] {
            for &at in &[3.0, 4.0, 11.0] {
                let (_, w) = stress_window(at, 2, c).unwrap();
                assert!(w.lo < 2.0);
                assert!(!w.is_empty());
            }
        }
    }

    #[test]
    fn report_golden() {
        let pr = params(2.0, 8.0, 1.0, true);
        let rep = report(&pr).unwrap();
        assert_eq!(rep.q0, 4.0);
        assert_eq!(rep.n_index, 1);
        assert_eq!(rep.chain, vec![4.0, 6.0, 10.0]);
        assert_abs_diff_eq!(rep.alpha_threshold.value, 1.375, epsilon = TOL);
        assert_abs_diff_eq!(rep.k_threshold.value, 1.1875, epsilon = TOL);
        assert_abs_diff_eq!(rep.gamma_lower, 0.0, epsilon = TOL);

        // JSON field names are part of the external interface.
        let js = serde_json::to_value(&rep).unwrap();
        for key in ["q0", "chain", "N", "alpha_threshold", "p_window", "gamma_lower", "k_threshold"]
        {
            assert!(js.get(key).is_some(), "missing report key {key}");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// The selected index always brackets q and every link obeys the
            /// doubling recursion exactly.
            #[test]
            fn chain_brackets_and_recurses(q0 in 2.05f64..6.0, step in 0.01f64..50.0) {
                let q = q0 + step;
                let (n, chain) = q_chain(q0, q, Bracket::Strict).unwrap();
                prop_assert_eq!(chain[0], q0);
                for w in chain.windows(2) {
                    prop_assert_eq!(w[1], 2.0 * (w[0] - 1.0));
                }
                prop_assert!(chain[n] < q && q <= chain[n + 1]);
            }

            /// A signed source never demands more of k than an unsigned one.
            #[test]
            fn signed_k_threshold_is_weaker(p in 1.0001f64..4.0, alpha in -3.0f64..4.0) {
                prop_assert!(
                    k_threshold(p, alpha, true).value <= k_threshold(p, alpha, false).value
                );
            }

            #[test]
            fn gamma_lower_nonnegative(p in 1.0001f64..4.0) {
                prop_assert!(gamma_lower(p) >= 0.0);
            }
        }
    }
}
