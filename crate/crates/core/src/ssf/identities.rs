use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moi::{moi_eval, MoiRequest};
use crate::scalar_functions::{class_witness, divided_difference, ClassTag, ScalarFunction};
use crate::spectral_action::remainder_trace;
use crate::trace_algebra::{AlgebraElement, SelfAdjointOperator};
use crate::C64;

/// `u(λ) = λ − i`.
fn u(x: f64) -> C64 {
    C64::new(x, -1.0)
}

/// `|f^{[n−1]}(λ₀, …, λ_{n−1}) − Σ_p Σ_{0<j₁<…<j_p≤n−1} (−1)^{n−1−p}
/// (fu^p)^{[p]}(λ₀, λ_{j₁}, …, λ_{j_p}) u^{−1}(λ₁)⋯u^{−1}(λ_{n−1})|`.
pub fn divided_difference_expansion_defect(f: &ScalarFunction, nodes: &[f64]) -> Result<f64> {
    if nodes.is_empty() || nodes.len() > 20 {
        return Err(Error::domain(format!(
            "need 1 to 20 nodes, got {}",
            nodes.len()
        )));
    }
    let m = nodes.len() - 1;
    let lhs = divided_difference(f, nodes)?;
    let powers: Vec<ScalarFunction> = (0..=m).map(|p| f.times_u_power(p as i32)).collect();
    let mut sum = C64::new(0.0, 0.0);
    for mask in 0u32..(1 << m) {
        let mut sub = vec![nodes[0]];
        sub.extend(
            (0..m)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| nodes[i + 1]),
        );
        let p = sub.len() - 1;
        let sign = if (m - p) % 2 == 0 { 1.0 } else { -1.0 };
        sum += divided_difference(&powers[p], &sub)? * sign;
    }
    let prod: C64 = nodes[1..].iter().map(|&x| u(x).inv()).product();
    Ok((lhs - sum * prod).norm())
}

/// Operator-norm gap between two sides of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDefect {
    pub defect: f64,
    /// Operator norm of the left side.
    pub scale: f64,
}

fn defect(lhs: &AlgebraElement, rhs: &AlgebraElement) -> IdentityDefect {
    IdentityDefect {
        defect: (lhs - rhs).operator_norm(),
        scale: lhs.operator_norm(),
    }
}

/// `T^{H_t,H₀,…,H₀}_{g^{[k]}}(args)`, with `k = 0` meaning `g(H_t)`.
fn moi_or_apply(
    g: &ScalarFunction,
    ht: &SelfAdjointOperator,
    h0: &SelfAdjointOperator,
    args: Vec<&AlgebraElement>,
) -> Result<AlgebraElement> {
    if args.is_empty() {
        ht.apply(g)
    } else {
        Ok(moi_eval(&MoiRequest::new(h0, args, g).with_first(ht))?.element)
    }
}

/// Largest order accepted by [`resolvent_expansion_defect`].
pub const MAX_EXPANSION_ORDER: usize = 6;

/// Compositions `(j₁, …, j_{p+1})` of `total` with `j₁..j_p ≥ 1`,
/// `j_{p+1} ≥ 0`, in lexicographic order.
fn compositions(total: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 0 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for j in 1..=left {
            cur.push(j);
            rec(left - j, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, p, &mut Vec::new(), &mut out);
    out
}

/// Defect of the resolvent expansion of `T^{H_t,H₀,…,H₀}_{f^{[n−1]}}(V, …, V)`
/// in `Ṽ = V(H₀−iI)^{−1}`.
pub fn resolvent_expansion_defect(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
    t: f64,
    n: usize,
) -> Result<IdentityDefect> {
    if n == 0 {
        return Err(Error::domain("order must be at least 1"));
    }
    if n > MAX_EXPANSION_ORDER {
        return Err(Error::capability(format!(
            "expansion enumerated up to order {MAX_EXPANSION_ORDER}, got {n}"
        )));
    }
    f.require_depth(n - 1)?;
    let ht = SelfAdjointOperator::new(h0.element() + &v.scale_real(t))?;
    let r0 = h0.resolvent(C64::new(0.0, 1.0))?;
    let vt = v * &r0;
    let mut vpow = vec![AlgebraElement::identity(h0.algebra())];
    for j in 1..n {
        vpow.push(&vpow[j - 1] * &vt);
    }
    let lhs = moi_or_apply(f, &ht, h0, vec![v; n - 1])?;
    let sign = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
    let mut rhs = (&ht.apply(f)? * &vpow[n - 1]).scale_real(sign(n - 1));
    for p in 1..n {
        let up1 = f.times_u_power(p as i32 + 1);
        let up = f.times_u_power(p as i32);
        for js in compositions(n - 1, p) {
            let last = &vpow[js[p]];
            let tail = &vpow[js[p - 1]] * &r0;
            let mut args: Vec<&AlgebraElement> = js[..p - 1].iter().map(|&j| &vpow[j]).collect();
            args.push(&tail);
            let first = &moi_or_apply(&up1, &ht, h0, args)? * last;
            let lower: Vec<&AlgebraElement> = js[..p - 1].iter().map(|&j| &vpow[j]).collect();
            let second = &(&moi_or_apply(&up, &ht, h0, lower)? * &tail) * last;
            rhs = &rhs + &(&first - &second).scale_real(sign(n - p - 1));
        }
    }
    Ok(defect(&lhs, &rhs))
}

/// Defect of `T^{H₀+V,H₀}_{f^{[1]}}(V) = T^{H₀+V,H₀}_{(fu)^{[1]}}(Ṽ) − f(H₀+V)Ṽ`.
pub fn first_order_resolvent_defect(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
) -> Result<IdentityDefect> {
    let h = SelfAdjointOperator::new(h0.element() + v)?;
    let vt = v * &h0.resolvent(C64::new(0.0, 1.0))?;
    let lhs = moi_or_apply(f, &h, h0, vec![v])?;
    let fu = f.times_u_power(1);
    let rhs = &moi_or_apply(&fu, &h, h0, vec![&vt])? - &(&h.apply(f)? * &vt);
    Ok(defect(&lhs, &rhs))
}

/// `|τ(𝓡_{H₀,f,1}(V))|` against `‖fu‖_∞ (2+‖V‖) ‖(H₀−iI)^{−1}‖₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventBoundReport {
    pub abs_trace: f64,
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// First-order remainder bound for `f ∈ ℌ₁`; the class must be witnessed.
pub fn first_order_resolvent_bound(
    f: &ScalarFunction,
    h0: &SelfAdjointOperator,
    v: &AlgebraElement,
) -> Result<ResolventBoundReport> {
    if !class_witness(f, ClassTag::H(1))?.holds {
        return Err(Error::capability(format!(
            "{}: H_1 witness failed",
            f.name()
        )));
    }
    let abs_trace = remainder_trace(f, h0, v, 1)?.norm();
    let fu = f.times_u_power(1).sup_norm(0)?;
    let r1 = h0.resolvent(C64::new(0.0, 1.0))?.schatten_norm(1.0)?;
    let bound = fu * (2.0 + v.operator_norm()) * r1;
    let ratio = if abs_trace == 0.0 {
        0.0
    } else {
        abs_trace / bound
    };
    Ok(ResolventBoundReport {
        abs_trace,
        bound,
        ratio,
        holds: abs_trace <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts() {
        // compositions of 3 into p positive parts followed by a nonnegative one
        assert_eq!(compositions(3, 1), vec![vec![1, 2], vec![2, 1], vec![3, 0]]);
        assert_eq!(compositions(3, 3), vec![vec![1, 1, 1, 0]]);
        assert_eq!(compositions(2, 2).len(), 1);
    }
}
