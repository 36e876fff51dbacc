/// `sign(vⱼ)·(|vⱼ| − κ)₊`, the minimizer of `½‖b − v‖² + κ‖b‖₁`.
pub fn soft_threshold(v: &[f64], kappa: f64) -> Vec<f64> {
    v.iter().map(|&x| shrink(x, kappa)).collect()
}

#[inline]
fn shrink(x: f64, kappa: f64) -> f64 {
    let m = x.abs() - kappa;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

/// Minimizer of `½‖b − v‖² + κ‖b‖₁` over `‖b‖₁ ≤ R`.
///
/// When plain soft-thresholding is infeasible the optimum is a
/// soft-threshold at the larger level `κ*` whose output has ℓ1 norm exactly
/// `R`; `κ*` is found exactly from the sorted magnitudes.
pub fn constrained_prox(v: &[f64], kappa: f64, radius: f64) -> Vec<f64> {
    let mut out = soft_threshold(v, kappa);
    let norm: f64 = out.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return out;
    }
    let level = l1_ball_threshold(v, radius).max(kappa);
    for (o, &x) in out.iter_mut().zip(v) {
        *o = shrink(x, level);
    }
    out
}

/// The `τ` solving `Σ (|vⱼ| − τ)₊ = R`, assuming `‖v‖₁ > R`.
fn l1_ball_threshold(v: &[f64], radius: f64) -> f64 {
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumulative += m;
        let candidate = (cumulative - radius) / (k + 1) as f64;
        if m > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    tau
}
