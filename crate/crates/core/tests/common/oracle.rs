//! Brute-force references: quadrature for the incomplete gamma and for the
//! defining distance integrals, bisection for quantiles, and the literal
//! triple-sum form of the Anderson-Darling distance.

use super::quad::{integrate, integrate_pieces};

/// ∫₀ˣ t^{s-1} e^{-t} dt, with `x` given as `ln x`.
fn lower_integral_ln(s: f64, ln_x: f64) -> f64 {
    if s < 1.0 {
        // u = t^s removes the singularity at the origin
        let upper = (s * ln_x).exp();
        integrate(|u: f64| (-u.powf(1.0 / s)).exp(), 0.0, upper, 1e-17) / s
    } else {
        let x = ln_x.exp();
        integrate(|t: f64| ((s - 1.0) * t.ln() - t).exp(), 0.0, x, 1e-17)
    }
}

fn upper_integral(s: f64, x: f64) -> f64 {
    let end = x.max(s) + 80.0 + 15.0 * s.sqrt();
    let f = |t: f64| ((s - 1.0) * t.ln() - t).exp();
    if x < 1.0 && s < 1.0 {
        // singular part near zero handled by the substitution
        let head = lower_integral_ln(s, 0.0) - lower_integral_ln(s, x.ln());
        head + integrate(f, 1.0, end, 1e-17)
    } else {
        integrate(f, x, end, 1e-17)
    }
}

/// P(s, x) by quadrature, normalizing by the quadrature value of Γ(s).
pub fn reg_lower_gamma(s: f64, x: f64) -> f64 {
    reg_lower_gamma_ln(s, x.ln())
}

pub fn reg_lower_gamma_ln(s: f64, ln_x: f64) -> f64 {
    let lower = lower_integral_ln(s, ln_x);
    let upper = upper_integral(s, ln_x.exp());
    lower / (lower + upper)
}

pub fn chi2_cdf(x: f64, m: u32) -> f64 {
    reg_lower_gamma(m as f64 / 2.0, x / 2.0)
}

/// Bisection for an increasing function on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Γ(m/2) for integer `m` via the half-integer recurrence.
pub fn gamma_half_integer(m: u32) -> f64 {
    let (mut g, mut z) = if m % 2 == 0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while z < m as f64 / 2.0 {
        g *= z;
        z += 1.0;
    }
    g
}

pub fn chi2_density(t: f64, m: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let k = m as f64 / 2.0;
    ((k - 1.0) * t.ln() - 0.5 * t).exp() / (2f64.powf(k) * gamma_half_integer(m))
}

/// Anderson-Darling integral ∫ (P_N - G)² / (G(1-G)) dG by quadrature in the
/// original variable, split at the atoms. `cdf_sf` returns `(G, 1 - G)`.
pub fn ad_by_quadrature<C, D>(atoms: &[f64], jumps: &[f64], cdf_sf: C, density: D) -> f64
where
    C: Fn(f64) -> (f64, f64),
    D: Fn(f64) -> f64,
{
    weighted_by_quadrature(atoms, jumps, &cdf_sf, &density, true)
}

/// Cramér-von Mises integral ∫ (P_N - G)² dG by quadrature.
pub fn cvm_by_quadrature<C, D>(atoms: &[f64], jumps: &[f64], cdf_sf: C, density: D) -> f64
where
    C: Fn(f64) -> (f64, f64),
    D: Fn(f64) -> f64,
{
    weighted_by_quadrature(atoms, jumps, &cdf_sf, &density, false)
}

fn weighted_by_quadrature(
    atoms: &[f64],
    jumps: &[f64],
    cdf_sf: &dyn Fn(f64) -> (f64, f64),
    density: &dyn Fn(f64) -> f64,
    anderson: bool,
) -> f64 {
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[a].total_cmp(&atoms[b]));
    let ys: Vec<f64> = order.iter().map(|&i| atoms[i]).collect();
    let mut cum = Vec::with_capacity(ys.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += jumps[i];
        cum.push(acc);
    }
    let last = *ys.last().unwrap();
    let mut breaks = vec![0.0];
    breaks.extend(ys.iter().copied());
    breaks.push(last.max(10.0) + 200.0);
    let step = |t: f64| -> Option<f64> {
        // value of P_N on the piece containing t; None means "identically 1"
        match ys.iter().rposition(|&y| y <= t) {
            None => Some(0.0),
            Some(k) if k + 1 == ys.len() => None,
            Some(k) => Some(cum[k]),
        }
    };
    let integrand = |t: f64| {
        let (g, s) = cdf_sf(t);
        let diff = match step(t) {
            Some(w) => w - g,
            None => s,
        };
        let weight = if anderson { 1.0 / (g * s) } else { 1.0 };
        let v = diff * diff * weight * density(t);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_pieces(integrand, &breaks, 1e-13)
}

/// The triple-sum statement of the closed form, O(N³), with the same clamp
/// as the production kernel.
pub fn ad_triple_sum(sorted_u: &[f64], sorted_jumps: &[f64]) -> f64 {
    let eps = 1e-15;
    let u: Vec<f64> = sorted_u.iter().map(|v| v.clamp(eps, 1.0 - eps)).collect();
    let j = sorted_jumps;
    let n = u.len();
    let c = |i: usize| ((u[i + 1] * (1.0 - u[i])) / (u[i] * (1.0 - u[i + 1]))).ln();
    let cs = |i: usize| ((1.0 - u[i + 1]) / (1.0 - u[i])).ln();
    let mut total = 0.0;
    // 0-based: i runs over 0..n-1, j over 0..i, k over j+1..=i
    for i in 0..n.saturating_sub(1) {
        let mut cross = 0.0;
        for jj in 0..i {
            for k in jj + 1..=i {
                cross += j[jj] * j[k];
            }
        }
        total += 2.0 * cross * c(i);
        let sq: f64 = (0..=i).map(|jj| j[jj] * j[jj]).sum();
        total += sq * c(i);
        let lin: f64 = (0..=i).map(|jj| j[jj]).sum();
        total += 2.0 * lin * cs(i);
        total -= cs(i);
    }
    total - (u[n - 1] * (1.0 - u[0])).ln() - 1.0
}

/// sup_t |P_N(t) - G(t)| over sorted cdf values and jumps.
pub fn sup_distance(sorted_u: &[f64], sorted_jumps: &[f64]) -> f64 {
    let mut before = 0.0;
    let mut sup: f64 = 0.0;
    for (u, j) in sorted_u.iter().zip(sorted_jumps) {
        let after = before + j;
        sup = sup.max((before - u).abs()).max((after - u).abs());
        before = after;
    }
    sup
}

/// Type-1 empirical quantiles by counting, independent of any sorting in
/// the production code: the smallest sample value `v` with `#{x <= v} >= p r`.
pub fn type1_quantile_by_counting(values: &[f64], p: f64) -> f64 {
    let r = values.len() as f64;
    let mut best = f64::INFINITY;
    for &v in values {
        let count = values.iter().filter(|&&x| x <= v).count() as f64;
        if count >= p * r - 1e-9 && v < best {
            best = v;
        }
    }
    best
}
