//! Coordinate-wise re-estimation of the mixture parameters.
//!
//! Each update is the exact optimum of the bound in its own block with the
//! other blocks held fixed, so none of them can worsen the bound:
//!
//! * λ_l = α_l / π_l.
//! * R_i(s|l) = α_l q_li(s) / (λ_l Σ_k α_k q_ki(s) Π_{j≠i} ρ_{lkj}), node by node.
//! * α_k ∝ exp(-c_k) with c_k = L_F(Q_k) - Σ_i Σ_s q_ki(s) ln R_i(s|k) - ln λ_k
//!   + Σ_l λ_l Σ_S R(S|l) Q(S|k); with λ fixed the bound is linear in α plus
//!   Σ α ln α.
//! * m_li = tanh(h_li + ½ ln(R_i(+|l)/R_i(-|l)) - ½ Σ_l' λ_l' (R_i(+|l') -
//!   R_i(-|l')) Π_{j≠i} ρ_{l'lj}), site by site, where h_li is the usual
//!   mean-field input at temperature T.

use super::bound::{component_terms, expected_log_smoothing, q_pair, Overlaps};
use super::params::{MixtureParams, SMOOTHING_FLOOR};
use crate::error::{Error, Result};
use crate::model::{Network, Temperature};

/// Set every λ_l to its optimum α_l / π_l.
pub fn update_lambdas(params: &MixtureParams) -> MixtureParams {
    let mut p = params.clone();
    let ov = Overlaps::new(&p);
    set_lambdas(&mut p, &ov);
    p
}

pub(crate) fn set_lambdas(p: &mut MixtureParams, ov: &Overlaps) {
    for l in 0..p.n_components() {
        let pi = ov.overlap(p, l);
        p.lambdas[l] = (p.alphas[l] / pi).max(f64::MIN_POSITIVE);
    }
}

/// One node-by-node pass maximizing I_λ over the smoothing tables.
///
/// Each table is renormalized to R_i(+|l) + R_i(-|l) = 1 with λ_l rescaled
/// to compensate, which leaves I_λ unchanged and keeps the products finite.
/// Entries below [`SMOOTHING_FLOOR`] are raised to it and counted.
pub fn update_smoothing(params: &MixtureParams) -> MixtureParams {
    let mut p = params.clone();
    let mut ov = Overlaps::new(&p);
    smoothing_pass(&mut p, &mut ov);
    p
}

pub(crate) fn smoothing_pass(p: &mut MixtureParams, ov: &mut Overlaps) {
    let k = p.n_components();
    let n = p.n_nodes();
    for l in 0..k {
        let a = p.alphas[l];
        if a <= 0.0 {
            continue;
        }
        for i in 0..n {
            let own = q_pair(p.means[l][i]);
            let mut denom = [0.0; 2];
            for c in 0..k {
                let w = p.alphas[c] * ov.r_without(l, c, i);
                let q = q_pair(p.means[c][i]);
                denom[0] += w * q[0];
                denom[1] += w * q[1];
            }
            let mut r = [0.0; 2];
            for s in 0..2 {
                let c = p.lambdas[l] * denom[s];
                r[s] = if c > 0.0 { a * own[s] / c } else { 0.0 };
            }
            let scale = r[0] + r[1];
            if !(scale > 0.0) || !scale.is_finite() {
                continue;
            }
            for v in &mut r {
                *v /= scale;
                if *v < SMOOTHING_FLOOR {
                    *v = SMOOTHING_FLOOR;
                    p.floor_hits += 1;
                }
            }
            p.smoothing[l][i] = r;
            p.lambdas[l] *= scale;
            for c in 0..k {
                ov.set(p, l, c, i);
            }
        }
    }
}

fn check_net(params: &MixtureParams, net: &Network) -> Result<()> {
    if params.n_nodes() != net.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: net.n_nodes(),
            found: params.n_nodes(),
        });
    }
    Ok(())
}

/// Closed-form minimization of the total bound over the mixing weights.
pub fn update_alphas(params: &MixtureParams, net: &Network, t: Temperature) -> Result<MixtureParams> {
    check_net(params, net)?;
    let mut p = params.clone();
    let ov = Overlaps::new(&p);
    alpha_step(&mut p, net, t.value(), &ov);
    Ok(p)
}

pub(crate) fn alpha_step(p: &mut MixtureParams, net: &Network, t: f64, ov: &Overlaps) {
    let k = p.n_components();
    if k == 1 {
        p.alphas[0] = 1.0;
        return;
    }
    let cost: Vec<f64> = (0..k)
        .map(|c| {
            let (e, h) = component_terms(net, &p.means[c], t);
            let coupling: f64 = (0..k).map(|l| p.lambdas[l] * ov.log_r(l, c).exp()).sum();
            e - h - expected_log_smoothing(p, c) - p.lambdas[c].ln() + coupling
        })
        .collect();
    let best = cost.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = cost.iter().map(|c| (best - c).exp()).collect();
    let z: f64 = weights.iter().sum();
    for (a, w) in p.alphas.iter_mut().zip(weights) {
        *a = w / z;
    }
}

/// One site-by-site pass of the stationary mean updates for every component.
pub fn update_component_means(params: &MixtureParams, net: &Network, t: Temperature) -> Result<MixtureParams> {
    check_net(params, net)?;
    let mut p = params.clone();
    let mut ov = Overlaps::new(&p);
    means_pass(&mut p, net, t.value(), &mut ov);
    Ok(p)
}

pub(crate) fn means_pass(p: &mut MixtureParams, net: &Network, t: f64, ov: &mut Overlaps) {
    let k = p.n_components();
    let n = p.n_nodes();
    for l in 0..k {
        if p.alphas[l] <= 0.0 {
            continue;
        }
        for i in 0..n {
            let field = net.local_field(i, &p.means[l]) / t;
            let r = p.smoothing[l][i];
            let mut forcing = 0.5 * (r[0] / r[1]).ln();
            for lp in 0..k {
                let rp = p.smoothing[lp][i];
                let diff = rp[0] - rp[1];
                if diff != 0.0 {
                    forcing -= 0.5 * p.lambdas[lp] * diff * ov.r_without(lp, l, i);
                }
            }
            p.means[l][i] = (field + forcing).tanh();
            for lp in 0..k {
                ov.set(p, lp, l, i);
            }
        }
    }
}
