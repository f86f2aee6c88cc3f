use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nfunc::checks::directions;
use crate::nfunc::family::ModularFunction;
use crate::nfunc::profile::{biconjugate, default_nodes, RadialProfile};

/// Output nodes per doubling of `s`, so that `2s` is again a node.
pub const UNDERBAR_RATIO_STEPS: usize = 19;
/// Default number of Euler steps between output nodes (≈ 0.001 decades each).
pub const UNDERBAR_SUBSTEPS: usize = 16;

/// `(inf_{x, |ξ| = r} M(x, ξ))**` on the radial grid, cut where `M` overflows.
pub fn lower_envelope(m: &ModularFunction) -> Result<RadialProfile> {
    let nodes = default_nodes();
    let dirs = if m.is_isotropic() {
        vec![[1.0, 0.0]]
    } else {
        directions(32)
    };
    let inf = (0..m.domain().num_cells())
        .into_par_iter()
        .map(|c| {
            nodes
                .iter()
                .map(|&r| {
                    dirs.iter()
                        .map(|e| m.value(c, [r * e[0], r * e[1]]))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect::<Vec<f64>>()
        })
        .reduce(
            || vec![f64::INFINITY; nodes.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
        );
    let keep = inf.iter().position(|v| !v.is_finite()).unwrap_or(inf.len());
    if keep < 3 {
        return Err(Error::Degenerate(
            "M overflows on the whole radial grid".into(),
        ));
    }
    Ok(biconjugate(&RadialProfile::new(
        nodes[..keep].to_vec(),
        inf[..keep].to_vec(),
    )?))
}

/// Lower Δ2 minorant `m̲` of `M`: integrates `m̲′ = min(m_*′, α m̲/s)` in
/// `ln s` from `m̲(s₁) = m_*(s₁)` at the first positive node, where `m_*` is
/// the convex envelope of `inf_x M`. The first branch wins ties. Each step
/// takes the smaller of the two exact branch increments, so `m̲ ≤ m_*` and
/// `m̲(2s) ≤ 2^α m̲(s)` hold node by node; steps where the active branch
/// changes are halved.
pub fn m_underbar(m: &ModularFunction, alpha: f64, substeps: usize) -> Result<RadialProfile> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::Parameter(format!("α = {alpha} must exceed 1")));
    }
    if substeps == 0 {
        return Err(Error::Parameter("need at least one step per node".into()));
    }
    let env = lower_envelope(m)?;
    let s1 = env.nodes()[1];
    let s_end = env.last_node();
    let per = (UNDERBAR_RATIO_STEPS * substeps) as f64;

    let mut nodes = vec![0.0, s1];
    let mut values = vec![0.0, env.eval(s1)];
    let mut y = values[1];
    let mut k = 0usize;
    loop {
        let base = s1 * 2f64.powf(k as f64 / UNDERBAR_RATIO_STEPS as f64);
        let target = s1 * 2f64.powf((k + 1) as f64 / UNDERBAR_RATIO_STEPS as f64);
        if target > s_end * (1.0 + 1e-12) {
            break;
        }
        let mut sa = base;
        for j in 1..=substeps {
            let sb = if j == substeps {
                target
            } else {
                s1 * 2f64.powf((k * substeps + j) as f64 / per)
            };
            y = advance(&env, alpha, sa, sb, y, 0);
            sa = sb;
        }
        nodes.push(target);
        values.push(y);
        k += 1;
    }
    RadialProfile::new(nodes, values)
}

fn first_branch(env: &RadialProfile, alpha: f64, s: f64, y: f64) -> bool {
    env.slope(s) * s <= alpha * y
}

fn advance(env: &RadialProfile, alpha: f64, sa: f64, sb: f64, y: f64, depth: u32) -> f64 {
    let along_envelope = y + env.eval(sb) - env.eval(sa);
    let along_power = y * (sb / sa).powf(alpha);
    let next = along_envelope.min(along_power);
    if depth < 12 && first_branch(env, alpha, sa, y) != first_branch(env, alpha, sb, next) {
        let mid = (sa * sb).sqrt();
        let ym = advance(env, alpha, sa, mid, y, depth + 1);
        return advance(env, alpha, mid, sb, ym, depth + 1);
    }
    next
}
