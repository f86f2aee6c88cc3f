use crate::error::{Error, Result};
use crate::fields::{gradient, ScalarField, VectorField};

/// `T_k(r)`: `r` clamped to `[-k, k]`.
pub fn truncate_value(r: f64, k: f64) -> f64 {
    r.clamp(-k, k)
}

pub fn truncate(u: &ScalarField, k: f64) -> Result<ScalarField> {
    if !(k > 0.0) {
        return Err(Error::Parameter(format!(
            "truncation level must be positive, got {k}"
        )));
    }
    Ok(u.map(|r| truncate_value(r, k)))
}

/// `ψ_l(r) = min{(l + 1 − |r|)⁺, 1}`.
pub fn psi_l(u: &ScalarField, l: f64) -> ScalarField {
    u.map(|r| (l + 1.0 - r.abs()).clamp(0.0, 1.0))
}

/// `∇T_k(u)` as `∇u` restricted to the triangles on which all three
/// vertices satisfy `|u| < k`, where truncation does not act.
pub fn masked_gradient(u: &ScalarField, k: f64) -> VectorField {
    let mut g = gradient(u);
    let d = *u.domain();
    let nc = d.num_cells();
    let v = u.values();
    for (idx, val) in g.values_mut().iter_mut().enumerate() {
        let layer = idx / nc;
        let c = idx % nc;
        if d.triangle_nodes(c, layer).iter().any(|&n| v[n].abs() >= k) {
            *val = [0.0, 0.0];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridDomain;

    #[test]
    fn psi_is_one_below_the_level_and_zero_above() {
        let d = GridDomain::unit_square(2);
        let u = ScalarField::new(d, vec![0.0, 0.5, 2.0, 2.5, 3.2, -2.5, 4.0, -0.1, 0.0]).unwrap();
        let psi = psi_l(&u, 2.0);
        assert_eq!(psi.values(), &[1.0, 1.0, 1.0, 0.5, 0.0, 0.5, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn nonpositive_level_is_an_error() {
        assert!(truncate(&ScalarField::zeros(GridDomain::unit_square(2)), 0.0).is_err());
    }
}
