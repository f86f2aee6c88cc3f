use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::fields::GridDomain;
use crate::nfunc::family::ModularFunction;
use crate::nfunc::profile::{biconjugate, default_nodes, RadialProfile};

/// Smallest power-law rate (in decades per decade) accepted as evidence that
/// `M/|ξ|` tends to 0 at the origin or to ∞ at infinity.
pub const LIMIT_RATE: f64 = 0.01;
/// Relative drift of a fitted constant that still counts as stable.
pub const DRIFT_TOL: f64 = 0.05;

fn de_nullable<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn de_constants<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<BTreeMap<String, f64>, D::Error> {
    let raw = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|(k, v)| (k, v.unwrap_or(f64::NAN)))
        .collect())
}

/// A sample at which a checked inequality fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
    pub xi: [f64; 2],
    /// The two sides of the violated inequality `lhs ≤ rhs`.
    #[serde(deserialize_with = "de_nullable")]
    pub lhs: f64,
    #[serde(deserialize_with = "de_nullable")]
    pub rhs: f64,
    pub note: String,
}

/// Outcome of a structural check. Non-finite constants serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub pass: bool,
    #[serde(deserialize_with = "de_constants")]
    pub constants: BTreeMap<String, f64>,
    pub witness: Option<Witness>,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl ConditionReport {
    pub(crate) fn new(condition: &str) -> Self {
        ConditionReport {
            condition: condition.into(),
            pass: true,
            constants: BTreeMap::new(),
            witness: None,
            samples: 0,
            violations: Vec::new(),
        }
    }

    pub(crate) fn set(&mut self, key: &str, v: f64) {
        self.constants.insert(key.into(), v);
    }

    pub(crate) fn fail(&mut self, what: &str, w: Witness) {
        self.pass = false;
        self.violations.push(what.into());
        if self.witness.is_none() {
            self.witness = Some(w);
        }
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `k` unit vectors at angles `2πj/k`.
pub fn directions(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / k as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

/// Sample set `{r e_j}` of gradient values: radii times equally spaced directions.
#[derive(Clone, Debug, PartialEq)]
pub struct XiSamples {
    pub radii: Vec<f64>,
    pub directions: usize,
}

impl XiSamples {
    pub fn new(radii: Vec<f64>, directions: usize) -> Result<Self> {
        if radii.len() < 2 || directions == 0 {
            return Err(Error::Input(
                "need at least two radii and one direction".into(),
            ));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0))
            || radii.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Input(
                "radii must be positive, finite and increasing".into(),
            ));
        }
        Ok(XiSamples { radii, directions })
    }

    /// Every fourth positive node of the radial grid.
    pub fn standard(directions: usize) -> Self {
        let radii = default_nodes().into_iter().skip(1).step_by(4).collect();
        XiSamples { radii, directions }
    }

    /// Radial-grid nodes in the top `decades` decades.
    pub fn top_decades(decades: u32, directions: usize) -> Self {
        let nodes = default_nodes();
        let top = *nodes.last().unwrap();
        let lo = top / 10f64.powi(decades as i32) * (1.0 - 1e-12);
        XiSamples {
            radii: nodes.into_iter().filter(|&r| r >= lo).collect(),
            directions,
        }
    }

    pub fn dirs(&self) -> Vec<[f64; 2]> {
        directions(self.directions)
    }
}

fn scale(r: f64, e: [f64; 2]) -> [f64; 2] {
    [r * e[0], r * e[1]]
}

#[derive(Clone)]
struct Extreme {
    value: f64,
    cell: usize,
    dir: usize,
}

#[derive(Clone)]
struct AxiomScan {
    qsup: Vec<Extreme>,
    qinf: Vec<Extreme>,
    convexity: Option<(f64, Witness)>,
    symmetry: Option<(f64, Witness)>,
}

impl AxiomScan {
    fn empty(n: usize) -> Self {
        AxiomScan {
            qsup: vec![
                Extreme {
                    value: f64::NEG_INFINITY,
                    cell: 0,
                    dir: 0
                };
                n
            ],
            qinf: vec![
                Extreme {
                    value: f64::INFINITY,
                    cell: 0,
                    dir: 0
                };
                n
            ],
            convexity: None,
            symmetry: None,
        }
    }

    fn merge(mut self, other: AxiomScan) -> AxiomScan {
        for (a, b) in self.qsup.iter_mut().zip(other.qsup) {
            if b.value > a.value {
                *a = b;
            }
        }
        for (a, b) in self.qinf.iter_mut().zip(other.qinf) {
            if b.value < a.value {
                *a = b;
            }
        }
        self.convexity = worse(self.convexity, other.convexity);
        self.symmetry = worse(self.symmetry, other.symmetry);
        self
    }
}

fn worse(a: Option<(f64, Witness)>, b: Option<(f64, Witness)>) -> Option<(f64, Witness)> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.0 > a.0 { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Scans the N-function axioms: `M/|ξ| → 0` at the origin, `M/|ξ| → ∞` at
/// infinity, midpoint convexity in `ξ`, and evenness. The limits are judged
/// from the power-law rate of `sup_x M/|ξ|` over the bottom decade and of
/// `inf_x M/|ξ|` over the top decade of the radii.
pub fn check_nfunction(
    m: &ModularFunction,
    samples: &XiSamples,
    tol: f64,
) -> Result<ConditionReport> {
    let radii = &samples.radii;
    let nr = radii.len();
    if nr < 8 || radii[0] > 1e-2 || radii[nr - 1] < 1e2 {
        return Err(Error::Input(
            "ξ samples must span |ξ| ∈ [1e-2, 1e2] with at least 8 radii".into(),
        ));
    }
    let dirs = samples.dirs();
    let k = dirs.len();
    let domain = m.domain();
    let bottom = radii
        .iter()
        .rposition(|&r| r <= 10.0 * radii[0] * (1.0 + 1e-12))
        .unwrap();
    let top = radii
        .iter()
        .position(|&r| r >= radii[nr - 1] / 10.0 * (1.0 - 1e-12))
        .unwrap();
    if bottom == 0 || top == nr - 1 {
        return Err(Error::Input(
            "ξ samples do not resolve the end decades".into(),
        ));
    }

    let scan = (0..domain.num_cells())
        .into_par_iter()
        .fold(
            || AxiomScan::empty(nr),
            |mut acc, c| {
                let x = domain.cell_center(c);
                let vals: Vec<Vec<f64>> = dirs
                    .iter()
                    .map(|&e| radii.iter().map(|&r| m.value(c, scale(r, e))).collect())
                    .collect();
                for (d, row) in vals.iter().enumerate() {
                    for (i, &v) in row.iter().enumerate() {
                        let q = v / radii[i];
                        if q > acc.qsup[i].value {
                            acc.qsup[i] = Extreme {
                                value: q,
                                cell: c,
                                dir: d,
                            };
                        }
                        if q < acc.qinf[i].value {
                            acc.qinf[i] = Extreme {
                                value: q,
                                cell: c,
                                dir: d,
                            };
                        }
                    }
                }
                let mut midpoint = |a: [f64; 2], b: [f64; 2], ma: f64, mb: f64| {
                    let avg = 0.5 * (ma + mb);
                    let mid = m.value(c, [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                    let excess = (mid - avg) / avg.max(1.0);
                    if excess > tol && acc.convexity.as_ref().is_none_or(|w| excess > w.0) {
                        let w = Witness {
                            x,
                            y: None,
                            xi: a,
                            lhs: mid,
                            rhs: avg,
                            note: format!("midpoint of ξ = {a:?} and {b:?}"),
                        };
                        acc.convexity = Some((excess, w));
                    }
                };
                for d in 0..k {
                    for i in 0..nr {
                        let a = scale(radii[i], dirs[d]);
                        if i + 1 < nr {
                            midpoint(a, scale(radii[i + 1], dirs[d]), vals[d][i], vals[d][i + 1]);
                        }
                        if k > 1 {
                            let d1 = (d + 1) % k;
                            midpoint(a, scale(radii[i], dirs[d1]), vals[d][i], vals[d1][i]);
                        }
                        if k >= 4 && i + 1 < nr {
                            let dq = (d + k / 4) % k;
                            midpoint(
                                a,
                                scale(radii[i + 1], dirs[dq]),
                                vals[d][i],
                                vals[dq][i + 1],
                            );
                        }
                    }
                }
                for d in 0..k {
                    for i in 0..nr {
                        let xi = scale(radii[i], dirs[d]);
                        let v = vals[d][i];
                        let flipped = m.value(c, [-xi[0], -xi[1]]);
                        let defect = (flipped - v).abs() / v.max(1.0);
                        if defect > tol && acc.symmetry.as_ref().is_none_or(|w| defect > w.0) {
                            let w = Witness {
                                x,
                                y: None,
                                xi,
                                lhs: flipped,
                                rhs: v,
                                note: "M(x, −ξ) vs M(x, ξ)".into(),
                            };
                            acc.symmetry = Some((defect, w));
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| AxiomScan::empty(nr), AxiomScan::merge);

    let mut report = ConditionReport::new("nfunction");
    report.samples = domain.num_cells() * k * nr;

    let rate = |q0: f64, q1: f64, r0: f64, r1: f64| {
        if q0 == 0.0 || q1.is_infinite() {
            f64::INFINITY
        } else {
            (q1 / q0).ln() / (r1 / r0).ln()
        }
    };
    let (s0, s1) = (&scan.qsup[0], &scan.qsup[bottom]);
    let zero_rate = rate(s0.value, s1.value, radii[0], radii[bottom]);
    report.set("slope_rate_at_zero", zero_rate);
    report.set("slope_at_smallest_radius", s0.value);
    if !(zero_rate >= LIMIT_RATE) {
        report.fail(
            "vanishing slope at zero",
            Witness {
                x: domain.cell_center(s0.cell),
                y: None,
                xi: scale(radii[0], dirs[s0.dir]),
                lhs: s0.value,
                rhs: s1.value * (radii[0] / radii[bottom]).powf(LIMIT_RATE),
                note: "sup_x M(x, ξ)/|ξ| at the smallest radius".into(),
            },
        );
    }
    let (t0, t1) = (&scan.qinf[top], &scan.qinf[nr - 1]);
    let inf_rate = rate(t0.value, t1.value, radii[top], radii[nr - 1]);
    report.set("growth_rate_at_infinity", inf_rate);
    if !(inf_rate >= LIMIT_RATE) {
        report.fail(
            "superlinear growth",
            Witness {
                x: domain.cell_center(t1.cell),
                y: None,
                xi: scale(radii[nr - 1], dirs[t1.dir]),
                lhs: t0.value * (radii[nr - 1] / radii[top]).powf(LIMIT_RATE),
                rhs: t1.value,
                note: "inf_x M(x, ξ)/|ξ| at the largest radius".into(),
            },
        );
    }
    report.set(
        "convexity_excess",
        scan.convexity.as_ref().map_or(0.0, |w| w.0),
    );
    if let Some((_, w)) = scan.convexity {
        report.fail("midpoint convexity", w);
    }
    report.set(
        "symmetry_defect",
        scan.symmetry.as_ref().map_or(0.0, |w| w.0),
    );
    if let Some((_, w)) = scan.symmetry {
        report.fail("symmetry", w);
    }
    Ok(report)
}

#[derive(Clone)]
struct RatioMax {
    ln_ratio: f64,
    cell: usize,
    dir: usize,
    radius: usize,
}

impl RatioMax {
    fn none() -> Self {
        RatioMax {
            ln_ratio: f64::NEG_INFINITY,
            cell: 0,
            dir: 0,
            radius: 0,
        }
    }
    fn max(self, o: RatioMax) -> RatioMax {
        if o.ln_ratio > self.ln_ratio {
            o
        } else {
            self
        }
    }
}

fn ln_doubling_ratio(m: &ModularFunction, c: usize, xi: [f64; 2]) -> f64 {
    let base = m.ln_value(c, xi);
    let doubled = m.ln_value(c, [2.0 * xi[0], 2.0 * xi[1]]);
    if base == f64::NEG_INFINITY {
        if doubled == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        doubled - base
    }
}

/// Fits `c` in `M(x, 2ξ) ≤ c M(x, ξ) + h(x)` separately on the top decade of
/// the sampled radii and on the decade below it. The condition passes when the
/// top-decade constant exceeds the lower one by less than [`DRIFT_TOL`].
/// Ratios are formed in log space so overflowing families still compare.
pub fn check_delta2(m: &ModularFunction, samples: &XiSamples) -> Result<ConditionReport> {
    let radii = &samples.radii;
    let r_max = *radii.last().unwrap();
    if r_max / radii[0] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Input(
            "Δ2 samples must span at least two decades".into(),
        ));
    }
    let top_lo = r_max / 10.0 * (1.0 - 1e-12);
    let mid_lo = r_max / 100.0 * (1.0 - 1e-12);
    let dirs = samples.dirs();
    let domain = m.domain();

    let (top, mid) = (0..domain.num_cells())
        .into_par_iter()
        .map(|c| {
            let mut top = RatioMax::none();
            let mut mid = RatioMax::none();
            for (d, &e) in dirs.iter().enumerate() {
                for (i, &r) in radii.iter().enumerate() {
                    if r < mid_lo {
                        continue;
                    }
                    let lr = ln_doubling_ratio(m, c, scale(r, e));
                    let cand = RatioMax {
                        ln_ratio: lr,
                        cell: c,
                        dir: d,
                        radius: i,
                    };
                    if r >= top_lo {
                        top = top.max(cand);
                    } else {
                        mid = mid.max(cand);
                    }
                }
            }
            (top, mid)
        })
        .reduce(
            || (RatioMax::none(), RatioMax::none()),
            |a, b| (a.0.max(b.0), a.1.max(b.1)),
        );

    let c_top = top.ln_ratio.exp();
    let h_norm: f64 = (0..domain.num_cells())
        .into_par_iter()
        .map(|c| {
            let mut sup: f64 = 0.0;
            for &e in &dirs {
                for &r in radii {
                    let xi = scale(r, e);
                    let excess = m.value(c, [2.0 * xi[0], 2.0 * xi[1]]) - c_top * m.value(c, xi);
                    if excess.is_finite() {
                        sup = sup.max(excess);
                    }
                }
            }
            sup * domain.cell_area()
        })
        .sum();

    let mut report = ConditionReport::new("delta2");
    report.samples = domain.num_cells() * dirs.len() * radii.len();
    report.set("c", c_top);
    report.set("c_lower_decade", mid.ln_ratio.exp());
    report.set("log_c", top.ln_ratio);
    report.set("log_c_lower_decade", mid.ln_ratio);
    report.set("drift", (top.ln_ratio - mid.ln_ratio).exp_m1());
    report.set("h_norm", h_norm);
    let allowed = mid.ln_ratio + (1.0 + DRIFT_TOL).ln();
    if !(top.ln_ratio.is_finite() && top.ln_ratio <= allowed) {
        let xi = scale(radii[top.radius], dirs[top.dir]);
        report.fail(
            "delta2",
            Witness {
                x: domain.cell_center(top.cell),
                y: None,
                xi,
                lhs: m.ln_value(top.cell, [2.0 * xi[0], 2.0 * xi[1]]),
                rhs: allowed + m.ln_value(top.cell, xi),
                note: "ln M(x, 2ξ) against ln(1.05 c_lower M(x, ξ))".into(),
            },
        );
    }
    Ok(report)
}

struct Band {
    a1: f64,
    ln_inv_d: f64,
    count: usize,
    arg: Option<(usize, usize, f64, f64)>,
}

/// Fits `a₁` in `M(x, ξ)/M(y, ξ) ≤ max{|ξ|, b₁}^{−a₁/ln|x−y|}` over random cell
/// pairs with `|x − y| < 1/2`, binned into dyadic distance bands, with
/// `b₁ = max(1/r_min, e)`. The fit is unbounded when the per-band `a₁` grows
/// like a power ≥ 1/2 of `ln(1/|x − y|)` over the three closest bands.
pub fn check_log_holder(m: &ModularFunction, budget: usize, seed: u64) -> Result<ConditionReport> {
    if !m.is_isotropic() {
        return Err(Error::UnsupportedFamily(format!(
            "{} is not isotropic",
            m.family().name()
        )));
    }
    let domain = m.domain();
    let h = domain.h();
    let radii = XiSamples::standard(1).radii;
    let b1 = (1.0 / radii[0]).max(E);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dmax = 0.5f64.min(domain.diameter());
    if dmax <= h {
        return Err(Error::Resolution("no cell pairs closer than 1/2".into()));
    }
    let nbands = ((dmax / h).log2().ceil() as usize).max(1) + 1;
    let mut pairs = Vec::with_capacity(budget);
    let mut attempts = 0;
    while pairs.len() < budget && attempts < 20 * budget.max(1) {
        attempts += 1;
        let cx = rng.gen_range(0..domain.num_cells());
        let d = (rng.gen_range(h.ln()..dmax.ln())).exp();
        let t = rng.gen_range(0.0..2.0 * PI);
        let px = domain.cell_center(cx);
        let p = [px[0] + d * t.cos(), px[1] + d * t.sin()];
        if !domain.contains(p) {
            continue;
        }
        let cy = domain.locate_cell(p);
        let py = domain.cell_center(cy);
        let dist = (py[0] - px[0]).hypot(py[1] - px[1]);
        if cy == cx || dist >= 0.5 {
            continue;
        }
        pairs.push((cx, cy, dist));
    }
    if pairs.is_empty() {
        return Err(Error::Resolution("no admissible cell pairs".into()));
    }

    let fits: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(cx, cy, dist)| {
            let l = -1.0 / dist.ln();
            let mut best = (0.0, radii[0]);
            for &r in &radii {
                let lr = m.ln_value(cx, [r, 0.0]) - m.ln_value(cy, [r, 0.0]);
                let a = lr / (l * r.max(b1).ln());
                if a > best.0 {
                    best = (a, r);
                }
            }
            best
        })
        .collect();

    let mut bands: Vec<Band> = (0..nbands)
        .map(|_| Band {
            a1: 0.0,
            ln_inv_d: 0.0,
            count: 0,
            arg: None,
        })
        .collect();
    for (&(cx, cy, dist), &(a, r)) in pairs.iter().zip(&fits) {
        let k = ((0.5 / dist).log2().floor().max(0.0) as usize).min(nbands - 1);
        let b = &mut bands[k];
        b.count += 1;
        b.ln_inv_d += -dist.ln();
        if a > b.a1 || b.arg.is_none() {
            b.a1 = b.a1.max(a);
            b.arg = Some((cx, cy, r, dist));
        }
    }
    let populated: Vec<&Band> = bands.iter().filter(|b| b.count >= 8).collect();

    let mut report = ConditionReport::new("log_holder");
    report.samples = pairs.len() * radii.len();
    let a1 = populated.iter().map(|b| b.a1).fold(0.0, f64::max);
    report.set("a1", a1);
    report.set("b1", b1);
    report.set("bands", populated.len() as f64);
    let closest = &populated[populated.len().saturating_sub(3)..];
    let growth = if closest.len() < 2 || closest.iter().all(|b| b.a1 <= 1e-12) {
        0.0
    } else if closest.iter().any(|b| b.a1 <= 1e-12) {
        f64::INFINITY
    } else {
        let pts: Vec<(f64, f64)> = closest
            .iter()
            .map(|b| ((b.ln_inv_d / b.count as f64).ln(), b.a1.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    report.set("growth_exponent", growth);
    if !(a1.is_finite() && growth < 0.5) {
        let last = closest.last().unwrap();
        let (cx, cy, r, dist) = last.arg.unwrap();
        let reference = populated[0].a1;
        let l = -1.0 / dist.ln();
        report.fail(
            "log-Hölder continuity",
            Witness {
                x: domain.cell_center(cx),
                y: Some(domain.cell_center(cy)),
                xi: [r, 0.0],
                lhs: m.ln_value(cx, [r, 0.0]) - m.ln_value(cy, [r, 0.0]),
                rhs: reference * l * r.max(b1).ln(),
                note: "ln M(x, ξ)/M(y, ξ) against the bound fitted on the widest band".into(),
            },
        );
    }
    Ok(report)
}

/// Cover of the domain by cubes `Q_j` of edge `2δ` anchored at the lower-left
/// corner, with concentric enlarged cubes of edge `4δ`. Cells belong to the
/// cube containing their center.
#[derive(Clone, Debug)]
pub struct CubeCover {
    domain: GridDomain,
    delta: f64,
    na: usize,
    nb: usize,
}

impl CubeCover {
    pub fn new(domain: &GridDomain, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Input(format!(
                "cube half-edge {delta} must be positive"
            )));
        }
        let count = |len: f64| ((len / (2.0 * delta)) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(CubeCover {
            domain: *domain,
            delta,
            na: count(domain.width()),
            nb: count(domain.height()),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn len(&self) -> usize {
        self.na * self.nb
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `[x0, x1, y0, y1]` of cube `j`.
    pub fn cube(&self, j: usize) -> [f64; 4] {
        let [x0, _, y0, _] = self.domain.extent();
        let e = 2.0 * self.delta;
        let (a, b) = ((j % self.na) as f64, (j / self.na) as f64);
        [
            x0 + a * e,
            x0 + (a + 1.0) * e,
            y0 + b * e,
            y0 + (b + 1.0) * e,
        ]
    }

    pub fn enlarged(&self, j: usize) -> [f64; 4] {
        let [a, b, c, d] = self.cube(j);
        let t = self.delta;
        [a - t, b + t, c - t, d + t]
    }

    pub fn cube_of(&self, cell: usize) -> usize {
        let [x0, _, y0, _] = self.domain.extent();
        let p = self.domain.cell_center(cell);
        let e = 2.0 * self.delta;
        let a = (((p[0] - x0) / e).floor() as usize).min(self.na - 1);
        let b = (((p[1] - y0) / e).floor() as usize).min(self.nb - 1);
        b * self.na + a
    }

    /// Cells whose center lies in cube `j`.
    pub fn cells(&self, j: usize) -> Vec<usize> {
        self.overlapping(self.cube(j))
            .into_iter()
            .filter(|&c| self.cube_of(c) == j)
            .collect()
    }

    /// Cells whose square meets the enlarged cube `j` in positive area.
    pub fn enlarged_cells(&self, j: usize) -> Vec<usize> {
        self.overlapping(self.enlarged(j))
    }

    fn overlapping(&self, rect: [f64; 4]) -> Vec<usize> {
        let [x0, _, y0, _] = self.domain.extent();
        let h = self.domain.h();
        let range = |lo: f64, hi: f64, origin: f64, n: usize| {
            let a = ((lo - origin) / h + 1e-9).floor().max(0.0) as usize;
            let b = (((hi - origin) / h - 1e-9).ceil().max(0.0) as usize).min(n);
            a.min(n)..b
        };
        let mut out = Vec::new();
        for j in range(rect[2], rect[3], y0, self.domain.ny()) {
            for i in range(rect[0], rect[1], x0, self.domain.nx()) {
                out.push(self.domain.cell_index(i, j));
            }
        }
        out
    }
}

struct DeltaScan {
    ratio: Vec<f64>,
    arg: Vec<(usize, usize)>,
}

/// Checks the cube condition
/// `M(x, ξ) ≤ c (1 + |ξ|^{a / ln(1/(bδ))}) (inf_{Q̃_j} M(·, ξ))**` for `x ∈ Q_j`.
/// Per `δ` the worst exponent `e_δ = max_{|ξ| ≥ 10} ln R/ln|ξ|` of the ratio
/// `R` is converted to `a_δ = e_δ ln(1/(bδ))`; `b` is chosen in `[1/8, 1/δ_max)`
/// to make `a_δ` flattest, and the check passes when `a_δ` at the smallest `δ`
/// exceeds its value at the largest `δ` by less than [`DRIFT_TOL`].
pub fn check_condition_m(
    m: &ModularFunction,
    deltas: &[f64],
    samples: &XiSamples,
) -> Result<ConditionReport> {
    let domain = m.domain();
    let delta0 = domain.width().min(domain.height()) / 4.0;
    if deltas.is_empty() {
        return Err(Error::Input("no cube sizes given".into()));
    }
    for &d in deltas {
        if !(d > 0.0 && d < delta0) {
            return Err(Error::Input(format!(
                "cube half-edge {d} outside (0, {delta0})"
            )));
        }
        if 4.0 * d < 2.0 * domain.h() * (1.0 - 1e-12) {
            return Err(Error::Resolution(format!(
                "enlarged cubes of edge {} hold fewer than 4 cells",
                4.0 * d
            )));
        }
    }
    let radii = &samples.radii;
    let nr = radii.len();
    let big = radii
        .iter()
        .position(|&r| r >= 10.0)
        .ok_or_else(|| Error::Input("ξ samples must reach 10".into()))?;
    let dirs = if m.is_isotropic() {
        vec![[1.0, 0.0]]
    } else {
        directions(32)
    };
    let covers: Vec<CubeCover> = deltas
        .iter()
        .map(|&d| CubeCover::new(domain, d))
        .collect::<Result<_>>()?;
    let mut nodes = vec![0.0];
    nodes.extend_from_slice(radii);

    let mut scans: Vec<DeltaScan> = deltas
        .iter()
        .map(|_| DeltaScan {
            ratio: vec![0.0; nr],
            arg: vec![(0, 0); nr],
        })
        .collect();
    let ncells = domain.num_cells();
    for (di, &e) in dirs.iter().enumerate() {
        let table: Vec<f64> = (0..ncells)
            .into_par_iter()
            .flat_map_iter(|c| radii.iter().map(move |&r| m.value(c, scale(r, e))))
            .collect();
        for (cover, scan) in covers.iter().zip(scans.iter_mut()) {
            let per_cube: Vec<Vec<(f64, usize)>> = (0..cover.len())
                .into_par_iter()
                .map(|j| {
                    let members = cover.cells(j);
                    if members.is_empty() {
                        return vec![(0.0, 0); nr];
                    }
                    let mut inf = vec![f64::INFINITY; nr];
                    for c in cover.enlarged_cells(j) {
                        for (v, t) in inf.iter_mut().zip(&table[c * nr..(c + 1) * nr]) {
                            *v = v.min(*t);
                        }
                    }
                    let mut values = vec![0.0];
                    values.extend(
                        inf.iter()
                            .map(|v| if v.is_finite() { *v } else { f64::MAX }),
                    );
                    let env = RadialProfile::new(nodes.clone(), values).map(|p| biconjugate(&p));
                    let env = match env {
                        Ok(p) => p.values()[1..].to_vec(),
                        Err(_) => return vec![(f64::INFINITY, members[0]); nr],
                    };
                    let mut worst = vec![(0.0, members[0]); nr];
                    for &c in &members {
                        for i in 0..nr {
                            let v = table[c * nr + i];
                            if !v.is_finite() {
                                continue;
                            }
                            let ratio = if env[i] > 0.0 {
                                v / env[i]
                            } else if v > 0.0 {
                                f64::INFINITY
                            } else {
                                1.0
                            };
                            if ratio > worst[i].0 {
                                worst[i] = (ratio, c);
                            }
                        }
                    }
                    worst
                })
                .collect();
            for cube in per_cube {
                for (i, (ratio, c)) in cube.into_iter().enumerate() {
                    if ratio > scan.ratio[i] {
                        scan.ratio[i] = ratio;
                        scan.arg[i] = (c, di);
                    }
                }
            }
        }
    }

    // worst exponent per δ over |ξ| ≥ 10
    let exps: Vec<(f64, usize)> = scans
        .iter()
        .map(|s| {
            (big..nr).fold((0.0, big), |best, i| {
                // ratios within rounding of 1 carry no exponent
                let e = if s.ratio[i] <= 1.0 + 1e-9 {
                    0.0
                } else {
                    s.ratio[i].ln() / radii[i].ln()
                };
                if e > best.0 {
                    (e, i)
                } else {
                    best
                }
            })
        })
        .collect();
    let (imax, imin) = {
        let mut idx: Vec<usize> = (0..deltas.len()).collect();
        idx.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]));
        (idx[idx.len() - 1], idx[0])
    };
    let a_of = |b: f64, k: usize| exps[k].0 * (1.0 / (b * deltas[k])).ln();
    let growth_of = |b: f64| {
        let (top, bottom) = (a_of(b, imin), a_of(b, imax));
        if bottom > 0.0 {
            top / bottom
        } else if top > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    };
    let mut b = 0.125;
    let mut best = (growth_of(b), b);
    loop {
        let next = b * 2f64.powf(0.25);
        if next * deltas[imax] >= 1.0 / E {
            break;
        }
        b = next;
        let g = growth_of(b);
        if g < best.0 {
            best = (g, b);
        }
    }
    let (growth, b) = best;
    let a = (0..deltas.len()).map(|k| a_of(b, k)).fold(0.0, f64::max);
    let mut c: f64 = 0.0;
    let mut ratio_max: f64 = 0.0;
    for (k, s) in scans.iter().enumerate() {
        let ex = a / (1.0 / (b * deltas[k])).ln();
        for (i, &ratio) in s.ratio.iter().enumerate() {
            c = c.max(ratio / (1.0 + radii[i].powf(ex)));
            ratio_max = ratio_max.max(ratio);
        }
    }

    let mut report = ConditionReport::new("condition_m");
    report.samples = ncells * dirs.len() * nr * deltas.len();
    report.set("a", a);
    report.set("b", b);
    report.set("c", c);
    report.set("ratio_max", ratio_max);
    report.set("a_growth", growth);
    for (k, &d) in deltas.iter().enumerate() {
        report.set(&format!("a_delta={d}"), a_of(b, k));
    }
    if !(growth <= 1.0 + DRIFT_TOL && c.is_finite()) {
        let (e, i) = exps[imin];
        let (cell, di) = scans[imin].arg[i];
        report.fail(
            "cube condition",
            Witness {
                x: domain.cell_center(cell),
                y: None,
                xi: scale(radii[i], dirs[di]),
                lhs: e * (1.0 / (b * deltas[imin])).ln(),
                rhs: (1.0 + DRIFT_TOL) * a_of(b, imax),
                note: format!(
                    "fitted a at δ = {} against δ = {}",
                    deltas[imin], deltas[imax]
                ),
            },
        );
    }
    Ok(report)
}
