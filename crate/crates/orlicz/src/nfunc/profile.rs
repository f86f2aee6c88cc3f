use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the default log grid.
pub const GRID_LO: f64 = 1e-4;
/// Upper end of the default log grid.
pub const GRID_HI: f64 = 1e4;
/// Log-spaced nodes of the default grid (64 per decade), not counting 0.
pub const GRID_NODES: usize = 513;

/// The default radial grid: 0 followed by [`GRID_NODES`] log-spaced points
/// over `[GRID_LO, GRID_HI]`.
pub fn default_nodes() -> Vec<f64> {
    log_nodes(GRID_LO, GRID_HI, GRID_NODES)
}

/// 0 followed by `count` log-spaced points over `[lo, hi]`.
pub fn log_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let mut v = Vec::with_capacity(count + 1);
    v.push(0.0);
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        v.push(10f64.powf(a + t * (b - a)));
    }
    v
}

/// Sampled function `s ↦ m(s)` on `s ≥ 0`, piecewise linear between nodes
/// and extended linearly past the last node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct RadialProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawProfile> for RadialProfile {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        RadialProfile::new(raw.nodes, raw.values)
    }
}

impl From<RadialProfile> for RawProfile {
    fn from(p: RadialProfile) -> Self {
        RawProfile {
            nodes: p.nodes,
            values: p.values,
        }
    }
}

impl RadialProfile {
    /// Checks `s_0 = 0`, `m(0) = 0`, strictly increasing finite nodes and
    /// finite nonnegative values. Monotonicity of the values is not required
    /// (raw tabulations may dip); see [`RadialProfile::is_nondecreasing`].
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::Input(
                "profile needs at least two (s, m) pairs of equal length".into(),
            ));
        }
        if nodes[0] != 0.0 || values[0] != 0.0 {
            return Err(Error::Input("profile must start at (0, 0)".into()));
        }
        if nodes.iter().any(|s| !s.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(
                "nodes must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Input("values must be finite and nonnegative".into()));
        }
        Ok(RadialProfile { nodes, values })
    }

    /// Samples `f` on `nodes`, forcing the value at 0 to 0.
    pub fn from_fn_on(nodes: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes
            .iter()
            .map(|&s| if s == 0.0 { 0.0 } else { f(s) })
            .collect();
        RadialProfile::new(nodes.to_vec(), values)
    }

    /// Samples `f` on the default grid.
    pub fn from_fn(f: impl Fn(f64) -> f64) -> Result<Self> {
        RadialProfile::from_fn_on(&default_nodes(), f)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn last_node(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    fn segment(&self, s: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Piecewise-linear evaluation; linear extrapolation past the last node.
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.abs();
        let i = self.segment(s);
        let (s0, s1) = (self.nodes[i], self.nodes[i + 1]);
        let (m0, m1) = (self.values[i], self.values[i + 1]);
        m0 + (m1 - m0) * (s - s0) / (s1 - s0)
    }

    /// Slope of the segment containing `s` (right derivative at nodes).
    pub fn slope(&self, s: f64) -> f64 {
        let i = self.segment(s.abs());
        (self.values[i + 1] - self.values[i]) / (self.nodes[i + 1] - self.nodes[i])
    }

    /// Values of this profile at `nodes`.
    pub fn resample(&self, nodes: &[f64]) -> Result<RadialProfile> {
        RadialProfile::from_fn_on(nodes, |s| self.eval(s))
    }

    /// `s ↦ w · m(s / r)`.
    pub fn scaled(&self, w: f64, r: f64) -> Result<RadialProfile> {
        let nodes = self.nodes.iter().map(|s| s * r).collect();
        let values = self.values.iter().map(|m| w * m).collect();
        RadialProfile::new(nodes, values)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    /// First interior node where the value exceeds the chord through its
    /// neighbours by more than `tol · max(1, |m|)`.
    pub fn convexity_violation(&self, tol: f64) -> Option<usize> {
        (1..self.nodes.len() - 1).find(|&i| {
            let (a, b, c) = (self.nodes[i - 1], self.nodes[i], self.nodes[i + 1]);
            let chord = ((c - b) * self.values[i - 1] + (b - a) * self.values[i + 1]) / (c - a);
            self.values[i] - chord > tol * self.values[i].abs().max(1.0)
        })
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.convexity_violation(tol).is_none()
    }

    /// Two-column CSV `s,m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,m\n");
        for (s, m) in self.nodes.iter().zip(&self.values) {
            let _ = writeln!(out, "{s},{m}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with('s')) {
                continue;
            }
            let mut it = line.split(',');
            let parse = |x: Option<&str>| -> Result<f64> {
                x.ok_or_else(|| Error::Input(format!("line {}: missing column", k + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("line {}: {e}", k + 1)))
            };
            nodes.push(parse(it.next())?);
            values.push(parse(it.next())?);
        }
        RadialProfile::new(nodes, values)
    }
}

/// Indices of the lower convex hull of the points `(s_i, m_i)` (monotone
/// chain; the nodes are already sorted).
pub fn lower_hull(nodes: &[f64], values: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(nodes.len());
    for i in 0..nodes.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (nodes[b] - nodes[a]) * (values[i] - values[a])
                - (values[b] - values[a]) * (nodes[i] - nodes[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Discrete Legendre–Fenchel transform `m*(t) = max_i (s_i t − m(s_i))`.
///
/// The result is exact for the piecewise-linear interpolant: its nodes are
/// 0, the slopes of the lower hull segments, and one trailing node that
/// carries the final slope `s_max`. Linear time.
pub fn conjugate(profile: &RadialProfile) -> RadialProfile {
    let s = profile.nodes();
    let m = profile.values();
    let hull = lower_hull(s, m);
    let mut t = vec![0.0];
    let mut v = vec![0.0];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (m[b] - m[a]) / (s[b] - s[a]);
        if slope <= *t.last().unwrap() {
            continue;
        }
        t.push(slope);
        v.push((s[a] * slope - m[a]).max(0.0));
    }
    let last = *t.last().unwrap();
    let t_end = if last > 0.0 { 2.0 * last } else { 1.0 };
    let k = *hull.last().unwrap();
    t.push(t_end);
    v.push(s[k] * t_end - m[k]);
    RadialProfile {
        nodes: t,
        values: v,
    }
}

/// `max_i (s_i t − m(s_i))` at each `t`, by direct search over all nodes.
pub fn conjugate_brute(profile: &RadialProfile, duals: &[f64]) -> Vec<f64> {
    duals
        .iter()
        .map(|&t| {
            profile
                .nodes()
                .iter()
                .zip(profile.values())
                .fold(f64::NEG_INFINITY, |acc, (s, m)| acc.max(s * t - m))
        })
        .collect()
}

/// `(m*)*` on the nodes of `profile`: the greatest convex minorant.
pub fn biconjugate(profile: &RadialProfile) -> RadialProfile {
    let twice = conjugate(&conjugate(profile));
    let values = profile
        .nodes()
        .iter()
        .map(|&s| twice.eval(s).min(profile.eval(s)).max(0.0))
        .collect();
    RadialProfile {
        nodes: profile.nodes().to_vec(),
        values,
    }
}
