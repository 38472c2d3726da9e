//! Arcs, Beurling-Carleson sets and the Whitney decomposition of their gaps.
//!
//! Lengths and distances are normalized arc length (the circle has length 1);
//! endpoints are stored in radians.

use std::cmp::Ordering;
use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing angles.
pub const ANGLE_SLACK: f64 = 1e-14;

/// Reduce an angle to [0, 2π).
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    /// Arc from radians. `start` is wrapped into [0, 2π) and `end` shifted by the same amount.
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidArc(format!("non-finite endpoint ({start}, {end})")));
        }
        let span = end - start;
        if span <= 0.0 {
            return Err(Error::InvalidArc(format!("end {end} does not exceed start {start}")));
        }
        // a full-length gap is allowed: it leaves a single point of the circle
        if span > TAU + ANGLE_SLACK {
            return Err(Error::InvalidArc(format!("span {span} exceeds the circle")));
        }
        let s = wrap_angle(start);
        Ok(Arc { start: s, end: s + span.min(TAU) })
    }

    /// Arc from a normalized start position and normalized length.
    pub fn from_normalized(start: f64, length: f64) -> Result<Self> {
        Arc::new(start * TAU, (start + length) * TAU)
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start) / TAU
    }

    pub fn span(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint_angle(&self) -> f64 {
        wrap_angle(0.5 * (self.start + self.end))
    }

    /// Offset of `t` from the start, in [0, 2π).
    pub fn offset(&self, t: f64) -> f64 {
        wrap_angle(t - self.start)
    }

    /// Open-arc membership.
    pub fn contains_open(&self, t: f64) -> bool {
        let o = self.offset(t);
        o > 0.0 && o < self.span()
    }

    /// Closed-arc membership with angular slack.
    pub fn contains_closed(&self, t: f64) -> bool {
        let o = self.offset(t);
        o <= self.span() + ANGLE_SLACK || o >= TAU - ANGLE_SLACK
    }

    pub fn rotate(&self, phi: f64) -> Arc {
        let s = wrap_angle(self.start + phi);
        Arc { start: s, end: s + self.span() }
    }

    pub fn start_point(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.start)
    }

    pub fn end_point(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.end)
    }
}

/// Closed subset E of the circle given by its open complementary arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeurlingCarlesonSet {
    pub gaps: Vec<Arc>,
    pub measure: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct GapSpec {
    gaps: Vec<Arc>,
}

fn entropy_term(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Validate a finite gap list and compute measure and entropy.
pub fn validate_set(gaps: &[Arc]) -> Result<BeurlingCarlesonSet> {
    if gaps.is_empty() {
        return Err(Error::EmptyGapList);
    }
    let mut checked = Vec::with_capacity(gaps.len());
    for g in gaps {
        checked.push(Arc::new(g.start, g.end)?);
    }
    let mut order: Vec<usize> = (0..checked.len()).collect();
    order.sort_by(|&a, &b| checked[a].start.partial_cmp(&checked[b].start).unwrap_or(Ordering::Equal));
    let total: f64 = checked.iter().map(|a| a.length()).sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::Overlap(order[0], order[order.len() - 1]));
    }
    // closures must be disjoint: each gap ends strictly before the next starts
    for w in 0..order.len() {
        let a = &checked[order[w]];
        let (b_idx, b_start) = if w + 1 < order.len() {
            (order[w + 1], checked[order[w + 1]].start)
        } else {
            (order[0], checked[order[0]].start + TAU)
        };
        if order.len() > 1 && a.end >= b_start - ANGLE_SLACK {
            return Err(Error::Overlap(order[w], b_idx));
        }
    }
    let sorted: Vec<Arc> = order.iter().map(|&i| checked[i]).collect();
    Ok(BeurlingCarlesonSet::from_sorted(sorted))
}

impl BeurlingCarlesonSet {
    fn from_sorted(gaps: Vec<Arc>) -> Self {
        let total: f64 = gaps.iter().map(|a| a.length()).sum();
        let entropy = gaps.iter().map(|a| entropy_term(a.length())).sum();
        BeurlingCarlesonSet { gaps, measure: (1.0 - total).max(0.0), entropy }
    }

    /// E = T, no gaps.
    pub fn full_circle() -> Self {
        BeurlingCarlesonSet { gaps: Vec::new(), measure: 1.0, entropy: 0.0 }
    }

    /// Single point e^{iφ}: one gap covering everything else.
    pub fn point(phi: f64) -> Self {
        let a = Arc::new(phi, phi + TAU).expect("full-span arc is valid");
        BeurlingCarlesonSet::from_sorted(vec![a])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GapSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidArc(format!("malformed gap JSON: {e}")))?;
        validate_set(&spec.gaps)
    }

    pub fn is_full_circle(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn rotate(&self, phi: f64) -> Self {
        let mut gaps: Vec<Arc> = self.gaps.iter().map(|g| g.rotate(phi)).collect();
        gaps.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap_or(Ordering::Equal));
        BeurlingCarlesonSet::from_sorted(gaps)
    }

    /// Index of the gap whose open arc contains `t`.
    pub fn gap_containing(&self, t: f64) -> Option<usize> {
        self.gaps.iter().position(|g| g.contains_open(t))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.gap_containing(t).is_none()
    }

    /// Normalized distance from the boundary point e^{it} to E.
    pub fn dist(&self, t: f64) -> f64 {
        match self.gap_containing(t) {
            None => 0.0,
            Some(i) => {
                let g = &self.gaps[i];
                let o = g.offset(t);
                o.min(g.span() - o) / TAU
            }
        }
    }

    /// Angles of all gap endpoints.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.gaps.len());
        for g in &self.gaps {
            v.push(g.start);
            v.push(wrap_angle(g.end));
        }
        v
    }

    /// True when `t` is within slack of a gap endpoint.
    pub fn is_endpoint(&self, t: f64, slack: f64) -> bool {
        self.endpoints().iter().any(|&e| {
            let d = wrap_angle(t - e);
            d <= slack || TAU - d <= slack
        })
    }

    /// Connected components of E of positive length, in the order of the gap preceding them.
    pub fn components(&self) -> Vec<Arc> {
        if self.gaps.is_empty() {
            return vec![Arc { start: 0.0, end: TAU }];
        }
        let n = self.gaps.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let s = self.gaps[i].end;
            let d = wrap_angle(self.gaps[(i + 1) % n].start - s);
            if d > ANGLE_SLACK && d < TAU {
                let st = wrap_angle(s);
                out.push(Arc { start: st, end: st + d });
            }
        }
        out
    }
}

/// Decay law of the gap lengths of a parametrized infinite family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LengthDecay {
    /// ℓ_k = first · ratio^{k-1}
    Geometric { ratio: f64 },
    /// ℓ_k = first · k^{-exponent}
    Power { exponent: f64 },
}

/// Infinite family of gaps laid out from angle `origin`, each followed by a spacer of equal length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapFamily {
    pub first: f64,
    pub decay: LengthDecay,
    pub origin: f64,
}

impl GapFamily {
    pub fn length(&self, k: usize) -> f64 {
        let k = k as f64;
        match self.decay {
            LengthDecay::Geometric { ratio } => self.first * ratio.powf(k - 1.0),
            LengthDecay::Power { exponent } => self.first * k.powf(-exponent),
        }
    }

    /// Certified upper bound for Σ_{k>m} ℓ_k log(1/ℓ_k); infinite when the family diverges.
    pub fn entropy_tail_bound(&self, m: usize) -> f64 {
        let a = self.first;
        match self.decay {
            LengthDecay::Geometric { ratio: r } => {
                if !(0.0..1.0).contains(&r) {
                    return f64::INFINITY;
                }
                // Σ_{j≥m} a r^j (ln(1/a) + j ln(1/r))
                let l0 = -a.ln();
                let l1 = -r.ln();
                let mf = m as f64;
                let rm = r.powf(mf);
                a * (l0 * rm / (1.0 - r) + l1 * (mf * rm / (1.0 - r) + r * rm / ((1.0 - r) * (1.0 - r))))
            }
            LengthDecay::Power { exponent: p } => {
                if p <= 1.0 {
                    return f64::INFINITY;
                }
                let l0 = -a.ln();
                // f(x) = a x^{-p}(l0 + p ln x) decreases once l0 + p ln x > 1; add exact terms until then
                let mut start = m.max(1);
                let mut exact = 0.0;
                while l0 + p * (start as f64).ln() <= 1.0 {
                    start += 1;
                    exact += entropy_term(self.length(start));
                }
                let s = start as f64;
                exact + a * s.powf(1.0 - p) / (p - 1.0) * (l0 + p * s.ln() + p / (p - 1.0))
            }
        }
    }

    /// First `m` gaps as a validated set.
    pub fn truncate(&self, m: usize) -> Result<BeurlingCarlesonSet> {
        let mut pos = self.origin / TAU;
        let mut gaps = Vec::with_capacity(m);
        for k in 1..=m {
            let l = self.length(k);
            gaps.push(Arc::from_normalized(pos, l)?);
            pos += 2.0 * l;
        }
        if pos - self.origin / TAU > 1.0 {
            return Err(Error::InvalidArc("family does not fit on the circle".into()));
        }
        validate_set(&gaps)
    }
}

/// Truncate a family after checking that its certified entropy tail stays below `threshold`.
pub fn validate_family(family: &GapFamily, m: usize, threshold: f64) -> Result<BeurlingCarlesonSet> {
    let bound = family.entropy_tail_bound(m);
    if !(bound <= threshold) {
        return Err(Error::EntropyDivergence { bound, threshold });
    }
    family.truncate(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitneyArc {
    pub parent: usize,
    pub rank: i32,
    pub arc: Arc,
    /// Normalized length |B_j|.
    pub length: f64,
    pub midpoint: Complex64,
    pub radius: f64,
    pub lambda: f64,
}

impl WhitneyArc {
    /// c_j = |B_j| log(1/|B_j|).
    pub fn weight(&self) -> f64 {
        self.length * (1.0 / self.length).ln()
    }

    pub fn parent_length(&self) -> f64 {
        self.length * 3.0 * 2f64.powi(self.rank.abs())
    }
}

/// Normalized offsets (from the gap start) and length of the rank-k arc of a gap of length `len`.
fn whitney_offsets(len: f64, k: i32) -> (f64, f64) {
    let kk = k.unsigned_abs() as i32;
    let piece = len / (3.0 * 2f64.powi(kk));
    if k == 0 {
        (len / 3.0, piece)
    } else if k > 0 {
        (len - 2.0 * piece, piece)
    } else {
        (piece, piece)
    }
}

/// Whitney arcs of every gap with |rank| ≤ k_max; λ is initialised to 1.
pub fn whitney_decompose(e: &BeurlingCarlesonSet, k_max: u32) -> Result<Vec<WhitneyArc>> {
    if e.gaps.is_empty() {
        return Err(Error::EmptyGapList);
    }
    let k_max = k_max as i32;
    let mut out = Vec::with_capacity(e.gaps.len() * (2 * k_max as usize + 1));
    for (n, g) in e.gaps.iter().enumerate() {
        let len = g.length();
        let base = g.start / TAU;
        let mut ranks = vec![0];
        for k in 1..=k_max {
            ranks.push(k);
            ranks.push(-k);
        }
        for k in ranks {
            let (off, piece) = whitney_offsets(len, k);
            let arc = Arc::from_normalized(base + off, piece)?;
            out.push(WhitneyArc {
                parent: n,
                rank: k,
                arc,
                length: piece,
                midpoint: Complex64::from_polar(1.0, arc.midpoint_angle()),
                radius: 1.0 + piece,
                lambda: 1.0,
            });
        }
    }
    Ok(out)
}

/// The two uncovered end segments of each gap, (left, right).
pub fn residual_segments(e: &BeurlingCarlesonSet, k_max: u32) -> Result<Vec<(Arc, Arc)>> {
    let mut out = Vec::with_capacity(e.gaps.len());
    for g in &e.gaps {
        let len = g.length();
        let r = len / (3.0 * 2f64.powi(k_max as i32));
        let base = g.start / TAU;
        out.push((Arc::from_normalized(base, r)?, Arc::from_normalized(base + len - r, r)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaRule {
    Constant(f64),
    /// λ_j = gain · max(1, T_j^{-1/2}), T_j the tail of c over the full Whitney system.
    TailSum { gain: f64 },
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::TailSum { gain: 1.0 }
    }
}

/// Σ_{k≥K} x0 2^{-k} (ln(1/x0) + k ln 2).
fn dyadic_tail(x0: f64, k: u32) -> f64 {
    let kf = k as f64;
    x0 * 2f64.powf(1.0 - kf) * (-x0.ln() + LN_2 * (kf + 1.0))
}

/// Total c over the ranks |k| ≥ K of a gap whose middle third has length x0.
fn gap_mass_from(x0: f64, k: u32) -> f64 {
    if k == 0 {
        entropy_term(x0) + 2.0 * dyadic_tail(x0, 1)
    } else {
        2.0 * dyadic_tail(x0, k)
    }
}

/// Total c of the complete (untruncated) Whitney system of the given gap lengths.
pub fn whitney_mass(gap_lengths: &[f64]) -> f64 {
    gap_lengths.iter().map(|&l| gap_mass_from(l / 3.0, 0)).sum()
}

/// c-mass of arcs with |rank| > k_max, per gap.
pub fn omitted_mass(gap_lengths: &[f64], k_max: u32) -> Vec<f64> {
    gap_lengths.iter().map(|&l| gap_mass_from(l / 3.0, k_max + 1)).collect()
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.max(b)
}

/// Tail T_j over the infinite Whitney system of all parents, in the enumeration
/// ordered by (decreasing c, parent, |rank|, negative rank last).
fn infinite_tail(arc: &WhitneyArc, parents: &[(usize, f64)]) -> f64 {
    let lj = arc.length;
    let mut t = 0.0;
    for &(n, len) in parents {
        let x0 = len / 3.0;
        // first rank strictly shorter than lj
        let mut k = 0u32;
        while x0 * 2f64.powi(-(k as i32)) >= lj * (1.0 - 1e-12) {
            k += 1;
            if k > 2000 {
                break;
            }
        }
        t += gap_mass_from(x0, k);
        if k == 0 {
            continue;
        }
        let ke = k - 1;
        let le = x0 * 2f64.powi(-(ke as i32));
        if !same_length(le, lj) {
            continue;
        }
        let ce = entropy_term(le);
        match n.cmp(&arc.parent) {
            Ordering::Greater => t += if ke == 0 { ce } else { 2.0 * ce },
            Ordering::Less => {}
            Ordering::Equal => {
                if ke == 0 || arc.rank < 0 {
                    t += ce;
                } else {
                    t += 2.0 * ce;
                }
            }
        }
    }
    t
}

/// Attach λ_j to each arc according to `rule`.
pub fn assign_lambdas(arcs: &[WhitneyArc], rule: LambdaRule) -> Result<Vec<WhitneyArc>> {
    if arcs.is_empty() {
        return Err(Error::EmptyGapList);
    }
    for (i, a) in arcs.iter().enumerate() {
        if !(a.length < 1.0) {
            return Err(Error::DegenerateArc(i));
        }
    }
    let mut out = arcs.to_vec();
    match rule {
        LambdaRule::Constant(v) => {
            for a in out.iter_mut() {
                a.lambda = v;
            }
        }
        LambdaRule::TailSum { gain } => {
            let mut parents: Vec<(usize, f64)> = Vec::new();
            for a in arcs {
                if !parents.iter().any(|&(p, _)| p == a.parent) {
                    parents.push((a.parent, a.parent_length()));
                }
            }
            for a in out.iter_mut() {
                let t = infinite_tail(a, &parents);
                a.lambda = gain * (1.0f64).max(1.0 / t.sqrt());
            }
        }
    }
    Ok(out)
}

/// Tail-sum multipliers for a plain sequence c (any order), with `extra_tail`
/// accounting for mass beyond the listed terms.
pub fn tail_sum_lambdas(c: &[f64], extra_tail: f64, gain: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].partial_cmp(&c[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut lambda = vec![0.0; c.len()];
    let mut tail = extra_tail;
    for &i in order.iter().rev() {
        tail += c[i];
        lambda[i] = gain * (1.0f64).max(1.0 / tail.sqrt());
    }
    lambda
}

/// Enumeration order used by the tail-sum rule.
pub fn enumeration_order(arcs: &[WhitneyArc]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..arcs.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&arcs[i], &arcs[j]);
        b.weight()
            .partial_cmp(&a.weight())
            .unwrap_or(Ordering::Equal)
            .then(a.parent.cmp(&b.parent))
            .then(a.rank.abs().cmp(&b.rank.abs()))
            .then((a.rank < 0).cmp(&(b.rank < 0)))
    });
    order
}

/// Normalized distance from an angle to E.
pub fn dist_to_set(t: f64, e: &BeurlingCarlesonSet) -> f64 {
    e.dist(t)
}

/// Normalized distance from a closed arc lying in a gap to E.
pub fn arc_dist_to_set(arc: &Arc, e: &BeurlingCarlesonSet) -> f64 {
    e.dist(arc.start).min(e.dist(arc.end))
}
