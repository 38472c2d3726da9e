//! Outer functions from boundary weights, atomic singular inner functions and Blaschke products.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary_calculus::{
    analytic_part, angle_log_derivatives, bell_ratios, conjugate_function, grid_angle, AnalyticSeries, BoundaryGrid,
};
use crate::circle_sets::{Arc, BeurlingCarlesonSet, ANGLE_SLACK};
use crate::error::{Error, Result};

/// Floor below which ∫ log w is treated as −∞.
pub const LOG_FLOOR: f64 = -1e3;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPiece {
    pub arc: Arc,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightProfile {
    /// Constant on each piece, 1 on the rest of E.
    Piecewise(Vec<WeightPiece>),
    /// Grid samples; entries off E are ignored.
    Sampled { log2_size: u32, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeight {
    pub support: BeurlingCarlesonSet,
    pub profile: WeightProfile,
    pub log_integral: f64,
}

fn arc_inside_set(arc: &Arc, e: &BeurlingCarlesonSet) -> bool {
    e.components().iter().any(|c| {
        let o = c.offset(arc.start);
        let o = if o > TAU - ANGLE_SLACK { 0.0 } else { o };
        o + arc.span() <= c.span() + 1e-12
    })
}

impl BoundaryWeight {
    pub fn piecewise(support: &BeurlingCarlesonSet, pieces: Vec<WeightPiece>) -> Result<Self> {
        for (i, p) in pieces.iter().enumerate() {
            if !(p.value > 0.0 && p.value.is_finite()) {
                return Err(Error::WeightNotLogIntegrable(format!("piece {i} has value {}", p.value)));
            }
            if !arc_inside_set(&p.arc, support) {
                return Err(Error::Precondition(format!("piece {i} is not contained in E")));
            }
        }
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                let (a, b) = (&pieces[i].arc, &pieces[j].arc);
                if a.contains_open(b.start) || b.contains_open(a.start) {
                    return Err(Error::Precondition(format!("pieces {i} and {j} overlap")));
                }
            }
        }
        let log_integral = pieces.iter().map(|p| p.arc.length() * p.value.ln()).sum();
        let w = BoundaryWeight { support: support.clone(), profile: WeightProfile::Piecewise(pieces), log_integral };
        w.check_integrable()
    }

    /// One constant per component arc of E.
    pub fn per_component(support: &BeurlingCarlesonSet, values: &[f64]) -> Result<Self> {
        let comps = support.components();
        if comps.len() != values.len() {
            return Err(Error::LengthMismatch(values.len(), comps.len()));
        }
        let pieces = comps.iter().zip(values).map(|(a, &v)| WeightPiece { arc: *a, value: v }).collect();
        BoundaryWeight::piecewise(support, pieces)
    }

    pub fn constant(support: &BeurlingCarlesonSet, value: f64) -> Result<Self> {
        let n = support.components().len();
        BoundaryWeight::per_component(support, &vec![value; n])
    }

    pub fn sampled(support: &BeurlingCarlesonSet, log2_size: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << log2_size {
            return Err(Error::LengthMismatch(values.len(), 1usize << log2_size));
        }
        let mut w = BoundaryWeight {
            support: support.clone(),
            profile: WeightProfile::Sampled { log2_size, values },
            log_integral: 0.0,
        };
        let logs = w.log_samples(log2_size)?;
        w.log_integral = logs.iter().sum::<f64>() / logs.len() as f64;
        w.check_integrable()
    }

    pub fn from_fn<F: Fn(f64) -> f64>(support: &BeurlingCarlesonSet, log2_size: u32, f: F) -> Result<Self> {
        let values = (0..1usize << log2_size).map(|m| f(grid_angle(log2_size, m))).collect();
        BoundaryWeight::sampled(support, log2_size, values)
    }

    fn check_integrable(self) -> Result<Self> {
        if !(self.log_integral >= LOG_FLOOR) {
            return Err(Error::WeightNotLogIntegrable(format!("∫ log w = {}", self.log_integral)));
        }
        Ok(self)
    }

    /// w(t) on E; 1 elsewhere.
    pub fn value_at(&self, t: f64) -> f64 {
        if !self.support.contains(t) {
            return 1.0;
        }
        match &self.profile {
            WeightProfile::Piecewise(pieces) => {
                pieces.iter().find(|p| p.arc.contains_closed(t)).map(|p| p.value).unwrap_or(1.0)
            }
            WeightProfile::Sampled { log2_size, values } => {
                let n = values.len();
                let m = ((t / TAU) * n as f64).round() as usize % n;
                let _ = log2_size;
                values[m]
            }
        }
    }

    /// log w · 1_E on a grid; nodes sitting on a jump get the mean of the two sides.
    pub fn log_samples(&self, log2: u32) -> Result<Vec<f64>> {
        let n = 1usize << log2;
        match &self.profile {
            WeightProfile::Piecewise(pieces) => {
                let snap = 1e-9 * TAU / n as f64;
                Ok((0..n)
                    .map(|m| {
                        let t = grid_angle(log2, m);
                        pieces
                            .iter()
                            .map(|p| {
                                let lv = p.value.ln();
                                if p.arc.span() >= TAU - ANGLE_SLACK {
                                    return lv;
                                }
                                let o = p.arc.offset(t);
                                if o <= snap || TAU - o <= snap || (o - p.arc.span()).abs() <= snap {
                                    0.5 * lv
                                } else if o < p.arc.span() {
                                    lv
                                } else {
                                    0.0
                                }
                            })
                            .sum()
                    })
                    .collect())
            }
            WeightProfile::Sampled { log2_size, values } => {
                if *log2_size != log2 {
                    return Err(Error::Precondition(format!("weight sampled on 2^{log2_size}, requested 2^{log2}")));
                }
                let ind = crate::boundary_calculus::indicator_samples(&self.support, log2);
                let mut out = Vec::with_capacity(n);
                for (m, (&v, &e)) in values.iter().zip(&ind).enumerate() {
                    if e > 0.0 && !(v > 0.0 && v.is_finite()) {
                        return Err(Error::WeightNotLogIntegrable(format!("sample {m} is {v}")));
                    }
                    out.push(if e > 0.0 { e * v.ln() } else { 0.0 });
                }
                Ok(out)
            }
        }
    }

    /// ∫ w 1_E ζ^{-n} dm.
    pub fn fourier(&self, n: i64) -> Complex64 {
        match &self.profile {
            WeightProfile::Piecewise(pieces) => {
                let mut acc = ZERO;
                for c in self.support.components() {
                    acc += arc_moment(&c, n);
                }
                for p in pieces {
                    acc += (p.value - 1.0) * arc_moment(&p.arc, n);
                }
                acc
            }
            WeightProfile::Sampled { log2_size, values } => {
                let ind = crate::boundary_calculus::indicator_samples(&self.support, *log2_size);
                let mut acc = ZERO;
                for (m, (&v, &e)) in values.iter().zip(&ind).enumerate() {
                    acc += Complex64::from_polar(e * v, -(n as f64) * grid_angle(*log2_size, m));
                }
                acc / values.len() as f64
            }
        }
    }
}

/// ∫_arc ζ^{-n} dm.
pub fn arc_moment(arc: &Arc, n: i64) -> Complex64 {
    if n == 0 {
        return Complex64::new(arc.length(), 0.0);
    }
    let nf = n as f64;
    let i = Complex64::new(0.0, 1.0);
    (Complex64::from_polar(1.0, -nf * arc.end) - Complex64::from_polar(1.0, -nf * arc.start)) / (-i * nf * TAU)
}

/// Herglotz integral (1/2π)∫_a^b (e^{it}+z)/(e^{it}−z) dt of the indicator of an arc, |z| < 1.
pub fn arc_herglotz(arc: &Arc, z: Complex64) -> Complex64 {
    if arc.span() >= TAU - ANGLE_SLACK {
        return Complex64::new(1.0, 0.0);
    }
    let ea = arc.start_point() - z;
    let eb = arc.end_point() - z;
    let half = 0.5 * arc.span();
    let mut darg = (eb / ea).arg();
    if darg < half - 1e-9 {
        darg += TAU;
    }
    Complex64::new(-arc.span() / TAU + darg / PI, -(eb.norm() / ea.norm()).ln() / PI)
}

/// z-derivatives of the arc Herglotz integral.
fn arc_herglotz_derivatives(arc: &Arc, z: Complex64) -> [Complex64; 3] {
    let qa = 1.0 / (arc.start_point() - z);
    let qb = 1.0 / (arc.end_point() - z);
    let c = Complex64::new(0.0, 1.0 / PI);
    [c * (qb - qa), c * (qb * qb - qa * qa), c * 2.0 * (qb * qb * qb - qa * qa * qa)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OuterKind {
    /// log|W| = Σ c_i 1_{arc_i}; superposition is allowed.
    Piecewise(Vec<(Arc, f64)>),
    /// log|W| sampled on a grid.
    Sampled { log2_size: u32, logs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterFunction {
    pub kind: OuterKind,
}

impl OuterFunction {
    pub fn one() -> Self {
        OuterFunction { kind: OuterKind::Piecewise(Vec::new()) }
    }

    pub fn from_weight(w: &BoundaryWeight) -> Result<Self> {
        Ok(match &w.profile {
            WeightProfile::Piecewise(pieces) => {
                OuterFunction { kind: OuterKind::Piecewise(pieces.iter().map(|p| (p.arc, p.value.ln())).collect()) }
            }
            WeightProfile::Sampled { log2_size, .. } => {
                OuterFunction { kind: OuterKind::Sampled { log2_size: *log2_size, logs: w.log_samples(*log2_size)? } }
            }
        })
    }

    pub fn from_log_pieces(pieces: Vec<(Arc, f64)>) -> Self {
        OuterFunction { kind: OuterKind::Piecewise(pieces) }
    }

    pub fn from_log_samples(log2_size: u32, logs: Vec<f64>) -> Self {
        OuterFunction { kind: OuterKind::Sampled { log2_size, logs } }
    }

    /// Product of outer functions (sum of log-moduli).
    pub fn product(&self, other: &OuterFunction) -> Result<Self> {
        match (&self.kind, &other.kind) {
            (OuterKind::Piecewise(a), OuterKind::Piecewise(b)) => {
                Ok(OuterFunction::from_log_pieces(a.iter().chain(b.iter()).copied().collect()))
            }
            (OuterKind::Sampled { log2_size: la, logs: a }, OuterKind::Sampled { log2_size: lb, logs: b })
                if la == lb =>
            {
                Ok(OuterFunction::from_log_samples(*la, a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            _ => Err(Error::Precondition("outer factors live on different representations".into())),
        }
    }

    /// log W(z) for |z| < 1.
    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            OuterKind::Piecewise(pieces) => pieces.iter().map(|(a, c)| *c * arc_herglotz(a, z)).sum(),
            OuterKind::Sampled { logs, log2_size } => {
                let mut acc = ZERO;
                for (m, &u) in logs.iter().enumerate() {
                    if u != 0.0 {
                        let zeta = Complex64::from_polar(1.0, grid_angle(*log2_size, m));
                        acc += u * (zeta + z) / (zeta - z);
                    }
                }
                acc / logs.len() as f64
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.log_eval(z).exp()
    }

    /// ∫ log|W| dm = log|W(0)|.
    pub fn log_modulus_mean(&self) -> f64 {
        match &self.kind {
            OuterKind::Piecewise(pieces) => pieces.iter().map(|(a, c)| c * a.length()).sum(),
            OuterKind::Sampled { logs, .. } => logs.iter().sum::<f64>() / logs.len() as f64,
        }
    }

    /// Boundary value at e^{it}, closed form; NaN at piece endpoints where the phase is singular.
    pub fn boundary_value(&self, t: f64) -> Complex64 {
        match &self.kind {
            OuterKind::Piecewise(pieces) => {
                let mut u = 0.0;
                let mut v = 0.0;
                for (a, c) in pieces {
                    if a.span() >= TAU - ANGLE_SLACK {
                        u += c;
                        continue;
                    }
                    let sa = (0.5 * (t - a.start)).sin();
                    let sb = (0.5 * (t - a.end)).sin();
                    if sa == 0.0 || sb == 0.0 {
                        return Complex64::new(f64::NAN, f64::NAN);
                    }
                    if a.contains_open(t) {
                        u += c;
                    }
                    v += c / PI * (sa / sb).abs().ln();
                }
                Complex64::from_polar(u.exp(), v)
            }
            OuterKind::Sampled { .. } => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// Boundary samples: closed form for pieces, exp(u + iũ) for sampled data.
    pub fn boundary_samples(&self, log2: u32) -> Result<BoundaryGrid> {
        match &self.kind {
            OuterKind::Piecewise(_) => BoundaryGrid::from_fn(log2, |t| self.boundary_value(t)),
            OuterKind::Sampled { log2_size, logs } => {
                if *log2_size != log2 {
                    return Err(Error::Precondition(format!("outer sampled on 2^{log2_size}, requested 2^{log2}")));
                }
                let conj = conjugate_function(logs);
                BoundaryGrid::new(log2, logs.iter().zip(&conj).map(|(u, v)| Complex64::from_polar(u.exp(), *v)).collect())
            }
        }
    }

    /// log|W^{(m)}(t)| for m = 1..=3 at a boundary point off the support of log|W| (piecewise kind).
    pub fn log_abs_boundary_derivatives(&self, t: f64) -> Option<[f64; 3]> {
        let OuterKind::Piecewise(pieces) = &self.kind else { return None };
        let z = Complex64::from_polar(1.0, t);
        let mut d = [ZERO; 3];
        let mut u = 0.0;
        for (a, c) in pieces {
            let f = arc_herglotz_derivatives(a, z);
            for k in 0..3 {
                d[k] += *c * f[k];
            }
            if a.contains_open(t) {
                u += c;
            }
        }
        let b = bell_ratios(angle_log_derivatives(z, d));
        Some([u + b[0].norm().ln(), u + b[1].norm().ln(), u + b[2].norm().ln()])
    }
}

/// Output of the spectral outer-function route.
#[derive(Debug, Clone)]
pub struct OuterSamples {
    pub boundary: BoundaryGrid,
    pub series: AnalyticSeries,
    /// ∫ log|W| dm from the same samples.
    pub log_abs_at_zero: f64,
}

/// W = exp(u + iũ), u = log w · 1_E, with its Taylor series.
pub fn outer_from_weight(w: &BoundaryWeight, log2: u32) -> Result<OuterSamples> {
    let u = w.log_samples(log2)?;
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    if !(mean >= LOG_FLOOR) {
        return Err(Error::WeightNotLogIntegrable(format!("∫ log w = {mean}")));
    }
    let boundary = OuterFunction::from_log_samples(log2, u).boundary_samples(log2)?;
    let series = analytic_part(&boundary);
    Ok(OuterSamples { boundary, series, log_abs_at_zero: mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    C,
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: f64,
    pub mass: f64,
    pub part: Part,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SingularMeasure {
    pub atoms: Vec<Atom>,
    pub carrier_c: Option<BeurlingCarlesonSet>,
}

impl SingularMeasure {
    pub fn new(atoms: Vec<Atom>, carrier_c: Option<BeurlingCarlesonSet>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::Precondition(format!("atom {i} has mass {}", a.mass)));
            }
            if let (Part::C, Some(f)) = (a.part, &carrier_c) {
                if f.dist(a.angle) > 1e-12 {
                    return Err(Error::Precondition(format!("C-part atom {i} lies off the declared carrier")));
                }
            }
        }
        Ok(SingularMeasure { atoms, carrier_c })
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SingularMeasure {
            atoms: self.atoms.iter().map(|a| Atom { mass: a.mass * s, ..*a }).collect(),
            carrier_c: self.carrier_c.clone(),
        }
    }

    pub fn part(&self, p: Part) -> Self {
        SingularMeasure {
            atoms: self.atoms.iter().filter(|a| a.part == p).copied().collect(),
            carrier_c: self.carrier_c.clone(),
        }
    }

    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for a in &self.atoms {
            let zeta = Complex64::from_polar(1.0, a.angle);
            acc -= a.mass * (zeta + z) / (zeta - z);
        }
        acc
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.log_eval(z).exp()
    }
}

/// Singular inner function S_ν(z) = exp(−Σ mass (ζ+z)/(ζ−z)), |z| < 1.
pub fn inner_singular_eval(nu: &SingularMeasure, z: Complex64) -> Result<Complex64> {
    if z.norm() >= 1.0 {
        return Err(Error::OutsideDomain(format!("{z}")));
    }
    Ok(nu.eval(z))
}

/// Taylor coefficients of exp(−a(1+z)/(1−z)): e^{-a} L_n^{(-1)}(2a).
pub fn atom_taylor(mass: f64, len: usize) -> Vec<f64> {
    let x = 2.0 * mass;
    let mut out = Vec::with_capacity(len);
    let (mut prev, mut cur) = (0.0, 1.0);
    for n in 0..len {
        out.push(cur);
        let next = if n == 0 { -x } else { ((2.0 * n as f64 - x) * cur - (n as f64 - 1.0) * prev) / (n as f64 + 1.0) };
        prev = cur;
        cur = next;
    }
    let s = (-mass).exp();
    out.iter().map(|v| v * s).collect()
}

fn convolve_truncated(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    for (i, x) in a.iter().enumerate().take(len) {
        if *x == ZERO {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InnerFunction {
    pub blaschke_zeros: Vec<Complex64>,
    pub singular: SingularMeasure,
}

fn blaschke_factor(a: Complex64, z: Complex64) -> Complex64 {
    if a.norm() == 0.0 {
        return z;
    }
    (a.norm() / a) * (a - z) / (1.0 - a.conj() * z)
}

impl InnerFunction {
    pub fn new(blaschke_zeros: Vec<Complex64>, singular: SingularMeasure) -> Result<Self> {
        if let Some(a) = blaschke_zeros.iter().find(|a| !(a.norm() < 1.0)) {
            return Err(Error::OutsideDomain(format!("Blaschke zero {a}")));
        }
        Ok(InnerFunction { blaschke_zeros, singular })
    }

    pub fn one() -> Self {
        InnerFunction::default()
    }

    pub fn is_trivial(&self) -> bool {
        self.blaschke_zeros.is_empty() && self.singular.atoms.is_empty()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let b: Complex64 = self.blaschke_zeros.iter().map(|&a| blaschke_factor(a, z)).product();
        b * self.singular.eval(z)
    }

    /// Boundary value; 0 exactly at an atom (the radial limit there).
    pub fn boundary(&self, t: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, t);
        for a in &self.singular.atoms {
            let d = crate::circle_sets::wrap_angle(t - a.angle);
            if d.min(TAU - d) < 1e-15 {
                return ZERO;
            }
        }
        self.eval(z)
    }

    /// z-derivatives of log θ (orders 1..=3).
    pub fn log_derivatives(&self, z: Complex64) -> [Complex64; 3] {
        let mut d = [ZERO; 3];
        for &a in &self.blaschke_zeros {
            let p = 1.0 / (z - a);
            let q = a.conj() / (1.0 - a.conj() * z);
            d[0] += p + q;
            d[1] += -p * p + q * q;
            d[2] += 2.0 * (p * p * p + q * q * q);
        }
        for at in &self.singular.atoms {
            let zeta = Complex64::from_polar(1.0, at.angle);
            let p = 1.0 / (zeta - z);
            let c = -2.0 * at.mass * zeta;
            d[0] += c * p * p;
            d[1] += 2.0 * c * p * p * p;
            d[2] += 6.0 * c * p * p * p * p;
        }
        d
    }

    /// log|θ^{(m)}(t)|, m = 1..=3, at a boundary point away from the singular support.
    pub fn log_abs_boundary_derivatives(&self, t: f64) -> [f64; 3] {
        let z = Complex64::from_polar(1.0, t);
        let lm = self.eval(z).norm().ln();
        let b = bell_ratios(angle_log_derivatives(z, self.log_derivatives(z)));
        [lm + b[0].norm().ln(), lm + b[1].norm().ln(), lm + b[2].norm().ln()]
    }

    /// First `len` Taylor coefficients, exact up to round-off.
    pub fn taylor(&self, len: usize) -> Vec<Complex64> {
        let mut acc = vec![ZERO; len];
        if len == 0 {
            return acc;
        }
        acc[0] = Complex64::new(1.0, 0.0);
        for &a in &self.blaschke_zeros {
            let mut f = vec![ZERO; len];
            if a.norm() == 0.0 {
                if len > 1 {
                    f[1] = Complex64::new(1.0, 0.0);
                }
            } else {
                let u = a.norm() / a;
                f[0] = u * a;
                let mut pw = Complex64::new(1.0, 0.0);
                for c in f.iter_mut().skip(1) {
                    *c = u * pw * (a.norm_sqr() - 1.0);
                    pw *= a.conj();
                }
            }
            acc = convolve_truncated(&acc, &f, len);
        }
        for at in &self.singular.atoms {
            let base = atom_taylor(at.mass, len);
            let f: Vec<Complex64> =
                base.iter().enumerate().map(|(n, &v)| Complex64::from_polar(v, -(n as f64) * at.angle)).collect();
            acc = convolve_truncated(&acc, &f, len);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEntry {
    pub m: u32,
    pub levels: Vec<u32>,
    /// log10 of max |∂^m F|·d^{2m} per level.
    pub log10_c: Vec<f64>,
    /// max/min of the fitted constants across levels.
    pub spread: f64,
    /// max over levels of C(ℓ)/C(first level).
    pub growth: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub log2_size: u32,
    pub factor: f64,
    pub entries: Vec<DerivativeEntry>,
}

impl DerivativeReport {
    pub fn all_stable(&self) -> bool {
        self.entries.iter().all(|e| e.stable)
    }

    pub fn entry(&self, m: u32) -> Option<&DerivativeEntry> {
        self.entries.iter().find(|e| e.m == m)
    }
}

/// Fit C_m(ℓ) = max |F^{(m)}|·d^{2m} over grid points at dyadic distance level ℓ from `set`.
fn fit_derivative_constants<F: Fn(f64) -> Option<[f64; 4]>>(
    set: &BeurlingCarlesonSet,
    log_derivs: F,
    derivs: &[u32],
    log2: u32,
    count: u32,
    factor: f64,
) -> Result<DerivativeReport> {
    let top = crate::cutoff::finest_level(log2);
    if top < count + 1 {
        return Err(Error::Resolution(format!("grid 2^{log2} cannot host {count} dyadic levels")));
    }
    let levels: Vec<u32> = (top + 1 - count..=top).collect();
    let lo = 2f64.powi(-(top as i32) - 1);
    let hi = 2f64.powi(-(levels[0] as i32));
    let mut best = vec![vec![f64::NEG_INFINITY; levels.len()]; derivs.len()];
    let mut counts = vec![0usize; levels.len()];
    for m in 0..1usize << log2 {
        let t = grid_angle(log2, m);
        let d = set.dist(t);
        if !(d >= lo && d < hi) {
            continue;
        }
        let Some(lg) = log_derivs(t) else { continue };
        let li = ((-d.log2()).ceil() as u32 - 1 - levels[0]) as usize;
        counts[li] += 1;
        for (k, &mm) in derivs.iter().enumerate() {
            let v = lg[mm as usize] + 2.0 * mm as f64 * d.ln();
            if v > best[k][li] {
                best[k][li] = v;
            }
        }
    }
    if let Some(i) = counts.iter().position(|&k| k < 8) {
        return Err(Error::Resolution(format!("level {} holds only {} grid points", levels[i], counts[i])));
    }
    let entries = derivs
        .iter()
        .zip(&best)
        .map(|(&m, row)| {
            let log10: Vec<f64> = row.iter().map(|v| v / std::f64::consts::LN_10).collect();
            let finite = log10.iter().all(|v| v.is_finite());
            let (mx, mn) = log10.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), &v| (a.max(v), b.min(v)));
            let spread = if finite { 10f64.powf(mx - mn) } else if mx == f64::NEG_INFINITY { 1.0 } else { f64::INFINITY };
            let growth = if finite { 10f64.powf(mx - log10[0]) } else { spread };
            DerivativeEntry { m, levels: levels.clone(), log10_c: log10, spread, growth, stable: growth <= factor }
        })
        .collect();
    Ok(DerivativeReport { log2_size: log2, factor, entries })
}

/// |∂^m W| ≤ C_m dist^{-2m} on the gap side: fitted constants per dyadic level.
pub fn certify_w_derivatives(
    w: &OuterFunction,
    e: &BeurlingCarlesonSet,
    derivs: &[u32],
    log2: u32,
    count: u32,
) -> Result<DerivativeReport> {
    if derivs.iter().any(|&m| m > 3) {
        return Err(Error::Precondition("derivative orders above 3 are not supported".into()));
    }
    match &w.kind {
        OuterKind::Piecewise(_) => fit_derivative_constants(
            e,
            |t| {
                let b = w.log_abs_boundary_derivatives(t)?;
                let u = w.boundary_value(t).norm().ln();
                Some([u, b[0], b[1], b[2]])
            },
            derivs,
            log2,
            count,
            4.0,
        ),
        OuterKind::Sampled { log2_size, .. } => {
            if *log2_size != log2 {
                return Err(Error::Precondition("sampled outer lives on another grid".into()));
            }
            let samples = w.boundary_samples(log2)?;
            let spec = samples.spectrum();
            let n = spec.len();
            let mut derived = Vec::new();
            for m in 0..=3u32 {
                let mut buf: Vec<Complex64> = spec
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let kk = if k < n / 2 { k as f64 } else if k == n / 2 { 0.0 } else { k as f64 - n as f64 };
                        c * Complex64::new(0.0, kk).powu(m)
                    })
                    .collect();
                rustfft::FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
                derived.push(buf);
            }
            fit_derivative_constants(
                e,
                |t| {
                    let m = ((t / TAU) * n as f64).round() as usize % n;
                    Some([0, 1, 2, 3].map(|k| derived[k][m].norm().ln()))
                },
                derivs,
                log2,
                count,
                4.0,
            )
        }
    }
}

/// |∂^m θ| ≤ C_m dist(·, F)^{-2m} off the carrier F.
pub fn certify_theta_derivatives(
    theta: &InnerFunction,
    carrier: &BeurlingCarlesonSet,
    derivs: &[u32],
    log2: u32,
    count: u32,
) -> Result<DerivativeReport> {
    if derivs.iter().any(|&m| m > 3) {
        return Err(Error::Precondition("derivative orders above 3 are not supported".into()));
    }
    for a in &theta.singular.atoms {
        if carrier.dist(a.angle) > 1e-12 {
            return Err(Error::Precondition("singular support is not inside the carrier".into()));
        }
    }
    fit_derivative_constants(
        carrier,
        |t| {
            let b = theta.log_abs_boundary_derivatives(t);
            Some([theta.boundary(t).norm().ln(), b[0], b[1], b[2]])
        },
        derivs,
        log2,
        count,
        4.0,
    )
}
