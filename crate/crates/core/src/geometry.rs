//! Periodic boundary profiles and the domains built from them.
//!
//! The thin domain is described directly in its vertically rescaled form
//! `{0 < x1 < 1, -h(x1/eps^alpha) < x2 < g(x1/eps)}`; the original thin
//! domain is recovered by multiplying `x2` by `eps`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Closed-form family of a [`Profile`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant(f64),
    /// `base + sum a cos(2 pi k y / L) + sum b sin(2 pi k y / L)`.
    Trig {
        base: f64,
        cos_terms: Vec<(f64, u32)>,
        sin_terms: Vec<(f64, u32)>,
    },
    /// Periodic linear interpolation of `(y, value)` knots inside one period.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
}

/// A periodic boundary function with cached extrema and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    kind: ProfileKind,
    period: f64,
    min: f64,
    max: f64,
    mean: f64,
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Self::constant_with_period(value, 1.0).expect("unit period is valid")
    }

    pub fn constant_with_period(value: f64, period: f64) -> Result<Self> {
        check_period(period)?;
        if !value.is_finite() {
            return Err(Error::Argument(format!("constant profile value {value} is not finite")));
        }
        Ok(Self {
            kind: ProfileKind::Constant(value),
            period,
            min: value,
            max: value,
            mean: value,
        })
    }

    /// `base + sum amp cos(2 pi k y / period)`.
    pub fn cosine(base: f64, terms: &[(f64, u32)], period: f64) -> Result<Self> {
        Self::series(base, terms.to_vec(), Vec::new(), period)
    }

    /// `base + sum amp sin(2 pi k y / period)`.
    pub fn sine(base: f64, terms: &[(f64, u32)], period: f64) -> Result<Self> {
        Self::series(base, Vec::new(), terms.to_vec(), period)
    }

    pub fn series(base: f64, cos_terms: Vec<(f64, u32)>, sin_terms: Vec<(f64, u32)>, period: f64) -> Result<Self> {
        check_period(period)?;
        if !base.is_finite() {
            return Err(Error::Argument("series base is not finite".into()));
        }
        for &(a, k) in cos_terms.iter().chain(&sin_terms) {
            if !a.is_finite() {
                return Err(Error::Argument("series amplitude is not finite".into()));
            }
            if k == 0 {
                return Err(Error::Argument("series harmonics must be >= 1".into()));
            }
        }
        if cos_terms.is_empty() && sin_terms.is_empty() {
            return Self::constant_with_period(base, period);
        }
        let mut profile = Self {
            kind: ProfileKind::Trig {
                base,
                cos_terms,
                sin_terms,
            },
            period,
            min: base,
            max: base,
            mean: base,
        };
        let (min, max) = profile.trig_extrema();
        profile.min = min;
        profile.max = max;
        Ok(profile)
    }

    /// Knot abscissae must be strictly increasing inside `[0, period)`.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>, period: f64) -> Result<Self> {
        check_period(period)?;
        if knots.is_empty() {
            return Err(Error::Argument(
                "piecewise-linear profile needs at least one knot".into(),
            ));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Argument(
                    "piecewise-linear knots must be strictly increasing".into(),
                ));
            }
        }
        if knots
            .iter()
            .any(|&(y, v)| !(0.0..period).contains(&y) || !v.is_finite())
        {
            return Err(Error::Argument(format!(
                "piecewise-linear knots must lie in [0, {period}) with finite values"
            )));
        }
        let min = knots.iter().map(|k| k.1).fold(f64::INFINITY, f64::min);
        let max = knots.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max);
        // Exact trapezoid sum over closed segments, including the wrap-around one.
        let n = knots.len();
        let mut integral = 0.0;
        for i in 0..n {
            let (y0, v0) = knots[i];
            let (y1, v1) = if i + 1 < n {
                knots[i + 1]
            } else {
                (knots[0].0 + period, knots[0].1)
            };
            integral += 0.5 * (v0 + v1) * (y1 - y0);
        }
        Ok(Self {
            kind: ProfileKind::PiecewiseLinear { knots },
            period,
            min,
            max,
            mean: integral / period,
        })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ProfileKind::Constant(_))
    }

    /// Piecewise-linear profiles have jumps in the derivative.
    pub fn has_continuous_derivative(&self) -> bool {
        !matches!(self.kind, ProfileKind::PiecewiseLinear { .. })
    }

    fn max_harmonic(&self) -> u32 {
        match &self.kind {
            ProfileKind::Trig {
                cos_terms, sin_terms, ..
            } => cos_terms.iter().chain(sin_terms).map(|t| t.1).max().unwrap_or(1),
            _ => 1,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant(c) => *c,
            ProfileKind::Trig {
                base,
                cos_terms,
                sin_terms,
            } => {
                let w = 2.0 * PI * y / self.period;
                let c: f64 = cos_terms.iter().map(|&(a, k)| a * (k as f64 * w).cos()).sum();
                let s: f64 = sin_terms.iter().map(|&(b, k)| b * (k as f64 * w).sin()).sum();
                base + c + s
            }
            ProfileKind::PiecewiseLinear { knots } => {
                let (y0, v0, y1, v1, t) = self.segment(knots, y);
                v0 + (v1 - v0) * (t - y0) / (y1 - y0)
            }
        }
    }

    /// Derivative; right derivative at piecewise-linear knots.
    pub fn eval_deriv(&self, y: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant(_) => 0.0,
            ProfileKind::Trig {
                cos_terms, sin_terms, ..
            } => {
                let scale = 2.0 * PI / self.period;
                let w = scale * y;
                let c: f64 = cos_terms
                    .iter()
                    .map(|&(a, k)| -a * k as f64 * scale * (k as f64 * w).sin())
                    .sum();
                let s: f64 = sin_terms
                    .iter()
                    .map(|&(b, k)| b * k as f64 * scale * (k as f64 * w).cos())
                    .sum();
                c + s
            }
            ProfileKind::PiecewiseLinear { knots } => {
                let (y0, v0, y1, v1, _) = self.segment(knots, y);
                (v1 - v0) / (y1 - y0)
            }
        }
    }

    /// Returns the segment `(y0, v0, y1, v1)` containing `y` and the wrapped `y`.
    fn segment(&self, knots: &[(f64, f64)], y: f64) -> (f64, f64, f64, f64, f64) {
        let l = self.period;
        let n = knots.len();
        if n == 1 {
            return (0.0, knots[0].1, l, knots[0].1, y.rem_euclid(l));
        }
        let mut t = y.rem_euclid(l);
        if t < knots[0].0 {
            t += l;
        }
        match knots.iter().rposition(|k| k.0 <= t) {
            Some(i) if i + 1 < n => (knots[i].0, knots[i].1, knots[i + 1].0, knots[i + 1].1, t),
            _ => {
                let last = knots[n - 1];
                (last.0, last.1, knots[0].0 + l, knots[0].1, t)
            }
        }
    }

    fn scan_points(&self) -> usize {
        64 * self.max_harmonic() as usize
    }

    /// Extrema of a trig series from the roots of its derivative.
    fn trig_extrema(&self) -> (f64, f64) {
        let (lo, hi, _) = self.trig_scan();
        (lo, hi)
    }

    fn trig_scan(&self) -> (f64, f64, f64) {
        let n = self.scan_points();
        let l = self.period;
        let (mut lo, mut hi, mut at) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        let mut visit = |y: f64| {
            let v = self.eval(y);
            if v < lo {
                lo = v;
                at = y;
            }
            hi = hi.max(v);
        };
        let mut prev_y = 0.0;
        let mut prev_d = self.eval_deriv(0.0);
        visit(0.0);
        for i in 1..=n {
            let y = l * i as f64 / n as f64;
            let d = self.eval_deriv(y);
            visit(y);
            if prev_d == 0.0 {
                visit(prev_y);
            } else if prev_d.signum() != d.signum() && d != 0.0 {
                visit(bisect(|t| self.eval_deriv(t), prev_y, y));
            }
            prev_y = y;
            prev_d = d;
        }
        (lo, hi, at.rem_euclid(l))
    }

    /// A point of `[0, period)` where the minimum is attained (the first one found).
    pub fn argmin(&self) -> f64 {
        match &self.kind {
            ProfileKind::Constant(_) => 0.0,
            ProfileKind::Trig { .. } => self.trig_scan().2,
            ProfileKind::PiecewiseLinear { knots } => knots
                .iter()
                .fold(
                    (f64::INFINITY, 0.0),
                    |(v, y), k| if k.1 < v { (k.1, k.0) } else { (v, y) },
                )
                .1
                .rem_euclid(self.period),
        }
    }

    /// Length fraction of one period on which `value(y) > level`.
    pub fn superlevel_fraction(&self, level: f64) -> f64 {
        if level < self.min {
            return 1.0;
        }
        if level >= self.max {
            return 0.0;
        }
        let l = self.period;
        match &self.kind {
            ProfileKind::Constant(_) => unreachable!("min == max for constants"),
            ProfileKind::PiecewiseLinear { knots } => {
                let n = knots.len();
                let mut measure = 0.0;
                for i in 0..n {
                    let (y0, v0) = knots[i];
                    let (y1, v1) = if i + 1 < n {
                        knots[i + 1]
                    } else {
                        (knots[0].0 + l, knots[0].1)
                    };
                    let len = y1 - y0;
                    measure += if v0 > level && v1 > level {
                        len
                    } else if v0 <= level && v1 <= level {
                        0.0
                    } else {
                        let cross = (level - v0) / (v1 - v0);
                        if v0 > level {
                            cross * len
                        } else {
                            (1.0 - cross) * len
                        }
                    };
                }
                measure / l
            }
            ProfileKind::Trig { .. } => {
                let f = |y: f64| self.eval(y) - level;
                let n = self.scan_points();
                let mut cuts = vec![0.0];
                let mut prev_y = 0.0;
                let mut prev_v = f(0.0);
                for i in 1..=n {
                    let y = l * i as f64 / n as f64;
                    let v = f(y);
                    if (prev_v > 0.0) != (v > 0.0) {
                        cuts.push(bisect(f, prev_y, y));
                    }
                    prev_y = y;
                    prev_v = v;
                }
                cuts.push(l);
                let measure: f64 = cuts
                    .windows(2)
                    .filter(|w| f(0.5 * (w[0] + w[1])) > 0.0)
                    .map(|w| w[1] - w[0])
                    .sum();
                measure / l
            }
        }
    }
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("profile period must be > 0, got {period}")))
    }
}

/// Root of `f` in `[a, b]` given a sign change.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn write_pairs(f: &mut fmt::Formatter<'_>, pairs: impl Iterator<Item = (f64, String)>) -> fmt::Result {
    write!(f, "[")?;
    for (i, (a, b)) in pairs.enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "({a:?}, {b})")?;
    }
    write!(f, "]")
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Constant(c) => {
                if self.period == 1.0 {
                    write!(f, "constant({c:?})")
                } else {
                    write!(f, "constant(value={c:?}, period={:?})", self.period)
                }
            }
            ProfileKind::Trig {
                base,
                cos_terms,
                sin_terms,
            } => {
                let ints = |t: &Vec<(f64, u32)>| t.iter().map(|&(a, k)| (a, k.to_string())).collect::<Vec<_>>();
                if sin_terms.is_empty() || cos_terms.is_empty() {
                    let (name, terms) = if sin_terms.is_empty() {
                        ("cosine", cos_terms)
                    } else {
                        ("sine", sin_terms)
                    };
                    write!(f, "{name}(base={base:?}, terms=")?;
                    write_pairs(f, ints(terms).into_iter())?;
                } else {
                    write!(f, "series(base={base:?}, cos=")?;
                    write_pairs(f, ints(cos_terms).into_iter())?;
                    write!(f, ", sin=")?;
                    write_pairs(f, ints(sin_terms).into_iter())?;
                }
                write!(f, ", period={:?})", self.period)
            }
            ProfileKind::PiecewiseLinear { knots } => {
                write!(f, "linear(knots=")?;
                write_pairs(f, knots.iter().map(|&(y, v)| (y, format!("{v:?}"))))?;
                write!(f, ", period={:?})", self.period)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Number(f64),
    Pairs(Vec<(f64, f64)>),
}

struct DescriptorParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> DescriptorParser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Argument(format!(
            "profile descriptor `{}`: {msg} at offset {}",
            self.src, self.pos
        ))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected identifier"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(rest.len());
        let value = rest[..len].parse::<f64>().map_err(|_| self.err("expected number"))?;
        self.pos += len;
        Ok(value)
    }

    fn pairs(&mut self) -> Result<Vec<(f64, f64)>> {
        self.expect('[')?;
        let mut out = Vec::new();
        if self.eat(']') {
            return Ok(out);
        }
        loop {
            self.expect('(')?;
            let a = self.number()?;
            self.expect(',')?;
            let b = self.number()?;
            self.expect(')')?;
            out.push((a, b));
            if self.eat(']') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn value(&mut self) -> Result<Arg> {
        self.skip_ws();
        if self.src[self.pos..].starts_with('[') {
            Ok(Arg::Pairs(self.pairs()?))
        } else {
            Ok(Arg::Number(self.number()?))
        }
    }

    /// `name(arg, key=value, ...)`; a bare leading value is keyed as `value`.
    fn call(&mut self) -> Result<(&'a str, Vec<(String, Arg)>)> {
        let name = self.ident()?;
        self.expect('(')?;
        let mut args = Vec::new();
        if !self.eat(')') {
            loop {
                self.skip_ws();
                let save = self.pos;
                let key = match self.ident() {
                    Ok(k) if self.eat('=') => k.to_string(),
                    _ => {
                        self.pos = save;
                        "value".to_string()
                    }
                };
                let v = self.value()?;
                args.push((key, v));
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("trailing characters"));
        }
        Ok((name, args))
    }
}

fn harmonics(pairs: Vec<(f64, f64)>) -> Result<Vec<(f64, u32)>> {
    pairs
        .into_iter()
        .map(|(a, k)| {
            if k >= 1.0 && k.fract() == 0.0 && k <= u32::MAX as f64 {
                Ok((a, k as u32))
            } else {
                Err(Error::Argument(format!("harmonic index {k} is not a positive integer")))
            }
        })
        .collect()
}

impl FromStr for Profile {
    type Err = Error;

    /// Parses descriptors such as `cosine(base=1.0, terms=[(0.5, 1)])`,
    /// `sine(...)`, `series(base=, cos=[..], sin=[..])`, `constant(1.0)` and
    /// `linear(knots=[(y, v), ...])`; `period` defaults to 1.
    fn from_str(s: &str) -> Result<Self> {
        let mut parser = DescriptorParser { src: s.trim(), pos: 0 };
        let (name, args) = parser.call()?;
        let mut period = 1.0;
        let mut base = None;
        let mut number = None;
        let mut lists: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for (key, arg) in args {
            match (key.as_str(), arg) {
                ("period", Arg::Number(p)) => period = p,
                ("base", Arg::Number(b)) => base = Some(b),
                ("value", Arg::Number(v)) => number = Some(v),
                (k @ ("terms" | "cos" | "sin" | "knots"), Arg::Pairs(p)) => lists.push((k.to_string(), p)),
                (k, _) => return Err(Error::Argument(format!("profile `{name}`: unexpected argument `{k}`"))),
            }
        }
        let mut take = |key: &str| {
            lists
                .iter()
                .position(|(k, _)| k == key)
                .map(|i| lists.remove(i).1)
                .unwrap_or_default()
        };
        let profile = match name {
            "constant" => Profile::constant_with_period(
                number
                    .or(base)
                    .ok_or_else(|| Error::Argument("constant profile needs a value".into()))?,
                period,
            ),
            "cosine" => Profile::cosine(base.unwrap_or(0.0), &harmonics(take("terms"))?, period),
            "sine" => Profile::sine(base.unwrap_or(0.0), &harmonics(take("terms"))?, period),
            "series" => Profile::series(
                base.unwrap_or(0.0),
                harmonics(take("cos"))?,
                harmonics(take("sin"))?,
                period,
            ),
            "linear" => Profile::piecewise_linear(take("knots"), period),
            other => Err(Error::Argument(format!("unknown profile family `{other}`"))),
        }?;
        if let Some((k, _)) = lists.first() {
            return Err(Error::Argument(format!("profile `{name}`: unexpected argument `{k}`")));
        }
        Ok(profile)
    }
}

/// The rescaled thin domain with top period `eps * L1` and bottom period `eps^alpha * L2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinDomainSpec {
    pub epsilon: f64,
    pub alpha: f64,
    pub g: Profile,
    pub h: Profile,
}

impl ThinDomainSpec {
    pub fn new(epsilon: f64, alpha: f64, g: Profile, h: Profile) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::Argument(format!("alpha must be > 1, got {alpha}")));
        }
        if !(g.min() > 0.0) {
            return Err(Error::Argument(format!(
                "top profile g must be bounded below by g0 > 0 (min = {})",
                g.min()
            )));
        }
        if !(h.min() >= 0.0) {
            return Err(Error::Argument(format!(
                "bottom profile h must be >= 0 (min = {})",
                h.min()
            )));
        }
        Ok(Self { epsilon, alpha, g, h })
    }

    /// `eps^alpha`, the scale of the bottom oscillation.
    pub fn bottom_scale(&self) -> f64 {
        self.epsilon.powf(self.alpha)
    }

    pub(crate) fn lower(&self, x1: f64) -> f64 {
        -self.h.eval(x1 / self.bottom_scale())
    }

    pub(crate) fn upper(&self, x1: f64) -> f64 {
        self.g.eval(x1 / self.epsilon)
    }

    pub fn lower_boundary(&self, x1: f64) -> Result<f64> {
        check_unit(x1)?;
        Ok(self.lower(x1))
    }

    pub fn upper_boundary(&self, x1: f64) -> Result<f64> {
        check_unit(x1)?;
        Ok(self.upper(x1))
    }

    /// Largest fiber height, `g1 + h1`.
    pub fn max_height(&self) -> f64 {
        self.g.max() + self.h.max()
    }

    pub fn cell(&self) -> CellSpec {
        CellSpec {
            g: self.g.clone(),
            h0: self.h.min(),
        }
    }
}

fn check_unit(x1: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x1) {
        Ok(())
    } else {
        Err(Error::Argument(format!("x1 = {x1} lies outside [0, 1]")))
    }
}

/// The basic cell `{0 < y1 < L1, -h0 < y2 < g(y1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub g: Profile,
    pub h0: f64,
}

impl CellSpec {
    pub fn new(g: Profile, h0: f64) -> Result<Self> {
        if !(h0 >= 0.0) || !h0.is_finite() {
            return Err(Error::Argument(format!("h0 must be >= 0, got {h0}")));
        }
        if !(g.min() > -h0) {
            return Err(Error::Geometry("cell top must stay above -h0".into()));
        }
        Ok(Self { g, h0 })
    }

    pub fn period(&self) -> f64 {
        self.g.period()
    }

    /// `|Y*|`, analytic.
    pub fn area(&self) -> f64 {
        self.g.period() * (self.g.mean() + self.h0)
    }
}

/// The rectangle `(-eps^alpha, eps^alpha) x (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleSpec {
    pub epsilon: f64,
    pub alpha: f64,
}

impl RectangleSpec {
    pub fn new(epsilon: f64, alpha: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::Argument(format!("alpha must be > 1, got {alpha}")));
        }
        Ok(Self { epsilon, alpha })
    }

    pub fn half_width(&self) -> f64 {
        self.epsilon.powf(self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sinusoid() -> Profile {
        Profile::sine(1.0, &[(0.5, 1)], 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Profile::constant(1.0).eval(0.37), 1.0);
        let c = Profile::cosine(1.0, &[(0.5, 1)], 1.0).unwrap();
        assert_abs_diff_eq!(c.eval(0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.eval(1.25), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.eval(1.25), c.eval(0.25), epsilon = 1e-15);
    }

    #[test]
    fn boundary_examples() {
        let flat = ThinDomainSpec::new(0.1, 2.0, Profile::constant(1.0), Profile::constant(0.0)).unwrap();
        assert_eq!(flat.lower_boundary(0.3).unwrap(), 0.0);
        assert_eq!(flat.upper_boundary(0.3).unwrap(), 1.0);

        let h = Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap();
        let spec = ThinDomainSpec::new(0.1, 2.0, Profile::constant(1.0), h).unwrap();
        assert_abs_diff_eq!(spec.lower_boundary(0.01).unwrap(), -2.0, epsilon = 1e-12);

        let spec = ThinDomainSpec::new(0.1, 2.0, sinusoid(), Profile::constant(0.0)).unwrap();
        assert_abs_diff_eq!(spec.upper_boundary(0.025).unwrap(), 1.5, epsilon = 1e-12);
        assert!(spec.upper_boundary(1.5).is_err());
        assert!(spec.lower_boundary(-0.1).is_err());
    }

    #[test]
    fn argmin_locates_the_minimum() {
        let h = Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap();
        assert_abs_diff_eq!(h.argmin(), 0.5, epsilon = 1e-10);
        let g = sinusoid();
        assert_abs_diff_eq!(g.argmin(), 0.75, epsilon = 1e-10);
        let p = Profile::piecewise_linear(vec![(0.0, 1.0), (0.3, 0.2), (0.7, 2.0)], 1.0).unwrap();
        assert_eq!(p.argmin(), 0.3);
        assert_eq!(Profile::constant(2.0).argmin(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = Profile::constant(1.0);
        let h = Profile::constant(0.0);
        assert!(ThinDomainSpec::new(0.1, 1.0, g.clone(), h.clone()).is_err());
        assert!(ThinDomainSpec::new(1.0, 2.0, g.clone(), h.clone()).is_err());
        assert!(ThinDomainSpec::new(0.1, 2.0, Profile::constant(0.0), h.clone()).is_err());
        assert!(ThinDomainSpec::new(0.1, 2.0, g, Profile::constant(-0.1)).is_err());
        assert!(Profile::cosine(1.0, &[(0.5, 0)], 1.0).is_err());
        assert!(Profile::piecewise_linear(vec![(0.5, 1.0), (0.2, 1.0)], 1.0).is_err());
    }

    #[test]
    fn extrema_are_exact() {
        let h = Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap();
        assert_abs_diff_eq!(h.min(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.max(), 2.0, epsilon = 1e-15);
        let g = sinusoid();
        assert_abs_diff_eq!(g.min(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g.max(), 1.5, epsilon = 1e-14);
        // cos(2 pi y) + cos(4 pi y) has minimum -9/8 at cos(2 pi y) = -1/4.
        let p = Profile::cosine(0.0, &[(1.0, 1), (1.0, 2)], 1.0).unwrap();
        assert_abs_diff_eq!(p.min(), -1.125, epsilon = 1e-13);
        assert_abs_diff_eq!(p.max(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let p = Profile::series(1.0, vec![(0.3, 1), (0.1, 3)], vec![(0.2, 2)], 1.7).unwrap();
        for &y in &[0.0, 0.31, 0.9, 1.6] {
            let d = p.eval_deriv(y);
            let e3 = ((p.eval(y + 1e-3) - p.eval(y - 1e-3)) / 2e-3 - d).abs();
            let e4 = ((p.eval(y + 1e-4) - p.eval(y - 1e-4)) / 2e-4 - d).abs();
            assert!(e3 < 1e-4, "e3 = {e3}");
            // Second-order: shrinking delta by 10 shrinks the error by ~100.
            assert!(e4 < e3 / 50.0 || e4 < 1e-9, "e3 = {e3}, e4 = {e4}");
        }
    }

    #[test]
    fn mean_matches_trapezoid_quadrature() {
        let p = Profile::series(1.3, vec![(0.3, 1)], vec![(0.2, 2)], 2.0).unwrap();
        let n = 400;
        let trap: f64 = (0..n).map(|i| p.eval(2.0 * i as f64 / n as f64)).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(p.mean(), trap, epsilon = 1e-10);
        assert_eq!(Profile::constant(0.7).mean(), 0.7);
    }

    #[test]
    fn piecewise_linear_profile() {
        let p = Profile::piecewise_linear(vec![(0.0, 1.0), (0.5, 2.0)], 1.0).unwrap();
        assert_abs_diff_eq!(p.eval(0.25), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eval(0.75), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eval(1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mean(), 1.5, epsilon = 1e-15);
        assert_eq!((p.min(), p.max()), (1.0, 2.0));
        assert_abs_diff_eq!(p.eval_deriv(0.7), -2.0, epsilon = 1e-15);
        assert!(!p.has_continuous_derivative());
        assert_abs_diff_eq!(p.superlevel_fraction(1.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn superlevel_fraction_of_sinusoid() {
        let g = sinusoid();
        assert_eq!(g.superlevel_fraction(0.2), 1.0);
        assert_abs_diff_eq!(g.superlevel_fraction(1.0), 0.5, epsilon = 1e-12);
        // sin(2 pi y) > 1/2 on (1/12, 5/12).
        assert_abs_diff_eq!(g.superlevel_fraction(1.25), 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(g.superlevel_fraction(1.5), 0.0);
    }

    #[test]
    fn descriptors_parse() {
        let p: Profile = "cosine(base=1.0, terms=[(0.5, 1)])".parse().unwrap();
        assert_eq!(p, Profile::cosine(1.0, &[(0.5, 1)], 1.0).unwrap());
        let c: Profile = "constant(2)".parse().unwrap();
        assert_eq!(c, Profile::constant(2.0));
        let s: Profile = "sine(base=1, terms=[(0.5, 1)], period=2)".parse().unwrap();
        assert_eq!(s.period(), 2.0);
        assert!("wobble(1)".parse::<Profile>().is_err());
        assert!("cosine(base=1, terms=[(0.5, 1.5)])".parse::<Profile>().is_err());
        assert!("cosine(base=1, colour=2)".parse::<Profile>().is_err());
        assert!("cosine(base=1".parse::<Profile>().is_err());
    }

    fn arb_profile() -> impl Strategy<Value = Profile> {
        let terms = prop::collection::vec((-0.4f64..0.4, 1u32..5), 0..3);
        prop_oneof![
            (0.1f64..5.0).prop_map(Profile::constant),
            (1.0f64..3.0, terms.clone(), terms, 0.2f64..3.0)
                .prop_map(|(b, c, s, l)| Profile::series(b, c, s, l).unwrap()),
            (prop::collection::vec(0.1f64..3.0, 1..6), 0.5f64..2.0).prop_map(|(v, l)| {
                let n = v.len();
                let knots = v
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (l * i as f64 / n as f64, v))
                    .collect();
                Profile::piecewise_linear(knots, l).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn periodic_and_bounded(p in arb_profile(), y in -5.0f64..5.0) {
            let v = p.eval(y);
            prop_assert!((v - p.eval(y + p.period())).abs() < 1e-9);
            prop_assert!(v >= p.min() - 1e-12 && v <= p.max() + 1e-12);
        }

        #[test]
        fn descriptor_round_trip(p in arb_profile()) {
            let back: Profile = p.to_string().parse().unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn fiber_height_within_envelope(x1 in 0.0f64..=1.0, eps in 0.05f64..0.9) {
            let g = Profile::sine(1.0, &[(0.5, 1)], 1.0).unwrap();
            let h = Profile::cosine(1.0, &[(1.0, 1)], 1.0).unwrap();
            let spec = ThinDomainSpec::new(eps, 1.5, g.clone(), h.clone()).unwrap();
            let height = spec.upper_boundary(x1).unwrap() - spec.lower_boundary(x1).unwrap();
            prop_assert!(height >= g.min() + h.min() - 1e-12);
            prop_assert!(height <= g.max() + h.max() + 1e-12);
        }
    }
}
