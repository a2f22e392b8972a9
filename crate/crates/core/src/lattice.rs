//! Torus geometry and particle configurations.
//!
//! Particles live on the `L × N` discrete torus with `m1` particles per row.
//! Every particle carries a label `p ∈ Z²` taken modulo the equivalence
//! `p ~ p + (j1·m1 − j2·m2, j2·N)`, so that `p + (1, 0)` is the right
//! neighbour on the same row and `p + (0, 1)` the up-right neighbour on the
//! row above. Rows are indexed `0..N` and "the row below" of row `i` is row
//! `i − 1 (mod N)`.
//!
//! The six neighbours of `p` are, clockwise from the right,
//! `p1 = p+(1,0)`, `p2 = p+(1,−1)`, `p3 = p+(0,−1)`, `p4 = p−(1,0)`,
//! `p5 = p+(−1,1)`, `p6 = p+(0,1)`, and the gap variables are
//!
//! ```text
//! A = x_{p1} − x_p − 1    B = x_{p2} − x_p − 1    C = x_p − x_{p3}
//! D = x_p − x_{p4} − 1    E = x_p − x_{p5} − 1    F = x_{p6} − x_p
//! ```
//!
//! with all horizontal differences taken as forward distances modulo `L`.

use std::fmt;

use num_complex::Complex64;

use crate::{Error, Result};

/// Right, lower-right, lower-left, left, upper-left and upper-right offsets.
pub const NEIGHBOR_OFFSETS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

/// Largest torus (in sites) accepted by [`enumerate_configs`].
pub const MAX_ENUMERABLE_SITES: usize = 24;
const MAX_ENUMERATION_LEAVES: u128 = 5_000_000;

/// Link between the discrete torus and the macroscopic scaling regime
/// `q = e^{−ε}`, `L = ℓ/ε`, `N = m1 = m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaling {
    pub eps: f64,
    pub ell: usize,
}

/// Dimensions of the configuration space Ω_{L,N;m1,m2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusParams {
    pub l: usize,
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub scaling: Option<Scaling>,
}

impl TorusParams {
    pub fn new(l: usize, n: usize, m1: usize, m2: usize) -> Result<Self> {
        if !(1 < m1 && m1 < l) {
            return Err(Error::Parameter(format!("need 1 < m1 < L, got m1={m1}, L={l}")));
        }
        if !(1 <= m2 && m2 < n) {
            return Err(Error::Parameter(format!("need 1 <= m2 < N, got m2={m2}, N={n}")));
        }
        // m1/L + m2/N < 1 in integer arithmetic.
        if m1 * n + m2 * l >= l * n {
            return Err(Error::Parameter(format!(
                "density condition m1/L + m2/N < 1 fails for L={l}, N={n}, m1={m1}, m2={m2}"
            )));
        }
        Ok(Self { l, n, m1, m2, scaling: None })
    }

    /// Scaling-regime torus: `N = m1 = m`, `L = ℓ/ε` (must be an integer).
    pub fn scaling(ell: usize, m: usize, m2: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
        }
        let l_real = ell as f64 / eps;
        let l = l_real.round();
        if (l - l_real).abs() > 1e-9 * l_real.max(1.0) {
            return Err(Error::Parameter(format!("L = ell/eps = {l_real} is not an integer")));
        }
        let mut torus = Self::new(l as usize, m, m, m2)?;
        torus.scaling = Some(Scaling { eps, ell });
        Ok(torus)
    }

    pub fn labels(&self) -> LabelSpace {
        LabelSpace { m1: self.m1, n: self.n, m2: self.m2 }
    }

    pub fn num_particles(&self) -> usize {
        self.m1 * self.n
    }

    /// Macroscopic slopes `(B, C, D)` with `D = ℓ/m`, `C = D·m2/m`,
    /// `B = D − C`, available in the scaling regime only.
    pub fn slopes(&self) -> Option<(f64, f64, f64)> {
        self.scaling.map(|s| {
            let d = s.ell as f64 / self.m1 as f64;
            let c = d * self.m2 as f64 / self.m1 as f64;
            (d - c, c, d)
        })
    }
}

/// Canonical representative of a particle label: `p1 ∈ [0, m1)`,
/// `p2 ∈ [0, N)`. With `(0,0)` placed on row 0, `p2` is the row index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub p1: i64,
    pub p2: i64,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p1, self.p2)
    }
}

/// The quotient set `Z² / ~` of particle labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelSpace {
    pub m1: usize,
    pub n: usize,
    pub m2: usize,
}

impl LabelSpace {
    /// The square case `m1 = N = m` of the scaling regime.
    pub fn square(m: usize, m2: usize) -> Self {
        Self { m1: m, n: m, m2 }
    }

    pub fn len(&self) -> usize {
        self.m1 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn canonicalize(&self, p1: i64, p2: i64) -> Label {
        let (m1, n, m2) = (self.m1 as i64, self.n as i64, self.m2 as i64);
        let j = p2.div_euclid(n);
        Label { p1: (p1 + j * m2).rem_euclid(m1), p2: p2.rem_euclid(n) }
    }

    pub fn index(&self, label: Label) -> usize {
        label.p2 as usize * self.m1 + label.p1 as usize
    }

    pub fn label(&self, index: usize) -> Label {
        Label { p1: (index % self.m1) as i64, p2: (index / self.m1) as i64 }
    }

    pub fn offset(&self, label: Label, delta: (i64, i64)) -> Label {
        self.canonicalize(label.p1 + delta.0, label.p2 + delta.1)
    }

    /// Index of `label + delta`.
    pub fn offset_index(&self, index: usize, delta: (i64, i64)) -> usize {
        self.index(self.offset(self.label(index), delta))
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.len()).map(|i| self.label(i))
    }
}

/// Canonical label of `p` on the square quotient `R_m` with sector `m2`.
pub fn canonicalize(p: (i64, i64), m: usize, m2: usize) -> Label {
    LabelSpace::square(m, m2).canonicalize(p.0, p.1)
}

/// The six gap variables of one particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gaps {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub e: i64,
    pub f: i64,
}

/// First constraint violated by a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Two particles of the same row share a site.
    Overlap { label: Label },
    /// The right-neighbour chain of a row does not wind exactly once.
    RowOrder { row: usize },
    /// `x_{p2} ∉ {x_p+1, …, x_{p1}}`.
    LowerRight { label: Label },
    /// `x_{p3} ∉ {x_{p4}+1, …, x_p}`.
    LowerLeft { label: Label },
    /// Winding number of the up-right loop does not reproduce `m2`.
    Sector { expected: usize, found: Option<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { label } => write!(f, "particle {label} overlaps its right neighbour"),
            Violation::RowOrder { row } => write!(f, "row {row} is not cyclically ordered"),
            Violation::LowerRight { label } => {
                write!(f, "particle {label}: lower-right neighbour outside (x_p, x_p1]")
            }
            Violation::LowerLeft { label } => {
                write!(f, "particle {label}: lower-left neighbour outside (x_p4, x_p]")
            }
            Violation::Sector { expected, found: Some(m2) } => {
                write!(f, "sector {m2} does not match m2 = {expected}")
            }
            Violation::Sector { expected, found: None } => {
                write!(f, "up-right loop has non-integer sector (expected {expected})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

/// Horizontal positions of all particles, indexed by canonical label.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleConfig {
    torus: TorusParams,
    x: Vec<i64>,
}

impl ParticleConfig {
    /// Wraps raw positions. Only lengths and ranges are checked here; use
    /// [`ParticleConfig::validate`] for the interlacing constraints.
    pub fn new(torus: TorusParams, x: Vec<i64>) -> Result<Self> {
        if x.len() != torus.num_particles() {
            return Err(Error::Configuration(format!(
                "expected {} positions, got {}",
                torus.num_particles(),
                x.len()
            )));
        }
        if let Some(bad) = x.iter().find(|&&xi| xi < 0 || xi >= torus.l as i64) {
            return Err(Error::Configuration(format!("position {bad} outside [0, {})", torus.l)));
        }
        Ok(Self { torus, x })
    }

    pub fn torus(&self) -> &TorusParams {
        &self.torus
    }

    pub fn labels(&self) -> LabelSpace {
        self.torus.labels()
    }

    pub fn positions(&self) -> &[i64] {
        &self.x
    }

    pub fn position(&self, label: Label) -> i64 {
        self.x[self.labels().index(label)]
    }

    /// Moves particle `index` one site to the right.
    pub(crate) fn advance(&mut self, index: usize) {
        let l = self.torus.l as i64;
        self.x[index] = (self.x[index] + 1) % l;
    }

    fn forward(&self, from: usize, to: usize) -> i64 {
        (self.x[to] - self.x[from]).rem_euclid(self.torus.l as i64)
    }

    /// Raw gap values by label index. Meaningful only for valid
    /// configurations; see [`ParticleConfig::neighbor_distances`].
    pub fn gaps_at(&self, index: usize) -> Gaps {
        let space = self.labels();
        let nb = |k: usize| space.offset_index(index, NEIGHBOR_OFFSETS[k]);
        Gaps {
            a: self.forward(index, nb(0)) - 1,
            b: self.forward(index, nb(1)) - 1,
            c: self.forward(nb(2), index),
            d: self.forward(nb(3), index) - 1,
            e: self.forward(nb(4), index) - 1,
            f: self.forward(index, nb(5)),
        }
    }

    /// Gap variables `A_p..F_p`, checking the local interlacing constraints.
    pub fn neighbor_distances(&self, label: Label) -> Result<Gaps> {
        let g = self.gaps_at(self.labels().index(label));
        let ok = g.a >= 0
            && g.d >= 0
            && (0..=g.a).contains(&g.b)
            && (0..=g.d).contains(&g.c)
            && g.e >= 0
            && g.f >= 0;
        if ok {
            Ok(g)
        } else {
            Err(Error::Configuration(format!("interlacing violated around particle {label}: {g:?}")))
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let space = self.labels();
        let l = self.torus.l as i64;
        let fail = |v| ValidationReport { violation: Some(v) };

        for (i, label) in space.iter().enumerate() {
            if self.gaps_at(i).a < 0 {
                return fail(Violation::Overlap { label });
            }
        }
        for row in 0..self.torus.n {
            let span: i64 = (0..self.torus.m1)
                .map(|p1| self.gaps_at(row * self.torus.m1 + p1).a + 1)
                .sum();
            if span != l {
                return fail(Violation::RowOrder { row });
            }
        }
        for (i, label) in space.iter().enumerate() {
            let g = self.gaps_at(i);
            if !(0..=g.a).contains(&g.b) {
                return fail(Violation::LowerRight { label });
            }
            if !(0..=g.d).contains(&g.c) {
                return fail(Violation::LowerLeft { label });
            }
        }
        match self.sector() {
            Ok(m2) if m2 == self.torus.m2 => ValidationReport { violation: None },
            Ok(m2) => fail(Violation::Sector { expected: self.torus.m2, found: Some(m2) }),
            Err(_) => fail(Violation::Sector { expected: self.torus.m2, found: None }),
        }
    }

    /// Sector `m1·N_h/N_v` of the up-right loop Γ starting at `(0,0)`.
    pub fn sector(&self) -> Result<usize> {
        self.sector_from(Label { p1: 0, p2: 0 })
    }

    /// Sector computed from the loop Γ through `start`.
    pub fn sector_from(&self, start: Label) -> Result<usize> {
        let space = self.labels();
        let start = space.index(start);
        let mut current = start;
        let mut steps = 0usize;
        let mut displacement = 0i64;
        loop {
            let next = space.offset_index(current, (0, 1));
            displacement += self.forward(current, next);
            current = next;
            steps += 1;
            if current == start {
                break;
            }
            if steps > space.len() {
                return Err(Error::Configuration("up-right path does not close".into()));
            }
        }
        let (l, n, m1) = (self.torus.l as i64, self.torus.n, self.torus.m1 as i64);
        if steps % n != 0 || displacement % l != 0 {
            return Err(Error::Configuration("up-right loop winding is not integral".into()));
        }
        let n_v = (steps / n) as i64;
        let n_h = displacement / l;
        if (m1 * n_h) % n_v != 0 {
            return Err(Error::Configuration(format!("m1·N_h/N_v = {m1}·{n_h}/{n_v} is not an integer")));
        }
        Ok((m1 * n_h / n_v) as usize)
    }

    /// Occupied sites, row by row in increasing order: the label-free
    /// identity of the Markov chain state.
    pub fn occupation_key(&self) -> Vec<i64> {
        let m1 = self.torus.m1;
        let mut key = Vec::with_capacity(self.x.len());
        for row in self.x.chunks(m1) {
            let mut r = row.to_vec();
            r.sort_unstable();
            key.extend(r);
        }
        key
    }

    /// Every particle shifted by `k` sites to the right.
    pub fn shifted(&self, k: i64) -> Self {
        let l = self.torus.l as i64;
        Self { torus: self.torus, x: self.x.iter().map(|&x| (x + k).rem_euclid(l)).collect() }
    }

    /// Plain-text form: header `L N m1 m2`, then `p1 p2 x_p` per particle
    /// in label order.
    pub fn to_text(&self) -> String {
        let t = &self.torus;
        let mut out = format!("{} {} {} {}\n", t.l, t.n, t.m1, t.m2);
        for (label, x) in self.labels().iter().zip(&self.x) {
            out.push_str(&format!("{} {} {}\n", label.p1, label.p2, x));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty configuration".into()))?;
        let nums = parse_fields(header, 1, 4)?;
        let torus = TorusParams::new(nums[0] as usize, nums[1] as usize, nums[2] as usize, nums[3] as usize)?;
        let space = torus.labels();
        let mut x = vec![None; torus.num_particles()];
        for (lineno, line) in lines {
            let f = parse_fields(line, lineno + 1, 3)?;
            if f[0] < 0 || f[0] >= torus.m1 as i64 || f[1] < 0 || f[1] >= torus.n as i64 {
                return Err(Error::Parse(format!("line {}: label ({}, {}) not canonical", lineno + 1, f[0], f[1])));
            }
            let idx = space.index(Label { p1: f[0], p2: f[1] });
            if x[idx].replace(f[2]).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate label", lineno + 1)));
            }
        }
        let x = x
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Parse("missing particle lines".into()))?;
        Self::new(torus, x)
    }
}

fn parse_fields(line: &str, lineno: usize, count: usize) -> Result<Vec<i64>> {
    let fields = line
        .split_whitespace()
        .map(|s| s.parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
    if fields.len() != count {
        return Err(Error::Parse(format!("line {lineno}: expected {count} integers, got {}", fields.len())));
    }
    Ok(fields)
}

/// The equi-spaced configuration `X_p = p1·L/m1 + p2·c (mod L)` with
/// `c = m2·L/(m1·N)`. In the scaling regime this is `X_p = p1·D/ε + p2·C/ε`.
pub fn crystalline(torus: &TorusParams) -> Result<ParticleConfig> {
    let (l, n, m1, m2) = (torus.l, torus.n, torus.m1, torus.m2);
    if l % m1 != 0 || (m2 * l) % (m1 * n) != 0 {
        return Err(Error::Parameter(format!(
            "crystalline spacings L/m1 = {l}/{m1} and m2·L/(m1·N) = {}/{} must be integers",
            m2 * l,
            m1 * n
        )));
    }
    let row_step = (l / m1) as i64;
    let col_step = (m2 * l / (m1 * n)) as i64;
    let x = torus
        .labels()
        .iter()
        .map(|p| (p.p1 * row_step + p.p2 * col_step).rem_euclid(l as i64))
        .collect();
    ParticleConfig::new(*torus, x)
}

/// The set `K_m` of Fourier modes on the square quotient `R_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierModeSet {
    pub m: usize,
    pub m2: usize,
    pub modes: Vec<[f64; 2]>,
}

impl FourierModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `f_k(p) = e^{−i p·k} / m`.
    pub fn basis(&self, k: [f64; 2], p: (i64, i64)) -> Complex64 {
        let phase = -(p.0 as f64 * k[0] + p.1 as f64 * k[1]);
        Complex64::from_polar(1.0 / self.m as f64, phase)
    }

    /// Fourier coefficients `ξ̂_k = Σ_p ξ_p f_k(p)` of a field on `R_m`.
    pub fn transform(&self, field: &[f64]) -> Vec<Complex64> {
        let space = LabelSpace::square(self.m, self.m2);
        self.modes
            .iter()
            .map(|&k| {
                space
                    .iter()
                    .zip(field)
                    .map(|(p, &xi)| self.basis(k, (p.p1, p.p2)) * xi)
                    .sum()
            })
            .collect()
    }
}

pub fn fourier_modes(m: usize, m2: usize) -> Result<FourierModeSet> {
    if !(m2 > 0 && m2 < m) {
        return Err(Error::Parameter(format!("need 0 < m2 < m, got m={m}, m2={m2}")));
    }
    let step = 2.0 * std::f64::consts::PI / m as f64;
    let ratio = m2 as f64 / m as f64;
    let lo = -((m / 2) as i64);
    let mut modes = Vec::with_capacity(m * m);
    for r1 in lo..lo + m as i64 {
        for r2 in lo..lo + m as i64 {
            modes.push([step * r1 as f64, step * (ratio * r1 as f64 + r2 as f64)]);
        }
    }
    Ok(FourierModeSet { m, m2, modes })
}

/// Every configuration of Ω_{L,N;m1,m2}, each labelled with `(0,0)` at the
/// leftmost particle of row 0. Order is deterministic.
pub fn enumerate_configs(torus: &TorusParams) -> Result<Vec<ParticleConfig>> {
    let (l, n, m1) = (torus.l, torus.n, torus.m1);
    let rows = combinations(l, m1);
    let leaves = (rows.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if l * n > MAX_ENUMERABLE_SITES || leaves > MAX_ENUMERATION_LEAVES {
        return Err(Error::StateSpaceTooLarge(format!(
            "{l}×{n} torus with {m1} particles per row is too large to enumerate"
        )));
    }

    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    enumerate_rows(torus, &rows, &mut stack, &mut out);
    Ok(out)
}

fn enumerate_rows(torus: &TorusParams, rows: &[Vec<i64>], stack: &mut Vec<usize>, out: &mut Vec<ParticleConfig>) {
    let l = torus.l as i64;
    if stack.len() == torus.n {
        let first = &rows[stack[0]];
        let last = &rows[stack[torus.n - 1]];
        if !interlaces(last, first, l) {
            return;
        }
        let occupation: Vec<&[i64]> = stack.iter().map(|&i| rows[i].as_slice()).collect();
        if let Some(config) = label_occupation(torus, &occupation) {
            if config.validate().is_valid() {
                out.push(config);
            }
        }
        return;
    }
    for (i, candidate) in rows.iter().enumerate() {
        if let Some(&below) = stack.last() {
            if !interlaces(&rows[below], candidate, l) {
                continue;
            }
        }
        stack.push(i);
        enumerate_rows(torus, rows, stack, out);
        stack.pop();
    }
}

/// Each window `(u_{j−1}, u_j]` of the upper row holds exactly one particle
/// of the lower row.
fn interlaces(lower: &[i64], upper: &[i64], l: i64) -> bool {
    let m = upper.len();
    (0..m).all(|j| {
        let left = upper[(j + m - 1) % m];
        let width = (upper[j] - left).rem_euclid(l);
        let width = if width == 0 { l } else { width };
        lower
            .iter()
            .filter(|&&x| {
                let d = (x - left).rem_euclid(l);
                let d = if d == 0 { l } else { d };
                d <= width
            })
            .count()
            == 1
    })
}

fn label_occupation(torus: &TorusParams, rows: &[&[i64]]) -> Option<ParticleConfig> {
    let (l, m1) = (torus.l as i64, torus.m1);
    // Index, within each row, of the particle labelled (0, row).
    let mut start = vec![0usize; rows.len()];
    for r in 1..rows.len() {
        let below = rows[r - 1];
        let s = start[r - 1];
        let x = below[s];
        let width = (below[(s + 1) % m1] - x).rem_euclid(l);
        start[r] = rows[r].iter().position(|&y| (y - x).rem_euclid(l) < width)?;
    }
    let mut x = Vec::with_capacity(torus.num_particles());
    for (r, row) in rows.iter().enumerate() {
        for a in 0..m1 {
            x.push(row[(start[r] + a) % m1]);
        }
    }
    ParticleConfig::new(*torus, x).ok()
}

fn combinations(l: usize, k: usize) -> Vec<Vec<i64>> {
    fn rec(start: usize, l: usize, k: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..l {
            if l - i < k - cur.len() {
                break;
            }
            cur.push(i as i64);
            rec(i + 1, l, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, l, k, &mut Vec::with_capacity(k), &mut out);
    out
}
