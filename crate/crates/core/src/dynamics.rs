//! Alternating mutation dynamics on quivers with exactly two mutable vertices.
//!
//! With mutable `C`, `D` and `alpha = |b_CD|`, the only new quivers come from
//! alternating `mu_C` and `mu_D`. For `alpha >= 2` and frozen `A`, `B` the
//! iterates settle into two shapes, `Q1(x, y, z, w)`:
//!
//! ```text
//! A -> C : x    D -> A : y    B -> C : z    D -> B : w    C -> D : alpha
//! ```
//!
//! and `Q2(p, q, r, s)`:
//!
//! ```text
//! C -> A : p    A -> D : q    C -> B : r    B -> D : s    D -> C : alpha
//! ```
//!
//! with the `A`-`B` multiplicity fixed. `mu_C` maps `Q1(x, y, z, w)` to
//! `Q2(x, ax - y, z, az - w)` and `mu_D` maps `Q2(p, q, r, s)` to
//! `Q1(aq - p, q, as - r, s)`. The ratio `x / y` follows
//! `t -> a - t / (a t - 1)`, whose attracting fixed point is
//! `(a + sqrt(a^2 - 4)) / 2`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::explorer::{class_report, explore, Dedup, ExplorationReport, Limit, Predicate, SearchLimits};
use crate::quiver::{Arrow, Quiver, QuiverError, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("expected exactly two mutable vertices, found {0}")]
    WrongMutableCount(usize),
    #[error("the number of steps must be positive")]
    InvalidSteps,
    #[error("search stopped by {limits:?} before the class was exhausted")]
    Truncated { limits: BTreeSet<Limit>, visited: u64 },
    #[error("state is outside the closed-form validity window")]
    ValidityWindowViolated,
    #[error("growth is inconclusive: {0}")]
    Inconclusive(String),
    #[error("vertex {0} is never adjacent to the mutable pair")]
    DegenerateVertex(String),
    #[error("trace is too short or the denominator vanishes at the last step")]
    InsufficientSteps,
    #[error("ratio limit needs alpha >= 2, found {0}")]
    AlphaTooSmall(BigUint),
    #[error("vertex {0} must be distinct from the mutable pair")]
    NotOutsideVertex(String),
    #[error("invalid path weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

impl DynamicsError {
    pub fn code(&self) -> &'static str {
        match self {
            DynamicsError::WrongMutableCount(_) => "WrongMutableCount",
            DynamicsError::InvalidSteps => "InvalidSteps",
            DynamicsError::Truncated { .. } => "Truncated",
            DynamicsError::ValidityWindowViolated => "ValidityWindowViolated",
            DynamicsError::Inconclusive(_) => "Inconclusive",
            DynamicsError::DegenerateVertex(_) => "DegenerateVertex",
            DynamicsError::InsufficientSteps => "InsufficientSteps",
            DynamicsError::AlphaTooSmall(_) => "AlphaTooSmall",
            DynamicsError::NotOutsideVertex(_) => "NotOutsideVertex",
            DynamicsError::InvalidWeights(_) => "InvalidWeights",
            DynamicsError::Quiver(e) => e.code(),
        }
    }
}

/// The quivers `(mu_D mu_C)^k Q` for `k = 0..=steps`, plus the half-step
/// quivers `mu_C (mu_D mu_C)^k Q`.
#[derive(Debug, Clone)]
pub struct DynamicsTrace {
    c: usize,
    d: usize,
    states: Vec<Quiver>,
    halves: Vec<Quiver>,
}

impl DynamicsTrace {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn c(&self) -> &VertexId {
        &self.states[0].vertices()[self.c]
    }

    pub fn d(&self) -> &VertexId {
        &self.states[0].vertices()[self.d]
    }

    /// `(mu_D mu_C)^k Q`.
    pub fn state(&self, k: usize) -> &Quiver {
        &self.states[k]
    }

    pub fn states(&self) -> &[Quiver] {
        &self.states
    }

    /// `mu_C (mu_D mu_C)^k Q`, for `k < steps`.
    pub fn half_state(&self, k: usize) -> &Quiver {
        &self.halves[k]
    }

    /// `alpha = |b_CD|`, constant along the trace.
    pub fn alpha(&self) -> BigUint {
        self.states[0].abs_ref(self.c, self.d).magnitude().clone()
    }

    /// Multiplicity between `u` and `v` after `k` steps.
    pub fn delta(&self, u: &str, v: &str, k: usize) -> Result<BigUint, QuiverError> {
        self.states[k].multiplicity(u, v)
    }

    pub fn total_arrows(&self) -> Vec<BigUint> {
        self.states.iter().map(Quiver::total_arrows).collect()
    }

    /// Tab-separated export: `step`, `total`, then one column per unordered
    /// vertex pair headed `u,v`, with decimal multiplicities.
    pub fn to_tsv(&self) -> String {
        let q0 = &self.states[0];
        let n = q0.len();
        let ids = q0.vertices();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut out = String::from("step\ttotal");
        for &(i, j) in &pairs {
            write!(out, "\t{},{}", ids[i], ids[j]).unwrap();
        }
        out.push('\n');
        for (k, q) in self.states.iter().enumerate() {
            write!(out, "{k}\t{}", q.total_arrows()).unwrap();
            for &(i, j) in &pairs {
                write!(out, "\t{}", q.abs_ref(i, j).magnitude()).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn check_pair(q: &Quiver, c: &str, d: &str) -> Result<(usize, usize), DynamicsError> {
    let (ci, di) = (q.index_of(c)?, q.index_of(d)?);
    if ci == di {
        return Err(QuiverError::SameVertex(c.to_string()).into());
    }
    for (i, name) in [(ci, c), (di, d)] {
        if q.is_frozen_at(i) {
            return Err(QuiverError::FrozenVertexMutation(name.to_string()).into());
        }
    }
    let mutable = q.mutable_indices().len();
    if mutable != 2 {
        return Err(DynamicsError::WrongMutableCount(mutable));
    }
    Ok((ci, di))
}

/// Iterates `mu_D mu_C` on `q` for `n_steps` steps, keeping every quiver.
pub fn alt_orbit(q: &Quiver, c: &str, d: &str, n_steps: usize) -> Result<DynamicsTrace, DynamicsError> {
    if n_steps == 0 {
        return Err(DynamicsError::InvalidSteps);
    }
    let (ci, di) = check_pair(q, c, d)?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut halves = Vec::with_capacity(n_steps);
    states.push(q.clone());
    for k in 0..n_steps {
        let half = states[k].mutate_index(ci)?;
        let full = half.mutate_index(di)?;
        halves.push(half);
        states.push(full);
    }
    Ok(DynamicsTrace { c: ci, d: di, states, halves })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrbitSize {
    pub labeled: u64,
    pub iso: u64,
}

/// Size of the mutation class, labeled and up to isomorphism.
pub fn orbit_size(q: &Quiver, limits: &SearchLimits) -> Result<OrbitSize, DynamicsError> {
    let mutable = q.mutable_indices().len();
    if mutable != 2 {
        return Err(DynamicsError::WrongMutableCount(mutable));
    }
    let count = |dedup| {
        let report = class_report(q, limits, dedup);
        if report.exhausted {
            Ok(report.visited)
        } else {
            Err(DynamicsError::Truncated { limits: report.truncated_by, visited: report.visited })
        }
    };
    Ok(OrbitSize { labeled: count(Dedup::Labeled)?, iso: count(Dedup::Isomorphism)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `C -> D`; coordinates `(x, y, z, w)`.
    Form1,
    /// `D -> C`; coordinates `(p, q, r, s)`.
    Form2,
}

/// Roles of the four vertices: frozen `a`, `b` and mutable `c`, `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roles {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

impl Roles {
    pub fn by_name(q: &Quiver, a: &str, b: &str, c: &str, d: &str) -> Result<Self, QuiverError> {
        Ok(Roles { a: q.index_of(a)?, b: q.index_of(b)?, c: q.index_of(c)?, d: q.index_of(d)? })
    }
}

/// Parameters of a `Q1` or `Q2` shaped quiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AltState {
    pub form: Form,
    /// `(x, y, z, w)` for `Form1`, `(p, q, r, s)` for `Form2`.
    pub coords: [BigUint; 4],
    pub alpha: BigUint,
    /// `b_AB`, unchanged by the closed-form steps.
    pub top: BigInt,
}

fn nonneg(v: BigInt) -> Option<BigUint> {
    v.to_biguint()
}

impl AltState {
    /// Reads the shape of `q` with the given roles, if it is `Q1` or `Q2`
    /// with nonnegative coordinates and `alpha >= 2`.
    pub fn from_quiver(q: &Quiver, roles: Roles) -> Option<AltState> {
        let Roles { a, b, c, d } = roles;
        let cd = q.b(c, d);
        let alpha = cd.magnitude().clone();
        if alpha < BigUint::from(2u32) {
            return None;
        }
        let (form, coords) = match cd.sign() {
            Sign::Plus => (Form::Form1, [q.b(a, c), q.b(d, a), q.b(b, c), q.b(d, b)]),
            Sign::Minus => (Form::Form2, [q.b(c, a), q.b(a, d), q.b(c, b), q.b(b, d)]),
            Sign::NoSign => return None,
        };
        let [p0, p1, p2, p3] = coords;
        Some(AltState {
            form,
            coords: [nonneg(p0)?, nonneg(p1)?, nonneg(p2)?, nonneg(p3)?],
            alpha,
            top: q.b(a, b),
        })
    }

    /// Exchange matrix of this state over the vertex order of `roles`
    /// (indices into a 4-vertex quiver).
    pub fn to_quiver(&self, template: &Quiver, roles: Roles) -> Quiver {
        let Roles { a, b, c, d } = roles;
        let n = template.len();
        let mut m = vec![vec![BigInt::zero(); n]; n];
        let mut set = |i: usize, j: usize, v: BigInt| {
            m[j][i] = -&v;
            m[i][j] = v;
        };
        let [k0, k1, k2, k3] = self.coords.clone().map(BigInt::from);
        let alpha = BigInt::from(self.alpha.clone());
        set(a, b, self.top.clone());
        match self.form {
            Form::Form1 => {
                set(a, c, k0);
                set(d, a, k1);
                set(b, c, k2);
                set(d, b, k3);
                set(c, d, alpha);
            }
            Form::Form2 => {
                set(c, a, k0);
                set(a, d, k1);
                set(c, b, k2);
                set(b, d, k3);
                set(d, c, alpha);
            }
        }
        let vertices = template
            .vertices()
            .iter()
            .cloned()
            .zip(template.frozen_flags().iter().copied());
        Quiver::from_matrix(vertices, &m).expect("template ids are valid")
    }

    /// `(x, y)` ratio `x / y` of a `Form1` state, when `y > 0`.
    pub fn ratio(&self) -> Option<BigRational> {
        (self.form == Form::Form1 && !self.coords[1].is_zero()).then(|| {
            BigRational::new(BigInt::from(self.coords[0].clone()), BigInt::from(self.coords[1].clone()))
        })
    }
}

/// One mutation in closed form: `mu_C` on `Form1`, `mu_D` on `Form2`.
///
/// `Form1` requires `a x > y` and `a z > w`; `Form2` requires `a q > p` and
/// `a s > r`.
pub fn closed_form_step(s: &AltState) -> Result<AltState, DynamicsError> {
    let a = &s.alpha;
    let [k0, k1, k2, k3] = &s.coords;
    let (lhs1, lhs2) = match s.form {
        Form::Form1 => (a * k0, a * k2),
        Form::Form2 => (a * k1, a * k3),
    };
    let coords = match s.form {
        Form::Form1 => {
            if lhs1 <= *k1 || lhs2 <= *k3 {
                return Err(DynamicsError::ValidityWindowViolated);
            }
            [k0.clone(), lhs1 - k1, k2.clone(), lhs2 - k3]
        }
        Form::Form2 => {
            if lhs1 <= *k0 || lhs2 <= *k2 {
                return Err(DynamicsError::ValidityWindowViolated);
            }
            [lhs1 - k0, k1.clone(), lhs2 - k2, k3.clone()]
        }
    };
    let form = match s.form {
        Form::Form1 => Form::Form2,
        Form::Form2 => Form::Form1,
    };
    Ok(AltState { form, coords, alpha: s.alpha.clone(), top: s.top.clone() })
}

/// Alternating iteration on a 4-vertex quiver driven by the closed form,
/// falling back to the mutation engine for any half step outside the
/// validity window. Returns the full-step quivers and whether any fallback
/// happened.
pub fn closed_form_orbit(q: &Quiver, roles: Roles, n_steps: usize) -> (Vec<Quiver>, bool) {
    let mut fell_back = false;
    let mut current = q.clone();
    let mut states = vec![q.clone()];
    let half = |current: &Quiver, vertex: usize, fell_back: &mut bool| {
        let stepped = AltState::from_quiver(current, roles).and_then(|s| closed_form_step(&s).ok());
        let expected_form = if vertex == roles.c { Form::Form2 } else { Form::Form1 };
        match stepped {
            Some(next) if next.form == expected_form => next.to_quiver(current, roles),
            _ => {
                *fell_back = true;
                current.mutate_index(vertex).expect("mutable vertex")
            }
        }
    };
    for _ in 0..n_steps {
        let mid = half(&current, roles.c, &mut fell_back);
        current = half(&mid, roles.d, &mut fell_back);
        states.push(current.clone());
    }
    (states, fell_back)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// No vertex outside the mutable pair touches it.
    Trivial,
    /// `(mu_D mu_C)^period` returns to an earlier state.
    Periodic(usize),
    Linear,
    Exponential,
}

/// Classifies the growth of the total arrow count along a trace of at least
/// 12 steps.
///
/// Linear: the last `ceil(n/2)` second differences are zero. Exponential:
/// the last `ceil(n/2)` consecutive ratios are at least `1 + 1/(2 alpha)`.
pub fn classify_growth(trace: &DynamicsTrace) -> Result<Growth, DynamicsError> {
    let n = trace.steps();
    if n < 12 {
        return Err(DynamicsError::Inconclusive(format!("{n} steps, need at least 12")));
    }
    let q0 = trace.state(0);
    let touches = (0..q0.len())
        .filter(|&v| v != trace.c && v != trace.d)
        .any(|v| !q0.abs_ref(v, trace.c).is_zero() || !q0.abs_ref(v, trace.d).is_zero());
    if !touches {
        return Ok(Growth::Trivial);
    }
    let mut first_seen: HashMap<&Quiver, usize> = HashMap::new();
    for (k, q) in trace.states().iter().enumerate() {
        if let Some(&j) = first_seen.get(q) {
            return Ok(Growth::Periodic(k - j));
        }
        first_seen.insert(q, k);
    }
    let totals: Vec<BigInt> = trace.total_arrows().into_iter().map(BigInt::from).collect();
    let window = n.div_ceil(2);
    let second: Vec<BigInt> = totals.windows(3).map(|w| &w[2] - 2 * &w[1] + &w[0]).collect();
    if second[second.len() - window..].iter().all(Zero::is_zero) {
        return Ok(Growth::Linear);
    }
    let alpha = BigInt::from(trace.alpha());
    if alpha.is_positive() {
        let two_alpha = 2 * &alpha;
        let ratios_ok = totals[totals.len() - window - 1..]
            .windows(2)
            .all(|w| &two_alpha * &w[1] >= (&two_alpha + 1) * &w[0]);
        if ratios_ok {
            return Ok(Growth::Exponential);
        }
    }
    Err(DynamicsError::Inconclusive("neither eventually linear nor geometrically growing".into()))
}

/// `(alpha + sqrt(alpha^2 - 4)) / 2`.
pub fn ratio_limit_target(alpha: f64) -> f64 {
    (alpha + (alpha * alpha - 4.0).sqrt()) / 2.0
}

/// `f(t) = alpha - t / (alpha t - 1)` in exact arithmetic.
pub fn ratio_map(alpha: &BigRational, t: &BigRational) -> BigRational {
    alpha - t / (alpha * t - BigRational::one())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioCheck {
    /// `delta_AC(n) / delta_AD(n)` at the last step.
    pub exact: BigRational,
    pub estimate: f64,
    pub target: f64,
    pub converged: bool,
}

fn outside_vertex(trace: &DynamicsTrace, a: &str) -> Result<usize, DynamicsError> {
    let ai = trace.state(0).index_of(a)?;
    if ai == trace.c || ai == trace.d {
        return Err(DynamicsError::NotOutsideVertex(a.to_string()));
    }
    Ok(ai)
}

/// Compares `delta_AC(n) / delta_AD(n)` at the last step with the limit.
pub fn ratio_limit_check(trace: &DynamicsTrace, a: &str, tol: f64) -> Result<RatioCheck, DynamicsError> {
    let alpha = trace.alpha();
    if alpha < BigUint::from(2u32) {
        return Err(DynamicsError::AlphaTooSmall(alpha));
    }
    let ai = outside_vertex(trace, a)?;
    let connected = trace
        .states()
        .iter()
        .any(|q| !q.abs_ref(ai, trace.c).is_zero() || !q.abs_ref(ai, trace.d).is_zero());
    if !connected {
        return Err(DynamicsError::DegenerateVertex(a.to_string()));
    }
    let last = trace.state(trace.steps());
    let den = last.abs_ref(ai, trace.d).abs();
    if trace.steps() < 1 || den.is_zero() {
        return Err(DynamicsError::InsufficientSteps);
    }
    let exact = BigRational::new(last.abs_ref(ai, trace.c).abs(), den);
    let estimate = exact.to_f64().unwrap_or(f64::NAN);
    let target = ratio_limit_target(alpha.to_f64().unwrap_or(f64::INFINITY));
    Ok(RatioCheck { converged: (estimate - target).abs() < tol, exact, estimate, target })
}

/// `delta_AC(k) / delta_AD(k)` for every step, `None` where the denominator
/// is zero.
pub fn ratio_series(trace: &DynamicsTrace, a: &str) -> Result<Vec<Option<f64>>, DynamicsError> {
    let ai = outside_vertex(trace, a)?;
    Ok(trace
        .states()
        .iter()
        .map(|q| {
            let den = q.abs_ref(ai, trace.d).abs();
            (!den.is_zero()).then(|| BigRational::new(q.abs_ref(ai, trace.c).abs(), den).to_f64().unwrap_or(f64::NAN))
        })
        .collect())
}

/// Frozen `A`, `B`, mutable `C`, `D` with `A -> C : beta`, `C -> D : alpha`,
/// `D -> B : gamma`; zero weights leave the pair nonadjacent.
pub fn standard_quiver(beta: u64, alpha: u64, gamma: u64) -> Quiver {
    let id = |s: &str| VertexId::new(s).expect("valid name");
    let vertices = [("A", true), ("B", true), ("C", false), ("D", false)].map(|(v, f)| (id(v), f));
    let arrows = [("A", "C", beta), ("C", "D", alpha), ("D", "B", gamma)]
        .into_iter()
        .filter(|&(_, _, w)| w > 0)
        .map(|(u, v, w)| Arrow::new(id(u), id(v), w));
    Quiver::new(vertices, arrows).expect("well-formed")
}

/// Frozen `A -> C1 -> ... -> Ck -> B` with the given weights `x0..xk`.
pub fn build_path_quiver(weights: &[u64]) -> Result<Quiver, DynamicsError> {
    if weights.is_empty() {
        return Err(DynamicsError::InvalidWeights("need at least one weight".into()));
    }
    if let Some(i) = weights.iter().position(|&w| w == 0) {
        return Err(DynamicsError::InvalidWeights(format!("weight x{i} is zero")));
    }
    let k = weights.len() - 1;
    let ids: Vec<VertexId> = std::iter::once("A".to_string())
        .chain((1..=k).map(|i| format!("C{i}")))
        .chain(std::iter::once("B".to_string()))
        .map(|s| VertexId::new(s).expect("valid name"))
        .collect();
    let vertices = ids.iter().enumerate().map(|(i, id)| (id.clone(), i == 0 || i == k + 1));
    let arrows = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Arrow::new(ids[i].clone(), ids[i + 1].clone(), w));
    Ok(Quiver::new(vertices, arrows)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjectureReport {
    pub observed: BTreeSet<BigUint>,
    pub product: BigUint,
    /// Every observed `A`-`B` multiplicity is `0` or the product of weights.
    pub consistent: bool,
    pub exhausted: bool,
    pub visited: u64,
    pub truncated_by: BTreeSet<Limit>,
}

/// Collects the `A`-`B` multiplicities seen in the (bounded) mutation class
/// of the path quiver.
pub fn conjecture_scan(weights: &[u64], limits: &SearchLimits) -> Result<ConjectureReport, DynamicsError> {
    let q = build_path_quiver(weights)?;
    let predicate = Predicate::CollectPairMultiplicities(
        VertexId::new("A").expect("valid"),
        VertexId::new("B").expect("valid"),
    );
    let report: ExplorationReport = explore(&q, &predicate, limits, Dedup::Labeled);
    let observed = report.collected.unwrap_or_default();
    let product: BigUint = weights.iter().map(|&w| BigUint::from(w)).product();
    let consistent = observed.iter().all(|m| m.is_zero() || *m == product);
    Ok(ConjectureReport {
        observed,
        product,
        consistent,
        exhausted: report.exhausted,
        visited: report.visited,
        truncated_by: report.truncated_by,
    })
}
