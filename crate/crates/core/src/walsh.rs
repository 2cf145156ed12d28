//! Sparse multilinear (Walsh) representation of pseudo-Boolean functions.
//!
//! States of `{-1,+1}^n` are encoded as `n`-bit masks ([`SpinState`]): bit `i`
//! clear means `x_i = +1`, bit `i` set means `x_i = -1`. Tables of length
//! `2^n` are indexed by that mask, so entry `k` holds the value at the state
//! whose bits are those of `k` (little-endian in the variable index).
//!
//! With that encoding the character `x^alpha` at state `k` is
//! `(-1)^popcount(alpha & k)` and the Walsh transform is the unnormalized
//! Hadamard butterfly divided by `2^n`.
//!
//! The moment generating function under the uniform density is computed from
//! the expansion `e^{a x} = cosh(a) + sinh(a) x` for `x = +-1`. Multiplying
//! over the support and averaging, only subsets `B` of the support whose
//! monomials multiply to the constant survive, i.e. `sum_{alpha in B} alpha = 0`
//! over GF(2). Those subsets are the nullspace of the `n x |supp|` matrix whose
//! columns are the multi-indices. For `E[cosh(t u)]` the odd-cardinality
//! subsets cancel between `t` and `-t`, which adds the single equation
//! `sum_j b_j = 0 (mod 2)`. A literal reading of the constraint that
//! `sum_{alpha in supp} alpha = 0` does not depend on `B` and is not what the
//! algebra produces; the parity-of-`|B|` form is used here.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest `n` for which full tables of `2^n` values are built.
pub const DEFAULT_EXACT_LIMIT: usize = 20;
/// Largest support size for nullspace enumeration.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 24;
/// Coefficients with magnitude at or below this are dropped after transforms.
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-14;
/// Hard cap from the 64-bit state encoding.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub exact_dim: usize,
    pub max_support: usize,
    pub drop_tolerance: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            exact_dim: DEFAULT_EXACT_LIMIT,
            max_support: DEFAULT_ENUMERATION_LIMIT,
            drop_tolerance: DEFAULT_DROP_TOLERANCE,
        }
    }
}

#[inline]
fn parity(bits: u64) -> bool {
    bits.count_ones() & 1 == 1
}

#[inline]
fn sign(odd: bool) -> f64 {
    if odd {
        -1.0
    } else {
        1.0
    }
}

/// A multi-index `alpha in {0,1}^n`; bit `i` set means `x_i` appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(u64);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex(0);

    pub const fn from_bits(bits: u64) -> Self {
        MultiIndex(bits)
    }

    /// Builds the index from 0-based variable positions.
    pub fn from_vars(vars: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &v in vars {
            if v >= MAX_DIM {
                return Err(Error::InvalidIndex(format!("variable {v} out of range")));
            }
            if bits & (1 << v) != 0 {
                return Err(Error::InvalidIndex(format!("variable {v} repeated")));
            }
            bits |= 1 << v;
        }
        Ok(MultiIndex(bits))
    }

    pub const fn singleton(var: usize) -> Self {
        MultiIndex(1 << var)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub const fn degree(self) -> u32 {
        self.0.count_ones()
    }

    pub const fn contains(self, var: usize) -> bool {
        self.0 & (1 << var) != 0
    }

    /// Smallest `n` that can hold this index.
    pub const fn width(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    /// 0-based variable positions in increasing order.
    pub fn vars(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_DIM).filter(move |&i| bits & (1 << i) != 0)
    }

    /// Value of the character `x^alpha` at `state`.
    #[inline]
    pub fn character(self, state: SpinState) -> f64 {
        sign(parity(self.0 & state.0))
    }
}

impl std::ops::BitXor for MultiIndex {
    type Output = MultiIndex;
    fn bitxor(self, rhs: Self) -> Self {
        MultiIndex(self.0 ^ rhs.0)
    }
}

/// A spin configuration in `{-1,+1}^n`; bit `i` set means `x_i = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SpinState(pub u64);

impl SpinState {
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        if spins.len() > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                n: spins.len(),
                limit: MAX_DIM,
            });
        }
        let mut bits = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits |= 1 << i,
                other => {
                    return Err(Error::param("spin", format!("{other} is not +1 or -1")))
                }
            }
        }
        Ok(SpinState(bits))
    }

    #[inline]
    pub fn spin(self, var: usize) -> i8 {
        if self.0 & (1 << var) != 0 {
            -1
        } else {
            1
        }
    }

    pub fn to_spins(self, n: usize) -> Vec<i8> {
        (0..n).map(|i| self.spin(i)).collect()
    }
}

/// `f(x) = sum_alpha coef(alpha) x^alpha` with no stored zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoBooleanFunction {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl PseudoBooleanFunction {
    /// The zero function on `n` variables.
    pub fn zero(n: usize) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { n, limit: MAX_DIM });
        }
        Ok(Self {
            n,
            terms: BTreeMap::new(),
        })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        let mut f = Self::zero(n)?;
        f.add_term(MultiIndex::ZERO, c)?;
        Ok(f)
    }

    /// Builds a function from `(alpha, coefficient)` pairs; repeated indices
    /// are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut f = Self::zero(n)?;
        for (alpha, c) in terms {
            f.add_term(alpha, c)?;
        }
        Ok(f)
    }

    /// `sum_i x_i`.
    pub fn onemax(n: usize) -> Result<Self> {
        Self::from_terms(n, (0..n).map(|i| (MultiIndex::singleton(i), 1.0)))
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) -> Result<()> {
        if alpha.width() > self.n {
            return Err(Error::InvalidIndex(format!(
                "index {:#b} wider than n = {}",
                alpha.bits(),
                self.n
            )));
        }
        if !c.is_finite() {
            return Err(Error::param("coefficient", format!("{c} is not finite")));
        }
        let entry = self.terms.entry(alpha).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&alpha);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficient(&self, alpha: MultiIndex) -> f64 {
        self.terms.get(&alpha).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(MultiIndex::ZERO)
    }

    /// Terms in increasing multi-index order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(&a, &c)| (a, c))
    }

    /// `supp(f)`, including the zero index when the constant term is nonzero.
    pub fn support(&self) -> Vec<MultiIndex> {
        self.terms.keys().copied().collect()
    }

    /// Support without the constant term.
    pub fn nonconstant_support(&self) -> Vec<MultiIndex> {
        self.terms.keys().copied().filter(|a| !a.is_zero()).collect()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `f(x)` for `x` given as spins.
    pub fn evaluate(&self, x: &[i8]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(self.evaluate_state(SpinState::from_spins(x)?))
    }

    #[inline]
    pub fn evaluate_state(&self, state: SpinState) -> f64 {
        self.terms
            .iter()
            .map(|(alpha, c)| c * alpha.character(state))
            .sum()
    }

    /// Value table of length `2^n` in canonical order.
    pub fn synthesize(&self) -> Result<Vec<f64>> {
        self.synthesize_with(&Limits::default())
    }

    pub fn synthesize_with(&self, limits: &Limits) -> Result<Vec<f64>> {
        if self.n > limits.exact_dim {
            return Err(Error::DimensionTooLarge {
                n: self.n,
                limit: limits.exact_dim,
            });
        }
        let mut table = vec![0.0; 1 << self.n];
        for (alpha, c) in self.terms() {
            table[alpha.bits() as usize] = c;
        }
        hadamard_in_place(&mut table);
        Ok(table)
    }

    /// The text form: one `coefficient: i1 i2 ... ik` line per monomial with
    /// 1-based variable indices; the constant term has an empty index list.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the text form, inferring `n` from the largest variable index.
    pub fn parse(text: &str) -> Result<Self> {
        let terms = parse_terms(text)?;
        let n = terms.iter().map(|(a, _)| a.width()).max().unwrap_or(0);
        Self::from_parsed(n, terms)
    }

    /// Parses the text form on an explicit dimension.
    pub fn parse_with_dim(text: &str, n: usize) -> Result<Self> {
        Self::from_parsed(n, parse_terms(text)?)
    }

    fn from_parsed(n: usize, terms: Vec<(MultiIndex, f64)>) -> Result<Self> {
        let mut f = Self::zero(n)?;
        for (alpha, c) in terms {
            if c != 0.0 {
                f.add_term(alpha, c)?;
            }
        }
        Ok(f)
    }
}

impl fmt::Display for PseudoBooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (alpha, c) in self.terms() {
            write!(f, "{c}:")?;
            for v in alpha.vars() {
                write!(f, " {}", v + 1)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for PseudoBooleanFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn parse_terms(text: &str) -> Result<Vec<(MultiIndex, f64)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            line: lineno + 1,
            msg,
        };
        let (coef, rest) = line
            .split_once(':')
            .ok_or_else(|| err("expected `coefficient: indices`".into()))?;
        let c: f64 = coef
            .trim()
            .parse()
            .map_err(|e| err(format!("bad coefficient {coef:?}: {e}")))?;
        let mut vars = Vec::new();
        for tok in rest.split_whitespace() {
            let i: usize = tok
                .parse()
                .map_err(|e| err(format!("bad index {tok:?}: {e}")))?;
            if i == 0 || i > MAX_DIM {
                return Err(err(format!("index {i} outside 1..={MAX_DIM}")));
            }
            vars.push(i - 1);
        }
        let alpha = MultiIndex::from_vars(&vars).map_err(|e| err(e.to_string()))?;
        if !seen.insert(alpha) {
            return Err(err("duplicate monomial".into()));
        }
        out.push((alpha, c));
    }
    Ok(out)
}

/// Unnormalized Walsh-Hadamard butterfly: `out[k] = sum_j in[j] (-1)^popcount(j & k)`.
pub(crate) fn hadamard_in_place(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Walsh coefficients of a `2^n` value table: `coef(alpha) = 2^-n sum_x t(x) x^alpha`.
pub fn walsh_transform(table: &[f64]) -> Result<PseudoBooleanFunction> {
    walsh_transform_with(table, &Limits::default())
}

pub fn walsh_transform_with(table: &[f64], limits: &Limits) -> Result<PseudoBooleanFunction> {
    let len = table.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros() as usize;
    if n > limits.exact_dim {
        return Err(Error::DimensionTooLarge {
            n,
            limit: limits.exact_dim,
        });
    }
    let mut coef = table.to_vec();
    hadamard_in_place(&mut coef);
    let scale = 1.0 / len as f64;
    let mut f = PseudoBooleanFunction::zero(n)?;
    for (bits, c) in coef.into_iter().enumerate() {
        let c = c * scale;
        if c.abs() > limits.drop_tolerance {
            f.terms.insert(MultiIndex(bits as u64), c);
        }
    }
    Ok(f)
}

/// Subsets of an ordered support satisfying a GF(2) constraint.
///
/// Member `b` is a bit mask over `support`: bit `j` set means `support[j]` is
/// in the subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFamily {
    support: Vec<MultiIndex>,
    even_cardinality: bool,
    nullity: usize,
    members: Vec<u64>,
}

impl SubsetFamily {
    pub fn support(&self) -> &[MultiIndex] {
        &self.support
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Dimension of the solution space; the family has `2^nullity` members.
    pub fn nullity(&self) -> usize {
        self.nullity
    }

    pub fn even_cardinality(&self) -> bool {
        self.even_cardinality
    }

    /// Whether a single subset satisfies the defining constraint.
    pub fn satisfies(&self, member: u64) -> bool {
        let xor = self
            .support
            .iter()
            .enumerate()
            .filter(|(j, _)| member & (1 << j) != 0)
            .fold(0u64, |acc, (_, a)| acc ^ a.bits());
        xor == 0 && (!self.even_cardinality || member.count_ones().is_multiple_of(2))
    }

    /// Re-substitutes every member into the constraint.
    pub fn verify(&self) -> bool {
        self.members.iter().all(|&m| self.satisfies(m))
    }
}

/// All `B` with `sum_{alpha in B} alpha = 0 (mod 2)`, and `|B|` even when
/// `even_cardinality` is set.
pub fn gf2_constraint_sets(support: &[MultiIndex], even_cardinality: bool) -> Result<SubsetFamily> {
    gf2_constraint_sets_with(support, even_cardinality, &Limits::default())
}

pub fn gf2_constraint_sets_with(
    support: &[MultiIndex],
    even_cardinality: bool,
    limits: &Limits,
) -> Result<SubsetFamily> {
    let m = support.len();
    if m == 0 {
        return Err(Error::EmptySupport);
    }
    if m > limits.max_support || m > 63 {
        return Err(Error::SupportTooLarge {
            size: m,
            limit: limits.max_support.min(63),
        });
    }

    // Rows of S are variables, columns are support entries.
    let mut rows: Vec<u64> = (0..MAX_DIM)
        .map(|i| {
            support
                .iter()
                .enumerate()
                .filter(|(_, a)| a.contains(i))
                .fold(0u64, |acc, (j, _)| acc | (1 << j))
        })
        .filter(|&r| r != 0)
        .collect();
    if even_cardinality {
        rows.push((1u64 << m) - 1);
    }

    // Reduced row echelon form.
    let mut pivots: Vec<(usize, u64)> = Vec::new();
    let mut rank = 0;
    for col in 0..m {
        let bit = 1u64 << col;
        let Some(p) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot_row = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & bit != 0 {
                *row ^= pivot_row;
            }
        }
        pivots.push((col, 0));
        rank += 1;
    }
    for (k, pivot) in pivots.iter_mut().enumerate() {
        pivot.1 = rows[k];
    }

    let pivot_mask = pivots.iter().fold(0u64, |acc, (c, _)| acc | (1 << c));
    let basis: Vec<u64> = (0..m)
        .filter(|c| pivot_mask & (1 << c) == 0)
        .map(|free| {
            pivots
                .iter()
                .filter(|(_, row)| row & (1 << free) != 0)
                .fold(1u64 << free, |acc, (pc, _)| acc | (1 << pc))
        })
        .collect();

    // Gray-code walk over the span of the nullspace basis.
    let nullity = basis.len();
    let mut members = Vec::with_capacity(1 << nullity);
    let mut current = 0u64;
    members.push(current);
    for g in 1u64..(1 << nullity) {
        current ^= basis[g.trailing_zeros() as usize];
        members.push(current);
    }
    members.sort_unstable();

    let family = SubsetFamily {
        support: support.to_vec(),
        even_cardinality,
        nullity,
        members,
    };
    debug_assert!(family.verify());
    Ok(family)
}

fn split_constant(f: &PseudoBooleanFunction) -> (f64, Vec<MultiIndex>, Vec<f64>) {
    let support = f.nonconstant_support();
    let coefs = support.iter().map(|&a| f.coefficient(a)).collect();
    (f.constant_term(), support, coefs)
}

fn signed_subset_sum(family: &SubsetFamily, coefs: &[f64], t: f64) -> f64 {
    let cosh: Vec<f64> = coefs.iter().map(|c| (t * c).cosh()).collect();
    let sinh: Vec<f64> = coefs.iter().map(|c| (t * c).sinh()).collect();
    family
        .members()
        .iter()
        .map(|&b| {
            (0..coefs.len())
                .map(|j| if b & (1 << j) != 0 { sinh[j] } else { cosh[j] })
                .product::<f64>()
        })
        .sum()
}

/// `E_uniform[e^{t f}]` through the cosh/sinh subset expansion.
///
/// The constant term contributes the factor `e^{t c_0}`.
pub fn mgf_uniform(f: &PseudoBooleanFunction, t: f64) -> Result<f64> {
    mgf_uniform_with(f, t, &Limits::default())
}

pub fn mgf_uniform_with(f: &PseudoBooleanFunction, t: f64, limits: &Limits) -> Result<f64> {
    let (c0, support, coefs) = split_constant(f);
    let shift = (t * c0).exp();
    if support.is_empty() {
        return Ok(shift);
    }
    let family = gf2_constraint_sets_with(&support, false, limits)?;
    Ok(shift * signed_subset_sum(&family, &coefs, t))
}

/// `E_uniform[cosh(t f)] - 1` through the even-cardinality subset family.
///
/// Requires a zero constant term.
pub fn phi_expectation_uniform(f: &PseudoBooleanFunction, t: f64) -> Result<f64> {
    phi_expectation_uniform_with(f, t, &Limits::default())
}

pub fn phi_expectation_uniform_with(
    f: &PseudoBooleanFunction,
    t: f64,
    limits: &Limits,
) -> Result<f64> {
    let (c0, support, coefs) = split_constant(f);
    if c0 != 0.0 {
        return Err(Error::NonZeroConstant(c0));
    }
    if support.is_empty() {
        return Ok(0.0);
    }
    let family = gf2_constraint_sets_with(&support, true, limits)?;
    Ok(signed_subset_sum(&family, &coefs, t) - 1.0)
}
