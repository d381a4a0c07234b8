//! Boolean functions the protocols compute: AND, threshold, symmetric and
//! arbitrary truth tables, plus classification into the cheapest family and
//! the complement-then-negate trick.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Largest supported number of players. Truth tables and exhaustive checks
/// grow as `2^n`.
pub const MAX_PLAYERS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("number of players must be at least 1")]
    ZeroPlayers,
    #[error("number of players {0} exceeds the supported maximum of {MAX_PLAYERS}")]
    TooManyPlayers(usize),
    #[error("threshold k = {k} must satisfy 1 <= k <= n = {n}")]
    ThresholdOutOfRange { n: usize, k: usize },
    #[error("symmetric set element {value} is outside 0..={n}")]
    SumOutOfRange { n: usize, value: usize },
    #[error("assignment {text:?} must have exactly {n} characters")]
    AssignmentLength { n: usize, text: String },
    #[error("assignment {0:?} may only contain '0' and '1'")]
    BadBit(String),
    #[error("arity mismatch: function takes {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
}

fn check_players(n: usize) -> Result<(), SpecError> {
    match n {
        0 => Err(SpecError::ZeroPlayers),
        n if n > MAX_PLAYERS => Err(SpecError::TooManyPlayers(n)),
        _ => Ok(()),
    }
}

/// An n-bit assignment `(b₁,…,bₙ)`. Bit `i` of the mask is player `i + 1`;
/// the text form puts player 1 leftmost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(pub u32);

impl Assignment {
    pub fn bit(self, player: usize) -> bool {
        self.0 >> player & 1 == 1
    }

    pub fn popcount(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn parse(n: usize, text: &str) -> Result<Self, SpecError> {
        if text.chars().count() != n {
            return Err(SpecError::AssignmentLength {
                n,
                text: text.to_owned(),
            });
        }
        text.chars()
            .enumerate()
            .try_fold(0u32, |mask, (i, c)| match c {
                '0' => Ok(mask),
                '1' => Ok(mask | 1 << i),
                _ => Err(SpecError::BadBit(text.to_owned())),
            })
            .map(Assignment)
    }

    pub fn to_bitstring(self, n: usize) -> String {
        (0..n)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    /// Every assignment of `n` bits in mask order.
    pub fn all(n: usize) -> impl Iterator<Item = Assignment> {
        (0..1u32 << n).map(Assignment)
    }
}

/// The players' private bits `x₁…xₙ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerInputs {
    bits: Vec<bool>,
}

impl PlayerInputs {
    pub fn new(bits: Vec<bool>) -> Result<Self, SpecError> {
        check_players(bits.len())?;
        Ok(Self { bits })
    }

    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let a = Assignment::parse(text.chars().count(), text)?;
        Self::from_assignment(text.chars().count(), a)
    }

    pub fn from_assignment(n: usize, a: Assignment) -> Result<Self, SpecError> {
        Self::new((0..n).map(|i| a.bit(i)).collect())
    }

    /// All `2^n` inputs in mask order.
    pub fn all(n: usize) -> Result<Vec<PlayerInputs>, SpecError> {
        check_players(n)?;
        Ok(Assignment::all(n)
            .map(|a| PlayerInputs {
                bits: (0..n).map(|i| a.bit(i)).collect(),
            })
            .collect())
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, player: usize) -> bool {
        self.bits[player]
    }

    pub fn sum(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn to_assignment(&self) -> Assignment {
        Assignment(
            self.bits
                .iter()
                .enumerate()
                .fold(0, |m, (i, b)| m | u32::from(*b) << i),
        )
    }
}

impl fmt::Display for PlayerInputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Explicit set `B_f` of assignments on which `f` is 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    ones: BTreeSet<Assignment>,
}

impl TruthTable {
    pub fn new(n: usize, ones: impl IntoIterator<Item = Assignment>) -> Result<Self, SpecError> {
        check_players(n)?;
        let ones: BTreeSet<_> = ones.into_iter().collect();
        if let Some(bad) = ones.iter().find(|a| a.0 >> n != 0) {
            return Err(SpecError::AssignmentLength {
                n,
                text: format!("{:b}", bad.0),
            });
        }
        Ok(Self { n, ones })
    }

    pub fn from_bitstrings<S: AsRef<str>>(
        n: usize,
        rows: impl IntoIterator<Item = S>,
    ) -> Result<Self, SpecError> {
        check_players(n)?;
        let ones = rows
            .into_iter()
            .map(|r| Assignment::parse(n, r.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, ones)
    }

    pub fn from_fn(n: usize, f: impl Fn(&PlayerInputs) -> bool) -> Result<Self, SpecError> {
        let ones = PlayerInputs::all(n)?
            .into_iter()
            .filter(|x| f(x))
            .map(|x| x.to_assignment());
        Self::new(n, ones)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ones(&self) -> &BTreeSet<Assignment> {
        &self.ones
    }

    pub fn contains(&self, x: &PlayerInputs) -> bool {
        self.ones.contains(&x.to_assignment())
    }

    pub fn complement(&self) -> TruthTable {
        TruthTable {
            n: self.n,
            ones: Assignment::all(self.n)
                .filter(|a| !self.ones.contains(a))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FunctionSpec {
    And { n: usize },
    Threshold { n: usize, k: usize },
    Symmetric { n: usize, sums: BTreeSet<usize> },
    TruthTable(TruthTable),
}

impl FunctionSpec {
    pub fn and(n: usize) -> Result<Self, SpecError> {
        check_players(n)?;
        Ok(FunctionSpec::And { n })
    }

    pub fn threshold(n: usize, k: usize) -> Result<Self, SpecError> {
        check_players(n)?;
        if !(1..=n).contains(&k) {
            return Err(SpecError::ThresholdOutOfRange { n, k });
        }
        Ok(FunctionSpec::Threshold { n, k })
    }

    pub fn symmetric(n: usize, sums: impl IntoIterator<Item = usize>) -> Result<Self, SpecError> {
        check_players(n)?;
        let sums: BTreeSet<usize> = sums.into_iter().collect();
        if let Some(&value) = sums.iter().find(|&&s| s > n) {
            return Err(SpecError::SumOutOfRange { n, value });
        }
        Ok(FunctionSpec::Symmetric { n, sums })
    }

    pub fn n(&self) -> usize {
        match self {
            FunctionSpec::And { n }
            | FunctionSpec::Threshold { n, .. }
            | FunctionSpec::Symmetric { n, .. } => *n,
            FunctionSpec::TruthTable(t) => t.n,
        }
    }

    /// The function as an explicit truth table.
    pub fn to_truth_table(&self) -> TruthTable {
        let n = self.n();
        TruthTable {
            n,
            ones: Assignment::all(n)
                .filter(|a| self.eval_assignment(*a))
                .collect(),
        }
    }

    fn eval_assignment(&self, a: Assignment) -> bool {
        let sum = a.popcount();
        match self {
            FunctionSpec::And { n } => sum == *n,
            FunctionSpec::Threshold { k, .. } => sum >= *k,
            FunctionSpec::Symmetric { sums, .. } => sums.contains(&sum),
            FunctionSpec::TruthTable(t) => t.ones.contains(&a),
        }
    }
}

/// A function computed as `negate XOR inner`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NegationWrapper {
    pub inner: FunctionSpec,
    pub negate: bool,
}

pub trait BooleanFunction {
    fn arity(&self) -> usize;

    fn evaluate_unchecked(&self, x: &PlayerInputs) -> bool;

    fn evaluate(&self, x: &PlayerInputs) -> Result<bool, SpecError> {
        if x.n() != self.arity() {
            return Err(SpecError::ArityMismatch {
                expected: self.arity(),
                got: x.n(),
            });
        }
        Ok(self.evaluate_unchecked(x))
    }
}

impl BooleanFunction for FunctionSpec {
    fn arity(&self) -> usize {
        self.n()
    }

    fn evaluate_unchecked(&self, x: &PlayerInputs) -> bool {
        self.eval_assignment(x.to_assignment())
    }
}

impl BooleanFunction for NegationWrapper {
    fn arity(&self) -> usize {
        self.inner.n()
    }

    fn evaluate_unchecked(&self, x: &PlayerInputs) -> bool {
        self.negate ^ self.inner.evaluate_unchecked(x)
    }
}

/// The set `X` of input sums on which the table is 1, if membership depends
/// only on the sum.
fn symmetric_sums(t: &TruthTable) -> Option<BTreeSet<usize>> {
    let n = t.n;
    let mut verdict: Vec<Option<bool>> = vec![None; n + 1];
    for a in Assignment::all(n) {
        let v = t.ones.contains(&a);
        match verdict[a.popcount()] {
            None => verdict[a.popcount()] = Some(v),
            Some(seen) if seen != v => return None,
            Some(_) => {}
        }
    }
    Some(
        verdict
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == Some(true))
            .map(|(s, _)| s)
            .collect(),
    )
}

/// Picks the cheapest protocol family that computes `t`, in the order
/// AND, threshold, symmetric, general truth table.
pub fn classify(t: &TruthTable) -> FunctionSpec {
    let n = t.n;
    let Some(sums) = symmetric_sums(t) else {
        return FunctionSpec::TruthTable(t.clone());
    };
    if sums.len() == 1 && sums.contains(&n) {
        return FunctionSpec::And { n };
    }
    if let Some(&k) = sums.first() {
        if k >= 1 && sums.len() == n + 1 - k {
            return FunctionSpec::Threshold { n, k };
        }
    }
    FunctionSpec::Symmetric { n, sums }
}

/// Complements the accepted set and marks the result for negation, so the
/// wrapper still evaluates to the original function.
///
/// AND and threshold specs are complemented as the symmetric functions they
/// are.
pub fn complement(spec: &FunctionSpec) -> NegationWrapper {
    let inner = match spec {
        FunctionSpec::TruthTable(t) => FunctionSpec::TruthTable(t.complement()),
        other => {
            let n = other.n();
            let sums = match other {
                FunctionSpec::And { n } => BTreeSet::from([*n]),
                FunctionSpec::Threshold { n, k } => (*k..=*n).collect(),
                FunctionSpec::Symmetric { sums, .. } => sums.clone(),
                FunctionSpec::TruthTable(_) => unreachable!(),
            };
            FunctionSpec::Symmetric {
                n,
                sums: (0..=n).filter(|s| !sums.contains(s)).collect(),
            }
        }
    };
    NegationWrapper {
        inner,
        negate: true,
    }
}
