//! Physical primitives: coins, the δ/2 custom weight piece, opaque bags, the
//! double-pan balance scale and the joint shuffle.
//!
//! Masses are exact integers in two units, the base coin mass `w` and half of
//! the heavy/light difference `δ/2`. The scale tolerance is assumed to be below
//! `δ/2`, so a weighing balances exactly when both sides are equal
//! componentwise.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact symbolic mass `w_units·w + half_delta_units·(δ/2)`.
///
/// The derived ordering is lexicographic with `w` dominant, which is what the
/// scale reports.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Weight {
    pub w_units: i64,
    pub half_delta_units: i64,
}

impl Weight {
    pub const ZERO: Weight = Weight::new(0, 0);

    pub const fn new(w_units: i64, half_delta_units: i64) -> Self {
        Self {
            w_units,
            half_delta_units,
        }
    }

    /// `p` heavy coins, `q` light coins and `pieces` δ/2 pieces.
    pub fn assembled(heavy: u32, light: u32, pieces: u32) -> Self {
        Coin::Heavy.weight().times(heavy)
            + Coin::Light.weight().times(light)
            + CustomWeightPiece::HALF_DELTA.value.times(pieces)
    }

    pub fn times(self, count: u32) -> Self {
        let c = i64::from(count);
        Self::new(self.w_units * c, self.half_delta_units * c)
    }
}

impl Add for Weight {
    type Output = Weight;

    fn add(self, rhs: Weight) -> Weight {
        Weight::new(
            self.w_units + rhs.w_units,
            self.half_delta_units + rhs.half_delta_units,
        )
    }
}

impl AddAssign for Weight {
    fn add_assign(&mut self, rhs: Weight) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::ZERO, Add::add)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}w", self.w_units)?;
        match self.half_delta_units.cmp(&0) {
            Ordering::Less => write!(f, " - {}(δ/2)", -self.half_delta_units),
            Ordering::Equal => Ok(()),
            Ordering::Greater => write!(f, " + {}(δ/2)", self.half_delta_units),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coin {
    Heavy,
    Light,
}

impl Coin {
    /// Heavy encodes bit 1, light encodes bit 0.
    pub fn for_bit(bit: bool) -> Self {
        if bit {
            Coin::Heavy
        } else {
            Coin::Light
        }
    }

    pub fn weight(self) -> Weight {
        match self {
            Coin::Heavy => Weight::new(1, 0),
            Coin::Light => Weight::new(1, -2),
        }
    }
}

/// The single δ/2 piece from which any custom weight can be assembled
/// together with heavy and light coins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CustomWeightPiece {
    pub value: Weight,
}

impl CustomWeightPiece {
    pub const HALF_DELTA: CustomWeightPiece = CustomWeightPiece {
        value: Weight::new(0, 1),
    };
}

/// Multiset of coins, stored as counts per kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CoinMultiset {
    pub heavy: u32,
    pub light: u32,
}

impl CoinMultiset {
    pub fn new(heavy: u32, light: u32) -> Self {
        Self { heavy, light }
    }

    pub fn insert(&mut self, coin: Coin) {
        match coin {
            Coin::Heavy => self.heavy += 1,
            Coin::Light => self.light += 1,
        }
    }

    pub fn len(&self) -> u32 {
        self.heavy + self.light
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self) -> Weight {
        Weight::assembled(self.heavy, self.light, 0)
    }
}

impl Extend<Coin> for CoinMultiset {
    fn extend<I: IntoIterator<Item = Coin>>(&mut self, iter: I) {
        for c in iter {
            self.insert(c);
        }
    }
}

impl FromIterator<Coin> for CoinMultiset {
    fn from_iter<I: IntoIterator<Item = Coin>>(iter: I) -> Self {
        let mut m = CoinMultiset::default();
        m.extend(iter);
        m
    }
}

/// Opaque identifier of a bag. Never part of a view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BagId(pub u32);

/// A small opaque bag. Bags look identical and have zero own mass, so only
/// their contents matter on the scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bag {
    pub internal_id: BagId,
    pub contents: CoinMultiset,
    pub marked: bool,
}

impl Bag {
    pub fn new(internal_id: BagId) -> Self {
        Self::with_counts(internal_id, 0, 0)
    }

    pub fn with_counts(internal_id: BagId, heavy: u32, light: u32) -> Self {
        Self {
            internal_id,
            contents: CoinMultiset::new(heavy, light),
            marked: false,
        }
    }

    pub fn weight(&self) -> Weight {
        self.contents.weight()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleOutcome {
    LeftHeavier,
    Balanced,
    RightHeavier,
}

impl ScaleOutcome {
    pub fn mirrored(self) -> Self {
        match self {
            ScaleOutcome::LeftHeavier => ScaleOutcome::RightHeavier,
            ScaleOutcome::Balanced => ScaleOutcome::Balanced,
            ScaleOutcome::RightHeavier => ScaleOutcome::LeftHeavier,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScaleOutcome::LeftHeavier => "left_heavier",
            ScaleOutcome::Balanced => "balanced",
            ScaleOutcome::RightHeavier => "right_heavier",
        }
    }
}

impl fmt::Display for ScaleOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn total_weight(coins: &[Coin], extra: Option<CustomWeightPiece>) -> Weight {
    coins.iter().map(|c| c.weight()).sum::<Weight>() + extra.map_or(Weight::ZERO, |p| p.value)
}

/// Weighs `left` against `right`.
pub fn compare(left: Weight, right: Weight) -> ScaleOutcome {
    match left.cmp(&right) {
        Ordering::Greater => ScaleOutcome::LeftHeavier,
        Ordering::Equal => ScaleOutcome::Balanced,
        Ordering::Less => ScaleOutcome::RightHeavier,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApparatusError {
    #[error("protocol integrity: expected exactly one marked bag, found {0}")]
    MarkedBagCount(usize),
    #[error("cannot shuffle an empty sequence")]
    EmptyShuffle,
    #[error("randomness transcript exhausted at draw {index} ({kind:?} of {len} items)")]
    TranscriptExhausted {
        index: usize,
        kind: DrawKind,
        len: usize,
    },
    #[error(
        "randomness transcript mismatch at draw {index}: expected {expected:?} of {len} items"
    )]
    TranscriptMismatch {
        index: usize,
        expected: DrawKind,
        len: usize,
    },
}

/// Locates the pen-marked bag. Opening bags emits no observable event.
pub fn find_marked(bags: &[Bag]) -> Result<usize, ApparatusError> {
    let mut marked = bags.iter().enumerate().filter(|(_, b)| b.marked);
    match (marked.next(), marked.next()) {
        (Some((i, _)), None) => Ok(i),
        _ => Err(ApparatusError::MarkedBagCount(
            bags.iter().filter(|b| b.marked).count(),
        )),
    }
}

/// What a shuffle is used for in a protocol schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawKind {
    /// Joint shuffle of a pile of bags before any weighing.
    BagOrder,
    /// Shuffle of a (special, non-special) pair deciding scale sides.
    PairSides,
    /// Shuffle of the pair after weighing; no observable depends on it.
    PostWeighing,
}

impl DrawKind {
    /// Draws whose outcome cannot influence any view. Replay substitutes the
    /// identity permutation when the transcript does not list them.
    pub fn is_collapsible(self) -> bool {
        matches!(self, DrawKind::PostWeighing)
    }
}

/// One uniformly random permutation. `permutation[i]` is the original index
/// of the item placed at position `i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Draw {
    pub kind: DrawKind,
    pub permutation: Vec<usize>,
}

/// Hidden record of every permutation drawn during one execution.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript(pub Vec<Draw>);

impl Transcript {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn draws(&self) -> &[Draw] {
        &self.0
    }
}

/// Source of the shuffles' randomness: either a seeded generator or a fixed
/// transcript replayed draw by draw.
#[derive(Debug, Clone)]
pub enum RandomSource {
    Seeded(Box<ChaCha8Rng>),
    Replay {
        draws: Arc<Transcript>,
        cursor: usize,
    },
}

impl RandomSource {
    pub fn seeded(seed: u64) -> Self {
        RandomSource::Seeded(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn replay(transcript: impl Into<Arc<Transcript>>) -> Self {
        RandomSource::Replay {
            draws: transcript.into(),
            cursor: 0,
        }
    }

    /// Produces a permutation of `len` items for a draw of the given kind.
    pub fn draw(&mut self, kind: DrawKind, len: usize) -> Result<Vec<usize>, ApparatusError> {
        match self {
            RandomSource::Seeded(rng) => {
                let mut perm: Vec<usize> = (0..len).collect();
                perm.shuffle(rng);
                Ok(perm)
            }
            RandomSource::Replay { draws, cursor } => match draws.0.get(*cursor) {
                Some(d) if d.kind == kind && d.permutation.len() == len => {
                    *cursor += 1;
                    Ok(d.permutation.clone())
                }
                _ if kind.is_collapsible() => Ok((0..len).collect()),
                Some(_) => Err(ApparatusError::TranscriptMismatch {
                    index: *cursor,
                    expected: kind,
                    len,
                }),
                None => Err(ApparatusError::TranscriptExhausted {
                    index: *cursor,
                    kind,
                    len,
                }),
            },
        }
    }
}

/// Jointly shuffles `items` into a uniformly random order unknown to all.
///
/// Returns the permuted items and the permutation record, which must never
/// reach a view. Every draw is appended to `record`.
pub fn shuffle<T: Clone>(
    items: Vec<T>,
    kind: DrawKind,
    rng: &mut RandomSource,
    record: &mut Transcript,
) -> Result<(Vec<T>, Vec<usize>), ApparatusError> {
    if items.is_empty() {
        return Err(ApparatusError::EmptyShuffle);
    }
    let perm = rng.draw(kind, items.len())?;
    let permuted = perm.iter().map(|&i| items[i].clone()).collect();
    record.0.push(Draw {
        kind,
        permutation: perm.clone(),
    });
    Ok((permuted, perm))
}
