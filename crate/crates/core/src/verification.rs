//! Exhaustive machine checks of correctness, perfect security and resource
//! counts.
//!
//! Every shuffle a plan performs is enumerated as an explicit transcript with
//! an exact rational probability. Post-weighing shuffles of the symmetric
//! protocol are collapsed: no scale outcome depends on them, so each
//! enumerated transcript stands for all of its post-weighing variants.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::apparatus::{Draw, DrawKind, RandomSource, Transcript};
use crate::function_specs::{Assignment, BooleanFunction, PlayerInputs};
use crate::protocol::{
    execute, minterm_issue, BagRole, CoinIssue, ExecuteError, ProtocolKind, ProtocolPlan,
    ReferenceSide, ResourceCount, View,
};

/// Exact probability.
pub type Probability = Ratio<u64>;

/// Counterexamples kept per report; `failures` counts all of them.
pub const MAX_COUNTEREXAMPLES: usize = 8;

/// Above this many players security compares each input against one
/// representative of its output class instead of all pairs.
pub const PAIRWISE_SECURITY_MAX_PLAYERS: usize = 6;

mod probability_text {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Probability, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", p.numer(), p.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Probability, D::Error> {
        let text = String::deserialize(d)?;
        let (n, m) = text.split_once('/').unwrap_or((&text, "1"));
        let n: u64 = n.trim().parse().map_err(serde::de::Error::custom)?;
        let m: u64 = m.trim().parse().map_err(serde::de::Error::custom)?;
        if m == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(n, m))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ViewProbability {
    view: View,
    #[serde(with = "probability_text")]
    probability: Probability,
}

/// Exact distribution of views under the plan's shuffles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewDistribution(BTreeMap<View, Probability>);

impl ViewDistribution {
    pub fn probability(&self, view: &View) -> Probability {
        self.0.get(view).copied().unwrap_or_else(Probability::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&View, &Probability)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> Probability {
        self.0.values().copied().sum()
    }

    fn add(&mut self, view: View, p: Probability) {
        *self.0.entry(view).or_insert_with(Probability::zero) += p;
    }
}

impl FromIterator<(View, Probability)> for ViewDistribution {
    fn from_iter<I: IntoIterator<Item = (View, Probability)>>(iter: I) -> Self {
        let mut d = ViewDistribution::default();
        for (v, p) in iter {
            d.add(v, p);
        }
        d
    }
}

impl fmt::Display for ViewDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, p)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}: {p}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for ViewDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|(view, &probability)| ViewProbability {
            view: view.clone(),
            probability,
        }))
    }
}

impl<'de> Deserialize<'de> for ViewDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<ViewProbability>::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| (e.view, e.probability))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Counterexample {
    WrongOutput {
        inputs: String,
        transcript: Transcript,
        expected: bool,
        got: bool,
    },
    ExecutionFailed {
        inputs: String,
        transcript: Option<Transcript>,
        error: String,
    },
    DistinguishableViews {
        output: bool,
        inputs: String,
        distribution: ViewDistribution,
        other_inputs: String,
        other_distribution: ViewDistribution,
    },
    ResourceMismatch {
        field: String,
        declared: String,
        expected: String,
    },
    BoundExceeded {
        field: String,
        value: u64,
        bound: u64,
    },
    UnequalPans {
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub inputs: u64,
    pub transcripts: u64,
    pub executions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    pub failures: u64,
    pub counterexamples: Vec<Counterexample>,
    pub stats: EnumerationStats,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(check: &str) -> Self {
        Self {
            check: check.to_owned(),
            passed: true,
            failures: 0,
            counterexamples: Vec::new(),
            stats: EnumerationStats::default(),
            notes: Vec::new(),
        }
    }

    fn fail(&mut self, c: Counterexample) {
        self.passed = false;
        self.failures += 1;
        if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
            self.counterexamples.push(c);
        }
    }
}

const COLLAPSE_NOTE: &str =
    "post-weighing pair shuffles collapsed to the identity: no scale outcome depends on them";

fn collapses_post_shuffle(plan: &ProtocolPlan) -> bool {
    plan.kind == ProtocolKind::Symmetric && plan.randomization.shuffle_after_weighing
}

fn side_draw(swap: bool) -> Draw {
    Draw {
        kind: DrawKind::PairSides,
        permutation: if swap { vec![1, 0] } else { vec![0, 1] },
    }
}

/// Every randomness transcript the plan can consume, each with its exact
/// probability.
pub fn enumerate_randomness(plan: &ProtocolPlan) -> Vec<(Transcript, Probability)> {
    let orders = |k: usize| -> Vec<Option<Draw>> {
        if plan.randomization.shuffle_bags && k > 0 {
            (0..k)
                .permutations(k)
                .map(|permutation| {
                    Some(Draw {
                        kind: DrawKind::BagOrder,
                        permutation,
                    })
                })
                .collect()
        } else {
            vec![None]
        }
    };
    let transcripts: Vec<Transcript> = match plan.kind {
        ProtocolKind::And | ProtocolKind::Threshold => vec![Transcript::default()],
        ProtocolKind::General => orders(plan.prepared_bags.len())
            .into_iter()
            .map(|d| Transcript(d.into_iter().collect()))
            .collect(),
        ProtocolKind::Symmetric => {
            let m = plan
                .prepared_bags
                .iter()
                .filter(|b| matches!(b.role, BagRole::Target { .. }))
                .count();
            let sides: Vec<Vec<Draw>> = if plan.randomization.shuffle_pair_sides && m > 0 {
                (0..1u32 << m)
                    .map(|mask| (0..m).map(|i| side_draw(mask >> i & 1 == 1)).collect())
                    .collect()
            } else {
                vec![Vec::new()]
            };
            orders(m)
                .into_iter()
                .cartesian_product(sides)
                .map(|(order, sides)| Transcript(order.into_iter().chain(sides).collect()))
                .collect()
        }
    };
    let p = Ratio::new(1, transcripts.len() as u64);
    transcripts.into_iter().map(|t| (t, p)).collect()
}

type SharedSpace = Vec<(Arc<Transcript>, Probability)>;

fn shared_space(plan: &ProtocolPlan) -> SharedSpace {
    enumerate_randomness(plan)
        .into_iter()
        .map(|(t, p)| (Arc::new(t), p))
        .collect()
}

fn distribution_over(
    plan: &ProtocolPlan,
    x: &PlayerInputs,
    space: &SharedSpace,
) -> Result<ViewDistribution, (Transcript, ExecuteError)> {
    let mut d = ViewDistribution::default();
    for (t, p) in space {
        let trace = execute(plan, x, &mut RandomSource::replay(Arc::clone(t)))
            .map_err(|e| (Transcript::clone(t), e))?;
        d.add(trace.view, *p);
    }
    Ok(d)
}

/// Exact distribution of the public view for inputs `x`.
pub fn view_distribution(
    plan: &ProtocolPlan,
    x: &PlayerInputs,
) -> Result<ViewDistribution, ExecuteError> {
    distribution_over(plan, x, &shared_space(plan)).map_err(|(_, e)| e)
}

fn arity_failure(report: &mut VerificationReport, expected: usize, got: usize) {
    report.fail(Counterexample::ExecutionFailed {
        inputs: String::new(),
        transcript: None,
        error: format!("function takes {expected} inputs, plan has {got}"),
    });
}

/// Runs every input against every transcript and compares with `spec`.
pub fn check_correctness<F: BooleanFunction + ?Sized>(
    spec: &F,
    plan: &ProtocolPlan,
) -> VerificationReport {
    let mut report = VerificationReport::new("correctness");
    if spec.arity() != plan.n {
        arity_failure(&mut report, spec.arity(), plan.n);
        return report;
    }
    let space = shared_space(plan);
    if collapses_post_shuffle(plan) {
        report.notes.push(COLLAPSE_NOTE.to_owned());
    }
    let inputs = PlayerInputs::all(plan.n).expect("plan arity validated by spec");
    report.stats.inputs = inputs.len() as u64;
    report.stats.transcripts = space.len() as u64;
    for x in &inputs {
        let expected = spec.evaluate_unchecked(x);
        for (t, _) in &space {
            report.stats.executions += 1;
            match execute(plan, x, &mut RandomSource::replay(Arc::clone(t))) {
                Ok(trace) if trace.output == expected => {}
                Ok(trace) => report.fail(Counterexample::WrongOutput {
                    inputs: x.to_string(),
                    transcript: Transcript::clone(t),
                    expected,
                    got: trace.output,
                }),
                Err(e) => report.fail(Counterexample::ExecutionFailed {
                    inputs: x.to_string(),
                    transcript: Some(Transcript::clone(t)),
                    error: e.to_string(),
                }),
            }
        }
    }
    report
}

/// Perfect security: inputs with the same function value must induce
/// identical view distributions.
pub fn check_security<F: BooleanFunction + ?Sized>(
    spec: &F,
    plan: &ProtocolPlan,
) -> VerificationReport {
    let mut report = VerificationReport::new("security");
    if spec.arity() != plan.n {
        arity_failure(&mut report, spec.arity(), plan.n);
        return report;
    }
    let space = shared_space(plan);
    if collapses_post_shuffle(plan) {
        report.notes.push(COLLAPSE_NOTE.to_owned());
    }
    let inputs = PlayerInputs::all(plan.n).expect("plan arity validated by spec");
    report.stats.inputs = inputs.len() as u64;
    report.stats.transcripts = space.len() as u64;
    report.stats.executions = report.stats.inputs * report.stats.transcripts;

    let mut classes: BTreeMap<bool, Vec<(PlayerInputs, ViewDistribution)>> = BTreeMap::new();
    for x in inputs {
        match distribution_over(plan, &x, &space) {
            Ok(d) => classes
                .entry(spec.evaluate_unchecked(&x))
                .or_default()
                .push((x, d)),
            Err((t, e)) => report.fail(Counterexample::ExecutionFailed {
                inputs: x.to_string(),
                transcript: Some(t),
                error: e.to_string(),
            }),
        }
    }
    let pairwise = plan.n <= PAIRWISE_SECURITY_MAX_PLAYERS;
    if !pairwise {
        report
            .notes
            .push("inputs compared against one representative per output class".to_owned());
    }
    for (&output, members) in &classes {
        let pairs: Vec<(usize, usize)> = if pairwise {
            (0..members.len())
                .array_combinations()
                .map(|[i, j]| (i, j))
                .collect()
        } else {
            (1..members.len()).map(|j| (0, j)).collect()
        };
        for (i, j) in pairs {
            let ((a, da), (b, db)) = (&members[i], &members[j]);
            if da != db {
                report.fail(Counterexample::DistinguishableViews {
                    output,
                    inputs: a.to_string(),
                    distribution: da.clone(),
                    other_inputs: b.to_string(),
                    other_distribution: db.clone(),
                });
            }
        }
    }
    report
}

fn ceil_half(n: usize) -> u64 {
    n.div_ceil(2) as u64
}

/// Closed-form resources for a plan of the given kind with `m` accepted sums
/// (symmetric) or `m` minterm bags (general). Coins of the general protocol
/// are passed in since they depend on the minterms.
fn closed_form(kind: ProtocolKind, n: usize, m: usize, general_coins: u64) -> ResourceCount {
    let (n, m) = (n as u64, m as u64);
    match kind {
        ProtocolKind::And => ResourceCount {
            coins: 3 * n,
            bags: 0,
            comparisons_max: 1,
            uses_custom_weight: false,
            uses_pen: false,
        },
        ProtocolKind::Threshold => ResourceCount {
            coins: 2 * n,
            bags: 0,
            comparisons_max: 1,
            uses_custom_weight: true,
            uses_pen: false,
        },
        ProtocolKind::Symmetric if m == 0 => ResourceCount::default(),
        ProtocolKind::Symmetric => ResourceCount {
            coins: n * (m + 2),
            bags: m + 1,
            comparisons_max: m,
            uses_custom_weight: false,
            uses_pen: true,
        },
        ProtocolKind::General if m == 0 => ResourceCount::default(),
        ProtocolKind::General => ResourceCount {
            coins: general_coins,
            bags: m,
            comparisons_max: m,
            uses_custom_weight: false,
            uses_pen: false,
        },
    }
}

/// Recounts the plan's resources from its structure and checks them against
/// the declared counts, the closed forms and the worst-case bounds.
pub fn audit_resources(plan: &ProtocolPlan) -> VerificationReport {
    let mut report = VerificationReport::new("resources");
    let n = plan.n;
    let reference_coins = match plan.reference_side {
        ReferenceSide::HeavyCoins { count } => u64::from(count),
        _ => 0,
    };
    let issued: u64 = plan.player_issue.iter().map(|c| u64::from(c.total())).sum();
    let prepared: u64 = plan
        .prepared_bags
        .iter()
        .map(|b| u64::from(b.heavy + b.light))
        .sum();
    let targets: Vec<(usize, u32, u32)> = plan
        .prepared_bags
        .iter()
        .filter_map(|b| match b.role {
            BagRole::Target { sum } => Some((sum, b.heavy, b.light)),
            _ => None,
        })
        .collect();
    let minterms = match plan.minterms() {
        Ok(m) => m,
        Err(e) => {
            report.fail(Counterexample::ResourceMismatch {
                field: "prepared_bags".into(),
                declared: e.to_string(),
                expected: "well-formed minterm assignments".into(),
            });
            Vec::new()
        }
    };
    let weighed = match plan.kind {
        ProtocolKind::And | ProtocolKind::Threshold => {
            u64::from(plan.reference_side != ReferenceSide::Nothing)
        }
        ProtocolKind::Symmetric => targets.len() as u64,
        ProtocolKind::General => minterms.len() as u64,
    };
    let recounted = ResourceCount {
        coins: issued + prepared + reference_coins,
        bags: plan.prepared_bags.len() as u64,
        comparisons_max: weighed,
        uses_custom_weight: plan.custom_weight.is_some(),
        uses_pen: plan
            .prepared_bags
            .iter()
            .any(|b| b.role == BagRole::Special),
    };

    let m = match plan.kind {
        ProtocolKind::Symmetric => targets.len(),
        ProtocolKind::General => minterms.len(),
        _ => 0,
    };
    let expected_issue = match plan.kind {
        ProtocolKind::General => minterm_issue(n, &minterms),
        ProtocolKind::Symmetric if m == 0 => vec![CoinIssue::NONE; n],
        _ => vec![CoinIssue::ONE_EACH; n],
    };
    let general_coins = expected_issue
        .iter()
        .map(|c| u64::from(c.total()))
        .sum::<u64>()
        + n as u64;
    let closed = closed_form(plan.kind, n, m, general_coins);

    let mut mismatch = |field: &str, declared: String, expected: String| {
        if declared != expected {
            report.fail(Counterexample::ResourceMismatch {
                field: field.to_owned(),
                declared,
                expected,
            });
        }
    };
    mismatch(
        "player_issue",
        format!("{:?}", plan.player_issue),
        format!("{expected_issue:?}"),
    );
    mismatch(
        "resources (declared vs recounted)",
        plan.resources.to_string(),
        recounted.to_string(),
    );
    mismatch(
        "resources (recounted vs closed form)",
        recounted.to_string(),
        closed.to_string(),
    );

    let mut bound = |field: &str, value: u64, bound: u64| {
        if value > bound {
            report.fail(Counterexample::BoundExceeded {
                field: field.to_owned(),
                value,
                bound,
            });
        }
    };
    let r = recounted;
    let n64 = n as u64;
    match plan.kind {
        ProtocolKind::And | ProtocolKind::Threshold => {
            bound("comparisons", r.comparisons_max, 1);
            bound("bags", r.bags, 0);
        }
        ProtocolKind::Symmetric => {
            bound("bags", r.bags, ceil_half(n) + 1);
            bound("comparisons", r.comparisons_max, ceil_half(n));
            bound("coins", r.coins, n64 * (ceil_half(n) + 2));
        }
        ProtocolKind::General => {
            let half = 1u64 << (n - 1);
            bound("bags", r.bags, half);
            bound("comparisons", r.comparisons_max, half);
            bound("coins", r.coins, n64 * ((1u64 << n) + 1));
        }
    }

    // Every weighing must put n coins' worth of w on each pan.
    let mut unequal = |detail: String| report.fail(Counterexample::UnequalPans { detail });
    match (plan.kind, plan.reference_side) {
        (_, ReferenceSide::Nothing) => {}
        (ProtocolKind::And | ProtocolKind::General, ReferenceSide::HeavyCoins { count })
            if count as usize == n => {}
        (ProtocolKind::Threshold, ReferenceSide::CustomWeight) => match plan.custom_weight {
            Some(w) if w.w_units == n as i64 => {}
            other => unequal(format!("custom weight {other:?} does not carry {n}w")),
        },
        (ProtocolKind::Symmetric, ReferenceSide::PairedBag) => {
            for (sum, heavy, light) in &targets {
                if (heavy + light) as usize != n || *heavy as usize != *sum {
                    unequal(format!(
                        "bag for sum {sum} holds {heavy} heavy and {light} light coins"
                    ));
                }
            }
        }
        (kind, reference) => unequal(format!("{kind:?} protocol weighed against {reference:?}")),
    }
    if plan.kind == ProtocolKind::General
        && plan.prepared_bags.iter().any(|b| b.heavy + b.light != 0)
    {
        unequal("minterm bags must start empty".into());
    }
    report
}

/// Assignments listed in each general-protocol bag, in preparation order.
pub fn minterm_bitstrings(plan: &ProtocolPlan) -> Vec<String> {
    plan.minterms()
        .unwrap_or_default()
        .into_iter()
        .map(|a: Assignment| a.to_bitstring(plan.n))
        .collect()
}

/// Plan corruptions used to show the checks are sensitive.
pub mod mutants {
    use crate::apparatus::Weight;
    use crate::protocol::{ProtocolKind, ProtocolPlan};

    /// Threshold plan whose reference carries `-δ/2` instead of `+δ/2`.
    pub fn flip_threshold_offset(plan: &ProtocolPlan) -> Option<ProtocolPlan> {
        if plan.kind != ProtocolKind::Threshold {
            return None;
        }
        let w = plan.custom_weight?;
        let mut m = plan.clone();
        m.custom_weight = Some(Weight::new(w.w_units, w.half_delta_units - 2));
        Some(m)
    }

    /// Symmetric plan that always puts the special bag on the left pan.
    pub fn remove_pair_shuffle(plan: &ProtocolPlan) -> Option<ProtocolPlan> {
        if plan.kind != ProtocolKind::Symmetric {
            return None;
        }
        let mut m = plan.clone();
        m.randomization.shuffle_pair_sides = false;
        Some(m)
    }
}

/// Probability mass is conserved exactly.
pub fn is_normalised(d: &ViewDistribution) -> bool {
    d.total() == Probability::one()
}
