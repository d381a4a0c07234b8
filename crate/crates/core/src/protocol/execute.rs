use serde::{Deserialize, Serialize};

use super::plan::{BagRole, DecisionRule, ProtocolKind, ProtocolPlan, ReferenceSide};
use super::ExecuteError;
use crate::apparatus::{
    compare, find_marked, shuffle, Bag, BagId, Coin, DrawKind, RandomSource, ScaleOutcome,
    Transcript, Weight,
};
use crate::function_specs::{Assignment, PlayerInputs, SpecError};

/// What an observer of the run sees: the scale outcomes, in weighing order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct View(pub Vec<ScaleOutcome>);

impl std::fmt::Display for View {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("[")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{o}")?;
        }
        f.write_str("]")
    }
}

/// One weighing with the (hidden) masses on each pan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weighing {
    pub left: Weight,
    pub right: Weight,
    pub outcome: ScaleOutcome,
}

/// Full record of one run. Only `view` and `output` are public knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub transcript: Transcript,
    pub events: Vec<Weighing>,
    pub view: View,
    pub raw_output: bool,
    pub output: bool,
}

/// Coins each player must have to follow the deposit rule on input `x`.
fn demand(plan: &ProtocolPlan, minterms: &[Assignment], x: &PlayerInputs) -> Vec<(u32, u32)> {
    let n = plan.n;
    match plan.kind {
        ProtocolKind::General => (0..n)
            .map(|i| {
                let heavy = minterms.iter().filter(|b| b.bit(i) == x.bit(i)).count() as u32;
                (heavy, minterms.len() as u32 - heavy)
            })
            .collect(),
        ProtocolKind::Symmetric if plan.prepared_bags.is_empty() => vec![(0, 0); n],
        _ => x
            .bits()
            .iter()
            .map(|&b| (u32::from(b), u32::from(!b)))
            .collect(),
    }
}

fn players_coins(x: &PlayerInputs) -> Vec<Coin> {
    x.bits().iter().map(|&b| Coin::for_bit(b)).collect()
}

fn reference_weight(plan: &ProtocolPlan) -> Result<Weight, ExecuteError> {
    match plan.reference_side {
        ReferenceSide::HeavyCoins { count } => Ok(Coin::Heavy.weight().times(count)),
        ReferenceSide::CustomWeight => plan.custom_weight.ok_or_else(|| {
            ExecuteError::Malformed("custom weight reference without a weight".into())
        }),
        other => Err(ExecuteError::Malformed(format!(
            "{:?} protocol cannot use reference {other:?}",
            plan.kind
        ))),
    }
}

fn weigh(events: &mut Vec<Weighing>, left: Weight, right: Weight) -> ScaleOutcome {
    let outcome = compare(left, right);
    events.push(Weighing {
        left,
        right,
        outcome,
    });
    outcome
}

/// Symmetric schedule: shuffle the reference bags, then weigh each against
/// the marked bag until one balances.
fn run_symmetric(
    plan: &ProtocolPlan,
    x: &PlayerInputs,
    rng: &mut RandomSource,
    transcript: &mut Transcript,
    events: &mut Vec<Weighing>,
) -> Result<(), ExecuteError> {
    let mut special = None;
    let mut targets = Vec::new();
    for (i, spec) in plan.prepared_bags.iter().enumerate() {
        let mut bag = Bag::with_counts(BagId(i as u32), spec.heavy, spec.light);
        match spec.role {
            BagRole::Special => {
                bag.contents.extend(players_coins(x));
                bag.marked = true;
                if special.replace(bag).is_some() {
                    return Err(ExecuteError::Malformed("more than one special bag".into()));
                }
            }
            BagRole::Target { .. } => targets.push(bag),
            BagRole::Minterm { .. } => {
                return Err(ExecuteError::Malformed(
                    "minterm bag in a symmetric protocol".into(),
                ))
            }
        }
    }
    if targets.is_empty() {
        return Ok(());
    }
    let mut special = special
        .ok_or_else(|| ExecuteError::Malformed("symmetric protocol without special bag".into()))?;
    if plan.randomization.shuffle_bags {
        targets = shuffle(targets, DrawKind::BagOrder, rng, transcript)?.0;
    }
    for target in targets {
        let mut pair = vec![special, target];
        if plan.randomization.shuffle_pair_sides {
            pair = shuffle(pair, DrawKind::PairSides, rng, transcript)?.0;
        }
        if weigh(events, pair[0].weight(), pair[1].weight()) == ScaleOutcome::Balanced {
            return Ok(());
        }
        if plan.randomization.shuffle_after_weighing {
            pair = shuffle(pair, DrawKind::PostWeighing, rng, transcript)?.0;
        }
        let idx = find_marked(&pair)?;
        special = pair.swap_remove(idx);
    }
    Ok(())
}

/// General schedule: fill one bag per minterm, shuffle, pour each against
/// the reference.
fn run_general(
    plan: &ProtocolPlan,
    minterms: &[Assignment],
    x: &PlayerInputs,
    rng: &mut RandomSource,
    transcript: &mut Transcript,
    events: &mut Vec<Weighing>,
) -> Result<(), ExecuteError> {
    if minterms.len() != plan.prepared_bags.len() {
        return Err(ExecuteError::Malformed(
            "general protocol with non-minterm bags".into(),
        ));
    }
    if minterms.is_empty() {
        return Ok(());
    }
    let reference = reference_weight(plan)?;
    let mut bags: Vec<Bag> = plan
        .prepared_bags
        .iter()
        .zip(minterms)
        .enumerate()
        .map(|(i, (spec, b))| {
            let mut bag = Bag::with_counts(BagId(i as u32), spec.heavy, spec.light);
            bag.contents
                .extend((0..plan.n).map(|p| Coin::for_bit(x.bit(p) == b.bit(p))));
            bag
        })
        .collect();
    if plan.randomization.shuffle_bags {
        bags = shuffle(bags, DrawKind::BagOrder, rng, transcript)?.0;
    }
    for bag in &bags {
        weigh(events, bag.weight(), reference);
    }
    Ok(())
}

fn decide(rule: DecisionRule, view: &[ScaleOutcome]) -> bool {
    match rule {
        DecisionRule::BalancedIsOne => view == [ScaleOutcome::Balanced],
        DecisionRule::LeftHeavierIsOne => view == [ScaleOutcome::LeftHeavier],
        DecisionRule::AnyBalancedIsOne => view.contains(&ScaleOutcome::Balanced),
        DecisionRule::ConstantZero => false,
    }
}

/// Runs `plan` on the players' inputs, drawing every shuffle from `rng`.
pub fn execute(
    plan: &ProtocolPlan,
    x: &PlayerInputs,
    rng: &mut RandomSource,
) -> Result<ExecutionTrace, ExecuteError> {
    if x.n() != plan.n {
        return Err(SpecError::ArityMismatch {
            expected: plan.n,
            got: x.n(),
        }
        .into());
    }
    if plan.player_issue.len() != plan.n {
        return Err(ExecuteError::Malformed(format!(
            "coin issue lists {} players, plan has {}",
            plan.player_issue.len(),
            plan.n
        )));
    }
    let minterms = match plan.kind {
        ProtocolKind::General => plan.minterms()?,
        _ => Vec::new(),
    };
    let needed = demand(plan, &minterms, x);
    for (player, ((heavy, light), issue)) in needed.into_iter().zip(&plan.player_issue).enumerate()
    {
        if heavy > issue.heavy || light > issue.light {
            return Err(ExecuteError::InsufficientCoins {
                player: player + 1,
                needed_heavy: heavy,
                needed_light: light,
            });
        }
    }

    let mut transcript = Transcript::default();
    let mut events = Vec::with_capacity(plan.prepared_bags.len().max(1));
    match plan.kind {
        ProtocolKind::And | ProtocolKind::Threshold => {
            if plan.decision_rule != DecisionRule::ConstantZero {
                let left = players_coins(x).iter().map(|c| c.weight()).sum();
                weigh(&mut events, left, reference_weight(plan)?);
            }
        }
        ProtocolKind::Symmetric => run_symmetric(plan, x, rng, &mut transcript, &mut events)?,
        ProtocolKind::General => {
            run_general(plan, &minterms, x, rng, &mut transcript, &mut events)?
        }
    }
    if events.len() as u64 > plan.resources.comparisons_max {
        return Err(ExecuteError::ComparisonBudget {
            performed: events.len(),
            budget: plan.resources.comparisons_max,
        });
    }
    let view = View(events.iter().map(|e| e.outcome).collect());
    let raw_output = decide(plan.decision_rule, &view.0);
    Ok(ExecutionTrace {
        transcript,
        events,
        view,
        raw_output,
        output: raw_output ^ plan.negate_output,
    })
}
