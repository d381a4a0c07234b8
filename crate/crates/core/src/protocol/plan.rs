use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::apparatus::{Coin, Weight};
use crate::function_specs::{classify, Assignment, FunctionSpec, TruthTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[serde(rename = "p1_and")]
    And,
    #[serde(rename = "p2_threshold")]
    Threshold,
    #[serde(rename = "p3_symmetric")]
    Symmetric,
    #[serde(rename = "p4_general")]
    General,
}

/// Coins handed to one player before the protocol starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinIssue {
    pub heavy: u32,
    pub light: u32,
}

impl CoinIssue {
    pub const NONE: CoinIssue = CoinIssue { heavy: 0, light: 0 };
    pub const ONE_EACH: CoinIssue = CoinIssue { heavy: 1, light: 1 };

    pub fn total(self) -> u32 {
        self.heavy + self.light
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum BagRole {
    /// Symmetric protocol: holds `sum` heavy and `n - sum` light coins.
    Target { sum: usize },
    /// Symmetric protocol: the pen-marked bag receiving the players' coins.
    Special,
    /// General protocol: one coin per player, heavy iff `x_i = b_i`.
    Minterm { assignment: String },
}

/// A bag as prepared during public setup. `heavy`/`light` count the coins put
/// in before any player deposits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagSpec {
    #[serde(flatten)]
    pub role: BagRole,
    pub heavy: u32,
    pub light: u32,
}

/// What is placed opposite the players' coins on each weighing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReferenceSide {
    HeavyCoins {
        count: u32,
    },
    CustomWeight,
    /// Special bag weighed against a non-special bag.
    PairedBag,
    /// Constant function, nothing is weighed.
    Nothing,
}

/// Maps the observed outcomes to the raw (pre-negation) output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Single weighing; 1 iff it balances.
    BalancedIsOne,
    /// Single weighing; 1 iff the players' side is heavier.
    LeftHeavierIsOne,
    /// Series of weighings; 1 iff any of them balances.
    AnyBalancedIsOne,
    /// No weighing; raw output 0.
    ConstantZero,
}

/// Which joint shuffles the schedule performs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Randomization {
    pub shuffle_bags: bool,
    pub shuffle_pair_sides: bool,
    pub shuffle_after_weighing: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCount {
    pub coins: u64,
    pub bags: u64,
    pub comparisons_max: u64,
    pub uses_custom_weight: bool,
    pub uses_pen: bool,
}

impl std::fmt::Display for ResourceCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "coins={} bags={} comparisons={} custom_weight={} pen={}",
            self.coins, self.bags, self.comparisons_max, self.uses_custom_weight, self.uses_pen
        )
    }
}

/// A compiled physical protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolPlan {
    pub kind: ProtocolKind,
    pub n: usize,
    pub negate_output: bool,
    pub player_issue: Vec<CoinIssue>,
    pub prepared_bags: Vec<BagSpec>,
    pub custom_weight: Option<Weight>,
    pub reference_side: ReferenceSide,
    pub decision_rule: DecisionRule,
    pub randomization: Randomization,
    pub resources: ResourceCount,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub const NOTE_CUSTOM_WEIGHT: &str = "uses a custom weight";
pub const NOTE_PEN: &str = "uses a pen";

impl ProtocolPlan {
    fn finish(mut self) -> Self {
        self.notes.clear();
        if self.resources.uses_custom_weight {
            self.notes.push(NOTE_CUSTOM_WEIGHT.to_owned());
        }
        if self.resources.uses_pen {
            self.notes.push(NOTE_PEN.to_owned());
        }
        self
    }

    fn constant(kind: ProtocolKind, n: usize, negate_output: bool) -> Self {
        ProtocolPlan {
            kind,
            n,
            negate_output,
            player_issue: vec![CoinIssue::NONE; n],
            prepared_bags: Vec::new(),
            custom_weight: None,
            reference_side: ReferenceSide::Nothing,
            decision_rule: DecisionRule::ConstantZero,
            randomization: Randomization::default(),
            resources: ResourceCount::default(),
            notes: Vec::new(),
        }
    }

    /// Assignments of the general protocol's bags, in preparation order.
    pub fn minterms(&self) -> Result<Vec<Assignment>, PlanError> {
        self.prepared_bags
            .iter()
            .filter_map(|b| match &b.role {
                BagRole::Minterm { assignment } => {
                    Some(Assignment::parse(self.n, assignment).map_err(PlanError::from))
                }
                _ => None,
            })
            .collect()
    }

    /// The general protocol's deposit table: `matrix[player][bit][bag]` is
    /// the coin player `player` puts in bag `bag` when holding `bit`.
    pub fn deposit_matrix(&self) -> Result<Vec<[Vec<Coin>; 2]>, PlanError> {
        if self.kind != ProtocolKind::General {
            return Err(PlanError::Malformed(
                "deposit matrix is only defined for the general protocol".into(),
            ));
        }
        let minterms = self.minterms()?;
        Ok((0..self.n)
            .map(|i| {
                let row = |bit: bool| {
                    minterms
                        .iter()
                        .map(|b| Coin::for_bit(b.bit(i) == bit))
                        .collect()
                };
                [row(false), row(true)]
            })
            .collect())
    }
}

/// n-player AND: each player's chosen coin against n heavy coins.
pub fn plan_and(n: usize) -> Result<ProtocolPlan, PlanError> {
    FunctionSpec::and(n)?;
    let n64 = n as u64;
    Ok(ProtocolPlan {
        player_issue: vec![CoinIssue::ONE_EACH; n],
        reference_side: ReferenceSide::HeavyCoins { count: n as u32 },
        decision_rule: DecisionRule::BalancedIsOne,
        resources: ResourceCount {
            coins: 3 * n64,
            bags: 0,
            comparisons_max: 1,
            uses_custom_weight: false,
            uses_pen: false,
        },
        ..ProtocolPlan::constant(ProtocolKind::And, n, false)
    }
    .finish())
}

/// The threshold reference `(k-1)w + (n-k+1)(w-δ) + δ/2`.
pub fn threshold_weight(n: usize, k: usize) -> Weight {
    Weight::assembled((k - 1) as u32, (n - k + 1) as u32, 1)
}

/// Threshold `T_k`: the players' coins against the custom weight.
pub fn plan_threshold(n: usize, k: usize) -> Result<ProtocolPlan, PlanError> {
    FunctionSpec::threshold(n, k)?;
    Ok(ProtocolPlan {
        player_issue: vec![CoinIssue::ONE_EACH; n],
        custom_weight: Some(threshold_weight(n, k)),
        reference_side: ReferenceSide::CustomWeight,
        decision_rule: DecisionRule::LeftHeavierIsOne,
        resources: ResourceCount {
            coins: 2 * n as u64,
            bags: 0,
            comparisons_max: 1,
            uses_custom_weight: true,
            uses_pen: false,
        },
        ..ProtocolPlan::constant(ProtocolKind::Threshold, n, false)
    }
    .finish())
}

/// Symmetric `S_X^n`: one reference bag per accepted sum, weighed in turn
/// against the marked bag of the players' coins. Sets larger than `(n+1)/2`
/// are complemented and the output negated.
pub fn plan_symmetric(n: usize, sums: &BTreeSet<usize>) -> Result<ProtocolPlan, PlanError> {
    FunctionSpec::symmetric(n, sums.iter().copied())?;
    // |X| > (n+1)/2  <=>  2|X| > n+1
    let negate = 2 * sums.len() > n + 1;
    let effective: BTreeSet<usize> = if negate {
        (0..=n).filter(|s| !sums.contains(s)).collect()
    } else {
        sums.clone()
    };
    if effective.is_empty() {
        return Ok(ProtocolPlan::constant(ProtocolKind::Symmetric, n, negate).finish());
    }
    let m = effective.len();
    let mut bags: Vec<BagSpec> = effective
        .iter()
        .map(|&s| BagSpec {
            role: BagRole::Target { sum: s },
            heavy: s as u32,
            light: (n - s) as u32,
        })
        .collect();
    bags.push(BagSpec {
        role: BagRole::Special,
        heavy: 0,
        light: 0,
    });
    Ok(ProtocolPlan {
        player_issue: vec![CoinIssue::ONE_EACH; n],
        prepared_bags: bags,
        reference_side: ReferenceSide::PairedBag,
        decision_rule: DecisionRule::AnyBalancedIsOne,
        randomization: Randomization {
            shuffle_bags: true,
            shuffle_pair_sides: true,
            shuffle_after_weighing: true,
        },
        resources: ResourceCount {
            coins: (n * (m + 2)) as u64,
            bags: (m + 1) as u64,
            comparisons_max: m as u64,
            uses_custom_weight: false,
            uses_pen: true,
        },
        ..ProtocolPlan::constant(ProtocolKind::Symmetric, n, negate)
    }
    .finish())
}

/// Per-player issue `max(p_i, q_i)` heavy and light coins, where `p_i`/`q_i`
/// count the minterms with `b_i = 0`/`b_i = 1`.
pub fn minterm_issue(n: usize, minterms: &[Assignment]) -> Vec<CoinIssue> {
    (0..n)
        .map(|i| {
            let ones = minterms.iter().filter(|b| b.bit(i)).count();
            let c = ones.max(minterms.len() - ones) as u32;
            CoinIssue { heavy: c, light: c }
        })
        .collect()
}

/// General `f` via Boole expansion: one bag per assignment in `B_f`, poured
/// against n heavy coins. Tables with more than `2^(n-1)` ones are
/// complemented and the output negated.
pub fn plan_general(table: &TruthTable) -> Result<ProtocolPlan, PlanError> {
    let n = table.n();
    let negate = table.ones().len() > 1 << (n - 1);
    let effective = if negate {
        table.complement()
    } else {
        table.clone()
    };
    if effective.ones().is_empty() {
        return Ok(ProtocolPlan::constant(ProtocolKind::General, n, negate).finish());
    }
    let minterms: Vec<Assignment> = effective.ones().iter().copied().collect();
    let issue = minterm_issue(n, &minterms);
    let coins = issue.iter().map(|c| u64::from(c.total())).sum::<u64>() + n as u64;
    let b = minterms.len() as u64;
    Ok(ProtocolPlan {
        player_issue: issue,
        prepared_bags: minterms
            .iter()
            .map(|a| BagSpec {
                role: BagRole::Minterm {
                    assignment: a.to_bitstring(n),
                },
                heavy: 0,
                light: 0,
            })
            .collect(),
        reference_side: ReferenceSide::HeavyCoins { count: n as u32 },
        decision_rule: DecisionRule::AnyBalancedIsOne,
        randomization: Randomization {
            shuffle_bags: true,
            ..Randomization::default()
        },
        resources: ResourceCount {
            coins,
            bags: b,
            comparisons_max: b,
            uses_custom_weight: false,
            uses_pen: false,
        },
        ..ProtocolPlan::constant(ProtocolKind::General, n, negate)
    }
    .finish())
}

/// Dispatches a spec to its protocol. Truth tables are classified first so
/// the cheapest applicable family is used.
pub fn compile(spec: &FunctionSpec) -> Result<ProtocolPlan, PlanError> {
    match spec {
        FunctionSpec::And { n } => plan_and(*n),
        FunctionSpec::Threshold { n, k } => plan_threshold(*n, *k),
        FunctionSpec::Symmetric { n, sums } => plan_symmetric(*n, sums),
        FunctionSpec::TruthTable(t) => match classify(t) {
            FunctionSpec::TruthTable(t) => plan_general(&t),
            other => compile(&other),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_specs::SpecError;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    fn xor3_table() -> TruthTable {
        TruthTable::from_bitstrings(3, ["100", "010", "001", "111"]).unwrap()
    }

    #[test]
    fn and_plans() {
        let p = plan_and(2).unwrap();
        assert_eq!(p.resources.coins, 6);
        assert_eq!(p.resources.comparisons_max, 1);
        let p = plan_and(3).unwrap();
        assert_eq!(
            (
                p.resources.coins,
                p.resources.bags,
                p.resources.comparisons_max
            ),
            (9, 0, 1)
        );
        assert_eq!(p.player_issue, vec![CoinIssue::ONE_EACH; 3]);
        assert_eq!(p.reference_side, ReferenceSide::HeavyCoins { count: 3 });
        assert!(p.custom_weight.is_none());
        assert!(matches!(
            plan_and(0),
            Err(PlanError::Spec(SpecError::ZeroPlayers))
        ));
    }

    #[test]
    fn threshold_weight_matches_direct_substitution() {
        // (k-1)w + (n-k+1)(w-δ) + δ/2 with δ = 2 half-delta units
        for n in 1..=8usize {
            for k in 1..=n {
                let (n_, k_) = (n as i64, k as i64);
                let direct = Weight::new((k_ - 1) + (n_ - k_ + 1), -2 * (n_ - k_ + 1) + 1);
                assert_eq!(threshold_weight(n, k), direct);
                assert_eq!(direct, Weight::new(n_, 2 * k_ - 2 * n_ - 1));
            }
        }
        assert_eq!(threshold_weight(3, 2), Weight::new(3, -3));
        assert_eq!(threshold_weight(1, 1), Weight::new(1, -1));
    }

    #[test]
    fn threshold_plan() {
        let p = plan_threshold(5, 3).unwrap();
        assert_eq!(p.kind, ProtocolKind::Threshold);
        assert_eq!(p.resources.comparisons_max, 1);
        assert_eq!(p.resources.coins, 10);
        assert!(p.resources.uses_custom_weight);
        assert_eq!(p.notes, vec![NOTE_CUSTOM_WEIGHT.to_owned()]);
        assert!(matches!(
            plan_threshold(3, 4),
            Err(PlanError::Spec(SpecError::ThresholdOutOfRange { .. }))
        ));
    }

    #[test]
    fn symmetric_plan_for_xor3() {
        let p = plan_symmetric(3, &set(&[1, 3])).unwrap();
        assert!(!p.negate_output);
        let targets: Vec<(u32, u32)> = p
            .prepared_bags
            .iter()
            .filter(|b| matches!(b.role, BagRole::Target { .. }))
            .map(|b| (b.heavy, b.light))
            .collect();
        assert_eq!(targets, vec![(1, 2), (3, 0)]);
        assert_eq!(p.prepared_bags.len(), 3);
        // n(m+2) with m = 2
        assert_eq!(p.resources.coins, 12);
        assert_eq!(p.resources.comparisons_max, 2);
        assert_eq!(p.notes, vec![NOTE_PEN.to_owned()]);
    }

    #[test]
    fn symmetric_plan_complements_large_sets() {
        let p = plan_symmetric(4, &set(&[0, 1, 3, 4])).unwrap();
        assert!(p.negate_output);
        assert_eq!(
            p.prepared_bags[0],
            BagSpec {
                role: BagRole::Target { sum: 2 },
                heavy: 2,
                light: 2
            }
        );
        assert_eq!(p.prepared_bags.len(), 2);

        let p = plan_symmetric(3, &set(&[0, 1, 2, 3])).unwrap();
        assert!(p.negate_output);
        assert!(p.prepared_bags.is_empty());
        assert_eq!(p.resources, ResourceCount::default());

        // |X| = (n+1)/2 exactly keeps the original set
        let p = plan_symmetric(3, &set(&[0, 1])).unwrap();
        assert!(!p.negate_output);
        assert_eq!(p.resources.comparisons_max, 2);

        assert!(matches!(
            plan_symmetric(3, &set(&[5])),
            Err(PlanError::Spec(SpecError::SumOutOfRange { .. }))
        ));
    }

    #[test]
    fn general_plan_for_xor3() {
        let p = plan_general(&xor3_table()).unwrap();
        let mut bags: Vec<String> = p
            .minterms()
            .unwrap()
            .iter()
            .map(|a| a.to_bitstring(3))
            .collect();
        bags.sort();
        assert_eq!(bags, vec!["001", "010", "100", "111"]);
        assert_eq!(p.player_issue, vec![CoinIssue { heavy: 2, light: 2 }; 3]);
        assert_eq!(p.resources.coins, 15);
        assert_eq!(p.resources.bags, 4);
        assert_eq!(p.resources.comparisons_max, 4);
    }

    #[test]
    fn general_plan_constant_and_complement() {
        let zero = TruthTable::new(3, []).unwrap();
        let p = plan_general(&zero).unwrap();
        assert!(p.prepared_bags.is_empty());
        assert!(!p.negate_output);
        assert_eq!(p.decision_rule, DecisionRule::ConstantZero);

        // 5 of 8 ones -> complement of size 3, negated
        let t = TruthTable::from_bitstrings(3, ["000", "100", "010", "110", "111"]).unwrap();
        let p = plan_general(&t).unwrap();
        assert!(p.negate_output);
        assert_eq!(p.resources.bags, 3);
        // exactly 2^(n-1) ones keeps the table
        let t = TruthTable::from_bitstrings(2, ["00", "11"]).unwrap();
        assert!(!plan_general(&t).unwrap().negate_output);
    }

    #[test]
    fn compile_dispatch() {
        let and3 = FunctionSpec::TruthTable(TruthTable::from_bitstrings(3, ["111"]).unwrap());
        let p = compile(&and3).unwrap();
        assert_eq!(p.kind, ProtocolKind::And);
        assert_eq!(p.resources.coins, 9);

        let xor = FunctionSpec::TruthTable(xor3_table());
        let p3 = compile(&xor).unwrap();
        let p4 = plan_general(&xor3_table()).unwrap();
        assert_eq!(p3.kind, ProtocolKind::Symmetric);
        assert!(p3.resources.bags < p4.resources.bags);
        assert!(p3.resources.coins < p4.resources.coins);
        assert!(p3.resources.comparisons_max < p4.resources.comparisons_max);

        let p = compile(&FunctionSpec::threshold(5, 3).unwrap()).unwrap();
        assert_eq!(p.kind, ProtocolKind::Threshold);
        assert_eq!(p.resources.comparisons_max, 1);

        let dictator = TruthTable::from_bitstrings(2, ["10", "11"]).unwrap();
        assert_eq!(
            compile(&FunctionSpec::TruthTable(dictator)).unwrap().kind,
            ProtocolKind::General
        );
    }

    #[test]
    fn deposit_matrix_reproduces_xor3_table() {
        let p = plan_general(&xor3_table()).unwrap();
        let m = p.deposit_matrix().unwrap();
        let bags = p.minterms().unwrap();
        for (i, rows) in m.iter().enumerate() {
            for bit in [false, true] {
                for (j, b) in bags.iter().enumerate() {
                    let expect = if b.bit(i) == bit {
                        Coin::Heavy
                    } else {
                        Coin::Light
                    };
                    assert_eq!(rows[usize::from(bit)][j], expect);
                }
            }
        }
        assert!(plan_and(2).unwrap().deposit_matrix().is_err());
    }
}
