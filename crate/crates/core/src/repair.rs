//! Repair problems: seeded electronics + code puzzles drawn from a fixed
//! bank of 27 templates, with graders for both halves.
//!
//! A template describes a correct board (slots, parts, wiring) and a code
//! listing with candidate blanks. Instantiation picks part values, injects
//! faults into the board, chooses which blanks to open and shuffles their
//! options. The answer key travels with the problem and is stripped by
//! [`RepairProblem::client_view`].

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::Difficulty;
use crate::rng::GameRng;

pub const DEFAULT_REPAIR_PROBABILITY: f64 = 1.0 / 3.0;
pub const BANK_SIZE: usize = 27;
pub const TEMPLATES_PER_DIFFICULTY: usize = 9;

const SELECT_STREAM: u64 = 0x5245_5041_4952_0000;
const MIN_OPTIONS: u64 = 3;
const MAX_OPTIONS: u64 = 5;
/// Seeds whose answer keys are graded when a bank is loaded.
const LOAD_CHECK_SEEDS: u64 = 4;

const SHIPPED_BANK: &str = include_str!("../data/repair_bank.json");

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("repair bank is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("repair bank: {0}")]
    Bank(String),
    #[error("template {template}: {message}")]
    Template { template: String, message: String },
    #[error("no repair templates for difficulty {0}")]
    NoTemplates(Difficulty),
    #[error("action {index}: {message}")]
    Action { index: usize, message: String },
    #[error("expected {expected} code selections, got {got}")]
    SelectionCount { expected: usize, got: usize },
    #[error("blank {blank}: option {option} does not exist")]
    SelectionRange { blank: usize, option: usize },
}

/// Draws once from `rng`; true with probability `p`.
pub fn maybe_trigger_repair(rng: &mut GameRng, p: f64) -> bool {
    rng.chance(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    MissingPart,
    WrongPart,
    BrokenWire,
    SwappedWires,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotTemplate {
    pub id: String,
    pub accepts: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartTemplate {
    pub id: String,
    pub kind: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronicsSchema {
    pub slots: Vec<SlotTemplate>,
    /// One part per slot kind plus decoys of kinds no slot accepts.
    pub parts: Vec<PartTemplate>,
    pub terminals: Vec<String>,
    /// The correct wiring.
    pub wires: Vec<[String; 2]>,
    pub faults: Vec<FaultKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlankTemplate {
    pub correct: String,
    pub distractors: Vec<String>,
}

/// `lines` mark blank `i` with `{i}`; each blank appears exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSchema {
    pub lines: Vec<String>,
    pub blanks: Vec<BlankTemplate>,
}

/// `statement` and `hints` may reference a part's drawn value as `{part-id}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairTemplate {
    pub id: String,
    pub difficulty: Difficulty,
    pub statement: String,
    pub hints: Vec<String>,
    pub electronics: ElectronicsSchema,
    pub code: CodeSchema,
}

fn fault_count(difficulty: Difficulty) -> usize {
    match difficulty {
        Difficulty::Easy | Difficulty::Medium => 1,
        Difficulty::Hard => 2,
    }
}

fn blank_range(difficulty: Difficulty) -> (u64, u64) {
    match difficulty {
        Difficulty::Easy => (1, 1),
        Difficulty::Medium => (2, 3),
        Difficulty::Hard => (3, 3),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Wire {
    pub from: String,
    pub to: String,
}

impl Wire {
    /// Wires are undirected; endpoints are stored in sorted order.
    pub fn new(a: &str, b: &str) -> Self {
        let (from, to) = if a <= b { (a, b) } else { (b, a) };
        Wire {
            from: from.to_string(),
            to: to.to_string(),
        }
    }
}

impl std::fmt::Display for Wire {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartInstance {
    pub id: String,
    pub kind: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub id: String,
    pub accepts: String,
    pub part: Option<PartInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectronicsBoard {
    pub slots: Vec<Slot>,
    pub bin: Vec<PartInstance>,
    pub terminals: Vec<String>,
    pub wires: Vec<Wire>,
    /// Target wiring; part of the answer key.
    pub correct_wires: Vec<Wire>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBlank {
    pub line: usize,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodePuzzle {
    /// Open blank `k` is rendered as `{k}`.
    pub lines: Vec<String>,
    pub blanks: Vec<CodeBlank>,
    /// Correct option index per blank; part of the answer key.
    pub correct: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fault {
    MissingPart { slot: String },
    WrongPart { slot: String, decoy: String },
    BrokenWire { wire: Wire },
    SwappedWires { first: Wire, second: Wire },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum ElectronicsAction {
    PlacePart { slot: String, part: String },
    RemovePart { slot: String },
    ConnectWire { from: String, to: String },
    DisconnectWire { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKey {
    pub electronics: Vec<ElectronicsAction>,
    pub code: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairProblem {
    pub template_id: String,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub statement: String,
    pub hints: Vec<String>,
    pub faults: Vec<Fault>,
    pub board: ElectronicsBoard,
    pub code: CodePuzzle,
    pub answer_key: AnswerKey,
}

/// What a player sees: the problem without faults, target wiring or key.
#[derive(Debug, Clone, Serialize)]
pub struct ClientProblem<'a> {
    pub template_id: &'a str,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub statement: &'a str,
    pub hints: &'a [String],
    pub board: ClientBoard<'a>,
    pub code: ClientCode<'a>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClientBoard<'a> {
    pub slots: &'a [Slot],
    pub bin: &'a [PartInstance],
    pub terminals: &'a [String],
    pub wires: &'a [Wire],
}

#[derive(Debug, Clone, Serialize)]
pub struct ClientCode<'a> {
    pub lines: &'a [String],
    pub blanks: &'a [CodeBlank],
}

impl RepairProblem {
    pub fn client_view(&self) -> ClientProblem<'_> {
        ClientProblem {
            template_id: &self.template_id,
            difficulty: self.difficulty,
            seed: self.seed,
            statement: &self.statement,
            hints: &self.hints,
            board: ClientBoard {
                slots: &self.board.slots,
                bin: &self.board.bin,
                terminals: &self.board.terminals,
                wires: &self.board.wires,
            },
            code: ClientCode {
                lines: &self.code.lines,
                blanks: &self.code.blanks,
            },
        }
    }

    pub fn answer_submission(&self) -> RepairSubmission {
        RepairSubmission {
            electronics_actions: self.answer_key.electronics.clone(),
            code_selections: self.answer_key.code.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ElectronicsVerdict {
    Fixed,
    NotFixed { reasons: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CodeVerdict {
    Fixed,
    NotFixed { wrong_blanks: Vec<usize> },
}

impl ElectronicsVerdict {
    pub fn is_fixed(&self) -> bool {
        matches!(self, ElectronicsVerdict::Fixed)
    }
}

impl CodeVerdict {
    pub fn is_fixed(&self) -> bool {
        matches!(self, CodeVerdict::Fixed)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairSubmission {
    #[serde(default)]
    pub electronics_actions: Vec<ElectronicsAction>,
    #[serde(default)]
    pub code_selections: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairVerdicts {
    pub electronics: ElectronicsVerdict,
    pub code: CodeVerdict,
}

impl RepairVerdicts {
    pub fn fixed(&self) -> bool {
        self.electronics.is_fixed() && self.code.is_fixed()
    }
}

/// Grades both halves. An empty selection list means nothing was chosen
/// yet and marks every blank wrong instead of failing.
pub fn grade(
    problem: &RepairProblem,
    submission: &RepairSubmission,
) -> Result<RepairVerdicts, RepairError> {
    let code = if submission.code_selections.is_empty() && !problem.code.blanks.is_empty() {
        CodeVerdict::NotFixed {
            wrong_blanks: (0..problem.code.blanks.len()).collect(),
        }
    } else {
        check_code(&problem.code, &submission.code_selections)?
    };
    Ok(RepairVerdicts {
        electronics: check_electronics(&problem.board, &submission.electronics_actions)?,
        code,
    })
}

/// Applies `actions` to the board in order, then requires every slot to
/// hold a part of its accepted kind and the wire set to equal the target.
///
/// Actions naming unknown slots, parts or terminals are errors. Actions
/// that do not fit the board state (placing into an occupied slot,
/// connecting an existing wire) are skipped and reported as reasons.
pub fn check_electronics(
    board: &ElectronicsBoard,
    actions: &[ElectronicsAction],
) -> Result<ElectronicsVerdict, RepairError> {
    let terminals: HashSet<&str> = board.terminals.iter().map(String::as_str).collect();
    let known_parts: HashSet<&str> = board
        .bin
        .iter()
        .chain(board.slots.iter().filter_map(|s| s.part.as_ref()))
        .map(|p| p.id.as_str())
        .collect();
    let mut slots: BTreeMap<&str, (&str, Option<PartInstance>)> = board
        .slots
        .iter()
        .map(|s| (s.id.as_str(), (s.accepts.as_str(), s.part.clone())))
        .collect();
    let mut bin: Vec<PartInstance> = board.bin.clone();
    let mut wires: BTreeSet<Wire> = board.wires.iter().cloned().collect();
    let mut reasons = Vec::new();

    let bad = |index: usize, message: String| RepairError::Action { index, message };
    let check_terminal = |index: usize, t: &str| {
        if terminals.contains(t) {
            Ok(())
        } else {
            Err(bad(index, format!("unknown terminal `{t}`")))
        }
    };

    for (index, action) in actions.iter().enumerate() {
        match action {
            ElectronicsAction::PlacePart { slot, part } => {
                if !known_parts.contains(part.as_str()) {
                    return Err(bad(index, format!("unknown part `{part}`")));
                }
                let (_, content) = slots
                    .get_mut(slot.as_str())
                    .ok_or_else(|| bad(index, format!("unknown slot `{slot}`")))?;
                if content.is_some() {
                    reasons.push(format!("action {index}: slot {slot} is already occupied"));
                } else if let Some(pos) = bin.iter().position(|p| &p.id == part) {
                    *content = Some(bin.remove(pos));
                } else {
                    reasons.push(format!("action {index}: part {part} is not in the bin"));
                }
            }
            ElectronicsAction::RemovePart { slot } => {
                let (_, content) = slots
                    .get_mut(slot.as_str())
                    .ok_or_else(|| bad(index, format!("unknown slot `{slot}`")))?;
                match content.take() {
                    Some(p) => bin.push(p),
                    None => reasons.push(format!("action {index}: slot {slot} is already empty")),
                }
            }
            ElectronicsAction::ConnectWire { from, to } => {
                check_terminal(index, from)?;
                check_terminal(index, to)?;
                if from == to {
                    reasons.push(format!("action {index}: cannot wire {from} to itself"));
                } else if !wires.insert(Wire::new(from, to)) {
                    reasons.push(format!(
                        "action {index}: {} is already connected",
                        Wire::new(from, to)
                    ));
                }
            }
            ElectronicsAction::DisconnectWire { from, to } => {
                check_terminal(index, from)?;
                check_terminal(index, to)?;
                if !wires.remove(&Wire::new(from, to)) {
                    reasons.push(format!(
                        "action {index}: there is no wire {}",
                        Wire::new(from, to)
                    ));
                }
            }
        }
    }

    for (id, (accepts, content)) in &slots {
        match content {
            None => reasons.push(format!("slot {id} is empty")),
            Some(p) if p.kind != *accepts => reasons.push(format!(
                "slot {id} holds a {}, which does not belong there",
                p.kind
            )),
            Some(_) => {}
        }
    }
    let target: BTreeSet<Wire> = board.correct_wires.iter().cloned().collect();
    for extra in wires.difference(&target) {
        reasons.push(format!("wire {extra} does not belong"));
    }
    let missing = target.difference(&wires).count();
    if missing > 0 {
        reasons.push(format!("{missing} required connection(s) missing"));
    }

    Ok(if reasons.is_empty() {
        ElectronicsVerdict::Fixed
    } else {
        ElectronicsVerdict::NotFixed { reasons }
    })
}

pub fn check_code(puzzle: &CodePuzzle, selections: &[usize]) -> Result<CodeVerdict, RepairError> {
    if selections.len() != puzzle.blanks.len() {
        return Err(RepairError::SelectionCount {
            expected: puzzle.blanks.len(),
            got: selections.len(),
        });
    }
    let mut wrong_blanks = Vec::new();
    for (blank, (&option, b)) in selections.iter().zip(&puzzle.blanks).enumerate() {
        if option >= b.options.len() {
            return Err(RepairError::SelectionRange { blank, option });
        }
        if option != puzzle.correct[blank] {
            wrong_blanks.push(blank);
        }
    }
    Ok(if wrong_blanks.is_empty() {
        CodeVerdict::Fixed
    } else {
        CodeVerdict::NotFixed { wrong_blanks }
    })
}

impl RepairTemplate {
    fn err(&self, message: impl Into<String>) -> RepairError {
        RepairError::Template {
            template: self.id.clone(),
            message: message.into(),
        }
    }

    fn decoys(&self) -> impl Iterator<Item = &PartTemplate> {
        let accepted: HashSet<&str> = self
            .electronics
            .slots
            .iter()
            .map(|s| s.accepts.as_str())
            .collect();
        self.electronics
            .parts
            .iter()
            .filter(move |p| !accepted.contains(p.kind.as_str()))
    }

    fn part_for(&self, slot: &SlotTemplate) -> &PartTemplate {
        self.electronics
            .parts
            .iter()
            .find(|p| p.kind == slot.accepts)
            .expect("validated: one part per slot")
    }

    fn correct_wires(&self) -> Vec<Wire> {
        self.electronics
            .wires
            .iter()
            .map(|[a, b]| Wire::new(a, b))
            .collect()
    }

    /// Pairs of wire indices whose far ends can be exchanged to produce two
    /// new wires outside the target set.
    fn swappable_pairs(&self, excluded: &BTreeSet<usize>) -> Vec<(usize, usize)> {
        let wires = &self.electronics.wires;
        let target: BTreeSet<Wire> = self.correct_wires().into_iter().collect();
        let mut pairs = Vec::new();
        for i in 0..wires.len() {
            for j in i + 1..wires.len() {
                if excluded.contains(&i) || excluded.contains(&j) {
                    continue;
                }
                if swapped(&wires[i], &wires[j])
                    .is_some_and(|(x, y)| !target.contains(&x) && !target.contains(&y))
                {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    pub fn validate(&self) -> Result<(), RepairError> {
        let e = &self.electronics;
        if self.id.trim().is_empty() {
            return Err(self.err("empty id"));
        }
        if self.statement.trim().is_empty() || self.hints.is_empty() {
            return Err(self.err("needs a statement and at least one hint"));
        }
        if e.slots.len() < 2 {
            return Err(self.err("needs at least two slots"));
        }
        unique(e.slots.iter().map(|s| s.id.as_str()))
            .map_err(|d| self.err(format!("duplicate slot `{d}`")))?;
        unique(e.slots.iter().map(|s| s.accepts.as_str()))
            .map_err(|d| self.err(format!("two slots accept `{d}`")))?;
        unique(e.parts.iter().map(|p| p.id.as_str()))
            .map_err(|d| self.err(format!("duplicate part `{d}`")))?;
        for p in &e.parts {
            if p.values.is_empty() {
                return Err(self.err(format!("part `{}` has no values", p.id)));
            }
        }
        for s in &e.slots {
            let n = e.parts.iter().filter(|p| p.kind == s.accepts).count();
            if n != 1 {
                return Err(self.err(format!(
                    "slot `{}` needs exactly one `{}` part, found {n}",
                    s.id, s.accepts
                )));
            }
        }

        unique(e.terminals.iter().map(String::as_str))
            .map_err(|d| self.err(format!("duplicate terminal `{d}`")))?;
        let terminals: HashSet<&str> = e.terminals.iter().map(String::as_str).collect();
        if e.wires.len() < 3 {
            return Err(self.err("needs at least three wires"));
        }
        for [a, b] in &e.wires {
            if !terminals.contains(a.as_str()) || !terminals.contains(b.as_str()) {
                return Err(self.err(format!("wire {a}-{b} uses an unknown terminal")));
            }
            if a == b {
                return Err(self.err(format!("wire {a}-{b} is a loop")));
            }
        }
        let wires = self.correct_wires();
        if wires.iter().collect::<BTreeSet<_>>().len() != wires.len() {
            return Err(self.err("duplicate wire"));
        }

        if e.faults.is_empty() {
            return Err(self.err("no fault kinds"));
        }
        unique(e.faults.iter().map(|f| format!("{f:?}")))
            .map_err(|d| self.err(format!("fault `{d}` listed twice")))?;
        if e.faults.contains(&FaultKind::WrongPart) && self.decoys().count() == 0 {
            return Err(self.err("wrong-part faults need a decoy part"));
        }
        if e.faults.contains(&FaultKind::SwappedWires)
            && self.swappable_pairs(&BTreeSet::new()).is_empty()
        {
            return Err(self.err("no wire pair can be swapped"));
        }

        let (_, max_blanks) = blank_range(self.difficulty);
        if self.code.blanks.len() < max_blanks as usize {
            return Err(self.err(format!("needs at least {max_blanks} code blanks")));
        }
        for (i, b) in self.code.blanks.iter().enumerate() {
            let marker = format!("{{{i}}}");
            let hits: usize = self
                .code
                .lines
                .iter()
                .map(|l| l.matches(&marker).count())
                .sum();
            if hits != 1 {
                return Err(self.err(format!("blank {i} appears {hits} times in the listing")));
            }
            if b.correct.trim().is_empty() || b.distractors.len() < (MIN_OPTIONS - 1) as usize {
                return Err(self.err(format!(
                    "blank {i} needs a token and at least two distractors"
                )));
            }
            if b.distractors
                .iter()
                .any(|d| *d == b.correct || d.trim().is_empty())
            {
                return Err(self.err(format!("blank {i} has a distractor equal to the answer")));
            }
            unique(b.distractors.iter().map(String::as_str))
                .map_err(|d| self.err(format!("blank {i} repeats distractor `{d}`")))?;
        }

        for text in std::iter::once(&self.statement).chain(&self.hints) {
            for name in placeholders(text) {
                if !e.parts.iter().any(|p| p.id == name) {
                    return Err(self.err(format!("text references unknown part `{name}`")));
                }
            }
        }
        Ok(())
    }

    /// Deterministic instance for `seed`; independent of how the template
    /// was selected.
    pub fn instantiate(&self, seed: u64) -> RepairProblem {
        let mut rng = GameRng::new(seed, template_stream(&self.id));
        let e = &self.electronics;

        let values: BTreeMap<&str, String> = e
            .parts
            .iter()
            .map(|p| {
                (
                    p.id.as_str(),
                    rng.pick(&p.values)
                        .expect("validated: values non-empty")
                        .clone(),
                )
            })
            .collect();
        let instance = |p: &PartTemplate| PartInstance {
            id: p.id.clone(),
            kind: p.kind.clone(),
            value: values[p.id.as_str()].clone(),
        };

        let code = self.instantiate_code(&mut rng);

        let mut slots: Vec<Slot> = e
            .slots
            .iter()
            .map(|s| Slot {
                id: s.id.clone(),
                accepts: s.accepts.clone(),
                part: Some(instance(self.part_for(s))),
            })
            .collect();
        let mut bin: Vec<PartInstance> = self.decoys().map(instance).collect();
        let mut wires: Vec<Option<Wire>> = self.correct_wires().into_iter().map(Some).collect();
        let mut faults = Vec::new();
        let mut key = Vec::new();
        let mut used_slots = BTreeSet::new();
        let mut used_wires = BTreeSet::new();

        for _ in 0..fault_count(self.difficulty) {
            let free_slots: Vec<usize> = (0..slots.len())
                .filter(|i| !used_slots.contains(i))
                .collect();
            let free_wires: Vec<usize> = (0..wires.len())
                .filter(|i| !used_wires.contains(i))
                .collect();
            let free_decoys: Vec<usize> = (0..bin.len())
                .filter(|&i| !slots.iter().any(|s| s.accepts == bin[i].kind))
                .collect();
            let pairs = self.swappable_pairs(&used_wires);
            let feasible: Vec<FaultKind> = e
                .faults
                .iter()
                .copied()
                .filter(|k| match k {
                    FaultKind::MissingPart => !free_slots.is_empty(),
                    FaultKind::WrongPart => !free_slots.is_empty() && !free_decoys.is_empty(),
                    FaultKind::BrokenWire => !free_wires.is_empty(),
                    FaultKind::SwappedWires => !pairs.is_empty(),
                })
                .collect();
            let Some(&kind) = rng.pick(&feasible) else {
                break;
            };
            match kind {
                FaultKind::MissingPart | FaultKind::WrongPart => {
                    let s = *rng.pick(&free_slots).expect("feasible");
                    used_slots.insert(s);
                    let part = slots[s].part.take().expect("untouched slot is filled");
                    let slot_id = slots[s].id.clone();
                    if kind == FaultKind::WrongPart {
                        let d = *rng.pick(&free_decoys).expect("feasible");
                        let decoy = bin.remove(d);
                        faults.push(Fault::WrongPart {
                            slot: slot_id.clone(),
                            decoy: decoy.id.clone(),
                        });
                        key.push(ElectronicsAction::RemovePart {
                            slot: slot_id.clone(),
                        });
                        slots[s].part = Some(decoy);
                    } else {
                        faults.push(Fault::MissingPart {
                            slot: slot_id.clone(),
                        });
                    }
                    key.push(ElectronicsAction::PlacePart {
                        slot: slot_id,
                        part: part.id.clone(),
                    });
                    bin.push(part);
                }
                FaultKind::BrokenWire => {
                    let w = *rng.pick(&free_wires).expect("feasible");
                    used_wires.insert(w);
                    let wire = wires[w].take().expect("untouched wire");
                    key.push(ElectronicsAction::ConnectWire {
                        from: wire.from.clone(),
                        to: wire.to.clone(),
                    });
                    faults.push(Fault::BrokenWire { wire });
                }
                FaultKind::SwappedWires => {
                    let (i, j) = *rng.pick(&pairs).expect("feasible");
                    used_wires.insert(i);
                    used_wires.insert(j);
                    let (x, y) = swapped(&e.wires[i], &e.wires[j]).expect("pair was checked");
                    for bad in [&x, &y] {
                        key.push(ElectronicsAction::DisconnectWire {
                            from: bad.from.clone(),
                            to: bad.to.clone(),
                        });
                    }
                    let first = wires[i].replace(x).expect("untouched wire");
                    let second = wires[j].replace(y).expect("untouched wire");
                    for good in [&first, &second] {
                        key.push(ElectronicsAction::ConnectWire {
                            from: good.from.clone(),
                            to: good.to.clone(),
                        });
                    }
                    faults.push(Fault::SwappedWires { first, second });
                }
            }
        }

        rng.shuffle(&mut bin);
        let mut wires: Vec<Wire> = wires.into_iter().flatten().collect();
        rng.shuffle(&mut wires);

        let fill = |text: &str| fill_placeholders(text, &values);
        let mut hints: Vec<String> = self.hints.iter().map(|h| fill(h)).collect();
        hints.extend(faults.iter().map(fault_hint));

        RepairProblem {
            template_id: self.id.clone(),
            difficulty: self.difficulty,
            seed,
            statement: fill(&self.statement),
            hints,
            faults,
            board: ElectronicsBoard {
                slots,
                bin,
                terminals: e.terminals.clone(),
                wires,
                correct_wires: self.correct_wires(),
            },
            answer_key: AnswerKey {
                electronics: key,
                code: code.correct.clone(),
            },
            code,
        }
    }

    fn instantiate_code(&self, rng: &mut GameRng) -> CodePuzzle {
        let (lo, hi) = blank_range(self.difficulty);
        let k = rng.range_inclusive(lo, hi) as usize;
        let mut order: Vec<usize> = (0..self.code.blanks.len()).collect();
        rng.shuffle(&mut order);
        let mut open: Vec<usize> = order[..k].to_vec();
        open.sort_unstable();

        let mut lines = self.code.lines.clone();
        for (i, b) in self.code.blanks.iter().enumerate() {
            let marker = format!("{{{i}}}");
            let replacement = match open.iter().position(|&o| o == i) {
                Some(slot) => format!("{{{slot}}}"),
                None => b.correct.clone(),
            };
            for line in &mut lines {
                *line = line.replace(&marker, &replacement);
            }
        }

        let mut blanks = Vec::with_capacity(k);
        let mut correct = Vec::with_capacity(k);
        for &i in &open {
            let b = &self.code.blanks[i];
            let max = MAX_OPTIONS.min(1 + b.distractors.len() as u64);
            let n = rng.range_inclusive(MIN_OPTIONS, max) as usize;
            let mut distractors = b.distractors.clone();
            rng.shuffle(&mut distractors);
            let mut options = vec![b.correct.clone()];
            options.extend(distractors.into_iter().take(n - 1));
            rng.shuffle(&mut options);
            let line = self
                .code
                .lines
                .iter()
                .position(|l| l.contains(&format!("{{{i}}}")))
                .expect("validated");
            correct.push(
                options
                    .iter()
                    .position(|o| *o == b.correct)
                    .expect("correct token kept"),
            );
            blanks.push(CodeBlank { line, options });
        }
        CodePuzzle {
            lines,
            blanks,
            correct,
        }
    }
}

/// Exchanges the second endpoints of two wires; `None` if that yields a
/// loop or fails to change anything.
fn swapped(a: &[String; 2], b: &[String; 2]) -> Option<(Wire, Wire)> {
    let ([a0, a1], [b0, b1]) = (a, b);
    if a0 == b0 || a1 == b1 || a0 == b1 || b0 == a1 {
        return None;
    }
    let (x, y) = (Wire::new(a0, b1), Wire::new(b0, a1));
    (x != y).then_some((x, y))
}

fn fault_hint(fault: &Fault) -> String {
    match fault {
        Fault::MissingPart { slot } => format!("Look closely at slot {slot}."),
        Fault::WrongPart { slot, .. } => format!("Is the part in slot {slot} the kind it expects?"),
        Fault::BrokenWire { wire } => format!("Follow every wire that should reach {}.", wire.from),
        Fault::SwappedWires { first, .. } => {
            format!("Two leads near {} may have been crossed.", first.from)
        }
    }
}

fn template_stream(id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn unique<T: Eq + std::hash::Hash + Clone>(items: impl Iterator<Item = T>) -> Result<(), T> {
    let mut seen = HashSet::new();
    for item in items {
        if !seen.insert(item.clone()) {
            return Err(item);
        }
    }
    Ok(())
}

fn placeholders(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else {
            break;
        };
        out.push(&rest[open + 1..open + close]);
        rest = &rest[open + close + 1..];
    }
    out
}

fn fill_placeholders(text: &str, values: &BTreeMap<&str, String>) -> String {
    let mut out = text.to_string();
    for (id, value) in values {
        out = out.replace(&format!("{{{id}}}"), value);
    }
    out
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BankFile {
    templates: Vec<RepairTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairBank {
    templates: Vec<RepairTemplate>,
}

impl RepairBank {
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_BANK).expect("shipped repair bank is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, RepairError> {
        let file: BankFile = serde_json::from_str(text)?;
        Self::new(file.templates)
    }

    /// Checks the bank shape, every template, and that each template's
    /// answer keys grade as fixed.
    pub fn new(templates: Vec<RepairTemplate>) -> Result<Self, RepairError> {
        if templates.len() != BANK_SIZE {
            return Err(RepairError::Bank(format!(
                "expected {BANK_SIZE} templates, found {}",
                templates.len()
            )));
        }
        for &d in Difficulty::ALL {
            let n = templates.iter().filter(|t| t.difficulty == d).count();
            if n != TEMPLATES_PER_DIFFICULTY {
                return Err(RepairError::Bank(format!(
                    "expected {TEMPLATES_PER_DIFFICULTY} {d} templates, found {n}"
                )));
            }
        }
        unique(templates.iter().map(|t| t.id.as_str()))
            .map_err(|d| RepairError::Bank(format!("duplicate template id `{d}`")))?;
        for t in &templates {
            t.validate()?;
            for seed in 0..LOAD_CHECK_SEEDS {
                let p = t.instantiate(seed);
                if !grade(&p, &p.answer_submission())?.fixed() {
                    return Err(t.err(format!(
                        "answer key for seed {seed} does not grade as fixed"
                    )));
                }
            }
        }
        Ok(Self { templates })
    }

    pub fn templates(&self) -> &[RepairTemplate] {
        &self.templates
    }

    pub fn get(&self, id: &str) -> Option<&RepairTemplate> {
        self.templates.iter().find(|t| t.id == id)
    }

    pub fn for_difficulty(&self, difficulty: Difficulty) -> impl Iterator<Item = &RepairTemplate> {
        self.templates
            .iter()
            .filter(move |t| t.difficulty == difficulty)
    }
}

/// Uniformly selects a template of `difficulty` and instantiates it.
pub fn generate_problem(
    seed: u64,
    difficulty: Difficulty,
    bank: &RepairBank,
) -> Result<RepairProblem, RepairError> {
    let pool: Vec<&RepairTemplate> = bank.for_difficulty(difficulty).collect();
    let mut rng = GameRng::new(seed, SELECT_STREAM + difficulty.ordinal() as u64);
    let template = rng
        .pick(&pool)
        .ok_or(RepairError::NoTemplates(difficulty))?;
    Ok(template.instantiate(seed))
}
