//! Deterministic five-player werewolf rules: role assignment, vote tallying,
//! eliminations, divination, and win detection.
//!
//! Everything here is pure value semantics: operations take a state (plus an
//! explicit rng where chance is involved) and return a new state, so the same
//! event sequence always reproduces the same game.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Player identifier, always in `1..=5`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AgentId(u8);

/// The five seats of a game, in id order.
pub const ALL_AGENTS: [AgentId; 5] = [
    AgentId(1),
    AgentId(2),
    AgentId(3),
    AgentId(4),
    AgentId(5),
];

impl AgentId {
    pub fn new(index: u8) -> Option<AgentId> {
        (1..=5).contains(&index).then_some(AgentId(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Agent[{:02}]", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Villager,
    Seer,
    Werewolf,
    Possessed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Team {
    Human,
    Werewolf,
}

/// What a divination reveals. The possessed is human-species despite being on
/// the werewolf team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Species {
    Human,
    Werewolf,
}

impl Role {
    pub fn team(self) -> Team {
        match self {
            Role::Villager | Role::Seer => Team::Human,
            Role::Werewolf | Role::Possessed => Team::Werewolf,
        }
    }

    pub fn species(self) -> Species {
        match self {
            Role::Werewolf => Species::Werewolf,
            _ => Species::Human,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Villager => "VILLAGER",
            Role::Seer => "SEER",
            Role::Werewolf => "WEREWOLF",
            Role::Possessed => "POSSESSED",
        }
    }
}

/// Mapping of every seat to its hidden role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleAssignment(BTreeMap<AgentId, Role>);

impl RoleAssignment {
    /// Builds an assignment, checking the fixed role multiset
    /// (one seer, one werewolf, one possessed, two villagers).
    pub fn new(mapping: BTreeMap<AgentId, Role>) -> Result<RoleAssignment, GameError> {
        if mapping.len() != 5 {
            return Err(GameError::BadAssignment);
        }
        let count = |r: Role| mapping.values().filter(|&&x| x == r).count();
        if count(Role::Seer) != 1
            || count(Role::Werewolf) != 1
            || count(Role::Possessed) != 1
            || count(Role::Villager) != 2
        {
            return Err(GameError::BadAssignment);
        }
        Ok(RoleAssignment(mapping))
    }

    pub fn role(&self, agent: AgentId) -> Role {
        self.0[&agent]
    }

    pub fn werewolf(&self) -> AgentId {
        self.agent_with(Role::Werewolf)
    }

    pub fn seer(&self) -> AgentId {
        self.agent_with(Role::Seer)
    }

    pub fn possessed(&self) -> AgentId {
        self.agent_with(Role::Possessed)
    }

    fn agent_with(&self, role: Role) -> AgentId {
        *self
            .0
            .iter()
            .find(|(_, &r)| r == role)
            .map(|(a, _)| a)
            .expect("multiset checked at construction")
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, Role)> + '_ {
        self.0.iter().map(|(&a, &r)| (a, r))
    }
}

/// Uniform random permutation of the fixed role multiset over seats 1..=5.
pub fn assign_roles<R: Rng>(rng: &mut R) -> RoleAssignment {
    let mut roles = [
        Role::Seer,
        Role::Werewolf,
        Role::Possessed,
        Role::Villager,
        Role::Villager,
    ];
    roles.shuffle(rng);
    let mapping = ALL_AGENTS.iter().copied().zip(roles).collect();
    RoleAssignment::new(mapping).expect("fixed multiset")
}

/// What an agent said on its turn: free text or one of the two control tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TalkContent {
    Utterance(String),
    Over,
    Skip,
}

impl TalkContent {
    /// Wire/log representation; control tokens are the literal words.
    pub fn as_str(&self) -> &str {
        match self {
            TalkContent::Utterance(s) => s,
            TalkContent::Over => "Over",
            TalkContent::Skip => "Skip",
        }
    }

    pub fn from_wire(s: &str) -> TalkContent {
        match s {
            "Over" => TalkContent::Over,
            "Skip" => TalkContent::Skip,
            _ => TalkContent::Utterance(s.to_string()),
        }
    }

    pub fn is_control(&self) -> bool {
        !matches!(self, TalkContent::Utterance(_))
    }
}

impl Serialize for TalkContent {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TalkContent {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Ok(TalkContent::from_wire(&s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TalkEntry {
    pub day: u32,
    pub turn: u32,
    /// Position within the turn's speaking order.
    pub idx: u32,
    pub agent: AgentId,
    pub text: TalkContent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub day: u32,
    pub agent: AgentId,
    pub target: AgentId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivineRecord {
    /// Night the divination resolved (day 0 holds the first one).
    pub day: u32,
    pub agent: AgentId,
    pub target: AgentId,
    pub result: Species,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub day: u32,
    pub agent: AgentId,
    pub target: AgentId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub day: u32,
    pub target: AgentId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Talk,
    Vote,
    Night,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameStatus {
    Ongoing,
    HumanWin,
    WerewolfWin,
}

impl GameStatus {
    pub fn winner(self) -> Option<Team> {
        match self {
            GameStatus::Ongoing => None,
            GameStatus::HumanWin => Some(Team::Human),
            GameStatus::WerewolfWin => Some(Team::Werewolf),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("role assignment is not the fixed multiset")]
    BadAssignment,
    #[error("{0} is not alive")]
    NotAlive(AgentId),
    #[error("game already finished")]
    GameFinished,
    #[error("missing vote from {0}")]
    MissingVote(AgentId),
    #[error("invalid vote: {0}")]
    InvalidVote(String),
    #[error("invalid target {0}")]
    InvalidTarget(AgentId),
    #[error("the seer is dead")]
    SeerDead,
    #[error("talk entry out of order")]
    TalkOutOfOrder,
}

/// Authoritative record of one match: day, phase, alive set, hidden roles,
/// and the full talk/vote/divine/attack history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub day: u32,
    pub phase: Phase,
    pub alive: BTreeSet<AgentId>,
    pub roles: RoleAssignment,
    pub talks: Vec<TalkEntry>,
    pub votes: Vec<VoteRecord>,
    pub divinations: Vec<DivineRecord>,
    pub attacks: Vec<AttackRecord>,
    pub executions: Vec<ExecutionRecord>,
    pub status: GameStatus,
    pub rng_seed: u64,
}

impl GameState {
    pub fn new(rng_seed: u64, roles: RoleAssignment) -> GameState {
        GameState {
            day: 0,
            phase: Phase::Talk,
            alive: ALL_AGENTS.iter().copied().collect(),
            roles,
            talks: Vec::new(),
            votes: Vec::new(),
            divinations: Vec::new(),
            attacks: Vec::new(),
            executions: Vec::new(),
            status: GameStatus::Ongoing,
            rng_seed,
        }
    }

    pub fn is_alive(&self, agent: AgentId) -> bool {
        self.alive.contains(&agent)
    }

    pub fn role(&self, agent: AgentId) -> Role {
        self.roles.role(agent)
    }

    fn ensure_ongoing(&self) -> Result<(), GameError> {
        if self.status == GameStatus::Ongoing {
            Ok(())
        } else {
            Err(GameError::GameFinished)
        }
    }

    /// HumanWin once the werewolf is gone; WerewolfWin once the werewolf is
    /// alive and humans no longer outnumber it (elimination by vote becomes
    /// impossible at that point).
    pub fn check_win(&self) -> GameStatus {
        let wolf = self.roles.werewolf();
        if !self.is_alive(wolf) {
            return GameStatus::HumanWin;
        }
        let humans = self
            .alive
            .iter()
            .filter(|&&a| self.role(a).species() == Species::Human)
            .count();
        let wolves = self.alive.len() - humans;
        if humans <= wolves {
            GameStatus::WerewolfWin
        } else {
            GameStatus::Ongoing
        }
    }

    /// Appends a talk entry, enforcing liveness and (day, turn, idx) order.
    pub fn record_talk(&self, entry: TalkEntry) -> Result<GameState, GameError> {
        self.ensure_ongoing()?;
        if !self.is_alive(entry.agent) {
            return Err(GameError::NotAlive(entry.agent));
        }
        if let Some(last) = self.talks.last() {
            if (entry.day, entry.turn, entry.idx) <= (last.day, last.turn, last.idx) {
                return Err(GameError::TalkOutOfOrder);
            }
        }
        let mut next = self.clone();
        next.talks.push(entry);
        Ok(next)
    }

    /// Records one vote. Self-votes are rejected rather than redirected.
    pub fn record_vote(&self, vote: VoteRecord) -> Result<GameState, GameError> {
        self.ensure_ongoing()?;
        if vote.agent == vote.target {
            return Err(GameError::InvalidVote(format!("{} voted for itself", vote.agent)));
        }
        if !self.is_alive(vote.agent) {
            return Err(GameError::InvalidVote(format!("dead voter {}", vote.agent)));
        }
        if !self.is_alive(vote.target) {
            return Err(GameError::InvalidVote(format!("dead target {}", vote.target)));
        }
        let mut next = self.clone();
        next.votes.push(vote);
        Ok(next)
    }

    /// Removes the executed agent, records it, and applies the win check.
    pub fn resolve_elimination(&self, target: AgentId) -> Result<GameState, GameError> {
        self.ensure_ongoing()?;
        if !self.is_alive(target) {
            return Err(GameError::NotAlive(target));
        }
        let mut next = self.clone();
        next.alive.remove(&target);
        next.executions.push(ExecutionRecord { day: self.day, target });
        next.status = next.check_win();
        if next.status == GameStatus::Ongoing {
            next.phase = Phase::Night;
        }
        Ok(next)
    }

    /// Applies the werewolf's nightly attack. The werewolf cannot be the target.
    pub fn resolve_attack(&self, target: AgentId) -> Result<GameState, GameError> {
        self.ensure_ongoing()?;
        let wolf = self.roles.werewolf();
        if !self.is_alive(wolf) {
            return Err(GameError::NotAlive(wolf));
        }
        if !self.is_alive(target) || self.role(target) == Role::Werewolf {
            return Err(GameError::InvalidTarget(target));
        }
        let mut next = self.clone();
        next.alive.remove(&target);
        next.attacks.push(AttackRecord { day: self.day, agent: wolf, target });
        next.status = next.check_win();
        Ok(next)
    }

    /// Resolves a divination: werewolf-species iff the target is the werewolf.
    /// The possessed divines as human.
    pub fn divine(&self, target: AgentId) -> Result<(GameState, DivineRecord), GameError> {
        self.ensure_ongoing()?;
        let seer = self.roles.seer();
        if !self.is_alive(seer) {
            return Err(GameError::SeerDead);
        }
        if target == seer || !self.is_alive(target) {
            return Err(GameError::InvalidTarget(target));
        }
        let record = DivineRecord {
            day: self.day,
            agent: seer,
            target,
            result: self.role(target).species(),
        };
        let mut next = self.clone();
        next.divinations.push(record);
        Ok((next, record))
    }

    /// Moves to the next day's talk phase.
    pub fn advance_day(&self) -> Result<GameState, GameError> {
        self.ensure_ongoing()?;
        let mut next = self.clone();
        next.day += 1;
        next.phase = Phase::Talk;
        Ok(next)
    }

    pub fn begin_vote(&self) -> Result<GameState, GameError> {
        self.ensure_ongoing()?;
        let mut next = self.clone();
        next.phase = Phase::Vote;
        Ok(next)
    }

    /// Votes recorded for the given day.
    pub fn votes_for_day(&self, day: u32) -> Vec<VoteRecord> {
        self.votes.iter().filter(|v| v.day == day).copied().collect()
    }
}

/// Returns the agent with the most votes; ties are broken uniformly at random.
///
/// Requires exactly one vote per alive agent, no self-votes, and alive
/// voters/targets throughout.
pub fn tally_votes<R: Rng>(
    votes: &[VoteRecord],
    alive: &BTreeSet<AgentId>,
    rng: &mut R,
) -> Result<AgentId, GameError> {
    let mut counts: BTreeMap<AgentId, u32> = BTreeMap::new();
    let mut seen: BTreeSet<AgentId> = BTreeSet::new();
    for vote in votes {
        if vote.agent == vote.target {
            return Err(GameError::InvalidVote(format!("{} voted for itself", vote.agent)));
        }
        if !alive.contains(&vote.agent) {
            return Err(GameError::InvalidVote(format!("dead voter {}", vote.agent)));
        }
        if !alive.contains(&vote.target) {
            return Err(GameError::InvalidVote(format!("dead target {}", vote.target)));
        }
        if !seen.insert(vote.agent) {
            return Err(GameError::InvalidVote(format!("duplicate vote from {}", vote.agent)));
        }
        *counts.entry(vote.target).or_insert(0) += 1;
    }
    if let Some(&missing) = alive.iter().find(|a| !seen.contains(a)) {
        return Err(GameError::MissingVote(missing));
    }
    let max = counts.values().copied().max().ok_or_else(|| {
        GameError::InvalidVote("no votes cast".to_string())
    })?;
    let tied: Vec<AgentId> = counts
        .iter()
        .filter(|(_, &c)| c == max)
        .map(|(&a, _)| a)
        .collect();
    if tied.len() == 1 {
        Ok(tied[0])
    } else {
        Ok(tied[rng.random_range(0..tied.len())])
    }
}
