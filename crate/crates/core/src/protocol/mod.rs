//! Wire format between the orchestrator and agent clients: one JSON object
//! per line, request/reply framed, with views filtered so no agent learns a
//! role it should not know.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{
    AgentId, DivineRecord, GameState, Phase, Role, TalkContent, TalkEntry, VoteRecord, ALL_AGENTS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    Initialize,
    DailyInitialize,
    Talk,
    Vote,
    Divine,
    Attack,
    DailyFinish,
    Finish,
}

/// What one agent is allowed to see at a point in time.
///
/// `viewer_role` carries only the viewer's own role, and `divine_result` is
/// present only when the viewer is the seer; everything else is public.
#[derive(Debug, Clone, PartialEq)]
pub struct GameView {
    pub viewer: AgentId,
    pub day: u32,
    pub phase: Phase,
    pub alive: Vec<AgentId>,
    pub viewer_role: Role,
    pub talk_delta: Vec<TalkEntry>,
    pub executed: Option<AgentId>,
    pub attacked: Option<AgentId>,
    pub divine_result: Option<DivineRecord>,
    pub vote_history: Vec<VoteRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub view: GameView,
}

impl Message {
    pub fn new(kind: MessageKind, view: GameView) -> Message {
        Message { kind, view }
    }

    /// TALK expects a text reply; VOTE/DIVINE/ATTACK expect a target reply;
    /// the rest are notifications.
    pub fn response_expected(&self) -> bool {
        matches!(
            self.kind,
            MessageKind::Talk | MessageKind::Vote | MessageKind::Divine | MessageKind::Attack
        )
    }
}

/// Flat wire layout; field names and order are fixed so encoding is canonical.
#[derive(Serialize, Deserialize)]
struct WireMessage {
    kind: MessageKind,
    day: u32,
    phase: Phase,
    agent: AgentId,
    role: Role,
    alive: Vec<AgentId>,
    talk: Vec<TalkEntry>,
    executed: Option<AgentId>,
    attacked: Option<AgentId>,
    divine: Option<DivineRecord>,
    votes: Vec<VoteRecord>,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    MalformedMessage(String),
}

/// Encodes a message as one line of JSON (no interior newlines).
pub fn encode(message: &Message) -> String {
    let v = &message.view;
    let wire = WireMessage {
        kind: message.kind,
        day: v.day,
        phase: v.phase,
        agent: v.viewer,
        role: v.viewer_role,
        alive: v.alive.clone(),
        talk: v.talk_delta.clone(),
        executed: v.executed,
        attacked: v.attacked,
        divine: v.divine_result,
        votes: v.vote_history.clone(),
    };
    let line = serde_json::to_string(&wire).expect("wire message serializes");
    debug_assert!(!line.contains('\n'));
    line
}

/// Inverse of [`encode`] on its image.
pub fn decode(line: &str) -> Result<Message, ProtocolError> {
    let wire: WireMessage = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
        .map_err(|e| ProtocolError::MalformedMessage(e.to_string()))?;
    Ok(Message {
        kind: wire.kind,
        view: GameView {
            viewer: wire.agent,
            day: wire.day,
            phase: wire.phase,
            alive: wire.alive,
            viewer_role: wire.role,
            talk_delta: wire.talk,
            executed: wire.executed,
            attacked: wire.attacked,
            divine_result: wire.divine,
            vote_history: wire.votes,
        },
    })
}

/// An agent's answer to a request message.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    /// Reply to TALK: an utterance or a control token.
    Talk(TalkContent),
    /// Reply to VOTE/DIVINE/ATTACK: the chosen agent.
    Target(AgentId),
}

#[derive(Serialize, Deserialize)]
struct WireReply {
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<u8>,
}

pub fn encode_reply(reply: &Reply) -> String {
    let wire = match reply {
        Reply::Talk(content) => WireReply {
            text: Some(content.as_str().to_string()),
            target: None,
        },
        Reply::Target(agent) => WireReply {
            text: None,
            target: Some(agent.index()),
        },
    };
    serde_json::to_string(&wire).expect("wire reply serializes")
}

pub fn decode_reply(line: &str) -> Result<Reply, ProtocolError> {
    let wire: WireReply = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
        .map_err(|e| ProtocolError::MalformedMessage(e.to_string()))?;
    match (wire.text, wire.target) {
        (Some(text), None) => Ok(Reply::Talk(TalkContent::from_wire(&text))),
        (None, Some(target)) => AgentId::new(target)
            .map(Reply::Target)
            .ok_or_else(|| ProtocolError::MalformedMessage(format!("target {target} out of range"))),
        _ => Err(ProtocolError::MalformedMessage(
            "reply must carry exactly one of text/target".to_string(),
        )),
    }
}

/// Builds the viewer's filtered snapshot of the state.
///
/// Strips every role except the viewer's own; divination results are included
/// only for the seer. `talk_cursor` is how many talk entries the viewer has
/// already been sent; only the remainder is included.
pub fn filter_view(state: &GameState, viewer: AgentId, talk_cursor: usize) -> GameView {
    let seer = state.roles.seer();
    GameView {
        viewer,
        day: state.day,
        phase: state.phase,
        alive: state.alive.iter().copied().collect(),
        viewer_role: state.role(viewer),
        talk_delta: state.talks.get(talk_cursor..).unwrap_or(&[]).to_vec(),
        executed: state
            .executions
            .iter()
            .rev()
            .find(|e| e.day == state.day)
            .map(|e| e.target),
        attacked: state
            .attacks
            .iter()
            .rev()
            .find(|a| a.day + 1 == state.day)
            .map(|a| a.target),
        divine_result: if viewer == seer {
            state.divinations.last().copied()
        } else {
            None
        },
        vote_history: state.votes.clone(),
    }
}

/// Draws a random but well-formed message; used by codec tests and benches.
pub fn sample_message<R: Rng>(rng: &mut R) -> Message {
    let kinds = [
        MessageKind::Initialize,
        MessageKind::DailyInitialize,
        MessageKind::Talk,
        MessageKind::Vote,
        MessageKind::Divine,
        MessageKind::Attack,
        MessageKind::DailyFinish,
        MessageKind::Finish,
    ];
    let roles = [Role::Villager, Role::Seer, Role::Werewolf, Role::Possessed];
    let phases = [Phase::Talk, Phase::Vote, Phase::Night];
    let pick_agent = |rng: &mut R| ALL_AGENTS[rng.random_range(0..5)];
    let day = rng.random_range(0..3u32);
    let viewer = pick_agent(rng);
    let viewer_role = roles[rng.random_range(0..roles.len())];

    let mut alive: Vec<AgentId> = ALL_AGENTS
        .iter()
        .copied()
        .filter(|_| rng.random_range(0..4u8) > 0)
        .collect();
    if !alive.contains(&viewer) {
        alive.push(viewer);
        alive.sort();
    }

    let texts = [
        "Good morning, everyone.",
        "I am the seer. Agent[03] is a werewolf!",
        "Hmm... \"quotes\" and \\backslashes\\ are fine.",
        "multi\nline\nutterance",
        "Over",
        "Skip",
        "日本語の発話もそのまま通る。",
    ];
    let mut talk_delta = Vec::new();
    for turn in 0..rng.random_range(0..3u32) {
        for idx in 0..rng.random_range(1..4u32) {
            talk_delta.push(TalkEntry {
                day,
                turn,
                idx,
                agent: pick_agent(rng),
                text: TalkContent::from_wire(texts[rng.random_range(0..texts.len())]),
            });
        }
    }

    let mut vote_history = Vec::new();
    for _ in 0..rng.random_range(0..6u32) {
        let voter = pick_agent(rng);
        let mut target = pick_agent(rng);
        while target == voter {
            target = pick_agent(rng);
        }
        vote_history.push(VoteRecord { day, agent: voter, target });
    }

    let divine_result = (viewer_role == Role::Seer && rng.random_range(0..2u8) == 0).then(|| {
        DivineRecord {
            day,
            agent: viewer,
            target: pick_agent(rng),
            result: if rng.random_range(0..2u8) == 0 {
                crate::game::Species::Human
            } else {
                crate::game::Species::Werewolf
            },
        }
    });

    Message {
        kind: kinds[rng.random_range(0..kinds.len())],
        view: GameView {
            viewer,
            day,
            phase: phases[rng.random_range(0..phases.len())],
            alive,
            viewer_role,
            talk_delta,
            executed: (rng.random_range(0..3u8) == 0).then(|| pick_agent(rng)),
            attacked: (rng.random_range(0..3u8) == 0).then(|| pick_agent(rng)),
            divine_result,
            vote_history,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{assign_roles, GameStatus, RoleAssignment};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn fixed_assignment() -> RoleAssignment {
        let mapping: BTreeMap<AgentId, Role> = [
            (1, Role::Seer),
            (2, Role::Werewolf),
            (3, Role::Possessed),
            (4, Role::Villager),
            (5, Role::Villager),
        ]
        .into_iter()
        .map(|(i, r)| (AgentId::new(i).unwrap(), r))
        .collect();
        RoleAssignment::new(mapping).unwrap()
    }

    fn plain_view(viewer: u8, role: Role) -> GameView {
        GameView {
            viewer: AgentId::new(viewer).unwrap(),
            day: 0,
            phase: Phase::Talk,
            alive: ALL_AGENTS.to_vec(),
            viewer_role: role,
            talk_delta: vec![],
            executed: None,
            attacked: None,
            divine_result: None,
            vote_history: vec![],
        }
    }

    #[test]
    fn finish_line_carries_kind_and_agent() {
        let msg = Message::new(MessageKind::Finish, plain_view(3, Role::Villager));
        let line = encode(&msg);
        assert!(line.contains("\"kind\":\"FINISH\""));
        assert!(line.contains("\"agent\":3"));
    }

    #[test]
    fn villager_view_shows_only_villager_role() {
        let msg = Message::new(MessageKind::Talk, plain_view(4, Role::Villager));
        let line = encode(&msg);
        assert!(line.contains("\"role\":\"VILLAGER\""));
        for other in ["SEER", "WEREWOLF", "POSSESSED"] {
            assert!(!line.contains(other), "found {other} in {line}");
        }
    }

    #[test]
    fn round_trip_over_generated_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1_000 {
            let msg = sample_message(&mut rng);
            let line = encode(&msg);
            assert!(!line.contains('\n'));
            let back = decode(&line).unwrap();
            assert_eq!(back, msg);
            assert_eq!(encode(&back), line);
        }
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode("not json").is_err());
        assert!(decode("{}").is_err());
        let msg = Message::new(MessageKind::Talk, plain_view(1, Role::Seer));
        let bad_kind = encode(&msg).replace("TALK", "YELL");
        assert!(decode(&bad_kind).is_err());
        let missing_field = encode(&msg).replace("\"day\":0,", "");
        assert!(decode(&missing_field).is_err());
    }

    #[test]
    fn reply_round_trip() {
        for reply in [
            Reply::Talk(TalkContent::Utterance("I vote for Agent[02]".to_string())),
            Reply::Talk(TalkContent::Over),
            Reply::Talk(TalkContent::Skip),
            Reply::Target(AgentId::new(4).unwrap()),
        ] {
            let line = encode_reply(&reply);
            assert!(!line.contains('\n'));
            assert_eq!(decode_reply(&line).unwrap(), reply);
        }
        assert!(decode_reply("{\"text\":\"hi\",\"target\":2}").is_err());
        assert!(decode_reply("{\"target\":9}").is_err());
        assert!(decode_reply("{}").is_err());
    }

    #[test]
    fn filter_view_reveals_only_own_role() {
        let state = GameState::new(0, fixed_assignment());
        let wolf = AgentId::new(2).unwrap();
        let view = filter_view(&state, wolf, 0);
        assert_eq!(view.viewer_role, Role::Werewolf);
        assert_eq!(view.viewer, wolf);
        assert!(view.divine_result.is_none());
    }

    #[test]
    fn seer_sees_own_divination_after_day_zero() {
        let state = GameState::new(0, fixed_assignment());
        let (state, record) = state.divine(AgentId::new(2).unwrap()).unwrap();
        let seer_view = filter_view(&state, AgentId::new(1).unwrap(), 0);
        assert_eq!(seer_view.divine_result, Some(record));
        for other in 2..=5u8 {
            let view = filter_view(&state, AgentId::new(other).unwrap(), 0);
            assert!(view.divine_result.is_none(), "agent {other} saw a divination");
        }
    }

    #[test]
    fn talk_cursor_yields_delta_only() {
        let mut state = GameState::new(0, fixed_assignment());
        for (turn, text) in ["first", "second", "third"].iter().enumerate() {
            state = state
                .record_talk(TalkEntry {
                    day: 0,
                    turn: turn as u32,
                    idx: 0,
                    agent: AgentId::new(1).unwrap(),
                    text: TalkContent::Utterance((*text).to_string()),
                })
                .unwrap();
        }
        let view = filter_view(&state, AgentId::new(2).unwrap(), 2);
        assert_eq!(view.talk_delta.len(), 1);
        assert_eq!(view.talk_delta[0].text.as_str(), "third");
    }

    #[test]
    fn execution_and_attack_announcements() {
        let state = GameState::new(0, fixed_assignment());
        let state = state.resolve_elimination(AgentId::new(4).unwrap()).unwrap();
        assert_eq!(state.status, GameStatus::Ongoing);
        let view = filter_view(&state, AgentId::new(3).unwrap(), 0);
        assert_eq!(view.executed, Some(AgentId::new(4).unwrap()));

        // The night attack is announced the following morning.
        let state = state.resolve_attack(AgentId::new(5).unwrap()).unwrap();
        let same_day = filter_view(&state, AgentId::new(3).unwrap(), 0);
        assert_eq!(same_day.attacked, None);
        let state = state.advance_day().unwrap();
        let next_day = filter_view(&state, AgentId::new(3).unwrap(), 0);
        assert_eq!(next_day.attacked, Some(AgentId::new(5).unwrap()));
        assert_eq!(next_day.executed, None);
    }

    proptest! {
        #[test]
        fn utterances_never_break_framing(text in "\\PC*", seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut msg = sample_message(&mut rng);
            msg.view.talk_delta.push(TalkEntry {
                day: msg.view.day,
                turn: 99,
                idx: 0,
                agent: ALL_AGENTS[0],
                text: TalkContent::Utterance(text),
            });
            let line = encode(&msg);
            prop_assert!(!line.contains('\n'));
            prop_assert_eq!(decode(&line).unwrap(), msg);
        }

        #[test]
        fn assigned_roles_survive_filtering(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = GameState::new(seed, assign_roles(&mut rng));
            for viewer in ALL_AGENTS {
                let view = filter_view(&state, viewer, 0);
                prop_assert_eq!(view.viewer_role, state.role(viewer));
            }
        }
    }
}
