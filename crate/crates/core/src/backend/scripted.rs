//! Deterministic rule-based completions keyed off the directive markers the
//! prompt builder embeds. Enough canned behavior to drive full legal matches
//! offline: claims, counter-claims, persuasion, vote declarations, and valid
//! target picks.

use std::sync::LazyLock;
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use super::{Backend, BackendError, CompletionRequest, Purpose};

static AGENT_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Agent\[(\d{2})\]").unwrap());
static CANDIDATES_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^Candidates:(.*)$").unwrap());
static DAY_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Today is Day (\d+)").unwrap());
static DECIDED_VOTE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"You have decided to vote for Agent\[(\d{2})\]").unwrap());
static DIVINE_PLAN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Tonight you will divine Agent\[(\d{2})\]").unwrap());
static REPORT_DIRECTIVE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"share your divination result: Agent\[(\d{2})\] is a (HUMAN|WEREWOLF)").unwrap()
});
static FAKE_CLAIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"claim to be the seer and report that Agent\[(\d{2})\] is a WEREWOLF").unwrap()
});
static PERSUADE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"persuade the other players to vote for Agent\[(\d{2})\]").unwrap()
});
static COUNTER_CLAIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"counter-claim: Agent\[(\d{2})\] is falsely claiming to be the seer").unwrap()
});
static NUMBERED_OPTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^(\d+)\. ").unwrap());
static SPEAKER_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^Agent\[(\d{2})\]: (.*)$").unwrap());
static WOLF_REPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Agent\[(\d{2})\] is a WEREWOLF").unwrap());
static HUMAN_REPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Agent\[(\d{2})\] is a HUMAN").unwrap());
static VOTE_DECLARED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"I will vote for Agent\[(\d{2})\]").unwrap());
static CHALLENGED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Agent\[(\d{2})\]'s claim is a lie").unwrap());

/// Speaking style inferred from the persona section of the prompt.
#[derive(Clone, Copy)]
enum Voice {
    Regal,
    Energetic,
    Hesitant,
    Plain,
}

fn voice_of(prompt: &str) -> Voice {
    if prompt.contains("King") {
        Voice::Regal
    } else if prompt.contains("soccer") {
        Voice::Energetic
    } else if prompt.contains("stammer") {
        Voice::Hesitant
    } else {
        Voice::Plain
    }
}

fn styled(voice: Voice, plain: &str) -> String {
    match voice {
        Voice::Regal => format!("Hear me. {plain}"),
        Voice::Energetic => format!("Yo! {plain}"),
        Voice::Hesitant => format!("U-um... {plain}"),
        Voice::Plain => plain.to_string(),
    }
}

struct Inner {
    rng: ChaCha8Rng,
    counter: u64,
}

/// Per-agent deterministic backend. Each agent owns one instance so the call
/// counter stays per-agent even when agents run concurrently.
pub struct ScriptedBackend {
    inner: Mutex<Inner>,
}

impl ScriptedBackend {
    pub fn new(seed: u64, agent_seat: u8) -> ScriptedBackend {
        let mixed = seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(u64::from(agent_seat));
        ScriptedBackend {
            inner: Mutex::new(Inner {
                rng: ChaCha8Rng::seed_from_u64(mixed),
                counter: 0,
            }),
        }
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let mut inner = self.inner.lock().expect("scripted backend lock");
        inner.counter += 1;
        let counter = inner.counter;
        Ok(scripted_policy(request, &mut inner.rng, counter))
    }
}

/// The canned policy: inspects the prompt's markers and produces role- and
/// phase-appropriate text.
pub fn scripted_policy<R: Rng>(request: &CompletionRequest, rng: &mut R, counter: u64) -> String {
    let prompt = &request.prompt_text;
    match request.purpose {
        Purpose::Summary => summarize(prompt),
        Purpose::TargetDecision => decide_target_text(prompt, rng),
        Purpose::AttackDecision => decide_attack_text(prompt, rng),
        Purpose::VoteDeclaration => declare(prompt),
        Purpose::Talk => talk(prompt, rng, counter),
    }
}

fn parse_ids(captures: &Regex, text: &str) -> Vec<u8> {
    captures
        .captures_iter(text)
        .filter_map(|c| c[1].parse::<u8>().ok())
        .collect()
}

fn candidates(prompt: &str) -> Vec<u8> {
    CANDIDATES_LINE
        .captures(prompt)
        .map(|c| parse_ids(&AGENT_TAG, &c[1]))
        .unwrap_or_default()
}

fn day_of(prompt: &str) -> u32 {
    DAY_LINE
        .captures(prompt)
        .and_then(|c| c[1].parse().ok())
        .unwrap_or(0)
}

/// Per-speaker claim distillation of "Agent[0N]: text" dialogue lines.
fn summarize(prompt: &str) -> String {
    let mut speakers: Vec<u8> = Vec::new();
    let mut texts: std::collections::BTreeMap<u8, String> = std::collections::BTreeMap::new();
    for cap in SPEAKER_LINE.captures_iter(prompt) {
        if let Ok(id) = cap[1].parse::<u8>() {
            if (1..=5).contains(&id) {
                if !speakers.contains(&id) {
                    speakers.push(id);
                }
                let slot = texts.entry(id).or_default();
                slot.push_str(&cap[2]);
                slot.push(' ');
            }
        }
    }
    speakers.sort_unstable();
    let mut out = String::new();
    for id in speakers {
        let said = &texts[&id];
        let mut claims: Vec<String> = Vec::new();
        if said.contains("I am the seer") {
            claims.push("claimed to be the seer".to_string());
        }
        if said.contains("I am the possessed") {
            claims.push("came out as the possessed".to_string());
        }
        for c in WOLF_REPORT.captures_iter(said) {
            claims.push(format!("reported Agent[{}] as a WEREWOLF", &c[1]));
        }
        for c in HUMAN_REPORT.captures_iter(said) {
            claims.push(format!("reported Agent[{}] as a HUMAN", &c[1]));
        }
        for c in CHALLENGED.captures_iter(said) {
            claims.push(format!("challenged Agent[{}]'s seer claim", &c[1]));
        }
        if let Some(c) = VOTE_DECLARED.captures_iter(said).last() {
            claims.push(format!("declared a vote for Agent[{}]", &c[1]));
        }
        if claims.is_empty() {
            claims.push("greeted the group and made no notable claims".to_string());
        }
        out.push_str(&format!("Agent[{id:02}]: {}\n", claims.join("; ")));
    }
    if out.is_empty() {
        out.push_str("No one spoke.\n");
    }
    out
}

/// Chain-of-thought style answer; the final line names the pick so the
/// last-match extraction lands on it.
fn decide_target_text<R: Rng>(prompt: &str, rng: &mut R) -> String {
    let cands = candidates(prompt);
    if cands.is_empty() {
        return "I cannot find any candidates.".to_string();
    }
    let pick = preferred_target(prompt, &cands, rng);
    let day = day_of(prompt);
    let others: Vec<String> = cands
        .iter()
        .filter(|&&c| c != pick)
        .map(|c| format!("Agent[{c:02}]"))
        .collect();
    let survey = if others.is_empty() {
        "Only one name keeps coming up.".to_string()
    } else {
        format!("{} also drew attention today.", others.join(" and "))
    };
    format!(
        "Step 1: review the day {day} claims and how each player behaved. \
         Step 2: weigh who benefits from the current accusations. {survey} \
         Step 3: settle on the most consistent explanation. \
         Therefore, my choice is Agent[{pick:02}]."
    )
}

/// Prefer candidates accused of being a werewolf in the provided context;
/// fall back to a seeded pick.
fn preferred_target<R: Rng>(prompt: &str, cands: &[u8], rng: &mut R) -> u8 {
    let mut accused: Vec<u8> = Vec::new();
    for line in prompt.lines() {
        if line.to_ascii_lowercase().contains("werewolf") {
            for id in parse_ids(&AGENT_TAG, line) {
                if cands.contains(&id) {
                    accused.push(id);
                }
            }
        }
    }
    if prompt.contains("most likely the true seer") {
        // Seer inference: look for an attributed seer claim instead.
        let claimants = seer_claimants(prompt);
        let viable: Vec<u8> = claimants.into_iter().filter(|c| cands.contains(c)).collect();
        if !viable.is_empty() {
            return viable[rng.random_range(0..viable.len())];
        }
        return cands[rng.random_range(0..cands.len())];
    }
    if accused.is_empty() {
        cands[rng.random_range(0..cands.len())]
    } else {
        let mut counts = [0u32; 6];
        for a in &accused {
            counts[*a as usize] += 1;
        }
        let best = *counts.iter().max().unwrap();
        let top: Vec<u8> = cands
            .iter()
            .copied()
            .filter(|&c| counts[c as usize] == best)
            .collect();
        top[rng.random_range(0..top.len())]
    }
}

fn seer_claimants(prompt: &str) -> Vec<u8> {
    let mut out = Vec::new();
    for cap in SPEAKER_LINE.captures_iter(prompt) {
        let text = &cap[2];
        if text.contains("I am the seer") || text.contains("claimed to be the seer") {
            if let Ok(id) = cap[1].parse::<u8>() {
                if !out.contains(&id) {
                    out.push(id);
                }
            }
        }
    }
    out
}

/// Name-only completion; attacks a seer claimant when one is in range.
fn decide_attack_text<R: Rng>(prompt: &str, rng: &mut R) -> String {
    let cands = candidates(prompt);
    if cands.is_empty() {
        return "nobody".to_string();
    }
    let claimants: Vec<u8> = seer_claimants(prompt)
        .into_iter()
        .filter(|c| cands.contains(c))
        .collect();
    let pick = if claimants.is_empty() {
        cands[rng.random_range(0..cands.len())]
    } else {
        claimants[rng.random_range(0..claimants.len())]
    };
    format!("Agent[{pick:02}]")
}

fn declare(prompt: &str) -> String {
    let voice = voice_of(prompt);
    let vote = DECIDED_VOTE
        .captures(prompt)
        .and_then(|c| c[1].parse::<u8>().ok());
    let divine = DIVINE_PLAN
        .captures(prompt)
        .and_then(|c| c[1].parse::<u8>().ok());
    match (vote, divine) {
        (Some(v), Some(d)) => styled(
            voice,
            &format!(
                "Before the vote, know my plan: tonight I will divine Agent[{d:02}]. \
                 As for today, I will vote for Agent[{v:02}]!"
            ),
        ),
        (Some(v), None) => styled(voice, &format!("My mind is made up. I will vote for Agent[{v:02}]!")),
        _ => styled(voice, "I abstain from declaring."),
    }
}

fn talk<R: Rng>(prompt: &str, rng: &mut R, counter: u64) -> String {
    let voice = voice_of(prompt);
    let day = day_of(prompt);

    if prompt.contains("Reply with only the number of your chosen strategy") {
        let count = NUMBERED_OPTION.captures_iter(prompt).count().max(1);
        return format!("{}", rng.random_range(0..count) + 1);
    }
    if prompt.contains("Write brief reasoning") {
        return format!(
            "Reasoning: the day {day} claims pull in different directions and somebody is lying. \
             Strategy: press the role claimants for detail and watch who dodges."
        );
    }
    if let Some(c) = REPORT_DIRECTIVE.captures(prompt) {
        let target: u8 = c[1].parse().unwrap_or(1);
        let species = &c[2];
        return styled(
            voice,
            &format!(
                "I am the seer. Last night I divined Agent[{target:02}], \
                 and the result is clear: Agent[{target:02}] is a {species}."
            ),
        );
    }
    if let Some(c) = FAKE_CLAIM.captures(prompt) {
        let target: u8 = c[1].parse().unwrap_or(1);
        return styled(
            voice,
            &format!(
                "Listen up — I am the seer. My divination last night exposed the truth: \
                 Agent[{target:02}] is a WEREWOLF."
            ),
        );
    }
    if let Some(c) = PERSUADE.captures(prompt) {
        let target: u8 = c[1].parse().unwrap_or(1);
        return styled(
            voice,
            &format!(
                "Think it through with me: everything lines up against Agent[{target:02}]. \
                 We should all vote for Agent[{target:02}] today."
            ),
        );
    }
    if let Some(c) = COUNTER_CLAIM.captures(prompt) {
        let rival: u8 = c[1].parse().unwrap_or(1);
        return styled(
            voice,
            &format!(
                "Agent[{rival:02}]'s claim is a lie. I am the seer — the one true seer — \
                 and I stand by my result."
            ),
        );
    }
    if prompt.contains("reveal that you are the possessed") {
        return styled(
            voice,
            "I have a confession: I am the possessed. Werewolf, you can show yourself now — \
             if the two of us vote together, the game is ours.",
        );
    }
    if day == 0 {
        let greetings = [
            "Good day to you all. Let us have a fair and spirited game.",
            "Morning, everyone! Looking forward to playing with you.",
            "H-hello... nice to meet you all, I guess.",
            "Greetings. May the honest among us prevail.",
        ];
        return styled(voice, greetings[rng.random_range(0..greetings.len())]);
    }
    let lines = [
        format!("So far on day {day}, the claims do not add up, and I want to hear more from the quiet ones."),
        format!("Day {day} thought: whoever is pushing hardest might be steering us somewhere."),
        format!("Let us compare the stories from day {day} carefully before we all commit to a vote."),
        format!("I keep coming back to the divination talk from day {day}; someone is not telling the truth."),
    ];
    let base = &lines[(counter as usize + rng.random_range(0..lines.len())) % lines.len()];
    styled(voice, base)
}
