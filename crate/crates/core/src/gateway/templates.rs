//! Built-in prompt templates for the six LLM roles.
//!
//! Placeholders use `{Name}` syntax and are substituted in a single pass at
//! request time; an unbound placeholder is a [`crate::Error::MissingBinding`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// The six orchestrated roles.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum RoleId {
    RolePlay,
    Induction,
    Preferred,
    Rejected,
    Judge,
    PersonaGen,
}

impl RoleId {
    pub const ALL: [RoleId; 6] = [
        RoleId::RolePlay,
        RoleId::Induction,
        RoleId::Preferred,
        RoleId::Rejected,
        RoleId::Judge,
        RoleId::PersonaGen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleId::RolePlay => "role_play",
            RoleId::Induction => "induction",
            RoleId::Preferred => "preferred",
            RoleId::Rejected => "rejected",
            RoleId::Judge => "judge",
            RoleId::PersonaGen => "persona_gen",
        }
    }
}

impl std::fmt::Display for RoleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sampling parameters attached to a role template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl SamplingParams {
    pub fn new(temperature: f64, max_tokens: u32) -> Self {
        Self {
            temperature,
            max_tokens,
        }
    }
}

/// A role's prompt: a system prompt plus an optional template for the final
/// user message of the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleTemplate {
    pub role_id: RoleId,
    pub system_prompt: String,
    /// Rendered and appended as the last user message when present.
    pub user_template: Option<String>,
    pub sampling: SamplingParams,
}

/// Placeholder bindings, keyed by placeholder name.
pub type Bindings = BTreeMap<String, String>;

/// System prompt for plain chatbot roles (preferred, rejected, evaluated
/// endpoints) and for exported training contexts.
pub const NEUTRAL_SYSTEM_PROMPT: &str = "You are a helpful assistant chatting with a user.";

pub const ROLE_PLAY_SYSTEM_PROMPT: &str = "\
Your task is to play the role of a person with the following profile and personalities traits and chat with a chatbot:
Profile: {User Profile}
Personalities: {User Personalities}
Please ignore the gender pronouns in the personalities and use the correct pronouns based on the given profile.
Please follow the requirements:
1. You should determine the topic of conversation based on the given profile. You should determine the conversational styles based on the given personalities.
2. IMPORTANTLY!!! You should only reveal partial information about your profile in each round of conversation instead of disclosing all the provided information at once.
3. Keep in mind that you are chatting with a friend instead of a robot or assistant. So do not always seek for advice or recommendations.
4. Do not include any analysis about how you role-play this user. Only output your messages content.
Now, initiate the conversation with the chatbot in whatever way you like. Please always be concise in your questions and responses and remember that you are pretending to be a human now, so you should generate human-like language.";

pub const INDUCTION_SYSTEM_PROMPT: &str = "\
Analyze a conversation (presented below with 'A' as the user and 'B' as the interaction partner) to identify aspects of the user's profile and personality traits that have been revealed in the conversation:
{Conversation History}
Review the user's profile and personality descriptions below.
Profile: {User Profile}
Personalities: {User Personalities}
Focus specifically on the information mentioned by \"A\" to identify the elements of the profile and personalities that have been revealed. Use direct evidence from the user's statements to deduce disclosed details about their profile and personality. If personality traits are not evident, output 'None' for personalities. If the user's gender is unclear, use 'He/She'.
Provide your findings in the following format without additional analysis:
Profile: [inferred user profile details]
Personalities: [inferred user personality traits]
Important!!! Please make conservative judgments, and only infer information that is obvious from the conversation. You should simply extract partial information in the original sentence structure or language instead of rephrasing it.";

/// Appended to the user message handed to the preferred role.
pub const PREFERRED_USER_TEMPLATE: &str = "\
{User Message} (Hint: Below is the known user profile and personalities based on the conversation history: {Inferred Persona}. You should implicitly infer the user's preferences about the topic to discuss, the conversation style, the way others respond to themselves, etc based on these given profile and personalities. Your task is to generate a response that is tailored to the potential user preferences. Do not include any analysis process and the user preferences you inferred in your response. Just generate a response that is tailored to the user's potential preferences. Please always be concise in your questions and responses.)";

pub const JUDGE_SYSTEM_PROMPT: &str = "\
You will be given a user's profile, personality, and a message that the user sent to a chatbot. You will also be given a response from a model. Your task is to carefully evaluate how much the response is tailored to the user's potential preferences based on the user's profile and personality.
Here is the user's profile: {User Profile}
Here is the user's personalities: {User Personalities}
Here is the user's message: {User Message}
Here is the model's response: {Model's Response}
You should follow the following criteria for evaluation:
1. Is the conversational style of the message tailored to the user's personality?
2. Is the content or topic relevant to the user's profile?
3. Is the response human-like, engaging, and concise?
You should give a score to the response ranging from 1-5, where 1 represents the least tailored to the user and 5 represents the most user-aligned. Please do not include any analysis about how you evaluate the responses. Please only output the score from 1-5 without giving any explanations.";

pub const PROFILE_GEN_SYSTEM_PROMPT: &str = "\
Your task is to generate {Batch Count} different user profiles. Something you can consider includes but not limited to age range, occupation, hobbies, family structure, educational background, or any other fun facts. Note that you don't need to include all of these details for each persona. You can use any kinds of combination and please think about other aspects other than these.
You should include something that can be elicited from a daily and natural conversations. You should not include too much information about this person's work content and you should not give any description about the user's personality traits. Focus more on some daily, objective facts about the person him/herself. Each profile should contain around 8-10 distinct facts about the person. Here are some examples:
{Seed Examples}
You should only output the personas in plain text format. Separate each user profile with a new line and do not include a number for each profile. IMPORTANT: Try to avoid generating similar profiles and avoid always describing the same type of topic for every persona. You should be creative, diverse and comprehensive!!";

pub const PERSONALITY_GEN_SYSTEM_PROMPT: &str = "\
Your task is to generate {Batch Count} different descriptions of a user's personality traits such as extroverted or introverted. You should include something that can be elicited from a daily and natural conversations. Each description should contain around 8-10 personality traits about the person. Here are some examples:
{Seed Examples}
You should only output the personality descriptions in plain text format. Separate each description with a new line and do not include a number for each. IMPORTANT: You should not include any other content that is beyond personality traits, such as occupation, family structure, etc. Try to avoid generating similar personality descriptions. You should be creative, diverse and comprehensive!!";

/// Default registry: generation roles sample at temperature 1.0, the
/// analysis roles (induction, judge) at 0.0.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<RoleId, RoleTemplate>,
}

impl TemplateRegistry {
    pub fn defaults() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert(
            RoleId::RolePlay,
            RoleTemplate {
                role_id: RoleId::RolePlay,
                system_prompt: ROLE_PLAY_SYSTEM_PROMPT.to_string(),
                user_template: None,
                sampling: SamplingParams::new(1.0, 1024),
            },
        );
        templates.insert(
            RoleId::Induction,
            RoleTemplate {
                role_id: RoleId::Induction,
                system_prompt: INDUCTION_SYSTEM_PROMPT.to_string(),
                user_template: None,
                sampling: SamplingParams::new(0.0, 512),
            },
        );
        templates.insert(
            RoleId::Preferred,
            RoleTemplate {
                role_id: RoleId::Preferred,
                system_prompt: NEUTRAL_SYSTEM_PROMPT.to_string(),
                user_template: Some(PREFERRED_USER_TEMPLATE.to_string()),
                sampling: SamplingParams::new(1.0, 1024),
            },
        );
        templates.insert(
            RoleId::Rejected,
            RoleTemplate {
                role_id: RoleId::Rejected,
                system_prompt: NEUTRAL_SYSTEM_PROMPT.to_string(),
                user_template: Some("{User Message}".to_string()),
                sampling: SamplingParams::new(1.0, 1024),
            },
        );
        templates.insert(
            RoleId::Judge,
            RoleTemplate {
                role_id: RoleId::Judge,
                system_prompt: JUDGE_SYSTEM_PROMPT.to_string(),
                user_template: None,
                sampling: SamplingParams::new(0.0, 8),
            },
        );
        templates.insert(
            RoleId::PersonaGen,
            RoleTemplate {
                role_id: RoleId::PersonaGen,
                system_prompt: PROFILE_GEN_SYSTEM_PROMPT.to_string(),
                user_template: None,
                sampling: SamplingParams::new(1.0, 2048),
            },
        );
        Self { templates }
    }

    pub fn get(&self, role: RoleId) -> Option<&RoleTemplate> {
        self.templates.get(&role)
    }

    pub fn set(&mut self, template: RoleTemplate) {
        self.templates.insert(template.role_id, template);
    }

    /// The persona-generation template for the given pool kind. Both kinds
    /// run under the `persona_gen` role and share its sampling parameters.
    pub fn persona_generation(&self, personality: bool) -> RoleTemplate {
        let base = self
            .get(RoleId::PersonaGen)
            .expect("persona_gen always registered")
            .clone();
        if personality {
            RoleTemplate {
                system_prompt: PERSONALITY_GEN_SYSTEM_PROMPT.to_string(),
                ..base
            }
        } else {
            base
        }
    }
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        Self::defaults()
    }
}
