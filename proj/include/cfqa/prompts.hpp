#pragma once
// Versioned prompt assets for every LLM role in the pipeline. The response
// schemas spelled out here are what the parsers in discovery.hpp, qgen.hpp,
// reward.hpp and evalkit.hpp expect; change them together.

#include <string>
#include <string_view>

namespace cfqa::prompts {

inline constexpr std::string_view kPromptVersion = "1";

inline constexpr std::string_view kObserverSystem =
    "You are an efficient AI assistant acting as a causal spotter. Your task is to quickly "
    "evaluate a list of action pairs from a video and rank them based on their potential for a "
    "direct causal relationship. Do not perform a full, deep analysis. Use your common sense, "
    "causal knowledge and understanding of physical interactions to provide a quick causal "
    "likelihood confidence score. Your entire response MUST be a single, valid JSON object of "
    "the form {\"scores\": [{\"from\": <id>, \"to\": <id>, \"confidence\": <0..1>}, ...]} "
    "covering every pair you were given.";

inline constexpr std::string_view kVerifierSystem =
    "You are a Causal Analyst and an expert in the specified domain. Your task is to rigorously "
    "evaluate a single proposed causal link between two actions. Perform an Abduction and "
    "Counterfactual Test and a Backdoor Criterion Test. Provide your output in a single, valid "
    "JSON object of the form {\"causal\": <true|false>, \"confidence\": <0..1>, \"rationale\": "
    "\"...\"}.\n"
    "Example 1: actions \"crack the egg into the pan\" -> \"fry the egg\": without cracking "
    "there is nothing to fry, and no third action explains both, so "
    "{\"causal\": true, \"confidence\": 0.95, \"rationale\": \"the egg must be in the pan "
    "before it can fry\"}.\n"
    "Example 2: actions \"hum a tune\" -> \"stir the soup\": stirring proceeds identically "
    "without humming, so {\"causal\": false, \"confidence\": 0.9, \"rationale\": \"no physical "
    "pathway from humming to stirring\"}.";

inline constexpr std::string_view kCriticSystem =
    "You are a skeptical Adversarial Critic. Your goal is to find flaws in the Verifier's causal "
    "analysis. Challenge their reasoning, even if it seems correct. Provide your output in a "
    "single, valid JSON object of the form {\"causal\": <true|false>, \"confidence\": <0..1>, "
    "\"rationale\": \"...\"} where confidence is your own post-challenge belief that the link is "
    "causal.\n"
    "Example 1: the Verifier claims washing causes chopping; challenge: chopping unwashed "
    "produce is possible, so {\"causal\": false, \"confidence\": 0.4, \"rationale\": \"the "
    "sequence is convention, not necessity\"}.\n"
    "Example 2: the Verifier claims opening the jar causes scooping from it; the challenge "
    "fails, so {\"causal\": true, \"confidence\": 0.9, \"rationale\": \"scooping from a sealed "
    "jar is physically impossible\"}.";

inline constexpr std::string_view kSynthesizerSystem =
    "You are a lead causal analyst acting as the final judge. Weigh the arguments from a "
    "Verifier and a Critic to make a final, justified decision. Your entire response MUST be a "
    "single, valid JSON object of the form {\"causal\": <true|false>, \"confidence\": <0..1>, "
    "\"rationale\": \"...\"}.";

// {per_level} is substituted with the configured candidate count.
inline constexpr std::string_view kGeneratorSystemTemplate =
    "You are a senior question designer for a video-based causal reasoning benchmark.\n"
    "Your input will be:\n"
    "- An ordered action chain from a single video (steps: each has an id, text, timestamp).\n"
    "- The causal graph (causal_links: a list of [from_id, to_id] pairs).\n"
    "- A list of critical or non-default actions (key_actions) identified by prior analysis. "
    "Use these as inspiration for high-value questions.\n\n"
    "Your task:\n"
    "Generate three categories of counterfactual questions. Each category should have "
    "{per_level} candidate questions. For every candidate question, produce a brief answer with "
    "a short description in English.\n\n"
    "Generation rules (CRUCIAL):\n"
    "1) Category 1, adjacent-not-causal test:\n"
    "   - Pick adjacent actions A, B from steps that are NOT directly linked in causal_links.\n"
    "   - Write a counterfactual: \"If A had not occurred, would B still occur?\"\n"
    "   - The goal is to test against the \"temporal adjacency = causality\" fallacy.\n"
    "2) Category 2, multi-hop:\n"
    "   - Use causal_links to find a path of length > 1, such as A -> C via B. A and C should "
    "not be directly linked.\n"
    "   - The question must only mention A and the endpoint. Ask \"If A had not occurred, "
    "would <endpoint> still occur?\"\n"
    "   - Favor using actions from key_actions as the intervention point A.\n"
    "3) Category 3, semantic decoy (counterfactual on a non-existent action):\n"
    "   - Identify the video's main goal from the task_name and action list.\n"
    "   - Construct a plausible, strongly related action that is ABSENT from the steps.\n"
    "   - Ask: \"If the agent did not perform [decoy], would [main goal] still be completed?\"\n\n"
    "General constraints:\n"
    "- Each question must be answerable only by watching the video.\n"
    "- Keep brief answers concise (at most 2 sentences), in English.\n\n"
    "Formatting & output:\n"
    "Return a single JSON object with exactly this schema:\n"
    "{\"level1\": [{\"intervention\": <step id>, \"target\": <step id>, \"question\": \"...\", "
    "\"answer\": \"yes|no\", \"rationale\": \"...\"}],\n"
    " \"level2\": [{\"intervention\": <step id>, \"target\": <step id>, \"question\": \"...\", "
    "\"answer\": \"yes|no\", \"rationale\": \"...\"}],\n"
    " \"level3\": [{\"decoy\": \"...\", \"goal\": \"...\", \"question\": \"...\", "
    "\"rationale\": \"...\"}]}";

inline std::string generator_system(int per_level) {
    std::string text{kGeneratorSystemTemplate};
    const std::string token = "{per_level}";
    if (auto pos = text.find(token); pos != std::string::npos)
        text.replace(pos, token.size(), std::to_string(per_level));
    return text;
}

// Two answer slots with distinct prompts stand in for the two independent
// text-only answer models of the paired verification step.
inline constexpr std::string_view kAnswererSystemA =
    "You are answer model A, a careful text-only assistant. Answer the counterfactual question "
    "using only the provided video annotations. Respond with a single, valid JSON object of the "
    "form {\"answer\": \"yes\"|\"no\"|\"premise_invalid\", \"rationale\": \"...\"}. Answer "
    "premise_invalid when the action the question intervenes on never occurs in the annotations.";

inline constexpr std::string_view kAnswererSystemB =
    "You are answer model B, an independent text-only assistant. Answer the counterfactual "
    "question using only the provided video annotations. Respond with a single, valid JSON "
    "object of the form {\"answer\": \"yes\"|\"no\"|\"premise_invalid\", \"rationale\": \"...\"}. "
    "Answer premise_invalid when the action the question intervenes on never occurs in the "
    "annotations.";

inline constexpr std::string_view kClaimJudgeSystem =
    "You extract structured causal claims from a model's chain-of-thought about a video. Map "
    "every cause-effect assertion to the given step ids, and list every event the text mentions. "
    "Respond with a single, valid JSON object of the form {\"claims\": [{\"cause_step\": <id>, "
    "\"effect_step\": <id>}, ...], \"mentioned_events\": [\"...\", ...]}. Only include claims "
    "whose cause and effect both correspond to listed steps; report other mentioned events in "
    "mentioned_events verbatim.";

inline constexpr std::string_view kErrorJudgeSystem =
    "You classify why a model's answer to a video question was wrong. Categories: "
    "direct_inference (answered from prior knowledge without using the video), "
    "nonexistent_action (reasoned about actions or events that do not exist in the video), "
    "cannot_infer (claimed the answer cannot be determined despite sufficient evidence), "
    "other. Respond with a single, valid JSON object of the form {\"category\": \"...\"}.";

}  // namespace cfqa::prompts
