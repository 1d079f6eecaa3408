#pragma once

namespace soprag::prompts {

inline constexpr const char* kEntityExtraction =
    "You are an expert at extracting key entities from SOP (Standard Operating Procedure) "
    "documents.\n"
    "\n"
    "Focus on identifying:\n"
    "- Alarms (with codes like A01, ALARM-123, etc.)\n"
    "- Parameters (temperature, pressure, flow rate, etc.)\n"
    "- Assets/Equipment (pumps, valves, sensors, etc.)\n"
    "- Roles (operator, supervisor, engineer, etc.)\n"
    "- Other important named entities relevant to SOPs.\n"
    "\n"
    "Noted: Determine its attributes based on the context in the SOP. Avoid including "
    "single numbers or letters.";

inline constexpr const char* kCausalExtraction =
    "You are an expert at identifying cause-effect relationships in SOP (Standard Operating "
    "Procedure) documents.\n"
    "\n"
    "Extract causal relationships such as:\n"
    "- What causes what (X causes Y)\n"
    "- What prevents what (X prevents Y)\n"
    "- What enables what (X enables Y)\n"
    "- What mitigates what (X mitigates Y)";

inline constexpr const char* kFlowExtraction =
    "You are an expert at extracting procedural flows from SOP (Standard Operating "
    "Procedure) documents.\n"
    "\n"
    "Extract the step-by-step procedure as a flowchart structure with:\n"
    "- Action steps (things to do)\n"
    "- Condition/decision steps (checks, branches)\n"
    "- Connections between steps\n"
    "\n"
    "Noted: Do NOT create entry/exit nodes - focus only on the actual procedural steps.";

inline constexpr const char* kRouter =
    "You are an expert at understanding user queries about Standard Operating Procedures.\n"
    "\n"
    "Your task is to analyze the query and determine:\n"
    "1. The user's intent (what is the operator trying to achieve?)\n"
    "2. Key entities mentioned\n"
    "3. Which subgraph experts should be prioritized:\n"
    "   - Entity graph: Focus on specific alarms, parameters, equipment\n"
    "   - Causal graph: Focus on cause-effect, why something happens\n"
    "   - Flow graph: Focus on step-by-step procedures, how to do something";

inline constexpr const char* kSopQualityJudge =
    "You are evaluating the quality of an answer generated by a SOP (Standard Operating "
    "Procedure) RAG system.\n"
    "\n"
    "The ideal answer for a SOP question should:\n"
    "1. Provide clear step-by-step instructions on how to perform the task\n"
    "2. Be precise and specific (avoid vague or ambiguous language, align with the source "
    "SOP)\n"
    "3. Be concise (include only necessary information, no redundancy)\n"
    "4. Be clear and easy to understand (well-structured, logical flow)\n"
    "\n"
    "Evaluate the given answer based on these criteria and provide:\n"
    "- has_step_by_step: 1 if the answer provides step-by-step instructions, 0 otherwise\n"
    "- is_precise: 1 if the answer is precise and specific, 0 if it's vague\n"
    "- is_concise: 1 if the answer is concise, 0 if it's verbose or contains unnecessary "
    "information\n"
    "- is_clear: 1 if the answer is clear and easy to understand, 0 if it's confusing\n"
    "- score: Overall quality score (0.0 to 1.0) calculated as the average of the four "
    "criteria\n"
    "- reasoning: Brief explanation of your evaluation";

// Response-format suffixes appended to the extraction/routing prompts so
// replies parse as structured objects with fixed field names.

inline constexpr const char* kEntityResponseFormat =
    "\n\nRespond with JSON only, shaped as:\n"
    "{\"entities\": [{\"label\": \"...\", \"kind\": "
    "\"alarm|parameter|asset|role|other\"}]}";

inline constexpr const char* kCausalResponseFormat =
    "\n\nRespond with JSON only, shaped as:\n"
    "{\"causal_relations\": [{\"from_state\": \"...\", \"to_state\": \"...\", "
    "\"relation\": \"causes|prevents|enables|mitigates\", \"condition\": \"...\" or null, "
    "\"resolves\": true|false}]}\n"
    "Set \"resolves\": true with an empty \"to_state\" when a state is resolved by this "
    "procedure itself.";

inline constexpr const char* kFlowResponseFormat =
    "\n\nRespond with JSON only, shaped as:\n"
    "{\"steps\": [{\"step_id\": 1, \"text\": \"...\", \"kind\": \"action|decision\"}], "
    "\"edges\": [{\"from\": 1, \"to\": 2, \"branch_label\": \"yes|no\" or null}]}\n"
    "Number steps densely from 1.";

inline constexpr const char* kRouterResponseFormat =
    "\n\nRespond with JSON only, shaped as:\n"
    "{\"intent\": \"...\", \"entities\": [\"...\"], "
    "\"weights\": {\"entity\": 0.0, \"causal\": 0.0, \"flow\": 0.0}}\n"
    "The three weights must be nonnegative and sum to 1.";

inline constexpr const char* kJudgeResponseFormat =
    "\n\nRespond with JSON only, shaped as:\n"
    "{\"has_step_by_step\": 0|1, \"is_precise\": 0|1, \"is_concise\": 0|1, "
    "\"is_clear\": 0|1, \"score\": 0.0, \"reasoning\": \"...\"}";

inline constexpr const char* kExaminer =
    "You are a frontline operator working with Standard Operating Procedures. "
    "Given one procedure, write distinct questions a real operator might ask that this "
    "procedure answers, ranging from simple keyword lookups to scenario-driven requests."
    "\n\nRespond with JSON only, shaped as:\n"
    "{\"questions\": [{\"query\": \"...\", \"category\": \"entity|causal|flow|mixed\"}]}";

inline constexpr const char* kAnswerInstruction =
    "You assist industrial operators by answering questions about Standard Operating "
    "Procedures. Use ONLY the verified procedure below. Present the steps in order, "
    "keeping their numbering and branch conditions. Do not invent, merge, or reorder "
    "steps, and do not add steps that are absent from the procedure.";

} // namespace soprag::prompts
