#pragma once

#include <string>
#include <vector>

#include "soprag/knowledge_base.hpp"

namespace soprag {

class ChatClient;

/// A flow graph rendered as ordered, branch-annotated step lines for prompt
/// context. Every step appears on exactly one line.
struct LinearizedProcedure {
    std::string sop_id;
    std::string title;
    std::vector<std::string> lines;
};

/// Acyclic flows emit a stable topological order (lowest step id first among
/// ready steps). Cyclic flows fall back to depth-first preorder from the
/// lowest-id zero-in-degree step (or lowest id overall), with each implicit
/// back edge annotated as "then return to Step <q>"; decision branches
/// already name their targets and are not re-annotated.
LinearizedProcedure linearize_flow(const FlowGraph& flow, const std::string& title);

/// Offline mode (chat == nullptr): the title followed by the linearized lines
/// verbatim. LLM mode grounds the chat model in the linearized procedure and
/// falls back to the offline template with a warning on failure.
std::string generate_answer(const std::string& query, const LinearizedProcedure& linearized,
                            const ChatClient* chat = nullptr);

} // namespace soprag
