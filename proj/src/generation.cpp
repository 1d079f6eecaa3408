#include "soprag/generation.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "soprag/error.hpp"
#include "soprag/openai_client.hpp"
#include "soprag/prompts.hpp"
#include "soprag/text.hpp"

namespace soprag {

namespace {

struct StepView {
    const FlowStep* step;
    std::vector<const FlowEdge*> out;
};

/// Stable topological order: among ready steps, lowest id first. Returns an
/// empty vector when the graph has a cycle.
std::vector<int> kahn_order(const std::map<int, StepView>& views) {
    std::map<int, int> in_degree;
    for (const auto& [id, view] : views) in_degree[id];
    for (const auto& [id, view] : views) {
        for (const FlowEdge* edge : view.out) ++in_degree[edge->to];
    }
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (const auto& [id, degree] : in_degree) {
        if (degree == 0) ready.push(id);
    }
    std::vector<int> order;
    while (!ready.empty()) {
        int id = ready.top();
        ready.pop();
        order.push_back(id);
        for (const FlowEdge* edge : views.at(id).out) {
            if (--in_degree[edge->to] == 0) ready.push(edge->to);
        }
    }
    if (order.size() != views.size()) return {};
    return order;
}

/// Depth-first preorder for cyclic flows: start at the lowest-id
/// zero-in-degree step (lowest id overall if none), neighbors in ascending id.
std::vector<int> dfs_preorder(const std::map<int, StepView>& views) {
    std::map<int, int> in_degree;
    for (const auto& [id, view] : views) in_degree[id];
    for (const auto& [id, view] : views) {
        for (const FlowEdge* edge : view.out) ++in_degree[edge->to];
    }

    std::set<int> unvisited;
    for (const auto& [id, view] : views) unvisited.insert(id);
    std::vector<int> order;

    auto visit = [&](int start) {
        std::vector<int> stack{start};
        while (!stack.empty()) {
            int id = stack.back();
            stack.pop_back();
            if (unvisited.erase(id) == 0) continue;
            order.push_back(id);
            std::vector<int> targets;
            for (const FlowEdge* edge : views.at(id).out) targets.push_back(edge->to);
            std::sort(targets.begin(), targets.end(), std::greater<>());
            for (int t : targets) {
                if (unvisited.count(t) > 0) stack.push_back(t);
            }
        }
    };

    while (!unvisited.empty()) {
        int start = -1;
        for (int id : unvisited) {
            if (in_degree[id] == 0) {
                start = id;
                break;
            }
        }
        if (start == -1) start = *unvisited.begin();
        visit(start);
    }
    return order;
}

} // namespace

LinearizedProcedure linearize_flow(const FlowGraph& flow, const std::string& title) {
    if (flow.steps.empty()) throw Error("cannot linearize an empty flow graph: " + flow.sop_id);

    std::map<int, StepView> views;
    for (const FlowStep& step : flow.steps) views[step.id] = StepView{&step, {}};
    for (const FlowEdge& edge : flow.edges) {
        auto from_it = views.find(edge.from);
        if (from_it == views.end() || views.find(edge.to) == views.end()) {
            throw Error("flow edge references a missing step in " + flow.sop_id);
        }
        from_it->second.out.push_back(&edge);
    }

    std::vector<int> order = kahn_order(views);
    if (order.empty()) order = dfs_preorder(views);

    std::map<int, std::size_t> position;
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;

    LinearizedProcedure out;
    out.sop_id = flow.sop_id;
    out.title = title;
    out.lines.reserve(order.size());
    for (int id : order) {
        const StepView& view = views.at(id);
        const FlowStep& step = *view.step;
        std::string line;
        if (step.kind == StepKind::decision) {
            line = "Step " + std::to_string(id) + " (check): " + step.text;
            std::vector<const FlowEdge*> branches = view.out;
            std::sort(branches.begin(), branches.end(), [](const FlowEdge* a, const FlowEdge* b) {
                auto key = [](const FlowEdge* e) {
                    if (e->branch_label == "yes") return std::pair<int, std::string>{0, ""};
                    if (e->branch_label == "no") return std::pair<int, std::string>{1, ""};
                    return std::pair<int, std::string>{2, e->branch_label};
                };
                auto ka = key(a);
                auto kb = key(b);
                if (ka != kb) return ka < kb;
                return a->to < b->to;
            });
            for (std::size_t i = 0; i < branches.size(); ++i) {
                const FlowEdge* edge = branches[i];
                std::string label = edge->branch_label.empty() ? "next" : edge->branch_label;
                line += (i == 0 ? " — " : "; ");
                line += "if " + label + " → Step " + std::to_string(edge->to);
            }
        } else {
            line = "Step " + std::to_string(id) + ": " + step.text;
            // Annotate jumps that break the rendered order; forward chaining
            // is implicit, decision branches name their targets themselves.
            std::vector<int> back_targets;
            for (const FlowEdge* edge : view.out) {
                if (position.at(edge->to) <= position.at(id)) back_targets.push_back(edge->to);
            }
            std::sort(back_targets.begin(), back_targets.end());
            for (int target : back_targets) {
                line += " — then return to Step " + std::to_string(target);
            }
        }
        out.lines.push_back(std::move(line));
    }
    return out;
}

std::string generate_answer(const std::string& query, const LinearizedProcedure& linearized,
                            const ChatClient* chat) {
    if (linearized.lines.empty()) {
        throw Error("cannot generate an answer from an empty procedure");
    }
    auto template_answer = [&] {
        std::string answer = linearized.title;
        for (const auto& line : linearized.lines) {
            answer.push_back('\n');
            answer += line;
        }
        return answer;
    };
    if (chat == nullptr) return template_answer();

    std::string context = "Procedure: " + linearized.title + "\n";
    for (const auto& line : linearized.lines) context += line + "\n";
    try {
        return chat->complete(prompts::kAnswerInstruction, context + "\nQuestion: " + query);
    } catch (const std::exception& e) {
        text::warn(std::string("answer generation failed (") + e.what()
                   + "); returning the procedure template");
        return template_answer();
    }
}

} // namespace soprag
