#include "fixtures.hpp"

#include <stdexcept>

#include "soprag/error.hpp"

namespace fixtures {

namespace {

const char* kPrefixes[10] = {"PMP", "VLV", "CHW", "AHU", "UPS",
                             "GEN", "FAN", "CMP", "SNS", "BAT"};
const char* kNouns[10] = {"condenser", "evaporator",  "compressor", "humidifier", "rectifier",
                          "manifold",  "economizer",  "busbar",     "chiller",    "scrubber"};
const char* kAdjectives[5] = {"primary", "redundant", "upstream", "auxiliary", "standby"};
const char* kSymptoms[5] = {"overheat", "flooding", "stall", "surge", "drift"};
const char* kVerbs[10] = {"isolate", "flush",  "bleed",   "recalibrate", "inspect",
                          "torque",  "purge",  "ground",  "rebalance",   "vent"};
const char* kDevices[5] = {"skid", "loop", "header", "cabinet", "rack"};

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

} // namespace

SopPieces canonical_pieces(int i) {
    SopPieces p;
    std::string noun = kNouns[i % 10];
    std::string adj = kAdjectives[(i / 10) % 5];
    std::string symptom = kSymptoms[i % 5];
    p.code = std::string(kPrefixes[i % 10]) + "-" + std::to_string(100 + i);
    p.state = adj + " " + noun + " " + symptom;
    p.first_step = std::string(kVerbs[i % 10]) + " the " + adj + " " + noun + " "
                   + kDevices[(i / 10) % 5];
    p.title = capitalize(adj) + " " + noun + " " + symptom + " recovery (" + p.code + ")";
    return p;
}

soprag::AtomicSop canonical_sop(int i) {
    SopPieces p = canonical_pieces(i);
    std::string noun = kNouns[i % 10];
    std::string adj = kAdjectives[(i / 10) % 5];

    soprag::AtomicSop sop;
    sop.sop_id = "sop" + std::to_string(i) + ".md#0";
    sop.parent_doc = "sop" + std::to_string(i) + ".md";
    sop.title = p.title;
    sop.body = "# " + p.title + "\n"
             + "> Abstract: When " + p.state + " occurs, " + p.first_step + " on " + p.code
             + ".\n"
             + "## Entities\n"
             + "- " + p.code + " (asset)\n"
             + "## Causes\n"
             + "- " + p.state + " -> " + adj + " " + noun + " downtime\n"
             + "- " + p.state + " => RESOLVE\n"
             + "## Steps\n"
             + "1. " + p.first_step + "\n"
             + "2. Verify the " + adj + " " + noun + " gauge reads nominal\n"
             + "3. Log the intervention for " + p.code + "\n";
    return sop;
}

std::vector<soprag::AtomicSop> canonical_corpus(int n) {
    std::vector<soprag::AtomicSop> corpus;
    corpus.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) corpus.push_back(canonical_sop(i));
    return corpus;
}

std::string random_document(std::mt19937& rng) {
    std::uniform_int_distribution<int> line_count(1, 20);
    std::uniform_int_distribution<int> word_pick(0, 9);
    std::uniform_int_distribution<int> coin(0, 5);

    int lines = line_count(rng);
    std::string body;
    int heading = 0;
    for (int i = 0; i < lines; ++i) {
        if (coin(rng) == 0) {
            body += "# Section " + std::to_string(heading++) + "\n";
        } else if (coin(rng) == 1) {
            body += "## Sub " + std::string(kNouns[word_pick(rng)]) + "\n";
        } else {
            body += std::string(kVerbs[word_pick(rng)]) + " the " + kNouns[word_pick(rng)] + "\n";
        }
    }
    return body;
}

soprag::FlowGraph random_acyclic_flow(std::mt19937& rng) {
    std::uniform_int_distribution<int> step_count(1, 10);
    std::uniform_int_distribution<int> word_pick(0, 9);
    std::uniform_int_distribution<int> coin(0, 3);

    soprag::FlowGraph flow;
    flow.sop_id = "random";
    int n = step_count(rng);
    for (int id = 1; id <= n; ++id) {
        soprag::FlowStep step;
        step.id = id;
        step.text = std::string(kVerbs[word_pick(rng)]) + " the " + kNouns[word_pick(rng)];
        step.kind = soprag::StepKind::action;
        flow.steps.push_back(std::move(step));
    }
    for (int id = 1; id <= n; ++id) {
        if (id + 2 <= n && coin(rng) == 0) {
            // decision with two distinct forward branches
            flow.steps[static_cast<std::size_t>(id - 1)].kind = soprag::StepKind::decision;
            std::uniform_int_distribution<int> target(id + 1, n);
            int yes_to = target(rng);
            int no_to = target(rng);
            if (yes_to == no_to) no_to = (no_to < n) ? no_to + 1 : id + 1;
            flow.edges.push_back(soprag::FlowEdge{id, yes_to, "yes"});
            flow.edges.push_back(soprag::FlowEdge{id, no_to, "no"});
        } else if (id < n) {
            flow.edges.push_back(soprag::FlowEdge{id, id + 1, ""});
            if (id + 2 <= n && coin(rng) == 1) {
                std::uniform_int_distribution<int> target(id + 2, n);
                flow.edges.push_back(soprag::FlowEdge{id, target(rng), ""});
            }
        }
    }
    return flow;
}

std::string random_text(std::mt19937& rng) {
    std::uniform_int_distribution<int> word_count(1, 8);
    std::uniform_int_distribution<int> word_pick(0, 9);
    std::uniform_int_distribution<int> style(0, 3);

    int words = word_count(rng);
    std::string out;
    for (int i = 0; i < words; ++i) {
        if (i > 0) out.push_back(' ');
        switch (style(rng)) {
            case 0: out += kVerbs[word_pick(rng)]; break;
            case 1: out += kNouns[word_pick(rng)]; break;
            case 2: out += kAdjectives[word_pick(rng) % 5]; break;
            default:
                out += std::string(kPrefixes[word_pick(rng)]) + "-"
                       + std::to_string(100 + word_pick(rng));
                break;
        }
    }
    return out;
}

std::string FakeChatClient::complete(const std::string& system_prompt,
                                     const std::string& user_prompt) const {
    calls_.emplace_back(system_prompt, user_prompt);
    if (next_ >= replies_.size()) {
        throw soprag::BackendError("fake chat client exhausted");
    }
    return replies_[next_++];
}

void FixedSimProvider::set(const std::string& text, std::vector<double> values) {
    if (values.size() != dim_) throw std::invalid_argument("wrong dim in FixedSimProvider");
    vectors_[text] = std::move(values);
}

soprag::EmbeddingVector FixedSimProvider::embed(const std::string& text) const {
    auto it = vectors_.find(text);
    if (it != vectors_.end()) return soprag::EmbeddingVector{it->second};
    std::vector<double> fallback(dim_, 0.0);
    fallback[text.size() % dim_] = 1.0;
    return soprag::EmbeddingVector{fallback};
}

} // namespace fixtures
