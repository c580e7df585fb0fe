#include "meoh/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "meoh/dsl/parser.hpp"

namespace meoh::operators {

std::size_t parent_slots(Operator kind, std::size_t crossover) {
    switch (kind) {
        case Operator::Init: return 0;
        case Operator::E1:
        case Operator::E2: return crossover;
        default: return 1;
    }
}

namespace {

constexpr const char* kDescribe =
    "First, describe your new algorithm and main steps in one sentence. The description must start with "
    "\"<start>\" and end with \"<end>\".";

constexpr const char* kFormat =
    "Your code should be written in the heuristic language and formatted as a single fenced code block: "
    "```\n...\n```";

constexpr const char* kCreative = "Be creative and do not give additional explanation.";

void append_parent(std::string& out, const Heuristic& h, std::size_t number, bool numbered) {
    if (numbered) out += "No. " + std::to_string(number) + " algorithm and the corresponding code are:\n";
    out += "<Algorithm description>: " + h.description + "\n";
    out += "<Code>:\n```\n" + h.source + "\n```\n\n";
}

std::string guidance(Operator kind) {
    switch (kind) {
        case Operator::E1:
            return "Please help me create a new algorithm that has a totally different form from the given ones.";
        case Operator::E2:
            return "Please help me create a new algorithm that has a totally different form from the given ones but "
                   "can be motivated from them.\nFirstly, identify the common backbone idea in the provided "
                   "algorithms. Secondly, based on the backbone idea, design the new algorithm.";
        case Operator::M1:
            return "Please assist me in creating a new algorithm that has a different form but can be a modified "
                   "version of the algorithm provided.";
        case Operator::M2:
            return "Please identify the main algorithm parameters and assist me in creating a new algorithm that "
                   "has a different parameter settings of the score function provided.";
        default: return {};
    }
}

}  // namespace

std::string render_prompt(Operator kind, const TaskText& task, std::span<const Heuristic* const> parents,
                          std::size_t crossover) {
    const std::size_t want = parent_slots(kind, crossover);
    if (parents.size() != want) {
        throw ArityError(std::string(operator_name(kind)) + " takes " + std::to_string(want) + " parents, got " +
                         std::to_string(parents.size()));
    }
    std::string out;
    if (kind == Operator::M3) {
        out += "First, you need to identify the main components in the function below.\n\n";
        out += "Next, analyze whether any of these components can be overfit to the in-distribution instances.\n\n";
        out += "Then, based on your analysis, simplify the components to enhance the generalization to potential "
               "out-of-distribution instances.\n\n";
        out += "Finally, provide the revised code, keeping the function, inputs, and outputs unchanged.\n\n";
        out += "<Code>:\n```\n" + parents[0]->source + "\n```\n\n";
        out += task.io_description + "\n\n";
        out += "Describe the revised algorithm in one sentence. The description must start with \"<start>\" and "
               "end with \"<end>\".\n\n";
        out += std::string(kFormat) + "\n\n" + kCreative + "\n";
        return out;
    }

    out += task.description + "\n\n";
    if (kind == Operator::E1 || kind == Operator::E2) {
        out += "I have " + std::to_string(parents.size()) + " existing algorithms with their codes as follows:\n";
        for (std::size_t k = 0; k < parents.size(); ++k) append_parent(out, *parents[k], k + 1, true);
    } else if (kind != Operator::Init) {
        out += "I have one algorithm with its code as follows:\n";
        append_parent(out, *parents[0], 1, false);
    }
    if (kind != Operator::Init) out += guidance(kind) + "\n\n";
    out += std::string(kDescribe) + "\n\n";
    out += "Next, " + task.code_requirements + "\n\n";
    out += std::string(kFormat) + "\n\n";
    out += kind == Operator::Init ? "Do not give additional explanation.\n" : std::string(kCreative) + "\n";
    return out;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Response parse_response(std::string_view text) {
    Response r;
    const auto start = text.find("<start>");
    if (start == std::string_view::npos) throw MissingDescription("reply has no <start> sentinel");
    const auto body = start + 7;
    const auto end = text.find("<end>", body);
    if (end == std::string_view::npos) throw MissingDescription("reply has no <end> after <start>");
    r.description = trim(text.substr(body, end - body));
    if (r.description.empty()) throw MissingDescription("description between sentinels is empty");

    const auto open = text.find("```");
    if (open == std::string_view::npos) throw MissingCodeBlock("reply has no fenced code block");
    auto line_end = text.find('\n', open + 3);
    if (line_end == std::string_view::npos) throw MissingCodeBlock("code fence is never closed");
    const auto close = text.find("```", line_end + 1);
    if (close == std::string_view::npos) throw MissingCodeBlock("code fence is never closed");
    r.code = trim(text.substr(line_end + 1, close - line_end - 1));
    if (r.code.empty()) throw EmptyCode("code block is empty");
    return r;
}

// --- mock replies -----------------------------------------------------------

namespace {

struct Draft {
    std::string description;
    std::string code;
};

std::string literal(double x) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << x;
    std::string s = os.str();
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

std::string constant(Rng& rng, double lo, double hi) { return literal(rng.uniform(lo, hi)); }

std::string bpp_fn(const std::string& body) { return "fn score(item, bins) {\n" + body + "}\n"; }

std::string tsp_fn(const std::string& body) {
    return "fn update_edge_distance(edge_distance, local_opt_tour, edge_n_used) {\n" + body + "}\n";
}

Draft bpp_template(Rng& rng) {
    switch (rng.below(10)) {
        case 0: return {"Prefer the bin whose remaining capacity is closest to the item size.",
                        bpp_fn("    return item - bins;\n")};
        case 1: return {"Score all bins equally so the first feasible bin is used.",
                        bpp_fn("    return zeros(len(bins));\n")};
        case 2: {
            const auto c = constant(rng, 0.5, 5.0);
            return {"Score bins by the inverse of the leftover space plus " + c + ".",
                    bpp_fn("    let r = bins - item;\n    return 1 / (r + " + c + ");\n")};
        }
        case 3: {
            const auto c = constant(rng, 1.0, 3.0);
            return {"Prefer bins whose capacity is near " + c + " times the item.",
                    bpp_fn("    return -abs(bins - " + c + " * item);\n")};
        }
        case 4: {
            const auto c1 = constant(rng, 2.0, 20.0);
            const auto c2 = constant(rng, 0.1, 2.0);
            return {"Exponentially decaying score of the leftover space with a penalty on the emptiest bins.",
                    bpp_fn("    let r = bins - item;\n    return exp(-r / " + c1 + ") - " + c2 +
                           " * (bins == maxv(bins));\n")};
        }
        case 5: {
            const auto c1 = constant(rng, 5.0, 50.0);
            const auto c2 = constant(rng, 0.5, 5.0);
            const auto c3 = constant(rng, 1.0, 10.0);
            return {"Quadratic leftover penalty with a bonus for nearly full bins.",
                    bpp_fn("    let r = bins - item;\n    return -(r ^ 2) / " + c1 + " + " + c2 + " * (r < " + c3 +
                           ");\n")};
        }
        case 6: return {"Prefer the bin with the most remaining capacity.", bpp_fn("    return bins - item;\n")};
        case 7: {
            const auto c1 = constant(rng, 0.1, 2.0);
            const auto c2 = constant(rng, 2.0, 30.0);
            return {"Combine the relative leftover ratio with a saturating leftover penalty.",
                    bpp_fn("    let r = bins - item;\n    let u = r / bins;\n    return -u - " + c1 + " * tanh(r / " +
                           c2 + ");\n")};
        }
        case 8: {
            const auto c1 = constant(rng, 0.1, 1.0);
            const auto c2 = constant(rng, 1.0, 10.0);
            const auto c3 = constant(rng, 0.1, 3.0);
            return {"Best fit with a bonus when the leftover is small relative to the item.",
                    bpp_fn("    let s = bins - item;\n    let bonus = (s < " + c1 + " * item) * " + c2 +
                           ";\n    return -s + bonus - " + c3 + " * (bins == maxv(bins));\n")};
        }
        default: {
            const auto c1 = constant(rng, 0.5, 5.0);
            const auto c2 = constant(rng, 0.1, 2.0);
            const auto c3 = constant(rng, 0.5, 5.0);
            const auto c4 = constant(rng, 1.0, 10.0);
            return {"Normalized leftover score adjusted by each bin's deviation from the mean capacity.",
                    bpp_fn("    let r = bins - item;\n    let avg = mean(bins);\n    let dev = abs(bins - avg);\n"
                           "    return -r / (item + " + c1 + ") - " + c2 + " * dev / (avg + " + c1 + ") + " + c3 +
                           " * (r <= " + c4 + ");\n")};
        }
    }
}

Draft tsp_template(Rng& rng) {
    switch (rng.below(6)) {
        case 0: return {"Leave the distances unchanged.", tsp_fn("    return edge_distance;\n")};
        case 1: {
            const auto c = constant(rng, 0.02, 0.5);
            return {"Scale every edge by one plus " + c + " times its usage count.",
                    tsp_fn("    return edge_distance * (1 + " + c + " * edge_n_used);\n")};
        }
        case 2: {
            const auto c = constant(rng, 0.01, 0.3);
            return {"Add a usage penalty proportional to the mean edge length.",
                    tsp_fn("    return edge_distance + " + c + " * mean(edge_distance) * edge_n_used;\n")};
        }
        case 3: {
            const auto c = constant(rng, 0.02, 0.5);
            return {"Penalize the edges of the local optimum in proportion to their usage.",
                    tsp_fn("    let n = len(local_opt_tour);\n    let updated = copy(edge_distance);\n"
                           "    for k in 0..n {\n        let a = local_opt_tour[k];\n"
                           "        let b = local_opt_tour[(k + 1) % n];\n"
                           "        let w = edge_distance[a, b] * (1 + " + c + " * edge_n_used[a, b]);\n"
                           "        updated[a, b] = w;\n        updated[b, a] = w;\n    }\n    return updated;\n")};
        }
        case 4: {
            const auto c = constant(rng, 0.1, 2.0);
            return {"Scale edges by their usage relative to the most used edge.",
                    tsp_fn("    let m = maxv(edge_n_used);\n    return edge_distance * (1 + " + c +
                           " * edge_n_used / (m + 1));\n")};
        }
        default: {
            const auto c = constant(rng, 0.05, 1.0);
            return {"Lengthen local-optimum edges by a share of the mean distance that shrinks with usage.",
                    tsp_fn("    let n = len(local_opt_tour);\n    let updated = copy(edge_distance);\n"
                           "    let avg = mean(edge_distance);\n    for k in 0..n {\n"
                           "        let a = local_opt_tour[k];\n        let b = local_opt_tour[(k + 1) % n];\n"
                           "        updated[a, b] = updated[a, b] + " + c + " * avg / (1 + edge_n_used[a, b]);\n"
                           "        updated[b, a] = updated[a, b];\n    }\n    return updated;\n")};
        }
    }
}

Draft fresh(Rng& rng, std::string_view task) { return task == "tsp" ? tsp_template(rng) : bpp_template(rng); }

void collect(dsl::SyntaxTree& t, const std::function<bool(const dsl::SyntaxTree&)>& keep,
             std::vector<dsl::SyntaxTree*>& out) {
    if (keep(t)) out.push_back(&t);
    for (auto& c : t.children) collect(c, keep, out);
}

std::vector<dsl::SyntaxTree*> nodes_where(dsl::SyntaxTree& t, const std::function<bool(const dsl::SyntaxTree&)>& keep) {
    std::vector<dsl::SyntaxTree*> out;
    collect(t, keep, out);
    return out;
}

bool only_params(const dsl::SyntaxTree& t, const std::vector<std::string>& params) {
    if ((t.kind == dsl::NodeKind::Ident || t.kind == dsl::NodeKind::Index) &&
        std::find(params.begin(), params.end(), t.lexeme) == params.end()) {
        return false;
    }
    return std::all_of(t.children.begin(), t.children.end(),
                       [&](const dsl::SyntaxTree& c) { return only_params(c, params); });
}

bool is_expr(const dsl::SyntaxTree& t) { return dsl::is_expression(t.kind); }

Draft jitter(Rng& rng, const Heuristic& parent) {
    dsl::SyntaxTree t = parent.tree;
    for (auto* lit : nodes_where(t, [](const dsl::SyntaxTree& n) { return n.kind == dsl::NodeKind::NumLit; })) {
        const double x = std::strtod(lit->lexeme.c_str(), nullptr);
        std::string next = literal(x * rng.uniform(0.5, 1.5));
        if (next == lit->lexeme && x != 0.0) next = literal(x * 1.1 + 0.001);
        lit->lexeme = next;
    }
    return {"Re-tuned constants of heuristic " + std::to_string(parent.id) + ".", dsl::to_source(t)};
}

Draft reshape(Rng& rng, const Heuristic& parent) {
    dsl::SyntaxTree t = parent.tree;
    auto exprs = nodes_where(t, is_expr);
    dsl::SyntaxTree* target = exprs[rng.below(exprs.size())];
    dsl::SyntaxTree old = std::move(*target);
    switch (rng.below(4)) {
        case 0: *target = dsl::SyntaxTree(dsl::NodeKind::Binary, "+",
                                          {std::move(old), {dsl::NodeKind::NumLit, constant(rng, 0.1, 5.0)}});
            break;
        case 1: *target = dsl::SyntaxTree(dsl::NodeKind::Binary, "*",
                                          {std::move(old), {dsl::NodeKind::NumLit, constant(rng, 0.5, 2.0)}});
            break;
        case 2: *target = dsl::SyntaxTree(dsl::NodeKind::Call, "tanh", {std::move(old)}); break;
        default: *target = dsl::SyntaxTree(dsl::NodeKind::Call, "abs", {std::move(old)}); break;
    }
    return {"Modified version of heuristic " + std::to_string(parent.id) + " with a reshaped sub-expression.",
            dsl::to_source(t)};
}

Draft prune(Rng& rng, const Heuristic& parent) {
    dsl::SyntaxTree t = parent.tree;
    auto binaries = nodes_where(t, [](const dsl::SyntaxTree& n) { return n.kind == dsl::NodeKind::Binary; });
    if (!binaries.empty()) {
        dsl::SyntaxTree* target = binaries[rng.below(binaries.size())];
        dsl::SyntaxTree keep = std::move(target->children[rng.below(2)]);
        *target = std::move(keep);
    }
    return {"Simplified heuristic " + std::to_string(parent.id) + " by dropping one term.", dsl::to_source(t)};
}

Draft crossover(Rng& rng, std::span<const Heuristic* const> parents, std::string_view task) {
    const Heuristic& a = *parents[rng.below(parents.size())];
    const Heuristic& b = *parents[rng.below(parents.size())];
    dsl::SyntaxTree t = a.tree;
    dsl::SyntaxTree donor_tree = b.tree;
    const auto params = dsl::program_params(donor_tree);
    auto donors = nodes_where(donor_tree, [&](const dsl::SyntaxTree& n) { return is_expr(n) && only_params(n, params); });
    dsl::SyntaxTree graft;
    if (donors.empty()) {
        Draft other = fresh(rng, task);
        dsl::SyntaxTree ot = dsl::parse(other.code);
        const auto oparams = dsl::program_params(ot);
        auto pool = nodes_where(ot, [&](const dsl::SyntaxTree& n) { return is_expr(n) && only_params(n, oparams); });
        if (pool.empty()) return other;
        graft = *pool[rng.below(pool.size())];
    } else {
        graft = *donors[rng.below(donors.size())];
    }
    auto exprs = nodes_where(t, is_expr);
    dsl::SyntaxTree* target = exprs[rng.below(exprs.size())];
    *target = dsl::SyntaxTree(dsl::NodeKind::Binary, "+",
                              {std::move(*target),
                               dsl::SyntaxTree(dsl::NodeKind::Binary, "*",
                                               {{dsl::NodeKind::NumLit, constant(rng, 0.05, 1.0)}, std::move(graft)})});
    return {"Blend of heuristics " + std::to_string(a.id) + " and " + std::to_string(b.id) + " sharing their common terms.",
            dsl::to_source(t)};
}

std::string format_reply(const Draft& d) { return "<start>" + d.description + "<end>\n```\n" + d.code + "```\n"; }

std::string corrupt(Rng& rng, const Draft& d) {
    switch (rng.below(5)) {
        case 0: return d.description + "\n```\n" + d.code + "```\n";
        case 1: return "<start>" + d.description + "<end>\n" + d.code;
        case 2: return "<start>" + d.description + "<end>\n```\n\n```\n";
        case 3: {
            std::string code = d.code;
            code.erase(code.find('{'), 1);
            return format_reply({d.description, code});
        }
        default: {
            std::string code = d.code;
            const auto open = code.find('(');
            code.replace(3, open - 3, "heuristic");
            return format_reply({d.description, code});
        }
    }
}

}  // namespace

std::string mock_generate(Rng& rng, Operator kind, std::span<const Heuristic* const> parents, std::string_view task,
                          double malformed_rate) {
    Draft d;
    if (parents.empty() || kind == Operator::Init) {
        d = fresh(rng, task);
    } else {
        switch (kind) {
            case Operator::E1: {
                d = fresh(rng, task);
                for (int tries = 0; tries < 4; ++tries) {
                    const std::string canon = dsl::to_source(dsl::parse(d.code));
                    const bool clash = std::any_of(parents.begin(), parents.end(), [&](const Heuristic* p) {
                        return dsl::to_source(p->tree) == canon;
                    });
                    if (!clash) break;
                    d = fresh(rng, task);
                }
                break;
            }
            case Operator::E2: d = crossover(rng, parents, task); break;
            case Operator::M1: d = reshape(rng, *parents[0]); break;
            case Operator::M2: d = jitter(rng, *parents[0]); break;
            default: d = prune(rng, *parents[0]); break;
        }
    }
    if (rng.chance(malformed_rate)) return corrupt(rng, d);
    return format_reply(d);
}

evolution::GeneratedText MockSource::generate(const evolution::OffspringRequest& request,
                                              const ProblemEnvironment& env) {
    Rng rng(request.seed);
    return {mock_generate(rng, request.op, request.parents, env.name(), malformed_rate_), 0};
}

EndpointSource::EndpointSource(EndpointConfig cfg, std::size_t crossover) : cfg_(std::move(cfg)), crossover_(crossover) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key) throw AuthError("environment variable " + cfg_.api_key_env + " is not set");
    key_ = key;
}

evolution::GeneratedText EndpointSource::generate(const evolution::OffspringRequest& request,
                                                  const ProblemEnvironment& env) {
    const std::size_t arity =
        request.op == Operator::E1 || request.op == Operator::E2 ? request.parents.size() : crossover_;
    const std::string prompt = render_prompt(request.op, env.text(), request.parents, arity);
    Completion c = llm_generate(cfg_, prompt, key_);
    return {std::move(c.text), c.retry_count};
}

}  // namespace meoh::operators
