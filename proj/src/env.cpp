#include "tacsearch/env.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"

namespace tacsearch {

void TimeoutPolicy::validate() const {
    if (whole_search_seconds <= 0.0 || per_step_seconds <= 0.0)
        throw ConfigError("timeouts must be positive");
    if (per_step_seconds > whole_search_seconds)
        throw ConfigError("per_step_seconds exceeds whole_search_seconds");
}

ApplyResult apply_tactic(const Environment& env, const ProofState& state,
                         const Tactic& tactic, const TimeoutPolicy& timeout) {
    auto start = std::chrono::steady_clock::now();
    ApplyResult result = env.apply(state, tactic, timeout);
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (elapsed.count() > timeout.per_step_seconds) return ApplyResult::step_timeout();
    return result;
}

ApplyResult ScriptedEnvironment::apply(const ProofState& state, const Tactic& tactic,
                                       const TimeoutPolicy&) const {
    auto it = rows_.find(state.text);
    if (it == rows_.end()) return ApplyResult::invalid();
    for (const auto& row : it->second) {
        if (row.tactic == tactic.text) {
            if (row.dst == kQedStateText) return ApplyResult::proved();
            return ApplyResult::new_state(ProofState{row.dst});
        }
    }
    return ApplyResult::invalid();
}

size_t ScriptedEnvironment::transition_count() const {
    size_t n = 0;
    for (const auto& [src, menu] : rows_) n += menu.size();
    return n;
}

const Statement& ScriptedEnvironment::statement_by_id(const std::string& id) const {
    for (const auto& s : statements_)
        if (s.id == id) return s;
    throw ConfigError("unknown statement id: " + id);
}

void ScriptedEnvironment::add_statement(Statement statement) {
    if (statement.goal_state.text.empty())
        throw ValidationError("statement " + statement.id + " has empty goal state");
    if (statement.goal_state.text == kQedStateText)
        throw ValidationError("statement " + statement.id + " uses the reserved QED state");
    for (const auto& s : statements_)
        if (s.id == statement.id)
            throw ValidationError("duplicate statement id: " + statement.id);
    statements_.push_back(std::move(statement));
}

void ScriptedEnvironment::add_row(const std::string& src, const std::string& tactic,
                                  const std::string& dst) {
    if (src == kQedStateText)
        throw ValidationError("QED is terminal and cannot have outgoing tactics");
    auto& menu = rows_[src];
    for (const auto& row : menu)
        if (row.tactic == tactic)
            throw ValidationError("duplicate transition (" + src + ", " + tactic + ")");
    menu.push_back(ScriptedRow{tactic, dst});
}

std::shared_ptr<const TacticVocabulary> ScriptedEnvironment::vocabulary() const {
    auto vocab = std::make_shared<TacticVocabulary>();
    for (const auto& [src, menu] : rows_) {
        auto& tactics = (*vocab)[src];
        tactics.reserve(menu.size());
        for (const auto& row : menu) tactics.push_back(row.tactic);
    }
    return vocab;
}

std::string ScriptedEnvironment::serialize() const {
    std::string out;
    for (const auto& s : statements_) {
        out += "#statement\t";
        out += escape_field(s.id);
        out += '\t';
        out += escape_field(s.goal_state.text);
        out += '\n';
    }
    for (const auto& [src, menu] : rows_) {
        for (const auto& row : menu) {
            out += escape_field(src);
            out += '\t';
            out += escape_field(row.tactic);
            out += '\t';
            out += escape_field(row.dst);
            out += '\n';
        }
    }
    return out;
}

ScriptedEnvironment ScriptedEnvironment::parse(std::string_view text) {
    ScriptedEnvironment env;
    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        try {
            if (fields[0] == "#statement") {
                if (fields.size() != 3)
                    throw ParseError("statement header needs id and goal state", line_no);
                Statement s;
                s.id = unescape_field(fields[1]);
                s.goal_state.text = unescape_field(fields[2]);
                env.add_statement(std::move(s));
            } else {
                if (fields.size() != 3)
                    throw ParseError("data row needs src, tactic, dst", line_no);
                env.add_row(unescape_field(fields[0]), unescape_field(fields[1]),
                            unescape_field(fields[2]));
            }
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return env;
}

ScriptedEnvironment ScriptedEnvironment::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentIOError("cannot open environment file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void ScriptedEnvironment::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentIOError("cannot write environment file: " + path.string());
    out << serialize();
}

void PuzzleFamilyConfig::validate() const {
    if (num_statements <= 0 || state_space_size <= 0 || branching <= 0)
        throw ConfigError("puzzle counts must be positive");
    if (solvable_fraction < 0.0 || solvable_fraction > 1.0)
        throw ConfigError("solvable_fraction must lie in [0,1]");
    if (max_depth < 0) throw ConfigError("max_depth must be nonnegative");
    if (solvable_fraction > 0.0 && max_depth == 0)
        throw ConfigError("solvable statements require max_depth >= 1");
    if (state_space_size < num_statements)
        throw ConfigError("state_space_size must cover one distinct goal per statement");
}

ScriptedEnvironment generate_puzzles(const PuzzleFamilyConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    auto draw = [&rng](int n) {
        return static_cast<int>(unit_double(rng()) * n) % n;
    };

    const int n_solvable =
        static_cast<int>(std::llround(config.solvable_fraction * config.num_statements));
    const int live = n_solvable;  // live states can reach QED, dead ones never can
    const int total = config.state_space_size;

    auto state_name = [](int i) { return "s" + std::to_string(i); };

    // Live state i gets target depth 1 + (i % max_depth); every populated
    // depth has a predecessor layer by construction.
    std::vector<std::vector<int>> layer(static_cast<size_t>(config.max_depth) + 1);
    std::vector<int> depth_of(live, 0);
    for (int i = 0; i < live; ++i) {
        int d = 1 + (i % config.max_depth);
        depth_of[i] = d;
        layer[d].push_back(i);
    }

    ScriptedEnvironment env;
    for (int j = 0; j < config.num_statements; ++j) {
        Statement s;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%04d", j + 1);
        s.id = buf;
        s.goal_state.text = state_name(j < n_solvable ? j : live + (j - n_solvable));
        s.source_tag = "generated";
        env.add_statement(std::move(s));
    }

    const int dead = total - live;
    for (int i = 0; i < total; ++i) {
        const bool is_live = i < live;
        const int progress_slot = is_live ? draw(config.branching) : -1;
        for (int b = 0; b < config.branching; ++b) {
            std::string dst;
            if (is_live && b == progress_slot) {
                int d = depth_of[i];
                if (d == 1) {
                    dst = std::string(kQedStateText);
                } else {
                    const auto& below = layer[d - 1];
                    dst = state_name(below[draw(static_cast<int>(below.size()))]);
                }
            } else if (is_live) {
                dst = state_name(draw(total));  // filler edge, never QED
            } else {
                dst = state_name(live + draw(dead));  // dead states stay dead
            }
            env.add_row(state_name(i), "t" + std::to_string(b + 1), dst);
        }
    }
    return env;
}

std::optional<int> oracle_solve(const ScriptedEnvironment& env, const Statement& statement) {
    std::deque<std::pair<std::string, int>> queue;
    std::set<std::string> seen;
    queue.emplace_back(statement.goal_state.text, 0);
    seen.insert(statement.goal_state.text);
    while (!queue.empty()) {
        auto [state, dist] = queue.front();
        queue.pop_front();
        auto it = env.rows().find(state);
        if (it == env.rows().end()) continue;
        for (const auto& row : it->second) {
            if (row.dst == kQedStateText) return dist + 1;
            if (seen.insert(row.dst).second) queue.emplace_back(row.dst, dist + 1);
        }
    }
    return std::nullopt;
}

std::map<std::string, int> oracle_distances(const ScriptedEnvironment& env) {
    // Reverse BFS from QED over the transition graph.
    std::map<std::string, std::vector<std::string>> reverse;
    std::vector<std::string> frontier;
    std::map<std::string, int> dist;
    for (const auto& [src, menu] : env.rows()) {
        for (const auto& row : menu) {
            if (row.dst == kQedStateText) {
                if (dist.emplace(src, 1).second) frontier.push_back(src);
            } else {
                reverse[row.dst].push_back(src);
            }
        }
    }
    std::deque<std::string> queue(frontier.begin(), frontier.end());
    while (!queue.empty()) {
        std::string state = queue.front();
        queue.pop_front();
        int d = dist[state];
        auto it = reverse.find(state);
        if (it == reverse.end()) continue;
        for (const auto& pred : it->second) {
            if (dist.emplace(pred, d + 1).second) queue.push_back(pred);
        }
    }
    return dist;
}

}  // namespace tacsearch
