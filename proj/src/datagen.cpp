#include "tacsearch/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"

namespace tacsearch {

namespace {
using nlohmann::json;

json trajectory_to_json(const Trajectory& t) {
    json steps = json::array();
    for (const auto& [state, tactic] : t.steps) {
        steps.push_back(json{{"state", state.text},
                             {"tactic", tactic.text},
                             {"logprobs", tactic.token_logprobs}});
    }
    return json{{"statement_id", t.statement.id},
                {"goal", t.statement.goal_state.text},
                {"source", t.statement.source_tag},
                {"steps", steps},
                {"terminal", t.terminal_state.text},
                {"proved", t.proved}};
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory t;
    t.statement.id = j.at("statement_id").get<std::string>();
    t.statement.goal_state.text = j.at("goal").get<std::string>();
    t.statement.source_tag = j.at("source").get<std::string>();
    for (const auto& step : j.at("steps")) {
        Tactic tactic;
        tactic.text = step.at("tactic").get<std::string>();
        tactic.token_logprobs = step.at("logprobs").get<std::vector<double>>();
        t.steps.emplace_back(ProofState{step.at("state").get<std::string>()},
                             std::move(tactic));
    }
    t.terminal_state.text = j.at("terminal").get<std::string>();
    t.proved = j.at("proved").get<bool>();
    return t;
}

// Retained solves in pool order, honoring the easy-statement cutoff.
std::vector<std::pair<const Statement*, const SolvedEntry*>> retained_solves(
    const IterationState& state, const FilterConfig& filter) {
    std::vector<std::pair<const Statement*, const SolvedEntry*>> out;
    for (const auto& statement : state.pool) {
        auto it = state.solved.find(statement.id);
        if (it == state.solved.end()) continue;
        if (it->second.solved_at_iteration < filter.easy_cutoff_iteration) continue;
        out.emplace_back(&statement, &it->second);
    }
    return out;
}
}  // namespace

IterationState IterationState::init(std::vector<Statement> pool) {
    IterationState state;
    std::set<std::string> ids;
    for (const auto& s : pool) {
        if (!ids.insert(s.id).second)
            throw ValidationError("duplicate statement id in pool: " + s.id);
        state.unsolved.insert(s.id);
    }
    state.pool = std::move(pool);
    return state;
}

void IterationState::check_consistent() const {
    if (solved.size() + unsolved.size() != pool.size())
        throw ValidationError("solved/unsolved do not partition the pool");
    for (const auto& s : pool) {
        const bool is_solved = solved.count(s.id) > 0;
        const bool is_unsolved = unsolved.count(s.id) > 0;
        if (is_solved == is_unsolved)
            throw ValidationError("statement " + s.id + " must be in exactly one set");
    }
    for (const auto& [id, entry] : solved) {
        if (entry.solved_at_iteration >= iteration_t)
            throw ValidationError("statement " + id + " solved at a future iteration");
    }
}

std::vector<const Statement*> IterationState::unsolved_statements() const {
    std::vector<const Statement*> out;
    for (const auto& s : pool)
        if (unsolved.count(s.id)) out.push_back(&s);
    return out;
}

IterationState run_iteration(const IterationState& state, const Environment& env,
                             const Policy& policy, const Critic& critic,
                             const SearchConfig& config, int parallelism,
                             std::vector<SearchResult>* out_results) {
    state.check_consistent();
    IterationState next = state;
    const int pass_index = state.iteration_t;

    auto targets = state.unsolved_statements();
    std::vector<Statement> batch;
    batch.reserve(targets.size());
    for (const auto* s : targets) batch.push_back(*s);

    auto results = run_batch(batch, env, policy, critic, config, parallelism);
    for (size_t i = 0; i < results.size(); ++i) {
        if (!results[i].proved) continue;
        next.solved.emplace(batch[i].id,
                            SolvedEntry{*results[i].trajectory, pass_index});
        next.unsolved.erase(batch[i].id);
    }
    next.iteration_t = pass_index + 1;
    next.check_consistent();
    if (out_results) *out_results = std::move(results);
    return next;
}

std::vector<TrainingRecord> emit_policy_records(const IterationState& state,
                                                const FilterConfig& filter) {
    std::vector<TrainingRecord> records;
    for (const auto& [statement, entry] : retained_solves(state, filter)) {
        int emitted = 0;
        for (const auto& [proof_state, tactic] : entry->trajectory.steps) {
            if (filter.max_records_per_statement &&
                emitted >= *filter.max_records_per_statement)
                break;
            TrainingRecord r;
            r.kind = RecordKind::PolicyStep;
            r.statement_id = statement->id;
            r.state_text = proof_state.text;
            r.prompt_text = policy_prompt(proof_state.text);
            r.target_text = tactic.text;
            records.push_back(std::move(r));
            ++emitted;
        }
    }
    return records;
}

std::vector<TrainingRecord> emit_distance_records(const IterationState& state,
                                                  const FilterConfig& filter, int levels) {
    std::vector<TrainingRecord> records;
    for (const auto& [statement, entry] : retained_solves(state, filter)) {
        const int m = static_cast<int>(entry->trajectory.steps.size());
        int emitted = 0;
        for (int i = 0; i < m; ++i) {
            if (filter.max_records_per_statement &&
                emitted >= *filter.max_records_per_statement)
                break;
            TrainingRecord r;
            r.kind = RecordKind::DistanceLabel;
            r.statement_id = statement->id;
            r.state_text = entry->trajectory.steps[i].first.text;
            r.prompt_text = distance_prompt(r.state_text);
            r.target_text = serialize_distance_tokens(encode_distance(m - i, levels));
            records.push_back(std::move(r));
            ++emitted;
        }
    }
    return records;
}

std::vector<TrainingRecord> prm_label_records(const std::vector<PRMLabel>& labels) {
    std::vector<TrainingRecord> records;
    records.reserve(labels.size());
    for (const auto& l : labels) {
        TrainingRecord r;
        r.kind = RecordKind::PRMLabel;
        r.statement_id = l.statement_id;
        r.state_text = l.state_text;
        r.prompt_text = l.state_text;
        r.target_text = l.label > 0 ? "+1" : "-1";
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<Statement> synthesize_diversity_statements(
    const std::vector<const SearchTree*>& trees, const DiversityConfig& rules) {
    if (rules.per_tree < 1) throw ConfigError("diversity per_tree must be at least 1");
    std::vector<Statement> out;
    std::set<std::string> seen_states;
    for (const auto* tree : trees) {
        if (!tree) continue;
        bool proved = false;
        for (size_t i = 0; i < tree->size(); ++i)
            proved = proved || tree->node(static_cast<NodeId>(i)).status == NodeStatus::Proved;
        if (proved) continue;  // rule applies to unfinished trajectories only

        // Deepest Open frontier nodes, lowest id first within a depth.
        std::vector<std::pair<int, NodeId>> frontier;
        for (size_t i = 0; i < tree->size(); ++i) {
            NodeId id = static_cast<NodeId>(i);
            if (tree->node(id).status != NodeStatus::Open) continue;
            frontier.emplace_back(-tree->depth(id), id);
        }
        std::sort(frontier.begin(), frontier.end());
        int taken = 0;
        for (const auto& [neg_depth, id] : frontier) {
            if (taken >= rules.per_tree) break;
            const auto& node = tree->node(id);
            if (!seen_states.insert(node.state.text).second) continue;
            Statement s;
            s.id = tree->statement().id + "#d" + std::to_string(id);
            s.goal_state = node.state;
            s.source_tag = "diversity";
            out.push_back(std::move(s));
            ++taken;
        }
    }
    return out;
}

StatsRow iteration_report(const IterationState& state) {
    StatsRow row;
    row.iteration = state.iteration_t == 0 ? 0 : state.iteration_t - 1;
    row.solve_rate = state.pool.empty()
                         ? 0.0
                         : static_cast<double>(state.solved.size()) /
                               static_cast<double>(state.pool.size());
    for (const auto& [id, entry] : state.solved) {
        if (entry.solved_at_iteration == row.iteration) ++row.new_solved;
        row.cumulative_records += static_cast<long>(entry.trajectory.steps.size());
        ++row.length_histogram[proof_length(entry.trajectory)];
    }
    return row;
}

std::string stats_csv_header() {
    return "iteration,solve_rate,cumulative_solved,new_solved,cumulative_records,"
           "length_histogram\n";
}

std::string stats_csv_row(const StatsRow& row) {
    int cumulative_solved = 0;
    for (const auto& [len, count] : row.length_histogram) cumulative_solved += count;
    std::string hist;
    for (const auto& [len, count] : row.length_histogram) {
        if (!hist.empty()) hist += ';';
        hist += std::to_string(len) + ":" + std::to_string(count);
    }
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%.6f", row.solve_rate);
    std::string out = std::to_string(row.iteration);
    out += ',';
    out += rate;
    out += ',';
    out += std::to_string(cumulative_solved);
    out += ',';
    out += std::to_string(row.new_solved);
    out += ',';
    out += std::to_string(row.cumulative_records);
    out += ',';
    out += hist;
    out += '\n';
    return out;
}

void save_checkpoint(const IterationState& state, const std::filesystem::path& path) {
    state.check_consistent();
    json j;
    j["iteration_t"] = state.iteration_t;
    j["policy_version"] = state.policy_version;
    j["critic_version"] = state.critic_version;
    json pool = json::array();
    for (const auto& s : state.pool)
        pool.push_back(json{{"id", s.id}, {"goal", s.goal_state.text},
                            {"source", s.source_tag}});
    j["pool"] = pool;
    json solved = json::array();
    for (const auto& s : state.pool) {
        auto it = state.solved.find(s.id);
        if (it == state.solved.end()) continue;
        solved.push_back(json{{"id", s.id},
                              {"solved_at", it->second.solved_at_iteration},
                              {"trajectory", trajectory_to_json(it->second.trajectory)}});
    }
    j["solved"] = solved;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentIOError("cannot write checkpoint: " + path.string());
    out << j.dump(2) << '\n';
}

IterationState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentIOError("cannot open checkpoint: " + path.string());
    json j;
    try {
        in >> j;
        IterationState state;
        state.iteration_t = j.at("iteration_t").get<int>();
        state.policy_version = j.at("policy_version").get<std::string>();
        state.critic_version = j.at("critic_version").get<std::string>();
        for (const auto& p : j.at("pool")) {
            Statement s;
            s.id = p.at("id").get<std::string>();
            s.goal_state.text = p.at("goal").get<std::string>();
            s.source_tag = p.at("source").get<std::string>();
            state.pool.push_back(std::move(s));
        }
        for (const auto& s : state.pool) state.unsolved.insert(s.id);
        for (const auto& entry : j.at("solved")) {
            std::string id = entry.at("id").get<std::string>();
            SolvedEntry solved;
            solved.solved_at_iteration = entry.at("solved_at").get<int>();
            solved.trajectory = trajectory_from_json(entry.at("trajectory"));
            state.unsolved.erase(id);
            state.solved.emplace(std::move(id), std::move(solved));
        }
        state.check_consistent();
        return state;
    } catch (const json::exception& e) {
        throw ParseError(std::string("corrupt checkpoint: ") + e.what());
    } catch (const ValidationError& e) {
        throw ParseError(std::string("corrupt checkpoint: ") + e.what());
    }
}

namespace {

std::unique_ptr<Critic> refit_critic(const CampaignConfig& config,
                                     const IterationState& state,
                                     const std::vector<PRMLabel>& prm_labels,
                                     std::string& version) {
    if (config.critic_kind == "pc") {
        version = "pc";
        return std::make_unique<PolicyConfidenceCritic>();
    }
    if (config.critic_kind == "prm") {
        if (prm_labels.empty()) {  // cold start before any trees exist
            version = "pc";
            return std::make_unique<PolicyConfidenceCritic>();
        }
        version = "prm-pass" + std::to_string(state.iteration_t);
        return std::make_unique<PRMCritic>(fit_prm(prm_labels));
    }
    if (config.critic_kind == "distance") {
        std::vector<Trajectory> trajectories;
        for (const auto& s : state.pool) {
            auto it = state.solved.find(s.id);
            if (it != state.solved.end()) trajectories.push_back(it->second.trajectory);
        }
        if (trajectories.empty()) {
            version = "pc";
            return std::make_unique<PolicyConfidenceCritic>();
        }
        version = "distance-pass" + std::to_string(state.iteration_t);
        return std::make_unique<DistanceCritic>(
            fit_distance_critic(trajectories, config.levels));
    }
    throw ConfigError("unknown critic kind: " + config.critic_kind);
}

void write_pass_artifacts(const std::filesystem::path& dir, const IterationState& state,
                          const std::vector<StatsRow>& rows,
                          const std::vector<TrainingRecord>& policy_records,
                          const std::vector<TrainingRecord>& distance_records,
                          const std::vector<PRMLabel>& prm_labels) {
    std::filesystem::create_directories(dir);
    save_checkpoint(state, dir / "checkpoint.json");
    save_records(policy_records, dir / "policy_records.jsonl");
    save_records(distance_records, dir / "distance_records.jsonl");
    save_prm_labels(prm_labels, dir / "prm_labels.tsv");
    std::ofstream csv(dir / "stats.csv", std::ios::binary);
    if (!csv) throw EnvironmentIOError("cannot write stats.csv");
    csv << stats_csv_header();
    for (const auto& row : rows) csv << stats_csv_row(row);
}

}  // namespace

CampaignOutput run_campaign(const ScriptedEnvironment& env, const CampaignConfig& config,
                            int refit_passes,
                            const std::optional<std::filesystem::path>& out_dir,
                            bool resume) {
    if (refit_passes < 0) throw ConfigError("refit_passes must be nonnegative");
    auto vocabulary = env.vocabulary();

    CampaignOutput output;
    if (resume) {
        if (!out_dir) throw ConfigError("resume requires an output directory");
        output.state = load_checkpoint(*out_dir / "checkpoint.json");
        output.prm_labels = load_prm_labels(*out_dir / "prm_labels.tsv");
        for (int t = 0; t < output.state.iteration_t; ++t) {
            // Rebuild prior per-pass rows from the checkpointed solve tags.
            StatsRow row;
            row.iteration = t;
            int cumulative = 0;
            for (const auto& [id, entry] : output.state.solved) {
                if (entry.solved_at_iteration > t) continue;
                ++cumulative;
                if (entry.solved_at_iteration == t) ++row.new_solved;
                row.cumulative_records +=
                    static_cast<long>(entry.trajectory.steps.size());
                ++row.length_histogram[proof_length(entry.trajectory)];
            }
            row.solve_rate = output.state.pool.empty()
                                 ? 0.0
                                 : static_cast<double>(cumulative) /
                                       static_cast<double>(output.state.pool.size());
            output.rows.push_back(std::move(row));
        }
    } else {
        output.state = IterationState::init(env.statements());
    }

    const int total_passes = 1 + refit_passes;
    while (output.state.iteration_t < total_passes) {
        const int pass = output.state.iteration_t;

        // Policy: cold-start uniform on pass 0, refit on accumulated records after.
        std::vector<TrainingRecord> fit_records =
            pass == 0 ? std::vector<TrainingRecord>{}
                      : emit_policy_records(output.state, config.filter);
        TabularSoftmaxPolicy policy =
            fit_tabular_policy(fit_records, config.policy_smoothing, vocabulary);
        output.state.policy_version =
            pass == 0 ? "tabular-init" : "tabular-pass" + std::to_string(pass);

        std::string critic_version;
        auto critic = refit_critic(config, output.state, output.prm_labels, critic_version);
        output.state.critic_version = critic_version;

        SearchConfig search = config.search;
        search.seed = mix_seed(config.search.seed, static_cast<unsigned long long>(pass));

        std::vector<SearchResult> results;
        output.state = run_iteration(output.state, env, policy, *critic, search,
                                     config.parallelism, &results);

        for (const auto& r : results) {
            if (!r.tree) continue;
            auto labels = label_prm_nodes(*r.tree);
            output.prm_labels.insert(output.prm_labels.end(), labels.begin(), labels.end());
        }

        if (config.diversity_enabled) {
            std::vector<const SearchTree*> unproved;
            for (const auto& r : results)
                if (!r.proved && r.tree) unproved.push_back(r.tree.get());
            std::set<std::string> pool_goals, pool_ids;
            for (const auto& s : output.state.pool) {
                pool_goals.insert(s.goal_state.text);
                pool_ids.insert(s.id);
            }
            for (auto& s : synthesize_diversity_statements(unproved, config.diversity)) {
                if (pool_goals.count(s.goal_state.text) || pool_ids.count(s.id)) continue;
                output.state.unsolved.insert(s.id);
                output.state.pool.push_back(std::move(s));
            }
        }

        output.rows.push_back(iteration_report(output.state));
        output.policy_records = emit_policy_records(output.state, config.filter);
        output.distance_records =
            emit_distance_records(output.state, config.filter, config.levels);
        if (out_dir)
            write_pass_artifacts(*out_dir, output.state, output.rows,
                                 output.policy_records, output.distance_records,
                                 output.prm_labels);
    }

    output.stats_csv = stats_csv_header();
    for (const auto& row : output.rows) output.stats_csv += stats_csv_row(row);
    if (output.policy_records.empty())
        output.policy_records = emit_policy_records(output.state, config.filter);
    if (output.distance_records.empty())
        output.distance_records =
            emit_distance_records(output.state, config.filter, config.levels);
    return output;
}

}  // namespace tacsearch
