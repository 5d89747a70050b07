// tacsearch: guided tactic-level proof search over scripted environments.
//
// Subcommands: search, batch, iterate, codec, stats, gen-puzzles.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tacsearch/datagen.hpp"
#include "tacsearch/distance_codec.hpp"
#include "tacsearch/errors.hpp"
#include "tacsearch/run_config.hpp"
#include "tacsearch/search.hpp"
#include "tacsearch/text_util.hpp"

namespace ts = tacsearch;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<unsigned long long> seed;
    std::optional<int> parallelism;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run configuration (JSON)")->required();
    cmd->add_option("--seed", flags.seed, "override the configured seed");
    cmd->add_option("--parallelism", flags.parallelism, "worker threads for batches");
    cmd->add_option("--out", flags.out, "override the output directory");
}

ts::RunConfig load_config(const CommonFlags& flags) {
    auto cfg = ts::RunConfig::load(flags.config_path);
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.search.seed = *flags.seed;
    }
    if (flags.parallelism) cfg.parallelism = *flags.parallelism;
    if (flags.out) cfg.out_dir = *flags.out;
    cfg.validate();
    return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ts::EnvironmentIOError("cannot write " + path.string());
    out << text;
}

int cmd_search(const CommonFlags& flags, const std::string& statement_id) {
    auto cfg = load_config(flags);
    auto env = cfg.make_environment();
    auto policy = cfg.make_policy(env);
    auto critic = cfg.make_critic();
    const auto& statement = env.statement_by_id(statement_id);

    auto result = ts::run_search(statement, env, *policy, *critic, cfg.search);

    std::filesystem::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / ("events_" + statement_id + ".jsonl"),
               ts::serialize_events(result.events));
    write_text(cfg.out_dir / ("tree_" + statement_id + ".tsv"), result.tree->dump());

    std::cout << "proved=" << (result.proved ? "true" : "false")
              << " steps=" << result.steps_used << " nodes=" << result.nodes_created
              << " termination=" << ts::to_string(result.termination);
    if (result.trajectory)
        std::cout << " length=" << ts::proof_length(*result.trajectory);
    std::cout << '\n';
    return result.proved ? 0 : 1;
}

int cmd_batch(const CommonFlags& flags) {
    auto cfg = load_config(flags);
    auto env = cfg.make_environment();
    auto policy = cfg.make_policy(env);
    auto critic = cfg.make_critic();

    auto results = ts::run_batch(env.statements(), env, *policy, *critic, cfg.search,
                                 cfg.parallelism);
    std::filesystem::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / "results.csv", ts::results_csv(env.statements(), results));

    int solved = 0;
    int errors = 0;
    for (const auto& r : results) {
        if (r.proved) ++solved;
        if (r.termination == ts::Termination::Error) {
            ++errors;
            std::cerr << "search error: " << r.error << '\n';
        }
    }
    std::cout << "solved " << solved << "/" << results.size() << '\n';
    return errors == 0 ? 0 : 1;
}

int cmd_iterate(const CommonFlags& flags, int num_iterations, bool resume) {
    auto cfg = load_config(flags);
    auto env = cfg.make_environment();
    auto campaign = cfg.make_campaign_config();
    auto output = ts::run_campaign(env, campaign, num_iterations, cfg.out_dir, resume);
    std::cout << output.stats_csv;
    return 0;
}

int cmd_codec(const std::string& input, int levels) {
    if (!input.empty() && input[0] == '<') {
        auto path = ts::parse_distance_tokens(input);
        // Round-trip check before reporting.
        if (ts::serialize_distance_tokens(path) != input)
            throw ts::ValidationError("token string does not round-trip");
        std::cout << ts::decode_distance(path) << '\n';
        return 0;
    }
    long long n = 0;
    try {
        size_t consumed = 0;
        n = std::stoll(input, &consumed);
        if (consumed != input.size()) throw std::invalid_argument(input);
    } catch (const std::exception&) {
        throw ts::DomainError("codec input must be a number or a <num_box> string");
    }
    auto path = ts::encode_distance(n, levels);
    auto tokens = ts::serialize_distance_tokens(path);
    if (!(ts::parse_distance_tokens(tokens) == path))
        throw ts::ValidationError("encoding does not round-trip");
    std::cout << "(";
    for (int i = 0; i < path.levels(); ++i) {
        if (i) std::cout << ",";
        std::cout << path.entries[i];
    }
    std::cout << ")\n" << tokens << '\n';
    return 0;
}

int cmd_stats(const std::string& checkpoint_path) {
    auto state = ts::load_checkpoint(checkpoint_path);
    auto row = ts::iteration_report(state);
    std::cout << ts::stats_csv_header() << ts::stats_csv_row(row);
    std::cout << "length,count\n";
    for (const auto& [len, count] : row.length_histogram)
        std::cout << len << "," << count << '\n';
    return 0;
}

int cmd_gen_puzzles(const CommonFlags& flags, const std::string& out_path) {
    auto cfg = load_config(flags);
    if (!cfg.puzzles)
        throw ts::ConfigError("gen-puzzles needs an environment.puzzles block");
    auto env = ts::generate_puzzles(*cfg.puzzles);
    env.save(out_path);
    int solvable = 0;
    for (const auto& s : env.statements())
        if (ts::oracle_solve(env, s)) ++solvable;
    std::cout << "statements=" << env.statements().size()
              << " transitions=" << env.transition_count() << " solvable=" << solvable
              << " -> " << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"guided tactic-level proof search"};
    app.require_subcommand(1);

    CommonFlags search_flags;
    std::string statement_id;
    auto* search = app.add_subcommand("search", "run one statement search");
    add_common(search, search_flags);
    search->add_option("statement", statement_id, "statement id")->required();

    CommonFlags batch_flags;
    auto* batch = app.add_subcommand("batch", "search every statement in the pool");
    add_common(batch, batch_flags);

    CommonFlags iterate_flags;
    int num_iterations = 3;
    bool resume = false;
    auto* iterate =
        app.add_subcommand("iterate", "expert-iteration campaign with policy refits");
    add_common(iterate, iterate_flags);
    iterate->add_option("iterations", num_iterations, "refit passes after the cold start")
        ->check(CLI::NonNegativeNumber);
    iterate->add_flag("--resume", resume, "continue from the checkpoint in the out dir");

    std::string codec_input;
    int levels = ts::kDefaultDistanceLevels;
    auto* codec = app.add_subcommand("codec", "encode/decode coarse-to-fine distances");
    codec->add_option("value", codec_input, "number or <num_box> token string")->required();
    codec->add_option("--levels", levels, "tree depth (range 1..2^levels)");

    std::string checkpoint_path;
    auto* stats = app.add_subcommand("stats", "report solve stats from a checkpoint");
    stats->add_option("--checkpoint", checkpoint_path, "checkpoint.json path")->required();

    CommonFlags gen_flags;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-puzzles", "generate a scripted puzzle family");
    add_common(gen, gen_flags);
    gen->add_option("--env-out", gen_out, "output TSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (search->parsed()) return cmd_search(search_flags, statement_id);
        if (batch->parsed()) return cmd_batch(batch_flags);
        if (iterate->parsed()) return cmd_iterate(iterate_flags, num_iterations, resume);
        if (codec->parsed()) return cmd_codec(codec_input, levels);
        if (stats->parsed()) return cmd_stats(checkpoint_path);
        if (gen->parsed()) return cmd_gen_puzzles(gen_flags, gen_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
