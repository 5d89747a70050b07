#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tacsearch {

enum class RecordKind { PolicyStep, DistanceLabel, PRMLabel };

std::string to_string(RecordKind kind);
RecordKind record_kind_from_string(const std::string& s);

// Prompt templates for emitted training records.
std::string policy_prompt(const std::string& state_text);
std::string distance_prompt(const std::string& state_text);
// Inverse of the template wrapping; throws ParseError when the prompt does
// not match the record kind's template.
std::string state_from_prompt(RecordKind kind, const std::string& prompt);

// One training example. prompt/target are the exact texts written to the
// record file; state_text caches the raw state so tabular fitting does not
// have to re-invert the template.
struct TrainingRecord {
    RecordKind kind = RecordKind::PolicyStep;
    std::string statement_id;
    std::string prompt_text;
    std::string target_text;
    std::string state_text;
};

struct FilterConfig {
    // Records from statements solved at an iteration below this are dropped.
    int easy_cutoff_iteration = 0;
    std::optional<int> max_records_per_statement;
};

// Line-delimited JSON, one record per line, fields
// {kind, statement_id, prompt, target}. state_text is reconstructed from the
// prompt on load.
std::string records_to_jsonl(const std::vector<TrainingRecord>& records);
std::vector<TrainingRecord> records_from_jsonl(const std::string& text);
void save_records(const std::vector<TrainingRecord>& records,
                  const std::filesystem::path& path);
std::vector<TrainingRecord> load_records(const std::filesystem::path& path);

}  // namespace tacsearch
