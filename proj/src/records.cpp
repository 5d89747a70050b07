#include "tacsearch/records.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tacsearch/errors.hpp"
#include "tacsearch/text_util.hpp"

namespace tacsearch {

namespace {
using nlohmann::json;

constexpr const char* kPolicyPromptPrefix =
    "Given the Lean 4 tactic state, suggest a next tactic.\nTactic state:\n";
constexpr const char* kPolicyPromptSuffix = "\n\nNext tactic:\n";
constexpr const char* kDistancePromptPrefix = "Here is a Lean4 state:\n";
constexpr const char* kDistancePromptSuffix =
    "\n\n----------------\n"
    "Please tell me how many more tactic steps are needed to finish this state.\n";

std::string strip_template(const std::string& prompt, const std::string& prefix,
                           const std::string& suffix) {
    if (prompt.size() < prefix.size() + suffix.size() ||
        prompt.compare(0, prefix.size(), prefix) != 0 ||
        prompt.compare(prompt.size() - suffix.size(), suffix.size(), suffix) != 0)
        throw ParseError("prompt does not match the record template");
    return prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size());
}
}  // namespace

std::string to_string(RecordKind kind) {
    switch (kind) {
        case RecordKind::PolicyStep: return "policy_step";
        case RecordKind::DistanceLabel: return "distance_label";
        case RecordKind::PRMLabel: return "prm_label";
    }
    return "unknown";
}

RecordKind record_kind_from_string(const std::string& s) {
    if (s == "policy_step") return RecordKind::PolicyStep;
    if (s == "distance_label") return RecordKind::DistanceLabel;
    if (s == "prm_label") return RecordKind::PRMLabel;
    throw ParseError("unknown record kind: " + s);
}

std::string policy_prompt(const std::string& state_text) {
    return kPolicyPromptPrefix + state_text + kPolicyPromptSuffix;
}

std::string distance_prompt(const std::string& state_text) {
    return kDistancePromptPrefix + state_text + kDistancePromptSuffix;
}

std::string state_from_prompt(RecordKind kind, const std::string& prompt) {
    switch (kind) {
        case RecordKind::PolicyStep:
            return strip_template(prompt, kPolicyPromptPrefix, kPolicyPromptSuffix);
        case RecordKind::DistanceLabel:
            return strip_template(prompt, kDistancePromptPrefix, kDistancePromptSuffix);
        case RecordKind::PRMLabel:
            return prompt;  // PRM prompts are the bare state
    }
    throw ParseError("unknown record kind");
}

std::string records_to_jsonl(const std::vector<TrainingRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json j;
        j["kind"] = to_string(r.kind);
        j["statement_id"] = r.statement_id;
        j["prompt"] = r.prompt_text;
        j["target"] = r.target_text;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<TrainingRecord> records_from_jsonl(const std::string& text) {
    std::vector<TrainingRecord> records;
    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad record JSON: ") + e.what(), line_no);
        }
        try {
            TrainingRecord r;
            r.kind = record_kind_from_string(j.at("kind").get<std::string>());
            r.statement_id = j.at("statement_id").get<std::string>();
            r.prompt_text = j.at("prompt").get<std::string>();
            r.target_text = j.at("target").get<std::string>();
            r.state_text = state_from_prompt(r.kind, r.prompt_text);
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad record fields: ") + e.what(), line_no);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return records;
}

void save_records(const std::vector<TrainingRecord>& records,
                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentIOError("cannot write records file: " + path.string());
    out << records_to_jsonl(records);
}

std::vector<TrainingRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentIOError("cannot open records file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return records_from_jsonl(buf.str());
}

}  // namespace tacsearch
