#pragma once

// Cross-modal chains of keyword reasoning.
//
// One caption per image, then J independent chains. Chain j asks for the
// foreground object using the j-th variant of the task prompt, and then asks
// for the background of whatever keyword that answer produced.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tgseg/backends.hpp"

namespace tgseg {

struct TaskPrompt {
    std::string text;                  // e.g. "the camouflaged animal"
    std::vector<std::string> synonyms; // e.g. {"hidden animal", "concealed animal"}

    int chains() const { return 1 + static_cast<int>(synonyms.size()); }
    std::vector<std::string> variants() const; // normalized text, then synonyms
    std::string head_noun() const;             // last word of the normalized text
    void validate() const;
};

// Question templates. `{variant}` and `{fore_answer}` are substituted.
struct PromptTemplates {
    int version = 1;
    std::string fore = "Name of the {variant} in one word.";
    std::string back = "Name of the background of the {fore_answer} in one word.";

    // Plain text, one `key: template` per line; `#` starts a comment.
    // Keys: version, fore, back.
    static PromptTemplates load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::string fore_question(const std::string& variant) const;
    std::string back_question(const std::string& fore_answer) const;
};

struct ChainPlan {
    int chain_index = 1;
    std::string variant;
    std::string fore_question;
    std::string back_template; // still holds {fore_answer}
};

std::vector<ChainPlan> build_chains(const TaskPrompt& prompt, const PromptTemplates& templates = {});

struct ChainTranscript {
    int chain_index = 1;
    std::string caption;
    std::string fore_question;
    std::string fore_answer;
    std::string fore_keyword;
    bool fore_fallback = false;
    std::string back_question;
    std::string back_answer;
    std::string back_keyword;
    bool back_fallback = false;
};

nlohmann::json to_json(const ChainTranscript& t, const std::string& image_id);

struct KeywordBundle {
    std::vector<std::string> fore;
    std::vector<std::string> back;
};

struct CctpResult {
    KeywordBundle keywords;
    std::vector<ChainTranscript> transcripts;
    std::vector<std::string> warnings;
};

struct CctpOptions {
    PromptTemplates templates;
    bool parallel_chains = false; // honored only for concurrent-safe backends
    int max_attempts = 2;         // per query, on BackendError
};

// Lowercases, keeps the first sentence and first clause, drops lead-in
// phrases ("i think", "it is", ...), leading articles and edge punctuation.
// Returns nullopt when nothing is left.
std::optional<std::string> parse_keyword(const std::string& raw_answer);

CctpResult run_cctp(const ImageRef& image, const TaskPrompt& prompt, CaptionQABackend& qa,
                    const CctpOptions& options = {});

} // namespace tgseg
