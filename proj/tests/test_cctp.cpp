#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <mutex>

#include "tgseg/cctp.hpp"

using namespace tgseg;
namespace fs = std::filesystem;

namespace {

// Answers from a small table; can fail the first `failures` calls.
class ScriptedQA : public CaptionQABackend {
  public:
    std::map<std::string, std::string> fore, back;
    int failures = 0;
    bool safe = true;
    std::vector<QaRequest> seen;
    int captions = 0;

    Capabilities capabilities() const override { return {safe, true}; }
    std::string caption(const ImageRef&) override {
        std::lock_guard<std::mutex> lock(mu_);
        ++captions;
        return "a picture";
    }
    std::string answer(const ImageRef&, const QaRequest& r) override {
        std::lock_guard<std::mutex> lock(mu_);
        if (failures > 0) {
            --failures;
            throw BackendError("transient");
        }
        seen.push_back(r);
        const auto& table = r.kind == QueryKind::foreground ? fore : back;
        auto it = table.find(r.slot);
        return it != table.end() ? it->second : table.at("*");
    }

  private:
    std::mutex mu_;
};

TaskPrompt camo() { return {"the camouflaged animal", {"hidden animal", "concealed animal"}}; }

} // namespace

TEST_SUITE("cctp") {

TEST_CASE("three chains with the quoted question pattern") {
    const auto chains = build_chains(camo());
    REQUIRE(chains.size() == 3);
    CHECK(chains[0].fore_question == "Name of the camouflaged animal in one word.");
    CHECK(chains[1].fore_question == "Name of the hidden animal in one word.");
    CHECK(chains[2].fore_question == "Name of the concealed animal in one word.");
    CHECK(chains[2].chain_index == 3);
    CHECK(PromptTemplates{}.back_question("grasshopper") == "Name of the background of the grasshopper in one word.");
}

TEST_CASE("no synonyms gives one chain; generic prompts are lowercased") {
    const auto chains = build_chains({"Polyp", {}});
    REQUIRE(chains.size() == 1);
    CHECK(chains[0].fore_question == "Name of the polyp in one word.");
    CHECK(TaskPrompt{"the camouflaged animal", {}}.head_noun() == "animal");
    CHECK_THROWS_AS(TaskPrompt({"", {}}).validate(), ContractViolation);
}

TEST_CASE("parse_keyword rules") {
    CHECK(parse_keyword("Grasshopper.") == "grasshopper");
    CHECK(parse_keyword("  A hidden LIZARD ") == "hidden lizard");
    CHECK(parse_keyword("I think it is a crab, maybe.") == "crab");
    CHECK(parse_keyword("a green grasshopper.") == "green grasshopper");
    CHECK(parse_keyword("The  sea   horse!  It hides.") == "sea horse");
    CHECK(parse_keyword("leaf-tailed gecko") == "leaf-tailed gecko");
    CHECK_FALSE(parse_keyword("").has_value());
    CHECK_FALSE(parse_keyword(" ... ").has_value());
    CHECK_FALSE(parse_keyword("the").has_value());
}

TEST_CASE("grasshopper fixture: one caption, 2J answers, background sees the foreground turn") {
    ScriptedQA qa;
    qa.fore = {{"*", "Grasshopper."}, {"concealed animal", "a green grasshopper."}};
    qa.back = {{"*", "grass"}, {"green grasshopper", "Leaves."}};
    const CctpResult r = run_cctp({"img", nullptr}, camo(), qa);
    CHECK(r.keywords.fore == std::vector<std::string>{"grasshopper", "grasshopper", "green grasshopper"});
    CHECK(r.keywords.back == std::vector<std::string>{"grass", "grass", "leaves"});
    CHECK(qa.captions == 1);
    CHECK(qa.seen.size() == 6);
    const QaRequest& back = qa.seen[1];
    CHECK(back.kind == QueryKind::background);
    CHECK(back.question == "Name of the background of the grasshopper in one word.");
    REQUIRE(back.history.size() == 1);
    CHECK(back.history[0].answer == "Grasshopper.");
    CHECK(back.caption == "a picture");
    CHECK(r.warnings.empty());
}

TEST_CASE("identical answers yield J duplicates") {
    ScriptedQA qa;
    qa.fore = {{"*", "frog"}};
    qa.back = {{"*", "moss"}};
    const CctpResult r = run_cctp({"img", nullptr}, camo(), qa);
    CHECK(r.keywords.fore == std::vector<std::string>(3, "frog"));
}

TEST_CASE("unparseable answers fall back and warn") {
    ScriptedQA qa;
    qa.fore = {{"*", "..."}};
    qa.back = {{"*", "?"}};
    const CctpResult r = run_cctp({"img", nullptr}, {"the camouflaged animal", {}}, qa);
    CHECK(r.keywords.fore == std::vector<std::string>{"animal"});
    CHECK(r.keywords.back == std::vector<std::string>{"background"});
    CHECK(r.transcripts[0].fore_fallback);
    CHECK(r.warnings.size() == 2);
}

TEST_CASE("transient backend errors are retried, persistent ones surface") {
    ScriptedQA qa;
    qa.fore = {{"*", "owl"}};
    qa.back = {{"*", "bark"}};
    qa.failures = 1;
    CHECK(run_cctp({"img", nullptr}, camo(), qa).keywords.fore[0] == "owl");
    qa.failures = 5;
    CHECK_THROWS_AS(run_cctp({"img", nullptr}, camo(), qa), BackendError);
}

TEST_CASE("permuting synonyms permutes the bundle") {
    ScriptedQA qa;
    qa.fore = {{"camouflaged animal", "toad"}, {"hidden animal", "moth"}, {"concealed animal", "crab"}};
    qa.back = {{"toad", "mud"}, {"moth", "bark"}, {"crab", "sand"}};
    const auto a = run_cctp({"img", nullptr}, camo(), qa);
    const auto b = run_cctp({"img", nullptr}, {"the camouflaged animal", {"concealed animal", "hidden animal"}}, qa);
    CHECK(a.keywords.fore == std::vector<std::string>{"toad", "moth", "crab"});
    CHECK(b.keywords.fore == std::vector<std::string>{"toad", "crab", "moth"});
    CHECK(b.keywords.back == std::vector<std::string>{"mud", "sand", "bark"});
}

TEST_CASE("parallel chains merge by chain index and match the serial transcript") {
    ScriptedQA qa;
    qa.fore = {{"camouflaged animal", "toad"}, {"hidden animal", "moth"}, {"concealed animal", "crab"}};
    qa.back = {{"*", "sand"}};
    CctpOptions par;
    par.parallel_chains = true;
    const auto a = run_cctp({"img", nullptr}, camo(), qa);
    const auto b = run_cctp({"img", nullptr}, camo(), qa, par);
    CHECK(a.keywords.fore == b.keywords.fore);
    for (std::size_t i = 0; i < 3; ++i) CHECK(to_json(a.transcripts[i], "img") == to_json(b.transcripts[i], "img"));
}

TEST_CASE("template file round-trip") {
    const fs::path dir = fs::temp_directory_path() / "tgseg_test_templates";
    fs::create_directories(dir);
    PromptTemplates t;
    t.fore = "Which {variant} is shown? One word.";
    t.save(dir / "t.txt");
    const auto r = PromptTemplates::load(dir / "t.txt");
    CHECK(r.fore == t.fore);
    CHECK(r.back == t.back);
    CHECK(r.version == 1);
    CHECK(r.fore_question("frog") == "Which frog is shown? One word.");
    std::ofstream(dir / "bad.txt") << "fore: no slot here\n";
    CHECK_THROWS(PromptTemplates::load(dir / "bad.txt"));
}

} // TEST_SUITE
