#include "tgseg/cctp.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <future>
#include <sstream>

namespace tgseg {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::string join(const std::vector<std::string>& ws, std::size_t from = 0) {
    std::string out;
    for (std::size_t i = from; i < ws.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += ws[i];
    }
    return out;
}

bool is_article(const std::string& w) { return w == "a" || w == "an" || w == "the"; }

// Normalized task phrase: lowercase, single spaces, no leading article.
std::string normalize_phrase(const std::string& s) {
    auto ws = words(lower(s));
    std::size_t i = 0;
    while (i < ws.size() && is_article(ws[i])) ++i;
    return join(ws, i);
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    const std::string needle = "{" + key + "}";
    for (auto pos = tmpl.find(needle); pos != std::string::npos; pos = tmpl.find(needle, pos + value.size()))
        tmpl.replace(pos, needle.size(), value);
    return tmpl;
}

const std::vector<std::vector<std::string>>& lead_ins() {
    static const std::vector<std::vector<std::string>> phrases = {
        {"the", "answer", "is"}, {"answer", "is"}, {"i", "think"}, {"i", "believe"}, {"it", "is"},
        {"it's"},                {"this", "is"},   {"that", "is"}, {"there", "is"},  {"they", "are"},
        {"it", "looks", "like"}, {"looks", "like"}, {"probably"},  {"maybe"},
    };
    return phrases;
}

template <class F>
auto with_retry(int attempts, F&& f) {
    for (int i = 1;; ++i) {
        try {
            return f();
        } catch (const BackendError&) {
            if (i >= std::max(1, attempts)) throw;
        }
    }
}

} // namespace

std::vector<std::string> TaskPrompt::variants() const {
    std::vector<std::string> out{normalize_phrase(text)};
    for (const auto& s : synonyms) out.push_back(normalize_phrase(s));
    return out;
}

std::string TaskPrompt::head_noun() const {
    const auto ws = words(normalize_phrase(text));
    return ws.empty() ? std::string("object") : ws.back();
}

void TaskPrompt::validate() const {
    require(!normalize_phrase(text).empty(), "TaskPrompt: empty task text");
    for (const auto& s : synonyms) require(!normalize_phrase(s).empty(), "TaskPrompt: empty synonym");
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("cannot open prompt templates: " + path.string());
    PromptTemplates t;
    bool have_version = false;
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto colon = line.find(':');
        require(colon != std::string::npos, path.string() + ":" + std::to_string(lineno) + ": expected 'key: value'");
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (key == "version") {
            t.version = std::stoi(value);
            have_version = true;
        } else if (key == "fore") {
            t.fore = value;
        } else if (key == "back") {
            t.back = value;
        } else {
            throw ContractViolation(path.string() + ":" + std::to_string(lineno) + ": unknown template key '" + key + "'");
        }
    }
    require(have_version, path.string() + ": missing version line");
    require(t.fore.find("{variant}") != std::string::npos, "fore template lacks {variant}");
    require(t.back.find("{fore_answer}") != std::string::npos, "back template lacks {fore_answer}");
    return t;
}

void PromptTemplates::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ContractViolation("cannot write prompt templates: " + path.string());
    out << "# chain question templates\n"
        << "version: " << version << '\n'
        << "fore: " << fore << '\n'
        << "back: " << back << '\n';
}

std::string PromptTemplates::fore_question(const std::string& variant) const {
    return substitute(fore, "variant", variant);
}

std::string PromptTemplates::back_question(const std::string& fore_answer) const {
    return substitute(back, "fore_answer", fore_answer);
}

std::vector<ChainPlan> build_chains(const TaskPrompt& prompt, const PromptTemplates& templates) {
    prompt.validate();
    std::vector<ChainPlan> plans;
    int j = 1;
    for (const auto& v : prompt.variants()) {
        plans.push_back(ChainPlan{j++, v, templates.fore_question(v), templates.back});
    }
    return plans;
}

std::optional<std::string> parse_keyword(const std::string& raw_answer) {
    std::string s = lower(raw_answer);
    if (auto cut = s.find_first_of(".!?\n"); cut != std::string::npos) s.resize(cut);
    if (auto cut = s.find_first_of(",;:"); cut != std::string::npos) s.resize(cut);

    // Punctuation becomes whitespace, except hyphens and apostrophes inside words.
    for (std::size_t i = 0; i < s.size(); ++i) {
        const unsigned char c = s[i];
        if (std::isalnum(c) || std::isspace(c)) continue;
        const bool inner = i > 0 && i + 1 < s.size() && std::isalnum(static_cast<unsigned char>(s[i - 1])) &&
                           std::isalnum(static_cast<unsigned char>(s[i + 1]));
        if ((c == '-' || c == '\'') && inner) continue;
        s[i] = ' ';
    }

    auto ws = words(s);
    std::size_t i = 0;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& phrase : lead_ins()) {
            if (ws.size() - i > phrase.size() && std::equal(phrase.begin(), phrase.end(), ws.begin() + i)) {
                i += phrase.size();
                changed = true;
            }
        }
        while (i + 1 < ws.size() && is_article(ws[i])) {
            ++i;
            changed = true;
        }
    }
    std::string out = join(ws, i);
    if (out.empty() || (ws.size() - i == 1 && is_article(ws[i]))) return std::nullopt;
    return out;
}

nlohmann::json to_json(const ChainTranscript& t, const std::string& image_id) {
    return nlohmann::json{
        {"image", image_id},
        {"chain", t.chain_index},
        {"caption", t.caption},
        {"fore_question", t.fore_question},
        {"fore_answer", t.fore_answer},
        {"fore_keyword", t.fore_keyword},
        {"fore_fallback", t.fore_fallback},
        {"back_question", t.back_question},
        {"back_answer", t.back_answer},
        {"back_keyword", t.back_keyword},
        {"back_fallback", t.back_fallback},
    };
}

CctpResult run_cctp(const ImageRef& image, const TaskPrompt& prompt, CaptionQABackend& qa, const CctpOptions& options) {
    const auto plans = build_chains(prompt, options.templates);
    const std::string caption = with_retry(options.max_attempts, [&] { return qa.caption(image); });

    auto run_chain = [&](const ChainPlan& plan) {
        ChainTranscript t;
        t.chain_index = plan.chain_index;
        t.caption = caption;

        QaRequest fore;
        fore.kind = QueryKind::foreground;
        fore.template_id = "fore";
        fore.slot = plan.variant;
        fore.caption = caption;
        fore.question = plan.fore_question;
        t.fore_question = plan.fore_question;
        t.fore_answer = with_retry(options.max_attempts, [&] { return qa.answer(image, fore); });
        if (auto kw = parse_keyword(t.fore_answer)) {
            t.fore_keyword = *kw;
        } else {
            t.fore_keyword = prompt.head_noun();
            t.fore_fallback = true;
        }

        QaRequest back;
        back.kind = QueryKind::background;
        back.template_id = "back";
        back.slot = t.fore_keyword;
        back.caption = caption;
        back.history = {QaTurn{t.fore_question, t.fore_answer}};
        back.question = options.templates.back_question(t.fore_keyword);
        t.back_question = back.question;
        t.back_answer = with_retry(options.max_attempts, [&] { return qa.answer(image, back); });
        if (auto kw = parse_keyword(t.back_answer)) {
            t.back_keyword = *kw;
        } else {
            t.back_keyword = "background";
            t.back_fallback = true;
        }
        return t;
    };

    CctpResult result;
    result.transcripts.resize(plans.size());
    if (options.parallel_chains && qa.capabilities().concurrent_safe && plans.size() > 1) {
        std::vector<std::future<ChainTranscript>> futures;
        for (const auto& p : plans) futures.push_back(std::async(std::launch::async, run_chain, std::cref(p)));
        for (std::size_t i = 0; i < futures.size(); ++i) result.transcripts[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < plans.size(); ++i) result.transcripts[i] = run_chain(plans[i]);
    }

    for (const auto& t : result.transcripts) {
        result.keywords.fore.push_back(t.fore_keyword);
        result.keywords.back.push_back(t.back_keyword);
        if (t.fore_fallback)
            result.warnings.push_back(image.id + ": chain " + std::to_string(t.chain_index) +
                                      ": unparseable foreground answer, using '" + t.fore_keyword + "'");
        if (t.back_fallback)
            result.warnings.push_back(image.id + ": chain " + std::to_string(t.chain_index) +
                                      ": unparseable background answer, using 'background'");
    }
    return result;
}

} // namespace tgseg
