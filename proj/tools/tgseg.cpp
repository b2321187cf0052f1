// Command-line front end: run, sweep, synth.
//
// Option values are layered: config file < TGSEG_* environment < flags.
// TGSEG_SYNONYM takes a comma-separated list.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tgseg/runner.hpp"

namespace {

struct Options {
    tgseg::RunConfig run;
    std::string attention = "kkv";
    std::string post = "maxioubox";
    std::string knob = "chains";
    std::string config;
    int count = 5;
    int size = 64;
};

void add_run_options(CLI::App* sub, Options& o) {
    auto& r = o.run;
    sub->add_option("--config", o.config, "TOML/INI file with option defaults");
    sub->add_option("--task-prompt", r.task_prompt, "generic task description")->capture_default_str();
    sub->add_option("--synonym", r.synonyms, "synonym for chains 2..J (repeatable, in order)");
    sub->add_option("--chains", r.chains, "number of keyword chains J")->capture_default_str();
    sub->add_option("--threshold", r.threshold, "relative heat threshold for positive points")->capture_default_str();
    sub->add_option("--upsample-factor", r.upsample_factor, "lattice upsampling factor")->capture_default_str();
    sub->add_option("--w-pic", r.w_pic, "reweighting strength")->capture_default_str();
    sub->add_option("--iters", r.iterations, "refinement rounds")->capture_default_str();
    sub->add_option("--attention", o.attention, "kkv, vvv or kqv")->capture_default_str();
    sub->add_option("--post", o.post, "none, maxbox, mask or maxioubox")->capture_default_str();
    sub->add_option("--backend", r.backend, "backend name")->capture_default_str();
    sub->add_option("--dataset-root", r.dataset_root, "dataset directory");
    sub->add_option("--out", r.out_dir, "output directory");
    sub->add_option("--fixture", r.fixture, "caption/QA fixture (default <dataset-root>/fixture.json)");
    sub->add_option("--seed", r.seed, "mock backend seed")->capture_default_str();
    sub->add_flag("--save-trace", r.save_trace, "write per-round heatmaps, masks and an overlay");
    sub->add_option("--workers", r.workers, "images processed in parallel")->capture_default_str();
}

struct Cli {
    CLI::App app{"Text-prompted training-free segmentation"};
    Options opts;
    CLI::App* run = nullptr;
    CLI::App* sweep = nullptr;
    CLI::App* synth = nullptr;

    Cli() {
        app.require_subcommand(1);
        run = app.add_subcommand("run", "segment a dataset and score it");
        add_run_options(run, opts);
        sweep = app.add_subcommand("sweep", "run one ablation knob over its settings");
        add_run_options(sweep, opts);
        sweep->add_option("--knob", opts.knob, "chains, factor, threshold or post")->capture_default_str();
        synth = app.add_subcommand("synth", "write a synthetic dataset with a matching fixture");
        synth->add_option("--out", opts.run.out_dir, "dataset directory")->required();
        synth->add_option("--count", opts.count, "number of scenes")->capture_default_str();
        synth->add_option("--size", opts.size, "image side in pixels")->capture_default_str();
        synth->add_option("--seed", opts.run.seed, "scene and encoder seed")->capture_default_str();
    }

    CLI::App* selected() const {
        for (auto* s : {run, sweep, synth})
            if (s->parsed()) return s;
        return nullptr;
    }
};

std::string env_name(const std::string& long_name) {
    std::string s = "TGSEG_";
    for (char c : long_name) s += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string normalize_key(std::string k) {
    std::replace(k.begin(), k.end(), '_', '-');
    return k;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');)
        if (!part.empty()) out.push_back(part);
    return out;
}

// Arguments that fill every option not given on the command line,
// from the environment first and the config file second.
std::vector<std::string> layered_arguments(CLI::App* sub, const std::string& config_path) {
    std::map<std::string, std::vector<std::string>> from_file;
    if (!config_path.empty()) {
        for (const auto& item : CLI::ConfigTOML().from_file(config_path)) {
            if (item.name == "++" || item.name == "--") continue;
            from_file[normalize_key(item.name)] = item.inputs;
        }
    }
    std::set<std::string> known;
    std::vector<std::string> extra;
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string name = opt->get_lnames().front();
        known.insert(name);
        if (name == "config" || name == "help" || opt->count() > 0) continue;

        std::vector<std::string> values;
        if (const char* env = std::getenv(env_name(name).c_str()); env && *env) {
            values = name == "synonym" ? split_commas(env) : std::vector<std::string>{env};
        } else if (auto it = from_file.find(name); it != from_file.end()) {
            values = it->second;
        } else {
            continue;
        }
        for (const auto& v : values) extra.push_back("--" + name + "=" + v);
    }
    for (const auto& [key, _] : from_file)
        if (!known.count(key)) throw CLI::ValidationError("config", "unknown key '" + key + "' in " + config_path);
    return extra;
}

int execute(Options& o, const std::string& command) {
    if (command == "synth") {
        tgseg::write_synthetic_dataset(o.run.out_dir, o.count, o.run.seed, o.size);
        std::cout << "wrote " << o.count << " scenes to " << o.run.out_dir.string() << "\n";
        return 0;
    }
    o.run.attention = tgseg::parse_attention_mode(o.attention);
    o.run.post = tgseg::parse_post_mode(o.post);
    if (command == "run") {
        const auto summary = tgseg::run_dataset(o.run, std::cerr);
        std::cout << tgseg::format_summary(summary, o.run);
        return summary.succeeded() > 0 || summary.results.empty() ? 0 : 1;
    }
    const auto rows = tgseg::run_sweep(o.run, tgseg::parse_sweep_knob(o.knob), std::cerr);
    std::cout << "wrote " << rows.size() << " rows to "
              << (o.run.out_dir / ("sweep_" + o.knob + ".csv")).string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string command;
    std::vector<std::string> extra;
    {
        Cli first;
        try {
            first.app.parse(argc, argv);
            CLI::App* sub = first.selected();
            command = sub->get_name();
            std::string config = first.opts.config;
            if (config.empty())
                if (const char* env = std::getenv("TGSEG_CONFIG")) config = env;
            if (command != "synth") extra = layered_arguments(sub, config);
        } catch (const CLI::ParseError& e) {
            return first.app.exit(e);
        }
    }

    Cli cli;
    args.insert(args.end(), extra.begin(), extra.end());
    std::reverse(args.begin(), args.end());
    try {
        cli.app.parse(args);
    } catch (const CLI::ParseError& e) {
        return cli.app.exit(e);
    }
    try {
        return execute(cli.opts, command);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
