#pragma once

// Dataset runs, sweeps and synthetic dataset generation.
//
// A run writes, under the output directory:
//   masks/<stem>.png        final mask, 0 / 255
//   metrics.csv             one row per image
//   summary.md              aggregate over successful images
//   transcripts.jsonl       keyword chains per image
//   trace/<stem>/...        per-round heatmaps and masks (save_trace only)

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tgseg/backends.hpp"
#include "tgseg/metrics.hpp"
#include "tgseg/pmg.hpp"

namespace tgseg {

std::vector<std::string> default_synonyms();

struct RunConfig {
    std::string task_prompt = "the camouflaged animal";
    std::vector<std::string> synonyms = default_synonyms(); // chains 2..J draw from here in order
    int chains = 3;
    double threshold = 0.90;
    double upsample_factor = 2.0;
    double w_pic = 0.3;
    int iterations = 6;
    AttentionMode attention = AttentionMode::kkv;
    PostMode post = PostMode::max_iou_box;
    std::string backend = "mock";
    std::filesystem::path dataset_root;
    std::filesystem::path out_dir;
    std::filesystem::path fixture; // empty: <dataset_root>/fixture.json
    std::uint64_t seed = 7;
    bool save_trace = false;
    int workers = 1;

    void validate() const;
    PipelineConfig pipeline() const;
    BackendOptions backend_options() const;
};

struct ImageResult {
    std::string stem;
    bool ok = false;
    std::string error;
    MetricsRecord metrics;
    int selected_iter = 0;
    int completed_iters = 0;
};

struct RunSummary {
    std::string dataset;
    std::vector<ImageResult> results; // sorted by stem
    std::optional<MetricsRecord> aggregate; // over successes; absent if none

    int succeeded() const;
    int failed() const;
};

// Missing dataset paths and bad configs throw before any image is touched.
// Per-image failures are logged and recorded; the run continues.
RunSummary run_dataset(const RunConfig& cfg, std::ostream& log);
RunSummary run_dataset(const RunConfig& cfg, Backends& backends, std::ostream& log);

std::string format_summary(const RunSummary& summary, const RunConfig& cfg);

enum class SweepKnob { chains, factor, threshold, post };

SweepKnob parse_sweep_knob(const std::string& name);
std::string to_string(SweepKnob knob);
std::vector<std::string> sweep_values(SweepKnob knob);
RunConfig apply_sweep_value(RunConfig cfg, SweepKnob knob, const std::string& value);

struct SweepRow {
    std::string value;
    RunSummary summary;
};

// Each setting runs into <out>/sweep_<knob>/<value>/; rows go to <out>/sweep_<knob>.csv.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, SweepKnob knob, std::ostream& log);

// images/, masks/ and fixture.json for `count` synthetic scenes.
void write_synthetic_dataset(const std::filesystem::path& root, int count, std::uint64_t seed, int size = 64);

} // namespace tgseg
