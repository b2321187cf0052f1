#include "tgseg/runner.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tgseg/image_io.hpp"
#include "tgseg/overlay.hpp"
#include "tgseg/synthetic.hpp"

namespace tgseg {

namespace fs = std::filesystem;

std::vector<std::string> default_synonyms() {
    return {"hidden animal", "concealed animal", "disguised animal", "cryptic animal"};
}

void RunConfig::validate() const {
    require(!task_prompt.empty(), "task prompt is empty");
    require(chains >= 1, "chains must be >= 1");
    require(chains <= 1 + static_cast<int>(synonyms.size()),
            "chains = " + std::to_string(chains) + " needs " + std::to_string(chains - 1) + " synonyms, have " +
                std::to_string(synonyms.size()));
    require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
    require(upsample_factor > 0.0, "upsample factor must be positive");
    require(w_pic >= 0.0 && w_pic <= 1.0, "w_pic must lie in [0, 1]");
    require(iterations >= 1, "iterations must be >= 1");
    require(workers >= 1, "workers must be >= 1");
    require(!dataset_root.empty(), "dataset root not set");
    require(!out_dir.empty(), "output directory not set");
}

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p;
    p.prompt.text = task_prompt;
    p.prompt.synonyms.assign(synonyms.begin(), synonyms.begin() + (chains - 1));
    p.threshold = threshold;
    p.upsample_factor = upsample_factor;
    p.post = post;
    p.pmg.w_pic = w_pic;
    p.pmg.iterations = iterations;
    return p;
}

BackendOptions RunConfig::backend_options() const {
    BackendOptions o;
    o.seed = seed;
    o.attention = attention;
    o.fixture = fixture.empty() ? dataset_root / "fixture.json" : fixture;
    return o;
}

int RunSummary::succeeded() const {
    int n = 0;
    for (const auto& r : results) n += r.ok ? 1 : 0;
    return n;
}

int RunSummary::failed() const { return static_cast<int>(results.size()) - succeeded(); }

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::json points_json(const std::vector<Point>& pts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : pts) a.push_back({p.x, p.y});
    return a;
}

nlohmann::json trace_json(const std::string& stem, const IterationTrace& t) {
    nlohmann::json iters = nlohmann::json::array();
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        const auto& r = t.records[i];
        nlohmann::json box = nullptr;
        if (r.prompts.box) box = {r.prompts.box->x0, r.prompts.box->y0, r.prompts.box->x1, r.prompts.box->y1};
        iters.push_back({
            {"iteration", i + 1},
            {"input_digest", hex(r.input_digest)},
            {"lattice_side", r.heatmap.lattice.rows},
            {"heat_raw_range", {r.heatmap.raw_min, r.heatmap.raw_max}},
            {"positives", points_json(r.prompts.positives)},
            {"negatives", points_json(r.prompts.negatives)},
            {"box", box},
            {"dense_mask_prompt", r.prompts.mask.has_value()},
        });
    }
    return {
        {"image", stem},
        {"keywords", {{"fore", t.cctp.keywords.fore}, {"back", t.cctp.keywords.back}}},
        {"warnings", t.cctp.warnings},
        {"iterations", std::move(iters)},
        {"selected_iteration", t.selected_index},
        {"error", t.error},
    };
}

struct ImageOutcome {
    ImageResult result;
    std::vector<std::string> transcript_lines;
};

ImageOutcome process_image(const Sample& sample, const RunConfig& cfg, const PipelineConfig& pipe,
                           Backends& backends) {
    ImageOutcome out;
    out.result.stem = sample.stem;
    try {
        const Image image = read_image(sample.image_path);
        const BinaryMask gt = read_mask(sample.mask_path);
        if (gt.rows != image.height || gt.cols != image.width)
            throw IoError("mask size differs from image size");

        const IterationTrace trace = run_pmg(ImageRef{sample.stem, &image}, pipe, backends);
        for (const auto& t : trace.cctp.transcripts) out.transcript_lines.push_back(to_json(t, sample.stem).dump());
        out.result.completed_iters = static_cast<int>(trace.records.size());
        out.result.selected_iter = trace.selected_index;

        if (cfg.save_trace) {
            const fs::path dir = cfg.out_dir / "trace" / sample.stem;
            fs::create_directories(dir);
            for (std::size_t i = 0; i < trace.records.size(); ++i) {
                const std::string base = "iter_" + std::to_string(i + 1);
                write_heatmap(dir / (base + "_heatmap.png"), trace.records[i].heatmap.grid);
                write_mask(dir / (base + "_mask.png"), trace.records[i].mask);
            }
            if (trace.selected_index > 0) {
                const auto& sel = trace.records[trace.selected_index - 1];
                write_image(dir / "overlay.png", render_overlay(image, sel.mask, sel.heatmap.grid));
            }
            std::ofstream(dir / "summary.json") << trace_json(sample.stem, trace).dump(2) << "\n";
        }

        if (!trace.ok()) {
            out.result.error = trace.error;
            return out;
        }
        const BinaryMask& mask = trace.final_mask();
        write_mask(cfg.out_dir / "masks" / (sample.stem + ".png"), mask);
        out.result.metrics = evaluate(to_real(mask), gt);
        out.result.ok = true;
    } catch (const std::exception& e) {
        out.result.error = e.what();
    }
    return out;
}

void write_outputs(const RunSummary& summary, const RunConfig& cfg, const std::vector<ImageOutcome>& outcomes) {
    std::ofstream csv(cfg.out_dir / "metrics.csv");
    csv << "stem,status,mae,f_beta,e_phi,s_alpha,selected_iter,completed_iters,error\n";
    for (const auto& r : summary.results) {
        csv << r.stem << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok)
            csv << fmt(r.metrics.mae) << ',' << fmt(r.metrics.f_beta) << ',' << fmt(r.metrics.e_phi) << ','
                << fmt(r.metrics.s_alpha);
        else
            csv << ",,,";
        csv << ',' << r.selected_iter << ',' << r.completed_iters << ',' << csv_quote(r.error) << '\n';
    }
    std::ofstream(cfg.out_dir / "summary.md") << format_summary(summary, cfg);
    std::ofstream jl(cfg.out_dir / "transcripts.jsonl");
    for (const auto& o : outcomes)
        for (const auto& line : o.transcript_lines) jl << line << '\n';
}

} // namespace

std::string format_summary(const RunSummary& s, const RunConfig& cfg) {
    std::ostringstream o;
    o << "# Run summary: " << s.dataset << "\n\n";
    o << "task prompt: \"" << cfg.task_prompt << "\", chains " << cfg.chains << ", threshold " << fmt(cfg.threshold)
      << ", upsample factor " << fmt(cfg.upsample_factor) << ", w_pic " << fmt(cfg.w_pic) << ", iterations "
      << cfg.iterations << ", attention " << to_string(cfg.attention) << ", post " << to_string(cfg.post)
      << ", backend " << cfg.backend << ", seed " << cfg.seed << "\n\n";
    o << "images: " << s.results.size() << ", succeeded: " << s.succeeded() << ", failed: " << s.failed()
      << " (means are over succeeded images only)\n\n";
    o << "| Dataset | M | F_beta | E_phi | S_alpha |\n|---|---|---|---|---|\n";
    o << "| " << s.dataset << " | ";
    if (s.aggregate)
        o << fmt(s.aggregate->mae) << " | " << fmt(s.aggregate->f_beta) << " | " << fmt(s.aggregate->e_phi) << " | "
          << fmt(s.aggregate->s_alpha) << " |\n";
    else
        o << "- | - | - | - |\n";
    if (s.failed() > 0) {
        o << "\nFailed images:\n\n";
        for (const auto& r : s.results)
            if (!r.ok) o << "- " << r.stem << ": " << r.error << "\n";
    }
    return o.str();
}

RunSummary run_dataset(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    find_dataset(cfg.dataset_root);
    Backends backends = BackendRegistry::instance().create(cfg.backend, cfg.backend_options());
    return run_dataset(cfg, backends, log);
}

RunSummary run_dataset(const RunConfig& cfg, Backends& backends, std::ostream& log) {
    cfg.validate();
    if (cfg.workers > 1 && !backends.concurrent_safe())
        throw ContractViolation("backend '" + cfg.backend + "' is not safe for concurrent use; run with workers = 1");
    const DatasetSpec spec = find_dataset(cfg.dataset_root);
    const std::vector<Sample> samples = list_samples(spec);
    const PipelineConfig pipe = cfg.pipeline();
    fs::create_directories(cfg.out_dir / "masks");

    std::vector<ImageOutcome> outcomes(samples.size());
    std::mutex log_mu;
    auto work = [&](std::size_t i) {
        outcomes[i] = process_image(samples[i], cfg, pipe, backends);
        const auto& r = outcomes[i].result;
        std::lock_guard<std::mutex> lock(log_mu);
        log << "[" << (i + 1) << "/" << samples.size() << "] " << r.stem;
        if (r.ok)
            log << " ok iter=" << r.selected_iter << "/" << r.completed_iters << " M=" << fmt(r.metrics.mae) << "\n";
        else
            log << " FAILED: " << r.error << "\n";
    };

    if (cfg.workers == 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < samples.size(); i = next++) work(i);
            });
        for (auto& t : pool) t.join();
    }

    RunSummary summary;
    summary.dataset = spec.name;
    std::vector<MetricsRecord> good;
    for (const auto& o : outcomes) {
        summary.results.push_back(o.result);
        if (o.result.ok) good.push_back(o.result.metrics);
    }
    if (!good.empty()) summary.aggregate = aggregate(good);
    write_outputs(summary, cfg, outcomes);
    return summary;
}

SweepKnob parse_sweep_knob(const std::string& name) {
    if (name == "chains") return SweepKnob::chains;
    if (name == "factor") return SweepKnob::factor;
    if (name == "threshold") return SweepKnob::threshold;
    if (name == "post") return SweepKnob::post;
    throw ContractViolation("unknown sweep knob '" + name + "' (chains, factor, threshold, post)");
}

std::string to_string(SweepKnob knob) {
    switch (knob) {
    case SweepKnob::chains: return "chains";
    case SweepKnob::factor: return "factor";
    case SweepKnob::threshold: return "threshold";
    case SweepKnob::post: return "post";
    }
    return "?";
}

std::vector<std::string> sweep_values(SweepKnob knob) {
    switch (knob) {
    case SweepKnob::chains: return {"1", "2", "3", "4", "5"};
    case SweepKnob::factor: return {"0.5", "1", "2", "4", "8"};
    case SweepKnob::threshold: return {"0.80", "0.85", "0.90", "0.95"};
    case SweepKnob::post: return {"none", "maxbox", "mask", "maxioubox"};
    }
    return {};
}

RunConfig apply_sweep_value(RunConfig cfg, SweepKnob knob, const std::string& value) {
    switch (knob) {
    case SweepKnob::chains: cfg.chains = std::stoi(value); break;
    case SweepKnob::factor: cfg.upsample_factor = std::stod(value); break;
    case SweepKnob::threshold: cfg.threshold = std::stod(value); break;
    case SweepKnob::post: cfg.post = parse_post_mode(value); break;
    }
    return cfg;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, SweepKnob knob, std::ostream& log) {
    cfg.validate();
    find_dataset(cfg.dataset_root);
    Backends backends = BackendRegistry::instance().create(cfg.backend, cfg.backend_options());
    std::vector<SweepRow> rows;
    const std::string name = to_string(knob);
    for (const auto& value : sweep_values(knob)) {
        RunConfig sub = apply_sweep_value(cfg, knob, value);
        sub.out_dir = cfg.out_dir / ("sweep_" + name) / value;
        log << "== " << name << " = " << value << "\n";
        rows.push_back({value, run_dataset(sub, backends, log)});
    }
    fs::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir / ("sweep_" + name + ".csv"));
    csv << name << ",images,succeeded,failed,mae,f_beta,e_phi,s_alpha\n";
    for (const auto& r : rows) {
        csv << r.value << ',' << r.summary.results.size() << ',' << r.summary.succeeded() << ','
            << r.summary.failed();
        if (r.summary.aggregate)
            csv << ',' << fmt(r.summary.aggregate->mae) << ',' << fmt(r.summary.aggregate->f_beta) << ','
                << fmt(r.summary.aggregate->e_phi) << ',' << fmt(r.summary.aggregate->s_alpha) << '\n';
        else
            csv << ",,,,\n";
    }
    return rows;
}

void write_synthetic_dataset(const fs::path& root, int count, std::uint64_t seed, int size) {
    require(count >= 1, "synthetic dataset needs at least one scene");
    MockEncoderConfig ec;
    ec.seed = seed;
    const MockEncoder encoder(ec);
    SceneOptions so;
    so.rows = so.cols = size;
    so.seed = seed;
    const auto scenes = make_scenes(encoder, count, so);
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    for (const auto& s : scenes) {
        write_image(root / "images" / (s.id + ".png"), s.image);
        write_mask(root / "masks" / (s.id + ".png"), s.gt);
    }
    std::ofstream(root / "fixture.json") << make_fixture(scenes).dump(2) << "\n";
}

} // namespace tgseg
