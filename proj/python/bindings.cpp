#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tgseg/cctp.hpp"
#include "tgseg/heatmap.hpp"
#include "tgseg/image_io.hpp"
#include "tgseg/metrics.hpp"
#include "tgseg/overlay.hpp"
#include "tgseg/pmg.hpp"
#include "tgseg/runner.hpp"
#include "tgseg/spatial_attention.hpp"
#include "tgseg/synthetic.hpp"
#include "tgseg/visual_prompts.hpp"

namespace py = pybind11;
using namespace tgseg;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Image to_image(const RealArray& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw ContractViolation("image must be H x W or H x W x C");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    Image img(h, w, c);
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

RealArray from_image(const Image& img) {
    RealArray a({img.height, img.width, img.channels});
    std::copy(img.data.begin(), img.data.end(), a.mutable_data());
    return a;
}

RealGrid to_grid(const RealArray& a) {
    if (a.ndim() != 2) throw ContractViolation("expected a 2-D array");
    RealGrid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), g.data.begin());
    return g;
}

RealArray from_grid(const RealGrid& g) {
    RealArray a({g.rows, g.cols});
    std::copy(g.data.begin(), g.data.end(), a.mutable_data());
    return a;
}

BinaryMask to_mask(const ByteArray& a) {
    if (a.ndim() != 2) throw ContractViolation("expected a 2-D mask");
    BinaryMask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    for (py::ssize_t i = 0; i < a.size(); ++i) m.data[i] = a.data()[i] ? 1 : 0;
    return m;
}

ByteArray from_mask(const BinaryMask& m) {
    ByteArray a({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), a.mutable_data());
    return a;
}

py::object box_or_none(const std::optional<Box>& b) {
    if (!b) return py::none();
    return py::make_tuple(b->x0, b->y0, b->x1, b->y1);
}

std::vector<std::pair<double, double>> point_list(const std::vector<Point>& pts) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : pts) out.emplace_back(p.x, p.y);
    return out;
}

HeadProjections projections(const Matrix& w_k, const Matrix& w_q, const Matrix& w_v, int heads,
                            std::optional<double> scale) {
    auto p = HeadProjections::with_default_scale(w_k, w_q, w_v, heads);
    if (scale) p.scale = *scale;
    return p;
}

py::dict metrics_dict(const MetricsRecord& r) {
    py::dict d;
    d["mae"] = r.mae;
    d["f_beta"] = r.f_beta;
    d["e_phi"] = r.e_phi;
    d["s_alpha"] = r.s_alpha;
    return d;
}

std::vector<TextFeature> text_features(const std::vector<Vector>& vs, Polarity pol) {
    std::vector<TextFeature> out;
    for (std::size_t i = 0; i < vs.size(); ++i) out.push_back({vs[i], "", static_cast<int>(i) + 1, pol});
    return out;
}

} // namespace

PYBIND11_MODULE(tgseg, m) {
    m.doc() = "Training-free text-prompted segmentation: attention heatmaps, visual prompts, progressive refinement";

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<DegenerateFeature>(m, "DegenerateFeature", PyExc_ArithmeticError);
    py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

    m.def(
        "attention",
        [](const Matrix& tokens, const Matrix& w_k, const Matrix& w_q, const Matrix& w_v, int heads,
           const std::string& mode, std::optional<double> scale) {
            return attention(TokenFeatures{tokens, 1}, projections(w_k, w_q, w_v, heads, scale),
                             parse_attention_mode(mode));
        },
        py::arg("tokens"), py::arg("w_k"), py::arg("w_q"), py::arg("w_v"), py::arg("heads") = 1,
        py::arg("mode") = "kkv", py::arg("scale") = py::none());

    m.def(
        "dual_path_step",
        [](const Matrix& s, std::optional<Matrix> alt, int m_index, int delta, const Matrix& w_k, const Matrix& w_q,
           const Matrix& w_v, int heads, const std::string& mode) {
            std::optional<TokenFeatures> a;
            if (alt) a = TokenFeatures{*alt, m_index};
            BlockConfig cfg{delta, parse_attention_mode(mode), {}};
            auto out = dual_path_step(TokenFeatures{s, m_index}, a, m_index, cfg,
                                      projections(w_k, w_q, w_v, heads, std::nullopt));
            std::optional<Matrix> alt_next;
            if (out.alt_next) alt_next = out.alt_next->tokens;
            return py::make_tuple(out.next.tokens, alt_next);
        },
        py::arg("s"), py::arg("alt"), py::arg("m"), py::arg("delta"), py::arg("w_k"), py::arg("w_q"), py::arg("w_v"),
        py::arg("heads") = 1, py::arg("mode") = "kkv");

    m.def(
        "consensus_heatmap",
        [](const Matrix& patches, int grid_side, const std::vector<Vector>& fore, const std::vector<Vector>& back,
           double factor, int rows, int cols) {
            const ImageFeatures img{patches, grid_side};
            const Heatmap h = consensus_heatmap(img, text_features(fore, Polarity::foreground),
                                                text_features(back, Polarity::background), factor, rows, cols);
            py::dict d;
            d["grid"] = from_grid(h.grid);
            d["lattice"] = from_grid(h.lattice);
            d["raw_range"] = py::make_tuple(h.raw_min, h.raw_max);
            return d;
        },
        py::arg("patches"), py::arg("grid_side"), py::arg("fore"), py::arg("back"), py::arg("factor") = 2.0,
        py::arg("rows"), py::arg("cols"));

    m.def(
        "bilinear_resize", [](const RealArray& g, int rows, int cols) { return from_grid(bilinear_resize(to_grid(g), rows, cols)); },
        py::arg("grid"), py::arg("rows"), py::arg("cols"));
    m.def(
        "minmax_normalize", [](const RealArray& g) { return from_grid(minmax_normalize(to_grid(g)).first); },
        py::arg("grid"));

    m.def(
        "extract_points",
        [](const RealArray& lattice, double threshold, int rows, int cols) {
            const PromptSet p = extract_points(to_grid(lattice), threshold, rows, cols);
            return py::make_tuple(point_list(p.positives), point_list(p.negatives));
        },
        py::arg("lattice"), py::arg("threshold") = 0.9, py::arg("rows"), py::arg("cols"));
    m.def(
        "connected_components",
        [](const ByteArray& mask) {
            py::list out;
            for (const auto& c : connected_components(to_mask(mask)))
                out.append(py::make_tuple(box_or_none(c.box), c.pixel_count));
            return out;
        },
        py::arg("mask"));
    m.def(
        "max_iou_box", [](const ByteArray& mask) { return box_or_none(max_iou_box(to_mask(mask))); }, py::arg("mask"));
    m.def("max_box", [](const ByteArray& mask) { return box_or_none(max_box(to_mask(mask))); }, py::arg("mask"));

    m.def(
        "reweight",
        [](const RealArray& image, const RealArray& heat, double w_pic) {
            return from_image(reweight(to_image(image), to_grid(heat), w_pic));
        },
        py::arg("image"), py::arg("heat"), py::arg("w_pic") = 0.3);
    m.def(
        "select_final",
        [](const std::vector<ByteArray>& masks, const std::string& norm) {
            std::vector<BinaryMask> ms;
            for (const auto& a : masks) ms.push_back(to_mask(a));
            if (norm != "l1" && norm != "l2") throw ContractViolation("norm must be 'l1' or 'l2'");
            const Selection s = select_final(ms, norm == "l1" ? SelectionNorm::l1 : SelectionNorm::l2);
            return py::make_tuple(s.index, from_grid(s.mean_mask));
        },
        py::arg("masks"), py::arg("norm") = "l1");

    m.def("parse_keyword", &parse_keyword, py::arg("answer"));

    m.def("mae", [](const RealArray& p, const ByteArray& g) { return mae(to_grid(p), to_mask(g)); });
    m.def("adaptive_f", [](const RealArray& p, const ByteArray& g) { return adaptive_f(to_grid(p), to_mask(g)); });
    m.def("e_measure", [](const RealArray& p, const ByteArray& g) { return e_measure(to_grid(p), to_mask(g)); });
    m.def("s_measure", [](const RealArray& p, const ByteArray& g) { return s_measure(to_grid(p), to_mask(g)); });
    m.def("evaluate", [](const RealArray& p, const ByteArray& g) { return metrics_dict(evaluate(to_grid(p), to_mask(g))); });
    m.def("iou", [](const ByteArray& a, const ByteArray& b) { return iou(to_mask(a), to_mask(b)); });

    py::class_<MockEncoder, std::shared_ptr<MockEncoder>>(m, "MockEncoder")
        .def(py::init([](std::uint64_t seed, int grid_side, int width, int heads, int layers, int delta,
                         const std::string& mode) {
                 MockEncoderConfig c{seed, grid_side, width, heads, layers, delta, parse_attention_mode(mode)};
                 return std::make_shared<MockEncoder>(c);
             }),
             py::arg("seed") = 7, py::arg("grid_side") = 16, py::arg("width") = 32, py::arg("heads") = 4,
             py::arg("layers") = 4, py::arg("delta") = 2, py::arg("mode") = "kkv")
        .def_property_readonly("grid_side", &MockEncoder::grid_side)
        .def_property_readonly("channels", &MockEncoder::channels)
        .def("encode_image",
             [](const MockEncoder& e, const RealArray& image) {
                 const EncodedImage enc = e.encode_image(to_image(image));
                 return py::make_tuple(enc.original.patch_features, enc.alternate.patch_features);
             })
        .def("encode_text", &MockEncoder::encode_text)
        .def("keyword_color", &MockEncoder::keyword_color);

    m.def(
        "make_scene",
        [](int index, std::uint64_t seed, int size) {
            MockEncoderConfig ec;
            ec.seed = seed;
            const MockEncoder enc(ec);
            SceneOptions so;
            so.rows = so.cols = size;
            so.seed = seed;
            const SyntheticScene s = make_scene(enc, index, so);
            py::dict d;
            d["id"] = s.id;
            d["image"] = from_image(s.image);
            d["gt"] = from_mask(s.gt);
            d["fore_keyword"] = s.fore_keyword;
            d["back_keyword"] = s.back_keyword;
            d["has_distractor"] = s.has_distractor;
            return d;
        },
        py::arg("index"), py::arg("seed") = 7, py::arg("size") = 64);

    m.def(
        "segment_synthetic",
        [](int index, std::uint64_t seed, int iterations, double threshold, double factor, double w_pic,
           const std::string& post, const std::string& attention) {
            MockEncoderConfig ec;
            ec.seed = seed;
            ec.mode = parse_attention_mode(attention);
            auto enc = std::make_shared<MockEncoder>(ec);
            SceneOptions so;
            so.seed = seed;
            const SyntheticScene s = make_scene(*enc, index, so);
            Backends b{std::make_shared<MockCaptionQA>(make_fixture({s})), enc, std::make_shared<MockSegmenter>()};
            PipelineConfig cfg;
            cfg.threshold = threshold;
            cfg.upsample_factor = factor;
            cfg.post = parse_post_mode(post);
            cfg.pmg.iterations = iterations;
            cfg.pmg.w_pic = w_pic;
            const IterationTrace t = run_pmg(ImageRef{s.id, &s.image}, cfg, b);
            if (!t.ok()) throw BackendError(t.error);
            py::list masks, heat;
            for (const auto& r : t.records) {
                masks.append(from_mask(r.mask));
                heat.append(from_grid(r.heatmap.grid));
            }
            py::dict d;
            d["masks"] = masks;
            d["heatmaps"] = heat;
            d["selected"] = t.selected_index;
            d["fore_keywords"] = t.cctp.keywords.fore;
            d["back_keywords"] = t.cctp.keywords.back;
            d["gt"] = from_mask(s.gt);
            return d;
        },
        py::arg("index"), py::arg("seed") = 7, py::arg("iterations") = 6, py::arg("threshold") = 0.9,
        py::arg("factor") = 2.0, py::arg("w_pic") = 0.3, py::arg("post") = "maxioubox", py::arg("attention") = "kkv");

    m.def(
        "render_overlay",
        [](const RealArray& image, const ByteArray& mask, const RealArray& heat) {
            return from_image(render_overlay(to_image(image), to_mask(mask), to_grid(heat)));
        },
        py::arg("image"), py::arg("mask"), py::arg("heat"));

    m.def("write_synthetic_dataset", &write_synthetic_dataset, py::arg("root"), py::arg("count") = 5,
          py::arg("seed") = 7, py::arg("size") = 64);

    m.def(
        "run_dataset",
        [](const std::filesystem::path& dataset_root, const std::filesystem::path& out, int chains, double threshold,
           double factor, double w_pic, int iterations, const std::string& attention, const std::string& post,
           std::uint64_t seed, bool save_trace) {
            RunConfig cfg;
            cfg.dataset_root = dataset_root;
            cfg.out_dir = out;
            cfg.chains = chains;
            cfg.threshold = threshold;
            cfg.upsample_factor = factor;
            cfg.w_pic = w_pic;
            cfg.iterations = iterations;
            cfg.attention = parse_attention_mode(attention);
            cfg.post = parse_post_mode(post);
            cfg.seed = seed;
            cfg.save_trace = save_trace;
            std::ostringstream log;
            const RunSummary s = run_dataset(cfg, log);
            py::dict d;
            d["dataset"] = s.dataset;
            d["succeeded"] = s.succeeded();
            d["failed"] = s.failed();
            d["aggregate"] = s.aggregate ? py::object(metrics_dict(*s.aggregate)) : py::none();
            d["log"] = log.str();
            return d;
        },
        py::arg("dataset_root"), py::arg("out"), py::arg("chains") = 3, py::arg("threshold") = 0.9,
        py::arg("factor") = 2.0, py::arg("w_pic") = 0.3, py::arg("iterations") = 6, py::arg("attention") = "kkv",
        py::arg("post") = "maxioubox", py::arg("seed") = 7, py::arg("save_trace") = false);
}
