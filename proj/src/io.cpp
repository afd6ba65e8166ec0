#include "serialtrack/io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "serialtrack/textio.hpp"

namespace serialtrack {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw MalformedLine(e.byte, path.string() + ": " + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw MissingInput("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out.flush()) throw MissingInput("failed writing " + path.string());
}

ShapeMode shape_mode_from_string(const std::string& s) {
    if (s == "box") return ShapeMode::box;
    if (s == "circle") return ShapeMode::circle;
    throw DegenerateConfiguration("shape_mode must be \"box\" or \"circle\", got \"" + s + "\"");
}

SeriesClass series_class_from_string(const std::string& s) {
    if (s == "Good") return SeriesClass::Good;
    if (s == "Acceptable") return SeriesClass::Acceptable;
    if (s == "Bad") return SeriesClass::Bad;
    throw DegenerateConfiguration("unknown series class \"" + s + "\"");
}

}  // namespace

const PairSource* SeriesStack::find_pair(int source, int target) const {
    for (const PairSource& p : pairs)
        if (p.source == source && p.target == target) return &p;
    return nullptr;
}

void PipelineConfig::validate() const {
    if (s_threshold <= 0 || s_threshold >= 1 || q_threshold <= 0 || q_threshold >= 1 ||
        match_iou <= 0 || match_iou >= 1)
        throw DegenerateConfiguration("thresholds must lie in (0, 1)");
    if (ransac.max_iterations < 1 || ransac.inlier_threshold <= 0 ||
        ransac.min_inlier_fraction <= 0 || ransac.min_inlier_fraction > 1)
        throw DegenerateConfiguration("invalid ransac parameters");
    if (tps.lambda < 0 || tps.grid_spacing <= 0)
        throw DegenerateConfiguration("invalid tps parameters");
    if (inversion.tol <= 0 || inversion.max_iter < 1)
        throw DegenerateConfiguration("invalid inversion parameters");
}

std::vector<PairFlag> QaReport::flags() const {
    std::vector<PairFlag> out;
    out.reserve(pairs.size());
    for (const QaPairReport& p : pairs) out.push_back({p.fc, p.indeterminate});
    return out;
}

void save_correspondences_csv(const std::filesystem::path& path,
                              const std::vector<Correspondence>& corr) {
    std::ofstream out(path);
    if (!out) throw MissingInput("cannot open " + path.string() + " for writing");
    out << "src_x,src_y,dst_x,dst_y,weight\n";
    for (const Correspondence& c : corr)
        out << format_double(c.p_source.x) << ',' << format_double(c.p_source.y) << ','
            << format_double(c.p_target.x) << ',' << format_double(c.p_target.y) << ','
            << format_double(c.weight) << '\n';
    if (!out.flush()) throw MissingInput("failed writing " + path.string());
}

std::vector<Correspondence> load_correspondences_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw MalformedLine(1, "empty correspondence file");
    ++line_no;
    if (trim(line) != "src_x,src_y,dst_x,dst_y,weight")
        throw MalformedLine(1, "missing correspondence CSV header");

    std::vector<Correspondence> corr;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view sv = trim(line);
        if (sv.empty()) continue;
        const auto fields = split_csv(sv);
        if (fields.size() != 5)
            throw MalformedLine(line_no, "expected 5 fields, got " +
                                             std::to_string(fields.size()));
        double v[5];
        for (int i = 0; i < 5; ++i) {
            const auto parsed = parse_double_field(fields[i]);
            if (!parsed) throw MalformedLine(line_no, "field " + std::to_string(i + 1) +
                                                          " is not a number");
            v[i] = *parsed;
        }
        if (v[4] < 0) throw MalformedLine(line_no, "weight must be >= 0");
        corr.push_back({{v[0], v[1]}, {v[2], v[3]}, v[4]});
    }
    return corr;
}

void save_affine_text(const std::filesystem::path& path, const AffineTransform2D& t) {
    std::ofstream out(path);
    if (!out) throw MissingInput("cannot open " + path.string() + " for writing");
    const auto m = t.matrix();
    for (int r = 0; r < 3; ++r)
        out << format_double(m[r * 3]) << ' ' << format_double(m[r * 3 + 1]) << ' '
            << format_double(m[r * 3 + 2]) << '\n';
    if (!out.flush()) throw MissingInput("failed writing " + path.string());
}

AffineTransform2D load_affine_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open " + path.string());
    double m[9];
    for (int i = 0; i < 9; ++i)
        if (!(in >> m[i]))
            throw MalformedLine(i / 3 + 1, path.string() + ": expected 9 matrix entries");
    if (m[6] != 0.0 || m[7] != 0.0 || m[8] != 1.0)
        throw MalformedLine(3, path.string() + ": last row must be 0 0 1");
    return {m[0], m[1], m[2], m[3], m[4], m[5]};
}

void save_field(const std::filesystem::path& bin_path, const std::filesystem::path& json_path,
                const DisplacementField& f) {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw MissingInput("cannot open " + bin_path.string() + " for writing");
    auto write_plane = [&](const std::vector<double>& plane) {
        for (double v : plane) {
            const float x = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&x), sizeof(float));
        }
    };
    write_plane(f.dx());
    write_plane(f.dy());
    if (!out.flush()) throw MissingInput("failed writing " + bin_path.string());

    json sidecar;
    sidecar["origin"] = {f.origin().x, f.origin().y};
    sidecar["spacing"] = f.spacing();
    sidecar["width"] = f.width();
    sidecar["height"] = f.height();
    sidecar["order"] = "dx then dy, row-major";
    write_json(sidecar, json_path);
}

DisplacementField load_field(const std::filesystem::path& bin_path,
                             const std::filesystem::path& json_path) {
    const json sidecar = read_json(json_path);
    const int width = sidecar.at("width").get<int>();
    const int height = sidecar.at("height").get<int>();
    const double spacing = sidecar.at("spacing").get<double>();
    const auto origin = sidecar.at("origin");
    if (!origin.is_array() || origin.size() != 2)
        throw MalformedLine(1, json_path.string() + ": origin must be [x, y]");

    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw MissingInput("cannot open " + bin_path.string());
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<float> raw(2 * n);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(2 * n * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != 2 * n * sizeof(float))
        throw MalformedLine(1, bin_path.string() + ": truncated field data");

    std::vector<double> dx(n), dy(n);
    for (std::size_t i = 0; i < n; ++i) {
        dx[i] = raw[i];
        dy[i] = raw[n + i];
    }
    return {{origin[0].get<double>(), origin[1].get<double>()}, spacing, width, height,
            std::move(dx), std::move(dy)};
}

SeriesStack load_series_stack(const std::filesystem::path& manifest_path) {
    const json j = read_json(manifest_path);
    SeriesStack stack;
    stack.base = manifest_path.parent_path();
    stack.sections = j.at("sections").get<int>();
    const auto& dets = j.at("detections");
    if (dets.is_string())
        stack.detections.push_back(dets.get<std::string>());
    else
        stack.detections = dets.get<std::vector<std::string>>();
    stack.unit_scale_um = j.value("unit_scale_um", 1.0);
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        stack.domain = BBox(d.at("x_min").get<double>(), d.at("y_min").get<double>(),
                            d.at("x_max").get<double>(), d.at("y_max").get<double>());
    }
    for (const auto& p : j.at("pairs")) {
        PairSource src;
        src.source = p.at("source").get<int>();
        src.target = p.at("target").get<int>();
        src.correspondences = p.value("correspondences", "");
        src.affine = p.value("affine", "");
        src.field = p.value("field", "");
        if (src.correspondences.empty() && src.affine.empty())
            throw MalformedLine(1, "pair " + std::to_string(src.source) + "->" +
                                       std::to_string(src.target) +
                                       " names neither correspondences nor a transform");
        stack.pairs.push_back(std::move(src));
    }
    if (stack.sections < 1) throw InconsistentStack("stack needs at least one section");
    return stack;
}

void save_series_stack(const SeriesStack& stack, const std::filesystem::path& manifest_path) {
    json j;
    j["sections"] = stack.sections;
    if (stack.detections.size() == 1)
        j["detections"] = stack.detections.front();
    else
        j["detections"] = stack.detections;
    j["unit_scale_um"] = stack.unit_scale_um;
    if (stack.domain) {
        j["domain"] = {{"x_min", stack.domain->x_min},
                       {"y_min", stack.domain->y_min},
                       {"x_max", stack.domain->x_max},
                       {"y_max", stack.domain->y_max}};
    }
    j["pairs"] = json::array();
    for (const PairSource& p : stack.pairs) {
        json e;
        e["source"] = p.source;
        e["target"] = p.target;
        if (!p.correspondences.empty()) e["correspondences"] = p.correspondences;
        if (!p.affine.empty()) e["affine"] = p.affine;
        if (!p.field.empty()) e["field"] = p.field;
        j["pairs"].push_back(e);
    }
    write_json(j, manifest_path);
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    const json j = read_json(path);
    PipelineConfig cfg;
    cfg.s_threshold = j.value("s_threshold", cfg.s_threshold);
    cfg.q_threshold = j.value("q_threshold", cfg.q_threshold);
    cfg.match_iou = j.value("match_iou", cfg.match_iou);
    cfg.calibration_shift = j.value("calibration_shift", cfg.calibration_shift);
    cfg.hungarian_linking = j.value("hungarian_linking", cfg.hungarian_linking);
    if (j.contains("shape_mode"))
        cfg.shape_mode = shape_mode_from_string(j.at("shape_mode").get<std::string>());
    if (j.contains("ransac")) {
        const auto& r = j.at("ransac");
        cfg.ransac.max_iterations = r.value("max_iterations", cfg.ransac.max_iterations);
        cfg.ransac.inlier_threshold = r.value("inlier_threshold", cfg.ransac.inlier_threshold);
        cfg.ransac.min_inlier_fraction =
            r.value("min_inlier_fraction", cfg.ransac.min_inlier_fraction);
        cfg.ransac.seed = r.value("seed", cfg.ransac.seed);
        if (r.value("model", std::string("full")) == "similarity")
            cfg.ransac.model = AffineModel::similarity;
    }
    if (j.contains("tps")) {
        const auto& t = j.at("tps");
        cfg.tps.enabled = t.value("enabled", cfg.tps.enabled);
        cfg.tps.lambda = t.value("lambda", cfg.tps.lambda);
        cfg.tps.grid_spacing = t.value("grid_spacing", cfg.tps.grid_spacing);
        cfg.tps.padding = t.value("padding", cfg.tps.padding);
    }
    if (j.contains("inversion")) {
        const auto& i = j.at("inversion");
        cfg.inversion.tol = i.value("tol", cfg.inversion.tol);
        cfg.inversion.max_iter = i.value("max_iter", cfg.inversion.max_iter);
    }
    cfg.validate();
    return cfg;
}

void save_pipeline_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
    json j;
    j["s_threshold"] = cfg.s_threshold;
    j["q_threshold"] = cfg.q_threshold;
    j["match_iou"] = cfg.match_iou;
    j["calibration_shift"] = cfg.calibration_shift;
    j["hungarian_linking"] = cfg.hungarian_linking;
    j["shape_mode"] = cfg.shape_mode == ShapeMode::box ? "box" : "circle";
    j["ransac"] = {{"max_iterations", cfg.ransac.max_iterations},
                   {"inlier_threshold", cfg.ransac.inlier_threshold},
                   {"min_inlier_fraction", cfg.ransac.min_inlier_fraction},
                   {"seed", cfg.ransac.seed},
                   {"model", cfg.ransac.model == AffineModel::full ? "full" : "similarity"}};
    j["tps"] = {{"enabled", cfg.tps.enabled},
                {"lambda", cfg.tps.lambda},
                {"grid_spacing", cfg.tps.grid_spacing},
                {"padding", cfg.tps.padding}};
    j["inversion"] = {{"tol", cfg.inversion.tol}, {"max_iter", cfg.inversion.max_iter}};
    write_json(j, path);
}

SimConfig load_sim_config(const std::filesystem::path& path) {
    const json j = read_json(path);
    SimConfig cfg;
    cfg.sections = j.value("sections", cfg.sections);
    cfg.objects = j.value("objects", cfg.objects);
    cfg.object_diameter_mean = j.value("object_diameter_mean", cfg.object_diameter_mean);
    cfg.object_diameter_sigma = j.value("object_diameter_sigma", cfg.object_diameter_sigma);
    cfg.diameter_clamp_sigmas = j.value("diameter_clamp_sigmas", cfg.diameter_clamp_sigmas);
    cfg.section_thickness = j.value("section_thickness", cfg.section_thickness);
    cfg.domain_width = j.value("domain_width", cfg.domain_width);
    cfg.domain_height = j.value("domain_height", cfg.domain_height);
    cfg.rotation_jitter = j.value("rotation_jitter", cfg.rotation_jitter);
    cfg.translation_jitter = j.value("translation_jitter", cfg.translation_jitter);
    cfg.scale_jitter = j.value("scale_jitter", cfg.scale_jitter);
    cfg.deformation_amplitude = j.value("deformation_amplitude", cfg.deformation_amplitude);
    cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
    cfg.false_positive_rate = j.value("false_positive_rate", cfg.false_positive_rate);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.min_slice_radius = j.value("min_slice_radius", cfg.min_slice_radius);
    cfg.correspondences_per_pair =
        j.value("correspondences_per_pair", cfg.correspondences_per_pair);
    if (j.contains("missing_sections"))
        cfg.missing_sections = j.at("missing_sections").get<std::vector<int>>();
    if (j.contains("failed_pairs")) {
        for (const auto& p : j.at("failed_pairs")) {
            if (!p.is_array() || p.size() != 2)
                throw DegenerateConfiguration("failed_pairs entries must be [t, t+1]");
            cfg.failed_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
        }
    }
    cfg.validate();
    return cfg;
}

void save_sim_config(const SimConfig& cfg, const std::filesystem::path& path) {
    json j;
    j["sections"] = cfg.sections;
    j["objects"] = cfg.objects;
    j["object_diameter_mean"] = cfg.object_diameter_mean;
    j["object_diameter_sigma"] = cfg.object_diameter_sigma;
    j["diameter_clamp_sigmas"] = cfg.diameter_clamp_sigmas;
    j["section_thickness"] = cfg.section_thickness;
    j["domain_width"] = cfg.domain_width;
    j["domain_height"] = cfg.domain_height;
    j["rotation_jitter"] = cfg.rotation_jitter;
    j["translation_jitter"] = cfg.translation_jitter;
    j["scale_jitter"] = cfg.scale_jitter;
    j["deformation_amplitude"] = cfg.deformation_amplitude;
    j["dropout_rate"] = cfg.dropout_rate;
    j["false_positive_rate"] = cfg.false_positive_rate;
    j["missing_sections"] = cfg.missing_sections;
    j["failed_pairs"] = json::array();
    for (const auto& [a, b] : cfg.failed_pairs) j["failed_pairs"].push_back({a, b});
    j["seed"] = cfg.seed;
    j["min_slice_radius"] = cfg.min_slice_radius;
    j["correspondences_per_pair"] = cfg.correspondences_per_pair;
    write_json(j, path);
}

namespace {

std::string pair_stem(int source, int target) {
    return "pair_" + std::to_string(source) + "_" + std::to_string(target);
}

}  // namespace

void save_transforms(const std::filesystem::path& dir,
                     const std::map<std::pair<int, int>, PairTransform>& transforms) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["pairs"] = json::array();
    for (const auto& [key, tr] : transforms) {
        const std::string stem = pair_stem(key.first, key.second);
        save_affine_text(dir / (stem + ".affine.txt"), tr.affine());
        json entry;
        entry["source"] = key.first;
        entry["target"] = key.second;
        entry["affine"] = stem + ".affine.txt";
        if (tr.field()) {
            save_field(dir / (stem + ".field.bin"), dir / (stem + ".field.json"), *tr.field());
            entry["field"] = stem + ".field.bin";
            entry["field_header"] = stem + ".field.json";
        }
        manifest["pairs"].push_back(entry);
    }
    write_json(manifest, dir / "manifest.json");
}

std::map<std::pair<int, int>, PairTransform> load_transforms(const std::filesystem::path& dir,
                                                             const InversionConfig& inversion) {
    const json manifest = read_json(dir / "manifest.json");
    std::map<std::pair<int, int>, PairTransform> out;
    for (const auto& entry : manifest.at("pairs")) {
        const int source = entry.at("source").get<int>();
        const int target = entry.at("target").get<int>();
        const AffineTransform2D affine =
            load_affine_text(dir / entry.at("affine").get<std::string>());
        std::optional<DisplacementField> field;
        if (entry.contains("field"))
            field = load_field(dir / entry.at("field").get<std::string>(),
                               dir / entry.at("field_header").get<std::string>());
        out.emplace(std::make_pair(source, target),
                    build_pair_transform(source, target, affine, std::move(field),
                                         inversion.tol, inversion.max_iter));
    }
    return out;
}

void save_qa_report(const QaReport& report, const std::filesystem::path& path) {
    json j;
    j["q"] = report.q;
    j["suggested_q"] = report.suggested_q;
    j["series_class"] = to_string(report.series_class);
    j["pairs"] = json::array();
    for (const QaPairReport& p : report.pairs) {
        j["pairs"].push_back({{"t", p.t},
                              {"median_iou", p.median_iou},
                              {"fc", p.fc},
                              {"indeterminate", p.indeterminate}});
    }
    write_json(j, path);
}

QaReport load_qa_report(const std::filesystem::path& path) {
    const json j = read_json(path);
    QaReport report;
    report.q = j.at("q").get<double>();
    report.suggested_q = j.value("suggested_q", 0.0);
    report.series_class = series_class_from_string(j.at("series_class").get<std::string>());
    for (const auto& p : j.at("pairs")) {
        report.pairs.push_back({p.at("t").get<int>(), p.at("median_iou").get<double>(),
                                p.at("fc").get<int>(), p.value("indeterminate", false)});
    }
    return report;
}

void save_score_json(const MotScore& s, const std::filesystem::path& path) {
    json j;
    j["idf1"] = s.idf1;
    j["idp"] = s.idp;
    j["idr"] = s.idr;
    j["rcll"] = s.rcll;
    j["prcn"] = s.prcn;
    j["far"] = s.far;
    j["gt"] = s.gt;
    j["mt"] = s.mt;
    j["pt"] = s.pt;
    j["ml"] = s.ml;
    j["fp"] = s.fp;
    j["fn"] = s.fn;
    j["ids"] = s.ids;
    j["fm"] = s.fm;
    j["mota"] = s.mota;
    j["motp"] = s.motp;
    j["motal"] = s.motal;
    write_json(j, path);
}

}  // namespace serialtrack
