#include "serialtrack/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>

namespace serialtrack {

namespace {

// Detections per section, sections indexed 0..T-1 (MOT frame - 1). Multiple
// detection files are merged over their frame numbers.
std::vector<std::vector<Detection>> load_detections(const SeriesStack& stack) {
    std::vector<std::vector<Detection>> sections(stack.sections);
    for (const std::string& rel : stack.detections) {
        const FrameSet fs = parse_mot15_file(stack.resolve(rel).string());
        if (fs.frame_count() > stack.sections)
            throw InconsistentStack(rel + " references frame " +
                                    std::to_string(fs.frame_count()) + " but the stack has " +
                                    std::to_string(stack.sections) + " sections");
        for (int f = 1; f <= fs.frame_count(); ++f)
            for (const FrameEntry& e : fs.frame(f))
                sections[f - 1].emplace_back(f - 1, e.box, e.conf);
    }
    return sections;
}

std::vector<BBox> section_boxes(const std::vector<Detection>& dets) {
    std::vector<BBox> boxes;
    boxes.reserve(dets.size());
    for (const Detection& d : dets) boxes.push_back(d.bounding_box());
    return boxes;
}

GridSpec grid_for_pair(const SeriesStack& stack, const std::vector<Correspondence>& corr,
                       const TpsConfig& tps) {
    double x0, y0, x1, y1;
    if (stack.domain) {
        x0 = stack.domain->x_min;
        y0 = stack.domain->y_min;
        x1 = stack.domain->x_max;
        y1 = stack.domain->y_max;
    } else {
        x0 = x1 = corr.front().p_target.x;
        y0 = y1 = corr.front().p_target.y;
        for (const Correspondence& c : corr) {
            x0 = std::min(x0, c.p_target.x);
            y0 = std::min(y0, c.p_target.y);
            x1 = std::max(x1, c.p_target.x);
            y1 = std::max(y1, c.p_target.y);
        }
    }
    GridSpec grid;
    grid.origin = {x0 - tps.padding, y0 - tps.padding};
    grid.spacing = tps.grid_spacing;
    grid.width =
        std::max(2, static_cast<int>(std::ceil((x1 - x0 + 2 * tps.padding) / tps.grid_spacing)) +
                        1);
    grid.height =
        std::max(2, static_cast<int>(std::ceil((y1 - y0 + 2 * tps.padding) / tps.grid_spacing)) +
                        1);
    return grid;
}

PairTransform fit_pair(const SeriesStack& stack, const PairSource& source,
                       const PipelineConfig& config) {
    if (!source.affine.empty()) {
        // Externally computed transform: ingest as-is.
        const AffineTransform2D affine = load_affine_text(stack.resolve(source.affine));
        std::optional<DisplacementField> field;
        if (!source.field.empty()) {
            const std::filesystem::path bin = stack.resolve(source.field);
            std::filesystem::path header = bin;
            header.replace_extension(".json");
            field = load_field(bin, header);
        }
        return build_pair_transform(source.source, source.target, affine, std::move(field),
                                    config.inversion.tol, config.inversion.max_iter);
    }

    const std::vector<Correspondence> corr =
        load_correspondences_csv(stack.resolve(source.correspondences));
    const RansacResult ransac = fit_affine_ransac(corr, config.ransac);

    std::optional<DisplacementField> field;
    if (config.tps.enabled) {
        std::vector<Correspondence> inliers;
        for (std::size_t i = 0; i < corr.size(); ++i)
            if (ransac.inlier_mask[i]) inliers.push_back(corr[i]);
        field = fit_tps(inliers, ransac.transform, config.tps.lambda,
                        grid_for_pair(stack, corr, config.tps));
    }
    return build_pair_transform(source.source, source.target, ransac.transform,
                                std::move(field), config.inversion.tol,
                                config.inversion.max_iter);
}

std::string pair_name(int s, int t) {
    return "(" + std::to_string(s) + "," + std::to_string(t) + ")";
}

// Adjacent pair flags from per-cycle reports: pair (t, t+1) carries the flag
// of cycle t; the final pair has no cycle of its own and inherits the last
// complete cycle's verdict.
std::vector<QaPairReport> pair_reports_from_cycles(const std::vector<CycleReport>& cycles,
                                                   int sections) {
    std::vector<QaPairReport> pairs;
    for (const CycleReport& c : cycles)
        pairs.push_back({c.t, c.median_iou, c.fc, c.indeterminate});
    if (sections >= 3 && !cycles.empty()) {
        QaPairReport last = pairs.back();
        last.t = sections - 2;
        pairs.push_back(last);
    }
    return pairs;
}

}  // namespace

int exit_code_for(const Error& e) {
    if (dynamic_cast<const InconsistentStack*>(&e) || dynamic_cast<const FrameMismatch*>(&e))
        return 4;
    if (dynamic_cast<const SingularTransform*>(&e) || dynamic_cast<const NonConvergent*>(&e) ||
        dynamic_cast<const DegenerateConfiguration*>(&e) ||
        dynamic_cast<const NoConsensus*>(&e) || dynamic_cast<const IllConditioned*>(&e) ||
        dynamic_cast<const InfeasiblePlacement*>(&e) || dynamic_cast<const FitFailure*>(&e))
        return 3;
    return 2;
}

void cmd_register(const SeriesStack& stack, const PipelineConfig& config,
                  const std::filesystem::path& out_dir) {
    config.validate();
    const int t_count = stack.sections;

    // Every adjacent and interleave pair must be declared and readable.
    std::vector<const PairSource*> work;
    std::string missing;
    for (int s = 0; s < t_count; ++s) {
        for (int delta : {1, 2}) {
            if (s + delta >= t_count) continue;
            const PairSource* src = stack.find_pair(s, s + delta);
            if (!src || (!src->correspondences.empty() &&
                         !std::filesystem::exists(stack.resolve(src->correspondences)))) {
                missing += (missing.empty() ? "" : ", ") + pair_name(s, s + delta);
                continue;
            }
            work.push_back(src);
        }
    }
    if (!missing.empty())
        throw MissingInput("no correspondences or transform for pairs: " + missing);

    std::map<std::pair<int, int>, PairTransform> transforms;
    std::string failures;
    for (const PairSource* src : work) {
        try {
            transforms.emplace(std::make_pair(src->source, src->target),
                               fit_pair(stack, *src, config));
        } catch (const NoConsensus& e) {
            failures += (failures.empty() ? "" : ", ") + pair_name(src->source, src->target) +
                        ": " + e.what();
        } catch (const DegenerateConfiguration& e) {
            failures += (failures.empty() ? "" : ", ") + pair_name(src->source, src->target) +
                        ": " + e.what();
        } catch (const NonConvergent& e) {
            failures += (failures.empty() ? "" : ", ") + pair_name(src->source, src->target) +
                        ": " + e.what();
        }
    }
    if (!failures.empty()) throw FitFailure("registration failed for pairs: " + failures);

    save_transforms(out_dir, transforms);
}

QaReport cmd_qa(const SeriesStack& stack, const std::filesystem::path& transforms_dir,
                const PipelineConfig& config, const std::filesystem::path& out_path) {
    config.validate();
    if (stack.sections < 3)
        throw InconsistentStack("cycle QA needs at least 3 sections, stack has " +
                                std::to_string(stack.sections));
    const auto transforms = load_transforms(transforms_dir, config.inversion);
    const auto detections = load_detections(stack);

    auto get = [&](int s, int t) -> const PairTransform& {
        const auto it = transforms.find({s, t});
        if (it == transforms.end())
            throw MissingInput("transform " + pair_name(s, t) + " absent from " +
                               transforms_dir.string());
        return it->second;
    };

    std::vector<CycleReport> cycles;
    for (int t = 0; t + 2 < stack.sections; ++t) {
        const CycleTriplet triplet(get(t, t + 1), get(t + 1, t + 2), get(t, t + 2));
        cycles.push_back(
            fc_score(section_boxes(detections[t]), triplet, config.q_threshold));
    }

    QaReport report;
    report.q = config.q_threshold;
    report.pairs = pair_reports_from_cycles(cycles, stack.sections);

    std::vector<int> flags;
    for (const QaPairReport& p : report.pairs) flags.push_back(p.fc);
    report.series_class = classify_series(flags).cls;

    // Shift simulation over the stack's own boxes, for comparison against
    // the configured q.
    std::vector<BBox> all_boxes;
    for (const auto& dets : detections)
        for (const Detection& d : dets) all_boxes.push_back(d.bounding_box());
    if (!all_boxes.empty())
        report.suggested_q =
            calibrate_q(all_boxes, config.calibration_shift, 100, config.ransac.seed);

    save_qa_report(report, out_path);
    return report;
}

TrackSummary cmd_track(const SeriesStack& stack, const std::filesystem::path& transforms_dir,
                       const std::filesystem::path& qa_path, bool assume_good,
                       const PipelineConfig& config, const std::filesystem::path& out_path) {
    config.validate();
    const auto detections = load_detections(stack);
    const auto transforms = load_transforms(transforms_dir, config.inversion);

    std::vector<PairFlag> flags(std::max(0, stack.sections - 1));
    if (!assume_good) {
        const QaReport qa = load_qa_report(qa_path);
        if (static_cast<int>(qa.pairs.size()) != stack.sections - 1)
            throw InconsistentStack("qa report covers " + std::to_string(qa.pairs.size()) +
                                    " pairs, stack needs " +
                                    std::to_string(stack.sections - 1));
        flags = qa.flags();
    }

    std::map<int, PairTransform> adjacent, interleave;
    for (const auto& [key, tr] : transforms) {
        if (key.second == key.first + 1) adjacent.emplace(key.first, tr);
        if (key.second == key.first + 2) interleave.emplace(key.first, tr);
    }

    DpaOptions options;
    options.s_threshold = config.s_threshold;
    options.shape_mode = config.shape_mode;
    options.hungarian_linking = config.hungarian_linking;
    const TrackSet tracks = dpa_track(detections, adjacent, interleave, flags, options);

    write_mot15_file(tracks_to_mot(tracks), out_path.string());

    TrackSummary summary;
    summary.track_count = static_cast<int>(tracks.size());
    for (const auto& [id, dets] : tracks) summary.detections += dets.size();
    return summary;
}

MotScore cmd_eval(const std::filesystem::path& gt_path,
                  const std::filesystem::path& results_path, const PipelineConfig& config,
                  const std::filesystem::path& out_json_path) {
    config.validate();
    const FrameSet gt = parse_mot15_file(gt_path.string());
    FrameSet hyp = parse_mot15_file(results_path.string());
    // A hypothesis may legitimately be silent on trailing frames.
    if (hyp.frame_count() < gt.frame_count()) hyp.resize_frames(gt.frame_count());

    const MotScore score = evaluate(gt, hyp, config.match_iou);
    save_score_json(score, out_json_path);
    return score;
}

void cmd_simulate(const SimConfig& cfg, const std::filesystem::path& out_dir) {
    const SimOutput sim = generate(cfg);

    std::filesystem::create_directories(out_dir / "pairs");

    FrameSet det_fs, gt_fs;
    for (int s = 0; s < cfg.sections; ++s)
        for (const Detection& d : sim.detections[s])
            det_fs.add(s + 1, FrameEntry(-1, d.bounding_box(), d.score.value_or(1.0)));
    det_fs.resize_frames(cfg.sections);
    for (const auto& [id, dets] : sim.truth.gt_tracks)
        for (const Detection& d : dets) gt_fs.add(d.section + 1, FrameEntry(id, d.bounding_box(), 1.0));
    gt_fs.resize_frames(cfg.sections);
    gt_fs.sort_frames();
    write_mot15_file(det_fs, (out_dir / "detections.txt").string());
    write_mot15_file(gt_fs, (out_dir / "gt.txt").string());

    SeriesStack stack;
    stack.sections = cfg.sections;
    stack.detections = {"detections.txt"};
    stack.domain = BBox(0, 0, cfg.domain_width, cfg.domain_height);
    stack.base = out_dir;
    for (const auto& [key, corr] : sim.truth.correspondences) {
        const std::string rel = "pairs/pair_" + std::to_string(key.first) + "_" +
                                std::to_string(key.second) + ".csv";
        save_correspondences_csv(out_dir / rel, corr);
        stack.pairs.push_back({key.first, key.second, rel, "", ""});
    }
    save_series_stack(stack, out_dir / "stack.json");

    nlohmann::json truth;
    truth["seed"] = cfg.seed;
    truth["sections"] = cfg.sections;
    truth["objects"] = cfg.objects;
    truth["gt_tracks"] = sim.truth.gt_tracks.size();
    truth["gt_detections"] = gt_fs.total_entries();
    truth["missing_sections"] = cfg.missing_sections;
    truth["failed_pairs"] = nlohmann::json::array();
    for (const auto& [pair, target] : sim.truth.corrupted_registrations)
        truth["failed_pairs"].push_back({{"pair", {pair.first, pair.second}},
                                         {"corrupted_registration", {target.first, target.second}}});
    truth["perturbations"] = sim.truth.perturbation_log;
    {
        std::ofstream out(out_dir / "truth.json");
        if (!out) throw MissingInput("cannot open truth.json for writing");
        out << truth.dump(2) << '\n';
    }
}

PipelineSummary cmd_pipeline(const std::filesystem::path& stack_manifest,
                             const PipelineConfig& config,
                             const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const SeriesStack stack = load_series_stack(stack_manifest);

    cmd_register(stack, config, out_dir / "transforms");

    PipelineSummary summary;
    summary.qa = cmd_qa(stack, out_dir / "transforms", config, out_dir / "qa.json");
    summary.tracking = cmd_track(stack, out_dir / "transforms", out_dir / "qa.json", false,
                                 config, out_dir / "results.txt");

    const std::filesystem::path gt = stack.base / "gt.txt";
    if (std::filesystem::exists(gt))
        summary.score = cmd_eval(gt, out_dir / "results.txt", config, out_dir / "scores.json");
    return summary;
}

}  // namespace serialtrack
