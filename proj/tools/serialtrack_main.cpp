#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "serialtrack/kernels.hpp"
#include "serialtrack/pipeline.hpp"

namespace fs = std::filesystem;
using namespace serialtrack;

namespace {

struct CommonOpts {
    std::string config_path;
    int jobs = 0;
    long long seed = -1;
    double s_threshold = -1;
    double q_threshold = -1;
    std::string shape_mode;

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_pipeline_config(config_path);
        if (seed >= 0) cfg.ransac.seed = static_cast<std::uint64_t>(seed);
        if (s_threshold > 0) cfg.s_threshold = s_threshold;
        if (q_threshold > 0) cfg.q_threshold = q_threshold;
        if (shape_mode == "box") cfg.shape_mode = ShapeMode::box;
        if (shape_mode == "circle") cfg.shape_mode = ShapeMode::circle;
        cfg.validate();
        if (jobs > 0) kernels::set_max_threads(jobs);
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON");
    cmd->add_option("--jobs", opts.jobs, "max worker threads");
    cmd->add_option("--seed", opts.seed, "override the RANSAC seed");
    cmd->add_option("--s-threshold", opts.s_threshold, "association IoU threshold");
    cmd->add_option("--q-threshold", opts.q_threshold, "cycle-consistency threshold");
    cmd->add_option("--shape-mode", opts.shape_mode, "box|circle")
        ->check(CLI::IsMember({"box", "circle"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serialtrack: registration-based multi-object tracking across serial sections"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
    std::string sim_config_path, sim_out = "dataset";
    long long sim_seed = -1;
    sim_cmd->add_option("--config", sim_config_path, "simulation config JSON");
    sim_cmd->add_option("--out", sim_out, "output dataset directory");
    sim_cmd->add_option("--seed", sim_seed, "override the config seed");

    // register
    auto* reg_cmd = app.add_subcommand("register", "fit pair-wise transforms");
    CommonOpts reg_opts;
    std::string reg_stack, reg_out = "transforms";
    reg_cmd->add_option("--stack", reg_stack, "stack manifest JSON")->required();
    reg_cmd->add_option("--out", reg_out, "output transform directory");
    add_common(reg_cmd, reg_opts);

    // qa
    auto* qa_cmd = app.add_subcommand("qa", "cycle-consistency quality assurance");
    CommonOpts qa_opts;
    std::string qa_stack, qa_transforms = "transforms", qa_out = "qa.json";
    qa_cmd->add_option("--stack", qa_stack, "stack manifest JSON")->required();
    qa_cmd->add_option("--transforms", qa_transforms, "transform directory");
    qa_cmd->add_option("--out", qa_out, "QA report path");
    add_common(qa_cmd, qa_opts);

    // track
    auto* track_cmd = app.add_subcommand("track", "dual-path association");
    CommonOpts track_opts;
    std::string track_stack, track_transforms = "transforms", track_qa = "qa.json";
    std::string track_out = "results.txt";
    bool assume_good = false;
    track_cmd->add_option("--stack", track_stack, "stack manifest JSON")->required();
    track_cmd->add_option("--transforms", track_transforms, "transform directory");
    track_cmd->add_option("--qa", track_qa, "QA report path");
    track_cmd->add_option("--out", track_out, "MOT15 results path");
    track_cmd->add_flag("--assume-good", assume_good, "skip the QA report, treat all pairs as good");
    add_common(track_cmd, track_opts);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "MOT metrics against ground truth");
    CommonOpts eval_opts;
    std::string eval_gt, eval_results, eval_out = "scores.json";
    double eval_match_iou = -1;
    eval_cmd->add_option("--gt", eval_gt, "ground-truth MOT15 file")->required();
    eval_cmd->add_option("--results", eval_results, "tracking results MOT15 file")->required();
    eval_cmd->add_option("--out", eval_out, "score JSON path");
    eval_cmd->add_option("--match-iou", eval_match_iou, "evaluation match threshold");
    add_common(eval_cmd, eval_opts);

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "register + qa + track + eval");
    CommonOpts pipe_opts;
    std::string pipe_stack, pipe_out = "run";
    pipe_cmd->add_option("--stack", pipe_stack, "stack manifest JSON")->required();
    pipe_cmd->add_option("--out", pipe_out, "output directory");
    add_common(pipe_cmd, pipe_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) {
            SimConfig cfg;
            if (!sim_config_path.empty()) cfg = load_sim_config(sim_config_path);
            if (sim_seed >= 0) cfg.seed = static_cast<std::uint64_t>(sim_seed);
            cfg.validate();
            cmd_simulate(cfg, sim_out);
            std::cout << "dataset written to " << sim_out << " (" << cfg.sections
                      << " sections, " << cfg.objects << " objects, seed " << cfg.seed << ")\n";
        } else if (reg_cmd->parsed()) {
            const PipelineConfig cfg = reg_opts.resolve();
            const SeriesStack stack = load_series_stack(reg_stack);
            cmd_register(stack, cfg, reg_out);
            std::cout << "transforms written to " << reg_out << "\n";
        } else if (qa_cmd->parsed()) {
            const PipelineConfig cfg = qa_opts.resolve();
            const SeriesStack stack = load_series_stack(qa_stack);
            const QaReport report = cmd_qa(stack, qa_transforms, cfg, qa_out);
            int failed = 0;
            for (const auto& p : report.pairs) failed += p.fc;
            std::cout << "series class: " << to_string(report.series_class) << " (" << failed
                      << " of " << report.pairs.size() << " pairs flagged, q=" << report.q
                      << ")\n";
        } else if (track_cmd->parsed()) {
            const PipelineConfig cfg = track_opts.resolve();
            const SeriesStack stack = load_series_stack(track_stack);
            const TrackSummary summary =
                cmd_track(stack, track_transforms, track_qa, assume_good, cfg, track_out);
            std::cout << summary.track_count << " tracks over " << summary.detections
                      << " detections -> " << track_out << "\n";
        } else if (eval_cmd->parsed()) {
            PipelineConfig cfg = eval_opts.resolve();
            if (eval_match_iou > 0) cfg.match_iou = eval_match_iou;
            const MotScore score = cmd_eval(eval_gt, eval_results, cfg, eval_out);
            std::cout << format_score_table(score);
        } else if (pipe_cmd->parsed()) {
            const PipelineConfig cfg = pipe_opts.resolve();
            const PipelineSummary summary = cmd_pipeline(pipe_stack, cfg, pipe_out);
            std::cout << "series class: " << to_string(summary.qa.series_class) << "\n";
            std::cout << summary.tracking.track_count << " tracks over "
                      << summary.tracking.detections << " detections\n";
            if (summary.score) std::cout << format_score_table(*summary.score);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
