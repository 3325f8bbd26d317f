#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dqe/errors.hpp"
#include "dqe/evaluate.hpp"
#include "dqe/fixture.hpp"
#include "dqe/pipeline.hpp"

namespace {

using namespace dqe;

struct GlobalArgs {
    std::string config_path;
    std::string state_dir;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

PipelineConfig load_config(const GlobalArgs& g) {
    if (g.config_path.empty()) {
        throw UsageError("--config is required for pipeline commands");
    }
    PipelineConfig cfg = PipelineConfig::load(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

void print_stage_result(const StageResult& r) {
    std::printf("%-10s %s\n", to_string(r.stage).c_str(),
                r.skipped ? "up to date (manifest hit)" : "done");
}

int run_stages(const GlobalArgs& g, PipelineConfig cfg, const std::vector<Stage>& stages) {
    Pipeline pipeline(std::move(cfg), g.state_dir, g.force);
    StateLock lock(pipeline.state_dir());
    for (Stage s : stages) print_stage_result(pipeline.run_stage(s));
    return 0;
}

int cmd_significance(const std::string& corpus_path, const std::string& format,
                     const std::string& a_path, const std::string& b_path,
                     const std::string& out_path) {
    LoadOptions opts;
    LabeledCorpus corpus = load_corpus(corpus_path, corpus_format_from_string(format), opts);

    auto predictions_for = [&](const std::filesystem::path& p) {
        auto raws = read_raw_predictions(p);
        std::vector<std::string> ids;
        ids.reserve(raws.size());
        for (const auto& [id, _] : raws) ids.push_back(id);
        PredictContext ctx{corpus, ids, nullptr, nullptr};
        PredictorBackend backend;
        backend.kind = PredictorBackend::Kind::file_import;
        backend.file = p;
        return predict_all(ctx, backend);
    };
    auto preds_a = predictions_for(a_path);
    auto preds_b = predictions_for(b_path);

    auto va = correctness_vector(preds_a);
    auto vb = correctness_vector(preds_b);
    if (va.size() != vb.size()) {
        throw UsageError("prediction files cover different numbers of ids (" +
                         std::to_string(va.size()) + " vs " + std::to_string(vb.size()) + ")");
    }
    SignificanceResult r = paired_t_test(va, vb);
    std::cout << render_significance_table(r, va.size());
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        out << r.to_json().dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dqe: diversity-first sampling, misprediction triage and judge-verified "
                 "noise removal for labeled text datasets"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "pipeline configuration file (JSON)");
    app.add_option("--state-dir", g.state_dir, "state directory (default: config output_dir)");
    app.add_option("--seed", g.seed, "override the configured seed");
    app.add_flag("--force", g.force, "rerun stages even when the manifest says up to date");

    // one subcommand per stage
    for (Stage s : kStageOrder) app.add_subcommand(to_string(s), "run the " + to_string(s) + " stage");

    auto* predict_cmd = app.get_subcommand("predict");
    std::string predict_backend, predict_in, predict_out;
    predict_cmd->add_option("--backend", predict_backend, "file|http|baseline");
    predict_cmd->add_option("--in", predict_in, "predictions file for the file backend");
    predict_cmd->add_option("--out", predict_out, "also copy the predictions artifact here");

    auto* judge_cmd = app.get_subcommand("judge");
    std::string judge_client, judge_report, judge_out;
    judge_cmd->add_option("--client", judge_client, "http|oracle");
    judge_cmd->add_option("--noisy-report", judge_report, "triage report to adjudicate");
    judge_cmd->add_option("--out", judge_out, "also copy the verdicts artifact here");

    auto* sample_cmd = app.get_subcommand("sample");
    std::optional<std::size_t> sample_k;
    std::optional<std::uint64_t> sample_seed;
    std::string sample_metric;
    sample_cmd->add_option("--k", sample_k, "number of samples to select (default n/2)");
    sample_cmd->add_option("--seed", sample_seed, "sampler seed");
    sample_cmd->add_option("--metric", sample_metric, "cosine_distance|euclidean");

    auto* run_cmd = app.add_subcommand("run", "run stages in order (default: all)");
    std::vector<std::string> run_stages_arg;
    run_cmd->add_option("stages", run_stages_arg, "stage names or 'all'");

    auto* fixture_cmd = app.add_subcommand("fixture", "generate a synthetic corpus with "
                                                      "planted noise and coverage gaps");
    FixtureSpec fspec;
    std::string fixture_out = "fixture";
    fixture_cmd->add_option("--out", fixture_out, "output directory");
    fixture_cmd->add_option("--n", fspec.n, "total samples");
    fixture_cmd->add_option("--clusters", fspec.clusters, "label clusters");
    fixture_cmd->add_option("--labels", fspec.labels, "distinct labels (default: clusters)");
    fixture_cmd->add_option("--dim", fspec.dim, "embedding dimension");
    fixture_cmd->add_option("--noise", fspec.noise_rate, "planted flipped-label rate");
    fixture_cmd->add_option("--gaps", fspec.coverage_gaps, "planted coverage-gap clumps");
    fixture_cmd->add_option("--gap-size", fspec.gap_size, "points per gap clump");
    fixture_cmd->add_option("--spread", fspec.cluster_spread, "cluster spread");
    fixture_cmd->add_option("--epsilon", fspec.duplicate_epsilon, "near-duplicate perturbation");
    fixture_cmd->add_option("--fixture-seed", fspec.seed, "fixture seed");

    auto* sig_cmd = app.add_subcommand("significance",
                                       "paired t-test between two prediction files");
    std::string sig_corpus, sig_format = "jsonl", sig_a, sig_b, sig_out;
    sig_cmd->add_option("--corpus", sig_corpus, "labeled test corpus")->required();
    sig_cmd->add_option("--format", sig_format, "corpus format (jsonl|csv|tsv)");
    sig_cmd->add_option("--a", sig_a, "predictions of system A")->required();
    sig_cmd->add_option("--b", sig_b, "predictions of system B")->required();
    sig_cmd->add_option("--out", sig_out, "write the result as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fixture_cmd->parsed()) {
            if (g.seed) fspec.seed = *g.seed;
            Fixture f = make_fixture(fspec);
            write_fixture(f, fixture_out);
            std::printf("fixture: %zu samples, %zu flipped, %zu gap members -> %s\n",
                        f.corpus.size(), f.flipped_ids.size(), f.gap_ids.size(),
                        fixture_out.c_str());
            return 0;
        }
        if (sig_cmd->parsed()) {
            return cmd_significance(sig_corpus, sig_format, sig_a, sig_b, sig_out);
        }
        if (run_cmd->parsed()) {
            std::vector<Stage> stages;
            if (run_stages_arg.empty() ||
                (run_stages_arg.size() == 1 && run_stages_arg[0] == "all")) {
                stages.assign(kStageOrder.begin(), kStageOrder.end());
            } else {
                for (const auto& name : run_stages_arg) stages.push_back(stage_from_string(name));
            }
            return run_stages(g, load_config(g), stages);
        }

        // single-stage verbs
        for (Stage s : kStageOrder) {
            auto* cmd = app.get_subcommand(to_string(s));
            if (!cmd->parsed()) continue;
            PipelineConfig cfg = load_config(g);
            if (s == Stage::predict) {
                if (predict_backend == "file") {
                    cfg.predictor.kind = PredictorBackend::Kind::file_import;
                } else if (predict_backend == "http") {
                    cfg.predictor.kind = PredictorBackend::Kind::http_inference;
                } else if (predict_backend == "baseline") {
                    cfg.predictor.kind = PredictorBackend::Kind::embedding_baseline;
                } else if (!predict_backend.empty()) {
                    throw UsageError("--backend must be file, http or baseline");
                }
                if (!predict_in.empty()) cfg.predictor.file = predict_in;
            }
            if (s == Stage::judge) {
                if (judge_client == "oracle") {
                    cfg.judge.kind = JudgeSettings::Kind::oracle;
                } else if (judge_client == "http") {
                    cfg.judge.kind = JudgeSettings::Kind::http_chat;
                } else if (!judge_client.empty()) {
                    throw UsageError("--client must be http or oracle");
                }
            }
            if (s == Stage::sample) {
                if (sample_k) cfg.sampler_k = sample_k;
                if (sample_seed) cfg.sampler_seed = sample_seed;
                if (!sample_metric.empty()) cfg.sampler_metric = metric_from_string(sample_metric);
            }

            Pipeline pipeline(std::move(cfg), g.state_dir, g.force);
            StateLock lock(pipeline.state_dir());
            if (s == Stage::judge && !judge_report.empty()) {
                std::filesystem::copy_file(judge_report, pipeline.triage_report_path(),
                                           std::filesystem::copy_options::overwrite_existing);
            }
            print_stage_result(pipeline.run_stage(s));
            if (s == Stage::predict && !predict_out.empty()) {
                std::filesystem::copy_file(pipeline.predictions_path(), predict_out,
                                           std::filesystem::copy_options::overwrite_existing);
            }
            if (s == Stage::judge && !judge_out.empty()) {
                std::filesystem::copy_file(pipeline.verdicts_path(), judge_out,
                                           std::filesystem::copy_options::overwrite_existing);
            }
            return 0;
        }
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ArtifactError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ServiceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
