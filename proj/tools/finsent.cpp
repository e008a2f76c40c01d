// finsent: knowledge-aware financial sentiment regression
//
// Subcommands: train, evaluate, reproduce, report-attention, report-errors,
// selftest, make-fixtures. Exit codes: 0 success, 1 validation error,
// 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "finsent/common.hpp"
#include "finsent/ensemble.hpp"
#include "finsent/eval.hpp"
#include "finsent/experiment.hpp"
#include "finsent/fixtures.hpp"
#include "finsent/kernels.hpp"
#include "finsent/selftest.hpp"

namespace {

using namespace finsent;

std::vector<corpus::TokenSequence> tokenize_dataset(
    const std::vector<corpus::SentimentInstance>& data) {
    std::vector<corpus::TokenSequence> docs;
    docs.reserve(data.size());
    for (const auto& d : data) docs.push_back(corpus::tokenize(d.text));
    return docs;
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::fputs(content.c_str(), stdout);
    } else {
        io::atomic_write(path, content);
        log::info("report written to " + path);
    }
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
    auto cfg = exp::load_experiment_config(config_path);
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    auto train_data = corpus::load_dataset(cfg.data.train, cfg.track, cfg.data.format);
    if (train_data.empty()) throw ValidationError("train: empty training dataset");

    if (exp::is_neural(cfg.model_id)) {
        auto res = exp::load_neural_resources(cfg, cfg.model_id);
        auto bound = model::bind_corpus(train_data, res.table, res.source.get(), res.net_cfg);
        auto runs = train::train_model(res.net_cfg, bound, cfg.training);
        for (const auto& run : runs) {
            const std::string path = out_dir + "/" + cfg.model_id + "_seed" +
                                     std::to_string(run.result.seed) + ".ckpt";
            run.network->save(path);
            std::printf("seed %llu: final train loss %s%s -> %s\n",
                        static_cast<unsigned long long>(run.result.seed),
                        fmt_double(run.result.epoch_train_loss.back()).c_str(),
                        run.result.has_validation
                            ? (", val cosine " + fmt_double(run.result.val_cosine)).c_str()
                            : "",
                        path.c_str());
        }
        return 0;
    }
    if (exp::is_feature_based(cfg.model_id)) {
        auto res = exp::load_feature_resources(cfg, cfg.model_id);
        auto docs = tokenize_dataset(train_data);
        std::vector<double> targets;
        for (const auto& d : train_data) targets.push_back(d.score);
        svr::SvrModel m;
        feat::FeaturePipeline pipeline(res.feature_cfg);
        exp::svr_fit_predict(res, cfg.svr_cfg, docs, targets, {}, &m, &pipeline);
        const std::string model_path = out_dir + "/" + cfg.model_id + ".svr";
        m.save(model_path);
        const std::string dump_path = out_dir + "/" + cfg.model_id + "_features.txt";
        pipeline.dump_matrix(dump_path, pipeline.transform_all(docs));
        std::printf("model -> %s\nfeature matrix -> %s\n", model_path.c_str(),
                    dump_path.c_str());
        return 0;
    }
    throw ValidationError(
        "train: the ensemble trains fold components and a combiner in one pass; run "
        "`finsent reproduce E1 --config ...` instead");
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                 const std::string& svr_model_path, const std::string& combiner_path,
                 const std::string& records_path) {
    auto cfg = exp::load_experiment_config(config_path);
    cfg.validate();
    auto test_data = corpus::load_dataset(cfg.data.test, cfg.track, cfg.data.format);
    if (test_data.empty()) throw ValidationError("evaluate: empty test dataset");
    std::vector<double> golds;
    for (const auto& d : test_data) golds.push_back(d.score);

    std::vector<eval::PredictionRecord> records;
    std::vector<double> finals;

    auto neural_predictions = [&](std::vector<double>& raw_out,
                                  std::vector<model::AttentionRecord>& recs) {
        if (checkpoint.empty()) {
            throw ValidationError("evaluate: model " + cfg.model_id +
                                  " requires --checkpoint");
        }
        auto net = model::AttentionNetwork::load(checkpoint);
        auto res = exp::load_neural_resources(cfg, exp::is_ensemble(cfg.model_id)
                                                       ? "L3"
                                                       : cfg.model_id);
        if (net.config().hidden_dim != res.net_cfg.hidden_dim ||
            net.config().embed_dim != res.net_cfg.embed_dim ||
            net.config().knowledge_dim != res.net_cfg.knowledge_dim) {
            throw ValidationError("evaluate: checkpoint dimensions do not match resources");
        }
        auto bound = model::bind_corpus(test_data, res.table, res.source.get(),
                                        res.net_cfg);
        for (const auto& sentence : bound) {
            model::AttentionRecord rec;
            raw_out.push_back(net.predict(sentence, &rec));
            recs.push_back(std::move(rec));
        }
    };

    auto svr_predictions = [&](const std::string& component) {
        if (svr_model_path.empty()) {
            throw ValidationError("evaluate: model " + cfg.model_id +
                                  " requires --svr-model");
        }
        auto m = svr::SvrModel::load(svr_model_path);
        auto res = exp::load_feature_resources(cfg, component);
        auto train_data = corpus::load_dataset(cfg.data.train, cfg.track, cfg.data.format);
        auto train_docs = tokenize_dataset(train_data);
        feat::FeaturePipeline pipeline(res.feature_cfg);
        pipeline.fit(train_docs, &res.lexicons, res.has_table ? &res.table : nullptr);
        if (pipeline.dimension() != m.feature_dim) {
            throw ValidationError(
                "evaluate: feature pipeline dimension " +
                std::to_string(pipeline.dimension()) + " does not match the model (" +
                std::to_string(m.feature_dim) + "); was it trained on the same split?");
        }
        std::vector<double> preds;
        for (const auto& d : test_data) {
            preds.push_back(m.predict(pipeline.transform(corpus::tokenize(d.text))));
        }
        return preds;
    };

    if (exp::is_neural(cfg.model_id)) {
        std::vector<double> raw;
        std::vector<model::AttentionRecord> recs;
        neural_predictions(raw, recs);
        for (std::size_t i = 0; i < test_data.size(); ++i) {
            eval::PredictionRecord r;
            r.id = test_data[i].id;
            r.gold = test_data[i].score;
            r.model_predictions[cfg.model_id] = raw[i];
            r.final_prediction = eval::clamp_score(raw[i]);
            r.attention = std::move(recs[i]);
            finals.push_back(r.final_prediction);
            records.push_back(std::move(r));
        }
    } else if (exp::is_feature_based(cfg.model_id)) {
        auto raw = svr_predictions(cfg.model_id);
        for (std::size_t i = 0; i < test_data.size(); ++i) {
            eval::PredictionRecord r;
            r.id = test_data[i].id;
            r.gold = test_data[i].score;
            r.model_predictions[cfg.model_id] = raw[i];
            r.final_prediction = eval::clamp_score(raw[i]);
            finals.push_back(r.final_prediction);
            records.push_back(std::move(r));
        }
    } else {
        if (combiner_path.empty()) {
            throw ValidationError("evaluate: E1 requires --combiner");
        }
        std::vector<double> l3_raw;
        std::vector<model::AttentionRecord> recs;
        neural_predictions(l3_raw, recs);
        auto s2_raw = svr_predictions("S2");
        auto combiner = ensemble::EnsembleMlp::load(combiner_path);
        for (std::size_t i = 0; i < test_data.size(); ++i) {
            const double combined = combiner.predict({l3_raw[i], s2_raw[i]});
            eval::PredictionRecord r;
            r.id = test_data[i].id;
            r.gold = test_data[i].score;
            r.model_predictions["L3"] = l3_raw[i];
            r.model_predictions["S2"] = s2_raw[i];
            r.model_predictions["E1"] = combined;
            r.final_prediction = eval::clamp_score(combined);
            r.attention = std::move(recs[i]);
            finals.push_back(r.final_prediction);
            records.push_back(std::move(r));
        }
    }

    const double cos = eval::cosine_similarity(finals, golds);
    std::printf("%s cosine on %zu test instances: %s\n", cfg.model_id.c_str(),
                test_data.size(), fmt_double(cos).c_str());
    if (!records_path.empty()) {
        eval::write_records(records_path, records);
        log::info("records written to " + records_path);
    }
    return 0;
}

int cmd_reproduce(const std::string& model_id, const std::string& config_path,
                  const std::string& records_override) {
    auto cfg = exp::load_experiment_config(config_path);
    cfg.model_id = model_id;
    if (!records_override.empty()) cfg.records_path = records_override;
    auto result = exp::run_experiment(cfg);
    std::fputs(exp::summarize(result, cfg.track).c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-aware financial sentiment regression"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", records_path, checkpoint, svr_model_path,
                combiner_path, fixtures_dir = "fixtures", report_out;
    std::string model_id;
    double threshold = 0.5;

    auto* train_cmd = app.add_subcommand("train", "train the configured model");
    train_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    train_cmd->add_option("--out-dir", out_dir, "artifact directory (default: out)");

    auto* eval_cmd =
        app.add_subcommand("evaluate", "evaluate trained artifacts on the test split");
    eval_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    eval_cmd->add_option("--checkpoint", checkpoint, "network checkpoint (L1/L2/L3, E1)");
    eval_cmd->add_option("--svr-model", svr_model_path, "regressor file (S1/S2/S3, E1)");
    eval_cmd->add_option("--combiner", combiner_path, "combiner file (E1)");
    eval_cmd->add_option("--records", records_path, "write prediction records here");

    auto* repro_cmd = app.add_subcommand(
        "reproduce", "train and evaluate one model of the published grid");
    repro_cmd->add_option("model", model_id, "L1|L2|L3|S1|S2|S3|E1")->required();
    repro_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    repro_cmd->add_option("--records", records_path, "write prediction records here");

    auto* att_cmd = app.add_subcommand("report-attention",
                                       "attention weights per sentence and token");
    att_cmd->add_option("--records", records_path, "prediction records (JSONL)")->required();
    att_cmd->add_option("--out", report_out, "write the report here (default: stdout)");

    auto* err_cmd =
        app.add_subcommand("report-errors", "opposite-polarity prediction report");
    err_cmd->add_option("--records", records_path, "prediction records (JSONL)")->required();
    err_cmd->add_option("--threshold", threshold, "minimum |gold| to flag (default 0.5)");
    err_cmd->add_option("--out", report_out, "write the report here (default: stdout)");

    auto* self_cmd =
        app.add_subcommand("selftest", "run the oracle and gradient self-checks");

    auto* fix_cmd = app.add_subcommand("make-fixtures",
                                       "regenerate the synthetic fixture files");
    fix_cmd->add_option("dir", fixtures_dir, "target directory (default: fixtures)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, out_dir);
        if (eval_cmd->parsed()) {
            return cmd_evaluate(config_path, checkpoint, svr_model_path, combiner_path,
                                records_path);
        }
        if (repro_cmd->parsed()) return cmd_reproduce(model_id, config_path, records_path);
        if (att_cmd->parsed()) {
            emit(report_out, eval::emit_attention_report(eval::read_records(records_path)));
            return 0;
        }
        if (err_cmd->parsed()) {
            emit(report_out,
                 eval::emit_error_report(eval::read_records(records_path), threshold));
            return 0;
        }
        if (self_cmd->parsed()) {
            std::printf("kernel dispatch: %s (best supported: %s)\n",
                        kern::isa_name(kern::active_isa()),
                        kern::isa_name(kern::best_supported()));
            const auto results = finsent::selftest::run_all();
            for (const auto& r : results) {
                std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                            r.detail.c_str());
            }
            return finsent::selftest::all_passed(results) ? 0 : 2;
        }
        if (fix_cmd->parsed()) {
            fixtures::write_fixtures(fixtures_dir);
            return 0;
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
