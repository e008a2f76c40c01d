#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finsent/corpus.hpp"
#include "finsent/ensemble.hpp"
#include "finsent/eval.hpp"
#include "finsent/features.hpp"
#include "finsent/knowledge.hpp"
#include "finsent/model.hpp"
#include "finsent/svr.hpp"
#include "finsent/trainer.hpp"

namespace finsent::exp {

// The model grid:
//   L1  attention network, relation-graph knowledge (triplet embeddings)
//   L2  attention network, thesaurus expansion over the GloVe table
//   L3  attention network, thesaurus expansion over the Word2Vec table
//   S1  SVR on tf-idf + lexicon features
//   S2  S1 + GloVe sentence-embedding features
//   S3  S1 + Word2Vec sentence-embedding features
//   E1  MLP combiner over L3 and S2
bool is_neural(const std::string& model_id);
bool is_feature_based(const std::string& model_id);
bool is_ensemble(const std::string& model_id);

struct DataPaths {
    std::string train;
    std::string test;
    corpus::DatasetFormat format = corpus::DatasetFormat::canonical;
    std::string embeddings_word2vec;
    std::string embeddings_glove;
    std::string dt_table;
    std::string triplets;
    std::vector<corpus::LexiconSpec> lexicons;
};

struct KnowledgeParams {
    std::size_t top_k = 4;
    knowledge::DistMultTrainConfig distmult;
};

struct EnsembleParams {
    std::size_t hidden_width = 8;
    std::size_t folds = 5;
    std::size_t epochs = 300;
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
};

struct ExperimentConfig {
    std::string model_id = "L3";
    corpus::Track track = corpus::Track::microblog;
    DataPaths data;
    model::ModelConfig net;  // embed_dim/knowledge_dim resolved from resources
    train::TrainConfig training;
    KnowledgeParams knowledge;
    feat::FeatureConfig features;
    svr::SvrConfig svr_cfg;
    EnsembleParams ensemble_cfg;
    std::string records_path;  // empty: no record file

    // model id -> required resources; also basic value checks
    void validate() const;
};

// Parses the JSON config (schema in docs/formats.md), resolves relative
// paths against the config file's directory, then applies environment
// overrides (FINSENT_TRAIN, FINSENT_TEST, FINSENT_EMBEDDINGS_WORD2VEC,
// FINSENT_EMBEDDINGS_GLOVE, FINSENT_DT_TABLE, FINSENT_TRIPLETS).
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentResult {
    std::string model_id;
    std::vector<double> per_seed_cosine;
    double mean_cosine = 0.0;
    std::vector<eval::PredictionRecord> records;  // from the first-seed run
};

// Resource loading shared by run_experiment and the train/evaluate verbs.

struct NeuralResources {
    corpus::EmbeddingTable table;
    corpus::DtTable dt;
    std::unique_ptr<knowledge::KnowledgeSource> source;
    model::ModelConfig net_cfg;  // dims resolved and validated
};
NeuralResources load_neural_resources(const ExperimentConfig& cfg,
                                      const std::string& model_id);

struct FeatureResources {
    corpus::LexiconSet lexicons;
    corpus::EmbeddingTable table;
    bool has_table = false;
    feat::FeatureConfig feature_cfg;
};
FeatureResources load_feature_resources(const ExperimentConfig& cfg,
                                        const std::string& model_id);

// Fits the pipeline on the training docs only, trains the regressor, and
// returns raw predictions for the eval docs. Set `out_model`/`out_pipeline`
// to keep the artifacts.
std::vector<double> svr_fit_predict(const FeatureResources& resources,
                                    const svr::SvrConfig& svr_cfg,
                                    const std::vector<corpus::TokenSequence>& train_docs,
                                    const std::vector<double>& train_targets,
                                    const std::vector<corpus::TokenSequence>& eval_docs,
                                    svr::SvrModel* out_model = nullptr,
                                    feat::FeaturePipeline* out_pipeline = nullptr);

// Trains the configured model(s), evaluates on the test split with
// clamped predictions and the single-vector cosine, averages the metric
// over seeds, and (when configured) writes the prediction records of the
// first-seed run.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Published reference cosine for `reproduce` comparisons; empty when the
// grid has no entry for the pair.
std::optional<double> reference_cosine(const std::string& model_id, corpus::Track track);

std::string summarize(const ExperimentResult& result, corpus::Track track);

}  // namespace finsent::exp
