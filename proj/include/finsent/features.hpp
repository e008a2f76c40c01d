#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "finsent/corpus.hpp"

namespace finsent::feat {

struct SegmentLayout {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Raw-count tf times smoothed idf = ln((1+N)/(1+df)) + 1 over a vocabulary
// fixed from the training split (sorted for a stable slot order). Words
// outside the vocabulary are ignored.
class TfidfVectorizer {
public:
    void fit(const std::vector<corpus::TokenSequence>& train_docs);
    std::vector<double> transform(const corpus::TokenSequence& doc) const;

    std::size_t dimension() const { return vocab_.size(); }
    const std::vector<std::string>& vocabulary() const { return vocab_; }
    double idf(const std::string& word) const;  // throws on unknown word

private:
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> idf_;
    std::size_t doc_count_ = 0;
};

// Per lexicon: occurrence counts of positive (P) and negative (N) words
// and the agreement score A = 1 - |P-N| / (P+N), with A = 0 when no
// sentiment words occur. The formula is isolated here so it can be
// swapped.
double agreement_score(double positive_count, double negative_count);
std::vector<double> lexicon_features(const corpus::TokenSequence& doc,
                                     const corpus::LexiconSet& lexicons);

// Per-word embedding concatenation, zero-padded or truncated to a fixed
// token budget chosen as a length percentile of the training split.
class EmbeddingConcatFeaturizer {
public:
    void fit(const std::vector<corpus::TokenSequence>& train_docs, double percentile);
    void set_max_len(std::size_t max_len);
    std::size_t max_len() const { return max_len_; }

    std::vector<double> transform(const corpus::TokenSequence& doc,
                                  const corpus::EmbeddingTable& table) const;

private:
    std::size_t max_len_ = 0;
};

// Zero-mean unit-variance scaling per dimension, statistics from the
// training split only. Constant dimensions map to 0.
class Standardizer {
public:
    void fit(const std::vector<std::vector<double>>& rows);
    std::vector<double> transform(std::vector<double> row) const;
    bool fitted() const { return !mean_.empty(); }

private:
    std::vector<double> mean_;
    std::vector<double> inv_std_;
};

struct FeatureConfig {
    bool use_tfidf = true;
    bool use_lexicons = true;
    bool use_embeddings = false;
    double max_len_percentile = 0.95;
    bool standardize = true;
};

// Fits the enabled extractors on the training split and produces the
// concatenated, standardized feature rows plus their segment layout.
class FeaturePipeline {
public:
    explicit FeaturePipeline(FeatureConfig cfg) : cfg_(cfg) {}

    void fit(const std::vector<corpus::TokenSequence>& train_docs,
             const corpus::LexiconSet* lexicons, const corpus::EmbeddingTable* embeddings);

    std::vector<double> transform(const corpus::TokenSequence& doc) const;
    std::vector<std::vector<double>> transform_all(
        const std::vector<corpus::TokenSequence>& docs) const;

    const std::vector<SegmentLayout>& layout() const { return layout_; }
    std::size_t dimension() const { return dimension_; }
    const FeatureConfig& config() const { return cfg_; }

    // Audit dump: '# segment <name> <offset> <length>' header lines, then
    // one whitespace-separated row per instance.
    void dump_matrix(const std::string& path,
                     const std::vector<std::vector<double>>& rows) const;

private:
    std::vector<double> raw_features(const corpus::TokenSequence& doc) const;

    FeatureConfig cfg_;
    TfidfVectorizer tfidf_;
    EmbeddingConcatFeaturizer embedding_;
    Standardizer standardizer_;
    const corpus::LexiconSet* lexicons_ = nullptr;
    const corpus::EmbeddingTable* embeddings_ = nullptr;
    std::vector<SegmentLayout> layout_;
    std::size_t dimension_ = 0;
    bool fitted_ = false;
};

}  // namespace finsent::feat
