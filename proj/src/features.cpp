#include "finsent/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "finsent/common.hpp"

namespace finsent::feat {

void TfidfVectorizer::fit(const std::vector<corpus::TokenSequence>& train_docs) {
    std::set<std::string> vocab;
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& doc : train_docs) {
        std::set<std::string> seen(doc.tokens.begin(), doc.tokens.end());
        for (const auto& tok : seen) {
            vocab.insert(tok);
            df[tok] += 1;
        }
    }
    if (vocab.empty()) throw ValidationError("tfidf: empty vocabulary");
    vocab_.assign(vocab.begin(), vocab.end());
    index_.clear();
    idf_.resize(vocab_.size());
    doc_count_ = train_docs.size();
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        index_.emplace(vocab_[i], i);
        idf_[i] = std::log((1.0 + static_cast<double>(doc_count_)) /
                           (1.0 + static_cast<double>(df[vocab_[i]]))) +
                  1.0;
    }
}

std::vector<double> TfidfVectorizer::transform(const corpus::TokenSequence& doc) const {
    std::vector<double> out(vocab_.size(), 0.0);
    for (const auto& tok : doc.tokens) {
        auto it = index_.find(tok);
        if (it != index_.end()) out[it->second] += 1.0;  // raw term frequency
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= idf_[i];
    return out;
}

double TfidfVectorizer::idf(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw ValidationError("tfidf: word not in vocabulary: " + word);
    return idf_[it->second];
}

double agreement_score(double positive_count, double negative_count) {
    const double total = positive_count + negative_count;
    if (total == 0.0) return 0.0;
    return 1.0 - std::fabs(positive_count - negative_count) / total;
}

std::vector<double> lexicon_features(const corpus::TokenSequence& doc,
                                     const corpus::LexiconSet& lexicons) {
    std::vector<double> out;
    out.reserve(3 * lexicons.lexicons.size());
    for (const auto& lex : lexicons.lexicons) {
        double pos = 0.0, neg = 0.0;
        for (const auto& tok : doc.tokens) {
            if (lex.positive.count(tok)) pos += 1.0;
            if (lex.negative.count(tok)) neg += 1.0;
        }
        out.push_back(pos);
        out.push_back(neg);
        out.push_back(agreement_score(pos, neg));
    }
    return out;
}

void EmbeddingConcatFeaturizer::fit(const std::vector<corpus::TokenSequence>& train_docs,
                                    double percentile) {
    if (train_docs.empty()) throw ValidationError("embedding features: no training docs");
    std::vector<std::size_t> lengths;
    lengths.reserve(train_docs.size());
    for (const auto& d : train_docs) lengths.push_back(d.tokens.size());
    std::sort(lengths.begin(), lengths.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(percentile * static_cast<double>(lengths.size())));
    max_len_ = std::max<std::size_t>(1, lengths[std::min(rank, lengths.size()) - 1]);
}

void EmbeddingConcatFeaturizer::set_max_len(std::size_t max_len) {
    if (max_len == 0) throw ValidationError("embedding features: max_len must be >= 1");
    max_len_ = max_len;
}

std::vector<double> EmbeddingConcatFeaturizer::transform(
    const corpus::TokenSequence& doc, const corpus::EmbeddingTable& table) const {
    if (max_len_ == 0) throw std::logic_error("embedding featurizer not fitted");
    std::vector<double> out(max_len_ * table.dimension, 0.0);
    const std::size_t n = std::min(max_len_, doc.tokens.size());
    for (std::size_t t = 0; t < n; ++t) {
        if (const auto* vec = table.find(doc.tokens[t])) {
            std::copy(vec->begin(), vec->end(), out.begin() + t * table.dimension);
        }
    }
    return out;
}

void Standardizer::fit(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ValidationError("standardizer: no rows");
    const std::size_t dim = rows[0].size();
    mean_.assign(dim, 0.0);
    inv_std_.assign(dim, 0.0);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < dim; ++i) mean_[i] += row[i];
    }
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (auto& m : mean_) m *= inv_n;
    std::vector<double> var(dim, 0.0);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = row[i] - mean_[i];
            var[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < dim; ++i) {
        const double sd = std::sqrt(var[i] * inv_n);
        inv_std_[i] = sd > 0.0 ? 1.0 / sd : 0.0;  // constant dims map to 0
    }
}

std::vector<double> Standardizer::transform(std::vector<double> row) const {
    if (row.size() != mean_.size()) {
        throw std::invalid_argument("standardizer: dimension mismatch");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        row[i] = (row[i] - mean_[i]) * inv_std_[i];
    }
    return row;
}

void FeaturePipeline::fit(const std::vector<corpus::TokenSequence>& train_docs,
                          const corpus::LexiconSet* lexicons,
                          const corpus::EmbeddingTable* embeddings) {
    if (train_docs.empty()) throw ValidationError("feature pipeline: no training docs");
    lexicons_ = lexicons;
    embeddings_ = embeddings;
    layout_.clear();
    std::size_t offset = 0;

    if (cfg_.use_tfidf) {
        tfidf_.fit(train_docs);
        layout_.push_back({"tfidf", offset, tfidf_.dimension()});
        offset += tfidf_.dimension();
    }
    if (cfg_.use_lexicons) {
        if (!lexicons_) throw ValidationError("feature pipeline: lexicons enabled but none supplied");
        const std::size_t len = 3 * lexicons_->lexicons.size();
        layout_.push_back({"lexicon", offset, len});
        offset += len;
    }
    if (cfg_.use_embeddings) {
        if (!embeddings_) {
            throw ValidationError("feature pipeline: embeddings enabled but none supplied");
        }
        embedding_.fit(train_docs, cfg_.max_len_percentile);
        const std::size_t len = embedding_.max_len() * embeddings_->dimension;
        layout_.push_back({"embedding", offset, len});
        offset += len;
    }
    if (layout_.empty()) throw ValidationError("feature pipeline: no feature groups enabled");
    dimension_ = offset;
    fitted_ = true;

    if (cfg_.standardize) {
        std::vector<std::vector<double>> rows;
        rows.reserve(train_docs.size());
        for (const auto& doc : train_docs) rows.push_back(raw_features(doc));
        standardizer_.fit(rows);
    }
}

std::vector<double> FeaturePipeline::raw_features(const corpus::TokenSequence& doc) const {
    std::vector<double> out;
    out.reserve(dimension_);
    if (cfg_.use_tfidf) {
        auto seg = tfidf_.transform(doc);
        out.insert(out.end(), seg.begin(), seg.end());
    }
    if (cfg_.use_lexicons) {
        auto seg = lexicon_features(doc, *lexicons_);
        out.insert(out.end(), seg.begin(), seg.end());
    }
    if (cfg_.use_embeddings) {
        auto seg = embedding_.transform(doc, *embeddings_);
        out.insert(out.end(), seg.begin(), seg.end());
    }
    return out;
}

std::vector<double> FeaturePipeline::transform(const corpus::TokenSequence& doc) const {
    if (!fitted_) throw std::logic_error("feature pipeline not fitted");
    auto row = raw_features(doc);
    return cfg_.standardize ? standardizer_.transform(std::move(row)) : row;
}

std::vector<std::vector<double>> FeaturePipeline::transform_all(
    const std::vector<corpus::TokenSequence>& docs) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(docs.size());
    for (const auto& doc : docs) rows.push_back(transform(doc));
    return rows;
}

void FeaturePipeline::dump_matrix(const std::string& path,
                                  const std::vector<std::vector<double>>& rows) const {
    std::ostringstream os;
    for (const auto& seg : layout_) {
        os << "# segment " << seg.name << " " << seg.offset << " " << seg.length << "\n";
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << " ";
            os << fmt_double(row[i]);
        }
        os << "\n";
    }
    io::atomic_write(path, os.str());
}

}  // namespace finsent::feat
