#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "finsent/corpus.hpp"
#include "finsent/rng.hpp"

namespace finsent::knowledge {

struct Triplet {
    std::string subject;
    std::string relation;
    std::string object;
};

// One triplet per line: subject <TAB> relation <TAB> object.
std::vector<Triplet> load_triplets(const std::string& path);

struct DistMultTrainConfig {
    std::size_t dim = 100;
    std::size_t epochs = 200;
    std::size_t negatives_per_positive = 1;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
};

// Entity/relation embeddings scored by the trilinear form
// sum_k e_s[k] * w_r[k] * e_o[k] (symmetric in subject and object).
class DistMultModel {
public:
    std::size_t dim() const { return dim_; }

    bool has_entity(const std::string& name) const;
    bool has_relation(const std::string& name) const;

    double score(const std::string& subject, const std::string& relation,
                 const std::string& object) const;  // throws ValidationError on unknown id

    const std::vector<double>& entity_vec(const std::string& name) const;
    const std::vector<double>& relation_vec(const std::string& name) const;

    std::vector<std::string> entity_names() const;  // registration order

    void save(const std::string& path) const;
    static DistMultModel load(const std::string& path);

    friend struct DistMultTrainer;

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::size_t> entity_ids_;
    std::unordered_map<std::string, std::size_t> relation_ids_;
    std::vector<std::string> entity_order_;
    std::vector<std::string> relation_order_;
    std::vector<std::vector<double>> entities_;
    std::vector<std::vector<double>> relations_;
};

struct DistMultTrainResult {
    DistMultModel model;
    std::vector<double> epoch_loss;  // mean logistic loss per epoch
};

// Logistic loss over positives and uniformly corrupted negatives
// (subject or object replaced; identity replacements resampled), plain
// SGD. Throws ValidationError on an empty triplet set or dim = 0.
DistMultTrainResult train_distmult(const std::vector<Triplet>& triplets,
                                   const DistMultTrainConfig& cfg);

struct RelevantTerm {
    std::string label;
    std::vector<double> embedding;
};

enum class TermSource { kg, dt };

// V(x_t): the terms the word-level attention weighs for one token.
// All embeddings in one set share the provider's dimension; empty is valid
// (no knowledge found).
struct RelevantTermSet {
    std::vector<RelevantTerm> terms;
    TermSource source = TermSource::dt;
};

// Uniform interface the encoder binds against.
class KnowledgeSource {
public:
    virtual ~KnowledgeSource() = default;
    virtual RelevantTermSet relevant_terms(const std::string& token) const = 0;
    virtual std::size_t term_dim() const = 0;
};

// One term per triplet whose subject matches the token exactly (lowercase
// surface match); embeddings are the concatenation [e_s; w_r; e_o] of
// length 3*dim. Unmatched tokens get an empty set.
class KgKnowledge : public KnowledgeSource {
public:
    KgKnowledge(std::vector<Triplet> triplets, DistMultModel model);

    RelevantTermSet relevant_terms(const std::string& token) const override;
    std::size_t term_dim() const override { return 3 * model_.dim(); }

    const DistMultModel& model() const { return model_; }

private:
    std::vector<Triplet> triplets_;
    DistMultModel model_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_subject_;
};

// Top-k thesaurus expansions that have embedding vectors; embeddings come
// straight from the table. Order: descending similarity, ties by term.
class DtKnowledge : public KnowledgeSource {
public:
    DtKnowledge(const corpus::DtTable* table, const corpus::EmbeddingTable* embeddings,
                std::size_t k = 4);

    RelevantTermSet relevant_terms(const std::string& token) const override;
    std::size_t term_dim() const override { return embeddings_->dimension; }

private:
    const corpus::DtTable* table_;
    const corpus::EmbeddingTable* embeddings_;
    std::size_t k_;
};

// Free-function forms of the lookups (the class wrappers above bind them
// for the encoder).
RelevantTermSet kg_relevant_terms(const std::string& token,
                                  const std::vector<Triplet>& triplets,
                                  const DistMultModel& model);
RelevantTermSet dt_relevant_terms(const std::string& token, const corpus::DtTable& dt,
                                  const corpus::EmbeddingTable& embeddings, std::size_t k);

}  // namespace finsent::knowledge
