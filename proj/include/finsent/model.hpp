#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finsent/autodiff.hpp"
#include "finsent/corpus.hpp"
#include "finsent/knowledge.hpp"

namespace finsent::model {

// How the knowledge-aware vector joins the hidden state: elementwise sum
// (the default; requires knowledge_dim == 2*hidden_dim) or concatenation
// (widens everything downstream to 2*hidden_dim + knowledge_dim).
enum class FuseMode { sum, concat };

struct ModelConfig {
    std::size_t embed_dim = 300;      // word-embedding input width E
    std::size_t hidden_dim = 150;     // LSTM units per direction H
    std::size_t context_dim = 300;    // sentence-attention context length C
    std::size_t knowledge_dim = 300;  // relevant-term embedding width D_k
    FuseMode fuse = FuseMode::sum;
    bool use_knowledge = true;
    double dropout_rate = 0.3;

    std::size_t fused_dim() const {
        return fuse == FuseMode::sum ? 2 * hidden_dim : 2 * hidden_dim + knowledge_dim;
    }

    void validate() const;  // throws ValidationError
};

// Per-token data resolved once per sentence and reused across epochs:
// the input embedding and the matrix of relevant-term embeddings
// (term_count x knowledge_dim; zero rows when no knowledge was found).
struct BoundToken {
    std::string surface;
    ad::Tensor embedding;
    ad::Tensor term_matrix;
    std::vector<std::string> term_labels;
    std::size_t term_count = 0;
};

struct BoundSentence {
    std::string id;
    double gold = 0.0;
    std::vector<BoundToken> tokens;
};

// Tokenizes and binds one instance against the embedding table (OOV ->
// zero vector) and the knowledge source (null -> no knowledge anywhere).
BoundSentence bind_sentence(const corpus::SentimentInstance& instance,
                            const corpus::EmbeddingTable& embeddings,
                            const knowledge::KnowledgeSource* source,
                            const ModelConfig& cfg);

std::vector<BoundSentence> bind_corpus(const std::vector<corpus::SentimentInstance>& data,
                                       const corpus::EmbeddingTable& embeddings,
                                       const knowledge::KnowledgeSource* source,
                                       const ModelConfig& cfg);

// Attention weights recorded during one forward pass.
struct AttentionRecord {
    std::vector<double> sentence_weights;                // one per token
    std::vector<std::vector<double>> term_weights;       // per token, may be empty
    std::vector<std::string> tokens;
    std::vector<std::vector<std::string>> term_labels;
};

// Graph builders shared by the network and exercised directly in tests.
//
// Word-level attention: logits_i = h^T W v_i over the rows v_i of
// term_matrix (k x D_k, k >= 1), softmax-normalized; returns the
// knowledge vector m = sum_i alpha_i v_i and the weights alpha.
std::pair<ad::Var, ad::Var> word_attention(ad::Tape& tape, ad::Var hidden,
                                           ad::Var term_matrix, ad::Var w_v);

// Sentence-level attention: logit_t = v_t^T (W u), softmax over t; returns
// the pooled vector sum_t alpha_t v_t and the weights alpha.
std::pair<ad::Var, ad::Var> sentence_attention(ad::Tape& tape,
                                               const std::vector<ad::Var>& vectors,
                                               ad::Var w_s, ad::Var context);

// BiLSTM word encoder, word-level attention over relevant-term embeddings,
// sentence-level attention against a learned context vector, and a tanh
// output head mapping into (-1, +1).
class AttentionNetwork {
public:
    explicit AttentionNetwork(ModelConfig cfg);

    // Glorot-uniform matrices, zero biases, forget-gate bias +1; draws in
    // parameter registration order.
    void init_params(RunRng& rng);

    // Builds the forward graph for one sentence and returns the scalar
    // score var. Dropout masks are drawn from rng only in train mode.
    ad::Var build_score(ad::Tape& tape, const BoundSentence& sentence, bool train_mode,
                        RunRng* rng, AttentionRecord* record = nullptr);

    // eval-mode forward
    double predict(const BoundSentence& sentence, AttentionRecord* record = nullptr);

    // encoder output h_t for each token (eval path, exposed for tests)
    std::vector<ad::Tensor> encode(const BoundSentence& sentence);

    ad::ParameterStore& params() { return params_; }
    const ad::ParameterStore& params() const { return params_; }
    const ModelConfig& config() const { return cfg_; }

    std::map<std::string, ad::Tensor> snapshot_params() const;
    void restore_params(const std::map<std::string, ad::Tensor>& snapshot);

    void save(const std::string& path) const;
    static AttentionNetwork load(const std::string& path);

private:
    struct Cell {
        ad::Parameter* w_in;   // (4H x E)
        ad::Parameter* w_rec;  // (4H x H)
        ad::Parameter* bias;   // (4H), gate order i, f, g, o
    };

    std::vector<ad::Var> run_cell(ad::Tape& tape, const Cell& cell,
                                  const std::vector<ad::Var>& inputs, bool reversed);

    ModelConfig cfg_;
    ad::ParameterStore params_;
    Cell fw_{}, bw_{};
    ad::Parameter* attn_word_w_ = nullptr;  // (2H x D_k)
    ad::Parameter* attn_sent_w_ = nullptr;  // (fused x C)
    ad::Parameter* attn_sent_ctx_ = nullptr;  // (C)
    ad::Parameter* head_w_ = nullptr;       // (fused)
    ad::Parameter* head_b_ = nullptr;       // (1)
    ad::Tensor zero_hidden_;                // initial h/c, all zeros
    ad::Tensor zero_knowledge_;             // concat-mode filler
};

}  // namespace finsent::model
