#include "finsent/model.hpp"

#include <sstream>

#include <json.hpp>

#include "finsent/common.hpp"

namespace finsent::model {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

void ModelConfig::validate() const {
    if (embed_dim == 0 || hidden_dim == 0 || context_dim == 0 || knowledge_dim == 0) {
        throw ValidationError("model config: all dimensions must be >= 1");
    }
    if (fuse == FuseMode::sum && knowledge_dim != 2 * hidden_dim) {
        throw ValidationError(
            "model config: sum fusion requires knowledge_dim == 2*hidden_dim, got " +
            std::to_string(knowledge_dim) + " vs " + std::to_string(2 * hidden_dim));
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ValidationError("model config: dropout must lie in [0, 1)");
    }
}

BoundSentence bind_sentence(const corpus::SentimentInstance& instance,
                            const corpus::EmbeddingTable& embeddings,
                            const knowledge::KnowledgeSource* source,
                            const ModelConfig& cfg) {
    if (embeddings.dimension != cfg.embed_dim) {
        throw ValidationError("embedding table dimension " +
                              std::to_string(embeddings.dimension) +
                              " != model embed_dim " + std::to_string(cfg.embed_dim));
    }
    if (source && source->term_dim() != cfg.knowledge_dim) {
        throw ValidationError("knowledge source dimension " +
                              std::to_string(source->term_dim()) +
                              " != model knowledge_dim " +
                              std::to_string(cfg.knowledge_dim));
    }

    BoundSentence bound;
    bound.id = instance.id;
    bound.gold = instance.score;
    const corpus::TokenSequence seq = corpus::tokenize(instance.text);
    for (const auto& surface : seq.tokens) {
        BoundToken tok;
        tok.surface = surface;
        if (const auto* vec = embeddings.find(surface)) {
            tok.embedding = Tensor({cfg.embed_dim}, *vec);
        } else {
            tok.embedding = Tensor::zeros({cfg.embed_dim});  // OOV convention
        }
        if (source) {
            const auto terms = source->relevant_terms(surface);
            tok.term_count = terms.terms.size();
            if (tok.term_count > 0) {
                tok.term_matrix = Tensor::zeros({tok.term_count, cfg.knowledge_dim});
                for (std::size_t i = 0; i < tok.term_count; ++i) {
                    const auto& emb = terms.terms[i].embedding;
                    for (std::size_t j = 0; j < cfg.knowledge_dim; ++j) {
                        tok.term_matrix.at(i, j) = emb[j];
                    }
                    tok.term_labels.push_back(terms.terms[i].label);
                }
            }
        }
        bound.tokens.push_back(std::move(tok));
    }
    return bound;
}

std::vector<BoundSentence> bind_corpus(const std::vector<corpus::SentimentInstance>& data,
                                       const corpus::EmbeddingTable& embeddings,
                                       const knowledge::KnowledgeSource* source,
                                       const ModelConfig& cfg) {
    std::vector<BoundSentence> out;
    out.reserve(data.size());
    for (const auto& inst : data) {
        out.push_back(bind_sentence(inst, embeddings, source, cfg));
    }
    return out;
}

AttentionNetwork::AttentionNetwork(ModelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t h = cfg_.hidden_dim;
    const std::size_t e = cfg_.embed_dim;
    const std::size_t fused = cfg_.fused_dim();

    fw_.w_in = &params_.add("encoder.fw.w_in", Tensor::zeros({4 * h, e}));
    fw_.w_rec = &params_.add("encoder.fw.w_rec", Tensor::zeros({4 * h, h}));
    fw_.bias = &params_.add("encoder.fw.bias", Tensor::zeros({4 * h}));
    bw_.w_in = &params_.add("encoder.bw.w_in", Tensor::zeros({4 * h, e}));
    bw_.w_rec = &params_.add("encoder.bw.w_rec", Tensor::zeros({4 * h, h}));
    bw_.bias = &params_.add("encoder.bw.bias", Tensor::zeros({4 * h}));
    attn_word_w_ = &params_.add("attn_word.w", Tensor::zeros({2 * h, cfg_.knowledge_dim}));
    attn_sent_w_ = &params_.add("attn_sent.w", Tensor::zeros({fused, cfg_.context_dim}));
    attn_sent_ctx_ = &params_.add("attn_sent.context", Tensor::zeros({cfg_.context_dim}));
    head_w_ = &params_.add("head.w", Tensor::zeros({fused}));
    head_b_ = &params_.add("head.bias", Tensor::zeros({1}));

    zero_hidden_ = Tensor::zeros({h});
    zero_knowledge_ = Tensor::zeros({cfg_.knowledge_dim});
}

void AttentionNetwork::init_params(RunRng& rng) {
    const std::size_t h = cfg_.hidden_dim;
    for (auto& p : params_) {
        if (p.name.ends_with(".bias") || p.name.ends_with("bias")) {
            p.value.fill(0.0);
            if (p.name.starts_with("encoder.")) {
                // forget-gate bias +1 stabilizes early recurrence
                for (std::size_t i = h; i < 2 * h; ++i) p.value[i] = 1.0;
            }
        } else if (p.value.shape().size() == 2) {
            p.value = ad::glorot_uniform(p.value.rows(), p.value.cols(), rng);
        } else {
            // 1-D weight vectors (context vector, head weights)
            Tensor row = ad::glorot_uniform(1, p.value.size(), rng);
            for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = row[i];
        }
        p.grad = Tensor::zeros(p.value.shape());
    }
}

std::pair<Var, Var> word_attention(Tape& tape, Var hidden, Var term_matrix, Var w_v) {
    Var query = tape.matvec_t(w_v, hidden);          // (D_k)
    Var logits = tape.matvec(term_matrix, query);    // (k)
    Var alpha = tape.softmax(logits);
    Var knowledge_vec = tape.matvec_t(term_matrix, alpha);  // (D_k)
    return {knowledge_vec, alpha};
}

std::pair<Var, Var> sentence_attention(Tape& tape, const std::vector<Var>& vectors,
                                       Var w_s, Var context) {
    if (vectors.empty()) {
        throw std::invalid_argument("sentence_attention: empty sequence");
    }
    Var projected = tape.matvec(w_s, context);
    std::vector<Var> logits(vectors.size());
    for (std::size_t t = 0; t < vectors.size(); ++t) {
        logits[t] = tape.dot(vectors[t], projected);
    }
    Var alpha = tape.softmax(tape.stack(logits));
    Var pooled = tape.weighted_sum(alpha, vectors);
    return {pooled, alpha};
}

std::vector<Var> AttentionNetwork::run_cell(Tape& tape, const Cell& cell,
                                            const std::vector<Var>& inputs,
                                            bool reversed) {
    const std::size_t h = cfg_.hidden_dim;
    const std::size_t t_count = inputs.size();
    Var w_in = tape.param(*cell.w_in);
    Var w_rec = tape.param(*cell.w_rec);
    Var bias = tape.param(*cell.bias);
    Var h_prev = tape.constant_ref(&zero_hidden_);
    Var c_prev = tape.constant_ref(&zero_hidden_);

    std::vector<Var> states(t_count);
    for (std::size_t step = 0; step < t_count; ++step) {
        const std::size_t t = reversed ? t_count - 1 - step : step;
        Var z = tape.add(tape.add(tape.matvec(w_in, inputs[t]), tape.matvec(w_rec, h_prev)),
                         bias);
        Var gate_i = tape.sigmoid(tape.slice(z, 0, h));
        Var gate_f = tape.sigmoid(tape.slice(z, h, h));
        Var gate_g = tape.tanh(tape.slice(z, 2 * h, h));
        Var gate_o = tape.sigmoid(tape.slice(z, 3 * h, h));
        Var c = tape.add(tape.mul(gate_f, c_prev), tape.mul(gate_i, gate_g));
        Var h_t = tape.mul(gate_o, tape.tanh(c));
        states[t] = h_t;
        h_prev = h_t;
        c_prev = c;
    }
    return states;
}

Var AttentionNetwork::build_score(Tape& tape, const BoundSentence& sentence,
                                  bool train_mode, RunRng* rng, AttentionRecord* record) {
    if (sentence.tokens.empty()) {
        throw ValidationError("model: sentence '" + sentence.id + "' has no tokens");
    }
    if (train_mode && cfg_.dropout_rate > 0.0 && rng == nullptr) {
        throw std::invalid_argument("model: train mode with dropout requires an rng");
    }
    const std::size_t t_count = sentence.tokens.size();

    std::vector<Var> inputs(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        inputs[t] = tape.constant_ref(&sentence.tokens[t].embedding);
    }

    // BiLSTM encoder: h_t = [forward_t ; backward_t]
    std::vector<Var> forward = run_cell(tape, fw_, inputs, false);
    std::vector<Var> backward = run_cell(tape, bw_, inputs, true);
    std::vector<Var> hidden(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        hidden[t] = tape.concat(forward[t], backward[t]);
    }

    if (record) {
        record->tokens.clear();
        record->term_weights.assign(t_count, {});
        record->term_labels.assign(t_count, {});
        for (const auto& tok : sentence.tokens) record->tokens.push_back(tok.surface);
    }

    // word-level attention over relevant terms -> fused token vectors
    Var word_w = tape.param(*attn_word_w_);
    std::vector<Var> fused(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        const BoundToken& tok = sentence.tokens[t];
        if (cfg_.use_knowledge && tok.term_count > 0) {
            Var terms = tape.constant_ref(&tok.term_matrix);
            auto [knowledge_vec, alpha] = word_attention(tape, hidden[t], terms, word_w);
            fused[t] = cfg_.fuse == FuseMode::sum
                           ? tape.add(knowledge_vec, hidden[t])
                           : tape.concat(knowledge_vec, hidden[t]);
            if (record) {
                const Tensor& av = tape.value(alpha);
                record->term_weights[t].assign(av.data(), av.data() + av.size());
                record->term_labels[t] = tok.term_labels;
            }
        } else {
            fused[t] = cfg_.fuse == FuseMode::sum
                           ? hidden[t]
                           : tape.concat(tape.constant_ref(&zero_knowledge_), hidden[t]);
        }
    }

    // sentence-level attention against the learned context vector
    std::vector<Var> dropped(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        dropped[t] = tape.dropout(fused[t], cfg_.dropout_rate, train_mode, rng);
    }
    Var sent_w = tape.param(*attn_sent_w_);
    Var context = tape.param(*attn_sent_ctx_);
    auto [sentence_vec, alpha_sent] = sentence_attention(tape, dropped, sent_w, context);
    Var sentence_dropped =
        tape.dropout(sentence_vec, cfg_.dropout_rate, train_mode, rng);

    if (record) {
        const Tensor& av = tape.value(alpha_sent);
        record->sentence_weights.assign(av.data(), av.data() + av.size());
    }

    Var head_w = tape.param(*head_w_);
    Var head_b = tape.param(*head_b_);
    return tape.tanh(tape.add(tape.dot(head_w, sentence_dropped), head_b));
}

double AttentionNetwork::predict(const BoundSentence& sentence, AttentionRecord* record) {
    Tape tape;
    Var score = build_score(tape, sentence, false, nullptr, record);
    return tape.value(score).item();
}

std::vector<Tensor> AttentionNetwork::encode(const BoundSentence& sentence) {
    Tape tape;
    std::vector<Var> inputs(sentence.tokens.size());
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
        inputs[t] = tape.constant_ref(&sentence.tokens[t].embedding);
    }
    std::vector<Var> forward = run_cell(tape, fw_, inputs, false);
    std::vector<Var> backward = run_cell(tape, bw_, inputs, true);
    std::vector<Tensor> out;
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
        out.push_back(tape.value(tape.concat(forward[t], backward[t])));
    }
    return out;
}

std::map<std::string, Tensor> AttentionNetwork::snapshot_params() const {
    std::map<std::string, Tensor> snap;
    for (const auto& p : params_) snap.emplace(p.name, p.value);
    return snap;
}

void AttentionNetwork::restore_params(const std::map<std::string, Tensor>& snapshot) {
    for (auto& p : params_) {
        auto it = snapshot.find(p.name);
        if (it == snapshot.end()) {
            throw std::invalid_argument("restore_params: missing parameter " + p.name);
        }
        if (!it->second.same_shape(p.value)) {
            throw std::invalid_argument("restore_params: shape mismatch for " + p.name);
        }
        p.value = it->second;
    }
}

void AttentionNetwork::save(const std::string& path) const {
    std::ostringstream os;
    os << "finsent-checkpoint v1\n";
    json header;
    header["embed_dim"] = cfg_.embed_dim;
    header["hidden_dim"] = cfg_.hidden_dim;
    header["context_dim"] = cfg_.context_dim;
    header["knowledge_dim"] = cfg_.knowledge_dim;
    header["fuse"] = cfg_.fuse == FuseMode::sum ? "sum" : "concat";
    header["use_knowledge"] = cfg_.use_knowledge;
    header["dropout_rate"] = cfg_.dropout_rate;
    os << header.dump() << "\n";
    for (const auto& p : params_) {
        os << "param " << p.name;
        for (std::size_t d : p.value.shape()) os << " " << d;
        os << "\n";
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            if (i) os << " ";
            os << fmt_double(p.value[i]);
        }
        os << "\n";
    }
    io::atomic_write(path, os.str());
}

AttentionNetwork AttentionNetwork::load(const std::string& path) {
    const auto lines = io::read_lines(path);
    if (lines.size() < 2 || lines[0] != "finsent-checkpoint v1") {
        throw ValidationError(path + ": not a finsent checkpoint");
    }
    json header;
    try {
        header = json::parse(lines[1]);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": bad checkpoint header: " + e.what());
    }
    ModelConfig cfg;
    cfg.embed_dim = header.at("embed_dim").get<std::size_t>();
    cfg.hidden_dim = header.at("hidden_dim").get<std::size_t>();
    cfg.context_dim = header.at("context_dim").get<std::size_t>();
    cfg.knowledge_dim = header.at("knowledge_dim").get<std::size_t>();
    cfg.fuse = header.at("fuse").get<std::string>() == "concat" ? FuseMode::concat
                                                                : FuseMode::sum;
    cfg.use_knowledge = header.at("use_knowledge").get<bool>();
    cfg.dropout_rate = header.at("dropout_rate").get<double>();

    AttentionNetwork net(cfg);
    std::size_t lineno = 2;
    while (lineno < lines.size()) {
        if (str::trim(lines[lineno]).empty()) {
            ++lineno;
            continue;
        }
        const auto head_parts = str::split_ws(lines[lineno]);
        if (head_parts.size() < 3 || head_parts[0] != "param") {
            throw ValidationError(path + ":" + std::to_string(lineno + 1) +
                                  ": expected 'param <name> <dims...>'");
        }
        const std::string& name = head_parts[1];
        std::vector<std::size_t> shape;
        for (std::size_t i = 2; i < head_parts.size(); ++i) {
            shape.push_back(static_cast<std::size_t>(std::stoul(head_parts[i])));
        }
        if (lineno + 1 >= lines.size()) {
            throw ValidationError(path + ": truncated checkpoint at " + name);
        }
        const auto value_parts = str::split_ws(lines[lineno + 1]);
        Parameter* p = net.params_.find(name);
        if (!p) throw ValidationError(path + ": unknown parameter '" + name + "'");
        if (Tensor::element_count(shape) != value_parts.size() ||
            shape != p->value.shape()) {
            throw ValidationError(path + ": shape mismatch for parameter '" + name + "'");
        }
        for (std::size_t i = 0; i < value_parts.size(); ++i) {
            p->value[i] = std::stod(value_parts[i]);
        }
        lineno += 2;
    }
    return net;
}

}  // namespace finsent::model
